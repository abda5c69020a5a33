//! Coherent-state fidelity and the closed-form reference laws for the
//! cloning machines.

use serde::{Deserialize, Serialize};

use crate::circuits::{standard_cloner_fidelity, ClonerParams, Role};
use crate::engine::OutputMoments;
use crate::error::{Error, Result};

/// Outputs whose `|Cov(X, P)|` exceeds this are not quadrature-diagonal.
pub const CROSS_COV_TOL: f64 = 1e-10;

/// Overlap `⟨α_in|ρ|α_in⟩` of a coherent target with a quadrature-diagonal
/// Gaussian output.
pub fn fidelity_general(mean_in: (f64, f64), mean_out: (f64, f64), var_x: f64, var_p: f64) -> Result<f64> {
    check_variance(var_x)?;
    check_variance(var_p)?;
    let dx = mean_out.0 - mean_in.0;
    let dp = mean_out.1 - mean_in.1;
    let (sx, sp) = (1.0 + var_x, 1.0 + var_p);
    Ok(2.0 / (sx * sp).sqrt() * (-dx * dx / (2.0 * sx) - dp * dp / (2.0 * sp)).exp())
}

/// Zero-offset case of [`fidelity_general`].
pub fn fidelity_unity_gain(var_x: f64, var_p: f64) -> Result<f64> {
    fidelity_general((0.0, 0.0), (0.0, 0.0), var_x, var_p)
}

fn check_variance(v: f64) -> Result<()> {
    if !(v > 0.0) {
        return Err(Error::NonPositiveVariance(v));
    }
    Ok(())
}

fn check_counts(n: usize, m: usize) -> Result<(f64, f64)> {
    if n == 0 || m < n {
        return Err(Error::InvalidParams(format!("need 1 <= N <= M (N = {n}, M = {m})")));
    }
    Ok((n as f64, m as f64))
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Efficiency(eta));
    }
    Ok(())
}

fn check_r(r: f64) -> Result<()> {
    if !(r >= 0.0) {
        return Err(Error::NegativeSqueezing(r));
    }
    Ok(())
}

/// Clone variance `1 + (M−N)²/(2ηM²N)`, same for both quadratures.
pub fn ref_clone_variance(n: usize, m: usize, eta: f64) -> Result<f64> {
    let (n, m) = check_counts(n, m)?;
    check_eta(eta)?;
    Ok(1.0 + (m - n).powi(2) / (2.0 * eta * m * m * n))
}

/// Clone fidelity `4ηM²N/(4ηM²N + (M−N)²)`.
pub fn ref_clone_fidelity(n: usize, m: usize, eta: f64) -> Result<f64> {
    let (n, m) = check_counts(n, m)?;
    check_eta(eta)?;
    let k = 4.0 * eta * m * m * n;
    Ok(k / (k + (m - n).powi(2)))
}

/// Anticlone variance `1 + (M−N)²/(2M²N) + 2e^{−2r}/M` at unit efficiency.
pub fn ref_anticlone_variance(n: usize, m: usize, r: f64) -> Result<f64> {
    check_r(r)?;
    let (_, mf) = check_counts(n, m)?;
    Ok(ref_clone_variance(n, m, 1.0)? + 2.0 * (-2.0 * r).exp() / mf)
}

/// Anticlone fidelity `4M²N/(4M²N + (M−N)² + 4MNe^{−2r})`.
pub fn ref_anticlone_fidelity(n: usize, m: usize, r: f64) -> Result<f64> {
    check_r(r)?;
    let (n, m) = check_counts(n, m)?;
    let k = 4.0 * m * m * n;
    Ok(k / (k + (m - n).powi(2) + 4.0 * m * n * (-2.0 * r).exp()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub f_pci: f64,
    pub f_std: f64,
    pub advantage: bool,
}

/// Conjugate-input cloner (`N+N → M`) versus the standard `2N → M` cloner.
pub fn compare_pci_vs_standard(n: usize, m: usize) -> Result<Comparison> {
    if m < 2 * n {
        return Err(Error::InvalidParams(format!(
            "comparison needs M >= 2N (N = {n}, M = {m})"
        )));
    }
    let f_pci = ref_clone_fidelity(n, m, 1.0)?;
    let f_std = standard_cloner_fidelity(2 * n, m)?;
    Ok(Comparison {
        f_pci,
        f_std,
        advantage: f_pci > f_std,
    })
}

/// Closed-form variance and fidelity for an output of the given role.
pub fn reference_for(params: &ClonerParams, role: Role) -> Result<(f64, f64)> {
    match role {
        Role::Clone => Ok((
            ref_clone_variance(params.n, params.m, params.eta)?,
            ref_clone_fidelity(params.n, params.m, params.eta)?,
        )),
        Role::Anticlone => {
            let r = params
                .epr_r
                .ok_or_else(|| Error::InvalidParams("anticlones need an EPR squeezing parameter".into()))?;
            let v = ref_anticlone_variance(params.n, params.m, r)? + anticlone_loss_excess(params.n, params.m, params.eta)?;
            Ok((v, fidelity_unity_gain(v, v)?))
        }
    }
}

/// Extra anticlone variance from detection loss when the EPR-arm gain is
/// raised by `1/√η` to keep unity gain: `(1−η)(M+N)²/(2ηM²N)`.
pub fn anticlone_loss_excess(n: usize, m: usize, eta: f64) -> Result<f64> {
    let (n, m) = check_counts(n, m)?;
    check_eta(eta)?;
    Ok((1.0 - eta) * (m + n).powi(2) / (2.0 * eta * m * m * n))
}

/// Coherent state an output of the given role should reproduce.
pub fn target_mean(alpha: (f64, f64), role: Role) -> (f64, f64) {
    match role {
        Role::Clone => alpha,
        Role::Anticlone => (alpha.0, -alpha.1),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceBlock {
    pub variance: f64,
    pub fidelity: f64,
    pub dev_var_x: f64,
    pub dev_var_p: f64,
    pub dev_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputReport {
    pub role: Role,
    /// 1-based position among outputs of the same role.
    pub index: usize,
    pub mean: (f64, f64),
    pub var_x: f64,
    pub var_p: f64,
    pub fidelity: f64,
    pub reference: ReferenceBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloneReport {
    pub params: ClonerParams,
    pub outputs: Vec<OutputReport>,
}

impl CloneReport {
    /// Scores engine moments against the input and the closed forms.
    pub fn from_moments(params: &ClonerParams, moments: &[OutputMoments]) -> Result<Self> {
        let mut counters = [0usize; 2];
        let outputs = moments
            .iter()
            .map(|om| {
                let m = om.moments;
                if m.cov_xp.abs() > CROSS_COV_TOL {
                    return Err(Error::NotQuadratureDiagonal(m.cov_xp));
                }
                let slot = match om.role {
                    Role::Clone => 0,
                    Role::Anticlone => 1,
                };
                counters[slot] += 1;
                let fidelity = fidelity_general(target_mean(params.alpha, om.role), (m.mean_x, m.mean_p), m.var_x, m.var_p)?;
                let (variance, ref_f) = reference_for(params, om.role)?;
                Ok(OutputReport {
                    role: om.role,
                    index: counters[slot],
                    mean: (m.mean_x, m.mean_p),
                    var_x: m.var_x,
                    var_p: m.var_p,
                    fidelity,
                    reference: ReferenceBlock {
                        variance,
                        fidelity: ref_f,
                        dev_var_x: (m.var_x - variance).abs(),
                        dev_var_p: (m.var_p - variance).abs(),
                        dev_fidelity: (fidelity - ref_f).abs(),
                    },
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { params: *params, outputs })
    }

    pub fn max_deviation(&self) -> f64 {
        self.outputs.iter().fold(0.0_f64, |acc, o| {
            acc.max(o.reference.dev_var_x).max(o.reference.dev_var_p).max(o.reference.dev_fidelity)
        })
    }
}
