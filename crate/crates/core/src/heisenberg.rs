//! Heisenberg-picture bookkeeping: every optical mode's quadratures as exact
//! linear combinations of the circuit's input quadratures.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, Quadrature};

/// Index of an input in an [`InputCatalog`]. Each input also names the
/// spatial mode slot it occupies inside a circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum InputKind {
    Coherent,
    /// Prepared as `|α*⟩`; `alpha` in the entry still holds the reference `α`.
    ConjugateCoherent,
    Vacuum,
    EprArm { partner: ModeId, r: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputEntry {
    pub label: String,
    pub kind: InputKind,
    pub alpha: (f64, f64),
}

impl InputEntry {
    pub fn mean(&self) -> (f64, f64) {
        match self.kind {
            InputKind::Coherent => self.alpha,
            InputKind::ConjugateCoherent => (self.alpha.0, -self.alpha.1),
            InputKind::Vacuum | InputKind::EprArm { .. } => (0.0, 0.0),
        }
    }

    fn self_variance(&self) -> f64 {
        match self.kind {
            InputKind::EprArm { r, .. } => (2.0 * r).cosh(),
            _ => 1.0,
        }
    }
}

/// Every independent input of a circuit with its preparation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InputCatalog {
    entries: Vec<InputEntry>,
}

impl InputCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, label: impl Into<String>, kind: InputKind, alpha: (f64, f64)) -> ModeId {
        self.entries.push(InputEntry {
            label: label.into(),
            kind,
            alpha,
        });
        ModeId(self.entries.len() - 1)
    }

    pub fn add_coherent(&mut self, label: impl Into<String>, x: f64, p: f64) -> ModeId {
        self.push(label, InputKind::Coherent, (x, p))
    }

    pub fn add_conjugate(&mut self, label: impl Into<String>, x: f64, p: f64) -> ModeId {
        self.push(label, InputKind::ConjugateCoherent, (x, p))
    }

    pub fn add_vacuum(&mut self, label: impl Into<String>) -> ModeId {
        self.push(label, InputKind::Vacuum, (0.0, 0.0))
    }

    pub fn add_epr_pair(
        &mut self,
        first: impl Into<String>,
        second: impl Into<String>,
        r: f64,
    ) -> Result<(ModeId, ModeId)> {
        if !(r >= 0.0) {
            return Err(Error::NegativeSqueezing(r));
        }
        let a = ModeId(self.entries.len());
        let b = ModeId(a.0 + 1);
        self.push(first, InputKind::EprArm { partner: b, r }, (0.0, 0.0));
        self.push(second, InputKind::EprArm { partner: a, r }, (0.0, 0.0));
        Ok((a, b))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[InputEntry] {
        &self.entries
    }

    pub fn get(&self, id: ModeId) -> Result<&InputEntry> {
        self.entries
            .get(id.0)
            .ok_or_else(|| Error::UnknownLabel(format!("#{}", id.0)))
    }

    pub fn find(&self, label: &str) -> Option<ModeId> {
        self.entries.iter().position(|e| e.label == label).map(ModeId)
    }

    /// Checks that every EPR arm has exactly one partner pointing back with
    /// the same squeezing.
    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.entries.iter().enumerate() {
            if let InputKind::EprArm { partner, r } = e.kind {
                let back = self.entries.get(partner.0).map(|p| p.kind);
                match back {
                    Some(InputKind::EprArm { partner: q, r: r2 }) if q.0 == i && r2 == r && partner.0 != i => {}
                    _ => {
                        return Err(Error::InvalidCircuit(format!(
                            "EPR arm {} has no matching partner",
                            e.label
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    /// Covariance between two input quadratures in shot-noise units.
    pub fn covariance(&self, a: (ModeId, Quadrature), b: (ModeId, Quadrature)) -> Result<f64> {
        let ea = self.get(a.0)?;
        self.get(b.0)?;
        if a.1 != b.1 {
            return Ok(0.0);
        }
        if a.0 == b.0 {
            return Ok(ea.self_variance());
        }
        match ea.kind {
            InputKind::EprArm { partner, r } if partner == b.0 => Ok(match a.1 {
                Quadrature::X => -(2.0 * r).sinh(),
                Quadrature::P => (2.0 * r).sinh(),
            }),
            _ => Ok(0.0),
        }
    }

    /// Matrix `F` with `F Fᵀ` equal to the input covariance, columns being
    /// independent vacuum-variance noise sources.
    pub fn noise_factor(&self) -> Result<DMatrix<f64>> {
        self.validate()?;
        let n = 2 * self.entries.len();
        let mut f = DMatrix::zeros(n, n);
        for (k, e) in self.entries.iter().enumerate() {
            match e.kind {
                InputKind::EprArm { partner, r } => {
                    let sign = if k < partner.0 { 1.0 } else { -1.0 };
                    let first = k.min(partner.0);
                    let second = k.max(partner.0);
                    for q in [Quadrature::X, Quadrature::P] {
                        let (w_sum, w_diff) = epr_weights(r, q);
                        f[(2 * k + q.offset(), 2 * first + q.offset())] = w_sum;
                        f[(2 * k + q.offset(), 2 * second + q.offset())] = sign * w_diff;
                    }
                }
                _ => {
                    f[(2 * k, 2 * k)] = 1.0;
                    f[(2 * k + 1, 2 * k + 1)] = 1.0;
                }
            }
        }
        Ok(f)
    }

    /// Input means in quadrature order.
    pub fn mean_vector(&self) -> DVector<f64> {
        DVector::from_iterator(2 * self.entries.len(), self.entries.iter().flat_map(|e| {
            let (x, p) = e.mean();
            [x, p]
        }))
    }

    /// Product Gaussian state of all inputs, mode `k` holding input `k`.
    pub fn to_gaussian_state(&self) -> Result<GaussianState> {
        let mut parts = Vec::with_capacity(self.entries.len());
        let mut k = 0;
        while k < self.entries.len() {
            let e = &self.entries[k];
            match e.kind {
                InputKind::EprArm { partner, r } if partner.0 == k + 1 => {
                    parts.push(GaussianState::epr(r)?);
                    k += 2;
                }
                InputKind::EprArm { .. } => {
                    return Err(Error::InvalidCircuit(format!(
                        "EPR arm {} must sit directly before its partner",
                        e.label
                    )))
                }
                _ => {
                    let (x, p) = e.mean();
                    parts.push(GaussianState::coherent(x, p));
                    k += 1;
                }
            }
        }
        let mut iter = parts.into_iter();
        let first = iter.next().ok_or(Error::EmptyRegister)?;
        Ok(iter.fold(first, |acc, s| acc.tensor(&s)))
    }
}

/// One quadrature as `offset + Σ coefficient · (input quadrature)`.
/// Absent keys are exactly zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QuadratureExpansion {
    coefficients: BTreeMap<(ModeId, Quadrature), f64>,
    pub offset: f64,
}

impl QuadratureExpansion {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn input(id: ModeId, quadrature: Quadrature) -> Self {
        let mut e = Self::default();
        e.coefficients.insert((id, quadrature), 1.0);
        e
    }

    pub fn constant(offset: f64) -> Self {
        Self {
            coefficients: BTreeMap::new(),
            offset,
        }
    }

    pub fn coefficient(&self, id: ModeId, quadrature: Quadrature) -> f64 {
        self.coefficients.get(&(id, quadrature)).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (ModeId, Quadrature, f64)> + '_ {
        self.coefficients.iter().map(|(&(id, q), &c)| (id, q, c))
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn scaled(&self, k: f64) -> Self {
        let mut out = Self::constant(self.offset * k);
        for (&key, &c) in &self.coefficients {
            insert_nonzero(&mut out.coefficients, key, c * k);
        }
        out
    }

    /// `self + k · other`. Coefficients that cancel to exactly zero are dropped.
    pub fn add_scaled(&self, other: &Self, k: f64) -> Self {
        let mut out = self.clone();
        out.accumulate(other, k);
        out
    }

    /// In-place `self += k · other`.
    pub fn accumulate(&mut self, other: &Self, k: f64) {
        self.offset += k * other.offset;
        for (&key, &c) in &other.coefficients {
            let sum = self.coefficient(key.0, key.1) + k * c;
            self.coefficients.remove(&key);
            insert_nonzero(&mut self.coefficients, key, sum);
        }
    }

    fn linear_combination(parts: &[(&Self, f64)]) -> Self {
        let mut out = Self::zero();
        for (e, k) in parts {
            out.accumulate(e, *k);
        }
        out
    }
}

fn insert_nonzero(map: &mut BTreeMap<(ModeId, Quadrature), f64>, key: (ModeId, Quadrature), value: f64) {
    if value != 0.0 {
        map.insert(key, value);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModeExpansion {
    pub x: QuadratureExpansion,
    pub p: QuadratureExpansion,
}

impl ModeExpansion {
    /// The mode that carries input `id` untouched.
    pub fn input(id: ModeId) -> Self {
        Self {
            x: QuadratureExpansion::input(id, Quadrature::X),
            p: QuadratureExpansion::input(id, Quadrature::P),
        }
    }

    pub fn quadrature(&self, q: Quadrature) -> &QuadratureExpansion {
        match q {
            Quadrature::X => &self.x,
            Quadrature::P => &self.p,
        }
    }

    fn combine(parts: &[(&Self, f64)]) -> Self {
        let xs: Vec<_> = parts.iter().map(|(m, k)| (&m.x, *k)).collect();
        let ps: Vec<_> = parts.iter().map(|(m, k)| (&m.p, *k)).collect();
        Self {
            x: QuadratureExpansion::linear_combination(&xs),
            p: QuadratureExpansion::linear_combination(&ps),
        }
    }

    /// `[X, P] / 2i` evaluated from the expansion against canonical input
    /// commutators. Equals one for every physical mode.
    pub fn commutator(&self) -> f64 {
        let mut total = 0.0;
        for (id, q, a) in self.x.terms() {
            if q == Quadrature::X {
                total += a * self.p.coefficient(id, Quadrature::P);
            } else {
                total -= a * self.p.coefficient(id, Quadrature::X);
            }
        }
        total
    }
}

/// Real beam splitter: `(√T a + √(1−T) b, −√(1−T) a + √T b)`.
pub fn beam_split(a: &ModeExpansion, b: &ModeExpansion, transmittance: f64) -> Result<(ModeExpansion, ModeExpansion)> {
    if !(0.0..=1.0).contains(&transmittance) {
        return Err(Error::Transmittance(transmittance));
    }
    let t = transmittance.sqrt();
    let r = (1.0 - transmittance).sqrt();
    Ok((
        ModeExpansion::combine(&[(a, t), (b, r)]),
        ModeExpansion::combine(&[(a, -r), (b, t)]),
    ))
}

/// Photocurrent of a homodyne detector with efficiency `eta`, whose loss
/// admits vacuum from the `detector` input.
pub fn homodyne_expansion(
    mode: &ModeExpansion,
    quadrature: Quadrature,
    eta: f64,
    detector: ModeId,
) -> Result<QuadratureExpansion> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Efficiency(eta));
    }
    let signal = mode.quadrature(quadrature).scaled(eta.sqrt());
    Ok(signal.add_scaled(&QuadratureExpansion::input(detector, quadrature), (1.0 - eta).sqrt()))
}

/// Displacement `Â → Â + g (X̂m + iP̂m)/2`, i.e. `X += g·Xm`, `P += g·Pm`.
pub fn feed_forward(target: &ModeExpansion, xm: &QuadratureExpansion, pm: &QuadratureExpansion, g: f64) -> ModeExpansion {
    feed_forward_signed(target, xm, pm, g, g)
}

/// Feed-forward with independent gains on the two quadratures. A conjugate
/// displacement `Â → Â + g (X̂m − iP̂m)/2` uses `gain_p = −g`.
pub fn feed_forward_signed(
    target: &ModeExpansion,
    xm: &QuadratureExpansion,
    pm: &QuadratureExpansion,
    gain_x: f64,
    gain_p: f64,
) -> ModeExpansion {
    ModeExpansion {
        x: target.x.add_scaled(xm, gain_x),
        p: target.p.add_scaled(pm, gain_p),
    }
}

/// Sparse row `k` (1-based, `1 ≤ k ≤ M`) of the `M`-output distribution
/// cascade, as `(column, coefficient)` where column 0 is the source beam and
/// column `j` the j-th fresh vacuum.
///
/// Row `k < M` is `1/√M` on the source, `−1/√((M−j+1)(M−j))` on `v_j` for
/// `j < k`, and `+√((M−k)/(M−k+1))` on `v_k`; row `M` drops the last term.
pub fn distribution_row(outputs: usize, k: usize) -> Vec<(usize, f64)> {
    assert!(k >= 1 && k <= outputs, "row {k} outside 1..={outputs}");
    let m = outputs as f64;
    let mut row = Vec::with_capacity(k + 1);
    row.push((0, (1.0 / m).sqrt()));
    for j in 1..k.min(outputs) {
        let jf = j as f64;
        row.push((j, -1.0 / ((m - jf + 1.0) * (m - jf)).sqrt()));
    }
    if k < outputs {
        let kf = k as f64;
        row.push((k, ((m - kf) / (m - kf + 1.0)).sqrt()));
    }
    row
}

/// Splits `mode` into `outputs` equal-weight copies using `outputs − 1`
/// fresh vacua.
pub fn distribute(mode: &ModeExpansion, outputs: usize, fresh_vacua: &[ModeId]) -> Result<Vec<ModeExpansion>> {
    if outputs == 0 {
        return Err(Error::InvalidParams("distribution needs at least one output".into()));
    }
    if fresh_vacua.len() < outputs - 1 {
        return Err(Error::InsufficientVacua {
            outputs,
            needed: outputs - 1,
            given: fresh_vacua.len(),
        });
    }
    let vacua: Vec<ModeExpansion> = fresh_vacua[..outputs - 1].iter().map(|&v| ModeExpansion::input(v)).collect();
    Ok((1..=outputs)
        .map(|k| {
            let parts: Vec<(&ModeExpansion, f64)> = distribution_row(outputs, k)
                .into_iter()
                .map(|(col, c)| (if col == 0 { mode } else { &vacua[col - 1] }, c))
                .collect();
            ModeExpansion::combine(&parts)
        })
        .collect())
}

/// First and second moments of one output mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub cov_xp: f64,
}

impl Moments {
    /// Largest absolute difference over the four principal moments.
    pub fn max_deviation(&self, other: &Moments) -> f64 {
        [
            self.mean_x - other.mean_x,
            self.mean_p - other.mean_p,
            self.var_x - other.var_x,
            self.var_p - other.var_p,
        ]
        .iter()
        .fold(0.0_f64, |acc, d| acc.max(d.abs()))
    }
}

fn expansion_mean(e: &QuadratureExpansion, catalog: &InputCatalog) -> Result<f64> {
    let mut total = e.offset;
    for (id, q, c) in e.terms() {
        let (x, p) = catalog.get(id)?.mean();
        total += c * match q {
            Quadrature::X => x,
            Quadrature::P => p,
        };
    }
    Ok(total)
}

/// Weights of `e` on independent unit-variance noise sources. An EPR pair
/// enters through its two squeezed modes, so variances become sums of
/// squares instead of differences of `cosh 2r`-sized terms.
fn noise_loadings(e: &QuadratureExpansion, catalog: &InputCatalog) -> Result<BTreeMap<(ModeId, Quadrature), f64>> {
    let mut out = BTreeMap::new();
    for (id, q, c) in e.terms() {
        match catalog.get(id)?.kind {
            InputKind::EprArm { partner, r } => {
                let (first, second) = if id < partner { (id, partner) } else { (partner, id) };
                if out.contains_key(&(first, q)) {
                    continue;
                }
                let (sum, diff) = (e.coefficient(first, q) + e.coefficient(second, q), e.coefficient(first, q) - e.coefficient(second, q));
                let (w_sum, w_diff) = epr_weights(r, q);
                out.insert((first, q), w_sum * sum);
                out.insert((second, q), w_diff * diff);
            }
            _ => *out.entry((id, q)).or_insert(0.0) += c,
        }
    }
    Ok(out)
}

/// Squeezed-mode amplitudes of an EPR pair: `X₁,₂ = (e^{−r} ξ ± e^{r} ζ)/√2`
/// and `P₁,₂ = (e^{r} η ± e^{−r} θ)/√2`. Returns the weights of the sum and
/// difference of the two arms' coefficients.
fn epr_weights(r: f64, q: Quadrature) -> (f64, f64) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match q {
        Quadrature::X => (h * (-r).exp(), h * r.exp()),
        Quadrature::P => (h * r.exp(), h * (-r).exp()),
    }
}

fn expansion_covariance(a: &QuadratureExpansion, b: &QuadratureExpansion, catalog: &InputCatalog) -> Result<f64> {
    let la = noise_loadings(a, catalog)?;
    let lb = noise_loadings(b, catalog)?;
    Ok(la.iter().filter_map(|(k, wa)| lb.get(k).map(|wb| wa * wb)).sum())
}

pub fn evaluate_moments(mode: &ModeExpansion, catalog: &InputCatalog) -> Result<Moments> {
    Ok(Moments {
        mean_x: expansion_mean(&mode.x, catalog)?,
        mean_p: expansion_mean(&mode.p, catalog)?,
        var_x: expansion_covariance(&mode.x, &mode.x, catalog)?,
        var_p: expansion_covariance(&mode.p, &mode.p, catalog)?,
        cov_xp: expansion_covariance(&mode.x, &mode.p, catalog)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog3() -> (InputCatalog, ModeId, ModeId, ModeId) {
        let mut c = InputCatalog::new();
        let a = c.add_coherent("a", 1.0, 2.0);
        let b = c.add_conjugate("b", 1.0, 2.0);
        let v = c.add_vacuum("v");
        (c, a, b, v)
    }

    #[test]
    fn noise_factor_reproduces_covariance() {
        let mut c = InputCatalog::new();
        c.add_coherent("a", 1.0, 2.0);
        c.add_epr_pair("e1", "e2", 1.3).unwrap();
        c.add_vacuum("v");
        let f = c.noise_factor().unwrap();
        let cov = c.to_gaussian_state().unwrap().cov().clone();
        assert!((&f * f.transpose() - cov).amax() < 1e-12);
        assert_eq!(c.mean_vector().as_slice(), &[1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn beam_split_extremes() {
        let (_, a, _, v) = catalog3();
        let (ea, ev) = (ModeExpansion::input(a), ModeExpansion::input(v));
        let (o1, o2) = beam_split(&ea, &ev, 1.0).unwrap();
        assert_eq!((o1, o2), (ea.clone(), ev.clone()));
        let (o1, o2) = beam_split(&ea, &ev, 0.5).unwrap();
        let h = 0.5_f64.sqrt();
        assert_eq!(o1.x.coefficient(a, Quadrature::X), h);
        assert_eq!(o1.x.coefficient(v, Quadrature::X), h);
        assert_eq!(o2.p.coefficient(a, Quadrature::P), -h);
        assert!((o1.commutator() - 1.0).abs() < 1e-12);
        assert!((o2.commutator() - 1.0).abs() < 1e-12);
        assert_eq!(beam_split(&ea, &ev, -0.1), Err(Error::Transmittance(-0.1)));
    }

    #[test]
    fn homodyne_with_loss() {
        let (c, a, _, v) = catalog3();
        let lossless = homodyne_expansion(&ModeExpansion::input(a), Quadrature::X, 1.0, v).unwrap();
        assert_eq!(lossless, QuadratureExpansion::input(a, Quadrature::X));
        let lossy = homodyne_expansion(&ModeExpansion::input(a), Quadrature::X, 0.5, v).unwrap();
        assert!((lossy.coefficient(v, Quadrature::X) - 0.5_f64.sqrt()).abs() < 1e-15);
        assert!((expansion_mean(&lossy, &c).unwrap() - 0.5_f64.sqrt()).abs() < 1e-15);

        let classical = ModeExpansion {
            x: QuadratureExpansion::constant(3.0),
            p: QuadratureExpansion::zero(),
        };
        let m = homodyne_expansion(&classical, Quadrature::X, 0.64, v).unwrap();
        assert!((m.offset - 0.8 * 3.0).abs() < 1e-15);
        assert_eq!(homodyne_expansion(&classical, Quadrature::X, 0.0, v), Err(Error::Efficiency(0.0)));
    }

    #[test]
    fn feed_forward_zero_gain_is_identity() {
        let (_, a, b, _) = catalog3();
        let t = ModeExpansion::input(a);
        let m = QuadratureExpansion::input(b, Quadrature::X);
        assert_eq!(feed_forward(&t, &m, &m, 0.0), t);
    }

    #[test]
    fn distribute_small_cases() {
        let (_, a, _, v) = catalog3();
        let src = ModeExpansion::input(a);
        assert_eq!(distribute(&src, 1, &[]).unwrap(), vec![src.clone()]);

        let two = distribute(&src, 2, &[v]).unwrap();
        let h = 0.5_f64.sqrt();
        assert!((two[0].x.coefficient(a, Quadrature::X) - h).abs() < 1e-15);
        assert!((two[0].x.coefficient(v, Quadrature::X) - h).abs() < 1e-15);
        assert!((two[1].x.coefficient(a, Quadrature::X) - h).abs() < 1e-15);
        assert!((two[1].x.coefficient(v, Quadrature::X) + h).abs() < 1e-15);

        assert_eq!(
            distribute(&src, 3, &[v]),
            Err(Error::InsufficientVacua { outputs: 3, needed: 2, given: 1 })
        );
    }

    #[test]
    fn evaluate_vacuum_and_conjugate() {
        let (c, _, b, v) = catalog3();
        let m = evaluate_moments(&ModeExpansion::input(v), &c).unwrap();
        assert_eq!((m.mean_x, m.mean_p, m.var_x, m.var_p), (0.0, 0.0, 1.0, 1.0));
        let m = evaluate_moments(&ModeExpansion::input(b), &c).unwrap();
        assert_eq!((m.mean_x, m.mean_p), (1.0, -2.0));
        let ghost = ModeExpansion::input(ModeId(9));
        assert!(matches!(evaluate_moments(&ghost, &c), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn epr_combinations() {
        let r: f64 = 0.6;
        let mut c = InputCatalog::new();
        let (e1, e2) = c.add_epr_pair("e1", "e2", r).unwrap();
        c.validate().unwrap();
        let sum = ModeExpansion {
            x: QuadratureExpansion::input(e1, Quadrature::X).add_scaled(&QuadratureExpansion::input(e2, Quadrature::X), 1.0),
            p: QuadratureExpansion::input(e1, Quadrature::P).add_scaled(&QuadratureExpansion::input(e2, Quadrature::P), -1.0),
        };
        let m = evaluate_moments(&sum, &c).unwrap();
        assert!((m.var_x - 2.0 * (-2.0 * r).exp()).abs() < 1e-12);
        assert!((m.var_p - 2.0 * (-2.0 * r).exp()).abs() < 1e-12);
        assert!(c.add_epr_pair("f1", "f2", -1.0).is_err());
    }
}
