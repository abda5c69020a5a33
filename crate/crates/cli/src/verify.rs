//! `verify`: the built-in acceptance sweep.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use cvclone::circuits::{build_cloner, standard_cloner_fidelity, ClonerCircuit, ClonerParams, Element, Role};
use cvclone::cloning::{compare_pci_vs_standard, fidelity_general, fidelity_unity_gain, ref_anticlone_fidelity, ref_clone_fidelity, ref_clone_variance};
use cvclone::engine::{distribution_matrix, heisenberg_prefix, run_heisenberg, run_phase_space, run_phase_space_state, OutputMoments};
use cvclone::gaussian::{Quadrature, SymplecticMap};
use cvclone::heisenberg::{evaluate_moments, ModeExpansion, ModeId, QuadratureExpansion};
use cvclone::montecarlo::{run_monte_carlo, McConfig, McOutput};

use crate::error::CliError;
use crate::scenario::DEFAULT_SHOTS;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub mc_shots: usize,
    /// Tolerance for the analytic formula checks.
    pub tol: f64,
    /// Added to every simulated variance before it is compared, to show the
    /// checks respond.
    pub perturb_variance: f64,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            mc_shots: DEFAULT_SHOTS,
            tol: 1e-10,
            perturb_variance: 0.0,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

struct Probe {
    passed: bool,
    detail: Option<String>,
}

impl Probe {
    fn new() -> Self {
        Self { passed: true, detail: None }
    }

    fn require(&mut self, ok: bool, why: impl FnOnce() -> String) {
        if !ok && self.passed {
            self.detail = Some(why());
        }
        self.passed &= ok;
    }

    fn finish(self, name: &'static str, summary: String) -> CheckLine {
        CheckLine {
            name,
            passed: self.passed,
            detail: self.detail.unwrap_or(summary),
        }
    }
}

fn machine(p: ClonerParams) -> Result<ClonerCircuit, CliError> {
    Ok(build_cloner(&p)?)
}

fn perturbed(mut out: Vec<OutputMoments>, opts: &VerifyOptions) -> Vec<OutputMoments> {
    for o in &mut out {
        o.moments.var_x += opts.perturb_variance;
        o.moments.var_p += opts.perturb_variance;
    }
    out
}

fn engines(m: &ClonerCircuit, opts: &VerifyOptions) -> Result<[Vec<OutputMoments>; 2], CliError> {
    Ok([
        perturbed(run_heisenberg(&m.circuit)?, opts),
        perturbed(run_phase_space(&m.circuit)?, opts),
    ])
}

fn fidelity(o: &OutputMoments, alpha: (f64, f64)) -> Result<f64, CliError> {
    let target = cvclone::cloning::target_mean(alpha, o.role);
    Ok(fidelity_general(target, (o.moments.mean_x, o.moments.mean_p), o.moments.var_x, o.moments.var_p)?)
}

fn mc_z(o: &McOutput, exact: &OutputMoments) -> f64 {
    [
        (o.mean.0 - exact.moments.mean_x) / o.se_mean.0,
        (o.mean.1 - exact.moments.mean_p) / o.se_mean.1,
        (o.var_x - exact.moments.var_x) / o.se_var_x,
        (o.var_p - exact.moments.var_p) / o.se_var_p,
    ]
    .iter()
    .fold(0.0_f64, |acc, z| acc.max(z.abs()))
}

fn sweep() -> Vec<ClonerParams> {
    let mut all = Vec::new();
    for n in 1..=4 {
        for m in n..=16 {
            for eta in [1.0, 0.8, 0.5] {
                all.push(ClonerParams::new(n, m).with_eta(eta).with_alpha(0.4, -1.2));
            }
        }
    }
    for m in 2..=8 {
        for r in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
            for eta in [1.0, 0.7] {
                all.push(ClonerParams::new(1, m).with_epr(r).with_eta(eta).with_alpha(0.9, 0.6));
            }
        }
    }
    all
}

fn clone_law(opts: &VerifyOptions) -> Result<CheckLine, CliError> {
    let mut p = Probe::new();
    let alpha = (1.5, -0.5);
    for m in 2..=10 {
        let v = ref_clone_variance(1, m, 1.0)?;
        let f = ref_clone_fidelity(1, m, 1.0)?;
        let cm = machine(ClonerParams::new(1, m).with_alpha(alpha.0, alpha.1))?;
        let [h, s] = engines(&cm, opts)?;
        for o in h.iter().chain(&s) {
            let dv = (o.moments.var_x - v).abs().max((o.moments.var_p - v).abs());
            let df = (fidelity(o, alpha)? - f).abs();
            p.require(dv <= opts.tol && df <= opts.tol, || format!("M={m}: dV={dv:.2e} dF={df:.2e}"));
        }
        let est = run_monte_carlo(&cm.circuit, alpha, &McConfig::new(opts.mc_shots, opts.seed + m as u64))?;
        let z = mc_z(&est.outputs[0], &h[0]);
        p.require(z <= 3.0, || format!("M={m}: Monte Carlo off by {z:.2}σ"));
    }
    Ok(p.finish("clone variance and fidelity, N=1, M=2..10", format!("tol {:.0e}, Monte Carlo {} shots", opts.tol, opts.mc_shots)))
}

fn multi_copy_law(opts: &VerifyOptions) -> Result<CheckLine, CliError> {
    let mut p = Probe::new();
    for n in 1..=4 {
        for m in n..=16 {
            let f = ref_clone_fidelity(n, m, 1.0)?;
            for res in engines(&machine(ClonerParams::new(n, m))?, opts)? {
                for o in &res {
                    let df = (fidelity(o, (0.0, 0.0))? - f).abs();
                    p.require(df <= opts.tol, || format!("N={n} M={m}: dF={df:.2e}"));
                }
            }
        }
    }
    Ok(p.finish("clone fidelity, N=1..4, M=N..16", "58 machines".into()))
}

fn loss_law(opts: &VerifyOptions) -> Result<CheckLine, CliError> {
    let mut p = Probe::new();
    for eta in [0.5, 0.8] {
        for m in 2..=8 {
            let v = ref_clone_variance(1, m, eta)?;
            let f = ref_clone_fidelity(1, m, eta)?;
            for res in engines(&machine(ClonerParams::new(1, m).with_eta(eta))?, opts)? {
                for o in &res {
                    let dv = (o.moments.var_x - v).abs().max((o.moments.var_p - v).abs());
                    let df = (fidelity(o, (0.0, 0.0))? - f).abs();
                    p.require(dv <= opts.tol && df <= opts.tol, || format!("eta={eta} M={m}: dV={dv:.2e}"));
                }
            }
        }
    }
    Ok(p.finish("detector-loss law, eta 0.5 and 0.8", "M=2..8".into()))
}

fn vacuum_cancellation() -> Result<CheckLine, CliError> {
    let mut p = Probe::new();
    let mut worst: f64 = 0.0;
    for params in sweep() {
        let cm = machine(params)?;
        let l = &cm.layout;
        let run = heisenberg_prefix(&cm.circuit, l.displaced_after, None)?;
        let d = run.mode(l.displaced)?;
        let c = d.x.coefficient(l.variable_port, Quadrature::X).abs().max(d.p.coefficient(l.variable_port, Quadrature::P).abs());
        worst = worst.max(c);
        p.require(c < 1e-14, || format!("{params:?}: {c:.2e}"));
    }
    Ok(p.finish("vacuum port cancels in the displaced field", format!("max {worst:.1e}")))
}

fn large_m_limits() -> Result<CheckLine, CliError> {
    let mut p = Probe::new();
    let m = 100_000;
    for n in 1..=4 {
        let cm = machine(ClonerParams::new(n, m))?;
        let first = cm.circuit.clones[0];
        let wanted: BTreeSet<ModeId> = [first].into_iter().collect();
        let run = heisenberg_prefix(&cm.circuit, cm.circuit.elements.len(), Some(&wanted))?;
        let mom = evaluate_moments(run.mode(first)?, &cm.circuit.catalog)?;
        let f = fidelity_unity_gain(mom.var_x, mom.var_p)?;
        let nf = n as f64;
        p.require((f - 4.0 * nf / (4.0 * nf + 1.0)).abs() < 1e-4, || format!("N={n}: F={f:.6}"));
        let s = standard_cloner_fidelity(2 * n, m)?;
        p.require((s - 2.0 * nf / (2.0 * nf + 1.0)).abs() < 1e-4, || format!("N={n}: F_std={s:.6}"));
    }
    Ok(p.finish("M=1e5 limits 4N/(4N+1) and 2N/(2N+1)", "N=1..4".into()))
}

fn advantage() -> Result<CheckLine, CliError> {
    let mut p = Probe::new();
    let c = compare_pci_vs_standard(1, 2)?;
    p.require(!c.advantage && (c.f_pci - 16.0 / 17.0).abs() < 1e-15 && c.f_std == 1.0, || format!("M=2: {c:?}"));
    for m in 3..=64 {
        let c = compare_pci_vs_standard(1, m)?;
        p.require(c.advantage, || format!("M={m}: {c:?}"));
    }
    Ok(p.finish("advantage over standard cloning from M=3", "M=2..64".into()))
}

fn anticlone_law(opts: &VerifyOptions) -> Result<CheckLine, CliError> {
    let mut p = Probe::new();
    let alpha = (0.7, -1.3);
    for m in 2..=8 {
        let plain = perturbed(run_heisenberg(&machine(ClonerParams::new(1, m).with_alpha(alpha.0, alpha.1))?.circuit)?, opts);
        for r in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let cm = machine(ClonerParams::new(1, m).with_epr(r).with_alpha(alpha.0, alpha.1))?;
            for res in engines(&cm, opts)? {
                for o in res.iter().filter(|o| o.role == Role::Anticlone) {
                    let f = fidelity(o, alpha)?;
                    if r == 8.0 {
                        let gap = (f - ref_clone_fidelity(1, m, 1.0)?).abs();
                        p.require(gap < 1e-6, || format!("M={m} r=8: gap {gap:.2e}"));
                    } else {
                        let df = (f - ref_anticlone_fidelity(1, m, r)?).abs();
                        p.require(df <= opts.tol, || format!("M={m} r={r}: dF={df:.2e}"));
                    }
                }
                for (a, b) in res.iter().filter(|o| o.role == Role::Clone).zip(&plain) {
                    let d = a.moments.max_deviation(&b.moments);
                    p.require(d < 1e-12, || format!("M={m} r={r}: clone moved {d:.2e}"));
                }
            }
        }
    }
    Ok(p.finish("anticlone law, N=1, M=2..8", "r in {0, 0.5, 1, 2, 4, 8}".into()))
}

fn cross_engine(opts: &VerifyOptions) -> Result<CheckLine, CliError> {
    let mut p = Probe::new();
    let mut worst: f64 = 0.0;
    for params in sweep() {
        let [h, s] = engines(&machine(params)?, opts)?;
        for (a, b) in h.iter().zip(&s) {
            let d = a.moments.max_deviation(&b.moments);
            worst = worst.max(d);
            p.require(d <= opts.tol, || format!("{params:?}: {d:.2e}"));
        }
    }
    let mc_cases = [
        ClonerParams::new(1, 2).with_alpha(1.0, 1.0),
        ClonerParams::new(1, 3).with_eta(0.8).with_alpha(-0.5, 2.0),
        ClonerParams::new(2, 5).with_alpha(0.0, -1.0),
        ClonerParams::new(1, 2).with_epr(0.5).with_alpha(1.5, 0.5),
        ClonerParams::new(1, 4).with_epr(1.0).with_eta(0.7).with_alpha(0.3, 0.3),
    ];
    for (k, params) in mc_cases.iter().enumerate() {
        let cm = machine(*params)?;
        let exact = run_heisenberg(&cm.circuit)?;
        let est = run_monte_carlo(&cm.circuit, params.alpha, &McConfig::new(opts.mc_shots, opts.seed + 100 + k as u64))?;
        for role in [Role::Clone, Role::Anticlone] {
            let pair = est.outputs.iter().find(|o| o.role == role).zip(exact.iter().find(|o| o.role == role));
            if let Some((o, e)) = pair {
                let z = mc_z(o, e);
                p.require(z <= 3.0, || format!("{params:?} {role:?}: {z:.2}σ"));
            }
        }
    }
    Ok(p.finish("heisenberg, phase-space and Monte Carlo agree", format!("max analytic gap {worst:.1e}")))
}

fn pairing(a: &QuadratureExpansion, b: &QuadratureExpansion) -> f64 {
    a.terms()
        .map(|(id, q, c)| match q {
            Quadrature::X => c * b.coefficient(id, Quadrature::P),
            Quadrature::P => -c * b.coefficient(id, Quadrature::X),
        })
        .sum()
}

fn structure() -> Result<CheckLine, CliError> {
    let mut p = Probe::new();
    for params in sweep() {
        let cm = machine(params)?;
        for el in &cm.circuit.elements {
            match el {
                Element::BeamSplitter { transmittance, .. } => {
                    let d = SymplecticMap::beam_splitter(*transmittance)?.symplectic_defect();
                    p.require(d < 1e-12, || format!("splitter defect {d:.2e}"));
                }
                Element::Distribute { vacua, .. } => {
                    let u = distribution_matrix(vacua.len() + 1);
                    let k = u.nrows();
                    let d = (&u * u.transpose() - DMatrix::identity(k, k)).amax();
                    p.require(d < 1e-12, || format!("distribution not orthogonal: {d:.2e}"));
                    let s = SymplecticMap::passive(&u).symplectic_defect();
                    p.require(s < 1e-12, || format!("distribution defect {s:.2e}"));
                }
                _ => {}
            }
        }
        let run = heisenberg_prefix(&cm.circuit, cm.circuit.elements.len(), None)?;
        let outs: Vec<&ModeExpansion> = cm.circuit.outputs().iter().map(|(_, m)| run.mode(*m)).collect::<Result<_, _>>()?;
        for (i, a) in outs.iter().enumerate() {
            for (j, b) in outs.iter().enumerate() {
                let delta = if i == j { 1.0 } else { 0.0 };
                let d = (pairing(&a.x, &b.p) - delta).abs().max(pairing(&a.x, &b.x).abs()).max(pairing(&a.p, &b.p).abs());
                p.require(d < 1e-12, || format!("{params:?}: commutator defect {d:.2e}"));
            }
        }
        let ps = run_phase_space_state(&cm.circuit)?;
        p.require(ps.state.satisfies_uncertainty(), || format!("{params:?}: uncertainty violated"));
    }
    Ok(p.finish("orthogonality, commutators, symplectic form, uncertainty", "every sweep circuit".into()))
}

/// Runs every check in order.
pub fn run(opts: &VerifyOptions) -> Result<Vec<CheckLine>, CliError> {
    Ok(vec![
        clone_law(opts)?,
        multi_copy_law(opts)?,
        loss_law(opts)?,
        vacuum_cancellation()?,
        large_m_limits()?,
        advantage()?,
        anticlone_law(opts)?,
        cross_engine(opts)?,
        structure()?,
    ])
}

pub fn render(lines: &[CheckLine]) -> String {
    let mut s = String::new();
    for (k, l) in lines.iter().enumerate() {
        let tag = if l.passed { "PASS" } else { "FAIL" };
        s.push_str(&format!("{:>2}  {tag}  {:<58}  {}\n", k + 1, l.name, l.detail));
    }
    let failed = lines.iter().filter(|l| !l.passed).count();
    s.push_str(&format!("{} checks, {failed} failed\n", lines.len()));
    s
}
