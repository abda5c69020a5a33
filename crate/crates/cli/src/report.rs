//! `simulate`: run a scenario through every engine and score the outputs.

use serde::Serialize;

use cvclone::circuits::{build_cloner, standard_cloner_fidelity, Role};
use cvclone::cloning::{fidelity_general, reference_for, target_mean};
use cvclone::engine::{run_heisenberg_outputs, run_phase_space, OutputMoments};
use cvclone::heisenberg::Moments;
use cvclone::montecarlo::{estimate_fidelity_ci, run_monte_carlo, McOutput};

use crate::error::CliError;
use crate::scenario::{Machine, Scenario};

/// Tolerance for analytic cross-checks.
pub const EXACT_TOL: f64 = 1e-10;

/// Above this many clones only the first and last output of each role are
/// evaluated.
pub const FULL_OUTPUT_LIMIT: usize = 256;

/// Phase-space propagation is skipped for circuits with more input modes.
pub const PHASE_SPACE_MAX_MODES: usize = 600;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MachineInfo {
    pub reflectivity: f64,
    pub gain: f64,
    pub epr_gain: Option<f64>,
    pub input_modes: usize,
    pub elements: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceSummary {
    pub clone_variance: f64,
    pub clone_fidelity: f64,
    pub anticlone_variance: Option<f64>,
    pub anticlone_fidelity: Option<f64>,
    /// Ideal standard cloner fed `2N` copies; needs `M >= 2N`.
    pub standard_fidelity: Option<f64>,
    pub advantage: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coverage {
    pub outputs_total: usize,
    pub outputs_reported: usize,
    pub phase_space: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reference {
    pub variance: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fidelities {
    pub heisenberg: f64,
    pub phase_space: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviations {
    /// Largest gap over means and variances between the analytic engines.
    pub engines: Option<f64>,
    pub var_x: f64,
    pub var_p: f64,
    pub fidelity: f64,
    pub cov_xp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloEntry {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub cov_xp: f64,
    pub se_mean_x: f64,
    pub se_mean_p: f64,
    pub se_var_x: f64,
    pub se_var_p: f64,
    pub fidelity: f64,
    pub fidelity_lo: f64,
    pub fidelity_hi: f64,
    /// Largest `|estimate − analytic| / standard error` over means and
    /// variances.
    pub max_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputEntry {
    pub role: Role,
    pub index: usize,
    pub heisenberg: Moments,
    pub phase_space: Option<Moments>,
    pub reference: Reference,
    pub fidelity: Fidelities,
    pub deviations: Deviations,
    pub monte_carlo: Option<MonteCarloEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub scenario: Scenario,
    pub machine: Option<MachineInfo>,
    pub reference: ReferenceSummary,
    pub coverage: Option<Coverage>,
    pub outputs: Vec<OutputEntry>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per reported output.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "role,index,mean_x,mean_p,var_x,var_p,fidelity,ref_variance,ref_fidelity,engine_gap,mc_var_x,mc_var_p,mc_fidelity\n",
        );
        let opt = |v: Option<f64>| v.map(crate::number).unwrap_or_default();
        for o in &self.outputs {
            let role = match o.role {
                Role::Clone => "clone",
                Role::Anticlone => "anticlone",
            };
            let mc = o.monte_carlo.as_ref();
            s.push_str(&format!(
                "{role},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                o.index,
                crate::number(o.heisenberg.mean_x),
                crate::number(o.heisenberg.mean_p),
                crate::number(o.heisenberg.var_x),
                crate::number(o.heisenberg.var_p),
                crate::number(o.fidelity.heisenberg),
                crate::number(o.reference.variance),
                crate::number(o.reference.fidelity),
                opt(o.deviations.engines),
                opt(mc.map(|m| m.var_x)),
                opt(mc.map(|m| m.var_p)),
                opt(mc.map(|m| m.fidelity)),
            ));
        }
        s
    }
}

fn reference_summary(s: &Scenario) -> Result<ReferenceSummary, CliError> {
    let params = s.params();
    let (clone_variance, clone_fidelity) = reference_for(&params, Role::Clone)?;
    let anticlone = match s.epr_r {
        Some(_) => Some(reference_for(&params, Role::Anticlone)?),
        None => None,
    };
    let standard_fidelity = if s.m >= 2 * s.n {
        Some(standard_cloner_fidelity(2 * s.n, s.m)?)
    } else {
        None
    };
    Ok(ReferenceSummary {
        clone_variance,
        clone_fidelity,
        anticlone_variance: anticlone.map(|a| a.0),
        anticlone_fidelity: anticlone.map(|a| a.1),
        standard_fidelity,
        advantage: standard_fidelity.map(|f| clone_fidelity > f),
    })
}

/// First and last output of each role.
fn subset(outputs: &[(Role, cvclone::heisenberg::ModeId)]) -> Vec<(Role, cvclone::heisenberg::ModeId)> {
    let mut picked = Vec::new();
    for role in [Role::Clone, Role::Anticlone] {
        let of_role: Vec<_> = outputs.iter().filter(|o| o.0 == role).collect();
        if let Some(first) = of_role.first() {
            picked.push(**first);
        }
        if of_role.len() > 1 {
            picked.push(**of_role.last().unwrap());
        }
    }
    picked
}

fn mc_entry(o: &McOutput, exact: &Moments, target: (f64, f64)) -> Result<MonteCarloEntry, CliError> {
    let (_, lo, hi) = estimate_fidelity_ci(o, target, 3.0)?;
    let z = [
        (o.mean.0 - exact.mean_x) / o.se_mean.0,
        (o.mean.1 - exact.mean_p) / o.se_mean.1,
        (o.var_x - exact.var_x) / o.se_var_x,
        (o.var_p - exact.var_p) / o.se_var_p,
    ]
    .iter()
    .fold(0.0_f64, |acc, z| acc.max(z.abs()));
    Ok(MonteCarloEntry {
        mean_x: o.mean.0,
        mean_p: o.mean.1,
        var_x: o.var_x,
        var_p: o.var_p,
        cov_xp: o.cov_xp,
        se_mean_x: o.se_mean.0,
        se_mean_p: o.se_mean.1,
        se_var_x: o.se_var_x,
        se_var_p: o.se_var_p,
        fidelity: o.fidelity,
        fidelity_lo: lo,
        fidelity_hi: hi,
        max_z: z,
    })
}

/// Evaluates a validated scenario.
pub fn simulate(s: &Scenario) -> Result<Report, CliError> {
    let reference = reference_summary(s)?;
    if s.machine == Machine::ReferenceOnly {
        return Ok(Report {
            scenario: s.clone(),
            machine: None,
            reference,
            coverage: None,
            outputs: Vec::new(),
            checks: Vec::new(),
            passed: true,
        });
    }

    let params = s.params();
    let built = build_cloner(&params)?;
    let circuit = &built.circuit;
    let all = circuit.outputs();
    let chosen = if s.m > FULL_OUTPUT_LIMIT { subset(&all) } else { all.clone() };
    let heisenberg = run_heisenberg_outputs(circuit, &chosen)?;
    let phase_space_on = circuit.catalog.len() <= PHASE_SPACE_MAX_MODES;
    let phase_space: Option<Vec<OutputMoments>> = if phase_space_on {
        let full = run_phase_space(circuit)?;
        Some(
            chosen
                .iter()
                .map(|c| *full.iter().find(|o| o.mode == c.1).expect("output present"))
                .collect(),
        )
    } else {
        None
    };
    let mc = match s.mc_config() {
        Some(cfg) => Some(run_monte_carlo(circuit, params.alpha, &cfg)?),
        None => None,
    };

    let mut outputs = Vec::with_capacity(chosen.len());
    for (k, h) in heisenberg.iter().enumerate() {
        let role = h.role;
        let index = all.iter().filter(|o| o.0 == role).position(|o| o.1 == h.mode).unwrap() + 1;
        let target = target_mean(params.alpha, role);
        let fid = |m: &Moments| fidelity_general(target, (m.mean_x, m.mean_p), m.var_x, m.var_p);
        let (variance, ref_f) = reference_for(&params, role)?;
        let f_h = fid(&h.moments)?;
        let ps = phase_space.as_ref().map(|p| p[k].moments);
        let mc_out = match &mc {
            Some(est) => {
                let o = est.outputs.iter().find(|o| o.mode == h.mode).expect("sampled output");
                Some(mc_entry(o, &h.moments, target)?)
            }
            None => None,
        };
        outputs.push(OutputEntry {
            role,
            index,
            heisenberg: h.moments,
            phase_space: ps,
            reference: Reference { variance, fidelity: ref_f },
            fidelity: Fidelities {
                heisenberg: f_h,
                phase_space: ps.as_ref().map(fid).transpose()?,
            },
            deviations: Deviations {
                engines: ps.map(|p| p.max_deviation(&h.moments)),
                var_x: (h.moments.var_x - variance).abs(),
                var_p: (h.moments.var_p - variance).abs(),
                fidelity: (f_h - ref_f).abs(),
                cov_xp: h.moments.cov_xp.abs(),
            },
            monte_carlo: mc_out,
        });
    }

    let max = |f: &dyn Fn(&OutputEntry) -> f64| outputs.iter().fold(0.0_f64, |acc, o| acc.max(f(o)));
    let mut checks = vec![
        Check::at_most("closed-form variance", max(&|o| o.deviations.var_x.max(o.deviations.var_p)), EXACT_TOL),
        Check::at_most("closed-form fidelity", max(&|o| o.deviations.fidelity), EXACT_TOL),
        Check::at_most("quadrature cross-covariance", max(&|o| o.deviations.cov_xp), EXACT_TOL),
    ];
    if phase_space_on {
        checks.push(Check::at_most(
            "heisenberg vs phase-space",
            max(&|o| o.deviations.engines.unwrap_or(0.0)),
            EXACT_TOL,
        ));
    }
    if mc.is_some() {
        // outputs of one role are exchangeable, so the first of each stands in
        for role in [Role::Clone, Role::Anticlone] {
            if let Some(o) = outputs.iter().find(|o| o.role == role) {
                let name = match role {
                    Role::Clone => "monte carlo, first clone (z)",
                    Role::Anticlone => "monte carlo, first anticlone (z)",
                };
                checks.push(Check::at_most(name, o.monte_carlo.as_ref().unwrap().max_z, 3.0));
            }
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(Report {
        scenario: s.clone(),
        machine: Some(MachineInfo {
            reflectivity: built.layout.reflectivity,
            gain: built.layout.gain,
            epr_gain: built.layout.epr_gain,
            input_modes: circuit.catalog.len(),
            elements: circuit.elements.len(),
        }),
        reference,
        coverage: Some(Coverage {
            outputs_total: all.len(),
            outputs_reported: outputs.len(),
            phase_space: phase_space_on,
        }),
        outputs,
        checks,
        passed,
    })
}
