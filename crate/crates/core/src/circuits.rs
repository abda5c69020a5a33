//! Parameter solvers and circuit builders for the cloning machines.
//!
//! Every machine shares one layout: the `N` signal replicas and the `N`
//! conjugate replicas are each concentrated into a bright mode, the signal
//! beam is tapped by a variable beam splitter, the tapped part interferes
//! with the conjugate beam, both quadratures are read out and fed forward
//! onto the transmitted beam, which is finally split into `M` clones.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::Quadrature;
use crate::heisenberg::{InputCatalog, InputKind, ModeId};

/// Gains within this distance of the `R = 1` pole are refused.
pub const POLE_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClonerParams {
    /// Replica pairs.
    pub n: usize,
    /// Clones.
    pub m: usize,
    /// Homodyne efficiency.
    pub eta: f64,
    /// EPR squeezing; `None` builds the irreversible machine.
    pub epr_r: Option<f64>,
    pub alpha: (f64, f64),
}

impl ClonerParams {
    pub fn new(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            eta: 1.0,
            epr_r: None,
            alpha: (0.0, 0.0),
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_epr(mut self, r: f64) -> Self {
        self.epr_r = Some(r);
        self
    }

    pub fn with_alpha(mut self, x: f64, p: f64) -> Self {
        self.alpha = (x, p);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidParams(format!(
                "replica count and clone count must be positive (N = {}, M = {})",
                self.n, self.m
            )));
        }
        if self.m < self.n {
            return Err(Error::InvalidParams(format!(
                "need at least as many clones as replicas (N = {}, M = {})",
                self.n, self.m
            )));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Efficiency(self.eta));
        }
        if let Some(r) = self.epr_r {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::NegativeSqueezing(r));
            }
        }
        if !self.alpha.0.is_finite() || !self.alpha.1.is_finite() {
            return Err(Error::InvalidParams("input amplitude must be finite".into()));
        }
        Ok(())
    }
}

/// A term of a feed-forward: add `gain · record` to `quadrature` of the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedTerm {
    pub record: usize,
    pub quadrature: Quadrature,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "element")]
pub enum Element {
    /// `a' = √T a + √(1−T) b`, `b' = −√(1−T) a + √T b`.
    BeamSplitter { a: ModeId, b: ModeId, transmittance: f64 },
    /// Reads `quadrature` of `mode` into record `record`. With efficiency
    /// below one the loss admits vacuum from `detector`. The mode is consumed.
    Homodyne {
        mode: ModeId,
        quadrature: Quadrature,
        efficiency: f64,
        detector: ModeId,
        record: usize,
    },
    FeedForward { target: ModeId, terms: Vec<FeedTerm> },
    /// Splits `source` into `vacua.len() + 1` equal-weight outputs; see
    /// [`Element::distribution_outputs`] for where each output lands.
    Distribute { source: ModeId, vacua: Vec<ModeId> },
}

impl Element {
    /// Output slots of a distribution in row order: output `k < M` sits in
    /// the k-th vacuum slot, output `M` in the source slot.
    pub fn distribution_outputs(source: ModeId, vacua: &[ModeId]) -> Vec<ModeId> {
        vacua.iter().copied().chain(std::iter::once(source)).collect()
    }

    /// Transmittances of the beam-splitter chain realizing a distribution
    /// into `outputs` beams: stage `k` keeps `(M−k)/(M−k+1)` on the vacuum
    /// port, tapping `1/(M−k+1)` of the remaining beam.
    pub fn distribution_chain(outputs: usize) -> Vec<f64> {
        (1..outputs)
            .map(|k| (outputs - k) as f64 / (outputs - k + 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Clone,
    Anticlone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub catalog: InputCatalog,
    pub elements: Vec<Element>,
    pub clones: Vec<ModeId>,
    pub anticlones: Vec<ModeId>,
}

impl Circuit {
    pub fn n_records(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, Element::Homodyne { .. }))
            .count()
    }

    /// All designated outputs with their role, clones first.
    pub fn outputs(&self) -> Vec<(Role, ModeId)> {
        self.clones
            .iter()
            .map(|&m| (Role::Clone, m))
            .chain(self.anticlones.iter().map(|&m| (Role::Anticlone, m)))
            .collect()
    }

    /// Checks the structural rules: modes exist, each mode is measured at
    /// most once and never touched afterwards, feed-forward reads only
    /// earlier records, and ancilla vacua are real vacua used once.
    pub fn validate(&self) -> Result<()> {
        self.catalog.validate()?;
        let n = self.catalog.len();
        let bad = |msg: String| Err(Error::InvalidCircuit(msg));
        let mut measured = vec![false; n];
        let mut consumed_ancilla = vec![false; n];
        let mut records = 0usize;
        let live = |m: ModeId, measured: &[bool]| -> Result<()> {
            if m.0 >= n {
                return Err(Error::InvalidCircuit(format!("mode #{} does not exist", m.0)));
            }
            if measured[m.0] {
                return Err(Error::InvalidCircuit(format!("mode #{} used after measurement", m.0)));
            }
            Ok(())
        };
        let take_vacuum = |m: ModeId, consumed: &mut Vec<bool>| -> Result<()> {
            if m.0 >= n || self.catalog.entries()[m.0].kind != InputKind::Vacuum {
                return Err(Error::InvalidCircuit(format!("mode #{} is not a vacuum input", m.0)));
            }
            if consumed[m.0] {
                return Err(Error::InvalidCircuit(format!("vacuum #{} used twice as ancilla", m.0)));
            }
            consumed[m.0] = true;
            Ok(())
        };
        for (i, el) in self.elements.iter().enumerate() {
            match el {
                Element::BeamSplitter { a, b, transmittance } => {
                    live(*a, &measured)?;
                    live(*b, &measured)?;
                    if a == b {
                        return bad(format!("element {i}: beam splitter needs two distinct modes"));
                    }
                    if !(0.0..=1.0).contains(transmittance) {
                        return Err(Error::Transmittance(*transmittance));
                    }
                }
                Element::Homodyne { mode, efficiency, detector, record, .. } => {
                    live(*mode, &measured)?;
                    if !(*efficiency > 0.0 && *efficiency <= 1.0) {
                        return Err(Error::Efficiency(*efficiency));
                    }
                    if *record != records {
                        return bad(format!("element {i}: expected record {records}, found {record}"));
                    }
                    take_vacuum(*detector, &mut consumed_ancilla)?;
                    live(*detector, &measured)?;
                    measured[mode.0] = true;
                    measured[detector.0] = true;
                    records += 1;
                }
                Element::FeedForward { target, terms } => {
                    live(*target, &measured)?;
                    if let Some(t) = terms.iter().find(|t| t.record >= records) {
                        return bad(format!("element {i}: feed-forward reads record {} before it exists", t.record));
                    }
                }
                Element::Distribute { source, vacua } => {
                    live(*source, &measured)?;
                    for &v in vacua {
                        live(v, &measured)?;
                        take_vacuum(v, &mut consumed_ancilla)?;
                    }
                }
            }
        }
        for &m in self.clones.iter().chain(&self.anticlones) {
            live(m, &measured)?;
        }
        Ok(())
    }
}

/// Mode slots of interest in a built cloner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClonerLayout {
    pub signal: Vec<ModeId>,
    pub conjugate: Vec<ModeId>,
    /// Input entering the empty port of the variable beam splitter.
    pub variable_port: ModeId,
    /// Slot of the transmitted beam that receives the feed-forward.
    pub displaced: ModeId,
    /// Slot of the second EPR arm, reversible machine only.
    pub epr_displaced: Option<ModeId>,
    /// Number of leading elements after which the displaced fields are final.
    pub displaced_after: usize,
    pub reflectivity: f64,
    pub gain: f64,
    pub epr_gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClonerCircuit {
    pub params: ClonerParams,
    pub circuit: Circuit,
    pub layout: ClonerLayout,
}

/// Reflectivity `(M−N)²/(M+N)²` that gives each of `M` clones unit signal.
pub fn solve_reflectivity(n: usize, m: usize) -> Result<f64> {
    if n == 0 || m < n {
        return Err(Error::InvalidParams(format!(
            "signal budget needs 1 <= N <= M (N = {n}, M = {m})"
        )));
    }
    let (n, m) = (n as f64, m as f64);
    Ok(((m - n) / (m + n)).powi(2))
}

/// Feed-forward gain `√(2R/(η(1−R)))` that cancels the vacuum entering the
/// variable beam splitter.
pub fn solve_gain(reflectivity: f64, eta: f64) -> Result<f64> {
    check_reflectivity(reflectivity)?;
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Efficiency(eta));
    }
    Ok((2.0 * reflectivity / (eta * (1.0 - reflectivity))).sqrt())
}

/// Gain `√(2/(1−R))` for the conjugate displacement of the second EPR arm.
pub fn solve_epr_gain(reflectivity: f64) -> Result<f64> {
    check_reflectivity(reflectivity)?;
    Ok((2.0 / (1.0 - reflectivity)).sqrt())
}

fn check_reflectivity(r: f64) -> Result<()> {
    if !(0.0..1.0 - POLE_GUARD).contains(&r) {
        return Err(Error::Reflectivity(r));
    }
    Ok(())
}

/// Standard (non-conjugate) Gaussian `N → M` cloning fidelity
/// `MN/(MN + M − N)`.
pub fn standard_cloner_fidelity(n_inputs: usize, m: usize) -> Result<f64> {
    if n_inputs == 0 || m < n_inputs {
        return Err(Error::InvalidParams(format!(
            "standard cloner needs 1 <= N <= M (N = {n_inputs}, M = {m})"
        )));
    }
    let (n, m) = (n_inputs as f64, m as f64);
    Ok(m * n / (m * n + m - n))
}

/// Beam-splitter chain merging `inputs` into `inputs[0]` with equal weights
/// `1/√N`. The other slots end up holding the discarded dark outputs.
pub fn build_concentration(inputs: &[ModeId]) -> Vec<Element> {
    inputs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &next)| Element::BeamSplitter {
            a: inputs[0],
            b: next,
            transmittance: k as f64 / (k + 1) as f64,
        })
        .collect()
}

/// The irreversible `N+N → M` machine.
pub fn build_pci_cloner(params: &ClonerParams) -> Result<ClonerCircuit> {
    if params.epr_r.is_some() {
        return Err(Error::InvalidParams(
            "EPR ancilla given: use build_reversible_cloner".into(),
        ));
    }
    build_machine(params)
}

/// The reversible `N+N → M+M` machine with an EPR ancilla.
pub fn build_reversible_cloner(params: &ClonerParams) -> Result<ClonerCircuit> {
    if params.epr_r.is_none() {
        return Err(Error::InvalidParams(
            "reversible machine needs an EPR squeezing parameter".into(),
        ));
    }
    build_machine(params)
}

/// Builds whichever machine `params` describes.
pub fn build_cloner(params: &ClonerParams) -> Result<ClonerCircuit> {
    build_machine(params)
}

fn build_machine(params: &ClonerParams) -> Result<ClonerCircuit> {
    params.validate()?;
    let ClonerParams { n, m, eta, epr_r, alpha } = *params;
    let (x, p) = alpha;

    let mut cat = InputCatalog::new();
    let signal: Vec<ModeId> = (1..=n).map(|l| cat.add_coherent(format!("a{l}"), x, p)).collect();
    let conjugate: Vec<ModeId> = (1..=n).map(|l| cat.add_conjugate(format!("b{l}"), x, p)).collect();
    let (variable_port, epr_second) = match epr_r {
        Some(r) => {
            let (e1, e2) = cat.add_epr_pair("epr1", "epr2", r)?;
            (e1, Some(e2))
        }
        None => (cat.add_vacuum("v1"), None),
    };
    let det_x = cat.add_vacuum("vd1");
    let det_p = cat.add_vacuum("vd2");
    let clone_vacua: Vec<ModeId> = (1..m).map(|k| cat.add_vacuum(format!("u{k}"))).collect();
    let anti_vacua: Vec<ModeId> = match epr_second {
        Some(_) => (1..m).map(|k| cat.add_vacuum(format!("w{k}"))).collect(),
        None => Vec::new(),
    };

    let reflectivity = solve_reflectivity(n, m)?;
    let gain = solve_gain(reflectivity, eta)?;
    // detection loss scales the photocurrent by √η; compensate so the
    // anticlones stay at unity gain
    let epr_gain = match epr_second {
        Some(_) => Some(solve_epr_gain(reflectivity)? / eta.sqrt()),
        None => None,
    };

    let c1 = signal[0];
    let c2 = conjugate[0];
    let mut elements = build_concentration(&signal);
    elements.extend(build_concentration(&conjugate));
    // vacuum port first: its slot holds the reflected beam √R c1 + √T v,
    // c1's slot the transmitted beam √T c1 − √R v
    elements.push(Element::BeamSplitter {
        a: variable_port,
        b: c1,
        transmittance: 1.0 - reflectivity,
    });
    // c2's slot: (c2 + refl)/√2 read in X; the port slot: (refl − c2)/√2 read in P
    elements.push(Element::BeamSplitter {
        a: c2,
        b: variable_port,
        transmittance: 0.5,
    });
    elements.push(Element::Homodyne {
        mode: c2,
        quadrature: Quadrature::X,
        efficiency: eta,
        detector: det_x,
        record: 0,
    });
    elements.push(Element::Homodyne {
        mode: variable_port,
        quadrature: Quadrature::P,
        efficiency: eta,
        detector: det_p,
        record: 1,
    });
    elements.push(Element::FeedForward {
        target: c1,
        terms: vec![
            FeedTerm { record: 0, quadrature: Quadrature::X, gain },
            FeedTerm { record: 1, quadrature: Quadrature::P, gain },
        ],
    });
    if let (Some(e2), Some(g1)) = (epr_second, epr_gain) {
        elements.push(Element::FeedForward {
            target: e2,
            terms: vec![
                FeedTerm { record: 0, quadrature: Quadrature::X, gain: g1 },
                FeedTerm { record: 1, quadrature: Quadrature::P, gain: -g1 },
            ],
        });
    }
    let displaced_after = elements.len();

    let clones = Element::distribution_outputs(c1, &clone_vacua);
    elements.push(Element::Distribute { source: c1, vacua: clone_vacua });
    let anticlones = match epr_second {
        Some(e2) => {
            let outs = Element::distribution_outputs(e2, &anti_vacua);
            elements.push(Element::Distribute { source: e2, vacua: anti_vacua });
            outs
        }
        None => Vec::new(),
    };

    let circuit = Circuit {
        catalog: cat,
        elements,
        clones,
        anticlones,
    };
    circuit.validate()?;
    Ok(ClonerCircuit {
        params: *params,
        circuit,
        layout: ClonerLayout {
            signal,
            conjugate,
            variable_port,
            displaced: c1,
            epr_displaced: epr_second,
            displaced_after,
            reflectivity,
            gain,
            epr_gain,
        },
    })
}
