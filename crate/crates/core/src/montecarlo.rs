//! Phase-space Monte Carlo oracle.
//!
//! Every input, element, and measurement in these circuits is Gaussian, so
//! the Wigner function stays a positive Gaussian density throughout. Drawing
//! each input's quadratures from its Wigner distribution and pushing the
//! samples through the circuit as classical linear maps therefore reproduces
//! all first and second moments of the quantum state exactly. Homodyne
//! outcomes are the sampled quadrature values and feed-forward adds the
//! scaled outcome.
//!
//! Random numbers: ChaCha8 (`rand_chacha`), keyed by `seed_from_u64(seed)`,
//! with the stream id set to the chunk index. Shots are split into fixed
//! chunks of [`CHUNK_SHOTS`]; chunk statistics are merged in chunk order, so
//! serial and parallel runs give bit-identical estimates.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::circuits::{Circuit, Element, Role};
use crate::cloning::fidelity_general;
use crate::error::{Error, Result};
use crate::heisenberg::{InputKind, ModeId};

pub const CHUNK_SHOTS: usize = 4096;
pub const MIN_SHOTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub shots: usize,
    pub seed: u64,
    /// Half-width of confidence bands in standard errors.
    pub confidence: f64,
}

impl McConfig {
    pub fn new(shots: usize, seed: u64) -> Self {
        Self {
            shots,
            seed,
            confidence: 3.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.shots < MIN_SHOTS {
            return Err(Error::InvalidParams(format!(
                "Monte Carlo needs at least {MIN_SHOTS} shots, got {}",
                self.shots
            )));
        }
        if !(self.confidence > 0.0) {
            return Err(Error::InvalidParams("confidence multiplier must be positive".into()));
        }
        Ok(())
    }
}

impl Default for McConfig {
    fn default() -> Self {
        Self::new(100_000, 0x5eed)
    }
}

/// Running central moments up to fourth order plus the X–P co-moment,
/// mergeable across chunks.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Accumulator {
    n: f64,
    x: Central,
    p: Central,
    co: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Central {
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Central {
    fn push(&mut self, n_before: f64, value: f64) {
        let n = n_before + 1.0;
        let delta = value - self.mean;
        let dn = delta / n;
        let dn2 = dn * dn;
        let term1 = delta * dn * n_before;
        self.mean += dn;
        self.m4 += term1 * dn2 * (n * n - 3.0 * n + 3.0) + 6.0 * dn2 * self.m2 - 4.0 * dn * self.m3;
        self.m3 += term1 * dn * (n - 2.0) - 3.0 * dn * self.m2;
        self.m2 += term1;
    }

    fn merge(a: &Central, na: f64, b: &Central, nb: f64) -> Central {
        let n = na + nb;
        let d = b.mean - a.mean;
        let d2 = d * d;
        Central {
            mean: a.mean + d * nb / n,
            m2: a.m2 + b.m2 + d2 * na * nb / n,
            m3: a.m3 + b.m3 + d2 * d * na * nb * (na - nb) / (n * n) + 3.0 * d * (na * b.m2 - nb * a.m2) / n,
            m4: a.m4
                + b.m4
                + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
                + 6.0 * d2 * (na * na * b.m2 + nb * nb * a.m2) / (n * n)
                + 4.0 * d * (na * b.m3 - nb * a.m3) / n,
        }
    }
}

impl Accumulator {
    fn push(&mut self, x: f64, p: f64) {
        let n_before = self.n;
        // co-moment uses the x mean before and after the update
        let dx = x - self.x.mean;
        self.x.push(n_before, x);
        self.p.push(n_before, p);
        self.co += dx * (p - self.p.mean);
        self.n += 1.0;
    }

    fn merge(&self, other: &Accumulator) -> Accumulator {
        if self.n == 0.0 {
            return *other;
        }
        if other.n == 0.0 {
            return *self;
        }
        let (na, nb) = (self.n, other.n);
        let n = na + nb;
        Accumulator {
            n,
            x: Central::merge(&self.x, na, &other.x, nb),
            p: Central::merge(&self.p, na, &other.p, nb),
            co: self.co + other.co + (other.x.mean - self.x.mean) * (other.p.mean - self.p.mean) * na * nb / n,
        }
    }
}

/// Empirical moments of one output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOutput {
    pub role: Role,
    pub mode: ModeId,
    pub mean: (f64, f64),
    pub var_x: f64,
    pub var_p: f64,
    pub cov_xp: f64,
    pub se_mean: (f64, f64),
    pub se_var_x: f64,
    pub se_var_p: f64,
    /// Plug-in fidelity against the role's target coherent state.
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub config: McConfig,
    pub outputs: Vec<McOutput>,
}

#[derive(Debug, Clone)]
enum Op {
    Split { a: usize, b: usize, t: f64, r: f64 },
    Measure { q: usize, detector_q: usize, signal: f64, loss: f64, record: usize },
    Feed { q: usize, record: usize, gain: f64 },
}

#[derive(Debug, Clone)]
enum Source {
    Coherent { mode: usize, mean: (f64, f64) },
    /// Two adjacent modes drawn jointly from their squeezed-mode factor.
    Pair { first: usize, factor: DMatrix<f64> },
}

/// Circuit lowered to index arithmetic on a flat quadrature vector.
#[derive(Debug, Clone)]
struct Program {
    dim: usize,
    sources: Vec<Source>,
    ops: Vec<Op>,
    n_records: usize,
    outputs: Vec<(Role, ModeId)>,
}

impl Program {
    fn compile(circuit: &Circuit) -> Result<Program> {
        circuit.validate()?;
        let entries = circuit.catalog.entries();
        let noise = circuit.catalog.noise_factor()?;
        let mut sources = Vec::new();
        let mut k = 0;
        while k < entries.len() {
            match entries[k].kind {
                InputKind::EprArm { partner, .. } if partner.0 == k + 1 => {
                    let factor = noise.view((2 * k, 2 * k), (4, 4)).clone_owned();
                    sources.push(Source::Pair { first: k, factor });
                    k += 2;
                }
                InputKind::EprArm { .. } => {
                    return Err(Error::InvalidCircuit(format!(
                        "EPR arm {} must sit directly before its partner",
                        entries[k].label
                    )))
                }
                _ => {
                    sources.push(Source::Coherent { mode: k, mean: entries[k].mean() });
                    k += 1;
                }
            }
        }

        let split = |a: ModeId, b: ModeId, t: f64| Op::Split { a: a.0, b: b.0, t: t.sqrt(), r: (1.0 - t).sqrt() };
        let mut ops = Vec::new();
        for el in &circuit.elements {
            match el {
                Element::BeamSplitter { a, b, transmittance } => ops.push(split(*a, *b, *transmittance)),
                Element::Homodyne { mode, quadrature, efficiency, detector, record } => ops.push(Op::Measure {
                    q: 2 * mode.0 + quadrature.offset(),
                    detector_q: 2 * detector.0 + quadrature.offset(),
                    signal: efficiency.sqrt(),
                    loss: (1.0 - efficiency).sqrt(),
                    record: *record,
                }),
                Element::FeedForward { target, terms } => {
                    for t in terms {
                        ops.push(Op::Feed {
                            q: 2 * target.0 + t.quadrature.offset(),
                            record: t.record,
                            gain: t.gain,
                        });
                    }
                }
                Element::Distribute { source, vacua } => {
                    for (stage, t) in Element::distribution_chain(vacua.len() + 1).into_iter().enumerate() {
                        ops.push(split(vacua[stage], *source, t));
                    }
                }
            }
        }
        Ok(Program {
            dim: 2 * entries.len(),
            sources,
            ops,
            n_records: circuit.n_records(),
            outputs: circuit.outputs(),
        })
    }

    fn sample(&self, rng: &mut ChaCha8Rng, v: &mut [f64], records: &mut [f64]) {
        let mut normal = || -> f64 { StandardNormal.sample(rng) };
        for s in &self.sources {
            match s {
                Source::Coherent { mode, mean } => {
                    v[2 * mode] = mean.0 + normal();
                    v[2 * mode + 1] = mean.1 + normal();
                }
                Source::Pair { first, factor } => {
                    let z = DVector::from_fn(4, |_, _| normal());
                    let w = factor * z;
                    v[2 * first..2 * first + 4].copy_from_slice(w.as_slice());
                }
            }
        }
        for op in &self.ops {
            match *op {
                Op::Split { a, b, t, r } => {
                    for off in 0..2 {
                        let (xa, xb) = (v[2 * a + off], v[2 * b + off]);
                        v[2 * a + off] = t * xa + r * xb;
                        v[2 * b + off] = -r * xa + t * xb;
                    }
                }
                Op::Measure { q, detector_q, signal, loss, record } => {
                    records[record] = signal * v[q] + loss * v[detector_q];
                }
                Op::Feed { q, record, gain } => v[q] += gain * records[record],
            }
        }
    }

    fn run_chunk(&self, seed: u64, chunk: usize, shots: usize) -> Vec<Accumulator> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk as u64);
        let mut v = vec![0.0; self.dim];
        let mut records = vec![0.0; self.n_records];
        let mut acc = vec![Accumulator::default(); self.outputs.len()];
        for _ in 0..shots {
            self.sample(&mut rng, &mut v, &mut records);
            for (a, &(_, mode)) in acc.iter_mut().zip(&self.outputs) {
                a.push(v[2 * mode.0], v[2 * mode.0 + 1]);
            }
        }
        acc
    }
}

/// Raw `(x, p)` samples of every designated output, one inner vector per
/// output in [`Circuit::outputs`] order. Uses the same chunked streams as
/// [`run_monte_carlo`], so shot `k` matches between the two.
pub fn sample_outputs(circuit: &Circuit, shots: usize, seed: u64) -> Result<Vec<Vec<(f64, f64)>>> {
    let program = Program::compile(circuit)?;
    let mut v = vec![0.0; program.dim];
    let mut records = vec![0.0; program.n_records];
    let mut out = vec![Vec::with_capacity(shots); program.outputs.len()];
    for chunk in 0..shots.div_ceil(CHUNK_SHOTS) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk as u64);
        for _ in 0..CHUNK_SHOTS.min(shots - chunk * CHUNK_SHOTS) {
            program.sample(&mut rng, &mut v, &mut records);
            for (o, &(_, mode)) in out.iter_mut().zip(&program.outputs) {
                o.push((v[2 * mode.0], v[2 * mode.0 + 1]));
            }
        }
    }
    Ok(out)
}

/// Runs the shot ensemble and summarizes every designated output.
pub fn run_monte_carlo(circuit: &Circuit, alpha: (f64, f64), cfg: &McConfig) -> Result<McEstimate> {
    cfg.validate()?;
    let program = Program::compile(circuit)?;
    let n_chunks = cfg.shots.div_ceil(CHUNK_SHOTS);
    let chunk_len = |c: usize| CHUNK_SHOTS.min(cfg.shots - c * CHUNK_SHOTS);

    #[cfg(feature = "parallel")]
    let chunks: Vec<Vec<Accumulator>> = {
        use rayon::prelude::*;
        (0..n_chunks)
            .into_par_iter()
            .map(|c| program.run_chunk(cfg.seed, c, chunk_len(c)))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let chunks: Vec<Vec<Accumulator>> = (0..n_chunks)
        .map(|c| program.run_chunk(cfg.seed, c, chunk_len(c)))
        .collect();

    let mut total = vec![Accumulator::default(); program.outputs.len()];
    for chunk in &chunks {
        for (t, c) in total.iter_mut().zip(chunk) {
            *t = t.merge(c);
        }
    }

    let outputs = program
        .outputs
        .iter()
        .zip(&total)
        .map(|(&(role, mode), a)| summarize(role, mode, a, alpha))
        .collect::<Result<_>>()?;
    Ok(McEstimate { config: *cfg, outputs })
}

fn summarize(role: Role, mode: ModeId, a: &Accumulator, alpha: (f64, f64)) -> Result<McOutput> {
    let n = a.n;
    let var = |c: &Central| c.m2 / (n - 1.0);
    let se_var = |c: &Central| {
        let m2 = c.m2 / n;
        let m4 = c.m4 / n;
        ((m4 - m2 * m2).max(0.0) / n).sqrt()
    };
    let (var_x, var_p) = (var(&a.x), var(&a.p));
    let target = crate::cloning::target_mean(alpha, role);
    Ok(McOutput {
        role,
        mode,
        mean: (a.x.mean, a.p.mean),
        var_x,
        var_p,
        cov_xp: a.co / (n - 1.0),
        se_mean: ((var_x / n).sqrt(), (var_p / n).sqrt()),
        se_var_x: se_var(&a.x),
        se_var_p: se_var(&a.p),
        fidelity: fidelity_general(target, (a.x.mean, a.p.mean), var_x, var_p)?,
    })
}

/// Plug-in fidelity with a delta-method interval from the variance standard
/// errors, clamped to `[0, 1]`.
pub fn estimate_fidelity_ci(out: &McOutput, target_mean: (f64, f64), confidence: f64) -> Result<(f64, f64, f64)> {
    let f = fidelity_general(target_mean, out.mean, out.var_x, out.var_p)?;
    let dx = out.mean.0 - target_mean.0;
    let dp = out.mean.1 - target_mean.1;
    let (sx, sp) = (1.0 + out.var_x, 1.0 + out.var_p);
    // ∂F/∂v = F · (−1/(2s) + d²/(2s²)) with s = 1 + v
    let dfx = f * (-0.5 / sx + dx * dx / (2.0 * sx * sx));
    let dfp = f * (-0.5 / sp + dp * dp / (2.0 * sp * sp));
    let sigma = ((dfx * out.se_var_x).powi(2) + (dfp * out.se_var_p).powi(2)).sqrt();
    Ok((f, (f - confidence * sigma).max(0.0), (f + confidence * sigma).min(1.0)))
}
