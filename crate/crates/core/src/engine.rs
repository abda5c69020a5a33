//! Two analytic evaluators for a [`Circuit`]: exact operator expansions in
//! the Heisenberg picture, and covariance propagation with Schur-complement
//! homodyne conditioning in the Schrödinger picture (carried in square-root
//! form).

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::circuits::{Circuit, Element, Role};
use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, Quadrature, SymplecticMap};
use crate::heisenberg::{self, distribution_row, ModeExpansion, ModeId, Moments, QuadratureExpansion};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputMoments {
    pub role: Role,
    pub mode: ModeId,
    pub moments: Moments,
}

/// Heisenberg-picture run. Holds the expansion of every live mode.
#[derive(Debug, Clone)]
pub struct HeisenbergRun {
    pub modes: BTreeMap<ModeId, ModeExpansion>,
    pub records: Vec<QuadratureExpansion>,
}

impl HeisenbergRun {
    pub fn mode(&self, id: ModeId) -> Result<&ModeExpansion> {
        self.modes
            .get(&id)
            .ok_or_else(|| Error::InvalidCircuit(format!("mode #{} not live", id.0)))
    }
}

/// Executes the first `upto` elements. Distribution rows are materialized
/// only for modes in `wanted` (or all of them when `wanted` is `None`), so a
/// single clone of a very wide distribution stays cheap.
pub fn heisenberg_prefix(circuit: &Circuit, upto: usize, wanted: Option<&BTreeSet<ModeId>>) -> Result<HeisenbergRun> {
    let mut modes: BTreeMap<ModeId, ModeExpansion> = (0..circuit.catalog.len())
        .map(|k| (ModeId(k), ModeExpansion::input(ModeId(k))))
        .collect();
    let mut records = Vec::new();
    let take = |modes: &BTreeMap<ModeId, ModeExpansion>, id: ModeId| -> Result<ModeExpansion> {
        modes
            .get(&id)
            .cloned()
            .ok_or_else(|| Error::InvalidCircuit(format!("mode #{} not live", id.0)))
    };
    for el in circuit.elements.iter().take(upto) {
        match el {
            Element::BeamSplitter { a, b, transmittance } => {
                let (oa, ob) = heisenberg::beam_split(&take(&modes, *a)?, &take(&modes, *b)?, *transmittance)?;
                modes.insert(*a, oa);
                modes.insert(*b, ob);
            }
            Element::Homodyne { mode, quadrature, efficiency, detector, .. } => {
                let m = take(&modes, *mode)?;
                records.push(heisenberg::homodyne_expansion(&m, *quadrature, *efficiency, *detector)?);
                modes.remove(mode);
                modes.remove(detector);
            }
            Element::FeedForward { target, terms } => {
                let mut t = take(&modes, *target)?;
                for term in terms {
                    let rec = records
                        .get(term.record)
                        .ok_or_else(|| Error::InvalidCircuit(format!("record {} missing", term.record)))?;
                    match term.quadrature {
                        Quadrature::X => t.x.accumulate(rec, term.gain),
                        Quadrature::P => t.p.accumulate(rec, term.gain),
                    }
                }
                modes.insert(*target, t);
            }
            Element::Distribute { source, vacua } => {
                let src = take(&modes, *source)?;
                let outs = Element::distribution_outputs(*source, vacua);
                let total = outs.len();
                let vac: Vec<ModeExpansion> = vacua.iter().map(|&v| take(&modes, v)).collect::<Result<_>>()?;
                for (row, &slot) in outs.iter().enumerate() {
                    if wanted.is_some_and(|w| !w.contains(&slot)) {
                        modes.remove(&slot);
                        continue;
                    }
                    let mut e = ModeExpansion::default();
                    for (col, c) in distribution_row(total, row + 1) {
                        let term = if col == 0 { &src } else { &vac[col - 1] };
                        e.x.accumulate(&term.x, c);
                        e.p.accumulate(&term.p, c);
                    }
                    modes.insert(slot, e);
                }
            }
        }
    }
    Ok(HeisenbergRun { modes, records })
}

/// Moments of every designated output via operator expansions.
pub fn run_heisenberg(circuit: &Circuit) -> Result<Vec<OutputMoments>> {
    run_heisenberg_outputs(circuit, &circuit.outputs())
}

/// Moments of a chosen subset of outputs.
pub fn run_heisenberg_outputs(circuit: &Circuit, outputs: &[(Role, ModeId)]) -> Result<Vec<OutputMoments>> {
    let wanted: BTreeSet<ModeId> = outputs.iter().map(|&(_, m)| m).collect();
    let run = heisenberg_prefix(circuit, circuit.elements.len(), Some(&wanted))?;
    outputs
        .iter()
        .map(|&(role, mode)| {
            Ok(OutputMoments {
                role,
                mode,
                moments: heisenberg::evaluate_moments(run.mode(mode)?, &circuit.catalog)?,
            })
        })
        .collect()
}

/// Random homodyne innovation: an independent zero-mean Gaussian outcome
/// component and how the conditional mean responds to it.
#[derive(Debug, Clone)]
struct Record {
    mean: f64,
    /// Standardized loadings on each innovation up to this record's own.
    loadings: Vec<f64>,
}

/// Final unconditional state of a phase-space run.
#[derive(Debug, Clone)]
pub struct PhaseSpaceRun {
    pub state: GaussianState,
    /// Register position of each surviving circuit mode.
    pub positions: BTreeMap<ModeId, usize>,
}

impl PhaseSpaceRun {
    pub fn output_moments(&self, role: Role, mode: ModeId) -> Result<OutputMoments> {
        let k = *self
            .positions
            .get(&mode)
            .ok_or_else(|| Error::InvalidCircuit(format!("mode #{} not live", mode.0)))?;
        let (mean, cov) = (self.state.mean(), self.state.cov());
        Ok(OutputMoments {
            role,
            mode,
            moments: Moments {
                mean_x: mean[2 * k],
                mean_p: mean[2 * k + 1],
                var_x: cov[(2 * k, 2 * k)],
                var_p: cov[(2 * k + 1, 2 * k + 1)],
                cov_xp: cov[(2 * k, 2 * k + 1)],
            },
        })
    }

    /// Reduced state of the designated outputs in the given order.
    pub fn output_state(&self, modes: &[ModeId]) -> Result<GaussianState> {
        let idx: Vec<usize> = modes
            .iter()
            .map(|m| {
                self.positions
                    .get(m)
                    .copied()
                    .ok_or_else(|| Error::InvalidCircuit(format!("mode #{} not live", m.0)))
            })
            .collect::<Result<_>>()?;
        self.state.reduced(&idx)
    }
}

/// Register in square-root form: covariance `F Fᵀ` of the state conditioned
/// on mean outcomes, plus one column of `G` per homodyne innovation. The
/// unconditional covariance is `F Fᵀ + G Gᵀ`.
struct Register {
    mean: DVector<f64>,
    factor: DMatrix<f64>,
    innovations: DMatrix<f64>,
}

impl Register {
    fn apply(&mut self, map: &SymplecticMap, modes: &[usize]) {
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let mix = |m: &mut DMatrix<f64>| {
            for c in 0..m.ncols() {
                let old: Vec<f64> = idx.iter().map(|&i| m[(i, c)]).collect();
                for (a, &i) in idx.iter().enumerate() {
                    m[(i, c)] = (0..idx.len()).map(|b| map.matrix[(a, b)] * old[b]).sum();
                }
            }
        };
        mix(&mut self.factor);
        mix(&mut self.innovations);
        let old: Vec<f64> = idx.iter().map(|&i| self.mean[i]).collect();
        for (a, &i) in idx.iter().enumerate() {
            self.mean[i] = (0..idx.len()).map(|b| map.matrix[(a, b)] * old[b]).sum::<f64>() + map.displacement[a];
        }
    }

    /// Conditions on the mean outcome of quadrature row `q` and removes
    /// mode `mode`. Returns the outcome mean and the record's loadings on
    /// every innovation, the new one last.
    fn measure(&mut self, mode: usize, q: usize, quadrature: Quadrature) -> Result<(f64, Vec<f64>)> {
        let h = self.factor.row(q).transpose();
        let variance = h.norm_squared();
        if !(variance > 0.0) {
            return Err(Error::DegenerateConditioning { quadrature, variance });
        }
        let sigma = variance.sqrt();
        let unit = h / sigma;
        // F ĥ carries the innovation, F (I − ĥĥᵀ) what is left
        let column = &self.factor * &unit;
        self.factor -= &column * unit.transpose();
        let mut loadings: Vec<f64> = self.innovations.row(q).iter().copied().collect();
        loadings.push(sigma);
        let outcome = self.mean[q];
        let k = self.innovations.ncols();
        self.innovations = self.innovations.clone().insert_column(k, 0.0);
        self.innovations.set_column(k, &column);
        self.remove(mode);
        Ok((outcome, loadings))
    }

    fn remove(&mut self, mode: usize) {
        let rows = [2 * mode, 2 * mode + 1];
        self.mean = self.mean.clone().remove_rows_at(&rows);
        self.factor = self.factor.clone().remove_rows_at(&rows);
        self.innovations = self.innovations.clone().remove_rows_at(&rows);
    }
}

/// Propagates the full Gaussian state through the circuit.
///
/// The covariance is carried as a factor `F` (`V = F Fᵀ`) so strongly
/// squeezed inputs never produce large cancelling terms. A homodyne is the
/// Schur-complement update `V − V e eᵀ V / σ²` written on the factor; it
/// conditions on the mean outcome and opens an innovation column. Feed-forward
/// moves records, and with them innovation columns, onto the target rows.
pub fn run_phase_space_state(circuit: &Circuit) -> Result<PhaseSpaceRun> {
    circuit.validate()?;
    let factor = circuit.catalog.noise_factor()?;
    let mut reg = Register {
        mean: circuit.catalog.mean_vector(),
        innovations: DMatrix::zeros(factor.nrows(), 0),
        factor,
    };
    let mut positions: Vec<Option<usize>> = (0..circuit.catalog.len()).map(Some).collect();
    let mut records: Vec<Record> = Vec::new();

    let pos = |positions: &[Option<usize>], m: ModeId| -> Result<usize> {
        positions
            .get(m.0)
            .copied()
            .flatten()
            .ok_or_else(|| Error::InvalidCircuit(format!("mode #{} not live", m.0)))
    };

    for el in &circuit.elements {
        match el {
            Element::BeamSplitter { a, b, transmittance } => {
                let map = SymplecticMap::beam_splitter(*transmittance)?;
                reg.apply(&map, &[pos(&positions, *a)?, pos(&positions, *b)?]);
            }
            Element::Distribute { source, vacua } => {
                let outputs = vacua.len() + 1;
                let remainder = pos(&positions, *source)?;
                for (stage, t) in Element::distribution_chain(outputs).into_iter().enumerate() {
                    let map = SymplecticMap::beam_splitter(t)?;
                    reg.apply(&map, &[pos(&positions, vacua[stage])?, remainder]);
                }
            }
            Element::Homodyne { mode, quadrature, efficiency, detector, .. } => {
                let m = pos(&positions, *mode)?;
                let d = pos(&positions, *detector)?;
                if *efficiency < 1.0 {
                    // loss as a splitter with the detector vacuum
                    reg.apply(&SymplecticMap::beam_splitter(*efficiency)?, &[m, d]);
                }
                let (mean, loadings) = reg.measure(m, 2 * m + quadrature.offset(), *quadrature)?;
                records.push(Record { mean, loadings });
                shift_after_removal(&mut positions, *mode, m);

                // the detector's leftover port is discarded
                let d = pos(&positions, *detector)?;
                reg.remove(d);
                shift_after_removal(&mut positions, *detector, d);
            }
            Element::FeedForward { target, terms } => {
                let t = pos(&positions, *target)?;
                for term in terms {
                    let rec = &records[term.record];
                    let q = 2 * t + term.quadrature.offset();
                    reg.mean[q] += term.gain * rec.mean;
                    for (i, load) in rec.loadings.iter().enumerate() {
                        reg.innovations[(q, i)] += term.gain * load;
                    }
                }
            }
        }
    }

    let mut cov = &reg.factor * reg.factor.transpose();
    cov += &reg.innovations * reg.innovations.transpose();
    let state = GaussianState::from_moments(reg.mean, cov)?;
    let positions = positions
        .into_iter()
        .enumerate()
        .filter_map(|(k, p)| p.map(|p| (ModeId(k), p)))
        .collect();
    Ok(PhaseSpaceRun { state, positions })
}

/// Moments of every designated output via phase-space propagation.
pub fn run_phase_space(circuit: &Circuit) -> Result<Vec<OutputMoments>> {
    let run = run_phase_space_state(circuit)?;
    circuit
        .outputs()
        .into_iter()
        .map(|(role, mode)| run.output_moments(role, mode))
        .collect()
}

fn shift_after_removal(positions: &mut [Option<usize>], removed: ModeId, at: usize) {
    positions[removed.0] = None;
    for p in positions.iter_mut().flatten() {
        if *p > at {
            *p -= 1;
        }
    }
}

/// Orthogonal mixing matrix of an `outputs`-way distribution obtained by
/// composing the beam-splitter chain. Rows follow output order, columns are
/// `(source, v1, ..., v_{M-1})`.
pub fn distribution_matrix(outputs: usize) -> DMatrix<f64> {
    // row j holds the current expansion of slot j (0 = source, j = v_j)
    let mut u = DMatrix::<f64>::identity(outputs, outputs);
    for (stage, t) in Element::distribution_chain(outputs).into_iter().enumerate() {
        let v = stage + 1;
        let (ts, rs) = (t.sqrt(), (1.0 - t).sqrt());
        let row_v = u.row(v).clone_owned();
        let row_0 = u.row(0).clone_owned();
        u.set_row(v, &(&row_v * ts + &row_0 * rs));
        u.set_row(0, &(&row_v * -rs + &row_0 * ts));
    }
    DMatrix::from_fn(outputs, outputs, |i, j| if i + 1 < outputs { u[(i + 1, j)] } else { u[(0, j)] })
}
