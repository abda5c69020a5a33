//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a flat `Float64Array` so the page can plot it
//! without any glue beyond `wasm-bindgen`.

use wasm_bindgen::prelude::*;

use cvclone::circuits::{build_cloner, standard_cloner_fidelity, ClonerParams, Role};
use cvclone::cloning::{fidelity_general, target_mean};
use cvclone::engine::run_heisenberg;
use cvclone::montecarlo::sample_outputs;

fn js(e: cvclone::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn params(n: usize, m: usize, eta: f64, r: Option<f64>) -> ClonerParams {
    let mut p = ClonerParams::new(n, m).with_eta(eta);
    p.epr_r = r;
    p
}

/// Simulated fidelity of the first output with the given role.
fn first_fidelity(p: &ClonerParams, role: Role) -> cvclone::Result<f64> {
    let machine = build_cloner(p)?;
    let out = run_heisenberg(&machine.circuit)?;
    let o = out
        .iter()
        .find(|o| o.role == role)
        .ok_or_else(|| cvclone::Error::InvalidCircuit("machine has no output of that role".into()))?;
    let m = &o.moments;
    fidelity_general(target_mean(p.alpha, role), (m.mean_x, m.mean_p), m.var_x, m.var_p)
}

/// Clone fidelity against `M` for `M = N..=m_max`.
///
/// Triples `[M, simulated, standard]`; `standard` is the ideal Gaussian
/// cloner fed `2N` copies, `NaN` where `M < 2N`.
#[wasm_bindgen]
pub fn clone_fidelity_curve(n: usize, m_max: usize, eta: f64) -> Result<Vec<f64>, JsError> {
    let mut out = Vec::new();
    for m in n..=m_max {
        let f = first_fidelity(&params(n, m, eta, None), Role::Clone).map_err(js)?;
        let std = if m >= 2 * n { standard_cloner_fidelity(2 * n, m).map_err(js)? } else { f64::NAN };
        out.extend([m as f64, f, std]);
    }
    if out.is_empty() {
        return Err(JsError::new("need M >= N"));
    }
    Ok(out)
}

/// Clone and anticlone fidelity of the reversible machine against squeezing.
///
/// Triples `[r, clone, anticlone]` for `steps + 1` evenly spaced `r` in `[0, r_max]`.
#[wasm_bindgen]
pub fn anticlone_curve(n: usize, m: usize, eta: f64, r_max: f64, steps: usize) -> Result<Vec<f64>, JsError> {
    let steps = steps.max(1);
    let mut out = Vec::with_capacity(3 * (steps + 1));
    for k in 0..=steps {
        let r = r_max * k as f64 / steps as f64;
        let p = params(n, m, eta, Some(r));
        let clone = first_fidelity(&p, Role::Clone).map_err(js)?;
        let anti = first_fidelity(&p, Role::Anticlone).map_err(js)?;
        out.extend([r, clone, anti]);
    }
    Ok(out)
}

/// Monte Carlo samples of the first clone, interleaved `[x0, p0, x1, p1, ...]`.
///
/// `r` selects the reversible machine when present.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn clone_scatter(
    n: usize,
    m: usize,
    eta: f64,
    r: Option<f64>,
    alpha_x: f64,
    alpha_p: f64,
    shots: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    let p = params(n, m, eta, r).with_alpha(alpha_x, alpha_p);
    let machine = build_cloner(&p).map_err(js)?;
    let samples = sample_outputs(&machine.circuit, shots, seed).map_err(js)?;
    let first = machine
        .circuit
        .outputs()
        .iter()
        .position(|&(role, _)| role == Role::Clone)
        .ok_or_else(|| JsError::new("machine has no clone output"))?;
    Ok(samples[first].iter().flat_map(|&(x, p)| [x, p]).collect())
}
