//! Independent oracles for the frozen example values.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use cvclone::circuits::{solve_gain, solve_reflectivity};
use cvclone::cloning::{fidelity_general, ref_clone_fidelity, ref_clone_variance};
use cvclone::gaussian::{GaussianState, HomodyneOutcome, Quadrature, SymplecticMap};
use cvclone::heisenberg::distribution_row;

/// Two squeezed vacua (one squeezed in X, one in P) mixed on a hand-written
/// balanced beam splitter.
fn epr_by_composition(r: f64) -> DMatrix<f64> {
    let (lo, hi) = ((-2.0 * r).exp(), (2.0 * r).exp());
    let squeezed = DMatrix::from_diagonal(&DVector::from_column_slice(&[hi, lo, lo, hi]));
    let h = 0.5f64.sqrt();
    #[rustfmt::skip]
    let bs = DMatrix::from_row_slice(4, 4, &[
        h, 0.0, h, 0.0,
        0.0, h, 0.0, h,
        -h, 0.0, h, 0.0,
        0.0, -h, 0.0, h,
    ]);
    &bs * squeezed * bs.transpose()
}

fn sum_var(cov: &DMatrix<f64>, a: usize, b: usize, sign: f64) -> f64 {
    cov[(a, a)] + cov[(b, b)] + 2.0 * sign * cov[(a, b)]
}

#[test]
fn epr_matches_squeezer_composition() {
    for r in [0.0, 0.3, 1.0, 2.5] {
        let oracle = epr_by_composition(r);
        let state = GaussianState::epr(r).unwrap();
        assert!((state.cov() - &oracle).amax() < 1e-12 * oracle.amax(), "r = {r}");
    }
    // frozen values at r = 1
    let oracle = epr_by_composition(1.0);
    assert!((sum_var(&oracle, 0, 2, 1.0) - 0.270_670_566_473_225_4).abs() < 1e-12);
    assert!((sum_var(&oracle, 1, 3, -1.0) - 0.270_670_566_473_225_4).abs() < 1e-12);
    assert!((oracle[(0, 0)] - 3.762_195_691_083_631).abs() < 1e-12);
    let s = GaussianState::epr(1.0).unwrap();
    let (mean, var) = s.homodyne_distribution(0, Quadrature::X).unwrap();
    assert_eq!(mean, 0.0);
    assert!((var - 3.762_195_691_083_631).abs() < 1e-12);
    assert!((sum_var(s.cov(), 0, 2, -1.0) - 2.0 * 2f64.exp()).abs() < 1e-12);
}

fn sample_epr(r: f64, shots: usize, seed: u64) -> Vec<[f64; 4]> {
    let factor = epr_by_composition(r).cholesky().unwrap().l();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..shots)
        .map(|_| {
            let z = DVector::from_fn(4, |_, _| StandardNormal.sample(&mut rng));
            let w = &factor * z;
            [w[0], w[1], w[2], w[3]]
        })
        .collect()
}

#[test]
fn conditioning_matches_sampled_regression() {
    let r: f64 = 0.6;
    let samples = sample_epr(r, 200_000, 5);
    let n = samples.len() as f64;
    let mean = |k: usize| samples.iter().map(|s| s[k]).sum::<f64>() / n;
    let (m0, m2) = (mean(0), mean(2));
    let cov = |a: usize, ma: f64, b: usize, mb: f64| samples.iter().map(|s| (s[a] - ma) * (s[b] - mb)).sum::<f64>() / (n - 1.0);
    let residual = cov(2, m2, 2, m2) - cov(0, m0, 2, m2).powi(2) / cov(0, m0, 0, m0);

    let analytic = 1.0 / (2.0 * r).cosh();
    let state = GaussianState::epr(r).unwrap();
    let cond = state
        .condition_on_homodyne(HomodyneOutcome { mode: 0, quadrature: Quadrature::X, value: 1.3 })
        .unwrap();
    let schur = cond.cov()[(0, 0)];
    let symbolic = (2.0 * r).cosh() - (2.0 * r).sinh().powi(2) / (2.0 * r).cosh();
    assert!((schur - symbolic).abs() < 1e-12);
    assert!((schur - analytic).abs() < 1e-12);
    // residual variance of a Gaussian regression has relative sd ≈ √(2/n)
    assert!((residual - schur).abs() < 3.0 * schur * (2.0 / n).sqrt(), "{residual} vs {schur}");
    // conditional mean slope −tanh(2r)
    assert!((cond.mean()[0] + (2.0 * r).tanh() * 1.3).abs() < 1e-12);
}

#[test]
fn beam_splitter_on_coherent_matches_sampling() {
    let t: f64 = 0.35;
    let (x, p) = (1.2, -0.7);
    let state = GaussianState::coherent(x, p).tensor(&GaussianState::vacuum(1).unwrap());
    let out = state.apply(&SymplecticMap::beam_splitter(t).unwrap(), &[0, 1]).unwrap();
    assert!((out.mean()[0] - t.sqrt() * x).abs() < 1e-12);
    assert!((out.mean()[1] - t.sqrt() * p).abs() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let shots = 100_000;
    let (mut sx, mut sxx) = (0.0, 0.0);
    for _ in 0..shots {
        let z: f64 = StandardNormal.sample(&mut rng);
        let a = x + z;
        let b: f64 = StandardNormal.sample(&mut rng);
        let o = t.sqrt() * a + (1.0 - t).sqrt() * b;
        sx += o;
        sxx += o * o;
    }
    let n = shots as f64;
    let mean = sx / n;
    let var = sxx / n - mean * mean;
    assert!((mean - out.mean()[0]).abs() < 3.0 / n.sqrt());
    assert!((var - out.cov()[(0, 0)]).abs() < 3.0 * (2.0 / n).sqrt());
}

/// Chain of 2×2 rotations on an explicit M×M matrix, then equal-weight and
/// orthogonality checks by brute force.
fn brute_force_distribution(m: usize) -> DMatrix<f64> {
    // slot 0 carries the source, slot j the j-th vacuum
    let mut u = DMatrix::<f64>::identity(m, m);
    let mut outputs = Vec::new();
    for k in 1..m {
        let keep = (m - k) as f64 / (m - k + 1) as f64;
        let (c, s) = (keep.sqrt(), (1.0 - keep).sqrt());
        let vac = u.row(k).clone_owned();
        let src = u.row(0).clone_owned();
        let out = &vac * c + &src * s;
        u.set_row(0, &(&vac * -s + &src * c));
        outputs.push(out);
    }
    outputs.push(u.row(0).clone_owned());
    DMatrix::from_rows(&outputs)
}

#[test]
fn distribution_rows_match_brute_force() {
    for m in 1..=12 {
        let brute = brute_force_distribution(m);
        assert!((&brute * brute.transpose() - DMatrix::identity(m, m)).amax() < 1e-12);
        for k in 1..=m {
            assert!((brute[(k - 1, 0)] - (1.0 / m as f64).sqrt()).abs() < 1e-12);
            let mut dense = vec![0.0; m];
            for (col, c) in distribution_row(m, k) {
                dense[col] = c;
            }
            for (col, &c) in dense.iter().enumerate() {
                assert!((brute[(k - 1, col)] - c).abs() < 1e-12, "M={m} row {k} col {col}");
            }
        }
    }
    let three = brute_force_distribution(3);
    assert!((three[(1, 1)] + (1.0f64 / 6.0).sqrt()).abs() < 1e-12);
    assert!((three[(1, 2)] - 0.5f64.sqrt()).abs() < 1e-12);
}

/// `Tr(ρσ) = 4π ∫ W_ρ W_σ` in shot-noise units, evaluated on a grid.
fn grid_overlap(target: (f64, f64), mean: (f64, f64), vx: f64, vp: f64) -> f64 {
    let w = |x: f64, p: f64, m: (f64, f64), a: f64, b: f64| {
        (-(x - m.0).powi(2) / (2.0 * a) - (p - m.1).powi(2) / (2.0 * b)).exp() / (2.0 * std::f64::consts::PI * (a * b).sqrt())
    };
    let h = 0.02;
    let span = 12.0;
    let steps = (2.0 * span / h) as i64;
    let mut total = 0.0;
    for i in 0..=steps {
        let x = -span + i as f64 * h;
        for j in 0..=steps {
            let p = -span + j as f64 * h;
            total += w(x, p, target, 1.0, 1.0) * w(x, p, mean, vx, vp);
        }
    }
    4.0 * std::f64::consts::PI * total * h * h
}

#[test]
fn fidelity_matches_phase_space_overlap() {
    let f = fidelity_general((0.0, 0.0), (2.0, 0.0), 1.0, 1.0).unwrap();
    assert!((f - (-1.0f64).exp()).abs() < 1e-12);
    assert!((grid_overlap((0.0, 0.0), (2.0, 0.0), 1.0, 1.0) - f).abs() < 1e-8);
    let cases = [((0.5, -1.0), (0.2, -0.4), 1.125, 1.4), ((0.0, 0.0), (0.0, 0.0), 1.125, 1.125)];
    for (target, mean, vx, vp) in cases {
        let f = fidelity_general(target, mean, vx, vp).unwrap();
        assert!((grid_overlap(target, mean, vx, vp) - f).abs() < 1e-8);
    }
    assert!((fidelity_general((0.0, 0.0), (0.0, 0.0), 1.125, 1.125).unwrap() - 16.0 / 17.0).abs() < 1e-15);
}

#[test]
fn reflectivity_satisfies_signal_budget() {
    for (n, m, expected) in [(1, 2, 1.0 / 9.0), (2, 3, 1.0 / 25.0)] {
        let r = solve_reflectivity(n, m).unwrap();
        assert!((r - expected).abs() < 1e-15);
        let budget = (n as f64).sqrt() * (1.0 + r.sqrt()) / (1.0 - r).sqrt();
        assert!((budget - (m as f64).sqrt()).abs() < 1e-12);
    }
    assert!((solve_gain(1.0 / 9.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn clone_variance_from_displaced_field_noise() {
    // (1/M)(1+R)/(1−R) + (M−1)/M recomputed from the displaced-field noise
    for m in 2..=10usize {
        let r = solve_reflectivity(1, m).unwrap();
        let mf = m as f64;
        let v = (1.0 + r) / (1.0 - r) / mf + (mf - 1.0) / mf;
        assert!((v - ref_clone_variance(1, m, 1.0).unwrap()).abs() < 1e-12);
        assert!((2.0 / (1.0 + v) - ref_clone_fidelity(1, m, 1.0).unwrap()).abs() < 1e-12);
    }
    assert!((ref_clone_variance(1, 3, 1.0).unwrap() - 11.0 / 9.0).abs() < 1e-15);
}
