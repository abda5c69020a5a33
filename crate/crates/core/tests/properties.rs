use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use cvclone::circuits::{build_cloner, solve_reflectivity, ClonerParams};
use cvclone::cloning::{
    fidelity_unity_gain, ref_anticlone_fidelity, ref_clone_fidelity, ref_clone_variance,
};
use cvclone::engine::{distribution_matrix, heisenberg_prefix, run_heisenberg, run_phase_space, run_phase_space_state};
use cvclone::gaussian::{GaussianState, HomodyneOutcome, Quadrature, SymplecticMap};
use cvclone::heisenberg::{beam_split, distribute, InputCatalog, ModeExpansion};

fn random_state(r: f64, x: f64, p: f64) -> GaussianState {
    GaussianState::epr(r)
        .unwrap()
        .tensor(&GaussianState::coherent(x, p))
        .tensor(&GaussianState::vacuum(1).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn beam_splitters_are_symplectic(t in 0.0f64..=1.0) {
        prop_assert!(SymplecticMap::beam_splitter(t).unwrap().symplectic_defect() < 1e-12);
    }

    #[test]
    fn splitters_preserve_uncertainty(
        r in 0.0f64..2.0,
        ts in prop::collection::vec((0.0f64..=1.0, 0usize..4, 0usize..4), 1..8),
    ) {
        let mut s = random_state(r, 0.3, -0.2);
        for (t, a, b) in ts {
            if a == b { continue; }
            s = s.apply(&SymplecticMap::beam_splitter(t).unwrap(), &[a, b]).unwrap();
            prop_assert!(s.satisfies_uncertainty());
        }
    }

    #[test]
    fn conditioned_cov_ignores_outcome(r in 0.0f64..2.0, t in 0.0f64..1.0, mode in 0usize..4) {
        let s = random_state(r, 1.0, 2.0)
            .apply(&SymplecticMap::beam_splitter(t).unwrap(), &[1, 2])
            .unwrap();
        let covs: Vec<DMatrix<f64>> = [-2.0, -0.5, 0.0, 0.7, 3.0]
            .iter()
            .map(|&v| s.condition_on_homodyne(HomodyneOutcome { mode, quadrature: Quadrature::P, value: v }).unwrap().cov().clone())
            .collect();
        for c in &covs[1..] {
            prop_assert!((c - &covs[0]).amax() < 1e-12);
        }
    }

    #[test]
    fn composition_equals_sequential(t1 in 0.0f64..=1.0, t2 in 0.0f64..=1.0, dx in -2.0f64..2.0) {
        let s = random_state(0.4, 0.5, 0.1).reduced(&[0, 1]).unwrap();
        let first = SymplecticMap::beam_splitter(t1).unwrap();
        let mut second = SymplecticMap::beam_splitter(t2).unwrap();
        second.displacement = DVector::from_column_slice(&[dx, 0.0, 0.0, -dx]);
        let seq = s.apply(&first, &[0, 1]).unwrap().apply(&second, &[0, 1]).unwrap();
        let once = s.apply(&first.then(&second), &[0, 1]).unwrap();
        prop_assert!((seq.mean() - once.mean()).amax() < 1e-12);
        prop_assert!((seq.cov() - once.cov()).amax() < 1e-12);
    }

    #[test]
    fn expansions_stay_canonical(t in 0.0f64..=1.0, m in 1usize..20) {
        let mut cat = InputCatalog::new();
        let a = cat.add_coherent("a", 0.0, 0.0);
        let b = cat.add_vacuum("b");
        let vac: Vec<_> = (0..m).map(|k| cat.add_vacuum(format!("v{k}"))).collect();
        let (o1, o2) = beam_split(&ModeExpansion::input(a), &ModeExpansion::input(b), t).unwrap();
        prop_assert!((o1.commutator() - 1.0).abs() < 1e-12);
        prop_assert!((o2.commutator() - 1.0).abs() < 1e-12);
        for out in distribute(&o1, m, &vac).unwrap() {
            prop_assert!((out.commutator() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn engines_agree_on_random_machines(
        n in 1usize..4,
        extra in 0usize..6,
        eta in 0.3f64..=1.0,
        r in prop::option::of(0.0f64..3.0),
        x in -3.0f64..3.0,
        p in -3.0f64..3.0,
    ) {
        let params = ClonerParams { n, m: n + extra, eta, epr_r: r, alpha: (x, p) };
        let machine = build_cloner(&params).unwrap();
        let h = run_heisenberg(&machine.circuit).unwrap();
        let s = run_phase_space(&machine.circuit).unwrap();
        for (a, b) in h.iter().zip(&s) {
            prop_assert!(a.moments.max_deviation(&b.moments) < 1e-10);
            prop_assert!(b.moments.cov_xp.abs() < 1e-10);
        }
        let clone_mean = h[0].moments;
        prop_assert!((clone_mean.mean_x - x).abs() < 1e-12 && (clone_mean.mean_p - p).abs() < 1e-12);
        let run = run_phase_space_state(&machine.circuit).unwrap();
        prop_assert!(run.state.satisfies_uncertainty());
        let outs: Vec<_> = machine.circuit.outputs().into_iter().map(|(_, m)| m).collect();
        prop_assert!(run.output_state(&outs).unwrap().satisfies_uncertainty());
    }

    #[test]
    fn vacuum_port_cancels(n in 1usize..6, extra in 0usize..40, eta in 0.05f64..=1.0) {
        let machine = build_cloner(&ClonerParams::new(n, n + extra).with_eta(eta)).unwrap();
        let l = &machine.layout;
        let run = heisenberg_prefix(&machine.circuit, l.displaced_after, None).unwrap();
        let d = run.mode(l.displaced).unwrap();
        prop_assert!(d.x.coefficient(l.variable_port, Quadrature::X).abs() < 1e-14);
        prop_assert!(d.p.coefficient(l.variable_port, Quadrature::P).abs() < 1e-14);
    }
}

#[test]
fn signal_budget_holds_for_every_pair() {
    for n in 1..=64usize {
        for m in n..=64usize {
            let r = solve_reflectivity(n, m).unwrap();
            let budget = (n as f64).sqrt() * (1.0 + r.sqrt()) / (1.0 - r).sqrt();
            assert!((budget - (m as f64).sqrt()).abs() < 1e-12, "N={n} M={m}");
        }
    }
}

#[test]
fn distribution_matrices_are_orthogonal() {
    for m in 1..=64 {
        let u = distribution_matrix(m);
        assert!((&u * u.transpose() - DMatrix::identity(m, m)).amax() < 1e-12);
        for k in 0..m {
            assert!((u[(k, 0)] - (1.0 / m as f64).sqrt()).abs() < 1e-12);
        }
    }
}

#[test]
fn closed_forms_are_consistent() {
    for n in 1..=8usize {
        for m in n..=64usize {
            for eta in [0.6, 0.8, 1.0] {
                let v = ref_clone_variance(n, m, eta).unwrap();
                let f = ref_clone_fidelity(n, m, eta).unwrap();
                assert!((fidelity_unity_gain(v, v).unwrap() - f).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn clone_fidelity_monotonicity() {
    for eta in [0.6, 0.8, 1.0] {
        for n in 1..=6usize {
            for m in n..64usize {
                assert!(ref_clone_fidelity(n, m + 1, eta).unwrap() < ref_clone_fidelity(n, m, eta).unwrap());
            }
        }
        for m in 2..=32usize {
            for n in 1..m {
                assert!(ref_clone_fidelity(n + 1, m, eta).unwrap() > ref_clone_fidelity(n, m, eta).unwrap());
            }
        }
    }
    for m in 2..=16 {
        assert!(ref_clone_fidelity(1, m, 0.8).unwrap() > ref_clone_fidelity(1, m, 0.6).unwrap());
    }
}

#[test]
fn anticlones_trail_clones_at_finite_squeezing() {
    for n in 1..=4usize {
        for m in n..=16usize {
            for r in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
                let gap = ref_clone_fidelity(n, m, 1.0).unwrap() - ref_anticlone_fidelity(n, m, r).unwrap();
                assert!(gap > 0.0);
                if r == 8.0 {
                    assert!(gap < 1e-6);
                }
            }
        }
    }
}

#[test]
fn monte_carlo_ignores_thread_count() {
    use cvclone::montecarlo::{run_monte_carlo, McConfig};
    let m = build_cloner(&ClonerParams::new(1, 3).with_epr(0.7).with_alpha(0.5, -0.5)).unwrap();
    let cfg = McConfig::new(3 * cvclone::montecarlo::CHUNK_SHOTS + 17, 4);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_monte_carlo(&m.circuit, (0.5, -0.5), &cfg).unwrap())
    };
    assert_eq!(run(1), run(4));
}
