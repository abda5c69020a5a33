use std::collections::BTreeSet;

use cvclone::circuits::{
    build_concentration, build_pci_cloner, build_reversible_cloner, Circuit, ClonerParams, Role,
};
use cvclone::cloning::{fidelity_unity_gain, ref_anticlone_variance, ref_clone_variance, CloneReport};
use cvclone::engine::{heisenberg_prefix, run_heisenberg, run_phase_space, OutputMoments};
use cvclone::gaussian::Quadrature;
use cvclone::heisenberg::{InputCatalog, ModeId};
use cvclone::montecarlo::{run_monte_carlo, McConfig};

fn clones(out: &[OutputMoments]) -> impl Iterator<Item = &OutputMoments> {
    out.iter().filter(|o| o.role == Role::Clone)
}

fn anticlones(out: &[OutputMoments]) -> impl Iterator<Item = &OutputMoments> {
    out.iter().filter(|o| o.role == Role::Anticlone)
}

#[test]
fn one_to_one_passes_input_through() {
    let m = build_pci_cloner(&ClonerParams::new(1, 1).with_alpha(0.7, -1.1)).unwrap();
    assert_eq!(m.layout.reflectivity, 0.0);
    assert_eq!(m.layout.gain, 0.0);
    for out in [run_heisenberg(&m.circuit).unwrap(), run_phase_space(&m.circuit).unwrap()] {
        let report = CloneReport::from_moments(&m.params, &out).unwrap();
        assert_eq!(report.outputs.len(), 1);
        assert!((report.outputs[0].fidelity - 1.0).abs() < 1e-12);
    }
}

#[test]
fn two_clones_lossless_and_lossy() {
    for (eta, expected) in [(1.0, 1.125), (0.5, 1.25)] {
        let m = build_pci_cloner(&ClonerParams::new(1, 2).with_eta(eta)).unwrap();
        for out in [run_heisenberg(&m.circuit).unwrap(), run_phase_space(&m.circuit).unwrap()] {
            for o in clones(&out) {
                assert!((o.moments.var_x - expected).abs() < 1e-12, "eta {eta}: {:?}", o.moments);
                assert!((o.moments.var_p - expected).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn concentration_of_four_replicas() {
    let mut cat = InputCatalog::new();
    let ids: Vec<ModeId> = (0..4).map(|k| cat.add_coherent(format!("a{k}"), 0.5, -0.25)).collect();
    let circuit = Circuit {
        catalog: cat,
        elements: build_concentration(&ids),
        clones: vec![ids[0]],
        anticlones: vec![],
    };
    let run = heisenberg_prefix(&circuit, circuit.elements.len(), None).unwrap();
    let bright = run.mode(ids[0]).unwrap();
    for &id in &ids {
        assert!((bright.x.coefficient(id, Quadrature::X) - 0.5).abs() < 1e-12);
    }
    for out in [run_heisenberg(&circuit).unwrap(), run_phase_space(&circuit).unwrap()] {
        let m = out[0].moments;
        assert!((m.mean_x - 1.0).abs() < 1e-12 && (m.mean_p + 0.5).abs() < 1e-12);
        assert!((m.var_x - 1.0).abs() < 1e-12 && (m.var_p - 1.0).abs() < 1e-12);
    }
}

#[test]
fn displaced_field_coefficients() {
    let params = ClonerParams::new(1, 2);
    let m = build_pci_cloner(&params).unwrap();
    let l = &m.layout;
    let run = heisenberg_prefix(&m.circuit, l.displaced_after, None).unwrap();
    let disp = run.mode(l.displaced).unwrap();
    let (r, g) = (l.reflectivity, l.gain);
    let c_in = l.signal[0];
    let c_conj = l.conjugate[0];
    // transmitted arm plus fed-forward signal: √(1−R) + g√R/√2
    let expected = (1.0 - r).sqrt() + g * r.sqrt() / 2f64.sqrt();
    assert!((disp.x.coefficient(c_in, Quadrature::X) - expected).abs() < 1e-14);
    assert!((expected - 1.0 / (1.0 - r).sqrt()).abs() < 1e-14);
    // conjugate enters as a creation operator: + on X, − on P
    let k = r.sqrt() / (1.0 - r).sqrt();
    assert!((disp.x.coefficient(c_conj, Quadrature::X) - k).abs() < 1e-14);
    assert!((disp.p.coefficient(c_conj, Quadrature::P) + k).abs() < 1e-14);
    assert!(disp.x.coefficient(l.variable_port, Quadrature::X).abs() < 1e-14);
    assert!(disp.p.coefficient(l.variable_port, Quadrature::P).abs() < 1e-14);
    assert!((disp.commutator() - 1.0).abs() < 1e-12);
}

#[test]
fn lossless_records_have_no_detector_term() {
    let m = build_pci_cloner(&ClonerParams::new(1, 3)).unwrap();
    let run = heisenberg_prefix(&m.circuit, m.layout.displaced_after, None).unwrap();
    let xm = &run.records[0];
    let r = m.layout.reflectivity;
    let h = 0.5f64.sqrt();
    assert_eq!(xm.len(), 3);
    assert!((xm.coefficient(m.layout.signal[0], Quadrature::X) - h * r.sqrt()).abs() < 1e-14);
    assert!((xm.coefficient(m.layout.variable_port, Quadrature::X) - h * (1.0 - r).sqrt()).abs() < 1e-14);
    assert!((xm.coefficient(m.layout.conjugate[0], Quadrature::X) - h).abs() < 1e-14);
    let pm = &run.records[1];
    assert!((pm.coefficient(m.layout.conjugate[0], Quadrature::P) + h).abs() < 1e-14);
}

#[test]
fn reversible_machine_clones_match_irreversible() {
    let base = ClonerParams::new(2, 5).with_alpha(1.0, 2.0);
    let plain = run_heisenberg(&build_pci_cloner(&base).unwrap().circuit).unwrap();
    for r in [0.0, 1.0, 3.0] {
        let rev = run_phase_space(&build_reversible_cloner(&base.with_epr(r)).unwrap().circuit).unwrap();
        for (a, b) in clones(&plain).zip(clones(&rev)) {
            assert!(a.moments.max_deviation(&b.moments) < 1e-12);
        }
    }
}

#[test]
fn anticlone_examples() {
    let m = build_reversible_cloner(&ClonerParams::new(1, 2).with_epr(0.0).with_alpha(1.0, 1.5)).unwrap();
    for out in [run_heisenberg(&m.circuit).unwrap(), run_phase_space(&m.circuit).unwrap()] {
        for o in anticlones(&out) {
            assert!((o.moments.var_x - 2.125).abs() < 1e-12);
            assert!((o.moments.mean_x - 1.0).abs() < 1e-12 && (o.moments.mean_p + 1.5).abs() < 1e-12);
        }
    }
    let m = build_reversible_cloner(&ClonerParams::new(1, 2).with_epr(5.0)).unwrap();
    for o in anticlones(&run_heisenberg(&m.circuit).unwrap()) {
        assert!((o.moments.var_x - ref_clone_variance(1, 2, 1.0).unwrap()).abs() < 1e-4);
    }
}

#[test]
fn lossy_reversible_machine_keeps_unity_gain() {
    let params = ClonerParams::new(1, 3).with_epr(0.8).with_eta(0.7).with_alpha(-2.0, 0.5);
    let m = build_reversible_cloner(&params).unwrap();
    let h = run_heisenberg(&m.circuit).unwrap();
    let p = run_phase_space(&m.circuit).unwrap();
    let report = CloneReport::from_moments(&params, &h).unwrap();
    for (o, (a, b)) in report.outputs.iter().zip(h.iter().zip(&p)) {
        assert!(a.moments.max_deviation(&b.moments) < 1e-10);
        assert!(o.reference.dev_var_x < 1e-12 && o.reference.dev_var_p < 1e-12, "{o:?}");
        assert!(o.reference.dev_fidelity < 1e-12);
    }
}

#[test]
fn heisenberg_subset_of_wide_distribution() {
    let m = build_pci_cloner(&ClonerParams::new(1, 100_000)).unwrap();
    let first = m.circuit.clones[0];
    let last = *m.circuit.clones.last().unwrap();
    let wanted: BTreeSet<ModeId> = [first, last].into_iter().collect();
    let run = heisenberg_prefix(&m.circuit, m.circuit.elements.len(), Some(&wanted)).unwrap();
    assert!(run.modes.contains_key(&first) && run.modes.contains_key(&last));
    let v = cvclone::heisenberg::evaluate_moments(run.mode(first).unwrap(), &m.circuit.catalog).unwrap();
    let f = fidelity_unity_gain(v.var_x, v.var_p).unwrap();
    assert!((f - 0.8).abs() < 1e-4);
}

#[test]
fn monte_carlo_two_clones() {
    let m = build_pci_cloner(&ClonerParams::new(1, 2).with_alpha(2.0, 1.0)).unwrap();
    let est = run_monte_carlo(&m.circuit, (2.0, 1.0), &McConfig::new(100_000, 11)).unwrap();
    for o in &est.outputs {
        assert!((o.var_x - 1.125).abs() < 3.0 * o.se_var_x, "{o:?}");
        assert!((o.var_p - 1.125).abs() < 3.0 * o.se_var_p, "{o:?}");
        assert!((o.mean.0 - 2.0).abs() < 3.0 * o.se_mean.0);
        assert!((o.mean.1 - 1.0).abs() < 3.0 * o.se_mean.1);
    }
}

#[test]
fn monte_carlo_anticlones() {
    let m = build_reversible_cloner(&ClonerParams::new(1, 2).with_epr(1.0).with_alpha(0.5, 1.0)).unwrap();
    let est = run_monte_carlo(&m.circuit, (0.5, 1.0), &McConfig::new(100_000, 12)).unwrap();
    let target = 1.0 + 1.0 / 8.0 + (-2.0f64).exp();
    assert!((ref_anticlone_variance(1, 2, 1.0).unwrap() - target).abs() < 1e-15);
    for o in est.outputs.iter().filter(|o| o.role == Role::Anticlone) {
        assert!((o.var_x - target).abs() < 3.0 * o.se_var_x, "{o:?}");
        assert!((o.var_p - target).abs() < 3.0 * o.se_var_p, "{o:?}");
        assert!((o.mean.1 + 1.0).abs() < 3.0 * o.se_mean.1);
    }
}

#[test]
fn monte_carlo_is_reproducible() {
    let m = build_reversible_cloner(&ClonerParams::new(2, 3).with_epr(0.5)).unwrap();
    let cfg = McConfig::new(20_000, 99);
    let a = run_monte_carlo(&m.circuit, (0.0, 0.0), &cfg).unwrap();
    let b = run_monte_carlo(&m.circuit, (0.0, 0.0), &cfg).unwrap();
    assert_eq!(a, b);
    let c = run_monte_carlo(&m.circuit, (0.0, 0.0), &McConfig::new(20_000, 100)).unwrap();
    assert_ne!(a, c);
}
