use rustfft::num_complex::Complex;

use kam_core::diffeo::{conjugate_action, invert};
use kam_core::factory::{
    conjugacy_residuals, flow_integrate, make_affine, make_conjugated_perturbation, normalize_input, GeneratorSpec,
};
use kam_core::kam::{run, verify_decay, KamSchedule, TraceRecord};
use kam_core::scalar::norm2;
use kam_core::spectral::{eval_point, SpectralField};
use kam_core::torus_algebra::{EigenData, EigenSelector, ToralAutomorphism};

fn fib() -> (ToralAutomorphism, EigenData<f64>) {
    let a = ToralAutomorphism::new(vec![vec![2, 1], vec![1, 1]]).unwrap();
    let e = EigenData::new(&a, EigenSelector::Largest).unwrap();
    (a, e)
}

fn spec(amplitude: f64) -> GeneratorSpec {
    GeneratorSpec { seed: 1, max_mode: 3, amplitude, decay: 1.0, time_scale: 1.0 }
}

fn wrap(x: f64) -> f64 {
    x - x.round()
}

#[test]
fn golden_run_invariants() {
    let (a, eig) = fib();
    let sched = KamSchedule::practical(2);
    let p = make_conjugated_perturbation(&a, &eig.v_unit, &spec(1e-3), sched.cutoff_cap).unwrap();
    assert!(p.relation_residual < 1e-10, "{:e}", p.relation_residual);
    let n = normalize_input(&p.pair, &a, &eig, sched.r).unwrap();
    assert!(n.state.mean_defect(&eig) < 1e-11);
    assert!(n.state.drift_defect(&eig) < 1e-11);
    let mut sink: Vec<TraceRecord> = Vec::new();
    let out = run(n.state.clone(), &eig, &sched, &mut sink).unwrap();
    assert!(out.converged);
    assert_eq!(sink, out.trace);

    for r in &out.reports {
        assert!(r.mean_defect <= 1e-11, "{:e}", r.mean_defect);
        assert!(r.h_c1 < 0.5);
    }
    let drift: Vec<f64> = out.reports.iter().map(|r| r.drift_change).collect();
    for w in drift[1..].windows(2) {
        assert!(w[1] <= w[0], "{drift:?}");
    }
    let res = conjugacy_residuals(&out.h_total, &p.pair.atil, &n.state.vtil(), &out.v_star, 24);
    assert!(res.map <= 10.0 * sched.target_tol && res.flow <= 10.0 * sched.target_tol, "{res:?}");

    let decay = verify_decay(&out.trace, &sched);
    assert!(decay.conforming, "{decay:?}");
    assert!(decay.c0_exponent.unwrap() >= 1.0);

    let mut flat = out.trace.clone();
    for r in &mut flat {
        r.eps0 = 1e-3;
        r.eta0 = 1e-3;
    }
    assert!(!verify_decay(&flat, &sched).conforming);
}

#[test]
fn zero_perturbation_needs_no_step() {
    let (a, eig) = fib();
    let sched = KamSchedule::practical(2);
    let p = make_conjugated_perturbation(&a, &eig.v_unit, &spec(0.0), 16).unwrap();
    assert!(p.g.periodic.max_coeff() == 0.0);
    let n = normalize_input(&p.pair, &a, &eig, sched.r).unwrap();
    let out = run(n.state, &eig, &sched, &mut Vec::new()).unwrap();
    assert_eq!(out.steps, 0);
    assert!(out.delta.is_none());
    assert!(verify_decay(&out.trace, &sched).conforming);
}

#[test]
fn inverse_conjugation_recovers_affine_model() {
    let (a, eig) = fib();
    let p = make_conjugated_perturbation(&a, &eig.v_unit, &spec(1e-3), 32).unwrap();
    let g_inv = invert(&p.g, 32).unwrap().map;
    let back = conjugate_action(&g_inv, &p.pair.atil, &p.pair.vtil, 32).unwrap();
    assert_eq!(back.atil.linear, *a.matrix());
    assert!(back.atil.periodic.max_coeff() < 1e-12, "{:e}", back.atil.periodic.max_coeff());
    let dv = back.vtil.add_constant(&eig.v_unit.iter().map(|x| -x).collect::<Vec<_>>());
    assert!(dv.max_coeff() < 1e-12);
    assert!(dv.mean().iter().all(|x| x.abs() < 1e-12));
}

#[test]
fn flow_commutes_with_map_up_to_time_dilation() {
    let (a, eig) = fib();
    let p = make_conjugated_perturbation(&a, &eig.v_unit, &spec(1e-3), 32).unwrap();
    let t = 0.1;
    for x in [[0.1, 0.2], [0.75, 0.4], [0.33, 0.91]] {
        let lhs = p.pair.atil.apply(&flow_integrate(&p.pair.vtil, &x, t, 1e-3).unwrap());
        let rhs = flow_integrate(&p.pair.vtil, &p.pair.atil.apply(&x), eig.lambda * t, 1e-3).unwrap();
        let err = norm2(&[wrap(lhs[0] - rhs[0]), wrap(lhs[1] - rhs[1])]);
        assert!(err < 1e-6, "{err:e}");
    }
}

#[test]
fn rk4_is_fourth_order() {
    let mut f = SpectralField::<f64>::constant(2, 2, &[0.6, 0.3]);
    f.set_coeff(&[1, 1], vec![Complex::new(0.1, 0.05), Complex::new(-0.07, 0.02)]).unwrap();
    let x0 = [0.2, 0.7];
    let reference = flow_integrate(&f, &x0, 1.0, 1e-2 / 4.0).unwrap();
    let err = |dt: f64| {
        let x = flow_integrate(&f, &x0, 1.0, dt).unwrap();
        norm2(&[wrap(x[0] - reference[0]), wrap(x[1] - reference[1])])
    };
    let ratio = err(1e-2) / err(5e-3);
    assert!((ratio - 16.0).abs() < 3.0, "{ratio}");
    assert!(flow_integrate(&f, &x0, 1.0, 0.02).is_err());
    let fv = eval_point(&f, &x0);
    assert!(fv.iter().all(|v| v.is_finite()));
}

#[test]
fn normalization_bookkeeping() {
    let (a, eig) = fib();
    let v2: Vec<f64> = eig.v_unit.iter().map(|x| 2.0 * x).collect();
    let pair = make_affine(&a, &v2, 8).unwrap();
    let n = normalize_input(&pair, &a, &eig, 4).unwrap();
    assert!((n.scale - 0.5).abs() < 1e-15);
    assert!(n.state.w.max_coeff() < 1e-14 && norm2(n.state.w.mean()) < 1e-14, "{:?}", n.state.w.mean());

    // constant offset c: v0 = v_unit + P_V c after rescaling, ŵ(0) = P_Vperp c
    let c = [0.01, -0.02];
    let mut pair = make_affine(&a, &eig.v_unit, 8).unwrap();
    pair.vtil = pair.vtil.add_constant(&c);
    let n = normalize_input(&pair, &a, &eig, 4).unwrap();
    let pv = eig.p_v.matvec(&c);
    let expect_v: Vec<f64> = eig.v_unit.iter().zip(&pv).map(|(x, y)| (x + y) * n.scale).collect();
    let pperp = eig.p_vperp.matvec(&c);
    for i in 0..2 {
        assert!((n.state.v[i] - expect_v[i]).abs() < 1e-14);
        assert!((n.state.w.mean()[i] - n.scale * pperp[i]).abs() < 1e-14);
    }
    assert!((norm2(&n.state.v) - 1.0).abs() < 1e-14);

    // idempotent
    let again_pair = kam_core::factory::ActionPair { atil: pair.atil.clone(), vtil: n.state.vtil(), lambda: pair.lambda };
    let again = normalize_input(&again_pair, &a, &eig, 4).unwrap();
    assert!((again.scale - 1.0).abs() < 1e-13);
    assert!(again.state.w.max_coeff_diff(&n.state.w) < 1e-13);
    for i in 0..2 {
        assert!((again.state.v[i] - n.state.v[i]).abs() < 1e-13);
    }
}

#[test]
fn far_input_rejected() {
    let (a, eig) = fib();
    let mut pair = make_affine(&a, &eig.v_unit, 8).unwrap();
    let mut w = SpectralField::<f64>::zero_vector_field(2, 8);
    w.set_coeff(&[1, 0], vec![Complex::new(0.5, 0.0), Complex::new(0.5, 0.0)]).unwrap();
    pair.vtil = pair.vtil.add(&w);
    assert!(matches!(normalize_input(&pair, &a, &eig, 4), Err(kam_core::KamError::InputTooFar(_))));
}
