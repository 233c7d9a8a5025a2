use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;

use crate::cohomology::{solve_flow_coboundary, solve_zero_mode};
use crate::factory::random_decaying_field;
use crate::kam::theoretical_parameters;
use crate::lattice::{for_each_in_ball, norm_sq};
use crate::linalg::Mat;
use crate::spectral::{cr_norms, seminorm, smooth_project, GridSample, OperatorKind, OperatorSpec, SpectralField};
use crate::torus_algebra::{EigenData, EigenSelector, ToralAutomorphism};

/// One row of the self-test table.
#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub detail: String,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

/// Reference matrices for d = 2, 3, 4.
pub fn reference_matrices() -> Vec<Vec<Vec<i64>>> {
    vec![
        vec![vec![2, 1], vec![1, 1]],
        vec![vec![0, 0, 1], vec![1, 0, -1], vec![0, 1, 3]],
        vec![vec![0, 0, 0, 1], vec![1, 0, 0, 1], vec![0, 1, 0, 0], vec![0, 0, 1, 0]],
    ]
}

/// `Σ_{0<|n|≤K} |n|^{-(d+1)}`, the constant relating `‖·‖_r` and
/// `|·|_{r+d+1}` for fields supported in the ball of radius `K`.
pub fn lattice_zeta(dim: usize, cutoff: u32) -> f64 {
    let mut s = 0.0;
    for_each_in_ball(dim, i64::from(cutoff).pow(2), false, |n| {
        s += (norm_sq(n) as f64).powf(-(dim as f64 + 1.0) / 2.0);
    });
    s
}

/// Slack-normalized ratios `lhs / rhs` of the four smoothing bounds for one
/// field and operator at `(a, b)`; each must be at most `1 + 1e-12`.
/// The `C^r` forms use the constant `(2π)^r·ζ`, ζ from [`lattice_zeta`].
pub fn smoothing_ratios(f: &SpectralField<f64>, op: &OperatorSpec, a: usize, b: usize) -> [f64; 4] {
    let d = f.dim();
    let (n, m) = (f64::from(op.n), op.inner_radius::<f64>());
    let zeta = lattice_zeta(d, f.cutoff());
    let tau = std::f64::consts::TAU;
    let (af, bf, df) = (a as f64, b as f64, d as f64);
    let pos = |x: f64| if x > 0.0 { x } else { f64::MIN_POSITIVE };
    let norms = cr_norms(f, a + b);
    let inside = OperatorSpec { kind: undotted(op.kind), ..op.clone() };
    let outside = OperatorSpec { kind: dotted(op.kind), ..op.clone() };
    let s = smooth_project(f, &inside);
    let sd = smooth_project(f, &outside);
    let s_norm = cr_norms(&s, a + b)[a + b];
    let sd_norm = cr_norms(&sd, a - b)[a - b];
    [
        seminorm(&s, af + bf) / pos(n.powf(bf) * seminorm(f, af)),
        s_norm / pos(tau.powf(af + bf) * zeta * n.powf(bf + df + 1.0) * norms[a]),
        seminorm(&sd, af - bf) / pos(m.powf(-bf) * seminorm(f, af)),
        sd_norm / pos(tau.powf(af - bf) * zeta * m.powf(-bf + df + 1.0) * norms[a]),
    ]
}

fn undotted(k: OperatorKind) -> OperatorKind {
    match k {
        OperatorKind::SDot => OperatorKind::S,
        OperatorKind::TDot => OperatorKind::T,
        OperatorKind::TSharpDot => OperatorKind::TSharp,
        k => k,
    }
}

fn dotted(k: OperatorKind) -> OperatorKind {
    match undotted(k) {
        OperatorKind::S => OperatorKind::SDot,
        OperatorKind::T => OperatorKind::TDot,
        _ => OperatorKind::TSharpDot,
    }
}

fn smoothing_suite() -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut cases, mut failures, mut worst) = (0, 0, 0.0f64);
    let mats = reference_matrices();
    for (rows, max_mode, ns) in [(&mats[0], 6u32, [2u32, 4]), (&mats[1], 3, [1, 2])] {
        let aut = ToralAutomorphism::new(rows.clone()).expect("reference matrix");
        let d = aut.dim();
        for _ in 0..10 {
            let f: SpectralField<f64> = random_decaying_field(&mut rng, d, max_mode, 1.0, 0.3, true);
            for kind in [OperatorKind::S, OperatorKind::T, OperatorKind::TSharp] {
                for n in ns {
                    let op = OperatorSpec::new(kind, n, Some(&aut));
                    let parts = f
                        .filter(true, |k| k.iter().all(|&x| x == 0))
                        .add(&smooth_project(&f, &op))
                        .add(&smooth_project(&f, &OperatorSpec { kind: dotted(kind), ..op.clone() }));
                    cases += 1;
                    if parts.max_coeff_diff(&f) != 0.0 {
                        failures += 1;
                    }
                    for (a, b) in [(1, 1), (2, 1), (2, 2)] {
                        for r in smoothing_ratios(&f, &op, a, b) {
                            cases += 1;
                            worst = worst.max(r);
                            if r > 1.0 + 1e-12 {
                                failures += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    SuiteResult { name: "smoothing inequalities", cases, failures, detail: format!("max lhs/rhs {worst:.3e}") }
}

fn coboundary_suite() -> SuiteResult {
    let aut = ToralAutomorphism::new(reference_matrices()[0].clone()).expect("reference matrix");
    let eig = EigenData::<f64>::new(&aut, EigenSelector::Largest).expect("eigendata");
    let v = eig.v_unit.clone();
    let (mut cases, mut failures, mut worst) = (0, 0, 0.0f64);
    let mut check = |err: f64, tol: f64| {
        cases += 1;
        worst = worst.max(err);
        if !(err <= tol) {
            failures += 1;
        }
    };
    for k in [[1i64, 0], [0, 1], [2, -3], [-3, 5]] {
        let mut w = SpectralField::<f64>::zero_vector_field(2, 8);
        let c = vec![Complex::new(0.3, -0.2), Complex::new(-0.1, 0.05)];
        w.set_coeff(&k, c.clone()).expect("mode in range");
        let sol = solve_flow_coboundary(&w, &v, &OperatorSpec::s(8)).expect("solvable");
        let div = Complex::new(0.0, std::f64::consts::TAU * (k[0] as f64 * v[0] + k[1] as f64 * v[1]));
        let got = sol.h.coeff(&k);
        let err = (0..2).map(|i| (got[i] - (-c[i] / div)).norm()).fold(0.0, f64::max);
        check(err, 1e-12);
        let res = sol.h.directional_derivative(&v).add(&smooth_project(&w, &OperatorSpec::s(8)));
        check(res.max_coeff(), 1e-13);
    }
    let m = aut.matrix().to_real::<f64>().sub(&Mat::identity(2));
    for b in [[1.0, 0.0], [0.3, -0.7]] {
        let h = solve_zero_mode(&b, &aut).expect("ergodic");
        let back = m.matvec(&h);
        check((back[0] - b[0]).abs().max((back[1] - b[1]).abs()), 1e-12);
    }
    SuiteResult { name: "coboundary oracles", cases, failures, detail: format!("max error {worst:.3e}") }
}

fn parseval_suite() -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut cases, mut failures, mut worst) = (0, 0, 0.0f64);
    for d in [2usize, 3] {
        for _ in 0..10 {
            let f: SpectralField<f64> = random_decaying_field(&mut rng, d, 5, 1.0, 0.5, true);
            let grid = GridSample::synthesize(&f, 16).expect("grid");
            let pts = grid.point_count() as f64;
            let energy_grid: f64 = grid.values().iter().flat_map(|c| c.iter()).map(|x| x * x).sum::<f64>() / pts;
            let mean2: f64 = f.mean().iter().map(|x| x * x).sum();
            let modes: f64 = f.modes().map(|(_, c)| c.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum();
            let rel = (energy_grid - (mean2 + 2.0 * modes)).abs() / energy_grid;
            cases += 1;
            worst = worst.max(rel);
            if rel > 1e-12 {
                failures += 1;
            }
        }
    }
    SuiteResult { name: "parseval", cases, failures, detail: format!("max relative error {worst:.3e}") }
}

fn projector_suite() -> SuiteResult {
    let (mut cases, mut failures, mut worst) = (0, 0, 0.0f64);
    for rows in reference_matrices() {
        let aut = ToralAutomorphism::new(rows).expect("reference matrix");
        let d = aut.dim();
        let eig = EigenData::<f64>::new(&aut, EigenSelector::Largest).expect("eigendata");
        let id = Mat::identity(d);
        let checks = [
            eig.p_v.matmul(&eig.p_v).sub(&eig.p_v).max_abs(),
            eig.p_vperp.matmul(&eig.p_vperp).sub(&eig.p_vperp).max_abs(),
            eig.p_v.add(&eig.p_vperp).sub(&id).max_abs(),
            eig.a.matmul(&eig.p_v).sub(&eig.p_v.matmul(&eig.a)).max_abs(),
            eig.p_v.matmul(&eig.p_vperp).max_abs(),
            eig.residual(),
        ];
        for e in checks {
            cases += 1;
            worst = worst.max(e);
            if !(e <= 1e-12) {
                failures += 1;
            }
        }
    }
    SuiteResult { name: "projector algebra", cases, failures, detail: format!("max defect {worst:.3e}") }
}

fn parameter_suite() -> SuiteResult {
    let (mut cases, mut failures) = (0, 0);
    let mut detail = Vec::new();
    for d in 2..=4usize {
        cases += 1;
        match theoretical_parameters(d, 0.5) {
            Ok(p) => {
                let ok = p.tau == (d - 1) as f64
                    && p.r == 42 * (d + 1)
                    && p.k == 6 * d + 6
                    && p.y_window.0 < p.y_window.1;
                if !ok {
                    failures += 1;
                }
                detail.push(format!(
                    "d={d}: tau={} r={} k={} y in [{:.3}, {:.3}]",
                    p.tau, p.r, p.k, p.y_window.0, p.y_window.1
                ));
            }
            Err(e) => {
                failures += 1;
                detail.push(format!("d={d}: {e}"));
            }
        }
    }
    SuiteResult { name: "parameter algebra", cases, failures, detail: detail.join("; ") }
}

/// Runs every embedded suite.
pub fn run_selftest() -> Vec<SuiteResult> {
    vec![smoothing_suite(), coboundary_suite(), parseval_suite(), projector_suite(), parameter_suite()]
}

/// Fixed-width pass/fail table.
pub fn format_table(rows: &[SuiteResult]) -> String {
    let mut out = format!("{:<24} {:>6} {:>8}  {:<4}  {}\n", "suite", "cases", "failures", "", "detail");
    for r in rows {
        let status = if r.passed() { "PASS" } else { "FAIL" };
        out.push_str(&format!("{:<24} {:>6} {:>8}  {:<4}  {}\n", r.name, r.cases, r.failures, status, r.detail));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        let rows = run_selftest();
        let table = format_table(&rows);
        assert!(rows.iter().all(SuiteResult::passed), "{table}");
        assert!(table.contains("d=3: tau=2 r=168 k=24"), "{table}");
    }

    #[test]
    fn zeta_small_case() {
        // only the four unit vectors
        assert!((lattice_zeta(2, 1) - 4.0).abs() < 1e-15);
    }
}
