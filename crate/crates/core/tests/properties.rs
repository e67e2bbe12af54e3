use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use proptest::prelude::*;

use tripartite::criterion::{
    self, c_value_closed_form, c_value_numeric, c_value_phase_reduced, f_value, functional_l, optimize_x,
    CriterionVector,
};
use tripartite::linalg::{hermitian_eigenvalues, min_eigenvalue_after_pt, partial_transpose, ComplexMatrix, Party};
use tripartite::separability::{lambda_minus, mu_cubed};
use tripartite::states::{sample_simplex, GhzDiagonalState, ProductState, SimplexSampler};

/// Eigenvalues through the real symmetric embedding `[[A, -B], [B, A]]`,
/// which doubles each eigenvalue of `A + iB`.
fn nalgebra_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let n = m.dim();
    let embed = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = m[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let mut ev: Vec<f64> = SymmetricEigen::new(embed).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev.into_iter().step_by(2).collect()
}

fn hermitian(entries: &[f64]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(8);
    let mut k = 0;
    for i in 0..8 {
        m[(i, i)] = Complex64::new(entries[k], 0.0);
        k += 1;
        for j in i + 1..8 {
            let z = Complex64::new(entries[k], entries[k + 1]);
            k += 2;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

fn simplex_point() -> impl Strategy<Value = [f64; 8]> {
    prop::array::uniform8(0.001f64..1.0).prop_map(|x| {
        let s: f64 = x.iter().sum();
        x.map(|v| v / s)
    })
}

fn product_state() -> impl Strategy<Value = ProductState> {
    (prop::array::uniform3(0.0f64..std::f64::consts::PI), prop::array::uniform3(0.0f64..std::f64::consts::TAU))
        .prop_map(|(t, p)| ProductState::from_angles(t, p))
}

fn complex4() -> impl Strategy<Value = CriterionVector> {
    prop::array::uniform8(-1.0f64..1.0)
        .prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
        .prop_map(|v| CriterionVector::new(std::array::from_fn(|k| Complex64::new(v[2 * k], v[2 * k + 1]))).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn jacobi_matches_nalgebra(entries in prop::collection::vec(-1.0f64..1.0, 64)) {
        let m = hermitian(&entries);
        let ours = hermitian_eigenvalues(&m, 1e-12).unwrap();
        let oracle = nalgebra_eigenvalues(&m);
        for (a, b) in ours.iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn partial_transpose_is_an_involution(entries in prop::collection::vec(-1.0f64..1.0, 64)) {
        let m = hermitian(&entries);
        for p in Party::ALL {
            prop_assert!(partial_transpose(&partial_transpose(&m, p), p).max_abs_diff(&m) == 0.0);
        }
    }

    #[test]
    fn probs_lambdas_round_trip(p in simplex_point()) {
        let s = GhzDiagonalState::from_probs(p).unwrap();
        let back = GhzDiagonalState::from_lambdas(s.lambdas).unwrap();
        for k in 0..8 {
            prop_assert!((back.probs[k] - s.probs[k]).abs() < 1e-12);
        }
        let m = s.density_matrix();
        prop_assert!(m.matrix().entries().iter().all(|z| z.im.abs() <= 1e-14));
    }

    #[test]
    fn product_states_saturate(ps in product_state(), x in complex4()) {
        let l = functional_l(ps.density(), &x);
        let f = f_value(&x, ps.a, ps.b, ps.c_phase);
        prop_assert!((l.abs() - ps.kappa * f.abs()).abs() < 1e-12);
        prop_assert!(ps.identity_residual() < 1e-12);
        prop_assert!(min_eigenvalue_after_pt(ps.density(), Party::B) > -1e-12);
    }

    #[test]
    fn ratio_is_scale_invariant(p in simplex_point(), x in complex4(), real in any::<bool>()) {
        let rho = GhzDiagonalState::from_probs(p).unwrap().density_matrix();
        let x = if real { CriterionVector::from_real(x.real_parts()).unwrap() } else { x };
        let base = criterion::evaluate(&rho, &x);
        for t in [0.1, 10.0] {
            let scaled = criterion::evaluate(&rho, &x.scaled(t));
            prop_assert_eq!(scaled.violated, base.violated);
            prop_assert!((scaled.ratio() - base.ratio()).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_form_dominates_vertices_and_matches_reduction(x in prop::array::uniform4(-1.0f64..1.0)) {
        prop_assume!(x.iter().all(|v| v.abs() > 1e-6));
        let r = c_value_closed_form(x);
        let v = CriterionVector::from_real(x).unwrap();
        let vertex = (0..8)
            .map(|m: u32| {
                let ph = |b: u32| if m >> b & 1 == 0 { 0.0 } else { std::f64::consts::PI };
                f_value(&v, ph(0), ph(1), ph(2)).abs()
            })
            .fold(0.0, f64::max);
        prop_assert!(r.c >= vertex - 1e-12);
        prop_assert!(r.c <= x.iter().map(|a| a.abs()).sum::<f64>() + 1e-12);
        prop_assert!((r.c - c_value_phase_reduced(&v).c).abs() < 1e-9);
        let [a, b, c] = r.maximizer;
        prop_assert!((f_value(&v, a, b, c).abs() - r.c).abs() < 1e-9);
    }

    #[test]
    fn lambda_minus_is_nonpositive(l in prop::array::uniform3(-1.0f64..1.0)) {
        prop_assert!(lambda_minus(l[0], l[1], l[2]) <= 0.0);
    }

    #[test]
    fn mu_cubed_symmetries(l in prop::array::uniform4(0.01f64..1.0), flip in 0usize..6) {
        let base = mu_cubed(l[0], l[1], l[2], l[3]).unwrap();
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let (i, j) = pairs[flip];
        let mut f = l;
        f[i] = -f[i];
        f[j] = -f[j];
        prop_assert!((mu_cubed(f[0], f[1], f[2], f[3]).unwrap() - base).abs() < 1e-12 * base.max(1.0));
        prop_assert!((mu_cubed(l[3], l[1], l[0], l[2]).unwrap() - base).abs() < 1e-12 * base.max(1.0));
        let mut odd = l;
        odd[i] = -odd[i];
        prop_assert!(mu_cubed(odd[0], odd[1], odd[2], odd[3]).is_none());
    }

    #[test]
    fn npt_ghz_states_violate_the_criterion(p in simplex_point()) {
        let rho = GhzDiagonalState::from_probs(p).unwrap().density_matrix();
        let npt = Party::ALL.iter().any(|&q| min_eigenvalue_after_pt(&rho, q) < -1e-10);
        if npt {
            prop_assert!(optimize_x(&rho).1.violated);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn phase_reduction_matches_grid(x in complex4()) {
        let reduced = c_value_phase_reduced(&x).c;
        let grid = c_value_numeric(&x).c;
        prop_assert!((reduced - grid).abs() < 1e-6, "{reduced} vs {grid}");
    }
}

#[test]
fn simplex_sampler_is_uniform_and_deterministic() {
    let a = sample_simplex(42, 100_000).unwrap();
    assert_eq!(a[..10], sample_simplex(42, 10).unwrap()[..]);
    let mut mean = [0.0; 8];
    for p in &a {
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|x| *x >= 0.0));
        for k in 0..8 {
            mean[k] += p[k] / a.len() as f64;
        }
    }
    assert!(mean.iter().all(|m| (m - 0.125).abs() < 0.005), "{mean:?}");
    let mut s1 = SimplexSampler::with_stream(1, 0);
    let mut s2 = SimplexSampler::with_stream(1, 1);
    assert_ne!(s1.sample(), s2.sample());
}
