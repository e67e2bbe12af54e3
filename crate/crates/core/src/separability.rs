//! Separability certificates for GHZ-diagonal states.
//!
//! A GHZ-diagonal state is written as
//! `(1/8) [I + lambda_2 ZZI + lambda_3 ZIZ + lambda_4 IZZ + B]` with
//! `B = lambda_5 XXX + lambda_6 YYX + lambda_7 YXY + lambda_8 XYY`. The
//! diagonal Pauli part needs `|lambda_minus|` of the identity to become
//! positive, and `B` is rewritten as a combination of products of
//! single-qubit operators `r (cos t X + sin t Y)`, each of which needs the
//! product of the `r` as identity budget. The state is separable whenever
//! the total budget does not exceed one.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, PSD_TOL};
use crate::optim::{self, NelderMeadOptions};
use crate::states::{stabilizer_words, DensityMatrix, GhzDiagonalState};

/// Slack allowed on `budget <= 1`.
pub const BUDGET_TOL: f64 = 1e-12;
/// Tolerance for matching the reconstructed Pauli weights.
pub const WEIGHT_TOL: f64 = 1e-9;

/// Smallest eigenvalue of `lambda_2 ZZI + lambda_3 ZIZ + lambda_4 IZZ`.
pub fn lambda_minus(l2: f64, l3: f64, l4: f64) -> f64 {
    (l2 + l3 + l4).min(l2 - l3 - l4).min(-l2 + l3 - l4).min(-l2 - l3 + l4)
}

/// One single-qubit factor `r (cos theta X + sin theta Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitOperator {
    pub r: f64,
    pub theta: f64,
}

impl QubitOperator {
    /// `r (cos theta X + sign sin theta Y)`
    fn matrix(&self, sign: f64) -> ComplexMatrix {
        let z = Complex64::from_polar(self.r, sign * self.theta);
        let mut m = ComplexMatrix::zeros(2);
        m[(0, 1)] = z.conj();
        m[(1, 0)] = z;
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum CertificateMethod {
    AbsSum,
    /// `B = (1/2) [prod (A_i + B_i) + prod (A_i - B_i)]` with identity
    /// budget `mu^3`.
    MuCubed { mu: f64, mu_cubed: f64, qubits: [QubitOperator; 3] },
    /// `B` is the twirl of `p prod (A_i + B_i) + (1 - p) prod (A^_i - B^_i)`
    /// with `A_i = r_i cos theta_i X`, `B_i = r_i sin theta_i Y`.
    TwoTermSearch {
        p: f64,
        qubits: [QubitOperator; 3],
        qubits_hat: [QubitOperator; 3],
        eta: f64,
        eta_hat: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityCertificate {
    #[serde(flatten)]
    pub method: CertificateMethod,
    pub lambda_minus: f64,
    /// Total identity weight needed; at most one for a valid certificate.
    pub budget: f64,
}

impl SeparabilityCertificate {
    pub fn method_name(&self) -> &'static str {
        match self.method {
            CertificateMethod::AbsSum => "abs_sum",
            CertificateMethod::MuCubed { .. } => "mu_cubed",
            CertificateMethod::TwoTermSearch { .. } => "two_term_search",
        }
    }

    pub fn is_valid(&self) -> bool {
        self.budget <= 1.0 + BUDGET_TOL
    }
}

/// Why no certificate was produced. None of these is evidence of
/// entanglement.
#[derive(Debug, Clone, PartialEq)]
pub enum NoCertificate {
    BudgetExceeded { budget: f64 },
    /// The decomposition does not exist for this sign pattern or a weight
    /// vanishes.
    Inapplicable,
    SearchExhausted { best_budget: f64 },
    /// The candidate failed explicit reconstruction.
    Rejected(Error),
}

fn finish(cert: SeparabilityCertificate, s: &GhzDiagonalState) -> std::result::Result<SeparabilityCertificate, NoCertificate> {
    if !cert.is_valid() {
        return Err(NoCertificate::BudgetExceeded { budget: cert.budget });
    }
    match build_separable_witness_state(&cert, s) {
        Ok(_) => Ok(cert),
        Err(e) => Err(NoCertificate::Rejected(e)),
    }
}

fn state_lambda_minus(s: &GhzDiagonalState) -> f64 {
    let [l2, l3, l4] = s.diagonal_weights();
    lambda_minus(l2, l3, l4)
}

/// Separable if `|lambda_minus| + |lambda_5| + .. + |lambda_8| <= 1`.
pub fn abs_sum_certificate(s: &GhzDiagonalState) -> std::result::Result<SeparabilityCertificate, NoCertificate> {
    let lm = state_lambda_minus(s);
    let budget = lm.abs() + s.coherence_weights().iter().map(|l| l.abs()).sum::<f64>();
    finish(SeparabilityCertificate { method: CertificateMethod::AbsSum, lambda_minus: lm, budget }, s)
}

/// `mu^3 = sqrt((l5 l6 + l7 l8)(l5 l7 + l6 l8)(l5 l8 + l6 l7)) / sqrt(l5 l6 l7 l8)`
///
/// Defined when an even number of the weights is negative and none is
/// zero. Then `l5 l6` and `l7 l8` share a sign, so the first factor has the
/// sign of `l5 l6`, and likewise for the others; the three signs multiply to
/// the sign of `l5^3 l6 l7 l8 > 0`, so the radicand is positive.
pub fn mu_cubed(l5: f64, l6: f64, l7: f64, l8: f64) -> Option<f64> {
    let prod = l5 * l6 * l7 * l8;
    if !(prod > 0.0) {
        return None;
    }
    let rad = (l5 * l6 + l7 * l8) * (l5 * l7 + l6 * l8) * (l5 * l8 + l6 * l7);
    if rad < 0.0 {
        return None;
    }
    Some(rad.sqrt() / prod.sqrt())
}

/// Weights `(XXX, YYX, YXY, XYY)` of `prod_i (cos t_i X + sin t_i Y)` after
/// discarding the terms with an odd number of `Y`.
pub fn product_weights(theta: &[f64; 3]) -> [f64; 4] {
    let (c, s) = (theta.map(f64::cos), theta.map(f64::sin));
    [c[0] * c[1] * c[2], s[0] * s[1] * c[2], s[0] * c[1] * s[2], c[0] * s[1] * s[2]]
}

/// Scale `m` and angles with `m * product_weights(theta) = l`.
pub fn mu_decomposition(l: [f64; 4]) -> Option<(f64, [f64; 3])> {
    let [l5, l6, l7, l8] = l;
    if !(l5 * l6 * l7 * l8 > 0.0) {
        return None;
    }
    let t1 = ((l6 * l7) / (l5 * l8)).sqrt();
    let t2 = l6 / (l5 * t1);
    let t3 = l7 / (l5 * t1);
    let m = l5.abs() * ((1.0 + t1 * t1) * (1.0 + t2 * t2) * (1.0 + t3 * t3)).sqrt();
    let shift = if l5 < 0.0 { PI } else { 0.0 };
    Some((m, [t1.atan() + shift, t2.atan() + shift, t3.atan() + shift]))
}

/// Separable if `|lambda_minus| + mu^3 <= 1`.
pub fn mu_certificate(s: &GhzDiagonalState) -> std::result::Result<SeparabilityCertificate, NoCertificate> {
    let [l5, l6, l7, l8] = s.coherence_weights();
    let Some(m3) = mu_cubed(l5, l6, l7, l8) else {
        return Err(NoCertificate::Inapplicable);
    };
    let (m, theta) = mu_decomposition([l5, l6, l7, l8]).ok_or(NoCertificate::Inapplicable)?;
    let mu = m.cbrt();
    let lm = state_lambda_minus(s);
    let cert = SeparabilityCertificate {
        method: CertificateMethod::MuCubed { mu, mu_cubed: m3, qubits: theta.map(|t| QubitOperator { r: mu, theta: t }) },
        lambda_minus: lm,
        budget: lm.abs() + m3,
    };
    finish(cert, s)
}

/// Effort limits for [`two_term_certificate`].
#[derive(Debug, Clone, Copy)]
pub struct TwoTermSearch {
    pub restarts: usize,
    pub max_evaluations: usize,
    pub seed: u64,
}

impl Default for TwoTermSearch {
    fn default() -> Self {
        Self { restarts: 20, max_evaluations: 2000, seed: 0 }
    }
}

const INFEASIBLE: f64 = 1e3;

/// Separable if `|lambda_minus| + p |eta| + (1 - p) |eta^| <= 1` for some
/// two-term decomposition.
///
/// Writing `a = p r^3` and `b = (1 - p) r^3` for the two terms, the weights
/// must satisfy `a w(theta) + b w(theta^) = lambda_B` and the budget is
/// `a + b`. For fixed `(a, theta)` the remainder is matched exactly by the
/// `mu^3` decomposition, so the search runs over four parameters with no
/// penalty on the constraint. The `mu^3` solution is the start
/// `a = mu^3 / 2` with its own angles.
pub fn two_term_certificate(
    s: &GhzDiagonalState,
    budget_target: f64,
    search: &TwoTermSearch,
) -> std::result::Result<SeparabilityCertificate, NoCertificate> {
    let lb = s.coherence_weights();
    let objective = |z: &[f64]| -> f64 {
        let a = z[0].abs();
        let w = product_weights(&[z[1], z[2], z[3]]);
        let rest: [f64; 4] = std::array::from_fn(|k| lb[k] - a * w[k]);
        match mu_cubed(rest[0], rest[1], rest[2], rest[3]) {
            Some(m) => a + m,
            None => INFEASIBLE + a,
        }
    };

    let mut starts: Vec<[f64; 4]> = Vec::with_capacity(search.restarts + 1);
    if let Some((m, theta)) = mu_decomposition(lb) {
        starts.push([0.5 * m, theta[0], theta[1], theta[2]]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let scale = budget_target.max(0.1);
    for _ in 0..search.restarts {
        let mut z = [
            rng.random_range(0.0..scale),
            rng.random_range(0.0..2.0 * PI),
            rng.random_range(0.0..2.0 * PI),
            rng.random_range(0.0..2.0 * PI),
        ];
        if objective(&z) >= INFEASIBLE {
            z[0] = 0.0;
        }
        starts.push(z);
    }

    let opts = NelderMeadOptions { max_evaluations: search.max_evaluations, max_iterations: usize::MAX, ftol: 1e-14, xtol: 1e-12 };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for z0 in &starts {
        let m = optim::nelder_mead(objective, z0, 0.1, &opts);
        if best.as_ref().is_none_or(|(v, _)| m.value < *v) {
            best = Some((m.value, m.x));
        }
        let current = best.as_ref().map(|b| b.0).unwrap_or(f64::INFINITY);
        if current <= budget_target {
            break;
        }
    }
    let Some((value, z)) = best else {
        return Err(NoCertificate::Inapplicable);
    };
    if value >= INFEASIBLE {
        return Err(NoCertificate::Inapplicable);
    }
    if value > budget_target + BUDGET_TOL {
        return Err(NoCertificate::SearchExhausted { best_budget: value + state_lambda_minus(s).abs() });
    }

    let a = z[0].abs();
    let theta = [z[1], z[2], z[3]];
    let w = product_weights(&theta);
    let rest: [f64; 4] = std::array::from_fn(|k| lb[k] - a * w[k]);
    let (b, theta_hat) = mu_decomposition(rest).ok_or(NoCertificate::Inapplicable)?;
    let total = a + b;
    let r = total.cbrt();
    let lm = state_lambda_minus(s);
    let cert = SeparabilityCertificate {
        method: CertificateMethod::TwoTermSearch {
            p: a / total,
            qubits: theta.map(|t| QubitOperator { r, theta: t }),
            qubits_hat: theta_hat.map(|t| QubitOperator { r, theta: t }),
            eta: -total,
            eta_hat: -total,
        },
        lambda_minus: lm,
        budget: lm.abs() + total,
    };
    finish(cert, s)
}

/// Averages over conjugation by the GHZ stabilizer group. Local unitary,
/// so separability is preserved; the result is GHZ-diagonal.
pub fn ghz_twirl(m: &ComplexMatrix) -> ComplexMatrix {
    let mut acc = m.clone();
    for w in stabilizer_words() {
        let g = w.matrix();
        acc = &acc + &(&(&g * m) * &g);
    }
    acc.scale(0.125)
}

fn product_operator(ops: &[QubitOperator; 3], sign: f64) -> ComplexMatrix {
    ops[0].matrix(sign).kron(&ops[1].matrix(sign)).kron(&ops[2].matrix(sign))
}

/// Materializes the separable state a certificate describes, as a sum of
/// manifestly separable pieces, and checks it against `s`: the matrix must
/// be positive semidefinite and its twirl must reproduce `s`.
///
/// The pieces are `|lambda_minus| I + (diagonal Pauli part)`, a diagonal
/// positive matrix, and `|eta| I + prod_i h_i` for each product term, whose
/// eigenvectors are product states.
pub fn build_separable_witness_state(cert: &SeparabilityCertificate, s: &GhzDiagonalState) -> Result<DensityMatrix> {
    if !cert.is_valid() {
        return Err(Error::CertificateRejected(format!("budget {} exceeds 1", cert.budget)));
    }
    let words = stabilizer_words();
    let lm = state_lambda_minus(s);
    if (lm - cert.lambda_minus).abs() > WEIGHT_TOL {
        return Err(Error::CertificateRejected("lambda_minus does not match the state".into()));
    }

    let identity = ComplexMatrix::identity(8);
    let mut m = identity.scale(1.0 - cert.budget);
    m = &m + &identity.scale(lm.abs());
    for (k, l) in s.diagonal_weights().iter().enumerate() {
        m = &m + &words[k].matrix().scale(*l);
    }

    let add_product = |m: &mut ComplexMatrix, weight: f64, ops: &[QubitOperator; 3], sign: f64| {
        let eta: f64 = ops.iter().map(|q| q.r).product();
        let piece = &identity.scale(eta.abs()) + &product_operator(ops, sign);
        *m = &*m + &piece.scale(weight);
        weight * eta.abs()
    };

    let used = match &cert.method {
        CertificateMethod::AbsSum => {
            let mut used = 0.0;
            for (k, l) in s.coherence_weights().iter().enumerate() {
                let piece = &identity.scale(l.abs()) + &words[3 + k].matrix().scale(*l);
                m = &m + &piece;
                used += l.abs();
            }
            used
        }
        CertificateMethod::MuCubed { qubits, .. } => {
            add_product(&mut m, 0.5, qubits, 1.0) + add_product(&mut m, 0.5, qubits, -1.0)
        }
        CertificateMethod::TwoTermSearch { p, qubits, qubits_hat, .. } => {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::CertificateRejected(format!("mixing weight {p} outside [0, 1]")));
            }
            add_product(&mut m, *p, qubits, 1.0) + add_product(&mut m, 1.0 - p, qubits_hat, -1.0)
        }
    };
    if (used + lm.abs() - cert.budget).abs() > WEIGHT_TOL {
        return Err(Error::CertificateRejected(format!(
            "identity weight {} does not match budget {}",
            used + lm.abs(),
            cert.budget
        )));
    }
    let m = m.scale(0.125);

    let min = linalg::hermitian_eigenvalues(&m, linalg::HERMITIAN_TOL)?[0];
    if min < -PSD_TOL {
        return Err(Error::CertificateRejected(format!("witness has eigenvalue {min:e}")));
    }
    let twirled = ghz_twirl(&m);
    let target = s.density_matrix();
    let diff = twirled.max_abs_diff(target.matrix());
    if diff > WEIGHT_TOL {
        return Err(Error::CertificateRejected(format!("twirled witness differs from the state by {diff:e}")));
    }
    for (k, w) in words.iter().enumerate() {
        let got = linalg::pauli_expectation(&m, w);
        if (got - s.lambdas[k]).abs() > WEIGHT_TOL {
            return Err(Error::CertificateRejected(format!("weight of {w} is {got}, expected {}", s.lambdas[k])));
        }
    }
    DensityMatrix::new(m)
}

/// `Tr(rho P)` for the words `XXX, YYX, YXY, XYY` of a product term, used in
/// tests and audits.
pub fn product_term_weights(ops: &[QubitOperator; 3], sign: f64) -> [f64; 4] {
    let t = product_operator(ops, sign);
    let words = stabilizer_words();
    std::array::from_fn(|k| linalg::trace_product(&t, &words[3 + k].matrix()).re / 8.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::PauliWord;
    use crate::states::kay_state;
    use std::f64::consts::SQRT_2;

    fn word(s: &str) -> PauliWord {
        s.parse().unwrap()
    }

    fn ghz_from(l: [f64; 7]) -> GhzDiagonalState {
        GhzDiagonalState::from_lambdas(l).unwrap()
    }

    fn kay(alpha: f64) -> GhzDiagonalState {
        GhzDiagonalState::from_density(&kay_state(alpha).unwrap(), 1e-12).unwrap()
    }

    #[test]
    fn lambda_minus_values() {
        assert_eq!(lambda_minus(0.0, 0.0, 0.0), 0.0);
        assert_eq!(lambda_minus(1.0, 1.0, 1.0), -1.0);
        assert!(lambda_minus(0.3, -0.2, 0.7) <= 0.0);
    }

    #[test]
    fn abs_sum_cases() {
        let mixed = abs_sum_certificate(&GhzDiagonalState::maximally_mixed()).unwrap();
        assert_eq!(mixed.budget, 0.0);
        let ghz = GhzDiagonalState::from_probs([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        match abs_sum_certificate(&ghz) {
            Err(NoCertificate::BudgetExceeded { budget }) => assert!((budget - 5.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        let s = ghz_from([0.0, 0.0, 0.0, 0.6, 0.0, 0.0, 0.0]);
        assert!((abs_sum_certificate(&s).unwrap().budget - 0.6).abs() < 1e-15);
    }

    #[test]
    fn mu_cubed_values() {
        let l = 0.3;
        assert!((mu_cubed(l, l, l, l).unwrap() - 2.0 * SQRT_2 * l).abs() < 1e-15);
        assert!((mu_cubed(1.0, 1.0, 1.0, 1.0).unwrap() - 2.0 * SQRT_2).abs() < 1e-15);
        assert!(mu_cubed(1.0, 1.0, -1.0, 1.0).is_none());
        assert!(mu_cubed(0.0, 1.0, 1.0, 1.0).is_none());
    }

    #[test]
    fn mu_cubed_symmetries() {
        let l = [0.31, -0.12, 0.44, -0.27];
        let base = mu_cubed(l[0], l[1], l[2], l[3]).unwrap();
        assert!((mu_cubed(l[2], l[0], l[3], l[1]).unwrap() - base).abs() < 1e-14);
        assert!((mu_cubed(-l[0], -l[1], l[2], l[3]).unwrap() - base).abs() < 1e-14);
    }

    #[test]
    fn decomposition_reproduces_weights() {
        for l in [[0.3, 0.3, 0.3, 0.3], [0.31, -0.12, 0.44, -0.27], [-0.2, -0.1, -0.05, -0.3], [-0.2, 0.1, 0.05, -0.3]] {
            let (m, theta) = mu_decomposition(l).unwrap();
            assert!((m - mu_cubed(l[0], l[1], l[2], l[3]).unwrap()).abs() < 1e-12, "{l:?}");
            let w = product_weights(&theta);
            for k in 0..4 {
                assert!((m * w[k] - l[k]).abs() < 1e-12, "{l:?}");
            }
        }
    }

    #[test]
    fn product_weights_match_operator_traces() {
        let ops = [0.4, 1.9, -0.7].map(|t| QubitOperator { r: 1.0, theta: t });
        let theta = ops.map(|q| q.theta);
        let sum: [f64; 4] = {
            let plus = product_term_weights(&ops, 1.0);
            let minus = product_term_weights(&ops, -1.0);
            std::array::from_fn(|k| 0.5 * (plus[k] + minus[k]))
        };
        let w = product_weights(&theta);
        for k in 0..4 {
            assert!((sum[k] - w[k]).abs() < 1e-14);
        }
        // The minus term alone carries the same even-Y weights.
        let minus = product_term_weights(&ops, -1.0);
        for k in 0..4 {
            assert!((minus[k] - w[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn mu_witness_for_uniform_weights() {
        let s = ghz_from([0.0, 0.0, 0.0, 0.3, 0.3, 0.3, 0.3]);
        let cert = mu_certificate(&s).unwrap();
        let w = build_separable_witness_state(&cert, &s).unwrap();
        assert!((linalg::pauli_expectation(w.matrix(), &word("XXX")) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn kay_certificates() {
        let cert = mu_certificate(&kay(3.0)).unwrap();
        assert!(cert.budget <= 1.0);
        assert!(mu_certificate(&kay(2.5)).is_err());
        let search = TwoTermSearch::default();
        let s = kay(2.5);
        let lm = state_lambda_minus(&s).abs();
        assert!(two_term_certificate(&s, 1.0 - lm, &search).is_err());
    }

    #[test]
    fn two_term_covers_mu_states() {
        let s = kay(3.0);
        let lm = state_lambda_minus(&s).abs();
        let cert = two_term_certificate(&s, 1.0 - lm, &TwoTermSearch::default()).unwrap();
        assert!(cert.budget <= 1.0 + BUDGET_TOL);
        build_separable_witness_state(&cert, &s).unwrap();
    }

    #[test]
    fn maximally_mixed_witness_is_identity() {
        let s = GhzDiagonalState::maximally_mixed();
        let cert = abs_sum_certificate(&s).unwrap();
        let w = build_separable_witness_state(&cert, &s).unwrap();
        assert!(w.matrix().max_abs_diff(&ComplexMatrix::identity(8).scale(0.125)) < 1e-15);
        assert!(matches!(mu_certificate(&s), Err(NoCertificate::Inapplicable)));
    }

    #[test]
    fn forged_certificate_is_rejected() {
        let s = kay(2.5);
        let mut cert = mu_certificate(&kay(3.0)).unwrap();
        cert.lambda_minus = state_lambda_minus(&s);
        cert.budget = 0.9;
        assert!(build_separable_witness_state(&cert, &s).is_err());
    }

    #[test]
    fn certificate_json_shape() {
        let cert = mu_certificate(&kay(3.0)).unwrap();
        let json = serde_json::to_value(&cert).unwrap();
        assert_eq!(json["method"], "mu_cubed");
        assert!(json["budget"].is_number());
        assert!(json["lambda_minus"].is_number());
        let back: SeparabilityCertificate = serde_json::from_value(json).unwrap();
        assert_eq!(back, cert);
    }
}
