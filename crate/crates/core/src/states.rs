//! State families, GHZ-diagonal representations and random sampling.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, PauliWord, HERMITIAN_TOL, PSD_TOL};

const TRACE_TOL: f64 = 1e-12;
const SIMPLEX_TOL: f64 = 1e-12;

/// The seven stabilizing Pauli words whose weights are `lambda_2..lambda_8`.
pub const STABILIZER_WORDS: [&str; 7] = ["ZZI", "ZIZ", "IZZ", "XXX", "YYX", "YXY", "XYY"];

/// Indices `(row, col)` of the four independent anti-diagonal entries
/// `rho_{1,8}, rho_{2,7}, rho_{3,6}, rho_{5,4}` (zero-based).
pub const ANTI_DIAGONAL: [(usize, usize); 4] = [(0, 7), (1, 6), (2, 5), (4, 3)];

pub(crate) fn stabilizer_words() -> &'static [PauliWord; 7] {
    static WORDS: OnceLock<[PauliWord; 7]> = OnceLock::new();
    WORDS.get_or_init(|| STABILIZER_WORDS.map(|w| w.parse().expect("valid word")))
}

/// Unit-trace, Hermitian, positive semidefinite 8x8 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(m, PSD_TOL)
    }

    /// Validates with a custom negativity threshold for the smallest
    /// eigenvalue.
    pub fn with_tolerance(m: ComplexMatrix, psd_tol: f64) -> Result<Self> {
        if m.dim() != 8 {
            return Err(Error::Dimension { expected: 8, found: m.dim() });
        }
        let asym = m.max_asymmetry();
        if asym > HERMITIAN_TOL {
            return Err(Error::NotHermitian { max_asymmetry: asym });
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::NotAState(format!("trace is {tr}, expected 1")));
        }
        let min = linalg::hermitian_eigenvalues(&m, HERMITIAN_TOL)?[0];
        if min < -psd_tol {
            return Err(Error::NotAState(format!("minimal eigenvalue {min:e} is negative")));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix known to be a state by construction.
    pub(crate) fn new_unchecked(m: ComplexMatrix) -> Self {
        debug_assert_eq!(m.dim(), 8);
        Self(m)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    /// One-based element access, `rho.get(1, 8)` is `rho_{1,8}`.
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row - 1, col - 1)]
    }

    pub fn diagonal(&self) -> [f64; 8] {
        std::array::from_fn(|i| self.0[(i, i)].re)
    }

    /// `(rho_{1,8}, rho_{2,7}, rho_{3,6}, rho_{5,4})`
    pub fn anti_diagonal(&self) -> [Complex64; 4] {
        ANTI_DIAGONAL.map(|ij| self.0[ij])
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.0, HERMITIAN_TOL).expect("density matrices are Hermitian")
    }

    /// `p rho + (1-p) other`
    pub fn mix(&self, other: &Self, p: f64) -> Self {
        Self(&self.0.scale(p) + &other.0.scale(1.0 - p))
    }

    pub fn maximally_mixed() -> Self {
        Self(ComplexMatrix::identity(8).scale(0.125))
    }

    /// Expectation values of [`STABILIZER_WORDS`].
    pub fn stabilizer_weights(&self) -> [f64; 7] {
        let words = stabilizer_words();
        std::array::from_fn(|i| linalg::pauli_expectation(&self.0, &words[i]))
    }
}

/// Kay's one-parameter family; a state for `alpha_hat >= 2`.
pub fn kay_state(alpha_hat: f64) -> Result<DensityMatrix> {
    if !alpha_hat.is_finite() || alpha_hat < 2.0 {
        let min = (alpha_hat - 2.0) / (8.0 + 8.0 * alpha_hat);
        return Err(Error::NotAState(format!(
            "Kay matrix with alpha = {alpha_hat} has minimal eigenvalue {min:e}; requires alpha >= 2"
        )));
    }
    let norm = 1.0 / (8.0 + 8.0 * alpha_hat);
    let mut m = ComplexMatrix::zeros(8);
    for i in 0..8 {
        let d = if i == 0 || i == 7 { 4.0 + alpha_hat } else { alpha_hat };
        m[(i, i)] = Complex64::new(d * norm, 0.0);
        let sign = if i == 2 || i == 5 { -1.0 } else { 1.0 };
        m[(i, 7 - i)] = Complex64::new(2.0 * sign * norm, 0.0);
    }
    Ok(DensityMatrix::new_unchecked(m))
}

/// Hyllus' family near the W state, defined for `eta > 0`.
pub fn hyllus_state(eta: f64) -> Result<DensityMatrix> {
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    let norm = 1.0 / (3.0 + 2.0 * eta + 3.0 / eta);
    let mut m = ComplexMatrix::zeros(8);
    let c = |x: f64| Complex64::new(x * norm, 0.0);
    m[(0, 0)] = c(2.0 * eta);
    for &i in &[1, 2, 4] {
        for &j in &[1, 2, 4] {
            m[(i, j)] = c(1.0);
        }
    }
    for &i in &[3, 5, 6] {
        m[(i, i)] = c(1.0 / eta);
    }
    Ok(DensityMatrix::new_unchecked(m))
}

/// `|GHZ_k>` for `k` in `1..=8`.
///
/// `k = 2j - 1` is `(|0 x2 x3> + |1 ~x2 ~x3>)/sqrt 2` and `k = 2j` the same
/// with a minus sign, where `j = 1..4` enumerates `x2 x3` as `00, 01, 10, 11`.
pub fn ghz_basis_vector(k: usize) -> Result<[Complex64; 8]> {
    if !(1..=8).contains(&k) {
        return Err(Error::InvalidParameter(format!("GHZ index {k} outside 1..=8")));
    }
    let j = (k - 1) / 2;
    let sign = if (k - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut v = [Complex64::new(0.0, 0.0); 8];
    v[j] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    v[7 - j] = Complex64::new(sign * FRAC_1_SQRT_2, 0.0);
    Ok(v)
}

/// Eigenvalue of stabilizer word `i` on `|GHZ_k>`, as `[k][i]`.
fn stabilizer_signs() -> &'static [[f64; 7]; 8] {
    static SIGNS: OnceLock<[[f64; 7]; 8]> = OnceLock::new();
    SIGNS.get_or_init(|| {
        let words = stabilizer_words();
        std::array::from_fn(|k| {
            let v = ghz_basis_vector(k + 1).expect("index in range");
            let proj = ComplexMatrix::outer(&v);
            std::array::from_fn(|i| linalg::pauli_expectation(&proj, &words[i]).round())
        })
    })
}

/// A state diagonal in the GHZ basis, held both as GHZ-basis probabilities
/// and as stabilizer weights `lambda_2..lambda_8`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhzDiagonalState {
    pub probs: [f64; 8],
    pub lambdas: [f64; 7],
}

impl GhzDiagonalState {
    pub fn from_probs(p: [f64; 8]) -> Result<Self> {
        if p.iter().any(|x| !x.is_finite() || *x < -SIMPLEX_TOL) {
            return Err(Error::NotAState(format!("probabilities {p:?} contain a negative entry")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::NotAState(format!("probabilities sum to {sum}, expected 1")));
        }
        let probs = p.map(|x| x.max(0.0));
        let rho = Self::matrix_from_probs(&probs);
        let lambdas = rho.stabilizer_weights();
        Ok(Self { probs, lambdas })
    }

    /// Inverse of the stabilizer-weight map,
    /// `p_k = (1 + sum_i s_{k,i} lambda_i) / 8`.
    pub fn from_lambdas(l: [f64; 7]) -> Result<Self> {
        let signs = stabilizer_signs();
        let raw: [f64; 8] =
            std::array::from_fn(|k| (1.0 + (0..7).map(|i| signs[k][i] * l[i]).sum::<f64>()) / 8.0);
        if let Some((k, x)) = raw.iter().enumerate().find(|(_, x)| **x < -SIMPLEX_TOL || !x.is_finite()) {
            return Err(Error::NotAState(format!(
                "weights {l:?} imply probability p_{} = {x:e} < 0",
                k + 1
            )));
        }
        Ok(Self { probs: raw.map(|x| x.max(0.0)), lambdas: l })
    }

    /// Reads a GHZ-diagonal state off a density matrix, if it is one within
    /// `tol`.
    pub fn from_density(rho: &DensityMatrix, tol: f64) -> Option<Self> {
        let m = rho.matrix();
        for i in 0..8 {
            for j in 0..8 {
                if i != j && i + j != 7 && m[(i, j)].norm() > tol {
                    return None;
                }
            }
        }
        let mut probs = [0.0; 8];
        for j in 0..4 {
            let (d, dbar, off) = (m[(j, j)].re, m[(7 - j, 7 - j)].re, m[(j, 7 - j)]);
            if (d - dbar).abs() > tol || off.im.abs() > tol {
                return None;
            }
            let mean = 0.5 * (d + dbar);
            probs[2 * j] = mean + off.re;
            probs[2 * j + 1] = mean - off.re;
        }
        let sum: f64 = probs.iter().sum();
        Self::from_probs(probs.map(|p| p.max(0.0) / sum)).ok()
    }

    fn matrix_from_probs(p: &[f64; 8]) -> DensityMatrix {
        let mut m = ComplexMatrix::zeros(8);
        for j in 0..4 {
            let (plus, minus) = (p[2 * j], p[2 * j + 1]);
            let d = Complex64::new(0.5 * (plus + minus), 0.0);
            let off = Complex64::new(0.5 * (plus - minus), 0.0);
            m[(j, j)] = d;
            m[(7 - j, 7 - j)] = d;
            m[(j, 7 - j)] = off;
            m[(7 - j, j)] = off;
        }
        DensityMatrix::new_unchecked(m)
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        Self::matrix_from_probs(&self.probs)
    }

    /// `(lambda_2, lambda_3, lambda_4)`, the weights of `ZZI, ZIZ, IZZ`.
    pub fn diagonal_weights(&self) -> [f64; 3] {
        [self.lambdas[0], self.lambdas[1], self.lambdas[2]]
    }

    /// `(lambda_5, .., lambda_8)`, the weights of `XXX, YYX, YXY, XYY`.
    pub fn coherence_weights(&self) -> [f64; 4] {
        [self.lambdas[3], self.lambdas[4], self.lambdas[5], self.lambdas[6]]
    }

    pub fn maximally_mixed() -> Self {
        Self { probs: [0.125; 8], lambdas: [0.0; 7] }
    }
}

/// Pure product state `(c1|0> + s1|1>) (c2|0> + s2|1>) (c3|0> + s3|1>)`
/// with the phase parametrization of its anti-diagonal entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    pub c: [Complex64; 3],
    pub s: [Complex64; 3],
    /// `phi_k = arg(c_k s_k^*)`
    pub phi: [f64; 3],
    /// `prod_k |c_k s_k|`
    pub kappa: f64,
    pub a: f64,
    pub b: f64,
    pub c_phase: f64,
    rho: DensityMatrix,
}

impl ProductState {
    pub fn new(c: [Complex64; 3], s: [Complex64; 3]) -> Result<Self> {
        for k in 0..3 {
            let n = c[k].norm_sqr() + s[k].norm_sqr();
            if (n - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "qubit {} has |c|^2 + |s|^2 = {n}, expected 1",
                    k + 1
                )));
            }
        }
        let phi: [f64; 3] = std::array::from_fn(|k| (c[k] * s[k].conj()).arg());
        let kappa = (0..3).map(|k| (c[k] * s[k]).norm()).product();
        let a = phi[0] + phi[1] - phi[2];
        let b = phi[0] - phi[1] + phi[2];
        let c_phase = -phi[0] + phi[1] + phi[2];

        let amp: Vec<Complex64> = (0..8usize)
            .map(|idx| {
                (0..3)
                    .map(|k| if idx >> (2 - k) & 1 == 0 { c[k] } else { s[k] })
                    .product()
            })
            .collect();
        let rho = DensityMatrix::new_unchecked(ComplexMatrix::outer(&amp));
        Ok(Self { c, s, phi, kappa, a, b, c_phase, rho })
    }

    /// Product of single-qubit states given by Bloch angles.
    pub fn from_angles(theta: [f64; 3], phase: [f64; 3]) -> Self {
        let c = theta.map(|t| Complex64::new((0.5 * t).cos(), 0.0));
        let s: [Complex64; 3] = std::array::from_fn(|k| Complex64::from_polar((0.5 * theta[k]).sin(), phase[k]));
        Self::new(c, s).expect("Bloch parametrization is normalized")
    }

    pub fn density(&self) -> &DensityMatrix {
        &self.rho
    }

    /// Largest deviation from the anti-diagonal phase identities and the
    /// diagonal expressions for `kappa`.
    pub fn identity_residual(&self) -> f64 {
        let r = &self.rho;
        let k = self.kappa;
        let expected = [
            Complex64::from_polar(k, self.a + self.b + self.c_phase),
            Complex64::from_polar(k, self.a),
            Complex64::from_polar(k, self.b),
            Complex64::from_polar(k, self.c_phase),
        ];
        let mut worst = r
            .anti_diagonal()
            .iter()
            .zip(&expected)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        let d = r.diagonal();
        let mut kappas = vec![
            (d[0] * d[3] * d[5] * d[6]).max(0.0).powf(0.25),
            (d[1] * d[2] * d[4] * d[7]).max(0.0).powf(0.25),
        ];
        kappas.extend((0..4).map(|i| (d[i] * d[7 - i]).max(0.0).sqrt()));
        for kk in kappas {
            worst = worst.max((kk - k).abs());
        }
        worst
    }
}

/// `F rho F / Tr(F rho F)` with `F = diag(1/x, x^2)` on every qubit.
pub fn apply_filter(rho: &DensityMatrix, x: f64) -> Result<DensityMatrix> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::InvalidParameter(format!("filter parameter must be positive, got {x}")));
    }
    let f: [f64; 8] = std::array::from_fn(|idx| {
        let ones = (idx as u32).count_ones() as i32;
        x.powi(2 * ones) / x.powi(3 - ones)
    });
    let m = rho.matrix();
    let filtered = ComplexMatrix::from_fn(8, |i, j| m[(i, j)] * (f[i] * f[j]));
    let tr = filtered.trace().re;
    if !(tr > 0.0) || !tr.is_finite() {
        return Err(Error::NotAState(format!("filtered matrix has trace {tr}")));
    }
    Ok(DensityMatrix::new_unchecked(filtered.scale(1.0 / tr)))
}

/// Uniform sampler on the probability simplex in R^8: eight unit-rate
/// exponential variates, normalized. Backed by ChaCha8 so streams are
/// reproducible across platforms.
#[derive(Debug, Clone)]
pub struct SimplexSampler {
    rng: ChaCha8Rng,
}

impl SimplexSampler {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// Independent substream `stream` of `seed`.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    pub fn sample(&mut self) -> [f64; 8] {
        let e: [f64; 8] = std::array::from_fn(|_| Exp1.sample(&mut self.rng));
        let sum: f64 = e.iter().sum();
        e.map(|x| x / sum)
    }
}

/// `n` points drawn uniformly from the simplex, deterministic in `seed`.
pub fn sample_simplex(seed: u64, n: usize) -> Result<Vec<[f64; 8]>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    let mut sampler = SimplexSampler::new(seed);
    Ok((0..n).map(|_| sampler.sample()).collect())
}

/// JSON state document. Exactly one source is used, in the order
/// `matrix`, `ghz_probs`, `family`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StateDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ghz_probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
}

impl StateDocument {
    pub fn from_density(rho: &DensityMatrix) -> Self {
        let matrix = rho.matrix().rows().map(|row| row.iter().map(|z| [z.re, z.im]).collect()).collect();
        Self { matrix: Some(matrix), ..Default::default() }
    }

    /// Materializes the described state, validating it.
    pub fn to_density(&self, psd_tol: f64) -> Result<DensityMatrix> {
        if let Some(rows) = &self.matrix {
            let rows = rows
                .iter()
                .map(|row| row.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
                .collect();
            return DensityMatrix::with_tolerance(ComplexMatrix::from_rows(rows)?, psd_tol);
        }
        if let Some(p) = &self.ghz_probs {
            let p: [f64; 8] = p
                .as_slice()
                .try_into()
                .map_err(|_| Error::InvalidParameter(format!("ghz_probs needs 8 entries, got {}", p.len())))?;
            return Ok(GhzDiagonalState::from_probs(p)?.density_matrix());
        }
        match self.family.as_deref() {
            Some("kay") => kay_state(self.alpha.ok_or_else(|| missing("alpha"))?),
            Some("hyllus") => hyllus_state(self.eta.ok_or_else(|| missing("eta"))?),
            Some(other) => Err(Error::InvalidParameter(format!("unknown family {other:?}"))),
            None => Err(Error::InvalidParameter(
                "state document needs one of \"matrix\", \"ghz_probs\" or \"family\"".into(),
            )),
        }
    }
}

fn missing(field: &str) -> Error {
    Error::InvalidParameter(format!("missing field {field:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn kay_entries_at_three() {
        let rho = kay_state(3.0).unwrap();
        assert!((rho.get(1, 1).re - 7.0 / 32.0).abs() < 1e-15);
        assert!((rho.get(2, 2).re - 3.0 / 32.0).abs() < 1e-15);
        assert!((rho.get(1, 8).re - 2.0 / 32.0).abs() < 1e-15);
        assert!((rho.get(3, 6).re + 2.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn kay_rejects_small_alpha() {
        assert!(matches!(kay_state(1.5), Err(Error::NotAState(_))));
        assert!(kay_state(f64::NAN).is_err());
    }

    #[test]
    fn kay_at_two_is_edge_of_state_space() {
        let rho = kay_state(2.0).unwrap();
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-15);
        assert!(rho.eigenvalues()[0].abs() < 1e-12);
        assert!(DensityMatrix::new(rho.into_matrix()).is_ok());
    }

    #[test]
    fn hyllus_is_a_state() {
        for eta in [0.1, 0.5, 1.0, 1.5f64.sqrt(), 3.0, 10.0] {
            let rho = hyllus_state(eta).unwrap();
            assert!((rho.matrix().trace().re - 1.0).abs() < 1e-14);
            assert!(rho.eigenvalues()[0] > -1e-12);
            assert_eq!(rho.get(8, 8), c(0.0));
        }
        assert!(hyllus_state(0.0).is_err());
        assert!(hyllus_state(-1.0).is_err());
    }

    #[test]
    fn ghz_basis_is_orthonormal_and_complete() {
        let vs: Vec<_> = (1..=8).map(|k| ghz_basis_vector(k).unwrap()).collect();
        for (k, u) in vs.iter().enumerate() {
            for (l, v) in vs.iter().enumerate() {
                let ip: Complex64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
                let expect = if k == l { 1.0 } else { 0.0 };
                assert!((ip - c(expect)).norm() < 1e-15);
            }
        }
        let mut sum = ComplexMatrix::zeros(8);
        for v in &vs {
            sum = &sum + &ComplexMatrix::outer(v);
        }
        assert!(sum.max_abs_diff(&ComplexMatrix::identity(8)) < 1e-15);
        assert!(ghz_basis_vector(0).is_err());
        assert!(ghz_basis_vector(9).is_err());
    }

    #[test]
    fn first_ghz_vector() {
        let v = ghz_basis_vector(1).unwrap();
        assert_eq!(v[0], c(FRAC_1_SQRT_2));
        assert_eq!(v[7], c(FRAC_1_SQRT_2));
        let w = ghz_basis_vector(2).unwrap();
        assert_eq!(w[7], c(-FRAC_1_SQRT_2));
    }

    #[test]
    fn pure_ghz_from_probs() {
        let s = GhzDiagonalState::from_probs([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let rho = s.density_matrix();
        assert_eq!(rho.get(1, 1), c(0.5));
        assert_eq!(rho.get(8, 8), c(0.5));
        assert_eq!(rho.get(1, 8), c(0.5));
        let expect = [1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0];
        for (l, e) in s.lambdas.iter().zip(expect) {
            assert!((l - e).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_probs_give_maximally_mixed() {
        let s = GhzDiagonalState::from_probs([0.125; 8]).unwrap();
        assert!(s.lambdas.iter().all(|l| l.abs() < 1e-16));
        assert!(s.density_matrix().matrix().max_abs_diff(DensityMatrix::maximally_mixed().matrix()) < 1e-16);
        let back = GhzDiagonalState::from_lambdas([0.0; 7]).unwrap();
        assert_eq!(back.probs, [0.125; 8]);
    }

    #[test]
    fn kay_spectrum_reproduces_kay_state() {
        // Diagonalize kay_state(3) in the GHZ basis: p_k = <GHZ_k|rho|GHZ_k>.
        let rho = kay_state(3.0).unwrap();
        let p: [f64; 8] = std::array::from_fn(|k| {
            let v = ghz_basis_vector(k + 1).unwrap();
            linalg::trace_product(rho.matrix(), &ComplexMatrix::outer(&v)).re
        });
        let s = GhzDiagonalState::from_probs(p).unwrap();
        assert!(s.density_matrix().matrix().max_abs_diff(rho.matrix()) < 1e-12);
        assert!(GhzDiagonalState::from_density(&rho, 1e-12).unwrap().probs.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn from_lambdas_rejects_implied_negative_probability() {
        let mut l = [0.0; 7];
        l[3] = 1.01;
        assert!(matches!(GhzDiagonalState::from_lambdas(l), Err(Error::NotAState(_))));
        l[3] = 1.0;
        assert!(GhzDiagonalState::from_lambdas(l).is_ok());
    }

    #[test]
    fn off_simplex_probs_are_rejected() {
        assert!(GhzDiagonalState::from_probs([0.5; 8]).is_err());
        assert!(GhzDiagonalState::from_probs([1.1, -0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn basis_product_state() {
        let one = [c(1.0); 3];
        let zero = [c(0.0); 3];
        let p = ProductState::new(one, zero).unwrap();
        assert_eq!(p.kappa, 0.0);
        assert_eq!(p.density().get(1, 1), c(1.0));
        assert!(p.identity_residual() < 1e-15);
    }

    #[test]
    fn balanced_product_state() {
        let h = [c(FRAC_1_SQRT_2); 3];
        let p = ProductState::new(h, h).unwrap();
        assert!((p.kappa - 0.125).abs() < 1e-15);
        for z in p.density().anti_diagonal() {
            assert!((z - c(0.125)).norm() < 1e-15);
        }
    }

    #[test]
    fn unnormalized_product_is_rejected() {
        assert!(ProductState::new([c(1.0); 3], [c(0.1); 3]).is_err());
    }

    #[test]
    fn unit_filter_is_identity() {
        let rho = hyllus_state(0.7).unwrap();
        let f = apply_filter(&rho, 1.0).unwrap();
        assert!(f.matrix().max_abs_diff(rho.matrix()) < 1e-16);
        assert!(apply_filter(&rho, 0.0).is_err());
    }

    #[test]
    fn filter_rescales_hyllus_parameter() {
        for (eta, x) in [(1.5f64.sqrt(), 0.8), (2.0, 1.3), (10.0, 1.42)] {
            let f = apply_filter(&hyllus_state(eta).unwrap(), x).unwrap();
            let expect = hyllus_state(eta / x.powi(6)).unwrap();
            assert!(f.matrix().max_abs_diff(expect.matrix()) < 1e-12);
        }
    }

    #[test]
    fn filter_preserves_rank() {
        let rank = |r: &DensityMatrix| r.eigenvalues().iter().filter(|e| **e > 1e-10).count();
        let rho = hyllus_state(1.3).unwrap();
        assert_eq!(rank(&rho), rank(&apply_filter(&rho, 1.7).unwrap()));
    }

    #[test]
    fn sampler_is_deterministic() {
        let a = sample_simplex(42, 100).unwrap();
        let b = sample_simplex(42, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_simplex(43, 100).unwrap());
        for p in &a {
            assert!(p.iter().all(|x| *x >= 0.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(sample_simplex(1, 0).is_err());
    }

    #[test]
    fn streams_differ() {
        let mut a = SimplexSampler::with_stream(9, 0);
        let mut b = SimplexSampler::with_stream(9, 1);
        assert_ne!(a.sample(), b.sample());
    }

    #[test]
    fn state_document_sources() {
        let doc: StateDocument = serde_json::from_str(r#"{"family":"kay","alpha":3}"#).unwrap();
        let rho = doc.to_density(PSD_TOL).unwrap();
        assert!((rho.get(1, 1).re - 7.0 / 32.0).abs() < 1e-15);

        let doc: StateDocument = serde_json::from_str(r#"{"ghz_probs":[1,0,0,0,0,0,0,0]}"#).unwrap();
        assert_eq!(doc.to_density(PSD_TOL).unwrap().get(1, 8), c(0.5));

        let round = StateDocument::from_density(&rho);
        let text = serde_json::to_string(&round).unwrap();
        let back: StateDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_density(PSD_TOL).unwrap(), rho);

        let bad: StateDocument = serde_json::from_str(r#"{"family":"kay","alpha":1.5}"#).unwrap();
        assert!(bad.to_density(PSD_TOL).is_err());
        let empty: StateDocument = serde_json::from_str("{}").unwrap();
        assert!(empty.to_density(PSD_TOL).is_err());
    }
}
