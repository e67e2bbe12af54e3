//! Dense complex linear algebra for the small matrices of a three-qubit
//! system.
//!
//! Basis index `i` in `0..8` encodes the qubits `q1 q2 q3` as the bits of
//! `i`, with `q1` the most significant bit, so the basis is ordered
//! `|000>, |001>, ..., |111>`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul};
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::states::DensityMatrix;

/// Default tolerance for the Hermiticity check.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// A partial transpose is called negative when its smallest eigenvalue is
/// below `-PSD_TOL`.
pub const PSD_TOL: f64 = 1e-10;

const JACOBI_OFF_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        Self { dim, entries }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        Self::from_fn(dim, |i, j| if i == j { Complex64::new(diag[i], 0.0) } else { ZERO })
    }

    /// Builds a matrix from rows. Fails unless every row has `rows.len()`
    /// entries.
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::Dimension { expected: dim, found: bad.len() });
        }
        Ok(Self { dim, entries: rows.into_iter().flatten().collect() })
    }

    /// `|v><v|`
    pub fn outer(v: &[Complex64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.entries.chunks(self.dim)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { dim: self.dim, entries: self.entries.iter().map(|z| z * factor).collect() }
    }

    pub fn kron(&self, other: &Self) -> Self {
        let n = other.dim;
        Self::from_fn(self.dim * n, |i, j| self[(i / n, j / n)] * other[(i % n, j % n)])
    }

    /// `max |M - M^dagger|` over all entries.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_asymmetry() <= tol
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    s += self[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.entries[i * n + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

/// All eigenvalues of a Hermitian matrix, ascending.
///
/// Cyclic Jacobi sweeps with complex rotations: each pivot `a_pq` is first
/// made real by a diagonal phase, then annihilated by a real plane
/// rotation. Sweeps stop once the off-diagonal Frobenius norm drops below
/// `1e-13` (relative to the matrix norm when that exceeds one).
pub fn hermitian_eigenvalues(m: &ComplexMatrix, tol: f64) -> Result<Vec<f64>> {
    let asym = m.max_asymmetry();
    if asym > tol {
        return Err(Error::NotHermitian { max_asymmetry: asym });
    }
    let n = m.dim();
    // Symmetrize so rounding in the input cannot accumulate.
    let mut a = ComplexMatrix::from_fn(n, |i, j| {
        if i == j {
            Complex64::new(m[(i, i)].re, 0.0)
        } else {
            0.5 * (m[(i, j)] + m[(j, i)].conj())
        }
    });
    let threshold = JACOBI_OFF_TOL * a.frobenius_norm().max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        if a.off_diagonal_norm() < threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, p, q);
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

fn rotate(a: &mut ComplexMatrix, p: usize, q: usize) {
    let n = a.dim();
    let apq = a[(p, q)];
    let g = apq.norm();
    if g < 1e-300 {
        return;
    }

    // Phase on row/column q so that a_pq becomes the real number g.
    let phase = apq / g;
    for r in 0..n {
        if r != q {
            a[(r, q)] *= phase.conj();
            a[(q, r)] *= phase;
        }
    }

    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * g);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    a[(p, p)] = Complex64::new(app - t * g, 0.0);
    a[(q, q)] = Complex64::new(aqq + t * g, 0.0);
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = a[(r, p)];
        let arq = a[(r, q)];
        let new_rp = arp * c - arq * s;
        let new_rq = arp * s + arq * c;
        a[(r, p)] = new_rp;
        a[(p, r)] = new_rp.conj();
        a[(r, q)] = new_rq;
        a[(q, r)] = new_rq.conj();
    }
}

/// One of the three qubits; also names the bipartition `party | rest`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Party {
    A,
    B,
    C,
}

impl Party {
    pub const ALL: [Party; 3] = [Party::A, Party::B, Party::C];

    /// Bit mask of this qubit within a basis index.
    pub fn mask(self) -> usize {
        match self {
            Party::A => 0b100,
            Party::B => 0b010,
            Party::C => 0b001,
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rest = match self {
            Party::A => "A|BC",
            Party::B => "B|AC",
            Party::C => "C|AB",
        };
        f.write_str(rest)
    }
}

/// Transposes the tensor factor of `party` in an 8x8 matrix.
pub fn partial_transpose(m: &ComplexMatrix, party: Party) -> ComplexMatrix {
    assert_eq!(m.dim(), 8, "partial transpose is defined for three qubits");
    let mask = party.mask();
    ComplexMatrix::from_fn(8, |i, j| {
        let si = (i & !mask) | (j & mask);
        let sj = (j & !mask) | (i & mask);
        m[(si, sj)]
    })
}

/// Smallest eigenvalue of the partial transpose of `rho` with respect to
/// `party`. The state is NPT for that bipartition iff this is below
/// `-PSD_TOL`.
pub fn min_eigenvalue_after_pt(rho: &DensityMatrix, party: Party) -> f64 {
    let pt = partial_transpose(rho.matrix(), party);
    // Partial transposition only permutes entries, Hermiticity is exact.
    hermitian_eigenvalues(&pt, HERMITIAN_TOL).expect("partial transpose stays Hermitian")[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> ComplexMatrix {
        let (a, b, c, d) = match self {
            Pauli::I => (ONE, ZERO, ZERO, ONE),
            Pauli::X => (ZERO, ONE, ONE, ZERO),
            Pauli::Y => (ZERO, -I, I, ZERO),
            Pauli::Z => (ONE, ZERO, ZERO, -ONE),
        };
        ComplexMatrix { dim: 2, entries: vec![a, b, c, d] }
    }

    fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Three-qubit Pauli string such as `XYY`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliWord(pub [Pauli; 3]);

impl PauliWord {
    pub fn matrix(&self) -> ComplexMatrix {
        let [p, q, r] = self.0;
        p.matrix().kron(&q.matrix()).kron(&r.matrix())
    }
}

impl FromStr for PauliWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters: Vec<Pauli> = s
            .chars()
            .map(|ch| match ch.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                _ => Err(Error::InvalidPauliWord(s.to_string())),
            })
            .collect::<Result<_>>()?;
        match letters.as_slice() {
            &[p, q, r] => Ok(PauliWord([p, q, r])),
            _ => Err(Error::InvalidPauliWord(s.to_string())),
        }
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|p| write!(f, "{}", p.letter()))
    }
}

/// `Tr(rho P)` for an 8x8 matrix. Real for Hermitian `rho`.
pub fn pauli_expectation(rho: &ComplexMatrix, word: &PauliWord) -> f64 {
    trace_product(rho, &word.matrix()).re
}

/// Convenience wrapper parsing the word first.
pub fn pauli_expectation_str(rho: &ComplexMatrix, word: &str) -> Result<f64> {
    Ok(pauli_expectation(rho, &word.parse()?))
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    let n = a.dim();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ghz_projector() -> ComplexMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = vec![ZERO; 8];
        v[0] = Complex64::new(h, 0.0);
        v[7] = Complex64::new(h, 0.0);
        ComplexMatrix::outer(&v)
    }

    #[test]
    fn identity_eigenvalues() {
        let eig = hermitian_eigenvalues(&ComplexMatrix::identity(8), HERMITIAN_TOL).unwrap();
        assert_eq!(eig, vec![1.0; 8]);
    }

    #[test]
    fn diagonal_eigenvalues_are_sorted() {
        let d = [0.4, 0.1, 0.8, 0.3, 0.5, 0.2, 0.7, 0.6];
        let eig = hermitian_eigenvalues(&ComplexMatrix::from_real_diagonal(&d), HERMITIAN_TOL).unwrap();
        assert_eq!(eig, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]);
    }

    #[test]
    fn two_by_two_complex_block() {
        // [[1, 2i], [-2i, 1]] has eigenvalues -1 and 3.
        let m = ComplexMatrix::from_rows(vec![
            vec![ONE, Complex64::new(0.0, 2.0)],
            vec![Complex64::new(0.0, -2.0), ONE],
        ])
        .unwrap();
        let eig = hermitian_eigenvalues(&m, HERMITIAN_TOL).unwrap();
        assert!((eig[0] + 1.0).abs() < 1e-14);
        assert!((eig[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let mut m = ComplexMatrix::identity(8);
        m[(0, 3)] = Complex64::new(0.5, 0.0);
        match hermitian_eigenvalues(&m, HERMITIAN_TOL) {
            Err(Error::NotHermitian { max_asymmetry }) => assert!((max_asymmetry - 0.5).abs() < 1e-15),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn ghz_partial_transpose_is_negative() {
        let g = ghz_projector();
        for party in Party::ALL {
            let eig = hermitian_eigenvalues(&partial_transpose(&g, party), HERMITIAN_TOL).unwrap();
            assert!((eig[0] + 0.5).abs() < 1e-12, "{party}: {}", eig[0]);
        }
    }

    #[test]
    fn product_basis_state_is_unchanged_by_partial_transpose() {
        let mut m = ComplexMatrix::zeros(8);
        m[(0, 0)] = ONE;
        for party in Party::ALL {
            assert_eq!(partial_transpose(&m, party), m);
        }
    }

    #[test]
    fn partial_transpose_moves_the_right_entry() {
        // <000|rho|111> lands on <100|.|011> after transposing qubit A.
        let g = ghz_projector();
        let pt = partial_transpose(&g, Party::A);
        assert_eq!(pt[(4, 3)], g[(0, 7)]);
        assert_eq!(pt[(0, 7)], ZERO);
    }

    #[test]
    fn pauli_words_parse_and_reject() {
        let w: PauliWord = "xyz".parse().unwrap();
        assert_eq!(w.to_string(), "XYZ");
        assert!("XYQ".parse::<PauliWord>().is_err());
        assert!("XY".parse::<PauliWord>().is_err());
        assert!("XYZZ".parse::<PauliWord>().is_err());
    }

    #[test]
    fn stabilizer_expectations_of_ghz() {
        let g = ghz_projector();
        let expect = [("III", 1.0), ("ZZI", 1.0), ("IZZ", 1.0), ("XXX", 1.0), ("YYX", -1.0), ("ZII", 0.0)];
        for (w, v) in expect {
            let e = pauli_expectation_str(&g, w).unwrap();
            assert!((e - v).abs() < 1e-15, "{w}: {e}");
        }
    }

    #[test]
    fn kron_of_identities() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(i2.kron(&i2).kron(&i2), ComplexMatrix::identity(8));
    }
}
