//! Entanglement criteria built from the anti-diagonal of the density
//! matrix.
//!
//! The central test compares the linear functional
//! `L(rho, X) = Re(X1 rho_18 + X2 rho_27 + X3 rho_36 + X4 rho_54)` with
//! `C(X) * kappa(rho)`, where `C(X)` is the largest value `|L|/kappa` can
//! take on a pure product state and `kappa(rho)` is the smallest of six
//! geometric means of diagonal entries. Fully separable states never
//! violate the inequality.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{self, NelderMeadOptions};
use crate::states::{apply_filter, DensityMatrix};

/// Margin by which `|L|` must exceed the bound to count as a violation.
pub const VIOLATION_TOL: f64 = 1e-12;

const GRID: usize = 64;
const STATIONARITY_TOL: f64 = 1e-9;

/// Coefficients `(X1, X2, X3, X4)` of the functional `L`. Never all zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[Complex64; 4]", into = "[Complex64; 4]")]
pub struct CriterionVector([Complex64; 4]);

impl CriterionVector {
    pub fn new(x: [Complex64; 4]) -> Result<Self> {
        if x.iter().all(|z| z.norm() == 0.0) {
            return Err(Error::InvalidParameter("criterion vector must not be zero".into()));
        }
        if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("criterion vector must be finite".into()));
        }
        Ok(Self(x))
    }

    pub fn from_real(x: [f64; 4]) -> Result<Self> {
        Self::new(x.map(|v| Complex64::new(v, 0.0)))
    }

    pub fn components(&self) -> &[Complex64; 4] {
        &self.0
    }

    pub fn is_real(&self) -> bool {
        self.0.iter().all(|z| z.im == 0.0)
    }

    pub fn real_parts(&self) -> [f64; 4] {
        self.0.map(|z| z.re)
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self(self.0.map(|z| z * t))
    }

    /// Rescaled so that the largest modulus is one.
    pub fn normalized(&self) -> Self {
        let m = self.0.iter().map(|z| z.norm()).fold(0.0, f64::max);
        self.scaled(1.0 / m)
    }
}

impl TryFrom<[Complex64; 4]> for CriterionVector {
    type Error = Error;

    fn try_from(x: [Complex64; 4]) -> Result<Self> {
        Self::new(x)
    }
}

impl From<CriterionVector> for [Complex64; 4] {
    fn from(x: CriterionVector) -> Self {
        x.0
    }
}

/// `Re(X1 rho_18 + X2 rho_27 + X3 rho_36 + X4 rho_54)`
pub fn functional_l(rho: &DensityMatrix, x: &CriterionVector) -> f64 {
    let v = rho.anti_diagonal();
    x.0.iter().zip(&v).map(|(xk, vk)| (xk * vk).re).sum()
}

/// Value of `L / kappa` on a pure product state with phases `(a, b, c)`:
/// `Re(X1 e^{i(a+b+c)} + X2 e^{ia} + X3 e^{ib} + X4 e^{ic})`.
pub fn f_value(x: &CriterionVector, a: f64, b: f64, c: f64) -> f64 {
    let [x1, x2, x3, x4] = x.0;
    let term = |z: Complex64, phase: f64| z.re * phase.cos() - z.im * phase.sin();
    term(x1, a + b + c) + term(x2, a) + term(x3, b) + term(x4, c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CMethod {
    /// Stationary point from the radical formulas, or the all-aligned
    /// vertex when an even number of coefficients is negative.
    ClosedForm,
    /// Best phase choice in `{0, pi}^3`.
    SignEnumeration,
    /// Exhaustive grid over the three phases plus local refinement.
    GridRefined,
    /// One-dimensional maximization after eliminating two phases exactly.
    PhaseReduced,
}

/// `C(X) = sup_{a,b,c} |F(X; a, b, c)|` with the phases attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CValueResult {
    pub c: f64,
    pub maximizer: [f64; 3],
    pub method: CMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
}

fn vertex_best(x: &[f64; 4]) -> (f64, [f64; 3]) {
    let [d, al, be, ga] = *x;
    let mut best = (f64::NEG_INFINITY, [0.0; 3]);
    for mask in 0..8u8 {
        let s = |bit: u8| if mask >> bit & 1 == 0 { 1.0 } else { -1.0 };
        let (sa, sb, sc) = (s(0), s(1), s(2));
        let v = (d * sa * sb * sc + al * sa + be * sb + ga * sc).abs();
        if v > best.0 {
            let ph = |s: f64| if s > 0.0 { 0.0 } else { PI };
            best = (v, [ph(sa), ph(sb), ph(sc)]);
        }
    }
    best
}

/// Closed-form `C` for real coefficients `(delta, alpha, beta, gamma)`,
/// i.e. `sup |delta cos(a+b+c) + alpha cos a + beta cos b + gamma cos c|`.
///
/// With an even number of negative coefficients all cosines can be aligned
/// and `C` is the sum of moduli. With an odd number, two signs are flipped
/// (shifting phases by `pi`) until exactly one is negative, and the
/// stationary point
/// `sin a = sqrt(Q/R) / (2 alpha)`, `sin b = sqrt(Q/R) / (2 beta)`,
/// `sin c = sqrt(Q/R) / (2 gamma)` is tried over all cosine signs. If the
/// radicals are not admissible the best `{0, pi}` vertex is returned. A
/// zero coefficient in the odd case is delegated to [`c_value_numeric`].
pub fn c_value_closed_form(x: [f64; 4]) -> CValueResult {
    let negatives = x.iter().filter(|v| **v < 0.0).count();
    if negatives % 2 == 0 {
        let (c, maximizer) = vertex_best(&x);
        return CValueResult { c, maximizer, method: CMethod::ClosedForm, q: None, r: None };
    }
    if x.contains(&0.0) {
        return c_value_numeric(&CriterionVector::from_real(x).expect("nonzero by sign count"));
    }

    // Shifting a (resp. b, c) by pi negates alpha (beta, gamma) together
    // with delta; shifting two of them negates that pair only.
    let mut y = x;
    let mut shift = [0.0; 3];
    if negatives == 3 {
        let neg: Vec<usize> = (0..4).filter(|&i| x[i] < 0.0).collect();
        let (i, j) = (neg[0], neg[1]);
        y[i] = -y[i];
        y[j] = -y[j];
        for k in [i, j] {
            if k > 0 {
                shift[k - 1] += PI;
            }
        }
    }

    let (vertex_c, vertex_at) = vertex_best(&y);
    let [d, al, be, ga] = y;
    let e1 = al * be * d;
    let e2 = al * be * ga;
    let e3 = al * d * ga;
    let e4 = be * d * ga;
    let q = -(e1 + e2 - e3 - e4) * (e1 - e2 + e3 - e4) * (e1 - e2 - e3 + e4) * (e1 + e2 + e3 + e4);
    let r = al * be * ga * d * (al * be - d * ga) * (al * ga - be * d) * (al * d - be * ga);

    let mut best: Option<(f64, [f64; 3])> = None;
    if r != 0.0 && q / r >= 0.0 {
        let root = (q / r).sqrt();
        let sines = [root / (2.0 * al), root / (2.0 * be), root / (2.0 * ga)];
        if sines.iter().all(|s| s.abs() <= 1.0) {
            let yv = CriterionVector::from_real(y).expect("nonzero");
            for mask in 0..8u8 {
                let ang: [f64; 3] = std::array::from_fn(|k| {
                    let cos = (1.0 - sines[k] * sines[k]).max(0.0).sqrt();
                    let cos = if mask >> k & 1 == 0 { cos } else { -cos };
                    sines[k].atan2(cos)
                });
                let [a, b, c] = ang;
                let total = (a + b + c).sin();
                let stationary = (d * total + al * a.sin()).abs() < STATIONARITY_TOL
                    && (d * total + be * b.sin()).abs() < STATIONARITY_TOL
                    && (d * total + ga * c.sin()).abs() < STATIONARITY_TOL;
                if !stationary {
                    continue;
                }
                let v = f_value(&yv, a, b, c).abs();
                if best.is_none_or(|(bv, _)| v > bv) {
                    best = Some((v, ang));
                }
            }
        }
    }

    let undo = |m: [f64; 3]| std::array::from_fn(|k| wrap(m[k] + shift[k]));
    match best {
        Some((c, at)) if c >= vertex_c => CValueResult {
            c,
            maximizer: undo(at),
            method: CMethod::ClosedForm,
            q: Some(q),
            r: Some(r),
        },
        _ => CValueResult {
            c: vertex_c,
            maximizer: undo(vertex_at),
            method: CMethod::SignEnumeration,
            q: Some(q),
            r: Some(r),
        },
    }
}

fn wrap(t: f64) -> f64 {
    t.rem_euclid(TAU)
}

/// Numerical `C` for arbitrary complex coefficients: a 64^3 grid over the
/// three phases, then Nelder-Mead refinement of the best grid points.
pub fn c_value_numeric(x: &CriterionVector) -> CValueResult {
    let step = TAU / GRID as f64;
    let table = |z: Complex64| -> Vec<f64> {
        (0..GRID).map(|t| {
            let p = t as f64 * step;
            z.re * p.cos() - z.im * p.sin()
        })
        .collect()
    };
    let [g1, g2, g3, g4] = x.0.map(table);

    // Keep the best few grid points as refinement seeds.
    const SEEDS: usize = 8;
    let mut seeds: Vec<(f64, [usize; 3])> = Vec::with_capacity(SEEDS + 1);
    for i in 0..GRID {
        for j in 0..GRID {
            let partial = g2[i] + g3[j];
            for k in 0..GRID {
                let v = (g1[(i + j + k) % GRID] + partial + g4[k]).abs();
                if seeds.len() < SEEDS || v > seeds[seeds.len() - 1].0 {
                    let pos = seeds.partition_point(|s| s.0 >= v);
                    seeds.insert(pos, (v, [i, j, k]));
                    seeds.truncate(SEEDS);
                }
            }
        }
    }

    let opts = NelderMeadOptions { max_iterations: 2000, ftol: 1e-15, xtol: 1e-12, ..Default::default() };
    let mut best = (f64::NEG_INFINITY, [0.0; 3]);
    for (v, [i, j, k]) in seeds {
        if v > best.0 {
            best = (v, [i as f64 * step, j as f64 * step, k as f64 * step]);
        }
        let start = [i as f64 * step, j as f64 * step, k as f64 * step];
        let m = optim::nelder_mead(|p| -f_value(x, p[0], p[1], p[2]).abs(), &start, 0.5 * step, &opts);
        if -m.value > best.0 {
            best = (-m.value, [m.x[0], m.x[1], m.x[2]]);
        }
    }
    if x.is_real() {
        let (vc, vat) = vertex_best(&x.real_parts());
        if vc > best.0 {
            best = (vc, vat);
        }
    }
    CValueResult { c: best.0, maximizer: best.1.map(wrap), method: CMethod::GridRefined, q: None, r: None }
}

/// `C` by exact elimination of two phases.
///
/// With `s = a + b`, the maximum of `|F|` over `a` and `c` at fixed `s` is
/// `|X2 + conj(X3) e^{-is}| + |X1 e^{is} + X4|`, so `C` is the maximum of
/// that sum over the single angle `s`.
pub fn c_value_phase_reduced(x: &CriterionVector) -> CValueResult {
    let [x1, x2, x3, x4] = x.0;
    let s_star = if x.is_real() {
        best_angle_real(&x.real_parts())
    } else {
        let (a1, u, a2, v) = reduced_coefficients(&x.0);
        reduced_max(a1, u, a2, v, DENSE).1
    };
    let w1 = x2 + x3.conj() * Complex64::cis(-s_star);
    let w2 = x1 * Complex64::cis(s_star) + x4;
    let a = -w1.arg();
    let b = s_star - a;
    let c = -w2.arg();
    CValueResult {
        c: w1.norm() + w2.norm(),
        maximizer: [wrap(a), wrap(b), wrap(c)],
        method: CMethod::PhaseReduced,
        q: None,
        r: None,
    }
}

/// For real coefficients the reduced objective is
/// `sqrt(A + B u) + sqrt(D + E u)` in `u = cos s`, concave on `[-1, 1]`.
fn best_angle_real(x: &[f64; 4]) -> f64 {
    let [x1, x2, x3, x4] = *x;
    let (a, b) = (x2 * x2 + x3 * x3, 2.0 * x2 * x3);
    let (d, e) = (x1 * x1 + x4 * x4, 2.0 * x1 * x4);
    let h = |u: f64| (a + b * u).max(0.0).sqrt() + (d + e * u).max(0.0).sqrt();
    let mut best = if h(1.0) >= h(-1.0) { 1.0 } else { -1.0 };
    if b * e < 0.0 {
        let u = ((e * e * a - b * b * d) / (b * e * (b - e))).clamp(-1.0, 1.0);
        if h(u) > h(best) {
            best = u;
        }
    }
    best.acos()
}

const COARSE: usize = 64;
const DENSE: usize = 4096;

fn unit_circle(n: usize) -> &'static [(f64, f64)] {
    static COARSE_TABLE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    static DENSE_TABLE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    let cell = match n {
        COARSE => &COARSE_TABLE,
        DENSE => &DENSE_TABLE,
        _ => unreachable!("unsupported grid size"),
    };
    cell.get_or_init(|| (0..n).map(|i| (TAU * i as f64 / n as f64).sin_cos()).map(|(s, c)| (c, s)).collect())
}

/// `(|X2|^2 + |X3|^2, X2 X3, |X1|^2 + |X4|^2, X1 conj(X4))`, so that the two
/// reduced moduli are `sqrt(a1 + 2 Re(u e^{is}))` and
/// `sqrt(a2 + 2 Re(v e^{is}))`.
fn reduced_coefficients(x: &[Complex64; 4]) -> (f64, Complex64, f64, Complex64) {
    let [x1, x2, x3, x4] = *x;
    (x2.norm_sqr() + x3.norm_sqr(), x2 * x3, x1.norm_sqr() + x4.norm_sqr(), x1 * x4.conj())
}

/// Maximum over `s` of `sqrt(a1 + 2 Re(u e^{is})) + sqrt(a2 + 2 Re(v e^{is}))`
/// and its location: a scan over `n` points, then golden-section refinement
/// around the best few discrete local maxima.
fn reduced_max(a1: f64, u: Complex64, a2: f64, v: Complex64, n: usize) -> (f64, f64) {
    let g_cs = |c: f64, s: f64| {
        (a1 + 2.0 * (u.re * c - u.im * s)).max(0.0).sqrt() + (a2 + 2.0 * (v.re * c - v.im * s)).max(0.0).sqrt()
    };
    let table = unit_circle(n);
    let vals: Vec<f64> = table.iter().map(|&(c, s)| g_cs(c, s)).collect();
    let mut peaks: Vec<(f64, usize)> = (0..n)
        .filter(|&i| vals[i] >= vals[(i + n - 1) % n] && vals[i] >= vals[(i + 1) % n])
        .map(|i| (vals[i], i))
        .collect();
    peaks.sort_by(|a, b| b.0.total_cmp(&a.0));
    let h = TAU / n as f64;
    let mut best = (vals[0], 0.0);
    for &(value, i) in peaks.iter().take(4) {
        if value > best.0 {
            best = (value, i as f64 * h);
        }
        let centre = i as f64 * h;
        let (s, refined) = optim::golden_max(
            |t| {
                let (s, c) = t.sin_cos();
                g_cs(c, s)
            },
            centre - h,
            centre + h,
            1e-12,
        );
        if refined > best.0 {
            best = (refined, s);
        }
    }
    best
}

/// `C(X)`: closed form for real coefficients, grid search otherwise.
pub fn c_value(x: &CriterionVector) -> CValueResult {
    if x.is_real() {
        c_value_closed_form(x.real_parts())
    } else {
        c_value_numeric(x)
    }
}

/// Which diagonal expression attains the `kappa` bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KappaTerm {
    /// `(rho_11 rho_44 rho_66 rho_77)^(1/4)`
    #[serde(rename = "fourth-root-odd")]
    FourthRootOdd,
    /// `(rho_22 rho_33 rho_55 rho_88)^(1/4)`
    #[serde(rename = "fourth-root-even")]
    FourthRootEven,
    /// `sqrt(rho_kk rho_{9-k,9-k})` for `k = 1..4`
    #[serde(rename = "pair k=1")]
    Pair1,
    #[serde(rename = "pair k=2")]
    Pair2,
    #[serde(rename = "pair k=3")]
    Pair3,
    #[serde(rename = "pair k=4")]
    Pair4,
}

impl fmt::Display for KappaTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            KappaTerm::FourthRootOdd => "fourth-root-odd",
            KappaTerm::FourthRootEven => "fourth-root-even",
            KappaTerm::Pair1 => "pair k=1",
            KappaTerm::Pair2 => "pair k=2",
            KappaTerm::Pair3 => "pair k=3",
            KappaTerm::Pair4 => "pair k=4",
        };
        f.write_str(s)
    }
}

/// Smallest of the six diagonal bounds on `kappa`, ties going to the first
/// listed term.
pub fn observation_bound(rho: &DensityMatrix) -> (f64, KappaTerm) {
    let d = rho.diagonal().map(|x| x.max(0.0));
    let terms = [
        ((d[0] * d[3] * d[5] * d[6]).powf(0.25), KappaTerm::FourthRootOdd),
        ((d[1] * d[2] * d[4] * d[7]).powf(0.25), KappaTerm::FourthRootEven),
        ((d[0] * d[7]).sqrt(), KappaTerm::Pair1),
        ((d[1] * d[6]).sqrt(), KappaTerm::Pair2),
        ((d[2] * d[5]).sqrt(), KappaTerm::Pair3),
        ((d[3] * d[4]).sqrt(), KappaTerm::Pair4),
    ];
    terms.into_iter().fold(terms[0], |best, t| if t.0 < best.0 { t } else { best })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionVerdict {
    /// `|L(rho, X)|`
    pub l_value: f64,
    pub c_value: f64,
    pub kappa: f64,
    /// `C(X) * kappa`
    pub bound: f64,
    pub violated: bool,
    pub x_used: CriterionVector,
    pub kappa_term_used: KappaTerm,
}

impl CriterionVerdict {
    /// `|L| / C`, the quantity compared against `kappa`.
    pub fn ratio(&self) -> f64 {
        if self.c_value > 0.0 {
            self.l_value / self.c_value
        } else {
            0.0
        }
    }
}

/// Evaluates the inequality for a given `X`.
pub fn evaluate(rho: &DensityMatrix, x: &CriterionVector) -> CriterionVerdict {
    let (kappa, term) = observation_bound(rho);
    let c = if x.is_real() { c_value_closed_form(x.real_parts()).c } else { c_value_phase_reduced(x).c };
    let l = functional_l(rho, x).abs();
    let bound = c * kappa;
    CriterionVerdict {
        l_value: l,
        c_value: c,
        kappa,
        bound,
        violated: l > bound + VIOLATION_TOL,
        x_used: *x,
        kappa_term_used: term,
    }
}

/// Search limits for [`optimize_x_with`].
#[derive(Debug, Clone, Copy)]
pub struct OptimizeOptions {
    pub max_iterations: usize,
    pub ratio_tol: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self { max_iterations: 500, ratio_tol: 1e-10 }
    }
}

pub fn optimize_x(rho: &DensityMatrix) -> (CriterionVector, CriterionVerdict) {
    optimize_x_with(rho, &OptimizeOptions::default())
}

/// Searches for the `X` maximizing `|L(rho, X)| / C(X)`.
///
/// Starts from `X ~ conj(anti-diagonal)`, the eight sign patterns
/// `(+-1, +-1, +-1, 1)` and the four unit vectors, each phase-aligned with
/// the state's anti-diagonal, and refines every start by Nelder-Mead. Real
/// anti-diagonals are searched over real `X` only.
pub fn optimize_x_with(rho: &DensityMatrix, opts: &OptimizeOptions) -> (CriterionVector, CriterionVerdict) {
    let v = rho.anti_diagonal();
    let vmax = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if vmax <= 1e-15 {
        let x = CriterionVector::from_real([1.0, 0.0, 0.0, 0.0]).expect("nonzero");
        let verdict = evaluate(rho, &x);
        return (x, verdict);
    }

    let align: [Complex64; 4] = v.map(|z| if z.norm() > 0.0 { z.conj() / z.norm() } else { Complex64::new(1.0, 0.0) });
    let mut starts: Vec<[Complex64; 4]> = vec![v.map(|z| z.conj() / vmax)];
    for mask in 0..8u8 {
        starts.push(std::array::from_fn(|k| {
            let s = if k < 3 && mask >> k & 1 == 1 { -1.0 } else { 1.0 };
            align[k] * s
        }));
    }
    for k in 0..4 {
        let mut e = [Complex64::new(0.0, 0.0); 4];
        e[k] = align[k];
        starts.push(e);
    }

    let real = v.iter().all(|z| z.im == 0.0);
    let nm = NelderMeadOptions { max_iterations: opts.max_iterations, ftol: opts.ratio_tol * 1e-2, xtol: 1e-9, ..Default::default() };

    let mut best: Option<(f64, [Complex64; 4])> = None;
    let mut consider = |ratio: f64, x: [Complex64; 4]| {
        if ratio.is_finite() && best.is_none_or(|(b, _)| ratio > b) {
            best = Some((ratio, x));
        }
    };

    if real {
        let vr = v.map(|z| z.re);
        let ratio = |p: &[f64]| {
            let x = [p[0], p[1], p[2], p[3]];
            let c = c_real(&x);
            if c <= 0.0 {
                return 0.0;
            }
            x.iter().zip(&vr).map(|(a, b)| a * b).sum::<f64>().abs() / c
        };
        for s in &starts {
            let x0 = s.map(|z| z.re);
            consider(ratio(&x0), s.map(|z| Complex64::new(z.re, 0.0)));
            let m = optim::nelder_mead(|p| -ratio(p), &x0, 0.2, &nm);
            consider(-m.value, std::array::from_fn(|k| Complex64::new(m.x[k], 0.0)));
        }
    } else {
        // For fixed moduli |X_k| and fixed psi = arg X1 - arg X2 - arg X3 -
        // arg X4, both C(X) and the best |L| over the remaining phases are
        // reduced maxima, so the search runs over five real parameters.
        let phase = v.map(|z| z.arg());
        let gauge = phase[0] - phase[1] - phase[2] - phase[3];
        let moduli = v.map(|z| z.norm());
        let c_of = |m: &[f64; 4], psi: f64, n: usize| {
            reduced_max(m[1] * m[1] + m[2] * m[2], Complex64::new(m[1] * m[2], 0.0), m[0] * m[0] + m[3] * m[3], Complex64::from_polar(m[0] * m[3], psi), n).0
        };
        let ratio = |p: &[f64]| {
            let m = [p[0].abs(), p[1].abs(), p[2].abs(), p[3].abs()];
            let den = c_of(&m, p[4], COARSE);
            if den <= 0.0 {
                return 0.0;
            }
            let weighted: [f64; 4] = std::array::from_fn(|k| m[k] * moduli[k]);
            c_of(&weighted, p[4] + gauge, COARSE) / den
        };
        let mut reduced_starts: Vec<[f64; 5]> = vec![
            [moduli[0] / vmax, moduli[1] / vmax, moduli[2] / vmax, moduli[3] / vmax, -gauge],
            [1.0, 1.0, 1.0, 1.0, -gauge],
            [1.0, 1.0, 1.0, 1.0, PI - gauge],
        ];
        for k in 0..4 {
            let mut e = [0.0, 0.0, 0.0, 0.0, -gauge];
            e[k] = 1.0;
            reduced_starts.push(e);
        }
        let mut best_reduced: Option<(f64, Vec<f64>)> = None;
        for s in &reduced_starts {
            let m = optim::nelder_mead(|p| -ratio(p), s, 0.2, &nm);
            for (value, p) in [(ratio(s), s.to_vec()), (-m.value, m.x)] {
                if value.is_finite() && best_reduced.as_ref().is_none_or(|(b, _)| value > *b) {
                    best_reduced = Some((value, p));
                }
            }
        }
        consider(ratio(&[moduli[0], moduli[1], moduli[2], moduli[3], -gauge]), starts[0]);
        if let Some((_, p)) = best_reduced {
            let m = [p[0].abs(), p[1].abs(), p[2].abs(), p[3].abs()];
            let psi = p[4] + gauge;
            let y = [Complex64::from_polar(m[0] * moduli[0], psi), (m[1] * moduli[1]).into(), (m[2] * moduli[2]).into(), (m[3] * moduli[3]).into()];
            if let Ok(y) = CriterionVector::new(y) {
                let [a, b, c] = c_value_phase_reduced(&y).maximizer;
                let theta = [psi + a + b + c, a, b, c];
                let x: [Complex64; 4] = std::array::from_fn(|k| Complex64::from_polar(m[k], theta[k] - phase[k]));
                if let Ok(cv) = CriterionVector::new(x) {
                    consider(evaluate(rho, &cv).ratio(), x);
                }
            }
        }
    }

    let (_, x) = best.expect("at least one start");
    let x = CriterionVector::new(x).map(|x| x.normalized()).unwrap_or_else(|_| {
        CriterionVector::new(starts[0]).expect("anti-diagonal is nonzero")
    });
    let verdict = evaluate(rho, &x);
    (x, verdict)
}

/// Exact `C` for real coefficients via the reduced concave problem.
pub(crate) fn c_real(x: &[f64; 4]) -> f64 {
    let [x1, x2, x3, x4] = *x;
    let (a, b) = (x2 * x2 + x3 * x3, 2.0 * x2 * x3);
    let (d, e) = (x1 * x1 + x4 * x4, 2.0 * x1 * x4);
    let h = |u: f64| (a + b * u).max(0.0).sqrt() + (d + e * u).max(0.0).sqrt();
    let mut c = h(1.0).max(h(-1.0));
    if b * e < 0.0 {
        let u = ((e * e * a - b * b * d) / (b * e * (b - e))).clamp(-1.0, 1.0);
        c = c.max(h(u));
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OldCriterionVerdict {
    /// `|rho_18|`
    pub abs_rho18: f64,
    /// `(rho_22 rho_33 rho_44 rho_55 rho_66 rho_77)^(1/6)`
    pub sixth_root_bound: f64,
    /// `(rho_22 rho_33 rho_55 rho_88)^(1/4)`
    pub fourth_root_bound: f64,
    pub violated: bool,
}

/// Single-element criterion: `|rho_18|` against two geometric means of
/// diagonal entries.
pub fn old_criterion(rho: &DensityMatrix) -> OldCriterionVerdict {
    let d = rho.diagonal().map(|x| x.max(0.0));
    let abs_rho18 = rho.get(1, 8).norm();
    let sixth = (d[1] * d[2] * d[3] * d[4] * d[5] * d[6]).powf(1.0 / 6.0);
    let fourth = (d[1] * d[2] * d[4] * d[7]).powf(0.25);
    OldCriterionVerdict {
        abs_rho18,
        sixth_root_bound: sixth,
        fourth_root_bound: fourth,
        violated: abs_rho18 > sixth + VIOLATION_TOL || abs_rho18 > fourth + VIOLATION_TOL,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WVerdict {
    /// `|rho_23| + |rho_35| + |rho_52|`
    pub lhs: f64,
    /// `rho_88^(1/6) + 1/4`
    pub rhs: f64,
    pub violated: bool,
    /// Filter parameter applied before testing, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter_x: Option<f64>,
}

/// Criterion for states near the W state.
pub fn w_criterion(rho: &DensityMatrix) -> WVerdict {
    let lhs = rho.get(2, 3).norm() + rho.get(3, 5).norm() + rho.get(5, 2).norm();
    let rhs = rho.get(8, 8).re.max(0.0).powf(1.0 / 6.0) + 0.25;
    WVerdict { lhs, rhs, violated: lhs > rhs + VIOLATION_TOL, filter_x: None }
}

/// [`w_criterion`] after the local filter `diag(1/x, x^2)` on each qubit,
/// with `x` chosen to maximize `lhs - rhs`. Local filters map product
/// states to product states, so a violation still certifies entanglement
/// of the unfiltered state.
pub fn w_criterion_filtered(rho: &DensityMatrix) -> WVerdict {
    let margin = |t: f64| match apply_filter(rho, t.exp()) {
        Ok(f) => {
            let w = w_criterion(&f);
            w.lhs - w.rhs
        }
        Err(_) => f64::NEG_INFINITY,
    };
    const N: usize = 160;
    let (lo, hi) = (-4.0, 4.0);
    let h = (hi - lo) / N as f64;
    let mut best = (margin(0.0), 0.0);
    for i in 0..=N {
        let t = lo + i as f64 * h;
        let m = margin(t);
        if m > best.0 {
            best = (m, t);
        }
    }
    let (t, _) = optim::golden_max(margin, best.1 - h, best.1 + h, 1e-10);
    let t = if margin(t) >= best.0 { t } else { best.1 };
    let x = t.exp();
    let filtered = apply_filter(rho, x).expect("margin was finite");
    WVerdict { filter_x: Some(x), ..w_criterion(&filtered) }
}
