//! Derivative-free local search used by the criterion and certificate
//! searches: Nelder-Mead simplex reflection and golden-section search.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    pub max_evaluations: usize,
    /// Stop when the spread of function values over the simplex is below
    /// this and the simplex is smaller than `xtol`.
    pub ftol: f64,
    pub xtol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_iterations: 500, max_evaluations: usize::MAX, ftol: 1e-12, xtol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub iterations: usize,
}

/// Minimizes `f` starting from a simplex around `x0` with edge `step`.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    opts: &NelderMeadOptions,
) -> Minimum {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let point = |c: &[f64], w: &[f64], t: f64, out: &mut Vec<f64>| {
        out.clear();
        out.extend(c.iter().zip(w).map(|(ci, wi)| ci + t * (wi - ci)));
    };

    while iterations < opts.max_iterations && evals < opts.max_evaluations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let size = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if (worst - best).abs() <= opts.ftol && size <= opts.xtol {
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }

        let worst_x = simplex[n].0.clone();
        point(&centroid, &worst_x, -1.0, &mut trial);
        let fr = eval(&trial, &mut evals);
        if fr < simplex[0].1 {
            let reflected = trial.clone();
            point(&centroid, &worst_x, -2.0, &mut trial);
            let fe = eval(&trial, &mut evals);
            simplex[n] = if fe < fr { (trial.clone(), fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (trial.clone(), fr);
        } else {
            let outside = fr < worst;
            let t = if outside { -0.5 } else { 0.5 };
            point(&centroid, &worst_x, t, &mut trial);
            let fc = eval(&trial, &mut evals);
            if fc < fr.min(worst) {
                simplex[n] = (trial.clone(), fc);
            } else {
                let bx = simplex[0].0.clone();
                for (x, v) in simplex[1..].iter_mut() {
                    for (xi, b) in x.iter_mut().zip(&bx) {
                        *xi = b + 0.5 * (*xi - b);
                    }
                    *v = eval(x, &mut evals);
                }
            }
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum { x, value, evaluations: evals, iterations }
}

/// Maximizes a unimodal `f` on `[lo, hi]` by golden-section search.
pub fn golden_max(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}
