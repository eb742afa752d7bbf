//! Bounded Nelder-Mead simplex search with Latin-hypercube multistart.
//!
//! The calibration and QMLE objectives mix moment ratios, penalty barriers,
//! and integral terms, so gradients are unreliable; a simplex search with
//! box projection is robust and fully deterministic for a fixed start.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "bound vectors must have equal length");
        for (l, h) in lo.iter().zip(&hi) {
            assert!(l < h, "lower bound {l} must be below upper bound {h}");
        }
        Bounds { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = xi.clamp(self.lo[i], self.hi[i]);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| v >= l && v <= h)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NmOptions {
    pub max_evals: usize,
    /// Relative simplex size below which the search stops.
    pub x_tol: f64,
    /// Absolute spread of objective values below which the search stops.
    pub f_tol: f64,
}

impl Default for NmOptions {
    fn default() -> Self {
        NmOptions {
            max_evals: 2000,
            x_tol: 1e-9,
            f_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub n_evals: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0` with an initial simplex of per-axis size `scale`,
/// projecting every trial point into `bounds`.
pub fn nelder_mead<F>(
    mut f: F,
    x0: &[f64],
    scale: &[f64],
    bounds: &Bounds,
    opts: &NmOptions,
) -> NmResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    assert_eq!(dim, bounds.dim());
    assert_eq!(dim, scale.len());
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut n_evals = 0usize;
    let mut eval = |x: &[f64], n_evals: &mut usize| -> f64 {
        *n_evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    // Initial simplex: x0 plus one perturbed vertex per axis. If clamping
    // collapses a vertex onto x0, push the perturbation the other way.
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    let mut start = x0.to_vec();
    bounds.clamp(&mut start);
    simplex.push(start.clone());
    for i in 0..dim {
        let mut v = start.clone();
        v[i] += scale[i];
        bounds.clamp(&mut v);
        if (v[i] - start[i]).abs() < 1e-14 * (1.0 + start[i].abs()) {
            v[i] = start[i] - scale[i];
            bounds.clamp(&mut v);
        }
        simplex.push(v);
    }
    let mut fx: Vec<f64> = simplex.iter().map(|v| eval(v, &mut n_evals)).collect();

    let mut converged = false;
    while n_evals < opts.max_evals {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| fx[a].partial_cmp(&fx[b]).unwrap());
        let reordered: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let refx: Vec<f64> = order.iter().map(|&i| fx[i]).collect();
        simplex = reordered;
        fx = refx;

        let f_spread = fx[dim] - fx[0];
        let x_spread = (0..dim)
            .map(|i| {
                let lo = simplex.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min);
                let hi = simplex.iter().map(|v| v[i]).fold(f64::NEG_INFINITY, f64::max);
                (hi - lo) / (1.0 + simplex[0][i].abs())
            })
            .fold(0.0f64, f64::max);
        if f_spread.abs() < opts.f_tol || x_spread < opts.x_tol {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; dim];
        for v in simplex.iter().take(dim) {
            for i in 0..dim {
                centroid[i] += v[i] / dim as f64;
            }
        }

        let project = |t: f64| -> Vec<f64> {
            let mut x: Vec<f64> = (0..dim)
                .map(|i| centroid[i] + t * (centroid[i] - simplex[dim][i]))
                .collect();
            bounds.clamp(&mut x);
            x
        };

        let xr = project(alpha);
        let fr = eval(&xr, &mut n_evals);
        if fr < fx[0] {
            let xe = project(gamma);
            let fe = eval(&xe, &mut n_evals);
            if fe < fr {
                simplex[dim] = xe;
                fx[dim] = fe;
            } else {
                simplex[dim] = xr;
                fx[dim] = fr;
            }
        } else if fr < fx[dim - 1] {
            simplex[dim] = xr;
            fx[dim] = fr;
        } else {
            let xc = if fr < fx[dim] {
                project(rho)
            } else {
                project(-rho)
            };
            let fc = eval(&xc, &mut n_evals);
            if fc < fx[dim].min(fr) {
                simplex[dim] = xc;
                fx[dim] = fc;
            } else {
                for v in 1..=dim {
                    let (head, tail) = simplex.split_at_mut(v);
                    for (i, s) in tail[0].iter_mut().enumerate() {
                        *s = head[0][i] + sigma * (*s - head[0][i]);
                    }
                    fx[v] = eval(&simplex[v].clone(), &mut n_evals);
                }
            }
        }
    }

    let best = fx
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    NmResult {
        x: simplex[best].clone(),
        f: fx[best],
        n_evals,
        converged,
    }
}

/// `n` Latin-hypercube points inside `bounds`, one stratum per point and
/// axis, shuffled independently per axis.
pub fn latin_hypercube(bounds: &Bounds, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let dim = bounds.dim();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut strata: Vec<f64> = (0..n)
            .map(|s| {
                let u: f64 = rng.gen();
                let frac = (s as f64 + u) / n as f64;
                bounds.lo[i] + frac * (bounds.hi[i] - bounds.lo[i])
            })
            .collect();
        for s in (1..n).rev() {
            let j = rng.gen_range(0..=s);
            strata.swap(s, j);
        }
        columns.push(strata);
    }
    (0..n)
        .map(|s| (0..dim).map(|i| columns[i][s]).collect())
        .collect()
}
