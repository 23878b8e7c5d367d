//! Multi-start Levenberg-Marquardt fit of the bivariate law in loss space.
//!
//! The optimizer works on `theta = (ln a, ln b, ln alpha, ln beta, u)` with
//! `P` and `D` scaled by their geometric means, so the data terms are
//! `a (P/P0)^-alpha` and `b (D/D0)^-beta`, and `L_inf = min(loss) * sigmoid(u)`.
//! Coefficients are mapped back with `k_P = a P0^alpha`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::law::{error_stats, residuals, FitParams, LawError, RunObservation};
use crate::codecs::Representation;
use crate::scalar::Scalar;

const NP: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub restarts: usize,
    pub seed: u64,
    /// Relative decrease of the objective below which a restart stops.
    pub tol: f64,
    pub max_iter: usize,
    pub include_multi_epoch: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            restarts: 64,
            seed: 0,
            tol: 1e-10,
            max_iter: 500,
            include_multi_epoch: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics<T> {
    pub n: usize,
    pub mae: T,
    pub rmse: T,
    /// Observed minus predicted, in the order of the observations used.
    pub residuals: Vec<T>,
    pub converged: bool,
    pub restarts_used: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("need at least 8 observations, got {0}")]
    TooFewObservations(usize),
    #[error("rank-deficient grid: only one distinct {0} value")]
    RankDeficient(&'static str),
    #[error("no scaling signal: all losses are equal")]
    NoScalingSignal,
    #[error("observation {index}: loss must be positive and finite")]
    BadLoss { index: usize },
    #[error("no restart converged to a finite objective after {0} restarts")]
    NonConvergence(usize),
    #[error(transparent)]
    Law(#[from] LawError),
}

struct Problem<T> {
    lx: Vec<T>,
    ly: Vec<T>,
    y: Vec<T>,
    ln_p0: T,
    ln_d0: T,
    floor_cap: T,
}

#[derive(Clone, Copy)]
struct Outcome<T> {
    theta: [T; NP],
    cost: T,
    converged: bool,
    iterations: usize,
}

fn sigmoid<T: Scalar>(u: T) -> T {
    T::one() / (T::one() + (-u).exp())
}

impl<T: Scalar> Problem<T> {
    fn new(obs: &[&RunObservation]) -> Problem<T> {
        let n = T::from_usize(obs.len()).expect("length fits the scalar");
        let lp: Vec<T> = obs.iter().map(|o| T::lit(o.p).ln()).collect();
        let ld: Vec<T> = obs.iter().map(|o| T::lit(o.d).ln()).collect();
        let ln_p0 = lp.iter().copied().sum::<T>() / n;
        let ln_d0 = ld.iter().copied().sum::<T>() / n;
        let y: Vec<T> = obs.iter().map(|o| T::lit(o.loss)).collect();
        let floor_cap = y.iter().copied().fold(T::infinity(), T::min);
        Problem {
            lx: lp.into_iter().map(|v| v - ln_p0).collect(),
            ly: ld.into_iter().map(|v| v - ln_d0).collect(),
            y,
            ln_p0,
            ln_d0,
            floor_cap,
        }
    }

    fn residuals_into(&self, th: &[T; NP], r: &mut [T]) -> T {
        let (a, b, al, be) = (th[0].exp(), th[1].exp(), th[2].exp(), th[3].exp());
        let floor = self.floor_cap * sigmoid(th[4]);
        let mut cost = T::zero();
        for i in 0..self.y.len() {
            let v = floor + a * (-al * self.lx[i]).exp() + b * (-be * self.ly[i]).exp() - self.y[i];
            r[i] = v;
            cost = cost + v * v;
        }
        cost * T::lit(0.5)
    }

    fn jacobian_into(&self, th: &[T; NP], jac: &mut [[T; NP]]) {
        let (a, b, al, be) = (th[0].exp(), th[1].exp(), th[2].exp(), th[3].exp());
        let s = sigmoid(th[4]);
        let dfloor = self.floor_cap * s * (T::one() - s);
        for i in 0..self.y.len() {
            let ta = a * (-al * self.lx[i]).exp();
            let tb = b * (-be * self.ly[i]).exp();
            jac[i] = [ta, tb, -ta * self.lx[i] * al, -tb * self.ly[i] * be, dfloor];
        }
    }

    /// Given exponents and floor, least-squares `a`, `b`; clamped positive.
    fn initial_coefficients(&self, al: T, be: T, floor: T) -> (T, T) {
        let (mut s11, mut s12, mut s22, mut t1, mut t2) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
        let mut mean = T::zero();
        for i in 0..self.y.len() {
            let x1 = (-al * self.lx[i]).exp();
            let x2 = (-be * self.ly[i]).exp();
            let z = self.y[i] - floor;
            s11 = s11 + x1 * x1;
            s12 = s12 + x1 * x2;
            s22 = s22 + x2 * x2;
            t1 = t1 + x1 * z;
            t2 = t2 + x2 * z;
            mean = mean + z;
        }
        let lo = (mean / T::from_usize(self.y.len()).expect("length fits")).abs() * T::lit(1e-3) + T::lit(1e-12);
        let det = s11 * s22 - s12 * s12;
        let (a, b) = if det.abs() > T::epsilon() * s11 * s22 {
            ((t1 * s22 - t2 * s12) / det, (t2 * s11 - t1 * s12) / det)
        } else {
            (lo, lo)
        };
        (a.max(lo), b.max(lo))
    }

    fn levenberg_marquardt(&self, mut th: [T; NP], cfg: &FitConfig) -> Outcome<T> {
        let n = self.y.len();
        let mut r = vec![T::zero(); n];
        let mut r_try = vec![T::zero(); n];
        let mut jac = vec![[T::zero(); NP]; n];
        let mut cost = self.residuals_into(&th, &mut r);
        let tol = T::lit(cfg.tol);
        let mut lambda = T::lit(1e-3);
        let lambda_max = T::lit(1e16);
        let mut iterations = 0;
        let mut converged = false;
        if !cost.is_finite() {
            return Outcome {
                theta: th,
                cost: T::infinity(),
                converged,
                iterations,
            };
        }
        while iterations < cfg.max_iter {
            iterations += 1;
            self.jacobian_into(&th, &mut jac);
            let mut h = [[T::zero(); NP]; NP];
            let mut g = [T::zero(); NP];
            for (row, &ri) in jac.iter().zip(&r) {
                for j in 0..NP {
                    g[j] = g[j] + row[j] * ri;
                    for k in j..NP {
                        h[j][k] = h[j][k] + row[j] * row[k];
                    }
                }
            }
            for j in 0..NP {
                for k in 0..j {
                    h[j][k] = h[k][j];
                }
            }
            let dmax = (0..NP).map(|j| h[j][j]).fold(T::zero(), T::max);
            let dfloor = dmax * T::lit(1e-12) + T::min_positive_value();
            let mut accepted = false;
            while lambda <= lambda_max {
                let mut m = h;
                for j in 0..NP {
                    m[j][j] = m[j][j] + lambda * h[j][j].max(dfloor);
                }
                let rhs = g.map(|v| -v);
                if let Some(step) = solve(m, rhs) {
                    let mut cand = th;
                    for j in 0..NP {
                        cand[j] = cand[j] + step[j];
                    }
                    let c = self.residuals_into(&cand, &mut r_try);
                    if c.is_finite() && c < cost {
                        let rel = (cost - c) / cost;
                        th = cand;
                        cost = c;
                        std::mem::swap(&mut r, &mut r_try);
                        lambda = (lambda / T::lit(3.0)).max(T::lit(1e-12));
                        accepted = true;
                        if rel < tol || cost == T::zero() {
                            converged = true;
                        }
                        break;
                    }
                }
                lambda = lambda * T::lit(4.0);
            }
            if !accepted {
                // no descent direction left at working precision
                converged = true;
            }
            if converged {
                break;
            }
        }
        Outcome {
            theta: th,
            cost,
            converged,
            iterations,
        }
    }

    fn params(&self, th: &[T; NP]) -> FitParams<T> {
        let alpha = th[2].exp();
        let beta = th[3].exp();
        FitParams {
            l_inf: self.floor_cap * sigmoid(th[4]),
            k_p: (th[0] + alpha * self.ln_p0).exp(),
            k_d: (th[1] + beta * self.ln_d0).exp(),
            alpha,
            beta,
        }
    }
}

/// Gaussian elimination with partial pivoting.
fn solve<T: Scalar>(mut m: [[T; NP]; NP], mut b: [T; NP]) -> Option<[T; NP]> {
    for col in 0..NP {
        let piv = (col..NP).max_by(|&i, &j| {
            m[i][col]
                .abs()
                .partial_cmp(&m[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if !(m[piv][col].abs() > T::zero()) {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..NP {
            let f = m[row][col] / m[col][col];
            for k in col..NP {
                m[row][k] = m[row][k] - f * m[col][k];
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = [T::zero(); NP];
    for row in (0..NP).rev() {
        let mut s = b[row];
        for k in row + 1..NP {
            s = s - m[row][k] * x[k];
        }
        x[row] = s / m[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    let f = inv;
    while i > 0 {
        out += (i % base) as f64 * inv;
        i /= base;
        inv *= f;
    }
    out
}

/// Quasi-random starting points over (ln alpha, ln beta, u) with a seeded
/// Cranley-Patterson rotation.
fn start_points(count: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
    let lo = [0.005f64.ln(), 0.005f64.ln(), -4.0];
    let hi = [0.0, 0.0, 6.0];
    (0..count as u64)
        .map(|i| {
            let mut p = [0.0; 3];
            for (d, base) in [2u64, 3, 5].into_iter().enumerate() {
                let h = (radical_inverse(i + 1, base) + shift[d]).fract();
                p[d] = lo[d] + h * (hi[d] - lo[d]);
            }
            p
        })
        .collect()
}

fn distinct(values: impl Iterator<Item = f64>) -> usize {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// Observations that enter the fit under `config`.
pub fn select_observations<'a>(obs: &'a [RunObservation], config: &FitConfig) -> Vec<&'a RunObservation> {
    obs.iter()
        .filter(|o| config.include_multi_epoch || !o.is_multi_epoch())
        .collect()
}

pub fn fit_bivariate<T: Scalar>(
    obs: &[RunObservation],
    config: &FitConfig,
) -> Result<(FitParams<T>, FitDiagnostics<T>), FitError> {
    let used = select_observations(obs, config);
    if used.len() < 8 {
        return Err(FitError::TooFewObservations(used.len()));
    }
    for (index, o) in used.iter().enumerate() {
        if !(o.p > 0.0 && o.d > 0.0 && o.p.is_finite() && o.d.is_finite()) {
            return Err(LawError::NonPositiveInput { p: o.p, d: o.d }.into());
        }
        if !(o.loss > 0.0 && o.loss.is_finite()) {
            return Err(FitError::BadLoss { index });
        }
    }
    if distinct(used.iter().map(|o| o.p)) < 2 {
        return Err(FitError::RankDeficient("P"));
    }
    if distinct(used.iter().map(|o| o.d)) < 2 {
        return Err(FitError::RankDeficient("D"));
    }
    let (lo, hi) = used.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), o| {
        (lo.min(o.loss), hi.max(o.loss))
    });
    if hi - lo <= 1e-12 * hi {
        return Err(FitError::NoScalingSignal);
    }

    let problem = Problem::<T>::new(&used);
    let starts = start_points(config.restarts.max(1), config.seed);
    let outcomes: Vec<Outcome<T>> = starts
        .par_iter()
        .map(|s| {
            let (al, be, u) = (T::lit(s[0]).exp(), T::lit(s[1]).exp(), T::lit(s[2]));
            let (a, b) = problem.initial_coefficients(al, be, problem.floor_cap * sigmoid(u));
            let th = [a.ln(), b.ln(), T::lit(s[0]), T::lit(s[1]), u];
            problem.levenberg_marquardt(th, config)
        })
        .collect();
    let best = outcomes
        .iter()
        .enumerate()
        .filter(|(_, o)| o.cost.is_finite())
        .min_by(|(i, a), (j, b)| a.cost.partial_cmp(&b.cost).expect("finite costs").then(i.cmp(j)))
        .map(|(_, o)| *o)
        .ok_or(FitError::NonConvergence(starts.len()))?;

    let params = problem.params(&best.theta);
    let owned: Vec<RunObservation> = used.iter().map(|o| (*o).clone()).collect();
    let res = residuals(&params, &owned)?;
    let (mae, rmse) = error_stats(&res)?;
    Ok((
        params,
        FitDiagnostics {
            n: used.len(),
            mae,
            rmse,
            residuals: res,
            converged: best.converged,
            restarts_used: starts.len(),
            iterations: best.iterations,
        },
    ))
}

/// Fit artifact with one Table-1 style row plus the full parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport<T> {
    pub representation: Representation,
    pub alpha: T,
    pub beta: T,
    pub mae: T,
    pub rmse: T,
    pub n: usize,
    #[serde(rename = "L_inf")]
    pub l_inf: T,
    #[serde(rename = "k_P")]
    pub k_p: T,
    #[serde(rename = "k_D")]
    pub k_d: T,
    pub converged: bool,
    pub restarts_used: usize,
}

impl<T: Scalar> FitReport<T> {
    pub fn new(representation: Representation, p: &FitParams<T>, d: &FitDiagnostics<T>) -> Self {
        FitReport {
            representation,
            alpha: p.alpha,
            beta: p.beta,
            mae: d.mae,
            rmse: d.rmse,
            n: d.n,
            l_inf: p.l_inf,
            k_p: p.k_p,
            k_d: p.k_d,
            converged: d.converged,
            restarts_used: d.restarts_used,
        }
    }

    pub fn params(&self) -> FitParams<T> {
        FitParams::new(self.l_inf, self.k_p, self.k_d, self.alpha, self.beta)
    }
}
