use serde::{Deserialize, Serialize};

use super::FrontierError;
use crate::scalar::Scalar;
use crate::scaling::FitParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint<T> {
    #[serde(rename = "C")]
    pub c: T,
    #[serde(rename = "P_opt")]
    pub p_opt: T,
    #[serde(rename = "D_opt")]
    pub d_opt: T,
    pub rho_opt: T,
    #[serde(rename = "L_opt")]
    pub l_opt: T,
}

fn check<T: Scalar>(p: &FitParams<T>, c: T) -> Result<(), FrontierError> {
    p.validate()?;
    if !(c > T::zero() && c.is_finite()) {
        return Err(FrontierError::NonPositiveCompute(c.as_f64()));
    }
    Ok(())
}

/// Loss-minimizing parameter count at compute `c`.
pub fn p_opt<T: Scalar>(p: &FitParams<T>, c: T) -> Result<T, FrontierError> {
    check(p, c)?;
    let s = p.alpha + p.beta;
    let prefactor = ((p.alpha * p.k_p).ln() - (p.beta * p.k_d).ln()) / s;
    Ok((prefactor + p.beta / s * c.ln()).exp())
}

pub fn d_opt<T: Scalar>(p: &FitParams<T>, c: T) -> Result<T, FrontierError> {
    Ok(c / p_opt(p, c)?)
}

/// Optimal tokens per parameter, from its own closed form.
pub fn rho_opt<T: Scalar>(p: &FitParams<T>, c: T) -> Result<T, FrontierError> {
    check(p, c)?;
    let s = p.alpha + p.beta;
    let two = T::lit(2.0);
    let prefactor = two * ((p.beta * p.k_d).ln() - (p.alpha * p.k_p).ln()) / s;
    Ok((prefactor + (p.alpha - p.beta) / s * c.ln()).exp())
}

/// Loss at the optimum. Both coefficients zero is accepted and gives the floor.
pub fn l_opt<T: Scalar>(p: &FitParams<T>, c: T) -> Result<T, FrontierError> {
    if p.k_p == T::zero() && p.k_d == T::zero() && p.l_inf >= T::zero() {
        if !(c > T::zero() && c.is_finite()) {
            return Err(FrontierError::NonPositiveCompute(c.as_f64()));
        }
        return Ok(p.l_inf);
    }
    let po = p_opt(p, c)?;
    Ok(p.predict(po, c / po)?)
}

/// `dL/dP` along the constant-compute line `D = c / P`.
pub fn frontier_derivative<T: Scalar>(p: &FitParams<T>, params: T, c: T) -> T {
    -p.alpha * p.k_p * params.powf(-p.alpha - T::one())
        + p.beta * p.k_d * c.powf(-p.beta) * params.powf(p.beta - T::one())
}

/// `levels` log-spaced values from `lo` to `hi` inclusive.
pub fn log_space<T: Scalar>(lo: T, hi: T, levels: usize) -> Result<Vec<T>, FrontierError> {
    let bad = || FrontierError::BadRange(lo.as_f64(), hi.as_f64(), levels);
    if !(lo > T::zero() && hi >= lo && hi.is_finite()) || levels == 0 || (levels == 1 && hi != lo) {
        return Err(bad());
    }
    if levels == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    let last = T::from_usize(levels - 1).expect("level count fits");
    Ok((0..levels)
        .map(|i| match i {
            0 => lo,
            i if i == levels - 1 => hi,
            i => (a + (b - a) * T::from_usize(i).expect("level fits") / last).exp(),
        })
        .collect())
}

pub fn frontier<T: Scalar>(
    p: &FitParams<T>,
    c_min: T,
    c_max: T,
    levels: usize,
) -> Result<Vec<FrontierPoint<T>>, FrontierError> {
    log_space(c_min, c_max, levels)?
        .into_iter()
        .map(|c| {
            let po = p_opt(p, c)?;
            Ok(FrontierPoint {
                c,
                p_opt: po,
                d_opt: c / po,
                rho_opt: rho_opt(p, c)?,
                l_opt: l_opt(p, c)?,
            })
        })
        .collect()
}

/// Minimizes the constant-compute loss over `ln P` by a coarse scan followed
/// by golden-section search. Used to cross-check [`p_opt`].
pub fn numeric_frontier<T: Scalar>(p: &FitParams<T>, c: T) -> Result<T, FrontierError> {
    check(p, c)?;
    let ln_c = c.ln();
    // the floor is constant along the curve and only costs precision
    let k_d_c = p.k_d * (-p.beta * ln_c).exp();
    let f = |x: T| p.k_p * (-p.alpha * x).exp() + k_d_c * (p.beta * x).exp();
    let lo = T::lit(-60.0);
    let hi = ln_c + T::lit(60.0);
    let steps = 2000;
    let h = (hi - lo) / T::from_usize(steps).expect("step count fits");
    let xs = |i: usize| lo + h * T::from_usize(i).expect("index fits");
    let mut best = 0;
    let mut best_v = f(lo);
    for i in 1..=steps {
        let v = f(xs(i));
        if v < best_v {
            best = i;
            best_v = v;
        }
    }
    if best == 0 || best == steps {
        return Err(FrontierError::BracketFailure {
            lo: lo.as_f64(),
            hi: hi.as_f64(),
        });
    }
    let (mut a, mut b) = (xs(best - 1), xs(best + 1));
    let inv_phi = T::lit(0.618_033_988_749_894_9);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let tol = T::lit(1e-10);
    for _ in 0..400 {
        if b - a <= tol * T::one().max(a.abs()) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    Ok(((a + b) / T::lit(2.0)).exp())
}
