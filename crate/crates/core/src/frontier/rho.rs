use serde::{Deserialize, Serialize};

use super::FrontierError;
use crate::scalar::Scalar;

/// Base-10 log-linear fit `log10 rho = s log10 C + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoFit<T> {
    pub s: T,
    pub b: T,
    /// `10^b`
    pub a: T,
    /// `10^s`: change in the ratio per decade of compute.
    pub factor: T,
}

pub fn fit_rho_powerlaw<T: Scalar>(points: &[(T, T)]) -> Result<RhoFit<T>, FrontierError> {
    for (index, &(c, r)) in points.iter().enumerate() {
        if !(c > T::zero() && r > T::zero() && c.is_finite() && r.is_finite()) {
            return Err(FrontierError::NonPositivePoint { index });
        }
    }
    let xs: Vec<T> = points.iter().map(|&(c, _)| c.log10()).collect();
    let ys: Vec<T> = points.iter().map(|&(_, r)| r.log10()).collect();
    if xs.iter().all(|&x| x == xs[0]) || xs.is_empty() {
        return Err(FrontierError::TooFewPoints);
    }
    let n = T::from_usize(xs.len()).expect("length fits");
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(&ys) {
        sxy = sxy + (x - mx) * (y - my);
        sxx = sxx + (x - mx) * (x - mx);
    }
    let s = sxy / sxx;
    let b = my - s * mx;
    let ten = T::lit(10.0);
    Ok(RhoFit {
        s,
        b,
        a: ten.powf(b),
        factor: ten.powf(s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_hand_case() {
        let f = fit_rho_powerlaw(&[(10.0f64, 100.0), (1000.0, 1.0)]).unwrap();
        assert_eq!((f.s, f.b), (-1.0, 3.0));
        assert_eq!(f.a, 1000.0);
        assert!((f.factor - 0.1).abs() < 1e-15);
    }

    #[test]
    fn needs_two_abscissae() {
        assert_eq!(
            fit_rho_powerlaw(&[(10.0, 1.0), (10.0, 2.0)]),
            Err(FrontierError::TooFewPoints)
        );
        assert_eq!(fit_rho_powerlaw::<f64>(&[]), Err(FrontierError::TooFewPoints));
        assert_eq!(
            fit_rho_powerlaw(&[(10.0, 1.0), (-1.0, 2.0)]),
            Err(FrontierError::NonPositivePoint { index: 1 })
        );
    }
}
