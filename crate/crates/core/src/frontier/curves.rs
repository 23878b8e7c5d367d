use serde::{Deserialize, Serialize};

use super::{Coverage, FrontierError};
use crate::scalar::Scalar;
use crate::scaling::FitParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoFlopPoint<T> {
    #[serde(rename = "P")]
    pub p: T,
    #[serde(rename = "D")]
    pub d: T,
    pub loss: T,
    pub in_range: bool,
}

/// Loss along `P * D = c` at each grid size. Points are in range when no
/// coverage is given.
pub fn isoflop_curve<T: Scalar>(
    p: &FitParams<T>,
    c: T,
    p_grid: &[T],
    coverage: Option<Coverage>,
) -> Result<Vec<IsoFlopPoint<T>>, FrontierError> {
    if !(c > T::zero() && c.is_finite()) {
        return Err(FrontierError::NonPositiveCompute(c.as_f64()));
    }
    p_grid
        .iter()
        .map(|&size| {
            let d = c / size;
            Ok(IsoFlopPoint {
                p: size,
                d,
                loss: p.predict(size, d)?,
                in_range: coverage.is_none_or(|cv| cv.contains(d.as_f64())),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoLossPoint<T> {
    #[serde(rename = "C")]
    pub c: T,
    #[serde(rename = "P")]
    pub p: T,
    #[serde(rename = "D")]
    pub d: T,
    pub in_range: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoLoss<T> {
    pub target: T,
    /// Sizes at or below this cannot reach the target with any token count.
    pub threshold: T,
    pub points: Vec<IsoLossPoint<T>>,
    /// Grid sizes dropped for lying at or below the threshold.
    pub omitted: Vec<T>,
}

/// Level set of the law at `target`, mapped to (compute, size).
pub fn isoloss_curve<T: Scalar>(
    p: &FitParams<T>,
    target: T,
    p_grid: &[T],
    coverage: Option<Coverage>,
) -> Result<IsoLoss<T>, FrontierError> {
    p.validate()?;
    let gap = target - p.l_inf;
    if !(gap > T::zero()) {
        return Err(FrontierError::InfeasibleTarget {
            target: target.as_f64(),
            floor: p.l_inf.as_f64(),
        });
    }
    let threshold = (p.k_p / gap).powf(T::one() / p.alpha);
    let mut points = Vec::new();
    let mut omitted = Vec::new();
    for &size in p_grid {
        let denom = gap - p.k_p * size.powf(-p.alpha);
        let d = (p.k_d / denom).powf(T::one() / p.beta);
        if !(size > T::zero()) || !(denom > T::zero()) || !d.is_finite() {
            omitted.push(size);
            continue;
        }
        points.push(IsoLossPoint {
            c: size * d,
            p: size,
            d,
            in_range: coverage.is_none_or(|cv| cv.contains(d.as_f64())),
        });
    }
    Ok(IsoLoss {
        target,
        threshold,
        points,
        omitted,
    })
}
