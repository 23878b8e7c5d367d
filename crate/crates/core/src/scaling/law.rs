use serde::{Deserialize, Serialize};

use crate::codecs::Representation;
use crate::scalar::Scalar;

/// Parameters of `L(P, D) = L_inf + k_P P^-alpha + k_D D^-beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitParams<T> {
    #[serde(rename = "L_inf")]
    pub l_inf: T,
    #[serde(rename = "k_P")]
    pub k_p: T,
    #[serde(rename = "k_D")]
    pub k_d: T,
    pub alpha: T,
    pub beta: T,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LawError {
    #[error("P and D must be positive and finite (got P={p}, D={d})")]
    NonPositiveInput { p: f64, d: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
    #[error("no observations")]
    Empty,
}

impl<T: Scalar> FitParams<T> {
    pub fn new(l_inf: T, k_p: T, k_d: T, alpha: T, beta: T) -> Self {
        FitParams {
            l_inf,
            k_p,
            k_d,
            alpha,
            beta,
        }
    }

    /// Checks the invariants the frontier formulas rely on.
    pub fn validate(&self) -> Result<(), LawError> {
        let fin = [self.l_inf, self.k_p, self.k_d, self.alpha, self.beta]
            .iter()
            .all(|v| v.is_finite());
        if !fin {
            return Err(LawError::InvalidParams("non-finite value"));
        }
        if self.l_inf < T::zero() {
            return Err(LawError::InvalidParams("L_inf must be >= 0"));
        }
        if self.k_p <= T::zero() || self.k_d <= T::zero() {
            return Err(LawError::InvalidParams("k_P and k_D must be > 0"));
        }
        if self.alpha <= T::zero() || self.beta <= T::zero() {
            return Err(LawError::InvalidParams("alpha and beta must be > 0"));
        }
        Ok(())
    }

    /// Evaluates the law. Coefficients are not validated, so a zero-coefficient
    /// boundary case evaluates to the floor.
    pub fn predict(&self, p: T, d: T) -> Result<T, LawError> {
        if !(p > T::zero() && d > T::zero() && p.is_finite() && d.is_finite()) {
            return Err(LawError::NonPositiveInput {
                p: p.as_f64(),
                d: d.as_f64(),
            });
        }
        Ok(self.l_inf + self.k_p * p.powf(-self.alpha) + self.k_d * d.powf(-self.beta))
    }

    pub fn cast<U: Scalar>(&self) -> FitParams<U> {
        let c = |v: T| U::lit(v.as_f64());
        FitParams::new(c(self.l_inf), c(self.k_p), c(self.k_d), c(self.alpha), c(self.beta))
    }
}

pub fn predict_loss<T: Scalar>(p: &FitParams<T>, params: T, tokens: T) -> Result<T, LawError> {
    p.predict(params, tokens)
}

/// Mean absolute and root-mean-square of the residuals.
pub fn error_stats<T: Scalar>(residuals: &[T]) -> Result<(T, T), LawError> {
    if residuals.is_empty() {
        return Err(LawError::Empty);
    }
    let n = T::from_usize(residuals.len()).expect("length fits the scalar");
    let mae = residuals.iter().map(|r| r.abs()).sum::<T>() / n;
    let rmse = (residuals.iter().map(|r| *r * *r).sum::<T>() / n).sqrt();
    // rounding can land rmse an ulp under mae when all |r| are equal
    Ok((mae, rmse.max(mae)))
}

/// One training run's validation loss at a given size and token count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunObservation {
    pub representation: Representation,
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub budget: f64,
    pub epoch: u32,
    pub loss: f64,
    pub source_run_id: String,
}

impl RunObservation {
    pub fn is_multi_epoch(&self) -> bool {
        self.epoch > 1
    }
}

/// Residuals `observed - predicted` over the observations.
pub fn residuals<T: Scalar>(p: &FitParams<T>, obs: &[RunObservation]) -> Result<Vec<T>, LawError> {
    obs.iter()
        .map(|o| Ok(T::lit(o.loss) - p.predict(T::lit(o.p), T::lit(o.d))?))
        .collect()
}

pub fn fit_errors<T: Scalar>(p: &FitParams<T>, obs: &[RunObservation]) -> Result<(T, T), LawError> {
    error_stats(&residuals(p, obs)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_when_coefficients_vanish() {
        let p = FitParams::new(0.7, 0.0, 0.0, 0.1, 0.3);
        for (a, b) in [(1.0, 1.0), (1e6, 3e9), (7.0, 2.0)] {
            assert_eq!(p.predict(a, b).unwrap(), 0.7);
        }
        assert!(p.validate().is_err());
    }

    #[test]
    fn rejects_non_positive_inputs() {
        let p = FitParams::new(0.4, 5.0, 20.0, 0.05, 0.4);
        assert!(p.predict(0.0, 1.0).is_err());
        assert!(p.predict(1.0, -1.0).is_err());
        assert!(p.predict(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn hand_residual_cases() {
        assert_eq!(error_stats(&[0.0, 0.0, 0.0]).unwrap(), (0.0, 0.0));
        assert_eq!(error_stats(&[0.01, -0.01]).unwrap(), (0.01, 0.01));
        let (mae, rmse) = error_stats(&[0.0, 0.02]).unwrap();
        assert_eq!(mae, 0.01);
        assert_eq!(rmse, 0.0002f64.sqrt());
        assert!((rmse - 0.014_142_135_623_730_95).abs() < 1e-17);
        assert!(error_stats::<f64>(&[]).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let p: FitParams<f32> = FitParams::new(0.4, 5.0, 20.0, 0.05, 0.4);
        let v = p.predict(1e6, 1e8).unwrap();
        assert!((v - 2.91856).abs() < 1e-4, "{v}");
        assert_eq!(error_stats(&[0.01f32, -0.01]).unwrap(), (0.01, 0.01));
    }

    #[test]
    fn serde_uses_published_symbols() {
        let p = FitParams::new(0.45, 3.2, 14.0, 0.06, 0.35);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"L_inf":0.45,"k_P":3.2,"k_D":14.0,"alpha":0.06,"beta":0.35}"#);
        assert_eq!(serde_json::from_str::<FitParams<f64>>(&json).unwrap(), p);
    }
}
