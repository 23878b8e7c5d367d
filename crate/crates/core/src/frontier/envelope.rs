use serde::{Deserialize, Serialize};

use super::{log_space, FrontierError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub run_id: String,
    /// (compute, loss) samples in any order.
    pub points: Vec<(T, T)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint<T> {
    #[serde(rename = "C")]
    pub c: T,
    pub loss: T,
    pub run_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnvelopeGrid {
    /// Every compute value seen in any trajectory.
    #[default]
    Union,
    /// This many log-spaced values across the overall compute span.
    LogSpaced(usize),
}

/// Linear interpolation in (ln C, loss); `None` outside the trajectory's span.
fn interpolate<T: Scalar>(pts: &[(T, T)], c: T) -> Option<T> {
    let (first, last) = (pts.first()?, pts.last()?);
    if c < first.0 || c > last.0 {
        return None;
    }
    let i = pts.partition_point(|&(x, _)| x < c);
    if pts[i].0 == c {
        return Some(pts[i].1);
    }
    let (x0, y0) = pts[i - 1];
    let (x1, y1) = pts[i];
    let t = (c.ln() - x0.ln()) / (x1.ln() - x0.ln());
    Some(y0 + t * (y1 - y0))
}

/// Lower envelope of loss-vs-compute trajectories with the run that attains
/// it. With `monotone`, the running minimum is reported instead, so the
/// result never increases with compute.
pub fn min_loss_envelope<T: Scalar>(
    runs: &[Trajectory<T>],
    grid: EnvelopeGrid,
    monotone: bool,
) -> Result<Vec<EnvelopePoint<T>>, FrontierError> {
    let mut sorted: Vec<Vec<(T, T)>> = Vec::with_capacity(runs.len());
    for run in runs {
        for (index, &(c, l)) in run.points.iter().enumerate() {
            if !(c > T::zero() && c.is_finite() && l.is_finite()) {
                return Err(FrontierError::NonPositivePoint { index });
            }
        }
        let mut pts = run.points.clone();
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
        // repeated compute values keep the lowest loss
        pts.dedup_by(|next, kept| {
            if next.0 == kept.0 {
                kept.1 = kept.1.min(next.1);
                true
            } else {
                false
            }
        });
        sorted.push(pts);
    }
    let mut xs: Vec<T> = sorted.iter().flatten().map(|&(c, _)| c).collect();
    if xs.is_empty() {
        return Err(FrontierError::EmptyEnvelope);
    }
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    xs.dedup();
    if let EnvelopeGrid::LogSpaced(n) = grid {
        xs = log_space(xs[0], xs[xs.len() - 1], n)?;
    }

    let mut out: Vec<EnvelopePoint<T>> = Vec::with_capacity(xs.len());
    for c in xs {
        let best = sorted
            .iter()
            .enumerate()
            .filter_map(|(i, pts)| interpolate(pts, c).map(|l| (i, l)))
            .fold(None, |acc: Option<(usize, T)>, (i, l)| match acc {
                Some((_, bl)) if bl <= l => acc,
                _ => Some((i, l)),
            });
        let Some((i, loss)) = best else { continue };
        let mut point = EnvelopePoint {
            c,
            loss,
            run_id: runs[i].run_id.clone(),
        };
        if monotone {
            if let Some(prev) = out.last() {
                if prev.loss < point.loss {
                    point.loss = prev.loss;
                    point.run_id = prev.run_id.clone();
                }
            }
        }
        out.push(point);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(id: &str, pts: &[(f64, f64)]) -> Trajectory<f64> {
        Trajectory {
            run_id: id.into(),
            points: pts.to_vec(),
        }
    }

    #[test]
    fn single_run_is_its_own_envelope() {
        let r = run("a", &[(1e3, 2.0), (1e4, 1.5), (1e5, 1.6)]);
        let env = min_loss_envelope(std::slice::from_ref(&r), EnvelopeGrid::Union, false).unwrap();
        let got: Vec<(f64, f64)> = env.iter().map(|e| (e.c, e.loss)).collect();
        assert_eq!(got, r.points);
        assert!(env.iter().all(|e| e.run_id == "a"));
    }

    #[test]
    fn dominating_run_wins_everywhere() {
        let a = run("a", &[(1e3, 2.0), (1e5, 1.0)]);
        let b = run("b", &[(1e3, 1.5), (1e4, 1.2), (1e5, 0.9)]);
        let env = min_loss_envelope(&[a, b.clone()], EnvelopeGrid::Union, false).unwrap();
        assert!(env.iter().all(|e| e.run_id == "b"));
        assert_eq!(env.iter().map(|e| e.loss).collect::<Vec<_>>(), [1.5, 1.2, 0.9]);
    }

    #[test]
    fn runs_contribute_only_over_their_span() {
        let a = run("a", &[(1e3, 2.0), (1e4, 1.9)]);
        let b = run("b", &[(1e4, 3.0), (1e6, 1.0)]);
        let env = min_loss_envelope(&[a, b], EnvelopeGrid::Union, false).unwrap();
        let ids: Vec<&str> = env.iter().map(|e| e.run_id.as_str()).collect();
        assert_eq!(ids, ["a", "a", "b"]);
    }

    #[test]
    fn monotone_cleanup() {
        let r = run("a", &[(1e3, 2.0), (1e4, 1.5), (1e5, 1.6)]);
        let env = min_loss_envelope(&[r], EnvelopeGrid::Union, true).unwrap();
        assert_eq!(env.iter().map(|e| e.loss).collect::<Vec<_>>(), [2.0, 1.5, 1.5]);
    }

    #[test]
    fn empty_input() {
        assert_eq!(
            min_loss_envelope::<f64>(&[], EnvelopeGrid::Union, false),
            Err(FrontierError::EmptyEnvelope)
        );
        assert_eq!(
            min_loss_envelope(&[run("a", &[])], EnvelopeGrid::Union, false),
            Err(FrontierError::EmptyEnvelope)
        );
    }
}
