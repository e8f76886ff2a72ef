//! Pearson, Spearman and cosine similarity.

use crate::error::{EvalError, Result};
use crate::metrics::ranking::average_ranks;

fn check(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.is_empty() {
        return Err(EvalError::EmptyVector);
    }
    Ok(())
}

/// Deviations from the mean, computed on the vector re-based at its minimum.
///
/// Re-basing first makes the result exactly invariant to constant shifts
/// whenever `x + k` is itself exact.
pub(crate) fn centered(x: &[f64]) -> Vec<f64> {
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let based: Vec<f64> = x.iter().map(|v| v - min).collect();
    let mean = based.iter().sum::<f64>() / based.len() as f64;
    based.into_iter().map(|v| v - mean).collect()
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check(x, y)?;
    let dx = centered(x);
    let dy = centered(y);
    let sxx: f64 = dx.iter().map(|v| v * v).sum();
    let syy: f64 = dy.iter().map(|v| v * v).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::UndefinedCorrelation);
    }
    let sxy: f64 = dx.iter().zip(&dy).map(|(a, b)| a * b).sum();
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation between average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Cosine of the angle between the raw vectors.
pub fn cosine(x: &[f64], y: &[f64]) -> Result<f64> {
    check(x, y)?;
    let nx: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ny: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        return Err(EvalError::ZeroNorm);
    }
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok((dot / (nx * ny)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_and_anti_correlation() {
        let a = [1.0, 0.0, 1.0, 1.0, 0.0];
        let inv: Vec<f64> = a.iter().map(|v| 1.0 - v).collect();
        assert!((pearson(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&a, &inv).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_variance_is_an_error() {
        assert_eq!(
            pearson(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]),
            Err(EvalError::UndefinedCorrelation)
        );
        assert_eq!(
            spearman(&[0.0, 1.0, 2.0], &[4.0, 4.0, 4.0]),
            Err(EvalError::UndefinedCorrelation)
        );
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 2.0]), Err(EvalError::ZeroNorm));
    }

    #[test]
    fn spearman_uses_average_ranks() {
        // ranks x: [1, 2.5, 2.5, 4]; y: [1,2,3,4]
        let r = spearman(&[1.0, 2.0, 2.0, 3.0], &[10.0, 20.0, 30.0, 40.0]).unwrap();
        let expected = pearson(&[1.0, 2.5, 2.5, 4.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((r - expected).abs() < 1e-15);
        // monotone but nonlinear
        let s = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 8.0, 27.0, 64.0]).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cosine_changes_under_shift() {
        let a = [1.0, -1.0, 0.5, -0.5];
        let c = [1.0, 0.0, 1.0, 0.0];
        let shifted: Vec<f64> = a.iter().map(|v| v + 1.0).collect();
        assert!((cosine(&a, &c).unwrap() - cosine(&shifted, &c).unwrap()).abs() > 1e-3);
    }

    proptest! {
        #[test]
        fn correlation_is_cosine_of_centered(
            xy in prop::collection::vec((-50.0f64..50.0, 0.0f64..1.0), 3..200)
        ) {
            let x: Vec<f64> = xy.iter().map(|p| p.0).collect();
            let y: Vec<f64> = xy.iter().map(|p| p.1).collect();
            let mx = x.iter().sum::<f64>() / x.len() as f64;
            let my = y.iter().sum::<f64>() / y.len() as f64;
            let cx: Vec<f64> = x.iter().map(|v| v - mx).collect();
            let cy: Vec<f64> = y.iter().map(|v| v - my).collect();
            match (pearson(&x, &y), cosine(&cx, &cy)) {
                (Ok(p), Ok(c)) => prop_assert!((p - c).abs() < 1e-9),
                (Err(_), _) => {}
                (Ok(p), Err(e)) => prop_assert!(false, "pearson {p} but cosine {e}"),
            }
        }

        #[test]
        fn correlations_are_bounded(
            xy in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..100)
        ) {
            let x: Vec<f64> = xy.iter().map(|p| p.0).collect();
            let y: Vec<f64> = xy.iter().map(|p| p.1).collect();
            for r in [pearson(&x, &y), spearman(&x, &y), cosine(&x, &y)].into_iter().flatten() {
                prop_assert!((-1.0..=1.0).contains(&r));
            }
        }
    }
}
