use crate::error::Result;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenResult {
    pub theta: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section search for the minimum of `f` over `[0, 1]`.
///
/// Stops once the bracket is no wider than `tolerance` or `max_evaluations`
/// values have been computed. Returns the best evaluated point, preferring
/// the smaller `theta` on ties, so a flat or non-unimodal `f` still yields a
/// deterministic answer. The two opening evaluations run in parallel.
pub fn golden_section_theta<F>(f: F, tolerance: f64, max_evaluations: usize) -> Result<GoldenResult>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let (mut a, mut b) = (0.0_f64, 1.0_f64);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);

    if max_evaluations < 2 {
        let v = f(c)?;
        return Ok(GoldenResult {
            theta: c,
            value: v,
            evaluations: 1,
        });
    }
    let (fc, fd) = rayon::join(|| f(c), || f(d));
    let (mut fc, mut fd) = (fc?, fd?);
    let mut evaluations = 2;
    let mut best = GoldenResult {
        theta: c,
        value: fc,
        evaluations,
    };
    let consider = |theta: f64, value: f64, best: &mut GoldenResult| {
        if value < best.value || (value == best.value && theta < best.theta) {
            best.theta = theta;
            best.value = value;
        }
    };
    consider(d, fd, &mut best);

    while b - a > tolerance && evaluations < max_evaluations {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
            consider(c, fc, &mut best);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
            consider(d, fd, &mut best);
        }
        evaluations += 1;
    }
    best.evaluations = evaluations;
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn finds_parabola_minimum() {
        let calls = AtomicUsize::new(0);
        let r = golden_section_theta(
            |t| {
                calls.fetch_add(1, Ordering::Relaxed);
                Ok((t - 0.3) * (t - 0.3))
            },
            0.01,
            20,
        )
        .unwrap();
        assert!((r.theta - 0.3).abs() <= 0.01, "{r:?}");
        assert!(r.evaluations <= 20);
        assert_eq!(calls.load(Ordering::Relaxed), r.evaluations);
    }

    #[test]
    fn flat_function_takes_smallest_candidate() {
        let r = golden_section_theta(|_| Ok(1.0), 0.01, 20).unwrap();
        assert!(r.theta < 0.01, "{r:?}");
    }

    #[test]
    fn respects_evaluation_cap() {
        let r = golden_section_theta(|t| Ok(-t), 1e-12, 5).unwrap();
        assert_eq!(r.evaluations, 5);
        assert!(r.theta > 0.8);
    }

    #[test]
    fn errors_propagate() {
        let r = golden_section_theta(
            |_| Err(crate::Error::Internal("boom".into())),
            0.01,
            20,
        );
        assert!(r.is_err());
    }
}
