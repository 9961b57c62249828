//! Finite-difference validation harness.

/// Central-difference check of analytic gradients.
///
/// `loss` evaluates the scalar objective at an arbitrary point in the flat
/// (parameters ++ inputs) space; `analytic` holds the gradients under test
/// at `point`. Returns the worst relative error
/// `|a - n| / max(|a|, |n|, 1e-8)` over every coordinate.
pub fn finite_difference_check<F>(
    point: &[f64],
    analytic: &[f64],
    step: f64,
    mut loss: F,
) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(point.len(), analytic.len(), "gradient/point length mismatch");
    assert!(step > 0.0, "step must be positive");
    let mut x = point.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + step;
        let plus = loss(&x);
        x[i] = orig - step;
        let minus = loss(&x);
        x[i] = orig;
        let numeric = (plus - minus) / (2.0 * step);
        let rel = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    worst
}
