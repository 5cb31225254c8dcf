//! Fixed-step classical Runge–Kutta with step-halving refinement.

use nalgebra::DVector;

use super::MarkovError;

/// Change (max-norm) below which halving the step is considered converged.
pub const RK4_TOL: f64 = 1e-9;
const INITIAL_STEP: f64 = 0.05;
const MAX_STEPS: usize = 1 << 22;

fn rk4<F>(rhs: &mut F, t0: f64, t1: f64, y0: &DVector<f64>, n: usize) -> Result<DVector<f64>, MarkovError>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>, MarkovError>,
{
    let h = (t1 - t0) / n as f64;
    let mut y = y0.clone();
    for i in 0..n {
        let t = t0 + i as f64 * h;
        let k1 = rhs(t, &y)?;
        let k2 = rhs(t + 0.5 * h, &(&y + &k1 * (0.5 * h)))?;
        let k3 = rhs(t + 0.5 * h, &(&y + &k2 * (0.5 * h)))?;
        let k4 = rhs(t + h, &(&y + &k3 * h))?;
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    Ok(y)
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t1`, doubling the step count
/// until two successive results differ by less than [`RK4_TOL`].
pub fn integrate<F>(mut rhs: F, t0: f64, t1: f64, y0: &DVector<f64>) -> Result<DVector<f64>, MarkovError>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>, MarkovError>,
{
    if t1 <= t0 {
        return Ok(y0.clone());
    }
    let mut n = ((t1 - t0) / INITIAL_STEP).ceil().max(1.0) as usize;
    let mut prev = rk4(&mut rhs, t0, t1, y0, n)?;
    while n < MAX_STEPS {
        n *= 2;
        let next = rk4(&mut rhs, t0, t1, y0, n)?;
        let change = (&next - &prev).amax();
        if change < RK4_TOL {
            return Ok(next);
        }
        prev = next;
    }
    Err(MarkovError::NotConverged { t0, t1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let y = integrate(|_, y| Ok(-y), 0.0, 2.0, &DVector::from_element(1, 1.0)).unwrap();
        assert!((y[0] - (-2.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn empty_interval_is_identity() {
        let y0 = DVector::from_vec(vec![1.0, 2.0]);
        assert_eq!(integrate(|_, y| Ok(y.clone()), 1.0, 1.0, &y0).unwrap(), y0);
    }
}
