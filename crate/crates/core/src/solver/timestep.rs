//! Five-stage, fourth-order low-storage Runge-Kutta (Carpenter-Kennedy) and the CFL rule.

use crate::error::Result;

pub const RK4A: [f64; 5] = [
    0.0,
    -567_301_805_773.0 / 1_357_537_059_087.0,
    -2_404_267_990_393.0 / 2_016_746_695_238.0,
    -3_550_918_686_646.0 / 2_091_501_179_385.0,
    -1_275_806_237_668.0 / 842_570_457_699.0,
];

pub const RK4B: [f64; 5] = [
    1_432_997_174_477.0 / 9_575_080_441_755.0,
    5_161_836_677_717.0 / 13_612_068_292_357.0,
    1_720_146_321_549.0 / 2_090_206_949_498.0,
    3_134_564_353_537.0 / 4_481_467_310_338.0,
    2_277_821_191_437.0 / 14_882_151_754_819.0,
];

pub const RK4C: [f64; 5] = [
    0.0,
    1_432_997_174_477.0 / 9_575_080_441_755.0,
    2_526_269_341_429.0 / 6_820_363_183_443.0,
    2_006_345_519_317.0 / 3_224_310_063_776.0,
    2_802_321_613_138.0 / 2_924_317_926_251.0,
];

/// Scratch registers for [`lsrk4_step`]: the residual and the stage right-hand side.
#[derive(Debug, Clone)]
pub struct Lsrk4 {
    resid: Vec<f64>,
    k: Vec<f64>,
}

impl Lsrk4 {
    pub fn new(len: usize) -> Self {
        Self {
            resid: vec![0.0; len],
            k: vec![0.0; len],
        }
    }

    /// Advance `state` from `t` to `t + dt` in place.
    pub fn step<F>(&mut self, state: &mut [f64], t: f64, dt: f64, mut rhs: F) -> Result<()>
    where
        F: FnMut(&[f64], f64, &mut [f64]) -> Result<()>,
    {
        assert!(dt > 0.0, "time step must be positive");
        self.resid.iter_mut().for_each(|r| *r = 0.0);
        for s in 0..5 {
            rhs(state, t + RK4C[s] * dt, &mut self.k)?;
            let (a, b) = (RK4A[s], RK4B[s]);
            for ((r, y), k) in self.resid.iter_mut().zip(state.iter_mut()).zip(&self.k) {
                *r = a * *r + dt * k;
                *y += b * *r;
            }
        }
        Ok(())
    }
}

/// One LSRK4 step with freshly allocated scratch.
pub fn lsrk4_step<F>(state: &mut [f64], t: f64, dt: f64, rhs: F) -> Result<()>
where
    F: FnMut(&[f64], f64, &mut [f64]) -> Result<()>,
{
    Lsrk4::new(state.len()).step(state, t, dt, rhs)
}

/// Time step from `c0 dt = h P^-2 V^-1`.
pub fn compute_dt(h_min: f64, order: usize, v_cfl: f64, c0: f64) -> f64 {
    h_min / (c0 * (order * order) as f64 * v_cfl)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rhs_leaves_state() {
        let mut y = vec![1.0, -2.0, 3.5];
        lsrk4_step(&mut y, 0.0, 0.1, |_, _, k| {
            k.iter_mut().for_each(|v| *v = 0.0);
            Ok(())
        })
        .unwrap();
        assert_eq!(y, vec![1.0, -2.0, 3.5]);
    }

    #[test]
    fn integrates_cubic_in_time_exactly() {
        let mut y = vec![0.0];
        lsrk4_step(&mut y, 0.0, 1.0, |_, t, k| {
            k[0] = t * t;
            Ok(())
        })
        .unwrap();
        // the tabulated coefficients are rational approximations good to about 1e-9
        assert!((y[0] - 1.0 / 3.0).abs() < 1e-8, "{}", y[0]);
    }

    #[test]
    fn fourth_order_convergence() {
        let err = |dt: f64| {
            let n = (1.0 / dt).round() as usize;
            let mut y = vec![1.0];
            let mut rk = Lsrk4::new(1);
            for i in 0..n {
                rk.step(&mut y, i as f64 * dt, dt, |y, _, k| {
                    k[0] = -y[0];
                    Ok(())
                })
                .unwrap();
            }
            (y[0] - (-1.0f64).exp()).abs()
        };
        let e = [err(0.1), err(0.05), err(0.025)];
        for w in e.windows(2) {
            let slope = (w[0] / w[1]).log2();
            assert!((slope - 4.0).abs() < 0.1, "slope {slope}");
        }
    }

    #[test]
    fn cfl_rule() {
        assert!((compute_dt(0.1, 2, 1.0, 1.0) - 0.025).abs() < 1e-16);
        assert_eq!(compute_dt(0.1, 2, 2.0, 1.0), 0.5 * compute_dt(0.1, 2, 1.0, 1.0));
        assert_eq!(compute_dt(1.0, 1, 1.0, 1.0), 1.0);
    }
}
