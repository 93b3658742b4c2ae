//! Classical fixed-step fourth-order Runge–Kutta.

/// Scratch buffers for repeated RK4 steps on a state of fixed length.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(len: usize) -> Self {
        Self {
            k1: vec![0.0; len],
            k2: vec![0.0; len],
            k3: vec![0.0; len],
            k4: vec![0.0; len],
            tmp: vec![0.0; len],
        }
    }

    /// Advance `y` in place from `t` to `t + dt`. `f(t, y, dydt)` writes the rate.
    pub fn step<F>(&mut self, mut f: F, y: &mut [f64], t: f64, dt: f64)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        debug_assert!(dt > 0.0);
        let half = 0.5 * dt;
        f(t, y, &mut self.k1);
        offset(&mut self.tmp, y, half, &self.k1);
        f(t + half, &self.tmp, &mut self.k2);
        offset(&mut self.tmp, y, half, &self.k2);
        f(t + half, &self.tmp, &mut self.k3);
        offset(&mut self.tmp, y, dt, &self.k3);
        f(t + dt, &self.tmp, &mut self.k4);
        let sixth = dt / 6.0;
        let stages = self.k1.iter().zip(&self.k2).zip(&self.k3).zip(&self.k4);
        for (yi, (((k1, k2), k3), k4)) in y.iter_mut().zip(stages) {
            *yi += sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }
}

/// `out = y + h k`.
fn offset(out: &mut [f64], y: &[f64], h: f64, k: &[f64]) {
    for ((o, yi), ki) in out.iter_mut().zip(y).zip(k) {
        *o = yi + h * ki;
    }
}

/// One RK4 step returning the new state.
pub fn rk4_step<F>(f: F, y: &[f64], t: f64, dt: f64) -> Vec<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let mut out = y.to_vec();
    Rk4::new(y.len()).step(f, &mut out, t, dt);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_rate_keeps_state() {
        let y = vec![1.5, -2.0, 3.25];
        assert_eq!(rk4_step(|_, _, d| d.fill(0.0), &y, 0.0, 0.1), y);
    }

    #[test]
    fn exponential_growth_one_step() {
        let y = rk4_step(|_, y, d| d[0] = y[0], &[1.0], 0.0, 0.1);
        assert_abs_diff_eq!(y[0], 1.105_170_833_333_333_3, epsilon = 1e-15);
        assert!((y[0] - 0.1f64.exp()).abs() < 8.5e-8);
    }

    fn oscillator_error(dt: f64) -> f64 {
        let t_end = 10.0;
        let steps = (t_end / dt).round() as usize;
        let mut y = vec![1.0, 0.0];
        let mut rk = Rk4::new(2);
        for k in 0..steps {
            rk.step(
                |_, y, d| {
                    d[0] = y[1];
                    d[1] = -y[0];
                },
                &mut y,
                k as f64 * dt,
                dt,
            );
        }
        ((y[0] - t_end.cos()).powi(2) + (y[1] + t_end.sin()).powi(2)).sqrt()
    }

    #[test]
    fn fourth_order_convergence() {
        let ratio = oscillator_error(0.1) / oscillator_error(0.05);
        assert!((ratio - 16.0).abs() <= 0.2 * 16.0, "ratio {ratio}");
    }
}
