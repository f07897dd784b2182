//! Central-difference kernel shared by every numerically differentiated
//! quantity in the crate.

/// Central differences with an optional level of Richardson extrapolation.
///
/// The effective step at coordinate `x` is `step * max(1, |x|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffKernel {
    pub step: f64,
    pub richardson: bool,
}

impl Default for DiffKernel {
    fn default() -> Self {
        Self {
            step: 1e-5,
            richardson: false,
        }
    }
}

impl DiffKernel {
    pub fn new(step: f64, richardson: bool) -> Self {
        assert!(step > 0.0 && step.is_finite(), "difference step must be positive");
        Self { step, richardson }
    }

    /// Default kernel for second derivatives: same step, Richardson on.
    pub fn second_order_default() -> Self {
        Self::new(1e-4, true)
    }

    pub fn step_at(&self, x: f64) -> f64 {
        self.step * x.abs().max(1.0)
    }

    /// d/dx of a vector-valued function at `x`, returned component-wise.
    pub fn derivative_vec<F>(&self, mut f: F, x: f64) -> Vec<f64>
    where
        F: FnMut(f64) -> Vec<f64>,
    {
        let h = self.step_at(x);
        let mut central = |h: f64| -> Vec<f64> {
            let fp = f(x + h);
            let fm = f(x - h);
            fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        };
        let coarse = central(h);
        if !self.richardson {
            return coarse;
        }
        let fine = central(0.5 * h);
        fine.iter()
            .zip(&coarse)
            .map(|(f, c)| (4.0 * f - c) / 3.0)
            .collect()
    }

    pub fn derivative<F>(&self, mut f: F, x: f64) -> f64
    where
        F: FnMut(f64) -> f64,
    {
        self.derivative_vec(|t| vec![f(t)], x)[0]
    }

    /// Partial derivative of `f` along coordinate `k` at `x`.
    pub fn partial_vec<F>(&self, mut f: F, x: &[f64], k: usize) -> Vec<f64>
    where
        F: FnMut(&[f64]) -> Vec<f64>,
    {
        let mut y = x.to_vec();
        self.derivative_vec(
            |t| {
                y[k] = t;
                f(&y)
            },
            x[k],
        )
    }

    pub fn gradient<F>(&self, f: F, x: &[f64]) -> Vec<f64>
    where
        F: Fn(&[f64]) -> f64,
    {
        (0..x.len())
            .map(|k| self.partial_vec(|y| vec![f(y)], x, k)[0])
            .collect()
    }

    /// Second partial d^2 f / dx_i dx_j of a scalar function.
    pub fn second_partial<F>(&self, f: F, x: &[f64], i: usize, j: usize) -> f64
    where
        F: Fn(&[f64]) -> f64,
    {
        let hi = self.step_at(x[i]);
        let hj = self.step_at(x[j]);
        let mut y = x.to_vec();
        let mut eval = |di: f64, dj: f64| -> f64 {
            y.copy_from_slice(x);
            y[i] += di;
            y[j] += dj;
            f(&y)
        };
        let mut estimate = |hi: f64, hj: f64| -> f64 {
            if i == j {
                let f0 = eval(0.0, 0.0);
                (eval(hi, 0.0) - 2.0 * f0 + eval(-hi, 0.0)) / (hi * hi)
            } else {
                (eval(hi, hj) - eval(hi, -hj) - eval(-hi, hj) + eval(-hi, -hj)) / (4.0 * hi * hj)
            }
        };
        let coarse = estimate(hi, hj);
        if !self.richardson {
            return coarse;
        }
        let fine = estimate(0.5 * hi, 0.5 * hj);
        (4.0 * fine - coarse) / 3.0
    }

    /// Mixed second partials between two coordinate blocks given as a single
    /// flat argument vector: entry `[a][b]` is d^2 f / dx_{rows[a]} dx_{cols[b]}.
    pub fn hessian_block<F>(&self, f: F, x: &[f64], rows: &[usize], cols: &[usize]) -> Vec<Vec<f64>>
    where
        F: Fn(&[f64]) -> f64,
    {
        rows.iter()
            .map(|&i| cols.iter().map(|&j| self.second_partial(&f, x, i, j)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_sine() {
        let k = DiffKernel::default();
        let d = k.derivative(f64::sin, 0.3);
        assert!((d - 0.3f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn richardson_improves_accuracy() {
        let plain = DiffKernel::new(1e-2, false);
        let rich = DiffKernel::new(1e-2, true);
        let exact = 1.2f64.exp();
        let e_plain = (plain.derivative(f64::exp, 1.2) - exact).abs();
        let e_rich = (rich.derivative(f64::exp, 1.2) - exact).abs();
        assert!(e_rich < e_plain * 1e-2);
    }

    #[test]
    fn step_scales_with_coordinate() {
        let k = DiffKernel::default();
        assert_eq!(k.step_at(0.5), 1e-5);
        assert_eq!(k.step_at(-20.0), 2e-4);
    }

    #[test]
    fn mixed_second_partial() {
        let k = DiffKernel::new(1e-3, true);
        let f = |x: &[f64]| x[0] * x[0] * x[1].sin() + x[1] * x[1] * x[1];
        let x = [0.7, -0.4];
        let dxy = k.second_partial(f, &x, 0, 1);
        let dyy = k.second_partial(f, &x, 1, 1);
        assert!((dxy - 2.0 * 0.7 * (-0.4f64).cos()).abs() < 1e-9);
        assert!((dyy - (-0.49 * (-0.4f64).sin() + 6.0 * -0.4)).abs() < 1e-8);
    }

    #[test]
    #[should_panic]
    fn rejects_non_positive_step() {
        let _ = DiffKernel::new(0.0, false);
    }
}
