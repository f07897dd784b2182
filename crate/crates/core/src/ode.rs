//! Dormand-Prince 5(4) integrator with dense output and event location.

use crate::error::{GeometryError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            initial_step: 1e-3,
            max_step: 0.05,
            max_steps: 200_000,
        }
    }
}

/// Stops integration when `g(t, y)` changes sign.
pub struct Event<'a> {
    pub name: &'static str,
    pub g: Box<dyn Fn(f64, &[f64]) -> f64 + 'a>,
}

impl<'a> Event<'a> {
    pub fn new(name: &'static str, g: impl Fn(f64, &[f64]) -> f64 + 'a) -> Self {
        Self { name, g: Box::new(g) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    Event { name: &'static str, t: f64 },
    StepUnderflow { t: f64 },
    TooManySteps { t: f64 },
}

#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub dy: Vec<Vec<f64>>,
    pub termination: Termination,
}

impl OdeSolution {
    pub fn final_t(&self) -> f64 {
        *self.t.last().expect("solution has the initial node")
    }

    pub fn final_state(&self) -> &[f64] {
        self.y.last().expect("solution has the initial node")
    }

    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }

    /// Cubic Hermite interpolation between accepted nodes.
    pub fn eval(&self, t: f64) -> Option<Vec<f64>> {
        let (t0, t1) = (self.t[0], self.final_t());
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        if t < lo || t > hi {
            return None;
        }
        let forward = t1 >= t0;
        let k = match self.t.windows(2).position(|w| {
            if forward {
                t >= w[0] && t <= w[1]
            } else {
                t <= w[0] && t >= w[1]
            }
        }) {
            Some(k) => k,
            None => return Some(self.y[0].clone()),
        };
        Some(hermite(self.t[k], &self.y[k], &self.dy[k], self.t[k + 1], &self.y[k + 1], &self.dy[k + 1], t))
    }
}

fn hermite(t0: f64, y0: &[f64], f0: &[f64], t1: f64, y1: &[f64], f1: &[f64], t: f64) -> Vec<f64> {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    (0..y0.len())
        .map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
        .collect()
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate `y' = rhs(t, y)` from `t0` to `t1` (either direction).
///
/// Integration halts at the first sign change of any event function; the
/// crossing is located by bisection on the dense output and becomes the last
/// node. A right-hand side returning non-finite values forces a smaller step.
pub fn integrate<F>(rhs: F, t0: f64, y0: &[f64], t1: f64, opts: &OdeOptions, events: &[Event<'_>]) -> Result<OdeSolution>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let dim = y0.len();
    let f0 = rhs(t0, y0);
    if f0.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::Domain(format!("right-hand side not finite at t = {t0}")));
    }
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut sol = OdeSolution {
        t: vec![t0],
        y: vec![y0.to_vec()],
        dy: vec![f0.clone()],
        termination: Termination::Completed,
    };
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.g)(t0, y0)).collect();
    let (mut t, mut y, mut f) = (t0, y0.to_vec(), f0);
    let mut h = opts.initial_step.min(opts.max_step).min((t1 - t0).abs());
    let mut steps = 0;
    let mut k = vec![vec![0.0; dim]; 7];
    while dir * (t1 - t) > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            sol.termination = Termination::TooManySteps { t };
            return Ok(sol);
        }
        h = h.min((t1 - t).abs());
        if h < 1e-14 * t.abs().max(1.0) {
            sol.termination = Termination::StepUnderflow { t };
            return Ok(sol);
        }
        let hs = dir * h;
        k[0].clone_from(&f);
        let mut finite = true;
        for s in 1..7 {
            let ys: Vec<f64> = (0..dim)
                .map(|i| y[i] + hs * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>())
                .collect();
            k[s] = rhs(t + C[s] * hs, &ys);
            if k[s].iter().any(|v| !v.is_finite()) {
                finite = false;
                break;
            }
        }
        if !finite {
            h *= 0.25;
            continue;
        }
        let y5: Vec<f64> = (0..dim)
            .map(|i| y[i] + hs * (0..7).map(|s| B5[s] * k[s][i]).sum::<f64>())
            .collect();
        let err = ((0..dim)
            .map(|i| {
                let e = hs * (0..7).map(|s| (B5[s] - B4[s]) * k[s][i]).sum::<f64>();
                let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(y5[i].abs());
                (e / sc).powi(2)
            })
            .sum::<f64>()
            / dim as f64)
            .sqrt();
        if err > 1.0 {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            continue;
        }
        let t_new = t + hs;
        let f_new = k[6].clone();
        // Event detection on the accepted step.
        let g_new: Vec<f64> = events.iter().map(|e| (e.g)(t_new, &y5)).collect();
        if let Some(idx) = (0..events.len()).find(|&i| g_prev[i] * g_new[i] <= 0.0 && g_prev[i] != 0.0) {
            let (mut a, mut b) = (t, t_new);
            for _ in 0..100 {
                let mid = 0.5 * (a + b);
                let ym = hermite(t, &y, &f, t_new, &y5, &f_new, mid);
                if (events[idx].g)(mid, &ym) * g_prev[idx] > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
                if (b - a).abs() < 1e-14 * t.abs().max(1.0) {
                    break;
                }
            }
            // Keep the last node on the admissible side of the event.
            let te = a;
            let ye = hermite(t, &y, &f, t_new, &y5, &f_new, te);
            if te != t {
                let fe = rhs(te, &ye);
                sol.t.push(te);
                sol.y.push(ye);
                sol.dy.push(fe);
            }
            sol.termination = Termination::Event {
                name: events[idx].name,
                t: te,
            };
            return Ok(sol);
        }
        g_prev = g_new;
        t = t_new;
        y = y5;
        f = f_new;
        sol.t.push(t);
        sol.y.push(y.clone());
        sol.dy.push(f.clone());
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * factor).min(opts.max_step);
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let sol = integrate(|_, y| vec![y[0]], 0.0, &[1.0], 2.0, &OdeOptions::default(), &[]).unwrap();
        assert!(sol.completed());
        assert!((sol.final_state()[0] - 2f64.exp()).abs() < 1e-8);
        let mid = sol.eval(1.234).unwrap()[0];
        assert!((mid - 1.234f64.exp()).abs() < 1e-7);
    }

    #[test]
    fn harmonic_oscillator_backward() {
        let sol = integrate(|_, y| vec![y[1], -y[0]], 0.0, &[0.0, 1.0], -3.0, &OdeOptions::default(), &[]).unwrap();
        assert!((sol.final_state()[0] - (-3f64).sin()).abs() < 1e-8);
    }

    #[test]
    fn event_stops_at_root() {
        let ev = [Event::new("zero", |_, y: &[f64]| y[0])];
        let sol = integrate(|_, y| vec![y[1], -y[0]], 0.0, &[1.0, 0.0], 5.0, &OdeOptions::default(), &ev).unwrap();
        match sol.termination {
            Termination::Event { name, t } => {
                assert_eq!(name, "zero");
                assert!((t - std::f64::consts::FRAC_PI_2).abs() < 1e-7);
            }
            ref other => panic!("{other:?}"),
        }
        assert!(sol.final_state()[0] > 0.0);
    }
}
