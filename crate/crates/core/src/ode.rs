//! Embedded Runge-Kutta 5(4) integrator (Dormand-Prince coefficients) that
//! lands exactly on each requested output abscissa.

use crate::error::{Error, Result};

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

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 2_000_000,
        }
    }
}

/// Integrates `y' = f(t, y)` from `(t0, y0)` and returns the state at every
/// entry of `outputs`, which must be nondecreasing and not below `t0`.
pub fn integrate<const N: usize, F>(mut f: F, t0: f64, y0: [f64; N], outputs: &[f64], tol: Tolerances) -> Result<Vec<[f64; N]>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    if outputs.first().is_some_and(|&t| t < t0) || outputs.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("output abscissae must be nondecreasing from t0"));
    }
    let mut out = Vec::with_capacity(outputs.len());
    let mut t = t0;
    let mut y = y0;
    let span = outputs.last().map_or(0.0, |&e| e - t0).abs().max(1e-3);
    let mut h = 1e-3 * span;
    let mut k1 = f(t, &y);
    let mut steps = 0usize;
    for &target in outputs {
        while t < target {
            if steps >= tol.max_steps {
                return Err(Error::NoConvergence(format!("step budget exhausted at t = {t}")));
            }
            steps += 1;
            let last = t + h >= target;
            let step = if last { target - t } else { h };
            let (y_new, k7, err) = dp_step(&mut f, t, &y, &k1, step, tol);
            if !err.is_finite() {
                h = 0.25 * step;
                if h < 1e-14 * span {
                    return Err(Error::NoConvergence(format!("non-finite state near t = {t}")));
                }
                continue;
            }
            if err <= 1.0 {
                t = if last { target } else { t + step };
                y = y_new;
                k1 = k7;
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || step >= h {
                    h = step * grow;
                }
            } else {
                h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if h < 1e-14 * span {
                    return Err(Error::NoConvergence(format!("step size underflow near t = {t}")));
                }
            }
        }
        out.push(y);
    }
    Ok(out)
}

fn dp_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], k1: &[f64; N], h: f64, tol: Tolerances) -> ([f64; N], [f64; N], f64)
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut k = [[0.0; N]; 7];
    k[0] = *k1;
    for s in 1..7 {
        let mut ys = *y;
        for (i, yi) in ys.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..s {
                acc += A[s][j] * k[j][i];
            }
            *yi += h * acc;
        }
        k[s] = f(t + C[s] * h, &ys);
    }
    let mut y5 = *y;
    let mut err = 0.0f64;
    for i in 0..N {
        let mut s5 = 0.0;
        let mut s4 = 0.0;
        for s in 0..7 {
            s5 += B5[s] * k[s][i];
            s4 += B4[s] * k[s][i];
        }
        y5[i] += h * s5;
        let scale = tol.atol + tol.rtol * y[i].abs().max(y5[i].abs());
        err = err.max((h * (s5 - s4)).abs() / scale);
    }
    (y5, k[6], err)
}

/// Radial solution sampled at the output radii: `psi`, `r psi'(r)` and the
/// accumulated mass.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub psi: Vec<f64>,
    pub log_slope: Vec<f64>,
    pub mass: Vec<f64>,
}

/// Integrates `psi_tt = -source(r) e^psi` in `t = ln r`, together with
/// `M_t = 2 pi mass_weight(r) e^psi`, from `r0` with the state
/// `start = [psi, psi_t, M]` and samples it at `radii` (ascending, `>= r0`).
/// For `Delta psi + h e^psi = 0` the source is `r^2 h(r)`.
pub fn shoot_log_radial(
    source: impl Fn(f64) -> f64,
    mass_weight: impl Fn(f64) -> f64,
    r0: f64,
    start: [f64; 3],
    radii: &[f64],
    tol: Tolerances,
) -> Result<RadialSolution> {
    let ts: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let rhs = |t: f64, y: &[f64; 3]| {
        let r = t.exp();
        let e = y[0].exp();
        [y[1], -source(r) * e, 2.0 * std::f64::consts::PI * mass_weight(r) * e]
    };
    let ys = integrate(rhs, r0.ln(), start, &ts, tol)?;
    Ok(RadialSolution {
        psi: ys.iter().map(|y| y[0]).collect(),
        log_slope: ys.iter().map(|y| y[1]).collect(),
        mass: ys.iter().map(|y| y[2]).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth_hits_outputs_exactly() {
        let outs: Vec<f64> = (0..=20).map(|i| i as f64 * 0.1).collect();
        let ys = integrate(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], &outs, Tolerances::default()).unwrap();
        for (t, y) in outs.iter().zip(ys) {
            assert!((y[0] - t.exp()).abs() < 1e-9 * t.exp());
        }
    }

    #[test]
    fn harmonic_oscillator_conserves_phase() {
        let outs = [std::f64::consts::PI, 2.0 * std::f64::consts::PI];
        let ys = integrate(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [0.0, 1.0], &outs, Tolerances::default()).unwrap();
        assert!(ys[0][0].abs() < 1e-8 && (ys[0][1] + 1.0).abs() < 1e-8);
        assert!(ys[1][0].abs() < 1e-8 && (ys[1][1] - 1.0).abs() < 1e-8);
    }
}
