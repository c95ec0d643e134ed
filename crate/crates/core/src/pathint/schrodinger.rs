//! Crank–Nicolson reference solver on a uniform grid with zero boundary
//! values.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Potential;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    /// Largest time step; the run uses the largest divisor of the duration
    /// not exceeding it.
    pub dt: f64,
    #[serde(default = "unit")]
    pub mass: f64,
}

fn unit() -> f64 {
    1.0
}

impl WaveGrid {
    pub fn new(x_min: f64, x_max: f64, points: usize, dt: f64) -> Result<Self> {
        let g = Self { x_min, x_max, points, dt, mass: 1.0 };
        g.validate()?;
        Ok(g)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + self.dx() * i as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.x(i)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max && self.x_min.is_finite() && self.x_max.is_finite()) {
            return Err(invalid("grid needs finite x_min < x_max"));
        }
        if self.points < 3 {
            return Err(invalid("grid needs at least three points"));
        }
        if !(self.dt > 0.0 && self.mass > 0.0) {
            return Err(invalid("time step and mass must be positive"));
        }
        let dx = self.dx();
        if self.dt > dx * dx {
            return Err(Error::GridTooCoarse(format!("time step {} exceeds dx^2 = {}", self.dt, dx * dx)));
        }
        Ok(())
    }
}

/// Evolves `initial` (values on `grid`) from `t0` over `tau` under
/// `H = -(1/2m)∂² + V(x, t)`, with `V` sampled at the middle of each step.
pub fn schrodinger_reference(
    v: &Potential,
    initial: &[Complex64],
    t0: f64,
    tau: f64,
    grid: &WaveGrid,
) -> Result<Vec<Complex64>> {
    grid.validate()?;
    if initial.len() != grid.points {
        return Err(invalid(format!("{} values for {} grid points", initial.len(), grid.points)));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(invalid("duration must be finite and nonnegative"));
    }
    let steps = (tau / grid.dt).ceil() as usize;
    if steps == 0 {
        return Ok(initial.to_vec());
    }
    let dt = tau / steps as f64;
    let n = grid.points;
    let dx = grid.dx();
    let kin = 1.0 / (2.0 * grid.mass * dx * dx);
    let half = Complex64::new(0.0, 0.5 * dt);
    let xs = grid.xs();
    let mut psi = initial.to_vec();
    psi[0] = Complex64::new(0.0, 0.0);
    psi[n - 1] = Complex64::new(0.0, 0.0);
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    let mut cprime = vec![Complex64::new(0.0, 0.0); n];
    let off = -half * kin;
    for step in 0..steps {
        let t = t0 + dt * (step as f64 + 0.5);
        // Interior unknowns 1..n-1; H ψ_i = kin(2ψ_i - ψ_{i-1} - ψ_{i+1}) + V_i ψ_i.
        for i in 1..n - 1 {
            let hpsi = kin * (2.0 * psi[i] - psi[i - 1] - psi[i + 1]) + v.evaluate(xs[i], t, grid.mass) * psi[i];
            rhs[i] = psi[i] - half * hpsi;
        }
        // Thomas sweep on (1 + iHdt/2).
        let diag = |i: usize| Complex64::new(1.0, 0.0) + half * (2.0 * kin + v.evaluate(xs[i], t, grid.mass));
        let mut prev_c = Complex64::new(0.0, 0.0);
        let mut prev_d = Complex64::new(0.0, 0.0);
        for i in 1..n - 1 {
            let denom = diag(i) - off * prev_c;
            prev_c = off / denom;
            prev_d = (rhs[i] - off * prev_d) / denom;
            cprime[i] = prev_c;
            rhs[i] = prev_d;
        }
        psi[n - 2] = rhs[n - 2];
        for i in (1..n - 2).rev() {
            psi[i] = rhs[i] - cprime[i] * psi[i + 1];
        }
    }
    Ok(psi)
}

/// `(Σ|ψ_i|² dx)^{1/2}`.
pub fn l2_norm(psi: &[Complex64], grid: &WaveGrid) -> f64 {
    (psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.dx()).sqrt()
}

pub fn l2_distance(a: &[Complex64], b: &[Complex64], grid: &WaveGrid) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() * grid.dx()).sqrt()
}

/// Free Gaussian packet of width `sigma` centred at `x0`, evolved for time
/// `t`: `(2πσ²)^{-1/4} (1 + it/(2mσ²))^{-1/2} e^{-(x - x0)²/(4σ²(1 + it/(2mσ²)))}`.
pub fn gaussian_packet(x: f64, x0: f64, sigma: f64, t: f64, mass: f64) -> Complex64 {
    let spread = Complex64::new(1.0, t / (2.0 * mass * sigma * sigma));
    let d = x - x0;
    (2.0 * std::f64::consts::PI * sigma * sigma).powf(-0.25) * spread.sqrt().inv()
        * (-(d * d) / (4.0 * sigma * sigma * spread)).exp()
}
