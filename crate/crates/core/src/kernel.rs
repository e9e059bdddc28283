//! Kernel parameters and the closed-form or one-dimensional quantities
//! attached to the Riesz kernel `|x - y|^(alpha - N)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quad::{integrate_breaks, GaussLegendre, QuadOptions};

/// Dimension `N` and exponent `alpha` of the kernel, with `1 < alpha < N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct KernelParams {
    dim: usize,
    alpha: f64,
}

#[derive(Deserialize)]
struct RawParams {
    dim: usize,
    alpha: f64,
}

impl TryFrom<RawParams> for KernelParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        Self::new(raw.dim, raw.alpha)
    }
}

impl KernelParams {
    pub fn new(dim: usize, alpha: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        if !(alpha > 1.0 && alpha < dim as f64) {
            return Err(Error::InvalidParams(format!(
                "alpha = {alpha} must lie in (1, {dim})"
            )));
        }
        Ok(Self { dim, alpha })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `N` as a float.
    pub fn n(&self) -> f64 {
        self.dim as f64
    }

    /// The kernel at distance `r`.
    #[inline]
    pub fn kernel(&self, r: f64) -> f64 {
        r.powf(self.alpha - self.n())
    }
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidDimension(n));
    }
    // omega_n = omega_(n-2) * 2 pi / n
    let (mut w, start) = if n.is_multiple_of(2) { (1.0, 2) } else { (2.0, 3) };
    for k in (start..=n).step_by(2) {
        w *= 2.0 * PI / k as f64;
    }
    Ok(w)
}

/// Surface area `N omega_N` of the unit sphere in `R^N`.
pub fn sphere_area(n: usize) -> Result<f64> {
    Ok(n as f64 * unit_ball_volume(n)?)
}

fn omega(p: &KernelParams) -> f64 {
    unit_ball_volume(p.dim).expect("dimension validated at construction")
}

/// Area of the `(N-2)`-sphere, the measure of the polar-angle slices.
fn slice_area(p: &KernelParams) -> f64 {
    if p.dim == 2 {
        2.0
    } else {
        (p.n() - 1.0) * unit_ball_volume(p.dim - 1).expect("dim >= 2")
    }
}

/// Riesz potential of the unit ball at a point of norm `t`.
///
/// Polar coordinates around the evaluation point turn the radial part into
/// `R^alpha / alpha`, leaving an adaptive integral over the polar angle.
pub fn psi(t: f64, p: &KernelParams) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("psi requires t >= 0, got {t}")));
    }
    let a = p.alpha;
    let m = p.dim as i32 - 2;
    let opts = QuadOptions {
        rel_tol: 1e-12,
        abs_tol: 1e-300,
        max_intervals: 4000,
    };
    let value = if t < 1.0 {
        let f = |th: f64| {
            let (s, c) = th.sin_cos();
            let r = t * c + (1.0 - t * t * s * s).sqrt();
            s.powi(m) * r.powf(a)
        };
        // the chord length is least smooth at theta = pi/2 when t is near 1
        let points = [0.0, PI / 2.0, PI];
        integrate_breaks(f, &points, opts)?.value
    } else {
        psi_outside(t, p, opts)?
    };
    Ok(slice_area(p) / a * value)
}

/// The `t >= 1` branch, after the substitution `t sin(theta) = sin(phi)`.
fn psi_outside(t: f64, p: &KernelParams, opts: QuadOptions) -> Result<f64> {
    let a = p.alpha;
    let m = p.dim as i32 - 2;
    let f = |phi: f64| {
        let (sp, cp) = phi.sin_cos();
        let s = sp / t;
        let c = (1.0 - s * s).sqrt();
        let rp = t * c + cp;
        let rm = t * c - cp;
        let chord = if rm > 0.0 { rp.powf(a) - rm.powf(a) } else { rp.powf(a) };
        s.powi(m) * chord * cp / (t * c)
    };
    Ok(integrate_breaks(f, &[0.0, PI / 2.0], opts)?.value)
}

fn psi_far(t: f64, p: &KernelParams) -> f64 {
    let a = p.alpha;
    let m = p.dim as i32 - 2;
    let rule = GaussLegendre::cached(16);
    let v = rule.integrate(0.0, PI / 2.0, |phi| {
        let (sp, cp) = phi.sin_cos();
        let s = sp / t;
        let c = (1.0 - s * s).sqrt();
        let rp = t * c + cp;
        let rm = t * c - cp;
        s.powi(m) * (rp.powf(a) - rm.powf(a)) * cp / (t * c)
    });
    slice_area(p) / a * v
}

/// Central finite-difference derivative of [`psi`].
pub fn psi_derivative(t: f64, p: &KernelParams) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("psi' requires t > 0, got {t}")));
    }
    let h = (1e-4 * t).min(1e-4);
    Ok((psi(t + h, p)? - psi(t - h, p)?) / (2.0 * h))
}

/// Upper bound for the energy a set of measure `m` sees from a point.
pub fn tau1(m: f64, p: &KernelParams) -> Result<f64> {
    if !(m >= 0.0) {
        return Err(Error::Domain(format!("tau1 requires m >= 0, got {m}")));
    }
    let w = omega(p);
    let n = p.n();
    Ok(n * w.powf(1.0 - p.alpha / n) / p.alpha * m.powf(p.alpha / n))
}

/// Transport constant: `(N - alpha + 1)` times the integral of
/// `1 / min(|x|^(N-alpha+1), |x|^(N-alpha))` over the ball of measure `m`.
pub fn tau2(m: f64, p: &KernelParams) -> Result<f64> {
    if !(m >= 0.0) {
        return Err(Error::Domain(format!("tau2 requires m >= 0, got {m}")));
    }
    let w = omega(p);
    let n = p.n();
    let a = p.alpha;
    let r = (m / w).powf(1.0 / n);
    let inner = r.min(1.0).powf(a - 1.0) / (a - 1.0);
    let outer = ((r.powf(a) - 1.0) / a).max(0.0);
    Ok((n - a + 1.0) * n * w * (inner + outer))
}

/// Eigenvalue of the kernel quadratic form on degree-`k` harmonics.
pub fn mu(k: usize, p: &KernelParams) -> f64 {
    let n = p.n();
    let a = p.alpha;
    let lead = a * 2f64.ln() + 0.5 * (n - 1.0) * PI.ln() + ln_gamma(0.5 * (a - 1.0))
        - ln_gamma(0.5 * (n - a));
    let ratio = |k: f64| (ln_gamma(k + 0.5 * (n - a)) - ln_gamma(k + 0.5 * (n - 2.0 + a))).exp();
    if k == 0 {
        return 0.0;
    }
    lead.exp() * (ratio(0.0) - ratio(k as f64))
}

/// Supremum of the eigenvalues, `lim mu_k`.
pub fn mu_limit(p: &KernelParams) -> f64 {
    let n = p.n();
    let a = p.alpha;
    (a * 2f64.ln() + 0.5 * (n - 1.0) * PI.ln() + ln_gamma(0.5 * (a - 1.0))
        - ln_gamma(0.5 * (n - 2.0 + a)))
    .exp()
}

/// Energy of the unit ball, from the first eigenvalue.
pub fn ball_energy(p: &KernelParams) -> f64 {
    let n = p.n();
    n * omega(p) * mu(1, p) / (p.alpha * (n + p.alpha))
}

/// Minimal deficit of a set whose asymmetry is close to maximal.
pub fn sparse_deficit_bound(p: &KernelParams) -> f64 {
    let w = omega(p);
    w * w / 5f64.powi(p.dim as i32) * (1.0 - 2f64.powf(p.alpha - p.n()))
}

/// Monotone cubic (Fritsch–Carlson) interpolant of `psi` on a uniform table.
#[derive(Debug, Clone)]
pub struct PsiTable {
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl PsiTable {
    pub const T_MAX: f64 = 4.0;
    pub const STEP: f64 = 1.0 / 1024.0;

    pub fn new(p: &KernelParams) -> Result<Self> {
        let n = (Self::T_MAX / Self::STEP).round() as usize;
        let values = (0..=n)
            .map(|i| psi(i as f64 * Self::STEP, p))
            .collect::<Result<Vec<_>>>()?;
        let slopes = pchip_slopes(&values, Self::STEP);
        Ok(Self {
            step: Self::STEP,
            values,
            slopes,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Interpolated value; `None` outside the table.
    pub fn eval(&self, t: f64) -> Option<f64> {
        self.locate(t).map(|(i, s)| {
            let h = self.step;
            let (y0, y1) = (self.values[i], self.values[i + 1]);
            let (d0, d1) = (self.slopes[i], self.slopes[i + 1]);
            let s2 = s * s;
            let s3 = s2 * s;
            (2.0 * s3 - 3.0 * s2 + 1.0) * y0
                + (s3 - 2.0 * s2 + s) * h * d0
                + (-2.0 * s3 + 3.0 * s2) * y1
                + (s3 - s2) * h * d1
        })
    }

    /// Derivative of the interpolant; `None` outside the table.
    pub fn eval_derivative(&self, t: f64) -> Option<f64> {
        self.locate(t).map(|(i, s)| {
            let h = self.step;
            let (y0, y1) = (self.values[i], self.values[i + 1]);
            let (d0, d1) = (self.slopes[i], self.slopes[i + 1]);
            let s2 = s * s;
            ((6.0 * s2 - 6.0 * s) * (y0 - y1)) / h
                + (3.0 * s2 - 4.0 * s + 1.0) * d0
                + (3.0 * s2 - 2.0 * s) * d1
        })
    }

    fn locate(&self, t: f64) -> Option<(usize, f64)> {
        if !(t >= 0.0) {
            return None;
        }
        let x = t / self.step;
        let last = self.values.len() - 1;
        if x > last as f64 {
            return None;
        }
        let i = (x.floor() as usize).min(last - 1);
        Some((i, x - i as f64))
    }
}

fn pchip_slopes(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let delta: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let (a, b) = (delta[i - 1], delta[i]);
        d[i] = if a * b <= 0.0 {
            0.0
        } else {
            // centred slope, limited to keep the interpolant monotone
            let c = 0.5 * (a + b);
            c.signum() * c.abs().min(3.0 * a.abs().min(b.abs()))
        };
    }
    // psi is even in t and its second derivative jumps at t = 1
    d[0] = 0.0;
    let one = (1.0 / h).round() as usize;
    if one >= 2 && one + 2 < n {
        let left = (3.0 * y[one] - 4.0 * y[one - 1] + y[one - 2]) / (2.0 * h);
        let right = (-3.0 * y[one] + 4.0 * y[one + 1] - y[one + 2]) / (2.0 * h);
        d[one] = 0.5 * (left + right);
    }
    let (a, b) = (delta[n - 2], delta[n - 3]);
    let s = (3.0 * a - b) / 2.0;
    d[n - 1] = if s * a <= 0.0 { 0.0 } else { s.signum() * s.abs().min(3.0 * a.abs()) };
    d
}

/// Constants shared by all modules for one parameter choice.
#[derive(Debug, Clone)]
pub struct ReferenceConstants {
    pub params: KernelParams,
    pub omega_n: f64,
    pub sphere_area: f64,
    pub ball_energy: f64,
    pub psi_table: PsiTable,
}

impl ReferenceConstants {
    /// Relative tolerance for the ball-energy cross-check.
    pub const BALL_CHECK_TOL: f64 = 5e-3;

    /// Builds the table and cross-checks the ball energy against a radial
    /// quadrature of `psi`.
    pub fn new(p: KernelParams) -> Result<Self> {
        let omega_n = omega(&p);
        let sphere_area = p.n() * omega_n;
        let ball = ball_energy(&p);
        let psi_table = PsiTable::new(&p)?;
        let check = ball_energy_by_quadrature(&p)?;
        let rel = (check - ball).abs() / ball;
        if !(rel <= Self::BALL_CHECK_TOL) {
            return Err(Error::Configuration(format!(
                "ball energy {ball} disagrees with quadrature {check} (relative {rel:e})"
            )));
        }
        Ok(Self {
            params: p,
            omega_n,
            sphere_area,
            ball_energy: ball,
            psi_table,
        })
    }

    /// `psi` from the table, falling back to a fixed rule beyond it.
    pub fn psi(&self, t: f64) -> f64 {
        self.psi_table
            .eval(t.abs())
            .unwrap_or_else(|| psi_far(t.abs(), &self.params))
    }

    /// Derivative of the tabulated `psi`.
    pub fn psi_derivative(&self, t: f64) -> f64 {
        self.psi_table.eval_derivative(t).unwrap_or_else(|| {
            let h = 1e-4 * t;
            (psi_far(t + h, &self.params) - psi_far(t - h, &self.params)) / (2.0 * h)
        })
    }
}

/// `N omega_N` times the integral of `psi(t) t^(N-1)` over `[0, 1]`.
pub fn ball_energy_by_quadrature(p: &KernelParams) -> Result<f64> {
    let rule = GaussLegendre::cached(40);
    let mut acc = 0.0;
    for (t, w) in rule.mapped(0.0, 1.0) {
        acc += w * psi(t, p)? * t.powi(p.dim as i32 - 1);
    }
    Ok(p.n() * omega(p) * acc)
}
