//! Transfer-matrix cocycle `M_{E,ω}(n) = A_n ⋯ A_1` with
//! `A_k = [[E − V(k), −1], [1, 0]]`, Lyapunov exponents and the Oseledec
//! contracting direction.

use rayon::prelude::*;

use crate::furstenberg::{MatrixDistribution, ProjectivePoint};
use crate::model::{sample_path, PotentialPath, SiteDistribution};
use crate::rng::CounterRng;
use crate::stats::{linear_fit, mean_stderr};
use crate::{Error, Result};

/// `‖T_n‖` must exceed this before a singular direction is trusted.
pub const HYPERBOLIC_THRESHOLD: f64 = 10.0;

/// A real 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn diag(x: f64, y: f64) -> Self {
        Self::new(x, 0.0, 0.0, y)
    }

    /// Counter-clockwise rotation by `alpha`.
    pub fn rotation(alpha: f64) -> Self {
        let (s, c) = alpha.sin_cos();
        Self::new(c, -s, s, c)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.a, self.c, self.b, self.d)
    }

    /// Inverse; for unimodular matrices this is the adjugate.
    pub fn inverse(&self) -> Mat2 {
        let det = self.det();
        Mat2::new(self.d / det, -self.b / det, -self.c / det, self.a / det)
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    /// Operator 2-norm (largest singular value), closed form.
    pub fn norm(&self) -> f64 {
        let f = self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d;
        let det = self.det();
        let disc = ((f - 2.0 * det) * (f + 2.0 * det)).max(0.0).sqrt();
        (0.5 * (f + disc)).sqrt()
    }

    /// Angle in `[0, π)` of the top right-singular vector (eigenvector of
    /// `MᵀM` for its largest eigenvalue).
    pub fn top_right_singular_angle(&self) -> f64 {
        let p = self.a * self.a + self.c * self.c;
        let s = self.b * self.b + self.d * self.d;
        let q = self.a * self.b + self.c * self.d;
        ProjectivePoint::new(0.5 * (2.0 * q).atan2(p - s)).theta()
    }
}

/// An element of SL(2,R): a [`Mat2`] with determinant 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sl2(Mat2);

impl Sl2 {
    pub const DET_TOL: f64 = 1e-9;

    pub fn new(m: Mat2) -> Result<Self> {
        if (m.det() - 1.0).abs() > Self::DET_TOL {
            return Err(Error::InvalidParameter {
                name: "matrix",
                reason: format!("determinant {} is not 1", m.det()),
            });
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn rotation(alpha: f64) -> Self {
        Self(Mat2::rotation(alpha))
    }
}

/// `[[E − v, −1], [1, 0]]`.
pub fn step_matrix(energy: f64, v: f64) -> Sl2 {
    Sl2(Mat2::new(energy - v, -1.0, 1.0, 0.0))
}

/// A product `P = A_n ⋯ A_1` of SL(2,R) matrices kept in QR form
/// `P = r₁₁ · Q · [[1, ρ], [0, δ]] · J^{-k}`, `δ = r₂₂/r₁₁`, `J` the quarter
/// turn, with `log r₁₁` and `log r₂₂` accumulated separately. Every step
/// refactorizes `A·Q` by a Givens rotation, so the product never overflows
/// and `det P = r₁₁ r₂₂` stays observable after the small singular value
/// has underflowed. Whenever `δ > 1` the core is pivoted through `J`, which
/// keeps `δ ≤ 1` even when the first column is an exact contracting
/// direction (diagonal products).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledProduct {
    q: [f64; 2],
    rho: f64,
    log_r11: f64,
    log_r22: f64,
    turns: u8,
    pub steps: usize,
}

impl Default for ScaledProduct {
    fn default() -> Self {
        Self::identity()
    }
}

impl ScaledProduct {
    pub fn identity() -> Self {
        Self {
            q: [1.0, 0.0],
            rho: 0.0,
            log_r11: 0.0,
            log_r22: 0.0,
            turns: 0,
            steps: 0,
        }
    }

    fn q_matrix(&self) -> Mat2 {
        let [c, s] = self.q;
        Mat2::new(c, -s, s, c)
    }

    fn delta(&self) -> f64 {
        (self.log_r22 - self.log_r11).exp()
    }

    /// Left-multiplies by the next factor: `P ← A · P`.
    pub fn push(&mut self, a: &Mat2) {
        let b = a.mul(&self.q_matrix());
        let r11 = b.a.hypot(b.c);
        let (c, s) = (b.a / r11, b.c / r11);
        let r12 = c * b.b + s * b.d;
        let r22 = c * b.d - s * b.b;
        self.rho += r12 / r11 * self.delta();
        self.q = [c, s];
        self.log_r11 += r11.ln();
        self.log_r22 += r22.abs().ln();
        self.steps += 1;
        let delta = self.delta();
        if delta > 1.0 {
            // [[1, ρ], [0, δ]]·J = [[ρ, −1], [δ, 0]], refactorized
            let r = self.rho.hypot(delta);
            let (gc, gs) = (self.rho / r, delta / r);
            let [c, s] = self.q;
            self.q = [c * gc - s * gs, s * gc + c * gs];
            self.rho = -gc / r;
            self.log_r11 += r.ln();
            self.log_r22 -= r.ln();
            self.turns = (self.turns + 1) % 4;
        }
    }

    fn core(&self) -> Mat2 {
        let core = Mat2::new(1.0, self.rho, 0.0, self.delta());
        match self.turns {
            0 => core,
            1 => core.mul(&Mat2::new(0.0, 1.0, -1.0, 0.0)),
            2 => core.scale(-1.0),
            _ => core.mul(&Mat2::new(0.0, -1.0, 1.0, 0.0)),
        }
    }

    /// `P / exp(log_scale)`, largest entry of magnitude 1.
    pub fn matrix(&self) -> Mat2 {
        let m = self.q_matrix().mul(&self.core());
        m.scale(1.0 / m.max_abs())
    }

    /// `log` of the factor removed by [`Self::matrix`].
    pub fn log_scale(&self) -> f64 {
        let m = self.q_matrix().mul(&self.core());
        self.log_r11 + m.max_abs().ln()
    }

    /// `log ‖P‖`.
    pub fn log_norm(&self) -> f64 {
        self.log_r11 + self.core().norm().ln()
    }

    /// `|det(P) − 1|` with `det P = r₁₁ r₂₂`.
    pub fn det_defect(&self) -> f64 {
        (self.log_r11 + self.log_r22).exp_m1().abs()
    }

    /// The product scaled back to its true size (overflows for long products).
    pub fn reconstruct(&self) -> Mat2 {
        self.q_matrix().mul(&self.core()).scale(self.log_r11.exp())
    }
}

/// Product of the step matrices over sites `1..=n` of `path`.
pub fn cocycle_product(energy: f64, path: &PotentialPath, n: usize) -> Result<ScaledProduct> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "must be at least 1".into(),
        });
    }
    let values = path.slice(1, n as i64)?;
    let mut p = ScaledProduct::identity();
    for &v in values {
        p.push(step_matrix(energy, v).matrix());
    }
    Ok(p)
}

/// Product of an explicit sequence of factors, first factor applied first.
pub fn product_of(factors: &[Mat2]) -> ScaledProduct {
    let mut p = ScaledProduct::identity();
    for a in factors {
        p.push(a);
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovEstimate {
    pub energy: f64,
    pub gamma: f64,
    pub stderr: f64,
    pub steps: usize,
    pub realizations: usize,
}

fn check_run(n: usize, realizations: usize) -> Result<()> {
    if n < 1000 {
        return Err(Error::InvalidParameter {
            name: "steps",
            reason: format!("need at least 1000 steps, got {n}"),
        });
    }
    if realizations == 0 {
        return Err(Error::InvalidParameter {
            name: "realizations",
            reason: "must be at least 1".into(),
        });
    }
    Ok(())
}

/// Mean of `(1/n) log ‖M_{E,ω}(n)‖` over independent realizations, with the
/// across-realization standard error.
pub fn lyapunov_estimate(
    dist: &SiteDistribution,
    energy: f64,
    n: usize,
    realizations: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    check_run(n, realizations)?;
    let per: Vec<f64> = (0..realizations as u64)
        .into_par_iter()
        .map(|r| {
            let path = sample_path(dist, seed, r, (1, n as i64))?;
            Ok(cocycle_product(energy, &path, n)?.log_norm() / n as f64)
        })
        .collect::<Result<_>>()?;
    let (gamma, stderr) = mean_stderr(&per);
    Ok(LyapunovEstimate {
        energy,
        gamma,
        stderr,
        steps: n,
        realizations,
    })
}

/// Direct cocycle estimate for i.i.d. products drawn from `md`. The reported
/// energy is `NaN` since no energy is attached to a bare matrix law.
pub fn lyapunov_estimate_matrices(
    md: &MatrixDistribution,
    n: usize,
    realizations: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    check_run(n, realizations)?;
    let per: Vec<f64> = (0..realizations as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = CounterRng::at(seed, r, 0);
            let mut p = ScaledProduct::identity();
            for _ in 0..n {
                p.push(md.sample(rng.next_uniform()).matrix());
            }
            p.log_norm() / n as f64
        })
        .collect();
    let (gamma, stderr) = mean_stderr(&per);
    Ok(LyapunovEstimate {
        energy: f64::NAN,
        gamma,
        stderr,
        steps: n,
        realizations,
    })
}

/// Most-contracted right-singular direction `θ_n` of a product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OseledecDirection {
    pub direction: ProjectivePoint,
    /// `log ‖T_n‖`.
    pub log_norm: f64,
    /// False when `‖T_n‖ ≤ 10`; the direction is then noise.
    pub converged: bool,
}

pub fn contracting_direction(product: &ScaledProduct) -> OseledecDirection {
    let top = product.matrix().top_right_singular_angle();
    let log_norm = product.log_norm();
    OseledecDirection {
        direction: ProjectivePoint::new(top + std::f64::consts::FRAC_PI_2),
        log_norm,
        converged: log_norm > HYPERBOLIC_THRESHOLD.ln(),
    }
}

/// `θ_n` for the Anderson cocycle at energy `energy`.
pub fn oseledec_direction(
    energy: f64,
    path: &PotentialPath,
    n: usize,
) -> Result<OseledecDirection> {
    Ok(contracting_direction(&cocycle_product(energy, path, n)?))
}

/// `log ‖M_m x‖` for `m = 0..=n` and the slope fitted over `m ≥ n/2`.
#[derive(Debug, Clone)]
pub struct SolutionGrowth {
    pub log_norms: Vec<(usize, f64)>,
    pub slope: f64,
    pub slope_stderr: f64,
}

/// Log-scaled 2-vector `exp(log) · v` with `‖v‖ = 1`.
#[derive(Debug, Clone, Copy)]
struct ScaledVec {
    v: [f64; 2],
    log: f64,
}

impl ScaledVec {
    fn new(v: [f64; 2], log: f64) -> Self {
        let n = v[0].hypot(v[1]);
        Self {
            v: [v[0] / n, v[1] / n],
            log: log + n.ln(),
        }
    }

    fn map(&self, m: &Mat2) -> Self {
        Self::new(m.apply(self.v), self.log)
    }
}

/// `log ‖a + b‖` for log-scaled vectors; a `None` term is zero.
fn log_norm_sum(a: Option<ScaledVec>, b: Option<ScaledVec>) -> f64 {
    match (a, b) {
        (None, None) => f64::NEG_INFINITY,
        (Some(x), None) | (None, Some(x)) => x.log,
        (Some(x), Some(y)) => {
            let top = x.log.max(y.log);
            let (sx, sy) = ((x.log - top).exp(), (y.log - top).exp());
            let s = [sx * x.v[0] + sy * y.v[0], sx * x.v[1] + sy * y.v[1]];
            top + s[0].hypot(s[1]).ln()
        }
    }
}

/// Orbit norms `‖M_m x‖` of the solution with initial data `x = (u(1), u(0))`.
///
/// With `u_±` the right-singular vectors of `M_n` and `w_±` the matching left
/// ones, `M_m x = β M_m u_+ + α σ_− (A_n ⋯ A_{m+1})^{-1} w_−`. The growing
/// term is iterated forward and the decaying one backward, so both stay
/// numerically stable over `n ≫ 1/γ` steps. A component of `x` along `u_+`
/// below the angular resolution of `x` itself (`64 ε`) is rounding noise
/// and is dropped.
pub fn solution_growth(
    energy: f64,
    path: &PotentialPath,
    initial: [f64; 2],
    n: usize,
) -> Result<SolutionGrowth> {
    let norm = initial[0].hypot(initial[1]);
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    let x = [initial[0] / norm, initial[1] / norm];
    let steps: Vec<Mat2> = path
        .slice(1, n as i64)?
        .iter()
        .map(|&v| *step_matrix(energy, v).matrix())
        .collect();
    let total = product_of(&steps);
    let phi = total.matrix().top_right_singular_angle();
    let u_plus = [phi.cos(), phi.sin()];
    let u_minus = [-phi.sin(), phi.cos()];
    let beta = x[0] * u_plus[0] + x[1] * u_plus[1];
    let alpha = x[0] * u_minus[0] + x[1] * u_minus[1];
    let beta = if beta.abs() <= 64.0 * f64::EPSILON {
        0.0
    } else {
        beta
    };

    let log_sigma_max = total.log_norm();
    // left singular vectors; det > 0 keeps the orientation of (u_+, u_-)
    let wp = total.matrix().apply(u_plus);
    let wn = wp[0].hypot(wp[1]);
    let w_plus = [wp[0] / wn, wp[1] / wn];
    let w_minus = [-w_plus[1], w_plus[0]];

    let mut forward: Vec<Option<ScaledVec>> = vec![None; n + 1];
    if beta != 0.0 {
        let mut cur = ScaledVec::new([beta * u_plus[0], beta * u_plus[1]], 0.0);
        forward[0] = Some(cur);
        for (m, a) in steps.iter().enumerate() {
            cur = cur.map(a);
            forward[m + 1] = Some(cur);
        }
    }
    let mut backward: Vec<Option<ScaledVec>> = vec![None; n + 1];
    if alpha != 0.0 {
        let mut cur = ScaledVec::new(
            [alpha * w_minus[0], alpha * w_minus[1]],
            -log_sigma_max,
        );
        backward[n] = Some(cur);
        for m in (0..n).rev() {
            cur = cur.map(&steps[m].inverse());
            backward[m] = Some(cur);
        }
    }
    let log_norms: Vec<(usize, f64)> = (0..=n)
        .map(|m| (m, log_norm_sum(forward[m], backward[m])))
        .collect();
    let tail = &log_norms[n / 2..];
    let xs: Vec<f64> = tail.iter().map(|(m, _)| *m as f64).collect();
    let ys: Vec<f64> = tail.iter().map(|(_, l)| *l).collect();
    let fit = linear_fit(&xs, &ys);
    Ok(SolutionGrowth {
        log_norms,
        slope: fit.slope,
        slope_stderr: fit.slope_stderr,
    })
}
