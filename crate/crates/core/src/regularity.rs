//! Weighted profiles of a solution near `t = 0` and membership tests for
//! `E_α` and `C¹_{2−α}`:
//!
//! ```text
//! q(t) = t^{α−1} D^{α−1}u(t)     (E_α: q extends continuously to 0)
//! p(t) = t^{2−α} u′(t)           (C¹_{2−α}: p extends continuously to 0)
//! ```
//!
//! Both are sampled on `t_j = t₀ r^j`. A power law `x(t) ≈ x₀ + c t^σ` then
//! has successive differences shrinking by `r^σ` per step: a stable ratio
//! below one means a limit, growth means divergence.

use std::fmt;

use crate::error::Result;
use crate::powercalc::Order;
use crate::singquad::{apply_dalpha_minus_1, apply_green, apply_green_derivative, build_mesh, GradedMesh, WeightSpec};
use crate::solver::{GridFunction, NonlinearitySpec};

/// Ratio a difference sequence must stay under to count as converging.
pub const STABLE_RATIO: f64 = 0.9;
/// Number of consecutive steps each test looks at.
pub const TAIL: usize = 5;
/// Growth factor over `max(1, |x(t₀)|)` that signals divergence.
pub const DIVERGENCE_FACTOR: f64 = 10.0;
/// Differences below this multiple of the profile scale are quadrature
/// noise and count as settled.
pub const NOISE_FLOOR: f64 = 1e-9;

/// A source `g(s) = s^{−σ} φ(s)` with its mesh: everything the three Green
/// integrals need.
pub struct Problem {
    alpha: Order,
    mesh: GradedMesh,
    sigma: f64,
    phi: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Problem {
    /// `D^α u + g = 0` for a weight or signed forcing `g`, on the graded
    /// mesh with `n` panels.
    pub fn linear(g: &WeightSpec, alpha: Order, n: usize) -> Result<Self> {
        let mesh = build_mesh(n, g, alpha)?;
        let phi = g.bounded_factor();
        Ok(Problem {
            alpha,
            mesh,
            sigma: g.singular_exponent(),
            phi: Box::new(move |s| phi.eval_positive(s)),
        })
    }

    /// The linear problem satisfied by a nonlinear solution: `g = h f(u)`.
    pub fn nonlinear(w: &WeightSpec, f: NonlinearitySpec, solution: &GridFunction) -> Result<Self> {
        let mesh = build_mesh(solution.mesh.n(), w, solution.alpha)?;
        let phi = w.bounded_factor();
        let u = solution.interpolant();
        Ok(Problem {
            alpha: solution.alpha,
            mesh,
            sigma: w.singular_exponent(),
            phi: Box::new(move |s| phi.eval_positive(s) * f.eval(u.eval(s))),
        })
    }

    pub fn alpha(&self) -> Order {
        self.alpha
    }

    pub fn mesh(&self) -> &GradedMesh {
        &self.mesh
    }

    /// `u(t)`, `t ∈ [0, 1]`.
    pub fn u(&self, t: f64) -> Result<f64> {
        apply_green(t, self.sigma, &self.phi, self.alpha, &self.mesh)
    }

    /// `u′(t)`, `t ∈ (0, 1)`.
    pub fn du(&self, t: f64) -> Result<f64> {
        apply_green_derivative(t, self.sigma, &self.phi, self.alpha, &self.mesh)
    }

    /// `D^{α−1}u(t)`, `t ∈ (0, 1)`.
    pub fn dalpha_minus_1(&self, t: f64) -> Result<f64> {
        apply_dalpha_minus_1(t, self.sigma, &self.phi, self.alpha, &self.mesh)
    }

    /// `t^{α−1} D^{α−1}u(t)`.
    pub fn q(&self, t: f64) -> Result<f64> {
        Ok(t.powf(self.alpha.value() - 1.0) * self.dalpha_minus_1(t)?)
    }

    /// `t^{2−α} u′(t)`.
    pub fn p(&self, t: f64) -> Result<f64> {
        Ok(t.powf(2.0 - self.alpha.value()) * self.du(t)?)
    }
}

/// `(t, q(t))` for each `t ∈ (0, 1)`.
pub fn q_profile(problem: &Problem, ts: &[f64]) -> Result<Vec<(f64, f64)>> {
    ts.iter().map(|&t| Ok((t, problem.q(t)?))).collect()
}

/// `(t, p(t))` for each `t ∈ (0, 1)`.
pub fn p_profile(problem: &Problem, ts: &[f64]) -> Result<Vec<(f64, f64)>> {
    ts.iter().map(|&t| Ok((t, problem.p(t)?))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Estimated behaviour of a profile as `t → 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitEstimate {
    Finite(f64),
    Divergent,
    Undetermined,
}

impl LimitEstimate {
    pub fn value(&self) -> Option<f64> {
        match self {
            LimitEstimate::Finite(v) => Some(*v),
            _ => None,
        }
    }
}

impl fmt::Display for LimitEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitEstimate::Finite(v) => write!(f, "{v:.6e}"),
            LimitEstimate::Divergent => f.write_str("divergent"),
            LimitEstimate::Undetermined => f.write_str("undetermined"),
        }
    }
}

/// Geometric sampling `t_j = t0 · ratio^j`, `j = 0..=count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub t0: f64,
    pub ratio: f64,
    pub count: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            t0: 0.25,
            ratio: 0.5,
            count: 20,
        }
    }
}

impl Sampling {
    pub fn points(&self) -> Vec<f64> {
        (0..=self.count).map(|j| self.t0 * self.ratio.powi(j as i32)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub q_limit_estimate: LimitEstimate,
    pub p_limit_estimate: LimitEstimate,
    pub in_e_alpha: Verdict,
    pub in_c1_2ma: Verdict,
    /// `max|u| + max|q|` on the grid; a lower bound for the true norm.
    pub e_alpha_norm: Option<f64>,
    /// `max|u| + max|p|` on the grid.
    pub c1_norm: Option<f64>,
    /// `(t_j, q(t_j), p(t_j))`
    pub samples: Vec<(f64, f64, f64)>,
    /// `Σ|Δu|` over the norm grid.
    pub total_variation: f64,
}

/// Verdict and limit estimate for one profile sampled on a geometric
/// sequence toward 0.
pub fn judge(x: &[f64]) -> (Verdict, LimitEstimate) {
    let n = x.len();
    if n < TAIL + 2 || x.iter().any(|v| !v.is_finite()) {
        return (Verdict::Inconclusive, LimitEstimate::Undetermined);
    }
    let x0 = x[0].abs().max(1.0);
    let last = x[n - 1];
    let tail = &x[n - 1 - TAIL..];
    let growing = tail.windows(2).all(|w| w[1].abs() > w[0].abs());
    if last.abs() > DIVERGENCE_FACTOR * x0 && growing {
        return (Verdict::No, LimitEstimate::Divergent);
    }
    let scale = x.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let floor = NOISE_FLOOR * scale;
    let d: Vec<f64> = x.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let settled = (d.len() - TAIL..d.len()).all(|j| d[j] <= floor || (d[j - 1] > 0.0 && d[j] / d[j - 1] <= STABLE_RATIO));
    let bounded = x.iter().all(|v| v.abs() <= DIVERGENCE_FACTOR * x0);
    if settled && bounded {
        (Verdict::Yes, LimitEstimate::Finite(extrapolate(x)))
    } else {
        (Verdict::Inconclusive, LimitEstimate::Undetermined)
    }
}

/// Last value plus the geometric tail implied by the last two differences.
fn extrapolate(x: &[f64]) -> f64 {
    let n = x.len();
    let (a, b) = (x[n - 2] - x[n - 3], x[n - 1] - x[n - 2]);
    if a == 0.0 || b == 0.0 {
        return x[n - 1];
    }
    let rho = (b / a).clamp(-STABLE_RATIO, STABLE_RATIO);
    x[n - 1] + b * rho / (1.0 - rho)
}

/// Samples `q` and `p` toward 0 and decides membership in `E_α` and
/// `C¹_{2−α}`. Norms are maxima over the interior mesh nodes together with
/// the samples.
pub fn classify(problem: &Problem, sampling: Sampling) -> Result<RegularityReport> {
    let ts = sampling.points();
    let q = q_profile(problem, &ts)?;
    let p = p_profile(problem, &ts)?;
    let qx: Vec<f64> = q.iter().map(|v| v.1).collect();
    let px: Vec<f64> = p.iter().map(|v| v.1).collect();
    let (in_e_alpha, q_limit_estimate) = judge(&qx);
    let (in_c1_2ma, p_limit_estimate) = judge(&px);

    let nodes = problem.mesh().nodes();
    let mut grid: Vec<f64> = nodes.to_vec();
    grid.extend_from_slice(&ts);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let u: Vec<f64> = grid.iter().map(|&t| problem.u(t)).collect::<Result<_>>()?;
    let u_sup = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let total_variation = u.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let interior: Vec<f64> = grid.iter().copied().filter(|&t| t > 0.0 && t < 1.0).collect();
    let max_abs = |f: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
        interior.iter().try_fold(0.0_f64, |m, &t| Ok(m.max(f(t)?.abs())))
    };
    let e_alpha_norm = match in_e_alpha {
        Verdict::No => None,
        _ => Some(u_sup + max_abs(&|t| problem.q(t))?),
    };
    let c1_norm = match in_c1_2ma {
        Verdict::No => None,
        _ => Some(u_sup + max_abs(&|t| problem.p(t))?),
    };
    Ok(RegularityReport {
        q_limit_estimate,
        p_limit_estimate,
        in_e_alpha,
        in_c1_2ma,
        e_alpha_norm,
        c1_norm,
        samples: ts.iter().zip(qx.iter().zip(&px)).map(|(&t, (&a, &b))| (t, a, b)).collect(),
        total_variation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn judge_power_laws() {
        let pts = Sampling::default().points();
        let conv: Vec<f64> = pts.iter().map(|t| 2.0 + 3.0 * t.powf(0.3)).collect();
        let (v, lim) = judge(&conv);
        assert_eq!(v, Verdict::Yes);
        assert!((lim.value().unwrap() - 2.0).abs() < 0.05);
        let div: Vec<f64> = pts.iter().map(|t| t.powf(-0.3)).collect();
        assert_eq!(judge(&div), (Verdict::No, LimitEstimate::Divergent));
        // near-critical exponent: ratio 2^{-0.05} > 0.9, not enough growth
        let slow: Vec<f64> = pts.iter().map(|t| t.powf(0.05)).collect();
        assert_eq!(judge(&slow).0, Verdict::Inconclusive);
        let slow_growth: Vec<f64> = pts.iter().map(|t| t.powf(-0.05)).collect();
        assert_eq!(judge(&slow_growth).0, Verdict::Inconclusive);
        let log: Vec<f64> = pts.iter().map(|t| -t.ln()).collect();
        assert_eq!(judge(&log).0, Verdict::No);
    }

    #[test]
    fn constant_profile_is_settled() {
        let flat = vec![0.7; 21];
        assert_eq!(judge(&flat), (Verdict::Yes, LimitEstimate::Finite(0.7)));
        let noisy: Vec<f64> = (0..21).map(|j| 0.7 + 1e-13 * ((j * 7919) % 13) as f64).collect();
        assert_eq!(judge(&noisy).0, Verdict::Yes);
    }

    #[test]
    fn classical_profiles() {
        // α = 2, g ≡ 1: q = t u′ = t(1−2t)/2, p = u′
        let pr = Problem::linear(&WeightSpec::power(0.0).unwrap(), Order::new(2.0).unwrap(), 64).unwrap();
        assert!(pr.q(0.5).unwrap().abs() < 1e-14);
        assert!((pr.q(0.25).unwrap() - 0.0625).abs() < 1e-14);
        assert!((pr.p(0.25).unwrap() - 0.25).abs() < 1e-14);
        let rep = classify(&pr, Sampling::default()).unwrap();
        assert_eq!(rep.in_e_alpha, Verdict::Yes);
        assert_eq!(rep.in_c1_2ma, Verdict::Yes);
        assert!((rep.p_limit_estimate.value().unwrap() - 0.5).abs() < 1e-6);
        assert!((rep.total_variation - 0.25).abs() < 1e-12);
    }
}
