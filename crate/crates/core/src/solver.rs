//! Linear and nonlinear solves on a graded mesh, and a Grünwald–Letnikov
//! residual check that shares no code with the Green quadrature.
//!
//! The linear problem `D^α u + g = 0` is solved node by node through the
//! Green representation. The nonlinear problem `D^α u + h f(u) = 0` is
//! solved by Picard iteration on `T u = ∫ G(·,s) h(s) f(u(s)) ds`, with the
//! quadrature of `T` assembled once into a discrete operator.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::greenkernel::Kernels;
use crate::interp::MonotoneCubic;
use crate::powercalc::Order;
use crate::singquad::{apply_green, build_mesh, check_condition_h, GradedMesh, PanelLayout, RulePoint, scaled_power, WeightSpec};

/// Default stopping tolerance on the sup-node Picard update.
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 200;
/// Uniform step count used for the residual in [`SolveReport`].
pub const RESIDUAL_STEPS: usize = 1024;

/// Node values of a solution on its mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub mesh: GradedMesh,
    pub values: Vec<f64>,
    pub alpha: Order,
}

impl GridFunction {
    pub fn nodes(&self) -> &[f64] {
        self.mesh.nodes()
    }

    /// Monotone cubic through the node values.
    pub fn interpolant(&self) -> MonotoneCubic {
        MonotoneCubic::new(self.mesh.nodes(), &self.values)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `f` in `D^α u + h f(u) = 0`, defined on `[0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NonlinearitySpec {
    Constant(f64),
    Linear(f64),
    /// `u^p`, `p > 0`
    Power(f64),
    /// `a u + b`
    Affine(f64, f64),
}

impl NonlinearitySpec {
    /// Checks that the parameters keep `f` nonnegative on `[0, ∞)`.
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            NonlinearitySpec::Constant(c) => c >= 0.0 && c.is_finite(),
            NonlinearitySpec::Linear(a) => a >= 0.0 && a.is_finite(),
            NonlinearitySpec::Power(p) => p > 0.0 && p.is_finite(),
            NonlinearitySpec::Affine(a, b) => a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("nonlinearity {self} has out-of-range parameters")))
        }
    }

    /// `f(max(u, 0))`.
    pub fn eval(&self, u: f64) -> f64 {
        let u = u.max(0.0);
        match *self {
            NonlinearitySpec::Constant(c) => c,
            NonlinearitySpec::Linear(a) => a * u,
            NonlinearitySpec::Power(p) => u.powf(p),
            NonlinearitySpec::Affine(a, b) => a * u + b,
        }
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.validate().is_ok()
    }
}

impl fmt::Display for NonlinearitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            NonlinearitySpec::Constant(c) => write!(f, "const:{c}"),
            NonlinearitySpec::Linear(a) => write!(f, "linear:{a}"),
            NonlinearitySpec::Power(p) => write!(f, "power:{p}"),
            NonlinearitySpec::Affine(a, b) => write!(f, "affine:{a},{b}"),
        }
    }
}

impl FromStr for NonlinearitySpec {
    type Err = Error;

    /// `const:<c>`, `linear:<a>`, `power:<p>` or `affine:<a>,<b>`.
    fn from_str(text: &str) -> Result<Self> {
        let (kind, args) = text.split_once(':').ok_or_else(|| Error::Parse {
            position: 0,
            message: format!("expected <kind>:<params> in {text:?}"),
        })?;
        let offset = kind.len() + 1;
        let nums: Vec<f64> = args
            .split(',')
            .scan(offset, |pos, part| {
                let start = *pos;
                *pos += part.len() + 1;
                Some(part.trim().parse::<f64>().map_err(|_| Error::Parse {
                    position: start,
                    message: format!("invalid number {part:?}"),
                }))
            })
            .collect::<Result<_>>()?;
        let arity = |k: usize| {
            if nums.len() == k {
                Ok(())
            } else {
                Err(Error::Parse {
                    position: offset,
                    message: format!("{kind} takes {k} parameter(s), got {}", nums.len()),
                })
            }
        };
        let spec = match kind.trim() {
            "const" | "constant" => {
                arity(1)?;
                NonlinearitySpec::Constant(nums[0])
            }
            "linear" => {
                arity(1)?;
                NonlinearitySpec::Linear(nums[0])
            }
            "power" => {
                arity(1)?;
                NonlinearitySpec::Power(nums[0])
            }
            "affine" => {
                arity(2)?;
                NonlinearitySpec::Affine(nums[0], nums[1])
            }
            other => {
                return Err(Error::Parse {
                    position: 0,
                    message: format!("unknown nonlinearity kind {other:?}"),
                })
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Picard controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            damping: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: GridFunction,
    pub picard_iterations: usize,
    pub final_update_sup_norm: f64,
    pub residual_median_rel: f64,
    pub converged: bool,
    /// Sup-node update of every iteration.
    pub update_trace: Vec<f64>,
}

/// Per-point Grünwald–Letnikov residuals on `[0.1, 0.9]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualStats {
    pub median_rel: f64,
    /// `(t_j, |D^α u + g| / (|g| + 1e−12))`
    pub per_point: Vec<(f64, f64)>,
}

/// `u(tᵢ) = ∫ G(tᵢ,s) g(s) ds` on the graded mesh for `g`, which may be any
/// signed weight passing the integrability gate.
pub fn solve_linear(g: &WeightSpec, alpha: Order, n: usize) -> Result<GridFunction> {
    let mesh = build_mesh(n, g, alpha)?;
    let sigma = g.singular_exponent();
    let phi = g.bounded_factor();
    let values = mesh
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            if i == 0 || i == n {
                Ok(0.0)
            } else {
                apply_green(t, sigma, |s| phi.eval_positive(s), alpha, &mesh)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GridFunction { mesh, values, alpha })
}

/// Quadrature of `∫ G(tᵢ,s) s^{−σ} φ(s) ψ(s) ds` at every interior node,
/// with the `ψ`-independent part of each term precomputed.
struct GreenOperator {
    base_s: Vec<f64>,
    /// `rows[i][j]`: coefficient of `ψ(base_s[j])` for interior node `i + 1`
    rows: Vec<Vec<f64>>,
    /// `(s, coefficient)` on the panels rebuilt around each node
    special: Vec<Vec<(f64, f64)>>,
}

impl GreenOperator {
    fn new(mesh: &GradedMesh, w: &WeightSpec, alpha: Order) -> Result<Self> {
        let sigma = w.singular_exponent();
        let phi = w.bounded_factor();
        let layout = PanelLayout::new(mesh, alpha, sigma)?;
        let kernels = Kernels::new(alpha);
        let n = mesh.n();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut base: Vec<RulePoint> = Vec::new();
        for j in 0..n {
            offsets.push(base.len());
            layout.interval_points(j, &mut base);
        }
        offsets.push(base.len());
        let base_phi: Vec<f64> = base.iter().map(|p| if p.s > 0.0 { phi.eval_positive(p.s) } else { 0.0 }).collect();
        if !base_phi.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("weight is not finite on (0, 1]".into()));
        }

        let mut rows = Vec::with_capacity(n.saturating_sub(1));
        let mut special = Vec::with_capacity(n.saturating_sub(1));
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for &t in &mesh.nodes()[1..n] {
            let (k_left, k) = layout.plan(t);
            let mut row = vec![0.0; base.len()];
            for j in offsets[0]..offsets[k_left] {
                let p = &base[j];
                if p.s > 0.0 {
                    row[j] = scaled_power(p.weight * kernels.green_left(t, p.kernel_point(t)), p.s, sigma, base_phi[j]);
                }
            }
            for j in offsets[k + 1]..offsets[n] {
                let p = &base[j];
                row[j] = scaled_power(p.weight * kernels.green_right(t, p.kernel_point(t)), p.s, sigma, base_phi[j]);
            }
            left.clear();
            right.clear();
            layout.special_points(t, k_left, k, &mut left, &mut right);
            let mut sp = Vec::with_capacity(left.len() + right.len());
            for p in &left {
                if p.s > 0.0 && p.weight != 0.0 {
                    sp.push((p.s, scaled_power(p.weight * kernels.green_left(t, p.kernel_point(t)), p.s, sigma, phi.eval_positive(p.s))));
                }
            }
            for p in &right {
                if p.weight != 0.0 {
                    sp.push((p.s, scaled_power(p.weight * kernels.green_right(t, p.kernel_point(t)), p.s, sigma, phi.eval_positive(p.s))));
                }
            }
            rows.push(row);
            special.push(sp);
        }
        let finite = rows.iter().flatten().all(|v| v.is_finite()) && special.iter().flatten().all(|c| c.1.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("quadrature coefficients are not finite".into()));
        }
        Ok(GreenOperator {
            base_s: base.iter().map(|p| p.s).collect(),
            rows,
            special,
        })
    }

    /// Node values of the operator applied to `ψ`, endpoints zero.
    fn apply<F: Fn(f64) -> f64>(&self, psi: F) -> Vec<f64> {
        let base_psi: Vec<f64> = self.base_s.iter().map(|&s| psi(s)).collect();
        let mut out = Vec::with_capacity(self.rows.len() + 2);
        out.push(0.0);
        for (row, sp) in self.rows.iter().zip(&self.special) {
            let mut acc: f64 = row.iter().zip(&base_psi).map(|(c, v)| c * v).sum();
            acc += sp.iter().map(|&(s, c)| c * psi(s)).sum::<f64>();
            out.push(acc);
        }
        out.push(0.0);
        out
    }
}

/// Picard iteration state for `u ↦ (1−d) u + d T u`, starting at `u ≡ 0`.
pub struct Picard {
    mesh: GradedMesh,
    alpha: Order,
    f: NonlinearitySpec,
    damping: f64,
    op: GreenOperator,
    current: Vec<f64>,
}

impl Picard {
    /// Requires a nonnegative weight passing the integrability gate.
    pub fn new(w: &WeightSpec, f: NonlinearitySpec, alpha: Order, n: usize, damping: f64) -> Result<Self> {
        f.validate()?;
        if !(damping > 0.0 && damping <= 1.0) {
            return Err(Error::InvalidArgument(format!("damping {damping} outside (0, 1]")));
        }
        let report = check_condition_h(w, alpha);
        if !report.satisfied {
            return Err(Error::ConditionHViolated {
                margin: report.exponent_margin,
            });
        }
        if !w.is_nonnegative() {
            return Err(Error::InvalidArgument(
                "the nonlinear problem needs a nonnegative weight".into(),
            ));
        }
        let mesh = build_mesh(n, w, alpha)?;
        let op = GreenOperator::new(&mesh, w, alpha)?;
        Ok(Picard {
            current: vec![0.0; n + 1],
            mesh,
            alpha,
            f,
            damping,
            op,
        })
    }

    pub fn iterate(&self) -> &[f64] {
        &self.current
    }

    /// Replaces the iterate with `T` applied to `f ≡ 1`, the solution of
    /// the linear problem with `g = h`.
    pub fn restart_from_linear(&mut self) {
        self.current = self.op.apply(|_| 1.0);
    }

    /// `T` of the current iterate.
    pub fn apply_t(&self) -> Vec<f64> {
        let u = MonotoneCubic::new(self.mesh.nodes(), &self.current);
        let f = self.f;
        self.op.apply(|s| f.eval(u.eval(s)))
    }

    /// One damped step; returns the sup-node update.
    pub fn step(&mut self) -> f64 {
        let tu = self.apply_t();
        let d = self.damping;
        let mut update: f64 = 0.0;
        for (u, t) in self.current.iter_mut().zip(&tu) {
            let next = if d == 1.0 { *t } else { (1.0 - d) * *u + d * t };
            update = update.max((next - *u).abs());
            *u = next;
        }
        update
    }

    pub fn into_solution(self) -> GridFunction {
        GridFunction {
            mesh: self.mesh,
            values: self.current,
            alpha: self.alpha,
        }
    }
}

/// Picard iteration for `D^α u + h f(u) = 0`.
///
/// Iteration starts at `u ≡ 0`, except when `f(0) = 0`: zero is then a
/// fixed point, and the iteration starts from the `f ≡ 1` solution instead.
/// Nonconvergence is reported, not raised.
pub fn solve_nonlinear(
    w: &WeightSpec,
    f: NonlinearitySpec,
    alpha: Order,
    n: usize,
    options: PicardOptions,
) -> Result<SolveReport> {
    if !(options.tol > 0.0) || options.max_iter == 0 {
        return Err(Error::InvalidArgument("need tol > 0 and max_iter >= 1".into()));
    }
    let mut picard = Picard::new(w, f, alpha, n, options.damping)?;
    if f.eval(0.0) == 0.0 {
        picard.restart_from_linear();
    }
    let mut trace = Vec::new();
    let mut converged = false;
    while trace.len() < options.max_iter {
        let update = picard.step();
        trace.push(update);
        if !update.is_finite() {
            break;
        }
        if update <= options.tol {
            converged = true;
            break;
        }
    }
    let solution = picard.into_solution();
    let u = solution.interpolant();
    let residual = gl_residual_fn(
        |t| u.eval(t),
        |t| w.eval(t) * f.eval(u.eval(t)),
        alpha,
        RESIDUAL_STEPS,
    )?;
    Ok(SolveReport {
        picard_iterations: trace.len(),
        final_update_sup_norm: trace.last().copied().unwrap_or(f64::INFINITY),
        residual_median_rel: residual.median_rel,
        converged,
        update_trace: trace,
        solution,
    })
}

/// Grünwald–Letnikov weights `(−1)^k C(α, k)`, `k = 0..count`, by the
/// recurrence `w_k = w_{k−1} (k − 1 − α)/k` (the Γ form overflows for
/// large `k`).
pub fn gl_weights(alpha: f64, count: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(count);
    let mut prev = 1.0;
    for k in 0..count {
        if k > 0 {
            prev *= (k as f64 - 1.0 - alpha) / k as f64;
        }
        w.push(prev);
    }
    w
}

/// Residual of `D^α u + g = 0` for the interpolated grid solution.
pub fn gl_residual<G: Fn(f64) -> f64>(u: &GridFunction, g: G, m: usize) -> Result<ResidualStats> {
    let p = u.interpolant();
    gl_residual_fn(|t| p.eval(t), g, u.alpha, m)
}

/// Residual of `D^α u + g = 0` at `t_j = j/m ∈ [0.1, 0.9]`, with `D^α u`
/// from the Grünwald–Letnikov sum on step `1/m`.
pub fn gl_residual_fn<U, G>(u: U, g: G, alpha: Order, m: usize) -> Result<ResidualStats>
where
    U: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if m < 256 {
        return Err(Error::InvalidArgument(format!("residual step count {m} < 256")));
    }
    let a = alpha.value();
    let delta = 1.0 / m as f64;
    let samples: Vec<f64> = (0..=m).map(|i| u(i as f64 * delta)).collect();
    let w = gl_weights(a, m + 1);
    let scale = (m as f64).powf(a);
    let (lo, hi) = (m.div_ceil(10), 9 * m / 10);
    let mut per_point = Vec::with_capacity(hi - lo + 1);
    for j in lo..=hi {
        let t = j as f64 * delta;
        let d: f64 = (0..=j).map(|k| w[k] * samples[j - k]).sum::<f64>() * scale;
        let gt = g(t);
        per_point.push((t, (d + gt).abs() / (gt.abs() + 1e-12)));
    }
    let mut rel: Vec<f64> = per_point.iter().map(|p| p.1).collect();
    rel.sort_by(f64::total_cmp);
    let mid = rel.len() / 2;
    let median_rel = if rel.len() % 2 == 1 {
        rel[mid]
    } else {
        0.5 * (rel[mid - 1] + rel[mid])
    };
    Ok(ResidualStats { median_rel, per_point })
}
