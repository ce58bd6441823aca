//! Weights singular at `s = 0`, the integrability gate
//! `∫₀¹ s^{α−1} h(s) ds < ∞`, graded meshes, and panel Gauss–Legendre
//! quadrature of the three Green integrals
//!
//! ```text
//! u(t)         = ∫₀¹ G(t,s) g(s) ds
//! u′(t)        = ∫₀¹ ∂ₜG(t,s) g(s) ds
//! D^{α−1}u(t)  = ∫₀ᵗ ((1−τ)^{α−1} − 1) g(τ) dτ + ∫ₜ¹ (1−τ)^{α−1} g(τ) dτ
//! ```
//!
//! for sources `g(s) = s^{−β_g} φ(s)` with `φ` bounded.
//!
//! The interval is cut at the mesh nodes and at `t`. Three kinds of panel
//! carry an endpoint singularity and get a power map `x ↦ x^p` of the
//! Gauss variable that clusters nodes toward it:
//! - the panel at `s = 0`, exponent `m = ⌈2/(α − β_g)⌉` (weight singularity);
//! - the panel ending at `s = t` from the left, exponent `1/(α−1)`, which
//!   turns `(t−s)^{α−1}` into a linear function and cancels `(t−s)^{α−2}`;
//! - the panel ending at `s = 1`, same exponent, for `(1−s)^{α−1}`.
//!
//! Panels `[a, b]` with `a > 0` and `b/a > 3` are split geometrically so
//! that the `s^{−β_g}` factor stays well resolved.

use crate::error::{Error, Result};
use crate::gauss::GaussLegendre;
use crate::greenkernel::{KernelPoint, Kernels};
use crate::powercalc::{canonical_exponent, Order, PowerSum};

/// Minimum panel count accepted by [`build_mesh`].
pub const MIN_PANELS: usize = 16;
/// Bounds on the automatic grading exponent.
pub const MAX_GRADING: f64 = 8.0;

/// Weight `h(s) = s^{−β} · regular(s)` with `regular` a power sum with
/// nonnegative exponents, hence continuous on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSpec {
    beta: f64,
    regular: PowerSum,
}

impl WeightSpec {
    pub fn new(beta: f64, regular: PowerSum) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "singularity exponent beta = {beta} must be finite and >= 0"
            )));
        }
        if let Some(e) = regular.min_exponent() {
            if e < 0.0 {
                return Err(Error::ExponentOutOfRange {
                    exponent: e,
                    reason: "regular factor of a weight needs exponents >= 0",
                });
            }
        }
        Ok(WeightSpec {
            beta: canonical_exponent(beta),
            regular,
        })
    }

    /// `h(s) = s^{−β}`.
    pub fn power(beta: f64) -> Result<Self> {
        Self::new(beta, PowerSum::constant(1.0))
    }

    /// Splits a signed forcing power sum `g` into `s^{−β} · regular(s)`
    /// with `β = max(0, −λ_min)`.
    pub fn from_power_sum(g: &PowerSum) -> Self {
        let beta = g.min_exponent().map_or(0.0, |e| (-e).max(0.0));
        WeightSpec {
            beta: canonical_exponent(beta),
            regular: g.shift(beta),
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn regular(&self) -> &PowerSum {
        &self.regular
    }

    /// Smallest exponent of the regular factor (0 for a zero factor).
    pub fn lambda_min(&self) -> f64 {
        self.regular.min_exponent().unwrap_or(0.0)
    }

    /// The whole weight as one power sum.
    pub fn to_power_sum(&self) -> PowerSum {
        self.regular.shift(-self.beta)
    }

    /// Net algebraic exponent at the origin, `β − λ_min`; may be negative.
    pub fn singular_exponent(&self) -> f64 {
        canonical_exponent(self.beta - self.lambda_min())
    }

    /// `φ(s) = s^{β − λ_min} h(s)`, the bounded factor paired with
    /// [`singular_exponent`](Self::singular_exponent).
    pub fn bounded_factor(&self) -> PowerSum {
        self.regular.shift(-self.lambda_min())
    }

    /// `h(s)` for `s > 0`.
    pub fn eval(&self, s: f64) -> f64 {
        self.to_power_sum().eval_positive(s)
    }

    /// Sufficient check for `h ≥ 0` on `(0, 1]`: nonnegative coefficients,
    /// falling back to a dense sample.
    pub fn is_nonnegative(&self) -> bool {
        if self.regular.terms().iter().all(|t| t.coefficient >= 0.0) {
            return true;
        }
        (1..=4096).all(|i| self.regular.eval_positive(i as f64 / 4096.0) >= 0.0)
    }
}

/// Outcome of the integrability gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    pub satisfied: bool,
    /// `α − β + λ_min`, rounded to 12 decimals.
    pub exponent_margin: f64,
}

/// `∫₀¹ s^{α−1} h(s) ds < ∞` ⇔ `α − β + λ_min > 0`.
pub fn check_condition_h(w: &WeightSpec, alpha: Order) -> ConditionReport {
    let margin = canonical_exponent(alpha.value() - w.beta + w.lambda_min());
    ConditionReport {
        satisfied: margin > 0.0,
        exponent_margin: margin,
    }
}

/// Nodes `tᵢ = (i/n)^γ`, `i = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedMesh {
    grading: f64,
    nodes: Vec<f64>,
}

impl GradedMesh {
    pub fn new(n: usize, grading: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("mesh needs at least one panel".into()));
        }
        if !(grading >= 1.0 && grading.is_finite()) {
            return Err(Error::InvalidArgument(format!("grading {grading} must be >= 1")));
        }
        let nodes = (0..=n)
            .map(|i| {
                if i == n {
                    1.0
                } else {
                    (i as f64 / n as f64).powf(grading)
                }
            })
            .collect();
        Ok(GradedMesh { grading, nodes })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(n, 1.0)
    }

    pub fn n(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}

/// Mesh with `γ = clamp(2/(α − β + λ_min), 1, 8)`.
pub fn build_mesh(n: usize, w: &WeightSpec, alpha: Order) -> Result<GradedMesh> {
    if n < MIN_PANELS {
        return Err(Error::InvalidArgument(format!(
            "mesh needs n >= {MIN_PANELS} panels, got {n}"
        )));
    }
    let report = check_condition_h(w, alpha);
    if !report.satisfied {
        return Err(Error::ConditionHViolated {
            margin: report.exponent_margin,
        });
    }
    GradedMesh::new(n, grading_for_margin(report.exponent_margin))
}

pub fn grading_for_margin(margin: f64) -> f64 {
    (2.0 / margin).clamp(1.0, MAX_GRADING)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Cluster {
    None,
    /// nodes pulled toward `a` by `a + (b−a)x^p`
    TowardA(f64),
    /// nodes pulled toward `b` by `b − (b−a)x^p`
    TowardB(f64),
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    cluster: Cluster,
    /// `b` is the target point `t`
    ends_at_t: bool,
}

/// Quadrature point; `t_minus_s` is precise on the panel abutting `t`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RulePoint {
    pub s: f64,
    pub weight: f64,
    pub t_minus_s: Option<f64>,
    pub one_minus_s: f64,
}

impl RulePoint {
    #[inline]
    pub fn kernel_point(&self, t: f64) -> KernelPoint {
        KernelPoint {
            s: self.s,
            t_minus_s: self.t_minus_s.unwrap_or(t - self.s),
            one_minus_s: self.one_minus_s,
        }
    }
}

/// Panel structure for one `(mesh, α, β_g)` triple.
#[derive(Debug, Clone)]
pub(crate) struct PanelLayout<'m> {
    mesh: &'m GradedMesh,
    origin_power: f64,
    diag_power: f64,
    /// base panels of each mesh interval
    intervals: Vec<Vec<Panel>>,
}

impl<'m> PanelLayout<'m> {
    pub fn new(mesh: &'m GradedMesh, alpha: Order, g_exponent: f64) -> Result<Self> {
        let margin = canonical_exponent(alpha.value() - g_exponent);
        if margin <= 0.0 {
            return Err(Error::ConditionHViolated { margin });
        }
        let origin_power = (2.0 / margin).ceil().max(1.0);
        let diag_power = 1.0 / (alpha.value() - 1.0);
        let nodes = mesh.nodes();
        let n = mesh.n();
        let mut intervals = Vec::with_capacity(n);
        for j in 0..n {
            let (a, b) = (nodes[j], nodes[j + 1]);
            let mut panels = Vec::new();
            if j == 0 {
                panels.push(Panel {
                    a,
                    b,
                    cluster: Cluster::TowardA(origin_power),
                    ends_at_t: false,
                });
            } else {
                push_plain(a, b, &mut panels);
            }
            if j == n - 1 {
                let last = panels.last_mut().expect("nonempty interval");
                if last.a > 0.0 {
                    last.cluster = Cluster::TowardB(diag_power);
                }
            }
            intervals.push(panels);
        }
        Ok(PanelLayout {
            mesh,
            origin_power,
            diag_power,
            intervals,
        })
    }

    /// Points of the base panels of mesh interval `j` (independent of `t`).
    pub fn interval_points(&self, j: usize, out: &mut Vec<RulePoint>) {
        for p in &self.intervals[j] {
            emit(p, out);
        }
    }

    /// Points covering `[nodes[k], t]`, clustered at `t`.
    fn left_special_points(&self, t: f64, k: usize, out: &mut Vec<RulePoint>) {
        let a = self.mesh.nodes()[k];
        let mut panels = Vec::new();
        let diag = |a: f64| Panel {
            a,
            b: t,
            cluster: Cluster::TowardB(self.diag_power),
            ends_at_t: true,
        };
        if a == 0.0 {
            panels.push(Panel {
                a: 0.0,
                b: 0.5 * t,
                cluster: Cluster::TowardA(self.origin_power),
                ends_at_t: false,
            });
            panels.push(diag(0.5 * t));
        } else if t > 2.0 * a {
            push_plain(a, 0.5 * t, &mut panels);
            panels.push(diag(0.5 * t));
        } else {
            panels.push(diag(a));
        }
        for p in &panels {
            emit(p, out);
        }
    }

    /// Points covering `[t, nodes[k+1]]`.
    fn right_special_points(&self, t: f64, k: usize, out: &mut Vec<RulePoint>) {
        let b = self.mesh.nodes()[k + 1];
        if t >= b {
            return;
        }
        let mut panels = Vec::new();
        push_plain(t, b, &mut panels);
        if b == 1.0 {
            panels.last_mut().expect("nonempty").cluster = Cluster::TowardB(self.diag_power);
        }
        for p in &panels {
            emit(p, out);
        }
    }

    /// Index `k` with `nodes[k] < t ≤ nodes[k+1]`, for `t ∈ (0, 1)`.
    pub fn locate(&self, t: f64) -> usize {
        self.mesh.nodes().partition_point(|&v| v < t) - 1
    }

    /// `(k_left, k)`: intervals `0..k_left` and `k+1..n` use their base
    /// panels, everything in `[nodes[k_left], nodes[k+1]]` is rebuilt
    /// around `t`.
    pub fn plan(&self, t: f64) -> (usize, usize) {
        let k = self.locate(t);
        let nodes = self.mesh.nodes();
        // When t sits just past a node, the interval before it would end
        // next to the (t−s)^{α−2} singularity; fold it into the t panel.
        if k >= 1 && t - nodes[k] < 0.5 * (nodes[k] - nodes[k - 1]) {
            (k - 1, k)
        } else {
            (k, k)
        }
    }

    /// Points of the panels rebuilt around `t`, split at `t`.
    pub fn special_points(&self, t: f64, k_left: usize, k: usize, left: &mut Vec<RulePoint>, right: &mut Vec<RulePoint>) {
        self.left_special_points(t, k_left, left);
        self.right_special_points(t, k, right);
    }

    /// All points for target `t ∈ (0, 1)`, split into the parts left and
    /// right of `t`.
    pub fn points_for(&self, t: f64) -> (Vec<RulePoint>, Vec<RulePoint>) {
        let (k_left, k) = self.plan(t);
        let mut left = Vec::new();
        let mut right = Vec::new();
        for j in 0..k_left {
            self.interval_points(j, &mut left);
        }
        self.special_points(t, k_left, k, &mut left, &mut right);
        for j in k + 1..self.mesh.n() {
            self.interval_points(j, &mut right);
        }
        (left, right)
    }
}

/// Pushes `[a, b]` as plain panels, split geometrically (ratio 2) while
/// `b/a > 3`, for `a > 0`.
fn push_plain(a: f64, b: f64, out: &mut Vec<Panel>) {
    let mut lo = a;
    if a > 0.0 {
        while b > 3.0 * lo {
            out.push(Panel {
                a: lo,
                b: 2.0 * lo,
                cluster: Cluster::None,
                ends_at_t: false,
            });
            lo *= 2.0;
        }
    }
    out.push(Panel {
        a: lo,
        b,
        cluster: Cluster::None,
        ends_at_t: false,
    });
}

fn emit(p: &Panel, out: &mut Vec<RulePoint>) {
    let gl = GaussLegendre::panel();
    let h = p.b - p.a;
    if h <= 0.0 {
        return;
    }
    for (&x, &w) in gl.nodes.iter().zip(&gl.weights) {
        let (s, weight, from_b) = match p.cluster {
            Cluster::None => (p.a + h * x, w * h, None),
            Cluster::TowardA(m) => {
                let xm1 = x.powf(m - 1.0);
                (p.a + h * xm1 * x, w * h * m * xm1, None)
            }
            Cluster::TowardB(q) => {
                let xq1 = x.powf(q - 1.0);
                let d = h * xq1 * x;
                (p.b - d, w * h * q * xq1, Some(d))
            }
        };
        let t_minus_s = if p.ends_at_t { from_b } else { None };
        let one_minus_s = match from_b {
            Some(d) if p.b == 1.0 => d,
            _ => 1.0 - s,
        };
        out.push(RulePoint {
            s,
            weight,
            t_minus_s,
            one_minus_s,
        });
    }
}

/// `c · s^{−e} · φ`, kept finite when `s^{−e}` alone would overflow.
#[inline]
pub(crate) fn scaled_power(c: f64, s: f64, e: f64, phi: f64) -> f64 {
    if c == 0.0 || phi == 0.0 {
        return 0.0;
    }
    if e == 0.0 {
        return c * phi;
    }
    let direct = c * s.powf(-e) * phi;
    if direct.is_finite() {
        return direct;
    }
    let mag = (c.abs().ln() + phi.abs().ln() - e * s.ln()).exp();
    mag.copysign(c * phi)
}

/// `c · s^{−β_g} φ(s)`, or an error if `φ` returns a non-finite value.
#[inline]
pub(crate) fn source_value<F: Fn(f64) -> f64>(c: f64, s: f64, g_exponent: f64, g_regular: &F) -> Result<f64> {
    let phi = g_regular(s);
    if !phi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "source evaluated to {phi} at s = {s}"
        )));
    }
    Ok(scaled_power(c, s, g_exponent, phi))
}

fn integrate<F, L, R>(
    t: f64,
    layout: &PanelLayout<'_>,
    g_exponent: f64,
    g_regular: &F,
    left_kernel: L,
    right_kernel: R,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    L: Fn(KernelPoint) -> f64,
    R: Fn(KernelPoint) -> f64,
{
    let (left, right) = layout.points_for(t);
    let mut acc = 0.0;
    for (points, kernel) in [(&left, &left_kernel as &dyn Fn(KernelPoint) -> f64), (&right, &right_kernel)] {
        for p in points {
            if p.s <= 0.0 || p.weight == 0.0 {
                continue;
            }
            let k = kernel(p.kernel_point(t));
            if k == 0.0 {
                continue;
            }
            acc += source_value(p.weight * k, p.s, g_exponent, g_regular)?;
        }
    }
    Ok(acc)
}

fn check_t(t: f64, interior: bool) -> Result<()> {
    let ok = if interior {
        t > 0.0 && t < 1.0
    } else {
        (0.0..=1.0).contains(&t)
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "t = {t} outside {}",
            if interior { "(0, 1)" } else { "[0, 1]" }
        )))
    }
}

/// `u(t) = ∫₀¹ G(t,s) g(s) ds` with `g(s) = s^{−g_exponent} g_regular(s)`.
pub fn apply_green<F: Fn(f64) -> f64>(
    t: f64,
    g_exponent: f64,
    g_regular: F,
    alpha: Order,
    mesh: &GradedMesh,
) -> Result<f64> {
    check_t(t, false)?;
    let layout = PanelLayout::new(mesh, alpha, g_exponent)?;
    if t == 0.0 || t == 1.0 {
        return Ok(0.0);
    }
    let k = Kernels::new(alpha);
    integrate(t, &layout, g_exponent, &g_regular, |p| k.green_left(t, p), |p| k.green_right(t, p))
}

/// `u′(t)` for `t ∈ (0, 1)`.
pub fn apply_green_derivative<F: Fn(f64) -> f64>(
    t: f64,
    g_exponent: f64,
    g_regular: F,
    alpha: Order,
    mesh: &GradedMesh,
) -> Result<f64> {
    check_t(t, true)?;
    let layout = PanelLayout::new(mesh, alpha, g_exponent)?;
    let k = Kernels::new(alpha);
    integrate(t, &layout, g_exponent, &g_regular, |p| k.green_dt_left(t, p), |p| k.green_dt_right(t, p))
}

/// `D^{α−1}u(t)` for `t ∈ (0, 1)`.
pub fn apply_dalpha_minus_1<F: Fn(f64) -> f64>(
    t: f64,
    g_exponent: f64,
    g_regular: F,
    alpha: Order,
    mesh: &GradedMesh,
) -> Result<f64> {
    check_t(t, true)?;
    let layout = PanelLayout::new(mesh, alpha, g_exponent)?;
    let k = Kernels::new(alpha);
    integrate(t, &layout, g_exponent, &g_regular, |p| k.dalpha_left(p), |p| k.dalpha_right(p))
}
