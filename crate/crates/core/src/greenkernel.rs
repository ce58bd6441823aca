//! Green's function of `D^α u = 0`, `u(0) = u(1) = 0`:
//!
//! ```text
//!            ⎧ [(t(1−s))^{α−1} − (t−s)^{α−1}] / Γ(α),   0 ≤ s ≤ t ≤ 1,
//! G(t, s) =  ⎨
//!            ⎩ (t(1−s))^{α−1} / Γ(α),                   0 ≤ t ≤ s ≤ 1,
//! ```
//!
//! together with the two companion kernels the quadrature needs: `∂G/∂t`
//! (for `u′`) and the kernel of `D^{α−1}u`.
//!
//! For `s ≪ t` the first branch is a difference of two nearly equal powers.
//! Against a weight like `s^{−1.3}` that cancellation error is not
//! integrable, so that regime is evaluated through `log1p`/`expm1`.

use crate::powercalc::Order;
use crate::specfun::gamma;

/// Powers of arguments at or below this are returned as zero.
pub const UNDERFLOW: f64 = 1e-300;

#[inline]
fn pow_pos(x: f64, p: f64) -> f64 {
    if x <= UNDERFLOW {
        0.0
    } else {
        (p * x.ln()).exp()
    }
}

/// Point of evaluation with the two distances carried separately, so that
/// quadrature maps clustered at `s = t` or `s = 1` keep full relative
/// precision in `t − s` and `1 − s`.
#[derive(Debug, Clone, Copy)]
pub struct KernelPoint {
    pub s: f64,
    /// `t − s`; only meaningful for `s ≤ t`.
    pub t_minus_s: f64,
    pub one_minus_s: f64,
}

impl KernelPoint {
    pub fn new(t: f64, s: f64) -> Self {
        KernelPoint {
            s,
            t_minus_s: t - s,
            one_minus_s: 1.0 - s,
        }
    }
}

/// Precomputed α-dependent constants for the three kernels.
#[derive(Debug, Clone, Copy)]
pub struct Kernels {
    alpha: f64,
    inv_gamma_alpha: f64,
    inv_gamma_alpha_m1: f64,
}

impl Kernels {
    pub fn new(alpha: Order) -> Self {
        let a = alpha.value();
        let ga = gamma(a).expect("alpha in (1, 2] is off the poles");
        let gam1 = gamma(a - 1.0).expect("alpha - 1 in (0, 1] is off the poles");
        Kernels {
            alpha: a,
            inv_gamma_alpha: 1.0 / ga,
            inv_gamma_alpha_m1: 1.0 / gam1,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `G(t, s)`, left branch (`s ≤ t`).
    pub fn green_left(&self, t: f64, k: KernelPoint) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let p = self.alpha - 1.0;
        let s = k.s;
        let v = if s <= 0.5 * t {
            // t^p [(1−s)^p − (1−s/t)^p]
            let lb = (-s / t).ln_1p();
            let la = (-s).ln_1p();
            pow_pos(t, p) * (p * lb).exp() * (p * (la - lb)).exp_m1()
        } else {
            pow_pos(t * k.one_minus_s, p) - pow_pos(k.t_minus_s, p)
        };
        v * self.inv_gamma_alpha
    }

    /// `G(t, s)`, right branch (`t ≤ s`).
    pub fn green_right(&self, t: f64, k: KernelPoint) -> f64 {
        pow_pos(t * k.one_minus_s, self.alpha - 1.0) * self.inv_gamma_alpha
    }

    /// `∂G/∂t`, left branch:
    /// `[t^{α−2}(1−s)^{α−1} − (t−s)^{α−2}] / Γ(α−1)`.
    pub fn green_dt_left(&self, t: f64, k: KernelPoint) -> f64 {
        let a = self.alpha;
        let s = k.s;
        let v = if s <= 0.5 * t {
            // t^{α−2} [ (1−s)^{α−1} − (1−s/t)^{α−2} ], both brackets O(s)
            let x = ((a - 1.0) * (-s).ln_1p()).exp_m1();
            let y = ((a - 2.0) * (-s / t).ln_1p()).exp_m1();
            t.powf(a - 2.0) * (x - y)
        } else {
            t.powf(a - 2.0) * pow_pos(k.one_minus_s, a - 1.0) - k.t_minus_s.powf(a - 2.0)
        };
        v * self.inv_gamma_alpha_m1
    }

    /// `∂G/∂t`, right branch: `t^{α−2}(1−s)^{α−1} / Γ(α−1)`.
    pub fn green_dt_right(&self, t: f64, k: KernelPoint) -> f64 {
        t.powf(self.alpha - 2.0) * pow_pos(k.one_minus_s, self.alpha - 1.0) * self.inv_gamma_alpha_m1
    }

    /// Kernel of `D^{α−1}u` for `τ < t`: `(1−τ)^{α−1} − 1`.
    pub fn dalpha_left(&self, k: KernelPoint) -> f64 {
        if k.s < 0.5 {
            ((self.alpha - 1.0) * (-k.s).ln_1p()).exp_m1()
        } else {
            pow_pos(k.one_minus_s, self.alpha - 1.0) - 1.0
        }
    }

    /// Kernel of `D^{α−1}u` for `τ > t`: `(1−τ)^{α−1}`.
    pub fn dalpha_right(&self, k: KernelPoint) -> f64 {
        pow_pos(k.one_minus_s, self.alpha - 1.0)
    }
}

/// `G(t, s)` for `t, s ∈ [0, 1]`. `s = t` takes the first branch.
pub fn green_eval(t: f64, s: f64, alpha: Order) -> f64 {
    let k = Kernels::new(alpha);
    let p = KernelPoint::new(t, s);
    if s <= t {
        k.green_left(t, p)
    } else {
        k.green_right(t, p)
    }
}
