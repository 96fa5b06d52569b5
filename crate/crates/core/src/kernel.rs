//! Kernel functions on the positive reals.
//!
//! Three families are supported:
//!
//! * Mellin B-splines `B_n(x) = 1/(n-1)! sum_j (-1)^j C(n,j) (n/2 + ln x - j)_+^{n-1}`,
//!   compactly supported on `[e^{-n/2}, e^{n/2}]`.
//! * Mellin–Jackson kernels `d * sinc^{2 beta}(ln x / (2 gamma beta pi))` with
//!   `sinc(y) = sin(pi y)/(pi y)`, truncated to an effective log radius.
//! * The two-sided combination
//!   `(1 - alpha) chi_a(2 u e^{-a-1}) + alpha chi_b(2 u e^{b})`,
//!   which vanishes at `u = 1` and puts mass `alpha` below 1.
//!
//! Kernels are immutable descriptors; evaluation is a pure function.

use std::f64::consts::{LN_2, PI};
use std::fmt;

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate_real, QuadratureOptions};

/// Largest order accepted by [`bspline_eval`]; the truncated-power sum loses
/// digits to cancellation beyond this.
pub const MAX_BSPLINE_ORDER: u32 = 24;

/// Default tail tolerance used to truncate Jackson kernels.
pub const DEFAULT_TRUNC_EPSILON: f64 = 1e-10;

/// Hard cap on the Jackson effective log radius. For `beta = 1` the
/// requested tail tolerance is usually out of reach; the achieved tail bound
/// is then recorded on the kernel instead.
pub const MAX_JACKSON_LOG_RADIUS: f64 = 4096.0;

/// Number of sinc lobes integrated explicitly by [`jackson_normalization`]
/// before the asymptotic tail takes over.
const JACKSON_QUADRATURE_LOBES: usize = 4000;

#[derive(Debug, Clone, PartialEq)]
pub enum KernelKind {
    BSpline {
        order: u32,
    },
    Jackson {
        gamma: f64,
        beta: u32,
        /// Cached `d_{gamma,beta}`.
        normalization: f64,
        effective_log_radius: f64,
        /// Upper bound on `sum_k |chi(e^{-k} u)|` over the truncated nodes.
        tail_bound: f64,
    },
    Combined {
        alpha: f64,
        inner_a: Box<KernelSpec>,
        a: f64,
        inner_b: Box<KernelSpec>,
        b: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    kind: KernelKind,
    support_log: (f64, f64),
}

impl KernelSpec {
    pub fn bspline(order: u32) -> Result<Self> {
        check_order(order)?;
        let half = order as f64 / 2.0;
        Ok(Self {
            kind: KernelKind::BSpline { order },
            support_log: (-half, half),
        })
    }

    pub fn jackson(gamma: f64, beta: u32) -> Result<Self> {
        Self::jackson_with_tolerance(gamma, beta, DEFAULT_TRUNC_EPSILON)
    }

    pub fn jackson_with_tolerance(gamma: f64, beta: u32, trunc_epsilon: f64) -> Result<Self> {
        if !(trunc_epsilon > 0.0 && trunc_epsilon.is_finite()) {
            return Err(domain(format!(
                "truncation tolerance must be positive, got {trunc_epsilon}"
            )));
        }
        let normalization = jackson_normalization(gamma, beta)?;
        let radius = jackson_log_radius(gamma, beta, normalization, trunc_epsilon);
        let tail_bound = jackson_tail_bound(gamma, beta, normalization, radius);
        Ok(Self {
            kind: KernelKind::Jackson {
                gamma,
                beta,
                normalization,
                effective_log_radius: radius,
                tail_bound,
            },
            support_log: (-radius, radius),
        })
    }

    /// The kernel `1/4 B_2(2t e^{-2}) + 3/4 B_2(2t e)` used for the jump
    /// experiments on the example signal.
    pub fn combo_kernel() -> Self {
        let b2 = Self::bspline(2).expect("order 2 is valid");
        build_combined(b2.clone(), 1.0, b2, 1.0, 0.75).expect("B_2 fits the radius 1")
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    /// Interval `[lo, hi]` of `y = ln u` outside which the kernel is exactly 0.
    pub fn support_log(&self) -> (f64, f64) {
        self.support_log
    }

    /// Evaluate `chi(u)`.
    pub fn eval(&self, u: f64) -> Result<f64> {
        if !(u > 0.0) || !u.is_finite() {
            return Err(domain(format!(
                "kernel argument must be positive and finite, got {u}"
            )));
        }
        Ok(self.value_at_log(u.ln()))
    }

    /// Evaluate `chi(e^y)`; exact zero outside [`support_log`](Self::support_log).
    pub fn value_at_log(&self, y: f64) -> f64 {
        let (lo, hi) = self.support_log;
        if !(y >= lo && y <= hi) {
            return 0.0;
        }
        match &self.kind {
            KernelKind::BSpline { order } => bspline_log(*order, y),
            KernelKind::Jackson {
                gamma,
                beta,
                normalization,
                ..
            } => normalization * sinc_power(y, *gamma, *beta),
            KernelKind::Combined {
                alpha,
                inner_a,
                a,
                inner_b,
                b,
            } => {
                let upper = inner_a.value_at_log(y + LN_2 - a - 1.0);
                let lower = inner_b.value_at_log(y + LN_2 + b);
                (1.0 - alpha) * upper + alpha * lower
            }
        }
    }

    /// `chi(1)`.
    pub fn value_at_one(&self) -> f64 {
        self.value_at_log(0.0)
    }

    /// Points in the log domain where the kernel (or one of its derivatives)
    /// is not smooth, including the support ends. Sorted, deduplicated.
    pub fn breakpoints_log(&self) -> Vec<f64> {
        let mut pts = match &self.kind {
            KernelKind::BSpline { order } => {
                let half = *order as f64 / 2.0;
                (0..=*order).map(|j| j as f64 - half).collect()
            }
            KernelKind::Jackson {
                gamma,
                beta,
                effective_log_radius,
                ..
            } => {
                // Zeros of the sinc power: multiples of 2 gamma beta pi.
                let period = 2.0 * gamma * *beta as f64 * PI;
                let n = (effective_log_radius / period).floor() as i64;
                let mut v: Vec<f64> = (-n..=n).map(|j| j as f64 * period).collect();
                v.push(-effective_log_radius);
                v.push(*effective_log_radius);
                v
            }
            KernelKind::Combined {
                inner_a,
                a,
                inner_b,
                b,
                ..
            } => {
                let mut v: Vec<f64> = inner_a
                    .breakpoints_log()
                    .into_iter()
                    .map(|y| y - LN_2 + a + 1.0)
                    .collect();
                v.extend(inner_b.breakpoints_log().into_iter().map(|y| y - LN_2 - b));
                v
            }
        };
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    pub fn is_continuous(&self) -> bool {
        match &self.kind {
            KernelKind::BSpline { order } => *order >= 2,
            KernelKind::Jackson { .. } => true,
            KernelKind::Combined {
                inner_a, inner_b, ..
            } => inner_a.is_continuous() && inner_b.is_continuous(),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        match &self.kind {
            KernelKind::BSpline { .. } | KernelKind::Jackson { .. } => true,
            KernelKind::Combined {
                alpha,
                inner_a,
                inner_b,
                ..
            } => {
                (0.0..=1.0).contains(alpha) && inner_a.is_nonnegative() && inner_b.is_nonnegative()
            }
        }
    }

    /// Tail mass dropped by truncation (zero for compactly supported kernels).
    pub fn truncation_tail(&self) -> f64 {
        match &self.kind {
            KernelKind::BSpline { .. } => 0.0,
            KernelKind::Jackson { tail_bound, .. } => *tail_bound,
            KernelKind::Combined {
                alpha,
                inner_a,
                inner_b,
                ..
            } => {
                (1.0 - alpha).abs() * inner_a.truncation_tail()
                    + alpha.abs() * inner_b.truncation_tail()
            }
        }
    }

    /// For Jackson kernels, the largest `nu` below which `M_nu` is finite.
    pub fn moment_order_limit(&self) -> Option<f64> {
        match &self.kind {
            KernelKind::BSpline { .. } => None,
            KernelKind::Jackson { beta, .. } => Some(2.0 * *beta as f64 - 1.0),
            KernelKind::Combined {
                inner_a, inner_b, ..
            } => match (inner_a.moment_order_limit(), inner_b.moment_order_limit()) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (x, y) => x.or(y),
            },
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            KernelKind::BSpline { order } => write!(f, "bspline({order})"),
            KernelKind::Jackson { gamma, beta, .. } => write!(f, "jackson({gamma},{beta})"),
            KernelKind::Combined {
                alpha,
                inner_a,
                a,
                inner_b,
                b,
            } => write!(f, "combined({alpha};{inner_a},{a};{inner_b},{b})"),
        }
    }
}

fn check_order(order: u32) -> Result<()> {
    if order == 0 {
        return Err(domain("B-spline order must be at least 1"));
    }
    if order > MAX_BSPLINE_ORDER {
        return Err(domain(format!(
            "B-spline order {order} exceeds the supported maximum {MAX_BSPLINE_ORDER}"
        )));
    }
    Ok(())
}

/// Mellin B-spline `B_n(x)`.
pub fn bspline_eval(order: u32, x: f64) -> Result<f64> {
    check_order(order)?;
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain(format!(
            "B-spline argument must be positive and finite, got {x}"
        )));
    }
    Ok(bspline_log(order, x.ln()))
}

/// `B_n(e^y)` via the truncated-power sum. For `n >= 2` the spline is even in
/// `y`, and evaluating at `-|y|` keeps only the terms left of centre, which
/// limits cancellation.
fn bspline_log(order: u32, y: f64) -> f64 {
    let half = order as f64 / 2.0;
    if order == 1 {
        return if (-half..half).contains(&y) { 1.0 } else { 0.0 };
    }
    let y = -y.abs();
    if y <= -half {
        return 0.0;
    }
    let degree = (order - 1) as i32;
    let mut sum = 0.0;
    let mut binom = 1.0;
    for j in 0..=order {
        let arg = half + y - j as f64;
        if arg <= 0.0 {
            break;
        }
        let term = binom * arg.powi(degree);
        if j % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        binom = binom * (order - j) as f64 / (j + 1) as f64;
    }
    let factorial: f64 = (1..order).map(|k| k as f64).product();
    (sum / factorial).max(0.0)
}

/// `sinc^{2 beta}(y / (2 gamma beta pi))` with the normalized sinc.
fn sinc_power(y: f64, gamma: f64, beta: u32) -> f64 {
    let z = y / (2.0 * gamma * beta as f64);
    let s = if z == 0.0 { 1.0 } else { z.sin() / z };
    s.powi(2 * beta as i32)
}

fn check_jackson_params(gamma: f64, beta: u32) -> Result<()> {
    if !(gamma >= 1.0) || !gamma.is_finite() {
        return Err(domain(format!("Jackson gamma must be >= 1, got {gamma}")));
    }
    if beta == 0 {
        return Err(domain("Jackson beta must be a positive integer"));
    }
    if beta > 64 {
        return Err(domain(format!("Jackson beta {beta} is too large")));
    }
    Ok(())
}

/// `d_{gamma,beta} = 1 / int_R sinc^{2 beta}(y / (2 gamma beta pi)) dy`.
///
/// The integrand is integrated lobe by lobe between consecutive zeros up to
/// `JACKSON_QUADRATURE_LOBES` lobes; beyond that `sin^{2 beta}` is replaced by
/// its mean plus the leading oscillatory correction, leaving a relative error
/// of order `(lobes pi)^{-2 beta - 2}`.
pub fn jackson_normalization(gamma: f64, beta: u32) -> Result<f64> {
    check_jackson_params(gamma, beta)?;
    let scale = 2.0 * gamma * beta as f64;
    let two_beta = 2 * beta as i32;
    // int_R sinc^{2b}(y/(scale pi)) dy = 2 scale int_0^inf (sin z / z)^{2b} dz
    let integrand = |z: f64| {
        if z == 0.0 {
            1.0
        } else {
            (z.sin() / z).powi(two_beta)
        }
    };
    let opts = QuadratureOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-14,
        max_intervals: 200,
    };
    let mut comp = crate::sum::CompensatedSum::new();
    for lobe in 0..JACKSON_QUADRATURE_LOBES {
        let a = lobe as f64 * PI;
        let piece = integrate_real(integrand, a, a + PI, opts).map_err(|e| {
            Error::Numerical(format!(
                "Jackson normalization (gamma={gamma}, beta={beta}) failed on lobe {lobe}: {e}"
            ))
        })?;
        comp.add(piece);
    }
    let mut half_line = comp.value();

    // sin^{2b} z = mean + sum_{j=1}^{b} c_j cos(2 j z)
    let b = beta as usize;
    let z0 = JACKSON_QUADRATURE_LOBES as f64 * PI;
    let p = 2.0 * beta as f64;
    let pow4 = 4f64.powi(beta as i32);
    let mean = binomial(2 * b, b) / pow4;
    let mut tail = mean * z0.powf(1.0 - p) / (p - 1.0);
    for j in 1..=b {
        let c_j = 2.0 * if j % 2 == 0 { 1.0 } else { -1.0 } * binomial(2 * b, b - j) / pow4;
        // int_{z0}^inf cos(2 j z) z^{-p} dz ~ p / (4 j^2) z0^{-p-1} since sin(2 j z0) = 0
        tail += c_j * p / (4.0 * (j * j) as f64) * z0.powf(-p - 1.0);
    }
    half_line += tail;

    let total = 2.0 * scale * half_line;
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Numerical(format!(
            "Jackson normalization integral is not positive: {total}"
        )));
    }
    Ok(1.0 / total)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Bound on `sum_{|y-k| > R} |chi|` from the envelope `|sinc(z)| <= 1/(pi |z|)`.
fn jackson_tail_bound(gamma: f64, beta: u32, d: f64, radius: f64) -> f64 {
    let p = 2.0 * beta as f64;
    let scale = 2.0 * gamma * beta as f64;
    let r = (radius - 1.0).max(1e-300);
    2.0 * d * scale.powf(p) * r.powf(1.0 - p) / (p - 1.0)
}

fn jackson_log_radius(gamma: f64, beta: u32, d: f64, eps: f64) -> f64 {
    let p = 2.0 * beta as f64;
    let scale = 2.0 * gamma * beta as f64;
    // Solve jackson_tail_bound(R) = eps in the log domain.
    let log_r = ((2.0 * d).ln() + p * scale.ln() - (p - 1.0).ln() - eps.ln()) / (p - 1.0);
    let r = 1.0 + log_r.exp();
    let first_zero = scale * PI;
    r.max(first_zero).min(MAX_JACKSON_LOG_RADIUS).ceil()
}

/// Build `(1 - alpha) chi_a(2 u e^{-a-1}) + alpha chi_b(2 u e^{b})`.
///
/// `inner_a` must vanish outside `[e^{-a}, e^{a}]` and `inner_b` outside
/// `[e^{-b}, e^{b}]`. The shifted copies then sit on either side of `u = 1`;
/// that gap is additionally scanned on a grid and must evaluate to zero.
pub fn build_combined(
    inner_a: KernelSpec,
    a: f64,
    inner_b: KernelSpec,
    b: f64,
    alpha: f64,
) -> Result<KernelSpec> {
    if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
        return Err(Error::Construction(format!(
            "support radii must be positive and finite, got a={a}, b={b}"
        )));
    }
    if !alpha.is_finite() {
        return Err(Error::Construction(format!(
            "alpha must be finite, got {alpha}"
        )));
    }
    const SLACK: f64 = 1e-12;
    for (name, inner, r) in [("inner_a", &inner_a, a), ("inner_b", &inner_b, b)] {
        let (lo, hi) = inner.support_log();
        if lo < -r - SLACK || hi > r + SLACK {
            return Err(Error::Construction(format!(
                "{name} = {inner} has log-support [{lo}, {hi}] exceeding the declared radius {r}"
            )));
        }
    }
    let (alo, ahi) = inner_a.support_log();
    let (blo, bhi) = inner_b.support_log();
    let upper = (alo - LN_2 + a + 1.0, ahi - LN_2 + a + 1.0);
    let lower = (blo - LN_2 - b, bhi - LN_2 - b);
    for (name, (lo, hi)) in [("upper", upper), ("lower", lower)] {
        if lo < 0.0 && hi > 0.0 {
            return Err(Error::Construction(format!(
                "{name} shifted support ({lo}, {hi}) covers u = 1"
            )));
        }
    }
    let support_log = (upper.0.min(lower.0), upper.1.max(lower.1));
    let kernel = KernelSpec {
        kind: KernelKind::Combined {
            alpha,
            inner_a: Box::new(inner_a),
            a,
            inner_b: Box::new(inner_b),
            b,
        },
        support_log,
    };

    // Grid scan of the gap between the two shifted supports.
    let (gap_lo, gap_hi) = (lower.1, upper.0);
    const SCAN: usize = 256;
    for i in 0..=SCAN {
        let y = gap_lo + (gap_hi - gap_lo) * i as f64 / SCAN as f64;
        let v = kernel.value_at_log(y);
        if v != 0.0 {
            return Err(Error::Construction(format!(
                "combined kernel is nonzero ({v}) at ln u = {y} between the shifted supports"
            )));
        }
    }
    Ok(kernel)
}
