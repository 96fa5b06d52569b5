//! The exponential sampling series and its behavior at jump points.

use std::ops::RangeInclusive;

use rayon::prelude::*;

use crate::analysis::{psi_minus_at_log, AlphaEstimate, KernelReport, CONSTANCY_TOL};
use crate::error::{domain, Error, Result};
use crate::kernel::{KernelSpec, DEFAULT_TRUNC_EPSILON};
use crate::signal::{JumpPoint, PiecewiseSignal};
use crate::sum::CompensatedSum;

pub const DEFAULT_ALIGN_TOL: f64 = 1e-9;

/// Tolerance for the Cauchy check on the tail of a witness sequence.
pub const CAUCHY_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    pub w: f64,
    pub trunc_epsilon: f64,
    pub align_tol: f64,
}

impl SamplingConfig {
    pub fn new(w: f64) -> Result<Self> {
        check_w(w)?;
        Ok(Self {
            w,
            trunc_epsilon: DEFAULT_TRUNC_EPSILON,
            align_tol: DEFAULT_ALIGN_TOL,
        })
    }

    pub fn with_align_tol(mut self, align_tol: f64) -> Result<Self> {
        if !(align_tol >= 0.0) {
            return Err(domain(format!(
                "align_tol must be nonnegative, got {align_tol}"
            )));
        }
        self.align_tol = align_tol;
        Ok(self)
    }

    pub fn with_trunc_epsilon(mut self, trunc_epsilon: f64) -> Result<Self> {
        if !(trunc_epsilon > 0.0) {
            return Err(domain(format!(
                "trunc_epsilon must be positive, got {trunc_epsilon}"
            )));
        }
        self.trunc_epsilon = trunc_epsilon;
        Ok(self)
    }
}

fn check_w(w: f64) -> Result<()> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(domain(format!("w must be positive and finite, got {w}")));
    }
    Ok(())
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(domain(format!("t must be positive and finite, got {t}")));
    }
    Ok(())
}

/// The sample node `e^{k/w}`. Every caller goes through here so that the
/// plain and perturbed series see identical nodes.
#[inline]
pub fn node(k: i64, w: f64) -> f64 {
    (k as f64 / w).exp()
}

/// The `k` with `w ln t - k` inside the kernel's (effective) support.
pub fn node_window(kernel: &KernelSpec, w: f64, t: f64) -> Result<RangeInclusive<i64>> {
    check_w(w)?;
    check_t(t)?;
    let x = w * t.ln();
    let (lo, hi) = kernel.support_log();
    let k0 = (x - hi).ceil();
    let k1 = (x - lo).floor();
    if !(k0.abs() < 9e15 && k1.abs() < 9e15) {
        return Err(domain(format!(
            "node window for w={w}, t={t} is out of range"
        )));
    }
    if k0 / w < f64::MIN_POSITIVE.ln() || k1 / w > f64::MAX.ln() {
        return Err(domain(format!(
            "nodes e^(k/w) for k in {k0}..={k1}, w={w} leave the f64 range; use a larger w"
        )));
    }
    Ok(k0 as i64..=k1 as i64)
}

/// `sum_k chi(e^{-k} t^w) sample(k, node)` over the node window, in
/// increasing `k` with compensated summation. Zero weights skip the sample.
pub fn evaluate_series_with<F>(kernel: &KernelSpec, w: f64, t: f64, mut sample: F) -> Result<f64>
where
    F: FnMut(i64, f64, f64) -> Result<f64>,
{
    let range = node_window(kernel, w, t)?;
    let x = w * t.ln();
    let mut acc = CompensatedSum::new();
    for k in range {
        let weight = kernel.value_at_log(x - k as f64);
        if weight == 0.0 {
            continue;
        }
        let v = sample(k, node(k, w), weight).map_err(|e| Error::Node {
            k,
            source: Box::new(e),
        })?;
        acc.add(weight * v);
    }
    Ok(acc.value())
}

/// `(S_w f)(t)`.
pub fn evaluate_series(kernel: &KernelSpec, f: &PiecewiseSignal, w: f64, t: f64) -> Result<f64> {
    evaluate_series_with(kernel, w, t, |_, x, _| f.eval(x))
}

/// Evaluate many `(w, t)` pairs in parallel; output order matches input.
pub fn batch_evaluate(
    kernel: &KernelSpec,
    f: &PiecewiseSignal,
    pairs: &[(f64, f64)],
) -> Result<Vec<f64>> {
    pairs
        .par_iter()
        .map(|&(w, t)| evaluate_series(kernel, f, w, t))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alignment {
    Aligned(i64),
    NonAligned,
}

impl Alignment {
    pub fn label(&self) -> &'static str {
        match self {
            Alignment::Aligned(_) => "aligned",
            Alignment::NonAligned => "non-aligned",
        }
    }
}

/// `Aligned(m)` when `|w ln t - m| <= align_tol` for the nearest integer `m`.
/// `t = 1` is always aligned.
pub fn classify_alignment(w: f64, t: f64, align_tol: f64) -> Result<Alignment> {
    check_w(w)?;
    check_t(t)?;
    let x = w * t.ln();
    let m = x.round();
    if (x - m).abs() <= align_tol {
        Ok(Alignment::Aligned(m as i64))
    } else {
        Ok(Alignment::NonAligned)
    }
}

/// Alignment in the strict sense: `t` is itself a sample node.
fn exact_alignment(w: f64, t: f64) -> Alignment {
    let m = (w * t.ln()).round() as i64;
    if node(m, w) == t {
        Alignment::Aligned(m)
    } else {
        Alignment::NonAligned
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub alignment: Alignment,
    pub series_h: f64,
    pub psi_minus_val: f64,
    pub reconstructed: f64,
    pub direct: f64,
    pub residual: f64,
}

/// Both sides of
/// `S_w f(t) = S_w h_t(t) + f(t-0) + psi^-(t^w)[f(t+0) - f(t-0)] + chi(1)[f(t) - f(t-0)]`,
/// the last term only when `t` is a node. Each side is computed on its own.
pub fn representation_decomposition(
    kernel: &KernelSpec,
    f: &PiecewiseSignal,
    w: f64,
    t: f64,
) -> Result<Decomposition> {
    let direct = evaluate_series(kernel, f, w, t)?;
    let h = f.build_h(t)?;
    let series_h = evaluate_series(kernel, &h, w, t)?;
    let jump = f.jump_at(t)?;
    let alignment = exact_alignment(w, t);
    let (psi_minus_val, node_term) = match alignment {
        Alignment::Aligned(m) => (
            psi_minus_at_log(kernel, m as f64),
            kernel.value_at_one() * (jump.value_at - jump.left_limit),
        ),
        Alignment::NonAligned => (psi_minus_at_log(kernel, w * t.ln()), 0.0),
    };
    let reconstructed = series_h + jump.left_limit + psi_minus_val * jump.jump() + node_term;
    Ok(Decomposition {
        alignment,
        series_h,
        psi_minus_val,
        reconstructed,
        direct,
        residual: (direct - reconstructed).abs(),
    })
}

/// The kernel constants that determine limits at a jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpConstants {
    pub alpha: AlphaEstimate,
    /// `psi^-(1)`, the weight of `f(t+0)` along aligned sequences.
    pub psi_minus_at_one: f64,
    pub chi_at_one: f64,
}

impl JumpConstants {
    pub fn from_kernel(kernel: &KernelSpec) -> Self {
        let (_, alpha) = crate::analysis::scan_psi_minus(kernel, 1000, CONSTANCY_TOL);
        Self {
            alpha,
            psi_minus_at_one: psi_minus_at_log(kernel, 0.0),
            chi_at_one: kernel.value_at_one(),
        }
    }
}

impl From<&KernelReport> for JumpConstants {
    fn from(report: &KernelReport) -> Self {
        Self {
            alpha: report.alpha_estimate,
            psi_minus_at_one: report.psi_minus_at_one,
            chi_at_one: report.chi_at_one,
        }
    }
}

/// Limit of `S_w f(t)` along `w` with the given alignment case.
///
/// Non-aligned: `alpha f(t+0) + (1 - alpha) f(t-0)`, which needs a constant
/// `psi^-`. Aligned: `a f(t+0) + (1 - a - chi(1)) f(t-0) + chi(1) f(t)` with
/// `a = psi^-(1)`. A removable jump with limit `l` gives `l` (non-aligned)
/// or `l + chi(1)(f(t) - l)` (aligned) for every kernel.
pub fn predict_jump_limit(
    constants: &JumpConstants,
    jump: &JumpPoint,
    case: Alignment,
) -> Result<f64> {
    let (l, r) = (jump.left_limit, jump.right_limit);
    match case {
        Alignment::Aligned(_) => {
            let a = constants.psi_minus_at_one;
            let c = constants.chi_at_one;
            if jump.is_removable() {
                return Ok(l + c * (jump.value_at - l));
            }
            Ok(a * r + (1.0 - a - c) * l + c * jump.value_at)
        }
        Alignment::NonAligned => {
            if jump.is_removable() {
                return Ok(l);
            }
            match constants.alpha {
                AlphaEstimate::Constant(alpha) => Ok(alpha * r + (1.0 - alpha) * l),
                AlphaEstimate::NonConstant { min, max } => Err(Error::NoLimit(format!(
                    "psi^- is not constant (range [{min:.6}, {max:.6}]), so S_w f({}) has no limit \
                     along non-aligned w",
                    jump.location
                ))),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpMeasurement {
    pub w: f64,
    pub alignment: Alignment,
    pub value: f64,
    /// `None` when no limit exists along this case.
    pub predicted: Option<f64>,
}

impl JumpMeasurement {
    pub fn abs_error(&self) -> Option<f64> {
        self.predicted.map(|p| (self.value - p).abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpAnalysis {
    pub t: f64,
    pub jump: JumpPoint,
    pub alpha: Option<f64>,
    pub chi_at_one: f64,
    pub predicted_limit_nonaligned: Option<f64>,
    pub predicted_limit_aligned: f64,
    pub measured: Vec<JumpMeasurement>,
}

/// Evaluate `S_w f(t)` for each `w` and attach the predicted limit for the
/// alignment case of that `w`.
pub fn analyze_jump(
    kernel: &KernelSpec,
    constants: &JumpConstants,
    f: &PiecewiseSignal,
    t: f64,
    ws: &[f64],
    align_tol: f64,
) -> Result<JumpAnalysis> {
    let jump = f.jump_at(t)?;
    let predicted_limit_nonaligned =
        match predict_jump_limit(constants, &jump, Alignment::NonAligned) {
            Ok(v) => Some(v),
            Err(Error::NoLimit(_)) => None,
            Err(e) => return Err(e),
        };
    let predicted_limit_aligned = predict_jump_limit(constants, &jump, Alignment::Aligned(0))?;
    let pairs: Vec<(f64, f64)> = ws.iter().map(|&w| (w, t)).collect();
    let values = batch_evaluate(kernel, f, &pairs)?;
    let measured = ws
        .iter()
        .zip(values)
        .map(|(&w, value)| {
            let alignment = classify_alignment(w, t, align_tol)?;
            let predicted = match alignment {
                Alignment::Aligned(_) => Some(predicted_limit_aligned),
                Alignment::NonAligned => predicted_limit_nonaligned,
            };
            Ok(JumpMeasurement {
                w,
                alignment,
                value,
                predicted,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(JumpAnalysis {
        t,
        jump,
        alpha: constants.alpha.value(),
        chi_at_one: constants.chi_at_one,
        predicted_limit_nonaligned,
        predicted_limit_aligned,
        measured,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceWitness {
    pub t: f64,
    /// `(m, w_m, S_{w_m} f(t))` with `w_m = m / |ln t|`.
    pub aligned: Vec<(i64, f64, f64)>,
    /// `(m, w_m, S_{w_m} f(t))` with `w_m = (m + 1/2) / |ln t|`.
    pub offset: Vec<(i64, f64, f64)>,
    pub aligned_sequence_limit: f64,
    pub offset_sequence_limit: f64,
    pub gap: f64,
    /// Gap implied by the kernel constants: the two predicted limits apart.
    pub expected_gap: f64,
    /// Both tails settle within [`CAUCHY_TOL`] over the last three indices.
    pub cauchy_ok: bool,
}

/// Evaluate `S_w f(t)` along `w_m = m/|ln t|` (where `t^w` lands on
/// `e^{±m}`) and along `w_m = (m + 1/2)/|ln t|` (half-way through the
/// fundamental interval), `m = 1..=m_max`.
pub fn divergence_witness(
    kernel: &KernelSpec,
    f: &PiecewiseSignal,
    t: f64,
    m_max: i64,
) -> Result<DivergenceWitness> {
    check_t(t)?;
    if t == 1.0 {
        return Err(domain(
            "t = 1 is aligned for every w; no divergence witness exists there",
        ));
    }
    if m_max < 3 {
        return Err(domain(format!("m_max must be at least 3, got {m_max}")));
    }
    let lt = t.ln().abs();
    let jump = f.jump_at(t)?;
    let ms: Vec<i64> = (1..=m_max).collect();
    let sign = if t > 1.0 { 1 } else { -1 };
    let run = |shift: f64| -> Result<Vec<(i64, f64, f64)>> {
        ms.par_iter()
            .map(|&m| {
                let w = (m as f64 + shift) / lt;
                // On the aligned sequence node k = ±m is t itself; sample f
                // at t so rounding of exp(k/w) cannot move it across the jump.
                let on_t = if shift == 0.0 { Some(sign * m) } else { None };
                let value = evaluate_series_with(kernel, w, t, |k, x, _| {
                    f.eval(if Some(k) == on_t { t } else { x })
                })?;
                Ok((m, w, value))
            })
            .collect()
    };
    let aligned = run(0.0)?;
    let offset = run(0.5)?;
    let settled = |seq: &[(i64, f64, f64)]| {
        let tail = &seq[seq.len() - 3..];
        let (lo, hi) = tail
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.2), hi.max(p.2))
            });
        hi - lo <= CAUCHY_TOL
    };
    let cauchy_ok = settled(&aligned) && settled(&offset);
    let aligned_sequence_limit = aligned.last().expect("m_max >= 3").2;
    let offset_sequence_limit = offset.last().expect("m_max >= 3").2;

    // Predicted limits from psi^- at the two phases. x = w ln t is an
    // integer (phase 0) or half-integer (phase 1/2) for either sign of ln t.
    let j = jump.jump();
    let aligned_pred = jump.left_limit
        + psi_minus_at_log(kernel, 0.0) * j
        + kernel.value_at_one() * (jump.value_at - jump.left_limit);
    let offset_pred = jump.left_limit + psi_minus_at_log(kernel, 0.5) * j;
    Ok(DivergenceWitness {
        t,
        aligned,
        offset,
        aligned_sequence_limit,
        offset_sequence_limit,
        gap: (aligned_sequence_limit - offset_sequence_limit).abs(),
        expected_gap: (aligned_pred - offset_pred).abs(),
        cauchy_ok,
    })
}
