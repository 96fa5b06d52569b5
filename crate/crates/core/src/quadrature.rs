//! Globally adaptive Gauss–Kronrod (7/15) quadrature for complex integrands.
//!
//! Used for every Mellin-type integral in the crate. Callers are expected to
//! hand in panels whose interiors are smooth (kernel breakpoints on panel
//! edges); the adaptive bisection then only has to resolve oscillation.

use num_complex::Complex64;

use crate::error::{Error, Result};

// Kronrod abscissae on [0, 1]; odd indices are the embedded Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Stopping rule for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 0.0,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureResult {
    pub value: Complex64,
    pub error_estimate: f64,
    pub intervals: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

fn kronrod<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).norm();
    (value, error)
}

/// Integrate `f` over `[a, b]`.
pub fn integrate<F>(f: F, a: f64, b: f64, opts: QuadratureOptions) -> Result<QuadratureResult>
where
    F: Fn(f64) -> Complex64,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Numerical(format!(
            "quadrature bounds must be finite, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(QuadratureResult {
            value: Complex64::new(0.0, 0.0),
            error_estimate: 0.0,
            intervals: 0,
        });
    }
    let (first_value, first_error) = kronrod(&f, a, b);
    let mut segments = vec![Segment {
        a,
        b,
        value: first_value,
        error: first_error,
    }];

    loop {
        let total: Complex64 = segments.iter().map(|s| s.value).sum();
        let total_err: f64 = segments.iter().map(|s| s.error).sum();
        let tol = opts.abs_tol.max(opts.rel_tol * total.norm());
        if !total.re.is_finite() || !total.im.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        if total_err <= tol {
            return Ok(QuadratureResult {
                value: total,
                error_estimate: total_err,
                intervals: segments.len(),
            });
        }
        if segments.len() >= opts.max_intervals {
            return Err(Error::Numerical(format!(
                "quadrature on [{a}, {b}] did not converge: error estimate {total_err:.3e} \
                 > tolerance {tol:.3e} after {} intervals",
                segments.len()
            )));
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .expect("at least one segment");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            return Err(Error::Numerical(format!(
                "quadrature interval collapsed near {mid} (error estimate {total_err:.3e})"
            )));
        }
        let (lv, le) = kronrod(&f, seg.a, mid);
        let (rv, re) = kronrod(&f, mid, seg.b);
        segments.push(Segment {
            a: seg.a,
            b: mid,
            value: lv,
            error: le,
        });
        segments.push(Segment {
            a: mid,
            b: seg.b,
            value: rv,
            error: re,
        });
    }
}

/// Integrate over consecutive panels `[edges[i], edges[i+1]]`, sharing the
/// absolute tolerance equally between them.
pub fn integrate_panels<F>(f: F, edges: &[f64], opts: QuadratureOptions) -> Result<QuadratureResult>
where
    F: Fn(f64) -> Complex64,
{
    let panels = edges.len().saturating_sub(1).max(1);
    let per_panel = QuadratureOptions {
        abs_tol: opts.abs_tol / panels as f64,
        ..opts
    };
    let mut value = Complex64::new(0.0, 0.0);
    let mut error_estimate = 0.0;
    let mut intervals = 0;
    for pair in edges.windows(2) {
        if pair[1] <= pair[0] {
            continue;
        }
        let r = integrate(&f, pair[0], pair[1], per_panel)?;
        value += r.value;
        error_estimate += r.error_estimate;
        intervals += r.intervals;
    }
    Ok(QuadratureResult {
        value,
        error_estimate,
        intervals,
    })
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F>(f: F, a: f64, b: f64, opts: QuadratureOptions) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate(|x| Complex64::new(f(x), 0.0), a, b, opts).map(|r| r.value.re)
}
