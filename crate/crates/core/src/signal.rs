//! Bounded piecewise signals on the positive half-line.
//!
//! A signal is a sorted list of breakpoints `t_1 < ... < t_m` and `m + 1`
//! closed-form pieces. Piece `i` is attached to `[t_i, t_{i+1})`, so the value
//! at a breakpoint is the right-hand piece's value. Isolated point values can
//! override this (the auxiliary signal `h_t` needs `h_t(t) = 0`).

use std::fmt;

use crate::error::{domain, Error, Result};
use crate::expr::Expr;

#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    source: String,
    expr: Expr,
    derivative: Expr,
}

impl Piece {
    pub fn parse(source: &str) -> Result<Self> {
        let expr = Expr::parse(source)?;
        Ok(Self::from_expr(source.trim().to_string(), expr))
    }

    fn from_expr(source: String, expr: Expr) -> Self {
        let derivative = expr.derivative();
        Self {
            source,
            expr,
            derivative,
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }
}

/// A point `t` with its one-sided limits and value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpPoint {
    pub location: f64,
    pub left_limit: f64,
    pub right_limit: f64,
    pub value_at: f64,
}

impl JumpPoint {
    pub fn is_removable(&self) -> bool {
        self.left_limit == self.right_limit
    }

    /// `f(t+0) - f(t-0)`.
    pub fn jump(&self) -> f64 {
        self.right_limit - self.left_limit
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseSignal {
    breakpoints: Vec<f64>,
    pieces: Vec<Piece>,
    point_values: Vec<(f64, f64)>,
    window: (f64, f64),
}

impl PiecewiseSignal {
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<Piece>, window: (f64, f64)) -> Result<Self> {
        if pieces.len() != breakpoints.len() + 1 {
            return Err(Error::Signal(format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                pieces.len()
            )));
        }
        if let Some(&b) = breakpoints.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(Error::Signal(format!(
                "breakpoint {b} is not a positive finite number"
            )));
        }
        if breakpoints.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::Signal(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        let (lo, hi) = window;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::Signal(format!(
                "window [{lo}, {hi}] must satisfy 0 < lo < hi < inf"
            )));
        }
        let signal = Self {
            breakpoints,
            pieces,
            point_values: Vec::new(),
            window,
        };
        signal.check_bounded()?;
        Ok(signal)
    }

    pub fn from_strings(breakpoints: &[f64], pieces: &[&str], window: (f64, f64)) -> Result<Self> {
        let pieces = pieces
            .iter()
            .map(|s| Piece::parse(s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(breakpoints.to_vec(), pieces, window)
    }

    /// `11/(2t^2+1)` below 3/2, 3 on `[3/2, 7/2)`, 2 on `[7/2, 11/2)`,
    /// `12/(1+2t)` from 11/2 on.
    pub fn worked_example() -> Self {
        Self::from_strings(
            &[1.5, 3.5, 5.5],
            &["11/(2*t^2+1)", "3", "2", "12/(1+2*t)"],
            (0.5, 8.0),
        )
        .expect("example signal is valid")
    }

    pub fn constant(c: f64, window: (f64, f64)) -> Result<Self> {
        Self::new(
            vec![],
            vec![Piece::from_expr(format!("{c}"), Expr::Const(c))],
            window,
        )
    }

    /// 0 below `at`, 1 from `at` on.
    pub fn unit_step(at: f64, window: (f64, f64)) -> Result<Self> {
        Self::from_strings(&[at], &["0", "1"], window)
    }

    /// Override the value at the single point `t`.
    pub fn with_point_value(mut self, t: f64, value: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite() && value.is_finite()) {
            return Err(Error::Signal(format!(
                "invalid point value f({t}) = {value}"
            )));
        }
        self.point_values.retain(|p| p.0 != t);
        self.point_values.push((t, value));
        self.point_values.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(self)
    }

    fn check_bounded(&self) -> Result<()> {
        for &b in &self.breakpoints {
            let (l, r) = self.one_sided_limits(b)?;
            if !(l.is_finite() && r.is_finite()) {
                return Err(Error::Signal(format!(
                    "one-sided limits at {b} are not finite: ({l}, {r})"
                )));
            }
        }
        let (lo, hi) = (self.window.0.ln(), self.window.1.ln());
        for i in 0..=256 {
            let t = (lo + (hi - lo) * i as f64 / 256.0).exp();
            self.eval(t)?;
        }
        Ok(())
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn point_values(&self) -> &[(f64, f64)] {
        &self.point_values
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn with_window(mut self, window: (f64, f64)) -> Result<Self> {
        let (lo, hi) = window;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::Signal(format!(
                "window [{lo}, {hi}] must satisfy 0 < lo < hi < inf"
            )));
        }
        self.window = window;
        Ok(self)
    }

    /// Index of the piece that owns `t` (left-closed, right-open pieces).
    pub fn piece_index(&self, t: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= t)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(domain(format!(
                "signal argument must be positive and finite, got {t}"
            )));
        }
        if let Ok(i) = self.point_values.binary_search_by(|p| p.0.total_cmp(&t)) {
            return Ok(self.point_values[i].1);
        }
        let v = self.pieces[self.piece_index(t)].expr.eval(t);
        if !v.is_finite() {
            return Err(Error::Signal(format!(
                "signal is not finite at t = {t}: {v}"
            )));
        }
        Ok(v)
    }

    /// `(f(t-0), f(t+0))`, evaluating the adjacent pieces at `t`.
    pub fn one_sided_limits(&self, t: f64) -> Result<(f64, f64)> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(domain(format!(
                "signal argument must be positive and finite, got {t}"
            )));
        }
        let left = self.breakpoints.partition_point(|&b| b < t);
        let right = self.piece_index(t);
        Ok((
            self.pieces[left].expr.eval(t),
            self.pieces[right].expr.eval(t),
        ))
    }

    pub fn jump_at(&self, t: f64) -> Result<JumpPoint> {
        let (left_limit, right_limit) = self.one_sided_limits(t)?;
        Ok(JumpPoint {
            location: t,
            left_limit,
            right_limit,
            value_at: self.eval(t)?,
        })
    }

    /// Breakpoints where the one-sided limits differ.
    pub fn jumps(&self) -> Vec<JumpPoint> {
        self.breakpoints
            .iter()
            .filter_map(|&b| self.jump_at(b).ok())
            .filter(|j| !j.is_removable())
            .collect()
    }

    /// No jumps and no isolated point values that differ from the pieces.
    pub fn is_continuous(&self) -> bool {
        self.jumps().is_empty()
            && self
                .point_values
                .iter()
                .all(|&(t, v)| self.pieces[self.piece_index(t)].expr.eval(t) == v)
    }

    /// Derivative of the piece owning `t`.
    pub fn derivative_at(&self, t: f64) -> f64 {
        self.pieces[self.piece_index(t)].derivative.eval(t)
    }

    /// The auxiliary signal `h_t`: `f - f(t-0)` left of `t`, `f - f(t+0)`
    /// right of `t`, and exactly 0 at `t`.
    pub fn build_h(&self, t: f64) -> Result<PiecewiseSignal> {
        let (left, right) = self.one_sided_limits(t)?;
        let mut breakpoints = self.breakpoints.clone();
        let split = breakpoints.partition_point(|&b| b < t);
        let has_t = breakpoints.get(split) == Some(&t);
        if !has_t {
            breakpoints.insert(split, t);
        }
        let shifted = |piece: &Piece, c: f64| {
            let expr = Expr::Sub(Box::new(piece.expr.clone()), Box::new(Expr::Const(c)));
            Piece::from_expr(expr.to_string(), expr)
        };
        let mut pieces = Vec::with_capacity(breakpoints.len() + 1);
        // Pieces 0..=split of f lie (at least partly) left of t; from split on
        // (or split+1 when t was inserted) they lie right of t.
        for piece in &self.pieces[..=split] {
            pieces.push(shifted(piece, left));
        }
        let right_start = if has_t { split + 1 } else { split };
        for piece in &self.pieces[right_start..] {
            pieces.push(shifted(piece, right));
        }
        let mut point_values: Vec<(f64, f64)> = self
            .point_values
            .iter()
            .filter(|p| p.0 != t)
            .map(|&(x, v)| (x, if x < t { v - left } else { v - right }))
            .collect();
        point_values.push((t, 0.0));
        point_values.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(PiecewiseSignal {
            breakpoints,
            pieces,
            point_values,
            window: self.window,
        })
    }

    /// Sample points on `window`: a log-uniform grid plus every breakpoint
    /// inside it. Returns `(ln t, value)` sorted by position; at breakpoints
    /// both one-sided limits are included.
    fn log_samples(
        &self,
        window: (f64, f64),
        grid: usize,
        f: impl Fn(&Self, f64) -> f64,
    ) -> Vec<(f64, f64)> {
        let (lo, hi) = (window.0.ln(), window.1.ln());
        let n = grid.max(2);
        let mut out: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                (x, f(self, x.exp()))
            })
            .collect();
        for &b in &self.breakpoints {
            if b > window.0 && b < window.1 {
                let left = self.breakpoints.partition_point(|&c| c < b);
                let right = self.piece_index(b);
                let x = b.ln();
                out.push((x, self.pieces[left].expr.eval(b)));
                out.push((x, self.pieces[right].expr.eval(b)));
            }
        }
        for &(t, v) in &self.point_values {
            if t >= window.0 && t <= window.1 {
                out.push((t.ln(), v));
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    /// Grid estimate of `sup |f|` on `window`.
    pub fn sup_norm(&self, window: (f64, f64), grid: usize) -> Result<f64> {
        check_window(window)?;
        let samples = self.log_samples(window, grid, |s, t| s.eval(t).unwrap_or(f64::NAN));
        finite_max(samples.iter().map(|p| p.1.abs()), "sup norm")
    }

    /// Grid estimate of `sup |f'|` on `window`, piece by piece (jumps are
    /// not differentiated across).
    pub fn derivative_sup(&self, window: (f64, f64), grid: usize) -> Result<f64> {
        check_window(window)?;
        let mut vals: Vec<f64> = self
            .log_samples(window, grid, |s, t| s.derivative_at(t))
            .into_iter()
            .map(|p| p.1.abs())
            .collect();
        for (i, &b) in self.breakpoints.iter().enumerate() {
            if b > window.0 && b < window.1 {
                vals.push(self.pieces[i].derivative.eval(b).abs());
            }
        }
        finite_max(vals.into_iter(), "derivative sup")
    }

    /// Logarithmic modulus of continuity on the signal's own window.
    pub fn log_modulus(&self, delta: f64, grid: usize) -> Result<f64> {
        self.log_modulus_on(delta, self.window, grid)
    }

    /// `omega(f, delta) = sup { |f(p) - f(q)| : |ln p - ln q| <= delta }`
    /// restricted to `window`, via a sliding max/min over a log grid plus the
    /// exact pairs `(p, p e^delta)` at every grid point.
    pub fn log_modulus_on(&self, delta: f64, window: (f64, f64), grid: usize) -> Result<f64> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(domain(format!("delta must be positive, got {delta}")));
        }
        check_window(window)?;
        let samples = self.log_samples(window, grid, |s, t| s.eval(t).unwrap_or(f64::NAN));
        if samples.iter().any(|p| !p.1.is_finite()) {
            return Err(Error::Signal("signal is not finite on the window".into()));
        }
        let mut best = sliding_range(&samples, delta);
        let hi = window.1.ln();
        for &(x, v) in &samples {
            if x + delta <= hi {
                let w = self.eval((x + delta).exp())?;
                best = best.max((w - v).abs());
            }
        }
        Ok(best)
    }
}

fn check_window(window: (f64, f64)) -> Result<()> {
    if !(window.0 > 0.0 && window.1 > window.0 && window.1.is_finite()) {
        return Err(domain(format!(
            "window [{}, {}] must satisfy 0 < lo < hi < inf",
            window.0, window.1
        )));
    }
    Ok(())
}

fn finite_max(vals: impl Iterator<Item = f64>, what: &str) -> Result<f64> {
    let mut best = 0.0f64;
    for v in vals {
        if !v.is_finite() {
            return Err(Error::Signal(format!(
                "{what}: signal is not finite on the window"
            )));
        }
        best = best.max(v);
    }
    Ok(best)
}

/// Largest `max - min` over windows `x_j - x_i <= delta` of sorted samples.
fn sliding_range(samples: &[(f64, f64)], delta: f64) -> f64 {
    use std::collections::VecDeque;
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    let mut left = 0;
    let mut best = 0.0f64;
    for (j, &(x, v)) in samples.iter().enumerate() {
        while maxq.back().is_some_and(|&i| samples[i].1 <= v) {
            maxq.pop_back();
        }
        maxq.push_back(j);
        while minq.back().is_some_and(|&i| samples[i].1 >= v) {
            minq.pop_back();
        }
        minq.push_back(j);
        while x - samples[left].0 > delta {
            left += 1;
        }
        while maxq.front().is_some_and(|&i| i < left) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&i| i < left) {
            minq.pop_front();
        }
        let range = samples[maxq[0]].1 - samples[minq[0]].1;
        best = best.max(range);
    }
    best
}

impl fmt::Display for PiecewiseSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.pieces.iter().enumerate() {
            if i > 0 {
                write!(f, " | {} | ", self.breakpoints[i - 1])?;
            }
            write!(f, "{}", p.source)?;
        }
        Ok(())
    }
}

/// Random signal families used by the randomized experiments.
pub mod corpus {
    use rand::Rng;

    use super::PiecewiseSignal;

    /// A bounded, log-uniformly continuous signal drawn from a few families.
    pub fn random_continuous<R: Rng + ?Sized>(rng: &mut R, window: (f64, f64)) -> PiecewiseSignal {
        let a = rng.random_range(0.5..3.0);
        let b = rng.random_range(0.2..2.0);
        let c = rng.random_range(-2.0..2.0);
        let family = rng.random_range(0..6);
        let (bps, pieces): (Vec<f64>, Vec<String>) = match family {
            0 => (vec![], vec![format!("{a}*sin({b}*log(t)) + {c}")]),
            1 => (vec![], vec![format!("{a}/(1 + {b}*t) + {c}")]),
            2 => (vec![], vec![format!("{a}*atan({b}*log(t)) + {c}")]),
            3 => (vec![], vec![format!("{a}*exp(-{b}*log(t)^2) + {c}")]),
            4 => (vec![], vec![format!("{a}*cos({b}*log(t))^2 + {c}")]),
            _ => {
                // Continuous with a kink at p.
                let p = rng.random_range(window.0..window.1);
                (
                    vec![p],
                    vec![format!("{c}"), format!("{c} + {a}*(1 - {p}/t)")],
                )
            }
        };
        let refs: Vec<&str> = pieces.iter().map(String::as_str).collect();
        PiecewiseSignal::from_strings(&bps, &refs, window).expect("corpus signal is valid")
    }

    /// A signal with 1 to 3 jumps inside `window`, pieces drawn from
    /// constants and smooth bounded expressions.
    pub fn random_piecewise<R: Rng + ?Sized>(rng: &mut R, window: (f64, f64)) -> PiecewiseSignal {
        let m = rng.random_range(1..=3);
        let (lo, hi) = (window.0.ln(), window.1.ln());
        let mut bps: Vec<f64> = (0..m).map(|_| rng.random_range(lo..hi).exp()).collect();
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        let pieces: Vec<String> = (0..=bps.len()).map(|_| random_piece(rng)).collect();
        let refs: Vec<&str> = pieces.iter().map(String::as_str).collect();
        PiecewiseSignal::from_strings(&bps, &refs, window).expect("corpus signal is valid")
    }

    /// Like [`random_piecewise`] but with a breakpoint forced at `at`.
    pub fn random_with_jump_at<R: Rng + ?Sized>(
        rng: &mut R,
        at: f64,
        window: (f64, f64),
    ) -> PiecewiseSignal {
        let base = random_piecewise(rng, window);
        let mut bps = base.breakpoints().to_vec();
        if !bps.contains(&at) {
            bps.push(at);
        }
        bps.sort_by(f64::total_cmp);
        let pieces: Vec<String> = (0..=bps.len()).map(|_| random_piece(rng)).collect();
        let refs: Vec<&str> = pieces.iter().map(String::as_str).collect();
        PiecewiseSignal::from_strings(&bps, &refs, window).expect("corpus signal is valid")
    }

    fn random_piece<R: Rng + ?Sized>(rng: &mut R) -> String {
        let a = rng.random_range(-3.0..3.0);
        let b = rng.random_range(0.2..2.0);
        match rng.random_range(0..4) {
            0 => format!("{a}"),
            1 => format!("{a}/(1 + {b}*t)"),
            2 => format!("{a}*sin({b}*log(t))"),
            _ => format!("{a} + atan({b}*t)"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn log_signal(window: (f64, f64)) -> PiecewiseSignal {
        PiecewiseSignal::from_strings(&[], &["log(t)"], window).unwrap()
    }

    #[test]
    fn worked_example_values() {
        let f = PiecewiseSignal::worked_example();
        assert_eq!(f.eval(1.0).unwrap(), 11.0 / 3.0);
        assert_eq!(f.eval(1.5).unwrap(), 3.0);
        assert_eq!(f.eval(6.0).unwrap(), 12.0 / 13.0);
        assert!(f.eval(0.0).is_err());
        assert!(f.eval(-2.0).is_err());
    }

    #[test]
    fn worked_example_limits() {
        let f = PiecewiseSignal::worked_example();
        assert_eq!(f.one_sided_limits(1.5).unwrap(), (2.0, 3.0));
        assert_eq!(f.one_sided_limits(5.5).unwrap(), (2.0, 1.0));
        assert_eq!(f.one_sided_limits(2.0).unwrap(), (3.0, 3.0));
        let jumps = f.jumps();
        assert_eq!(jumps.len(), 3);
        assert_eq!(jumps[1].jump(), -1.0);
    }

    #[test]
    fn construction_errors() {
        assert!(PiecewiseSignal::from_strings(&[2.0, 1.0], &["1", "2", "3"], (0.5, 4.0)).is_err());
        assert!(PiecewiseSignal::from_strings(&[1.0], &["1"], (0.5, 4.0)).is_err());
        assert!(PiecewiseSignal::from_strings(&[], &["log(t-1)"], (0.5, 4.0)).is_err());
        assert!(PiecewiseSignal::from_strings(&[], &["1"], (0.0, 4.0)).is_err());
        assert!(PiecewiseSignal::from_strings(&[], &["bogus(t)"], (0.5, 4.0)).is_err());
    }

    #[test]
    fn h_at_jump() {
        let f = PiecewiseSignal::worked_example();
        let h = f.build_h(1.5).unwrap();
        assert_eq!(h.eval(1.5).unwrap(), 0.0);
        assert_eq!(h.one_sided_limits(1.5).unwrap(), (0.0, 0.0));
        assert_abs_diff_eq!(h.eval(1.0).unwrap(), 11.0 / 3.0 - 2.0, epsilon = 1e-15);
        assert_eq!(h.eval(2.0).unwrap(), 0.0);
        assert_eq!(h.eval(4.0).unwrap(), 2.0 - 3.0);
    }

    #[test]
    fn h_at_continuity_point_splits_piece() {
        let f = PiecewiseSignal::worked_example();
        let h = f.build_h(1.0).unwrap();
        assert_eq!(h.breakpoints(), &[1.0, 1.5, 3.5, 5.5]);
        assert_eq!(h.eval(1.0).unwrap(), 0.0);
        let (l, r) = h.one_sided_limits(1.0).unwrap();
        assert_eq!((l, r), (0.0, 0.0));
        assert_abs_diff_eq!(h.eval(2.0).unwrap(), 3.0 - 11.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn h_limits_vanish_on_random_signals() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let f = corpus::random_piecewise(&mut rng, (0.5, 8.0));
            let t = if rng.random_bool(0.5) {
                f.breakpoints()[0]
            } else {
                rng.random_range(0.6..7.0)
            };
            let h = f.build_h(t).unwrap();
            assert_eq!(h.one_sided_limits(t).unwrap(), (0.0, 0.0));
            assert_eq!(h.eval(t).unwrap(), 0.0);
        }
    }

    #[test]
    fn modulus_of_constant_and_log() {
        let c = PiecewiseSignal::constant(4.0, (0.5, 8.0)).unwrap();
        assert_eq!(c.log_modulus(0.3, 500).unwrap(), 0.0);
        let l = log_signal((1.0, 10.0));
        for delta in [0.01, 0.1, 0.37, 1.0] {
            assert_abs_diff_eq!(l.log_modulus(delta, 1000).unwrap(), delta, epsilon = 1e-12);
        }
        assert!(l.log_modulus(0.0, 10).is_err());
    }

    #[test]
    fn modulus_sees_jumps() {
        let f = PiecewiseSignal::worked_example();
        assert!(f.log_modulus(1e-3, 2000).unwrap() >= 1.0);
    }

    #[test]
    fn modulus_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = corpus::random_continuous(&mut rng, (0.5, 8.0));
        let mut prev = f64::INFINITY;
        for j in 0..12 {
            let delta = 2f64.powi(-j);
            let w = f.log_modulus(delta, 2000).unwrap();
            assert!(w <= prev + 1e-15);
            assert!(f.log_modulus(2.0 * delta, 2000).unwrap() <= 3.0 * w + 1e-12);
            prev = w;
        }
        assert!(prev < 0.01);

        let delta = 0.05;
        let w = f.log_modulus(delta, 2000).unwrap();
        for _ in 0..1000 {
            let p = rng.random_range(0.5..8.0);
            let q = rng.random_range(0.5..8.0);
            let lhs = (f.eval(p).unwrap() - f.eval(q).unwrap()).abs();
            let rhs = w * (1.0 + (p.ln() - q.ln()).abs() / delta);
            assert!(lhs <= rhs + 1e-12);
        }
    }

    #[test]
    fn norms() {
        let c = PiecewiseSignal::constant(-2.5, (0.5, 8.0)).unwrap();
        assert_eq!(c.sup_norm((0.5, 8.0), 100).unwrap(), 2.5);
        assert_eq!(c.derivative_sup((0.5, 8.0), 100).unwrap(), 0.0);
        let f = PiecewiseSignal::worked_example();
        // Grid-maximization oracle: dense scan of |f| on [0.5, 8].
        let oracle = (0..=200_000)
            .map(|i| f.eval(0.5 + 7.5 * i as f64 / 200_000.0).unwrap().abs())
            .fold(0.0f64, f64::max);
        assert_abs_diff_eq!(
            f.sup_norm((0.5, 8.0), 1000).unwrap(),
            oracle,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(oracle, 22.0 / 3.0, epsilon = 1e-12);
        let l = log_signal((1.0, std::f64::consts::E));
        assert_abs_diff_eq!(
            l.derivative_sup((1.0, std::f64::consts::E), 100).unwrap(),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn point_value_override() {
        let f = PiecewiseSignal::unit_step(2.0, (0.5, 8.0))
            .unwrap()
            .with_point_value(2.0, 0.5)
            .unwrap();
        assert_eq!(f.eval(2.0).unwrap(), 0.5);
        assert_eq!(f.jump_at(2.0).unwrap().value_at, 0.5);
        assert!(!f.is_continuous());
    }

    #[test]
    fn corpus_signals_are_continuous() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let f = corpus::random_continuous(&mut rng, (0.5, 8.0));
            assert!(f.is_continuous(), "{f}");
        }
    }
}
