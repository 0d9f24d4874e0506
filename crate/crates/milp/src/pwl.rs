//! Linearization helpers: piecewise-linear surrogates and big-M links.

use crate::error::ModelError;
use crate::model::{LinExpr, MilpModel, Relation, VarId};

/// `a + b x + c x^2`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Quadratic {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.a + x * (self.b + self.c * x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.b + 2.0 * self.c * x
    }

    /// Minimum over `[lo, hi]`; assumes `c >= 0`.
    pub fn min_on(&self, lo: f64, hi: f64) -> f64 {
        let mut best = self.eval(lo).min(self.eval(hi));
        if self.c > 0.0 {
            let vertex = -self.b / (2.0 * self.c);
            if vertex > lo && vertex < hi {
                best = best.min(self.eval(vertex));
            }
        }
        best
    }

    /// Maximum over `[lo, hi]`; assumes `c >= 0`.
    pub fn max_on(&self, lo: f64, hi: f64) -> f64 {
        self.eval(lo).max(self.eval(hi))
    }
}

/// Interpolant of a convex quadratic on `segments` uniform pieces of
/// `[0, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexPwl {
    pub quad: Quadratic,
    pub x_max: f64,
    pub segments: usize,
}

impl ConvexPwl {
    pub fn new(quad: Quadratic, x_max: f64, segments: usize) -> Result<Self, ModelError> {
        if quad.c < 0.0 || quad.c.is_nan() {
            return Err(ModelError::NotConvex(quad.c));
        }
        if segments == 0 {
            return Err(ModelError::Breakpoints("at least one segment is required".into()));
        }
        if !(x_max > 0.0 && x_max.is_finite()) {
            return Err(ModelError::Breakpoints(format!(
                "domain end must be positive and finite, got {x_max}"
            )));
        }
        Ok(Self {
            quad,
            x_max,
            segments,
        })
    }

    pub fn breakpoint(&self, i: usize) -> f64 {
        if i == self.segments {
            self.x_max
        } else {
            self.x_max * i as f64 / self.segments as f64
        }
    }

    /// Slope and intercept of the chord over segment `i`.
    pub fn chord(&self, i: usize) -> (f64, f64) {
        let (x0, x1) = (self.breakpoint(i), self.breakpoint(i + 1));
        let (y0, y1) = (self.quad.eval(x0), self.quad.eval(x1));
        let slope = (y1 - y0) / (x1 - x0);
        (slope, y0 - slope * x0)
    }

    /// Value of the interpolant; the maximum of the chords, which equals the
    /// interpolant on the domain because the quadratic is convex.
    pub fn eval(&self, x: f64) -> f64 {
        (0..self.segments)
            .map(|i| {
                let (s, b) = self.chord(i);
                s * x + b
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Worst-case gap between the interpolant and the quadratic.
    pub fn error_bound(&self) -> f64 {
        let w = self.x_max / self.segments as f64;
        self.quad.c * w * w / 4.0
    }
}

/// Adds `y >= chord_i(x)` for every segment and returns `y`.
///
/// With minimizing pressure on `y`, the optimum sits on the interpolant of
/// the quadratic. No binaries are introduced.
pub fn pwl_convex(
    model: &mut MilpModel,
    x: VarId,
    quad: Quadratic,
    x_max: f64,
    segments: usize,
    name: &str,
) -> Result<VarId, ModelError> {
    let pwl = ConvexPwl::new(quad, x_max, segments)?;
    pwl_convex_with(model, x, &pwl, name)
}

pub fn pwl_convex_with(
    model: &mut MilpModel,
    x: VarId,
    pwl: &ConvexPwl,
    name: &str,
) -> Result<VarId, ModelError> {
    let xv = model.variable(x);
    if xv.lower < 0.0 || xv.upper > pwl.x_max {
        return Err(ModelError::OutOfRange {
            name: xv.name.clone(),
            lower: xv.lower,
            upper: xv.upper,
            start: 0.0,
            end: pwl.x_max,
        });
    }
    let (lo, hi) = (xv.lower, xv.upper);
    let y_lo = pwl.quad.min_on(lo, hi);
    let y_hi = pwl.quad.max_on(0.0, pwl.x_max);
    let y = model.continuous(name, y_lo, y_hi)?;
    for i in 0..pwl.segments {
        let (slope, intercept) = pwl.chord(i);
        model.add_constraint(
            LinExpr::from(y) - slope * x,
            Relation::Ge,
            intercept,
            format!("{name}.chord{i}"),
        )?;
    }
    Ok(y)
}

/// Incremental formulation of an arbitrary piecewise-linear function.
///
/// Uses one fill variable per segment and one ordering binary between
/// consecutive segments, so `y` equals the interpolant exactly for any `x`.
pub fn pwl_general(
    model: &mut MilpModel,
    x: VarId,
    breakpoints: &[f64],
    values: &[f64],
    name: &str,
) -> Result<VarId, ModelError> {
    if breakpoints.len() < 2 || breakpoints.len() != values.len() {
        return Err(ModelError::Breakpoints(format!(
            "need at least two breakpoints with one value each, got {} and {}",
            breakpoints.len(),
            values.len()
        )));
    }
    if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(ModelError::Breakpoints(
            "breakpoints must be strictly increasing".into(),
        ));
    }
    if breakpoints.iter().chain(values).any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite(name.into()));
    }
    let (start, end) = (breakpoints[0], *breakpoints.last().unwrap());
    let xv = model.variable(x);
    if xv.lower < start || xv.upper > end {
        return Err(ModelError::OutOfRange {
            name: xv.name.clone(),
            lower: xv.lower,
            upper: xv.upper,
            start,
            end,
        });
    }
    let v_lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let v_hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let y = model.continuous(name, v_lo, v_hi)?;

    let segments = breakpoints.len() - 1;
    let mut fills = Vec::with_capacity(segments);
    for i in 0..segments {
        fills.push(model.continuous(format!("{name}.fill{i}"), 0.0, 1.0)?);
    }
    let mut x_expr = LinExpr::from(x) - start;
    let mut y_expr = LinExpr::from(y) - values[0];
    for (i, &fill) in fills.iter().enumerate() {
        x_expr.add_term(fill, -(breakpoints[i + 1] - breakpoints[i]));
        y_expr.add_term(fill, -(values[i + 1] - values[i]));
    }
    model.add_constraint(x_expr, Relation::Eq, 0.0, format!("{name}.x"))?;
    model.add_constraint(y_expr, Relation::Eq, 0.0, format!("{name}.y"))?;
    for i in 0..segments.saturating_sub(1) {
        let order = model.binary(format!("{name}.order{i}"))?;
        // fill[i+1] <= order <= fill[i]
        model.add_constraint(
            LinExpr::from(fills[i + 1]) - order,
            Relation::Le,
            0.0,
            format!("{name}.order{i}.lo"),
        )?;
        model.add_constraint(
            LinExpr::from(order) - fills[i],
            Relation::Le,
            0.0,
            format!("{name}.order{i}.hi"),
        )?;
    }
    Ok(y)
}

fn check_indicator(model: &MilpModel, flag: VarId, x: VarId, big_m: f64) -> Result<(), ModelError> {
    let f = model.variable(flag);
    if !f.is_binary() {
        return Err(ModelError::NotBinary(f.name.clone()));
    }
    let xv = model.variable(x);
    if xv.lower < 0.0 {
        return Err(ModelError::NegativeIndicatorTarget(xv.name.clone()));
    }
    if !(big_m >= xv.upper) || !big_m.is_finite() {
        return Err(ModelError::BigMTooSmall {
            name: xv.name.clone(),
            big_m,
            upper: xv.upper,
        });
    }
    Ok(())
}

/// Adds `x <= M * flag`, forcing `x` to zero when the flag is off.
pub fn bigm_indicator(
    model: &mut MilpModel,
    flag: VarId,
    x: VarId,
    big_m: f64,
    name: &str,
) -> Result<(), ModelError> {
    check_indicator(model, flag, x, big_m)?;
    model.add_constraint(
        LinExpr::from(x) - big_m * flag,
        Relation::Le,
        0.0,
        name,
    )?;
    Ok(())
}

/// Adds `x <= M * (1 - flag)`, forcing `x` to zero when the flag is on.
pub fn bigm_indicator_complement(
    model: &mut MilpModel,
    flag: VarId,
    x: VarId,
    big_m: f64,
    name: &str,
) -> Result<(), ModelError> {
    check_indicator(model, flag, x, big_m)?;
    model.add_constraint(
        LinExpr::from(x) + big_m * flag,
        Relation::Le,
        big_m,
        name,
    )?;
    Ok(())
}
