//! Winding numbers `w(s) = (2πi)⁻¹ ∫ τ(s⁻¹ s′)` of paths of invertibles in `1 + L¹`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::algebra::{Element, C64};
use crate::error::{Error, Result};
use crate::quad::{integrate, QuadratureConfig, Side};
use crate::tolerances::{CLOSURE, FD_STEP, INVERTIBILITY};

pub struct LoopSample {
    pub value: Element,
    pub derivative: Option<Element>,
}

type SampleFn = Arc<dyn Fn(f64, Side) -> Result<LoopSample> + Send + Sync>;
type SurfaceFn = Arc<dyn Fn(f64, f64) -> Result<Element> + Send + Sync>;

/// A piecewise-C¹ path `s : [a, b] → GL(1 + L¹)`.
#[derive(Clone)]
pub struct UnitaryLoop {
    a: f64,
    b: f64,
    sample: SampleFn,
    breakpoints: Vec<f64>,
    closed: bool,
    fd_step: f64,
    panels: usize,
}

impl std::fmt::Debug for UnitaryLoop {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UnitaryLoop")
            .field("interval", &(self.a, self.b))
            .field("breakpoints", &self.breakpoints)
            .field("closed", &self.closed)
            .finish()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WindingNumber {
    pub value: f64,
    /// Imaginary part of `w`; vanishes for closed loops.
    pub imaginary: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub panels: usize,
}

impl WindingNumber {
    pub fn complex(&self) -> C64 {
        C64::new(self.value, self.imaginary)
    }
}

impl UnitaryLoop {
    /// Loop from a sampler returning values and (optionally) derivatives.
    pub fn new<F>(a: f64, b: f64, sample: F) -> Result<Self>
    where
        F: Fn(f64, Side) -> Result<LoopSample> + Send + Sync + 'static,
    {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Precondition(format!("loop interval [{a}, {b}] is empty")));
        }
        Ok(UnitaryLoop {
            a,
            b,
            sample: Arc::new(sample),
            breakpoints: Vec::new(),
            closed: false,
            fd_step: FD_STEP,
            panels: 16,
        })
    }

    /// Loop with analytic derivative.
    pub fn with_derivative<V, D>(a: f64, b: f64, value: V, derivative: D) -> Result<Self>
    where
        V: Fn(f64) -> Result<Element> + Send + Sync + 'static,
        D: Fn(f64) -> Result<Element> + Send + Sync + 'static,
    {
        UnitaryLoop::new(a, b, move |t, _| {
            Ok(LoopSample {
                value: value(t)?,
                derivative: Some(derivative(t)?),
            })
        })
    }

    /// Loop whose derivative is obtained by finite differences.
    pub fn from_values<V>(a: f64, b: f64, value: V) -> Result<Self>
    where
        V: Fn(f64) -> Result<Element> + Send + Sync + 'static,
    {
        UnitaryLoop::new(a, b, move |t, _| {
            Ok(LoopSample {
                value: value(t)?,
                derivative: None,
            })
        })
    }

    pub fn with_breakpoints(mut self, mut breaks: Vec<f64>) -> Result<Self> {
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        if breaks.iter().any(|&t| !(t > self.a && t < self.b)) {
            return Err(Error::Precondition("breakpoints must lie inside the loop interval".into()));
        }
        self.breakpoints = breaks;
        Ok(self)
    }

    pub fn closed(mut self, closed: bool) -> Self {
        self.closed = closed;
        self
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    /// Initial number of quadrature panels.
    pub fn with_panels(mut self, panels: usize) -> Self {
        self.panels = panels.max(1);
        self
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn value(&self, t: f64) -> Result<Element> {
        Ok((self.sample)(t, Side::Interior)?.value)
    }

    fn segment(&self, t: f64, side: Side) -> (f64, f64) {
        let mut lo = self.a;
        let mut hi = self.b;
        for &bp in &self.breakpoints {
            if bp < t || (bp == t && side == Side::Right) {
                lo = bp;
            } else if bp > t || (bp == t && side != Side::Right) {
                hi = bp;
                break;
            }
        }
        (lo, hi)
    }

    /// Value and derivative at `t`, the derivative taken on the side requested.
    pub fn sample(&self, t: f64, side: Side) -> Result<(Element, Element)> {
        let s = (self.sample)(t, side)?;
        if let Some(d) = s.derivative {
            return Ok((s.value, d));
        }
        let (lo, hi) = self.segment(t, side);
        let h = self.fd_step.min(0.25 * (hi - lo));
        let f = |x: f64| self.value(x);
        let d = if t - h >= lo && t + h <= hi {
            f(t + h)?.sub(&f(t - h)?)?.scale(0.5 / h)
        } else if t + 2.0 * h <= hi {
            let v = s.value.scale(-3.0).add(&f(t + h)?.scale(4.0))?.sub(&f(t + 2.0 * h)?)?;
            v.scale(0.5 / h)
        } else {
            let v = s.value.scale(3.0).sub(&f(t - h)?.scale(4.0))?.add(&f(t - 2.0 * h)?)?;
            v.scale(0.5 / h)
        };
        Ok((s.value, d))
    }

    /// Pointwise product `s₁ s₂` on a common interval.
    pub fn product(&self, other: &UnitaryLoop) -> Result<UnitaryLoop> {
        if self.a != other.a || self.b != other.b {
            return Err(Error::Precondition("product loops must share their interval".into()));
        }
        let (p, q) = (self.clone(), other.clone());
        let mut breaks = self.breakpoints.clone();
        breaks.extend(&other.breakpoints);
        let out = UnitaryLoop::new(self.a, self.b, move |t, side| {
            let (s1, d1) = p.sample(t, side)?;
            let (s2, d2) = q.sample(t, side)?;
            Ok(LoopSample {
                value: s1.mul(&s2)?,
                derivative: Some(d1.mul(&s2)?.add(&s1.mul(&d2)?)?),
            })
        })?;
        Ok(out
            .with_breakpoints(breaks)?
            .closed(self.closed && other.closed)
            .with_panels(self.panels.max(other.panels)))
    }

    /// `t ↦ L s(t) R` for constant `L`, `R`.
    pub fn sandwich(&self, left: &Element, right: &Element) -> Result<UnitaryLoop> {
        let (p, l, r) = (self.clone(), left.clone(), right.clone());
        let out = UnitaryLoop::new(self.a, self.b, move |t, side| {
            let (s, d) = p.sample(t, side)?;
            Ok(LoopSample {
                value: l.mul(&s)?.mul(&r)?,
                derivative: Some(l.mul(&d)?.mul(&r)?),
            })
        })?;
        Ok(out
            .with_breakpoints(self.breakpoints.clone())?
            .closed(self.closed)
            .with_panels(self.panels))
    }

    /// `t ↦ U⁻¹ s(t) U`
    pub fn conjugated(&self, u: &Element) -> Result<UnitaryLoop> {
        self.sandwich(&u.inverse()?, u)
    }

    /// `t ↦ s(φ(t))` for an increasing C¹ bijection `φ` of `[a, b]`.
    pub fn reparameterized<P, D>(&self, phi: P, dphi: D) -> Result<UnitaryLoop>
    where
        P: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let (a, b) = (self.a, self.b);
        if (phi(a) - a).abs() > 1e-14 || (phi(b) - b).abs() > 1e-14 {
            return Err(Error::Precondition("reparameterization must fix the interval endpoints".into()));
        }
        let breaks: Vec<f64> = self
            .breakpoints
            .iter()
            .map(|&bp| {
                let (mut lo, mut hi) = (a, b);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if phi(mid) < bp {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect();
        let p = self.clone();
        let out = UnitaryLoop::new(a, b, move |t, side| {
            let (s, d) = p.sample(phi(t), side)?;
            Ok(LoopSample {
                value: s,
                derivative: Some(d.scale(dphi(t))),
            })
        })?;
        Ok(out.with_breakpoints(breaks)?.closed(self.closed).with_panels(self.panels))
    }

    /// `self` followed by `other`, on `[a, b + (b′ − a′)]`.
    pub fn concat(&self, other: &UnitaryLoop) -> Result<UnitaryLoop> {
        let gap = self.value(self.b)?.max_entry_distance(&other.value(other.a)?)?;
        if gap > CLOSURE {
            return Err(Error::EndpointMismatch { gap });
        }
        let (p, q) = (self.clone(), other.clone());
        let mid = self.b;
        let shift = other.a - self.b;
        let end = self.b + (other.b - other.a);
        let mut breaks = self.breakpoints.clone();
        breaks.push(mid);
        breaks.extend(other.breakpoints.iter().map(|t| t - shift));
        let out = UnitaryLoop::new(self.a, end, move |t, side| {
            let first = t < mid || (t == mid && side != Side::Right);
            let (s, d) = if first {
                p.sample(t, side)?
            } else {
                q.sample(t + shift, side)?
            };
            Ok(LoopSample {
                value: s,
                derivative: Some(d),
            })
        })?;
        let closed = self.value(self.a)?.max_entry_distance(&other.value(other.b)?)? <= CLOSURE;
        Ok(out
            .with_breakpoints(breaks)?
            .closed(closed)
            .with_panels(self.panels + other.panels))
    }
}

/// Checks `σ_min(s) > INVERTIBILITY` and returns `s⁻¹`.
fn checked_inverse(s: &Element, t: f64) -> Result<Element> {
    let inv = s.inverse_at(t)?;
    let frob: f64 = match inv.blocks() {
        Some(b) => b.iter().map(|m| m.norm()).fold(0.0, f64::max),
        None => inv.grid_values().unwrap().iter().fold(0.0, |m, z| m.max(z.norm())),
    };
    if frob * INVERTIBILITY >= 1.0 {
        let sigma = s.min_singular_value();
        if sigma <= INVERTIBILITY {
            return Err(Error::NonInvertible { t, sigma });
        }
    }
    Ok(inv)
}

/// `(2πi)⁻¹ ∫ τ(s⁻¹ s′)` with an error estimate.
pub fn winding_number(lp: &UnitaryLoop, quad: &QuadratureConfig) -> Result<WindingNumber> {
    quad.validate()?;
    if lp.closed {
        let s0 = lp.value(lp.a)?;
        let gap = s0.max_entry_distance(&lp.value(lp.b)?)?;
        if gap > CLOSURE * s0.op_norm().max(1.0) {
            return Err(Error::Precondition(format!(
                "loop flagged closed but endpoint values differ by {gap:.3e}"
            )));
        }
    }
    let mut breaks = vec![lp.a];
    breaks.extend(&lp.breakpoints);
    breaks.push(lp.b);
    let scale = C64::new(0.0, -1.0 / (2.0 * PI));
    let r = integrate(quad, &breaks, lp.panels, |t, side| {
        let (s, d) = lp.sample(t, side)?;
        let inv = checked_inverse(&s, t)?;
        Ok(inv.trace_product(&d)? * scale)
    })?;
    Ok(WindingNumber {
        value: r.value.re,
        imaginary: r.value.im,
        error_estimate: r.error_estimate,
        evaluations: r.evaluations,
        panels: r.panels,
    })
}

/// A map `h : [a, b] × [c, d] → GL(1 + L¹)` with optional partial derivatives.
#[derive(Clone)]
pub struct Surface {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    value: SurfaceFn,
    dx: Option<SurfaceFn>,
    dy: Option<SurfaceFn>,
    panels: usize,
}

impl Surface {
    pub fn new<F>(x_range: (f64, f64), y_range: (f64, f64), value: F) -> Self
    where
        F: Fn(f64, f64) -> Result<Element> + Send + Sync + 'static,
    {
        Surface {
            x_range,
            y_range,
            value: Arc::new(value),
            dx: None,
            dy: None,
            panels: 16,
        }
    }

    pub fn with_partials<X, Y>(mut self, dx: X, dy: Y) -> Self
    where
        X: Fn(f64, f64) -> Result<Element> + Send + Sync + 'static,
        Y: Fn(f64, f64) -> Result<Element> + Send + Sync + 'static,
    {
        self.dx = Some(Arc::new(dx));
        self.dy = Some(Arc::new(dy));
        self
    }

    pub fn with_panels(mut self, panels: usize) -> Self {
        self.panels = panels.max(1);
        self
    }

    fn edge(&self, horizontal: bool, fixed: f64) -> Result<UnitaryLoop> {
        let (a, b) = if horizontal { self.x_range } else { self.y_range };
        let v = self.value.clone();
        let d = if horizontal { self.dx.clone() } else { self.dy.clone() };
        let lp = UnitaryLoop::new(a, b, move |s, _| {
            let (x, y) = if horizontal { (s, fixed) } else { (fixed, s) };
            Ok(LoopSample {
                value: v(x, y)?,
                derivative: match &d {
                    Some(d) => Some(d(x, y)?),
                    None => None,
                },
            })
        })?;
        Ok(lp.with_panels(self.panels))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RectangleDefect {
    /// `w(h(·,c)) + w(h(b,·)) − w(h(a,·)) − w(h(·,d))`
    pub defect: f64,
    pub defect_imaginary: f64,
    pub bottom: WindingNumber,
    pub right: WindingNumber,
    pub left: WindingNumber,
    pub top: WindingNumber,
    pub error_estimate: f64,
}

impl RectangleDefect {
    pub fn magnitude(&self) -> f64 {
        self.defect.hypot(self.defect_imaginary)
    }
}

pub fn rectangle_defect(h: &Surface, quad: &QuadratureConfig) -> Result<RectangleDefect> {
    let (a, b) = h.x_range;
    let (c, d) = h.y_range;
    if !(b > a && d > c) {
        return Err(Error::Precondition("rectangle must have positive extent".into()));
    }
    let bottom = winding_number(&h.edge(true, c)?, quad)?;
    let right = winding_number(&h.edge(false, b)?, quad)?;
    let left = winding_number(&h.edge(false, a)?, quad)?;
    let top = winding_number(&h.edge(true, d)?, quad)?;
    let z = bottom.complex() + right.complex() - left.complex() - top.complex();
    Ok(RectangleDefect {
        defect: z.re,
        defect_imaginary: z.im,
        error_estimate: bottom.error_estimate + right.error_estimate + left.error_estimate + top.error_estimate,
        bottom,
        right,
        left,
        top,
    })
}
