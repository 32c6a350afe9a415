//! Spectral flow by winding number, Phillips' partition formula, and crossing counts.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::algebra::{CMat, Element, FunctionSpec};
use crate::error::{Error, Result};
use crate::normalizing::{BoundedChi, NormalizingFunction};
use crate::path::{OperatorPath, PoleWrap, Side};
use crate::quad::QuadratureConfig;
use crate::report::SpectralFlowReport;
use crate::tolerances::{BISECTION, DEFAULT_PARTITION, RANK_TOL};
use crate::winding::{winding_number, LoopSample, UnitaryLoop};

#[derive(Debug, Clone, Serialize)]
pub struct WindingFlow {
    pub value: f64,
    pub imaginary: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub panels: usize,
    pub chi: String,
}

/// `smooth_gap(ε)` with `ε` half the smallest endpoint margin (capped at 1).
pub fn default_gap(path: &OperatorPath) -> Result<NormalizingFunction> {
    let info = path.require_invertible_endpoints()?;
    NormalizingFunction::smooth_gap((0.5 * info.min_margin()).min(1.0))
}

/// Initial panel count for an integrand whose rate of change is about `rate`.
pub(crate) fn panels_for(rate: f64, quad: &QuadratureConfig) -> usize {
    let n = (8.0 * rate).ceil();
    if n.is_finite() {
        (n as usize).clamp(quad.min_panels, 65536)
    } else {
        65536
    }
}

/// `sf = w(t ↦ e^{iπ(χ(D_t)+1)})`, with `χ` a smooth gap function narrower than both
/// endpoint margins.
pub fn sf_winding(path: &OperatorPath, chi: &NormalizingFunction, quad: &QuadratureConfig) -> Result<WindingFlow> {
    let info = path.require_invertible_endpoints()?;
    let eps = chi
        .gap()
        .ok_or_else(|| Error::Precondition("sf_winding needs a smooth_gap normalizing function".into()))?;
    if eps >= info.min_margin() {
        return Err(Error::Precondition(format!(
            "gap ε = {eps} must be below the endpoint margin {}",
            info.min_margin()
        )));
    }
    let rate = path.speed_estimate()? * (1.0 + eps * eps) / eps;
    let lp = exp_loop(path, chi)?.with_panels(panels_for(rate, quad));
    let w = winding_number(&lp, quad)?;
    Ok(WindingFlow {
        value: w.value,
        imaginary: w.imaginary,
        error_estimate: w.error_estimate,
        evaluations: w.evaluations,
        panels: w.panels,
        chi: chi.name(),
    })
}

/// The closed loop `t ↦ e^{iπ(χ(D_t)+1)}` with derivative by divided differences.
pub fn exp_loop(path: &OperatorPath, chi: &NormalizingFunction) -> Result<UnitaryLoop> {
    let f = Arc::new(chi.exp_loop_function());
    let p = path.clone();
    let lp = UnitaryLoop::new(0.0, 1.0, move |t, side| {
        let d = p.value(t)?;
        let dot = p.derivative(t, side)?.without_poles_of(&d);
        let spec = d.eigh()?;
        Ok(LoopSample {
            value: spec.apply(&f)?,
            derivative: Some(spec.derivative(&f, &dot)?),
        })
    })?;
    Ok(lp.with_breakpoints(path.breakpoints().to_vec())?.closed(true))
}

pub fn uniform_partition(n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n).map(|k| k as f64 / n as f64).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyticFlow {
    pub value: f64,
    pub steps: usize,
    /// Largest `‖P_{t_i} − P_{t_{i+1}}‖` over the partition (block backend).
    pub max_projection_jump: f64,
    /// Steps with projection jump `≥ ½`, where the local index formula is not certified.
    pub coarse_steps: usize,
    /// Singular values within a factor 10 of the rank tolerance.
    pub rank_warnings: usize,
    pub wrap_contribution: f64,
}

/// Phillips' formula `Σ ind(P_{t_i} P_{t_{i+1}})` with `P_t = 1_{≥0}(D_t)`.
pub fn sf_analytic(path: &OperatorPath, partition: &[f64]) -> Result<AnalyticFlow> {
    if partition.len() < 2
        || partition[0] != 0.0
        || partition[partition.len() - 1] != 1.0
        || partition.windows(2).any(|w| !(w[1] > w[0]))
    {
        return Err(Error::Precondition(
            "partition must increase strictly from 0 to 1".into(),
        ));
    }
    path.require_invertible_endpoints()?;
    let alg = path.algebra().clone();
    let weights = alg.block_list();
    let mut out = AnalyticFlow {
        value: 0.0,
        steps: partition.len() - 1,
        max_projection_jump: 0.0,
        coarse_steps: 0,
        rank_warnings: 0,
        wrap_contribution: 0.0,
    };
    if alg.is_grid() {
        let mut prev = path.grid_signs(partition[0])?;
        for w in partition.windows(2) {
            let next = path.grid_signs(w[1])?;
            let mut changed = false;
            for (i, (&a, &b)) in prev.iter().zip(&next).enumerate() {
                out.value += weights[i].1 * (b as i32 - a as i32) as f64;
                changed |= a != b;
            }
            for wr in path.wraps().iter().filter(|wr| wr.t >= w[0] && wr.t < w[1]) {
                let c = if wr.upward { 1.0 } else { -1.0 } * weights[wr.point].1;
                out.value += c;
                out.wrap_contribution += c;
                changed = true;
            }
            if changed {
                out.max_projection_jump = 1.0;
            }
            prev = next;
        }
        return Ok(out);
    }
    let mut prev: Vec<CMat> = path.value(partition[0])?.eigh()?.nonneg_bases();
    for w in partition.windows(2) {
        let next = path.value(w[1])?.eigh()?.nonneg_bases();
        let mut jump: f64 = 0.0;
        for (k, (q0, q1)) in prev.iter().zip(&next).enumerate() {
            let (r0, r1) = (q0.ncols(), q1.ncols());
            let sv: Vec<f64> = if r0 == 0 || r1 == 0 {
                Vec::new()
            } else {
                crate::algebra::singular_values(&(q0.adjoint() * q1))
            };
            let rank = sv.iter().filter(|&&s| s > RANK_TOL).count();
            out.rank_warnings += sv
                .iter()
                .filter(|&&s| s > 0.1 * RANK_TOL && s < 10.0 * RANK_TOL)
                .count();
            let ind = (r1 - rank) as f64 - (r0 - rank) as f64;
            out.value += weights[k].1 * ind;
            let j = if r0 != r1 {
                1.0
            } else if r0 == 0 || r0 == q0.nrows() {
                0.0
            } else {
                let smin = sv.iter().fold(1.0f64, |m, &s| m.min(s));
                (1.0 - smin * smin).max(0.0).sqrt()
            };
            jump = jump.max(j);
        }
        out.max_projection_jump = out.max_projection_jump.max(jump);
        if jump >= 0.5 {
            out.coarse_steps += 1;
        }
        prev = next;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossingOptions {
    /// Uniform samples per unit parameter (grid backend).
    pub samples: usize,
    /// Values below this in magnitude without a sign change are flagged as tangencies.
    pub tangency: f64,
}

impl Default for CrossingOptions {
    fn default() -> Self {
        CrossingOptions {
            samples: 1024,
            tangency: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub point: usize,
    pub t: f64,
    pub upward: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossingFlow {
    pub value: f64,
    /// `τ(1_{≥0}(D_1)) − τ(1_{≥0}(D_0))`
    pub telescoping: f64,
    pub crossings: Vec<Crossing>,
    pub tangencies: Vec<Crossing>,
}

fn projection_trace(d: &Element) -> Result<f64> {
    Ok(d.eigh()?.trace_fn(|l| if l >= 0.0 { 1.0 } else { 0.0 }))
}

/// Crossing count: exact projection telescoping for blocks, sampled sign changes
/// (ignoring passages through `±∞`) for grids.
pub fn sf_crossing(path: &OperatorPath, opts: &CrossingOptions) -> Result<CrossingFlow> {
    path.require_invertible_endpoints()?;
    let telescoping = projection_trace(&path.value(1.0)?)? - projection_trace(&path.value(0.0)?)?;
    let alg = path.algebra().clone();
    if !alg.is_grid() {
        return Ok(CrossingFlow {
            value: telescoping,
            telescoping,
            crossings: Vec::new(),
            tangencies: Vec::new(),
        });
    }
    if opts.samples == 0 {
        return Err(Error::Precondition("crossing sampler needs at least one step".into()));
    }
    let weights = alg.grid_weights().unwrap().to_vec();
    let n = opts.samples;
    let ts = uniform_partition(n);
    let vals: Vec<Vec<f64>> = ts
        .iter()
        .map(|&t| Ok(path.value(t)?.grid_real().unwrap()))
        .collect::<Result<_>>()?;
    let mut crossings = Vec::new();
    let mut tangencies = Vec::new();
    let locate = |i: usize, a: f64, b: f64, sign_a: bool| -> Result<f64> {
        let (mut lo, mut hi) = (a, b);
        while hi - lo > BISECTION {
            let mid = 0.5 * (lo + hi);
            let v = path.value(mid)?.grid_real().unwrap()[i];
            let s = if v.is_infinite() { !sign_a } else { v >= 0.0 };
            if s == sign_a {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };
    let mut value = 0.0;
    for i in 0..weights.len() {
        let wraps: Vec<&PoleWrap> = path.wraps().iter().filter(|w| w.point == i).collect();
        let mut sign = vals[0][i] >= 0.0;
        let mut last_t = 0.0;
        for k in 1..=n {
            let (a, b) = (ts[k - 1], ts[k]);
            for w in wraps.iter().filter(|w| w.t > a && w.t <= b) {
                if sign != w.sign_before() {
                    let t = locate(i, last_t, w.t, sign)?;
                    crossings.push(Crossing { point: i, t, upward: !sign });
                    value += if sign { -weights[i] } else { weights[i] };
                }
                sign = w.sign_after();
                last_t = w.t;
            }
            let v = vals[k][i];
            if v.is_infinite() {
                continue;
            }
            let s = v >= 0.0;
            if s != sign {
                let t = locate(i, last_t, b, sign)?;
                crossings.push(Crossing { point: i, t, upward: s });
                value += if s { weights[i] } else { -weights[i] };
            } else if v.abs() < opts.tangency && k < n {
                tangencies.push(Crossing { point: i, t: b, upward: s });
            }
            sign = s;
            last_t = b;
        }
    }
    crossings.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.point.cmp(&b.point)));
    Ok(CrossingFlow {
        value,
        telescoping,
        crossings,
        tangencies,
    })
}

#[derive(Debug, Clone)]
pub struct Regularization {
    pub path: OperatorPath,
    /// `sf^a(D_0 + (1 − t)Q_0)`
    pub correction_start: f64,
    /// `sf^a(D_1 + tQ_1)`
    pub correction_end: f64,
    /// `τ(Q_0)`, `τ(Q_1)`
    pub window_trace_start: f64,
    pub window_trace_end: f64,
}

impl Regularization {
    /// Amount subtracted from the spectral flow of the shifted path.
    pub fn total_correction(&self) -> f64 {
        self.correction_start + self.correction_end
    }
}

fn window_projection(d: &Element, eps: f64) -> Result<Option<Element>> {
    let spec = d.eigh()?;
    let zero = RANK_TOL * d.op_norm().max(1.0);
    if spec.margin() > zero {
        return Ok(None);
    }
    let rest = spec.margin_above(zero);
    if eps >= rest {
        return Err(Error::Precondition(format!(
            "ε = {eps} does not separate 0 from the nonzero spectrum (nearest {rest:.3e})"
        )));
    }
    Ok(Some(spec.apply(&FunctionSpec::indicator_window(eps))?))
}

/// Replaces a non-invertible `D_0` by `D_0 + Q_0`, `Q_0 = 1_{[−ε,ε]}(D_0)`, along
/// `D_t + (1 − t)Q_0` (and symmetrically at `t = 1`); the corrections are the
/// analytic spectral flows of the connecting segments.
pub fn regularize_endpoints(path: &OperatorPath, eps: f64) -> Result<Regularization> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Precondition(format!("ε must lie in (0, 1), got {eps}")));
    }
    let d0 = path.value(0.0)?;
    let d1 = path.value(1.0)?;
    let q0 = window_projection(&d0, eps)?;
    let q1 = window_projection(&d1, eps)?;
    let trace_of = |q: &Option<Element>| -> Result<f64> {
        Ok(match q {
            Some(q) => q.trace()?.re,
            None => 0.0,
        })
    };
    let partition = uniform_partition(DEFAULT_PARTITION);
    let correction_start = match &q0 {
        Some(q) => {
            let seg = OperatorPath::affine(&d0.add(q)?, &d0)?;
            sf_analytic_unchecked(&seg, &partition)?
        }
        None => 0.0,
    };
    let correction_end = match &q1 {
        Some(q) => {
            let seg = OperatorPath::affine(&d1, &d1.add(q)?)?;
            sf_analytic_unchecked(&seg, &partition)?
        }
        None => 0.0,
    };
    let shifted = if q0.is_none() && q1.is_none() {
        path.clone()
    } else {
        path.shifted(q0.as_ref(), q1.as_ref())?
    };
    Ok(Regularization {
        path: shifted,
        correction_start,
        correction_end,
        window_trace_start: trace_of(&q0)?,
        window_trace_end: trace_of(&q1)?,
    })
}

/// Phillips' sum without the endpoint-invertibility requirement (connecting segments
/// end at the singular operator).
fn sf_analytic_unchecked(path: &OperatorPath, partition: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    let weights = path.algebra().block_list();
    let mut prev = path.value(partition[0])?.eigh()?.nonneg_bases();
    for &t in &partition[1..] {
        let next = path.value(t)?.eigh()?.nonneg_bases();
        for (k, (q0, q1)) in prev.iter().zip(&next).enumerate() {
            let rank = if q0.ncols() == 0 || q1.ncols() == 0 {
                0
            } else {
                crate::algebra::singular_values(&(q0.adjoint() * q1))
                    .iter()
                    .filter(|&&s| s > RANK_TOL)
                    .count()
            };
            total += weights[k].1 * ((q1.ncols() - rank) as f64 - (q0.ncols() - rank) as f64);
        }
        prev = next;
    }
    Ok(total)
}

/// Which spectral-flow computation to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Winding,
    Analytic,
    Crossing,
    IntegralChi,
    Heat,
    ResolventPower,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Winding,
        Method::Analytic,
        Method::Crossing,
        Method::IntegralChi,
        Method::Heat,
        Method::ResolventPower,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Winding => "winding",
            Method::Analytic => "analytic",
            Method::Crossing => "crossing",
            Method::IntegralChi => "integral_chi",
            Method::Heat => "heat",
            Method::ResolventPower => "resolvent_power",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.iter().copied().find(|m| m.name() == s)
    }
}

/// Bounded normalizing function used by the χ-integral formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChiChoice {
    ChiE,
    ChiP { p: f64 },
    SmoothGap { eps: f64 },
}

impl ChiChoice {
    pub fn build(&self) -> Result<BoundedChi> {
        match *self {
            ChiChoice::ChiE => Ok(BoundedChi::chi_e()),
            ChiChoice::ChiP { p } => BoundedChi::chi_p(p),
            ChiChoice::SmoothGap { eps } => BoundedChi::smooth_gap(eps),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizationParams {
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodOptions {
    /// Gap width for the winding method; half the smallest endpoint margin when absent.
    pub winding_eps: Option<f64>,
    pub partition: usize,
    pub crossing: CrossingOptions,
    pub integral_chi: ChiChoice,
    pub resolvent_p: f64,
    /// Regularize non-invertible endpoints before running the methods.
    pub regularization: Option<RegularizationParams>,
}

impl Default for MethodOptions {
    fn default() -> Self {
        MethodOptions {
            winding_eps: None,
            partition: DEFAULT_PARTITION,
            crossing: CrossingOptions::default(),
            integral_chi: ChiChoice::ChiE,
            resolvent_p: 2.0,
            regularization: None,
        }
    }
}

/// Runs `methods` on `path` and collects a report.
pub fn compute(
    path: &OperatorPath,
    methods: &[Method],
    opts: &MethodOptions,
    quad: &QuadratureConfig,
) -> Result<SpectralFlowReport> {
    quad.validate()?;
    let mut report = SpectralFlowReport::new();
    let (path, offset) = match opts.regularization {
        Some(RegularizationParams { eps }) => {
            let r = regularize_endpoints(path, eps)?;
            report.corrections.insert("start".into(), r.correction_start);
            report.corrections.insert("end".into(), r.correction_end);
            report
                .diagnostics
                .insert("regularization".into(), json!({"eps": eps, "window_trace_start": r.window_trace_start, "window_trace_end": r.window_trace_end}));
            let c = r.total_correction();
            (r.path, c)
        }
        None => (path.clone(), 0.0),
    };
    let info = path.require_invertible_endpoints()?;
    report.diagnostics.insert(
        "endpoints".into(),
        json!({"margin_start": info.margin_start, "margin_end": info.margin_end}),
    );
    let mut sorted = methods.to_vec();
    sorted.sort();
    sorted.dedup();
    for m in sorted {
        let (value, diag) = match m {
            Method::Winding => {
                let chi = match opts.winding_eps {
                    Some(eps) => NormalizingFunction::smooth_gap(eps)?,
                    None => default_gap(&path)?,
                };
                let r = sf_winding(&path, &chi, quad)?;
                (r.value, serde_json::to_value(&r))
            }
            Method::Analytic => {
                let r = sf_analytic(&path, &uniform_partition(opts.partition))?;
                (r.value, serde_json::to_value(&r))
            }
            Method::Crossing => {
                let r = sf_crossing(&path, &opts.crossing)?;
                let d = json!({
                    "telescoping": r.telescoping,
                    "crossings": r.crossings.len(),
                    "tangencies": r.tangencies,
                });
                (r.value, Ok(d))
            }
            Method::IntegralChi => {
                let chi = opts.integral_chi.build()?;
                let r = crate::formulas::sf_integral_chi(&path.bounded_transform_path(), &chi, quad)?;
                (r.value, serde_json::to_value(&r))
            }
            Method::Heat => {
                let r = crate::formulas::sf_heat(&path, quad)?;
                (r.value, serde_json::to_value(&r))
            }
            Method::ResolventPower => {
                let r = crate::formulas::sf_resolvent_power(&path, opts.resolvent_p, quad)?;
                (r.value, serde_json::to_value(&r))
            }
        };
        let diag = diag.map_err(|e| Error::Consistency(e.to_string()))?;
        report.insert(m.name(), value - offset, diag);
    }
    Ok(report)
}

impl OperatorPath {
    /// `t ↦ F_{D_t}` with derivative by the divided-difference rule.
    pub fn bounded_transform_path(&self) -> OperatorPath {
        let bt = Arc::new(FunctionSpec::bounded_transform());
        let (p, p2, b2) = (self.clone(), self.clone(), bt.clone());
        let mut out = OperatorPath::new(self.algebra(), move |t| p.value(t)?.eigh()?.apply(&bt))
            .with_sided_derivative(move |t, side: Side| {
                let d = p2.value(t)?;
                let dot = p2.derivative(t, side)?.without_poles_of(&d);
                d.eigh()?.derivative(&b2, &dot)
            })
            .with_provenance(format!("bounded_transform({})", self.provenance()));
        out = out
            .with_breakpoints(self.breakpoints().to_vec())
            .expect("breakpoints already validated");
        out
    }
}
