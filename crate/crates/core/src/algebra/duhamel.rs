use std::f64::consts::PI;

use super::element::Data;
use super::{CMat, Element, FunctionSpec, C64};
use crate::error::{Error, Result};
use crate::quad::{integrate, QuadratureConfig};

/// A function `g(x) = ∫ ĝ(λ) e^{iλx} dλ` with known or computable Fourier data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FourierData {
    /// `g(x) = e^{-a x²}`, `ĝ(λ) = (4πa)^{-1/2} e^{-λ²/4a}`.
    Gaussian { a: f64 },
    /// `g(x) = (1 - (x/R)²)^n` on `|x| < R`, zero outside; `ĝ` by numerical quadrature.
    PolyBump { radius: f64, order: u32 },
}

impl FourierData {
    pub fn bump() -> Self {
        FourierData::PolyBump {
            radius: 1.25,
            order: 12,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            FourierData::Gaussian { a } if a > 0.0 && a.is_finite() => Ok(()),
            FourierData::PolyBump { radius, order } if radius > 0.0 && order >= 4 => Ok(()),
            _ => Err(Error::Precondition(format!("invalid Fourier data {self:?}"))),
        }
    }

    pub fn function(&self) -> FunctionSpec {
        match *self {
            FourierData::Gaussian { a } => FunctionSpec::real(format!("gaussian({a})"), move |x| (-a * x * x).exp())
                .with_real_derivative(move |x| -2.0 * a * x * (-a * x * x).exp())
                .with_limits(0.0, 0.0),
            FourierData::PolyBump { radius, order } => {
                let n = order as i32;
                FunctionSpec::real(format!("poly_bump({radius},{order})"), move |x| {
                    let s = 1.0 - (x / radius).powi(2);
                    if s > 0.0 {
                        s.powi(n)
                    } else {
                        0.0
                    }
                })
                .with_real_derivative(move |x| {
                    let s = 1.0 - (x / radius).powi(2);
                    if s > 0.0 {
                        -2.0 * n as f64 * x / (radius * radius) * s.powi(n - 1)
                    } else {
                        0.0
                    }
                })
                .with_limits(0.0, 0.0)
            }
        }
    }

    /// `ĝ(λ)`; both families are even and real.
    pub fn transform(&self, lambda: f64) -> Result<f64> {
        match *self {
            FourierData::Gaussian { a } => Ok((4.0 * PI * a).powf(-0.5) * (-lambda * lambda / (4.0 * a)).exp()),
            FourierData::PolyBump { radius, order } => {
                let n = order as i32;
                let cfg = QuadratureConfig {
                    abs_tol: 1e-15,
                    max_depth: 30,
                    min_panels: 16 + (lambda.abs() * radius) as usize,
                    ..Default::default()
                };
                let r = integrate(&cfg, &[0.0, radius], 0, |x, _| {
                    Ok((1.0 - (x / radius).powi(2)).powi(n) * (lambda * x).cos())
                })?;
                Ok(r.value / PI)
            }
        }
    }

    /// Bound on `∫_{|λ|>Λ} |λ ĝ(λ)| dλ`.
    fn tail_mass(&self, cut: f64) -> f64 {
        match *self {
            FourierData::Gaussian { a } => 4.0 * a * (4.0 * PI * a).powf(-0.5) * (-cut * cut / (4.0 * a)).exp(),
            FourierData::PolyBump { radius, order } => {
                // Leading asymptotics |ĝ(λ)| ≲ n! 2^n / (π R^n λ^{n+1}) from the jump of g^{(n)} at ±R,
                // inflated by 10.
                let n = order as f64;
                let lead = libm::tgamma(n + 1.0) * 2f64.powf(n) / (PI * radius.powf(n));
                let asymptotic_from = 2.0 * n / radius;
                if cut < asymptotic_from {
                    return f64::INFINITY;
                }
                10.0 * 2.0 * lead / ((n - 1.0) * cut.powf(n - 1.0))
            }
        }
    }

    fn cutoff(&self, target: f64) -> f64 {
        let mut cut = 1.0;
        while self.tail_mass(cut) > target {
            cut *= 1.1;
        }
        cut
    }
}

#[derive(Debug, Clone)]
pub struct DuhamelResult {
    pub value: Element,
    pub error_estimate: f64,
    pub lambda_cutoff: f64,
    pub evaluations: usize,
}

/// `d/dt g(F_t) = ∫∫ iλ ĝ(λ) e^{i(1-u)λF} Ḟ e^{iuλF} du dλ` by nested quadrature,
/// evaluated in the eigenbasis of `F`.
pub fn duhamel_derivative(
    g: &FourierData,
    f: &Element,
    fdot: &Element,
    quad: &QuadratureConfig,
) -> Result<DuhamelResult> {
    g.validate()?;
    quad.validate()?;
    crate::algebra::same_algebra(f.algebra(), fdot.algebra())?;
    let norm = f.op_norm();
    if norm > 1.0 + 1e-12 {
        return Err(Error::Precondition(format!("duhamel_derivative needs ‖F‖ ≤ 1, got {norm}")));
    }
    let spec = f.eigh()?;
    let vals = spec.block_eigenvalues();
    let vecs: Vec<CMat> = match spec.eigenvectors() {
        Some(v) => v.into_iter().cloned().collect(),
        None => vals.iter().map(|_| CMat::identity(1, 1)).collect(),
    };
    let dots: Vec<CMat> = match &fdot.data {
        Data::Blocks(b) => b.clone(),
        Data::Grid(v) => v.iter().map(|z| CMat::from_element(1, 1, *z)).collect(),
    };
    let m: Vec<CMat> = vecs
        .iter()
        .zip(&dots)
        .map(|(v, d)| v.adjoint() * d * v)
        .collect();
    let dot_norm = fdot.op_norm().max(1e-300);
    let cut = g.cutoff(quad.truncation_factor * quad.abs_tol / dot_norm);
    let outer_tol = quad.abs_tol * (1.0 - quad.truncation_factor);
    let outer = QuadratureConfig {
        abs_tol: outer_tol,
        ..quad.clone()
    };
    let mut inner_evals = 0usize;
    let inner_error = std::cell::Cell::new(0.0f64);
    let panels = (2.0 * cut).ceil() as usize;
    let r = integrate(&outer, &[-cut, 0.0, cut], panels, |lam, _| {
        let weight = C64::new(0.0, lam * g.transform(lam)?);
        if weight.norm() == 0.0 {
            return Ok(m.iter().map(|b| CMat::zeros(b.nrows(), b.ncols())).collect::<Vec<_>>());
        }
        let tol = 0.1 * outer_tol / (weight.norm() * 2.0 * cut);
        let inner = QuadratureConfig {
            abs_tol: tol,
            min_panels: 4 + (lam.abs() * 2.0 * norm) as usize,
            ..quad.clone()
        };
        let ir = integrate(&inner, &[0.0, 1.0], 0, |u, _| {
            Ok(m.iter()
                .zip(&vals)
                .map(|(mb, lv)| {
                    CMat::from_fn(mb.nrows(), mb.ncols(), |j, k| {
                        let phase = (1.0 - u) * lam * lv[j] + u * lam * lv[k];
                        mb[(j, k)] * C64::from_polar(1.0, phase)
                    })
                })
                .collect::<Vec<_>>())
        })?;
        inner_evals += ir.evaluations;
        inner_error.set(inner_error.get() + ir.error_estimate * weight.norm());
        Ok(ir.value.iter().map(|b| b * weight).collect())
    })?;
    let blocks: Vec<CMat> = r
        .value
        .iter()
        .zip(&vecs)
        .map(|(b, v)| v * b * v.adjoint())
        .collect();
    let value = if f.algebra().is_grid() {
        let vals: Vec<C64> = blocks.iter().map(|b| b[(0, 0)]).collect();
        Element::grid_complex(f.algebra(), vals)?
    } else {
        Element::from_blocks(f.algebra(), blocks)?
    };
    Ok(DuhamelResult {
        value,
        error_estimate: r.error_estimate + quad.truncation_factor * quad.abs_tol,
        lambda_cutoff: cut,
        evaluations: r.evaluations + inner_evals,
    })
}
