use std::sync::Arc;

use nalgebra::DMatrix;

use super::{same_algebra, Backend, CMat, FunctionSpec, Spectral, TracialAlgebra, C64};
use crate::error::{Error, Result};
use crate::tolerances::HERMITIAN_REL;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Data {
    Blocks(Vec<CMat>),
    Grid(Vec<C64>),
}

/// An element of a [`TracialAlgebra`].
///
/// Grid elements may carry pole markers (`±∞` values) inside paths; such elements
/// can be fed to the functional calculus but have no trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    alg: Arc<TracialAlgebra>,
    pub(crate) data: Data,
    hermitian: bool,
}

fn max_entry(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.norm()))
}

fn hermitian_deviation_of(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub(crate) fn symmetrize(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

impl Element {
    pub(crate) fn from_parts(alg: Arc<TracialAlgebra>, data: Data, hermitian: bool) -> Self {
        Element { alg, data, hermitian }
    }

    /// General element from per-block matrices.
    pub fn from_blocks(alg: &Arc<TracialAlgebra>, blocks: Vec<CMat>) -> Result<Self> {
        let dims = match alg.backend() {
            Backend::Blocks(b) => b,
            Backend::Grid { .. } => return Err(Error::Backend { expected: "blocks" }),
        };
        if dims.len() != blocks.len() {
            return Err(Error::Construction(format!(
                "expected {} blocks, got {}",
                dims.len(),
                blocks.len()
            )));
        }
        for (k, (b, m)) in dims.iter().zip(&blocks).enumerate() {
            if m.nrows() != b.dim || m.ncols() != b.dim {
                return Err(Error::Construction(format!(
                    "block {k} has shape {}x{}, expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    b.dim,
                    b.dim
                )));
            }
            if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::Construction(format!("block {k} has non-finite entries")));
            }
        }
        Ok(Element {
            alg: alg.clone(),
            data: Data::Blocks(blocks),
            hermitian: false,
        })
    }

    /// Hermitian element; inputs within the relative tolerance are symmetrized.
    pub fn hermitian(alg: &Arc<TracialAlgebra>, blocks: Vec<CMat>) -> Result<Self> {
        let e = Element::from_blocks(alg, blocks)?;
        e.into_hermitian()
    }

    /// Marks `self` Hermitian after checking and symmetrizing.
    pub fn into_hermitian(self) -> Result<Self> {
        if self.hermitian {
            return Ok(self);
        }
        let dev = self.hermitian_deviation();
        if dev > HERMITIAN_REL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let data = match self.data {
            Data::Blocks(b) => Data::Blocks(b.iter().map(symmetrize).collect()),
            Data::Grid(v) => Data::Grid(v.iter().map(|z| C64::new(z.re, 0.0)).collect()),
        };
        Ok(Element {
            alg: self.alg,
            data,
            hermitian: true,
        })
    }

    /// Real-valued (Hermitian) grid element.
    pub fn grid(alg: &Arc<TracialAlgebra>, values: &[f64]) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Construction("grid values must be finite".into()));
        }
        Element::grid_with_poles(alg, values)
    }

    /// Grid element that may contain `±∞` pole markers.
    pub fn grid_with_poles(alg: &Arc<TracialAlgebra>, values: &[f64]) -> Result<Self> {
        let n = alg
            .grid_points()
            .ok_or(Error::Backend { expected: "grid" })?
            .len();
        if values.len() != n {
            return Err(Error::Construction(format!("expected {n} grid values, got {}", values.len())));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Construction("grid values must not be NaN".into()));
        }
        Ok(Element {
            alg: alg.clone(),
            data: Data::Grid(values.iter().map(|&v| C64::new(v, 0.0)).collect()),
            hermitian: true,
        })
    }

    /// Complex-valued grid element (not Hermitian unless all values are real).
    pub fn grid_complex(alg: &Arc<TracialAlgebra>, values: Vec<C64>) -> Result<Self> {
        let n = alg
            .grid_points()
            .ok_or(Error::Backend { expected: "grid" })?
            .len();
        if values.len() != n {
            return Err(Error::Construction(format!("expected {n} grid values, got {}", values.len())));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Construction("grid values must be finite".into()));
        }
        let hermitian = values.iter().all(|v| v.im == 0.0);
        Ok(Element {
            alg: alg.clone(),
            data: Data::Grid(values),
            hermitian,
        })
    }

    /// Diagonal Hermitian element; `diag` lists entries across all blocks in order.
    pub fn diagonal(alg: &Arc<TracialAlgebra>, diag: &[f64]) -> Result<Self> {
        if diag.len() != alg.total_dim() {
            return Err(Error::Construction(format!(
                "expected {} diagonal entries, got {}",
                alg.total_dim(),
                diag.len()
            )));
        }
        match alg.backend() {
            Backend::Grid { .. } => Element::grid(alg, diag),
            Backend::Blocks(blocks) => {
                let mut off = 0;
                let mut out = Vec::with_capacity(blocks.len());
                for b in blocks {
                    let d = &diag[off..off + b.dim];
                    out.push(CMat::from_fn(b.dim, b.dim, |i, j| {
                        if i == j {
                            C64::new(d[i], 0.0)
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    }));
                    off += b.dim;
                }
                Element::hermitian(alg, out)
            }
        }
    }

    pub fn scalar(alg: &Arc<TracialAlgebra>, c: C64) -> Self {
        let data = match alg.backend() {
            Backend::Blocks(b) => Data::Blocks(
                b.iter()
                    .map(|b| CMat::identity(b.dim, b.dim) * c)
                    .collect(),
            ),
            Backend::Grid { points, .. } => Data::Grid(vec![c; points.len()]),
        };
        Element {
            alg: alg.clone(),
            data,
            hermitian: c.im == 0.0,
        }
    }

    pub fn identity(alg: &Arc<TracialAlgebra>) -> Self {
        Element::scalar(alg, C64::new(1.0, 0.0))
    }

    pub fn zero(alg: &Arc<TracialAlgebra>) -> Self {
        Element::scalar(alg, C64::new(0.0, 0.0))
    }

    pub fn algebra(&self) -> &Arc<TracialAlgebra> {
        &self.alg
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn blocks(&self) -> Option<&[CMat]> {
        match &self.data {
            Data::Blocks(b) => Some(b),
            Data::Grid(_) => None,
        }
    }

    pub fn grid_values(&self) -> Option<&[C64]> {
        match &self.data {
            Data::Grid(v) => Some(v),
            Data::Blocks(_) => None,
        }
    }

    /// Real parts of grid values.
    pub fn grid_real(&self) -> Option<Vec<f64>> {
        self.grid_values().map(|v| v.iter().map(|z| z.re).collect())
    }

    pub fn has_poles(&self) -> bool {
        match &self.data {
            Data::Grid(v) => v.iter().any(|z| z.re.is_infinite()),
            Data::Blocks(_) => false,
        }
    }

    /// Block-diagonal dense matrix of the whole element.
    pub fn to_dense(&self) -> CMat {
        let n = self.alg.total_dim();
        let mut out = CMat::zeros(n, n);
        match &self.data {
            Data::Blocks(b) => {
                let mut off = 0;
                for m in b {
                    out.view_mut((off, off), (m.nrows(), m.ncols())).copy_from(m);
                    off += m.nrows();
                }
            }
            Data::Grid(v) => {
                for (i, z) in v.iter().enumerate() {
                    out[(i, i)] = *z;
                }
            }
        }
        out
    }

    /// `max |A - A*|` relative to `max |A|` (0 for the zero element).
    pub fn hermitian_deviation(&self) -> f64 {
        match &self.data {
            Data::Blocks(b) => {
                let scale = b.iter().map(max_entry).fold(0.0, f64::max);
                let dev = b.iter().map(hermitian_deviation_of).fold(0.0, f64::max);
                if scale == 0.0 {
                    0.0
                } else {
                    dev / scale
                }
            }
            Data::Grid(v) => {
                let scale = v.iter().filter(|z| z.re.is_finite()).fold(0.0f64, |m, z| m.max(z.norm()));
                let dev = v.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
                if scale == 0.0 {
                    dev
                } else {
                    dev / scale
                }
            }
        }
    }

    fn zip_with(&self, other: &Element, f: impl Fn(&CMat, &CMat) -> CMat, g: impl Fn(C64, C64) -> C64) -> Result<Data> {
        same_algebra(&self.alg, &other.alg)?;
        Ok(match (&self.data, &other.data) {
            (Data::Blocks(a), Data::Blocks(b)) => Data::Blocks(a.iter().zip(b).map(|(x, y)| f(x, y)).collect()),
            (Data::Grid(a), Data::Grid(b)) => Data::Grid(a.iter().zip(b).map(|(x, y)| g(*x, *y)).collect()),
            _ => return Err(Error::AlgebraMismatch),
        })
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        let data = self.zip_with(other, |a, b| a + b, |a, b| a + b)?;
        Ok(Element::from_parts(self.alg.clone(), data, self.hermitian && other.hermitian))
    }

    pub fn sub(&self, other: &Element) -> Result<Element> {
        let data = self.zip_with(other, |a, b| a - b, |a, b| a - b)?;
        Ok(Element::from_parts(self.alg.clone(), data, self.hermitian && other.hermitian))
    }

    pub fn mul(&self, other: &Element) -> Result<Element> {
        let data = self.zip_with(other, |a, b| a * b, |a, b| a * b)?;
        let commutative = matches!(data, Data::Grid(_));
        Ok(Element::from_parts(
            self.alg.clone(),
            data,
            commutative && self.hermitian && other.hermitian,
        ))
    }

    pub fn scale(&self, c: f64) -> Element {
        self.scale_complex(C64::new(c, 0.0))
    }

    pub fn scale_complex(&self, c: C64) -> Element {
        let data = match &self.data {
            Data::Blocks(b) => Data::Blocks(b.iter().map(|m| m * c).collect()),
            Data::Grid(v) => Data::Grid(v.iter().map(|z| z * c).collect()),
        };
        Element::from_parts(self.alg.clone(), data, self.hermitian && c.im == 0.0)
    }

    /// `self + c·1`
    pub fn shift(&self, c: f64) -> Element {
        let data = match &self.data {
            Data::Blocks(b) => Data::Blocks(
                b.iter()
                    .map(|m| m + CMat::identity(m.nrows(), m.ncols()) * C64::new(c, 0.0))
                    .collect(),
            ),
            Data::Grid(v) => Data::Grid(v.iter().map(|z| z + c).collect()),
        };
        Element::from_parts(self.alg.clone(), data, self.hermitian)
    }

    pub fn adjoint(&self) -> Element {
        let data = match &self.data {
            Data::Blocks(b) => Data::Blocks(b.iter().map(|m| m.adjoint()).collect()),
            Data::Grid(v) => Data::Grid(v.iter().map(|z| z.conj()).collect()),
        };
        Element::from_parts(self.alg.clone(), data, self.hermitian)
    }

    /// Inverse; `t` only labels the error.
    pub fn inverse_at(&self, t: f64) -> Result<Element> {
        let data = match &self.data {
            Data::Blocks(b) => {
                let mut out = Vec::with_capacity(b.len());
                for m in b {
                    match m.clone().try_inverse() {
                        Some(inv) => out.push(inv),
                        None => return Err(Error::NonInvertible { t, sigma: 0.0 }),
                    }
                }
                Data::Blocks(out)
            }
            Data::Grid(v) => {
                if v.iter().any(|z| z.norm() == 0.0) {
                    return Err(Error::NonInvertible { t, sigma: 0.0 });
                }
                Data::Grid(v.iter().map(|z| z.inv()).collect())
            }
        };
        Ok(Element::from_parts(self.alg.clone(), data, self.hermitian))
    }

    pub fn inverse(&self) -> Result<Element> {
        self.inverse_at(f64::NAN)
    }

    fn check_finite(&self) -> Result<()> {
        if self.has_poles() {
            Err(Error::Pole("trace argument"))
        } else {
            Ok(())
        }
    }

    /// `τ(A)`
    pub fn trace(&self) -> Result<C64> {
        self.check_finite()?;
        let mut acc = C64::new(0.0, 0.0);
        match (&self.data, self.alg.backend()) {
            (Data::Blocks(b), Backend::Blocks(spec)) => {
                for (m, blk) in b.iter().zip(spec) {
                    acc += m.trace() * blk.weight;
                }
            }
            (Data::Grid(v), Backend::Grid { weights, .. }) => {
                for (z, w) in v.iter().zip(weights) {
                    acc += z * *w;
                }
            }
            _ => unreachable!("element data matches its algebra"),
        }
        Ok(acc)
    }

    /// `τ(AB)` without forming the product.
    pub fn trace_product(&self, other: &Element) -> Result<C64> {
        same_algebra(&self.alg, &other.alg)?;
        self.check_finite()?;
        other.check_finite()?;
        let mut acc = C64::new(0.0, 0.0);
        match (&self.data, &other.data, self.alg.backend()) {
            (Data::Blocks(a), Data::Blocks(b), Backend::Blocks(spec)) => {
                for ((x, y), blk) in a.iter().zip(b).zip(spec) {
                    let n = x.nrows();
                    let mut s = C64::new(0.0, 0.0);
                    for i in 0..n {
                        for j in 0..n {
                            s += x[(i, j)] * y[(j, i)];
                        }
                    }
                    acc += s * blk.weight;
                }
            }
            (Data::Grid(a), Data::Grid(b), Backend::Grid { weights, .. }) => {
                for ((x, y), w) in a.iter().zip(b).zip(weights) {
                    acc += x * y * *w;
                }
            }
            _ => return Err(Error::AlgebraMismatch),
        }
        Ok(acc)
    }

    /// Singular values paired with the trace weight of their block.
    pub fn weighted_singular_values(&self) -> Vec<(f64, f64)> {
        let weights = self.alg.block_list();
        match &self.data {
            Data::Blocks(b) => b
                .iter()
                .zip(&weights)
                .flat_map(|(m, &(_, c))| {
                    super::singular_values(m)
                        .iter()
                        .map(|&s| (s, c))
                        .collect::<Vec<_>>()
                })
                .collect(),
            Data::Grid(v) => v.iter().zip(&weights).map(|(z, &(_, w))| (z.norm(), w)).collect(),
        }
    }

    /// Operator norm.
    pub fn op_norm(&self) -> f64 {
        self.weighted_singular_values()
            .iter()
            .fold(0.0, |m, &(s, _)| m.max(s))
    }

    /// Smallest singular value.
    pub fn min_singular_value(&self) -> f64 {
        self.weighted_singular_values()
            .iter()
            .fold(f64::INFINITY, |m, &(s, _)| m.min(s))
    }

    /// `τ(|A|^p)^{1/p}`
    pub fn schatten(&self, p: f64) -> Result<f64> {
        self.check_finite()?;
        let s: f64 = self
            .weighted_singular_values()
            .iter()
            .map(|&(s, c)| c * s.powf(p))
            .sum();
        Ok(s.powf(1.0 / p))
    }

    /// `‖A‖₁ = ‖A‖ + τ(|A|)`
    pub fn l1_norm(&self) -> Result<f64> {
        self.lp_norm(1.0)
    }

    /// `‖A‖_p = τ(|A|^p)^{1/p} + ‖A‖`
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::Precondition(format!("lp_norm needs p ≥ 1, got {p}")));
        }
        Ok(self.schatten(p)? + self.op_norm())
    }

    /// `‖A − B‖` in operator norm.
    pub fn distance(&self, other: &Element) -> Result<f64> {
        Ok(self.sub(other)?.op_norm())
    }

    /// Largest entry-wise deviation, a cheap proxy for equality checks.
    pub fn max_entry_distance(&self, other: &Element) -> Result<f64> {
        same_algebra(&self.alg, &other.alg)?;
        Ok(match (&self.data, &other.data) {
            (Data::Blocks(a), Data::Blocks(b)) => a
                .iter()
                .zip(b)
                .map(|(x, y)| max_entry(&(x - y)))
                .fold(0.0, f64::max),
            (Data::Grid(a), Data::Grid(b)) => a.iter().zip(b).fold(0.0, |m, (x, y)| {
                if x == y {
                    m
                } else {
                    m.max((x - y).norm())
                }
            }),
            _ => return Err(Error::AlgebraMismatch),
        })
    }

    /// Zeroes entries at grid points where `reference` carries a pole marker.
    pub fn without_poles_of(&self, reference: &Element) -> Element {
        match (&self.data, &reference.data) {
            (Data::Grid(v), Data::Grid(r)) => {
                let v = v
                    .iter()
                    .zip(r)
                    .map(|(z, p)| if p.re.is_infinite() { C64::new(0.0, 0.0) } else { *z })
                    .collect();
                Element::from_parts(self.alg.clone(), Data::Grid(v), self.hermitian)
            }
            _ => self.clone(),
        }
    }

    /// Spectral decomposition of a Hermitian element.
    pub fn eigh(&self) -> Result<Spectral> {
        if !self.hermitian {
            return Err(Error::NotHermitian {
                deviation: self.hermitian_deviation(),
            });
        }
        Ok(Spectral::new(self))
    }

    /// `f(A)` for Hermitian `A`.
    pub fn apply(&self, f: &FunctionSpec) -> Result<Element> {
        self.eigh()?.apply(f)
    }

    /// `F_D = D(1 + D²)^{-1/2}`
    pub fn bounded_transform(&self) -> Result<Element> {
        self.apply(&FunctionSpec::bounded_transform())
    }

    /// Derivative of `t ↦ g(F_t)` given `F` and `Ḟ` (divided-difference rule).
    pub fn derivative_of_function(g: &FunctionSpec, f: &Element, fdot: &Element) -> Result<Element> {
        f.eigh()?.derivative(g, fdot)
    }

    /// Each block multiplied from the left and right by fixed matrices (used for conjugations).
    pub fn map_blocks(&self, f: impl Fn(usize, &CMat) -> CMat) -> Result<Element> {
        match &self.data {
            Data::Blocks(b) => {
                let out: Vec<CMat> = b.iter().enumerate().map(|(k, m)| f(k, m)).collect();
                Element::from_blocks(&self.alg, out)
            }
            Data::Grid(_) => Err(Error::Backend { expected: "blocks" }),
        }
    }

    /// Unitarity defect `max(‖U*U − 1‖, ‖UU* − 1‖)`.
    pub fn unitarity_defect(&self) -> f64 {
        match &self.data {
            Data::Blocks(b) => b
                .iter()
                .map(|m| {
                    let id = DMatrix::<C64>::identity(m.nrows(), m.ncols());
                    max_entry(&(m.adjoint() * m - &id)).max(max_entry(&(m * m.adjoint() - &id)))
                })
                .fold(0.0, f64::max),
            Data::Grid(v) => v.iter().fold(0.0, |m, z| m.max((z.norm_sqr() - 1.0).abs())),
        }
    }
}
