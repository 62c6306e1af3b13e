//! The closed registry of model manifolds.
//!
//! Every model comes with a single semi-geodesic chart `(x¹, x̄)`: `x¹` is the
//! distance to the boundary (a signed latitude for the closed sphere) and `x̄`
//! is arc length along the boundary.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use super::{CurvatureTensor, SecondFundamentalForm};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Interval,
    Halfspace,
    Disk,
    Hemisphere,
    Ball3,
    Sphere2,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Interval,
        ModelKind::Halfspace,
        ModelKind::Disk,
        ModelKind::Hemisphere,
        ModelKind::Ball3,
        ModelKind::Sphere2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Interval => "interval",
            ModelKind::Halfspace => "halfspace",
            ModelKind::Disk => "disk",
            ModelKind::Hemisphere => "hemisphere",
            ModelKind::Ball3 => "ball3",
            ModelKind::Sphere2 => "sphere2",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            ModelKind::Interval => 1,
            ModelKind::Ball3 => 3,
            _ => 2,
        }
    }
}

/// A semi-geodesic chart: `g₁₁ = 1`, `g₁ⱼ = 0`.
///
/// `scale` is the length scale `c` (radius, or interval length); multiplying
/// it by `λ` multiplies the metric by `λ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiGeodesicChart {
    kind: ModelKind,
    scale: f64,
}

impl SemiGeodesicChart {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Whether `x` lies in the chart domain (including `x¹ = 0`).
    pub fn contains(&self, x: &[f64]) -> bool {
        let c = self.scale;
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self.kind {
            ModelKind::Interval => (0.0..=c).contains(&x[0]),
            ModelKind::Halfspace => x[0] >= 0.0,
            ModelKind::Disk => (0.0..c).contains(&x[0]),
            ModelKind::Hemisphere => (0.0..0.5 * PI * c).contains(&x[0]),
            ModelKind::Ball3 => (0.0..c).contains(&x[0]) && x[1].abs() < 0.5 * PI * c,
            ModelKind::Sphere2 => x[0].abs() < 0.5 * PI * c,
        }
    }

    /// The closed-form metric, evaluated without any domain check. Formulas
    /// extend analytically a little past `x¹ = 0`, which one-sided finite
    /// differences at the boundary rely on.
    pub fn raw_metric(&self, x: &[f64]) -> DMatrix<f64> {
        let c = self.scale;
        match self.kind {
            ModelKind::Interval => DMatrix::from_element(1, 1, 1.0),
            ModelKind::Halfspace => DMatrix::identity(2, 2),
            ModelKind::Disk => {
                let rho = (c - x[0]) / c;
                DMatrix::from_diagonal(&nalgebra::dvector![1.0, rho * rho])
            }
            ModelKind::Hemisphere | ModelKind::Sphere2 => {
                let cs = (x[0] / c).cos();
                DMatrix::from_diagonal(&nalgebra::dvector![1.0, cs * cs])
            }
            ModelKind::Ball3 => {
                let rho = (c - x[0]) / c;
                let cs = (x[1] / c).cos();
                DMatrix::from_diagonal(&nalgebra::dvector![
                    1.0,
                    rho * rho,
                    rho * rho * cs * cs
                ])
            }
        }
    }

    /// `√det g` in chart coordinates.
    pub fn volume_density(&self, x: &[f64]) -> f64 {
        self.raw_metric(x).determinant().sqrt()
    }

    /// The metric pulled back to the double: `g(|x¹|, x̄)`. Only models whose
    /// chart stops at the boundary have a nontrivial double here.
    pub fn doubled_metric(&self, x: &[f64]) -> DMatrix<f64> {
        if self.kind == ModelKind::Sphere2 {
            return self.raw_metric(x);
        }
        let mut y = x.to_vec();
        y[0] = y[0].abs();
        self.raw_metric(&y)
    }
}

/// Checked metric evaluation: `x` must be in the chart and `g` positive definite.
pub fn metric_at(chart: &SemiGeodesicChart, x: &[f64]) -> Result<DMatrix<f64>> {
    if !chart.contains(x) {
        return Err(Error::ChartDomain(x.to_vec()));
    }
    let g = chart.raw_metric(x);
    if g.clone().cholesky().is_none() {
        return Err(Error::ChartDomain(x.to_vec()));
    }
    Ok(g)
}

/// A registered model manifold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldModel {
    chart: SemiGeodesicChart,
}

impl ManifoldModel {
    /// Registered models at unit scale, in registry order.
    pub fn registry() -> Vec<ManifoldModel> {
        ModelKind::ALL
            .iter()
            .map(|&kind| ManifoldModel::new(kind))
            .collect()
    }

    /// Comma-separated registry names, for error messages.
    pub fn known_names() -> String {
        ModelKind::ALL
            .iter()
            .map(|k| k.name())
            .collect::<Vec<_>>()
            .join(", ")
    }

    pub fn new(kind: ModelKind) -> Self {
        ManifoldModel {
            chart: SemiGeodesicChart { kind, scale: 1.0 },
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        ModelKind::ALL
            .iter()
            .find(|k| k.name() == name)
            .map(|&k| ManifoldModel::new(k))
            .ok_or_else(|| Error::UnknownModel {
                name: name.to_string(),
                known: Self::known_names(),
            })
    }

    /// The same model with length scale `c` (metric multiplied by `c²`).
    pub fn with_scale(self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Invalid(format!("scale must be positive, got {c}")));
        }
        Ok(ManifoldModel {
            chart: SemiGeodesicChart {
                kind: self.chart.kind,
                scale: c,
            },
        })
    }

    pub fn chart(&self) -> &SemiGeodesicChart {
        &self.chart
    }

    pub fn kind(&self) -> ModelKind {
        self.chart.kind
    }

    pub fn name(&self) -> &'static str {
        self.chart.kind.name()
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn scale(&self) -> f64 {
        self.chart.scale
    }

    /// Known Euler characteristic; `None` for the non-compact half-space.
    pub fn euler_characteristic(&self) -> Option<i64> {
        match self.kind() {
            ModelKind::Halfspace => None,
            ModelKind::Sphere2 => Some(2),
            _ => Some(1),
        }
    }

    pub fn has_boundary(&self) -> bool {
        self.kind() != ModelKind::Sphere2
    }

    /// Constant sectional curvature of the interior.
    pub fn sectional_curvature(&self) -> f64 {
        match self.kind() {
            ModelKind::Hemisphere | ModelKind::Sphere2 => 1.0 / (self.scale() * self.scale()),
            _ => 0.0,
        }
    }

    /// Closed-form curvature in the orthonormal frame `F = L^{-T}` (`g = LLᵀ`),
    /// whose first vector is the inward normal `∂₁`.
    pub fn curvature_at(&self, x: &[f64]) -> Result<CurvatureTensor> {
        metric_at(&self.chart, x)?;
        Ok(CurvatureTensor::constant(self.dim(), self.sectional_curvature()))
    }

    /// Second fundamental form at the boundary point `(0, x̄)`, in an orthonormal
    /// tangential frame, from `-½ ∂₁ g_tan` (central differences, step `1e-5`).
    pub fn second_fundamental_form_at(&self, xbar: &[f64]) -> Result<SecondFundamentalForm> {
        if !self.has_boundary() {
            return Err(Error::Unsupported {
                model: self.name().into(),
                what: "a second fundamental form (no boundary)",
            });
        }
        let mut x = vec![0.0];
        x.extend_from_slice(xbar);
        metric_at(&self.chart, &x)?;
        Ok(super::second_fundamental_form_fd(&self.chart, xbar))
    }

    /// Closed-form Gaussian curvature of the boundary as a manifold in its own
    /// right; only meaningful when `dim ∂M ≥ 2`.
    pub fn boundary_intrinsic_curvature(&self) -> f64 {
        match self.kind() {
            ModelKind::Ball3 => 1.0 / (self.scale() * self.scale()),
            _ => 0.0,
        }
    }

    /// Total boundary measure (counting measure for the interval endpoints).
    /// `None` when the boundary has infinite measure.
    pub fn boundary_measure(&self) -> Option<f64> {
        let c = self.scale();
        match self.kind() {
            ModelKind::Interval => Some(2.0),
            ModelKind::Halfspace => None,
            ModelKind::Disk | ModelKind::Hemisphere => Some(2.0 * PI * c),
            ModelKind::Ball3 => Some(4.0 * PI * c * c),
            ModelKind::Sphere2 => Some(0.0),
        }
    }

    /// Coordinate box covering the interior up to measure zero; `None` if unbounded.
    pub fn interior_box(&self) -> Option<Vec<(f64, f64)>> {
        let c = self.scale();
        match self.kind() {
            ModelKind::Interval => Some(vec![(0.0, c)]),
            ModelKind::Halfspace => None,
            ModelKind::Disk => Some(vec![(0.0, c), (0.0, 2.0 * PI * c)]),
            ModelKind::Hemisphere => Some(vec![(0.0, 0.5 * PI * c), (0.0, 2.0 * PI * c)]),
            ModelKind::Ball3 => Some(vec![
                (0.0, c),
                (-0.5 * PI * c, 0.5 * PI * c),
                (0.0, 2.0 * PI * c),
            ]),
            ModelKind::Sphere2 => Some(vec![(-0.5 * PI * c, 0.5 * PI * c), (0.0, 2.0 * PI * c)]),
        }
    }

    /// The chart origin on the boundary (`x̄ = 0`).
    pub fn boundary_origin(&self) -> Vec<f64> {
        vec![0.0; self.dim() - 1]
    }
}
