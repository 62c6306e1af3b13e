//! Semi-geodesic geometry of the model manifolds: metric derivatives, drift,
//! curvature, second fundamental form, parallel transport and the Gauss
//! equation.
//!
//! Conventions. `R_ijkl = ⟨R(∂_k, ∂_l)∂_j, ∂_i⟩`, so a space of constant
//! curvature `K` has `R_ijkl = K(g_ik g_jl − g_il g_jk)` and `R_1212 = K` in
//! an orthonormal frame. The normal is inward, and near the boundary the
//! tangential metric is `δ − 2H x¹ + O(|x|²)`; with this sign the unit disk has
//! `H = +1`.

mod model;
mod transport;

pub use model::{metric_at, ManifoldModel, ModelKind, SemiGeodesicChart};
pub use transport::{holonomy_angle, parallel_transport};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exterior::{CurvatureAction, Endomorphism};

/// Step for first derivatives of the metric (central differences).
pub const FD_STEP: f64 = 1e-5;

/// Step for the fourth-order stencil used when differentiating twice.
pub const FD_STEP_CURVATURE: f64 = 1e-3;

/// `σ_H` in `g_tan = δ + 2σ_H H x¹`.
pub const SIGMA_H: f64 = -1.0;

/// Sign in the Gauss equation `R̄_ijkl = R_ijkl + σ(H_ik H_jl − H_il H_jk)`.
pub const SIGMA_GAUSS: f64 = 1.0;

/// Riemann tensor at a point, stored `r[((i·d + j)·d + k)·d + l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTensor {
    dim: usize,
    r: Vec<f64>,
}

impl CurvatureTensor {
    pub fn new(dim: usize, r: Vec<f64>) -> Result<Self> {
        if r.len() != dim.pow(4) {
            return Err(Error::DimensionMismatch {
                expected: dim.pow(4),
                found: r.len(),
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("curvature tensor"));
        }
        Ok(CurvatureTensor { dim, r })
    }

    pub fn zero(dim: usize) -> Self {
        CurvatureTensor {
            dim,
            r: vec![0.0; dim.pow(4)],
        }
    }

    /// `K(δ_ik δ_jl − δ_il δ_jk)`.
    pub fn constant(dim: usize, k: f64) -> Self {
        let mut t = Self::zero(dim);
        for i in 0..dim {
            for j in 0..dim {
                if i != j {
                    t.set(i, j, i, j, k);
                    t.set(i, j, j, i, -k);
                }
            }
        }
        t
    }

    /// The algebraic curvature tensor `(A ⊙ B)_ijkl = A_ik B_jl + A_jl B_ik −
    /// A_il B_jk − A_jk B_il` of two symmetric matrices.
    pub fn kulkarni_nomizu(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Self {
        let d = a.nrows();
        let mut t = Self::zero(d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let v = a[(i, k)] * b[(j, l)] + a[(j, l)] * b[(i, k)]
                            - a[(i, l)] * b[(j, k)]
                            - a[(j, k)] * b[(i, l)];
                        t.set(i, j, k, l, v);
                    }
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[f64] {
        &self.r
    }

    fn idx(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.dim + j) * self.dim + k) * self.dim + l
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.r[self.idx(i, j, k, l)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        let n = self.idx(i, j, k, l);
        self.r[n] = v;
    }

    /// Largest violation of the algebraic symmetries: antisymmetry in each
    /// pair, pair symmetry and the first Bianchi identity.
    pub fn symmetry_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let r = self.get(i, j, k, l);
                        worst = worst
                            .max((r + self.get(j, i, k, l)).abs())
                            .max((r + self.get(i, j, l, k)).abs())
                            .max((r - self.get(k, l, i, j)).abs())
                            .max(
                                (r + self.get(i, k, l, j) + self.get(i, l, j, k)).abs(),
                            );
                    }
                }
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &CurvatureTensor) -> f64 {
        self.r
            .iter()
            .zip(&other.r)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Restriction to the indices `1..d` (drops the normal direction 0).
    pub fn tangential(&self) -> CurvatureTensor {
        let d = self.dim - 1;
        let mut t = CurvatureTensor::zero(d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        t.set(i, j, k, l, self.get(i + 1, j + 1, k + 1, l + 1));
                    }
                }
            }
        }
        t
    }

    /// Components in the frame whose vectors are the columns of `f`.
    pub fn in_frame(&self, f: &DMatrix<f64>) -> CurvatureTensor {
        let d = self.dim;
        // contract one index at a time
        let mut cur = self.r.clone();
        for slot in 0..4 {
            let mut next = vec![0.0; cur.len()];
            let stride = d.pow(3 - slot as u32);
            for (n, out) in next.iter_mut().enumerate() {
                let a = (n / stride) % d;
                let base = n - a * stride;
                *out = (0..d).map(|m| cur[base + m * stride] * f[(m, a)]).sum();
            }
            cur = next;
        }
        CurvatureTensor { dim: d, r: cur }
    }

    /// The curvature operator on forms, `Σ_ijkl R_ijkl (e^i∧ι_j)(e^k∧ι_l)`.
    pub fn action(&self) -> Result<CurvatureAction> {
        CurvatureAction::from_riemann(self.dim, &self.r)
    }
}

/// Second fundamental form of the boundary in an orthonormal tangential frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondFundamentalForm(DMatrix<f64>);

impl SecondFundamentalForm {
    pub fn new(h: DMatrix<f64>) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::DimensionMismatch {
                expected: h.nrows(),
                found: h.ncols(),
            });
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("second fundamental form"));
        }
        let sym = (&h + h.transpose()) * 0.5;
        Ok(SecondFundamentalForm(sym))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// `0 ⊕ H` on `ℝ ⊕ T∂M`, as an endomorphism of the ambient fibre.
    pub fn ambient(&self) -> Result<Endomorphism> {
        if self.dim() == 0 {
            return Endomorphism::zeros(1);
        }
        Endomorphism::new(self.0.clone())?.with_normal_direction()
    }
}

/// Orthonormal frame `F = L^{-T}` for `g = LLᵀ`; `Fᵀ g F = I`.
pub fn orthonormal_frame(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let l = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Invalid("metric is not positive definite".into()))?
        .l();
    let linv = l
        .try_inverse()
        .ok_or_else(|| Error::Invalid("singular metric".into()))?;
    Ok(linv.transpose())
}

fn shifted(x: &[f64], axis: usize, h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[axis] += h;
    y
}

/// `∂_axis f` by central differences with step `h`.
fn central<F: Fn(&[f64]) -> DMatrix<f64>>(f: &F, x: &[f64], axis: usize, h: f64) -> DMatrix<f64> {
    (f(&shifted(x, axis, h)) - f(&shifted(x, axis, -h))) / (2.0 * h)
}

/// `∂_axis f` by the five-point stencil with step `h`.
fn central4<F: Fn(&[f64]) -> DMatrix<f64>>(f: &F, x: &[f64], axis: usize, h: f64) -> DMatrix<f64> {
    let p1 = f(&shifted(x, axis, h));
    let m1 = f(&shifted(x, axis, -h));
    let p2 = f(&shifted(x, axis, 2.0 * h));
    let m2 = f(&shifted(x, axis, -2.0 * h));
    ((p1 - m1) * 8.0 - (p2 - m2)) / (12.0 * h)
}

/// Christoffel symbols `Γ^i_jk`, returned as `gamma[i][(j, k)]`.
fn christoffel_with<F>(metric: &F, x: &[f64], deriv: &dyn Fn(&F, &[f64], usize) -> DMatrix<f64>) -> Vec<DMatrix<f64>>
where
    F: Fn(&[f64]) -> DMatrix<f64>,
{
    let d = x.len();
    let ginv = metric(x).try_inverse().expect("metric invertible in chart");
    let dg: Vec<DMatrix<f64>> = (0..d).map(|a| deriv(metric, x, a)).collect();
    (0..d)
        .map(|i| {
            DMatrix::from_fn(d, d, |j, k| {
                0.5 * (0..d)
                    .map(|l| ginv[(i, l)] * (dg[j][(l, k)] + dg[k][(l, j)] - dg[l][(j, k)]))
                    .sum::<f64>()
            })
        })
        .collect()
}

/// Christoffel symbols of the chart metric at `x`, `gamma[i][(j, k)] = Γ^i_jk`.
pub fn christoffel(chart: &SemiGeodesicChart, x: &[f64]) -> Vec<DMatrix<f64>> {
    let metric = |y: &[f64]| chart.raw_metric(y);
    christoffel_with(&metric, x, &|f, y, a| central(f, y, a, FD_STEP))
}

/// Drift `bⁱ = (det g)^{-1/2} ∂_j((det g)^{1/2} g^{ji})` of the Laplace-Beltrami
/// operator on the double, so that `Δ = g^{ij}∂_i∂_j + bⁱ∂_i`. The doubled metric
/// `g(|x¹|, x̄)` makes `b¹` odd under `x¹ ↦ −x¹`.
pub fn drift_b(chart: &SemiGeodesicChart, x: &[f64]) -> Result<DVector<f64>> {
    let d = chart.dim();
    if x.len() != d || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::ChartDomain(x.to_vec()));
    }
    let mut y = x.to_vec();
    y[0] = y[0].abs();
    if !chart.contains(&y) {
        return Err(Error::ChartDomain(x.to_vec()));
    }
    let weighted = |p: &[f64]| {
        let g = chart.doubled_metric(p);
        let sqrt_det = g.determinant().sqrt();
        g.try_inverse().expect("metric invertible in chart") * sqrt_det
    };
    let sqrt_det = chart.doubled_metric(x).determinant().sqrt();
    let mut b = DVector::zeros(d);
    for j in 0..d {
        let dj = central(&weighted, x, j, FD_STEP);
        for i in 0..d {
            b[i] += dj[(j, i)];
        }
    }
    let b = b / sqrt_det;
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("drift"));
    }
    Ok(b)
}

/// Riemann tensor from the chart metric by finite differences, in the
/// orthonormal frame of [`orthonormal_frame`]. Both derivative levels use the
/// five-point stencil.
pub fn curvature_fd(chart: &SemiGeodesicChart, x: &[f64]) -> Result<CurvatureTensor> {
    let g = metric_at(chart, x)?;
    let d = chart.dim();
    let h = FD_STEP_CURVATURE;
    let metric = |y: &[f64]| chart.raw_metric(y);
    let deriv = |f: &_, y: &[f64], a| central4(f, y, a, h);
    let gamma_at = |y: &[f64]| christoffel_with(&metric, y, &deriv);
    let gamma = gamma_at(x);
    // dgamma[a][i] = ∂_a Γ^i
    let dgamma: Vec<Vec<DMatrix<f64>>> = (0..d)
        .map(|a| {
            let p1 = gamma_at(&shifted(x, a, h));
            let m1 = gamma_at(&shifted(x, a, -h));
            let p2 = gamma_at(&shifted(x, a, 2.0 * h));
            let m2 = gamma_at(&shifted(x, a, -2.0 * h));
            (0..d)
                .map(|i| ((&p1[i] - &m1[i]) * 8.0 - (&p2[i] - &m2[i])) / (12.0 * h))
                .collect()
        })
        .collect();
    // R^i_jkl = ∂_k Γ^i_lj − ∂_l Γ^i_kj + Γ^i_km Γ^m_lj − Γ^i_lm Γ^m_kj
    let mut up = vec![0.0; d.pow(4)];
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let mut v = dgamma[k][i][(l, j)] - dgamma[l][i][(k, j)];
                    for m in 0..d {
                        v += gamma[i][(k, m)] * gamma[m][(l, j)] - gamma[i][(l, m)] * gamma[m][(k, j)];
                    }
                    up[((i * d + j) * d + k) * d + l] = v;
                }
            }
        }
    }
    let mut down = CurvatureTensor::zero(d);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let v = (0..d)
                        .map(|m| g[(i, m)] * up[((m * d + j) * d + k) * d + l])
                        .sum();
                    down.set(i, j, k, l, v);
                }
            }
        }
    }
    Ok(down.in_frame(&orthonormal_frame(&g)?))
}

/// `H = −½ ∂₁ g_tan` at `(0, x̄)`, transformed to an orthonormal tangential frame.
pub(crate) fn second_fundamental_form_fd(chart: &SemiGeodesicChart, xbar: &[f64]) -> SecondFundamentalForm {
    let d = chart.dim();
    let mut x = vec![0.0];
    x.extend_from_slice(xbar);
    if d == 1 {
        return SecondFundamentalForm(DMatrix::zeros(0, 0));
    }
    let tan = |y: &[f64]| chart.raw_metric(y).view((1, 1), (d - 1, d - 1)).into_owned();
    let dg = central(&tan, &x, 0, FD_STEP);
    let h_coord = dg * (0.5 * SIGMA_H);
    let f = orthonormal_frame(&tan(&x)).expect("tangential metric positive definite");
    SecondFundamentalForm::new(f.transpose() * h_coord * f).expect("finite second fundamental form")
}

/// Gauss equation: curvature of the boundary from the ambient curvature
/// (normal index 0) and the second fundamental form.
pub fn gauss_codazzi_restrict(r: &CurvatureTensor, h: &SecondFundamentalForm) -> Result<CurvatureTensor> {
    let d = r.dim();
    if h.dim() + 1 != d {
        return Err(Error::DimensionMismatch {
            expected: d - 1,
            found: h.dim(),
        });
    }
    let mut bar = r.tangential();
    let hm = h.matrix();
    for i in 0..d - 1 {
        for j in 0..d - 1 {
            for k in 0..d - 1 {
                for l in 0..d - 1 {
                    let v = bar.get(i, j, k, l)
                        + SIGMA_GAUSS * (hm[(i, k)] * hm[(j, l)] - hm[(i, l)] * hm[(j, k)]);
                    bar.set(i, j, k, l, v);
                }
            }
        }
    }
    Ok(bar)
}
