//! Linear algebra on the alternating algebra `Λ*V` of a real vector space
//! `V = ℝ^d`.
//!
//! Every degree-preserving operator is stored block by block. Block `k` acts
//! on `Λ^k V` in the lexicographic basis of increasing multi-indices
//! `e_{i1} ∧ … ∧ e_{ik}`, `i1 < … < ik`. Index `0` is reserved for the inward
//! normal direction wherever a boundary is involved, so the normal projection
//! `P` keeps exactly the basis elements that contain `e_0`.
//!
//! The central facts exercised here are the two halves of Patodi's lemma: the
//! supertrace of a product of fewer than `d` derivation extensions vanishes,
//! and for exactly `d` factors it equals `(-1)^d` times the mixed coefficient
//! of `det(Σ x_i T_i)`.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Largest supported `dim V`; `Λ*V` has `2^d` dimensions.
pub const MAX_DIM: usize = 12;

fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        Err(Error::Dimension(d))
    } else {
        Ok(())
    }
}

/// Lexicographic basis of `Λ*ℝ^d`, with multi-indices stored as bitmasks.
#[derive(Debug)]
pub struct LexBasis {
    dim: usize,
    by_degree: Vec<Vec<u32>>,
    position: Vec<usize>,
}

static BASES: [OnceLock<LexBasis>; MAX_DIM + 1] = [const { OnceLock::new() }; MAX_DIM + 1];

impl LexBasis {
    /// Shared basis for `Λ*ℝ^d`. `d = 0` is allowed and yields the scalars.
    pub fn get(d: usize) -> &'static LexBasis {
        assert!(d <= MAX_DIM, "dimension {d} exceeds {MAX_DIM}");
        BASES[d].get_or_init(|| LexBasis::build(d))
    }

    fn build(d: usize) -> Self {
        let mut by_degree = Vec::with_capacity(d + 1);
        let mut position = vec![0; 1 << d];
        for k in 0..=d {
            let mut masks = Vec::new();
            let mut combo: Vec<usize> = (0..k).collect();
            loop {
                let mask = combo.iter().fold(0u32, |m, &i| m | (1 << i));
                position[mask as usize] = masks.len();
                masks.push(mask);
                // advance to the next combination in lexicographic order
                let mut i = k;
                while i > 0 && combo[i - 1] == d - k + i - 1 {
                    i -= 1;
                }
                if i == 0 {
                    break;
                }
                combo[i - 1] += 1;
                for j in i..k {
                    combo[j] = combo[j - 1] + 1;
                }
            }
            by_degree.push(masks);
        }
        LexBasis {
            dim: d,
            by_degree,
            position,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Basis masks of `Λ^k`, in lexicographic order.
    pub fn degree(&self, k: usize) -> &[u32] {
        &self.by_degree[k]
    }

    /// Position of `mask` inside its own degree block.
    pub fn position(&self, mask: u32) -> usize {
        self.position[mask as usize]
    }
}

/// Sign picked up when the factor `e_from` at its slot inside `rest ∪ {from}`
/// is replaced by `e_to` and moved to its sorted slot.
fn replacement_sign(rest: u32, from: usize, to: usize) -> f64 {
    let (lo, hi) = if from < to { (from, to) } else { (to, from) };
    let between = if hi - lo <= 1 {
        0
    } else {
        let window = ((1u32 << hi) - 1) & !((1u32 << (lo + 1)) - 1);
        (rest & window).count_ones()
    };
    if between % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// A linear map of `V = ℝ^d`, column convention: `T e_i = Σ_m T[m, i] e_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Endomorphism(DMatrix<f64>);

impl Endomorphism {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let d = matrix.nrows();
        check_dim(d)?;
        if matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: matrix.ncols(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("endomorphism"));
        }
        Ok(Endomorphism(matrix))
    }

    pub fn from_row_slice(d: usize, entries: &[f64]) -> Result<Self> {
        check_dim(d)?;
        if entries.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(d, d, entries))
    }

    pub fn identity(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(Endomorphism(DMatrix::identity(d, d)))
    }

    pub fn zeros(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(Endomorphism(DMatrix::zeros(d, d)))
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        check_dim(entries.len())?;
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(
            entries,
        )))
    }

    /// The rank-one map `e_j ↦ e_i`; its derivation extension is `e^i ∧ ι_j`.
    pub fn elementary(d: usize, i: usize, j: usize) -> Result<Self> {
        check_dim(d)?;
        let mut m = DMatrix::zeros(d, d);
        m[(i, j)] = 1.0;
        Ok(Endomorphism(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn scale(&self, s: f64) -> Endomorphism {
        Endomorphism(&self.0 * s)
    }

    /// `0 ⊕ self` on `ℝ ⊕ V`: prepends an inert normal direction at index 0.
    pub fn with_normal_direction(&self) -> Result<Endomorphism> {
        let d = self.dim() + 1;
        check_dim(d)?;
        let mut m = DMatrix::zeros(d, d);
        m.view_mut((1, 1), (d - 1, d - 1)).copy_from(&self.0);
        Ok(Endomorphism(m))
    }
}

impl Add for &Endomorphism {
    type Output = Endomorphism;
    fn add(self, rhs: &Endomorphism) -> Endomorphism {
        Endomorphism(&self.0 + &rhs.0)
    }
}

/// A degree-preserving linear map of `Λ*V`, one square block per degree.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedOperator {
    dim: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl GradedOperator {
    fn from_fn(d: usize, mut block: impl FnMut(usize, usize) -> DMatrix<f64>) -> Self {
        let basis = LexBasis::get(d);
        let blocks = (0..=d).map(|k| block(k, basis.degree(k).len())).collect();
        GradedOperator { dim: d, blocks }
    }

    /// Builds an operator from explicit blocks; block `k` must be `C(d,k)` square.
    pub fn from_blocks(d: usize, blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        if d > MAX_DIM {
            return Err(Error::Dimension(d));
        }
        if blocks.len() != d + 1 {
            return Err(Error::DimensionMismatch {
                expected: d + 1,
                found: blocks.len(),
            });
        }
        let basis = LexBasis::get(d);
        for (k, b) in blocks.iter().enumerate() {
            let n = basis.degree(k).len();
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: b.nrows().max(b.ncols()),
                });
            }
        }
        Ok(GradedOperator { dim: d, blocks })
    }

    pub fn identity(d: usize) -> Self {
        Self::from_fn(d, |_, n| DMatrix::identity(n, n))
    }

    pub fn zeros(d: usize) -> Self {
        Self::from_fn(d, |_, n| DMatrix::zeros(n, n))
    }

    /// Projection onto forms containing the normal covector `e_0`.
    pub fn normal_projection(d: usize) -> Self {
        let basis = LexBasis::get(d);
        Self::from_fn(d, |k, n| {
            let diag = basis
                .degree(k)
                .iter()
                .map(|&m| if m & 1 == 1 { 1.0 } else { 0.0 });
            DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, diag))
        })
    }

    /// Projection onto forms free of `e_0`; complements [`Self::normal_projection`].
    pub fn tangential_projection(d: usize) -> Self {
        let basis = LexBasis::get(d);
        Self::from_fn(d, |k, n| {
            let diag = basis
                .degree(k)
                .iter()
                .map(|&m| if m & 1 == 0 { 1.0 } else { 0.0 });
            DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, diag))
        })
    }

    /// The multiplicative extension `Λ^k T`, whose entries are `k × k` minors.
    /// This is how a change of frame (e.g. parallel transport) acts on forms.
    pub fn exterior_power(t: &Endomorphism) -> Self {
        let d = t.dim();
        let basis = LexBasis::get(d);
        let m = t.matrix();
        Self::from_fn(d, |k, n| {
            let masks = basis.degree(k);
            let mut block = DMatrix::zeros(n, n);
            if k == 0 {
                block[(0, 0)] = 1.0;
                return block;
            }
            let idx = |mask: u32| (0..d).filter(move |&i| mask & (1 << i) != 0);
            for (c, &cm) in masks.iter().enumerate() {
                for (r, &rm) in masks.iter().enumerate() {
                    let sub = DMatrix::from_fn(k, k, |a, b| {
                        let row = idx(rm).nth(a).unwrap();
                        let col = idx(cm).nth(b).unwrap();
                        m[(row, col)]
                    });
                    block[(r, c)] = sub.determinant();
                }
            }
            block
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block(&self, k: usize) -> &DMatrix<f64> {
        &self.blocks[k]
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    pub fn scale(&self, s: f64) -> Self {
        GradedOperator {
            dim: self.dim,
            blocks: self.blocks.iter().map(|b| b * s).collect(),
        }
    }

    /// `self ← self + s · other`, blockwise.
    pub fn add_scaled(&mut self, other: &GradedOperator, s: f64) {
        assert_eq!(self.dim, other.dim, "graded operators of different dimension");
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a += b * s;
        }
    }

    pub fn pow(&self, n: usize) -> Self {
        (0..n).fold(GradedOperator::identity(self.dim), |acc, _| &acc * self)
    }

    /// `Σ_k (-1)^k Tr(self|_{Λ^k})`.
    pub fn supertrace(&self) -> f64 {
        self.blocks
            .iter()
            .enumerate()
            .map(|(k, b)| if k % 2 == 0 { b.trace() } else { -b.trace() })
            .sum()
    }

    /// Largest absolute entry over all blocks.
    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl Mul for &GradedOperator {
    type Output = GradedOperator;
    fn mul(self, rhs: &GradedOperator) -> GradedOperator {
        assert_eq!(self.dim, rhs.dim, "graded operators of different dimension");
        GradedOperator {
            dim: self.dim,
            blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a * b).collect(),
        }
    }
}

impl Add for &GradedOperator {
    type Output = GradedOperator;
    fn add(self, rhs: &GradedOperator) -> GradedOperator {
        assert_eq!(self.dim, rhs.dim, "graded operators of different dimension");
        GradedOperator {
            dim: self.dim,
            blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &GradedOperator {
    type Output = GradedOperator;
    fn sub(self, rhs: &GradedOperator) -> GradedOperator {
        assert_eq!(self.dim, rhs.dim, "graded operators of different dimension");
        GradedOperator {
            dim: self.dim,
            blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Extends `T` to `Λ*V` as the derivation
/// `T(θ1 ∧ θ2) = (Tθ1) ∧ θ2 + θ1 ∧ (Tθ2)`.
pub fn extend_derivation(t: &Endomorphism) -> GradedOperator {
    let d = t.dim();
    let basis = LexBasis::get(d);
    let m = t.matrix();
    GradedOperator::from_fn(d, |k, n| {
        let mut block = DMatrix::zeros(n, n);
        for (col, &mask) in basis.degree(k).iter().enumerate() {
            for i in (0..d).filter(|&i| mask & (1 << i) != 0) {
                let rest = mask & !(1 << i);
                for target in 0..d {
                    let coef = m[(target, i)];
                    if coef == 0.0 || rest & (1 << target) != 0 {
                        continue;
                    }
                    let image = rest | (1 << target);
                    let sign = replacement_sign(rest, i, target);
                    block[(basis.position(image), col)] += sign * coef;
                }
            }
        }
        block
    })
}

/// Supertrace `Σ_k (-1)^k Tr(G|_{Λ^k V})`.
pub fn supertrace(g: &GradedOperator) -> f64 {
    g.supertrace()
}

/// Supertrace of `T_1 ∘ … ∘ T_l` (derivation extensions) by Patodi's lemma.
///
/// Returns exactly `0` for `l < d`. For `l = d` the mixed coefficient of
/// `x_1⋯x_d` in `det(Σ x_i T_i)` is extracted by inclusion-exclusion over the
/// `2^d` subsets of factors. Products longer than `d` are out of the lemma's
/// scope and rejected.
pub fn patodi_supertrace(ts: &[Endomorphism]) -> Result<f64> {
    let Some(first) = ts.first() else {
        return Err(Error::Invalid("empty factor list".into()));
    };
    let d = first.dim();
    if let Some(bad) = ts.iter().find(|t| t.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.dim(),
        });
    }
    let l = ts.len();
    if l > d {
        return Err(Error::PatodiScope { dim: d, len: l });
    }
    if l < d {
        return Ok(0.0);
    }
    let mut coefficient = 0.0;
    for subset in 0u32..(1 << l) {
        let mut sum = DMatrix::<f64>::zeros(d, d);
        for (i, t) in ts.iter().enumerate() {
            if subset & (1 << i) != 0 {
                sum += t.matrix();
            }
        }
        let sign = if (l - subset.count_ones() as usize).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        coefficient += sign * sum.determinant();
    }
    Ok(if d % 2 == 0 { coefficient } else { -coefficient })
}

/// An antisymmetric matrix of even order.
#[derive(Debug, Clone, PartialEq)]
pub struct AntisymmetricMatrix(DMatrix<f64>);

impl AntisymmetricMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.ncols(),
            });
        }
        if n % 2 == 1 {
            return Err(Error::OddDimension(n));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("antisymmetric matrix"));
        }
        for i in 0..n {
            for j in i..n {
                if matrix[(i, j)] != -matrix[(j, i)] {
                    return Err(Error::NotAntisymmetric(i, j));
                }
            }
        }
        Ok(AntisymmetricMatrix(matrix))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Commutative ring elements the Pfaffian expansion can run over.
pub trait PfaffianRing: Clone {
    fn zero_like(&self) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
}

impl PfaffianRing for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
}

/// Pfaffian of the antisymmetric array `entry(i, j)` of order `n` (even),
/// by expansion along the first remaining row.
pub fn pfaffian_expand<R: PfaffianRing>(n: usize, entry: &dyn Fn(usize, usize) -> R) -> R {
    fn go<R: PfaffianRing>(idx: &[usize], entry: &dyn Fn(usize, usize) -> R) -> Option<R> {
        if idx.is_empty() {
            return None; // empty product
        }
        let first = idx[0];
        let mut acc: Option<R> = None;
        for (pos, &j) in idx.iter().enumerate().skip(1) {
            let a = entry(first, j);
            let rest: Vec<usize> = idx[1..]
                .iter()
                .copied()
                .filter(|&k| k != j)
                .collect();
            let term = match go(&rest, entry) {
                Some(sub) => a.mul(&sub),
                None => a,
            };
            let term = if pos % 2 == 1 { term } else { term.neg() };
            acc = Some(match acc {
                Some(s) => s.add(&term),
                None => term,
            });
        }
        acc
    }
    assert!(n.is_multiple_of(2) && n > 0, "pfaffian needs positive even order");
    let idx: Vec<usize> = (0..n).collect();
    go(&idx, entry).expect("non-empty expansion")
}

/// `Pf(A)` with `Pf(A)² = det(A)`; the empty matrix has Pfaffian 1.
pub fn pfaffian(a: &AntisymmetricMatrix) -> f64 {
    let m = a.matrix();
    if m.nrows() == 0 {
        return 1.0;
    }
    pfaffian_expand(m.nrows(), &|i, j| m[(i, j)])
}

/// Curvature acting on forms as `Σ_r extend(A_r) ∘ extend(B_r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureAction {
    dim: usize,
    pairs: Vec<(Endomorphism, Endomorphism)>,
}

impl CurvatureAction {
    pub fn new(dim: usize, pairs: Vec<(Endomorphism, Endomorphism)>) -> Result<Self> {
        check_dim(dim)?;
        for (a, b) in &pairs {
            for e in [a, b] {
                if e.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: e.dim(),
                    });
                }
            }
        }
        Ok(CurvatureAction { dim, pairs })
    }

    /// The action `Σ_{ijkl} R_ijkl (e^i ∧ ι_j)(e^k ∧ ι_l)` of a curvature tensor
    /// given in an orthonormal frame, `r[((i·d + j)·d + k)·d + l] = R_ijkl`.
    pub fn from_riemann(dim: usize, r: &[f64]) -> Result<Self> {
        check_dim(dim)?;
        if r.len() != dim.pow(4) {
            return Err(Error::DimensionMismatch {
                expected: dim.pow(4),
                found: r.len(),
            });
        }
        let mut pairs = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                let b = DMatrix::from_fn(dim, dim, |k, l| r[((i * dim + j) * dim + k) * dim + l]);
                if b.iter().all(|v| *v == 0.0) {
                    continue;
                }
                pairs.push((Endomorphism::elementary(dim, i, j)?, Endomorphism::new(b)?));
            }
        }
        Ok(CurvatureAction { dim, pairs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pairs(&self) -> &[(Endomorphism, Endomorphism)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// `Σ_r extend(A_r) ∘ extend(B_r)`.
pub fn apply_curvature(omega: &CurvatureAction) -> GradedOperator {
    omega
        .pairs
        .iter()
        .fold(GradedOperator::zeros(omega.dim), |mut acc, (a, b)| {
            let term = &extend_derivation(a) * &extend_derivation(b);
            acc.add_scaled(&term, 1.0);
            acc
        })
}

/// An element of `Λ*ℝ^d` in the bitmask basis, with the wedge product.
/// Even forms commute, which is what the form-valued Pfaffian needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Form {
    dim: usize,
    coeffs: Vec<f64>,
}

impl Form {
    pub fn zero(dim: usize) -> Self {
        Form {
            dim,
            coeffs: vec![0.0; 1 << dim],
        }
    }

    /// `c · e^{i1} ∧ … ∧ e^{ik}` for the (not necessarily sorted) indices.
    pub fn monomial(dim: usize, indices: &[usize], c: f64) -> Self {
        let mut f = Form::zero(dim);
        let mut mask = 0u32;
        let mut sign = 1.0;
        for &i in indices {
            if mask & (1 << i) != 0 {
                return f;
            }
            // move e^i past the larger indices already present
            if (mask >> (i + 1)).count_ones() % 2 == 1 {
                sign = -sign;
            }
            mask |= 1 << i;
        }
        f.coeffs[mask as usize] = sign * c;
        f
    }

    pub fn coefficient(&self, mask: u32) -> f64 {
        self.coeffs[mask as usize]
    }

    /// Coefficient of `e^1 ∧ … ∧ e^d`.
    pub fn top_coefficient(&self) -> f64 {
        self.coeffs[(1usize << self.dim) - 1]
    }

    pub fn wedge(&self, other: &Form) -> Form {
        let mut out = Form::zero(self.dim);
        for (a, &ca) in self.coeffs.iter().enumerate() {
            if ca == 0.0 {
                continue;
            }
            for (b, &cb) in other.coeffs.iter().enumerate() {
                if cb == 0.0 || a & b != 0 {
                    continue;
                }
                // count pairs (i in a, j in b) with i > j
                let mut swaps = 0;
                let mut bb = b;
                while bb != 0 {
                    let j = bb.trailing_zeros();
                    swaps += (a >> (j + 1)).count_ones();
                    bb &= bb - 1;
                }
                let s = if swaps % 2 == 0 { 1.0 } else { -1.0 };
                out.coeffs[a | b] += s * ca * cb;
            }
        }
        out
    }
}

impl PfaffianRing for Form {
    fn zero_like(&self) -> Self {
        Form::zero(self.dim)
    }
    fn add(&self, other: &Self) -> Self {
        Form {
            dim: self.dim,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
    fn mul(&self, other: &Self) -> Self {
        self.wedge(other)
    }
    fn neg(&self) -> Self {
        Form {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }
}

impl Neg for &Form {
    type Output = Form;
    fn neg(self) -> Form {
        PfaffianRing::neg(self)
    }
}

/// Outcome of [`patodi_suite`]. Errors are relative to the product of the
/// factors' largest entries.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PatodiReport {
    pub tuples: usize,
    pub short_tuples: usize,
    pub full_tuples: usize,
    /// Largest `|str(T_1⋯T_l)| / scale` over tuples with `l < d`.
    pub max_short: f64,
    /// Largest `|patodi − direct| / scale` over tuples with `l = d`.
    pub max_full_error: f64,
    /// Largest spread of the direct supertrace over all orderings, `/ scale`.
    pub max_permutation_spread: f64,
}

impl PatodiReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_short <= tol && self.max_full_error <= tol && self.max_permutation_spread <= tol
    }
}

/// Supertrace of `extend(T_1) ∘ … ∘ extend(T_l)` by explicit composition.
pub fn composed_supertrace(ts: &[Endomorphism]) -> f64 {
    let d = ts[0].dim();
    ts.iter()
        .fold(GradedOperator::identity(d), |acc, t| &acc * &extend_derivation(t))
        .supertrace()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Random-tuple check of Patodi's lemma: `tuples` tuples with `d ∈ [2, 6]`,
/// `l ∈ [1, d]` and entries uniform in `[−1, 1)`. Short products must have
/// vanishing supertrace; full-length ones must match the determinant route and
/// be independent of the order of the factors.
pub fn patodi_suite(tuples: usize, seed: u64) -> Result<PatodiReport> {
    use rand::Rng;
    let mut rng = crate::stochastic::RngStream::new(seed, 0).rng();
    let mut report = PatodiReport {
        tuples,
        short_tuples: 0,
        full_tuples: 0,
        max_short: 0.0,
        max_full_error: 0.0,
        max_permutation_spread: 0.0,
    };
    for _ in 0..tuples {
        let d = rng.random_range(2..=6);
        let l = rng.random_range(1..=d);
        let ts: Vec<Endomorphism> = (0..l)
            .map(|_| Endomorphism::new(DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0))))
            .collect::<Result<_>>()?;
        let scale: f64 = ts.iter().map(|t| t.matrix().amax().max(f64::MIN_POSITIVE)).product();
        let direct = composed_supertrace(&ts);
        if l < d {
            report.short_tuples += 1;
            if patodi_supertrace(&ts)? != 0.0 {
                return Err(Error::Invalid("short Patodi supertrace was not exactly zero".into()));
            }
            report.max_short = report.max_short.max(direct.abs() / scale);
        } else {
            report.full_tuples += 1;
            let fast = patodi_supertrace(&ts)?;
            report.max_full_error = report.max_full_error.max((fast - direct).abs() / scale);
            let (mut lo, mut hi) = (direct, direct);
            for perm in permutations(l) {
                let v = composed_supertrace(&perm.iter().map(|&i| ts[i].clone()).collect::<Vec<_>>());
                lo = lo.min(v);
                hi = hi.max(v);
            }
            report.max_permutation_spread = report.max_permutation_spread.max((hi - lo) / scale);
        }
    }
    Ok(report)
}
