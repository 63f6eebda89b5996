//! Cauchy-Green strain tensor `C = DFᵀ DF` and its eigen-structure.

use alloc::vec::Vec;

use crate::flowmap::{deformation_gradient, FlowMapGrid};
use crate::geometry::{diff_of_products, Mat2, Point};
use crate::grid::GridSpec;
use crate::par;

/// Relative gap `(λ₂ − λ₁) / λ₂` below which a tensor counts as isotropic.
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;

/// Symmetric 2×2 tensor `[[c11, c12], [c12, c22]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymTensor {
    pub c11: f64,
    pub c12: f64,
    pub c22: f64,
}

impl SymTensor {
    pub const IDENTITY: SymTensor = SymTensor { c11: 1.0, c12: 0.0, c22: 1.0 };

    pub const fn new(c11: f64, c12: f64, c22: f64) -> Self {
        SymTensor { c11, c12, c22 }
    }

    pub fn det(&self) -> f64 {
        diff_of_products(self.c11, self.c22, self.c12, self.c12)
    }

    pub fn trace(&self) -> f64 {
        self.c11 + self.c22
    }

    #[inline]
    pub fn apply(&self, v: Point) -> Point {
        Point::new(self.c11 * v.x + self.c12 * v.y, self.c12 * v.x + self.c22 * v.y)
    }

    /// `⟨v, C v⟩`.
    #[inline]
    pub fn quadratic_form(&self, v: Point) -> f64 {
        v.dot(self.apply(v))
    }

    /// Bilinear blend of four corner tensors ordered `[00, 10, 01, 11]`.
    #[inline]
    pub fn bilinear(c: &[SymTensor; 4], s: f64, t: f64) -> SymTensor {
        let w = [(1.0 - s) * (1.0 - t), s * (1.0 - t), (1.0 - s) * t, s * t];
        let mut out = SymTensor::new(0.0, 0.0, 0.0);
        for (ci, wi) in c.iter().zip(w) {
            out.c11 += wi * ci.c11;
            out.c12 += wi * ci.c12;
            out.c22 += wi * ci.c22;
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.c11.is_finite() && self.c12.is_finite() && self.c22.is_finite()
    }
}

/// `C = DFᵀ DF`.
pub fn cg_from_gradient(df: &Mat2) -> SymTensor {
    SymTensor {
        c11: df.a * df.a + df.c * df.c,
        c12: df.a * df.b + df.c * df.d,
        c22: df.b * df.b + df.d * df.d,
    }
}

/// Eigen-decomposition of a symmetric positive-definite tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Unit eigenvector of `λ₁`, upper half-plane representative.
    pub xi1: Point,
    /// Unit eigenvector of `λ₂`, upper half-plane representative.
    pub xi2: Point,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum EigenError {
    #[error("tensor is not positive definite (c11 = {c11}, det = {det})")]
    NotPositiveDefinite { c11: f64, det: f64 },
}

/// Representative of the line spanned by `v` lying in the closed upper
/// half-plane, horizontal lines pointing to `+x`.
#[inline]
pub fn upper_half_plane(v: Point) -> Point {
    let flip = v.y < 0.0 || (v.y == 0.0 && v.x < 0.0);
    let w = if flip { -v } else { v };
    // normalise -0.0
    Point::new(w.x + 0.0, w.y + 0.0)
}

/// Closed-form eigensolve of a symmetric positive-definite 2×2 tensor.
pub fn eigen_decompose(c: &SymTensor) -> Result<Eigen, EigenError> {
    eigen_with_det(c, c.det())
}

/// Same as [`eigen_decompose`], with `det C` supplied by the caller (e.g.
/// as `det(DF)²`, which is free of the cancellation `c11 c22 − c12²`
/// suffers for strongly stretched tensors).
pub(crate) fn eigen_with_det(c: &SymTensor, det: f64) -> Result<Eigen, EigenError> {
    if !(c.c11 > 0.0) || !(det > 0.0) || !c.is_finite() || !det.is_finite() {
        return Err(EigenError::NotPositiveDefinite { c11: c.c11, det });
    }
    let half_diff = 0.5 * (c.c11 - c.c22);
    let radius = libm::hypot(half_diff, c.c12);
    let mean = 0.5 * (c.c11 + c.c22);
    let lambda2 = mean + radius;
    let lambda1 = det / lambda2;
    // (λ2 − c22, c12) and (c12, λ2 − c11) both span the λ2 eigenspace; pick
    // the one free of cancellation
    let v = if half_diff >= 0.0 { Point::new(radius + half_diff, c.c12) } else { Point::new(c.c12, radius - half_diff) };
    let v = v.normalized().unwrap_or(Point::new(1.0, 0.0));
    let xi2 = upper_half_plane(v);
    let xi1 = upper_half_plane(v.perp());
    let degenerate = lambda2 - lambda1 < DEGENERACY_THRESHOLD * lambda2;
    Ok(Eigen { lambda1, lambda2, xi1, xi2, degenerate })
}

/// Per-node Cauchy-Green tensor on the flow-map grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricTensorField {
    pub grid: GridSpec,
    pub tensors: Vec<SymTensor>,
    pub valid: Vec<bool>,
}

impl SymmetricTensorField {
    pub fn new(grid: GridSpec, tensors: Vec<SymTensor>, valid: Vec<bool>) -> Self {
        assert_eq!(grid.len(), tensors.len());
        assert_eq!(grid.len(), valid.len());
        SymmetricTensorField { grid, tensors, valid }
    }

    /// Evaluate `f(x, y)` at every node; non-finite or non-positive-definite
    /// results are masked.
    pub fn from_fn(grid: GridSpec, f: impl Fn(Point) -> SymTensor) -> Self {
        let tensors: Vec<SymTensor> = (0..grid.len())
            .map(|k| {
                let (i, j) = grid.ij(k);
                f(grid.node(i, j))
            })
            .collect();
        let valid = tensors.iter().map(|t| t.is_finite() && t.c11 > 0.0 && t.det() > 0.0).collect();
        SymmetricTensorField { grid, tensors, valid }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> SymTensor {
        self.tensors[self.grid.index(i, j)]
    }

    #[inline]
    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.valid[self.grid.index(i, j)]
    }

    /// The four corner tensors of the cell holding `p`, with local
    /// coordinates. `None` outside the grid or if a corner is masked.
    #[inline]
    pub fn cell(&self, p: Point) -> Option<(usize, usize, [SymTensor; 4], f64, f64)> {
        let (i, j, s, t) = self.grid.locate(p)?;
        let idx = [self.grid.index(i, j), self.grid.index(i + 1, j), self.grid.index(i, j + 1), self.grid.index(i + 1, j + 1)];
        if idx.iter().any(|&k| !self.valid[k]) {
            return None;
        }
        Some((i, j, idx.map(|k| self.tensors[k]), s, t))
    }

    /// Bilinearly interpolated tensor.
    #[inline]
    pub fn interpolate(&self, p: Point) -> Option<SymTensor> {
        let (_, _, c, s, t) = self.cell(p)?;
        Some(SymTensor::bilinear(&c, s, t))
    }
}

/// Eigenvalue and eigenvector fields matching a [`SymmetricTensorField`].
#[derive(Debug, Clone, PartialEq)]
pub struct EigenField {
    pub grid: GridSpec,
    pub eigen: Vec<Eigen>,
    pub valid: Vec<bool>,
}

impl EigenField {
    /// Eigen-decompose every valid node of a tensor field.
    pub fn from_tensors(tf: &SymmetricTensorField) -> Self {
        let res = par::map_range(tf.grid.len(), |k| if tf.valid[k] { eigen_decompose(&tf.tensors[k]).ok() } else { None });
        Self::collect(tf.grid, res)
    }

    fn collect(grid: GridSpec, res: Vec<Option<Eigen>>) -> Self {
        let valid = res.iter().map(Option::is_some).collect();
        let nan = Point::new(f64::NAN, f64::NAN);
        let eigen = res
            .into_iter()
            .map(|e| e.unwrap_or(Eigen { lambda1: f64::NAN, lambda2: f64::NAN, xi1: nan, xi2: nan, degenerate: true }))
            .collect();
        EigenField { grid, eigen, valid }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &Eigen {
        &self.eigen[self.grid.index(i, j)]
    }

    pub fn is_degenerate(&self, i: usize, j: usize) -> bool {
        let k = self.grid.index(i, j);
        !self.valid[k] || self.eigen[k].degenerate
    }

    /// `log₁₀ λ₂` per node (NaN where masked).
    pub fn log10_lambda2(&self) -> Vec<f64> {
        self.eigen.iter().zip(&self.valid).map(|(e, v)| if *v { libm::log10(e.lambda2) } else { f64::NAN }).collect()
    }
}

/// Tensor and eigen fields of a flow map. Invalid flow-map nodes and nodes
/// whose tensor fails to be positive definite are masked in both.
pub fn build_tensor_field(fm: &FlowMapGrid) -> (SymmetricTensorField, EigenField) {
    let grid = fm.grid;
    let res = par::map_range(grid.len(), |k| {
        let (i, j) = grid.ij(k);
        let df = deformation_gradient(fm, i, j).ok()?;
        if !df.is_finite() {
            return None;
        }
        let c = cg_from_gradient(&df);
        let det_df = df.det();
        let e = eigen_with_det(&c, det_df * det_df).ok()?;
        Some((c, e))
    });
    let valid: Vec<bool> = res.iter().map(Option::is_some).collect();
    let nan = SymTensor::new(f64::NAN, f64::NAN, f64::NAN);
    let tensors = res.iter().map(|r| r.map_or(nan, |(c, _)| c)).collect();
    let eigen = EigenField::collect(grid, res.into_iter().map(|r| r.map(|(_, e)| e)).collect());
    (SymmetricTensorField { grid, tensors, valid }, eigen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowmap::{compute_flow_map_grid, IntegratorConfig};
    use crate::geometry::Bounds;
    use crate::velocity::{Linear, Uniform};
    use proptest::prelude::*;

    #[test]
    fn identity_gradient() {
        assert_eq!(cg_from_gradient(&Mat2::IDENTITY), SymTensor::IDENTITY);
    }

    #[test]
    fn unit_shear() {
        // [[1,0],[1,1]] · [[1,1],[0,1]] = [[1,1],[1,2]]
        assert_eq!(cg_from_gradient(&Mat2::new(1.0, 1.0, 0.0, 1.0)), SymTensor::new(1.0, 1.0, 2.0));
    }

    #[test]
    fn rotations_do_not_strain() {
        for k in 0..16 {
            let c = cg_from_gradient(&Mat2::rotation(0.4 * k as f64));
            assert!((c.c11 - 1.0).abs() < 1e-15 && c.c12.abs() < 1e-15 && (c.c22 - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn isotropic_is_degenerate() {
        let e = eigen_decompose(&SymTensor::IDENTITY).unwrap();
        assert_eq!((e.lambda1, e.lambda2), (1.0, 1.0));
        assert!(e.degenerate);
    }

    #[test]
    fn diagonal_tensor() {
        let e = eigen_decompose(&SymTensor::new(0.25, 0.0, 4.0)).unwrap();
        assert_eq!((e.lambda1, e.lambda2), (0.25, 4.0));
        assert_eq!(e.xi1, Point::new(1.0, 0.0));
        assert_eq!(e.xi2, Point::new(0.0, 1.0));
        assert!(!e.degenerate);
    }

    #[test]
    fn characteristic_polynomial_roots() {
        // λ² − 3λ + 1 = 0
        let e = eigen_decompose(&SymTensor::new(1.0, 1.0, 2.0)).unwrap();
        let s5 = 5.0_f64.sqrt();
        assert!((e.lambda1 - (3.0 - s5) / 2.0).abs() < 1e-15);
        assert!((e.lambda2 - (3.0 + s5) / 2.0).abs() < 1e-15);
        assert!((e.lambda1 - 0.381_966_011_250_105).abs() < 1e-14);
        assert!((e.lambda2 - 2.618_033_988_749_895).abs() < 1e-14);
    }

    #[test]
    fn rejects_indefinite() {
        assert!(eigen_decompose(&SymTensor::new(1.0, 2.0, 1.0)).is_err());
        assert!(eigen_decompose(&SymTensor::new(-1.0, 0.0, -1.0)).is_err());
        assert!(eigen_decompose(&SymTensor::new(f64::NAN, 0.0, 1.0)).is_err());
    }

    #[test]
    fn horizontal_eigenvector_points_right() {
        let e = eigen_decompose(&SymTensor::new(4.0, 0.0, 0.25)).unwrap();
        assert_eq!(e.xi2, Point::new(1.0, 0.0));
        assert!(e.xi1.y > 0.0);
    }

    #[test]
    fn rest_state_gives_isotropic_field() {
        let grid = GridSpec::covering(Bounds::new(0.0, 1.0, 0.0, 1.0), 5, 4);
        let fm = compute_flow_map_grid(&Uniform(Point::ZERO), grid, 0.1, &IntegratorConfig::rk45(0.0, 1.0, 1e-6)).unwrap();
        let (tf, ef) = build_tensor_field(&fm);
        assert!(tf.tensors.iter().all(|c| *c == SymTensor::IDENTITY));
        assert!(ef.eigen.iter().all(|e| e.degenerate));
        assert!(tf.valid.iter().all(|v| *v));
    }

    #[test]
    fn linear_shear_gives_constant_tensor() {
        // u = (γ y, 0): DF = [[1, γT], [0, 1]]
        let gamma = 0.5;
        let t = 2.0;
        let grid = GridSpec::covering(Bounds::new(-1.0, 1.0, -1.0, 1.0), 6, 6);
        let fm = compute_flow_map_grid(&Linear(Mat2::new(0.0, gamma, 0.0, 0.0)), grid, 0.1, &IntegratorConfig::rk4_steps(0.0, t, 50)).unwrap();
        let (tf, ef) = build_tensor_field(&fm);
        let expected = cg_from_gradient(&Mat2::new(1.0, gamma * t, 0.0, 1.0));
        let ee = eigen_decompose(&expected).unwrap();
        for (c, e) in tf.tensors.iter().zip(&ef.eigen) {
            assert!((c.c11 - expected.c11).abs() < 1e-12);
            assert!((c.c12 - expected.c12).abs() < 1e-12);
            assert!((c.c22 - expected.c22).abs() < 1e-12);
            assert!((e.lambda2 - ee.lambda2).abs() < 1e-12);
        }
    }

    fn check_eigen(c: &SymTensor) -> Result<(), TestCaseError> {
        let e = eigen_decompose(c).unwrap();
        prop_assert!(e.lambda1 <= e.lambda2);
        prop_assert!(e.lambda1 > 0.0);
        for v in [e.xi1, e.xi2] {
            prop_assert!((v.norm() - 1.0).abs() < 1e-14);
            prop_assert!(v.y > 0.0 || (v.y == 0.0 && v.x > 0.0));
        }
        if !e.degenerate {
            prop_assert!(e.xi1.dot(e.xi2).abs() < 1e-12);
            let scale = e.lambda2;
            prop_assert!((c.apply(e.xi1) - e.lambda1 * e.xi1).norm() < 1e-10 * scale.max(1.0));
            prop_assert!((c.apply(e.xi2) - e.lambda2 * e.xi2).norm() < 1e-10 * scale.max(1.0));
        }
        Ok(())
    }

    proptest! {
        #[test]
        fn eigen_invariants(a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64, d in -3.0..3.0f64) {
            let df = Mat2::new(a, b, c, d);
            prop_assume!(df.det().abs() > 1e-3);
            check_eigen(&cg_from_gradient(&df))?;
        }

        #[test]
        fn eigenvalue_product_is_squared_jacobian(a in -5.0..5.0f64, b in -5.0..5.0f64, c in -5.0..5.0f64, d in -5.0..5.0f64) {
            let df = Mat2::new(a, b, c, d);
            let det = df.det();
            prop_assume!(det.abs() > 1e-6);
            let e = eigen_with_det(&cg_from_gradient(&df), det * det).unwrap();
            let rel = (e.lambda1 * e.lambda2 - det * det).abs() / (det * det);
            prop_assert!(rel < 1e-12, "rel = {}", rel);
        }
    }
}
