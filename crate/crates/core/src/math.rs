//! Small fixed-size linear algebra helpers shared by the energy kernels.

use nalgebra::allocator::Allocator;
use nalgebra::{Const, DefaultAllocator, DimSub, Matrix2, Matrix3, SMatrix, SVector, Vector3, U1};

pub type Vec3 = Vector3<f64>;
pub type Mat2 = Matrix2<f64>;
pub type Mat3 = Matrix3<f64>;

/// Clamp the negative eigenvalues of a symmetric matrix to zero.
pub fn project_psd<const N: usize>(h: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N>
where
    Const<N>: DimSub<U1>,
    DefaultAllocator: Allocator<<Const<N> as DimSub<U1>>::Output>,
{
    let mut eig = h.symmetric_eigen();
    if eig.eigenvalues.iter().all(|&v| v >= 0.0) {
        return *h;
    }
    for v in eig.eigenvalues.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    eig.recompose()
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues<const N: usize>(h: &SMatrix<f64, N, N>) -> Vec<f64>
where
    Const<N>: DimSub<U1>,
    DefaultAllocator: Allocator<<Const<N> as DimSub<U1>>::Output>,
{
    let mut v: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Gather the 3-vectors of `nodes` from `x` into one stacked vector.
pub fn gather<const N: usize>(x: &[Vec3], nodes: &[usize]) -> SVector<f64, N> {
    let mut out = SVector::<f64, N>::zeros();
    for (k, &n) in nodes.iter().enumerate() {
        out.fixed_rows_mut::<3>(3 * k).copy_from(&x[n]);
    }
    out
}

/// Skew-symmetric cross-product matrix: `cross_matrix(a) * b == a.cross(&b)`.
pub fn cross_matrix(a: &Vec3) -> Mat3 {
    Mat3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Area of triangle `(a, b, c)`.
pub fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Signed volume of tetrahedron `(a, b, c, d)`.
pub fn tet_volume(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    (b - a).cross(&(c - a)).dot(&(d - a)) / 6.0
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(pts: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut b = Self::empty();
        for p in pts {
            b.include(p);
        }
        b
    }

    pub fn include(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn merge(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn inflate(&self, r: f64) -> Aabb {
        Aabb {
            min: self.min.add_scalar(-r),
            max: self.max.add_scalar(r),
        }
    }

    pub fn overlaps(&self, other: &Aabb) -> bool {
        (0..3).all(|i| self.min[i] <= other.max[i] && other.min[i] <= self.max[i])
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psd_projection_clamps_negative_modes() {
        let h = SMatrix::<f64, 2, 2>::new(1.0, 2.0, 2.0, 1.0); // eigenvalues 3, -1
        let p = project_psd(&h);
        let ev = sym_eigenvalues(&p);
        assert!(ev[0].abs() < 1e-12);
        assert!((ev[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn cross_matrix_matches_cross() {
        let a = Vec3::new(1.0, -2.0, 0.5);
        let b = Vec3::new(0.3, 0.7, -1.1);
        assert!((cross_matrix(&a) * b - a.cross(&b)).norm() < 1e-15);
    }
}
