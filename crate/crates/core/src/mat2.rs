//! Minimal 2×2 matrix / 2-vector algebra over any [`Real`] scalar.
//!
//! Everything downstream is two-dimensional, so this is all the linear
//! algebra the crate needs. Determinants go through the compensated
//! difference-of-products kernel because the Gram matrices we invert are
//! within a hair of rank one.

use crate::numerics::{diff_of_products, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct Vector2<T> {
    pub v1: T,
    pub v2: T,
}

impl<T: Real> Vector2<T> {
    pub fn new(v1: T, v2: T) -> Self {
        Vector2 { v1, v2 }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Vector2::new(
            self.v1.clone() - rhs.v1.clone(),
            self.v2.clone() - rhs.v2.clone(),
        )
    }

    pub fn scale(&self, s: &T) -> Self {
        Vector2::new(self.v1.clone() * s.clone(), self.v2.clone() * s.clone())
    }

    pub fn max_abs(&self) -> T {
        let a = self.v1.abs();
        let b = self.v2.abs();
        if a >= b {
            a
        } else {
            b
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix2<T> {
    pub m11: T,
    pub m12: T,
    pub m21: T,
    pub m22: T,
}

impl<T: Real> Matrix2<T> {
    pub fn new(m11: T, m12: T, m21: T, m22: T) -> Self {
        Matrix2 { m11, m12, m21, m22 }
    }

    pub fn identity() -> Self {
        Matrix2::new(T::one(), T::zero(), T::zero(), T::one())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Matrix2::new(
            self.m11.clone() + rhs.m11.clone(),
            self.m12.clone() + rhs.m12.clone(),
            self.m21.clone() + rhs.m21.clone(),
            self.m22.clone() + rhs.m22.clone(),
        )
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Matrix2::new(
            self.m11.clone() - rhs.m11.clone(),
            self.m12.clone() - rhs.m12.clone(),
            self.m21.clone() - rhs.m21.clone(),
            self.m22.clone() - rhs.m22.clone(),
        )
    }

    pub fn scale(&self, s: &T) -> Self {
        Matrix2::new(
            self.m11.clone() * s.clone(),
            self.m12.clone() * s.clone(),
            self.m21.clone() * s.clone(),
            self.m22.clone() * s.clone(),
        )
    }

    pub fn mul_mat(&self, rhs: &Self) -> Self {
        Matrix2::new(
            self.m11
                .mul_add(&rhs.m11, &(self.m12.clone() * rhs.m21.clone())),
            self.m11
                .mul_add(&rhs.m12, &(self.m12.clone() * rhs.m22.clone())),
            self.m21
                .mul_add(&rhs.m11, &(self.m22.clone() * rhs.m21.clone())),
            self.m21
                .mul_add(&rhs.m12, &(self.m22.clone() * rhs.m22.clone())),
        )
    }

    pub fn mul_vec(&self, v: &Vector2<T>) -> Vector2<T> {
        Vector2::new(
            self.m11.mul_add(&v.v1, &(self.m12.clone() * v.v2.clone())),
            self.m21.mul_add(&v.v1, &(self.m22.clone() * v.v2.clone())),
        )
    }

    pub fn transpose(&self) -> Self {
        Matrix2::new(
            self.m11.clone(),
            self.m21.clone(),
            self.m12.clone(),
            self.m22.clone(),
        )
    }

    /// Determinant through the compensated kernel.
    pub fn det(&self) -> T {
        diff_of_products(&self.m11, &self.m22, &self.m12, &self.m21)
    }

    pub fn max_abs(&self) -> T {
        let mut best = self.m11.abs();
        for e in [&self.m12, &self.m21, &self.m22] {
            let a = e.abs();
            if a > best {
                best = a;
            }
        }
        best
    }
}

/// Largest entrywise deviation |a − b| divided by `scale`, as `f64`.
pub fn rel_residual<T: Real>(a: &Matrix2<T>, b: &Matrix2<T>, scale: &T) -> f64 {
    let d = a.sub(b).max_abs();
    (d / scale.abs()).to_f64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_neutral() {
        let m = Matrix2::new(1.0, 2.0, 3.0, 4.0);
        let i = Matrix2::<f64>::identity();
        assert_eq!(m.mul_mat(&i), m);
        assert_eq!(i.mul_mat(&m), m);
    }

    #[test]
    fn det_of_known_matrix() {
        let m = Matrix2::new(2.0, 1.0, 1.0, 3.0);
        assert_eq!(m.det(), 5.0);
    }

    #[test]
    fn mul_vec_matches_hand_computation() {
        let m = Matrix2::new(1.0, 2.0, 3.0, 4.0);
        let v = Vector2::new(5.0, 6.0);
        let r = m.mul_vec(&v);
        assert_eq!((r.v1, r.v2), (17.0, 39.0));
    }
}
