//! Smooth periodic test functions with exact derivatives.
//!
//! The consistency diagnostics pair discrete difference quotients of
//! projected fields against exact gradients and Laplacians, so the test
//! functions must supply analytic derivatives. Products of per-axis
//! `1 / cos / sin` factors with integer wave numbers are closed under
//! differentiation, periodic by construction, and cover generic smooth
//! behaviour on the torus.

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use std::f64::consts::TAU;

/// One axis factor of a separable trigonometric function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Factor {
    One,
    /// `cos(2 pi k x / ell)`.
    Cos(u32),
    /// `sin(2 pi k x / ell)`.
    Sin(u32),
}

impl Factor {
    fn value(self, x: f64, ell: f64) -> f64 {
        match self {
            Factor::One => 1.0,
            Factor::Cos(k) => (TAU * k as f64 * x / ell).cos(),
            Factor::Sin(k) => (TAU * k as f64 * x / ell).sin(),
        }
    }

    /// Derivative in x.
    fn deriv(self, x: f64, ell: f64) -> f64 {
        let om = |k: u32| TAU * k as f64 / ell;
        match self {
            Factor::One => 0.0,
            Factor::Cos(k) => -om(k) * (om(k) * x).sin(),
            Factor::Sin(k) => om(k) * (om(k) * x).cos(),
        }
    }

    /// `f'' = -(2 pi k / ell)^2 f` for every factor.
    fn curvature(self, ell: f64) -> f64 {
        let k = match self {
            Factor::One => 0,
            Factor::Cos(k) | Factor::Sin(k) => k,
        };
        let om = TAU * k as f64 / ell;
        -om * om
    }
}

/// Scalar test function `phi(x) = prod_s factor_s(x_s)` on an edge-`ell`
/// torus; unused axes hold `Factor::One`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub factors: [Factor; 3],
    pub ell: f64,
}

impl TestFunction {
    pub fn new(factors: [Factor; 3], ell: f64) -> Result<Self> {
        if !(ell > 0.0) {
            return Err(Error::ValidationError {
                field: "test_function.ell".into(),
                reason: format!("edge length must be positive, got {ell}"),
            });
        }
        Ok(Self { factors, ell })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        x.iter().zip(self.factors).map(|(&xi, f)| f.value(xi, self.ell)).product()
    }

    /// Exact gradient; entries beyond `x.len()` are zero.
    pub fn grad(&self, x: &[f64]) -> [f64; 3] {
        let mut g = [0.0; 3];
        for s in 0..x.len() {
            let mut v = 1.0;
            for (z, (&xi, f)) in x.iter().zip(self.factors).enumerate() {
                v *= if z == s { f.deriv(xi, self.ell) } else { f.value(xi, self.ell) };
            }
            g[s] = v;
        }
        g
    }

    /// Exact Laplacian: separable factors give
    /// `Lap phi = -(sum_s omega_s^2) phi`.
    pub fn laplace(&self, x: &[f64]) -> f64 {
        let total: f64 = self.factors[..x.len()]
            .iter()
            .map(|f| f.curvature(self.ell))
            .sum();
        total * self.value(x)
    }
}

/// Vector test function, one scalar component per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorTestFunction {
    pub comps: Vec<TestFunction>,
}

impl VectorTestFunction {
    pub fn new(comps: Vec<TestFunction>) -> Result<Self> {
        if comps.is_empty() || comps.len() > 3 {
            return Err(Error::InvalidDim(comps.len()));
        }
        Ok(Self { comps })
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }
}

/// The standard battery used by the consistency diagnostics: two scalar
/// and two vector test functions with low, mixed wave numbers.
pub struct TestFunctionSet {
    pub scalars: Vec<TestFunction>,
    pub vectors: Vec<VectorTestFunction>,
}

impl TestFunctionSet {
    pub fn standard(mesh: &Mesh) -> Self {
        let ell = mesh.edge_length();
        let dim = mesh.dim();
        let f = |fs: [Factor; 3]| TestFunction::new(fs, ell).unwrap();

        let mut s1 = [Factor::One; 3];
        s1[0] = Factor::Cos(1);
        let mut s2 = [Factor::One; 3];
        s2[0] = Factor::Sin(2);
        if dim >= 2 {
            s2[1] = Factor::Cos(1);
        }
        let scalars = vec![f(s1), f(s2)];

        let mut vectors = Vec::new();
        for shift in 0..2u32 {
            let mut comps = Vec::with_capacity(dim);
            for axis in 0..dim {
                let mut fs = [Factor::One; 3];
                fs[axis] = if (axis as u32 + shift).is_multiple_of(2) {
                    Factor::Sin(1 + shift)
                } else {
                    Factor::Cos(1)
                };
                if dim >= 2 {
                    let other = (axis + 1) % dim;
                    fs[other] = Factor::Cos(1);
                }
                comps.push(f(fs));
            }
            vectors.push(VectorTestFunction::new(comps).unwrap());
        }
        Self { scalars, vectors }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn values_and_derivatives_match_closed_forms() {
        let phi = TestFunction::new([Factor::Cos(1), Factor::Sin(2), Factor::One], 1.0).unwrap();
        let x = [0.2, 0.15];
        let want = (TAU * 0.2).cos() * (2.0 * TAU * 0.15).sin();
        assert!((phi.value(&x) - want).abs() < 1e-15);

        let g = phi.grad(&x);
        let want0 = -TAU * (TAU * 0.2).sin() * (2.0 * TAU * 0.15).sin();
        let want1 = 2.0 * TAU * (TAU * 0.2).cos() * (2.0 * TAU * 0.15).cos();
        assert!((g[0] - want0).abs() < 1e-12);
        assert!((g[1] - want1).abs() < 1e-12);

        let want_lap = -(TAU * TAU + 4.0 * TAU * TAU) * want;
        assert!((phi.laplace(&x) - want_lap).abs() < 1e-10);
    }

    #[test]
    fn gradient_agrees_with_finite_differences() {
        let phi =
            TestFunction::new([Factor::Sin(1), Factor::Cos(2), Factor::Sin(3)], 2.0).unwrap();
        let x = [0.31, 0.77, 1.13];
        let g = phi.grad(&x);
        let eps = 1e-6;
        for s in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[s] += eps;
            xm[s] -= eps;
            let fd = (phi.value(&xp) - phi.value(&xm)) / (2.0 * eps);
            assert!((g[s] - fd).abs() < 1e-8, "axis {s}: {} vs {fd}", g[s]);
        }
    }

    #[test]
    fn laplacian_agrees_with_finite_differences() {
        let phi = TestFunction::new([Factor::Cos(2), Factor::Sin(1), Factor::One], 1.5).unwrap();
        let x = [0.4, 0.9];
        let eps = 1e-4;
        let mut fd = 0.0;
        for s in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[s] += eps;
            xm[s] -= eps;
            fd += (phi.value(&xp) - 2.0 * phi.value(&x) + phi.value(&xm)) / (eps * eps);
        }
        assert!((phi.laplace(&x) - fd).abs() < 1e-5);
    }

    #[test]
    fn functions_are_periodic() {
        let phi = TestFunction::new([Factor::Sin(2), Factor::Cos(3), Factor::One], 0.7).unwrap();
        let x = [0.123, 0.456];
        let shifted = [0.123 + 0.7, 0.456 - 1.4];
        assert!((phi.value(&x) - phi.value(&shifted)).abs() < 1e-12);
    }

    #[test]
    fn standard_set_has_nonconstant_members_in_each_dim() {
        for dim in 1..=3 {
            let mesh = Mesh::new(dim, 4, 1.0).unwrap();
            let set = TestFunctionSet::standard(&mesh);
            assert_eq!(set.scalars.len(), 2);
            assert_eq!(set.vectors.len(), 2);
            for v in &set.vectors {
                assert_eq!(v.dim(), dim);
            }
            // Every member varies along the first axis.
            let a = [0.1, 0.2, 0.3];
            let b = [0.37, 0.2, 0.3];
            for s in &set.scalars {
                assert!((s.value(&a[..dim]) - s.value(&b[..dim])).abs() > 1e-6);
            }
        }
        // Mean of sin-based members over the torus is zero: the projection
        // of scalar 2 sums to ~0 on any mesh (checked at dim 1).
        let mesh = Mesh::new(1, 16, 1.0).unwrap();
        let set = TestFunctionSet::standard(&mesh);
        let proj = crate::mesh::project(&mesh, |x| set.scalars[1].value(x));
        let mean: f64 = proj.iter().sum::<f64>() / proj.len() as f64;
        assert!(mean.abs() < 1e-14);
        let _ = PI;
    }
}
