//! Uniform periodic cubic mesh and its discrete calculus.
//!
//! The torus `[0, ell)^dim` is split into `n` equal cells per axis
//! (`h = ell / n`). Cells are addressed by a row-major linear index with
//! axis order `(x1, ..., xd)` — the last axis varies fastest — and every
//! neighbour lookup wraps modulo `n`, so there are no boundary cases.
//!
//! The operators here are the building blocks of the solver and the
//! consistency diagnostics: centred difference quotients, the compact
//! Laplacian, face jumps/means, and the cell-average projection of smooth
//! functions (3-point Gauss per axis, exact through degree 5).

use crate::error::{Error, Result};

/// Uniform periodic mesh on `[0, ell)^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    n: usize,
    ell: f64,
    h: f64,
}

/// Oriented face `sigma = K|L` between `cell` and its positive neighbour
/// along `axis` (`L = K + h e_axis`, wrapping periodically).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    pub cell: usize,
    pub axis: usize,
}

impl Mesh {
    /// Build a mesh with `n` cells per axis on an edge-`ell` torus.
    pub fn new(dim: usize, n: usize, ell: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidDim(dim));
        }
        if n < 2 {
            return Err(Error::TooFewCells(n));
        }
        if !(ell > 0.0) || !ell.is_finite() {
            return Err(Error::ValidationError {
                field: "mesh.edge_length".into(),
                reason: format!("must be finite and positive, got {ell}"),
            });
        }
        Ok(Self { dim, n, ell, h: ell / n as f64 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cells per axis.
    pub fn cells_per_axis(&self) -> usize {
        self.n
    }

    pub fn edge_length(&self) -> f64 {
        self.ell
    }

    /// Cell edge `h = ell / n`.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Total number of cells, `n^dim`.
    pub fn num_cells(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Cell volume `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Linear index of a multi-index (row-major, last axis fastest).
    pub fn index(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.dim);
        let mut idx = 0;
        for &c in coords {
            debug_assert!(c < self.n);
            idx = idx * self.n + c;
        }
        idx
    }

    /// Multi-index of a linear index; only the first `dim` entries are used.
    pub fn coords(&self, mut idx: usize) -> [usize; 3] {
        debug_assert!(idx < self.num_cells());
        let mut c = [0usize; 3];
        for axis in (0..self.dim).rev() {
            c[axis] = idx % self.n;
            idx /= self.n;
        }
        c
    }

    /// Linear index of the cell `step` cells away along `axis`, wrapping
    /// periodically. `step` may be negative.
    pub fn neighbor(&self, idx: usize, axis: usize, step: isize) -> usize {
        debug_assert!(axis < self.dim);
        let mut c = self.coords(idx);
        let n = self.n as isize;
        c[axis] = ((c[axis] as isize + step).rem_euclid(n)) as usize;
        self.index(&c[..self.dim])
    }

    /// Centre of a cell; only the first `dim` entries are meaningful.
    pub fn cell_center(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = (c[axis] as f64 + 0.5) * self.h;
        }
        x
    }

    /// Two meshes are nested when they share the torus and one cell count
    /// divides the other. Returns the refinement ratio (fine n / coarse n).
    pub fn nesting_ratio(coarse: &Mesh, fine: &Mesh) -> Result<usize> {
        if coarse.dim != fine.dim
            || (coarse.ell - fine.ell).abs() > 1e-14 * coarse.ell
            || !fine.n.is_multiple_of(coarse.n)
        {
            return Err(Error::NonNestedMeshes { coarse: coarse.n, fine: fine.n });
        }
        Ok(fine.n / coarse.n)
    }

    fn check_len(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.num_cells() {
            return Err(Error::DimensionMismatch { expected: self.num_cells(), found: w.len() });
        }
        Ok(())
    }
}

/// Centred difference quotient along `axis`:
/// `(w(K + h e) - w(K - h e)) / (2h)` in every cell.
pub fn central_diff(mesh: &Mesh, w: &[f64], axis: usize) -> Result<Vec<f64>> {
    mesh.check_len(w)?;
    let inv2h = 1.0 / (2.0 * mesh.h());
    let mut out = vec![0.0; w.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let up = mesh.neighbor(idx, axis, 1);
        let dn = mesh.neighbor(idx, axis, -1);
        *o = (w[up] - w[dn]) * inv2h;
    }
    Ok(out)
}

/// Compact discrete Laplacian, the sum over axes of
/// `(w(K + h e) - 2 w(K) + w(K - h e)) / h^2`.
pub fn laplacian(mesh: &Mesh, w: &[f64]) -> Result<Vec<f64>> {
    mesh.check_len(w)?;
    let invh2 = 1.0 / (mesh.h() * mesh.h());
    let mut out = vec![0.0; w.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for axis in 0..mesh.dim() {
            let up = mesh.neighbor(idx, axis, 1);
            let dn = mesh.neighbor(idx, axis, -1);
            acc += w[up] - 2.0 * w[idx] + w[dn];
        }
        *o = acc * invh2;
    }
    Ok(out)
}

/// Discrete divergence of a vector field given per-component:
/// sum over axes of the centred difference of component `p` along axis `p`.
pub fn divergence(mesh: &Mesh, comps: &[Vec<f64>]) -> Result<Vec<f64>> {
    if comps.len() != mesh.dim() {
        return Err(Error::DimensionMismatch { expected: mesh.dim(), found: comps.len() });
    }
    let mut out = vec![0.0; mesh.num_cells()];
    for (axis, comp) in comps.iter().enumerate() {
        let d = central_diff(mesh, comp, axis)?;
        for (o, v) in out.iter_mut().zip(d) {
            *o += v;
        }
    }
    Ok(out)
}

/// Jump of `w` across a face, `[[w]] = w(L) - w(K)`.
pub fn jump(mesh: &Mesh, w: &[f64], face: Face) -> f64 {
    let l = mesh.neighbor(face.cell, face.axis, 1);
    w[l] - w[face.cell]
}

/// Arithmetic face mean, `(w(K) + w(L)) / 2`.
pub fn face_mean(mesh: &Mesh, w: &[f64], face: Face) -> f64 {
    let l = mesh.neighbor(face.cell, face.axis, 1);
    0.5 * (w[face.cell] + w[l])
}

/// Inject a coarse-mesh field onto a nested fine mesh: every fine cell
/// takes the value of the coarse cell containing it (piecewise-constant
/// prolongation, preserves cell-wise extrema and integrals).
pub fn prolong(coarse: &Mesh, fine: &Mesh, w: &[f64]) -> Result<Vec<f64>> {
    let ratio = Mesh::nesting_ratio(coarse, fine)?;
    coarse.check_len(w)?;
    let mut out = vec![0.0; fine.num_cells()];
    for (idx, o) in out.iter_mut().enumerate() {
        let cf = fine.coords(idx);
        let mut cc = [0usize; 3];
        for axis in 0..fine.dim() {
            cc[axis] = cf[axis] / ratio;
        }
        *o = w[coarse.index(&cc[..coarse.dim()])];
    }
    Ok(out)
}

/// Average a fine-mesh field down to a nested coarse mesh: every coarse
/// cell takes the mean of the `ratio^dim` fine cells it contains (exact
/// cell averaging for piecewise-constant data, adjoint to [`prolong`]).
pub fn restrict(fine: &Mesh, coarse: &Mesh, w: &[f64]) -> Result<Vec<f64>> {
    let ratio = Mesh::nesting_ratio(coarse, fine)?;
    fine.check_len(w)?;
    let block = ratio.pow(fine.dim() as u32) as f64;
    let mut out = vec![0.0; coarse.num_cells()];
    for (idx, v) in w.iter().enumerate() {
        let cf = fine.coords(idx);
        let mut cc = [0usize; 3];
        for axis in 0..fine.dim() {
            cc[axis] = cf[axis] / ratio;
        }
        out[coarse.index(&cc[..coarse.dim()])] += v;
    }
    for o in &mut out {
        *o /= block;
    }
    Ok(out)
}

/// 3-point Gauss-Legendre nodes and weights on [-1/2, 1/2] (weights sum to 1).
const GAUSS_NODES: [f64; 3] = [-0.387_298_334_620_741_7, 0.0, 0.387_298_334_620_741_7];
const GAUSS_WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

/// Cell-average projection of a smooth function: per cell, tensor-product
/// 3-point Gauss quadrature of `f`, normalised by the cell volume.
/// Exact for polynomials of degree <= 5 per axis.
pub fn project(mesh: &Mesh, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let dim = mesh.dim();
    let h = mesh.h();
    let npts = 3usize.pow(dim as u32);
    let mut out = vec![0.0; mesh.num_cells()];
    let mut x = [0.0f64; 3];
    for (idx, o) in out.iter_mut().enumerate() {
        let center = mesh.cell_center(idx);
        let mut acc = 0.0;
        for q in 0..npts {
            let mut wq = 1.0;
            let mut rem = q;
            for axis in 0..dim {
                let node = rem % 3;
                rem /= 3;
                x[axis] = center[axis] + h * GAUSS_NODES[node];
                wq *= GAUSS_WEIGHTS[node];
            }
            acc += wq * f(&x[..dim]);
        }
        *o = acc;
    }
    out
}
