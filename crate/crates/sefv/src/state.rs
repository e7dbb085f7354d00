//! Discrete conserved state: density and momentum cell fields on one mesh.

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::physics::{self, CellState, EosParams};

/// Piecewise-constant conservative fields `(rho_K, m_K)` over all cells.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    /// Density per cell.
    pub rho: Vec<f64>,
    /// Momentum components, one full cell field per axis.
    pub mom: Vec<Vec<f64>>,
}

impl State {
    pub fn new(rho: Vec<f64>, mom: Vec<Vec<f64>>) -> Result<Self> {
        let cells = rho.len();
        if mom.is_empty() || mom.len() > 3 {
            return Err(Error::InvalidDim(mom.len()));
        }
        for comp in &mom {
            if comp.len() != cells {
                return Err(Error::DimensionMismatch { expected: cells, found: comp.len() });
            }
        }
        Ok(Self { rho, mom })
    }

    /// Resting uniform state, handy as a starting point in tests.
    pub fn uniform(mesh: &Mesh, rho: f64) -> Self {
        Self {
            rho: vec![rho; mesh.num_cells()],
            mom: vec![vec![0.0; mesh.num_cells()]; mesh.dim()],
        }
    }

    pub fn dim(&self) -> usize {
        self.mom.len()
    }

    pub fn num_cells(&self) -> usize {
        self.rho.len()
    }

    /// Conservative variables of one cell.
    pub fn cell(&self, k: usize) -> CellState {
        let mut m = [0.0; 3];
        for (j, comp) in self.mom.iter().enumerate() {
            m[j] = comp[k];
        }
        CellState { rho: self.rho[k], m, dim: self.dim() }
    }

    pub fn matches(&self, mesh: &Mesh) -> Result<()> {
        if self.dim() != mesh.dim() {
            return Err(Error::InvalidDim(self.dim()));
        }
        if self.num_cells() != mesh.num_cells() {
            return Err(Error::DimensionMismatch {
                expected: mesh.num_cells(),
                found: self.num_cells(),
            });
        }
        Ok(())
    }

    /// `h^d` times the sum of cell densities.
    pub fn total_mass(&self, mesh: &Mesh) -> f64 {
        mesh.cell_volume() * self.rho.iter().sum::<f64>()
    }

    /// `h^d` times the componentwise sum of cell momenta.
    pub fn total_momentum(&self, mesh: &Mesh) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (j, comp) in self.mom.iter().enumerate() {
            out[j] = mesh.cell_volume() * comp.iter().sum::<f64>();
        }
        out
    }

    /// Total energy `h^d sum_K eta(U_K)`.
    pub fn total_energy(&self, mesh: &Mesh, eos: &EosParams) -> Result<f64> {
        let mut acc = 0.0;
        for k in 0..self.num_cells() {
            acc += physics::entropy(&self.cell(k), eos)?;
        }
        Ok(mesh.cell_volume() * acc)
    }

    pub fn min_rho(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest characteristic speed over all cells and axes — the global
    /// diffusion coefficient of the scheme before any multiplier.
    pub fn global_lambda(&self, eos: &EosParams) -> Result<f64> {
        let mut lam: f64 = 0.0;
        for k in 0..self.num_cells() {
            let u = self.cell(k);
            for axis in 0..self.dim() {
                lam = lam.max(physics::max_wave_speed(&u, axis, eos)?);
            }
        }
        Ok(lam)
    }

    /// Largest velocity magnitude over all cells (vacuum-guarded).
    pub fn sup_speed(&self, rho_floor: f64, m_floor: f64) -> Result<f64> {
        let mut sup: f64 = 0.0;
        for k in 0..self.num_cells() {
            let v = physics::velocity(&self.cell(k), rho_floor, m_floor)?;
            sup = sup.max(v.iter().map(|x| x * x).sum::<f64>().sqrt());
        }
        Ok(sup)
    }

    pub fn is_finite(&self) -> bool {
        self.rho.iter().all(|v| v.is_finite())
            && self.mom.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_momentum_fields() {
        let bad = State::new(vec![1.0; 4], vec![vec![0.0; 4], vec![0.0; 3]]);
        assert!(matches!(bad, Err(Error::DimensionMismatch { expected: 4, found: 3 })));
        assert!(State::new(vec![1.0; 4], vec![]).is_err());
    }

    #[test]
    fn reductions_on_a_uniform_resting_state() {
        let mesh = Mesh::new(2, 4, 2.0).unwrap();
        let state = State::uniform(&mesh, 1.0);
        let eos = EosParams::new(2.0, 1.0).unwrap();
        // 16 cells of volume 0.25 each.
        assert_eq!(state.total_mass(&mesh), 4.0);
        assert_eq!(state.total_momentum(&mesh), [0.0; 3]);
        // eta = P(1) = 1 per cell => total 4; lambda = c = sqrt(2).
        assert!((state.total_energy(&mesh, &eos).unwrap() - 4.0).abs() < 1e-14);
        assert!((state.global_lambda(&eos).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cell_accessor_reassembles_components() {
        let mesh = Mesh::new(2, 2, 1.0).unwrap();
        let mut state = State::uniform(&mesh, 2.0);
        state.mom[0][3] = 0.5;
        state.mom[1][3] = -0.25;
        let u = state.cell(3);
        assert_eq!(u.rho, 2.0);
        assert_eq!(u.m, [0.5, -0.25, 0.0]);
        assert_eq!(u.dim, 2);
    }

    #[test]
    fn non_finite_states_are_detected() {
        let mesh = Mesh::new(1, 4, 1.0).unwrap();
        let mut state = State::uniform(&mesh, 1.0);
        assert!(state.is_finite());
        state.mom[0][2] = f64::NAN;
        assert!(!state.is_finite());
    }
}
