//! Pointwise gas dynamics: isentropic pressure law, energy (entropy) pair,
//! physical flux and characteristic speeds.
//!
//! Everything here acts on a single cell state; field-level reductions that
//! need a whole [`crate::state::State`] live next to the state type. The
//! pressure law is `p = a rho^gamma` with `gamma > 1`, `a > 0`; the convex
//! energy density is `eta = |m|^2 / (2 rho) + P(rho)` with pressure
//! potential `P = a rho^gamma / (gamma - 1)`, tied to the pressure through
//! `rho P'(rho) - P(rho) = p(rho)`.

use crate::error::{Error, Result};

/// Default density floor below which a cell counts as vacuum.
pub const DEFAULT_RHO_FLOOR: f64 = 1e-12;
/// Default momentum magnitude treated as zero in a vacuum cell.
pub const DEFAULT_M_FLOOR: f64 = 1e-12;

/// Isentropic equation of state `p(rho) = a rho^gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EosParams {
    pub gamma: f64,
    pub a: f64,
}

impl EosParams {
    pub fn new(gamma: f64, a: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::ValidationError {
                field: "physics.gamma".into(),
                reason: format!("adiabatic exponent must be > 1, got {gamma}"),
            });
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::ValidationError {
                field: "physics.pressure_scale".into(),
                reason: format!("pressure scale must be > 0, got {a}"),
            });
        }
        Ok(Self { gamma, a })
    }
}

/// Conservative variables of one cell. Components beyond `dim` are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellState {
    pub rho: f64,
    pub m: [f64; 3],
    pub dim: usize,
}

impl CellState {
    pub fn new(rho: f64, m: &[f64]) -> Self {
        let mut mm = [0.0; 3];
        mm[..m.len()].copy_from_slice(m);
        Self { rho, m: mm, dim: m.len() }
    }

    /// Squared momentum magnitude.
    pub fn m_sq(&self) -> f64 {
        self.m[..self.dim].iter().map(|v| v * v).sum()
    }
}

/// Flux/entropy-variable vector: 1 + dim meaningful components.
pub type FluxVec = [f64; 4];

/// Pressure `p = a rho^gamma`; requires strictly positive density.
#[inline]
pub fn pressure(eos: &EosParams, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::NegativeDensity(rho));
    }
    Ok(eos.a * rho.powf(eos.gamma))
}

/// Pressure potential `P(rho) = a rho^gamma / (gamma - 1)`.
#[inline]
pub fn pressure_potential(eos: &EosParams, rho: f64) -> Result<f64> {
    Ok(pressure(eos, rho)? / (eos.gamma - 1.0))
}

/// Derivative of the pressure potential,
/// `P'(rho) = a gamma rho^(gamma-1) / (gamma - 1)`.
#[inline]
pub fn pressure_potential_prime(eos: &EosParams, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::NegativeDensity(rho));
    }
    Ok(eos.a * eos.gamma * rho.powf(eos.gamma - 1.0) / (eos.gamma - 1.0))
}

/// Sound speed `c = sqrt(gamma a rho^(gamma-1)) = sqrt(p'(rho))`.
#[inline]
pub fn sound_speed(eos: &EosParams, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::NegativeDensity(rho));
    }
    Ok((eos.gamma * eos.a * rho.powf(eos.gamma - 1.0)).sqrt())
}

/// Physical flux along `axis`: component 0 carries `m_axis`, component
/// `1 + j` carries `m_j m_axis / rho + p delta_(j,axis)`.
#[inline]
pub fn phys_flux(u: &CellState, axis: usize, eos: &EosParams) -> Result<FluxVec> {
    debug_assert!(axis < u.dim);
    let p = pressure(eos, u.rho)?;
    let ma = u.m[axis];
    let mut f = [0.0; 4];
    f[0] = ma;
    for j in 0..u.dim {
        f[1 + j] = u.m[j] * ma / u.rho;
    }
    f[1 + axis] += p;
    Ok(f)
}

/// Energy density `eta(U) = |m|^2 / (2 rho) + P(rho)`.
#[inline]
pub fn entropy(u: &CellState, eos: &EosParams) -> Result<f64> {
    if !(u.rho > 0.0) {
        return Err(Error::NegativeDensity(u.rho));
    }
    Ok(0.5 * u.m_sq() / u.rho + pressure_potential(eos, u.rho)?)
}

/// Gradient of `eta` in the conservative variables:
/// `(-|u|^2 / 2 + P'(rho), u)`.
#[inline]
pub fn entropy_variables(u: &CellState, eos: &EosParams) -> Result<FluxVec> {
    if !(u.rho > 0.0) {
        return Err(Error::NegativeDensity(u.rho));
    }
    let mut v = [0.0; 4];
    let mut usq = 0.0;
    for j in 0..u.dim {
        let uj = u.m[j] / u.rho;
        v[1 + j] = uj;
        usq += uj * uj;
    }
    v[0] = -0.5 * usq + pressure_potential_prime(eos, u.rho)?;
    Ok(v)
}

/// Largest characteristic speed of the flux Jacobian along `axis`:
/// `|u_axis| + c`.
#[inline]
pub fn max_wave_speed(u: &CellState, axis: usize, eos: &EosParams) -> Result<f64> {
    debug_assert!(axis < u.dim);
    Ok((u.m[axis] / u.rho).abs() + sound_speed(eos, u.rho)?)
}

/// Velocity with vacuum handling: above the density floor, `m / rho`;
/// in vacuum the velocity is zero if the momentum is negligible and
/// undefined (an error) otherwise.
pub fn velocity(u: &CellState, rho_floor: f64, m_floor: f64) -> Result<[f64; 3]> {
    if u.rho > rho_floor {
        let mut v = [0.0; 3];
        for j in 0..u.dim {
            v[j] = u.m[j] / u.rho;
        }
        return Ok(v);
    }
    let msq = u.m_sq();
    if msq.sqrt() <= m_floor {
        return Ok([0.0; 3]);
    }
    Err(Error::VacuumMomentum { momentum: msq.sqrt() })
}
