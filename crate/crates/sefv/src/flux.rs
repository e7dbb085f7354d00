//! Numerical face fluxes behind a runtime-selectable strategy interface.
//!
//! Each flux variant implements [`NumericalFlux`] and is registered under a
//! stable name; the scheme picks one at runtime from config (`scheme.flux`).
//! The shipped strategy is the Lax-Friedrichs-type flux
//!
//! ```text
//! F(U_K, U_L) = (f(U_K) + f(U_L)) / 2 - lambda [[U]],   [[U]] = U_L - U_K,
//! ```
//!
//! whose diffusion coefficient `lambda` is supplied per face by the caller
//! (a single global bound or a per-face two-cell bound). The interface is
//! the extension point for other two-point fluxes; nothing else currently
//! registers.

use crate::error::{Error, Result};
use crate::physics::{phys_flux, CellState, EosParams, FluxVec};

/// Two-point numerical flux across the face `K|L` oriented along `+axis`.
pub trait NumericalFlux: Send + Sync {
    /// Registry name, as selectable from config.
    fn name(&self) -> &'static str;

    /// Face value given the two adjacent cell states and the diffusion
    /// coefficient for this face.
    fn face_flux(
        &self,
        left: &CellState,
        right: &CellState,
        axis: usize,
        lambda_face: f64,
        eos: &EosParams,
    ) -> Result<FluxVec>;
}

/// Central mean of the physical fluxes minus `lambda` times the state jump.
pub fn lf_flux(
    left: &CellState,
    right: &CellState,
    axis: usize,
    lambda_face: f64,
    eos: &EosParams,
) -> Result<FluxVec> {
    debug_assert_eq!(left.dim, right.dim);
    let fl = phys_flux(left, axis, eos)?;
    let fr = phys_flux(right, axis, eos)?;
    let mut out = [0.0; 4];
    out[0] = 0.5 * (fl[0] + fr[0]) - lambda_face * (right.rho - left.rho);
    for j in 0..left.dim {
        out[1 + j] =
            0.5 * (fl[1 + j] + fr[1 + j]) - lambda_face * (right.m[j] - left.m[j]);
    }
    Ok(out)
}

/// The Lax-Friedrichs strategy.
pub struct LaxFriedrichs;

impl NumericalFlux for LaxFriedrichs {
    fn name(&self) -> &'static str {
        "lax-friedrichs"
    }

    fn face_flux(
        &self,
        left: &CellState,
        right: &CellState,
        axis: usize,
        lambda_face: f64,
        eos: &EosParams,
    ) -> Result<FluxVec> {
        lf_flux(left, right, axis, lambda_face, eos)
    }
}

type FluxCtor = fn() -> Box<dyn NumericalFlux>;

/// Name -> constructor table of every registered flux strategy.
static REGISTRY: &[(&str, FluxCtor)] = &[("lax-friedrichs", || Box::new(LaxFriedrichs))];

/// Instantiate a flux strategy by registry name.
pub fn create(name: &str) -> Option<Box<dyn NumericalFlux>> {
    REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, ctor)| ctor())
}

/// Names of all registered strategies, for config validation messages.
pub fn available() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

/// Unknown-name error with the list of valid choices spelled out.
pub fn create_or_err(name: &str) -> Result<Box<dyn NumericalFlux>> {
    create(name).ok_or_else(|| Error::ValidationError {
        field: "scheme.flux".into(),
        reason: format!("unknown flux '{}', available: {}", name, available().join(", ")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn registry_resolves_the_shipped_strategy() {
        let f = create("lax-friedrichs").expect("registered");
        assert_eq!(f.name(), "lax-friedrichs");
        assert!(create("roe").is_none());
        assert_eq!(available(), vec!["lax-friedrichs"]);
        assert!(create_or_err("nope").is_err());
    }

    #[test]
    fn worked_face_example() {
        // gamma = 2, lambda = 2, U_K = (1, 0), U_L = (1, 2):
        // means (1, 3), jump (0, 2), flux (1, -1).
        let eos = EosParams::new(2.0, 1.0).unwrap();
        let uk = CellState::new(1.0, &[0.0]);
        let ul = CellState::new(1.0, &[2.0]);
        let f = lf_flux(&uk, &ul, 0, 2.0, &eos).unwrap();
        assert!((f[0] - 1.0).abs() < 1e-15);
        assert!((f[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn orientation_antisymmetry_of_the_jump_part() {
        // Swapping the cells flips the sign of the diffusion contribution
        // while the central part is symmetric.
        let eos = EosParams::new(1.4, 1.0).unwrap();
        let ua = CellState::new(1.3, &[0.4, -0.2]);
        let ub = CellState::new(0.8, &[-0.1, 0.5]);
        let fab = lf_flux(&ua, &ub, 1, 1.7, &eos).unwrap();
        let fba = lf_flux(&ub, &ua, 1, 1.7, &eos).unwrap();
        let central_a = phys_flux(&ua, 1, &eos).unwrap();
        let central_b = phys_flux(&ub, 1, &eos).unwrap();
        for j in 0..3 {
            let mean = 0.5 * (central_a[j] + central_b[j]);
            assert!(((fab[j] - mean) + (fba[j] - mean)).abs() < 1e-14);
        }
    }

    proptest! {
        /// Consistency: on equal states the numerical flux reduces to the
        /// physical flux for any diffusion coefficient.
        #[test]
        fn reduces_to_physical_flux_on_equal_states(
            rho in 1e-3f64..1e3,
            mx in -5.0f64..5.0,
            my in -5.0f64..5.0,
            mz in -5.0f64..5.0,
            gamma in 1.05f64..3.0,
            a in 0.1f64..10.0,
            lambda in 0.0f64..10.0,
            dim in 1usize..4,
            axis_pick in 0usize..3,
        ) {
            let eos = EosParams::new(gamma, a).unwrap();
            let u = CellState::new(rho, &[mx, my, mz][..dim]);
            let axis = axis_pick % dim;
            let num = lf_flux(&u, &u, axis, lambda, &eos).unwrap();
            let phys = phys_flux(&u, axis, &eos).unwrap();
            for j in 0..=dim {
                let scale = phys[j].abs().max(1.0);
                prop_assert!((num[j] - phys[j]).abs() <= 1e-13 * scale);
            }
        }
    }
}
