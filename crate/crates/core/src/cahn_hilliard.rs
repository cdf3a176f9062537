//! Convective viscous Cahn–Hilliard step.
//!
//! Backward Euler on `∂ₜφ`, on the convex part `-Δφ + F'(φ)` and on `α∂ₜφ`;
//! the concave term `-θ₀φ` and the convection `u·∇φ` are explicit:
//!
//! ```text
//! (φ' - φ)/Δt + u·∇φ = Δμ',   μ' = α(φ' - φ)/Δt - Δφ' + F'(φ') - θ₀φ
//! ```
//!
//! Applying `(-Δ)⁻¹` turns this into the monotone problem
//! `[(1/Δt)((-Δ)⁻¹ + α) - Δ] φ' + F'(φ') = b` on mean-free perturbations,
//! solved by [`crate::newton`]. The zero Fourier mode is never touched, which
//! makes mass conservation exact up to round-off.

use crate::error::{Error, Result};
use crate::grid::{ScalarField, VectorField};
use crate::newton::MonotoneProblem;
use crate::spectral::SpectralWorkspace;
use crate::thermo::{free_energy, Params};

#[derive(Clone, Debug, PartialEq)]
pub struct CHStepResult {
    pub phi_next: ScalarField,
    pub mu_next: ScalarField,
    pub dphi_dt: ScalarField,
    pub newton_iters: usize,
    pub free_energy_next: f64,
}

/// `μ = α ∂ₜφ - Δφ + Ψ'(φ)`.
pub fn chemical_potential(
    ws: &SpectralWorkspace,
    phi: &ScalarField,
    dphi_dt: Option<&ScalarField>,
    p: &Params,
) -> Result<ScalarField> {
    let pot = p.potential();
    let mut mu = phi.try_map(|s| pot.psi_prime(s))?;
    mu.axpy(-1.0, &ws.laplacian(phi));
    if let Some(dt_phi) = dphi_dt {
        if p.alpha != 0.0 {
            mu.axpy(p.alpha, dt_phi);
        }
    }
    Ok(mu)
}

/// `1 - max|φ|`; nonpositive once the phase reaches a pure state.
pub fn separation_margin(phi: &ScalarField) -> f64 {
    1.0 - phi.max_abs()
}

/// Dealiased `u·∇φ` with its (analytically zero) mean removed.
pub fn convection(ws: &SpectralWorkspace, u: &VectorField, phi: &ScalarField) -> ScalarField {
    let g = ws.grad(phi);
    let mut acc = ScalarField::zeros(*phi.grid());
    for (uc, gc) in u.components().iter().zip(g.components()) {
        for ((a, x), y) in acc.values_mut().iter_mut().zip(uc.values()).zip(gc.values()) {
            *a += x * y;
        }
    }
    let mut s = ws.forward(&acc);
    ws.dealias_spectrum(&mut s);
    s.coeffs_mut()[0] = num_complex::Complex64::new(0.0, 0.0);
    ws.inverse(&s)
}

pub fn cvch_step(
    ws: &SpectralWorkspace,
    phi_n: &ScalarField,
    u: &VectorField,
    p: &Params,
) -> Result<CHStepResult> {
    let pot = p.potential();
    for &v in phi_n.values() {
        pot.check(v)?;
    }
    let dt = p.dt;
    let alpha = p.alpha;
    let ksq = ws.ksq_table();

    let symbol: Vec<f64> = ksq
        .iter()
        .map(|&k2| {
            if k2 == 0.0 {
                alpha / dt
            } else {
                (1.0 / k2 + alpha) / dt + k2
            }
        })
        .collect();

    let conv = convection(ws, u, phi_n);
    let phi_hat = ws.forward(phi_n);
    let conv_hat = ws.forward(&conv);
    let mut rhs_hat = phi_hat.clone();
    for (m, (r, (ph, ch))) in rhs_hat
        .coeffs_mut()
        .iter_mut()
        .zip(phi_hat.coeffs().iter().zip(conv_hat.coeffs()))
        .enumerate()
    {
        let k2 = ksq[m];
        *r = if k2 == 0.0 {
            num_complex::Complex64::new(0.0, 0.0)
        } else {
            ph * ((1.0 / k2 + alpha) / dt + p.theta0) - ch / k2
        };
    }
    let rhs = ws.inverse(&rhs_hat);

    let problem = MonotoneProblem {
        ws,
        symbol,
        rhs,
        potential: pot,
        conserve_mean: true,
        tol: p.newton_tol,
        max_iter: p.newton_max_iter,
    };
    let sol = problem.solve(phi_n.clone())?;
    let phi_next = sol.phi;

    let dphi_dt = (&phi_next - phi_n).map(|v| v / dt);
    // μ' with the concave part taken at the old level
    let mut mu_next = phi_next.try_map(|s| pot.convex_prime(s))?;
    mu_next.axpy(-1.0, &ws.laplacian(&phi_next));
    mu_next.axpy(-p.theta0, phi_n);
    if alpha != 0.0 {
        mu_next.axpy(alpha, &dphi_dt);
    }
    let free_energy_next = free_energy(ws, &phi_next, &pot)?;
    if !phi_next.is_finite() {
        return Err(Error::NewtonDivergence {
            iterations: sol.iterations,
            residual: f64::NAN,
        });
    }
    Ok(CHStepResult {
        phi_next,
        mu_next,
        dphi_dt,
        newton_iters: sol.iterations,
        free_energy_next,
    })
}
