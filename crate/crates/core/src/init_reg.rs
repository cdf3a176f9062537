//! Regularisation of the initial phase field.
//!
//! With `μ̃₀ = -Δφ₀ + F'(φ₀)` and the clamp `h_k`, solve
//! `-Δφ₀ₖ + F'(φ₀ₖ) = h_k(μ̃₀)`. Because `‖F'(φ₀ₖ)‖∞ <= k`, the result is
//! strictly separated: `max|φ₀ₖ| <= tanh(k/θ)`.

use crate::error::Result;
use crate::grid::ScalarField;
use crate::newton::MonotoneProblem;
use crate::spectral::SpectralWorkspace;
use crate::thermo::Params;

/// Shrink factor applied to data touching the pure phases.
pub const PURE_PHASE_SHRINK: f64 = 1.0 - 1e-6;
/// Interior scaling of the Newton initial guess.
pub const GUESS_SCALE: f64 = 0.95;

#[derive(Clone, Debug, PartialEq)]
pub struct InitRegResult {
    pub phi0k: ScalarField,
    pub mu0k: ScalarField,
    /// `1 - max|φ₀ₖ|`.
    pub separation: f64,
    /// Whether the clamp modified `μ̃₀` anywhere.
    pub cutoff_active: bool,
    pub newton_iters: usize,
    pub residual: f64,
}

/// Pointwise clamp of `f` to `[-k, k]`.
pub fn cutoff(f: &ScalarField, k: f64) -> ScalarField {
    f.map(|v| v.clamp(-k, k))
}

/// `μ̃₀ = -Δφ₀ + F'(φ₀)`.
pub fn unregularized_potential(
    ws: &SpectralWorkspace,
    phi0: &ScalarField,
    p: &Params,
) -> Result<ScalarField> {
    let pot = p.potential();
    let fp = phi0.try_map(|s| pot.convex_prime(s))?;
    Ok(&fp - &ws.laplacian(phi0))
}

pub fn regularize_initial_datum(
    ws: &SpectralWorkspace,
    phi0: &ScalarField,
    k: f64,
    p: &Params,
) -> Result<InitRegResult> {
    let pot = p.potential();
    let phi0 = if phi0.max_abs() >= 1.0 {
        phi0.map(|v| v * PURE_PHASE_SHRINK)
    } else {
        phi0.clone()
    };
    let mu_tilde = unregularized_potential(ws, &phi0, p)?;
    let target = cutoff(&mu_tilde, k);
    let cutoff_active = mu_tilde.max_abs() > k;

    let problem = MonotoneProblem {
        ws,
        symbol: ws.ksq_table().to_vec(),
        rhs: target.clone(),
        potential: pot,
        conserve_mean: false,
        tol: p.newton_tol,
        max_iter: p.newton_max_iter,
    };
    let sol = problem.solve(phi0.map(|v| GUESS_SCALE * v))?;
    let separation = 1.0 - sol.phi.max_abs();
    Ok(InitRegResult {
        phi0k: sol.phi,
        mu0k: target,
        separation,
        cutoff_active,
        newton_iters: sol.iterations,
        residual: sol.residual,
    })
}
