//! Momentum update in non-conservative form,
//!
//! ```text
//! ρ(φ)∂ₜu + ρ(φ)(u·∇)u - ρ'(∇μ·∇)u - div(ν(φ)Du) + ∇P = μ∇φ   (mod ∇)
//! ```
//!
//! The velocity lives in the span of the Stokes eigenmodes with positive
//! eigenvalue (solenoidal and mean-free). A constant Lagrange multiplier keeps
//! the mean at zero and a variable-coefficient pressure keeps the update
//! solenoidal. The stiff part `c Δ` with `c = ν_max / (2ρ_min)` is implicit.

use crate::error::{Error, Result};
use crate::grid::{ScalarField, TensorField, VectorField};
use crate::spectral::SpectralWorkspace;
use crate::thermo::{Mixture, Params};

const PRESSURE_MAX_ITER: usize = 500;

#[derive(Clone, Debug, PartialEq)]
pub struct MomentumStepResult {
    pub u_next: VectorField,
    pub pressure: ScalarField,
    /// Total pressure CG iterations over all solves in the step.
    pub picard_iters: usize,
    /// `∫ν(φ)|Du'|²` on the updated velocity.
    pub viscous_dissipation: f64,
}

fn check_phase(phi: &ScalarField) -> Result<()> {
    match phi.values().iter().find(|v| !(v.abs() < 1.0)) {
        Some(&value) => Err(Error::PhaseOutOfRange { value, floor: 0.0 }),
        None => Ok(()),
    }
}

/// Leray-projected, dealiased `μ∇φ`.
pub fn korteweg_force(ws: &SpectralWorkspace, phi: &ScalarField, mu: &ScalarField) -> VectorField {
    let g = ws.grad(phi);
    ws.leray_project(&g.map_components(|c| ws.product(mu, c)))
}

/// Leray-projected `-div(∇φ⊗∇φ)`, the capillary stress form of the same force.
pub fn korteweg_stress_force(ws: &SpectralWorkspace, phi: &ScalarField) -> VectorField {
    let g = ws.grad(phi);
    let d = g.dim();
    let mut entries = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            entries.push(ws.product(g.component(i), g.component(j)));
        }
    }
    let t = TensorField::from_entries(d, entries);
    ws.leray_project(&(-&ws.tensor_divergence(&t)))
}

/// `div(ν(φ) Du)` with the product dealiased.
pub fn viscous_force(
    ws: &SpectralWorkspace,
    u: &VectorField,
    nu: &ScalarField,
) -> VectorField {
    let sym = ws.sym_grad(u);
    let d = u.dim();
    let mut entries = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            entries.push(ws.product(nu, sym.get(i, j)));
        }
    }
    ws.tensor_divergence(&TensorField::from_entries(d, entries))
}

/// Everything but `ρ∂ₜu` and `∇P`:
/// `-ρ(φ)(u·∇)u + ρ'(∇μ·∇)u + div(ν(φ)Du) + μ∇φ`.
pub fn momentum_rhs(
    ws: &SpectralWorkspace,
    u: &VectorField,
    phi: &ScalarField,
    mu: &ScalarField,
    mix: &Mixture,
) -> Result<VectorField> {
    check_phase(phi)?;
    let rho = mix.density_field(phi);
    let nu = mix.viscosity_field(phi);

    let adv = ws.advect(u, u);
    let mut rhs = adv.map_components(|c| -&ws.product(&rho, c));

    let slope = mix.density_slope();
    if slope != 0.0 {
        let flux_adv = ws.advect(&ws.grad(mu), u);
        rhs.axpy(slope, &flux_adv);
    }

    rhs = &rhs + &viscous_force(ws, u, &nu);

    let g = ws.grad(phi);
    rhs = &rhs + &g.map_components(|c| ws.product(mu, c));
    Ok(rhs)
}

/// Mean-free `P` with `div((1/ρ)(rhs - ∇P)) = 0`, by conjugate gradients on
/// `-div(ρ⁻¹∇·)` preconditioned with `ρ̄(-Δ)⁻¹`, `ρ̄ = mean(ρ)`.
///
/// Returns the pressure and the iteration count.
pub fn pressure_solve(
    ws: &SpectralWorkspace,
    rhs: &VectorField,
    rho_field: &ScalarField,
    tol: f64,
) -> Result<(ScalarField, usize)> {
    let grid = *rho_field.grid();
    let sigma = rho_field.map(|r| 1.0 / r);
    let rho_bar = rho_field.mean();
    let rhs_norm = rhs.norm_l2();

    let minus_div_sigma = |v: &VectorField| -> ScalarField {
        -&ws.divergence(&v.scaled_by_field(&sigma))
    };
    let apply = |p: &ScalarField| minus_div_sigma(&ws.grad(p));
    let precondition = |r: &ScalarField| {
        let ws_ref = ws;
        ws.apply_symbol(r, |m| {
            let k2: f64 = (0..grid.dim())
                .map(|a| ws_ref.derivative_wavenumber(m, a).powi(2))
                .sum();
            if k2 == 0.0 {
                0.0
            } else {
                rho_bar / k2
            }
        })
    };

    let b = minus_div_sigma(rhs);
    let mut x = ScalarField::zeros(grid);
    let mut r = b.clone();
    let target = tol * rhs_norm;
    if r.norm_l2() <= target {
        return Ok((x, 0));
    }
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for it in 1..=PRESSURE_MAX_ITER {
        let ap = apply(&p);
        let pap = p.dot(&ap);
        if !(pap > 0.0) {
            return Err(Error::PressureIterationDivergence {
                iterations: it,
                residual: r.norm_l2(),
            });
        }
        let a = rz / pap;
        x.axpy(a, &p);
        r.axpy(-a, &ap);
        if r.norm_l2() <= target {
            let m = x.mean();
            return Ok((x.map(|v| v - m), it));
        }
        z = precondition(&r);
        let rz_new = r.dot(&z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pv, zv) in p.values_mut().iter_mut().zip(z.values()) {
            *pv = zv + beta * *pv;
        }
    }
    Err(Error::PressureIterationDivergence {
        iterations: PRESSURE_MAX_ITER,
        residual: r.norm_l2(),
    })
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Density law used by a step: the two-fluid law, or constant `rho_bar`
/// for model H.
pub fn step_mixture(p: &Params, model_h: bool, rho_bar: f64) -> Mixture {
    if model_h {
        p.model_h_mixture(rho_bar)
    } else {
        p.mixture()
    }
}

pub fn momentum_step(
    ws: &SpectralWorkspace,
    u_n: &VectorField,
    phi: &ScalarField,
    mu: &ScalarField,
    p: &Params,
    model_h: bool,
    rho_bar: f64,
) -> Result<MomentumStepResult> {
    let mix = step_mixture(p, model_h, rho_bar);
    let grid = *phi.grid();
    let d = grid.dim();
    let rhs = momentum_rhs(ws, u_n, phi, mu, &mix)?;
    let rho = mix.density_field(phi);
    let sigma = rho.map(|r| 1.0 / r);

    let (p_rhs, mut iters) = pressure_solve(ws, &rhs, &rho, p.pressure_tol)?;
    let w_rhs = (&rhs - &ws.grad(&p_rhs)).scaled_by_field(&sigma);

    // Uniform force c keeping the update mean-free: mean(σ(R - c - ∇P)) = 0.
    let mut basis_p = Vec::with_capacity(d);
    let mut basis_w = Vec::with_capacity(d);
    let mut matrix = vec![vec![0.0; d]; d];
    for j in 0..d {
        let e = VectorField::from_fn(grid, |_, i| if i == j { 1.0 } else { 0.0 });
        let (pj, it) = pressure_solve(ws, &e, &rho, p.pressure_tol)?;
        iters += it;
        let wj = (&e - &ws.grad(&pj)).scaled_by_field(&sigma);
        for (i, row) in matrix.iter_mut().enumerate() {
            row[j] = wj.component(i).mean();
        }
        basis_p.push(pj);
        basis_w.push(wj);
    }
    let c = solve_dense(matrix, w_rhs.means());
    let mut pressure = p_rhs;
    let mut w = w_rhs;
    for j in 0..d {
        pressure.axpy(-c[j], &basis_p[j]);
        w.axpy(-c[j], &basis_w[j]);
    }

    let implicit = mix.nu_max() / (2.0 * mix.rho_min()) * p.dt;
    let increment = w.map_components(|f| ws.apply_symbol(f, |m| p.dt / (1.0 + implicit * ws.ksq(m))));
    let u_next = ws.solenoidal_mean_free(&(u_n + &increment));

    let nu = mix.viscosity_field(phi);
    let viscous_dissipation = ws.sym_grad(&u_next).weighted_norm_sq(&nu);
    let m = pressure.mean();
    Ok(MomentumStepResult {
        u_next,
        pressure: pressure.map(|v| v - m),
        picard_iters: iters,
        viscous_dissipation,
    })
}
