//! Pointwise thermodynamics of the binary mixture: the logarithmic
//! Flory–Huggins potential, affine density and viscosity laws and the total
//! energy `E = ∫ ½ρ(φ)|u|² + ½|∇φ|² + Ψ(φ)`.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, VectorField};
use crate::spectral::SpectralWorkspace;

/// Physical and numerical constants of one simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub rho1: f64,
    pub rho2: f64,
    pub nu1: f64,
    pub nu2: f64,
    /// Absolute temperature of the mixing entropy, `0 < theta < theta0`.
    pub theta: f64,
    /// Critical temperature of the demixing term.
    pub theta0: f64,
    /// Viscous Cahn–Hilliard regularisation, `alpha >= 0`.
    pub alpha: f64,
    pub dt: f64,
    pub phi_floor: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub pressure_tol: f64,
    pub grid: GridSpec,
}

impl Params {
    pub const DEFAULT_PHI_FLOOR: f64 = 1e-12;
    pub const DEFAULT_NEWTON_TOL: f64 = 1e-10;
    pub const DEFAULT_NEWTON_MAX_ITER: usize = 50;
    pub const DEFAULT_PRESSURE_TOL: f64 = 1e-10;

    /// Parameters with the documented numerical defaults.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        grid: GridSpec,
        rho1: f64,
        rho2: f64,
        nu1: f64,
        nu2: f64,
        theta: f64,
        theta0: f64,
        alpha: f64,
        dt: f64,
    ) -> Result<Self> {
        let p = Self {
            rho1,
            rho2,
            nu1,
            nu2,
            theta,
            theta0,
            alpha,
            dt,
            phi_floor: Self::DEFAULT_PHI_FLOOR,
            newton_tol: Self::DEFAULT_NEWTON_TOL,
            newton_max_iter: Self::DEFAULT_NEWTON_MAX_ITER,
            pressure_tol: Self::DEFAULT_PRESSURE_TOL,
            grid,
        };
        p.validate()?;
        Ok(p)
    }

    /// Unequal densities and viscosities, shallow quench: the reference
    /// two-phase scenario (`ρ = (1, 3)`, `ν = (1, 0.1)`, `θ = 0.8`, `θ₀ = 1`).
    pub fn reference(grid: GridSpec, dt: f64) -> Self {
        Self::new(grid, 1.0, 3.0, 1.0, 0.1, 0.8, 1.0, 0.0, dt)
            .expect("reference parameters are valid")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho1", self.rho1),
            ("rho2", self.rho2),
            ("nu1", self.nu1),
            ("nu2", self.nu2),
            ("theta", self.theta),
            ("dt", self.dt),
            ("phi_floor", self.phi_floor),
            ("newton_tol", self.newton_tol),
            ("pressure_tol", self.pressure_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.theta0.is_finite() && self.theta < self.theta0) {
            return Err(Error::InvalidParams(format!(
                "temperatures must satisfy 0 < theta < theta0, got theta = {}, theta0 = {}",
                self.theta, self.theta0
            )));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "alpha must be nonnegative, got {}",
                self.alpha
            )));
        }
        if self.phi_floor >= 0.5 {
            return Err(Error::InvalidParams("phi_floor must be small".into()));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::InvalidParams("newton_max_iter must be >= 1".into()));
        }
        Ok(())
    }

    pub fn potential(&self) -> Potential {
        Potential {
            theta: self.theta,
            theta0: self.theta0,
            phi_floor: self.phi_floor,
        }
    }

    pub fn mixture(&self) -> Mixture {
        Mixture {
            rho_mean: 0.5 * (self.rho1 + self.rho2),
            rho_half_diff: 0.5 * (self.rho1 - self.rho2),
            nu_mean: 0.5 * (self.nu1 + self.nu2),
            nu_half_diff: 0.5 * (self.nu1 - self.nu2),
        }
    }

    /// Same mixture with density frozen at `rho_bar` (model H).
    pub fn model_h_mixture(&self, rho_bar: f64) -> Mixture {
        Mixture {
            rho_mean: rho_bar,
            rho_half_diff: 0.0,
            ..self.mixture()
        }
    }

    pub fn flux_coefficient(&self) -> f64 {
        self.mixture().flux_coefficient()
    }
}

/// `Ψ(s) = F(s) - θ₀ s²/2` with `F(s) = θ/2 [(1+s) ln(1+s) + (1-s) ln(1-s)]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Potential {
    pub theta: f64,
    pub theta0: f64,
    pub phi_floor: f64,
}

impl Potential {
    #[inline]
    pub fn check(&self, s: f64) -> Result<()> {
        // also rejects NaN
        if s.abs() <= 1.0 - self.phi_floor {
            Ok(())
        } else {
            Err(Error::PhaseOutOfRange {
                value: s,
                floor: self.phi_floor,
            })
        }
    }

    pub fn convex_part(&self, s: f64) -> Result<f64> {
        self.check(s)?;
        Ok(0.5 * self.theta * ((1.0 + s) * s.ln_1p() + (1.0 - s) * (-s).ln_1p()))
    }

    pub fn convex_prime(&self, s: f64) -> Result<f64> {
        self.check(s)?;
        Ok(self.theta * s.atanh())
    }

    pub fn convex_second(&self, s: f64) -> Result<f64> {
        self.check(s)?;
        Ok(self.theta / ((1.0 - s) * (1.0 + s)))
    }

    pub fn psi(&self, s: f64) -> Result<f64> {
        Ok(self.convex_part(s)? - 0.5 * self.theta0 * s * s)
    }

    pub fn psi_prime(&self, s: f64) -> Result<f64> {
        Ok(self.convex_prime(s)? - self.theta0 * s)
    }

    /// Largest `|s|` with `|F'(s)| <= level`, i.e. `tanh(level/θ)`.
    pub fn convex_prime_inverse_bound(&self, level: f64) -> f64 {
        (level / self.theta).tanh()
    }
}

/// Affine material laws `ρ(s) = ρ̄ + ρ' s`, `ν(s) = ν̄ + ν' s`.
///
/// Stored as mean and half-difference so that matched densities give a
/// bitwise-constant `ρ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mixture {
    pub rho_mean: f64,
    pub rho_half_diff: f64,
    pub nu_mean: f64,
    pub nu_half_diff: f64,
}

impl Mixture {
    #[inline]
    pub fn density(&self, s: f64) -> f64 {
        self.rho_mean + self.rho_half_diff * s
    }

    #[inline]
    pub fn viscosity(&self, s: f64) -> f64 {
        self.nu_mean + self.nu_half_diff * s
    }

    /// `ρ'(φ)`, constant because `ρ` is affine.
    pub fn density_slope(&self) -> f64 {
        self.rho_half_diff
    }

    /// Scalar factor of the diffusive flux `J̃ = -(ρ₁-ρ₂)/2 ∇μ`.
    pub fn flux_coefficient(&self) -> f64 {
        -self.rho_half_diff
    }

    pub fn rho_min(&self) -> f64 {
        self.rho_mean - self.rho_half_diff.abs()
    }

    pub fn nu_max(&self) -> f64 {
        self.nu_mean + self.nu_half_diff.abs()
    }

    pub fn density_field(&self, phi: &ScalarField) -> ScalarField {
        phi.map(|s| self.density(s))
    }

    pub fn viscosity_field(&self, phi: &ScalarField) -> ScalarField {
        phi.map(|s| self.viscosity(s))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBreakdown {
    pub e_kin: f64,
    pub e_free: f64,
    pub e_total: f64,
}

/// `∫ ½|∇φ|² + Ψ(φ)`.
pub fn free_energy(ws: &SpectralWorkspace, phi: &ScalarField, pot: &Potential) -> Result<f64> {
    let psi = phi.try_map(|s| pot.psi(s))?;
    let g = ws.grad(phi);
    let grad_sq: f64 = g.components().iter().map(|c| c.dot(c)).sum();
    Ok(0.5 * grad_sq + psi.integral())
}

/// `∫ ½ρ(φ)|u|²`.
pub fn kinetic_energy(u: &VectorField, phi: &ScalarField, mix: &Mixture) -> f64 {
    let rho = mix.density_field(phi);
    0.5 * u
        .components()
        .iter()
        .map(|c| c.mul_pointwise(&rho).dot(c))
        .sum::<f64>()
}

pub fn energy_breakdown(
    ws: &SpectralWorkspace,
    u: &VectorField,
    phi: &ScalarField,
    pot: &Potential,
    mix: &Mixture,
) -> Result<EnergyBreakdown> {
    let e_free = free_energy(ws, phi, pot)?;
    let e_kin = kinetic_energy(u, phi, mix);
    Ok(EnergyBreakdown {
        e_kin,
        e_free,
        e_total: e_kin + e_free,
    })
}

/// Total energy with the two-fluid density law of `p`.
pub fn total_energy(
    ws: &SpectralWorkspace,
    u: &VectorField,
    phi: &ScalarField,
    p: &Params,
) -> Result<EnergyBreakdown> {
    energy_breakdown(ws, u, phi, &p.potential(), &p.mixture())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> Params {
        Params::new(GridSpec::square(16).unwrap(), 1.0, 3.0, 1.0, 0.1, 0.8, 1.0, 0.0, 1e-3)
            .unwrap()
    }

    #[test]
    fn potential_reference_values() {
        let pot = params().potential();
        assert_eq!(pot.convex_prime(0.0).unwrap(), 0.0);
        assert_eq!(pot.psi(0.0).unwrap(), 0.0);
        // high-precision oracle values
        assert!((pot.convex_second(0.5).unwrap() - 1.066_666_666_666_666_7).abs() < 1e-15);
        assert!((pot.convex_prime(0.5).unwrap() - 0.439_444_915_467_243_9).abs() < 1e-15);
        assert!((pot.psi_prime(0.5).unwrap() + 0.060_555_084_532_756_12).abs() < 1e-15);
        assert!((pot.psi(0.5).unwrap() + 0.020_350_371_247_090_43).abs() < 1e-15);
    }

    #[test]
    fn second_derivative_matches_finite_differences() {
        let pot = params().potential();
        for s in [-0.9, -0.3, 0.0, 0.5, 0.95] {
            let h = 1e-6;
            let fd = (pot.convex_prime(s + h).unwrap() - pot.convex_prime(s - h).unwrap()) / (2.0 * h);
            let exact = pot.convex_second(s).unwrap();
            assert!((fd - exact).abs() <= 1e-6 * exact);
        }
    }

    #[test]
    fn guard_rejects_pure_phases() {
        let pot = params().potential();
        assert!(matches!(pot.psi(1.0), Err(Error::PhaseOutOfRange { .. })));
        assert!(matches!(pot.convex_prime(-1.0), Err(Error::PhaseOutOfRange { .. })));
        assert!(pot.convex_prime(1.0 - 1e-11).is_ok());
        assert!(pot.convex_prime(1.0 - 1e-13).is_err());
        assert!(pot.psi(f64::NAN).is_err());
    }

    #[test]
    fn density_endpoints() {
        let p = params();
        let mix = p.mixture();
        assert_eq!(mix.density(1.0), p.rho1);
        assert_eq!(mix.density(-1.0), p.rho2);
        assert_eq!(mix.density(0.0), 2.0);
        assert!((mix.viscosity(1.0) - p.nu1).abs() < 1e-15);
        assert!((mix.viscosity(-1.0) - p.nu2).abs() < 1e-16);
        assert_eq!(p.flux_coefficient(), 1.0);
        let matched =
            Params::new(p.grid, 2.0, 2.0, 1.0, 1.0, 0.8, 1.0, 0.0, 1e-3).unwrap();
        assert_eq!(matched.flux_coefficient(), 0.0);
    }

    #[test]
    fn params_validation() {
        let g = GridSpec::square(16).unwrap();
        let err = Params::new(g, 1.0, 1.0, 1.0, 1.0, 1.0, 0.8, 0.0, 1e-3).unwrap_err();
        assert!(err.to_string().contains("0 < theta < theta0"));
        assert!(Params::new(g, -1.0, 1.0, 1.0, 1.0, 0.5, 0.8, 0.0, 1e-3).is_err());
        assert!(Params::new(g, 1.0, 1.0, 1.0, 1.0, 0.5, 0.8, -0.1, 1e-3).is_err());
    }

    #[test]
    fn energy_of_trivial_states() {
        let p = params();
        let ws = SpectralWorkspace::new(p.grid);
        let u = VectorField::zeros(p.grid);
        let e = total_energy(&ws, &u, &ScalarField::zeros(p.grid), &p).unwrap();
        assert_eq!((e.e_kin, e.e_free, e.e_total), (0.0, 0.0, 0.0));

        let c = 0.1;
        let e = total_energy(&ws, &u, &ScalarField::constant(p.grid, c), &p).unwrap();
        let expect = p.grid.volume() * -0.000_993_306_522_914_530_02;
        assert!((e.e_free - expect).abs() < 1e-14);
        assert_eq!(e.e_kin, 0.0);
    }

    #[test]
    fn kinetic_energy_is_quadratic() {
        let p = params();
        let ws = SpectralWorkspace::new(p.grid);
        let u = VectorField::from_fn(p.grid, |x, i| if i == 0 { x[1].sin() } else { x[0].cos() });
        let phi = ScalarField::from_fn(p.grid, |x| 0.2 * x[0].cos());
        let e1 = total_energy(&ws, &u, &phi, &p).unwrap();
        let e2 = total_energy(&ws, &u.scaled(2.0), &phi, &p).unwrap();
        assert!((e2.e_kin - 4.0 * e1.e_kin).abs() < 1e-13 * e1.e_kin);
        assert_eq!(e1.e_free, e2.e_free);
    }
}
