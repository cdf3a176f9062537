//! Damped Newton solver for the monotone problems that appear in every phase
//! update:
//!
//! ```text
//! S φ + F'(φ) = b
//! ```
//!
//! where `S` is a nonnegative Fourier multiplier and `F` the convex part of
//! the potential. The problem is the Euler–Lagrange equation of the strictly
//! convex functional `J(φ) = ½⟨φ, Sφ⟩ + ∫F(φ) - ⟨b, φ⟩`, which drives the
//! line search. Newton systems `(S + F''(φ)) δ = -R` are solved by conjugate
//! gradients preconditioned with the constant-coefficient multiplier
//! `S + mean F''(φ)`.

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::spectral::SpectralWorkspace;
use crate::thermo::Potential;

const CG_REL_TOL: f64 = 1e-12;
const CG_MAX_ITER: usize = 400;
const CG_STALL: usize = 25;
const MAX_HALVINGS: usize = 30;

pub(crate) struct MonotoneProblem<'a> {
    pub ws: &'a SpectralWorkspace,
    /// Multiplier `S(k)` per flat mode.
    pub symbol: Vec<f64>,
    pub rhs: ScalarField,
    pub potential: Potential,
    /// Keep the mean of the initial guess; residuals are then taken mean-free.
    pub conserve_mean: bool,
    pub tol: f64,
    pub max_iter: usize,
}

pub(crate) struct MonotoneSolution {
    pub phi: ScalarField,
    pub iterations: usize,
    pub residual: f64,
}

impl MonotoneProblem<'_> {
    fn project(&self, f: &mut ScalarField) {
        if self.conserve_mean {
            let m = f.mean();
            for v in f.values_mut() {
                *v -= m;
            }
        }
    }

    fn residual(&self, phi: &ScalarField) -> Result<ScalarField> {
        let fp = phi.try_map(|s| self.potential.convex_prime(s))?;
        let sphi = self.ws.apply_symbol(phi, |m| self.symbol[m]);
        let mut r = ScalarField::from_vec_unchecked(
            *phi.grid(),
            sphi.values()
                .iter()
                .zip(fp.values())
                .zip(self.rhs.values())
                .map(|((a, b), c)| a + b - c)
                .collect(),
        );
        self.project(&mut r);
        Ok(r)
    }

    fn functional(&self, phi: &ScalarField) -> Result<f64> {
        let s = self.ws.forward(phi);
        let quad: f64 = s
            .coeffs()
            .iter()
            .zip(&self.symbol)
            .map(|(c, k)| k * c.norm_sqr())
            .sum::<f64>()
            * phi.grid().volume();
        let convex: f64 = phi
            .values()
            .iter()
            .map(|&v| self.potential.convex_part(v))
            .sum::<Result<f64>>()?
            * phi.grid().cell_volume();
        Ok(0.5 * quad + convex - self.rhs.dot(phi))
    }

    fn feasible(&self, phi: &ScalarField) -> bool {
        let bound = 1.0 - self.potential.phi_floor;
        phi.values().iter().all(|v| v.abs() <= bound)
    }

    /// Preconditioned CG for `(S + diag(w)) δ = rhs` with `w = F''(φ)`.
    fn newton_direction(&self, weight: &ScalarField, rhs: &ScalarField) -> ScalarField {
        let shift = weight.mean();
        let zero_mode = if self.conserve_mean {
            0.0
        } else {
            1.0 / (self.symbol[0] + shift)
        };
        let precondition = |r: &ScalarField| {
            let mut z = self.ws.apply_symbol(r, |m| {
                if m == 0 {
                    zero_mode
                } else {
                    1.0 / (self.symbol[m] + shift)
                }
            });
            self.project(&mut z);
            z
        };
        let apply = |x: &ScalarField| {
            let mut y = self.ws.apply_symbol(x, |m| self.symbol[m]);
            for ((yv, xv), wv) in y.values_mut().iter_mut().zip(x.values()).zip(weight.values()) {
                *yv += wv * xv;
            }
            self.project(&mut y);
            y
        };

        let grid = *rhs.grid();
        let mut x = ScalarField::zeros(grid);
        let mut r = rhs.clone();
        let target = CG_REL_TOL * rhs.norm_l2();
        if rhs.norm_l2() == 0.0 {
            return x;
        }
        let mut z = precondition(&r);
        let mut p = z.clone();
        let mut rz = r.dot(&z);
        let mut best = r.norm_l2();
        let mut since_best = 0;
        for _ in 0..CG_MAX_ITER {
            let ap = apply(&p);
            let pap = p.dot(&ap);
            let a = rz / pap;
            if !(pap > 0.0) || !a.is_finite() {
                break;
            }
            x.axpy(a, &p);
            r.axpy(-a, &ap);
            let rn = r.norm_l2();
            if rn <= target {
                break;
            }
            // round-off floor reached
            if rn < 0.5 * best {
                best = rn;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= CG_STALL {
                    break;
                }
            }
            z = precondition(&r);
            let rz_new = r.dot(&z);
            if !(rz_new > 0.0) {
                break;
            }
            let beta = rz_new / rz;
            rz = rz_new;
            for (pv, zv) in p.values_mut().iter_mut().zip(z.values()) {
                *pv = zv + beta * *pv;
            }
        }
        x
    }

    pub fn solve(&self, guess: ScalarField) -> Result<MonotoneSolution> {
        let mut phi = guess;
        if !self.feasible(&phi) {
            let value = phi.values()[phi
                .values()
                .iter()
                .enumerate()
                .fold(0, |best, (i, v)| if v.abs() > phi.values()[best].abs() { i } else { best })];
            return Err(Error::PhaseOutOfRange {
                value,
                floor: self.potential.phi_floor,
            });
        }
        let target_mean = phi.mean();
        let mut residual = self.residual(&phi)?;
        let mut res_norm = residual.max_abs();
        for it in 0..self.max_iter {
            if res_norm <= self.tol {
                return Ok(MonotoneSolution {
                    phi,
                    iterations: it,
                    residual: res_norm,
                });
            }
            let weight = phi.try_map(|s| self.potential.convex_second(s))?;
            let delta = self.newton_direction(&weight, &(-&residual));
            let j0 = self.functional(&phi)?;
            let slack = 1e-13 * j0.abs().max(1e-300);
            let res_l2 = residual.norm_l2();

            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..=MAX_HALVINGS {
                let mut trial = phi.clone();
                trial.axpy(step, &delta);
                if self.conserve_mean {
                    let shift = target_mean - trial.mean();
                    for v in trial.values_mut() {
                        *v += shift;
                    }
                }
                if self.feasible(&trial) {
                    if self.functional(&trial)? <= j0 + slack {
                        accepted = Some((trial, None));
                        break;
                    }
                    // near convergence the decrease of J drops below its round-off
                    let r = self.residual(&trial)?;
                    if r.norm_l2() < res_l2 {
                        accepted = Some((trial, Some(r)));
                        break;
                    }
                }
                step *= 0.5;
            }
            let Some((next, next_residual)) = accepted else {
                return Err(Error::NewtonDivergence {
                    iterations: it + 1,
                    residual: res_norm,
                });
            };
            phi = next;
            residual = match next_residual {
                Some(r) => r,
                None => self.residual(&phi)?,
            };
            res_norm = residual.max_abs();
        }
        if res_norm <= self.tol {
            return Ok(MonotoneSolution {
                phi,
                iterations: self.max_iter,
                residual: res_norm,
            });
        }
        Err(Error::NewtonDivergence {
            iterations: self.max_iter,
            residual: res_norm,
        })
    }
}
