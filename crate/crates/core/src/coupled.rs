//! Coupled time integrator: phase step with the old velocity, then momentum
//! step with the new `(φ, μ)`. No inner iteration between the two halves.

use std::fmt;

use crate::cahn_hilliard::{cvch_step, separation_margin};
use crate::error::{Error, Result};
use crate::grid::{ScalarField, VectorField};
use crate::momentum::{momentum_step, step_mixture};
use crate::spectral::SpectralWorkspace;
use crate::thermo::{energy_breakdown, EnergyBreakdown, Mixture, Params};

/// Relative divergence accepted for a state velocity.
pub const DIVERGENCE_TOL: f64 = 1e-10;
/// Absolute per-component velocity mean accepted for a state.
pub const MEAN_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: VectorField,
    pub phi: ScalarField,
}

impl State {
    /// Checks grid agreement, `|φ| < 1`, a solenoidal and mean-free `u`.
    pub fn new(ws: &SpectralWorkspace, t: f64, u: VectorField, phi: ScalarField) -> Result<Self> {
        if u.grid() != phi.grid() || phi.grid() != ws.grid() {
            return Err(Error::GridMismatch);
        }
        if let Some(&value) = phi.values().iter().find(|v| !(v.abs() < 1.0)) {
            return Err(Error::PhaseOutOfRange { value, floor: 0.0 });
        }
        let norm = u.norm_l2();
        let div = ws.divergence(&u).norm_l2();
        if div > DIVERGENCE_TOL * norm {
            return Err(Error::NotDivergenceFree {
                relative: div / norm,
            });
        }
        if let Some(&mean) = u.means().iter().find(|m| m.abs() > MEAN_TOL) {
            return Err(Error::NonzeroMean { mean });
        }
        Ok(Self { t, u, phi })
    }
}

/// One row per step, evaluated on the new state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub e_kin: f64,
    pub e_free: f64,
    pub e_total: f64,
    /// `∫|∇μ|²`.
    pub grad_mu_sq: f64,
    /// `∫ν(φ)|Du|²`.
    pub visc_diss: f64,
    /// `mean(φ)`.
    pub mass: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub separation: f64,
    pub cfl: f64,
    /// `Eⁿ⁺¹ - Eⁿ + Δt(∫|∇μ|² + ∫ν|Du|² + α‖∂ₜφ‖²)`.
    pub energy_residual: f64,
    /// `Eⁿ⁺¹ - Eⁿ`.
    pub energy_change: f64,
    pub newton_iters: usize,
    pub pressure_iters: usize,
}

/// Receives the stream produced by [`Integrator::run`].
pub trait Sink {
    fn record(&mut self, _step: usize, _diag: &DiagnosticsRecord) -> std::io::Result<()> {
        Ok(())
    }
    fn snapshot(&mut self, _step: usize, _state: &State) -> std::io::Result<()> {
        Ok(())
    }
}

/// Discards everything.
pub struct NullSink;

impl Sink for NullSink {}

/// Keeps every diagnostics row in memory.
#[derive(Default, Debug, Clone)]
pub struct MemorySink {
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<(usize, State)>,
}

impl Sink for MemorySink {
    fn record(&mut self, _step: usize, diag: &DiagnosticsRecord) -> std::io::Result<()> {
        self.records.push(*diag);
        Ok(())
    }
    fn snapshot(&mut self, step: usize, state: &State) -> std::io::Result<()> {
        self.snapshots.push((step, state.clone()));
        Ok(())
    }
}

#[derive(Debug)]
pub enum RunError {
    /// Step `step` (counted from 1) failed; `last_good` is the state before it.
    Step {
        step: usize,
        last_good: Box<State>,
        source: Error,
    },
    Sink {
        step: usize,
        source: std::io::Error,
    },
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Step {
                step,
                last_good,
                source,
            } => write!(f, "step {step} failed at t = {}: {source}", last_good.t),
            RunError::Sink { step, source } => write!(f, "output failed at step {step}: {source}"),
        }
    }
}

impl std::error::Error for RunError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            RunError::Step { source, .. } => Some(source),
            RunError::Sink { source, .. } => Some(source),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Integrator {
    params: Params,
    ws: SpectralWorkspace,
    model_h: bool,
    rho_bar: f64,
}

impl Integrator {
    pub fn new(params: Params) -> Result<Self> {
        params.validate()?;
        let ws = SpectralWorkspace::new(params.grid);
        let rho_bar = 0.5 * (params.rho1 + params.rho2);
        Ok(Self {
            params,
            ws,
            model_h: false,
            rho_bar,
        })
    }

    /// Matched-density model with constant density `rho_bar`.
    pub fn model_h(params: Params, rho_bar: f64) -> Result<Self> {
        if !(rho_bar > 0.0 && rho_bar.is_finite()) {
            return Err(Error::InvalidParams(format!("rho_bar must be positive, got {rho_bar}")));
        }
        let mut it = Self::new(params)?;
        it.model_h = true;
        it.rho_bar = rho_bar;
        Ok(it)
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn workspace(&self) -> &SpectralWorkspace {
        &self.ws
    }

    pub fn is_model_h(&self) -> bool {
        self.model_h
    }

    pub fn rho_bar(&self) -> f64 {
        self.rho_bar
    }

    pub fn mixture(&self) -> Mixture {
        step_mixture(&self.params, self.model_h, self.rho_bar)
    }

    pub fn state(&self, t: f64, u: VectorField, phi: ScalarField) -> Result<State> {
        State::new(&self.ws, t, u, phi)
    }

    pub fn energy(&self, s: &State) -> Result<EnergyBreakdown> {
        energy_breakdown(&self.ws, &s.u, &s.phi, &self.params.potential(), &self.mixture())
    }

    pub fn step(&self, s: &State) -> Result<(State, DiagnosticsRecord)> {
        let p = &self.params;
        let before = self.energy(s)?;
        let ch = cvch_step(&self.ws, &s.phi, &s.u, p)?;
        let mo = momentum_step(
            &self.ws,
            &s.u,
            &ch.phi_next,
            &ch.mu_next,
            p,
            self.model_h,
            self.rho_bar,
        )?;
        let next = State {
            t: s.t + p.dt,
            u: mo.u_next,
            phi: ch.phi_next,
        };
        let after = self.energy(&next)?;
        let g = self.ws.grad(&ch.mu_next);
        let grad_mu_sq = g.dot(&g);
        let visc_diss = mo.viscous_dissipation;
        let damping = p.alpha * ch.dphi_dt.dot(&ch.dphi_dt);
        let energy_change = after.e_total - before.e_total;
        let diag = DiagnosticsRecord {
            t: next.t,
            e_kin: after.e_kin,
            e_free: after.e_free,
            e_total: after.e_total,
            grad_mu_sq,
            visc_diss,
            mass: next.phi.mean(),
            phi_min: next.phi.min(),
            phi_max: next.phi.max(),
            separation: separation_margin(&next.phi),
            cfl: next.u.max_magnitude() * p.dt / p.grid.spacing(),
            energy_residual: energy_change + p.dt * (grad_mu_sq + visc_diss + damping),
            energy_change,
            newton_iters: ch.newton_iters,
            pressure_iters: mo.picard_iters,
        };
        Ok((next, diag))
    }

    /// Exactly `steps` steps; snapshots every `snapshot_every` steps (0 = never).
    pub fn run_steps(
        &self,
        s0: State,
        steps: usize,
        snapshot_every: usize,
        sink: &mut dyn Sink,
    ) -> std::result::Result<State, RunError> {
        let mut state = s0;
        for k in 1..=steps {
            let (next, diag) = match self.step(&state) {
                Ok(r) => r,
                Err(source) => {
                    return Err(RunError::Step {
                        step: k,
                        last_good: Box::new(state),
                        source,
                    })
                }
            };
            state = next;
            sink.record(k, &diag)
                .map_err(|source| RunError::Sink { step: k, source })?;
            if snapshot_every > 0 && k % snapshot_every == 0 {
                sink.snapshot(k, &state)
                    .map_err(|source| RunError::Sink { step: k, source })?;
            }
        }
        Ok(state)
    }

    /// Number of steps taken from `t0` until `t >= t_end`.
    pub fn steps_until(&self, t0: f64, t_end: f64) -> usize {
        let dt = self.params.dt;
        let mut t = t0;
        let mut k = 0;
        while t < t_end - 1e-6 * dt {
            t += dt;
            k += 1;
        }
        k
    }

    pub fn run(
        &self,
        s0: State,
        t_end: f64,
        snapshot_every: usize,
        sink: &mut dyn Sink,
    ) -> std::result::Result<State, RunError> {
        let steps = self.steps_until(s0.t, t_end);
        self.run_steps(s0, steps, snapshot_every, sink)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyAudit {
    /// Largest `|energy_residual|` over the trajectory.
    pub max_residual: f64,
    /// Largest positive part of `Eⁿ⁺¹ - Eⁿ`.
    pub max_energy_increase: f64,
    /// First step (0-based row) whose energy rose by more than the threshold.
    pub first_violation: Option<usize>,
}

/// Residual summary; `threshold` bounds the accepted per-step energy rise.
pub fn energy_residual_audit(diags: &[DiagnosticsRecord], threshold: f64) -> EnergyAudit {
    let mut audit = EnergyAudit {
        max_residual: 0.0,
        max_energy_increase: 0.0,
        first_violation: None,
    };
    for (i, d) in diags.iter().enumerate() {
        audit.max_residual = audit.max_residual.max(d.energy_residual.abs());
        audit.max_energy_increase = audit.max_energy_increase.max(d.energy_change);
        if d.energy_change > threshold && audit.first_violation.is_none() {
            audit.first_violation = Some(i);
        }
    }
    audit
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn taylor_green(grid: GridSpec, amp: f64) -> VectorField {
        VectorField::from_fn(grid, |x, i| {
            if i == 0 {
                amp * x[0].sin() * x[1].cos()
            } else {
                -amp * x[0].cos() * x[1].sin()
            }
        })
    }

    fn integrator(n: usize, dt: f64) -> Integrator {
        Integrator::new(Params::reference(GridSpec::square(n).unwrap(), dt)).unwrap()
    }

    fn spinodal(it: &Integrator) -> State {
        let g = it.params().grid;
        let phi = ScalarField::from_fn(g, |x| 0.1 + 0.05 * x[0].cos() * x[1].cos());
        it.state(0.0, taylor_green(g, 1.0), phi).unwrap()
    }

    #[test]
    fn state_validation() {
        let it = integrator(16, 1e-3);
        let g = it.params().grid;
        let phi = ScalarField::zeros(g);
        let grad = it.workspace().grad(&ScalarField::from_fn(g, |x| x[0].sin()));
        assert!(matches!(
            it.state(0.0, grad, phi.clone()),
            Err(Error::NotDivergenceFree { .. })
        ));
        let shifted = VectorField::from_fn(g, |_, i| if i == 0 { 0.5 } else { 0.0 });
        assert!(matches!(
            it.state(0.0, shifted, phi.clone()),
            Err(Error::NonzeroMean { .. })
        ));
        assert!(matches!(
            it.state(0.0, VectorField::zeros(g), ScalarField::constant(g, 1.0)),
            Err(Error::PhaseOutOfRange { .. })
        ));
    }

    #[test]
    fn quiescent_state_is_fixed_point() {
        let it = integrator(16, 1e-3);
        let g = it.params().grid;
        let s = it.state(0.0, VectorField::zeros(g), ScalarField::constant(g, 0.2)).unwrap();
        let (next, d) = it.step(&s).unwrap();
        assert!((&next.phi - &s.phi).max_abs() < 1e-15);
        assert_eq!(next.u.norm_l2(), 0.0);
        assert_eq!(d.visc_diss, 0.0);
        assert!(d.grad_mu_sq < 1e-28);
        let audit = energy_residual_audit(&[d], 1e-8);
        assert!(audit.max_residual < 1e-14);
        assert_eq!(audit.first_violation, None);
    }

    #[test]
    fn run_to_start_time_takes_no_steps() {
        let it = integrator(16, 1e-3);
        let s = spinodal(&it);
        let mut sink = MemorySink::default();
        let out = it.run(s.clone(), 0.0, 1, &mut sink).unwrap();
        assert_eq!(out, s);
        assert!(sink.records.is_empty());
    }

    #[test]
    fn run_equals_step_composition() {
        let it = integrator(16, 1e-3);
        let s = spinodal(&it);
        let mut cur = s.clone();
        for _ in 0..10 {
            cur = it.step(&cur).unwrap().0;
        }
        let mut sink = MemorySink::default();
        let out = it.run_steps(s, 10, 5, &mut sink).unwrap();
        assert_eq!(out, cur);
        assert_eq!(sink.records.len(), 10);
        assert_eq!(sink.snapshots.len(), 2);
        assert_eq!(it.steps_until(0.0, 0.01), 10);
    }

    #[test]
    fn diagnostics_are_consistent() {
        let it = integrator(32, 5e-4);
        let s = spinodal(&it);
        let (_, d) = it.step(&s).unwrap();
        assert_eq!(d.e_total, d.e_kin + d.e_free);
        assert!(d.grad_mu_sq >= 0.0 && d.visc_diss > 0.0);
        assert!(d.phi_min < d.phi_max && d.separation > 0.0);
        assert!((d.t - 5e-4).abs() < 1e-18);
    }

    #[test]
    fn matched_run_equals_model_h() {
        let mut p = Params::reference(GridSpec::square(16).unwrap(), 1e-3);
        p.rho2 = p.rho1;
        let agg = Integrator::new(p.clone()).unwrap();
        let mh = Integrator::model_h(p, 1.0).unwrap();
        let s = spinodal(&agg);
        let a = agg.run_steps(s.clone(), 5, 0, &mut NullSink).unwrap();
        let b = mh.run_steps(s, 5, 0, &mut NullSink).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reversed_velocity_mirrors_statistics() {
        // φ even and u odd under x -> -x, so -u is the reflected problem
        let it = integrator(32, 1e-3);
        let s = spinodal(&it);
        let r = it.state(0.0, -&s.u, s.phi.clone()).unwrap();
        let (_, a) = it.step(&s).unwrap();
        let (_, b) = it.step(&r).unwrap();
        for (x, y) in [(a.e_kin, b.e_kin), (a.e_free, b.e_free), (a.visc_diss, b.visc_diss)] {
            assert!((x - y).abs() <= 1e-12 * x.abs());
        }
    }

    #[test]
    fn failing_step_reports_last_good_state() {
        let mut it = integrator(16, 1e-3);
        it.params.newton_max_iter = 0;
        let s = spinodal(&it);
        match it.run_steps(s.clone(), 3, 0, &mut NullSink) {
            Err(RunError::Step { step, last_good, .. }) => {
                assert_eq!(step, 1);
                assert_eq!(*last_good, s);
            }
            other => panic!("expected a step failure, got {other:?}"),
        }
    }
}
