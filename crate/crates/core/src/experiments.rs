//! Scripted experiments: reference scenarios, the density-gap stability
//! sweep, the vanishing-α sweep, the separation study, the exact vortex check
//! and a seeded spinodal demo. Independent runs of a sweep are executed on a
//! scoped thread pool; reports are assembled in input order.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coupled::{energy_residual_audit, DiagnosticsRecord, EnergyAudit, Integrator, RunError, Sink, State};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, VectorField};
use crate::init_reg::regularize_initial_datum;
use crate::spectral::SpectralWorkspace;
use crate::thermo::Params;

/// Mean of the reference spinodal phase.
pub const SPINODAL_MEAN: f64 = 0.1;
/// Amplitude of the reference spinodal phase.
pub const SPINODAL_AMPLITUDE: f64 = 0.05;
/// Energy rise per step tolerated by the audits.
pub const ENERGY_JUMP_TOL: f64 = 1e-8;

/// Applies `f` to every item on at most `threads` workers, keeping order.
pub fn parallel_map<T, R, F>(items: Vec<T>, threads: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync,
{
    let n = items.len();
    let workers = threads.clamp(1, n.max(1));
    if workers == 1 {
        return items.into_iter().map(f).collect();
    }
    let slots: Vec<Mutex<Option<T>>> = items.into_iter().map(|t| Mutex::new(Some(t))).collect();
    let results: Vec<Mutex<Option<R>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let item = slots[i].lock().unwrap().take().unwrap();
                let r = f(item);
                *results[i].lock().unwrap() = Some(r);
            });
        }
    });
    results
        .into_iter()
        .map(|m| m.into_inner().unwrap().unwrap())
        .collect()
}

/// Worker count from `AGGF_THREADS`, else the available parallelism.
pub fn default_threads() -> usize {
    std::env::var("AGGF_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// `(sin x cos y, -cos x sin y)` in 2D, `(sin x cos y cos z, -cos x sin y cos z, 0)` in 3D.
pub fn taylor_green(grid: GridSpec, amplitude: f64) -> VectorField {
    let s = 2.0 * PI / grid.length_per_axis();
    let d = grid.dim();
    VectorField::from_fn(grid, |x, i| {
        let (cx, sx) = ((s * x[0]).cos(), (s * x[0]).sin());
        let (cy, sy) = ((s * x[1]).cos(), (s * x[1]).sin());
        let cz = if d == 3 { (s * x[2]).cos() } else { 1.0 };
        match i {
            0 => amplitude * sx * cy * cz,
            1 => -amplitude * cx * sy * cz,
            _ => 0.0,
        }
    })
}

/// `mean + amplitude · Π cos xᵢ`.
pub fn spinodal_phase(grid: GridSpec, mean: f64, amplitude: f64) -> ScalarField {
    let s = 2.0 * PI / grid.length_per_axis();
    let d = grid.dim();
    ScalarField::from_fn(grid, |x| {
        mean + amplitude * (0..d).map(|a| (s * x[a]).cos()).product::<f64>()
    })
}

/// Random trigonometric polynomial with wavevector entries `|mᵢ| <= max_mode`,
/// shifted and scaled to the given mean and maximal deviation.
///
/// Each mode gets an amplitude uniform in `[-1, 1]` and a phase uniform in
/// `[0, 2π)`, drawn from ChaCha8 seeded with `seed` in lexicographic mode order.
pub fn random_low_mode_phase(
    grid: GridSpec,
    seed: u64,
    mean: f64,
    amplitude: f64,
    max_mode: i64,
) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = grid.dim();
    let s = 2.0 * PI / grid.length_per_axis();
    let range: Vec<i64> = (-max_mode..=max_mode).collect();
    let mut modes = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        let m: Vec<i64> = idx.iter().map(|&i| range[i]).collect();
        if m.iter().any(|&v| v != 0) {
            modes.push((m, rng.gen_range(-1.0..=1.0), rng.gen_range(0.0..2.0 * PI)));
        }
        let mut a = d;
        loop {
            if a == 0 {
                break;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < range.len() {
                break;
            }
            idx[a] = 0;
        }
        if idx.iter().all(|&i| i == 0) {
            break;
        }
    }
    let raw = ScalarField::from_fn(grid, |x| {
        modes
            .iter()
            .map(|(m, amp, ph)| {
                let arg: f64 = m.iter().enumerate().map(|(a, &k)| k as f64 * s * x[a]).sum();
                amp * (arg + ph).cos()
            })
            .sum()
    });
    let centred = raw.mean_free();
    let scale = amplitude / centred.max_abs();
    centred.map(|v| mean + scale * v)
}

/// Solenoidal low-mode velocity with `‖∇u‖² = enstrophy`.
pub fn low_mode_velocity(ws: &SpectralWorkspace, enstrophy: f64) -> VectorField {
    let grid = *ws.grid();
    let s = 2.0 * PI / grid.length_per_axis();
    let raw = if grid.dim() == 2 {
        // u = ∇⊥ψ, ψ = sin x sin y + ½ cos(x - 2y)
        VectorField::from_fn(grid, |x, i| {
            let (a, b) = (s * x[0], s * x[1]);
            if i == 0 {
                s * (a.sin() * b.cos() + (a - 2.0 * b).sin())
            } else {
                -s * (a.cos() * b.sin() - 0.5 * (a - 2.0 * b).sin())
            }
        })
    } else {
        &taylor_green(grid, 1.0) + &VectorField::from_fn(grid, |x, i| match i {
            1 => 0.5 * (s * x[2]).sin(),
            2 => 0.5 * (s * x[0]).cos(),
            _ => 0.0,
        })
    };
    let raw = ws.solenoidal_mean_free(&raw);
    let e = ws.velocity_gradient(&raw).norm_sq();
    raw.scaled((enstrophy / e).sqrt())
}

/// Random solenoidal, mean-free field built from seeded low-mode potentials:
/// `∇⊥ψ` in 2D, `curl A` in 3D.
pub fn random_solenoidal(ws: &SpectralWorkspace, seed: u64, max_mode: i64) -> VectorField {
    let grid = *ws.grid();
    let potential = |k: u64| random_low_mode_phase(grid, seed.wrapping_mul(4).wrapping_add(k), 0.0, 1.0, max_mode);
    let u = if grid.dim() == 2 {
        let g = ws.grad(&potential(0));
        VectorField::from_components_unchecked(vec![g.component(1).clone(), -g.component(0)])
    } else {
        let g: Vec<VectorField> = (0..3).map(|k| ws.grad(&potential(k))).collect();
        let c = |i: usize, j: usize| g[j].component(i).clone();
        VectorField::from_components_unchecked(vec![
            &c(1, 2) - &c(2, 1),
            &c(2, 0) - &c(0, 2),
            &c(0, 1) - &c(1, 0),
        ])
    };
    ws.solenoidal_mean_free(&u)
}

/// Reference two-fluid parameters on `grid`.
pub fn spinodal_params(grid: GridSpec, dt: f64) -> Params {
    Params::reference(grid, dt)
}

/// Shear-driven spinodal state: `φ₀ = 0.1 + 0.05 Π cos xᵢ`, Taylor–Green `u₀`.
pub fn spinodal_shear_state(it: &Integrator) -> Result<State> {
    let g = it.params().grid;
    it.state(
        0.0,
        taylor_green(g, 1.0),
        spinodal_phase(g, SPINODAL_MEAN, SPINODAL_AMPLITUDE),
    )
}

/// Regularised phase with mean 0.1 and maximal deviation 0.3 plus a
/// low-mode velocity of unit enstrophy.
pub fn stability_initial_state(it: &Integrator, cutoff_k: f64) -> Result<State> {
    let ws = it.workspace();
    let g = *ws.grid();
    let s = 2.0 * PI / g.length_per_axis();
    let shape = ScalarField::from_fn(g, |x| {
        (s * x[0]).cos() * (s * x[1]).cos() + 0.5 * (2.0 * s * x[0] + s * x[1]).sin()
    })
    .mean_free();
    let scale = 0.3 / shape.max_abs();
    let raw = shape.map(|v| 0.1 + scale * v);
    let reg = regularize_initial_datum(ws, &raw, cutoff_k, it.params())?;
    it.state(0.0, low_mode_velocity(ws, 1.0), reg.phi0k)
}

#[derive(Debug)]
pub struct SweepFailure {
    /// The swept parameter value of the failed run.
    pub value: f64,
    /// Step (counted from 1) at which it failed.
    pub step: usize,
    pub source: Error,
}

/// A sweep that lost runs; `partial` holds what could be assembled.
#[derive(Debug)]
pub struct SweepError<R> {
    pub partial: R,
    pub failures: Vec<SweepFailure>,
}

impl<R> std::fmt::Display for SweepError<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} run(s) failed", self.failures.len())?;
        for x in &self.failures {
            write!(f, "; value {} at step {}: {}", x.value, x.step, x.source)?;
        }
        Ok(())
    }
}

impl<R: std::fmt::Debug> std::error::Error for SweepError<R> {}

#[derive(Clone, Debug, PartialEq)]
pub struct DoublingRatio {
    pub eps: f64,
    /// `D(2ε)/D(ε)`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub eps_values: Vec<f64>,
    /// `sup_n ‖u - u_H‖♯ + ‖φ - φ_H‖∗`; NaN for failed runs.
    pub distances: Vec<f64>,
    pub ratios: Vec<DoublingRatio>,
    pub rho_bar: f64,
    pub horizon: f64,
    pub steps: usize,
}

fn twin_distance(
    ws: &SpectralWorkspace,
    a: &State,
    b: &State,
) -> Result<f64> {
    let du = &a.u - &b.u;
    let dphi = &a.phi - &b.phi;
    if dphi.max_abs() == 0.0 && du.norm_l2() == 0.0 {
        return Ok(0.0);
    }
    let mass_gap = dphi.mean();
    if mass_gap.abs() > 1e-12 {
        return Err(Error::NonzeroMean { mean: mass_gap });
    }
    Ok(ws.dual_norm_sharp(&ws.solenoidal_mean_free(&du))? + ws.dual_norm_star(&dphi.mean_free())?)
}

fn doubling_ratios(eps: &[f64], dist: &[f64]) -> Vec<DoublingRatio> {
    let mut out = Vec::new();
    for (i, &e) in eps.iter().enumerate() {
        if e <= 0.0 {
            continue;
        }
        for (j, &f) in eps.iter().enumerate() {
            if (f - 2.0 * e).abs() <= 1e-12 * f {
                out.push(DoublingRatio {
                    eps: e,
                    ratio: dist[j] / dist[i],
                });
            }
        }
    }
    out
}

/// Two-fluid runs with densities `(ρ̄, ρ̄ + ε)` against the constant-density
/// run with `ρ̄`, all from `s0`, sampled every step up to `horizon`.
pub fn stability_sweep(
    base: &Params,
    rho_bar: f64,
    eps_list: &[f64],
    s0: &State,
    horizon: f64,
    threads: usize,
) -> std::result::Result<StabilityReport, SweepError<StabilityReport>> {
    let invalid = |msg: String| SweepError {
        partial: StabilityReport {
            eps_values: eps_list.to_vec(),
            distances: vec![f64::NAN; eps_list.len()],
            ratios: Vec::new(),
            rho_bar,
            horizon,
            steps: 0,
        },
        failures: vec![SweepFailure {
            value: f64::NAN,
            step: 0,
            source: Error::InvalidParams(msg),
        }],
    };
    if let Some(&e) = eps_list.iter().find(|&&e| !(e >= 0.0 && e <= 0.2 * rho_bar)) {
        return Err(invalid(format!("density gap {e} outside [0, 0.2·rho_bar]")));
    }
    let mut h_params = base.clone();
    h_params.rho1 = rho_bar;
    h_params.rho2 = rho_bar;
    let model_h = match Integrator::model_h(h_params, rho_bar) {
        Ok(it) => it,
        Err(e) => return Err(invalid(e.to_string())),
    };
    let steps = model_h.steps_until(s0.t, s0.t + horizon);

    let runs = parallel_map(eps_list.to_vec(), threads, |eps| -> std::result::Result<f64, SweepFailure> {
        let fail = |step, source| SweepFailure {
            value: eps,
            step,
            source,
        };
        let mut p = base.clone();
        p.rho1 = rho_bar;
        p.rho2 = rho_bar + eps;
        let agg = Integrator::new(p).map_err(|e| fail(0, e))?;
        let ws = agg.workspace();
        let mut a = s0.clone();
        let mut b = s0.clone();
        let mut d = twin_distance(ws, &a, &b).map_err(|e| fail(0, e))?;
        for k in 1..=steps {
            a = agg.step(&a).map_err(|e| fail(k, e))?.0;
            b = model_h.step(&b).map_err(|e| fail(k, e))?.0;
            d = d.max(twin_distance(ws, &a, &b).map_err(|e| fail(k, e))?);
        }
        Ok(d)
    });

    let mut distances = Vec::with_capacity(runs.len());
    let mut failures = Vec::new();
    for r in runs {
        match r {
            Ok(d) => distances.push(d),
            Err(f) => {
                distances.push(f64::NAN);
                failures.push(f);
            }
        }
    }
    let report = StabilityReport {
        ratios: doubling_ratios(eps_list, &distances),
        eps_values: eps_list.to_vec(),
        distances,
        rho_bar,
        horizon,
        steps,
    };
    if failures.is_empty() {
        Ok(report)
    } else {
        Err(SweepError {
            partial: report,
            failures,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlphaSweepReport {
    pub alphas: Vec<f64>,
    /// `sup_n ‖φ_{αᵢ} - φ_{αᵢ₊₁}‖`; one entry per adjacent pair, NaN if a run failed.
    pub distances: Vec<f64>,
    pub horizon: f64,
    pub steps: usize,
}

/// Runs `s0` to `horizon` for every α of a halving sequence and tabulates
/// the sup-in-time `L²` distance between successive phase trajectories.
pub fn alpha_sweep(
    base: &Params,
    alpha_list: &[f64],
    s0: &State,
    horizon: f64,
    threads: usize,
) -> std::result::Result<AlphaSweepReport, SweepError<AlphaSweepReport>> {
    let empty = |alphas: &[f64]| AlphaSweepReport {
        alphas: alphas.to_vec(),
        distances: vec![f64::NAN; alphas.len().saturating_sub(1)],
        horizon,
        steps: 0,
    };
    let halving = alpha_list
        .windows(2)
        .all(|w| w[1] > 0.0 && (w[0] - 2.0 * w[1]).abs() <= 1e-12 * w[0]);
    if !halving || alpha_list.iter().any(|a| !(*a >= 0.0)) {
        return Err(SweepError {
            partial: empty(alpha_list),
            failures: vec![SweepFailure {
                value: f64::NAN,
                step: 0,
                source: Error::InvalidParams("alpha list must halve at every entry".into()),
            }],
        });
    }
    let runs = parallel_map(alpha_list.to_vec(), threads, |alpha| {
        let mut p = base.clone();
        p.alpha = alpha;
        let fail = |step, source| SweepFailure {
            value: alpha,
            step,
            source,
        };
        let it = Integrator::new(p).map_err(|e| fail(0, e))?;
        let steps = it.steps_until(s0.t, s0.t + horizon);
        let mut traj = Vec::with_capacity(steps + 1);
        let mut s = s0.clone();
        traj.push(s.phi.clone());
        for k in 1..=steps {
            s = it.step(&s).map_err(|e| fail(k, e))?.0;
            traj.push(s.phi.clone());
        }
        Ok(traj)
    });
    let steps = runs
        .iter()
        .find_map(|r| r.as_ref().ok().map(|t| t.len() - 1))
        .unwrap_or(0);
    let distances = runs
        .windows(2)
        .map(|w| match (&w[0], &w[1]) {
            (Ok(a), Ok(b)) => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).norm_l2())
                .fold(0.0, f64::max),
            _ => f64::NAN,
        })
        .collect();
    let failures: Vec<SweepFailure> = runs.into_iter().filter_map(|r| r.err()).collect();
    let report = AlphaSweepReport {
        alphas: alpha_list.to_vec(),
        distances,
        horizon,
        steps,
    };
    if failures.is_empty() {
        Ok(report)
    } else {
        Err(SweepError {
            partial: report,
            failures,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeparationRow {
    pub n: usize,
    /// Smallest `1 - max|φ|` over the accepted steps.
    pub min_margin: f64,
    /// Step at which it occurred.
    pub min_step: usize,
    pub final_margin: f64,
}

/// Runs `φ₀ = peak · Π cos xᵢ` with the Taylor–Green velocity for `steps`
/// steps on each resolution and records the separation margin.
pub fn separation_study(
    base: &Params,
    peak: f64,
    resolutions: &[usize],
    steps: usize,
    threads: usize,
) -> Result<Vec<SeparationRow>> {
    let rows = parallel_map(resolutions.to_vec(), threads, |n| -> Result<SeparationRow> {
        let mut p = base.clone();
        p.grid = GridSpec::new(base.grid.dim(), n, base.grid.length_per_axis())?;
        let it = Integrator::new(p)?;
        let g = it.params().grid;
        let mut s = it.state(0.0, taylor_green(g, 1.0), spinodal_phase(g, 0.0, peak))?;
        let mut row = SeparationRow {
            n,
            min_margin: f64::INFINITY,
            min_step: 0,
            final_margin: 0.0,
        };
        for k in 1..=steps {
            let (next, d) = it.step(&s)?;
            if d.separation < row.min_margin {
                row.min_margin = d.separation;
                row.min_step = k;
            }
            row.final_margin = d.separation;
            s = next;
        }
        Ok(row)
    });
    rows.into_iter().collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaylorGreenRow {
    pub n: usize,
    pub dt: f64,
    pub steps: usize,
    pub t: f64,
    /// `‖u - u_exact‖ / ‖u_exact‖` at the final time.
    pub rel_error: f64,
}

/// Decay rate of the Taylor–Green vortex, `ν/ρ̄` in units where `L = 2π`.
pub fn taylor_green_rate(p: &Params) -> f64 {
    let s = 2.0 * PI / p.grid.length_per_axis();
    s * s * p.nu1 / p.rho1
}

/// Matched-fluid vortex decay at every resolution against the exact
/// `u₀ exp(-νt/ρ̄)`.
pub fn taylor_green_verify(
    p: &Params,
    resolutions: &[usize],
    t_end: f64,
    threads: usize,
) -> Result<Vec<TaylorGreenRow>> {
    if p.rho1 != p.rho2 || p.nu1 != p.nu2 || p.grid.dim() != 2 {
        return Err(Error::InvalidParams(
            "vortex check needs matched densities and viscosities in 2D".into(),
        ));
    }
    let rate = taylor_green_rate(p);
    let rows = parallel_map(resolutions.to_vec(), threads, |n| -> Result<TaylorGreenRow> {
        let mut q = p.clone();
        q.grid = GridSpec::new(2, n, p.grid.length_per_axis())?;
        let it = Integrator::new(q)?;
        let g = it.params().grid;
        let u0 = taylor_green(g, 1.0);
        let mut s = it.state(0.0, u0.clone(), ScalarField::zeros(g))?;
        let steps = it.steps_until(0.0, t_end);
        for _ in 0..steps {
            s = it.step(&s)?.0;
        }
        let exact = u0.scaled((-rate * s.t).exp());
        Ok(TaylorGreenRow {
            n,
            dt: p.dt,
            steps,
            t: s.t,
            rel_error: (&s.u - &exact).norm_l2() / exact.norm_l2(),
        })
    });
    rows.into_iter().collect()
}

/// Demo mixture: a deep quench so that low modes grow and coarsen.
pub fn demo_params(grid: GridSpec, dt: f64) -> Result<Params> {
    Params::new(grid, 1.0, 3.0, 1.0, 0.1, 1.0, 4.0, 0.0, dt)
}

#[derive(Clone, Debug)]
pub struct DemoRun {
    pub seed: u64,
    pub initial: State,
    pub cutoff_active: bool,
    pub final_state: State,
    pub phi_max_history: Vec<f64>,
    pub audit: EnergyAudit,
    /// Largest `|mean(φⁿ) - mean(φ⁰)|`.
    pub mass_drift: f64,
}

struct Tee<'a> {
    inner: &'a mut dyn Sink,
    mass0: f64,
    mass_drift: f64,
    phi_max: Vec<f64>,
    records: Vec<DiagnosticsRecord>,
}

impl Sink for Tee<'_> {
    fn record(&mut self, step: usize, diag: &DiagnosticsRecord) -> std::io::Result<()> {
        self.mass_drift = self.mass_drift.max((diag.mass - self.mass0).abs());
        self.phi_max.push(diag.phi_max.max(-diag.phi_min));
        self.records.push(*diag);
        self.inner.record(step, diag)
    }
    fn snapshot(&mut self, step: usize, state: &State) -> std::io::Result<()> {
        self.inner.snapshot(step, state)
    }
}

#[derive(Debug)]
pub enum DemoError {
    Setup(Error),
    Run(RunError),
}

impl std::fmt::Display for DemoError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DemoError::Setup(e) => write!(f, "demo setup failed: {e}"),
            DemoError::Run(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for DemoError {}

/// Seeded low-mode spinodal field (mean 0, deviation 0.05, modes `|mᵢ| <= 4`),
/// regularised at level `cutoff_k`, started at rest and run to `t_end`.
pub fn spinodal_demo(
    p: &Params,
    seed: u64,
    t_end: f64,
    cutoff_k: f64,
    snapshot_every: usize,
    sink: &mut dyn Sink,
) -> std::result::Result<DemoRun, DemoError> {
    let it = Integrator::new(p.clone()).map_err(DemoError::Setup)?;
    let g = p.grid;
    let raw = random_low_mode_phase(g, seed, 0.0, SPINODAL_AMPLITUDE, 4);
    let reg = regularize_initial_datum(it.workspace(), &raw, cutoff_k, p).map_err(DemoError::Setup)?;
    let s0 = it
        .state(0.0, VectorField::zeros(g), reg.phi0k)
        .map_err(DemoError::Setup)?;
    let mut tee = Tee {
        inner: sink,
        mass0: s0.phi.mean(),
        mass_drift: 0.0,
        phi_max: Vec::new(),
        records: Vec::new(),
    };
    let final_state = it
        .run(s0.clone(), t_end, snapshot_every, &mut tee)
        .map_err(DemoError::Run)?;
    Ok(DemoRun {
        seed,
        initial: s0,
        cutoff_active: reg.cutoff_active,
        final_state,
        audit: energy_residual_audit(&tee.records, ENERGY_JUMP_TOL),
        phi_max_history: tee.phi_max,
        mass_drift: tee.mass_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupled::NullSink;

    #[test]
    fn parallel_map_keeps_order() {
        let out = parallel_map((0..37).collect(), 4, |i: i32| i * i);
        assert_eq!(out, (0..37).map(|i| i * i).collect::<Vec<_>>());
        assert!(parallel_map(Vec::<i32>::new(), 3, |i| i).is_empty());
    }

    #[test]
    fn random_phase_is_reproducible_and_scaled() {
        let g = GridSpec::square(32).unwrap();
        let a = random_low_mode_phase(g, 7, 0.1, 0.05, 3);
        let b = random_low_mode_phase(g, 7, 0.1, 0.05, 3);
        let c = random_low_mode_phase(g, 8, 0.1, 0.05, 3);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!((a.mean() - 0.1).abs() < 1e-15);
        assert!(((&a - &ScalarField::constant(g, 0.1)).max_abs() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn low_mode_velocity_has_unit_enstrophy() {
        for g in [GridSpec::square(32).unwrap(), GridSpec::cube(16).unwrap()] {
            let ws = SpectralWorkspace::new(g);
            let u = low_mode_velocity(&ws, 1.0);
            assert!((ws.velocity_gradient(&u).norm_sq() - 1.0).abs() < 1e-12);
            assert!(ws.divergence(&u).norm_l2() < 1e-12);
        }
    }

    #[test]
    fn random_solenoidal_fields() {
        for g in [GridSpec::square(32).unwrap(), GridSpec::cube(16).unwrap()] {
            let ws = SpectralWorkspace::new(g);
            let u = random_solenoidal(&ws, 5, 3);
            assert!(u.norm_l2() > 1e-3);
            assert!(ws.divergence(&u).norm_l2() < 1e-12 * u.norm_l2());
            assert_ne!(u, random_solenoidal(&ws, 6, 3));
        }
    }

    #[test]
    fn zero_gap_and_single_alpha() {
        let p = spinodal_params(GridSpec::square(16).unwrap(), 1e-3);
        let it = Integrator::new(p.clone()).unwrap();
        let s0 = stability_initial_state(&it, 4.0).unwrap();
        let r = stability_sweep(&p, 1.0, &[0.0], &s0, 0.005, 1).unwrap();
        assert_eq!(r.distances, vec![0.0]);
        assert_eq!(r.steps, 5);
        let a = alpha_sweep(&p, &[0.1], &s0, 0.005, 1).unwrap();
        assert!(a.distances.is_empty());
        assert!(alpha_sweep(&p, &[0.1, 0.07], &s0, 0.005, 1).is_err());
        assert!(stability_sweep(&p, 1.0, &[0.5], &s0, 0.005, 1).is_err());
    }

    #[test]
    fn taylor_green_rejects_mismatched_fluids() {
        let p = spinodal_params(GridSpec::square(16).unwrap(), 1e-3);
        assert!(taylor_green_verify(&p, &[16], 0.01, 1).is_err());
    }

    #[test]
    fn demo_is_deterministic() {
        let p = demo_params(GridSpec::square(16).unwrap(), 2.5e-3).unwrap();
        let a = spinodal_demo(&p, 3, 0.05, 10.0, 0, &mut NullSink).unwrap();
        let b = spinodal_demo(&p, 3, 0.05, 10.0, 0, &mut NullSink).unwrap();
        assert_eq!(a.final_state, b.final_state);
        assert_eq!(a.phi_max_history, b.phi_max_history);
        assert!(a.mass_drift < 1e-13);
    }
}
