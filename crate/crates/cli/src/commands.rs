//! Subcommand bodies. Each returns an [`Outcome`] listing failed invariants;
//! hard errors (bad input, IO, solver breakdown before any audit) are `Err`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

use aggf_core::coupled::{Integrator, RunError, State};
use aggf_core::experiments::{
    alpha_sweep, default_threads, demo_params, random_low_mode_phase, random_solenoidal,
    spinodal_demo, spinodal_shear_state, stability_initial_state, stability_sweep, taylor_green,
    taylor_green_verify, ENERGY_JUMP_TOL, SPINODAL_AMPLITUDE, SPINODAL_MEAN,
};
use aggf_core::init_reg::regularize_initial_datum;
use aggf_core::momentum::{korteweg_force, korteweg_stress_force};
use aggf_core::cahn_hilliard::chemical_potential;
use aggf_core::{Error, GridSpec, Params, ScalarField, SpectralWorkspace, VectorField};

use crate::config::{RunConfig, Scenario};
use crate::diagnostics::{FileSink, StreamAudit};
use crate::snapshot::{decode, encode, read_snapshot_on, write_snapshot};

/// Absolute mass drift accepted by the run audits.
pub const MASS_TOL: f64 = 1e-13;

#[derive(Debug, Default)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub failed: Vec<String>,
}

impl Outcome {
    fn check(&mut self, name: &str, ok: bool, detail: String) {
        self.lines
            .push(format!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" }));
        if !ok {
            self.failed.push(name.to_string());
        }
    }

    fn note(&mut self, line: String) {
        self.lines.push(line);
    }
}

pub fn initial_state(it: &Integrator, cfg: &RunConfig) -> aggf_core::Result<State> {
    let g = it.params().grid;
    match cfg.scenario {
        Scenario::SpinodalShear => spinodal_shear_state(it),
        Scenario::Stability => stability_initial_state(it, cfg.cutoff_k),
        Scenario::Random => {
            let raw = random_low_mode_phase(g, cfg.seed, SPINODAL_MEAN, SPINODAL_AMPLITUDE, 4);
            let reg = regularize_initial_datum(it.workspace(), &raw, cfg.cutoff_k, it.params())?;
            it.state(0.0, VectorField::zeros(g), reg.phi0k)
        }
        Scenario::Quiescent => it.state(0.0, VectorField::zeros(g), ScalarField::constant(g, SPINODAL_MEAN)),
    }
}

fn integrator(cfg: &RunConfig) -> aggf_core::Result<Integrator> {
    if cfg.model_h {
        Integrator::model_h(cfg.params.clone(), cfg.rho_bar)
    } else {
        Integrator::new(cfg.params.clone())
    }
}

fn invariant_of(e: &Error) -> &'static str {
    match e {
        Error::PhaseOutOfRange { .. } => "phase bound",
        Error::NewtonDivergence { .. } => "phase solver convergence",
        Error::PressureIterationDivergence { .. } => "pressure solver convergence",
        Error::NotDivergenceFree { .. } => "incompressibility",
        _ => "solver step",
    }
}

fn audit_stream(out: &mut Outcome, a: &StreamAudit) {
    out.check(
        "mass conservation",
        a.max_mass_drift <= MASS_TOL,
        format!("max |mean(phi) - mean(phi0)| = {:e}", a.max_mass_drift),
    );
    out.check(
        "phase bound",
        a.max_abs_phi < 1.0,
        format!("max |phi| = {}", a.max_abs_phi),
    );
    out.check(
        "energy dissipation",
        a.first_energy_violation.is_none(),
        match a.first_energy_violation {
            None => format!("max energy increase {:e}", a.max_energy_increase),
            Some(k) => format!("energy rose by more than {ENERGY_JUMP_TOL:e} at step {k}"),
        },
    );
}

fn save_config(cfg: &RunConfig, dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("config.txt"), cfg.to_text())?;
    Ok(())
}

pub fn run(cfg: &RunConfig, out_dir: &Path, resume: Option<&Path>) -> anyhow::Result<Outcome> {
    let it = integrator(cfg)?;
    let s0 = match resume {
        Some(path) => {
            let s = read_snapshot_on(path, &cfg.params.grid)
                .with_context(|| format!("reading {}", path.display()))?;
            it.state(s.t, s.u, s.phi)?
        }
        None => initial_state(&it, cfg)?,
    };
    save_config(cfg, out_dir)?;
    let mut sink = FileSink::create(out_dir, s0.phi.mean(), ENERGY_JUMP_TOL)?;
    let mut out = Outcome::default();
    let result = it.run(s0, cfg.t_end, cfg.snapshot_every, &mut sink);
    let audit = sink.finish()?;
    match result {
        Ok(state) => {
            write_snapshot(&state, &out_dir.join("final.aggf"))?;
            out.note(format!("{} steps, t = {}", audit.steps, state.t));
            audit_stream(&mut out, &audit);
        }
        Err(RunError::Step {
            step,
            last_good,
            source,
        }) => {
            write_snapshot(&last_good, &out_dir.join("last_good.aggf"))?;
            audit_stream(&mut out, &audit);
            out.check(
                invariant_of(&source),
                false,
                format!("step {step} from t = {}: {source}", last_good.t),
            );
        }
        Err(e @ RunError::Sink { .. }) => return Err(e.into()),
    }
    Ok(out)
}

pub fn stability(cfg: &RunConfig, out_dir: &Path) -> anyhow::Result<Outcome> {
    let it = Integrator::new(cfg.params.clone())?;
    let s0 = stability_initial_state(&it, cfg.cutoff_k)?;
    save_config(cfg, out_dir)?;
    let (report, failures) = match stability_sweep(
        &cfg.params,
        cfg.rho_bar,
        &cfg.eps_list,
        &s0,
        cfg.t_end,
        default_threads(),
    ) {
        Ok(r) => (r, Vec::new()),
        Err(e) => (e.partial, e.failures),
    };
    let mut f = fs::File::create(out_dir.join("stability.csv"))?;
    writeln!(f, "eps,distance")?;
    let mut out = Outcome::default();
    for (e, d) in report.eps_values.iter().zip(&report.distances) {
        writeln!(f, "{e},{d}")?;
        out.note(format!("eps = {e}: D = {d:e}"));
    }
    let mut f = fs::File::create(out_dir.join("stability_ratios.csv"))?;
    writeln!(f, "eps,ratio")?;
    for r in &report.ratios {
        writeln!(f, "{},{}", r.eps, r.ratio)?;
        out.note(format!("D({})/D({}) = {}", 2.0 * r.eps, r.eps, r.ratio));
    }
    for x in failures {
        out.check("sweep run", false, format!("eps = {} step {}: {}", x.value, x.step, x.source));
    }
    if let Some(i) = report.eps_values.iter().position(|&e| e == 0.0) {
        out.check(
            "zero gap distance",
            report.distances[i] == 0.0,
            format!("D(0) = {}", report.distances[i]),
        );
    }
    out.check(
        "nonnegative distances",
        report.distances.iter().all(|d| d.is_nan() || *d >= 0.0),
        format!("{} rows", report.distances.len()),
    );
    Ok(out)
}

pub fn alpha(cfg: &RunConfig, out_dir: &Path) -> anyhow::Result<Outcome> {
    let it = Integrator::new(cfg.params.clone())?;
    let s0 = initial_state(&it, cfg)?;
    save_config(cfg, out_dir)?;
    let (report, failures) = match alpha_sweep(&cfg.params, &cfg.alpha_list, &s0, cfg.t_end, default_threads()) {
        Ok(r) => (r, Vec::new()),
        Err(e) => (e.partial, e.failures),
    };
    let mut f = fs::File::create(out_dir.join("alpha_sweep.csv"))?;
    writeln!(f, "alpha,alpha_next,distance")?;
    let mut out = Outcome::default();
    for (w, d) in report.alphas.windows(2).zip(&report.distances) {
        writeln!(f, "{},{},{}", w[0], w[1], d)?;
        out.note(format!("alpha {} vs {}: {d:e}", w[0], w[1]));
    }
    for x in failures {
        out.check("sweep run", false, format!("alpha = {} step {}: {}", x.value, x.step, x.source));
    }
    out.check(
        "vanishing viscosity monotonicity",
        report.distances.windows(2).all(|w| w[1] < w[0]),
        format!("{} distances", report.distances.len()),
    );
    Ok(out)
}

/// Fixed self-checks: vortex decay, capillary force identity, Korn equality,
/// snapshot and config round trips.
pub fn verify(out_dir: &Path) -> anyhow::Result<Outcome> {
    let mut out = Outcome::default();

    let mut p = Params::reference(GridSpec::square(64)?, 1e-3);
    p.rho1 = 1.0;
    p.rho2 = 1.0;
    p.nu1 = 0.01;
    p.nu2 = 0.01;
    let rows = taylor_green_verify(&p, &[32, 64], 1.0, default_threads())?;
    let (e32, e64) = (rows[0].rel_error, rows[1].rel_error);
    out.check("taylor-green accuracy", e64 <= 1e-6, format!("relative error {e64:e} on 64^2"));
    out.check(
        "taylor-green grid independence",
        (e32 / e64 - 1.0).abs() <= 0.05,
        format!("32^2 / 64^2 error ratio {}", e32 / e64),
    );

    let grid = GridSpec::square(64)?;
    let ws = SpectralWorkspace::new(grid);
    let rp = Params::reference(grid, 1e-3);
    let mut worst: f64 = 0.0;
    for extra in [0.0, 0.2] {
        let phi = ScalarField::from_fn(grid, |x| 0.3 * x[0].cos() * x[1].cos() + extra * (2.0 * x[1]).sin());
        let mu = chemical_potential(&ws, &phi, None, &rp)?;
        let a = korteweg_force(&ws, &phi, &mu);
        let b = korteweg_stress_force(&ws, &phi);
        let raw = ws.grad(&phi).map_components(|c| ws.product(&mu, c));
        let scale = a.norm_l2().max(raw.norm_l2());
        worst = worst.max((&a - &b).norm_l2() / scale);
    }
    out.check("korteweg identity", worst <= 1e-10, format!("relative gap {worst:e}"));

    let ws32 = SpectralWorkspace::new(GridSpec::square(32)?);
    let mut korn: f64 = 0.0;
    for seed in 0..20 {
        let u = random_solenoidal(&ws32, seed, 4);
        let sym = ws32.sym_grad(&u).norm_sq();
        let full = ws32.velocity_gradient(&u).norm_sq();
        korn = korn.max((2.0 * sym - full).abs() / full);
    }
    out.check("korn equality", korn <= 1e-12, format!("max relative gap {korn:e}, 20 fields"));

    let g = GridSpec::square(32)?;
    let state = State {
        t: 0.125,
        u: taylor_green(g, 1.0),
        phi: ScalarField::from_fn(g, |x| 0.1 + 0.05 * x[0].cos() * x[1].cos()),
    };
    let back = decode(&encode(&state))?;
    out.check("snapshot round trip", back == state, "bit-exact".into());
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join("verify_roundtrip.aggf");
    write_snapshot(&state, &path)?;
    let from_disk = read_snapshot_on(&path, &g)?;
    out.check("snapshot file round trip", from_disk == state, path.display().to_string());
    Ok(out)
}

pub struct DemoOptions {
    pub params: Params,
    pub seed: u64,
    pub t_end: f64,
    pub cutoff_k: f64,
    pub snapshot_every: usize,
}

impl DemoOptions {
    pub fn defaults() -> anyhow::Result<Self> {
        Ok(Self {
            params: demo_params(GridSpec::square(64)?, 2.5e-3)?,
            seed: 0,
            t_end: 3.0,
            cutoff_k: 4.0,
            snapshot_every: 200,
        })
    }

    pub fn from_config(cfg: &RunConfig) -> Self {
        Self {
            params: cfg.params.clone(),
            seed: cfg.seed,
            t_end: cfg.t_end,
            cutoff_k: cfg.cutoff_k,
            snapshot_every: cfg.snapshot_every,
        }
    }
}

pub fn demo(opts: &DemoOptions, out_dir: &Path) -> anyhow::Result<Outcome> {
    let mut sink = FileSink::create(out_dir, 0.0, ENERGY_JUMP_TOL)?;
    let run = match spinodal_demo(
        &opts.params,
        opts.seed,
        opts.t_end,
        opts.cutoff_k,
        opts.snapshot_every,
        &mut sink,
    ) {
        Ok(r) => r,
        Err(e) => bail!("{e}"),
    };
    sink.finish()?;
    write_snapshot(&run.initial, &out_dir.join("initial.aggf"))?;
    write_snapshot(&run.final_state, &out_dir.join("final.aggf"))?;
    let mut out = Outcome::default();
    let peak = run.phi_max_history.iter().copied().fold(0.0, f64::max);
    out.note(format!(
        "seed {}, {} steps, max |phi| {} -> {}",
        run.seed,
        run.phi_max_history.len(),
        run.initial.phi.max_abs(),
        run.final_state.phi.max_abs()
    ));
    out.check(
        "mass conservation",
        run.mass_drift <= MASS_TOL,
        format!("max drift {:e}", run.mass_drift),
    );
    out.check("phase bound", peak < 1.0, format!("max |phi| = {peak}"));
    out.check(
        "energy dissipation",
        run.audit.first_violation.is_none(),
        format!("max energy increase {:e}", run.audit.max_energy_increase),
    );
    Ok(out)
}

/// `--out` flag, else the configured directory, else `out`.
pub fn output_dir(flag: Option<PathBuf>, cfg: Option<&RunConfig>) -> PathBuf {
    flag.or_else(|| cfg.map(|c| c.out.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}
