//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, lists are comma separated.
//! Required: `rho1 rho2 nu1 nu2 theta theta0 n dt t_end`. Optional keys and
//! their defaults:
//!
//! | key | default |
//! |---|---|
//! | `alpha` | `0` |
//! | `dim` | `2` |
//! | `length` | `2π` |
//! | `phi_floor` | `1e-12` |
//! | `newton_tol` | `1e-10` |
//! | `newton_max_iter` | `50` |
//! | `pressure_tol` | `1e-10` |
//! | `scenario` | `spinodal-shear` |
//! | `seed` | `0` |
//! | `snapshot_every` | `0` (never) |
//! | `out` | `out` |
//! | `cutoff_k` | `4` |
//! | `model_h` | `false` |
//! | `rho_bar` | `(rho1 + rho2)/2` |
//! | `eps_list` | `0,0.025,0.05,0.1` |
//! | `alpha_list` | `0.2,0.1,0.05,0.025` |
//! | `resolutions` | `32,64` |

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use aggf_core::{GridSpec, Params};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    /// `φ₀ = 0.1 + 0.05 Π cos xᵢ` with the Taylor–Green velocity.
    SpinodalShear,
    /// Regularised `φ₀` (mean 0.1, deviation 0.3) with a unit-enstrophy velocity.
    Stability,
    /// Seeded random low-mode `φ₀`, fluid at rest.
    Random,
    /// `φ ≡ 0.1`, `u ≡ 0`.
    Quiescent,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::SpinodalShear => "spinodal-shear",
            Scenario::Stability => "stability",
            Scenario::Random => "random",
            Scenario::Quiescent => "quiescent",
        }
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "spinodal-shear" => Ok(Scenario::SpinodalShear),
            "stability" => Ok(Scenario::Stability),
            "random" => Ok(Scenario::Random),
            "quiescent" => Ok(Scenario::Quiescent),
            _ => Err(format!(
                "unknown scenario `{s}` (expected spinodal-shear, stability, random or quiescent)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub params: Params,
    pub scenario: Scenario,
    pub seed: u64,
    pub t_end: f64,
    pub snapshot_every: usize,
    pub out: PathBuf,
    pub cutoff_k: f64,
    pub model_h: bool,
    pub rho_bar: f64,
    pub eps_list: Vec<f64>,
    pub alpha_list: Vec<f64>,
    pub resolutions: Vec<usize>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("line {line}: invalid value for `{key}`: {reason}")]
    InvalidValue {
        key: String,
        line: usize,
        reason: String,
    },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: expected `key = value`")]
    Malformed { line: usize },
}

const REQUIRED: [&str; 9] = ["rho1", "rho2", "nu1", "nu2", "theta", "theta0", "n", "dt", "t_end"];
const OPTIONAL: [&str; 17] = [
    "alpha",
    "dim",
    "length",
    "phi_floor",
    "newton_tol",
    "newton_max_iter",
    "pressure_tol",
    "scenario",
    "seed",
    "snapshot_every",
    "out",
    "cutoff_k",
    "model_h",
    "rho_bar",
    "eps_list",
    "alpha_list",
    "resolutions",
];

struct Entries {
    map: HashMap<String, (String, usize)>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<&(String, usize)> {
        self.map.get(key)
    }

    fn line(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |e| e.1)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.map.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|e| ConfigError::InvalidValue {
                key: key.to_string(),
                line: *line,
                reason: e.to_string(),
            }),
        }
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?.ok_or_else(|| ConfigError::MissingKey(key.to_string()))
    }

    fn list<T: FromStr>(&self, key: &str, default: &[T]) -> Result<Vec<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
        T: Clone,
    {
        let Some((v, line)) = self.map.get(key) else {
            return Ok(default.to_vec());
        };
        v.split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<T>().map_err(|e| ConfigError::InvalidValue {
                    key: key.to_string(),
                    line: *line,
                    reason: format!("`{s}`: {e}"),
                })
            })
            .collect()
    }

    fn invalid(&self, key: &str, reason: impl Into<String>) -> ConfigError {
        ConfigError::InvalidValue {
            key: key.to_string(),
            line: self.line(key),
            reason: reason.into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Entries, ConfigError> {
    let mut map = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(ConfigError::Malformed { line });
        };
        let key = k.trim();
        let value = v.trim();
        if key.is_empty() {
            return Err(ConfigError::Malformed { line });
        }
        if !REQUIRED.contains(&key) && !OPTIONAL.contains(&key) {
            return Err(ConfigError::UnknownKey {
                key: key.to_string(),
                line,
            });
        }
        if map.insert(key.to_string(), (value.to_string(), line)).is_some() {
            return Err(ConfigError::InvalidValue {
                key: key.to_string(),
                line,
                reason: "duplicate key".into(),
            });
        }
    }
    Ok(Entries { map })
}

/// Key a parameter validation message is about.
fn blame(message: &str) -> &'static str {
    if message.contains("theta0") {
        return "theta0";
    }
    let first = message.split_whitespace().next().unwrap_or("");
    REQUIRED
        .iter()
        .chain(OPTIONAL.iter())
        .copied()
        .find(|k| *k == first)
        .unwrap_or("theta0")
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let e = tokenize(text)?;
    for key in REQUIRED {
        if e.raw(key).is_none() {
            return Err(ConfigError::MissingKey(key.to_string()));
        }
    }
    let dim = e.get::<usize>("dim")?.unwrap_or(2);
    let n = e.required::<usize>("n")?;
    let length = e.get::<f64>("length")?.unwrap_or(2.0 * std::f64::consts::PI);
    let grid = GridSpec::new(dim, n, length).map_err(|err| {
        let key = if !(dim == 2 || dim == 3) {
            "dim"
        } else if !(length > 0.0) {
            "length"
        } else {
            "n"
        };
        e.invalid(key, err.to_string())
    })?;

    let mut params = Params {
        rho1: e.required("rho1")?,
        rho2: e.required("rho2")?,
        nu1: e.required("nu1")?,
        nu2: e.required("nu2")?,
        theta: e.required("theta")?,
        theta0: e.required("theta0")?,
        alpha: e.get("alpha")?.unwrap_or(0.0),
        dt: e.required("dt")?,
        ..Params::reference(grid, 1.0)
    };
    if let Some(v) = e.get("phi_floor")? {
        params.phi_floor = v;
    }
    if let Some(v) = e.get("newton_tol")? {
        params.newton_tol = v;
    }
    if let Some(v) = e.get("newton_max_iter")? {
        params.newton_max_iter = v;
    }
    if let Some(v) = e.get("pressure_tol")? {
        params.pressure_tol = v;
    }
    if let Err(err) = params.validate() {
        let msg = err.to_string();
        return Err(e.invalid(blame(&msg), msg));
    }

    let t_end: f64 = e.required("t_end")?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(e.invalid("t_end", "must be finite and nonnegative"));
    }
    let scenario = match e.raw("scenario") {
        None => Scenario::SpinodalShear,
        Some((v, _)) => v.parse().map_err(|m: String| e.invalid("scenario", m))?,
    };
    let cutoff_k = e.get::<f64>("cutoff_k")?.unwrap_or(4.0);
    if !(cutoff_k > 0.0 && cutoff_k.is_finite()) {
        return Err(e.invalid("cutoff_k", "must be positive and finite"));
    }
    let rho_bar = e.get::<f64>("rho_bar")?.unwrap_or(0.5 * (params.rho1 + params.rho2));
    if !(rho_bar > 0.0 && rho_bar.is_finite()) {
        return Err(e.invalid("rho_bar", "must be positive and finite"));
    }
    let eps_list = e.list("eps_list", &[0.0, 0.025, 0.05, 0.1])?;
    if eps_list.iter().any(|x: &f64| !(*x >= 0.0 && x.is_finite())) {
        return Err(e.invalid("eps_list", "entries must be finite and nonnegative"));
    }
    let alpha_list = e.list("alpha_list", &[0.2, 0.1, 0.05, 0.025])?;
    if alpha_list.iter().any(|x: &f64| !(*x >= 0.0 && x.is_finite())) {
        return Err(e.invalid("alpha_list", "entries must be finite and nonnegative"));
    }
    let resolutions = e.list("resolutions", &[32usize, 64])?;
    if let Some(&bad) = resolutions.iter().find(|&&r| GridSpec::new(dim, r, length).is_err()) {
        return Err(e.invalid("resolutions", format!("{bad} is not a valid grid size")));
    }

    Ok(RunConfig {
        params,
        scenario,
        seed: e.get("seed")?.unwrap_or(0),
        t_end,
        snapshot_every: e.get("snapshot_every")?.unwrap_or(0),
        out: e.get::<PathBuf>("out")?.unwrap_or_else(|| PathBuf::from("out")),
        cutoff_k,
        model_h: e.get("model_h")?.unwrap_or(false),
        rho_bar,
        eps_list,
        alpha_list,
        resolutions,
    })
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Every key, in a form that [`parse_config`] reads back to an equal value.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let g = p.grid;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("rho1", p.rho1.to_string());
        kv("rho2", p.rho2.to_string());
        kv("nu1", p.nu1.to_string());
        kv("nu2", p.nu2.to_string());
        kv("theta", p.theta.to_string());
        kv("theta0", p.theta0.to_string());
        kv("alpha", p.alpha.to_string());
        kv("dim", g.dim().to_string());
        kv("n", g.n_per_axis().to_string());
        kv("length", g.length_per_axis().to_string());
        kv("dt", p.dt.to_string());
        kv("t_end", self.t_end.to_string());
        kv("phi_floor", p.phi_floor.to_string());
        kv("newton_tol", p.newton_tol.to_string());
        kv("newton_max_iter", p.newton_max_iter.to_string());
        kv("pressure_tol", p.pressure_tol.to_string());
        kv("scenario", self.scenario.name().to_string());
        kv("seed", self.seed.to_string());
        kv("snapshot_every", self.snapshot_every.to_string());
        kv("out", self.out.display().to_string());
        kv("cutoff_k", self.cutoff_k.to_string());
        kv("model_h", self.model_h.to_string());
        kv("rho_bar", self.rho_bar.to_string());
        kv("eps_list", join(&self.eps_list));
        kv("alpha_list", join(&self.alpha_list));
        kv("resolutions", join(&self.resolutions));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
rho1 = 1
rho2 = 3
nu1 = 1
nu2 = 0.1
theta = 0.8
theta0 = 1
n = 32
dt = 1e-3
t_end = 0.5
";

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.params.alpha, 0.0);
        assert_eq!(c.params.grid, GridSpec::square(32).unwrap());
        assert_eq!(c.scenario, Scenario::SpinodalShear);
        assert_eq!(c.rho_bar, 2.0);
        assert_eq!(c.snapshot_every, 0);
        assert_eq!(c.out, PathBuf::from("out"));
        assert!(!c.model_h);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = format!("# header\n\n{MINIMAL}alpha = 0.1 # trailing\n");
        assert_eq!(parse_config(&text).unwrap().params.alpha, 0.1);
    }

    #[test]
    fn structured_errors() {
        let drop_n = MINIMAL.replace("n = 32\n", "");
        assert_eq!(parse_config(&drop_n), Err(ConfigError::MissingKey("n".into())));

        let bad = MINIMAL.replace("theta0 = 1", "theta0 = 0.5");
        match parse_config(&bad) {
            Err(ConfigError::InvalidValue { key, line, reason }) => {
                assert_eq!(key, "theta0");
                assert_eq!(line, 6);
                assert!(reason.contains("0 < theta < theta0"), "{reason}");
            }
            other => panic!("{other:?}"),
        }

        let unknown = format!("{MINIMAL}gamma = 2\n");
        assert_eq!(
            parse_config(&unknown),
            Err(ConfigError::UnknownKey {
                key: "gamma".into(),
                line: 10
            })
        );
        assert_eq!(
            parse_config(&format!("{MINIMAL}what\n")),
            Err(ConfigError::Malformed { line: 10 })
        );
        assert!(matches!(
            parse_config(&MINIMAL.replace("dt = 1e-3", "dt = fast")),
            Err(ConfigError::InvalidValue { ref key, line: 8, .. }) if key == "dt"
        ));
        assert!(matches!(
            parse_config(&MINIMAL.replace("n = 32", "n = 31")),
            Err(ConfigError::InvalidValue { ref key, .. }) if key == "n"
        ));
    }

    #[test]
    fn round_trip() {
        let text = format!("{MINIMAL}length = 12.566370614359172\nscenario = stability\neps_list = 0.1, 0.2\nmodel_h = true\n");
        let c = parse_config(&text).unwrap();
        assert_eq!(parse_config(&c.to_text()).unwrap(), c);
    }
}
