//! Run configuration: `[section]` headers with `key = value` lines.
//!
//! ```text
//! [potential]
//! spec = cosine 2 2        # a preset, or `file = path` with `x value` lines
//! extent = 3*pi/2          # defaults to max(s, b)
//!
//! [spectrum]
//! s = pi
//! gamma = pi/2
//! n_max = 200
//!
//! [sampling]
//! N = 200
//! a = pi/2
//! b = pi
//! functions = 5            # seeded test functions per experiment
//! degree = 4
//!
//! [grid]
//! re = -1, 30
//! im = -1, 1
//! resolution = 16, 5
//!
//! [noise]
//! deltas = 1e-1, 1e-2, 1e-3
//! seed = 7
//! trials = 3
//!
//! [audit]
//! n_max = 60
//!
//! [output]
//! dir = out
//!
//! [tolerances]
//! ode_tol = 1e-10
//! ```
//!
//! Numbers accept a `pi` factor (`3*pi/2`). Every key is optional.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

use dbsample::schrodinger::parse_number;
use dbsample::{Complex64, Potential, Tolerances};
use ini::Ini;

use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub potential: Potential,
    pub s: f64,
    pub gamma: f64,
    pub n_max: usize,
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub functions: usize,
    pub degree: usize,
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub resolution: (usize, usize),
    pub deltas: Vec<f64>,
    pub seed: u64,
    pub trials: usize,
    pub audit_n_max: usize,
    pub out_dir: PathBuf,
    pub tolerances: Tolerances,
}

const SECTIONS: [(&str, &[&str]); 8] = [
    ("potential", &["spec", "file", "extent"]),
    ("spectrum", &["s", "gamma", "n_max"]),
    ("sampling", &["N", "a", "b", "functions", "degree"]),
    ("grid", &["re", "im", "resolution"]),
    ("noise", &["deltas", "seed", "trials"]),
    ("audit", &["n_max"]),
    ("output", &["dir"]),
    ("tolerances", &["ode_tol", "quad_tol", "root_tol", "series_tail_tol"]),
];

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// `base` resolves relative `file` and `dir` entries.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let ini = Ini::load_from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        for (section, props) in ini.iter() {
            let Some(name) = section else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(CliError::Config(format!("key `{k}` outside any section")));
                }
                continue;
            };
            let known = SECTIONS
                .iter()
                .find(|(s, _)| *s == name)
                .ok_or_else(|| CliError::Config(format!("unknown section [{name}]")))?;
            for (k, _) in props.iter() {
                if !known.1.contains(&k) {
                    return Err(CliError::Config(format!("unknown key `{k}` in [{name}]")));
                }
            }
        }
        let get = |section: &str, key: &str| ini.section(Some(section)).and_then(|s| s.get(key));

        let s = number(get("spectrum", "s"), PI)?;
        let gamma = number(get("spectrum", "gamma"), FRAC_PI_2)?;
        let n_max = integer(get("spectrum", "n_max"), 200)?;
        let n = integer(get("sampling", "N"), 200)?;
        let a = number(get("sampling", "a"), FRAC_PI_2)?;
        let b = number(get("sampling", "b"), PI)?;
        let functions = integer(get("sampling", "functions"), 5)?;
        let degree = integer(get("sampling", "degree"), 4)?;

        let extent_default = s.max(b);
        let extent = match get("potential", "extent") {
            Some(v) => Some(parse_number(v, 0).map_err(config)?),
            None => Some(extent_default),
        };
        let potential = match (get("potential", "spec"), get("potential", "file")) {
            (Some(_), Some(_)) => return Err(CliError::Config("give either spec or file for [potential]".into())),
            (Some(spec), None) => Potential::parse(&format!("preset {spec}"), extent).map_err(config)?,
            (None, Some(file)) => {
                let path = base.join(file);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
                Potential::parse(&text, extent).map_err(config)?
            }
            (None, None) => Potential::cosine_preset(extent_default),
        };

        let re = pair(get("grid", "re"), (-1.0, 30.0))?;
        let im = pair(get("grid", "im"), (-1.0, 1.0))?;
        let resolution = match get("grid", "resolution") {
            Some(v) => {
                let (x, y) = pair(Some(v), (0.0, 0.0))?;
                (as_count(x)?, as_count(y)?)
            }
            None => (16, 5),
        };
        let deltas = match get("noise", "deltas") {
            Some(v) => list(v)?,
            None => vec![1e-1, 1e-2, 1e-3],
        };
        let seed = match get("noise", "seed") {
            Some(v) => v.trim().parse().map_err(|_| CliError::Config(format!("bad seed `{v}`")))?,
            None => 7,
        };
        let trials = integer(get("noise", "trials"), 3)?;
        let audit_n_max = integer(get("audit", "n_max"), 60)?;
        let out_dir = base.join(get("output", "dir").unwrap_or("out"));

        let mut tolerances = Tolerances::default();
        if let Some(section) = ini.section(Some("tolerances")) {
            for (k, v) in section.iter() {
                tolerances.set(k, number(Some(v), 0.0)?).map_err(config)?;
            }
        }

        let cfg = RunConfig {
            potential,
            s,
            gamma,
            n_max,
            n,
            a,
            b,
            functions,
            degree,
            re,
            im,
            resolution,
            deltas,
            seed,
            trials,
            audit_n_max,
            out_dir,
            tolerances,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let extent = self.potential.s_max();
        let fail = |msg: String| Err(CliError::Config(msg));
        if !(self.a > 0.0 && self.a < self.b && self.b <= extent * (1.0 + 1e-12)) {
            return fail(format!("need 0 < a < b ≤ extent, got a={}, b={}, extent={extent}", self.a, self.b));
        }
        if !(self.s > 0.0 && self.s <= extent * (1.0 + 1e-12)) {
            return fail(format!("need 0 < s ≤ extent, got s={}", self.s));
        }
        if !(0.0..PI).contains(&self.gamma) {
            return fail(format!("gamma must lie in [0, π), got {}", self.gamma));
        }
        if self.re.0 > self.re.1 || self.im.0 > self.im.1 {
            return fail("grid ranges must be increasing".into());
        }
        // A degenerate imaginary range is a segment of the real line and takes one row.
        let rows_ok = if self.im.0 == self.im.1 { self.resolution.1 == 1 } else { self.resolution.1 >= 2 };
        if self.resolution.0 < 2 || !rows_ok {
            return fail(format!("grid resolution {:?} too small", self.resolution));
        }
        if self.deltas.is_empty() || self.deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return fail("noise deltas must be positive".into());
        }
        if self.n == 0 || self.n_max == 0 || self.functions == 0 {
            return fail("N, n_max and functions must be positive".into());
        }
        if self.audit_n_max < 22 {
            return fail("audit n_max must be at least 22".into());
        }
        Ok(())
    }

    pub fn z_points(&self) -> Vec<Complex64> {
        dbsample::sampling::z_grid(self.re, self.im, self.resolution.0, self.resolution.1)
            .expect("validated grid")
    }

    /// Smallest radius containing every grid point.
    pub fn z_radius(&self) -> f64 {
        self.z_points().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Applies one `key=value` override, e.g. `ode_tol=1e-12`.
    pub fn override_tolerance(&mut self, assignment: &str) -> Result<(), CliError> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("expected key=value, got `{assignment}`")))?;
        let value = number(Some(v), 0.0)?;
        self.tolerances.set(k.trim(), value).map_err(config)
    }
}

fn config(e: dbsample::Error) -> CliError {
    CliError::Config(e.to_string())
}

fn number(v: Option<&str>, default: f64) -> Result<f64, CliError> {
    match v {
        Some(v) => parse_number(v, 0).map_err(config),
        None => Ok(default),
    }
}

fn integer(v: Option<&str>, default: usize) -> Result<usize, CliError> {
    match v {
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("expected a non-negative integer, got `{v}`"))),
        None => Ok(default),
    }
}

fn as_count(x: f64) -> Result<usize, CliError> {
    if x >= 0.0 && x.fract() == 0.0 {
        Ok(x as usize)
    } else {
        Err(CliError::Config(format!("expected a count, got {x}")))
    }
}

fn list(v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',').map(|t| parse_number(t, 0).map_err(config)).collect()
}

fn pair(v: Option<&str>, default: (f64, f64)) -> Result<(f64, f64), CliError> {
    match v {
        Some(v) => match list(v)?.as_slice() {
            [x, y] => Ok((*x, *y)),
            _ => Err(CliError::Config(format!("expected two comma-separated numbers, got `{v}`"))),
        },
        None => Ok(default),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, CliError> {
        RunConfig::parse(text, Path::new("/tmp"))
    }

    #[test]
    fn defaults() {
        let c = parse("").unwrap();
        assert_eq!((c.n, c.n_max, c.seed), (200, 200, 7));
        assert_eq!(c.potential, Potential::cosine_preset(PI));
        assert_eq!(c.z_points().len(), 80);
        assert_eq!(c.out_dir, Path::new("/tmp/out"));
    }

    #[test]
    fn values_with_pi() {
        let c = parse("[potential]\nspec = zero\nextent = 3*pi/2\n[sampling]\na = pi\nb = 3*pi/2\n").unwrap();
        assert!(c.potential.is_zero());
        assert_eq!(c.b, 1.5 * PI);
        assert_eq!(c.potential.s_max(), 1.5 * PI);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "[bogus]\nx = 1\n",
            "[spectrum]\nwidth = 2\n",
            "[sampling]\na = 2\nb = 1\n",
            "[spectrum]\ngamma = pi\n",
            "[grid]\nresolution = 1, 5\n",
            "[noise]\ndeltas = 0.1, -1\n",
            "[potential]\nspec = cosine 2\n",
            "[tolerances]\node_tol = 0\n",
            "stray = 1\n",
        ] {
            assert!(matches!(parse(text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn real_segment_takes_one_row() {
        let c = parse("[grid]\nre = 0, 20\nim = 0, 0\nresolution = 25, 1\n").unwrap();
        assert!(c.z_points().iter().all(|z| z.im == 0.0));
        assert!(parse("[grid]\nim = 0, 0\nresolution = 25, 2\n").is_err());
    }

    #[test]
    fn tolerance_overrides() {
        let mut c = parse("").unwrap();
        c.override_tolerance("root_tol=1e-12").unwrap();
        assert_eq!(c.tolerances.root_tol, 1e-12);
        assert!(c.override_tolerance("nope=1").is_err());
        assert!(c.override_tolerance("root_tol").is_err());
    }
}
