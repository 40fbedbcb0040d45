//! Command-line entry point, returning the process exit status.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

use crate::{run, CliError, Command, RunConfig};

/// Sampling experiments in de Branges spaces of Schrödinger operators.
///
/// Exit status: 0 all checks pass, 1 bound violation, 2 configuration
/// error, 3 numerical failure.
#[derive(Debug, Parser)]
#[command(name = "dbsample", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,

    /// Run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory, overriding `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Seed, overriding `[noise] seed`.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads; all cores when omitted.
    #[arg(long)]
    threads: Option<usize>,

    /// Tolerance override such as `ode_tol=1e-12`; repeatable.
    #[arg(long = "tol-override", value_name = "KEY=VALUE")]
    tol_override: Vec<String>,
}

fn configure(args: &Args) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::parse("", &std::env::current_dir().unwrap_or_default())?,
    };
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    for t in &args.tol_override {
        cfg.override_tolerance(t)?;
    }
    Ok(cfg)
}

/// Parses `args` (program name first), runs the command and reports on
/// stdout/stderr.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return 2;
        }
        // The global pool can be set once per process; later requests keep it.
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already configured: {e}");
        }
    }
    match configure(&args).and_then(|cfg| run(args.command, &cfg)) {
        Ok(o) => {
            for path in &o.artifacts {
                println!("{}", path.display());
            }
            if !o.pass {
                eprintln!("bound violation: see the report for details");
            }
            o.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    /// Runs with `@name` arguments resolved inside `dir`.
    fn dbsample(args: &[&str], dir: &Path) -> i32 {
        let resolved = args.iter().map(|a| match a.strip_prefix('@') {
            Some(name) => dir.join(name).display().to_string(),
            None => a.to_string(),
        });
        main_with(std::iter::once("dbsample".to_string()).chain(resolved))
    }

    fn write(dir: &Path, name: &str, body: &str) {
        std::fs::write(dir.join(name), body).unwrap();
    }

    #[test]
    fn free_spectrum_lists_squares() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "run.ini", "[potential]\nspec = zero\n[spectrum]\nn_max = 10\n");
        assert_eq!(dbsample(&["spectrum", "--config", "@run.ini", "--out", "@o"], dir.path()), 0);
        let csv = std::fs::read_to_string(dir.path().join("o/spectrum.csv")).unwrap();
        let lambdas: Vec<f64> = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert_eq!(lambdas.len(), 11);
        for (n, l) in lambdas.iter().enumerate() {
            assert!((l - (n * n) as f64).abs() <= 1e-8);
        }
    }

    #[test]
    fn free_audit_passes() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "run.ini", "[potential]\nspec = zero\n");
        assert_eq!(dbsample(&["audit", "--config", "@run.ini", "--threads", "2"], dir.path()), 0);
        let json = std::fs::read_to_string(dir.path().join("out/audit.json")).unwrap();
        assert!(json.contains("\"schema_version\": 1"));
        assert!(!json.contains("\"pass\": false"));
    }

    #[test]
    fn piecewise_potential_from_file() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "v.txt", "# x value\n0 1\n1 -2\n2 0.5\npi 3\n");
        write(dir.path(), "run.ini", "[potential]\nfile = v.txt\n[spectrum]\nn_max = 5\n");
        assert_eq!(dbsample(&["spectrum", "--config", "@run.ini"], dir.path()), 0);
        assert!(dir.path().join("out/spectrum.csv").exists());
    }

    #[test]
    fn configuration_errors_exit_with_two() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "bad.ini", "[sampling]\na = 3\nb = 1\n");
        assert_eq!(dbsample(&["spectrum", "--config", "@bad.ini"], dir.path()), 2);
        assert_eq!(dbsample(&["spectrum", "--config", "@missing.ini"], dir.path()), 2);
        write(dir.path(), "ok.ini", "");
        assert_eq!(dbsample(&["spectrum", "--config", "@ok.ini", "--tol-override", "ode_tol=-1"], dir.path()), 2);
        assert_eq!(dbsample(&["nonsense"], dir.path()), 2);
        assert_eq!(dbsample(&["spectrum", "--threads", "0"], dir.path()), 2);
    }
}
