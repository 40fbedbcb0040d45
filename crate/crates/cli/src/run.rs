use std::fs;
use std::path::{Path, PathBuf};

use dbsample::diagnostics::{audit_suite, sequences_table, AuditConfig};
use dbsample::numerics::{derive_seed, TrigPolynomial};
use dbsample::oversampling::{robustness_report, OversamplingContext};
use dbsample::output::{format_number, to_json, Table, SCHEMA_VERSION};
use dbsample::sampling::{convergence_profile, take_samples, KernelTable, PROFILE_COLUMNS};
use dbsample::spectrum::compute_spectrum_with;
use dbsample::undersampling::{aliasing_report, AliasingReport, ExtensionField};
use dbsample::{BoundReport, Complex64, DBFunction, Potential};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Spectrum,
    Kernel,
    Reconstruct,
    Oversample,
    Undersample,
    Audit,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    /// 0 when every check passed, 1 on a bound violation.
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| output_error(&cfg.out_dir, e))?;
    let mut out = Writer { dir: &cfg.out_dir, artifacts: Vec::new() };
    let pass = match command {
        Command::Spectrum => spectrum(cfg, &mut out)?,
        Command::Kernel => kernel(cfg, &mut out)?,
        Command::Reconstruct => reconstruct(cfg, &mut out)?,
        Command::Oversample => oversample(cfg, &mut out)?,
        Command::Undersample => undersample(cfg, &mut out)?,
        Command::Audit => audit(cfg, &mut out)?,
    };
    Ok(Outcome { pass, artifacts: out.artifacts })
}

struct Writer<'a> {
    dir: &'a Path,
    artifacts: Vec<PathBuf>,
}

impl Writer<'_> {
    fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|e| output_error(&path, e))?;
        log::info!("wrote {}", path.display());
        self.artifacts.push(path);
        Ok(())
    }

    fn csv(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        self.text(name, &table.to_csv_string()?)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut body = to_json(value)?;
        body.push('\n');
        self.text(name, &body)
    }
}

fn output_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Output { path: path.display().to_string(), source }
}

/// Seeded smooth test function on `[0, length]`, zero beyond it.
fn test_function(p: &Potential, cfg: &RunConfig, stream: u64, length: f64, s: f64) -> Result<DBFunction, CliError> {
    let poly = TrigPolynomial::random(derive_seed(cfg.seed, stream), cfg.degree, length);
    let breaks: Vec<f64> = if length < s { vec![length] } else { Vec::new() };
    Ok(DBFunction::from_fn(p, s, &breaks, |x| {
        Complex64::new(if x <= length { poly.eval(x) } else { 0.0 }, 0.0)
    })?)
}

fn spectrum(cfg: &RunConfig, out: &mut Writer) -> Result<bool, CliError> {
    let sd = compute_spectrum_with(&cfg.potential, cfg.s, cfg.gamma, cfg.n_max, &cfg.tolerances)?;
    out.csv("spectrum.csv", &sd.table())?;
    Ok(true)
}

fn kernel(cfg: &RunConfig, out: &mut Writer) -> Result<bool, CliError> {
    let sd = compute_spectrum_with(&cfg.potential, cfg.s, cfg.gamma, cfg.n_max, &cfg.tolerances)?;
    let kt = KernelTable::new(&cfg.potential, &sd, cfg.z_radius())?;
    let mut table = Table::new(["z_re", "z_im", "n", "lambda_n", "k_re", "k_im"]);
    for z in cfg.z_points() {
        for (n, k) in kt.kernel_row(z)?.iter().enumerate() {
            table.push(vec![
                format_number(z.re),
                format_number(z.im),
                n.to_string(),
                format_number(sd.eigenvalues[n]),
                format_number(k.re),
                format_number(k.im),
            ]);
        }
    }
    out.csv("kernel.csv", &table)?;
    Ok(true)
}

#[derive(Serialize)]
struct ReconstructSummary {
    schema_version: u32,
    potential: Potential,
    s: f64,
    gamma: f64,
    #[serde(rename = "N")]
    n: usize,
    seed: u64,
    truncations: Vec<usize>,
    /// One row per test function, aligned with `truncations`.
    sup_errors: Vec<Vec<f64>>,
}

fn reconstruct(cfg: &RunConfig, out: &mut Writer) -> Result<bool, CliError> {
    let p = &cfg.potential;
    let sd = compute_spectrum_with(p, cfg.s, cfg.gamma, cfg.n, &cfg.tolerances)?;
    let kt = KernelTable::new(p, &sd, cfg.z_radius())?;
    let zs = cfg.z_points();
    let mut truncations = vec![cfg.n / 4, cfg.n / 2, cfg.n];
    truncations.dedup();

    let mut header = vec!["function".to_string(), "N".to_string()];
    header.extend(PROFILE_COLUMNS.iter().map(|c| c.to_string()));
    let mut table = Table::new(header);
    let mut sup_errors = Vec::with_capacity(cfg.functions);
    for j in 0..cfg.functions {
        let f = test_function(p, cfg, j as u64, cfg.s, cfg.s)?;
        let sf = take_samples(&f, &sd, cfg.n)?;
        let profile = convergence_profile(&f, &sf, &sd, &kt, &zs, &truncations)?;
        for (n, t) in truncations.iter().zip(&profile.tables) {
            for row in t.rows() {
                let mut r = vec![j.to_string(), n.to_string()];
                r.extend(row.iter().cloned());
                table.push(r);
            }
        }
        sup_errors.push(profile.sup_errors);
    }
    out.csv("reconstruct.csv", &table)?;
    out.json(
        "reconstruct.json",
        &ReconstructSummary {
            schema_version: SCHEMA_VERSION,
            potential: p.clone(),
            s: cfg.s,
            gamma: cfg.gamma,
            n: cfg.n,
            seed: cfg.seed,
            truncations,
            sup_errors,
        },
    )?;
    Ok(true)
}

fn oversample(cfg: &RunConfig, out: &mut Writer) -> Result<bool, CliError> {
    let p = &cfg.potential;
    // 2N + 1 eigenvalues give the Cauchy tail S_{2N} − S_N.
    let ctx = OversamplingContext::new(p, cfg.a, cfg.b, cfg.gamma, 2 * cfg.n, cfg.z_radius(), &cfg.tolerances)?;
    let f = test_function(p, cfg, 0, cfg.a, cfg.a)?;
    let report = robustness_report(&ctx, &f, &cfg.deltas, &cfg.z_points(), cfg.n, cfg.seed, cfg.trials)?;
    out.json("oversample.json", &report)?;
    Ok(report.pass)
}

#[derive(Serialize)]
struct UndersampleSummary {
    schema_version: u32,
    potential: Potential,
    seed: u64,
    pass: bool,
    reports: Vec<AliasingReport>,
}

fn undersample(cfg: &RunConfig, out: &mut Writer) -> Result<bool, CliError> {
    let p = &cfg.potential;
    let ext = ExtensionField::new(p, cfg.a, cfg.b, cfg.gamma, cfg.n, cfg.z_radius(), &cfg.tolerances)?;
    let zs = cfg.z_points();
    let reports = (0..cfg.functions)
        .map(|j| {
            let g = test_function(p, cfg, j as u64, cfg.b, cfg.b)?;
            Ok(aliasing_report(&ext, &g, &zs)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let pass = reports.iter().all(|r| r.pass);
    out.json(
        "undersample.json",
        &UndersampleSummary {
            schema_version: SCHEMA_VERSION,
            potential: p.clone(),
            seed: cfg.seed,
            pass,
            reports,
        },
    )?;
    Ok(pass)
}

#[derive(Serialize)]
struct AuditSummary<'a> {
    schema_version: u32,
    potential: &'a Potential,
    pass: bool,
    reports: &'a [BoundReport],
}

fn audit(cfg: &RunConfig, out: &mut Writer) -> Result<bool, CliError> {
    let audit_cfg = AuditConfig { n_max: cfg.audit_n_max, ..AuditConfig::default() };
    let reports = audit_suite(&cfg.potential, &audit_cfg)?;
    let pass = reports.iter().all(|r| r.pass);
    out.json(
        "audit.json",
        &AuditSummary { schema_version: SCHEMA_VERSION, potential: &cfg.potential, pass, reports: &reports },
    )?;
    out.csv("audit_sequences.csv", &sequences_table(&reports))?;
    Ok(pass)
}
