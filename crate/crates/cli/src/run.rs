use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::thread;

use isc_core::sim::{run_scenario, Metrics, ScenarioConfig, ScenarioKind, SimTrace};
use isc_core::DriverKind;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{load_config, ConfigError};

pub const DIGEST_ALGORITHM: &str = "sha256";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("run `{label}`: {source}")]
    Run {
        label: String,
        source: isc_core::Error,
    },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Usage(String),
}

/// Parsed command-line request.
#[derive(Debug, Clone, Default)]
pub struct RunArgs {
    pub scenario: Option<ScenarioKind>,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub sweep_lambda_a: Option<Vec<f64>>,
    pub driver: Option<DriverKind>,
    pub plot_data: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub file: String,
    pub digest: String,
}

/// Inventory of one invocation's outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub sweep: Option<SweepSpec>,
    pub files: Vec<ManifestEntry>,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# isc-sim run manifest");
        let _ = writeln!(s, "# digest: {DIGEST_ALGORITHM}");
        let config = self
            .config
            .as_ref()
            .map_or("(defaults)".to_string(), |p| p.display().to_string());
        let _ = writeln!(s, "config: {config}");
        let _ = writeln!(s, "out: {}", self.out_dir.display());
        match &self.sweep {
            Some(sw) => {
                let v: Vec<String> = sw.values.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(s, "sweep: {} = {}", sw.parameter, v.join(","));
            }
            None => {
                let _ = writeln!(s, "sweep: none");
            }
        }
        let _ = writeln!(s, "seedless: true");
        for e in &self.files {
            let _ = writeln!(s, "{}  {}", e.digest, e.file);
        }
        s
    }
}

pub fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// One scenario run scheduled by an invocation.
#[derive(Debug, Clone)]
pub struct Job {
    pub label: String,
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone)]
pub struct JobResult {
    pub job: Job,
    pub trace: SimTrace,
    pub metrics: Metrics,
}

/// Resolves the base config and expands the sweep into validated jobs.
pub fn plan(args: &RunArgs) -> Result<Vec<Job>, CliError> {
    let mut base = match &args.config {
        Some(p) => load_config(p, args.scenario)?,
        None => ScenarioConfig::defaults(args.scenario.unwrap_or(ScenarioKind::PathFollowing)),
    };
    if let Some(d) = args.driver {
        base.driver = d;
    }
    let jobs = match &args.sweep_lambda_a {
        None => vec![Job {
            label: base.kind.to_string(),
            config: base,
        }],
        Some(values) => {
            if values.is_empty() {
                return Err(CliError::Usage("empty lambda_a sweep".into()));
            }
            values
                .iter()
                .map(|&v| Job {
                    label: format!("{}_lambda_a_{v}", base.kind),
                    config: base.clone().with_lambda_a(v),
                })
                .collect()
        }
    };
    for (i, j) in jobs.iter().enumerate() {
        if jobs[..i].iter().any(|o| o.label == j.label) {
            return Err(CliError::Usage(format!(
                "duplicate sweep value in `{}`",
                j.label
            )));
        }
        j.config.validate().map_err(|source| CliError::Run {
            label: j.label.clone(),
            source,
        })?;
    }
    Ok(jobs)
}

/// Runs every job, concurrently when there is more than one.
pub fn execute(jobs: Vec<Job>) -> Result<Vec<JobResult>, CliError> {
    let results: Vec<_> = thread::scope(|s| {
        let handles: Vec<_> = jobs
            .into_iter()
            .map(|job| {
                s.spawn(move || {
                    run_scenario(&job.config)
                        .map(|(trace, metrics)| JobResult {
                            job: job.clone(),
                            trace,
                            metrics,
                        })
                        .map_err(|source| CliError::Run {
                            label: job.label.clone(),
                            source,
                        })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario worker panicked"))
            .collect()
    });
    results.into_iter().collect()
}

pub fn summary_table(results: &[JobResult]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<20} {:>8} {:>8} {:>12} {:>12} {:>12} {:>12} {:>10} {:>8}",
        "scenario",
        "lambda_D",
        "lambda_A",
        "rms_y_err",
        "rms_psi_err",
        "rms_uD",
        "peak_uD",
        "latency_s",
        "switches"
    );
    for r in results {
        let m = &r.metrics;
        let latency = m.latency_s.map_or("-".to_string(), |l| format!("{l:.2}"));
        let _ = writeln!(
            s,
            "{:<20} {:>8.3} {:>8.3} {:>12.5e} {:>12.5e} {:>12.5e} {:>12.5e} {:>10} {:>8}",
            r.job.config.kind.as_str(),
            r.job.config.lambda_d,
            r.job.config.lambda_a,
            m.rms_y_err,
            m.rms_psi_err,
            m.rms_u_d,
            m.peak_u_d,
            latency,
            m.switches
        );
    }
    s
}

fn series(points: impl Iterator<Item = (f64, f64)>, header: &str) -> String {
    let mut s = format!("# {header}\n");
    for (a, b) in points {
        let _ = writeln!(s, "{a:.16e} {b:.16e}");
    }
    s
}

/// Two-column data files: lateral position and driver input against time,
/// plus the driver input within one second of the first switch.
pub fn plot_files(r: &JobResult) -> Vec<(String, String)> {
    let rows = &r.trace.rows;
    let mut out = vec![
        (
            format!("{}_y.dat", r.job.label),
            series(rows.iter().map(|x| (x.t, x.state.y)), "t y"),
        ),
        (
            format!("{}_y_ref.dat", r.job.label),
            series(rows.iter().map(|x| (x.t, x.r_d.y)), "t y_ref_driver"),
        ),
        (
            format!("{}_u_d.dat", r.job.label),
            series(rows.iter().map(|x| (x.t, x.u_d)), "t u_D"),
        ),
    ];
    if let Some(k) = r.metrics.first_switch_step {
        let span = (1.0 / r.job.config.t_s).round() as usize;
        let lo = k.saturating_sub(span);
        let hi = (k + span + 1).min(rows.len());
        out.push((
            format!("{}_u_d_switch.dat", r.job.label),
            series(rows[lo..hi].iter().map(|x| (x.t, x.u_d)), "t u_D"),
        ));
    }
    out
}

/// Writes files into one directory and removes them again unless committed.
struct OutputSet {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
    committed: bool,
}

impl OutputSet {
    fn open(dir: &Path) -> Result<Self, CliError> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            created_dir,
            written: Vec::new(),
            committed: false,
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8], protect: Option<&Path>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        if let (Some(p), Ok(target)) = (protect, path.canonicalize()) {
            if p == target {
                return Err(CliError::Usage(format!(
                    "output `{}` would overwrite the input config",
                    path.display()
                )));
            }
        }
        self.written.push(path.clone());
        fs::write(&path, bytes).map_err(|source| CliError::Io { path, source })
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

/// Full invocation: plan, run, then write traces, summary, plot data and the
/// manifest. On failure nothing written by this call is left behind.
pub fn run(args: &RunArgs) -> Result<(RunManifest, String), CliError> {
    let jobs = plan(args)?;
    let results = execute(jobs)?;
    let summary = summary_table(&results);

    let protect = args.config.as_ref().and_then(|p| p.canonicalize().ok());
    let mut out = OutputSet::open(&args.out)?;
    let mut files = Vec::new();
    let mut emit = |out: &mut OutputSet, name: String, body: &[u8]| -> Result<(), CliError> {
        out.write(&name, body, protect.as_deref())?;
        files.push(ManifestEntry {
            file: name,
            digest: digest(body),
        });
        Ok(())
    };
    for r in &results {
        emit(
            &mut out,
            format!("{}.csv", r.job.label),
            r.trace.to_csv().as_bytes(),
        )?;
    }
    emit(&mut out, SUMMARY_FILE.to_string(), summary.as_bytes())?;
    if args.plot_data {
        for r in &results {
            for (name, body) in plot_files(r) {
                emit(&mut out, name, body.as_bytes())?;
            }
        }
    }
    let manifest = RunManifest {
        config: args.config.clone(),
        out_dir: args.out.clone(),
        sweep: args.sweep_lambda_a.as_ref().map(|v| SweepSpec {
            parameter: "lambda_a".into(),
            values: v.clone(),
        }),
        files,
    };
    out.write(
        MANIFEST_FILE,
        manifest.to_text().as_bytes(),
        protect.as_deref(),
    )?;
    out.committed = true;
    Ok((manifest, summary))
}
