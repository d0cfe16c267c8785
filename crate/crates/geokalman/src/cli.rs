//! Command-line experiment runner: argument/config parsing, experiment
//! execution, and reproducible CSV emission.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::sim::{
    run_experiment_with, ExperimentConfig, ExperimentKind, ExperimentRecord, FilterName,
};

const USAGE: &str = "usage: geokalman --experiment <car2d|sphere> [options] [key=value ...]

options:
  --experiment <name>   benchmark to run: car2d or sphere (required)
  --steps <n>           number of simulated transitions (default 200)
  --dt <t>              time step (default 0.01)
  --seed <s>            noise stream seed (default 42)
  --alpha <a>           adaptive-EKF forgetting factor (default 0.99)
  --filters <list>      comma-separated subset of ekf,ukf,adaptive-ekf
                        (default all three)
  --out <dir>           output directory for CSV files (default ./out)
  --config <file>       key=value configuration file; flags override it

positional key=value pairs override the config file and are themselves
overridden by flags; keys match the long option names.  when no out
directory is configured, the GEOKALMAN_OUT environment variable supplies
the default.";

/// A fully resolved command-line invocation.
#[derive(Debug, Clone)]
pub struct CliInvocation {
    /// Which benchmark to run.
    pub experiment: ExperimentKind,
    /// Requested filters in canonical order (EKF, UKF, adaptive EKF).
    pub filters: Vec<FilterName>,
    /// Number of simulated transitions.
    pub steps: usize,
    /// Time step.
    pub dt: f64,
    /// Noise stream seed.
    pub seed: u64,
    /// Adaptive-EKF forgetting factor.
    pub alpha: f64,
    /// Directory the CSV files are written to.
    pub out_dir: PathBuf,
    /// Configuration file, if one was given.
    pub config_file: Option<PathBuf>,
    /// Positional `key=value` overrides, in the order given.
    pub overrides: Vec<(String, String)>,
}

/// A command-line usage error; reported on standard error with exit code 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Partially resolved settings; later sources override earlier ones.
#[derive(Debug, Default)]
struct Settings {
    experiment: Option<ExperimentKind>,
    steps: Option<usize>,
    dt: Option<f64>,
    seed: Option<u64>,
    alpha: Option<f64>,
    filters: Option<Vec<FilterName>>,
    out: Option<PathBuf>,
}

impl Settings {
    fn apply(&mut self, key: &str, value: &str, source: &str) -> std::result::Result<(), UsageError> {
        let bad = |what: &str| UsageError(format!("invalid value for {what} ({source}): `{value}`"));
        match key {
            "experiment" => {
                self.experiment = Some(ExperimentKind::parse(value).ok_or_else(|| {
                    UsageError(format!(
                        "unknown experiment `{value}`: valid experiments are car2d, sphere"
                    ))
                })?);
            }
            "steps" => {
                let n: usize = value.parse().map_err(|_| bad("steps"))?;
                if n < 1 {
                    return Err(UsageError("steps must be at least 1".into()));
                }
                self.steps = Some(n);
            }
            "dt" => {
                let t: f64 = value.parse().map_err(|_| bad("dt"))?;
                if !(t > 0.0) {
                    return Err(UsageError(format!("dt must be positive, got {value}")));
                }
                self.dt = Some(t);
            }
            "seed" => self.seed = Some(value.parse().map_err(|_| bad("seed"))?),
            "alpha" => self.alpha = Some(value.parse().map_err(|_| bad("alpha"))?),
            "filters" => self.filters = Some(parse_filters(value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            other => {
                return Err(UsageError(format!("unknown key `{other}` ({source})")));
            }
        }
        Ok(())
    }
}

fn parse_filters(list: &str) -> std::result::Result<Vec<FilterName>, UsageError> {
    let mut selected = Vec::new();
    for item in list.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let filter = FilterName::parse(item).ok_or_else(|| {
            UsageError(format!(
                "unknown filter `{item}`: valid filters are ekf, ukf, adaptive-ekf"
            ))
        })?;
        if !selected.contains(&filter) {
            selected.push(filter);
        }
    }
    if selected.is_empty() {
        return Err(UsageError("at least one filter must be selected".into()));
    }
    // Canonical order keeps the CSV column layout stable.
    Ok(FilterName::ALL
        .into_iter()
        .filter(|f| selected.contains(f))
        .collect())
}

fn parse_config_file(path: &Path) -> std::result::Result<Vec<(String, String)>, UsageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config file {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            UsageError(format!(
                "malformed line {} in {}: expected key=value",
                lineno + 1,
                path.display()
            ))
        })?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

/// Parses a command line into an invocation.
///
/// Settings are resolved in the order defaults < config file < positional
/// `key=value` overrides < flags; unknown flags and keys are rejected.
pub fn parse_args(args: &[String]) -> std::result::Result<CliInvocation, UsageError> {
    let mut flags: Vec<(String, String)> = Vec::new();
    let mut overrides: Vec<(String, String)> = Vec::new();
    let mut config_file: Option<PathBuf> = None;

    let mut iter = args.iter();
    while let Some(arg) = iter.next() {
        if let Some(name) = arg.strip_prefix("--") {
            let known = matches!(
                name,
                "experiment" | "steps" | "dt" | "seed" | "alpha" | "filters" | "out" | "config"
            );
            if !known {
                return Err(UsageError(format!("unknown flag `{arg}`")));
            }
            let value = iter
                .next()
                .ok_or_else(|| UsageError(format!("missing value for `{arg}`")))?
                .clone();
            if name == "config" {
                config_file = Some(PathBuf::from(value));
            } else {
                flags.push((name.to_string(), value));
            }
        } else if let Some((key, value)) = arg.split_once('=') {
            overrides.push((key.trim().to_string(), value.trim().to_string()));
        } else {
            return Err(UsageError(format!("unexpected argument `{arg}`")));
        }
    }

    let mut settings = Settings::default();
    if let Some(path) = &config_file {
        for (key, value) in parse_config_file(path)? {
            settings.apply(&key, &value, "config file")?;
        }
    }
    for (key, value) in &overrides {
        settings.apply(key, value, "override")?;
    }
    for (key, value) in &flags {
        settings.apply(key, value, "flag")?;
    }

    let experiment = settings.experiment.ok_or_else(|| {
        UsageError("missing required `--experiment` (valid experiments are car2d, sphere)".into())
    })?;
    Ok(CliInvocation {
        experiment,
        filters: settings.filters.unwrap_or_else(|| FilterName::ALL.to_vec()),
        steps: settings.steps.unwrap_or(200),
        dt: settings.dt.unwrap_or(0.01),
        seed: settings.seed.unwrap_or(42),
        alpha: settings.alpha.unwrap_or(0.99),
        out_dir: settings
            .out
            .or_else(|| std::env::var_os("GEOKALMAN_OUT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("./out")),
        config_file,
        overrides,
    })
}

impl CliInvocation {
    /// The experiment configuration this invocation describes.
    pub fn config(&self) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::for_kind(self.experiment);
        cfg.steps = self.steps;
        cfg.dt = self.dt;
        cfg.seed = self.seed;
        cfg.adapt_alpha = self.alpha;
        cfg
    }
}

fn format_cell(v: f64) -> String {
    // 17 significant digits: doubles round-trip losslessly and the output is
    // locale independent.
    format!("{v:.16e}")
}

fn filter_label(record: &ExperimentRecord, filter: FilterName) -> String {
    match filter {
        FilterName::Ekf => "EKF".to_string(),
        FilterName::Ukf => "UKF".to_string(),
        FilterName::AdaptiveEkf => match record.name {
            ExperimentKind::Car2d => format!("EKF adaptive α={}", record.adapt_alpha),
            ExperimentKind::Sphere => format!("EKF adaptive M α={}", record.adapt_alpha),
        },
    }
}

fn position_components(record: &ExperimentRecord, p: &Point) -> Vec<f64> {
    let n = match record.name {
        ExperimentKind::Car2d => 2,
        ExperimentKind::Sphere => 3,
    };
    p.coords.rows(0, n).iter().copied().collect()
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes the three CSV files for one experiment record and returns their
/// paths: `<name>_trajectory.csv`, `<name>_measurements.csv`, and
/// `<name>_errors.csv`.
///
/// The trajectory file holds the time column, then position blocks for the
/// truth, the EKF, the UKF and the adaptive EKF (those that ran); the errors
/// file holds the running RMSE series, UKF before EKF. Failed or unrequested
/// filters are omitted and the headers adjust. Every value is printed with 17
/// significant digits so re-runs are byte-identical.
pub fn write_outputs(record: &ExperimentRecord, out_dir: &Path) -> Result<Vec<PathBuf>> {
    // Filters that actually produced estimates, in canonical order.
    let ran: Vec<FilterName> = FilterName::ALL
        .into_iter()
        .filter(|&f| {
            record
                .filter(f)
                .is_some_and(|r| r.failed_at.is_none() && !r.estimates.is_empty())
        })
        .collect();
    let comps = match record.name {
        ExperimentKind::Car2d => 2,
        ExperimentKind::Sphere => 3,
    };

    let mut trajectory = String::from("times");
    for i in 1..=comps {
        trajectory.push_str(&format!(",true_{i}"));
    }
    for &f in &ran {
        let label = filter_label(record, f);
        for i in 1..=comps {
            trajectory.push_str(&format!(",{label}_{i}"));
        }
    }
    trajectory.push('\n');
    for (n, t) in record.times.iter().enumerate() {
        let mut row = vec![format_cell(*t)];
        row.extend(position_components(record, &record.true_states[n]).iter().map(|&v| format_cell(v)));
        for &f in &ran {
            let run = record.filter(f).expect("filter ran");
            row.extend(position_components(record, &run.estimates[n]).iter().map(|&v| format_cell(v)));
        }
        trajectory.push_str(&row.join(","));
        trajectory.push('\n');
    }

    let mut measurements = String::from("times");
    for i in 1..=comps {
        measurements.push_str(&format!(",measurement_{i}"));
    }
    measurements.push('\n');
    for (k, z) in record.measurements.iter().enumerate() {
        let mut row = vec![format_cell(record.times[k + 1])];
        row.extend(z.coords.iter().map(|&v| format_cell(v)));
        measurements.push_str(&row.join(","));
        measurements.push('\n');
    }

    let mut errors = String::from("times,measurement_errors");
    // The error columns list the UKF before the EKF.
    for f in [FilterName::Ukf, FilterName::Ekf, FilterName::AdaptiveEkf] {
        if ran.contains(&f) {
            errors.push_str(&format!(",error_{}", filter_label(record, f)));
        }
    }
    errors.push('\n');
    for k in 0..record.measurements.len() {
        let mut row = vec![
            format_cell(record.times[k + 1]),
            format_cell(record.measurement_errors[k]),
        ];
        for f in [FilterName::Ukf, FilterName::Ekf, FilterName::AdaptiveEkf] {
            if ran.contains(&f) {
                row.push(format_cell(record.filter(f).expect("filter ran").errors[k]));
            }
        }
        errors.push_str(&row.join(","));
        errors.push('\n');
    }

    let mut paths = Vec::new();
    for (suffix, content) in [
        ("trajectory", trajectory),
        ("measurements", measurements),
        ("errors", errors),
    ] {
        let path = out_dir.join(format!("{}_{suffix}.csv", record.name));
        write_file(&path, &content)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Runs one invocation end to end: simulate, filter, write CSVs.
pub fn execute(inv: &CliInvocation) -> Result<(ExperimentRecord, Vec<PathBuf>)> {
    let record = run_experiment_with(&inv.config(), &inv.filters)?;
    std::fs::create_dir_all(&inv.out_dir).map_err(|source| Error::Io {
        path: inv.out_dir.display().to_string(),
        source,
    })?;
    let paths = write_outputs(&record, &inv.out_dir)?;
    Ok((record, paths))
}

/// Full command-line entry point; returns the process exit code.
///
/// Exit codes: 0 on success (one summary line per filter on standard out),
/// 1 on experiment or I/O failure, 2 on usage errors.
pub fn run(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let inv = match parse_args(args) {
        Ok(inv) => inv,
        Err(UsageError(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            let _ = writeln!(err, "{USAGE}");
            return 2;
        }
    };
    match execute(&inv) {
        Ok((record, _paths)) => {
            for run in &record.filters {
                match run.failed_at {
                    None => {
                        let final_rmse = run.errors.last().copied().unwrap_or(0.0);
                        let _ = writeln!(out, "{}: final RMSE {final_rmse:.6}", run.name);
                    }
                    Some(step) => {
                        let _ = writeln!(out, "{}: failed at step {step}", run.name);
                    }
                }
            }
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    // Tests that read or write GEOKALMAN_OUT must not interleave, and the
    // plain-defaults test must not observe a leftover value.
    static ENV_LOCK: std::sync::Mutex<()> = std::sync::Mutex::new(());

    #[test]
    fn defaults_are_applied() {
        let _guard = ENV_LOCK.lock().unwrap();
        let inv = parse_args(&args(&["--experiment", "car2d"])).unwrap();
        assert_eq!(inv.experiment, ExperimentKind::Car2d);
        assert_eq!(inv.steps, 200);
        assert_eq!(inv.dt, 0.01);
        assert_eq!(inv.seed, 42);
        assert_eq!(inv.alpha, 0.99);
        assert_eq!(inv.filters, FilterName::ALL.to_vec());
        assert_eq!(inv.out_dir, PathBuf::from("./out"));
    }

    #[test]
    fn environment_supplies_the_default_out_dir() {
        let _guard = ENV_LOCK.lock().unwrap();
        // SAFETY: the lock above keeps every env-sensitive test in this
        // module from running concurrently with the mutation.
        unsafe { std::env::set_var("GEOKALMAN_OUT", "/tmp/geokalman-env") };
        let by_env = parse_args(&args(&["--experiment", "car2d"])).unwrap();
        let by_flag = parse_args(&args(&[
            "--experiment",
            "car2d",
            "--out",
            "elsewhere",
        ]))
        .unwrap();
        unsafe { std::env::remove_var("GEOKALMAN_OUT") };
        assert_eq!(by_env.out_dir, PathBuf::from("/tmp/geokalman-env"));
        assert_eq!(by_flag.out_dir, PathBuf::from("elsewhere"));
    }

    #[test]
    fn flags_override_defaults() {
        let inv = parse_args(&args(&[
            "--experiment",
            "sphere",
            "--steps",
            "50",
            "--seed",
            "7",
        ]))
        .unwrap();
        assert_eq!(inv.experiment, ExperimentKind::Sphere);
        assert_eq!(inv.steps, 50);
        assert_eq!(inv.seed, 7);
    }

    #[test]
    fn unknown_experiment_names_the_valid_set() {
        let err = parse_args(&args(&["--experiment", "mars"])).unwrap_err();
        assert!(err.0.contains("car2d"), "{err}");
        assert!(err.0.contains("sphere"), "{err}");
    }

    #[test]
    fn usage_errors_are_reported() {
        assert!(parse_args(&args(&["--experiment"])).is_err());
        assert!(parse_args(&args(&["--warp", "9"])).is_err());
        assert!(parse_args(&args(&["--experiment", "car2d", "--steps", "abc"])).is_err());
        assert!(parse_args(&args(&["--experiment", "car2d", "--steps", "0"])).is_err());
        assert!(parse_args(&args(&["--experiment", "car2d", "--dt", "-1"])).is_err());
        assert!(parse_args(&args(&["--experiment", "car2d", "stray"])).is_err());
        assert!(parse_args(&args(&["--experiment", "car2d", "--filters", "median"])).is_err());
        assert!(parse_args(&args(&[])).is_err());
    }

    #[test]
    fn filters_are_deduplicated_and_canonically_ordered() {
        let inv = parse_args(&args(&[
            "--experiment",
            "car2d",
            "--filters",
            "ukf,ekf,ukf",
        ]))
        .unwrap();
        assert_eq!(inv.filters, vec![FilterName::Ekf, FilterName::Ukf]);
    }

    #[test]
    fn config_file_is_overridden_by_positionals_and_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# comment\nexperiment = sphere\nsteps = 10\nseed = 3\n").unwrap();
        let inv = parse_args(&args(&[
            "--config",
            path.to_str().unwrap(),
            "steps=20",
            "--seed",
            "9",
        ]))
        .unwrap();
        assert_eq!(inv.experiment, ExperimentKind::Sphere);
        assert_eq!(inv.steps, 20, "positional override beats the file");
        assert_eq!(inv.seed, 9, "flag beats the file");
        assert_eq!(inv.overrides, vec![("steps".to_string(), "20".to_string())]);
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "velocity = 3\n").unwrap();
        let err = parse_args(&args(&["--config", path.to_str().unwrap()])).unwrap_err();
        assert!(err.0.contains("velocity"), "{err}");
    }

    fn quick_invocation(kind: &str, dir: &Path) -> CliInvocation {
        parse_args(&args(&[
            "--experiment",
            kind,
            "--steps",
            "20",
            "--out",
            dir.to_str().unwrap(),
        ]))
        .unwrap()
    }

    #[test]
    fn car_outputs_have_the_documented_shape() {
        let dir = tempfile::tempdir().unwrap();
        let inv = quick_invocation("car2d", dir.path());
        let (_, paths) = execute(&inv).unwrap();
        assert_eq!(paths.len(), 3);

        let trajectory = std::fs::read_to_string(&paths[0]).unwrap();
        let lines: Vec<&str> = trajectory.lines().collect();
        assert_eq!(lines.len(), 22, "header plus 21 rows");
        assert!(lines.iter().all(|l| l.split(',').count() == 9));
        assert!(trajectory.ends_with('\n'));

        let measurements = std::fs::read_to_string(&paths[1]).unwrap();
        let lines: Vec<&str> = measurements.lines().collect();
        assert_eq!(lines.len(), 21);
        assert!(lines.iter().all(|l| l.split(',').count() == 3));

        let errors = std::fs::read_to_string(&paths[2]).unwrap();
        assert_eq!(
            errors.lines().next().unwrap(),
            "times,measurement_errors,error_UKF,error_EKF,error_EKF adaptive α=0.99"
        );
        assert_eq!(errors.lines().count(), 21);
    }

    #[test]
    fn sphere_error_header_matches_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let inv = quick_invocation("sphere", dir.path());
        let (_, paths) = execute(&inv).unwrap();
        let errors = std::fs::read_to_string(&paths[2]).unwrap();
        assert_eq!(
            errors.lines().next().unwrap(),
            "times,measurement_errors,error_UKF,error_EKF,error_EKF adaptive M α=0.99"
        );
        let trajectory = std::fs::read_to_string(&paths[0]).unwrap();
        assert!(trajectory.lines().all(|l| l.split(',').count() == 13));
    }

    #[test]
    fn filter_subsets_drop_their_columns() {
        let dir = tempfile::tempdir().unwrap();
        let mut inv = quick_invocation("car2d", dir.path());
        inv.filters = vec![FilterName::Ekf];
        let (_, paths) = execute(&inv).unwrap();
        let trajectory = std::fs::read_to_string(&paths[0]).unwrap();
        assert!(trajectory.lines().all(|l| l.split(',').count() == 5));
        let errors = std::fs::read_to_string(&paths[2]).unwrap();
        assert_eq!(
            errors.lines().next().unwrap(),
            "times,measurement_errors,error_EKF"
        );
    }

    #[test]
    fn reruns_are_byte_identical() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let (_, paths_a) = execute(&quick_invocation("car2d", dir_a.path())).unwrap();
        let (_, paths_b) = execute(&quick_invocation("car2d", dir_b.path())).unwrap();
        for (a, b) in paths_a.iter().zip(&paths_b) {
            assert_eq!(
                std::fs::read(a).unwrap(),
                std::fs::read(b).unwrap(),
                "{} differs",
                a.display()
            );
        }
    }

    #[test]
    fn cells_use_seventeen_significant_digits() {
        assert_eq!(format_cell(0.01), "1.0000000000000000e-2");
        assert_eq!(format_cell(0.0), "0.0000000000000000e0");
        let v = std::f64::consts::FRAC_1_PI;
        let round_trip: f64 = format_cell(v).parse().unwrap();
        assert_eq!(round_trip, v);
    }

    #[test]
    fn run_reports_exit_codes_and_summaries() {
        let mut out = Vec::new();
        let mut err = Vec::new();

        let code = run(&args(&["--experiment", "mars"]), &mut out, &mut err);
        assert_eq!(code, 2);
        assert!(String::from_utf8(err.clone()).unwrap().contains("car2d"));

        let dir = tempfile::tempdir().unwrap();
        out.clear();
        err.clear();
        let code = run(
            &args(&[
                "--experiment",
                "car2d",
                "--steps",
                "10",
                "--out",
                dir.path().to_str().unwrap(),
            ]),
            &mut out,
            &mut err,
        );
        assert_eq!(code, 0, "{}", String::from_utf8_lossy(&err));
        let stdout = String::from_utf8(out.clone()).unwrap();
        assert_eq!(stdout.lines().count(), 3);
        assert!(stdout.contains("ekf: final RMSE"));

        // An out dir that collides with an existing file is unwritable.
        let blocker = dir.path().join("blocked");
        std::fs::write(&blocker, "x").unwrap();
        out.clear();
        err.clear();
        let code = run(
            &args(&[
                "--experiment",
                "car2d",
                "--steps",
                "10",
                "--out",
                blocker.to_str().unwrap(),
            ]),
            &mut out,
            &mut err,
        );
        assert_eq!(code, 1);
        assert!(
            String::from_utf8(err).unwrap().contains("blocked"),
            "path must appear in the message"
        );
    }
}
