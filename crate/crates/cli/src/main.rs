mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use recordsel::datasets::{rainfall_family, RAINFALL_NAME, RAINFALL_RECORDS};
use recordsel::estimators::{
    nonstationary_path, stationary_path, EstimateReport, DEFAULT_BAND_FACTOR,
};
use recordsel::input::{parse_csv_column, parse_sequence, ColumnSelector};
use recordsel::montecarlo::bias_risk_table;
use recordsel::records::{extract_records, statistic_records};
use recordsel::rng::with_threads;
use recordsel::stationarity::{
    critical_values, run_test, CriticalValueTable, TestReport, DEFAULT_ALPHAS, DEFAULT_N_MAX,
    DEFAULT_N_MIN, DEFAULT_REPLICATIONS, DEFAULT_SEED, MIN_REPLICATIONS,
    WIDE_TOLERANCE_REPLICATIONS,
};
use recordsel::stats::fmt_sig;
use recordsel::{Direction, Error, FamilySpec, Result, SimulationConfig};

use manifest::RunManifest;

const DIGITS: usize = 6;

#[derive(Parser)]
#[command(
    name = "recordsel",
    version,
    about = "Estimate the parameter of the population that set the latest record"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract record values and record times from a sequence.
    Records(RecordsArgs),
    /// Estimate θ_[n] with unbiased risk estimates and bands.
    Estimate(EstimateArgs),
    /// Simulate bias and risk tables from a JSON config.
    Simulate(SimulateArgs),
    /// Simulate critical values of the stationarity statistic.
    Critvals(CritvalsArgs),
    /// Test a constant parameter against a varying one.
    Test(TestArgs),
    /// Run the bundled rainfall example end to end.
    DemoRainfall(DemoArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Sequence file: one number per line, `#` comments. CSV with --column.
    #[arg(long)]
    input: PathBuf,
    /// Read this CSV column (header name or 1-based index).
    #[arg(long)]
    column: Option<String>,
}

#[derive(Args)]
struct RecordsArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "upper")]
    direction: Direction,
    /// Family JSON (path or inline); records are then taken on the family statistic.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Stationary,
    Nonstationary,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Family JSON (path or inline), or the bundled dataset name.
    #[arg(long)]
    family: String,
    #[arg(long, value_enum, default_value = "nonstationary")]
    model: Model,
    #[arg(long, default_value_t = DEFAULT_BAND_FACTOR)]
    band_factor: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override the config's replication count.
    #[arg(long)]
    reps: Option<u64>,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit JSON instead of CSV on stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CritvalsArgs {
    #[arg(long, default_value_t = DEFAULT_N_MIN)]
    n_min: usize,
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    n_max: usize,
    /// Comma-separated significance levels.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_ALPHAS)]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
    reps: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    family: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Critical-value CSV; regenerated from --reps/--seed when omitted.
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
    reps: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_BAND_FACTOR)]
    band_factor: f64,
    #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
    reps: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Records(a) => cmd_records(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Critvals(a) => cmd_critvals(a),
        Command::Test(a) => cmd_test(a),
        Command::DemoRainfall(a) => cmd_demo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn read_file(path: &Path, manifest: &mut RunManifest) -> Result<String> {
    let bytes =
        fs::read(path).map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    manifest.add_input(path, &bytes);
    String::from_utf8(bytes).map_err(|_| Error::Data(format!("{} is not UTF-8", path.display())))
}

fn read_sequence(args: &InputArgs, manifest: &mut RunManifest) -> Result<Vec<f64>> {
    let text = read_file(&args.input, manifest)?;
    match &args.column {
        Some(c) => parse_csv_column(&text, &ColumnSelector::parse(c)),
        None => parse_sequence(&text),
    }
}

/// Inline JSON, the bundled dataset name, or a path to a JSON file.
fn load_family(arg: &str, manifest: &mut RunManifest) -> Result<FamilySpec> {
    let trimmed = arg.trim();
    if trimmed.starts_with('{') {
        FamilySpec::from_json(trimmed)
    } else if trimmed == RAINFALL_NAME {
        Ok(rainfall_family())
    } else {
        FamilySpec::from_json(&read_file(Path::new(trimmed), manifest)?)
    }
}

fn emit(out: Option<&Path>, name: &str, contents: &str, manifest: &mut RunManifest) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(name);
            fs::write(&path, contents)?;
            manifest.add_output(&path);
        }
        None => print!("{contents}"),
    }
    Ok(())
}

fn finish(mut manifest: RunManifest, out: Option<&Path>) -> Result<()> {
    manifest.emit(out)?;
    Ok(())
}

fn cmd_records(a: RecordsArgs) -> Result<()> {
    let mut manifest = RunManifest::new("records");
    let seq = read_sequence(&a.input, &mut manifest)?;
    let family = a
        .family
        .as_deref()
        .map(|f| load_family(f, &mut manifest))
        .transpose()?;
    let mut csv = String::new();
    match &family {
        Some(fam) => {
            let rs = statistic_records(&seq, fam)?;
            csv.push_str("index,time,value,statistic\n");
            for (k, (t, z)) in rs.times.iter().zip(&rs.values).enumerate() {
                let x = seq[*t as usize - 1];
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    k + 1,
                    t,
                    fmt_sig(x, DIGITS),
                    fmt_sig(*z, DIGITS)
                ));
            }
        }
        None => {
            let rs = extract_records(&seq, a.direction)?;
            csv.push_str("index,time,value\n");
            for (k, (t, x)) in rs.times.iter().zip(&rs.values).enumerate() {
                csv.push_str(&format!("{},{},{}\n", k + 1, t, fmt_sig(*x, DIGITS)));
            }
        }
    }
    manifest.config = json!({
        "direction": if family.is_some() { "statistic_upper".to_string() } else { format!("{:?}", a.direction).to_lowercase() },
        "family": family,
    });
    emit(a.out.as_deref(), "records.csv", &csv, &mut manifest)?;
    finish(manifest, a.out.as_deref())
}

fn estimates_csv(reports: &[EstimateReport], model: Option<&str>) -> String {
    let mut out = String::new();
    if model.is_some() {
        out.push_str("model,");
    }
    out.push_str(&EstimateReport::CSV_HEADER.join(","));
    out.push('\n');
    for r in reports {
        if let Some(m) = model {
            out.push_str(m);
            out.push(',');
        }
        out.push_str(&r.csv_fields(DIGITS).join(","));
        out.push('\n');
    }
    out
}

fn estimate_reports(
    z: &[f64],
    family: &FamilySpec,
    model: Model,
    band_factor: f64,
) -> Result<Vec<EstimateReport>> {
    if !(band_factor.is_finite() && band_factor >= 0.0) {
        return Err(Error::Usage(format!(
            "band factor must be nonnegative, got {band_factor}"
        )));
    }
    match model {
        Model::Stationary => {
            if !family.kind().is_hazard() {
                return Err(Error::Usage(
                    "the stationary model needs a proportional (reversed) hazard family".into(),
                ));
            }
            stationary_path(z, family, band_factor)
        }
        Model::Nonstationary => {
            if z.len() < 2 {
                return Err(Error::Data(format!(
                    "fewer than 2 records ({}) for the nonstationary model",
                    z.len()
                )));
            }
            nonstationary_path(z, family, band_factor)
        }
    }
}

fn cmd_estimate(a: EstimateArgs) -> Result<()> {
    let mut manifest = RunManifest::new("estimate");
    let seq = read_sequence(&a.input, &mut manifest)?;
    let family = load_family(&a.family, &mut manifest)?;
    let z = statistic_records(&seq, &family)?.values;
    let reports = estimate_reports(&z, &family, a.model, a.band_factor)?;
    manifest.config = json!({
        "family": family,
        "model": model_name(a.model),
        "band_factor": a.band_factor,
    });
    if let Some(dir) = a.out.as_deref() {
        fs::create_dir_all(dir)?;
        let path = dir.join("estimates.json");
        fs::write(
            &path,
            serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n",
        )?;
        manifest.add_output(&path);
    }
    emit(
        a.out.as_deref(),
        "estimates.csv",
        &estimates_csv(&reports, None),
        &mut manifest,
    )?;
    finish(manifest, a.out.as_deref())
}

fn model_name(m: Model) -> &'static str {
    match m {
        Model::Stationary => "stationary",
        Model::Nonstationary => "nonstationary",
    }
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let mut manifest = RunManifest::new("simulate");
    let mut config: SimulationConfig = serde_json::from_str(&read_file(&a.config, &mut manifest)?)?;
    if let Some(r) = a.reps {
        config.replications = r;
    }
    if let Some(s) = a.seed {
        config.master_seed = s;
    }
    config.validate()?;
    manifest.master_seed = Some(config.master_seed);
    manifest.config = serde_json::to_value(&config).expect("config serializes");
    let estimators = config.resolved_estimators();
    let summary = with_threads(a.threads, || bias_risk_table(&config, &estimators))?;
    let csv = summary.to_csv(DIGITS);
    let json = summary.to_json() + "\n";
    match a.out.as_deref() {
        Some(dir) => {
            emit(Some(dir), "summary.csv", &csv, &mut manifest)?;
            emit(Some(dir), "summary.json", &json, &mut manifest)?;
        }
        None => print!("{}", if a.json { &json } else { &csv }),
    }
    if summary.replications == 1 {
        eprintln!("warning: a single replication leaves every standard error undefined (NA)");
    }
    finish(manifest, a.out.as_deref())?;
    summary.validate()
}

fn critvals_table(
    n_values: &[usize],
    alphas: &[f64],
    reps: u64,
    seed: u64,
    threads: usize,
) -> Result<CriticalValueTable> {
    if reps < MIN_REPLICATIONS {
        return Err(Error::Usage(format!(
            "at least {MIN_REPLICATIONS} replications are needed, got {reps}"
        )));
    }
    if reps < WIDE_TOLERANCE_REPLICATIONS {
        eprintln!(
            "warning: {reps} replications give wide Monte Carlo error in the tail quantiles; \
             use at least {WIDE_TOLERANCE_REPLICATIONS}"
        );
    }
    with_threads(threads, || critical_values(n_values, alphas, reps, seed))
}

fn cmd_critvals(a: CritvalsArgs) -> Result<()> {
    if a.n_min < 2 || a.n_max < a.n_min {
        return Err(Error::Usage(format!(
            "need 2 <= n-min <= n-max, got {}..{}",
            a.n_min, a.n_max
        )));
    }
    let mut manifest = RunManifest::new("critvals");
    let n_values: Vec<usize> = (a.n_min..=a.n_max).collect();
    let table = critvals_table(&n_values, &a.alpha, a.reps, a.seed, a.threads)?;
    manifest.master_seed = Some(a.seed);
    manifest.config = json!({
        "n_values": n_values,
        "alphas": a.alpha,
        "replications": a.reps,
    });
    emit(
        a.out.as_deref(),
        "critvals.csv",
        &table.to_csv(DIGITS),
        &mut manifest,
    )?;
    finish(manifest, a.out.as_deref())
}

fn test_csv(r: &TestReport) -> String {
    format!(
        "n,alpha,statistic,critical_value,decision\n{},{},{},{},{}\n",
        r.n,
        r.alpha,
        fmt_sig(r.statistic, DIGITS),
        fmt_sig(r.critical_value, DIGITS),
        r.decision
    )
}

fn hazard_records(seq: &[f64], family: &FamilySpec) -> Result<Vec<f64>> {
    if !family.kind().is_hazard() {
        return Err(Error::Usage(
            "the stationarity test needs a proportional (reversed) hazard family".into(),
        ));
    }
    Ok(statistic_records(seq, family)?.values)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Usage(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

fn cmd_test(a: TestArgs) -> Result<()> {
    check_alpha(a.alpha)?;
    let mut manifest = RunManifest::new("test");
    let seq = read_sequence(&a.input, &mut manifest)?;
    let family = load_family(&a.family, &mut manifest)?;
    let h = hazard_records(&seq, &family)?;
    if h.len() < 2 {
        return Err(Error::Data(format!(
            "the test needs at least 2 records, got {}",
            h.len()
        )));
    }
    let table = match &a.table {
        Some(path) => CriticalValueTable::from_csv(&read_file(path, &mut manifest)?)?,
        None => critvals_table(&[h.len()], &[a.alpha], a.reps, a.seed, a.threads)?,
    };
    let report = run_test(&h, a.alpha, &table)?;
    manifest.master_seed = Some(table.master_seed);
    manifest.config = json!({
        "family": family,
        "alpha": a.alpha,
        "table": a.table.as_ref().map(|p| p.display().to_string()),
        "table_replications": table.replications,
        "table_regenerated": a.table.is_none(),
    });
    if let Some(dir) = a.out.as_deref() {
        emit(
            Some(dir),
            "test.json",
            &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"),
            &mut manifest,
        )?;
    }
    emit(
        a.out.as_deref(),
        "test.csv",
        &test_csv(&report),
        &mut manifest,
    )?;
    finish(manifest, a.out.as_deref())
}

fn cmd_demo(a: DemoArgs) -> Result<()> {
    check_alpha(a.alpha)?;
    let mut manifest = RunManifest::new("demo-rainfall");
    let family = rainfall_family();
    let h = statistic_records(&RAINFALL_RECORDS, &family)?.values;
    let mut estimates = String::new();
    for model in [Model::Stationary, Model::Nonstationary] {
        let reports = estimate_reports(&h, &family, model, a.band_factor)?;
        let csv = estimates_csv(&reports, Some(model_name(model)));
        if estimates.is_empty() {
            estimates.push_str(&csv);
        } else {
            estimates.extend(csv.lines().skip(1).map(|l| format!("{l}\n")));
        }
    }
    let table = critvals_table(&[h.len()], &[a.alpha], a.reps, a.seed, a.threads)?;
    let report = run_test(&h, a.alpha, &table)?;
    manifest.master_seed = Some(a.seed);
    manifest.config = json!({
        "dataset": RAINFALL_NAME,
        "family": family,
        "alpha": a.alpha,
        "band_factor": a.band_factor,
        "table_replications": a.reps,
    });
    let note = "# note: the goodness-of-fit check of the fitted base distribution needs the raw \
                annual series, which is not bundled; only the record values are\n";
    match a.out.as_deref() {
        Some(dir) => {
            emit(
                Some(dir),
                "rainfall_estimates.csv",
                &estimates,
                &mut manifest,
            )?;
            emit(
                Some(dir),
                "rainfall_test.csv",
                &test_csv(&report),
                &mut manifest,
            )?;
            eprint!("{note}");
        }
        None => {
            println!("# dataset {RAINFALL_NAME}: H(x) = (x - 4)^1.9");
            print!("{estimates}");
            println!();
            print!("{}", test_csv(&report));
            print!("{note}");
        }
    }
    finish(manifest, a.out.as_deref())
}
