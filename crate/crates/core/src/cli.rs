//! Command-line front end. [`run`] is the whole program; the binary only
//! forwards process arguments and standard streams to it.
//!
//! Exit codes: 0 success, 1 data or model error, 2 usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::Serialize;

use crate::analytics::{share_dynamics, share_report, trade_balances, ShareReport};
use crate::equilibrium::{solve_relative_prices, EquilibriumResult, SolverConfig};
use crate::ingest::{
    aggregate, load_fixture, read_country_set, read_flows_file, read_goods_set, Fixture,
    FlowFormat, FlowRecord, LabelMode, ValueUnit,
};
use crate::model::{
    build_demand_matrix, build_supply_matrix, CountrySet, DemandMatrix, GoodsSet, PriceVector,
    SupplyMatrix,
};
use crate::report::{emit_report, LongRow, LongRows, OutputFormat};
use crate::Error;

#[derive(Debug, Parser)]
#[command(
    name = "tradeq",
    version,
    about = "Equilibrium prices, degeneracy and market shares of a cost-form trade model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a flow file and report per-year record counts.
    IngestCheck(IngestCheckArgs),
    /// Solve for equilibrium relative prices.
    Solve(SolveArgs),
    /// Supply and demand share decompositions.
    Shares(CommonArgs),
    /// Year-over-year share changes.
    Dynamics(CommonArgs),
    /// Equilibrium, shares and trade balances together.
    Report(SolveArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Flow CSV (`year,reporter,partner,product,direction,value_usd`).
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Bundled dataset; repeatable.
    #[arg(long = "fixture", value_name = "NAME")]
    fixtures: Vec<String>,
    /// Year to select from `--input`; repeatable.
    #[arg(long = "year", value_name = "YEAR")]
    years: Vec<i32>,
    /// Country label file, one label per line (default: the eight standard countries).
    #[arg(long, value_name = "PATH")]
    countries: Option<PathBuf>,
    /// Goods label file, one label per line (default: the sixteen standard categories).
    #[arg(long, value_name = "PATH")]
    goods: Option<PathBuf>,
    /// Skip records with unknown labels instead of failing.
    #[arg(long)]
    lenient: bool,
    /// The value column is `value_cents` (integer cents).
    #[arg(long)]
    cents: bool,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Write to this file instead of standard output.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "fixtures"])))]
struct CommonArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "fixtures"])))]
struct SolveArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Exponent of the multiplicative price update, in (0, 1] [default: 0.5].
    #[arg(long)]
    damping: Option<f64>,
    /// Iteration cap; the best iterate is reported unconverged past it [default: 100000].
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Residual tolerance relative to total supply value [default: 1e-10].
    #[arg(long)]
    tolerance: Option<f64>,
    /// Normalized price at or below which a good counts as zero-priced [default: 1e-9].
    #[arg(long)]
    zero_threshold: Option<f64>,
}

impl SolveArgs {
    fn config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::default();
        if let Some(v) = self.damping {
            cfg.damping = v;
        }
        if let Some(v) = self.max_iterations {
            cfg.max_iterations = v;
        }
        if let Some(v) = self.tolerance {
            cfg.tolerance = v;
        }
        if let Some(v) = self.zero_threshold {
            cfg.zero_price_threshold = v;
        }
        cfg
    }
}

#[derive(Debug, Args)]
struct IngestCheckArgs {
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    /// Also aggregate these years against the label sets.
    #[arg(long = "year", value_name = "YEAR")]
    years: Vec<i32>,
    #[arg(long, value_name = "PATH")]
    countries: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    goods: Option<PathBuf>,
    #[arg(long)]
    lenient: bool,
    #[arg(long)]
    cents: bool,
    #[command(flatten)]
    output: OutputArgs,
}

/// A dataset the subcommands operate on.
enum Dataset {
    Instance(Instance),
    /// Printed shares of one year, possibly merged from several figures.
    Shares {
        name: String,
        report: ShareReport,
    },
}

struct Instance {
    name: String,
    year: Option<i32>,
    goods: GoodsSet,
    countries: CountrySet,
    demand: DemandMatrix,
    supply: SupplyMatrix,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOutput {
    pub dataset: String,
    pub year: Option<i32>,
    pub goods: Vec<String>,
    pub countries: Vec<String>,
    pub equilibrium: EquilibriumResult,
}

impl LongRows for SolveOutput {
    fn long_rows(&self) -> Vec<LongRow> {
        equilibrium_rows(self.year, &self.goods, &self.countries, &self.equilibrium)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportOutput {
    pub dataset: String,
    pub year: Option<i32>,
    pub goods: Vec<String>,
    pub countries: Vec<String>,
    pub equilibrium: EquilibriumResult,
    pub shares: ShareReport,
    /// Income minus expenditure at unit prices.
    pub trade_balances: Vec<f64>,
    /// Income minus expenditure at the equilibrium prices.
    pub equilibrium_trade_balances: Vec<f64>,
}

impl LongRows for ReportOutput {
    fn long_rows(&self) -> Vec<LongRow> {
        let mut rows = equilibrium_rows(self.year, &self.goods, &self.countries, &self.equilibrium);
        rows.extend(self.shares.long_rows());
        for (k, c) in self.countries.iter().enumerate() {
            rows.push(LongRow::new(
                self.year,
                c,
                "trade_balance",
                self.trade_balances[k],
            ));
            rows.push(LongRow::new(
                self.year,
                c,
                "equilibrium_trade_balance",
                self.equilibrium_trade_balances[k],
            ));
        }
        rows
    }
}

fn equilibrium_rows(
    year: Option<i32>,
    goods: &[String],
    countries: &[String],
    r: &EquilibriumResult,
) -> Vec<LongRow> {
    let mut rows = Vec::new();
    for (s, g) in goods.iter().enumerate() {
        rows.push(LongRow::new(year, g, "price", r.p0[s]));
        rows.push(LongRow::new(year, g, "excess_demand", r.excess[s]));
    }
    for (k, c) in countries.iter().enumerate() {
        rows.push(LongRow::new(year, c, "balance_ratio", r.balance_ratios[k]));
        rows.push(LongRow::new(year, c, "income", r.incomes[k]));
        rows.push(LongRow::new(year, c, "expenditure", r.expenditures[k]));
    }
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    for (metric, value) in [
        ("degeneracy", r.degeneracy as f64),
        ("recession_level_proxy", r.recession_level),
        ("complementarity_residual", r.complementarity_residual),
        ("iterations", r.iterations as f64),
        ("converged", flag(r.converged)),
    ] {
        rows.push(LongRow::new(year, "", metric, value));
    }
    rows
}

#[derive(Debug, Clone, Serialize)]
pub struct YearCheck {
    pub year: i32,
    pub aggregated: usize,
    pub skipped: usize,
    pub other_years: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct IngestSummary {
    pub records: usize,
    pub years: Vec<i32>,
    pub records_per_year: Vec<usize>,
    pub selections: Vec<YearCheck>,
}

impl LongRows for IngestSummary {
    fn long_rows(&self) -> Vec<LongRow> {
        let mut rows = vec![LongRow::new(None, "", "records", self.records as f64)];
        for (y, n) in self.years.iter().zip(&self.records_per_year) {
            rows.push(LongRow::new(Some(*y), "", "records", *n as f64));
        }
        for s in &self.selections {
            rows.push(LongRow::new(
                Some(s.year),
                "",
                "aggregated",
                s.aggregated as f64,
            ));
            rows.push(LongRow::new(Some(s.year), "", "skipped", s.skipped as f64));
        }
        rows
    }
}

fn flow_format(cents: bool) -> FlowFormat {
    FlowFormat {
        unit: if cents {
            ValueUnit::Cents
        } else {
            ValueUnit::Usd
        },
    }
}

fn label_sets(
    countries: &Option<PathBuf>,
    goods: &Option<PathBuf>,
) -> Result<(CountrySet, GoodsSet), Error> {
    let c = match countries {
        Some(p) => read_country_set(p)?,
        None => CountrySet::standard(),
    };
    let g = match goods {
        Some(p) => read_goods_set(p)?,
        None => GoodsSet::standard(),
    };
    Ok((c, g))
}

fn label_mode(lenient: bool) -> LabelMode {
    if lenient {
        LabelMode::Lenient
    } else {
        LabelMode::Strict
    }
}

fn load_datasets(args: &InputArgs, warn: &mut dyn Write) -> Result<Vec<Dataset>, Error> {
    if let Some(path) = &args.input {
        if args.years.is_empty() {
            return Err(Error::Usage("`--input` needs at least one `--year`".into()));
        }
        let records = read_flows_file(path, flow_format(args.cents))?;
        let (countries, goods) = label_sets(&args.countries, &args.goods)?;
        let mut years = args.years.clone();
        years.sort_unstable();
        years.dedup();
        let mut out = Vec::with_capacity(years.len());
        for year in years {
            let agg = aggregate(&records, &countries, &goods, year, label_mode(args.lenient))?;
            if agg.skipped > 0 {
                writeln!(
                    warn,
                    "warning: {year}: skipped {} record(s) with unknown labels",
                    agg.skipped
                )?;
            }
            out.push(Dataset::Instance(Instance {
                name: path.display().to_string(),
                year: Some(year),
                demand: build_demand_matrix(&agg.tensors),
                supply: build_supply_matrix(&agg.tensors),
                goods: goods.clone(),
                countries: countries.clone(),
            }));
        }
        return Ok(out);
    }

    if !args.years.is_empty() || args.countries.is_some() || args.goods.is_some() {
        return Err(Error::Usage(
            "`--year`, `--countries` and `--goods` apply to `--input` only".into(),
        ));
    }
    let mut out = Vec::new();
    let mut by_year: BTreeMap<i32, (Vec<String>, ShareReport)> = BTreeMap::new();
    for name in &args.fixtures {
        match load_fixture(name)? {
            Fixture::Instance(i) => out.push(Dataset::Instance(Instance {
                name: i.name,
                year: None,
                goods: i.goods,
                countries: i.countries,
                demand: i.demand,
                supply: i.supply,
            })),
            Fixture::Caption(c) => {
                let part = c.share_report()?;
                let (names, report) = by_year.entry(c.year).or_insert_with(|| {
                    (
                        Vec::new(),
                        ShareReport {
                            year: Some(c.year),
                            ..ShareReport::default()
                        },
                    )
                });
                if !report.metric(c.metric).is_empty() {
                    return Err(Error::Usage(format!(
                        "fixtures `{}` and `{}` both give {} for {}",
                        names.join("+"),
                        c.name,
                        c.metric.name(),
                        c.year
                    )));
                }
                *report.metric_mut(c.metric) = part.metric(c.metric).to_vec();
                names.push(c.name);
            }
        }
    }
    out.extend(
        by_year
            .into_values()
            .map(|(names, report)| Dataset::Shares {
                name: names.join("+"),
                report,
            }),
    );
    Ok(out)
}

fn instances(datasets: Vec<Dataset>, command: &str) -> Result<Vec<Instance>, Error> {
    datasets
        .into_iter()
        .map(|d| match d {
            Dataset::Instance(i) => Ok(i),
            Dataset::Shares { name, .. } => Err(Error::Usage(format!(
                "`{command}` needs trade matrices, but `{name}` only carries published shares"
            ))),
        })
        .collect()
}

/// Solves every instance, concurrently when there are several. Results keep
/// input order.
fn solve_all(instances: &[Instance], cfg: &SolverConfig) -> Result<Vec<EquilibriumResult>, Error> {
    cfg.validate()?;
    let results: Vec<_> = if instances.len() == 1 {
        vec![solve_relative_prices(
            &instances[0].demand,
            &instances[0].supply,
            cfg,
        )]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = instances
                .iter()
                .map(|i| scope.spawn(move || solve_relative_prices(&i.demand, &i.supply, cfg)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("solver thread panicked"))
                .collect()
        })
    };
    results
        .into_iter()
        .map(|r| r.map_err(Error::from))
        .collect()
}

fn warn_unconverged(
    instances: &[Instance],
    results: &[EquilibriumResult],
    warn: &mut dyn Write,
) -> Result<(), Error> {
    for (i, r) in instances.iter().zip(results) {
        if !r.converged {
            writeln!(
                warn,
                "warning: {}{}: iteration cap reached, residual {}",
                i.name,
                i.year.map(|y| format!(" {y}")).unwrap_or_default(),
                r.complementarity_residual
            )?;
        }
    }
    Ok(())
}

fn emit<T>(value: &T, out: &OutputArgs, stdout: &mut dyn Write) -> Result<(), Error>
where
    T: Serialize + LongRows + ?Sized,
{
    match &out.output {
        Some(path) => {
            let mut f = BufWriter::new(File::create(path)?);
            emit_report(value, out.format, &mut f)?;
            f.flush()?;
        }
        None => {
            emit_report(value, out.format, &mut *stdout)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

/// Emits a single item bare and several as an array.
fn emit_many<T>(items: &[T], out: &OutputArgs, stdout: &mut dyn Write) -> Result<(), Error>
where
    T: Serialize + LongRows,
{
    match items {
        [one] => emit(one, out, stdout),
        many => emit(many, out, stdout),
    }
}

fn ingest_check(
    args: &IngestCheckArgs,
    stdout: &mut dyn Write,
    warn: &mut dyn Write,
) -> Result<(), Error> {
    let records: Vec<FlowRecord> = read_flows_file(&args.input, flow_format(args.cents))?;
    let mut per_year: BTreeMap<i32, usize> = BTreeMap::new();
    for r in &records {
        *per_year.entry(r.year).or_default() += 1;
    }
    let mut selections = Vec::new();
    if !args.years.is_empty() {
        let (countries, goods) = label_sets(&args.countries, &args.goods)?;
        let mut years = args.years.clone();
        years.sort_unstable();
        years.dedup();
        for year in years {
            let agg = aggregate(&records, &countries, &goods, year, label_mode(args.lenient))?;
            if agg.skipped > 0 {
                writeln!(
                    warn,
                    "warning: {year}: skipped {} record(s) with unknown labels",
                    agg.skipped
                )?;
            }
            selections.push(YearCheck {
                year,
                aggregated: agg.aggregated,
                skipped: agg.skipped,
                other_years: agg.other_years,
            });
        }
    }
    let summary = IngestSummary {
        records: records.len(),
        years: per_year.keys().copied().collect(),
        records_per_year: per_year.values().copied().collect(),
        selections,
    };
    emit(&summary, &args.output, stdout)
}

fn solve(args: &SolveArgs, stdout: &mut dyn Write, warn: &mut dyn Write) -> Result<(), Error> {
    let instances = instances(load_datasets(&args.input, warn)?, "solve")?;
    let results = solve_all(&instances, &args.config())?;
    warn_unconverged(&instances, &results, warn)?;
    let outputs: Vec<SolveOutput> = instances
        .into_iter()
        .zip(results)
        .map(|(i, r)| SolveOutput {
            dataset: i.name,
            year: i.year,
            goods: i.goods.labels().to_vec(),
            countries: i.countries.labels().to_vec(),
            equilibrium: r,
        })
        .collect();
    emit_many(&outputs, &args.output, stdout)
}

fn report(args: &SolveArgs, stdout: &mut dyn Write, warn: &mut dyn Write) -> Result<(), Error> {
    let instances = instances(load_datasets(&args.input, warn)?, "report")?;
    let results = solve_all(&instances, &args.config())?;
    warn_unconverged(&instances, &results, warn)?;
    let mut outputs = Vec::with_capacity(instances.len());
    for (i, r) in instances.into_iter().zip(results) {
        let shares = share_report(i.year, &i.countries, &i.goods, &i.demand, &i.supply)?;
        let unit = trade_balances(&i.demand, &i.supply, &PriceVector::ones(i.goods.len()))?;
        let at_eq = trade_balances(&i.demand, &i.supply, &r.prices())?;
        outputs.push(ReportOutput {
            dataset: i.name,
            year: i.year,
            goods: i.goods.labels().to_vec(),
            countries: i.countries.labels().to_vec(),
            equilibrium: r,
            shares,
            trade_balances: unit,
            equilibrium_trade_balances: at_eq,
        });
    }
    emit_many(&outputs, &args.output, stdout)
}

fn share_reports(args: &InputArgs, warn: &mut dyn Write) -> Result<Vec<ShareReport>, Error> {
    load_datasets(args, warn)?
        .into_iter()
        .map(|d| match d {
            Dataset::Instance(i) => Ok(share_report(
                i.year,
                &i.countries,
                &i.goods,
                &i.demand,
                &i.supply,
            )?),
            Dataset::Shares { report, .. } => Ok(report),
        })
        .collect()
}

fn shares(args: &CommonArgs, stdout: &mut dyn Write, warn: &mut dyn Write) -> Result<(), Error> {
    let reports = share_reports(&args.input, warn)?;
    emit_many(&reports, &args.output, stdout)
}

fn dynamics(args: &CommonArgs, stdout: &mut dyn Write, warn: &mut dyn Write) -> Result<(), Error> {
    let reports = share_reports(&args.input, warn)?;
    if reports.len() < 2 {
        return Err(Error::Usage(
            "`dynamics` needs at least two years or datasets".into(),
        ));
    }
    let d = share_dynamics(&reports)?;
    emit(&d, &args.output, stdout)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) => 2,
        _ => 1,
    }
}

/// Runs the program on `args` (including the program name). Never panics on
/// bad input; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(text.as_bytes());
            let _ = sink.flush();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::IngestCheck(a) => ingest_check(a, stdout, stderr),
        Command::Solve(a) => solve(a, stdout, stderr),
        Command::Shares(a) => shares(a, stdout, stderr),
        Command::Dynamics(a) => dynamics(a, stdout, stderr),
        Command::Report(a) => report(a, stdout, stderr),
    };
    match outcome {
        Ok(()) => 0,
        // closed downstream pipe, e.g. `| head`
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("tradeq").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn caption_shares_csv() {
        let (code, out, _) = run_str(&["shares", "--fixture", "fig1_2020", "--format", "csv"]);
        assert_eq!(code, 0);
        assert!(
            out.lines()
                .any(|l| l == "2020,China,country_supply_share,0.28"),
            "{out}"
        );
    }

    #[test]
    fn solve_degenerate_fixture() {
        let (code, out, _) = run_str(&["solve", "--fixture", "degenerate_2x2"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["equilibrium"]["degeneracy"], 1);
        assert_eq!(v["equilibrium"]["p0"][1], 0.0);
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_str(&["solve"]).0, 2);
        assert_eq!(run_str(&["solve", "--fixture", "fig1_2020"]).0, 2);
        assert_eq!(run_str(&["bogus"]).0, 2);
        assert_eq!(run_str(&["dynamics", "--fixture", "fig1_2020"]).0, 2);
    }

    #[test]
    fn domain_errors_exit_one() {
        let (code, _, err) = run_str(&["solve", "--fixture", "nope"]);
        assert_eq!(code, 1);
        assert!(err.contains("unknown fixture"));
    }

    #[test]
    fn same_year_figures_merge() {
        let (code, out, _) =
            run_str(&["shares", "--fixture", "fig1_2020", "--fixture", "fig4_2020"]);
        assert_eq!(code, 0, "{out}");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["year"], 2020);
    }
}
