use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mfdr::sim::ScenarioName;
use mfdr::{FdrMethod, Family, LambdaRule};

#[derive(Debug, Parser)]
#[command(name = "mfdr", version, about = "Lasso paths with local marginal false discovery rates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the lasso path and write coefficients on the original scale.
    Fit(FitArgs),
    /// Cross-validate the path and report λ_CV and λ_1SE.
    Cv(CvArgs),
    /// Local mfdr of every feature at one λ.
    Mfdr(MfdrArgs),
    /// Univariate-regression fdr baseline.
    Univariate(UnivariateArgs),
    /// z and mfdr of every feature at every grid point, in long format.
    PathExport(PathExportArgs),
    /// Run a simulation study or the oracle mFdr check.
    Simulate(SimulateArgs),
}

/// Where the data comes from and how to read it.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with a header row; every non-response column is a feature.
    pub input: PathBuf,
    #[arg(long)]
    pub family: Family,
    /// Response column (linear and logistic).
    #[arg(long)]
    pub response: Option<String>,
    /// Follow-up time column (cox).
    #[arg(long)]
    pub time: Option<String>,
    /// Event indicator column, 1 = event (cox).
    #[arg(long)]
    pub status: Option<String>,
    /// Feature columns to leave unpenalized.
    #[arg(long, value_delimiter = ',')]
    pub unpenalized: Vec<String>,
}

#[derive(Debug, Args)]
pub struct CvOpts {
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct OutOpts {
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format; inferred from the --out extension, csv by default.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl OutOpts {
    pub fn format(&self) -> Format {
        self.format.unwrap_or_else(|| match self.out.as_ref().and_then(|p| p.extension()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct TableOpts {
    #[arg(long, default_value = "mixture")]
    pub estimator: FdrMethod,
    /// Keep only rows with mfdr below this value.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Keep only the first k rows.
    #[arg(long)]
    pub top: Option<usize>,
    /// Write (z, f̂(z), φ(z)) on a 512-point grid to this file.
    #[arg(long)]
    pub density_export: Option<PathBuf>,
}

/// `cv`, `1se` or a positive number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaChoice {
    Rule(LambdaRule),
    Value(f64),
}

impl FromStr for LambdaChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(rule) = s.parse::<LambdaRule>() {
            return Ok(LambdaChoice::Rule(rule));
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(LambdaChoice::Value(v)),
            _ => Err(format!("expected 'cv', '1se' or a positive number, got '{s}'")),
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Report a single λ instead of the whole path.
    #[arg(long)]
    pub lambda: Option<LambdaChoice>,
    #[command(flatten)]
    pub cv: CvOpts,
    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub cv: CvOpts,
    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Debug, Args)]
pub struct MfdrArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "cv")]
    pub lambda: LambdaChoice,
    /// Keep only features in the lasso model.
    #[arg(long)]
    pub selected: bool,
    #[command(flatten)]
    pub table: TableOpts,
    #[command(flatten)]
    pub cv: CvOpts,
    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Debug, Args)]
pub struct UnivariateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub table: TableOpts,
    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Debug, Args)]
pub struct PathExportArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "mixture")]
    pub estimator: FdrMethod,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Study {
    /// Replicated calibration, power and AUC study.
    Scenario,
    /// Average oracle mfdr of the selections against their null fraction.
    Oracle,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(value_enum, default_value = "scenario")]
    pub study: Study,
    /// `key = value` settings file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub scenario: Option<ScenarioName>,
    #[arg(long)]
    pub family: Option<Family>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub estimator: Option<FdrMethod>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Oracle check: number of features.
    #[arg(long, default_value_t = 100)]
    pub p: usize,
    /// Oracle check: null proportion.
    #[arg(long, default_value_t = 0.8)]
    pub pi0: f64,
    /// Oracle check: noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Oracle check: standard deviation of non-null effects.
    #[arg(long, default_value_t = 0.5)]
    pub effect_sd: f64,
    /// Oracle check: penalty.
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    /// JSON report path; the scenario study also writes
    /// `<stem>_calibration.csv`, `<stem>_curve.csv` and `<stem>_summary.csv`
    /// beside it. Stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn lambda_choice_parsing() {
        assert_eq!("cv".parse::<LambdaChoice>().unwrap(), LambdaChoice::Rule(LambdaRule::Cv));
        assert_eq!("1SE".parse::<LambdaChoice>().unwrap(), LambdaChoice::Rule(LambdaRule::OneSe));
        assert_eq!("0.25".parse::<LambdaChoice>().unwrap(), LambdaChoice::Value(0.25));
        assert!("0".parse::<LambdaChoice>().is_err());
        assert!("-1".parse::<LambdaChoice>().is_err());
        assert!("inf".parse::<LambdaChoice>().is_err());
    }

    #[test]
    fn format_follows_extension() {
        let o = OutOpts { out: Some("a/b.JSON".into()), format: None };
        assert_eq!(o.format(), Format::Json);
        let o = OutOpts { out: Some("b.json".into()), format: Some(Format::Csv) };
        assert_eq!(o.format(), Format::Csv);
        assert_eq!(OutOpts { out: None, format: None }.format(), Format::Csv);
    }
}
