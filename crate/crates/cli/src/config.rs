//! Run configuration. Values come from command-line flags, then a flat JSON
//! config file, then built-in defaults, in that order of precedence.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use qfi_radar::gaussian::TraceConvention;
use qfi_radar::kinematics::{ParameterPair, Strategy};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Multibody,
    MovingObject,
}

/// Flags shared by every subcommand. All are optional so that unset flags
/// fall through to the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat JSON config file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa_max: Option<f64>,
    #[arg(long)]
    pub kappa_step: Option<f64>,
    /// Photon bandwidth.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// entangled, single_photon, quantum_illumination or `all`; comma separated.
    #[arg(long)]
    pub strategy: Option<String>,
    /// A, B or `both`.
    #[arg(long)]
    pub pair: Option<String>,
    /// Samples or shots.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Output formats, comma separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub format: Option<Vec<Format>>,
}

/// Keys accepted in the config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub kappa_min: Option<f64>,
    pub kappa_max: Option<f64>,
    pub kappa_step: Option<f64>,
    pub sigma: Option<f64>,
    pub strategy: Option<String>,
    pub pair: Option<String>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Vec<Format>>,
    pub convention: Option<String>,
    pub t_minus: Option<f64>,
    pub omega_minus: Option<f64>,
    pub scenario: Option<ScenarioKind>,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub v1: Option<f64>,
    pub v2: Option<f64>,
    pub range: Option<f64>,
    pub size: Option<f64>,
    pub velocity: Option<f64>,
    pub c: Option<f64>,
    pub omega0: Option<f64>,
    pub sigma0: Option<f64>,
    pub kappa: Option<f64>,
    pub time_fraction: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl KappaGrid {
    pub fn validate(&self) -> Result<(), CliError> {
        let inside = |k: f64| k > -1.0 && k < 1.0;
        if !inside(self.min) || !inside(self.max) {
            return Err(CliError::Usage(format!("kappa grid [{}, {}] must lie inside (-1, 1)", self.min, self.max)));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(CliError::Usage(format!("kappa step must be positive, got {}", self.step)));
        }
        if self.min > self.max {
            return Err(CliError::Usage(format!("empty kappa grid: min {} exceeds max {}", self.min, self.max)));
        }
        Ok(())
    }

    /// `min, min + step, …` up to `max`, rounded to 12 decimals so that
    /// nominal grid points such as 0 come out exact.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| round12(self.min + i as f64 * self.step)).collect()
    }
}

fn round12(x: f64) -> f64 {
    let r = (x * 1e12).round() / 1e12;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: KappaGrid,
    pub sigma: f64,
    pub strategies: Vec<Strategy>,
    pub pairs: Vec<ParameterPair>,
    pub n: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,
    pub formats: Vec<Format>,
    /// Mixture normalisation; `None` counts photons for the single-photon
    /// mixture and normalises the illumination state.
    pub convention: Option<TraceConvention>,
    /// Branch separation for mixed strategies in the QFI table; `None` puts
    /// the branches in the orthogonal regime.
    pub t_minus: Option<f64>,
    pub omega_minus: f64,
    pub scenario: ScenarioKind,
    pub r1: f64,
    pub r2: f64,
    pub v1: f64,
    pub v2: f64,
    pub range: f64,
    pub size: f64,
    pub velocity: f64,
    pub c: f64,
    pub omega0: f64,
    pub sigma0: f64,
    pub kappa: Option<f64>,
    pub time_fraction: f64,
}

pub const DEFAULT_SEED: u64 = 20_240_517;

fn parse_strategies(s: &str) -> Result<Vec<Strategy>, CliError> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(Strategy::ALL.to_vec());
    }
    s.split(',')
        .map(|x| Strategy::from_name(x.trim()).ok_or_else(|| CliError::Usage(format!("unknown strategy `{x}`"))))
        .collect()
}

fn parse_pairs(s: &str) -> Result<Vec<ParameterPair>, CliError> {
    if s.eq_ignore_ascii_case("both") {
        return Ok(vec![ParameterPair::TimeSumFreqDiff, ParameterPair::TimeDiffFreqSum]);
    }
    s.split(',')
        .map(|x| ParameterPair::from_name(x.trim()).ok_or_else(|| CliError::Usage(format!("unknown pair `{x}`"))))
        .collect()
}

fn parse_convention(s: &str) -> Result<TraceConvention, CliError> {
    match s {
        "normalized" => Ok(TraceConvention::Normalized),
        "photon_counted" => Ok(TraceConvention::PhotonCounted),
        _ => Err(CliError::Usage(format!("unknown convention `{s}`"))),
    }
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let grid = KappaGrid {
            min: args.kappa_min.or(file.kappa_min).unwrap_or(-0.95),
            max: args.kappa_max.or(file.kappa_max).unwrap_or(0.95),
            step: args.kappa_step.or(file.kappa_step).unwrap_or(0.05),
        };
        grid.validate()?;
        let strategies = parse_strategies(args.strategy.as_deref().or(file.strategy.as_deref()).unwrap_or("all"))?;
        let pairs = parse_pairs(args.pair.as_deref().or(file.pair.as_deref()).unwrap_or("both"))?;
        let sigma = args.sigma.or(file.sigma).unwrap_or(1.0);
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(CliError::Usage(format!("sigma must be positive, got {sigma}")));
        }
        let convention = file.convention.as_deref().map(parse_convention).transpose()?;
        let time_fraction = file.time_fraction.unwrap_or(0.5);
        if !(time_fraction > 0.0 && time_fraction < 1.0) {
            return Err(CliError::Usage(format!("time_fraction must lie in (0, 1), got {time_fraction}")));
        }
        Ok(Self {
            grid,
            sigma,
            strategies,
            pairs,
            n: args.n.or(file.n),
            seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            formats: args.format.clone().or(file.format).unwrap_or_else(|| vec![Format::Csv]),
            convention,
            t_minus: file.t_minus,
            omega_minus: file.omega_minus.unwrap_or(0.0),
            scenario: file.scenario.unwrap_or(ScenarioKind::Multibody),
            r1: file.r1.unwrap_or(300.0),
            r2: file.r2.unwrap_or(500.0),
            v1: file.v1.unwrap_or(0.0),
            v2: file.v2.unwrap_or(0.0),
            range: file.range.unwrap_or(10.0),
            size: file.size.unwrap_or(1.0),
            velocity: file.velocity.unwrap_or(1.0 / 3.0),
            c: file.c.unwrap_or(1.0),
            omega0: file.omega0.unwrap_or(10.0),
            sigma0: file.sigma0.unwrap_or(1.0),
            kappa: file.kappa,
            time_fraction,
        })
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    /// Rejects formats a command cannot produce.
    pub fn only_formats(&self, allowed: &[Format], command: &str) -> Result<(), CliError> {
        match self.formats.iter().find(|f| !allowed.contains(f)) {
            Some(f) => Err(CliError::Usage(format!("{command} cannot write {f:?} output"))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points() {
        let g = KappaGrid { min: -0.95, max: 0.95, step: 0.05 };
        let p = g.points();
        assert_eq!(p.len(), 39);
        assert_eq!(p[19], 0.0);
        assert_eq!(p[0], -0.95);
        assert_eq!(p[38], 0.95);
        assert_eq!(KappaGrid { min: 0.5, max: 0.5, step: 0.1 }.points(), vec![0.5]);
    }

    #[test]
    fn grid_validation() {
        assert!(KappaGrid { min: 0.5, max: 0.4, step: 0.1 }.validate().is_err());
        assert!(KappaGrid { min: -1.0, max: 0.4, step: 0.1 }.validate().is_err());
        assert!(KappaGrid { min: 0.0, max: 0.4, step: 0.0 }.validate().is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"sigma": 2.0, "seed": 5, "kappa_min": -0.5}"#).unwrap();
        let args = CommonArgs { config: Some(path), seed: Some(9), ..Default::default() };
        let c = RunConfig::resolve(&args).unwrap();
        assert_eq!((c.sigma, c.seed, c.grid.min, c.grid.max), (2.0, 9, -0.5, 0.95));
    }

    #[test]
    fn unknown_config_key_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"sigmaa": 2.0}"#).unwrap();
        let args = CommonArgs { config: Some(path), ..Default::default() };
        assert!(matches!(RunConfig::resolve(&args), Err(CliError::Usage(_))));
    }

    #[test]
    fn names() {
        assert_eq!(parse_strategies("all").unwrap().len(), 3);
        assert_eq!(parse_pairs("A").unwrap(), vec![ParameterPair::TimeSumFreqDiff]);
        assert!(parse_pairs("C").is_err());
    }
}
