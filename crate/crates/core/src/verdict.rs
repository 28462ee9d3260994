//! Adjudication of printed QFI expressions against the oracle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{printed_illumination, printed_single_photon, qfi_entangled, rel_diff, CONFIRM_TOL};
use crate::gaussian::{GaussianBiphoton, MixedPoint, TraceConvention};
use crate::kinematics::{ParameterPair, Strategy};
use crate::oracle::{qfi_numeric, qfi_numeric_biphoton, OracleSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Confirmed,
    Refuted,
    /// The printed expression has no value at this point.
    Undefined,
    OracleFailure,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Confirmed => "confirmed",
            Verdict::Refuted => "refuted",
            Verdict::Undefined => "undefined",
            Verdict::OracleFailure => "oracle_failure",
        }
    }
}

/// One printed-versus-oracle comparison of a single QFI entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub strategy: String,
    pub pair: String,
    /// `key=value;` list naming the evaluation point and matrix entry.
    pub params: String,
    pub paper_value: f64,
    pub oracle_value: f64,
    pub rel_diff: f64,
    pub verdict: Verdict,
    /// Relative gap between the SLD path and the pure-state formula, for pure probes.
    pub pure_path_gap: Option<f64>,
}

impl VerdictRecord {
    pub const CSV_HEADER: &'static str = "strategy,pair,params,paper_value,oracle_value,rel_diff,verdict,pure_path_gap";

    /// One CSV line; floats use the shortest round-trip form.
    pub fn csv_row(&self) -> String {
        let gap = self.pure_path_gap.map(|g| format!("{g:?}")).unwrap_or_default();
        format!(
            "{},{},{},{:?},{:?},{:?},{},{}",
            self.strategy,
            self.pair,
            self.params,
            self.paper_value,
            self.oracle_value,
            self.rel_diff,
            self.verdict.name(),
            gap
        )
    }
}

/// Header plus one line per record, newline terminated.
pub fn verdicts_csv(records: &[VerdictRecord]) -> String {
    let mut out = String::from(VerdictRecord::CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Evaluation points of an adjudication sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjudicationGrid {
    pub sigmas: Vec<f64>,
    /// Correlations for the entangled and illumination probes.
    pub kappas: Vec<f64>,
    /// Delay separations in units of `1/σ`.
    pub t_minus_scaled: Vec<f64>,
    /// Carrier separations in units of `σ`.
    pub omega_minus_scaled: Vec<f64>,
    pub strategies: Vec<Strategy>,
    pub pairs: Vec<ParameterPair>,
}

impl Default for AdjudicationGrid {
    fn default() -> Self {
        Self {
            sigmas: vec![0.5, 1.0, 2.0],
            kappas: vec![-0.5, 0.0, 0.5],
            t_minus_scaled: vec![0.5, 1.0, 2.0, 50.0],
            omega_minus_scaled: vec![0.0, 1.0],
            strategies: Strategy::ALL.to_vec(),
            pairs: vec![ParameterPair::TimeSumFreqDiff, ParameterPair::TimeDiffFreqSum],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictSummary {
    pub confirmed: usize,
    pub refuted: usize,
    pub undefined: usize,
    pub oracle_failures: usize,
}

impl VerdictSummary {
    pub fn of(records: &[VerdictRecord]) -> Self {
        let mut s = Self::default();
        for r in records {
            match r.verdict {
                Verdict::Confirmed => s.confirmed += 1,
                Verdict::Refuted => s.refuted += 1,
                Verdict::Undefined => s.undefined += 1,
                Verdict::OracleFailure => s.oracle_failures += 1,
            }
        }
        s
    }
}

fn judge(paper: f64, oracle: f64) -> (f64, Verdict) {
    if !paper.is_finite() {
        return (f64::NAN, Verdict::Undefined);
    }
    let d = rel_diff(paper, oracle);
    (d, if d <= CONFIRM_TOL { Verdict::Confirmed } else { Verdict::Refuted })
}

const ENTRIES: [&str; 2] = ["H11", "H22"];

#[derive(Debug, Clone)]
enum Job {
    Entangled { s1: f64, s2: f64, kappa: f64, pair: ParameterPair },
    Mixed { strategy: Strategy, point: MixedPoint, pair: ParameterPair },
}

fn jobs(grid: &AdjudicationGrid) -> Vec<Job> {
    let mut out = Vec::new();
    for &strategy in &grid.strategies {
        for &pair in &grid.pairs {
            match strategy {
                Strategy::EntangledBiphoton => {
                    for &s1 in &grid.sigmas {
                        for &s2 in &grid.sigmas {
                            for &kappa in &grid.kappas {
                                out.push(Job::Entangled { s1, s2, kappa, pair });
                            }
                        }
                    }
                }
                _ => {
                    let kappas: &[f64] = if strategy == Strategy::QuantumIllumination { &grid.kappas } else { &[0.0] };
                    for &sigma in &grid.sigmas {
                        for &kappa in kappas {
                            for &t in &grid.t_minus_scaled {
                                for &w in &grid.omega_minus_scaled {
                                    let point = MixedPoint { sigma, kappa, t_minus: t / sigma, omega_minus: w * sigma };
                                    out.push(Job::Mixed { strategy, point, pair });
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

fn run(job: &Job, settings: &OracleSettings) -> Vec<VerdictRecord> {
    match job {
        Job::Entangled { s1, s2, kappa, pair } => {
            let params = format!("sigma1={s1};sigma2={s2};kappa={kappa};");
            let paper = qfi_entangled(*s1, *s2, *kappa, *pair).map(|q| q.h);
            let oracle = GaussianBiphoton::new(0.0, 0.0, 0.0, 0.0, *s1, *s2, *kappa)
                .and_then(|st| qfi_numeric_biphoton(&st, *pair, settings));
            records(
                Strategy::EntangledBiphoton,
                *pair,
                &params,
                paper.ok().map(diag),
                oracle.map(|(q, r)| (diag(q.h), r.pure_path_gap())),
            )
        }
        Job::Mixed { strategy, point, pair } => {
            let params = format!(
                "sigma={};kappa={};t_minus={};omega_minus={};convention={};",
                point.sigma,
                point.kappa,
                point.t_minus,
                point.omega_minus,
                TraceConvention::PhotonCounted.name()
            );
            let paper = match strategy {
                Strategy::TwoSinglePhotons => {
                    printed_single_photon(point.sigma, point.t_minus, point.omega_minus, *pair)
                }
                _ => printed_illumination(point.sigma, point.kappa, point.t_minus, point.omega_minus, *pair),
            };
            let oracle = qfi_numeric(*strategy, point, *pair, TraceConvention::PhotonCounted, settings);
            records(*strategy, *pair, &params, paper.ok(), oracle.map(|(q, r)| (diag(q.h), r.pure_path_gap())))
        }
    }
}

fn diag(h: [[f64; 2]; 2]) -> [f64; 2] {
    [h[0][0], h[1][1]]
}

fn records(
    strategy: Strategy,
    pair: ParameterPair,
    params: &str,
    paper: Option<[f64; 2]>,
    oracle: crate::Result<([f64; 2], Option<f64>)>,
) -> Vec<VerdictRecord> {
    (0..2)
        .map(|i| {
            let params = format!("{params}entry={};", ENTRIES[i]);
            let paper_value = paper.map_or(f64::NAN, |p| p[i]);
            let (oracle_value, rel_diff, verdict, pure_path_gap) = match &oracle {
                Ok((h, gap)) => {
                    let (d, v) = judge(paper_value, h[i]);
                    (h[i], d, v, *gap)
                }
                Err(_) => (f64::NAN, f64::NAN, Verdict::OracleFailure, None),
            };
            VerdictRecord {
                strategy: strategy.name().to_string(),
                pair: pair.name().to_string(),
                params,
                paper_value,
                oracle_value,
                rel_diff,
                verdict,
                pure_path_gap,
            }
        })
        .collect()
}

/// Runs every comparison of the grid. Points are evaluated in parallel and
/// returned in grid order.
pub fn adjudicate(grid: &AdjudicationGrid, settings: &OracleSettings) -> Vec<VerdictRecord> {
    jobs(grid).par_iter().map(|j| run(j, settings)).collect::<Vec<_>>().into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entangled_rows_confirm() {
        let grid = AdjudicationGrid {
            strategies: vec![Strategy::EntangledBiphoton],
            sigmas: vec![0.5, 2.0],
            ..AdjudicationGrid::default()
        };
        let rows = adjudicate(&grid, &OracleSettings::default());
        assert_eq!(rows.len(), 2 * 4 * 3 * 2);
        assert!(rows.iter().all(|r| r.verdict == Verdict::Confirmed), "{rows:?}");
        assert!(rows.iter().all(|r| r.pure_path_gap.unwrap() <= 1e-9));
    }

    #[test]
    fn single_photon_time_sum_rows_confirm() {
        let grid = AdjudicationGrid {
            strategies: vec![Strategy::TwoSinglePhotons],
            pairs: vec![ParameterPair::TimeSumFreqDiff],
            ..AdjudicationGrid::default()
        };
        let rows = adjudicate(&grid, &OracleSettings::default());
        let s = VerdictSummary::of(&rows);
        assert_eq!(s.confirmed, rows.len());
    }

    #[test]
    fn undefined_printed_value() {
        let (d, v) = judge(f64::NAN, 1.0);
        assert!(d.is_nan());
        assert_eq!(v, Verdict::Undefined);
        assert_eq!(judge(1.0, 2.0).1, Verdict::Refuted);
    }

    #[test]
    fn csv_shape() {
        let grid = AdjudicationGrid {
            sigmas: vec![1.0],
            kappas: vec![0.0],
            t_minus_scaled: vec![1.0],
            omega_minus_scaled: vec![0.0],
            ..AdjudicationGrid::default()
        };
        let rows = adjudicate(&grid, &OracleSettings::default());
        let csv = verdicts_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), rows.len() + 1);
        assert!(lines.iter().all(|l| l.split(',').count() == 8));
        assert!(lines[0].starts_with("strategy,pair,params,paper_value,oracle_value,rel_diff,verdict"));
    }

    #[test]
    fn deterministic_order() {
        let grid = AdjudicationGrid { sigmas: vec![1.0], ..AdjudicationGrid::default() };
        let a = adjudicate(&grid, &OracleSettings::default());
        let b = adjudicate(&grid, &OracleSettings::default());
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}
