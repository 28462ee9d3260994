use std::io::Write;

use qfi_radar::acceptance::{run_acceptance, AcceptanceOptions};
use qfi_radar::analytic::{bound_value, qfi_entangled, QfiResult};
use qfi_radar::gaussian::{GaussianBiphoton, MixedPoint, TraceConvention};
use qfi_radar::kinematics::{ParameterPair, PhysicalConstants, ProbeConfig, Strategy, Target};
use qfi_radar::montecarlo::{run_pair, run_scenario, McReport, Scenario};
use qfi_radar::oracle::{qfi_numeric, OracleSettings};
use qfi_radar::verdict::{adjudicate, AdjudicationGrid, VerdictSummary};

use crate::config::{Format, RunConfig, ScenarioKind};
use crate::error::CliError;
use crate::output::{ensure_dir, write_file, write_table, Cell, Table};
use crate::svg::{render, Panel, Series};

/// Separation, in units of `1/σ`, that puts mixed-strategy branches in the
/// orthogonal regime.
const ORTHOGONAL_T_MINUS: f64 = 50.0;
const SIMULATE_DEFAULT_N: usize = 100_000;
const SCENARIO_DEFAULT_N: usize = 10_000;
const SATURATION_TOL: f64 = 0.03;
const BIAS_Z: f64 = 5.0;

fn report_written(paths: &[std::path::PathBuf]) {
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
}

fn qfi_row(cfg: &RunConfig, strategy: Strategy, pair: ParameterPair, kappa: f64) -> Result<QfiResult, CliError> {
    let settings = OracleSettings::default();
    let convention = cfg.convention.unwrap_or(match strategy {
        Strategy::QuantumIllumination => TraceConvention::Normalized,
        _ => TraceConvention::PhotonCounted,
    });
    let point = MixedPoint {
        sigma: cfg.sigma,
        kappa,
        t_minus: cfg.t_minus.unwrap_or(ORTHOGONAL_T_MINUS / cfg.sigma),
        omega_minus: cfg.omega_minus,
    };
    Ok(match strategy {
        Strategy::EntangledBiphoton => {
            let (numeric, _) = qfi_numeric(strategy, &point, pair, convention, &settings)?;
            let q = qfi_entangled(cfg.sigma, cfg.sigma, kappa, pair)?;
            QfiResult { compat_residual: numeric.compat_residual, ..q }
        }
        _ => qfi_numeric(strategy, &point, pair, convention, &settings)?.0,
    })
}

pub fn cmd_qfi(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.only_formats(&[Format::Csv, Format::Json], "qfi")?;
    let mut table = Table::new(&["strategy", "pair", "kappa", "sigma", "H11", "H22", "bound", "residual"]);
    for &strategy in &cfg.strategies {
        for &pair in &cfg.pairs {
            for kappa in cfg.grid.points() {
                let q = qfi_row(cfg, strategy, pair, kappa)?;
                table.push(vec![
                    strategy.name().into(),
                    pair.name().into(),
                    kappa.into(),
                    cfg.sigma.into(),
                    q.h[0][0].into(),
                    q.h[1][1].into(),
                    q.bound_product.into(),
                    q.compat_residual.into(),
                ]);
            }
        }
    }
    report_written(&write_table(cfg, "qfi", &table)?);
    Ok(())
}

/// Grid points plus the `|κ| = √3/2` crossings that fall inside the range.
fn curve_kappas(cfg: &RunConfig) -> Vec<f64> {
    let r = 3f64.sqrt() / 2.0;
    let mut k = cfg.grid.points();
    for c in [-r, r] {
        if c >= cfg.grid.min && c <= cfg.grid.max && !k.iter().any(|&x| (x - c).abs() < 1e-12) {
            k.push(c);
        }
    }
    k.sort_by(f64::total_cmp);
    k
}

pub fn cmd_curves(cfg: &RunConfig) -> Result<(), CliError> {
    let kappas = curve_kappas(cfg);
    let mut table = Table::new(&["pair", "kappa", "entangled", "single_photon", "quantum_illumination"]);
    let mut panels = Vec::new();
    for &pair in &cfg.pairs {
        let mut series: Vec<Series> =
            Strategy::ALL.iter().map(|s| Series { label: s.name().to_string(), points: Vec::new() }).collect();
        for &k in &kappas {
            let mut row: Vec<Cell> = vec![pair.name().into(), k.into()];
            for (i, &s) in Strategy::ALL.iter().enumerate() {
                let b = bound_value(s, pair, k)?;
                series[i].points.push((k, b));
                row.push(b.into());
            }
            table.push(row);
        }
        panels.push(Panel {
            title: format!("pair {}", pair.name()),
            x_label: "kappa".to_string(),
            y_label: "minimum uncertainty product".to_string(),
            series,
        });
    }
    let mut written = write_table(cfg, "curves", &table)?;
    if cfg.wants(Format::Svg) {
        let p = cfg.out.join("curves.svg");
        write_file(&p, &render(&panels))?;
        written.push(p);
    }
    report_written(&written);
    Ok(())
}

pub fn cmd_oracle(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.only_formats(&[Format::Csv, Format::Json], "oracle-check")?;
    let grid = AdjudicationGrid {
        strategies: cfg.strategies.clone(),
        pairs: cfg.pairs.clone(),
        ..AdjudicationGrid::default()
    };
    let records = adjudicate(&grid, &OracleSettings::default());
    let mut table = Table::new(&[
        "strategy",
        "pair",
        "params",
        "paper_value",
        "oracle_value",
        "rel_diff",
        "verdict",
        "pure_path_gap",
    ]);
    for r in &records {
        table.push(vec![
            r.strategy.as_str().into(),
            r.pair.as_str().into(),
            r.params.as_str().into(),
            r.paper_value.into(),
            r.oracle_value.into(),
            r.rel_diff.into(),
            r.verdict.name().into(),
            r.pure_path_gap.into(),
        ]);
    }
    report_written(&write_table(cfg, "verdicts", &table)?);
    let s = VerdictSummary::of(&records);
    println!(
        "{} rows: {} confirmed, {} refuted, {} undefined, {} oracle failures",
        records.len(),
        s.confirmed,
        s.refuted,
        s.undefined,
        s.oracle_failures
    );
    Ok(())
}

fn sampled_strategies(cfg: &RunConfig) -> Result<Vec<Strategy>, CliError> {
    let s: Vec<Strategy> = cfg.strategies.iter().copied().filter(|&s| s != Strategy::QuantumIllumination).collect();
    if s.is_empty() {
        return Err(CliError::Usage("quantum illumination is not sampled; choose entangled or single_photon".into()));
    }
    Ok(s)
}

/// Saturation holds when the ratio is within 3% of one or its χ² interval
/// covers one, and the mean is unbiased within five standard errors.
fn saturates(r: &McReport) -> bool {
    let ratio_ok = (r.ratio - 1.0).abs() <= SATURATION_TOL || (r.ratio_low <= 1.0 && 1.0 <= r.ratio_high);
    ratio_ok && r.bias_z.abs() <= BIAS_Z
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.only_formats(&[Format::Csv, Format::Json], "simulate")?;
    let n = cfg.n.unwrap_or(SIMULATE_DEFAULT_N);
    if n < 2 {
        return Err(CliError::Usage(format!("simulate needs at least 2 samples, got {n}")));
    }
    let mut table = Table::new(&[
        "strategy",
        "pair",
        "kappa",
        "sigma",
        "domain",
        "quantity",
        "n",
        "truth",
        "estimate",
        "standard_error",
        "bias_z",
        "variance",
        "qcrb_variance",
        "ratio",
        "ratio_low",
        "ratio_high",
        "product_ratio",
        "pass",
    ]);
    let mut failures = Vec::new();
    for strategy in sampled_strategies(cfg)? {
        for &pair in &cfg.pairs {
            for kappa in cfg.grid.points() {
                let state = GaussianBiphoton::new(0.0, 0.0, 0.0, 0.0, cfg.sigma, cfg.sigma, kappa)?;
                let (t, f, p) = run_pair(&state, pair, strategy, n, cfg.seed)?;
                for r in [&t, &f] {
                    let pass = saturates(r);
                    if !pass {
                        failures.push(format!(
                            "{} {} kappa={kappa} {}: ratio {} [{}, {}], bias z {}",
                            strategy.name(),
                            pair.name(),
                            r.quantity,
                            r.ratio,
                            r.ratio_low,
                            r.ratio_high,
                            r.bias_z
                        ));
                    }
                    table.push(vec![
                        strategy.name().into(),
                        pair.name().into(),
                        kappa.into(),
                        cfg.sigma.into(),
                        r.domain.name().into(),
                        r.quantity.as_str().into(),
                        r.n.into(),
                        r.truth.into(),
                        r.estimate.into(),
                        r.standard_error.into(),
                        r.bias_z.into(),
                        r.variance.into(),
                        r.qcrb_variance.into(),
                        r.ratio.into(),
                        r.ratio_low.into(),
                        r.ratio_high.into(),
                        p.ratio.into(),
                        pass.into(),
                    ]);
                }
            }
        }
    }
    report_written(&write_table(cfg, "simulate", &table)?);
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(format!("saturation check failed:\n  {}", failures.join("\n  "))))
    }
}

pub fn cmd_scenario(cfg: &RunConfig, kind: Option<ScenarioKind>) -> Result<(), CliError> {
    cfg.only_formats(&[Format::Csv, Format::Json], "scenario")?;
    let kind = kind.unwrap_or(cfg.scenario);
    let consts = PhysicalConstants::new(cfg.c)?;
    let (scenario, default_kappa) = match kind {
        ScenarioKind::Multibody => {
            (Scenario::Multibody { targets: [Target::new(cfg.r1, cfg.v1), Target::new(cfg.r2, cfg.v2)] }, -0.9)
        }
        ScenarioKind::MovingObject => {
            (Scenario::MovingObject { range: cfg.range, size: cfg.size, velocity: cfg.velocity }, 0.9)
        }
    };
    let n = cfg.n.unwrap_or(SCENARIO_DEFAULT_N);
    let mut table = Table::new(&[
        "scenario",
        "strategy",
        "quantity",
        "truth",
        "estimate",
        "standard_error",
        "predicted_error",
        "z",
    ]);
    for strategy in sampled_strategies(cfg)? {
        let probe =
            ProbeConfig { omega0: cfg.omega0, sigma0: cfg.sigma0, kappa: cfg.kappa.unwrap_or(default_kappa), strategy };
        let report = run_scenario(&scenario, &probe, &consts, n, cfg.seed, cfg.time_fraction)?;
        for q in &report.estimates {
            println!(
                "{} {} {}: {} +/- {} (truth {}, predicted {})",
                report.scenario,
                strategy.name(),
                q.name,
                q.estimate,
                q.standard_error,
                q.truth,
                q.predicted_error
            );
            table.push(vec![
                report.scenario.as_str().into(),
                strategy.name().into(),
                q.name.as_str().into(),
                q.truth.into(),
                q.estimate.into(),
                q.standard_error.into(),
                q.predicted_error.into(),
                q.z.into(),
            ]);
        }
    }
    report_written(&write_table(cfg, "scenario", &table)?);
    Ok(())
}

/// Runs the acceptance suite. The verdict file is written only when an
/// output directory was requested.
pub fn cmd_selftest(json: bool, corrupt_constant: f64, out: Option<&std::path::Path>) -> Result<(), CliError> {
    let report = run_acceptance(&AcceptanceOptions { corrupt_constant });
    // a closed pipe on stdout must not turn a pass into a panic
    let mut stdout = std::io::stdout().lock();
    if json {
        let text = serde_json::to_string(&report).map_err(|e| CliError::Io(e.to_string()))?;
        let _ = writeln!(stdout, "{text}");
    } else {
        for c in &report.criteria {
            let _ = writeln!(stdout, "{}", c.line());
        }
    }
    drop(stdout);
    if let Some(dir) = out {
        ensure_dir(dir)?;
        let p = dir.join("verdicts.csv");
        write_file(&p, &qfi_radar::verdict::verdicts_csv(&report.verdicts))?;
        eprintln!("wrote {}", p.display());
    }
    if report.passed() {
        Ok(())
    } else {
        let manifest: Vec<String> = report.failures().iter().map(|c| c.line()).collect();
        Err(CliError::Check(format!("selftest failed:\n  {}", manifest.join("\n  "))))
    }
}
