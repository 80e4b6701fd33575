//! Monte-Carlo sweep engine and CSV export.
//!
//! Each trial draws a fresh payload, noise and target phases from a seed
//! derived from `(master_seed, sweep point, constellation, trial)`, so
//! results do not depend on how trials are scheduled across threads.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constellation::{Constellation, MomentReport};
use crate::error::{IsacError, Result};
use crate::estimation::{
    associate, default_pencil_param, delay_to_range, estimate_matrix_pencil, estimate_periodogram,
    DelayGrid, EstimatorKind, PencilVariant, DEFAULT_OVERSAMPLING,
};
use crate::exec::{derive_seed, Execution};
use crate::receiver::{self, ReceiverKind};
use crate::sigmodel::{
    apply_channel_with, draw_symbols, OfdmConfig, Scenario, TargetSpec, SPEED_OF_LIGHT,
};
use crate::theory::{theory_points, ScenarioTemplate, SweepAxis, TheoryPoint};

pub const DEFAULT_TRIALS: usize = 1000;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverChoice {
    Mf,
    Rf,
    Both,
}

impl ReceiverChoice {
    pub fn kinds(&self) -> Vec<ReceiverKind> {
        match self {
            ReceiverChoice::Mf => vec![ReceiverKind::Mf],
            ReceiverChoice::Rf => vec![ReceiverKind::Rf],
            ReceiverChoice::Both => vec![ReceiverKind::Mf, ReceiverKind::Rf],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorChoice {
    Periodogram,
    Pencil,
}

impl From<EstimatorChoice> for EstimatorKind {
    fn from(e: EstimatorChoice) -> Self {
        match e {
            EstimatorChoice::Periodogram => EstimatorKind::Periodogram,
            EstimatorChoice::Pencil => EstimatorKind::MatrixPencil,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PencilVariantChoice {
    Tls,
    Ls,
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_oversampling() -> usize {
    DEFAULT_OVERSAMPLING
}

fn default_true() -> bool {
    true
}

fn default_constellations() -> Vec<String> {
    vec!["qpsk".to_string()]
}

/// On-disk sweep configuration: the scenario file schema plus run controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfigFile {
    pub n_subcarriers: usize,
    pub bandwidth_hz: f64,
    #[serde(default)]
    pub cp_length_s: f64,
    /// Empty means the default equal-amplitude layout.
    #[serde(default)]
    pub targets: Vec<TargetSpec>,
    #[serde(default)]
    pub snr_db: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    pub receiver: ReceiverChoice,
    pub estimator: EstimatorChoice,
    #[serde(default = "default_oversampling")]
    pub oversampling: usize,
    pub sweep: SweepAxis,
    /// Names (`qpsk`, `16qam`, ...) or constellation file paths.
    #[serde(default = "default_constellations")]
    pub constellations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pencil_param: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pencil_variant: Option<PencilVariantChoice>,
    /// Uniform random target phase per trial; otherwise the configured phases.
    #[serde(default = "default_true")]
    pub random_phase: bool,
}

/// Validated sweep configuration.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub ofdm: OfdmConfig,
    pub template: ScenarioTemplate,
    pub axis: SweepAxis,
    pub constellations: Vec<Constellation>,
    pub receivers: Vec<ReceiverKind>,
    pub estimator: EstimatorKind,
    pub trials: usize,
    pub master_seed: u64,
    pub oversampling: usize,
    pub pencil_param: usize,
    pub pencil_variant: PencilVariant,
    pub random_phase: bool,
}

impl SweepConfig {
    /// Default layout for `max_targets` equal targets at the given reference SNR.
    pub fn with_defaults(
        ofdm: OfdmConfig,
        axis: SweepAxis,
        constellations: Vec<Constellation>,
        receivers: ReceiverChoice,
        estimator: EstimatorKind,
        max_targets: usize,
        snr_db: f64,
    ) -> Result<Self> {
        let template = ScenarioTemplate::default_targets(&ofdm, max_targets, snr_db)?;
        let cfg = Self {
            pencil_param: default_pencil_param(ofdm.n_subcarriers()),
            ofdm,
            template,
            axis,
            constellations,
            receivers: receivers.kinds(),
            estimator,
            trials: DEFAULT_TRIALS,
            master_seed: 0,
            oversampling: DEFAULT_OVERSAMPLING,
            pencil_variant: PencilVariant::Tls,
            random_phase: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file_config(file: &SweepConfigFile) -> Result<Self> {
        let ofdm = OfdmConfig::new(file.n_subcarriers, file.bandwidth_hz, file.cp_length_s)?;
        let template = if file.targets.is_empty() {
            let count = match &file.sweep {
                SweepAxis::KTargets(v) => v.iter().copied().max().unwrap_or(1),
                SweepAxis::SnrDb(_) => 3,
            };
            ScenarioTemplate::default_targets(&ofdm, count, file.snr_db)?
        } else {
            let targets = file
                .targets
                .iter()
                .map(TargetSpec::to_target)
                .collect::<Result<Vec<_>>>()?;
            ScenarioTemplate {
                targets,
                snr_db: file.snr_db,
            }
        };
        let constellations = file
            .constellations
            .iter()
            .map(|c| Constellation::from_name_or_path(c))
            .collect::<Result<Vec<_>>>()?;
        let cfg = Self {
            ofdm,
            template,
            axis: file.sweep.clone(),
            constellations,
            receivers: file.receiver.kinds(),
            estimator: file.estimator.into(),
            trials: file.trials,
            master_seed: file.seed,
            oversampling: file.oversampling,
            pencil_param: file
                .pencil_param
                .unwrap_or_else(|| default_pencil_param(file.n_subcarriers)),
            pencil_variant: match file.pencil_variant {
                Some(PencilVariantChoice::Ls) => PencilVariant::LeastSquares,
                _ => PencilVariant::Tls,
            },
            random_phase: file.random_phase,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| IsacError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: SweepConfigFile =
            serde_json::from_str(&text).map_err(|source| IsacError::Json {
                path: path.to_path_buf(),
                source,
            })?;
        Self::from_file_config(&file)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(IsacError::InvalidConfig(m));
        if self.axis.is_empty() {
            return bad("sweep axis has no values".into());
        }
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        if self.constellations.is_empty() {
            return bad("at least one constellation is required".into());
        }
        if self.oversampling == 0 {
            return bad("oversampling must be positive".into());
        }
        for i in 0..self.axis.len() {
            let sc = self.template.realize(&self.ofdm, &self.axis, i)?;
            let k = sc.targets().len();
            if self.estimator == EstimatorKind::MatrixPencil
                && (self.pencil_param < k || self.pencil_param + k > self.ofdm.n_subcarriers())
            {
                return bad(format!(
                    "pencil parameter {} invalid for K = {k}",
                    self.pencil_param
                ));
            }
        }
        for c in &self.constellations {
            c.moments()?;
        }
        Ok(())
    }
}

/// Mean squared error with a 95% normal-approximation interval on the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub mse_s2: f64,
    pub rmse_m: f64,
    pub ci_low_s2: f64,
    pub ci_high_s2: f64,
    pub ci_low_m: f64,
    pub ci_high_m: f64,
}

/// Range-domain root of a delay MSE, `(c/2) sqrt(mse)`.
pub fn mse_to_range_rmse(mse_s2: f64) -> f64 {
    delay_to_range(mse_s2.max(0.0).sqrt())
}

/// `None` when every trial failed.
pub fn aggregate_rmse(sq_errors_s2: &[f64], _failures: usize) -> Option<Aggregate> {
    if sq_errors_s2.is_empty() {
        return None;
    }
    let n = sq_errors_s2.len() as f64;
    let mse = sq_errors_s2.iter().sum::<f64>() / n;
    let half = if sq_errors_s2.len() > 1 {
        let var = sq_errors_s2.iter().map(|e| (e - mse).powi(2)).sum::<f64>() / (n - 1.0);
        Z95 * (var / n).sqrt()
    } else {
        0.0
    };
    let (lo, hi) = ((mse - half).max(0.0), mse + half);
    Some(Aggregate {
        mse_s2: mse,
        rmse_m: mse_to_range_rmse(mse),
        ci_low_s2: lo,
        ci_high_s2: hi,
        ci_low_m: mse_to_range_rmse(lo),
        ci_high_m: mse_to_range_rmse(hi),
    })
}

/// One CSV row: a (sweep point, constellation, receiver, target) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub sweep_axis: &'static str,
    pub sweep_value: f64,
    pub constellation: String,
    pub receiver: ReceiverKind,
    pub estimator: EstimatorKind,
    pub target_index: usize,
    pub trials: usize,
    pub failures: usize,
    pub stats: Option<Aggregate>,
    pub theory_mse_s2: f64,
    pub crb_s2: f64,
    pub mf_floor_s2: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
}

impl SweepResult {
    pub fn find(
        &self,
        sweep_value: f64,
        constellation: &str,
        receiver: ReceiverKind,
        target: usize,
    ) -> Option<&SweepRecord> {
        self.records.iter().find(|r| {
            r.sweep_value == sweep_value
                && r.constellation == constellation
                && r.receiver == receiver
                && r.target_index == target
        })
    }
}

/// Per-target squared delay errors of one trial, per receiver; `None` marks a
/// failed estimate.
type TrialOutcome = Vec<Option<Vec<f64>>>;

fn run_trial(
    cfg: &SweepConfig,
    sc: &Scenario,
    constellation: &Constellation,
    moments: &MomentReport,
    grid: &DelayGrid,
    seed: u64,
) -> TrialOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = sc.targets().len();
    let sc = if cfg.random_phase {
        let phases: Vec<f64> = (0..k)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        sc.with_phases(&phases)
    } else {
        sc.clone()
    };
    let x = draw_symbols(&mut rng, constellation, cfg.ofdm.n_subcarriers());
    let frame = apply_channel_with(&mut rng, &x, &sc, &cfg.ofdm);
    let truth = sc.delays();

    cfg.receivers
        .iter()
        .map(|&kind| {
            let out = receiver::apply(kind, &frame, moments.nu_minus2).ok()?;
            let est = match cfg.estimator {
                EstimatorKind::Periodogram => estimate_periodogram(&out, k, grid),
                EstimatorKind::MatrixPencil => {
                    estimate_matrix_pencil(&out, &cfg.ofdm, k, cfg.pencil_param, cfg.pencil_variant)
                }
            }
            .ok()?;
            let pairs = associate(&truth, &est);
            Some(pairs.iter().map(|(t, e)| (t - e).powi(2)).collect())
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct CellKey {
    point: usize,
    constellation: usize,
}

/// Runs every sweep point, constellation and trial and aggregates per target.
pub fn run_sweep(cfg: &SweepConfig, exec: Execution) -> Result<SweepResult> {
    cfg.validate()?;
    let grid = DelayGrid::new(cfg.ofdm, cfg.oversampling)?;
    let moments: Vec<MomentReport> = cfg
        .constellations
        .iter()
        .map(|c| c.moments())
        .collect::<Result<_>>()?;
    let scenarios: Vec<Scenario> = (0..cfg.axis.len())
        .map(|i| cfg.template.realize(&cfg.ofdm, &cfg.axis, i))
        .collect::<Result<_>>()?;

    let cells: Vec<CellKey> = (0..scenarios.len())
        .flat_map(|point| {
            (0..cfg.constellations.len()).map(move |constellation| CellKey {
                point,
                constellation,
            })
        })
        .collect();
    let trials = cfg.trials;

    let outcomes: Vec<TrialOutcome> = exec.map(cells.len() * trials, |job| {
        let cell = cells[job / trials];
        let trial = job % trials;
        let seed = derive_seed(
            cfg.master_seed,
            &[cell.point as u64, cell.constellation as u64, trial as u64],
        );
        run_trial(
            cfg,
            &scenarios[cell.point],
            &cfg.constellations[cell.constellation],
            &moments[cell.constellation],
            &grid,
            seed,
        )
    });

    let mut records = Vec::new();
    for (ci, cell) in cells.iter().enumerate() {
        let sc = &scenarios[cell.point];
        let c = &cfg.constellations[cell.constellation];
        let theory = theory_points(&cfg.ofdm, sc, &moments[cell.constellation]);
        let cell_outcomes = &outcomes[ci * trials..(ci + 1) * trials];
        for (ri, &kind) in cfg.receivers.iter().enumerate() {
            let failures = cell_outcomes.iter().filter(|o| o[ri].is_none()).count();
            for (k, tp) in theory.iter().enumerate() {
                let errors: Vec<f64> = cell_outcomes
                    .iter()
                    .filter_map(|o| o[ri].as_ref().map(|e| e[k]))
                    .collect();
                records.push(SweepRecord {
                    sweep_axis: cfg.axis.name(),
                    sweep_value: cfg.axis.value(cell.point),
                    constellation: c.label().to_string(),
                    receiver: kind,
                    estimator: cfg.estimator,
                    target_index: k,
                    trials,
                    failures,
                    stats: aggregate_rmse(&errors, failures),
                    theory_mse_s2: receiver_theory(kind, tp),
                    crb_s2: tp.crb_s2,
                    mf_floor_s2: tp.mf_floor_s2,
                });
            }
        }
    }
    Ok(SweepResult { records })
}

fn receiver_theory(kind: ReceiverKind, tp: &TheoryPoint) -> f64 {
    match kind {
        ReceiverKind::Mf => tp.mse_mf_s2,
        ReceiverKind::Rf => tp.mse_rf_s2,
    }
}

/// Theory-only rows with the same schema as [`run_sweep`]; empirical fields stay empty.
pub fn theory_table(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let mut records = Vec::new();
    for i in 0..cfg.axis.len() {
        let sc = cfg.template.realize(&cfg.ofdm, &cfg.axis, i)?;
        for c in &cfg.constellations {
            let theory = theory_points(&cfg.ofdm, &sc, &c.moments()?);
            for &kind in &cfg.receivers {
                for (k, tp) in theory.iter().enumerate() {
                    records.push(SweepRecord {
                        sweep_axis: cfg.axis.name(),
                        sweep_value: cfg.axis.value(i),
                        constellation: c.label().to_string(),
                        receiver: kind,
                        estimator: cfg.estimator,
                        target_index: k,
                        trials: 0,
                        failures: 0,
                        stats: None,
                        theory_mse_s2: receiver_theory(kind, tp),
                        crb_s2: tp.crb_s2,
                        mf_floor_s2: tp.mf_floor_s2,
                    });
                }
            }
        }
    }
    Ok(SweepResult { records })
}

pub const CSV_HEADER: [&str; 15] = [
    "sweep_axis",
    "sweep_value",
    "constellation",
    "receiver",
    "estimator",
    "target_index",
    "trials",
    "failures",
    "mse_s2",
    "rmse_m",
    "ci_low_m",
    "ci_high_m",
    "theory_mse_s2",
    "crb_s2",
    "mf_floor_s2",
];

/// `%.9g`: nine significant digits, trailing zeros trimmed.
pub fn fmt_sig9(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_sig9).unwrap_or_default()
}

impl SweepRecord {
    fn csv_fields(&self) -> Vec<String> {
        let value = if self.sweep_axis == "k_targets" {
            format!("{}", self.sweep_value as usize)
        } else {
            fmt_sig9(self.sweep_value)
        };
        vec![
            self.sweep_axis.to_string(),
            value,
            self.constellation.clone(),
            self.receiver.as_str().to_string(),
            self.estimator.as_str().to_string(),
            self.target_index.to_string(),
            self.trials.to_string(),
            self.failures.to_string(),
            opt(self.stats.map(|s| s.mse_s2)),
            opt(self.stats.map(|s| s.rmse_m)),
            opt(self.stats.map(|s| s.ci_low_m)),
            opt(self.stats.map(|s| s.ci_high_m)),
            fmt_sig9(self.theory_mse_s2),
            fmt_sig9(self.crb_s2),
            fmt_sig9(self.mf_floor_s2),
        ]
    }
}

pub fn write_csv<W: Write>(result: &SweepResult, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &result.records {
        w.write_record(r.csv_fields())?;
    }
    w.flush()
}

pub fn csv_string(result: &SweepResult) -> String {
    let mut buf = Vec::new();
    write_csv(result, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

/// Speed of light over two: meters of range per second of delay.
pub const RANGE_PER_DELAY: f64 = SPEED_OF_LIGHT / 2.0;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{make_standard, StandardKind};

    #[test]
    fn aggregate_trivial_cases() {
        let a = aggregate_rmse(&[0.0; 10], 0).unwrap();
        assert_eq!(
            (a.mse_s2, a.rmse_m, a.ci_low_m, a.ci_high_m),
            (0.0, 0.0, 0.0, 0.0)
        );
        let e = 3e-20;
        let a = aggregate_rmse(&[e; 50], 2).unwrap();
        assert!((a.mse_s2 - e).abs() < 1e-34);
        assert!((a.ci_high_s2 - a.ci_low_s2).abs() < 1e-34);
        assert!((a.rmse_m - RANGE_PER_DELAY * e.sqrt()).abs() < 1e-15);
        assert!(aggregate_rmse(&[], 5).is_none());
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(fmt_sig9(5.936788104043229e-20), "5.9367881e-20");
        assert_eq!(fmt_sig9(10.0), "10");
        assert_eq!(fmt_sig9(0.0365), "0.0365");
        assert_eq!(fmt_sig9(-2.5), "-2.5");
        assert_eq!(fmt_sig9(123456789012.0), "1.23456789e11");
        assert_eq!(fmt_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig9(0.0), "0");
    }

    #[test]
    fn config_file_parses_with_defaults() {
        let text = r#"{
            "n_subcarriers": 256, "bandwidth_hz": 5e7, "cp_length_s": 6.4e-7,
            "receiver": "both", "estimator": "pencil",
            "sweep": {"axis": "k_targets", "values": [1, 2, 3, 4, 5]},
            "snr_db": 10, "constellations": ["32apsk"]
        }"#;
        let file: SweepConfigFile = serde_json::from_str(text).unwrap();
        let cfg = SweepConfig::from_file_config(&file).unwrap();
        assert_eq!(cfg.trials, 1000);
        assert_eq!(cfg.oversampling, 16);
        assert_eq!(cfg.pencil_param, 85);
        assert_eq!(cfg.template.targets.len(), 5);
        assert_eq!(cfg.receivers, vec![ReceiverKind::Mf, ReceiverKind::Rf]);

        let bad = text.replace("\"snr_db\"", "\"snr\"");
        assert!(serde_json::from_str::<SweepConfigFile>(&bad).is_err());
        let empty = text.replace("[1, 2, 3, 4, 5]", "[]");
        let file: SweepConfigFile = serde_json::from_str(&empty).unwrap();
        assert!(SweepConfig::from_file_config(&file).is_err());
    }

    #[test]
    fn small_sweep_is_deterministic_across_execution_modes() {
        let ofdm = OfdmConfig::new(64, 20e6, 1e-6).unwrap();
        let q = make_standard(StandardKind::Qam, 16, None).unwrap();
        let mut cfg = SweepConfig::with_defaults(
            ofdm,
            SweepAxis::SnrDb(vec![5.0, 15.0]),
            vec![q],
            ReceiverChoice::Both,
            EstimatorKind::Periodogram,
            2,
            0.0,
        )
        .unwrap();
        cfg.trials = 40;
        cfg.master_seed = 3;
        let a = run_sweep(&cfg, Execution::Sequential).unwrap();
        let b = run_sweep(&cfg, Execution::Parallel).unwrap();
        assert_eq!(csv_string(&a), csv_string(&b));
        assert_eq!(a.records.len(), 2 * 2 * 2);
        let theory = theory_table(&cfg).unwrap();
        for (s, t) in a.records.iter().zip(&theory.records) {
            assert_eq!(
                (s.theory_mse_s2, s.crb_s2, s.mf_floor_s2),
                (t.theory_mse_s2, t.crb_s2, t.mf_floor_s2)
            );
        }
        cfg.master_seed = 4;
        assert_ne!(
            csv_string(&a),
            csv_string(&run_sweep(&cfg, Execution::Parallel).unwrap())
        );
    }

    #[test]
    fn csv_header_order() {
        let s = csv_string(&SweepResult::default());
        assert_eq!(
            s.trim_end(),
            "sweep_axis,sweep_value,constellation,receiver,estimator,target_index,trials,failures,mse_s2,rmse_m,ci_low_m,ci_high_m,theory_mse_s2,crb_s2,mf_floor_s2"
        );
    }
}
