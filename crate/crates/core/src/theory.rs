//! Closed-form delay MSE for the matched and reciprocal filter receivers, the
//! matched-filter saturation floor, and the delay Cramér–Rao bound.
//!
//! With `D = 8 pi^2 df^2 |alpha_k|^2 N^3`:
//!
//! * MF: `3 ((mu4 - 1) sum_{j != k} |alpha_j|^2 + sigma^2) / D`
//! * RF: `3 sigma^2 nu_minus2 / D`
//! * CRB (known amplitude): `sigma^2 / (8 pi^2 df^2 |alpha_k|^2 sum_{n<N} n^2)`,
//!   whose large-`N` form is `3 sigma^2 / D`.
//!
//! The MF/RF expressions and the known-amplitude CRB treat the target phase as
//! known. A delay estimator that must also find the phase cannot beat
//! [`crb_delay_unknown_phase`], which is about `12 sigma^2 / D`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constellation::MomentReport;
use crate::error::{IsacError, Result};
use crate::sigmodel::{snr_to_noise_power, OfdmConfig, Scenario, Target};

/// Per-target theory values for one scenario, all in seconds squared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryPoint {
    pub mse_mf_s2: f64,
    pub mse_rf_s2: f64,
    pub crb_s2: f64,
    pub mf_floor_s2: f64,
}

fn denominator(cfg: &OfdmConfig, sc: &Scenario, k: usize) -> f64 {
    let df = cfg.subcarrier_spacing_hz();
    let n = cfg.n_subcarriers() as f64;
    8.0 * PI * PI * df * df * sc.targets()[k].amplitude.norm_sqr() * n * n * n
}

fn interference_power(sc: &Scenario, k: usize) -> f64 {
    sc.targets()
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != k)
        .map(|(_, t)| t.amplitude.norm_sqr())
        .sum()
}

pub fn mse_mf(cfg: &OfdmConfig, sc: &Scenario, mu4: f64, k: usize) -> f64 {
    3.0 * ((mu4 - 1.0) * interference_power(sc, k) + sc.noise_power()) / denominator(cfg, sc, k)
}

/// High-SNR limit of [`mse_mf`]; zero for a single target or unit-modulus alphabets.
pub fn mf_floor(cfg: &OfdmConfig, sc: &Scenario, mu4: f64, k: usize) -> f64 {
    3.0 * (mu4 - 1.0) * interference_power(sc, k) / denominator(cfg, sc, k)
}

/// Independent of every other target.
pub fn mse_rf(cfg: &OfdmConfig, sc: &Scenario, nu_minus2: f64, k: usize) -> f64 {
    3.0 * sc.noise_power() * nu_minus2 / denominator(cfg, sc, k)
}

/// `sum_{n=0}^{N-1} n^2 = (N-1) N (2N-1) / 6`.
pub fn index_square_sum(n: usize) -> f64 {
    let n = n as f64;
    (n - 1.0) * n * (2.0 * n - 1.0) / 6.0
}

/// Known-amplitude delay CRB for target `k`, exact index-sum form.
pub fn crb_delay(cfg: &OfdmConfig, sc: &Scenario, k: usize) -> f64 {
    let df = cfg.subcarrier_spacing_hz();
    sc.noise_power()
        / (8.0
            * PI
            * PI
            * df
            * df
            * sc.targets()[k].amplitude.norm_sqr()
            * index_square_sum(cfg.n_subcarriers()))
}

/// Large-`N` form of [`crb_delay`], `sum n^2 ~ N^3 / 3`.
pub fn crb_delay_asymptotic(cfg: &OfdmConfig, sc: &Scenario, k: usize) -> f64 {
    3.0 * sc.noise_power() / denominator(cfg, sc, k)
}

/// Delay CRB for target `k` when its complex amplitude is also unknown: the
/// phase absorbs the mean index, leaving `sum (n - n_bar)^2 = N (N^2 - 1) / 12`.
/// Four times [`crb_delay_asymptotic`] for large `N`.
pub fn crb_delay_unknown_phase(cfg: &OfdmConfig, sc: &Scenario, k: usize) -> f64 {
    let df = cfg.subcarrier_spacing_hz();
    let n = cfg.n_subcarriers() as f64;
    sc.noise_power()
        / (8.0 * PI * PI * df * df * sc.targets()[k].amplitude.norm_sqr() * n * (n * n - 1.0)
            / 12.0)
}

pub fn theory_point(
    cfg: &OfdmConfig,
    sc: &Scenario,
    moments: &MomentReport,
    k: usize,
) -> TheoryPoint {
    TheoryPoint {
        mse_mf_s2: mse_mf(cfg, sc, moments.mu4, k),
        mse_rf_s2: mse_rf(cfg, sc, moments.nu_minus2, k),
        crb_s2: crb_delay(cfg, sc, k),
        mf_floor_s2: mf_floor(cfg, sc, moments.mu4, k),
    }
}

/// Every target's theory values for one scenario.
pub fn theory_points(cfg: &OfdmConfig, sc: &Scenario, moments: &MomentReport) -> Vec<TheoryPoint> {
    (0..sc.targets().len())
        .map(|k| theory_point(cfg, sc, moments, k))
        .collect()
}

/// Default K-sweep delays in units of `1/B`.
pub const DEFAULT_DELAYS_RESOLUTIONS: [f64; 5] = [10.0, 30.0, 55.0, 85.0, 120.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", content = "values", rename_all = "snake_case")]
pub enum SweepAxis {
    SnrDb(Vec<f64>),
    KTargets(Vec<usize>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::SnrDb(_) => "snr_db",
            SweepAxis::KTargets(_) => "k_targets",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SweepAxis::SnrDb(v) => v.len(),
            SweepAxis::KTargets(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, i: usize) -> f64 {
        match self {
            SweepAxis::SnrDb(v) => v[i],
            SweepAxis::KTargets(v) => v[i] as f64,
        }
    }
}

/// Targets plus the reference SNR (of target 0) from which sweep points are
/// realized.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTemplate {
    pub targets: Vec<Target>,
    pub snr_db: f64,
}

impl ScenarioTemplate {
    /// `count` unit-amplitude targets at the default delays.
    pub fn default_targets(cfg: &OfdmConfig, count: usize, snr_db: f64) -> Result<Self> {
        if count == 0 || count > DEFAULT_DELAYS_RESOLUTIONS.len() {
            return Err(IsacError::InvalidScenario(format!(
                "default scenario supports 1..={} targets, got {count}",
                DEFAULT_DELAYS_RESOLUTIONS.len()
            )));
        }
        let targets = DEFAULT_DELAYS_RESOLUTIONS[..count]
            .iter()
            .map(|d| {
                Target::new(
                    d * cfg.resolution_s(),
                    num_complex::Complex64::new(1.0, 0.0),
                )
            })
            .collect();
        Ok(Self { targets, snr_db })
    }

    /// Scenario at sweep point `i`: the SNR axis overrides the reference SNR,
    /// the K axis truncates the target list.
    pub fn realize(&self, cfg: &OfdmConfig, axis: &SweepAxis, i: usize) -> Result<Scenario> {
        let (targets, snr_db) = match axis {
            SweepAxis::SnrDb(v) => (self.targets.clone(), v[i]),
            SweepAxis::KTargets(v) => {
                let k = v[i];
                if k == 0 || k > self.targets.len() {
                    return Err(IsacError::InvalidScenario(format!(
                        "k = {k} but the template has {} targets",
                        self.targets.len()
                    )));
                }
                (self.targets[..k].to_vec(), self.snr_db)
            }
        };
        let noise = snr_to_noise_power(snr_db, targets[0].amplitude);
        Scenario::new(cfg, targets, noise)
    }
}

/// Theory values at every sweep point, indexed `[point][target]`.
pub fn theory_sweep(
    cfg: &OfdmConfig,
    template: &ScenarioTemplate,
    moments: &MomentReport,
    axis: &SweepAxis,
) -> Result<Vec<Vec<TheoryPoint>>> {
    (0..axis.len())
        .map(|i| {
            template
                .realize(cfg, axis, i)
                .map(|sc| theory_points(cfg, &sc, moments))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn cfg() -> OfdmConfig {
        OfdmConfig::new(256, 50e6, 0.64e-6).unwrap()
    }

    fn unit_targets(cfg: &OfdmConfig, k: usize) -> Vec<Target> {
        ScenarioTemplate::default_targets(cfg, k, 0.0)
            .unwrap()
            .targets
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn reference_values() {
        let c = cfg();
        let sc = Scenario::new(&c, unit_targets(&c, 1), 1.0).unwrap();
        let base = 3.0 / (8.0 * PI * PI * 6.4e17);
        assert!(rel(mse_mf(&c, &sc, 1.7, 0), base) < 1e-12);
        assert!(rel(base, 5.9368e-20) < 1e-4);
        assert!(rel(mse_rf(&c, &sc, 1.0, 0), base) < 1e-12);
        assert!(rel(crb_delay_asymptotic(&c, &sc, 0), base) < 1e-12);
        assert_eq!(index_square_sum(256), 5_559_680.0);
        // 1 / (8 pi^2 df^2 * 5559680), enumerated.
        assert!(rel(crb_delay(&c, &sc, 0), 5.971733e-20) < 1e-6);
    }

    #[test]
    fn floor_for_three_equal_targets() {
        let c = cfg();
        let sc = Scenario::new(&c, unit_targets(&c, 3), 1e-30).unwrap();
        let floor = mf_floor(&c, &sc, 1.32, 1);
        assert!(rel(floor, 0.64 * 5.936788e-20) < 1e-5);
        assert!(rel(crate::estimation::delay_to_range(floor.sqrt()), 0.0292) < 2e-3);
    }

    #[test]
    fn rf_16qam_at_10db() {
        let c = cfg();
        let sc = Scenario::new(&c, unit_targets(&c, 3), 0.1).unwrap();
        let v = mse_rf(&c, &sc, 17.0 / 9.0, 0);
        assert!(rel(v, 1.1214e-20) < 1e-4);
        let sc5 = Scenario::new(&c, unit_targets(&c, 5), 0.1).unwrap();
        assert_eq!(mse_rf(&c, &sc5, 17.0 / 9.0, 0), v);
    }

    #[test]
    fn unit_modulus_removes_interference() {
        let c = cfg();
        let one = Scenario::new(&c, unit_targets(&c, 1), 0.3).unwrap();
        let five = Scenario::new(&c, unit_targets(&c, 5), 0.3).unwrap();
        assert_eq!(mse_mf(&c, &one, 1.0, 0), mse_mf(&c, &five, 1.0, 0));
        assert_eq!(mf_floor(&c, &five, 1.0, 2), 0.0);
    }

    #[test]
    fn crb_scaling() {
        let c = cfg();
        let sc = Scenario::new(&c, unit_targets(&c, 1), 1.0).unwrap();
        let a = crb_delay(&c, &sc, 0);
        assert!(rel(crb_delay(&c, &sc.with_noise_power(10.0), 0), 10.0 * a) < 1e-12);
        let c2 = OfdmConfig::new(512, 100e6, 0.0).unwrap();
        let sc2 = Scenario::new(&c2, unit_targets(&c2, 1), 1.0).unwrap();
        // Same df, twice the subcarriers.
        let ratio = a / crb_delay(&c2, &sc2, 0);
        assert!((ratio - 8.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn monotone_in_moments_and_interference() {
        let c = cfg();
        let mut last = 0.0;
        for mu4 in [1.0, 1.2, 1.4, 1.8] {
            let sc = Scenario::new(&c, unit_targets(&c, 3), 0.1).unwrap();
            let v = mse_mf(&c, &sc, mu4, 0);
            assert!(v > last);
            last = v;
        }
        let mut last = 0.0;
        for amp in [0.5, 1.0, 2.0] {
            let mut t = unit_targets(&c, 3);
            t[2].amplitude = Complex64::new(amp, 0.0);
            let sc = Scenario::new(&c, t, 0.1).unwrap();
            let v = mse_mf(&c, &sc, 1.32, 0);
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn bandwidth_scaling() {
        let c = cfg();
        let c2 = OfdmConfig::new(256, 100e6, 0.0).unwrap();
        let sc = Scenario::new(&c, vec![Target::new(1e-7, Complex64::new(1.0, 0.0))], 0.5).unwrap();
        let sc2 =
            Scenario::new(&c2, vec![Target::new(1e-7, Complex64::new(1.0, 0.0))], 0.5).unwrap();
        assert!(rel(mse_rf(&c2, &sc2, 1.5, 0), mse_rf(&c, &sc, 1.5, 0) / 4.0) < 1e-12);
    }

    #[test]
    fn sweeps() {
        let c = cfg();
        let template = ScenarioTemplate::default_targets(&c, 5, 10.0).unwrap();
        let m = MomentReport {
            mu4: 1.380952,
            nu_minus2: 2.68542,
            d_min: 0.3,
        };
        let k = theory_sweep(&c, &template, &m, &SweepAxis::KTargets(vec![1, 2, 3, 4, 5])).unwrap();
        assert!(k.windows(2).all(|w| w[0][0].mse_rf_s2 == w[1][0].mse_rf_s2));
        assert!(k.windows(2).all(|w| w[0][0].mse_mf_s2 < w[1][0].mse_mf_s2));

        let t3 = ScenarioTemplate::default_targets(&c, 3, 0.0).unwrap();
        let s = theory_sweep(&c, &t3, &m, &SweepAxis::SnrDb(vec![0.0, 20.0, 40.0, 60.0])).unwrap();
        let floor = s[0][0].mf_floor_s2;
        assert!(rel(s[3][0].mse_mf_s2, floor) < 1e-5);
        assert!(rel(s[0][0].mse_rf_s2 / s[1][0].mse_rf_s2, 100.0) < 1e-12);
        assert!(template
            .realize(&c, &SweepAxis::KTargets(vec![6]), 0)
            .is_err());
    }
}
