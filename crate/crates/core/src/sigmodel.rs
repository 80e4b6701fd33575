//! Frequency-domain OFDM sensing model: one random-payload symbol per trial,
//! reflected by `K` point targets and observed in white Gaussian noise.
//!
//! `y_n = sum_k alpha_k e^{-j 2 pi n df tau_k} x_n + z_n`, `z_n ~ CN(0, sigma^2)`.
//! `sigma^2` is the total complex variance, `sigma^2 / 2` per real dimension.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicBool, Ordering};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::{IsacError, Result};

static CP_WARNED: AtomicBool = AtomicBool::new(false);

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Relative slack on the `1/B` separation check so exact multiples of `1/B`
/// survive floating-point rounding.
const SEPARATION_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmConfig {
    n_subcarriers: usize,
    bandwidth_hz: f64,
    cp_length_s: f64,
}

impl OfdmConfig {
    pub fn new(n_subcarriers: usize, bandwidth_hz: f64, cp_length_s: f64) -> Result<Self> {
        if n_subcarriers < 8 {
            return Err(IsacError::InvalidConfig(format!(
                "n_subcarriers must be at least 8, got {n_subcarriers}"
            )));
        }
        if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
            return Err(IsacError::InvalidConfig(format!(
                "bandwidth_hz must be positive, got {bandwidth_hz}"
            )));
        }
        if !(cp_length_s.is_finite() && cp_length_s >= 0.0) {
            return Err(IsacError::InvalidConfig(format!(
                "cp_length_s must be non-negative, got {cp_length_s}"
            )));
        }
        Ok(Self {
            n_subcarriers,
            bandwidth_hz,
            cp_length_s,
        })
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    pub fn cp_length_s(&self) -> f64 {
        self.cp_length_s
    }

    /// `df = B / N`.
    pub fn subcarrier_spacing_hz(&self) -> f64 {
        self.bandwidth_hz / self.n_subcarriers as f64
    }

    /// Length of the unambiguous delay interval, `1 / df`.
    pub fn max_delay_s(&self) -> f64 {
        self.n_subcarriers as f64 / self.bandwidth_hz
    }

    /// Delay resolution `1 / B`.
    pub fn resolution_s(&self) -> f64 {
        self.bandwidth_hz.recip()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub delay_s: f64,
    pub amplitude: Complex64,
}

impl Target {
    pub fn new(delay_s: f64, amplitude: Complex64) -> Self {
        Self { delay_s, amplitude }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    targets: Vec<Target>,
    noise_power: f64,
}

impl Scenario {
    /// Validates delay range, amplitudes, pairwise `1/B` separation and `K < N`.
    pub fn new(cfg: &OfdmConfig, targets: Vec<Target>, noise_power: f64) -> Result<Self> {
        Self::build(cfg, targets, noise_power, false)
    }

    /// Noiseless channel for estimator checks; otherwise identical to [`Scenario::new`].
    pub fn noiseless(cfg: &OfdmConfig, targets: Vec<Target>) -> Result<Self> {
        Self::build(cfg, targets, 0.0, true)
    }

    fn build(
        cfg: &OfdmConfig,
        targets: Vec<Target>,
        noise_power: f64,
        allow_zero_noise: bool,
    ) -> Result<Self> {
        let bad = |msg: String| Err(IsacError::InvalidScenario(msg));
        if targets.is_empty() {
            return bad("at least one target is required".into());
        }
        if targets.len() >= cfg.n_subcarriers() {
            return bad(format!(
                "{} targets for {} subcarriers",
                targets.len(),
                cfg.n_subcarriers()
            ));
        }
        let noise_ok = if allow_zero_noise {
            noise_power >= 0.0
        } else {
            noise_power > 0.0
        };
        if !(noise_power.is_finite() && noise_ok) {
            return bad(format!("noise power must be positive, got {noise_power}"));
        }
        let max_delay = cfg.max_delay_s();
        for (k, t) in targets.iter().enumerate() {
            if !(t.delay_s >= 0.0 && t.delay_s < max_delay) {
                return bad(format!(
                    "target {k} delay {} s outside [0, {max_delay})",
                    t.delay_s
                ));
            }
            if !(t.amplitude.norm() > 0.0 && t.amplitude.norm().is_finite()) {
                return bad(format!("target {k} amplitude must be non-zero and finite"));
            }
        }
        let min_sep = cfg.resolution_s() * (1.0 - SEPARATION_SLACK);
        for (i, a) in targets.iter().enumerate() {
            for (j, b) in targets.iter().enumerate().skip(i + 1) {
                if (a.delay_s - b.delay_s).abs() < min_sep {
                    return bad(format!("targets {i} and {j} are closer than 1/B"));
                }
            }
        }
        let longest = targets.iter().map(|t| t.delay_s).fold(0.0, f64::max);
        if longest > cfg.cp_length_s() {
            // Sweeps rebuild scenarios per point; say it once per process.
            let level = if CP_WARNED.swap(true, Ordering::Relaxed) {
                log::Level::Debug
            } else {
                log::Level::Warn
            };
            log::log!(
                level,
                "largest delay {longest:e} s exceeds the cyclic prefix {:e} s",
                cfg.cp_length_s()
            );
        }
        Ok(Self {
            targets,
            noise_power,
        })
    }

    pub fn targets(&self) -> &[Target] {
        &self.targets
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn delays(&self) -> Vec<f64> {
        self.targets.iter().map(|t| t.delay_s).collect()
    }

    /// Same geometry with every target phase replaced by `phases[k]`.
    pub fn with_phases(&self, phases: &[f64]) -> Self {
        let targets = self
            .targets
            .iter()
            .zip(phases)
            .map(|(t, &p)| Target::new(t.delay_s, Complex64::from_polar(t.amplitude.norm(), p)))
            .collect();
        Self {
            targets,
            noise_power: self.noise_power,
        }
    }

    pub fn with_noise_power(&self, noise_power: f64) -> Self {
        Self {
            targets: self.targets.clone(),
            noise_power,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub tx_symbols: Vec<Complex64>,
    pub rx_samples: Vec<Complex64>,
    /// Noise power the frame was generated with.
    pub noise_power: f64,
}

/// Draws `n` i.i.d. uniform symbols from `c`.
pub fn draw_symbols<R: Rng + ?Sized>(rng: &mut R, c: &Constellation, n: usize) -> Vec<Complex64> {
    let symbols = c.symbols();
    (0..n)
        .map(|_| symbols[rng.random_range(0..symbols.len())])
        .collect()
}

/// One OFDM symbol of random payload, reproducible from `rng_seed`.
pub fn draw_payload(c: &Constellation, cfg: &OfdmConfig, rng_seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    draw_symbols(&mut rng, c, cfg.n_subcarriers())
}

/// `e^{-j 2 pi n df tau}` with the cycle count reduced before the trig call.
fn steering_entry(n: usize, df_tau: f64) -> Complex64 {
    let cycles = n as f64 * df_tau;
    let frac = cycles - cycles.round();
    Complex64::from_polar(1.0, -2.0 * PI * frac)
}

pub fn steering_vector(cfg: &OfdmConfig, tau: f64) -> Vec<Complex64> {
    let df_tau = cfg.subcarrier_spacing_hz() * tau;
    (0..cfg.n_subcarriers())
        .map(|n| steering_entry(n, df_tau))
        .collect()
}

/// Noise-free channel response `sum_k alpha_k h_n(tau_k)`.
pub fn channel_response(cfg: &OfdmConfig, targets: &[Target]) -> Vec<Complex64> {
    let df = cfg.subcarrier_spacing_hz();
    let mut h = vec![Complex64::new(0.0, 0.0); cfg.n_subcarriers()];
    for t in targets {
        let df_tau = df * t.delay_s;
        for (n, v) in h.iter_mut().enumerate() {
            *v += t.amplitude * steering_entry(n, df_tau);
        }
    }
    h
}

/// Circularly-symmetric complex Gaussian samples with total variance `noise_power`.
pub fn complex_noise<R: Rng + ?Sized>(rng: &mut R, noise_power: f64, n: usize) -> Vec<Complex64> {
    let scale = (noise_power / 2.0).sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * scale, im * scale)
        })
        .collect()
}

pub fn apply_channel_with<R: Rng + ?Sized>(
    rng: &mut R,
    x: &[Complex64],
    sc: &Scenario,
    cfg: &OfdmConfig,
) -> Frame {
    assert_eq!(x.len(), cfg.n_subcarriers(), "payload length must equal N");
    let h = channel_response(cfg, sc.targets());
    let mut y: Vec<Complex64> = h.iter().zip(x).map(|(h, x)| h * x).collect();
    if sc.noise_power() > 0.0 {
        for (y, z) in y
            .iter_mut()
            .zip(complex_noise(rng, sc.noise_power(), x.len()))
        {
            *y += z;
        }
    }
    Frame {
        tx_symbols: x.to_vec(),
        rx_samples: y,
        noise_power: sc.noise_power(),
    }
}

pub fn apply_channel(x: &[Complex64], sc: &Scenario, cfg: &OfdmConfig, rng_seed: u64) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    apply_channel_with(&mut rng, x, sc, cfg)
}

/// Noise power that puts a target of amplitude `amplitude` at `snr_db`.
pub fn snr_to_noise_power(snr_db: f64, amplitude: Complex64) -> f64 {
    amplitude.norm_sqr() / 10f64.powf(snr_db / 10.0)
}

/// One target as written in a scenario file. Exactly one of `delay_s` and
/// `range_m` must be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_m: Option<f64>,
    #[serde(default)]
    pub amplitude_db: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

impl TargetSpec {
    pub fn to_target(&self) -> Result<Target> {
        let delay_s = match (self.delay_s, self.range_m) {
            (Some(d), None) => d,
            (None, Some(r)) => range_to_delay(r),
            _ => {
                return Err(IsacError::InvalidScenario(
                    "each target needs exactly one of delay_s and range_m".into(),
                ))
            }
        };
        let mag = 10f64.powf(self.amplitude_db / 20.0);
        Ok(Target::new(
            delay_s,
            Complex64::from_polar(mag, self.phase_rad),
        ))
    }
}

/// Scenario file: OFDM numerology, target list and the SNR of target 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n_subcarriers: usize,
    pub bandwidth_hz: f64,
    #[serde(default)]
    pub cp_length_s: f64,
    pub targets: Vec<TargetSpec>,
    pub snr_db: f64,
}

impl ScenarioSpec {
    pub fn ofdm(&self) -> Result<OfdmConfig> {
        OfdmConfig::new(self.n_subcarriers, self.bandwidth_hz, self.cp_length_s)
    }

    pub fn target_list(&self) -> Result<Vec<Target>> {
        self.targets.iter().map(TargetSpec::to_target).collect()
    }

    pub fn scenario(&self) -> Result<(OfdmConfig, Scenario)> {
        let cfg = self.ofdm()?;
        let targets = self.target_list()?;
        let reference = targets
            .first()
            .ok_or_else(|| IsacError::InvalidScenario("at least one target is required".into()))?;
        let noise = snr_to_noise_power(self.snr_db, reference.amplitude);
        let sc = Scenario::new(&cfg, targets, noise)?;
        Ok((cfg, sc))
    }
}

/// Monostatic round-trip delay for a target at `range_m`.
pub fn range_to_delay(range_m: f64) -> f64 {
    2.0 * range_m / SPEED_OF_LIGHT
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{make_standard, StandardKind};

    fn cfg() -> OfdmConfig {
        OfdmConfig::new(256, 50e6, 0.64e-6).unwrap()
    }

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn spacing_times_n_is_bandwidth() {
        let c = cfg();
        assert_eq!(c.subcarrier_spacing_hz(), 195_312.5);
        assert_eq!(c.subcarrier_spacing_hz() * 256.0, 50e6);
        assert!(OfdmConfig::new(4, 1e6, 0.0).is_err());
        assert!(OfdmConfig::new(16, 0.0, 0.0).is_err());
    }

    #[test]
    fn steering_vector_cases() {
        let c = cfg();
        assert!(steering_vector(&c, 0.0).iter().all(|v| *v == one()));
        let wrapped = steering_vector(&c, 1.0 / c.subcarrier_spacing_hz());
        assert!(wrapped.iter().all(|v| (v - one()).norm() < 1e-12));

        let c4 = OfdmConfig::new(8, 8.0, 0.0).unwrap();
        let half = steering_vector(&c4, 0.5 / c4.subcarrier_spacing_hz());
        for (n, v) in half.iter().take(4).enumerate() {
            let want = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((v - Complex64::new(want, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn snr_conversion() {
        assert_eq!(snr_to_noise_power(0.0, one()), 1.0);
        assert!((snr_to_noise_power(10.0, one()) - 0.1).abs() < 1e-15);
        let a = Complex64::new(2f64.sqrt(), 0.0);
        assert!((snr_to_noise_power(3.0, a) - 2.0 / 10f64.powf(0.3)).abs() < 1e-12);
        assert!((snr_to_noise_power(3.0, a) - 1.0024).abs() < 1e-4);
    }

    #[test]
    fn scenario_validation() {
        let c = cfg();
        let b = c.resolution_s();
        assert!(Scenario::new(
            &c,
            vec![Target::new(10.0 * b, one()), Target::new(11.0 * b, one())],
            1.0
        )
        .is_ok());
        assert!(Scenario::new(
            &c,
            vec![Target::new(10.0 * b, one()), Target::new(10.5 * b, one())],
            1.0
        )
        .is_err());
        assert!(Scenario::new(&c, vec![Target::new(c.max_delay_s(), one())], 1.0).is_err());
        assert!(Scenario::new(&c, vec![Target::new(-1e-9, one())], 1.0).is_err());
        assert!(Scenario::new(&c, vec![Target::new(0.0, Complex64::new(0.0, 0.0))], 1.0).is_err());
        assert!(Scenario::new(&c, vec![], 1.0).is_err());
        assert!(Scenario::new(&c, vec![Target::new(0.0, one())], 0.0).is_err());
        assert!(Scenario::noiseless(&c, vec![Target::new(0.0, one())]).is_ok());
    }

    #[test]
    fn identity_channel() {
        let c = cfg();
        let q = make_standard(StandardKind::Psk, 4, None).unwrap();
        let x = draw_payload(&q, &c, 3);
        let sc = Scenario::noiseless(&c, vec![Target::new(0.0, one())]).unwrap();
        let f = apply_channel(&x, &sc, &c, 9);
        assert_eq!(f.rx_samples, x);
    }

    #[test]
    fn two_targets_match_direct_evaluation() {
        let c = cfg();
        let q = make_standard(StandardKind::Qam, 16, None).unwrap();
        let x = draw_payload(&q, &c, 5);
        let t = [
            Target::new(12.3 / 50e6, Complex64::new(0.3, -0.8)),
            Target::new(40.9 / 50e6, Complex64::new(-1.1, 0.2)),
        ];
        let sc = Scenario::noiseless(&c, t.to_vec()).unwrap();
        let f = apply_channel(&x, &sc, &c, 1);
        let df = c.subcarrier_spacing_hz();
        for (n, (y, x)) in f.rx_samples.iter().zip(&x).enumerate() {
            let h: Complex64 = t
                .iter()
                .map(|t| {
                    t.amplitude * Complex64::from_polar(1.0, -2.0 * PI * n as f64 * df * t.delay_s)
                })
                .sum();
            assert!((y - h * x).norm() < 1e-11);
        }
    }

    #[test]
    fn on_grid_target_is_single_idft_bin() {
        let c = OfdmConfig::new(64, 64e6, 1e-6).unwrap();
        let x = vec![one(); 64];
        let sc =
            Scenario::noiseless(&c, vec![Target::new(10.0 * c.resolution_s(), one())]).unwrap();
        let y = apply_channel(&x, &sc, &c, 0).rx_samples;
        for b in 0..64 {
            let v: Complex64 = y
                .iter()
                .enumerate()
                .map(|(n, y)| y * Complex64::from_polar(1.0, 2.0 * PI * (n * b) as f64 / 64.0))
                .sum();
            let want = if b == 10 { 64.0 } else { 0.0 };
            assert!((v.norm() - want).abs() < 1e-9, "bin {b}: {}", v.norm());
        }
    }

    #[test]
    fn seeds_are_reproducible() {
        let c = cfg();
        let q = make_standard(StandardKind::Qam, 64, None).unwrap();
        let sc = Scenario::new(&c, vec![Target::new(1e-7, one())], 0.3).unwrap();
        let a = apply_channel(&draw_payload(&q, &c, 11), &sc, &c, 12);
        let b = apply_channel(&draw_payload(&q, &c, 11), &sc, &c, 12);
        assert_eq!(a, b);
    }

    #[test]
    fn scenario_spec_converts_range_and_db() {
        let spec: ScenarioSpec = serde_json::from_str(
            r#"{"n_subcarriers": 256, "bandwidth_hz": 5e7, "cp_length_s": 6.4e-7,
                "targets": [{"range_m": 30.0, "amplitude_db": 0.0, "phase_rad": 0.0},
                            {"delay_s": 6e-7, "amplitude_db": -6.0, "phase_rad": 1.0}],
                "snr_db": 10.0}"#,
        )
        .unwrap();
        let (_, sc) = spec.scenario().unwrap();
        assert!((sc.targets()[0].delay_s - 60.0 / SPEED_OF_LIGHT).abs() < 1e-20);
        assert!((sc.targets()[1].amplitude.norm() - 10f64.powf(-0.3)).abs() < 1e-12);
        assert!((sc.noise_power() - 0.1).abs() < 1e-15);

        let both: ScenarioSpec = serde_json::from_str(
            r#"{"n_subcarriers": 16, "bandwidth_hz": 1e6,
                "targets": [{"range_m": 3.0, "delay_s": 1e-6}], "snr_db": 0}"#,
        )
        .unwrap();
        assert!(both.scenario().is_err());
    }
}
