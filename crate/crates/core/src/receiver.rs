//! Matched-filter and reciprocal-filter processing of a received frame.

use num_complex::Complex64;

use crate::constellation::DEGENERATE_MAGNITUDE;
use crate::error::{IsacError, Result};
use crate::sigmodel::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReceiverKind {
    Mf,
    Rf,
}

impl ReceiverKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReceiverKind::Mf => "mf",
            ReceiverKind::Rf => "rf",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverOutput {
    pub samples: Vec<Complex64>,
    pub kind: ReceiverKind,
    /// `sigma^2` after MF, `sigma^2 * nu_minus2` after RF.
    pub noise_power_effective: f64,
}

/// `y_n * conj(x_n)`.
pub fn matched_filter(frame: &Frame) -> ReceiverOutput {
    let samples = frame
        .rx_samples
        .iter()
        .zip(&frame.tx_symbols)
        .map(|(y, x)| y * x.conj())
        .collect();
    ReceiverOutput {
        samples,
        kind: ReceiverKind::Mf,
        noise_power_effective: frame.noise_power,
    }
}

/// `y_n / x_n`. Removes the payload from the signal term and scales the
/// noise by `|x_n|^-2`, i.e. by `nu_minus2` on average.
pub fn reciprocal_filter(frame: &Frame, nu_minus2: f64) -> Result<ReceiverOutput> {
    if let Some((index, x)) = frame
        .tx_symbols
        .iter()
        .enumerate()
        .find(|(_, x)| x.norm() < DEGENERATE_MAGNITUDE)
    {
        return Err(IsacError::DegenerateSymbol {
            index,
            magnitude: x.norm(),
        });
    }
    let samples = frame
        .rx_samples
        .iter()
        .zip(&frame.tx_symbols)
        .map(|(y, x)| y / x)
        .collect();
    Ok(ReceiverOutput {
        samples,
        kind: ReceiverKind::Rf,
        noise_power_effective: frame.noise_power * nu_minus2,
    })
}

pub fn apply(kind: ReceiverKind, frame: &Frame, nu_minus2: f64) -> Result<ReceiverOutput> {
    match kind {
        ReceiverKind::Mf => Ok(matched_filter(frame)),
        ReceiverKind::Rf => reciprocal_filter(frame, nu_minus2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{make_standard, StandardKind};
    use crate::sigmodel::{
        apply_channel, channel_response, draw_payload, OfdmConfig, Scenario, Target,
    };

    fn cfg() -> OfdmConfig {
        OfdmConfig::new(256, 50e6, 0.64e-6).unwrap()
    }

    fn unit_target(delay: f64) -> Target {
        Target::new(delay, Complex64::new(1.0, 0.0))
    }

    #[test]
    fn mf_qpsk_identity_channel_is_all_ones() {
        let c = cfg();
        let q = make_standard(StandardKind::Psk, 4, None).unwrap();
        let sc = Scenario::noiseless(&c, vec![unit_target(0.0)]).unwrap();
        let f = apply_channel(&draw_payload(&q, &c, 1), &sc, &c, 2);
        let out = matched_filter(&f);
        assert_eq!(out.kind, ReceiverKind::Mf);
        assert!(out.samples.iter().all(|s| (s - 1.0).norm() < 1e-15));
    }

    #[test]
    fn mf_16qam_returns_symbol_power() {
        let c = cfg();
        let q = make_standard(StandardKind::Qam, 16, None).unwrap();
        let sc = Scenario::noiseless(&c, vec![unit_target(0.0)]).unwrap();
        let x = draw_payload(&q, &c, 4);
        let out = matched_filter(&apply_channel(&x, &sc, &c, 0));
        for (s, x) in out.samples.iter().zip(&x) {
            assert!((s.re - x.norm_sqr()).abs() < 1e-15 && s.im.abs() < 1e-15);
        }
    }

    #[test]
    fn rf_cancels_payload_exactly() {
        let c = cfg();
        let targets = vec![
            Target::new(10.2 / 50e6, Complex64::new(0.7, 0.1)),
            Target::new(31.7 / 50e6, Complex64::new(-0.2, 0.9)),
            Target::new(57.1 / 50e6, Complex64::new(0.4, -0.4)),
        ];
        let sc = Scenario::noiseless(&c, targets.clone()).unwrap();
        let h = channel_response(&c, &targets);
        for name in ["qpsk", "16qam", "64qam", "32apsk"] {
            let q = crate::constellation::Constellation::from_name_or_path(name).unwrap();
            let nu = q.moments().unwrap().nu_minus2;
            let out = reciprocal_filter(&apply_channel(&draw_payload(&q, &c, 8), &sc, &c, 0), nu)
                .unwrap();
            let err = out
                .samples
                .iter()
                .zip(&h)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "{name}: {err}");
            assert_eq!(out.noise_power_effective, 0.0);
        }
    }

    #[test]
    fn rf_rejects_zero_symbol() {
        let frame = Frame {
            tx_symbols: vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            rx_samples: vec![Complex64::new(1.0, 0.0); 2],
            noise_power: 1.0,
        };
        assert!(matches!(
            reciprocal_filter(&frame, 1.0),
            Err(IsacError::DegenerateSymbol { index: 1, .. })
        ));
    }

    #[test]
    fn effective_noise_power_bookkeeping() {
        let frame = Frame {
            tx_symbols: vec![Complex64::new(1.0, 0.0); 4],
            rx_samples: vec![Complex64::new(0.5, 0.0); 4],
            noise_power: 0.2,
        };
        assert_eq!(matched_filter(&frame).noise_power_effective, 0.2);
        let rf = reciprocal_filter(&frame, 17.0 / 9.0).unwrap();
        assert!((rf.noise_power_effective - 0.2 * 17.0 / 9.0).abs() < 1e-15);
    }
}
