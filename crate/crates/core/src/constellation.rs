//! Modulation constellations and the moment statistics that drive sensing
//! accuracy.
//!
//! Every [`Constellation`] is zero-mean and unit-power. The fourth moment
//! `mu4 = mean(|s|^4)` sets the matched-filter sidelobe level and the inverse
//! second moment `nu_minus2 = mean(|s|^-2)` sets the reciprocal-filter noise
//! gain. Both are at least one, with equality only on the unit circle.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{IsacError, Result};

/// Absolute tolerance for the zero-mean / unit-power / zero pseudo-variance checks.
pub const INVARIANT_TOL: f64 = 1e-9;

/// Magnitudes below this are treated as a zero symbol.
pub const DEGENERATE_MAGNITUDE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StandardKind {
    Psk,
    Qam,
    Apsk,
}

/// An ordered symbol alphabet. Index order is the data word.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    label: String,
    symbols: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub mu4: f64,
    pub nu_minus2: f64,
    pub d_min: f64,
}

#[derive(Serialize, Deserialize)]
struct ConstellationFile {
    label: String,
    symbols: Vec<[f64; 2]>,
}

fn mean(symbols: &[Complex64]) -> Complex64 {
    symbols.iter().sum::<Complex64>() / symbols.len() as f64
}

fn mean_power(symbols: &[Complex64]) -> f64 {
    symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / symbols.len() as f64
}

fn pseudo_variance(symbols: &[Complex64]) -> Complex64 {
    symbols.iter().map(|s| s * s).sum::<Complex64>() / symbols.len() as f64
}

/// Checks the shape invariants shared by every constellation: size, finiteness,
/// no zero symbol, zero mean, unit power. `require_proper` adds `E[s^2] = 0`.
fn check_invariants(symbols: &[Complex64], tol: f64, require_proper: bool) -> Result<()> {
    if symbols.len() < 2 {
        return Err(IsacError::InvariantViolation(format!(
            "need at least 2 symbols, got {}",
            symbols.len()
        )));
    }
    if let Some(i) = symbols
        .iter()
        .position(|s| !s.re.is_finite() || !s.im.is_finite())
    {
        return Err(IsacError::InvariantViolation(format!(
            "symbol {i} is not finite"
        )));
    }
    if let Some((index, s)) = symbols
        .iter()
        .enumerate()
        .find(|(_, s)| s.norm() < DEGENERATE_MAGNITUDE)
    {
        return Err(IsacError::DegenerateSymbol {
            index,
            magnitude: s.norm(),
        });
    }
    let m = mean(symbols);
    if m.norm() > tol {
        return Err(IsacError::InvariantViolation(format!(
            "mean {m} is not zero"
        )));
    }
    let p = mean_power(symbols);
    if (p - 1.0).abs() > tol {
        return Err(IsacError::InvariantViolation(format!(
            "mean power {p} is not 1"
        )));
    }
    if require_proper {
        let pv = pseudo_variance(symbols);
        if pv.norm() > tol {
            return Err(IsacError::InvariantViolation(format!(
                "pseudo-variance {pv} is not zero"
            )));
        }
    }
    Ok(())
}

impl Constellation {
    /// Builds a constellation, enforcing the full invariant set at [`INVARIANT_TOL`].
    pub fn new(label: impl Into<String>, symbols: Vec<Complex64>) -> Result<Self> {
        Self::with_tolerance(label, symbols, INVARIANT_TOL)
    }

    /// Same as [`Constellation::new`] with a caller-chosen check tolerance.
    pub fn with_tolerance(
        label: impl Into<String>,
        symbols: Vec<Complex64>,
        tol: f64,
    ) -> Result<Self> {
        check_invariants(&symbols, tol, true)?;
        Ok(Self {
            label: label.into(),
            symbols,
        })
    }

    /// Centers and scales an arbitrary symbol set to zero mean and unit power.
    ///
    /// Pseudo-variance is left as is: `E[s^2] = 0` is a design-time property and
    /// a real-valued alphabet such as BPSK stays improper. Use
    /// [`Constellation::is_proper`] to check it.
    pub fn normalize(symbols: &[Complex64]) -> Result<Self> {
        if symbols.len() < 2 {
            return Err(IsacError::InvariantViolation(
                "need at least 2 symbols".into(),
            ));
        }
        if symbols
            .iter()
            .any(|s| !s.re.is_finite() || !s.im.is_finite())
        {
            return Err(IsacError::InvariantViolation(
                "non-finite input symbol".into(),
            ));
        }
        let m = mean(symbols);
        let centered: Vec<Complex64> = symbols.iter().map(|s| s - m).collect();
        let p = mean_power(&centered);
        if p < DEGENERATE_MAGNITUDE * DEGENERATE_MAGNITUDE {
            return Err(IsacError::InvariantViolation(
                "all symbols are identical".into(),
            ));
        }
        if let Some((index, s)) = centered
            .iter()
            .enumerate()
            .find(|(_, s)| s.norm() < DEGENERATE_MAGNITUDE * p.sqrt())
        {
            return Err(IsacError::DegenerateSymbol {
                index,
                magnitude: s.norm(),
            });
        }
        let scale = p.sqrt().recip();
        let scaled: Vec<Complex64> = centered.iter().map(|s| s * scale).collect();
        check_invariants(&scaled, INVARIANT_TOL, false)?;
        Ok(Self {
            label: "custom".into(),
            symbols: scaled,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn pseudo_variance(&self) -> Complex64 {
        pseudo_variance(&self.symbols)
    }

    pub fn is_proper(&self) -> bool {
        self.pseudo_variance().norm() <= INVARIANT_TOL
    }

    /// Multiplies every symbol by `e^{j theta}`.
    pub fn rotated(&self, theta: f64) -> Self {
        let r = Complex64::from_polar(1.0, theta);
        Self {
            label: self.label.clone(),
            symbols: self.symbols.iter().map(|s| s * r).collect(),
        }
    }

    pub fn moments(&self) -> Result<MomentReport> {
        compute_moments(self)
    }

    /// Resolves a short name (`qpsk`, `8psk`, `16qam`, `64qam`, `32apsk`) or,
    /// failing that, a path to a constellation JSON file.
    pub fn from_name_or_path(spec: &str) -> Result<Self> {
        let lower = spec.to_ascii_lowercase();
        let parse_size = |suffix: &str| -> Option<usize> {
            lower
                .strip_suffix(suffix)
                .and_then(|n| n.parse::<usize>().ok())
        };
        if lower == "qpsk" {
            return make_standard(StandardKind::Psk, 4, None);
        }
        if let Some(m) = parse_size("psk") {
            return make_standard(StandardKind::Psk, m, None);
        }
        if let Some(m) = parse_size("qam") {
            return make_standard(StandardKind::Qam, m, None);
        }
        if let Some(m) = parse_size("apsk") {
            return make_standard(StandardKind::Apsk, m, None);
        }
        if Path::new(spec).exists() {
            return load(spec);
        }
        Err(IsacError::UnsupportedConstellation(spec.to_string()))
    }
}

/// Ring radius ratio used when an APSK build is requested without one.
pub const DEFAULT_APSK_RINGS: [f64; 4] = [1.0, 2.0, 3.0, 4.0];

/// Builds a standard PSK, square QAM or multi-ring APSK alphabet at unit power.
pub fn make_standard(
    kind: StandardKind,
    m: usize,
    apsk_ring_ratio: Option<&[f64]>,
) -> Result<Constellation> {
    let unsupported = || IsacError::UnsupportedConstellation(format!("{kind:?} with m = {m}"));
    let (label, raw) = match kind {
        StandardKind::Psk => {
            // BPSK is real-valued and cannot have zero pseudo-variance.
            if m < 4 || !m.is_power_of_two() {
                return Err(unsupported());
            }
            let symbols = (0..m)
                .map(|i| Complex64::from_polar(1.0, PI * (2 * i + 1) as f64 / m as f64))
                .collect::<Vec<_>>();
            let label = if m == 4 {
                "qpsk".to_string()
            } else {
                format!("{m}psk")
            };
            (label, symbols)
        }
        StandardKind::Qam => {
            let side = (m as f64).sqrt().round() as usize;
            if side * side != m || side < 2 || !side.is_multiple_of(2) {
                return Err(unsupported());
            }
            let levels: Vec<f64> = (0..side)
                .map(|i| (2 * i) as f64 - (side - 1) as f64)
                .collect();
            let mut symbols = Vec::with_capacity(m);
            for &re in &levels {
                for &im in &levels {
                    symbols.push(Complex64::new(re, im));
                }
            }
            (format!("{m}qam"), symbols)
        }
        StandardKind::Apsk => {
            let ratio = apsk_ring_ratio.unwrap_or(&DEFAULT_APSK_RINGS);
            let rings = ratio.len();
            if rings == 0 || !m.is_multiple_of(rings) {
                return Err(IsacError::RingRatioMismatch { m, got: rings });
            }
            let per_ring = m / rings;
            if per_ring < 3 || ratio.iter().any(|r| !r.is_finite() || *r <= 0.0) {
                return Err(unsupported());
            }
            let step = 2.0 * PI / per_ring as f64;
            let mut symbols = Vec::with_capacity(m);
            for (r, &radius) in ratio.iter().enumerate() {
                // Ring r is rotated by half a slot relative to ring r - 1.
                let offset = r as f64 * step / 2.0;
                for i in 0..per_ring {
                    symbols.push(Complex64::from_polar(radius, offset + i as f64 * step));
                }
            }
            (format!("{m}apsk"), symbols)
        }
    };
    let scale = mean_power(&raw).sqrt().recip();
    let symbols = raw.into_iter().map(|s| s * scale).collect();
    Constellation::new(label, symbols)
}

/// Computes `mu4`, `nu_minus2` and the minimum pairwise distance.
pub fn compute_moments(c: &Constellation) -> Result<MomentReport> {
    let symbols = c.symbols();
    if let Some((index, s)) = symbols
        .iter()
        .enumerate()
        .find(|(_, s)| s.norm() < DEGENERATE_MAGNITUDE)
    {
        return Err(IsacError::DegenerateSymbol {
            index,
            magnitude: s.norm(),
        });
    }
    let m = symbols.len() as f64;
    let mu4 = symbols.iter().map(|s| s.norm_sqr().powi(2)).sum::<f64>() / m;
    let nu_minus2 = symbols.iter().map(|s| s.norm_sqr().recip()).sum::<f64>() / m;
    Ok(MomentReport {
        mu4,
        nu_minus2,
        d_min: min_distance(symbols),
    })
}

/// Minimum Euclidean distance over distinct index pairs.
pub fn min_distance(symbols: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in symbols.iter().enumerate() {
        for b in &symbols[i + 1..] {
            best = best.min((a - b).norm());
        }
    }
    best
}

pub fn save(c: &Constellation, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = ConstellationFile {
        label: c.label.clone(),
        symbols: c.symbols.iter().map(|s| [s.re, s.im]).collect(),
    };
    let text = serde_json::to_string_pretty(&file).map_err(|source| IsacError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(|source| IsacError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load(path: impl AsRef<Path>) -> Result<Constellation> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| IsacError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: ConstellationFile =
        serde_json::from_str(&text).map_err(|source| IsacError::Json {
            path: path.to_path_buf(),
            source,
        })?;
    let symbols = file
        .symbols
        .iter()
        .map(|&[re, im]| Complex64::new(re, im))
        .collect();
    Constellation::new(file.label, symbols)
}
