//! Delay estimators working on a filtered frame: an oversampled IDFT
//! periodogram with log-parabolic peak refinement, and a subspace matrix
//! pencil.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{IsacError, Result};
use crate::receiver::ReceiverOutput;
use crate::sigmodel::{OfdmConfig, SPEED_OF_LIGHT};

pub const DEFAULT_OVERSAMPLING: usize = 16;

/// Minimum spacing between picked peaks, in units of `1/B`.
pub const PEAK_SEPARATION_RESOLUTIONS: f64 = 0.5;

/// `sigma_k / sigma_1` below which the Hankel matrix is declared rank deficient.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Periodogram,
    MatrixPencil,
}

impl EstimatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorKind::Periodogram => "periodogram",
            EstimatorKind::MatrixPencil => "pencil",
        }
    }
}

/// How the pencil's shift-invariance equation is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PencilVariant {
    /// Total least squares on the stacked shifted subspaces.
    #[default]
    Tls,
    /// Pseudo-inverse of the unshifted subspace.
    LeastSquares,
}

/// Uniform delay grid over `[0, 1/df)` with `N * oversampling` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayGrid {
    cfg: OfdmConfig,
    oversampling: usize,
}

impl DelayGrid {
    pub fn new(cfg: OfdmConfig, oversampling: usize) -> Result<Self> {
        if oversampling == 0 {
            return Err(IsacError::InvalidConfig(
                "oversampling must be positive".into(),
            ));
        }
        Ok(Self { cfg, oversampling })
    }

    pub fn oversampling(&self) -> usize {
        self.oversampling
    }

    pub fn len(&self) -> usize {
        self.cfg.n_subcarriers() * self.oversampling
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `1 / (df * N * oversampling)`.
    pub fn spacing_s(&self) -> f64 {
        (self.cfg.subcarrier_spacing_hz() * self.len() as f64).recip()
    }

    pub fn delay_at(&self, index: f64) -> f64 {
        index * self.spacing_s()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayEstimates {
    pub delays_s: Vec<f64>,
    pub method: EstimatorKind,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn inverse_fft(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

/// `|sum_n samples_n e^{+j 2 pi n df tau}|^2` on every grid point, via a
/// zero-padded unnormalized inverse DFT.
pub fn delay_spectrum(out: &ReceiverOutput, grid: &DelayGrid) -> Vec<f64> {
    let len = grid.len();
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    let n = out.samples.len().min(len);
    buf[..n].copy_from_slice(&out.samples[..n]);
    inverse_fft(len).process(&mut buf);
    buf.iter().map(|v| v.norm_sqr()).collect()
}

fn circular_bin_distance(a: usize, b: usize, len: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(len - d)
}

/// Offset of the vertex of the parabola through three equally spaced points,
/// fitted on the log of the spectrum, in bins relative to the center.
fn parabolic_offset(left: f64, center: f64, right: f64) -> f64 {
    let (a, b, c) = if left > 0.0 && center > 0.0 && right > 0.0 {
        (left.ln(), center.ln(), right.ln())
    } else {
        (left, center, right)
    };
    let denom = a - 2.0 * b + c;
    if denom >= 0.0 || !denom.is_finite() {
        return 0.0;
    }
    (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
}

/// Picks the `k` strongest separated local maxima of the delay spectrum and
/// refines each with a three-point log-parabolic fit.
pub fn estimate_periodogram(
    out: &ReceiverOutput,
    k: usize,
    grid: &DelayGrid,
) -> Result<DelayEstimates> {
    let spectrum = delay_spectrum(out, grid);
    let len = spectrum.len();
    let mut maxima: Vec<usize> = (0..len)
        .filter(|&g| {
            let here = spectrum[g];
            here > 0.0 && here >= spectrum[(g + len - 1) % len] && here > spectrum[(g + 1) % len]
        })
        .collect();
    maxima.sort_by(|&a, &b| spectrum[b].total_cmp(&spectrum[a]).then(a.cmp(&b)));

    // One delay resolution is `oversampling` bins.
    let min_bins = PEAK_SEPARATION_RESOLUTIONS * grid.oversampling() as f64;
    let mut picked: Vec<usize> = Vec::with_capacity(k);
    for g in maxima {
        if picked.len() == k {
            break;
        }
        if picked
            .iter()
            .all(|&p| circular_bin_distance(p, g, len) as f64 >= min_bins)
        {
            picked.push(g);
        }
    }
    if picked.len() < k {
        return Err(IsacError::PeakDeficit {
            found: picked.len(),
            wanted: k,
        });
    }

    let period = grid.delay_at(len as f64);
    let mut delays_s: Vec<f64> = picked
        .into_iter()
        .map(|g| {
            let offset = parabolic_offset(
                spectrum[(g + len - 1) % len],
                spectrum[g],
                spectrum[(g + 1) % len],
            );
            wrap_delay(grid.delay_at(g as f64 + offset), period)
        })
        .collect();
    delays_s.sort_by(f64::total_cmp);
    Ok(DelayEstimates {
        delays_s,
        method: EstimatorKind::Periodogram,
    })
}

fn wrap_delay(tau: f64, period: f64) -> f64 {
    let w = tau.rem_euclid(period);
    if w >= period {
        0.0
    } else {
        w
    }
}

/// Default pencil parameter `floor(N / 3)`.
pub fn default_pencil_param(n: usize) -> usize {
    n / 3
}

/// Maps a pole `lambda = e^{-j 2 pi df tau}` to its delay in `[0, 1/df)`.
pub fn pole_to_delay(lambda: Complex64, cfg: &OfdmConfig) -> f64 {
    let df = cfg.subcarrier_spacing_hz();
    wrap_delay(-lambda.arg() / (2.0 * PI * df), cfg.max_delay_s())
}

fn eigenvalues(m: DMatrix<Complex64>) -> Vec<Complex64> {
    if m.nrows() == 1 {
        return vec![m[(0, 0)]];
    }
    m.schur()
        .eigenvalues()
        .map(|v| v.iter().copied().collect())
        .expect("complex Schur form is triangular")
}

/// Right singular vectors of `m`, ordered by decreasing singular value.
fn sorted_svd_v(m: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let svd = m.svd(false, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let v = svd.v_t.expect("requested V").adjoint();
    DMatrix::from_fn(v.nrows(), order.len(), |r, c| v[(r, order[c])])
}

/// Ratio below which the Gram eigenvalues are too close to rounding noise to
/// decide rank, and the singular values are recomputed directly.
const GRAM_RANK_GUARD: f64 = 1e-6;

/// `Y^H Y` for the `rows x cols` Hankel matrix `Y[i][j] = y[i + j]`. Entries
/// along each diagonal differ by one term in, one term out.
fn hankel_gram(y: &[Complex64], rows: usize, cols: usize) -> DMatrix<Complex64> {
    let mut g = DMatrix::zeros(cols, cols);
    for b in 0..cols {
        g[(0, b)] = (0..rows).map(|i| y[i].conj() * y[i + b]).sum::<Complex64>();
    }
    for a in 1..cols {
        for b in a..cols {
            g[(a, b)] = g[(a - 1, b - 1)] - y[a - 1].conj() * y[b - 1]
                + y[a - 1 + rows].conj() * y[b - 1 + rows];
        }
        for b in 0..a {
            g[(a, b)] = g[(b, a)].conj();
        }
    }
    g
}

/// Rank-`k` signal subspace of the Hankel matrix: its top right singular
/// vectors, taken from the Hermitian eigendecomposition of `Y^H Y`.
fn signal_subspace(
    hankel: &DMatrix<Complex64>,
    samples: &[Complex64],
    k: usize,
) -> Result<DMatrix<Complex64>> {
    let gram = hankel_gram(samples, hankel.nrows(), hankel.ncols());
    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let largest = eig.eigenvalues[order[0]].max(0.0);
    let ratio_of = |i: usize| -> f64 {
        if largest > 0.0 {
            (eig.eigenvalues[order[i]].max(0.0) / largest).sqrt()
        } else {
            0.0
        }
    };
    if ratio_of(k - 1) < GRAM_RANK_GUARD {
        let sv = hankel.singular_values();
        let mut sv: Vec<f64> = sv.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        for (index, s) in sv.iter().enumerate().take(k) {
            let ratio = if sv[0] > 0.0 { s / sv[0] } else { 0.0 };
            if ratio < RANK_TOL {
                return Err(IsacError::RankDeficit { index, ratio });
            }
        }
    }
    Ok(DMatrix::from_fn(eig.eigenvectors.nrows(), k, |r, c| {
        eig.eigenvectors[(r, order[c])]
    }))
}

/// Matrix-pencil delay estimate from the Hankel matrix of the filtered samples.
pub fn estimate_matrix_pencil(
    out: &ReceiverOutput,
    cfg: &OfdmConfig,
    k: usize,
    pencil_param: usize,
    variant: PencilVariant,
) -> Result<DelayEstimates> {
    let n = out.samples.len();
    let l = pencil_param;
    if k == 0 || l < k || l + k > n {
        return Err(IsacError::InvalidConfig(format!(
            "pencil parameter {l} must satisfy {k} <= L <= {}",
            n.saturating_sub(k)
        )));
    }
    let hankel = DMatrix::from_fn(n - l, l + 1, |i, j| out.samples[i + j]);
    // Right singular vectors span conj([1, lambda, ..., lambda^L]); after
    // conjugation the subspace is shift-invariant with the poles as eigenvalues.
    let vs = signal_subspace(&hankel, &out.samples, k)?.map(|v| v.conj());
    let v1 = vs.rows(0, l).into_owned();
    let v2 = vs.rows(1, l).into_owned();

    let poles = match variant {
        PencilVariant::LeastSquares => {
            let pinv = v1
                .pseudo_inverse(0.0)
                .map_err(|e| IsacError::InvalidConfig(e.to_string()))?;
            eigenvalues(pinv * v2)
        }
        PencilVariant::Tls => {
            let mut stacked = DMatrix::zeros(l, 2 * k);
            stacked.columns_mut(0, k).copy_from(&v1);
            stacked.columns_mut(k, k).copy_from(&v2);
            let v = sorted_svd_v(stacked);
            let v12 = v.view((0, k), (k, k)).into_owned();
            let v22 = v.view((k, k), (k, k)).into_owned();
            let v22_inv = v22.try_inverse().ok_or(IsacError::RankDeficit {
                index: k,
                ratio: 0.0,
            })?;
            eigenvalues(-(v12 * v22_inv))
        }
    };

    let mut delays_s: Vec<f64> = poles.into_iter().map(|p| pole_to_delay(p, cfg)).collect();
    delays_s.sort_by(f64::total_cmp);
    Ok(DelayEstimates {
        delays_s,
        method: EstimatorKind::MatrixPencil,
    })
}

/// Greedy minimum-distance matching: repeatedly pairs the globally closest
/// unpaired (true, estimate). Output is in the order of `true_delays`.
pub fn associate(true_delays: &[f64], est: &DelayEstimates) -> Vec<(f64, f64)> {
    let mut candidates: Vec<(f64, usize, usize)> =
        Vec::with_capacity(true_delays.len() * est.delays_s.len());
    for (i, t) in true_delays.iter().enumerate() {
        for (j, e) in est.delays_s.iter().enumerate() {
            candidates.push(((t - e).abs(), i, j));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut true_used = vec![false; true_delays.len()];
    let mut est_used = vec![false; est.delays_s.len()];
    let mut matched: Vec<Option<usize>> = vec![None; true_delays.len()];
    for (_, i, j) in candidates {
        if !true_used[i] && !est_used[j] {
            true_used[i] = true;
            est_used[j] = true;
            matched[i] = Some(j);
        }
    }
    matched
        .into_iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (true_delays[i], est.delays_s[j])))
        .collect()
}

/// Monostatic range `c * tau / 2`.
pub fn delay_to_range(tau_s: f64) -> f64 {
    SPEED_OF_LIGHT * tau_s / 2.0
}
