//! Sensing-aware geometric constellation shaping.
//!
//! Minimizes `rho * f_s(S) - (1 - rho) * d` over `m` complex symbols and the
//! epigraph variable `d`, subject to `|s_i - s_j|^2 >= d^2`, `sum s = 0`,
//! `sum s^2 = 0` and `sum |s|^2 = m`. `f_s` is `mu4` for the matched filter
//! and `nu_minus2` for the reciprocal filter.
//!
//! Each restart is solved by a PHR augmented Lagrangian whose subproblems use
//! Newton steps on the exact Hessian, regularized until it factors.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::constellation::{compute_moments, min_distance, Constellation};
use crate::error::{IsacError, Result};
use crate::exec::{derive_seed, Execution};
use crate::sigmodel::complex_noise;

pub const DEFAULT_RESTARTS: usize = 64;
pub const MAX_OUTER_ITERATIONS: usize = 500;
const MAX_INNER_ITERATIONS: usize = 100;

/// Lower bound on `|s|^2` under the reciprocal-filter metric.
pub const RF_MAGNITUDE_FLOOR: f64 = 1e-4;

/// Objectives closer than this are tied and go to the secondary rule.
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SensingMetric {
    /// `mu4 = E|s|^4`.
    MfMu4,
    /// `nu_minus2 = E|s|^-2`.
    RfNu2,
}

impl SensingMetric {
    pub fn as_str(&self) -> &'static str {
        match self {
            SensingMetric::MfMu4 => "mf",
            SensingMetric::RfNu2 => "rf",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignProblem {
    pub m: usize,
    pub rho: f64,
    pub metric: SensingMetric,
    pub restarts: usize,
    pub seed: u64,
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
}

impl DesignProblem {
    pub fn new(m: usize, rho: f64, metric: SensingMetric) -> Self {
        Self {
            m,
            rho,
            metric,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            feasibility_tol: 1e-6,
            optimality_tol: 1e-8,
        }
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// `m = 2` is rejected: the only zero-mean, unit-power pair is antipodal,
    /// which violates `sum s^2 = 0`.
    pub fn validate(&self) -> Result<()> {
        if self.m < 3 {
            return Err(IsacError::InvalidConfig(format!(
                "m = {} cannot satisfy zero mean and zero pseudo-variance with distinct symbols",
                self.m
            )));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(IsacError::InvalidConfig(format!(
                "rho = {} is outside [0, 1]",
                self.rho
            )));
        }
        if self.restarts == 0 {
            return Err(IsacError::InvalidConfig("restarts must be positive".into()));
        }
        if !(self.feasibility_tol > 0.0 && self.optimality_tol > 0.0) {
            return Err(IsacError::InvalidConfig(
                "tolerances must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Largest violation of each constraint family at the returned point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    /// `|sum s|`.
    pub mean: f64,
    /// `|sum s^2|`.
    pub pseudo_variance: f64,
    /// `|sum |s|^2 - m|`.
    pub power: f64,
    /// `max(0, d^2 - |s_i - s_j|^2)` for the solver's `d`.
    pub distance: f64,
    /// `max(0, floor - |s|^2)`; zero for the MF metric.
    pub magnitude: f64,
    /// Infinity norm of the Lagrangian gradient at termination.
    pub kkt: f64,
}

impl Residuals {
    pub fn feasibility(&self) -> f64 {
        self.mean
            .max(self.pseudo_variance)
            .max(self.power)
            .max(self.distance)
            .max(self.magnitude)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult {
    pub constellation: Constellation,
    pub objective: f64,
    /// Achieved minimum pairwise distance of `constellation`.
    pub d_min: f64,
    pub sensing_metric_value: f64,
    pub restart_index_of_best: usize,
    pub residuals: Residuals,
}

/// Outcome of one local solve, before selection.
#[derive(Debug, Clone)]
struct RestartOutcome {
    index: usize,
    symbols: Vec<Complex64>,
    d: f64,
    residuals: Residuals,
    objective: f64,
    moment_sum: f64,
}

/// The nonlinear program in the stacked variable `z = [x; y; d]`.
struct Nlp {
    m: usize,
    rho: f64,
    metric: SensingMetric,
}

/// Sparse gradient of one inequality: up to five nonzeros.
type SparseGrad = Vec<(usize, f64)>;

impl Nlp {
    fn dim(&self) -> usize {
        2 * self.m + 1
    }

    fn n_ineq(&self) -> usize {
        let pairs = self.m * (self.m - 1) / 2;
        match self.metric {
            SensingMetric::MfMu4 => pairs,
            SensingMetric::RfNu2 => pairs + self.m,
        }
    }

    fn sensing(&self, z: &DVector<f64>) -> f64 {
        let m = self.m;
        let total: f64 = (0..m)
            .map(|i| {
                let r2 = z[i] * z[i] + z[m + i] * z[m + i];
                match self.metric {
                    SensingMetric::MfMu4 => r2 * r2,
                    SensingMetric::RfNu2 => r2.recip(),
                }
            })
            .sum();
        total / m as f64
    }

    fn objective(&self, z: &DVector<f64>) -> f64 {
        self.rho * self.sensing(z) - (1.0 - self.rho) * z[2 * self.m]
    }

    fn add_objective_derivatives(
        &self,
        z: &DVector<f64>,
        g: &mut DVector<f64>,
        h: Option<&mut DMatrix<f64>>,
    ) {
        let m = self.m;
        let w = self.rho / m as f64;
        g[2 * m] -= 1.0 - self.rho;
        let mut h = h;
        for i in 0..m {
            let (x, y) = (z[i], z[m + i]);
            let r2 = x * x + y * y;
            // f(r2) per symbol; d/dx = 2x f', d2/dx dy = 4xy f'' (+ 2 f' on the diagonal).
            let (f1, f2) = match self.metric {
                SensingMetric::MfMu4 => (2.0 * r2, 2.0),
                SensingMetric::RfNu2 => (-r2.powi(-2), 2.0 * r2.powi(-3)),
            };
            g[i] += w * 2.0 * x * f1;
            g[m + i] += w * 2.0 * y * f1;
            if let Some(h) = h.as_deref_mut() {
                h[(i, i)] += w * (2.0 * f1 + 4.0 * x * x * f2);
                h[(m + i, m + i)] += w * (2.0 * f1 + 4.0 * y * y * f2);
                let off = w * 4.0 * x * y * f2;
                h[(i, m + i)] += off;
                h[(m + i, i)] += off;
            }
        }
    }

    /// `[sum x, sum y, sum (x^2 - y^2), sum 2xy, sum (x^2 + y^2) - m]`.
    fn equalities(&self, z: &DVector<f64>) -> [f64; 5] {
        let m = self.m;
        let mut h = [0.0; 5];
        for i in 0..m {
            let (x, y) = (z[i], z[m + i]);
            h[0] += x;
            h[1] += y;
            h[2] += x * x - y * y;
            h[3] += 2.0 * x * y;
            h[4] += x * x + y * y;
        }
        h[4] -= m as f64;
        h
    }

    fn equality_gradients(&self, z: &DVector<f64>) -> [DVector<f64>; 5] {
        let m = self.m;
        let n = self.dim();
        let mut grads: [DVector<f64>; 5] = std::array::from_fn(|_| DVector::zeros(n));
        for i in 0..m {
            let (x, y) = (z[i], z[m + i]);
            grads[0][i] = 1.0;
            grads[1][m + i] = 1.0;
            grads[2][i] = 2.0 * x;
            grads[2][m + i] = -2.0 * y;
            grads[3][i] = 2.0 * y;
            grads[3][m + i] = 2.0 * x;
            grads[4][i] = 2.0 * x;
            grads[4][m + i] = 2.0 * y;
        }
        grads
    }

    /// Adds `c * hess(h_e)` for equality `e`; the first two are linear.
    fn add_equality_hessian(&self, e: usize, c: f64, h: &mut DMatrix<f64>) {
        let m = self.m;
        for i in 0..m {
            match e {
                2 => {
                    h[(i, i)] += 2.0 * c;
                    h[(m + i, m + i)] -= 2.0 * c;
                }
                3 => {
                    h[(i, m + i)] += 2.0 * c;
                    h[(m + i, i)] += 2.0 * c;
                }
                4 => {
                    h[(i, i)] += 2.0 * c;
                    h[(m + i, m + i)] += 2.0 * c;
                }
                _ => {}
            }
        }
    }

    /// Calls `visit(index, value, gradient, hessian_kind)` for every
    /// inequality `g >= 0`: pair distances first, then magnitude floors.
    fn for_each_inequality<F: FnMut(usize, f64, &SparseGrad, Ineq)>(
        &self,
        z: &DVector<f64>,
        mut visit: F,
    ) {
        let m = self.m;
        let d = z[2 * m];
        let mut grad: SparseGrad = Vec::with_capacity(5);
        let mut index = 0;
        for i in 0..m {
            for j in i + 1..m {
                let dx = z[i] - z[j];
                let dy = z[m + i] - z[m + j];
                grad.clear();
                grad.extend_from_slice(&[
                    (i, 2.0 * dx),
                    (j, -2.0 * dx),
                    (m + i, 2.0 * dy),
                    (m + j, -2.0 * dy),
                    (2 * m, -2.0 * d),
                ]);
                visit(index, dx * dx + dy * dy - d * d, &grad, Ineq::Pair(i, j));
                index += 1;
            }
        }
        if self.metric == SensingMetric::RfNu2 {
            for i in 0..m {
                let (x, y) = (z[i], z[m + i]);
                grad.clear();
                grad.extend_from_slice(&[(i, 2.0 * x), (m + i, 2.0 * y)]);
                visit(
                    index,
                    x * x + y * y - RF_MAGNITUDE_FLOOR,
                    &grad,
                    Ineq::Floor(i),
                );
                index += 1;
            }
        }
    }

    fn add_inequality_hessian(&self, kind: Ineq, c: f64, h: &mut DMatrix<f64>) {
        let m = self.m;
        match kind {
            Ineq::Pair(i, j) => {
                for (a, b) in [(i, j), (m + i, m + j)] {
                    h[(a, a)] += 2.0 * c;
                    h[(b, b)] += 2.0 * c;
                    h[(a, b)] -= 2.0 * c;
                    h[(b, a)] -= 2.0 * c;
                }
                h[(2 * m, 2 * m)] -= 2.0 * c;
            }
            Ineq::Floor(i) => {
                h[(i, i)] += 2.0 * c;
                h[(m + i, m + i)] += 2.0 * c;
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Ineq {
    Pair(usize, usize),
    Floor(usize),
}

struct Multipliers {
    lambda: [f64; 5],
    nu: Vec<f64>,
    mu: f64,
}

impl Nlp {
    /// PHR augmented Lagrangian, with gradient and optionally Hessian.
    fn augmented(
        &self,
        z: &DVector<f64>,
        mult: &Multipliers,
        derivatives: bool,
        want_hessian: bool,
    ) -> (f64, DVector<f64>, Option<DMatrix<f64>>) {
        let n = self.dim();
        let mu = mult.mu;
        let mut value = self.objective(z);
        let mut grad = DVector::zeros(n);
        let mut hess = want_hessian.then(|| DMatrix::zeros(n, n));
        let h = self.equalities(z);
        for (e, he) in h.iter().enumerate() {
            value += mult.lambda[e] * he + 0.5 * mu * he * he;
        }
        if derivatives {
            self.add_objective_derivatives(z, &mut grad, hess.as_mut());
            let grads = self.equality_gradients(z);
            for e in 0..5 {
                let c = mult.lambda[e] + mu * h[e];
                grad.axpy(c, &grads[e], 1.0);
                if let Some(hm) = hess.as_mut() {
                    hm.ger(mu, &grads[e], &grads[e], 1.0);
                    self.add_equality_hessian(e, c, hm);
                }
            }
        }
        self.for_each_inequality(z, |idx, g, sg, kind| {
            let nu = mult.nu[idx];
            let c = nu - mu * g;
            if c > 0.0 {
                value += (c * c - nu * nu) / (2.0 * mu);
                if derivatives {
                    for &(a, ga) in sg {
                        grad[a] -= c * ga;
                    }
                    if let Some(hm) = hess.as_mut() {
                        for &(a, ga) in sg {
                            for &(b, gb) in sg {
                                hm[(a, b)] += mu * ga * gb;
                            }
                        }
                        self.add_inequality_hessian(kind, -c, hm);
                    }
                }
            } else {
                value -= nu * nu / (2.0 * mu);
            }
        });
        (value, grad, hess)
    }

    fn residuals(&self, z: &DVector<f64>) -> (Residuals, Vec<f64>) {
        let h = self.equalities(z);
        let mut r = Residuals {
            mean: h[0].hypot(h[1]),
            pseudo_variance: h[2].hypot(h[3]),
            power: h[4].abs(),
            ..Residuals::default()
        };
        let mut g = vec![0.0; self.n_ineq()];
        self.for_each_inequality(z, |idx, value, _, kind| {
            g[idx] = value;
            match kind {
                Ineq::Pair(..) => r.distance = r.distance.max(-value),
                Ineq::Floor(_) => r.magnitude = r.magnitude.max(-value),
            }
        });
        (r, g)
    }
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Regularized Newton with Armijo backtracking on the augmented Lagrangian.
/// Returns the final gradient norm.
fn minimize_inner(nlp: &Nlp, z: &mut DVector<f64>, mult: &Multipliers, omega: f64) -> f64 {
    let n = nlp.dim();
    let (mut value, mut grad, mut hess) = nlp.augmented(z, mult, true, true);
    let mut gnorm = inf_norm(&grad);
    for _ in 0..MAX_INNER_ITERATIONS {
        if gnorm <= omega {
            break;
        }
        let h = hess.take().expect("hessian requested");
        let scale = h.diagonal().iter().fold(1.0f64, |a, x| a.max(x.abs()));
        let mut tau = 0.0;
        let step = loop {
            let mut shifted = h.clone();
            for i in 0..n {
                shifted[(i, i)] += tau;
            }
            if let Some(chol) = shifted.cholesky() {
                break chol.solve(&(-&grad));
            }
            tau = if tau == 0.0 {
                1e-10 * scale
            } else {
                tau * 10.0
            };
        };
        let slope = grad.dot(&step);
        if slope >= 0.0 {
            break;
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = &*z + t * &step;
            let (v, _, _) = nlp.augmented(&trial, mult, false, false);
            if v <= value + 1e-4 * t * slope {
                *z = trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        (value, grad, hess) = nlp.augmented(z, mult, true, true);
        gnorm = inf_norm(&grad);
    }
    gnorm
}

/// Gaussian cloud scaled to `sum |s|^2 = m`, with `d` at its achieved MED.
fn initial_point(nlp: &Nlp, seed: u64) -> DVector<f64> {
    let m = nlp.m;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cloud: Vec<Complex64> = (0..m)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    let power: f64 = cloud.iter().map(|s| s.norm_sqr()).sum::<f64>() / m as f64;
    let scale = power.sqrt().recip();
    cloud.iter_mut().for_each(|s| *s *= scale);
    let mut z = DVector::zeros(nlp.dim());
    for (i, s) in cloud.iter().enumerate() {
        z[i] = s.re;
        z[m + i] = s.im;
    }
    z[2 * m] = min_distance(&cloud);
    z
}

fn solve_restart(
    nlp: &Nlp,
    p: &DesignProblem,
    index: usize,
) -> std::result::Result<RestartOutcome, f64> {
    let mut z = initial_point(nlp, derive_seed(p.seed, &[index as u64]));
    let mut mult = Multipliers {
        lambda: [0.0; 5],
        nu: vec![0.0; nlp.n_ineq()],
        mu: 10.0,
    };
    let mut omega = 1e-3;
    let mut prev_feas = f64::INFINITY;
    let mut best_feas = f64::INFINITY;
    let mut final_kkt = f64::INFINITY;
    let mut feasible = false;

    for _ in 0..MAX_OUTER_ITERATIONS {
        let kkt = minimize_inner(nlp, &mut z, &mult, omega);
        let (res, g) = nlp.residuals(&z);
        let h = nlp.equalities(&z);
        for (lambda, he) in mult.lambda.iter_mut().zip(h) {
            *lambda += mult.mu * he;
        }
        for (nu, gi) in mult.nu.iter_mut().zip(&g) {
            *nu = (*nu - mult.mu * gi).max(0.0);
        }
        let feas = res.feasibility();
        best_feas = best_feas.min(feas);
        final_kkt = kkt;
        feasible = feas <= p.feasibility_tol;
        if feasible && kkt <= p.optimality_tol {
            break;
        }
        if feas > 0.25 * prev_feas {
            mult.mu = (mult.mu * 10.0).min(1e10);
        }
        prev_feas = feas;
        omega = (omega * 0.1).max(p.optimality_tol);
    }
    if !feasible {
        return Err(best_feas);
    }

    let m = nlp.m;
    let d = z[2 * m];
    let raw: Vec<Complex64> = (0..m).map(|i| Complex64::new(z[i], z[m + i])).collect();
    let symbols = canonicalize(&raw);
    let (mut residuals, _) = nlp.residuals(&z);
    residuals.kkt = final_kkt;
    let c = Constellation::with_tolerance("designed", symbols.clone(), p.feasibility_tol)
        .map_err(|_| best_feas)?;
    let moments = compute_moments(&c).map_err(|_| best_feas)?;
    let sensing = match p.metric {
        SensingMetric::MfMu4 => moments.mu4,
        SensingMetric::RfNu2 => moments.nu_minus2,
    };
    Ok(RestartOutcome {
        index,
        symbols,
        d,
        residuals,
        objective: p.rho * sensing - (1.0 - p.rho) * moments.d_min,
        moment_sum: moments.mu4 + moments.nu_minus2,
    })
}

/// Exact recentering and rescaling, then the global phase fixed by putting
/// the largest-magnitude symbol (first on ties) on the positive real axis.
fn canonicalize(symbols: &[Complex64]) -> Vec<Complex64> {
    let m = symbols.len() as f64;
    let mean = symbols.iter().sum::<Complex64>() / m;
    let centered: Vec<Complex64> = symbols.iter().map(|s| s - mean).collect();
    let power = centered.iter().map(|s| s.norm_sqr()).sum::<f64>() / m;
    let scale = power.sqrt().recip();
    let mut lead = 0;
    for (i, s) in centered.iter().enumerate() {
        if s.norm() > centered[lead].norm() {
            lead = i;
        }
    }
    let phase = Complex64::from_polar(scale, -centered[lead].arg());
    let mut out: Vec<Complex64> = centered.iter().map(|s| s * phase).collect();
    out[lead].im = 0.0;
    out
}

/// `true` if `a` beats `b`: lower objective, then lower `mu4 + nu_minus2`,
/// then lower restart index.
fn better(a: &RestartOutcome, b: &RestartOutcome) -> bool {
    if (a.objective - b.objective).abs() > TIE_TOL {
        return a.objective < b.objective;
    }
    if (a.moment_sum - b.moment_sum).abs() > TIE_TOL {
        return a.moment_sum < b.moment_sum;
    }
    a.index < b.index
}

pub fn design(p: &DesignProblem) -> Result<DesignResult> {
    design_with(p, Execution::default())
}

pub fn design_with(p: &DesignProblem, exec: Execution) -> Result<DesignResult> {
    p.validate()?;
    let nlp = Nlp {
        m: p.m,
        rho: p.rho,
        metric: p.metric,
    };
    let outcomes = exec.map(p.restarts, |i| solve_restart(&nlp, p, i));

    let mut best: Option<RestartOutcome> = None;
    let mut best_residual = f64::INFINITY;
    for outcome in outcomes {
        match outcome {
            Ok(o) => {
                if best.as_ref().is_none_or(|b| better(&o, b)) {
                    best = Some(o);
                }
            }
            Err(r) => best_residual = best_residual.min(r),
        }
    }
    let best = best.ok_or(IsacError::Infeasible { best_residual })?;
    log::debug!(
        "restart {} wins with objective {:.9}, d = {:.9}",
        best.index,
        best.objective,
        best.d
    );

    let label = format!("designed-{}-{}-rho{}", p.m, p.metric.as_str(), p.rho);
    let constellation = Constellation::with_tolerance(label, best.symbols, p.feasibility_tol)?;
    let moments = compute_moments(&constellation)?;
    Ok(DesignResult {
        sensing_metric_value: match p.metric {
            SensingMetric::MfMu4 => moments.mu4,
            SensingMetric::RfNu2 => moments.nu_minus2,
        },
        d_min: moments.d_min,
        objective: best.objective,
        restart_index_of_best: best.index,
        residuals: best.residuals,
        constellation,
    })
}

#[derive(Debug)]
pub struct ParetoPoint {
    pub rho: f64,
    pub outcome: Result<DesignResult>,
}

/// Designs one constellation per `rho`, sorted by `rho`. A failed point is
/// kept as its error and the sweep continues.
pub fn pareto_sweep(
    m: usize,
    metric: SensingMetric,
    rhos: &[f64],
    restarts: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<ParetoPoint>> {
    if rhos.is_empty() {
        return Err(IsacError::InvalidConfig("rho list is empty".into()));
    }
    if let Some(r) = rhos.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(IsacError::InvalidConfig(format!(
            "rho = {r} is outside [0, 1]"
        )));
    }
    let mut rhos = rhos.to_vec();
    rhos.sort_by(f64::total_cmp);
    Ok(rhos
        .into_iter()
        .map(|rho| {
            let p = DesignProblem::new(m, rho, metric)
                .with_restarts(restarts)
                .with_seed(seed);
            ParetoPoint {
                rho,
                outcome: design_with(&p, exec),
            }
        })
        .collect())
}

pub const MIN_SER_SYMBOLS: usize = 10_000;

/// Symbol-error rate of minimum-distance detection over AWGN with total
/// noise variance `10^(-snr_db / 10)` (unit symbol energy).
pub fn evaluate_ser(c: &Constellation, snr_db: f64, n_symbols: usize, seed: u64) -> Result<f64> {
    if n_symbols < MIN_SER_SYMBOLS {
        return Err(IsacError::InvalidConfig(format!(
            "need at least {MIN_SER_SYMBOLS} symbols, got {n_symbols}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sent_idx: Vec<usize> = (0..n_symbols)
        .map(|_| rng.random_range(0..c.len()))
        .collect();
    let noise = complex_noise(&mut rng, 10f64.powf(-snr_db / 10.0), n_symbols);
    let symbols = c.symbols();
    let errors = sent_idx
        .iter()
        .zip(&noise)
        .filter(|(&i, z)| {
            let r = symbols[i] + *z;
            nearest(symbols, r) != i
        })
        .count();
    Ok(errors as f64 / n_symbols as f64)
}

fn nearest(symbols: &[Complex64], r: Complex64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, s) in symbols.iter().enumerate() {
        let d = (s - r).norm_sqr();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}
