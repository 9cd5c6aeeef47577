//! Numeric mass integrals over coordinate spheres and their `ρ → ∞` limit.
//!
//! `mass_at_radius` evaluates
//!
//! ```text
//! Γ(n/2) / (4(n-1)π^{n/2}) · (1/|Γ|) · ∫_{S_ρ} [g_{kℓ,k} - g_{kk,ℓ}] n^ℓ da
//! ```
//!
//! with a product Gauss rule on `S^{n-1}` (a Hopf-coordinate rule on `S³`).
//! `adm_mass` samples a radius schedule and extrapolates in `h = ρ^{-p}`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MassError, Result};
use crate::metrics::{half_integer_gamma, norm, unit_sphere_volume, MetricChart};

/// Sum in a fixed binary-tree order so results do not depend on thread count.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        len => {
            let (lo, hi) = values.split_at(len / 2);
            pairwise_sum(lo) + pairwise_sum(hi)
        }
    }
}

// ---------------------------------------------------------------------------
// Quadrature

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    /// Gauss rules in hyperspherical angles times a trapezoid rule in the azimuth.
    Product,
    /// `S³` in Hopf coordinates `(cos η e^{iξ₁}, sin η e^{iξ₂})`: Gauss–Legendre
    /// in `sin²η` times trapezoid rules in both phases.
    Hopf,
}

#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub n: usize,
    /// Spherical polynomials of degree `<= order` are integrated exactly.
    pub order: usize,
    pub kind: GridKind,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

/// Gauss rule for the weight `(1 - t²)^α` on `[-1, 1]` (Golub–Welsch).
pub fn gauss_gegenbauer(count: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(count >= 1 && alpha > -1.0);
    let mut jacobi = DMatrix::<f64>::zeros(count, count);
    for k in 1..count {
        let kf = k as f64;
        let b2 = kf * (kf + 2.0 * alpha) / ((2.0 * kf + 2.0 * alpha + 1.0) * (2.0 * kf + 2.0 * alpha - 1.0));
        jacobi[(k, k - 1)] = b2.sqrt();
        jacobi[(k - 1, k)] = b2.sqrt();
    }
    // ∫(1-t²)^α dt = √π Γ(α+1)/Γ(α+3/2)
    let mu0 = PI.sqrt() * gamma_half_or_whole(alpha + 1.0) / gamma_half_or_whole(alpha + 1.5);
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..count)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite nodes"));
    // symmetrize against eigen-solver round-off
    for i in 0..count / 2 {
        let j = count - 1 - i;
        let t = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-t, w);
        pairs[j] = (t, w);
    }
    if count % 2 == 1 {
        pairs[count / 2].0 = 0.0;
    }
    pairs.into_iter().unzip()
}

fn gamma_half_or_whole(x: f64) -> f64 {
    let twice = (2.0 * x).round();
    assert!((2.0 * x - twice).abs() < 1e-12 && twice >= 1.0, "Γ at {x}");
    half_integer_gamma(twice as usize)
}

impl QuadratureGrid {
    /// The specialised Hopf rule for `S³`, product rule otherwise.
    pub fn for_dimension(n: usize, order: usize) -> Result<Self> {
        if n == 4 {
            Self::hopf(order)
        } else {
            Self::product(n, order)
        }
    }

    pub fn product(n: usize, order: usize) -> Result<Self> {
        if n < 2 {
            return Err(MassError::InvalidParameter(format!("no sphere grid for n = {n}")));
        }
        let gauss = order / 2 + 1;
        let azimuth = order + 1;
        // polar factors: θ_j carries sin^{n-1-j}θ_j, i.e. (1-t²)^{(n-2-j)/2} in t = cos θ_j
        let polar: Vec<(Vec<f64>, Vec<f64>)> = (1..=n - 2)
            .map(|j| gauss_gegenbauer(gauss, (n - 2 - j) as f64 / 2.0))
            .collect();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut index = vec![0usize; n - 2];
        loop {
            let mut prefix = Vec::with_capacity(n);
            let mut scale = 1.0;
            let mut weight = 1.0;
            for (j, &i) in index.iter().enumerate() {
                let t = polar[j].0[i];
                prefix.push(scale * t);
                scale *= (1.0 - t * t).max(0.0).sqrt();
                weight *= polar[j].1[i];
            }
            for a in 0..azimuth {
                let phi = 2.0 * PI * a as f64 / azimuth as f64;
                let mut p = prefix.clone();
                p.push(scale * phi.cos());
                p.push(scale * phi.sin());
                points.push(p);
                weights.push(weight * 2.0 * PI / azimuth as f64);
            }
            // odometer over the polar indices
            let mut j = 0;
            while j < index.len() {
                index[j] += 1;
                if index[j] < gauss {
                    break;
                }
                index[j] = 0;
                j += 1;
            }
            if j == index.len() {
                break;
            }
        }
        Self::checked(Self { n, order, kind: GridKind::Product, points, weights })
    }

    pub fn hopf(order: usize) -> Result<Self> {
        let gauss = order / 2 + 1;
        let phases = order + 1;
        let (t, w) = gauss_gegenbauer(gauss, 0.0);
        let mut points = Vec::with_capacity(gauss * phases * phases);
        let mut weights = Vec::with_capacity(gauss * phases * phases);
        let dphase = 2.0 * PI / phases as f64;
        for (ti, wi) in t.iter().zip(&w) {
            let s = 0.5 * (ti + 1.0); // sin²η on [0, 1]
            let (c, sn) = ((1.0 - s).sqrt(), s.sqrt());
            for a in 0..phases {
                let xi1 = dphase * a as f64;
                for b in 0..phases {
                    let xi2 = dphase * b as f64;
                    points.push(vec![c * xi1.cos(), c * xi1.sin(), sn * xi2.cos(), sn * xi2.sin()]);
                    // da = ½ ds dξ₁ dξ₂ and ds = dt/2
                    weights.push(0.25 * wi * dphase * dphase);
                }
            }
        }
        Self::checked(Self { n: 4, order, kind: GridKind::Hopf, points, weights })
    }

    fn checked(grid: Self) -> Result<Self> {
        let volume = unit_sphere_volume(grid.n);
        let total = pairwise_sum(&grid.weights);
        if (total - volume).abs() > 1e-12 * volume {
            return Err(MassError::InvalidParameter(format!(
                "grid weights sum to {total}, sphere volume is {volume}"
            )));
        }
        let worst = grid.exactness_error();
        if worst > 1e-12 {
            return Err(MassError::InvalidParameter(format!(
                "grid of order {} misses a monomial by {worst:e}",
                grid.order
            )));
        }
        Ok(grid)
    }

    /// Largest error over all monomials `x^α`, `|α| <= order`, relative to the
    /// sphere volume.
    pub fn exactness_error(&self) -> f64 {
        let volume = unit_sphere_volume(self.n);
        let alphas = monomials(self.n, self.order);
        let mut sums = vec![0.0; alphas.len()];
        let mut powers = vec![vec![1.0; self.order + 1]; self.n];
        for (p, w) in self.points.iter().zip(&self.weights) {
            for (table, &x) in powers.iter_mut().zip(p) {
                for e in 1..=self.order {
                    table[e] = table[e - 1] * x;
                }
            }
            for (sum, alpha) in sums.iter_mut().zip(&alphas) {
                *sum += w * alpha.iter().zip(&powers).map(|(&e, table)| table[e]).product::<f64>();
            }
        }
        alphas
            .iter()
            .zip(&sums)
            .map(|(alpha, approx)| (approx - sphere_monomial_integral(alpha)).abs() / volume)
            .fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫_{S^{n-1}} f`, nodes evaluated in parallel and reduced in a fixed order.
    pub fn integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let terms = self
            .points
            .par_iter()
            .zip(self.weights.par_iter())
            .map(|(p, w)| f(p).map(|v| w * v))
            .collect::<Result<Vec<f64>>>()?;
        Ok(pairwise_sum(&terms))
    }
}

/// All exponent vectors of length `n` with total degree `<= order`.
pub fn monomials(n: usize, order: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur.push(e);
            rec(n, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, order, &mut Vec::with_capacity(n), &mut out);
    out
}

/// `∫_{S^{n-1}} x^α = 2 Π Γ((α_i+1)/2) / Γ((|α|+n)/2)`, zero if any exponent is odd.
pub fn sphere_monomial_integral(alpha: &[usize]) -> f64 {
    if alpha.iter().any(|e| e % 2 == 1) {
        return 0.0;
    }
    let total: usize = alpha.iter().sum();
    2.0 * alpha.iter().map(|&e| half_integer_gamma(e + 1)).product::<f64>()
        / half_integer_gamma(total + alpha.len())
}

// ---------------------------------------------------------------------------
// Mass at a radius

/// Normalization of the mass integral. The default is the standard one; the
/// other settings exist to check that a drifted convention is detected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassConvention {
    pub sign: f64,
    pub divide_by_gamma: bool,
}

impl Default for MassConvention {
    fn default() -> Self {
        Self { sign: 1.0, divide_by_gamma: true }
    }
}

impl MassConvention {
    fn factor(&self, chart: &MetricChart) -> f64 {
        let gamma = if self.divide_by_gamma { chart.gamma_order as f64 } else { 1.0 };
        self.sign * mass_normalization(chart.n) / gamma
    }
}

/// `Γ(n/2) / (4(n-1)π^{n/2})`; `1/16π` for `n = 3`.
pub fn mass_normalization(n: usize) -> f64 {
    half_integer_gamma(n) / (4.0 * (n as f64 - 1.0) * PI.powf(n as f64 / 2.0))
}

/// `[g_{kℓ,k} - g_{kk,ℓ}] n^ℓ` at `x`, `n = x/|x|`.
pub fn adm_integrand(chart: &MetricChart, x: &[f64]) -> Result<f64> {
    let dg = chart.dg(x)?;
    let r = norm(x);
    let mut total = 0.0;
    for l in 0..chart.n {
        let div: f64 = (0..chart.n).map(|k| dg[k][(k, l)]).sum();
        let trace_grad: f64 = (0..chart.n).map(|k| dg[l][(k, k)]).sum();
        total += (div - trace_grad) * x[l] / r;
    }
    Ok(total)
}

/// Normal derivative of `log √det g` at `x`: `½ tr(g⁻¹ ∂_n g)`.
pub fn logdet_normal_derivative(chart: &MetricChart, x: &[f64]) -> Result<f64> {
    let g = chart.g(x)?;
    let dg = chart.dg(x)?;
    let r = norm(x);
    let mut dn = DMatrix::zeros(chart.n, chart.n);
    for (l, d) in dg.iter().enumerate() {
        dn += d * (x[l] / r);
    }
    let chol = g
        .cholesky()
        .ok_or_else(|| MassError::InvalidParameter(format!("metric not positive definite at radius {r}")))?;
    Ok(0.5 * chol.solve(&dn).trace())
}

fn check_grid(chart: &MetricChart, rho: f64, grid: &QuadratureGrid) -> Result<()> {
    if grid.n != chart.n {
        return Err(MassError::GridDimensionMismatch { grid_sphere: grid.n - 1, chart_sphere: chart.n - 1 });
    }
    if !(rho > chart.inner_radius) {
        return Err(MassError::OutsideChart { radius: rho, inner_radius: chart.inner_radius });
    }
    Ok(())
}

fn scaled(node: &[f64], rho: f64) -> Vec<f64> {
    node.iter().map(|c| c * rho).collect()
}

pub fn mass_at_radius(chart: &MetricChart, rho: f64, grid: &QuadratureGrid) -> Result<f64> {
    mass_at_radius_with(chart, rho, grid, &MassConvention::default())
}

pub fn mass_at_radius_with(chart: &MetricChart, rho: f64, grid: &QuadratureGrid, convention: &MassConvention) -> Result<f64> {
    check_grid(chart, rho, grid)?;
    let flux = grid.integrate(|node| adm_integrand(chart, &scaled(node, rho)))?;
    Ok(convention.factor(chart) * rho.powi(chart.n as i32 - 1) * flux)
}

/// `-((m-1)!/(4(2m-1)π^m)) (1/|Γ|) ∫_{S_ρ} ∂_n log √det g da`.
pub fn logdet_mass_at_radius(chart: &MetricChart, rho: f64, grid: &QuadratureGrid, convention: &MassConvention) -> Result<f64> {
    if chart.complex_dim.is_none() {
        return Err(MassError::NotKahler);
    }
    check_grid(chart, rho, grid)?;
    let flux = grid.integrate(|node| logdet_normal_derivative(chart, &scaled(node, rho)))?;
    Ok(-convention.factor(chart) * rho.powi(chart.n as i32 - 1) * flux)
}

// ---------------------------------------------------------------------------
// Extrapolation

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Extrapolation {
    /// Polynomial extrapolation to `h = 0` in `h = ρ^{-p}` (Richardson table).
    Richardson { exponent: Option<f64> },
    /// Least-squares fit of `c₀ + c₁ρ^{-p}`.
    PowerLaw { exponent: Option<f64> },
    /// Report the outermost sample.
    LastSample,
}

impl Default for Extrapolation {
    fn default() -> Self {
        Extrapolation::Richardson { exponent: None }
    }
}

impl Extrapolation {
    fn exponent(&self, chart: &MetricChart) -> f64 {
        let declared = match *self {
            Extrapolation::Richardson { exponent } | Extrapolation::PowerLaw { exponent } => exponent,
            Extrapolation::LastSample => None,
        };
        declared.unwrap_or_else(|| 2.0 * chart.epsilon())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusSample {
    pub radius: f64,
    pub mass: f64,
    /// Best limit estimate using samples up to this radius.
    pub extrapolant: f64,
    /// `None` for the first row.
    pub error_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassEstimate {
    pub value: f64,
    pub samples: Vec<RadiusSample>,
    pub error_estimate: f64,
    pub converged: bool,
    /// Decay exponent `p` used for the extrapolation.
    pub exponent: f64,
}

impl MassEstimate {
    /// Convergence table with columns `rho,mass_at_radius,extrapolant,error_estimate`,
    /// 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rho,mass_at_radius,extrapolant,error_estimate\n");
        for s in &self.samples {
            let err = s.error_estimate.map(sig12).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", sig12(s.radius), sig12(s.mass), sig12(s.extrapolant), err));
        }
        out
    }

    /// Fitted decay exponent of `mass_at_radius - value` from the last three samples.
    pub fn fitted_exponent(&self) -> Option<f64> {
        let n = self.samples.len();
        if n < 3 {
            return None;
        }
        let s = &self.samples[n - 3..];
        estimate_decay_exponent(
            [s[0].radius, s[1].radius, s[2].radius],
            [s[0].mass, s[1].mass, s[2].mass],
        )
    }
}

/// Formats with 12 significant digits.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let v = round12(x);
    let exponent = v.abs().log10().floor();
    if (-5.0..15.0).contains(&exponent) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// Solves `(f₀-f₁)/(f₁-f₂) = (ρ₀^{-p}-ρ₁^{-p})/(ρ₁^{-p}-ρ₂^{-p})` for `p` by bisection.
pub fn estimate_decay_exponent(radii: [f64; 3], values: [f64; 3]) -> Option<f64> {
    let d1 = values[0] - values[1];
    let d2 = values[1] - values[2];
    if d1 == 0.0 || d2 == 0.0 || d1.signum() != d2.signum() {
        return None;
    }
    let target = d1 / d2;
    let model = |p: f64| {
        let h: Vec<f64> = radii.iter().map(|r| r.powf(-p)).collect();
        (h[0] - h[1]) / (h[1] - h[2]) - target
    };
    let (mut lo, mut hi) = (1e-3, 40.0);
    if model(lo).signum() == model(hi).signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if model(mid).signum() == model(lo).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Extrapolates `values` sampled at `radii` to `ρ = ∞`. Returns the per-row
/// extrapolants and error estimates; the last row is the result.
pub fn extrapolate(radii: &[f64], values: &[f64], method: Extrapolation, exponent: f64) -> Vec<(f64, Option<f64>)> {
    let h: Vec<f64> = radii.iter().map(|r| r.powf(-exponent)).collect();
    let count = values.len();
    match method {
        Extrapolation::LastSample => (0..count)
            .map(|i| (values[i], (i > 0).then(|| (values[i] - values[i - 1]).abs())))
            .collect(),
        Extrapolation::Richardson { .. } => {
            let mut table: Vec<Vec<f64>> = Vec::with_capacity(count);
            for i in 0..count {
                let mut row = vec![values[i]];
                for j in 1..=i {
                    let prev = &table[i - 1];
                    let ratio = h[i - j] / h[i];
                    row.push(row[j - 1] + (row[j - 1] - prev[j - 1]) / (ratio - 1.0));
                }
                table.push(row);
            }
            (0..count)
                .map(|i| {
                    let value = table[i][i];
                    (value, (i > 0).then(|| (value - table[i - 1][i - 1]).abs()))
                })
                .collect()
        }
        Extrapolation::PowerLaw { .. } => (0..count)
            .map(|i| {
                if i == 0 {
                    return (values[0], None);
                }
                let fit = least_squares_intercept(&h[..=i], &values[..=i]);
                let err = if i >= 2 {
                    Some((fit - least_squares_intercept(&h[..i], &values[..i])).abs())
                } else {
                    Some((values[i] - values[i - 1]).abs())
                };
                (fit, err)
            })
            .collect(),
    }
}

fn least_squares_intercept(h: &[f64], f: &[f64]) -> f64 {
    let n = h.len() as f64;
    let mh = h.iter().sum::<f64>() / n;
    let mf = f.iter().sum::<f64>() / n;
    let shh: f64 = h.iter().map(|x| (x - mh).powi(2)).sum();
    if shh == 0.0 {
        return mf;
    }
    let shf: f64 = h.iter().zip(f).map(|(x, y)| (x - mh) * (y - mf)).sum();
    mf - shf / shh * mh
}

// ---------------------------------------------------------------------------
// Pipelines

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub quad_order: usize,
    pub extrapolation: Extrapolation,
    /// Relative convergence tolerance on the error estimate.
    pub tolerance: f64,
    pub convention: MassConvention,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            quad_order: 8,
            extrapolation: Extrapolation::default(),
            tolerance: 1e-7,
            convention: MassConvention::default(),
        }
    }
}

/// Geometric schedule `ρ_k = ρ₀·2^{k/2}`.
pub fn geometric_schedule(rho0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| rho0 * 2f64.powf(k as f64 / 2.0)).collect()
}

/// Eight radii starting well outside the chart boundary.
pub fn default_schedule(chart: &MetricChart) -> Vec<f64> {
    geometric_schedule((10.0 * chart.inner_radius).max(10.0), 8)
}

fn check_schedule(chart: &MetricChart, schedule: &[f64]) -> Result<()> {
    if schedule.len() < 3 {
        return Err(MassError::InvalidParameter("radius schedule needs at least 3 radii".into()));
    }
    if schedule.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(MassError::InvalidParameter("radius schedule must be increasing".into()));
    }
    if !(schedule[0] > chart.inner_radius) {
        return Err(MassError::OutsideChart { radius: schedule[0], inner_radius: chart.inner_radius });
    }
    Ok(())
}

fn run_pipeline<F>(chart: &MetricChart, schedule: &[f64], config: &PipelineConfig, at_radius: F) -> Result<MassEstimate>
where
    F: Fn(f64, &QuadratureGrid) -> Result<f64> + Sync,
{
    check_schedule(chart, schedule)?;
    let grid = QuadratureGrid::for_dimension(chart.n, config.quad_order)?;
    let values = schedule
        .par_iter()
        .map(|&rho| at_radius(rho, &grid))
        .collect::<Result<Vec<f64>>>()?;
    let exponent = config.extrapolation.exponent(chart);
    let rows = extrapolate(schedule, &values, config.extrapolation, exponent);
    let samples: Vec<RadiusSample> = schedule
        .iter()
        .zip(&values)
        .zip(&rows)
        .map(|((&radius, &mass), &(extrapolant, error_estimate))| RadiusSample { radius, mass, extrapolant, error_estimate })
        .collect();
    let (value, error) = *rows.last().expect("schedule is non-empty");
    let error_estimate = error.unwrap_or(f64::MAX);
    Ok(MassEstimate {
        value,
        samples,
        error_estimate,
        converged: error_estimate.is_finite() && error_estimate <= config.tolerance * value.abs().max(1.0),
        exponent,
    })
}

/// Coordinate ADM mass. Non-convergence is reported through
/// `MassEstimate::converged`, never as an error.
pub fn adm_mass(chart: &MetricChart, schedule: &[f64], config: &PipelineConfig) -> Result<MassEstimate> {
    run_pipeline(chart, schedule, config, |rho, grid| mass_at_radius_with(chart, rho, grid, &config.convention))
}

/// Mass from `-((m-1)!/(4(2m-1)π^m)) lim ∫ ⋆d log √det g`, valid in holomorphic
/// (hence harmonic) coordinates of a Kähler metric.
pub fn kahler_logdet_mass(chart: &MetricChart, schedule: &[f64], config: &PipelineConfig) -> Result<MassEstimate> {
    if chart.complex_dim.is_none() {
        return Err(MassError::NotKahler);
    }
    run_pipeline(chart, schedule, config, |rho, grid| logdet_mass_at_radius(chart, rho, grid, &config.convention))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{
        euclidean_chart, gibbons_hawking_chart, radial_kahler_chart, schwarzschild_chart, GibbonsHawkingData,
        RadialKahlerChart, RadialPotential,
    };

    #[test]
    fn gauss_gegenbauer_moments() {
        for &alpha in &[0.0, 0.5, 1.0, 1.5, 2.0] {
            let (t, w) = gauss_gegenbauer(6, alpha);
            // ∫ t^{2k} (1-t²)^α dt = Γ(k+½)Γ(α+1)/Γ(k+α+3/2)
            for k in 0..6 {
                let approx: f64 = t.iter().zip(&w).map(|(x, wi)| wi * x.powi(2 * k)).sum();
                let exact = gamma_half_or_whole(k as f64 + 0.5) * gamma_half_or_whole(alpha + 1.0)
                    / gamma_half_or_whole(k as f64 + alpha + 1.5);
                assert!((approx - exact).abs() < 1e-13 * exact, "α={alpha} k={k}");
            }
        }
    }

    #[test]
    fn grids_are_exact_up_to_order() {
        for n in 3..=6 {
            for order in [2, 5, 8] {
                let grid = QuadratureGrid::product(n, order).unwrap();
                assert!(grid.exactness_error() < 1e-12);
                let total: f64 = grid.weights().iter().sum();
                assert!((total - unit_sphere_volume(n)).abs() < 1e-12 * total);
            }
        }
        for order in [4, 9, 16] {
            assert!(QuadratureGrid::hopf(order).unwrap().exactness_error() < 1e-12);
        }
        assert_eq!(QuadratureGrid::for_dimension(4, 6).unwrap().kind, GridKind::Hopf);
    }

    #[test]
    fn grid_is_not_exact_beyond_order() {
        // x₁^{2N} with N Gauss points is the first miss
        let grid = QuadratureGrid::product(3, 4).unwrap();
        let alpha = [6, 0, 0];
        let approx: f64 = grid.points().iter().zip(grid.weights()).map(|(p, w)| w * p[0].powi(6)).sum();
        assert!((approx - sphere_monomial_integral(&alpha)).abs() > 1e-6);
    }

    #[test]
    fn euclidean_mass_is_zero_everywhere() {
        for n in 3..=6 {
            let chart = euclidean_chart(n).unwrap();
            let grid = QuadratureGrid::for_dimension(n, 4).unwrap();
            for rho in [1.0, 10.0, 1e3] {
                assert_eq!(mass_at_radius(&chart, rho, &grid).unwrap(), 0.0);
            }
            let est = adm_mass(&chart, &default_schedule(&chart), &PipelineConfig::default()).unwrap();
            assert_eq!(est.value, 0.0);
            assert!(est.converged);
        }
    }

    #[test]
    fn schwarzschild_integrand_leading_order() {
        let chart = schwarzschild_chart(3, 2.0).unwrap();
        for rho in [100.0, 1000.0] {
            let v = adm_integrand(&chart, &[rho, 0.0, 0.0]).unwrap();
            let leading = 4.0 / (rho * rho);
            assert!((v - leading).abs() < 3.0 * leading / rho);
        }
    }

    #[test]
    fn schwarzschild_finite_radius_matches_closed_form() {
        // integrand is radial: (n-1)A/(ρ^{n-1} - Aρ), so mass(ρ) = (A/2)/(1 - Aρ^{2-n})
        for (n, a) in [(3, 2.0), (4, 1.0), (5, 4.0), (6, 2.0)] {
            let chart = schwarzschild_chart(n, a).unwrap();
            let grid = QuadratureGrid::for_dimension(n, 4).unwrap();
            for rho in [5.0, 100.0] {
                let exact = 0.5 * a / (1.0 - a * (rho as f64).powi(2 - n as i32));
                let got = mass_at_radius(&chart, rho, &grid).unwrap();
                assert!((got - exact).abs() < 1e-12 * exact, "n={n} ρ={rho}: {got} vs {exact}");
            }
        }
        let chart = schwarzschild_chart(3, 2.0).unwrap();
        let grid = QuadratureGrid::product(3, 4).unwrap();
        assert!((mass_at_radius(&chart, 100.0, &grid).unwrap() - 1.0 / 0.98).abs() < 1e-12);
    }

    #[test]
    fn schwarzschild_extrapolates_to_half_a() {
        for (n, a) in [(3, 2.0), (5, 4.0)] {
            let chart = schwarzschild_chart(n, a).unwrap();
            let est = adm_mass(&chart, &default_schedule(&chart), &PipelineConfig::default()).unwrap();
            assert!((est.value - a / 2.0).abs() < 1e-6, "n={n}: {}", est.value);
            assert!(est.converged);
            assert_eq!(est.samples.len(), 8);
            let p = est.fitted_exponent().unwrap();
            assert!((p - (n as f64 - 2.0)).abs() < 0.15 * (n as f64 - 2.0), "p={p}");
        }
    }

    #[test]
    fn power_law_fit_also_converges_with_far_radii() {
        let chart = schwarzschild_chart(4, 1.0).unwrap();
        let config = PipelineConfig { extrapolation: Extrapolation::PowerLaw { exponent: None }, ..Default::default() };
        let est = adm_mass(&chart, &geometric_schedule(1e3, 8), &config).unwrap();
        assert!((est.value - 0.5).abs() < 1e-6);
    }

    #[test]
    fn non_convergence_is_flagged() {
        let chart = schwarzschild_chart(3, 2.0).unwrap();
        let config = PipelineConfig { extrapolation: Extrapolation::LastSample, ..Default::default() };
        let est = adm_mass(&chart, &geometric_schedule(10.0, 4), &config).unwrap();
        assert!(!est.converged);
        assert!(est.error_estimate > 0.0);
    }

    #[test]
    fn bad_inputs() {
        let chart = schwarzschild_chart(3, 2.0).unwrap();
        let grid4 = QuadratureGrid::for_dimension(4, 4).unwrap();
        assert!(matches!(mass_at_radius(&chart, 10.0, &grid4), Err(MassError::GridDimensionMismatch { .. })));
        let grid3 = QuadratureGrid::for_dimension(3, 4).unwrap();
        assert!(matches!(mass_at_radius(&chart, 1.0, &grid3), Err(MassError::OutsideChart { .. })));
        let cfg = PipelineConfig::default();
        assert!(adm_mass(&chart, &[10.0, 20.0], &cfg).is_err());
        assert!(adm_mass(&chart, &[10.0, 30.0, 20.0], &cfg).is_err());
        assert!(adm_mass(&chart, &[1.0, 20.0, 30.0], &cfg).is_err());
        assert_eq!(kahler_logdet_mass(&chart, &[10.0, 20.0, 30.0], &cfg).unwrap_err(), MassError::NotKahler);
    }

    #[test]
    fn gibbons_hawking_two_centers_small_at_finite_radius() {
        let data = GibbonsHawkingData { centers: vec![[0.3, 0.1, -0.2], [-0.4, 0.2, 0.3]], string_direction: [0.0, 0.0, 1.0] };
        let chart = gibbons_hawking_chart(&data).unwrap();
        let grid = QuadratureGrid::for_dimension(4, 8).unwrap();
        let spread = data.spread();
        let v = mass_at_radius(&chart, 50.0 * spread, &grid).unwrap();
        assert!(v.abs() < 0.05, "{v}");
    }

    #[test]
    fn gamma_normalization_is_exact_factor() {
        let data = GibbonsHawkingData { centers: vec![[0.5, 0.1, -0.2], [-0.4, 0.3, 0.3], [0.0, 0.6, 0.1]], string_direction: [0.0, 1.0, 0.0] };
        let chart = gibbons_hawking_chart(&data).unwrap();
        let grid = QuadratureGrid::for_dimension(4, 6).unwrap();
        let with_k = mass_at_radius(&chart, 6.0, &grid).unwrap();
        let with_one = mass_at_radius(&chart.with_gamma_order(1), 6.0, &grid).unwrap();
        assert!(with_one != 0.0);
        assert!((with_one - 3.0 * with_k).abs() <= 1e-15 * with_one.abs());
    }

    #[test]
    fn burns_chart_pipelines_agree() {
        let a = 1.0;
        let chart = radial_kahler_chart(RadialKahlerChart { m: 2, potential: RadialPotential::LogShift { a }, inner_radius: 0.0 }).unwrap();
        let cfg = PipelineConfig::default();
        let schedule = default_schedule(&chart);
        let adm = adm_mass(&chart, &schedule, &cfg).unwrap();
        let logdet = kahler_logdet_mass(&chart, &schedule, &cfg).unwrap();
        assert!((adm.value - logdet.value).abs() < 1e-9);
        assert!(adm.converged && logdet.converged);
    }

    #[test]
    fn refinement_is_stable() {
        let chart = radial_kahler_chart(RadialKahlerChart { m: 2, potential: RadialPotential::InverseShift { b: 0.7 }, inner_radius: 1.0 }).unwrap();
        let g1 = QuadratureGrid::for_dimension(4, 6).unwrap();
        let g2 = QuadratureGrid::for_dimension(4, 12).unwrap();
        let v1 = mass_at_radius(&chart, 3.0, &g1).unwrap();
        let v2 = mass_at_radius(&chart, 3.0, &g2).unwrap();
        assert!((v1 - v2).abs() < 1e-12);
    }

    #[test]
    fn pairwise_sum_is_order_fixed() {
        let v: Vec<f64> = (0..1000).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        assert_eq!(pairwise_sum(&v), pairwise_sum(&v.clone()));
        assert!((pairwise_sum(&v) - v.iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn csv_has_twelve_digit_columns() {
        let est = MassEstimate {
            value: 1.0,
            samples: vec![
                RadiusSample { radius: 10.0, mass: 1.0 / 3.0, extrapolant: 1.0 / 3.0, error_estimate: None },
                RadiusSample { radius: 20.0, mass: 0.25, extrapolant: 0.2, error_estimate: Some(0.1) },
            ],
            error_estimate: 0.1,
            converged: false,
            exponent: 1.0,
        };
        let csv = est.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "rho,mass_at_radius,extrapolant,error_estimate");
        assert_eq!(lines[1], "10,0.333333333333,0.333333333333,");
        assert_eq!(sig12(2.0 / 3.0), "0.666666666667");
        assert_eq!(sig12(2.5e-14), "2.5e-14");
        assert_eq!(sig12(-1.0 / 3.0 * 1e20), "-3.33333333333e19");
        assert_eq!(sig12(123456.0), "123456");
    }

    #[test]
    fn decay_exponent_recovered() {
        let radii = [10.0, 20.0, 40.0];
        let vals = radii.map(|r: f64| 2.0 + 3.0 * r.powf(-1.7));
        assert!((estimate_decay_exponent(radii, vals).unwrap() - 1.7).abs() < 1e-9);
        assert!(estimate_decay_exponent(radii, [1.0, 1.0, 1.0]).is_none());
    }
}
