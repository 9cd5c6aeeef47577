//! Explicit metric families in asymptotic Cartesian coordinates.
//!
//! A [`MetricChart`] describes one end of a manifold: the real dimension, the
//! order of the group `Γ` the end is a quotient by, the radius outside which
//! the chart is valid and a component evaluator. Evaluators may supply
//! analytic first derivatives; otherwise central differences are used.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{MassError, Result};

/// Component evaluator behind a chart. Points passed in already satisfy the
/// chart's radius check.
pub trait ChartModel: Send + Sync {
    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>>;

    /// `∂_ℓ g_{jk}` as one matrix per coordinate direction `ℓ`.
    fn metric_derivatives(&self, _x: &[f64]) -> Option<Result<Vec<DMatrix<f64>>>> {
        None
    }
}

#[derive(Clone)]
pub struct MetricChart {
    pub name: String,
    /// Real dimension.
    pub n: usize,
    /// `|Γ|`; the mass integral runs over `S_ρ/Γ`.
    pub gamma_order: u32,
    pub inner_radius: f64,
    /// Declared fall-off exponent `τ` of `g - δ`.
    pub falloff: f64,
    /// `Some(m)` when the coordinates are holomorphic for a Kähler metric of
    /// complex dimension `m`.
    pub complex_dim: Option<usize>,
    model: Arc<dyn ChartModel>,
}

impl fmt::Debug for MetricChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricChart")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("gamma_order", &self.gamma_order)
            .field("inner_radius", &self.inner_radius)
            .field("falloff", &self.falloff)
            .field("complex_dim", &self.complex_dim)
            .finish()
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl MetricChart {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        gamma_order: u32,
        inner_radius: f64,
        falloff: f64,
        model: Arc<dyn ChartModel>,
    ) -> Self {
        Self {
            name: name.into(),
            n,
            gamma_order,
            inner_radius,
            falloff,
            complex_dim: None,
            model,
        }
    }

    pub fn kahler(mut self, m: usize) -> Self {
        self.complex_dim = Some(m);
        self
    }

    /// Same evaluator with a different quotient order. Used to check the `1/|Γ|`
    /// normalization.
    pub fn with_gamma_order(&self, gamma_order: u32) -> Self {
        Self { gamma_order, ..self.clone() }
    }

    /// Drops the analytic derivative evaluator so `dg` falls back to finite differences.
    pub fn without_analytic_derivatives(&self) -> Self {
        Self {
            model: Arc::new(MetricOnly(self.model.clone())),
            ..self.clone()
        }
    }

    pub fn has_analytic_derivatives(&self, x: &[f64]) -> bool {
        self.model.metric_derivatives(x).is_some()
    }

    /// `ε = τ - (n-2)/2`; the mass integral converges like `ρ^{-2ε}`.
    pub fn epsilon(&self) -> f64 {
        self.falloff - (self.n as f64 - 2.0) / 2.0
    }

    fn check_domain(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(MassError::InvalidParameter(format!(
                "point has {} coordinates, chart dimension is {}",
                x.len(),
                self.n
            )));
        }
        let radius = norm(x);
        if !(radius > self.inner_radius) {
            return Err(MassError::OutsideChart { radius, inner_radius: self.inner_radius });
        }
        Ok(())
    }

    pub fn g(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_domain(x)?;
        self.model.metric(x)
    }

    pub fn dg(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        self.check_domain(x)?;
        match self.model.metric_derivatives(x) {
            Some(result) => result,
            None => self.dg_finite_difference(x),
        }
    }

    /// Central differences with step `h = max(1e-4·|x|, 1e-6)`.
    pub fn dg_finite_difference(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let h = (1e-4 * norm(x)).max(1e-6);
        self.dg_central(x, h)
    }

    pub fn dg_central(&self, x: &[f64], h: f64) -> Result<Vec<DMatrix<f64>>> {
        self.check_domain(x)?;
        let mut out = Vec::with_capacity(self.n);
        let mut p = x.to_vec();
        for l in 0..self.n {
            p[l] = x[l] + h;
            let plus = self.g(&p)?;
            p[l] = x[l] - h;
            let minus = self.g(&p)?;
            p[l] = x[l];
            out.push((plus - minus) / (2.0 * h));
        }
        Ok(out)
    }
}

struct MetricOnly(Arc<dyn ChartModel>);

impl ChartModel for MetricOnly {
    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.0.metric(x)
    }
}

// ---------------------------------------------------------------------------
// Euclidean

struct Euclidean {
    n: usize,
}

impl ChartModel for Euclidean {
    fn metric(&self, _x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(DMatrix::identity(self.n, self.n))
    }

    fn metric_derivatives(&self, _x: &[f64]) -> Option<Result<Vec<DMatrix<f64>>>> {
        Some(Ok(vec![DMatrix::zeros(self.n, self.n); self.n]))
    }
}

/// Flat `ℝⁿ`. The declared fall-off is nominal since `g - δ` vanishes.
pub fn euclidean_chart(n: usize) -> Result<MetricChart> {
    check_dim(n)?;
    let chart = MetricChart::new("euclidean", n, 1, 0.0, (n as f64 - 2.0).max(1.0), Arc::new(Euclidean { n }));
    Ok(if n % 2 == 0 { chart.kahler(n / 2) } else { chart })
}

fn check_dim(n: usize) -> Result<()> {
    if n < 3 {
        return Err(MassError::InvalidParameter(format!("dimension must be >= 3, got {n}")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Schwarzschild

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchwarzschildSlice {
    pub n: usize,
    #[serde(rename = "A")]
    pub a: f64,
}

impl SchwarzschildSlice {
    /// `M = A/2`.
    pub fn expected_mass(&self) -> f64 {
        self.a / 2.0
    }
}

struct Schwarzschild {
    n: usize,
    a: f64,
}

impl Schwarzschild {
    /// `φ(ρ) = A / (ρⁿ - Aρ²)` so that `g = δ + φ x xᵀ`, and `φ'(ρ)`.
    fn profile(&self, rho: f64) -> Result<(f64, f64)> {
        let n = self.n as i32;
        let lapse = rho.powi(n - 2) - self.a;
        if lapse <= 0.0 {
            return Err(MassError::OutsideChart {
                radius: rho,
                inner_radius: self.a.max(0.0).powf(1.0 / (self.n as f64 - 2.0)),
            });
        }
        let denom = rho * rho * lapse;
        let phi = self.a / denom;
        let ddenom = n as f64 * rho.powi(n - 1) - 2.0 * self.a * rho;
        Ok((phi, -self.a * ddenom / (denom * denom)))
    }
}

impl ChartModel for Schwarzschild {
    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let (phi, _) = self.profile(norm(x))?;
        Ok(DMatrix::from_fn(self.n, self.n, |j, k| {
            (j == k) as u8 as f64 + phi * x[j] * x[k]
        }))
    }

    fn metric_derivatives(&self, x: &[f64]) -> Option<Result<Vec<DMatrix<f64>>>> {
        let rho = norm(x);
        Some(self.profile(rho).map(|(phi, dphi)| {
            (0..self.n)
                .map(|l| {
                    DMatrix::from_fn(self.n, self.n, |j, k| {
                        dphi * x[l] / rho * x[j] * x[k]
                            + phi * ((j == l) as u8 as f64 * x[k] + (k == l) as u8 as f64 * x[j])
                    })
                })
                .collect()
        }))
    }
}

/// Spatial slice of the `(n+1)`-dimensional Schwarzschild metric in Cartesian
/// coordinates: `g_{jk} = δ_{jk} + (Aρ^{2-n}/(1-Aρ^{2-n})) x_j x_k/ρ²`.
pub fn schwarzschild_chart(n: usize, a: f64) -> Result<MetricChart> {
    check_dim(n)?;
    if !a.is_finite() {
        return Err(MassError::InvalidParameter("A must be finite".into()));
    }
    let inner = a.max(0.0).powf(1.0 / (n as f64 - 2.0));
    Ok(MetricChart::new(
        "schwarzschild",
        n,
        1,
        inner,
        n as f64 - 2.0,
        Arc::new(Schwarzschild { n, a }),
    ))
}

/// Angular frequency of a circular orbit of radius `ρ` about a Newtonian
/// source of mass `M` in `n` dimensions: `ω² = (n-2)M/ρⁿ`.
pub fn circular_orbit_frequency(n: usize, mass: f64, rho: f64) -> Result<f64> {
    orbit(n, (n as f64 - 2.0) * mass, rho)
}

/// The same orbit read off the Schwarzschild metric: `ω² = ((n-2)/2)·A/ρⁿ`.
pub fn schwarzschild_orbit_frequency(n: usize, a: f64, rho: f64) -> Result<f64> {
    orbit(n, (n as f64 - 2.0) / 2.0 * a, rho)
}

fn orbit(n: usize, coefficient: f64, rho: f64) -> Result<f64> {
    check_dim(n)?;
    if !(rho > 0.0) {
        return Err(MassError::InvalidParameter(format!("orbit radius must be positive, got {rho}")));
    }
    let omega2 = coefficient / rho.powi(n as i32);
    if omega2 < 0.0 {
        return Err(MassError::InvalidParameter(format!("negative ω² = {omega2}")));
    }
    Ok(omega2.sqrt())
}

// ---------------------------------------------------------------------------
// Gibbons–Hawking

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbonsHawkingData {
    pub centers: Vec<[f64; 3]>,
    pub string_direction: [f64; 3],
}

/// Vector potential of the monopole `V = 1/|x|` with its Dirac string along
/// `{λd : λ >= 0}`: `A = (d × x)/(r(r - d·x))`, `curl A = ∇(1/r)`.
/// Returns the value and the Jacobian `∂_j A_i`.
pub fn monopole_potential(x: &Vector3<f64>, d: &Vector3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
    let r = x.norm();
    let dx = d.dot(x);
    let num = d.cross(x);
    let den = r * (r - dx);
    let dnum = Matrix3::new(0.0, -d.z, d.y, d.z, 0.0, -d.x, -d.y, d.x, 0.0);
    let dden = x * (2.0 - dx / r) - d * r;
    let value = num / den;
    let jac = dnum / den - num * dden.transpose() / (den * den);
    (value, jac)
}

struct GibbonsHawking {
    centers: Vec<Vector3<f64>>,
    /// Rotation taking the Hopf frame (reference string along `+z`) to the
    /// physical frame (string along the declared direction).
    frame: Matrix3<f64>,
    k: f64,
}

impl GibbonsHawking {
    fn potential(&self, x: &Vector3<f64>) -> (f64, Vector3<f64>) {
        let mut v = 0.0;
        let mut grad = Vector3::zeros();
        for p in &self.centers {
            let d = x - p;
            let r = d.norm();
            v += 0.5 / r;
            grad -= d * (0.5 / (r * r * r));
        }
        (v, grad)
    }

    /// Connection minus the reference monopole `(k/2)·A(x; string)`. Each
    /// center's Dirac string is gauged onto the ray from the origin through
    /// it, where it cancels against a unit share of the reference monopole,
    /// leaving only the segment `[0, p]` singular.
    fn connection_correction(&self, x: &Vector3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
        let mut value = Vector3::zeros();
        let mut jac = Matrix3::zeros();
        for p in &self.centers {
            let dist = p.norm();
            if dist == 0.0 {
                continue;
            }
            let ray = p / dist;
            let (a1, j1) = monopole_potential(&(x - p), &ray);
            let (a0, j0) = monopole_potential(x, &ray);
            value += (a1 - a0) * 0.5;
            jac += (j1 - j0) * 0.5;
        }
        (value, jac)
    }

    fn string(&self) -> Vector3<f64> {
        self.frame.column(2).into()
    }

    /// Full connection `ϑ` with `dϑ = ⋆dV` away from its strings.
    fn connection(&self, x: &Vector3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
        let (corr, jcorr) = self.connection_correction(x);
        let (a, ja) = monopole_potential(x, &self.string());
        let half_k = 0.5 * self.k;
        (corr + a * half_k, jcorr + ja * half_k)
    }

    /// `(x, ∂x/∂y, ∂²x/∂y∂y)` for `x = R·hopf(y)/(2k)`.
    fn hopf(&self, y: &[f64]) -> (Vector3<f64>, [[f64; 4]; 3], [[[f64; 4]; 4]; 3]) {
        let (y1, y2, y3, y4) = (y[0], y[1], y[2], y[3]);
        let hv = Vector3::new(
            2.0 * (y1 * y3 + y2 * y4),
            2.0 * (y2 * y3 - y1 * y4),
            y1 * y1 + y2 * y2 - y3 * y3 - y4 * y4,
        );
        let dh = [
            [2.0 * y3, 2.0 * y4, 2.0 * y1, 2.0 * y2],
            [-2.0 * y4, 2.0 * y3, 2.0 * y2, -2.0 * y1],
            [2.0 * y1, 2.0 * y2, -2.0 * y3, -2.0 * y4],
        ];
        // constant Hessians of the three quadratic components
        let mut d2h = [[[0.0; 4]; 4]; 3];
        for (i, a, b, v) in [(0, 0, 2, 2.0), (0, 1, 3, 2.0), (1, 1, 2, 2.0), (1, 0, 3, -2.0)] {
            d2h[i][a][b] = v;
            d2h[i][b][a] = v;
        }
        d2h[2] = [[2.0, 0.0, 0.0, 0.0], [0.0, 2.0, 0.0, 0.0], [0.0, 0.0, -2.0, 0.0], [0.0, 0.0, 0.0, -2.0]];
        let scale = 1.0 / (2.0 * self.k);
        let x = self.frame * hv * scale;
        let mut jx = [[0.0; 4]; 3];
        let mut hx = [[[0.0; 4]; 4]; 3];
        for i in 0..3 {
            for a in 0..4 {
                jx[i][a] = scale * (0..3).map(|q| self.frame[(i, q)] * dh[q][a]).sum::<f64>();
                for b in 0..4 {
                    hx[i][a][b] = scale * (0..3).map(|q| self.frame[(i, q)] * d2h[q][a][b]).sum::<f64>();
                }
            }
        }
        (x, jx, hx)
    }

    fn assemble(&self, y: &[f64], with_derivatives: bool) -> (DMatrix<f64>, Option<Vec<DMatrix<f64>>>) {
        let (x, jx, hx) = self.hopf(y);
        let (v, grad_v) = self.potential(&x);
        let (beta, dbeta) = self.connection_correction(&x);

        // dt + (k/2)A_ref written in y: (k/ρ²)(x dy - y dx) on each complex factor.
        let rho2: f64 = y.iter().map(|c| c * c).sum();
        let jy = [-y[1], y[0], -y[3], y[2]];
        let jmat = [[0.0, -1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, -1.0], [0.0, 0.0, 1.0, 0.0]];
        let mut theta = [0.0; 4];
        for a in 0..4 {
            theta[a] = self.k * jy[a] / rho2 + (0..3).map(|i| beta[i] * jx[i][a]).sum::<f64>();
        }
        let jj = |a: usize, b: usize| (0..3).map(|i| jx[i][a] * jx[i][b]).sum::<f64>();
        let g = DMatrix::from_fn(4, 4, |a, b| v * jj(a, b) + theta[a] * theta[b] / v);
        if !with_derivatives {
            return (g, None);
        }

        let mut dgs = Vec::with_capacity(4);
        for c in 0..4 {
            let dv: f64 = (0..3).map(|i| grad_v[i] * jx[i][c]).sum();
            let mut dtheta = [0.0; 4];
            for a in 0..4 {
                let dref = self.k * (jmat[a][c] / rho2 - 2.0 * y[c] * jy[a] / (rho2 * rho2));
                let mut dbeta_part = 0.0;
                for i in 0..3 {
                    let dbeta_i: f64 = (0..3).map(|j| dbeta[(i, j)] * jx[j][c]).sum();
                    dbeta_part += dbeta_i * jx[i][a] + beta[i] * hx[i][a][c];
                }
                dtheta[a] = dref + dbeta_part;
            }
            dgs.push(DMatrix::from_fn(4, 4, |a, b| {
                let djj: f64 = (0..3).map(|i| hx[i][a][c] * jx[i][b] + jx[i][a] * hx[i][b][c]).sum();
                dv * jj(a, b) + v * djj - dv / (v * v) * theta[a] * theta[b]
                    + (dtheta[a] * theta[b] + theta[a] * dtheta[b]) / v
            }));
        }
        (g, Some(dgs))
    }
}

impl ChartModel for GibbonsHawking {
    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.assemble(x, false).0)
    }

    fn metric_derivatives(&self, x: &[f64]) -> Option<Result<Vec<DMatrix<f64>>>> {
        Some(Ok(self.assemble(x, true).1.expect("derivatives requested")))
    }
}

/// Rotation whose third column is the unit vector `d`.
fn frame_with_axis(d: &Vector3<f64>) -> Matrix3<f64> {
    let helper = if d.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = helper.cross(d).normalize();
    let e2 = d.cross(&e1);
    Matrix3::from_columns(&[e1, e2, *d])
}

/// Evaluators for the potential and connection of a Gibbons–Hawking family,
/// exposed for consistency checks.
pub struct GibbonsHawkingFields(GibbonsHawking);

impl GibbonsHawkingFields {
    /// `V(x)` and `∇V(x)`.
    pub fn potential(&self, x: [f64; 3]) -> (f64, [f64; 3]) {
        let (v, g) = self.0.potential(&Vector3::from(x));
        (v, g.into())
    }

    /// `ϑ(x)` and its Jacobian `∂_j ϑ_i`.
    pub fn connection(&self, x: [f64; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
        let (a, j) = self.0.connection(&Vector3::from(x));
        let mut jac = [[0.0; 3]; 3];
        for i in 0..3 {
            for c in 0..3 {
                jac[i][c] = j[(i, c)];
            }
        }
        (a.into(), jac)
    }

    /// Image in `ℝ³` of a chart point.
    pub fn base_point(&self, y: &[f64]) -> [f64; 3] {
        self.0.hopf(y).0.into()
    }
}

impl GibbonsHawkingData {
    pub fn validate(&self) -> Result<()> {
        if self.centers.is_empty() {
            return Err(MassError::InvalidParameter("need at least one center".into()));
        }
        for (i, p) in self.centers.iter().enumerate() {
            if p.iter().any(|c| !c.is_finite()) {
                return Err(MassError::InvalidParameter(format!("center {i} is not finite")));
            }
            for q in &self.centers[..i] {
                if p == q {
                    return Err(MassError::InvalidParameter(format!("center {i} is repeated")));
                }
            }
        }
        let s = Vector3::from(self.string_direction);
        if !(s.norm() > 0.0) || !s.norm().is_finite() {
            return Err(MassError::InvalidParameter("string direction must be nonzero".into()));
        }
        Ok(())
    }

    fn model(&self) -> Result<GibbonsHawking> {
        self.validate()?;
        let axis = Vector3::from(self.string_direction).normalize();
        Ok(GibbonsHawking {
            centers: self.centers.iter().map(|p| Vector3::from(*p)).collect(),
            frame: frame_with_axis(&axis),
            k: self.centers.len() as f64,
        })
    }

    pub fn fields(&self) -> Result<GibbonsHawkingFields> {
        Ok(GibbonsHawkingFields(self.model()?))
    }

    /// Largest distance of a center from the origin.
    pub fn spread(&self) -> f64 {
        self.centers
            .iter()
            .map(|p| Vector3::from(*p).norm())
            .fold(0.0, f64::max)
    }
}

/// `g = V δ₃ + V⁻¹(dt + ϑ)²` with `V = Σ 1/(2|x - p_i|)`, written on the
/// `ℤ_k` quotient chart `x = hopf(y)/(2k)`, `t = k·arg(y₃ + i y₄)` (rotated
/// so the reference string points along the declared direction).
pub fn gibbons_hawking_chart(data: &GibbonsHawkingData) -> Result<MetricChart> {
    let model = data.model()?;
    let k = data.centers.len();
    // outside the ball |x| < 1.5·spread holding the centers and string segments
    let r_min = (1.5 * data.spread()).max(1e-6);
    let inner = (2.0 * k as f64 * r_min).sqrt();
    Ok(MetricChart::new("gibbons-hawking", 4, k as u32, inner, 2.0, Arc::new(model)))
}

// ---------------------------------------------------------------------------
// Radial Kähler potentials

/// `U(m)`-invariant Kähler potentials `F(u)`, `u = |z|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RadialPotential {
    /// `F = u`: flat.
    Flat,
    /// `F = u + a·log u`: the Burns metric for `m = 2`, `a > 0`.
    LogShift { a: f64 },
    /// `F = u + b/u`.
    InverseShift { b: f64 },
    /// `F = log(1 + u)`: Fubini–Study on the affine chart of `ℂP^m`.
    FubiniStudy,
}

impl RadialPotential {
    /// `[F, F', F'', F''', F'''']` at `u`.
    pub fn derivatives(&self, u: f64) -> [f64; 5] {
        match *self {
            RadialPotential::Flat => [u, 1.0, 0.0, 0.0, 0.0],
            RadialPotential::LogShift { a } => [
                u + a * u.ln(),
                1.0 + a / u,
                -a / (u * u),
                2.0 * a / u.powi(3),
                -6.0 * a / u.powi(4),
            ],
            RadialPotential::InverseShift { b } => [
                u + b / u,
                1.0 - b / (u * u),
                2.0 * b / u.powi(3),
                -6.0 * b / u.powi(4),
                24.0 * b / u.powi(5),
            ],
            RadialPotential::FubiniStudy => {
                let w = 1.0 + u;
                [w.ln(), 1.0 / w, -1.0 / (w * w), 2.0 / w.powi(3), -6.0 / w.powi(4)]
            }
        }
    }

    /// `[λ, λ', λ'']` for `λ = (uF')'`, in closed form to avoid the
    /// cancellation in `F' + uF''`.
    pub fn radial_jet(&self, u: f64) -> [f64; 3] {
        match *self {
            RadialPotential::Flat | RadialPotential::LogShift { .. } => [1.0, 0.0, 0.0],
            RadialPotential::InverseShift { b } => [1.0 + b / (u * u), -2.0 * b / u.powi(3), 6.0 * b / u.powi(4)],
            RadialPotential::FubiniStudy => {
                let w = 1.0 + u;
                [1.0 / (w * w), -2.0 / w.powi(3), 6.0 / w.powi(4)]
            }
        }
    }

    /// Fall-off of `g - δ` for the asymptotically flat potentials.
    pub fn falloff(&self) -> f64 {
        match *self {
            RadialPotential::Flat => 2.0,
            RadialPotential::LogShift { .. } => 2.0,
            RadialPotential::InverseShift { .. } => 4.0,
            RadialPotential::FubiniStudy => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialKahlerChart {
    /// Complex dimension.
    pub m: usize,
    pub potential: RadialPotential,
    /// The chart is used for `|z| > inner_radius`.
    pub inner_radius: f64,
}

/// Radial and tangential eigenvalues of `i∂∂̄F` at `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialEigenvalues {
    /// `(uF')'`
    pub radial: f64,
    /// `F'`
    pub tangential: f64,
}

impl RadialKahlerChart {
    pub fn eigenvalues(&self, u: f64) -> Result<RadialEigenvalues> {
        let f1 = self.potential.derivatives(u)[1];
        let radial = self.potential.radial_jet(u)[0];
        if !(f1 > 0.0 && radial > 0.0) {
            return Err(MassError::PositivityViolation { u, first: f1, radial });
        }
        Ok(RadialEigenvalues { radial, tangential: f1 })
    }
}

struct RadialKahler {
    family: RadialKahlerChart,
    n: usize,
}

impl RadialKahler {
    /// `J x` for the standard complex structure on pairs `(x_{2j}, x_{2j+1})`.
    fn j_apply(x: &[f64]) -> Vec<f64> {
        x.chunks(2).flat_map(|p| [-p[1], p[0]]).collect()
    }

    fn j_entry(a: usize, b: usize) -> f64 {
        if a / 2 != b / 2 {
            0.0
        } else if a % 2 == 1 && b % 2 == 0 {
            1.0
        } else if a % 2 == 0 && b % 2 == 1 {
            -1.0
        } else {
            0.0
        }
    }
}

impl ChartModel for RadialKahler {
    // g = F' I + F'' (x xᵀ + Jx Jxᵀ), so (uF')' on span{x, Jx} and F' on its complement.
    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let u: f64 = x.iter().map(|c| c * c).sum();
        self.family.eigenvalues(u)?;
        let [_, f1, f2, _, _] = self.family.potential.derivatives(u);
        let jx = Self::j_apply(x);
        Ok(DMatrix::from_fn(self.n, self.n, |a, b| {
            (a == b) as u8 as f64 * f1 + f2 * (x[a] * x[b] + jx[a] * jx[b])
        }))
    }

    fn metric_derivatives(&self, x: &[f64]) -> Option<Result<Vec<DMatrix<f64>>>> {
        let u: f64 = x.iter().map(|c| c * c).sum();
        if let Err(e) = self.family.eigenvalues(u) {
            return Some(Err(e));
        }
        let [_, _, f2, f3, _] = self.family.potential.derivatives(u);
        let jx = Self::j_apply(x);
        let n = self.n;
        Some(Ok((0..n)
            .map(|l| {
                DMatrix::from_fn(n, n, |a, b| {
                    let proj = x[a] * x[b] + jx[a] * jx[b];
                    let dproj = (a == l) as u8 as f64 * x[b]
                        + x[a] * (b == l) as u8 as f64
                        + Self::j_entry(a, l) * jx[b]
                        + jx[a] * Self::j_entry(b, l);
                    2.0 * x[l] * f2 * (a == b) as u8 as f64 + 2.0 * x[l] * f3 * proj + f2 * dproj
                })
            })
            .collect()))
    }
}

/// Real chart of the Kähler metric with form `(i/2)∂∂̄F(|z|²)`, coordinates
/// `z_j = x_{2j} + i x_{2j+1}`. `F = u` gives the identity.
pub fn radial_kahler_chart(family: RadialKahlerChart) -> Result<MetricChart> {
    if family.m < 2 {
        return Err(MassError::InvalidDimension(family.m as i64));
    }
    let inner = family.inner_radius.max(0.0);
    // spot-check positivity on the boundary and far out
    for u in [inner * inner * 1.0001 + 1e-12, (inner + 1.0).powi(2), 1e6 * (inner + 1.0).powi(2)] {
        family.eigenvalues(u)?;
    }
    let n = 2 * family.m;
    Ok(MetricChart::new(
        "radial-kahler",
        n,
        1,
        inner,
        family.potential.falloff(),
        Arc::new(RadialKahler { family, n }),
    )
    .kahler(family.m))
}

// ---------------------------------------------------------------------------
// Diagnostics

/// Log-log slope of `‖g(ρx̂) - I‖_F` between `rho_lo` and `rho_hi`, least
/// squares over `samples` geometric radii along `direction`. For a chart with
/// fall-off `τ` this is close to `-τ`.
pub fn fitted_falloff(chart: &MetricChart, direction: &[f64], rho_lo: f64, rho_hi: f64, samples: usize) -> Result<f64> {
    let unit: Vec<f64> = {
        let r = norm(direction);
        direction.iter().map(|c| c / r).collect()
    };
    let mut pts = Vec::with_capacity(samples);
    for i in 0..samples {
        let t = i as f64 / (samples - 1) as f64;
        let rho = rho_lo * (rho_hi / rho_lo).powf(t);
        let x: Vec<f64> = unit.iter().map(|c| c * rho).collect();
        let dev = chart.g(&x)? - DMatrix::identity(chart.n, chart.n);
        pts.push((rho.ln(), dev.norm().ln()));
    }
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / samples as f64;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / samples as f64;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Volume of the unit sphere `S^{n-1} ⊂ ℝⁿ`.
pub fn unit_sphere_volume(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / half_integer_gamma(n)
}

/// `Γ(n/2)` for positive integer `n`.
pub fn half_integer_gamma(n: usize) -> f64 {
    assert!(n >= 1);
    let mut value = if n % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut k = if n % 2 == 0 { 2 } else { 1 };
    while k + 2 <= n {
        value *= k as f64 / 2.0;
        k += 2;
    }
    value
}

// ---------------------------------------------------------------------------
// Registry

/// Family names accepted by [`chart_from_params`].
pub const FAMILY_NAMES: [&str; 5] = ["euclidean", "schwarzschild", "gibbons-hawking", "radial-kahler", "lebrun"];

/// Builds a chart from a family name and JSON parameters, e.g.
/// `("schwarzschild", {"n": 3, "A": 2})`. `"lebrun"` has no chart; its mass
/// is available in closed form only.
pub fn chart_from_params(name: &str, params: &serde_json::Value) -> Result<MetricChart> {
    let parse_err = |e: serde_json::Error| MassError::Input(format!("{name} parameters: {e}"));
    match name {
        "euclidean" => {
            let n = params.get("n").and_then(|v| v.as_u64()).unwrap_or(4) as usize;
            euclidean_chart(n)
        }
        "schwarzschild" => {
            let s: SchwarzschildSlice = serde_json::from_value(params.clone()).map_err(parse_err)?;
            schwarzschild_chart(s.n, s.a)
        }
        "gibbons-hawking" => {
            let d: GibbonsHawkingData = serde_json::from_value(params.clone()).map_err(parse_err)?;
            gibbons_hawking_chart(&d)
        }
        "radial-kahler" => {
            let f: RadialKahlerChart = serde_json::from_value(params.clone()).map_err(parse_err)?;
            radial_kahler_chart(f)
        }
        "lebrun" => Err(MassError::InvalidParameter(
            "the lebrun family has no coordinate chart; use its closed-form mass".into(),
        )),
        other => Err(MassError::InvalidParameter(format!("unknown family {other:?}"))),
    }
}
