//! Curvature of `U(m)`-invariant Kähler metrics, plus the Penrose-type and
//! positive-mass verdicts.
//!
//! Radial conventions follow `metrics::RadialKahlerChart`: `ω = (i/2)∂∂̄F(u)`,
//! `u = |z|²`, eigenvalues `λ_r = (uF')'` and `λ_t = F'`. With
//! `G = log(λ_r λ_t^{m-1})` the Ricci form is `-i∂∂̄G` and
//!
//! ```text
//! s = -4 [ (uG')'/λ_r + (m-1) G'/λ_t ].
//! ```

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admint::{gauss_gegenbauer, pairwise_sum};
use crate::error::{MassError, Result};
use crate::homcalc::factorial;
use crate::metrics::{unit_sphere_volume, RadialKahlerChart};

/// `G'`, `(uG')'` and the eigenvalues at `u`.
#[derive(Debug, Clone, Copy)]
struct RadialRicci {
    radial: f64,
    tangential: f64,
    g1: f64,
    ug1_prime: f64,
}

fn radial_ricci(family: &RadialKahlerChart, u: f64) -> Result<RadialRicci> {
    let eig = family.eigenvalues(u)?;
    let [_, _, f2, f3, _] = family.potential.derivatives(u);
    let [_, lr1, lr2] = family.potential.radial_jet(u);
    let k = family.m as f64 - 1.0;
    let (lr, lt) = (eig.radial, eig.tangential);
    let (lt1, lt2) = (f2, f3);
    let g1 = lr1 / lr + k * lt1 / lt;
    let g2 = lr2 / lr - (lr1 / lr).powi(2) + k * (lt2 / lt - (lt1 / lt).powi(2));
    Ok(RadialRicci { radial: lr, tangential: lt, g1, ug1_prime: g1 + u * g2 })
}

pub fn radial_scalar_curvature(family: &RadialKahlerChart, u: f64) -> Result<f64> {
    let r = radial_ricci(family, u)?;
    Ok(-4.0 * (r.ug1_prime / r.radial + (family.m as f64 - 1.0) * r.g1 / r.tangential))
}

/// Pointwise `|ρ|` with respect to `ω`: root sum of squares of the eigenvalues
/// of the Ricci form relative to `ω`.
pub fn radial_ricci_norm(family: &RadialKahlerChart, u: f64) -> Result<f64> {
    let r = radial_ricci(family, u)?;
    let mu_r = -2.0 * r.ug1_prime / r.radial;
    let mu_t = -2.0 * r.g1 / r.tangential;
    Ok((mu_r * mu_r + (family.m as f64 - 1.0) * mu_t * mu_t).sqrt())
}

/// `dμ/du = λ_r λ_t^{m-1} · ½ Vol(S^{2m-1}) u^{m-1}`.
pub fn radial_volume_density(family: &RadialKahlerChart, u: f64) -> Result<f64> {
    let eig = family.eigenvalues(u)?;
    let m = family.m as i32;
    Ok(eig.radial * eig.tangential.powi(m - 1) * 0.5 * unit_sphere_volume(2 * family.m) * u.powi(m - 1))
}

const PANEL_NODES: usize = 16;

/// `∫ s dμ` over `u_min <= |z|² <= u_max`; `u_max` may be `f64::INFINITY`.
/// Gauss–Legendre on geometrically graded panels, in `u` for a finite range and
/// in `t = u_min/u` for the unbounded one.
pub fn scalar_integral(family: &RadialKahlerChart, u_min: f64, u_max: f64) -> Result<f64> {
    let inner = family.inner_radius.max(0.0).powi(2);
    if !(u_min > inner) || !(u_min < u_max) {
        return Err(MassError::InvalidParameter(format!(
            "scalar integral needs {inner} < u_min < u_max, got [{u_min}, {u_max}]"
        )));
    }
    let density = |u: f64| -> Result<f64> { Ok(radial_scalar_curvature(family, u)? * radial_volume_density(family, u)?) };
    let (nodes, weights) = gauss_gegenbauer(PANEL_NODES, 0.0);
    let mut panels = Vec::new();
    let mut map: Box<dyn Fn(f64) -> (f64, f64) + Sync> = Box::new(|u| (u, 1.0));
    if u_max.is_infinite() {
        // t ∈ (0, 1], u = u_min/t, du = u_min/t² dt; panels [2^{-k-1}, 2^{-k}]
        let mut hi: f64 = 1.0;
        while hi > 1e-30 {
            panels.push((0.5 * hi, hi));
            hi *= 0.5;
        }
        map = Box::new(move |t| (u_min / t, u_min / (t * t)));
    } else {
        let mut lo = u_min;
        while lo < u_max {
            let hi = (2.0 * lo).min(u_max);
            panels.push((lo, hi));
            lo = hi;
        }
    }
    let parts = panels
        .par_iter()
        .map(|&(a, b)| {
            let half = 0.5 * (b - a);
            let terms = nodes
                .iter()
                .zip(&weights)
                .map(|(x, w)| {
                    let (u, jac) = map(a + half * (x + 1.0));
                    density(u).map(|v| w * half * jac * v)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(pairwise_sum(&terms))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&parts))
}

/// `lim -u^m G'(u)/(2m-1)`, evaluated at `u`: the mass of a radial Kähler
/// metric read off the `log det` flux through `|z|² = u`.
pub fn radial_logdet_mass_at(family: &RadialKahlerChart, u: f64) -> Result<f64> {
    let r = radial_ricci(family, u)?;
    Ok(-u.powi(family.m as i32) * r.g1 / (2.0 * family.m as f64 - 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSample {
    pub point: Vec<f64>,
    pub scalar_curvature: f64,
    pub ricci_form_norm: f64,
}

/// Curvature at each point of a real chart `ℝ^{2m}`, computed in parallel.
pub fn radial_curvature_samples(family: &RadialKahlerChart, points: &[Vec<f64>]) -> Result<Vec<CurvatureSample>> {
    points
        .par_iter()
        .map(|p| {
            let u: f64 = p.iter().map(|c| c * c).sum();
            Ok(CurvatureSample {
                point: p.clone(),
                scalar_curvature: radial_scalar_curvature(family, u)?,
                ricci_form_norm: radial_ricci_norm(family, u)?,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Verdicts

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivisorComponent {
    pub label: String,
    #[serde(rename = "n")]
    pub multiplicity: u32,
    #[serde(rename = "vol")]
    pub volume: f64,
}

/// Effective divisor `Σ n_j D_j` with the `(2m-2)`-volumes of its components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivisorData {
    pub m: usize,
    pub components: Vec<DivisorComponent>,
}

impl DivisorData {
    pub fn new(m: usize, components: Vec<DivisorComponent>) -> Result<Self> {
        let data = Self { m, components };
        data.validate()?;
        Ok(data)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(MassError::InvalidDimension(self.m as i64));
        }
        for c in &self.components {
            if c.multiplicity < 1 {
                return Err(MassError::InvalidParameter(format!("component {} has multiplicity 0", c.label)));
            }
            if !(c.volume >= 0.0 && c.volume.is_finite()) {
                return Err(MassError::InvalidParameter(format!("component {} has volume {}", c.label, c.volume)));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let data: Self = serde_json::from_str(text).map_err(|e| MassError::Input(e.to_string()))?;
        data.validate()?;
        Ok(data)
    }

    /// `((m-1)!/((2m-1)π^{m-1})) Σ n_j Vol(D_j)`.
    pub fn penrose_bound(&self) -> f64 {
        let m = self.m as i64;
        let weighted: f64 = self.components.iter().map(|c| c.multiplicity as f64 * c.volume).sum();
        factorial(m - 1) / ((2 * m - 1) as f64 * PI.powi(m as i32 - 1)) * weighted
    }
}

pub fn default_tolerance(mass: f64) -> f64 {
    1e-9 * mass.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenroseVerdict {
    pub mass: f64,
    pub bound: f64,
    pub tolerance: f64,
    /// `mass >= bound - tol`.
    pub holds: bool,
    /// `|mass - bound| <= tol`.
    pub equality: bool,
    /// Equality occurs exactly when the metric is scalar-flat.
    pub consistent_with_scalar_flat: bool,
}

impl PenroseVerdict {
    pub fn passed(&self) -> bool {
        self.holds && self.consistent_with_scalar_flat
    }
}

pub fn penrose_check(mass: f64, divisor: &DivisorData, scalar_flat: bool, tolerance: Option<f64>) -> Result<PenroseVerdict> {
    divisor.validate()?;
    let tol = tolerance.unwrap_or_else(|| default_tolerance(mass));
    let bound = divisor.penrose_bound();
    let equality = (mass - bound).abs() <= tol;
    Ok(PenroseVerdict {
        mass,
        bound,
        tolerance: tol,
        holds: mass >= bound - tol,
        equality,
        consistent_with_scalar_flat: equality == scalar_flat,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PositiveMassStatus {
    /// Mass is positive.
    Pass,
    /// Mass vanishes and every curvature sample vanishes.
    PassFlat,
    /// Mass is negative although the hypotheses hold.
    Violation,
    /// Mass vanishes but some curvature sample does not.
    ZeroButCurved,
    /// Hypotheses (AE, `s >= 0`) do not hold; nothing is asserted.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositiveMassVerdict {
    pub status: PositiveMassStatus,
    pub mass: f64,
    pub tolerance: f64,
    pub message: String,
}

impl PositiveMassVerdict {
    pub fn passed(&self) -> bool {
        matches!(self.status, PositiveMassStatus::Pass | PositiveMassStatus::PassFlat | PositiveMassStatus::Skipped)
    }
}

pub fn positive_mass_check(
    mass: f64,
    s_nonnegative: bool,
    is_ae: bool,
    curvature: &[CurvatureSample],
    tolerance: Option<f64>,
) -> PositiveMassVerdict {
    let tol = tolerance.unwrap_or_else(|| default_tolerance(mass));
    let verdict = |status, message: String| PositiveMassVerdict { status, mass, tolerance: tol, message };
    if !is_ae {
        return verdict(
            PositiveMassStatus::Skipped,
            "not asymptotically Euclidean; ALE scalar-flat Kähler surfaces can have negative mass".into(),
        );
    }
    if !s_nonnegative {
        return verdict(PositiveMassStatus::Skipped, "scalar curvature is not known to be nonnegative".into());
    }
    if mass < -tol {
        return verdict(PositiveMassStatus::Violation, format!("mass {mass} is negative"));
    }
    if mass > tol {
        return verdict(PositiveMassStatus::Pass, format!("mass {mass} is positive"));
    }
    match curvature
        .iter()
        .find(|c| c.scalar_curvature.abs() > tol || c.ricci_form_norm.abs() > tol)
    {
        Some(c) => verdict(
            PositiveMassStatus::ZeroButCurved,
            format!("mass vanishes but curvature at {:?} is s = {}, |ρ| = {}", c.point, c.scalar_curvature, c.ricci_form_norm),
        ),
        None if curvature.is_empty() => verdict(PositiveMassStatus::PassFlat, "mass vanishes; no curvature samples supplied".into()),
        None => verdict(PositiveMassStatus::PassFlat, format!("mass vanishes and all {} curvature samples vanish", curvature.len())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::RadialPotential;

    fn family(m: usize, potential: RadialPotential, inner: f64) -> RadialKahlerChart {
        RadialKahlerChart { m, potential, inner_radius: inner }
    }

    #[test]
    fn flat_and_burns_are_scalar_flat() {
        for m in 2..5 {
            let flat = family(m, RadialPotential::Flat, 0.0);
            for u in [0.1, 1.0, 10.0] {
                assert_eq!(radial_scalar_curvature(&flat, u).unwrap(), 0.0);
                assert_eq!(radial_ricci_norm(&flat, u).unwrap(), 0.0);
            }
        }
        let burns = family(2, RadialPotential::LogShift { a: 1.5 }, 0.0);
        for u in [0.01, 0.5, 3.0, 1e4] {
            assert!(radial_scalar_curvature(&burns, u).unwrap().abs() < 1e-12 / u.min(1.0).powi(2));
        }
        // but it is not Ricci-flat
        assert!(radial_ricci_norm(&burns, 1.0).unwrap() > 0.1);
    }

    #[test]
    fn fubini_study_is_einstein() {
        for m in 2..5 {
            let fs = family(m, RadialPotential::FubiniStudy, 0.0);
            for u in [0.2, 1.0, 7.0] {
                let s = radial_scalar_curvature(&fs, u).unwrap();
                assert!((s - 4.0 * (m * (m + 1)) as f64).abs() < 1e-10);
                // ρ = 2(m+1)ω
                let expect = 2.0 * (m as f64 + 1.0) * (m as f64).sqrt();
                assert!((radial_ricci_norm(&fs, u).unwrap() - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn scalar_integral_of_fubini_study() {
        // ∫ s dμ over the affine chart of ℂP^m: s·Vol = 4m(m+1)·π^m/m!
        for m in 2..4 {
            let fs = family(m, RadialPotential::FubiniStudy, 0.0);
            let near = scalar_integral(&fs, 1e-12, 1.0).unwrap();
            let far = scalar_integral(&fs, 1.0, f64::INFINITY).unwrap();
            let exact = 4.0 * (m * (m + 1)) as f64 * PI.powi(m as i32) / factorial(m as i64);
            assert!((near + far - exact).abs() < 1e-8 * exact, "m={m}: {} vs {exact}", near + far);
        }
    }

    #[test]
    fn scalar_integral_flat_and_domain() {
        let flat = family(2, RadialPotential::Flat, 1.0);
        assert_eq!(scalar_integral(&flat, 2.0, f64::INFINITY).unwrap(), 0.0);
        assert!(scalar_integral(&flat, 0.5, 4.0).is_err());
        assert!(scalar_integral(&flat, 4.0, 2.0).is_err());
    }

    #[test]
    fn inverse_shift_matches_flux() {
        // ∫_{u1}^{u2} s dμ = -2 Vol(S^{2m-1}) [u G' (uF')^{m-1}]
        let fam = family(2, RadialPotential::InverseShift { b: 0.4 }, 1.0);
        let flux = |u: f64| {
            let r = radial_ricci(&fam, u).unwrap();
            let [_, f1, ..] = fam.potential.derivatives(u);
            -2.0 * unit_sphere_volume(4) * u * r.g1 * (u * f1).powi(1)
        };
        let (u1, u2) = (1.5, 40.0);
        let got = scalar_integral(&fam, u1, u2).unwrap();
        assert!((got - (flux(u2) - flux(u1))).abs() < 1e-10 * got.abs().max(1.0));
    }

    #[test]
    fn burns_logdet_mass_radial() {
        let fam = family(2, RadialPotential::LogShift { a: 2.0 }, 0.0);
        let at = radial_logdet_mass_at(&fam, 1e8).unwrap();
        assert!((at - 2.0 / 3.0).abs() < 1e-7);
    }

    #[test]
    fn penrose_examples() {
        let empty = DivisorData::new(2, vec![]).unwrap();
        let v = penrose_check(0.0, &empty, true, None).unwrap();
        assert!(v.holds && v.equality && v.consistent_with_scalar_flat);
        let one = DivisorData::new(2, vec![DivisorComponent { label: "E".into(), multiplicity: 1, volume: 2.5 }]).unwrap();
        let m = crate::homcalc::mass_ae_blowup(&[2.5]);
        assert!(penrose_check(m, &one, true, None).unwrap().equality);
        let low = penrose_check(m - 0.1, &one, false, None).unwrap();
        assert!(!low.holds && !low.passed());
        let high = penrose_check(m + 0.1, &one, false, None).unwrap();
        assert!(high.holds && !high.equality && high.passed());
        assert!(!penrose_check(m + 0.1, &one, true, None).unwrap().consistent_with_scalar_flat);
    }

    #[test]
    fn penrose_bound_in_higher_dimension() {
        let d = DivisorData::new(3, vec![DivisorComponent { label: "D".into(), multiplicity: 2, volume: 1.0 }]).unwrap();
        assert!((d.penrose_bound() - 2.0 * 2.0 / (5.0 * PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn divisor_json() {
        let d = DivisorData::from_json(r#"{"m": 2, "components": [{"label": "E1", "n": 1, "vol": 3.0}]}"#).unwrap();
        assert_eq!(d.components[0].volume, 3.0);
        assert!(DivisorData::from_json(r#"{"m": 2, "components": [{"label": "E1", "n": 0, "vol": 3.0}]}"#).is_err());
        assert!(DivisorData::from_json(r#"{"m": 1, "components": []}"#).is_err());
        assert!(DivisorData::from_json(r#"{"m": 2, "components": [{"label": "E", "n": 1, "vol": -1}]}"#).is_err());
    }

    #[test]
    fn positive_mass_examples() {
        assert_eq!(positive_mass_check(1.0 / 3.0, true, true, &[], None).status, PositiveMassStatus::Pass);
        let flat = family(2, RadialPotential::Flat, 0.0);
        let samples = radial_curvature_samples(&flat, &[vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 3.0, 1.0, 0.0]]).unwrap();
        assert_eq!(positive_mass_check(0.0, true, true, &samples, None).status, PositiveMassStatus::PassFlat);
        let skipped = positive_mass_check(-1.0 / 9.0, true, false, &[], None);
        assert_eq!(skipped.status, PositiveMassStatus::Skipped);
        assert!(skipped.passed());
        assert_eq!(positive_mass_check(-0.5, true, true, &[], None).status, PositiveMassStatus::Violation);
        let burns = family(2, RadialPotential::LogShift { a: 1.0 }, 0.0);
        let curved = radial_curvature_samples(&burns, &[vec![1.0, 0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(positive_mass_check(0.0, true, true, &curved, None).status, PositiveMassStatus::ZeroButCurved);
    }
}
