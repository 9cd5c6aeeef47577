//! Scalar-flat Kähler metrics on `O(-ℓ)` blown up at points of the zero section,
//! built from hyperbolic monopoles. Only the closed-form quantities are
//! evaluated: the potential `V`, the curve areas and the mass.
//!
//! The centres `p₁ … p_{b-1}` sit at hyperbolic distances `я_j` from `p₀`,
//! along geodesic rays with distinct initial directions. The directions do not
//! enter any of the numbers below.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{MassError, Result};
use crate::homcalc::{self, format_rational, parse_rational};

/// A hyperbolic distance. `LogSqrt(q)` is `log √q`, kept symbolic so that
/// `e^{2я} = q` is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HyperbolicDistance {
    Real(f64),
    LogSqrt(#[serde(with = "rational_string")] BigRational),
}

mod rational_string {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

impl HyperbolicDistance {
    pub fn log_sqrt(q: i64) -> Self {
        HyperbolicDistance::LogSqrt(BigRational::from_integer(BigInt::from(q)))
    }

    pub fn value(&self) -> f64 {
        match self {
            HyperbolicDistance::Real(d) => *d,
            HyperbolicDistance::LogSqrt(q) => 0.5 * homcalc::to_f64(q).ln(),
        }
    }

    /// `1/(e^{2я} - 1)`.
    pub fn weight(&self) -> f64 {
        match self {
            HyperbolicDistance::Real(d) => 1.0 / (2.0 * d).exp_m1(),
            HyperbolicDistance::LogSqrt(q) => homcalc::to_f64(&(BigRational::one() / (q - BigRational::one()))),
        }
    }

    pub fn weight_exact(&self) -> Option<BigRational> {
        match self {
            HyperbolicDistance::Real(_) => None,
            HyperbolicDistance::LogSqrt(q) => Some(BigRational::one() / (q - BigRational::one())),
        }
    }

    fn is_positive(&self) -> bool {
        match self {
            HyperbolicDistance::Real(d) => *d > 0.0 && d.is_finite(),
            HyperbolicDistance::LogSqrt(q) => *q > BigRational::one(),
        }
    }
}

/// Parses `1.2`, `log_sqrt(5)` or `log_sqrt(7/2)`.
impl std::str::FromStr for HyperbolicDistance {
    type Err = MassError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if let Some(inner) = t.strip_prefix("log_sqrt(").and_then(|r| r.strip_suffix(')')) {
            return Ok(HyperbolicDistance::LogSqrt(parse_rational(inner)?));
        }
        t.parse::<f64>()
            .map(HyperbolicDistance::Real)
            .map_err(|_| MassError::Input(format!("cannot parse distance {t:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LebrunFamily {
    pub ell: u32,
    /// Distances from `p₀` to `p₁ … p_{b-1}`.
    pub distances: Vec<HyperbolicDistance>,
}

impl LebrunFamily {
    pub fn new(ell: u32, distances: Vec<HyperbolicDistance>) -> Result<Self> {
        if ell < 1 {
            return Err(MassError::InvalidParameter("ℓ must be at least 1".into()));
        }
        if let Some(bad) = distances.iter().find(|d| !d.is_positive()) {
            return Err(MassError::InvalidParameter(format!("hyperbolic distance {bad:?} is not positive")));
        }
        Ok(Self { ell, distances })
    }

    pub fn b(&self) -> usize {
        self.distances.len() + 1
    }

    /// `V = 1 + ℓ/(e^{2r₀}-1) + Σ 1/(e^{2r_j}-1)` at a point whose distances to
    /// `p₀, p₁, …` are `r0, r_list`.
    pub fn potential_v(&self, r0: f64, r_list: &[f64]) -> Result<f64> {
        if r_list.len() != self.distances.len() {
            return Err(MassError::Input(format!(
                "expected {} centre distances, got {}",
                self.distances.len(),
                r_list.len()
            )));
        }
        if let Some(r) = std::iter::once(&r0).chain(r_list).find(|r| !(**r > 0.0)) {
            return Err(MassError::InvalidParameter(format!("radius {r} is not positive")));
        }
        let green = |r: f64| 1.0 / (2.0 * r).exp_m1();
        Ok(1.0 + self.ell as f64 * green(r0) + r_list.iter().map(|&r| green(r)).sum::<f64>())
    }

    /// Area of the proper transform `F̃` (always `π`) and of each exceptional
    /// curve, `2π/(e^{2я_j}-1)`.
    pub fn curve_areas(&self) -> (f64, Vec<f64>) {
        (PI, self.distances.iter().map(|d| 2.0 * PI * d.weight()).collect())
    }

    /// `(1/3ℓ)[2 - ℓ + 4 Σ 1/(e^{2я_j}-1)]`.
    pub fn closed_form_mass(&self) -> f64 {
        let l = self.ell as f64;
        (2.0 - l + 4.0 * self.distances.iter().map(HyperbolicDistance::weight).sum::<f64>()) / (3.0 * l)
    }

    /// The closed form in exact arithmetic, when every distance is symbolic.
    pub fn closed_form_mass_exact(&self) -> Option<BigRational> {
        let l = BigRational::from_integer(BigInt::from(self.ell));
        let mut sum = BigRational::zero();
        for d in &self.distances {
            sum += d.weight_exact()?;
        }
        let two = BigRational::from_integer(BigInt::from(2));
        let four = BigRational::from_integer(BigInt::from(4));
        let three = BigRational::from_integer(BigInt::from(3));
        Some((two - &l + four * sum) / (three * l))
    }

    /// The same mass through the intersection-form route.
    pub fn homcalc_mass(&self) -> Result<f64> {
        let (area_ftilde, areas_e) = self.curve_areas();
        homcalc::mass_oell_on_section(self.ell as i64, area_ftilde, &areas_e)
    }
}

/// `ℓ - 2` centres at distance `log √5`; the mass is exactly zero.
pub fn zero_mass_instance(ell: u32) -> Result<LebrunFamily> {
    if ell < 3 {
        return Err(MassError::InvalidParameter(format!(
            "zero-mass instance needs ℓ >= 3 (got {ell}); ℓ = 2 leaves no centres"
        )));
    }
    LebrunFamily::new(ell, vec![HyperbolicDistance::log_sqrt(5); ell as usize - 2])
}

/// Distance `½ log(1 + 4/(ℓ-2))` at which the one-centre mass changes sign.
pub fn sign_change_distance(ell: u32) -> Result<f64> {
    if ell < 3 {
        return Err(MassError::InvalidParameter(format!("no sign change for ℓ = {ell}")));
    }
    Ok(0.5 * (4.0 / (ell as f64 - 2.0)).ln_1p())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(ds: &[f64]) -> Vec<HyperbolicDistance> {
        ds.iter().map(|&d| HyperbolicDistance::Real(d)).collect()
    }

    #[test]
    fn potential_examples() {
        let fam = LebrunFamily::new(3, vec![]).unwrap();
        let v = fam.potential_v(5f64.sqrt().ln(), &[]).unwrap();
        assert!((v - 1.75).abs() < 1e-14);
        assert_eq!(fam.potential_v(60.0, &[]).unwrap(), 1.0);
        let fam = LebrunFamily::new(2, real(&[1.0, 2.0])).unwrap();
        let a = fam.potential_v(1.0, &[1.0, 1.0]).unwrap();
        let b = fam.potential_v(1.0, &[1.0, 1.5]).unwrap();
        let c = fam.potential_v(1.2, &[1.0, 1.0]).unwrap();
        assert!(b < a && c < a);
        assert!(fam.potential_v(0.0, &[1.0, 1.0]).is_err());
        assert!(fam.potential_v(1.0, &[1.0, -1.0]).is_err());
        assert!(fam.potential_v(1.0, &[1.0]).is_err());
    }

    #[test]
    fn curve_areas_examples() {
        let fam = LebrunFamily::new(3, vec![HyperbolicDistance::log_sqrt(5)]).unwrap();
        let (f, e) = fam.curve_areas();
        assert_eq!(f, PI);
        assert!((e[0] - PI / 2.0).abs() < 1e-15);
        let far = LebrunFamily::new(3, real(&[40.0])).unwrap();
        assert!(far.curve_areas().1[0] < 1e-30);
        let real_sqrt5 = LebrunFamily::new(3, real(&[5f64.sqrt().ln()])).unwrap();
        assert!((real_sqrt5.curve_areas().1[0] - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(zero_mass_instance(3).unwrap().closed_form_mass(), 0.0);
        assert_eq!(zero_mass_instance(4).unwrap().closed_form_mass(), 0.0);
        let five = zero_mass_instance(5).unwrap();
        assert_eq!(five.distances.len(), 3);
        assert!(five.closed_form_mass_exact().unwrap().is_zero());
        let bare = LebrunFamily::new(3, vec![]).unwrap();
        assert!((bare.closed_form_mass() + 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(format_rational(&bare.closed_form_mass_exact().unwrap()), "-1/9");
        assert!(zero_mass_instance(2).is_err());
    }

    #[test]
    fn matches_homcalc_route() {
        for ell in 1..8 {
            let fam = LebrunFamily::new(ell, real(&[0.3, 0.9, 2.0][..(ell as usize % 3) + 1])).unwrap();
            let diff = fam.closed_form_mass() - fam.homcalc_mass().unwrap();
            assert!(diff.abs() < 1e-14, "ℓ={ell}");
        }
    }

    #[test]
    fn monotonicity() {
        let base = LebrunFamily::new(4, real(&[0.5, 1.0])).unwrap().closed_form_mass();
        let farther = LebrunFamily::new(4, real(&[0.6, 1.0])).unwrap().closed_form_mass();
        let more = LebrunFamily::new(4, real(&[0.5, 1.0, 1.0])).unwrap().closed_form_mass();
        assert!(farther < base && more > base);
    }

    #[test]
    fn sign_change_is_the_root() {
        for ell in 3..10 {
            let star = sign_change_distance(ell).unwrap();
            let mass = |d: f64| LebrunFamily::new(ell, real(&[d])).unwrap().closed_form_mass();
            assert!(mass(0.9 * star) > 0.0 && mass(1.1 * star) < 0.0);
            let (mut lo, mut hi) = (0.5 * star, 2.0 * star);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if mass(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            assert!((lo - star).abs() < 1e-12 * star);
        }
        // ℓ = 3: я* = ½ log 5 = log √5
        assert!((sign_change_distance(3).unwrap() - 5f64.sqrt().ln()).abs() < 1e-15);
    }

    #[test]
    fn distance_parsing_and_validation() {
        assert_eq!("log_sqrt(5)".parse::<HyperbolicDistance>().unwrap(), HyperbolicDistance::log_sqrt(5));
        assert_eq!("0.25".parse::<HyperbolicDistance>().unwrap(), HyperbolicDistance::Real(0.25));
        assert!("abc".parse::<HyperbolicDistance>().is_err());
        assert!(LebrunFamily::new(3, real(&[0.0])).is_err());
        assert!(LebrunFamily::new(3, vec![HyperbolicDistance::log_sqrt(1)]).is_err());
        assert!(LebrunFamily::new(0, vec![]).is_err());
        let json = serde_json::to_string(&zero_mass_instance(3).unwrap()).unwrap();
        assert_eq!(json, r#"{"ell":3,"distances":[{"log-sqrt":"5"}]}"#);
        assert_eq!(serde_json::from_str::<LebrunFamily>(&json).unwrap(), zero_mass_instance(3).unwrap());
    }
}
