//! Topological mass from intersection-form data.
//!
//! A homology basis `E_1..E_b` of an ALE Kähler surface is described by its
//! integer intersection matrix `Q`, the Chern pairings `∫_{E_j} c₁` and the
//! Kähler areas `∫_{E_j} [ω]`. The Poincaré dual of the compactly supported
//! lift of `c₁` is `Σ a_j E_j` with `Q a = c₁`, and the mass of a scalar-flat
//! metric is `-(1/3π) Σ a_j area_j`.
//!
//! `Q` and `a` are handled in exact rational arithmetic. Areas are floats and
//! the exact/float boundary is the final dot product.
//!
//! Sign convention: exceptional curves of a blow-up have `E·E = -1`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{MassError, Result};

/// Integer intersection pairings `E_j · E_k`.
pub type IntersectionMatrix = Vec<Vec<i64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionData {
    pub basis: Vec<String>,
    pub q: IntersectionMatrix,
    pub c1: Vec<BigRational>,
    pub areas: Vec<f64>,
}

impl IntersectionData {
    /// Builds and validates the data. Nondegeneracy of `Q` is not checked here;
    /// it surfaces as [`MassError::SingularIntersectionForm`] from the solve.
    pub fn new(
        basis: Vec<String>,
        q: IntersectionMatrix,
        c1: Vec<BigRational>,
        areas: Vec<f64>,
    ) -> Result<Self> {
        let b = q.len();
        if q.iter().any(|row| row.len() != b) {
            return Err(MassError::Input("Q must be square".into()));
        }
        if basis.len() != b || c1.len() != b || areas.len() != b {
            return Err(MassError::Input(format!(
                "dimension mismatch: Q is {b}x{b}, basis {}, c1 {}, areas {}",
                basis.len(),
                c1.len(),
                areas.len()
            )));
        }
        for j in 0..b {
            for k in 0..j {
                if q[j][k] != q[k][j] {
                    return Err(MassError::Input(format!(
                        "Q is not symmetric at ({j},{k})"
                    )));
                }
            }
        }
        if areas.iter().any(|a| !a.is_finite()) {
            return Err(MassError::Input("areas must be finite".into()));
        }
        Ok(Self { basis, q, c1, areas })
    }

    /// Convenience constructor with integer Chern pairings and default labels `E1..Eb`.
    pub fn from_integers(q: IntersectionMatrix, c1: &[i64], areas: Vec<f64>) -> Result<Self> {
        let basis = (1..=q.len()).map(|j| format!("E{j}")).collect();
        let c1 = c1.iter().map(|&c| BigRational::from_integer(c.into())).collect();
        Self::new(basis, q, c1, areas)
    }

    pub fn rank(&self) -> usize {
        self.q.len()
    }

    /// Labels of classes with negative Kähler area. These are legal input
    /// (only holomorphic representatives force positivity) but worth flagging.
    pub fn negative_area_labels(&self) -> Vec<&str> {
        self.basis
            .iter()
            .zip(&self.areas)
            .filter(|(_, a)| **a < 0.0)
            .map(|(l, _)| l.as_str())
            .collect()
    }

    /// Blow-up of ℂ² at `b` points in the exceptional basis: `Q = -I`, `c₁ = (1,…,1)`.
    pub fn ae_blowup(areas: &[f64]) -> Result<Self> {
        let b = areas.len();
        let q = diagonal(&vec![-1; b]);
        Self::from_integers(q, &vec![1; b], areas.to_vec())
    }

    /// `O(-ℓ)` blown up at points off the zero section, basis `F, E_1..E_{b-1}`.
    pub fn oell_off_section(ell: i64, area_f: f64, areas_e: &[f64]) -> Result<Self> {
        check_ell(ell)?;
        let mut diag_entries = vec![-ell];
        diag_entries.extend(std::iter::repeat(-1).take(areas_e.len()));
        let mut c1 = vec![2 - ell];
        c1.extend(std::iter::repeat(1).take(areas_e.len()));
        let mut areas = vec![area_f];
        areas.extend_from_slice(areas_e);
        let mut data = Self::from_integers(diagonal(&diag_entries), &c1, areas)?;
        data.basis[0] = "F".into();
        Ok(data)
    }

    /// `O(-ℓ)` blown up at points on the zero section, basis `F̃, E_1..E_{b-1}`
    /// where `F̃ = F - ΣE_j` is the proper transform of the zero section.
    pub fn oell_on_section(ell: i64, area_ftilde: f64, areas_e: &[f64]) -> Result<Self> {
        check_ell(ell)?;
        let k = areas_e.len();
        let b = k + 1;
        let mut q = vec![vec![0; b]; b];
        q[0][0] = -ell - k as i64;
        for j in 1..b {
            q[0][j] = 1;
            q[j][0] = 1;
            q[j][j] = -1;
        }
        let mut c1 = vec![2 - ell - k as i64];
        c1.extend(std::iter::repeat(1).take(k));
        let mut areas = vec![area_ftilde];
        areas.extend_from_slice(areas_e);
        let mut data = Self::from_integers(q, &c1, areas)?;
        data.basis[0] = "F~".into();
        Ok(data)
    }
}

fn check_ell(ell: i64) -> Result<()> {
    if ell <= 0 {
        return Err(MassError::InvalidParameter(format!(
            "degree ℓ must be positive, got {ell}"
        )));
    }
    Ok(())
}

pub fn diagonal(entries: &[i64]) -> IntersectionMatrix {
    let b = entries.len();
    let mut q = vec![vec![0; b]; b];
    for (j, &e) in entries.iter().enumerate() {
        q[j][j] = e;
    }
    q
}

/// Coefficients `a` of the cycle Poincaré dual to `♣c₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChernVector {
    pub a: Vec<BigRational>,
}

impl ChernVector {
    /// `Σ a_j area_j` for float areas.
    pub fn pair(&self, areas: &[f64]) -> f64 {
        self.a
            .iter()
            .zip(areas)
            .map(|(a, area)| to_f64(a) * area)
            .sum()
    }

    /// `Σ a_j area_j` kept exact, for areas given as rationals (e.g. in units of π).
    pub fn pair_exact(&self, areas: &[BigRational]) -> BigRational {
        self.a
            .iter()
            .zip(areas)
            .fold(BigRational::zero(), |acc, (a, area)| acc + a * area)
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().all(Zero::is_zero)
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn rational_matrix(q: &[Vec<i64>]) -> Vec<Vec<BigRational>> {
    q.iter()
        .map(|row| {
            row.iter()
                .map(|&v| BigRational::from_integer(BigInt::from(v)))
                .collect()
        })
        .collect()
}

/// Gauss–Jordan on the augmented system `[Q | rhs]` over ℚ. `rhs` is modified
/// in place into `Q⁻¹ rhs`.
fn gauss_jordan(mut m: Vec<Vec<BigRational>>, rhs: &mut [Vec<BigRational>]) -> Result<()> {
    let b = m.len();
    for col in 0..b {
        let pivot = (col..b)
            .find(|&r| !m[r][col].is_zero())
            .ok_or(MassError::SingularIntersectionForm)?;
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let inv = m[col][col].recip();
        for v in m[col].iter_mut() {
            *v *= &inv;
        }
        for v in rhs[col].iter_mut() {
            *v *= &inv;
        }
        for r in 0..b {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].clone();
            for c in 0..b {
                let delta = &factor * &m[col][c];
                m[r][c] -= delta;
            }
            for c in 0..rhs[r].len() {
                let delta = &factor * &rhs[col][c];
                rhs[r][c] -= delta;
            }
        }
    }
    Ok(())
}

/// Exact inverse of an integer matrix.
pub fn rational_inverse(q: &[Vec<i64>]) -> Result<Vec<Vec<BigRational>>> {
    let b = q.len();
    let mut rhs: Vec<Vec<BigRational>> = (0..b)
        .map(|j| {
            (0..b)
                .map(|k| {
                    if j == k {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                })
                .collect()
        })
        .collect();
    gauss_jordan(rational_matrix(q), &mut rhs)?;
    Ok(rhs)
}

/// Exact solve of `Q a = rhs`.
pub fn rational_solve(q: &[Vec<i64>], rhs: &[BigRational]) -> Result<Vec<BigRational>> {
    let mut cols: Vec<Vec<BigRational>> = rhs.iter().map(|v| vec![v.clone()]).collect();
    gauss_jordan(rational_matrix(q), &mut cols)?;
    Ok(cols.into_iter().map(|mut c| c.remove(0)).collect())
}

pub fn solve_chern_coefficients(data: &IntersectionData) -> Result<ChernVector> {
    let a = rational_solve(&data.q, &data.c1)?;
    Ok(ChernVector { a })
}

/// Mass of a scalar-flat ALE Kähler surface: `-(1/3π) Σ a_j ∫_{E_j}[ω]`.
/// An empty basis (ℂ²) gives zero.
pub fn topological_mass_surface(data: &IntersectionData) -> Result<f64> {
    if data.rank() == 0 {
        return Ok(0.0);
    }
    let chern = solve_chern_coefficients(data)?;
    Ok(-chern.pair(&data.areas) / (3.0 * PI))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralMassInput {
    /// Complex dimension.
    pub m: i64,
    /// `⟨♣c₁, [ω]^{m-1}⟩`.
    pub pairing: f64,
    /// `∫_M s dμ`.
    pub scalar_integral: f64,
}

pub fn factorial(k: i64) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * j as f64)
}

/// `(m-1)! / (4(2m-1)π^m)`, the coefficient of the scalar curvature term.
pub fn scalar_coefficient(m: i64) -> f64 {
    factorial(m - 1) / (4.0 * (2 * m - 1) as f64 * PI.powi(m as i32))
}

fn general_mass_unchecked(m: i64, pairing: f64, scalar_integral: f64) -> f64 {
    -pairing / ((2 * m - 1) as f64 * PI.powi(m as i32 - 1)) + scalar_coefficient(m) * scalar_integral
}

/// Mass of an ALE Kähler manifold of complex dimension `m` from its
/// cohomological data and total scalar curvature.
pub fn topological_mass_general(input: &GeneralMassInput) -> Result<f64> {
    if input.m < 2 {
        return Err(MassError::InvalidDimension(input.m));
    }
    Ok(general_mass_unchecked(input.m, input.pairing, input.scalar_integral))
}

/// AE surfaces: `Q = -I` and `c₁` dual to `-ΣE_j`, so the mass is `(1/3π) Σ areas`.
pub fn mass_ae_blowup(areas: &[f64]) -> f64 {
    areas.iter().sum::<f64>() / (3.0 * PI)
}

/// `O(-ℓ)` blown up at `b-1` points away from the zero section.
pub fn mass_oell_off_section(ell: i64, area_f: f64, areas_e: &[f64]) -> Result<f64> {
    check_ell(ell)?;
    let l = ell as f64;
    Ok(((2.0 - l) / l * area_f + areas_e.iter().sum::<f64>()) / (3.0 * PI))
}

/// `O(-ℓ)` blown up at `b-1` points on the zero section; `area_ftilde` is the
/// area of the proper transform.
pub fn mass_oell_on_section(ell: i64, area_ftilde: f64, areas_e: &[f64]) -> Result<f64> {
    check_ell(ell)?;
    let l = ell as f64;
    Ok(((2.0 - l) * area_ftilde + 2.0 * areas_e.iter().sum::<f64>()) / (3.0 * PI * l))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimalResolutionCertificate {
    /// Every `E_j·E_j <= -2` and `∫_{E_j} c₁ <= 0`.
    pub hypotheses_hold: bool,
    /// `Q⁻¹ <= 0` entrywise.
    pub entrywise_nonpositive: bool,
    pub all_a_nonneg: bool,
    pub mass: f64,
    /// `a = 0`, i.e. `c₁ = 0`: the mass vanishes and the metric is Ricci-flat.
    pub is_ricci_flat_case: bool,
}

impl MinimalResolutionCertificate {
    /// Both sign conditions hold, so the mass is certified non-positive.
    pub fn certifies_nonpositive(&self) -> bool {
        self.entrywise_nonpositive && self.all_a_nonneg
    }
}

pub fn minimal_resolution_certificate(data: &IntersectionData) -> Result<MinimalResolutionCertificate> {
    let inverse = rational_inverse(&data.q)?;
    let chern = solve_chern_coefficients(data)?;
    let hypotheses_hold = (0..data.rank()).all(|j| data.q[j][j] <= -2)
        && data.c1.iter().all(|c| !c.is_positive());
    Ok(MinimalResolutionCertificate {
        hypotheses_hold,
        entrywise_nonpositive: inverse.iter().flatten().all(|v| !v.is_positive()),
        all_a_nonneg: chern.a.iter().all(|v| !v.is_negative()),
        mass: -chern.pair(&data.areas) / (3.0 * PI),
        is_ricci_flat_case: chern.is_zero(),
    })
}

/// `(4π^m(2m-1)/(m-1)!) · mass`: how far the compact Gauss–Bonnet-type identity
/// `∫s dμ = (4π/(m-1)!)⟨c₁,[ω]^{m-1}⟩` fails. Algebraically equal to
/// `scalar_integral - (4π/(m-1)!)·pairing`.
pub fn compact_anomaly(m: i64, pairing_c1: f64, scalar_integral: f64) -> f64 {
    let mass = general_mass_unchecked(m, pairing_c1, scalar_integral);
    4.0 * PI.powi(m as i32) * (2 * m - 1) as f64 / factorial(m - 1) * mass
}

/// Simply-laced Dynkin types.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ade {
    A(usize),
    D(usize),
    E(usize),
}

impl fmt::Display for Ade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ade::A(n) => write!(f, "A{n}"),
            Ade::D(n) => write!(f, "D{n}"),
            Ade::E(n) => write!(f, "E{n}"),
        }
    }
}

impl Ade {
    pub fn rank(&self) -> usize {
        match *self {
            Ade::A(n) | Ade::D(n) | Ade::E(n) => n,
        }
    }

    /// All types of rank at most `max_rank` (`A_n`, `D_n` for n >= 4, `E_6..E_8`).
    pub fn up_to_rank(max_rank: usize) -> Vec<Ade> {
        let mut out: Vec<Ade> = (1..=max_rank).map(Ade::A).collect();
        out.extend((4..=max_rank).map(Ade::D));
        out.extend((6..=max_rank.min(8)).map(Ade::E));
        out
    }

    fn edges(&self) -> Result<Vec<(usize, usize)>> {
        match *self {
            Ade::A(n) if n >= 1 => Ok((1..n).map(|j| (j - 1, j)).collect()),
            Ade::D(n) if n >= 4 => {
                let mut e: Vec<_> = (1..n - 1).map(|j| (j - 1, j)).collect();
                e.push((n - 3, n - 1));
                Ok(e)
            }
            Ade::E(n) if (6..=8).contains(&n) => {
                // chain 0..n-2 with node n-1 attached to node 2
                let mut e: Vec<_> = (1..n - 1).map(|j| (j - 1, j)).collect();
                e.push((2, n - 1));
                Ok(e)
            }
            other => Err(MassError::InvalidParameter(format!("no Dynkin diagram {other}"))),
        }
    }

    /// The negated Cartan matrix: the intersection form of the minimal
    /// resolution of the corresponding Kleinian singularity (−2 curves).
    pub fn intersection_matrix(&self) -> Result<IntersectionMatrix> {
        let n = self.rank();
        let mut q = diagonal(&vec![-2; n]);
        for (j, k) in self.edges()? {
            q[j][k] = 1;
            q[k][j] = 1;
        }
        Ok(q)
    }
}

/// Parses `"p/q"` or `"p"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let parsed = match s.split_once('/') {
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim());
            let q = BigInt::from_str(q.trim());
            match (p, q) {
                (Ok(p), Ok(q)) if !q.is_zero() => Some(BigRational::new(p, q)),
                _ => None,
            }
        }
        None => BigInt::from_str(s).ok().map(BigRational::from_integer),
    };
    parsed.ok_or_else(|| MassError::Input(format!("not a rational number: {s:?}")))
}

pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RationalField {
    Text(String),
    Int(i64),
}

#[derive(Debug, Serialize, Deserialize)]
struct IntersectionJson {
    basis: Vec<String>,
    #[serde(rename = "Q")]
    q: IntersectionMatrix,
    c1: Vec<RationalField>,
    areas: Vec<f64>,
}

impl IntersectionData {
    /// Reads `{"basis": [..], "Q": [[..]], "c1": ["p/q", ..], "areas": [..]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: IntersectionJson =
            serde_json::from_str(text).map_err(|e| MassError::Input(e.to_string()))?;
        let c1 = raw
            .c1
            .iter()
            .map(|field| match field {
                RationalField::Text(s) => parse_rational(s),
                RationalField::Int(v) => Ok(BigRational::from_integer((*v).into())),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(raw.basis, raw.q, c1, raw.areas)
    }

    pub fn to_json(&self) -> String {
        let raw = IntersectionJson {
            basis: self.basis.clone(),
            q: self.q.clone(),
            c1: self.c1.iter().map(|r| RationalField::Text(format_rational(r))).collect(),
            areas: self.areas.clone(),
        };
        serde_json::to_string(&raw).expect("plain data serializes")
    }
}
