//! Torus points, their degree vectors and multiplicity profiles, and the classification into
//! semi-integral point types.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::arith::{self, Rat};
use crate::fan::{Fan, OrbifoldWeights, Weight};
use crate::FanError;

/// A point of `T(ℚ) = (ℚ^*)^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TorusPoint {
    coords: Vec<Rat>,
}

impl TorusPoint {
    pub fn new(coords: Vec<Rat>) -> Result<Self, FanError> {
        if coords.iter().any(Zero::is_zero) {
            return Err(FanError::Parse("torus point coordinates must be nonzero".into()));
        }
        Ok(TorusPoint { coords })
    }

    pub fn from_fractions(fr: &[(i64, i64)]) -> Result<Self, FanError> {
        if fr.iter().any(|&(_, d)| d == 0) {
            return Err(FanError::Parse("zero denominator".into()));
        }
        Self::new(fr.iter().map(|&(n, d)| arith::rat(n, d)).collect())
    }

    pub fn identity(d: usize) -> Self {
        TorusPoint { coords: vec![Rat::one(); d] }
    }

    pub fn coords(&self) -> &[Rat] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn mul(&self, other: &TorusPoint) -> TorusPoint {
        TorusPoint { coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a * b).collect() }
    }

    /// Primes dividing some numerator or denominator.
    pub fn support_primes(&self) -> Result<Vec<u64>, FanError> {
        let mut primes = BTreeSet::new();
        for c in &self.coords {
            for n in [c.numer(), c.denom()] {
                let f = arith::factorize_big(n)
                    .ok_or_else(|| FanError::Unsupported(format!("coordinate {c} too large to factor")))?;
                primes.extend(f.into_iter().map(|(p, _)| p));
            }
        }
        Ok(primes.into_iter().collect())
    }

    /// `j ↦ v_p(t_j)`.
    pub fn degree_vector(&self, p: u64) -> Vec<i64> {
        self.coords.iter().map(|c| arith::valuation_rat(c, p)).collect()
    }
}

impl FromStr for TorusPoint {
    type Err = FanError;

    /// Comma-separated rationals, e.g. `4/9,6`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let coords = s
            .split(',')
            .map(|t| {
                let t = t.trim();
                let (n, d) = t.split_once('/').unwrap_or((t, "1"));
                let n: BigInt = n.trim().parse().map_err(|_| FanError::Parse(format!("bad rational `{t}`")))?;
                let d: BigInt = d.trim().parse().map_err(|_| FanError::Parse(format!("bad rational `{t}`")))?;
                if d.is_zero() {
                    return Err(FanError::Parse(format!("zero denominator in `{t}`")));
                }
                Ok(Rat::new(n, d))
            })
            .collect::<Result<Vec<_>, _>>()?;
        TorusPoint::new(coords)
    }
}

impl fmt::Display for TorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Local multiplicities at one prime: the located cone and the coefficient on each of its rays.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalProfile {
    pub cone: Vec<usize>,
    pub coeffs: Vec<i64>,
}

/// Multiplicity profile over all primes where it is nonzero.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MultiplicityProfile {
    pub by_prime: BTreeMap<u64, LocalProfile>,
}

impl MultiplicityProfile {
    pub fn support(&self) -> impl Iterator<Item = u64> + '_ {
        self.by_prime.keys().copied()
    }

    /// Multiplicity of the point against the boundary divisor of ray `j` at `p`.
    pub fn multiplicity(&self, p: u64, ray: usize) -> i64 {
        self.by_prime
            .get(&p)
            .and_then(|lp| lp.cone.iter().position(|&j| j == ray).map(|k| lp.coeffs[k]))
            .unwrap_or(0)
    }
}

pub fn locate_degree(fan: &Fan, degree: &[i64]) -> Result<LocalProfile, FanError> {
    let loc = fan.locate_int(degree).ok_or_else(|| {
        FanError::Unsupported(format!("degree vector {degree:?} has no integral location; fan not complete and regular"))
    })?;
    Ok(LocalProfile { cone: loc.cone, coeffs: loc.coeffs })
}

pub fn multiplicity_profile(fan: &Fan, point: &TorusPoint) -> Result<MultiplicityProfile, FanError> {
    let mut by_prime = BTreeMap::new();
    for p in point.support_primes()? {
        let deg = point.degree_vector(p);
        let lp = locate_degree(fan, &deg)?;
        if !lp.cone.is_empty() {
            by_prime.insert(p, lp);
        }
    }
    Ok(MultiplicityProfile { by_prime })
}

/// Multiplicities of a projective point against the coordinate hyperplanes at `p`, after
/// normalizing to coprime coordinates. `None` marks a coordinate that vanishes.
pub fn crosscheck_projective(x: &[BigInt], p: u64) -> Vec<Option<u32>> {
    let g = x.iter().fold(BigInt::zero(), |g, v| g.gcd(v));
    x.iter()
        .map(|v| if v.is_zero() { None } else { Some(arith::valuation(&(v / &g), p)) })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Campana,
    Darmon,
    WeakCampana,
    StrongCampana,
    StrongDarmon,
    GeomCampana,
    GeomDarmon,
}

/// Indicator family used for counting and densities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CountingKind {
    Campana,
    Darmon,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Campana,
        Variant::Darmon,
        Variant::WeakCampana,
        Variant::StrongCampana,
        Variant::StrongDarmon,
        Variant::GeomCampana,
        Variant::GeomDarmon,
    ];

    /// Counting family in the split smooth case, where geometric and strong points agree
    /// with the ordinary ones. Weak points have no such family.
    pub fn counting_kind(self) -> Option<CountingKind> {
        match self {
            Variant::Campana | Variant::StrongCampana | Variant::GeomCampana => Some(CountingKind::Campana),
            Variant::Darmon | Variant::StrongDarmon | Variant::GeomDarmon => Some(CountingKind::Darmon),
            Variant::WeakCampana => None,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Variant::Campana => "campana",
            Variant::Darmon => "darmon",
            Variant::WeakCampana => "weak",
            Variant::StrongCampana => "strong-campana",
            Variant::StrongDarmon => "strong-darmon",
            Variant::GeomCampana => "geom-campana",
            Variant::GeomDarmon => "geom-darmon",
        };
        f.write_str(s)
    }
}

impl FromStr for Variant {
    type Err = FanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .iter()
            .copied()
            .find(|v| v.to_string() == s.to_ascii_lowercase())
            .ok_or_else(|| FanError::Parse(format!("unknown variant `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalVerdict {
    pub ok: bool,
    /// The point meets a divisor of infinite weight.
    pub infinite_weight_violation: bool,
}

/// The condition at one prime, given the located cone and coefficients. `inertia` holds
/// `f` per ray for the strong variants (all 1 when absent).
pub fn local_condition(
    fan: &Fan,
    weights: &OrbifoldWeights,
    variant: Variant,
    inertia: Option<&[u32]>,
    cone: &[usize],
    coeffs: &[i64],
) -> LocalVerdict {
    let mut weak_sum = Rat::zero();
    for (&j, &lam) in cone.iter().zip(coeffs) {
        if lam == 0 {
            continue;
        }
        let m = match fan.ray_weight(weights, j) {
            Weight::Infinite => return LocalVerdict { ok: false, infinite_weight_violation: true },
            Weight::Finite(m) => i64::from(m),
        };
        let f = inertia.map_or(1, |t| i64::from(t[j]));
        let ok = match variant {
            Variant::Campana | Variant::GeomCampana => lam >= m,
            Variant::StrongCampana => lam * f >= m,
            Variant::Darmon | Variant::GeomDarmon => lam % m == 0,
            Variant::StrongDarmon => (lam * f) % m == 0,
            Variant::WeakCampana => {
                if m != 1 {
                    weak_sum += arith::rat(lam, m);
                }
                true
            }
        };
        if !ok {
            return LocalVerdict { ok: false, infinite_weight_violation: false };
        }
    }
    if variant == Variant::WeakCampana && weak_sum.is_positive() && weak_sum < Rat::one() {
        return LocalVerdict { ok: false, infinite_weight_violation: false };
    }
    LocalVerdict { ok: true, infinite_weight_violation: false }
}

pub fn classify_local_detailed(
    fan: &Fan,
    weights: &OrbifoldWeights,
    point: &TorusPoint,
    p: u64,
    variant: Variant,
    inertia: Option<&[u32]>,
) -> Result<LocalVerdict, FanError> {
    fan.check_weights(weights)?;
    let lp = locate_degree(fan, &point.degree_vector(p))?;
    Ok(local_condition(fan, weights, variant, inertia, &lp.cone, &lp.coeffs))
}

pub fn classify_local(
    fan: &Fan,
    weights: &OrbifoldWeights,
    point: &TorusPoint,
    p: u64,
    variant: Variant,
) -> Result<bool, FanError> {
    classify_local_detailed(fan, weights, point, p, variant, None).map(|v| v.ok)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GlobalVerdict {
    pub ok: bool,
    /// Smallest prime where the local condition fails.
    pub witness: Option<u64>,
    pub infinite_weight_violation: bool,
}

pub fn classify_global_detailed(
    fan: &Fan,
    weights: &OrbifoldWeights,
    point: &TorusPoint,
    excluded: &BTreeSet<u64>,
    variant: Variant,
    inertia: Option<&[u32]>,
) -> Result<GlobalVerdict, FanError> {
    fan.check_weights(weights)?;
    let profile = multiplicity_profile(fan, point)?;
    for (&p, lp) in &profile.by_prime {
        if excluded.contains(&p) {
            continue;
        }
        let v = local_condition(fan, weights, variant, inertia, &lp.cone, &lp.coeffs);
        if !v.ok {
            return Ok(GlobalVerdict {
                ok: false,
                witness: Some(p),
                infinite_weight_violation: v.infinite_weight_violation,
            });
        }
    }
    Ok(GlobalVerdict { ok: true, witness: None, infinite_weight_violation: false })
}

pub fn classify_global(
    fan: &Fan,
    weights: &OrbifoldWeights,
    point: &TorusPoint,
    excluded: &BTreeSet<u64>,
    variant: Variant,
) -> Result<bool, FanError> {
    classify_global_detailed(fan, weights, point, excluded, variant, None).map(|v| v.ok)
}
