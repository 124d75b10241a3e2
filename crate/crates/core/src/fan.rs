//! Fans in a lattice `N = ℤ^d`: validation, regularity, completeness, cone location and
//! piecewise-linear functions.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::{rat_to_f64, Rat};
use crate::linalg::{self, RatMatrix};
use crate::FanError;

/// Weight attached to one orbit of boundary divisors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Weight {
    Finite(u32),
    Infinite,
}

impl Weight {
    pub fn finite(self) -> Option<u32> {
        match self {
            Weight::Finite(m) => Some(m),
            Weight::Infinite => None,
        }
    }

    /// `1/m`, zero for infinite weight.
    pub fn reciprocal(self) -> Rat {
        match self {
            Weight::Finite(m) => Rat::new(BigInt::one(), BigInt::from(m)),
            Weight::Infinite => Rat::zero(),
        }
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Finite(m) => write!(f, "{m}"),
            Weight::Infinite => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for Weight {
    type Err = FanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s == "∞" {
            return Ok(Weight::Infinite);
        }
        match s.parse::<u32>() {
            Ok(m) if m >= 1 => Ok(Weight::Finite(m)),
            _ => Err(FanError::Parse(format!("invalid weight `{s}`"))),
        }
    }
}

/// Orbifold weights `m_i`, one per orbit of rays.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OrbifoldWeights(pub Vec<Weight>);

impl OrbifoldWeights {
    pub fn ones(r: usize) -> Self {
        OrbifoldWeights(vec![Weight::Finite(1); r])
    }

    pub fn uniform(r: usize, m: u32) -> Self {
        OrbifoldWeights(vec![Weight::Finite(m); r])
    }

    pub fn finite(ms: &[u32]) -> Self {
        OrbifoldWeights(ms.iter().map(|&m| Weight::Finite(m)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|w| w.finite().is_some())
    }

    pub fn parse_list(s: &str) -> Result<Self, FanError> {
        s.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>, _>>()
            .map(OrbifoldWeights)
    }
}

impl fmt::Display for OrbifoldWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|w| w.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Unvalidated fan description: rays plus maximal cones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawFan {
    pub dim: usize,
    pub rays: Vec<Vec<i64>>,
    pub cones: Vec<Vec<usize>>,
    pub orbits: Option<Vec<usize>>,
    /// Require every cone to be unimodular.
    pub flagged_regular: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FanIssue {
    WrongDimension { ray: usize },
    ZeroRay { ray: usize },
    NonPrimitiveRay { ray: usize },
    DuplicateRays { first: usize, second: usize },
    BadRayIndex { cone: usize, index: usize },
    DependentGenerators { cone: usize },
    NotUnimodular { cone: usize, index: BigInt },
    ImproperIntersection { first: usize, second: usize },
    BadOrbits(String),
}

impl fmt::Display for FanIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FanIssue::WrongDimension { ray } => write!(f, "ray {ray} has the wrong dimension"),
            FanIssue::ZeroRay { ray } => write!(f, "ray {ray} is zero"),
            FanIssue::NonPrimitiveRay { ray } => write!(f, "ray {ray} is not primitive"),
            FanIssue::DuplicateRays { first, second } => write!(f, "rays {first} and {second} coincide"),
            FanIssue::BadRayIndex { cone, index } => write!(f, "cone {cone} references missing ray {index}"),
            FanIssue::DependentGenerators { cone } => {
                write!(f, "cone {cone} has linearly dependent generators")
            }
            FanIssue::NotUnimodular { cone, index } => {
                write!(f, "cone {cone} is not unimodular (index {index})")
            }
            FanIssue::ImproperIntersection { first, second } => {
                write!(f, "cones {first} and {second} do not meet in a common face")
            }
            FanIssue::BadOrbits(msg) => write!(f, "orbit labels: {msg}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub issues: Vec<FanIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

fn gcd_slice(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, &x| g.gcd(&x))
}

fn ray_matrix(rays: &[Vec<i64>], cone: &[usize]) -> Vec<Vec<BigInt>> {
    cone.iter().map(|&j| rays[j].iter().map(|&x| BigInt::from(x)).collect()).collect()
}

/// Checks the fan axioms on a raw description and lists every violation found.
pub fn validate_fan(raw: &RawFan) -> ValidationReport {
    let mut issues = Vec::new();
    let d = raw.dim;
    for (j, r) in raw.rays.iter().enumerate() {
        if r.len() != d {
            issues.push(FanIssue::WrongDimension { ray: j });
        } else if r.iter().all(|&x| x == 0) {
            issues.push(FanIssue::ZeroRay { ray: j });
        } else if gcd_slice(r) != 1 {
            issues.push(FanIssue::NonPrimitiveRay { ray: j });
        }
    }
    for i in 0..raw.rays.len() {
        for j in i + 1..raw.rays.len() {
            if raw.rays[i] == raw.rays[j] {
                issues.push(FanIssue::DuplicateRays { first: i, second: j });
            }
        }
    }
    if !issues.is_empty() {
        return ValidationReport { issues };
    }
    let mut cones_ok = true;
    for (c, cone) in raw.cones.iter().enumerate() {
        if let Some(&bad) = cone.iter().find(|&&j| j >= raw.rays.len()) {
            issues.push(FanIssue::BadRayIndex { cone: c, index: bad });
            cones_ok = false;
            continue;
        }
        let rows: Vec<Vec<i64>> = cone.iter().map(|&j| raw.rays[j].clone()).collect();
        let distinct: BTreeSet<usize> = cone.iter().copied().collect();
        if distinct.len() != cone.len() || linalg::rank_int(&rows) != cone.len() {
            issues.push(FanIssue::DependentGenerators { cone: c });
            cones_ok = false;
            continue;
        }
        if raw.flagged_regular && !cone.is_empty() {
            let snf = linalg::smith_normal_form(&ray_matrix(&raw.rays, cone));
            let index: BigInt = snf.diag.iter().product::<BigInt>().abs();
            if !index.is_one() {
                issues.push(FanIssue::NotUnimodular { cone: c, index });
            }
        }
    }
    if cones_ok {
        for a in 0..raw.cones.len() {
            for b in a + 1..raw.cones.len() {
                if !meet_in_common_face(&raw.rays, &raw.cones[a], &raw.cones[b]) {
                    issues.push(FanIssue::ImproperIntersection { first: a, second: b });
                }
            }
        }
    }
    if let Some(orbits) = &raw.orbits {
        if orbits.len() != raw.rays.len() {
            issues.push(FanIssue::BadOrbits(format!(
                "{} labels for {} rays",
                orbits.len(),
                raw.rays.len()
            )));
        } else {
            let used: BTreeSet<usize> = orbits.iter().copied().collect();
            let r = used.len();
            if used.iter().any(|&i| i >= r) {
                issues.push(FanIssue::BadOrbits("orbit indices must be 0..r without gaps".into()));
            }
        }
    }
    ValidationReport { issues }
}

/// Two simplicial cones meet in a common face iff no nonnegative relation between their
/// generators involves a non-shared generator.
fn meet_in_common_face(rays: &[Vec<i64>], a: &[usize], b: &[usize]) -> bool {
    let d = rays.first().map_or(0, Vec::len);
    let common: BTreeSet<usize> = a.iter().filter(|j| b.contains(j)).copied().collect();
    let k = a.len() + b.len();
    let mut eq = vec![vec![Rat::zero(); k]; d];
    let mut weights = vec![Rat::zero(); k];
    for (col, &j) in a.iter().enumerate() {
        for (row, &x) in rays[j].iter().enumerate() {
            eq[row][col] = Rat::from_integer(x.into());
        }
        if !common.contains(&j) {
            weights[col] = Rat::one();
        }
    }
    for (off, &j) in b.iter().enumerate() {
        let col = a.len() + off;
        for (row, &x) in rays[j].iter().enumerate() {
            eq[row][col] = -Rat::from_integer(x.into());
        }
        if !common.contains(&j) {
            weights[col] = Rat::one();
        }
    }
    if weights.iter().all(Zero::is_zero) {
        return true;
    }
    !linalg::nonneg_feasible(&eq, &weights)
}

/// Coordinates chart of a full-dimensional simplicial cone.
#[derive(Clone, Debug)]
struct Chart {
    rays: Vec<usize>,
    inverse: RatMatrix,
    inverse_int: Option<Vec<Vec<i64>>>,
    inverse_f64: Vec<Vec<f64>>,
}

/// A validated simplicial fan.
#[derive(Clone, Debug)]
pub struct Fan {
    dim: usize,
    rays: Vec<Vec<i64>>,
    maximal: Vec<Vec<usize>>,
    cones: Vec<Vec<usize>>,
    orbit_of_ray: Vec<usize>,
    orbit_count: usize,
    charts: Vec<Chart>,
    smooth_complete: OnceLock<bool>,
}

/// Output of [`Fan::locate`]: the minimal cone containing a vector and the (positive)
/// coefficients of the vector on its rays.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Located {
    pub cone: Vec<usize>,
    pub coeffs: Vec<Rat>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocatedInt {
    pub cone: Vec<usize>,
    pub coeffs: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompletenessWitness {
    /// A codimension-one cone lying in a number of maximal cones other than two.
    Facet(Vec<usize>),
    /// A direction covered by no maximal cone.
    Uncovered(Vec<i64>),
    /// A direction in the interior of two maximal cones.
    Overlap(Vec<i64>),
    /// A maximal cone of dimension below `d`.
    LowDimensional(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Completeness {
    pub complete: bool,
    pub witness: Option<CompletenessWitness>,
}

pub const PROBE_COUNT: usize = 100;
const PROBE_SEED: u64 = 0x5eed_fa17;

impl Fan {
    /// Validates a raw description and builds the fan with all faces.
    pub fn new(raw: RawFan) -> Result<Fan, FanError> {
        let report = validate_fan(&raw);
        if !report.is_valid() {
            return Err(FanError::Invalid(report.issues));
        }
        let orbit_of_ray = raw.orbits.clone().unwrap_or_else(|| (0..raw.rays.len()).collect());
        let orbit_count = orbit_of_ray.iter().copied().max().map_or(0, |m| m + 1);
        let mut maximal: Vec<Vec<usize>> = raw
            .cones
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.sort_unstable();
                c
            })
            .collect();
        maximal.sort();
        maximal.dedup();
        // drop listed cones that are faces of other listed cones
        let listed = maximal.clone();
        maximal.retain(|c| !listed.iter().any(|o| o != c && c.iter().all(|j| o.contains(j))));
        let mut faces: BTreeSet<Vec<usize>> = BTreeSet::new();
        for c in &maximal {
            for mask in 0u32..(1 << c.len()) {
                let face: Vec<usize> =
                    c.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &j)| j).collect();
                faces.insert(face);
            }
        }
        faces.insert(Vec::new());
        let mut cones: Vec<Vec<usize>> = faces.into_iter().collect();
        cones.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        let d = raw.dim;
        let charts = maximal
            .iter()
            .filter(|c| c.len() == d && d > 0)
            .map(|c| {
                let cols = linalg::to_rat_matrix(&c.iter().map(|&j| raw.rays[j].clone()).collect::<Vec<_>>());
                // columns are rays: matrix G with G[i][k] = ray_k[i]
                let g = linalg::transpose(&cols);
                let inverse = linalg::inverse(&g).expect("independent generators");
                let inverse_int = inverse
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|q| if q.is_integer() { q.to_integer().to_i64() } else { None })
                            .collect::<Option<Vec<i64>>>()
                    })
                    .collect::<Option<Vec<_>>>();
                let inverse_f64 = inverse.iter().map(|row| row.iter().map(rat_to_f64).collect()).collect();
                Chart { rays: c.clone(), inverse, inverse_int, inverse_f64 }
            })
            .collect();
        Ok(Fan { dim: d, rays: raw.rays, maximal, cones, orbit_of_ray, orbit_count, charts, smooth_complete: OnceLock::new() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rays(&self) -> &[Vec<i64>] {
        &self.rays
    }

    pub fn ray_count(&self) -> usize {
        self.rays.len()
    }

    pub fn maximal_cones(&self) -> &[Vec<usize>] {
        &self.maximal
    }

    /// All cones, including the zero cone, ordered by dimension.
    pub fn cones(&self) -> &[Vec<usize>] {
        &self.cones
    }

    pub fn orbit_of_ray(&self, j: usize) -> usize {
        self.orbit_of_ray[j]
    }

    pub fn orbit_count(&self) -> usize {
        self.orbit_count
    }

    pub fn is_split(&self) -> bool {
        self.orbit_count == self.rays.len()
    }

    pub fn ray_weight(&self, weights: &OrbifoldWeights, j: usize) -> Weight {
        weights.0[self.orbit_of_ray[j]]
    }

    pub fn check_weights(&self, weights: &OrbifoldWeights) -> Result<(), FanError> {
        if weights.len() != self.orbit_count {
            return Err(FanError::WeightCount { expected: self.orbit_count, got: weights.len() });
        }
        Ok(())
    }

    /// Every maximal cone has unit index in `N`.
    pub fn is_regular(&self) -> bool {
        self.maximal.iter().all(|c| {
            c.is_empty() || {
                let snf = linalg::smith_normal_form(&ray_matrix(&self.rays, c));
                snf.diag.iter().all(|x| x.abs().is_one())
            }
        })
    }

    fn cones_containing(&self, x: &[Rat]) -> Vec<(usize, bool)> {
        // (chart index, interior?)
        self.charts
            .iter()
            .enumerate()
            .filter_map(|(k, ch)| {
                let lam = linalg::mat_vec(&ch.inverse, x);
                if lam.iter().any(Signed::is_negative) {
                    None
                } else {
                    Some((k, lam.iter().all(Signed::is_positive)))
                }
            })
            .collect()
    }

    /// Facet pairing plus probing with a fixed deterministic list of generic directions.
    pub fn completeness(&self) -> Completeness {
        let d = self.dim;
        let fail = |w| Completeness { complete: false, witness: Some(w) };
        if d == 0 {
            return Completeness { complete: true, witness: None };
        }
        if let Some(c) = self.maximal.iter().find(|c| c.len() != d) {
            return fail(CompletenessWitness::LowDimensional(c.clone()));
        }
        let mut bad_facet = None;
        for facet in self.cones.iter().filter(|c| c.len() == d - 1) {
            let n = self.maximal.iter().filter(|m| facet.iter().all(|j| m.contains(j))).count();
            if n != 2 {
                bad_facet = Some(facet.clone());
                break;
            }
        }
        if let Some(facet) = bad_facet {
            // look for an uncovered sum of d rays before falling back to probes
            for subset in subsets(self.rays.len(), d) {
                if self.maximal.contains(&subset) {
                    continue;
                }
                let v: Vec<i64> = (0..d).map(|i| subset.iter().map(|&j| self.rays[j][i]).sum()).collect();
                if v.iter().all(|&x| x == 0) {
                    continue;
                }
                let q: Vec<Rat> = v.iter().map(|&x| Rat::from_integer(x.into())).collect();
                if self.cones_containing(&q).is_empty() {
                    return fail(CompletenessWitness::Uncovered(v));
                }
            }
            if let Some(w) = self.probe().witness {
                return fail(w);
            }
            return fail(CompletenessWitness::Facet(facet));
        }
        self.probe()
    }

    fn probe(&self) -> Completeness {
        let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
        let mut accepted = 0;
        while accepted < PROBE_COUNT {
            let v: Vec<i64> = (0..self.dim).map(|_| rng.gen_range(-997..=997)).collect();
            if v.iter().all(|&x| x == 0) {
                continue;
            }
            let q: Vec<Rat> = v.iter().map(|&x| Rat::from_integer(x.into())).collect();
            let hits = self.cones_containing(&q);
            if hits.is_empty() {
                return Completeness { complete: false, witness: Some(CompletenessWitness::Uncovered(v)) };
            }
            if hits.iter().any(|&(_, interior)| !interior) {
                // boundary hit: take the next probe
                continue;
            }
            if hits.len() > 1 {
                return Completeness { complete: false, witness: Some(CompletenessWitness::Overlap(v)) };
            }
            accepted += 1;
        }
        Completeness { complete: true, witness: None }
    }

    pub fn is_complete(&self) -> bool {
        self.completeness().complete
    }

    /// Regular and complete, computed once.
    pub fn is_smooth_complete(&self) -> bool {
        *self.smooth_complete.get_or_init(|| self.is_regular() && self.is_complete())
    }

    /// Minimal cone containing `x`, with coefficients. `None` if `x` is outside the support.
    pub fn locate(&self, x: &[Rat]) -> Option<Located> {
        for ch in &self.charts {
            let lam = linalg::mat_vec(&ch.inverse, x);
            if lam.iter().any(Signed::is_negative) {
                continue;
            }
            let (cone, coeffs) = ch
                .rays
                .iter()
                .zip(lam)
                .filter(|(_, l)| !l.is_zero())
                .map(|(&j, l)| (j, l))
                .unzip();
            return Some(Located { cone, coeffs });
        }
        None
    }

    pub fn locate_int(&self, x: &[i64]) -> Option<LocatedInt> {
        if self.dim == 0 {
            return Some(LocatedInt { cone: Vec::new(), coeffs: Vec::new() });
        }
        for ch in &self.charts {
            let Some(inv) = &ch.inverse_int else {
                let q: Vec<Rat> = x.iter().map(|&v| Rat::from_integer(v.into())).collect();
                let loc = self.locate(&q)?;
                if loc.coeffs.iter().all(Rat::is_integer) {
                    return Some(LocatedInt {
                        cone: loc.cone,
                        coeffs: loc.coeffs.iter().map(|c| c.to_integer().to_i64().unwrap()).collect(),
                    });
                }
                return None;
            };
            let mut ok = true;
            let mut cone = Vec::new();
            let mut coeffs = Vec::new();
            for (row, &j) in inv.iter().zip(&ch.rays) {
                let l: i64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
                if l < 0 {
                    ok = false;
                    break;
                }
                if l > 0 {
                    cone.push(j);
                    coeffs.push(l);
                }
            }
            if ok {
                return Some(LocatedInt { cone, coeffs });
            }
        }
        None
    }

    /// Location of a real vector, choosing the chart where it is deepest inside.
    pub fn locate_f64(&self, x: &[f64]) -> Option<(Vec<usize>, Vec<f64>)> {
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for (k, ch) in self.charts.iter().enumerate() {
            let lam: Vec<f64> = ch.inverse_f64.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect();
            let min = lam.iter().copied().fold(f64::INFINITY, f64::min);
            if best.as_ref().map_or(true, |(m, _, _)| min > *m) {
                best = Some((min, k, lam));
            }
        }
        let (min, k, lam) = best?;
        let scale = x.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1.0);
        if min < -1e-9 * scale {
            return None;
        }
        Some((self.charts[k].rays.clone(), lam.into_iter().map(|l| l.max(0.0)).collect()))
    }

    /// Rational row-matrix of the chart of the given maximal cone (rows give ray coefficients).
    pub(crate) fn chart_inverses(&self) -> impl Iterator<Item = (&[usize], &RatMatrix)> {
        self.charts.iter().map(|c| (c.rays.as_slice(), &c.inverse))
    }

    pub fn evaluate_pl(&self, phi: &PlFunction, x: &[Rat]) -> Option<Rat> {
        let loc = self.locate(x)?;
        Some(loc.cone.iter().zip(&loc.coeffs).map(|(&j, c)| c * &phi.values[j]).sum())
    }

    pub fn evaluate_pl_f64(&self, phi: &[f64], x: &[f64]) -> Option<f64> {
        let (cone, lam) = self.locate_f64(x)?;
        Some(cone.iter().zip(&lam).map(|(&j, l)| l * phi[j]).sum())
    }

    /// Largest sup-norm of a ray generator.
    pub fn ray_sup_norm(&self) -> i64 {
        self.rays.iter().flat_map(|r| r.iter().map(|x| x.abs())).max().unwrap_or(1)
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// A Σ-piecewise-linear function, given by its values on the rays.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlFunction {
    pub values: Vec<Rat>,
}

impl PlFunction {
    pub fn new(values: Vec<Rat>) -> Self {
        PlFunction { values }
    }

    /// φ_Σ: value 1 on every ray.
    pub fn anticanonical(fan: &Fan) -> Self {
        PlFunction { values: vec![Rat::one(); fan.ray_count()] }
    }

    /// φ_{Σ,m}: value `1/m_i` on the rays of orbit `i` (zero for infinite weight).
    pub fn log_anticanonical(fan: &Fan, weights: &OrbifoldWeights) -> Self {
        PlFunction {
            values: (0..fan.ray_count()).map(|j| fan.ray_weight(weights, j).reciprocal()).collect(),
        }
    }

    /// Globally linear function `x ↦ <u, x>`.
    pub fn linear(fan: &Fan, u: &[Rat]) -> Self {
        PlFunction {
            values: fan
                .rays()
                .iter()
                .map(|r| r.iter().zip(u).map(|(&a, b)| b * Rat::from_integer(a.into())).sum())
                .collect(),
        }
    }

    pub fn zero(fan: &Fan) -> Self {
        PlFunction { values: vec![Rat::zero(); fan.ray_count()] }
    }

    pub fn add(&self, other: &PlFunction) -> PlFunction {
        PlFunction { values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, c: &Rat) -> PlFunction {
        PlFunction { values: self.values.iter().map(|a| a * c).collect() }
    }

    /// Constant on every orbit.
    pub fn is_invariant(&self, fan: &Fan) -> bool {
        (0..fan.ray_count()).all(|i| {
            (0..fan.ray_count())
                .all(|j| fan.orbit_of_ray(i) != fan.orbit_of_ray(j) || self.values[i] == self.values[j])
        })
    }

    pub fn values_f64(&self) -> Vec<f64> {
        self.values.iter().map(rat_to_f64).collect()
    }
}
