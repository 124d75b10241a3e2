//! The cone-wise geometric series `R_σ` and their common numerator `Q`, in the plain,
//! Campana and Darmon forms, plus checks on the degrees of `Q - 1`.

use std::fmt;

use num_traits::{One, Zero};

use crate::arith::Rat;
use crate::fan::{Fan, OrbifoldWeights, Weight};
use crate::poly::SparseMultiPoly;
use crate::FanError;

/// One local orbit `(i, w)` of rays: global orbit `i`, place `w`, and its length `f`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockIndex {
    pub orbit: usize,
    pub place: usize,
    pub f: u32,
}

impl fmt::Display for BlockIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u[{},{}]", self.orbit + 1, self.place + 1)
    }
}

/// Locally invariant cones, each recorded as the set of blocks whose rays it contains.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvariantConeSet {
    pub blocks: Vec<BlockIndex>,
    pub cones: Vec<Vec<usize>>,
}

impl InvariantConeSet {
    pub fn new(blocks: Vec<BlockIndex>, mut cones: Vec<Vec<usize>>) -> Result<Self, FanError> {
        for c in &mut cones {
            c.sort_unstable();
            c.dedup();
            if c.iter().any(|&b| b >= blocks.len()) {
                return Err(FanError::Parse(format!("cone {c:?} uses an unknown block")));
            }
        }
        if !cones.iter().any(Vec::is_empty) {
            return Err(FanError::Parse("invariant cone set must contain the zero cone".into()));
        }
        if blocks.iter().any(|b| b.f == 0) {
            return Err(FanError::Parse("inertia degrees must be positive".into()));
        }
        Ok(InvariantConeSet { blocks, cones })
    }

    /// Split data: one block per ray, all `f = 1`.
    pub fn split(fan: &Fan) -> Self {
        Self::with_inertia(fan, &vec![1; fan.ray_count()])
    }

    /// Split cone structure with synthetic inertia degrees attached to the ray blocks.
    pub fn with_inertia(fan: &Fan, f: &[u32]) -> Self {
        let mut place = vec![0usize; fan.orbit_count()];
        let blocks = (0..fan.ray_count())
            .map(|j| {
                let i = fan.orbit_of_ray(j);
                let w = place[i];
                place[i] += 1;
                BlockIndex { orbit: i, place: w, f: f[j] }
            })
            .collect();
        InvariantConeSet { blocks, cones: fan.cones().to_vec() }
    }

    /// A place where Frobenius permutes every orbit transitively: one block per orbit, and the
    /// invariant cones are the cones whose rays form a union of orbits.
    pub fn inert(fan: &Fan) -> Self {
        let r = fan.orbit_count();
        let mut size = vec![0u32; r];
        for j in 0..fan.ray_count() {
            size[fan.orbit_of_ray(j)] += 1;
        }
        let blocks = (0..r).map(|i| BlockIndex { orbit: i, place: 0, f: size[i] }).collect();
        let cones = fan
            .cones()
            .iter()
            .filter_map(|c| {
                let mut orbits: Vec<usize> = c.iter().map(|&j| fan.orbit_of_ray(j)).collect();
                orbits.sort_unstable();
                orbits.dedup();
                let count: u32 = orbits.iter().map(|&i| size[i]).sum();
                (count as usize == c.len()).then_some(orbits)
            })
            .collect();
        InvariantConeSet { blocks, cones }
    }

    pub fn variable_names(&self) -> Vec<String> {
        self.blocks.iter().map(ToString::to_string).collect()
    }

    fn weight(&self, weights: &OrbifoldWeights, b: usize) -> Result<Weight, FanError> {
        weights.0.get(self.blocks[b].orbit).copied().ok_or(FanError::WeightCount {
            expected: self.blocks.iter().map(|b| b.orbit + 1).max().unwrap_or(0),
            got: weights.len(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FanVariant {
    Plain,
    Campana,
    Darmon,
}

impl fmt::Display for FanVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FanVariant::Plain => "plain",
            FanVariant::Campana => "campana",
            FanVariant::Darmon => "darmon",
        })
    }
}

/// (numerator exponent, denominator exponent) of the block factor `u^a / (1 - u^k)`.
fn block_exponents(variant: FanVariant, m: u32, f: u32) -> (u32, u32) {
    match variant {
        FanVariant::Plain => (f, f),
        FanVariant::Campana => (m * f, f),
        FanVariant::Darmon => (m * f, m * f),
    }
}

fn finite_weight(cs: &InvariantConeSet, weights: &OrbifoldWeights, b: usize) -> Result<Option<u32>, FanError> {
    Ok(cs.weight(weights, b)?.finite())
}

/// `R_σ` as (numerator, denominator).
pub fn r_sigma(
    cs: &InvariantConeSet,
    cone: &[usize],
    weights: &OrbifoldWeights,
    variant: FanVariant,
) -> Result<(SparseMultiPoly, SparseMultiPoly), FanError> {
    let n = cs.blocks.len();
    let mut num = SparseMultiPoly::one(n);
    let mut den = SparseMultiPoly::one(n);
    for &b in cone {
        let m = finite_weight(cs, weights, b)?.ok_or_else(|| {
            FanError::Unsupported(format!("block {} has infinite weight and cannot carry a cone term", cs.blocks[b]))
        })?;
        let (a, k) = block_exponents(variant, m, cs.blocks[b].f);
        num = num.mul(&SparseMultiPoly::var_power(n, b, a));
        den = den.mul(&SparseMultiPoly::one_minus(n, b, k));
    }
    Ok((num, den))
}

/// `Q = (Σ_σ R_σ) · Π_b (1 - u_b^{m_b f_b})`, with `m = 1` for the plain form. Blocks of
/// infinite weight are left out, together with every cone containing one.
pub fn q_polynomial(
    cs: &InvariantConeSet,
    weights: &OrbifoldWeights,
    variant: FanVariant,
) -> Result<SparseMultiPoly, FanError> {
    let n = cs.blocks.len();
    let mut ms = Vec::with_capacity(n);
    for b in 0..n {
        ms.push(finite_weight(cs, weights, b)?);
    }
    let mut base = SparseMultiPoly::one(n);
    for (b, m) in ms.iter().enumerate() {
        if let Some(m) = m {
            let m = if variant == FanVariant::Plain { 1 } else { *m };
            base = base.mul(&SparseMultiPoly::one_minus(n, b, m * cs.blocks[b].f));
        }
    }
    let mut q = SparseMultiPoly::zero(n);
    for cone in &cs.cones {
        if cone.iter().any(|&b| ms[b].is_none()) {
            continue;
        }
        let mut term = base.clone();
        for &b in cone {
            let (a, k) = block_exponents(variant, ms[b].expect("finite"), cs.blocks[b].f);
            term = term.mul(&SparseMultiPoly::var_power(n, b, a));
            term = term.div_one_minus(b, k).map_err(|r| {
                FanError::Unsupported(format!("cone sum is not a polynomial multiple: remainder {}", r.0))
            })?;
        }
        q = q.add(&term);
    }
    if q.constant_term() != Rat::one() {
        return Err(FanError::Unsupported(format!("Q has constant term {}", q.constant_term())));
    }
    Ok(q)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundCheck {
    pub applicable: bool,
    pub ok: bool,
    pub witness: Option<String>,
}

impl BoundCheck {
    fn skipped() -> Self {
        BoundCheck { applicable: false, ok: true, witness: None }
    }

    fn from_witness(witness: Option<String>) -> Self {
        BoundCheck { applicable: true, ok: witness.is_none(), witness }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeReport {
    /// Campana: `max deg_i (Q - 1) >= m_i + 1` for every orbit with a term in `Q - 1`.
    pub literal: BoundCheck,
    /// Campana: monomials of `Q - 1` in a single block with `f = 1` have degree `>= m_i + 1`.
    pub single_block: BoundCheck,
    /// Darmon and plain: `Q - 1 = P(u^m)` with every monomial of `P` of degree `>= 2`.
    pub total_degree: BoundCheck,
    /// Every monomial of `Q - 1` has `Σ a_b / m_b >= min_i (m_i + 1) / m_i`.
    pub convergence: BoundCheck,
}

impl DegreeReport {
    pub fn ok(&self) -> bool {
        self.literal.ok && self.single_block.ok && self.total_degree.ok && self.convergence.ok
    }
}

fn monomial_name(cs: &InvariantConeSet, e: &[u32]) -> String {
    let parts: Vec<String> = e
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0)
        .map(|(b, &a)| format!("{}^{a}", cs.blocks[b]))
        .collect();
    parts.join(" * ")
}

pub fn verify_degree_bounds(
    cs: &InvariantConeSet,
    weights: &OrbifoldWeights,
    variant: FanVariant,
    q: &SparseMultiPoly,
) -> Result<DegreeReport, FanError> {
    let n = cs.blocks.len();
    let mut m: Vec<Option<u32>> = Vec::with_capacity(n);
    for b in 0..n {
        let w = finite_weight(cs, weights, b)?;
        m.push(if variant == FanVariant::Plain { w.map(|_| 1) } else { w });
    }
    let p = q.sub(&SparseMultiPoly::one(n));
    let orbits: Vec<usize> = {
        let mut o: Vec<usize> = cs.blocks.iter().map(|b| b.orbit).collect();
        o.sort_unstable();
        o.dedup();
        o
    };
    let orbit_m = |i: usize| cs.blocks.iter().zip(&m).find(|(b, _)| b.orbit == i).and_then(|(_, m)| *m);

    let (literal, single_block) = if variant == FanVariant::Campana {
        let mut lit = None;
        for &i in &orbits {
            let Some(mi) = orbit_m(i) else { continue };
            let deg = |e: &Vec<u32>| -> u32 { (0..n).filter(|&b| cs.blocks[b].orbit == i).map(|b| e[b]).sum() };
            let max = p.terms().map(|(e, _)| deg(e)).max().unwrap_or(0);
            if max > 0 && max < mi + 1 && lit.is_none() {
                lit = Some(format!("orbit {}: deg = {max} < m + 1 = {}", i + 1, mi + 1));
            }
        }
        let mut single = None;
        for (e, _) in p.terms() {
            let support: Vec<usize> = (0..n).filter(|&b| e[b] > 0).collect();
            if let [b] = support[..] {
                if cs.blocks[b].f == 1 {
                    let mi = m[b].expect("term on a finite block");
                    if e[b] < mi + 1 && single.is_none() {
                        single = Some(monomial_name(cs, e));
                    }
                }
            }
        }
        (BoundCheck::from_witness(lit), BoundCheck::from_witness(single))
    } else {
        (BoundCheck::skipped(), BoundCheck::skipped())
    };

    let total_degree = if variant == FanVariant::Campana {
        BoundCheck::skipped()
    } else {
        let k: Vec<u32> = m.iter().map(|x| x.unwrap_or(1)).collect();
        match p.unsubstitute_powers(&k) {
            None => BoundCheck::from_witness(Some("Q - 1 is not a polynomial in u^m".into())),
            Some(pd) => BoundCheck::from_witness(
                pd.terms()
                    .find(|(e, _)| e.iter().sum::<u32>() < 2)
                    .map(|(e, _)| monomial_name(cs, &e.iter().zip(&k).map(|(a, b)| a * b).collect::<Vec<_>>())),
            ),
        }
    };

    let threshold = m
        .iter()
        .flatten()
        .map(|&mi| Rat::new((mi + 1).into(), mi.into()))
        .min()
        .unwrap_or_else(Rat::zero);
    let convergence = BoundCheck::from_witness(
        p.terms()
            .find(|(e, _)| {
                let s: Rat = e
                    .iter()
                    .zip(&m)
                    .filter(|(&a, _)| a > 0)
                    .map(|(&a, mi)| Rat::new(a.into(), mi.unwrap_or(1).into()))
                    .sum();
                s < threshold
            })
            .map(|(e, _)| monomial_name(cs, e)),
    );
    Ok(DegreeReport { literal, single_block, total_degree, convergence })
}
