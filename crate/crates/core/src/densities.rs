//! Local densities of the semi-integral indicator against `1/H`, the real density, and the
//! predicted leading constant.
//!
//! Local measures give `T(ℤ_p)` volume `(1-1/p)^d`, so a raw lattice sum is multiplied by that
//! factor. The Euler factor at `p` is `(1-1/p)^b` times the normalized local density.

use std::fmt;

use num_traits::One;
use rayon::prelude::*;

use crate::arith::{self, rat_to_f64, Rat};
use crate::fan::{Fan, OrbifoldWeights, Weight};
use crate::fan_functions::{q_polynomial, FanVariant, InvariantConeSet};
use crate::picard;
use crate::points::{local_condition, CountingKind, Variant};
use crate::poly::SparseMultiPoly;
use crate::FanError;

fn fan_variant(kind: CountingKind) -> FanVariant {
    match kind {
        CountingKind::Campana => FanVariant::Campana,
        CountingKind::Darmon => FanVariant::Darmon,
    }
}

fn point_variant(kind: CountingKind) -> Variant {
    match kind {
        CountingKind::Campana => Variant::Campana,
        CountingKind::Darmon => Variant::Darmon,
    }
}

fn require_split_smooth(fan: &Fan, weights: &OrbifoldWeights) -> Result<(), FanError> {
    fan.check_weights(weights)?;
    if !fan.is_smooth_complete() {
        return Err(FanError::NotSmoothComplete);
    }
    if !fan.is_split() {
        return Err(FanError::Unsupported("densities are implemented for split fans only".into()));
    }
    Ok(())
}

fn ray_weights(fan: &Fan, weights: &OrbifoldWeights) -> Vec<Option<u32>> {
    (0..fan.ray_count()).map(|j| fan.ray_weight(weights, j).finite()).collect()
}

/// Smallest `s` at which the local factors are certified: `max_i m_i/(m_i+1)`.
pub fn convergence_abscissa(weights: &OrbifoldWeights) -> Rat {
    weights
        .0
        .iter()
        .filter_map(|w| w.finite())
        .map(|m| Rat::new(m.into(), (m + 1).into()))
        .max()
        .unwrap_or_else(|| Rat::new(1.into(), 2.into()))
}

fn check_s(weights: &OrbifoldWeights, s: &Rat) -> Result<(), FanError> {
    let a = convergence_abscissa(weights);
    if *s < a {
        return Err(FanError::Divergent(format!("s = {s} is below the certified abscissa {a}")));
    }
    Ok(())
}

#[derive(Clone, Debug)]
struct CachedPoint {
    norm: i64,
    rays: Vec<usize>,
    coeffs: Vec<i64>,
}

/// Lattice points of a box, located once and reused across weights, primes and `s`.
#[derive(Clone, Debug)]
pub struct LatticeCache {
    fan: Fan,
    radius: i64,
    points: Vec<CachedPoint>,
}

impl LatticeCache {
    pub fn new(fan: &Fan) -> Self {
        LatticeCache { fan: fan.clone(), radius: -1, points: Vec::new() }
    }

    pub fn fan(&self) -> &Fan {
        &self.fan
    }

    fn ensure(&mut self, radius: i64) -> Result<(), FanError> {
        if radius <= self.radius {
            return Ok(());
        }
        let radius = radius.max(self.radius * 3 / 2);
        let d = self.fan.dim();
        let side = (2 * radius + 1) as u128;
        if side.pow(d as u32) > 50_000_000 {
            return Err(FanError::Unsupported(format!("direct sum needs a box of radius {radius} in dimension {d}")));
        }
        let mut points = Vec::new();
        let mut x = vec![-radius; d];
        loop {
            let loc = self.fan.locate_int(&x).ok_or(FanError::NotSmoothComplete)?;
            let norm = x.iter().map(|v| v.abs()).max().unwrap_or(0);
            points.push(CachedPoint { norm, rays: loc.cone, coeffs: loc.coeffs });
            let mut k = 0;
            while k < d {
                x[k] += 1;
                if x[k] <= radius {
                    break;
                }
                x[k] = -radius;
                k += 1;
            }
            if k == d {
                break;
            }
        }
        points.sort_by_key(|p| p.norm);
        self.points = points;
        self.radius = radius;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectSum {
    /// Raw lattice sum, before the `(1-1/p)^d` factor.
    pub raw: f64,
    /// Bound on the omitted raw terms.
    pub raw_tail_bound: f64,
    /// Terms with `s·φ_m(n) <= level` were summed.
    pub level: f64,
    pub terms: usize,
}

/// Bound on `Σ p^{-sφ(n)}` over `n` with `sφ(n) > level`, via
/// `p^{-sφ} <= p^{-θ·level} · p^{-(1-θ)sφ}` and the exact cone-wise geometric sums.
fn tail_bound(fan: &Fan, m: &[Option<u32>], p: u64, s: f64, level: f64) -> f64 {
    let lp = (p as f64).ln();
    (1..20)
        .map(|k| {
            let theta = k as f64 / 20.0;
            let y: Vec<f64> = m.iter().map(|mi| mi.map_or(0.0, |mi| (-(1.0 - theta) * s * lp / mi as f64).exp())).collect();
            let total: f64 = fan
                .cones()
                .iter()
                .filter(|c| c.iter().all(|&j| m[j].is_some()))
                .map(|c| c.iter().map(|&j| y[j] / (1.0 - y[j])).product::<f64>())
                .sum();
            (-theta * level * lp).exp() * total
        })
        .fold(f64::INFINITY, f64::min)
}

fn level_for(fan: &Fan, m: &[Option<u32>], p: u64, s: f64, target: f64) -> f64 {
    let mut level = 1.0;
    while tail_bound(fan, m, p, s, level) > target {
        level *= 1.25;
    }
    level
}

/// Direct lattice sum `Σ_{sφ_m(n) <= level} δ(n) p^{-sφ_m(n)}` over `n ∈ ℤ^d`.
pub fn direct_sum(
    cache: &mut LatticeCache,
    weights: &OrbifoldWeights,
    kind: CountingKind,
    p: u64,
    s: &Rat,
    level: f64,
) -> Result<DirectSum, FanError> {
    let fan = cache.fan.clone();
    require_split_smooth(&fan, weights)?;
    check_s(weights, s)?;
    let sf = rat_to_f64(s);
    let m = ray_weights(&fan, weights);
    let max_m = m.iter().flatten().copied().max().unwrap_or(1) as f64;
    // φ_m >= Σλ / max m and ‖n‖∞ <= R Σλ
    let radius = (fan.ray_sup_norm() as f64 * level / sf * max_m).floor() as i64;
    cache.ensure(radius)?;
    let lp = (p as f64).ln();
    let variant = point_variant(kind);
    let mut raw = 0.0f64;
    let mut comp = 0.0f64;
    let mut terms = 0;
    for pt in cache.points.iter().take_while(|pt| pt.norm <= radius) {
        let mut phi = 0.0;
        let mut finite = true;
        for (&j, &l) in pt.rays.iter().zip(&pt.coeffs) {
            match m[j] {
                Some(mj) => phi += l as f64 / mj as f64,
                None => finite = false,
            }
        }
        if !finite || sf * phi > level + 1e-12 {
            continue;
        }
        if !local_condition(&fan, weights, variant, None, &pt.rays, &pt.coeffs).ok {
            continue;
        }
        // Neumaier summation: up to millions of terms of mixed size
        let x = (-sf * phi * lp).exp();
        let t = raw + x;
        comp += if raw.abs() >= x.abs() { (raw - t) + x } else { (x - t) + raw };
        raw = t;
        terms += 1;
    }
    raw += comp;
    Ok(DirectSum { raw, raw_tail_bound: tail_bound(&fan, &m, p, sf, level), level, terms })
}

fn unit_volume(p: u64, d: usize) -> f64 {
    (1.0 - 1.0 / p as f64).powi(d as i32)
}

/// Direct density with the level chosen so the normalized tail bound is at most `target`.
pub fn local_density_direct(
    cache: &mut LatticeCache,
    weights: &OrbifoldWeights,
    kind: CountingKind,
    p: u64,
    s: &Rat,
    target: f64,
) -> Result<(f64, f64), FanError> {
    let fan = cache.fan.clone();
    let d = fan.dim();
    let level = level_for(&fan, &ray_weights(&fan, weights), p, rat_to_f64(s), target / unit_volume(p, d));
    let r = direct_sum(cache, weights, kind, p, s, level)?;
    Ok((r.raw * unit_volume(p, d), r.raw_tail_bound * unit_volume(p, d)))
}

/// Closed form of the local density: `Q(p^{-s/m}) / Π_b (1 - p^{-s})`, times `(1-1/p)^d`.
#[derive(Clone, Debug)]
pub struct ClosedForm {
    q: SparseMultiPoly,
    q_terms: Vec<(Vec<u32>, f64)>,
    m: Vec<Option<u32>>,
    plain: bool,
    weights: OrbifoldWeights,
    dim: usize,
}

impl ClosedForm {
    pub fn new(fan: &Fan, weights: &OrbifoldWeights, kind: CountingKind) -> Result<Self, FanError> {
        Self::with_variant(fan, weights, fan_variant(kind))
    }

    /// `FanVariant::Plain` gives the indicator-free sum `Σ_n p^{-sφ_m(n)}`.
    pub fn with_variant(fan: &Fan, weights: &OrbifoldWeights, variant: FanVariant) -> Result<Self, FanError> {
        require_split_smooth(fan, weights)?;
        let cs = InvariantConeSet::split(fan);
        let q = q_polynomial(&cs, weights, variant)?;
        let q_terms = q.terms().map(|(e, c)| (e.clone(), rat_to_f64(c))).collect();
        Ok(ClosedForm {
            q,
            q_terms,
            m: ray_weights(fan, weights),
            plain: variant == FanVariant::Plain,
            weights: weights.clone(),
            dim: fan.dim(),
        })
    }

    pub fn q(&self) -> &SparseMultiPoly {
        &self.q
    }

    /// Value before the `(1-1/p)^d` factor.
    pub fn raw(&self, p: u64, s: &Rat) -> Result<f64, FanError> {
        check_s(&self.weights, s)?;
        let lp = (p as f64).ln();
        let sf = rat_to_f64(s);
        let mut log_u = vec![0.0; self.m.len()];
        let mut denom = 1.0;
        for (j, m) in self.m.iter().enumerate() {
            if let Some(m) = m {
                log_u[j] = -sf * lp / *m as f64;
                let k = if self.plain { 1.0 } else { *m as f64 };
                denom *= 1.0 - (k * log_u[j]).exp();
            }
        }
        Ok(self.eval_q(&log_u) / denom)
    }

    fn eval_q(&self, log_u: &[f64]) -> f64 {
        self.q_terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(log_u).map(|(&a, l)| a as f64 * l).sum::<f64>().exp())
            .sum()
    }

    pub fn value(&self, p: u64, s: &Rat) -> Result<f64, FanError> {
        Ok(self.raw(p, s)? * unit_volume(p, self.dim))
    }

    /// `(1-1/p)^b` times the density at `s = 1`.
    pub fn euler_factor(&self, p: u64, b: usize) -> f64 {
        let v = self.value(p, &Rat::one()).expect("s = 1 is certified");
        (1.0 - 1.0 / p as f64).powi(b as i32) * v
    }

    /// Monomials of `Q - 1` as (coefficient, exponent `Σ a_j/m_j`).
    pub fn monomial_exponents(&self) -> Vec<(f64, f64)> {
        self.q_terms
            .iter()
            .filter(|(e, _)| e.iter().any(|&a| a > 0))
            .map(|(e, c)| {
                let x = e
                    .iter()
                    .zip(&self.m)
                    .map(|(&a, m)| a as f64 / m.unwrap_or(1) as f64)
                    .sum::<f64>();
                (*c, x)
            })
            .collect()
    }
}

pub fn local_density_closed(
    fan: &Fan,
    weights: &OrbifoldWeights,
    kind: CountingKind,
    p: u64,
    s: &Rat,
) -> Result<f64, FanError> {
    ClosedForm::new(fan, weights, kind)?.value(p, s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalDensity {
    pub p: u64,
    pub s: Rat,
    pub kind: CountingKind,
    pub direct_value: f64,
    pub tail_bound: f64,
    pub closed_value: f64,
}

impl LocalDensity {
    pub fn agrees(&self) -> bool {
        (self.direct_value - self.closed_value).abs() <= self.tail_bound + 1e-12 * self.closed_value.abs()
    }
}

pub fn local_density(
    fan: &Fan,
    weights: &OrbifoldWeights,
    kind: CountingKind,
    p: u64,
    s: &Rat,
    target: f64,
) -> Result<LocalDensity, FanError> {
    let mut cache = LatticeCache::new(fan);
    let (direct_value, tail_bound) = local_density_direct(&mut cache, weights, kind, p, s, target)?;
    let closed_value = local_density_closed(fan, weights, kind, p, s)?;
    Ok(LocalDensity { p, s: s.clone(), kind, direct_value, tail_bound, closed_value })
}

/// `∫_{T(ℝ)} H_m^{-s} dμ = 2^d Σ_σ Π_{j∈σ} m_j / s` over maximal cones.
pub fn archimedean_density(fan: &Fan, weights: &OrbifoldWeights, s: &Rat) -> Result<Rat, FanError> {
    fan.check_weights(weights)?;
    if !fan.is_smooth_complete() {
        return Err(FanError::NotSmoothComplete);
    }
    if !arith::is_positive(s) {
        return Err(FanError::Divergent(format!("s = {s} must be positive")));
    }
    let mut total = Rat::from_integer(0.into());
    for c in fan.maximal_cones() {
        let mut term = Rat::one();
        for &j in c {
            match fan.ray_weight(weights, j) {
                Weight::Finite(m) => term *= Rat::from_integer(m.into()) / s,
                Weight::Infinite => {
                    return Err(FanError::Divergent(format!("ray {j} has infinite weight, so φ vanishes on it")))
                }
            }
        }
        total += term;
    }
    Ok(total * Rat::from_integer(num_bigint::BigInt::from(2).pow(fan.dim() as u32)))
}

/// Exponential integral `E_1(x)` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> f64 {
    assert!(x > 0.0);
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -x / k as f64;
            sum -= term / k as f64;
        }
        -0.577_215_664_901_532_9 - x.ln() + sum
    } else {
        // modified Lentz continued fraction
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..200 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlphaChoice {
    /// `Π 1/m_i · χ_Eff(-K-D)`.
    Orbifold,
    /// `χ_Eff(-K)`.
    Direct,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstantReport {
    pub alpha_direct: f64,
    pub alpha_orbifold: f64,
    pub alpha_choice: AlphaChoice,
    pub b: usize,
    pub d_inf: f64,
    pub primes_cutoff: u64,
    pub euler_p: f64,
    /// Estimated product of the Euler factors beyond the cutoff.
    pub tail: f64,
    /// Bound on `|log|` of the omitted factors.
    pub tail_log_bound: f64,
    pub c_pred: f64,
}

impl ConstantReport {
    pub fn alpha(&self) -> f64 {
        match self.alpha_choice {
            AlphaChoice::Orbifold => self.alpha_orbifold,
            AlphaChoice::Direct => self.alpha_direct,
        }
    }

    pub const CSV_HEADER: &'static str = "alpha_direct,alpha_orbifold,b,d_inf,euler_P,tail,c_pred";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.alpha_direct, self.alpha_orbifold, self.b, self.d_inf, self.euler_p, self.tail, self.c_pred
        )
    }
}

impl fmt::Display for ConstantReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "alpha_direct={}", self.alpha_direct)?;
        writeln!(f, "alpha_orbifold={}", self.alpha_orbifold)?;
        writeln!(f, "alpha_used={}", if self.alpha_choice == AlphaChoice::Orbifold { "orbifold" } else { "direct" })?;
        writeln!(f, "b={}", self.b)?;
        writeln!(f, "d_inf={}", self.d_inf)?;
        writeln!(f, "primes_cutoff={}", self.primes_cutoff)?;
        writeln!(f, "euler_P={}", self.euler_p)?;
        writeln!(f, "tail={}", self.tail)?;
        writeln!(f, "tail_log_bound={}", self.tail_log_bound)?;
        write!(f, "c_pred={}", self.c_pred)
    }
}

pub fn predicted_constant(
    fan: &Fan,
    weights: &OrbifoldWeights,
    kind: CountingKind,
    primes_cutoff: u64,
) -> Result<ConstantReport, FanError> {
    predicted_constant_with(fan, weights, kind, primes_cutoff, AlphaChoice::Orbifold)
}

pub fn predicted_constant_with(
    fan: &Fan,
    weights: &OrbifoldWeights,
    kind: CountingKind,
    primes_cutoff: u64,
    alpha_choice: AlphaChoice,
) -> Result<ConstantReport, FanError> {
    require_split_smooth(fan, weights)?;
    if !weights.all_finite() {
        return Err(FanError::Divergent("the leading constant needs finite weights".into()));
    }
    let pic = picard::picard(fan)?;
    let b = pic.rank;
    let alpha_direct = rat_to_f64(&pic.effective_cone_constant(&pic.anticanonical())?);
    let inv_m: Rat = (0..fan.ray_count()).map(|j| fan.ray_weight(weights, j).reciprocal()).product();
    let alpha_orbifold = rat_to_f64(&(inv_m * pic.effective_cone_constant(&pic.log_anticanonical(fan, weights))?));
    let d_inf = rat_to_f64(&archimedean_density(fan, weights, &Rat::one())?);
    let closed = ClosedForm::new(fan, weights, kind)?;
    let primes = arith::primes_up_to(primes_cutoff);
    let factors: Vec<f64> = primes.par_iter().map(|&p| closed.euler_factor(p, b)).collect();
    if let Some(k) = factors.iter().position(|&x| x <= 0.0) {
        return Err(FanError::Unsupported(format!("non-positive Euler factor at p = {}", primes[k])));
    }
    let euler_p: f64 = factors.iter().map(|x| x.ln()).sum::<f64>().exp();
    let (tail, tail_log_bound) = if primes_cutoff >= 2 {
        let lp = (primes_cutoff as f64).ln();
        let monos = closed.monomial_exponents();
        let est: f64 = monos.iter().map(|(c, e)| c * exp_integral_e1((e - 1.0) * lp)).sum();
        let max_m = weights.0.iter().filter_map(|w| w.finite()).max().unwrap_or(1) as f64;
        let gamma = 1.0 + 1.0 / max_m;
        let c: f64 = closed.q().abs_coeff_sum_nonconstant();
        let pc = primes_cutoff as f64;
        // Σ_{n>P} n^{-γ} <= P^{1-γ}/(γ-1); -log(1-x) <= 2x for x <= 1/2
        let x_max = c * (pc + 1.0).powf(-gamma);
        let bound = if x_max <= 0.5 { 2.0 * c * pc.powf(1.0 - gamma) / (gamma - 1.0) } else { f64::INFINITY };
        (est.exp(), bound)
    } else {
        (1.0, 0.0)
    };
    let alpha = match alpha_choice {
        AlphaChoice::Orbifold => alpha_orbifold,
        AlphaChoice::Direct => alpha_direct,
    };
    let fact: f64 = (1..b).map(|k| k as f64).product();
    let c_pred = alpha / fact * d_inf * euler_p * tail;
    if !(c_pred > 0.0) {
        return Err(FanError::Unsupported(format!("non-positive predicted constant {c_pred}")));
    }
    Ok(ConstantReport {
        alpha_direct,
        alpha_orbifold,
        alpha_choice,
        b,
        d_inf,
        primes_cutoff,
        euler_p,
        tail,
        tail_log_bound,
        c_pred,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, rint};
    use crate::library;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const KINDS: [CountingKind; 2] = [CountingKind::Campana, CountingKind::Darmon];

    #[test]
    fn worked_value_three_plus_sqrt_two() {
        let f = library::projective_line();
        let w = OrbifoldWeights::uniform(2, 2);
        let closed = ClosedForm::new(&f, &w, CountingKind::Campana).unwrap();
        let expect = 3.0 + 2f64.sqrt();
        assert!((closed.raw(2, &rint(1)).unwrap() - expect).abs() < 1e-12);
        let mut cache = LatticeCache::new(&f);
        let r = direct_sum(&mut cache, &w, CountingKind::Campana, 2, &rint(1), 80.0).unwrap();
        assert!((r.raw - expect).abs() <= r.raw_tail_bound + 1e-12);
        assert!(r.raw_tail_bound < 1e-8);
    }

    #[test]
    fn plain_p1_two_sided_geometric_series() {
        let f = library::projective_line();
        let w = OrbifoldWeights::ones(2);
        for p in [2u64, 5] {
            let x = (p as f64).powf(-1.5);
            let c = ClosedForm::new(&f, &w, CountingKind::Campana).unwrap().raw(p, &rat(3, 2)).unwrap();
            assert!((c - (1.0 + x) / (1.0 - x)).abs() < 1e-12);
        }
    }

    #[test]
    fn large_s_leaves_only_the_origin() {
        let f = library::projective_space(2);
        let w = OrbifoldWeights::uniform(3, 2);
        let c = ClosedForm::new(&f, &w, CountingKind::Campana).unwrap();
        assert!((c.raw(97, &rint(20)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inert_toy_density_is_one() {
        // Q = 1 - u^4 at u = p^{-1/2}, over the single factor (1 - p^{-2})
        let q = SparseMultiPoly::one_minus(1, 0, 4);
        for p in [2.0f64, 3.0, 7.0] {
            assert!((q.eval_f64(&[p.powf(-0.5)]) / (1.0 - p.powi(-2)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn below_abscissa_is_refused() {
        let f = library::projective_line();
        let w = OrbifoldWeights::uniform(2, 3);
        assert!(matches!(
            local_density_closed(&f, &w, CountingKind::Campana, 2, &rat(1, 2)),
            Err(FanError::Divergent(_))
        ));
    }

    #[test]
    fn archimedean_examples() {
        let f = library::projective_line();
        assert_eq!(archimedean_density(&f, &OrbifoldWeights::uniform(2, 2), &rint(1)).unwrap(), rint(8));
        assert_eq!(archimedean_density(&f, &OrbifoldWeights::ones(2), &rint(1)).unwrap(), rint(4));
        let p2 = library::projective_space(2);
        assert_eq!(archimedean_density(&p2, &OrbifoldWeights::ones(3), &rint(1)).unwrap(), rint(12));
        let inf = OrbifoldWeights(vec![Weight::Infinite, Weight::Finite(2)]);
        assert!(archimedean_density(&f, &inf, &rint(1)).is_err());
    }

    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    /// `2^d ∫ e^{-sφ}` in polar coordinates, splitting at ray angles.
    fn archimedean_quadrature(fan: &Fan, weights: &OrbifoldWeights, s: f64) -> f64 {
        let phi: Vec<f64> = (0..fan.ray_count()).map(|j| rat_to_f64(&fan.ray_weight(weights, j).reciprocal())).collect();
        if fan.dim() == 1 {
            let v: f64 = [1.0, -1.0].iter().map(|&x| 1.0 / (s * fan.evaluate_pl_f64(&phi, &[x]).unwrap())).sum();
            return 2.0 * v;
        }
        let mut angles: Vec<f64> = fan.rays().iter().map(|r| (r[1] as f64).atan2(r[0] as f64)).collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        angles.push(angles[0] + 2.0 * PI);
        let g = |t: f64| {
            let v = fan.evaluate_pl_f64(&phi, &[t.cos(), t.sin()]).unwrap();
            1.0 / (s * v).powi(2)
        };
        let total: f64 = angles.windows(2).map(|w| simpson(&g, w[0], w[1], 2000)).sum();
        4.0 * total
    }

    #[test]
    fn archimedean_matches_quadrature() {
        for (name, f) in library::standard() {
            for m in 1..=3 {
                let w = OrbifoldWeights::uniform(f.orbit_count(), m);
                for s in [rint(1), rat(3, 2)] {
                    let exact = rat_to_f64(&archimedean_density(&f, &w, &s).unwrap());
                    let quad = archimedean_quadrature(&f, &w, rat_to_f64(&s));
                    assert!((quad / exact - 1.0).abs() < 1e-6, "{name} m={m}: {quad} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn e1_reference_values() {
        assert!((exp_integral_e1(0.5) - 0.559_773_594_776_160_8).abs() < 1e-12);
        assert!((exp_integral_e1(1.0) - 0.219_383_934_395_520_3).abs() < 1e-12);
        assert!((exp_integral_e1(5.0) - 0.001_148_295_591_275_325_9).abs() < 1e-15);
    }

    #[test]
    fn calibration_constants_in_closed_form() {
        let f = library::projective_line();
        let r = predicted_constant(&f, &OrbifoldWeights::ones(2), CountingKind::Campana, 100_000).unwrap();
        assert!((r.c_pred / (12.0 / PI / PI) - 1.0).abs() < 1e-6, "{r}");
        let p2 = library::projective_space(2);
        let r = predicted_constant(&p2, &OrbifoldWeights::ones(3), CountingKind::Campana, 100_000).unwrap();
        let zeta3 = 1.202_056_903_159_594_3;
        assert!((r.c_pred / (4.0 / zeta3) - 1.0).abs() < 1e-6, "{r}");
        let r = predicted_constant(&f, &OrbifoldWeights::uniform(2, 2), CountingKind::Darmon, 100_000).unwrap();
        assert!((r.c_pred / (12.0 / PI / PI) - 1.0).abs() < 1e-5, "{r}");
        assert_eq!((r.alpha_orbifold, r.alpha_direct, r.d_inf), (0.25, 0.5, 8.0));
    }

    #[test]
    fn empty_prime_set() {
        let f = library::p1_x_p1();
        let r = predicted_constant(&f, &OrbifoldWeights::uniform(4, 2), CountingKind::Campana, 1).unwrap();
        assert_eq!(r.euler_p, 1.0);
        assert_eq!(r.tail, 1.0);
        assert_eq!(r.c_pred, r.alpha_orbifold * r.d_inf);
    }

    #[test]
    fn euler_factor_equals_q_at_p_power() {
        // with all weights finite, (1-1/p)^b (1-1/p)^d Q / (1-1/p)^n = Q
        let f = library::hirzebruch(1);
        let w = OrbifoldWeights::finite(&[2, 3, 1, 2]);
        let c = ClosedForm::new(&f, &w, CountingKind::Campana).unwrap();
        for p in [2u64, 3, 11] {
            let u: Vec<f64> = [2.0, 3.0, 1.0, 2.0].iter().map(|m| (p as f64).powf(-1.0 / m)).collect();
            assert!((c.euler_factor(p, 2) - c.q().eval_f64(&u)).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn densities_positive_and_ordered(
            k in 0usize..5,
            ms in proptest::collection::vec(1u32..4, 6),
            p in prop::sample::select(vec![2u64, 3, 5, 7, 97]),
            s in prop::sample::select(vec![rint(1), rat(3, 2), rint(2)]),
        ) {
            let f = library::standard().swap_remove(k).1;
            let w = OrbifoldWeights::finite(&ms[..f.ray_count()]);
            let plain = ClosedForm::with_variant(&f, &w, FanVariant::Plain).unwrap().value(p, &s).unwrap();
            let c = local_density_closed(&f, &w, CountingKind::Campana, p, &s).unwrap();
            let d = local_density_closed(&f, &w, CountingKind::Darmon, p, &s).unwrap();
            prop_assert!(d > 0.0);
            prop_assert!(d <= c + 1e-12 && c <= plain + 1e-12);
            prop_assert!(rat_to_f64(&archimedean_density(&f, &w, &s).unwrap()) > 0.0);
        }

        #[test]
        fn direct_matches_closed_on_samples(
            k in 0usize..5,
            ms in proptest::collection::vec(1u32..4, 6),
            p in prop::sample::select(vec![2u64, 7, 97]),
            kind in prop::sample::select(KINDS.to_vec()),
        ) {
            let f = library::standard().swap_remove(k).1;
            let w = OrbifoldWeights::finite(&ms[..f.ray_count()]);
            let r = local_density(&f, &w, kind, p, &rat(3, 2), 1e-9).unwrap();
            prop_assert!(r.agrees(), "{:?}", r);
        }
    }

    #[test]
    fn euler_products_settle_across_decades() {
        let f = library::projective_line();
        let w = OrbifoldWeights::uniform(2, 2);
        let c: Vec<f64> = [1_000u64, 10_000, 100_000]
            .iter()
            .map(|&p| {
                let r = predicted_constant(&f, &w, CountingKind::Campana, p).unwrap();
                r.c_pred / r.tail
            })
            .collect();
        // successive gaps shrink like P^{-1/2}
        let g1 = (c[1] - c[0]).abs();
        let g2 = (c[2] - c[1]).abs();
        assert!(g2 < g1 && g2 / g1 < 0.5, "{c:?}");
        let with_tail: Vec<f64> = [1_000u64, 100_000]
            .iter()
            .map(|&p| predicted_constant(&f, &w, CountingKind::Campana, p).unwrap().c_pred)
            .collect();
        assert!((with_tail[0] / with_tail[1] - 1.0).abs() < 1e-3);
    }
}
