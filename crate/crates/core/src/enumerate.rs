//! Enumeration and counting of semi-integral torus points of bounded log-anticanonical height.
//!
//! Products of projective spaces use a fast path: a point is a tuple of coprime integer
//! vectors, its height is `Π_i M_i^{a_i}` with `M_i` the largest coordinate of factor `i` and
//! `a_i = Σ 1/m_k` over that factor, and the local conditions become conditions on each
//! coordinate separately (m-full numbers, m-th powers, or ±1 for infinite weight). Everything
//! else goes through a generic search over coordinate fractions inside the box given by the
//! height lower bound.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::time::Instant;

use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arith::{self, rat_to_f64, Rat};
use crate::fan::{Fan, OrbifoldWeights, PlFunction, Weight};
use crate::heights::{self, HeightValue};
use crate::points::{self, CountingKind, TorusPoint, Variant};
use crate::FanError;

/// Sorted m-full integers in `[1, x]`.
pub fn enumerate_mfull(x: u64, m: u32) -> Vec<u64> {
    if x == 0 {
        return Vec::new();
    }
    if m <= 1 {
        return (1..=x).collect();
    }
    let root = arith::integer_root_floor(&Rat::from_integer(x.into()), m);
    let primes = arith::primes_up_to(root);
    let mut out = Vec::new();
    fn rec(start: usize, cur: u64, x: u64, m: u32, primes: &[u64], out: &mut Vec<u64>) {
        out.push(cur);
        for (i, &p) in primes.iter().enumerate().skip(start) {
            let Some(mut v) = p.checked_pow(m).and_then(|pm| cur.checked_mul(pm)) else { break };
            if v > x {
                break;
            }
            loop {
                rec(i + 1, v, x, m, primes, out);
                match v.checked_mul(p) {
                    Some(w) if w <= x => v = w,
                    _ => break,
                }
            }
        }
    }
    rec(0, 1, x, m, &primes, &mut out);
    out.sort_unstable();
    out
}

/// Sorted perfect `m`-th powers in `[1, x]`.
pub fn perfect_powers(x: u64, m: u32) -> Vec<u64> {
    let root = arith::integer_root_floor(&Rat::from_integer(x.into()), m.max(1));
    (1..=root).map(|k| k.pow(m.max(1))).collect()
}

/// One `P^n` factor of a product fan: ray of each homogeneous coordinate `x_0..x_n`, and the
/// torus coordinate carrying `x_k / x_0` for `k >= 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjFactor {
    pub rays: Vec<usize>,
    pub coords: Vec<usize>,
}

impl ProjFactor {
    pub fn n(&self) -> usize {
        self.coords.len()
    }
}

/// Recognizes fans that are products of projective spaces in standard coordinates.
pub fn recognize_product(fan: &Fan) -> Option<Vec<ProjFactor>> {
    let d = fan.dim();
    let rays = fan.rays();
    // group coordinates connected through ray supports
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for r in rays {
        let sup: Vec<usize> = (0..d).filter(|&i| r[i] != 0).collect();
        for w in sup.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            parent[a] = b;
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..d {
        let root = find(&mut parent, i);
        match blocks.iter_mut().find(|b| find(&mut parent.clone(), b[0]) == root) {
            Some(b) => b.push(i),
            None => blocks.push(vec![i]),
        }
    }
    let mut factors = Vec::new();
    let mut used = 0;
    for block in &blocks {
        let mine: Vec<usize> = (0..rays.len()).filter(|&j| block.iter().any(|&i| rays[j][i] != 0)).collect();
        if mine.len() != block.len() + 1 {
            return None;
        }
        let mut factor_rays = vec![usize::MAX; block.len() + 1];
        for &j in &mine {
            let r = &rays[j];
            if block.iter().all(|&i| r[i] == -1) {
                factor_rays[0] = j;
            } else if let Some(k) = block.iter().position(|&i| r[i] == 1) {
                if block.iter().enumerate().all(|(kk, &i)| r[i] == i64::from(kk == k)) {
                    factor_rays[k + 1] = j;
                }
            }
        }
        if factor_rays.contains(&usize::MAX) {
            return None;
        }
        used += mine.len();
        factors.push(ProjFactor { rays: factor_rays, coords: block.clone() });
    }
    if used != rays.len() {
        return None;
    }
    // maximal cones: omit exactly one ray from each factor
    let expect: usize = factors.iter().map(|f| f.n() + 1).product();
    if fan.maximal_cones().len() != expect {
        return None;
    }
    for c in fan.maximal_cones() {
        for f in &factors {
            if f.rays.iter().filter(|j| c.contains(j)).count() != f.n() {
                return None;
            }
        }
    }
    Some(factors)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CoordSet {
    All,
    MFull(u32),
    Powers(u32),
    One,
}

impl CoordSet {
    fn values(self, x: u64) -> Vec<u64> {
        match self {
            CoordSet::All => (1..=x).collect(),
            CoordSet::MFull(m) => enumerate_mfull(x, m),
            CoordSet::Powers(m) => perfect_powers(x, m),
            CoordSet::One => {
                if x >= 1 {
                    vec![1]
                } else {
                    Vec::new()
                }
            }
        }
    }
}

fn coord_set(weight: Weight, kind: CountingKind) -> CoordSet {
    match (weight, kind) {
        (Weight::Infinite, _) => CoordSet::One,
        (Weight::Finite(1), _) => CoordSet::All,
        (Weight::Finite(m), CountingKind::Campana) => CoordSet::MFull(m),
        (Weight::Finite(m), CountingKind::Darmon) => CoordSet::Powers(m),
    }
}

#[derive(Clone, Debug)]
struct FactorPlan {
    factor: ProjFactor,
    sets: Vec<CoordSet>,
    /// Height exponent `a = Σ 1/m_k`.
    exponent: Rat,
}

#[derive(Clone, Debug)]
struct ProductPlan {
    factors: Vec<FactorPlan>,
    /// Common denominator `L` of the exponents and the integer exponents `a_i L`.
    scale: u32,
    int_exponents: Vec<u32>,
}

fn product_plan(fan: &Fan, weights: &OrbifoldWeights, variant: Variant) -> Option<ProductPlan> {
    let kind = variant.counting_kind()?;
    if !fan.is_split() {
        return None;
    }
    let factors = recognize_product(fan)?;
    let plans: Vec<FactorPlan> = factors
        .into_iter()
        .map(|f| {
            let ws: Vec<Weight> = f.rays.iter().map(|&j| fan.ray_weight(weights, j)).collect();
            let exponent = ws.iter().map(|w| w.reciprocal()).sum();
            let sets = ws.iter().map(|&w| coord_set(w, kind)).collect();
            FactorPlan { factor: f, sets, exponent }
        })
        .collect();
    let scale = arith::lcm_all(plans.iter().map(|p| p.exponent.denom().clone())).to_u32()?;
    let int_exponents = plans
        .iter()
        .map(|p| (&p.exponent * Rat::from_integer(scale.into())).to_integer().to_u32())
        .collect::<Option<Vec<u32>>>()?;
    Some(ProductPlan { factors: plans, scale, int_exponents })
}

/// Largest `M` with `M^e <= r`; `None` when unbounded (`e = 0` and `r >= 1`).
fn max_coordinate(r: &Rat, e: u32) -> Option<u64> {
    if *r < Rat::one() {
        return Some(0);
    }
    if e == 0 {
        return None;
    }
    Some(arith::integer_root_floor(r, e))
}

/// Count of coprime tuples by largest coordinate, including the `2^n` sign choices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Histogram {
    maxima: Vec<u64>,
    prefix: Vec<u64>,
}

impl Histogram {
    /// Number of tuples with largest coordinate `<= x`.
    fn up_to(&self, x: Option<u64>) -> u64 {
        let k = match x {
            None => self.maxima.len(),
            Some(x) => self.maxima.partition_point(|&m| m <= x),
        };
        if k == 0 {
            0
        } else {
            self.prefix[k - 1]
        }
    }
}

const CHUNKS: usize = 256;

fn factor_histogram(values: &[Vec<u64>]) -> Histogram {
    let mut union: Vec<u64> = values.iter().flatten().copied().collect();
    union.sort_unstable();
    union.dedup();
    if values.iter().any(Vec::is_empty) {
        return Histogram::default();
    }
    let idx: Vec<Vec<usize>> =
        values.iter().map(|vs| vs.iter().map(|v| union.binary_search(v).expect("in union")).collect()).collect();
    let first = values[0].len();
    let per = first.div_ceil(CHUNKS).max(1);
    let counts: Vec<u64> = (0..first.div_ceil(per))
        .into_par_iter()
        .map(|c| {
            let mut hist = vec![0u64; union.len()];
            for i in c * per..((c + 1) * per).min(first) {
                tuples(values, &idx, 1, values[0][i], idx[0][i], &mut hist);
            }
            hist
        })
        .reduce(
            || vec![0u64; union.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let signs = 1u64 << (values.len() - 1);
    let mut maxima = Vec::new();
    let mut prefix = Vec::new();
    let mut acc = 0u64;
    for (m, c) in union.into_iter().zip(counts) {
        if c > 0 {
            acc += c * signs;
            maxima.push(m);
            prefix.push(acc);
        }
    }
    Histogram { maxima, prefix }
}

fn tuples(values: &[Vec<u64>], idx: &[Vec<usize>], k: usize, g: u64, mi: usize, hist: &mut [u64]) {
    if k == values.len() {
        if g == 1 {
            hist[mi] += 1;
        }
        return;
    }
    for (j, &v) in values[k].iter().enumerate() {
        let g2 = if g == 1 { 1 } else { g.gcd(&v) };
        tuples(values, idx, k + 1, g2, mi.max(idx[k][j]), hist);
    }
}

/// Number of points with `Π M_i^{e_i} <= r` over factors `i >= k`.
fn joint_count(hists: &[Histogram], e: &[u32], k: usize, r: &Rat) -> u128 {
    if k == hists.len() - 1 {
        return u128::from(hists[k].up_to(max_coordinate(r, e[k])));
    }
    let limit = max_coordinate(r, e[k]);
    let mut total = 0u128;
    let mut prev = 0u64;
    for (i, &m) in hists[k].maxima.iter().enumerate() {
        if limit.is_some_and(|l| m > l) {
            break;
        }
        let c = hists[k].prefix[i] - prev;
        prev = hists[k].prefix[i];
        let rest = r / arith::rat_pow(&Rat::from_integer(m.into()), i64::from(e[k]));
        total += u128::from(c) * joint_count(hists, e, k + 1, &rest);
    }
    total
}

#[derive(Clone, Debug, PartialEq)]
pub struct CountConfig {
    pub weights: OrbifoldWeights,
    pub variant: Variant,
    pub bound: Rat,
    /// Number of checkpoints `B, B/2, B/4, …`.
    pub checkpoints: usize,
    pub workers: usize,
    /// Largest generic search space accepted, in candidate tuples.
    pub budget: f64,
    pub seed: u64,
    pub audit: bool,
}

impl CountConfig {
    pub fn new(weights: OrbifoldWeights, variant: Variant, bound: Rat) -> Self {
        CountConfig { weights, variant, bound, checkpoints: 12, workers: 1, budget: 5e7, seed: 0, audit: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    ProductFastPath,
    Generic,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Checkpoint {
    pub bound: Rat,
    pub count: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AuditResult {
    pub sampled: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CountRun {
    pub weights: OrbifoldWeights,
    pub variant: Variant,
    pub bound: Rat,
    /// Ascending in the bound.
    pub checkpoints: Vec<Checkpoint>,
    pub method: Method,
    pub search_space: f64,
    pub elapsed_ms: u128,
    pub audit: Option<AuditResult>,
    pub warnings: Vec<String>,
}

impl CountRun {
    pub const CSV_HEADER: &'static str = "B,count,variant,fan,weights,elapsed_ms";

    pub fn final_count(&self) -> u64 {
        self.checkpoints.last().map_or(0, |c| c.count)
    }

    pub fn csv_rows(&self, fan_label: &str) -> Vec<String> {
        self.checkpoints
            .iter()
            .map(|c| {
                format!(
                    "{},{},{},{},\"{}\",{}",
                    rat_to_f64(&c.bound),
                    c.count,
                    self.variant,
                    fan_label,
                    self.weights,
                    self.elapsed_ms
                )
            })
            .collect()
    }
}

fn checkpoint_bounds(cfg: &CountConfig) -> Result<Vec<Rat>, FanError> {
    if cfg.checkpoints == 0 {
        return Err(FanError::InvalidConfig("checkpoint grid is empty".into()));
    }
    if !arith::is_positive(&cfg.bound) {
        return Err(FanError::InvalidConfig(format!("bound {} must be positive", cfg.bound)));
    }
    let two = Rat::from_integer(2.into());
    let mut out: Vec<Rat> = (0..cfg.checkpoints).map(|k| &cfg.bound / arith::rat_pow(&two, k as i64)).collect();
    out.reverse();
    Ok(out)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, FanError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| FanError::InvalidConfig(format!("thread pool: {e}")))
}

pub fn count(fan: &Fan, cfg: &CountConfig) -> Result<CountRun, FanError> {
    fan.check_weights(&cfg.weights)?;
    if !fan.is_smooth_complete() {
        return Err(FanError::NotSmoothComplete);
    }
    let bounds = checkpoint_bounds(cfg)?;
    let start = Instant::now();
    let pool = pool(cfg.workers)?;
    let mut warnings = Vec::new();
    let (checkpoints, method, search_space, audit) = match product_plan(fan, &cfg.weights, cfg.variant) {
        Some(plan) => pool.install(|| count_product(fan, cfg, &plan, &bounds))?,
        None => {
            let est = generic_search_space(fan, &cfg.weights, &cfg.bound)?;
            warnings.push(format!(
                "no product-of-projective-spaces fast path; generic search over {est:.3e} candidates"
            ));
            pool.install(|| count_generic(fan, cfg, &bounds))?
        }
    };
    Ok(CountRun {
        weights: cfg.weights.clone(),
        variant: cfg.variant,
        bound: cfg.bound.clone(),
        checkpoints,
        method,
        search_space,
        elapsed_ms: start.elapsed().as_millis(),
        audit,
        warnings,
    })
}

type CountParts = (Vec<Checkpoint>, Method, f64, Option<AuditResult>);

fn factor_values(plan: &ProductPlan, bound: &Rat) -> Vec<Vec<Vec<u64>>> {
    let b_scaled = arith::rat_pow(bound, i64::from(plan.scale));
    plan.factors
        .iter()
        .zip(&plan.int_exponents)
        .map(|(f, &e)| {
            let x = max_coordinate(&b_scaled, e).unwrap_or(1);
            f.sets.iter().map(|s| s.values(x)).collect()
        })
        .collect()
}

fn count_product(fan: &Fan, cfg: &CountConfig, plan: &ProductPlan, bounds: &[Rat]) -> Result<CountParts, FanError> {
    let values = factor_values(plan, &cfg.bound);
    let search: f64 = values.iter().map(|f| f.iter().map(|v| v.len() as f64).product::<f64>()).sum();
    let hists: Vec<Histogram> = values.iter().map(|v| factor_histogram(v)).collect();
    let checkpoints = bounds
        .iter()
        .map(|b| {
            let r = arith::rat_pow(b, i64::from(plan.scale));
            let c = joint_count(&hists, &plan.int_exponents, 0, &r);
            Ok(Checkpoint { bound: b.clone(), count: u64::try_from(c).map_err(|_| FanError::InvalidConfig("count overflow".into()))? })
        })
        .collect::<Result<Vec<_>, FanError>>()?;
    let audit = if cfg.audit {
        let n = checkpoints.last().map_or(0, |c| c.count);
        Some(audit_product(fan, cfg, plan, &values, n)?)
    } else {
        None
    };
    Ok((checkpoints, Method::ProductFastPath, search, audit))
}

fn product_point(plan: &ProductPlan, dim: usize, tuples: &[Vec<i64>]) -> TorusPoint {
    let mut coords = vec![Rat::one(); dim];
    for (f, x) in plan.factors.iter().zip(tuples) {
        for (k, &c) in f.factor.coords.iter().enumerate() {
            coords[c] = arith::rat(x[k + 1], x[0]);
        }
    }
    TorusPoint::new(coords).expect("nonzero coordinates")
}

const AUDIT_CAP: usize = 500;

/// Re-verifies a seeded sample of counted points with the generic classifier and heights.
fn audit_product(
    fan: &Fan,
    cfg: &CountConfig,
    plan: &ProductPlan,
    values: &[Vec<Vec<u64>>],
    total: u64,
) -> Result<AuditResult, FanError> {
    let want = ((total as f64 * 0.01).ceil() as usize).min(AUDIT_CAP);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let phi = PlFunction::log_anticanonical(fan, &cfg.weights);
    let none = BTreeSet::new();
    let mut res = AuditResult::default();
    let mut attempts = 0;
    while res.sampled < want && attempts < want * 200 {
        attempts += 1;
        let mut r = arith::rat_pow(&cfg.bound, i64::from(plan.scale));
        let mut tuples = Vec::new();
        let mut ok = true;
        for (fv, &e) in values.iter().zip(&plan.int_exponents) {
            let limit = max_coordinate(&r, e);
            let mut t: Vec<i64> = Vec::new();
            for vs in fv {
                let k = limit.map_or(vs.len(), |l| vs.partition_point(|&v| v <= l));
                if k == 0 {
                    ok = false;
                    break;
                }
                t.push(vs[rng.gen_range(0..k)] as i64);
            }
            if !ok || t.iter().fold(0i64, |g, &v| g.gcd(&v)) != 1 {
                ok = false;
                break;
            }
            let last = t.len() - 1;
            for v in &mut t[..last] {
                if rng.gen::<bool>() {
                    *v = -*v;
                }
            }
            let m = t.iter().map(|v| v.unsigned_abs()).max().expect("nonempty");
            r = r / arith::rat_pow(&Rat::from_integer(m.into()), i64::from(e));
            tuples.push(t);
        }
        if !ok {
            continue;
        }
        let pt = product_point(plan, fan.dim(), &tuples);
        res.sampled += 1;
        let good = points::classify_global(fan, &cfg.weights, &pt, &none, cfg.variant)?
            && heights::global_height(fan, &phi, &pt)?.cmp_bound(&cfg.bound) != Ordering::Greater;
        if !good {
            res.failures += 1;
        }
    }
    Ok(res)
}

/// A reduced fraction `a/b` with its factorization as `(p, v_p)`.
#[derive(Clone, Debug)]
struct Frac {
    num: i64,
    den: i64,
    primes: Vec<(u64, i64)>,
}

fn fractions(x: u64) -> Vec<Frac> {
    let mut out = Vec::new();
    for b in 1..=x as i64 {
        for a in -(x as i64)..=(x as i64) {
            if a == 0 || a.unsigned_abs().gcd(&(b as u64)) != 1 {
                continue;
            }
            let mut primes: Vec<(u64, i64)> =
                arith::factorize(a.unsigned_abs()).into_iter().map(|(p, e)| (p, i64::from(e))).collect();
            primes.extend(arith::factorize(b as u64).into_iter().map(|(p, e)| (p, -i64::from(e))));
            primes.sort_unstable();
            out.push(Frac { num: a, den: b, primes });
        }
    }
    out
}

fn generic_box(fan: &Fan, weights: &OrbifoldWeights, bound: &Rat) -> Result<u64, FanError> {
    let phi = PlFunction::log_anticanonical(fan, weights);
    let e = heights::coordinate_bound_exponent(fan, &phi).ok_or_else(|| {
        FanError::Unsupported("generic enumeration needs all weights finite (κ > 0)".into())
    })?;
    if *bound < Rat::one() {
        return Ok(0);
    }
    let num = e.numer().to_i64().ok_or_else(|| FanError::Unsupported("exponent too large".into()))?;
    let den = e.denom().to_u32().ok_or_else(|| FanError::Unsupported("exponent too large".into()))?;
    Ok(arith::integer_root_floor(&arith::rat_pow(bound, num), den))
}

fn fraction_count(x: u64) -> f64 {
    // 2 signs × #{(a, b) coprime in [1, x]^2}
    let mut phi: Vec<u64> = (0..=x).collect();
    for i in 2..=x as usize {
        if phi[i] == i as u64 {
            let mut j = i;
            while j <= x as usize {
                phi[j] -= phi[j] / i as u64;
                j += i;
            }
        }
    }
    let s: u64 = phi.iter().skip(1).sum();
    2.0 * (2 * s).saturating_sub(1) as f64
}

/// Number of candidate tuples the generic search would examine.
pub fn generic_search_space(fan: &Fan, weights: &OrbifoldWeights, bound: &Rat) -> Result<f64, FanError> {
    let x = generic_box(fan, weights, bound)?;
    if x as f64 > 1e8 {
        return Ok(f64::INFINITY);
    }
    Ok(fraction_count(x).powi(fan.dim() as i32))
}

#[derive(Clone, Debug)]
struct Candidate {
    idx: Vec<usize>,
    log_h: f64,
}

fn candidate_point(fr: &[Frac], idx: &[usize]) -> TorusPoint {
    TorusPoint::new(idx.iter().map(|&i| arith::rat(fr[i].num, fr[i].den)).collect()).expect("nonzero")
}

/// Log-height and global verdict from the precomputed factorizations.
fn fast_evaluate(fan: &Fan, weights: &OrbifoldWeights, variant: Variant, phi: &[f64], fr: &[&Frac]) -> Option<f64> {
    let d = fr.len();
    let mut primes: Vec<u64> = fr.iter().flat_map(|f| f.primes.iter().map(|&(p, _)| p)).collect();
    primes.sort_unstable();
    primes.dedup();
    let mut log_h = 0.0;
    let mut deg = vec![0i64; d];
    for p in primes {
        for (j, f) in fr.iter().enumerate() {
            deg[j] = f.primes.iter().find(|&&(q, _)| q == p).map_or(0, |&(_, v)| v);
        }
        let loc = fan.locate_int(&deg)?;
        if !points::local_condition(fan, weights, variant, None, &loc.cone, &loc.coeffs).ok {
            return None;
        }
        let v: f64 = loc.cone.iter().zip(&loc.coeffs).map(|(&j, &l)| phi[j] * l as f64).sum();
        log_h += v * (p as f64).ln();
    }
    let x: Vec<f64> = fr.iter().map(|f| -((f.num.unsigned_abs() as f64) / f.den as f64).ln()).collect();
    log_h += fan.evaluate_pl_f64(phi, &x)?;
    Some(log_h)
}

const NEAR: f64 = 1e-7;

fn generic_candidates(fan: &Fan, cfg: &CountConfig) -> Result<(Vec<Frac>, Vec<Candidate>, f64), FanError> {
    let space = generic_search_space(fan, &cfg.weights, &cfg.bound)?;
    if space > cfg.budget {
        return Err(FanError::BudgetExceeded { estimate: space, budget: cfg.budget });
    }
    let x = generic_box(fan, &cfg.weights, &cfg.bound)?;
    let fr = fractions(x);
    let d = fan.dim();
    let phi = PlFunction::log_anticanonical(fan, &cfg.weights).values_f64();
    let log_b = rat_to_f64(&cfg.bound).ln();
    let n = fr.len();
    if n == 0 {
        return Ok((fr, Vec::new(), space));
    }
    let per = n.div_ceil(CHUNKS).max(1);
    let cands: Vec<Candidate> = (0..n.div_ceil(per))
        .into_par_iter()
        .map(|c| {
            let mut out = Vec::new();
            let mut idx = vec![0usize; d];
            for first in c * per..((c + 1) * per).min(n) {
                idx[0] = first;
                for k in 1..d {
                    idx[k] = 0;
                }
                loop {
                    let sel: Vec<&Frac> = idx.iter().map(|&i| &fr[i]).collect();
                    if let Some(lh) = fast_evaluate(fan, &cfg.weights, cfg.variant, &phi, &sel) {
                        if lh <= log_b + NEAR {
                            out.push(Candidate { idx: idx.clone(), log_h: lh });
                        }
                    }
                    let mut k = d - 1;
                    loop {
                        if k == 0 {
                            break;
                        }
                        idx[k] += 1;
                        if idx[k] < n {
                            break;
                        }
                        idx[k] = 0;
                        k -= 1;
                    }
                    if k == 0 {
                        break;
                    }
                }
            }
            out
        })
        .flatten()
        .collect();
    Ok((fr, cands, space))
}

fn candidate_within(
    fan: &Fan,
    cfg: &CountConfig,
    fr: &[Frac],
    c: &Candidate,
    bound: &Rat,
) -> Result<bool, FanError> {
    let lb = rat_to_f64(bound).ln();
    if c.log_h < lb - NEAR {
        return Ok(true);
    }
    if c.log_h > lb + NEAR {
        return Ok(false);
    }
    let phi = PlFunction::log_anticanonical(fan, &cfg.weights);
    let h = heights::global_height(fan, &phi, &candidate_point(fr, &c.idx))?;
    Ok(h.cmp_bound(bound) != Ordering::Greater)
}

fn count_generic(fan: &Fan, cfg: &CountConfig, bounds: &[Rat]) -> Result<CountParts, FanError> {
    let (fr, cands, space) = generic_candidates(fan, cfg)?;
    let mut checkpoints = Vec::new();
    for b in bounds {
        let mut n = 0u64;
        for c in &cands {
            if candidate_within(fan, cfg, &fr, c, b)? {
                n += 1;
            }
        }
        checkpoints.push(Checkpoint { bound: b.clone(), count: n });
    }
    let audit = if cfg.audit {
        let total = checkpoints.last().map_or(0, |c| c.count) as usize;
        let inside: Vec<&Candidate> = cands
            .iter()
            .filter(|c| candidate_within(fan, cfg, &fr, c, &cfg.bound).unwrap_or(false))
            .collect();
        let want = ((total as f64 * 0.01).ceil() as usize).min(AUDIT_CAP).min(inside.len());
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let phi = PlFunction::log_anticanonical(fan, &cfg.weights);
        let none = BTreeSet::new();
        let mut res = AuditResult::default();
        for _ in 0..want {
            let c = inside[rng.gen_range(0..inside.len())];
            let pt = candidate_point(&fr, &c.idx);
            res.sampled += 1;
            let good = points::classify_global(fan, &cfg.weights, &pt, &none, cfg.variant)?
                && heights::global_height(fan, &phi, &pt)?.cmp_bound(&cfg.bound) != Ordering::Greater;
            if !good {
                res.failures += 1;
            }
        }
        Some(res)
    } else {
        None
    };
    Ok((checkpoints, Method::Generic, space, audit))
}

/// Every point of height at most `bound` satisfying the variant, in canonical order (height,
/// then coordinates).
pub fn enumerate_points(
    fan: &Fan,
    weights: &OrbifoldWeights,
    variant: Variant,
    bound: &Rat,
    budget: f64,
) -> Result<Vec<(TorusPoint, HeightValue)>, FanError> {
    let mut cfg = CountConfig::new(weights.clone(), variant, bound.clone());
    cfg.budget = budget;
    enumerate_with(fan, &cfg, product_plan(fan, weights, variant).is_some())
}

/// Same as [`enumerate_points`], always through the generic search.
pub fn enumerate_points_generic(
    fan: &Fan,
    weights: &OrbifoldWeights,
    variant: Variant,
    bound: &Rat,
    budget: f64,
) -> Result<Vec<(TorusPoint, HeightValue)>, FanError> {
    let mut cfg = CountConfig::new(weights.clone(), variant, bound.clone());
    cfg.budget = budget;
    enumerate_with(fan, &cfg, false)
}

fn enumerate_with(fan: &Fan, cfg: &CountConfig, fast: bool) -> Result<Vec<(TorusPoint, HeightValue)>, FanError> {
    fan.check_weights(&cfg.weights)?;
    if !fan.is_smooth_complete() {
        return Err(FanError::NotSmoothComplete);
    }
    let phi = PlFunction::log_anticanonical(fan, &cfg.weights);
    let pts: Vec<TorusPoint> = if fast {
        let plan = product_plan(fan, &cfg.weights, cfg.variant).expect("fast path available");
        product_points(fan, &plan, &cfg.bound)
    } else {
        let (fr, cands, _) = generic_candidates(fan, cfg)?;
        let mut v = Vec::new();
        for c in &cands {
            if candidate_within(fan, cfg, &fr, c, &cfg.bound)? {
                v.push(candidate_point(&fr, &c.idx));
            }
        }
        v
    };
    let mut out = pts
        .into_iter()
        .map(|p| heights::global_height(fan, &phi, &p).map(|h| (p, h)))
        .collect::<Result<Vec<_>, _>>()?;
    out.sort_by(|a, b| a.1.cmp_height(&b.1).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}

fn signed_tuples(values: &[Vec<u64>]) -> Vec<(Vec<i64>, u64)> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(values: &[Vec<u64>], k: usize, cur: &mut Vec<i64>, out: &mut Vec<(Vec<i64>, u64)>) {
        if k == values.len() {
            if cur.iter().fold(0i64, |g, &v| g.gcd(&v)) == 1 {
                let m = cur.iter().map(|v| v.unsigned_abs()).max().unwrap_or(1);
                out.push((cur.clone(), m));
            }
            return;
        }
        for &v in &values[k] {
            let signs: &[i64] = if k + 1 == values.len() { &[1] } else { &[1, -1] };
            for &s in signs {
                cur.push(s * v as i64);
                rec(values, k + 1, cur, out);
                cur.pop();
            }
        }
    }
    rec(values, 0, &mut cur, &mut out);
    out
}

fn product_points(fan: &Fan, plan: &ProductPlan, bound: &Rat) -> Vec<TorusPoint> {
    let values = factor_values(plan, bound);
    let lists: Vec<Vec<(Vec<i64>, u64)>> = values.iter().map(|v| signed_tuples(v)).collect();
    let mut out = Vec::new();
    let mut chosen: Vec<Vec<i64>> = Vec::new();
    fn rec(
        plan: &ProductPlan,
        dim: usize,
        lists: &[Vec<(Vec<i64>, u64)>],
        k: usize,
        r: &Rat,
        chosen: &mut Vec<Vec<i64>>,
        out: &mut Vec<TorusPoint>,
    ) {
        if k == lists.len() {
            out.push(product_point(plan, dim, chosen));
            return;
        }
        let limit = max_coordinate(r, plan.int_exponents[k]);
        for (t, m) in &lists[k] {
            if limit.is_some_and(|l| *m > l) {
                continue;
            }
            let rest = r / arith::rat_pow(&Rat::from_integer((*m).into()), i64::from(plan.int_exponents[k]));
            chosen.push(t.clone());
            rec(plan, dim, lists, k + 1, &rest, chosen, out);
            chosen.pop();
        }
    }
    let r = arith::rat_pow(bound, i64::from(plan.scale));
    rec(plan, fan.dim(), &lists, 0, &r, &mut chosen, &mut out);
    out
}

/// `N(2B)/N(B)` on the top checkpoints, against the model value `2(1 + (b-1)/log B)`.
pub fn doubling_ratios(run: &CountRun, b: usize) -> Vec<(f64, f64, f64)> {
    run.checkpoints
        .windows(2)
        .filter(|w| w[0].count > 0)
        .map(|w| {
            let bb = rat_to_f64(&w[0].bound);
            let ratio = w[1].count as f64 / w[0].count as f64;
            (bb, ratio, 2.0 * (1.0 + (b as f64 - 1.0) / bb.ln()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, rint};
    use crate::library;
    use proptest::prelude::*;

    #[test]
    fn mfull_examples() {
        assert_eq!(enumerate_mfull(50, 2), vec![1, 4, 8, 9, 16, 25, 27, 32, 36, 49]);
        assert_eq!(enumerate_mfull(10, 3), vec![1, 8]);
        assert_eq!(enumerate_mfull(20, 1), (1..=20).collect::<Vec<_>>());
        assert_eq!(perfect_powers(100, 3), vec![1, 8, 27, 64]);
    }

    #[test]
    fn recognizes_products() {
        assert_eq!(recognize_product(&library::projective_space(2)).unwrap().len(), 1);
        let f = recognize_product(&library::p1_x_p1()).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f[1].rays, vec![3, 2]);
        assert!(recognize_product(&library::hirzebruch(1)).is_none());
        assert!(recognize_product(&library::del_pezzo_6()).is_none());
    }

    fn run(fan: &Fan, w: OrbifoldWeights, v: Variant, b: Rat) -> CountRun {
        let mut cfg = CountConfig::new(w, v, b);
        cfg.checkpoints = 1;
        count(fan, &cfg).unwrap()
    }

    #[test]
    fn p1_small_counts() {
        let f = library::projective_line();
        let w = OrbifoldWeights::uniform(2, 2);
        assert_eq!(run(&f, w.clone(), Variant::Campana, rint(10)).final_count(), 22);
        assert_eq!(run(&f, w.clone(), Variant::Darmon, rint(10)).final_count(), 14);
        assert_eq!(run(&f, w.clone(), Variant::Campana, rat(1, 2)).final_count(), 0);
        assert_eq!(run(&f, w, Variant::Campana, rint(1)).final_count(), 2);
    }

    #[test]
    fn p1xp1_uses_the_joint_bound() {
        let f = library::p1_x_p1();
        let w = OrbifoldWeights::uniform(4, 2);
        let n = run(&f, w.clone(), Variant::Campana, rint(10)).final_count();
        // brute force over pairs of P¹ points with H1·H2 <= 10
        let p1 = library::projective_line();
        let pts = enumerate_points(&p1, &OrbifoldWeights::uniform(2, 2), Variant::Campana, &rint(10), 1e7).unwrap();
        let hs: Vec<f64> = pts.iter().map(|(_, h)| h.value().round()).collect();
        let mut oracle = 0;
        for a in &hs {
            for b in &hs {
                if a * b <= 10.0 {
                    oracle += 1;
                }
            }
        }
        assert_eq!(n, oracle);
        assert_ne!(n, 484);
    }

    #[test]
    fn counts_match_across_workers_and_are_monotone() {
        let f = library::p1_x_p1();
        let w = OrbifoldWeights::uniform(4, 2);
        let mut out = Vec::new();
        for workers in [1, 4, 16] {
            let mut cfg = CountConfig::new(w.clone(), Variant::Campana, rint(20_000));
            cfg.workers = workers;
            out.push(count(&f, &cfg).unwrap().checkpoints);
        }
        assert!(out.windows(2).all(|w| w[0] == w[1]));
        assert!(out[0].windows(2).all(|w| w[0].count <= w[1].count));
    }

    #[test]
    fn fast_path_equals_generic_search() {
        let cases: Vec<(Fan, OrbifoldWeights, Rat)> = vec![
            (library::projective_line(), OrbifoldWeights::uniform(2, 2), rint(1000)),
            (library::projective_line(), OrbifoldWeights::finite(&[2, 3]), rint(100)),
            (library::projective_line(), OrbifoldWeights::ones(2), rint(1000)),
            (library::projective_space(2), OrbifoldWeights::ones(3), rint(1000)),
            (library::projective_space(2), OrbifoldWeights::uniform(3, 2), rint(40)),
            (library::p1_x_p1(), OrbifoldWeights::ones(4), rint(1000)),
            (library::p1_x_p1(), OrbifoldWeights::uniform(4, 2), rint(40)),
        ];
        for (f, w, b) in cases {
            for v in [Variant::Campana, Variant::Darmon] {
                let fast = enumerate_points(&f, &w, v, &b, 1e8).unwrap();
                let slow = enumerate_points_generic(&f, &w, v, &b, 1e8).unwrap();
                let fp: Vec<&TorusPoint> = fast.iter().map(|x| &x.0).collect();
                let sp: Vec<&TorusPoint> = slow.iter().map(|x| &x.0).collect();
                assert_eq!(fp, sp, "{w} {v} B={b}");
                let mut cfg = CountConfig::new(w.clone(), v, b.clone());
                cfg.checkpoints = 4;
                let r = count(&f, &cfg).unwrap();
                assert_eq!(r.final_count() as usize, fast.len());
                assert_eq!(r.audit.unwrap().failures, 0);
            }
        }
    }

    #[test]
    fn generic_path_counts_non_product_fans() {
        for f in [library::hirzebruch(1), library::del_pezzo_6()] {
            let w = OrbifoldWeights::ones(f.ray_count());
            let mut cfg = CountConfig::new(w, Variant::Campana, rint(200));
            cfg.checkpoints = 4;
            let r = count(&f, &cfg).unwrap();
            assert_eq!(r.method, Method::Generic);
            assert!(r.final_count() > 0);
            assert_eq!(r.audit.unwrap().failures, 0);
        }
    }

    #[test]
    fn budget_refusal() {
        let f = library::del_pezzo_6();
        let mut cfg = CountConfig::new(OrbifoldWeights::uniform(6, 3), Variant::Campana, rint(1_000_000));
        cfg.budget = 1e6;
        assert!(matches!(count(&f, &cfg), Err(FanError::BudgetExceeded { .. })));
        cfg.checkpoints = 0;
        assert!(matches!(count(&f, &cfg), Err(FanError::InvalidConfig(_))));
    }

    #[test]
    fn weak_points_use_the_generic_search() {
        let f = library::projective_line();
        let mut cfg = CountConfig::new(OrbifoldWeights::uniform(2, 2), Variant::WeakCampana, rint(30));
        cfg.checkpoints = 1;
        let r = count(&f, &cfg).unwrap();
        assert_eq!(r.method, Method::Generic);
        let c = run(&f, OrbifoldWeights::uniform(2, 2), Variant::Campana, rint(30)).final_count();
        assert!(r.final_count() >= c);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn mfull_matches_filter(x in 1u64..3000, m in 1u32..5) {
            let brute: Vec<u64> = (1..=x).filter(|&n| arith::is_mfull(n, m)).collect();
            prop_assert_eq!(enumerate_mfull(x, m), brute);
        }
    }
}
