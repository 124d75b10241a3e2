//! Batyrev–Tschinkel heights of torus points for piecewise-linear functions on a fan.
//!
//! The local height at `p` is `p^{φ(v_p(t))}`. At the real place the height is
//! `e^{φ(-log|t_1|, …, -log|t_d|)}`; with this sign the product formula holds for linear φ,
//! and on `P^n` the log-anticanonical height of a coprime point is a power of the largest
//! coordinate. Every height is stored exactly enough that `H^D` is a rational number for a
//! suitable integer `D`, so comparisons against a bound can be settled exactly.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::arith::{self, rat_to_f64, Rat};
use crate::fan::{Fan, PlFunction};
use crate::points::TorusPoint;
use crate::FanError;

/// Gap in log-height below which comparisons are redone in exact arithmetic.
pub const EXACT_MARGIN: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct HeightValue {
    /// Finite part `Π p^{e_p}`.
    pub finite_part: BTreeMap<u64, Rat>,
    /// Archimedean part `Π_j |t_j|^{e_j}`.
    pub archimedean_exponents: Vec<Rat>,
    abs_coords: Vec<Rat>,
    pub archimedean_log: f64,
    pub total_log: f64,
}

impl HeightValue {
    pub fn finite_log(&self) -> f64 {
        self.finite_part.iter().map(|(&p, e)| rat_to_f64(e) * (p as f64).ln()).sum()
    }

    pub fn archimedean(&self) -> f64 {
        self.archimedean_log.exp()
    }

    pub fn value(&self) -> f64 {
        self.total_log.exp()
    }

    /// Smallest `D > 0` with `H^D` rational.
    pub fn exact_denominator(&self) -> BigInt {
        arith::lcm_all(
            self.finite_part
                .values()
                .chain(&self.archimedean_exponents)
                .map(|e| e.denom().clone()),
        )
    }

    /// `H^D` as an exact rational; `D` must be a multiple of [`Self::exact_denominator`].
    pub fn exact_power(&self, d: &BigInt) -> Rat {
        let mut out = Rat::from_integer(1.into());
        let scale = Rat::from_integer(d.clone());
        for (&p, e) in &self.finite_part {
            let k = (e * &scale).to_integer().to_i64().expect("exponent fits");
            out *= arith::rat_pow(&Rat::from_integer(p.into()), k);
        }
        for (base, e) in self.abs_coords.iter().zip(&self.archimedean_exponents) {
            let k = (e * &scale).to_integer().to_i64().expect("exponent fits");
            out *= arith::rat_pow(base, k);
        }
        out
    }

    /// Compares `H` with a positive rational bound, exactly when the floats are too close.
    pub fn cmp_bound(&self, bound: &Rat) -> Ordering {
        let lb = rat_to_f64(bound).ln();
        if (self.total_log - lb).abs() > EXACT_MARGIN * lb.abs().max(1.0) {
            return self.total_log.partial_cmp(&lb).expect("finite logs");
        }
        let d = self.exact_denominator();
        let k = d.to_i64().expect("denominator fits");
        self.exact_power(&d).cmp(&arith::rat_pow(bound, k))
    }

    pub fn cmp_height(&self, other: &HeightValue) -> Ordering {
        if (self.total_log - other.total_log).abs() > EXACT_MARGIN * self.total_log.abs().max(1.0) {
            return self.total_log.partial_cmp(&other.total_log).expect("finite logs");
        }
        let d = arith::lcm_all([self.exact_denominator(), other.exact_denominator()]);
        self.exact_power(&d).cmp(&other.exact_power(&d))
    }
}

fn require_complete(fan: &Fan) -> Result<(), FanError> {
    if fan.is_smooth_complete() {
        Ok(())
    } else {
        Err(FanError::NotSmoothComplete)
    }
}

/// `φ(v_p(t))`; the local height is `p` to this power.
pub fn local_height_exponent(fan: &Fan, phi: &PlFunction, point: &TorusPoint, p: u64) -> Result<Rat, FanError> {
    let deg: Vec<Rat> = point.degree_vector(p).into_iter().map(arith::rint).collect();
    fan.evaluate_pl(phi, &deg).ok_or(FanError::NotSmoothComplete)
}

/// Sign of `-Σ_j c_j log|t_j|` decided exactly.
fn exact_log_sign(row: &[Rat], abs: &[Rat]) -> Ordering {
    let d = arith::lcm_all(row.iter().map(|c| c.denom().clone()));
    let mut prod = Rat::from_integer(1.into());
    for (c, a) in row.iter().zip(abs) {
        let k = (c * Rat::from_integer(d.clone())).to_integer().to_i64().expect("exponent fits");
        prod *= arith::rat_pow(a, k);
    }
    Rat::from_integer(1.into()).cmp(&prod)
}

/// Exponents `e_j` with `H_∞ = Π |t_j|^{e_j}`.
pub fn archimedean_exponents(fan: &Fan, phi: &PlFunction, point: &TorusPoint) -> Result<Vec<Rat>, FanError> {
    let abs: Vec<Rat> = point.coords().iter().map(|c| c.abs()).collect();
    let x: Vec<f64> = abs.iter().map(|a| -rat_to_f64(a).ln()).collect();
    let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut charts: Vec<(f64, &[usize], &Vec<Vec<Rat>>)> = fan
        .chart_inverses()
        .map(|(rays, inv)| {
            let min = inv
                .iter()
                .map(|row| row.iter().zip(&x).map(|(c, v)| rat_to_f64(c) * v).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            (min, rays, inv)
        })
        .collect();
    charts.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite"));
    let exponents = |rays: &[usize], inv: &Vec<Vec<Rat>>| {
        (0..fan.dim())
            .map(|j| -rays.iter().zip(inv).map(|(&r, row)| &phi.values[r] * &row[j]).sum::<Rat>())
            .collect::<Vec<Rat>>()
    };
    if let Some(&(min, rays, inv)) = charts.first() {
        if min > 1e-9 * scale {
            return Ok(exponents(rays, inv));
        }
    }
    for (_, rays, inv) in charts {
        if inv.iter().all(|row| exact_log_sign(row, &abs) != Ordering::Less) {
            return Ok(exponents(rays, inv));
        }
    }
    Err(FanError::NotSmoothComplete)
}

pub fn archimedean_height(fan: &Fan, phi: &PlFunction, point: &TorusPoint) -> Result<f64, FanError> {
    require_complete(fan)?;
    let e = archimedean_exponents(fan, phi, point)?;
    Ok(arch_log(&e, point).exp())
}

fn arch_log(e: &[Rat], point: &TorusPoint) -> f64 {
    e.iter().zip(point.coords()).map(|(e, t)| rat_to_f64(e) * rat_to_f64(&t.abs()).ln()).sum()
}

pub fn global_height(fan: &Fan, phi: &PlFunction, point: &TorusPoint) -> Result<HeightValue, FanError> {
    require_complete(fan)?;
    let mut finite_part = BTreeMap::new();
    for p in point.support_primes()? {
        let e = local_height_exponent(fan, phi, point, p)?;
        if !e.is_zero() {
            finite_part.insert(p, e);
        }
    }
    let archimedean_exponents = archimedean_exponents(fan, phi, point)?;
    let archimedean_log = arch_log(&archimedean_exponents, point);
    let mut h = HeightValue {
        finite_part,
        archimedean_exponents,
        abs_coords: point.coords().iter().map(|c| c.abs()).collect(),
        archimedean_log,
        total_log: 0.0,
    };
    h.total_log = h.finite_log() + archimedean_log;
    Ok(h)
}

/// `κ = min_j φ(ρ_j)`: for every place, `φ(x) >= κ · Σ λ_j` with `λ` the cone coordinates of `x`.
pub fn kappa(phi: &PlFunction) -> Rat {
    phi.values.iter().min().cloned().unwrap_or_else(Rat::zero)
}

/// Exponent `E` with `max(|a_j|, |b_j|) <= B^E` for every coordinate `a_j/b_j` of a point of
/// height at most `B`. Requires `κ > 0`.
pub fn coordinate_bound_exponent(fan: &Fan, phi: &PlFunction) -> Option<Rat> {
    let k = kappa(phi);
    if !k.is_positive() {
        return None;
    }
    Some(arith::rint(fan.ray_sup_norm()) / (arith::rint(2) * k))
}
