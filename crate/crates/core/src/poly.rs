//! Sparse multivariate polynomials with exact rational coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::arith::{rat_to_f64, Rat};

/// Exponent vectors map to nonzero coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseMultiPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Rat>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonzeroRemainder(pub SparseMultiPoly);

impl SparseMultiPoly {
    pub fn zero(nvars: usize) -> Self {
        SparseMultiPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Rat) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Rat::one())
    }

    pub fn monomial(exps: Vec<u32>, c: Rat) -> Self {
        let mut p = Self::zero(exps.len());
        p.add_term(exps, c);
        p
    }

    /// `x_var^k`.
    pub fn var_power(nvars: usize, var: usize, k: u32) -> Self {
        let mut e = vec![0; nvars];
        e[var] = k;
        Self::monomial(e, Rat::one())
    }

    /// `1 - x_var^k`.
    pub fn one_minus(nvars: usize, var: usize, k: u32) -> Self {
        Self::one(nvars).sub(&Self::var_power(nvars, var, k))
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rat)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exps: &[u32]) -> Rat {
        self.terms.get(exps).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn constant_term(&self) -> Rat {
        self.coeff(&vec![0; self.nvars])
    }

    fn add_term(&mut self, exps: Vec<u32>, c: Rat) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(exps);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    /// Exact quotient by `1 - x_var^k`; errors with the remainder if the division is not exact.
    pub fn div_one_minus(&self, var: usize, k: u32) -> Result<Self, NonzeroRemainder> {
        assert!(k > 0);
        // Q_e = P_e + Q_{e-k} along the `var` exponent, for each fixed rest of the exponent vector
        let mut groups: BTreeMap<Vec<u32>, BTreeMap<u32, Rat>> = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut rest = e.clone();
            rest[var] = 0;
            groups.entry(rest).or_default().insert(e[var], c.clone());
        }
        let mut q = Self::zero(self.nvars);
        for (rest, series) in groups {
            let top = *series.keys().next_back().expect("nonempty");
            if top < k {
                continue;
            }
            let mut qe: Vec<Rat> = Vec::with_capacity((top - k + 1) as usize);
            for e in 0..=top - k {
                let mut v = series.get(&e).cloned().unwrap_or_else(Rat::zero);
                if e >= k {
                    v += &qe[(e - k) as usize];
                }
                qe.push(v);
            }
            for (e, c) in qe.into_iter().enumerate() {
                let mut exps = rest.clone();
                exps[var] = e as u32;
                q.add_term(exps, c);
            }
        }
        let rem = self.sub(&q.mul(&Self::one_minus(self.nvars, var, k)));
        if rem.is_zero() {
            Ok(q)
        } else {
            Err(NonzeroRemainder(rem))
        }
    }

    /// Substitutes `x_i ↦ x_i^{k_i}`.
    pub fn substitute_powers(&self, k: &[u32]) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.iter().zip(k).map(|(a, b)| a * b).collect(), c.clone());
        }
        out
    }

    /// If every exponent of `x_i` is divisible by `k_i`, the polynomial `P` with `self = P(x^k)`.
    pub fn unsubstitute_powers(&self, k: &[u32]) -> Option<Self> {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e.iter().zip(k).any(|(a, b)| a % b != 0) {
                return None;
            }
            out.add_term(e.iter().zip(k).map(|(a, b)| a / b).collect(), c.clone());
        }
        Some(out)
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| rat_to_f64(c) * e.iter().zip(x).map(|(&a, &v)| v.powi(a as i32)).product::<f64>())
            .sum()
    }

    /// Sum of `|c|` over non-constant terms.
    pub fn abs_coeff_sum_nonconstant(&self) -> f64 {
        self.terms.iter().filter(|(e, _)| e.iter().any(|&a| a > 0)).map(|(_, c)| rat_to_f64(&c.abs())).sum()
    }

    /// Terms in canonical order: total degree, then lexicographic in the exponent vector
    /// read from the first variable.
    pub fn canonical_terms(&self) -> Vec<(&Vec<u32>, &Rat)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|a, b| {
            let da: u32 = a.0.iter().sum();
            let db: u32 = b.0.iter().sum();
            da.cmp(&db).then_with(|| b.0.cmp(a.0))
        });
        v
    }

    /// Canonical rendering `c * x1^a * x2^b + ...` with the given variable names.
    pub fn render(&self, names: &[String]) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (k, (e, c)) in self.canonical_terms().into_iter().enumerate() {
            let neg = c.is_negative();
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let a = c.abs();
            let vars: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &x)| x > 0)
                .map(|(i, &x)| if x == 1 { names[i].clone() } else { format!("{}^{x}", names[i]) })
                .collect();
            if vars.is_empty() {
                out.push_str(&a.to_string());
            } else {
                out.push_str(&format!("{a} * {}", vars.join(" * ")));
            }
        }
        out
    }
}

impl fmt::Display for SparseMultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (1..=self.nvars).map(|i| format!("x{i}")).collect();
        f.write_str(&self.render(&names))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rint;
    use proptest::prelude::*;

    fn poly(n: usize, t: &[(&[u32], i64)]) -> SparseMultiPoly {
        let mut p = SparseMultiPoly::zero(n);
        for (e, c) in t {
            p = p.add(&SparseMultiPoly::monomial(e.to_vec(), rint(*c)));
        }
        p
    }

    #[test]
    fn arithmetic_and_zero_pruning() {
        let a = poly(2, &[(&[1, 0], 1), (&[0, 1], 1)]);
        let b = poly(2, &[(&[1, 0], 1), (&[0, 1], -1)]);
        let p = a.mul(&b);
        assert_eq!(p, poly(2, &[(&[2, 0], 1), (&[0, 2], -1)]));
        assert!(p.sub(&p).is_zero());
        assert_eq!(p.render(&["u".into(), "v".into()]), "1 * u^2 - 1 * v^2");
    }

    #[test]
    fn exact_binomial_division() {
        let p = SparseMultiPoly::one_minus(2, 0, 6);
        let q = p.div_one_minus(0, 2).unwrap();
        assert_eq!(q, poly(2, &[(&[0, 0], 1), (&[2, 0], 1), (&[4, 0], 1)]));
        assert!(p.div_one_minus(0, 4).is_err());
        assert!(poly(2, &[(&[0, 0], 1)]).div_one_minus(1, 1).is_err());
    }

    proptest! {
        #[test]
        fn multiply_then_divide_round_trips(
            coeffs in proptest::collection::vec((0u32..4, 0u32..4, -5i64..6), 1..6),
            var in 0usize..2,
            k in 1u32..4,
        ) {
            let mut p = SparseMultiPoly::zero(2);
            for (a, b, c) in coeffs {
                p = p.add(&SparseMultiPoly::monomial(vec![a, b], rint(c)));
            }
            let prod = p.mul(&SparseMultiPoly::one_minus(2, var, k));
            prop_assert_eq!(prod.div_one_minus(var, k).unwrap(), p.clone());
            let x = [0.3, 0.7];
            prop_assert!((prod.eval_f64(&x) - p.eval_f64(&x) * (1.0 - x[var].powi(k as i32))).abs() < 1e-9);
        }
    }
}
