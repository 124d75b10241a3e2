//! Exact linear algebra over ℚ and ℤ on small dense matrices.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::arith::Rat;

pub type RatMatrix = Vec<Vec<Rat>>;
pub type IntMatrix = Vec<Vec<BigInt>>;

pub fn to_rat_matrix(rows: &[Vec<i64>]) -> RatMatrix {
    rows.iter()
        .map(|r| r.iter().map(|&x| Rat::from_integer(x.into())).collect())
        .collect()
}

/// Reduced row echelon form; returns the pivot columns.
pub fn rref(m: &mut RatMatrix) -> Vec<usize> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let t = &m[r][j] * &f;
                    m[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(rows: &[Vec<Rat>]) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m).len()
}

pub fn rank_int(rows: &[Vec<i64>]) -> usize {
    rank(&to_rat_matrix(rows))
}

pub fn det(m: &[Vec<Rat>]) -> Rat {
    let n = m.len();
    let mut a = m.to_vec();
    let mut d = Rat::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return Rat::zero();
        };
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= &a[c][c];
        for i in c + 1..n {
            if !a[i][c].is_zero() {
                let f = &a[i][c] / &a[c][c];
                for j in c..n {
                    let t = &a[c][j] * &f;
                    a[i][j] -= t;
                }
            }
        }
    }
    d
}

pub fn inverse(m: &[Vec<Rat>]) -> Option<RatMatrix> {
    let n = m.len();
    let mut aug: RatMatrix = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }));
            r
        })
        .collect();
    let piv = rref(&mut aug);
    if piv.len() < n || piv[n - 1] != n - 1 {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Basis of the right kernel `{x : m x = 0}`.
pub fn kernel(m: &[Vec<Rat>], cols: usize) -> RatMatrix {
    let mut a = m.to_vec();
    let piv = rref(&mut a);
    let free: Vec<usize> = (0..cols).filter(|c| !piv.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rat::zero(); cols];
            v[f] = Rat::one();
            for (r, &pc) in piv.iter().enumerate() {
                v[pc] = -a[r][f].clone();
            }
            v
        })
        .collect()
}

pub fn transpose<T: Clone>(m: &[Vec<T>]) -> Vec<Vec<T>> {
    if m.is_empty() {
        return Vec::new();
    }
    (0..m[0].len()).map(|j| m.iter().map(|r| r[j].clone()).collect()).collect()
}

pub fn mat_vec(m: &[Vec<Rat>], v: &[Rat]) -> Vec<Rat> {
    m.iter()
        .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Smith normal form `u * m * v = diag`, with `u`, `v` unimodular.
pub struct Smith {
    pub diag: Vec<BigInt>,
    pub u: IntMatrix,
    pub v: IntMatrix,
}

fn identity(n: usize) -> IntMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect()
}

pub fn smith_normal_form(m: &[Vec<BigInt>]) -> Smith {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut a = m.to_vec();
    let mut u = identity(rows);
    let mut v = identity(cols);
    let mut t = 0;
    while t < rows.min(cols) {
        // smallest nonzero entry of the trailing block
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if !a[i][j].is_zero()
                    && best.map_or(true, |(bi, bj)| a[i][j].abs() < a[bi][bj].abs())
                {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap(t, pi);
        u.swap(t, pi);
        for r in a.iter_mut() {
            r.swap(t, pj);
        }
        for r in v.iter_mut() {
            r.swap(t, pj);
        }
        let mut dirty = false;
        for i in t + 1..rows {
            let q = a[i][t].div_floor(&a[t][t]);
            if !q.is_zero() {
                for j in 0..cols {
                    let x = &a[t][j] * &q;
                    a[i][j] -= x;
                }
                for j in 0..rows {
                    let x = &u[t][j] * &q;
                    u[i][j] -= x;
                }
            }
            dirty |= !a[i][t].is_zero();
        }
        for j in t + 1..cols {
            let q = a[t][j].div_floor(&a[t][t]);
            if !q.is_zero() {
                for i in 0..rows {
                    let x = &a[i][t] * &q;
                    a[i][j] -= x;
                }
                for i in 0..cols {
                    let x = &v[i][t] * &q;
                    v[i][j] -= x;
                }
            }
            dirty |= !a[t][j].is_zero();
        }
        if dirty {
            continue;
        }
        // pivot must divide the trailing block
        let bad = (t + 1..rows)
            .flat_map(|i| (t + 1..cols).map(move |j| (i, j)))
            .find(|&(i, j)| !a[i][j].is_multiple_of(&a[t][t]));
        if let Some((i, _)) = bad {
            for j in 0..cols {
                let x = a[i][j].clone();
                a[t][j] += x;
            }
            for j in 0..rows {
                let x = u[i][j].clone();
                u[t][j] += x;
            }
            continue;
        }
        if a[t][t].is_negative() {
            for j in 0..cols {
                a[t][j] = -a[t][j].clone();
            }
            for j in 0..rows {
                u[t][j] = -u[t][j].clone();
            }
        }
        t += 1;
    }
    let diag = (0..rows.min(cols)).map(|i| a[i][i].clone()).collect();
    Smith { diag, u, v }
}

/// Row-style Hermite normal form obtained by left multiplication with a unimodular matrix.
pub fn hermite_rows(m: &[Vec<BigInt>]) -> IntMatrix {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut a = m.to_vec();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        loop {
            let nz: Vec<usize> = (r..rows).filter(|&i| !a[i][c].is_zero()).collect();
            if nz.is_empty() {
                break;
            }
            let p = *nz.iter().min_by_key(|&&i| a[i][c].abs()).unwrap();
            a.swap(r, p);
            let mut done = true;
            for i in r + 1..rows {
                if !a[i][c].is_zero() {
                    let q = a[i][c].div_floor(&a[r][c]);
                    for j in 0..cols {
                        let x = &a[r][j] * &q;
                        a[i][j] -= x;
                    }
                    done &= a[i][c].is_zero();
                }
            }
            if done {
                break;
            }
        }
        if a[r][c].is_zero() {
            continue;
        }
        if a[r][c].is_negative() {
            for j in 0..cols {
                a[r][j] = -a[r][j].clone();
            }
        }
        for i in 0..r {
            let q = a[i][c].div_floor(&a[r][c]);
            if !q.is_zero() {
                for j in 0..cols {
                    let x = &a[r][j] * &q;
                    a[i][j] -= x;
                }
            }
        }
        r += 1;
    }
    a
}

/// Decides whether `{x >= 0 : eq * x = 0, weights . x = 1}` is nonempty, by Gaussian
/// elimination of the equalities followed by Fourier–Motzkin on the remaining inequalities.
pub fn nonneg_feasible(eq: &[Vec<Rat>], weights: &[Rat]) -> bool {
    let k = weights.len();
    // affine system: rows of [coeffs | rhs], coeffs . x = rhs
    let mut sys: RatMatrix = eq
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.push(Rat::zero());
            r
        })
        .collect();
    let mut w = weights.to_vec();
    w.push(Rat::one());
    sys.push(w);
    let piv = rref(&mut sys);
    if piv.contains(&k) {
        return false;
    }
    let free: Vec<usize> = (0..k).filter(|c| !piv.contains(c)).collect();
    // each original variable as affine function of the free ones: (coeffs, const) >= 0
    let mut ineqs: Vec<(Vec<Rat>, Rat)> = Vec::new();
    for (r, &pc) in piv.iter().enumerate() {
        let _ = pc;
        let coeffs = free.iter().map(|&f| -sys[r][f].clone()).collect();
        ineqs.push((coeffs, sys[r][k].clone()));
    }
    for (i, _) in free.iter().enumerate() {
        let mut coeffs = vec![Rat::zero(); free.len()];
        coeffs[i] = Rat::one();
        ineqs.push((coeffs, Rat::zero()));
    }
    for var in 0..free.len() {
        let (pos, rest): (Vec<_>, Vec<_>) = ineqs.into_iter().partition(|(c, _)| c[var].is_positive());
        let (neg, zero): (Vec<_>, Vec<_>) = rest.into_iter().partition(|(c, _)| c[var].is_negative());
        let mut next = zero;
        for (pc, pk) in &pos {
            for (nc, nk) in &neg {
                let a = pc[var].clone();
                let b = -nc[var].clone();
                let coeffs: Vec<Rat> = pc.iter().zip(nc).map(|(x, y)| x * &b + y * &a).collect();
                next.push((coeffs, pk * &b + nk * &a));
            }
        }
        next.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        next.dedup();
        ineqs = next;
    }
    ineqs.iter().all(|(_, c)| !c.is_negative())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rint;

    fn bi(rows: &[&[i64]]) -> IntMatrix {
        rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
    }

    #[test]
    fn smith_of_small_matrix() {
        let m = bi(&[&[2, 4, 4], &[-6, 6, 12], &[10, -4, -16]]);
        let s = smith_normal_form(&m);
        let d: Vec<i64> = s.diag.iter().map(|x| x.try_into().unwrap()).collect();
        assert_eq!(d, vec![2, 6, 12]);
        // u m v == diag
        let prod = |a: &IntMatrix, b: &IntMatrix| -> IntMatrix {
            a.iter()
                .map(|r| (0..b[0].len()).map(|j| r.iter().zip(b).map(|(x, row)| x * &row[j]).sum()).collect())
                .collect()
        };
        let uv = prod(&prod(&s.u, &m), &s.v);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { s.diag[i].clone() } else { BigInt::zero() };
                assert_eq!(uv[i][j], expect);
            }
        }
    }

    #[test]
    fn smith_detects_index_two() {
        let s = smith_normal_form(&bi(&[&[1, 0], &[1, 2]]));
        assert_eq!(s.diag, vec![BigInt::from(1), BigInt::from(2)]);
    }

    #[test]
    fn determinant_and_inverse() {
        let m = to_rat_matrix(&[vec![0, 1], vec![-1, -1]]);
        assert_eq!(det(&m), rint(1));
        let inv = inverse(&m).unwrap();
        assert_eq!(inv, to_rat_matrix(&[vec![-1, -1], vec![1, 0]]));
    }

    #[test]
    fn feasibility_of_cone_overlap() {
        // (1,1) = (1,0) + (0,1): overlap between cone{(1,0),(0,1)} and ray (1,1)
        let eq = vec![
            vec![rint(1), rint(0), rint(-1)],
            vec![rint(0), rint(1), rint(-1)],
        ];
        assert!(nonneg_feasible(&eq, &[rint(1), rint(1), rint(1)]));
        // (-1,-1) is not in cone{(1,0),(0,1)}
        let eq = vec![
            vec![rint(1), rint(0), rint(1)],
            vec![rint(0), rint(1), rint(1)],
        ];
        assert!(!nonneg_feasible(&eq, &[rint(1), rint(1), rint(1)]));
    }
}
