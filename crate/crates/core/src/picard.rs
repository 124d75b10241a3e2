//! Picard group of a smooth complete toric variety and the effective-cone constant
//! `χ(v) = ∫_{Eff^*} e^{-<v,y>} dy`.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::arith::Rat;
use crate::fan::{Fan, OrbifoldWeights};
use crate::linalg::{self, IntMatrix, RatMatrix};
use crate::FanError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PicardData {
    pub rank: usize,
    /// Class of the boundary divisor of each ray, in a fixed basis of `Pic ≅ ℤ^b`.
    pub class_of_ray: Vec<Vec<BigInt>>,
    /// Distinct classes of boundary divisors; they span the effective cone.
    pub effective_cone_generators: Vec<Vec<BigInt>>,
}

/// `Pic(X_Σ) = ℤ^{Σ(1)} / M`. The basis is put in row Hermite form so the output is canonical.
pub fn picard(fan: &Fan) -> Result<PicardData, FanError> {
    let d = fan.dim();
    let n = fan.ray_count();
    let e: IntMatrix = fan.rays().iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let snf = linalg::smith_normal_form(&e);
    if snf.diag.len() < d || snf.diag.iter().any(|x| !x.abs().is_one()) {
        return Err(FanError::Torsion(snf.diag.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")));
    }
    let class_rows: IntMatrix = snf.u[d..].to_vec();
    let canon = linalg::hermite_rows(&class_rows);
    let b = n - d;
    let class_of_ray: Vec<Vec<BigInt>> = (0..n).map(|j| (0..b).map(|i| canon[i][j].clone()).collect()).collect();
    let mut gens: Vec<Vec<BigInt>> = class_of_ray.clone();
    gens.sort();
    gens.dedup();
    Ok(PicardData { rank: b, class_of_ray, effective_cone_generators: gens })
}

impl PicardData {
    /// Class of `Σ_j a_j D_j`.
    pub fn class_of(&self, coeffs: &[Rat]) -> Vec<Rat> {
        (0..self.rank)
            .map(|i| {
                self.class_of_ray
                    .iter()
                    .zip(coeffs)
                    .map(|(c, a)| a * Rat::from_integer(c[i].clone()))
                    .sum()
            })
            .collect()
    }

    /// Class of `-K = Σ D_j`.
    pub fn anticanonical(&self) -> Vec<Rat> {
        self.class_of(&vec![Rat::one(); self.class_of_ray.len()])
    }

    /// Class of `-K - D_m = Σ (1/m_j) D_j`.
    pub fn log_anticanonical(&self, fan: &Fan, weights: &OrbifoldWeights) -> Vec<Rat> {
        let coeffs: Vec<Rat> = (0..fan.ray_count()).map(|j| fan.ray_weight(weights, j).reciprocal()).collect();
        self.class_of(&coeffs)
    }

    fn inequalities(&self) -> RatMatrix {
        self.effective_cone_generators
            .iter()
            .map(|g| g.iter().map(|x| Rat::from_integer(x.clone())).collect())
            .collect()
    }

    /// Extreme rays of the dual effective cone, by the double description method.
    pub fn dual_effective_rays(&self) -> Result<Vec<Vec<Rat>>, FanError> {
        double_description(&self.inequalities(), self.rank)
    }

    /// `∫_{Eff^*} e^{-<v,y>} dy`, with Lebesgue measure normalized by the dual lattice.
    pub fn effective_cone_constant(&self, v: &[Rat]) -> Result<Rat, FanError> {
        let rays = self.dual_effective_rays()?;
        let pairing: Vec<Rat> = rays.iter().map(|g| dot(g, v)).collect();
        if let Some(k) = pairing.iter().position(|p| !p.is_positive()) {
            return Err(FanError::Divergent(format!("class is not positive on dual generator {:?}", rays[k])));
        }
        let ineq = self.inequalities();
        let all: Vec<usize> = (0..rays.len()).collect();
        let simplices = triangulate(&rays, &ineq, &all, self.rank);
        let mut total = Rat::zero();
        for s in simplices {
            let g: RatMatrix = s.iter().map(|&k| rays[k].clone()).collect();
            let vol = linalg::det(&g).abs();
            let denom: Rat = s.iter().map(|&k| pairing[k].clone()).product();
            total += vol / denom;
        }
        Ok(total)
    }
}

fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn primitive(v: Vec<Rat>) -> Vec<Rat> {
    let den = crate::arith::lcm_all(v.iter().map(|x| x.denom().clone()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Rat::from_integer(den.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |g, x| num_integer::Integer::gcd(&g, x));
    if g.is_zero() {
        return v;
    }
    ints.into_iter().map(|x| Rat::from_integer(x / &g)).collect()
}

/// Extreme rays of `{y : A y >= 0}` (assumed pointed and full-dimensional).
fn double_description(a: &RatMatrix, dim: usize) -> Result<Vec<Vec<Rat>>, FanError> {
    if dim > 4 {
        return Err(FanError::Unsupported(format!("dual cone computation supports Picard rank <= 4, got {dim}")));
    }
    // initial simplicial cone from `dim` independent rows
    let mut basis: Vec<usize> = Vec::new();
    for i in 0..a.len() {
        let mut trial: RatMatrix = basis.iter().map(|&k| a[k].clone()).collect();
        trial.push(a[i].clone());
        if linalg::rank(&trial) == trial.len() {
            basis.push(i);
        }
        if basis.len() == dim {
            break;
        }
    }
    if basis.len() < dim {
        return Err(FanError::Divergent("effective cone is not full-dimensional".into()));
    }
    let a0: RatMatrix = basis.iter().map(|&k| a[k].clone()).collect();
    let inv = linalg::inverse(&a0).expect("independent rows");
    let mut rays: Vec<Vec<Rat>> = (0..dim).map(|c| primitive(inv.iter().map(|r| r[c].clone()).collect())).collect();
    let mut processed: Vec<usize> = basis.clone();
    for i in 0..a.len() {
        if basis.contains(&i) {
            continue;
        }
        let row = &a[i];
        let vals: Vec<Rat> = rays.iter().map(|r| dot(row, r)).collect();
        let mut next: Vec<Vec<Rat>> = Vec::new();
        for (r, v) in rays.iter().zip(&vals) {
            if !v.is_negative() {
                next.push(r.clone());
            }
        }
        for (p, vp) in rays.iter().zip(&vals) {
            if !vp.is_positive() {
                continue;
            }
            for (n, vn) in rays.iter().zip(&vals) {
                if !vn.is_negative() {
                    continue;
                }
                let tight: RatMatrix = processed
                    .iter()
                    .filter(|&&k| dot(&a[k], p).is_zero() && dot(&a[k], n).is_zero())
                    .map(|&k| a[k].clone())
                    .collect();
                if dim >= 2 && linalg::rank(&tight) != dim - 2 {
                    continue;
                }
                let comb: Vec<Rat> = p.iter().zip(n).map(|(x, y)| y * vp - x * vn).collect();
                next.push(primitive(comb));
            }
        }
        next.sort();
        next.dedup();
        if next.is_empty() {
            return Err(FanError::Divergent("dual effective cone is trivial".into()));
        }
        rays = next;
        processed.push(i);
    }
    Ok(rays)
}

/// Pulling triangulation of the cone spanned by `face` (of dimension `dim`) into simplicial cones.
fn triangulate(rays: &[Vec<Rat>], ineq: &RatMatrix, face: &[usize], dim: usize) -> Vec<Vec<usize>> {
    if face.len() == dim {
        return vec![face.to_vec()];
    }
    let apex = face[0];
    let mut facets: Vec<Vec<usize>> = Vec::new();
    for a in ineq {
        if dot(a, &rays[apex]).is_zero() {
            continue;
        }
        let f: Vec<usize> = face.iter().copied().filter(|&k| dot(a, &rays[k]).is_zero()).collect();
        if f.is_empty() && dim > 1 {
            continue;
        }
        let m: RatMatrix = f.iter().map(|&k| rays[k].clone()).collect();
        if linalg::rank(&m) == dim - 1 && !facets.contains(&f) {
            facets.push(f);
        }
    }
    let mut out = Vec::new();
    for f in facets {
        for mut s in triangulate(rays, ineq, &f, dim - 1) {
            s.push(apex);
            out.push(s);
        }
    }
    out
}
