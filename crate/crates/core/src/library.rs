//! Standard smooth complete fans used throughout the tests and the CLI.

use crate::fan::{Fan, RawFan};

fn build(dim: usize, rays: Vec<Vec<i64>>, cones: Vec<Vec<usize>>) -> Fan {
    Fan::new(RawFan { dim, rays, cones, orbits: None, flagged_regular: true }).expect("library fan is valid")
}

/// Fan of `P^n`: rays `e_1..e_n` and `-(e_1+..+e_n)`, maximal cones all `n`-subsets.
pub fn projective_space(n: usize) -> Fan {
    let (rays, cones) = projective_space_raw(n);
    build(n, rays, cones)
}

fn projective_space_raw(n: usize) -> (Vec<Vec<i64>>, Vec<Vec<usize>>) {
    let mut rays: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    rays.push(vec![-1; n]);
    let cones = (0..=n).map(|skip| (0..=n).filter(|&j| j != skip).collect()).collect();
    (rays, cones)
}

pub fn projective_line() -> Fan {
    projective_space(1)
}

/// Product fan: rays placed block-diagonally, maximal cones are products.
pub fn product(factors: &[Fan]) -> Fan {
    let dim: usize = factors.iter().map(Fan::dim).sum();
    let mut rays = Vec::new();
    let mut offsets = Vec::new();
    let mut coord = 0;
    for f in factors {
        offsets.push(rays.len());
        for r in f.rays() {
            let mut v = vec![0i64; dim];
            v[coord..coord + f.dim()].copy_from_slice(r);
            rays.push(v);
        }
        coord += f.dim();
    }
    let mut cones: Vec<Vec<usize>> = vec![Vec::new()];
    for (f, &off) in factors.iter().zip(&offsets) {
        let mut next = Vec::new();
        for c in &cones {
            for m in f.maximal_cones() {
                let mut n = c.clone();
                n.extend(m.iter().map(|&j| j + off));
                next.push(n);
            }
        }
        cones = next;
    }
    build(dim, rays, cones)
}

pub fn p1_x_p1() -> Fan {
    product(&[projective_line(), projective_line()])
}

/// Hirzebruch surface `F_a`.
pub fn hirzebruch(a: i64) -> Fan {
    build(
        2,
        vec![vec![1, 0], vec![0, 1], vec![-1, a], vec![0, -1]],
        vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]],
    )
}

/// Del Pezzo surface of degree 6 (P² blown up in three points): the hexagonal fan.
pub fn del_pezzo_6() -> Fan {
    build(
        2,
        vec![vec![1, 0], vec![1, 1], vec![0, 1], vec![-1, 0], vec![-1, -1], vec![0, -1]],
        (0..6).map(|i| vec![i, (i + 1) % 6]).collect(),
    )
}

/// The five surfaces-and-curves library: P¹, P², P¹×P¹, F₁, dP6.
pub fn standard() -> Vec<(&'static str, Fan)> {
    vec![
        ("P1", projective_line()),
        ("P2", projective_space(2)),
        ("P1xP1", p1_x_p1()),
        ("F1", hirzebruch(1)),
        ("dP6", del_pezzo_6()),
    ]
}

pub fn by_name(name: &str) -> Option<Fan> {
    let lower = name.to_ascii_lowercase();
    match lower.as_str() {
        "p1" => Some(projective_line()),
        "p2" => Some(projective_space(2)),
        "p3" => Some(projective_space(3)),
        "p1xp1" => Some(p1_x_p1()),
        "f1" => Some(hirzebruch(1)),
        "dp6" => Some(del_pezzo_6()),
        _ => None,
    }
}
