//! The line-oriented `.fan` text format.
//!
//! ```text
//! # P^1 with weights (2, 2)
//! dim 1
//! rays 2
//! 1
//! -1
//! cones 2
//! 0
//! 1
//! weights 2 2
//! ```
//!
//! `orbits` and `weights` are optional. Their entries may follow on the same line or on the
//! next ones.

use std::fmt::Write as _;

use crate::fan::{Fan, OrbifoldWeights, RawFan, Weight};
use crate::FanError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FanFile {
    pub raw: RawFan,
    pub weights: Option<OrbifoldWeights>,
}

struct Lines<'a> {
    inner: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let inner = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").split_whitespace().collect::<Vec<_>>()))
            .filter(|(_, t)| !t.is_empty())
            .collect();
        Lines { inner, pos: 0 }
    }

    fn next(&mut self) -> Option<(usize, Vec<&'a str>)> {
        let l = self.inner.get(self.pos).cloned();
        self.pos += 1;
        l
    }

    /// `n` tokens, taken from `first` and then from following lines.
    fn tokens(&mut self, mut first: Vec<&'a str>, n: usize, what: &str, line: usize) -> Result<Vec<&'a str>, FanError> {
        while first.len() < n {
            let (_, more) = self.next().ok_or_else(|| err(line, &format!("expected {n} {what} entries")))?;
            first.extend(more);
        }
        if first.len() > n {
            return Err(err(line, &format!("expected {n} {what} entries, got {}", first.len())));
        }
        Ok(first)
    }
}

fn err(line: usize, msg: &str) -> FanError {
    FanError::Parse(format!("line {line}: {msg}"))
}

fn int<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T, FanError> {
    tok.parse().map_err(|_| err(line, &format!("bad integer `{tok}`")))
}

fn header(lines: &mut Lines, key: &str) -> Result<(usize, usize), FanError> {
    let (line, t) = lines.next().ok_or_else(|| FanError::Parse(format!("missing `{key}` line")))?;
    if t.len() != 2 || t[0] != key {
        return Err(err(line, &format!("expected `{key} <count>`")));
    }
    Ok((line, int(t[1], line)?))
}

pub fn parse(text: &str) -> Result<FanFile, FanError> {
    let mut lines = Lines::new(text);
    let (_, dim) = header(&mut lines, "dim")?;
    let (_, n) = header(&mut lines, "rays")?;
    let mut rays = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, t) = lines.next().ok_or_else(|| FanError::Parse(format!("expected {n} rays")))?;
        if t.len() != dim {
            return Err(err(line, &format!("ray has {} entries, expected {dim}", t.len())));
        }
        rays.push(t.iter().map(|s| int::<i64>(s, line)).collect::<Result<Vec<_>, _>>()?);
    }
    let (_, k) = header(&mut lines, "cones")?;
    let mut cones = Vec::with_capacity(k);
    for _ in 0..k {
        let (line, t) = lines.next().ok_or_else(|| FanError::Parse(format!("expected {k} cones")))?;
        cones.push(t.iter().map(|s| int::<usize>(s, line)).collect::<Result<Vec<_>, _>>()?);
    }
    let mut orbits = None;
    let mut weights = None;
    while let Some((line, t)) = lines.next() {
        match t[0] {
            "orbits" if orbits.is_none() => {
                let toks = lines.tokens(t[1..].to_vec(), n, "orbit", line)?;
                orbits = Some(toks.iter().map(|s| int::<usize>(s, line)).collect::<Result<Vec<_>, _>>()?);
            }
            "weights" if weights.is_none() => {
                let r = orbits.as_ref().map_or(n, |o: &Vec<usize>| o.iter().copied().max().map_or(0, |m| m + 1));
                let toks = lines.tokens(t[1..].to_vec(), r, "weight", line)?;
                weights = Some(OrbifoldWeights(
                    toks.iter().map(|s| s.parse::<Weight>()).collect::<Result<Vec<_>, _>>()?,
                ));
            }
            other => return Err(err(line, &format!("unexpected `{other}`"))),
        }
    }
    Ok(FanFile { raw: RawFan { dim, rays, cones, orbits, flagged_regular: false }, weights })
}

pub fn read(path: &std::path::Path) -> Result<FanFile, FanError> {
    let text = std::fs::read_to_string(path).map_err(|e| FanError::Parse(format!("{}: {e}", path.display())))?;
    parse(&text)
}

/// Serializes a validated fan, optionally with weights.
pub fn render(fan: &Fan, weights: Option<&OrbifoldWeights>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "dim {}", fan.dim());
    let _ = writeln!(s, "rays {}", fan.ray_count());
    for r in fan.rays() {
        let _ = writeln!(s, "{}", r.iter().map(i64::to_string).collect::<Vec<_>>().join(" "));
    }
    let _ = writeln!(s, "cones {}", fan.maximal_cones().len());
    for c in fan.maximal_cones() {
        let _ = writeln!(s, "{}", c.iter().map(usize::to_string).collect::<Vec<_>>().join(" "));
    }
    if !fan.is_split() {
        let o: Vec<String> = (0..fan.ray_count()).map(|j| fan.orbit_of_ray(j).to_string()).collect();
        let _ = writeln!(s, "orbits {}", o.join(" "));
    }
    if let Some(w) = weights {
        let ws: Vec<String> = w.0.iter().map(Weight::to_string).collect();
        let _ = writeln!(s, "weights {}", ws.join(" "));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library;

    #[test]
    fn parses_commented_file() {
        let f = parse(
            "# P^1\n dim 1\nrays 2\n1\n-1 # negative\ncones 2\n0\n1\nweights 2 inf\n",
        )
        .unwrap();
        assert_eq!(f.raw.rays, vec![vec![1], vec![-1]]);
        assert_eq!(f.raw.cones, vec![vec![0], vec![1]]);
        assert_eq!(f.weights.unwrap().0, vec![Weight::Finite(2), Weight::Infinite]);
        Fan::new(f.raw).unwrap();
    }

    #[test]
    fn weights_may_span_lines() {
        let f = parse("dim 1\nrays 2\n1\n-1\ncones 2\n0\n1\nweights\n3\n3\n").unwrap();
        assert_eq!(f.weights, Some(OrbifoldWeights::uniform(2, 3)));
    }

    #[test]
    fn round_trips_library() {
        for (_, fan) in library::standard() {
            let w = OrbifoldWeights::uniform(fan.ray_count(), 2);
            let back = parse(&render(&fan, Some(&w))).unwrap();
            assert_eq!(back.raw.rays, fan.rays());
            assert_eq!(back.raw.cones, fan.maximal_cones());
            assert_eq!(back.weights, Some(w));
        }
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in [
            "",
            "dim 2\nrays 1\n1\n",
            "dim 1\nrays 2\n1\nx\ncones 0\n",
            "dim 1\nrays 2\n1\n-1\ncones 2\n0\n1\nweights 2\n",
            "dim 1\nrays 2\n1\n-1\ncones 2\n0\n1\nfoo\n",
        ] {
            assert!(matches!(parse(bad), Err(FanError::Parse(_))), "{bad:?}");
        }
    }
}
