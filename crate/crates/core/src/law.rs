//! Exactly represented laws: sorted atom/probability lists on the line and
//! finite supports in `R^n`.

use std::io::Write;

use crate::error::{Error, Result};

/// Probability mass must sum to one within this tolerance.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// An exactly computed one-dimensional law: strictly increasing atoms with
/// matching probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLaw {
    atoms: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteLaw {
    pub fn new(atoms: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if atoms.len() != probs.len() || atoms.is_empty() {
            return Err(Error::invalid("atoms and probs must be non-empty and equal length"));
        }
        if atoms.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("atoms must be strictly increasing"));
        }
        if atoms.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("atoms must be finite"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid("probabilities must be finite and nonnegative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::invalid(format!("probabilities sum to {total}, expected 1")));
        }
        Ok(DiscreteLaw { atoms, probs })
    }

    /// Builds a law from unsorted weighted values, merging values that are
    /// closer than `merge_tol` relative to the value scale.
    pub fn from_weighted_values(mut pairs: Vec<(f64, f64)>, merge_tol: f64) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::invalid("empty value list"));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let scale = pairs
            .iter()
            .map(|(v, _)| v.abs())
            .fold(0.0f64, f64::max)
            .max(1.0);
        let eps = merge_tol * scale;
        let mut atoms: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut probs: Vec<f64> = Vec::with_capacity(pairs.len());
        for (v, p) in pairs {
            match atoms.last() {
                Some(&last) if v - last <= eps => {
                    *probs.last_mut().unwrap() += p;
                }
                _ => {
                    atoms.push(v);
                    probs.push(p);
                }
            }
        }
        atoms.shrink_to_fit();
        probs.shrink_to_fit();
        DiscreteLaw::new(atoms, probs)
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Mean of `g` under the law.
    pub fn expect(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        self.atoms
            .iter()
            .zip(&self.probs)
            .map(|(&a, &p)| p * g(a))
            .sum()
    }

    /// Writes `atom,prob` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "atom,prob")?;
        for (a, p) in self.atoms.iter().zip(&self.probs) {
            writeln!(out, "{a},{p}")?;
        }
        Ok(())
    }
}

/// A finite-support law on `R^n`: `count` atoms stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSupport {
    points: Vec<f64>,
    probs: Vec<f64>,
    n: usize,
}

impl FiniteSupport {
    pub fn new(points: Vec<f64>, probs: Vec<f64>, n: usize) -> Result<Self> {
        if n == 0 || points.len() != probs.len() * n {
            return Err(Error::invalid("points must hold probs.len() rows of length n"));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("support points must be finite"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::invalid(format!("probabilities sum to {total}, expected 1")));
        }
        Ok(FiniteSupport { points, probs, n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.n..(k + 1) * self.n]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points.chunks_exact(self.n).zip(self.probs.iter().copied())
    }

    /// Exact law of the Euclidean norm `|X|`.
    pub fn radius_law(&self) -> DiscreteLaw {
        let pairs: Vec<(f64, f64)> = self
            .iter()
            .map(|(x, p)| (x.iter().map(|c| c * c).sum::<f64>().sqrt(), p))
            .collect();
        DiscreteLaw::from_weighted_values(pairs, 1e-12).expect("radius law is well formed")
    }
}
