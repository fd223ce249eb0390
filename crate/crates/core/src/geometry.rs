//! N-particle rectangles and their lattice skeletons.
//!
//! A configuration-space box is a product of `N` axis-aligned cubes in `R^d`
//! with integer centers. Side lengths are carried as `f64` so that fattened
//! extensions stay exact, but meshes and site enumeration expect
//! integer-valued sides; the grid spacing itself lives in the operator layer.

use crate::error::{Error, Result};

/// A single-particle box: a `d`-dimensional cube with integer center.
#[derive(Debug, Clone, PartialEq)]
pub struct Box1 {
    center: Vec<i64>,
    side: f64,
}

impl Box1 {
    pub fn new(center: Vec<i64>, side: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidParameter("box center must have d >= 1".into()));
        }
        if !(side > 0.0) || !side.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "box side must be positive and finite, got {side}"
            )));
        }
        Ok(Box1 { center, side })
    }

    /// Cube of side `side` centered at the origin of `R^d`.
    pub fn centered(d: usize, side: f64) -> Result<Self> {
        Self::new(vec![0; d], side)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[i64] {
        &self.center
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    /// True when the side length is an integer, as meshes require.
    pub fn has_integer_side(&self) -> bool {
        self.side.fract() == 0.0
    }

    /// Closed interval covered along axis `axis`.
    pub fn interval(&self, axis: usize) -> (f64, f64) {
        let c = self.center[axis] as f64;
        (c - self.side / 2.0, c + self.side / 2.0)
    }

    /// Whether `p` lies in the closed box.
    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && (0..self.dim()).all(|a| {
                let (lo, hi) = self.interval(a);
                p[a] >= lo && p[a] <= hi
            })
    }

    /// Whether `other` is contained in `self` (as closed sets).
    pub fn contains_box(&self, other: &Box1) -> bool {
        self.dim() == other.dim()
            && (0..self.dim()).all(|a| {
                let (lo, hi) = self.interval(a);
                let (olo, ohi) = other.interval(a);
                lo <= olo && ohi <= hi
            })
    }

    /// Grow the box by `r` on every face (side length grows by `2r`).
    pub fn fattened(&self, r: f64) -> Box1 {
        Box1 {
            center: self.center.clone(),
            side: self.side + 2.0 * r,
        }
    }

    /// Euclidean distance between two closed boxes (0 when they meet).
    pub fn distance(&self, other: &Box1) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        let mut sq = 0.0;
        for a in 0..self.dim() {
            let (lo1, hi1) = self.interval(a);
            let (lo2, hi2) = other.interval(a);
            let gap = (lo2 - hi1).max(lo1 - hi2).max(0.0);
            sq += gap * gap;
        }
        sq.sqrt()
    }
}

/// All points of `Z^d` inside the closed box.
///
/// For an odd integer side `L` the count is exactly `L^d`; an even side picks
/// up both faces and yields `(L+1)^d`.
pub fn lattice_sites(b: &Box1) -> Result<Vec<Vec<i64>>> {
    if !(b.side > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lattice enumeration needs side > 0, got {}",
            b.side
        )));
    }
    let d = b.dim();
    let mut ranges = Vec::with_capacity(d);
    for a in 0..d {
        let (lo, hi) = b.interval(a);
        let lo_i = lo.ceil() as i64;
        let hi_i = hi.floor() as i64;
        ranges.push((lo_i, hi_i));
    }
    let mut out = Vec::new();
    let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    if cur.iter().zip(&ranges).any(|(c, r)| *c > r.1) {
        return Ok(out);
    }
    loop {
        out.push(cur.clone());
        let mut axis = d;
        loop {
            if axis == 0 {
                return Ok(out);
            }
            axis -= 1;
            if cur[axis] < ranges[axis].1 {
                cur[axis] += 1;
                for r in axis + 1..d {
                    cur[r] = ranges[r].0;
                }
                break;
            }
        }
    }
}

/// An N-particle rectangle: ordered product of `N` boxes in the same `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct NRectangle {
    factors: Vec<Box1>,
}

impl NRectangle {
    pub fn new(factors: Vec<Box1>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter("need at least one factor box".into()));
        }
        let d = factors[0].dim();
        if factors.iter().any(|f| f.dim() != d) {
            return Err(Error::DimensionMismatch(
                "all factor boxes must share the same d".into(),
            ));
        }
        Ok(NRectangle { factors })
    }

    /// N-particle cube: `N` copies of the side-`l` box at the origin.
    pub fn cube(n: usize, d: usize, side: f64) -> Result<Self> {
        let b = Box1::centered(d, side)?;
        Self::new(vec![b; n])
    }

    pub fn particles(&self) -> usize {
        self.factors.len()
    }

    pub fn dim(&self) -> usize {
        self.factors[0].dim()
    }

    pub fn factors(&self) -> &[Box1] {
        &self.factors
    }

    pub fn factor(&self, i: usize) -> &Box1 {
        &self.factors[i]
    }

    /// Configuration-space volume `prod_i side_i^d`.
    pub fn volume(&self) -> f64 {
        let d = self.dim() as i32;
        self.factors.iter().map(|f| f.side().powi(d)).product()
    }

    /// Grow every factor side by `2r`, centers unchanged.
    pub fn extend(&self, r: f64) -> Result<NRectangle> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "extension length must be positive, got {r}"
            )));
        }
        Ok(NRectangle {
            factors: self.factors.iter().map(|f| f.fattened(r)).collect(),
        })
    }

    pub fn contains_rect(&self, other: &NRectangle) -> bool {
        self.particles() == other.particles()
            && self
                .factors
                .iter()
                .zip(&other.factors)
                .all(|(a, b)| a.contains_box(b))
    }

    /// Projection onto the coordinates listed in `indices` (1-based subsets
    /// are the math convention; here indices are 0-based).
    pub fn projection(&self, indices: &[usize]) -> Result<ProjectionSet> {
        if indices.is_empty() {
            return Err(Error::InvalidParameter(
                "projection needs a nonempty index set".into(),
            ));
        }
        let mut boxes: Vec<Box1> = Vec::new();
        for &i in indices {
            if i >= self.particles() {
                return Err(Error::InvalidParameter(format!(
                    "projection index {i} out of range for N={}",
                    self.particles()
                )));
            }
            let b = self.factors[i].clone();
            if !boxes.contains(&b) {
                boxes.push(b);
            }
        }
        Ok(ProjectionSet { boxes })
    }

    /// Projection onto all coordinates.
    pub fn full_projection(&self) -> ProjectionSet {
        let all: Vec<usize> = (0..self.particles()).collect();
        self.projection(&all).expect("full index set is nonempty")
    }
}

/// An axis-aligned union of single-particle boxes in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSet {
    boxes: Vec<Box1>,
}

impl ProjectionSet {
    pub fn boxes(&self) -> &[Box1] {
        &self.boxes
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    fn empty() -> Self {
        ProjectionSet { boxes: Vec::new() }
    }

    pub fn union(&self, other: &ProjectionSet) -> ProjectionSet {
        let mut boxes = self.boxes.clone();
        for b in &other.boxes {
            if !boxes.contains(b) {
                boxes.push(b.clone());
            }
        }
        ProjectionSet { boxes }
    }

    /// Set equality up to the deduplicated box list (order-insensitive).
    pub fn same_boxes(&self, other: &ProjectionSet) -> bool {
        self.boxes.len() == other.boxes.len()
            && self.boxes.iter().all(|b| other.boxes.contains(b))
    }

    /// Euclidean distance between two unions of closed boxes.
    /// Distance to an empty union is `+inf`.
    pub fn distance(&self, other: &ProjectionSet) -> f64 {
        if self.is_empty() || other.is_empty() {
            return f64::INFINITY;
        }
        let mut best = f64::INFINITY;
        for a in &self.boxes {
            for b in &other.boxes {
                best = best.min(a.distance(b));
            }
        }
        best
    }
}

/// Which disjunct of the separation definition held.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparationSide {
    /// `dist[ Pi_J A^, Pi_{J^c} A^ u Pi B^ ] > 2R`
    FirstBox,
    /// `dist[ Pi_J B^, Pi_{J^c} B^ u Pi A^ ] > 2R`
    SecondBox,
}

/// Witness for a positive separation decision.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationWitness {
    /// 0-based coordinate subset that decouples.
    pub indices: Vec<usize>,
    pub side: SeparationSide,
    /// The separating distance that was compared against `2R`.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationDecision {
    pub separated: bool,
    pub witness: Option<SeparationWitness>,
}

fn projection_of_subset(rect: &NRectangle, mask: u32, fatten: f64) -> ProjectionSet {
    let mut boxes: Vec<Box1> = Vec::new();
    for i in 0..rect.particles() {
        if mask & (1 << i) != 0 {
            let b = rect.factor(i).fattened(fatten);
            if !boxes.contains(&b) {
                boxes.push(b);
            }
        }
    }
    if boxes.is_empty() {
        ProjectionSet::empty()
    } else {
        ProjectionSet { boxes }
    }
}

/// Decides whether two N-particle rectangles are `R`-separated.
///
/// Both rectangles are fattened by `R` on every face (the caller guarantees
/// the single-site support sits inside `B(0, R)`), and all nonempty coordinate
/// subsets are searched for either disjunct. The search is exhaustive over the
/// `2^N - 1` subsets; particle counts are small in every intended use.
pub fn r_separated(a: &NRectangle, b: &NRectangle, r: f64) -> Result<SeparationDecision> {
    if a.particles() != b.particles() || a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "separation needs matching (N, d); got ({}, {}) vs ({}, {})",
            a.particles(),
            a.dim(),
            b.particles(),
            b.dim()
        )));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "separation length must be positive, got {r}"
        )));
    }
    let n = a.particles();
    if n > 24 {
        return Err(Error::InvalidParameter(format!(
            "subset search supports N <= 24, got N={n}"
        )));
    }
    let full: u32 = if n == 32 { u32::MAX } else { (1 << n) - 1 };
    let pi_a_hat = projection_of_subset(a, full, r);
    let pi_b_hat = projection_of_subset(b, full, r);

    for mask in 1..=full {
        let comp = full & !mask;
        // First disjunct: subset of A decouples from the rest of A and all of B.
        let pj_a = projection_of_subset(a, mask, r);
        let rest_a = projection_of_subset(a, comp, r).union(&pi_b_hat);
        let d1 = pj_a.distance(&rest_a);
        if d1 > 2.0 * r {
            return Ok(SeparationDecision {
                separated: true,
                witness: Some(SeparationWitness {
                    indices: mask_indices(mask, n),
                    side: SeparationSide::FirstBox,
                    distance: d1,
                }),
            });
        }
        // Second disjunct: the symmetric condition on B.
        let pj_b = projection_of_subset(b, mask, r);
        let rest_b = projection_of_subset(b, comp, r).union(&pi_a_hat);
        let d2 = pj_b.distance(&rest_b);
        if d2 > 2.0 * r {
            return Ok(SeparationDecision {
                separated: true,
                witness: Some(SeparationWitness {
                    indices: mask_indices(mask, n),
                    side: SeparationSide::SecondBox,
                    distance: d2,
                }),
            });
        }
    }
    Ok(SeparationDecision {
        separated: false,
        witness: None,
    })
}

fn mask_indices(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask & (1 << i) != 0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(center: i64, side: f64) -> Box1 {
        Box1::new(vec![center], side).unwrap()
    }

    #[test]
    fn lattice_sites_centered_enumeration() {
        let sites = lattice_sites(&b(0, 3.0)).unwrap();
        assert_eq!(sites, vec![vec![-1], vec![0], vec![1]]);

        let sq = lattice_sites(&Box1::centered(2, 3.0).unwrap()).unwrap();
        assert_eq!(sq.len(), 9);

        let shifted = lattice_sites(&b(5, 5.0)).unwrap();
        assert_eq!(shifted, vec![vec![3], vec![4], vec![5], vec![6], vec![7]]);
    }

    #[test]
    fn lattice_sites_rejects_bad_side() {
        assert!(Box1::new(vec![0], 0.0).is_err());
        assert!(Box1::new(vec![0], -2.0).is_err());
    }

    #[test]
    fn extend_grows_sides_and_contains() {
        let r1 = NRectangle::cube(1, 1, 3.0).unwrap();
        let e = r1.extend(1.0).unwrap();
        assert_eq!(e.factor(0).side(), 5.0);

        let r2 = NRectangle::new(vec![b(0, 3.0), b(0, 7.0)]).unwrap();
        let e2 = r2.extend(2.0).unwrap();
        assert_eq!(e2.factor(0).side(), 7.0);
        assert_eq!(e2.factor(1).side(), 11.0);
        assert!(e2.contains_rect(&r2));
    }

    #[test]
    fn projection_cases() {
        // Integer-center version of the two-particle example: [0,1] x [6,7]
        // is the common translate of side-1 boxes centered at 0 and 6.
        let rect = NRectangle::new(vec![b(0, 1.0), b(6, 1.0)]).unwrap();
        let p2 = rect.projection(&[1]).unwrap();
        assert_eq!(p2.boxes(), &[b(6, 1.0)]);

        let full = rect.full_projection();
        assert_eq!(full.boxes().len(), 2);

        let sq = NRectangle::cube(2, 1, 1.0).unwrap();
        let p1 = sq.projection(&[0]).unwrap();
        assert_eq!(p1.boxes(), &[b(0, 1.0)]);
        assert!(sq.projection(&[]).is_err());
    }

    #[test]
    fn separation_of_the_shadowed_pair() {
        // A = [0,1]^2 and B = [0,1] x [6,7], translated to integer centers.
        let a = NRectangle::cube(2, 1, 1.0).unwrap();
        let bb = NRectangle::new(vec![b(0, 1.0), b(6, 1.0)]).unwrap();
        let dec = r_separated(&a, &bb, 1.0).unwrap();
        assert!(dec.separated);
        let w = dec.witness.unwrap();
        assert_eq!(w.indices, vec![1]);
        assert_eq!(w.side, SeparationSide::SecondBox);
        assert!(w.distance > 2.0);
    }

    #[test]
    fn identical_boxes_are_never_separated() {
        let a = NRectangle::cube(2, 1, 1.0).unwrap();
        let dec = r_separated(&a, &a, 1.0).unwrap();
        assert!(!dec.separated);
        assert!(dec.witness.is_none());
    }

    #[test]
    fn far_apart_boxes_are_separated() {
        let a = NRectangle::cube(2, 1, 1.0).unwrap();
        let bb = NRectangle::new(vec![b(100, 1.0), b(100, 1.0)]).unwrap();
        assert!(r_separated(&a, &bb, 1.0).unwrap().separated);
    }

    #[test]
    fn separation_rejects_mismatched_shapes() {
        let a = NRectangle::cube(2, 1, 1.0).unwrap();
        let bb = NRectangle::cube(1, 1, 1.0).unwrap();
        assert!(r_separated(&a, &bb, 1.0).is_err());
        let c = NRectangle::cube(2, 2, 1.0).unwrap();
        assert!(r_separated(&a, &c, 1.0).is_err());
    }
}
