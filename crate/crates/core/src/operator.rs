//! Finite-difference discretization of the restricted Hamiltonian on an
//! N-particle rectangle: the (2Nd+1)-point stencil Laplacian plus the
//! diagonal potential, assembled as a sparse symmetric matrix.
//!
//! Node conventions (spacing `h = 1/p`):
//! - Dirichlet: boundary values are eliminated, leaving `L*p - 1` nodes per
//!   unit-side-L axis, at `lo + k h` for `k = 1, ..., Lp-1`.
//! - Periodic: `L*p` nodes per axis at `lo + k h`, `k = 0, ..., Lp-1`, with
//!   neighbor wrap-around.

use std::io::Write;

use nalgebra::DMatrix;

use crate::disorder::DisorderField;
use crate::error::{Error, Result};
use crate::geometry::NRectangle;
use crate::potential::PotentialSpec;

pub const DEFAULT_DIMENSION_CAP: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Dirichlet,
    Periodic,
}

/// Tensor grid over an N-particle rectangle with a row-major flattening.
#[derive(Debug, Clone)]
pub struct Mesh {
    rect: NRectangle,
    points_per_unit: usize,
    boundary: Boundary,
    axis_counts: Vec<usize>,
    axis_first: Vec<f64>,
    strides: Vec<usize>,
}

impl Mesh {
    pub fn new(rect: NRectangle, points_per_unit: usize, boundary: Boundary) -> Result<Self> {
        if points_per_unit == 0 {
            return Err(Error::InvalidParameter(
                "points-per-unit-length must be at least 1".into(),
            ));
        }
        let d = rect.dim();
        let h = 1.0 / points_per_unit as f64;
        let mut axis_counts = Vec::with_capacity(rect.particles() * d);
        let mut axis_first = Vec::with_capacity(rect.particles() * d);
        for factor in rect.factors() {
            if !factor.has_integer_side() {
                return Err(Error::InvalidParameter(format!(
                    "mesh needs integer side lengths, got {}",
                    factor.side()
                )));
            }
            let segments = factor.side() as usize * points_per_unit;
            let count = match boundary {
                Boundary::Dirichlet => {
                    if segments < 2 {
                        return Err(Error::InvalidParameter(format!(
                            "Dirichlet mesh needs side * p >= 2, got {segments}"
                        )));
                    }
                    segments - 1
                }
                Boundary::Periodic => segments,
            };
            for axis in 0..d {
                let (lo, _) = factor.interval(axis);
                axis_counts.push(count);
                axis_first.push(match boundary {
                    Boundary::Dirichlet => lo + h,
                    Boundary::Periodic => lo,
                });
            }
        }
        let mut strides = vec![1usize; axis_counts.len()];
        for a in (0..axis_counts.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1]
                .checked_mul(axis_counts[a + 1])
                .ok_or_else(|| Error::InvalidParameter("mesh dimension overflows usize".into()))?;
        }
        Ok(Mesh {
            rect,
            points_per_unit,
            boundary,
            axis_counts,
            axis_first,
            strides,
        })
    }

    pub fn rect(&self) -> &NRectangle {
        &self.rect
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn points_per_unit(&self) -> usize {
        self.points_per_unit
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.points_per_unit as f64
    }

    /// Number of matrix rows.
    pub fn size(&self) -> usize {
        self.axis_counts.iter().product()
    }

    /// One entry per axis of configuration space (N*d entries).
    pub fn axis_counts(&self) -> &[usize] {
        &self.axis_counts
    }

    pub fn flatten(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.axis_counts.len());
        multi.iter().zip(&self.strides).map(|(m, s)| m * s).sum()
    }

    pub fn unflatten(&self, mut idx: usize) -> Vec<usize> {
        let mut multi = Vec::with_capacity(self.axis_counts.len());
        for s in &self.strides {
            multi.push(idx / s);
            idx %= s;
        }
        multi
    }

    /// Configuration-space position of a node.
    pub fn position(&self, multi: &[usize]) -> Vec<f64> {
        let h = self.spacing();
        multi
            .iter()
            .zip(&self.axis_first)
            .map(|(k, first)| first + *k as f64 * h)
            .collect()
    }
}

/// CSR symmetric matrix storing both triangles.
#[derive(Debug, Clone)]
pub struct SparseSymMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    pub fn from_coo(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_counts = vec![0usize; n];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            debug_assert!(r < n && c < n);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_counts[r] += 1;
                last = Some((r, c));
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        for r in 0..n {
            row_ptr[r + 1] = row_ptr[r] + row_counts[r];
        }
        SparseSymMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        self.col_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r)
            .find(|(col, _)| *col == c)
            .map(|(_, v)| v)
            .unwrap_or(0.0)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for r in 0..self.n {
            let mut acc = 0.0;
            for (c, v) in self.row(r) {
                acc += v * x[c];
            }
            y[r] = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    pub fn bandwidth(&self) -> usize {
        let mut bw = 0usize;
        for r in 0..self.n {
            for (c, _) in self.row(r) {
                bw = bw.max(r.abs_diff(c));
            }
        }
        bw
    }

    /// `(diagonal, off-diagonal)` when the matrix is tridiagonal.
    pub fn tridiagonal(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.n == 0 || self.bandwidth() > 1 {
            return None;
        }
        let mut diag = vec![0.0; self.n];
        let mut off = vec![0.0; self.n.saturating_sub(1)];
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                if c == r {
                    diag[r] = v;
                } else if c == r + 1 {
                    off[r] = v;
                }
            }
        }
        Some((diag, off))
    }

    /// Max absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Exact symmetry check: every (i, j) entry has a matching (j, i).
    pub fn is_symmetric(&self) -> bool {
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                if self.get(c, r) != v {
                    return false;
                }
            }
        }
        true
    }

    /// MatrixMarket coordinate output (symmetric, lower triangle, 1-based).
    pub fn write_matrix_market(&self, w: &mut impl Write) -> Result<()> {
        let lower: Vec<(usize, usize, f64)> = (0..self.n)
            .flat_map(|r| {
                self.row(r)
                    .filter(move |(c, _)| *c <= r)
                    .map(move |(c, v)| (r, c, v))
            })
            .collect();
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", self.n, self.n, lower.len())?;
        for (r, c, v) in lower {
            writeln!(w, "{} {} {:.17e}", r + 1, c + 1, v)?;
        }
        Ok(())
    }
}

/// Assembly limits.
#[derive(Debug, Clone, Copy)]
pub struct AssembleOptions {
    pub max_dimension: usize,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        AssembleOptions {
            max_dimension: DEFAULT_DIMENSION_CAP,
        }
    }
}

/// Sparse symmetric discretization with its provenance.
#[derive(Debug, Clone)]
pub struct HamiltonianMatrix {
    pub matrix: SparseSymMatrix,
    pub mesh: Mesh,
    /// `M >= 0` with `H >= -M`: zero for nonnegative potentials, otherwise
    /// the magnitude of the most negative diagonal potential sample.
    pub lower_bound: f64,
    /// `(master seed, trial)` of the disorder realization.
    pub lineage: (u64, u64),
}

impl HamiltonianMatrix {
    pub fn size(&self) -> usize {
        self.matrix.size()
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.size() {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} does not match matrix dimension {}",
                x.len(),
                self.size()
            )));
        }
        let mut y = vec![0.0; x.len()];
        self.matrix.matvec(x, &mut y);
        Ok(y)
    }
}

/// Assembles the stencil Laplacian plus the diagonal potential on `mesh`,
/// with the same disorder field entering every coordinate block.
pub fn assemble(
    mesh: &Mesh,
    potential: &PotentialSpec,
    field: &DisorderField,
    opts: &AssembleOptions,
) -> Result<HamiltonianMatrix> {
    assemble_with(mesh, potential, &|_| field, opts)
}

/// Variant with one independent field per factor, the non-interacting
/// product construction.
pub fn assemble_per_factor(
    mesh: &Mesh,
    potential: &PotentialSpec,
    fields: &[DisorderField],
    opts: &AssembleOptions,
) -> Result<HamiltonianMatrix> {
    if fields.len() != mesh.rect().particles() {
        return Err(Error::DimensionMismatch(format!(
            "need one field per factor: {} fields for {} factors",
            fields.len(),
            mesh.rect().particles()
        )));
    }
    assemble_with(mesh, potential, &|i| &fields[i], opts)
}

fn assemble_with<'f>(
    mesh: &Mesh,
    potential: &PotentialSpec,
    field_for: &dyn Fn(usize) -> &'f DisorderField,
    opts: &AssembleOptions,
) -> Result<HamiltonianMatrix> {
    let size = mesh.size();
    if size > opts.max_dimension {
        return Err(Error::DimensionCap {
            dim: size,
            cap: opts.max_dimension,
        });
    }
    let d = mesh.rect().dim();
    let n_particles = mesh.rect().particles();
    let nd = n_particles * d;
    let h = mesh.spacing();
    let inv_h2 = 1.0 / (h * h);

    // Disorder is a sum of one-body terms, so sample each factor's one-body
    // potential on that factor's d-dimensional grid once.
    let axis_counts = mesh.axis_counts();
    let mut factor_tables: Vec<Vec<f64>> = Vec::with_capacity(n_particles);
    for i in 0..n_particles {
        let counts = &axis_counts[i * d..(i + 1) * d];
        let firsts: Vec<f64> = (i * d..(i + 1) * d)
            .map(|a| mesh.axis_first[a])
            .collect();
        let total: usize = counts.iter().product();
        let mut table = Vec::with_capacity(total);
        let mut sub = vec![0usize; d];
        for _ in 0..total {
            let x: Vec<f64> = sub
                .iter()
                .zip(&firsts)
                .map(|(k, first)| first + *k as f64 * h)
                .collect();
            table.push(potential.one_body(field_for(i), &x)?);
            let mut axis = d;
            while axis > 0 {
                axis -= 1;
                if sub[axis] + 1 < counts[axis] {
                    sub[axis] += 1;
                    for a in axis + 1..d {
                        sub[a] = 0;
                    }
                    break;
                }
            }
        }
        factor_tables.push(table);
    }
    let factor_strides: Vec<Vec<usize>> = (0..n_particles)
        .map(|i| {
            let counts = &axis_counts[i * d..(i + 1) * d];
            let mut s = vec![1usize; d];
            for a in (0..d.saturating_sub(1)).rev() {
                s[a] = s[a + 1] * counts[a + 1];
            }
            s
        })
        .collect();

    let trivial_offdiag = matches!(potential.interaction, crate::potential::Interaction::None)
        && matches!(potential.background, crate::potential::Background::None);

    let mut entries: Vec<(usize, usize, f64)> =
        Vec::with_capacity(size * (2 * nd + 1));
    let mut min_potential = f64::INFINITY;
    let mut multi = vec![0usize; nd];
    for row in 0..size {
        // Diagonal potential.
        let mut pot = 0.0;
        for i in 0..n_particles {
            let local: usize = (0..d)
                .map(|a| multi[i * d + a] * factor_strides[i][a])
                .sum();
            pot += factor_tables[i][local];
        }
        if !trivial_offdiag {
            let x = mesh.position(&multi);
            pot += potential.interaction.energy(&x, d) + potential.background.eval(&x);
        }
        min_potential = min_potential.min(pot);
        entries.push((row, row, 2.0 * nd as f64 * inv_h2 + pot));

        for axis in 0..nd {
            let count = axis_counts[axis];
            let k = multi[axis];
            match mesh.boundary() {
                Boundary::Dirichlet => {
                    if k > 0 {
                        entries.push((row, row - mesh.strides[axis], -inv_h2));
                    }
                    if k + 1 < count {
                        entries.push((row, row + mesh.strides[axis], -inv_h2));
                    }
                }
                Boundary::Periodic => {
                    let prev = if k == 0 { count - 1 } else { k - 1 };
                    let next = if k + 1 == count { 0 } else { k + 1 };
                    let base = row - k * mesh.strides[axis];
                    entries.push((row, base + prev * mesh.strides[axis], -inv_h2));
                    entries.push((row, base + next * mesh.strides[axis], -inv_h2));
                }
            }
        }

        let mut axis = nd;
        while axis > 0 {
            axis -= 1;
            if multi[axis] + 1 < axis_counts[axis] {
                multi[axis] += 1;
                for a in axis + 1..nd {
                    multi[a] = 0;
                }
                break;
            }
        }
    }

    let matrix = SparseSymMatrix::from_coo(size, entries);
    debug_assert!(matrix.is_symmetric());
    Ok(HamiltonianMatrix {
        matrix,
        mesh: mesh.clone(),
        lower_bound: (-min_potential).max(0.0),
        lineage: field_for(0).lineage(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::{sample_field, CouplingDistribution};
    use crate::geometry::Box1;
    use crate::potential::{SingleSite, SiteLayout};
    use approx::assert_abs_diff_eq;

    fn zero_potential(d: usize) -> PotentialSpec {
        PotentialSpec::anderson(SingleSite::cube(1.0, d).unwrap(), SiteLayout::Regular)
    }

    fn zero_field_for(mesh: &Mesh, spec: &PotentialSpec) -> DisorderField {
        let mut sites = Vec::new();
        for f in mesh.rect().factors() {
            for s in spec.required_sites(f).unwrap() {
                if !sites.contains(&s) {
                    sites.push(s);
                }
            }
        }
        let dist = CouplingDistribution::degenerate(0.0).unwrap();
        sample_field(&dist, &sites, 0, 0).unwrap()
    }

    #[test]
    fn dirichlet_1d_stencil_by_hand() {
        let rect = NRectangle::cube(1, 1, 1.0).unwrap();
        let mesh = Mesh::new(rect, 4, Boundary::Dirichlet).unwrap();
        assert_eq!(mesh.size(), 3);
        let spec = zero_potential(1);
        let field = zero_field_for(&mesh, &spec);
        let h = assemble(&mesh, &spec, &field, &AssembleOptions::default()).unwrap();
        let dense = h.matrix.to_dense();
        let inv_h2 = 16.0;
        for r in 0..3 {
            assert_abs_diff_eq!(dense[(r, r)], 2.0 * inv_h2);
            for c in 0..3 {
                if r.abs_diff(c) == 1 {
                    assert_abs_diff_eq!(dense[(r, c)], -inv_h2);
                } else if r != c {
                    assert_abs_diff_eq!(dense[(r, c)], 0.0);
                }
            }
        }
        assert!(h.matrix.is_symmetric());
        assert_eq!(h.lower_bound, 0.0);
    }

    #[test]
    fn periodic_laplacian_rows_sum_to_zero() {
        let rect = NRectangle::cube(1, 1, 3.0).unwrap();
        let mesh = Mesh::new(rect, 2, Boundary::Periodic).unwrap();
        assert_eq!(mesh.size(), 6);
        let spec = zero_potential(1);
        let field = zero_field_for(&mesh, &spec);
        let h = assemble(&mesh, &spec, &field, &AssembleOptions::default()).unwrap();
        let ones = vec![1.0; 6];
        let y = h.apply(&ones).unwrap();
        for v in y {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mesh_flattening_is_a_bijection() {
        let rect = NRectangle::new(vec![
            Box1::centered(2, 2.0).unwrap(),
            Box1::centered(2, 3.0).unwrap(),
        ])
        .unwrap();
        let mesh = Mesh::new(rect, 2, Boundary::Dirichlet).unwrap();
        for idx in 0..mesh.size() {
            assert_eq!(mesh.flatten(&mesh.unflatten(idx)), idx);
        }
    }

    #[test]
    fn apply_matches_dense_multiplication() {
        let rect = NRectangle::cube(2, 1, 3.0).unwrap();
        let mesh = Mesh::new(rect, 2, Boundary::Dirichlet).unwrap();
        let spec = PotentialSpec::anderson(
            SingleSite::cube(1.0, 1).unwrap(),
            SiteLayout::CrookedJitter {
                amplitude: 0.1,
                seed: 7,
            },
        );
        let mut sites = Vec::new();
        for f in mesh.rect().factors() {
            for s in spec.required_sites(f).unwrap() {
                if !sites.contains(&s) {
                    sites.push(s);
                }
            }
        }
        let dist = CouplingDistribution::uniform(0.0, 1.0).unwrap();
        let field = sample_field(&dist, &sites, 11, 0).unwrap();
        let h = assemble(&mesh, &spec, &field, &AssembleOptions::default()).unwrap();
        let dense = h.matrix.to_dense();
        let n = h.size();
        let mut stream = crate::rng::Stream::new(1, crate::rng::Purpose::Fuzz, 0, 0);
        let x: Vec<f64> = (0..n).map(|_| stream.next_in(-1.0, 1.0)).collect();
        let y = h.apply(&x).unwrap();
        let xd = nalgebra::DVector::from_vec(x.clone());
        let yd = &dense * xd;
        for i in 0..n {
            let denom = yd[i].abs().max(1.0);
            assert!(((y[i] - yd[i]) / denom).abs() < 1e-12);
        }
        assert!(h.apply(&x[..n - 1]).is_err());
        // zero vector maps to zero
        let zeros = vec![0.0; n];
        assert!(h.apply(&zeros).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dimension_cap_guard() {
        let rect = NRectangle::cube(2, 1, 40.0).unwrap();
        let mesh = Mesh::new(rect, 4, Boundary::Dirichlet).unwrap();
        let spec = zero_potential(1);
        let field = zero_field_for(&mesh, &spec);
        let opts = AssembleOptions { max_dimension: 1000 };
        match assemble(&mesh, &spec, &field, &opts) {
            Err(Error::DimensionCap { dim, cap }) => {
                assert_eq!(dim, 159 * 159);
                assert_eq!(cap, 1000);
            }
            other => panic!("expected dimension cap error, got {other:?}"),
        }
    }

    #[test]
    fn matrix_market_output_shape() {
        let rect = NRectangle::cube(1, 1, 2.0).unwrap();
        let mesh = Mesh::new(rect, 1, Boundary::Dirichlet).unwrap();
        let spec = zero_potential(1);
        let field = zero_field_for(&mesh, &spec);
        let h = assemble(&mesh, &spec, &field, &AssembleOptions::default()).unwrap();
        let mut buf = Vec::new();
        h.matrix.write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "%%MatrixMarket matrix coordinate real symmetric"
        );
        assert_eq!(lines.next().unwrap(), "1 1 1");
    }

    #[test]
    fn integer_sides_required() {
        let rect = NRectangle::cube(1, 1, 2.5).unwrap();
        assert!(Mesh::new(rect, 2, Boundary::Dirichlet).is_err());
    }
}
