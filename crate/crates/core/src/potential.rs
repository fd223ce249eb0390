//! Single-site profiles, site layouts, interactions, and the potentials
//! built from them.
//!
//! All potentials are pure point evaluators; grid sampling belongs to the
//! operator layer so one definition serves any mesh resolution.
//!
//! Conventions: cube indicators are half-open (`[-l/2, l/2)` per axis), so
//! unit cubes tile space and the covering case sums to exactly one
//! everywhere; balls are open, matching the strict inequality in the
//! comparison potential.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::disorder::DisorderField;
use crate::error::{Error, Result};
use crate::geometry::Box1;
use crate::rng::{pack_site, Purpose, Stream};

/// Shape of the bump placed at every site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileKind {
    /// Indicator of the half-open cube of side `ell`.
    Cube,
    /// Indicator of the open ball of radius `delta`.
    Ball,
    /// Value 1 on the cube of side `ell`, linear decay to 0 on the faces of
    /// the unit cube.
    Tent,
}

/// Single-site potential `u` with its plateau scale `ell` and the ball scale
/// `delta` used by comparison potentials.
///
/// Construction enforces `B(0, delta)` inside the plateau `{u = 1}`: that
/// containment is exactly what makes the pointwise lower bound against
/// `delta`-balls valid, and it is strictly stronger than `delta <= ell` when
/// the profile is a cube or tent (a ball of radius `delta > ell/2` pokes out
/// of a side-`ell` cube).
#[derive(Debug, Clone, PartialEq)]
pub struct SingleSite {
    pub kind: ProfileKind,
    pub ell: f64,
    pub delta: f64,
}

impl SingleSite {
    pub fn new(kind: ProfileKind, ell: f64, delta: f64, d: usize) -> Result<Self> {
        if !(ell > 0.0 && ell <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "plateau scale must lie in (0, 1], got {ell}"
            )));
        }
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "ball scale must lie in (0, 0.5], got {delta}"
            )));
        }
        let s = SingleSite { kind, ell, delta };
        if delta > s.plateau_radius() + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "delta={delta} exceeds the profile plateau radius {}; \
                 the delta-ball must sit where u = 1 (delta <= ell/2 for cube and tent profiles)",
                s.plateau_radius()
            )));
        }
        if matches!(kind, ProfileKind::Ball) {
            let corner = 0.5 * ell * (d as f64).sqrt();
            if corner > delta + 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "ball profile of radius {delta} cannot dominate the side-{ell} cube in d={d} \
                     (cube corner at distance {corner})"
                )));
            }
        }
        Ok(s)
    }

    /// Cube profile with the largest admissible ball scale `ell/2` capped at 1/2.
    pub fn cube(ell: f64, d: usize) -> Result<Self> {
        Self::new(ProfileKind::Cube, ell, (0.5 * ell).min(0.5), d)
    }

    /// Ball profile: `u` is the indicator of the `delta`-ball itself.
    pub fn ball(delta: f64, d: usize) -> Result<Self> {
        let ell = (2.0 * delta / (d as f64).sqrt()).min(1.0);
        Self::new(ProfileKind::Ball, ell, delta, d)
    }

    pub fn tent(ell: f64, d: usize) -> Result<Self> {
        Self::new(ProfileKind::Tent, ell, (0.5 * ell).min(0.5), d)
    }

    /// Radius of the largest open ball on which `u = 1`.
    pub fn plateau_radius(&self) -> f64 {
        match self.kind {
            ProfileKind::Cube | ProfileKind::Tent => 0.5 * self.ell,
            ProfileKind::Ball => self.delta,
        }
    }

    /// Radius of a ball containing the support.
    pub fn support_radius(&self, d: usize) -> f64 {
        match self.kind {
            ProfileKind::Cube => 0.5 * self.ell * (d as f64).sqrt(),
            ProfileKind::Ball => self.delta,
            ProfileKind::Tent => 0.5 * (d as f64).sqrt(),
        }
    }

    /// Whether the support fits inside the unit cube around the site.
    pub fn small_support(&self) -> bool {
        match self.kind {
            ProfileKind::Cube | ProfileKind::Tent => self.ell <= 1.0,
            ProfileKind::Ball => self.delta <= 0.5,
        }
    }

    /// Profile value at displacement `z` from the site point.
    pub fn eval(&self, z: &[f64]) -> f64 {
        match self.kind {
            ProfileKind::Cube => {
                let half = 0.5 * self.ell;
                if z.iter().all(|c| *c >= -half && *c < half) {
                    1.0
                } else {
                    0.0
                }
            }
            ProfileKind::Ball => {
                let r2: f64 = z.iter().map(|c| c * c).sum();
                if r2 < self.delta * self.delta {
                    1.0
                } else {
                    0.0
                }
            }
            ProfileKind::Tent => {
                let linf = z.iter().fold(0.0f64, |m, c| m.max(c.abs()));
                if self.ell >= 1.0 {
                    return if linf < 0.5 { 1.0 } else { 0.0 };
                }
                ((0.5 - linf) / (0.5 * (1.0 - self.ell))).clamp(0.0, 1.0)
            }
        }
    }
}

/// Placement of the bump points `y_j`, one per lattice cell.
#[derive(Debug, Clone)]
pub enum SiteLayout {
    /// `y_j = j` for every lattice site.
    Regular,
    /// Explicit per-site offsets inside the unit cell; missing sites fall
    /// back to the regular point.
    Crooked { offsets: BTreeMap<Vec<i64>, Vec<f64>> },
    /// Offsets drawn uniformly from `[-amplitude, amplitude]^d`, a pure
    /// function of `(seed, site)` so the layout is stable under box growth.
    CrookedJitter { amplitude: f64, seed: u64 },
    /// Deterministic crooked layout: sites of odd coordinate-sum are
    /// displaced by `amplitude` along every axis, the rest stay put.
    CrookedAlternating { amplitude: f64 },
    /// Points of a split point set, one per covering cell of scale `M`;
    /// `extra` carries the remainder component, added deterministically.
    Delone {
        cell_scale: f64,
        cells: BTreeMap<Vec<i64>, Vec<f64>>,
        extra: Vec<Vec<f64>>,
        include_extra: bool,
    },
}

impl SiteLayout {
    /// Side length of the cell associated with one lattice index.
    pub fn cell_scale(&self) -> f64 {
        match self {
            SiteLayout::Delone { cell_scale, .. } => *cell_scale,
            _ => 1.0,
        }
    }

    /// Largest sup-norm offset of `y_j` from its cell center.
    pub fn max_offset(&self) -> f64 {
        match self {
            SiteLayout::Regular => 0.0,
            SiteLayout::Crooked { offsets } => offsets
                .values()
                .flat_map(|o| o.iter().map(|c| c.abs()))
                .fold(0.0, f64::max),
            SiteLayout::CrookedJitter { amplitude, .. } => *amplitude,
            SiteLayout::CrookedAlternating { amplitude } => amplitude.abs(),
            SiteLayout::Delone {
                cell_scale, cells, ..
            } => cells
                .iter()
                .map(|(j, p)| {
                    p.iter()
                        .zip(j)
                        .map(|(c, jc)| (c - *jc as f64 * cell_scale).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max),
        }
    }

    /// The bump point for lattice index `j`, or `None` where the layout has
    /// no site (possible only for point-set layouts near the boundary).
    pub fn site_point(&self, j: &[i64]) -> Result<Option<Vec<f64>>> {
        match self {
            SiteLayout::Regular => Ok(Some(j.iter().map(|&c| c as f64).collect())),
            SiteLayout::Crooked { offsets } => {
                let base: Vec<f64> = j.iter().map(|&c| c as f64).collect();
                match offsets.get(j) {
                    Some(off) => {
                        if off.len() != j.len() {
                            return Err(Error::DimensionMismatch(
                                "offset dimension must match site dimension".into(),
                            ));
                        }
                        if off.iter().any(|c| c.abs() > 0.5) {
                            return Err(Error::InvalidParameter(format!(
                                "offset {off:?} leaves the unit cell around {j:?}"
                            )));
                        }
                        Ok(Some(base.iter().zip(off).map(|(b, o)| b + o).collect()))
                    }
                    None => Ok(Some(base)),
                }
            }
            SiteLayout::CrookedJitter { amplitude, seed } => {
                if *amplitude > 0.5 {
                    return Err(Error::InvalidParameter(format!(
                        "jitter amplitude {amplitude} leaves the unit cell"
                    )));
                }
                let mut stream = Stream::new(*seed, Purpose::LayoutJitter, 0, pack_site(j)?);
                Ok(Some(
                    j.iter()
                        .map(|&c| c as f64 + stream.next_in(-amplitude, *amplitude))
                        .collect(),
                ))
            }
            SiteLayout::CrookedAlternating { amplitude } => {
                if amplitude.abs() > 0.5 {
                    return Err(Error::InvalidParameter(format!(
                        "alternating offset {amplitude} leaves the unit cell"
                    )));
                }
                let odd = j.iter().sum::<i64>().rem_euclid(2) == 1;
                let off = if odd { *amplitude } else { 0.0 };
                Ok(Some(j.iter().map(|&c| c as f64 + off).collect()))
            }
            SiteLayout::Delone { cells, .. } => Ok(cells.get(j).cloned()),
        }
    }
}

/// Inter-particle interaction.
#[derive(Clone)]
pub enum Interaction {
    None,
    /// Sum over pairs of `A * max(0, 1 - |x_j - x_k| / range)`.
    Pair { amplitude: f64, range: f64 },
    /// Arbitrary bounded symmetric interaction with a declared sup bound.
    Custom {
        f: Arc<dyn Fn(&[f64], usize) -> f64 + Send + Sync>,
        bound: f64,
    },
}

impl std::fmt::Debug for Interaction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Interaction::None => write!(f, "Interaction::None"),
            Interaction::Pair { amplitude, range } => {
                write!(f, "Interaction::Pair {{ amplitude: {amplitude}, range: {range} }}")
            }
            Interaction::Custom { bound, .. } => {
                write!(f, "Interaction::Custom {{ bound: {bound} }}")
            }
        }
    }
}

impl Interaction {
    pub fn validate(&self) -> Result<()> {
        match self {
            Interaction::None => Ok(()),
            Interaction::Pair { amplitude, range } => {
                if !(*amplitude >= 0.0) || !amplitude.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "pair amplitude must be nonnegative, got {amplitude}"
                    )));
                }
                if !(*range > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "pair range must be positive, got {range}"
                    )));
                }
                Ok(())
            }
            Interaction::Custom { bound, .. } => {
                if !(*bound >= 0.0) {
                    return Err(Error::InvalidParameter(
                        "custom interaction needs a nonnegative bound".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Interaction::None)
    }

    /// Pair profile value at separation vector `r`.
    pub fn pair_value(&self, r: &[f64]) -> f64 {
        match self {
            Interaction::Pair { amplitude, range } => {
                let norm: f64 = r.iter().map(|c| c * c).sum::<f64>().sqrt();
                amplitude * (1.0 - norm / range).max(0.0)
            }
            _ => 0.0,
        }
    }

    /// Full interaction at configuration `x = (x_1, ..., x_N)` flattened.
    pub fn energy(&self, x: &[f64], d: usize) -> f64 {
        match self {
            Interaction::None => 0.0,
            Interaction::Pair { .. } => {
                let n = x.len() / d;
                let mut total = 0.0;
                for j in 0..n {
                    for k in j + 1..n {
                        let r: Vec<f64> = (0..d)
                            .map(|c| x[j * d + c] - x[k * d + c])
                            .collect();
                        total += self.pair_value(&r);
                    }
                }
                total
            }
            Interaction::Custom { f, .. } => f(x, d),
        }
    }

    /// Upper bound for `N` particles.
    pub fn sup_bound(&self, n: usize) -> f64 {
        match self {
            Interaction::None => 0.0,
            Interaction::Pair { amplitude, .. } => {
                amplitude * (n * n.saturating_sub(1)) as f64 / 2.0
            }
            Interaction::Custom { bound, .. } => *bound,
        }
    }
}

/// Optional bounded background, periodic in every coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum Background {
    None,
    /// `amplitude * sum_c (1 + cos(2 pi x_c)) / 2` over all Nd coordinates.
    Cosine { amplitude: f64 },
}

impl Background {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Background::None => 0.0,
            Background::Cosine { amplitude } => {
                amplitude
                    * x.iter()
                        .map(|c| 0.5 * (1.0 + (2.0 * std::f64::consts::PI * c).cos()))
                        .sum::<f64>()
            }
        }
    }

    /// Lower bound of the background over all of space (0 when absent).
    pub fn min_value(&self, nd: usize) -> f64 {
        match self {
            Background::None => 0.0,
            Background::Cosine { amplitude } => {
                if *amplitude >= 0.0 {
                    0.0
                } else {
                    amplitude * nd as f64
                }
            }
        }
    }
}

/// Everything needed to evaluate the full potential of a system.
#[derive(Debug, Clone)]
pub struct PotentialSpec {
    pub profile: SingleSite,
    pub layout: SiteLayout,
    pub interaction: Interaction,
    pub background: Background,
}

impl PotentialSpec {
    pub fn anderson(profile: SingleSite, layout: SiteLayout) -> Self {
        PotentialSpec {
            profile,
            layout,
            interaction: Interaction::None,
            background: Background::None,
        }
    }

    /// Lattice cells whose bumps can reach into `factor`; the site set a
    /// disorder field must cover before assembling an operator over it.
    pub fn required_sites(&self, factor: &Box1) -> Result<Vec<Vec<i64>>> {
        let scale = self.layout.cell_scale();
        let reach = self.profile.support_radius(factor.dim()) + self.layout.max_offset();
        let mut ranges = Vec::with_capacity(factor.dim());
        for axis in 0..factor.dim() {
            let (lo, hi) = factor.interval(axis);
            ranges.push((
                ((lo - reach) / scale).ceil() as i64,
                ((hi + reach) / scale).floor() as i64,
            ));
        }
        let d = factor.dim();
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
                    for a in axis + 1..d {
                        cur[a] = ranges[a].0;
                    }
                    break;
                }
            }
        }
    }

    fn candidate_cells(&self, x: &[f64]) -> Vec<Vec<i64>> {
        let scale = self.layout.cell_scale();
        let reach = self.profile.support_radius(x.len()) + self.layout.max_offset();
        let span = (reach / scale).ceil() as i64 + 1;
        let d = x.len();
        let base: Vec<i64> = x.iter().map(|c| (c / scale).round() as i64).collect();
        let mut out = Vec::new();
        let mut offs = vec![-span; d];
        loop {
            out.push(base.iter().zip(&offs).map(|(b, o)| b + o).collect());
            let mut axis = d;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if offs[axis] < span {
                    offs[axis] += 1;
                    for a in axis + 1..d {
                        offs[a] = -span;
                    }
                    break;
                }
            }
        }
    }

    /// One-body random potential at `x in R^d`:
    /// the coupling-weighted bump sum plus any deterministic remainder
    /// component of a point-set layout.
    pub fn one_body(&self, field: &DisorderField, x: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for j in self.candidate_cells(x) {
            let Some(y) = self.layout.site_point(&j)? else {
                continue;
            };
            let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            let u = self.profile.eval(&z);
            if u != 0.0 {
                total += field.value(&j)? * u;
            }
        }
        if let SiteLayout::Delone {
            extra,
            include_extra: true,
            ..
        } = &self.layout
        {
            for z_pt in extra {
                let z: Vec<f64> = x.iter().zip(z_pt).map(|(a, b)| a - b).collect();
                total += self.profile.eval(&z);
            }
        }
        Ok(total)
    }

    /// N-body random potential at `x in R^{Nd}` (same field in every block).
    pub fn n_body(&self, field: &DisorderField, x: &[f64], d: usize) -> Result<f64> {
        if x.len() % d != 0 {
            return Err(Error::DimensionMismatch(format!(
                "point length {} is not a multiple of d={d}",
                x.len()
            )));
        }
        let mut total = 0.0;
        for block in x.chunks_exact(d) {
            total += self.one_body(field, block)?;
        }
        Ok(total)
    }

    /// Full diagonal potential: disorder + interaction + background.
    pub fn total(&self, field: &DisorderField, x: &[f64], d: usize) -> Result<f64> {
        Ok(self.n_body(field, x, d)?
            + self.interaction.energy(x, d)
            + self.background.eval(x))
    }
}

/// The deterministic comparison potential: the sum over product lattice
/// points of indicators of open `delta`-balls in `R^{Nd}`.
///
/// For `delta <= scale/2` the per-factor balls are disjoint, so the value is
/// 0 or 1 and equals the indicator of `sum_i dist(x_i, nearest y)^2 < delta^2`.
#[derive(Debug, Clone)]
pub struct ComparisonPotential {
    delta: f64,
    d: usize,
    cell_scale: f64,
    factor_cells: Vec<BTreeMap<Vec<i64>, Vec<f64>>>,
}

impl ComparisonPotential {
    /// Builds W for the factor skeletons of an N-rectangle: each factor `i`
    /// contributes the sites of `Z^d` (scaled by the layout cell) inside it.
    pub fn new(
        layout: &SiteLayout,
        delta: f64,
        factors: &[Box1],
    ) -> Result<ComparisonPotential> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter("need at least one factor".into()));
        }
        let d = factors[0].dim();
        let scale = layout.cell_scale();
        let mut factor_cells = Vec::with_capacity(factors.len());
        for factor in factors {
            let mut cells = BTreeMap::new();
            for axis_sites in skeleton_cells(factor, scale) {
                if let Some(y) = layout.site_point(&axis_sites)? {
                    cells.insert(axis_sites, y);
                }
            }
            factor_cells.push(cells);
        }
        Ok(ComparisonPotential {
            delta,
            d,
            cell_scale: scale,
            factor_cells,
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.d * self.factor_cells.len());
        let mut dist2 = 0.0;
        for (i, block) in x.chunks_exact(self.d).enumerate() {
            let mut best = f64::INFINITY;
            let base: Vec<i64> = block
                .iter()
                .map(|c| (c / self.cell_scale).round() as i64)
                .collect();
            // delta <= scale/2 means only the cell of x and its neighbors
            // can hold a ball containing x.
            let mut offs = vec![-1i64; self.d];
            loop {
                let cell: Vec<i64> = base.iter().zip(&offs).map(|(b, o)| b + o).collect();
                if let Some(y) = self.factor_cells[i].get(&cell) {
                    let r2: f64 = block
                        .iter()
                        .zip(y)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    best = best.min(r2);
                }
                let mut axis = self.d;
                let mut done = true;
                while axis > 0 {
                    axis -= 1;
                    if offs[axis] < 1 {
                        offs[axis] += 1;
                        for a in axis + 1..self.d {
                            offs[a] = -1;
                        }
                        done = false;
                        break;
                    }
                }
                if done {
                    break;
                }
            }
            if !best.is_finite() {
                return 0.0;
            }
            dist2 += best;
            if dist2 >= self.delta * self.delta {
                return 0.0;
            }
        }
        if dist2 < self.delta * self.delta {
            1.0
        } else {
            0.0
        }
    }
}

fn skeleton_cells(factor: &Box1, scale: f64) -> Vec<Vec<i64>> {
    let d = factor.dim();
    let mut ranges = Vec::with_capacity(d);
    for axis in 0..d {
        let (lo, hi) = factor.interval(axis);
        ranges.push(((lo / scale).ceil() as i64, (hi / scale).floor() as i64));
    }
    let mut out = Vec::new();
    let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    if cur.iter().zip(&ranges).any(|(c, r)| *c > r.1) {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut axis = d;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            if cur[axis] < ranges[axis].1 {
                cur[axis] += 1;
                for a in axis + 1..d {
                    cur[a] = ranges[a].0;
                }
                break;
            }
        }
    }
}

/// Outcome of the pointwise comparison between the unit-coupling potential
/// and `N` times the comparison potential.
#[derive(Debug, Clone)]
pub struct LowerBoundReport {
    pub pass: bool,
    pub min_margin: f64,
    pub worst_point: Vec<f64>,
    pub points_checked: usize,
}

/// Checks `V~(x) >= N * W(x)` over a grid of configuration points, where
/// `V~` is the disorder sum with every coupling set to one, restricted to
/// the factor skeletons. A negative margin is a correctness bug, never a
/// statistical fluctuation.
pub fn check_lower_bound(
    spec: &PotentialSpec,
    factors: &[Box1],
    points_per_unit: usize,
) -> Result<LowerBoundReport> {
    if factors.is_empty() {
        return Err(Error::InvalidParameter("need at least one factor".into()));
    }
    let d = factors[0].dim();
    let n = factors.len();
    let w = ComparisonPotential::new(&spec.layout, spec.profile.delta, factors)?;

    // Restricted one-body sums over each factor skeleton.
    let scale = spec.layout.cell_scale();
    let mut factor_cells: Vec<Vec<(Vec<i64>, Vec<f64>)>> = Vec::with_capacity(n);
    for factor in factors {
        let mut cells = Vec::new();
        for j in skeleton_cells(factor, scale) {
            if let Some(y) = spec.layout.site_point(&j)? {
                cells.push((j, y));
            }
        }
        factor_cells.push(cells);
    }
    let one_body_restricted = |i: usize, block: &[f64]| -> f64 {
        factor_cells[i]
            .iter()
            .map(|(_, y)| {
                let z: Vec<f64> = block.iter().zip(y).map(|(a, b)| a - b).collect();
                spec.profile.eval(&z)
            })
            .sum()
    };

    // Tensor grid over the whole rectangle, offset off lattice faces.
    let mut axes: Vec<Vec<f64>> = Vec::new();
    for factor in factors {
        for axis in 0..d {
            let (lo, hi) = factor.interval(axis);
            let steps = ((hi - lo) * points_per_unit as f64).round() as usize;
            let h = (hi - lo) / steps.max(1) as f64;
            axes.push((0..steps).map(|k| lo + (k as f64 + 0.431) * h).collect());
        }
    }
    let nd = axes.len();
    let mut idx = vec![0usize; nd];
    let mut min_margin = f64::INFINITY;
    let mut worst = vec![0.0; nd];
    let mut count = 0usize;
    loop {
        let x: Vec<f64> = idx.iter().zip(&axes).map(|(i, ax)| ax[*i]).collect();
        let mut v = 0.0;
        for (i, block) in x.chunks_exact(d).enumerate() {
            v += one_body_restricted(i, block);
        }
        let margin = v - n as f64 * w.eval(&x);
        count += 1;
        if margin < min_margin {
            min_margin = margin;
            worst = x;
        }
        let mut axis = nd;
        let mut done = true;
        while axis > 0 {
            axis -= 1;
            if idx[axis] + 1 < axes[axis].len() {
                idx[axis] += 1;
                for a in axis + 1..nd {
                    idx[a] = 0;
                }
                done = false;
                break;
            }
        }
        if done {
            break;
        }
    }
    Ok(LowerBoundReport {
        pass: min_margin >= 0.0,
        min_margin,
        worst_point: worst,
        points_checked: count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::{sample_field, CouplingDistribution};
    use approx::assert_abs_diff_eq;

    fn unit_field(sites: &[Vec<i64>]) -> DisorderField {
        let dist = CouplingDistribution::degenerate(1.0).unwrap();
        sample_field(&dist, sites, 0, 0).unwrap()
    }

    fn zero_field(sites: &[Vec<i64>]) -> DisorderField {
        let dist = CouplingDistribution::degenerate(0.0).unwrap();
        sample_field(&dist, sites, 0, 0).unwrap()
    }

    #[test]
    fn profile_plateau_and_bounds() {
        let d = 2;
        let cube = SingleSite::cube(0.8, d).unwrap();
        assert_eq!(cube.eval(&[0.0, 0.0]), 1.0);
        assert_eq!(cube.eval(&[0.39, 0.0]), 1.0);
        assert_eq!(cube.eval(&[0.41, 0.0]), 0.0);

        let tent = SingleSite::tent(0.5, d).unwrap();
        assert_eq!(tent.eval(&[0.25, 0.0]), 1.0);
        assert!(tent.eval(&[0.3, 0.1]) < 1.0);
        assert_eq!(tent.eval(&[0.5, 0.0]), 0.0);

        // chi_{cube(ell)} <= u <= 1 on a generic grid.
        for profile in [cube, tent, SingleSite::ball(0.45, d).unwrap()] {
            for ix in -10..10 {
                for iy in -10..10 {
                    let z = [ix as f64 * 0.077 + 0.013, iy as f64 * 0.077 + 0.013];
                    let u = profile.eval(&z);
                    assert!((0.0..=1.0).contains(&u));
                    let half = 0.5 * profile.ell;
                    let in_cube = z.iter().all(|c| *c >= -half && *c < half);
                    if in_cube {
                        assert!(u >= 1.0, "u({z:?}) = {u} < 1 inside plateau cube");
                    }
                }
            }
        }
    }

    #[test]
    fn delta_must_fit_the_plateau() {
        assert!(SingleSite::new(ProfileKind::Cube, 0.8, 0.5, 1).is_err());
        assert!(SingleSite::new(ProfileKind::Cube, 0.8, 0.4, 1).is_ok());
        assert!(SingleSite::new(ProfileKind::Tent, 0.3, 0.2, 2).is_err());
        assert!(SingleSite::new(ProfileKind::Ball, 0.5, 0.3, 2).is_err());
    }

    #[test]
    fn one_body_zero_and_covering_cases() {
        let d = 1;
        let factor = Box1::centered(d, 5.0).unwrap();
        let spec = PotentialSpec::anderson(
            SingleSite::cube(1.0, d).unwrap(),
            SiteLayout::Regular,
        );
        let sites = spec.required_sites(&factor).unwrap();
        assert!(sites.len() >= 5);

        let zeros = zero_field(&sites);
        assert_eq!(spec.one_body(&zeros, &[0.3]).unwrap(), 0.0);

        // Covering condition: unit cubes tile, so the unit-coupling sum is 1
        // at every point of the box interior.
        let ones = unit_field(&sites);
        for k in 0..40 {
            let x = -2.4 + 0.123 * k as f64;
            assert_abs_diff_eq!(spec.one_body(&ones, &[x]).unwrap(), 1.0);
        }
    }

    #[test]
    fn one_body_single_site_ball() {
        let d = 2;
        let spec = PotentialSpec::anderson(
            SingleSite::ball(0.3, d).unwrap(),
            SiteLayout::Regular,
        );
        let dist = CouplingDistribution::degenerate(2.0).unwrap();
        let field = sample_field(&dist, &[vec![0, 0]], 0, 0).unwrap();
        assert_eq!(spec.one_body(&field, &[0.1, 0.05]).unwrap(), 2.0);
        assert_eq!(spec.one_body(&field, &[0.4, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn uncovered_site_is_rejected() {
        let d = 1;
        let spec = PotentialSpec::anderson(
            SingleSite::cube(1.0, d).unwrap(),
            SiteLayout::Regular,
        );
        let field = unit_field(&[vec![0]]);
        assert!(spec.one_body(&field, &[1.2]).is_err());
    }

    #[test]
    fn n_body_sums_blocks_and_is_exchange_symmetric() {
        let d = 1;
        let factor = Box1::centered(d, 5.0).unwrap();
        let spec = PotentialSpec::anderson(
            SingleSite::cube(1.0, d).unwrap(),
            SiteLayout::CrookedJitter {
                amplitude: 0.2,
                seed: 5,
            },
        );
        let sites = spec.required_sites(&factor).unwrap();
        let dist = CouplingDistribution::uniform(0.0, 1.0).unwrap();
        let field = sample_field(&dist, &sites, 3, 1).unwrap();

        let ones = unit_field(&sites);
        assert_abs_diff_eq!(spec.n_body(&ones, &[0.2, 0.3], d).unwrap(), 2.0);

        for k in 0..20 {
            let a = -1.9 + 0.19 * k as f64;
            let b = 1.3 - 0.11 * k as f64;
            let v1 = spec.n_body(&field, &[a, b], d).unwrap();
            let v2 = spec.n_body(&field, &[b, a], d).unwrap();
            assert_abs_diff_eq!(v1, v2, epsilon = 1e-14);
            // Independent summation oracle.
            let direct =
                spec.one_body(&field, &[a]).unwrap() + spec.one_body(&field, &[b]).unwrap();
            assert_abs_diff_eq!(v1, direct, epsilon = 1e-14);
        }
    }

    #[test]
    fn pair_interaction_properties() {
        let inter = Interaction::Pair {
            amplitude: 2.0,
            range: 1.5,
        };
        inter.validate().unwrap();
        assert_abs_diff_eq!(inter.energy(&[0.0, 0.0], 1), 2.0);
        assert_abs_diff_eq!(inter.energy(&[0.0, 3.0], 1), 0.0);
        // Translation invariance of the pair form.
        for k in 0..10 {
            let s = k as f64 * 0.7;
            let a = inter.energy(&[0.1, 0.9, -0.4], 1);
            let b = inter.energy(&[0.1 + s, 0.9 + s, -0.4 + s], 1);
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(inter.sup_bound(3), 2.0 * 3.0);
    }

    #[test]
    fn comparison_potential_is_ball_indicator() {
        let d = 1;
        let factors = vec![Box1::centered(d, 5.0).unwrap(); 2];
        let layout = SiteLayout::Regular;
        let w = ComparisonPotential::new(&layout, 0.4, &factors).unwrap();
        // x exactly at a product site.
        assert_eq!(w.eval(&[1.0, -2.0]), 1.0);
        // farther than delta from every product point.
        assert_eq!(w.eval(&[0.5, 0.5]), 0.0);
        // one block near, one block far.
        assert_eq!(w.eval(&[0.1, 0.5]), 0.0);
        // both blocks within delta/sqrt(2).
        assert_eq!(w.eval(&[0.2, 0.2]), 1.0);
    }

    #[test]
    fn comparison_potential_grid_mass_matches_ball_volume() {
        // Integral of W over the box equals (#sites) * vol(B(0, delta)) in
        // R^{Nd}; quadrature at fine resolution should agree to a percent.
        let d = 1;
        let n = 2;
        let delta = 0.35;
        let factors = vec![Box1::centered(d, 3.0).unwrap(); n];
        let w = ComparisonPotential::new(&SiteLayout::Regular, delta, &factors).unwrap();
        let p = 60;
        let h = 1.0 / p as f64;
        let mut mass = 0.0;
        let steps = 3 * p;
        for i in 0..steps {
            for j in 0..steps {
                let x = [-1.5 + (i as f64 + 0.5) * h, -1.5 + (j as f64 + 0.5) * h];
                mass += w.eval(&x) * h * h;
            }
        }
        let sites = 3 * 3; // product points of the two skeletons
        let ball_area = std::f64::consts::PI * delta * delta;
        let expect = sites as f64 * ball_area;
        assert!(
            (mass - expect).abs() < 0.02 * expect,
            "grid mass {mass} vs expected {expect}"
        );
    }

    #[test]
    fn lower_bound_holds_on_simple_configs() {
        let d = 1;
        let factors = vec![Box1::centered(d, 3.0).unwrap(); 2];
        let spec = PotentialSpec::anderson(
            SingleSite::cube(0.9, d).unwrap(),
            SiteLayout::CrookedJitter {
                amplitude: 0.05,
                seed: 2,
            },
        );
        let report = check_lower_bound(&spec, &factors, 7).unwrap();
        assert!(report.pass, "margin {} at {:?}", report.min_margin, report.worst_point);

        // N = 1 reduces to u >= ball indicator near each site.
        let report1 = check_lower_bound(&spec, &factors[..1], 11).unwrap();
        assert!(report1.pass);
    }

    #[test]
    fn background_bounds() {
        let bg = Background::Cosine { amplitude: -0.3 };
        assert_abs_diff_eq!(bg.min_value(2), -0.6);
        assert!(bg.eval(&[0.25, 0.4]) <= 0.0);
        assert_eq!(Background::None.eval(&[1.0]), 0.0);
    }

    #[test]
    fn delone_layout_reaches_cells() {
        use crate::disorder::{generate_delone, split_delone};
        let wb = Box1::centered(1, 12.0).unwrap();
        let gen = generate_delone(0.8, 2.0, &wb, 3, 1.0, 40, true).unwrap();
        let split = split_delone(&gen.set).unwrap();
        let layout = SiteLayout::Delone {
            cell_scale: 2.0,
            cells: split.gamma1_cells.iter().cloned().collect(),
            extra: split.gamma2.clone(),
            include_extra: true,
        };
        let spec = PotentialSpec::anderson(SingleSite::ball(0.5, 1).unwrap(), layout);
        let factor = Box1::centered(1, 8.0).unwrap();
        let sites = spec.required_sites(&factor).unwrap();
        assert!(!sites.is_empty());
        let ones = unit_field(&sites);
        // Evaluations stay finite and nonnegative across the box.
        for k in 0..50 {
            let x = -4.0 + 0.16 * k as f64;
            let v = spec.one_body(&ones, &[x]).unwrap();
            assert!(v >= 0.0);
        }
    }
}
