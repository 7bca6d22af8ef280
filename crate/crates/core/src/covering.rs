//! δ-covering sets over box-shaped spaces.
//!
//! A covering set is a finite list of centroids `Φ_s` together with a
//! resolution vector `δ`. The covered region `Φ_δ` is the union of the
//! element-wise neighborhoods `{s : |c_i - s_i| <= δ_i}`.
//!
//! Grid layout: continuous axes place centroids at `lower + δ(2j + 1)`,
//! integer axes at `lower + ⌊δ⌋ + j(2⌊δ⌋ + 1)`, with the last centroid
//! clamped to `upper`. Lookup uses per-axis cell arithmetic for centroids
//! on that lattice and a linear scan for any others.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::engine::{DimKind, SpaceBox, StateKey, StateVector};
use crate::error::{Error, Result};

/// Absolute slack on neighborhood bounds, scaled by `max(1, δ_i)`.
const BOUNDARY_TOL: f64 = 1e-9;

/// Per-dimension half-widths of a neighborhood.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeltaVector(Vec<f64>);

impl DeltaVector {
    pub fn new(values: impl Into<Vec<f64>>) -> Result<Self> {
        let values = values.into();
        if values.is_empty() {
            return Err(Error::InvalidDelta("empty resolution vector".into()));
        }
        if let Some(bad) = values.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::InvalidDelta(format!("entry {bad} is not a positive finite number")));
        }
        Ok(DeltaVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Every entry halved.
    pub fn halved(&self) -> DeltaVector {
        DeltaVector(self.0.iter().map(|d| d / 2.0).collect())
    }
}

/// Element-wise inclusive neighborhood test `|c_i - s_i| <= δ_i`.
pub fn neighborhood_contains(centroid: &StateVector, delta: &DeltaVector, s: &StateVector) -> Result<bool> {
    let n = delta.dim();
    for len in [centroid.dim(), s.dim()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, actual: len });
        }
    }
    Ok(within(centroid.coords(), delta.as_slice(), s.coords()))
}

fn within(c: &[f64], delta: &[f64], s: &[f64]) -> bool {
    c.iter()
        .zip(s)
        .zip(delta)
        .all(|((c, s), d)| (c - s).abs() <= d + BOUNDARY_TOL * d.max(1.0))
}

/// One axis of the centroid lattice.
#[derive(Clone, Debug, PartialEq)]
struct Axis {
    first: f64,
    spacing: f64,
    count: usize,
    upper: f64,
}

impl Axis {
    fn new(lower: f64, upper: f64, kind: DimKind, delta: f64) -> Axis {
        let range = upper - lower;
        match kind {
            DimKind::Continuous => {
                let spacing = 2.0 * delta;
                let count = ((range / spacing) - 1e-9).ceil().max(1.0) as usize;
                Axis {
                    first: lower + delta,
                    spacing,
                    count,
                    upper,
                }
            }
            DimKind::Integer => {
                let half = delta.floor();
                let spacing = 2.0 * half + 1.0;
                let points = range + 1.0;
                let count = ((points / spacing) - 1e-9).ceil().max(1.0) as usize;
                Axis {
                    first: lower + half,
                    spacing,
                    count,
                    upper,
                }
            }
        }
    }

    fn position(&self, j: usize) -> f64 {
        (self.first + self.spacing * j as f64).min(self.upper)
    }

    /// Lattice index of an exact lattice coordinate.
    fn index_of(&self, x: f64) -> Option<usize> {
        let j = ((x - self.first) / self.spacing).round();
        if j < 0.0 || j >= self.count as f64 {
            return None;
        }
        let j = j as usize;
        ((self.position(j) - x).abs() <= 1e-9 * self.spacing.max(1.0)).then_some(j)
    }

    /// Lattice indices whose neighborhood may contain `x`, ascending.
    fn candidates(&self, x: f64, delta: f64) -> Vec<usize> {
        let centre = ((x - self.first) / self.spacing).round() as i64;
        (centre - 1..=centre + 1)
            .filter(|&j| j >= 0 && (j as usize) < self.count)
            .map(|j| j as usize)
            .filter(|&j| (self.position(j) - x).abs() <= delta + BOUNDARY_TOL * delta.max(1.0))
            .collect()
    }
}

/// A finite δ-covering: centroids, resolution and the covered space.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "CoverData", try_from = "CoverData")]
pub struct CoveringSet {
    space: SpaceBox,
    delta: DeltaVector,
    centroids: Vec<StateVector>,
    axes: Vec<Axis>,
    lattice: HashMap<Vec<usize>, usize>,
    off_lattice: Vec<usize>,
    keys: HashMap<StateKey, usize>,
}

#[derive(Serialize, Deserialize)]
struct CoverData {
    space: SpaceBox,
    delta: DeltaVector,
    centroids: Vec<StateVector>,
}

impl From<CoveringSet> for CoverData {
    fn from(c: CoveringSet) -> Self {
        CoverData {
            space: c.space,
            delta: c.delta,
            centroids: c.centroids,
        }
    }
}

impl TryFrom<CoverData> for CoveringSet {
    type Error = Error;

    fn try_from(d: CoverData) -> Result<Self> {
        CoveringSet::from_centroids(d.space, d.delta, d.centroids)
    }
}

impl PartialEq for CoveringSet {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.delta == other.delta && self.centroids == other.centroids
    }
}

/// Regular grid covering of `space` at resolution `delta`.
pub fn build_covering(space: &SpaceBox, delta: &DeltaVector) -> Result<CoveringSet> {
    check_delta(space, delta)?;
    let axes = make_axes(space, delta);
    let total: usize = axes.iter().map(|a| a.count).product();
    let mut centroids = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    for _ in 0..total {
        centroids.push(StateVector(
            idx.iter().zip(&axes).map(|(&j, a)| a.position(j)).collect(),
        ));
        for d in (0..axes.len()).rev() {
            idx[d] += 1;
            if idx[d] < axes[d].count {
                break;
            }
            idx[d] = 0;
        }
    }
    CoveringSet::from_centroids(space.clone(), delta.clone(), centroids)
}

fn check_delta(space: &SpaceBox, delta: &DeltaVector) -> Result<()> {
    space.validate()?;
    if delta.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            actual: delta.dim(),
        });
    }
    Ok(())
}

fn make_axes(space: &SpaceBox, delta: &DeltaVector) -> Vec<Axis> {
    space
        .dims
        .iter()
        .zip(delta.as_slice())
        .map(|(d, &w)| Axis::new(d.lower, d.upper, d.kind, w))
        .collect()
}

impl CoveringSet {
    /// A covering with the given centroids, which must lie in `space`.
    /// Centroid order is preserved and defines tie-breaking.
    pub fn from_centroids(space: SpaceBox, delta: DeltaVector, centroids: Vec<StateVector>) -> Result<Self> {
        check_delta(&space, &delta)?;
        let axes = make_axes(&space, &delta);
        let mut cover = CoveringSet {
            space,
            delta,
            centroids: Vec::with_capacity(centroids.len()),
            axes,
            lattice: HashMap::new(),
            off_lattice: Vec::new(),
            keys: HashMap::new(),
        };
        for c in centroids {
            cover.push(c)?;
        }
        Ok(cover)
    }

    /// An empty covering over `space`.
    pub fn empty(space: SpaceBox, delta: DeltaVector) -> Result<Self> {
        CoveringSet::from_centroids(space, delta, Vec::new())
    }

    /// Append a centroid. Returns its index; an already present centroid is
    /// not duplicated.
    pub fn push(&mut self, c: StateVector) -> Result<usize> {
        self.space.check_dim(&c.0)?;
        if !self.space.contains(&c.0) {
            return Err(Error::InvalidArgument(format!("centroid {:?} lies outside the covered space", c.0)));
        }
        let key = c.key();
        if let Some(&i) = self.keys.get(&key) {
            return Ok(i);
        }
        let i = self.centroids.len();
        let cell: Option<Vec<usize>> = self.axes.iter().zip(&c.0).map(|(a, &x)| a.index_of(x)).collect();
        match cell {
            Some(cell) if !self.lattice.contains_key(&cell) => {
                self.lattice.insert(cell, i);
            }
            _ => self.off_lattice.push(i),
        }
        self.keys.insert(key, i);
        self.centroids.push(c);
        Ok(i)
    }

    pub fn space(&self) -> &SpaceBox {
        &self.space
    }

    pub fn delta(&self) -> &DeltaVector {
        &self.delta
    }

    pub fn centroids(&self) -> &[StateVector] {
        &self.centroids
    }

    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    /// Index of `c` if it is one of the centroids.
    pub fn index_of(&self, c: &StateVector) -> Option<usize> {
        self.keys.get(&c.key()).copied()
    }

    pub fn has_centroid(&self, c: &StateVector) -> bool {
        self.keys.contains_key(&c.key())
    }

    /// Same space and resolution, so centroid-level set arithmetic applies.
    pub fn compatible(&self, other: &CoveringSet) -> bool {
        self.space == other.space && self.delta == other.delta
    }

    /// Lowest index of a centroid whose neighborhood contains `s`.
    pub fn membership(&self, s: &StateVector) -> Option<usize> {
        self.membership_where(s, |_| true)
    }

    /// Like [`CoveringSet::membership`], restricted to centroids accepted by
    /// `active`.
    pub fn membership_where(&self, s: &StateVector, active: impl Fn(usize) -> bool) -> Option<usize> {
        if s.dim() != self.space.dim() {
            return None;
        }
        let delta = self.delta.as_slice();
        let mut best: Option<usize> = None;
        let per_axis: Vec<Vec<usize>> = self
            .axes
            .iter()
            .zip(&s.0)
            .zip(delta)
            .map(|((a, &x), &d)| a.candidates(x, d))
            .collect();
        if per_axis.iter().all(|c| !c.is_empty()) {
            let mut pick = vec![0usize; per_axis.len()];
            let mut cell = vec![0usize; per_axis.len()];
            'outer: loop {
                for (d, &p) in pick.iter().enumerate() {
                    cell[d] = per_axis[d][p];
                }
                if let Some(&i) = self.lattice.get(&cell).filter(|&&i| active(i)) {
                    best = Some(best.map_or(i, |b| b.min(i)));
                }
                for d in (0..pick.len()).rev() {
                    pick[d] += 1;
                    if pick[d] < per_axis[d].len() {
                        continue 'outer;
                    }
                    pick[d] = 0;
                }
                break;
            }
        }
        for &i in &self.off_lattice {
            if best.is_some_and(|b| b < i) {
                break;
            }
            if active(i) && within(&self.centroids[i].0, delta, &s.0) {
                best = Some(i);
                break;
            }
        }
        best
    }

    /// `s ∈ Φ_δ`.
    pub fn covers(&self, s: &StateVector) -> bool {
        self.membership(s).is_some()
    }

    /// Sub-cover keeping the centroids selected by `keep`, order preserved.
    pub fn retain(&self, mut keep: impl FnMut(usize, &StateVector) -> bool) -> CoveringSet {
        let kept = self
            .centroids
            .iter()
            .enumerate()
            .filter(|(i, c)| keep(*i, c))
            .map(|(_, c)| c.clone())
            .collect();
        CoveringSet::from_centroids(self.space.clone(), self.delta.clone(), kept)
            .expect("centroids of a valid cover remain valid")
    }

    /// Centroids of `self` that are also centroids of `other`.
    pub fn intersection_count(&self, other: &CoveringSet) -> usize {
        self.centroids.iter().filter(|c| other.has_centroid(c)).count()
    }

    /// `self ⊆ other` at centroid level.
    pub fn is_subset_of(&self, other: &CoveringSet) -> bool {
        self.centroids.iter().all(|c| other.has_centroid(c))
    }

    /// Number of grid cells along each axis.
    pub fn grid_shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.count).collect()
    }
}
