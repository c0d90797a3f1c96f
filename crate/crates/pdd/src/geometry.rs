//! Axis-aligned box domains, single-axis partitions, interface grids, and
//! boundary classification.
//!
//! Faces of a `D`-dimensional box are numbered `2*axis` (lower face of
//! `axis`) and `2*axis + 1` (upper face). All geometry values are immutable
//! once constructed; operations that "fill in" data build new values.

use crate::error::{PddError, Result};

/// What happens to a stochastic path when it touches a face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    /// Paths stop here and collect the Dirichlet datum.
    Absorbing,
    /// Paths are reflected back into the domain.
    Reflecting,
}

/// Axis-aligned box `[lo_1, hi_1] x ... x [lo_D, hi_D]` with a kind label on
/// each of its `2D` faces.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
    face_kinds: Vec<FaceKind>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, face_kinds: Vec<FaceKind>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(PddError::InvalidArgument(
                "BoxDomain: lo and hi must be non-empty and of equal length".into(),
            ));
        }
        if face_kinds.len() != 2 * lo.len() {
            return Err(PddError::InvalidArgument(format!(
                "BoxDomain: expected {} face kinds, got {}",
                2 * lo.len(),
                face_kinds.len()
            )));
        }
        for (a, b) in lo.iter().zip(hi.iter()) {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(PddError::InvalidArgument(format!(
                    "BoxDomain: require finite lo < hi per axis, got [{a}, {b}]"
                )));
            }
        }
        Ok(Self { lo, hi, face_kinds })
    }

    /// Box with every face absorbing.
    pub fn all_absorbing(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let n = 2 * lo.len();
        Self::new(lo, hi, vec![FaceKind::Absorbing; n])
    }

    /// One-dimensional interval with both ends absorbing.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::all_absorbing(vec![lo], vec![hi])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn face_kinds(&self) -> &[FaceKind] {
        &self.face_kinds
    }

    pub fn face_kind(&self, face: usize) -> FaceKind {
        self.face_kinds[face]
    }

    /// Axis a face is orthogonal to.
    pub fn face_axis(face: usize) -> usize {
        face / 2
    }

    /// Coordinate value of the face plane.
    pub fn face_value(&self, face: usize) -> f64 {
        let axis = Self::face_axis(face);
        if face % 2 == 0 {
            self.lo[axis]
        } else {
            self.hi[axis]
        }
    }

    pub fn has_absorbing_face(&self) -> bool {
        self.face_kinds.contains(&FaceKind::Absorbing)
    }

    /// Euclidean diameter of the box.
    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(self.hi.iter())
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    /// True when `x` lies strictly inside the box on every axis.
    pub fn contains_strictly(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(self.hi.iter()))
            .all(|(xi, (a, b))| a < xi && xi < b)
    }

    /// Distance from an interior point to the nearest face.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lo.iter().zip(self.hi.iter()))
            .map(|(xi, (a, b))| (xi - a).min(b - xi))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Result of classifying a point against a box boundary.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryEvent {
    /// Strictly interior; no face touched.
    None,
    /// On or beyond an absorbing face.
    Absorbing { face: usize, hit_point: Vec<f64> },
    /// On or beyond a reflecting face.
    Reflecting { face: usize, hit_point: Vec<f64> },
}

impl BoundaryEvent {
    pub fn is_none(&self) -> bool {
        matches!(self, BoundaryEvent::None)
    }
}

/// Classify `x` against the boundary of `domain`.
///
/// Total over all finite inputs: returns `None` iff `x` is strictly
/// interior, otherwise the violated face with the largest overshoot (ties
/// broken by lowest face id) together with the projection of `x` onto that
/// face. Classification of a returned `hit_point` reports the same face.
pub fn classify_point(domain: &BoxDomain, x: &[f64]) -> BoundaryEvent {
    assert_eq!(x.len(), domain.dim(), "classify_point: dimension mismatch");
    let mut worst_face = usize::MAX;
    let mut worst_overshoot = f64::NEG_INFINITY;
    for axis in 0..domain.dim() {
        // Overshoot is >= 0 exactly when the face constraint is violated
        // (points on a face count as violated: interior means strict).
        let lower = domain.lo[axis] - x[axis];
        let upper = x[axis] - domain.hi[axis];
        if lower >= 0.0 && lower > worst_overshoot {
            worst_overshoot = lower;
            worst_face = 2 * axis;
        }
        if upper >= 0.0 && upper > worst_overshoot {
            worst_overshoot = upper;
            worst_face = 2 * axis + 1;
        }
    }
    if worst_face == usize::MAX {
        return BoundaryEvent::None;
    }
    let axis = BoxDomain::face_axis(worst_face);
    let mut hit: Vec<f64> = x
        .iter()
        .zip(domain.lo.iter().zip(domain.hi.iter()))
        .map(|(xi, (a, b))| xi.clamp(*a, *b))
        .collect();
    hit[axis] = domain.face_value(worst_face);
    match domain.face_kind(worst_face) {
        FaceKind::Absorbing => BoundaryEvent::Absorbing {
            face: worst_face,
            hit_point: hit,
        },
        FaceKind::Reflecting => BoundaryEvent::Reflecting {
            face: worst_face,
            hit_point: hit,
        },
    }
}

/// A parent box split into `p` equal-width slabs along one axis.
#[derive(Debug, Clone)]
pub struct Partition {
    parent: BoxDomain,
    axis: usize,
    cut_points: Vec<f64>,
    subdomains: Vec<BoxDomain>,
}

impl Partition {
    pub fn parent(&self) -> &BoxDomain {
        &self.parent
    }

    pub fn axis(&self) -> usize {
        self.axis
    }

    /// Interior cut coordinates along the partition axis (`p - 1` of them).
    pub fn cut_points(&self) -> &[f64] {
        &self.cut_points
    }

    pub fn subdomains(&self) -> &[BoxDomain] {
        &self.subdomains
    }

    pub fn len(&self) -> usize {
        self.subdomains.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the subdomain owning `x` along the partition axis.
    /// Points exactly on a cut belong to the lower-index subdomain.
    pub fn owner(&self, coord: f64) -> usize {
        let mut idx = 0;
        for (k, &cut) in self.cut_points.iter().enumerate() {
            if coord > cut {
                idx = k + 1;
            }
        }
        idx
    }
}

/// Split `parent` into `p` equal-width subdomains along `axis`.
///
/// Interface faces created by the cuts are absorbing (they will carry
/// Dirichlet data); outer faces keep the parent's kinds.
pub fn partition_box(parent: &BoxDomain, axis: usize, p: usize) -> Result<Partition> {
    if p == 0 {
        return Err(PddError::InvalidArgument(
            "partition_box: subdomain count must be at least 1".into(),
        ));
    }
    if axis >= parent.dim() {
        return Err(PddError::InvalidArgument(format!(
            "partition_box: axis {axis} out of range for dim {}",
            parent.dim()
        )));
    }
    let lo = parent.lo[axis];
    let hi = parent.hi[axis];
    let width = hi - lo;
    let step = width / p as f64;
    let mut cut_points = Vec::with_capacity(p - 1);
    for i in 1..p {
        cut_points.push(lo + step * i as f64);
    }
    let mut subdomains = Vec::with_capacity(p);
    for i in 0..p {
        let left = if i == 0 { lo } else { cut_points[i - 1] };
        let right = if i == p - 1 { hi } else { cut_points[i] };
        let mut sub_lo = parent.lo.clone();
        let mut sub_hi = parent.hi.clone();
        sub_lo[axis] = left;
        sub_hi[axis] = right;
        let mut kinds = parent.face_kinds.clone();
        if i > 0 {
            kinds[2 * axis] = FaceKind::Absorbing;
        }
        if i < p - 1 {
            kinds[2 * axis + 1] = FaceKind::Absorbing;
        }
        subdomains.push(BoxDomain::new(sub_lo, sub_hi, kinds)?);
    }
    Ok(Partition {
        parent: parent.clone(),
        axis,
        cut_points,
        subdomains,
    })
}

/// Estimate attached to one interface node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceNodeValue {
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: u64,
}

/// Rectangular grid of interface nodes: every cut crossed with every level.
///
/// For time-dependent problems the level axis holds time; the stationary
/// pipeline reuses it for the coordinate running along each cut. Values are
/// optional so the grid can exist before estimation; filled grids are built
/// with [`InterfaceGrid::with_values`], never mutated in place.
#[derive(Debug, Clone)]
pub struct InterfaceGrid {
    cuts: Vec<f64>,
    levels: Vec<f64>,
    values: Vec<Option<InterfaceNodeValue>>,
}

impl InterfaceGrid {
    /// Grid over explicit cut coordinates and strictly increasing levels,
    /// with all values unset.
    pub fn from_parts(cuts: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if cuts.is_empty() || levels.is_empty() {
            return Err(PddError::InvalidArgument(
                "InterfaceGrid: cuts and levels must be non-empty".into(),
            ));
        }
        for w in levels.windows(2) {
            if !(w[0] < w[1]) {
                return Err(PddError::InvalidArgument(format!(
                    "InterfaceGrid: levels must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        let n = cuts.len() * levels.len();
        Ok(Self {
            cuts,
            levels,
            values: vec![None; n],
        })
    }

    /// Same grid with every node value supplied (row-major, cuts outer).
    pub fn with_values(&self, values: Vec<Option<InterfaceNodeValue>>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(PddError::InvalidArgument(format!(
                "InterfaceGrid::with_values: expected {} values, got {}",
                self.values.len(),
                values.len()
            )));
        }
        Ok(Self {
            cuts: self.cuts.clone(),
            levels: self.levels.clone(),
            values,
        })
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn node_count(&self) -> usize {
        self.values.len()
    }

    /// The `(cut, level)` coordinates of node `(i, j)`.
    pub fn node(&self, cut_idx: usize, level_idx: usize) -> (f64, f64) {
        (self.cuts[cut_idx], self.levels[level_idx])
    }

    pub fn value(&self, cut_idx: usize, level_idx: usize) -> Option<InterfaceNodeValue> {
        self.values[cut_idx * self.levels.len() + level_idx]
    }

    /// Indices of nodes that still have no value.
    pub fn missing_nodes(&self) -> Vec<(usize, usize)> {
        let mut missing = Vec::new();
        for i in 0..self.cuts.len() {
            for j in 0..self.levels.len() {
                if self.values[i * self.levels.len() + j].is_none() {
                    missing.push((i, j));
                }
            }
        }
        missing
    }
}

/// Build the interface grid of a partition over the given time levels.
///
/// Requires at least one cut (`p >= 2`), `levels[0] == 0`, and strictly
/// increasing levels.
pub fn build_interface_grid(partition: &Partition, time_levels: &[f64]) -> Result<InterfaceGrid> {
    if partition.cut_points().is_empty() {
        return Err(PddError::InvalidArgument(
            "build_interface_grid: partition has no interior cuts".into(),
        ));
    }
    if time_levels.first().copied() != Some(0.0) {
        return Err(PddError::InvalidArgument(
            "build_interface_grid: time levels must start at 0".into(),
        ));
    }
    for w in time_levels.windows(2) {
        if !(w[0] < w[1]) {
            return Err(PddError::InvalidArgument(format!(
                "build_interface_grid: time levels must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    InterfaceGrid::from_parts(partition.cut_points().to_vec(), time_levels.to_vec())
}
