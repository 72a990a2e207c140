//! Open regions, target sets and shrinking neighborhood schedules.

use crate::error::{DclError, Result};
use crate::mesh::Mesh;
use serde::Serialize;

/// How an interval endpoint is interpreted.
///
/// `Boundary` endpoints belong to the topological boundary of the region and
/// receive Dirichlet treatment; `Truncated` endpoints only exist because an
/// unbounded or larger domain was cut off at the mesh edge and stay free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EndKind {
    Boundary,
    Truncated,
}

#[derive(Debug, Clone, Serialize)]
pub struct OmegaInterval {
    pub lo: f64,
    pub hi: f64,
    pub lo_kind: EndKind,
    pub hi_kind: EndKind,
}

impl OmegaInterval {
    pub fn new(lo: f64, hi: f64) -> Self {
        OmegaInterval {
            lo,
            hi,
            lo_kind: EndKind::Boundary,
            hi_kind: EndKind::Boundary,
        }
    }

    pub fn truncated_right(lo: f64, hi: f64) -> Self {
        OmegaInterval {
            lo,
            hi,
            lo_kind: EndKind::Boundary,
            hi_kind: EndKind::Truncated,
        }
    }

    pub fn truncated_left(lo: f64, hi: f64) -> Self {
        OmegaInterval {
            lo,
            hi,
            lo_kind: EndKind::Truncated,
            hi_kind: EndKind::Boundary,
        }
    }

    pub fn truncated_both(lo: f64, hi: f64) -> Self {
        OmegaInterval {
            lo,
            hi,
            lo_kind: EndKind::Truncated,
            hi_kind: EndKind::Truncated,
        }
    }
}

/// The open set Omega: the whole space or a finite union of open intervals.
#[derive(Debug, Clone, Serialize)]
pub enum Omega {
    Whole,
    Intervals(Vec<OmegaInterval>),
}

impl Omega {
    /// Membership as seen by the mesh: strict at Boundary endpoints (those
    /// nodes get pinned), closed at Truncated endpoints (the domain really
    /// continues past the cut, so the edge node stays free).
    pub fn contains(&self, x: f64) -> bool {
        match self {
            Omega::Whole => true,
            Omega::Intervals(ivs) => ivs.iter().any(|iv| {
                let lo_ok = x > iv.lo || (iv.lo_kind == EndKind::Truncated && x >= iv.lo);
                let hi_ok = x < iv.hi || (iv.hi_kind == EndKind::Truncated && x <= iv.hi);
                lo_ok && hi_ok
            }),
        }
    }

    pub fn closure_contains(&self, x: f64) -> bool {
        match self {
            Omega::Whole => true,
            Omega::Intervals(ivs) => ivs.iter().any(|iv| x >= iv.lo && x <= iv.hi),
        }
    }

    /// Genuine boundary points (Truncated endpoints excluded).
    pub fn boundary_points(&self) -> Vec<f64> {
        match self {
            Omega::Whole => Vec::new(),
            Omega::Intervals(ivs) => {
                let mut pts = Vec::new();
                for iv in ivs {
                    if iv.lo_kind == EndKind::Boundary {
                        pts.push(iv.lo);
                    }
                    if iv.hi_kind == EndKind::Boundary {
                        pts.push(iv.hi);
                    }
                }
                pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                pts.dedup();
                pts
            }
        }
    }

    /// Fraction of [a, b] covered by Omega.
    pub fn fraction_inside(&self, a: f64, b: f64) -> f64 {
        match self {
            Omega::Whole => 1.0,
            Omega::Intervals(ivs) => {
                let len = b - a;
                let mut covered = 0.0;
                for iv in ivs {
                    let lo = iv.lo.max(a);
                    let hi = iv.hi.min(b);
                    if hi > lo {
                        covered += hi - lo;
                    }
                }
                (covered / len).min(1.0)
            }
        }
    }
}

/// Target set: finite union of points and closed intervals.
#[derive(Debug, Clone, Serialize, Default)]
pub struct TargetSet {
    pub points: Vec<f64>,
    pub intervals: Vec<(f64, f64)>,
}

impl TargetSet {
    pub fn point(x: f64) -> Self {
        TargetSet {
            points: vec![x],
            intervals: Vec::new(),
        }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        TargetSet {
            points: Vec::new(),
            intervals: vec![(lo, hi)],
        }
    }

    pub fn from_points(points: Vec<f64>) -> Self {
        TargetSet {
            points,
            intervals: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.intervals.is_empty()
    }

    /// Is x within distance eps of the set?
    pub fn within(&self, x: f64, eps: f64) -> bool {
        self.points.iter().any(|&p| (x - p).abs() < eps)
            || self
                .intervals
                .iter()
                .any(|&(lo, hi)| x > lo - eps && x < hi + eps)
    }

    /// Lebesgue measure (points are null).
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(lo, hi)| hi - lo).sum()
    }
}

/// Omega, a target set A inside closure(Omega), and the shrinking radii
/// defining the open neighborhoods V_k of A.
#[derive(Debug, Clone, Serialize)]
pub struct RegionSpec {
    pub omega: Omega,
    pub target: TargetSet,
    /// Decreasing radii eps_1 > eps_2 > ... > 0.
    pub schedule: Vec<f64>,
}

impl RegionSpec {
    pub fn new(omega: Omega, target: TargetSet, schedule: Vec<f64>) -> Result<Self> {
        for w in schedule.windows(2) {
            if w[1] >= w[0] {
                return Err(DclError::InvalidRegion(
                    "neighborhood schedule must be strictly decreasing".into(),
                ));
            }
        }
        if let Some(&last) = schedule.last() {
            if last <= 0.0 {
                return Err(DclError::InvalidRegion(
                    "neighborhood radii must be positive".into(),
                ));
            }
        }
        for &p in &target.points {
            if !omega.closure_contains(p) {
                return Err(DclError::InvalidRegion(format!(
                    "target point {p} lies outside closure(omega)"
                )));
            }
        }
        for &(lo, hi) in &target.intervals {
            if hi < lo || !omega.closure_contains(lo) || !omega.closure_contains(hi) {
                return Err(DclError::InvalidRegion(format!(
                    "target interval [{lo}, {hi}] not inside closure(omega)"
                )));
            }
        }
        Ok(RegionSpec {
            omega,
            target,
            schedule,
        })
    }

    /// Default schedule: eps_k = eps0 / 2^k for 6 steps, eps0 = 16 elements
    /// wide. Powers of two keep the constraint-node counts identical across
    /// uniform refinement levels, so level sequences extrapolate cleanly.
    pub fn with_default_schedule(omega: Omega, target: TargetSet, mesh: &Mesh) -> Result<Self> {
        let eps0 = 16.0 * mesh.max_element_length();
        let schedule = (0..6).map(|k| eps0 / 2.0_f64.powi(k)).collect();
        Self::new(omega, target, schedule)
    }

    /// Region over the same omega whose target is the boundary of omega.
    pub fn boundary_region(&self, mesh: &Mesh) -> Result<RegionSpec> {
        let target = TargetSet::from_points(self.omega.boundary_points());
        RegionSpec::with_default_schedule(self.omega.clone(), target, mesh)
    }

    /// Mesh nodes strictly interior to omega (degrees of freedom surviving
    /// the Dirichlet restriction). For `Omega::Whole` every node survives.
    pub fn interior_nodes(&self, mesh: &Mesh) -> Vec<usize> {
        match &self.omega {
            Omega::Whole => (0..mesh.n_nodes()).collect(),
            Omega::Intervals(_) => mesh
                .nodes()
                .iter()
                .enumerate()
                .filter(|(_, &x)| self.omega.contains(x))
                .map(|(i, _)| i)
                .collect(),
        }
    }

    /// Mesh nodes in V_eps(A) intersected with omega (constraint nodes of the
    /// obstacle problem at radius eps).
    pub fn constraint_nodes(&self, mesh: &Mesh, eps: f64) -> Vec<usize> {
        mesh.nodes()
            .iter()
            .enumerate()
            .filter(|(_, &x)| self.target.within(x, eps) && self.omega.contains(x))
            .map(|(i, _)| i)
            .collect()
    }

    /// Nodes outside omega (complement within the mesh, boundary included).
    pub fn complement_nodes(&self, mesh: &Mesh) -> Vec<usize> {
        mesh.nodes()
            .iter()
            .enumerate()
            .filter(|(_, &x)| !self.omega.contains(x))
            .map(|(i, _)| i)
            .collect()
    }
}
