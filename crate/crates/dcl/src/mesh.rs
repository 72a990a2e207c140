//! 1-D meshes: partitions of an interval into elements.

use crate::error::{DclError, Result};
use serde::Serialize;

/// Partition of a closed interval into elements with strictly increasing nodes.
#[derive(Debug, Clone, Serialize)]
pub struct Mesh {
    nodes: Vec<f64>,
}

/// Node placement strategy for [`build_mesh`].
#[derive(Debug, Clone)]
pub enum Grading {
    Uniform,
    /// Cluster nodes toward the listed points; consecutive element lengths
    /// grow by `ratio` moving away from each point.
    GeometricToward { points: Vec<f64>, ratio: f64 },
}

impl Mesh {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.nodes[0], *self.nodes.last().unwrap())
    }

    pub fn element_length(&self, e: usize) -> f64 {
        self.nodes[e + 1] - self.nodes[e]
    }

    pub fn element_midpoint(&self, e: usize) -> f64 {
        0.5 * (self.nodes[e] + self.nodes[e + 1])
    }

    pub fn max_element_length(&self) -> f64 {
        (0..self.n_elements())
            .map(|e| self.element_length(e))
            .fold(0.0, f64::max)
    }

    /// Lumped nodal masses (element length split between endpoints).
    pub fn lumped_masses(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_nodes()];
        for e in 0..self.n_elements() {
            let h = self.element_length(e);
            m[e] += 0.5 * h;
            m[e + 1] += 0.5 * h;
        }
        m
    }

    /// Index of the node closest to `x`.
    pub fn nearest_node(&self, x: f64) -> usize {
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (i, &xn) in self.nodes.iter().enumerate() {
            let d = (xn - x).abs();
            if d < dist {
                dist = d;
                best = i;
            }
        }
        best
    }

    /// Sample a function at the nodes.
    pub fn interpolate(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }

    fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(DclError::InvalidMesh("need at least 2 elements".into()));
        }
        for w in nodes.windows(2) {
            if w[1] <= w[0] {
                return Err(DclError::InvalidMesh(
                    "nodes must be strictly increasing".into(),
                ));
            }
        }
        Ok(Mesh { nodes })
    }
}

/// Partition `interval` into `n_elements` elements.
pub fn build_mesh(interval: (f64, f64), n_elements: usize, grading: Grading) -> Result<Mesh> {
    let (lo, hi) = interval;
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(DclError::InvalidMesh(format!(
            "degenerate interval [{lo}, {hi}]"
        )));
    }
    if n_elements < 2 {
        return Err(DclError::InvalidMesh(format!(
            "n_elements = {n_elements} < 2"
        )));
    }
    match grading {
        Grading::Uniform => {
            let mut nodes = Vec::with_capacity(n_elements + 1);
            for i in 0..=n_elements {
                // arithmetic partition, exact at endpoints
                let t = i as f64 / n_elements as f64;
                nodes.push(lo + t * (hi - lo));
            }
            nodes[n_elements] = hi;
            Mesh::from_nodes(nodes)
        }
        Grading::GeometricToward { points, ratio } => {
            if !(ratio > 1.0) {
                return Err(DclError::InvalidMesh(format!(
                    "geometric grading ratio must exceed 1, got {ratio}"
                )));
            }
            if points.is_empty() {
                return Err(DclError::InvalidMesh("no grading points given".into()));
            }
            let mut anchors: Vec<f64> = points
                .iter()
                .copied()
                .filter(|&p| p >= lo && p <= hi)
                .collect();
            if anchors.is_empty() {
                return Err(DclError::InvalidMesh(
                    "no grading point inside the interval".into(),
                ));
            }
            anchors.sort_by(|a, b| a.partial_cmp(b).unwrap());
            anchors.dedup();
            // Segments between {lo, anchors, hi}; each segment is graded away
            // from whichever end is an anchor.
            let mut cuts = vec![lo];
            for &a in &anchors {
                if a > lo && a < hi {
                    cuts.push(a);
                }
            }
            cuts.push(hi);
            let total: f64 = hi - lo;
            let n_seg = cuts.len() - 1;
            // distribute elements proportionally to segment length, >= 1 each
            let mut counts = vec![1usize; n_seg];
            let mut assigned = n_seg;
            while assigned < n_elements {
                // give the next element to the segment with largest length/count
                let (best, _) = counts
                    .iter()
                    .enumerate()
                    .map(|(s, &c)| (s, (cuts[s + 1] - cuts[s]) / total / c as f64))
                    .fold((0, f64::NEG_INFINITY), |acc, (s, w)| {
                        if w > acc.1 {
                            (s, w)
                        } else {
                            acc
                        }
                    });
                counts[best] += 1;
                assigned += 1;
            }
            let mut nodes = vec![lo];
            for s in 0..n_seg {
                let (a, b) = (cuts[s], cuts[s + 1]);
                let m = counts[s];
                let toward_left = anchors.contains(&a);
                let toward_right = anchors.contains(&b) && !toward_left;
                let seg = geometric_partition(a, b, m, ratio, toward_right);
                nodes.extend_from_slice(&seg[1..]);
            }
            Mesh::from_nodes(nodes)
        }
    }
}

/// Geometric partition of [a, b] into m elements; smallest element sits at
/// the left end unless `reverse` (then at the right end). Lengths follow
/// h0 * ratio^k with h0 = (b-a)(ratio-1)/(ratio^m - 1).
fn geometric_partition(a: f64, b: f64, m: usize, ratio: f64, reverse: bool) -> Vec<f64> {
    let len = b - a;
    let h0 = len * (ratio - 1.0) / (ratio.powi(m as i32) - 1.0);
    let mut nodes = vec![a];
    let mut x = a;
    for k in 0..m {
        let e = if reverse { m - 1 - k } else { k };
        x += h0 * ratio.powi(e as i32);
        nodes.push(x);
    }
    nodes[m] = b;
    nodes
}
