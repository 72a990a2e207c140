//! Assembly of Dirichlet forms over piecewise-linear finite elements:
//! free (full-space) forms, Dirichlet restrictions to a region, truncated
//! forms E_chi, and the Neumann form obtained as a supremum over cutoffs.

use crate::coeff::CoefficientField;
use crate::error::{DclError, Result};
use crate::linalg::SymTriDiag;
use crate::mesh::Mesh;
use crate::region::{EndKind, Omega, RegionSpec};

/// Mass matrix over the active node set.
#[derive(Debug, Clone)]
pub enum MassMatrix {
    /// Diagonal lumped masses.
    Lumped(Vec<f64>),
    /// Consistent P1 mass matrix.
    Consistent(SymTriDiag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassKind {
    Lumped,
    Consistent,
}

impl MassMatrix {
    pub fn len(&self) -> usize {
        match self {
            MassMatrix::Lumped(m) => m.len(),
            MassMatrix::Consistent(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        match self {
            MassMatrix::Lumped(m) => m.iter().zip(x).map(|(m, x)| m * x).collect(),
            MassMatrix::Consistent(t) => t.matvec(x),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            MassMatrix::Lumped(m) => m.iter().zip(b).map(|(m, b)| b / m).collect(),
            MassMatrix::Consistent(t) => t.solve(b),
        }
    }

    pub fn as_tridiag(&self) -> SymTriDiag {
        match self {
            MassMatrix::Lumped(m) => SymTriDiag {
                diag: m.clone(),
                off: vec![0.0; m.len().saturating_sub(1)],
            },
            MassMatrix::Consistent(t) => t.clone(),
        }
    }

    /// <x, y>_M
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            MassMatrix::Lumped(m) => m.iter().zip(x).zip(y).map(|((m, x), y)| m * x * y).sum(),
            MassMatrix::Consistent(t) => t.quad(x, y),
        }
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        self.inner(x, x).max(0.0).sqrt()
    }

    /// Total mass of a nodal function: <x, 1>_M.
    pub fn total_mass(&self, x: &[f64]) -> f64 {
        let ones = vec![1.0; self.len()];
        self.inner(x, &ones)
    }
}

/// Nodal cutoff with values in [0, 1].
#[derive(Debug, Clone)]
pub struct Cutoff {
    values: Vec<f64>,
}

impl Cutoff {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(DclError::InvalidCoefficient(format!(
                "cutoff value {v} at node {i} outside [0, 1]"
            )));
        }
        Ok(Cutoff { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A Dirichlet form and its L2 space: stiffness and mass matrices over a
/// (possibly restricted) set of mesh nodes, plus the per-element weights
/// that built the stiffness.
#[derive(Debug, Clone)]
pub struct Form {
    mesh: Mesh,
    /// Effective coefficient per mesh element (already includes any cutoff
    /// or restriction weighting).
    weights: Vec<f64>,
    /// Full-mesh indices of the nodes carrying degrees of freedom, ascending.
    active: Vec<usize>,
    stiffness: SymTriDiag,
    mass: MassMatrix,
    mass_kind: MassKind,
}

impl Form {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn active_nodes(&self) -> &[usize] {
        &self.active
    }

    pub fn n_active(&self) -> usize {
        self.active.len()
    }

    pub fn stiffness(&self) -> &SymTriDiag {
        &self.stiffness
    }

    pub fn mass(&self) -> &MassMatrix {
        &self.mass
    }

    pub fn mass_kind(&self) -> MassKind {
        self.mass_kind
    }

    /// E(phi, phi) for a nodal vector over the active nodes.
    pub fn energy(&self, phi: &[f64]) -> f64 {
        self.stiffness.energy(phi)
    }

    /// Active-node coordinates.
    pub fn active_coords(&self) -> Vec<f64> {
        self.active.iter().map(|&i| self.mesh.nodes()[i]).collect()
    }

    /// Sample a function at the active nodes.
    pub fn interpolate(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.active.iter().map(|&i| f(self.mesh.nodes()[i])).collect()
    }

    /// Extend an active-node vector by zero to the full mesh frame.
    pub fn extend_by_zero(&self, phi: &[f64]) -> Vec<f64> {
        assert_eq!(phi.len(), self.active.len());
        let mut full = vec![0.0; self.mesh.n_nodes()];
        for (p, &i) in self.active.iter().enumerate() {
            full[i] = phi[p];
        }
        full
    }

    /// Restrict a full-mesh vector to the active nodes.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        assert_eq!(full.len(), self.mesh.n_nodes());
        self.active.iter().map(|&i| full[i]).collect()
    }

    /// Stiffness entries in coordinate format over full-mesh node indices.
    pub fn coordinate_entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        let k = &self.stiffness;
        for p in 0..k.len() {
            if k.diag[p] != 0.0 {
                out.push((self.active[p], self.active[p], k.diag[p]));
            }
            if p + 1 < k.len() && k.off[p] != 0.0 {
                out.push((self.active[p], self.active[p + 1], k.off[p]));
                out.push((self.active[p + 1], self.active[p], k.off[p]));
            }
        }
        out
    }

    /// Dirichlet restriction: keep only the nodes strictly interior to the
    /// region's omega. Rows and columns of the excluded nodes are dropped;
    /// diagonal contributions from elements reaching out of omega remain,
    /// which is exactly the energy of extension by zero.
    pub fn restrict_dirichlet(&self, region: &RegionSpec) -> Result<Form> {
        let active = region.interior_nodes(&self.mesh);
        if active.len() < 1 {
            return Err(DclError::MeshTooCoarse(
                "no mesh node interior to omega".into(),
            ));
        }
        Ok(self.with_active(active))
    }

    fn with_active(&self, active: Vec<usize>) -> Form {
        let stiffness = reduce_stiffness(&self.mesh, &self.weights, &active);
        let mass = reduce_mass(&self.mesh, &active, self.mass_kind);
        Form {
            mesh: self.mesh.clone(),
            weights: self.weights.clone(),
            active,
            stiffness,
            mass,
            mass_kind: self.mass_kind,
        }
    }

    /// Truncated energy E_chi(phi) = E(chi phi, phi) - (1/2) E(chi, phi^2),
    /// evaluated elementwise. chi and phi live on the active nodes; inactive
    /// nodes count as zero for both.
    pub fn truncated_energy(&self, chi: &Cutoff, phi: &[f64]) -> f64 {
        assert_eq!(chi.len(), self.active.len());
        assert_eq!(phi.len(), self.active.len());
        let pos = self.active_positions();
        let mut s = 0.0;
        for e in 0..self.mesh.n_elements() {
            let w = self.weights[e];
            if w == 0.0 {
                continue;
            }
            let h = self.mesh.element_length(e);
            let (ci, fi) = pos[e].map_or((0.0, 0.0), |p| (chi.values()[p], phi[p]));
            let (cj, fj) = pos[e + 1].map_or((0.0, 0.0), |p| (chi.values()[p], phi[p]));
            s += (w / h) * 0.5 * (ci + cj) * (fi - fj) * (fi - fj);
        }
        s
    }

    /// Stiffness matrix of the truncated form E_chi over the active nodes.
    pub fn truncated_stiffness(&self, chi: &Cutoff) -> SymTriDiag {
        assert_eq!(chi.len(), self.active.len());
        let pos = self.active_positions();
        let weights: Vec<f64> = (0..self.mesh.n_elements())
            .map(|e| {
                let ci = pos[e].map_or(0.0, |p| chi.values()[p]);
                let cj = pos[e + 1].map_or(0.0, |p| chi.values()[p]);
                self.weights[e] * 0.5 * (ci + cj)
            })
            .collect();
        reduce_stiffness(&self.mesh, &weights, &self.active)
    }

    /// Form with the same node set but element weights multiplied by `w`.
    pub fn reweighted(&self, w: &[f64]) -> Result<Form> {
        if w.len() != self.weights.len() {
            return Err(DclError::DimensionMismatch {
                expected: self.weights.len(),
                got: w.len(),
            });
        }
        let weights: Vec<f64> = self.weights.iter().zip(w).map(|(a, b)| a * b).collect();
        let stiffness = reduce_stiffness(&self.mesh, &weights, &self.active);
        Ok(Form {
            mesh: self.mesh.clone(),
            weights,
            active: self.active.clone(),
            stiffness,
            mass: self.mass.clone(),
            mass_kind: self.mass_kind,
        })
    }

    fn active_positions(&self) -> Vec<Option<usize>> {
        let mut pos = vec![None; self.mesh.n_nodes()];
        for (p, &i) in self.active.iter().enumerate() {
            pos[i] = Some(p);
        }
        pos
    }
}

/// Assemble the free form over the full mesh: E(phi) = sum_e (c_e/h_e)
/// (phi_i - phi_{i+1})^2. Constants lie in the kernel exactly: K 1 = 0.
pub fn assemble_elliptic(mesh: &Mesh, coeff: &CoefficientField, mass_kind: MassKind) -> Result<Form> {
    if coeff.n_elements() != mesh.n_elements() {
        return Err(DclError::DimensionMismatch {
            expected: mesh.n_elements(),
            got: coeff.n_elements(),
        });
    }
    let weights = coeff.values().to_vec();
    let active: Vec<usize> = (0..mesh.n_nodes()).collect();
    let stiffness = reduce_stiffness(mesh, &weights, &active);
    let mass = reduce_mass(mesh, &active, mass_kind);
    Ok(Form {
        mesh: mesh.clone(),
        weights,
        active,
        stiffness,
        mass,
        mass_kind,
    })
}

/// Convergence record of the cutoff supremum in [`neumann_form`].
#[derive(Debug, Clone)]
pub struct NeumannReport {
    pub steps: usize,
    pub converged: bool,
    pub final_distance: f64,
}

/// The Neumann form on omega: supremum of the truncated forms E_chi over
/// cutoffs chi supported in omega. The cutoffs plateau at 1 inside omega and
/// ramp to 0 over a margin delta at genuine boundary points; the margin is
/// halved until successive stiffness matrices agree to `tol` in Frobenius
/// norm, and the entrywise-monotone limit is returned in closed form: each
/// element keeps the fraction of its length inside omega.
pub fn neumann_form(form: &Form, region: &RegionSpec) -> Result<(Form, NeumannReport)> {
    let mesh = form.mesh();
    let tol = 1e-10;
    let max_steps = 60;
    let mut delta = 10.0 * mesh.max_element_length();
    let mut prev: Option<(SymTriDiag, Vec<f64>)> = None;
    let mut steps = 0;
    let mut distance = f64::INFINITY;
    let mut converged = false;
    while steps < max_steps {
        steps += 1;
        let w: Vec<f64> = (0..mesh.n_elements())
            .map(|e| cutoff_element_average(mesh, &region.omega, e, delta))
            .collect();
        if let Some((_, ref pw)) = prev {
            if let Some(i) = w.iter().zip(pw).position(|(a, b)| *a < b - 1e-13) {
                return Err(DclError::NonMonotoneSchedule(i));
            }
        }
        let k = form.reweighted(&w)?.stiffness().clone();
        if let Some((ref pk, _)) = prev {
            distance = k.frobenius_distance(pk);
            if distance < tol {
                converged = true;
                break;
            }
        }
        prev = Some((k, w));
        delta *= 0.5;
    }
    let report = NeumannReport {
        steps,
        converged,
        final_distance: distance,
    };
    if !converged {
        return Err(DclError::NoConvergence(format!(
            "cutoff supremum not Cauchy after {steps} steps (last distance {distance:.3e})"
        )));
    }
    // entrywise-monotone limit: weight = fraction of the element inside omega
    let limit: Vec<f64> = (0..mesh.n_elements())
        .map(|e| {
            region
                .omega
                .fraction_inside(mesh.nodes()[e], mesh.nodes()[e + 1])
        })
        .collect();
    Ok((form.reweighted(&limit)?, report))
}

/// Exact average over element `e` of the plateau cutoff with margin `delta`:
/// chi(x) = min(d(x)/delta, 1) inside omega with d the distance to the
/// nearest Boundary endpoint of the containing interval, chi = 0 outside.
fn cutoff_element_average(mesh: &Mesh, omega: &Omega, e: usize, delta: f64) -> f64 {
    let (a, b) = (mesh.nodes()[e], mesh.nodes()[e + 1]);
    let h = b - a;
    match omega {
        Omega::Whole => 1.0,
        Omega::Intervals(ivs) => {
            let mut integral = 0.0;
            for iv in ivs {
                let s = iv.lo.max(a);
                let t = iv.hi.min(b);
                if t <= s {
                    continue;
                }
                // chi is piecewise linear with breakpoints at lo+delta, hi-delta
                let mut pts = vec![s, t];
                for p in [iv.lo + delta, iv.hi - delta] {
                    if p > s && p < t {
                        pts.push(p);
                    }
                }
                pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
                let chi = |x: f64| -> f64 {
                    let dl = if iv.lo_kind == EndKind::Boundary {
                        (x - iv.lo) / delta
                    } else {
                        1.0
                    };
                    let dr = if iv.hi_kind == EndKind::Boundary {
                        (iv.hi - x) / delta
                    } else {
                        1.0
                    };
                    dl.min(dr).clamp(0.0, 1.0)
                };
                for w in pts.windows(2) {
                    integral += 0.5 * (chi(w[0]) + chi(w[1])) * (w[1] - w[0]);
                }
            }
            integral / h
        }
    }
}

/// Assemble the stiffness over an active node subset. Each element adds
/// (w_e/h_e) [[1,-1],[-1,1]] restricted to its active endpoints; elements
/// with a single active endpoint contribute only to that diagonal.
fn reduce_stiffness(mesh: &Mesh, weights: &[f64], active: &[usize]) -> SymTriDiag {
    let mut pos = vec![usize::MAX; mesh.n_nodes()];
    for (p, &i) in active.iter().enumerate() {
        pos[i] = p;
    }
    let mut k = SymTriDiag::zeros(active.len());
    for e in 0..mesh.n_elements() {
        let w = weights[e];
        if w == 0.0 {
            continue;
        }
        let g = w / mesh.element_length(e);
        let (pi, pj) = (pos[e], pos[e + 1]);
        if pi != usize::MAX {
            k.diag[pi] += g;
        }
        if pj != usize::MAX {
            k.diag[pj] += g;
        }
        if pi != usize::MAX && pj != usize::MAX {
            debug_assert_eq!(pj, pi + 1);
            k.off[pi] -= g;
        }
    }
    k
}

fn reduce_mass(mesh: &Mesh, active: &[usize], kind: MassKind) -> MassMatrix {
    let mut pos = vec![usize::MAX; mesh.n_nodes()];
    for (p, &i) in active.iter().enumerate() {
        pos[i] = p;
    }
    match kind {
        MassKind::Lumped => {
            let full = mesh.lumped_masses();
            MassMatrix::Lumped(active.iter().map(|&i| full[i]).collect())
        }
        MassKind::Consistent => {
            let mut m = SymTriDiag::zeros(active.len());
            for e in 0..mesh.n_elements() {
                let h = mesh.element_length(e);
                let (pi, pj) = (pos[e], pos[e + 1]);
                if pi != usize::MAX {
                    m.diag[pi] += h / 3.0;
                }
                if pj != usize::MAX {
                    m.diag[pj] += h / 3.0;
                }
                if pi != usize::MAX && pj != usize::MAX {
                    m.off[pi] += h / 6.0;
                }
            }
            MassMatrix::Consistent(m)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{CoeffFamily, CoefficientField};
    use crate::mesh::{build_mesh, Grading};
    use crate::region::{OmegaInterval, TargetSet};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_form(n: usize) -> Form {
        let mesh = build_mesh((0.0, 1.0), n, Grading::Uniform).unwrap();
        let c = CoefficientField::from_family(&mesh, CoeffFamily::Constant(1.0)).unwrap();
        assemble_elliptic(&mesh, &c, MassKind::Lumped).unwrap()
    }

    #[test]
    fn free_stiffness_on_two_elements() {
        let form = unit_form(2);
        let k = form.stiffness();
        assert_eq!(k.diag, vec![2.0, 4.0, 2.0]);
        assert_eq!(k.off, vec![-2.0, -2.0]);
    }

    #[test]
    fn constants_in_kernel_exactly() {
        let mesh = build_mesh((-1.0, 1.0), 37, Grading::Uniform).unwrap();
        let c = CoefficientField::from_family(&mesh, CoeffFamily::PowerLaw { alpha: 2.0 }).unwrap();
        let form = assemble_elliptic(&mesh, &c, MassKind::Lumped).unwrap();
        // row sums vanish up to assembly rounding (one ulp of the diagonal)
        let ones = vec![1.0; mesh.n_nodes()];
        let scale = form.stiffness().diag.iter().fold(0.0_f64, |m, d| m.max(*d));
        for v in form.stiffness().matvec(&ones) {
            assert!(v.abs() <= 1e-14 * scale);
        }
        assert!(form.energy(&ones).abs() <= 1e-13 * scale);
    }

    #[test]
    fn zero_coefficient_gives_zero_form() {
        let mesh = build_mesh((0.0, 1.0), 8, Grading::Uniform).unwrap();
        let c = CoefficientField::from_family(&mesh, CoeffFamily::Constant(0.0)).unwrap();
        let form = assemble_elliptic(&mesh, &c, MassKind::Lumped).unwrap();
        let phi = form.interpolate(|x| x * x);
        assert_eq!(form.energy(&phi), 0.0);
    }

    #[test]
    fn energy_quadrature_converges_second_order() {
        // c = x^2, phi = x on (0,1): exact energy 1/3; midpoint rule is O(h^2)
        let mut errs = Vec::new();
        for n in [16, 32, 64] {
            let mesh = build_mesh((0.0, 1.0), n, Grading::Uniform).unwrap();
            let c =
                CoefficientField::from_family(&mesh, CoeffFamily::PowerLaw { alpha: 2.0 }).unwrap();
            let form = assemble_elliptic(&mesh, &c, MassKind::Lumped).unwrap();
            let phi = form.interpolate(|x| x);
            errs.push((form.energy(&phi) - 1.0 / 3.0).abs());
        }
        assert!(errs[1] / errs[0] < 0.3);
        assert!(errs[2] / errs[1] < 0.3);
    }

    #[test]
    fn dirichlet_restriction_on_unit_interval() {
        let form = unit_form(4);
        let mesh = form.mesh().clone();
        let region = RegionSpec::with_default_schedule(
            Omega::Intervals(vec![OmegaInterval::new(0.0, 1.0)]),
            TargetSet::default(),
            &mesh,
        )
        .unwrap();
        let d = form.restrict_dirichlet(&region).unwrap();
        assert_eq!(d.active_nodes(), &[1, 2, 3]);
        assert_eq!(d.stiffness().diag, vec![8.0, 8.0, 8.0]);
        assert_eq!(d.stiffness().off, vec![-4.0, -4.0]);
        match d.mass() {
            MassMatrix::Lumped(m) => assert_eq!(m, &vec![0.25, 0.25, 0.25]),
            _ => unreachable!(),
        }
    }

    #[test]
    fn punctured_restriction_decouples() {
        let mesh = build_mesh((-1.0, 1.0), 4, Grading::Uniform).unwrap();
        let c = CoefficientField::from_family(&mesh, CoeffFamily::Constant(1.0)).unwrap();
        let form = assemble_elliptic(&mesh, &c, MassKind::Lumped).unwrap();
        let omega = Omega::Intervals(vec![
            OmegaInterval::truncated_left(-1.0, 0.0),
            OmegaInterval::truncated_right(0.0, 1.0),
        ]);
        let region = RegionSpec::with_default_schedule(omega, TargetSet::default(), &mesh).unwrap();
        let d = form.restrict_dirichlet(&region).unwrap();
        assert_eq!(d.active_nodes(), &[0, 1, 3, 4]);
        // nodes 1 and 3 are not mesh-adjacent: no coupling across the puncture
        assert_eq!(d.stiffness().off[1], 0.0);
        // both still feel the pinned node 2 on the diagonal
        assert_eq!(d.stiffness().diag, vec![2.0, 4.0, 4.0, 2.0]);
    }

    #[test]
    fn truncated_energy_dual_route() {
        // K_chi = (1/2)(D_chi K + K D_chi) - (1/2) diag(K chi)
        let mesh = build_mesh((-1.0, 1.0), 10, Grading::Uniform).unwrap();
        let c = CoefficientField::from_family(&mesh, CoeffFamily::PowerLaw { alpha: 0.5 }).unwrap();
        let form = assemble_elliptic(&mesh, &c, MassKind::Lumped).unwrap();
        let n = form.n_active();
        let chi_v: Vec<f64> = (0..n).map(|i| (0.3 + 0.07 * i as f64).fract()).collect();
        let chi = Cutoff::new(chi_v.clone()).unwrap();
        let k = form.stiffness();
        let k_chi = form.truncated_stiffness(&chi);
        let k_chi_v = k.matvec(&chi_v);
        // compare entrywise on the tridiagonal pattern
        for i in 0..n {
            let identity_diag = chi_v[i] * k.diag[i] - 0.5 * k_chi_v[i];
            assert_relative_eq!(k_chi.diag[i], identity_diag, epsilon = 1e-12);
        }
        for i in 0..n - 1 {
            let identity_off = 0.5 * (chi_v[i] + chi_v[i + 1]) * k.off[i];
            assert_relative_eq!(k_chi.off[i], identity_off, epsilon = 1e-12);
        }
        // and the quadratic forms agree
        let phi: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.4).sin()).collect();
        assert_relative_eq!(
            form.truncated_energy(&chi, &phi),
            k_chi.energy(&phi),
            epsilon = 1e-12
        );
    }

    proptest! {
        #[test]
        fn truncation_is_linear_and_monotone_in_chi(
            seed in 0u64..1000,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let form = unit_form(12);
            let n = form.n_active();
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..0.5)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..0.5)).collect();
            let phi: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let ca = Cutoff::new(a.clone()).unwrap();
            let cb = Cutoff::new(b.clone()).unwrap();
            let sum = Cutoff::new(a.iter().zip(&b).map(|(x, y)| x + y).collect()).unwrap();
            let ea = form.truncated_energy(&ca, &phi);
            let eb = form.truncated_energy(&cb, &phi);
            let es = form.truncated_energy(&sum, &phi);
            // additivity in chi, exact elementwise
            prop_assert!((ea + eb - es).abs() <= 1e-12 * (1.0 + es.abs()));
            // monotonicity: a <= a + b pointwise
            prop_assert!(ea <= es + 1e-14);
            // dominated by the full energy when chi <= 1
            let one = Cutoff::new(vec![1.0; n]).unwrap();
            let e1 = form.truncated_energy(&one, &phi);
            prop_assert!((e1 - form.energy(&phi)).abs() <= 1e-12 * (1.0 + e1.abs()));
            prop_assert!(ea <= e1 + 1e-12);
        }
    }

    #[test]
    fn neumann_form_recovers_interior_weights_exactly() {
        // omega = (0,1) node-aligned inside (-1,1): interior elements keep
        // their full weight, outside elements drop to zero
        let mesh = build_mesh((-1.0, 1.0), 8, Grading::Uniform).unwrap();
        let c = CoefficientField::from_family(&mesh, CoeffFamily::Constant(1.0)).unwrap();
        let form = assemble_elliptic(&mesh, &c, MassKind::Lumped).unwrap();
        let region = RegionSpec::with_default_schedule(
            Omega::Intervals(vec![OmegaInterval::new(0.0, 1.0)]),
            TargetSet::default(),
            &mesh,
        )
        .unwrap();
        let (nf, report) = neumann_form(&form, &region).unwrap();
        assert!(report.converged);
        assert_eq!(nf.weights(), &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn neumann_form_cuts_misaligned_elements_by_fraction() {
        let mesh = build_mesh((0.0, 1.0), 4, Grading::Uniform).unwrap();
        let c = CoefficientField::from_family(&mesh, CoeffFamily::Constant(1.0)).unwrap();
        let form = assemble_elliptic(&mesh, &c, MassKind::Lumped).unwrap();
        let region = RegionSpec::with_default_schedule(
            Omega::Intervals(vec![OmegaInterval::new(0.125, 1.0)]),
            TargetSet::default(),
            &mesh,
        )
        .unwrap();
        let (nf, _) = neumann_form(&form, &region).unwrap();
        assert_relative_eq!(nf.weights()[0], 0.5, epsilon = 1e-12);
        assert_eq!(&nf.weights()[1..], &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn neumann_ignores_truncated_ends() {
        let mesh = build_mesh((0.0, 1.0), 4, Grading::Uniform).unwrap();
        let c = CoefficientField::from_family(&mesh, CoeffFamily::Constant(1.0)).unwrap();
        let form = assemble_elliptic(&mesh, &c, MassKind::Lumped).unwrap();
        let region = RegionSpec::with_default_schedule(
            Omega::Intervals(vec![OmegaInterval::truncated_both(0.0, 1.0)]),
            TargetSet::default(),
            &mesh,
        )
        .unwrap();
        let (nf, report) = neumann_form(&form, &region).unwrap();
        // no boundary ramps at all: the schedule is constant from step one
        assert!(report.converged);
        assert_eq!(report.steps, 2);
        assert_eq!(nf.stiffness(), form.stiffness());
    }

    #[test]
    fn consistent_mass_matrix() {
        let mesh = build_mesh((0.0, 1.0), 2, Grading::Uniform).unwrap();
        let c = CoefficientField::from_family(&mesh, CoeffFamily::Constant(1.0)).unwrap();
        let form = assemble_elliptic(&mesh, &c, MassKind::Consistent).unwrap();
        match form.mass() {
            MassMatrix::Consistent(m) => {
                let h = 0.5;
                assert_relative_eq!(m.diag[0], h / 3.0);
                assert_relative_eq!(m.diag[1], 2.0 * h / 3.0);
                assert_relative_eq!(m.off[0], h / 6.0);
            }
            _ => unreachable!(),
        }
        // consistent and lumped masses integrate constants identically
        let ones = vec![1.0; 3];
        assert_relative_eq!(form.mass().total_mass(&ones), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn extension_by_zero_roundtrip() {
        let form = unit_form(4);
        let mesh = form.mesh().clone();
        let region = RegionSpec::with_default_schedule(
            Omega::Intervals(vec![OmegaInterval::new(0.0, 1.0)]),
            TargetSet::default(),
            &mesh,
        )
        .unwrap();
        let d = form.restrict_dirichlet(&region).unwrap();
        let phi = vec![1.0, 2.0, 3.0];
        let full = d.extend_by_zero(&phi);
        assert_eq!(full, vec![0.0, 1.0, 2.0, 3.0, 0.0]);
        assert_eq!(d.restrict(&full), phi);
        // energy of the extension under the free form equals the restricted energy
        assert_relative_eq!(form.energy(&full), d.energy(&phi), epsilon = 1e-12);
    }
}
