//! Submarkovian semigroups S_t = exp(-t H) generated by an assembled form,
//! with a spectral evaluation path for moderate sizes and resolvent-power
//! stepping for large ones, plus the defect functionals used by the
//! theorem checks.

use crate::error::{DclError, Result};
use crate::form::{Form, MassMatrix};
use crate::linalg::{sym_tridiag_eigen, DenseCols, SymTriDiag};
use rand::{Rng, SeedableRng};

/// Largest size for which the dense spectral path is built.
pub const MAX_DENSE: usize = 4000;

struct Spectral {
    /// Generalized eigenvalues of K v = lambda M v, ascending.
    eigvals: Vec<f64>,
    /// M-orthonormal eigenvectors as columns: V^T M V = I.
    vecs: DenseCols,
}

pub struct Semigroup {
    form: Form,
    spectral: Option<Spectral>,
}

impl Semigroup {
    /// Build the evaluator; the spectral decomposition is computed eagerly
    /// when the form has at most [`MAX_DENSE`] degrees of freedom.
    pub fn new(form: &Form) -> Result<Self> {
        let spectral = if form.n_active() <= MAX_DENSE {
            Some(build_spectral(form)?)
        } else {
            None
        };
        Ok(Semigroup {
            form: form.clone(),
            spectral,
        })
    }

    /// Resolvent-power-only evaluator, independent of size.
    pub fn without_spectral(form: &Form) -> Self {
        Semigroup {
            form: form.clone(),
            spectral: None,
        }
    }

    pub fn form(&self) -> &Form {
        &self.form
    }

    pub fn n(&self) -> usize {
        self.form.n_active()
    }

    pub fn has_spectral(&self) -> bool {
        self.spectral.is_some()
    }

    /// S_t phi.
    pub fn apply(&self, t: f64, phi: &[f64]) -> Vec<f64> {
        match &self.spectral {
            Some(s) => apply_spectral(s, self.form.mass(), t, phi),
            None => self.apply_resolvent_power(t, phi, self.default_steps(t)),
        }
    }

    /// (I + (t/n) H)^{-n} phi: n backward-Euler steps, each a tridiagonal
    /// solve of (M + (t/n) K) psi_j = M psi_{j-1}.
    pub fn apply_resolvent_power(&self, t: f64, phi: &[f64], n_steps: usize) -> Vec<f64> {
        assert!(n_steps >= 1);
        let tau = t / n_steps as f64;
        let a = self
            .form
            .mass()
            .as_tridiag()
            .add_scaled(self.form.stiffness(), tau);
        let mut psi = phi.to_vec();
        for _ in 0..n_steps {
            psi = a.solve(&self.form.mass().matvec(&psi));
        }
        psi
    }

    /// (I + tau H)^{-1} phi.
    pub fn apply_resolvent(&self, tau: f64, phi: &[f64]) -> Vec<f64> {
        self.apply_resolvent_power(tau, phi, 1)
    }

    /// Default backward-Euler step count: ceil(t / h^2), clamped to 10^4.
    pub fn default_steps(&self, t: f64) -> usize {
        let h = self.form.mesh().max_element_length();
        ((t / (h * h)).ceil() as usize).clamp(1, 10_000)
    }

    /// Dense matrix of S_t in the nodal basis: column j is S_t e_j.
    pub fn matrix(&self, t: f64) -> Result<DenseCols> {
        let s = self
            .spectral
            .as_ref()
            .ok_or(DclError::TooLargeForDense(self.n()))?;
        let n = self.n();
        let mut data = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = apply_spectral(s, self.form.mass(), t, &e);
            e[j] = 0.0;
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
        Ok(DenseCols { n, data })
    }

    pub fn eigenvalues(&self) -> Result<&[f64]> {
        self.spectral
            .as_ref()
            .map(|s| s.eigvals.as_slice())
            .ok_or(DclError::TooLargeForDense(self.n()))
    }

    /// sup-norm conservativeness defect ||S_t 1 - 1||_inf.
    pub fn conservativeness_defect(&self, t: f64) -> f64 {
        let ones = vec![1.0; self.n()];
        let s1 = self.apply(t, &ones);
        s1.iter().fold(0.0_f64, |m, v| m.max((v - 1.0).abs()))
    }

    /// Relative mass loss of the constant one: (|1|_M - <S_t 1, 1>_M)/|1|_M.
    /// Nonnegative for a submarkovian semigroup; zero iff conservative.
    pub fn mass_defect(&self, t: f64) -> f64 {
        let ones = vec![1.0; self.n()];
        let total = self.form.mass().total_mass(&ones);
        let s1 = self.apply(t, &ones);
        (total - self.form.mass().total_mass(&s1)) / total
    }
}

fn build_spectral(form: &Form) -> Result<Spectral> {
    let n = form.n_active();
    match form.mass() {
        MassMatrix::Lumped(m) => {
            // symmetrize: B = M^{-1/2} K M^{-1/2}, tridiagonal
            let d: Vec<f64> = m.iter().map(|v| 1.0 / v.sqrt()).collect();
            let k = form.stiffness();
            let mut b = SymTriDiag::zeros(n);
            for i in 0..n {
                b.diag[i] = d[i] * d[i] * k.diag[i];
            }
            for i in 0..n - 1 {
                b.off[i] = d[i] * d[i + 1] * k.off[i];
            }
            let (eigvals, q) = sym_tridiag_eigen(&b);
            // V = M^{-1/2} Q is M-orthonormal
            let mut data = q.data;
            for i in 0..n {
                for j in 0..n {
                    data[i * n + j] *= d[i];
                }
            }
            Ok(Spectral {
                eigvals,
                vecs: DenseCols { n, data },
            })
        }
        MassMatrix::Consistent(mt) => {
            use nalgebra::DMatrix;
            let mut m = DMatrix::zeros(n, n);
            let mut k = DMatrix::zeros(n, n);
            for i in 0..n {
                m[(i, i)] = mt.diag[i];
                k[(i, i)] = form.stiffness().diag[i];
                if i + 1 < n {
                    m[(i, i + 1)] = mt.off[i];
                    m[(i + 1, i)] = mt.off[i];
                    k[(i, i + 1)] = form.stiffness().off[i];
                    k[(i + 1, i)] = form.stiffness().off[i];
                }
            }
            let chol = m
                .clone()
                .cholesky()
                .ok_or_else(|| DclError::NoConvergence("mass matrix not positive definite".into()))?;
            let l = chol.l();
            // B = L^{-1} K L^{-T}, symmetric
            let y = l
                .solve_lower_triangular(&k)
                .ok_or_else(|| DclError::NoConvergence("singular mass factor".into()))?;
            let b = l
                .solve_lower_triangular(&y.transpose())
                .ok_or_else(|| DclError::NoConvergence("singular mass factor".into()))?;
            let b = 0.5 * (&b + &b.transpose());
            let eig = b.symmetric_eigen();
            // V = L^{-T} Q, M-orthonormal
            let v = l
                .transpose()
                .solve_upper_triangular(&eig.eigenvectors)
                .ok_or_else(|| DclError::NoConvergence("singular mass factor".into()))?;
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &c| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[c]).unwrap());
            let eigvals: Vec<f64> = idx.iter().map(|&j| eig.eigenvalues[j]).collect();
            let mut data = vec![0.0; n * n];
            for (new_j, &old_j) in idx.iter().enumerate() {
                for i in 0..n {
                    data[i * n + new_j] = v[(i, old_j)];
                }
            }
            Ok(Spectral {
                eigvals,
                vecs: DenseCols { n, data },
            })
        }
    }
}

fn apply_spectral(s: &Spectral, mass: &MassMatrix, t: f64, phi: &[f64]) -> Vec<f64> {
    let mphi = mass.matvec(phi);
    let mut w = s.vecs.matvec_t(&mphi);
    for (wj, &l) in w.iter_mut().zip(&s.eigvals) {
        // clamp tiny negative eigenvalues from roundoff
        *wj *= (-l.max(0.0) * t).exp();
    }
    s.vecs.matvec(&w)
}

/// M-weighted L2 operator norm of phi -> apply(phi) for an M-self-adjoint
/// operator: power iteration on the operator itself, maximizing the absolute
/// M-Rayleigh quotient over a few seeded random starts.
pub fn operator_norm_m(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    mass: &MassMatrix,
    n: usize,
    seed: u64,
) -> f64 {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0_f64;
    for _ in 0..3 {
        let mut z: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut norm = mass.norm(&z);
        if norm == 0.0 {
            continue;
        }
        for zi in z.iter_mut() {
            *zi /= norm;
        }
        let mut estimate = 0.0;
        for _ in 0..60 {
            let az = apply(&z);
            norm = mass.norm(&az);
            if norm < 1e-300 {
                estimate = 0.0;
                break;
            }
            let next = norm; // ||A z||_M with ||z||_M = 1
            z = az.iter().map(|v| v / norm).collect();
            if (next - estimate).abs() <= 1e-12 * next.max(1.0) {
                estimate = next;
                break;
            }
            estimate = next;
        }
        best = best.max(estimate);
    }
    best
}

/// M-weighted operator norm of the difference S^(1)_t - S^(2)_t of two
/// semigroups over the same node set.
pub fn semigroup_difference_norm(a: &Semigroup, b: &Semigroup, t: f64, seed: u64) -> f64 {
    assert_eq!(a.n(), b.n());
    operator_norm_m(
        |phi| {
            let x = a.apply(t, phi);
            let y = b.apply(t, phi);
            x.iter().zip(&y).map(|(u, v)| u - v).collect()
        },
        a.form().mass(),
        a.n(),
        seed,
    )
}

/// M-weighted operator norm of phi -> S^big_t(E phi) - E(S^small_t phi),
/// where E is extension by zero from the small node set into the big one.
/// This measures equality of the two semigroups on L2 of the small region,
/// leakage outside included. Power iteration on D* D with the M-adjoint.
pub fn embedded_difference_norm(big: &Semigroup, small: &Semigroup, t: f64, seed: u64) -> f64 {
    let nb = big.n();
    let ns = small.n();
    let mut pos_of_node = vec![usize::MAX; big.form().mesh().n_nodes()];
    for (p, &i) in big.form().active_nodes().iter().enumerate() {
        pos_of_node[i] = p;
    }
    let embed: Vec<usize> = small
        .form()
        .active_nodes()
        .iter()
        .map(|&i| {
            let p = pos_of_node[i];
            assert!(p != usize::MAX, "small node set not contained in big one");
            p
        })
        .collect();
    let mb = big.form().mass();
    let ms = small.form().mass();
    let extend = |phi: &[f64]| -> Vec<f64> {
        let mut full = vec![0.0; nb];
        for (p, &b) in embed.iter().enumerate() {
            full[b] = phi[p];
        }
        full
    };
    let restrict = |psi: &[f64]| -> Vec<f64> { embed.iter().map(|&b| psi[b]).collect() };
    let forward = |phi: &[f64]| -> Vec<f64> {
        let a = big.apply(t, &extend(phi));
        let b = extend(&small.apply(t, phi));
        a.iter().zip(&b).map(|(x, y)| x - y).collect()
    };
    // adjoint of D = S_b E - E S_s between the M-weighted spaces:
    // D* psi = M_s^{-1} E^T M_b S_b psi - S_s M_s^{-1} E^T M_b psi
    let adjoint = |psi: &[f64]| -> Vec<f64> {
        let r1 = ms.solve(&restrict(&mb.matvec(&big.apply(t, psi))));
        let r2 = small.apply(t, &ms.solve(&restrict(&mb.matvec(psi))));
        r1.iter().zip(&r2).map(|(x, y)| x - y).collect()
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0_f64;
    for _ in 0..2 {
        let mut z: Vec<f64> = (0..ns).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = ms.norm(&z);
        if norm == 0.0 {
            continue;
        }
        for zi in z.iter_mut() {
            *zi /= norm;
        }
        let mut estimate = 0.0_f64;
        for _ in 0..40 {
            let w = forward(&z);
            let sigma = mb.norm(&w); // ||D z||, z unit in M_s
            let g = adjoint(&w);
            let gn = ms.norm(&g);
            if gn < 1e-200 {
                estimate = sigma;
                break;
            }
            z = g.iter().map(|v| v / gn).collect();
            if (sigma - estimate).abs() <= 1e-8 * sigma.max(1e-30) {
                estimate = sigma;
                break;
            }
            estimate = sigma;
        }
        best = best.max(estimate);
    }
    best
}

/// Battery-probed difference of two semigroups on L2 of the small region:
/// max over the battery of ||S^big_t(E phi) - E(S^small_t phi)||_M / ||phi||_M.
/// Unlike [`embedded_difference_norm`], this probes fixed (mesh-independent)
/// densities, so it converges under refinement whenever the continuum
/// semigroups agree; the operator norm also sees mesh-scale concentrated
/// data, whose defect need not vanish with h.
pub fn embedded_difference_battery(
    big: &Semigroup,
    small: &Semigroup,
    t: f64,
    battery: &[Vec<f64>],
) -> f64 {
    let nb = big.n();
    let mut pos_of_node = vec![usize::MAX; big.form().mesh().n_nodes()];
    for (p, &i) in big.form().active_nodes().iter().enumerate() {
        pos_of_node[i] = p;
    }
    let embed: Vec<usize> = small
        .form()
        .active_nodes()
        .iter()
        .map(|&i| pos_of_node[i])
        .collect();
    let mut worst = 0.0_f64;
    for phi in battery {
        let scale = small.form().mass().norm(phi);
        if scale == 0.0 {
            continue;
        }
        let mut full = vec![0.0; nb];
        for (p, &b) in embed.iter().enumerate() {
            full[b] = phi[p];
        }
        let a = big.apply(t, &full);
        let s = small.apply(t, phi);
        let mut diff = a;
        for (p, &b) in embed.iter().enumerate() {
            diff[b] -= s[p];
        }
        worst = worst.max(big.form().mass().norm(&diff) / scale);
    }
    worst
}

/// Entrywise domination report for S^small_t <= S^big_t, where the small
/// semigroup lives on a subset of the big one's active nodes (extension by
/// zero in between).
#[derive(Debug, Clone)]
pub struct DominationReport {
    /// min over entries of S^big - S^small; domination holds iff >= -tol.
    pub min_gap: f64,
    pub min_entry_small: f64,
    pub holds: bool,
}

pub fn domination_check(
    big: &Semigroup,
    small: &Semigroup,
    t: f64,
    tol: f64,
) -> Result<DominationReport> {
    let sb = big.matrix(t)?;
    let ss = small.matrix(t)?;
    // positions of the small active nodes inside the big active list
    let big_nodes = big.form().active_nodes();
    let mut pos_of_node = vec![usize::MAX; big.form().mesh().n_nodes()];
    for (p, &i) in big_nodes.iter().enumerate() {
        pos_of_node[i] = p;
    }
    let embed: Vec<usize> = small
        .form()
        .active_nodes()
        .iter()
        .map(|&i| {
            let p = pos_of_node[i];
            assert!(p != usize::MAX, "small node set not contained in big one");
            p
        })
        .collect();
    let mut min_gap = f64::INFINITY;
    let mut min_entry_small = f64::INFINITY;
    for (pi, &bi) in embed.iter().enumerate() {
        for (pj, &bj) in embed.iter().enumerate() {
            let gap = sb.get(bi, bj) - ss.get(pi, pj);
            min_gap = min_gap.min(gap);
            min_entry_small = min_entry_small.min(ss.get(pi, pj));
        }
    }
    Ok(DominationReport {
        min_gap,
        min_entry_small,
        holds: min_gap >= -tol,
    })
}

/// Resolvent analogue: entrywise (I + tau H_big)^{-1} >= (I + tau H_small)^{-1}
/// on the embedded node set. Columns are computed by tridiagonal solves, so
/// this works at any size.
pub fn resolvent_domination_min_gap(big: &Semigroup, small: &Semigroup, tau: f64) -> f64 {
    let nb = big.n();
    let ns = small.n();
    let big_nodes = big.form().active_nodes();
    let mut pos_of_node = vec![usize::MAX; big.form().mesh().n_nodes()];
    for (p, &i) in big_nodes.iter().enumerate() {
        pos_of_node[i] = p;
    }
    let embed: Vec<usize> = small
        .form()
        .active_nodes()
        .iter()
        .map(|&i| pos_of_node[i])
        .collect();
    let mut min_gap = f64::INFINITY;
    let mut eb = vec![0.0; nb];
    let mut es = vec![0.0; ns];
    for pj in 0..ns {
        eb[embed[pj]] = 1.0;
        es[pj] = 1.0;
        let cb = big.apply_resolvent(tau, &eb);
        let cs = small.apply_resolvent(tau, &es);
        eb[embed[pj]] = 0.0;
        es[pj] = 0.0;
        for (pi, &bi) in embed.iter().enumerate() {
            min_gap = min_gap.min(cb[bi] - cs[pi]);
        }
    }
    min_gap
}

/// sup-norm invariance defect of the node set `inside` under S_t: largest
/// leak of S_t(1_inside phi) onto the outside nodes, relative to sup|phi|,
/// maximized over the battery.
pub fn invariance_defect_sup(
    sg: &Semigroup,
    inside: &[bool],
    t: f64,
    battery: &[Vec<f64>],
) -> f64 {
    assert_eq!(inside.len(), sg.n());
    let mut worst = 0.0_f64;
    for phi in battery {
        let masked: Vec<f64> = phi
            .iter()
            .zip(inside)
            .map(|(v, &b)| if b { *v } else { 0.0 })
            .collect();
        let scale = masked.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            continue;
        }
        let r = sg.apply(t, &masked);
        let leak = r
            .iter()
            .zip(inside)
            .filter(|(_, &b)| !b)
            .fold(0.0_f64, |m, (v, _)| m.max(v.abs()));
        worst = worst.max(leak / scale);
    }
    worst
}

/// M-weighted invariance defect: ||(S_t masked) restricted to the outside||_M
/// over ||masked||_M, maximized over the battery.
pub fn invariance_defect_m(
    sg: &Semigroup,
    inside: &[bool],
    t: f64,
    battery: &[Vec<f64>],
) -> f64 {
    assert_eq!(inside.len(), sg.n());
    let mut worst = 0.0_f64;
    for phi in battery {
        let masked: Vec<f64> = phi
            .iter()
            .zip(inside)
            .map(|(v, &b)| if b { *v } else { 0.0 })
            .collect();
        let scale = sg.form().mass().norm(&masked);
        if scale == 0.0 {
            continue;
        }
        let r = sg.apply(t, &masked);
        let outside: Vec<f64> = r
            .iter()
            .zip(inside)
            .map(|(v, &b)| if b { 0.0 } else { *v })
            .collect();
        worst = worst.max(sg.form().mass().norm(&outside) / scale);
    }
    worst
}
