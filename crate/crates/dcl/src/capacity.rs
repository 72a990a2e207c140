//! Relative capacities via discrete obstacle problems.
//!
//! cap_Omega(A) is approximated by min phi^T (M + K) phi over nodal vectors
//! with phi >= 1 on the mesh nodes lying in V_eps(A) intersected with Omega,
//! followed by shrinking eps and extrapolating.

use crate::error::{DclError, Result};
use crate::form::Form;
use crate::linalg::SymTriDiag;
use crate::region::RegionSpec;
use serde::Serialize;

/// Three-valued outcome of a capacity (or defect) decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Zero,
    Positive,
    Inconclusive,
}

/// Capacity is declared zero below this, positive above ten times this.
pub const ZERO_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct ObstacleSolution {
    pub phi: Vec<f64>,
    /// phi^T A phi at the minimizer.
    pub value: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
}

/// Minimize (1/2) phi^T A phi subject to phi_i >= 1 for i in `constraint`.
/// A must be symmetric positive definite. Projected SOR with an exact
/// active-set refinement when the iteration stalls.
pub fn solve_obstacle(a: &SymTriDiag, constraint: &[usize]) -> Result<ObstacleSolution> {
    let n = a.len();
    if constraint.is_empty() {
        return Ok(ObstacleSolution {
            phi: vec![0.0; n],
            value: 0.0,
            iterations: 0,
            kkt_residual: 0.0,
        });
    }
    let mut constrained = vec![false; n];
    for &i in constraint {
        if i >= n {
            return Err(DclError::DimensionMismatch { expected: n, got: i });
        }
        constrained[i] = true;
    }
    let scale = a.diag.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let tol = 1e-10 * scale.max(1.0);
    let omega = 1.6;
    let max_iter = 50 * n;

    let mut phi: Vec<f64> = constrained.iter().map(|&c| if c { 1.0 } else { 0.0 }).collect();
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < max_iter {
        iterations += 1;
        for i in 0..n {
            let mut s = 0.0;
            if i > 0 {
                s += a.off[i - 1] * phi[i - 1];
            }
            if i + 1 < n {
                s += a.off[i] * phi[i + 1];
            }
            let z = -s / a.diag[i];
            let updated = phi[i] + omega * (z - phi[i]);
            phi[i] = if constrained[i] { updated.max(1.0) } else { updated };
        }
        residual = kkt_residual(a, &phi, &constrained, scale);
        if residual < tol {
            break;
        }
    }
    if residual >= tol {
        // exact refinement from the PSOR guess of the contact set
        let guess: Vec<usize> = constraint
            .iter()
            .copied()
            .filter(|&i| phi[i] <= 1.0 + 1e-8)
            .collect();
        phi = active_set_solve(a, constraint, &guess)?;
        residual = kkt_residual(a, &phi, &constrained, scale);
        if residual >= tol {
            return Err(DclError::NoConvergence(format!(
                "obstacle KKT residual {residual:.3e} after refinement"
            )));
        }
    }
    let value = a.energy(&phi);
    Ok(ObstacleSolution {
        phi,
        value,
        iterations,
        kkt_residual: residual,
    })
}

fn kkt_residual(a: &SymTriDiag, phi: &[f64], constrained: &[bool], scale: f64) -> f64 {
    let r = a.matvec(phi);
    let mut worst = 0.0_f64;
    for i in 0..phi.len() {
        if constrained[i] {
            // feasibility, dual feasibility, complementarity
            worst = worst.max((1.0 - phi[i]).max(0.0) * scale);
            worst = worst.max((-r[i]).max(0.0));
            worst = worst.max(r[i].max(0.0).min((phi[i] - 1.0).max(0.0) * scale));
        } else {
            worst = worst.max(r[i].abs());
        }
    }
    worst
}

/// Primal active-set iteration: fix phi = 1 on the working set, solve the
/// unconstrained tridiagonal system on the rest, then add violated
/// constraints / drop negative multipliers until clean.
fn active_set_solve(a: &SymTriDiag, constraint: &[usize], start: &[usize]) -> Result<Vec<f64>> {
    let n = a.len();
    let mut active: Vec<bool> = {
        let mut v = vec![false; n];
        for &i in start {
            v[i] = true;
        }
        if start.is_empty() {
            for &i in constraint {
                v[i] = true;
            }
        }
        v
    };
    let mut in_constraint = vec![false; n];
    for &i in constraint {
        in_constraint[i] = true;
    }
    for _ in 0..200 {
        let phi = equality_solve(a, &active);
        let r = a.matvec(&phi);
        let mut changed = false;
        for &i in constraint {
            if !active[i] && phi[i] < 1.0 - 1e-13 {
                active[i] = true;
                changed = true;
            }
        }
        if !changed {
            for &i in constraint {
                if active[i] && r[i] < -1e-13 {
                    active[i] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok(phi);
        }
    }
    Err(DclError::NoConvergence("active-set cycling".into()))
}

/// Solve A phi = 0 with phi fixed to 1 on the active set.
fn equality_solve(a: &SymTriDiag, active: &[bool]) -> Vec<f64> {
    let n = a.len();
    let free: Vec<usize> = (0..n).filter(|&i| !active[i]).collect();
    let mut sub = SymTriDiag::zeros(free.len());
    let mut rhs = vec![0.0; free.len()];
    for (p, &i) in free.iter().enumerate() {
        sub.diag[p] = a.diag[i];
        if i > 0 {
            if active[i - 1] {
                rhs[p] -= a.off[i - 1];
            } else {
                // node i-1 is free, hence the free node at position p-1
                sub.off[p - 1] = a.off[i - 1];
            }
        }
        if i + 1 < n && active[i + 1] {
            rhs[p] -= a.off[i];
        }
    }
    let sol = if free.is_empty() { Vec::new() } else { sub.solve(&rhs) };
    let mut phi = vec![1.0; n];
    for (p, &i) in free.iter().enumerate() {
        phi[i] = sol[p];
    }
    for (i, &act) in active.iter().enumerate() {
        if act {
            phi[i] = 1.0;
        }
    }
    phi
}

/// Brute-force oracle for small problems: try every subset of the constraint
/// set as the contact set, keep the feasible stationary points, return the
/// least objective value. Exponential in the constraint count.
pub fn enumerate_obstacle_oracle(a: &SymTriDiag, constraint: &[usize]) -> f64 {
    assert!(constraint.len() <= 16, "oracle is exponential");
    if constraint.is_empty() {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << constraint.len()) {
        let mut active = vec![false; a.len()];
        for (b, &i) in constraint.iter().enumerate() {
            if mask & (1 << b) != 0 {
                active[i] = true;
            }
        }
        let phi = equality_solve(a, &active);
        if constraint.iter().all(|&i| phi[i] >= 1.0 - 1e-10) {
            best = best.min(a.energy(&phi));
        }
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct CapacityEstimate {
    /// (eps, obstacle value) per schedule step; skipped steps are absent.
    pub per_eps: Vec<(f64, f64)>,
    pub extrapolated: f64,
    pub verdict: Verdict,
    /// Schedule steps whose neighborhood contained no mesh node at all.
    pub skipped_steps: usize,
}

/// cap_Omega(A) on a fixed mesh: run the obstacle problem down the
/// neighborhood schedule and Aitken-extrapolate the (monotone decreasing)
/// values. The form is the ambient one on X; only the constraint set sees
/// Omega.
pub fn capacity(form: &Form, region: &RegionSpec) -> Result<CapacityEstimate> {
    if region.target.is_empty() {
        return Ok(CapacityEstimate {
            per_eps: Vec::new(),
            extrapolated: 0.0,
            verdict: Verdict::Zero,
            skipped_steps: 0,
        });
    }
    let a = form.stiffness().add_scaled(&form.mass().as_tridiag(), 1.0);
    let mut per_eps = Vec::new();
    let mut skipped = 0;
    for &eps in &region.schedule {
        let nodes = region.constraint_nodes(form.mesh(), eps);
        let positions: Vec<usize> = {
            let mut pos = vec![usize::MAX; form.mesh().n_nodes()];
            for (p, &i) in form.active_nodes().iter().enumerate() {
                pos[i] = p;
            }
            nodes.iter().map(|&i| pos[i]).filter(|&p| p != usize::MAX).collect()
        };
        if positions.is_empty() {
            skipped += 1;
            continue;
        }
        let sol = solve_obstacle(&a, &positions)?;
        per_eps.push((eps, sol.value));
    }
    if per_eps.is_empty() {
        return Err(DclError::MeshTooCoarse(
            "no schedule step put a mesh node inside the neighborhood".into(),
        ));
    }
    let values: Vec<f64> = per_eps.iter().map(|&(_, v)| v).collect();
    let extrapolated = aitken(&values);
    let verdict = threshold_verdict(extrapolated);
    Ok(CapacityEstimate {
        per_eps,
        extrapolated,
        verdict,
        skipped_steps: skipped,
    })
}

/// Aitken delta-squared on the last three values; falls back to the last
/// value when the differences do not support extrapolation.
pub fn aitken(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 3 {
        return *values.last().unwrap_or(&0.0);
    }
    let (x0, x1, x2) = (values[n - 3], values[n - 2], values[n - 1]);
    let d1 = x1 - x0;
    let d2 = x2 - x1;
    let dd = d2 - d1;
    if dd.abs() <= 1e-14 * (x2.abs() + 1.0) {
        return x2;
    }
    // extrapolation assumes roughly geometric convergence; with a difference
    // ratio near 1 (logarithmic/harmonic decay) it overshoots badly, so fall
    // back to the last value
    let r = d2 / d1;
    if !(-0.5..0.7).contains(&r) {
        return x2;
    }
    let e = x2 - d2 * d2 / dd;
    if !e.is_finite() {
        return x2;
    }
    // the extrapolated quantities are nonnegative; an overshoot below zero
    // of at most one step size means the sequence decays to (numerically)
    // zero, while a larger one means the geometric model broke down
    if e < 0.0 {
        if e >= -d2.abs() {
            0.0
        } else {
            x2
        }
    } else {
        e
    }
}

fn threshold_verdict(v: f64) -> Verdict {
    if v < ZERO_THRESHOLD {
        Verdict::Zero
    } else if v > 10.0 * ZERO_THRESHOLD {
        Verdict::Positive
    } else {
        Verdict::Inconclusive
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepLevel {
    pub n_elements: usize,
    pub h: f64,
    pub estimate: CapacityEstimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub levels: Vec<SweepLevel>,
    pub extrapolated: f64,
    pub verdict: Verdict,
}

/// Mesh-refinement sweep: compute the capacity estimate on each level and
/// decide zero / positive / inconclusive from the trend.
///
/// Zero: values decrease with a stable decay exponent of at least ~0.3 per
/// level and extrapolate below `ZERO_THRESHOLD`. Positive: the last relative
/// change is under 5% and the extrapolated value exceeds ten times the
/// threshold. Anything else is inconclusive.
pub fn refinement_sweep(
    levels: &[usize],
    build: impl Fn(usize) -> Result<(Form, RegionSpec)>,
) -> Result<SweepResult> {
    let mut out = Vec::new();
    for &n in levels {
        let (form, region) = build(n)?;
        let h = form.mesh().max_element_length();
        let estimate = capacity(&form, &region)?;
        out.push(SweepLevel {
            n_elements: n,
            h,
            estimate,
        });
    }
    let values: Vec<f64> = out.iter().map(|l| l.estimate.extrapolated).collect();
    let extrapolated = aitken(&values);
    let verdict = sweep_verdict(&values, extrapolated);
    Ok(SweepResult {
        levels: out,
        extrapolated,
        verdict,
    })
}

/// Verdict from a per-level value sequence; see [`refinement_sweep`].
pub fn sweep_verdict(values: &[f64], extrapolated: f64) -> Verdict {
    let n = values.len();
    if n < 2 {
        return threshold_verdict(extrapolated);
    }
    let last = values[n - 1];
    let prev = values[n - 2];
    let decreasing = values.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    let rel_change = if last.abs() > 0.0 {
        (last - prev).abs() / last.abs()
    } else {
        0.0
    };
    // decay exponent per level (levels double the resolution)
    let stable_decay = values.windows(2).all(|w| {
        w[1] > 0.0 && w[0] > 0.0 && (w[0] / w[1]).log2() >= 0.3
    }) || last == 0.0;
    let increasing = values.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9));
    if decreasing && stable_decay && extrapolated < ZERO_THRESHOLD {
        Verdict::Zero
    } else if (increasing && last > 10.0 * ZERO_THRESHOLD)
        || (rel_change < 0.05 && extrapolated > 10.0 * ZERO_THRESHOLD)
    {
        // positive-capacity problems refine upward toward their limit, so an
        // increasing sequence already above threshold settles the sign
        Verdict::Positive
    } else {
        Verdict::Inconclusive
    }
}
