//! End-to-end acceptance suite: each test prints a single pass/fail line for
//! its criterion and asserts the pinned tolerances.

use dcl::capacity::{enumerate_obstacle_oracle, solve_obstacle, Verdict};
use dcl::scenario::{
    catalog, evaluate, run_disjoint_interval, run_halfline_counterexample, Truth, VerdictReport,
};
use dcl::semigroup::{domination_check, resolvent_domination_min_gap, Semigroup};
use dcl::{
    assemble_elliptic, build_mesh, neumann_form, CoeffFamily, CoefficientField, Cutoff, Grading,
    MassKind, Omega, OmegaInterval, RegionSpec, TargetSet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;
use std::time::Instant;

fn criterion(n: usize, ok: bool, detail: &str) {
    println!("criterion {n}: {} — {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} failed: {detail}");
}

fn catalog_reports() -> &'static Vec<VerdictReport> {
    static REPORTS: OnceLock<Vec<VerdictReport>> = OnceLock::new();
    REPORTS.get_or_init(|| {
        catalog()
            .iter()
            .map(|s| evaluate(s).expect("catalog scenario evaluation"))
            .collect()
    })
}

#[test]
fn criterion_1_halfline_counterexample() {
    let start = Instant::now();
    let r = run_halfline_counterexample(&[512, 1024, 2048, 4096]).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let quarter_pi_inv = 1.0 / (4.0 * std::f64::consts::PI);
    let ok = r.cap_per_level.iter().all(|&c| c >= quarter_pi_inv)
        && (r.cap_extrapolated - 1.0).abs() <= 0.05
        && r.sn_matrix_gap < 1e-12
        && r.sn_probe < 1e-8
        && r.sd_difference_per_level[1..].iter().all(|&d| d > 0.01)
        && r.invariance_leak < 1e-8
        && elapsed < 60.0;
    criterion(
        1,
        ok,
        &format!(
            "cap per level {:?} (>= {:.5}), extrapolated {:.4} (within 5% of 1), \
             S vs S^N probe {:.2e} (< 1e-8), S vs S^D {:?} (> 0.01 on finest levels), \
             runtime {:.1}s (< 60s)",
            r.cap_per_level, quarter_pi_inv, r.cap_extrapolated, r.sn_probe,
            r.sd_difference_per_level, elapsed
        ),
    );
}

#[test]
fn criterion_2_disjoint_interval() {
    let start = Instant::now();
    let r = run_disjoint_interval(2048, 0.05).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let linear_stable = [512usize, 1024]
        .iter()
        .map(|&n| run_disjoint_interval(n, 0.05).unwrap().linear_margin)
        .chain([r.linear_margin])
        .all(|m| m > 1e-3);
    let energies_ok = r.en_errors.iter().all(|(_, e)| *e <= 10.0 * r.h);
    let ok = energies_ok && linear_stable && r.cap_verdict == Verdict::Positive && elapsed < 30.0;
    criterion(
        2,
        ok,
        &format!(
            "smooth Neumann energies within 10h of the integrals {:?}, linear-data margin \
             stable > 1e-3, capacity verdict {:?}, runtime {:.1}s (< 30s)",
            r.en_errors, r.cap_verdict, elapsed
        ),
    );
    // The |x| margin cannot exceed 1e-3: the coefficient and the initial
    // data are even, the coupled Neumann evolution preserves evenness, and
    // an even function has zero flux through the origin, so the coupled and
    // decoupled evolutions agree up to discretization error. The measured
    // margin decays with h instead of stabilizing.
    criterion(
        2,
        r.kink_margin > 1e-3,
        &format!(
            "kink-data margin {:.3e} demanded > 1e-3, but it vanishes by even symmetry",
            r.kink_margin
        ),
    );
}

#[test]
fn criterion_3_implication_consistency() {
    let reports = catalog_reports();
    let violations: Vec<&str> = reports
        .iter()
        .filter(|r| !r.consistent)
        .map(|r| r.scenario_id.as_str())
        .collect();
    let stray_inconclusive: Vec<&str> = reports
        .iter()
        .filter(|r| r.inconclusive && !r.scenario_id.starts_with("alpha1-"))
        .map(|r| r.scenario_id.as_str())
        .collect();
    let ok = violations.is_empty() && stray_inconclusive.is_empty();
    criterion(
        3,
        ok,
        &format!(
            "{} scenarios, violations {violations:?}, inconclusives outside alpha = 1 {stray_inconclusive:?}",
            reports.len()
        ),
    );
}

#[test]
fn criterion_4_dirichlet_neumann_equivalence() {
    let reports = catalog_reports();
    let broken: Vec<&str> = reports
        .iter()
        .filter(|r| {
            let zero_cap = r.capacity_verdict == Verdict::Zero;
            let pos_cap = r.capacity_verdict == Verdict::Positive;
            (zero_cap && r.cond_dn == Truth::Fails) || (pos_cap && r.cond_dn == Truth::Holds)
        })
        .map(|r| r.scenario_id.as_str())
        .collect();
    criterion(
        4,
        broken.is_empty(),
        &format!(
            "capacity-zero <=> S^D = S^N checked on {} scenarios, equivalence breaks: {broken:?}",
            reports.len()
        ),
    );
}

#[test]
fn criterion_5_truncation_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let meshes = [
        build_mesh((-1.0, 1.0), 40, Grading::Uniform).unwrap(),
        build_mesh(
            (0.0, 2.0),
            40,
            Grading::GeometricToward {
                points: vec![0.0],
                ratio: 1.1,
            },
        )
        .unwrap(),
    ];
    let mut worst = 0.0_f64;
    for mesh in &meshes {
        let weights: Vec<f64> = (0..mesh.n_elements()).map(|_| rng.gen_range(0.0..2.0)).collect();
        let c = CoefficientField::from_values(weights).unwrap();
        let form = assemble_elliptic(mesh, &c, MassKind::Lumped).unwrap();
        let n = form.n_active();
        for _ in 0..1000 {
            let chi1: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let chi2: Vec<f64> = chi1.iter().map(|&x| x.max(rng.gen_range(0.0..1.0))).collect();
            let phi: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let c1 = Cutoff::new(chi1.clone()).unwrap();
            let c2 = Cutoff::new(chi2).unwrap();
            let full = form.energy(&phi);
            let e1 = form.truncated_energy(&c1, &phi);
            let e2 = form.truncated_energy(&c2, &phi);
            let scale = full.abs().max(1.0);
            // nonnegativity
            worst = worst.max(-e1 / scale);
            // sup bound: E_chi <= max(chi) * E
            let bound = chi1.iter().cloned().fold(0.0, f64::max) * full;
            worst = worst.max((e1 - bound) / scale);
            // monotonicity in chi
            worst = worst.max((e1 - e2) / scale);
            // Markovian clamping of the full form
            let clamped: Vec<f64> = phi.iter().map(|&v| v.clamp(0.0, 1.0)).collect();
            worst = worst.max((form.energy(&clamped) - full) / scale);
            // the two assembly routes for the truncated form agree
            let quad = form.truncated_stiffness(&c1).energy(&phi);
            worst = worst.max((quad - e1).abs() / scale);
        }
    }
    criterion(
        5,
        worst <= 1e-12,
        &format!("2000 randomized (chi, phi) pairs, worst relative violation {worst:.2e} (<= 1e-12)"),
    );
}

#[test]
fn criterion_6_domination_suite() {
    let mesh = build_mesh((0.0, 1.0), 256, Grading::Uniform).unwrap();
    let c = CoefficientField::from_family(&mesh, CoeffFamily::Constant(1.0)).unwrap();
    let free = assemble_elliptic(&mesh, &c, MassKind::Lumped).unwrap();
    let omega2 = Omega::Intervals(vec![OmegaInterval::new(0.0, 1.0)]);
    let omega1 = Omega::Intervals(vec![OmegaInterval::new(0.0, 0.5)]);
    let r2 = RegionSpec::with_default_schedule(omega2, TargetSet::default(), &mesh).unwrap();
    let r1 = RegionSpec::with_default_schedule(omega1, TargetSet::default(), &mesh).unwrap();
    let d2 = free.restrict_dirichlet(&r2).unwrap();
    let d1 = free.restrict_dirichlet(&r1).unwrap();
    let (nm, _) = neumann_form(&free, &r2).unwrap();
    let sg = Semigroup::new(&free).unwrap();
    let sg_d2 = Semigroup::new(&d2).unwrap();
    let sg_d1 = Semigroup::new(&d1).unwrap();
    let sg_n = Semigroup::new(&nm).unwrap();

    let tol = 1e-9;
    let mut worst = f64::INFINITY;
    for &t in &[0.01, 0.1, 1.0] {
        for (big, small) in [(&sg, &sg_d2), (&sg_d2, &sg_d1), (&sg_n, &sg_d2)] {
            let rep = domination_check(big, small, t, tol).unwrap();
            worst = worst.min(rep.min_gap.min(rep.min_entry_small));
        }
    }
    for &tau in &[0.01, 0.1, 1.0] {
        worst = worst.min(resolvent_domination_min_gap(&sg, &sg_d2, tau));
    }
    criterion(
        6,
        worst >= -tol,
        &format!(
            "0 <= S^D <= S, nested Dirichlet pairs, S^D <= S^N and resolvent comparison at \
             t in {{0.01, 0.1, 1}}: worst signed gap {worst:.2e} (>= -1e-9)"
        ),
    );
}

#[test]
fn criterion_7_resolvent_power_rate() {
    let mesh = build_mesh((0.0, 1.0), 200, Grading::Uniform).unwrap();
    let c = CoefficientField::from_family(&mesh, CoeffFamily::Constant(1.0)).unwrap();
    let free = assemble_elliptic(&mesh, &c, MassKind::Lumped).unwrap();
    let omega = Omega::Intervals(vec![OmegaInterval::new(0.0, 1.0)]);
    let region = RegionSpec::with_default_schedule(omega, TargetSet::default(), &mesh).unwrap();
    let dirichlet = free.restrict_dirichlet(&region).unwrap();
    let sg = Semigroup::new(&dirichlet).unwrap();
    let t = 0.1;
    let phi = dirichlet.interpolate(|x| x * (1.0 - x));
    let exact = sg.apply(t, &phi);
    let mut errs = Vec::new();
    let mut n = 8usize;
    while n <= 1024 {
        let approx = sg.apply_resolvent_power(t, &phi, n);
        let err = approx
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        errs.push((n, err));
        n *= 2;
    }
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[1].1 / w[0].1).collect();
    let c_fit = errs.iter().map(|&(n, e)| n as f64 * e).fold(0.0, f64::max);
    let ok = ratios.iter().all(|&r| (0.4..=0.6).contains(&r));
    criterion(
        7,
        ok,
        &format!(
            "sup error C/n with fitted C = {c_fit:.3e}; doubling ratios {ratios:?} all in [0.4, 0.6]"
        ),
    );
}

#[test]
fn criterion_8_dirichlet_mass_anchor() {
    let mesh = build_mesh((0.0, 1.0), 512, Grading::Uniform).unwrap();
    let c = CoefficientField::from_family(&mesh, CoeffFamily::Constant(1.0)).unwrap();
    let free = assemble_elliptic(&mesh, &c, MassKind::Lumped).unwrap();
    let omega = Omega::Intervals(vec![OmegaInterval::new(0.0, 1.0)]);
    let region = RegionSpec::with_default_schedule(omega, TargetSet::default(), &mesh).unwrap();
    let dirichlet = free.restrict_dirichlet(&region).unwrap();
    let sg = Semigroup::new(&dirichlet).unwrap();
    let one = dirichlet.interpolate(|_| 1.0);
    let u = sg.apply(0.1, &one);
    let mass = dirichlet.mass().inner(&one, &u);
    let reference = 0.3021;
    let rel = (mass - reference).abs() / reference;
    criterion(
        8,
        rel < 0.01,
        &format!("<1, S^D_0.1 1> = {mass:.6}, reference {reference} (within 1%, got {rel:.2e})"),
    );
}

#[test]
fn criterion_9_small_instance_qp_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0_f64;
    for case in 0..200 {
        let n_el = rng.gen_range(3..=11); // up to 12 nodes
        let mesh = build_mesh((0.0, 1.0), n_el, Grading::Uniform).unwrap();
        let weights: Vec<f64> = (0..n_el).map(|_| rng.gen_range(0.0..3.0)).collect();
        let c = CoefficientField::from_values(weights).unwrap();
        let form = assemble_elliptic(&mesh, &c, MassKind::Lumped).unwrap();
        let a = form
            .stiffness()
            .add_scaled(&form.mass().as_tridiag(), 1.0);
        let n = a.len();
        let mut constraint: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
        if constraint.is_empty() {
            constraint.push(rng.gen_range(0..n));
        }
        let psor = solve_obstacle(&a, &constraint).unwrap();
        let oracle = enumerate_obstacle_oracle(&a, &constraint);
        let gap = (psor.value - oracle).abs();
        assert!(
            gap <= 1e-10,
            "case {case}: PSOR {} vs enumeration {} (gap {gap:.2e})",
            psor.value,
            oracle
        );
        worst = worst.max(gap);
    }
    criterion(
        9,
        worst <= 1e-10,
        &format!("200 randomized obstacle problems on <= 12 nodes, worst gap {worst:.2e} (<= 1e-10)"),
    );
}
