//! Acceptance suite: one line per criterion, `PASS` or `FAIL`, with the
//! measured worst case next to its tolerance.
//!
//! Runs as its own test target without the libtest harness so the report is
//! always printed; the process exits nonzero when any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use bell_steering::bloch::{is_physical, CorrelationMatrix, Povm};
use bell_steering::classify::{classify_state, in_prior_hull, is_separable, surface_grid, RayMethod};
use bell_steering::critical_radius::{compute_rt, rt_axial, rt_werner};
use bell_steering::lhs_model::{LhsModel, ResponseFunction, CI_TOL, POVM_THRESHOLD};
use bell_steering::povm_sampling::{embed_pvm, PovmSampler};
use bell_steering::sphere_quad::{integrate_mc, SphereGrid, SphereSampler};
use bell_steering::FourVector;
use nalgebra::Vector3;

/// Tolerances, one per measured quantity, as fixed by the acceptance criteria.
mod tol {
    use std::time::Duration;

    /// Relative error of quadrature `R_T` against a closed form.
    pub const RT_REL: f64 = 1e-4;
    /// Absolute error of `R_T` at the two threshold states.
    pub const RT_BOUNDARY: f64 = 1e-4;
    /// Per-component error of the PVM simulated conditional states.
    pub const PVM_COMPONENT: f64 = 1e-4;
    /// Per-component error of the POVM simulated conditional states.
    pub const POVM_COMPONENT: f64 = 1e-3;
    /// Error of the scalar part `α_i/2` of the POVM simulated states.
    pub const POVM_SCALAR: f64 = 1e-6;
    /// Lowest admissible response value.
    pub const RESPONSE_FLOOR: f64 = -1e-12;
    /// Normalization error of `Σ G_i` and `Σ γ_i`.
    pub const NORMALIZATION: f64 = 1e-12;
    /// Quadrature `u, v, t` against their closed forms, per component.
    pub const UVT_COMPONENT: f64 = 1e-4;
    /// Parallelism of `u`, `v` and their 3:2 length ratio.
    pub const UV_SHAPE: f64 = 1e-6;
    /// `|Σ α_i t_i|`.
    pub const T_BALANCE: f64 = 1e-10;
    /// Quadrature vs Monte Carlo, in standard errors.
    pub const MC_SIGMAS: f64 = 3.0;
    /// Gap below 6/5 required of the non-optimality witness.
    pub const WITNESS_GAP: f64 = 1e-3;
    /// Diagonal-ray surface points against `(1/2)·1` and `(5/12)·1`.
    pub const SURFACE_DIAGONAL: f64 = 1e-4;

    pub const WERNER_RUNTIME: Duration = Duration::from_secs(10);
    pub const AXIAL_RUNTIME: Duration = Duration::from_secs(60);
    pub const POVM_RUNTIME: Duration = Duration::from_secs(300);
}

const MC_SAMPLES: usize = 1_000_000;
const RESPONSE_POINTS: usize = 100_000;
const SURFACE_RESOLUTION: usize = 32;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

fn max_component(v: &FourVector) -> f64 {
    v.max_abs()
}

/// The POVM corpus of criteria 5 and 6: 100 seeded `(T, POVM)` pairs.
fn povm_corpus() -> Vec<(CorrelationMatrix, Povm)> {
    let mut rng = common::rng(5);
    let mut sampler = PovmSampler::new(5);
    (0..100)
        .map(|_| {
            let t = common::physical_diagonal(&mut rng);
            (t, sampler.sample_povm().expect("sampler budget"))
        })
        .collect()
}

fn werner_closed_form(grid: &SphereGrid) -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for k in 1..=10 {
        let p = k as f64 / 10.0;
        let t = CorrelationMatrix::werner(p).unwrap();
        let exact = rt_werner(p).unwrap();
        let r = compute_rt(&t, grid).unwrap().r_t;
        worst = worst.max((r - exact).abs() / exact);
    }
    let elapsed = start.elapsed();
    Verdict::new(
        worst <= tol::RT_REL && elapsed <= tol::WERNER_RUNTIME,
        format!(
            "max rel err {worst:.2e} (≤ {:.0e}), {:.2?} (≤ {:?})",
            tol::RT_REL,
            elapsed,
            tol::WERNER_RUNTIME
        ),
    )
}

fn boundary_constants(grid: &SphereGrid) -> Verdict {
    let half = compute_rt(&CorrelationMatrix::werner(0.5).unwrap(), grid).unwrap().r_t;
    let barrett = compute_rt(&CorrelationMatrix::werner(5.0 / 12.0).unwrap(), grid)
        .unwrap()
        .r_t;
    let e1 = (half - 1.0).abs();
    let e2 = (barrett - 1.2).abs();
    Verdict::new(
        e1 <= tol::RT_BOUNDARY && e2 <= tol::RT_BOUNDARY,
        format!(
            "R(1/2) = {half:.10} (err {e1:.1e}), R(5/12) = {barrett:.10} (err {e2:.1e}), tol {:.0e}",
            tol::RT_BOUNDARY
        ),
    )
}

fn axial_closed_form(grid: &SphereGrid) -> Verdict {
    let start = Instant::now();
    let mut rng = common::rng(3);
    let (mut worst, mut above, mut below) = (0.0f64, 0, 0);
    for _ in 0..50 {
        let (t, s, u) = common::physical_axial(&mut rng);
        if s > u {
            above += 1;
        } else {
            below += 1;
        }
        let exact = rt_axial(s, u).unwrap();
        let r = compute_rt(&t, grid).unwrap().r_t;
        worst = worst.max((r - exact).abs() / exact);
    }
    let elapsed = start.elapsed();
    Verdict::new(
        worst <= tol::RT_REL && above > 0 && below > 0 && elapsed <= tol::AXIAL_RUNTIME,
        format!(
            "max rel err {worst:.2e} (≤ {:.0e}), |x|>1: {above}, |x|<1: {below}, {elapsed:.2?} (≤ {:?})",
            tol::RT_REL,
            tol::AXIAL_RUNTIME
        ),
    )
}

fn pvm_identity(grid: &SphereGrid) -> Verdict {
    let mut rng = common::rng(4);
    let mut worst = 0.0f64;
    for k in 0..50 {
        let t = common::physical_diagonal(&mut rng);
        let e = common::direction(400 + k);
        let povm = embed_pvm(&e).unwrap();
        let report = LhsModel::new(t, grid).unwrap().verify_simulation(&povm, grid).unwrap();
        for o in &report.outcomes {
            worst = worst.max(max_component(&(o.simulated - o.target)));
        }
    }
    Verdict::new(
        worst <= tol::PVM_COMPONENT,
        format!("50 cases, max component err {worst:.2e} (≤ {:.0e})", tol::PVM_COMPONENT),
    )
}

fn povm_identity(corpus: &[(CorrelationMatrix, Povm)], grid: &SphereGrid) -> Verdict {
    let start = Instant::now();
    let (mut worst, mut worst_scalar) = (0.0f64, 0.0f64);
    for (t, povm) in corpus {
        let report = LhsModel::new(*t, grid).unwrap().verify_simulation(povm, grid).unwrap();
        for o in &report.outcomes {
            let d = o.simulated - o.target;
            worst = worst.max(max_component(&d));
            worst_scalar = worst_scalar.max(d.x0.abs());
        }
    }
    let elapsed = start.elapsed();
    Verdict::new(
        worst <= tol::POVM_COMPONENT && worst_scalar <= tol::POVM_SCALAR && elapsed <= tol::POVM_RUNTIME,
        format!(
            "{} pairs, max component err {worst:.2e} (≤ {:.0e}), max scalar err {worst_scalar:.2e} (≤ {:.0e}), {elapsed:.2?} (≤ {:?})",
            corpus.len(),
            tol::POVM_COMPONENT,
            tol::POVM_SCALAR,
            tol::POVM_RUNTIME
        ),
    )
}

fn response_validity(corpus: &[(CorrelationMatrix, Povm)], grid: &SphereGrid) -> Verdict {
    let (mut min_g, mut g_sum_err, mut gamma_sum_err) = (f64::INFINITY, 0.0f64, 0.0f64);
    let (mut c_lo, mut c_hi, mut min_gamma) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
    for (k, (t, povm)) in corpus.iter().enumerate() {
        let model = LhsModel::new(*t, grid).unwrap();
        // the raw c_i, before the clamp applied inside the response
        for f in povm.effects() {
            let c = model.softened_moment(&f.e, grid).unwrap().x0;
            c_lo = c_lo.min(c);
            c_hi = c_hi.max(c);
        }
        let resp = model.build_povm_response(povm, grid).unwrap();
        min_gamma = resp.gamma.iter().copied().fold(min_gamma, f64::min);
        gamma_sum_err = gamma_sum_err.max((resp.gamma.iter().sum::<f64>() - 1.0).abs());
        for n in SphereSampler::new(6000 + k as u64).take(RESPONSE_POINTS) {
            let g = resp.responses(&n);
            min_g = g.iter().copied().fold(min_g, f64::min);
            g_sum_err = g_sum_err.max((g.iter().sum::<f64>() - 1.0).abs());
        }
    }
    let pass = min_g >= tol::RESPONSE_FLOOR
        && g_sum_err <= tol::NORMALIZATION
        && c_lo >= -CI_TOL
        && c_hi <= 0.5 + CI_TOL
        && min_gamma >= 0.0
        && gamma_sum_err <= tol::NORMALIZATION;
    Verdict::new(
        pass,
        format!(
            "min G {min_g:.2e}, max |ΣG-1| {g_sum_err:.1e}, c ∈ [{c_lo:.4}, {c_hi:.4}], min γ {min_gamma:.3e}, max |Σγ-1| {gamma_sum_err:.1e}"
        ),
    )
}

fn uvt_closed_forms(grid: &SphereGrid) -> Verdict {
    let mut rng = common::rng(7);
    let (mut worst, mut worst_par, mut worst_ratio) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..50 {
        let t = common::physical_diagonal(&mut rng);
        let e = common::direction(700 + k);
        let model = LhsModel::new(t, grid).unwrap();
        let q = model.quadrature_uvt(&e, grid).unwrap();
        let c = model.closed_form_uvt(&e);
        for (a, b) in [(q.u, c.u), (q.v, c.v), (q.t, c.t)] {
            worst = worst.max((a - b).amax());
        }
        worst_par = worst_par.max(q.u.cross(&q.v).norm() / (q.u.norm() * q.v.norm()));
        worst_ratio = worst_ratio.max((q.u.norm() / q.v.norm() - 1.5).abs());
    }

    let mut rng = common::rng(8);
    let mut sampler = PovmSampler::new(8);
    let mut worst_balance = 0.0f64;
    for _ in 0..50 {
        let t = common::physical_diagonal(&mut rng);
        let povm = sampler.sample_povm().unwrap();
        let model = LhsModel::new(t, grid).unwrap();
        let sum: Vector3<f64> = povm
            .effects()
            .iter()
            .map(|f| model.closed_form_uvt(&f.e).t * f.alpha)
            .sum();
        worst_balance = worst_balance.max(sum.norm());
    }
    Verdict::new(
        worst <= tol::UVT_COMPONENT
            && worst_par <= tol::UV_SHAPE
            && worst_ratio <= tol::UV_SHAPE
            && worst_balance <= tol::T_BALANCE,
        format!(
            "max component err {worst:.2e} (≤ {:.0e}), sin∠(u,v) {worst_par:.1e}, ||u|/|v|-3/2| {worst_ratio:.1e} (≤ {:.0e}), |Σαt| {worst_balance:.1e} (≤ {:.0e})",
            tol::UVT_COMPONENT,
            tol::UV_SHAPE,
            tol::T_BALANCE
        ),
    )
}

/// Appends the per-component z-scores `(quadrature - mc) / stderr`.
fn push_z(z: &mut Vec<f64>, quad: &[f64], est: &[f64], stderr: &[f64]) {
    z.extend(quad.iter().zip(est).zip(stderr).map(|((q, e), s)| (q - e) / s));
}

fn quadrature_vs_mc(grid: &SphereGrid) -> Verdict {
    let mut rng = common::rng(9);
    let mut sampler = PovmSampler::new(9);
    let mut z = Vec::new();
    for case in 0..10u64 {
        let t = common::physical_diagonal(&mut rng);
        let povm = sampler.sample_povm().unwrap();
        let model = LhsModel::new(t, grid).unwrap();
        let n_t = model.n_t();
        let inv = t.inverse();
        let seed = 9000 + 10 * case;

        // N_T through its defining integral ∫ (nᵀT⁻²n)⁻² dS = 1/N_T
        let mc = integrate_mc(seed, MC_SAMPLES, |n| {
            let q = (inv * n).norm_squared();
            1.0 / (q * q)
        })
        .unwrap();
        push_z(&mut z, &[1.0 / n_t], &[mc.estimate], &[mc.stderr]);

        for (i, f) in povm.effects().iter().enumerate() {
            let q = model.quadrature_uvt(&f.e, grid).unwrap();
            let m = inv * f.e;
            // (u, v) packed as the vector parts of two four-vectors
            let mc_u = integrate_mc(seed + 1 + i as u64, MC_SAMPLES, |n| {
                let s = m.dot(n);
                if s <= 0.0 {
                    return FourVector::zero();
                }
                let q = (inv * n).norm_squared();
                FourVector::new(0.0, n * (0.5 * n_t / (q * q)))
            })
            .unwrap();
            let mc_v = integrate_mc(seed + 5 + i as u64, MC_SAMPLES, |n| {
                let s = m.dot(n);
                if s <= 0.0 {
                    return FourVector::zero();
                }
                let q = (inv * n).norm_squared();
                FourVector::new(0.0, n * (0.5 * n_t * s / (q * q * q.sqrt())))
            })
            .unwrap();
            push_z(&mut z, q.u.as_slice(), mc_u.estimate.x.as_slice(), mc_u.stderr.x.as_slice());
            push_z(&mut z, q.v.as_slice(), mc_v.estimate.x.as_slice(), mc_v.stderr.x.as_slice());
        }
    }
    // Each comparison is a unit-variance Gaussian draw when the quadrature is
    // exact; the rms and the 2σ tail are reported so that a failure can be
    // told apart from a biased integral.
    let n = z.len() as f64;
    let worst = z.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let rms = (z.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
    let beyond = |k: f64| z.iter().filter(|x| x.abs() > k).count();
    Verdict::new(
        worst <= tol::MC_SIGMAS,
        format!(
            "10 cases, {} comparisons at {MC_SAMPLES} samples, max deviation {worst:.2}σ (≤ {}σ); z rms {rms:.3}, {:.1}% beyond 2σ, {} beyond 3σ",
            z.len(),
            tol::MC_SIGMAS,
            100.0 * beyond(2.0) as f64 / n,
            beyond(tol::MC_SIGMAS)
        ),
    )
}

fn non_optimality_witness(grid: &SphereGrid) -> Verdict {
    let t = CorrelationMatrix::diagonal(-0.9, -0.05, -0.05).unwrap();
    let c = classify_state(&t, grid).unwrap();
    let [a, b, d] = c.s;
    let pass = c.separable && is_separable(a, b, d) && c.r_t < POVM_THRESHOLD - tol::WITNESS_GAP;
    Verdict::new(
        pass,
        format!(
            "s = ({a}, {b}, {d}): separable = {}, R_T = {:.6} (< {})",
            c.separable,
            c.r_t,
            POVM_THRESHOLD - tol::WITNESS_GAP
        ),
    )
}

fn outer_matrix(inner: [f64; 3]) -> nalgebra::Matrix3<f64> {
    nalgebra::Matrix3::from_diagonal(&Vector3::from(inner.map(|c| -c * POVM_THRESHOLD)))
}

fn surface_reproduction(grid: &SphereGrid) -> Verdict {
    let pvm = surface_grid(SURFACE_RESOLUTION, 1.0, grid, RayMethod::Scaling).unwrap();
    let povm = surface_grid(SURFACE_RESOLUTION, POVM_THRESHOLD, grid, RayMethod::Scaling).unwrap();
    let present = |g: &bell_steering::classify::SurfaceGrid| g.records.iter().filter(|r| r.point.is_some()).count();
    let (n1, n65) = (present(&pvm), present(&povm));

    let diag_err = |g: &bell_steering::classify::SurfaceGrid, x: f64| {
        g.records
            .last()
            .and_then(|r| r.point)
            .map_or(f64::INFINITY, |p| p.iter().map(|c| (c - x).abs()).fold(0.0, f64::max))
    };
    let (d1, d65) = (diag_err(&pvm, 0.5), diag_err(&povm, 5.0 / 12.0));

    let norm = |p: [f64; 3]| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    let mut violations = 0;
    for (a, b) in pvm.records.iter().zip(&povm.records) {
        if let Some(inner) = b.point {
            match a.point {
                Some(outer) if norm(inner) <= norm(outer) => {}
                // a missing outer point is only consistent when that ray
                // leaves the physical region before reaching R_T = 1
                None if !is_physical(&outer_matrix(inner)) => {}
                _ => violations += 1,
            }
        }
    }
    let outside = povm
        .records
        .iter()
        .filter_map(|r| r.point)
        .filter(|p| !in_prior_hull(p[0], p[1], p[2]))
        .count();

    Verdict::new(
        n1 > 0 && n65 > 0 && d1 <= tol::SURFACE_DIAGONAL && d65 <= tol::SURFACE_DIAGONAL && violations == 0 && outside > 0,
        format!(
            "{} rays, points: {n1} at R=1, {n65} at R=6/5; diagonal err {d1:.1e}, {d65:.1e} (≤ {:.0e}); nesting violations {violations}; 6/5 points outside prior hull {outside}",
            pvm.records.len(),
            tol::SURFACE_DIAGONAL
        ),
    )
}

fn main() -> ExitCode {
    let grid = SphereGrid::default_grid();
    let corpus = povm_corpus();
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        ("AC1 Werner closed form", Box::new(|| werner_closed_form(&grid))),
        ("AC2 boundary constants", Box::new(|| boundary_constants(&grid))),
        ("AC3 axial closed form", Box::new(|| axial_closed_form(&grid))),
        ("AC4 PVM simulation identity", Box::new(|| pvm_identity(&grid))),
        ("AC5 POVM simulation identity", Box::new(|| povm_identity(&corpus, &grid))),
        ("AC6 response validity", Box::new(|| response_validity(&corpus, &grid))),
        ("AC7 u, v, t closed forms", Box::new(|| uvt_closed_forms(&grid))),
        ("AC8 quadrature vs Monte Carlo", Box::new(|| quadrature_vs_mc(&grid))),
        ("AC9 non-optimality witness", Box::new(|| non_optimality_witness(&grid))),
        ("AC10 level surfaces", Box::new(|| surface_reproduction(&grid))),
    ];

    let mut failed = 0;
    let total = Instant::now();
    println!("\nrunning {} acceptance criteria", criteria.len());
    for (name, check) in &criteria {
        let start = Instant::now();
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!(
            "{} {name:<32} [{:>7.2?}] {}",
            if v.pass { "PASS" } else { "FAIL" },
            start.elapsed(),
            v.detail
        );
    }
    let elapsed: Duration = total.elapsed();
    println!(
        "\nacceptance result: {}. {} passed; {failed} failed; finished in {elapsed:.2?}\n",
        if failed == 0 { "ok" } else { "FAILED" },
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
