use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::Result;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use esmap::arith::{gcd, mod_inverse};
use esmap::cusps::enumerate_omega_c;
use esmap::form::{hecke_relations_hold, verify_coefficient_bounds};
use esmap::kloosterman::{kloosterman_sum, moduli_partial_sums, ramanujan_sum, weil_table};
use esmap::ltwist::{completed_lambdas, ltwist_cusp, ltwist_series, CuspEvaluator};
use esmap::moments::{
    distribution_from_periods, ks_distance, lfab_diagonal, lfab_quadrature, project_limit, reports_from_periods,
    sample_limit_law, MomentSpec, Projection,
};
use esmap::periods::{
    normalized_periods_over, period_quadrature_vector, period_vector, s_relation_residual, sigma_poly,
    u_relation_residual, verify_cocycle, NormalizationConvention,
};
use esmap::zeros::{localization_scale, nonvanishing_check, zero_sweep};
use esmap::{Cusp, Exec, GammaMatrix, QExpansion};

use crate::commands::{form_for, pick_cusps};
use crate::config::VerifyArgs;
use crate::output::{fl, Check, Run};

/// `zeta(5/2)^2 - 1`, the trivial bound on the tail of `L(f (x) e(x), k-1)` for `k >= 6`.
const NONVANISHING_BOUND: f64 = 0.7996;

struct Sizes {
    series_cmax: i64,
    fe_cusps: usize,
    matrix_entry: i64,
    pairs: usize,
    oracle_cusps: usize,
    oracle_cmax: i64,
    zero_c: i64,
    zero_cusps: usize,
    grid: usize,
    weil_cmax: i64,
    ramanujan_cmax: i64,
    cancellation_x: i64,
    moment_c: i64,
}

impl Sizes {
    fn new(quick: bool) -> Self {
        if quick {
            Sizes {
                series_cmax: 12,
                fe_cusps: 10,
                matrix_entry: 10,
                pairs: 10,
                oracle_cusps: 3,
                oracle_cmax: 30,
                zero_c: 101,
                zero_cusps: 5,
                grid: 200,
                weil_cmax: 300,
                ramanujan_cmax: 100,
                cancellation_x: 10_000,
                moment_c: 251,
            }
        } else {
            Sizes {
                series_cmax: 30,
                fe_cusps: 40,
                matrix_entry: 20,
                pairs: 40,
                oracle_cusps: 8,
                oracle_cmax: 100,
                zero_c: 251,
                zero_cusps: 20,
                grid: 1000,
                weil_cmax: 2000,
                ramanujan_cmax: 500,
                cancellation_x: 10_000,
                moment_c: 503,
            }
        }
    }
}

fn random_cusp(rng: &mut ChaCha8Rng, cmax: i64, level: u64) -> Cusp {
    let level = level as i64;
    loop {
        let c = level * rng.gen_range(1..=(cmax / level).max(1));
        let a = rng.gen_range(0..c);
        if gcd(a, c) == 1 {
            return Cusp::new(a, c).expect("reduced");
        }
    }
}

/// A matrix in `Gamma_0(level)` with entries in `[-bound, bound]`.
fn random_matrix(rng: &mut ChaCha8Rng, bound: i64, level: u64) -> GammaMatrix {
    let lv = level as i64;
    loop {
        let c = lv * rng.gen_range(-bound / lv..=bound / lv);
        let d: i64 = rng.gen_range(-bound..=bound);
        if gcd(c, d) != 1 {
            continue;
        }
        if c == 0 {
            return GammaMatrix::new(d, rng.gen_range(-bound..=bound), 0, d, level).expect("unimodular");
        }
        let m = c.abs();
        let a0 = mod_inverse(d.rem_euclid(m), m).expect("coprime");
        let choices: Vec<(i64, i64)> = (-(bound / m) - 1..=bound / m + 1)
            .map(|t| a0 + t * m)
            .filter(|a| a.abs() <= bound && (a * d - 1) % c == 0)
            .map(|a| (a, (a * d - 1) / c))
            .filter(|(_, b)| b.abs() <= bound)
            .collect();
        if choices.is_empty() {
            continue;
        }
        let (a, b) = choices[rng.gen_range(0..choices.len())];
        return GammaMatrix::new(a, b, c, d, level).expect("unimodular");
    }
}

fn series_vs_afe(f: &QExpansion, cmax: i64) -> Result<Check> {
    let k = f.weight();
    let s = Complex64::new(f64::from(k) - 1.0, 0.0);
    let mut worst = 0.0f64;
    let mut count = 0;
    let level = f.level() as i64;
    for c in (level..=cmax).step_by(level as usize) {
        for cusp in enumerate_omega_c(c) {
            let a = ltwist_series(f, cusp.value(), s, 1e-12)?.value;
            let b = ltwist_cusp(f, &cusp, k - 1, 1e-13)?.value;
            worst = worst.max((a - b).norm());
            count += 1;
        }
    }
    Ok(Check::at_most("ltwist: series vs functional-equation path", worst, 1e-9, format!("{count} cusps, c <= {cmax}")))
}

fn functional_equation(f: &QExpansion, rng: &mut ChaCha8Rng, n: usize, sign: i8) -> Result<Check> {
    let k = f.weight();
    let mut worst = 0.0f64;
    for _ in 0..n {
        let cusp = random_cusp(rng, 200, f.level());
        let eval = CuspEvaluator::new(f, cusp.c, sign, 0.0, 1e-14)?;
        let here = completed_lambdas(&eval, &cusp);
        let there = completed_lambdas(&eval, &cusp.dual_cusp());
        for s in 1..k {
            let lhs = here[(s - 1) as usize];
            let rhs = there[(k - s - 1) as usize] * f64::from(sign);
            worst = worst.max((lhs - rhs).norm() / lhs.norm().max(rhs.norm()));
        }
    }
    Ok(Check::at_most("ltwist: functional equation", worst, 1e-9, format!("{n} cusps, c <= 200, eps = {sign}")))
}

fn cocycle(f: &QExpansion, rng: &mut ChaCha8Rng, sz: &Sizes) -> Result<Vec<Check>> {
    let mut worst = 0.0f64;
    for _ in 0..sz.pairs {
        let g1 = random_matrix(rng, sz.matrix_entry, f.level());
        let g2 = random_matrix(rng, sz.matrix_entry, f.level());
        worst = worst.max(verify_cocycle(f, &g1, &g2, 1e-13)?);
    }
    let mut out = vec![Check::at_most(
        "periods: cocycle relation",
        worst,
        1e-8,
        format!("{} pairs, entries <= {}", sz.pairs, sz.matrix_entry),
    )];
    let mut parabolic = 0.0f64;
    for n in -5..=5 {
        parabolic = parabolic.max(sigma_poly(f, &GammaMatrix::translation(n, f.level()), 1e-13)?.max_abs());
    }
    out.push(Check::at_most("periods: parabolic (translations)", parabolic, 0.0, "n in -5..=5"));
    if f.level() == 1 {
        out.push(Check::at_most("periods: S relation", s_relation_residual(f, 1e-13)?, 1e-8, ""));
        out.push(Check::at_most("periods: U relation", u_relation_residual(f, 1e-13)?, 1e-8, "U = ST"));
    }
    Ok(out)
}

fn period_oracle(f: &QExpansion, rng: &mut ChaCha8Rng, sz: &Sizes) -> Result<Check> {
    let mut worst = 0.0f64;
    for _ in 0..sz.oracle_cusps {
        let cusp = random_cusp(rng, sz.oracle_cmax, f.level());
        let u = period_vector(f, &cusp, 1e-14)?;
        let q = period_quadrature_vector(f, &cusp)?;
        for (l, qv) in q.values.iter().enumerate() {
            worst = worst.max((u.entries[l] - qv).norm() / q.l1_norms[l]);
        }
    }
    Ok(Check::at_most(
        "periods: quadrature oracle",
        worst,
        1e-7,
        format!("{} cusps, c <= {}, relative to integrand L1 norm", sz.oracle_cusps, sz.oracle_cmax),
    ))
}

fn zero_localization(f: &QExpansion, sz: &Sizes, seed: u64) -> Result<Check> {
    let k = f.weight();
    let c = sz.zero_c * f.level() as i64;
    let cusps = pick_cusps(c, Some(sz.zero_cusps), seed);
    let reps = zero_sweep(f, c, &cusps, Exec::default())?;
    let mut ok = true;
    let mut max_ratio = 0.0f64;
    for rep in &reps {
        ok &= rep.roots.len() == (k - 2) as usize && rep.residuals_ok;
        max_ratio = max_ratio.max(rep.max_normalized_ratio());
        let bound = 3.0 * localization_scale(k, rep.cusp.value(), c);
        ok &= rep.deviations.iter().all(|d| *d <= bound);
    }
    let mut check = Check::flag(
        "zeros: localization",
        ok,
        format!("{} cusps at c = {c}, max normalized ratio {max_ratio:.4}", reps.len()),
    );
    check.value = max_ratio;
    check.threshold = 3.0;
    Ok(check)
}

fn kloosterman_checks(sz: &Sizes) -> Vec<Check> {
    let table = weil_table(sz.weil_cmax, 10, 10, Exec::default());
    let violations = table.iter().filter(|w| !w.holds()).count();
    let mut out = vec![Check::at_most(
        "kloosterman: weil bound",
        violations as f64,
        0.0,
        format!("{} triples, c <= {}", table.len(), sz.weil_cmax),
    )];
    let mut ok = true;
    for c in 1..=sz.ramanujan_cmax {
        for m in 0..=20 {
            let v = kloosterman_sum(m, 0, c);
            ok &= v.value.re.round() as i64 == ramanujan_sum(m, c) && (v.value.re - ramanujan_sum(m, c) as f64).abs() <= v.rounding_error;
        }
    }
    out.push(Check::flag("kloosterman: ramanujan sums", ok, format!("c <= {}, m <= 20", sz.ramanujan_cmax)));
    let x = sz.cancellation_x;
    let rows = moduli_partial_sums(1, 1, x, 1, Exec::default());
    let ratio = rows.last().map_or(f64::NAN, |r| r.partial_sum.abs()) / (x as f64 * x as f64);
    out.push(Check::at_most("kloosterman: cancellation over moduli", ratio, 0.01, format!("|sum_(c<={x}) S(1,1;c)| / X^2")));
    out
}

fn moment_oracle(f: &QExpansion) -> Result<Check> {
    let k = f.weight();
    let mut worst = 0.0f64;
    for text in ["a0=1,b0=1", "a0=2,b0=1"] {
        let spec = MomentSpec::parse(text, k)?;
        let d = lfab_diagonal(f, &spec, 1e-12)?.value;
        let q = lfab_quadrature(f, &spec, 1 << 14, Exec::default())?;
        worst = worst.max((d - q).norm());
    }
    Ok(Check::at_most("moments: diagonal vs quadrature", worst, 1e-6, "totals (1,1), (2,1)"))
}

fn moments_and_law(f: &QExpansion, sz: &Sizes) -> Result<Vec<Check>> {
    let k = f.weight();
    let conv = NormalizationConvention::calibrated(f)?;
    let c = sz.moment_c * f.level() as i64;
    let periods = normalized_periods_over(f, c, &conv, Exec::default())?;
    let specs = [MomentSpec::single(k, 0, 1, 1)?, MomentSpec::single(k, 0, 1, 0)?];
    let reps = reports_from_periods(f, c, &periods, &specs, &conv)?;
    let limit = sample_limit_law(f, 10_000, 1, &conv, Exec::default())?;
    let d = distribution_from_periods(c, &periods, Projection::Re(0), 50);
    let ks = ks_distance(&d.values, &project_limit(&limit, Projection::Re(0)));
    Ok(vec![
        Check::at_most("moments: second moment main term", reps[0].abs_error, 0.05, format!("spec a0=1,b0=1 at c = {c}")),
        Check::at_most("moments: first moment", reps[1].empirical.norm(), 0.1, format!("spec a0=1 at c = {c}")),
        Check::at_most("dist: ks distance to limit law", ks, 0.05, format!("re0 at c = {c}, 10000-point limit grid")),
    ])
}

fn stage(
    timing: &mut BTreeMap<String, f64>,
    name: &str,
    run: &mut Run,
    body: impl FnOnce() -> Result<Vec<Check>>,
) -> Result<()> {
    let t = Instant::now();
    let checks = body()?;
    timing.insert(name.to_string(), t.elapsed().as_secs_f64());
    for c in &checks {
        println!("[{}] {:<44} {} {}", if c.pass { "PASS" } else { "FAIL" }, c.name, fl(c.value), c.detail);
    }
    run.checks.extend(checks);
    Ok(())
}

pub fn verify(args: &VerifyArgs, run: &mut Run) -> Result<()> {
    let f = form_for(&args.common, run)?;
    let sz = Sizes::new(args.quick);
    let seed = args.common.seed;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut timing = BTreeMap::new();
    let eigen = f.is_normalized_eigenform();
    if eigen {
        stage(&mut timing, "coefficients", run, || {
            let rep = verify_coefficient_bounds(&f);
            Ok(vec![
                Check::flag("coefficients: deligne bound (exact)", rep.deligne_exact_ok, format!("n <= {}", f.truncation())),
                Check::flag("coefficients: hecke relations (exact)", hecke_relations_hold(&f), ""),
            ])
        })?;
    }
    let cal = esmap::ltwist::calibrate_fe_sign(&f)?;
    if let Some(info) = run.form.as_mut() {
        info.fe_sign = Some(cal.sign);
    }
    run.note("fe_sign_matches_i_pow_k", cal.matches_i_pow_k);
    run.note("fe_sign_matches_minus_one_pow_k", cal.matches_minus_one_pow_k);
    stage(&mut timing, "ltwist", run, || {
        Ok(vec![series_vs_afe(&f, sz.series_cmax)?, functional_equation(&f, &mut rng, sz.fe_cusps, cal.sign)?])
    })?;
    stage(&mut timing, "cocycle", run, || cocycle(&f, &mut rng, &sz))?;
    stage(&mut timing, "period oracle", run, || Ok(vec![period_oracle(&f, &mut rng, &sz)?]))?;
    if eigen && f.weight() >= 6 {
        stage(&mut timing, "zeros", run, || Ok(vec![zero_localization(&f, &sz, seed)?]))?;
        stage(&mut timing, "nonvanishing", run, || {
            let rep = nonvanishing_check(&f, sz.grid, Exec::default())?;
            Ok(vec![Check::at_most(
                "nonvanishing: |L(f(x)e(x), k-1) - e(x)|",
                rep.max_tail,
                NONVANISHING_BOUND,
                format!("{}-point grid, min |L| {:.4}", sz.grid, rep.min_abs),
            )])
        })?;
    }
    stage(&mut timing, "kloosterman", run, || Ok(kloosterman_checks(&sz)))?;
    stage(&mut timing, "moment oracle", run, || Ok(vec![moment_oracle(&f)?]))?;
    stage(&mut timing, "moments and limit law", run, || moments_and_law(&f, &sz))?;
    run.note("stage_seconds", &timing);

    let rows: Vec<Vec<String>> = run
        .checks
        .iter()
        .map(|c| vec![c.name.clone(), fl(c.value), fl(c.threshold), c.pass.to_string()])
        .collect();
    run.csv("verify.csv", &["check", "value", "threshold", "pass"], rows)?;
    let failed = run.checks.iter().filter(|c| !c.pass).count();
    println!("{} of {} checks passed", run.checks.len() - failed, run.checks.len());
    Ok(())
}
