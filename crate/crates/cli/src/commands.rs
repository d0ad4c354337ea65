use anyhow::{bail, Result};
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use esmap::cusps::{cusp_matrix, enumerate_omega_c};
use esmap::form::{hecke_relations_hold, save_form, verify_coefficient_bounds};
use esmap::kloosterman::{moduli_partial_sums, totient_sum, weil_check, weil_table, WeilCheck};
use esmap::ltwist::{completed_lambdas, fe_sign, ltwist_series, CuspEvaluator};
use esmap::moments::{
    distribution_from_periods, empirical_moments, ks_distance, loglog_slope, project_limit, sample_limit_law,
};
use esmap::periods::{
    normalized_period_vector, normalized_periods_over, period_polynomial, period_quadrature_vector, period_vector,
};
use esmap::zeros::{localization_scale, zero_sweep};
use esmap::{Cusp, Exec, QExpansion};

use crate::config::{
    check_moduli, parse_projection, parse_specs, DistArgs, FormArgs, KloostermanArgs, LtwistArgs, MomentsArgs,
    PeriodsArgs, ZerosArgs,
};
use crate::output::{cplx, fl, Check, FormInfo, Run};
use crate::UsageError;

/// Loads the form and records it in the manifest.
pub fn form_for(common: &crate::config::Common, run: &mut Run) -> Result<QExpansion> {
    let f = common.load_form()?;
    run.form = Some(FormInfo::new(&common.form, &f));
    Ok(f)
}

fn record_sign(run: &mut Run, f: &QExpansion) -> Result<i8> {
    let sign = fe_sign(f)?;
    if let Some(info) = run.form.as_mut() {
        info.fe_sign = Some(sign);
    }
    Ok(sign)
}

/// `count` distinct cusps of `Omega_c` in increasing order, or all of them.
pub fn pick_cusps(c: i64, count: Option<usize>, seed: u64) -> Vec<Cusp> {
    let all = enumerate_omega_c(c);
    match count {
        Some(n) if n < all.len() => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (c as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let mut idx = sample(&mut rng, all.len(), n).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| all[i]).collect()
        }
        _ => all,
    }
}

fn weil_row(w: &WeilCheck) -> Vec<String> {
    vec![
        w.value.m.to_string(),
        w.value.n.to_string(),
        w.value.c.to_string(),
        fl(w.value.value.re),
        fl(w.bound),
        fl(w.slack),
    ]
}

fn joined(v: &[u32]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

pub fn form(args: &FormArgs, run: &mut Run) -> Result<()> {
    let f = form_for(&args.common, run)?;
    let rep = verify_coefficient_bounds(&f);
    let text = f.to_text();
    std::fs::write(run.path("form.txt"), &text)?;
    run.artifact("form.txt", f.truncation());
    if let Some(path) = &args.export {
        save_form(&f, path)?;
    }
    let k = f64::from(f.weight());
    run.csv(
        "coefficients.csv",
        &["n", "a_n", "deligne_ratio"],
        (1..=f.truncation()).map(|n| {
            let ratio = f.coeff_f64(n).abs() / (f64::from(f.num_divisors(n)) * (n as f64).powf((k - 1.0) / 2.0));
            vec![n.to_string(), f.coeff(n).to_string(), fl(ratio)]
        }),
    )?;
    run.note("deligne_ratio", rep.deligne_ratio);
    run.note("deligne_argmax", rep.deligne_argmax);
    run.note("hecke_ratio", rep.hecke_ratio);
    run.note("hecke_argmax", rep.hecke_argmax);
    if f.is_normalized_eigenform() {
        run.checks.push(Check::flag(
            "deligne bound (exact)",
            rep.deligne_exact_ok,
            format!("max ratio {:.6} at n = {}", rep.deligne_ratio, rep.deligne_argmax),
        ));
        run.checks.push(Check::flag("hecke relations (exact)", hecke_relations_hold(&f), ""));
    }
    Ok(())
}

pub fn ltwist(args: &LtwistArgs, run: &mut Run) -> Result<()> {
    let f = form_for(&args.common, run)?;
    let k = f.weight();
    let tol = args.common.tol;
    if let Some(x) = args.x {
        let s = args.s.unwrap_or(f64::from(k) - 1.0);
        let l = ltwist_series(&f, x, Complex64::new(s, 0.0), tol)?;
        let [re, im] = cplx(l.value);
        run.csv(
            "ltwist_series.csv",
            &["x", "s", "re_L", "im_L", "tail_bound"],
            [vec![fl(x), fl(s), re, im, fl(l.abs_tail_bound)]],
        )?;
        return Ok(());
    }
    if args.cusp.is_empty() {
        bail!(UsageError("ltwist needs --cusp a/c or --x".into()));
    }
    let only = match args.s {
        None => None,
        Some(s) if s.fract() == 0.0 && s >= 1.0 && s <= f64::from(k - 1) => Some(s as u32),
        Some(s) => bail!(UsageError(format!("--s at a cusp must be an integer in 1..={}, got {s}", k - 1))),
    };
    let sign = record_sign(run, &f)?;
    let mut rows = Vec::new();
    let mut worst_fe = 0.0f64;
    for cusp in &args.cusp {
        check_moduli(&[cusp.c], f.level())?;
        let eval = CuspEvaluator::new(&f, cusp.c, sign, 0.0, tol)?;
        let vals = eval.lvalues_at(cusp);
        let here = completed_lambdas(&eval, cusp);
        let there = completed_lambdas(&eval, &cusp.dual_cusp());
        for s in 1..k {
            let i = (s - 1) as usize;
            let rhs = there[(k - s - 1) as usize] * f64::from(sign);
            let fe = (here[i] - rhs).norm() / here[i].norm().max(rhs.norm());
            worst_fe = worst_fe.max(fe);
            if only.is_some_and(|o| o != s) {
                continue;
            }
            let envelope = (cusp.c as f64).powf((f64::from(k) - 2.0 * f64::from(s)).max(0.0));
            let [re, im] = cplx(vals[i]);
            rows.push(vec![
                cusp.a.to_string(),
                cusp.c.to_string(),
                s.to_string(),
                re,
                im,
                fl(vals[i].norm()),
                fl(envelope),
                fl(vals[i].norm() / envelope),
                fl(fe),
            ]);
        }
    }
    run.csv("ltwist.csv", &["a", "c", "s", "re_L", "im_L", "abs_L", "envelope", "ratio", "fe_residual"], rows)?;
    run.checks.push(Check::at_most("functional equation", worst_fe, 1e-9, "max relative residual"));
    Ok(())
}

pub fn periods(args: &PeriodsArgs, run: &mut Run) -> Result<()> {
    let f = form_for(&args.common, run)?;
    let tol = args.common.tol;
    let convs = args.common.convention.resolve(&f)?;
    record_sign(run, &f)?;
    for cusp in &args.cusp {
        check_moduli(&[cusp.c], f.level())?;
    }
    let header = ["a", "c", "l", "re_u", "im_u", "error_bound"];
    let vector_rows = |vs: Vec<esmap::periods::PeriodVector>| -> Vec<Vec<String>> {
        vs.iter()
            .flat_map(|v| {
                v.entries.iter().enumerate().map(move |(l, u)| {
                    let [re, im] = cplx(*u);
                    vec![v.cusp.a.to_string(), v.cusp.c.to_string(), l.to_string(), re, im, fl(v.error_bound)]
                })
            })
            .collect()
    };
    let raw = args.cusp.iter().map(|c| period_vector(&f, c, tol)).collect::<esmap::Result<Vec<_>>>()?;
    run.csv("periods.csv", &header, vector_rows(raw.clone()))?;
    if args.normalized {
        run.set_conventions(&convs);
        for conv in &convs {
            let vs = args.cusp.iter().map(|c| normalized_period_vector(&f, c, conv)).collect::<esmap::Result<Vec<_>>>()?;
            run.csv(&format!("periods_normalized_{}.csv", conv.name()), &header, vector_rows(vs))?;
        }
    }
    let mut poly_rows = Vec::new();
    for cusp in &args.cusp {
        let g = cusp_matrix(cusp.a, cusp.c, f.level())?;
        let p = period_polynomial(&f, &g, tol)?;
        for (i, b) in p.coeffs.iter().enumerate() {
            let [re, im] = cplx(*b);
            poly_rows.push(vec![cusp.a.to_string(), cusp.c.to_string(), i.to_string(), re, im]);
        }
    }
    run.csv("period_polynomial.csv", &["a", "c", "i", "re_b", "im_b"], poly_rows)?;
    if args.oracle {
        let mut rows = Vec::new();
        let mut worst = 0.0f64;
        for (cusp, u) in args.cusp.iter().zip(&raw) {
            let q = period_quadrature_vector(&f, cusp)?;
            for (l, qv) in q.values.iter().enumerate() {
                let scaled = (u.entries[l] - qv).norm() / q.l1_norms[l];
                worst = worst.max(scaled);
                let [re, im] = cplx(*qv);
                rows.push(vec![cusp.a.to_string(), cusp.c.to_string(), l.to_string(), re, im, fl(q.l1_norms[l]), fl(scaled)]);
            }
        }
        run.csv("periods_oracle.csv", &["a", "c", "l", "re_quad", "im_quad", "l1_norm", "scaled_diff"], rows)?;
        run.checks.push(Check::at_most("period oracle", worst, 1e-7, "max |assembled - quadrature| / L1 norm"));
    }
    Ok(())
}

pub fn zeros(args: &ZerosArgs, run: &mut Run) -> Result<()> {
    let f = form_for(&args.common, run)?;
    check_moduli(&args.c, f.level())?;
    if args.factor.is_nan() || args.factor <= 0.0 {
        bail!(UsageError("--factor must be positive".into()));
    }
    record_sign(run, &f)?;
    let k = f.weight();
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let (mut degree_ok, mut residuals_ok, mut localized) = (true, true, true);
    let mut ratios = Vec::new();
    for &c in &args.c {
        let cusps = pick_cusps(c, args.count, args.common.seed);
        let reps = zero_sweep(&f, c, &cusps, Exec::default())?;
        let mut max_ratio = 0.0f64;
        let mut max_dev = 0.0f64;
        for rep in &reps {
            degree_ok &= rep.roots.len() == (k - 2) as usize;
            residuals_ok &= rep.residuals_ok;
            let bound = args.factor * localization_scale(k, rep.cusp.value(), c);
            localized &= rep.deviations.iter().all(|d| *d <= bound);
            max_ratio = max_ratio.max(rep.max_normalized_ratio());
            max_dev = max_dev.max(rep.max_deviation());
            for (i, x) in rep.roots.iter().enumerate() {
                rows.push(vec![
                    rep.cusp.a.to_string(),
                    c.to_string(),
                    fl(x.re),
                    fl(x.im),
                    fl(rep.deviations[i]),
                    fl(rep.normalized_ratios[i]),
                    fl(rep.residuals[i]),
                ]);
            }
        }
        ratios.push(max_ratio);
        summary.push(vec![c.to_string(), reps.len().to_string(), fl(max_ratio), fl(max_dev)]);
    }
    run.csv("zeros.csv", &["a", "c", "root_re", "root_im", "deviation", "normalized_ratio", "residual"], rows)?;
    run.csv("zeros_summary.csv", &["c", "cusps", "max_normalized_ratio", "max_deviation"], summary)?;
    run.checks.push(Check::flag("degree", degree_ok, format!("every polynomial has {} roots", k - 2)));
    run.checks.push(Check::flag("root residuals", residuals_ok, "every root passes the backward-error test"));
    run.checks.push(Check::flag(
        "localization",
        localized,
        format!("|x0 - a/c| <= {} (1+|a/c|)^((k-3)/(k-2)) c^(-2/(k-2))", args.factor),
    ));
    run.note("max_normalized_ratio_by_c", &ratios);
    Ok(())
}

pub fn kloosterman(args: &KloostermanArgs, run: &mut Run) -> Result<()> {
    if !args.weil && !args.partial && args.c.is_empty() {
        bail!(UsageError("kloosterman needs --weil, --partial or --c".into()));
    }
    if args.c.iter().any(|&c| c < 1) {
        bail!(UsageError("moduli must be positive".into()));
    }
    let header = ["m", "n", "c", "S", "weil_bound", "slack"];
    if !args.c.is_empty() {
        let rows: Vec<_> = args.c.iter().map(|&c| weil_row(&weil_check(args.m, args.n, c))).collect();
        run.csv("kloosterman.csv", &header, rows)?;
    }
    if args.weil {
        if args.cmax < 1 || args.mmax < 1 || args.nmax < 1 {
            bail!(UsageError("--cmax, --mmax and --nmax must be positive".into()));
        }
        let table = weil_table(args.cmax, args.mmax, args.nmax, Exec::default());
        let violations = table.iter().filter(|w| !w.holds()).count();
        let min_slack = table.iter().map(|w| w.slack).fold(f64::INFINITY, f64::min);
        run.csv("weil.csv", &header, table.iter().map(weil_row))?;
        run.note("weil_triples", table.len());
        run.note("weil_min_slack", min_slack);
        run.checks.push(Check::at_most(
            "weil bound",
            violations as f64,
            0.0,
            format!("{violations} violations in {} triples, min slack {min_slack:.6}", table.len()),
        ));
    }
    if args.partial {
        if args.level < 1 || args.x < args.level {
            bail!(UsageError("--partial needs 1 <= --level <= --xmax".into()));
        }
        let rows = moduli_partial_sums(args.m, args.n, args.x, args.level, Exec::default());
        let x = args.x as f64;
        if let Some(last) = rows.last() {
            run.note("partial_sum_over_x2", last.partial_sum.abs() / (x * x));
        }
        if args.level == 1 {
            run.note("no_cancellation_baseline", totient_sum(args.x) as f64 / (x * x));
        }
        run.csv(
            "partial_sums.csv",
            &["m", "n", "X", "partial_sum", "exponent_estimate"],
            rows.iter().map(|r| {
                vec![r.m.to_string(), r.n.to_string(), r.x.to_string(), fl(r.partial_sum), fl(r.exponent_estimate)]
            }),
        )?;
    }
    Ok(())
}

pub fn moments(args: &MomentsArgs, run: &mut Run) -> Result<()> {
    let f = form_for(&args.common, run)?;
    let specs = parse_specs(&args.spec, f.weight())?;
    check_moduli(&args.c, f.level())?;
    let convs = args.common.convention.resolve(&f)?;
    run.set_conventions(&convs);
    record_sign(run, &f)?;
    let mut worst = 0.0f64;
    for conv in &convs {
        let mut rows = Vec::new();
        let mut errors: Vec<Vec<f64>> = vec![Vec::new(); specs.len()];
        for &c in &args.c {
            let reps = empirical_moments(&f, c, &specs, conv, Exec::default())?;
            for (i, r) in reps.iter().enumerate() {
                worst = worst.max(r.abs_error);
                errors[i].push(r.abs_error);
                let [er, ei] = cplx(r.empirical);
                let [mr, mi] = cplx(r.main_term);
                rows.push(vec![
                    joined(&r.spec.alpha),
                    joined(&r.spec.beta),
                    c.to_string(),
                    er,
                    ei,
                    mr,
                    mi,
                    fl(r.abs_error),
                    fl(r.normalized_error),
                ]);
            }
        }
        run.csv(
            &format!("moments_{}.csv", conv.name()),
            &["alpha", "beta", "c", "emp_re", "emp_im", "main_re", "main_im", "abs_err", "norm_err"],
            rows,
        )?;
        if args.c.len() >= 2 {
            let xs: Vec<f64> = args.c.iter().map(|&c| c as f64).collect();
            for (spec, errs) in specs.iter().zip(&errors) {
                run.note(&format!("loglog_slope[{}][{spec}]", conv.name()), loglog_slope(&xs, errs));
            }
        }
    }
    if let Some(max) = args.max_err {
        run.checks.push(Check::at_most("moment error", worst, max, "max |empirical - main term|"));
    }
    Ok(())
}

pub fn dist(args: &DistArgs, run: &mut Run) -> Result<()> {
    let f = form_for(&args.common, run)?;
    let k = f.weight();
    let projection = parse_projection(&args.projection, k)?;
    check_moduli(&args.c, f.level())?;
    if args.bins == 0 || args.grid_y == 0 || args.grid_z == 0 {
        bail!(UsageError("--bins, --grid-y and --grid-z must be positive".into()));
    }
    let convs = args.common.convention.resolve(&f)?;
    run.set_conventions(&convs);
    record_sign(run, &f)?;
    let mut last_ks = f64::NAN;
    for conv in &convs {
        let name = conv.name();
        let limit = sample_limit_law(&f, args.grid_y, args.grid_z, conv, Exec::default())?;
        let projected = project_limit(&limit, projection);
        run.csv(
            &format!("limit_law_{name}.csv"),
            &["y", "z", "j", "re_F", "im_F"],
            limit.iter().flat_map(|s| {
                s.entries.iter().enumerate().map(move |(j, v)| {
                    let [re, im] = cplx(*v);
                    vec![fl(s.y), fl(s.z), j.to_string(), re, im]
                })
            }),
        )?;
        let mut dist_rows = Vec::new();
        let mut hist_rows = Vec::new();
        let mut ks_rows = Vec::new();
        for &c in &args.c {
            let periods = normalized_periods_over(&f, c, conv, Exec::default())?;
            for p in &periods {
                for (j, u) in p.entries.iter().enumerate() {
                    let [re, im] = cplx(*u);
                    dist_rows.push(vec![p.cusp.a.to_string(), c.to_string(), j.to_string(), re, im]);
                }
            }
            let d = distribution_from_periods(c, &periods, projection, args.bins);
            let h = &d.histogram;
            let width = (h.hi - h.lo) / h.counts.len() as f64;
            for (b, count) in h.counts.iter().enumerate() {
                let lo = h.lo + width * b as f64;
                hist_rows.push(vec![c.to_string(), b.to_string(), fl(lo), fl(lo + width), count.to_string()]);
            }
            let ks = ks_distance(&d.values, &projected);
            last_ks = ks;
            ks_rows.push(vec![c.to_string(), projection.to_string(), fl(ks)]);
        }
        run.csv(&format!("distribution_{name}.csv"), &["a", "c", "j", "re_u", "im_u"], dist_rows)?;
        run.csv(&format!("histogram_{name}.csv"), &["c", "bin", "lo", "hi", "count"], hist_rows)?;
        run.csv(&format!("ks_{name}.csv"), &["c", "projection", "ks"], ks_rows)?;
        if let Some(max) = args.max_ks {
            let c = args.c.last().copied().unwrap_or(0);
            run.checks.push(Check::at_most(format!("ks distance ({name})"), last_ks, max, format!("at c = {c}")));
        }
    }
    Ok(())
}
