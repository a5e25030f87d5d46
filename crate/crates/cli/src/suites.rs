//! The verification suites. Each instance draws its weights from a ChaCha
//! stream derived from `(seed, instance index)`, so rows do not depend on how
//! instances are scheduled.

use std::time::Instant;

use dyadica::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Suite};
use crate::error::Result;
use crate::report::{Cell, Report, ReportRow};

/// Seed of instance `index` under master seed `seed`.
pub fn instance_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.gen()
}

pub fn run_suite(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let mut report = match config.suite {
        Suite::Packing => packing(config)?,
        // Timings must not compete with each other.
        Suite::Perf => {
            let rows = (0..config.instances)
                .map(|i| perf(config, instance_seed(config.seed, i as u64)))
                .collect::<Result<Vec<_>>>()?;
            finish(config, rows.into_iter().flatten().collect(), Vec::new())
        }
        suite => {
            let rows = (0..config.instances)
                .into_par_iter()
                .map(|i| {
                    let seed = instance_seed(config.seed, i as u64);
                    let start = Instant::now();
                    let mut rows = match suite {
                        Suite::TwoWeight => two_weight(config, seed),
                        Suite::OneWeight => one_weight(config, seed),
                        Suite::Unweighted => unweighted(config, seed),
                        Suite::Sawyer => sawyer(config, seed),
                        Suite::Khintchine => khintchine(config, seed),
                        Suite::Packing | Suite::Perf => unreachable!("handled above"),
                    }?;
                    if config.timing {
                        let ms = start.elapsed().as_secs_f64() * 1e3 / rows.len() as f64;
                        for row in &mut rows {
                            row.real("wall_ms", ms);
                        }
                    }
                    Ok(rows)
                })
                .collect::<Result<Vec<_>>>()?;
            finish(config, rows.into_iter().flatten().collect(), Vec::new())
        }
    };
    report.suite = config.suite;
    Ok(report)
}

fn finish(config: &ExperimentConfig, mut rows: Vec<ReportRow>, failures: Vec<String>) -> Report {
    for (id, row) in rows.iter_mut().enumerate() {
        row.id = id;
    }
    Report {
        suite: config.suite,
        rows,
        failures,
    }
}

fn grid(config: &ExperimentConfig) -> Result<Grid> {
    Ok(Grid::new(config.depth)?)
}

fn cascade(config: &ExperimentConfig, g: Grid, rng: &mut ChaCha8Rng) -> Result<Weight> {
    Ok(cascade_weight(g, config.weights.cascade, rng.gen())?)
}

fn random_function(g: Grid, rng: &mut ChaCha8Rng) -> Result<StepFunction> {
    Ok(StepFunction::from_fn(g, |_| rng.gen_range(-1.0..1.0))?)
}

fn push_flags(row: &mut ReportRow, flags: SpecializationFlags) {
    row.push("one_weight", Cell::Flag(flags.one_weight))
        .push("unweighted", Cell::Flag(flags.unweighted))
        .push("martingale", Cell::Flag(flags.martingale));
}

/// Columns shared by the two-weight and one-weight suites; returns the sign
/// search lower bound.
fn push_conditions(
    config: &ExperimentConfig,
    row: &mut ReportRow,
    (u, v, w, t): (&Weight, &Weight, &Weight, f64),
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let report = ConditionReport::compute(u, v, w, t, C4Method::Auto)?;
    let search = sup_sigma_norm(u, v, w, t, config.restarts, rng.gen())?;
    let lower = search.estimate.value;
    let combined = report.combined();
    row.real("t", t)
        .real("c1", report.c1.value)
        .push("c1_witness", Cell::Interval(report.c1.witness))
        .real("c2", report.c2.value)
        .push("c2_witness", Cell::Interval(report.c2.witness))
        .real("c3", report.c3.value)
        .push("c3_witness", Cell::Interval(report.c3.witness))
        .real("c4", report.c4.value)
        .push("c4_method", Cell::Text(report.c4.method.as_str()))
        .push("c4_bound", Cell::Text(report.c4.bound.as_str()))
        .real("combined", combined)
        .real("sup_sigma", lower)
        .real("upper_ratio", lower / combined)
        .real("c1_ratio", report.c1.value.sqrt() / lower)
        .real("c2_ratio", report.c2.value.sqrt() / lower)
        .real("c3_ratio", report.c3.value.sqrt() / lower);
    push_flags(row, report.flags);

    let k = config.tolerances.comparability;
    row.check(lower / combined <= k, || format!("sup-σ/combined = {} exceeds {k}", lower / combined));
    for (name, c) in [("c1", report.c1.value), ("c2", report.c2.value), ("c3", report.c3.value)] {
        let ratio = c.sqrt() / lower;
        row.check(ratio <= k, || format!("√{name}/sup-σ = {ratio} exceeds {k}"));
    }
    Ok(lower)
}

fn two_weight(config: &ExperimentConfig, seed: u64) -> Result<Vec<ReportRow>> {
    let g = grid(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (u, v, w) = (cascade(config, g, &mut rng)?, cascade(config, g, &mut rng)?, cascade(config, g, &mut rng)?);
    config
        .t
        .iter()
        .map(|&t| {
            let mut row = ReportRow::new(0, seed);
            push_conditions(config, &mut row, (&u, &v, &w, t), &mut rng)?;
            Ok(row)
        })
        .collect()
}

/// Smallest `⟨u^{-1}⟩_I ⟨u w^{2t}⟩_I / ⟨w⟩_I^{2t}` over all intervals.
fn reverse_margin(u: &Weight, w: &Weight, t: f64) -> Result<(f64, DyadicInterval)> {
    let (ua, uw, wa) = (u.recip()?.averages(), u.mul(&w.pow(2.0 * t)?)?.averages(), w.averages());
    Ok(u.grid()
        .intervals()
        .map(|i| (ua.get(i) * uw.get(i) / wa.get(i).powf(2.0 * t), i))
        .fold((f64::INFINITY, DyadicInterval::ROOT), |a, b| if b.0 < a.0 { b } else { a }))
}

fn one_weight(config: &ExperimentConfig, seed: u64) -> Result<Vec<ReportRow>> {
    let g = grid(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (u, w) = (cascade(config, g, &mut rng)?, cascade(config, g, &mut rng)?);
    let a2 = ap_constant(&u, 2.0)?.value;
    let (packing_inv, packing) = (buckley_packing(&u.recip()?).value, buckley_packing(&u).value);
    let tol = config.tolerances.rounding;
    config
        .t
        .iter()
        .map(|&t| {
            let mut row = ReportRow::new(0, seed);
            push_conditions(config, &mut row, (&u, &u, &w, t), &mut rng)?;
            let c2 = condition_c2(&u, &u, &w, t)?.value;
            let c3 = condition_c3(&u, &u, &w, t)?.value;
            let (margin, at) = reverse_margin(&u, &w, t)?;
            let (k2, k3) = (c2 / (a2 * packing_inv), c3 / (a2 * packing));
            row.real("a2", a2)
                .real("packing_u_inv", packing_inv)
                .real("packing_u", packing)
                .real("k2", k2)
                .real("k3", k3)
                .real("reverse_margin", margin)
                .push("reverse_witness", Cell::Interval(at));
            row.check(margin >= 1.0 - tol, || format!("reverse condition fails at {at:?}: margin {margin}"));
            if w.is_constant() {
                row.check(k2 <= 1.0 + tol && k3 <= 1.0 + tol, || format!("packing bounds exceeded: {k2}, {k3}"));
            }
            Ok(row)
        })
        .collect()
}

fn unweighted(config: &ExperimentConfig, seed: u64) -> Result<Vec<ReportRow>> {
    let g = grid(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = cascade(config, g, &mut rng)?;
    let one = Weight::ones(g);
    config
        .t
        .iter()
        .map(|&t| {
            let c2t = c2t_constant(&w, t)?;
            let start = if g.is_leaf(c2t.witness) { DyadicInterval::ROOT } else { c2t.witness };
            let options = SigmaOptions {
                restarts: config.restarts,
                seed: rng.gen(),
                warm_starts: vec![StepFunction::haar(g, start)?],
                ..SigmaOptions::default()
            };
            let norm = sup_sigma_norm_with(&one, &one, &w, t, &options)?.estimate.value;
            let ratio = norm * norm / c2t.value;
            let mut row = ReportRow::new(0, seed);
            row.real("t", t)
                .real("c2t", c2t.value)
                .push("c2t_witness", Cell::Interval(c2t.witness))
                .real("norm", norm)
                .real("ratio", ratio);
            let slack = config.tolerances.testing_slack;
            row.check(c2t.value <= norm * norm * (1.0 + slack), || {
                format!("[w]_C2t = {} above the squared norm {}", c2t.value, norm * norm)
            });
            let k = config.tolerances.comparability;
            row.check(ratio <= k, || format!("‖T‖²/[w]_C2t = {ratio} exceeds {k}"));
            Ok(row)
        })
        .collect()
}

fn packing(config: &ExperimentConfig) -> Result<Report> {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &alpha in &config.weights.powers {
        let mut ratios = Vec::new();
        for depth in config.min_depth..=config.depth {
            let w = power_weight(alpha, Grid::new(depth)?)?;
            let rh2 = rhp_constant(&w, 2.0)?.value;
            let rh1 = rh1_constant(&w.pow(2.0)?).value;
            let rh_packing = rhp_packing(&w, 2.0)?;
            let a2 = ap_constant(&w, 2.0)?.value;
            let rh1_inv = rh1_constant(&w.recip()?).value;
            let a_packing = ap_packing(&w, 2.0)?.value;
            let ratio = rh_packing.value / (rh2 * rh2 * rh1);
            ratios.push(ratio);
            let mut row = ReportRow::new(0, config.seed);
            row.real("alpha", alpha)
                .push("depth", Cell::Int(depth as u64))
                .real("rh2", rh2)
                .real("rh1_w2", rh1)
                .real("rh2_packing", rh_packing.value)
                .push("rh2_packing_witness", Cell::Interval(rh_packing.witness))
                .real("rh2_ratio", ratio)
                .real("a2", a2)
                .real("rh1_w_inv", rh1_inv)
                .real("a2_packing", a_packing)
                .real("a2_ratio", a_packing / (a2 * rh1_inv));
            rows.push(row);
        }
        let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
        let limit = config.tolerances.drift;
        if max / min >= limit {
            failures.push(format!("x^{alpha}: packing ratio drifts by {} (limit {limit})", max / min));
        }
    }
    Ok(finish(config, rows, failures))
}

fn sawyer(config: &ExperimentConfig, seed: u64) -> Result<Vec<ReportRow>> {
    let g = grid(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (u, v, w) = (cascade(config, g, &mut rng)?, cascade(config, g, &mut rng)?, cascade(config, g, &mut rng)?);
    let sigma = SignPattern::random(g, rng.gen());
    config
        .t
        .iter()
        .map(|&t| {
            let mu = v.mul(&w.pow(2.0 * t)?)?;
            let norm = if g.depth() <= normest::EXACT_MAX_DEPTH {
                exact_operator_norm(&OperatorDescriptor::ConstantHaar { w: &w, t, sigma: &sigma }, &u, &mu)?
            } else {
                let op = ConstantHaarMultiplier::new(&w, t, &sigma)?;
                power_iteration_norm(&op, &u, &mu, &PowerOptions::default())?.estimate
            };
            let testing = sawyer_testing(&u, &v, &w, t, &sigma)?;
            let norm_sq = norm.value * norm.value;
            let ratio = testing.max() / norm_sq;

            let tw = THaarMultiplier::new(&w, t, &sigma)?;
            let (wa, ma) = (w.averages(), mu.averages());
            let mut haar_gap: f64 = 0.0;
            for i in g.non_leaf_intervals() {
                let lhs = tw.apply(&StepFunction::haar(g, i)?)?.weighted_norm_sq(v.as_step())?;
                let rhs = ma.get(i) / wa.get(i).powf(2.0 * t);
                haar_gap = haar_gap.max((lhs - rhs).abs() / rhs);
            }

            let mut row = ReportRow::new(0, seed);
            row.real("t", t);
            for (name, witness, c) in [
                ("forward", "forward_witness", testing.forward),
                ("dual", "dual_witness", testing.dual),
                ("forward_local", "forward_local_witness", testing.forward_local),
                ("dual_local", "dual_local_witness", testing.dual_local),
                ("pairing", "pairing_witness", testing.pairing),
            ] {
                row.real(name, c.value).push(witness, Cell::Interval(c.witness));
            }
            row.real("norm_sq", norm_sq)
                .push("norm_bound", Cell::Text(norm.bound.as_str()))
                .real("testing_ratio", ratio)
                .real("haar_gap", haar_gap);
            let slack = config.tolerances.testing_slack;
            // Against a lower bound for the norm the comparison proves nothing.
            if norm.bound == BoundKind::Exact {
                row.check(ratio <= 1.0 + slack, || format!("testing constant above ‖T‖²: ratio {ratio}"));
            }
            let tol = config.tolerances.haar_testing;
            row.check(haar_gap < tol, || format!("Haar-testing identity off by {haar_gap}"));
            Ok(row)
        })
        .collect()
}

fn khintchine(config: &ExperimentConfig, seed: u64) -> Result<Vec<ReportRow>> {
    let g = grid(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (v, w) = (cascade(config, g, &mut rng)?, cascade(config, g, &mut rng)?);
    let f = random_function(g, &mut rng)?;
    let enumerable = g.depth() <= normest::ENUMERATION_MAX_DEPTH;
    config
        .t
        .iter()
        .map(|&t| {
            let mu = v.mul(&w.pow(2.0 * t)?)?;
            let closed = khintchine_expectation(&mu, &w, t, &f)?;
            let sampled = khintchine_monte_carlo(&mu, &w, t, &f, config.samples, rng.gen())?;
            let mut row = ReportRow::new(0, seed);
            row.real("t", t)
                .real("closed_form", closed)
                .real("monte_carlo", sampled)
                .real("monte_carlo_gap", (sampled - closed).abs() / closed);
            if enumerable {
                let exact = khintchine_enumeration(&mu, &w, t, &f)?;
                let gap = (exact - closed).abs() / closed.max(f64::MIN_POSITIVE);
                row.real("enumeration", exact).real("enumeration_gap", gap);
                let tol = config.tolerances.khintchine;
                row.check(gap <= tol, || format!("closed form and enumeration differ by {gap}"));
            } else {
                row.real("enumeration", f64::NAN).real("enumeration_gap", f64::NAN);
            }
            Ok(row)
        })
        .collect()
}

fn perf(config: &ExperimentConfig, seed: u64) -> Result<Vec<ReportRow>> {
    let g = grid(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (u, v, w) = (cascade(config, g, &mut rng)?, cascade(config, g, &mut rng)?, cascade(config, g, &mut rng)?);
    let f = random_function(g, &mut rng)?;
    let t = config.t[0];
    let start = Instant::now();
    std::hint::black_box(haar_transform(&f));
    let transform = start.elapsed();
    std::hint::black_box(ConditionReport::compute(&u, &v, &w, t, C4Method::Iterative)?);
    let total = start.elapsed();
    let total_ms = total.as_secs_f64() * 1e3;
    let mut row = ReportRow::new(0, seed);
    row.push("depth", Cell::Int(g.depth() as u64))
        .real("t", t)
        .real("transform_ms", transform.as_secs_f64() * 1e3)
        .real("report_ms", (total - transform).as_secs_f64() * 1e3)
        .real("total_ms", total_ms);
    let budget = config.tolerances.perf_budget_ms;
    row.check(total_ms < budget, || format!("took {total_ms:.1} ms (budget {budget} ms)"));
    Ok(vec![row])
}
