//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use pscale::compare::{mediation_paths, pool_datasets};
use pscale::percentize::{
    format_percent, min_max_normalize, percentize_dataset, percentize_value, to_percent_scale,
    Dataset,
};
use pscale::regress::{
    fit_ols, percent_difference, pomp_coefficients, standardized_coefficients, DesignMatrix,
    Predictor,
};
use pscale::scale_model::{AnchorProvenance, Role, ScaleAnchor, TargetRange, VariableSpec};

type Outcome = Result<String, String>;

fn anchor(c: (f64, f64), target: TargetRange) -> ScaleAnchor {
    ScaleAnchor::new(c.0, c.1, target, AnchorProvenance::Declared).unwrap()
}

fn within(label: &str, dev: f64, tol: f64) -> Outcome {
    if dev <= tol {
        Ok(format!("{label} max dev {dev:.2e} <= {tol:.0e}"))
    } else {
        Err(format!("{label} max dev {dev:.2e} > {tol:.0e}"))
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let out = f()?;
    let took = start.elapsed();
    if took < limit {
        Ok(format!("{out}; {took:.2?} < {limit:?}"))
    } else {
        Err(format!("{out}; took {took:.2?}, limit {limit:?}"))
    }
}

fn c1_age_anchoring() -> Outcome {
    let a = anchor((0.0, 100.0), TargetRange::Unit);
    let start = Instant::now();
    let lo = percentize_value(18.0, &a).map_err(|e| e.to_string())?;
    let hi = percentize_value(83.0, &a).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    let dev = (lo - 0.18).abs().max((hi - 0.83).abs());
    let out = within("ages {18, 83} -> {0.18, 0.83}", dev, 1e-12)?;
    if took < Duration::from_millis(1) {
        Ok(format!("{out}; {took:.2?} < 1ms"))
    } else {
        Err(format!("{out}; took {took:.2?}"))
    }
}

fn c2_percent_display() -> Outcome {
    let s = format_percent(0.87, 0);
    if s == "87%" {
        Ok(format!("0.87 renders as {s:?}"))
    } else {
        Err(format!("0.87 renders as {s:?}, expected \"87%\""))
    }
}

fn c3_introduction() -> Outcome {
    let v = to_percent_scale(7.5, 0.0, 10.0).map_err(|e| e.to_string())?;
    within("7.5 on 0-10 -> 75", (v - 75.0).abs(), 1e-12)
}

fn c4_equation_family() -> Outcome {
    timed(Duration::from_secs(1), || {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut dev: f64 = 0.0;
        for _ in 0..1000 {
            let (lo, hi) = random_anchor(&mut rng);
            let v = rng.random_range(lo - 10.0..hi + 10.0);
            let minmax_pct = min_max_normalize(v, lo, hi, 0.0, 100.0).unwrap();
            let percent_scale = to_percent_scale(v, lo, hi).unwrap();
            let minmax_unit = min_max_normalize(v, lo, hi, 0.0, 1.0).unwrap();
            let anchored = percentize_value(v, &anchor((lo, hi), TargetRange::Unit)).unwrap();
            // relative to the target span so 0-100 and 0-1 share one bar
            dev = dev.max((minmax_pct - percent_scale).abs() / 100.0).max((minmax_unit - anchored).abs());
        }
        within("1000 tuples, min-max vs percent-scale and anchored forms", dev, 1e-12)
    })
}

/// Random raw dataset: DV anchor, IV anchors, raw columns.
struct RawCase {
    dv_anchor: (f64, f64),
    iv_anchors: Vec<(f64, f64)>,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
}

fn raw_case(rng: &mut ChaCha8Rng) -> RawCase {
    let p = rng.random_range(1..=4);
    let n = rng.random_range(p + 3..=50);
    let iv_anchors: Vec<(f64, f64)> = (0..p).map(|_| random_anchor(rng)).collect();
    let x: Vec<Vec<f64>> = iv_anchors.iter().map(|a| values_in(rng, *a, n)).collect();
    let dv_anchor = random_anchor(rng);
    let y = linear_dv(rng, &x, 5.0);
    RawCase {
        dv_anchor,
        iv_anchors,
        x,
        y,
    }
}

fn iv_name(j: usize) -> String {
    format!("x{}", j + 1)
}

impl RawCase {
    fn dataset(&self) -> Dataset {
        let mut cols = vec![("y".to_string(), self.y.clone())];
        cols.extend(self.x.iter().enumerate().map(|(j, c)| (iv_name(j), c.clone())));
        Dataset::from_numeric("synthetic", cols).unwrap()
    }

    fn specs(&self, target: TargetRange, percentize: &[bool]) -> Vec<VariableSpec> {
        let mut specs = vec![VariableSpec::numerical(
            "y",
            Role::Dependent,
            anchor(self.dv_anchor, target),
        )];
        for (j, a) in self.iv_anchors.iter().enumerate() {
            let a = if percentize.get(j).copied().unwrap_or(true) {
                anchor(*a, target)
            } else {
                // identity transform: c_n = target lo, span = target span
                let (lo, hi) = target.bounds();
                anchor((lo, hi), target)
            };
            specs.push(VariableSpec::numerical(iv_name(j), Role::Independent, a));
        }
        specs
    }

    fn names(&self) -> Vec<String> {
        (0..self.x.len()).map(iv_name).collect()
    }

    fn fit_percentized(&self, target: TargetRange) -> pscale::regress::BpRegressionResult {
        let p = percentize_dataset(&self.dataset(), &self.specs(target, &[])).unwrap();
        let names = self.names();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        fit_ols(&DesignMatrix::from_dataset(&p, "y", &refs).unwrap()).unwrap()
    }

    fn raw_design(&self) -> DesignMatrix {
        let preds = self
            .x
            .iter()
            .enumerate()
            .map(|(j, c)| Predictor::numerical(iv_name(j), c.clone()))
            .collect();
        DesignMatrix::new("y", self.y.clone(), preds).unwrap()
    }
}

fn c5_rescaling_identity() -> Outcome {
    timed(Duration::from_secs(10), || {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut dev: f64 = 0.0;
        for _ in 0..200 {
            let case = raw_case(&mut rng);
            let raw = fit_ols(&case.raw_design()).unwrap();
            let bp = case.fit_percentized(TargetRange::Unit);
            let dv_span = case.dv_anchor.1 - case.dv_anchor.0;
            for (j, a) in case.iv_anchors.iter().enumerate() {
                let name = iv_name(j);
                let expect = raw.estimate(&name).unwrap() * (a.1 - a.0) / dv_span;
                dev = dev.max((bp.estimate(&name).unwrap() - expect).abs());
            }
        }
        within("200 datasets, raw slope x range ratio vs b_p", dev, 1e-10)
    })
}

fn c6_pomp() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut slope_dev: f64 = 0.0;
    let mut intercept_dev: f64 = 0.0;
    for _ in 0..200 {
        let case = raw_case(&mut rng);
        let unit = case.fit_percentized(TargetRange::Unit);
        let pct = case.fit_percentized(TargetRange::Percent);
        for (u, c) in unit.slopes().iter().zip(pct.slopes()) {
            slope_dev = slope_dev.max((u.estimate - c.estimate).abs());
        }
        intercept_dev = intercept_dev.max((pct.intercept() - 100.0 * unit.intercept()).abs() / 100.0);
        // the library's POMP view of the 0-1 fit must equal the 0-100 refit
        for ((_, v), c) in pomp_coefficients(&unit).iter().zip(&pct.coefficients) {
            intercept_dev = intercept_dev.max((v - c.estimate).abs() / 100.0);
        }
    }
    let slopes = within("200 refits, 0-100 vs 0-1 slopes", slope_dev, 1e-10)?;
    let icpt = within("intercept/100 vs 0-1 intercept", intercept_dev, 1e-10)?;
    Ok(format!("{slopes}; {icpt}"))
}

fn c7_ols_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut dev: f64 = 0.0;
    for _ in 0..200 {
        let p = rng.random_range(1..=4);
        let n = rng.random_range(p + 3..=30);
        let x: Vec<Vec<f64>> = (0..p)
            .map(|_| (0..n).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let y = linear_dv(&mut rng, &x, 0.3);
        let preds = x
            .iter()
            .enumerate()
            .map(|(j, c)| Predictor::numerical(iv_name(j), c.clone()))
            .collect();
        let fit = fit_ols(&DesignMatrix::new("y", y.clone(), preds).unwrap()).unwrap();
        let oracle = normal_equations(&x, &y);
        let est: Vec<f64> = fit.coefficients.iter().map(|c| c.estimate).collect();
        let se: Vec<f64> = fit.coefficients.iter().map(|c| c.std_error).collect();
        dev = dev
            .max(max_abs_diff(&est, &oracle.coefficients))
            .max(max_abs_diff(&se, &oracle.std_errors))
            .max((fit.r_squared - oracle.r_squared).abs());
    }
    within("200 instances, coefficients/SEs/R2 vs normal equations", dev, 1e-10)
}

fn c8_affine_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut dev: f64 = 0.0;
    for _ in 0..100 {
        let case = raw_case(&mut rng);
        let subset: Vec<bool> = (0..case.x.len()).map(|_| rng.random_bool(0.5)).collect();
        let mut specs = case.specs(TargetRange::Unit, &subset);
        if rng.random_bool(0.5) {
            specs[0] = VariableSpec::numerical("y", Role::Dependent, anchor((0.0, 1.0), TargetRange::Unit));
        }
        let p = percentize_dataset(&case.dataset(), &specs).unwrap();
        let names = case.names();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let design = DesignMatrix::from_dataset(&p, "y", &refs).unwrap();
        let raw_design = case.raw_design();

        let r_raw = pearson(&case.x[0], &case.y);
        let r_pct = pearson(&design.predictors()[0].values, design.dv());
        let r2_raw = fit_ols(&raw_design).unwrap().r_squared;
        let r2_pct = fit_ols(&design).unwrap().r_squared;
        let beta_raw: Vec<f64> = standardized_coefficients(&raw_design).unwrap().into_iter().map(|(_, b)| b).collect();
        let beta_pct: Vec<f64> = standardized_coefficients(&design).unwrap().into_iter().map(|(_, b)| b).collect();
        dev = dev
            .max((r_raw - r_pct).abs())
            .max((r2_raw - r2_pct).abs())
            .max(max_abs_diff(&beta_raw, &beta_pct));
    }
    within("100 datasets, r/R2/beta raw vs percentized", dev, 1e-12)
}

fn c9_binary_iv() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut dev: f64 = 0.0;
    for _ in 0..100 {
        let a = random_anchor(&mut rng);
        let n_t = rng.random_range(2..=25);
        let n_c = rng.random_range(2..=25);
        let treat = values_in(&mut rng, a, n_t);
        let control = values_in(&mut rng, a, n_c);
        let dv_anchor = anchor(a, TargetRange::Unit);
        let diff = percent_difference(&treat, &control, &dv_anchor).unwrap();
        let y: Vec<f64> = treat
            .iter()
            .chain(&control)
            .map(|&v| percentize_value(v, &dv_anchor).unwrap())
            .collect();
        let d: Vec<f64> = (0..n_t + n_c).map(|i| if i < n_t { 1.0 } else { 0.0 }).collect();
        let fit = fit_ols(&DesignMatrix::new("y", y, vec![Predictor::dummy("group", d)]).unwrap()).unwrap();
        let c = fit.coefficient("group").unwrap();
        dev = dev
            .max((diff.estimate - c.estimate).abs())
            .max((diff.std_error - c.std_error).abs());
    }
    within("100 two-group datasets, difference/se vs dummy b_p", dev, 1e-12)
}

fn mediation_case(rng: &mut ChaCha8Rng, mediators: usize) -> f64 {
    let n = rng.random_range(20..=60);
    let x_anchor = random_anchor(rng);
    let x = values_in(rng, x_anchor, n);
    let mut cols = vec![("x".to_string(), x.clone())];
    let mut upstream = vec![x];
    let mut anchors = vec![("x".to_string(), x_anchor)];
    for k in 0..mediators {
        let m = linear_dv(rng, &upstream, 3.0);
        let name = format!("m{}", k + 1);
        anchors.push((name.clone(), random_anchor(rng)));
        cols.push((name, m.clone()));
        upstream.push(m);
    }
    let y = linear_dv(rng, &upstream, 3.0);
    cols.push(("y".to_string(), y));
    anchors.push(("y".to_string(), random_anchor(rng)));
    let data = Dataset::from_numeric("synthetic", cols).unwrap();
    let specs: Vec<VariableSpec> = anchors
        .iter()
        .map(|(name, a)| VariableSpec::numerical(name.clone(), Role::Independent, anchor(*a, TargetRange::Unit)))
        .collect();
    let p = percentize_dataset(&data, &specs).unwrap();
    let names: Vec<String> = (1..=mediators).map(|k| format!("m{k}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let m = mediation_paths(&p, "y", "x", &refs, &[]).unwrap();
    (m.total_effect - (m.direct_effect + m.total_indirect())).abs()
}

fn c10_mediation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let single = (0..50).map(|_| mediation_case(&mut rng, 1)).fold(0.0, f64::max);
    let serial = (0..50).map(|_| mediation_case(&mut rng, 2)).fold(0.0, f64::max);
    let a = within("50 single-mediator systems, total - (direct + indirect)", single, 1e-10)?;
    let b = within("50 two-serial systems", serial, 1e-10)?;
    Ok(format!("{a}; {b}"))
}

fn c11_pooling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let points = [7.0, 7.0, 9.0];
    let parts: Vec<(Dataset, Vec<VariableSpec>)> = points
        .iter()
        .enumerate()
        .map(|(k, &top)| {
            let mut v: Vec<f64> = vec![1.0, top];
            v.extend((0..18).map(|_| rng.random_range(1..=top as u32) as f64));
            let data = Dataset::from_numeric(format!("year{}", k + 1), [("quality", v)]).unwrap();
            let spec = VariableSpec::numerical("quality", Role::Independent, anchor((1.0, 7.0), TargetRange::Unit));
            (data, vec![spec])
        })
        .collect();
    let unify = BTreeMap::from([(
        "quality".to_string(),
        points.iter().map(|&top| anchor((1.0, top), TargetRange::Unit)).collect(),
    )]);
    let pooled = pool_datasets(&parts, &unify).map_err(|e| e.to_string())?;
    let column = pooled.column("quality").ok_or("no pooled quality column")?;
    let mut offset = 0;
    for ((data, _), &top) in parts.iter().zip(&points) {
        let pscale::percentize::ColumnData::Numeric(raw) = &data.columns()[0].data else {
            return Err("raw column not numeric".into());
        };
        for (i, r) in raw.iter().enumerate() {
            let got = column.values[offset + i].ok_or("missing pooled value")?;
            if *r == Some(1.0) && got != 0.0 || *r == Some(top) && got != 1.0 {
                return Err(format!("raw {r:?} on 1-{top} mapped to {got}"));
            }
            if !(0.0..=1.0).contains(&got) {
                return Err(format!("pooled value {got} outside 0-1"));
            }
        }
        offset += data.n_rows();
    }
    Ok("7/7/9-point parts: endpoints map to exactly 0 and 1".into())
}

fn c12_cli() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for case in GOLDEN_CASES {
        let first = render(case, "table", dir.path())?;
        let second = render(case, "table", dir.path())?;
        if first != second {
            return Err(format!("{case}: repeated table output differs"));
        }
    }
    check_goldens()?;
    Ok(format!(
        "{} fixtures byte-identical across runs; golden text and table match",
        GOLDEN_CASES.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("age anchoring", c1_age_anchoring),
        ("percent display", c2_percent_display),
        ("introduction example", c3_introduction),
        ("equation family coherence", c4_equation_family),
        ("b_p rescaling identity", c5_rescaling_identity),
        ("POMP equivalence", c6_pomp),
        ("OLS oracle", c7_ols_oracle),
        ("affine invariance", c8_affine_invariance),
        ("binary-IV identity", c9_binary_iv),
        ("mediation decomposition", c10_mediation),
        ("Likert pooling", c11_pooling),
        ("CLI determinism and goldens", c12_cli),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
