//! Shared oracles, generators and the golden-file runner for integration
//! tests. Oracles here deliberately avoid the library's own algorithms.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Ordinary least squares by explicit normal equations `(X'X) b = X'y`,
/// inverted with Gauss-Jordan elimination. `x` excludes the intercept.
pub struct NormalEquations {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub r_squared: f64,
}

pub fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> NormalEquations {
    let n = y.len();
    let p = x.len() + 1;
    let row = |i: usize| -> Vec<f64> {
        std::iter::once(1.0).chain(x.iter().map(|c| c[i])).collect()
    };
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for i in 0..n {
        let r = row(i);
        for a in 0..p {
            xty[a] += r[a] * y[i];
            for b in 0..p {
                xtx[a][b] += r[a] * r[b];
            }
        }
    }
    let inv = invert(xtx);
    let coefficients: Vec<f64> = (0..p)
        .map(|a| (0..p).map(|b| inv[a][b] * xty[b]).sum())
        .collect();
    let mean = y.iter().sum::<f64>() / n as f64;
    let mut rss = 0.0;
    let mut tss = 0.0;
    for i in 0..n {
        let fitted: f64 = row(i).iter().zip(&coefficients).map(|(a, b)| a * b).sum();
        rss += (y[i] - fitted).powi(2);
        tss += (y[i] - mean).powi(2);
    }
    let sigma2 = rss / (n - p) as f64;
    NormalEquations {
        std_errors: (0..p).map(|a| (sigma2 * inv[a][a]).sqrt()).collect(),
        coefficients,
        r_squared: if tss == 0.0 { 0.0 } else { 1.0 - rss / tss },
    }
}

fn invert(mut m: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let p = m.len();
    let mut inv: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let d = m[col][col];
        assert!(d.abs() > 1e-14, "oracle: singular normal equations");
        for j in 0..p {
            m[col][j] /= d;
            inv[col][j] /= d;
        }
        for r in 0..p {
            if r != col {
                let f = m[r][col];
                for j in 0..p {
                    m[r][j] -= f * m[col][j];
                    inv[r][j] -= f * inv[col][j];
                }
            }
        }
    }
    inv
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

/// A random anchor `(c_n, c_x)` with a span between 1 and 100.
pub fn random_anchor(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let c_n = rng.random_range(-50.0..50.0);
    (c_n, c_n + rng.random_range(1.0..100.0))
}

/// Values inside `anchor`, with a little spill past either end.
pub fn values_in(rng: &mut ChaCha8Rng, anchor: (f64, f64), n: usize) -> Vec<f64> {
    let span = anchor.1 - anchor.0;
    (0..n)
        .map(|_| anchor.0 + span * rng.random_range(-0.05..1.05))
        .collect()
}

/// Linear DV from predictors plus noise, in raw units.
pub fn linear_dv(rng: &mut ChaCha8Rng, x: &[Vec<f64>], noise: f64) -> Vec<f64> {
    let n = x[0].len();
    let b: Vec<f64> = x.iter().map(|_| rng.random_range(-2.0..2.0)).collect();
    (0..n)
        .map(|i| {
            let signal: f64 = x.iter().zip(&b).map(|(c, b)| c[i] * b).sum();
            signal + noise * rng.random_range(-1.0..1.0)
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// Golden-file suite -----------------------------------------------------------

/// Fixture configs, one or more per command.
pub const GOLDEN_CASES: [&str; 9] = [
    "percentize",
    "regress",
    "compare_importance",
    "compare_impact",
    "percent_diff",
    "pool",
    "mediate",
    "anchors_suggest",
    "identity",
];

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn fixture(name: &str) -> PathBuf {
    manifest_dir().join("tests/fixtures").join(name)
}

pub fn golden(name: &str) -> PathBuf {
    manifest_dir().join("tests/golden").join(name)
}

pub struct Run {
    pub status: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn pscale(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_pscale"))
        .args(args)
        .output()
        .expect("spawn pscale");
    Run {
        status: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// Runs `case` with the given format and returns the written file.
pub fn render(case: &str, format: &str, dir: &Path) -> Result<String, String> {
    let config = fixture(&format!("{case}.toml"));
    let out = dir.join(format!("{case}.{format}"));
    let run = pscale(&[
        "--config",
        config.to_str().unwrap(),
        "--format",
        format,
        "--out",
        out.to_str().unwrap(),
    ]);
    if run.status != 0 {
        return Err(format!("{case} --format {format}: exit {} ({})", run.status, run.stderr.trim()));
    }
    std::fs::read_to_string(&out).map_err(|e| format!("{case}: {e}"))
}

/// Compares every case against `tests/golden`. Setting `PSCALE_BLESS=1`
/// rewrites the golden files instead.
pub fn check_goldens() -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let bless = std::env::var_os("PSCALE_BLESS").is_some();
    let mut failures = Vec::new();
    for case in GOLDEN_CASES {
        for (format, ext) in [("text", "txt"), ("table", "csv")] {
            let got = render(case, format, dir.path())?;
            let path = golden(&format!("{case}.{ext}"));
            if bless {
                std::fs::write(&path, &got).map_err(|e| e.to_string())?;
                continue;
            }
            match std::fs::read_to_string(&path) {
                Ok(want) if want == got => {}
                Ok(_) => failures.push(format!("{} differs", path.display())),
                Err(e) => failures.push(format!("{}: {e}", path.display())),
            }
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(failures.join("; "))
    }
}
