//! Cross-bundle comparison of two run directories.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::SCHEMA_VERSION;
use super::csvio::Table;
use crate::density::DensityMatrix;
use crate::error::{Error, Result};

/// Pointwise differences of one scalar series, `a − b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesDiff {
    pub samples: usize,
    pub linf: f64,
    /// Time average of `|a − b|`.
    pub l1_mean: f64,
    /// Samples where one side is negative and the other positive.
    pub sign_disagreements: usize,
    pub a_negative_b_positive: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandDiff {
    pub samples: usize,
    /// Samples where the weights differ by more than three combined binomial standard errors.
    pub violations: usize,
    pub max_abs_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub schema_version: u32,
    pub a: String,
    pub b: String,
    pub series: BTreeMap<String, SeriesDiff>,
    /// Largest trace distance per engine present in both bundles.
    pub trace_distance_max: BTreeMap<String, f64>,
    pub ensembles: BTreeMap<String, BandDiff>,
    /// Keys found in only one bundle.
    pub unmatched: Vec<String>,
}

type Series = BTreeMap<String, Vec<(f64, f64)>>;

const SIGN_FLOOR: f64 = 1e-12;

fn load_series(dir: &Path, file: &str, values: &[&str], series: &mut Series) -> Result<()> {
    let path = dir.join(file);
    if !path.exists() {
        return Ok(());
    }
    let table = Table::read(&path)?;
    let (t, ch) = (table.column("t")?, table.column("channel")?);
    let mask = table.column("mask").ok();
    let cols = values
        .iter()
        .map(|v| table.column(v).map(|c| (*v, c)))
        .collect::<Result<Vec<_>>>()?;
    let stem = file.trim_end_matches(".csv");
    for row in 0..table.rows.len() {
        if mask.is_some_and(|m| table.rows[row][m] == "1") {
            continue;
        }
        let time = table.float(row, t)?;
        for &(name, c) in &cols {
            let key = format!("{stem}:{}:{name}", table.rows[row][ch]);
            series.entry(key).or_default().push((time, table.float(row, c)?));
        }
    }
    Ok(())
}

type RhoTable = BTreeMap<String, Vec<(f64, DensityMatrix)>>;

/// `(row, col, value)` entries of one sampled matrix.
type Elements = Vec<(usize, usize, Complex64)>;

fn load_rho(dir: &Path) -> Result<RhoTable> {
    let table = Table::read(&dir.join("rho.csv"))?;
    let (t, engine, row, col, re, im) = (
        table.column("t")?,
        table.column("engine")?,
        table.column("row")?,
        table.column("col")?,
        table.column("re")?,
        table.column("im")?,
    );
    let mut raw: BTreeMap<String, Vec<(f64, Elements)>> = BTreeMap::new();
    for r in 0..table.rows.len() {
        let time = table.float(r, t)?;
        let entries = raw.entry(table.rows[r][engine].clone()).or_default();
        if entries.last().is_none_or(|(last, _)| *last != time) {
            entries.push((time, Vec::new()));
        }
        let (i, j) = (table.float(r, row)? as usize, table.float(r, col)? as usize);
        let z = Complex64::new(table.float(r, re)?, table.float(r, im)?);
        entries.last_mut().expect("just pushed").1.push((i, j, z));
    }
    Ok(raw
        .into_iter()
        .map(|(engine, samples)| {
            let rhos = samples
                .into_iter()
                .map(|(time, elems)| {
                    let dim = elems.iter().map(|e| e.0.max(e.1)).max().unwrap_or(0) + 1;
                    let mut rho = DensityMatrix::zeros(dim);
                    for (i, j, z) in elems {
                        rho.set(i, j, z);
                    }
                    (time, rho)
                })
                .collect();
            (engine, rhos)
        })
        .collect())
}

/// `(engine:label) → [(t, count, members)]`
type EnsembleTable = BTreeMap<String, Vec<(f64, f64, f64)>>;

fn load_ensembles(dir: &Path) -> Result<EnsembleTable> {
    let path = dir.join("ensemble.csv");
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let table = Table::read(&path)?;
    let (t, engine, label, count) = (
        table.column("t")?,
        table.column("engine")?,
        table.column("label")?,
        table.column("count")?,
    );
    let mut members: BTreeMap<(String, u64), f64> = BTreeMap::new();
    for r in 0..table.rows.len() {
        let key = (table.rows[r][engine].clone(), table.float(r, t)?.to_bits());
        *members.entry(key).or_default() += table.float(r, count)?;
    }
    let mut out = EnsembleTable::new();
    for r in 0..table.rows.len() {
        let time = table.float(r, t)?;
        let m = members[&(table.rows[r][engine].clone(), time.to_bits())];
        let key = format!("{}:{}", table.rows[r][engine], table.rows[r][label]);
        out.entry(key).or_default().push((time, table.float(r, count)?, m));
    }
    Ok(out)
}

fn check_grid(key: &str, a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> Result<()> {
    let (a, b): (Vec<f64>, Vec<f64>) = (a.collect(), b.collect());
    if a != b {
        return Err(Error::GridMismatch(format!(
            "{key}: {} samples vs {} samples or different times",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

fn diff_series(a: &[(f64, f64)], b: &[(f64, f64)]) -> SeriesDiff {
    let mut d = SeriesDiff {
        samples: a.len(),
        linf: 0.0,
        l1_mean: 0.0,
        sign_disagreements: 0,
        a_negative_b_positive: 0,
    };
    for (&(_, x), &(_, y)) in a.iter().zip(b) {
        let e = (x - y).abs();
        d.linf = d.linf.max(e);
        d.l1_mean += e;
        let (neg_a, pos_a) = (x < -SIGN_FLOOR, x > SIGN_FLOOR);
        let (neg_b, pos_b) = (y < -SIGN_FLOOR, y > SIGN_FLOOR);
        if (neg_a && pos_b) || (pos_a && neg_b) {
            d.sign_disagreements += 1;
        }
        if neg_a && pos_b {
            d.a_negative_b_positive += 1;
        }
    }
    if !a.is_empty() {
        d.l1_mean /= a.len() as f64;
    }
    d
}

fn diff_band(a: &[(f64, f64, f64)], b: &[(f64, f64, f64)]) -> BandDiff {
    let mut d = BandDiff {
        samples: a.len(),
        violations: 0,
        max_abs_diff: 0.0,
    };
    for (&(_, ca, ma), &(_, cb, mb)) in a.iter().zip(b) {
        let (wa, wb) = (ca / ma, cb / mb);
        let var = wa * (1.0 - wa) / ma + wb * (1.0 - wb) / mb;
        let e = (wa - wb).abs();
        d.max_abs_diff = d.max_abs_diff.max(e);
        if e > 3.0 * var.sqrt() + 1e-12 {
            d.violations += 1;
        }
    }
    d
}

pub fn compare(dir_a: &Path, dir_b: &Path) -> Result<Comparison> {
    let mut sa = Series::new();
    let mut sb = Series::new();
    for (dir, s) in [(dir_a, &mut sa), (dir_b, &mut sb)] {
        load_series(dir, "combined.csv", &["current", "p0", "p1"], s)?;
        load_series(dir, "rates.csv", &["decay", "lamb_shift"], s)?;
    }
    let mut unmatched: Vec<String> = Vec::new();
    let mut series = BTreeMap::new();
    for (key, a) in &sa {
        match sb.get(key) {
            Some(b) => {
                check_grid(key, a.iter().map(|p| p.0), b.iter().map(|p| p.0))?;
                series.insert(key.clone(), diff_series(a, b));
            }
            None => unmatched.push(key.clone()),
        }
    }
    unmatched.extend(sb.keys().filter(|k| !sa.contains_key(*k)).cloned());

    let (ra, rb) = (load_rho(dir_a)?, load_rho(dir_b)?);
    let mut trace_distance_max = BTreeMap::new();
    for (engine, a) in &ra {
        let Some(b) = rb.get(engine) else {
            unmatched.push(format!("rho:{engine}"));
            continue;
        };
        check_grid(&format!("rho:{engine}"), a.iter().map(|p| p.0), b.iter().map(|p| p.0))?;
        let mut max: f64 = 0.0;
        for ((_, x), (_, y)) in a.iter().zip(b) {
            if x.dim() != y.dim() {
                return Err(Error::ScenarioMismatch(format!(
                    "rho:{engine} has dimension {} vs {}",
                    x.dim(),
                    y.dim()
                )));
            }
            max = max.max(x.trace_distance(y));
        }
        trace_distance_max.insert(engine.clone(), max);
    }
    unmatched.extend(rb.keys().filter(|k| !ra.contains_key(*k)).map(|k| format!("rho:{k}")));

    let (ea, eb) = (load_ensembles(dir_a)?, load_ensembles(dir_b)?);
    let mut ensembles = BTreeMap::new();
    for (key, a) in &ea {
        let Some(b) = eb.get(key) else {
            unmatched.push(format!("ensemble:{key}"));
            continue;
        };
        check_grid(key, a.iter().map(|p| p.0), b.iter().map(|p| p.0))?;
        ensembles.insert(key.clone(), diff_band(a, b));
    }
    unmatched.extend(eb.keys().filter(|k| !ea.contains_key(*k)).map(|k| format!("ensemble:{k}")));
    unmatched.sort();

    Ok(Comparison {
        schema_version: SCHEMA_VERSION,
        a: dir_a.display().to_string(),
        b: dir_b.display().to_string(),
        series,
        trace_distance_max,
        ensembles,
        unmatched,
    })
}
