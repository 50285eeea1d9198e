//! Seeded Monte Carlo comparison of ∫f² estimators over the catalog densities.
//!
//! Each replicate draws one sample that every estimator sees. Replicates run in
//! parallel and are collected in a fixed order, so outputs do not depend on the
//! worker count.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::competitors::{psi_js, psi_shd};
use crate::cv::psi_hat;
use crate::error::{Error, Result};
use crate::mixtures::{NormalMixture, CATALOG_SIZE};
use crate::sample::{Provenance, Sample};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Estimator {
    #[serde(rename = "CT")]
    Ct,
    #[serde(rename = "SHD")]
    Shd,
    #[serde(rename = "JS")]
    Js,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Ct, Estimator::Shd, Estimator::Js];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Ct => "CT",
            Estimator::Shd => "SHD",
            Estimator::Js => "JS",
        }
    }

    /// Estimate plus a note when the estimator fell back to a simpler rule.
    pub fn estimate(self, s: &Sample) -> Result<(f64, Option<String>)> {
        match self {
            Estimator::Ct => psi_hat(s).map(|p| (p.estimate, None)),
            Estimator::Shd => psi_shd(s).map(|t| (t.estimate, t.fallback)),
            Estimator::Js => psi_js(s).map(|t| (t.estimate, t.fallback)),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "CT" => Ok(Estimator::Ct),
            "SHD" => Ok(Estimator::Shd),
            "JS" => Ok(Estimator::Js),
            other => Err(Error::Parse(format!("unknown estimator '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub densities: Vec<u32>,
    pub ns: Vec<usize>,
    pub replicates: usize,
    pub estimators: Vec<Estimator>,
    pub seed: u64,
    /// Execution setting only; left out of exported results so they do not
    /// depend on it.
    #[serde(skip_serializing, default = "one")]
    pub workers: usize,
}

fn one() -> usize {
    1
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            densities: (1..=CATALOG_SIZE).collect(),
            ns: vec![100, 1000],
            replicates: 500,
            estimators: Estimator::ALL.to_vec(),
            seed: 42,
            workers: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.replicates == 0 {
            return bad("replicates must be at least 1");
        }
        if self.densities.is_empty() || self.ns.is_empty() || self.estimators.is_empty() {
            return bad("densities, sample sizes and estimators must be non-empty");
        }
        if let Some(d) = self.densities.iter().find(|&&d| d == 0 || d > CATALOG_SIZE) {
            return Err(Error::InvalidArgument(format!("density id {d} outside 1..={CATALOG_SIZE}")));
        }
        if self.ns.iter().any(|&n| n < 2) {
            return bad("sample sizes must be at least 2");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let num = |v: &str| v.parse::<u64>().map_err(|_| Error::Parse(format!("{key}: '{v}' is not an integer")));
        match key.trim().to_ascii_lowercase().as_str() {
            "densities" => self.densities = parse_id_list(value)?.into_iter().map(|v| v as u32).collect(),
            "n" | "ns" => self.ns = parse_id_list(value)?.into_iter().map(|v| v as usize).collect(),
            "b" | "replicates" => self.replicates = num(value)? as usize,
            "estimators" => self.estimators = value.split(',').map(str::parse).collect::<Result<_>>()?,
            "seed" => self.seed = num(value)?,
            "workers" => self.workers = num(value)? as usize,
            other => return Err(Error::Parse(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Reads a flat `key = value` file; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_text(&text)
    }
}

/// Parses "1-3,7,10-11" into [1, 2, 3, 7, 10, 11].
pub fn parse_id_list(text: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let parse = |v: &str| v.trim().parse::<u64>().map_err(|_| Error::Parse(format!("bad list entry '{part}'")));
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (parse(a)?, parse(b)?);
                if a > b {
                    return Err(Error::Parse(format!("empty range '{part}'")));
                }
                out.extend(a..=b);
            }
            None => out.push(parse(part)?),
        }
    }
    if out.is_empty() {
        return Err(Error::Parse("empty list".into()));
    }
    Ok(out)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// base_seed ⊕ hash(density, n, replicate).
pub fn replicate_seed(base: u64, density: u32, n: usize, replicate: usize) -> u64 {
    let h = splitmix64(splitmix64(splitmix64(density as u64) ^ n as u64) ^ replicate as u64);
    base ^ h
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub density: u32,
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub checksum: u64,
    pub estimator: Estimator,
    pub estimate: f64,
    pub rel_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub density: u32,
    pub n: usize,
    pub replicate: usize,
    pub estimator: Estimator,
    /// "error" drops the replicate; "fallback" keeps the fallback value.
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub density: u32,
    pub n: usize,
    pub estimator: Estimator,
    pub rrmse: f64,
    pub ratio: f64,
    pub used: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub estimator: Estimator,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    /// Density with the largest ratio (first in id order on ties).
    pub argmax: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub truths: BTreeMap<u32, f64>,
    pub records: Vec<ReplicateRecord>,
    pub failures: Vec<FailureRecord>,
    pub cells: Vec<Cell>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentResult {
    pub fn cell(&self, density: u32, n: usize, estimator: Estimator) -> Option<&Cell> {
        self.cells.iter().find(|c| c.density == density && c.n == n && c.estimator == estimator)
    }

    pub fn summary_row(&self, n: usize, estimator: Estimator) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.n == n && r.estimator == estimator)
    }
}

struct Task {
    density: u32,
    n: usize,
    replicate: usize,
}

type TaskOutput = (Vec<ReplicateRecord>, Vec<FailureRecord>);

fn run_task(cfg: &ExperimentConfig, f: &NormalMixture, psi: f64, t: &Task) -> TaskOutput {
    let seed = replicate_seed(cfg.seed, t.density, t.n, t.replicate);
    let prov = Provenance { density: Some(t.density), seed: Some(seed), replicate: Some(t.replicate as u64) };
    let sample = f.sample_with(t.n, seed, prov).expect("catalog sampling with n ≥ 2");
    let checksum = sample.checksum();
    let mut records = Vec::with_capacity(cfg.estimators.len());
    let mut failures = Vec::new();
    for &est in &cfg.estimators {
        let fail = |kind: &str, message: String| FailureRecord {
            density: t.density,
            n: t.n,
            replicate: t.replicate,
            estimator: est,
            kind: kind.into(),
            message,
        };
        match est.estimate(&sample) {
            Ok((value, note)) => {
                if let Some(msg) = note {
                    failures.push(fail("fallback", msg));
                }
                records.push(ReplicateRecord {
                    density: t.density,
                    n: t.n,
                    replicate: t.replicate,
                    seed,
                    checksum,
                    estimator: est,
                    estimate: value,
                    rel_error: (value - psi) / psi,
                });
            }
            Err(e) => failures.push(fail("error", e.to_string())),
        }
    }
    (records, failures)
}

/// Runs the experiment; `progress` receives the number of finished replicates.
pub fn run_with_progress<P: Fn(usize, usize) + Sync>(cfg: &ExperimentConfig, progress: P) -> Result<ExperimentResult> {
    cfg.validate()?;
    let mut mixtures = BTreeMap::new();
    let mut truths = BTreeMap::new();
    for &d in &cfg.densities {
        let f = NormalMixture::catalog(d)?;
        truths.insert(d, f.true_psi());
        mixtures.insert(d, f);
    }
    let tasks: Vec<Task> = cfg
        .densities
        .iter()
        .flat_map(|&density| {
            cfg.ns.iter().flat_map(move |&n| (0..cfg.replicates).map(move |replicate| Task { density, n, replicate }))
        })
        .collect();
    let total = tasks.len();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let outputs: Vec<TaskOutput> = pool.install(|| {
        tasks
            .par_iter()
            .map(|t| {
                let out = run_task(cfg, &mixtures[&t.density], truths[&t.density], t);
                progress(done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1, total);
                out
            })
            .collect()
    });
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (r, f) in outputs {
        records.extend(r);
        failures.extend(f);
    }
    let cells = compute_cells(cfg, &truths, &records, &failures);
    let summary = summarize(&cells);
    Ok(ExperimentResult { config: cfg.clone(), truths, records, failures, cells, summary })
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_with_progress(cfg, |_, _| {})
}

fn compute_cells(
    cfg: &ExperimentConfig,
    truths: &BTreeMap<u32, f64>,
    records: &[ReplicateRecord],
    failures: &[FailureRecord],
) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &d in &cfg.densities {
        for &n in &cfg.ns {
            let start = cells.len();
            for &est in &cfg.estimators {
                let errs: Vec<f64> = records
                    .iter()
                    .filter(|r| r.density == d && r.n == n && r.estimator == est)
                    .map(|r| r.estimate - truths[&d])
                    .collect();
                let nfail = failures
                    .iter()
                    .filter(|f| f.density == d && f.n == n && f.estimator == est && f.kind == "error")
                    .count();
                let rrmse = if errs.is_empty() {
                    f64::NAN
                } else {
                    (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt() / truths[&d]
                };
                cells.push(Cell { density: d, n, estimator: est, rrmse, ratio: f64::NAN, used: errs.len(), failures: nfail });
            }
            let best = cells[start..].iter().map(|c| c.rrmse).filter(|v| !v.is_nan()).fold(f64::INFINITY, f64::min);
            for c in &mut cells[start..] {
                c.ratio = c.rrmse / best;
            }
        }
    }
    cells
}

/// Mean, median, min and max of the ratios over densities, per (n, estimator).
pub fn summarize(cells: &[Cell]) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, Estimator)> = Vec::new();
    for c in cells {
        if !keys.contains(&(c.n, c.estimator)) {
            keys.push((c.n, c.estimator));
        }
    }
    keys.sort();
    keys.into_iter()
        .map(|(n, est)| {
            let mut rows: Vec<(u32, f64)> = cells
                .iter()
                .filter(|c| c.n == n && c.estimator == est && !c.ratio.is_nan())
                .map(|c| (c.density, c.ratio))
                .collect();
            rows.sort_by_key(|r| r.0);
            let mut v: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let argmax = rows.iter().fold((0u32, f64::NEG_INFINITY), |acc, &(d, r)| if r > acc.1 { (d, r) } else { acc }).0;
            v.sort_by(f64::total_cmp);
            let m = v.len();
            let (mean, median, min, max) = if m == 0 {
                (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
            } else {
                let median = if m % 2 == 1 { v[m / 2] } else { 0.5 * (v[m / 2 - 1] + v[m / 2]) };
                (v.iter().sum::<f64>() / m as f64, median, v[0], v[m - 1])
            };
            SummaryRow { n, estimator: est, mean, median, min, max, argmax }
        })
        .collect()
}

fn io_err(path: &Path, e: impl Into<std::io::Error>) -> Error {
    Error::Io { path: path.to_path_buf(), source: e.into() }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io_err(path, io),
        other => Error::Parse(format!("{}: {other:?}", path.display())),
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}

/// Files written by [`export`].
#[derive(Clone, Debug)]
pub struct ExportPaths {
    pub summary: PathBuf,
    pub cells: PathBuf,
    pub reldist: PathBuf,
    pub failures: PathBuf,
    pub json: Option<PathBuf>,
}

/// Writes summary.csv, cells.csv, reldist.csv and failures.csv into `dir`,
/// plus result.json when `json` is set.
pub fn export(result: &ExperimentResult, dir: &Path, json: bool) -> Result<ExportPaths> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let paths = ExportPaths {
        summary: dir.join("summary.csv"),
        cells: dir.join("cells.csv"),
        reldist: dir.join("reldist.csv"),
        failures: dir.join("failures.csv"),
        json: json.then(|| dir.join("result.json")),
    };
    write_csv(&paths.summary, &result.summary)?;
    write_csv(&paths.cells, &result.cells)?;
    write_csv(&paths.reldist, &result.records)?;
    if result.failures.is_empty() {
        fs::write(&paths.failures, "density,n,replicate,estimator,kind,message\n").map_err(|e| io_err(&paths.failures, e))?;
    } else {
        write_csv(&paths.failures, &result.failures)?;
    }
    if let Some(p) = &paths.json {
        let text = serde_json::to_string_pretty(result).map_err(|e| Error::Parse(e.to_string()))?;
        fs::write(p, text).map_err(|e| io_err(p, e))?;
    }
    Ok(paths)
}

pub fn read_cells(path: &Path) -> Result<Vec<Cell>> {
    read_csv(path)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    read_csv(path)
}

pub fn read_reldist(path: &Path) -> Result<Vec<ReplicateRecord>> {
    read_csv(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig { densities: vec![1, 6], ns: vec![30], replicates: 3, seed: 7, ..Default::default() }
    }

    #[test]
    fn id_lists() {
        assert_eq!(parse_id_list("1-3,7, 10-11").unwrap(), vec![1, 2, 3, 7, 10, 11]);
        assert!(parse_id_list("3-1").is_err());
        assert!(parse_id_list("").is_err());
        assert!(parse_id_list("a").is_err());
    }

    #[test]
    fn config_file() {
        let cfg = ExperimentConfig::from_text("# run\ndensities = 1-4\nn = 100\nB = 20\nestimators = ct, js\nseed=9\nworkers = 2\n").unwrap();
        assert_eq!(cfg.densities, vec![1, 2, 3, 4]);
        assert_eq!(cfg.ns, vec![100]);
        assert_eq!(cfg.replicates, 20);
        assert_eq!(cfg.estimators, vec![Estimator::Ct, Estimator::Js]);
        assert_eq!((cfg.seed, cfg.workers), (9, 2));
        assert!(ExperimentConfig::from_text("colour = blue").is_err());
        assert!(ExperimentConfig::from_text("densities").is_err());
        let bad = ExperimentConfig { replicates: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig { densities: vec![17], ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a = replicate_seed(42, 1, 100, 0);
        assert_eq!(a, replicate_seed(42, 1, 100, 0));
        assert_ne!(a, replicate_seed(42, 1, 100, 1));
        assert_ne!(a, replicate_seed(42, 2, 100, 0));
        assert_ne!(a, replicate_seed(42, 1, 1000, 0));
        assert_ne!(a, replicate_seed(43, 1, 100, 0));
    }

    #[test]
    fn single_replicate_rrmse_is_relative_error() {
        let cfg = ExperimentConfig { replicates: 1, ..small() };
        let res = run(&cfg).unwrap();
        for c in &res.cells {
            let r = res.records.iter().find(|r| r.density == c.density && r.n == c.n && r.estimator == c.estimator).unwrap();
            assert!((c.rrmse - r.rel_error.abs()).abs() < 1e-15);
        }
    }

    #[test]
    fn paired_samples_and_ratio_normalization() {
        let res = run(&small()).unwrap();
        for d in [1, 6] {
            for rep in 0..3 {
                let sums: Vec<u64> = res.records.iter().filter(|r| r.density == d && r.replicate == rep).map(|r| r.checksum).collect();
                assert_eq!(sums.len(), 3);
                assert!(sums.windows(2).all(|w| w[0] == w[1]));
            }
            let min = res.cells.iter().filter(|c| c.density == d).map(|c| c.ratio).fold(f64::INFINITY, f64::min);
            assert_eq!(min, 1.0);
        }
        assert_eq!(res.records.len() + res.failures.iter().filter(|f| f.kind == "error").count(), 2 * 3 * 3);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let a = run(&small()).unwrap();
        let b = run(&ExperimentConfig { workers: 3, ..small() }).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.cells, b.cells);
    }

    #[test]
    fn export_round_trip() {
        let res = run(&small()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = export(&res, dir.path(), true).unwrap();
        let cells = read_cells(&paths.cells).unwrap();
        assert_eq!(cells, res.cells);
        assert_eq!(summarize(&cells), read_summary(&paths.summary).unwrap());
        assert_eq!(read_reldist(&paths.reldist).unwrap().len(), res.records.len());
        let json: ExperimentResult = serde_json::from_str(&fs::read_to_string(paths.json.unwrap()).unwrap()).unwrap();
        assert_eq!(json.cells, res.cells);
        assert!(export(&res, Path::new("/proc/forbidden/dir"), false).is_err());
    }
}
