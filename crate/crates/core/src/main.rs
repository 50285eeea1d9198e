use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use psicv::bandwidth::{self, AlphaComb};
use psicv::competitors;
use psicv::cv::{self, CvCriterion};
use psicv::extensions;
use psicv::harness::{self, parse_id_list, ExperimentConfig};
use psicv::mixtures::{NormalMixture, CATALOG_SIZE};
use psicv::oracle::{self, ExactError};
use psicv::sample::{CircularSample, Sample};

#[derive(Parser)]
#[command(name = "psicv", version, about = "Cross-validation estimation of the integrated squared density")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Ct,
    Js,
    Shd,
    Entropy,
    Circular,
    Theta1,
    Theta2,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BwMethod {
    Scv,
    Histcv,
    Histscv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CurveKind {
    Cv,
    Bandwidth,
    Mse,
}

#[derive(clap::Args)]
struct DataSource {
    /// CSV or plain text file; the first column is read, a header row is skipped
    #[arg(long, conflicts_with = "density")]
    input: Option<PathBuf>,
    /// Draw the sample from a catalog density instead
    #[arg(long)]
    density: Option<u32>,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate ψ = ∫f² (or a related functional) from data
    Estimate {
        #[command(flatten)]
        data: DataSource,
        #[arg(long, value_enum, default_value = "ct")]
        method: Method,
        /// Include the full criterion curve or plug-in trace
        #[arg(long)]
        verbose: bool,
    },
    /// Select a kernel bandwidth or histogram binwidth
    Bandwidth {
        #[command(flatten)]
        data: DataSource,
        #[arg(long, value_enum, default_value = "scv")]
        method: BwMethod,
    },
    /// Emit criterion curves as CSV
    Curves {
        #[arg(long, value_enum, default_value = "cv")]
        kind: CurveKind,
        #[arg(long, default_value_t = 1)]
        density: u32,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 60)]
        points: usize,
        #[arg(long, default_value_t = 0.01)]
        lo: f64,
        #[arg(long, default_value_t = 2.0)]
        hi: f64,
    },
    /// Print Q(f) for catalog densities as `id,Q`
    Difficulty {
        /// Ids such as 1-16 or 1,3,5
        #[arg(long, default_value = "1-16")]
        density: String,
    },
    /// Table of g_MSE/g_MISE over sample sizes
    Equivalence {
        #[arg(long, default_value_t = 1)]
        density: u32,
        #[arg(long, default_value = "100,1000,10000,100000,1000000")]
        n: String,
    },
    /// Monte Carlo comparison of CT, SHD and JS over catalog densities
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        densities: Option<String>,
        #[arg(long)]
        n: Option<String>,
        #[arg(long = "B")]
        replicates: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        estimators: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        quiet: bool,
    },
}

fn read_column(path: &Path) -> anyhow::Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("reading {}", path.display()))?;
        let Some(field) = rec.get(0).filter(|f| !f.is_empty()) else { continue };
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => bail!("{}: row {}: '{}' is not a number", path.display(), i + 1, field),
        }
    }
    Ok(out)
}

fn load(data: &DataSource) -> anyhow::Result<Vec<f64>> {
    match (&data.input, data.density) {
        (Some(p), _) => read_column(p),
        (None, Some(id)) => Ok(NormalMixture::catalog(id)?.sample(data.n, data.seed)?.values().to_vec()),
        (None, None) => bail!("either --input or --density is required"),
    }
}

fn print_json(v: &serde_json::Value) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn estimate(data: &DataSource, method: Method, verbose: bool) -> anyhow::Result<()> {
    let values = load(data)?;
    let n = values.len();
    let out = match method {
        Method::Circular => {
            let s = CircularSample::strict(values)?;
            let p = extensions::circular_psi_hat(&s)?;
            let mut v = json!({"estimate": p.estimate, "nu_cv": p.nu_cv, "n": n});
            if verbose {
                v["curve"] = serde_json::to_value(&p.curve)?;
            }
            v
        }
        _ => {
            let s = Sample::new(values)?;
            match method {
                Method::Ct => {
                    let p = cv::psi_hat(&s)?;
                    let mut v = json!({"estimate": p.estimate, "g_cv": p.g_cv, "n": n});
                    if verbose {
                        v["curve"] = serde_json::to_value(&p.curve)?;
                    }
                    v
                }
                Method::Js | Method::Shd => {
                    let t = if matches!(method, Method::Js) { competitors::psi_js(&s)? } else { competitors::psi_shd(&s)? };
                    let mut v = json!({"estimate": t.estimate, "g": t.bandwidths.1, "n": n});
                    if verbose {
                        v["trace"] = serde_json::to_value(&t)?;
                    }
                    v
                }
                Method::Entropy => {
                    let e = extensions::entropy_hat(&s)?;
                    json!({"estimate": e.estimate, "g_lcv": e.g_lcv, "n": n})
                }
                Method::Theta1 | Method::Theta2 => {
                    let r = if matches!(method, Method::Theta1) { 1 } else { 2 };
                    let t = extensions::theta_r_hat(&s, r)?;
                    json!({"estimate": t.estimate, "g_cv": t.g_cv, "r": r, "n": n})
                }
                Method::Circular => unreachable!(),
            }
        }
    };
    print_json(&out)
}

fn select_bandwidth(data: &DataSource, method: BwMethod) -> anyhow::Result<()> {
    let s = Sample::new(load(data)?)?;
    let (param, crit) = match method {
        BwMethod::Scv => {
            let h = bandwidth::h_hat(&s)?;
            (h.bandwidth, h.criterion_min)
        }
        BwMethod::Histcv => {
            let b = bandwidth::hist_cv_binwidth(&s)?;
            (b.binwidth, b.criterion_min)
        }
        BwMethod::Histscv => {
            let b = bandwidth::hist_scv_binwidth(&s)?;
            (b.binwidth, b.criterion_min)
        }
    };
    print_json(&json!({"parameter": param, "criterion_min": crit, "n": s.len()}))
}

fn log_grid(lo: f64, hi: f64, points: usize) -> anyhow::Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && points >= 2) {
        bail!("grid needs 0 < lo < hi and at least two points");
    }
    let step = (hi / lo).ln() / (points - 1) as f64;
    Ok((0..points).map(|k| lo * (step * k as f64).exp()).collect())
}

#[allow(clippy::too_many_arguments)]
fn curves(kind: CurveKind, density: u32, n: usize, seed: u64, points: usize, lo: f64, hi: f64) -> anyhow::Result<()> {
    let f = NormalMixture::catalog(density)?;
    let grid = log_grid(lo, hi, points)?;
    let exact = ExactError::new(&f, n)?;
    let out = std::io::stdout();
    let mut out = out.lock();
    match kind {
        CurveKind::Cv => {
            let s = f.sample(n, seed)?;
            let c = CvCriterion::new(&s);
            writeln!(out, "g,cv,mise_exact,mse_exact")?;
            for g in grid {
                writeln!(out, "{},{},{},{}", g, c.cv(g), exact.mise(g), exact.mse(g))?;
            }
        }
        CurveKind::Bandwidth => {
            let s = f.sample(n, seed)?;
            writeln!(out, "h,m_hat,mise_exact")?;
            for h in grid {
                let m = bandwidth::psi_alpha_hat(&s, &AlphaComb::scv(h)?)?.estimate + cv::ROUGHNESS_L / (n as f64 * h);
                writeln!(out, "{},{},{}", h, m, exact.mise(h))?;
            }
        }
        CurveKind::Mse => {
            writeln!(out, "g,bias,variance,mse,mise")?;
            for g in grid {
                let p = exact.point(g);
                writeln!(out, "{},{},{},{},{}", p.g, p.bias, p.variance, p.mse, p.mise)?;
            }
        }
    }
    Ok(())
}

fn ids(text: &str) -> anyhow::Result<Vec<u32>> {
    let v = parse_id_list(text)?;
    if let Some(bad) = v.iter().find(|&&d| d == 0 || d > CATALOG_SIZE as u64) {
        bail!("density id {bad} outside 1..={CATALOG_SIZE}");
    }
    Ok(v.into_iter().map(|d| d as u32).collect())
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Estimate { data, method, verbose } => estimate(&data, method, verbose),
        Command::Bandwidth { data, method } => select_bandwidth(&data, method),
        Command::Curves { kind, density, n, seed, points, lo, hi } => curves(kind, density, n, seed, points, lo, hi),
        Command::Difficulty { density } => {
            println!("id,Q");
            for id in ids(&density)? {
                println!("{},{}", id, NormalMixture::catalog(id)?.q_difficulty()?);
            }
            Ok(())
        }
        Command::Equivalence { density, n } => {
            let f = NormalMixture::catalog(density)?;
            let ns: Vec<usize> = parse_id_list(&n)?.into_iter().map(|v| v as usize).collect();
            println!("n,g_mse,g_mise,ratio,scaled_gap");
            for r in oracle::equivalence_table(&f, &ns)? {
                println!("{},{},{},{},{}", r.n, r.g_mse, r.g_mise, r.ratio, r.scaled_gap);
            }
            Ok(())
        }
        Command::Simulate { config, densities, n, replicates, seed, workers, estimators, out, json, quiet } => {
            let mut cfg = match &config {
                Some(p) => ExperimentConfig::from_file(p)?,
                None => ExperimentConfig::default(),
            };
            if let Some(d) = densities {
                cfg.set("densities", &d)?;
            }
            if let Some(n) = n {
                cfg.set("n", &n)?;
            }
            if let Some(b) = replicates {
                cfg.replicates = b;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if let Some(e) = estimators {
                cfg.set("estimators", &e)?;
            }
            let step = 1.max(cfg.densities.len() * cfg.ns.len() * cfg.replicates / 100);
            let result = harness::run_with_progress(&cfg, |done, total| {
                if !quiet && (done % step == 0 || done == total) {
                    eprint!("\r{done}/{total} replicates");
                    if done == total {
                        eprintln!();
                    }
                }
            })?;
            harness::export(&result, &out, json)?;
            println!("n,estimator,mean,median,min,max,argmax");
            for r in &result.summary {
                println!("{},{},{:.3},{:.3},{:.3},{:.3},{}", r.n, r.estimator, r.mean, r.median, r.min, r.max, r.argmax);
            }
            Ok(())
        }
    }
}
