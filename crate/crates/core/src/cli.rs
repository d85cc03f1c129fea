//! Batch command-line front end: builds amplitude tables, runs variance and
//! CLT experiments, emits CSV/JSON reports, and manages the cache directory.
//!
//! Exit codes: 0 success, 2 usage error (from argument parsing), 1
//! computation error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::amplitude::{build_table, default_kappa, partial_stats, peter_kappa, AmplitudeTable};
use crate::error::{Error, Result};
use crate::quadratic::nu_count;
use crate::relations::find_relations;
use crate::stats::{moment_report, sample_taus, MomentReport};
use crate::testfn::{make_test_function, make_weight, sigma_model, TestFunctionKind, WeightKind};
use crate::trace::{
    hyperbolic_sum, mean_term, required_n_max, residual_term, residual_term_batch, spectral_side,
    EigenvalueList, ExperimentConfig, SamplingMode,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "modspec",
    version,
    about = "Length-spectrum arithmetic and spectral statistics of the modular surface"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FArg {
    Triangle,
    Bump,
}

impl From<FArg> for TestFunctionKind {
    fn from(v: FArg) -> Self {
        match v {
            FArg::Triangle => TestFunctionKind::Triangle,
            FArg::Bump => TestFunctionKind::SmoothBump,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WArg {
    Bump,
    Indicator,
}

impl From<WArg> for WeightKind {
    fn from(v: WArg) -> Self {
        match v {
            WArg::Bump => WeightKind::SmoothBump,
            WArg::Indicator => WeightKind::Indicator,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Montecarlo,
    Quadrature,
}

impl From<ModeArg> for SamplingMode {
    fn from(v: ModeArg) -> Self {
        match v {
            ModeArg::Montecarlo => SamplingMode::Montecarlo,
            ModeArg::Quadrature => SamplingMode::Quadrature,
        }
    }
}

/// Accept plain or scientific notation for integer-valued flags.
fn parse_sci_u64(s: &str) -> std::result::Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !f.is_finite() || f < 0.0 || f > 1.8e18 || f.fract() != 0.0 {
        return Err(format!("{s} is not a nonnegative integer"));
    }
    Ok(f as u64)
}

#[derive(Args)]
struct ExperimentArgs {
    /// Window base T (tau is averaged over [T, 2T]).
    #[arg(long = "T", value_name = "T")]
    t: f64,
    /// Inverse width L of the spectral window.
    #[arg(long = "L", value_name = "L")]
    l: f64,
    /// Sample count M.
    #[arg(long, value_parser = parse_sci_u64)]
    samples: u64,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Test-function pair.
    #[arg(long, value_enum, default_value = "triangle")]
    f: FArg,
    /// Averaging weight.
    #[arg(long, value_enum, default_value = "bump")]
    w: WArg,
    /// Sampling mode.
    #[arg(long, value_enum, default_value = "montecarlo")]
    mode: ModeArg,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Amplitude-table cache directory (default: $GSL_CACHE_DIR).
    #[arg(long)]
    cache: Option<PathBuf>,
}

impl ExperimentArgs {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            t: self.t,
            l: self.l,
            samples: self.samples,
            seed: self.seed,
            f: self.f.into(),
            w: self.w.into(),
            mode: self.mode.into(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build (or load) the amplitude table and write it as CSV.
    Amp {
        #[arg(long, value_parser = parse_sci_u64)]
        nmax: u64,
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print Peter's constant kappa with its tail bound.
    Peter {
        #[arg(long, value_parser = parse_sci_u64, default_value = "1000000")]
        pmax: u64,
    },
    /// Print the mean and mean square of the amplitude up to nmax.
    Meansq {
        #[arg(long, value_parser = parse_sci_u64)]
        nmax: u64,
        #[arg(long, value_parser = parse_sci_u64, default_value = "1000000")]
        pmax: u64,
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Run the variance experiment and write the JSON report.
    Variance {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Report destination (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the CLT experiment: JSON report plus optional histogram CSV.
    Clt {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Histogram CSV destination.
        #[arg(long)]
        hist: Option<PathBuf>,
    },
    /// Enumerate canonical same-field norm relations and write them as CSV.
    Relations {
        #[arg(long, value_parser = parse_sci_u64)]
        nmax: u64,
        #[arg(long)]
        kmax: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Count fundamental-solution triples with 2 < x < X.
    Nu {
        #[arg(long = "X")]
        x: f64,
    },
    /// Print RMS of the residual term over sampled tau, relative to sigma_L.
    Residual {
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Print the trace-formula pieces S, mean term and residual at one tau.
    TraceEval {
        #[arg(long)]
        tau: f64,
        #[arg(long = "L")]
        l: f64,
        #[arg(long, value_enum, default_value = "triangle")]
        f: FArg,
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Compare the spectral side from an eigenvalue file with the
    /// trace-formula side.
    SpectralCheck {
        #[arg(long)]
        eigs: PathBuf,
        #[arg(long)]
        tau: f64,
        #[arg(long = "L")]
        l: f64,
        #[arg(long, value_enum, default_value = "triangle")]
        f: FArg,
        #[arg(long)]
        cache: Option<PathBuf>,
    },
}

fn cache_dir(flag: Option<&Path>) -> Option<PathBuf> {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os("GSL_CACHE_DIR").map(PathBuf::from))
}

fn set_workers(workers: Option<usize>) {
    if let Some(n) = workers {
        // Ignore failure: the global pool may already exist (tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn table_for(l: f64, f: TestFunctionKind, cache: Option<&Path>) -> Result<AmplitudeTable> {
    let need = required_n_max(l, &make_test_function(f));
    build_table(need.max(3), cache_dir(cache).as_deref())
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn report_json(report: &MomentReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

fn run_experiment(exp: &ExperimentArgs) -> Result<MomentReport> {
    set_workers(exp.workers);
    let cfg = exp.config();
    for warning in cfg.validate()? {
        eprintln!("warning: {warning}");
    }
    let table = table_for(cfg.l, cfg.f, exp.cache.as_deref())?;
    moment_report(&cfg, &table)
}

fn histogram_csv(report: &MomentReport) -> String {
    let mut out = String::new();
    let c = &report.config;
    out.push_str(&format!(
        "# clt-hist v1 T={} L={} M={} seed={} f={} w={} mode={} version={}\n",
        c.t, c.l, c.samples, c.seed, c.f, c.w, c.mode, report.version
    ));
    out.push_str("bin_left,bin_right,count\n");
    let h = &report.histogram;
    for (i, count) in h.counts.iter().enumerate() {
        out.push_str(&format!(
            "{:.6},{:.6},{}\n",
            h.edges[i],
            h.edges[i + 1],
            count
        ));
    }
    out.push_str(&format!(
        "# overflow below={} above={}\n",
        h.overflow.below, h.overflow.above
    ));
    out
}

fn relations_csv(nmax: u64, kmax: u32) -> Result<String> {
    let rels = find_relations(nmax, kmax)?;
    let mut out = String::new();
    out.push_str(&format!(
        "# relations v1 nmax={nmax} kmax={kmax} version={VERSION}\n"
    ));
    out.push_str("terms,signs,blocks\n");
    for r in &rels {
        let terms: Vec<String> = r.terms.iter().map(|t| t.n.to_string()).collect();
        let signs: Vec<String> = r
            .terms
            .iter()
            .map(|t| if t.sign > 0 { "+" } else { "-" }.to_string())
            .collect();
        let blocks: Vec<String> = r
            .blocks
            .iter()
            .map(|b| {
                let idx: Vec<String> = b.indices.iter().map(usize::to_string).collect();
                format!("{}:{}", b.fundamental_d, idx.join(";"))
            })
            .collect();
        out.push_str(&format!(
            "{},{},{}\n",
            terms.join(";"),
            signs.join(";"),
            blocks.join("|")
        ));
    }
    Ok(out)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Amp { nmax, cache, out } => {
            let table = build_table(nmax, cache_dir(cache.as_deref()).as_deref())?;
            let text = crate::amplitude::render_cache(&table);
            std::fs::write(&out, text).map_err(|e| Error::io(&out, e))?;
            eprintln!("amplitude table n_max={nmax} written to {}", out.display());
            Ok(())
        }
        Command::Peter { pmax } => {
            let k = peter_kappa(pmax);
            println!("# peter v1 pmax={} version={}", k.p_max, VERSION);
            println!("kappa = {:.12}", k.value);
            println!("tail_bound_relative = {:.3e}", k.tail_bound);
            Ok(())
        }
        Command::Meansq { nmax, pmax, cache } => {
            let table = build_table(nmax, cache_dir(cache.as_deref()).as_deref())?;
            let (s, s2) = partial_stats(&table, nmax)?;
            let kappa = peter_kappa(pmax).value;
            let n = nmax as f64;
            println!("# meansq v1 nmax={nmax} kappa_pmax={pmax} version={VERSION}");
            println!("mean      = {:.10}", s / n);
            println!("meansq/k  = {:.10}", s2 / (kappa * n));
            println!("kappa     = {kappa:.10}");
            Ok(())
        }
        Command::Variance { exp, out } => {
            let report = run_experiment(&exp)?;
            write_or_print(out.as_deref(), &report_json(&report))
        }
        Command::Clt { exp, out, hist } => {
            let report = run_experiment(&exp)?;
            if let Some(path) = hist.as_deref() {
                std::fs::write(path, histogram_csv(&report)).map_err(|e| Error::io(path, e))?;
            }
            write_or_print(out.as_deref(), &report_json(&report))
        }
        Command::Relations { nmax, kmax, out } => {
            let text = relations_csv(nmax, kmax)?;
            std::fs::write(&out, &text).map_err(|e| Error::io(&out, e))?;
            eprintln!(
                "{} relations written to {}",
                text.lines().count().saturating_sub(2),
                out.display()
            );
            Ok(())
        }
        Command::Nu { x } => {
            println!("# nu v1 X={x} version={VERSION}");
            println!("{}", nu_count(x));
            Ok(())
        }
        Command::Residual { exp } => {
            set_workers(exp.workers);
            let cfg = exp.config();
            for warning in cfg.validate()? {
                eprintln!("warning: {warning}");
            }
            let f = make_test_function(cfg.f);
            let w = make_weight(cfg.w);
            let sample = sample_taus(&cfg, &w)?;
            let values = residual_term_batch(&sample.taus, cfg.l, &f)?;
            let ms: f64 = values
                .iter()
                .zip(&sample.weights)
                .map(|(v, wt)| wt * v * v)
                .sum();
            let sigma = sigma_model(cfg.l, &f, default_kappa())?.sigma_sq.sqrt();
            println!(
                "# residual v1 T={} L={} M={} seed={} f={} w={} version={VERSION}",
                cfg.t, cfg.l, cfg.samples, cfg.seed, cfg.f, cfg.w
            );
            println!("rms_residual_over_sigma = {:.8}", ms.sqrt() / sigma);
            Ok(())
        }
        Command::TraceEval { tau, l, f, cache } => {
            let fk: TestFunctionKind = f.into();
            let func = make_test_function(fk);
            let table = table_for(l, fk, cache.as_deref())?;
            let s = hyperbolic_sum(tau, l, &func, &table)?;
            let mean = mean_term(tau, l, &func)?;
            let residual = residual_term(tau, l, &func)?;
            let n_levels = (0.25 + tau * tau).sqrt() / (6.0 * l);
            println!("# trace-eval v1 tau={tau} L={l} f={fk} version={VERSION}");
            println!("hyperbolic_sum = {s:.10}");
            println!("mean_term      = {mean:.10}");
            println!("residual_term  = {residual:.10}");
            println!("n_levels       = {n_levels:.6}");
            Ok(())
        }
        Command::SpectralCheck {
            eigs,
            tau,
            l,
            f,
            cache,
        } => {
            let fk: TestFunctionKind = f.into();
            let func = make_test_function(fk);
            let list = EigenvalueList::from_file(&eigs)?;
            let table = table_for(l, fk, cache.as_deref())?;
            let spectral = spectral_side(tau, l, &func, &list);
            let smooth = mean_term(tau, l, &func)?
                + hyperbolic_sum(tau, l, &func, &table)?
                + residual_term(tau, l, &func)?;
            println!(
                "# spectral-check v1 eigs={} tau={tau} L={l} f={fk} version={VERSION}",
                eigs.display()
            );
            println!("spectral_side  = {spectral:.10}");
            println!("trace_side     = {smooth:.10}");
            println!("gap            = {:.10}", spectral - smooth);
            println!(
                "# caveat: qualitative only; truncation and continuous spectrum are unmodeled"
            );
            Ok(())
        }
    }
}

/// Parse argv and run; the process exit status follows the error class.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
