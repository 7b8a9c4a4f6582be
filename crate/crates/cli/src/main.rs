//! `rtf-local`: batch front end for the fundamental lemma, matching, and Kuznetsov tables.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 usage error, 3 computation failure.

mod config;
mod report;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use config::{RunConfig, Settings, UsageError};
use report::*;
use rtf_local::field::MeasureConstants;
use rtf_local::orbital::{fw0_closed, fw0_series};
use rtf_local::{o_kuz_closed, o_kuz_direct, verify_fl, verify_matching, Complex64, ExtKind, KSection, PadicScalar};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rtf-local", version, about = "Orbital integrals, matching and the fundamental lemma for PGL2 over Q_p")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compare |.|G(h * f_Z^0) with h * f_W^0 on a valuation window.
    VerifyFl(Common),
    /// Kuznetsov orbital integrals and the basic vector, closed form against direct engines.
    Tables(Common),
    /// Shape and inner-product identity of |.|G on seeded random inputs.
    VerifyMatching(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Line-based `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<String>,
    /// split | inert
    #[arg(long)]
    ext: Option<String>,
    /// Hecke element `n:c[,n:c...]` in the h_n basis; repeat for several. Empty means h_0.
    #[arg(long, allow_hyphen_values = true)]
    hecke: Vec<String>,
    /// Valuation window `a:b`.
    #[arg(long, allow_hyphen_values = true)]
    val_window: Option<String>,
    /// Relative p-adic precision cap.
    #[arg(long)]
    precision: Option<String>,
    #[arg(long)]
    tolerance: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Worker threads (0: all cores).
    #[arg(long)]
    jobs: Option<String>,
    /// Random inputs for verify-matching.
    #[arg(long)]
    samples: Option<String>,
    /// json | csv
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> std::result::Result<RunConfig, UsageError> {
        let mut s = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| UsageError(format!("--config {}: {}", path.display(), e)))?;
                Settings::from_file_text(&text)?
            }
            None => Settings::default(),
        };
        let one = |v: &Option<String>| v.iter().cloned().collect::<Vec<_>>();
        s.set("p", one(&self.p));
        s.set("ext", one(&self.ext));
        s.set("hecke", self.hecke.clone());
        s.set("val-window", one(&self.val_window));
        s.set("precision", one(&self.precision));
        s.set("tolerance", one(&self.tolerance));
        s.set("seed", one(&self.seed));
        s.set("jobs", one(&self.jobs));
        s.set("samples", one(&self.samples));
        s.set("format", one(&self.format));
        s.set("out", self.out.iter().map(|p| p.display().to_string()).collect());
        s.resolve()
    }
}

fn emit(cfg: &RunConfig, text: &str) -> Result<()> {
    match &cfg.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{}", text);
            Ok(())
        }
    }
}

fn cmd_verify_fl(cfg: &RunConfig) -> Result<bool> {
    let mut results = Vec::new();
    for (spec, h) in cfg.hecke.iter().zip(cfg.hecke_elements()) {
        let r = verify_fl(cfg.p, cfg.kind(), &h, cfg.val_window, cfg.tolerance)?;
        eprintln!("verify-fl p={} {} h=[{}] max_error={:.3e} pass={} ({} ms)", cfg.p, cfg.ext, hecke_label(spec), r.max_error, r.pass, r.millis);
        results.push(FlResult::new(spec, &r));
    }
    let pass = results.iter().all(|r| r.pass);
    let env = Envelope { schema_version: SCHEMA_VERSION, command: "verify-fl", config: cfg, pass, body: FlBody { results } };
    emit(cfg, &render_fl(&env, cfg.format)?)?;
    Ok(pass)
}

fn cmd_tables(cfg: &RunConfig) -> Result<bool> {
    let p = cfg.p;
    let (lo, hi) = cfg.val_window;
    let prec = cfg.precision;
    let mut kuznetsov = Vec::new();
    for m in 0..=4u32 {
        for v in lo..=hi {
            let x = PadicScalar::new(p, v, 1, prec);
            let closed = o_kuz_closed(p, m, &x)?;
            let direct = o_kuz_direct(p, &KSection::basis(m), &KSection::basis(0), &x)?;
            kuznetsov.push(KuzRow { m, val: v, closed, direct, delta: (closed - direct).norm() });
        }
    }
    let mut basic = Vec::new();
    for s in [1.0, 1.5] {
        for v in lo..=hi {
            let x = PadicScalar::new(p, v, 1, prec);
            let sc = Complex64::new(s, 0.0);
            let closed = fw0_closed(p, cfg.kind(), sc, &x)?;
            let series = fw0_series(p, cfg.kind(), sc, &x)?;
            basic.push(BasicRow { s, val: v, closed, series, delta: (closed - series).norm() });
        }
    }
    let worst = kuznetsov.iter().map(|r| r.delta).chain(basic.iter().map(|r| r.delta)).fold(0.0, f64::max);
    let pass = worst <= cfg.tolerance;
    eprintln!("tables p={} {} max_delta={:.3e} pass={}", p, cfg.ext, worst, pass);
    let vol_x = MeasureConstants::new(p, ExtKind::Split).vol_x2o;
    let env = Envelope { schema_version: SCHEMA_VERSION, command: "tables", config: cfg, pass, body: TablesBody { vol_x, kuznetsov, basic } };
    emit(cfg, &render_tables(&env, cfg.format)?)?;
    Ok(pass)
}

fn cmd_verify_matching(cfg: &RunConfig) -> Result<bool> {
    let r = verify_matching(cfg.p, cfg.kind(), cfg.samples, cfg.seed, cfg.tolerance)?;
    eprintln!("verify-matching p={} {} samples={} max_error={:.3e} pass={}", cfg.p, cfg.ext, r.samples.len(), r.max_error, r.pass);
    let pass = r.pass;
    let env = Envelope { schema_version: SCHEMA_VERSION, command: "verify-matching", config: cfg, pass, body: MatchingBody { report: r } };
    emit(cfg, &render_matching(&env, cfg.format)?)?;
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.cmd {
        Cmd::VerifyFl(c) | Cmd::Tables(c) | Cmd::VerifyMatching(c) => c,
    };
    let cfg = match common.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}", e);
            return ExitCode::from(2);
        }
    };
    if cfg.jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build_global() {
            eprintln!("error: {}", e);
            return ExitCode::from(3);
        }
    }
    let run = match cli.cmd {
        Cmd::VerifyFl(_) => cmd_verify_fl(&cfg),
        Cmd::Tables(_) => cmd_tables(&cfg),
        Cmd::VerifyMatching(_) => cmd_verify_matching(&cfg),
    };
    match run {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(3)
        }
    }
}
