//! Experiment pipelines.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use expsieve_core::digits::{digits_csv, digits_table, omega_product, DigitPattern};
use expsieve_core::equidist::discrepancy_survey;
use expsieve_core::expsum::{admissible_scan, exceptional_count, scan_csv, SparseSequence, WeightSequence};
use expsieve_core::primes::{build_order_db, OrderDatabase};
use expsieve_core::report::{fmt_sig12, CsvTable};
use expsieve_core::stats::{
    compute_v, large_sieve_lhs, large_sieve_rhs, thm1_bound, thm2_bound, BoundReport, Thm1Input,
};
use serde_json::json;

use crate::config::{need, Command, ExperimentConfig};
use crate::error::{invalid, CliError};
use crate::manifest::{sha256_hex, FileDigest, RunManifest};

/// Environment variable naming the order-database cache directory.
pub const CACHE_ENV: &str = "EXPSIEVE_CACHE";
/// Output directory when neither the command line nor the config names one.
pub const DEFAULT_OUT: &str = "expsieve-out";

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub command: Command,
    pub config: PathBuf,
    pub order_db: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

struct Artifact {
    name: String,
    bytes: Vec<u8>,
}

fn text(name: &str, s: String) -> Artifact {
    Artifact {
        name: name.into(),
        bytes: s.into_bytes(),
    }
}

fn json_artifact(name: &str, v: &serde_json::Value) -> Artifact {
    let mut s = serde_json::to_string_pretty(v).expect("serializable report");
    s.push('\n');
    text(name, s)
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    command: Command,
    order_db: Option<&'a Path>,
    inputs: Vec<FileDigest>,
}

/// Runs one experiment, writes its artifacts and finally the manifest.
pub fn run(opts: &RunOptions) -> Result<RunManifest, CliError> {
    let text = fs::read_to_string(&opts.config).map_err(CliError::io(&opts.config))?;
    let config_digest = FileDigest {
        path: opts.config.display().to_string(),
        sha256: sha256_hex(text.as_bytes()),
    };
    let (cfg, value) = ExperimentConfig::parse(&text)?;
    let out = opts
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    run_parsed(opts, &cfg, value, config_digest, &out)
}

pub(crate) fn run_parsed(
    opts: &RunOptions,
    cfg: &ExperimentConfig,
    value: serde_json::Value,
    config_digest: FileDigest,
    out: &Path,
) -> Result<RunManifest, CliError> {
    if let Some(c) = cfg.command {
        if c != opts.command {
            return Err(invalid(
                "command",
                format!("config is for {c}, invoked as {}", opts.command),
            ));
        }
    }
    let threads = opts.threads.or(cfg.threads);
    if threads == Some(0) {
        return Err(invalid("threads", "must be >= 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| invalid("threads", e))?;
    let width = pool.current_num_threads();

    let start = Instant::now();
    let mut ctx = Context {
        cfg,
        command: opts.command,
        order_db: opts.order_db.as_deref(),
        inputs: vec![config_digest],
    };
    let artifacts = pool.install(|| execute(&mut ctx))?;
    let wall = start.elapsed().as_secs_f64();

    fs::create_dir_all(out).map_err(CliError::io(out))?;
    let mut outputs = Vec::with_capacity(artifacts.len());
    for a in &artifacts {
        let path = out.join(&a.name);
        fs::write(&path, &a.bytes).map_err(CliError::io(&path))?;
        outputs.push(FileDigest {
            path: a.name.clone(),
            sha256: sha256_hex(&a.bytes),
        });
    }
    let manifest = RunManifest {
        tool: "expsieve".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: opts.command,
        config: value,
        threads: width,
        wall_time_s: wall,
        inputs: ctx.inputs,
        outputs,
    };
    manifest.write_atomic(out)?;
    Ok(manifest)
}

fn execute(ctx: &mut Context<'_>) -> Result<Vec<Artifact>, CliError> {
    match ctx.command {
        Command::Orders => orders(ctx),
        Command::Vsum => vsum(ctx),
        Command::Admissible => admissible(ctx),
        Command::LargeSieve => large_sieve(ctx),
        Command::Discrepancy => discrepancy(ctx),
        Command::Digits => digits(ctx),
        Command::Exceptional => exceptional(ctx),
        Command::Report => report(ctx),
    }
}

fn load_checked(path: &Path, lambda: u64, x: u64) -> Result<OrderDatabase, CliError> {
    let db = OrderDatabase::load(path)?;
    if db.lambda() != lambda || db.x() != x {
        return Err(invalid(
            "--order-db",
            format!(
                "{} holds lambda = {}, X = {}; the config asks for lambda = {lambda}, X = {x}",
                path.display(),
                db.lambda(),
                db.x()
            ),
        ));
    }
    Ok(db)
}

fn digest_file(path: &Path) -> Result<FileDigest, CliError> {
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

/// Loads the database from `--order-db` or the cache directory when present,
/// otherwise builds it (and stores it there).
fn order_db(ctx: &mut Context<'_>) -> Result<OrderDatabase, CliError> {
    let lambda = need(ctx.cfg.lambda, "lambda", ctx.command)?;
    let x = need(ctx.cfg.x, "X", ctx.command)?;
    let cached = ctx.order_db.map(Path::to_path_buf).or_else(|| {
        std::env::var_os(CACHE_ENV).map(|d| PathBuf::from(d).join(format!("orders-l{lambda}-x{x}.db")))
    });
    match cached {
        Some(path) if path.exists() => {
            let db = load_checked(&path, lambda, x)?;
            ctx.inputs.push(digest_file(&path)?);
            Ok(db)
        }
        Some(path) => {
            let db = build_order_db(lambda, x)?;
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(CliError::io(dir))?;
            }
            db.save(&path)?;
            Ok(db)
        }
        None => Ok(build_order_db(lambda, x)?),
    }
}

fn sequence(ctx: &Context<'_>) -> Result<SparseSequence, CliError> {
    let cmd = ctx.command;
    let t = need(ctx.cfg.t, "T", cmd)? as usize;
    let s = need(ctx.cfg.s, "S", cmd)?;
    ctx.cfg
        .sequence
        .as_ref()
        .ok_or_else(|| invalid("sequence", format!("required for {cmd}")))?
        .generate(t, s)
        .map_err(|e| invalid("sequence", e))
}

fn sequence_and_weights(ctx: &Context<'_>) -> Result<(SparseSequence, WeightSequence), CliError> {
    let seq = sequence(ctx)?;
    let gamma = ctx
        .cfg
        .weights
        .as_ref()
        .ok_or_else(|| invalid("weights", format!("required for {}", ctx.command)))?
        .generate(seq.len())
        .map_err(|e| invalid("weights", e))?;
    Ok((seq, gamma))
}

fn orders(ctx: &mut Context<'_>) -> Result<Vec<Artifact>, CliError> {
    let db = order_db(ctx)?;
    let mut bytes = Vec::new();
    db.write_to(&mut bytes)?;
    let mut csv = CsvTable::new("orders", &["p", "t_p", "tau_pm1"]);
    csv.note(format!("lambda={} X={}", db.lambda(), db.x()));
    for r in db.records() {
        csv.row(vec![r.p.to_string(), r.t_p.to_string(), r.tau_pm1.to_string()]);
    }
    let small: Vec<_> = [2u64, 4, 8, 16, 32, 64]
        .iter()
        .map(|&z| json!({"Z": z, "count": db.count_small_orders(z as f64), "bound": z * (z + 1) / 2}))
        .collect();
    let summary = json!({
        "lambda": db.lambda(),
        "X": db.x(),
        "count": db.len(),
        "density_ratio_sqrt_X": db.density_check(),
        "small_orders": small,
    });
    Ok(vec![
        Artifact {
            name: "orders.db".into(),
            bytes,
        },
        text("orders.csv", csv.render()),
        json_artifact("orders.json", &summary),
    ])
}

fn bound_reports(ctx: &Context<'_>, x: f64, t: f64, s: f64) -> Result<Vec<BoundReport>, CliError> {
    let b = &ctx.cfg.bounds;
    let c = b.c.unwrap_or(1.0);
    let mut out = Vec::new();
    if let (Some(pair), Some(eta), Some(delta), Some(k), Some(big_delta)) =
        (ctx.cfg.pair()?, b.eta, b.delta, b.k, ctx.cfg.big_delta)
    {
        let inp = Thm1Input {
            x,
            t,
            s,
            big_delta,
            pair,
            eta,
            delta,
            k,
            c,
        };
        out.push(thm1_bound(&inp).map_err(|e| invalid("bounds.alpha", e))?);
    }
    if let Some(rho) = b.rho {
        out.push(thm2_bound(x, t, s, rho, c));
    }
    Ok(out)
}

fn vsum(ctx: &mut Context<'_>) -> Result<Vec<Artifact>, CliError> {
    let big_delta = need(ctx.cfg.big_delta, "Delta", ctx.command)?;
    let (seq, gamma) = sequence_and_weights(ctx)?;
    let db = order_db(ctx)?;
    let stat = compute_v(&db, big_delta, &seq, &gamma, ctx.cfg.strategy())?;
    let reports = bound_reports(ctx, db.x() as f64, seq.len() as f64, seq.bound() as f64)?;
    let summary = json!({
        "lambda": stat.lambda,
        "X": stat.x,
        "Delta": stat.delta,
        "Delta_threshold": stat.delta_threshold,
        "T": stat.t,
        "S": stat.s,
        "primes": stat.per_prime.len(),
        "value_V": stat.value_v,
        "value_W": stat.value_w,
        "trivial_bound": stat.trivial_bound,
        "normalized": stat.normalized(),
        "bound_reports": reports,
        "per_prime_csv": "vsum_per_prime.csv",
    });
    Ok(vec![
        text("vsum_per_prime.csv", stat.per_prime_csv()),
        json_artifact("vsum.json", &summary),
    ])
}

fn admissible(ctx: &mut Context<'_>) -> Result<Vec<Artifact>, CliError> {
    let pair = ctx
        .cfg
        .pair()?
        .ok_or_else(|| invalid("bounds.pair", "required for admissible"))?;
    let c = ctx.cfg.bounds.c.unwrap_or(1.0);
    let db = order_db(ctx)?;
    let rows = admissible_scan(&db, &pair, c, ctx.cfg.strategy())?;
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let summary = json!({
        "lambda": db.lambda(),
        "X": db.x(),
        "pair": pair,
        "C": c,
        "primes": rows.len(),
        "flagged": rows.iter().filter(|r| r.flag).count(),
        "max_ratio": max_ratio,
    });
    Ok(vec![
        text("admissible.csv", scan_csv(db.lambda(), &pair, c, &rows)),
        json_artifact("admissible.json", &summary),
    ])
}

fn large_sieve(ctx: &mut Context<'_>) -> Result<Vec<Artifact>, CliError> {
    let k = need(ctx.cfg.k_max, "K", ctx.command)?;
    let (seq, gamma) = sequence_and_weights(ctx)?;
    let lhs = large_sieve_lhs(&seq, &gamma, k)?;
    let rhs = large_sieve_rhs(&seq, &gamma, k);
    let summary = json!({
        "K": k,
        "T": seq.len(),
        "S": seq.bound(),
        "lhs": lhs,
        "rhs": rhs,
        "ratio": lhs / rhs,
        "holds": lhs <= rhs,
    });
    Ok(vec![json_artifact("large_sieve.json", &summary)])
}

fn discrepancy(ctx: &mut Context<'_>) -> Result<Vec<Artifact>, CliError> {
    let delta = need(ctx.cfg.bounds.delta, "bounds.delta", ctx.command)?;
    let h = need(ctx.cfg.bounds.h, "bounds.H", ctx.command)?;
    let seq = sequence(ctx)?;
    let db = order_db(ctx)?;
    let sv = discrepancy_survey(&db, &seq, delta, h)?;
    let summary = json!({
        "lambda": sv.lambda,
        "X": sv.x,
        "T": sv.t,
        "delta": sv.delta,
        "H": sv.h,
        "primes": sv.rows.len(),
        "fraction_power": sv.fraction_power,
        "fraction_log": sv.fraction_log,
        "median_delta_hat": sv.median_delta_hat,
    });
    Ok(vec![
        text("discrepancy.csv", sv.to_csv()),
        json_artifact("discrepancy.json", &summary),
    ])
}

fn digits(ctx: &mut Context<'_>) -> Result<Vec<Artifact>, CliError> {
    let cmd = ctx.command;
    let file = ctx
        .cfg
        .pattern
        .as_ref()
        .ok_or_else(|| invalid("pattern", format!("required for {cmd}")))?;
    let pat = DigitPattern::from_file(file).map_err(|e| invalid("pattern", e))?;
    let p_max = need(ctx.cfg.p_max, "p_max", cmd)?;
    let c = ctx.cfg.bounds.c.unwrap_or(1.0);
    let rows = digits_table(&pat, p_max, c)?;
    let omega = ctx.cfg.omega.map(|m| omega_product(&pat, m)).transpose()?;
    let t = pat.t();
    let summary = json!({
        "S": pat.bits(),
        "a_hex": pat.a().to_str_radix(16),
        "T": t,
        "p_max": p_max,
        "C": c,
        "primes": rows.len(),
        "inequality_holds": rows.iter().all(|r| r.count.deviation.abs() <= r.count.q_p + 1e-9),
        "omega": omega.as_ref().map(|o| json!({
            "mode": o.mode,
            "count": o.count,
            "considered": o.considered,
            "count_over_T": if t == 0 { 0.0 } else { o.count as f64 / t as f64 },
            "primes": o.primes,
        })),
    });
    Ok(vec![
        text("digits.csv", digits_csv(&pat, c, &rows)),
        json_artifact("digits.json", &summary),
    ])
}

fn exceptional(ctx: &mut Context<'_>) -> Result<Vec<Artifact>, CliError> {
    let cmd = ctx.command;
    let t = need(ctx.cfg.subgroup_order, "subgroup_order", cmd)?;
    let k = need(ctx.cfg.bounds.k, "bounds.k", cmd)?;
    let u = need(ctx.cfg.u, "U", cmd)?;
    let c = ctx.cfg.bounds.c.unwrap_or(1.0);
    let ell_max = need(ctx.cfg.ell_max, "ell_max", cmd)?;
    let rep = exceptional_count(t, k, u, c, ell_max)?;
    let summary = json!({
        "t": rep.t,
        "k": rep.k,
        "U": rep.u,
        "C": rep.c,
        "ell_max": rep.ell_max,
        "total": rep.total,
        "exceptional": rep.exceptional,
        "allowance_U_over_log_U": rep.allowance,
    });
    Ok(vec![
        text("exceptional.csv", rep.to_csv()),
        json_artifact("exceptional.json", &summary),
    ])
}

fn report(ctx: &mut Context<'_>) -> Result<Vec<Artifact>, CliError> {
    let cmd = ctx.command;
    let x = need(ctx.cfg.x, "X", cmd)? as f64;
    let t = need(ctx.cfg.t, "T", cmd)? as f64;
    let s = need(ctx.cfg.s, "S", cmd)? as f64;
    let reports = bound_reports(ctx, x, t, s)?;
    if reports.is_empty() {
        return Err(invalid(
            "bounds",
            "report needs rho, or a pair with eta, delta, k and Delta",
        ));
    }
    let mut csv = CsvTable::new("bounds", &["theorem", "rhs", "trivial", "valid"]);
    for r in &reports {
        csv.row(vec![
            r.theorem.clone(),
            fmt_sig12(r.rhs_value),
            fmt_sig12(r.trivial_value),
            u8::from(r.all_valid()).to_string(),
        ]);
    }
    Ok(vec![
        text("bounds.csv", csv.render()),
        json_artifact("report.json", &json!({ "bound_reports": reports })),
    ])
}
