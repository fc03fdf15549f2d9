use std::path::PathBuf;
use std::process::ExitCode;

use abp_cli::config::Overrides;
use abp_cli::report::write_outputs;
use abp_cli::{catalog, load_config, run_campaign, EXIT_CHECK_FAILED, EXIT_OK, EXIT_PARSE, EXIT_VALIDATION};
use clap::Parser;

/// Run verification campaigns and write JSON and CSV reports.
#[derive(Debug, Parser)]
#[command(name = "abp-verify", version)]
struct Args {
    /// Campaign file, or the name of a bundled campaign.
    #[arg(long, required_unless_present = "list")]
    config: Option<String>,
    /// Output directory; defaults to the campaign's `output` or `abp-report`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed used by every check, replacing configured seeds.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Multiplies every grid resolution.
    #[arg(long, default_value_t = 1.0)]
    resolution_scale: f64,
    /// Print the catalog and operations, then exit.
    #[arg(long)]
    list: bool,
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("ABP_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| format!("ABP_THREADS must be a positive integer, got '{v}'"))?;
    if n == 0 {
        return Err("ABP_THREADS must be a positive integer, got 0".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn exit(code: i32) -> ExitCode {
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return exit(if e.use_stderr() { EXIT_PARSE } else { EXIT_OK });
        }
    };
    if args.list {
        print!("{}", catalog::list_catalog());
        return exit(EXIT_OK);
    }
    if let Err(e) = configure_threads() {
        eprintln!("validation error: {e}");
        return exit(EXIT_VALIDATION);
    }
    let name = args.config.expect("clap enforces --config");
    let config = match load_config(&name) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return exit(e.exit_code());
        }
    };
    let overrides = Overrides { seed: args.seed_override, resolution_scale: args.resolution_scale };
    let (report, timings) = match run_campaign(&config, &overrides) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return exit(e.exit_code());
        }
    };
    let out = args.out.or_else(|| config.output.clone().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("abp-report"));
    if let Err(e) = write_outputs(&out, &report, &timings) {
        eprintln!("cannot write report to {}: {e}", out.display());
        return exit(EXIT_CHECK_FAILED);
    }
    for r in &report.records {
        let status = if r.pass { "PASS" } else { "FAIL" };
        match &r.error {
            Some(e) => println!("{status} {} error: {e}", r.check_id),
            None => println!(
                "{status} {} deficit={} tol={}",
                r.check_id,
                r.deficit.map_or("nan".into(), |d| format!("{d:.3e}")),
                r.tolerance.map_or("nan".into(), |t| format!("{t:.1e}"))
            ),
        }
    }
    let s = report.summary;
    println!("{}: {} records, {} passed, {} failed -> {}", report.campaign, s.total, s.passed, s.failed, out.display());
    exit(if report.all_passed() { EXIT_OK } else { EXIT_CHECK_FAILED })
}
