//! `ellpf` — run the verification suites or evaluate single quantities.
//!
//! Exit codes: 0 all checks pass, 1 any check fails (or an evaluation hits a
//! pole), 2 usage or configuration errors.

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use ellpf::suite::{render_summary, run_suite, write_reports, Suite, SuiteConfig};
use ellpf::{eval_e, eval_f, partition_function_oracle, EllipticContext, ParameterPoint};

/// Environment variable naming the default configuration file.
const CONFIG_ENV: &str = "ELLPF_CONFIG";

const DEFAULT_REPORT_PATH: &str = "ellpf-report.jsonl";

#[derive(Parser)]
#[command(
    name = "ellpf",
    version,
    about = "Verify the elliptic free-fermion boundary partition functions and their Pfaffian forms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite over seeded random samples.
    Verify(VerifyArgs),
    /// Evaluate theta, P, E, or F at explicit parameters.
    Eval(EvalArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// all|theta|pfaffian|ybe|reflection|oracle|recursion|formulas|identity|appendix
    suite: String,
    /// Configuration file (key=value lines); defaults to $ELLPF_CONFIG.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed for all sample streams.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated nome values in (0, 1).
    #[arg(long, value_name = "LIST")]
    q: Option<String>,
    /// Replaces every check's built-in sample budget.
    #[arg(long)]
    samples: Option<usize>,
    /// Largest lattice half-size for the Pfaffian identity checks.
    #[arg(long = "n-max")]
    n_max: Option<usize>,
    /// Report file path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// theta|P|E|F
    expr: String,
    /// Comma-separated complex parameters (a, bi, or a±bi).
    #[arg(long, value_name = "LIST")]
    u: String,
    /// Dynamical parameter (required for P, E, F).
    #[arg(long)]
    h: Option<String>,
    /// The elliptic nome.
    #[arg(long)]
    q: f64,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Verify(args) => run_verify(args),
        Command::Eval(args) => run_eval(args),
    }
}

fn run_verify(args: VerifyArgs) -> ExitCode {
    let suite: Suite = match args.suite.parse() {
        Ok(s) => s,
        Err(e) => return usage_error(&e.to_string()),
    };

    let mut config = SuiteConfig::default();
    let config_path = args
        .config
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    if let Some(path) = config_path {
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => return usage_error(&format!("cannot read {}: {e}", path.display())),
        };
        config = match SuiteConfig::parse(&text) {
            Ok(c) => c,
            Err(e) => return usage_error(&format!("{}: {e}", path.display())),
        };
    }
    // flags win over file values
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(q) = &args.q {
        if let Err(e) = config.set("q", q) {
            return usage_error(&e.to_string());
        }
    }
    if let Some(samples) = args.samples {
        if samples == 0 {
            return usage_error("samples must be at least 1");
        }
        config.samples_per_check = Some(samples);
    }
    if let Some(n_max) = args.n_max {
        if n_max == 0 {
            return usage_error("n-max must be at least 1");
        }
        config.n_max = n_max;
    }
    if let Some(out) = args.out {
        config.out_path = Some(out);
    }

    let outcome = match run_suite(suite, &config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    let out_path = config
        .out_path
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_REPORT_PATH));
    let file = match fs::File::create(&out_path) {
        Ok(f) => f,
        Err(e) => return usage_error(&format!("cannot write {}: {e}", out_path.display())),
    };
    if let Err(e) = write_reports(std::io::BufWriter::new(file), &outcome.reports) {
        return usage_error(&format!("cannot write {}: {e}", out_path.display()));
    }

    print!("{}", render_summary(&outcome));
    println!(
        "{} checks, {} records -> {}",
        outcome.aggregate().len(),
        outcome.reports.len(),
        out_path.display()
    );
    if outcome.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run_eval(args: EvalArgs) -> ExitCode {
    let ctx = match EllipticContext::new(args.q) {
        Ok(c) => c,
        Err(e) => return usage_error(&e.to_string()),
    };
    let u = match parse_complex_list(&args.u) {
        Ok(u) => u,
        Err(e) => return usage_error(&e),
    };

    let value = match args.expr.as_str() {
        "theta" => {
            if u.len() != 1 {
                return usage_error("eval theta takes exactly one --u value");
            }
            ctx.theta(u[0])
        }
        "P" | "p" | "E" | "e" | "F" | "f" => {
            let h = match &args.h {
                Some(text) => match parse_complex(text) {
                    Ok(h) => h,
                    Err(e) => return usage_error(&e),
                },
                None => return usage_error("--h is required for P, E, and F"),
            };
            match ParameterPoint::new(u, h) {
                Ok(point) => match args.expr.as_str() {
                    "P" | "p" => partition_function_oracle(&point, &ctx),
                    "E" | "e" => eval_e(&point, &ctx),
                    _ => eval_f(&point, &ctx),
                },
                Err(e) => return usage_error(&e.to_string()),
            }
        }
        other => return usage_error(&format!("unknown expression '{other}' (theta|P|E|F)")),
    };

    match value {
        Ok(z) => {
            println!("{:.14e} {:.14e}", z.re, z.im);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn usage_error(message: &str) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(2)
}

fn parse_complex_list(text: &str) -> Result<Vec<Complex64>, String> {
    text.split(',')
        .map(|part| parse_complex(part.trim()))
        .collect()
}

/// Parses `a`, `bi`, `a+bi`, or `a-bi` with decimal or scientific parts.
fn parse_complex(text: &str) -> Result<Complex64, String> {
    let s = text.trim();
    if s.is_empty() {
        return Err("empty complex literal".to_string());
    }
    if let Some(im_text) = s.strip_suffix(['i', 'I']) {
        // split the imaginary part off at the last +/- that is not an
        // exponent sign and not the leading sign
        let bytes = im_text.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            let c = bytes[k] as char;
            if (c == '+' || c == '-') && !matches!(bytes[k - 1] as char, 'e' | 'E') {
                split = Some(k);
                break;
            }
        }
        match split {
            Some(k) => {
                let re: f64 = im_text[..k]
                    .parse()
                    .map_err(|_| format!("invalid real part in '{s}'"))?;
                let im_part = &im_text[k..];
                let im: f64 = if im_part == "+" {
                    1.0
                } else if im_part == "-" {
                    -1.0
                } else {
                    im_part
                        .parse()
                        .map_err(|_| format!("invalid imaginary part in '{s}'"))?
                };
                Ok(Complex64::new(re, im))
            }
            None => {
                let im: f64 = if im_text.is_empty() {
                    1.0
                } else if im_text == "-" {
                    -1.0
                } else {
                    im_text
                        .parse()
                        .map_err(|_| format!("invalid imaginary literal '{s}'"))?
                };
                Ok(Complex64::new(0.0, im))
            }
        }
    } else {
        let re: f64 = s.parse().map_err(|_| format!("invalid number '{s}'"))?;
        Ok(Complex64::new(re, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::parse_complex;

    #[test]
    fn complex_literals_parse() {
        let cases = [
            ("0.5", (0.5, 0.0)),
            ("-2e-3", (-0.002, 0.0)),
            ("0.3i", (0.0, 0.3)),
            ("-i", (0.0, -1.0)),
            ("i", (0.0, 1.0)),
            ("0.13+0.02i", (0.13, 0.02)),
            ("0.27-0.04i", (0.27, -0.04)),
            ("-0.08+0.05i", (-0.08, 0.05)),
            ("1e-2-2E-3i", (0.01, -0.002)),
            ("0.4+i", (0.4, 1.0)),
        ];
        for (text, (re, im)) in cases {
            let z = parse_complex(text).unwrap();
            assert_eq!((z.re, z.im), (re, im), "parsing '{text}'");
        }
    }

    #[test]
    fn bad_literals_are_rejected() {
        for text in ["", "abc", "1+2", "1++2i", "2ii"] {
            assert!(parse_complex(text).is_err(), "'{text}' should fail");
        }
    }
}
