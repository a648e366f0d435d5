//! Seeded verification suites over every identity in the crate, with
//! machine-readable reports.
//!
//! A suite is a fixed list of named checks. Each check draws its samples
//! from its own SplitMix64 stream, derived from the master seed and the
//! check's name, so runs are reproducible check-by-check and insensitive to
//! reordering. Samples that cannot decide their identity in double
//! precision — a theta value too close to zero to normalize against, or a
//! Pfaffian whose cancellation noise floor exceeds the tolerance — are
//! discarded and redrawn, exactly like the pole guard discards parameter
//! points next to theta zeros.
//!
//! Reports serialize as one JSON object per line, sorted by
//! `(check_name, sample_index)`. Timing is measured and shown in summaries
//! but zeroed in the report files, which keeps two runs with the same
//! configuration byte-identical.

use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use crate::face::{
    build_r_matrix, check_dynamical_ybe, check_h_periodicity, check_ice_rule,
    check_reflection_equation, check_reflection_reading, ReflectionReading,
};
use crate::formulas::{
    check_against_reference, check_appendix_chain, check_factorizations, check_identity_h0,
    check_kernel_pf_quasi_periodicity, check_pfaffian_identity,
    check_prefactor_quasi_periodicity, eval_by_expansion, eval_e, eval_with_noise_floor,
    KernelKind,
};
use crate::pfaffian::{pf_by_elimination, pf_by_expansion, pf_with_term_scale, SkewMatrix};
use crate::report::{residual_report, CheckParams, VerificationReport};
use crate::sampler::{derive_seed, ParameterSampler, SplitMix64};
use crate::statesum::{
    check_partition_quasi_periodicity, check_symmetry, partition_function_oracle,
    two_site_closed_form,
};
use crate::theta::{
    check_addition_formula, check_half_shift_symmetry, check_quasi_periodicity, EllipticContext,
};
use crate::Error;

/// Attempts per sample before concluding that a check cannot find an
/// admissible point.
const MAX_RESAMPLES: usize = 1000;

/// Which group of checks to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Theta,
    Pfaffian,
    Ybe,
    Reflection,
    Oracle,
    Recursion,
    Formulas,
    Identity,
    Appendix,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "all" => Ok(Suite::All),
            "theta" => Ok(Suite::Theta),
            "pfaffian" => Ok(Suite::Pfaffian),
            "ybe" => Ok(Suite::Ybe),
            "reflection" => Ok(Suite::Reflection),
            "oracle" => Ok(Suite::Oracle),
            "recursion" => Ok(Suite::Recursion),
            "formulas" => Ok(Suite::Formulas),
            "identity" => Ok(Suite::Identity),
            "appendix" => Ok(Suite::Appendix),
            other => Err(Error::Config(format!(
                "unknown suite '{other}' (expected all|theta|pfaffian|ybe|reflection|oracle|recursion|formulas|identity|appendix)"
            ))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Suite::All => "all",
            Suite::Theta => "theta",
            Suite::Pfaffian => "pfaffian",
            Suite::Ybe => "ybe",
            Suite::Reflection => "reflection",
            Suite::Oracle => "oracle",
            Suite::Recursion => "recursion",
            Suite::Formulas => "formulas",
            Suite::Identity => "identity",
            Suite::Appendix => "appendix",
        };
        f.write_str(name)
    }
}

/// Suite configuration: nome list, seeding, sample counts, and tolerance
/// overrides.
///
/// When `samples_per_check` is unset, every check uses its built-in sample
/// budget (sized so the default run covers each identity at least as densely
/// as the documented guarantees require). Setting it replaces that budget
/// uniformly — useful for quick smoke runs or heavier soaks.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub nomes: Vec<f64>,
    pub samples_per_check: Option<usize>,
    pub seed: u64,
    pub n_max: usize,
    pub out_path: Option<PathBuf>,
    pub tolerance_overrides: BTreeMap<String, f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            nomes: vec![0.1, 0.3, 0.5, 0.7],
            samples_per_check: None,
            seed: 12345,
            n_max: 5,
            out_path: None,
            tolerance_overrides: BTreeMap::new(),
        }
    }
}

impl SuiteConfig {
    /// Parses a line-oriented `key=value` configuration. Supported keys:
    /// `q` (comma-separated nome list), `samples`, `seed`, `n_max`, `out`,
    /// and `tol.<check_name>` for per-check tolerance overrides. `#` starts
    /// a comment.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut config = SuiteConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value, got '{raw}'", lineno + 1))
            })?;
            config.set(key.trim(), value.trim())?;
        }
        Ok(config)
    }

    /// Applies one `key=value` assignment (shared by file parsing and flag
    /// overrides).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Error> {
        match key {
            "q" => {
                let mut nomes = Vec::new();
                for part in value.split(',') {
                    let q: f64 = part
                        .trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("invalid nome '{part}'")))?;
                    if !(0.0 < q && q < 1.0) {
                        return Err(Error::Config(format!(
                            "nome {q} outside the open interval (0, 1)"
                        )));
                    }
                    nomes.push(q);
                }
                if nomes.is_empty() {
                    return Err(Error::Config("empty nome list".to_string()));
                }
                self.nomes = nomes;
            }
            "samples" => {
                let n: usize = value
                    .parse()
                    .map_err(|_| Error::Config(format!("invalid samples '{value}'")))?;
                if n == 0 {
                    return Err(Error::Config("samples must be at least 1".to_string()));
                }
                self.samples_per_check = Some(n);
            }
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| Error::Config(format!("invalid seed '{value}'")))?;
            }
            "n_max" => {
                let n: usize = value
                    .parse()
                    .map_err(|_| Error::Config(format!("invalid n_max '{value}'")))?;
                if n == 0 {
                    return Err(Error::Config("n_max must be at least 1".to_string()));
                }
                self.n_max = n;
            }
            "out" => {
                self.out_path = Some(PathBuf::from(value));
            }
            _ => {
                if let Some(check) = key.strip_prefix("tol.") {
                    let tol: f64 = value
                        .parse()
                        .map_err(|_| Error::Config(format!("invalid tolerance '{value}'")))?;
                    if !(tol >= 0.0) {
                        return Err(Error::Config(format!("tolerance {tol} must be ≥ 0")));
                    }
                    self.tolerance_overrides.insert(check.to_string(), tol);
                } else {
                    return Err(Error::Config(format!("unknown key '{key}'")));
                }
            }
        }
        Ok(())
    }

    /// The sample budget for one check instance, given its built-in default.
    fn budget(&self, default_total: usize) -> usize {
        self.samples_per_check.unwrap_or(default_total)
    }

    /// Splits a total budget across the configured nomes.
    fn per_nome(&self, default_total: usize) -> usize {
        self.budget(default_total).div_ceil(self.nomes.len())
    }

    /// n values for the closed-form-vs-oracle comparisons.
    fn formula_ns(&self) -> Vec<usize> {
        (1..=self.n_max.min(3)).collect()
    }

    /// n values for the Pfaffian identity and factorization checks.
    fn identity_ns(&self) -> Vec<usize> {
        (1..=self.n_max.min(6)).collect()
    }
}

/// The outcome of a suite run: every report, in execution order.
#[derive(Debug)]
pub struct SuiteOutcome {
    pub reports: Vec<VerificationReport>,
}

impl SuiteOutcome {
    pub fn all_passed(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    /// Per-check aggregation: (samples, failures, max residual, tolerance,
    /// total elapsed micros), keyed by check name.
    pub fn aggregate(&self) -> BTreeMap<&str, (usize, usize, f64, f64, u64)> {
        let mut agg: BTreeMap<&str, (usize, usize, f64, f64, u64)> = BTreeMap::new();
        for r in &self.reports {
            let entry = agg
                .entry(r.check_name.as_str())
                .or_insert((0, 0, 0.0, r.tolerance, 0));
            entry.0 += 1;
            if !r.pass {
                entry.1 += 1;
            }
            entry.2 = entry.2.max(r.residual);
            entry.3 = r.tolerance;
            entry.4 += r.elapsed_micros;
        }
        agg
    }
}

/// Runs the selected suite and collects all reports.
pub fn run_suite(suite: Suite, config: &SuiteConfig) -> Result<SuiteOutcome, Error> {
    if config.nomes.is_empty() {
        return Err(Error::Config("no nome values configured".to_string()));
    }
    let mut runner = Runner {
        config,
        reports: Vec::new(),
        counters: BTreeMap::new(),
    };
    // the `all` ordering runs coarse-to-fine: scalar function laws, matrix
    // algebra, local relations, then the partition-function comparisons
    match suite {
        Suite::All => {
            runner.unit_theta()?;
            runner.unit_pfaffian()?;
            runner.unit_ybe()?;
            runner.unit_reflection()?;
            runner.unit_ice_rule()?;
            runner.unit_oracle_initial()?;
            runner.unit_recursions()?;
            runner.unit_symmetry()?;
            runner.unit_partition_qp()?;
            runner.unit_formulas()?;
            runner.unit_identity()?;
            runner.unit_factorizations()?;
            runner.unit_appendix()?;
        }
        Suite::Theta => runner.unit_theta()?,
        Suite::Pfaffian => runner.unit_pfaffian()?,
        Suite::Ybe => {
            runner.unit_ybe()?;
            runner.unit_ice_rule()?;
        }
        Suite::Reflection => runner.unit_reflection()?,
        Suite::Oracle => {
            runner.unit_oracle_initial()?;
            runner.unit_symmetry()?;
            runner.unit_partition_qp()?;
        }
        Suite::Recursion => runner.unit_recursions()?,
        Suite::Formulas => runner.unit_formulas()?,
        Suite::Identity => {
            runner.unit_identity()?;
            runner.unit_factorizations()?;
        }
        Suite::Appendix => runner.unit_appendix()?,
    }
    Ok(SuiteOutcome {
        reports: runner.reports,
    })
}

/// Writes reports as JSON lines, sorted by `(check_name, sample_index)`,
/// with timing zeroed so identical runs produce identical bytes.
pub fn write_reports<W: Write>(mut w: W, reports: &[VerificationReport]) -> std::io::Result<()> {
    let mut sorted: Vec<&VerificationReport> = reports.iter().collect();
    sorted.sort_by(|a, b| {
        (a.check_name.as_str(), a.params.sample_index)
            .cmp(&(b.check_name.as_str(), b.params.sample_index))
    });
    for report in sorted {
        let mut record = (*report).clone();
        record.elapsed_micros = 0;
        let line = serde_json::to_string(&record).map_err(std::io::Error::other)?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Human-readable per-check summary table.
pub fn render_summary(outcome: &SuiteOutcome) -> String {
    let mut out = String::new();
    for (name, (count, failures, max_residual, tolerance, micros)) in outcome.aggregate() {
        let status = if failures == 0 { "pass" } else { "FAIL" };
        out.push_str(&format!(
            "{status}  {name:<32} samples {count:>5}  max residual {max_residual:.3e}  tol {tolerance:.1e}  {:.1} ms\n",
            micros as f64 / 1000.0
        ));
    }
    out
}

// ---------------------------------------------------------------------------

struct Runner<'a> {
    config: &'a SuiteConfig,
    reports: Vec<VerificationReport>,
    counters: BTreeMap<String, u64>,
}

impl Runner<'_> {
    fn seed_for(&self, label: &str) -> u64 {
        derive_seed(self.config.seed, label)
    }

    fn push(
        &mut self,
        mut report: VerificationReport,
        nome: f64,
        seed: u64,
        n: usize,
        args: &[Complex64],
        h: Option<Complex64>,
        elapsed_micros: u64,
    ) {
        if let Some(&tol) = self.config.tolerance_overrides.get(&report.check_name) {
            report = report.with_tolerance(tol);
        }
        let counter = self.counters.entry(report.check_name.clone()).or_insert(0);
        let mut params = CheckParams {
            nome,
            seed,
            sample_index: *counter,
            n,
            u: Vec::new(),
            h: None,
        };
        params = params.with_arguments(args);
        if let Some(h) = h {
            params = params.with_dynamical(h);
        }
        *counter += 1;
        self.reports
            .push(report.with_params(params).with_elapsed(elapsed_micros));
    }

    /// Runs `attempt` until it yields a non-degenerate result.
    fn sample<T>(&self, mut attempt: impl FnMut() -> Result<Option<T>, Error>) -> Result<T, Error> {
        for _ in 0..MAX_RESAMPLES {
            match attempt() {
                Ok(Some(value)) => return Ok(value),
                Ok(None) => continue,
                Err(Error::DegenerateSample { .. }) | Err(Error::Pole { .. }) => continue,
                Err(other) => return Err(other),
            }
        }
        Err(Error::SamplerExhausted {
            attempts: MAX_RESAMPLES,
            reason: "check kept drawing degenerate samples".to_string(),
        })
    }

    // -- theta -----------------------------------------------------------------

    fn unit_theta(&mut self) -> Result<(), Error> {
        let per_nome = self.config.per_nome(1000);
        for &q in &self.config.nomes.clone() {
            let ctx = EllipticContext::new(q)?;

            let seed = self.seed_for(&format!("theta_oddness/q={q}"));
            let mut sampler = ParameterSampler::new(&ctx, seed);
            for _ in 0..per_nome {
                let start = Instant::now();
                let (u, report) = self.sample(|| {
                    let u = sampler.theta_argument()?;
                    let plus = ctx.theta(u)?;
                    let minus = ctx.theta(-u)?;
                    Ok(Some((
                        u,
                        residual_report(
                            "theta_oddness",
                            minus,
                            -plus,
                            &[],
                            ctx.zero_tolerance(),
                            1e-10,
                        ),
                    )))
                })?;
                self.push(report, q, seed, 0, &[u], None, micros(start));
            }

            let seed = self.seed_for(&format!("theta_quasi/q={q}"));
            let mut sampler = ParameterSampler::new(&ctx, seed);
            for _ in 0..per_nome {
                let start = Instant::now();
                let (u, first, second) = self.sample(|| {
                    let u = sampler.theta_argument()?;
                    let (a, b) = check_quasi_periodicity(u, &ctx)?;
                    Ok(Some((u, a, b)))
                })?;
                let elapsed = micros(start) / 2;
                self.push(first, q, seed, 0, &[u], None, elapsed);
                self.push(second, q, seed, 0, &[u], None, elapsed);
            }

            let seed = self.seed_for(&format!("theta_half_shift/q={q}"));
            let mut sampler = ParameterSampler::new(&ctx, seed);
            for _ in 0..per_nome {
                let start = Instant::now();
                let (u, report) = self.sample(|| {
                    let u = sampler.complex_in_box();
                    let report = check_half_shift_symmetry(u, &ctx)?;
                    Ok(Some((u, report)))
                })?;
                self.push(report, q, seed, 0, &[u], None, micros(start));
            }

            let seed = self.seed_for(&format!("theta_addition/q={q}"));
            let mut sampler = ParameterSampler::new(&ctx, seed);
            for _ in 0..per_nome {
                let start = Instant::now();
                let (args, report) = self.sample(|| {
                    let u = sampler.complex_in_box();
                    let v = sampler.complex_in_box();
                    let x = sampler.complex_in_box();
                    let y = sampler.complex_in_box();
                    let report = check_addition_formula(u, v, x, y, &ctx)?;
                    Ok(Some(([u, v, x, y], report)))
                })?;
                self.push(report, q, seed, 0, &args, None, micros(start));
            }
        }
        Ok(())
    }

    // -- pfaffian algebra --------------------------------------------------------

    fn unit_pfaffian(&mut self) -> Result<(), Error> {
        let total = self.config.budget(500);
        let seed = self.seed_for("pfaffian_agreement");
        let mut rng = SplitMix64::new(seed);
        for _ in 0..total {
            let start = Instant::now();
            let (dim, agreement, squared) = self.sample(|| {
                let dim = 2 * (1 + (rng.next_u64() % 5) as usize); // 2..=10
                let x = SkewMatrix::from_upper(dim, |_, _| {
                    Ok(Complex64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)))
                })?;
                let (by_def, term_scale) = pf_with_term_scale(&x)?;
                // relative agreement is meaningless once the matching sum has
                // cancelled down to noise; redraw (essentially never happens)
                if by_def.norm() < 1e5 * f64::EPSILON * term_scale {
                    return Ok(None);
                }
                let by_exp = pf_by_expansion(&x);
                let by_elim = pf_by_elimination(&x);
                let scale = by_def.norm();
                let worst = (by_def - by_exp)
                    .norm()
                    .max((by_def - by_elim).norm())
                    .max((by_exp - by_elim).norm());
                let mut agreement =
                    residual_report("pfaffian_agreement", by_def, by_elim, &[scale], 1e-300, 1e-10);
                agreement.residual = worst / scale;
                agreement.pass = agreement.residual <= agreement.tolerance;

                let det = x.determinant();
                let squared = residual_report(
                    "pfaffian_squared_det",
                    by_elim * by_elim,
                    det,
                    &[],
                    1e-300,
                    1e-10,
                );
                Ok(Some((dim, agreement, squared)))
            })?;
            let elapsed = micros(start) / 2;
            let dim_marker = [Complex64::new(dim as f64, 0.0)];
            self.push(agreement, 0.0, seed, dim / 2, &dim_marker, None, elapsed);
            self.push(squared, 0.0, seed, dim / 2, &dim_marker, None, elapsed);
        }
        Ok(())
    }

    // -- local relations ----------------------------------------------------------

    fn unit_ybe(&mut self) -> Result<(), Error> {
        let per_nome = self.config.per_nome(500);
        for &q in &self.config.nomes.clone() {
            let ctx = EllipticContext::new(q)?;
            let seed = self.seed_for(&format!("dynamical_ybe/q={q}"));
            let mut sampler = ParameterSampler::new(&ctx, seed);
            for _ in 0..per_nome {
                let start = Instant::now();
                let (args, h, report) = self.sample(|| {
                    let u = sampler.complex_in_box();
                    let v = sampler.complex_in_box();
                    let w = sampler.complex_in_box();
                    let h = sampler.complex_in_box();
                    let report = check_dynamical_ybe(u, v, w, h, &ctx)?;
                    Ok(Some(([u, v, w], h, report)))
                })?;
                self.push(report, q, seed, 0, &args, Some(h), micros(start));
            }

            let per_nome_h = self.config.per_nome(48);
            let seed = self.seed_for(&format!("r_h_periodicity/q={q}"));
            let mut sampler = ParameterSampler::new(&ctx, seed);
            for _ in 0..per_nome_h {
                let start = Instant::now();
                let (args, h, report) = self.sample(|| {
                    let u = sampler.complex_in_box();
                    let v = sampler.complex_in_box();
                    let h = sampler.complex_in_box();
                    let report = check_h_periodicity(u, v, h, &ctx)?;
                    Ok(Some(([u, v], h, report)))
                })?;
                self.push(report, q, seed, 0, &args, Some(h), micros(start));
            }
        }
        Ok(())
    }

    fn unit_reflection(&mut self) -> Result<(), Error> {
        let per_nome = self.config.per_nome(500);
        for &q in &self.config.nomes.clone() {
            let ctx = EllipticContext::new(q)?;
            let seed = self.seed_for(&format!("reflection/q={q}"));
            let mut sampler = ParameterSampler::new(&ctx, seed);
            for _ in 0..per_nome {
                let start = Instant::now();
                let (args, h, report) = self.sample(|| {
                    let u = sampler.complex_in_box();
                    let v = sampler.complex_in_box();
                    let h = sampler.complex_in_box();
                    let report = check_reflection_equation(u, v, h, &ctx)?;
                    Ok(Some(([u, v], h, report)))
                })?;
                let literal_failed = !report.pass;
                self.push(report, q, seed, 0, &args, Some(h), micros(start));
                // diagnostic: should the literal reading ever fail, also
                // record which height-shifted variant holds at that point
                if literal_failed {
                    for reading in [
                        ReflectionReading::InteriorShiftPlus,
                        ReflectionReading::InteriorShiftMinus,
                    ] {
                        let start = Instant::now();
                        if let Ok(variant) =
                            check_reflection_reading(args[0], args[1], h, &ctx, reading)
                        {
                            self.push(variant, q, seed, 0, &args, Some(h), micros(start));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn unit_ice_rule(&mut self) -> Result<(), Error> {
        let per_nome = self.config.per_nome(48);
        for &q in &self.config.nomes.clone() {
            let ctx = EllipticContext::new(q)?;
            let seed = self.seed_for(&format!("ice_rule/q={q}"));
            let mut sampler = ParameterSampler::new(&ctx, seed);
            for _ in 0..per_nome {
                let start = Instant::now();
                let (args, h, report) = self.sample(|| {
                    let u = sampler.complex_in_box();
                    let v = sampler.complex_in_box();
                    let h = sampler.complex_in_box();
                    let r = build_r_matrix(u, v, h, &ctx)?;
                    Ok(Some(([u, v], h, check_ice_rule(&r))))
                })?;
                self.push(report, q, seed, 0, &args, Some(h), micros(start));
            }
        }
        Ok(())
    }

    // -- state-sum oracle -----------------------------------------------------------

    fn unit_oracle_initial(&mut self) -> Result<(), Error> {
        let per_nome = self.config.per_nome(200);
        for &q in &self.config.nomes.clone() {
            let ctx = EllipticContext::new(q)?;
            let seed = self.seed_for(&format!("oracle_initial/q={q}"));
            let mut sampler = ParameterSampler::new(&ctx, seed);
            for _ in 0..per_nome {
                let start = Instant::now();
                let (point, report) = self.sample(|| {
                    let point = sampler.parameter_point(1)?;
                    let oracle = partition_function_oracle(&point, &ctx)?;
                    let closed = two_site_closed_form(
                        point.spectral()[0],
                        point.spectral()[1],
                        point.dynamical(),
                        &ctx,
                    )?;
                    if oracle.norm().max(closed.norm()) < ctx.zero_tolerance() {
                        return Ok(None);
                    }
                    let report = residual_report(
                        "oracle_initial",
                        oracle,
                        closed,
                        &[],
                        ctx.zero_tolerance(),
                        1e-11,
                    );
                    Ok(Some((point, report)))
                })?;
                self.push(
                    report,
                    q,
                    seed,
                    1,
                    point.spectral(),
                    Some(point.dynamical()),
                    micros(start),
                );
            }
        }
        Ok(())
    }

    fn unit_recursions(&mut self) -> Result<(), Error> {
        for &q in &self.config.nomes.clone() {
            let ctx = EllipticContext::new(q)?;
            for n in 2..=self.config.n_max.min(3) {
                for l in 1..2 * n {
                    self.run_recursion(&ctx, q, n, l, RecursionKind::Direct)?;
                    self.run_recursion(&ctx, q, n, l, RecursionKind::Shifted)?;
                }
            }
        }
        Ok(())
    }

    fn run_recursion(
        &mut self,
        ctx: &EllipticContext,
        q: f64,
        n: usize,
        l: usize,
        kind: RecursionKind,
    ) -> Result<(), Error> {
        let name = match kind {
            RecursionKind::Direct => "recursion_direct",
            RecursionKind::Shifted => "recursion_shifted",
        };
        let per_nome = self.config.per_nome(20);
        let seed = self.seed_for(&format!("{name}/n={n}/l={l}/q={q}"));
        let mut sampler = ParameterSampler::new(ctx, seed);
        for _ in 0..per_nome {
            let start = Instant::now();
            let (point, report) = self.sample(|| {
                let base = sampler.parameter_point(n)?;
                let ul = base.spectral()[l];
                let pinned_value = match kind {
                    RecursionKind::Direct => -ul,
                    RecursionKind::Shifted => -ul - 0.5,
                };
                let point = base.with_spectral(0, pinned_value);
                let full = partition_function_oracle(&point, ctx)?;
                let reduced = partition_function_oracle(&point.without_first_and(l)?, ctx)?;
                let mut prefactor = match kind {
                    RecursionKind::Direct => ctx.theta(Complex64::new(0.5, 0.0))?,
                    RecursionKind::Shifted => {
                        ctx.theta(point.dynamical() - 0.5)?
                            * ctx.theta(Complex64::new(0.5, 0.0))?
                            / ctx.theta_denominator(point.dynamical(), "h")?
                    }
                };
                for (k, &uj) in point.spectral().iter().enumerate() {
                    if k != 0 && k != l {
                        prefactor *= match kind {
                            RecursionKind::Direct => {
                                ctx.theta(uj + ul + 0.5)? * ctx.theta(uj - ul + 0.5)?
                            }
                            RecursionKind::Shifted => {
                                ctx.theta(uj + ul)? * ctx.theta(uj - ul - 0.5)?
                            }
                        };
                    }
                }
                let rhs = prefactor * reduced;
                if full.norm().max(rhs.norm()) < ctx.zero_tolerance() {
                    return Ok(None);
                }
                let report = residual_report(name, full, rhs, &[], ctx.zero_tolerance(), 1e-10);
                Ok(Some((point, report)))
            })?;
            self.push(
                report,
                q,
                seed,
                n,
                point.spectral(),
                Some(point.dynamical()),
                micros(start),
            );
        }
        Ok(())
    }

    fn unit_symmetry(&mut self) -> Result<(), Error> {
        let per_nome = self.config.per_nome(48);
        for &q in &self.config.nomes.clone() {
            let ctx = EllipticContext::new(q)?;
            let seed = self.seed_for(&format!("oracle_symmetry/q={q}"));
            let mut sampler = ParameterSampler::new(&ctx, seed);
            for _ in 0..per_nome {
                let start = Instant::now();
                let (point, report) = self.sample(|| {
                    let point = sampler.parameter_point(2)?;
                    let i = (sampler.rng().next_u64() % 4) as usize;
                    let mut j = (sampler.rng().next_u64() % 4) as usize;
                    if i == j {
                        j = (j + 1) % 4;
                    }
                    let report = check_symmetry(&point, i, j, &ctx)?;
                    Ok(Some((point, report)))
                })?;
                self.push(
                    report,
                    q,
                    seed,
                    2,
                    point.spectral(),
                    Some(point.dynamical()),
                    micros(start),
                );
            }
        }
        Ok(())
    }

    fn unit_partition_qp(&mut self) -> Result<(), Error> {
        for &q in &self.config.nomes.clone() {
            let ctx = EllipticContext::new(q)?;
            for n in 1..=self.config.n_max.min(2) {
                let per_nome = self.config.per_nome(48);
                let seed = self.seed_for(&format!("oracle_quasi/n={n}/q={q}"));
                let mut sampler = ParameterSampler::new(&ctx, seed);
                for _ in 0..per_nome {
                    let start = Instant::now();
                    let (point, first, second) = self.sample(|| {
                        let point = sampler.parameter_point(n)?;
                        let (a, b) = check_partition_quasi_periodicity(&point, &ctx)?;
                        Ok(Some((point, a, b)))
                    })?;
                    let elapsed = micros(start) / 2;
                    self.push(
                        first,
                        q,
                        seed,
                        n,
                        point.spectral(),
                        Some(point.dynamical()),
                        elapsed,
                    );
                    self.push(
                        second,
                        q,
                        seed,
                        n,
                        point.spectral(),
                        Some(point.dynamical()),
                        elapsed,
                    );
                }
            }
        }
        Ok(())
    }

    // -- closed forms -------------------------------------------------------------

    fn unit_formulas(&mut self) -> Result<(), Error> {
        for &q in &self.config.nomes.clone() {
            let ctx = EllipticContext::new(q)?;
            for n in self.config.formula_ns() {
                let per_nome = self.config.per_nome(52);
                let seed = self.seed_for(&format!("formula_vs_oracle/n={n}/q={q}"));
                let mut sampler = ParameterSampler::new(&ctx, seed);
                for _ in 0..per_nome {
                    let start = Instant::now();
                    let (point, e_report, f_report, cross) = self.sample(|| {
                        let point = sampler.parameter_point(n)?;
                        let oracle = partition_function_oracle(&point, &ctx)?;
                        if oracle.norm() < ctx.zero_tolerance() {
                            return Ok(None);
                        }
                        let e_report = check_against_reference(
                            "formula_e_vs_oracle",
                            KernelKind::PlainSum,
                            &point,
                            oracle,
                            1e-9,
                            &ctx,
                        )?;
                        let f_report = check_against_reference(
                            "formula_f_vs_oracle",
                            KernelKind::ShiftedSum,
                            &point,
                            oracle,
                            1e-9,
                            &ctx,
                        )?;
                        let (e_value, _) =
                            eval_with_noise_floor(KernelKind::PlainSum, &point, &ctx)?;
                        let (f_value, _) =
                            eval_with_noise_floor(KernelKind::ShiftedSum, &point, &ctx)?;
                        let cross = residual_report(
                            "formula_e_vs_f",
                            e_value,
                            f_value,
                            &[oracle.norm()],
                            ctx.zero_tolerance(),
                            1e-9,
                        );
                        Ok(Some((point, e_report, f_report, cross)))
                    })?;
                    let elapsed = micros(start) / 3;
                    for report in [e_report, f_report, cross] {
                        self.push(
                            report,
                            q,
                            seed,
                            n,
                            point.spectral(),
                            Some(point.dynamical()),
                            elapsed,
                        );
                    }
                }
            }

            // expansion-route consistency on the E form
            for n in [2usize, 3] {
                if n > self.config.n_max {
                    continue;
                }
                let per_nome = self.config.per_nome(20);
                let seed = self.seed_for(&format!("formula_expansion/n={n}/q={q}"));
                let mut sampler = ParameterSampler::new(&ctx, seed);
                for _ in 0..per_nome {
                    let start = Instant::now();
                    let (point, report) = self.sample(|| {
                        let point = sampler.parameter_point(n)?;
                        let direct = eval_e(&point, &ctx)?;
                        let expanded = eval_by_expansion(KernelKind::PlainSum, &point, &ctx)?;
                        if direct.norm() < ctx.zero_tolerance() {
                            return Ok(None);
                        }
                        let report = residual_report(
                            "formula_expansion_consistency",
                            direct,
                            expanded,
                            &[],
                            ctx.zero_tolerance(),
                            1e-10,
                        );
                        Ok(Some((point, report)))
                    })?;
                    self.push(
                        report,
                        q,
                        seed,
                        n,
                        point.spectral(),
                        Some(point.dynamical()),
                        micros(start),
                    );
                }
            }

            // quasi-periodicities of the prefactor and Pfaffian factors
            let per_nome = self.config.per_nome(20);
            let seed = self.seed_for(&format!("formula_split_qp/q={q}"));
            let mut sampler = ParameterSampler::new(&ctx, seed);
            for _ in 0..per_nome {
                let start = Instant::now();
                let (point, reports) = self.sample(|| {
                    let point = sampler.parameter_point(2)?;
                    let (p1, p2) = check_prefactor_quasi_periodicity(&point, &ctx)?;
                    let (k1, k2) = check_kernel_pf_quasi_periodicity(&point, &ctx)?;
                    let kernel_scale = Complex64::new(k1.lhs[0], k1.lhs[1]).norm();
                    if kernel_scale < ctx.zero_tolerance() {
                        return Ok(None);
                    }
                    Ok(Some((point, [p1, p2, k1, k2])))
                })?;
                let elapsed = micros(start) / 4;
                for report in reports {
                    self.push(
                        report,
                        q,
                        seed,
                        2,
                        point.spectral(),
                        Some(point.dynamical()),
                        elapsed,
                    );
                }
            }
        }
        Ok(())
    }

    fn unit_identity(&mut self) -> Result<(), Error> {
        for &q in &self.config.nomes.clone() {
            let ctx = EllipticContext::new(q)?;
            for n in self.config.identity_ns() {
                let per_nome = self.config.per_nome(52);
                let seed = self.seed_for(&format!("pfaffian_identity/n={n}/q={q}"));
                let mut sampler = ParameterSampler::new(&ctx, seed);
                for _ in 0..per_nome {
                    let start = Instant::now();
                    let (point, report) = self.sample(|| {
                        let point = sampler.parameter_point(n)?;
                        let report = check_pfaffian_identity(&point, &ctx)?;
                        Ok(Some((point, report)))
                    })?;
                    self.push(
                        report,
                        q,
                        seed,
                        n,
                        point.spectral(),
                        Some(point.dynamical()),
                        micros(start),
                    );
                }
            }
        }
        Ok(())
    }

    fn unit_factorizations(&mut self) -> Result<(), Error> {
        for &q in &self.config.nomes.clone() {
            let ctx = EllipticContext::new(q)?;
            for n in self.config.identity_ns() {
                let per_nome = self.config.per_nome(20);
                let seed = self.seed_for(&format!("factorizations/n={n}/q={q}"));
                let mut sampler = ParameterSampler::new(&ctx, seed);
                for _ in 0..per_nome {
                    let start = Instant::now();
                    let (point, first, second, h0) = self.sample(|| {
                        let point = sampler.parameter_point(n)?;
                        let (first, second) = check_factorizations(&point, &ctx)?;
                        let h0 = check_identity_h0(&point, &ctx)?;
                        Ok(Some((point, first, second, h0)))
                    })?;
                    let elapsed = micros(start) / 3;
                    for report in [first, second, h0] {
                        self.push(
                            report,
                            q,
                            seed,
                            n,
                            point.spectral(),
                            Some(point.dynamical()),
                            elapsed,
                        );
                    }
                }
            }
        }
        Ok(())
    }

    fn unit_appendix(&mut self) -> Result<(), Error> {
        let per_nome = self.config.per_nome(100);
        for &q in &self.config.nomes.clone() {
            let ctx = EllipticContext::new(q)?;
            let seed = self.seed_for(&format!("appendix/q={q}"));
            let mut sampler = ParameterSampler::new(&ctx, seed);
            for _ in 0..per_nome {
                let start = Instant::now();
                let (point, reports) = self.sample(|| {
                    let point = sampler.parameter_point(2)?;
                    let u: [Complex64; 4] =
                        point.spectral().try_into().expect("n = 2 has 4 parameters");
                    let reports = check_appendix_chain(&u, point.dynamical(), &ctx)?;
                    Ok(Some((point, reports)))
                })?;
                let elapsed = micros(start) / 5;
                for report in reports {
                    self.push(
                        report,
                        q,
                        seed,
                        2,
                        point.spectral(),
                        Some(point.dynamical()),
                        elapsed,
                    );
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum RecursionKind {
    Direct,
    Shifted,
}

fn micros(start: Instant) -> u64 {
    start.elapsed().as_micros() as u64
}
