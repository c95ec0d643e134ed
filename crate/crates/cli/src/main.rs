use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hkpath::acceptance::{run_all, run_criterion};
use hkpath::config::{RunConfig, CONFIG_ENV, FORMAT_VERSION};
use hkpath::exchange::exchange_experiment;
use hkpath::gauge::{cousin_division, validate_division, CousinOptions, Division1D, ExtReal, Gauge1D};
use hkpath::integrate::{hk_integrate_1d, oscillatory_full_line};
use hkpath::fresnel::incomplete_fresnel;
use hkpath::output::{csv_writer, fmt12, round12};
use hkpath::pathint::{mehler_kernel, perturbation_terms, psi0_closed, psi_sliced, AnalyticTag, Potential, PropagatorQuery};
use hkpath::Complex64;
use serde_json::{json, Value};

mod parse;

#[derive(Parser, Debug)]
#[command(name = "hkpath", version, about = "Gauge integrals and time-sliced Fresnel path integrals")]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Overrides lab.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides pathint.mass.
    #[arg(long, global = true)]
    mass: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Numeric ∫ e^{c x²/2} dx against √(2π/−c), or a table of ∫₀ᵘ e^{iy²/2} dy.
    Fresnel(FresnelArgs),
    /// Build or validate gauge-fine divisions of the extended line.
    #[command(subcommand)]
    Division(DivisionCommand),
    /// Propagator values for a query file.
    Kernel(KernelArgs),
    /// Perturbation terms and partial sums for a query file.
    Perturb(PerturbArgs),
    /// Partial sums against the sliced kernel, growth table and convergence witness.
    Exchange(ExchangeArgs),
    /// Runs the acceptance suite.
    Selftest(SelftestArgs),
    /// Prints the effective configuration.
    Config,
}

#[derive(Args, Debug)]
struct FresnelArgs {
    /// Phase coefficient, e.g. `i`, `2i`, `-0.5+1i`.
    #[arg(long, value_parser = parse::complex, default_value = "i")]
    c: Complex64,
    /// Tabulate the incomplete integral instead, closed form against quadrature.
    #[arg(long)]
    table: bool,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    u_min: f64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    u_max: f64,
    #[arg(long, default_value_t = 50)]
    steps: usize,
}

#[derive(Args, Debug, Clone)]
struct GaugeArgs {
    /// Gauge value at the origin.
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    /// Growth of the gauge with |x|: δ(x) = delta + slope·|x|.
    #[arg(long, default_value_t = 0.0)]
    slope: f64,
    /// Gauge value at ±∞; the tails start beyond ∓1/tail.
    #[arg(long, default_value_t = 0.25)]
    tail: f64,
}

impl GaugeArgs {
    fn gauge(&self) -> Gauge1D {
        let (d, k, t) = (self.delta, self.slope, self.tail);
        Gauge1D::new(move |x| match x {
            ExtReal::Finite(x) => d + k * x.abs(),
            _ => t,
        })
    }
}

#[derive(Subcommand, Debug)]
enum DivisionCommand {
    /// Constructs a fine division and prints it as JSON.
    Build {
        #[command(flatten)]
        gauge: GaugeArgs,
        #[arg(long, default_value_t = 60)]
        max_depth: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Checks a division file; fineness is checked when `--fine` is given.
    Validate {
        input: PathBuf,
        #[arg(long)]
        fine: bool,
        #[command(flatten)]
        gauge: GaugeArgs,
    },
}

#[derive(Args, Debug)]
struct KernelArgs {
    /// Query file: {"start": {"xi", "tau"}, "end": {"xi", "tau"}, "slices", "potential", "mass"}.
    #[arg(long)]
    query: PathBuf,
    /// Tabulate over end points instead of a single value.
    #[arg(long, requires = "xi_max", allow_negative_numbers = true)]
    xi_min: Option<f64>,
    #[arg(long, requires = "xi_min", allow_negative_numbers = true)]
    xi_max: Option<f64>,
    #[arg(long, default_value_t = 20)]
    steps: usize,
}

#[derive(Args, Debug)]
struct PerturbArgs {
    #[arg(long)]
    query: PathBuf,
    #[arg(long, default_value_t = 6)]
    mmax: usize,
}

#[derive(Args, Debug)]
struct ExchangeArgs {
    /// Potential: `zero`, `const:<c>` or `harmonic:<omega>`.
    #[arg(long = "V", value_parser = parse::potential, default_value = "const:1")]
    potential: Potential,
    /// End time; the start is (xi0, tau0).
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    tau0: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    xi: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    xi0: f64,
    #[arg(long, default_value_t = 4)]
    slices: usize,
    #[arg(long, default_value_t = 12)]
    mmax: usize,
    /// Overrides lab.eps.
    #[arg(long)]
    eps: Option<f64>,
    /// Overrides lab.samples.
    #[arg(long)]
    samples: Option<usize>,
    /// Directory for the growth table and verdict; overrides output.dir.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',')]
    only: Vec<u32>,
}

/// Failure of a run after the arguments parsed.
enum Failure {
    /// The computation ran and its answer is "invalid" (exit 1).
    Rejected(String),
    Error(hkpath::Error),
}

impl From<hkpath::Error> for Failure {
    fn from(e: hkpath::Error) -> Self {
        Failure::Error(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Error(e.into())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Error(hkpath::Error::Io(io::Error::other(e)))
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Rejected(msg)) => {
            eprintln!("hkpath: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Error(e)) => {
            eprintln!("hkpath: {e}");
            ExitCode::from(1)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, hkpath::Error> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.lab.seed = seed;
    }
    if let Some(mass) = cli.mass {
        cfg.pathint.mass = mass;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Outcome {
    let cfg = load_config(&cli)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Fresnel(a) => fresnel(&a, &cfg, &mut out),
        Command::Division(d) => division(d, &mut out),
        Command::Kernel(a) => kernel(&a, &cfg, &mut out),
        Command::Perturb(a) => perturb(&a, &cfg, &mut out),
        Command::Exchange(a) => exchange(a, cfg, &mut out),
        Command::Selftest(a) => selftest(&a, &cfg, &mut out),
        Command::Config => {
            writeln!(out, "{}", cfg.to_json()?)?;
            Ok(())
        }
    }
}

fn cjson(z: Complex64) -> Value {
    json!({"re": round12(z.re), "im": round12(z.im)})
}

fn write_json(out: &mut impl Write, v: &Value) -> Outcome {
    writeln!(out, "{}", serde_json::to_string_pretty(v).map_err(hkpath::Error::from)?)?;
    Ok(())
}

fn fresnel(a: &FresnelArgs, cfg: &RunConfig, out: &mut impl Write) -> Outcome {
    if a.table {
        if a.steps == 0 || !(a.u_min < a.u_max) {
            return Err(Failure::Rejected("the table needs u_min < u_max and steps >= 1".into()));
        }
        let mut w = csv_writer(out)?;
        w.write_record(["u", "re", "im", "re_numeric", "im_numeric", "abs_diff"])?;
        for k in 0..=a.steps {
            let u = a.u_min + (a.u_max - a.u_min) * k as f64 / a.steps as f64;
            let closed = incomplete_fresnel(u);
            let (lo, hi, sign) = if u >= 0.0 { (0.0, u, 1.0) } else { (u, 0.0, -1.0) };
            let numeric = if u == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                sign * hk_integrate_1d(|y| Complex64::from_polar(1.0, 0.5 * y * y), (lo, hi), 1e-12)?.value
            };
            w.write_record([
                fmt12(u),
                fmt12(closed.re),
                fmt12(closed.im),
                fmt12(numeric.re),
                fmt12(numeric.im),
                fmt12((closed - numeric).norm()),
            ])?;
        }
        w.flush()?;
        return Ok(());
    }
    let value = oscillatory_full_line(a.c, 1e-9, &cfg.integrator)?;
    let reference = (Complex64::new(2.0 * std::f64::consts::PI, 0.0) / -a.c).sqrt();
    let mut w = csv_writer(out)?;
    w.write_record(["c_re", "c_im", "re", "im", "ref_re", "ref_im", "abs_diff"])?;
    w.write_record([
        fmt12(a.c.re),
        fmt12(a.c.im),
        fmt12(value.re),
        fmt12(value.im),
        fmt12(reference.re),
        fmt12(reference.im),
        fmt12((value - reference).norm()),
    ])?;
    w.flush()?;
    Ok(())
}

fn division(cmd: DivisionCommand, out: &mut impl Write) -> Outcome {
    match cmd {
        DivisionCommand::Build { gauge, max_depth, out: path } => {
            let d = cousin_division(&gauge.gauge(), &CousinOptions { max_depth, tails: None })?;
            let text = d.to_json()?;
            match path {
                Some(p) => fs::write(p, text + "\n")?,
                None => writeln!(out, "{text}")?,
            }
            Ok(())
        }
        DivisionCommand::Validate { input, fine, gauge } => {
            let d = Division1D::from_json(&read(&input)?)?;
            let g = gauge.gauge();
            let report = validate_division(&d, fine.then_some(&g));
            let doc = json!({
                "format_version": FORMAT_VERSION,
                "items": d.len(),
                "valid": report.is_valid(),
                "violations": report.violations,
            });
            write_json(out, &doc)?;
            if report.is_valid() {
                Ok(())
            } else {
                Err(Failure::Rejected(format!("{} violation(s)", report.violations.len())))
            }
        }
    }
}

fn read(path: &Path) -> Result<String, hkpath::Error> {
    fs::read_to_string(path).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

fn load_query(path: &Path, cfg: &RunConfig) -> Result<PropagatorQuery, hkpath::Error> {
    let text = read(path)?;
    let q = PropagatorQuery::from_json(&text)?;
    // The file's mass wins; the config mass fills in when the file has none.
    let explicit: Value = serde_json::from_str(&text)?;
    if explicit.get("mass").is_none() {
        return q.with_mass(cfg.pathint.mass);
    }
    Ok(q)
}

fn kernel_values(q: &PropagatorQuery, cfg: &RunConfig) -> Result<Vec<(&'static str, Complex64, Option<f64>)>, hkpath::Error> {
    let sliced = psi_sliced(q, &cfg.pathint.grid)?;
    let mut v = vec![("sliced", sliced.value, Some(sliced.abs_error_estimate))];
    match q.potential.tag() {
        AnalyticTag::Zero => v.push(("closed", psi0_closed(q)?, None)),
        AnalyticTag::Constant(c) => {
            let phase = Complex64::new(0.0, -c * q.duration()).exp();
            v.push(("closed", phase * psi0_closed(q)?, None));
        }
        AnalyticTag::Harmonic(_) => {
            if let Ok(m) = mehler_kernel(q) {
                v.push(("mehler", m, None));
            }
        }
        AnalyticTag::Custom => {}
    }
    Ok(v)
}

fn kernel(a: &KernelArgs, cfg: &RunConfig, out: &mut impl Write) -> Outcome {
    let q = load_query(&a.query, cfg)?;
    if let (Some(lo), Some(hi)) = (a.xi_min, a.xi_max) {
        if a.steps == 0 || !(lo < hi) {
            return Err(Failure::Rejected("the table needs xi_min < xi_max and steps >= 1".into()));
        }
        let mut w = csv_writer(out)?;
        let first = kernel_values(&q, cfg)?;
        let mut header = vec!["xi".to_string()];
        for (name, _, _) in &first {
            header.push(format!("re_{name}"));
            header.push(format!("im_{name}"));
        }
        w.write_record(&header)?;
        for k in 0..=a.steps {
            let xi = lo + (hi - lo) * k as f64 / a.steps as f64;
            let mut qk = q.clone();
            qk.xi_end = xi;
            let mut row = vec![fmt12(xi)];
            for (_, z, _) in kernel_values(&qk, cfg)? {
                row.push(fmt12(z.re));
                row.push(fmt12(z.im));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        return Ok(());
    }
    let mut doc = json!({
        "format_version": FORMAT_VERSION,
        "query": serde_json::from_str::<Value>(&q.to_json()?).map_err(hkpath::Error::from)?,
    });
    for (name, z, err) in kernel_values(&q, cfg)? {
        let mut entry = cjson(z);
        if let Some(e) = err {
            entry["abs_error_estimate"] = json!(round12(e));
        }
        doc[name] = entry;
    }
    write_json(out, &doc)
}

fn perturb(a: &PerturbArgs, cfg: &RunConfig, out: &mut impl Write) -> Outcome {
    let q = load_query(&a.query, cfg)?;
    let terms = perturbation_terms(a.mmax, &q, &cfg.pathint.grid)?;
    let mut w = csv_writer(out)?;
    w.write_record(["m", "re_term", "im_term", "re_partial_sum", "im_partial_sum", "abs_error_estimate"])?;
    let mut sum = Complex64::new(0.0, 0.0);
    for (m, t) in terms.iter().enumerate() {
        sum += t.value;
        w.write_record([
            m.to_string(),
            fmt12(t.value.re),
            fmt12(t.value.im),
            fmt12(sum.re),
            fmt12(sum.im),
            fmt12(t.abs_error_estimate),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn exchange(a: ExchangeArgs, mut cfg: RunConfig, out: &mut impl Write) -> Outcome {
    if let Some(eps) = a.eps {
        cfg.lab.eps = eps;
    }
    if let Some(samples) = a.samples {
        cfg.lab.samples = samples;
    }
    cfg.validate()?;
    let q = PropagatorQuery::new((a.xi0, a.tau0), (a.xi, a.tau), a.slices, a.potential)?.with_mass(cfg.pathint.mass)?;
    let report = exchange_experiment(&q, a.mmax, &cfg.pathint.grid, &cfg.lab)?;
    report.write_csv(&mut *out)?;
    let dir = a.out_dir.unwrap_or(cfg.output.dir);
    fs::create_dir_all(&dir)?;
    report.growth.write_csv(fs::File::create(dir.join("growth_table.csv"))?)?;
    let verdict = json!({
        "format_version": FORMAT_VERSION,
        "beta_probe": report.verdict.beta_probe,
        "m_found": report.verdict.m_found,
        "eps": round12(report.verdict.eps),
    });
    fs::write(
        dir.join("verdict.json"),
        serde_json::to_string_pretty(&verdict).map_err(hkpath::Error::from)? + "\n",
    )?;
    Ok(())
}

fn selftest(a: &SelftestArgs, cfg: &RunConfig, out: &mut impl Write) -> Outcome {
    let outcomes = if a.only.is_empty() {
        run_all(cfg)
    } else {
        a.only.iter().map(|&id| run_criterion(id, cfg)).collect()
    };
    for o in &outcomes {
        writeln!(out, "{o}")?;
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed > 0 {
        return Err(Failure::Rejected(format!("{failed} criterion(s) failed")));
    }
    Ok(())
}
