//! `mass`: ADM mass of ALE metrics by coordinate, Kähler and topological routes.
//!
//! Exit status: 0 success, 1 input error, 2 no convergence, 3 a mathematical
//! verdict failed. Settings are taken from flags, then `--config`, then defaults.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use kahler_mass::admint::{self, Extrapolation, MassEstimate, PipelineConfig};
use kahler_mass::homcalc::{self, GeneralMassInput, IntersectionData};
use kahler_mass::kahlergeo::{penrose_check, DivisorData};
use kahler_mass::lebrun::{zero_mass_instance, HyperbolicDistance, LebrunFamily};
use kahler_mass::metrics::{chart_from_params, FAMILY_NAMES};
use kahler_mass::reproduce::{self, Mutation, ReproduceOptions, DEFAULT_SEED};
use kahler_mass::MassError;

use config::{json_or_string, resolve, ConfigFile};
use output::{number, to_canonical_json, Format};

#[derive(Parser, Debug)]
#[command(name = "mass", version, about = "ADM mass of asymptotically locally Euclidean metrics")]
struct Cli {
    /// Flat key = value settings file (flags take precedence)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output format: table, json or csv
    #[arg(long, global = true)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mass from intersection form, c1 and Kähler areas
    Topo(TopoArgs),
    /// Coordinate ADM mass of a metric family, extrapolated over radii
    Adm(AdmArgs),
    /// Closed-form mass of the scalar-flat O(-ℓ) family
    Lebrun(LebrunArgs),
    /// Compare a mass with the divisor bound
    Penrose(PenroseArgs),
    /// List metric families and their parameters
    Families,
    /// Run the reproduction matrix
    Reproduce(ReproduceArgs),
}

#[derive(Args, Debug)]
struct TopoArgs {
    /// JSON with keys basis, Q, c1, areas
    #[arg(long, conflicts_with_all = ["m", "pairing"])]
    input: Option<PathBuf>,
    /// Complex dimension, for the general formula
    #[arg(long, requires = "pairing")]
    m: Option<i64>,
    /// ⟨c1, [ω]^{m-1}⟩
    #[arg(long, requires = "m", allow_hyphen_values = true)]
    pairing: Option<f64>,
    /// ∫ s dμ
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    scalar_integral: f64,
}

#[derive(Args, Debug)]
struct AdmArgs {
    /// Family name (see `mass families`)
    #[arg(long)]
    family: Option<String>,
    /// Family parameter, value read as JSON when possible (repeatable)
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Dimension (shorthand for --param n=N)
    #[arg(long)]
    n: Option<usize>,
    /// Schwarzschild parameter (shorthand for --param A=VALUE)
    #[arg(long = "A", allow_hyphen_values = true)]
    a: Option<f64>,
    /// Comma-separated increasing radii
    #[arg(long, value_delimiter = ',')]
    schedule: Option<Vec<f64>>,
    #[arg(long)]
    quad_order: Option<usize>,
    /// Relative tolerance on the extrapolation error
    #[arg(long)]
    tolerance: Option<f64>,
    /// richardson, power-law or last-sample
    #[arg(long)]
    extrapolation: Option<String>,
    /// Decay exponent p of mass(ρ) - mass; defaults to 2ε from the fall-off
    #[arg(long)]
    exponent: Option<f64>,
    /// Use the log-det flux of a Kähler chart instead of the ADM integrand
    #[arg(long)]
    logdet: bool,
}

#[derive(Args, Debug)]
struct LebrunArgs {
    #[arg(long, required_unless_present = "zero_instance", conflicts_with = "zero_instance")]
    ell: Option<u32>,
    /// Comma-separated distances: numbers or log_sqrt(q)
    #[arg(long, value_delimiter = ',')]
    distances: Vec<String>,
    /// ℓ - 2 centres at distance log √5, mass exactly zero
    #[arg(long, value_name = "L")]
    zero_instance: Option<u32>,
}

#[derive(Args, Debug)]
struct PenroseArgs {
    /// Divisor JSON: {"m": int, "components": [{"label", "n", "vol"}]}
    #[arg(long)]
    input: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    mass: f64,
    /// The metric is scalar-flat
    #[arg(long)]
    scalar_flat: bool,
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Args, Debug)]
struct ReproduceArgs {
    /// Comma-separated criterion ids or keys
    #[arg(long)]
    only: Option<String>,
    /// Inject a convention error: sign or gamma
    #[arg(long)]
    mutate: Option<Mutation>,
    #[arg(long)]
    seed: Option<u64>,
}

enum Failure {
    Input(String),
    NonConvergence(String),
    Verdict(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::NonConvergence(_) => 2,
            Failure::Verdict(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::NonConvergence(m) | Failure::Verdict(m) => m,
        }
    }
}

impl From<MassError> for Failure {
    fn from(e: MassError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<String> for Failure {
    fn from(e: String) -> Self {
        Failure::Input(e)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let format = resolve(cli.format, &config, "format", Format::Table)?;
    match cli.command {
        Command::Topo(args) => topo(args, format),
        Command::Adm(args) => adm(args, &config, format),
        Command::Lebrun(args) => lebrun(args, format),
        Command::Penrose(args) => penrose(args, format),
        Command::Families => families(format),
        Command::Reproduce(args) => reproduce_cmd(args, &config, format),
    }
}

fn emit(format: Format, json: Value, table: impl FnOnce() -> String, csv: impl FnOnce() -> String) {
    match format {
        Format::Json => println!("{}", to_canonical_json(json)),
        Format::Table => print!("{}", table()),
        Format::Csv => print!("{}", csv()),
    }
}

fn topo(args: TopoArgs, format: Format) -> Outcome {
    if let (Some(m), Some(pairing)) = (args.m, args.pairing) {
        let input = GeneralMassInput { m, pairing, scalar_integral: args.scalar_integral };
        let mass = homcalc::topological_mass_general(&input)?;
        let anomaly = homcalc::compact_anomaly(m, pairing, args.scalar_integral);
        emit(
            format,
            json!({"m": m, "pairing": pairing, "scalar_integral": args.scalar_integral, "mass": mass, "compact_anomaly": anomaly}),
            || format!("mass = {}\ncompact anomaly = {}\n", number(mass), number(anomaly)),
            || format!("key,value\nmass,{}\ncompact_anomaly,{}\n", admint::sig12(mass), admint::sig12(anomaly)),
        );
        return Ok(());
    }
    let path = args.input.ok_or_else(|| "topo needs --input FILE or --m and --pairing".to_string())?;
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let data = IntersectionData::from_json(&text)?;
    let mass = homcalc::topological_mass_surface(&data)?;
    let chern = homcalc::solve_chern_coefficients(&data)?;
    let coefficients: Vec<String> = chern.a.iter().map(homcalc::format_rational).collect();
    let warnings: Vec<String> = data
        .negative_area_labels()
        .iter()
        .map(|l| format!("class {l} has negative area"))
        .collect();
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    emit(
        format,
        json!({"basis": data.basis, "chern_coefficients": coefficients, "pairing": chern.pair(&data.areas), "mass": mass, "warnings": warnings}),
        || {
            let mut s = format!("mass = {}\n", number(mass));
            for (label, a) in data.basis.iter().zip(&coefficients) {
                s.push_str(&format!("  a[{label}] = {a}\n"));
            }
            s
        },
        || format!("key,value\nmass,{}\n", admint::sig12(mass)),
    );
    Ok(())
}

fn adm(args: AdmArgs, config: &ConfigFile, format: Format) -> Outcome {
    let family = args
        .family
        .clone()
        .or_else(|| config.get("family").map(String::from))
        .ok_or_else(|| "adm needs --family (see `mass families`)".to_string())?;
    let mut params: Map<String, Value> = config.params();
    for p in &args.params {
        let (k, v) = p.split_once('=').ok_or_else(|| format!("--param {p:?} is not KEY=VALUE"))?;
        params.insert(k.trim().to_string(), json_or_string(v.trim()));
    }
    if let Some(n) = args.n {
        params.insert("n".into(), json!(n));
    }
    if let Some(a) = args.a {
        params.insert("A".into(), json!(a));
    }
    let chart = chart_from_params(&family, &Value::Object(params.clone()))?;

    let schedule = match args.schedule.clone() {
        Some(s) => s,
        None => match config.get("schedule") {
            Some(text) => text
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| format!("config schedule: {e}")))
                .collect::<Result<Vec<f64>, String>>()?,
            None => admint::default_schedule(&chart),
        },
    };
    let defaults = PipelineConfig::default();
    let exponent = match args.exponent {
        Some(p) => Some(p),
        None => config.get_parsed::<f64>("exponent")?,
    };
    let method = resolve(args.extrapolation.clone(), config, "extrapolation", "richardson".to_string())?;
    let extrapolation = match method.as_str() {
        "richardson" => Extrapolation::Richardson { exponent },
        "power-law" => Extrapolation::PowerLaw { exponent },
        "last-sample" => Extrapolation::LastSample,
        other => return Err(Failure::Input(format!("unknown extrapolation {other:?}"))),
    };
    let pipeline = PipelineConfig {
        quad_order: resolve(args.quad_order, config, "quad_order", defaults.quad_order)?,
        tolerance: resolve(args.tolerance, config, "tolerance", defaults.tolerance)?,
        extrapolation,
        convention: defaults.convention,
    };
    let estimate = if args.logdet {
        admint::kahler_logdet_mass(&chart, &schedule, &pipeline)?
    } else {
        admint::adm_mass(&chart, &schedule, &pipeline)?
    };
    let route = if args.logdet { "log-det" } else { "adm" };
    emit(
        format,
        json!({"family": family, "params": params, "route": route, "estimate": estimate_json(&estimate)}),
        || {
            format!(
                "mass = {} ± {}{}\n\n{}",
                number(estimate.value),
                admint::sig12(estimate.error_estimate),
                if estimate.converged { "" } else { "  (not converged)" },
                estimate.to_csv()
            )
        },
        || estimate.to_csv(),
    );
    if estimate.converged {
        Ok(())
    } else {
        Err(Failure::NonConvergence(format!(
            "error estimate {} exceeds tolerance {} (relative)",
            admint::sig12(estimate.error_estimate),
            admint::sig12(pipeline.tolerance)
        )))
    }
}

fn estimate_json(e: &MassEstimate) -> Value {
    serde_json::to_value(e).expect("estimate serializes")
}

fn lebrun(args: LebrunArgs, format: Format) -> Outcome {
    let family = match args.zero_instance {
        Some(ell) => zero_mass_instance(ell)?,
        None => {
            let ell = args.ell.ok_or_else(|| "lebrun needs --ell or --zero-instance".to_string())?;
            let distances = args
                .distances
                .iter()
                .map(|d| d.parse::<HyperbolicDistance>())
                .collect::<Result<Vec<_>, _>>()?;
            LebrunFamily::new(ell, distances)?
        }
    };
    let mass = family.closed_form_mass();
    let exact = family.closed_form_mass_exact().map(|r| homcalc::format_rational(&r));
    let (area_ftilde, areas_e) = family.curve_areas();
    let cross = family.homcalc_mass()?;
    let agree = (cross - mass).abs() <= 1e-12 * mass.abs().max(1.0);
    emit(
        format,
        json!({
            "ell": family.ell,
            "mass": mass,
            "mass_exact": exact,
            "area_ftilde": area_ftilde,
            "areas_e": areas_e,
            "intersection_route_mass": cross,
            "routes_agree": agree,
        }),
        || {
            let mut s = match &exact {
                Some(r) => format!("mass = {r} (exact)\n"),
                None => format!("mass = {}\n", number(mass)),
            };
            s.push_str(&format!("area(F~) = {}\n", number(area_ftilde)));
            for (j, a) in areas_e.iter().enumerate() {
                s.push_str(&format!("area(E{}) = {}\n", j + 1, number(*a)));
            }
            s.push_str(&format!(
                "cross-check: intersection-form route gives {} ({})\n",
                number(cross),
                if agree { "agrees" } else { "DISAGREES" }
            ));
            s
        },
        || format!("key,value\nmass,{}\nintersection_route_mass,{}\n", admint::sig12(mass), admint::sig12(cross)),
    );
    if agree {
        Ok(())
    } else {
        Err(Failure::Verdict(format!("closed form {mass} and intersection route {cross} differ")))
    }
}

fn penrose(args: PenroseArgs, format: Format) -> Outcome {
    let text = std::fs::read_to_string(&args.input).map_err(|e| format!("cannot read {}: {e}", args.input.display()))?;
    let divisor = DivisorData::from_json(&text)?;
    let v = penrose_check(args.mass, &divisor, args.scalar_flat, args.tolerance)?;
    let verdict = if !v.holds {
        "violation"
    } else if v.equality {
        "equality"
    } else {
        "strict inequality"
    };
    emit(
        format,
        json!({"verdict": verdict, "report": serde_json::to_value(&v).expect("verdict serializes")}),
        || {
            format!(
                "mass = {}\nbound = {}\nverdict: {verdict}\nconsistent with scalar-flat flag: {}\n",
                number(v.mass),
                number(v.bound),
                v.consistent_with_scalar_flat
            )
        },
        || format!("mass,bound,holds,equality,consistent\n{},{},{},{},{}\n", admint::sig12(v.mass), admint::sig12(v.bound), v.holds, v.equality, v.consistent_with_scalar_flat),
    );
    if v.passed() {
        Ok(())
    } else {
        Err(Failure::Verdict(format!("penrose check failed: {verdict}, scalar-flat consistency {}", v.consistent_with_scalar_flat)))
    }
}

fn family_examples() -> Vec<(&'static str, Value)> {
    vec![
        ("euclidean", json!({"n": 4})),
        ("schwarzschild", json!({"n": 3, "A": 2.0})),
        ("gibbons-hawking", json!({"centers": [[0.0, 0.0, 0.5], [0.0, 0.0, -0.5]], "string_direction": [0.0, 0.0, 1.0]})),
        ("radial-kahler", json!({"m": 2, "potential": {"kind": "log-shift", "a": 1.0}, "inner_radius": 0.0})),
        ("lebrun", json!({"closed_form_only": true})),
    ]
}

fn families(format: Format) -> Outcome {
    let examples = family_examples();
    debug_assert_eq!(examples.len(), FAMILY_NAMES.len());
    emit(
        format,
        Value::Object(examples.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()),
        || examples.iter().map(|(k, v)| format!("{k:<16} {v}\n")).collect(),
        || {
            let mut s = String::from("family,example_params\n");
            for (k, v) in &examples {
                s.push_str(&format!("{k},\"{}\"\n", v.to_string().replace('"', "\"\"")));
            }
            s
        },
    );
    Ok(())
}

fn reproduce_cmd(args: ReproduceArgs, config: &ConfigFile, format: Format) -> Outcome {
    let options = ReproduceOptions {
        seed: resolve(args.seed, config, "seed", DEFAULT_SEED)?,
        mutation: match args.mutate {
            Some(m) => Some(m),
            None => config.get_parsed::<Mutation>("mutate")?,
        },
    };
    let only = args.only.or_else(|| config.get("only").map(String::from));
    let reports = reproduce::reproduce(only.as_deref(), &options)?;
    emit(
        format,
        json!({"seed": options.seed, "mutation": options.mutation, "criteria": serde_json::to_value(&reports).expect("reports serialize")}),
        || reproduce::render_table(&reports),
        || {
            let mut s = String::from("id,key,passed,seconds\n");
            for r in &reports {
                s.push_str(&format!("{},{},{},{}\n", r.id, r.key, r.passed, admint::sig12(r.seconds)));
            }
            s
        },
    );
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| format!("{} {}", r.id, r.key)).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verdict(format!("criteria failed: {}", failed.join(", "))))
    }
}
