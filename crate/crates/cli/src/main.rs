use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use corrlab_core::classifier::Tolerances;
use corrlab_core::hv::{random_local_model, vertex_outcomes};
use corrlab_core::sweep::{sweep, werner_behavior, Family, SweepRow, TSIRELSON_ANGLES};
use corrlab_core::{
    classify, evaluate, pr_box, pr_box_model, singlet_state, two_qubit_behavior, ClassifierConfig,
    Error, HvModel, MeasurementDirection,
};

mod input;
mod report;

use input::Input;

#[derive(Parser)]
#[command(
    name = "corrlab",
    version,
    about = "Generate and classify two-party correlation behaviors"
)]
struct Cli {
    #[command(flatten)]
    tol: TolArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct TolArgs {
    /// Sets the no-signalling, facet, LP and PSD tolerances at once
    #[arg(long, global = true, value_name = "T")]
    tol: Option<f64>,
    #[arg(long, global = true, value_name = "T")]
    ns_tol: Option<f64>,
    #[arg(long, global = true, value_name = "T")]
    lp_tol: Option<f64>,
    #[arg(long, global = true, value_name = "T")]
    psd_tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a named behavior to a corrlab-behavior/1 file
    Gen(GenArgs),
    /// Print moments, CHSH values and diagnostics for a behavior or model file
    Analyze {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Place a behavior in the hierarchy; the exit code encodes the tier
    Classify {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Classify a one-parameter family on an even grid and write CSV
    Sweep {
        family: FamilyArg,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Singlet,
    Werner,
    Prbox,
    Vertex,
    RandomLhv,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Werner,
    Prmix,
}

#[derive(Args)]
struct GenArgs {
    kind: Kind,
    /// Planar measurement angles a0,a1,b0,b1 in degrees
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    angles: Option<Vec<f64>>,
    /// Werner visibility in [0, 1]
    #[arg(long)]
    v: Option<f64>,
    /// Deterministic vertex index 0..15
    #[arg(long)]
    index: Option<usize>,
    /// Number of hidden states for random-lhv
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Also write the hidden-variable model (prbox, vertex, random-lhv)
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
}

/// A failed run: message for stderr plus the process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn write(path: &Path, err: std::io::Error) -> Self {
        Self {
            code: 3,
            message: format!("cannot write {}: {err}", path.display()),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = if matches!(err, Error::Inconsistent(_)) {
            4
        } else {
            2
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = config(&cli.tol).and_then(|cfg| run(cli.command, &cfg));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("corrlab: error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn config(t: &TolArgs) -> Result<ClassifierConfig, Failure> {
    let mut tol = t.tol.map_or_else(Tolerances::default, Tolerances::uniform);
    if let Some(x) = t.ns_tol {
        tol.ns = x;
    }
    if let Some(x) = t.lp_tol {
        tol.lp = x;
    }
    if let Some(x) = t.psd_tol {
        tol.psd = x;
    }
    for (name, x) in [
        ("ns", tol.ns),
        ("facet", tol.facet),
        ("lp", tol.lp),
        ("psd", tol.psd),
    ] {
        if !(x.is_finite() && x > 0.0) {
            return Err(Failure::usage(format!(
                "{name} tolerance must be positive, got {x}"
            )));
        }
    }
    Ok(ClassifierConfig {
        tolerances: tol,
        ..ClassifierConfig::default()
    })
}

fn run(command: Command, cfg: &ClassifierConfig) -> Outcome {
    match command {
        Command::Gen(args) => gen(args),
        Command::Analyze { file, json } => {
            let input = Input::load(&file)?;
            let text = if json {
                serde_json::to_string_pretty(&report::analyze_json(&input)?)
                    .expect("report serializes")
            } else {
                report::analyze_text(&input)?
            };
            println!("{text}");
            Ok(0)
        }
        Command::Classify { file, json } => {
            let input = Input::load(&file)?;
            let verdict = classify(&input.behavior, cfg)?;
            if json {
                let doc = serde_json::to_string_pretty(&verdict.to_json_value())
                    .expect("verdict serializes");
                println!("{doc}");
            } else {
                print!("{}", report::verdict_text(&verdict));
            }
            Ok(verdict.tier.exit_code() as u8)
        }
        Command::Sweep {
            family,
            from,
            to,
            steps,
            output,
        } => {
            let family = match family {
                FamilyArg::Werner => Family::Werner,
                FamilyArg::Prmix => Family::PrMix,
            };
            let rows = sweep(family, from, to, steps, cfg)?;
            fs::write(&output, csv(&rows)).map_err(|e| Failure::write(&output, e))?;
            Ok(0)
        }
    }
}

fn csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("param,s_max,ns_residual,tier\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            report::sig(r.param, 15),
            report::sig(r.s_max, 15),
            report::sig(r.ns_residual, 15),
            r.tier
        ));
    }
    out
}

fn gen(args: GenArgs) -> Outcome {
    let angles = match &args.angles {
        None => TSIRELSON_ANGLES,
        Some(a) => <[f64; 4]>::try_from(a.as_slice()).map_err(|_| {
            Failure::usage(format!(
                "--angles needs 4 values a0,a1,b0,b1, got {}",
                a.len()
            ))
        })?,
    };
    if angles.iter().any(|a| !a.is_finite()) {
        return Err(Failure::usage("--angles must be finite"));
    }
    let model: Option<HvModel> = match args.kind {
        Kind::Prbox => Some(pr_box_model()),
        Kind::Vertex => {
            let i = args
                .index
                .ok_or_else(|| Failure::usage("vertex needs --index 0..15"))?;
            if i >= 16 {
                return Err(Failure::usage(format!("--index must be in 0..15, got {i}")));
            }
            let [a0, a1, b0, b1] = vertex_outcomes(i);
            Some(HvModel::local(vec![1.0], &[[a0, a1]], &[[b0, b1]])?)
        }
        Kind::RandomLhv => {
            let k = args
                .k
                .ok_or_else(|| Failure::usage("random-lhv needs --k"))?;
            Some(random_local_model(k, args.seed)?)
        }
        Kind::Singlet | Kind::Werner => None,
    };
    let behavior = match args.kind {
        Kind::Singlet => {
            let d = MeasurementDirection::planar_degrees;
            let [a0, a1, b0, b1] = angles;
            two_qubit_behavior(&singlet_state(), [d(a0), d(a1)], [d(b0), d(b1)])?
        }
        Kind::Werner => {
            let v = args
                .v
                .ok_or_else(|| Failure::usage("werner needs --v in [0, 1]"))?;
            werner_behavior(v, angles)?
        }
        // The closed-form table and the model agree exactly.
        Kind::Prbox => pr_box(),
        Kind::Vertex | Kind::RandomLhv => evaluate(model.as_ref().expect("model built above")),
    };
    if let Some(path) = &args.model {
        let m = model
            .ok_or_else(|| Failure::usage("--model applies to prbox, vertex and random-lhv"))?;
        write(path, &m.to_json_string())?;
    }
    write(&args.output, &behavior.to_json_string())?;
    Ok(0)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, format!("{text}\n")).map_err(|e| Failure::write(path, e))
}
