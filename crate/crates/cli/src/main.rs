use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use wignerkit::fock::{cat_state, coherent_state, fock_state, thermal_state};
use wignerkit::fpsim::{estimate_field, realize_sde, reconstruct, simulate, Scheme, TrajectoryEnsemble};
use wignerkit::inversion::{rho_from_field_with, InversionOptions};
use wignerkit::io::{self, DensityJson, EnsembleSidecar, FieldJson};
use wignerkit::positivity::{max_positive_s, ScanOptions};
use wignerkit::superop::poly::parse_decimal;
use wignerkit::superop::{compile_generator, extract_fp, parse_master_equation, FpSpec, FpSpecJson, Ordering};
use wignerkit::wigner::{field_on_grid, marginal_with, Interpolation, Method, OrderingParam, PhaseSpaceGrid};
use wignerkit::{Error, FockDim, Tolerances};

mod meta;

use meta::{CliError, Metadata};

#[derive(Parser, Debug)]
#[command(name = "wignerkit", version, about = "s-ordered Wigner functions: evaluation, inversion, positivity, super-operator calculus and Fokker-Planck Monte-Carlo")]
struct Cli {
    /// Worker threads (default: all cores; overrides WIGNERKIT_THREADS)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fixture states
    State {
        #[command(subcommand)]
        action: StateAction,
    },
    /// Tabulate W_s of a density matrix on a grid
    Wigner(WignerArgs),
    /// Reconstruct a density matrix from a field
    Invert(InvertArgs),
    /// Largest s with a nonnegative field on the grid
    Positivity(PositivityArgs),
    /// Compile a master equation to Fokker-Planck coefficients
    Compile(CompileArgs),
    /// Monte-Carlo simulation of a compiled Fokker-Planck equation
    Simulate(SimulateArgs),
    /// Density matrix from an ensemble checkpoint
    Reconstruct(ReconstructArgs),
    /// Quadrature marginal of an s = 0 field
    Marginal(MarginalArgs),
}

#[derive(Subcommand, Debug)]
enum StateAction {
    /// Write a fixture state: fock, coherent, thermal, cat or vacuum
    Make(MakeArgs),
}

#[derive(Args, Debug)]
struct MakeArgs {
    kind: String,
    /// Photon number (fock)
    #[arg(long)]
    n: Option<usize>,
    /// Amplitude "re[,im]" (coherent, cat)
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    /// Mean photon number (thermal)
    #[arg(long)]
    nbar: Option<f64>,
    /// Cat parity sign, +1 or -1
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    parity: i32,
    /// Truncation: basis |0>..|N>
    #[arg(long)]
    dim: usize,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct WignerArgs {
    #[arg(long)]
    rho: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    s: f64,
    /// min:max:n[,min:max:n]
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    #[arg(long, default_value = "auto")]
    method: String,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InvertArgs {
    #[arg(long)]
    field: PathBuf,
    /// Truncation: basis |0>..|N>
    #[arg(long)]
    dim: usize,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Clip negative eigenvalues and renormalize
    #[arg(long)]
    clip: bool,
}

#[derive(Args, Debug)]
struct PositivityArgs {
    #[arg(long)]
    rho: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    #[arg(long, num_args = 2, value_names = ["S_LO", "S_HI"], allow_hyphen_values = true)]
    scan: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, default_value = "auto")]
    method: String,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct CompileArgs {
    #[arg(long)]
    master: PathBuf,
    /// Parameter bindings NAME=VALUE (exact decimals)
    #[arg(long, num_args = 1..)]
    bind: Vec<String>,
    /// Ordering parameter, or "symbolic"
    #[arg(long, default_value = "symbolic", allow_hyphen_values = true)]
    s: String,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    fp: PathBuf,
    /// delta:RE,IM | coherent:RE,IM | thermal:NBAR | vacuum
    #[arg(long, allow_hyphen_values = true)]
    init: String,
    #[arg(long)]
    t: f64,
    #[arg(long)]
    dt: f64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "exact-gaussian-step")]
    scheme: String,
    /// Bindings for symbols left in the spec, NAME=VALUE
    #[arg(long, num_args = 1..)]
    bind: Vec<String>,
    /// Ordering parameter if the spec is symbolic
    #[arg(long, allow_hyphen_values = true)]
    s: Option<String>,
    #[arg(short, long)]
    output: PathBuf,
    /// Also write a kernel density estimate of the final ensemble
    #[arg(long)]
    field: Option<PathBuf>,
    #[arg(long, default_value = "-4:4:81", allow_hyphen_values = true)]
    grid: String,
    #[arg(long, default_value_t = 0.1)]
    bandwidth: f64,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    #[arg(long)]
    ensemble: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    s: f64,
    /// Truncation: basis |0>..|N>
    #[arg(long)]
    dim: usize,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MarginalArgs {
    #[arg(long)]
    field: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    phi: f64,
    #[arg(long, default_value = "sinc")]
    interp: String,
    #[arg(short, long)]
    output: PathBuf,
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Serialize)]
struct Wrapped<'a, T: Serialize> {
    metadata: &'a Metadata,
    #[serde(flatten)]
    body: &'a T,
}

fn write_wrapped<T: Serialize>(path: &Path, meta: &Metadata, body: &T) -> CliResult<()> {
    io::write_json(path, &Wrapped { metadata: meta, body }).map_err(|e| CliError::file(path, e))?;
    Ok(())
}

fn parse_beta(text: &str) -> CliResult<Complex64> {
    let parts: Vec<&str> = text.split(',').collect();
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| CliError::usage(format!("bad number '{t}' in '{text}'")))
    };
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(CliError::usage(format!("expected RE[,IM], got '{text}'"))),
    }
}

fn parse_exact(text: &str) -> Option<num_rational::BigRational> {
    let t = text.trim();
    match t.strip_prefix('-') {
        Some(rest) => parse_decimal(rest).map(|r| -r),
        None => parse_decimal(t.strip_prefix('+').unwrap_or(t)),
    }
}

fn parse_bindings(items: &[String]) -> CliResult<BTreeMap<String, num_rational::BigRational>> {
    let mut out = BTreeMap::new();
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("binding '{item}' is not NAME=VALUE")))?;
        let r = parse_exact(v).ok_or_else(|| CliError::usage(format!("binding '{item}': bad value")))?;
        out.insert(k.trim().to_string(), r);
    }
    Ok(out)
}

fn read_density(path: &Path) -> CliResult<wignerkit::DensityMatrix> {
    let j: DensityJson = io::read_json(path).map_err(|e| CliError::file(path, e))?;
    Ok(j.to_density()?)
}

fn read_field(path: &Path) -> CliResult<wignerkit::wigner::WignerField> {
    let j: FieldJson = io::read_json(path).map_err(|e| CliError::file(path, e))?;
    Ok(j.to_field()?)
}

fn create(path: &Path) -> CliResult<File> {
    File::create(path).map_err(|e| CliError::file(path, e.into()))
}

fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn run(cli: Cli, meta: &mut Metadata) -> CliResult<()> {
    match cli.command {
        Command::State { action: StateAction::Make(a) } => {
            let dim = FockDim::new(a.dim);
            let need_beta = || {
                a.beta
                    .as_deref()
                    .ok_or_else(|| CliError::usage("--beta is required"))
                    .and_then(parse_beta)
            };
            let rho = match a.kind.as_str() {
                "fock" => fock_state(a.n.ok_or_else(|| CliError::usage("--n is required"))?, dim)?,
                "vacuum" => fock_state(0, dim)?,
                "coherent" => coherent_state(need_beta()?, dim)?,
                "thermal" => thermal_state(a.nbar.ok_or_else(|| CliError::usage("--nbar is required"))?, dim)?,
                "cat" => cat_state(need_beta()?, a.parity, dim)?,
                other => return Err(CliError::usage(format!("unknown state kind '{other}'"))),
            };
            write_wrapped(&a.output, meta, &DensityJson::from(&rho))
        }
        Command::Wigner(a) => {
            let rho = read_density(&a.rho)?;
            let grid = PhaseSpaceGrid::from_spec(&a.grid)?;
            let method: Method = a.method.parse()?;
            let field = field_on_grid(&rho, &grid, OrderingParam::new(a.s)?, method)?;
            meta.method = Some(field.method.clone());
            write_wrapped(&a.output, meta, &FieldJson::from(&field))?;
            if let Some(csv) = a.csv {
                io::write_field_csv(create(&csv)?, &field)?;
            }
            Ok(())
        }
        Command::Invert(a) => {
            let field = read_field(&a.field)?;
            let rec = rho_from_field_with(&field, FockDim::new(a.dim), &InversionOptions { clip_eigenvalues: a.clip })?;
            write_wrapped(&a.output, meta, &DensityJson::from(&rec.rho))?;
            if let Some(r) = a.report {
                write_wrapped(&r, meta, &rec.diagnostics)?;
            }
            Ok(())
        }
        Command::Positivity(a) => {
            let rho = read_density(&a.rho)?;
            let grid = PhaseSpaceGrid::from_spec(&a.grid)?;
            let mut opts = ScanOptions {
                tol_s: a.tol,
                method: a.method.parse()?,
                ..ScanOptions::default()
            };
            if let Some(scan) = a.scan {
                opts.s_lo = scan[0];
                opts.s_hi = scan[1];
            }
            let report = max_positive_s(&rho, &grid, &opts)?;
            meta.method = Some(opts.method.name().to_string());
            write_wrapped(&a.output, meta, &report)
        }
        Command::Compile(a) => {
            let text = std::fs::read_to_string(&a.master).map_err(|e| CliError::file(&a.master, e.into()))?;
            let meq = parse_master_equation(&text)?;
            let ordering = if a.s == "symbolic" {
                Ordering::Symbolic
            } else {
                Ordering::Fixed(parse_exact(&a.s).ok_or_else(|| CliError::usage(format!("--s: bad value '{}'", a.s)))?)
            };
            let bindings = parse_bindings(&a.bind)?;
            if bindings.contains_key("s") {
                return Err(CliError::usage("bind s with --s"));
            }
            let form = compile_generator(&meq, &ordering)?.bind(&bindings);
            let spec = extract_fp(&form);
            #[derive(Serialize)]
            struct Compiled {
                #[serde(flatten)]
                spec: FpSpecJson,
                params: Vec<String>,
                normal_form: String,
                divergence_form: String,
            }
            let body = Compiled {
                spec: spec.to_json(),
                params: meq.params.clone(),
                normal_form: form.to_string(),
                divergence_form: form.divergence_form().to_string(),
            };
            write_wrapped(&a.output, meta, &body)
        }
        Command::Simulate(a) => {
            let j: FpSpecJson = io::read_json(&a.fp).map_err(|e| CliError::file(&a.fp, e))?;
            let spec = FpSpec::from_json(&j)?;
            let mut bindings = parse_bindings(&a.bind)?;
            if let Some(s) = &a.s {
                let v = parse_exact(s).ok_or_else(|| CliError::usage(format!("--s: bad value '{s}'")))?;
                if let Ordering::Fixed(f) = &spec.ordering {
                    if *f != v {
                        return Err(Error::InvalidArgument(format!("--s {s} contradicts the spec's s = {}", spec.ordering)).into());
                    }
                }
                bindings.insert("s".into(), v);
            }
            let params = realize_sde(&spec, &bindings)?;
            let scheme: Scheme = a.scheme.parse()?;
            if !(a.dt > 0.0) || !(a.t >= 0.0) {
                return Err(Error::InvalidArgument("need dt > 0 and t >= 0".into()).into());
            }
            let steps = (a.t / a.dt).round();
            if (steps * a.dt - a.t).abs() > 1e-9 * a.t.max(1.0) {
                return Err(Error::InvalidArgument(format!("t = {} is not a whole number of steps dt = {}", a.t, a.dt)).into());
            }
            let steps = steps as usize;
            let (kind, arg) = a.init.split_once(':').unwrap_or((a.init.as_str(), ""));
            let s = params.s;
            let init = match kind {
                "delta" => TrajectoryEnsemble::delta(parse_beta(arg)?, a.n, s, a.seed)?,
                "coherent" => TrajectoryEnsemble::coherent(parse_beta(arg)?, a.n, s, a.seed)?,
                "vacuum" => TrajectoryEnsemble::coherent(Complex64::new(0.0, 0.0), a.n, s, a.seed)?,
                "thermal" => {
                    let nbar = arg.parse::<f64>().map_err(|_| CliError::usage(format!("bad n̄ in '{}'", a.init)))?;
                    TrajectoryEnsemble::thermal(nbar, a.n, s, a.seed)?
                }
                other => return Err(CliError::usage(format!("unknown init '{other}'"))),
            };
            let out = simulate(&init, &params, a.dt, steps, scheme)?;
            io::write_ensemble_csv(create(&a.output)?, &out)?;
            meta.seed = Some(a.seed);
            meta.method = Some(scheme.name().to_string());
            let sidecar = EnsembleSidecar {
                seed: a.seed,
                epoch: out.epoch,
                scheme,
                dt: a.dt,
                steps,
                time: out.time,
                s,
                n: out.len(),
                params,
            };
            write_wrapped(&sidecar_path(&a.output), meta, &sidecar)?;
            if let Some(fpath) = a.field {
                let grid = PhaseSpaceGrid::from_spec(&a.grid)?;
                let field = estimate_field(&out, &grid, a.bandwidth)?;
                write_wrapped(&fpath, meta, &FieldJson::from(&field))?;
            }
            Ok(())
        }
        Command::Reconstruct(a) => {
            let side = sidecar_path(&a.ensemble);
            let sidecar: Option<EnsembleSidecar> = if side.exists() { Some(io::read_json(&side).map_err(|e| CliError::file(&side, e))?) } else { None };
            if let Some(c) = &sidecar {
                meta.seed = Some(c.seed);
            }
            let ens = io::read_ensemble(&a.ensemble, sidecar.as_ref(), a.s).map_err(|e| CliError::file(&a.ensemble, e))?;
            let rec = reconstruct(&ens, a.s, FockDim::new(a.dim))?;
            write_wrapped(&a.output, meta, &DensityJson::from(&rec.rho))?;
            if let Some(r) = a.report {
                #[derive(Serialize)]
                struct Report<'a> {
                    #[serde(flatten)]
                    diagnostics: &'a wignerkit::inversion::InversionDiagnostics,
                    n_samples: usize,
                    std_err: Vec<Vec<f64>>,
                }
                let size = rec.rho.dim().size();
                let body = Report {
                    diagnostics: &rec.diagnostics,
                    n_samples: rec.n_samples,
                    std_err: rec.std_err.chunks(size).map(|c| c.to_vec()).collect(),
                };
                write_wrapped(&r, meta, &body)?;
            }
            Ok(())
        }
        Command::Marginal(a) => {
            let field = read_field(&a.field)?;
            let interp: Interpolation = a.interp.parse()?;
            let m = marginal_with(&field, a.phi, interp)?;
            io::write_marginal_csv(create(&a.output)?, &m)?;
            Ok(())
        }
    }
}

fn configure_threads(flag: Option<usize>) -> CliResult<()> {
    let env = std::env::var("WIGNERKIT_THREADS").ok();
    let n = match (flag, env) {
        (Some(n), _) => Some(n),
        (None, Some(v)) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| CliError::usage(format!("WIGNERKIT_THREADS='{v}' is not a count")))?,
        ),
        (None, None) => None,
    };
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return CliError::usage(e.to_string().trim().to_string()).report();
        }
    };
    if let Err(e) = configure_threads(cli.threads) {
        return e.report();
    }
    let mut meta = Metadata::new(&argv, Tolerances::default());
    match run(cli, &mut meta) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}
