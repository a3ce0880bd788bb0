use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use anisobox::io::{load_image, read_covmap, save_image, ImageFormat};
use anisobox::kernel::raster_moments;
use anisobox::pipeline::{
    filter_accurate, filter_basic, filter_dual, validate_covmap, BasisPolicy, CovarianceMap,
    InfeasiblePolicy, PipelinePolicy,
};
use anisobox::shape::{covariance_from_shape, elongation_bound, ShapeParams};
use anisobox::tables;
use anisobox::{Basis, Covariance, EdgePolicy, Error, Raster};

#[derive(Parser)]
#[command(
    name = "anisobox",
    about = "Constant-time space-variant elliptical filtering with four-directional box splines",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter an image with a per-pixel or constant covariance map.
    Filter(FilterArgs),
    /// Filter a synthetic impulse and report the response's covariance.
    Impulse(ImpulseArgs),
    /// Gaussian-approximation errors of the single- and two-stage kernels
    /// for seven representative targets (CSV).
    ErrorTable,
    /// Two-stage improvement as the sigma^2 fraction sweeps 10-80% (CSV).
    SigmaSweep,
    /// Elongation bounds per orientation for both bases (CSV).
    BoundTable,
    /// Max pointwise error of the N-box Gaussian construction (CSV).
    DemoClt {
        /// Box count; default reports N = 4 and N = 8.
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Basic,
    Accurate,
    Dual,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisArg {
    Theta,
    ThetaPrime,
}

impl From<BasisArg> for Basis {
    fn from(b: BasisArg) -> Basis {
        match b {
            BasisArg::Theta => Basis::Theta,
            BasisArg::ThetaPrime => Basis::ThetaPrime,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EdgeArg {
    Zero,
    Replicate,
}

impl From<EdgeArg> for EdgePolicy {
    fn from(e: EdgeArg) -> EdgePolicy {
        match e {
            EdgeArg::Zero => EdgePolicy::Zero,
            EdgeArg::Replicate => EdgePolicy::Replicate,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum InfeasibleArg {
    Reject,
    Clamp,
}

impl From<InfeasibleArg> for InfeasiblePolicy {
    fn from(p: InfeasibleArg) -> InfeasiblePolicy {
        match p {
            InfeasibleArg::Reject => InfeasiblePolicy::Reject,
            InfeasibleArg::Clamp => InfeasiblePolicy::Clamp,
        }
    }
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Per-pixel covariance map (binary SVCM file).
    #[arg(long, conflicts_with = "shape")]
    covmap: Option<PathBuf>,
    /// Constant covariance as size,elongation,orientation-degrees.
    #[arg(long, value_name = "S,RHO,THETA_DEG")]
    shape: Option<String>,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long, value_enum, default_value = "theta")]
    basis: BasisArg,
    /// Fraction of the split bound used for sigma^2 by the accurate method.
    #[arg(long, default_value_t = 0.5)]
    sigma_fraction: f64,
    #[arg(long, value_enum, default_value = "zero")]
    edge: EdgeArg,
    #[arg(long, value_enum, default_value = "reject")]
    infeasible: InfeasibleArg,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ImpulseArgs {
    /// Image size as WIDTHxHEIGHT.
    #[arg(long, value_name = "WxH")]
    size: String,
    #[arg(long, value_name = "S,RHO,THETA_DEG")]
    shape: String,
    #[arg(long, value_enum, default_value = "theta")]
    basis: BasisArg,
    #[arg(long, value_enum, default_value = "basic")]
    method: MethodArg,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_shape(text: &str) -> Result<ShapeParams, Error> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidArgument(format!(
            "--shape expects s,rho,theta_deg, got `{text}`"
        )));
    }
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::InvalidArgument(format!("invalid number `{s}` in --shape")))
    };
    ShapeParams::new(num(parts[0])?, num(parts[1])?, num(parts[2])?.to_radians())
}

fn parse_size(text: &str) -> Result<(usize, usize), Error> {
    let bad = || Error::InvalidArgument(format!("--size expects WIDTHxHEIGHT, got `{text}`"));
    let (w, h) = text.split_once('x').ok_or_else(bad)?;
    Ok((
        w.trim().parse().map_err(|_| bad())?,
        h.trim().parse().map_err(|_| bad())?,
    ))
}

fn configure_threads(threads: Option<usize>) -> Result<(), Error> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("--threads: {e}")))?;
    }
    Ok(())
}

/// Exit 1 for I/O and argument problems, 2 for infeasible covariances.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_)
        | Error::MalformedFile { .. }
        | Error::InvalidArgument(_)
        | Error::ShapeMismatch(..) => 1,
        Error::NotPositiveDefinite { .. }
        | Error::DegenerateScales(..)
        | Error::InfeasibleCovariance { .. }
        | Error::InfeasibleSplit { .. }
        | Error::InfeasiblePixel { .. }
        | Error::InsufficientSupport(_) => 2,
    }
}

fn run_filter(args: &FilterArgs) -> Result<(), Error> {
    configure_threads(args.threads)?;
    let t0 = Instant::now();
    let (image, input_format) = load_image(&args.input)?;
    let covmap = match (&args.covmap, &args.shape) {
        (Some(path), None) => read_covmap(path)?,
        (None, Some(shape)) => {
            let c = covariance_from_shape(&parse_shape(shape)?);
            CovarianceMap::constant(image.width(), image.height(), c)
        }
        _ => {
            return Err(Error::InvalidArgument(
                "exactly one of --covmap and --shape is required".into(),
            ))
        }
    };
    eprintln!("load: {:.1} ms", t0.elapsed().as_secs_f64() * 1e3);

    let policy = PipelinePolicy {
        sigma_fraction: args.sigma_fraction,
        basis: match args.method {
            MethodArg::Dual => BasisPolicy::Dual,
            _ => BasisPolicy::Single(args.basis.into()),
        },
        edge: args.edge.into(),
        infeasible: args.infeasible.into(),
    };

    let t1 = Instant::now();
    let report = validate_covmap(&covmap, &policy, matches!(args.method, MethodArg::Accurate));
    eprintln!(
        "feasibility: {} ({:.1} ms)",
        report.summary(),
        t1.elapsed().as_secs_f64() * 1e3
    );

    let t2 = Instant::now();
    let output = match args.method {
        MethodArg::Basic => filter_basic(&image, &covmap, args.basis.into(), &policy)?,
        MethodArg::Accurate => filter_accurate(&image, &covmap, &policy)?,
        MethodArg::Dual => filter_dual(&image, &covmap, &policy)?,
    };
    eprintln!("filter: {:.1} ms", t2.elapsed().as_secs_f64() * 1e3);

    let format = match ImageFormat::from_extension(&args.output) {
        Some(ImageFormat::Pfm) => ImageFormat::Pfm,
        _ => input_format,
    };
    save_image(&args.output, &output, format)?;
    Ok(())
}

fn run_impulse(args: &ImpulseArgs) -> Result<(), Error> {
    configure_threads(args.threads)?;
    let (width, height) = parse_size(&args.size)?;
    let shape = parse_shape(&args.shape)?;
    let target = covariance_from_shape(&shape);
    let image = Raster::impulse(width, height, width / 2, height / 2);
    let covmap = CovarianceMap::constant(width, height, target);
    let policy = PipelinePolicy {
        basis: BasisPolicy::Single(args.basis.into()),
        ..PipelinePolicy::default()
    };
    let result = match args.method {
        MethodArg::Basic => filter_basic(&image, &covmap, args.basis.into(), &policy),
        MethodArg::Accurate => filter_accurate(&image, &covmap, &policy),
        MethodArg::Dual => filter_dual(&image, &covmap, &policy),
    };
    let response = match result {
        Ok(r) => r,
        Err(err) => {
            let bound = elongation_bound(shape.theta, args.basis.into());
            eprintln!("elongation bound at this orientation: {bound:.3}");
            return Err(err);
        }
    };
    save_image(&args.output, &response, ImageFormat::Pfm)?;

    let m = raster_moments(&response, (width / 2) as f64, (height / 2) as f64, 1.0);
    let measured = Covariance::new(m.c11, m.c12, m.c22)?;
    let deviation = measured.frobenius_distance(&target) / target.frobenius_norm();
    println!(
        "response covariance: c11={:.4} c12={:.4} c22={:.4}",
        m.c11, m.c12, m.c22
    );
    println!(
        "target covariance:   c11={:.4} c12={:.4} c22={:.4}",
        target.c11, target.c12, target.c22
    );
    println!("relative Frobenius deviation: {:.3}%", deviation * 100.0);
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Filter(args) => run_filter(args),
        Command::Impulse(args) => run_impulse(args),
        Command::ErrorTable => {
            let t = Instant::now();
            let rows = tables::error_table();
            print!("{}", tables::error_table_csv(&rows));
            eprintln!("error-table: {:.1} s", t.elapsed().as_secs_f64());
            Ok(())
        }
        Command::SigmaSweep => {
            let t = Instant::now();
            let rows = tables::sigma_sweep()?;
            print!("{}", tables::sigma_sweep_csv(&rows));
            eprintln!("sigma-sweep: {:.1} s", t.elapsed().as_secs_f64());
            Ok(())
        }
        Command::BoundTable => {
            let rows = tables::bound_table();
            print!("{}", tables::bound_table_csv(&rows));
            Ok(())
        }
        Command::DemoClt { n } => {
            let ns: Vec<usize> = match n {
                Some(n) => vec![*n],
                None => vec![4, 8],
            };
            let rows = tables::clt_rows(&ns)?;
            print!("{}", tables::clt_csv(&rows));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
