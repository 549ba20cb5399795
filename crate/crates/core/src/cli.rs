//! Command line front end.

use crate::divergence::FiberDivergence;
use crate::error::{Error, Result};
use crate::geodistance::{gd, pairwise_gram, GdOptions, HausdorffMode, MetricSpec};
use crate::geometry::{quasi_geodesic_curve, quasi_geodesic_length, transport_curve, uniform_times, SubspaceGeodesic};
use crate::grassmann::GrassmannMetric;
use crate::io::{format_sig, json_number, parse_blocks, parse_matrix, write_matrix, BlockKind};
use crate::linalg::{PsdMatrix, Subspace, Tolerances};
use crate::pointset::{pointset_minus, pointset_plus};
use crate::scalar::Scalar;
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(
    name = "psd-bundle",
    version,
    about = "Distances between PSD matrices of different sizes and ranks"
)]
pub struct Cli {
    /// Relative eigenvalue threshold for numerical rank.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Relative tolerance for the PSD check.
    #[arg(long = "tol-psd", global = true, default_value_t = 1e-8)]
    pub tol_psd: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = FieldArg::Real)]
    pub field: FieldArg,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FieldArg {
    Real,
    Complex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Minus,
    Plus,
}

#[derive(Args, Debug, Clone)]
pub struct MetricArgs {
    #[arg(long, default_value = "geodesic")]
    pub grassmann: String,
    /// Fiber divergence, e.g. `geo`, `kl`, `renyi:0.3`, `ab:0.5,0.5+sym`.
    #[arg(long, default_value = "geo")]
    pub fiber: String,
    /// `algorithm1` or `faithful`.
    #[arg(long, default_value = "algorithm1")]
    pub hausdorff: String,
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1 << 16)]
    pub grid: usize,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Distance between two matrices, printed as JSON.
    Dist {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
    },
    /// Distance matrix of a set of inputs, printed as CSV.
    Pairwise {
        /// Directory or comma-separated list of matrix files.
        #[arg(long)]
        inputs: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        metric: MetricArgs,
    },
    /// Optimal projection `D₋` or lift `C₊` with the point-set value.
    ProjectLift {
        #[arg(long)]
        c: PathBuf,
        #[arg(long)]
        d: PathBuf,
        #[arg(long, value_enum)]
        which: Which,
        #[arg(long, default_value = "geo")]
        fiber: String,
    },
    /// Parallel transport of `A` toward a target subspace, sampled at `steps + 1` points.
    Transport {
        #[arg(long)]
        a: PathBuf,
        /// Frame file spanning the target subspace.
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long = "force-completion")]
        force_completion: bool,
    },
    /// Quasi-geodesic from `A` to `B`, sampled at `steps + 1` points.
    QuasiGeodesic {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// Weight of the fiber term in the reported length.
        #[arg(long, default_value_t = 1.0)]
        k: f64,
    },
}

fn in_file<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::File {
        path: path.display().to_string(),
        source: Box::new(e),
    })
}

fn read_text(path: &Path) -> Result<String> {
    in_file(path, std::fs::read_to_string(path).map_err(Error::from))
}

fn read_psd<T: Scalar>(path: &Path, tol: &Tolerances) -> Result<PsdMatrix<T>> {
    let text = read_text(path)?;
    in_file(
        path,
        parse_matrix(&text)
            .and_then(|m| m.into_scalar::<T>())
            .and_then(|m| PsdMatrix::with_tolerances(m, tol)),
    )
}

fn read_pd<T: Scalar>(path: &Path, tol: &Tolerances) -> Result<DMatrix<T>> {
    let m = read_psd::<T>(path, tol)?;
    if m.rank(tol.rank) < m.dim() {
        return in_file(path, Err(Error::NotPositiveDefinite));
    }
    Ok(m.into_entries())
}

fn read_frame<T: Scalar>(path: &Path) -> Result<DMatrix<T>> {
    let text = read_text(path)?;
    in_file(
        path,
        (|| {
            let mut blocks = parse_blocks(&text)?;
            if blocks.len() != 1 {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("expected one frame, found {} blocks", blocks.len()),
                });
            }
            let b = blocks.remove(0);
            if b.kind != BlockKind::Frame {
                return Err(Error::Parse {
                    line: 1,
                    msg: "expected a 'frame' block".into(),
                });
            }
            b.matrix.into_scalar::<T>()
        })(),
    )
}

fn metric_spec(m: &MetricArgs) -> Result<MetricSpec> {
    let grassmann: GrassmannMetric = m.grassmann.parse()?;
    let fiber: FiberDivergence = m.fiber.parse()?;
    let mode: HausdorffMode = m.hausdorff.parse()?;
    Ok(MetricSpec::new(grassmann, fiber).with_mode(mode))
}

fn list_inputs(inputs: &str) -> Result<Vec<PathBuf>> {
    let p = Path::new(inputs);
    let mut files: Vec<PathBuf> = if p.is_dir() {
        let mut v = Vec::new();
        for entry in std::fs::read_dir(p)? {
            let path = entry?.path();
            let hidden = path
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with('.'));
            if path.is_file() && !hidden {
                v.push(path);
            }
        }
        v.sort();
        v
    } else {
        inputs
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(PathBuf::from)
            .collect()
    };
    files.dedup();
    if files.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: format!("no input files in '{inputs}'"),
        });
    }
    Ok(files)
}

fn display_name(p: &Path) -> String {
    p.file_stem()
        .or_else(|| p.file_name())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

fn run_typed<T: Scalar>(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let tol = Tolerances {
        rank: cli.tol,
        psd: cli.tol_psd,
        ..Tolerances::default()
    };
    let opts = |m: &MetricArgs| GdOptions {
        tol,
        restarts: m.restarts,
        grid: m.grid,
        seed: cli.seed,
    };
    match &cli.command {
        Command::Dist { a, b, metric } => {
            let spec = metric_spec(metric)?;
            let a = read_psd::<T>(a, &tol)?;
            let b = read_psd::<T>(b, &tol)?;
            let res = gd(&a, &b, &spec, &opts(metric))?;
            writeln!(out, "{}", res.to_json())?;
        }
        Command::Pairwise {
            inputs,
            out: dest,
            metric,
        } => {
            let spec = metric_spec(metric)?;
            let files = list_inputs(inputs)?;
            let list = files
                .iter()
                .map(|f| read_psd::<T>(f, &tol))
                .collect::<Result<Vec<_>>>()?;
            let g = pairwise_gram(&list, &spec, &opts(metric)).map_err(|e| match e {
                Error::Pair { i, j, source } => Error::File {
                    path: format!("{} vs {}", files[i].display(), files[j].display()),
                    source,
                },
                e => e,
            })?;
            let mut csv = files.iter().map(|f| display_name(f)).collect::<Vec<_>>().join(",");
            csv.push('\n');
            for i in 0..g.nrows() {
                let row: Vec<String> = (0..g.ncols()).map(|j| format_sig(g[(i, j)], 12)).collect();
                csv.push_str(&row.join(","));
                csv.push('\n');
            }
            match dest {
                Some(path) => std::fs::write(path, csv)?,
                None => out.write_all(csv.as_bytes())?,
            }
        }
        Command::ProjectLift { c, d, which, fiber } => {
            let spec: FiberDivergence = fiber.parse()?;
            let cm = read_pd::<T>(c, &tol)?;
            let dm = read_pd::<T>(d, &tol)?;
            if cm.nrows() > dm.nrows() {
                return Err(Error::Dimension(format!(
                    "C is {0}x{0} but D is {1}x{1}; need size(C) <= size(D)",
                    cm.nrows(),
                    dm.nrows()
                )));
            }
            let v = match which {
                Which::Minus => pointset_minus(&spec, &cm, &dm)?,
                Which::Plus => pointset_plus(&spec, &cm, &dm)?,
            };
            out.write_all(write_matrix(&v.witness).as_bytes())?;
            let spectrum = v
                .clamped_spectrum
                .iter()
                .map(|&x| json_number(x))
                .collect::<Vec<_>>()
                .join(", ");
            writeln!(
                out,
                "{{\"value\": {}, \"side\": \"{}\", \"clamped_spectrum\": [{}]}}",
                json_number(v.value),
                match which {
                    Which::Minus => "minus",
                    Which::Plus => "plus",
                },
                spectrum
            )?;
        }
        Command::Transport {
            a,
            target,
            steps,
            force_completion,
        } => {
            let am = read_psd::<T>(a, &tol)?;
            let frame = read_frame::<T>(target)?;
            let target_space = in_file(target, Subspace::from_frame(frame))?;
            let geo = SubspaceGeodesic::new(am.range(tol.rank), target_space, *force_completion)?;
            let curve = transport_curve(&am, &geo, &tol)?;
            for t in uniform_times(steps.max(&1) + 1) {
                out.write_all(write_matrix(&curve.entries_at(t)).as_bytes())?;
            }
        }
        Command::QuasiGeodesic { a, b, steps, k } => {
            let am = read_psd::<T>(a, &tol)?;
            let bm = read_psd::<T>(b, &tol)?;
            let curve = quasi_geodesic_curve(&am, &bm, &tol)?;
            let length = quasi_geodesic_length(&am, &bm, *k, &tol)?;
            for t in uniform_times(steps.max(&1) + 1) {
                out.write_all(write_matrix(&curve.entries_at(t)).as_bytes())?;
            }
            writeln!(out, "# length_k {} k {}", json_number(length), json_number(*k))?;
        }
    }
    Ok(())
}

/// Runs a parsed command line, writing machine output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match cli.field {
        FieldArg::Real => run_typed::<f64>(cli, out),
        FieldArg::Complex => run_typed::<Complex64>(cli, out),
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(&cli, &mut lock).and_then(|_| lock.flush().map_err(Error::from)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
