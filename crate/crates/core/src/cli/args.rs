use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "infspec", version, about = "Robin infinity-Laplacian spectra on polygons")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Geometric extents of a domain.
    Geom {
        #[command(subcommand)]
        op: GeomOp,
    },
    /// Infinity-level spectral quantities.
    Infty {
        #[command(subcommand)]
        op: InftyOp,
    },
    /// Finite-p eigenvalues on a triangulation.
    Plap {
        #[command(subcommand)]
        op: PlapOp,
    },
    /// Built-in domain files.
    Domain {
        #[command(subcommand)]
        op: DomainOp,
    },
}

#[derive(Debug, Subcommand)]
pub enum GeomOp {
    Inradius(DomainArgs),
    /// Euclidean and geodesic diameters.
    Diameter(DomainArgs),
    /// Distance from a point to the boundary, or to one part of it.
    Distance {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, value_parser = parse_point)]
        point: [f64; 2],
        #[arg(long, value_enum, default_value = "full")]
        target: TargetArg,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Full,
    Gamma1,
    Gamma2,
}

#[derive(Debug, Subcommand)]
pub enum InftyOp {
    Lambda1(BetaArgs),
    Lambda2(BetaArgs),
    S(BetaArgs),
    R2(DomainArgs),
    /// Dirichlet on gamma1, Robin on gamma2, from the domain file's partition.
    Mixed(BetaArgs),
    Regime(BetaArgs),
    /// Sup of the path functional along the six-segment path.
    Path {
        #[command(flatten)]
        beta: BetaArgs,
        #[arg(long, default_value_t = 16)]
        steps: usize,
        /// Probe grid spacing relative to the diameter.
        #[arg(long, default_value_t = 1.0 / 96.0)]
        resolution: f64,
    },
    /// Sampled viscosity-operator check of the first eigenfunction profile.
    Viscosity {
        #[command(flatten)]
        beta: BetaArgs,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum PlapOp {
    First(PlapArgs),
    Second(PlapArgs),
    Study(PlapArgs),
    /// Triangulate and write the mesh dump.
    Mesh {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, default_value_t = 0.05)]
        h: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum DomainOp {
    Make {
        #[arg(value_enum)]
        name: BuiltinName,
        #[arg(long, default_value_t = 2.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, default_value_t = 6.0)]
        d: f64,
        #[arg(long, default_value_t = 64)]
        arc_n: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BuiltinName {
    UnitSquare,
    Rectangle,
    Stadium,
    Lshape,
}

#[derive(Debug, Clone, Args)]
pub struct DomainArgs {
    #[arg(long)]
    pub domain: PathBuf,
    /// CSV output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for randomized sampling.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct BetaArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    #[arg(long, required_unless_present = "beta_sweep", conflicts_with = "beta_sweep")]
    pub beta: Option<f64>,
    /// `B0:B1:N`, N >= 2 evenly spaced values.
    #[arg(long)]
    pub beta_sweep: Option<Sweep>,
}

#[derive(Debug, Clone, Args)]
pub struct PlapArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    #[arg(long)]
    pub beta: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Ascending exponents, for `study`.
    #[arg(long, value_delimiter = ',')]
    pub p_list: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub h: f64,
    /// Overrides the per-p solver tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 4000)]
    pub max_iters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub start: f64,
    pub end: f64,
    pub n: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        let step = (self.end - self.start) / (self.n - 1) as f64;
        (0..self.n).map(|k| if k + 1 == self.n { self.end } else { self.start + step * k as f64 }).collect()
    }
}

impl FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts[..] else {
            return Err(format!("expected B0:B1:N, got {s:?}"));
        };
        let start: f64 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
        let end: f64 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
        let n: usize = n.trim().parse().map_err(|e| format!("{n:?}: {e}"))?;
        if n < 2 {
            return Err(format!("sweep needs at least 2 points, got {n}"));
        }
        if !(start > 0.0 && end > 0.0 && start.is_finite() && end.is_finite()) {
            return Err(format!("sweep bounds must be positive, got {start}:{end}"));
        }
        Ok(Sweep { start, end, n })
    }
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [x, y] = parts[..] else {
        return Err(format!("expected X,Y, got {s:?}"));
    };
    let x: f64 = x.trim().parse().map_err(|e| format!("{x:?}: {e}"))?;
    let y: f64 = y.trim().parse().map_err(|e| format!("{y:?}: {e}"))?;
    Ok([x, y])
}
