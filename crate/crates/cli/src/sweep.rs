use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use mmo_core::io::{write_sweep_csv, write_sweep_matrix, MatrixField};
use mmo_core::sweep::{run_sweep, Axis, SweepConfig, SweepParam};

use crate::args::{ChannelArg, DetectArgs, ParamArgs};

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldArg {
    Sigma,
    Phi,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// First axis as PARAM:MIN:MAX:STEPS, PARAM one of h, mu, eps, sigma,
    /// sigma1, sigma2.
    #[arg(long, value_parser = parse_axis)]
    pub axis1: Axis,
    #[arg(long, value_parser = parse_axis)]
    pub axis2: Axis,
    /// Base parameters; swept values replace theirs.
    #[command(flatten)]
    pub params: ParamArgs,
    /// Paths per cell.
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,
    #[arg(long, default_value_t = 200.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Base seed; path k of cell c uses seed + c * seeds + k.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Detector stride.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long, value_enum, default_value_t = ChannelArg::X)]
    pub channel: ChannelArg,
    #[command(flatten)]
    pub detect: DetectArgs,
    #[arg(long, default_value = "sweep.csv")]
    pub out: PathBuf,
    /// Gnuplot matrix file for contouring.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FieldArg::Sigma)]
    pub matrix_field: FieldArg,
}

pub fn parse_axis(s: &str) -> Result<Axis> {
    let parts: Vec<&str> = s.split(':').collect();
    let [name, min, max, steps] = parts[..] else {
        bail!("expected PARAM:MIN:MAX:STEPS, got {s:?}");
    };
    let param: SweepParam = name.parse()?;
    let num = |x: &str| x.parse::<f64>().with_context(|| format!("bad number {x:?}"));
    let steps = steps.parse::<usize>().with_context(|| format!("bad step count {steps:?}"))?;
    Ok(Axis::new(param, num(min)?, num(max)?, steps))
}

pub fn run(args: &SweepArgs) -> Result<()> {
    let base = args.params.resolve()?;
    let mut cfg = SweepConfig::new(args.axis1, args.axis2, base);
    cfg.seeds = args.seeds;
    cfg.sim = cfg.sim.with_dt(args.dt).with_seed(args.seed).with_stride(args.stride);
    cfg.sim.t_end = args.t_end;
    cfg.channel = args.channel.into();
    cfg.thresholds = args.detect.apply(match args.channel {
        ChannelArg::X => cfg.thresholds,
        _ => mmo_core::events::Thresholds::normal_form(),
    })?;
    let res = run_sweep(&cfg)?;
    for c in res.cells.iter().filter(|c| c.error.is_some()) {
        log::warn!("cell ({}, {}) = ({}, {}): {}", c.i, c.j, c.axis1, c.axis2, c.error.as_deref().unwrap_or(""));
    }
    let f = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_sweep_csv(BufWriter::new(f), &res)?;
    println!("wrote {} cells to {}", res.cells.len(), args.out.display());
    if let Some(path) = &args.matrix {
        let field = match args.matrix_field {
            FieldArg::Sigma => MatrixField::SigmaMean,
            FieldArg::Phi => MatrixField::PhiNegKappa,
        };
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_sweep_matrix(BufWriter::new(f), &res, field)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
