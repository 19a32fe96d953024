use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use mmo_core::equilibrium::solve_equilibrium;
use mmo_core::integrator::{rk4_path, sde_path, Field, PredatorPrey, Scheme};
use mmo_core::io::{write_trajectories_csv, write_trajectory_csv};
use mmo_core::rng::path_seed;
use mmo_core::Trajectory;

use crate::args::{ParamArgs, RunArgs};

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeArg {
    Milstein,
    EulerMaruyama,
}

/// Where trajectories go.
#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// One CSV with a leading seed column (stdout when neither option is set).
    #[arg(long, conflicts_with = "out_dir")]
    pub out: Option<PathBuf>,
    /// One CSV per path, named `<prefix>_seed<seed>.csv`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

impl OutputArgs {
    pub fn write(&self, trajs: &[Trajectory], prefix: &str) -> Result<()> {
        if let Some(dir) = &self.out_dir {
            fs::create_dir_all(dir)?;
            for t in trajs {
                let path = dir.join(format!("{prefix}_seed{}.csv", t.seed));
                let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                write_trajectory_csv(BufWriter::new(f), t, false)?;
            }
            log::info!("wrote {} files to {}", trajs.len(), dir.display());
        } else if let Some(path) = &self.out {
            let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_trajectories_csv(BufWriter::new(f), trajs)?;
            log::info!("wrote {}", path.display());
        } else {
            write_trajectories_csv(std::io::stdout().lock(), trajs)?;
        }
        Ok(())
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_enum, default_value_t = SchemeArg::Milstein)]
    pub scheme: SchemeArg,
    /// Integrate the noise-free field with RK4 (one path).
    #[arg(long)]
    pub deterministic: bool,
}

pub fn run(args: &SimulateArgs) -> Result<()> {
    let p = args.params.resolve()?;
    let start = solve_equilibrium(&p).map(|e| [e.x, e.y]).unwrap_or([0.4, 0.4]);
    let sim = args.run.sim(start);
    let trajs = if args.deterministic {
        vec![rk4_path(&Field::Original(p), &sim)?]
    } else {
        let scheme = match args.scheme {
            SchemeArg::Milstein => Scheme::Milstein,
            SchemeArg::EulerMaruyama => Scheme::EulerMaruyama,
        };
        (0..args.run.paths)
            .map(|i| sde_path(&PredatorPrey(p), p, &sim.with_seed(path_seed(sim.seed, i as u64)), scheme))
            .collect::<mmo_core::Result<Vec<_>>>()?
    };
    for t in &trajs {
        if t.clamp_events > 0 {
            log::warn!("seed {}: {} clamp events in {} steps", t.seed, t.clamp_events, t.steps);
        }
    }
    args.output.write(&trajs, "traj")
}
