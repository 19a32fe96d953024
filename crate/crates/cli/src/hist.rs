use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use mmo_core::batch::{run_batch, BatchConfig, System};
use mmo_core::events::{count_n, detect_events_in, repeated_outbreak_count, Channel, EventKind, NSamples, Thresholds};
use mmo_core::integrator::Coords;
use mmo_core::io::{read_trajectory_csv, write_histogram_csv, write_n_samples_csv, NRow};
use mmo_core::normal_form::stoch_nf_coeffs;
use mmo_core::stats::{default_n_min, estimate_lambda0, estimate_lambda0_pgf, summarize, Histogram, PgfScan};
use serde_json::json;

use crate::args::{ChannelArg, DetectArgs, ParamArgs, RunArgs};

#[derive(Args, Debug)]
pub struct HistArgs {
    /// Trajectory CSVs to analyze; without them paths are simulated.
    #[arg(long, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[command(flatten)]
    pub params: ParamArgs,
    /// With --paths etc.; the stride also thins what the detector sees.
    #[command(flatten)]
    pub run: RunArgs,
    /// Simulate the stochastic normal form instead of the original model.
    #[arg(long)]
    pub normal_form: bool,
    /// Detection channel (default: x for prey data, z for normal-form data).
    #[arg(long, value_enum)]
    pub channel: Option<ChannelArg>,
    #[command(flatten)]
    pub detect: DetectArgs,
    /// Tail cutoff for the λ₀ fit (default: the sample median).
    #[arg(long)]
    pub n_min: Option<u64>,
    /// Directory for n_samples.csv, histogram.csv and summary.json.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Default)]
struct Collected {
    rows: Vec<NRow>,
    lao: usize,
    sao: usize,
    unresolved: usize,
}

impl Collected {
    fn add(&mut self, seed: u64, ns: &NSamples) {
        self.rows
            .extend(ns.values.iter().enumerate().map(|(gap, &n)| NRow { seed, gap, n }));
    }
}

fn detection(args: &HistArgs, default: (Channel, Thresholds)) -> Result<(Channel, Thresholds)> {
    let (channel, base) = default;
    let channel = args.channel.map_or(channel, Channel::from);
    let base = match (args.channel, channel) {
        (Some(_), Channel::X) => Thresholds::prey(),
        (Some(_), _) => Thresholds::normal_form(),
        (None, _) => base,
    };
    Ok((channel, args.detect.apply(base)?))
}

fn from_files(args: &HistArgs) -> Result<Collected> {
    let mut c = Collected::default();
    for (fi, path) in args.input.iter().enumerate() {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        for (ri, rec) in read_trajectory_csv(f)?.into_iter().enumerate() {
            let default = match rec.coords {
                Coords::Xy => (Channel::X, Thresholds::prey()),
                Coords::Lz => (Channel::Z, Thresholds::normal_form()),
            };
            let (channel, th) = detection(args, default)?;
            let ev = detect_events_in(&rec.times, rec.states.iter().map(|&u| channel.value(u)), &th);
            c.lao += ev.count(EventKind::Lao);
            c.sao += ev.count(EventKind::Sao);
            c.unresolved += ev.count(EventKind::Unresolved);
            let seed = rec.seed.unwrap_or((fi + ri) as u64);
            c.add(seed, &count_n(&ev));
        }
    }
    Ok(c)
}

fn simulated(args: &HistArgs) -> Result<Collected> {
    let p = args.params.resolve()?;
    let system = if args.normal_form {
        System::NormalForm(stoch_nf_coeffs(&p)?)
    } else {
        System::Original(p)
    };
    let mut cfg = BatchConfig::new(system, args.run.sim(system.default_initial([0.4, 0.4])), args.run.paths);
    (cfg.channel, cfg.thresholds) = detection(args, system.default_detection())?;
    let mut c = Collected::default();
    for o in run_batch(&cfg)? {
        if let Some(e) = &o.error {
            log::warn!("path {} (seed {}) failed: {e}", o.index, o.seed);
            continue;
        }
        c.lao += o.lao;
        c.sao += o.sao;
        c.unresolved += o.unresolved;
        c.add(o.seed, &o.n);
    }
    Ok(c)
}

pub fn run(args: &HistArgs) -> Result<()> {
    let c = if args.input.is_empty() { simulated(args)? } else { from_files(args)? };
    let ns = NSamples::from_values(c.rows.iter().map(|r| r.n).collect());
    println!(
        "{} LAO, {} SAO, {} unresolved; {} inter-LAO gaps",
        c.lao,
        c.sao,
        c.unresolved,
        ns.len()
    );
    let summary = summarize(&ns).map_err(|e| log::warn!("no summary: {e}")).ok();
    let histogram = Histogram::new(&ns.values);
    let seed = args.run.seed;
    let n_min = args.n_min.unwrap_or_else(|| default_n_min(&ns));
    let tail = estimate_lambda0(&ns, n_min, seed)
        .map_err(|e| log::warn!("no tail estimate: {e}"))
        .ok();
    let pole = estimate_lambda0_pgf(&ns, &PgfScan::default(), seed);
    if pole.is_none() {
        log::warn!("pgf scan found no divergence point");
    }
    let lambda0 = tail.map(|t| t.fit.lambda0).or(pole.map(|p| p.lambda0));
    let sigma_count = repeated_outbreak_count(&ns);

    fs::create_dir_all(&args.out_dir)?;
    let create = |name: &str| -> Result<BufWriter<File>> {
        let path = args.out_dir.join(name);
        Ok(BufWriter::new(
            File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        ))
    };
    write_n_samples_csv(create("n_samples.csv")?, &c.rows)?;
    write_histogram_csv(create("histogram.csv")?, &histogram, lambda0)?;
    let doc = json!({
        "mean": summary.as_ref().map(|s| s.mean),
        "std": summary.as_ref().map(|s| s.std),
        "lambda0_tail": tail.map(|t| t.fit.lambda0),
        "lambda0_tail_se": tail.map(|t| t.fit.std_error),
        "lambda0_hazard": tail.map(|t| t.lambda0_hazard),
        "n_min": n_min,
        "lambda0_pgf": pole.map(|p| p.lambda0),
        "lambda0_pgf_se": pole.map(|p| p.std_error),
        "sigma_count": sigma_count,
        "samples": ns.len(),
        "lao": c.lao,
        "sao": c.sao,
        "unresolved": c.unresolved,
    });
    serde_json::to_writer_pretty(create("summary.json")?, &doc)?;

    print_histogram(&histogram);
    let show = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    println!(
        "mean N = {}, std = {}, Sigma = {sigma_count}",
        show(summary.as_ref().map(|s| s.mean)),
        show(summary.as_ref().map(|s| s.std))
    );
    println!(
        "lambda0: tail {} (n_min {n_min}), pgf {}",
        show(tail.map(|t| t.fit.lambda0)),
        show(pole.map(|p| p.lambda0))
    );
    Ok(())
}

fn print_histogram(h: &Histogram) {
    const WIDTH: u64 = 50;
    let max = h.counts.iter().copied().max().unwrap_or(0).max(1);
    println!("{:>5} {:>7}", "N", "count");
    for (n, &c) in h.counts.iter().enumerate() {
        let bar = "#".repeat(((c * WIDTH).div_ceil(max)) as usize);
        println!("{n:>5} {c:>7} {bar}");
    }
}
