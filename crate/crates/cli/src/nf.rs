use anyhow::Result;
use clap::Args;
use mmo_core::error::Error;
use mmo_core::integrator::stochastic_nf_path;
use mmo_core::normal_form::{repeated_spike_probability, spike_estimate, stoch_nf_coeffs, StochNFCoeffs};
use mmo_core::rng::path_seed;
use serde_json::{json, Value};

use crate::args::{ParamArgs, RunArgs};
use crate::simulate::OutputArgs;

#[derive(Args, Debug)]
pub struct NfArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Scaled noise on the prey channel (replaces the value derived from sigma1).
    #[arg(long)]
    pub sigma_hat1: Option<f64>,
    /// Scaled noise on the predator channel.
    #[arg(long)]
    pub sigma_hat2: Option<f64>,
    /// Sets both scaled noise intensities.
    #[arg(long, conflicts_with_all = ["sigma_hat1", "sigma_hat2"])]
    pub sigma_hat: Option<f64>,
    /// Replaces the derived drift offset mu_hat.
    #[arg(long)]
    pub mu_hat: Option<f64>,
    /// Window constant a of the Z_T estimate (with --c0).
    #[arg(long, default_value_t = 0.5)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c0: f64,
    /// Print one JSON document instead of text.
    #[arg(long)]
    pub json: bool,
    /// Simulate normal-form paths and write t,l,z trajectories.
    #[arg(long)]
    pub simulate: bool,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn coeffs(args: &NfArgs) -> Result<StochNFCoeffs> {
    let p = args.params.resolve()?;
    let mut c = stoch_nf_coeffs(&p)?;
    let s1 = args.sigma_hat1.or(args.sigma_hat);
    let s2 = args.sigma_hat2.or(args.sigma_hat);
    if s1.is_some() || s2.is_some() {
        c = StochNFCoeffs::with_scaled_noise(c.k, s1.unwrap_or(c.sigma_hat1), s2.unwrap_or(c.sigma_hat2));
    }
    if let Some(m) = args.mu_hat {
        c = c.with_mu_hat(m);
    }
    Ok(c)
}

pub fn run(args: &NfArgs) -> Result<()> {
    let c = coeffs(args)?;
    let (kappa, phi) = match repeated_spike_probability(&c) {
        Ok(sp) => (Some(sp.kappa), Some(sp.prob)),
        Err(Error::ZeroNoise { limit }) => {
            log::warn!("both scaled noise intensities vanish; reporting the deterministic limit");
            (None, limit)
        }
        Err(e) => return Err(e.into()),
    };
    let estimate = spike_estimate(&c, args.a, args.c0, 0.0)
        .map_err(|e| log::info!("no Z_T estimate: {e}"))
        .ok();
    let doc = json!({
        "constants": c.k,
        "sigma_hat1": c.sigma_hat1,
        "sigma_hat2": c.sigma_hat2,
        "mu_hat": c.mu_hat,
        "kappa": kappa,
        "phi_neg_kappa": phi,
        "z_t": estimate,
    });
    if args.json {
        println!("{}", serde_json::to_string_pretty(&doc)?);
    } else {
        print_text(&doc);
    }

    if args.simulate {
        let sim = args.run.sim([0.0, 0.5]);
        let trajs = (0..args.run.paths)
            .map(|i| stochastic_nf_path(&c, &sim.with_seed(path_seed(sim.seed, i as u64))))
            .collect::<mmo_core::Result<Vec<_>>>()?;
        args.output.write(&trajs, "nf")?;
    }
    Ok(())
}

fn print_text(doc: &Value) {
    let show = |v: &Value| match v {
        Value::Number(n) => format!("{:.6e}", n.as_f64().unwrap_or(f64::NAN)),
        Value::Null => "n/a".into(),
        v => v.to_string(),
    };
    let section = |title: &str, v: &Value| {
        println!("{title}");
        if let Some(obj) = v.as_object() {
            for (k, x) in obj {
                if x.is_object() {
                    for (k2, y) in x.as_object().into_iter().flatten() {
                        println!("  {:<24} {}", format!("{k}.{k2}"), show(y));
                    }
                } else {
                    println!("  {k:<24} {}", show(x));
                }
            }
        }
    };
    section("normal-form constants", &doc["constants"]);
    println!("stochastic coefficients");
    for k in ["sigma_hat1", "sigma_hat2", "mu_hat", "kappa", "phi_neg_kappa"] {
        println!("  {k:<24} {}", show(&doc[k]));
    }
    if !doc["z_t"].is_null() {
        section("Z_T estimate", &doc["z_t"]);
    }
}
