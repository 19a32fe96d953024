use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use mmo_core::equilibrium::{classify_regime, hopf_data, jacobian_summary, solve_equilibrium};
use mmo_core::model::NondimParams;

use crate::args::{parse_list, ParamArgs};

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Analyze each of these comma-separated h values instead of one point.
    #[arg(long)]
    pub h_values: Option<String>,
    /// Also write the table as CSV ("-" for stdout).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

const HEADER: [&str; 11] = [
    "alpha", "alpha_star", "h_star", "h_tilde", "delta", "gamma", "mu", "regime", "trace", "det", "eigenvalues",
];

fn row(p: &NondimParams) -> Result<Vec<String>> {
    let eq = solve_equilibrium(p)?;
    let j = jacobian_summary(p, &eq);
    let hd = hopf_data(p);
    let eig = j
        .eigenvalues
        .iter()
        .map(|z| format!("{:.6}{:+.6}i", z.re, z.im))
        .collect::<Vec<_>>()
        .join(" ");
    let num = |v: f64| format!("{v:.6}");
    Ok(vec![
        num(eq.alpha),
        num(hd.alpha_star),
        num(hd.h_star),
        num(hd.h_tilde),
        format!("{:.6e}", hd.delta),
        num(hd.gamma),
        format!("{:.6e}", hd.mu),
        classify_regime(p).to_string(),
        format!("{:.6e}", j.trace),
        num(j.det),
        eig,
    ])
}

pub fn run(args: &AnalyzeArgs) -> Result<()> {
    let base = args.params.resolve()?;
    let points = match &args.h_values {
        Some(list) => parse_list(list)?.into_iter().map(|h| base.with_h(h)).collect(),
        None => vec![base],
    };
    let mut rows = Vec::with_capacity(points.len());
    for p in &points {
        args.params.check(p)?;
        rows.push(row(p)?);
    }
    let csv_to_stdout = args.csv.as_ref().is_some_and(|p| p.as_os_str() == "-");
    if !csv_to_stdout {
        print_table(&rows);
    }
    if let Some(path) = &args.csv {
        let w: Box<dyn std::io::Write> = if csv_to_stdout {
            Box::new(std::io::stdout())
        } else {
            Box::new(std::fs::File::create(path)?)
        };
        let mut out = csv::Writer::from_writer(w);
        out.write_record(HEADER)?;
        for r in &rows {
            out.write_record(r)?;
        }
        out.flush()?;
    }
    Ok(())
}

fn print_table(rows: &[Vec<String>]) {
    let widths: Vec<usize> = (0..HEADER.len())
        .map(|c| rows.iter().map(|r| r[c].len()).chain([HEADER[c].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
        println!("{}", padded.join("  ").trim_end());
    };
    line(HEADER.to_vec());
    for r in rows {
        line(r.iter().map(String::as_str).collect());
    }
}
