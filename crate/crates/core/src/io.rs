//! CSV readers and writers for trajectories, N samples, histograms and
//! sweeps.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::integrator::{Coords, Trajectory};
use crate::stats::{geometric_overlay, Histogram};
use crate::sweep::SweepResult;

/// Writes `t,x,y` (or `t,l,z`), optionally prefixed by a `seed` column.
pub fn write_trajectory_csv<W: Write>(w: W, traj: &Trajectory, seed_column: bool) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    write_header(&mut out, traj.coords, seed_column)?;
    write_rows(&mut out, traj, seed_column)?;
    out.flush()?;
    Ok(())
}

/// Concatenates trajectories with a leading `seed` column. All must share
/// the same coordinates.
pub fn write_trajectories_csv<W: Write>(w: W, trajs: &[Trajectory]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let coords = trajs.first().map_or(Coords::Xy, |t| t.coords);
    if trajs.iter().any(|t| t.coords != coords) {
        return Err(Error::InvalidParameter("mixed coordinate systems".into()));
    }
    write_header(&mut out, coords, true)?;
    for t in trajs {
        write_rows(&mut out, t, true)?;
    }
    out.flush()?;
    Ok(())
}

fn write_header<W: Write>(out: &mut csv::Writer<W>, coords: Coords, seed: bool) -> Result<()> {
    let [a, b] = coords.names();
    if seed {
        out.write_record(["seed", "t", a, b])?;
    } else {
        out.write_record(["t", a, b])?;
    }
    Ok(())
}

fn write_rows<W: Write>(out: &mut csv::Writer<W>, traj: &Trajectory, seed: bool) -> Result<()> {
    let s = traj.seed.to_string();
    for (t, u) in traj.times.iter().zip(&traj.states) {
        let (t, a, b) = (t.to_string(), u[0].to_string(), u[1].to_string());
        if seed {
            out.write_record([s.as_str(), &t, &a, &b])?;
        } else {
            out.write_record([t.as_str(), &a, &b])?;
        }
    }
    Ok(())
}

/// A time series read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRecord {
    pub seed: Option<u64>,
    pub coords: Coords,
    pub times: Vec<f64>,
    pub states: Vec<[f64; 2]>,
}

/// Reads a file written by [`write_trajectory_csv`] or
/// [`write_trajectories_csv`]; rows are grouped by consecutive seed.
pub fn read_trajectory_csv<R: Read>(r: R) -> Result<Vec<SeriesRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    let (has_seed, rest) = match names.first() {
        Some(&"seed") => (true, &names[1..]),
        _ => (false, &names[..]),
    };
    let coords = match rest {
        ["t", "x", "y"] => Coords::Xy,
        ["t", "l", "z"] => Coords::Lz,
        _ => return Err(Error::Parse(format!("unexpected trajectory header {names:?}"))),
    };
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))
    };
    let mut out: Vec<SeriesRecord> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let off = has_seed as usize;
        let seed = if has_seed {
            Some(
                rec[0]
                    .trim()
                    .parse::<u64>()
                    .map_err(|e| Error::Parse(format!("bad seed {:?}: {e}", &rec[0])))?,
            )
        } else {
            None
        };
        let t = num(&rec[off])?;
        let u = [num(&rec[off + 1])?, num(&rec[off + 2])?];
        match out.last_mut() {
            Some(last) if last.seed == seed => {
                last.times.push(t);
                last.states.push(u);
            }
            _ => out.push(SeriesRecord {
                seed,
                coords,
                times: vec![t],
                states: vec![u],
            }),
        }
    }
    Ok(out)
}

/// One row per inter-spike gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct NRow {
    pub seed: u64,
    pub gap: usize,
    #[serde(rename = "N")]
    pub n: u64,
}

pub fn write_n_samples_csv<W: Write>(w: W, rows: &[NRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    if rows.is_empty() {
        out.write_record(["seed", "gap", "N"])?;
    }
    out.flush()?;
    Ok(())
}

/// `n,count,empirical_pmf,geometric_pmf`; the last column is empty without a
/// λ₀ estimate.
pub fn write_histogram_csv<W: Write>(w: W, hist: &Histogram, lambda0: Option<f64>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "count", "empirical_pmf", "geometric_pmf"])?;
    let pmf = hist.pmf();
    let geo = lambda0.and_then(|l| geometric_overlay(l, pmf.len()).ok());
    for (n, (&c, p)) in hist.counts.iter().zip(&pmf).enumerate() {
        let g = geo.as_ref().map_or(String::new(), |g| g[n].to_string());
        out.write_record([n.to_string(), c.to_string(), p.to_string(), g])?;
    }
    out.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

pub fn write_sweep_csv<W: Write>(w: W, res: &SweepResult) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "axis1",
        "axis2",
        "h",
        "mu",
        "sigma1",
        "sigma2",
        "Sigma_mean",
        "Sigma_std",
        "phi_neg_kappa",
    ])?;
    for c in &res.cells {
        out.write_record([
            c.axis1.to_string(),
            c.axis2.to_string(),
            c.h.to_string(),
            c.mu.to_string(),
            c.sigma1.to_string(),
            c.sigma2.to_string(),
            c.sigma_mean.to_string(),
            c.sigma_std.to_string(),
            opt(c.phi_neg_kappa),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Which cell value a matrix file holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixField {
    SigmaMean,
    PhiNegKappa,
}

/// Gnuplot `matrix nonuniform` layout: the first row is the column count
/// followed by the axis-2 values, each further row is an axis-1 value
/// followed by that row's cells. Undefined cells are written as `NaN`.
pub fn write_sweep_matrix<W: Write>(mut w: W, res: &SweepResult, field: MatrixField) -> Result<()> {
    let n2 = res.axis2.steps;
    let mut line = vec![n2.to_string()];
    line.extend(res.axis2.values().iter().map(|v| v.to_string()));
    writeln!(w, "{}", line.join(" "))?;
    for (i, v1) in res.axis1.values().iter().enumerate() {
        let mut line = vec![v1.to_string()];
        for j in 0..n2 {
            let c = res.cell(i, j);
            let v = match field {
                MatrixField::SigmaMean => c.sigma_mean,
                MatrixField::PhiNegKappa => c.phi_neg_kappa.unwrap_or(f64::NAN),
            };
            line.push(v.to_string());
        }
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NondimParams;

    fn traj(seed: u64, coords: Coords) -> Trajectory {
        Trajectory {
            times: vec![0.0, 0.5, 1.0],
            states: vec![[0.1, 0.2], [0.3, -0.4], [1e-9, 2.5]],
            coords,
            params: NondimParams::default(),
            seed,
            steps: 2,
            clamp_events: 0,
        }
    }

    #[test]
    fn trajectory_round_trip() {
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj(3, Coords::Lz), false).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("t,l,z\n"));
        let back = read_trajectory_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].seed, None);
        assert_eq!(back[0].states, traj(3, Coords::Lz).states);
    }

    #[test]
    fn concatenated_groups_by_seed() {
        let mut buf = Vec::new();
        write_trajectories_csv(&mut buf, &[traj(1, Coords::Xy), traj(2, Coords::Xy)]).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("seed,t,x,y\n"));
        let back = read_trajectory_csv(buf.as_slice()).unwrap();
        assert_eq!(back.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![Some(1), Some(2)]);
        assert!(write_trajectories_csv(Vec::new(), &[traj(1, Coords::Xy), traj(2, Coords::Lz)]).is_err());
    }

    #[test]
    fn bad_header_rejected() {
        assert!(read_trajectory_csv("a,b,c\n1,2,3\n".as_bytes()).is_err());
    }

    #[test]
    fn n_samples_header() {
        let mut buf = Vec::new();
        write_n_samples_csv(&mut buf, &[NRow { seed: 5, gap: 0, n: 7 }]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "seed,gap,N\n5,0,7\n");
    }

    #[test]
    fn histogram_columns() {
        let h = Histogram::new(&[0, 1, 1]);
        let mut buf = Vec::new();
        write_histogram_csv(&mut buf, &h, Some(0.5)).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "n,count,empirical_pmf,geometric_pmf");
        assert!(lines[1].starts_with("0,1,0.333"));
        assert!(lines[2].ends_with(",0.25"));
    }
}
