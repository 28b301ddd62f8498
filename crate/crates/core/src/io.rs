//! On-disk formats.
//!
//! Trajectory CSV: header `t,x1,...,xS,replica,seed`, one row per sample,
//! replicas concatenated in order, floats in `{:.16e}` (17 significant
//! digits, so values round-trip exactly). Event and result streams are JSONL,
//! one object per line.

use std::io::{BufRead, BufReader, Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limit::JumpRecord;
use crate::simplex::{SimplexPoint, Trajectory};
use crate::verify::EnsembleStats;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trajectory_header(sites: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=sites).map(|i| format!("x{i}")));
    h.push("replica".into());
    h.push("seed".into());
    h
}

pub fn write_trajectories_csv<W: Write>(out: W, ensemble: &[Trajectory]) -> Result<()> {
    let sites = ensemble.first().map_or(0, Trajectory::sites);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_header(sites)).map_err(csv_err)?;
    for traj in ensemble {
        if traj.sites() != sites {
            return Err(Error::DimensionMismatch { expected: sites, got: traj.sites() });
        }
        for (t, x) in traj.times.iter().zip(&traj.points) {
            let mut row = Vec::with_capacity(sites + 3);
            row.push(fmt_f64(*t));
            row.extend(x.coords().iter().map(|c| fmt_f64(*c)));
            row.push(traj.replica_id.to_string());
            row.push(traj.seed.to_string());
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a trajectory CSV back, grouping rows into one trajectory per
/// contiguous replica block. The header must match the schema exactly.
pub fn read_trajectories_csv<R: Read>(input: R) -> Result<Vec<Trajectory>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let sites = header
        .len()
        .checked_sub(3)
        .filter(|&s| s > 0)
        .ok_or_else(|| Error::Parse("trajectory header too short".into()))?;
    if header != trajectory_header(sites) {
        return Err(Error::Parse(format!("unexpected trajectory header: {}", header.join(","))));
    }
    let mut out: Vec<Trajectory> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let num = |k: usize| -> Result<f64> {
            rec[k].parse().map_err(|_| Error::Parse(format!("row {}: bad number `{}`", line + 2, &rec[k])))
        };
        let int = |k: usize| -> Result<u64> {
            rec[k].parse().map_err(|_| Error::Parse(format!("row {}: bad integer `{}`", line + 2, &rec[k])))
        };
        let t = num(0)?;
        let coords = (1..=sites).map(num).collect::<Result<Vec<f64>>>()?;
        let (replica, seed) = (int(sites + 1)?, int(sites + 2)?);
        let point = SimplexPoint::with_tolerance(coords, 1e-9)?;
        match out.last_mut() {
            Some(tr) if tr.replica_id == replica && tr.seed == seed => {
                if tr.times.last().is_some_and(|&last| t <= last) {
                    return Err(Error::Parse(format!("row {}: times not increasing", line + 2)));
                }
                tr.push(t, point);
            }
            _ => {
                let mut tr = Trajectory::new(replica, seed);
                tr.push(t, point);
                out.push(tr);
            }
        }
    }
    Ok(out)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn write_jsonl<W: Write, T: Serialize>(mut out: W, items: impl IntoIterator<Item = T>) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, &item)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_jsonl<R: Read, T: DeserializeOwned>(input: R) -> Result<Vec<T>> {
    BufReader::new(input)
        .lines()
        .filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()))
        .map(|l| Ok(serde_json::from_str(&l?)?))
        .collect()
}

/// One limit-process jump, tagged with its replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpLine {
    pub replica: u64,
    pub seed: u64,
    #[serde(flatten)]
    pub jump: JumpRecord,
}

/// One pure Wright–Fisher absorption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbsorptionLine {
    pub replica: u64,
    pub point: Vec<f64>,
    pub time: f64,
    pub hit_cap: bool,
}

/// Writes a table with a header row; cells are written verbatim.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::DimensionMismatch { expected: header.len(), got: row.len() });
        }
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `t,<name>_mean,<name>_se,...` for every observable.
pub fn write_stats_csv<W: Write>(out: W, stats: &EnsembleStats) -> Result<()> {
    let mut header = vec!["t".to_string()];
    for o in &stats.observables {
        header.push(format!("{}_mean", o.name));
        header.push(format!("{}_se", o.name));
    }
    let rows: Vec<Vec<String>> = stats
        .times
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let mut row = vec![fmt_f64(*t)];
            for o in &stats.observables {
                row.push(fmt_f64(o.mean[k]));
                row.push(fmt_f64(o.std_error[k]));
            }
            row
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_table(out, &header, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<Trajectory> {
        (0..2)
            .map(|r| {
                let mut t = Trajectory::new(r, 100 + r);
                t.push(0.0, SimplexPoint::new(vec![0.1, 0.2, 0.7]).unwrap());
                t.push(0.5, SimplexPoint::new(vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap());
                t
            })
            .collect()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut buf = Vec::new();
        write_trajectories_csv(&mut buf, &sample()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x1,x2,x3,replica,seed\n"));
        assert!(text.contains("3.3333333333333331e-1"));
        assert_eq!(read_trajectories_csv(buf.as_slice()).unwrap(), sample());
    }

    #[test]
    fn bad_header_rejected() {
        let text = "time,x1,x2,replica,seed\n0,0.5,0.5,0,0\n";
        assert!(matches!(read_trajectories_csv(text.as_bytes()), Err(Error::Parse(_))));
    }

    #[test]
    fn jsonl_round_trip() {
        let lines = vec![JumpLine {
            replica: 3,
            seed: 9,
            jump: JumpRecord { t: 0.25, target: 1, z: 1.0, pre: vec![0.5, 0.0, 0.5], post: vec![0.0, 1.0, 0.0] },
        }];
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &lines).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("{\"replica\":3,\"seed\":9,\"t\":0.25,\"target\":1"));
        let back: Vec<JumpLine> = read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, lines);
    }
}
