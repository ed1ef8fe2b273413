//! Delimited-text persistence. One `#` provenance line, a header row, then one
//! observation per row.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetId, Observation, Provenance, Role, Split};
use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 11] =
    ["t", "p1_bar", "p2_bar", "T1_C", "u_pct", "eta_oil", "eta_gas", "eta_water", "q_true", "y", "split"];

#[derive(Serialize, Deserialize)]
struct Row {
    t: u64,
    p1_bar: f64,
    p2_bar: f64,
    #[serde(rename = "T1_C")]
    t1_c: f64,
    u_pct: f64,
    eta_oil: f64,
    eta_gas: f64,
    eta_water: f64,
    q_true: f64,
    y: f64,
    split: Option<Role>,
}

/// `d1_n10000_sigma2_seed7.csv`
pub fn file_name(p: &Provenance) -> String {
    format!("{}_n{}_sigma{}_seed{}.csv", p.generator, p.n, p.sigma_eps, p.seed)
}

fn provenance_line(p: &Provenance) -> String {
    format!(
        "# vfm {} generator={} n={} sigma={} seed={} redraws={}",
        env!("CARGO_PKG_VERSION"),
        p.generator,
        p.n,
        p.sigma_eps,
        p.seed,
        p.redraws
    )
}

pub fn write_csv(ds: &Dataset, writer: impl Write) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{}", provenance_line(&ds.provenance))?;
    let mut csv = csv::Writer::from_writer(w);
    let roles = ds.split.role_of(ds.len());
    for (o, role) in ds.observations.iter().zip(roles) {
        csv.serialize(Row {
            t: o.t,
            p1_bar: o.p1,
            p2_bar: o.p2,
            t1_c: o.t1,
            u_pct: o.u,
            eta_oil: o.eta_oil,
            eta_gas: o.eta_gas,
            eta_water: o.eta_water,
            q_true: o.q_true,
            y: o.y,
            split: role,
        })?;
    }
    csv.flush()?;
    Ok(())
}

fn parse_provenance(line: &str) -> Result<Provenance> {
    let mut generator = None;
    let (mut n, mut sigma, mut seed, mut redraws) = (None, None, None, 0);
    for tok in line.trim_start_matches('#').split_whitespace() {
        let Some((k, v)) = tok.split_once('=') else { continue };
        let bad = || Error::Config(format!("bad provenance field `{tok}`"));
        match k {
            "generator" => generator = Some(v.parse::<DatasetId>()?),
            "n" => n = Some(v.parse().map_err(|_| bad())?),
            "sigma" => sigma = Some(v.parse().map_err(|_| bad())?),
            "seed" => seed = Some(v.parse().map_err(|_| bad())?),
            "redraws" => redraws = v.parse().map_err(|_| bad())?,
            _ => {}
        }
    }
    match (generator, n, sigma, seed) {
        (Some(generator), Some(n), Some(sigma_eps), Some(seed)) => {
            Ok(Provenance { generator, n, sigma_eps, seed, redraws })
        }
        _ => Err(Error::Config("dataset file lacks a complete provenance line".into())),
    }
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let mut reader = BufReader::new(File::open(path.as_ref())?);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let provenance = parse_provenance(&first)?;

    let mut csv = csv::Reader::from_reader(reader);
    let header: Vec<String> = csv.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_COLUMNS {
        return Err(Error::Config(format!("unexpected dataset columns {header:?}")));
    }
    let mut observations = Vec::new();
    let mut split = Split::default();
    for (i, row) in csv.deserialize::<Row>().enumerate() {
        let r = row?;
        observations.push(Observation {
            t: r.t,
            p1: r.p1_bar,
            p2: r.p2_bar,
            t1: r.t1_c,
            u: r.u_pct,
            eta_oil: r.eta_oil,
            eta_water: r.eta_water,
            eta_gas: r.eta_gas,
            q_true: r.q_true,
            y: r.y,
        });
        match r.split {
            Some(Role::Train) => split.train.push(i),
            Some(Role::Val) => split.val.push(i),
            Some(Role::Test) => split.test.push(i),
            None => {}
        }
    }
    Ok(Dataset { observations, split, provenance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::sample_d1;

    #[test]
    fn file_name_encodes_provenance() {
        let ds = sample_d1(10, 2.0, 7).unwrap();
        assert_eq!(file_name(&ds.provenance), "d1_n10_sigma2_seed7.csv");
    }

    #[test]
    fn round_trip_through_disk() {
        let ds = sample_d1(50, 3.0, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(file_name(&ds.provenance));
        write_csv(&ds, File::create(&path).unwrap()).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back, ds);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), CSV_COLUMNS.join(","));
    }
}
