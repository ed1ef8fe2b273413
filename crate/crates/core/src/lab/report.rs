use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{median, quantiles, Control, ExperimentConfig, ExperimentId, ExperimentResult, Quantiles};
use crate::dataset::Role;
use crate::error::{Error, Result};
use crate::model::ModelKind;

pub const TIDY_COLUMNS: [&str; 7] = ["experiment", "model", "control_name", "control", "trial", "metric", "value"];

/// Metrics summarized per cell, in file order.
const SUMMARY_METRICS: [&str; 4] = ["mae_validation", "mae_test", "ratio", "epochs_run"];

/// First line of every output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileHeader {
    pub version: String,
    pub experiment: ExperimentId,
    pub seed: u64,
    pub config_digest: String,
}

impl FileHeader {
    pub fn for_config(config: &ExperimentConfig) -> Self {
        FileHeader {
            version: env!("CARGO_PKG_VERSION").into(),
            experiment: config.id,
            seed: config.seed,
            config_digest: config.digest(),
        }
    }

    pub fn parse(line: &str) -> Result<Self> {
        let bad = || Error::Config(format!("not a result file header: `{line}`"));
        let mut words = line.strip_prefix("# vfm ").ok_or_else(bad)?.split_whitespace();
        let version = words.next().ok_or_else(bad)?.to_string();
        let mut fields = HashMap::new();
        for w in words {
            let (k, v) = w.split_once('=').ok_or_else(bad)?;
            fields.insert(k, v);
        }
        Ok(FileHeader {
            version,
            experiment: fields.get("experiment").ok_or_else(bad)?.parse()?,
            seed: fields.get("seed").and_then(|s| s.parse().ok()).ok_or_else(bad)?,
            config_digest: fields.get("config_sha256").ok_or_else(bad)?.to_string(),
        })
    }
}

impl fmt::Display for FileHeader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "# vfm {} experiment={} seed={} config_sha256={}",
            self.version, self.experiment, self.seed, self.config_digest
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TidyRow {
    pub experiment: ExperimentId,
    pub model: ModelKind,
    pub control: Control,
    pub trial: usize,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileSummary {
    pub experiment: ExperimentId,
    pub model: ModelKind,
    pub control: Control,
    pub metric: String,
    /// Absent when every trial diverged.
    pub quantiles: Option<Quantiles>,
    pub n_ok: usize,
    pub n_total: usize,
    /// Fewer than 80% of the trials contributed.
    pub flagged: bool,
}

fn model_rank(kind: ModelKind) -> usize {
    ModelKind::ALL.iter().position(|k| *k == kind).unwrap_or(usize::MAX)
}

/// Quantiles per (model, control, metric) over the trials that did not
/// diverge.
pub fn aggregate(rows: &[TidyRow]) -> Result<Vec<QuantileSummary>> {
    struct Cell {
        experiment: ExperimentId,
        model: ModelKind,
        control: Control,
        n_total: usize,
        values: HashMap<String, Vec<f64>>,
    }
    let mut cells: Vec<Cell> = Vec::new();
    let mut index: HashMap<(ModelKind, String, String), usize> = HashMap::new();
    for r in rows {
        let key = (r.model, r.control.name().to_string(), r.control.to_string());
        let i = *index.entry(key).or_insert_with(|| {
            cells.push(Cell {
                experiment: r.experiment,
                model: r.model,
                control: r.control,
                n_total: 0,
                values: HashMap::new(),
            });
            cells.len() - 1
        });
        if r.metric == "diverged" {
            cells[i].n_total += 1;
        } else {
            cells[i].values.entry(r.metric.clone()).or_default().push(r.value);
        }
    }
    cells.sort_by(|a, b| {
        model_rank(a.model).cmp(&model_rank(b.model)).then(a.control.sort_key().total_cmp(&b.control.sort_key()))
    });

    let mut out = Vec::new();
    for c in &cells {
        for metric in SUMMARY_METRICS {
            let expected = match metric {
                "ratio" => c.experiment == ExperimentId::Exp2,
                _ => true,
            };
            let values = c.values.get(metric).map(Vec::as_slice).unwrap_or(&[]);
            if !expected && values.is_empty() {
                continue;
            }
            let n_total = c.n_total.max(values.len());
            out.push(QuantileSummary {
                experiment: c.experiment,
                model: c.model,
                control: c.control,
                metric: metric.into(),
                quantiles: if values.is_empty() { None } else { Some(quantiles(values)?) },
                n_ok: values.len(),
                n_total,
                flagged: values.len() * 5 < n_total * 4,
            });
        }
    }
    Ok(out)
}

/// Validation and test errors per model, as medians over trials.
#[derive(Debug, Clone, PartialEq)]
pub struct MaeTable {
    pub experiment: ExperimentId,
    pub models: Vec<ModelKind>,
    pub mae_validation: Vec<Option<f64>>,
    pub mae_test: Vec<Option<f64>>,
}

impl MaeTable {
    pub fn get(&self, kind: ModelKind) -> Option<(Option<f64>, Option<f64>)> {
        let i = self.models.iter().position(|k| *k == kind)?;
        Some((self.mae_validation[i], self.mae_test[i]))
    }
}

pub fn table_from_rows(rows: &[TidyRow]) -> Result<MaeTable> {
    let experiment = rows.first().map(|r| r.experiment).ok_or(Error::Empty("result rows"))?;
    let mut models: Vec<ModelKind> = rows.iter().map(|r| r.model).collect();
    models.sort_by_key(|k| model_rank(*k));
    models.dedup();
    let med = |kind: ModelKind, metric: &str| -> Result<Option<f64>> {
        let v: Vec<f64> = rows.iter().filter(|r| r.model == kind && r.metric == metric).map(|r| r.value).collect();
        if v.is_empty() {
            Ok(None)
        } else {
            median(&v).map(Some)
        }
    };
    Ok(MaeTable {
        experiment,
        mae_validation: models.iter().map(|k| med(*k, "mae_validation")).collect::<Result<_>>()?,
        mae_test: models.iter().map(|k| med(*k, "mae_test")).collect::<Result<_>>()?,
        models,
    })
}

impl fmt::Display for MaeTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<8}", "")?;
        for m in &self.models {
            write!(f, "{:>10}", m.label())?;
        }
        writeln!(f)?;
        for (name, row) in [("MAE_v", &self.mae_validation), ("MAE_t", &self.mae_test)] {
            write!(f, "{name:<8}")?;
            for v in row {
                match v {
                    Some(v) => write!(f, "{v:>10.3}")?,
                    None => write!(f, "{:>10}", "-")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub t: usize,
    pub role: Role,
    pub model: ModelKind,
    pub q: Quantiles,
}

fn csv_writer<W: Write>(header: &FileHeader, mut w: W) -> Result<csv::Writer<W>> {
    writeln!(w, "{header}")?;
    Ok(csv::Writer::from_writer(w))
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_tidy(header: &FileHeader, rows: &[TidyRow], w: impl Write) -> Result<()> {
    let mut out = csv_writer(header, w)?;
    out.write_record(TIDY_COLUMNS)?;
    for r in rows {
        out.write_record([
            r.experiment.as_str(),
            r.model.label(),
            r.control.name(),
            &r.control.to_string(),
            &r.trial.to_string(),
            &r.metric,
            &r.value.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_quantiles(header: &FileHeader, summary: &[QuantileSummary], w: impl Write) -> Result<()> {
    let mut out = csv_writer(header, w)?;
    out.write_record([
        "experiment",
        "model",
        "control_name",
        "control",
        "metric",
        "p25",
        "p50",
        "p75",
        "n_ok",
        "n_total",
        "flagged",
    ])?;
    for s in summary {
        let q = s.quantiles;
        out.write_record([
            s.experiment.as_str(),
            s.model.label(),
            s.control.name(),
            &s.control.to_string(),
            &s.metric,
            &opt(q.map(|q| q.p25)),
            &opt(q.map(|q| q.p50)),
            &opt(q.map(|q| q.p75)),
            &s.n_ok.to_string(),
            &s.n_total.to_string(),
            if s.flagged { "1" } else { "0" },
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_table(header: &FileHeader, table: &MaeTable, w: impl Write) -> Result<()> {
    let mut out = csv_writer(header, w)?;
    let mut head = vec!["metric"];
    head.extend(table.models.iter().map(|m| m.label()));
    out.write_record(&head)?;
    for (name, row) in [("mae_validation", &table.mae_validation), ("mae_test", &table.mae_test)] {
        let mut rec = vec![name.to_string()];
        rec.extend(row.iter().map(|v| opt(*v)));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_series(header: &FileHeader, points: &[SeriesPoint], w: impl Write) -> Result<()> {
    let mut out = csv_writer(header, w)?;
    out.write_record(["t", "split", "model", "p25", "p50", "p75"])?;
    for p in points {
        out.write_record([
            &p.t.to_string(),
            p.role.as_str(),
            p.model.label(),
            &p.q.p25.to_string(),
            &p.q.p50.to_string(),
            &p.q.p75.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a tidy results file back, for re-aggregation.
pub fn read_tidy(path: impl AsRef<Path>) -> Result<(FileHeader, Vec<TidyRow>)> {
    let text = fs::read_to_string(path)?;
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    let header = FileHeader::parse(first.trim_end())?;
    let mut reader = csv::Reader::from_reader(rest.as_bytes());
    if reader.headers()?.iter().ne(TIDY_COLUMNS) {
        return Err(Error::Config("tidy file columns do not match".into()));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let bad = |what: &str| {
            Error::Config(format!("bad {what} `{}` in tidy file", rec.iter().collect::<Vec<_>>().join(",")))
        };
        rows.push(TidyRow {
            experiment: field(0).parse()?,
            model: field(1).parse()?,
            control: Control::parse(field(2), field(3))?,
            trial: field(4).parse().map_err(|_| bad("trial"))?,
            metric: field(5).to_string(),
            value: field(6).parse().map_err(|_| bad("value"))?,
        });
    }
    Ok((header, rows))
}

/// Writes every report file for `result` into `dir` and returns their paths.
pub fn write_outputs(result: &ExperimentResult, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let header = result.header();
    let id = result.config.id.as_str();
    let mut written = Vec::new();
    let mut create = |suffix: &str| -> Result<(PathBuf, std::io::BufWriter<fs::File>)> {
        let path = dir.join(format!("{id}_{suffix}"));
        let file = fs::File::create(&path)?;
        written.push(path.clone());
        Ok((path, std::io::BufWriter::new(file)))
    };

    let rows = result.tidy_rows();
    write_tidy(&header, &rows, create("tidy.csv")?.1)?;
    write_quantiles(&header, &aggregate(&rows)?, create("quantiles.csv")?.1)?;
    if let Some(table) = result.table()? {
        write_table(&header, &table, create("table.csv")?.1)?;
    }
    if result.timeline.is_some() {
        write_series(&header, &result.series()?, create("series.csv")?.1)?;
    }
    let (_, mut w) = create("config.json")?;
    writeln!(w, "{header}")?;
    serde_json::to_writer_pretty(&mut w, &result.config)?;
    writeln!(w)?;
    w.flush()?;
    Ok(written)
}
