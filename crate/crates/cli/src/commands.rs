use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use vfm_core::dataset::{file_name, generate_d2, generate_d3, read_csv, sample_d1, write_csv, Observation};
use vfm_core::lab::{
    aggregate, read_tidy, run_experiment, table_from_rows, write_outputs, write_quantiles, write_table, ExperimentId,
    QuantileSummary,
};
use vfm_core::model::{build, checkpoint, ModelKind, ModelSetup};
use vfm_core::nn::NetSpec;
use vfm_core::process::Inputs;
use vfm_core::rng::derive_seed;
use vfm_core::train::{train as fit, TrainConfig, TrainReport};
use vfm_core::Error;

use crate::config::{load_run_file, load_train_config};
use crate::{GenDataArgs, ReportArgs, RunExpArgs, SetArg, TrainArgs};

/// Exit code 1 for `Usage`, 2 for `Runtime`.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Input { .. } | Error::Split(_) | Error::Empty(_) | Error::Dimension { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult = Result<(), CliError>;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

pub fn gen_data(a: &GenDataArgs) -> CliResult {
    if !(a.sigma >= 0.0 && a.sigma.is_finite()) {
        return Err(CliError::Usage("--sigma must be a finite non-negative number".into()));
    }
    if a.set != SetArg::D1 && a.sigma != 0.0 {
        return Err(CliError::Usage("--sigma only applies to d1; d2 and d3 are noise-free".into()));
    }
    let ds = match a.set {
        SetArg::D1 => sample_d1(a.n.unwrap_or(10_000), a.sigma, a.seed)?,
        SetArg::D2 => generate_d2(a.n.unwrap_or(5000), a.seed)?,
        SetArg::D3 => generate_d3(a.n.unwrap_or(5000), a.seed)?,
    };
    let path = a.out.join(file_name(&ds.provenance));
    let mut w = create(&path)?;
    write_csv(&ds, &mut w)?;
    w.flush()?;
    let p = &ds.provenance;
    println!(
        "{}: generator={} n={} sigma={} seed={} redraws={} (train {}, val {}, test {})",
        path.display(),
        p.generator,
        p.n,
        p.sigma_eps,
        p.seed,
        p.redraws,
        ds.split.train.len(),
        ds.split.val.len(),
        ds.split.test.len()
    );
    Ok(())
}

fn write_loss_curve(path: &Path, report: &TrainReport) -> CliResult {
    let mut w = create(path)?;
    writeln!(w, "epoch,train_loss,val_mse")?;
    for (i, loss) in report.train_loss.iter().enumerate() {
        let val = report.val_mse.get(i).map(|v| v.to_string()).unwrap_or_default();
        writeln!(w, "{},{loss},{val}", i + 1)?;
    }
    w.flush()?;
    Ok(())
}

fn mae_against(
    model: &vfm_core::model::Model,
    rows: &[Observation],
    target: fn(&Observation) -> f64,
) -> Result<Option<f64>, CliError> {
    if rows.is_empty() {
        return Ok(None);
    }
    let pred = rows.iter().map(|o| model.predict(&o.inputs())).collect::<Result<Vec<_>, _>>()?;
    let y: Vec<f64> = rows.iter().map(target).collect();
    Ok(Some(vfm_core::lab::mae(&pred, &y)?))
}

fn show(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

pub fn train(a: &TrainArgs) -> CliResult {
    let kind: ModelKind = a.model.parse()?;
    let mut cfg = match &a.config {
        Some(path) => load_train_config(path)?,
        None => TrainConfig::default(),
    };
    cfg.max_epochs = a.max_epochs.unwrap_or(cfg.max_epochs);
    cfg.patience = a.patience.or(cfg.patience);
    cfg.batch_size = a.batch_size.unwrap_or(cfg.batch_size);
    cfg.learning_rate_net = a.lr_net.unwrap_or(cfg.learning_rate_net);
    cfg.learning_rate_phys = a.lr_phys.unwrap_or(cfg.learning_rate_phys);

    let ds = read_csv(&a.data)?;
    cfg.sigma_eps_assumed = match a.sigma_assumed {
        Some(s) => s,
        None if a.config.is_some() => cfg.sigma_eps_assumed,
        None if ds.provenance.sigma_eps > 0.0 => ds.provenance.sigma_eps,
        None => 1.0,
    };
    cfg.seed = derive_seed(a.seed, &[2]);
    let (tr, va, te) = (ds.train(), ds.val(), ds.test());
    if tr.is_empty() {
        return Err(CliError::Usage(format!("{} has no training rows", a.data.display())));
    }

    let net = NetSpec::new(Inputs::DIM, &a.hidden, derive_seed(a.seed, &[1]));
    let model = build(kind, &ModelSetup::default(), Some(&net))?;
    let slug = format!("{}_seed{}", kind.label().replace('*', "star").to_lowercase(), a.seed);
    let loss_path = a.out.join(format!("{slug}_loss.csv"));
    let (trained, report) = match fit(&model, &tr, &va, &cfg) {
        Ok(ok) => ok,
        Err(Error::Diverged { epoch, report }) => {
            write_loss_curve(&loss_path, &report)?;
            return Err(CliError::Runtime(format!(
                "training diverged at epoch {epoch}; partial loss curve in {}",
                loss_path.display()
            )));
        }
        Err(e) => return Err(e.into()),
    };
    write_loss_curve(&loss_path, &report)?;
    let ckpt_path = a.out.join(format!("{slug}_checkpoint.json"));
    let mut w = create(&ckpt_path)?;
    writeln!(w, "{}", checkpoint(&trained)?)?;
    w.flush()?;

    let mae_v = mae_against(&trained, &va, |o| o.y)?;
    let mae_t = mae_against(&trained, &te, |o| o.q_true)?;
    println!(
        "{kind}: epochs {} (best {}), MAE_v {}, MAE_t {}",
        report.epochs_run,
        report.best_epoch,
        show(mae_v),
        show(mae_t)
    );
    println!("wrote {} and {}", ckpt_path.display(), loss_path.display());
    Ok(())
}

fn print_summary(summary: &[QuantileSummary]) {
    for s in summary.iter().filter(|s| s.metric == "mae_test" || s.metric == "ratio") {
        let p50 = s.quantiles.map_or_else(|| "-".into(), |q| format!("{:.4}", q.p50));
        println!(
            "{:<4} {}={:<8} {:<9} p50 {p50} ({}/{} trials)",
            s.model.label(),
            s.control.name(),
            s.control.to_string(),
            s.metric,
            s.n_ok,
            s.n_total
        );
    }
}

fn warn_flagged(summary: &[QuantileSummary]) {
    for s in summary.iter().filter(|s| s.flagged && s.metric == "mae_test") {
        eprintln!(
            "warning: {} at {}={} kept only {} of {} trials",
            s.model.label(),
            s.control.name(),
            s.control,
            s.n_ok,
            s.n_total
        );
    }
}

pub fn run_exp(a: &RunExpArgs) -> CliResult {
    let mut run = load_run_file(&a.config)?;
    if let Some(t) = a.trials {
        run.experiment.trials = t;
    }
    if let Some(s) = a.seed {
        run.experiment.seed = s;
    }
    let out: PathBuf = a.out.clone().unwrap_or(run.output_dir);
    let jobs = a.jobs.or(run.jobs);
    if jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    run.experiment.validate()?;

    let result = run_experiment(&run.experiment, jobs)?;
    let written = write_outputs(&result, &out)?;
    let summary = result.summary()?;
    match result.table()? {
        Some(table) => print!("{table}"),
        None => print_summary(&summary),
    }
    warn_flagged(&summary);
    for p in &written {
        println!("wrote {}", p.display());
    }
    if result.trials.iter().all(|r| r.diverged()) {
        return Err(CliError::Runtime("every trial diverged".into()));
    }
    Ok(())
}

pub fn report(a: &ReportArgs) -> CliResult {
    let (header, rows) = read_tidy(&a.tidy)?;
    if rows.is_empty() {
        return Err(CliError::Usage(format!("{} has no result rows", a.tidy.display())));
    }
    let dir = match &a.out {
        Some(d) => d.clone(),
        None => a.tidy.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let id = header.experiment;
    let summary = aggregate(&rows)?;
    let path = dir.join(format!("{id}_quantiles.csv"));
    let mut w = create(&path)?;
    write_quantiles(&header, &summary, &mut w)?;
    w.flush()?;
    println!("wrote {}", path.display());
    if matches!(id, ExperimentId::Exp3 | ExperimentId::Exp4) {
        let table = table_from_rows(&rows)?;
        let path = dir.join(format!("{id}_table.csv"));
        let mut w = create(&path)?;
        write_table(&header, &table, &mut w)?;
        w.flush()?;
        print!("{table}");
        println!("wrote {}", path.display());
    } else {
        print_summary(&summary);
    }
    warn_flagged(&summary);
    Ok(())
}
