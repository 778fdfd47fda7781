//! Subcommand implementations. Each returns the text it would print on
//! stdout so tests can inspect it; progress goes to stderr.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use tkgmlp::data::{chronological_split, load_csv, synth_generate, write_csv, Dataset};
use tkgmlp::trainer::{grid_search, train_with, GridResult, GridSpace, LOG_HEADER};
use tkgmlp::{evaluate, FeatureEncoder, MetricReport, ModelConfig, TkgmlpModel, TrainOutcome};

use crate::checkpoint::{Checkpoint, FORMAT, VERSION};
use crate::config::{DataSource, RunConfig};
use crate::CliError;

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const TRAIN_LOG_FILE: &str = "train_log.tsv";
pub const GRID_FILE: &str = "grid.tsv";
pub const ORACLE_FILE: &str = "oracle.csv";
pub const SPLIT_NAMES: [&str; 3] = ["train", "valid", "test"];

/// `TKGMLP_LOG=off` silences per-epoch progress on stderr.
pub fn progress_enabled() -> bool {
    !matches!(std::env::var("TKGMLP_LOG").as_deref(), Ok("off") | Ok("quiet") | Ok("0"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl std::str::FromStr for Split {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "valid" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            _ => Err(format!("unknown split '{s}' (train | valid | test)")),
        }
    }
}

pub struct Splits {
    pub train: Dataset,
    pub valid: Dataset,
    pub test: Option<Dataset>,
    /// True probabilities per split, synthetic data only.
    pub oracle: Option<[Vec<f64>; 3]>,
}

impl Splits {
    pub fn get(&self, split: Split) -> Result<&Dataset, CliError> {
        match split {
            Split::Train => Ok(&self.train),
            Split::Valid => Ok(&self.valid),
            Split::Test => self
                .test
                .as_ref()
                .ok_or_else(|| CliError::Config("config defines no test split".into())),
        }
    }
}

pub fn load_splits(cfg: &RunConfig) -> Result<Splits, CliError> {
    let d = &cfg.data;
    match d.source {
        DataSource::Synth => {
            let sc = d.synth.clone().unwrap_or_default();
            let data = synth_generate(&sc.task_spec(cfg.seed), sc.rows)?;
            let (train, valid, test) = chronological_split(&data.dataset, d.fractions)?;
            // Time is the row index, so the split keeps row order.
            let (a, b) = (train.n_rows(), train.n_rows() + valid.n_rows());
            let c = b + test.n_rows();
            let o = &data.oracle;
            Ok(Splits {
                train,
                valid,
                test: Some(test),
                oracle: Some([o[..a].to_vec(), o[a..b].to_vec(), o[b..c].to_vec()]),
            })
        }
        DataSource::Csv => {
            let schema = d.schema();
            if let Some(path) = &d.path {
                let ds = load_csv(path, &schema)?;
                let (train, valid, test) = chronological_split(&ds, d.fractions)?;
                return Ok(Splits {
                    train,
                    valid,
                    test: Some(test),
                    oracle: None,
                });
            }
            let load = |p: &Option<PathBuf>| p.as_ref().map(|p| load_csv(p, &schema)).transpose();
            let (train, valid) = match (load(&d.train)?, load(&d.valid)?) {
                (Some(t), Some(v)) => (t, v),
                _ => return Err(CliError::Config("train and valid paths required".into())),
            };
            Ok(Splits {
                train,
                valid,
                test: load(&d.test)?,
                oracle: None,
            })
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))
}

/// Writes the three splits and the per-row true probabilities.
pub fn cmd_synth(cfg: &RunConfig, out_dir: &Path) -> Result<String, CliError> {
    if cfg.data.source != DataSource::Synth {
        return Err(CliError::Config("synth needs data.source = \"synth\"".into()));
    }
    let splits = load_splits(cfg)?;
    create_dir(out_dir)?;
    let parts = [&splits.train, &splits.valid, splits.get(Split::Test)?];
    let oracle = splits.oracle.as_ref().expect("synthetic data has an oracle");
    let mut out = String::new();
    let mut w = std::io::BufWriter::new(fs::File::create(out_dir.join(ORACLE_FILE))?);
    writeln!(w, "split,t,p")?;
    for ((name, ds), probs) in SPLIT_NAMES.iter().zip(parts).zip(oracle) {
        let path = out_dir.join(format!("{name}.csv"));
        write_csv(ds, &path)?;
        let t = ds.time.as_ref().expect("synthetic rows carry time");
        for (ti, p) in t.iter().zip(probs) {
            writeln!(w, "{name},{ti},{p}")?;
        }
        let bayes = evaluate(probs, &ds.labels).ok();
        let _ = writeln!(
            out,
            "{name}: rows={} positives={} bayes_ks_pct={} bayes_auc_pct={}",
            ds.n_rows(),
            ds.positives(),
            bayes.as_ref().map_or("n/a".into(), |r| r.percent_strings().0),
            bayes.as_ref().map_or("n/a".into(), |r| r.percent_strings().1),
        );
    }
    w.flush()?;
    Ok(out)
}

pub struct FitResult {
    pub checkpoint: Checkpoint,
    pub outcome: TrainOutcome,
    pub test: Option<MetricReport>,
}

fn model_config(cfg: &RunConfig, encoder: &FeatureEncoder) -> ModelConfig {
    ModelConfig {
        input_dim: encoder.output_dim(),
        ..cfg.model.clone()
    }
}

/// Fits the encoder on the training split, trains, and scores the test
/// split (if any) with the restored best weights.
pub fn fit(cfg: &RunConfig, splits: &Splits, progress: bool) -> Result<FitResult, CliError> {
    let encoder = FeatureEncoder::fit(&splits.train, cfg.encoder.kind, cfg.encoder.n_bins)?;
    let x_train = encoder.transform(&splits.train)?;
    let x_valid = encoder.transform(&splits.valid)?;
    let tcfg = cfg.effective_train();
    let mut model = TkgmlpModel::new(model_config(cfg, &encoder), cfg.seed)?;
    if progress {
        eprintln!("{LOG_HEADER}\telapsed_s");
    }
    let outcome = train_with(
        &mut model,
        &x_train,
        &splits.train.labels,
        &x_valid,
        &splits.valid.labels,
        &tcfg,
        |rec| {
            if progress {
                eprintln!("{}", rec.progress_line());
            }
        },
    )?;
    let test = match &splits.test {
        Some(ds) => {
            let x = encoder.transform(ds)?;
            Some(evaluate(&model.predict_chunked(&x, tcfg.eval_chunk)?, &ds.labels)?)
        }
        None => None,
    };
    let checkpoint = Checkpoint {
        format: FORMAT.into(),
        version: VERSION,
        config: RunConfig {
            train: tcfg,
            ..cfg.clone()
        },
        encoder,
        model,
        best_epoch: outcome.best_epoch,
        best_valid_ks: outcome.best_ks,
        best_valid_auc: outcome.best_auc,
        history: outcome.history.clone(),
    };
    Ok(FitResult {
        checkpoint,
        outcome,
        test,
    })
}

pub fn training_log(outcome: &TrainOutcome) -> String {
    let mut s = String::from(LOG_HEADER);
    s.push('\n');
    for r in &outcome.history {
        s.push_str(&r.log_line());
        s.push('\n');
    }
    s
}

fn report_lines(out: &mut String, prefix: &str, r: &MetricReport) {
    let (ks, auc) = r.percent_strings();
    let _ = writeln!(out, "{prefix}ks={}", r.ks);
    let _ = writeln!(out, "{prefix}auc={}", r.auc);
    let _ = writeln!(out, "{prefix}ks_pct={ks}");
    let _ = writeln!(out, "{prefix}auc_pct={auc}");
}

/// Trains and writes `checkpoint.json` and `train_log.tsv` into `out_dir`.
pub fn cmd_fit(cfg: &RunConfig, out_dir: &Path) -> Result<String, CliError> {
    let splits = load_splits(cfg)?;
    let res = fit(cfg, &splits, progress_enabled())?;
    create_dir(out_dir)?;
    res.checkpoint.save(&out_dir.join(CHECKPOINT_FILE))?;
    fs::write(out_dir.join(TRAIN_LOG_FILE), training_log(&res.outcome))?;
    let mut out = String::new();
    let o = &res.outcome;
    let _ = writeln!(out, "epochs_run={}", o.history.len());
    let _ = writeln!(out, "best_epoch={}", o.best_epoch);
    let _ = writeln!(out, "stopped_early={}", o.stopped_early);
    let _ = writeln!(out, "valid_ks={}", o.best_ks);
    let _ = writeln!(out, "valid_auc={}", o.best_auc);
    let _ = writeln!(out, "valid_ks_pct={:.2}", o.best_ks * 100.0);
    let _ = writeln!(out, "valid_auc_pct={:.2}", o.best_auc * 100.0);
    if let Some(t) = &res.test {
        report_lines(&mut out, "test_", t);
    }
    Ok(out)
}

/// Scores a dataset with a saved checkpoint. With `data` the rows come from
/// that CSV (read with the checkpoint's column roles); otherwise `split` is
/// rebuilt from the checkpoint's own data config.
pub fn cmd_evaluate(
    checkpoint: &Path,
    data: Option<&Path>,
    split: Split,
) -> Result<String, CliError> {
    let ck = Checkpoint::load(checkpoint)?;
    let owned;
    let ds = match data {
        Some(p) => {
            owned = load_csv(p, &ck.config.data.schema())?;
            &owned
        }
        None => {
            let splits = load_splits(&ck.config)?;
            owned = splits.get(split)?.clone();
            &owned
        }
    };
    let x = ck.encoder.transform(ds)?;
    let scores = ck.model.predict_chunked(&x, ck.config.train.eval_chunk)?;
    let report = evaluate(&scores, &ds.labels)?;
    let mut out = String::new();
    let _ = writeln!(out, "rows={}", ds.n_rows());
    let _ = writeln!(out, "positives={}", ds.positives());
    report_lines(&mut out, "", &report);
    Ok(out)
}

pub const GRID_HEADER: &str = "rank\tindex\tseed\tkan_layers\tgmlp_layers\tgrid_size\thidden_dim\tdropout\tvalid_ks\tvalid_auc\tbest_epoch\tepochs_run\tstatus";

pub fn grid_table(results: &[GridResult]) -> String {
    let mut s = String::from(GRID_HEADER);
    s.push('\n');
    for (rank, r) in results.iter().enumerate() {
        let p = &r.point;
        let _ = write!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            rank + 1,
            p.index,
            r.seed,
            p.kan_layers,
            p.gmlp_layers,
            p.grid_size,
            p.hidden_dim,
            p.dropout
        );
        match &r.outcome {
            Ok(g) => {
                let _ = writeln!(
                    s,
                    "\t{:.4}\t{:.4}\t{}\t{}\tok",
                    g.valid_ks * 100.0,
                    g.valid_auc * 100.0,
                    g.best_epoch,
                    g.epochs_run
                );
            }
            Err(e) => {
                let msg = e.replace(['\t', '\n'], " ");
                let _ = writeln!(s, "\t\t\t\t\terror: {msg}");
            }
        }
    }
    s
}

/// Trains every point of the grid (the config's `[grid]` table, or the full
/// 96-point space with `full`) and writes the ranked table to `grid.tsv`.
pub fn cmd_grid(cfg: &RunConfig, out_dir: &Path, full: bool) -> Result<String, CliError> {
    let space = if full {
        GridSpace::standard()
    } else {
        cfg.grid
            .clone()
            .ok_or_else(|| CliError::Config("no [grid] table in config (or pass --full)".into()))?
    };
    let splits = load_splits(cfg)?;
    let encoder = FeatureEncoder::fit(&splits.train, cfg.encoder.kind, cfg.encoder.n_bins)?;
    let x_train = encoder.transform(&splits.train)?;
    let x_valid = encoder.transform(&splits.valid)?;
    let progress = progress_enabled();
    if progress {
        eprintln!("training {} configurations", space.len());
    }
    let start = Instant::now();
    let results = grid_search(
        &space,
        &model_config(cfg, &encoder),
        &x_train,
        &splits.train.labels,
        &x_valid,
        &splits.valid.labels,
        &cfg.effective_train(),
    )?;
    if progress {
        eprintln!("grid finished in {:.1}s", start.elapsed().as_secs_f64());
    }
    let table = grid_table(&results);
    create_dir(out_dir)?;
    fs::write(out_dir.join(GRID_FILE), &table)?;
    Ok(table)
}

/// Encodes one split and writes the model-ready matrix plus label as CSV.
/// Uses the checkpoint's fitted encoder when given, otherwise fits one on
/// the training split.
pub fn cmd_encode(
    cfg: &RunConfig,
    checkpoint: Option<&Path>,
    split: Split,
    out: &Path,
) -> Result<String, CliError> {
    let splits = load_splits(cfg)?;
    let encoder = match checkpoint {
        Some(p) => Checkpoint::load(p)?.encoder,
        None => FeatureEncoder::fit(&splits.train, cfg.encoder.kind, cfg.encoder.n_bins)?,
    };
    let ds = splits.get(split)?;
    let x = encoder.transform(ds)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let mut w = std::io::BufWriter::new(fs::File::create(out)?);
    let mut names = encoder.output_names();
    names.push(ds.label_name.clone());
    writeln!(w, "{}", names.join(","))?;
    let mut line = String::new();
    for r in 0..x.rows() {
        line.clear();
        for v in x.row(r) {
            let _ = write!(line, "{v},");
        }
        let _ = write!(line, "{}", ds.labels[r]);
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(format!(
        "rows={}\ncolumns={}\nencoder={}\n",
        x.rows(),
        x.cols(),
        encoder.kind.name()
    ))
}
