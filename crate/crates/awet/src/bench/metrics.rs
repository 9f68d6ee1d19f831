//! Metrics records and the comma-separated files they serialize to.
//!
//! Per-seed metrics file (`metrics.csv`): a `#`-commented header carrying the
//! run identity, then one row per evaluation point with columns
//! `episode,eval_return_mean,success_rate,successes,eval_episodes,discards,a_a_mean`.
//! Every value in the file is deterministic for a given config and seed, so
//! re-running a manifest reproduces the file byte for byte (wall-clock timing
//! goes to the run summary instead).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::trainer::LossReport;

/// One evaluation point of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub episode: usize,
    pub eval_return_mean: f64,
    pub successes: u32,
    pub eval_episodes: u32,
    pub discards: usize,
    pub a_a_mean: f64,
}

impl MetricsRecord {
    /// Exact rational success rate.
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.eval_episodes as f64
    }
}

/// Identity block written into metrics headers.
#[derive(Debug, Clone)]
pub struct RunIdentity {
    pub task: String,
    pub variant: String,
    pub algorithm: String,
    pub seed_index: u32,
    pub cell_seed: u64,
    pub n_demos: usize,
    pub dataset_digest: u64,
}

pub fn write_metrics(path: &Path, id: &RunIdentity, records: &[MetricsRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# awet-metrics v1")?;
    writeln!(
        w,
        "# task={} variant={} algorithm={} seed_index={} cell_seed={:016x} n_demos={} dataset_digest={:016x}",
        id.task, id.variant, id.algorithm, id.seed_index, id.cell_seed, id.n_demos, id.dataset_digest
    )?;
    writeln!(
        w,
        "# columns: episode,eval_return_mean,success_rate,successes,eval_episodes,discards,a_a_mean"
    )?;
    for r in records {
        writeln!(
            w,
            "{},{:.6},{:.6},{},{},{},{:.6}",
            r.episode,
            r.eval_return_mean,
            r.success_rate(),
            r.successes,
            r.eval_episodes,
            r.discards,
            r.a_a_mean
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let p = path.display().to_string();
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (no, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let line_no = no + 1;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(Error::parse(
                &p,
                line_no,
                format!("expected 7 columns, got {}", cols.len()),
            ));
        }
        let bad = |what: &str| Error::parse(&p, line_no, format!("bad {what}"));
        out.push(MetricsRecord {
            episode: cols[0].parse().map_err(|_| bad("episode"))?,
            eval_return_mean: cols[1].parse().map_err(|_| bad("return"))?,
            successes: cols[3].parse().map_err(|_| bad("successes"))?,
            eval_episodes: cols[4].parse().map_err(|_| bad("eval_episodes"))?,
            discards: cols[5].parse().map_err(|_| bad("discards"))?,
            a_a_mean: cols[6].parse().map_err(|_| bad("a_a_mean"))?,
        });
    }
    Ok(out)
}

/// Streams per-update loss reports as commented CSV. Actor columns are empty
/// on updates where the delayed actor did not run.
pub struct LossLogWriter {
    w: BufWriter<File>,
}

impl LossLogWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "# awet-losses v1")?;
        writeln!(
            w,
            "# columns: update,episode,a_a_raw,a_a,c1_ba_raw,c1_ba_clipped,c1_be,c1_total,\
             c2_ba_raw,c2_ba_clipped,c2_be,c2_total,actor_qa,actor_qe,actor_bc,actor_total,\
             gate_discarded,episode_return"
        )?;
        Ok(Self { w })
    }

    pub fn append(&mut self, r: &LossReport) -> Result<()> {
        let actor = match &r.actor {
            Some(a) => format!("{:.6},{:.6},{:.6},{:.6}", a.l_qa, a.l_qe, a.l_bc, a.total),
            None => ",,,".to_string(),
        };
        writeln!(
            self.w,
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{:.6}",
            r.update,
            r.episode,
            r.a_a_raw,
            r.a_a,
            r.critic1.l_ba_raw,
            r.critic1.l_ba_clipped,
            r.critic1.l_be,
            r.critic1.total,
            r.critic2.l_ba_raw,
            r.critic2.l_ba_clipped,
            r.critic2.l_be,
            r.critic2.total,
            actor,
            matches!(r.gate, crate::dtw::GateDecision::TerminateAndDiscard) as u8,
            r.episode_return
        )?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.w.flush()?;
        Ok(())
    }
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
