//! Aggregates per-seed metrics files into mean +- std learning-curve files
//! ready for any external plotter.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::bench::metrics::{mean_std, read_metrics, MetricsRecord};
use crate::error::{Error, Result};

/// One aggregated curve row.
#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub episode: usize,
    pub success_mean: f64,
    pub success_std: f64,
    pub return_mean: f64,
    pub return_std: f64,
    pub n_seeds: usize,
}

/// Merges metrics files (one per seed) into per-eval-point statistics. All
/// files must share the same episode grid; a mismatch is an alignment error.
pub fn aggregate_curves(metric_files: &[PathBuf]) -> Result<Vec<CurvePoint>> {
    if metric_files.is_empty() {
        return Err(Error::rejected("no metrics files to aggregate"));
    }
    let per_seed: Vec<Vec<MetricsRecord>> = metric_files
        .iter()
        .map(|p| read_metrics(p))
        .collect::<Result<_>>()?;
    let grid: Vec<usize> = per_seed[0].iter().map(|r| r.episode).collect();
    for (i, records) in per_seed.iter().enumerate() {
        let this: Vec<usize> = records.iter().map(|r| r.episode).collect();
        if this != grid {
            return Err(Error::Alignment(format!(
                "{} has eval grid {:?}, expected {:?}",
                metric_files[i].display(),
                this,
                grid
            )));
        }
    }
    let mut out = Vec::with_capacity(grid.len());
    for (row, &episode) in grid.iter().enumerate() {
        let successes: Vec<f64> = per_seed.iter().map(|s| s[row].success_rate()).collect();
        let returns: Vec<f64> = per_seed.iter().map(|s| s[row].eval_return_mean).collect();
        let (success_mean, success_std) = mean_std(&successes);
        let (return_mean, return_std) = mean_std(&returns);
        out.push(CurvePoint {
            episode,
            success_mean,
            success_std,
            return_mean,
            return_std,
            n_seeds: per_seed.len(),
        });
    }
    Ok(out)
}

/// Writes curve rows as commented CSV (std is the population convention).
pub fn write_curves(path: &Path, points: &[CurvePoint]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# awet-curves v1 (std = population over seeds)")?;
    writeln!(
        w,
        "# columns: episode,success_mean,success_std,return_mean,return_std,n_seeds"
    )?;
    for p in points {
        writeln!(
            w,
            "{},{:.6},{:.6},{:.6},{:.6},{}",
            p.episode, p.success_mean, p.success_std, p.return_mean, p.return_std, p.n_seeds
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Finds `seed_*/metrics.csv` under a variant directory, in seed order.
pub fn find_metric_files(variant_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut found: Vec<(u32, PathBuf)> = Vec::new();
    for entry in std::fs::read_dir(variant_dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().to_string();
        if let Some(idx) = name.strip_prefix("seed_") {
            if let Ok(k) = idx.parse::<u32>() {
                let metrics = entry.path().join("metrics.csv");
                if metrics.exists() {
                    found.push((k, metrics));
                }
            }
        }
    }
    found.sort_by_key(|(k, _)| *k);
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::metrics::{write_metrics, RunIdentity};

    fn write_fixture(dir: &Path, seed: u32, successes: &[u32]) -> PathBuf {
        let id = RunIdentity {
            task: "reach_point".into(),
            variant: "full".into(),
            algorithm: "awet".into(),
            seed_index: seed,
            cell_seed: seed as u64,
            n_demos: 10,
            dataset_digest: 0,
        };
        let records: Vec<MetricsRecord> = successes
            .iter()
            .enumerate()
            .map(|(i, &s)| MetricsRecord {
                episode: (i + 1) * 20,
                eval_return_mean: -(s as f64),
                successes: s,
                eval_episodes: 100,
                discards: 0,
                a_a_mean: 0.5,
            })
            .collect();
        let path = dir.join(format!("m{seed}.csv"));
        write_metrics(&path, &id, &records).unwrap();
        path
    }

    #[test]
    fn aggregates_mean_and_population_std() {
        let dir = std::env::temp_dir().join("awet_curves_test");
        std::fs::create_dir_all(&dir).unwrap();
        let a = write_fixture(&dir, 0, &[80, 90]);
        let b = write_fixture(&dir, 1, &[100, 100]);
        let points = aggregate_curves(&[a, b]).unwrap();
        assert_eq!(points.len(), 2);
        assert!((points[0].success_mean - 0.9).abs() < 1e-12);
        assert!((points[0].success_std - 0.1).abs() < 1e-12);
        assert_eq!(points[0].n_seeds, 2);
    }

    #[test]
    fn single_seed_gives_zero_std() {
        let dir = std::env::temp_dir().join("awet_curves_test");
        std::fs::create_dir_all(&dir).unwrap();
        let a = write_fixture(&dir, 2, &[70, 80, 90]);
        let points = aggregate_curves(&[a]).unwrap();
        assert_eq!(points.len(), 3);
        assert!(points.iter().all(|p| p.success_std == 0.0));
    }

    #[test]
    fn mismatched_grids_are_an_alignment_error() {
        let dir = std::env::temp_dir().join("awet_curves_test");
        std::fs::create_dir_all(&dir).unwrap();
        let a = write_fixture(&dir, 3, &[80, 90]);
        let b = write_fixture(&dir, 4, &[50, 60, 70]);
        assert!(matches!(
            aggregate_curves(&[a, b]),
            Err(Error::Alignment(_))
        ));
    }
}
