use std::fs::File;
use std::path::Path;

use crate::energy::{Term, TermValues};
use crate::solver::FrameStats;

use super::IoError;

/// One row of the stats file.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsRecord {
    pub frame: usize,
    pub intersecting_pairs: usize,
    pub ic_loss: f64,
    pub energies: TermValues,
    pub inner_iters: usize,
    pub wall_time_ms: f64,
}

impl StatsRecord {
    /// Drops the wall time unless `timing` is set, so that files from
    /// identical runs compare equal byte for byte.
    pub fn from_stats(s: &FrameStats, timing: bool) -> Self {
        Self {
            frame: s.frame,
            intersecting_pairs: s.intersecting_pairs,
            ic_loss: s.ic_loss,
            energies: s.energies,
            inner_iters: s.inner_iters,
            wall_time_ms: if timing { s.wall_time_ms } else { 0.0 },
        }
    }
}

pub fn stats_header() -> Vec<String> {
    let mut h = vec!["frame".to_string(), "intersecting_pairs".into(), "ic_loss".into()];
    h.extend(Term::ALL.iter().map(|t| format!("e_{}", t.name())));
    h.push("inner_iters".into());
    h.push("wall_time_ms".into());
    h
}

pub fn write_stats_csv(records: &[StatsRecord], path: &Path) -> Result<(), IoError> {
    let file = File::create(path).map_err(IoError::at(path))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(stats_header())?;
    for r in records {
        let mut row = vec![r.frame.to_string(), r.intersecting_pairs.to_string(), format!("{:?}", r.ic_loss)];
        row.extend(Term::ALL.iter().map(|&t| format!("{:?}", r.energies.get(t))));
        row.push(r.inner_iters.to_string());
        row.push(format!("{:?}", r.wall_time_ms));
        w.write_record(&row)?;
    }
    w.flush().map_err(IoError::at(path))?;
    Ok(())
}

pub fn read_stats_csv(path: &Path) -> Result<Vec<StatsRecord>, IoError> {
    let mut reader = csv::Reader::from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != stats_header() {
        return Err(IoError::Parse {
            line: 1,
            message: "unexpected stats header".into(),
        });
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let bad = |field: &str| IoError::Parse {
            line,
            message: format!("bad value in column {field}"),
        };
        let int = |k: usize| row[k].parse::<usize>().map_err(|_| bad(&stats_header()[k]));
        let float = |k: usize| row[k].parse::<f64>().map_err(|_| bad(&stats_header()[k]));
        let mut energies = TermValues::default();
        for (j, &t) in Term::ALL.iter().enumerate() {
            energies.set(t, float(3 + j)?);
        }
        let n = Term::ALL.len();
        out.push(StatsRecord {
            frame: int(0)?,
            intersecting_pairs: int(1)?,
            ic_loss: float(2)?,
            energies,
            inner_iters: int(3 + n)?,
            wall_time_ms: float(4 + n)?,
        });
    }
    Ok(out)
}
