//! File formats: OBJ meshes, `.mseq` body motion, stats CSV, run
//! configuration and debug dumps.

mod config;
mod dump;
mod mseq;
mod obj;
mod stats;

pub use config::{read_config, write_config, RunConfig};
pub use dump::{write_contours_obj, write_graph_json, GraphDump};
pub use mseq::{read_motion_sequence, write_motion_sequence, MotionSequence};
pub use obj::{parse_obj, read_obj, write_obj, write_obj_to, ObjMesh};
pub use stats::{read_stats_csv, stats_header, write_stats_csv, StatsRecord};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: face with {corners} corners cannot be triangulated")]
    NonTriangulableFace { line: usize, corners: usize },
    #[error("not a motion sequence (bad magic bytes)")]
    BadMagic,
    #[error("file ends early while reading {what}")]
    TruncatedFile { what: &'static str },
    #[error("count mismatch: {0}")]
    CountMismatch(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Mesh(#[from] crate::mesh::MeshError),
}

impl IoError {
    pub(crate) fn at(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> IoError {
        let path = path.into();
        move |source| IoError::Io { path, source }
    }
}
