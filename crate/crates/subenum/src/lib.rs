//! Subgraph enumeration over key-value adjacency storage.
//!
//! Pattern graphs are compiled into backtracking execution plans (a small
//! instruction set over adjacency sets), optimized, and interpreted over a
//! data graph held in a key-value store behind an LRU cache. Batch mode
//! enumerates all isomorphic subgraphs of a static undirected graph; stream
//! mode maintains exact per-step appearing/disappearing match sets of a
//! directed graph under edge insertions and deletions.

pub mod cost;
pub mod exec;
pub mod gen;
pub mod graph;
pub mod oracle;
pub mod plan;
pub mod store;
pub mod stream;

use thiserror::Error;

pub type VertexId = u32;

/// Branch sign of a delta result: appearing (+) or disappearing (-).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("pattern has {n} vertices; brute-force automorphism search is capped at {cap}")]
    PatternTooLarge { n: usize, cap: usize },
    #[error("data graph has {n} vertices; the reference enumerator is capped at {cap}")]
    OracleTooLarge { n: usize, cap: usize },
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("invalid matching order: {0}")]
    InvalidOrder(String),
    #[error("store backend failure on key {key}: {msg}")]
    Backend { key: VertexId, msg: String },
    #[error("inconsistent update: {0}")]
    InconsistentUpdate(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
