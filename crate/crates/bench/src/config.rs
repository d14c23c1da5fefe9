use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("invalid dimension list {0:?}: expected a comma list or start:step:count")]
    DimList(String),
    #[error("dimensions must be positive")]
    ZeroDim,
    #[error("batch size must be positive")]
    ZeroBatch,
    #[error("block width must be a positive integer or `auto`, got {0:?}")]
    BlockWidth(String),
    #[error("reps must be at least 1")]
    ZeroReps,
    #[error("unknown {kind} {value:?}; expected one of {expected}")]
    Unknown {
        kind: &'static str,
        value: String,
        expected: &'static str,
    },
    #[error("empty {0} list")]
    Empty(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algo {
    Sequential,
    DenseParallel,
    Fasth,
}

impl Algo {
    pub const ALL: [Algo; 3] = [Algo::Sequential, Algo::DenseParallel, Algo::Fasth];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Sequential => "sequential",
            Algo::DenseParallel => "dense-parallel",
            Algo::Fasth => "fasth",
        }
    }
}

impl FromStr for Algo {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| ConfigError::Unknown {
                kind: "algo",
                value: s.into(),
                expected: "sequential, dense-parallel, fasth",
            })
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Mul,
    Inverse,
    Det,
    Exp,
    Cayley,
    Layer,
}

impl Op {
    pub const ALL: [Op; 6] = [Op::Mul, Op::Inverse, Op::Det, Op::Exp, Op::Cayley, Op::Layer];

    pub fn name(self) -> &'static str {
        match self {
            Op::Mul => "mul",
            Op::Inverse => "inverse",
            Op::Det => "det",
            Op::Exp => "exp",
            Op::Cayley => "cayley",
            Op::Layer => "layer",
        }
    }
}

impl FromStr for Op {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Op::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| ConfigError::Unknown {
                kind: "op",
                value: s.into(),
                expected: "mul, inverse, det, exp, cayley, layer",
            })
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockWidth {
    Fixed(usize),
    /// Timed search over candidate widths, cached per `(d, m)`.
    Auto,
}

impl FromStr for BlockWidth {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        if s == "auto" {
            return Ok(BlockWidth::Auto);
        }
        match s.parse::<usize>() {
            Ok(k) if k > 0 => Ok(BlockWidth::Fixed(k)),
            _ => Err(ConfigError::BlockWidth(s.into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub dims: Vec<usize>,
    pub batch: usize,
    pub block_width: BlockWidth,
    pub algos: Vec<Algo>,
    pub ops: Vec<Op>,
    pub reps: usize,
    pub seed: u64,
    /// Worker threads; 0 means all available cores.
    pub threads: usize,
    pub out: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            dims: vec![64],
            batch: 32,
            block_width: BlockWidth::Auto,
            algos: Algo::ALL.to_vec(),
            ops: vec![Op::Mul],
            reps: 100,
            seed: 0,
            threads: 0,
            out: None,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.dims.is_empty() {
            return Err(ConfigError::Empty("dimension"));
        }
        if self.dims.contains(&0) {
            return Err(ConfigError::ZeroDim);
        }
        if self.batch == 0 {
            return Err(ConfigError::ZeroBatch);
        }
        if self.reps == 0 {
            return Err(ConfigError::ZeroReps);
        }
        if self.algos.is_empty() {
            return Err(ConfigError::Empty("algo"));
        }
        if self.ops.is_empty() {
            return Err(ConfigError::Empty("op"));
        }
        Ok(())
    }
}

/// Parses `64,128,256` or `start:step:count` (e.g. `64:64:48`).
pub fn parse_dims(s: &str) -> Result<Vec<usize>, ConfigError> {
    let bad = || ConfigError::DimList(s.into());
    let dims: Vec<usize> = if s.contains(':') {
        let parts: Vec<usize> = s
            .split(':')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let [start, step, count] = parts[..] else {
            return Err(bad());
        };
        if count == 0 {
            return Err(bad());
        }
        (0..count).map(|i| start + i * step).collect()
    } else {
        s.split(',')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if dims.contains(&0) {
        return Err(ConfigError::ZeroDim);
    }
    Ok(dims)
}

pub fn parse_list<T: FromStr<Err = ConfigError>>(s: &str) -> Result<Vec<T>, ConfigError> {
    s.split(',').map(|p| p.trim().parse()).collect()
}
