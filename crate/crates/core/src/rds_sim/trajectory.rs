use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textio::{parse_header, parse_num};

/// Recorded sample path. States are stored flat, row per sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    states: Vec<f64>,
    dim: usize,
    dt: f64,
    seed: u64,
    burn_in_dropped: usize,
}

impl Trajectory {
    pub fn new(states: Vec<f64>, dim: usize, dt: f64, seed: u64, burn_in_dropped: usize) -> Result<Self> {
        if dim == 0 || !states.len().is_multiple_of(dim) {
            return Err(Error::Shape(format!(
                "{} values do not split into states of dimension {dim}",
                states.len()
            )));
        }
        if states.len() / dim < 2 {
            return Err(Error::InsufficientLength { needed: 2, available: states.len() / dim });
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("dt must be > 0, got {dt}")));
        }
        Ok(Self { states, dim, dt, seed, burn_in_dropped })
    }

    pub fn len(&self) -> usize {
        self.states.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn burn_in_dropped(&self) -> usize {
        self.burn_in_dropped
    }

    pub fn state(&self, t: usize) -> &[f64] {
        &self.states[t * self.dim..(t + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.states.chunks_exact(self.dim)
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }
}

/// Writes `# trajectory dt=… seed=… dim=… burn_in=… samples=…` followed by
/// one comma-separated row per sample at 17 significant digits.
pub fn write_trajectory<W: Write>(traj: &Trajectory, mut out: W) -> Result<()> {
    writeln!(
        out,
        "# trajectory dt={:?} seed={} dim={} burn_in={} samples={}",
        traj.dt,
        traj.seed,
        traj.dim,
        traj.burn_in_dropped,
        traj.len()
    )?;
    let mut line = String::new();
    for state in traj.iter() {
        line.clear();
        for (i, v) in state.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&format!("{v:.16e}"));
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trajectory<R: BufRead>(input: R) -> Result<Trajectory> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty trajectory file".into()))??;
    let fields = parse_header(&header, "# trajectory")?;
    let get = |key: &str| {
        fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Parse(format!("trajectory header lacks `{key}`")))
    };
    let dt: f64 = parse_num(get("dt")?, "dt")?;
    let seed: u64 = parse_num(get("seed")?, "seed")?;
    let dim: usize = parse_num(get("dim")?, "dim")?;
    let burn_in: usize = parse_num(get("burn_in")?, "burn_in")?;

    let mut states = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let before = states.len();
        for tok in line.split(',') {
            states.push(parse_num::<f64>(tok.trim(), "state value")?);
        }
        if states.len() - before != dim {
            return Err(Error::Parse(format!(
                "row {} has {} values, header says dim={dim}",
                lineno + 2,
                states.len() - before
            )));
        }
    }
    if let Ok(n) = get("samples") {
        let n: usize = parse_num(n, "samples")?;
        if dim > 0 && n != states.len() / dim {
            return Err(Error::Parse(format!(
                "header declares {n} samples, file has {}",
                states.len() / dim
            )));
        }
    }
    Trajectory::new(states, dim, dt, seed, burn_in)
}
