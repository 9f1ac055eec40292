use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use orrw_core::simulate::DEFAULT_SEED;
use orrw_core::{parse_graph, EdgeSubset, Error, FamilySpec, Graph};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyKind {
    Cover,
    Hitting,
    Subcover,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Edge-list file: one `u v` pair per line, `#` starts a comment.
    #[arg(long, global = true)]
    pub graph: Option<PathBuf>,
    /// Start vertex label.
    #[arg(long, global = true)]
    pub start: Option<u64>,
    #[arg(long, global = true, value_enum, default_value = "cover")]
    pub family: FamilyKind,
    /// Target edges for `hitting` and `subcover`, e.g. `0-1,1-2`.
    #[arg(long, global = true)]
    pub target: Option<String>,
    /// File listing custom family members, one comma-separated edge list per line.
    #[arg(long, global = true)]
    pub members: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn load_graph(common: &Common) -> Result<Graph, CliError> {
    let path = common
        .graph
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("--graph is required".into()))?;
    let start = common
        .start
        .ok_or_else(|| Error::InvalidArgument("--start is required".into()))?;
    Ok(parse_graph(&read(path)?, start)?)
}

pub fn load_family(common: &Common, g: &Graph) -> Result<FamilySpec, CliError> {
    let target = || -> Result<EdgeSubset, CliError> {
        let text = common
            .target
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument("--target is required for this family".into()))?;
        Ok(g.parse_edge_tokens(text)?)
    };
    Ok(match common.family {
        FamilyKind::Cover => FamilySpec::EdgeCover,
        FamilyKind::Hitting => FamilySpec::Hitting(target()?),
        FamilyKind::Subcover => FamilySpec::SubgraphCover(target()?),
        FamilyKind::Custom => {
            let path = common
                .members
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("--members is required for a custom family".into()))?;
            let mut sets = Vec::new();
            for line in read(path)?.lines() {
                let line = line.split('#').next().unwrap_or("").trim();
                if !line.is_empty() {
                    sets.push(g.parse_edge_tokens(line)?);
                }
            }
            FamilySpec::Custom(sets)
        }
    })
}

pub fn parse_reals(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("not a number: {t:?}")).into())
        })
        .collect()
}

/// Comma-separated horizons; `a..b` expands to the inclusive range.
pub fn parse_horizons(text: &str) -> Result<Vec<usize>, CliError> {
    let bad = |t: &str| CliError::from(Error::InvalidArgument(format!("not a horizon: {t:?}")));
    let mut out = Vec::new();
    for token in text.split(',').map(str::trim) {
        if let Some((a, b)) = token.split_once("..") {
            let a: usize = a.parse().map_err(|_| bad(token))?;
            let b: usize = b.parse().map_err(|_| bad(token))?;
            out.extend(a..=b);
        } else {
            out.push(token.parse().map_err(|_| bad(token))?);
        }
    }
    Ok(out)
}

pub fn parse_window(text: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::from(Error::InvalidArgument(format!("window must be `i,j`, got {text:?}")));
    let (a, b) = text.split_once(',').ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok((a, b))
}
