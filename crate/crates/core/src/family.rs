//! Decreasing families of traversed-edge sets and the enumerations built on them.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeSubset, Graph};

/// Default cap on the number of admissible edge sets discovered.
pub const DEFAULT_SET_CAP: usize = 1 << 20;
/// Default cap on the number of renewal sequences.
pub const DEFAULT_SEQUENCE_CAP: usize = 1_000_000;

/// Declarative description of a decreasing family.
///
/// Every member is drawn from the universe of connected edge sets with an
/// edge at the start vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "target", rename_all = "snake_case")]
pub enum FamilySpec {
    /// Every admissible set except the full edge set; stops at the edge cover time.
    EdgeCover,
    /// Admissible subsets of the target; stops on the first step outside it.
    Hitting(EdgeSubset),
    /// Admissible sets missing some target edge; stops once the target is covered.
    SubgraphCover(EdgeSubset),
    /// An explicit list, checked for downward closure.
    Custom(Vec<EdgeSubset>),
}

impl FamilySpec {
    /// Membership for a set already known to be admissible.
    pub fn admits(&self, g: &Graph, set: EdgeSubset) -> bool {
        match self {
            FamilySpec::EdgeCover => set != g.full_set(),
            FamilySpec::Hitting(target) => set.is_subset(*target),
            FamilySpec::SubgraphCover(target) => !target.difference(set).is_empty(),
            FamilySpec::Custom(members) => members.contains(&set),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::EdgeCover => "cover",
            FamilySpec::Hitting(_) => "hitting",
            FamilySpec::SubgraphCover(_) => "subcover",
            FamilySpec::Custom(_) => "custom",
        }
    }
}

/// A validated, materialized family.
#[derive(Debug, Clone)]
pub struct Family {
    spec: FamilySpec,
    members: Vec<EdgeSubset>,
    lookup: HashSet<EdgeSubset>,
}

impl Family {
    pub fn new(g: &Graph, spec: FamilySpec) -> Result<Family> {
        let members = enumerate_family(g, &spec)?;
        let lookup = members.iter().copied().collect();
        Ok(Family { spec, members, lookup })
    }

    pub fn spec(&self) -> &FamilySpec {
        &self.spec
    }

    /// Members in ascending bitmask order.
    pub fn members(&self) -> &[EdgeSubset] {
        &self.members
    }

    pub fn contains(&self, set: EdgeSubset) -> bool {
        self.lookup.contains(&set)
    }
}

/// Every connected edge set touching the start vertex, ascending by bitmask.
pub fn enumerate_s(g: &Graph) -> Result<Vec<EdgeSubset>> {
    enumerate_s_with_cap(g, DEFAULT_SET_CAP)
}

pub fn enumerate_s_with_cap(g: &Graph, cap: usize) -> Result<Vec<EdgeSubset>> {
    let mut seen: HashSet<EdgeSubset> = HashSet::new();
    let mut queue: VecDeque<EdgeSubset> = VecDeque::new();
    for e in g.incident(g.start_vertex()).iter() {
        let set = EdgeSubset::singleton(e);
        if seen.insert(set) {
            queue.push_back(set);
        }
    }
    while let Some(set) = queue.pop_front() {
        for e in g.frontier(set).iter() {
            let grown = set.with(e);
            if seen.insert(grown) {
                if seen.len() > cap {
                    return Err(Error::FamilyTooLarge { cap });
                }
                queue.push_back(grown);
            }
        }
    }
    let mut out: Vec<EdgeSubset> = seen.into_iter().collect();
    out.sort_unstable();
    Ok(out)
}

/// Materializes the family described by `spec`, checking that it is nonempty
/// and downward closed.
pub fn enumerate_family(g: &Graph, spec: &FamilySpec) -> Result<Vec<EdgeSubset>> {
    let members = match spec {
        FamilySpec::Custom(list) => {
            let mut members = list.clone();
            members.sort_unstable();
            members.dedup();
            if let Some(bad) = members.iter().find(|&&m| !g.is_admissible(m)) {
                return Err(Error::NotInFamilyUniverse(bad.bits()));
            }
            let lookup: HashSet<EdgeSubset> = members.iter().copied().collect();
            // One-edge removals suffice: any admissible subset of a member is
            // reachable by peeling edges while staying admissible.
            for &m in &members {
                for e in m.iter() {
                    let below = m.without(e);
                    if g.is_admissible(below) && !lookup.contains(&below) {
                        return Err(Error::NotDecreasing { missing: below.bits() });
                    }
                }
            }
            members
        }
        _ => enumerate_s(g)?
            .into_iter()
            .filter(|&set| spec.admits(g, set))
            .collect(),
    };
    if members.is_empty() {
        return Err(Error::EmptyFamily);
    }
    Ok(members)
}

/// All nested growth sequences `E_1 ⊂ … ⊂ E_b = E` with `E_1 = {first_edge}`,
/// each step adding one edge adjacent to the current set.
pub fn enumerate_renewal_sequences(g: &Graph, first_edge: usize) -> Result<Vec<Vec<EdgeSubset>>> {
    enumerate_renewal_sequences_with_cap(g, first_edge, DEFAULT_SEQUENCE_CAP)
}

pub fn enumerate_renewal_sequences_with_cap(
    g: &Graph,
    first_edge: usize,
    cap: usize,
) -> Result<Vec<Vec<EdgeSubset>>> {
    if first_edge >= g.edge_count() || !g.incident(g.start_vertex()).contains(first_edge) {
        return Err(Error::InvalidArgument(format!(
            "edge {first_edge} is not incident to the start vertex"
        )));
    }
    fn grow(
        g: &Graph,
        prefix: &mut Vec<EdgeSubset>,
        out: &mut Vec<Vec<EdgeSubset>>,
        cap: usize,
    ) -> Result<()> {
        let current = *prefix.last().expect("prefix starts nonempty");
        if current == g.full_set() {
            if out.len() == cap {
                return Err(Error::FamilyTooLarge { cap });
            }
            out.push(prefix.clone());
            return Ok(());
        }
        for e in g.frontier(current).iter() {
            prefix.push(current.with(e));
            grow(g, prefix, out, cap)?;
            prefix.pop();
        }
        Ok(())
    }
    let mut out = Vec::new();
    grow(g, &mut vec![EdgeSubset::singleton(first_edge)], &mut out, cap)?;
    Ok(out)
}

/// Behaviour of the critical exponent as the reinforcement factor tends to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Delta0Class {
    Diverges,
    Finite,
}

/// `Finite` iff some member contains the full neighborhood `E_e` of one of its edges.
pub fn classify_delta0(g: &Graph, spec: &FamilySpec) -> Result<Delta0Class> {
    let members = enumerate_family(g, spec)?;
    Ok(classify_members(g, &members))
}

pub(crate) fn classify_members(g: &Graph, members: &[EdgeSubset]) -> Delta0Class {
    let finite = members
        .iter()
        .any(|&m| m.iter().any(|e| g.edge_neighborhood(e).is_subset(m)));
    if finite {
        Delta0Class::Finite
    } else {
        Delta0Class::Diverges
    }
}
