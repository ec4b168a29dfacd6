//! CWE to OWASP Top 10 mapping with a nearest-ancestor fallback.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OwaspLabel {
    A01,
    A02,
    A03,
    A04,
    A05,
    A06,
    A07,
    A08,
    A09,
    A10,
    /// No mapped ancestor.
    Other,
}

impl OwaspLabel {
    const TOP_TEN: [OwaspLabel; 10] = [
        OwaspLabel::A01,
        OwaspLabel::A02,
        OwaspLabel::A03,
        OwaspLabel::A04,
        OwaspLabel::A05,
        OwaspLabel::A06,
        OwaspLabel::A07,
        OwaspLabel::A08,
        OwaspLabel::A09,
        OwaspLabel::A10,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OwaspLabel::A01 => "A01",
            OwaspLabel::A02 => "A02",
            OwaspLabel::A03 => "A03",
            OwaspLabel::A04 => "A04",
            OwaspLabel::A05 => "A05",
            OwaspLabel::A06 => "A06",
            OwaspLabel::A07 => "A07",
            OwaspLabel::A08 => "A08",
            OwaspLabel::A09 => "A09",
            OwaspLabel::A10 => "A10",
            OwaspLabel::Other => "Other",
        }
    }

    fn parse_top_ten(s: &str) -> Option<OwaspLabel> {
        OwaspLabel::TOP_TEN.into_iter().find(|l| l.as_str() == s)
    }
}

impl fmt::Display for OwaspLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// ChildOf edges between CWEs plus the direct CWE to OWASP assignments.
#[derive(Debug, Clone, Default)]
pub struct CweHierarchy {
    parent_edges: BTreeMap<u32, BTreeSet<u32>>,
    owasp_map: BTreeMap<u32, OwaspLabel>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHierarchy {
    parents: BTreeMap<String, Vec<RawId>>,
    owasp: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawId {
    Num(u32),
    Text(String),
}

fn parse_cwe_id(s: &str) -> Result<u32> {
    let digits = s.trim().strip_prefix("CWE-").unwrap_or(s.trim());
    digits
        .parse()
        .map_err(|_| Error::validation(format!("invalid CWE id {s:?}")))
}

impl CweHierarchy {
    /// Builds a hierarchy from explicit edges, rejecting cycles.
    pub fn new(
        parent_edges: BTreeMap<u32, BTreeSet<u32>>,
        owasp_map: BTreeMap<u32, OwaspLabel>,
    ) -> Result<Self> {
        if owasp_map.values().any(|l| *l == OwaspLabel::Other) {
            return Err(Error::validation("owasp map may only contain A01..A10"));
        }
        let h = CweHierarchy {
            parent_edges,
            owasp_map,
        };
        h.check_acyclic()?;
        Ok(h)
    }

    /// Parses `{"parents": {"23": [22]}, "owasp": {"22": "A01"}}`.
    /// Parent ids may be numbers or strings; `CWE-` prefixes are accepted.
    pub fn load(source: &[u8]) -> Result<Self> {
        let raw: RawHierarchy =
            serde_json::from_slice(source).map_err(|e| Error::from_json(e, source))?;

        let mut parent_edges = BTreeMap::new();
        for (child, parents) in raw.parents {
            let child = parse_cwe_id(&child)?;
            let set: BTreeSet<u32> = parents
                .iter()
                .map(|p| match p {
                    RawId::Num(n) => Ok(*n),
                    RawId::Text(s) => parse_cwe_id(s),
                })
                .collect::<Result<_>>()?;
            parent_edges.insert(child, set);
        }
        let mut owasp_map = BTreeMap::new();
        for (cwe, label) in raw.owasp {
            let cwe = parse_cwe_id(&cwe)?;
            let label = OwaspLabel::parse_top_ten(label.trim()).ok_or_else(|| {
                Error::validation(format!("CWE-{cwe}: invalid OWASP label {label:?}"))
            })?;
            owasp_map.insert(cwe, label);
        }
        CweHierarchy::new(parent_edges, owasp_map)
    }

    pub fn parents(&self, cwe: u32) -> impl Iterator<Item = u32> + '_ {
        self.parent_edges.get(&cwe).into_iter().flatten().copied()
    }

    pub fn direct_label(&self, cwe: u32) -> Option<OwaspLabel> {
        self.owasp_map.get(&cwe).copied()
    }

    fn check_acyclic(&self) -> Result<()> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Active,
            Done,
        }
        let mut marks: BTreeMap<u32, Mark> = BTreeMap::new();
        for &start in self.parent_edges.keys() {
            if marks.contains_key(&start) {
                continue;
            }
            // Iterative DFS; the stack holds (node, remaining parents).
            let mut stack: Vec<(u32, Vec<u32>)> = vec![(start, self.parents(start).collect())];
            marks.insert(start, Mark::Active);
            while let Some((node, pending)) = stack.last_mut() {
                match pending.pop() {
                    Some(next) => match marks.get(&next) {
                        Some(Mark::Active) => {
                            let mut cycle: Vec<String> = stack
                                .iter()
                                .map(|(n, _)| *n)
                                .skip_while(|n| *n != next)
                                .map(|n| format!("CWE-{n}"))
                                .collect();
                            cycle.push(format!("CWE-{next}"));
                            return Err(Error::validation(format!(
                                "cycle in CWE parent relation: {}",
                                cycle.join(" -> ")
                            )));
                        }
                        Some(Mark::Done) => {}
                        None => {
                            marks.insert(next, Mark::Active);
                            let parents = self.parents(next).collect();
                            stack.push((next, parents));
                        }
                    },
                    None => {
                        marks.insert(*node, Mark::Done);
                        stack.pop();
                    }
                }
            }
        }
        Ok(())
    }
}

/// Maps a CWE to its OWASP Top 10 label.
///
/// A direct assignment wins. Otherwise parents are searched breadth-first
/// and the nearest mapped ancestor supplies the label; at equal depth the
/// smallest CWE number wins. With no mapped ancestor the result is
/// [`OwaspLabel::Other`].
pub fn map_cwe_to_owasp(hierarchy: &CweHierarchy, cwe: u32) -> OwaspLabel {
    if let Some(label) = hierarchy.direct_label(cwe) {
        return label;
    }
    let mut seen = BTreeSet::from([cwe]);
    let mut frontier: BTreeSet<u32> = hierarchy.parents(cwe).collect();
    while !frontier.is_empty() {
        // BTreeSet iteration is ascending, so the first hit is the smallest id.
        if let Some(label) = frontier.iter().find_map(|c| hierarchy.direct_label(*c)) {
            return label;
        }
        seen.extend(frontier.iter().copied());
        frontier = frontier
            .iter()
            .flat_map(|c| hierarchy.parents(*c))
            .filter(|p| !seen.contains(p))
            .collect();
    }
    OwaspLabel::Other
}
