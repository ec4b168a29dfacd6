//! Breadth-first reachability from core entry points and sensitive-call
//! counting.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::catalog::{SensitiveApi, SensitiveApiCatalog};
use crate::error::{Error, Result, Warning};
use crate::graph::{IntraPackageCallGraph, MethodRef, Visibility};
use crate::stitch::{EdgeOrigin, InterPackageCallGraph};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryPolicy {
    /// Every method declared in, or calling out of, a core type.
    #[default]
    AllCoreMethods,
    /// Public methods of non-private core types.
    PublicCoreMethods,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryPointSet {
    pub roots: BTreeSet<MethodRef>,
    pub policy: EntryPolicy,
}

pub fn entry_points(
    core: &IntraPackageCallGraph,
    policy: EntryPolicy,
) -> (EntryPointSet, Vec<Warning>) {
    let mut roots = BTreeSet::new();
    for t in &core.types {
        for decl in &t.methods {
            let include = match policy {
                EntryPolicy::AllCoreMethods => true,
                EntryPolicy::PublicCoreMethods => {
                    t.visibility != Visibility::Private && decl.visibility == Visibility::Public
                }
            };
            if include {
                roots.insert(t.method_ref(decl));
            }
        }
    }
    if policy == EntryPolicy::AllCoreMethods {
        // Callers are core methods even when a producer omits them from the
        // type's method list (synthetic methods, lambdas).
        roots.extend(core.call_sites.iter().map(|s| s.caller.clone()));
    }

    let mut warnings = Vec::new();
    if roots.is_empty() {
        warnings.push(Warning::EmptyEntryPoints(core.package.clone()));
    }
    (EntryPointSet { roots, policy }, warnings)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SensitiveHit {
    pub caller: MethodRef,
    pub target: MethodRef,
    pub api: SensitiveApi,
    pub multiplicity: u32,
    /// Caller belongs to the core package.
    pub direct: bool,
    pub origin: EdgeOrigin,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReachabilityResult {
    pub visited: BTreeSet<MethodRef>,
    /// Discovery order.
    pub visit_order: Vec<MethodRef>,
    pub sensitive_hits: Vec<SensitiveHit>,
}

/// Multi-source pre-order BFS. Roots are seeded in sorted order and each
/// method is enqueued at most once; successors follow the graph's canonical
/// edge order, so the visit order is deterministic.
pub fn reach(graph: &InterPackageCallGraph, roots: &EntryPointSet) -> ReachabilityResult {
    let mut successors: HashMap<&MethodRef, Vec<&MethodRef>> = HashMap::new();
    for e in &graph.edges {
        successors.entry(&e.caller).or_default().push(&e.target);
    }

    let mut seen: HashSet<&MethodRef> = HashSet::new();
    let mut visit_order: Vec<MethodRef> = Vec::new();
    let mut queue: VecDeque<&MethodRef> = VecDeque::new();
    for r in &roots.roots {
        if seen.insert(r) {
            visit_order.push(r.clone());
            queue.push_back(r);
        }
    }
    while let Some(node) = queue.pop_front() {
        for next in successors.get(node).into_iter().flatten() {
            if seen.insert(next) {
                visit_order.push((*next).clone());
                queue.push_back(next);
            }
        }
    }

    ReachabilityResult {
        visited: visit_order.iter().cloned().collect(),
        visit_order,
        sensitive_hits: Vec::new(),
    }
}

/// Records one hit per reachable edge whose target is a catalog API. The
/// per-API count is the sum of hit multiplicities.
pub fn count_sensitive(
    graph: &InterPackageCallGraph,
    mut result: ReachabilityResult,
    catalog: &SensitiveApiCatalog,
) -> ReachabilityResult {
    result.sensitive_hits = graph
        .edges
        .iter()
        .filter(|e| result.visited.contains(&e.caller))
        .filter_map(|e| {
            let api = catalog.lookup(&e.target.owner, &e.target.name)?;
            Some(SensitiveHit {
                caller: e.caller.clone(),
                target: e.target.clone(),
                api: api.clone(),
                multiplicity: e.multiplicity,
                direct: e.caller_package == graph.core,
                origin: e.origin,
            })
        })
        .collect();
    result
}

/// `entry_points`, `reach` and `count_sensitive` in sequence.
pub fn analyze(
    graph: &InterPackageCallGraph,
    core: &IntraPackageCallGraph,
    policy: EntryPolicy,
    catalog: &SensitiveApiCatalog,
) -> (ReachabilityResult, Vec<Warning>) {
    let (roots, warnings) = entry_points(core, policy);
    let result = count_sensitive(graph, reach(graph, &roots), catalog);
    (result, warnings)
}

/// A sensitive API called directly from a vulnerable function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DirectHit {
    pub caller: MethodRef,
    pub callee: MethodRef,
    pub api: SensitiveApi,
    pub multiplicity: u32,
}

/// Parses a JSON array of `{owner, name, descriptor?}`.
pub fn parse_vulnerable_functions(source: &[u8]) -> Result<BTreeSet<MethodRef>> {
    let raw: Vec<MethodRef> =
        serde_json::from_slice(source).map_err(|e| Error::from_json(e, source))?;
    raw.into_iter()
        .enumerate()
        .map(|(i, m)| {
            MethodRef::new(m.owner, m.name, m.descriptor)
                .map_err(|e| Error::validation(format!("vulnerable function {i}: {e}")))
        })
        .collect()
}

/// Sensitive APIs among the declared callees of each vulnerable function.
/// No traversal: a helper that calls a sensitive API does not count. A
/// function given without a descriptor matches every overload.
pub fn vulnerable_function_scan(
    graph: &IntraPackageCallGraph,
    vuln_functions: &BTreeSet<MethodRef>,
    catalog: &SensitiveApiCatalog,
) -> (BTreeMap<MethodRef, Vec<DirectHit>>, Vec<Warning>) {
    let mut out = BTreeMap::new();
    let mut warnings = Vec::new();
    for f in vuln_functions {
        let declared = graph.types.iter().any(|t| {
            t.fqn == f.owner
                && t.methods
                    .iter()
                    .any(|d| f.loosely_matches(&t.method_ref(d)))
        });
        let mut is_caller = false;
        let mut hits = Vec::new();
        for site in graph
            .call_sites
            .iter()
            .filter(|s| f.loosely_matches(&s.caller))
        {
            is_caller = true;
            let callee = &site.declared_callee;
            if let Some(api) = catalog.lookup(&callee.owner, &callee.name) {
                hits.push(DirectHit {
                    caller: site.caller.clone(),
                    callee: callee.clone(),
                    api: api.clone(),
                    multiplicity: site.multiplicity,
                });
            }
        }
        if !declared && !is_caller {
            warnings.push(Warning::UnknownVulnerableFunction(f.clone()));
        }
        out.insert(f.clone(), hits);
    }
    (out, warnings)
}
