//! Class-hierarchy analysis over a package and its dependencies.
//!
//! The types of every member package are merged into one hierarchy. Each
//! call site of each member is then resolved against it: static and special
//! calls bind to the nearest definition up the superclass chain, virtual and
//! interface calls bind to the most-derived definition in every concrete
//! subtype of the declared owner, wherever that subtype lives. Callees whose
//! owner is not part of the universe (JDK types, or dependencies that were
//! not supplied) are kept as external leaves so catalog matching still sees
//! them. A dispatched call with no concrete implementation produces no edge.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Warning};
use crate::graph::{
    merge_type_universe, CallSite, Dispatch, IntraPackageCallGraph, MethodRef, PackageCoordinates,
    TypeRecord, TypeUniverse,
};

pub const INTERGRAPH_SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone)]
pub struct TypeHierarchy {
    universe: TypeUniverse,
    subtypes: BTreeMap<String, BTreeSet<String>>,
}

/// Indexes direct subtypes and rejects cyclic class extension.
pub fn build_hierarchy(universe: TypeUniverse) -> Result<TypeHierarchy> {
    check_extension_cycles(&universe)?;
    let mut subtypes: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for t in universe.types.values() {
        for sup in t.supertypes() {
            subtypes
                .entry(sup.to_owned())
                .or_default()
                .insert(t.fqn.clone());
        }
    }
    Ok(TypeHierarchy { universe, subtypes })
}

fn check_extension_cycles(universe: &TypeUniverse) -> Result<()> {
    // 0 = on the current walk, 1 = known acyclic
    let mut state: HashMap<&str, u8> = HashMap::new();
    for start in universe.types.keys() {
        let mut walk: Vec<&str> = Vec::new();
        let mut cur = Some(start.as_str());
        while let Some(t) = cur {
            match state.get(t) {
                Some(1) => break,
                Some(_) => {
                    let pos = walk.iter().position(|w| *w == t).unwrap_or(0);
                    let mut cycle: Vec<&str> = walk[pos..].to_vec();
                    let min = (0..cycle.len()).min_by_key(|&i| cycle[i]).unwrap_or(0);
                    cycle.rotate_left(min);
                    let first = cycle[0];
                    cycle.push(first);
                    return Err(Error::validation(format!(
                        "cyclic class extension: {}",
                        cycle.join(" -> ")
                    )));
                }
                None => {}
            }
            state.insert(t, 0);
            walk.push(t);
            cur = universe.get(t).and_then(|r| r.superclass.as_deref());
        }
        for w in walk {
            state.insert(w, 1);
        }
    }
    Ok(())
}

impl TypeHierarchy {
    pub fn universe(&self) -> &TypeUniverse {
        &self.universe
    }

    pub fn get(&self, fqn: &str) -> Option<&TypeRecord> {
        self.universe.get(fqn)
    }

    pub fn contains(&self, fqn: &str) -> bool {
        self.universe.contains(fqn)
    }

    pub fn direct_subtypes(&self, fqn: &str) -> impl Iterator<Item = &str> {
        self.subtypes
            .get(fqn)
            .into_iter()
            .flatten()
            .map(String::as_str)
    }

    /// Every transitive subtype, excluding `fqn` itself.
    pub fn all_subtypes(&self, fqn: &str) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        let mut queue: VecDeque<&str> = self.direct_subtypes(fqn).collect();
        while let Some(t) = queue.pop_front() {
            if t != fqn && out.insert(t) {
                queue.extend(self.direct_subtypes(t));
            }
        }
        out
    }

    /// The definitions a receiver of type `start` dispatches to.
    ///
    /// Walks the superclass chain for the first class with a matching
    /// non-abstract declaration; all matching overloads in that class are
    /// returned when the descriptor is absent. If the chain leaves the
    /// universe first, the method is attributed to that external ancestor.
    /// Otherwise default methods are searched in superinterfaces, nearest
    /// level first.
    pub fn lookup_definition(
        &self,
        start: &str,
        name: &str,
        descriptor: Option<&str>,
    ) -> BTreeSet<MethodRef> {
        let mut chain: Vec<&TypeRecord> = Vec::new();
        let mut cur = Some(start);
        while let Some(t) = cur {
            let Some(rec) = self.get(t) else {
                return BTreeSet::from([MethodRef {
                    owner: t.to_owned(),
                    name: name.to_owned(),
                    descriptor: descriptor.map(str::to_owned),
                }]);
            };
            let found: BTreeSet<MethodRef> = rec
                .concrete_definitions(name, descriptor)
                .map(|d| rec.method_ref(d))
                .collect();
            if !found.is_empty() {
                return found;
            }
            chain.push(rec);
            cur = rec.superclass.as_deref();
        }

        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let mut level: Vec<&str> = chain
            .iter()
            .flat_map(|r| r.interfaces.iter().map(String::as_str))
            .filter(|i| seen.insert(i))
            .collect();
        while !level.is_empty() {
            let found: BTreeSet<MethodRef> = level
                .iter()
                .filter_map(|i| self.get(i))
                .flat_map(|r| {
                    r.concrete_definitions(name, descriptor)
                        .map(|d| r.method_ref(d))
                })
                .collect();
            if !found.is_empty() {
                return found;
            }
            level = level
                .iter()
                .filter_map(|i| self.get(i))
                .flat_map(|r| r.interfaces.iter().map(String::as_str))
                .filter(|i| seen.insert(i))
                .collect();
        }
        BTreeSet::new()
    }
}

/// Outcome of resolving one call site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    /// The declared owner is not in the universe.
    External,
    /// Possible targets; empty when nothing implements the callee.
    Targets(BTreeSet<MethodRef>),
}

pub fn resolve_call_site(site: &CallSite, hierarchy: &TypeHierarchy) -> Resolution {
    let callee = &site.declared_callee;
    let Some(owner) = hierarchy.get(&callee.owner) else {
        return Resolution::External;
    };
    let name = callee.name.as_str();
    let descriptor = callee.descriptor.as_deref();
    let targets = match site.dispatch {
        Dispatch::Static | Dispatch::Special => {
            hierarchy.lookup_definition(&owner.fqn, name, descriptor)
        }
        Dispatch::Virtual | Dispatch::Interface => {
            let mut receivers: BTreeSet<&str> = hierarchy
                .all_subtypes(&owner.fqn)
                .into_iter()
                .filter(|s| hierarchy.get(s).is_some_and(TypeRecord::is_concrete))
                .collect();
            if owner.is_concrete() {
                receivers.insert(&owner.fqn);
            }
            receivers
                .into_iter()
                .flat_map(|r| hierarchy.lookup_definition(r, name, descriptor))
                .collect()
        }
    };
    Resolution::Targets(targets)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeOrigin {
    /// Virtual or interface call bound to an in-universe definition.
    ResolvedDispatch,
    /// Static or special call bound to an in-universe definition.
    StaticDirect,
    /// Declared owner outside the universe; target is the declared callee.
    ExternalLeaf,
    /// In-universe receiver whose superclass chain reaches an external
    /// type before a definition is found; target is that external type's
    /// method.
    InheritedExternal,
}

impl EdgeOrigin {
    pub fn is_external(self) -> bool {
        matches!(
            self,
            EdgeOrigin::ExternalLeaf | EdgeOrigin::InheritedExternal
        )
    }
}

/// Field order is the canonical sort order of edges.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedEdge {
    pub caller: MethodRef,
    pub target: MethodRef,
    pub origin: EdgeOrigin,
    pub caller_package: PackageCoordinates,
    /// `None` for targets outside the universe.
    pub target_owner_package: Option<PackageCoordinates>,
    pub multiplicity: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterPackageCallGraph {
    pub core: PackageCoordinates,
    pub members: BTreeSet<PackageCoordinates>,
    pub edges: Vec<ResolvedEdge>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InterGraphDocument {
    schema_version: String,
    core: PackageCoordinates,
    members: Vec<PackageCoordinates>,
    edges: Vec<ResolvedEdge>,
}

impl InterPackageCallGraph {
    pub fn to_json(&self) -> String {
        let doc = InterGraphDocument {
            schema_version: INTERGRAPH_SCHEMA_VERSION.to_owned(),
            core: self.core.clone(),
            members: self.members.iter().cloned().collect(),
            edges: self.edges.clone(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("inter graph serializes");
        s.push('\n');
        s
    }

    pub fn from_json(source: &[u8]) -> Result<Self> {
        let doc: InterGraphDocument =
            serde_json::from_slice(source).map_err(|e| Error::from_json(e, source))?;
        if doc.schema_version != INTERGRAPH_SCHEMA_VERSION {
            return Err(Error::validation(format!(
                "unsupported inter graph schema_version {:?}",
                doc.schema_version
            )));
        }
        let members: BTreeSet<_> = doc.members.into_iter().collect();
        if !members.contains(&doc.core) {
            return Err(Error::validation(
                "inter graph members do not include the core",
            ));
        }
        let mut edges = doc.edges;
        for (i, e) in edges.iter().enumerate() {
            if e.multiplicity == 0 {
                return Err(Error::validation(format!(
                    "edge {i}: multiplicity must be at least 1"
                )));
            }
            if e.origin.is_external() != e.target_owner_package.is_none() {
                return Err(Error::validation(format!(
                    "edge {i}: origin {:?} inconsistent with target package",
                    e.origin
                )));
            }
        }
        edges.sort();
        Ok(InterPackageCallGraph {
            core: doc.core,
            members,
            edges,
        })
    }

    /// Edges whose caller belongs to `package`.
    pub fn edges_from_package<'a>(
        &'a self,
        package: &'a PackageCoordinates,
    ) -> impl Iterator<Item = &'a ResolvedEdge> + 'a {
        self.edges
            .iter()
            .filter(move |e| &e.caller_package == package)
    }
}

const JDK_PREFIXES: [&str; 4] = ["java.", "jdk.", "sun.", "com.sun."];

/// Stitches the core package and its dependencies into one call graph.
///
/// With no dependencies this yields the intra-package view: in-package
/// calls are resolved and everything else is an external leaf.
pub fn stitch(
    core: &IntraPackageCallGraph,
    deps: &[IntraPackageCallGraph],
) -> Result<(InterPackageCallGraph, Vec<Warning>)> {
    let mut members = BTreeSet::from([core.package.clone()]);
    for d in deps {
        if d.package == core.package {
            return Err(Error::validation(format!(
                "core package {} listed among its dependencies",
                core.package
            )));
        }
        if !members.insert(d.package.clone()) {
            return Err(Error::validation(format!(
                "dependency {} listed twice",
                d.package
            )));
        }
    }
    core.validate()?;
    for d in deps {
        d.validate()?;
    }

    let mut all: Vec<IntraPackageCallGraph> = Vec::with_capacity(deps.len() + 1);
    all.push(core.clone());
    all.extend(deps.iter().cloned());
    let (universe, mut warnings) = merge_type_universe(&all)?;
    let hierarchy = build_hierarchy(universe)?;

    let mut edges = Vec::new();
    let mut external_owners = BTreeSet::new();
    for g in &all {
        for site in &g.call_sites {
            match resolve_call_site(site, &hierarchy) {
                Resolution::External => {
                    external_owners.insert(site.declared_callee.owner.clone());
                    edges.push(ResolvedEdge {
                        caller: site.caller.clone(),
                        target: site.declared_callee.clone(),
                        origin: EdgeOrigin::ExternalLeaf,
                        caller_package: g.package.clone(),
                        target_owner_package: None,
                        multiplicity: site.multiplicity,
                    });
                }
                Resolution::Targets(targets) => {
                    for target in targets {
                        let owner_pkg = hierarchy.universe().owner_of(&target.owner).cloned();
                        let origin = match (&owner_pkg, site.dispatch.is_dynamic()) {
                            (None, _) => EdgeOrigin::InheritedExternal,
                            (Some(_), true) => EdgeOrigin::ResolvedDispatch,
                            (Some(_), false) => EdgeOrigin::StaticDirect,
                        };
                        edges.push(ResolvedEdge {
                            caller: site.caller.clone(),
                            target,
                            origin,
                            caller_package: g.package.clone(),
                            target_owner_package: owner_pkg,
                            multiplicity: site.multiplicity,
                        });
                    }
                }
            }
        }
    }
    edges.sort();

    if !deps.is_empty() {
        let owners: Vec<String> = external_owners
            .into_iter()
            .filter(|o| !JDK_PREFIXES.iter().any(|p| o.starts_with(p)))
            .collect();
        if !owners.is_empty() {
            warnings.push(Warning::ExternalOwners {
                core: core.package.clone(),
                owners,
            });
        }
    }

    Ok((
        InterPackageCallGraph {
            core: core.package.clone(),
            members,
            edges,
        },
        warnings,
    ))
}
