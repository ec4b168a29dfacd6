//! Per-package call graphs and type records in the JSON exchange format.
//!
//! A document describes one package version: its types (with supertypes and
//! declared methods) and its call sites. Callee owners may be types outside
//! the package, typically JDK classes; caller owners must be declared.
//!
//! ```json
//! {
//!   "schema_version": "1",
//!   "package": {"group": "org.acme", "artifact": "lib", "version": "1.0"},
//!   "types": [{"fqn": "org.acme.A", "kind": "class", "interfaces": [],
//!              "methods": [{"name": "run", "abstract": false, "visibility": "public"}],
//!              "public_constructor": true}],
//!   "call_sites": [{"caller": {"owner": "org.acme.A", "name": "run"},
//!                   "callee": {"owner": "java.io.File", "name": "exists"},
//!                   "dispatch": "virtual"}]
//! }
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::{is_identifier, is_qualified_name, CONSTRUCTOR};
use crate::error::{Error, Result, Warning};

pub const GRAPH_SCHEMA_VERSION: &str = "1";

const STATIC_INITIALIZER: &str = "<clinit>";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackageCoordinates {
    pub group: String,
    pub artifact: String,
    pub version: String,
}

impl PackageCoordinates {
    pub fn new(
        group: impl Into<String>,
        artifact: impl Into<String>,
        version: impl Into<String>,
    ) -> Result<Self> {
        let c = PackageCoordinates {
            group: group.into().trim().to_owned(),
            artifact: artifact.into().trim().to_owned(),
            version: version.into().trim().to_owned(),
        };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        for (field, value) in [
            ("group", &self.group),
            ("artifact", &self.artifact),
            ("version", &self.version),
        ] {
            if value.is_empty() {
                return Err(Error::validation(format!(
                    "package {field} must not be empty"
                )));
            }
            if value.contains(':') {
                return Err(Error::validation(format!(
                    "package {field} {value:?} must not contain ':'"
                )));
            }
        }
        Ok(())
    }

    /// Same group and artifact, any version.
    pub fn same_package(&self, other: &PackageCoordinates) -> bool {
        self.group == other.group && self.artifact == other.artifact
    }

    /// `group:artifact`
    pub fn package_key(&self) -> String {
        format!("{}:{}", self.group, self.artifact)
    }
}

impl fmt::Display for PackageCoordinates {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.group, self.artifact, self.version)
    }
}

impl FromStr for PackageCoordinates {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [g, a, v] => PackageCoordinates::new(*g, *a, *v),
            _ => Err(Error::validation(format!(
                "package coordinates {s:?} are not group:artifact:version"
            ))),
        }
    }
}

/// A method identified by owner type, simple name, and optional JVM
/// descriptor. An absent descriptor only equals another absent descriptor.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodRef {
    pub owner: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub descriptor: Option<String>,
}

impl MethodRef {
    /// Builds a normalized reference. `Owner()` notation and a trailing `()`
    /// are accepted for names.
    pub fn new(
        owner: impl Into<String>,
        name: impl Into<String>,
        descriptor: Option<String>,
    ) -> Result<Self> {
        let mut m = MethodRef {
            owner: owner.into(),
            name: name.into(),
            descriptor,
        };
        m.normalize();
        m.validate()?;
        Ok(m)
    }

    fn normalize(&mut self) {
        self.owner = strip_whitespace(&self.owner);
        self.name = normalize_method_name(&self.owner, &self.name);
        self.descriptor = self
            .descriptor
            .as_deref()
            .map(strip_whitespace)
            .filter(|d| !d.is_empty());
    }

    fn validate(&self) -> Result<()> {
        if !is_qualified_name(&self.owner) {
            return Err(Error::validation(format!(
                "invalid owner type name {:?}",
                self.owner
            )));
        }
        if !is_method_name(&self.name) {
            return Err(Error::validation(format!(
                "invalid method name {:?} on {}",
                self.name, self.owner
            )));
        }
        Ok(())
    }

    /// Equality that treats a missing descriptor on either side as a
    /// wildcard.
    pub fn loosely_matches(&self, other: &MethodRef) -> bool {
        self.owner == other.owner
            && self.name == other.name
            && descriptors_compatible(self.descriptor.as_deref(), other.descriptor.as_deref())
    }
}

impl fmt::Display for MethodRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.owner, self.name)?;
        if let Some(d) = &self.descriptor {
            f.write_str(d)?;
        }
        Ok(())
    }
}

pub(crate) fn descriptors_compatible(a: Option<&str>, b: Option<&str>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => a == b,
        _ => true,
    }
}

fn strip_whitespace(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

fn simple_name(fqn: &str) -> &str {
    let tail = fqn.rsplit('.').next().unwrap_or(fqn);
    tail.rsplit('$').next().unwrap_or(tail)
}

fn normalize_method_name(owner: &str, name: &str) -> String {
    let name = strip_whitespace(name);
    let bare = name.strip_suffix("()").unwrap_or(&name);
    if bare == simple_name(owner) && !bare.is_empty() {
        CONSTRUCTOR.to_owned()
    } else {
        bare.to_owned()
    }
}

fn is_method_name(s: &str) -> bool {
    s == CONSTRUCTOR || s == STATIC_INITIALIZER || is_identifier(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeKind {
    Class,
    Interface,
    AbstractClass,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    #[default]
    Public,
    Protected,
    Package,
    Private,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodDecl {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub descriptor: Option<String>,
    #[serde(rename = "abstract")]
    pub is_abstract: bool,
    pub visibility: Visibility,
}

fn is_public(v: &Visibility) -> bool {
    *v == Visibility::Public
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeRecord {
    pub fqn: String,
    pub kind: TypeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub superclass: Option<String>,
    #[serde(default)]
    pub interfaces: Vec<String>,
    #[serde(default)]
    pub methods: Vec<MethodDecl>,
    #[serde(rename = "public_constructor")]
    pub has_public_constructor: bool,
    /// Type-level visibility; absent means public.
    #[serde(default, skip_serializing_if = "is_public")]
    pub visibility: Visibility,
}

impl TypeRecord {
    pub fn is_concrete(&self) -> bool {
        self.kind == TypeKind::Class
    }

    pub fn is_interface(&self) -> bool {
        self.kind == TypeKind::Interface
    }

    /// Non-abstract declarations matching `name` and, when both sides carry
    /// one, the descriptor.
    pub fn concrete_definitions<'a>(
        &'a self,
        name: &'a str,
        descriptor: Option<&'a str>,
    ) -> impl Iterator<Item = &'a MethodDecl> + 'a {
        self.methods.iter().filter(move |m| {
            !m.is_abstract
                && m.name == name
                && descriptors_compatible(m.descriptor.as_deref(), descriptor)
        })
    }

    /// Direct supertypes: superclass first, then interfaces in order.
    pub fn supertypes(&self) -> impl Iterator<Item = &str> {
        self.superclass
            .as_deref()
            .into_iter()
            .chain(self.interfaces.iter().map(String::as_str))
    }

    pub fn method_ref(&self, decl: &MethodDecl) -> MethodRef {
        MethodRef {
            owner: self.fqn.clone(),
            name: decl.name.clone(),
            descriptor: decl.descriptor.clone(),
        }
    }

    fn normalize(&mut self) {
        self.fqn = strip_whitespace(&self.fqn);
        self.superclass = self
            .superclass
            .as_deref()
            .map(strip_whitespace)
            .filter(|s| !s.is_empty());
        for i in &mut self.interfaces {
            *i = strip_whitespace(i);
        }
        for m in &mut self.methods {
            m.name = normalize_method_name(&self.fqn, &m.name);
            m.descriptor = m
                .descriptor
                .as_deref()
                .map(strip_whitespace)
                .filter(|d| !d.is_empty());
        }
    }

    fn validate(&self) -> Result<()> {
        let at = |msg: String| Error::validation(format!("type {}: {msg}", self.fqn));
        if !is_qualified_name(&self.fqn) {
            return Err(Error::validation(format!(
                "invalid type name {:?}",
                self.fqn
            )));
        }
        if let Some(sup) = &self.superclass {
            if self.kind == TypeKind::Interface {
                return Err(at(format!("interface declares superclass {sup}")));
            }
            if !is_qualified_name(sup) {
                return Err(at(format!("invalid superclass name {sup:?}")));
            }
            if *sup == self.fqn {
                return Err(at("extends itself".into()));
            }
        }
        let mut seen = HashSet::new();
        for i in &self.interfaces {
            if !is_qualified_name(i) {
                return Err(at(format!("invalid interface name {i:?}")));
            }
            if !seen.insert(i) {
                return Err(at(format!("interface {i} listed twice")));
            }
        }
        let mut seen = HashSet::new();
        for m in &self.methods {
            if !is_method_name(&m.name) {
                return Err(at(format!("invalid method name {:?}", m.name)));
            }
            if !seen.insert((&m.name, &m.descriptor)) {
                return Err(at(format!(
                    "method {}{} declared twice",
                    m.name,
                    m.descriptor.as_deref().unwrap_or("")
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dispatch {
    Static,
    Virtual,
    Interface,
    Special,
}

impl Dispatch {
    pub fn is_dynamic(self) -> bool {
        matches!(self, Dispatch::Virtual | Dispatch::Interface)
    }
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CallSite {
    pub caller: MethodRef,
    #[serde(rename = "callee")]
    pub declared_callee: MethodRef,
    pub dispatch: Dispatch,
    /// Source-level occurrences folded into this site.
    #[serde(default = "one")]
    pub multiplicity: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntraPackageCallGraph {
    pub package: PackageCoordinates,
    pub types: Vec<TypeRecord>,
    pub call_sites: Vec<CallSite>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDocument {
    schema_version: String,
    package: PackageCoordinates,
    types: Vec<TypeRecord>,
    call_sites: Vec<CallSite>,
}

/// Parses, normalizes and validates a call-graph document.
pub fn parse_callgraph(source: &[u8]) -> Result<IntraPackageCallGraph> {
    let doc: GraphDocument =
        serde_json::from_slice(source).map_err(|e| Error::from_json(e, source))?;
    if doc.schema_version != GRAPH_SCHEMA_VERSION {
        return Err(Error::validation(format!(
            "unsupported call graph schema_version {:?} (expected {GRAPH_SCHEMA_VERSION:?})",
            doc.schema_version
        )));
    }
    let mut graph = IntraPackageCallGraph {
        package: PackageCoordinates::new(
            doc.package.group,
            doc.package.artifact,
            doc.package.version,
        )?,
        types: doc.types,
        call_sites: doc.call_sites,
    };
    graph.normalize();
    graph.validate()?;
    Ok(graph)
}

impl IntraPackageCallGraph {
    fn normalize(&mut self) {
        for t in &mut self.types {
            t.normalize();
        }
        for site in &mut self.call_sites {
            site.caller.normalize();
            site.declared_callee.normalize();
        }
    }

    /// Checks every document invariant; the first violation is returned.
    pub fn validate(&self) -> Result<()> {
        self.package.validate()?;
        let mut kinds: HashMap<&str, TypeKind> = HashMap::with_capacity(self.types.len());
        for t in &self.types {
            t.validate()?;
            if kinds.insert(&t.fqn, t.kind).is_some() {
                return Err(Error::validation(format!("type {} declared twice", t.fqn)));
            }
        }
        for (i, site) in self.call_sites.iter().enumerate() {
            let at = |msg: String| {
                Error::validation(format!(
                    "call site {i} ({} -> {}): {msg}",
                    site.caller, site.declared_callee
                ))
            };
            site.caller.validate().map_err(|e| at(e.to_string()))?;
            site.declared_callee
                .validate()
                .map_err(|e| at(e.to_string()))?;
            if site.multiplicity == 0 {
                return Err(at("multiplicity must be at least 1".into()));
            }
            if !kinds.contains_key(site.caller.owner.as_str()) {
                return Err(at(format!(
                    "caller owner {} is not declared in types",
                    site.caller.owner
                )));
            }
            if site.dispatch == Dispatch::Interface {
                if let Some(kind) = kinds.get(site.declared_callee.owner.as_str()) {
                    if *kind != TypeKind::Interface {
                        return Err(at(format!(
                            "interface dispatch on non-interface type {}",
                            site.declared_callee.owner
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn type_named(&self, fqn: &str) -> Option<&TypeRecord> {
        self.types.iter().find(|t| t.fqn == fqn)
    }

    /// Serializes to the canonical document form. Parsing the output yields
    /// an equal graph.
    pub fn to_json(&self) -> String {
        let doc = GraphDocument {
            schema_version: GRAPH_SCHEMA_VERSION.to_owned(),
            package: self.package.clone(),
            types: self.types.clone(),
            call_sites: self.call_sites.clone(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("graph serializes");
        s.push('\n');
        s
    }
}

/// All types of a set of packages, keyed by name, with the package that
/// contributed each surviving definition.
#[derive(Debug, Clone, Default)]
pub struct TypeUniverse {
    pub types: BTreeMap<String, TypeRecord>,
    pub owners: BTreeMap<String, PackageCoordinates>,
}

impl TypeUniverse {
    pub fn contains(&self, fqn: &str) -> bool {
        self.types.contains_key(fqn)
    }

    pub fn get(&self, fqn: &str) -> Option<&TypeRecord> {
        self.types.get(fqn)
    }

    pub fn owner_of(&self, fqn: &str) -> Option<&PackageCoordinates> {
        self.owners.get(fqn)
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }
}

/// Unions the types of several graphs. The first definition of a name wins
/// (classpath order) and later ones produce a warning; an interface and a
/// class sharing a name is an error.
pub fn merge_type_universe(
    graphs: &[IntraPackageCallGraph],
) -> Result<(TypeUniverse, Vec<Warning>)> {
    let mut universe = TypeUniverse::default();
    let mut warnings = Vec::new();
    for g in graphs {
        for t in &g.types {
            match universe.types.get(&t.fqn) {
                Some(existing) => {
                    if existing.is_interface() != t.is_interface() {
                        return Err(Error::validation(format!(
                            "type {} is {:?} in {} but {:?} in {}",
                            t.fqn, existing.kind, universe.owners[&t.fqn], t.kind, g.package
                        )));
                    }
                    warnings.push(Warning::DuplicateType {
                        fqn: t.fqn.clone(),
                        kept: universe.owners[&t.fqn].clone(),
                        dropped: g.package.clone(),
                    });
                }
                None => {
                    universe.types.insert(t.fqn.clone(), t.clone());
                    universe.owners.insert(t.fqn.clone(), g.package.clone());
                }
            }
        }
    }
    Ok((universe, warnings))
}

/// Names of every type declared in a graph.
pub fn declared_types(graph: &IntraPackageCallGraph) -> BTreeSet<&str> {
    graph.types.iter().map(|t| t.fqn.as_str()).collect()
}
