//! The security-sensitive API catalog.
//!
//! A catalog entry names a JDK class and a method (or `<init>` for a
//! constructor) and files it under one of three categories and fifteen
//! subcategories. Entries carry no parameter signatures, so matching is by
//! class and method name only and every overload of a listed method counts.

mod cwe;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use cwe::{map_cwe_to_owasp, CweHierarchy, OwaspLabel};

/// Reserved method name for constructors.
pub const CONSTRUCTOR: &str = "<init>";

/// Schema version accepted by [`load_catalog`].
pub const CATALOG_SCHEMA_VERSION: &str = "1";

/// Number of entries in the shipped catalog.
pub const DEFAULT_CATALOG_SIZE: usize = 219;

const DEFAULT_CATALOG_JSON: &str = include_str!("../../data/catalog.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Filesystem,
    Network,
    Process,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Filesystem, Category::Network, Category::Process];

    pub fn name(self) -> &'static str {
        match self {
            Category::Filesystem => "Filesystem",
            Category::Network => "Network",
            Category::Process => "Process",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::validation(format!("unknown category {s:?}")))
    }
}

/// The fifteen subcategories. Declaration order is the canonical column
/// order used by profiles, matrices and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Subcategory {
    Input,
    Output,
    Modification,
    Miscellaneous,
    #[serde(rename = "Read_env")]
    ReadEnv,
    #[serde(rename = "Read_network_env")]
    ReadNetworkEnv,
    Connection,
    Http,
    Socket,
    #[serde(rename = "Naming_directory")]
    NamingDirectory,
    #[serde(rename = "Codec_crypto")]
    CodecCrypto,
    Dependency,
    Reflection,
    #[serde(rename = "Operating_system")]
    OperatingSystem,
    Scripting,
}

impl Subcategory {
    pub const ALL: [Subcategory; 15] = [
        Subcategory::Input,
        Subcategory::Output,
        Subcategory::Modification,
        Subcategory::Miscellaneous,
        Subcategory::ReadEnv,
        Subcategory::ReadNetworkEnv,
        Subcategory::Connection,
        Subcategory::Http,
        Subcategory::Socket,
        Subcategory::NamingDirectory,
        Subcategory::CodecCrypto,
        Subcategory::Dependency,
        Subcategory::Reflection,
        Subcategory::OperatingSystem,
        Subcategory::Scripting,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcategory::Input => "Input",
            Subcategory::Output => "Output",
            Subcategory::Modification => "Modification",
            Subcategory::Miscellaneous => "Miscellaneous",
            Subcategory::ReadEnv => "Read_env",
            Subcategory::ReadNetworkEnv => "Read_network_env",
            Subcategory::Connection => "Connection",
            Subcategory::Http => "Http",
            Subcategory::Socket => "Socket",
            Subcategory::NamingDirectory => "Naming_directory",
            Subcategory::CodecCrypto => "Codec_crypto",
            Subcategory::Dependency => "Dependency",
            Subcategory::Reflection => "Reflection",
            Subcategory::OperatingSystem => "Operating_system",
            Subcategory::Scripting => "Scripting",
        }
    }

    pub fn category(self) -> Category {
        use Subcategory::*;
        match self {
            Input | Output | Modification | Miscellaneous | ReadEnv | ReadNetworkEnv => {
                Category::Filesystem
            }
            Connection | Http | Socket | NamingDirectory => Category::Network,
            CodecCrypto | Dependency | Reflection | OperatingSystem | Scripting => {
                Category::Process
            }
        }
    }

    /// `Category/Subcategory`, as used in report labels.
    pub fn qualified_name(self) -> String {
        format!("{}/{}", self.category(), self.name())
    }
}

impl fmt::Display for Subcategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subcategory::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::validation(format!("unknown subcategory {s:?}")))
    }
}

/// A catalog key: fully-qualified class plus method simple name.
///
/// The canonical string form is `class#method`, e.g.
/// `java.lang.Class#forName` or `java.io.File#<init>`. Ordering on the
/// struct agrees with ordering on that string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ApiIdentifier {
    class_fqn: String,
    method_name: String,
}

impl ApiIdentifier {
    pub fn new(class_fqn: impl Into<String>, method_name: impl Into<String>) -> Result<Self> {
        let class_fqn = class_fqn.into();
        let method_name = method_name.into();
        if !is_qualified_name(&class_fqn) {
            return Err(Error::validation(format!(
                "invalid class name {class_fqn:?}: expected ident(.ident)*"
            )));
        }
        if method_name != CONSTRUCTOR && !is_identifier(&method_name) {
            return Err(Error::validation(format!(
                "invalid method name {method_name:?} on {class_fqn}"
            )));
        }
        Ok(ApiIdentifier {
            class_fqn,
            method_name,
        })
    }

    pub fn class_fqn(&self) -> &str {
        &self.class_fqn
    }

    pub fn method_name(&self) -> &str {
        &self.method_name
    }

    pub fn is_constructor(&self) -> bool {
        self.method_name == CONSTRUCTOR
    }

    /// Human-readable form: `java.lang.Class.forName()`, or
    /// `java.io.File()` for a constructor.
    pub fn display_name(&self) -> String {
        if self.is_constructor() {
            format!("{}()", self.class_fqn)
        } else {
            format!("{}.{}()", self.class_fqn, self.method_name)
        }
    }
}

impl fmt::Display for ApiIdentifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.class_fqn, self.method_name)
    }
}

impl FromStr for ApiIdentifier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (class, method) = s.split_once('#').ok_or_else(|| {
            Error::validation(format!("API key {s:?} is not of the form class#method"))
        })?;
        ApiIdentifier::new(class, method)
    }
}

impl Serialize for ApiIdentifier {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ApiIdentifier {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' || c == '$' => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || c == '_' || c == '$')
}

pub(crate) fn is_qualified_name(s: &str) -> bool {
    !s.is_empty() && s.split('.').all(is_identifier)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SensitiveApi {
    pub id: ApiIdentifier,
    pub category: Category,
    pub subcategory: Subcategory,
    pub cwe_ids: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct SensitiveApiCatalog {
    schema_version: String,
    entries: Vec<SensitiveApi>,
    index: HashMap<ApiIdentifier, usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCatalog {
    schema_version: String,
    entries: Vec<RawEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    class: String,
    method: String,
    category: String,
    subcategory: String,
    cwes: Vec<u32>,
}

/// Parses and validates catalog JSON.
///
/// Structural rules only: schema version, identifier syntax, unique ids, and
/// a (category, subcategory) pair that exists in the fixed taxonomy.
pub fn load_catalog(source: &[u8]) -> Result<SensitiveApiCatalog> {
    let raw: RawCatalog =
        serde_json::from_slice(source).map_err(|e| Error::from_json(e, source))?;
    if raw.schema_version != CATALOG_SCHEMA_VERSION {
        return Err(Error::validation(format!(
            "unsupported catalog schema_version {:?} (expected {CATALOG_SCHEMA_VERSION:?})",
            raw.schema_version
        )));
    }

    let mut entries = Vec::with_capacity(raw.entries.len());
    let mut index = HashMap::with_capacity(raw.entries.len());
    for (i, entry) in raw.entries.into_iter().enumerate() {
        let at = |e: Error| match e {
            Error::Validation(msg) => Error::Validation(format!("entry {i}: {msg}")),
            other => other,
        };
        let id = ApiIdentifier::new(entry.class.trim(), entry.method.trim()).map_err(at)?;
        let category: Category = entry.category.parse().map_err(at)?;
        let subcategory: Subcategory = entry.subcategory.parse().map_err(at)?;
        if subcategory.category() != category {
            return Err(Error::validation(format!(
                "entry {i}: subcategory {subcategory} belongs to {}, not {category}",
                subcategory.category()
            )));
        }
        if let Some(first) = index.insert(id.clone(), i) {
            return Err(Error::validation(format!(
                "entry {i}: duplicate id {id} (first defined at entry {first})"
            )));
        }
        let mut cwe_ids = entry.cwes;
        cwe_ids.sort_unstable();
        cwe_ids.dedup();
        entries.push(SensitiveApi {
            id,
            category,
            subcategory,
            cwe_ids,
        });
    }

    Ok(SensitiveApiCatalog {
        schema_version: raw.schema_version,
        entries,
        index,
    })
}

/// Loads the shipped catalog and checks its size.
pub fn load_default_catalog() -> Result<SensitiveApiCatalog> {
    let catalog = load_catalog(DEFAULT_CATALOG_JSON.as_bytes())?;
    if catalog.len() != DEFAULT_CATALOG_SIZE {
        return Err(Error::validation(format!(
            "shipped catalog has {} entries, expected {DEFAULT_CATALOG_SIZE}",
            catalog.len()
        )));
    }
    Ok(catalog)
}

/// The shipped catalog, parsed once.
pub fn default_catalog() -> &'static SensitiveApiCatalog {
    static CATALOG: OnceLock<SensitiveApiCatalog> = OnceLock::new();
    CATALOG.get_or_init(|| load_default_catalog().expect("shipped catalog is valid"))
}

/// Raw text of the shipped catalog.
pub fn default_catalog_json() -> &'static str {
    DEFAULT_CATALOG_JSON
}

impl SensitiveApiCatalog {
    pub fn schema_version(&self) -> &str {
        &self.schema_version
    }

    pub fn entries(&self) -> &[SensitiveApi] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Finds the entry for a callee. `<init>` selects the class's
    /// constructor entry. Subclasses are not walked.
    pub fn lookup(&self, class_fqn: &str, method_name: &str) -> Option<&SensitiveApi> {
        let key = ApiIdentifier {
            class_fqn: class_fqn.to_owned(),
            method_name: method_name.to_owned(),
        };
        self.index.get(&key).map(|&i| &self.entries[i])
    }

    pub fn get(&self, id: &ApiIdentifier) -> Option<&SensitiveApi> {
        self.index.get(id).map(|&i| &self.entries[i])
    }

    /// Distinct subcategories present, in canonical order.
    pub fn subcategories(&self) -> Vec<Subcategory> {
        Subcategory::ALL
            .into_iter()
            .filter(|s| self.entries.iter().any(|e| e.subcategory == *s))
            .collect()
    }

    pub fn categories(&self) -> Vec<Category> {
        Category::ALL
            .into_iter()
            .filter(|c| self.entries.iter().any(|e| e.category == *c))
            .collect()
    }

    pub fn count_in(&self, subcategory: Subcategory) -> usize {
        self.entries
            .iter()
            .filter(|e| e.subcategory == subcategory)
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog(entries: &str) -> Result<SensitiveApiCatalog> {
        load_catalog(format!(r#"{{"schema_version": "1", "entries": [{entries}]}}"#).as_bytes())
    }

    #[test]
    fn shipped_catalog_shape() {
        let c = load_default_catalog().unwrap();
        assert_eq!(c.len(), 219);
        assert_eq!(c.subcategories().len(), 15);
        assert_eq!(c.categories().len(), 3);
    }

    #[test]
    fn lookup_examples() {
        let c = default_catalog();
        let e = c.lookup("java.lang.Class", "forName").unwrap();
        assert_eq!(e.category, Category::Process);
        assert_eq!(e.subcategory, Subcategory::Reflection);

        let e = c.lookup("java.io.FileInputStream", "<init>").unwrap();
        assert_eq!(
            (e.category, e.subcategory),
            (Category::Filesystem, Subcategory::Input)
        );

        assert!(c.lookup("com.acme.Foo", "bar").is_none());
    }

    #[test]
    fn lookup_is_case_sensitive() {
        let c = default_catalog();
        assert!(c.lookup("java.lang.class", "forName").is_none());
        assert!(c.lookup("java.lang.Class", "forname").is_none());
    }

    #[test]
    fn lookup_does_not_walk_subclasses() {
        assert!(default_catalog().lookup("my.Sub", "exists").is_none());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let e = r#"{"class": "java.io.File", "method": "exists", "category": "Filesystem", "subcategory": "Miscellaneous", "cwes": []}"#;
        let err = catalog(&format!("{e}, {e}")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("entry 1"), "{msg}");
        assert!(msg.contains("java.io.File#exists"), "{msg}");
    }

    #[test]
    fn mismatched_pair_rejected() {
        let err = catalog(
            r#"{"class": "java.lang.Class", "method": "forName", "category": "Network", "subcategory": "Reflection", "cwes": []}"#,
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::Validation(ref m) if m.contains("entry 0")),
            "{err}"
        );
    }

    #[test]
    fn unknown_subcategory_rejected() {
        let err = catalog(
            r#"{"class": "a.B", "method": "c", "category": "Process", "subcategory": "Telepathy", "cwes": []}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn unknown_fields_and_versions_rejected() {
        let err = catalog(
            r#"{"class": "a.B", "method": "c", "category": "Process", "subcategory": "Scripting", "cwes": [], "risk": 3}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));

        let err = load_catalog(br#"{"schema_version": "2", "entries": []}"#).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn malformed_text_is_a_parse_error() {
        assert!(matches!(
            load_catalog(b"{\"schema_version\": \"1\", \"entries\": [").unwrap_err(),
            Error::Parse { .. }
        ));
    }

    #[test]
    fn bad_class_names_rejected() {
        for class in ["", "java..io", "1abc.D", "a.b-c"] {
            assert!(ApiIdentifier::new(class, "m").is_err(), "{class}");
        }
        assert!(ApiIdentifier::new("a.B", "").is_err());
    }

    #[test]
    fn api_key_round_trip_and_display() {
        let id: ApiIdentifier = "java.io.File#<init>".parse().unwrap();
        assert!(id.is_constructor());
        assert_eq!(id.display_name(), "java.io.File()");
        assert_eq!(id.to_string(), "java.io.File#<init>");
        let id: ApiIdentifier = "java.lang.Class#forName".parse().unwrap();
        assert_eq!(id.display_name(), "java.lang.Class.forName()");
    }

    #[test]
    fn every_subcategory_has_one_category() {
        for s in Subcategory::ALL {
            let owners: Vec<_> = Category::ALL
                .into_iter()
                .filter(|c| s.category() == *c)
                .collect();
            assert_eq!(owners.len(), 1);
        }
        assert_eq!(Subcategory::Reflection.category(), Category::Process);
    }
}
