//! Profiles, group comparisons, version deltas, corpus rankings and
//! proportion confidence intervals.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::catalog::{ApiIdentifier, Category, Subcategory};
use crate::error::{Error, Result, Warning};
use crate::graph::PackageCoordinates;
use crate::reach::ReachabilityResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Package alone.
    Intra,
    /// Package stitched with its dependencies.
    Inter,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Intra => "intra",
            Mode::Inter => "inter",
        })
    }
}

/// Sensitive-call counts for one package version.
///
/// Subcategory and category maps are dense: every key is present, zero or
/// not. Field order is the serialized key order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackageVersionProfile {
    pub package: PackageCoordinates,
    pub mode: Mode,
    pub per_api: BTreeMap<ApiIdentifier, u64>,
    pub per_subcategory: BTreeMap<Subcategory, u64>,
    pub per_category: BTreeMap<Category, u64>,
    pub direct_count: u64,
    pub indirect_count: u64,
    /// Number of reachable call edges that hit the catalog, ignoring
    /// multiplicity.
    pub hit_edges: u64,
    pub unique_apis_used: usize,
    pub unique_subcategories_used: usize,
    pub unique_categories_used: usize,
}

fn nonzero<K>(m: &BTreeMap<K, u64>) -> usize {
    m.values().filter(|c| **c > 0).count()
}

fn dense<K: Ord + Copy>(keys: &[K]) -> BTreeMap<K, u64> {
    keys.iter().map(|k| (*k, 0)).collect()
}

pub fn build_profile(
    package: PackageCoordinates,
    mode: Mode,
    result: &ReachabilityResult,
) -> PackageVersionProfile {
    let mut per_api: BTreeMap<ApiIdentifier, u64> = BTreeMap::new();
    let mut per_subcategory = dense(&Subcategory::ALL);
    let mut per_category = dense(&Category::ALL);
    let (mut direct_count, mut indirect_count) = (0, 0);
    for hit in &result.sensitive_hits {
        let n = u64::from(hit.multiplicity);
        *per_api.entry(hit.api.id.clone()).or_default() += n;
        *per_subcategory.entry(hit.api.subcategory).or_default() += n;
        *per_category.entry(hit.api.category).or_default() += n;
        if hit.direct {
            direct_count += n;
        } else {
            indirect_count += n;
        }
    }
    PackageVersionProfile {
        package,
        mode,
        unique_apis_used: nonzero(&per_api),
        unique_subcategories_used: nonzero(&per_subcategory),
        unique_categories_used: nonzero(&per_category),
        per_api,
        per_subcategory,
        per_category,
        direct_count,
        indirect_count,
        hit_edges: result.sensitive_hits.len() as u64,
    }
}

impl PackageVersionProfile {
    pub fn total(&self) -> u64 {
        self.per_api.values().sum()
    }

    pub fn subcategory(&self, s: Subcategory) -> u64 {
        self.per_subcategory.get(&s).copied().unwrap_or(0)
    }

    /// Checks the internal consistency of a profile read from disk.
    pub fn validate(&self) -> Result<()> {
        let at = |msg: String| Error::validation(format!("profile {}: {msg}", self.package));
        if self.per_subcategory.len() != Subcategory::ALL.len()
            || self.per_category.len() != Category::ALL.len()
        {
            return Err(at("subcategory and category maps must be dense".into()));
        }
        let total = self.total();
        let sub_total: u64 = self.per_subcategory.values().sum();
        let cat_total: u64 = self.per_category.values().sum();
        if sub_total != total || cat_total != total {
            return Err(at(format!(
                "totals disagree: per_api {total}, per_subcategory {sub_total}, per_category {cat_total}"
            )));
        }
        for c in Category::ALL {
            let grouped: u64 = Subcategory::ALL
                .iter()
                .filter(|s| s.category() == c)
                .map(|s| self.subcategory(*s))
                .sum();
            if grouped != self.per_category[&c] {
                return Err(at(format!("{c} count does not match its subcategories")));
            }
        }
        if self.direct_count + self.indirect_count != total {
            return Err(at("direct + indirect does not equal the total".into()));
        }
        if self.unique_apis_used != nonzero(&self.per_api)
            || self.unique_subcategories_used != nonzero(&self.per_subcategory)
            || self.unique_categories_used != nonzero(&self.per_category)
        {
            return Err(at("unique counts do not match the maps".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("profile serializes");
        s.push('\n');
        s
    }

    pub fn from_json(source: &[u8]) -> Result<Self> {
        let p: PackageVersionProfile =
            serde_json::from_slice(source).map_err(|e| Error::from_json(e, source))?;
        p.validate()?;
        Ok(p)
    }
}

/// Packages by subcategory counts for one group of alternatives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonMatrix {
    pub group_name: String,
    pub rows: Vec<PackageCoordinates>,
    pub columns: Vec<Subcategory>,
    pub cells: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Default)]
pub struct CompareOptions {
    /// Explicit row order; must be a permutation of the profiles' packages.
    pub row_order: Option<Vec<PackageCoordinates>>,
    /// Seed for a reproducible column permutation.
    pub shuffle_seed: Option<u64>,
}

/// The subcategory columns permuted by a seeded ChaCha8 shuffle.
pub fn shuffled_columns(columns: &[Subcategory], seed: u64) -> Vec<Subcategory> {
    let mut out = columns.to_vec();
    out.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    out
}

pub fn compare_group(
    group_name: &str,
    profiles: &[PackageVersionProfile],
    options: &CompareOptions,
) -> Result<ComparisonMatrix> {
    if profiles.is_empty() {
        return Err(Error::validation(format!(
            "group {group_name:?} has no profiles"
        )));
    }
    let mut by_package: BTreeMap<&PackageCoordinates, &PackageVersionProfile> = BTreeMap::new();
    for p in profiles {
        if by_package.insert(&p.package, p).is_some() {
            return Err(Error::validation(format!(
                "group {group_name:?}: duplicate package {}",
                p.package
            )));
        }
    }
    let rows: Vec<PackageCoordinates> = match &options.row_order {
        None => by_package.keys().map(|p| (*p).clone()).collect(),
        Some(order) => {
            let given: BTreeSet<&PackageCoordinates> = order.iter().collect();
            if given.len() != order.len()
                || given.len() != by_package.len()
                || !given.iter().all(|p| by_package.contains_key(p))
            {
                return Err(Error::validation(
                    "row order must list each profiled package exactly once",
                ));
            }
            order.clone()
        }
    };
    let columns = match options.shuffle_seed {
        Some(seed) => shuffled_columns(&Subcategory::ALL, seed),
        None => Subcategory::ALL.to_vec(),
    };
    let cells = rows
        .iter()
        .map(|r| {
            columns
                .iter()
                .map(|c| by_package[r].subcategory(*c))
                .collect()
        })
        .collect();
    Ok(ComparisonMatrix {
        group_name: group_name.to_owned(),
        rows,
        columns,
        cells,
    })
}

impl ComparisonMatrix {
    pub fn cell(&self, row: usize, column: usize) -> u64 {
        self.cells[row][column]
    }

    /// Applies a seeded permutation to the columns and their cells.
    pub fn with_shuffled_columns(&self, seed: u64) -> ComparisonMatrix {
        let columns = shuffled_columns(&self.columns, seed);
        let index: Vec<usize> = columns
            .iter()
            .map(|c| {
                self.columns
                    .iter()
                    .position(|x| x == c)
                    .expect("same column set")
            })
            .collect();
        ComparisonMatrix {
            group_name: self.group_name.clone(),
            rows: self.rows.clone(),
            cells: self
                .cells
                .iter()
                .map(|row| index.iter().map(|&i| row[i]).collect())
                .collect(),
            columns,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopApi {
    pub api: ApiIdentifier,
    /// Sum over packages of the mean count across that package's versions.
    pub aggregate: f64,
    pub share: f64,
}

/// Ranks APIs across a corpus without letting packages with many versions
/// dominate: counts are averaged over each package's versions, then summed
/// over packages. A version listed twice is counted once.
pub fn corpus_top_apis(profiles: &[PackageVersionProfile]) -> (Vec<TopApi>, Vec<Warning>) {
    let mut warnings = Vec::new();
    let mut packages: BTreeMap<String, BTreeMap<&PackageCoordinates, &PackageVersionProfile>> =
        BTreeMap::new();
    for p in profiles {
        let versions = packages.entry(p.package.package_key()).or_default();
        if versions.contains_key(&p.package) {
            warnings.push(Warning::DuplicateVersion(p.package.clone()));
        } else {
            versions.insert(&p.package, p);
        }
    }

    let mut contributions: BTreeMap<&ApiIdentifier, Vec<f64>> = BTreeMap::new();
    for versions in packages.values() {
        let mut sums: BTreeMap<&ApiIdentifier, u64> = BTreeMap::new();
        for p in versions.values() {
            for (api, n) in &p.per_api {
                *sums.entry(api).or_default() += n;
            }
        }
        let n_versions = versions.len() as f64;
        for (api, sum) in sums {
            contributions
                .entry(api)
                .or_default()
                .push(sum as f64 / n_versions);
        }
    }

    // Summing in value order makes the result independent of package names.
    let mut ranked: Vec<(ApiIdentifier, f64)> = contributions
        .into_iter()
        .map(|(api, mut means)| {
            means.sort_by(f64::total_cmp);
            (api.clone(), means.iter().sum::<f64>())
        })
        .filter(|(_, agg)| *agg > 0.0)
        .collect();
    let mut all: Vec<f64> = ranked.iter().map(|(_, a)| *a).collect();
    all.sort_by(f64::total_cmp);
    let total: f64 = all.iter().sum();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let top = ranked
        .into_iter()
        .map(|(api, aggregate)| TopApi {
            api,
            aggregate,
            share: if total > 0.0 { aggregate / total } else { 0.0 },
        })
        .collect();
    (top, warnings)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub p_hat: f64,
    pub n: u64,
    pub z: f64,
    pub half_width: f64,
    pub lo: f64,
    pub hi: f64,
}

/// z for a two-sided 95% interval.
pub const Z_95: f64 = 1.96;

/// Normal-approximation interval `p_hat ± z·sqrt(p_hat(1−p_hat)/n)`,
/// clamped to [0, 1].
pub fn wald_interval(p_hat: f64, n: u64, z: f64) -> Result<ConfidenceInterval> {
    if n == 0 {
        return Err(Error::Domain("sample size n must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&p_hat) {
        return Err(Error::Domain(format!("proportion {p_hat} outside [0, 1]")));
    }
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Domain(format!("quantile z = {z} must be positive")));
    }
    let half_width = z * (p_hat * (1.0 - p_hat) / n as f64).sqrt();
    Ok(ConfidenceInterval {
        p_hat,
        n,
        z,
        half_width,
        lo: (p_hat - half_width).max(0.0),
        hi: (p_hat + half_width).min(1.0),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeltaReport {
    pub old: PackageVersionProfile,
    pub new: PackageVersionProfile,
    pub per_api_delta: BTreeMap<ApiIdentifier, i64>,
    pub per_subcategory_delta: BTreeMap<Subcategory, i64>,
    pub total_delta: i64,
    pub added_apis: BTreeSet<ApiIdentifier>,
    pub removed_apis: BTreeSet<ApiIdentifier>,
}

/// Pointwise `new − old` for two versions of one package in one mode.
pub fn delta_audit(
    old: &PackageVersionProfile,
    new: &PackageVersionProfile,
) -> Result<DeltaReport> {
    if !old.package.same_package(&new.package) {
        return Err(Error::validation(format!(
            "cannot diff {} against {}: different packages",
            old.package, new.package
        )));
    }
    if old.mode != new.mode {
        return Err(Error::validation(format!(
            "cannot diff a {} profile against a {} profile",
            old.mode, new.mode
        )));
    }
    let count =
        |p: &PackageVersionProfile, a: &ApiIdentifier| p.per_api.get(a).copied().unwrap_or(0);
    let apis: BTreeSet<&ApiIdentifier> = old.per_api.keys().chain(new.per_api.keys()).collect();
    let mut per_api_delta = BTreeMap::new();
    let mut added_apis = BTreeSet::new();
    let mut removed_apis = BTreeSet::new();
    for api in apis {
        let (before, after) = (count(old, api), count(new, api));
        per_api_delta.insert(api.clone(), after as i64 - before as i64);
        if before == 0 && after > 0 {
            added_apis.insert(api.clone());
        } else if before > 0 && after == 0 {
            removed_apis.insert(api.clone());
        }
    }
    let per_subcategory_delta = Subcategory::ALL
        .iter()
        .map(|s| (*s, new.subcategory(*s) as i64 - old.subcategory(*s) as i64))
        .collect();
    Ok(DeltaReport {
        old: old.clone(),
        new: new.clone(),
        per_api_delta,
        per_subcategory_delta,
        total_delta: new.total() as i64 - old.total() as i64,
        added_apis,
        removed_apis,
    })
}

/// Inter/intra ratio for one subcategory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Finite(f64),
    /// Calls appear only once dependencies are included.
    Infinite,
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Finite(r) => write!(f, "{r}"),
            Ratio::Infinite => f.write_str("∞"),
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Ratio::Finite(r) => serializer.serialize_f64(*r),
            Ratio::Infinite => serializer.serialize_str("∞"),
        }
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Ratio::Finite(a), Ratio::Finite(b)) => a.partial_cmp(b),
            (Ratio::Finite(_), Ratio::Infinite) => Some(Ordering::Less),
            (Ratio::Infinite, Ratio::Finite(_)) => Some(Ordering::Greater),
            (Ratio::Infinite, Ratio::Infinite) => Some(Ordering::Equal),
        }
    }
}

/// Per subcategory, total inter-mode calls over total intra-mode calls
/// across paired versions. 0/0 is 1 and x/0 is infinite.
pub fn multiply_factors(
    pairs: &[(PackageVersionProfile, PackageVersionProfile)],
) -> Result<BTreeMap<Subcategory, Ratio>> {
    let mut intra = dense(&Subcategory::ALL);
    let mut inter = dense(&Subcategory::ALL);
    for (a, b) in pairs {
        if a.package != b.package {
            return Err(Error::validation(format!(
                "paired profiles differ: {} vs {}",
                a.package, b.package
            )));
        }
        if a.mode != Mode::Intra || b.mode != Mode::Inter {
            return Err(Error::validation(format!(
                "{}: expected an (intra, inter) pair",
                a.package
            )));
        }
        for s in Subcategory::ALL {
            *intra.get_mut(&s).expect("dense") += a.subcategory(s);
            *inter.get_mut(&s).expect("dense") += b.subcategory(s);
        }
    }
    Ok(Subcategory::ALL
        .iter()
        .map(|s| {
            let (i, o) = (intra[s], inter[s]);
            let r = match (i, o) {
                (0, 0) => Ratio::Finite(1.0),
                (0, _) => Ratio::Infinite,
                _ => Ratio::Finite(o as f64 / i as f64),
            };
            (*s, r)
        })
        .collect())
}
