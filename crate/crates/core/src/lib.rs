//! Reachability of security-sensitive Java APIs across a package and its
//! dependencies.
//!
//! Per-package call graphs are read from a JSON exchange format
//! ([`graph`]), merged into one class hierarchy and stitched into an
//! inter-package call graph with class-hierarchy analysis ([`stitch`]),
//! traversed breadth-first from the core package's entry points
//! ([`reach`]), and matched against a categorized catalog of sensitive JDK
//! APIs ([`catalog`]). The resulting per-version profiles feed comparisons,
//! version deltas, corpus rankings and confidence intervals ([`metrics`]),
//! which render to SVG heatmaps, CSV and JSON ([`report`]).

pub mod catalog;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod reach;
pub mod report;
pub mod stitch;

pub use catalog::{
    ApiIdentifier, Category, CweHierarchy, OwaspLabel, SensitiveApi, SensitiveApiCatalog,
    Subcategory,
};
pub use error::{Error, Result, Warning};
pub use graph::{
    CallSite, Dispatch, IntraPackageCallGraph, MethodRef, PackageCoordinates, TypeRecord,
};
pub use metrics::{ComparisonMatrix, ConfidenceInterval, DeltaReport, Mode, PackageVersionProfile};
pub use reach::{EntryPointSet, EntryPolicy, ReachabilityResult, SensitiveHit};
pub use stitch::{EdgeOrigin, InterPackageCallGraph, ResolvedEdge, TypeHierarchy};
