use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use rayon::prelude::*;
use sensreach_core::catalog::{default_catalog, load_catalog, map_cwe_to_owasp};
use sensreach_core::graph::parse_callgraph;
use sensreach_core::metrics::{
    build_profile, compare_group, corpus_top_apis, delta_audit, wald_interval, CompareOptions,
};
use sensreach_core::reach::{
    analyze as analyze_graph, parse_vulnerable_functions, vulnerable_function_scan,
};
use sensreach_core::report::{
    emit_csv, emit_delta_csv, emit_json, emit_top_csv, render_heatmap, render_text, HeatmapSpec,
    Scale,
};
use sensreach_core::stitch::stitch;
use sensreach_core::{
    CweHierarchy, EntryPolicy, IntraPackageCallGraph, Mode, PackageCoordinates,
    PackageVersionProfile, SensitiveApiCatalog, Warning,
};
use serde::Serialize;

use crate::config::{self, Resolved};
use crate::{
    AnalyzeArgs, CatalogValidateArgs, CompareArgs, CorpusTopArgs, DeltaArgs, Diagnostics, EntryArg,
    ModeArg, ScaleArg, StatsCiArgs, VulnScanArgs,
};

/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) -> anyhow::Result<()> {
    let mut stdout = std::io::stdout().lock();
    match stdout
        .write_all(text.as_bytes())
        .and_then(|()| stdout.flush())
    {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e).context("writing to stdout"),
        _ => Ok(()),
    }
}

fn read(path: &Path) -> anyhow::Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Files as given; directories contribute their `*.json` files in name order.
fn expand(paths: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .map(|e| e.map(|e| e.path()))
                .collect::<Result<_, _>>()
                .with_context(|| format!("listing {}", p.display()))?;
            files.retain(|f| f.is_file() && f.extension().is_some_and(|e| e == "json"));
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn load_graph(path: &Path) -> anyhow::Result<IntraPackageCallGraph> {
    let bytes = read(path)?;
    parse_callgraph(&bytes).with_context(|| format!("in call graph {}", path.display()))
}

fn load_profile(path: &Path) -> anyhow::Result<PackageVersionProfile> {
    let bytes = read(path)?;
    PackageVersionProfile::from_json(&bytes)
        .with_context(|| format!("in profile {}", path.display()))
}

fn load_profiles(paths: &[PathBuf]) -> anyhow::Result<Vec<PackageVersionProfile>> {
    expand(paths)?.iter().map(|p| load_profile(p)).collect()
}

enum CatalogRef {
    Shipped(&'static SensitiveApiCatalog),
    Loaded(SensitiveApiCatalog),
}

impl CatalogRef {
    fn open(path: Option<&Path>) -> anyhow::Result<CatalogRef> {
        Ok(match path {
            None => CatalogRef::Shipped(default_catalog()),
            Some(p) => CatalogRef::Loaded(
                load_catalog(&read(p)?).with_context(|| format!("in catalog {}", p.display()))?,
            ),
        })
    }

    fn get(&self) -> &SensitiveApiCatalog {
        match self {
            CatalogRef::Shipped(c) => c,
            CatalogRef::Loaded(c) => c,
        }
    }
}

fn mode_of(m: ModeArg) -> Mode {
    match m {
        ModeArg::Intra => Mode::Intra,
        ModeArg::Inter => Mode::Inter,
    }
}

pub fn catalog_validate(args: CatalogValidateArgs) -> anyhow::Result<()> {
    let catalog = CatalogRef::open(args.path.as_deref())?;
    let c = catalog.get();
    let mut out = format!(
        "catalog ok: {} entries, {} subcategories, {} categories\n",
        c.len(),
        c.subcategories().len(),
        c.categories().len()
    );
    if let Some(path) = args.cwe_hierarchy {
        let hierarchy = CweHierarchy::load(&read(&path)?)
            .with_context(|| format!("in CWE hierarchy {}", path.display()))?;
        let cwes: BTreeSet<u32> = c
            .entries()
            .iter()
            .flat_map(|e| e.cwe_ids.iter().copied())
            .collect();
        for cwe in cwes {
            let _ = writeln!(out, "CWE-{cwe} {}", map_cwe_to_owasp(&hierarchy, cwe));
        }
    }
    emit(&out)
}

fn profile_file_name(p: &PackageCoordinates, mode: Mode) -> String {
    let clean = |s: &str| s.replace(['/', '\\'], "_");
    format!(
        "{}_{}_{}.{mode}.json",
        clean(&p.group),
        clean(&p.artifact),
        clean(&p.version)
    )
}

fn analyze_one(
    core: &IntraPackageCallGraph,
    deps: &[IntraPackageCallGraph],
    cfg: &Resolved,
    catalog: &SensitiveApiCatalog,
) -> anyhow::Result<(PackageVersionProfile, Vec<Warning>)> {
    let mode = mode_of(cfg.mode);
    // Other versions of the core package are never its own dependencies.
    let deps: Vec<IntraPackageCallGraph> = match mode {
        Mode::Intra => Vec::new(),
        Mode::Inter => deps
            .iter()
            .filter(|d| !d.package.same_package(&core.package))
            .cloned()
            .collect(),
    };
    let (graph, mut warnings) =
        stitch(core, &deps).with_context(|| format!("stitching {}", core.package))?;
    let policy = match cfg.entry {
        EntryArg::All => EntryPolicy::AllCoreMethods,
        EntryArg::Public => EntryPolicy::PublicCoreMethods,
    };
    let (result, w) = analyze_graph(&graph, core, policy, catalog);
    warnings.extend(w);
    Ok((build_profile(core.package.clone(), mode, &result), warnings))
}

pub fn analyze(args: AnalyzeArgs, diag: Diagnostics) -> anyhow::Result<()> {
    let cfg = config::resolve(args)?;
    let catalog = CatalogRef::open(cfg.catalog.as_deref())?;
    let core_paths = expand(&cfg.core)?;
    let dep_paths = expand(&cfg.deps)?;
    if core_paths.is_empty() {
        bail!("no core call graphs found");
    }
    if cfg.out.is_some() && core_paths.len() > 1 {
        bail!(
            "--out takes a single core graph; use --out-dir for {}",
            core_paths.len()
        );
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .context("starting worker pool")?;
    let (deps, cores) = pool.install(|| {
        let deps: anyhow::Result<Vec<_>> = dep_paths.par_iter().map(|p| load_graph(p)).collect();
        let cores: anyhow::Result<Vec<_>> = core_paths.par_iter().map(|p| load_graph(p)).collect();
        (deps, cores)
    });
    let (deps, cores) = (deps?, cores?);

    let mut seen = BTreeMap::new();
    for (g, p) in cores.iter().zip(&core_paths) {
        if let Some(first) = seen.insert(&g.package, p) {
            bail!(
                "{} is analyzed twice ({} and {})",
                g.package,
                first.display(),
                p.display()
            );
        }
    }

    let results: Vec<anyhow::Result<(PackageVersionProfile, Vec<Warning>)>> = pool.install(|| {
        cores
            .par_iter()
            .map(|core| analyze_one(core, &deps, &cfg, catalog.get()))
            .collect()
    });
    let mut profiles = Vec::with_capacity(results.len());
    for r in results {
        profiles.push(r?);
    }
    profiles.sort_by(|a, b| a.0.package.cmp(&b.0.package));

    for (_, warnings) in &profiles {
        for w in warnings {
            diag.warn(w);
        }
    }
    for (p, _) in &profiles {
        let text = p.to_json();
        match (&cfg.out, &cfg.out_dir) {
            (Some(out), _) => write(out, text.as_bytes())?,
            (None, Some(dir)) => write(
                &dir.join(profile_file_name(&p.package, p.mode)),
                text.as_bytes(),
            )?,
            (None, None) => emit(&text)?,
        }
    }
    Ok(())
}

pub fn compare(args: CompareArgs) -> anyhow::Result<()> {
    let profiles = load_profiles(&args.profiles)?;
    let modes: BTreeSet<Mode> = profiles.iter().map(|p| p.mode).collect();
    if modes.len() > 1 {
        bail!("cannot compare intra and inter profiles in one group");
    }
    let row_order = if args.order.is_empty() {
        None
    } else {
        Some(
            args.order
                .iter()
                .map(|s| s.trim().parse::<PackageCoordinates>())
                .collect::<Result<Vec<_>, _>>()?,
        )
    };
    let matrix = compare_group(
        &args.group,
        &profiles,
        &CompareOptions {
            row_order,
            shuffle_seed: args.shuffle_seed,
        },
    )?;
    let mut spec = HeatmapSpec::new(matrix);
    spec.scale = match args.scale {
        ScaleArg::Linear => Scale::Linear,
        ScaleArg::Log1p => Scale::Log1p,
    };
    let wrote_any = args.svg.is_some() || args.csv.is_some() || args.json.is_some();
    if let Some(p) = &args.svg {
        write(p, &render_heatmap(&spec)?)?;
    }
    if let Some(p) = &args.csv {
        write(p, &emit_csv(&spec.matrix)?)?;
    }
    if let Some(p) = &args.json {
        write(p, &emit_json(&spec.matrix)?)?;
    }
    if !wrote_any {
        emit(&render_text(&spec.matrix))?;
    }
    Ok(())
}

pub fn delta(args: DeltaArgs) -> anyhow::Result<()> {
    let old = load_profile(&args.old)?;
    let new = load_profile(&args.new)?;
    let report = delta_audit(&old, &new)?;
    if let Some(p) = &args.csv {
        write(p, &emit_delta_csv(&report)?)?;
    }
    if let Some(p) = &args.json {
        write(p, &emit_json(&report)?)?;
    }
    let mut out = format!(
        "{} -> {} ({}): total {:+}\n",
        old.package, new.package.version, old.mode, report.total_delta
    );
    for (s, d) in report
        .per_subcategory_delta
        .iter()
        .filter(|(_, d)| **d != 0)
    {
        let _ = writeln!(out, "  {:<32} {d:+}", s.qualified_name());
    }
    for (api, d) in report.per_api_delta.iter().filter(|(_, d)| **d != 0) {
        let tag = if report.added_apis.contains(api) {
            " (new)"
        } else if report.removed_apis.contains(api) {
            " (gone)"
        } else {
            ""
        };
        let _ = writeln!(out, "  {:<32} {d:+}{tag}", api.display_name());
    }
    emit(&out)
}

#[derive(Serialize)]
struct TopRow {
    rank: usize,
    api: String,
    category: Option<String>,
    subcategory: Option<String>,
    aggregate: f64,
    share: f64,
}

pub fn corpus_top(args: CorpusTopArgs, diag: Diagnostics) -> anyhow::Result<()> {
    let mut profiles = load_profiles(&args.profiles)?;
    match args.mode {
        Some(m) => profiles.retain(|p| p.mode == mode_of(m)),
        None => {
            let modes: BTreeSet<Mode> = profiles.iter().map(|p| p.mode).collect();
            if modes.len() > 1 {
                bail!("profiles mix intra and inter modes; choose one with --mode");
            }
        }
    }
    let (top, warnings) = corpus_top_apis(&profiles);
    for w in &warnings {
        diag.warn(w);
    }
    let top: Vec<_> = top.into_iter().take(args.top).collect();
    if let Some(p) = &args.csv {
        write(p, &emit_top_csv(&top)?)?;
    }
    let catalog = default_catalog();
    let rows: Vec<TopRow> = top
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let entry = catalog.get(&t.api);
            TopRow {
                rank: i + 1,
                api: t.api.display_name(),
                category: entry.map(|e| e.category.to_string()),
                subcategory: entry.map(|e| e.subcategory.to_string()),
                aggregate: t.aggregate,
                share: t.share,
            }
        })
        .collect();
    if let Some(p) = &args.json {
        write(p, &emit_json(&rows)?)?;
    }
    let width = rows.iter().map(|r| r.api.len()).max().unwrap_or(3).max(3);
    let mut out = format!(
        "{:>4}  {:<width$}  {:<18}  {:>12}  {:>7}\n",
        "rank", "api", "subcategory", "calls", "share"
    );
    for r in &rows {
        let _ = writeln!(
            out,
            "{:>4}  {:<width$}  {:<18}  {:>12.2}  {:>6.2}%",
            r.rank,
            r.api,
            r.subcategory.as_deref().unwrap_or("-"),
            r.aggregate,
            r.share * 100.0
        );
    }
    emit(&out)
}

pub fn stats_ci(args: StatsCiArgs) -> anyhow::Result<()> {
    let ci = wald_interval(args.p, args.n, args.z)?;
    if args.json {
        emit(&String::from_utf8(emit_json(&ci)?)?)
    } else {
        emit(&format!("lo={:.4} hi={:.4}\n", ci.lo, ci.hi))
    }
}

#[derive(Serialize)]
struct VulnReport<'a> {
    functions: BTreeMap<String, &'a [sensreach_core::reach::DirectHit]>,
    functions_with_hits: usize,
    total: usize,
    proportion: f64,
}

pub fn vuln_scan(args: VulnScanArgs, diag: Diagnostics) -> anyhow::Result<()> {
    let catalog = CatalogRef::open(args.catalog.as_deref())?;
    let graph = load_graph(&args.core)?;
    let functions = parse_vulnerable_functions(&read(&args.functions)?)
        .with_context(|| format!("in {}", args.functions.display()))?;
    if functions.is_empty() {
        bail!(
            "no vulnerable functions listed in {}",
            args.functions.display()
        );
    }
    let (hits, warnings) = vulnerable_function_scan(&graph, &functions, catalog.get());
    for w in &warnings {
        diag.warn(w);
    }
    let with_hits = hits.values().filter(|h| !h.is_empty()).count();
    let total = hits.len();
    let proportion = with_hits as f64 / total as f64;
    if let Some(p) = &args.json {
        let report = VulnReport {
            functions: hits
                .iter()
                .map(|(f, h)| (f.to_string(), h.as_slice()))
                .collect(),
            functions_with_hits: with_hits,
            total,
            proportion,
        };
        write(p, &emit_json(&report)?)?;
    }
    let mut out = String::new();
    for (f, h) in &hits {
        let apis: BTreeSet<String> = h.iter().map(|x| x.api.id.display_name()).collect();
        let listed = if apis.is_empty() {
            String::new()
        } else {
            format!(": {}", apis.into_iter().collect::<Vec<_>>().join(", "))
        };
        let n: u64 = h.iter().map(|x| u64::from(x.multiplicity)).sum();
        let _ = writeln!(out, "{f} {n} direct sensitive call(s){listed}");
    }
    let _ = writeln!(
        out,
        "functions_with_hits={with_hits} total={total} proportion={proportion:.4}"
    );
    emit(&out)
}
