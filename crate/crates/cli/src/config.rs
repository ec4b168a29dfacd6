use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Deserialize;

use crate::{AnalyzeArgs, EntryArg, ModeArg};

/// Optional JSON file with the same settings as the `analyze` flags.
/// Relative paths resolve against the file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub catalog: Option<PathBuf>,
    #[serde(default)]
    pub core: Vec<PathBuf>,
    #[serde(default)]
    pub deps: Vec<PathBuf>,
    pub mode: Option<ModeArg>,
    pub entry: Option<EntryArg>,
    pub out: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
}

/// Fully resolved analyze settings.
#[derive(Debug)]
pub struct Resolved {
    pub catalog: Option<PathBuf>,
    pub core: Vec<PathBuf>,
    pub deps: Vec<PathBuf>,
    pub mode: ModeArg,
    pub entry: EntryArg,
    pub out: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub jobs: usize,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: RunConfig = serde_json::from_slice(&bytes)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.catalog.iter_mut().for_each(fix);
        cfg.core.iter_mut().for_each(fix);
        cfg.deps.iter_mut().for_each(fix);
        cfg.out.iter_mut().for_each(fix);
        cfg.out_dir.iter_mut().for_each(fix);
        Ok(cfg)
    }
}

pub fn resolve(args: AnalyzeArgs) -> anyhow::Result<Resolved> {
    let cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let pick = |flag: Vec<PathBuf>, file: Vec<PathBuf>| if flag.is_empty() { file } else { flag };
    let core = pick(args.core, cfg.core);
    let deps = pick(args.deps, cfg.deps);
    let (out, out_dir) = if args.out.is_some() || args.out_dir.is_some() {
        (args.out, args.out_dir)
    } else {
        (cfg.out, cfg.out_dir)
    };
    let mode = args.mode.or(cfg.mode).unwrap_or(if deps.is_empty() {
        ModeArg::Intra
    } else {
        ModeArg::Inter
    });
    let jobs = match args.jobs.or(cfg.jobs) {
        Some(j) => j,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };

    if core.is_empty() {
        bail!("no core call graph given (use --core)");
    }
    if mode == ModeArg::Intra && !deps.is_empty() {
        bail!("--mode intra does not take dependency graphs");
    }
    if jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    if out.is_some() && out_dir.is_some() {
        bail!("give either an output file or an output directory, not both");
    }
    Ok(Resolved {
        catalog: args.catalog.or(cfg.catalog),
        core,
        deps,
        mode,
        entry: args.entry.or(cfg.entry).unwrap_or(EntryArg::All),
        out,
        out_dir,
        jobs,
    })
}
