use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{debug, info, warn};

use crate::inconsistency::{analyze, attribution_tally, InconsistencyError};
use crate::io::{self, IngestError, SynthSpec};
use crate::model::{prototype::DEFAULT_SHOTS, ModelConfig, ModelSpec};
use crate::sheaf::Assignment;
use crate::topology::{GroundSet, OpenId, Topology, TopologyError, DEFAULT_CAP};

#[derive(Parser, Debug)]
#[command(
    name = "modelsheaf",
    version,
    about = "Model inconsistency over subpopulation topologies"
)]
pub struct Cli {
    /// Log diagnostics to stderr (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate the topology and print its structure.
    Topology(TopologyArgs),
    /// Compute local, filtered and global inconsistency.
    Analyze(AnalyzeArgs),
    /// Tally remove-one-part attribution over a disjoint subbasis.
    Attribute(AnalyzeArgs),
    /// Write a planted-defect synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
pub struct TopologyArgs {
    /// Data CSV whose ids form the ground set.
    #[arg(long, conflicts_with = "ground", required_unless_present = "ground")]
    pub data: Option<PathBuf>,
    /// Ground labels, comma separated, instead of --data.
    #[arg(long, value_delimiter = ',')]
    pub ground: Option<Vec<String>>,
    #[arg(long)]
    pub subbasis: PathBuf,
    /// Print the filtration levels below this open set (comma separated labels).
    #[arg(long, value_delimiter = ',')]
    pub set: Option<Vec<String>>,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: usize,
    /// Also write the topology as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub subbasis: PathBuf,
    /// Model config JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// `id,label` CSV for the prototype model.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Explicit assignment JSON; defaults to restricting the data to every open set.
    #[arg(long)]
    pub assignment: Option<PathBuf>,
    /// Filtration depths for filtered inconsistency.
    #[arg(long = "j", value_delimiter = ',', default_values_t = [1usize])]
    pub depths: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: usize,
    /// Tolerance for the assignment consistency check.
    #[arg(long, default_value_t = 0.0)]
    pub tol: f64,
    /// Overrides the model config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Report JSON path (`attribute` also writes a sibling `.csv`).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 6)]
    pub parts: usize,
    #[arg(long, default_value_t = 40)]
    pub per_part: usize,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 10.0)]
    pub separation: f64,
    /// Index of the part whose labels get shuffled.
    #[arg(long)]
    pub defect: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Shots the data must support downstream.
    #[arg(long, default_value_t = DEFAULT_SHOTS)]
    pub shots: usize,
}

/// Raised for anything the user supplied that cannot be used.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct InvalidInput(pub String);

/// Process exit code for an error: 3 for a cap overflow, 4 for a subbasis
/// that is not a disjoint cover, 2 for every other input problem.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(TopologyError::CapExceeded { .. }) = cause.downcast_ref() {
            return 3;
        }
        if let Some(IngestError::Topology(TopologyError::CapExceeded { .. })) = cause.downcast_ref()
        {
            return 3;
        }
        match cause.downcast_ref::<InconsistencyError>() {
            Some(InconsistencyError::NotDisjointCover) => return 4,
            Some(InconsistencyError::Topology(TopologyError::CapExceeded { .. })) => return 3,
            _ => {}
        }
    }
    2
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Topology(a) => cmd_topology(a),
        Command::Analyze(a) => cmd_analyze(a, false),
        Command::Attribute(a) => cmd_analyze(a, true),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn build_topology(ground: GroundSet, subbasis: &Path, cap: usize) -> Result<Topology> {
    let spec = io::read_subbasis(subbasis)?;
    let t = Topology::generate(ground, &spec, cap)?;
    info!(
        "{} open sets from {} subbasis elements{}",
        t.len(),
        spec.len(),
        if t.is_disjoint_cover() {
            " (disjoint cover)"
        } else {
            ""
        }
    );
    Ok(t)
}

fn braces(t: &Topology, id: OpenId) -> String {
    format!("{{{}}}", t.ground().sorted_labels(t.open(id)).join(","))
}

fn cmd_topology(a: TopologyArgs) -> Result<()> {
    let ground = match (&a.data, a.ground) {
        (Some(path), _) => io::read_data(path)?.ground,
        (None, Some(labels)) => GroundSet::new(labels)?,
        (None, None) => unreachable!("clap requires one of --data/--ground"),
    };
    let t = build_topology(ground, &a.subbasis, a.cap)?;

    let mut out = std::io::stdout().lock();
    writeln!(out, "{} open sets", t.len())?;
    writeln!(out, "{} cover edges", t.cover_edge_count())?;
    writeln!(out, "longest chain {}", t.longest_chain())?;
    writeln!(out, "hasse:")?;
    for id in t.ids().rev().filter(|&id| !t.covers(id).is_empty()) {
        let covers: Vec<String> = t.covers(id).iter().map(|&c| braces(&t, c)).collect();
        writeln!(out, "  {} > {}", braces(&t, id), covers.join(" "))?;
    }
    if let Some(labels) = a.set {
        let set = t.ground().subset("--set", &labels)?;
        let f = t.filtration(&set)?;
        for j in 0..=f.max_level() {
            let level: Vec<String> = f.at(j).into_iter().map(|id| braces(&t, id)).collect();
            writeln!(out, "level {j}: {}", level.join(" "))?;
        }
    }
    if let Some(path) = a.out {
        fs::write(&path, io::topology_json(&t))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn load_model(a: &AnalyzeArgs, ground: &GroundSet, dim: usize) -> Result<ModelSpec> {
    let config = io::read_model_config(&a.model)?;
    let labels = match (&config, &a.labels) {
        (
            ModelConfig::Prototype {
                s_aliases,
                ns_aliases,
                ..
            },
            Some(path),
        ) => Some(io::read_labels(path, ground, s_aliases, ns_aliases)?),
        (_, Some(_)) => {
            warn!("--labels ignored for the {config:?} model");
            None
        }
        _ => None,
    };
    let model = io::build_model(&config, labels, a.seed).map_err(InvalidInput)?;
    model
        .validate(dim, ground.len())
        .map_err(|e| InvalidInput(format!("{}: {e}", a.model.display())))?;
    Ok(model)
}

fn cmd_analyze(a: AnalyzeArgs, attribute_only: bool) -> Result<()> {
    if a.tol.is_nan() || a.tol < 0.0 {
        bail!(InvalidInput(format!("--tol must be >= 0, got {}", a.tol)));
    }
    let table = io::read_data(&a.data)?;
    let dim = table.global.dim();
    let model = load_model(&a, &table.ground, dim)?;
    let t = build_topology(table.ground, &a.subbasis, a.cap)?;

    let assignment = match &a.assignment {
        Some(path) => {
            let asg = io::read_assignment(path, &t, dim)?;
            if let Err(w) = asg.check_consistency(&t, a.tol) {
                warn!(
                    "assignment is inconsistent: {} vs {} at `{}` ({:?} != {:?})",
                    braces(&t, w.superset),
                    braces(&t, w.subset),
                    t.ground().label(w.element),
                    w.restricted,
                    w.assigned
                );
            }
            asg
        }
        None => Assignment::from_global(&t, &table.global)?,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.threads)
        .build()
        .map_err(|e| anyhow!("thread pool: {e}"))?;
    debug!("running on {} threads", pool.current_num_threads());

    let mut stdout = std::io::stdout().lock();
    if attribute_only {
        let tally = pool.install(|| attribution_tally(&t, &model, &assignment))?;
        fs::write(&a.out, io::attribution_json(&t, &tally))
            .with_context(|| format!("writing {}", a.out.display()))?;
        let csv_path = a.out.with_extension("csv");
        fs::write(&csv_path, io::attribution_csv(&tally))
            .with_context(|| format!("writing {}", csv_path.display()))?;
        if !tally.skipped.is_empty() {
            warn!(
                "{} open sets had no defined remove-one candidate",
                tally.skipped.len()
            );
        }
        for (name, count) in tally.ranked() {
            writeln!(stdout, "{name}\t{count}")?;
        }
        return Ok(());
    }

    let report = pool.install(|| analyze(&t, &model, &assignment, &a.depths))?;
    fs::write(&a.out, io::report_json(&t, &report))
        .with_context(|| format!("writing {}", a.out.display()))?;

    let undefined = report
        .opens
        .iter()
        .filter(|o| o.model.is_undefined())
        .count();
    if undefined > 0 {
        warn!("model undefined on {undefined} open sets; their comparisons were skipped");
    }
    writeln!(
        stdout,
        "global inconsistency {} at {}",
        io::round_sig(report.global.value),
        braces(&t, report.global.at)
    )?;
    let mut ranked: Vec<_> = report.opens.iter().collect();
    ranked.sort_by(|x, y| {
        y.local
            .value
            .total_cmp(&x.local.value)
            .then(x.id.cmp(&y.id))
    });
    for o in ranked.into_iter().take(5) {
        let witness = o.local.witness.map_or("-".to_string(), |w| braces(&t, w));
        writeln!(
            stdout,
            "  {} local {} witness {}",
            braces(&t, o.id),
            io::round_sig(o.local.value),
            witness
        )?;
    }
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        parts: a.parts,
        per_part: a.per_part,
        dim: a.dim,
        separation: a.separation,
        defect: a.defect,
        seed: a.seed,
    };
    spec.validate(2 * a.shots + 1).map_err(InvalidInput)?;
    let data = io::generate_synth(&spec);
    io::write_synth(&data, &a.out)?;
    writeln!(
        std::io::stdout().lock(),
        "wrote {} elements in {} parts to {}",
        data.ids.len(),
        data.parts.len(),
        a.out.display()
    )?;
    Ok(())
}
