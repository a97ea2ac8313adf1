//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error.
//! Diagnostics go to stderr; data goes only to the files named by `--out`.

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::eval::{recall_at_k, DEFAULT_K_CLIPS};
use crate::index::{search_backends, FrameIndex, SearchBackend, DEFAULT_BACKEND};
use crate::io::{self, reports};
use crate::miner::{dedup_strategies, filter_corpus, mine_with, CorpusFilter};
use crate::parallel::{with_thread_budget, THREADS_ENV};
use crate::stats::{
    compute_stats_with_domains, draw_review_sample, score_review, sweep_with, SweepAxis,
};
use crate::types::{validate_manifest_with_durations, FrameStream, MiningConfig, SeedRecord};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

pub const DEFAULT_SHARDS: usize = 16;

#[derive(Parser, Debug)]
#[command(name = "clipmine", version, about = "Mine video clips for image captions by frame similarity")]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,

    /// Validate inputs and print the planned work without writing anything.
    #[arg(long, global = true)]
    dry_run: bool,

    /// Print the compiled-in defaults as a config file and exit.
    #[arg(long)]
    show_defaults: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a seed set and rewrite it in canonical form.
    IngestSeeds {
        #[command(flatten)]
        seeds: SeedInput,
        #[arg(long)]
        out_embeddings: PathBuf,
        #[arg(long)]
        out_captions: PathBuf,
        /// Unit-normalize embeddings on the way through.
        #[arg(long)]
        normalize: bool,
    },
    /// Validate a frames directory and rewrite it in canonical form.
    IngestFrames {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        normalize: bool,
    },
    /// Keep only videos whose metadata passes the corpus filter.
    Filter {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        filter: FilterArgs,
    },
    /// Transfer seed captions onto matching video clips.
    Mine {
        #[command(flatten)]
        seeds: SeedInput,
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        mining: MiningArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Dataset statistics for a manifest.
    Stats {
        #[arg(long)]
        manifest: PathBuf,
        /// Frames directory supplying domain labels.
        #[arg(long)]
        frames: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mine once per value of one parameter and record the dataset size.
    Sweep {
        #[command(flatten)]
        seeds: SeedInput,
        #[arg(long)]
        frames: PathBuf,
        /// `tau` or `t-span`.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        mining: MiningArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Recall@{1,5,10} of text-to-video retrieval with K-clip averaging.
    Eval {
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        query_sidecar: PathBuf,
        /// Frames directory; each video's frames are its candidate clips.
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        k_clips: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a random sample of pairs for manual review.
    SampleReview {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        size: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate a filled-in review sample.
    ScoreReview {
        #[arg(long)]
        review: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check files for format and invariant violations.
    Validate {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long, requires = "seed_captions")]
        seeds: Option<PathBuf>,
        #[arg(long, requires = "seeds")]
        seed_captions: Option<PathBuf>,
        #[arg(long)]
        frames: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct SeedInput {
    /// Seed embedding file.
    #[arg(long)]
    seeds: PathBuf,
    /// Seed caption sidecar.
    #[arg(long)]
    seed_captions: PathBuf,
}

#[derive(Args, Debug, Default)]
struct MiningArgs {
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<f64>,
    /// Clip span in seconds.
    #[arg(long)]
    span: Option<f64>,
    #[arg(long)]
    topk: Option<usize>,
    #[arg(long)]
    frame_rate: Option<f64>,
    /// Temporal de-dup window in seconds (defaults to the span).
    #[arg(long)]
    nms_window: Option<f64>,
    #[arg(long)]
    query_depth: Option<usize>,
    #[arg(long)]
    dedup: Option<String>,
    /// Score with raw dot products instead of cosine similarity.
    #[arg(long)]
    raw_similarity: bool,
}

#[derive(Args, Debug, Default)]
struct FilterArgs {
    #[arg(long)]
    min_viewcount: Option<u64>,
    #[arg(long)]
    max_length: Option<f64>,
    #[arg(long)]
    min_age_days: Option<u64>,
    #[arg(long)]
    max_age_days: Option<u64>,
    /// Do not require the content_ok flag.
    #[arg(long)]
    allow_flagged: bool,
}

#[derive(Args, Debug, Default)]
struct SearchArgs {
    #[arg(long)]
    shards: Option<usize>,
    #[arg(long)]
    backend: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub mining: MiningSection,
    pub filter: FilterSection,
    pub eval: EvalSection,
    pub run: RunSection,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiningSection {
    pub tau: Option<f64>,
    pub t_span_s: Option<f64>,
    pub top_k: Option<usize>,
    pub frame_rate_hz: Option<f64>,
    pub normalize: Option<bool>,
    pub nms_window_s: Option<f64>,
    pub query_depth_factor: Option<usize>,
    pub dedup: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub min_viewcount: Option<u64>,
    pub max_length_s: Option<f64>,
    pub min_age_days: Option<u64>,
    pub max_age_days: Option<u64>,
    pub require_content_ok: Option<bool>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub k_clips: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub shards: Option<usize>,
    pub backend: Option<String>,
    pub threads: Option<usize>,
    pub rng_seed: Option<u64>,
}

impl ConfigFile {
    /// The compiled-in defaults, every field populated.
    pub fn defaults() -> Self {
        let m = MiningConfig::default();
        let f = CorpusFilter::default();
        Self {
            mining: MiningSection {
                tau: Some(m.tau),
                t_span_s: Some(m.t_span_s),
                top_k: Some(m.top_k),
                frame_rate_hz: Some(m.frame_rate_hz),
                normalize: Some(m.normalize),
                nms_window_s: Some(m.nms_window_s),
                query_depth_factor: Some(m.query_depth_factor),
                dedup: Some(m.dedup),
            },
            filter: FilterSection {
                min_viewcount: Some(f.min_viewcount),
                max_length_s: Some(f.max_length_s),
                min_age_days: Some(f.min_age_days),
                max_age_days: Some(f.max_age_days),
                require_content_ok: Some(f.require_content_ok),
            },
            eval: EvalSection {
                k_clips: Some(DEFAULT_K_CLIPS),
            },
            run: RunSection {
                shards: Some(DEFAULT_SHARDS),
                backend: Some(DEFAULT_BACKEND.to_owned()),
                threads: Some(0),
                rng_seed: Some(0),
            },
        }
    }
}

/// The defaults rendered as a TOML config file.
pub fn defaults_toml() -> String {
    toml::to_string(&ConfigFile::defaults()).expect("defaults serialize")
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config_error() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Data(e)
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

/// Fully resolved settings for one invocation.
#[derive(Debug)]
struct RunConfig {
    mining: MiningConfig,
    filter: CorpusFilter,
    k_clips: usize,
    shards: usize,
    backend: String,
    threads: usize,
    rng_seed: u64,
    dry_run: bool,
}

impl RunConfig {
    fn resolve(cli: &Cli, file: ConfigFile) -> CliResult<Self> {
        let (mining_args, filter_args, search_args, k_clips_flag, seed_flag) = match &cli.command {
            Some(Command::Mine { mining, search, .. } | Command::Sweep { mining, search, .. }) => {
                (Some(mining), None, Some(search), None, None)
            }
            Some(Command::Filter { filter, .. }) => (None, Some(filter), None, None, None),
            Some(Command::Eval { k_clips, .. }) => (None, None, None, *k_clips, None),
            Some(Command::SampleReview { seed, .. }) => (None, None, None, None, *seed),
            _ => (None, None, None, None, None),
        };

        let mut mining = MiningConfig::default();
        let fm = file.mining;
        let m = mining_args.map_or_else(MiningArgs::default, |a| MiningArgs {
            tau: a.tau,
            span: a.span,
            topk: a.topk,
            frame_rate: a.frame_rate,
            nms_window: a.nms_window,
            query_depth: a.query_depth,
            dedup: a.dedup.clone(),
            raw_similarity: a.raw_similarity,
        });
        mining.tau = m.tau.or(fm.tau).unwrap_or(mining.tau);
        mining.t_span_s = m.span.or(fm.t_span_s).unwrap_or(mining.t_span_s);
        mining.top_k = m.topk.or(fm.top_k).unwrap_or(mining.top_k);
        mining.frame_rate_hz = m.frame_rate.or(fm.frame_rate_hz).unwrap_or(mining.frame_rate_hz);
        mining.normalize = if m.raw_similarity {
            false
        } else {
            fm.normalize.unwrap_or(mining.normalize)
        };
        // The de-dup window follows the span unless set explicitly.
        mining.nms_window_s = m.nms_window.or(fm.nms_window_s).unwrap_or(mining.t_span_s);
        mining.query_depth_factor = m
            .query_depth
            .or(fm.query_depth_factor)
            .unwrap_or(mining.query_depth_factor);
        mining.dedup = m.dedup.or(fm.dedup).unwrap_or(mining.dedup);
        mining.validate()?;
        dedup_strategies().get(&mining.dedup)?;

        let mut filter = CorpusFilter::default();
        let ff = file.filter;
        let fa = filter_args.map_or_else(FilterArgs::default, |a| FilterArgs {
            min_viewcount: a.min_viewcount,
            max_length: a.max_length,
            min_age_days: a.min_age_days,
            max_age_days: a.max_age_days,
            allow_flagged: a.allow_flagged,
        });
        filter.min_viewcount = fa.min_viewcount.or(ff.min_viewcount).unwrap_or(filter.min_viewcount);
        filter.max_length_s = fa.max_length.or(ff.max_length_s).unwrap_or(filter.max_length_s);
        filter.min_age_days = fa.min_age_days.or(ff.min_age_days).unwrap_or(filter.min_age_days);
        filter.max_age_days = fa.max_age_days.or(ff.max_age_days).unwrap_or(filter.max_age_days);
        filter.require_content_ok = if fa.allow_flagged {
            false
        } else {
            ff.require_content_ok.unwrap_or(filter.require_content_ok)
        };
        filter.validate()?;

        let k_clips = k_clips_flag.or(file.eval.k_clips).unwrap_or(DEFAULT_K_CLIPS);
        if k_clips == 0 {
            return Err(Failure::Usage("--k-clips must be >= 1".into()));
        }
        let shards = search_args
            .and_then(|s| s.shards)
            .or(file.run.shards)
            .unwrap_or(DEFAULT_SHARDS);
        if shards == 0 {
            return Err(Failure::Usage("--shards must be >= 1".into()));
        }
        let backend = search_args
            .and_then(|s| s.backend.clone())
            .or(file.run.backend)
            .unwrap_or_else(|| DEFAULT_BACKEND.to_owned());
        search_backends().get(&backend)?;

        Ok(Self {
            mining,
            filter,
            k_clips,
            shards,
            backend,
            threads: cli.threads.or(file.run.threads).unwrap_or(0),
            rng_seed: seed_flag.or(file.run.rng_seed).unwrap_or(0),
            dry_run: cli.dry_run,
        })
    }
}

/// Parses `argv` (including the program name), runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .format_target(false)
        .try_init();

    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

fn dispatch(cli: Cli) -> CliResult {
    if cli.show_defaults {
        print!("{}", defaults_toml());
        return Ok(());
    }
    if cli.command.is_none() {
        return Err(Failure::Usage(
            "no subcommand given (see --help)".into(),
        ));
    }
    let file = match &cli.config {
        Some(path) => load_config(path)?,
        None => ConfigFile::default(),
    };
    let config = RunConfig::resolve(&cli, file)?;
    check_inputs_exist(cli.command.as_ref().unwrap())?;
    let threads = config.threads;
    let command = cli.command.unwrap();
    with_thread_budget(threads, move || execute(command, &config))?
}

fn load_config(path: &Path) -> CliResult<ConfigFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn check_inputs_exist(command: &Command) -> CliResult {
    let inputs: Vec<&Path> = match command {
        Command::IngestSeeds { seeds, .. } => vec![&seeds.seeds, &seeds.seed_captions],
        Command::IngestFrames { frames, .. } | Command::Filter { frames, .. } => vec![frames],
        Command::Mine { seeds, frames, .. } | Command::Sweep { seeds, frames, .. } => {
            vec![&seeds.seeds, &seeds.seed_captions, frames]
        }
        Command::Stats { manifest, frames, .. } => {
            let mut v: Vec<&Path> = vec![manifest];
            v.extend(frames.as_deref());
            v
        }
        Command::Eval {
            queries,
            query_sidecar,
            candidates,
            ..
        } => vec![queries, query_sidecar, candidates],
        Command::SampleReview { manifest, .. } => vec![manifest],
        Command::ScoreReview { review, .. } => vec![review],
        Command::Validate {
            manifest,
            embeddings,
            seeds,
            seed_captions,
            frames,
        } => {
            let v: Vec<&Path> = [manifest, embeddings, seeds, seed_captions, frames]
                .into_iter()
                .filter_map(|p| p.as_deref())
                .collect();
            if v.is_empty() {
                return Err(Failure::Usage("validate: nothing to check".into()));
            }
            v
        }
    };
    match inputs.iter().find(|p| !p.exists()) {
        Some(missing) => Err(Failure::Usage(format!(
            "input path does not exist: {}",
            missing.display()
        ))),
        None => Ok(()),
    }
}

fn plan(config: &RunConfig, what: String) -> bool {
    if config.dry_run {
        eprintln!("dry run: {what}");
    }
    config.dry_run
}

fn load_seeds(input: &SeedInput) -> CliResult<Vec<SeedRecord>> {
    Ok(io::read_seed_set(&input.seeds, &input.seed_captions)?)
}

fn build(streams: &[FrameStream], config: &RunConfig) -> CliResult<FrameIndex> {
    let index = FrameIndex::build(streams, config.mining.normalize, config.shards)?;
    log::info!(
        "indexed {} frames from {} videos (dim {}, {} shards)",
        index.len(),
        index.video_count(),
        index.dim(),
        index.shards().len()
    );
    Ok(index)
}

fn execute(command: Command, config: &RunConfig) -> CliResult {
    let backends = search_backends();
    let backend: &dyn SearchBackend = backends.get(&config.backend)?;
    match command {
        Command::IngestSeeds {
            seeds,
            out_embeddings,
            out_captions,
            normalize,
        } => {
            let mut records = load_seeds(&seeds)?;
            if normalize {
                records = records
                    .iter()
                    .map(|s| {
                        SeedRecord::new(s.seed_id(), s.caption(), s.embedding().to_unit()?)
                    })
                    .collect::<Result<_, Error>>()?;
            }
            crate::types::check_seed_set(&records)?;
            if plan(config, format!("write {} seeds to {}", records.len(), out_embeddings.display())) {
                return Ok(());
            }
            io::write_seed_set(&records, &out_embeddings, &out_captions)?;
            log::info!("wrote {} seeds", records.len());
        }
        Command::IngestFrames {
            frames,
            out,
            normalize,
        } => {
            let mut streams = io::read_frame_dir(&frames)?;
            if normalize {
                streams = streams
                    .into_iter()
                    .map(normalize_stream)
                    .collect::<Result<_, Error>>()?;
            }
            if plan(config, format!("write {} videos to {}", streams.len(), out.display())) {
                return Ok(());
            }
            io::write_frame_dir(&out, &streams)?;
            log::info!("wrote {} videos", streams.len());
        }
        Command::Filter { frames, out, .. } => {
            let streams = io::read_frame_dir(&frames)?;
            let total = streams.len();
            let outcome = filter_corpus(streams, &config.filter)?;
            for (id, why) in &outcome.rejected {
                log::warn!("rejected video `{id}`: {why}");
            }
            log::info!(
                "kept {} of {} videos ({} failed a predicate, {} lacked metadata)",
                outcome.kept.len(),
                total,
                outcome.excluded.len(),
                outcome.rejected.len()
            );
            if plan(config, format!("write {} videos to {}", outcome.kept.len(), out.display())) {
                return Ok(());
            }
            io::write_frame_dir(&out, &outcome.kept)?;
        }
        Command::Mine {
            seeds, frames, out, ..
        } => {
            let seeds = load_seeds(&seeds)?;
            let streams = io::read_frame_dir(&frames)?;
            let index = build(&streams, config)?;
            if plan(
                config,
                format!(
                    "mine {} seeds against {} frames with {:?}, write {}",
                    seeds.len(),
                    index.len(),
                    config.mining,
                    out.display()
                ),
            ) {
                return Ok(());
            }
            let manifest = mine_with(&seeds, &index, &config.mining, backend)?;
            let c = manifest.counters;
            log::info!(
                "mined {} pairs, {} unique clips, {} unique captions, {:.3} h",
                c.n_pairs,
                c.n_unique_clips,
                c.n_unique_captions,
                c.total_clip_hours
            );
            io::write_manifest_file(&manifest, &out)?;
        }
        Command::Stats {
            manifest,
            frames,
            out,
        } => {
            let manifest = io::read_manifest_file(&manifest)?;
            let mut domains = HashMap::new();
            if let Some(dir) = frames {
                for stream in io::read_frame_dir(&dir)? {
                    if let Some(label) = &stream.metadata().domain_label {
                        domains.insert(stream.video_id().to_owned(), label.clone());
                    }
                }
            }
            let report = compute_stats_with_domains(&manifest, &domains);
            if plan(config, format!("write stats to {}", out.display())) {
                return Ok(());
            }
            reports::write_stats_file(&report, &out)?;
        }
        Command::Sweep {
            seeds,
            frames,
            axis,
            values,
            out,
            ..
        } => {
            let axis: SweepAxis = axis.parse()?;
            let seeds = load_seeds(&seeds)?;
            let streams = io::read_frame_dir(&frames)?;
            let index = build(&streams, config)?;
            if plan(
                config,
                format!("sweep {axis} over {values:?}, write {}", out.display()),
            ) {
                return Ok(());
            }
            let result = sweep_with(&seeds, &index, &config.mining, axis, &values, backend)?;
            for p in &result.points {
                log::info!("{axis} = {}: {} pairs", p.value, p.n_pairs);
            }
            reports::write_sweep_file(&result, &out)?;
        }
        Command::Eval {
            queries,
            query_sidecar,
            candidates,
            out,
            ..
        } => {
            let queries: Vec<_> = io::read_query_set(&queries, &query_sidecar)?
                .into_iter()
                .map(|q| (q.embedding, q.video_id))
                .collect();
            let candidates: BTreeMap<_, _> = io::read_frame_dir(&candidates)?
                .into_iter()
                .map(|s| {
                    let clips = s.frames().iter().map(|f| f.embedding.clone()).collect();
                    (s.video_id().to_owned(), clips)
                })
                .collect();
            if plan(
                config,
                format!(
                    "rank {} candidates for {} queries (k_clips {}), write {}",
                    candidates.len(),
                    queries.len(),
                    config.k_clips,
                    out.display()
                ),
            ) {
                return Ok(());
            }
            let report = recall_at_k(&queries, &candidates, config.k_clips)?;
            reports::write_recall_file(&report, &out)?;
        }
        Command::SampleReview {
            manifest, size, out, ..
        } => {
            let manifest = io::read_manifest_file(&manifest)?;
            let sample = draw_review_sample(&manifest, size, config.rng_seed)?;
            if plan(config, format!("write {size} review items to {}", out.display())) {
                return Ok(());
            }
            reports::write_review_sample_file(&sample, &out)?;
        }
        Command::ScoreReview { review, out } => {
            let sample = reports::read_review_sample_file(&review)?;
            let score = score_review(&sample)?;
            log::info!(
                "aligned {:.3}, mean relevance {:.3} over {} items",
                score.aligned_fraction,
                score.mean_score,
                score.sample_size
            );
            if plan(config, format!("write review score to {}", out.display())) {
                return Ok(());
            }
            reports::write_review_score_file(&score, &out)?;
        }
        Command::Validate {
            manifest,
            embeddings,
            seeds,
            seed_captions,
            frames,
        } => {
            let violations = validate_files(
                manifest.as_deref(),
                embeddings.as_deref(),
                seeds.as_deref().zip(seed_captions.as_deref()),
                frames.as_deref(),
            );
            for v in &violations {
                eprintln!("violation: {v}");
            }
            log::info!("{} violation(s)", violations.len());
            if !violations.is_empty() {
                return Err(Failure::Data(Error::format(
                    None,
                    format!("{} violation(s) found", violations.len()),
                )));
            }
        }
    }
    Ok(())
}

fn normalize_stream(stream: FrameStream) -> Result<FrameStream, Error> {
    let frames = stream
        .frames()
        .iter()
        .map(|f| {
            Ok(crate::types::Frame {
                timestamp_s: f.timestamp_s,
                embedding: f.embedding.to_unit()?,
            })
        })
        .collect::<Result<_, Error>>()?;
    FrameStream::new(
        stream.video_id(),
        stream.duration_s(),
        frames,
        stream.metadata().clone(),
    )
}

/// Every problem found in the given files, as human-readable lines.
fn validate_files(
    manifest: Option<&Path>,
    embeddings: Option<&Path>,
    seeds: Option<(&Path, &Path)>,
    frames: Option<&Path>,
) -> Vec<String> {
    let mut out = Vec::new();
    let mut durations = None;
    if let Some(dir) = frames {
        match io::read_frame_dir(dir) {
            Ok(streams) => {
                durations = Some(
                    streams
                        .iter()
                        .map(|s| (s.video_id().to_owned(), s.duration_s()))
                        .collect::<BTreeMap<_, _>>(),
                );
                let dims: std::collections::BTreeSet<_> =
                    streams.iter().filter_map(|s| s.dim()).collect();
                if dims.len() > 1 {
                    out.push(format!("{}: mixed embedding dimensions {dims:?}", dir.display()));
                }
            }
            Err(e) => out.push(e.to_string()),
        }
    }
    if let Some(path) = embeddings {
        if let Err(e) = io::read_embeddings_file(path) {
            out.push(e.to_string());
        }
    }
    if let Some((embd, captions)) = seeds {
        if let Err(e) = io::read_seed_set(embd, captions) {
            out.push(e.to_string());
        }
    }
    if let Some(path) = manifest {
        match io::read_manifest_file(path) {
            Ok(m) => out.extend(
                validate_manifest_with_durations(&m, durations.as_ref())
                    .into_iter()
                    .map(|v| format!("{}: {v}", path.display())),
            ),
            Err(e) => out.push(e.to_string()),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("clipmine").chain(args.iter().copied())).unwrap()
    }

    fn mine_args(extra: &[&str]) -> Vec<&'static str> {
        let mut v = vec![
            "mine", "--seeds", "s.embd", "--seed-captions", "s.jsonl", "--frames", "f", "--out", "m",
        ];
        v.extend(extra.iter().map(|s| -> &'static str { Box::leak(s.to_string().into_boxed_str()) }));
        v
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let file: ConfigFile = toml::from_str(
            "[mining]\ntau = 0.7\nt_span_s = 20.0\ntop_k = 3\n[run]\nshards = 2\n",
        )
        .unwrap();
        let cli = parse(&mine_args(&["--tau", "0.8"]));
        let rc = RunConfig::resolve(&cli, file).unwrap();
        assert_eq!(rc.mining.tau, 0.8);
        assert_eq!(rc.mining.t_span_s, 20.0);
        assert_eq!(rc.mining.nms_window_s, 20.0);
        assert_eq!(rc.mining.top_k, 3);
        assert_eq!(rc.shards, 2);

        let rc = RunConfig::resolve(&parse(&mine_args(&[])), ConfigFile::default()).unwrap();
        assert_eq!(rc.mining, MiningConfig::default());
        assert_eq!(rc.filter, CorpusFilter::default());
        assert_eq!(rc.k_clips, 4);
    }

    #[test]
    fn out_of_range_tau_is_a_usage_error() {
        let cli = parse(&mine_args(&["--tau", "1.7"]));
        assert!(matches!(
            RunConfig::resolve(&cli, ConfigFile::default()),
            Err(Failure::Usage(_))
        ));
        let cli = parse(&mine_args(&["--tau", "1.7", "--raw-similarity"]));
        assert!(RunConfig::resolve(&cli, ConfigFile::default()).is_ok());
        let cli = parse(&mine_args(&["--backend", "annoy"]));
        assert!(matches!(
            RunConfig::resolve(&cli, ConfigFile::default()),
            Err(Failure::Usage(_))
        ));
    }

    #[test]
    fn defaults_toml_parses_back() {
        let parsed: ConfigFile = toml::from_str(&defaults_toml()).unwrap();
        assert_eq!(parsed.mining.tau, Some(0.6));
        assert_eq!(parsed.eval.k_clips, Some(4));
        assert_eq!(parsed.filter.max_length_s, Some(1200.0));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(toml::from_str::<ConfigFile>("[mining]\nthreshold = 0.5\n").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["clipmine", "--bogus-flag"]), EXIT_USAGE);
        assert_eq!(run(["clipmine"]), EXIT_USAGE);
        assert_eq!(run(["clipmine", "--show-defaults"]), EXIT_OK);
        assert_eq!(
            run(["clipmine", "stats", "--manifest", "/nonexistent/m", "--out", "/tmp/x"]),
            EXIT_USAGE
        );
    }
}
