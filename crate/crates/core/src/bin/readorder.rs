use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use readorder::pipeline::formats::{load_manifest_list, write_json};
use readorder::pipeline::{
    dataset, debug, extract_lines, formats, merge_windows, run_eval, run_page, Config,
    PageManifest, WindowOutput,
};
use readorder::rescore::{fuse_with, MeanScope, ScoredSequence};
use readorder::synth::SynthSpec;
use readorder::{Error, LineSegment};

#[derive(Parser)]
#[command(name = "readorder", version, about = "Reading-order restoration for vertical-text document pages")]
struct Cli {
    /// Config file (flat `key = value`); defaults to $READORDER_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Report failed pages and keep going instead of exiting nonzero.
    #[arg(long, global = true)]
    continue_on_error: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Pages {
    /// Page manifest files.
    manifests: Vec<PathBuf>,
    /// File listing manifest paths, one per line.
    #[arg(long)]
    list: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Extract boundary lines from each page's layout mask.
    Lines {
        #[command(flatten)]
        pages: Pages,
        /// Write JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full pipeline and emit reading-order text.
    Parse {
        #[command(flatten)]
        pages: Pages,
        /// Write `<page>.txt` and `<page>.result.json` here instead of
        /// printing text to stdout.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Fuse a character sequence with a line-recognition sequence.
    Rescore {
        /// JSON `{"symbols": [...], "probs": [...]}` from character detection.
        #[arg(long)]
        chars: PathBuf,
        /// Same format, from line recognition.
        #[arg(long)]
        line: PathBuf,
        /// Overrides the config's `mean_scope`.
        #[arg(long)]
        mean_scope: Option<MeanScope>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate pages against their ground truth.
    Eval {
        #[command(flatten)]
        pages: Pages,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a batch of synthetic pages with ground truth.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        pages: usize,
        /// Base seed; page i uses seed + i.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON generator spec; missing fields take defaults.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Draw 0–2 horizontal and 0–1 vertical lines per page.
        #[arg(long)]
        mixed_layout: bool,
        /// Also write an oracle line-recognition file at this confidence.
        #[arg(long)]
        line_confidence: Option<f64>,
    },
    /// Merge detections from overlapping windows into page coordinates.
    MergeWindows {
        /// JSON array of `{"offset": {"x", "y"}, "detections": [...]}`.
        windows: PathBuf,
        /// Overrides the config's `nms_threshold`.
        #[arg(long)]
        iou: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw lines, regions, columns and reading order over a page.
    RenderDebug {
        manifest: PathBuf,
        /// Output PNG; a JSON summary is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the effective configuration.
    Config,
}

/// Exit status for a failure.
fn status(e: &Error) -> u8 {
    if e.is_input_error() {
        1
    } else {
        2
    }
}

struct Failure(u8);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        eprintln!("error: {e}");
        Failure(status(&e))
    }
}

type CliResult = std::result::Result<(), Failure>;

fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

fn emit(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| {
            Error::Io {
                path: path.to_path_buf(),
                source,
            }
            .into()
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn load_pages(pages: &Pages) -> Result<Vec<PageManifest>, Error> {
    let mut paths = pages.manifests.clone();
    if let Some(list) = &pages.list {
        paths.extend(load_manifest_list(list)?);
    }
    if paths.is_empty() {
        return Err(Error::Config("no page manifests given".into()));
    }
    paths.iter().map(|p| PageManifest::load(p)).collect()
}

/// Runs `f` on every page in parallel, keeping input order. Failed pages
/// abort the command unless `keep_going` is set.
fn for_pages<T: Send>(
    manifests: &[PageManifest],
    keep_going: bool,
    f: impl Fn(&PageManifest) -> Result<T, Error> + Sync,
) -> Result<Vec<T>, Failure> {
    let results: Vec<Result<T, Error>> = manifests.par_iter().map(&f).collect();
    let mut ok = Vec::new();
    let mut worst = 0;
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                eprintln!("error: {e}");
                worst = worst.max(status(&e));
            }
        }
    }
    if worst > 0 && !keep_going {
        return Err(Failure(worst));
    }
    Ok(ok)
}

#[derive(Serialize)]
struct PageLines {
    page_id: String,
    lines: Vec<LineSegment>,
}

fn run(cli: Cli) -> CliResult {
    let config = Config::resolve(cli.config.as_deref())?;
    let keep_going = cli.continue_on_error;
    match cli.command {
        Command::Lines { pages, out } => {
            let manifests = load_pages(&pages)?;
            let found = for_pages(&manifests, keep_going, |m| {
                let lines = readorder::BinaryMask::load(&m.mask, m.mask_scale)
                    .and_then(|mask| extract_lines(&mask, &config))
                    .map_err(|e| e.in_page(&m.page_id))?;
                Ok(PageLines {
                    page_id: m.page_id.clone(),
                    lines,
                })
            })?;
            emit(out.as_deref(), &to_json(&found))
        }
        Command::Parse { pages, out_dir } => {
            let manifests = load_pages(&pages)?;
            let results = for_pages(&manifests, keep_going, |m| run_page(m, &config))?;
            match out_dir {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(|source| Error::Io {
                        path: dir.clone(),
                        source,
                    })?;
                    for r in &results {
                        let mut text = r.final_text().to_string();
                        text.push('\n');
                        emit(Some(&dir.join(format!("{}.txt", r.page_id))), &text)?;
                        write_json(&dir.join(format!("{}.result.json", r.page_id)), r)?;
                    }
                    Ok(())
                }
                None => {
                    let text: String = results
                        .iter()
                        .map(|r| format!("{}\n", r.final_text()))
                        .collect::<Vec<_>>()
                        .join("\n");
                    emit(None, &text)
                }
            }
        }
        Command::Rescore {
            chars,
            line,
            mean_scope,
            out,
        } => {
            let read = |p: &Path| -> Result<ScoredSequence, Error> {
                let text = std::fs::read_to_string(p).map_err(|source| Error::Io {
                    path: p.to_path_buf(),
                    source,
                })?;
                let seq: ScoredSequence = serde_json::from_str(&text).map_err(|e| Error::Parse {
                    path: p.to_path_buf(),
                    message: e.to_string(),
                })?;
                seq.validate().map_err(|e| Error::Parse {
                    path: p.to_path_buf(),
                    message: e.to_string(),
                })?;
                Ok(seq)
            };
            let outcome = fuse_with(
                &read(&chars)?,
                &read(&line)?,
                mean_scope.unwrap_or(config.mean_scope),
            );
            if let Some(w) = &outcome.warning {
                log::warn!("{w}");
            }
            emit(out.as_deref(), &to_json(&outcome))
        }
        Command::Eval { pages, out } => {
            let manifests = load_pages(&pages)?;
            let (report, errors) = run_eval(&manifests, &config);
            for w in &report.warnings {
                log::warn!("{w}");
            }
            let worst = errors.iter().map(status).max().unwrap_or(0);
            for e in &errors {
                eprintln!("error: {e}");
            }
            if worst > 0 && !keep_going {
                return Err(Failure(worst));
            }
            emit(out.as_deref(), &to_json(&report))
        }
        Command::Synth {
            out_dir,
            pages,
            seed,
            spec,
            mixed_layout,
            line_confidence,
        } => {
            let mut base = match &spec {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|source| Error::Io {
                        path: p.clone(),
                        source,
                    })?;
                    serde_json::from_str::<SynthSpec>(&text).map_err(|e| Error::Parse {
                        path: p.clone(),
                        message: e.to_string(),
                    })?
                }
                None => SynthSpec::default(),
            };
            base.seed = seed;
            if let Some(p) = line_confidence {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Config(format!("line confidence {p} outside [0, 1]")).into());
                }
            }
            let list = dataset::write_batch(&base, pages, mixed_layout, line_confidence, &out_dir)?;
            log::info!("wrote {pages} pages, list at {}", list.display());
            Ok(())
        }
        Command::MergeWindows { windows, iou, out } => {
            let text = std::fs::read_to_string(&windows).map_err(|source| Error::Io {
                path: windows.clone(),
                source,
            })?;
            let parsed: Vec<WindowOutput> =
                serde_json::from_str(&text).map_err(|e| Error::Parse {
                    path: windows.clone(),
                    message: e.to_string(),
                })?;
            for w in &parsed {
                for (index, d) in w.detections.iter().enumerate() {
                    d.validate().map_err(|e| Error::Record {
                        index,
                        message: e.to_string(),
                    })?;
                }
            }
            let iou = iou.unwrap_or(config.nms_threshold);
            if !(0.0..=1.0).contains(&iou) {
                return Err(Error::Config(format!("IoU threshold {iou} outside [0, 1]")).into());
            }
            emit(out.as_deref(), &to_json(&merge_windows(&parsed, iou)))
        }
        Command::RenderDebug { manifest, out } => {
            let m = PageManifest::load(&manifest)?;
            let result = run_page(&m, &config)?;
            let summary = debug::save_debug(&result, &out)?;
            formats::write_json(&out.with_extension("json"), &summary)?;
            Ok(())
        }
        Command::Config => emit(None, &config.to_text()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code)) => ExitCode::from(code),
    }
}
