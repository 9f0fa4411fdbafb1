//! `ocsr`: command-line front end for SMILES handling, rewards, metrics,
//! dataset generation and the toy GRPO trainer.
//!
//! Exit status is 0 on success, 1 on a usage error and 2 when input data
//! cannot be processed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use ocsr_core::abbrev::AbbreviationTable;
use ocsr_core::fingerprint::{fingerprint_with, tanimoto};
use ocsr_core::grpo::toy::{toy_train, RewardMode, ToyConfig};
use ocsr_core::grpo::GrpoConfig;
use ocsr_core::harness::{gen_stereo_dataset, HarnessConfig, DEFAULT_STYLE_WEIGHTS};
use ocsr_core::markush::{markush_graph_key, parse_m};
use ocsr_core::metrics::{default_oks_scale, evaluate, oks, EvalPair, MetricsConfig, CSV_HEADER};
use ocsr_core::reward::{read_molecule, reward_batch, stereo_reward, RewardConfig};
use ocsr_core::smiles::canonical_smiles;

#[derive(Parser)]
#[command(
    name = "ocsr",
    version,
    about = "Chemical structure recognition utilities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a SMILES (or SMILES-M) string and print its graph as JSON.
    Parse {
        smiles: String,
        /// Accept `<sep>` extension records and frequency variables.
        #[arg(long)]
        markush: bool,
    },
    /// Print the canonical SMILES.
    Canon {
        smiles: String,
        /// Drop stereo annotations from the key.
        #[arg(long)]
        no_stereo: bool,
        /// Treat the input as SMILES-M.
        #[arg(long)]
        markush: bool,
    },
    /// Compare two SMILES strings and print match flags and similarity.
    Compare { a: String, b: String },
    /// Score predictions against ground truths, one SMILES per line.
    Reward {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// `key = value` reward settings.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compute recognition metrics over a JSONL file of pairs.
    Evaluate {
        #[arg(long)]
        pairs: PathBuf,
        /// Also print a CSV header and row after the JSON report.
        #[arg(long)]
        csv: bool,
        /// Extra `LABEL SMILES` abbreviation lines.
        #[arg(long)]
        abbreviations: Option<PathBuf>,
    },
    /// Generate a stereo depiction dataset as JSONL.
    GenStereo(GenArgs),
    /// Train the toy GRPO policy and write the reward trajectory as CSV.
    GrpoToy(ToyArgs),
    /// Object keypoint similarity of two JSON coordinate lists.
    Oks {
        /// e.g. `[[0.1,0.2],[0.3,0.4]]`
        #[arg(long)]
        pred: String,
        #[arg(long)]
        gt: String,
        /// Scale; defaults to the ground-truth box diagonal over sqrt(2).
        #[arg(long)]
        s: Option<f64>,
    },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    /// Five comma-separated style weights.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_STYLE_WEIGHTS)]
    weights: Vec<f64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Share of scaffold pairs with tetrahedral centers.
    #[arg(long, default_value_t = 0.5)]
    chiral_fraction: f64,
}

#[derive(Args)]
struct ToyArgs {
    #[arg(long, default_value_t = 400)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// KL coefficient.
    #[arg(long, default_value_t = 0.04)]
    beta: f64,
    /// Completions per target.
    #[arg(long, default_value_t = 4)]
    group_size: usize,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    #[arg(long, default_value_t = 10)]
    topk: usize,
    #[arg(long, default_value_t = 1.0)]
    lr: f64,
    /// tanimoto, stereo or weighted.
    #[arg(long, default_value = "weighted")]
    reward_mode: RewardMode,
    /// Comma-separated target SMILES.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "CCO,C=C,c1ccccc1,CC(=O)O,C[C@H](N)C"
    )]
    targets: Vec<String>,
    #[arg(long, default_value = "trajectory.csv")]
    out: PathBuf,
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn emit(out: &mut impl Write, text: &str) -> Outcome {
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn lines(text: &str) -> Vec<&str> {
    text.lines().collect()
}

fn run(cmd: Command, out: &mut impl Write) -> Outcome {
    match cmd {
        Command::Parse { smiles, markush } => {
            let value = if markush {
                let m = parse_m(&smiles)?;
                json!({
                    "graph": m.main,
                    "ring_bonds": m.ring_bonds,
                    "extensions": m.extensions.iter().map(ToString::to_string).collect::<Vec<_>>(),
                    "freq_groups": m.freq_groups,
                })
            } else {
                serde_json::to_value(ocsr_core::smiles::parse_with_labels(&smiles)?)?
            };
            emit(out, &format!("{value}\n"))
        }
        Command::Canon {
            smiles,
            no_stereo,
            markush,
        } => {
            let key = if markush {
                let mut m = parse_m(&smiles)?;
                if no_stereo {
                    m.main = m.main.without_stereo();
                }
                markush_graph_key(&m)?
            } else {
                let g = ocsr_core::smiles::parse_with_labels(&smiles)?;
                canonical_smiles(&g, !no_stereo)?
            };
            emit(out, &format!("{}\n", key.text))
        }
        Command::Compare { a, b } => {
            let table = AbbreviationTable::builtin();
            let ga = read_molecule(&a, &table)
                .ok_or_else(|| Failure(format!("invalid SMILES {a:?}")))?;
            let gb = read_molecule(&b, &table)
                .ok_or_else(|| Failure(format!("invalid SMILES {b:?}")))?;
            let key = |g, s| canonical_smiles(g, s).map(|k| k.text);
            let params = Default::default();
            let sim = tanimoto(
                &fingerprint_with(&ga, &params)?,
                &fingerprint_with(&gb, &params)?,
            )?;
            let value = json!({
                "graph_match": key(&ga, false)? == key(&gb, false)?,
                "exact_match": key(&ga, true)? == key(&gb, true)?,
                "tanimoto": sim,
                "stereo_tier": stereo_reward(&ga, &gb),
            });
            emit(out, &format!("{value}\n"))
        }
        Command::Reward { pred, gt, config } => {
            let cfg = match config {
                Some(p) => RewardConfig::from_file(&p)?,
                None => RewardConfig::default(),
            };
            let (p, g) = (read(&pred)?, read(&gt)?);
            let rows = reward_batch(&lines(&p), &lines(&g), &cfg)?;
            let mut text = String::new();
            for r in rows {
                text.push_str(&serde_json::to_string(&r)?);
                text.push('\n');
            }
            emit(out, &text)
        }
        Command::Evaluate {
            pairs,
            csv,
            abbreviations,
        } => {
            let mut cfg = MetricsConfig::builtin();
            if let Some(p) = abbreviations {
                cfg.abbreviations = AbbreviationTable::builtin_with_file(&p)?;
            }
            let text = read(&pairs)?;
            let parsed = text
                .lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(i, l)| {
                    serde_json::from_str::<EvalPair>(l)
                        .map_err(|e| Failure(format!("line {}: {e}", i + 1)))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let report = evaluate(&parsed, &cfg);
            let mut s = serde_json::to_string_pretty(&report)?;
            s.push('\n');
            if csv {
                s.push_str(&format!("{CSV_HEADER}\n{}\n", report.csv_row()));
            }
            emit(out, &s)
        }
        Command::GenStereo(a) => {
            let cfg = HarnessConfig {
                seed: a.seed,
                count: a.count,
                weights: a.weights,
                chiral_fraction: a.chiral_fraction,
                threads: a.threads,
            };
            let text = gen_stereo_dataset(&cfg)?;
            match a.out {
                Some(p) => {
                    fs::write(&p, text).map_err(|e| Failure(format!("{}: {e}", p.display())))
                }
                None => emit(out, &text),
            }
        }
        Command::GrpoToy(a) => {
            let cfg = ToyConfig {
                grpo: GrpoConfig {
                    group_size: a.group_size,
                    kl_coeff: a.beta,
                    temperature: a.temperature,
                    topk: a.topk,
                    ..GrpoConfig::default()
                },
                steps: a.steps,
                learning_rate: a.lr,
                mode: a.reward_mode,
                ..ToyConfig::default()
            };
            let run = toy_train(&a.targets, &cfg, a.seed)?;
            fs::write(&a.out, run.to_csv())
                .map_err(|e| Failure(format!("{}: {e}", a.out.display())))?;
            if let Some(last) = run.trajectory.last() {
                emit(
                    out,
                    &format!(
                        "{} steps, final mean_reward {:.4}, mean_kl {:.4}\n",
                        run.trajectory.len(),
                        last.mean_reward,
                        last.mean_kl
                    ),
                )?;
            }
            Ok(())
        }
        Command::Oks { pred, gt, s } => {
            let p: Vec<[f64; 2]> = serde_json::from_str(&pred)?;
            let g: Vec<[f64; 2]> = serde_json::from_str(&gt)?;
            let v = oks(&p, &g, s.unwrap_or_else(|| default_oks_scale(&g)))?;
            emit(out, &format!("{v}\n"))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let stdout = std::io::stdout();
    match run(cli.command, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
