//! Command-line driver: transform, compress/reconstruct, the MSE sweep,
//! toy training, inference, and the compression accounting report.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or invariant error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use wavegcn::haar::{build_hierarchy, HaarHierarchy};
use wavegcn::io;
use wavegcn::model::{load_model, run_model, save_model};
use wavegcn::shrinkage::{gather, scatter_with, select_topk_with, SelectionNorm, ShrinkagePlan};
use wavegcn::sweep::{mse_sweep, report_compression, report_to_csv, sweep_to_csv};
use wavegcn::synth::{gen_planted, smooth_features};
use wavegcn::train::{accuracy, train_toy, Arch, TrainConfig};
use wavegcn::{Error, Graph, Result};

/// `println!` that tolerates a closed stdout (downstream `head`, closed
/// pipes) instead of panicking.
macro_rules! emit {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(
    name = "wavegcn",
    version,
    about = "Graph Haar wavelet feature compression for quantized GCNs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct GraphFeatureArgs {
    /// Graph file (text format: `n m` then edge lines)
    #[arg(long)]
    graph: PathBuf,
    /// Feature file (text format: `n c` then feature rows)
    #[arg(long)]
    features: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArchArg {
    Wgcn,
    Wgcnii,
}

#[derive(Subcommand)]
enum Cmd {
    /// Multi-level Haar transform; writes coefficients plus a layout sidecar
    Transform {
        #[command(flatten)]
        data: GraphFeatureArgs,
        /// Transform levels
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// Seed for leftover-node pairing
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output coefficient file; `<out>.layout` is written alongside
        #[arg(long)]
        out: PathBuf,
    },
    /// Joint top-k compression; writes the dense block, `.idx`, and `.hier`
    Compress {
        #[command(flatten)]
        data: GraphFeatureArgs,
        /// Compression fraction in (0, 1]
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Rank rows by l1 norm instead of l2
        #[arg(long)]
        l1_norm: bool,
        /// Output dense-block file; `.idx` and `.hier` sidecars are written
        #[arg(long)]
        out: PathBuf,
    },
    /// Inverse transform of a compressed block produced by `compress`
    Reconstruct {
        /// Dense-block file; `<dense>.idx` and `<dense>.hier` must exist
        #[arg(long)]
        dense: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// MSE at compression ratios x2..x128 for all schemes; writes CSV
    MseSweep {
        /// Graph file
        #[arg(long)]
        graph: PathBuf,
        /// Feature file; omitted: diffusion-smoothed noise is generated
        #[arg(long)]
        features: Option<PathBuf>,
        /// Channels of the generated features
        #[arg(long, default_value_t = 16)]
        channels: usize,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a toy two-block wavelet GCN / GCNII node classifier
    Train {
        #[command(flatten)]
        data: GraphFeatureArgs,
        /// Label file (one integer per line, -1 unlabeled)
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, value_enum, default_value_t = ArchArg::Wgcn)]
        arch: ArchArg,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 8)]
        bits_w: u32,
        #[arg(long, default_value_t = 8)]
        bits_a: u32,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        #[arg(long, default_value_t = 5e-4)]
        weight_decay: f64,
        #[arg(long, default_value_t = 16)]
        hidden: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Build hierarchies once and reuse them across epochs
        #[arg(long)]
        freeze_hierarchy: bool,
        /// Output model file; `<out>.trace.csv` is written alongside
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a saved model; writes the final layer output
    Infer {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: GraphFeatureArgs,
        /// Optional labels for an accuracy line
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-layer activation bytes and compression ratios of a model
    ReportCompression {
        #[arg(long)]
        model: PathBuf,
        /// Node count the activations are sized for
        #[arg(long, default_value_t = 1024)]
        nodes: usize,
        /// Output CSV; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a planted-partition graph with features and labels
    GenPlanted {
        #[arg(long, default_value_t = 100)]
        nodes: usize,
        #[arg(long, default_value_t = 2)]
        communities: usize,
        #[arg(long, default_value_t = 0.1)]
        p_in: f64,
        #[arg(long, default_value_t = 0.01)]
        p_out: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Writes `<prefix>.graph.txt`, `<prefix>.features.txt`,
        /// `<prefix>.labels.txt`
        #[arg(long)]
        out_prefix: PathBuf,
    },
}

fn sidecar(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

fn print_matching_stats(h: &HaarHierarchy) {
    for (l, level) in h.levels().iter().enumerate() {
        let pg = level.pair_graph();
        let random = pg.pairs().len() - pg.edge_pairs();
        emit!(
            "level {}: n_fine={} pairs={} greedy={} random={} orphan={}",
            l + 1,
            level.n_fine(),
            pg.pairs().len(),
            pg.edge_pairs(),
            random,
            u8::from(pg.orphan().is_some())
        );
    }
}

fn load_pair(data: &GraphFeatureArgs) -> Result<(Graph, wavegcn::FeatureMatrix)> {
    let g = io::load_graph(&data.graph)?;
    let f = io::load_features(&data.features)?;
    if f.rows() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} nodes but features have {} rows",
            g.n(),
            f.rows()
        )));
    }
    Ok((g, f))
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Transform {
            data,
            levels,
            seed,
            out,
        } => {
            let (g, f) = load_pair(&data)?;
            let h = build_hierarchy(&g, &f, levels, seed)?;
            let p = h.forward(&f)?;
            io::save_features(&p, &out)?;
            io::save_layout(h.layout(), sidecar(&out, ".layout"))?;
            print_matching_stats(&h);
            emit!("wrote {} and {}.layout", out.display(), out.display());
        }
        Cmd::Compress {
            data,
            alpha,
            levels,
            seed,
            l1_norm,
            out,
        } => {
            let (g, f) = load_pair(&data)?;
            let h = build_hierarchy(&g, &f, levels, seed)?;
            let p = h.forward(&f)?;
            let norm = if l1_norm {
                SelectionNorm::L1
            } else {
                SelectionNorm::L2
            };
            let plan = select_topk_with(&p, alpha, norm)?;
            let cs = gather(&p, &plan)?;
            io::save_features(cs.dense(), &out)?;
            io::save_indices(plan.kept(), sidecar(&out, ".idx"))?;
            io::save_hierarchy(&h, sidecar(&out, ".hier"))?;
            print_matching_stats(&h);
            emit!(
                "kept {} of {} coefficient rows (alpha = {alpha})",
                plan.kept().len(),
                p.rows()
            );
            emit!("wrote {} with .idx and .hier sidecars", out.display());
        }
        Cmd::Reconstruct { dense, out } => {
            let block = io::load_features(&dense)?;
            let kept = io::load_indices(sidecar(&dense, ".idx"))?;
            let h = io::load_hierarchy(sidecar(&dense, ".hier"))?;
            let plan = ShrinkagePlan::from_indices(h.n(), kept)?;
            let full = scatter_with(&block, &plan)?;
            let f = h.inverse(&full)?;
            io::save_features(&f, &out)?;
            emit!("wrote {}", out.display());
        }
        Cmd::MseSweep {
            graph,
            features,
            channels,
            levels,
            seed,
            out,
        } => {
            let g = io::load_graph(&graph)?;
            let f = match features {
                Some(path) => io::load_features(&path)?,
                None => smooth_features(&g, channels, 10, seed)?,
            };
            if f.rows() != g.n() {
                return Err(Error::DimensionMismatch(format!(
                    "graph has {} nodes but features have {} rows",
                    g.n(),
                    f.rows()
                )));
            }
            let rows = mse_sweep(&g, &f, levels, seed)?;
            std::fs::write(&out, sweep_to_csv(&rows))?;
            emit!("wrote {} ({} rows)", out.display(), rows.len());
        }
        Cmd::Train {
            data,
            labels,
            arch,
            alpha,
            bits_w,
            bits_a,
            levels,
            epochs,
            lr,
            weight_decay,
            hidden,
            seed,
            freeze_hierarchy,
            out,
        } => {
            let (g, f) = load_pair(&data)?;
            let labels = io::load_labels(&labels)?;
            if labels.len() != g.n() {
                return Err(Error::DimensionMismatch(format!(
                    "graph has {} nodes but {} labels given",
                    g.n(),
                    labels.len()
                )));
            }
            let cfg = TrainConfig {
                epochs,
                lr,
                weight_decay,
                seed,
                bits_w,
                bits_a,
                alpha,
                levels,
                hidden,
                arch: match arch {
                    ArchArg::Wgcn => Arch::Wgcn,
                    ArchArg::Wgcnii => Arch::Wgcnii,
                },
                freeze_hierarchy,
            };
            let (toy, trace) = train_toy(&g, &f, &labels, &cfg)?;
            save_model(&wavegcn::model::from_toy(&toy), &out)?;
            let mut csv = String::from("epoch,loss,train_acc,val_acc\n");
            for row in &trace {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    row.epoch, row.loss, row.train_acc, row.val_acc
                ));
            }
            std::fs::write(sidecar(&out, ".trace.csv"), csv)?;
            if let Some(last) = trace.last() {
                emit!(
                    "epoch {}: loss={} train_acc={} val_acc={}",
                    last.epoch,
                    last.loss,
                    last.train_acc,
                    last.val_acc
                );
            }
            emit!("wrote {} and {}.trace.csv", out.display(), out.display());
        }
        Cmd::Infer {
            model,
            data,
            labels,
            out,
        } => {
            let m = load_model(&model)?;
            let (g, f) = load_pair(&data)?;
            let logits = run_model(&m, &g, &f)?;
            io::save_features(&logits, &out)?;
            if let Some(path) = labels {
                let labels = io::load_labels(&path)?;
                let mask: Vec<usize> = labels
                    .iter()
                    .enumerate()
                    .filter(|(_, &l)| l >= 0)
                    .map(|(i, _)| i)
                    .collect();
                emit!("accuracy {}", accuracy(&logits, &labels, &mask));
            }
            emit!("wrote {}", out.display());
        }
        Cmd::ReportCompression { model, nodes, out } => {
            let m = load_model(&model)?;
            let csv = report_to_csv(&report_compression(&m, nodes)?);
            match out {
                Some(path) => {
                    std::fs::write(&path, csv)?;
                    emit!("wrote {}", path.display());
                }
                None => {
                    use std::io::Write;
                    let _ = write!(std::io::stdout(), "{csv}");
                }
            }
        }
        Cmd::GenPlanted {
            nodes,
            communities,
            p_in,
            p_out,
            seed,
            out_prefix,
        } => {
            let (g, f, labels) = gen_planted(nodes, communities, p_in, p_out, seed)?;
            io::save_graph(&g, sidecar(&out_prefix, ".graph.txt"))?;
            io::save_features(&f, sidecar(&out_prefix, ".features.txt"))?;
            io::save_labels(&labels, sidecar(&out_prefix, ".labels.txt"))?;
            emit!(
                "wrote {}.graph.txt, {}.features.txt, {}.labels.txt ({} nodes, {} edges)",
                out_prefix.display(),
                out_prefix.display(),
                out_prefix.display(),
                g.n(),
                g.edge_count()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
