use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, ValueEnum};
use serde::Serialize;

use statgraph_core::eval::{
    bourgain_dimension, bourgain_embed_with_dimension, bourgain_report, evaluate_values,
    pair_values, reconstruction_precision, write_pair_values_csv, Direction, EvalOptions,
    PairSource, DEFAULT_BOOTSTRAP, DEFAULT_K_NEIGHBORS,
};
use statgraph_core::graph::{
    all_pairs_shortest_paths, all_pairs_shortest_paths_with_limit, generate_erdos_renyi,
    generate_toy_graph, graph_stats, DEFAULT_MATRIX_LIMIT,
};
use statgraph_core::manifold::{
    write_hyperbolic_csv, DEFAULT_SIGMA_MAX, DEFAULT_SIGMA_MIN, DEFAULT_TRAIN_MC_SAMPLES,
};
use statgraph_core::sampling::{
    build_training_set, read_pairs_csv, write_pairs_csv, Mode, PairFileHeader, SampleSets,
    TrainingSet,
};
use statgraph_core::training::{init_model, train, ModelMeta, TrainReport};
use statgraph_core::{
    DirectedGraph, DistanceMatrix, EmbeddingModel, Error as CoreError, ManifoldConfig, TrainConfig,
};

use crate::manifest::RunLog;

fn open(path: &Path, log: &mut RunLog) -> Result<BufReader<File>> {
    log.input(path);
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Writes one output file through `body` and records it in the log.
fn write_output(
    dir: &Path,
    name: &str,
    log: &mut RunLog,
    body: impl FnOnce(&mut BufWriter<File>) -> Result<()>,
) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut w = create(&path)?;
    body(&mut w)?;
    w.flush()?;
    Ok(log.output(path))
}

fn read_graph(path: &Path, log: &mut RunLog) -> Result<DirectedGraph> {
    let r = open(path, log)?;
    DirectedGraph::parse_edge_list(r).with_context(|| format!("reading graph {}", path.display()))
}

fn read_matrix(path: &Path, log: &mut RunLog) -> Result<DistanceMatrix> {
    let r = open(path, log)?;
    DistanceMatrix::read_binary(r).with_context(|| format!("reading distances {}", path.display()))
}

fn read_model(path: &Path, log: &mut RunLog) -> Result<(EmbeddingModel, ModelMeta)> {
    let r = open(path, log)?;
    EmbeddingModel::read(r).with_context(|| format!("reading model {}", path.display()))
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    Toy,
    ErdosRenyi,
}

#[derive(Args, Debug, Serialize)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub kind: GraphKind,
    /// Node count (erdos-renyi).
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    /// Edge probability (erdos-renyi).
    #[arg(long, default_value_t = 0.15)]
    pub p: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn generate(a: &GenerateArgs, dir: &Path, log: &mut RunLog) -> Result<()> {
    log.params_from(a);
    let g = match a.kind {
        GraphKind::Toy => generate_toy_graph(),
        GraphKind::ErdosRenyi => {
            log.seed = Some(a.seed);
            generate_erdos_renyi(a.n, a.p, a.seed)?
        }
    };
    write_output(dir, "graph.txt", log, |w| Ok(g.write_edge_list(w)?))?;
    println!("nodes={}\nedges={}", g.n_nodes(), g.n_edges());
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct DistancesArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Largest node count for the dense matrix.
    #[arg(long, default_value_t = DEFAULT_MATRIX_LIMIT)]
    pub limit: usize,
    /// Also write the matrix as CSV, with `inf` for unreachable pairs.
    #[arg(long)]
    pub csv: bool,
}

pub fn distances(a: &DistancesArgs, dir: &Path, log: &mut RunLog) -> Result<()> {
    log.params_from(a);
    let g = read_graph(&a.graph, log)?;
    let d = all_pairs_shortest_paths_with_limit(&g, a.limit)?;
    write_output(dir, "distances.smd1", log, |w| Ok(d.write_binary(w)?))?;
    if a.csv {
        write_output(dir, "distances.csv", log, |w| Ok(d.write_csv(w)?))?;
    }
    let stats = graph_stats(&g, &d)?;
    let text = format!(
        "n_nodes={}\nn_edges={}\ninfinite_ratio={}\nreciprocity={}\n",
        stats.n_nodes, stats.n_edges, stats.infinite_ratio, stats.reciprocity
    );
    write_output(dir, "graph_stats.txt", log, |w| {
        Ok(w.write_all(text.as_bytes())?)
    })?;
    print!("{text}");
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Per-node budget for close and for unreachable pairs.
    #[arg(long = "B", default_value_t = 10)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn sample(a: &SampleArgs, dir: &Path, log: &mut RunLog) -> Result<()> {
    log.params_from(a);
    log.seed = Some(a.seed);
    let g = read_graph(&a.graph, log)?;
    let TrainingSet::Sampled(s) = build_training_set(&g, Mode::Sampled, a.budget, a.seed, 0)?
    else {
        unreachable!("sampled mode yields sample sets");
    };
    let header = PairFileHeader {
        mode: Mode::Sampled,
        budget: Some(a.budget),
        seed: a.seed,
        n_nodes: g.n_nodes(),
    };
    write_output(dir, "pairs.csv", log, |w| {
        Ok(write_pairs_csv(w, &header, &s.all_pairs())?)
    })?;
    println!(
        "close_pairs={}\ninf_pairs={}\nterms={}",
        s.close_pairs.len(),
        s.inf_pairs.len(),
        s.len()
    );
    Ok(())
}

/// Learning rate scaled down for larger graphs.
fn default_lr(n: usize) -> f64 {
    match n {
        0..=5_000 => 0.1,
        5_001..=50_000 => 0.01,
        _ => 0.001,
    }
}

#[derive(Args, Debug, Serialize)]
pub struct EmbedArgs {
    /// Edge list; optional when --distances or --pairs supplies the targets.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Precomputed distance matrix for full mode.
    #[arg(long)]
    pub distances: Option<PathBuf>,
    /// Precomputed pair file for sampled mode.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long, default_value = "full")]
    pub mode: String,
    #[arg(long = "B", default_value_t = 10)]
    pub budget: usize,
    #[arg(long, default_value_t = 2)]
    pub lambda: u32,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    /// Defaults to 0.1, 0.01 or 0.001 by graph size.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1)]
    pub batches: usize,
    #[arg(long)]
    pub shuffle: bool,
    /// Rescale gradients by the inverse Fisher metric (`--natural-gradient false` to disable).
    #[arg(long, default_value_t = true, action = ArgAction::Set, num_args = 0..=1, default_missing_value = "true")]
    pub natural_gradient: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub eval_every: usize,
    #[arg(long, default_value_t = DEFAULT_SIGMA_MIN)]
    pub sigma_min: f64,
    #[arg(long, default_value_t = DEFAULT_SIGMA_MAX)]
    pub sigma_max: f64,
    /// Monte Carlo draws per KL estimate when lambda > 2.
    #[arg(long, default_value_t = DEFAULT_TRAIN_MC_SAMPLES)]
    pub mc_samples: usize,
}

/// Training targets and the node count they cover.
fn load_training_set(a: &EmbedArgs, mode: Mode, log: &mut RunLog) -> Result<(TrainingSet, usize)> {
    match mode {
        Mode::Full => {
            if let Some(p) = &a.distances {
                let d = read_matrix(p, log)?;
                let n = d.n();
                return Ok((TrainingSet::Full(d), n));
            }
        }
        Mode::Sampled => {
            if let Some(p) = &a.pairs {
                let r = open(p, log)?;
                let (header, pairs) =
                    read_pairs_csv(r).with_context(|| format!("reading pairs {}", p.display()))?;
                let (close_pairs, inf_pairs) =
                    pairs.into_iter().partition(|p| p.distance.is_finite());
                let set = TrainingSet::Sampled(SampleSets {
                    close_pairs,
                    inf_pairs,
                    budget: header.budget.unwrap_or(a.budget),
                });
                return Ok((set, header.n_nodes));
            }
        }
    }
    let Some(graph) = &a.graph else {
        bail!(CoreError::InvalidArgument(format!(
            "{mode} mode needs --graph or --{}",
            if mode == Mode::Full {
                "distances"
            } else {
                "pairs"
            }
        )));
    };
    let g = read_graph(graph, log)?;
    let set = build_training_set(&g, mode, a.budget, a.seed, DEFAULT_MATRIX_LIMIT)?;
    Ok((set, g.n_nodes()))
}

fn write_history(w: &mut impl Write, report: &TrainReport) -> Result<()> {
    writeln!(w, "epoch,loss,pearson")?;
    let mut checkpoints = report.pearson_history.iter().peekable();
    for (i, l) in report.loss_history.iter().enumerate() {
        let epoch = i + 1;
        let r = match checkpoints.peek() {
            Some(&&(e, r)) if e == epoch => {
                checkpoints.next();
                r.to_string()
            }
            _ => String::new(),
        };
        writeln!(w, "{epoch},{l},{r}")?;
    }
    Ok(())
}

pub fn embed(a: &EmbedArgs, deterministic: bool, dir: &Path, log: &mut RunLog) -> Result<()> {
    log.params_from(a);
    log.seed = Some(a.seed);
    let mode: Mode = a.mode.parse()?;
    let (set, n) = load_training_set(a, mode, log)?;
    let lr = a.lr.unwrap_or_else(|| default_lr(n));
    let tcfg = TrainConfig {
        beta: a.beta,
        lr,
        epochs: a.epochs,
        batches: a.batches,
        shuffle: a.shuffle,
        use_natural_gradient: a.natural_gradient,
        seed: a.seed,
        eval_every: a.eval_every,
        sigma_bounds: (a.sigma_min, a.sigma_max),
        deterministic,
    };
    log.param("lr", lr);
    log.param("n_nodes", n);
    log.param("terms", set.term_count());

    let cfg = ManifoldConfig::new(a.lambda, a.k)?
        .with_mc_samples(a.mc_samples)?
        .with_sigma_bounds(a.sigma_min, a.sigma_max)?;
    let report = train(&set, init_model(n, &cfg, a.seed), &tcfg)?;

    let best_meta = ModelMeta::new(a.beta, a.seed, report.best_epoch);
    write_output(dir, "model.txt", log, |w| {
        Ok(report.best_model.write(w, &best_meta)?)
    })?;
    let final_meta = ModelMeta::new(a.beta, a.seed, a.epochs);
    write_output(dir, "model_final.txt", log, |w| {
        Ok(report.final_model.write(w, &final_meta)?)
    })?;
    write_output(dir, "history.csv", log, |w| write_history(w, &report))?;
    let summary = format!(
        "terms={}\nepochs={}\ninitial_loss={}\nfinal_loss={}\nbest_epoch={}\nbest_pearson={}\ntau={}\n",
        set.term_count(),
        a.epochs,
        report.initial_loss,
        report.final_loss,
        report.best_epoch,
        report.best_pearson,
        report.best_model.tau
    );
    write_output(dir, "train_report.txt", log, |w| {
        Ok(w.write_all(summary.as_bytes())?)
    })?;
    print!("{summary}");
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Evaluate on every ordered pair of this distance matrix.
    #[arg(long, conflicts_with = "pairs")]
    pub distances: Option<PathBuf>,
    /// Evaluate on the pairs of this file.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Edge list for reconstruction precision.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAP)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = DEFAULT_K_NEIGHBORS)]
    pub k_neighbors: usize,
    #[arg(long, default_value_t = 1.0)]
    pub target_exponent: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn eval(a: &EvalArgs, dir: &Path, log: &mut RunLog) -> Result<()> {
    log.params_from(a);
    log.seed = Some(a.seed);
    let (model, _) = read_model(&a.model, log)?;
    let opts = EvalOptions {
        bootstrap: a.bootstrap,
        k_neighbors: a.k_neighbors,
        target_exponent: a.target_exponent,
        seed: a.seed,
    };
    let (values, source) = match (&a.distances, &a.pairs) {
        (Some(p), _) => {
            let d = read_matrix(p, log)?;
            let src = PairSource::Matrix(&d);
            (pair_values(&model, src, &opts)?, src.descriptor())
        }
        (None, Some(p)) => {
            let r = open(p, log)?;
            let (header, pairs) = read_pairs_csv(r)?;
            if header.n_nodes != model.n_nodes() {
                bail!(CoreError::DimensionMismatch {
                    expected: model.n_nodes(),
                    found: header.n_nodes,
                });
            }
            let src = PairSource::Pairs(&pairs);
            (pair_values(&model, src, &opts)?, src.descriptor())
        }
        (None, None) => bail!(CoreError::InvalidArgument(
            "eval needs --distances or --pairs".into()
        )),
    };
    let report = evaluate_values(&values, source, &opts)?;

    let mut text = report.to_key_values();
    if let Some(gp) = &a.graph {
        let g = read_graph(gp, log)?;
        let div = model.divergence(a.seed);
        for dir in [Direction::Out, Direction::In] {
            let p = reconstruction_precision(&model, &div, &g, dir)?;
            text.push_str(&format!("reconstruction_{dir}={p}\n"));
        }
    }
    write_output(dir, "eval_report.txt", log, |w| {
        Ok(w.write_all(text.as_bytes())?)
    })?;
    write_output(dir, "eval_report.csv", log, |w| {
        writeln!(w, "{}", statgraph_core::eval::EvalReport::csv_header())?;
        writeln!(w, "{}", report.csv_row())?;
        Ok(())
    })?;
    write_output(dir, "pair_values.csv", log, |w| {
        Ok(write_pair_values_csv(w, &values)?)
    })?;
    print!("{text}");
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct ExportArgs {
    #[arg(long)]
    pub model: PathBuf,
}

pub fn export_hyperbolic(a: &ExportArgs, dir: &Path, log: &mut RunLog) -> Result<()> {
    log.params_from(a);
    let (model, _) = read_model(&a.model, log)?;
    write_output(dir, "hyperbolic.csv", log, |w| {
        Ok(write_hyperbolic_csv(w, &model.points, &model.cfg)?)
    })?;
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct BourgainArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Base of the logarithm in the dimension rule ceil(log n).
    #[arg(long, default_value_t = std::f64::consts::E)]
    pub log_base: f64,
}

pub fn bourgain(a: &BourgainArgs, dir: &Path, log: &mut RunLog) -> Result<()> {
    log.params_from(a);
    log.seed = Some(a.seed);
    if a.log_base.is_nan() || a.log_base <= 1.0 {
        bail!(CoreError::InvalidArgument(format!(
            "log base must exceed 1, got {}",
            a.log_base
        )));
    }
    let g = read_graph(&a.graph, log)?;
    let d = all_pairs_shortest_paths(&g)?;
    let m = bourgain_dimension(g.n_nodes(), a.log_base);
    let emb = bourgain_embed_with_dimension(&g, &d, m, a.seed)?;
    let report = bourgain_report(&emb, &d)?;
    write_output(dir, "bourgain.csv", log, |w| Ok(emb.write_csv(w)?))?;
    let text = report.to_key_values();
    write_output(dir, "bourgain_report.txt", log, |w| {
        Ok(w.write_all(text.as_bytes())?)
    })?;
    print!("{text}");
    Ok(())
}
