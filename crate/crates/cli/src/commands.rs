use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, ensure, Context, Result};
use rayon::prelude::*;
use sparseview::downstream::{error_rate, kmeans, selection_metrics, svm_fit, svm_predict, SvmParams};
use sparseview::graphlap::GraphSpec;
use sparseview::pipeline::{
    random_search, rank_features, run_pipeline, stage1_train, stage2_train, stage3_infer, subset_views, SearchSpace, ViewSelection,
};
use sparseview::simgen::{gen_graph_scenario, gen_linear, gen_nonlinear};
use sparseview::{FeatureSelection, Matrix, MultiviewDataset, Rng, ScenarioTruth, Split, Stage, StageCheckpoint, SvmModel, TrainConfig};

use crate::files::*;
use crate::manifest::Session;
use crate::{ClusterArgs, EvaluateArgs, HypersearchArgs, PredictArgs, RankArgs, RefitArgs, Scenario, SimCommon, SimulateArgs, TrainArgs};

type Generated = (MultiviewDataset, ScenarioTruth, Option<Vec<GraphSpec>>);

pub fn simulate(args: SimulateArgs) -> Result<()> {
    match args.scenario {
        Scenario::Nonlinear { n1, n2, p1, p2, common } => {
            let seed = common.seed;
            emit_scenario(common, "simulate nonlinear", |split| {
                let (ds, truth) = gen_nonlinear(n1, n2, p1, p2, seed, split)?;
                Ok((ds, truth, None))
            })
        }
        Scenario::Linear { n_per_class, p1, p2, rho1, rho2, c, common } => {
            let seed = common.seed;
            emit_scenario(common, "simulate linear", |split| {
                let (ds, truth, _) = gen_linear(n_per_class, p1, p2, rho1, rho2, c, seed, split)?;
                Ok((ds, truth, None))
            })
        }
        Scenario::Graph { topology, n1, n2, p1, p2, common } => {
            let seed = common.seed;
            emit_scenario(common, "simulate graph", |split| {
                let (ds, truth, graphs) = gen_graph_scenario(topology, n1, n2, p1, p2, seed, split)?;
                Ok((ds, truth, Some(graphs)))
            })
        }
    }
}

fn emit_scenario(common: SimCommon, command: &str, generate: impl Fn(Split) -> sparseview::Result<Generated>) -> Result<()> {
    let mut targets = vec![(Split::Train, common.output.out_dir.clone())];
    if let Some(dir) = &common.test_out_dir {
        targets.push((Split::Test, dir.clone()));
    }
    for (split, dir) in targets {
        let (ds, truth, graphs) = generate(split)?;
        let mut s = Session::start(command, &dir)?;
        s.set_seed(common.seed);
        s.set_config(&truth.descriptor)?;
        for (d, view) in ds.views().iter().enumerate() {
            s.write(&view_file(d), &matrix_bytes(view, "v")?)?;
            s.write(&truth_file(d), sparseview::io::format_index_lines(&truth.signals[d]).as_bytes())?;
        }
        s.write(LABELS_FILE, &labels_bytes(&truth.labels)?)?;
        for (d, g) in graphs.iter().flatten().enumerate() {
            s.write(&graph_file(d), g.to_edge_list().as_bytes())?;
        }
        s.finish()?;
    }
    Ok(())
}

fn load_config(session: &mut Session, path: Option<&Path>) -> Result<TrainConfig> {
    match path {
        Some(p) => {
            let text = session.read_string(p)?;
            serde_json::from_str(&text).with_context(|| format!("{}: invalid configuration", p.display()))
        }
        None => Ok(TrainConfig::default()),
    }
}

fn load_checkpoint(session: &mut Session, path: &Path, stage: Stage) -> Result<StageCheckpoint> {
    let text = session.read_string(path)?;
    let cp = StageCheckpoint::from_json(&text).with_context(|| path.display().to_string())?;
    ensure!(cp.stage == stage, "{} holds a stage-{} checkpoint, expected stage {}", path.display(), cp.stage.number(), stage.number());
    Ok(cp)
}

fn write_fit(session: &mut Session, cp: &StageCheckpoint) -> Result<()> {
    let stage = cp.stage.number();
    session.write(&checkpoint_file(stage), (cp.to_json()? + "\n").as_bytes())?;
    session.write(&loss_trace_file(stage), &loss_trace_bytes(&cp.loss_trace)?)?;
    session.write(&latent_file(stage), &matrix_bytes(&cp.latent, "z")?)?;
    Ok(())
}

pub fn train(args: TrainArgs) -> Result<()> {
    let mut s = Session::start("train", &args.output.out_dir)?;
    let mut cfg = load_config(&mut s, args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(m) = args.max_iters {
        cfg.max_iters = m;
    }
    if let Some(r) = args.r_fraction {
        cfg.r_fraction = r;
    }
    s.set_seed(cfg.seed);
    s.set_config(&cfg)?;
    let data = read_dataset(&mut s, &args.data_dir)?;
    let stats = data.fit_standardization()?;
    let standardized = data.standardized(&stats)?;
    let laplacians = if cfg.use_laplacian {
        let dir = default_dir(args.graph_dir, &args.data_dir);
        Some(read_laplacians(&mut s, &dir, &data.feature_counts())?)
    } else {
        None
    };
    let fit = stage1_train(&standardized, &cfg, laplacians.as_deref())?;
    write_fit(&mut s, &StageCheckpoint::new(&fit, &cfg, &stats, None))?;
    s.finish()
}

pub fn rank(args: RankArgs) -> Result<()> {
    let mut s = Session::start("rank", &args.output.out_dir)?;
    let cp = load_checkpoint(&mut s, &args.checkpoint, Stage::Selection)?;
    let r = args.r_fraction.unwrap_or(cp.config.r_fraction);
    s.set_config(&serde_json::json!({ "r_fraction": r }))?;
    let selection = rank_features(&cp.fit()?.reconstructions()?, r)?;
    for (d, v) in selection.views.iter().enumerate() {
        s.write(&selection_file(d), sparseview::io::format_index_lines(&v.indices).as_bytes())?;
        let mut text = String::from("column,score\n");
        for (j, score) in v.scores.iter().enumerate() {
            writeln!(text, "{j},{score}")?;
        }
        s.write(&scores_file(d), text.as_bytes())?;
    }
    s.finish()
}

fn read_selection(session: &mut Session, dir: &Path, widths: &[usize], r_fraction: f64) -> Result<FeatureSelection> {
    let views = widths
        .iter()
        .enumerate()
        .map(|(d, &p)| {
            let path = dir.join(selection_file(d));
            let mut indices = read_indices(session, &path)?;
            let unique: BTreeSet<usize> = indices.iter().copied().collect();
            ensure!(unique.len() == indices.len(), "{}: duplicate indices", path.display());
            ensure!(!indices.is_empty(), "{}: no indices", path.display());
            if let Some(&bad) = indices.iter().find(|&&j| j >= p) {
                bail!("{}: index {bad} is out of range for {p} columns", path.display());
            }
            indices.sort_unstable();
            Ok(ViewSelection { scores: Vec::new(), indices })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureSelection { views, r_fraction })
}

fn standardized_subset(data: &MultiviewDataset, cp: &StageCheckpoint, selection: &FeatureSelection) -> Result<MultiviewDataset> {
    let widths: Vec<usize> = cp.standardization.iter().map(|c| c.mean.len()).collect();
    ensure!(
        data.feature_counts() == widths,
        "view widths {:?} do not match the {:?} seen in training",
        data.feature_counts(),
        widths
    );
    Ok(subset_views(&data.standardized(&cp.standardization)?, &selection.indices())?)
}

pub fn refit(args: RefitArgs) -> Result<()> {
    let mut s = Session::start("refit", &args.output.out_dir)?;
    let stage1 = load_checkpoint(&mut s, &args.checkpoint, Stage::Selection)?;
    let cfg = stage1.config.clone();
    s.set_seed(cfg.seed);
    s.set_config(&cfg)?;
    let data = read_dataset(&mut s, &args.data_dir)?;
    let selection = read_selection(&mut s, &args.selection_dir, &data.feature_counts(), cfg.r_fraction)?;
    let subset = standardized_subset(&data, &stage1, &selection)?;
    let fit = stage2_train(&subset, &cfg)?;
    write_fit(&mut s, &StageCheckpoint::new(&fit, &cfg, &stage1.standardization, Some(&selection)))?;
    if let Some(labels) = data.labels() {
        let model = svm_fit(&fit.latent, labels, &SvmParams::new(cfg.svm_c, cfg.svm_gamma()))?;
        s.write(CLASSIFIER_FILE, (serde_json::to_string_pretty(&model)? + "\n").as_bytes())?;
    }
    s.finish()
}

pub fn predict(args: PredictArgs) -> Result<()> {
    let mut s = Session::start("predict", &args.output.out_dir)?;
    let stage2 = load_checkpoint(&mut s, &args.checkpoint, Stage::Reconstruction)?;
    let cfg = stage2.config.clone();
    s.set_seed(cfg.seed);
    s.set_config(&cfg)?;
    let selection = stage2.selection.clone().ok_or_else(|| anyhow!("stage-2 checkpoint has no selection"))?;
    let classifier: Option<SvmModel> = match &args.classifier {
        Some(path) => {
            let text = s.read_string(path)?;
            Some(serde_json::from_str(&text).with_context(|| format!("{}: invalid classifier", path.display()))?)
        }
        None => None,
    };
    let data = read_dataset(&mut s, &args.data_dir)?;
    let subset = standardized_subset(&data, &stage2, &selection)?;
    let fit = stage3_infer(&subset, &stage2.networks()?, &cfg)?;
    write_fit(&mut s, &StageCheckpoint::new(&fit, &cfg, &stage2.standardization, Some(&selection)))?;
    if let Some(model) = classifier {
        let predictions = svm_predict(&model, &fit.latent)?;
        s.write(PREDICTIONS_FILE, &labels_bytes(&predictions)?)?;
    }
    s.finish()
}

/// `num / den` as a percentage with two decimals, halves rounded up.
pub fn percent(num: u64, den: u64) -> String {
    assert!(den > 0, "percent of an empty total");
    let hundredths = (20_000 * num as u128 + den as u128) / (2 * den as u128);
    format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let mut s = Session::start("evaluate", &args.output.out_dir)?;
    let mut header = Vec::new();
    let mut row = Vec::new();
    if let (Some(pred_path), Some(label_path)) = (&args.predictions, &args.labels) {
        let predicted = read_labels(&mut s, pred_path)?;
        let actual = read_labels(&mut s, label_path)?;
        error_rate(&predicted, &actual)?;
        let wrong = predicted.iter().zip(&actual).filter(|(a, b)| a != b).count();
        header.push("error".to_string());
        row.push(percent(wrong as u64, actual.len() as u64));
    }
    if let (Some(sel_dir), Some(truth_dir)) = (&args.selection_dir, &args.truth_dir) {
        let n_views = count_numbered(truth_dir, truth_file);
        ensure!(n_views > 0, "no {} found in {}", truth_file(0), truth_dir.display());
        for d in 0..n_views {
            let p = match &args.feature_counts {
                Some(counts) => *counts.get(d).ok_or_else(|| anyhow!("no feature count given for view {d}"))?,
                None => header_width(&mut s, &truth_dir.join(view_file(d)))?,
            };
            let truth = read_indices(&mut s, &truth_dir.join(truth_file(d)))?;
            ensure!(!truth.is_empty(), "{} is empty", truth_dir.join(truth_file(d)).display());
            let selected = read_indices(&mut s, &sel_dir.join(selection_file(d)))?;
            selection_metrics(&selected, &truth, p)?;
            let sel: BTreeSet<usize> = selected.into_iter().collect();
            let tru: BTreeSet<usize> = truth.into_iter().collect();
            let hits = sel.intersection(&tru).count() as u64;
            let false_pos = sel.len() as u64 - hits;
            let negatives = (p - tru.len()) as u64;
            let f_den = sel.len() as u64 + tru.len() as u64;
            header.extend([format!("tpr_{d}"), format!("fpr_{d}"), format!("f_{d}")]);
            row.push(percent(hits, tru.len() as u64));
            row.push(if negatives == 0 { percent(0, 1) } else { percent(false_pos, negatives) });
            row.push(percent(2 * hits, f_den));
        }
    }
    ensure!(!header.is_empty(), "nothing to evaluate: pass --predictions/--labels and/or --selection-dir/--truth-dir");
    let text = format!("{}\n{}\n", header.join(","), row.join(","));
    s.write(METRICS_FILE, text.as_bytes())?;
    s.finish()
}

fn hyperparameter(cfg: &TrainConfig, name: &str) -> f64 {
    match name {
        "latent_dim" | "K" | "k" => cfg.latent_dim as f64,
        "lambda" => cfg.lambdas[0],
        "lr_net" => cfg.lr_net[0],
        "lr_z" => cfg.lr_z,
        "lr_test" => cfg.lr_test(),
        "r_fraction" => cfg.r_fraction,
        "max_iters" => cfg.max_iters as f64,
        "svm_c" => cfg.svm_c,
        "svm_gamma" => cfg.svm_gamma(),
        _ => f64::NAN,
    }
}

/// Seeded shuffle of the rows, then the first 80% train and the rest validate.
pub fn validation_split(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    Rng::derive(seed, "hypersearch/split").shuffle(&mut order);
    let n_valid = n / 5;
    let valid = order.split_off(n - n_valid);
    (order, valid)
}

pub fn hypersearch(args: HypersearchArgs) -> Result<()> {
    let mut s = Session::start("hypersearch", &args.output.out_dir)?;
    s.set_seed(args.seed);
    let space_text = s.read_string(&args.space)?;
    let space: SearchSpace = serde_json::from_str(&space_text).with_context(|| format!("{}: invalid search space", args.space.display()))?;
    let base = load_config(&mut s, args.config.as_deref())?;
    s.set_config(&serde_json::json!({ "base": base, "space": space, "n_draws": args.n_draws }))?;
    let data = read_dataset(&mut s, &args.data_dir)?;
    ensure!(data.labels().is_some(), "{} has no {LABELS_FILE}", args.data_dir.display());
    let (train_rows, valid_rows) = validation_split(data.n_samples(), args.seed);
    ensure!(!valid_rows.is_empty(), "need at least 5 samples for an 80/20 split");
    let train = data.select_rows(&train_rows)?;
    let valid = data.select_rows(&valid_rows)?;
    let laplacians = if base.use_laplacian {
        let dir = default_dir(args.graph_dir.clone(), &args.data_dir);
        Some(read_laplacians(&mut s, &dir, &data.feature_counts())?)
    } else {
        None
    };
    let draws = random_search(&space, &base, &data.feature_counts(), args.n_draws, args.seed)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.jobs.unwrap_or(0)).build()?;
    let outcomes: Vec<std::result::Result<f64, String>> = pool.install(|| {
        draws
            .par_iter()
            .map(|cfg| {
                let run = run_pipeline(&train, Some(&valid), cfg, laplacians.as_deref()).map_err(|e| e.to_string())?;
                let predicted = run.predictions.expect("labelled training data yields predictions");
                error_rate(&predicted, valid.labels().expect("labels checked")).map_err(|e| e.to_string())
            })
            .collect()
    });
    let mut order: Vec<usize> = (0..draws.len()).collect();
    let key = |i: usize| outcomes[i].as_ref().map_or(f64::INFINITY, |&e| e);
    order.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
    let names: Vec<&String> = space.keys().collect();
    let mut text = String::from("rank,draw,validation_error");
    for n in &names {
        write!(text, ",{n}")?;
    }
    text.push_str(",status\n");
    for (rank, &i) in order.iter().enumerate() {
        let (err, status) = match &outcomes[i] {
            Ok(e) => (e.to_string(), "ok".to_string()),
            Err(msg) => (String::new(), msg.replace([',', '\n'], ";")),
        };
        write!(text, "{},{i},{err}", rank + 1)?;
        for n in &names {
            write!(text, ",{}", hyperparameter(&draws[i], n))?;
        }
        writeln!(text, ",{status}")?;
    }
    s.write(LEADERBOARD_FILE, text.as_bytes())?;
    s.finish()
}

pub fn cluster(args: ClusterArgs) -> Result<()> {
    let mut s = Session::start("cluster", &args.output.out_dir)?;
    s.set_seed(args.seed);
    s.set_config(&serde_json::json!({ "k": args.k, "n_init": args.n_init, "max_iter": args.max_iter }))?;
    let z: Matrix = read_matrix(&mut s, &args.latent)?;
    let result = kmeans(&z, args.k, args.seed, args.n_init, args.max_iter)?;
    s.write("clusters.csv", &labels_bytes(&result.assignments)?)?;
    s.write("centroids.csv", &matrix_bytes(&result.centroids, "z")?)?;
    let summary = serde_json::json!({ "inertia": result.inertia, "iterations": result.iterations });
    s.write("kmeans.json", (serde_json::to_string_pretty(&summary)? + "\n").as_bytes())?;
    s.finish()
}
