use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use crate::dataset::MultiviewDataset;
use crate::decoder::{DecoderNetwork, ForwardCache, LayerSpec, NetworkAdam};
use crate::error::{Error, Result};
use crate::ndcore::{adam_step, project_rows_unit_ball_in_place, AdamState, Matrix, Rng};
use crate::objectives::stage1_view_loss_and_grad;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Stage {
    Selection = 1,
    Reconstruction = 2,
    Inference = 3,
}

impl From<Stage> for u8 {
    fn from(s: Stage) -> u8 {
        s as u8
    }
}

impl TryFrom<u8> for Stage {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Stage::Selection),
            2 => Ok(Stage::Reconstruction),
            3 => Ok(Stage::Inference),
            _ => Err(format!("unknown stage {v}")),
        }
    }
}

impl Stage {
    pub fn number(self) -> u8 {
        self as u8
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub stage: Stage,
    pub networks: Vec<DecoderNetwork>,
    pub latent: Matrix,
    /// Loss before every update, followed by the loss of the returned state.
    pub loss_trace: Vec<f64>,
    pub converged: bool,
    pub iterations_run: usize,
}

impl FitResult {
    pub fn final_loss(&self) -> f64 {
        *self.loss_trace.last().expect("loss trace is never empty")
    }

    pub fn initial_loss(&self) -> f64 {
        self.loss_trace[0]
    }

    /// Network outputs for the returned latent code, one per view.
    pub fn reconstructions(&self) -> Result<Vec<Matrix>> {
        self.networks.iter().map(|n| n.predict(&self.latent)).collect()
    }
}

/// Called once per recorded loss with the latent code that produced it.
pub trait TrainObserver {
    fn record(&mut self, iteration: usize, loss: f64, latent: &Matrix);
}

impl TrainObserver for () {
    fn record(&mut self, _: usize, _: f64, _: &Matrix) {}
}

impl<F: FnMut(usize, f64, &Matrix)> TrainObserver for F {
    fn record(&mut self, iteration: usize, loss: f64, latent: &Matrix) {
        self(iteration, loss, latent)
    }
}

enum Objective<'a> {
    Sparse { lambdas: Vec<f64>, laplacians: Vec<Option<&'a Matrix>>, eps: f64 },
    Squared,
}

impl Objective<'_> {
    fn view(&self, d: usize, x: &Matrix, g: &Matrix) -> Result<(f64, Matrix)> {
        match self {
            Objective::Sparse { lambdas, laplacians, eps } => stage1_view_loss_and_grad(x, g, lambdas[d], laplacians[d], *eps),
            Objective::Squared => {
                let diff = g.sub(x)?;
                let loss = diff.frobenius_sq();
                Ok((loss, diff.scale(2.0)))
            }
        }
    }
}

struct Evaluation {
    loss: f64,
    caches: Vec<ForwardCache>,
    upstream: Vec<Matrix>,
}

fn evaluate(views: &[Matrix], nets: &[DecoderNetwork], z: &Matrix, objective: &Objective<'_>) -> Result<Evaluation> {
    let mut loss = 0.0;
    let mut caches = Vec::with_capacity(nets.len());
    let mut upstream = Vec::with_capacity(nets.len());
    for (d, (x, net)) in views.iter().zip(nets).enumerate() {
        let (g, cache) = net.forward(z)?;
        let (l, grad) = objective.view(d, x, &g)?;
        loss += l;
        caches.push(cache);
        upstream.push(grad);
    }
    Ok(Evaluation { loss, caches, upstream })
}

struct Schedule<'a> {
    lr_net: Option<&'a [f64]>,
    lr_z: f64,
    max_iters: usize,
    rel_tol: f64,
    project: bool,
}

struct Outcome {
    trace: Vec<f64>,
    converged: bool,
    iterations: usize,
}

fn alternate(
    views: &[Matrix],
    nets: &mut [DecoderNetwork],
    z: &mut Matrix,
    objective: &Objective<'_>,
    schedule: &Schedule<'_>,
    observer: &mut dyn TrainObserver,
) -> Result<Outcome> {
    let mut net_adam: Vec<NetworkAdam> = nets.iter().map(NetworkAdam::new).collect();
    let mut z_adam = AdamState::for_param(z);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    loop {
        let eval = evaluate(views, nets, z, objective)?;
        if !eval.loss.is_finite() {
            return Err(Error::NonFiniteLoss { iteration: iterations });
        }
        observer.record(iterations, eval.loss, z);
        if let Some(&prev) = trace.last() {
            let prev: f64 = prev;
            if ((eval.loss - prev).abs() / prev.abs().max(1.0)) < schedule.rel_tol {
                converged = true;
            }
        }
        trace.push(eval.loss);
        if converged || iterations == schedule.max_iters {
            break;
        }
        let eval = match schedule.lr_net {
            Some(rates) => {
                for (d, net) in nets.iter_mut().enumerate() {
                    let grads = net.backward(z, &eval.upstream[d], &eval.caches[d])?;
                    net_adam[d].step(net, &grads, rates[d])?;
                }
                evaluate(views, nets, z, objective)?
            }
            None => eval,
        };
        let mut dz = Matrix::zeros(z.rows(), z.cols());
        for (d, net) in nets.iter().enumerate() {
            dz.add_assign(&net.backward_latent(z, &eval.upstream[d], &eval.caches[d])?)?;
        }
        adam_step(z, &dz, &mut z_adam, schedule.lr_z)?;
        if schedule.project {
            project_rows_unit_ball_in_place(z);
        }
        iterations += 1;
    }
    Ok(Outcome { trace, converged, iterations })
}

fn init_networks(cfg: &TrainConfig, widths: &[usize], stage: Stage) -> Result<Vec<DecoderNetwork>> {
    let hidden = cfg.hidden_for(widths.len())?;
    widths
        .iter()
        .zip(&hidden)
        .enumerate()
        .map(|(d, (&p, h))| {
            let specs = LayerSpec::chain(cfg.latent_dim, h, p, cfg.group_norm);
            let mut rng = Rng::derive(cfg.seed, &format!("stage{}/network/{d}", stage.number()));
            DecoderNetwork::init(d, &specs, &mut rng)
        })
        .collect()
}

fn init_latent(cfg: &TrainConfig, n: usize, stage: Stage) -> Matrix {
    Rng::derive(cfg.seed, &format!("stage{}/latent", stage.number())).normal_matrix(n, cfg.latent_dim)
}

/// Feature-selection stage: decoders and latent code under the
/// ℓ2,1-penalized objective.
///
/// `laplacians` supplies one optional smoothing operator per view and is
/// consulted only when `cfg.use_laplacian` is set.
pub fn stage1_train(data: &MultiviewDataset, cfg: &TrainConfig, laplacians: Option<&[Option<Matrix>]>) -> Result<FitResult> {
    stage1_train_observed(data, cfg, laplacians, &mut ())
}

pub fn stage1_train_observed(
    data: &MultiviewDataset,
    cfg: &TrainConfig,
    laplacians: Option<&[Option<Matrix>]>,
    observer: &mut dyn TrainObserver,
) -> Result<FitResult> {
    let widths = data.feature_counts();
    cfg.validate_for_selection(&widths)?;
    let views = data.views();
    let laps: Vec<Option<&Matrix>> = match (cfg.use_laplacian, laplacians) {
        (false, _) => vec![None; views.len()],
        (true, None) => return Err(Error::InvalidArgument("use_laplacian is set but no graph was supplied".into())),
        (true, Some(l)) if l.len() != views.len() => {
            return Err(Error::InvalidArgument(format!("{} laplacians for {} views", l.len(), views.len())))
        }
        (true, Some(l)) => {
            for (d, m) in l.iter().enumerate() {
                if let Some(m) = m {
                    if m.shape() != (widths[d], widths[d]) {
                        return Err(Error::ShapeMismatch { op: "laplacian", left: m.shape(), right: (widths[d], widths[d]) });
                    }
                }
            }
            l.iter().map(Option::as_ref).collect()
        }
    };
    let objective = Objective::Sparse { lambdas: cfg.lambdas_for(views.len())?, laplacians: laps, eps: cfg.smoothing_eps };
    let mut nets = init_networks(cfg, &widths, Stage::Selection)?;
    let mut z = init_latent(cfg, data.n_samples(), Stage::Selection);
    let rates = cfg.lr_net_for(views.len())?;
    let schedule = Schedule { lr_net: Some(&rates), lr_z: cfg.lr_z, max_iters: cfg.max_iters, rel_tol: cfg.rel_tol, project: false };
    let out = alternate(views, &mut nets, &mut z, &objective, &schedule, observer)?;
    Ok(FitResult { stage: Stage::Selection, networks: nets, latent: z, loss_trace: out.trace, converged: out.converged, iterations_run: out.iterations })
}

/// Reconstruction stage on the selected columns, with every latent row kept
/// inside the unit ball.
pub fn stage2_train(data: &MultiviewDataset, cfg: &TrainConfig) -> Result<FitResult> {
    stage2_train_observed(data, cfg, &mut ())
}

pub fn stage2_train_observed(data: &MultiviewDataset, cfg: &TrainConfig, observer: &mut dyn TrainObserver) -> Result<FitResult> {
    let widths = data.feature_counts();
    cfg.validate(widths.len())?;
    let mut nets = init_networks(cfg, &widths, Stage::Reconstruction)?;
    let mut z = init_latent(cfg, data.n_samples(), Stage::Reconstruction);
    project_rows_unit_ball_in_place(&mut z);
    let rates = cfg.lr_net_for(widths.len())?;
    let schedule = Schedule { lr_net: Some(&rates), lr_z: cfg.lr_z, max_iters: cfg.max_iters, rel_tol: cfg.rel_tol, project: true };
    let out = alternate(data.views(), &mut nets, &mut z, &Objective::Squared, &schedule, observer)?;
    Ok(FitResult {
        stage: Stage::Reconstruction,
        networks: nets,
        latent: z,
        loss_trace: out.trace,
        converged: out.converged,
        iterations_run: out.iterations,
    })
}

/// Test-time inference: only the latent code of `data` is optimized; the
/// networks are returned unchanged.
pub fn stage3_infer(data: &MultiviewDataset, networks: &[DecoderNetwork], cfg: &TrainConfig) -> Result<FitResult> {
    stage3_infer_observed(data, networks, cfg, &mut ())
}

pub fn stage3_infer_observed(
    data: &MultiviewDataset,
    networks: &[DecoderNetwork],
    cfg: &TrainConfig,
    observer: &mut dyn TrainObserver,
) -> Result<FitResult> {
    if networks.len() != data.n_views() {
        return Err(Error::InvalidArgument(format!("{} networks for {} views", networks.len(), data.n_views())));
    }
    let k = networks[0].input_width();
    for (d, net) in networks.iter().enumerate() {
        if net.output_width() != data.view(d).cols() {
            return Err(Error::ShapeMismatch { op: "stage 3 view", left: data.view(d).shape(), right: (data.n_samples(), net.output_width()) });
        }
        if net.input_width() != k {
            return Err(Error::InvalidArgument("networks disagree on the latent width".into()));
        }
    }
    let cfg = TrainConfig { latent_dim: k, ..cfg.clone() };
    cfg.validate(data.n_views())?;
    let mut nets = networks.to_vec();
    let mut z = init_latent(&cfg, data.n_samples(), Stage::Inference);
    project_rows_unit_ball_in_place(&mut z);
    let schedule = Schedule { lr_net: None, lr_z: cfg.lr_test(), max_iters: cfg.max_iters, rel_tol: cfg.rel_tol, project: true };
    let out = alternate(data.views(), &mut nets, &mut z, &Objective::Squared, &schedule, observer)?;
    Ok(FitResult { stage: Stage::Inference, networks: nets, latent: z, loss_trace: out.trace, converged: out.converged, iterations_run: out.iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{stage1_loss, stage2_loss, Stage1LossConfig};

    fn tiny(seed: u64, n: usize, widths: &[usize]) -> MultiviewDataset {
        let mut rng = Rng::new(seed);
        let base = rng.normal_matrix(n, 2);
        let views = widths
            .iter()
            .map(|&p| {
                let w = rng.normal_matrix(2, p);
                let clean = base.matmul(&w).unwrap().map(|x| x.tanh());
                clean.add(&rng.normal_matrix(n, p).scale(0.1)).unwrap()
            })
            .collect();
        MultiviewDataset::new(views, None).unwrap()
    }

    fn small_cfg(max_iters: usize) -> TrainConfig {
        TrainConfig {
            latent_dim: 2,
            hidden_widths: vec![vec![8, 16]],
            lr_net: vec![1e-2],
            lr_z: 1e-2,
            max_iters,
            r_fraction: 0.5,
            seed: 5,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_iterations_returns_initial_state() {
        let data = tiny(1, 20, &[10, 10]);
        let fit = stage1_train(&data, &small_cfg(0), None).unwrap();
        assert_eq!(fit.loss_trace.len(), 1);
        assert_eq!(fit.iterations_run, 0);
        assert_eq!(fit.latent, init_latent(&small_cfg(0), 20, Stage::Selection));
        let recons = fit.reconstructions().unwrap();
        let expected = stage1_loss(data.views(), &recons, &Stage1LossConfig::new(2)).unwrap();
        assert!((fit.final_loss() - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn stage1_descends_and_is_deterministic() {
        let data = tiny(2, 20, &[10, 10]);
        let cfg = small_cfg(500);
        let a = stage1_train(&data, &cfg, None).unwrap();
        assert!(a.final_loss() < a.initial_loss());
        let b = stage1_train(&data, &cfg, None).unwrap();
        assert_eq!(a.loss_trace, b.loss_trace);
        assert_eq!(a.latent, b.latent);
        assert_eq!(a.loss_trace.len(), a.iterations_run + 1);
    }

    #[test]
    fn stage1_rejects_oversized_latent() {
        let data = tiny(3, 20, &[10, 10]);
        let cfg = TrainConfig { latent_dim: 6, ..small_cfg(3) };
        assert!(stage1_train(&data, &cfg, None).is_err());
    }

    #[test]
    fn nan_loss_reports_iteration() {
        let mut data = tiny(3, 10, &[4]).views()[0].clone();
        data[(2, 1)] = f64::NAN;
        let ds = MultiviewDataset::new(vec![data], None).unwrap();
        match stage2_train(&ds, &small_cfg(3)) {
            Err(Error::NonFiniteLoss { iteration }) => assert_eq!(iteration, 0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn identity_laplacian_matches_plain_penalty() {
        let data = tiny(4, 20, &[10, 8]);
        let laps = vec![Some(Matrix::identity(10)), Some(Matrix::identity(8))];
        let off = stage1_train(&data, &small_cfg(50), Some(&laps)).unwrap();
        let on = stage1_train(&data, &TrainConfig { use_laplacian: true, ..small_cfg(50) }, Some(&laps)).unwrap();
        assert_eq!(off.loss_trace, on.loss_trace);
        assert!(stage1_train(&data, &TrainConfig { use_laplacian: true, ..small_cfg(5) }, None).is_err());
    }

    #[test]
    fn stage2_keeps_every_iterate_in_the_unit_ball() {
        let data = tiny(5, 20, &[5, 5]);
        let mut worst: f64 = 0.0;
        let mut obs = |_: usize, _: f64, z: &Matrix| worst = z.row_norms().into_iter().fold(worst, f64::max);
        let fit = stage2_train_observed(&data, &TrainConfig { lr_z: 0.2, ..small_cfg(300) }, &mut obs).unwrap();
        assert!(worst <= 1.0 + 1e-9, "{worst}");
        assert!(fit.final_loss() < fit.initial_loss());
        assert!(fit.latent.row_norms().iter().all(|&r| r <= 1.0 + 1e-9));
    }

    #[test]
    fn stage2_overparameterized_linear_fit() {
        let mut rng = Rng::new(6);
        let x = rng.normal_matrix(12, 3).scale(0.3);
        let data = MultiviewDataset::new(vec![x], None).unwrap();
        let cfg = TrainConfig {
            latent_dim: 3,
            hidden_widths: vec![vec![]],
            lr_net: vec![1e-2],
            lr_z: 1e-2,
            max_iters: 3000,
            rel_tol: 0.0,
            ..TrainConfig::default()
        };
        let fit = stage2_train(&data, &cfg).unwrap();
        assert!(fit.final_loss() < 1e-2 * fit.initial_loss(), "{} vs {}", fit.final_loss(), fit.initial_loss());
    }

    #[test]
    fn stage3_freezes_networks_and_matches_training_loss() {
        let data = tiny(7, 20, &[5, 5]);
        let cfg = TrainConfig { rel_tol: 0.0, lr_test: Some(5e-2), ..small_cfg(1500) };
        let train = stage2_train(&data, &cfg).unwrap();
        let before: Vec<Vec<u64>> = train.networks.iter().flat_map(|n| n.parameters()).map(|p| p.as_slice().iter().map(|x| x.to_bits()).collect()).collect();
        let test = stage3_infer(&data, &train.networks, &cfg).unwrap();
        let after: Vec<Vec<u64>> = test.networks.iter().flat_map(|n| n.parameters()).map(|p| p.as_slice().iter().map(|x| x.to_bits()).collect()).collect();
        assert_eq!(before, after);
        let rel = (test.final_loss() - train.final_loss()).abs() / train.final_loss();
        assert!(rel < 0.10, "stage 3 {} vs stage 2 {}", test.final_loss(), train.final_loss());
        let recons = test.reconstructions().unwrap();
        assert!((stage2_loss(data.views(), &recons).unwrap() - test.final_loss()).abs() < 1e-9 * test.final_loss());
    }

    #[test]
    fn stage3_single_sample_and_width_mismatch() {
        let data = tiny(8, 10, &[4, 3]);
        let train = stage2_train(&data, &small_cfg(20)).unwrap();
        let one = data.select_rows(&[4]).unwrap();
        let fit = stage3_infer(&one, &train.networks, &small_cfg(20)).unwrap();
        assert_eq!(fit.latent.shape(), (1, 2));
        let wrong = tiny(8, 10, &[4, 4]);
        assert!(stage3_infer(&wrong, &train.networks, &small_cfg(5)).is_err());
    }
}
