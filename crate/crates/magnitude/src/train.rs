//! Mini-batch SGD training with full weight-trajectory recording, and the
//! sliding windows that turn a trajectory into point clouds.

use std::path::PathBuf;

use crate::cloud::PointCloud;
use crate::data::{gen_blobs, load_idx, split_80_20, SplitDataset};
use crate::error::{Error, Result};
use crate::mlp::Mlp;
use crate::rng::StreamRng;

/// Where the training data comes from.
#[derive(Debug, Clone)]
pub enum DataSpec {
    Blobs {
        n_per_class: usize,
        n_classes: usize,
        input_dim: usize,
        separation: f64,
        seed: u64,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
    },
}

impl DataSpec {
    pub fn load(&self) -> Result<SplitDataset> {
        match self {
            DataSpec::Blobs { n_per_class, n_classes, input_dim, separation, seed } => {
                gen_blobs(*n_per_class, *n_classes, *input_dim, *separation, *seed)
            }
            DataSpec::Idx { images, labels } => Ok(split_80_20(load_idx(images, labels)?)),
        }
    }
}

impl std::fmt::Display for DataSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DataSpec::Blobs { n_per_class, n_classes, input_dim, separation, seed } => write!(
                f,
                "blobs(n_per_class={n_per_class},classes={n_classes},dim={input_dim},separation={separation},seed={seed})"
            ),
            DataSpec::Idx { images, labels } => {
                write!(f, "idx({}, {})", images.display(), labels.display())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainerConfig {
    /// Input, hidden..., output sizes.
    pub layer_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Test accuracy is evaluated at every multiple of this.
    pub eval_every: usize,
    pub dataset: DataSpec,
}

impl TrainerConfig {
    fn validate(&self, data: &SplitDataset) -> Result<()> {
        if self.layer_sizes.len() < 2 || self.layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidInputs(format!(
                "layer sizes must have >= 2 entries, all >= 1: {:?}",
                self.layer_sizes
            )));
        }
        // The contract asks for a positive learning rate; rate zero is
        // still accepted so a frozen trajectory can be produced on
        // purpose (constant weights are a useful degenerate fixture).
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidInputs(format!(
                "learning rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 || self.iterations == 0 || self.eval_every == 0 {
            return Err(Error::InvalidInputs(
                "batch_size, iterations and eval_every must be >= 1".into(),
            ));
        }
        if self.batch_size > data.train.n {
            return Err(Error::InvalidInputs(format!(
                "batch size {} exceeds training set size {}",
                self.batch_size, data.train.n
            )));
        }
        if data.train.d != self.layer_sizes[0] {
            return Err(Error::InvalidInputs(format!(
                "dataset feature dimension {} != input layer size {}",
                data.train.d, self.layer_sizes[0]
            )));
        }
        if data.train.n_classes != *self.layer_sizes.last().unwrap() {
            return Err(Error::InvalidInputs(format!(
                "dataset has {} classes but the output layer has {}",
                data.train.n_classes,
                self.layer_sizes.last().unwrap()
            )));
        }
        Ok(())
    }
}

/// Full weight trajectory of one training run. Row `i` of `weights` holds
/// the flattened parameters after iteration `iterations[i]`; iterations
/// start at 1 and increase by one per record. `test_accuracy` is NaN
/// except at multiples of `eval_every`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub d: usize,
    pub iterations: Vec<u64>,
    pub train_loss: Vec<f64>,
    pub test_accuracy: Vec<f64>,
    weights: Vec<f64>,
}

impl TrajectoryLog {
    pub fn new(
        d: usize,
        iterations: Vec<u64>,
        train_loss: Vec<f64>,
        test_accuracy: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let n = iterations.len();
        if d == 0 {
            return Err(Error::MalformedTrajectory("parameter count must be >= 1".into()));
        }
        if train_loss.len() != n || test_accuracy.len() != n || weights.len() != n * d {
            return Err(Error::MalformedTrajectory(format!(
                "inconsistent record counts: {n} iterations, {} losses, {} accuracies, \
                 {} weight entries (expected {})",
                train_loss.len(),
                test_accuracy.len(),
                weights.len(),
                n * d
            )));
        }
        for (k, &it) in iterations.iter().enumerate() {
            let expected = k as u64 + 1;
            if it != expected {
                return Err(Error::MalformedTrajectory(format!(
                    "iteration {it} at record {k}; records must start at 1 and increase by 1"
                )));
            }
        }
        if let Some(bad) = weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::MalformedTrajectory(format!("non-finite weight {bad}")));
        }
        Ok(Self { d, iterations, train_loss, test_accuracy, weights })
    }

    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    pub fn weights_at(&self, record: usize) -> &[f64] {
        &self.weights[record * self.d..(record + 1) * self.d]
    }
}

/// Trains with mini-batch SGD, recording the flattened weights after every
/// iteration. Batches walk a seeded shuffle of the training indices,
/// reshuffling whenever fewer than `batch_size` remain. Fully
/// deterministic for a fixed config and dataset.
pub fn train_and_record(config: &TrainerConfig, data: &SplitDataset) -> Result<TrajectoryLog> {
    config.validate(data)?;
    let mut net = Mlp::init(&config.layer_sizes, config.seed)?;
    let d = net.param_count();
    let mut scratch = net.scratch();
    let mut grad = net.gradients();

    let mut order: Vec<usize> = (0..data.train.n).collect();
    let mut shuffle_rng = StreamRng::new(config.seed, u64::MAX); // batch stream
    shuffle_rng.shuffle(&mut order);
    let mut cursor = 0usize;

    let mut iterations = Vec::with_capacity(config.iterations);
    let mut losses = Vec::with_capacity(config.iterations);
    let mut accuracies = Vec::with_capacity(config.iterations);
    let mut weights = Vec::with_capacity(config.iterations * d);

    for iter in 1..=config.iterations {
        if cursor + config.batch_size > order.len() {
            shuffle_rng.shuffle(&mut order);
            cursor = 0;
        }
        let batch = &order[cursor..cursor + config.batch_size];
        cursor += config.batch_size;

        let loss = net.batch_loss_and_grad(&data.train, batch, &mut scratch, &mut grad);
        if !loss.is_finite() {
            return Err(Error::DivergedLoss { iteration: iter as u64 });
        }
        net.sgd_step(&grad, config.learning_rate);

        iterations.push(iter as u64);
        losses.push(loss);
        accuracies.push(if iter % config.eval_every == 0 {
            net.accuracy(&data.test)
        } else {
            f64::NAN
        });
        weights.extend_from_slice(&net.flatten());
    }
    TrajectoryLog::new(d, iterations, losses, accuracies, weights)
}

/// One sliding window of the trajectory, as a point cloud.
#[derive(Debug, Clone)]
pub struct WindowView {
    pub window_id: usize,
    pub cloud: PointCloud,
    /// Test accuracy at (or most recently before) the window's final
    /// iteration; NaN if no evaluation fell inside the window.
    pub end_test_accuracy: f64,
}

/// Cuts the log into windows of `window` consecutive records starting
/// every `stride` records. `thin` keeps every `thin`-th record inside a
/// window (1 keeps all).
pub fn sliding_windows_thinned(
    log: &TrajectoryLog,
    window: usize,
    stride: usize,
    thin: usize,
) -> Result<Vec<WindowView>> {
    if window < 2 || stride == 0 || thin == 0 {
        return Err(Error::InvalidInputs(
            "window must be >= 2, stride and thin >= 1".into(),
        ));
    }
    if log.len() < window {
        return Err(Error::InsufficientRecords(format!(
            "{} records, need at least {window} for one window",
            log.len()
        )));
    }
    let mut views = Vec::new();
    let mut window_id = 0usize;
    loop {
        let start = window_id * stride;
        if start + window > log.len() {
            break;
        }
        let mut data = Vec::with_capacity(window.div_ceil(thin) * log.d);
        for r in (start..start + window).step_by(thin) {
            data.extend_from_slice(log.weights_at(r));
        }
        let cloud = PointCloud::new(data, log.d)?;
        let mut end_acc = f64::NAN;
        for r in (start..start + window).rev() {
            if !log.test_accuracy[r].is_nan() {
                end_acc = log.test_accuracy[r];
                break;
            }
        }
        views.push(WindowView { window_id, cloud, end_test_accuracy: end_acc });
        window_id += 1;
    }
    Ok(views)
}

/// [`sliding_windows_thinned`] keeping every record.
pub fn sliding_windows(log: &TrajectoryLog, window: usize, stride: usize) -> Result<Vec<WindowView>> {
    sliding_windows_thinned(log, window, stride, 1)
}
