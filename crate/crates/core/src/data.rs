//! Datasets: LIBSVM text I/O, deterministic splits, the synthetic toy
//! generators, and uniform-noise injection.
//!
//! Every random routine here draws from `ChaCha8Rng` seeded with the given
//! `u64`, so generated data is identical across platforms.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::math::gauss_cdf;

/// Label arity of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    /// Labels in {-1, +1}.
    Binary,
    /// Labels in 1..=classes.
    Multiclass { classes: usize },
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::Binary => write!(f, "binary"),
            Task::Multiclass { classes } => write!(f, "multiclass({classes})"),
        }
    }
}

/// Dense samples (row-major) with labels. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    dim: usize,
    features: Vec<f64>,
    labels: Vec<i32>,
    task: Task,
}

impl Dataset {
    pub fn new(name: impl Into<String>, rows: Vec<Vec<f64>>, labels: Vec<i32>, task: Task) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut features = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidData(format!(
                    "sample {i} has dimension {}, expected {dim}",
                    row.len()
                )));
            }
            features.extend_from_slice(row);
        }
        Self::from_flat(name, dim, features, labels, task)
    }

    pub fn from_flat(
        name: impl Into<String>,
        dim: usize,
        features: Vec<f64>,
        labels: Vec<i32>,
        task: Task,
    ) -> Result<Self> {
        if features.len() != dim * labels.len() {
            return Err(Error::InvalidData(format!(
                "{} feature values for {} samples of dimension {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite feature value in sample {}",
                i / dim.max(1)
            )));
        }
        for (i, &y) in labels.iter().enumerate() {
            let ok = match task {
                Task::Binary => y == 1 || y == -1,
                Task::Multiclass { classes } => y >= 1 && (y as usize) <= classes,
            };
            if !ok {
                return Err(Error::InvalidData(format!(
                    "label {y} of sample {i} is not valid for a {task} task"
                )));
            }
        }
        if let Task::Multiclass { classes } = task {
            if classes < 2 {
                return Err(Error::InvalidData(format!(
                    "multiclass task needs at least 2 classes, got {classes}"
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            dim,
            features,
            labels,
            task,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn task(&self) -> Task {
        self.task
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.len()).map(|i| self.row(i))
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, i: usize) -> i32 {
        self.labels[i]
    }

    /// Binary label as a float (±1).
    #[inline]
    pub fn y(&self, i: usize) -> f64 {
        self.labels[i] as f64
    }

    /// 0-based class index of a multiclass label.
    #[inline]
    pub fn class_index(&self, i: usize) -> usize {
        (self.labels[i] - 1) as usize
    }

    pub fn classes(&self) -> usize {
        match self.task {
            Task::Binary => 2,
            Task::Multiclass { classes } => classes,
        }
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            name: self.name.clone(),
            dim: self.dim,
            features,
            labels,
            task: self.task,
        }
    }

    /// Reinterpret a multiclass dataset with exactly two classes as binary
    /// (class 1 → +1, class 2 → -1), or a binary one as two-class
    /// multiclass with the inverse mapping.
    pub fn relabel(&self, task: Task) -> Result<Dataset> {
        let labels = match (self.task, task) {
            (a, b) if a == b => self.labels.clone(),
            (Task::Multiclass { classes: 2 }, Task::Binary) => {
                self.labels.iter().map(|&y| if y == 1 { 1 } else { -1 }).collect()
            }
            (Task::Binary, Task::Multiclass { classes: 2 }) => {
                self.labels.iter().map(|&y| if y == 1 { 1 } else { 2 }).collect()
            }
            (a, b) => {
                return Err(Error::InvalidData(format!("cannot relabel {a} data as {b}")));
            }
        };
        Dataset::from_flat(self.name.clone(), self.dim, self.features.clone(), labels, task)
    }

    /// Copy with a constant feature appended to every sample, so a bias
    /// term can be learned through the weight vector.
    pub fn append_constant(&self, value: f64) -> Dataset {
        let dim = self.dim + 1;
        let mut features = Vec::with_capacity(self.len() * dim);
        for row in self.rows() {
            features.extend_from_slice(row);
            features.push(value);
        }
        Dataset {
            name: self.name.clone(),
            dim,
            features,
            labels: self.labels.clone(),
            task: self.task,
        }
    }

    /// SHA-256 over dimension, feature bit patterns and labels.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.dim as u64).to_le_bytes());
        h.update((self.len() as u64).to_le_bytes());
        for v in &self.features {
            h.update(v.to_bits().to_le_bytes());
        }
        for y in &self.labels {
            h.update(y.to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Ensure the dataset is a nonempty binary task.
    pub fn require_binary(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::InvalidData("no samples".into()));
        }
        if self.task != Task::Binary {
            return Err(Error::InvalidData(format!(
                "expected binary labels in {{-1, +1}}, dataset is {}",
                self.task
            )));
        }
        Ok(())
    }

    pub fn require_multiclass(&self) -> Result<usize> {
        if self.is_empty() {
            return Err(Error::InvalidData("no samples".into()));
        }
        match self.task {
            Task::Multiclass { classes } => Ok(classes),
            Task::Binary => Err(Error::InvalidData(
                "expected multiclass labels in 1..C, dataset is binary".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Force the feature dimension (e.g. a test file that never mentions
    /// the last feature). Indices beyond it are an error.
    pub dim: Option<usize>,
    /// Force the label interpretation instead of inferring it.
    pub task: Option<Task>,
}

/// Load a LIBSVM file (`label idx:val ...`, 1-based indices).
///
/// Labels are inferred as binary when every label is in {-1, 0, +1}
/// (0 maps to -1) and as multiclass `1..C` when all labels are positive
/// integers with at least one `>= 2`.
pub fn load_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    load_libsvm_with(path, LoadOptions::default())
}

pub fn load_libsvm_with(path: impl AsRef<Path>, opts: LoadOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_libsvm(BufReader::new(file), path, &name, opts)
}

pub fn parse_libsvm(
    reader: impl BufRead,
    path: &Path,
    name: &str,
    opts: LoadOptions,
) -> Result<Dataset> {
    let err = |line: usize, msg: String| Error::Parse {
        path: PathBuf::from(path),
        line,
        msg,
    };
    let mut raw_labels: Vec<(usize, f64)> = Vec::new();
    let mut sparse: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().unwrap_or_default();
        let label: f64 = label_tok
            .parse()
            .map_err(|_| err(lineno, format!("invalid label `{label_tok}`")))?;
        if !label.is_finite() {
            return Err(err(lineno, format!("invalid label `{label_tok}`")));
        }
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(lineno, format!("expected `index:value`, got `{tok}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| err(lineno, format!("invalid feature index `{idx}`")))?;
            if idx == 0 {
                return Err(err(lineno, "feature indices are 1-based".into()));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| err(lineno, format!("invalid feature value `{val}`")))?;
            if !val.is_finite() {
                return Err(err(lineno, format!("non-finite feature value `{val}`")));
            }
            if entries.iter().any(|&(j, _)| j == idx) {
                return Err(err(lineno, format!("duplicate feature index {idx}")));
            }
            if let Some(d) = opts.dim {
                if idx > d {
                    return Err(err(lineno, format!("feature index {idx} exceeds dimension {d}")));
                }
            }
            max_index = max_index.max(idx);
            entries.push((idx, val));
        }
        raw_labels.push((lineno, label));
        sparse.push(entries);
    }

    if sparse.is_empty() {
        return Err(Error::InvalidData(format!("{}: no samples", path.display())));
    }

    let task = match opts.task {
        Some(t) => t,
        None => infer_task(&raw_labels).map_err(|(line, msg)| err(line, msg))?,
    };
    let mut labels = Vec::with_capacity(raw_labels.len());
    for &(line, y) in &raw_labels {
        let mapped = match task {
            Task::Binary if y == 1.0 => 1,
            Task::Binary if y == -1.0 || y == 0.0 => -1,
            Task::Multiclass { classes } if y.fract() == 0.0 && y >= 1.0 && y <= classes as f64 => {
                y as i32
            }
            _ => return Err(err(line, format!("label {y} is not valid for a {task} task"))),
        };
        labels.push(mapped);
    }

    let dim = opts.dim.unwrap_or(max_index);
    let mut features = vec![0.0; sparse.len() * dim];
    for (i, entries) in sparse.iter().enumerate() {
        for &(idx, val) in entries {
            features[i * dim + idx - 1] = val;
        }
    }
    Dataset::from_flat(name, dim, features, labels, task)
}

fn infer_task(labels: &[(usize, f64)]) -> std::result::Result<Task, (usize, String)> {
    let is_class = |y: f64| y.fract() == 0.0 && y >= 1.0 && y <= i32::MAX as f64;
    if let Some(&(line, y)) = labels.iter().find(|(_, y)| !(is_class(*y) || *y == 0.0 || *y == -1.0)) {
        return Err((line, format!("label {y} is neither binary (-1/0/+1) nor a class index 1..C")));
    }
    // the first label that only one arity admits decides; later labels
    // must agree with it
    let Some(&(_, first)) = labels.iter().find(|(_, y)| *y != 1.0) else {
        return Ok(Task::Binary);
    };
    let binary = first <= 0.0;
    if let Some(&(line, y)) = labels.iter().find(|(_, y)| (*y <= 0.0) != binary && *y != 1.0) {
        let seen = if binary { "binary" } else { "multiclass" };
        return Err((line, format!("inconsistent labels: {y} in a file with {seen} labels")));
    }
    if binary {
        return Ok(Task::Binary);
    }
    let classes = labels.iter().map(|&(_, y)| y as usize).max().unwrap_or(2);
    Ok(Task::Multiclass { classes })
}

/// Write in LIBSVM format. Zero entries are omitted; values are written
/// with the shortest representation that parses back to the same `f64`.
pub fn write_libsvm(data: &Dataset, mut w: impl Write) -> Result<()> {
    for i in 0..data.len() {
        match data.task() {
            Task::Binary => write!(w, "{}", if data.label(i) == 1 { "+1" } else { "-1" })?,
            Task::Multiclass { .. } => write!(w, "{}", data.label(i))?,
        }
        for (j, v) in data.row(i).iter().enumerate() {
            if *v != 0.0 {
                write!(w, " {}:{:?}", j + 1, v)?;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn save_libsvm(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_libsvm(data, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Fractions of a train / cross-validation / test partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub cv_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, cv: f64, test: f64, seed: u64) -> Result<Self> {
        for f in [train, cv, test] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "split fractions must lie in (0, 1), got {f}"
                )));
            }
        }
        if ((train + cv + test) - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "split fractions must sum to 1, got {}",
                train + cv + test
            )));
        }
        Ok(Self {
            train_fraction: train,
            cv_fraction: cv,
            test_fraction: test,
            seed,
        })
    }

    /// Shuffled index partition of `n` samples.
    pub fn partition(&self, n: usize) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(self.seed));
        let n_train = ((n as f64) * self.train_fraction).round() as usize;
        let n_cv = (((n as f64) * self.cv_fraction).round() as usize).min(n - n_train.min(n));
        let n_train = n_train.min(n);
        let test = idx.split_off(n_train + n_cv);
        let cv = idx.split_off(n_train);
        (idx, cv, test)
    }

    pub fn split(&self, data: &Dataset) -> (Dataset, Dataset, Dataset) {
        let (a, b, c) = self.partition(data.len());
        (
            data.subset(&a).with_name(format!("{}-train", data.name())),
            data.subset(&b).with_name(format!("{}-cv", data.name())),
            data.subset(&c).with_name(format!("{}-test", data.name())),
        )
    }
}

/// The synthetic 2-D problems.
///
/// | kind | classes | construction |
/// |------|---------|--------------|
/// | `TwoGauss` | 2 | `N(±(1, 1), I)` |
/// | `NarrowWithOutliers` | 2 | `N(±(0, 1), diag(2², 0.4²))`; 8% of samples are outliers from `N(∓(0, 3), 1.5² I)` |
/// | `ThreeGauss` | 3 | `N(3·(cos θ_k, sin θ_k), I)`, θ = 90°, 210°, 330° |
/// | `FourGauss` | 4 | `N((±2, ±2), I)` |
///
/// Classes alternate sample by sample, so every split is balanced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ToyKind {
    TwoGauss,
    NarrowWithOutliers,
    ThreeGauss,
    FourGauss,
}

pub const TWO_GAUSS_MEAN: [f64; 2] = [1.0, 1.0];
pub const TWO_GAUSS_STD: f64 = 1.0;
pub const NARROW_MEAN: [f64; 2] = [0.0, 1.0];
pub const NARROW_STD: [f64; 2] = [2.0, 0.4];
pub const OUTLIER_RATE: f64 = 0.08;
pub const OUTLIER_MEAN: [f64; 2] = [0.0, 3.0];
pub const OUTLIER_STD: f64 = 1.5;
pub const THREE_GAUSS_RADIUS: f64 = 3.0;
pub const FOUR_GAUSS_OFFSET: f64 = 2.0;

/// Accuracy of the Bayes-optimal (linear) rule on `TwoGauss`: `Φ(‖μ‖/s)`.
pub fn two_gauss_bayes_accuracy() -> f64 {
    let m = (TWO_GAUSS_MEAN[0].powi(2) + TWO_GAUSS_MEAN[1].powi(2)).sqrt();
    gauss_cdf(m / TWO_GAUSS_STD)
}

impl ToyKind {
    pub fn classes(self) -> usize {
        match self {
            ToyKind::TwoGauss | ToyKind::NarrowWithOutliers => 2,
            ToyKind::ThreeGauss => 3,
            ToyKind::FourGauss => 4,
        }
    }

    pub fn task(self) -> Task {
        match self.classes() {
            2 => Task::Binary,
            c => Task::Multiclass { classes: c },
        }
    }

    fn label(self, class: usize) -> i32 {
        match self.task() {
            Task::Binary => if class == 0 { 1 } else { -1 },
            Task::Multiclass { .. } => class as i32 + 1,
        }
    }

    fn sample(self, class: usize, rng: &mut ChaCha8Rng) -> [f64; 2] {
        let mut n = || rng.sample::<f64, _>(StandardNormal);
        match self {
            ToyKind::TwoGauss => {
                let s = if class == 0 { 1.0 } else { -1.0 };
                [
                    s * TWO_GAUSS_MEAN[0] + TWO_GAUSS_STD * n(),
                    s * TWO_GAUSS_MEAN[1] + TWO_GAUSS_STD * n(),
                ]
            }
            ToyKind::NarrowWithOutliers => {
                let s = if class == 0 { 1.0 } else { -1.0 };
                let (a, b) = (n(), n());
                if rng.random::<f64>() < OUTLIER_RATE {
                    [
                        -s * OUTLIER_MEAN[0] + OUTLIER_STD * a,
                        -s * OUTLIER_MEAN[1] + OUTLIER_STD * b,
                    ]
                } else {
                    [
                        s * NARROW_MEAN[0] + NARROW_STD[0] * a,
                        s * NARROW_MEAN[1] + NARROW_STD[1] * b,
                    ]
                }
            }
            ToyKind::ThreeGauss => {
                let theta = (90.0 + 120.0 * class as f64).to_radians();
                [
                    THREE_GAUSS_RADIUS * theta.cos() + n(),
                    THREE_GAUSS_RADIUS * theta.sin() + n(),
                ]
            }
            ToyKind::FourGauss => {
                let sx = if class % 2 == 0 { 1.0 } else { -1.0 };
                let sy = if class < 2 { 1.0 } else { -1.0 };
                [FOUR_GAUSS_OFFSET * sx + n(), FOUR_GAUSS_OFFSET * sy + n()]
            }
        }
    }
}

impl std::str::FromStr for ToyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "two-gauss" | "twogauss" => Ok(ToyKind::TwoGauss),
            "narrow-with-outliers" | "narrow" => Ok(ToyKind::NarrowWithOutliers),
            "three-gauss" | "threegauss" => Ok(ToyKind::ThreeGauss),
            "four-gauss" | "fourgauss" => Ok(ToyKind::FourGauss),
            other => Err(format!("unknown toy kind `{other}`")),
        }
    }
}

/// Generate train / cv / test splits of `n_per_split` samples each.
pub fn gen_gaussian_toy(kind: ToyKind, n_per_split: usize, seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    if n_per_split < 10 {
        return Err(Error::InvalidConfig(format!(
            "n_per_split must be at least 10, got {n_per_split}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = kind.classes();
    let mut make = |split: &str| {
        let mut features = Vec::with_capacity(2 * n_per_split);
        let mut labels = Vec::with_capacity(n_per_split);
        for i in 0..n_per_split {
            let class = i % classes;
            features.extend_from_slice(&kind.sample(class, &mut rng));
            labels.push(kind.label(class));
        }
        Dataset::from_flat(format!("{kind:?}-{split}"), 2, features, labels, kind.task())
    };
    Ok((make("train")?, make("cv")?, make("test")?))
}

/// Geometry of the radial ring problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingSpec {
    pub inner_radius: f64,
    pub outer_min: f64,
    pub half_box: f64,
}

impl Default for RingSpec {
    fn default() -> Self {
        Self {
            inner_radius: 2.0,
            outer_min: 3.5,
            half_box: 7.5,
        }
    }
}

impl RingSpec {
    /// `Some(label)` for a kept point, `None` for the dropped band.
    pub fn label_of(&self, p: [f64; 2]) -> Option<i32> {
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        if r <= self.inner_radius {
            Some(1)
        } else if r > self.outer_min {
            Some(-1)
        } else {
            None
        }
    }
}

/// Uniform points on `[-box, box]²`; positive inside the inner radius,
/// negative beyond `outer_min`, points in between are dropped. Draws until
/// `n` points are kept and both classes are present.
pub fn gen_radial_ring(n: usize, spec: RingSpec, seed: u64) -> Result<Dataset> {
    if n < 10 {
        return Err(Error::InvalidConfig(format!("n must be at least 10, got {n}")));
    }
    if !(spec.inner_radius > 0.0 && spec.outer_min >= spec.inner_radius && spec.half_box > spec.outer_min) {
        return Err(Error::InvalidConfig(format!("invalid ring geometry {spec:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(2 * n);
    let mut labels: Vec<i32> = Vec::with_capacity(n);
    loop {
        let p = [
            rng.random_range(-spec.half_box..spec.half_box),
            rng.random_range(-spec.half_box..spec.half_box),
        ];
        let Some(y) = spec.label_of(p) else { continue };
        if labels.len() + 1 == n && !labels.is_empty() && labels.iter().all(|&l| l == y) {
            // the last slot must complete the missing class
            continue;
        }
        features.extend_from_slice(&p);
        labels.push(y);
        if labels.len() == n {
            break;
        }
    }
    Dataset::from_flat("ring", 2, features, labels, Task::Binary)
}

/// Perturb every feature coordinate by an independent `U(-x, x)` draw.
pub fn inject_uniform_noise(data: &Dataset, magnitude: f64, seed: u64) -> Result<Dataset> {
    if !(magnitude >= 0.0 && magnitude.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "noise magnitude must be a nonnegative number, got {magnitude}"
        )));
    }
    if magnitude == 0.0 {
        return Ok(data.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = data.clone();
    for v in out.features.iter_mut() {
        *v += magnitude * (2.0 * rng.random::<f64>() - 1.0);
    }
    Ok(out)
}

/// Per-feature min-max scaling to [0, 1]. Not applied anywhere by default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(data: &Dataset) -> Self {
        let mut min = vec![f64::INFINITY; data.dim()];
        let mut max = vec![f64::NEG_INFINITY; data.dim()];
        for row in data.rows() {
            for (j, v) in row.iter().enumerate() {
                min[j] = min[j].min(*v);
                max[j] = max[j].max(*v);
            }
        }
        Self { min, max }
    }

    /// Constant features map to 0.
    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        Error::check_dim(self.min.len(), data.dim())?;
        let mut out = data.clone();
        let d = data.dim();
        for (k, v) in out.features.iter_mut().enumerate() {
            let j = k % d;
            let range = self.max[j] - self.min[j];
            *v = if range > 0.0 { (*v - self.min[j]) / range } else { 0.0 };
        }
        Ok(out)
    }
}
