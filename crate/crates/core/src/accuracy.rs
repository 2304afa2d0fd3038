// SPDX-License-Identifier: Apache-2.0

//! Quantized inference with injected weight-trit errors.
//!
//! Weights are 8-bit integers truncated to 5 trits; activations are 8-bit
//! integers requantized per layer with a static scale. Two engines compute
//! the same integer network: a plain reference and one that runs every
//! product through mapped, restored subarrays. Results are reported without
//! any retraining.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{mvm, ArrayState, SubarrayConfig};
use crate::device::{restore_thresholds, ClusterGeometry, DeviceParams, ResistanceState};
use crate::error::{Error, Result};
use crate::mapper::{capacity_report, map_model, LayerSpec, Placement, SlArrayConfig, StorageArch};
use crate::trit::{max_magnitude, truncate_to_trits, Trit, TritWord, DEFAULT_WIDTH};
use crate::yield_mc::ConfusionMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantLayer {
    pub name: String,
    pub in_features: usize,
    pub out_features: usize,
    /// Row-major `[out][in]`.
    pub weights: Vec<TritWord>,
    pub weight_scale: f64,
    /// Accumulator to next-layer activation scale; `None` on the output layer.
    pub requant: Option<f64>,
    pub relu: bool,
}

impl QuantLayer {
    pub fn weight(&self, out: usize, inp: usize) -> &TritWord {
        &self.weights[out * self.in_features + inp]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantModel {
    pub name: String,
    pub input_scale: f64,
    pub layers: Vec<QuantLayer>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerManifest {
    name: String,
    in_features: usize,
    out_features: usize,
    weights: PathBuf,
    weight_scale: f64,
    requant: Option<f64>,
    relu: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    name: String,
    input_scale: f64,
    layers: Vec<LayerManifest>,
}

impl QuantModel {
    /// Reads `model.json` and the signed-byte weight files it names.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join("model.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let file: ModelFile = serde_json::from_str(&text)?;
        let mut layers = Vec::with_capacity(file.layers.len());
        for l in file.layers {
            let wpath = dir.join(&l.weights);
            let bytes = std::fs::read(&wpath).map_err(|e| Error::io(&wpath, e))?;
            if bytes.len() != l.in_features * l.out_features {
                return Err(Error::Shape(format!(
                    "{}: expected {}x{} weights, file has {}",
                    l.name,
                    l.out_features,
                    l.in_features,
                    bytes.len()
                )));
            }
            layers.push(QuantLayer {
                name: l.name,
                in_features: l.in_features,
                out_features: l.out_features,
                weights: bytes
                    .iter()
                    .map(|&b| truncate_to_trits(b as i8, DEFAULT_WIDTH))
                    .collect(),
                weight_scale: l.weight_scale,
                requant: l.requant,
                relu: l.relu,
            });
        }
        let model = QuantModel {
            name: file.name,
            input_scale: file.input_scale,
            layers,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Validation("model has no layers".into()));
        }
        if !(self.input_scale > 0.0) {
            return Err(Error::Validation("input_scale must be > 0".into()));
        }
        for (k, l) in self.layers.iter().enumerate() {
            if !(l.weight_scale > 0.0) || l.requant.is_some_and(|r| !(r > 0.0)) {
                return Err(Error::Validation(format!("{}: scales must be > 0", l.name)));
            }
            if l.weights.len() != l.in_features * l.out_features {
                return Err(Error::Shape(format!("{}: weight count mismatch", l.name)));
            }
            if let Some(next) = self.layers.get(k + 1) {
                if next.in_features != l.out_features {
                    return Err(Error::Shape(format!(
                        "{} -> {}: shapes do not chain",
                        l.name, next.name
                    )));
                }
                if l.requant.is_none() {
                    return Err(Error::Validation(format!(
                        "{}: hidden layer needs a requant scale",
                        l.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn layer_specs(&self) -> Vec<LayerSpec> {
        self.layers
            .iter()
            .map(|l| LayerSpec {
                q: l.weights[0].width(),
                ..LayerSpec::dense(l.in_features, l.out_features)
            })
            .collect()
    }

    pub fn weight_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len()).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Vec<Vec<i8>>,
    pub labels: Vec<usize>,
}

impl Dataset {
    /// CSV with integer feature columns followed by a `label` column.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
        let label_col = headers
            .iter()
            .position(|h| h == "label")
            .ok_or_else(|| Error::Parse(format!("{}: no label column", path.display())))?;
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let bad = |f: &str| Error::Parse(format!("{}: row {}: bad value '{f}'", path.display(), line + 1));
            let mut x = Vec::with_capacity(rec.len() - 1);
            for (k, f) in rec.iter().enumerate() {
                if k == label_col {
                    labels.push(f.trim().parse::<usize>().map_err(|_| bad(f))?);
                } else {
                    x.push(f.trim().parse::<i8>().map_err(|_| bad(f))?);
                }
            }
            features.push(x);
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorSource {
    /// Each trit is replaced, with probability `p`, by one of the two other
    /// values chosen uniformly.
    FlatRate(f64),
    /// Each trit is resampled from the row of its programmed state.
    Confusion(ConfusionMatrix),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    pub source: ErrorSource,
    pub seed: u64,
}

impl ErrorModel {
    pub fn none() -> Self {
        Self {
            source: ErrorSource::FlatRate(0.0),
            seed: 0,
        }
    }

    pub fn flat(p: f64, seed: u64) -> Self {
        Self {
            source: ErrorSource::FlatRate(p),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.source {
            ErrorSource::FlatRate(p) if !(0.0..=1.0).contains(p) => {
                Err(Error::Validation(format!("error rate must be in [0, 1], got {p}")))
            }
            ErrorSource::FlatRate(_) => Ok(()),
            ErrorSource::Confusion(m) => m.validate(),
        }
    }

    /// Expected fraction of corrupted trits, for a uniform trit mix.
    pub fn nominal_rate(&self) -> f64 {
        match &self.source {
            ErrorSource::FlatRate(p) => *p,
            ErrorSource::Confusion(m) => (0..3).map(|k| 1.0 - m.0[k][k]).sum::<f64>() / 3.0,
        }
    }
}

const STATE_TRITS: [Trit; 3] = [Trit::Pos, Trit::Zero, Trit::Neg];

fn corrupt<R: Rng>(t: Trit, source: &ErrorSource, rng: &mut R) -> Trit {
    match source {
        ErrorSource::FlatRate(p) => {
            if *p > 0.0 && rng.random_bool(*p) {
                let others: Vec<Trit> = STATE_TRITS.into_iter().filter(|&o| o != t).collect();
                others[rng.random_range(0..2)]
            } else {
                t
            }
        }
        ErrorSource::Confusion(m) => {
            let row = m.row(t);
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (k, p) in row.iter().enumerate() {
                acc += p;
                if u < acc {
                    return ResistanceState::ALL[k].into();
                }
            }
            // rounding slack in the cumulative sum
            let last = row
                .iter()
                .rposition(|&p| p > 0.0)
                .unwrap_or(ResistanceState::from(t).index());
            ResistanceState::ALL[last].into()
        }
    }
}

/// Corrupts a weight tensor. `stream` separates tensors under one seed.
pub fn inject_trit_errors(weights: &[TritWord], model: &ErrorModel, stream: u64) -> Result<(Vec<TritWord>, u64)> {
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    rng.set_stream(stream);
    let mut flips = 0u64;
    let out = weights
        .iter()
        .map(|w| {
            let trits: Vec<Trit> = w
                .trits()
                .iter()
                .map(|&t| {
                    let c = corrupt(t, &model.source, &mut rng);
                    flips += (c != t) as u64;
                    c
                })
                .collect();
            TritWord::from_trits(trits)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((out, flips))
}

/// Corrupts every layer of a model, one stream per layer.
pub fn corrupt_model(model: &QuantModel, error: &ErrorModel) -> Result<(QuantModel, u64)> {
    let mut out = model.clone();
    let mut flips = 0;
    for (k, layer) in out.layers.iter_mut().enumerate() {
        let (w, f) = inject_trit_errors(&layer.weights, error, k as u64)?;
        layer.weights = w;
        flips += f;
    }
    Ok((out, flips))
}

fn requantize(acc: i64, scale: f64, relu: bool) -> i8 {
    let lo = if relu { 0.0 } else { -128.0 };
    (acc as f64 * scale).round().clamp(lo, 127.0) as i8
}

fn argmax(v: &[i64]) -> usize {
    // first maximum wins
    v.iter()
        .enumerate()
        .fold(0, |best, (k, &x)| if x > v[best] { k } else { best })
}

/// Integer forward pass; returns the output-layer accumulators.
pub fn reference_forward(model: &QuantModel, x: &[i8]) -> Result<Vec<i64>> {
    let mut act: Vec<i8> = x.to_vec();
    for (k, l) in model.layers.iter().enumerate() {
        if act.len() != l.in_features {
            return Err(Error::Shape(format!(
                "{}: expected {} inputs, got {}",
                l.name,
                l.in_features,
                act.len()
            )));
        }
        let max = max_magnitude(DEFAULT_WIDTH);
        let xin: Vec<i64> = act.iter().map(|&v| (v as i64).clamp(-max, max)).collect();
        let acc: Vec<i64> = (0..l.out_features)
            .map(|o| (0..l.in_features).map(|i| l.weight(o, i).value() * xin[i]).sum())
            .collect();
        if k + 1 == model.layers.len() {
            return Ok(acc);
        }
        let scale = l.requant.expect("validated");
        act = acc.iter().map(|&a| requantize(a, scale, l.relu)).collect();
    }
    unreachable!("model has at least one layer")
}

/// A model programmed into subarrays: one restored array per used plane.
pub struct ProgrammedModel {
    placement: Placement,
    planes: BTreeMap<(usize, usize, usize), ArrayState>,
}

impl ProgrammedModel {
    /// Programs every placed block and restores each used plane nominally.
    pub fn program(model: &QuantModel, placement: &Placement) -> Result<Self> {
        let cfg = placement.config;
        let geom = placement.geometry;
        let specs = model.layer_specs();
        let cell_cols = cfg.cell_cols();
        let mut images: BTreeMap<(usize, usize, usize), Vec<Trit>> = BTreeMap::new();
        for pb in &placement.blocks {
            let layer = model
                .layers
                .get(pb.block.layer)
                .ok_or_else(|| Error::Shape(format!("placement names layer {} not in the model", pb.block.layer)))?;
            let q = specs[pb.block.layer].q;
            if pb.block.row0 + pb.block.rows > layer.in_features
                || (pb.block.col0 + pb.block.cols) / 2 > layer.out_features * q
            {
                return Err(Error::Shape(format!("placement does not match layer {}", layer.name)));
            }
            let img = images
                .entry((pb.subarray, pb.cluster, pb.source_line))
                .or_insert_with(|| vec![Trit::Zero; cfg.rows * cell_cols]);
            for r in 0..pb.block.rows {
                for c in 0..pb.block.cols / 2 {
                    let layer_cell = pb.block.col0 / 2 + c;
                    let t = layer.weight(layer_cell / q, pb.block.row0 + r).trit(layer_cell % q);
                    img[(pb.row_offset + r) * cell_cols + pb.col_offset / 2 + c] = t;
                }
            }
        }
        let params = DeviceParams::<f64>::default();
        let thresholds = restore_thresholds(&params, &geom)?;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut planes = BTreeMap::new();
        for ((s, i, j), img) in images {
            let mut state = ArrayState::new(cfg, geom)?;
            state.program_plane(i, j, &img)?;
            let outcome = state.restore_plane(i, j, &params, &thresholds, &mut rng, false)?;
            if outcome.errors != 0 {
                return Err(Error::State("nominal restore produced errors".into()));
            }
            planes.insert((s, i, j), state);
        }
        Ok(Self {
            placement: placement.clone(),
            planes,
        })
    }

    pub fn forward(&self, model: &QuantModel, x: &[i8]) -> Result<Vec<i64>> {
        let adc = self.placement.config.adc();
        let specs = model.layer_specs();
        let mut act: Vec<i8> = x.to_vec();
        for (k, l) in model.layers.iter().enumerate() {
            if act.len() != l.in_features {
                return Err(Error::Shape(format!(
                    "{}: expected {} inputs, got {}",
                    l.name,
                    l.in_features,
                    act.len()
                )));
            }
            let mut acc = vec![0i64; l.out_features];
            for pb in self
                .placement
                .blocks
                .iter()
                .filter(|b| b.block.layer == k && b.block.replica == 0)
            {
                let state = &self.planes[&(pb.subarray, pb.cluster, pb.source_line)];
                let slice = pb.slice(specs[k].q);
                let res = mvm(state, &act[pb.block.row0..pb.block.row0 + pb.block.rows], &slice, &adc)?;
                for (o, v) in res.outputs.iter().enumerate() {
                    acc[res.first_output + o] += v;
                }
            }
            if k + 1 == model.layers.len() {
                return Ok(acc);
            }
            act = acc
                .iter()
                .map(|&a| requantize(a, l.requant.expect("validated"), l.relu))
                .collect();
        }
        unreachable!("model has at least one layer")
    }
}

/// Maps a model onto as many subarrays as its weights need.
pub fn map_quant_model(model: &QuantModel, config: &SubarrayConfig, geometry: &ClusterGeometry) -> Result<Placement> {
    let specs = model.layer_specs();
    let cap = capacity_report(&specs, StorageArch::Tl, config, geometry, &SlArrayConfig::default())?;
    map_model(&specs, cap.subarrays_needed.max(1) as usize, None, config, geometry)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Engine {
    ReferenceInt,
    SimulatedArray(Placement),
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::ReferenceInt => "reference_int",
            Engine::SimulatedArray(_) => "simulated_array",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub engine: String,
    pub samples: usize,
    /// Mean over seeds.
    pub accuracy: f64,
    pub per_seed_accuracies: Vec<f64>,
    pub seeds: Vec<u64>,
    pub error_rate: f64,
    /// Corrupted trits, summed over seeds.
    pub trit_flips: u64,
    pub weight_trits: u64,
    pub quantization: String,
    pub retraining: bool,
}

/// Predicted class of every sample.
pub fn predict(model: &QuantModel, dataset: &Dataset, engine: &Engine) -> Result<Vec<usize>> {
    let programmed = match engine {
        Engine::ReferenceInt => None,
        Engine::SimulatedArray(p) => Some(ProgrammedModel::program(model, p)?),
    };
    dataset
        .features
        .par_iter()
        .map(|x| {
            let logits = match &programmed {
                None => reference_forward(model, x)?,
                Some(pm) => pm.forward(model, x)?,
            };
            Ok(argmax(&logits))
        })
        .collect()
}

/// Accuracy of `model` after corruption under each seed of `seeds`.
pub fn evaluate_seeds(
    model: &QuantModel,
    dataset: &Dataset,
    source: &ErrorSource,
    seeds: &[u64],
    engine: &Engine,
) -> Result<EvalReport> {
    if dataset.is_empty() || seeds.is_empty() {
        return Err(Error::Validation(
            "evaluation needs samples and at least one seed".into(),
        ));
    }
    let mut per_seed = Vec::with_capacity(seeds.len());
    let mut flips = 0;
    let mut error_rate = 0.0;
    for &seed in seeds {
        let error = ErrorModel {
            source: source.clone(),
            seed,
        };
        error_rate = error.nominal_rate();
        let (corrupted, f) = corrupt_model(model, &error)?;
        flips += f;
        let preds = predict(&corrupted, dataset, engine)?;
        let correct = preds.iter().zip(&dataset.labels).filter(|(p, l)| p == l).count();
        per_seed.push(correct as f64 / dataset.len() as f64);
    }
    Ok(EvalReport {
        engine: engine.name().into(),
        samples: dataset.len(),
        accuracy: per_seed.iter().sum::<f64>() / per_seed.len() as f64,
        per_seed_accuracies: per_seed,
        seeds: seeds.to_vec(),
        error_rate,
        trit_flips: flips,
        weight_trits: (model.weight_count() * DEFAULT_WIDTH) as u64,
        quantization: "per-tensor".into(),
        retraining: false,
    })
}

pub fn evaluate(model: &QuantModel, dataset: &Dataset, error: &ErrorModel, engine: &Engine) -> Result<EvalReport> {
    evaluate_seeds(model, dataset, &error.source, &[error.seed], engine)
}

/// One-sided Welch test that the mean of `later` exceeds the mean of
/// `earlier` at 95 % confidence (normal critical value).
pub fn significant_increase(earlier: &[f64], later: &[f64]) -> bool {
    let stats = |v: &[f64]| {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = if v.len() > 1 {
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        (m, var / n)
    };
    let (ma, va) = stats(earlier);
    let (mb, vb) = stats(later);
    let se = (va + vb).sqrt();
    if se == 0.0 {
        return mb > ma;
    }
    (mb - ma) / se > 1.6449
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trit::to_balanced_ternary;

    fn words(n: usize) -> Vec<TritWord> {
        (0..n)
            .map(|k| to_balanced_ternary((k as i64 % 243) - 121, 5).unwrap())
            .collect()
    }

    #[test]
    fn zero_rate_is_identity() {
        let w = words(500);
        let (out, flips) = inject_trit_errors(&w, &ErrorModel::flat(0.0, 3), 0).unwrap();
        assert_eq!((out, flips), (w.clone(), 0));
        let id = ErrorModel {
            source: ErrorSource::Confusion(ConfusionMatrix::identity()),
            seed: 9,
        };
        let (out, flips) = inject_trit_errors(&w, &id, 0).unwrap();
        assert_eq!((out, flips), (w, 0));
    }

    #[test]
    fn full_rate_flips_every_trit() {
        let w = words(400);
        let (out, flips) = inject_trit_errors(&w, &ErrorModel::flat(1.0, 5), 0).unwrap();
        assert_eq!(flips, 2000);
        for (a, b) in w.iter().zip(&out) {
            assert!(a.trits().iter().zip(b.trits()).all(|(x, y)| x != y));
        }
        // both alternatives occur
        let to_pos = w
            .iter()
            .zip(&out)
            .flat_map(|(a, b)| {
                a.trits()
                    .iter()
                    .zip(b.trits())
                    .filter(|(x, _)| **x == Trit::Zero)
                    .map(|(_, y)| *y)
            })
            .filter(|&y| y == Trit::Pos)
            .count();
        assert!(to_pos > 0);
    }

    #[test]
    fn injection_is_deterministic() {
        let w = words(300);
        let e = ErrorModel::flat(0.2, 77);
        assert_eq!(
            inject_trit_errors(&w, &e, 1).unwrap(),
            inject_trit_errors(&w, &e, 1).unwrap()
        );
        assert_ne!(
            inject_trit_errors(&w, &e, 1).unwrap().0,
            inject_trit_errors(&w, &e, 2).unwrap().0
        );
    }

    #[test]
    fn confusion_resampling_follows_rows() {
        // every programmed state goes to HRS
        let m = ConfusionMatrix([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]]);
        let w = words(50);
        let (out, flips) = inject_trit_errors(
            &w,
            &ErrorModel {
                source: ErrorSource::Confusion(m),
                seed: 1,
            },
            0,
        )
        .unwrap();
        assert!(out.iter().all(|x| x.trits().iter().all(|&t| t == Trit::Neg)));
        let negs: u64 = w
            .iter()
            .map(|x| x.trits().iter().filter(|&&t| t == Trit::Neg).count() as u64)
            .sum();
        assert_eq!(flips, 250 - negs);
    }

    #[test]
    fn invalid_error_models() {
        assert!(ErrorModel::flat(1.5, 0).validate().is_err());
        let bad = ConfusionMatrix([[0.5, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(ErrorModel {
            source: ErrorSource::Confusion(bad),
            seed: 0
        }
        .validate()
        .is_err());
    }

    fn tiny_model() -> QuantModel {
        let w1: Vec<i8> = (0..6 * 20).map(|k| ((k * 37) % 243) as i8).collect();
        let w2: Vec<i8> = (0..3 * 6).map(|k| ((k * 53) % 200) as i8).collect();
        QuantModel {
            name: "tiny".into(),
            input_scale: 0.05,
            layers: vec![
                QuantLayer {
                    name: "a".into(),
                    in_features: 20,
                    out_features: 6,
                    weights: w1.iter().map(|&v| truncate_to_trits(v, 5)).collect(),
                    weight_scale: 0.01,
                    requant: Some(0.003),
                    relu: true,
                },
                QuantLayer {
                    name: "b".into(),
                    in_features: 6,
                    out_features: 3,
                    weights: w2.iter().map(|&v| truncate_to_trits(v, 5)).collect(),
                    weight_scale: 0.01,
                    requant: None,
                    relu: false,
                },
            ],
        }
    }

    #[test]
    fn engines_agree_on_logits() {
        let model = tiny_model();
        let placement = map_quant_model(&model, &SubarrayConfig::default(), &ClusterGeometry::default()).unwrap();
        let pm = ProgrammedModel::program(&model, &placement).unwrap();
        for s in 0..40i32 {
            let x: Vec<i8> = (0..20).map(|k| ((s * 31 + k * 17) % 256 - 128) as i8).collect();
            assert_eq!(pm.forward(&model, &x).unwrap(), reference_forward(&model, &x).unwrap());
        }
    }

    #[test]
    fn reference_by_hand() {
        let l = |w: Vec<i8>, i, o, rq| QuantLayer {
            name: "x".into(),
            in_features: i,
            out_features: o,
            weights: w.into_iter().map(|v| truncate_to_trits(v, 5)).collect(),
            weight_scale: 1.0,
            requant: rq,
            relu: true,
        };
        let model = QuantModel {
            name: "hand".into(),
            input_scale: 1.0,
            layers: vec![l(vec![1, 2, -1, 3], 2, 2, Some(0.5)), l(vec![1, 0, 0, 1], 2, 2, None)],
        };
        // x = (127 -> 121, 10): acc = (141, -91) -> h = (71, 0) -> logits = (71, 0)
        assert_eq!(reference_forward(&model, &[127, 10]).unwrap(), vec![71, 0]);
        assert!(reference_forward(&model, &[1]).is_err());
    }

    #[test]
    fn welch_direction() {
        assert!(significant_increase(&[0.5; 10], &[0.6; 10]));
        assert!(!significant_increase(&[0.6; 10], &[0.5; 10]));
        let a = [0.80, 0.82, 0.81, 0.79, 0.80];
        let b = [0.81, 0.80, 0.82, 0.80, 0.79];
        assert!(!significant_increase(&a, &b));
    }
}
