// SPDX-License-Identifier: Apache-2.0

//! Monte-Carlo restore yield across cluster size, cluster count and device
//! spread.
//!
//! Every trial owns a ChaCha stream selected by its index, so a fixed seed
//! gives identical reports at any thread count.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{ArrayState, SubarrayConfig};
use crate::device::{restore_thresholds, ClusterGeometry, DeviceParams, ResistanceState, RestoreThresholds};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::trit::Trit;

const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct YieldSettings {
    pub trials: usize,
    /// Cells programmed per trial for LRS, MRS, HRS.
    pub state_mix: [usize; 3],
    pub t1_mult: f64,
    pub t2_mult: f64,
}

impl Default for YieldSettings {
    fn default() -> Self {
        Self {
            trials: 1000,
            state_mix: [1, 1, 1],
            t1_mult: 1.0,
            t2_mult: 1.0,
        }
    }
}

impl YieldSettings {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Validation("yield trials must be >= 1".into()));
        }
        if self.state_mix.iter().sum::<usize>() == 0 {
            return Err(Error::Validation("yield state_mix programs no cells".into()));
        }
        if !(self.t1_mult > 0.0 && self.t2_mult > 0.0) {
            return Err(Error::Validation("threshold multipliers must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateYield {
    pub lrs: f64,
    pub mrs: f64,
    pub hrs: f64,
}

impl StateYield {
    pub fn get(&self, s: ResistanceState) -> f64 {
        match s {
            ResistanceState::Lrs => self.lrs,
            ResistanceState::Mrs => self.mrs,
            ResistanceState::Hrs => self.hrs,
        }
    }
}

/// P(restored state | programmed state); rows and columns ordered LRS, MRS, HRS.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix(pub [[f64; 3]; 3]);

impl ConfusionMatrix {
    pub fn identity() -> Self {
        ConfusionMatrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn validate(&self) -> Result<()> {
        for (r, row) in self.0.iter().enumerate() {
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::Validation(format!(
                    "confusion row {r} has a probability outside [0, 1]"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-6 {
                return Err(Error::Validation(format!("confusion row {r} sums to {s}")));
            }
        }
        Ok(())
    }

    pub fn row(&self, programmed: Trit) -> [f64; 3] {
        self.0[ResistanceState::from(programmed).index()]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YieldReport {
    pub n: usize,
    pub m: usize,
    pub sigma_rel: f64,
    pub trials: usize,
    pub per_state_yield: StateYield,
    pub overall_yield: f64,
    pub wilson_ci95: (f64, f64),
    /// Correctly restored cells and total cells across all trials.
    pub correct: u64,
    pub cells: u64,
    pub confusion: ConfusionMatrix,
    pub failure_reason: Option<String>,
}

/// 95 % Wilson score interval for `k` successes in `n` draws.
pub fn wilson_ci95(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k as f64 == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// One-sided two-proportion z statistic for H1: yield(b) > yield(a).
pub fn increase_z(a: &YieldReport, b: &YieldReport) -> f64 {
    let (pa, pb) = (a.overall_yield, b.overall_yield);
    let (na, nb) = (a.cells as f64, b.cells as f64);
    let pooled = (a.correct + b.correct) as f64 / (na + nb);
    let se = (pooled * (1.0 - pooled) * (1.0 / na + 1.0 / nb)).sqrt();
    if se == 0.0 {
        return 0.0;
    }
    (pb - pa) / se
}

/// Whether `b` shows a yield increase over `a` that is significant at 95 %.
pub fn significantly_higher(a: &YieldReport, b: &YieldReport) -> bool {
    increase_z(a, b) > 1.644_853_626_951_472
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn yield_plane(settings: &YieldSettings) -> Vec<Trit> {
    let [l, m, h] = settings.state_mix;
    std::iter::repeat_n(Trit::Pos, l)
        .chain(std::iter::repeat_n(Trit::Zero, m))
        .chain(std::iter::repeat_n(Trit::Neg, h))
        .collect()
}

fn failed_report<T: Scalar>(
    geom: &ClusterGeometry,
    params: &DeviceParams<T>,
    settings: &YieldSettings,
    err: &Error,
) -> YieldReport {
    YieldReport {
        n: geom.n_per_cluster,
        m: geom.m_clusters,
        sigma_rel: params.gap_sigma_rel.to_f64_lossy(),
        trials: settings.trials,
        per_state_yield: StateYield {
            lrs: 0.0,
            mrs: 0.0,
            hrs: 0.0,
        },
        overall_yield: 0.0,
        wilson_ci95: (0.0, 0.0),
        correct: 0,
        cells: 0,
        confusion: ConfusionMatrix([[0.0; 3]; 3]),
        failure_reason: Some(err.to_string()),
    }
}

/// Restore yield of a plane holding the configured state mix, over
/// `settings.trials` independent restores with variation on. A collapsed
/// sensing margin yields a zero report carrying the reason.
pub fn restore_yield<T: Scalar>(
    geom: &ClusterGeometry,
    params: &DeviceParams<T>,
    settings: &YieldSettings,
    seed: u64,
) -> Result<YieldReport> {
    geom.validate()?;
    params.validate()?;
    settings.validate()?;
    let thresholds = match restore_thresholds(params, geom)
        .and_then(|t| t.biased(T::lit(settings.t1_mult), T::lit(settings.t2_mult)))
    {
        Ok(t) => t,
        Err(e @ Error::MarginCollapse { .. }) => return Ok(failed_report(geom, params, settings, &e)),
        Err(e) => return Err(e),
    };
    let plane = yield_plane(settings);
    let counts = confusion_counts(geom, params, &thresholds, &plane, settings.trials, seed)?;

    let mut per_state = [0.0; 3];
    let mut confusion = [[0.0; 3]; 3];
    let (mut correct, mut cells) = (0u64, 0u64);
    for s in 0..3 {
        let total: u64 = counts[s].iter().sum();
        correct += counts[s][s];
        cells += total;
        if total > 0 {
            per_state[s] = counts[s][s] as f64 / total as f64;
            for r in 0..3 {
                confusion[s][r] = counts[s][r] as f64 / total as f64;
            }
        } else {
            per_state[s] = 1.0;
            confusion[s][s] = 1.0;
        }
    }
    Ok(YieldReport {
        n: geom.n_per_cluster,
        m: geom.m_clusters,
        sigma_rel: params.gap_sigma_rel.to_f64_lossy(),
        trials: settings.trials,
        per_state_yield: StateYield {
            lrs: per_state[0],
            mrs: per_state[1],
            hrs: per_state[2],
        },
        overall_yield: correct as f64 / cells as f64,
        wilson_ci95: wilson_ci95(correct, cells),
        correct,
        cells,
        confusion: ConfusionMatrix(confusion),
        failure_reason: None,
    })
}

fn confusion_counts<T: Scalar>(
    geom: &ClusterGeometry,
    params: &DeviceParams<T>,
    thresholds: &RestoreThresholds<T>,
    plane: &[Trit],
    trials: usize,
    seed: u64,
) -> Result<[[u64; 3]; 3]> {
    let config = SubarrayConfig {
        rows: 1,
        sram_cols: 2 * plane.len(),
        rows_active: 1,
        cbls_per_adc: 1,
        ..SubarrayConfig::default()
    };
    let mut template = ArrayState::new(config, *geom)?;
    template.program_plane(0, 0, plane)?;

    let per_trial = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            let mut array = template.clone();
            array.restore_plane(0, 0, params, thresholds, &mut rng, true)?;
            let restored = array.restored_plane().expect("plane was just restored");
            let mut c = [[0u64; 3]; 3];
            for (&p, &r) in plane.iter().zip(restored) {
                c[ResistanceState::from(p).index()][ResistanceState::from(r).index()] += 1;
            }
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut total = [[0u64; 3]; 3];
    for c in per_trial {
        for s in 0..3 {
            for r in 0..3 {
                total[s][r] += c[s][r];
            }
        }
    }
    Ok(total)
}

pub fn error_confusion_matrix<T: Scalar>(
    geom: &ClusterGeometry,
    params: &DeviceParams<T>,
    settings: &YieldSettings,
    seed: u64,
) -> Result<ConfusionMatrix> {
    let report = restore_yield(geom, params, settings, seed)?;
    if let Some(reason) = report.failure_reason {
        return Err(Error::Validation(format!("no confusion matrix: {reason}")));
    }
    Ok(report.confusion)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    N,
    M,
    Sigma,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" => Ok(SweepAxis::N),
            "m" => Ok(SweepAxis::M),
            "sigma" => Ok(SweepAxis::Sigma),
            _ => Err(Error::Parse(format!(
                "unknown sweep axis {s:?} (expected n, m or sigma)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YieldSweep {
    pub axis: SweepAxis,
    pub points: Vec<(f64, YieldReport)>,
    /// Kendall tau-b of overall yield against the axis value.
    pub kendall_tau: f64,
}

impl YieldSweep {
    pub const CSV_HEADER: &'static str =
        "axis_value,n,m,sigma_rel,trials,yield_lrs,yield_mrs,yield_hrs,overall,ci_lo,ci_hi,failure_reason";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (v, r) in &self.points {
            let reason = r.failure_reason.as_deref().unwrap_or("").replace([',', '\n'], ";");
            let _ = writeln!(
                out,
                "{},{},{},{:.4},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
                v,
                r.n,
                r.m,
                r.sigma_rel,
                r.trials,
                r.per_state_yield.lrs,
                r.per_state_yield.mrs,
                r.per_state_yield.hrs,
                r.overall_yield,
                r.wilson_ci95.0,
                r.wilson_ci95.1,
                reason
            );
        }
        out
    }
}

/// Sweeps one axis with everything else fixed. All points share `seed`, so
/// neighbouring points see common random numbers.
pub fn yield_sweep<T: Scalar>(
    axis: SweepAxis,
    values: &[f64],
    geom: &ClusterGeometry,
    params: &DeviceParams<T>,
    settings: &YieldSettings,
    seed: u64,
) -> Result<YieldSweep> {
    if values.is_empty() {
        return Err(Error::Validation("yield sweep needs at least one value".into()));
    }
    let mut points = Vec::with_capacity(values.len());
    for &v in values {
        let mut g = *geom;
        let mut p = params.clone();
        match axis {
            SweepAxis::N | SweepAxis::M => {
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(Error::Validation(format!(
                        "{axis:?} sweep value {v} is not a positive integer"
                    )));
                }
                if axis == SweepAxis::N {
                    g.n_per_cluster = v as usize;
                } else {
                    g.m_clusters = v as usize;
                }
            }
            SweepAxis::Sigma => p.gap_sigma_rel = T::lit(v),
        }
        points.push((v, restore_yield(&g, &p, settings, seed)?));
    }
    let xs: Vec<f64> = points.iter().map(|(v, _)| *v).collect();
    let ys: Vec<f64> = points.iter().map(|(_, r)| r.overall_yield).collect();
    Ok(YieldSweep {
        axis,
        kendall_tau: kendall_tau_b(&xs, &ys),
        points,
    })
}

/// Kendall tau-b; 0 when either variable is constant.
pub fn kendall_tau_b(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len());
    let (mut concordant, mut discordant, mut tie_x, mut tie_y) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = xs[i].partial_cmp(&xs[j]).map_or(0, |o| o as i8);
            let dy = ys[i].partial_cmp(&ys[j]).map_or(0, |o| o as i8);
            match (dx == 0, dy == 0) {
                (true, true) => {}
                (true, false) => tie_x += 1,
                (false, true) => tie_y += 1,
                (false, false) => {
                    if dx == dy {
                        concordant += 1
                    } else {
                        discordant += 1
                    }
                }
            }
        }
    }
    let n0 = concordant + discordant;
    let denom = (((n0 + tie_x) * (n0 + tie_y)) as f64).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        (concordant - discordant) as f64 / denom
    }
}
