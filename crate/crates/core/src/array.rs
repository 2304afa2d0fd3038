// SPDX-License-Identifier: Apache-2.0

//! Subarray state machine: store (program a ReRAM plane), restore (two
//! sequential bit decisions per cell into the SRAM pair), and compute
//! (discharge-count MAC on each compute bitline, ADC readout, trit-serial
//! matrix-vector product with ternary shift-and-add).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::device::{
    cluster_effective_resistance, sample_comparator_offset, sample_resistance, ClusterGeometry, DeviceParams,
    ModeSettings, ResistanceState, RestoreThresholds,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::trit::{bits_to_weight_trit, max_magnitude, to_balanced_ternary, Trit};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubarrayConfig {
    pub rows: usize,
    pub sram_cols: usize,
    pub rows_active: usize,
    pub adc_bits: u32,
    pub cbls_per_adc: usize,
    pub adc_ideal: bool,
    /// Trits per input operand after encoding.
    pub input_trits: usize,
}

impl Default for SubarrayConfig {
    fn default() -> Self {
        Self {
            rows: 256,
            sram_cols: 320,
            rows_active: 16,
            adc_bits: 5,
            cbls_per_adc: 5,
            adc_ideal: true,
            input_trits: 5,
        }
    }
}

impl SubarrayConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Validation(msg));
        if self.rows == 0 || self.sram_cols == 0 || self.rows_active == 0 || self.cbls_per_adc == 0 {
            return bad("subarray dimensions must be positive".into());
        }
        if !self.sram_cols.is_multiple_of(2) {
            return bad(format!("sram_cols must be even, got {}", self.sram_cols));
        }
        if self.rows_active > self.rows {
            return bad(format!("rows_active {} exceeds rows {}", self.rows_active, self.rows));
        }
        if !self.cell_cols().is_multiple_of(self.cbls_per_adc) {
            return bad(format!(
                "{} compute bitlines do not divide evenly into groups of {}",
                self.cell_cols(),
                self.cbls_per_adc
            ));
        }
        if self.adc_bits == 0 || self.adc_bits > 16 {
            return bad(format!("adc_bits must be in 1..=16, got {}", self.adc_bits));
        }
        if self.input_trits == 0 || self.input_trits > 20 {
            return bad(format!("input_trits must be in 1..=20, got {}", self.input_trits));
        }
        Ok(())
    }

    /// Ternary cells (SRAM pairs) per row, one compute bitline each.
    pub fn cell_cols(&self) -> usize {
        self.sram_cols / 2
    }

    pub fn adc_count(&self) -> usize {
        self.cell_cols() / self.cbls_per_adc
    }

    pub fn adc(&self) -> AdcModel {
        AdcModel {
            levels: 1u32 << self.adc_bits,
            saturate: !self.adc_ideal,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdcModel {
    pub levels: u32,
    pub saturate: bool,
}

impl AdcModel {
    pub fn ideal() -> Self {
        Self {
            levels: 32,
            saturate: false,
        }
    }

    /// Returns the code and whether the input was clipped.
    pub fn convert(&self, discharges: u32) -> (u32, bool) {
        if self.saturate && discharges > self.levels - 1 {
            (self.levels - 1, true)
        } else {
            (discharges, false)
        }
    }
}

/// Number of pull-down paths one cell activates on its compute bitline.
#[inline]
pub fn discharge_count(input: Trit, weight: Trit) -> u32 {
    (1 - input.value() * weight.value()) as u32
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct CblReadout {
    pub adc_code: u32,
    pub partial_mac: i64,
    pub saturated: bool,
}

/// One compute cycle on one bitline over the activated rows.
pub fn cbl_cycle(inputs: &[Trit], weights: &[Trit], adc: &AdcModel) -> Result<CblReadout> {
    if inputs.len() != weights.len() {
        return Err(Error::Shape(format!(
            "cbl_cycle got {} inputs and {} weights",
            inputs.len(),
            weights.len()
        )));
    }
    let d: u32 = inputs.iter().zip(weights).map(|(&i, &w)| discharge_count(i, w)).sum();
    let (adc_code, saturated) = adc.convert(d);
    Ok(CblReadout {
        adc_code,
        partial_mac: inputs.len() as i64 - adc_code as i64,
        saturated,
    })
}

/// Programmed ReRAM planes of one subarray and its SRAM contents.
#[derive(Clone, Debug, PartialEq)]
pub struct ArrayState {
    config: SubarrayConfig,
    geometry: ClusterGeometry,
    /// Indexed by `i * n_per_cluster + j`; each plane is row-major rows x cell_cols.
    planes: Vec<Option<Vec<Trit>>>,
    restored_plane: Option<Vec<Trit>>,
    restored_address: Option<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RestoreOutcome {
    /// True where the restored trit differs from the programmed one.
    pub error_mask: Vec<bool>,
    pub errors: usize,
}

impl ArrayState {
    pub fn new(config: SubarrayConfig, geometry: ClusterGeometry) -> Result<Self> {
        config.validate()?;
        geometry.validate()?;
        Ok(Self {
            config,
            geometry,
            planes: vec![None; geometry.planes()],
            restored_plane: None,
            restored_address: None,
        })
    }

    pub fn config(&self) -> &SubarrayConfig {
        &self.config
    }

    pub fn geometry(&self) -> &ClusterGeometry {
        &self.geometry
    }

    fn plane_len(&self) -> usize {
        self.config.rows * self.config.cell_cols()
    }

    fn plane_index(&self, i: usize, j: usize) -> Result<usize> {
        if i >= self.geometry.m_clusters || j >= self.geometry.n_per_cluster {
            return Err(Error::Validation(format!(
                "plane ({i}, {j}) outside {} clusters x {} source lines",
                self.geometry.m_clusters, self.geometry.n_per_cluster
            )));
        }
        Ok(i * self.geometry.n_per_cluster + j)
    }

    /// Store mode: reset every device of plane (i, j) then set it from `trits`
    /// (row-major, rows x cell_cols). Other planes are untouched.
    pub fn program_plane(&mut self, i: usize, j: usize, trits: &[Trit]) -> Result<()> {
        let idx = self.plane_index(i, j)?;
        if trits.len() != self.plane_len() {
            return Err(Error::Shape(format!(
                "plane needs {} x {} = {} trits, got {}",
                self.config.rows,
                self.config.cell_cols(),
                self.plane_len(),
                trits.len()
            )));
        }
        let plane = self.planes[idx].get_or_insert_with(Vec::new);
        plane.clear();
        plane.resize(trits.len(), Trit::Neg);
        plane.copy_from_slice(trits);
        Ok(())
    }

    pub fn programmed_plane(&self, i: usize, j: usize) -> Result<&[Trit]> {
        let idx = self.plane_index(i, j)?;
        self.planes[idx]
            .as_deref()
            .ok_or_else(|| Error::State(format!("plane ({i}, {j}) has not been programmed")))
    }

    pub fn programmed_planes(&self) -> impl Iterator<Item = ((usize, usize), &[Trit])> {
        let n = self.geometry.n_per_cluster;
        self.planes
            .iter()
            .enumerate()
            .filter_map(move |(idx, p)| p.as_deref().map(|p| ((idx / n, idx % n), p)))
    }

    pub fn restored_plane(&self) -> Option<&[Trit]> {
        self.restored_plane.as_deref()
    }

    pub fn restored_address(&self) -> Option<(usize, usize)> {
        self.restored_address
    }

    /// Restore mode for plane (i, j). With `variation_on` each device
    /// resistance and each comparator reference are sampled from `rng`.
    pub fn restore_plane<T: Scalar, R: Rng + ?Sized>(
        &mut self,
        i: usize,
        j: usize,
        params: &DeviceParams<T>,
        thresholds: &RestoreThresholds<T>,
        rng: &mut R,
        variation_on: bool,
    ) -> Result<RestoreOutcome> {
        let idx = self.plane_index(i, j)?;
        let geometry = self.geometry;
        let programmed = self.planes[idx]
            .as_ref()
            .ok_or_else(|| Error::State(format!("plane ({i}, {j}) has not been programmed")))?;
        let mut restored = self.restored_plane.take().unwrap_or_default();
        restored.clear();
        let mut error_mask = Vec::with_capacity(programmed.len());
        let mut errors = 0;
        for &t in programmed {
            let r = restore_cell(t, params, &geometry, thresholds, rng, variation_on)?;
            let wrong = r != t;
            errors += wrong as usize;
            error_mask.push(wrong);
            restored.push(r);
        }
        self.restored_plane = Some(restored);
        self.restored_address = Some((i, j));
        Ok(RestoreOutcome { error_mask, errors })
    }

    /// Loads SRAM contents directly, bypassing the ReRAM path.
    pub fn load_sram(&mut self, trits: Vec<Trit>, address: Option<(usize, usize)>) -> Result<()> {
        if trits.len() != self.plane_len() {
            return Err(Error::Shape(format!(
                "SRAM image needs {} trits, got {}",
                self.plane_len(),
                trits.len()
            )));
        }
        self.restored_plane = Some(trits);
        self.restored_address = address;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ArrayDump::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let dump: ArrayDump = serde_json::from_str(s)?;
        let mut state = ArrayState::new(dump.config, dump.geometry)?;
        for p in dump.planes {
            let trits = p.trits.into_iter().map(Trit::from_i8).collect::<Result<Vec<_>>>()?;
            state.program_plane(p.i, p.j, &trits)?;
        }
        Ok(state)
    }
}

/// Serialized array: config block plus one signed byte per programmed trit.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArrayDump {
    config: SubarrayConfig,
    geometry: ClusterGeometry,
    trit_layout: String,
    planes: Vec<PlaneDump>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlaneDump {
    i: usize,
    j: usize,
    trits: Vec<i8>,
}

impl From<&ArrayState> for ArrayDump {
    fn from(s: &ArrayState) -> Self {
        Self {
            config: s.config,
            geometry: s.geometry,
            trit_layout: "row-major rows x cell_cols, one signed byte per trit".into(),
            planes: s
                .programmed_planes()
                .map(|((i, j), p)| PlaneDump {
                    i,
                    j,
                    trits: p.iter().map(|t| t.value()).collect(),
                })
                .collect(),
        }
    }
}

/// Restores one cell. The left bit compares against t1; the right bit
/// against t2 when the left bit is 1, otherwise against t3 through the same
/// reference offset as the left decision, so `(0, 1)` cannot be produced.
pub fn restore_cell<T: Scalar, R: Rng + ?Sized>(
    programmed: Trit,
    params: &DeviceParams<T>,
    geometry: &ClusterGeometry,
    thresholds: &RestoreThresholds<T>,
    rng: &mut R,
    variation_on: bool,
) -> Result<Trit> {
    let state = ResistanceState::from(programmed);
    let (r, off1, off2) = if variation_on {
        let r = sample_resistance(state, params, rng);
        let off1 = sample_comparator_offset(params, rng);
        let off2 = sample_comparator_offset(params, rng);
        (r, off1, off2)
    } else {
        (params.nominal(state), T::one(), T::one())
    };
    let r_eff = cluster_effective_resistance(r, geometry, params);
    let q1 = r_eff > thresholds.t1_ohms * off1;
    let q2 = if q1 {
        r_eff > thresholds.t2_ohms * off2
    } else {
        r_eff > thresholds.t3_ohms.max(thresholds.t1_ohms) * off1
    };
    bits_to_weight_trit(q1, q2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakReport {
    pub unselected_branches: usize,
    /// Bias across an unselected selector during restore.
    pub unselected_bias_volts: f64,
    pub selectors_stay_insulating: bool,
    /// Static current if the full V_DDL appeared across every unselected branch.
    pub leak_bound_amps: f64,
}

pub fn static_leak_report<T: Scalar>(
    params: &DeviceParams<T>,
    geom: &ClusterGeometry,
    mode: &ModeSettings<T>,
) -> LeakReport {
    let branches = geom.n_per_cluster * geom.m_clusters - 1;
    // Unselected source lines and the shared cluster node both sit at V_DDL.
    let v_sl_unselected = mode.v_ddl;
    let v_node = mode.v_ddl;
    let bias = (v_sl_unselected - v_node).abs();
    let v = mode.v_ddl;
    let bound = if branches == 0 {
        T::zero()
    } else {
        T::from_usize_lossy(branches) * v / params.sel_insulating_ohms
            + T::from_usize_lossy(geom.m_clusters - 1) * v / params.off_leak_ohms
    };
    LeakReport {
        unselected_branches: branches,
        unselected_bias_volts: bias.to_f64_lossy(),
        selectors_stay_insulating: bias < params.v_imt_volts,
        leak_bound_amps: bound.to_f64_lossy(),
    }
}

/// Where a weight block sits in a plane and how its cells map back to
/// weight columns of the layer matrix.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSlice {
    pub plane: (usize, usize),
    pub row_offset: usize,
    pub rows: usize,
    pub cell_offset: usize,
    pub cells: usize,
    /// Index of the block's first cell in the layer's cell columns.
    pub layer_cell_offset: usize,
    pub trits_per_weight: usize,
}

impl BlockSlice {
    pub fn first_output(&self) -> usize {
        self.layer_cell_offset / self.trits_per_weight
    }

    pub fn output_count(&self) -> usize {
        (self.layer_cell_offset + self.cells - 1) / self.trits_per_weight - self.first_output() + 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MvmResult {
    /// Index of `outputs[0]` among the layer's weight columns.
    pub first_output: usize,
    pub outputs: Vec<i64>,
    pub cycles: u64,
    pub adc_conversions: u64,
    pub saturations: u64,
}

/// Trit-serial matrix-vector product over a restored block. `inputs` holds one
/// signed 8-bit activation per block row; each is truncated to the input trit
/// width. With an ideal ADC the result equals the integer product of the
/// truncated operands.
pub fn mvm(array: &ArrayState, inputs: &[i8], slice: &BlockSlice, adc: &AdcModel) -> Result<MvmResult> {
    let cfg = array.config();
    let sram = array
        .restored_plane()
        .ok_or_else(|| Error::State("mvm requires a restored plane".into()))?;
    if let Some(addr) = array.restored_address() {
        if addr != slice.plane {
            return Err(Error::State(format!(
                "plane {:?} requested but plane {:?} is restored",
                slice.plane, addr
            )));
        }
    }
    if inputs.len() != slice.rows {
        return Err(Error::Shape(format!(
            "block has {} rows, got {} inputs",
            slice.rows,
            inputs.len()
        )));
    }
    if slice.rows == 0 || slice.cells == 0 || slice.trits_per_weight == 0 {
        return Err(Error::Shape("empty block".into()));
    }
    if slice.row_offset + slice.rows > cfg.rows || slice.cell_offset + slice.cells > cfg.cell_cols() {
        return Err(Error::Shape(format!("block {slice:?} exceeds the subarray")));
    }

    let width = cfg.input_trits;
    let max = max_magnitude(width);
    let input_words = inputs
        .iter()
        .map(|&v| to_balanced_ternary((v as i64).clamp(-max, max), width))
        .collect::<Result<Vec<_>>>()?;

    let cell_cols = cfg.cell_cols();
    let q = slice.trits_per_weight;
    let first_output = slice.first_output();
    let mut outputs = vec![0i64; slice.output_count()];
    let trit_weights: Vec<i64> = (0..width.max(q)).map(|k| 3i64.pow(k as u32)).collect();

    let mut x = Vec::with_capacity(cfg.rows_active);
    let mut w = Vec::with_capacity(cfg.rows_active);
    let mut row_groups = 0u64;
    let mut conversions = 0u64;
    let mut saturations = 0u64;
    for a in 0..width {
        for g0 in (0..slice.rows).step_by(cfg.rows_active) {
            let g1 = (g0 + cfg.rows_active).min(slice.rows);
            if a == 0 {
                row_groups += 1;
            }
            x.clear();
            x.extend(input_words[g0..g1].iter().map(|word| word.trit(a)));
            for c in 0..slice.cells {
                let col = slice.cell_offset + c;
                w.clear();
                w.extend((g0..g1).map(|r| sram[(slice.row_offset + r) * cell_cols + col]));
                let readout = cbl_cycle(&x, &w, adc)?;
                conversions += 1;
                saturations += readout.saturated as u64;
                let layer_cell = slice.layer_cell_offset + c;
                let b = layer_cell % q;
                outputs[layer_cell / q - first_output] += trit_weights[a] * trit_weights[b] * readout.partial_mac;
            }
        }
    }
    // ADCs run in parallel; each walks the bitlines of its group serially.
    let mux_steps = (slice.cell_offset..slice.cell_offset + slice.cells)
        .fold(std::collections::BTreeMap::<usize, u64>::new(), |mut acc, col| {
            *acc.entry(col / cfg.cbls_per_adc).or_default() += 1;
            acc
        })
        .into_values()
        .max()
        .unwrap_or(0);
    Ok(MvmResult {
        first_output,
        outputs,
        cycles: width as u64 * row_groups * mux_steps,
        adc_conversions: conversions,
        saturations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MacCheckReport {
    pub instances: usize,
    pub rows: usize,
    pub outputs_per_instance: usize,
    pub mismatched_outputs: u64,
    pub max_abs_error: i64,
    pub saturations: u64,
    pub seed: u64,
}

impl MacCheckReport {
    pub fn passed(&self) -> bool {
        self.mismatched_outputs == 0
    }
}

/// Runs `instances` random full-array products (random 8-bit weights and
/// inputs, truncated to trits) through [`mvm`] and compares each output with
/// the integer product of the truncated operands.
pub fn mac_oracle_check(config: &SubarrayConfig, instances: usize, seed: u64) -> Result<MacCheckReport> {
    use rand::SeedableRng;
    use rayon::prelude::*;

    config.validate()?;
    let q = crate::trit::DEFAULT_WIDTH;
    let outputs = config.cell_cols() / q;
    if outputs == 0 {
        return Err(Error::Shape("array too narrow for one weight".into()));
    }
    let adc = config.adc();
    let geometry = ClusterGeometry::new(1, 1)?;
    let per_instance = (0..instances)
        .into_par_iter()
        .map(|k| -> Result<(u64, i64, u64)> {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let weights: Vec<i8> = (0..config.rows * outputs).map(|_| rng.random()).collect();
            let inputs: Vec<i8> = (0..config.rows).map(|_| rng.random()).collect();
            let words: Vec<_> = weights.iter().map(|&w| crate::trit::truncate_to_trits(w, q)).collect();
            let mut plane = vec![Trit::Zero; config.rows * config.cell_cols()];
            for r in 0..config.rows {
                for o in 0..outputs {
                    for b in 0..q {
                        plane[r * config.cell_cols() + o * q + b] = words[r * outputs + o].trit(b);
                    }
                }
            }
            let mut state = ArrayState::new(*config, geometry)?;
            state.load_sram(plane, Some((0, 0)))?;
            let slice = BlockSlice {
                plane: (0, 0),
                row_offset: 0,
                rows: config.rows,
                cell_offset: 0,
                cells: outputs * q,
                layer_cell_offset: 0,
                trits_per_weight: q,
            };
            let got = mvm(&state, &inputs, &slice, &adc)?;
            let max = max_magnitude(config.input_trits);
            let (mut bad, mut worst) = (0u64, 0i64);
            for o in 0..outputs {
                let want: i64 = (0..config.rows)
                    .map(|r| words[r * outputs + o].value() * (inputs[r] as i64).clamp(-max, max))
                    .sum();
                let err = (got.outputs[o] - want).abs();
                bad += (err != 0) as u64;
                worst = worst.max(err);
            }
            Ok((bad, worst, got.saturations))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MacCheckReport {
        instances,
        rows: config.rows,
        outputs_per_instance: outputs,
        mismatched_outputs: per_instance.iter().map(|x| x.0).sum(),
        max_abs_error: per_instance.iter().map(|x| x.1).max().unwrap_or(0),
        saturations: per_instance.iter().map(|x| x.2).sum(),
        seed,
    })
}
