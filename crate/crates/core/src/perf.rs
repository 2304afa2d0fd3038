// SPDX-License-Identifier: Apache-2.0

//! Cycle, throughput, energy, density and area accounting.
//!
//! Everything here is counting: each ledger entry is an event count times a
//! unit energy, and the total is the sum of the entries in a fixed order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::array::SubarrayConfig;
use crate::device::ClusterGeometry;
use crate::error::{Error, Result};
use crate::mapper::{
    capacity_report, layer_to_matrix, map_model, DuplicationPolicy, LayerSpec, ModelManifest, Placement, SlArrayConfig,
    StorageArch,
};
use crate::scalar::Scalar;

pub const PJ: f64 = 1e-12;
pub const FJ: f64 = 1e-15;

/// Bits credited to one stored trit.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TritBits {
    /// 5 trits stand in for an 8-bit weight.
    #[default]
    EightFifths,
    Log2Three,
}

impl TritBits {
    pub fn bits<T: Scalar>(self) -> T {
        match self {
            TritBits::EightFifths => T::lit(8.0 / 5.0),
            TritBits::Log2Three => T::lit(3f64.log2()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", default, deny_unknown_fields)]
pub struct EnergyParams<T> {
    /// Binary SRAM-CIM, per column per cycle.
    pub sram_cim_energy_pj: T,
    /// Ternary CIM, per compute bitline per cycle.
    pub tl_cim_energy_pj: T,
    /// Restoring one plane into a whole ternary array.
    pub tl_restore_energy_pj: T,
    /// Restoring one bit plane into a whole binary nvSRAM array. `None`
    /// scales the ternary figure by cell count and per-cell restore energy.
    pub sl_restore_energy_pj: Option<T>,
    pub tl_cell_restore_fj: T,
    pub sl_cell_restore_fj: T,
    pub encoder_energy_fj: T,
    pub adc_energy_pj: T,
    /// Per group of five column readouts.
    pub shift_add_energy_pj: T,
    pub buffer_energy_pj_per_bit: T,
    pub dram_read_pj_per_bit: T,
    pub reram_read_pj_per_bit: T,
    /// ReRAM crossbar CIM, per column per cycle. Not a published figure; the
    /// default is set so the ReRAM-CIM baseline lands near 2x of TL.
    pub reram_cim_energy_pj: T,
}

impl<T: Scalar> Default for EnergyParams<T> {
    fn default() -> Self {
        Self {
            sram_cim_energy_pj: T::lit(0.11),
            tl_cim_energy_pj: T::lit(0.096),
            tl_restore_energy_pj: T::lit(75.2),
            sl_restore_energy_pj: None,
            tl_cell_restore_fj: T::lit(8.57),
            sl_cell_restore_fj: T::lit(15.6),
            encoder_energy_fj: T::lit(13.1),
            adc_energy_pj: T::lit(0.188),
            shift_add_energy_pj: T::lit(0.336),
            buffer_energy_pj_per_bit: T::lit(0.042),
            dram_read_pj_per_bit: T::lit(4.2),
            reram_read_pj_per_bit: T::lit(1.63),
            reram_cim_energy_pj: T::lit(0.29),
        }
    }
}

impl<T: Scalar> EnergyParams<T> {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("sram_cim_energy_pj", self.sram_cim_energy_pj),
            ("tl_cim_energy_pj", self.tl_cim_energy_pj),
            ("tl_restore_energy_pj", self.tl_restore_energy_pj),
            ("sl_restore_energy_pj", self.sl_restore_energy_pj.unwrap_or(T::zero())),
            ("tl_cell_restore_fj", self.tl_cell_restore_fj),
            ("sl_cell_restore_fj", self.sl_cell_restore_fj),
            ("encoder_energy_fj", self.encoder_energy_fj),
            ("adc_energy_pj", self.adc_energy_pj),
            ("shift_add_energy_pj", self.shift_add_energy_pj),
            ("buffer_energy_pj_per_bit", self.buffer_energy_pj_per_bit),
            ("dram_read_pj_per_bit", self.dram_read_pj_per_bit),
            ("reram_read_pj_per_bit", self.reram_read_pj_per_bit),
            ("reram_cim_energy_pj", self.reram_cim_energy_pj),
        ];
        for (name, v) in fields {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::Validation(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.sl_restore_energy_pj.is_none() && !(self.tl_cell_restore_fj > T::zero()) {
            return Err(Error::Validation(
                "tl_cell_restore_fj must be > 0 to derive sl_restore_energy_pj".into(),
            ));
        }
        Ok(())
    }

    /// Binary nvSRAM plane restore, pJ.
    pub fn sl_restore_pj(&self, tl: &SubarrayConfig, sl: &SlArrayConfig) -> T {
        self.sl_restore_energy_pj.unwrap_or_else(|| {
            let tl_cells = T::from_usize_lossy(tl.rows * tl.cell_cols());
            let sl_cells = T::from_usize_lossy(sl.rows * sl.cols);
            self.tl_restore_energy_pj * (sl_cells * self.sl_cell_restore_fj) / (tl_cells * self.tl_cell_restore_fj)
        })
    }
}

/// Binary (bit-serial) CIM array used by all baselines.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BcArrayConfig {
    pub rows: usize,
    pub cols: usize,
    pub rows_active: usize,
    pub cols_per_adc: usize,
    pub input_bits: usize,
    pub weight_bits: usize,
}

impl Default for BcArrayConfig {
    fn default() -> Self {
        Self {
            rows: 256,
            cols: 256,
            rows_active: 32,
            cols_per_adc: 8,
            input_bits: 8,
            weight_bits: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", default, deny_unknown_fields)]
pub struct AreaParams<T> {
    pub tl_cell_area_um2: T,
    pub sl_cell_area_um2: T,
    pub sram_cell_area_um2: T,
    /// Periphery as a fraction of the cell-array area.
    pub tl_periphery_factor: T,
    pub sl_periphery_factor: T,
    pub trit_bits: TritBits,
}

impl<T: Scalar> Default for AreaParams<T> {
    fn default() -> Self {
        Self {
            tl_cell_area_um2: T::lit(6.35),
            sl_cell_area_um2: T::lit(2.33),
            sram_cell_area_um2: T::lit(0.75),
            tl_periphery_factor: T::zero(),
            sl_periphery_factor: T::zero(),
            trit_bits: TritBits::EightFifths,
        }
    }
}

impl<T: Scalar> AreaParams<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tl_cell_area_um2", self.tl_cell_area_um2),
            ("sl_cell_area_um2", self.sl_cell_area_um2),
            ("sram_cell_area_um2", self.sram_cell_area_um2),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Validation(format!("{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [
            ("tl_periphery_factor", self.tl_periphery_factor),
            ("sl_periphery_factor", self.sl_periphery_factor),
        ] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::Validation(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------- cycles

pub fn cb_count(rows_total: usize, rows_active: usize) -> usize {
    rows_total.div_ceil(rows_active)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Bit-serial binary: 8-bit inputs, one bit per cycle.
    Bc,
    /// Trit-serial ternary: 5-trit inputs.
    Tc,
    /// Binary with `b` input bits per cycle.
    BcMultibit(u32),
}

impl Scheme {
    pub fn input_units(self) -> usize {
        match self {
            Scheme::Bc => 8,
            Scheme::Tc => 5,
            Scheme::BcMultibit(b) => 8usize.div_ceil(b.max(1) as usize),
        }
    }

    /// SRAM columns per stored weight digit.
    pub fn cols_per_digit(self) -> usize {
        match self {
            Scheme::Tc => 2,
            _ => 1,
        }
    }

    /// SRAM columns per stored weight.
    pub fn cols_per_weight(self) -> usize {
        match self {
            Scheme::Tc => 10,
            _ => 8,
        }
    }
}

/// One CIM array for cycle counting.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayShape {
    pub scheme: Scheme,
    pub rows: usize,
    /// SRAM columns.
    pub cols: usize,
    pub rows_active: usize,
    /// SRAM columns behind one ADC.
    pub cols_per_adc: usize,
    /// Serialize the columns that share an ADC.
    pub mux: bool,
}

impl ArrayShape {
    pub fn bc_default() -> Self {
        Self {
            scheme: Scheme::Bc,
            rows: 256,
            cols: 256,
            rows_active: 32,
            cols_per_adc: 8,
            mux: true,
        }
    }

    pub fn tc_default() -> Self {
        Self {
            scheme: Scheme::Tc,
            rows: 256,
            cols: 320,
            rows_active: 16,
            cols_per_adc: 10,
            mux: true,
        }
    }

    pub fn col_groups(&self) -> usize {
        if self.mux {
            self.cols_per_adc / self.scheme.cols_per_digit()
        } else {
            1
        }
    }

    pub fn adc_count(&self) -> usize {
        self.cols / self.cols_per_adc
    }

    /// Weights (output channels) held side by side in one array.
    pub fn outputs(&self) -> usize {
        self.cols / self.scheme.cols_per_weight()
    }
}

/// Cycles for one full matrix-vector product on one array.
pub fn mvm_cycles(shape: &ArrayShape) -> usize {
    shape.scheme.input_units() * cb_count(shape.rows, shape.rows_active) * shape.col_groups()
}

/// Outputs per cycle of `a` relative to `b`.
pub fn peak_throughput_ratio(a: &ArrayShape, b: &ArrayShape) -> f64 {
    let rate = |s: &ArrayShape| s.outputs() as f64 / mvm_cycles(s) as f64;
    rate(a) / rate(b)
}

// ---------------------------------------------------------------- energy

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arch {
    #[serde(rename = "TL")]
    Tl,
    /// SRAM-CIM, weights streamed from off-chip DRAM.
    #[serde(rename = "baseline1")]
    Baseline1,
    /// SRAM-CIM, weights read from on-chip ReRAM storage.
    #[serde(rename = "baseline2")]
    Baseline2,
    /// ReRAM crossbar CIM.
    #[serde(rename = "baseline3")]
    Baseline3,
    /// Binary nvSRAM-CIM with single-level ReRAM.
    #[serde(rename = "baseline4")]
    Baseline4,
}

impl Arch {
    pub const ALL: [Arch; 5] = [
        Arch::Tl,
        Arch::Baseline1,
        Arch::Baseline2,
        Arch::Baseline3,
        Arch::Baseline4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Arch::Tl => "TL",
            Arch::Baseline1 => "baseline1",
            Arch::Baseline2 => "baseline2",
            Arch::Baseline3 => "baseline3",
            Arch::Baseline4 => "baseline4",
        }
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Arch::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::Parse(format!(
                    "unknown architecture '{s}' (expected TL, baseline1..baseline4)"
                ))
            })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Cim,
    Adc,
    Encoder,
    ShiftAdd,
    Buffer,
    Restore,
    OffChip,
    OnChipNvm,
}

impl Component {
    pub const ALL: [Component; 8] = [
        Component::Cim,
        Component::Adc,
        Component::Encoder,
        Component::ShiftAdd,
        Component::Buffer,
        Component::Restore,
        Component::OffChip,
        Component::OnChipNvm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::Cim => "cim",
            Component::Adc => "adc",
            Component::Encoder => "encoder",
            Component::ShiftAdd => "shift_add",
            Component::Buffer => "buffer",
            Component::Restore => "restore",
            Component::OffChip => "off_chip",
            Component::OnChipNvm => "on_chip_nvm",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LedgerEntry<T> {
    pub component: Component,
    pub count: u64,
    pub unit_j: T,
    pub energy_j: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EnergyLedger<T> {
    pub arch: Arch,
    pub workload: String,
    /// One entry per component, in `Component::ALL` order.
    pub entries: Vec<LedgerEntry<T>>,
    pub total_j: T,
    pub macs: u64,
    /// Two operations per MAC.
    pub ops: u64,
    /// ops per joule; zero for an empty workload.
    pub efficiency_ops_per_j: T,
    pub params: EnergyParams<T>,
}

impl<T: Scalar> EnergyLedger<T> {
    fn new(arch: Arch, workload: &str, counts: [u64; 8], units_j: [T; 8], macs: u64, params: &EnergyParams<T>) -> Self {
        let entries: Vec<_> = Component::ALL
            .iter()
            .zip(counts.iter().zip(units_j))
            .map(|(&component, (&count, unit_j))| LedgerEntry {
                component,
                count,
                unit_j,
                energy_j: <T as num_traits::NumCast>::from(count).unwrap() * unit_j,
            })
            .collect();
        let total_j = entries.iter().fold(T::zero(), |acc, e| acc + e.energy_j);
        let ops = 2 * macs;
        let efficiency_ops_per_j = if total_j > T::zero() {
            <T as num_traits::NumCast>::from(ops).unwrap() / total_j
        } else {
            T::zero()
        };
        Self {
            arch,
            workload: workload.to_string(),
            entries,
            total_j,
            macs,
            ops,
            efficiency_ops_per_j,
            params: params.clone(),
        }
    }

    pub fn get(&self, c: Component) -> &LedgerEntry<T> {
        &self.entries[Component::ALL.iter().position(|&x| x == c).unwrap()]
    }

    pub fn pj_per_mac(&self) -> f64 {
        if self.macs == 0 {
            0.0
        } else {
            self.total_j.to_f64_lossy() / PJ / self.macs as f64
        }
    }
}

/// A model together with its ternary placement and the array configs every
/// architecture is costed on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    pub name: String,
    pub layers: Vec<LayerSpec>,
    pub placement: Option<Placement>,
    pub tl: SubarrayConfig,
    pub bc: BcArrayConfig,
    pub sl: SlArrayConfig,
    /// Bits per activation moved through the buffer.
    pub activation_bits: usize,
}

impl Workload {
    /// Maps the model onto as many ternary subarrays as its capacity needs.
    pub fn map(
        manifest: &ModelManifest,
        tl: &SubarrayConfig,
        geometry: &ClusterGeometry,
        duplicate: Option<&DuplicationPolicy>,
    ) -> Result<Self> {
        let sl = SlArrayConfig::default();
        let cap = capacity_report(&manifest.layers, StorageArch::Tl, tl, geometry, &sl)?;
        let placement = if manifest.layers.is_empty() {
            None
        } else {
            Some(map_model(
                &manifest.layers,
                cap.subarrays_needed.max(1) as usize,
                duplicate,
                tl,
                geometry,
            )?)
        };
        Ok(Self {
            name: manifest.name.clone(),
            layers: manifest.layers.clone(),
            placement,
            tl: *tl,
            bc: BcArrayConfig::default(),
            sl,
            activation_bits: 8,
        })
    }

    pub fn macs(&self) -> u64 {
        self.layers.iter().map(LayerSpec::macs).sum()
    }

    /// Ternary cycles per inference: blocks of one layer in different
    /// subarrays run in parallel, blocks sharing a subarray run in turn, and
    /// the layer's products are split across its copies.
    pub fn tl_cycles(&self) -> Result<u64> {
        let Some(p) = &self.placement else {
            return if self.layers.is_empty() {
                Ok(0)
            } else {
                Err(Error::State("workload has not been mapped".into()))
            };
        };
        let per_block = (self.tl.input_trits * self.tl.cbls_per_adc) as u64;
        let mut total = 0u64;
        for (id, layer) in self.layers.iter().enumerate() {
            let mut per_sub = vec![0u64; p.n_subarrays];
            for b in p.blocks.iter().filter(|b| b.block.layer == id && b.block.replica == 0) {
                per_sub[b.subarray] += 1;
            }
            let serial = per_sub.into_iter().max().unwrap_or(0);
            total += layer.mvms.div_ceil(p.copies(id) as u64) * serial * per_block;
        }
        Ok(total)
    }
}

/// Energy of one inference of `workload` on `arch`.
pub fn estimate_energy<T: Scalar>(
    workload: &Workload,
    arch: Arch,
    params: &EnergyParams<T>,
) -> Result<EnergyLedger<T>> {
    params.validate()?;
    let pj = |v: T| v * T::lit(PJ);
    let fj = |v: T| v * T::lit(FJ);
    let mut counts = [0u64; 8];
    let idx = |c: Component| Component::ALL.iter().position(|&x| x == c).unwrap();
    let macs = workload.macs();
    let bc = &workload.bc;
    let tl = &workload.tl;

    if arch == Arch::Tl && workload.placement.is_none() && !workload.layers.is_empty() {
        return Err(Error::State("TL energy needs a mapped workload".into()));
    }

    for (id, layer) in workload.layers.iter().enumerate() {
        let dims = layer_to_matrix(layer);
        let mvms = layer.mvms;
        let m = layer.out_channels as u64;
        counts[idx(Component::Buffer)] += mvms * (dims.rows as u64 + m) * workload.activation_bits as u64;
        match arch {
            Arch::Tl => {
                let row_tiles = dims.rows.div_ceil(tl.rows_active) as u64;
                let cells = m * layer.q as u64;
                let readouts = mvms * tl.input_trits as u64 * row_tiles * cells;
                counts[idx(Component::Cim)] += readouts;
                counts[idx(Component::Adc)] += readouts;
                counts[idx(Component::ShiftAdd)] += mvms * tl.input_trits as u64 * row_tiles * cells.div_ceil(5);
                let col_tiles = dims.cols.div_ceil(tl.sram_cols) as u64;
                counts[idx(Component::Encoder)] += mvms * dims.rows as u64 * col_tiles;
                let p = workload.placement.as_ref().unwrap();
                let planes: u64 = (0..p.copies(id)).map(|r| p.layer_planes(id, r) as u64).sum();
                counts[idx(Component::Restore)] += planes;
            }
            _ => {
                let row_tiles = dims.rows.div_ceil(bc.rows_active) as u64;
                let cols = m * bc.weight_bits as u64;
                let readouts = mvms * bc.input_bits as u64 * row_tiles * cols;
                counts[idx(Component::Cim)] += readouts;
                counts[idx(Component::Adc)] += readouts;
                counts[idx(Component::ShiftAdd)] += mvms * bc.input_bits as u64 * row_tiles * cols.div_ceil(5);
                let bits = layer.params() * bc.weight_bits as u64;
                match arch {
                    Arch::Baseline1 => counts[idx(Component::OffChip)] += bits,
                    Arch::Baseline2 => counts[idx(Component::OnChipNvm)] += bits,
                    Arch::Baseline4 => {
                        let rows = bits.div_ceil(workload.sl.cols as u64);
                        counts[idx(Component::Restore)] += rows.div_ceil(workload.sl.rows as u64);
                    }
                    _ => {}
                }
            }
        }
    }

    let cim_unit = match arch {
        Arch::Tl => params.tl_cim_energy_pj,
        Arch::Baseline3 => params.reram_cim_energy_pj,
        _ => params.sram_cim_energy_pj,
    };
    let restore_unit = match arch {
        Arch::Tl => params.tl_restore_energy_pj,
        Arch::Baseline4 => params.sl_restore_pj(tl, &workload.sl),
        _ => T::zero(),
    };
    let units = [
        pj(cim_unit),
        pj(params.adc_energy_pj),
        fj(params.encoder_energy_fj),
        pj(params.shift_add_energy_pj),
        pj(params.buffer_energy_pj_per_bit),
        pj(restore_unit),
        pj(params.dram_read_pj_per_bit),
        pj(params.reram_read_pj_per_bit),
    ];
    Ok(EnergyLedger::new(arch, &workload.name, counts, units, macs, params))
}

// ---------------------------------------------------------------- density and area

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub cell: String,
    pub bits_per_cell: f64,
    pub cell_area_um2: f64,
    pub density_bits_per_um2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub rows: Vec<DensityRow>,
    /// Ternary over single-level density.
    pub tl_over_sl: f64,
}

pub fn density_report<T: Scalar>(
    area: &AreaParams<T>,
    geometry: &ClusterGeometry,
    sl: &SlArrayConfig,
) -> Result<DensityReport> {
    area.validate()?;
    geometry.validate()?;
    let tl_bits = geometry.planes() as f64 * area.trit_bits.bits::<f64>();
    let row = |cell: &str, bits: f64, a: T| DensityRow {
        cell: cell.into(),
        bits_per_cell: bits,
        cell_area_um2: a.to_f64_lossy(),
        density_bits_per_um2: bits / a.to_f64_lossy(),
    };
    let rows = vec![
        row("6T-SRAM", 1.0, area.sram_cell_area_um2),
        row("SL-nvSRAM", sl.bits_per_cell as f64, area.sl_cell_area_um2),
        row("TL-nvSRAM", tl_bits, area.tl_cell_area_um2),
    ];
    let tl_over_sl = rows[2].density_bits_per_um2 / rows[1].density_bits_per_um2;
    Ok(DensityReport { rows, tl_over_sl })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaComparison {
    pub tl_arrays: u64,
    pub sl_arrays: u64,
    pub tl_array_um2: f64,
    pub sl_array_um2: f64,
    pub tl_total_um2: f64,
    pub sl_total_um2: f64,
    /// 1 - TL area / SL area.
    pub saved_fraction: f64,
}

pub fn area_comparison<T: Scalar>(
    area: &AreaParams<T>,
    tl_arrays: u64,
    sl_arrays: u64,
    tl: &SubarrayConfig,
    sl: &SlArrayConfig,
) -> Result<AreaComparison> {
    area.validate()?;
    let tl_array = (tl.rows * tl.cell_cols()) as f64
        * area.tl_cell_area_um2.to_f64_lossy()
        * (1.0 + area.tl_periphery_factor.to_f64_lossy());
    let sl_array = (sl.rows * sl.cols) as f64
        * area.sl_cell_area_um2.to_f64_lossy()
        * (1.0 + area.sl_periphery_factor.to_f64_lossy());
    let tl_total = tl_arrays as f64 * tl_array;
    let sl_total = sl_arrays as f64 * sl_array;
    Ok(AreaComparison {
        tl_arrays,
        sl_arrays,
        tl_array_um2: tl_array,
        sl_array_um2: sl_array,
        tl_total_um2: tl_total,
        sl_total_um2: sl_total,
        saved_fraction: if sl_total > 0.0 { 1.0 - tl_total / sl_total } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cb_examples() {
        assert_eq!(cb_count(256, 32), 8);
        assert_eq!(cb_count(256, 16), 16);
        assert_eq!(cb_count(256, 11), 24);
    }

    #[test]
    fn cycle_examples() {
        assert_eq!(mvm_cycles(&ArrayShape::bc_default()), 512);
        assert_eq!(mvm_cycles(&ArrayShape::tc_default()), 400);
        let multibit = ArrayShape {
            scheme: Scheme::BcMultibit(2),
            rows_active: 11,
            ..ArrayShape::bc_default()
        };
        assert_eq!(mvm_cycles(&multibit), 768);
        let no_mux = ArrayShape {
            mux: false,
            ..ArrayShape::bc_default()
        };
        assert_eq!(mvm_cycles(&no_mux), 64);
    }

    #[test]
    fn throughput_examples() {
        let (tc, bc) = (ArrayShape::tc_default(), ArrayShape::bc_default());
        assert!((peak_throughput_ratio(&tc, &bc) - 1.28).abs() < 1e-12);
        assert_eq!(peak_throughput_ratio(&bc, &bc), 1.0);
        let narrow = ArrayShape { cols: 250, ..tc };
        assert_eq!(narrow.adc_count(), 25);
        assert!((peak_throughput_ratio(&narrow, &bc) - 1.0).abs() < 1e-12);
        let saved = 1.0 - narrow.adc_count() as f64 / bc.adc_count() as f64;
        assert!((saved - 0.21875).abs() < 1e-12);
    }

    #[test]
    fn cycles_monotone_in_rows_active() {
        for scheme in [Scheme::Bc, Scheme::Tc, Scheme::BcMultibit(2)] {
            let mut last = usize::MAX;
            for ra in 1..=256 {
                let c = mvm_cycles(&ArrayShape {
                    scheme,
                    rows_active: ra,
                    ..ArrayShape::bc_default()
                });
                assert!(c <= last);
                last = c;
            }
        }
    }

    #[test]
    fn derived_sl_restore() {
        let e = EnergyParams::<f64>::default();
        let v = e.sl_restore_pj(&SubarrayConfig::default(), &SlArrayConfig::default());
        let expect = 75.2 * (65_536.0 * 15.6) / (40_960.0 * 8.57);
        assert!((v - expect).abs() < 1e-9);
        let fixed = EnergyParams {
            sl_restore_energy_pj: Some(100.0),
            ..e
        };
        assert_eq!(
            fixed.sl_restore_pj(&SubarrayConfig::default(), &SlArrayConfig::default()),
            100.0
        );
    }

    fn single_layer() -> Workload {
        let m = ModelManifest {
            name: "one".into(),
            layers: vec![LayerSpec::dense(32, 64)],
        };
        Workload::map(&m, &SubarrayConfig::default(), &ClusterGeometry::default(), None).unwrap()
    }

    #[test]
    fn hand_counted_ledger() {
        // 32 rows -> 2 ternary row tiles, 64 outputs x 5 trits = 320 cells
        let w = single_layer();
        let l = estimate_energy(&w, Arch::Tl, &EnergyParams::<f64>::default()).unwrap();
        assert_eq!(l.get(Component::Cim).count, 5 * 2 * 320);
        assert_eq!(l.get(Component::ShiftAdd).count, 5 * 2 * 64);
        assert_eq!(l.get(Component::Encoder).count, 32 * 2);
        assert_eq!(l.get(Component::Buffer).count, (32 + 64) * 8);
        assert_eq!(l.get(Component::Restore).count, 1);
        assert_eq!(l.macs, 2048);
        // binary: 1 row tile of 32, 512 columns
        let b = estimate_energy(&w, Arch::Baseline1, &EnergyParams::<f64>::default()).unwrap();
        assert_eq!(b.get(Component::Cim).count, 8 * 512);
        assert_eq!(b.get(Component::OffChip).count, 2048 * 8);
        assert_eq!(b.get(Component::Restore).count, 0);
        let b4 = estimate_energy(&w, Arch::Baseline4, &EnergyParams::<f64>::default()).unwrap();
        assert_eq!(b4.get(Component::Restore).count, 1);
    }

    #[test]
    fn ledger_additivity_and_units() {
        let w = single_layer();
        for arch in Arch::ALL {
            let l = estimate_energy(&w, arch, &EnergyParams::<f32>::default()).unwrap();
            let mut sum = 0f32;
            for e in &l.entries {
                assert_eq!(e.energy_j, e.count as f32 * e.unit_j);
                sum += e.energy_j;
            }
            assert_eq!(sum, l.total_j);
        }
    }

    #[test]
    fn empty_workload_is_zero() {
        let w = Workload::map(
            &ModelManifest {
                name: "e".into(),
                layers: vec![],
            },
            &SubarrayConfig::default(),
            &ClusterGeometry::default(),
            None,
        )
        .unwrap();
        for arch in Arch::ALL {
            let l = estimate_energy(&w, arch, &EnergyParams::<f64>::default()).unwrap();
            assert_eq!(l.total_j, 0.0);
            assert!(l.entries.iter().all(|e| e.count == 0));
            assert_eq!(l.efficiency_ops_per_j, 0.0);
        }
        assert_eq!(w.tl_cycles().unwrap(), 0);
    }

    #[test]
    fn unmapped_tl_is_an_error() {
        let mut w = single_layer();
        w.placement = None;
        assert!(estimate_energy(&w, Arch::Tl, &EnergyParams::<f64>::default()).is_err());
        assert!(estimate_energy(&w, Arch::Baseline1, &EnergyParams::<f64>::default()).is_ok());
    }

    #[test]
    fn duplication_halves_layer_cycles() {
        // one layer filling 6 of 12 planes in one subarray, plus an idle one
        let geom = ClusterGeometry::new(12, 1).unwrap();
        let cfg = SubarrayConfig::default();
        let layer = LayerSpec {
            q: 1,
            ..LayerSpec::conv(1536, 1, 160, 64)
        };
        let blocks = crate::mapper::model_blocks(std::slice::from_ref(&layer), &cfg).unwrap();
        assert_eq!(blocks.len(), 96);
        let base = |dup: bool| {
            let mut per = vec![blocks.clone(), Vec::new()];
            let mut replicas = std::collections::BTreeMap::new();
            if dup {
                per[1] = blocks
                    .iter()
                    .map(|b| crate::mapper::Block { replica: 1, ..*b })
                    .collect();
                replicas.insert(0, 1);
            }
            let dist = crate::mapper::Distribution {
                per_subarray: per,
                replicas,
            };
            let placement = crate::mapper::place(&dist, &cfg, &geom).unwrap();
            Workload {
                name: "dup".into(),
                layers: vec![layer.clone()],
                placement: Some(placement),
                tl: cfg,
                bc: BcArrayConfig::default(),
                sl: SlArrayConfig::default(),
                activation_bits: 8,
            }
        };
        let single = base(false).tl_cycles().unwrap();
        let doubled = base(true).tl_cycles().unwrap();
        assert_eq!(single, 2 * doubled);
    }

    #[test]
    fn density_examples() {
        let d = density_report(
            &AreaParams::<f64>::default(),
            &ClusterGeometry::default(),
            &SlArrayConfig::default(),
        )
        .unwrap();
        assert_eq!(format!("{:.2}", d.rows[2].density_bits_per_um2), "60.47");
        assert_eq!(format!("{:.2}", d.rows[1].density_bits_per_um2), "7.73");
        assert_eq!(format!("{:.2}", d.rows[0].density_bits_per_um2), "1.33");
        assert_eq!(format!("{:.1}", d.tl_over_sl), "7.8");
        let log = AreaParams {
            trit_bits: TritBits::Log2Three,
            ..AreaParams::<f64>::default()
        };
        let d2 = density_report(&log, &ClusterGeometry::default(), &SlArrayConfig::default()).unwrap();
        let factor = d2.rows[2].density_bits_per_um2 / d.rows[2].density_bits_per_um2;
        assert!((factor - 3f64.log2() / 1.6).abs() < 1e-12);
        assert_eq!(d2.rows[1], d.rows[1]);
    }

    #[test]
    fn area_example() {
        let a = area_comparison(
            &AreaParams::<f64>::default(),
            6,
            76,
            &SubarrayConfig::default(),
            &SlArrayConfig::default(),
        )
        .unwrap();
        let expect = 1.0 - (6.0 * 40_960.0 * 6.35) / (76.0 * 65_536.0 * 2.33);
        assert!((a.saved_fraction - expect).abs() < 1e-12);
    }

    #[test]
    fn arch_parsing() {
        assert_eq!("TL".parse::<Arch>().unwrap(), Arch::Tl);
        assert_eq!("baseline3".parse::<Arch>().unwrap(), Arch::Baseline3);
        assert!("baseline5".parse::<Arch>().is_err());
    }
}
