// SPDX-License-Identifier: Apache-2.0

//! Compact weight mapping.
//!
//! A layer becomes a `(C*k*k) x (M*q*2)` matrix of SRAM columns, is tiled into
//! `R x C_sub` blocks (R = rows activated per cycle, C_sub = SRAM columns per
//! subarray), dealt round-robin over subarrays and packed into planes.
//!
//! Inside a subarray a plane is split into row bands of height R. A band is
//! filled left to right; once a block is down, the remaining columns are
//! offered to the widest pending block of the same layer copy that fits
//! (ties by block index). A layer copy never shares a band with another.
//! Plane order is source line `j` fastest, then cluster `i`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::array::{BlockSlice, SubarrayConfig};
use crate::device::ClusterGeometry;
use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Conv,
    Dense,
}

fn default_q() -> usize {
    5
}

fn default_one() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub kind: LayerKind,
    #[serde(rename = "C")]
    pub in_channels: usize,
    #[serde(default = "default_one_usize")]
    pub k: usize,
    #[serde(rename = "M")]
    pub out_channels: usize,
    /// Trits per weight.
    #[serde(default = "default_q")]
    pub q: usize,
    /// Matrix-vector products per inference (output positions of a conv).
    #[serde(default = "default_one")]
    pub mvms: u64,
    /// Parameters outside the weight matrix (bias, normalization), held by
    /// the digital periphery but counted toward storage.
    #[serde(default)]
    pub extra_params: u64,
}

fn default_one_usize() -> usize {
    1
}

impl LayerSpec {
    pub fn dense(in_features: usize, out_features: usize) -> Self {
        Self {
            kind: LayerKind::Dense,
            in_channels: in_features,
            k: 1,
            out_channels: out_features,
            q: 5,
            mvms: 1,
            extra_params: 0,
        }
    }

    pub fn conv(in_channels: usize, k: usize, out_channels: usize, mvms: u64) -> Self {
        Self {
            kind: LayerKind::Conv,
            in_channels,
            k,
            out_channels,
            q: 5,
            mvms,
            extra_params: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.k == 0 || self.out_channels == 0 || self.q == 0 || self.mvms == 0 {
            return Err(Error::Validation(format!(
                "layer dimensions must be positive: {self:?}"
            )));
        }
        if self.kind == LayerKind::Dense && self.k != 1 {
            return Err(Error::Validation("dense layers have k = 1".into()));
        }
        Ok(())
    }

    /// Weights in the matrix (excluding `extra_params`).
    pub fn weights(&self) -> u64 {
        (self.in_channels * self.k * self.k * self.out_channels) as u64
    }

    pub fn params(&self) -> u64 {
        self.weights() + self.extra_params
    }

    pub fn macs(&self) -> u64 {
        self.weights() * self.mvms
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelManifest {
    pub name: String,
    pub layers: Vec<LayerSpec>,
}

impl ModelManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: ModelManifest = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.layers.iter().try_for_each(LayerSpec::validate)
    }

    pub fn total_params(&self) -> u64 {
        self.layers.iter().map(LayerSpec::params).sum()
    }

    pub fn total_macs(&self) -> u64 {
        self.layers.iter().map(LayerSpec::macs).sum()
    }
}

/// Layer matrix size: rows = C*k*k, cols = SRAM columns M*q*2.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixDims {
    pub rows: usize,
    pub cols: usize,
}

pub fn layer_to_matrix(layer: &LayerSpec) -> MatrixDims {
    MatrixDims {
        rows: layer.in_channels * layer.k * layer.k,
        cols: layer.out_channels * layer.q * 2,
    }
}

/// A tile of one layer matrix; column bounds are in SRAM columns.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Block {
    pub layer: usize,
    /// Replica number; 0 is the primary copy.
    pub replica: usize,
    /// Row-major index within the layer.
    pub index: usize,
    pub row0: usize,
    pub rows: usize,
    pub col0: usize,
    pub cols: usize,
}

/// Row-major tiling of a layer matrix into blocks of at most `r x c`.
pub fn split_blocks(layer: usize, dims: MatrixDims, r: usize, c: usize) -> Result<Vec<Block>> {
    if r == 0 || c == 0 || dims.rows == 0 || dims.cols == 0 {
        return Err(Error::Validation("split_blocks needs positive dimensions".into()));
    }
    let mut blocks = Vec::new();
    for row0 in (0..dims.rows).step_by(r) {
        for col0 in (0..dims.cols).step_by(c) {
            blocks.push(Block {
                layer,
                replica: 0,
                index: blocks.len(),
                row0,
                rows: r.min(dims.rows - row0),
                col0,
                cols: c.min(dims.cols - col0),
            });
        }
    }
    Ok(blocks)
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DuplicationPolicy {
    /// A subarray whose band occupancy is below this fraction takes replicas.
    pub idle_threshold: f64,
    pub max_replicas_per_layer: usize,
}

impl Default for DuplicationPolicy {
    fn default() -> Self {
        Self {
            idle_threshold: 0.5,
            max_replicas_per_layer: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub per_subarray: Vec<Vec<Block>>,
    /// Extra whole-layer copies by layer id.
    pub replicas: BTreeMap<usize, usize>,
}

/// Bands a run of blocks from one layer copy occupies under the packing rule.
fn pack_bands(blocks: &[Block], band_cols: usize) -> Vec<Vec<(Block, usize)>> {
    let mut pending: Vec<Block> = blocks.to_vec();
    let mut bands = Vec::new();
    while !pending.is_empty() {
        let first = pending.remove(0);
        let mut band = vec![(first, 0usize)];
        let mut col = first.cols;
        loop {
            let leftover = band_cols - col;
            let pick = pending
                .iter()
                .enumerate()
                .filter(|(_, b)| b.cols <= leftover)
                .max_by(|(_, a), (_, b)| a.cols.cmp(&b.cols).then(b.index.cmp(&a.index)))
                .map(|(k, _)| k);
            match pick {
                Some(k) => {
                    let b = pending.remove(k);
                    band.push((b, col));
                    col += b.cols;
                }
                None => break,
            }
        }
        bands.push(band);
    }
    bands
}

fn group_runs(blocks: &[Block]) -> Vec<&[Block]> {
    let mut runs = Vec::new();
    let mut start = 0;
    for k in 1..=blocks.len() {
        if k == blocks.len() || (blocks[k].layer, blocks[k].replica) != (blocks[start].layer, blocks[start].replica) {
            if k > start {
                runs.push(&blocks[start..k]);
            }
            start = k;
        }
    }
    runs
}

fn bands_needed(blocks: &[Block], band_cols: usize) -> usize {
    group_runs(blocks)
        .into_iter()
        .map(|run| pack_bands(run, band_cols).len())
        .sum()
}

/// Deals blocks round-robin (by position in `blocks`) over the subarrays.
/// With a duplication policy, subarrays left below the idle threshold receive
/// whole-layer replicas, busiest layers first.
pub fn distribute(
    blocks: &[Block],
    n_subarrays: usize,
    duplicate: Option<&DuplicationPolicy>,
    layers: &[LayerSpec],
    config: &SubarrayConfig,
    geometry: &ClusterGeometry,
) -> Result<Distribution> {
    if n_subarrays == 0 {
        return Err(Error::Validation("distribute needs at least one subarray".into()));
    }
    let mut per_subarray = vec![Vec::new(); n_subarrays];
    for (k, b) in blocks.iter().enumerate() {
        per_subarray[k % n_subarrays].push(*b);
    }
    let mut replicas = BTreeMap::new();
    let Some(policy) = duplicate else {
        return Ok(Distribution { per_subarray, replicas });
    };

    let capacity = bands_per_subarray(config, geometry);
    let band_cols = config.sram_cols;
    let mut by_layer: BTreeMap<usize, Vec<Block>> = BTreeMap::new();
    for b in blocks.iter().filter(|b| b.replica == 0) {
        by_layer.entry(b.layer).or_default().push(*b);
    }
    for sub in per_subarray.iter_mut() {
        loop {
            let used = bands_needed(sub, band_cols);
            if used as f64 >= policy.idle_threshold * capacity as f64 {
                break;
            }
            // busiest layer per copy that still fits
            let choice = by_layer
                .iter()
                .filter(|(l, _)| replicas.get(*l).copied().unwrap_or(0) < policy.max_replicas_per_layer)
                .filter(|(_, bs)| used + bands_needed(bs, band_cols) <= capacity)
                .max_by(|(la, ba), (lb, bb)| {
                    let load = |l: usize, n: usize| {
                        let mvms = layers.get(l).map_or(1, |s| s.mvms);
                        mvms as f64 * n as f64 / (1 + replicas.get(&l).copied().unwrap_or(0)) as f64
                    };
                    load(**la, ba.len())
                        .partial_cmp(&load(**lb, bb.len()))
                        .unwrap()
                        .then(lb.cmp(la))
                })
                .map(|(l, bs)| (*l, bs.clone()));
            let Some((layer, bs)) = choice else { break };
            let copy = replicas.entry(layer).or_insert(0);
            *copy += 1;
            let replica = *copy;
            sub.extend(bs.into_iter().map(|b| Block { replica, ..b }));
        }
    }
    Ok(Distribution { per_subarray, replicas })
}

pub fn bands_per_plane(config: &SubarrayConfig) -> usize {
    config.rows / config.rows_active
}

pub fn bands_per_subarray(config: &SubarrayConfig, geometry: &ClusterGeometry) -> usize {
    bands_per_plane(config) * geometry.planes()
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedBlock {
    pub block: Block,
    pub subarray: usize,
    pub cluster: usize,
    pub source_line: usize,
    pub row_offset: usize,
    /// SRAM column of the block's left edge.
    pub col_offset: usize,
}

impl PlacedBlock {
    pub fn plane(&self) -> (usize, usize) {
        (self.cluster, self.source_line)
    }

    pub fn slice(&self, trits_per_weight: usize) -> BlockSlice {
        BlockSlice {
            plane: self.plane(),
            row_offset: self.row_offset,
            rows: self.block.rows,
            cell_offset: self.col_offset / 2,
            cells: self.block.cols / 2,
            layer_cell_offset: self.block.col0 / 2,
            trits_per_weight,
        }
    }

    /// Layer-matrix coordinate held at a subarray (row, SRAM column), if any.
    pub fn unmap(&self, row: usize, col: usize) -> Option<(usize, usize)> {
        let r = row.checked_sub(self.row_offset)?;
        let c = col.checked_sub(self.col_offset)?;
        (r < self.block.rows && c < self.block.cols).then(|| (self.block.row0 + r, self.block.col0 + c))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub n_subarrays: usize,
    pub config: SubarrayConfig,
    pub geometry: ClusterGeometry,
    pub blocks: Vec<PlacedBlock>,
    pub replicas: BTreeMap<usize, usize>,
    /// Bands used per subarray.
    pub bands_used: Vec<usize>,
}

impl Placement {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Distinct (subarray, cluster, source line) planes that hold weights.
    pub fn planes_used(&self) -> Vec<(usize, usize, usize)> {
        let mut planes: Vec<_> = self
            .blocks
            .iter()
            .map(|b| (b.subarray, b.cluster, b.source_line))
            .collect();
        planes.sort_unstable();
        planes.dedup();
        planes
    }

    /// Planes touched by one layer copy.
    pub fn layer_planes(&self, layer: usize, replica: usize) -> usize {
        let mut planes: Vec<_> = self
            .blocks
            .iter()
            .filter(|b| b.block.layer == layer && b.block.replica == replica)
            .map(|b| (b.subarray, b.cluster, b.source_line))
            .collect();
        planes.sort_unstable();
        planes.dedup();
        planes.len()
    }

    pub fn copies(&self, layer: usize) -> usize {
        1 + self.replicas.get(&layer).copied().unwrap_or(0)
    }

    /// Row-major occupancy of one plane (rows x SRAM columns).
    pub fn occupancy_bitmap(&self, subarray: usize, cluster: usize, source_line: usize) -> Result<Vec<bool>> {
        let cols = self.config.sram_cols;
        let mut bits = vec![false; self.config.rows * cols];
        for b in self
            .blocks
            .iter()
            .filter(|b| (b.subarray, b.cluster, b.source_line) == (subarray, cluster, source_line))
        {
            for r in b.row_offset..b.row_offset + b.block.rows {
                for c in b.col_offset..b.col_offset + b.block.cols {
                    let slot = &mut bits[r * cols + c];
                    if *slot {
                        return Err(Error::State(format!("slot ({r}, {c}) assigned twice")));
                    }
                    *slot = true;
                }
            }
        }
        Ok(bits)
    }
}

/// Packs each subarray's blocks into bands and planes.
pub fn place(distribution: &Distribution, config: &SubarrayConfig, geometry: &ClusterGeometry) -> Result<Placement> {
    config.validate()?;
    geometry.validate()?;
    let per_plane = bands_per_plane(config);
    let capacity = bands_per_subarray(config, geometry);
    let mut placed = Vec::new();
    let mut bands_used = Vec::with_capacity(distribution.per_subarray.len());
    for (subarray, blocks) in distribution.per_subarray.iter().enumerate() {
        if let Some(b) = blocks
            .iter()
            .find(|b| b.cols > config.sram_cols || b.rows > config.rows_active)
        {
            return Err(Error::Validation(format!(
                "block {} of layer {} exceeds the block size",
                b.index, b.layer
            )));
        }
        let mut band = 0usize;
        for run in group_runs(blocks) {
            for contents in pack_bands(run, config.sram_cols) {
                if band >= capacity {
                    let (b, _) = contents[0];
                    return Err(Error::Capacity {
                        block: b.index,
                        layer: b.layer,
                    });
                }
                let plane = band / per_plane;
                let row_offset = (band % per_plane) * config.rows_active;
                for (block, col_offset) in contents {
                    placed.push(PlacedBlock {
                        block,
                        subarray,
                        cluster: plane / geometry.n_per_cluster,
                        source_line: plane % geometry.n_per_cluster,
                        row_offset,
                        col_offset,
                    });
                }
                band += 1;
            }
        }
        bands_used.push(band);
    }
    Ok(Placement {
        n_subarrays: distribution.per_subarray.len(),
        config: *config,
        geometry: *geometry,
        blocks: placed,
        replicas: distribution.replicas.clone(),
        bands_used,
    })
}

/// All blocks of a model, in layer order.
pub fn model_blocks(layers: &[LayerSpec], config: &SubarrayConfig) -> Result<Vec<Block>> {
    let mut all = Vec::new();
    for (id, layer) in layers.iter().enumerate() {
        layer.validate()?;
        all.extend(split_blocks(
            id,
            layer_to_matrix(layer),
            config.rows_active,
            config.sram_cols,
        )?);
    }
    Ok(all)
}

/// Split, distribute and place a whole model.
pub fn map_model(
    layers: &[LayerSpec],
    n_subarrays: usize,
    duplicate: Option<&DuplicationPolicy>,
    config: &SubarrayConfig,
    geometry: &ClusterGeometry,
) -> Result<Placement> {
    let blocks = model_blocks(layers, config)?;
    let dist = distribute(&blocks, n_subarrays, duplicate, layers, config, geometry)?;
    place(&dist, config, geometry)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum StorageArch {
    /// Three-level cells behind ternary SRAM pairs.
    Tl,
    /// Single-level cells behind binary SRAM, 8-bit weights.
    Sl,
}

/// Binary nvSRAM array used for the single-level comparison.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlArrayConfig {
    pub rows: usize,
    pub cols: usize,
    pub bits_per_cell: usize,
    pub weight_bits: usize,
}

impl Default for SlArrayConfig {
    fn default() -> Self {
        Self {
            rows: 256,
            cols: 256,
            bits_per_cell: 18,
            weight_bits: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub arch: StorageArch,
    pub total_weights: u64,
    /// Stored digits: trits for TL, bits for SL.
    pub stored_digits: u64,
    /// TL: planes (rows x cells). SL: bit planes (rows x cols).
    pub planes_used: u64,
    pub subarrays_needed: u64,
    pub utilization: f64,
}

/// Subarrays needed to hold the whole model. Each layer is rounded up to
/// whole bands (TL) or whole array rows (SL) on its own.
pub fn capacity_report(
    model: &[LayerSpec],
    arch: StorageArch,
    config: &SubarrayConfig,
    geometry: &ClusterGeometry,
    sl: &SlArrayConfig,
) -> Result<CapacityReport> {
    let total_weights: u64 = model.iter().map(LayerSpec::params).sum();
    match arch {
        StorageArch::Tl => {
            let band_trits = (config.rows_active * config.cell_cols()) as u64;
            let mut bands = 0u64;
            let mut digits = 0u64;
            for (id, layer) in model.iter().enumerate() {
                layer.validate()?;
                let blocks = split_blocks(id, layer_to_matrix(layer), config.rows_active, config.sram_cols)?;
                bands += pack_bands(&blocks, config.sram_cols).len() as u64;
                bands += (layer.extra_params * layer.q as u64).div_ceil(band_trits);
                digits += layer.params() * layer.q as u64;
            }
            let per_plane = bands_per_plane(config) as u64;
            let planes = bands.div_ceil(per_plane);
            let plane_trits = (config.rows * config.cell_cols()) as u64;
            Ok(CapacityReport {
                arch,
                total_weights,
                stored_digits: digits,
                planes_used: planes,
                subarrays_needed: planes.div_ceil(geometry.planes() as u64),
                utilization: if planes == 0 {
                    0.0
                } else {
                    digits as f64 / (planes * plane_trits) as f64
                },
            })
        }
        StorageArch::Sl => {
            let row_bits = sl.cols as u64;
            let mut rows = 0u64;
            let mut digits = 0u64;
            for layer in model {
                layer.validate()?;
                let bits = layer.params() * sl.weight_bits as u64;
                rows += bits.div_ceil(row_bits);
                digits += bits;
            }
            let planes = rows.div_ceil(sl.rows as u64);
            let rows_per_subarray = (sl.rows * sl.bits_per_cell) as u64;
            Ok(CapacityReport {
                arch,
                total_weights,
                stored_digits: digits,
                planes_used: planes,
                subarrays_needed: rows.div_ceil(rows_per_subarray),
                utilization: if rows == 0 {
                    0.0
                } else {
                    digits as f64 / (rows * row_bits) as f64
                },
            })
        }
    }
}
