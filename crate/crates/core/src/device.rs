// SPDX-License-Identifier: Apache-2.0

//! Three-level ReRAM, bidirectional selector and cluster sensing-path model.
//!
//! Resistances are in ohms and voltages in volts throughout. Device-to-device
//! variation is lognormal in resistance with `sigma_ln = gap_sigma_rel / 3`;
//! comparator and discharge-path mismatch is a Gaussian offset on the
//! log-threshold with standard deviation `cmos_sigma_log`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::trit::Trit;

/// Smallest ratio between adjacent effective states that a sense amplifier is
/// assumed to resolve.
pub const SENSE_RESOLUTION: f64 = 1e-6;

/// Comparator offset at which the modelled restore yield falls from about
/// 98 % for a single device per cluster to about 96 % for 60, at a 10 %
/// resistance spread. The shipped default is far smaller and yields ~100 %.
pub const CALIBRATED_CMOS_SIGMA_LOG: f64 = 0.235;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", default, deny_unknown_fields)]
pub struct DeviceParams<T> {
    pub lrs_ohms: T,
    pub hrs_ohms: T,
    /// Medium state. `None` selects the geometric mean of LRS and HRS.
    pub mrs_ohms: Option<T>,
    pub sel_metallic_ohms: T,
    pub sel_insulating_ohms: T,
    pub v_imt_volts: T,
    pub v_mit_volts: T,
    /// 3 sigma / mu of the resistance spread (0.10 means 10 %).
    pub gap_sigma_rel: T,
    pub cmos_sigma_log: T,
    /// Lumped leakage of one unselected cluster.
    pub off_leak_ohms: T,
}

impl<T: Scalar> Default for DeviceParams<T> {
    fn default() -> Self {
        Self {
            lrs_ohms: T::lit(80e3),
            hrs_ohms: T::lit(1e6),
            mrs_ohms: None,
            sel_metallic_ohms: T::lit(40e3),
            sel_insulating_ohms: T::lit(0.12e9),
            v_imt_volts: T::lit(0.45),
            v_mit_volts: T::lit(0.025),
            gap_sigma_rel: T::lit(0.10),
            cmos_sigma_log: T::lit(0.02),
            off_leak_ohms: T::lit(10e9),
        }
    }
}

impl<T: Scalar> DeviceParams<T> {
    /// Defaults with the comparator offset set to `CALIBRATED_CMOS_SIGMA_LOG`.
    pub fn calibrated() -> Self {
        Self {
            cmos_sigma_log: T::lit(CALIBRATED_CMOS_SIGMA_LOG),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lrs_ohms", self.lrs_ohms),
            ("hrs_ohms", self.hrs_ohms),
            ("sel_metallic_ohms", self.sel_metallic_ohms),
            ("sel_insulating_ohms", self.sel_insulating_ohms),
            ("v_imt_volts", self.v_imt_volts),
            ("v_mit_volts", self.v_mit_volts),
            ("off_leak_ohms", self.off_leak_ohms),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Validation(format!(
                    "device.{name} must be positive and finite, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("gap_sigma_rel", self.gap_sigma_rel),
            ("cmos_sigma_log", self.cmos_sigma_log),
        ] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::Validation(format!("device.{name} must be >= 0, got {v}")));
            }
        }
        let mrs = self.mrs();
        if !(self.lrs_ohms < mrs && mrs < self.hrs_ohms) {
            return Err(Error::Validation(format!(
                "device resistances must satisfy lrs < mrs < hrs, got {} / {} / {}",
                self.lrs_ohms, mrs, self.hrs_ohms
            )));
        }
        if self.sel_metallic_ohms >= self.sel_insulating_ohms {
            return Err(Error::Validation(
                "selector metallic resistance must be below insulating".into(),
            ));
        }
        if self.v_mit_volts >= self.v_imt_volts {
            return Err(Error::Validation("selector v_mit must be below v_imt".into()));
        }
        Ok(())
    }

    pub fn mrs(&self) -> T {
        self.mrs_ohms.unwrap_or_else(|| (self.lrs_ohms * self.hrs_ohms).sqrt())
    }

    pub fn nominal(&self, state: ResistanceState) -> T {
        match state {
            ResistanceState::Lrs => self.lrs_ohms,
            ResistanceState::Mrs => self.mrs(),
            ResistanceState::Hrs => self.hrs_ohms,
        }
    }

    /// Log-domain standard deviation of device resistance.
    pub fn sigma_ln(&self) -> T {
        self.gap_sigma_rel / T::lit(3.0)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterGeometry {
    pub n_per_cluster: usize,
    pub m_clusters: usize,
}

impl Default for ClusterGeometry {
    fn default() -> Self {
        Self {
            n_per_cluster: 60,
            m_clusters: 4,
        }
    }
}

impl ClusterGeometry {
    pub fn new(n_per_cluster: usize, m_clusters: usize) -> Result<Self> {
        let g = Self {
            n_per_cluster,
            m_clusters,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_per_cluster == 0 || self.m_clusters == 0 {
            return Err(Error::Validation(format!(
                "cluster geometry needs n >= 1 and m >= 1, got n={} m={}",
                self.n_per_cluster, self.m_clusters
            )));
        }
        Ok(())
    }

    /// Weight planes (one per ReRAM address) behind each SRAM cell pair.
    pub fn planes(&self) -> usize {
        self.n_per_cluster * self.m_clusters
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResistanceState {
    Lrs,
    Mrs,
    Hrs,
}

impl ResistanceState {
    pub const ALL: [ResistanceState; 3] = [ResistanceState::Lrs, ResistanceState::Mrs, ResistanceState::Hrs];

    pub fn index(self) -> usize {
        match self {
            ResistanceState::Lrs => 0,
            ResistanceState::Mrs => 1,
            ResistanceState::Hrs => 2,
        }
    }
}

impl From<Trit> for ResistanceState {
    fn from(t: Trit) -> Self {
        match t {
            Trit::Pos => ResistanceState::Lrs,
            Trit::Zero => ResistanceState::Mrs,
            Trit::Neg => ResistanceState::Hrs,
        }
    }
}

impl From<ResistanceState> for Trit {
    fn from(s: ResistanceState) -> Self {
        match s {
            ResistanceState::Lrs => Trit::Pos,
            ResistanceState::Mrs => Trit::Zero,
            ResistanceState::Hrs => Trit::Neg,
        }
    }
}

/// Resistance-domain equivalents of the three restore reference levels.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RestoreThresholds<T> {
    pub t1_ohms: T,
    pub t2_ohms: T,
    pub t3_ohms: T,
}

impl<T: Scalar> RestoreThresholds<T> {
    /// Scales t1 and t2 to skew the classifier toward (multiplier > 1 on t1,
    /// < 1 on t2 widens the MRS window). t3 follows t1.
    pub fn biased(self, t1_mult: T, t2_mult: T) -> Result<Self> {
        let out = Self {
            t1_ohms: self.t1_ohms * t1_mult,
            t2_ohms: self.t2_ohms * t2_mult,
            t3_ohms: self.t3_ohms * t1_mult,
        };
        if !(out.t1_ohms < out.t2_ohms) || !(t1_mult > T::zero()) || !(t2_mult > T::zero()) {
            return Err(Error::MarginCollapse {
                lower_name: "t1",
                lower: out.t1_ohms.to_f64_lossy(),
                upper_name: "t2",
                upper: out.t2_ohms.to_f64_lossy(),
            });
        }
        Ok(out)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", default, deny_unknown_fields)]
pub struct ModeSettings<T> {
    pub v_dd: T,
    pub v_ddh: T,
    pub v_ddl: T,
    pub v_str: T,
}

impl<T: Scalar> Default for ModeSettings<T> {
    fn default() -> Self {
        Self {
            v_dd: T::lit(0.9),
            v_ddh: T::lit(1.5),
            v_ddl: T::lit(0.6),
            v_str: T::lit(0.31),
        }
    }
}

/// Geometric mean of the two bounds: maximizes min(MRS/LRS, HRS/MRS).
pub fn optimal_mrs<T: Scalar>(lrs: T, hrs: T) -> Result<T> {
    if !(lrs > T::zero()) || !(hrs > lrs) || !hrs.is_finite() {
        return Err(Error::Validation(format!(
            "optimal_mrs needs 0 < lrs < hrs, got lrs={lrs} hrs={hrs}"
        )));
    }
    Ok((lrs * hrs).sqrt())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectorState {
    Metallic,
    Insulating,
}

pub fn selector_state<T: Scalar>(v_across: T, previous: SelectorState, params: &DeviceParams<T>) -> SelectorState {
    let v = v_across.abs();
    match previous {
        SelectorState::Insulating if v >= params.v_imt_volts => SelectorState::Metallic,
        SelectorState::Metallic if v <= params.v_mit_volts => SelectorState::Insulating,
        s => s,
    }
}

/// Draws one programmed-device resistance. With zero spread returns the
/// nominal value exactly.
pub fn sample_resistance<T: Scalar, R: Rng + ?Sized>(
    state: ResistanceState,
    params: &DeviceParams<T>,
    rng: &mut R,
) -> T {
    let nominal = params.nominal(state);
    let sigma = params.sigma_ln();
    if sigma == T::zero() {
        return nominal;
    }
    let z: f64 = rng.sample(StandardNormal);
    nominal * (sigma * T::lit(z)).exp()
}

/// Offset factor `exp(eps)` applied to a reference level, `eps ~ N(0, cmos_sigma_log)`.
pub fn sample_comparator_offset<T: Scalar, R: Rng + ?Sized>(params: &DeviceParams<T>, rng: &mut R) -> T {
    if params.cmos_sigma_log == T::zero() {
        return T::one();
    }
    let z: f64 = rng.sample(StandardNormal);
    (params.cmos_sigma_log * T::lit(z)).exp()
}

/// Conductance of every branch other than the selected device: the n-1
/// insulating selectors in the selected cluster and one lumped branch for each
/// of the m-1 unselected clusters.
pub fn leak_conductance<T: Scalar>(geom: &ClusterGeometry, params: &DeviceParams<T>) -> T {
    let n_other = T::from_usize_lossy(geom.n_per_cluster - 1);
    let m_other = T::from_usize_lossy(geom.m_clusters - 1);
    n_other / params.sel_insulating_ohms + m_other / params.off_leak_ohms
}

pub fn cluster_effective_resistance<T: Scalar>(r_cell: T, geom: &ClusterGeometry, params: &DeviceParams<T>) -> T {
    let series = params.sel_metallic_ohms + r_cell;
    let g_leak = leak_conductance(geom, params);
    if g_leak == T::zero() {
        return series;
    }
    T::one() / (T::one() / series + g_leak)
}

pub fn restore_thresholds<T: Scalar>(params: &DeviceParams<T>, geom: &ClusterGeometry) -> Result<RestoreThresholds<T>> {
    let eff = |s| cluster_effective_resistance(params.nominal(s), geom, params);
    let (l, m, h) = (
        eff(ResistanceState::Lrs),
        eff(ResistanceState::Mrs),
        eff(ResistanceState::Hrs),
    );
    let floor = T::one() + T::lit(SENSE_RESOLUTION);
    for (lower_name, lower, upper_name, upper) in [("eff(LRS)", l, "eff(MRS)", m), ("eff(MRS)", m, "eff(HRS)", h)] {
        if !(upper > lower * floor) {
            return Err(Error::MarginCollapse {
                lower_name,
                lower: lower.to_f64_lossy(),
                upper_name,
                upper: upper.to_f64_lossy(),
            });
        }
    }
    let t1 = (l * m).sqrt();
    Ok(RestoreThresholds {
        t1_ohms: t1,
        t2_ohms: (m * h).sqrt(),
        t3_ohms: t1,
    })
}
