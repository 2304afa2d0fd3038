// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tlsim_core::array::SubarrayConfig;
use tlsim_core::device::ClusterGeometry;
use tlsim_core::mapper::{DuplicationPolicy, SlArrayConfig};
use tlsim_core::perf::BcArrayConfig;
use tlsim_core::yield_mc::YieldSettings;
use tlsim_core::{AreaParamsF64, DeviceParamsF64, EnergyParamsF64, Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    /// Used when `--seed` is not given.
    pub base: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub device: DeviceParamsF64,
    pub geometry: ClusterGeometry,
    pub subarray: SubarrayConfig,
    pub energy: EnergyParamsF64,
    pub area: AreaParamsF64,
    #[serde(rename = "yield")]
    pub yield_settings: YieldSettings,
    pub sl_array: SlArrayConfig,
    pub bc_array: BcArrayConfig,
    pub duplication: DuplicationPolicy,
    pub seeds: Seeds,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Config = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.device.validate()?;
        self.geometry.validate()?;
        self.subarray.validate()?;
        self.energy.validate()?;
        self.area.validate()?;
        self.yield_settings.validate()?;
        if !(0.0..=1.0).contains(&self.duplication.idle_threshold) {
            return Err(Error::Validation("duplication.idle_threshold must be in [0, 1]".into()));
        }
        Ok(())
    }

    /// SHA-256 of the effective configuration (defaults filled in).
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
