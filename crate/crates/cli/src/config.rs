//! Run configuration: the model plus per-command settings.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use storage_core::diagnostics::MeshSpec;
use storage_core::girf::{Conditioning, GirfSpec, MitSpec};
use storage_core::solver::InitialGuess;
use storage_core::ModelSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub run: RunBlocks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunBlocks {
    /// Seed for every stochastic command; `--seed` overrides it.
    pub seed: u64,
    pub solve: SolveBlock,
    pub simulate: PathBlock,
    pub moments: PathBlock,
    pub irf: IrfBlock,
    pub mit: MitBlock,
    pub diagnostics: DiagnosticsBlock,
}

impl Default for RunBlocks {
    fn default() -> Self {
        Self {
            seed: 1,
            solve: SolveBlock::default(),
            simulate: PathBlock {
                t_total: storage_core::simulation::EULER_T,
                burn: storage_core::simulation::EULER_BURN,
            },
            moments: PathBlock {
                t_total: storage_core::simulation::STATIONARY_T,
                burn: storage_core::simulation::STATIONARY_BURN,
            },
            irf: IrfBlock::default(),
            mit: MitBlock::default(),
            diagnostics: DiagnosticsBlock::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveBlock {
    pub initial: InitialGuess,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathBlock {
    pub t_total: usize,
    pub burn: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrfBlock {
    pub x0: Conditioning,
    pub z0: Conditioning,
    pub shock_bp: f64,
    pub horizon: usize,
    pub n_paths: usize,
    pub volatility: bool,
}

impl Default for IrfBlock {
    fn default() -> Self {
        let g = GirfSpec::default();
        Self {
            x0: g.x0,
            z0: g.z0,
            shock_bp: g.shock_bp,
            horizon: g.horizon,
            n_paths: g.n_paths,
            volatility: g.volatility,
        }
    }
}

impl IrfBlock {
    pub fn spec(&self, seed: u64) -> GirfSpec {
        GirfSpec {
            x0: self.x0,
            z0: self.z0,
            shock_bp: self.shock_bp,
            horizon: self.horizon,
            n_paths: self.n_paths,
            seed,
            volatility: self.volatility,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MitBlock {
    pub r_low: f64,
    pub r_high: f64,
    pub horizon: usize,
    pub n_paths: usize,
    pub x0: Option<f64>,
}

impl Default for MitBlock {
    fn default() -> Self {
        let m = MitSpec::default();
        Self {
            r_low: m.r_low,
            r_high: m.r_high,
            horizon: m.horizon,
            n_paths: m.n_paths,
            x0: m.x0,
        }
    }
}

impl MitBlock {
    pub fn spec(&self, seed: u64) -> MitSpec {
        MitSpec {
            r_low: self.r_low,
            r_high: self.r_high,
            horizon: self.horizon,
            n_paths: self.n_paths,
            seed,
            x0: self.x0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsBlock {
    pub euler: bool,
    pub properties: bool,
    pub mesh: MeshSpec,
}

impl Default for DiagnosticsBlock {
    fn default() -> Self {
        Self {
            euler: true,
            properties: true,
            mesh: MeshSpec::default(),
        }
    }
}

/// Hex SHA-256 of the compact JSON form of a value.
pub fn hash_of<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("config serialises");
    hex::encode(Sha256::digest(json.as_bytes()))
}
