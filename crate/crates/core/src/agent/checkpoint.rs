//! JSON model checkpoints.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::dqn::{QNetwork, TrainConfig};
use super::mlp::Mlp;
use super::AgentError;
use crate::sim::{NUM_ACTIONS, OBS_WIDTH};

pub const CHECKPOINT_FORMAT: &str = "ksshift-qnetwork";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub layer_sizes: Vec<usize>,
    pub network: Mlp,
    /// Hex SHA-256 of the serialized training config.
    pub config_hash: String,
    pub train_seed: u64,
    pub config: TrainConfig,
}

pub fn config_hash(cfg: &TrainConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Checkpoint {
    pub fn new(network: &QNetwork, cfg: &TrainConfig) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            layer_sizes: network.mlp.sizes(),
            network: network.mlp.clone(),
            config_hash: config_hash(cfg),
            train_seed: cfg.seed,
            config: cfg.clone(),
        }
    }

    /// Checks the header, the declared sizes against the stored tensors, and
    /// the input/output widths against the simulator.
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |msg: String| Err(AgentError::Checkpoint(msg));
        if self.format != CHECKPOINT_FORMAT {
            return bad(format!("unknown format {:?}", self.format));
        }
        if self.version != CHECKPOINT_VERSION {
            return bad(format!("unsupported version {}", self.version));
        }
        if self.network.layers.is_empty() {
            return bad("network has no layers".into());
        }
        for (k, layer) in self.network.layers.iter().enumerate() {
            if layer.weights.len() != layer.inputs * layer.outputs || layer.biases.len() != layer.outputs {
                return bad(format!(
                    "layer {k} tensors do not match its {}x{} shape",
                    layer.outputs, layer.inputs
                ));
            }
        }
        for (k, pair) in self.network.layers.windows(2).enumerate() {
            if pair[0].outputs != pair[1].inputs {
                return bad(format!(
                    "layer {k} outputs {} but layer {} takes {}",
                    pair[0].outputs,
                    k + 1,
                    pair[1].inputs
                ));
            }
        }
        let sizes = self.network.sizes();
        if sizes != self.layer_sizes {
            return bad(format!(
                "declared sizes {:?} but tensors have {:?}",
                self.layer_sizes, sizes
            ));
        }
        if sizes[0] != OBS_WIDTH || *sizes.last().unwrap() != NUM_ACTIONS {
            return bad(format!(
                "expected {OBS_WIDTH} inputs and {NUM_ACTIONS} outputs, found {sizes:?}"
            ));
        }
        if config_hash(&self.config) != self.config_hash {
            return bad("config hash does not match the stored config".into());
        }
        Ok(())
    }

    pub fn q_network(&self) -> QNetwork {
        QNetwork {
            mlp: self.network.clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), AgentError> {
        let text = serde_json::to_string(self).map_err(|e| AgentError::Checkpoint(e.to_string()))?;
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, AgentError> {
        let text = fs::read_to_string(path)?;
        let ck: Checkpoint = serde_json::from_str(&text).map_err(|e| AgentError::Checkpoint(e.to_string()))?;
        ck.validate()?;
        Ok(ck)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let cfg = TrainConfig {
            seed: 17,
            ..TrainConfig::default()
        };
        let net = QNetwork::new(&cfg.hidden, 3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.json");
        Checkpoint::new(&net, &cfg).save(&path).unwrap();
        let ck = Checkpoint::load(&path).unwrap();
        assert_eq!(ck.q_network(), net);
        assert_eq!(ck.train_seed, 17);
        assert_eq!(ck.layer_sizes, vec![56, 64, 64, 8]);
        assert_eq!(ck.config_hash.len(), 64);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let cfg = TrainConfig::default();
        let net = QNetwork::new(&cfg.hidden, 3);
        let mut ck = Checkpoint::new(&net, &cfg);
        ck.network.layers[1].weights.pop();
        assert!(matches!(ck.validate(), Err(AgentError::Checkpoint(_))));

        let mut ck = Checkpoint::new(&net, &cfg);
        ck.layer_sizes[1] = 32;
        assert!(ck.validate().is_err());

        let wide = QNetwork {
            mlp: Mlp::new(&[10, 4, 8], 0),
        };
        assert!(Checkpoint::new(&wide, &cfg).validate().is_err());

        let mut ck = Checkpoint::new(&net, &cfg);
        ck.config.gamma = 0.5;
        assert!(ck.validate().is_err());
    }
}
