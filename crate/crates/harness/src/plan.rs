use std::fs;
use std::path::{Path, PathBuf};

use attack::AttackConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{HarnessError, Result};

pub const PLAN_VERSION: u32 = 1;

/// Where the experiment's images come from.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DatasetSource {
    /// Built-in seeded generator.
    Synthetic { spec: models::SyntheticSpec },
    /// IDX image/label pair on disk.
    Idx { images: PathBuf, labels: PathBuf, class_count: usize },
}

/// Sample counts for the three standard splits.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct SplitSizes {
    pub victim_train: usize,
    pub reference_train: usize,
    pub attack_eval: usize,
}

/// One attack configuration to run over the image batch. `name` keys the
/// records and must be unique within a plan.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AttackPlanEntry {
    pub name: String,
    #[serde(flatten)]
    pub kind: AttackKind,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "attack", rename_all = "kebab-case")]
pub enum AttackKind {
    /// Prior-gradient bandit attack; `refs` selects reference indices
    /// (defaults to all).
    Subspace {
        #[serde(default)]
        config: AttackConfig,
        #[serde(default)]
        refs: Option<Vec<usize>>,
    },
    /// Bandit over a fixed per-image random subspace of dimension `m`.
    RandomSubspace {
        m: usize,
        #[serde(default)]
        config: AttackConfig,
    },
    /// Full-dimension Gaussian bandit.
    GaussianBandit {
        #[serde(default)]
        config: AttackConfig,
    },
    Nes {
        #[serde(default)]
        config: baselines::NesConfig,
    },
    /// Ensemble transfer attack with a fixed white-box step count.
    Transfer {
        #[serde(default = "default_transfer_steps")]
        steps: usize,
        #[serde(default)]
        config: AttackConfig,
    },
}

fn default_transfer_steps() -> usize {
    100
}

impl AttackKind {
    pub fn attack_config(&self) -> &AttackConfig {
        match self {
            AttackKind::Subspace { config, .. } => config,
            AttackKind::RandomSubspace { config, .. } => config,
            AttackKind::GaussianBandit { config } => config,
            AttackKind::Nes { config } => &config.attack,
            AttackKind::Transfer { config, .. } => config,
        }
    }

    pub fn attack_config_mut(&mut self) -> &mut AttackConfig {
        match self {
            AttackKind::Subspace { config, .. } => config,
            AttackKind::RandomSubspace { config, .. } => config,
            AttackKind::GaussianBandit { config } => config,
            AttackKind::Nes { config } => &mut config.attack,
            AttackKind::Transfer { config, .. } => config,
        }
    }

    /// Stable fingerprint of the full attack configuration.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// A fully specified batch experiment.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentPlan {
    pub version: u32,
    pub seed: u64,
    pub dataset: DatasetSource,
    pub splits: SplitSizes,
    /// Victim model base path (or manifest path).
    pub victim: PathBuf,
    /// Reference model base paths, ordered.
    pub references: Vec<PathBuf>,
    /// How many correctly classified eval images to attack.
    pub image_count: usize,
    pub attacks: Vec<AttackPlanEntry>,
    pub out_dir: PathBuf,
}

impl ExperimentPlan {
    pub fn from_file(path: &Path) -> Result<Self> {
        let plan = Self::from_file_unchecked(path)?;
        plan.validate()?;
        Ok(plan)
    }

    /// Parses without validating referenced files; the `train` command uses
    /// this before any model exists.
    pub fn from_file_unchecked(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let plan: ExperimentPlan = serde_json::from_str(&text)?;
        Ok(plan)
    }

    pub fn to_file(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| HarnessError::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != PLAN_VERSION {
            return Err(HarnessError::Plan(format!(
                "plan version {} not supported (expected {PLAN_VERSION})",
                self.version
            )));
        }
        if self.attacks.is_empty() {
            return Err(HarnessError::Plan("no attacks configured".into()));
        }
        if self.image_count == 0 {
            return Err(HarnessError::Plan("image_count must be > 0".into()));
        }
        let mut names = std::collections::HashSet::new();
        for entry in &self.attacks {
            if entry.name.is_empty() || entry.name.contains(',') {
                return Err(HarnessError::Plan(format!(
                    "attack name `{}` must be non-empty and comma-free",
                    entry.name
                )));
            }
            if !names.insert(&entry.name) {
                return Err(HarnessError::Plan(format!(
                    "duplicate attack name `{}`",
                    entry.name
                )));
            }
            entry.kind.attack_config().validate()?;
            if let AttackKind::Nes { config } = &entry.kind {
                config.validate()?;
            }
        }
        let manifest_exists = |base: &Path| {
            let mut s = base.as_os_str().to_os_string();
            if !base.to_string_lossy().ends_with(".manifest.json") {
                s.push(".manifest.json");
            }
            PathBuf::from(s).exists()
        };
        if !manifest_exists(&self.victim) {
            return Err(HarnessError::Plan(format!(
                "victim model not found at {}",
                self.victim.display()
            )));
        }
        for r in &self.references {
            if !manifest_exists(r) {
                return Err(HarnessError::Plan(format!(
                    "reference model not found at {}",
                    r.display()
                )));
            }
        }
        if let DatasetSource::Idx { images, labels, .. } = &self.dataset {
            for p in [images, labels] {
                if !p.exists() {
                    return Err(HarnessError::Plan(format!(
                        "dataset file not found at {}",
                        p.display()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Loads the dataset and carves the standard splits (seeded by the plan).
    pub fn load_splits(&self) -> Result<models::SplitPlan> {
        let full = match &self.dataset {
            DatasetSource::Synthetic { spec } => models::synthetic_dataset(spec)?,
            DatasetSource::Idx {
                images,
                labels,
                class_count,
            } => {
                let imgs = models::load_idx_images(images)?;
                let lbls = models::load_idx_labels(labels)?;
                let ids = (0..imgs.len() as u64).collect();
                models::Dataset::new(imgs, lbls, ids, "idx-full", *class_count)?
            }
        };
        let plan = models::standard_splits(
            &full,
            self.splits.victim_train,
            self.splits.reference_train,
            self.splits.attack_eval,
            self.seed,
        )?;
        Ok(plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_plan(dir: &Path) -> ExperimentPlan {
        ExperimentPlan {
            version: PLAN_VERSION,
            seed: 11,
            dataset: DatasetSource::Synthetic {
                spec: models::SyntheticSpec::new(4, 8, 120, 1),
            },
            splits: SplitSizes {
                victim_train: 80,
                reference_train: 16,
                attack_eval: 24,
            },
            victim: dir.join("victim"),
            references: vec![dir.join("ref0")],
            image_count: 5,
            attacks: vec![AttackPlanEntry {
                name: "subspace".into(),
                kind: AttackKind::Subspace {
                    config: AttackConfig::default(),
                    refs: None,
                },
            }],
            out_dir: dir.join("out"),
        }
    }

    fn write_models(dir: &Path) {
        use rand::SeedableRng;
        let spec = models::build_architecture("mlp-small", &[8, 8, 1], 4).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let params = micronet::init_params(&spec, &mut rng);
        let manifest = models::ModelManifest::new("mlp-small", vec![8, 8, 1], 4, "victim-train", 0.5);
        models::save_model(&spec, &params, &manifest, &dir.join("victim")).unwrap();
        models::save_model(&spec, &params, &manifest, &dir.join("ref0")).unwrap();
    }

    #[test]
    fn plan_round_trips_and_validates() {
        let dir = tempfile::tempdir().unwrap();
        write_models(dir.path());
        let plan = sample_plan(dir.path());
        let path = dir.path().join("plan.json");
        plan.to_file(&path).unwrap();
        let back = ExperimentPlan::from_file(&path).unwrap();
        assert_eq!(plan, back);
    }

    #[test]
    fn missing_models_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let plan = sample_plan(dir.path());
        assert!(matches!(plan.validate(), Err(HarnessError::Plan(_))));
    }

    #[test]
    fn duplicate_attack_names_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_models(dir.path());
        let mut plan = sample_plan(dir.path());
        plan.attacks.push(plan.attacks[0].clone());
        assert!(matches!(plan.validate(), Err(HarnessError::Plan(_))));
    }

    #[test]
    fn fingerprint_is_config_sensitive() {
        let a = AttackKind::GaussianBandit {
            config: AttackConfig::default(),
        };
        let b = AttackKind::GaussianBandit {
            config: AttackConfig {
                budget: 123,
                ..AttackConfig::default()
            },
        };
        assert_eq!(a.fingerprint(), a.fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
