//! TOML configuration schemas.
//!
//! Unknown keys are rejected (the parse error names the offending key), and
//! every optional section falls back to the library defaults so a minimal
//! file stays minimal. The fully resolved configuration — defaults applied,
//! flags merged — is what gets hashed into the run manifest.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use lsagc_core::synth::{CohortSpec, Topology, VarNetworkSpec};
use lsagc_core::train::TrainConfig;
use lsagc_core::{AugmentationGrid, BinarizeStrategy, PipelineConfig, ReducedModelKind, SignConvention};

use crate::error::{io_err, CliError, Result};

fn parse_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err("read", path))?;
    toml::from_str(&text).map_err(|e| {
        CliError::Usage(format!("{}: {}", path.display(), e.message()))
    })
}

// ---------------------------------------------------------------------------
// `synth` spec file
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyName {
    Chain,
    Hub,
    RandomDag,
    TwoCommunity,
}

impl From<TopologyName> for Topology {
    fn from(t: TopologyName) -> Topology {
        match t {
            TopologyName::Chain => Topology::Chain,
            TopologyName::Hub => Topology::Hub,
            TopologyName::RandomDag => Topology::RandomDag,
            TopologyName::TwoCommunity => Topology::TwoCommunity,
        }
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub nodes: usize,
    pub topology: TopologyName,
    pub coupling: f64,
    pub lag_order: usize,
    pub noise_sd: f64,
    pub samples: usize,
    /// Forward-pair edge probability; only `random-dag` reads it.
    #[serde(default)]
    pub edge_density: f64,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectsSection {
    pub count: usize,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CohortSection {
    pub class0: usize,
    pub class1: usize,
    pub delta_edges: Vec<(usize, usize)>,
    pub delta_coupling: f64,
    #[serde(default)]
    pub subject_noise: f64,
}

/// The `synth` spec: a network plus either a plain subject count or a
/// two-class cohort description.
#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub network: NetworkSection,
    #[serde(default)]
    pub subjects: Option<SubjectsSection>,
    #[serde(default)]
    pub cohort: Option<CohortSection>,
}

impl SynthSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let spec: SynthSpec = parse_toml(path)?;
        match (&spec.subjects, &spec.cohort) {
            (Some(_), Some(_)) => Err(CliError::Usage(format!(
                "{}: [subjects] and [cohort] are mutually exclusive",
                path.display()
            ))),
            (None, None) => Err(CliError::Usage(format!(
                "{}: one of [subjects] or [cohort] is required",
                path.display()
            ))),
            _ => Ok(spec),
        }
    }

    pub fn network_spec(&self, seed: u64) -> VarNetworkSpec {
        VarNetworkSpec {
            n_nodes: self.network.nodes,
            topology: self.network.topology.into(),
            edge_density: self.network.edge_density,
            coupling: self.network.coupling,
            lag_order: self.network.lag_order,
            noise_sd: self.network.noise_sd,
            t_samples: self.network.samples,
            seed,
        }
    }

    pub fn cohort_spec(&self, seed: u64) -> Option<CohortSpec> {
        let cohort = self.cohort.as_ref()?;
        Some(CohortSpec {
            base: self.network_spec(seed),
            delta_edges: cohort.delta_edges.clone(),
            delta_coupling: cohort.delta_coupling,
            n_class0: cohort.class0,
            n_class1: cohort.class1,
            subject_noise: cohort.subject_noise,
            seed,
        })
    }
}

// ---------------------------------------------------------------------------
// `classify` grid/classifier file
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SignName {
    /// Log ratio reduced-over-full: a helpful source scores positive.
    Positive,
    /// The mirrored, legacy orientation (full-over-reduced).
    Paper,
}

impl From<SignName> for SignConvention {
    fn from(s: SignName) -> SignConvention {
        match s {
            SignName::Positive => SignConvention::ReducedOverFull,
            SignName::Paper => SignConvention::FullOverReduced,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ReducedModelName {
    DropSource,
    FullProjection,
}

impl From<ReducedModelName> for ReducedModelKind {
    fn from(r: ReducedModelName) -> ReducedModelKind {
        match r {
            ReducedModelName::DropSource => ReducedModelKind::DropSourceColumn,
            ReducedModelName::FullProjection => ReducedModelKind::FullProjection,
        }
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub p: Vec<usize>,
    pub m: Vec<usize>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BinarizeSection {
    pub strategy: String,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub q: Option<f64>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSection {
    pub hidden: Option<usize>,
    pub heads: Option<usize>,
    pub layers: Option<usize>,
    pub leaky_slope: Option<f64>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EngineSection {
    pub ridge_epsilon: Option<f64>,
    pub sign: Option<SignName>,
    pub reduced_model: Option<ReducedModelName>,
    pub standardize: Option<bool>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfigFile {
    #[serde(default)]
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub binarize: Option<BinarizeSection>,
    #[serde(default)]
    pub classifier: Option<ClassifierSection>,
    #[serde(default)]
    pub training: Option<TrainingSection>,
    #[serde(default)]
    pub engine: Option<EngineSection>,
}

impl ClassifyConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        parse_toml(path)
    }

    /// Merge the file over the library defaults into a pipeline config.
    pub fn resolve(&self, folds: usize, seed: u64) -> Result<PipelineConfig> {
        let mut config = PipelineConfig {
            n_folds: folds,
            seed,
            ..PipelineConfig::default()
        };
        if let Some(grid) = &self.grid {
            config.grid = Some(AugmentationGrid::new(grid.p.clone(), grid.m.clone())?);
        }
        if let Some(b) = &self.binarize {
            config.binarize = Some(match b.strategy.as_str() {
                "top-k" => BinarizeStrategy::TopKPerNode(b.k.ok_or_else(|| {
                    CliError::Usage("[binarize] strategy \"top-k\" needs `k`".into())
                })?),
                "quantile" => BinarizeStrategy::GlobalQuantile(b.q.ok_or_else(|| {
                    CliError::Usage("[binarize] strategy \"quantile\" needs `q`".into())
                })?),
                other => {
                    return Err(CliError::Usage(format!(
                        "[binarize] strategy must be \"top-k\" or \"quantile\", found {other:?}"
                    )))
                }
            });
        }
        if let Some(c) = &self.classifier {
            if let Some(v) = c.hidden {
                config.hidden_dim = v;
            }
            if let Some(v) = c.heads {
                config.n_heads = v;
            }
            if let Some(v) = c.layers {
                config.n_layers = v;
            }
            if let Some(v) = c.leaky_slope {
                config.leaky_slope = v;
            }
        }
        if let Some(t) = &self.training {
            let d = TrainConfig::default();
            config.train = TrainConfig {
                epochs: t.epochs.unwrap_or(d.epochs),
                learning_rate: t.learning_rate.unwrap_or(d.learning_rate),
                beta1: t.beta1.unwrap_or(d.beta1),
                beta2: t.beta2.unwrap_or(d.beta2),
                adam_epsilon: t.epsilon.unwrap_or(d.adam_epsilon),
            };
        }
        if let Some(e) = &self.engine {
            if let Some(v) = e.ridge_epsilon {
                config.ridge_epsilon = v;
            }
            if let Some(v) = e.sign {
                config.sign_convention = v.into();
            }
            if let Some(v) = e.reduced_model {
                config.reduced_model = v.into();
            }
            if let Some(v) = e.standardize {
                config.standardize = v;
            }
        }
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(body: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        (dir, path)
    }

    #[test]
    fn synth_spec_parses_and_maps() {
        let (_d, path) = write_tmp(
            "[network]\nnodes = 6\ntopology = \"chain\"\ncoupling = 0.8\n\
             lag_order = 1\nnoise_sd = 1.0\nsamples = 200\n\n[subjects]\ncount = 4\n",
        );
        let spec = SynthSpec::load(&path).unwrap();
        let net = spec.network_spec(9);
        assert_eq!(net.n_nodes, 6);
        assert_eq!(net.topology, Topology::Chain);
        assert_eq!(net.seed, 9);
        assert!(spec.cohort_spec(9).is_none());
    }

    #[test]
    fn synth_spec_rejects_unknown_keys_by_name() {
        let (_d, path) = write_tmp(
            "[network]\nnodes = 6\ntopology = \"chain\"\ncoupling = 0.8\n\
             lag_order = 1\nnoise_sd = 1.0\nsamples = 200\nbogus_key = 1\n\n[subjects]\ncount = 1\n",
        );
        let err = SynthSpec::load(&path).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("bogus_key"), "{err}");
    }

    #[test]
    fn synth_spec_requires_exactly_one_mode() {
        let base = "[network]\nnodes = 6\ntopology = \"hub\"\ncoupling = 0.5\n\
                    lag_order = 1\nnoise_sd = 1.0\nsamples = 100\n";
        let (_d, path) = write_tmp(base);
        assert!(SynthSpec::load(&path).unwrap_err().to_string().contains("required"));
        let both = format!(
            "{base}\n[subjects]\ncount = 2\n\n[cohort]\nclass0 = 2\nclass1 = 2\n\
             delta_edges = [[1, 0]]\ndelta_coupling = 0.5\n"
        );
        let (_d2, path2) = write_tmp(&both);
        assert!(SynthSpec::load(&path2)
            .unwrap_err()
            .to_string()
            .contains("mutually exclusive"));
    }

    #[test]
    fn classify_config_merges_over_defaults() {
        let (_d, path) = write_tmp(
            "[grid]\np = [2, 4]\nm = [1]\n\n[binarize]\nstrategy = \"quantile\"\nq = 0.8\n\n\
             [training]\nepochs = 50\n\n[engine]\nsign = \"paper\"\n",
        );
        let file = ClassifyConfigFile::load(&path).unwrap();
        let config = file.resolve(5, 3).unwrap();
        assert_eq!(config.grid.as_ref().unwrap().p_values, vec![2, 4]);
        assert_eq!(config.binarize, Some(BinarizeStrategy::GlobalQuantile(0.8)));
        assert_eq!(config.train.epochs, 50);
        assert_eq!(config.train.beta1, TrainConfig::default().beta1);
        assert_eq!(config.sign_convention, SignConvention::FullOverReduced);
        assert_eq!(config.n_folds, 5);
        assert_eq!(config.seed, 3);
        // Defaults survive where the file is silent.
        assert_eq!(config.hidden_dim, PipelineConfig::default().hidden_dim);
    }

    #[test]
    fn classify_config_validates_binarize_choice() {
        let (_d, path) = write_tmp("[binarize]\nstrategy = \"top-k\"\n");
        let file = ClassifyConfigFile::load(&path).unwrap();
        let err = file.resolve(5, 0).unwrap_err();
        assert!(err.to_string().contains("needs `k`"));
        let (_d2, path2) = write_tmp("[binarize]\nstrategy = \"median\"\nq = 0.5\n");
        let err2 = ClassifyConfigFile::load(&path2).unwrap().resolve(5, 0).unwrap_err();
        assert!(err2.to_string().contains("top-k"));
    }

    #[test]
    fn empty_classify_config_is_all_defaults() {
        let (_d, path) = write_tmp("");
        let config = ClassifyConfigFile::load(&path).unwrap().resolve(5, 1).unwrap();
        assert!(config.grid.is_none());
        assert!(config.binarize.is_none());
        assert_eq!(config.standardize, true);
    }
}
