use std::path::PathBuf;

use serde::Deserialize;
use trainrecip_core::rational::from_decimal;
use trainrecip_core::simulator::{DiscreteDist, PopulationSpec, RNG_ALGORITHM};
use trainrecip_core::table::ColumnMapping;
use trainrecip_core::{equilibrium::SweepGrid, GameParams, ReciprocityParams, TreatmentSpec};

/// Environment variable naming the output directory when neither the
/// command line nor the config file sets one.
pub const OUT_DIR_ENV: &str = "TRAINRECIP_OUT_DIR";
pub const FALLBACK_OUT_DIR: &str = "trainrecip-out";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReciprocitySection {
    pub eta: OneOrMany,
    pub k_linear: f64,
    pub k_quad: f64,
}

impl Default for ReciprocitySection {
    fn default() -> Self {
        ReciprocitySection {
            eta: OneOrMany::One(0.1),
            k_linear: 0.0,
            k_quad: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub eta: Vec<f64>,
    pub k_linear: Vec<f64>,
    pub k_quad: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            eta: vec![0.0, 0.02, 0.04, 0.05, 0.1, 0.2, 0.5],
            k_linear: vec![0.0],
            k_quad: vec![5.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationSection {
    pub selfish: usize,
    pub reciprocal: usize,
    pub eta: DiscreteDist,
    pub k_linear: DiscreteDist,
    pub k_quad: DiscreteDist,
    pub seed: u64,
    pub demographics: bool,
    pub tremble: f64,
}

impl Default for PopulationSection {
    fn default() -> Self {
        let spec = PopulationSpec::default();
        PopulationSection {
            selfish: spec.selfish,
            reciprocal: spec.reciprocal,
            eta: spec.eta,
            k_linear: spec.k_linear,
            k_quad: spec.k_quad,
            seed: spec.seed,
            demographics: spec.demographics,
            tremble: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for stochastic commands; overrides `population.seed` when set.
    pub seed: Option<u64>,
    pub rng: String,
    pub output_dir: Option<PathBuf>,
    pub treatments: Vec<String>,
    pub display_decimals: usize,
    pub game: GameParams,
    pub reciprocity: ReciprocitySection,
    pub sweep: SweepSection,
    pub population: PopulationSection,
    /// Column mapping for foreign input files. Absent means the native schema.
    pub ingest: Option<ColumnMapping>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            rng: RNG_ALGORITHM.to_string(),
            output_dir: None,
            treatments: TreatmentSpec::ALL
                .iter()
                .map(|t| t.label().to_string())
                .collect(),
            display_decimals: 2,
            game: GameParams::default(),
            reciprocity: ReciprocitySection::default(),
            sweep: SweepSection::default(),
            population: PopulationSection::default(),
            ingest: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let config: RunConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.rng != RNG_ALGORITHM {
            anyhow::bail!(
                "unsupported rng {:?}; this build provides {RNG_ALGORITHM:?}",
                self.rng
            );
        }
        self.game.validate()?;
        self.treatment_specs()?;
        self.reciprocity_params()?;
        self.sweep_grid()?;
        if self.reciprocity.eta.values().is_empty() {
            anyhow::bail!("reciprocity.eta must not be empty");
        }
        if self.display_decimals > 12 {
            anyhow::bail!("display_decimals must be at most 12");
        }
        Ok(())
    }

    pub fn treatment_specs(&self) -> anyhow::Result<Vec<TreatmentSpec>> {
        if self.treatments.is_empty() {
            anyhow::bail!("no treatments selected");
        }
        self.treatments
            .iter()
            .map(|t| t.parse::<TreatmentSpec>().map_err(anyhow::Error::from))
            .collect()
    }

    /// One parameter set per configured eta, in file order.
    pub fn reciprocity_params(&self) -> anyhow::Result<Vec<ReciprocityParams>> {
        let r = &self.reciprocity;
        r.eta
            .values()
            .into_iter()
            .map(|eta| Ok(ReciprocityParams::from_f64(eta, r.k_linear, r.k_quad)?))
            .collect()
    }

    pub fn sweep_grid(&self) -> anyhow::Result<SweepGrid> {
        let convert = |name: &str, values: &[f64]| -> anyhow::Result<Vec<_>> {
            if values.is_empty() {
                anyhow::bail!("sweep.{name} must not be empty");
            }
            values.iter().map(|&v| Ok(from_decimal(v)?)).collect()
        };
        Ok(SweepGrid {
            eta: convert("eta", &self.sweep.eta)?,
            k_linear: convert("k_linear", &self.sweep.k_linear)?,
            k_quad: convert("k_quad", &self.sweep.k_quad)?,
        })
    }

    pub fn population_spec(&self) -> PopulationSpec {
        let p = &self.population;
        PopulationSpec {
            selfish: p.selfish,
            reciprocal: p.reciprocal,
            eta: p.eta.clone(),
            k_linear: p.k_linear.clone(),
            k_quad: p.k_quad.clone(),
            seed: self.seed.unwrap_or(p.seed),
            demographics: p.demographics,
        }
    }

    /// Command-line flag, then the config file, then the environment.
    pub fn resolve_output_dir(&self, flag: Option<PathBuf>) -> PathBuf {
        flag.or_else(|| self.output_dir.clone())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_DIR))
    }
}
