//! End-to-end reconstruction experiment: config, seeding, the shared
//! presentation stream, scoring, multi-seed sweeps and persistence.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::ClusterSet;
use crate::combiner::{adjusted_rand_index, combine, exact_match, DEFAULT_OVERLAP_MIN};
use crate::error::{Error, Result};
use crate::freq_grid::{FrequencyGrid, GridLinkage, GridParams};
use crate::link_cluster::{LinkParams, LinkStore};
use crate::ontology::{
    generate_ontology, ground_truth_partition, sample_presentation, write_presentation_log,
    ExperimentConfig, Ontology, Presentation,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub link: LinkParams,
    pub grid: GridParams,
    pub overlap_min: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentConfig::default(),
            link: LinkParams::default(),
            grid: GridParams::default(),
            overlap_min: DEFAULT_OVERLAP_MIN,
        }
    }
}

impl RunConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.experiment.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.experiment.validate()?;
        self.link.validate()?;
        if self.grid.min_support < 1 {
            return Err(Error::param("min_support", self.grid.min_support));
        }
        if !(0.0..=1.0).contains(&self.grid.min_similarity) {
            return Err(Error::param("grid min_similarity", self.grid.min_similarity));
        }
        Ok(())
    }

    /// Applies a flat `key = value` config text. Unknown keys are errors.
    pub fn apply_file_text(&mut self, text: &str) -> Result<()> {
        let f: FileConfig = toml::from_str(text)?;
        f.apply(self);
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_file_text(&text)
    }
}

/// Every key a config file may set, named after the config fields.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    num_patterns: Option<usize>,
    instances_per_pattern: Option<usize>,
    num_noise_links: Option<usize>,
    max_presented: Option<usize>,
    noise_prob: Option<f64>,
    iterations: Option<usize>,
    rng_seed: Option<u64>,
    link_threshold: Option<f64>,
    link_min_similarity: Option<f64>,
    core_min: Option<usize>,
    grid_linkage: Option<GridLinkage>,
    min_support: Option<u64>,
    grid_min_similarity: Option<f64>,
    overlap_min: Option<usize>,
}

impl FileConfig {
    fn apply(self, c: &mut RunConfig) {
        let e = &mut c.experiment;
        macro_rules! set {
            ($src:expr => $dst:expr) => {
                if let Some(v) = $src {
                    $dst = v;
                }
            };
        }
        set!(self.num_patterns => e.num_patterns);
        set!(self.instances_per_pattern => e.instances_per_pattern);
        set!(self.num_noise_links => e.num_noise_links);
        set!(self.max_presented => e.max_presented);
        set!(self.noise_prob => e.noise_prob);
        set!(self.iterations => e.iterations);
        set!(self.rng_seed => e.rng_seed);
        if self.link_threshold.is_some() {
            c.link.threshold = self.link_threshold;
        }
        set!(self.link_min_similarity => c.link.min_similarity);
        set!(self.core_min => c.link.core_min);
        set!(self.grid_linkage => c.grid.linkage);
        set!(self.min_support => c.grid.min_support);
        set!(self.grid_min_similarity => c.grid.min_similarity);
        set!(self.overlap_min => c.overlap_min);
    }
}

/// Per-seed outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub seed: u64,
    pub link_cluster_count: usize,
    pub grid_cluster_count: usize,
    pub combined_count: usize,
    pub exact_match: bool,
    pub ari_link: f64,
    pub ari_grid: f64,
    pub ari_combined: f64,
    pub link_non_singleton_count: usize,
    pub grid_non_singleton_count: usize,
    pub combined_non_singleton_count: usize,
    pub grid_singleton_count: usize,
}

/// Everything one seed produces.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub ontology: Ontology,
    pub presentations: Vec<Presentation>,
    pub links: LinkStore,
    pub grid: FrequencyGrid,
    pub link_clusters: ClusterSet,
    pub grid_clusters: ClusterSet,
    pub combined: ClusterSet,
    pub truth: ClusterSet,
    pub record: ScoreRecord,
}

/// Runs one seed. Both clusterers see the same presentation stream.
pub fn run_experiment(config: &RunConfig) -> Result<RunArtifacts> {
    config.validate()?;
    let exp = &config.experiment;
    let mut rng = ChaCha8Rng::seed_from_u64(exp.rng_seed);
    let ontology = generate_ontology(exp, &mut rng)?;
    let truth = ground_truth_partition(&ontology);

    let mut links = LinkStore::new();
    let mut grid = FrequencyGrid::new(ontology.node_count());
    let mut presentations = Vec::with_capacity(exp.iterations);
    for _ in 0..exp.iterations {
        let p = sample_presentation(&ontology, exp, &mut rng)?;
        links.observe(&p);
        grid.record(&p);
        presentations.push(p);
    }

    let link_clusters = links.confirmed_clusters(&config.link)?;
    let grid_clusters = grid.cluster_with(&config.grid)?;
    let combined = combine(&link_clusters, &grid_clusters, config.overlap_min);

    let record = ScoreRecord {
        seed: exp.rng_seed,
        link_cluster_count: link_clusters.len(),
        grid_cluster_count: grid_clusters.len(),
        combined_count: combined.len(),
        exact_match: exact_match(&combined, &truth),
        ari_link: adjusted_rand_index(&link_clusters, &truth),
        ari_grid: adjusted_rand_index(&grid_clusters, &truth),
        ari_combined: adjusted_rand_index(&combined, &truth),
        link_non_singleton_count: link_clusters.non_singleton_count(),
        grid_non_singleton_count: grid_clusters.non_singleton_count(),
        combined_non_singleton_count: combined.non_singleton_count(),
        grid_singleton_count: grid_clusters.singleton_count(),
    };
    Ok(RunArtifacts {
        ontology,
        presentations,
        links,
        grid,
        link_clusters,
        grid_clusters,
        combined,
        truth,
        record,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub seeds: usize,
    pub mean_link_count: f64,
    pub mean_grid_count: f64,
    pub mean_combined_count: f64,
    pub mean_combined_non_singleton_count: f64,
    pub mean_ari_link: f64,
    pub mean_ari_grid: f64,
    pub mean_ari_combined: f64,
    pub recovery_fraction: f64,
}

impl Aggregates {
    pub fn from_records(records: &[ScoreRecord]) -> Self {
        let n = records.len().max(1) as f64;
        let mean = |f: &dyn Fn(&ScoreRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
        Self {
            seeds: records.len(),
            mean_link_count: mean(&|r| r.link_cluster_count as f64),
            mean_grid_count: mean(&|r| r.grid_cluster_count as f64),
            mean_combined_count: mean(&|r| r.combined_count as f64),
            mean_combined_non_singleton_count: mean(&|r| r.combined_non_singleton_count as f64),
            mean_ari_link: mean(&|r| r.ari_link),
            mean_ari_grid: mean(&|r| r.ari_grid),
            mean_ari_combined: mean(&|r| r.ari_combined),
            recovery_fraction: mean(&|r| if r.exact_match { 1.0 } else { 0.0 }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub records: Vec<ScoreRecord>,
    pub aggregates: Aggregates,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs every seed in parallel; records come back in seed-list order.
pub fn sweep(config: &RunConfig, seeds: &[u64]) -> Result<RunReport> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("sweep needs at least one seed".into()));
    }
    config.validate()?;
    let records = seeds
        .par_iter()
        .map(|&s| run_experiment(&config.clone().with_seed(s)).map(|a| a.record))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunReport {
        config: config.clone(),
        aggregates: Aggregates::from_records(&records),
        records,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes report.json, presentations.csv, clusters_{link,grid,combined}.json
/// and grid_counts.csv into `dir`.
pub fn write_outputs(dir: &Path, config: &RunConfig, artifacts: &RunArtifacts) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let records = vec![artifacts.record.clone()];
    let report = RunReport {
        config: config.clone(),
        aggregates: Aggregates::from_records(&records),
        records,
    };
    write_text(&dir.join("report.json"), &report.to_json())?;
    write_presentation_log(create(&dir.join("presentations.csv"))?, &artifacts.presentations)?;
    write_text(&dir.join("clusters_link.json"), &artifacts.link_clusters.to_json())?;
    write_text(&dir.join("clusters_grid.json"), &artifacts.grid_clusters.to_json())?;
    write_text(&dir.join("clusters_combined.json"), &artifacts.combined.to_json())?;
    artifacts.grid.write_csv(create(&dir.join("grid_counts.csv"))?)?;
    Ok(())
}
