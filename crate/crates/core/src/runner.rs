//! Experiment harness: config parsing, realization loops, presets and
//! CSV/JSON output.
//!
//! Every random draw is keyed by (master seed, grid coordinates, realization
//! index, purpose tag), so results for a grid point do not depend on which
//! other grid points are present or on execution order, and reruns are
//! byte-identical.

use crate::encoding::EncodingConfig;
use crate::error::{Error, Result};
use crate::gaussian;
use crate::readout::{self, CapacityReport};
use crate::reservoir::{self, LeakKind, PhotonOpKind, SchemeConfig, SchemeKind};
use crate::resources::SamplingConfig;
use crate::seeds::{derive_rng, purpose};
use crate::signal::{enumerate_basis, InputSeries};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    QelmScan,
    MemoryScan,
    LeakyScan,
    FiniteResources,
    BoundOnly,
    OracleCheck,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::QelmScan => "qelm_scan",
            Self::MemoryScan => "memory_scan",
            Self::LeakyScan => "leaky_scan",
            Self::FiniteResources => "finite_resources",
            Self::BoundOnly => "bound_only",
            Self::OracleCheck => "oracle_check",
        }
    }

    fn scheme_kind(&self) -> Option<SchemeKind> {
        match self {
            Self::QelmScan | Self::FiniteResources => Some(SchemeKind::Qelm),
            Self::MemoryScan => Some(SchemeKind::QrcPreprocessing),
            Self::LeakyScan => Some(SchemeKind::QrcLeaky),
            Self::BoundOnly | Self::OracleCheck => None,
        }
    }
}

/// Ensemble axis: exact observables or a list of finite ensemble sizes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnsembleAxis {
    Exact(String),
    Sizes(Vec<u64>),
}

/// Fully resolved experiment configuration; every field is concrete.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub master_seed: u64,
    pub n_modes: Vec<usize>,
    pub tau_max: Vec<usize>,
    pub n_photon_ops: Vec<usize>,
    /// None = exact observables; Some(list) = finite ensemble sizes.
    pub ensemble_sizes: Option<Vec<u64>>,
    pub op_kind: PhotonOpKindConfig,
    pub realizations: usize,
    pub washout: usize,
    pub train: usize,
    pub test: usize,
    pub max_total_degree: u32,
    /// None = per grid point: tau_max, plus 5 for leaky runs.
    pub max_delay: Option<usize>,
    pub max_factors: usize,
    pub p_threshold: f64,
    pub squeezing: f64,
    pub identical_modes: bool,
    pub active_network: bool,
    pub leak_rate: f64,
    pub leak_kind: LeakKindConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhotonOpKindConfig {
    Subtract,
    Add,
}

impl From<PhotonOpKindConfig> for PhotonOpKind {
    fn from(v: PhotonOpKindConfig) -> Self {
        match v {
            PhotonOpKindConfig::Subtract => PhotonOpKind::Subtract,
            PhotonOpKindConfig::Add => PhotonOpKind::Add,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeakKindConfig {
    Broadcast,
    Elementwise,
}

impl From<LeakKindConfig> for LeakKind {
    fn from(v: LeakKindConfig) -> Self {
        match v {
            LeakKindConfig::Broadcast => LeakKind::Broadcast,
            LeakKindConfig::Elementwise => LeakKind::Elementwise,
        }
    }
}

// Raw (all-optional) layer deserialized from TOML before presets apply.

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<String>,
    master_seed: Option<u64>,
    grid: Option<RawGrid>,
    run: Option<RawRun>,
    phases: Option<RawPhases>,
    basis: Option<RawBasis>,
    encoding: Option<RawEncoding>,
    readout: Option<RawReadout>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n_modes: Option<Vec<usize>>,
    tau_max: Option<Vec<usize>>,
    n_photon_ops: Option<Vec<usize>>,
    ensemble_sizes: Option<EnsembleAxis>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    realizations: Option<usize>,
    op_kind: Option<PhotonOpKindConfig>,
    identical_modes: Option<bool>,
    active_network: Option<bool>,
    leak_rate: Option<f64>,
    leak_kind: Option<LeakKindConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhases {
    washout: Option<usize>,
    train: Option<usize>,
    test: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBasis {
    max_total_degree: Option<u32>,
    max_delay: Option<usize>,
    max_factors: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEncoding {
    r: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReadout {
    p_threshold: Option<f64>,
}

const KNOWN_KEYS: &[(&str, &[&str])] = &[
    ("", &["experiment", "master_seed", "grid", "run", "phases", "basis", "encoding", "readout"]),
    ("grid", &["n_modes", "tau_max", "n_photon_ops", "ensemble_sizes"]),
    ("run", &["realizations", "op_kind", "identical_modes", "active_network", "leak_rate", "leak_kind"]),
    ("phases", &["washout", "train", "test"]),
    ("basis", &["max_total_degree", "max_delay", "max_factors"]),
    ("encoding", &["r"]),
    ("readout", &["p_threshold"]),
];

fn levenshtein(a: &str, b: &str) -> usize {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut row = vec![i + 1];
        for (j, cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            row.push((prev[j] + cost).min(prev[j + 1] + 1).min(row[j] + 1));
        }
        prev = row;
    }
    prev[b.len()]
}

fn check_unknown_keys(value: &toml::Value) -> Result<()> {
    let table = value.as_table().ok_or_else(|| Error::Config("config root must be a table".into()))?;
    for (section, keys) in KNOWN_KEYS {
        let sub = if section.is_empty() {
            Some(table)
        } else {
            table.get(*section).and_then(|v| v.as_table())
        };
        let Some(sub) = sub else { continue };
        for key in sub.keys() {
            if !keys.contains(&key.as_str()) {
                let nearest = keys.iter().min_by_key(|cand| levenshtein(key, cand)).unwrap();
                let place = if section.is_empty() { "top level".to_string() } else { format!("[{section}]") };
                return Err(Error::Config(format!(
                    "unknown key `{key}` at {place}; nearest valid key is `{nearest}`"
                )));
            }
        }
    }
    Ok(())
}

/// Parses and resolves a config file; all defaults are preset-dependent and
/// echoed into the output metadata.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let value: toml::Value = toml::from_str(text)
        .map_err(|e| Error::Config(format!("malformed config: {e}")))?;
    check_unknown_keys(&value)?;
    let raw: RawConfig = toml::from_str(text)
        .map_err(|e| Error::Config(format!("malformed config: {e}")))?;

    let experiment = match raw.experiment.as_deref() {
        Some("qelm_scan") => ExperimentKind::QelmScan,
        Some("memory_scan") => ExperimentKind::MemoryScan,
        Some("leaky_scan") => ExperimentKind::LeakyScan,
        Some("finite_resources") => ExperimentKind::FiniteResources,
        Some("bound_only") => ExperimentKind::BoundOnly,
        Some("oracle_check") => ExperimentKind::OracleCheck,
        Some(other) => {
            return Err(Error::Config(format!(
                "unknown experiment `{other}`; expected one of qelm_scan, memory_scan, leaky_scan, finite_resources, bound_only, oracle_check"
            )))
        }
        None => return Err(Error::Config("missing required key `experiment`".into())),
    };

    let grid = raw.grid.unwrap_or_default();
    let run = raw.run.unwrap_or_default();
    let phases = raw.phases.unwrap_or_default();
    let basis = raw.basis.unwrap_or_default();
    let encoding = raw.encoding.unwrap_or_default();
    let readout_cfg = raw.readout.unwrap_or_default();

    let n_modes = match (grid.n_modes, experiment) {
        (Some(n), _) => n,
        (None, ExperimentKind::OracleCheck) => vec![2],
        (None, _) => return Err(Error::Config("missing required key `n_modes` in [grid]".into())),
    };
    let tau_max = grid.tau_max.unwrap_or_else(|| match experiment {
        ExperimentKind::MemoryScan => vec![0, 1, 2, 3],
        _ => vec![0],
    });
    let n_photon_ops = grid.n_photon_ops.unwrap_or_else(|| match experiment {
        ExperimentKind::QelmScan => vec![0, 1, 2],
        ExperimentKind::MemoryScan | ExperimentKind::LeakyScan => vec![0, 1],
        ExperimentKind::FiniteResources => vec![1],
        ExperimentKind::BoundOnly | ExperimentKind::OracleCheck => vec![0],
    });
    let ensemble_sizes = match grid.ensemble_sizes {
        Some(EnsembleAxis::Exact(word)) => {
            if word != "exact" {
                return Err(Error::Config(format!(
                    "ensemble_sizes must be \"exact\" or a list of sizes, got `{word}`"
                )));
            }
            None
        }
        Some(EnsembleAxis::Sizes(sizes)) => Some(sizes),
        None => match experiment {
            ExperimentKind::FiniteResources => Some(vec![1_000, 10_000, 100_000, 1_000_000]),
            _ => None,
        },
    };

    let cfg = ExperimentConfig {
        experiment,
        master_seed: raw.master_seed.unwrap_or(0),
        n_modes,
        tau_max,
        n_photon_ops,
        ensemble_sizes,
        op_kind: run.op_kind.unwrap_or(PhotonOpKindConfig::Subtract),
        realizations: run.realizations.unwrap_or(80),
        washout: phases.washout.unwrap_or(match experiment {
            ExperimentKind::QelmScan => 0,
            _ => 100,
        }),
        train: phases.train.unwrap_or(match experiment {
            ExperimentKind::FiniteResources => 10_000,
            _ => 5_000,
        }),
        test: phases.test.unwrap_or(1_000),
        max_total_degree: basis.max_total_degree.unwrap_or(match experiment {
            ExperimentKind::MemoryScan | ExperimentKind::LeakyScan => 4,
            ExperimentKind::BoundOnly => 12,
            _ => 8,
        }),
        max_delay: basis.max_delay,
        max_factors: basis.max_factors.unwrap_or(3),
        p_threshold: readout_cfg.p_threshold.unwrap_or(1e-10),
        squeezing: encoding.r.unwrap_or(0.75),
        identical_modes: run.identical_modes.unwrap_or(false),
        active_network: run.active_network.unwrap_or(false),
        leak_rate: run.leak_rate.unwrap_or(0.001),
        leak_kind: run.leak_kind.unwrap_or(LeakKindConfig::Broadcast),
    };
    validate_config(&cfg)?;
    Ok(cfg)
}

fn validate_config(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.n_modes.is_empty() || cfg.tau_max.is_empty() || cfg.n_photon_ops.is_empty() {
        return Err(Error::Config("grid axes must be nonempty".into()));
    }
    if let Some(sizes) = &cfg.ensemble_sizes {
        if sizes.is_empty() {
            return Err(Error::Config("ensemble size list must be nonempty".into()));
        }
    }
    if cfg.train == 0 || cfg.test == 0 {
        return Err(Error::Config("train and test phases must be positive".into()));
    }
    if cfg.realizations == 0 {
        return Err(Error::Config("realizations must be positive".into()));
    }
    if !(0.0..=1.0).contains(&cfg.leak_rate) {
        return Err(Error::Config("leak_rate must lie in [0, 1]".into()));
    }
    if cfg.squeezing < 0.0 {
        return Err(Error::Config("squeezing must be nonnegative".into()));
    }
    match cfg.experiment.scheme_kind() {
        Some(SchemeKind::Qelm) | Some(SchemeKind::QrcLeaky) => {
            if cfg.tau_max.iter().any(|&t| t != 0) {
                return Err(Error::Config(
                    "memoryless schemes require tau_max = [0]; use memory_scan for preprocessing memory".into(),
                ));
            }
        }
        _ => {}
    }
    for &tau in &cfg.tau_max {
        let delay = cfg.basis_max_delay(tau);
        let needs = delay.max(tau);
        if needs > 0 && cfg.washout < needs {
            return Err(Error::Config(format!(
                "washout {} too short for delays up to {needs}",
                cfg.washout
            )));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn basis_max_delay(&self, tau_max: usize) -> usize {
        match self.max_delay {
            Some(d) => d,
            None => match self.experiment {
                ExperimentKind::LeakyScan => tau_max + 5,
                _ => tau_max,
            },
        }
    }

    /// Hash of the fully resolved configuration (16 hex digits).
    pub fn config_hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canon.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Conventions baked into this implementation, echoed into outputs.
    pub fn conventions() -> BTreeMap<&'static str, &'static str> {
        BTreeMap::from([
            ("coefficient_interval_tau0", "[0.1, 2*pi] (tau_bar = max(tau_max, 1))"),
            ("squeeze_phase", "covariance ellipse rotated by phi/2"),
            ("quadrature_scaling", "x = a + a^dag, vacuum variance 1"),
            ("leak_feedback", "scalar v.o broadcast unless leak_kind = elementwise"),
            ("threshold_samples", "test-phase length"),
            ("photon_op_placement", "modes 1, 2, 3, ... in order"),
        ])
    }
}

/// One realization at one grid point.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub scheme: String,
    pub realization: usize,
    pub n_modes: usize,
    pub tau_max: usize,
    pub n_photon_ops: usize,
    pub op_kind: String,
    /// "exact" or the ensemble size.
    pub ensemble: String,
    pub bound: f64,
    pub total: f64,
    pub delta_c: f64,
    pub cross_term_total: f64,
    pub threshold: f64,
    pub per_delay: BTreeMap<usize, f64>,
    pub per_degree: BTreeMap<u32, f64>,
    pub n_features: usize,
    pub washout: usize,
    pub train: usize,
    pub test: usize,
    pub p_threshold: f64,
    pub master_seed: u64,
    pub software_version: String,
    pub config_hash: String,
    pub regularized_draws: usize,
    pub retried: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridPoint {
    pub n_modes: usize,
    pub tau_max: usize,
    pub n_photon_ops: usize,
    /// 0 encodes exact observables.
    pub ensemble: u64,
}

impl GridPoint {
    /// Coordinates keying the physical system (encoder, network, input);
    /// the ensemble size is excluded so every M shares the same reservoir
    /// within a realization.
    fn system_coords(&self) -> [u64; 3] {
        [self.n_modes as u64, self.tau_max as u64, self.n_photon_ops as u64]
    }

    fn ensemble_label(&self) -> String {
        if self.ensemble == 0 {
            "exact".to_string()
        } else {
            self.ensemble.to_string()
        }
    }
}

/// Detailed outcome of a single realization, for library callers.
#[derive(Debug, Clone)]
pub struct RealizationOutcome {
    pub row: ResultRow,
    pub report: Option<CapacityReport>,
    pub bound_report: CapacityReport,
}

/// Runs one realization at one grid point; deterministic in
/// (config, master seed, grid point, realization index).
pub fn run_realization(cfg: &ExperimentConfig, point: GridPoint, realization: usize) -> Result<RealizationOutcome> {
    let mut attempt = 0u32;
    loop {
        match try_realization(cfg, point, realization, attempt) {
            Err(Error::HeraldingImpossible { .. }) if attempt == 0 => attempt = 1,
            other => {
                return other.map(|mut outcome| {
                    outcome.row.retried = attempt > 0;
                    outcome
                })
            }
        }
    }
}

fn try_realization(
    cfg: &ExperimentConfig,
    point: GridPoint,
    realization: usize,
    attempt: u32,
) -> Result<RealizationOutcome> {
    let mut coords = point.system_coords().to_vec();
    coords.push(realization as u64);
    if attempt > 0 {
        coords.push(attempt as u64);
    }
    let mut noise_coords = coords.clone();
    noise_coords.push(point.ensemble);

    let mut input_rng = derive_rng(cfg.master_seed, purpose::INPUT, &coords);
    let input_seed: u64 = input_rng.gen();
    let input = InputSeries::generate(cfg.washout, cfg.train, cfg.test, input_seed)?;

    let mut coeff_rng = derive_rng(cfg.master_seed, purpose::COEFFICIENTS, &coords);
    let enc = EncodingConfig::with_rng(point.n_modes, cfg.squeezing, point.tau_max, cfg.identical_modes, &mut coeff_rng)?;

    let basis = enumerate_basis(cfg.max_total_degree, cfg.basis_max_delay(point.tau_max), cfg.max_factors);
    let bound_report = readout::gaussian_bound(&enc, &input, &basis, cfg.p_threshold)?;

    let (report, scheme_label, n_features, regularized) = match cfg.experiment.scheme_kind() {
        None => (None, "bound".to_string(), bound_report.n_features, 0),
        Some(kind) => {
            let mut net_rng = derive_rng(cfg.master_seed, purpose::NETWORK, &coords);
            let network = if cfg.active_network {
                gaussian::random_active_symplectic(point.n_modes, 0.5, &mut net_rng)
            } else {
                gaussian::random_passive_symplectic(point.n_modes, &mut net_rng)
            };

            let mut scheme = SchemeConfig::exact(kind, point.n_photon_ops, cfg.op_kind.into());
            scheme.leak_rate = cfg.leak_rate;
            scheme.leak_kind = cfg.leak_kind.into();
            if kind == SchemeKind::QrcLeaky {
                let m = point.n_modes * (point.n_modes + 1) / 2;
                let mut leak_rng = derive_rng(cfg.master_seed, purpose::LEAK, &coords);
                scheme.leak_vector = Some((0..m).map(|_| leak_rng.gen_range(0.0..1.0)).collect());
            }
            if point.ensemble > 0 {
                scheme.sampling = SamplingConfig::with_ensemble(point.ensemble);
            }

            let mut wishart_rng = derive_rng(cfg.master_seed, purpose::WISHART, &noise_coords);
            let run = reservoir::run_scheme(&scheme, &enc, &network, &input, &mut wishart_rng)?;
            let report = readout::ipc_suite(&run, &basis, &input, cfg.p_threshold)?;
            let label = match kind {
                SchemeKind::Qelm => "qelm",
                SchemeKind::QrcPreprocessing => "qrc_preprocessing",
                SchemeKind::QrcLeaky => "qrc_leaky",
            };
            (Some(report), label.to_string(), run.n_features, run.regularized_draws)
        }
    };

    let (total, cross, theta, per_delay, per_degree) = match &report {
        Some(r) => (r.total, r.cross_term_total, r.threshold, r.per_delay.clone(), r.per_degree.clone()),
        None => (
            bound_report.total,
            bound_report.cross_term_total,
            bound_report.threshold,
            bound_report.per_delay.clone(),
            bound_report.per_degree.clone(),
        ),
    };

    let row = ResultRow {
        experiment: cfg.experiment.as_str().to_string(),
        scheme: scheme_label,
        realization,
        n_modes: point.n_modes,
        tau_max: point.tau_max,
        n_photon_ops: point.n_photon_ops,
        op_kind: match cfg.op_kind {
            PhotonOpKindConfig::Subtract => "subtract".to_string(),
            PhotonOpKindConfig::Add => "add".to_string(),
        },
        ensemble: point.ensemble_label(),
        bound: bound_report.total,
        total,
        delta_c: readout::excess_capacity(total, bound_report.total),
        cross_term_total: cross,
        threshold: theta,
        per_delay,
        per_degree,
        n_features,
        washout: cfg.washout,
        train: cfg.train,
        test: cfg.test,
        p_threshold: cfg.p_threshold,
        master_seed: cfg.master_seed,
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.config_hash(),
        regularized_draws: regularized,
        retried: false,
    };

    Ok(RealizationOutcome { row, report, bound_report })
}

/// All grid points of a config in canonical order.
pub fn grid_points(cfg: &ExperimentConfig) -> Vec<GridPoint> {
    let ensembles: Vec<u64> = match &cfg.ensemble_sizes {
        None => vec![0],
        Some(sizes) => sizes.clone(),
    };
    let mut points = Vec::new();
    for &n in &cfg.n_modes {
        for &tau in &cfg.tau_max {
            for &ops in &cfg.n_photon_ops {
                for &m in &ensembles {
                    points.push(GridPoint { n_modes: n, tau_max: tau, n_photon_ops: ops, ensemble: m });
                }
            }
        }
    }
    points
}

/// Per-grid-point mean and standard error over realizations.
#[derive(Debug, Clone, Serialize)]
pub struct GridSummary {
    pub n_modes: usize,
    pub tau_max: usize,
    pub n_photon_ops: usize,
    pub ensemble: String,
    pub realizations: usize,
    pub mean_total: f64,
    pub se_total: f64,
    pub mean_bound: f64,
    pub se_bound: f64,
    pub mean_delta_c: f64,
    pub se_delta_c: f64,
    pub mean_cross_term: f64,
    pub se_cross_term: f64,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub experiment: String,
    pub software_version: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub conventions: BTreeMap<&'static str, &'static str>,
    pub grid: Vec<GridSummary>,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs the whole grid; rows come back sorted by (grid point, realization).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(Vec<ResultRow>, Summary)> {
    if cfg.experiment == ExperimentKind::OracleCheck {
        return Err(Error::Config(
            "experiment oracle_check has no capacity grid; use the oracle-check subcommand".into(),
        ));
    }
    let points = grid_points(cfg);
    let jobs: Vec<(GridPoint, usize)> = points
        .iter()
        .flat_map(|&p| (0..cfg.realizations).map(move |r| (p, r)))
        .collect();

    let mut outcomes: Vec<(GridPoint, ResultRow)> = jobs
        .par_iter()
        .map(|&(point, realization)| {
            run_realization(cfg, point, realization).map(|o| (point, o.row))
        })
        .collect::<Result<_>>()?;
    outcomes.sort_by_key(|(point, row)| (*point, row.realization));

    let mut grid = Vec::new();
    for &point in &points {
        let rows: Vec<&ResultRow> = outcomes
            .iter()
            .filter(|(p, _)| *p == point)
            .map(|(_, r)| r)
            .collect();
        let totals: Vec<f64> = rows.iter().map(|r| r.total).collect();
        let bounds: Vec<f64> = rows.iter().map(|r| r.bound).collect();
        let deltas: Vec<f64> = rows.iter().map(|r| r.delta_c).collect();
        let crosses: Vec<f64> = rows.iter().map(|r| r.cross_term_total).collect();
        let (mean_total, se_total) = mean_se(&totals);
        let (mean_bound, se_bound) = mean_se(&bounds);
        let (mean_delta_c, se_delta_c) = mean_se(&deltas);
        let (mean_cross_term, se_cross_term) = mean_se(&crosses);
        grid.push(GridSummary {
            n_modes: point.n_modes,
            tau_max: point.tau_max,
            n_photon_ops: point.n_photon_ops,
            ensemble: point.ensemble_label(),
            realizations: rows.len(),
            mean_total,
            se_total,
            mean_bound,
            se_bound,
            mean_delta_c,
            se_delta_c,
            mean_cross_term,
            se_cross_term,
        });
    }

    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        experiment: cfg.experiment.as_str().to_string(),
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.config_hash(),
        config: cfg.clone(),
        conventions: ExperimentConfig::conventions(),
        grid,
    };
    let rows = outcomes.into_iter().map(|(_, r)| r).collect();
    Ok((rows, summary))
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_map<K: std::fmt::Display>(map: &BTreeMap<K, f64>) -> String {
    map.iter()
        .map(|(k, v)| format!("{k}:{}", fmt_f64(*v)))
        .collect::<Vec<_>>()
        .join(";")
}

pub const CSV_HEADER: &str = "experiment,scheme,realization,n_modes,tau_max,n_photon_ops,op_kind,ensemble,bound,total,delta_c,cross_term_total,threshold,per_delay,per_degree,n_features,washout,train,test,p_threshold,master_seed,software_version,config_hash,regularized_draws,retried";

/// Serializes rows as CSV, floating point at 17 significant digits.
pub fn emit_csv(rows: &[ResultRow]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.scheme,
            r.realization,
            r.n_modes,
            r.tau_max,
            r.n_photon_ops,
            r.op_kind,
            r.ensemble,
            fmt_f64(r.bound),
            fmt_f64(r.total),
            fmt_f64(r.delta_c),
            fmt_f64(r.cross_term_total),
            fmt_f64(r.threshold),
            fmt_map(&r.per_delay),
            fmt_map(&r.per_degree),
            r.n_features,
            r.washout,
            r.train,
            r.test,
            fmt_f64(r.p_threshold),
            r.master_seed,
            r.software_version,
            r.config_hash,
            r.regularized_draws,
            r.retried,
        );
    }
    out
}

pub fn emit_summary(summary: &Summary) -> Result<String> {
    serde_json::to_string_pretty(summary).map_err(|e| Error::Numerical(e.to_string()))
}
