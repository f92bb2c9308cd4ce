//! End-to-end experiment driver: declarative config, seeded runs, sweeps
//! and artifact emission.
//!
//! A single TOML file describes signal generation, topology, network and
//! learner; every random choice draws from a stream derived from one master
//! seed, so a config plus a seed pins every artifact byte. Each artifact
//! embeds a 16-hex-digit hash of the effective config (after CLI overrides)
//! so outputs produced under different configs are detectable.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io;
use crate::learning::{greedy_train, greedy_train_resampled, nmse, LearnerConfig, LearningRecord};
use crate::mackey_glass::{
    apply_standardization, downsample, integrate_mg, make_prediction_pairs, standardize, MgParams,
    TimeSeries,
};
use crate::network::{
    calibrate_alpha, init_phases, injection_weights, readout, run, InjectionKind, RnnConfig,
    RnnState,
};
use crate::plot;
use crate::topology::optics::{compute_doe_matrix, DoeMask, OpticalSystemSpec};
use crate::topology::{
    coupling_stats, normalize_matrix, synth_kernel_matrix, CouplingMatrix, NormalizeMode,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MgSection {
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub tau: f64,
    pub dt: f64,
    pub x0: f64,
    pub burn_in: usize,
}

impl Default for MgSection {
    fn default() -> Self {
        MgSection { a: 0.2, b: 0.1, p: 10.0, tau: 17.0, dt: 0.1, x0: 1.2, burn_in: 10_000 }
    }
}

impl MgSection {
    pub fn params(&self) -> MgParams {
        MgParams { a: self.a, b: self.b, p: self.p, tau: self.tau, dt: self.dt, x0: self.x0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub train_len: usize,
    /// Transient outputs excluded from the training error window.
    pub discard: usize,
    pub test_len: usize,
    /// Keep every k-th sample of the generated series before splitting.
    pub downsample: usize,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection { train_len: 500, discard: 30, test_len: 4500, downsample: 1 }
    }
}

impl DatasetSection {
    /// Samples needed after downsampling: both windows, the discard run-in
    /// and the look-ahead target of the last test input.
    pub fn samples_needed(&self) -> usize {
        self.discard + self.train_len + self.test_len + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyKind {
    #[default]
    Synthetic,
    Optical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MaskKind {
    /// Binary 0/pi grating with hard transitions; heterogeneous orders.
    #[default]
    Binary,
    /// No element: imaging identity.
    Flat,
    /// Idealized uniform 3x3 fan-out.
    Orders3x3,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpticalSection {
    pub wavelength: f64,
    pub slm_pitch: f64,
    pub samples_per_pixel: usize,
    pub pad_pixels: usize,
    pub mask: MaskKind,
    /// Phase-pi fraction of the binary grating period.
    pub transition: f64,
    pub profile_side: usize,
    pub shift_per_pixel: [f64; 2],
    pub propagation_distances: [f64; 2],
    pub aperture_orders: usize,
    pub threshold_rel: f64,
}

impl Default for OpticalSection {
    fn default() -> Self {
        let spec = OpticalSystemSpec::default();
        OpticalSection {
            wavelength: spec.wavelength,
            slm_pitch: spec.slm_pitch,
            samples_per_pixel: spec.samples_per_pixel,
            pad_pixels: spec.pad_pixels,
            mask: MaskKind::Binary,
            transition: 0.232,
            profile_side: 64,
            shift_per_pixel: [spec.shift_per_pixel.0, spec.shift_per_pixel.1],
            propagation_distances: spec.propagation_distances,
            aperture_orders: spec.aperture_orders,
            threshold_rel: spec.threshold_rel,
        }
    }
}

impl OpticalSection {
    pub fn system_spec(&self, grid_side: usize) -> Result<OpticalSystemSpec> {
        let mask = match self.mask {
            MaskKind::Binary => DoeMask::binary_grating(self.transition, self.profile_side)?,
            MaskKind::Flat => DoeMask::Flat,
            MaskKind::Orders3x3 => DoeMask::orders_3x3(),
        };
        Ok(OpticalSystemSpec {
            wavelength: self.wavelength,
            slm_pitch: self.slm_pitch,
            grid_side,
            samples_per_pixel: self.samples_per_pixel,
            pad_pixels: self.pad_pixels,
            mask,
            shift_per_pixel: (self.shift_per_pixel[0], self.shift_per_pixel[1]),
            propagation_distances: self.propagation_distances,
            aperture_orders: self.aperture_orders,
            threshold_rel: self.threshold_rel,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologySection {
    pub kind: TopologyKind,
    pub grid_side: usize,
    pub kernel_radius: usize,
    pub heterogeneity: f64,
    pub normalize: NormalizeMode,
    pub optical: OpticalSection,
}

impl Default for TopologySection {
    fn default() -> Self {
        TopologySection {
            kind: TopologyKind::Synthetic,
            grid_side: 30,
            kernel_radius: 1,
            heterogeneity: 0.85,
            normalize: NormalizeMode::MaxRowSum,
            optical: OpticalSection::default(),
        }
    }
}

/// Camera gain: fitted from a probe run, or pinned.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum AlphaSetting {
    #[default]
    Auto,
    Fixed(f64),
}

impl Serialize for AlphaSetting {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            AlphaSetting::Auto => serializer.serialize_str("auto"),
            AlphaSetting::Fixed(v) => serializer.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for AlphaSetting {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Number(v) => Ok(AlphaSetting::Fixed(v)),
            Repr::Text(s) if s == "auto" => Ok(AlphaSetting::Auto),
            Repr::Text(s) => Err(serde::de::Error::custom(format!(
                "alpha must be a number or \"auto\", got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub beta: f64,
    pub gamma: f64,
    /// Fraction of nodes offset past the cosine extremum.
    pub mu: f64,
    /// Base phase offset in units of pi.
    pub theta0_pi: f64,
    /// Extra offset of the mu-fraction, in units of pi.
    pub delta_theta_pi: f64,
    pub injection: InjectionKind,
    pub alpha: AlphaSetting,
    pub quantize_8bit: bool,
    pub noise_std: f64,
}

impl Default for NetworkSection {
    fn default() -> Self {
        NetworkSection {
            beta: 0.8,
            gamma: 0.4,
            mu: 0.45,
            theta0_pi: 0.17,
            delta_theta_pi: 0.26,
            injection: InjectionKind::Uniform,
            alpha: AlphaSetting::Auto,
            quantize_8bit: false,
            noise_std: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerSection {
    pub max_iterations: usize,
    pub strict_improvement: bool,
}

impl Default for LearnerSection {
    fn default() -> Self {
        LearnerSection { max_iterations: 5000, strict_improvement: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Grid values; an empty list means "use the configured value".
    pub mu: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Independent repetitions per grid point with shifted run seeds.
    pub repetitions: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedsSection {
    pub master: u64,
}

impl Default for SeedsSection {
    fn default() -> Self {
        SeedsSection { master: 42 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mg: MgSection,
    pub dataset: DatasetSection,
    pub topology: TopologySection,
    pub network: NetworkSection,
    pub learner: LearnerSection,
    pub sweep: SweepSection,
    pub seeds: SeedsSection,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Canonical serialization of the effective config; the basis of the
    /// artifact hash, so overrides change the hash.
    pub fn canonical_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// First 16 hex digits of the SHA-256 of the canonical form.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.canonical_toml()?.as_bytes());
        let mut hex = String::with_capacity(16);
        for byte in digest.iter().take(8) {
            let _ = write!(hex, "{byte:02x}");
        }
        Ok(hex)
    }

    pub fn validate(&self) -> Result<()> {
        self.mg.params().validate()?;
        let d = &self.dataset;
        if d.train_len == 0 || d.test_len == 0 {
            return Err(Error::Config("train_len and test_len must be >= 1".into()));
        }
        if d.downsample == 0 {
            return Err(Error::Config("downsample factor must be >= 1".into()));
        }
        let t = &self.topology;
        if t.grid_side == 0 {
            return Err(Error::Config("grid_side must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&t.heterogeneity) {
            return Err(Error::Config("heterogeneity must lie in [0, 1]".into()));
        }
        if t.kind == TopologyKind::Optical {
            t.optical.system_spec(t.grid_side)?.validate()?;
        }
        let n = &self.network;
        if !(0.0..=1.0).contains(&n.mu) {
            return Err(Error::Config("mu must lie in [0, 1]".into()));
        }
        for (name, v) in [("beta", n.beta), ("gamma", n.gamma), ("noise_std", n.noise_std)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("{name} must be finite and >= 0")));
            }
        }
        if let AlphaSetting::Fixed(alpha) = n.alpha {
            if !alpha.is_finite() || alpha <= 0.0 {
                return Err(Error::Config("fixed alpha must be positive".into()));
            }
        }
        if self.learner.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if self.sweep.repetitions == 0 && !self.sweep_is_empty() {
            return Err(Error::Config("sweep repetitions must be >= 1".into()));
        }
        Ok(())
    }

    fn sweep_is_empty(&self) -> bool {
        self.sweep.mu.is_empty() && self.sweep.beta.is_empty() && self.sweep.gamma.is_empty()
    }

    pub fn learner_config(&self, seed: u64) -> LearnerConfig {
        LearnerConfig {
            max_iterations: self.learner.max_iterations,
            seed,
            discard: self.dataset.discard,
            strict_improvement: self.learner.strict_improvement,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent sub-seeds for every random choice of one run, derived from
/// the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSeeds {
    pub topology: u64,
    pub phases: u64,
    pub injection: u64,
    pub learner: u64,
    pub noise: u64,
}

impl RunSeeds {
    pub fn derive(master: u64) -> Self {
        let mut state = master;
        RunSeeds {
            topology: splitmix64(&mut state),
            phases: splitmix64(&mut state),
            injection: splitmix64(&mut state),
            learner: splitmix64(&mut state),
            noise: splitmix64(&mut state),
        }
    }

    /// Repetition `r` of a sweep keeps the physical system (topology,
    /// injection) and re-rolls the run randomness, so rep 0 reproduces a
    /// plain training run.
    pub fn repetition(&self, r: u64) -> Self {
        RunSeeds {
            topology: self.topology,
            phases: self.phases.wrapping_add(r),
            injection: self.injection,
            learner: self.learner.wrapping_add(r),
            noise: self.noise.wrapping_add(r),
        }
    }
}

/// Drive signal and standardized targets of one experiment.
pub struct PreparedData {
    /// Whole drive sequence, `discard + train + test` samples, in native
    /// (positive) units.
    pub full_inputs: TimeSeries,
    /// Training drive window: first `discard + train` samples.
    pub train_inputs: TimeSeries,
    /// One-step targets aligned with every training step, standardized by
    /// the scored-window statistics.
    pub train_target_full: TimeSeries,
    /// One-step targets of the test window under the same transform.
    pub test_target: TimeSeries,
    /// Raw generated series at dataset resolution.
    pub raw_series: TimeSeries,
    pub target_mean: f64,
    pub target_std: f64,
}

/// Generate the chaotic series and cut the training and test windows.
///
/// The drive stays in its native positive units: every term of a node's
/// phase argument is then nonnegative, which is what pins the two offset
/// groups to opposite slopes of the cosine. Targets are standardized by the
/// scored training-window statistics only, and the same affine transform is
/// reused verbatim on the test targets.
pub fn prepare_data(config: &ExperimentConfig) -> Result<PreparedData> {
    let d = &config.dataset;
    let needed = d.samples_needed();
    let raw_needed = (needed - 1) * d.downsample + 1;
    let raw = integrate_mg(&config.mg.params(), raw_needed, config.mg.burn_in)?;
    let series = downsample(&raw, d.downsample)?;
    debug_assert_eq!(series.len(), needed);

    let dataset = make_prediction_pairs(&series, d.train_len, d.discard, d.test_len)?;
    let (_, target_mean, target_std) = standardize(&dataset.train_targets)?;

    // Targets for every training step, including the discarded run-in, so
    // the scored tail aligns with the trajectory.
    let train_target_raw = series.slice(1, d.discard + d.train_len)?;
    let train_target_full = apply_standardization(&train_target_raw, target_mean, target_std)?;
    let test_target = apply_standardization(&dataset.test_targets, target_mean, target_std)?;

    Ok(PreparedData {
        full_inputs: dataset.full_inputs()?,
        train_inputs: dataset.train_inputs.clone(),
        train_target_full,
        test_target,
        raw_series: series,
        target_mean,
        target_std,
    })
}

/// Build and normalize the coupling matrix described by the config.
pub fn build_topology(
    config: &ExperimentConfig,
    topology_seed: u64,
) -> Result<(CouplingMatrix, f64)> {
    let t = &config.topology;
    let matrix = match t.kind {
        TopologyKind::Synthetic => {
            synth_kernel_matrix(t.grid_side, t.kernel_radius, t.heterogeneity, topology_seed)?
        }
        TopologyKind::Optical => compute_doe_matrix(&t.optical.system_spec(t.grid_side)?)?,
    };
    normalize_matrix(&matrix, t.normalize)
}

/// Everything a finished training run leaves behind.
pub struct TrainOutcome {
    pub summary: RunSummary,
    pub record: LearningRecord,
    pub coupling: CouplingMatrix,
    pub prediction: io::PredictionTable,
}

/// Headline numbers of one run. Wall time is runtime-dependent and lives
/// outside the serialized summary so artifacts stay byte-reproducible.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub n_nodes: usize,
    pub alpha: f64,
    pub epsilon_initial: f64,
    pub epsilon_train: f64,
    pub epsilon_test: f64,
    pub iterations: usize,
    pub accepted_flips: usize,
    #[serde(skip)]
    pub wall_time_seconds: f64,
}

/// One seeded end-to-end run: generate data, build the physical system,
/// calibrate the camera gain, drive the network over the full sequence,
/// train the readout on the training window and score the held-out window
/// of the same continuous run.
pub fn run_training(config: &ExperimentConfig, seeds: &RunSeeds) -> Result<TrainOutcome> {
    config.validate()?;
    let data = prepare_data(config)?;
    let (coupling, _scale) = build_topology(config, seeds.topology)?;
    let n = coupling.n_nodes();
    let net = &config.network;
    let pi = std::f64::consts::PI;

    let mut rnn = RnnConfig {
        beta: net.beta,
        gamma: net.gamma,
        theta: init_phases(n, net.mu, net.theta0_pi * pi, net.delta_theta_pi * pi, seeds.phases)?,
        w_inj: injection_weights(n, net.injection, seeds.injection),
        alpha: 1.0,
        coupling,
        quantize_8bit: net.quantize_8bit,
        noise_std: net.noise_std,
        noise_seed: seeds.noise,
    };
    rnn.alpha = match net.alpha {
        AlphaSetting::Auto => calibrate_alpha(&rnn, &data.train_inputs)?,
        AlphaSetting::Fixed(v) => v,
    };

    let (trajectory, _) = run(&rnn, &RnnState::zeros(n), &data.full_inputs)?;
    let train_len = config.dataset.discard + config.dataset.train_len;
    let traj_train = trajectory.window(0, train_len)?;
    let traj_test = trajectory.window(train_len, config.dataset.test_len)?;

    let learner = config.learner_config(seeds.learner);
    let record = if net.noise_std > 0.0 {
        // Noisy camera: the cached trajectory would freeze one noise draw,
        // so re-drive the network with a fresh stream every iteration.
        let base = rnn.clone();
        let initial = RnnState::zeros(n);
        let train_inputs = data.train_inputs.clone();
        greedy_train_resampled(
            move |k| {
                let mut cfg = base.clone();
                cfg.noise_seed = seeds.noise.wrapping_add(k);
                run(&cfg, &initial, &train_inputs).map(|(t, _)| t)
            },
            &data.train_target_full,
            &learner,
        )?
    } else {
        greedy_train(&traj_train, &data.train_target_full, &learner)?
    };

    // Test scoring freezes every transform on training data: the output
    // inversion, offset and scale come from the scored training outputs of
    // the final weights, so nothing is refit on the held-out window.
    let train_y = readout(&traj_train, &record.final_weights, 1.0)?;
    let scored_y = train_y.slice(config.dataset.discard, config.dataset.train_len)?;
    let (y_mean, y_std) = scored_y.moments();
    let raw_out = readout(&traj_test, &record.final_weights, 1.0)?;
    let (epsilon_test, normalized_out) = if y_std > 0.0 {
        let mapped: Vec<f64> = raw_out.values().iter().map(|v| -(v - y_mean) / y_std).collect();
        let y_tilde = TimeSeries::new(mapped, raw_out.dt_effective())?;
        (nmse(&data.test_target, &y_tilde)?, y_tilde.values().to_vec())
    } else {
        (f64::INFINITY, vec![0.0; raw_out.len()])
    };
    let prediction = io::PredictionTable {
        inputs: data.full_inputs.values()[train_len..].to_vec(),
        targets: data.test_target.values().to_vec(),
        raw_outputs: raw_out.values().to_vec(),
        normalized_outputs: normalized_out,
    };

    let summary = RunSummary {
        config_hash: config.hash()?,
        n_nodes: n,
        alpha: rnn.alpha,
        epsilon_initial: record.initial_epsilon,
        epsilon_train: record.final_epsilon,
        epsilon_test,
        iterations: record.steps.len(),
        accepted_flips: record.accepted_count(),
        wall_time_seconds: 0.0,
    };
    Ok(TrainOutcome { summary, record, coupling: rnn.coupling, prediction })
}

fn hash_comment(config: &ExperimentConfig) -> Result<Vec<String>> {
    Ok(vec![format!("config_hash {}", config.hash()?)])
}

/// Generate the benchmark series at dataset resolution and write it as CSV.
pub fn cmd_mg(config: &ExperimentConfig, out_dir: &Path) -> Result<PathBuf> {
    config.validate()?;
    let data = prepare_data(config)?;
    let path = out_dir.join("mg_series.csv");
    let mut comments = hash_comment(config)?;
    comments.push(format!(
        "mg a={} b={} p={} tau={} dt={} x0={} burn_in={}",
        config.mg.a,
        config.mg.b,
        config.mg.p,
        config.mg.tau,
        config.mg.dt,
        config.mg.x0,
        config.mg.burn_in
    ));
    comments.push(format!("downsample {}", config.dataset.downsample));
    io::write_time_series(&path, &data.raw_series, &comments)?;
    println!(
        "wrote {} ({} samples, dt_effective {})",
        path.display(),
        data.raw_series.len(),
        data.raw_series.dt_effective()
    );
    Ok(path)
}

/// Build the coupling matrix and write it with its heterogeneity statistics.
pub fn cmd_doe(config: &ExperimentConfig, out_dir: &Path) -> Result<PathBuf> {
    config.validate()?;
    let seeds = RunSeeds::derive(config.seeds.master);
    let (matrix, scale) = build_topology(config, seeds.topology)?;
    let stats = coupling_stats(&matrix);

    let matrix_path = out_dir.join("coupling.txt");
    let mut comments = hash_comment(config)?;
    comments.push(format!("normalization_scale {scale}"));
    io::write_coupling_matrix(&matrix_path, &matrix, &comments)?;

    let stats_path = out_dir.join("coupling_stats.csv");
    let mut stat_comments = hash_comment(config)?;
    stat_comments.push(format!("n_nodes {}", stats.n_nodes));
    stat_comments.push(format!("kernel_radius {}", stats.kernel_radius));
    stat_comments.push(format!("nnz {}", stats.nnz));
    stat_comments.push(format!("max_entries_per_column {}", stats.max_entries_per_column));
    stat_comments.push(format!("interior_entries_min {}", stats.interior_entries_min));
    stat_comments.push(format!("interior_entries_max {}", stats.interior_entries_max));
    stat_comments.push(format!("diag_dominance_min {}", stats.diag_dominance_min));
    let rows: Vec<String> = stats
        .offset_stats
        .iter()
        .map(|o| format!("{},{},{},{},{},{}", o.dr, o.dc, o.count, o.mean, o.std, o.cv))
        .collect();
    io::write_csv(&stats_path, &stat_comments, "dr,dc,count,mean,std,cv", &rows)?;

    println!(
        "wrote {} and {} ({} nodes, radius {}, {} entries)",
        matrix_path.display(),
        stats_path.display(),
        stats.n_nodes,
        stats.kernel_radius,
        stats.nnz
    );
    Ok(matrix_path)
}

/// Write the artifact set of a finished training run: learning log, test
/// prediction table, final weights, summary and optional plots.
pub fn write_train_artifacts(
    config: &ExperimentConfig,
    outcome: &TrainOutcome,
    out_dir: &Path,
    emit_plots: bool,
) -> Result<()> {
    let comments = hash_comment(config)?;
    io::write_learning_record(&out_dir.join("learning_record.csv"), &outcome.record, &comments)?;
    io::write_prediction_table(&out_dir.join("prediction.csv"), &outcome.prediction, &comments)?;
    io::write_boolean_weights(&out_dir.join("weights.txt"), &outcome.record.final_weights)?;
    let summary_toml =
        toml::to_string(&outcome.summary).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(out_dir.join("summary.toml"), summary_toml)?;

    if emit_plots {
        plot::plot_learning_curve(&out_dir.join("learning_curve.svg"), &outcome.record, &comments)?;
        plot::plot_prediction_overlay(
            &out_dir.join("prediction.svg"),
            &outcome.prediction.targets,
            &outcome.prediction.normalized_outputs,
            300,
            &comments,
        )?;
    }
    Ok(())
}

/// Full training run with artifacts and progress reporting.
pub fn cmd_train(
    config: &ExperimentConfig,
    out_dir: &Path,
    emit_plots: bool,
) -> Result<RunSummary> {
    let started = Instant::now();
    let seeds = RunSeeds::derive(config.seeds.master);
    let mut outcome = run_training(config, &seeds)?;
    outcome.summary.wall_time_seconds = started.elapsed().as_secs_f64();
    write_train_artifacts(config, &outcome, out_dir, emit_plots)?;

    for step in outcome.record.steps.iter().filter(|s| s.k % 250 == 0) {
        println!("iteration {:>5}: error {:.6}", step.k, step.epsilon_accepted);
    }
    let s = &outcome.summary;
    println!(
        "train error {:.6} (initial {:.6}), test error {:.6}, {} accepted flips of {} iterations, alpha {:.4}",
        s.epsilon_train, s.epsilon_initial, s.epsilon_test, s.accepted_flips, s.iterations, s.alpha
    );
    println!("wall time {:.2}s", s.wall_time_seconds);
    Ok(outcome.summary)
}

/// One sweep row: grid point, effective learner seed, errors.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub mu: f64,
    pub beta: f64,
    pub gamma: f64,
    pub repetition: u64,
    pub seed: u64,
    pub epsilon_train: f64,
    pub epsilon_test: f64,
}

/// Run the configured grid, one seeded run per (point, repetition), in
/// parallel. Rows come back in deterministic grid order regardless of the
/// worker count.
pub fn run_sweep(config: &ExperimentConfig, workers: usize) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let one_or = |grid: &[f64], fallback: f64| -> Vec<f64> {
        if grid.is_empty() {
            vec![fallback]
        } else {
            grid.to_vec()
        }
    };
    let mu_grid = one_or(&config.sweep.mu, config.network.mu);
    let beta_grid = one_or(&config.sweep.beta, config.network.beta);
    let gamma_grid = one_or(&config.sweep.gamma, config.network.gamma);
    let reps = config.sweep.repetitions.max(1) as u64;

    let mut jobs = Vec::new();
    for &mu in &mu_grid {
        for &beta in &beta_grid {
            for &gamma in &gamma_grid {
                for r in 0..reps {
                    jobs.push((mu, beta, gamma, r));
                }
            }
        }
    }

    let base_seeds = RunSeeds::derive(config.seeds.master);
    let run_one = |&(mu, beta, gamma, r): &(f64, f64, f64, u64)| -> Result<SweepRow> {
        let mut point = config.clone();
        point.network.mu = mu;
        point.network.beta = beta;
        point.network.gamma = gamma;
        let seeds = base_seeds.repetition(r);
        let outcome = run_training(&point, &seeds)?;
        Ok(SweepRow {
            mu,
            beta,
            gamma,
            repetition: r,
            seed: seeds.learner,
            epsilon_train: outcome.summary.epsilon_train,
            epsilon_test: outcome.summary.epsilon_test,
        })
    };

    let results: Vec<Result<SweepRow>> = if workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run_one).collect())
    } else {
        jobs.par_iter().map(run_one).collect()
    };
    results.into_iter().collect()
}

/// Sweep the grid and write `sweep.csv` with per-point aggregates in the
/// header comments.
pub fn cmd_sweep(config: &ExperimentConfig, out_dir: &Path, workers: usize) -> Result<PathBuf> {
    let rows = run_sweep(config, workers)?;
    let mut comments = hash_comment(config)?;

    // Aggregate over repetitions per grid point, in row order.
    let mut seen: Vec<(f64, f64, f64)> = Vec::new();
    for row in &rows {
        let key = (row.mu, row.beta, row.gamma);
        if !seen.contains(&key) {
            seen.push(key);
        }
    }
    for (mu, beta, gamma) in seen {
        let group: Vec<&SweepRow> =
            rows.iter().filter(|r| (r.mu, r.beta, r.gamma) == (mu, beta, gamma)).collect();
        let count = group.len() as f64;
        let mean_train = group.iter().map(|r| r.epsilon_train).sum::<f64>() / count;
        let min_train = group.iter().map(|r| r.epsilon_train).fold(f64::INFINITY, f64::min);
        let mean_test = group.iter().map(|r| r.epsilon_test).sum::<f64>() / count;
        let min_test = group.iter().map(|r| r.epsilon_test).fold(f64::INFINITY, f64::min);
        comments.push(format!(
            "aggregate mu={mu} beta={beta} gamma={gamma} mean_train={mean_train} \
             min_train={min_train} mean_test={mean_test} min_test={min_test}"
        ));
    }

    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{}",
                r.mu, r.beta, r.gamma, r.repetition, r.seed, r.epsilon_train, r.epsilon_test
            )
        })
        .collect();
    let path = out_dir.join("sweep.csv");
    io::write_csv(
        &path,
        &comments,
        "mu,beta,gamma,repetition,seed,epsilon_train,epsilon_test",
        &lines,
    )?;
    for line in &lines {
        println!("{line}");
    }
    println!("wrote {}", path.display());
    Ok(path)
}
