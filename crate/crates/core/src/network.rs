//! Coupled Ikeda-map network dynamics and the Boolean mirror readout.
//!
//! Each node is one modulator pixel. A step of the loop follows the light
//! path: the pixel's drive phase is `beta * s_i + gamma * w_inj_i * u + theta_i`,
//! the modulator turns it into a field amplitude `e_i = cos(phi_i)`, the
//! diffractive element mixes neighboring fields, and the camera detects
//! `s_i' = clip(alpha * (W e)_i^2, 0, 1)` to close the loop. The readout arm
//! images the pixel intensities onto a binary mirror array, so the network
//! output is a plain sum of `1 - e_i^2` over the selected nodes.
//!
//! All scales are normalized: phases are in radians, fields are unit
//! amplitude, and the camera gain `alpha` absorbs the physical detection
//! chain. With the identity coupling the update collapses to independent
//! scalar maps `s <- cos^2(beta * s + theta)` per node, which the tests use
//! as a ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mackey_glass::TimeSeries;
use crate::topology::CouplingMatrix;

/// Parameters of the network update loop.
#[derive(Debug, Clone)]
pub struct RnnConfig {
    /// Feedback gain (radians per unit camera intensity).
    pub beta: f64,
    /// Injection gain (radians per unit input).
    pub gamma: f64,
    /// Per-node phase offsets (radians).
    pub theta: Vec<f64>,
    /// Per-node nonnegative injection weights.
    pub w_inj: Vec<f64>,
    /// Camera gain applied to the coupled field intensity.
    pub alpha: f64,
    pub coupling: CouplingMatrix,
    /// Quantize camera intensities to 256 levels, like an 8-bit sensor.
    pub quantize_8bit: bool,
    /// Std of additive Gaussian camera noise; 0 disables the noise stream.
    pub noise_std: f64,
    /// Seed of the noise stream; unused when noise_std = 0.
    pub noise_seed: u64,
}

impl RnnConfig {
    pub fn n_nodes(&self) -> usize {
        self.coupling.n_nodes()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.coupling.n_nodes();
        if self.theta.len() != n || self.w_inj.len() != n {
            return Err(Error::InvalidArgument(format!(
                "theta ({}) and w_inj ({}) must have one entry per node ({n})",
                self.theta.len(),
                self.w_inj.len()
            )));
        }
        for (name, v) in [("beta", self.beta), ("gamma", self.gamma), ("alpha", self.alpha)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if self.theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("theta entries must be finite".into()));
        }
        if self.w_inj.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument("injection weights must be finite and >= 0".into()));
        }
        if !self.noise_std.is_finite() || self.noise_std < 0.0 {
            return Err(Error::InvalidArgument("noise_std must be >= 0".into()));
        }
        Ok(())
    }
}

/// Instantaneous network state.
///
/// `s` is the camera-plane coupled intensity driving the next step, `e` the
/// modulator field of the last step and `node_intensity` its square, which
/// is what the readout arm sees.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnState {
    pub s: Vec<f64>,
    pub e: Vec<f64>,
    pub node_intensity: Vec<f64>,
}

impl RnnState {
    /// Dark network: no camera signal, no field.
    pub fn zeros(n_nodes: usize) -> Self {
        RnnState {
            s: vec![0.0; n_nodes],
            e: vec![0.0; n_nodes],
            node_intensity: vec![0.0; n_nodes],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.s.len()
    }
}

/// Binary readout weights, one mirror per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BooleanWeights {
    bits: Vec<bool>,
}

impl BooleanWeights {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidArgument("weights must be non-empty".into()));
        }
        Ok(BooleanWeights { bits })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        BooleanWeights::new(vec![false; n])
    }

    /// Each bit Bernoulli(1/2) from the given stream.
    pub fn random(n: usize, rng: &mut impl Rng) -> Result<Self> {
        BooleanWeights::new((0..n).map(|_| rng.random_bool(0.5)).collect())
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, index: usize) -> bool {
        self.bits[index]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Copy with exactly the given bit inverted.
    pub fn flipped(&self, index: usize) -> Result<Self> {
        if index >= self.bits.len() {
            return Err(Error::InvalidArgument(format!(
                "flip index {index} out of range for {} weights",
                self.bits.len()
            )));
        }
        let mut bits = self.bits.clone();
        bits[index] = !bits[index];
        Ok(BooleanWeights { bits })
    }

    pub fn to_bitstring(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn from_bitstring(text: &str) -> Result<Self> {
        let bits: Vec<bool> = text
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidArgument(format!(
                    "bit string may only contain 0 and 1, found {other:?}"
                ))),
            })
            .collect::<Result<_>>()?;
        BooleanWeights::new(bits)
    }
}

/// Node intensity history of a run: row `t` holds `e_i^2` after step `t`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    n_nodes: usize,
    dt: f64,
    data: Vec<f64>,
}

impl Trajectory {
    /// Build from a flat row-major `[time][node]` intensity buffer.
    pub fn from_flat(n_nodes: usize, dt: f64, data: Vec<f64>) -> Result<Self> {
        if n_nodes == 0 || data.is_empty() || !data.len().is_multiple_of(n_nodes) {
            return Err(Error::InvalidArgument(format!(
                "trajectory buffer of {} values does not tile {n_nodes} nodes",
                data.len()
            )));
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::InvalidArgument("trajectory dt must be positive".into()));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(i));
        }
        Ok(Trajectory { n_nodes, dt, data })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.n_nodes
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn intensities(&self, t: usize) -> &[f64] {
        &self.data[t * self.n_nodes..(t + 1) * self.n_nodes]
    }

    /// What the mirror array redirects at step `t`: `1 - e_i^2`.
    pub fn readout_plane(&self, t: usize) -> impl Iterator<Item = f64> + '_ {
        self.intensities(t).iter().map(|x| 1.0 - x)
    }

    /// One node's readout-plane trace over the whole run.
    pub fn node_readout_trace(&self, node: usize) -> impl Iterator<Item = f64> + '_ {
        self.data[node..].iter().step_by(self.n_nodes).map(|x| 1.0 - x)
    }

    /// Contiguous time window as a new trajectory.
    pub fn window(&self, start: usize, len: usize) -> Result<Trajectory> {
        if start + len > self.len() {
            return Err(Error::InvalidArgument(format!(
                "window [{start}, {}) exceeds trajectory length {}",
                start + len,
                self.len()
            )));
        }
        Ok(Trajectory {
            n_nodes: self.n_nodes,
            dt: self.dt,
            data: self.data[start * self.n_nodes..(start + len) * self.n_nodes].to_vec(),
        })
    }
}

/// Draw per-node phase offsets: `theta0` with probability `1 - mu`, else
/// `theta0 + delta_theta`. The split puts part of the array past the
/// cosine extremum so the network contains response slopes of both signs.
pub fn init_phases(
    n_nodes: usize,
    mu: f64,
    theta0: f64,
    delta_theta: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::InvalidArgument(format!("mu {mu} must lie in [0, 1]")));
    }
    if !theta0.is_finite() || !delta_theta.is_finite() {
        return Err(Error::InvalidArgument("phase offsets must be finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n_nodes)
        .map(|_| if rng.random::<f64>() < mu { theta0 + delta_theta } else { theta0 })
        .collect())
}

/// How the scalar input is fanned out onto the nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InjectionKind {
    /// i.i.d. uniform [0, 1) per node.
    #[default]
    Uniform,
    /// Random 0/1 mask, half the nodes driven on average.
    Binary,
    /// Every node driven with weight 1.
    Ones,
}

pub fn injection_weights(n_nodes: usize, kind: InjectionKind, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_nodes)
        .map(|_| match kind {
            InjectionKind::Uniform => rng.random::<f64>(),
            InjectionKind::Binary => {
                if rng.random_bool(0.5) {
                    1.0
                } else {
                    0.0
                }
            }
            InjectionKind::Ones => 1.0,
        })
        .collect()
}

fn quantize_8bit(v: f64) -> f64 {
    (v * 255.0).round() / 255.0
}

/// One loop iteration plus the pre-clip camera intensities, which the gain
/// calibration needs.
fn step_full(config: &RnnConfig, state: &RnnState, u_next: f64) -> (RnnState, Vec<f64>) {
    let n = config.n_nodes();
    let mut e = Vec::with_capacity(n);
    for i in 0..n {
        let phi =
            config.beta * state.s[i] + config.gamma * config.w_inj[i] * u_next + config.theta[i];
        e.push(phi.cos());
    }
    let mut coupled = vec![0.0; n];
    config.coupling.matvec(&e, &mut coupled);
    let raw: Vec<f64> = coupled.iter().map(|c| config.alpha * c * c).collect();
    let s: Vec<f64> = raw
        .iter()
        .map(|&r| {
            let clipped = r.clamp(0.0, 1.0);
            if config.quantize_8bit {
                quantize_8bit(clipped)
            } else {
                clipped
            }
        })
        .collect();
    let node_intensity = e.iter().map(|v| v * v).collect();
    (RnnState { s, e, node_intensity }, raw)
}

/// Advance the network by one input sample. Camera noise is owned by the
/// seeded stream inside [`run`]; this function is the deterministic part.
pub fn step(config: &RnnConfig, state: &RnnState, u_next: f64) -> RnnState {
    step_full(config, state, u_next).0
}

/// Drive the network over an input sequence. With `noise_std > 0` every
/// camera frame is perturbed by the seeded Gaussian stream and re-clipped,
/// so runs are reproducible noise included.
pub fn run(
    config: &RnnConfig,
    initial: &RnnState,
    input: &TimeSeries,
) -> Result<(Trajectory, RnnState)> {
    config.validate()?;
    if initial.n_nodes() != config.n_nodes() {
        return Err(Error::InvalidArgument(format!(
            "initial state has {} nodes, config has {}",
            initial.n_nodes(),
            config.n_nodes()
        )));
    }
    let n = config.n_nodes();
    let mut noise = if config.noise_std > 0.0 {
        let dist = Normal::new(0.0, config.noise_std)
            .map_err(|e| Error::InvalidArgument(format!("invalid noise_std: {e}")))?;
        Some((ChaCha8Rng::seed_from_u64(config.noise_seed), dist))
    } else {
        None
    };

    let mut state = initial.clone();
    let mut data = Vec::with_capacity(input.len() * n);
    for &u in input.values() {
        state = step(config, &state, u);
        if let Some((rng, dist)) = noise.as_mut() {
            for s in state.s.iter_mut() {
                *s = (*s + dist.sample(rng)).clamp(0.0, 1.0);
            }
        }
        data.extend_from_slice(&state.node_intensity);
    }
    Ok((Trajectory { n_nodes: n, dt: input.dt_effective(), data }, state))
}

/// Mirror-array output: `y(n) = delta * sum_i w_i * (1 - x_i(n))`.
pub fn readout(
    trajectory: &Trajectory,
    weights: &BooleanWeights,
    delta: f64,
) -> Result<TimeSeries> {
    if weights.len() != trajectory.n_nodes() {
        return Err(Error::InvalidArgument(format!(
            "{} weights for {} nodes",
            weights.len(),
            trajectory.n_nodes()
        )));
    }
    let values = (0..trajectory.len())
        .map(|t| {
            delta
                * trajectory
                    .readout_plane(t)
                    .zip(weights.bits())
                    .filter(|&(_, &w)| w)
                    .map(|(v, _)| v)
                    .sum::<f64>()
        })
        .collect();
    TimeSeries::new(values, trajectory.dt())
}

/// Fraction of the camera range used over a trajectory's drive signal:
/// empirical share of samples at the clip boundary.
pub fn clipped_fraction(config: &RnnConfig, initial: &RnnState, input: &TimeSeries) -> Result<f64> {
    config.validate()?;
    let mut state = initial.clone();
    let mut clipped = 0usize;
    let mut total = 0usize;
    for &u in input.values() {
        let (next, raw) = step_full(config, &state, u);
        clipped += raw.iter().filter(|&&r| r > 1.0).count();
        total += raw.len();
        state = next;
    }
    Ok(clipped as f64 / total as f64)
}

/// Pick the camera gain the way the hardware's ND filter is chosen: run the
/// probe input at alpha = 1 and scale so the 99.9th percentile of the
/// coupled intensities lands at 1. At most 0.1% of frames then clip.
pub fn calibrate_alpha(config: &RnnConfig, probe_input: &TimeSeries) -> Result<f64> {
    let mut probe_config = config.clone();
    probe_config.alpha = 1.0;
    probe_config.quantize_8bit = false;
    probe_config.noise_std = 0.0;
    probe_config.validate()?;

    let mut state = RnnState::zeros(probe_config.n_nodes());
    let mut samples = Vec::with_capacity(probe_input.len() * probe_config.n_nodes());
    for &u in probe_input.values() {
        let (next, raw) = step_full(&probe_config, &state, u);
        samples.extend_from_slice(&raw);
        state = next;
    }
    samples.sort_by(|a, b| a.partial_cmp(b).expect("finite intensities"));
    let index = ((0.999 * samples.len() as f64).ceil() as usize).clamp(1, samples.len()) - 1;
    let q = samples[index];
    if q <= 0.0 {
        return Err(Error::DegenerateCalibration("probe run produced no coupled intensity".into()));
    }
    Ok(1.0 / q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{synth_kernel_matrix, CouplingMatrix};
    use std::f64::consts::PI;

    fn series(values: Vec<f64>) -> TimeSeries {
        TimeSeries::new(values, 1.0).unwrap()
    }

    /// Identity coupling over exactly `n` nodes, laid out as a 1 x n strip.
    fn identity_n(n: usize) -> CouplingMatrix {
        let diag: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0)).collect();
        CouplingMatrix::from_triplets_grid(1, n, 0, &diag).unwrap()
    }

    fn identity_config(theta: Vec<f64>, beta: f64) -> RnnConfig {
        let n = theta.len();
        RnnConfig {
            beta,
            gamma: 0.0,
            theta,
            w_inj: vec![0.0; n],
            alpha: 1.0,
            coupling: identity_n(n),
            quantize_8bit: false,
            noise_std: 0.0,
            noise_seed: 0,
        }
    }

    #[test]
    fn zero_gain_step_gives_cos_squared_offsets() {
        let theta = vec![0.0, 0.3, 1.1, 2.9];
        let config = identity_config(theta.clone(), 0.0);
        let next = step(&config, &RnnState::zeros(4), 0.7);
        for (i, t) in theta.iter().enumerate() {
            assert!((next.s[i] - t.cos().powi(2)).abs() < 1e-15);
            assert!((next.node_intensity[i] - t.cos().powi(2)).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_coupling_reduces_to_independent_scalar_maps() {
        let theta = vec![0.17 * PI, 0.43 * PI, 1.0];
        let config = identity_config(theta.clone(), 0.8);
        let input = series(vec![0.0; 100]);
        let (trajectory, _) = run(&config, &RnnState::zeros(3), &input).unwrap();

        for (i, t) in theta.iter().enumerate() {
            let mut s = 0.0;
            for step_idx in 0..100 {
                let e = (0.8 * s + t).cos();
                s = (e * e).clamp(0.0, 1.0);
                let got = trajectory.intensities(step_idx)[i];
                assert!(
                    (got - e * e).abs() < 1e-12,
                    "node {i} step {step_idx}: {got} vs {}",
                    e * e
                );
            }
        }
    }

    #[test]
    fn two_node_step_matches_hand_computation() {
        // Nodes on a 1x2 grid, fully coupled at weight 1/2.
        let coupling = CouplingMatrix::from_triplets_grid(
            1,
            2,
            1,
            &[(0, 0, 0.5), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 0.5)],
        )
        .unwrap();
        let config = RnnConfig {
            beta: 0.8,
            gamma: 0.0,
            theta: vec![0.17 * PI, 0.43 * PI],
            w_inj: vec![0.0; 2],
            alpha: 1.0,
            coupling,
            quantize_8bit: false,
            noise_std: 0.0,
            noise_seed: 0,
        };
        let next = step(&config, &RnnState::zeros(2), 0.0);
        let e1 = (0.17 * PI).cos();
        let e2 = (0.43 * PI).cos();
        let c = 0.5 * (e1 + e2);
        for i in 0..2 {
            assert!((next.s[i] - c * c).abs() < 1e-12);
        }
        assert!((next.e[0] - e1).abs() < 1e-15);
        assert!((next.e[1] - e2).abs() < 1e-15);
    }

    #[test]
    fn states_stay_in_unit_interval() {
        let n_side = 10;
        let coupling = synth_kernel_matrix(n_side, 1, 0.5, 11).unwrap();
        let n = coupling.n_nodes();
        let config = RnnConfig {
            beta: 0.8,
            gamma: 0.4,
            theta: init_phases(n, 0.45, 0.17 * PI, 0.26 * PI, 3).unwrap(),
            w_inj: injection_weights(n, InjectionKind::Uniform, 5),
            alpha: 1.0,
            coupling,
            quantize_8bit: false,
            noise_std: 0.0,
            noise_seed: 0,
        };
        let input = series(vec![0.5; 10_000]);
        let (trajectory, state) = run(&config, &RnnState::zeros(n), &input).unwrap();
        assert_eq!(trajectory.len(), 10_000);
        for t in (0..10_000).step_by(997) {
            for &x in trajectory.intensities(t) {
                assert!((0.0..=1.0).contains(&x));
            }
        }
        for (&s, &x) in state.s.iter().zip(&state.node_intensity) {
            assert!((0.0..=1.0).contains(&s));
            assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn phase_split_fraction_tracks_mu() {
        let theta = init_phases(900, 0.45, 0.17 * PI, 0.26 * PI, 42).unwrap();
        let high = theta.iter().filter(|&&t| (t - 0.43 * PI).abs() < 1e-12).count();
        let fraction = high as f64 / 900.0;
        assert!((fraction - 0.45).abs() < 0.05, "high-offset fraction {fraction}");
        for &t in &theta {
            assert!((t - 0.17 * PI).abs() < 1e-12 || (t - 0.43 * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn mu_extremes_are_deterministic() {
        let lo = init_phases(50, 0.0, 0.2, 0.5, 1).unwrap();
        assert!(lo.iter().all(|&t| t == 0.2));
        let hi = init_phases(50, 1.0, 0.2, 0.5, 1).unwrap();
        assert!(hi.iter().all(|&t| (t - 0.7).abs() < 1e-15));
        assert!(init_phases(10, 1.5, 0.2, 0.5, 1).is_err());
    }

    #[test]
    fn quantization_snaps_to_camera_levels() {
        let coupling = synth_kernel_matrix(5, 1, 0.3, 2).unwrap();
        let n = coupling.n_nodes();
        let config = RnnConfig {
            beta: 0.8,
            gamma: 0.4,
            theta: init_phases(n, 0.45, 0.17 * PI, 0.26 * PI, 3).unwrap(),
            w_inj: injection_weights(n, InjectionKind::Uniform, 5),
            alpha: 0.9,
            coupling,
            quantize_8bit: true,
            noise_std: 0.0,
            noise_seed: 0,
        };
        let input = series(vec![0.3; 50]);
        let mut state = RnnState::zeros(n);
        for &u in input.values() {
            state = step(&config, &state, u);
            for &s in &state.s {
                let level = s * 255.0;
                assert!((level - level.round()).abs() < 1e-9, "level {level}");
            }
        }
    }

    #[test]
    fn noise_stream_is_seeded_and_bounded() {
        let coupling = synth_kernel_matrix(5, 1, 0.3, 2).unwrap();
        let n = coupling.n_nodes();
        let mut config = RnnConfig {
            beta: 0.8,
            gamma: 0.4,
            theta: init_phases(n, 0.45, 0.17 * PI, 0.26 * PI, 3).unwrap(),
            w_inj: injection_weights(n, InjectionKind::Uniform, 5),
            alpha: 1.0,
            coupling,
            quantize_8bit: false,
            noise_std: 0.05,
            noise_seed: 17,
        };
        let input = series(vec![0.5; 200]);
        let (t1, s1) = run(&config, &RnnState::zeros(n), &input).unwrap();
        let (t2, s2) = run(&config, &RnnState::zeros(n), &input).unwrap();
        assert_eq!(t1.intensities(199), t2.intensities(199));
        assert_eq!(s1, s2);
        for &s in &s1.s {
            assert!((0.0..=1.0).contains(&s));
        }

        config.noise_seed = 18;
        let (t3, _) = run(&config, &RnnState::zeros(n), &input).unwrap();
        assert_ne!(t1.intensities(199), t3.intensities(199));
    }

    #[test]
    fn runs_are_bitwise_deterministic_without_noise() {
        let coupling = synth_kernel_matrix(6, 1, 0.5, 9).unwrap();
        let n = coupling.n_nodes();
        let config = RnnConfig {
            beta: 0.8,
            gamma: 0.4,
            theta: init_phases(n, 0.45, 0.17 * PI, 0.26 * PI, 3).unwrap(),
            w_inj: injection_weights(n, InjectionKind::Uniform, 5),
            alpha: 1.0,
            coupling,
            quantize_8bit: false,
            noise_std: 0.0,
            noise_seed: 0,
        };
        let values: Vec<f64> = (0..300).map(|k| ((k * 37 % 100) as f64) / 100.0).collect();
        let input = series(values);
        let (t1, _) = run(&config, &RnnState::zeros(n), &input).unwrap();
        let (t2, _) = run(&config, &RnnState::zeros(n), &input).unwrap();
        for t in 0..300 {
            assert_eq!(t1.intensities(t), t2.intensities(t));
        }
    }

    #[test]
    fn readout_matches_direct_summation() {
        let coupling = synth_kernel_matrix(4, 1, 0.5, 9).unwrap();
        let n = coupling.n_nodes();
        let config = RnnConfig {
            beta: 0.8,
            gamma: 0.4,
            theta: init_phases(n, 0.45, 0.17 * PI, 0.26 * PI, 3).unwrap(),
            w_inj: injection_weights(n, InjectionKind::Uniform, 5),
            alpha: 1.0,
            coupling,
            quantize_8bit: false,
            noise_std: 0.0,
            noise_seed: 0,
        };
        let input = series((0..50).map(|k| (k as f64 * 0.37).sin()).collect());
        let (trajectory, _) = run(&config, &RnnState::zeros(n), &input).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let weights = BooleanWeights::random(n, &mut rng).unwrap();
        let delta = 1.7;
        let y = readout(&trajectory, &weights, delta).unwrap();
        for t in 0..trajectory.len() {
            let direct: f64 = (0..n)
                .filter(|&i| weights.get(i))
                .map(|i| 1.0 - trajectory.intensities(t)[i])
                .sum();
            assert!((y.values()[t] - delta * direct).abs() < 1e-12);
        }

        // Saturation bounds with all mirrors on.
        let ones = BooleanWeights::new(vec![true; n]).unwrap();
        let y_ones = readout(&trajectory, &ones, 1.0).unwrap();
        for &v in y_ones.values() {
            assert!((0.0..=n as f64).contains(&v));
        }

        // Zero weights read out exactly zero.
        let zeros = BooleanWeights::zeros(n).unwrap();
        let y_zero = readout(&trajectory, &zeros, 1.0).unwrap();
        assert!(y_zero.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn readout_is_additive_over_disjoint_supports() {
        let coupling = synth_kernel_matrix(4, 1, 0.5, 9).unwrap();
        let n = coupling.n_nodes();
        let config = RnnConfig {
            beta: 0.8,
            gamma: 0.4,
            theta: init_phases(n, 0.45, 0.17 * PI, 0.26 * PI, 3).unwrap(),
            w_inj: injection_weights(n, InjectionKind::Uniform, 5),
            alpha: 1.0,
            coupling,
            quantize_8bit: false,
            noise_std: 0.0,
            noise_seed: 0,
        };
        let input = series((0..40).map(|k| (k as f64 * 0.21).cos()).collect());
        let (trajectory, _) = run(&config, &RnnState::zeros(n), &input).unwrap();

        let w1 = BooleanWeights::new((0..n).map(|i| i % 2 == 0).collect()).unwrap();
        let w2 = BooleanWeights::new((0..n).map(|i| i % 2 == 1).collect()).unwrap();
        let w_union = BooleanWeights::new(vec![true; n]).unwrap();
        let y1 = readout(&trajectory, &w1, 1.0).unwrap();
        let y2 = readout(&trajectory, &w2, 1.0).unwrap();
        let yu = readout(&trajectory, &w_union, 1.0).unwrap();
        for t in 0..trajectory.len() {
            assert!((y1.values()[t] + y2.values()[t] - yu.values()[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn bitstring_roundtrip() {
        let w = BooleanWeights::new(vec![true, false, false, true, true]).unwrap();
        assert_eq!(w.to_bitstring(), "10011");
        assert_eq!(BooleanWeights::from_bitstring("10011\n").unwrap(), w);
        assert!(BooleanWeights::from_bitstring("10x1").is_err());
        assert!(w.flipped(5).is_err());
        assert_eq!(w.flipped(1).unwrap().flipped(1).unwrap(), w);
    }

    #[test]
    fn calibration_inverts_peak_intensity() {
        // Two fully coupled nodes at theta = 0, beta = 0: e = (1, 1) and
        // unit row sums of 2 give c^2 = 4 everywhere.
        let coupling = CouplingMatrix::from_triplets_grid(
            1,
            2,
            1,
            &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)],
        )
        .unwrap();
        let config = RnnConfig {
            beta: 0.0,
            gamma: 0.0,
            theta: vec![0.0; 2],
            w_inj: vec![0.0; 2],
            alpha: 1.0,
            coupling,
            quantize_8bit: false,
            noise_std: 0.0,
            noise_seed: 0,
        };
        let alpha = calibrate_alpha(&config, &series(vec![0.0; 20])).unwrap();
        assert!((alpha - 0.25).abs() < 1e-12);

        // Identity coupling, theta = 0, beta = 0: c^2 = 1, so alpha = 1.
        let config = identity_config(vec![0.0; 3], 0.0);
        let alpha = calibrate_alpha(&config, &series(vec![0.0; 20])).unwrap();
        assert!((alpha - 1.0).abs() < 1e-12);
    }

    #[test]
    fn calibrated_gain_clips_at_most_a_thousandth() {
        let coupling = synth_kernel_matrix(30, 1, 0.5, 7).unwrap();
        let n = coupling.n_nodes();
        let mut config = RnnConfig {
            beta: 0.8,
            gamma: 0.4,
            theta: init_phases(n, 0.45, 0.17 * PI, 0.26 * PI, 3).unwrap(),
            w_inj: injection_weights(n, InjectionKind::Uniform, 5),
            alpha: 1.0,
            coupling,
            quantize_8bit: false,
            noise_std: 0.0,
            noise_seed: 0,
        };
        let values: Vec<f64> = (0..500).map(|k| (k as f64 * 0.709).sin()).collect();
        let probe = series(values);
        let alpha = calibrate_alpha(&config, &probe).unwrap();
        config.alpha = alpha;
        let clipped = clipped_fraction(&config, &RnnState::zeros(n), &probe).unwrap();
        assert!(clipped <= 0.001, "clipped fraction {clipped}");
    }

    #[test]
    fn near_dark_probe_calibrates_to_huge_gain() {
        // theta = pi/2 leaves only the f64 rounding residue of cos(pi/2),
        // so the fitted gain must blow up instead of silently clipping.
        let config = identity_config(vec![std::f64::consts::FRAC_PI_2; 2], 0.0);
        let alpha = calibrate_alpha(&config, &series(vec![0.0; 5])).unwrap();
        assert!(alpha > 1e29, "alpha {alpha}");
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let config = identity_config(vec![0.0; 3], 0.0);
        let input = series(vec![0.0; 5]);
        assert!(run(&config, &RnnState::zeros(2), &input).is_err());

        let (trajectory, _) = run(&config, &RnnState::zeros(3), &input).unwrap();
        let weights = BooleanWeights::zeros(4).unwrap();
        assert!(readout(&trajectory, &weights, 1.0).is_err());

        let mut bad = identity_config(vec![0.0; 3], 0.0);
        bad.w_inj = vec![0.0; 2];
        assert!(bad.validate().is_err());
    }
}
