//! Biased greedy reinforcement learning of the Boolean readout weights.
//!
//! The mirror array offers no gradients: each weight is a single mirror that
//! is either on or off. Training therefore walks the hypercube one flip at a
//! time. A flip index is drawn as `argmax(rand(N) * bias)`, the flip is kept
//! only if it strictly lowers the error, and the bias vector is raised by
//! `1/N` everywhere except at the just-flipped entry, which is reset to
//! zero. The reset makes an immediate repeat impossible and the steady
//! growth guarantees every neglected weight eventually gets another chance.
//!
//! Because the readout does not feed back into the dynamics, the node
//! trajectory is computed once and candidate errors are evaluated by adding
//! or removing a single node's readout trace from a running sum. Runs with
//! camera noise enabled forgo that cache and re-drive the network every
//! iteration instead, the way the hardware had to.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mackey_glass::TimeSeries;
use crate::network::{readout, BooleanWeights, Trajectory};

/// Selection bias over the readout weights.
///
/// Entries reset to zero on their flip and then grow back in exact steps of
/// `1/N`: a value is stored as `count / N` with a single division, so an
/// entry flipped `m` updates ago compares bit-for-bit equal to `m / N`.
/// Entries never flipped keep their random initialization plus the common
/// growth term.
#[derive(Debug, Clone)]
pub struct BiasVector {
    init: Vec<f64>,
    zeroed_at: Vec<Option<u64>>,
    updates: u64,
}

impl BiasVector {
    /// Random initialization with entries in (0, 1], so no entry starts out
    /// unselectable.
    pub fn random(n: usize, rng: &mut impl Rng) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("bias must be non-empty".into()));
        }
        Ok(BiasVector {
            init: (0..n).map(|_| 1.0 - rng.random::<f64>()).collect(),
            zeroed_at: vec![None; n],
            updates: 0,
        })
    }

    /// Explicit values, e.g. replayed from a file. All entries count as
    /// never flipped.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("bias must be non-empty".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument("bias entries must be finite and >= 0".into()));
        }
        let n = values.len();
        Ok(BiasVector { init: values, zeroed_at: vec![None; n], updates: 0 })
    }

    pub fn len(&self) -> usize {
        self.init.len()
    }

    pub fn is_empty(&self) -> bool {
        self.init.is_empty()
    }

    pub fn value(&self, i: usize) -> f64 {
        let n = self.len() as f64;
        match self.zeroed_at[i] {
            Some(t) => (self.updates - t) as f64 / n,
            None => self.init[i] + self.updates as f64 / n,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }

    /// Updates since entry `i` was last reset; `None` if never flipped.
    pub fn updates_since_zero(&self, i: usize) -> Option<u64> {
        self.zeroed_at[i].map(|t| self.updates - t)
    }

    /// One learning-rule update: every entry grows by `1/N`, then the
    /// flipped entry is reset to zero. Applied every iteration, accepted or
    /// not.
    pub fn updated(&self, flipped: usize) -> Result<Self> {
        if flipped >= self.len() {
            return Err(Error::InvalidArgument(format!(
                "bias index {flipped} out of range for {} entries",
                self.len()
            )));
        }
        let mut next = self.clone();
        next.updates += 1;
        next.zeroed_at[flipped] = Some(next.updates);
        Ok(next)
    }
}

/// Draw the next flip index: `argmax(rand(N) * bias)`, ties to the lowest
/// index. The zero bias of the last-flipped entry makes an immediate repeat
/// impossible as long as any other entry is positive.
pub fn select_index(bias: &BiasVector, rng: &mut impl Rng) -> Result<usize> {
    let values = bias.values();
    if values.iter().all(|&b| b == 0.0) {
        return Err(Error::DegenerateBias("all bias entries are zero".into()));
    }
    let mut best = 0usize;
    let mut best_product = f64::NEG_INFINITY;
    for (i, &b) in values.iter().enumerate() {
        let product = rng.random::<f64>() * b;
        if product > best_product {
            best_product = product;
            best = i;
        }
    }
    Ok(best)
}

/// Invert the mirror readout, center it and scale to unit variance over the
/// window after the first `discard` transient samples.
pub fn postprocess_output(y: &TimeSeries, discard: usize) -> Result<TimeSeries> {
    if y.len() <= discard {
        return Err(Error::InvalidArgument(format!(
            "cannot discard {discard} of {} output samples",
            y.len()
        )));
    }
    let retained = &y.values()[discard..];
    let mean = retained.iter().sum::<f64>() / retained.len() as f64;
    let var = retained.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / retained.len() as f64;
    let std = var.sqrt();
    if std == 0.0 {
        return Err(Error::DegenerateOutput("readout is constant over the scored window".into()));
    }
    TimeSeries::new(retained.iter().map(|v| -(v - mean) / std).collect(), y.dt_effective())
}

/// Prediction error: population standard deviation of `target - prediction`.
/// With a unit-variance target this is the normalized RMS error.
pub fn nmse(target: &TimeSeries, prediction: &TimeSeries) -> Result<f64> {
    if target.len() != prediction.len() {
        return Err(Error::InvalidArgument(format!(
            "target has {} samples, prediction {}",
            target.len(),
            prediction.len()
        )));
    }
    let diff: Vec<f64> =
        target.values().iter().zip(prediction.values()).map(|(t, p)| t - p).collect();
    let mean = diff.iter().sum::<f64>() / diff.len() as f64;
    let var = diff.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / diff.len() as f64;
    Ok(var.sqrt())
}

/// Error of one weight vector. A constant readout (e.g. all mirrors off)
/// cannot be normalized; it scores infinitely bad instead of failing, so
/// the greedy walk can escape it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateScore {
    pub epsilon: f64,
    pub degenerate: bool,
}

impl CandidateScore {
    fn degenerate() -> Self {
        CandidateScore { epsilon: f64::INFINITY, degenerate: true }
    }
}

/// Score `weights` on a precomputed trajectory against the standardized
/// target, excluding the first `discard` samples.
pub fn evaluate_candidate(
    trajectory: &Trajectory,
    weights: &BooleanWeights,
    target: &TimeSeries,
    discard: usize,
) -> Result<CandidateScore> {
    if target.len() != trajectory.len() {
        return Err(Error::InvalidArgument(format!(
            "target has {} samples, trajectory {}",
            target.len(),
            trajectory.len()
        )));
    }
    let y = readout(trajectory, weights, 1.0)?;
    match postprocess_output(&y, discard) {
        Ok(normalized) => {
            let target_window = target.slice(discard, target.len() - discard)?;
            Ok(CandidateScore { epsilon: nmse(&target_window, &normalized)?, degenerate: false })
        }
        Err(Error::DegenerateOutput(_)) => Ok(CandidateScore::degenerate()),
        Err(other) => Err(other),
    }
}

/// Error pipeline on a running readout sum instead of a weight vector;
/// avoids touching all N node traces per candidate.
fn score_sums(y_sum: &[f64], target: &[f64], discard: usize) -> CandidateScore {
    let retained = &y_sum[discard..];
    let n = retained.len() as f64;
    let mean = retained.iter().sum::<f64>() / n;
    let var = retained.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 {
        return CandidateScore::degenerate();
    }
    let diff: Vec<f64> =
        retained.iter().zip(&target[discard..]).map(|(y, t)| t - (-(y - mean) / std)).collect();
    let diff_mean = diff.iter().sum::<f64>() / n;
    let diff_var = diff.iter().map(|d| (d - diff_mean).powi(2)).sum::<f64>() / n;
    CandidateScore { epsilon: diff_var.sqrt(), degenerate: false }
}

/// Training iteration budget and seeding.
#[derive(Debug, Clone)]
pub struct LearnerConfig {
    pub max_iterations: usize,
    pub seed: u64,
    /// Transient samples excluded from the error window.
    pub discard: usize,
    /// Accept only strict improvements (ties revert).
    pub strict_improvement: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig { max_iterations: 5000, seed: 0, discard: 30, strict_improvement: true }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// One trained-iteration row of the learning log.
#[derive(Debug, Clone)]
pub struct LearningStep {
    /// 1-based iteration number.
    pub k: u64,
    pub flipped_index: usize,
    pub epsilon_candidate: f64,
    /// Error of the configuration retained after this iteration.
    pub epsilon_accepted: f64,
    pub accepted: bool,
}

/// Complete log of a greedy run.
#[derive(Debug, Clone)]
pub struct LearningRecord {
    /// Error of the random initial weights, measured before any flip.
    pub initial_epsilon: f64,
    pub steps: Vec<LearningStep>,
    pub final_weights: BooleanWeights,
    pub final_bias: BiasVector,
    pub final_epsilon: f64,
}

impl LearningRecord {
    pub fn accepted_count(&self) -> usize {
        self.steps.iter().filter(|s| s.accepted).count()
    }
}

struct GreedyLoop {
    rng: ChaCha8Rng,
    weights: BooleanWeights,
    bias: BiasVector,
    accepted_epsilon: f64,
    steps: Vec<LearningStep>,
}

impl GreedyLoop {
    /// Seed the stream and draw the initial weights and bias from it, in
    /// that order; the same stream then drives index selection.
    fn new(n_nodes: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = BooleanWeights::random(n_nodes, &mut rng)?;
        let bias = BiasVector::random(n_nodes, &mut rng)?;
        Ok(GreedyLoop { rng, weights, bias, accepted_epsilon: f64::INFINITY, steps: Vec::new() })
    }

    fn accepts(&self, candidate: f64, strict: bool) -> bool {
        if strict {
            candidate < self.accepted_epsilon
        } else {
            candidate <= self.accepted_epsilon
        }
    }

    fn push_step(&mut self, k: u64, flipped: usize, candidate: f64, accepted: bool) {
        self.steps.push(LearningStep {
            k,
            flipped_index: flipped,
            epsilon_candidate: candidate,
            epsilon_accepted: self.accepted_epsilon,
            accepted,
        });
    }
}

/// Train the readout on a fixed trajectory. The initial random weights are
/// scored once before the loop; every iteration then proposes one flip and
/// keeps it only on improvement, while the bias update runs unconditionally.
pub fn greedy_train(
    trajectory: &Trajectory,
    target: &TimeSeries,
    config: &LearnerConfig,
) -> Result<LearningRecord> {
    config.validate()?;
    if target.len() != trajectory.len() {
        return Err(Error::InvalidArgument(format!(
            "target has {} samples, trajectory {}",
            target.len(),
            trajectory.len()
        )));
    }
    if trajectory.len() <= config.discard {
        return Err(Error::InvalidArgument(format!(
            "cannot discard {} of {} samples",
            config.discard,
            trajectory.len()
        )));
    }
    let n = trajectory.n_nodes();
    let t_len = trajectory.len();

    // Running readout sum of the current weights, updated by one node trace
    // per flip.
    let mut loop_state = GreedyLoop::new(n, config.seed)?;
    let mut y_sum = vec![0.0f64; t_len];
    for (node, &w) in loop_state.weights.bits().iter().enumerate() {
        if w {
            for (t, v) in trajectory.node_readout_trace(node).enumerate() {
                y_sum[t] += v;
            }
        }
    }
    loop_state.accepted_epsilon = score_sums(&y_sum, target.values(), config.discard).epsilon;
    let initial_epsilon = loop_state.accepted_epsilon;

    let mut y_candidate = vec![0.0f64; t_len];
    for k in 1..=config.max_iterations as u64 {
        let flipped = select_index(&loop_state.bias, &mut loop_state.rng)?;
        let sign = if loop_state.weights.get(flipped) { -1.0 } else { 1.0 };
        for (t, v) in trajectory.node_readout_trace(flipped).enumerate() {
            y_candidate[t] = y_sum[t] + sign * v;
        }
        let score = score_sums(&y_candidate, target.values(), config.discard);
        let accepted = loop_state.accepts(score.epsilon, config.strict_improvement);
        if accepted {
            std::mem::swap(&mut y_sum, &mut y_candidate);
            loop_state.weights = loop_state.weights.flipped(flipped)?;
            loop_state.accepted_epsilon = score.epsilon;
        }
        loop_state.bias = loop_state.bias.updated(flipped)?;
        loop_state.push_step(k, flipped, score.epsilon, accepted);
    }

    Ok(LearningRecord {
        initial_epsilon,
        final_epsilon: loop_state.accepted_epsilon,
        steps: loop_state.steps,
        final_weights: loop_state.weights,
        final_bias: loop_state.bias,
    })
}

/// Train with a fresh trajectory per iteration, for noisy dynamics where a
/// cached trajectory would hide the noise the learner must cope with.
/// `sample_trajectory(k)` supplies the trajectory for iteration `k` (0 is
/// the initial scoring pass).
pub fn greedy_train_resampled(
    mut sample_trajectory: impl FnMut(u64) -> Result<Trajectory>,
    target: &TimeSeries,
    config: &LearnerConfig,
) -> Result<LearningRecord> {
    config.validate()?;
    let first = sample_trajectory(0)?;
    let n = first.n_nodes();

    let mut loop_state = GreedyLoop::new(n, config.seed)?;
    loop_state.accepted_epsilon =
        evaluate_candidate(&first, &loop_state.weights, target, config.discard)?.epsilon;
    let initial_epsilon = loop_state.accepted_epsilon;

    for k in 1..=config.max_iterations as u64 {
        let trajectory = sample_trajectory(k)?;
        let flipped = select_index(&loop_state.bias, &mut loop_state.rng)?;
        let candidate = loop_state.weights.flipped(flipped)?;
        let score = evaluate_candidate(&trajectory, &candidate, target, config.discard)?;
        let accepted = loop_state.accepts(score.epsilon, config.strict_improvement);
        if accepted {
            loop_state.weights = candidate;
            loop_state.accepted_epsilon = score.epsilon;
        }
        loop_state.bias = loop_state.bias.updated(flipped)?;
        loop_state.push_step(k, flipped, score.epsilon, accepted);
    }

    Ok(LearningRecord {
        initial_epsilon,
        final_epsilon: loop_state.accepted_epsilon,
        steps: loop_state.steps,
        final_weights: loop_state.weights,
        final_bias: loop_state.bias,
    })
}

/// Global optimum by Gray-code enumeration of all `2^N` weight vectors.
/// Ties resolve to the lowest binary encoding (bit `i` = node `i`), making
/// the result independent of enumeration order. Refuses N > 20.
pub fn exhaustive_oracle(
    trajectory: &Trajectory,
    target: &TimeSeries,
    discard: usize,
) -> Result<(BooleanWeights, f64)> {
    let n = trajectory.n_nodes();
    if n > 20 {
        return Err(Error::InvalidArgument(format!(
            "exhaustive search over 2^{n} weight vectors refused (limit N = 20)"
        )));
    }
    if target.len() != trajectory.len() {
        return Err(Error::InvalidArgument(format!(
            "target has {} samples, trajectory {}",
            target.len(),
            trajectory.len()
        )));
    }
    if trajectory.len() <= discard {
        return Err(Error::InvalidArgument(format!(
            "cannot discard {discard} of {} samples",
            trajectory.len()
        )));
    }

    let t_len = trajectory.len();
    let mut y_sum = vec![0.0f64; t_len];
    let mut bits = vec![false; n];
    // Code 0 is the all-off readout: degenerate, never optimal.
    let mut best_epsilon = f64::INFINITY;
    let mut best_code = 0u64;

    for m in 1..(1u64 << n) {
        let flip = m.trailing_zeros() as usize;
        bits[flip] = !bits[flip];
        let sign = if bits[flip] { 1.0 } else { -1.0 };
        for (t, v) in trajectory.node_readout_trace(flip).enumerate() {
            y_sum[t] += sign * v;
        }
        let code = m ^ (m >> 1);
        let score = score_sums(&y_sum, target.values(), discard);
        if score.epsilon < best_epsilon || (score.epsilon == best_epsilon && code < best_code) {
            best_epsilon = score.epsilon;
            best_code = code;
        }
    }

    let weights = BooleanWeights::new((0..n).map(|i| best_code >> i & 1 == 1).collect())?;
    Ok((weights, best_epsilon))
}
