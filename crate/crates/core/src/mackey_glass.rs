//! Mackey-Glass delay-differential benchmark signal.
//!
//! `dx/dt = a*x(t-tau) / (1 + x(t-tau)^p) - b*x(t)`, integrated with
//! fixed-step RK4; the delayed value at half-step stage times comes from
//! linear interpolation between stored grid samples. The module also owns
//! the dataset plumbing shared by training and evaluation: downsampling,
//! standardization and the one-step-ahead prediction split.

use crate::error::{Error, Result};

/// Parameters of the delay equation and its integration grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgParams {
    pub a: f64,
    pub b: f64,
    /// Nonlinearity exponent.
    pub p: f64,
    /// Delay; must be a whole number of `dt` steps.
    pub tau: f64,
    /// Integration step.
    pub dt: f64,
    /// Constant value filling the initial history.
    pub x0: f64,
}

impl Default for MgParams {
    fn default() -> Self {
        MgParams { a: 0.2, b: 0.1, p: 10.0, tau: 17.0, dt: 0.1, x0: 1.2 }
    }
}

impl MgParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a", self.a),
            ("b", self.b),
            ("p", self.p),
            ("tau", self.tau),
            ("dt", self.dt),
            ("x0", self.x0),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("mg.{name} must be finite")));
            }
        }
        if self.dt <= 0.0 {
            return Err(Error::InvalidArgument("mg.dt must be positive".into()));
        }
        if self.tau < 0.0 {
            return Err(Error::InvalidArgument("mg.tau must be >= 0".into()));
        }
        let steps = self.tau / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "mg.tau ({}) must be an integer multiple of mg.dt ({})",
                self.tau, self.dt
            )));
        }
        Ok(())
    }

    /// Delay expressed in whole integration steps.
    pub fn delay_steps(&self) -> usize {
        (self.tau / self.dt).round() as usize
    }
}

/// Non-empty sequence of finite samples with a fixed sampling interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    dt_effective: f64,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, dt_effective: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("time series must be non-empty".into()));
        }
        if !dt_effective.is_finite() || dt_effective <= 0.0 {
            return Err(Error::InvalidArgument("dt_effective must be positive".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::DegenerateSignal(format!("non-finite sample at index {i}")));
        }
        Ok(TimeSeries { values, dt_effective })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dt_effective(&self) -> f64 {
        self.dt_effective
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Copy of `len` samples starting at `start`, keeping the sampling interval.
    pub fn slice(&self, start: usize, len: usize) -> Result<TimeSeries> {
        if start + len > self.values.len() {
            return Err(Error::InvalidArgument(format!(
                "slice {start}+{len} out of range for series of {}",
                self.values.len()
            )));
        }
        TimeSeries::new(self.values[start..start + len].to_vec(), self.dt_effective)
    }

    pub fn concat(&self, other: &TimeSeries) -> Result<TimeSeries> {
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        TimeSeries::new(values, self.dt_effective)
    }

    /// Population mean and standard deviation.
    pub fn moments(&self) -> (f64, f64) {
        let n = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        let var = self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    }
}

fn mg_rhs(a: f64, b: f64, p: f64, x: f64, x_delayed: f64) -> f64 {
    a * x_delayed / (1.0 + x_delayed.powf(p)) - b * x
}

/// Integrate the delay equation and return `n_samples` values taken after
/// `burn_in` integration steps have been discarded. Sample `k` is the state
/// after `burn_in + k + 1` steps, so the first returned value already moved
/// one step away from the constant initial history.
pub fn integrate_mg(params: &MgParams, n_samples: usize, burn_in: usize) -> Result<TimeSeries> {
    params.validate()?;
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be >= 1".into()));
    }
    let d = params.delay_steps();
    let (a, b, p, dt) = (params.a, params.b, params.p, params.dt);
    let total_steps = burn_in + n_samples;
    let mut out = Vec::with_capacity(n_samples);

    if d == 0 {
        // Zero delay reduces to an ordinary differential equation; the
        // "delayed" value is the current stage state.
        let mut x = params.x0;
        for step in 0..total_steps {
            let k1 = mg_rhs(a, b, p, x, x);
            let x2 = x + 0.5 * dt * k1;
            let k2 = mg_rhs(a, b, p, x2, x2);
            let x3 = x + 0.5 * dt * k2;
            let k3 = mg_rhs(a, b, p, x3, x3);
            let x4 = x + dt * k3;
            let k4 = mg_rhs(a, b, p, x4, x4);
            x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if !x.is_finite() {
                return Err(Error::IntegrationDiverged { step, value: x });
            }
            if step >= burn_in {
                out.push(x);
            }
        }
        return TimeSeries::new(out, dt);
    }

    // Ring buffer holding x over the last `d` steps plus the current value.
    // At global step k the slot for x(k) is k % (d+1); the delayed grid
    // values x(k-d) and x(k-d+1) sit at the two following slots.
    let cap = d + 1;
    let mut hist = vec![params.x0; cap];
    let mut x = params.x0;
    for step in 0..total_steps {
        let u0 = hist[(step + 1) % cap]; // x(step - d)
        let u1 = if d == 1 { x } else { hist[(step + 2) % cap] }; // x(step - d + 1)
        let u_half = 0.5 * (u0 + u1);

        let k1 = mg_rhs(a, b, p, x, u0);
        let k2 = mg_rhs(a, b, p, x + 0.5 * dt * k1, u_half);
        let k3 = mg_rhs(a, b, p, x + 0.5 * dt * k2, u_half);
        let k4 = mg_rhs(a, b, p, x + dt * k3, u1);
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !x.is_finite() {
            return Err(Error::IntegrationDiverged { step, value: x });
        }
        hist[(step + 1) % cap] = x;
        if step >= burn_in {
            out.push(x);
        }
    }
    TimeSeries::new(out, dt)
}

/// Keep every `factor`-th sample starting at index 0.
pub fn downsample(series: &TimeSeries, factor: usize) -> Result<TimeSeries> {
    if factor == 0 {
        return Err(Error::InvalidArgument("downsample factor must be >= 1".into()));
    }
    let values: Vec<f64> = series.values.iter().copied().step_by(factor).collect();
    TimeSeries::new(values, series.dt_effective * factor as f64)
}

/// Shift to zero mean and scale to unit population standard deviation.
/// Returns the transformed series together with the (mean, std) pair so the
/// same affine map can be reused on held-out data.
pub fn standardize(series: &TimeSeries) -> Result<(TimeSeries, f64, f64)> {
    let (mean, std) = series.moments();
    if std == 0.0 || !std.is_finite() {
        return Err(Error::DegenerateSignal("series has zero variance; cannot standardize".into()));
    }
    let values = series.values.iter().map(|v| (v - mean) / std).collect();
    Ok((TimeSeries::new(values, series.dt_effective)?, mean, std))
}

/// Apply a previously fitted standardization to another window.
pub fn apply_standardization(series: &TimeSeries, mean: f64, std: f64) -> Result<TimeSeries> {
    if std <= 0.0 || !std.is_finite() || !mean.is_finite() {
        return Err(Error::InvalidArgument("std must be positive and finite".into()));
    }
    let values = series.values.iter().map(|v| (v - mean) / std).collect();
    TimeSeries::new(values, series.dt_effective)
}

/// One-step-ahead prediction split.
///
/// The network is driven by consecutive inputs and scored on predicting the
/// next sample. The first `discard` responses of the training run are
/// transients and carry no target; test pairs continue seamlessly after the
/// training pairs so no state reset is needed between the two phases.
#[derive(Debug, Clone)]
pub struct PredictionDataset {
    /// Inputs driving the training run: `discard + train_len` samples.
    pub train_inputs: TimeSeries,
    /// Targets for the scored part of the training run: `train_len` samples,
    /// aligned with the responses that survive the discard.
    pub train_targets: TimeSeries,
    /// Inputs driving the held-out run: `test_len` samples.
    pub test_inputs: TimeSeries,
    /// Targets aligned one step ahead of `test_inputs`.
    pub test_targets: TimeSeries,
    pub discard: usize,
}

impl PredictionDataset {
    /// Training and test inputs joined into the single continuous drive
    /// sequence they were cut from.
    pub fn full_inputs(&self) -> Result<TimeSeries> {
        self.train_inputs.concat(&self.test_inputs)
    }
}

/// Cut a series into the one-step-ahead training and test windows.
///
/// Requires `series.len() >= discard + train_len + test_len + 1`; the final
/// `+1` is the look-ahead target of the last test input.
pub fn make_prediction_pairs(
    series: &TimeSeries,
    train_len: usize,
    discard: usize,
    test_len: usize,
) -> Result<PredictionDataset> {
    if train_len == 0 || test_len == 0 {
        return Err(Error::InvalidArgument("train_len and test_len must be >= 1".into()));
    }
    let needed = discard + train_len + test_len + 1;
    if series.len() < needed {
        return Err(Error::InvalidArgument(format!(
            "series of {} samples is too short for discard {} + train {} + test {} + 1 = {}",
            series.len(),
            discard,
            train_len,
            test_len,
            needed
        )));
    }
    let train_end = discard + train_len;
    Ok(PredictionDataset {
        train_inputs: series.slice(0, train_end)?,
        train_targets: series.slice(discard + 1, train_len)?,
        test_inputs: series.slice(train_end, test_len)?,
        test_targets: series.slice(train_end + 1, test_len)?,
        discard,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: &[f64]) -> TimeSeries {
        TimeSeries::new(values.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn zero_delay_fixed_point_is_exact() {
        // a/b - 1 = 1 and p = 10 put the fixed point at x* = 1.
        let params = MgParams { tau: 0.0, x0: 1.0, ..MgParams::default() };
        let ts = integrate_mg(&params, 100, 0).unwrap();
        for v in ts.values() {
            assert!((v - 1.0).abs() < 1e-12, "drifted off the fixed point: {v}");
        }
    }

    #[test]
    fn first_sample_stays_near_initial_history() {
        for dt in [0.1, 0.05, 0.025] {
            let params = MgParams { dt, ..MgParams::default() };
            let ts = integrate_mg(&params, 1, 0).unwrap();
            let drift = (ts.values()[0] - 1.2).abs();
            assert!(drift < 0.05 * dt / 0.025, "dt={dt}: first-step drift {drift}");
        }
    }

    #[test]
    fn coarse_run_matches_step_refined_oracle() {
        // Same integrator at dt/10 serves as the reference over t in [0, 50].
        let coarse = integrate_mg(&MgParams::default(), 500, 0).unwrap();
        let fine_params = MgParams { dt: 0.01, ..MgParams::default() };
        let fine = integrate_mg(&fine_params, 5000, 0).unwrap();

        let scale = fine.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0f64;
        for (k, v) in coarse.values().iter().enumerate() {
            let reference = fine.values()[(k + 1) * 10 - 1];
            worst = worst.max((v - reference).abs() / scale);
        }
        assert!(worst < 1e-3, "relative deviation from refined run: {worst}");
    }

    #[test]
    fn halving_dt_cuts_short_horizon_error_by_at_least_eight() {
        // Order check on the zero-delay equation, where no interpolation is
        // involved; reference is the same integrator at dt/8.
        let base = MgParams { tau: 0.0, x0: 0.5, dt: 0.2, ..MgParams::default() };
        let horizon = 20.0;
        let err_at = |dt: f64| -> f64 {
            let n = (horizon / dt).round() as usize;
            let run = integrate_mg(&MgParams { dt, ..base }, n, 0).unwrap();
            let fine_dt = dt / 8.0;
            let fine = integrate_mg(&MgParams { dt: fine_dt, ..base }, n * 8, 0).unwrap();
            run.values()
                .iter()
                .enumerate()
                .map(|(k, v)| (v - fine.values()[(k + 1) * 8 - 1]).abs())
                .fold(0.0f64, f64::max)
        };
        let e_coarse = err_at(0.2);
        let e_half = err_at(0.1);
        assert!(
            e_coarse / e_half >= 8.0,
            "observed reduction {} (errors {e_coarse} vs {e_half})",
            e_coarse / e_half
        );
    }

    #[test]
    fn delayed_regime_has_positive_divergence_rate() {
        // Two runs separated by 1e-9 in initial history must separate
        // exponentially for tau = 17. The largest Lyapunov exponent is only
        // ~6e-3 per time unit, so the window has to be long.
        let p1 = MgParams::default();
        let p2 = MgParams { x0: 1.2 + 1e-9, ..p1 };
        let n = 20_000; // t in [0, 2000]
        let r1 = integrate_mg(&p1, n, 0).unwrap();
        let r2 = integrate_mg(&p2, n, 0).unwrap();
        let gap_at = |k: usize| (r1.values()[k] - r2.values()[k]).abs();
        let early: f64 = (100..200).map(gap_at).sum::<f64>() / 100.0;
        let late: f64 = (19_900..20_000).map(gap_at).sum::<f64>() / 100.0;
        assert!(
            late > 100.0 * early && early > 0.0,
            "no exponential divergence: early {early}, late {late}"
        );
    }

    #[test]
    fn divergent_parameters_are_reported() {
        // Negative damping grows the state past f64 range.
        let params = MgParams { a: 0.0, b: -2.0, tau: 0.0, x0: 1.0, ..MgParams::default() };
        match integrate_mg(&params, 10_000, 0) {
            Err(Error::IntegrationDiverged { .. }) => {}
            other => panic!("expected divergence error, got {other:?}"),
        }
    }

    #[test]
    fn tau_not_multiple_of_dt_is_rejected() {
        let params = MgParams { tau: 17.05, ..MgParams::default() };
        assert!(matches!(integrate_mg(&params, 10, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn downsample_keeps_every_third_sample() {
        let ts = series(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]);
        let down = downsample(&ts, 3).unwrap();
        assert_eq!(down.values(), &[1.0, 4.0, 7.0, 10.0]);
        assert_eq!(down.dt_effective(), 3.0);
    }

    #[test]
    fn downsample_factor_one_is_identity() {
        let ts = series(&[0.5, -1.5, 2.0]);
        assert_eq!(downsample(&ts, 1).unwrap(), ts);
    }

    #[test]
    fn downsample_factor_zero_is_rejected() {
        let ts = series(&[1.0, 2.0]);
        assert!(matches!(downsample(&ts, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn downsample_composes_multiplicatively() {
        let values: Vec<f64> = (0..500).map(|k| (k as f64 * 0.37).sin()).collect();
        let ts = series(&values);
        for (f1, f2) in [(2, 3), (3, 2), (4, 5), (1, 7)] {
            let chained = downsample(&downsample(&ts, f1).unwrap(), f2).unwrap();
            let direct = downsample(&ts, f1 * f2).unwrap();
            assert_eq!(chained, direct, "factors {f1} then {f2}");
        }
    }

    #[test]
    fn standardize_hits_unit_moments() {
        let ts = series(&[0.0, 2.0]);
        let (out, mean, std) = standardize(&ts).unwrap();
        assert_eq!(mean, 1.0);
        assert_eq!(std, 1.0);
        assert_eq!(out.values(), &[-1.0, 1.0]);
    }

    #[test]
    fn standardize_is_stable_on_standardized_input() {
        let values: Vec<f64> = (0..200).map(|k| (k as f64 * 0.11).cos()).collect();
        let (once, _, _) = standardize(&series(&values)).unwrap();
        let (twice, mean, std) = standardize(&once).unwrap();
        assert!(mean.abs() < 1e-12);
        assert!((std - 1.0).abs() < 1e-12);
        for (a, b) in once.values().iter().zip(twice.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn standardize_rejects_constant_series() {
        let ts = series(&[3.0, 3.0, 3.0]);
        assert!(matches!(standardize(&ts), Err(Error::DegenerateSignal(_))));
    }

    #[test]
    fn prediction_pairs_match_hand_split() {
        // 10 samples, train 3, discard 1, test 2:
        // inputs s1..s4 with scored targets s3..s5, then test (s5,s6)->(s6,s7).
        let ts = series(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]);
        let ds = make_prediction_pairs(&ts, 3, 1, 2).unwrap();
        assert_eq!(ds.train_inputs.values(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(ds.train_targets.values(), &[3.0, 4.0, 5.0]);
        assert_eq!(ds.test_inputs.values(), &[5.0, 6.0]);
        assert_eq!(ds.test_targets.values(), &[6.0, 7.0]);
        assert_eq!(ds.discard, 1);
    }

    #[test]
    fn prediction_pairs_need_one_lookahead_sample() {
        let ts = series(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        // discard 1 + train 3 + test 2 + 1 = 7 > 6.
        assert!(matches!(make_prediction_pairs(&ts, 3, 1, 2), Err(Error::InvalidArgument(_))));
        let ts7 = series(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        assert!(make_prediction_pairs(&ts7, 3, 1, 2).is_ok());
    }

    #[test]
    fn full_inputs_rejoin_continuously() {
        let values: Vec<f64> = (0..20).map(|k| k as f64).collect();
        let ds = make_prediction_pairs(&series(&values), 5, 2, 4).unwrap();
        let joined = ds.full_inputs().unwrap();
        assert_eq!(joined.values(), &values[..11]);
    }
}
