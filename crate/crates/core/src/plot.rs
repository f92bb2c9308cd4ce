//! Minimal native SVG plots: a learning curve and a prediction overlay.
//!
//! CSV artifacts are the contract; these plots exist so a run can be eyed
//! without spinning up a plotting stack. Output is plain SVG text built
//! with the same deterministic float formatting as the CSV writers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::learning::LearningRecord;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 50.0;

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(f64::MIN_POSITIVE);
        MARGIN_LEFT + (v - self.x_min) / span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(f64::MIN_POSITIVE);
        HEIGHT - MARGIN_BOTTOM - (v - self.y_min) / span * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn svg_open(out: &mut String, comments: &[String]) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"12\">"
    );
    for line in comments {
        let safe = line.replace("--", "-");
        let _ = writeln!(out, "<!-- {safe} -->");
    }
    let _ = writeln!(out, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
}

fn axes(out: &mut String, x_label: &str, y_label: &str) {
    let x0 = MARGIN_LEFT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y1 = MARGIN_TOP;
    let _ = writeln!(
        out,
        "<path d=\"M {x0} {y1} L {x0} {y0} L {x1} {y0}\" stroke=\"black\" fill=\"none\"/>"
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{x_label}</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{y_label}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
}

fn polyline(out: &mut String, points: &[(f64, f64)], color: &str, width: f64) {
    if points.is_empty() {
        return;
    }
    let mut path = String::new();
    for (i, (x, y)) in points.iter().enumerate() {
        let _ = write!(path, "{}{x:.2},{y:.2}", if i == 0 { "" } else { " " });
    }
    let _ = writeln!(
        out,
        "<polyline points=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\"/>"
    );
}

fn x_ticks(out: &mut String, frame: &Frame, count: usize) {
    let y0 = HEIGHT - MARGIN_BOTTOM;
    for k in 0..=count {
        let v = frame.x_min + (frame.x_max - frame.x_min) * k as f64 / count as f64;
        let x = frame.x(v);
        let _ = writeln!(
            out,
            "<line x1=\"{x:.1}\" y1=\"{y0}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"black\"/>",
            y0 + 5.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{:.0}</text>",
            y0 + 18.0,
            v
        );
    }
}

fn y_tick(out: &mut String, frame: &Frame, v: f64, label: &str) {
    let y = frame.y(v);
    let _ = writeln!(
        out,
        "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{MARGIN_LEFT}\" y2=\"{y:.1}\" stroke=\"black\"/>",
        MARGIN_LEFT - 5.0
    );
    let _ = writeln!(
        out,
        "<line x1=\"{MARGIN_LEFT}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#dddddd\"/>",
        WIDTH - MARGIN_RIGHT
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{label}</text>",
        MARGIN_LEFT - 8.0,
        y + 4.0
    );
}

/// Accepted-error curve over iterations on a log error axis, with the
/// candidate errors as a faint background trace.
pub fn plot_learning_curve(
    path: &Path,
    record: &LearningRecord,
    comments: &[String],
) -> Result<()> {
    if record.steps.is_empty() {
        return Err(Error::InvalidArgument("empty learning record".into()));
    }
    let finite: Vec<f64> = record
        .steps
        .iter()
        .flat_map(|s| [s.epsilon_candidate, s.epsilon_accepted])
        .chain([record.initial_epsilon])
        .filter(|e| e.is_finite() && *e > 0.0)
        .collect();
    if finite.is_empty() {
        return Err(Error::InvalidArgument("learning record holds no finite errors".into()));
    }
    let y_lo = finite.iter().cloned().fold(f64::INFINITY, f64::min).log10().floor();
    let y_hi = finite.iter().cloned().fold(0.0f64, f64::max).log10().ceil();
    let frame = Frame {
        x_min: 0.0,
        x_max: record.steps.len() as f64,
        y_min: y_lo,
        y_max: (y_hi).max(y_lo + 1.0),
    };

    let mut out = String::new();
    svg_open(&mut out, comments);
    axes(&mut out, "iteration", "error");
    x_ticks(&mut out, &frame, 5);
    let mut decade = y_lo;
    while decade <= frame.y_max + 1e-9 {
        y_tick(&mut out, &frame, decade, &format!("1e{}", decade as i64));
        decade += 1.0;
    }

    let candidates: Vec<(f64, f64)> = record
        .steps
        .iter()
        .filter(|s| s.epsilon_candidate.is_finite() && s.epsilon_candidate > 0.0)
        .map(|s| (frame.x(s.k as f64), frame.y(s.epsilon_candidate.log10())))
        .collect();
    polyline(&mut out, &candidates, "#cccccc", 0.5);

    let mut accepted = vec![(frame.x(0.0), frame.y(record.initial_epsilon.log10()))];
    accepted.extend(
        record
            .steps
            .iter()
            .filter(|s| s.epsilon_accepted.is_finite())
            .map(|s| (frame.x(s.k as f64), frame.y(s.epsilon_accepted.log10()))),
    );
    polyline(&mut out, &accepted, "#d62728", 1.5);

    let _ = writeln!(out, "</svg>");
    fs::write(path, out)?;
    Ok(())
}

/// Standardized target and prediction over the first `max_points` test
/// steps.
pub fn plot_prediction_overlay(
    path: &Path,
    target: &[f64],
    prediction: &[f64],
    max_points: usize,
    comments: &[String],
) -> Result<()> {
    if target.len() != prediction.len() || target.is_empty() {
        return Err(Error::InvalidArgument(
            "target and prediction must be non-empty and equally long".into(),
        ));
    }
    let shown = target.len().min(max_points);
    let all = target[..shown].iter().chain(&prediction[..shown]);
    let y_min = all.clone().cloned().fold(f64::INFINITY, f64::min);
    let y_max = all.cloned().fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.05 * (y_max - y_min).max(1e-12);
    let frame = Frame {
        x_min: 0.0,
        x_max: (shown - 1).max(1) as f64,
        y_min: y_min - pad,
        y_max: y_max + pad,
    };

    let mut out = String::new();
    svg_open(&mut out, comments);
    axes(&mut out, "test step", "standardized value");
    x_ticks(&mut out, &frame, 5);
    for k in 0..=4 {
        let v = frame.y_min + (frame.y_max - frame.y_min) * k as f64 / 4.0;
        y_tick(&mut out, &frame, v, &format!("{v:.2}"));
    }

    let to_points = |values: &[f64]| -> Vec<(f64, f64)> {
        values
            .iter()
            .take(shown)
            .enumerate()
            .map(|(i, v)| (frame.x(i as f64), frame.y(*v)))
            .collect()
    };
    polyline(&mut out, &to_points(target), "#1f77b4", 1.5);
    polyline(&mut out, &to_points(prediction), "#d62728", 1.2);

    let legend_x = WIDTH - MARGIN_RIGHT - 150.0;
    let _ = writeln!(
        out,
        "<line x1=\"{legend_x}\" y1=\"30\" x2=\"{}\" y2=\"30\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\
         <text x=\"{}\" y=\"34\">target</text>",
        legend_x + 24.0,
        legend_x + 30.0
    );
    let _ = writeln!(
        out,
        "<line x1=\"{legend_x}\" y1=\"48\" x2=\"{}\" y2=\"48\" stroke=\"#d62728\" stroke-width=\"1.2\"/>\
         <text x=\"{}\" y=\"52\">prediction</text>",
        legend_x + 24.0,
        legend_x + 30.0
    );
    let _ = writeln!(out, "</svg>");
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::{greedy_train, LearnerConfig};
    use crate::mackey_glass::{standardize, TimeSeries};
    use crate::network::Trajectory;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn plots_are_valid_svg_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data: Vec<f64> = (0..6 * 60).map(|_| rng.random::<f64>()).collect();
        let trajectory = Trajectory::from_flat(6, 1.0, data).unwrap();
        let raw: Vec<f64> = (0..60).map(|_| rng.random::<f64>()).collect();
        let (target, _, _) = standardize(&TimeSeries::new(raw, 1.0).unwrap()).unwrap();
        let record = greedy_train(
            &trajectory,
            &target,
            &LearnerConfig { max_iterations: 50, seed: 2, discard: 5, strict_improvement: true },
        )
        .unwrap();

        let dir = tempfile::tempdir().unwrap();
        let curve_a = dir.path().join("curve_a.svg");
        let curve_b = dir.path().join("curve_b.svg");
        plot_learning_curve(&curve_a, &record, &["config_hash 123".into()]).unwrap();
        plot_learning_curve(&curve_b, &record, &["config_hash 123".into()]).unwrap();
        let text = std::fs::read_to_string(&curve_a).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.trim_end().ends_with("</svg>"));
        assert!(text.contains("config_hash 123"));
        assert_eq!(std::fs::read(&curve_a).unwrap(), std::fs::read(&curve_b).unwrap());

        let overlay = dir.path().join("overlay.svg");
        plot_prediction_overlay(&overlay, target.values(), &vec![0.0; target.len()], 300, &[])
            .unwrap();
        let text = std::fs::read_to_string(&overlay).unwrap();
        assert!(text.contains("prediction"));
        assert!(text.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(plot_prediction_overlay(
            Path::new("/tmp/unused.svg"),
            &[1.0, 2.0],
            &[1.0],
            10,
            &[],
        )
        .is_err());
    }
}
