//! Experiment driver: error-vs-time sweeps, smoothing, pattern analysis,
//! figure-data reproduction and the acceptance checks.
//!
//! A sweep integrates one evolution per (path, T) grid point, collects the
//! final computational error, and smooths each curve with a centered moving
//! geometric mean (the error spans many decades, so arithmetic averaging
//! would be dominated by the oscillation peaks). Sweep points run in
//! parallel; assembly is order-preserving, so identical specs produce
//! byte-identical CSV output.

pub mod acceptance;
pub mod figures;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::dynamics::{evolve_full, evolve_reduced, EvolutionConfig, MarkedProjector};
use crate::error::{Error, Result};
use crate::model::FullSearchModel;
use crate::schedule::{PathKind, SchedulePath};

/// Which model a sweep drives. Sweeps default to the reduced model; the
/// full model is the brute-force cross-check.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepModel {
    Reduced { ratio: f64 },
    Full(FullSearchModel),
}

impl SweepModel {
    pub fn describe(&self) -> String {
        match self {
            SweepModel::Reduced { ratio } => format!("reduced r={ratio}"),
            SweepModel::Full(m) => {
                format!("full N={} M={}", m.n_items(), m.marked_count())
            }
        }
    }
}

/// Sweep description: model, paths, T grid, integrator settings, smoothing.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub model: SweepModel,
    pub paths: Vec<PathKind>,
    pub t_grid: Vec<f64>,
    pub evolution: EvolutionConfig,
    pub smoothing_window: usize,
    /// Optional (threshold, dt) pair: runs with T above the threshold use
    /// the coarser step. Recorded in the output metadata.
    pub coarse_step_above: Option<(f64, f64)>,
}

impl SweepSpec {
    /// Reduced-model sweep over the default grid with default integration.
    pub fn reduced(ratio: f64, paths: Vec<PathKind>) -> Self {
        SweepSpec {
            model: SweepModel::Reduced { ratio },
            paths,
            t_grid: default_t_grid(),
            evolution: EvolutionConfig::default(),
            smoothing_window: 9,
            coarse_step_above: Some((1e3, 0.05)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths.is_empty() {
            return Err(Error::Config("sweep needs at least one path".into()));
        }
        if self.t_grid.is_empty() {
            return Err(Error::Config("sweep needs a non-empty T grid".into()));
        }
        if self.t_grid[0] <= 0.0 {
            return Err(Error::Config("all sweep times must be positive".into()));
        }
        if self.t_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "sweep T grid must be strictly increasing".into(),
            ));
        }
        check_window(self.smoothing_window, self.t_grid.len())?;
        Ok(())
    }
}

/// Default T grid: 200 logarithmically spaced points over [10, 1e4].
pub fn default_t_grid() -> Vec<f64> {
    log_grid(10.0, 1e4, 200)
}

/// `points` logarithmically spaced values over [lo, hi], inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Insert extra grid values, keeping the grid sorted and deduplicated.
pub fn grid_with(mut grid: Vec<f64>, extra: &[f64]) -> Vec<f64> {
    grid.extend_from_slice(extra);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub total_time: f64,
    pub delta_raw: f64,
    pub delta_smoothed: f64,
}

#[derive(Debug, Clone)]
pub struct SweepCurve {
    pub path: PathKind,
    pub rows: Vec<SweepRow>,
}

impl SweepCurve {
    pub fn raw(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.delta_raw).collect()
    }

    pub fn smoothed(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.delta_smoothed).collect()
    }

    /// Smoothed error at an exact grid time.
    pub fn smoothed_at(&self, total_time: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.total_time == total_time)
            .map(|r| r.delta_smoothed)
    }
}

#[derive(Debug, Clone)]
pub struct SweepMetadata {
    pub model: String,
    pub dt: f64,
    pub coarse_step_above: Option<(f64, f64)>,
    pub renormalize: bool,
    pub smoothing_window: usize,
    pub version: String,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub curves: Vec<SweepCurve>,
    pub metadata: SweepMetadata,
}

impl SweepResult {
    pub fn curve(&self, kind: &PathKind) -> Option<&SweepCurve> {
        self.curves.iter().find(|c| &c.path == kind)
    }

    /// One CSV file per path plus a metadata file and a plot script.
    /// Returns the written file paths.
    pub fn write_dir(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        for curve in &self.curves {
            let mut csv = String::from("T,delta_raw,delta_smoothed\n");
            for row in &curve.rows {
                writeln!(
                    csv,
                    "{},{:.16e},{:.16e}",
                    row.total_time, row.delta_raw, row.delta_smoothed
                )
                .expect("string write");
            }
            let file = dir.join(format!("{stem}_{}.csv", sanitize(&curve.path.cli_name())));
            fs::write(&file, csv)?;
            files.push(file);
        }

        let meta_file = dir.join(format!("{stem}_metadata.txt"));
        fs::write(&meta_file, self.metadata_text())?;
        files.push(meta_file);

        let plot_file = dir.join(format!("{stem}.plot"));
        let series: Vec<String> = self
            .curves
            .iter()
            .map(|c| format!("{stem}_{}.csv", sanitize(&c.path.cli_name())))
            .collect();
        fs::write(
            &plot_file,
            plot_script(
                "computational error vs total evolution time",
                "T",
                "delta_smoothed",
                true,
                true,
                &series,
            ),
        )?;
        files.push(plot_file);
        Ok(files)
    }

    pub fn metadata_text(&self) -> String {
        let mut out = String::new();
        let m = &self.metadata;
        writeln!(out, "model = {}", m.model).unwrap();
        writeln!(out, "dt = {}", m.dt).unwrap();
        match m.coarse_step_above {
            Some((threshold, dt)) => {
                writeln!(out, "coarse_dt = {dt} above T = {threshold}").unwrap()
            }
            None => writeln!(out, "coarse_dt = none").unwrap(),
        }
        writeln!(out, "renormalize = {}", m.renormalize).unwrap();
        writeln!(out, "smoothing_window = {}", m.smoothing_window).unwrap();
        writeln!(out, "version = {}", m.version).unwrap();
        out
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Renderer-agnostic plot declaration.
pub fn plot_script(
    title: &str,
    x: &str,
    y: &str,
    logx: bool,
    logy: bool,
    series: &[String],
) -> String {
    let mut out = String::new();
    writeln!(out, "title: {title}").unwrap();
    writeln!(out, "x: {x}").unwrap();
    writeln!(out, "y: {y}").unwrap();
    writeln!(out, "xscale: {}", if logx { "log" } else { "linear" }).unwrap();
    writeln!(out, "yscale: {}", if logy { "log" } else { "linear" }).unwrap();
    for s in series {
        writeln!(out, "series: {s}").unwrap();
    }
    out
}

/// Run one evolution per (path, T) and smooth each curve.
///
/// Points execute on the global worker pool; per-point failures carry
/// their (path, T) context.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;

    let jobs: Vec<(usize, usize)> = (0..spec.paths.len())
        .flat_map(|p| (0..spec.t_grid.len()).map(move |t| (p, t)))
        .collect();

    let raw: Vec<f64> = jobs
        .par_iter()
        .map(|&(path_idx, t_idx)| {
            let kind = &spec.paths[path_idx];
            let total_time = spec.t_grid[t_idx];
            sweep_point(spec, kind, total_time).map_err(|e| Error::SweepRun {
                path: kind.cli_name(),
                total_time,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut curves = Vec::with_capacity(spec.paths.len());
    for (path_idx, kind) in spec.paths.iter().enumerate() {
        let deltas: Vec<f64> = (0..spec.t_grid.len())
            .map(|t_idx| raw[path_idx * spec.t_grid.len() + t_idx])
            .collect();
        let smoothed = geometric_smooth(&deltas, spec.smoothing_window);
        let rows = spec
            .t_grid
            .iter()
            .zip(deltas.iter().zip(&smoothed))
            .map(|(&total_time, (&delta_raw, &delta_smoothed))| SweepRow {
                total_time,
                delta_raw,
                delta_smoothed,
            })
            .collect();
        curves.push(SweepCurve {
            path: kind.clone(),
            rows,
        });
    }

    Ok(SweepResult {
        curves,
        metadata: SweepMetadata {
            model: spec.model.describe(),
            dt: spec.evolution.time_step(),
            coarse_step_above: spec.coarse_step_above,
            renormalize: spec.evolution.renormalize(),
            smoothing_window: spec.smoothing_window,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
    })
}

fn sweep_point(spec: &SweepSpec, kind: &PathKind, total_time: f64) -> Result<f64> {
    let mut config = spec.evolution.clone().endpoints_only();
    if let Some((threshold, coarse_dt)) = spec.coarse_step_above {
        if total_time > threshold {
            config = config.with_steps_per_unit_time(1.0 / coarse_dt)?;
        }
    }
    let path = SchedulePath::new(kind.clone(), total_time)?;
    match &spec.model {
        SweepModel::Reduced { ratio } => {
            let traj = evolve_reduced(*ratio, &path, &config)?;
            traj.final_error(&MarkedProjector::reduced())
        }
        SweepModel::Full(model) => {
            let traj = evolve_full(model, &path, &config)?;
            traj.final_error(&MarkedProjector::full(model))
        }
    }
}

/// Re-smooth a sweep with a different window.
pub fn smooth(result: &SweepResult, window: usize) -> Result<SweepResult> {
    let len = result.curves.first().map(|c| c.rows.len()).unwrap_or(0);
    check_window(window, len)?;
    let mut out = result.clone();
    out.metadata.smoothing_window = window;
    for curve in &mut out.curves {
        let raw: Vec<f64> = curve.rows.iter().map(|r| r.delta_raw).collect();
        let smoothed = geometric_smooth(&raw, window);
        for (row, s) in curve.rows.iter_mut().zip(smoothed) {
            row.delta_smoothed = s;
        }
    }
    Ok(out)
}

fn check_window(window: usize, len: usize) -> Result<()> {
    if window.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "smoothing window must be odd, got {window}"
        )));
    }
    if window > len {
        return Err(Error::Config(format!(
            "smoothing window {window} exceeds the grid length {len}"
        )));
    }
    Ok(())
}

/// Centered moving geometric mean. Near the edges the window shrinks
/// symmetrically, so the first and last points pass through unchanged.
pub fn geometric_smooth(values: &[f64], window: usize) -> Vec<f64> {
    let n = values.len();
    let half = window / 2;
    (0..n)
        .map(|i| {
            let reach = half.min(i).min(n - 1 - i);
            let slice = &values[i - reach..=i + reach];
            // uniform windows (including width one) pass through exactly
            if slice.iter().all(|&v| v == slice[0]) {
                return slice[0];
            }
            let log_sum: f64 = slice.iter().map(|&v| v.max(f64::MIN_POSITIVE).ln()).sum();
            (log_sum / slice.len() as f64).exp()
        })
        .collect()
}

/// Oscillation pattern of a raw error curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OscillationPattern {
    /// Deep dips: local minima at least 100x below neighboring maxima.
    TouchesZero,
    /// Oscillates (or decays) without approaching zero.
    BoundedAway,
}

/// Classify a path's raw curve by its dip depth. Requires at least 100
/// grid points to resolve the oscillation statistics.
pub fn oscillation_pattern(result: &SweepResult, kind: &PathKind) -> Result<OscillationPattern> {
    let curve = result
        .curve(kind)
        .ok_or_else(|| Error::Domain(format!("no sweep curve for path `{}`", kind.cli_name())))?;
    if curve.rows.len() < 100 {
        return Err(Error::Resolution(format!(
            "oscillation analysis needs at least 100 grid points, got {}",
            curve.rows.len()
        )));
    }
    let raw = curve.raw();
    let (minima, maxima) = local_extrema(&raw);
    for &i in &minima {
        let left = maxima.iter().rev().find(|&&j| j < i).map(|&j| raw[j]);
        let right = maxima.iter().find(|&&j| j > i).map(|&j| raw[j]);
        if let (Some(left), Some(right)) = (left, right) {
            if left.min(right) >= 100.0 * raw[i] {
                return Ok(OscillationPattern::TouchesZero);
            }
        }
    }
    Ok(OscillationPattern::BoundedAway)
}

fn local_extrema(values: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut minima = Vec::new();
    let mut maxima = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        if values[i] < values[i - 1] && values[i] <= values[i + 1] {
            minima.push(i);
        }
        if values[i] > values[i - 1] && values[i] >= values[i + 1] {
            maxima.push(i);
        }
    }
    (minima, maxima)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn synthetic_result(rows: Vec<(f64, f64)>) -> SweepResult {
        let curve = SweepCurve {
            path: PathKind::Linear,
            rows: rows
                .into_iter()
                .map(|(t, d)| SweepRow {
                    total_time: t,
                    delta_raw: d,
                    delta_smoothed: d,
                })
                .collect(),
        };
        SweepResult {
            curves: vec![curve],
            metadata: SweepMetadata {
                model: "reduced r=0.1".into(),
                dt: 0.01,
                coarse_step_above: None,
                renormalize: true,
                smoothing_window: 1,
                version: "test".into(),
            },
        }
    }

    #[test]
    fn smoothing_leaves_constants_alone() {
        let v = vec![3.0; 25];
        assert_eq!(geometric_smooth(&v, 9), v);
    }

    #[test]
    fn window_one_is_identity() {
        let v = vec![1.0, 10.0, 100.0, 2.0];
        assert_eq!(geometric_smooth(&v, 1), v);
    }

    #[test]
    fn smoothing_is_a_geometric_mean() {
        let v = vec![1.0, 100.0, 1.0];
        let s = geometric_smooth(&v, 3);
        assert_relative_eq!(
            s[1],
            (1.0f64 * 100.0 * 1.0).powf(1.0 / 3.0),
            max_relative = 1e-12
        );
        // symmetric shrink: endpoints untouched
        assert_eq!(s[0], 1.0);
        assert_eq!(s[2], 1.0);
    }

    #[test]
    fn even_window_is_rejected() {
        let result = synthetic_result((0..120).map(|i| (i as f64 + 1.0, 1e-3)).collect());
        assert!(matches!(smooth(&result, 4), Err(Error::Config(_))));
        assert!(smooth(&result, 121).is_err());
        assert!(smooth(&result, 9).is_ok());
    }

    #[test]
    fn spec_validation() {
        let mut spec = SweepSpec::reduced(0.1, vec![PathKind::Linear]);
        assert!(spec.validate().is_ok());
        spec.t_grid = vec![5.0, 5.0];
        assert!(spec.validate().is_err());
        spec.t_grid = vec![-1.0, 5.0];
        assert!(spec.validate().is_err());
        spec.t_grid = vec![];
        assert!(spec.validate().is_err());
        let empty = SweepSpec {
            paths: vec![],
            ..SweepSpec::reduced(0.1, vec![PathKind::Linear])
        };
        assert!(empty.validate().is_err());
    }

    #[test]
    fn grid_helpers() {
        let g = log_grid(10.0, 1000.0, 3);
        assert_relative_eq!(g[0], 10.0, max_relative = 1e-12);
        assert_relative_eq!(g[1], 100.0, max_relative = 1e-12);
        assert_relative_eq!(g[2], 1000.0, max_relative = 1e-12);

        let g = grid_with(vec![1.0, 2.0, 3.0], &[2.5, 2.0]);
        assert_eq!(g, vec![1.0, 2.0, 2.5, 3.0]);

        assert_eq!(default_t_grid().len(), 200);
    }

    #[test]
    fn pattern_classifier_on_synthetic_curves() {
        // deep dips
        let dips: Vec<(f64, f64)> = (0..150)
            .map(|i| {
                let t = 10.0 + i as f64;
                let phase = (i as f64 * 0.7).cos().abs();
                (t, 1e-4 * (phase * phase).max(1e-4))
            })
            .collect();
        let result = synthetic_result(dips);
        assert_eq!(
            oscillation_pattern(&result, &PathKind::Linear).unwrap(),
            OscillationPattern::TouchesZero
        );

        // shallow oscillation
        let shallow: Vec<(f64, f64)> = (0..150)
            .map(|i| (10.0 + i as f64, 1e-4 * (2.0 + (i as f64 * 0.7).cos())))
            .collect();
        let result = synthetic_result(shallow);
        assert_eq!(
            oscillation_pattern(&result, &PathKind::Linear).unwrap(),
            OscillationPattern::BoundedAway
        );

        // too coarse
        let coarse: Vec<(f64, f64)> = (0..50).map(|i| (10.0 + i as f64, 1e-4)).collect();
        let result = synthetic_result(coarse);
        assert!(matches!(
            oscillation_pattern(&result, &PathKind::Linear),
            Err(Error::Resolution(_))
        ));
        assert!(matches!(
            oscillation_pattern(&result, &PathKind::Cubic),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn sweep_is_deterministic_and_bounded() {
        let spec = SweepSpec {
            model: SweepModel::Reduced { ratio: 0.1 },
            paths: vec![PathKind::Linear, PathKind::Cubic],
            t_grid: log_grid(5.0, 50.0, 7),
            evolution: EvolutionConfig::default(),
            smoothing_window: 3,
            coarse_step_above: None,
        };
        let a = run_sweep(&spec).unwrap();
        let b = run_sweep(&spec).unwrap();
        for (ca, cb) in a.curves.iter().zip(&b.curves) {
            assert_eq!(ca.rows, cb.rows);
            for row in &ca.rows {
                assert!((0.0..=1.0).contains(&row.delta_raw));
                assert!(row.delta_smoothed > 0.0);
            }
        }

        let dir = tempfile::tempdir().unwrap();
        let files_a = a.write_dir(dir.path(), "sweep").unwrap();
        let bytes_a: Vec<Vec<u8>> = files_a.iter().map(|f| fs::read(f).unwrap()).collect();
        let files_b = b.write_dir(dir.path(), "sweep").unwrap();
        let bytes_b: Vec<Vec<u8>> = files_b.iter().map(|f| fs::read(f).unwrap()).collect();
        assert_eq!(bytes_a, bytes_b);
        assert_eq!(files_a.len(), 4); // two curves + metadata + plot script
    }

    #[test]
    fn full_model_sweep_agrees_with_reduced() {
        let model = FullSearchModel::with_first_marked(10, 1).unwrap();
        let grid = vec![10.0, 20.0];
        let full_spec = SweepSpec {
            model: SweepModel::Full(model),
            paths: vec![PathKind::Linear],
            t_grid: grid.clone(),
            evolution: EvolutionConfig::default(),
            smoothing_window: 1,
            coarse_step_above: None,
        };
        let reduced_spec = SweepSpec {
            model: SweepModel::Reduced { ratio: 0.1 },
            paths: vec![PathKind::Linear],
            t_grid: grid,
            evolution: EvolutionConfig::default(),
            smoothing_window: 1,
            coarse_step_above: None,
        };
        let f = run_sweep(&full_spec).unwrap();
        let r = run_sweep(&reduced_spec).unwrap();
        for (a, b) in f.curves[0].rows.iter().zip(&r.curves[0].rows) {
            assert!((a.delta_raw - b.delta_raw).abs() <= 1e-10);
        }
    }
}
