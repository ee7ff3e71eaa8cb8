//! The acceptance suite: nine numbered checks covering the quoted
//! time-to-error targets, the error-ratio and hierarchy claims, the
//! reduction and spectrum-embedding identities, the first-order overlay,
//! the two independent deviation-center routes, the oscillation-pattern
//! classes, and the numerics hygiene of the integrator and the analytic
//! derivatives.
//!
//! Checks 1, 2 and 7 pin externally quoted target values (time-to-error
//! quotes at N = 100 and the final q-deviation hierarchy); direct
//! integration of the model does not attain them, and they are expected
//! to report FAIL. They are implemented exactly as stated rather than
//! retuned; the measured values are part of each report.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::deviation::{
    first_order_center, gamma0_center, residual_against_center, DeviationOrder,
};
use crate::dynamics::{evolve_full, evolve_reduced, EvolutionConfig, MarkedProjector, Trajectory};
use crate::error::{Error, Result};
use crate::lab::{
    grid_with, log_grid, oscillation_pattern, run_sweep, OscillationPattern, SweepModel,
    SweepResult, SweepSpec,
};
use crate::model::{
    classical_hamiltonian, classical_hessian, fixed_point, fixed_point_s_derivative, gap_lambda,
    FullSearchModel, ReducedHamiltonian,
};
use crate::schedule::{PathKind, SchedulePath};

/// Result of one acceptance check.
#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
}

impl std::fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "criterion {} [{}] {}: {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.details
        )
    }
}

/// Run every acceptance check in order.
pub fn run_all() -> Vec<CriterionOutcome> {
    (1..=9).map(criterion).collect()
}

/// Run one acceptance check (1..=9).
pub fn criterion(id: usize) -> CriterionOutcome {
    match id {
        1 => criterion_1_quoted_times(),
        2 => criterion_2_error_ratio(),
        3 => criterion_3_reduction_equivalence(),
        4 => criterion_4_spectrum_embedding(),
        5 => criterion_5_first_order_overlay(),
        6 => criterion_6_center_oracle_equivalence(),
        7 => criterion_7_hierarchy(),
        8 => criterion_8_oscillation_patterns(),
        9 => criterion_9_numerics_hygiene(),
        other => CriterionOutcome {
            id: other,
            name: "unknown",
            passed: false,
            details: "criterion ids run from 1 to 9".into(),
        },
    }
}

// ---------------------------------------------------------------------
// shared sweeps

/// Times at which quoted targets are read off; inserted into the grid so
/// the smoothed curve can be sampled exactly there.
const TARGET_TIMES: [f64; 4] = [25.0, 46.0, 100.0, 650.0];

/// Six-path sweep of the N = 100, M = 1 model (reduced, r = 0.01) over the
/// default decade grid with the target times inserted.
pub fn quoted_target_sweep() -> &'static SweepResult {
    static CELL: OnceLock<SweepResult> = OnceLock::new();
    CELL.get_or_init(|| {
        let spec = SweepSpec {
            model: SweepModel::Reduced { ratio: 0.01 },
            paths: PathKind::named().to_vec(),
            t_grid: grid_with(log_grid(10.0, 1e4, 200), &TARGET_TIMES),
            evolution: EvolutionConfig::default(),
            smoothing_window: 9,
            coarse_step_above: Some((1e3, 0.05)),
        };
        run_sweep(&spec).expect("target sweep")
    })
}

// Oscillation-pattern sweep. The pattern classes depend only on the
// endpoint-derivative balance, not on the marked fraction, so this uses
// r = 1/4 (N = 4, M = 1) where the dips sit far above both the
// non-adiabatic background and the integrator floor, on a fixed fine step.
fn pattern_sweep() -> &'static SweepResult {
    static CELL: OnceLock<SweepResult> = OnceLock::new();
    CELL.get_or_init(|| {
        let spec = SweepSpec {
            model: SweepModel::Reduced { ratio: 0.25 },
            paths: PathKind::named().to_vec(),
            t_grid: log_grid(100.0, 3000.0, 200),
            evolution: EvolutionConfig::default(),
            smoothing_window: 1,
            coarse_step_above: None,
        };
        run_sweep(&spec).expect("pattern sweep")
    })
}

// ---------------------------------------------------------------------
// criterion 1

fn criterion_1_quoted_times() -> CriterionOutcome {
    let sweep = quoted_target_sweep();
    let at = |kind: &PathKind, t: f64| -> f64 {
        sweep
            .curve(kind)
            .and_then(|c| c.smoothed_at(t))
            .unwrap_or(f64::NAN)
    };
    let cubic_25 = at(&PathKind::Cubic, 25.0);
    let sin2_46 = at(&PathKind::SinusoidalSquare, 46.0);
    let linear_650 = at(&PathKind::Linear, 650.0);

    let cubic_ok = cubic_25 <= 1e-6;
    let sin2_ok = (2e-7..=5e-6).contains(&sin2_46);
    let linear_ok = (2e-7..=5e-6).contains(&linear_650);
    CriterionOutcome {
        id: 1,
        name: "quoted time-to-error targets (N=100, M=1, smoothed)",
        passed: cubic_ok && sin2_ok && linear_ok,
        details: format!(
            "cubic delta(25) = {cubic_25:.3e} (need <= 1e-6), \
             sin2 delta(46) = {sin2_46:.3e} (need in [2e-7, 5e-6]), \
             linear delta(650) = {linear_650:.3e} (need in [2e-7, 5e-6])"
        ),
    }
}

// ---------------------------------------------------------------------
// criterion 2

fn criterion_2_error_ratio() -> CriterionOutcome {
    let sweep = quoted_target_sweep();
    let cubic = sweep
        .curve(&PathKind::Cubic)
        .and_then(|c| c.smoothed_at(100.0))
        .unwrap_or(f64::NAN);
    let linear = sweep
        .curve(&PathKind::Linear)
        .and_then(|c| c.smoothed_at(100.0))
        .unwrap_or(f64::NAN);
    let ratio = cubic / linear;
    CriterionOutcome {
        id: 2,
        name: "order-separation ratio at T=100 (N=100, M=1, smoothed)",
        passed: ratio <= 1e-5,
        details: format!(
            "delta_cubic(100) = {cubic:.3e}, delta_linear(100) = {linear:.3e}, \
             ratio = {ratio:.3e} (need <= 1e-5)"
        ),
    }
}

// ---------------------------------------------------------------------
// criterion 3

fn criterion_3_reduction_equivalence() -> CriterionOutcome {
    let run = || -> Result<(f64, String)> {
        let config = EvolutionConfig::default().endpoints_only();
        let mut worst = 0.0f64;
        let mut worst_case = String::new();
        for (n, m) in [(10usize, 1usize), (100, 1), (100, 2)] {
            let model = FullSearchModel::with_first_marked(n, m)?;
            for kind in [PathKind::Linear, PathKind::Cubic] {
                for total_time in [10.0, 100.0] {
                    let path = SchedulePath::new(kind.clone(), total_time)?;
                    let full = evolve_full(&model, &path, &config)?
                        .final_error(&MarkedProjector::full(&model))?;
                    let reduced = evolve_reduced(model.ratio(), &path, &config)?
                        .final_error(&MarkedProjector::reduced())?;
                    let diff = (full - reduced).abs();
                    if diff > worst {
                        worst = diff;
                        worst_case = format!("N={n}, M={m}, {}, T={total_time}", kind.cli_name());
                    }
                }
            }
        }
        Ok((worst, worst_case))
    };
    match run() {
        Ok((worst, worst_case)) => CriterionOutcome {
            id: 3,
            name: "full/reduced equivalence",
            passed: worst <= 1e-10,
            details: format!(
                "max |delta_full - delta_reduced| = {worst:.3e} at {worst_case} (need <= 1e-10)"
            ),
        },
        Err(e) => failure(3, "full/reduced equivalence", e),
    }
}

// ---------------------------------------------------------------------
// criterion 4

fn criterion_4_spectrum_embedding() -> CriterionOutcome {
    let run = || -> Result<f64> {
        let mut worst = 0.0f64;
        for m_count in [1usize, 2] {
            let model = FullSearchModel::with_first_marked(100, m_count)?;
            let r = model.ratio();
            for i in 0..=20 {
                let s = i as f64 / 20.0;
                let spectrum = model.spectrum(s)?;
                for ev in ReducedHamiltonian::new(r, s)?.eigenvalues() {
                    let nearest = spectrum
                        .iter()
                        .map(|e| (e - ev).abs())
                        .fold(f64::INFINITY, f64::min);
                    worst = worst.max(nearest);
                }
            }
        }
        Ok(worst)
    };
    match run() {
        Ok(worst) => CriterionOutcome {
            id: 4,
            name: "spectrum embedding (N=100, M in {1,2}, 21 s-values)",
            passed: worst <= 1e-12,
            details: format!("worst embedding distance = {worst:.3e} (need <= 1e-12)"),
        },
        Err(e) => failure(4, "spectrum embedding", e),
    }
}

// ---------------------------------------------------------------------
// criterion 5

/// Overlay statistics of a linear-path trajectory against the first-order
/// center: how closely the per-period mean of q - 1/2 tracks B1 (as a
/// fraction of max |B1|) and how much the oscillation amplitude varies
/// (max/min over successive extrema in the middle 80% of the run).
pub struct OverlayStats {
    pub center_mismatch_fraction: f64,
    pub amplitude_ratio: f64,
}

pub fn overlay_stats(traj: &Trajectory) -> Result<OverlayStats> {
    let res = residual_against_center(traj, DeviationOrder::First)?;
    let total_time = *res.times.last().expect("nonempty trajectory");
    let ratio = match traj.model {
        crate::dynamics::TrajectoryModel::Reduced { ratio } => ratio,
        _ => {
            return Err(Error::Domain(
                "overlay stats need a reduced trajectory".into(),
            ))
        }
    };

    let max_b1 = res.b1.iter().fold(0.0f64, |m, b| m.max(b.abs()));
    let (lo, hi) = (0.1 * total_time, 0.9 * total_time);

    // per-period window averages of q - 1/2 against B1 at the window center
    let mut mismatch = 0.0f64;
    let probes = 160;
    for k in 0..=probes {
        let center = lo + (hi - lo) * k as f64 / probes as f64;
        let s = center / total_time;
        let period = 2.0 * std::f64::consts::PI / gap_lambda(ratio, s).sqrt();
        let (wlo, whi) = (center - period / 2.0, center + period / 2.0);
        let mut sum = 0.0;
        let mut count = 0usize;
        for (i, &t) in res.times.iter().enumerate() {
            if t >= wlo && t <= whi {
                sum += res.q[i] - 0.5;
                count += 1;
            }
        }
        if count == 0 {
            continue;
        }
        let mean = sum / count as f64;
        let b1 = first_order_center(ratio, s, traj.path.derivative(center, 1)?).q_shift;
        mismatch = mismatch.max((mean - b1).abs());
    }

    // successive extrema of the residual oscillation
    let mut amplitudes = Vec::new();
    for i in 1..res.times.len() - 1 {
        let t = res.times[i];
        if t < lo || t > hi {
            continue;
        }
        let (a, b, c) = (res.res_q[i - 1], res.res_q[i], res.res_q[i + 1]);
        if (b > a && b >= c) || (b < a && b <= c) {
            amplitudes.push(b.abs());
        }
    }
    let (min_amp, max_amp) = amplitudes
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &a| {
            (lo.min(a), hi.max(a))
        });

    Ok(OverlayStats {
        center_mismatch_fraction: mismatch / max_b1,
        amplitude_ratio: max_amp / min_amp,
    })
}

fn criterion_5_first_order_overlay() -> CriterionOutcome {
    let run = || -> Result<OverlayStats> {
        let path = SchedulePath::new(PathKind::Linear, 1000.0)?;
        let traj = evolve_reduced(0.1, &path, &EvolutionConfig::default())?;
        overlay_stats(&traj)
    };
    match run() {
        Ok(stats) => CriterionOutcome {
            id: 5,
            name: "first-order overlay and action conservation (N=10, M=1, T=1000, linear)",
            passed: stats.center_mismatch_fraction <= 0.05 && stats.amplitude_ratio <= 1.2,
            details: format!(
                "per-period mean of q - 1/2 tracks B1 within {:.3}% of max|B1| (need <= 5%); \
                 oscillation amplitude ratio {:.3} (need <= 1.2)",
                stats.center_mismatch_fraction * 100.0,
                stats.amplitude_ratio
            ),
        },
        Err(e) => failure(5, "first-order overlay", e),
    }
}

// ---------------------------------------------------------------------
// criterion 6

fn criterion_6_center_oracle_equivalence() -> CriterionOutcome {
    let run = || -> Result<(f64, f64)> {
        let s_dot = 1e-3;
        let mut worst_rel = 0.0f64;
        let mut worst_a = 0.0f64;
        for r in [0.01, 0.05, 0.1] {
            for i in 0..=100 {
                let s = i as f64 / 100.0;
                let closed = first_order_center(r, s, s_dot);
                let via_gamma = gamma0_center(r, s, s_dot)?;
                worst_rel = worst_rel
                    .max((via_gamma.q_shift - closed.q_shift).abs() / closed.q_shift.abs());
                worst_a = worst_a
                    .max(via_gamma.p_shift.abs())
                    .max(closed.p_shift.abs());
            }
        }
        Ok((worst_rel, worst_a))
    };
    match run() {
        Ok((worst_rel, worst_a)) => CriterionOutcome {
            id: 6,
            name: "first-order center: closed form vs linearization route",
            passed: worst_rel <= 1e-10 && worst_a == 0.0,
            details: format!(
                "worst relative q-shift deviation = {worst_rel:.3e} on 101 x 3 grid \
                 (need <= 1e-10); largest |p-shift| = {worst_a:.1e} (need 0)"
            ),
        },
        Err(e) => failure(6, "center oracle equivalence", e),
    }
}

// ---------------------------------------------------------------------
// criterion 7

fn criterion_7_hierarchy() -> CriterionOutcome {
    let run = || -> Result<Vec<(PathKind, f64)>> {
        let config = EvolutionConfig::default().endpoints_only();
        PathKind::named()
            .into_iter()
            .map(|kind| {
                let path = SchedulePath::new(kind.clone(), 1000.0)?;
                let traj = evolve_reduced(0.1, &path, &config)?;
                let (_, q) = *traj
                    .projective
                    .as_ref()
                    .expect("reduced trajectory")
                    .last()
                    .expect("samples");
                Ok((kind, (q - 0.5).abs()))
            })
            .collect()
    };
    match run() {
        Ok(devs) => {
            let get = |k: &PathKind| devs.iter().find(|(p, _)| p == k).map(|(_, d)| *d).unwrap();
            let cubic = get(&PathKind::Cubic);
            let firsts = [
                get(&PathKind::Square),
                get(&PathKind::SinusoidalSquare),
                get(&PathKind::SinusoidalCubic),
            ];
            let zeroths = [get(&PathKind::Linear), get(&PathKind::Sinusoidal)];
            let passed = firsts.iter().all(|&f| 10.0 * cubic <= f)
                && firsts
                    .iter()
                    .all(|&f| zeroths.iter().all(|&z| 10.0 * f <= z));
            let listing: Vec<String> = devs
                .iter()
                .map(|(k, d)| format!("{} {d:.3e}", k.cli_name()))
                .collect();
            CriterionOutcome {
                id: 7,
                name: "final |q(T) - 1/2| hierarchy with 10x separation (N=10, M=1, T=1000)",
                passed,
                details: listing.join(", "),
            }
        }
        Err(e) => failure(7, "deviation hierarchy", e),
    }
}

// ---------------------------------------------------------------------
// criterion 8

fn criterion_8_oscillation_patterns() -> CriterionOutcome {
    let sweep = pattern_sweep();
    let run = || -> Result<(bool, String)> {
        let balanced = [
            PathKind::Linear,
            PathKind::Square,
            PathKind::SinusoidalSquare,
            PathKind::Cubic,
        ];
        let unbalanced = [PathKind::Sinusoidal, PathKind::SinusoidalCubic];

        let mut classes_ok = true;
        let mut notes = Vec::new();
        for kind in &balanced {
            let pattern = oscillation_pattern(sweep, kind)?;
            notes.push(format!("{} {:?}", kind.cli_name(), pattern));
            classes_ok &= pattern == OscillationPattern::TouchesZero;
        }
        for kind in &unbalanced {
            let pattern = oscillation_pattern(sweep, kind)?;
            notes.push(format!("{} {:?}", kind.cli_name(), pattern));
            classes_ok &= pattern == OscillationPattern::BoundedAway;
        }

        // the bounded-away curves must sit far above the deepest dip the
        // balanced group reaches on the same grid
        let deepest_dip = balanced
            .iter()
            .filter_map(|k| sweep.curve(k))
            .flat_map(|c| c.rows.iter().map(|r| r.delta_raw))
            .fold(f64::INFINITY, f64::min);
        let mut separation_ok = true;
        for kind in &unbalanced {
            let min = sweep
                .curve(kind)
                .expect("curve present")
                .rows
                .iter()
                .map(|r| r.delta_raw)
                .fold(f64::INFINITY, f64::min);
            separation_ok &= min >= 100.0 * deepest_dip;
            notes.push(format!(
                "min {} = {min:.2e} vs deepest balanced dip {deepest_dip:.2e}",
                kind.cli_name()
            ));
        }
        Ok((classes_ok && separation_ok, notes.join("; ")))
    };
    match run() {
        Ok((passed, details)) => CriterionOutcome {
            id: 8,
            name: "oscillation-pattern classes (raw sweep, 200-point grid)",
            passed,
            details,
        },
        Err(e) => failure(8, "oscillation patterns", e),
    }
}

// ---------------------------------------------------------------------
// criterion 9

fn criterion_9_numerics_hygiene() -> CriterionOutcome {
    let run = || -> Result<(f64, f64, f64, f64, f64)> {
        // unitarity drift without renormalization
        let path = SchedulePath::new(PathKind::Linear, 1000.0)?;
        let config = EvolutionConfig::default()
            .with_renormalize(false)
            .endpoints_only();
        let traj = evolve_reduced(0.1, &path, &config)?;
        let norm: f64 = traj
            .final_state()
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt();
        let drift = (norm - 1.0).abs();

        // analytic path derivatives against central differences
        let mut worst_path_dev = 0.0f64;
        for kind in PathKind::named() {
            let total_time = 1000.0;
            let p = SchedulePath::new(kind, total_time)?;
            let h = total_time * 1e-5;
            for i in 1..200 {
                let t = total_time * i as f64 / 200.0;
                let fd = (p.value(t + h)? - p.value(t - h)?) / (2.0 * h);
                let an = p.derivative(t, 1)?;
                let scale = an.abs().max(1.0 / total_time);
                worst_path_dev = worst_path_dev.max((an - fd).abs() / scale);
            }
        }

        // classical-Hamiltonian second partials against Richardson-
        // extrapolated central differences (plain ones bottom out ~1e-6)
        let fd2 = |f: &dyn Fn(f64) -> f64, x: f64| {
            let d = |h: f64| (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
            let h = 2e-3;
            (4.0 * d(h / 2.0) - d(h)) / 3.0
        };
        let fd_mixed = |f: &dyn Fn(f64, f64) -> f64, x: f64, y: f64| {
            let d = |h: f64| {
                (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h))
                    / (4.0 * h * h)
            };
            let h = 2e-3;
            (4.0 * d(h / 2.0) - d(h)) / 3.0
        };
        let mut worst_hessian = 0.0f64;
        for r in [0.01, 0.1] {
            for i in 0..=20 {
                let s = i as f64 / 20.0;
                let fp = fixed_point(r, s)?;
                let (p, q) = (fp.p_bar, fp.q_bar);
                let hess = classical_hessian(p, q, r, s);
                let f = |p: f64, q: f64| classical_hamiltonian(p, q, r, s);
                worst_hessian = worst_hessian
                    .max((hess.pp - fd2(&|x| f(x, q), p)).abs())
                    .max((hess.qq - fd2(&|y| f(p, y), q)).abs())
                    .max((hess.pq - fd_mixed(&f, p, q)).abs());
            }
        }

        // fixed-point drift derivative against central differences
        let mut worst_drift_dev = 0.0f64;
        let hs = 1e-6;
        for r in [0.01, 0.1] {
            for i in 1..20 {
                let s = i as f64 / 20.0;
                let fd =
                    (fixed_point(r, s + hs)?.p_bar - fixed_point(r, s - hs)?.p_bar) / (2.0 * hs);
                let an = fixed_point_s_derivative(r, s);
                worst_drift_dev = worst_drift_dev.max((an - fd).abs() / an.abs());
            }
        }

        // fourth-order convergence against a dt/8 reference
        let conv_path = SchedulePath::new(PathKind::Linear, 100.0)?;
        let final_state = |spu: f64| -> Result<Vec<Complex64>> {
            let cfg = EvolutionConfig::new(spu, 1, false)?.endpoints_only();
            Ok(evolve_reduced(0.1, &conv_path, &cfg)?
                .final_state()
                .to_vec())
        };
        let reference = final_state(800.0)?;
        let err_against_ref = |state: &[Complex64]| -> f64 {
            state
                .iter()
                .zip(&reference)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt()
        };
        let coarse = err_against_ref(&final_state(100.0)?);
        let fine = err_against_ref(&final_state(200.0)?);
        let convergence_ratio = coarse / fine;

        Ok((
            drift,
            worst_path_dev,
            worst_hessian,
            worst_drift_dev,
            convergence_ratio,
        ))
    };
    match run() {
        Ok((drift, path_dev, hessian_dev, drift_dev, convergence)) => CriterionOutcome {
            id: 9,
            name: "numerics hygiene",
            passed: drift <= 1e-8
                && path_dev <= 1e-6
                && hessian_dev <= 1e-8
                && drift_dev <= 1e-8
                && convergence >= 12.0,
            details: format!(
                "norm drift {drift:.2e} (<= 1e-8); path-derivative FD deviation \
                 {path_dev:.2e} (<= 1e-6); Hessian FD deviation {hessian_dev:.2e} (<= 1e-8); \
                 fixed-point drift FD deviation {drift_dev:.2e} (<= 1e-8); halving-dt error \
                 ratio {convergence:.1} (>= 12)"
            ),
        },
        Err(e) => failure(9, "numerics hygiene", e),
    }
}

fn failure(id: usize, name: &'static str, e: Error) -> CriterionOutcome {
    CriterionOutcome {
        id,
        name,
        passed: false,
        details: format!("run failed: {e}"),
    }
}
