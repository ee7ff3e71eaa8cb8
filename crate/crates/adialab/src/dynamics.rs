//! Time-dependent Schrödinger integration along a schedule path.
//!
//! The equation i d/dt psi = H(s(t)) psi is integrated with the classical
//! fixed-step fourth-order Runge-Kutta scheme, sampling the schedule at t,
//! t + dt/2 and t + dt. The step count is n = ceil(T / dt) with the step
//! stretched to land on T exactly, so a run is reproducible bit for bit
//! from (path, T, config). Renormalization after every step is on by
//! default and recorded in the trajectory metadata.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{FullSearchModel, ReducedHamiltonian, DEFAULT_DIMENSION_CAP};
use crate::schedule::SchedulePath;

/// Integration parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    steps_per_unit_time: f64,
    record_stride: usize,
    renormalize: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            steps_per_unit_time: 100.0,
            record_stride: 1,
            renormalize: true,
        }
    }
}

impl EvolutionConfig {
    /// dt = 1 / steps_per_unit_time; the guard dt <= 0.1 keeps the scheme
    /// stable at the O(1) energies of the search Hamiltonian.
    pub fn new(steps_per_unit_time: f64, record_stride: usize, renormalize: bool) -> Result<Self> {
        if !steps_per_unit_time.is_finite() || steps_per_unit_time < 10.0 {
            return Err(Error::Config(format!(
                "steps_per_unit_time must be >= 10 (dt <= 0.1), got {steps_per_unit_time}"
            )));
        }
        if record_stride == 0 {
            return Err(Error::Config("record_stride must be positive".into()));
        }
        Ok(EvolutionConfig {
            steps_per_unit_time,
            record_stride,
            renormalize,
        })
    }

    pub fn with_steps_per_unit_time(mut self, value: f64) -> Result<Self> {
        if !value.is_finite() || value < 10.0 {
            return Err(Error::Config(format!(
                "steps_per_unit_time must be >= 10 (dt <= 0.1), got {value}"
            )));
        }
        self.steps_per_unit_time = value;
        Ok(self)
    }

    pub fn with_record_stride(mut self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::Config("record_stride must be positive".into()));
        }
        self.record_stride = stride;
        Ok(self)
    }

    pub fn with_renormalize(mut self, on: bool) -> Self {
        self.renormalize = on;
        self
    }

    pub fn steps_per_unit_time(&self) -> f64 {
        self.steps_per_unit_time
    }

    pub fn time_step(&self) -> f64 {
        1.0 / self.steps_per_unit_time
    }

    pub fn record_stride(&self) -> usize {
        self.record_stride
    }

    pub fn renormalize(&self) -> bool {
        self.renormalize
    }

    /// Record only the initial and final samples.
    pub fn endpoints_only(mut self) -> Self {
        self.record_stride = usize::MAX;
        self
    }
}

/// Which model a trajectory came from.
#[derive(Debug, Clone, PartialEq)]
pub enum TrajectoryModel {
    Reduced { ratio: f64 },
    Full { n_items: usize, marked_count: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionMetadata {
    pub dt: f64,
    pub steps: usize,
    pub renormalized: bool,
}

/// Sampled history of one evolution.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
    /// (p, q) per sample; present for two-level runs only.
    pub projective: Option<Vec<(f64, f64)>>,
    pub s_values: Vec<f64>,
    pub path: SchedulePath,
    pub model: TrajectoryModel,
    pub metadata: EvolutionMetadata,
}

impl Trajectory {
    pub fn final_state(&self) -> &[Complex64] {
        self.states
            .last()
            .expect("trajectory holds at least one sample")
    }

    pub fn final_error(&self, projector: &MarkedProjector) -> Result<f64> {
        compute_error(self.final_state(), projector)
    }

    /// p(t) with 2-pi jumps removed, for difference plots.
    pub fn unwrapped_p(&self) -> Option<Vec<f64>> {
        self.projective
            .as_ref()
            .map(|pq| unwrap_angles(pq.iter().map(|&(p, _)| p)))
    }

    /// CSV export for two-level runs. Columns:
    /// `t, s, re_psi_u, im_psi_u, re_psi_m, im_psi_m, p, q, delta_inst`
    /// where delta_inst is the instantaneous infidelity against the
    /// ground state of the reduced Hamiltonian at the sampled s.
    pub fn to_reduced_csv(&self) -> Result<String> {
        let ratio = match self.model {
            TrajectoryModel::Reduced { ratio } => ratio,
            _ => {
                return Err(Error::Domain(
                    "trajectory CSV export is defined for two-level runs".into(),
                ))
            }
        };
        let pq = self
            .projective
            .as_ref()
            .expect("reduced trajectories carry projective samples");
        let mut out = String::new();
        out.push_str("t,s,re_psi_u,im_psi_u,re_psi_m,im_psi_m,p,q,delta_inst\n");
        for (i, state) in self.states.iter().enumerate() {
            let (t, s) = (self.times[i], self.s_values[i]);
            let (p, q) = pq[i];
            let ground = ReducedHamiltonian::new(ratio, s)?.ground_state();
            // infidelity via the orthogonal complement, exact in two levels
            let excited = state[0] * (-ground[1]) + state[1] * ground[0];
            let norm_sq: f64 = state.iter().map(|a| a.norm_sqr()).sum();
            let delta_inst = excited.norm_sqr() / norm_sq;
            writeln!(
                out,
                "{t},{s},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                state[0].re, state[0].im, state[1].re, state[1].im, p, q, delta_inst
            )
            .expect("string write");
        }
        Ok(out)
    }
}

/// Projector onto the marked subspace, used by [`compute_error`].
#[derive(Debug, Clone, PartialEq)]
pub enum MarkedProjector {
    /// Two-level runs: the marked component is the second amplitude.
    Reduced,
    /// Full runs: marked indices of an N-item model.
    Full { marked_mask: Vec<bool> },
}

impl MarkedProjector {
    pub fn reduced() -> Self {
        MarkedProjector::Reduced
    }

    pub fn full(model: &FullSearchModel) -> Self {
        let marked_mask = (0..model.n_items()).map(|i| model.is_marked(i)).collect();
        MarkedProjector::Full { marked_mask }
    }
}

/// Intrinsic computational error delta = 1 - <psi|P|psi> for a unit-norm
/// state, evaluated as the population outside the marked subspace of the
/// normalized state (which avoids cancellation when delta is tiny).
pub fn compute_error(state: &[Complex64], projector: &MarkedProjector) -> Result<f64> {
    let norm_sq: f64 = state.iter().map(|a| a.norm_sqr()).sum();
    if (norm_sq.sqrt() - 1.0).abs() > 1e-6 {
        return Err(Error::Integrity(format!(
            "state norm {:.9} deviates from 1 by more than 1e-6",
            norm_sq.sqrt()
        )));
    }
    let outside: f64 = match projector {
        MarkedProjector::Reduced => {
            if state.len() != 2 {
                return Err(Error::Domain(format!(
                    "reduced projector expects a two-level state, got {}",
                    state.len()
                )));
            }
            state[0].norm_sqr()
        }
        MarkedProjector::Full { marked_mask } => {
            if state.len() != marked_mask.len() {
                return Err(Error::Domain(format!(
                    "state length {} does not match projector dimension {}",
                    state.len(),
                    marked_mask.len()
                )));
            }
            state
                .iter()
                .zip(marked_mask)
                .filter(|(_, &m)| !m)
                .map(|(a, _)| a.norm_sqr())
                .sum()
        }
    };
    Ok(outside / norm_sq)
}

/// Canonical pair (p, q) of a two-level state: q is the weight on the
/// (1, -i)/sqrt(2) axis and p the relative phase between the two axis
/// coefficients, in [0, 2pi). When q is within 1e-14 of 0 or 1 the phase
/// is undefined and reported as 0.
pub fn projective_from_state(state: &[Complex64]) -> Result<(f64, f64)> {
    if state.len() != 2 {
        return Err(Error::Domain(format!(
            "projective coordinates are defined for two-level states, got {}",
            state.len()
        )));
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let l1 = (state[0] - Complex64::i() * state[1]) * inv_sqrt2;
    let l2 = (state[0] + Complex64::i() * state[1]) * inv_sqrt2;
    let total = l1.norm_sqr() + l2.norm_sqr();
    let q = (l2.norm_sqr() / total).clamp(0.0, 1.0);
    let p = if !(1e-14..=1.0 - 1e-14).contains(&q) {
        0.0
    } else {
        (l2.arg() - l1.arg()).rem_euclid(2.0 * std::f64::consts::PI)
    };
    Ok((p, q))
}

/// Remove 2-pi jumps from a wrapped angle series.
pub fn unwrap_angles(angles: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let tau = 2.0 * std::f64::consts::PI;
    let mut out = Vec::new();
    let mut offset = 0.0f64;
    let mut prev: Option<f64> = None;
    for a in angles {
        if let Some(p) = prev {
            let mut d = a + offset - p;
            while d > std::f64::consts::PI {
                offset -= tau;
                d -= tau;
            }
            while d < -std::f64::consts::PI {
                offset += tau;
                d += tau;
            }
        }
        let v = a + offset;
        out.push(v);
        prev = Some(v);
    }
    out
}

/// Evolve the two-level model from the exact ground state at s(0).
pub fn evolve_reduced(r: f64, path: &SchedulePath, config: &EvolutionConfig) -> Result<Trajectory> {
    if !r.is_finite() || r <= 0.0 || r >= 1.0 {
        return Err(Error::Domain(format!(
            "marked ratio must lie in (0, 1), got {r}"
        )));
    }
    let s0 = path.value(0.0)?;
    let psi0: Vec<Complex64> = if s0 == 0.0 {
        // closed-form ground state of the mixing Hamiltonian
        vec![
            Complex64::new((1.0 - r).sqrt(), 0.0),
            Complex64::new(r.sqrt(), 0.0),
        ]
    } else {
        ReducedHamiltonian::new(r, s0)?
            .ground_state()
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect()
    };
    let sq = (r * (1.0 - r)).sqrt();
    let apply = move |s: f64, x: &[Complex64], out: &mut [Complex64]| {
        let c = sq * (1.0 - s);
        let a = r * (1.0 - s) + s;
        let d = (1.0 - r) * (1.0 - s);
        out[0] = a * x[0] - c * x[1];
        out[1] = -c * x[0] + d * x[1];
    };
    integrate(
        apply,
        psi0,
        path,
        config,
        TrajectoryModel::Reduced { ratio: r },
        true,
    )
}

/// Evolve the full N-level model from the uniform state.
pub fn evolve_full(
    model: &FullSearchModel,
    path: &SchedulePath,
    config: &EvolutionConfig,
) -> Result<Trajectory> {
    let n = model.n_items();
    if n > DEFAULT_DIMENSION_CAP {
        return Err(Error::Capacity {
            dim: n,
            cap: DEFAULT_DIMENSION_CAP,
        });
    }
    let amp = 1.0 / (n as f64).sqrt();
    let psi0 = vec![Complex64::new(amp, 0.0); n];
    let m = model.clone();
    let apply = move |s: f64, x: &[Complex64], out: &mut [Complex64]| {
        m.apply_hamiltonian(s, x, out);
    };
    integrate(
        apply,
        psi0,
        path,
        config,
        TrajectoryModel::Full {
            n_items: n,
            marked_count: model.marked_count(),
        },
        false,
    )
}

// Fixed-step RK4 for i psi' = H(s(t)) psi. `apply` computes H(s) x.
fn integrate<F>(
    apply: F,
    psi0: Vec<Complex64>,
    path: &SchedulePath,
    config: &EvolutionConfig,
    model: TrajectoryModel,
    track_projective: bool,
) -> Result<Trajectory>
where
    F: Fn(f64, &[Complex64], &mut [Complex64]),
{
    let total_time = path.total_time();
    let raw = total_time * config.steps_per_unit_time;
    let steps = if (raw - raw.round()).abs() < 1e-9 {
        raw.round() as usize
    } else {
        raw.ceil() as usize
    }
    .max(1);
    let dt = total_time / steps as f64;

    let dim = psi0.len();
    let mut psi = psi0;
    let mut k1 = vec![Complex64::default(); dim];
    let mut k2 = vec![Complex64::default(); dim];
    let mut k3 = vec![Complex64::default(); dim];
    let mut k4 = vec![Complex64::default(); dim];
    let mut tmp = vec![Complex64::default(); dim];

    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut s_values = Vec::new();
    let mut projective = if track_projective {
        Some(Vec::new())
    } else {
        None
    };

    let minus_i = -Complex64::i();
    let stride = config.record_stride;

    for step in 0..=steps {
        let t = if step == steps {
            total_time
        } else {
            step as f64 * dt
        };
        if step % stride == 0 || step == steps {
            times.push(t);
            s_values.push(path.eval(t));
            if let Some(pq) = projective.as_mut() {
                pq.push(projective_from_state(&psi)?);
            }
            states.push(psi.clone());
        }
        if step == steps {
            break;
        }

        let s1 = path.eval(t);
        let s2 = path.eval(t + dt / 2.0);
        let s3 = path.eval(t + dt);

        // k1 = -i H(s1) psi
        apply(s1, &psi, &mut k1);
        scale_in_place(&mut k1, minus_i);
        // k2 = -i H(s2) (psi + dt/2 k1)
        axpy(&mut tmp, &psi, &k1, dt / 2.0);
        apply(s2, &tmp, &mut k2);
        scale_in_place(&mut k2, minus_i);
        // k3 = -i H(s2) (psi + dt/2 k2)
        axpy(&mut tmp, &psi, &k2, dt / 2.0);
        apply(s2, &tmp, &mut k3);
        scale_in_place(&mut k3, minus_i);
        // k4 = -i H(s3) (psi + dt k3)
        axpy(&mut tmp, &psi, &k3, dt);
        apply(s3, &tmp, &mut k4);
        scale_in_place(&mut k4, minus_i);

        for i in 0..dim {
            psi[i] += (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]) * (dt / 6.0);
        }
        if config.renormalize {
            let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            for a in psi.iter_mut() {
                *a /= norm;
            }
        }
    }

    Ok(Trajectory {
        times,
        states,
        projective,
        s_values,
        path: path.clone(),
        model,
        metadata: EvolutionMetadata {
            dt,
            steps,
            renormalized: config.renormalize,
        },
    })
}

fn scale_in_place(v: &mut [Complex64], factor: Complex64) {
    for a in v.iter_mut() {
        *a *= factor;
    }
}

// out = base + coeff * delta
fn axpy(out: &mut [Complex64], base: &[Complex64], delta: &[Complex64], coeff: f64) {
    for i in 0..out.len() {
        out[i] = base[i] + coeff * delta[i];
    }
}
