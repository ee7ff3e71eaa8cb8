//! Search-model Hamiltonians and their projective-space geometry.
//!
//! The full model acts on N items with M marked ones; permutation symmetry
//! confines the dynamics started from the uniform state to a two-dimensional
//! subspace (uniform-unmarked, uniform-marked amplitudes), governed by a
//! real-symmetric 2x2 Hamiltonian parameterized by r = M/N and the schedule
//! value s. This module builds both forms, exposes the squared-gap function
//! lambda, the classical Hamiltonian over the canonical pair (p, q), and the
//! adiabatic fixed point the ground state traces in those coordinates.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest dimension accepted for dense storage and dense evolution.
pub const DEFAULT_DIMENSION_CAP: usize = 4096;

/// N-item search model with a set of marked indices (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct FullSearchModel {
    n_items: usize,
    marked: BTreeSet<usize>,
    marked_mask: Vec<bool>,
}

impl FullSearchModel {
    pub fn new(n_items: usize, marked: impl IntoIterator<Item = usize>) -> Result<Self> {
        let marked: BTreeSet<usize> = marked.into_iter().collect();
        if n_items < 2 {
            return Err(Error::Domain(format!(
                "need at least 2 items, got {n_items}"
            )));
        }
        if marked.is_empty() {
            return Err(Error::Domain("need at least one marked item".into()));
        }
        if let Some(&max) = marked.iter().next_back() {
            if max >= n_items {
                return Err(Error::Domain(format!(
                    "marked index {max} out of range for {n_items} items"
                )));
            }
        }
        if marked.len() >= n_items {
            return Err(Error::Domain(
                "marked set must be a proper subset of the items".into(),
            ));
        }
        let mut marked_mask = vec![false; n_items];
        for &m in &marked {
            marked_mask[m] = true;
        }
        Ok(FullSearchModel {
            n_items,
            marked,
            marked_mask,
        })
    }

    /// Model marking the first `m_count` items.
    pub fn with_first_marked(n_items: usize, m_count: usize) -> Result<Self> {
        FullSearchModel::new(n_items, 0..m_count)
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn marked(&self) -> &BTreeSet<usize> {
        &self.marked
    }

    pub fn marked_count(&self) -> usize {
        self.marked.len()
    }

    pub fn is_marked(&self, index: usize) -> bool {
        self.marked_mask.get(index).copied().unwrap_or(false)
    }

    /// r = M/N.
    pub fn ratio(&self) -> f64 {
        self.marked.len() as f64 / self.n_items as f64
    }

    /// Dense N x N Hamiltonian at schedule value `s` (default size cap).
    pub fn hamiltonian(&self, s: f64) -> Result<DMatrix<f64>> {
        self.hamiltonian_with_cap(s, DEFAULT_DIMENSION_CAP)
    }

    pub fn hamiltonian_with_cap(&self, s: f64, cap: usize) -> Result<DMatrix<f64>> {
        check_s(s)?;
        if self.n_items > cap {
            return Err(Error::Capacity {
                dim: self.n_items,
                cap,
            });
        }
        let n = self.n_items;
        let w = (1.0 - s) / n as f64;
        let mut h = DMatrix::from_element(n, n, -w);
        for i in 0..n {
            h[(i, i)] += 1.0;
            if self.marked_mask[i] {
                h[(i, i)] -= s;
            }
        }
        Ok(h)
    }

    /// y = H(s) x without materializing the matrix; O(N) per call.
    pub fn apply_hamiltonian(&self, s: f64, state: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(state.len(), self.n_items);
        debug_assert_eq!(out.len(), self.n_items);
        let w = (1.0 - s) / self.n_items as f64;
        let total: Complex64 = state.iter().sum();
        let shift = w * total;
        for (i, (y, &x)) in out.iter_mut().zip(state).enumerate() {
            let mut v = x - shift;
            if self.marked_mask[i] {
                v -= s * x;
            }
            *y = v;
        }
    }

    /// Eigenvalues of the dense Hamiltonian in ascending order.
    pub fn spectrum(&self, s: f64) -> Result<Vec<f64>> {
        let h = self.hamiltonian(s)?;
        let mut eigs: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        eigs.sort_by(|a, b| a.total_cmp(b));
        Ok(eigs)
    }
}

fn check_s(s: f64) -> Result<()> {
    if !s.is_finite() || !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!(
            "schedule value must lie in [0, 1], got {s}"
        )));
    }
    Ok(())
}

fn check_ratio(r: f64) -> Result<()> {
    if !r.is_finite() || r <= 0.0 || r >= 1.0 {
        return Err(Error::Domain(format!(
            "marked ratio must lie in (0, 1), got {r}"
        )));
    }
    Ok(())
}

/// The 2x2 Hamiltonian on the (uniform-unmarked, uniform-marked) subspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedHamiltonian {
    r: f64,
    s: f64,
}

impl ReducedHamiltonian {
    pub fn new(r: f64, s: f64) -> Result<Self> {
        check_ratio(r)?;
        check_s(s)?;
        Ok(ReducedHamiltonian { r, s })
    }

    pub fn ratio(&self) -> f64 {
        self.r
    }

    pub fn schedule_value(&self) -> f64 {
        self.s
    }

    /// Matrix entries: [[r(1-s)+s, -c], [-c, (1-r)(1-s)]] with
    /// c = sqrt(r(1-r))(1-s).
    pub fn matrix(&self) -> Matrix2<f64> {
        let (r, s) = (self.r, self.s);
        let c = (r * (1.0 - r)).sqrt() * (1.0 - s);
        Matrix2::new(r * (1.0 - s) + s, -c, -c, (1.0 - r) * (1.0 - s))
    }

    /// Eigenvalues in ascending order (closed form for the 2x2 case).
    pub fn eigenvalues(&self) -> [f64; 2] {
        let m = self.matrix();
        let mean = 0.5 * (m[(0, 0)] + m[(1, 1)]);
        let radius = (0.5 * (m[(0, 0)] - m[(1, 1)])).hypot(m[(0, 1)]);
        [mean - radius, mean + radius]
    }

    /// Energy gap between the two levels.
    pub fn gap(&self) -> f64 {
        let [lo, hi] = self.eigenvalues();
        hi - lo
    }

    /// Ground-state vector (unmarked, marked) with nonnegative components.
    pub fn ground_state(&self) -> [f64; 2] {
        let m = self.matrix();
        let e0 = self.eigenvalues()[0];
        let v = [-m[(0, 1)], m[(0, 0)] - e0];
        let norm = v[0].hypot(v[1]);
        [v[0] / norm, v[1] / norm]
    }
}

/// lambda(r, s) = 1 + 4(r-1)s - 4(r-1)s^2, the squared energy gap of the
/// reduced Hamiltonian. Defined for r in (0, 1), s in [0, 1].
pub fn gap_lambda(r: f64, s: f64) -> f64 {
    1.0 + 4.0 * (r - 1.0) * s - 4.0 * (r - 1.0) * s * s
}

// Shared pieces of the classical Hamiltonian: the diagonal split
// g = 2r + 2s - 2rs - 1 and the off-diagonal weight k = 2 sqrt(r(1-r))(1-s).
fn split_terms(r: f64, s: f64) -> (f64, f64) {
    let g = 2.0 * r + 2.0 * s - 2.0 * r * s - 1.0;
    let k = 2.0 * (r * (1.0 - r)).sqrt() * (1.0 - s);
    (g, k)
}

/// Expectation value of the reduced Hamiltonian over the state labelled by
/// the canonical pair (p, q):
/// 1/2 + sqrt(q(1-q)) [ cos(p) (2r+2s-2rs-1) - 2 sin(p) sqrt(r(1-r))(1-s) ].
pub fn classical_hamiltonian(p: f64, q: f64, r: f64, s: f64) -> f64 {
    let (g, k) = split_terms(r, s);
    let rad = (q * (1.0 - q)).max(0.0).sqrt();
    0.5 + rad * (g * p.cos() - k * p.sin())
}

/// First partials (dH/dp, dH/dq) of the classical Hamiltonian.
pub fn classical_gradient(p: f64, q: f64, r: f64, s: f64) -> (f64, f64) {
    let (g, k) = split_terms(r, s);
    let rad = (q * (1.0 - q)).max(0.0).sqrt();
    let d_rad = (1.0 - 2.0 * q) / (2.0 * rad);
    let along = g * p.cos() - k * p.sin();
    let across = -g * p.sin() - k * p.cos();
    (rad * across, d_rad * along)
}

/// Second partials of the classical Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalHessian {
    pub pp: f64,
    pub pq: f64,
    pub qq: f64,
}

pub fn classical_hessian(p: f64, q: f64, r: f64, s: f64) -> ClassicalHessian {
    let (g, k) = split_terms(r, s);
    let f = q * (1.0 - q);
    let rad = f.max(0.0).sqrt();
    let d_rad = (1.0 - 2.0 * q) / (2.0 * rad);
    let dd_rad = -1.0 / (4.0 * f * rad);
    let along = g * p.cos() - k * p.sin();
    let across = -g * p.sin() - k * p.cos();
    ClassicalHessian {
        pp: -rad * along,
        pq: d_rad * across,
        qq: dd_rad * along,
    }
}

/// The (p, q) image of the instantaneous ground state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub p_bar: f64,
    pub q_bar: f64,
}

/// Fixed point of the classical flow at fixed s: q_bar = 1/2 and
/// p_bar = pi - atan2(2 sqrt(r(1-r))(1-s), 2r+2s-2rs-1).
///
/// The two-argument arctangent reproduces both printed branches of the
/// closed form and passes continuously through p_bar = pi/2 where the
/// branch denominator changes sign. Requires r < 1/2 so that the branch
/// point s = (1-2r)/(2-2r) lies inside [0, 1].
pub fn fixed_point(r: f64, s: f64) -> Result<FixedPoint> {
    check_ratio(r)?;
    if r >= 0.5 {
        return Err(Error::Domain(format!(
            "fixed-point formulas require r < 1/2, got {r}"
        )));
    }
    check_s(s)?;
    let (g, k) = split_terms(r, s);
    Ok(FixedPoint {
        p_bar: PI - k.atan2(g),
        q_bar: 0.5,
    })
}

/// Analytic d p_bar / d s = 2 sqrt(r(1-r)) / lambda (q_bar is constant).
pub fn fixed_point_s_derivative(r: f64, s: f64) -> f64 {
    2.0 * (r * (1.0 - r)).sqrt() / gap_lambda(r, s)
}

/// Schedule value at which the fixed-point branch denominator vanishes.
pub fn branch_point(r: f64) -> f64 {
    (1.0 - 2.0 * r) / (2.0 - 2.0 * r)
}

/// Two-component state for the canonical pair (p, q): coefficients
/// sqrt(1-q) and sqrt(q) e^{ip} on the (1, i)/sqrt(2) and (1, -i)/sqrt(2)
/// axes, with the global phase fixed so the first coefficient is real.
pub fn state_from_projective(p: f64, q: f64) -> Result<[Complex64; 2]> {
    if !p.is_finite() || !q.is_finite() || !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!(
            "projective coordinates out of range: p = {p}, q = {q}"
        )));
    }
    let l1 = Complex64::new((1.0 - q).sqrt(), 0.0);
    let l2 = Complex64::from_polar(q.sqrt(), p);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let unmarked = (l1 + l2) * inv_sqrt2;
    let marked = Complex64::i() * (l1 - l2) * inv_sqrt2;
    Ok([unmarked, marked])
}
