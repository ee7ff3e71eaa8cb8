//! Adiabatic schedule paths s(t).
//!
//! A path drives the adiabatic parameter from s(0) = 0 to s(T) = 1 and is
//! clamped to those values outside [0, T]. Six named shapes are provided
//! together with arbitrary polynomials in u = t/T. Each path knows its
//! analytic time derivatives up to third order and its endpoint-derivative
//! classification: the path is of order n when every derivative up to order
//! n vanishes at both endpoints while some derivative of order n + 1 does
//! not. Controlling those endpoint derivatives is what suppresses the final
//! computational error, so the classification is computed exactly (from
//! closed forms for the named shapes, in rational arithmetic for
//! polynomials), never from floating-point thresholds.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{ToPrimitive, Zero};

use crate::error::{Error, Result};

/// The shape of a schedule, independent of the total time.
#[derive(Debug, Clone, PartialEq)]
pub enum PathKind {
    /// s = u
    Linear,
    /// s = sin(pi u / 2)
    Sinusoidal,
    /// s = 3u^2 - 2u^3
    Square,
    /// s = sin^2(pi u / 2)
    SinusoidalSquare,
    /// s = sin^3(pi u / 2)
    SinusoidalCubic,
    /// s = 6u^5 - 15u^4 + 10u^3
    Cubic,
    /// s = sum_i a_i u^i with the given coefficients.
    CustomPolynomial(Vec<f64>),
}

impl PathKind {
    /// All six named kinds, in their conventional order.
    pub fn named() -> [PathKind; 6] {
        [
            PathKind::Linear,
            PathKind::Sinusoidal,
            PathKind::Square,
            PathKind::SinusoidalSquare,
            PathKind::SinusoidalCubic,
            PathKind::Cubic,
        ]
    }

    /// Short name used by the CLI and in file names.
    pub fn cli_name(&self) -> String {
        match self {
            PathKind::Linear => "linear".into(),
            PathKind::Sinusoidal => "sin".into(),
            PathKind::Square => "square".into(),
            PathKind::SinusoidalSquare => "sin2".into(),
            PathKind::SinusoidalCubic => "sin3".into(),
            PathKind::Cubic => "cubic".into(),
            PathKind::CustomPolynomial(c) => {
                let coeffs: Vec<String> = c.iter().map(|a| format!("{a}")).collect();
                format!("poly:{}", coeffs.join(","))
            }
        }
    }
}

impl fmt::Display for PathKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.cli_name())
    }
}

impl FromStr for PathKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(PathKind::Linear),
            "sin" => Ok(PathKind::Sinusoidal),
            "square" => Ok(PathKind::Square),
            "sin2" => Ok(PathKind::SinusoidalSquare),
            "sin3" => Ok(PathKind::SinusoidalCubic),
            "cubic" => Ok(PathKind::Cubic),
            other => {
                if let Some(list) = other.strip_prefix("poly:") {
                    let coeffs = list
                        .split(',')
                        .map(|tok| {
                            tok.trim().parse::<f64>().map_err(|_| {
                                Error::Config(format!("bad polynomial coefficient `{tok}`"))
                            })
                        })
                        .collect::<Result<Vec<f64>>>()?;
                    Ok(PathKind::CustomPolynomial(coeffs))
                } else {
                    Err(Error::Config(format!(
                        "unknown path `{other}` (expected linear, sin, square, sin2, sin3, cubic \
                         or poly:a0,a1,...)"
                    )))
                }
            }
        }
    }
}

/// A schedule s(t) on [0, T].
///
/// Immutable after construction; safe to share across worker threads.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulePath {
    kind: PathKind,
    total_time: f64,
}

impl SchedulePath {
    pub fn new(kind: PathKind, total_time: f64) -> Result<Self> {
        if !total_time.is_finite() || total_time <= 0.0 {
            return Err(Error::Domain(format!(
                "total time must be finite and positive, got {total_time}"
            )));
        }
        if let PathKind::CustomPolynomial(c) = &kind {
            if c.is_empty() {
                return Err(Error::Config(
                    "polynomial needs at least one coefficient".into(),
                ));
            }
            if c.iter().any(|a| !a.is_finite()) {
                return Err(Error::Config(
                    "polynomial coefficients must be finite".into(),
                ));
            }
        }
        Ok(SchedulePath { kind, total_time })
    }

    /// Parse a CLI path name (`linear`, `sin`, ..., `poly:a0,a1,...`).
    pub fn parse(name: &str, total_time: f64) -> Result<Self> {
        SchedulePath::new(name.parse()?, total_time)
    }

    pub fn kind(&self) -> &PathKind {
        &self.kind
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    /// s(t), clamped to the endpoint values outside [0, T].
    pub fn value(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::Domain(format!("time must be finite, got {t}")));
        }
        Ok(self.eval(t))
    }

    pub(crate) fn eval(&self, t: f64) -> f64 {
        let tt = self.total_time;
        if t < 0.0 {
            return self.boundary_value(0.0);
        }
        if t >= tt {
            return self.boundary_value(1.0);
        }
        let u = t / tt;
        match &self.kind {
            PathKind::Linear => u,
            PathKind::Sinusoidal => (PI * u / 2.0).sin(),
            PathKind::Square => (3.0 - 2.0 * u) * u * u,
            PathKind::SinusoidalSquare => {
                let x = (PI * u / 2.0).sin();
                x * x
            }
            PathKind::SinusoidalCubic => {
                let x = (PI * u / 2.0).sin();
                x * x * x
            }
            PathKind::Cubic => ((6.0 * u - 15.0) * u + 10.0) * u * u * u,
            PathKind::CustomPolynomial(c) => horner(c, u),
        }
    }

    // Clamped value outside [0, T]: the named kinds pin to 0 and 1 exactly;
    // a polynomial stays at its own endpoint value.
    fn boundary_value(&self, u: f64) -> f64 {
        match &self.kind {
            PathKind::CustomPolynomial(c) => horner(c, u),
            _ => u,
        }
    }

    /// Analytic d^n s / dt^n for n in 1..=3.
    ///
    /// At t = 0 and t = T this is the one-sided limit from inside the ramp;
    /// strictly outside [0, T] the clamped branches are constant and the
    /// derivative is 0.
    pub fn derivative(&self, t: f64, n: u32) -> Result<f64> {
        if !(1..=3).contains(&n) {
            return Err(Error::UnsupportedOrder(n));
        }
        if !t.is_finite() {
            return Err(Error::Domain(format!("time must be finite, got {t}")));
        }
        let tt = self.total_time;
        if t < 0.0 || t > tt {
            return Ok(0.0);
        }
        let u = t / tt;
        let scale = tt.powi(n as i32);
        let du = match &self.kind {
            PathKind::Linear => match n {
                1 => 1.0,
                _ => 0.0,
            },
            PathKind::Sinusoidal => {
                let h = PI / 2.0;
                let th = h * u;
                match n {
                    1 => h * th.cos(),
                    2 => -h * h * th.sin(),
                    _ => -h * h * h * th.cos(),
                }
            }
            PathKind::Square => match n {
                1 => 6.0 * u - 6.0 * u * u,
                2 => 6.0 - 12.0 * u,
                _ => -12.0,
            },
            PathKind::SinusoidalSquare => {
                let h = PI / 2.0;
                let two = 2.0 * h * u;
                match n {
                    1 => h * two.sin(),
                    2 => 2.0 * h * h * two.cos(),
                    _ => -4.0 * h * h * h * two.sin(),
                }
            }
            PathKind::SinusoidalCubic => {
                let h = PI / 2.0;
                let th = h * u;
                let (sn, cs) = th.sin_cos();
                match n {
                    1 => 3.0 * h * sn * sn * cs,
                    2 => 3.0 * h * h * (2.0 * sn * cs * cs - sn * sn * sn),
                    _ => 3.0 * h * h * h * (2.0 * cs * cs * cs - 7.0 * sn * sn * cs),
                }
            }
            PathKind::Cubic => match n {
                1 => ((30.0 * u - 60.0) * u + 30.0) * u * u,
                2 => ((120.0 * u - 180.0) * u + 60.0) * u,
                _ => (360.0 * u - 360.0) * u + 60.0,
            },
            PathKind::CustomPolynomial(c) => {
                let dc = poly_derivative(c, n);
                horner(&dc, u)
            }
        };
        Ok(du / scale)
    }

    /// Endpoint derivatives c_n = d^n s/dt^n(0), d_n = d^n s/dt^n(T) and the
    /// order classification.
    ///
    /// Zero detection is exact: the named kinds use their closed forms, and
    /// polynomials are differentiated in rational arithmetic, so the order
    /// never depends on floating-point round-off.
    pub fn classify(&self) -> EndpointDerivatives {
        let tt = self.total_time;
        let h = PI / (2.0 * tt);
        let (start, end) = match &self.kind {
            PathKind::Linear => (vec![1.0 / tt, 0.0, 0.0], vec![1.0 / tt, 0.0, 0.0]),
            PathKind::Sinusoidal => (vec![h, 0.0, -h * h * h], vec![0.0, -h * h, 0.0]),
            PathKind::Square => {
                let t2 = tt * tt;
                let t3 = t2 * tt;
                (
                    vec![0.0, 6.0 / t2, -12.0 / t3],
                    vec![0.0, -6.0 / t2, -12.0 / t3],
                )
            }
            PathKind::SinusoidalSquare => {
                (vec![0.0, 2.0 * h * h, 0.0], vec![0.0, -2.0 * h * h, 0.0])
            }
            PathKind::SinusoidalCubic => (
                vec![0.0, 0.0, 6.0 * h * h * h],
                vec![0.0, -3.0 * h * h, 0.0],
            ),
            PathKind::Cubic => {
                let t3 = tt * tt * tt;
                (vec![0.0, 0.0, 60.0 / t3], vec![0.0, 0.0, 60.0 / t3])
            }
            PathKind::CustomPolynomial(c) => return classify_polynomial(c, tt),
        };
        EndpointDerivatives::from_lists(start, end)
    }
}

/// Endpoint time derivatives of a path and the resulting order.
///
/// `at_start[i]` and `at_end[i]` hold d^{i+1} s / dt^{i+1} at t = 0 and
/// t = T. `order` is one less than the lowest derivative order that is
/// nonzero at either endpoint; `None` means every listed derivative
/// vanishes (a constant polynomial).
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointDerivatives {
    pub at_start: Vec<f64>,
    pub at_end: Vec<f64>,
    pub order: Option<u32>,
}

impl EndpointDerivatives {
    fn from_lists(at_start: Vec<f64>, at_end: Vec<f64>) -> Self {
        let order = at_start
            .iter()
            .zip(&at_end)
            .position(|(c, d)| *c != 0.0 || *d != 0.0)
            .map(|idx| idx as u32);
        EndpointDerivatives {
            at_start,
            at_end,
            order,
        }
    }

    /// The lowest nonvanishing derivative: (n, c_n, d_n).
    pub fn leading(&self) -> Option<(u32, f64, f64)> {
        self.order.map(|ord| {
            (
                ord + 1,
                self.at_start[ord as usize],
                self.at_end[ord as usize],
            )
        })
    }

    /// Whether |c_n| = |d_n| at the leading order. Paths with balanced
    /// leading derivatives produce error curves whose oscillation dips
    /// touch zero; unbalanced ones stay bounded away from it.
    pub fn balanced_leading(&self) -> Option<bool> {
        self.leading().map(|(_, c, d)| c.abs() == d.abs())
    }
}

fn horner(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &a| acc * u + a)
}

// Coefficients of the n-th derivative with respect to u.
fn poly_derivative(coeffs: &[f64], n: u32) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    for _ in 0..n {
        c = c
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, a)| i as f64 * a)
            .collect();
        if c.is_empty() {
            c.push(0.0);
        }
    }
    c
}

// Exact endpoint classification for polynomials: f64 coefficients are
// dyadic rationals, so derivatives at u = 0 and u = 1 are computed without
// rounding and compared against literal zero.
fn classify_polynomial(coeffs: &[f64], total_time: f64) -> EndpointDerivatives {
    let degree = coeffs.len().saturating_sub(1);
    let n_max = degree.max(3);
    let a: Vec<BigRational> = coeffs
        .iter()
        .map(|&c| BigRational::from_float(c).unwrap_or_else(BigRational::zero))
        .collect();

    let mut at_start = Vec::with_capacity(n_max);
    let mut at_end = Vec::with_capacity(n_max);
    let mut order = None;
    for n in 1..=n_max {
        // d^n/du^n at u = 0 is n! * a_n; at u = 1 it is sum_k a_k k!/(k-n)!.
        let c_exact = a
            .get(n)
            .map(|an| an * BigRational::from_integer(factorial(n)))
            .unwrap_or_else(BigRational::zero);
        let mut d_exact = BigRational::zero();
        for (k, ak) in a.iter().enumerate().skip(n) {
            d_exact += ak * BigRational::from_integer(falling_factorial(k, n));
        }
        if order.is_none() && (!c_exact.is_zero() || !d_exact.is_zero()) {
            order = Some((n - 1) as u32);
        }
        let scale = total_time.powi(n as i32);
        at_start.push(c_exact.to_f64().unwrap_or(f64::NAN) / scale);
        at_end.push(d_exact.to_f64().unwrap_or(f64::NAN) / scale);
    }
    EndpointDerivatives {
        at_start,
        at_end,
        order,
    }
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::from(1), |acc, i| acc * i)
}

fn falling_factorial(k: usize, n: usize) -> BigInt {
    (k - n + 1..=k).fold(BigInt::from(1), |acc, i| acc * i)
}
