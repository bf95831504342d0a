//! Rigorous existence and local uniqueness proofs by the radii polynomial
//!
//! ```text
//! p(ρ) = Z2 ρ² − (1 − Z0) ρ + Y0
//! ```
//!
//! with `‖A f(r̄)‖∞ ≤ Y0`, `‖I − A Df(r̄)‖∞ ≤ Z0` and
//! `sup_{b ∈ B_ρ*(r̄)} ‖A D²f(b)‖∞ ≤ Z2`. If `p(ρ0) < 0` for some
//! `ρ0 ≤ ρ*`, the Newton-like map `r ↦ r − A f(r)` is a contraction of the
//! closed ball `B_ρ0(r̄)` and `f` has exactly one zero there. Every bound is
//! computed with [`Interval`] arithmetic; `A` is an ordinary float matrix.

pub mod hcheck;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::interval::{operator_sup_norm, round, sup_norm, Interval};
use crate::model::{ModelError, System};
use crate::params::{Configuration, ParamError, RadiiVector, SpiderwebParams};

pub use hcheck::{h_ell_check, h_lower_bound, HCheckMethod, HCheckReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Failure {
    #[error("Z0 = {z0:e} is not below 1")]
    Z0TooLarge { z0: f64 },
    #[error(
        "radii polynomial has no negative value below rho* = {rho_star:e} \
         (Y0 = {y0:e}, Z0 = {z0:e}, Z2 = {z2:e}); try a larger rho*"
    )]
    NoNegativeValue {
        y0: f64,
        z0: f64,
        z2: f64,
        rho_star: f64,
    },
    #[error("a bound is not finite")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertifyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("float Jacobian at the center is singular")]
    SingularJacobian,
    #[error("ball of radius {rho_star:e} around the center leaves the ordered cone")]
    BallLeavesCone { rho_star: f64 },
    #[error("invalid rho*: {0}")]
    InvalidRhoStar(f64),
    #[error("certification failed: {0}")]
    CertificationFailed(Failure),
}

/// A proof that exactly one zero of `f` lies within `rho0` (sup norm) of
/// `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub center: RadiiVector,
    pub rho_star: f64,
    pub y0: f64,
    pub z0: f64,
    pub z2: f64,
    pub rho0: f64,
    /// Rigorous upper bound of `p(rho0)`.
    pub p_at_rho0: f64,
}

/// Float inverse of the float Jacobian at `center`.
pub fn approximate_inverse(
    params: &SpiderwebParams,
    center: &[f64],
) -> Result<DMatrix<f64>, CertifyError> {
    System::<f64>::new(params)
        .jacobian(center)?
        .try_inverse()
        .filter(|a| a.iter().all(|x| x.is_finite()))
        .ok_or(CertifyError::SingularJacobian)
}

fn to_intervals(a: &DMatrix<f64>) -> DMatrix<Interval> {
    a.map(Interval::point)
}

fn point_radii(center: &[f64]) -> Vec<Interval> {
    center.iter().map(|&x| Interval::point(x)).collect()
}

/// Upper bound of `‖A f(r̄)‖∞`.
pub fn bound_y0(
    a: &DMatrix<f64>,
    center: &[f64],
    params: &SpiderwebParams,
) -> Result<f64, CertifyError> {
    let f = System::<Interval>::new(params).residual(&point_radii(center))?;
    let ai = to_intervals(a);
    let af: Vec<Interval> = (0..ai.nrows())
        .map(|i| {
            ai.row(i)
                .iter()
                .zip(&f)
                .fold(Interval::point(0.0), |acc, (x, y)| acc + *x * *y)
        })
        .collect();
    Ok(sup_norm(&af))
}

/// Upper bound of `‖I − A Df(r̄)‖∞`.
pub fn bound_z0(
    a: &DMatrix<f64>,
    center: &[f64],
    params: &SpiderwebParams,
) -> Result<f64, CertifyError> {
    let jac = System::<Interval>::new(params).jacobian(&point_radii(center))?;
    Ok(residual_operator_norm(a, &jac))
}

/// Upper bound of `‖I − A J‖∞` for an interval matrix `J`.
pub fn residual_operator_norm(a: &DMatrix<f64>, jac: &DMatrix<Interval>) -> f64 {
    let n = a.nrows();
    let id_minus = DMatrix::from_fn(n, n, |i, j| {
        let e = if i == j { Interval::point(1.0) } else { Interval::point(0.0) };
        let prod = (0..n).fold(Interval::point(0.0), |acc, k| {
            acc + Interval::point(a[(i, k)]) * jac[(k, j)]
        });
        e - prod
    });
    operator_sup_norm(&id_minus)
}

/// Interval hull of the closed `rho_star` ball around `center`.
pub fn ball(center: &[f64], rho_star: f64) -> Vec<Interval> {
    center.iter().map(|&x| Interval::around(x, rho_star)).collect()
}

/// Upper bound of `sup_{b ∈ B_ρ*(r̄)} max_i Σ_{k,m} |Σ_j A_ij ∂²_{km} f_j(b)|`.
pub fn bound_z2(
    a: &DMatrix<f64>,
    center: &[f64],
    params: &SpiderwebParams,
    rho_star: f64,
) -> Result<f64, CertifyError> {
    let b = ball(center, rho_star);
    let sys = System::<Interval>::new(params);
    sys.check_radii(&b)
        .map_err(|_| CertifyError::BallLeavesCone { rho_star })?;
    let h = sys.hessian(&b)?;
    let n = center.len();
    let ai = to_intervals(a);
    let mut worst = 0.0f64;
    for i in 0..n {
        let mut total = 0.0;
        for k in 0..n {
            for m in 0..n {
                let s = if k == m {
                    (0..n).fold(Interval::point(0.0), |acc, j| acc + ai[(i, j)] * h.get(j, k, k))
                } else {
                    ai[(i, k)] * h.cross[(k, m)] + ai[(i, m)] * h.cross[(m, k)]
                };
                if !s.is_finite() {
                    return Ok(f64::INFINITY);
                }
                total = round::add_up(total, s.mag());
            }
        }
        worst = worst.max(total);
    }
    Ok(worst)
}

/// Rigorous upper bound of `p(ρ)`.
pub fn radii_polynomial(y0: f64, z0: f64, z2: f64, rho: f64) -> f64 {
    let (y0, z0, z2, rho) = (
        Interval::point(y0),
        Interval::point(z0),
        Interval::point(z2),
        Interval::point(rho),
    );
    (z2 * rho.sqr() - (Interval::point(1.0) - z0) * rho + y0).hi()
}

/// Smallest practical `ρ0 ≤ ρ*` with `p(ρ0) < 0` proven in interval
/// arithmetic. Returns `(ρ0, upper bound of p(ρ0))`.
pub fn radii_poly_check(y0: f64, z0: f64, z2: f64, rho_star: f64) -> Result<(f64, f64), Failure> {
    if ![y0, z0, z2, rho_star].iter().all(|x| x.is_finite() && *x >= 0.0) {
        return Err(Failure::NonFinite);
    }
    if z0 >= 1.0 {
        return Err(Failure::Z0TooLarge { z0 });
    }
    let fail = Failure::NoNegativeValue {
        y0,
        z0,
        z2,
        rho_star,
    };
    let slack = 1.0 - z0;
    let mut rho = if y0 == 0.0 {
        rho_star * f64::EPSILON
    } else {
        let disc = slack * slack - 4.0 * z2 * y0;
        if !(disc > 0.0) {
            return Err(fail);
        }
        (2.0 * y0 / (slack + disc.sqrt())).next_up()
    };
    for k in 0..=52 {
        if !(rho <= rho_star) || rho <= 0.0 {
            break;
        }
        let p = radii_polynomial(y0, z0, z2, rho);
        if p < 0.0 {
            return Ok((rho, p));
        }
        rho *= 1.0 + f64::EPSILON * 2f64.powi(k);
    }
    Err(fail)
}

/// Default `ρ*`: a small fraction of the smallest of `r_1` and the gaps.
pub fn auto_rho_star(center: &RadiiVector) -> f64 {
    1e-4 * center.min_gap()
}

/// Certifies `config` with the given `ρ*` (or [`auto_rho_star`]), retrying
/// with `ρ*/2, …, ρ*/16` and then `2ρ*, …, 16ρ*` on `ρ*`-related failures.
pub fn certify(config: &Configuration, rho_star: Option<f64>) -> Result<Certificate, CertifyError> {
    let center = config.radii.as_slice();
    let params = &config.params;
    let rho_init = rho_star.unwrap_or_else(|| auto_rho_star(&config.radii));
    if !(rho_init.is_finite() && rho_init > 0.0) {
        return Err(CertifyError::InvalidRhoStar(rho_init));
    }
    let a = approximate_inverse(params, center)?;
    let y0 = bound_y0(&a, center, params)?;
    let z0 = bound_z0(&a, center, params)?;
    if !(z0 < 1.0) {
        return Err(CertifyError::CertificationFailed(Failure::Z0TooLarge { z0 }));
    }
    let attempt = |rho: f64| -> Result<Certificate, CertifyError> {
        let z2 = bound_z2(&a, center, params, rho)?;
        let (rho0, p) =
            radii_poly_check(y0, z0, z2, rho).map_err(CertifyError::CertificationFailed)?;
        Ok(Certificate {
            center: config.radii.clone(),
            rho_star: rho,
            y0,
            z0,
            z2,
            rho0,
            p_at_rho0: p,
        })
    };
    let first = match attempt(rho_init) {
        Ok(c) => return Ok(c),
        Err(e) => e,
    };
    let ladder = (1..=4)
        .map(|k| rho_init / 2f64.powi(k))
        .chain((1..=4).map(|k| rho_init * 2f64.powi(k)));
    for rho in ladder {
        if let Ok(c) = attempt(rho) {
            return Ok(c);
        }
    }
    Err(first)
}

/// Checks in interval arithmetic that every row of `Df(r)` is strictly
/// diagonally dominant.
pub fn dominance_check(params: &SpiderwebParams, radii: &[f64]) -> bool {
    let sys = System::<Interval>::new(params);
    let r = point_radii(radii);
    let (Ok(jac), Ok(rows)) = (sys.jacobian(&r), sys.row_dominance(&r)) else {
        return false;
    };
    let n = radii.len();
    (0..n).all(|i| {
        let diag = jac[(i, i)];
        let signed = diag.certainly_negative()
            && (0..n).all(|j| j == i || jac[(i, j)].certainly_positive());
        if signed && rows[i].certainly_positive() {
            return true;
        }
        let off = (0..n)
            .filter(|&j| j != i)
            .fold(0.0, |acc, j| round::add_up(acc, jac[(i, j)].mag()));
        diag.mig() > off
    })
}
