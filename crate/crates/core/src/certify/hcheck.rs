//! Computer-assisted positivity check of the row-dominance kernel `h_ℓ` on
//! `[0, 1]`.
//!
//! With `|h_ℓ'| ≤ M` on `[0, 1]`, grid points `s_q = q/p` and `M/p < m`, the
//! inequalities `h_ℓ(s_q) > m` for every `q` give `h_ℓ > m − M/p > 0`.

use crate::interval::{round, Interval};
use crate::model::{h_ell, h_ell_d1, ModelError, Spokes};

/// Coarse pieces used to bound `|h_ℓ'|`.
const DERIV_PIECES: usize = 64;
/// Float presample used to guess `m`.
const PRESAMPLE: usize = 4096;
/// Pieces of the mean-value lower bound of `min h_ℓ`.
const LOWER_PIECES: usize = 1 << 14;
const MAX_GRID: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HCheckMethod {
    /// `ℓ ≤ 4`: the closed form is bounded below by interval evaluation.
    ClosedForm,
    Grid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HCheckReport {
    pub ell: usize,
    pub method: HCheckMethod,
    /// Grid count `p`.
    pub p: usize,
    /// Rigorous bound `M ≥ |h_ℓ'|` on `[0, 1]`.
    pub deriv_bound: f64,
    /// The guessed lower bound `m` (0 when the presample is not positive).
    pub lower_bound: f64,
    pub verified: bool,
    /// A point with a rigorously negative value, when one was found.
    pub negative_witness: Option<(f64, Interval)>,
    /// Rigorous lower bound of `min_{[0,1]} h_ℓ`.
    pub min_lower: f64,
    /// Enclosure of `ζ_ℓ`.
    pub zeta: Interval,
}

fn piece(q: usize, pieces: usize) -> Interval {
    Interval::ratio(q as i64, pieces as i64).hull(Interval::ratio(q as i64 + 1, pieces as i64))
}

/// Rigorous upper bound of `|h_ℓ'|` on `[0, 1]`.
pub fn h_deriv_bound(spokes: &Spokes<Interval>, pieces: usize) -> f64 {
    (0..pieces)
        .map(|q| h_ell_d1(piece(q, pieces), spokes))
        .fold(0.0, |acc, d| if d.is_finite() { acc.max(d.mag()) } else { f64::INFINITY })
}

/// Rigorous lower bound of `min_{[0,1]} h_ℓ` by the mean-value form on
/// `pieces` equal subintervals.
pub fn h_lower_bound(ell: usize, pieces: usize) -> Result<f64, ModelError> {
    let spokes = Spokes::<Interval>::new(ell)?;
    Ok((0..pieces)
        .map(|q| {
            let x = piece(q, pieces);
            let c = Interval::point(x.mid());
            let mv = h_ell(c, &spokes) + h_ell_d1(x, &spokes) * (x - c);
            let direct = h_ell(x, &spokes);
            mv.lo().max(direct.lo())
        })
        .fold(f64::INFINITY, f64::min))
}

/// Interval closed forms for `ℓ ∈ {2, 3, 4}`.
pub fn h_closed_form_interval(x: Interval, ell: usize) -> Option<Interval> {
    let one = Interval::point(1.0);
    let c = |k: i64| Interval::from_int(k);
    match ell {
        2 => Some(c(4) / (one + x).powi(3)),
        3 => Some(
            c(3) * (Interval::ratio(1, 2) + Interval::ratio(7, 2) * x + c(2) * x.sqr())
                / (one + x + x.sqr()).pow_half(5),
        ),
        4 => Some(
            c(4) / (one + x).powi(3)
                + c(2) * (c(2) * x.sqr() + c(3) * x - one) / (one + x.sqr()).pow_half(5),
        ),
        _ => None,
    }
}

/// Runs the positivity check with grid count `p` (chosen automatically
/// from `M` and `m` when `None`).
pub fn h_ell_check(ell: usize, p: Option<usize>) -> Result<HCheckReport, ModelError> {
    let spokes = Spokes::<Interval>::new(ell)?;
    let fspokes = Spokes::<f64>::new(ell)?;
    let deriv_bound = h_deriv_bound(&spokes, DERIV_PIECES);

    let (xmin, fmin) = (0..=PRESAMPLE)
        .map(|q| {
            let x = q as f64 / PRESAMPLE as f64;
            (x, h_ell(x, &fspokes))
        })
        .fold((0.0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    let lower_bound = if fmin > 0.0 { 0.5 * fmin } else { 0.0 };

    let auto_p = if lower_bound > 0.0 && deriv_bound.is_finite() {
        ((deriv_bound / lower_bound).floor() as usize).saturating_add(1)
    } else {
        0
    };
    let p = p.unwrap_or(auto_p);
    let grid_ok = lower_bound > 0.0
        && (1..=MAX_GRID).contains(&p)
        && round::div_up(deriv_bound, p as f64) < lower_bound
        && (0..=p).all(|q| h_ell(Interval::ratio(q as i64, p as i64), &spokes).lo() > lower_bound);

    let (method, verified) = if ell <= 4 {
        let closed_ok = (0..256).all(|q| {
            h_closed_form_interval(piece(q, 256), ell)
                .map(|v| v.certainly_positive())
                .unwrap_or(false)
        });
        (HCheckMethod::ClosedForm, closed_ok)
    } else {
        (HCheckMethod::Grid, grid_ok)
    };

    let negative_witness = if fmin < 0.0 {
        let v = h_ell(Interval::point(xmin), &spokes);
        v.certainly_negative().then_some((xmin, v))
    } else {
        None
    };

    Ok(HCheckReport {
        ell,
        method,
        p,
        deriv_bound,
        lower_bound,
        verified,
        negative_witness,
        min_lower: h_lower_bound(ell, LOWER_PIECES)?,
        zeta: spokes.zeta(),
    })
}
