//! Numerical construction of spiderweb configurations.
//!
//! One ring is solved in closed form. Each further ring is first inserted
//! with zero mass at the unique radius where it is in equilibrium with the
//! rings already placed, then its mass is continued to the target value with
//! a damped Newton corrector.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::model::{ModelError, System};
use crate::params::{check_cone, Configuration, ParamError, RadiiVector, SpiderwebParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid settings: {0}")]
    InvalidSettings(&'static str),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("single-ring solve called with {0} rings")]
    NotSingleRing(usize),
    #[error("Newton did not reach tolerance after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("Jacobian is numerically singular")]
    SingularJacobian,
    #[error("every damped step leaves the ordered cone")]
    OrderingViolated,
    #[error("mass continuation stalled at mass {last_mass:e}")]
    ContinuationStalled { last_mass: f64 },
    #[error("gap {gap} is not available for {n} rings")]
    BadGap { gap: usize, n: usize },
    #[error("no sign change of the probe lambda in gap {gap}")]
    NoSignChange { gap: usize },
    #[error("construction failed at ring {ring}: {source}")]
    AtRing {
        ring: usize,
        #[source]
        source: Box<SolverError>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationSettings {
    /// First mass increment; `None` means an eighth of the mass to add.
    pub mass_step_init: Option<f64>,
    pub step_shrink: f64,
    pub step_grow: f64,
    /// Stopping threshold on `‖f‖∞`.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Bracket width for insertion, relative to the outermost radius.
    pub bisect_tol: f64,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        ContinuationSettings {
            mass_step_init: None,
            step_shrink: 0.5,
            step_grow: 2.0,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            bisect_tol: 1e-13,
        }
    }
}

impl ContinuationSettings {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.newton_tol > 0.0) {
            return Err(SolverError::InvalidSettings("newton_tol must be positive"));
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return Err(SolverError::InvalidSettings("step_shrink must lie in (0, 1)"));
        }
        if !(self.step_grow > 1.0 && self.step_grow.is_finite()) {
            return Err(SolverError::InvalidSettings("step_grow must exceed 1"));
        }
        if self.newton_max_iter == 0 {
            return Err(SolverError::InvalidSettings("newton_max_iter must be positive"));
        }
        if !(self.bisect_tol > 0.0) {
            return Err(SolverError::InvalidSettings("bisect_tol must be positive"));
        }
        if matches!(self.mass_step_init, Some(s) if !(s > 0.0)) {
            return Err(SolverError::InvalidSettings("mass_step_init must be positive"));
        }
        Ok(())
    }
}

/// Gap `i` is `(r_i, r_{i+1})` with `r_0 = 0` and `r_{n+1} = ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InsertionGap(pub usize);

impl InsertionGap {
    pub fn outer(n: usize) -> Self {
        InsertionGap(n)
    }
}

/// Result of placing a massless ring.
#[derive(Debug, Clone, PartialEq)]
pub struct Insertion {
    pub radius: f64,
    /// Position of the new ring in `radii` (0-based).
    pub index: usize,
    pub radii: Vec<f64>,
    /// The input parameters with a zero mass at `index`.
    pub params: SpiderwebParams,
}

/// Trace of a Newton run.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub radii: Vec<f64>,
    pub iterations: usize,
    /// `‖f‖∞` at every iterate, starting with the initial guess.
    pub history: Vec<f64>,
    /// Stopped above tolerance because the Newton correction was already
    /// at rounding level.
    pub rounding_limited: bool,
}

/// Corrections below this many ulps of `‖r‖∞` are rounding noise.
const ROUNDING_STEP_ULPS: f64 = 1024.0;

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Closed-form radius of a lone ring.
pub fn single_ring_radius(ell: usize, m0: f64, m1: f64, lambda: f64) -> Result<f64, ModelError> {
    let zeta: f64 = crate::model::zeta(ell)?;
    Ok(((m1 * zeta / 8f64.sqrt() + m0) / -lambda).cbrt())
}

pub fn solve_single_ring(params: &SpiderwebParams) -> Result<Configuration, SolverError> {
    if params.n() != 1 {
        return Err(SolverError::NotSingleRing(params.n()));
    }
    let r = single_ring_radius(params.ell(), params.m0(), params.masses()[0], params.lambda())?;
    Ok(Configuration::new(params.clone(), RadiiVector::new(vec![r])?)?)
}

/// Damped Newton iteration with its residual history. Stops early, flagged,
/// once the correction is at rounding level.
pub fn newton_trace(
    params: &SpiderwebParams,
    initial: &[f64],
    settings: &ContinuationSettings,
) -> Result<NewtonReport, SolverError> {
    settings.validate()?;
    check_cone(initial)?;
    let sys = System::<f64>::new(params);
    let mut r = initial.to_vec();
    let mut f = sys.residual(&r)?;
    let mut norm = sup(&f);
    let mut history = vec![norm];
    let mut iterations = 0;
    while !(norm <= settings.newton_tol) {
        if iterations == settings.newton_max_iter || !norm.is_finite() {
            return Err(SolverError::NewtonDiverged {
                iterations,
                residual: norm,
            });
        }
        let jac = sys.jacobian(&r)?;
        let delta = jac
            .lu()
            .solve(&DVector::from_vec(f.clone()))
            .filter(|d| d.iter().all(|x| x.is_finite()))
            .ok_or(SolverError::SingularJacobian)?;
        let mut alpha = 1.0;
        let mut any_ordered = false;
        loop {
            let cand: Vec<f64> = r.iter().zip(delta.iter()).map(|(x, d)| x - alpha * d).collect();
            if check_cone(&cand).is_ok() {
                any_ordered = true;
                let fc = sys.residual(&cand)?;
                let nc = sup(&fc);
                if nc < norm {
                    r = cand;
                    f = fc;
                    norm = nc;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1.0 / 1024.0 {
                let scale = sup(&r);
                if any_ordered && delta.amax() <= ROUNDING_STEP_ULPS * f64::EPSILON * scale {
                    return Ok(NewtonReport {
                        radii: r,
                        iterations,
                        history,
                        rounding_limited: true,
                    });
                }
                return Err(if any_ordered {
                    SolverError::NewtonDiverged {
                        iterations,
                        residual: norm,
                    }
                } else {
                    SolverError::OrderingViolated
                });
            }
        }
        iterations += 1;
        history.push(norm);
    }
    Ok(NewtonReport {
        radii: r,
        iterations,
        history,
        rounding_limited: false,
    })
}

pub fn newton_solve(
    params: &SpiderwebParams,
    initial: &[f64],
    settings: &ContinuationSettings,
) -> Result<Configuration, SolverError> {
    let rep = newton_trace(params, initial, settings)?;
    Ok(Configuration::new(params.clone(), RadiiVector::new(rep.radii)?)?)
}

/// Places a massless ring in `gap` where its own λ equals the common λ.
pub fn insert_zero_mass_ring(
    config: &Configuration,
    gap: InsertionGap,
    settings: &ContinuationSettings,
) -> Result<Insertion, SolverError> {
    settings.validate()?;
    let params = &config.params;
    let r = config.radii.as_slice();
    let n = r.len();
    let InsertionGap(g) = gap;
    if g > n {
        return Err(SolverError::BadGap { gap: g, n });
    }
    let sys = System::<f64>::new(params);
    let lambda = params.lambda();
    let excess = |s: f64| sys.probe_lambda(s, r).map(|l| l - lambda);

    let (mut lo, mut hi) = match g {
        0 => (r[0] * 2f64.powi(-60), r[0]),
        _ if g == n => (r[n - 1], 2.0 * r[n - 1]),
        _ => (r[g - 1], r[g]),
    };
    if g == n {
        let cap = 2f64.powi(60) * r[n - 1];
        while excess(hi)? <= 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > cap {
                return Err(SolverError::NoSignChange { gap: g });
            }
        }
    }
    if g == 0 && excess(lo)? >= 0.0 {
        return Err(SolverError::NoSignChange { gap: g });
    }
    let width = settings.bisect_tol * r[n - 1];
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= width || mid <= lo || mid >= hi {
            break;
        }
        if excess(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let radius = 0.5 * (lo + hi);
    let mut radii = r.to_vec();
    radii.insert(g, radius);
    check_cone(&radii)?;
    Ok(Insertion {
        radius,
        index: g,
        radii,
        params: params.with_ring(g, 0.0),
    })
}

/// Continues the mass of ring `ring` from its value in `params` to
/// `target_mass`, correcting the radii with Newton at every step.
pub fn continue_mass(
    params: &SpiderwebParams,
    ring: usize,
    radii: &[f64],
    target_mass: f64,
    settings: &ContinuationSettings,
) -> Result<Configuration, SolverError> {
    settings.validate()?;
    if ring >= params.n() {
        return Err(ModelError::BadIndex(ring).into());
    }
    if !(target_mass.is_finite() && target_mass >= 0.0) {
        return Err(ParamError::NonPositiveMass {
            ring: ring + 1,
            mass: target_mass,
        }
        .into());
    }
    let mut current = params.clone();
    let mut mass = params.masses()[ring];
    let mut r = radii.to_vec();
    let span = target_mass - mass;
    if span == 0.0 {
        return Ok(Configuration::new(current, RadiiVector::new(r)?)?);
    }
    let init = settings.mass_step_init.unwrap_or(span.abs() / 8.0);
    let floor = init * 1e-12;
    let dir = span.signum();
    let mut step = init;
    while mass != target_mass {
        let next = if (target_mass - mass).abs() <= step {
            target_mass
        } else {
            mass + dir * step
        };
        let mut trial = current.clone();
        trial.set_ring_mass(ring, next);
        match newton_trace(&trial, &r, settings) {
            Ok(rep) => {
                r = rep.radii;
                mass = next;
                current = trial;
                if rep.iterations <= 3 {
                    step *= settings.step_grow;
                }
            }
            Err(SolverError::Model(e)) => return Err(e.into()),
            Err(_) => {
                step *= settings.step_shrink;
                if step < floor {
                    return Err(SolverError::ContinuationStalled { last_mass: mass });
                }
            }
        }
    }
    Ok(Configuration::new(current, RadiiVector::new(r)?)?)
}

/// Builds the configuration ring by ring, always inserting outermost.
pub fn build_configuration(
    params: &SpiderwebParams,
    settings: &ContinuationSettings,
) -> Result<Configuration, SolverError> {
    build_progressively(params, settings, |_| Ok(()))
}

/// Like [`build_configuration`], handing every intermediate configuration
/// (1, 2, …, n rings) to `visit`.
pub fn build_progressively<F>(
    params: &SpiderwebParams,
    settings: &ContinuationSettings,
    mut visit: F,
) -> Result<Configuration, SolverError>
where
    F: FnMut(&Configuration) -> Result<(), SolverError>,
{
    settings.validate()?;
    let at = |ring: usize| move |e: SolverError| SolverError::AtRing {
        ring,
        source: Box::new(e),
    };
    let placeholder = PLACEHOLDER_MASS * params.masses().iter().cloned().fold(params.m0(), f64::max);
    let mut cfg = solve_single_ring(&params.truncated(1)).map_err(at(1))?;
    visit(&cfg)?;
    for k in 1..params.n() {
        // A massless outermost ring leaves no root for the next insertion
        // apart from its own radius, so it carries a small mass meanwhile.
        let held = params.masses()[k - 1] == 0.0;
        if held {
            cfg = continue_mass(&cfg.params, k - 1, cfg.radii.as_slice(), placeholder, settings)
                .map_err(at(k))?;
        }
        let ins = insert_zero_mass_ring(&cfg, InsertionGap::outer(k), settings).map_err(at(k + 1))?;
        let mut grown = continue_mass(&ins.params, ins.index, &ins.radii, params.masses()[k], settings)
            .map_err(at(k + 1))?;
        if held {
            grown = continue_mass(&grown.params, k - 1, grown.radii.as_slice(), 0.0, settings)
                .map_err(at(k))?;
        }
        cfg = Configuration::new(params.truncated(k + 1), grown.radii)?;
        visit(&cfg)?;
    }
    Ok(cfg)
}

/// Temporary mass of a massless ring while the next ring is inserted,
/// relative to the largest mass.
const PLACEHOLDER_MASS: f64 = 1e-4;

/// Newton step map used by tests and by callers polishing a certified
/// center: `r − Df(r)⁻¹ f(r)`.
pub fn newton_step(params: &SpiderwebParams, r: &[f64]) -> Result<Vec<f64>, SolverError> {
    let sys = System::<f64>::new(params);
    let f = DVector::from_vec(sys.residual(r)?);
    let jac: DMatrix<f64> = sys.jacobian(r)?;
    let d = jac.lu().solve(&f).ok_or(SolverError::SingularJacobian)?;
    Ok(r.iter().zip(d.iter()).map(|(x, dx)| x - dx).collect())
}
