//! Observables of computed webs: relative spacings `a_i`, relative width
//! `b`, cumulative mass `M(η)`, and parameter scans over `(n, ℓ)`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::certify::{certify, Certificate};
use crate::params::{Configuration, ParamError, SpiderwebParams};
use crate::solver::{build_progressively, ContinuationSettings};

pub const DEFAULT_CONVEXITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("bad mass spec {0:?}: expected v1,v2,..., equal:v, inv or kappa")]
    BadMassSpec(String),
    #[error("mass list has {got} entries but {needed} rings were requested")]
    ShortMassList { got: usize, needed: usize },
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("csv output failed: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpacingProfile {
    /// `a_i = (r_{i+1} − r_i) / r_1`.
    pub a: Vec<f64>,
    /// `b = (r_n − r_1) / r_1`.
    pub b: f64,
    /// 1-based index of the largest `a_i`.
    pub i_star: Option<usize>,
    pub convex: bool,
    /// `a_{i+1} − 2a_i + a_{i−1}`.
    pub second_differences: Vec<f64>,
}

pub fn spacing_profile(config: &Configuration, convexity_tol: f64) -> SpacingProfile {
    let r = config.radii.as_slice();
    let r1 = r[0];
    let a: Vec<f64> = r.windows(2).map(|w| (w[1] - w[0]) / r1).collect();
    let b = (r[r.len() - 1] - r1) / r1;
    let i_star = a
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &x)| match best {
            Some((_, y)) if y >= x => best,
            _ => Some((i, x)),
        })
        .map(|(i, _)| i + 1);
    let second_differences: Vec<f64> = a.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect();
    let convex = second_differences.iter().all(|&d| d >= -convexity_tol);
    SpacingProfile {
        a,
        b,
        i_star,
        convex,
        second_differences,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassProfile {
    pub eta_grid: Vec<f64>,
    /// `χ(η) = #{j : r_j ≤ η}`.
    pub chi: Vec<usize>,
    /// `M(η) = ℓ Σ_{i ≤ χ(η)} m_i`, exact in the rationals.
    pub mass: Vec<BigRational>,
}

impl MassProfile {
    pub fn mass_f64(&self) -> Vec<f64> {
        self.mass.iter().map(|m| m.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("masses are finite")
}

pub fn mass_profile(config: &Configuration, eta_grid: &[f64]) -> MassProfile {
    let r = config.radii.as_slice();
    let ell = BigRational::from_integer(config.params.ell().into());
    let mut partial = vec![BigRational::zero()];
    for &m in config.params.masses() {
        let next = partial[partial.len() - 1].clone() + exact(m) * ell.clone();
        partial.push(next);
    }
    let chi: Vec<usize> = eta_grid
        .iter()
        .map(|&eta| r.partition_point(|&ri| ri <= eta))
        .collect();
    let mass = chi.iter().map(|&c| partial[c].clone()).collect();
    MassProfile {
        eta_grid: eta_grid.to_vec(),
        chi,
        mass,
    }
}

/// How ring masses are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum MassSpec {
    List(Vec<f64>),
    Equal(f64),
    /// `m_i = 1/i`.
    Inv,
    /// `m_i = κ(i)`.
    Kappa,
}

/// `κ(x) = |sin(21π(x−25)) / (42 sin(π(x−25)/2)) + cos(πx/25)|`, with the
/// removable singularities at odd `x` filled by their limits.
pub fn kappa(x: f64) -> f64 {
    use std::f64::consts::PI;
    let t = x - 25.0;
    let half = t / 2.0;
    let quotient = if t.fract() == 0.0 && half.fract() == 0.0 {
        if (half as i64).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    } else {
        (21.0 * PI * t).sin() / (42.0 * (PI * t / 2.0).sin())
    };
    (quotient + (PI * x / 25.0).cos()).abs()
}

impl MassSpec {
    pub fn masses(&self, n: usize) -> Result<Vec<f64>, AnalysisError> {
        Ok(match self {
            MassSpec::List(v) if v.len() < n => {
                return Err(AnalysisError::ShortMassList {
                    got: v.len(),
                    needed: n,
                })
            }
            MassSpec::List(v) => v[..n].to_vec(),
            MassSpec::Equal(m) => vec![*m; n],
            MassSpec::Inv => (1..=n).map(|i| 1.0 / i as f64).collect(),
            MassSpec::Kappa => (1..=n).map(|i| kappa(i as f64)).collect(),
        })
    }

    /// Presets may contain massless rings (κ(25) = 0), explicit lists may not.
    pub fn params(&self, ell: usize, n: usize, m0: f64, lambda: f64) -> Result<SpiderwebParams, AnalysisError> {
        let masses = self.masses(n)?;
        Ok(match self {
            MassSpec::Kappa => SpiderwebParams::new_restricted(ell, m0, masses, lambda)?,
            _ => SpiderwebParams::new(ell, m0, masses, lambda)?,
        })
    }
}

impl FromStr for MassSpec {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AnalysisError::BadMassSpec(s.to_string());
        let s = s.trim();
        match s {
            "inv" => Ok(MassSpec::Inv),
            "kappa" => Ok(MassSpec::Kappa),
            _ => {
                if let Some(v) = s.strip_prefix("equal:") {
                    return v.trim().parse().map(MassSpec::Equal).map_err(|_| bad());
                }
                s.split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map(MassSpec::List)
                    .map_err(|_| bad())
            }
        }
    }
}

impl fmt::Display for MassSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MassSpec::List(v) => {
                let parts: Vec<String> = v.iter().map(|m| m.to_string()).collect();
                write!(f, "{}", parts.join(";"))
            }
            MassSpec::Equal(m) => write!(f, "equal:{}", m),
            MassSpec::Inv => write!(f, "inv"),
            MassSpec::Kappa => write!(f, "kappa"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub n_max: usize,
    pub ells: Vec<usize>,
    pub mass_spec: MassSpec,
    pub m0: f64,
    pub lambda: f64,
    pub settings: ContinuationSettings,
    pub rho_star: Option<f64>,
    pub convexity_tol: f64,
}

impl ScanConfig {
    pub fn new(n_max: usize, ells: Vec<usize>, mass_spec: MassSpec) -> Self {
        ScanConfig {
            n_max,
            ells,
            mass_spec,
            m0: 0.0,
            lambda: -1.0,
            settings: ContinuationSettings::default(),
            rho_star: None,
            convexity_tol: DEFAULT_CONVEXITY_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub n: usize,
    pub ell: usize,
    pub lambda: f64,
    pub m0: f64,
    pub mass_spec: String,
    pub radii: Vec<f64>,
    pub certificate: Option<Certificate>,
    pub profile: Option<SpacingProfile>,
    pub status: String,
}

impl ScanRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

fn scan_ell(cfg: &ScanConfig, ell: usize) -> Vec<ScanRow> {
    let row = |n: usize, radii: Vec<f64>, status: String| ScanRow {
        n,
        ell,
        lambda: cfg.lambda,
        m0: cfg.m0,
        mass_spec: cfg.mass_spec.to_string(),
        radii,
        certificate: None,
        profile: None,
        status,
    };
    let params = match cfg.mass_spec.params(ell, cfg.n_max, cfg.m0, cfg.lambda) {
        Ok(p) => p,
        Err(e) => return (1..=cfg.n_max).map(|n| row(n, vec![], format!("invalid: {e}"))).collect(),
    };
    let mut rows = Vec::with_capacity(cfg.n_max);
    let built = build_progressively(&params, &cfg.settings, |c| {
        let mut r = row(c.params.n(), c.radii.as_slice().to_vec(), String::new());
        match certify(c, cfg.rho_star) {
            Ok(cert) => {
                r.certificate = Some(cert);
                r.status = "ok".into();
            }
            Err(e) => r.status = format!("certify_failed: {e}"),
        }
        r.profile = Some(spacing_profile(c, cfg.convexity_tol));
        rows.push(r);
        Ok(())
    });
    if let Err(e) = built {
        for n in rows.len() + 1..=cfg.n_max {
            rows.push(row(n, vec![], format!("build_failed: {e}")));
        }
    }
    rows
}

/// Builds, certifies and profiles every `(n, ℓ)` with `n ≤ n_max`, in
/// parallel over `ℓ` on the current rayon pool. Rows are sorted by `(n, ℓ)`.
pub fn scan(cfg: &ScanConfig) -> Vec<ScanRow> {
    let mut rows: Vec<ScanRow> = cfg
        .ells
        .par_iter()
        .flat_map_iter(|&ell| scan_ell(cfg, ell))
        .collect();
    rows.sort_by_key(|r| (r.n, r.ell));
    rows
}

/// Smallest `ℓ` among the rows for `n` whose spacing maximum is at `i = 1`.
pub fn estimate_mu(rows: &[ScanRow], n: usize) -> Option<usize> {
    rows.iter()
        .filter(|r| r.n == n && r.profile.as_ref().and_then(|p| p.i_star) == Some(1))
        .map(|r| r.ell)
        .min()
}

/// Decimal with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Writes rows as CSV with radius columns `r_1..r_{n_max}`.
pub fn write_csv<W: Write>(rows: &[ScanRow], n_max: usize, out: W) -> Result<(), AnalysisError> {
    let err = |e: csv::Error| AnalysisError::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["n", "ell", "lambda", "m0", "mass_spec"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=n_max).map(|i| format!("r_{i}")));
    header.extend(
        ["rho0", "Y0", "Z0", "Z2", "b", "i_star", "convex", "status"]
            .iter()
            .map(|s| s.to_string()),
    );
    w.write_record(&header).map_err(err)?;
    for r in rows {
        let mut rec = vec![
            r.n.to_string(),
            r.ell.to_string(),
            fmt_float(r.lambda),
            fmt_float(r.m0),
            r.mass_spec.clone(),
        ];
        rec.extend((0..n_max).map(|i| r.radii.get(i).map(|&x| fmt_float(x)).unwrap_or_default()));
        match &r.certificate {
            Some(c) => rec.extend([c.rho0, c.y0, c.z0, c.z2].map(fmt_float)),
            None => rec.extend(std::iter::repeat_n(String::new(), 4)),
        }
        match &r.profile {
            Some(p) => {
                rec.push(fmt_float(p.b));
                rec.push(p.i_star.map(|i| i.to_string()).unwrap_or_default());
                rec.push(p.convex.to_string());
            }
            None => rec.extend(std::iter::repeat_n(String::new(), 3)),
        }
        rec.push(r.status.clone());
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| AnalysisError::Csv(e.to_string()))
}
