use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("ring count must be at least 1")]
    NoRings,
    #[error("need at least 2 spokes per ring, got {0}")]
    TooFewSpokes(usize),
    #[error("ring {ring} has non-positive mass {mass}")]
    NonPositiveMass { ring: usize, mass: f64 },
    #[error("central mass must be nonnegative and finite, got {0}")]
    InvalidCentralMass(f64),
    #[error("lambda must be strictly negative and finite, got {0}")]
    NonNegativeLambda(f64),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("radii are not strictly increasing and positive at index {0}")]
    NotInCone(usize),
    #[error("the innermost ring and the center cannot both be massless")]
    NoAttractingMass,
}

/// One spiderweb problem instance: `n` rings of `ell` equal bodies each, an
/// optional central body, and the common proportionality constant λ < 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SpiderwebParams {
    ell: usize,
    m0: f64,
    masses: Vec<f64>,
    lambda: f64,
}

impl SpiderwebParams {
    /// Validated instance: `ell ≥ 2`, every ring mass `> 0`, `m0 ≥ 0`, `λ < 0`.
    pub fn new(ell: usize, m0: f64, masses: Vec<f64>, lambda: f64) -> Result<Self, ParamError> {
        let p = Self::new_restricted(ell, m0, masses, lambda)?;
        if let Some((ring, &mass)) = p.masses.iter().enumerate().find(|(_, &m)| m <= 0.0) {
            return Err(ParamError::NonPositiveMass { ring: ring + 1, mass });
        }
        Ok(p)
    }

    /// Like [`SpiderwebParams::new`] but admits massless rings (the restricted
    /// problem), as long as the innermost ring or the center carries mass.
    pub fn new_restricted(
        ell: usize,
        m0: f64,
        masses: Vec<f64>,
        lambda: f64,
    ) -> Result<Self, ParamError> {
        if masses.is_empty() {
            return Err(ParamError::NoRings);
        }
        if ell < 2 {
            return Err(ParamError::TooFewSpokes(ell));
        }
        if !(m0.is_finite() && m0 >= 0.0) {
            return Err(ParamError::InvalidCentralMass(m0));
        }
        if !(lambda.is_finite() && lambda < 0.0) {
            return Err(ParamError::NonNegativeLambda(lambda));
        }
        if let Some((ring, &mass)) = masses
            .iter()
            .enumerate()
            .find(|(_, m)| !(m.is_finite() && **m >= 0.0))
        {
            return Err(ParamError::NonPositiveMass { ring: ring + 1, mass });
        }
        if masses[0] == 0.0 && m0 == 0.0 {
            return Err(ParamError::NoAttractingMass);
        }
        Ok(SpiderwebParams {
            ell,
            m0,
            masses,
            lambda,
        })
    }

    pub fn n(&self) -> usize {
        self.masses.len()
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn m0(&self) -> f64 {
        self.m0
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// True when every ring mass is strictly positive.
    pub fn is_unrestricted(&self) -> bool {
        self.masses.iter().all(|&m| m > 0.0)
    }

    /// Same instance with every ring mass multiplied by `factor`.
    pub fn scale_masses(&self, factor: f64) -> Self {
        SpiderwebParams {
            ell: self.ell,
            m0: self.m0 * factor,
            masses: self.masses.iter().map(|m| m * factor).collect(),
            lambda: self.lambda,
        }
    }

    /// First `k` rings of this instance.
    pub fn truncated(&self, k: usize) -> Self {
        assert!(k >= 1 && k <= self.n());
        SpiderwebParams {
            masses: self.masses[..k].to_vec(),
            ..self.clone()
        }
    }

    /// Instance with a ring of mass `mass` inserted at position `index`.
    pub(crate) fn with_ring(&self, index: usize, mass: f64) -> Self {
        let mut masses = self.masses.clone();
        masses.insert(index, mass);
        SpiderwebParams {
            masses,
            ..self.clone()
        }
    }

    pub(crate) fn set_ring_mass(&mut self, index: usize, mass: f64) {
        self.masses[index] = mass;
    }
}

/// Strictly increasing positive ring radii (a point of the open cone).
#[derive(Debug, Clone, PartialEq)]
pub struct RadiiVector(Vec<f64>);

impl RadiiVector {
    pub fn new(r: Vec<f64>) -> Result<Self, ParamError> {
        check_cone(&r)?;
        Ok(RadiiVector(r))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Smallest of `r_1` and the consecutive gaps.
    pub fn min_gap(&self) -> f64 {
        self.0
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(self.0[0], f64::min)
    }
}

pub(crate) fn check_cone(r: &[f64]) -> Result<(), ParamError> {
    if r.is_empty() {
        return Err(ParamError::NoRings);
    }
    if !(r[0].is_finite() && r[0] > 0.0) {
        return Err(ParamError::NotInCone(0));
    }
    for (i, w) in r.windows(2).enumerate() {
        if !(w[1].is_finite() && w[0] < w[1]) {
            return Err(ParamError::NotInCone(i + 1));
        }
    }
    Ok(())
}

/// A solved instance: parameters, radii and the residual sup-norm there.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub params: SpiderwebParams,
    pub radii: RadiiVector,
    pub residual_norm: f64,
}

impl Configuration {
    pub fn new(params: SpiderwebParams, radii: RadiiVector) -> Result<Self, ParamError> {
        if radii.len() != params.n() {
            return Err(ParamError::LengthMismatch {
                expected: params.n(),
                got: radii.len(),
            });
        }
        let residual_norm = crate::model::System::<f64>::new(&params)
            .residual(radii.as_slice())
            .map(|f| f.iter().fold(0.0, |a: f64, x| a.max(x.abs())))
            .unwrap_or(f64::INFINITY);
        Ok(Configuration {
            params,
            radii,
            residual_norm,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(SpiderwebParams::new(2, 0.0, vec![1.0], -1.0).is_ok());
        assert_eq!(
            SpiderwebParams::new(1, 0.0, vec![1.0], -1.0),
            Err(ParamError::TooFewSpokes(1))
        );
        assert_eq!(
            SpiderwebParams::new(3, 0.0, vec![1.0, 0.0, 2.0], -1.0),
            Err(ParamError::NonPositiveMass { ring: 2, mass: 0.0 })
        );
        assert!(SpiderwebParams::new(3, -1.0, vec![1.0], -1.0).is_err());
        assert!(SpiderwebParams::new(3, 0.0, vec![1.0], 0.0).is_err());
        assert!(SpiderwebParams::new(3, 0.0, vec![], -1.0).is_err());
        assert!(SpiderwebParams::new_restricted(3, 0.0, vec![1.0, 0.0, 2.0], -1.0).is_ok());
        assert_eq!(
            SpiderwebParams::new_restricted(3, 0.0, vec![0.0, 1.0], -1.0),
            Err(ParamError::NoAttractingMass)
        );
    }

    #[test]
    fn cone() {
        assert!(RadiiVector::new(vec![0.5, 1.0, 2.0]).is_ok());
        assert_eq!(RadiiVector::new(vec![1.0, 1.0]), Err(ParamError::NotInCone(1)));
        assert_eq!(RadiiVector::new(vec![0.0, 1.0]), Err(ParamError::NotInCone(0)));
        assert_eq!(RadiiVector::new(vec![2.0, 1.0]), Err(ParamError::NotInCone(1)));
        assert_eq!(RadiiVector::new(vec![0.5, 1.0, 1.2]).unwrap().min_gap(), 1.2 - 1.0);
    }
}
