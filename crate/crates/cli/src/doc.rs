//! JSON solution documents. Every real number is stored as a decimal string
//! with 17 significant digits, which round-trips doubles exactly.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use spiderweb_core::{Certificate, Configuration, ParamError, RadiiVector, SpiderwebParams};

pub const SCHEMA_VERSION: u32 = 1;

/// A double written as `{:.16e}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dec(pub f64);

impl Serialize for Dec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{:.16e}", self.0))
    }
}

impl<'de> Deserialize<'de> for Dec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Dec;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a decimal string or number")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Dec, E> {
                v.trim().parse().map(Dec).map_err(E::custom)
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Dec, E> {
                Ok(Dec(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Dec, E> {
                Ok(Dec(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Dec, E> {
                Ok(Dec(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}

fn decs(v: &[f64]) -> Vec<Dec> {
    v.iter().map(|&x| Dec(x)).collect()
}

fn floats(v: &[Dec]) -> Vec<f64> {
    v.iter().map(|d| d.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsDoc {
    pub n: usize,
    pub ell: usize,
    pub m0: Dec,
    pub masses: Vec<Dec>,
    pub lambda: Dec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateDoc {
    pub center: Vec<Dec>,
    pub rho_star: Dec,
    #[serde(rename = "Y0")]
    pub y0: Dec,
    #[serde(rename = "Z0")]
    pub z0: Dec,
    #[serde(rename = "Z2")]
    pub z2: Dec,
    pub rho0: Dec,
    pub p_at_rho0: Dec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub settings: BTreeMap<String, String>,
}

impl Provenance {
    pub fn new(settings: BTreeMap<String, String>) -> Self {
        Provenance {
            tool: "spiderweb".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            settings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub schema_version: u32,
    pub params: ParamsDoc,
    pub radii: Vec<Dec>,
    pub residual_norm: Dec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateDoc>,
    pub provenance: Provenance,
}

#[derive(Debug, thiserror::Error)]
pub enum DocError {
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {0}")]
    Schema(u32),
    #[error("params.n is {n} but {got} masses are listed")]
    MassCount { n: usize, got: usize },
    #[error(transparent)]
    Params(#[from] ParamError),
}

impl SolutionDocument {
    pub fn from_configuration(cfg: &Configuration, provenance: Provenance) -> Self {
        let p = &cfg.params;
        SolutionDocument {
            schema_version: SCHEMA_VERSION,
            params: ParamsDoc {
                n: p.n(),
                ell: p.ell(),
                m0: Dec(p.m0()),
                masses: decs(p.masses()),
                lambda: Dec(p.lambda()),
            },
            radii: decs(cfg.radii.as_slice()),
            residual_norm: Dec(cfg.residual_norm),
            certificate: None,
            provenance,
        }
    }

    pub fn set_certificate(&mut self, c: &Certificate) {
        self.certificate = Some(CertificateDoc {
            center: decs(c.center.as_slice()),
            rho_star: Dec(c.rho_star),
            y0: Dec(c.y0),
            z0: Dec(c.z0),
            z2: Dec(c.z2),
            rho0: Dec(c.rho0),
            p_at_rho0: Dec(c.p_at_rho0),
        });
    }

    /// Rebuilds the configuration; massless rings are accepted as a
    /// restricted instance.
    pub fn configuration(&self) -> Result<Configuration, DocError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(DocError::Schema(self.schema_version));
        }
        let p = &self.params;
        if p.masses.len() != p.n {
            return Err(DocError::MassCount {
                n: p.n,
                got: p.masses.len(),
            });
        }
        let params = SpiderwebParams::new_restricted(p.ell, p.m0.0, floats(&p.masses), p.lambda.0)?;
        let radii = RadiiVector::new(floats(&self.radii))?;
        Ok(Configuration::new(params, radii)?)
    }

    pub fn parse(text: &str) -> Result<Self, DocError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn emit(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents serialize");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use spiderweb_core::{build_configuration, certify, ContinuationSettings};

    fn sample() -> SolutionDocument {
        let p = SpiderwebParams::new(5, 0.25, vec![1.0, 1.0 / 3.0, 0.1], -1.0).unwrap();
        let cfg = build_configuration(&p, &ContinuationSettings::default()).unwrap();
        let mut doc = SolutionDocument::from_configuration(&cfg, Provenance::new(BTreeMap::new()));
        doc.set_certificate(&certify(&cfg, None).unwrap());
        doc
    }

    #[test]
    fn round_trip_is_lossless_and_stable() {
        let doc = sample();
        let text = doc.emit();
        let back = SolutionDocument::parse(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.emit(), text);
        let cfg = back.configuration().unwrap();
        assert_eq!(cfg.params.masses()[1], 1.0 / 3.0);
    }

    #[test]
    fn seventeen_digits() {
        let s = serde_json::to_string(&Dec(0.1)).unwrap();
        assert_eq!(s, "\"1.0000000000000001e-1\"");
        let d: Dec = serde_json::from_str("0.5").unwrap();
        assert_eq!(d, Dec(0.5));
    }

    #[test]
    fn rejects_bad_documents() {
        let mut doc = sample();
        doc.radii.reverse();
        assert!(matches!(doc.configuration(), Err(DocError::Params(_))));
        let mut doc = sample();
        doc.params.n = 4;
        assert!(matches!(doc.configuration(), Err(DocError::MassCount { .. })));
        assert!(SolutionDocument::parse("{}").is_err());
    }
}
