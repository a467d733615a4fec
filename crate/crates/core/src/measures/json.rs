//! JSON documents for measures.
//!
//! Log-masses travel as decimal strings with 17 significant digits so that a
//! round trip through a file reproduces every `f64` bit for bit.

use serde::{Deserialize, Serialize};

use super::atomic::{Atom, FiniteAtomicLaw};
use super::lattice_ball::LatticeBallLaw;
use super::pmf::{Pmf1D, TailPolicy};
use super::product::ProductLaw;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Any of the supported measures.
#[derive(Clone, Debug, PartialEq)]
pub enum Measure<T> {
    Pmf1D(Pmf1D<T>),
    Product(ProductLaw<T>),
    FiniteAtomic(FiniteAtomicLaw<T>),
    LatticeBall(LatticeBallLaw),
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct PmfDoc {
    k_min: i64,
    log_mass: Vec<String>,
    #[serde(default)]
    left_unbounded: bool,
    #[serde(default)]
    right_unbounded: bool,
    #[serde(default = "default_eps")]
    epsilon_tail: f64,
    #[serde(default = "default_cap")]
    hard_cap: usize,
    #[serde(default)]
    truncated_mass: f64,
}

fn default_eps() -> f64 {
    TailPolicy::default().epsilon_tail
}

fn default_cap() -> usize {
    TailPolicy::default().hard_cap
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct AtomDoc {
    point: Vec<f64>,
    log_mass: String,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum Doc {
    #[serde(rename = "pmf1d")]
    Pmf1D(PmfDoc),
    Product {
        factors: Vec<PmfDoc>,
    },
    FiniteAtomic {
        n: usize,
        atoms: Vec<AtomDoc>,
        #[serde(default)]
        full_dimensional: bool,
    },
    LatticeBall {
        n: usize,
        r: f64,
        p: f64,
    },
}

/// 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_num(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::validation(format!("bad number {s:?}: {e}")))
}

fn pmf_to_doc<T: Real>(p: &Pmf1D<T>) -> PmfDoc {
    let policy = p.tail_policy();
    PmfDoc {
        k_min: p.k_min(),
        log_mass: p.log_masses().iter().map(|g| fmt17(g.as_f64())).collect(),
        left_unbounded: p.left_unbounded(),
        right_unbounded: p.right_unbounded(),
        epsilon_tail: policy.epsilon_tail,
        hard_cap: policy.hard_cap,
        truncated_mass: p.truncated_mass(),
    }
}

fn pmf_from_doc<T: Real>(d: PmfDoc) -> Result<Pmf1D<T>> {
    let g = d
        .log_mass
        .iter()
        .map(|s| parse_num(s))
        .collect::<Result<Vec<f64>>>()?;
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("log-masses must be finite"));
    }
    let total: f64 = g.iter().map(|v| (-v).exp()).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::validation(format!(
            "masses sum to {total}, expected 1"
        )));
    }
    if !(d.epsilon_tail > 0.0 && d.epsilon_tail < 1.0) || d.hard_cap == 0 {
        return Err(Error::validation("tail policy out of range"));
    }
    // already normalized to within the tolerance; keep the values verbatim
    Ok(Pmf1D::assemble(
        d.k_min,
        g.into_iter().map(T::lit).collect(),
        d.left_unbounded,
        d.right_unbounded,
        TailPolicy {
            epsilon_tail: d.epsilon_tail,
            hard_cap: d.hard_cap,
        },
        d.truncated_mass,
        false,
    ))
}

impl<T: Real> Serialize for Measure<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}

impl<'de, T: Real> Deserialize<'de> for Measure<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = Doc::deserialize(d)?;
        Measure::from_doc(doc).map_err(serde::de::Error::custom)
    }
}

impl<T: Real> Measure<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc())?)
    }

    fn to_doc(&self) -> Doc {
        match self {
            Measure::Pmf1D(p) => Doc::Pmf1D(pmf_to_doc(p)),
            Measure::Product(l) => Doc::Product {
                factors: l.factors().iter().map(pmf_to_doc).collect(),
            },
            Measure::FiniteAtomic(l) => Doc::FiniteAtomic {
                n: l.n(),
                atoms: l
                    .atoms()
                    .iter()
                    .map(|a| AtomDoc {
                        point: a.point.iter().map(|x| x.as_f64()).collect(),
                        log_mass: fmt17(-a.prob.as_f64().ln()),
                    })
                    .collect(),
                full_dimensional: l.is_full_dimensional(),
            },
            Measure::LatticeBall(l) => Doc::LatticeBall {
                n: l.n(),
                r: l.r(),
                p: l.p(),
            },
        }
    }

    /// Parses and re-validates every invariant.
    pub fn from_json(s: &str) -> Result<Self> {
        let doc: Doc = serde_json::from_str(s)
            .map_err(|e| Error::validation(format!("measure document: {e}")))?;
        Self::from_doc(doc)
    }

    /// Same as [`Measure::from_json`] for an already parsed value.
    pub fn from_value(v: serde_json::Value) -> Result<Self> {
        let doc: Doc = serde_json::from_value(v)
            .map_err(|e| Error::validation(format!("measure document: {e}")))?;
        Self::from_doc(doc)
    }

    fn from_doc(doc: Doc) -> Result<Self> {
        Ok(match doc {
            Doc::Pmf1D(d) => Measure::Pmf1D(pmf_from_doc(d)?),
            Doc::Product { factors } => Measure::Product(ProductLaw::new(
                factors
                    .into_iter()
                    .map(pmf_from_doc)
                    .collect::<Result<_>>()?,
            )?),
            Doc::FiniteAtomic {
                n,
                atoms,
                full_dimensional,
            } => {
                let atoms = atoms
                    .into_iter()
                    .map(|a| {
                        let g = parse_num(&a.log_mass)?;
                        Ok(Atom {
                            point: a.point.into_iter().map(T::lit).collect(),
                            prob: T::lit((-g).exp()),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let law = FiniteAtomicLaw::new(atoms)?;
                if law.n() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: law.n(),
                    });
                }
                Measure::FiniteAtomic(if full_dimensional {
                    law.require_full_dimensional()?
                } else {
                    law
                })
            }
            Doc::LatticeBall { n, r, p } => Measure::LatticeBall(LatticeBallLaw::new(n, r, p)?),
        })
    }

    pub fn dimension(&self) -> usize {
        match self {
            Measure::Pmf1D(_) => 1,
            Measure::Product(l) => l.n(),
            Measure::FiniteAtomic(l) => l.n(),
            Measure::LatticeBall(l) => l.n(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{make_bernoulli, make_symmetric_geometric};

    #[test]
    fn pmf_round_trip_is_exact() {
        let g = make_symmetric_geometric(0.7_f64, TailPolicy::default()).unwrap();
        let m = Measure::Pmf1D(g.clone());
        let back: Measure<f64> = Measure::from_json(&m.to_json().unwrap()).unwrap();
        let Measure::Pmf1D(h) = back else { panic!() };
        assert_eq!(h.support(), g.support());
        assert!(h.right_unbounded() && h.is_symmetric());
        for k in g.support() {
            assert!((h.g(k) - g.g(k)).abs() <= 1e-15 * g.g(k).abs().max(1.0));
        }
    }

    #[test]
    fn product_round_trip() {
        let l = ProductLaw::new(vec![
            make_bernoulli(0.3_f64).unwrap(),
            make_bernoulli(0.6).unwrap(),
        ])
        .unwrap();
        let s = Measure::Product(l.clone()).to_json().unwrap();
        assert!(s.contains("\"type\": \"product\""));
        let Measure::Product(back) = Measure::<f64>::from_json(&s).unwrap() else {
            panic!()
        };
        assert_eq!(back.n(), 2);
        assert!((back.mass(&[1, 1]).unwrap() - 0.18).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_documents() {
        let bad = r#"{"type":"pmf1d","k_min":0,"log_mass":["0.1","0.1"]}"#;
        assert!(matches!(
            Measure::<f64>::from_json(bad),
            Err(Error::Validation(_))
        ));
        let unknown = r#"{"type":"sphere","n":3}"#;
        assert!(Measure::<f64>::from_json(unknown).is_err());
        let ball = r#"{"type":"lattice_ball","n":3,"r":0.5,"p":1}"#;
        assert!(Measure::<f64>::from_json(ball).is_err());
    }

    #[test]
    fn atomic_round_trip() {
        let law = FiniteAtomicLaw::uniform(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]])
            .unwrap();
        let s = Measure::FiniteAtomic(law).to_json().unwrap();
        let Measure::FiniteAtomic(back) = Measure::<f64>::from_json(&s).unwrap() else {
            panic!()
        };
        assert_eq!(back.len(), 3);
        assert!((back.mass_of(&[1.0, 0.0]) - 1.0 / 3.0).abs() < 1e-15);
    }
}
