//! The binary event algebra `{Ξ, ∅}` over the full hidden-variable domain and
//! the range gate Γ.
//!
//! `Ξ = {1,2,3}³ × [−β, β]⁴ × (−∞, ∞) × [−1, 1]²`. Ranges are compared as
//! descriptors, never sampled; the real line is a tag rather than a pair of
//! floating bounds.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::constants::ModelConstants;
use crate::error::{Error, Result};
use crate::lhv_model::{HiddenSample, LhvModel, Observable, UnitVector3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Range {
    Discrete { members: BTreeSet<u8> },
    Closed { lo: f64, hi: f64 },
    RealLine,
}

impl Range {
    pub fn discrete(members: impl IntoIterator<Item = u8>) -> Self {
        Self::Discrete { members: members.into_iter().collect() }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Self::Closed { lo, hi }
    }

    fn contains_index(&self, n: u8) -> bool {
        match self {
            Self::Discrete { members } => members.contains(&n),
            Self::Closed { lo, hi } => (*lo..=*hi).contains(&f64::from(n)),
            Self::RealLine => true,
        }
    }

    fn contains_real(&self, x: f64) -> bool {
        match self {
            Self::Discrete { .. } => false,
            Self::Closed { lo, hi } => (*lo..=*hi).contains(&x),
            Self::RealLine => x.is_finite(),
        }
    }
}

/// Declared range of each hidden variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub n: Range,
    pub lambda: Range,
    pub chi: Range,
    pub eta: Range,
}

impl DomainSpec {
    pub fn canonical(constants: &ModelConstants) -> Self {
        Self {
            n: Range::discrete([1, 2, 3]),
            lambda: Range::closed(-constants.beta, constants.beta),
            chi: Range::RealLine,
            eta: Range::closed(-1.0, 1.0),
        }
    }
}

/// `δ(X, Y)`: 1 when the descriptors are identical, 0 otherwise.
pub fn set_delta(x: &DomainSpec, y: &DomainSpec) -> u8 {
    u8::from(x == y)
}

/// Γ: the declared ranges are exactly the canonical ones and every coordinate
/// of the sample lies in its range.
pub fn gamma(sample: &HiddenSample, declared: &DomainSpec, constants: &ModelConstants) -> bool {
    if set_delta(declared, &DomainSpec::canonical(constants)) == 0 {
        return false;
    }
    sample.n.iter().all(|&n| declared.n.contains_index(n))
        && sample.lambda.iter().all(|&l| declared.lambda.contains_real(l))
        && declared.chi.contains_real(sample.chi)
        && sample.eta.iter().all(|&e| declared.eta.contains_real(e))
}

/// A member of the algebra, or a product region that may or may not be `Ξ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    Universal,
    Empty,
    Region(DomainSpec),
}

/// The two-event algebra `{Ξ, ∅}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventAlgebra {
    pub universal: DomainSpec,
}

impl EventAlgebra {
    pub fn new(constants: &ModelConstants) -> Self {
        Self { universal: DomainSpec::canonical(constants) }
    }

    /// Map an event onto `Ξ` or `∅`; anything else is outside the algebra.
    pub fn resolve(&self, event: &Event) -> Result<Event> {
        match event {
            Event::Universal | Event::Empty => Ok(event.clone()),
            Event::Region(d) if set_delta(d, &self.universal) == 1 => Ok(Event::Universal),
            Event::Region(d) => Err(Error::domain(format!("region {d:?} is not an event of {{Xi, empty}}"))),
        }
    }

    pub fn complement(&self, event: &Event) -> Result<Event> {
        Ok(match self.resolve(event)? {
            Event::Universal => Event::Empty,
            _ => Event::Universal,
        })
    }

    pub fn union(&self, x: &Event, y: &Event) -> Result<Event> {
        Ok(match (self.resolve(x)?, self.resolve(y)?) {
            (Event::Empty, Event::Empty) => Event::Empty,
            _ => Event::Universal,
        })
    }

    pub fn intersection(&self, x: &Event, y: &Event) -> Result<Event> {
        Ok(match (self.resolve(x)?, self.resolve(y)?) {
            (Event::Universal, Event::Universal) => Event::Universal,
            _ => Event::Empty,
        })
    }

    /// `δ(Q, Ξ)` for a resolved event.
    fn delta_universal(&self, event: &Event) -> Result<f64> {
        Ok(match self.resolve(event)? {
            Event::Universal => f64::from(set_delta(&self.universal, &self.universal)),
            _ => 0.0,
        })
    }
}

/// `P_ρ[Q] = ⟨δ(Q, Ξ)·ρ⟩`, with `⟨ρ⟩` taken from the moment engine.
pub fn probability(model: &LhvModel, event: &Event) -> Result<f64> {
    let algebra = EventAlgebra::new(&model.constants);
    let delta = algebra.delta_universal(event)?;
    // ⟨ρ⟩ does not depend on the settings
    let z = UnitVector3::z();
    let norm = model.moment(Observable::Norm, &z, &z)?;
    Ok(delta * norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> ModelConstants {
        ModelConstants::canonical()
    }

    fn valid_sample() -> HiddenSample {
        HiddenSample { n: [1, 2, 3], lambda: [0.1, -0.5, 1.5, 0.7], chi: -3.0, eta: [0.9, -1.0] }
    }

    #[test]
    fn delta_examples() {
        let c = DomainSpec::canonical(&k());
        assert_eq!(set_delta(&c, &c), 1);
        let narrow_lambda = DomainSpec { lambda: Range::closed(-1.0, 1.0), ..c.clone() };
        assert_eq!(set_delta(&c, &narrow_lambda), 0);
        let short_n = DomainSpec { n: Range::discrete([1, 2]), ..c.clone() };
        assert_eq!(set_delta(&c, &short_n), 0);
    }

    #[test]
    fn gamma_examples() {
        let c = DomainSpec::canonical(&k());
        assert!(gamma(&valid_sample(), &c, &k()));
        let mut far = valid_sample();
        far.lambda[0] = 2.0 * k().beta;
        assert!(!gamma(&far, &c, &k()));
        let half_eta = DomainSpec { eta: Range::closed(0.0, 1.0), ..c };
        assert!(!gamma(&valid_sample(), &half_eta, &k()));
    }

    #[test]
    fn gamma_rejects_bounded_chi_descriptor() {
        let c = DomainSpec::canonical(&k());
        let bounded = DomainSpec { chi: Range::closed(-1e300, 1e300), ..c };
        assert!(!gamma(&valid_sample(), &bounded, &k()));
    }

    #[test]
    fn probabilities() {
        let m = LhvModel::default();
        let p_all = probability(&m, &Event::Universal).unwrap();
        let p_none = probability(&m, &Event::Empty).unwrap();
        assert!((p_all - 1.0).abs() < 1e-12);
        assert_eq!(p_none, 0.0);
        assert!((p_all + p_none - 1.0).abs() < 1e-12);
        let region = Event::Region(DomainSpec::canonical(&k()));
        assert_eq!(probability(&m, &region).unwrap(), p_all);
    }

    #[test]
    fn region_outside_algebra_is_rejected() {
        let m = LhvModel::default();
        let c = DomainSpec::canonical(&k());
        let sub = Event::Region(DomainSpec { eta: Range::closed(0.0, 1.0), ..c });
        assert!(matches!(probability(&m, &sub), Err(Error::Domain(_))));
    }

    #[test]
    fn algebra_is_closed() {
        let alg = EventAlgebra::new(&k());
        let events = [Event::Universal, Event::Empty];
        for x in &events {
            let cx = alg.complement(x).unwrap();
            assert_ne!(&cx, x);
            assert_eq!(alg.union(x, &cx).unwrap(), Event::Universal);
            assert_eq!(alg.intersection(x, &cx).unwrap(), Event::Empty);
            for y in &events {
                assert!(events.contains(&alg.union(x, y).unwrap()));
            }
        }
    }

    #[test]
    fn domain_spec_json() {
        let json = serde_json::to_value(DomainSpec::canonical(&k())).unwrap();
        assert_eq!(json["chi"]["kind"], "real_line");
        assert_eq!(json["n"]["members"], serde_json::json!([1, 2, 3]));
    }
}
