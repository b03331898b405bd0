//! JSON documents: the polynomial term list and the instance file.
//!
//! A polynomial is a list of `{"coeff": c, "exps": {"<var>": e, ...}}` terms
//! in canonical monomial order. An instance document carries the modulus,
//! `H`, the polynomial, the claimed sum `v` and an optional schedule; keys are
//! emitted sorted so output is byte-for-byte reproducible.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::field::{Fe, Modulus};
use crate::mpoly::{Monomial, MultiPoly, Var};
use crate::protocol::SumcheckInstance;
use crate::structure::MPolyStructure;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub coeff: i64,
    #[serde(default)]
    pub exps: BTreeMap<Var, u32>,
}

pub fn poly_to_terms(p: &MultiPoly) -> Vec<TermDoc> {
    p.terms().map(|(m, c)| TermDoc { coeff: c.value() as i64, exps: m.exponents().collect() }).collect()
}

/// Builds a canonical polynomial; coefficients are reduced mod `m`, zero
/// exponents dropped and repeated monomials merged.
pub fn poly_from_terms(m: Modulus, terms: &[TermDoc]) -> Result<MultiPoly> {
    MultiPoly::from_terms(
        m,
        terms.iter().map(|t| (Monomial::from_exponents(t.exps.iter().map(|(v, e)| (*v, *e))), m.elem_signed(t.coeff))),
    )
}

pub fn poly_to_json(p: &MultiPoly) -> serde_json::Value {
    serde_json::to_value(poly_to_terms(p)).expect("term list serializes")
}

impl Serialize for MultiPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        poly_to_terms(self).serialize(s)
    }
}

/// The on-disk instance format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    #[serde(rename = "H")]
    pub h: Vec<i64>,
    pub modulus: u64,
    pub polynomial: Vec<TermDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<Var>>,
    pub v: i64,
}

/// A parsed, validated instance document.
#[derive(Clone, Debug)]
pub struct ParsedInstance {
    pub structure: MPolyStructure,
    pub instance: SumcheckInstance<MPolyStructure>,
    pub schedule: Option<Vec<Var>>,
}

impl ParsedInstance {
    /// The explicit schedule, or the ascending variables of `p`.
    pub fn schedule_or_default(&self) -> Vec<Var> {
        match &self.schedule {
            Some(s) => s.clone(),
            None => self.instance.p.vars().into_iter().collect(),
        }
    }
}

impl InstanceDocument {
    /// Parses JSON text; syntax errors carry line and column.
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Document(format!("{} at line {} column {}", strip_position(&e), e.line(), e.column())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    pub fn to_instance(&self) -> Result<ParsedInstance> {
        let m = Modulus::new(self.modulus)?;
        if self.h.is_empty() {
            return Err(Error::EmptyEvaluationSet);
        }
        let mut h: Vec<Fe> = Vec::with_capacity(self.h.len());
        for &x in &self.h {
            let e = m.elem_signed(x);
            if h.contains(&e) {
                return Err(Error::DuplicateEvaluationPoint(e.value()));
            }
            h.push(e);
        }
        if let Some(sched) = &self.schedule {
            for (i, v) in sched.iter().enumerate() {
                if sched[..i].contains(v) {
                    return Err(Error::DuplicateScheduleVariable(*v));
                }
            }
        }
        let s = MPolyStructure::new(m);
        let p = poly_from_terms(m, &self.polynomial)?;
        let instance = SumcheckInstance::new(&s, h, p, m.elem_signed(self.v))?;
        Ok(ParsedInstance { structure: s, instance, schedule: self.schedule.clone() })
    }

    pub fn from_instance(inst: &SumcheckInstance<MPolyStructure>, schedule: Option<Vec<Var>>) -> Self {
        InstanceDocument {
            h: inst.h.iter().map(|x| x.value() as i64).collect(),
            modulus: inst.p.modulus().value(),
            polynomial: poly_to_terms(&inst.p),
            schedule,
            v: inst.v.value() as i64,
        }
    }
}

// serde_json appends " at line L column C" itself; keep one copy in our format
fn strip_position(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{
        "H": [0, 1],
        "modulus": 5,
        "polynomial": [{"coeff": 1, "exps": {"1": 1}}],
        "v": 2
    }"#;

    #[test]
    fn parses_example() {
        let parsed = InstanceDocument::parse(EXAMPLE).unwrap().to_instance().unwrap();
        let m = Modulus::new(5).unwrap();
        assert_eq!(parsed.instance.p, MultiPoly::var(m, 1));
        assert_eq!(parsed.instance.v, m.elem(2));
        assert_eq!(parsed.schedule_or_default(), vec![1]);
    }

    #[test]
    fn empty_h_is_rejected() {
        let doc = InstanceDocument::parse(r#"{"H": [], "modulus": 5, "polynomial": [], "v": 0}"#).unwrap();
        let err = doc.to_instance().unwrap_err();
        assert_eq!(err.to_string(), "H must be nonempty");
    }

    #[test]
    fn syntax_errors_have_positions() {
        let err = InstanceDocument::parse("{\n  \"H\": [0,\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("column"), "{msg}");
    }

    #[test]
    fn validation_errors() {
        let bad = |s: &str| InstanceDocument::parse(s).and_then(|d| d.to_instance()).unwrap_err();
        assert_eq!(bad(r#"{"H":[0],"modulus":6,"polynomial":[],"v":0}"#), Error::NotPrime(6));
        assert_eq!(bad(r#"{"H":[0,5],"modulus":5,"polynomial":[],"v":0}"#), Error::DuplicateEvaluationPoint(0));
        assert_eq!(
            bad(r#"{"H":[0],"modulus":5,"polynomial":[],"schedule":[1,1],"v":0}"#),
            Error::DuplicateScheduleVariable(1)
        );
        assert!(matches!(bad(r#"{"H":[0],"modulus":5,"polynomial":[],"v":0,"x":1}"#), Error::Document(_)));
    }

    #[test]
    fn negative_and_repeated_terms_are_normalized() {
        let doc = InstanceDocument::parse(
            r#"{"H":[-1],"modulus":7,"polynomial":[
                {"coeff":-1,"exps":{"2":1}},{"coeff":3,"exps":{"2":1,"1":0}},{"coeff":7,"exps":{}}],"v":-3}"#,
        )
        .unwrap();
        let parsed = doc.to_instance().unwrap();
        let m = Modulus::new(7).unwrap();
        assert_eq!(parsed.instance.h, vec![m.elem(6)]);
        assert_eq!(parsed.instance.v, m.elem(4));
        assert_eq!(parsed.instance.p, MultiPoly::monomial(m.elem(2), Monomial::var(2)));
    }

    #[test]
    fn canonical_round_trip() {
        let m = Modulus::new(101).unwrap();
        let p = MultiPoly::from_terms(
            m,
            [
                (Monomial::from_exponents([(1, 2), (2, 1), (3, 1)]), m.elem(3)),
                (Monomial::from_exponents([(1, 1), (3, 1)]), m.elem(2)),
                (Monomial::from_exponents([(3, 2)]), m.elem(1)),
            ],
        )
        .unwrap();
        let inst = SumcheckInstance::new(&MPolyStructure::new(m), vec![m.zero(), m.one()], p, m.elem(9)).unwrap();
        let doc = InstanceDocument::from_instance(&inst, Some(vec![3, 1, 2]));
        let text = doc.to_json();
        let back = InstanceDocument::parse(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_instance().unwrap().instance, inst);
        // keys sorted, monomials ascending in canonical order
        let h = text.find("\"H\"").unwrap();
        let modulus = text.find("\"modulus\"").unwrap();
        let poly = text.find("\"polynomial\"").unwrap();
        let sched = text.find("\"schedule\"").unwrap();
        let v = text.find("\"v\"").unwrap();
        assert!(h < modulus && modulus < poly && poly < sched && sched < v);
        let coeffs: Vec<i64> = doc.polynomial.iter().map(|t| t.coeff).collect();
        assert_eq!(coeffs, vec![1, 2, 3]);
    }
}
