//! Named parameter vectors with a natural/working-scale bijection.

use crate::error::{Error, Result};

/// Domain of a single parameter component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Unconstrained,
    /// Stored on the natural scale, mapped to its log for the working scale.
    StrictlyPositive,
}

/// A named real parameter with its domain flag.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamDef {
    pub name: &'static str,
    pub domain: Domain,
}

impl ParamDef {
    pub const fn positive(name: &'static str) -> Self {
        ParamDef {
            name,
            domain: Domain::StrictlyPositive,
        }
    }

    pub const fn unconstrained(name: &'static str) -> Self {
        ParamDef {
            name,
            domain: Domain::Unconstrained,
        }
    }
}

/// Parameter values on the natural scale plus the bijection to an
/// unconstrained working scale (log for positive components).
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterVector {
    defs: Vec<ParamDef>,
    values: Vec<f64>,
}

impl ParameterVector {
    pub fn new(defs: Vec<ParamDef>, values: Vec<f64>) -> Result<Self> {
        if defs.len() != values.len() {
            return Err(Error::DimensionMismatch {
                what: "parameter vector",
                expected: defs.len(),
                got: values.len(),
            });
        }
        let pv = ParameterVector { defs, values };
        pv.validate()?;
        Ok(pv)
    }

    fn validate(&self) -> Result<()> {
        for (def, &v) in self.defs.iter().zip(&self.values) {
            if !v.is_finite() {
                return Err(Error::invalid("parameter", format!("{} = {v} is not finite", def.name)));
            }
            if def.domain == Domain::StrictlyPositive && v <= 0.0 {
                return Err(Error::invalid(
                    "parameter",
                    format!("{} must be > 0 on the natural scale, got {v}", def.name),
                ));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn defs(&self) -> &[ParamDef] {
        &self.defs
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.defs.iter().map(|d| d.name).collect()
    }

    /// Natural-scale values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn by_name(&self, name: &str) -> Option<f64> {
        self.defs
            .iter()
            .position(|d| d.name == name)
            .map(|i| self.values[i])
    }

    /// Replace one component (validates the domain).
    pub fn with_value(&self, index: usize, value: f64) -> Result<Self> {
        let mut values = self.values.clone();
        values[index] = value;
        ParameterVector::new(self.defs.clone(), values)
    }

    /// Map to the unconstrained working scale (log for positive components).
    pub fn to_working(&self) -> Vec<f64> {
        self.defs
            .iter()
            .zip(&self.values)
            .map(|(d, &v)| match d.domain {
                Domain::Unconstrained => v,
                Domain::StrictlyPositive => v.ln(),
            })
            .collect()
    }

    /// Rebuild from working-scale values using this vector's definitions.
    pub fn from_working(&self, working: &[f64]) -> Result<Self> {
        if working.len() != self.defs.len() {
            return Err(Error::DimensionMismatch {
                what: "working-scale parameter vector",
                expected: self.defs.len(),
                got: working.len(),
            });
        }
        let values = self
            .defs
            .iter()
            .zip(working)
            .map(|(d, &w)| match d.domain {
                Domain::Unconstrained => w,
                Domain::StrictlyPositive => w.exp(),
            })
            .collect();
        ParameterVector::new(self.defs.clone(), values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn rejects_nonpositive_flagged_components() {
        let defs = vec![ParamDef::positive("sigma")];
        assert!(ParameterVector::new(defs.clone(), vec![0.0]).is_err());
        assert!(ParameterVector::new(defs, vec![-1.0]).is_err());
    }

    #[test]
    fn round_trip_is_identity_over_random_positive_values() {
        // Property: natural -> working -> natural within 1 ulp-scale tolerance.
        let mut rng = crate::rng::rng_from_seed(7);
        for _ in 0..500 {
            let v: f64 = 10f64.powf(rng.random_range(-8.0..8.0));
            let a: f64 = rng.random_range(-50.0..50.0);
            let pv = ParameterVector::new(
                vec![ParamDef::positive("p"), ParamDef::unconstrained("a")],
                vec![v, a],
            )
            .unwrap();
            let back = pv.from_working(&pv.to_working()).unwrap();
            let rel = (back.get(0) - v).abs() / v;
            assert!(rel <= 16.0 * f64::EPSILON, "rel err {rel} for {v}");
            assert_eq!(back.get(1), a);
        }
    }
}
