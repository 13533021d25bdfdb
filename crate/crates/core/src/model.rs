//! Solver-agnostic mixed-integer linear model (minimization).

use crate::error::FormulationError;

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
    /// Branching preference; higher classes are branched first.
    pub priority: i32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// Amount by which `values` violate the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MilpModel {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Objective coefficient per variable.
    pub objective: Vec<f64>,
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Self::default() }
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, integer: bool, cost: f64) -> usize {
        self.variables.push(Variable { name: name.into(), lower, upper, integer, priority: 0 });
        self.objective.push(cost);
        self.variables.len() - 1
    }

    pub fn add_binary(&mut self, name: impl Into<String>, cost: f64) -> usize {
        self.add_var(name, 0.0, 1.0, true, cost)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> usize {
        self.add_var(name, lower, upper, false, cost)
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> usize {
        self.constraints.push(Constraint { name: name.into(), coeffs, relation, rhs });
        self.constraints.len() - 1
    }

    pub fn integer_vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.variables.iter().enumerate().filter(|(_, v)| v.integer).map(|(j, _)| j)
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().zip(values).map(|(c, x)| c * x).sum()
    }

    /// Largest bound or row violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let bounds = self
            .variables
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0))
            .fold(0.0, f64::max);
        self.constraints.iter().map(|c| c.violation(values)).fold(bounds, f64::max)
    }

    /// Same model with every integrality flag cleared.
    pub fn relaxed(&self) -> MilpModel {
        let mut m = self.clone();
        m.variables.iter_mut().for_each(|v| v.integer = false);
        m
    }

    pub fn validate(&self) -> Result<(), FormulationError> {
        let n = self.variables.len();
        if self.objective.len() != n {
            return Err(FormulationError::Model(format!("objective has {} entries for {n} variables", self.objective.len())));
        }
        for v in &self.variables {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(FormulationError::Model(format!("variable {} has bounds [{}, {}]", v.name, v.lower, v.upper)));
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(FormulationError::Model(format!("variable {} has an empty domain", v.name)));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(FormulationError::Model("objective coefficients must be finite".into()));
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(FormulationError::Model(format!("row {} has a non-finite right-hand side", c.name)));
            }
            for &(j, a) in &c.coeffs {
                if j >= n {
                    return Err(FormulationError::Model(format!("row {} references undeclared column {j}", c.name)));
                }
                if !a.is_finite() {
                    return Err(FormulationError::Model(format!("row {} has a non-finite coefficient", c.name)));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_catches_bad_references_and_bounds() {
        let mut m = MilpModel::new("t");
        let x = m.add_binary("x", 1.0);
        m.add_constraint("r", vec![(x, 1.0)], Relation::Le, 1.0);
        m.validate().unwrap();
        m.add_constraint("bad", vec![(7, 1.0)], Relation::Le, 1.0);
        assert!(m.validate().is_err());

        let mut m = MilpModel::new("t");
        m.add_continuous("y", 2.0, 1.0, 0.0);
        assert!(m.validate().is_err());
    }

    #[test]
    fn violation_by_relation() {
        let c = Constraint { name: "c".into(), coeffs: vec![(0, 2.0)], relation: Relation::Eq, rhs: 3.0 };
        assert_eq!(c.violation(&[1.0]), 1.0);
        let c = Constraint { relation: Relation::Ge, ..c };
        assert_eq!(c.violation(&[2.0]), 0.0);
    }
}
