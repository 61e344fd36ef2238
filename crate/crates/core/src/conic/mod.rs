//! Solver-neutral second-order cone programs.
//!
//! A [`ConicProgram`] maximizes a linear objective over real variables subject
//! to box bounds, linear rows (`≤` or `=`) and second-order cones
//! `‖[e_1(x), …, e_k(x)]‖₂ ≤ e_0(x)` whose entries are affine expressions.
//! Dense linear forms that recur across many rows (such as the real part of a
//! channel/beamformer inner product) can be declared once as *shared
//! expressions* and referenced by index; backends are free to lift them into
//! auxiliary variables, but they never count as program variables.
//!
//! Complex quantities are realified before they reach this module. The
//! repo-wide convention for `a^H x` with `a = a_r + j a_i`, `x = x_r + j x_i`:
//! `Re{a^H x} = a_rᵀ x_r + a_iᵀ x_i` and `Im{a^H x} = a_rᵀ x_i − a_iᵀ x_r`.

mod backend;

pub use backend::solve;

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::{Error, Result};

/// Affine expression `Σ c_i x_i + Σ d_k s_k(x) + constant` where `s_k` are shared expressions.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinExpr {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<(usize, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shared: Vec<(usize, f64)>,
    #[serde(default)]
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(i: usize) -> Self {
        Self { terms: vec![(i, 1.0)], ..Self::default() }
    }

    pub fn constant(c: f64) -> Self {
        Self { constant: c, ..Self::default() }
    }

    pub fn shared(k: usize, coef: f64) -> Self {
        Self { shared: vec![(k, coef)], ..Self::default() }
    }

    pub fn term(mut self, i: usize, c: f64) -> Self {
        self.terms.push((i, c));
        self
    }

    pub fn with_shared(mut self, k: usize, c: f64) -> Self {
        self.shared.push((k, c));
        self
    }

    pub fn plus(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.terms.iter_mut().for_each(|t| t.1 *= s);
        self.shared.iter_mut().for_each(|t| t.1 *= s);
        self.constant *= s;
        self
    }

    /// Evaluates the expression given already-evaluated shared expressions.
    pub fn eval_with(&self, x: &[f64], shared: &[f64]) -> f64 {
        self.constant
            + self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>()
            + self.shared.iter().map(|&(k, c)| c * shared[k]).sum::<f64>()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
}

/// `expr (sense) rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub expr: LinExpr,
    pub sense: Sense,
    pub rhs: f64,
}

/// `‖body‖₂ ≤ head`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub head: LinExpr,
    pub body: Vec<LinExpr>,
}

mod bound_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| if x.is_finite() { Some(*x) } else { None }))
    }

    pub fn lower<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let v: Vec<Option<f64>> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|x| x.unwrap_or(f64::NEG_INFINITY)).collect())
    }

    pub fn upper<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let v: Vec<Option<f64>> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|x| x.unwrap_or(f64::INFINITY)).collect())
    }
}

/// A validated maximization SOCP. Infinite bounds serialize as `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConicProgram {
    pub num_vars: usize,
    pub labels: Vec<String>,
    #[serde(serialize_with = "bound_serde::serialize", deserialize_with = "bound_serde::lower")]
    pub lower: Vec<f64>,
    #[serde(serialize_with = "bound_serde::serialize", deserialize_with = "bound_serde::upper")]
    pub upper: Vec<f64>,
    /// Dense objective coefficients (maximized).
    pub objective: Vec<f64>,
    pub objective_offset: f64,
    /// Shared linear forms (no constant term) referenced from rows and cones.
    pub expressions: Vec<Vec<(usize, f64)>>,
    pub constraints: Vec<LinearConstraint>,
    pub cones: Vec<Cone>,
}

/// Worst violation per constraint kind, in the program's own units.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub bounds: f64,
    pub linear: f64,
    pub cones: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.bounds.max(self.linear).max(self.cones)
    }
}

impl ConicProgram {
    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    pub fn eval_shared(&self, x: &[f64]) -> Vec<f64> {
        self.expressions.iter().map(|e| e.iter().map(|&(i, c)| c * x[i]).sum()).collect()
    }

    pub fn eval(&self, e: &LinExpr, x: &[f64]) -> f64 {
        e.eval_with(x, &self.eval_shared(x))
    }

    /// Recomputes every constraint violation at `x` (0 means satisfied).
    pub fn residuals(&self, x: &[f64]) -> Residuals {
        let s = self.eval_shared(x);
        let mut r = Residuals::default();
        for i in 0..self.num_vars {
            r.bounds = r.bounds.max(self.lower[i] - x[i]).max(x[i] - self.upper[i]);
        }
        for c in &self.constraints {
            let v = c.expr.eval_with(x, &s) - c.rhs;
            let viol = match c.sense {
                Sense::Le => v.max(0.0),
                Sense::Eq => v.abs(),
            };
            r.linear = r.linear.max(viol);
        }
        for k in &self.cones {
            let head = k.head.eval_with(x, &s);
            let norm = k.body.iter().map(|e| e.eval_with(x, &s).powi(2)).sum::<f64>().sqrt();
            r.cones = r.cones.max(norm - head);
        }
        r
    }

    /// Checks index ranges, dimensions and finiteness.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars;
        for (name, len) in [
            ("labels", self.labels.len()),
            ("lower", self.lower.len()),
            ("upper", self.upper.len()),
            ("objective", self.objective.len()),
        ] {
            if len != n {
                return Err(Error::DimensionMismatch(format!("{name} has {len} entries for {n} variables")));
            }
        }
        let mut seen = HashMap::new();
        for (i, l) in self.labels.iter().enumerate() {
            if let Some(j) = seen.insert(l.as_str(), i) {
                return Err(Error::LabelCollision(format!("'{l}' used by variables {j} and {i}")));
            }
        }
        for i in 0..n {
            if self.lower[i].is_nan() || self.upper[i].is_nan() || self.lower[i] > self.upper[i] {
                return Err(Error::InvalidConfig(format!("bad bounds on {}", self.labels[i])));
            }
        }
        if !self.objective.iter().all(|c| c.is_finite()) || !self.objective_offset.is_finite() {
            return Err(Error::NonFinite("objective".into()));
        }
        for (k, e) in self.expressions.iter().enumerate() {
            check_terms(e, n, &format!("shared expression {k}"))?;
        }
        let m = self.expressions.len();
        let check_expr = |e: &LinExpr, what: &str| -> Result<()> {
            check_terms(&e.terms, n, what)?;
            for &(k, c) in &e.shared {
                if k >= m {
                    return Err(Error::IndexOutOfRange(format!("{what}: shared expression {k} of {m}")));
                }
                if !c.is_finite() {
                    return Err(Error::NonFinite(what.to_string()));
                }
            }
            if !e.constant.is_finite() {
                return Err(Error::NonFinite(what.to_string()));
            }
            Ok(())
        };
        for (r, c) in self.constraints.iter().enumerate() {
            check_expr(&c.expr, &format!("row {r}"))?;
            if !c.rhs.is_finite() {
                return Err(Error::NonFinite(format!("row {r} rhs")));
            }
        }
        for (q, k) in self.cones.iter().enumerate() {
            if k.body.is_empty() {
                return Err(Error::DimensionMismatch(format!("cone {q} has an empty body")));
            }
            check_expr(&k.head, &format!("cone {q} head"))?;
            for e in &k.body {
                check_expr(e, &format!("cone {q} body"))?;
            }
        }
        Ok(())
    }

    /// Copy of the program with variable `i` pinned to `value`.
    pub fn pinned(&self, pins: &[(usize, f64)]) -> Self {
        let mut p = self.clone();
        for &(i, v) in pins {
            p.lower[i] = v;
            p.upper[i] = v;
        }
        p
    }
}

fn check_terms(terms: &[(usize, f64)], n: usize, what: &str) -> Result<()> {
    for &(i, c) in terms {
        if i >= n {
            return Err(Error::IndexOutOfRange(format!("{what}: variable {i} of {n}")));
        }
        if !c.is_finite() {
            return Err(Error::NonFinite(what.to_string()));
        }
    }
    Ok(())
}

/// Incremental construction of a [`ConicProgram`]; errors surface in [`ProgramBuilder::build`].
#[derive(Default)]
pub struct ProgramBuilder {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    objective: Vec<(usize, f64)>,
    offset: f64,
    expressions: Vec<Vec<(usize, f64)>>,
    constraints: Vec<LinearConstraint>,
    cones: Vec<Cone>,
    error: Option<Error>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.labels.len()
    }

    pub fn add_var(&mut self, label: impl Into<String>, lower: f64, upper: f64) -> usize {
        let label = label.into();
        let i = self.labels.len();
        if self.index.insert(label.clone(), i).is_some() && self.error.is_none() {
            self.error = Some(Error::LabelCollision(label.clone()));
        }
        self.labels.push(label);
        self.lower.push(lower);
        self.upper.push(upper);
        i
    }

    pub fn free_var(&mut self, label: impl Into<String>) -> usize {
        self.add_var(label, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn set_bounds(&mut self, i: usize, lower: f64, upper: f64) {
        self.lower[i] = lower;
        self.upper[i] = upper;
    }

    pub fn add_objective(&mut self, i: usize, c: f64) {
        self.objective.push((i, c));
    }

    pub fn add_objective_offset(&mut self, c: f64) {
        self.offset += c;
    }

    /// Declares a shared linear form and returns its index.
    pub fn add_expression(&mut self, terms: Vec<(usize, f64)>) -> usize {
        self.expressions.push(terms);
        self.expressions.len() - 1
    }

    pub fn add_le(&mut self, expr: LinExpr, rhs: f64) {
        self.constraints.push(LinearConstraint { expr, sense: Sense::Le, rhs });
    }

    pub fn add_ge(&mut self, expr: LinExpr, rhs: f64) {
        self.add_le(expr.scaled(-1.0), -rhs);
    }

    pub fn add_eq(&mut self, expr: LinExpr, rhs: f64) {
        self.constraints.push(LinearConstraint { expr, sense: Sense::Eq, rhs });
    }

    pub fn add_cone(&mut self, head: LinExpr, body: Vec<LinExpr>) {
        self.cones.push(Cone { head, body });
    }

    /// Cone over plain variables: `‖[x_1..x_k]‖ ≤ t`.
    pub fn add_cone_vars(&mut self, head: usize, members: &[usize]) {
        if members.contains(&head) && self.error.is_none() {
            self.error = Some(Error::InvalidConfig(format!("cone head {head} repeated among its members")));
        }
        self.add_cone(LinExpr::var(head), members.iter().map(|&i| LinExpr::var(i)).collect());
    }

    pub fn build(self) -> Result<ConicProgram> {
        if let Some(e) = self.error {
            return Err(e);
        }
        let n = self.labels.len();
        let mut objective = vec![0.0; n];
        for (i, c) in self.objective {
            if i >= n {
                return Err(Error::IndexOutOfRange(format!("objective: variable {i} of {n}")));
            }
            objective[i] += c;
        }
        let p = ConicProgram {
            num_vars: n,
            labels: self.labels,
            lower: self.lower,
            upper: self.upper,
            objective,
            objective_offset: self.offset,
            expressions: self.expressions,
            constraints: self.constraints,
            cones: self.cones,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NumericalFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: u32,
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { feas_tol: 1e-7, gap_tol: 1e-7, max_iter: 200, verbose: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Primal point (program variables only).
    pub x: Vec<f64>,
    /// Objective of the maximization, including the constant offset.
    pub objective: f64,
    /// Worst constraint violation recomputed from `x`.
    pub primal_residual: f64,
    /// Backend's scaled dual residual.
    pub dual_residual: f64,
    /// Backend's relative duality gap.
    pub gap: f64,
    pub iterations: u32,
    pub wall_time_s: f64,
    /// Set when the backend only met its relaxed stopping tolerances.
    pub reduced_accuracy: bool,
}

impl SolveReport {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}
