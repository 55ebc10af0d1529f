use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "cone", content = "size", rename_all = "lowercase")]
pub enum ConeKind {
    Nonneg(usize),
    Soc(usize),
    Psd(usize),
}

impl ConeKind {
    /// Side length (vector length or matrix order).
    pub fn size(&self) -> usize {
        match *self {
            ConeKind::Nonneg(k) | ConeKind::Soc(k) | ConeKind::Psd(k) => k,
        }
    }

    /// Number of free coordinates (`k(k+1)/2` for PSD).
    pub fn dim(&self) -> usize {
        match *self {
            ConeKind::Nonneg(k) | ConeKind::Soc(k) => k,
            ConeKind::Psd(k) => k * (k + 1) / 2,
        }
    }
}

/// Entry of a cone expression. Vector cones use `j = 0`; PSD entries are
/// stored once with `i <= j` and stand for both `(i, j)` and `(j, i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub i: usize,
    pub j: usize,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarEntry {
    pub var: usize,
    pub i: usize,
    pub j: usize,
    pub v: f64,
}

/// `constant + sum_k x_k * coefficient_k` must lie in the cone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeConstraint {
    pub label: String,
    pub kind: ConeKind,
    pub constant: Vec<Entry>,
    pub linear: Vec<VarEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearEquality {
    pub label: String,
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// Symmetric matrix variable expanded into scalars `name[i,j]`, `i <= j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixVar {
    pub name: String,
    pub size: usize,
    pub first: usize,
}

impl MatrixVar {
    /// Scalar variable holding entry `(i, j)`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.first + j * (j + 1) / 2 + i
    }
}

/// Block conic program: maximize a linear objective over free scalars.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConicProblem {
    pub name: String,
    pub variables: Vec<String>,
    #[serde(default)]
    pub matrix_variables: Vec<MatrixVar>,
    /// Maximized.
    pub objective: Vec<(usize, f64)>,
    pub equalities: Vec<LinearEquality>,
    pub cones: Vec<ConeConstraint>,
}

impl ConicProblem {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Default::default() }
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> usize {
        self.variables.push(name.into());
        self.variables.len() - 1
    }

    pub fn add_matrix_var(&mut self, name: &str, size: usize) -> MatrixVar {
        let first = self.variables.len();
        for j in 0..size {
            for i in 0..=j {
                self.variables.push(format!("{name}[{i},{j}]"));
            }
        }
        let mv = MatrixVar { name: name.to_string(), size, first };
        self.matrix_variables.push(mv.clone());
        mv
    }

    /// Matrix variable constrained to be PSD (`Nonneg` when it is `1 x 1`).
    pub fn add_psd_var(&mut self, name: &str, size: usize) -> MatrixVar {
        let mv = self.add_matrix_var(name, size);
        let mut linear = Vec::new();
        for j in 0..size {
            for i in 0..=j {
                linear.push(VarEntry { var: mv.index(i, j), i, j, v: 1.0 });
            }
        }
        let kind = if size == 1 { ConeKind::Nonneg(1) } else { ConeKind::Psd(size) };
        if size == 1 {
            linear[0].j = 0;
        }
        self.cones.push(ConeConstraint { label: format!("{name}>=0"), kind, constant: vec![], linear });
        mv
    }

    pub fn maximize(&mut self, terms: Vec<(usize, f64)>) {
        self.objective = terms;
    }

    pub fn add_equality(&mut self, label: impl Into<String>, terms: Vec<(usize, f64)>, rhs: f64) {
        self.equalities.push(LinearEquality { label: label.into(), terms, rhs });
    }

    /// Adds `expr in cone`. PSD expressions are `k x k` symmetric matrices,
    /// vector cones take a `k x 1` column.
    pub fn add_cone_affine(&mut self, label: impl Into<String>, kind: ConeKind, expr: &AffineMat) {
        let k = kind.size();
        let psd = matches!(kind, ConeKind::Psd(_));
        let cols = if psd { k } else { 1 };
        assert_eq!((expr.constant.nrows(), expr.constant.ncols()), (k, cols), "cone expression shape");
        let pick = |m: &DMatrix<f64>| -> Vec<(usize, usize, f64)> {
            let mut out = Vec::new();
            if psd {
                for j in 0..k {
                    for i in 0..=j {
                        let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                        if v != 0.0 {
                            out.push((i, j, v));
                        }
                    }
                }
            } else {
                for i in 0..k {
                    if m[(i, 0)] != 0.0 {
                        out.push((i, 0, m[(i, 0)]));
                    }
                }
            }
            out
        };
        let constant = pick(&expr.constant).into_iter().map(|(i, j, v)| Entry { i, j, v }).collect();
        let mut linear = Vec::new();
        for (var, m) in &expr.terms {
            linear.extend(pick(m).into_iter().map(|(i, j, v)| VarEntry { var: *var, i, j, v }));
        }
        self.cones.push(ConeConstraint { label: label.into(), kind, constant, linear });
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn validate(&self) -> Result<()> {
        let nv = self.variables.len();
        let check = |v: usize| if v < nv { Ok(()) } else { Err(Error::UnknownVariable(v)) };
        for &(v, _) in &self.objective {
            check(v)?;
        }
        for eq in &self.equalities {
            for &(v, _) in &eq.terms {
                check(v)?;
            }
        }
        for c in &self.cones {
            let k = c.kind.size();
            let psd = matches!(c.kind, ConeKind::Psd(_));
            let ok = |i: usize, j: usize| if psd { i <= j && j < k } else { i < k && j == 0 };
            for e in &c.constant {
                if !ok(e.i, e.j) {
                    return Err(Error::Invalid(format!("entry ({}, {}) outside cone '{}'", e.i, e.j, c.label)));
                }
            }
            for e in &c.linear {
                check(e.var)?;
                if !ok(e.i, e.j) {
                    return Err(Error::Invalid(format!("entry ({}, {}) outside cone '{}'", e.i, e.j, c.label)));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    /// Value of a cone expression at `x`, as a dense matrix (`k x 1` for vector cones).
    pub fn cone_value(&self, c: &ConeConstraint, x: &[f64]) -> DMatrix<f64> {
        let k = c.kind.size();
        let psd = matches!(c.kind, ConeKind::Psd(_));
        let mut m = DMatrix::zeros(k, if psd { k } else { 1 });
        let mut put = |i: usize, j: usize, v: f64| {
            m[(i, j)] += v;
            if psd && i != j {
                m[(j, i)] += v;
            }
        };
        for e in &c.constant {
            put(e.i, e.j, e.v);
        }
        for e in &c.linear {
            put(e.i, e.j, e.v * x[e.var]);
        }
        m
    }
}

/// Affine matrix expression `M_0 + sum_k x_k M_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMat {
    pub constant: DMatrix<f64>,
    pub terms: Vec<(usize, DMatrix<f64>)>,
}

impl AffineMat {
    pub fn constant(m: DMatrix<f64>) -> Self {
        Self { constant: m, terms: vec![] }
    }

    pub fn with_term(mut self, var: usize, m: DMatrix<f64>) -> Self {
        self.terms.push((var, m));
        self
    }

    /// Applies a linear map to every component.
    pub fn map(&self, f: impl Fn(&DMatrix<f64>) -> DMatrix<f64>) -> Self {
        Self { constant: f(&self.constant), terms: self.terms.iter().map(|(v, m)| (*v, f(m))).collect() }
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = self.constant.clone();
        for (v, t) in &self.terms {
            m += t * x[*v];
        }
        m
    }
}
