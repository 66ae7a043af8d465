//! Structured convex program: variable registry, objective, constraint atoms.

use std::collections::HashMap;

use super::atom::Atom;
use super::expr::AffExpr;
use crate::{Error, Result};

/// How a variable participates in the Newton block structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarClass {
    Scalar,
    /// Real or imaginary part of a complex vector entry; allocated in
    /// consecutive (re, im) pairs.
    VectorPart,
}

/// A registered convex program. Objective is affine and maximized.
#[derive(Debug, Clone)]
pub struct StructuredProgram {
    pub(crate) names: HashMap<String, (usize, usize)>,
    pub(crate) class: Vec<VarClass>,
    pub atoms: Vec<Atom>,
    pub objective: AffExpr,
    /// Affine equalities `expr == 0`.
    pub equalities: Vec<AffExpr>,
}

impl StructuredProgram {
    pub fn num_vars(&self) -> usize {
        self.class.len()
    }

    /// Start index and length of a registered variable group.
    pub fn range(&self, name: &str) -> (usize, usize) {
        *self
            .names
            .get(name)
            .unwrap_or_else(|| panic!("unknown variable group '{name}'"))
    }

    /// Index of element `i` in group `name`.
    pub fn idx(&self, name: &str, i: usize) -> usize {
        let (start, len) = self.range(name);
        assert!(i < len, "index {i} out of range for '{name}' (len {len})");
        start + i
    }

    pub fn var_class(&self, i: usize) -> VarClass {
        self.class[i]
    }

    /// Largest constraint residual (positive = infeasible) plus equality gap.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let ineq = self
            .atoms
            .iter()
            .map(|a| a.violation(x))
            .fold(f64::NEG_INFINITY, f64::max);
        let eq = self
            .equalities
            .iter()
            .map(|e| e.eval(x).abs())
            .fold(0.0, f64::max);
        ineq.max(eq)
    }
}

/// Incremental builder for [`StructuredProgram`].
#[derive(Debug, Default)]
pub struct ProgramBuilder {
    names: HashMap<String, (usize, usize)>,
    class: Vec<VarClass>,
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
    atoms: Vec<Atom>,
    objective: AffExpr,
    equalities: Vec<AffExpr>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn register(&mut self, name: &str, len: usize, class: VarClass) -> usize {
        let start = self.class.len();
        if self
            .names
            .insert(name.to_string(), (start, len))
            .is_some()
        {
            panic!("variable group '{name}' registered twice");
        }
        self.class.extend(std::iter::repeat(class).take(len));
        self.lower.extend(std::iter::repeat(None).take(len));
        self.upper.extend(std::iter::repeat(None).take(len));
        start
    }

    /// One scalar with optional box bounds. Returns its index.
    pub fn scalar(&mut self, name: &str, lb: Option<f64>, ub: Option<f64>) -> usize {
        let i = self.register(name, 1, VarClass::Scalar);
        self.lower[i] = lb;
        self.upper[i] = ub;
        i
    }

    /// A group of scalars sharing box bounds. Returns the start index.
    pub fn scalars(&mut self, name: &str, len: usize, lb: Option<f64>, ub: Option<f64>) -> usize {
        let start = self.register(name, len, VarClass::Scalar);
        for i in start..start + len {
            self.lower[i] = lb;
            self.upper[i] = ub;
        }
        start
    }

    /// A complex vector of `len` entries stored as interleaved (re, im)
    /// pairs, each constrained to `|v_n| <= modulus`. Returns the start
    /// index of the real part of entry 0.
    pub fn complex_vec(&mut self, name: &str, len: usize, modulus: f64) -> usize {
        let start = self.register(name, 2 * len, VarClass::VectorPart);
        for n in 0..len {
            self.atoms.push(Atom::Soc {
                terms: vec![AffExpr::var(start + 2 * n), AffExpr::var(start + 2 * n + 1)],
                rhs: AffExpr::constant(modulus),
            });
        }
        start
    }

    pub fn maximize(&mut self, objective: AffExpr) {
        self.objective = objective;
    }

    pub fn constrain(&mut self, atom: Atom) {
        self.atoms.push(atom);
    }

    /// `expr <= 0`.
    pub fn affine_le(&mut self, expr: AffExpr) {
        self.atoms.push(Atom::Affine { expr });
    }

    /// `expr == 0`.
    pub fn equality(&mut self, expr: AffExpr) {
        self.equalities.push(expr);
    }

    /// Finalizes the program. In debug builds, every atom's declared
    /// curvature is spot-checked by midpoint convexity tests around
    /// `reference` (a strictly feasible point).
    pub fn build(mut self, reference: &[f64]) -> Result<StructuredProgram> {
        if reference.len() != self.class.len() {
            return Err(Error::solver(format!(
                "reference point has {} entries, program has {} variables",
                reference.len(),
                self.class.len()
            )));
        }
        for i in 0..self.class.len() {
            if let Some(lb) = self.lower[i] {
                self.atoms.push(Atom::Affine {
                    expr: AffExpr::term(i, -1.0).plus_const(lb),
                });
            }
            if let Some(ub) = self.upper[i] {
                self.atoms.push(Atom::Affine {
                    expr: AffExpr::term(i, 1.0).plus_const(-ub),
                });
            }
        }
        let prog = StructuredProgram {
            names: self.names,
            class: self.class,
            atoms: self.atoms,
            objective: self.objective,
            equalities: self.equalities,
        };
        #[cfg(debug_assertions)]
        debug_curvature_check(&prog, reference)?;
        let _ = reference;
        Ok(prog)
    }
}

/// Midpoint convexity spot checks: for random in-domain pairs (x, y) the
/// residual must satisfy g((x+y)/2) <= (g(x) + g(y))/2 + tol.
#[cfg(debug_assertions)]
fn debug_curvature_check(prog: &StructuredProgram, reference: &[f64]) -> Result<()> {
    let n = prog.num_vars();
    let mut state: u64 = 0x5851f42d4c957f2d;
    let mut next_unit = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut draw = |scale: f64, reference: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let span = scale * (1.0 + reference[i].abs());
                reference[i] + span * (next_unit() - 0.5)
            })
            .collect()
    };
    for (idx, atom) in prog.atoms.iter().enumerate() {
        let mut checked = 0;
        for _ in 0..32 {
            if checked >= 6 {
                break;
            }
            let a = draw(0.05, reference);
            let b = draw(0.05, reference);
            let mid: Vec<f64> = a.iter().zip(&b).map(|(&x, &y)| 0.5 * (x + y)).collect();
            let (ga, gb, gm) = (atom.violation(&a), atom.violation(&b), atom.violation(&mid));
            if !(ga.is_finite() && gb.is_finite() && gm.is_finite()) {
                continue;
            }
            checked += 1;
            let bound = 0.5 * (ga + gb);
            let tol = 1e-9 * (1.0 + ga.abs() + gb.abs());
            if gm > bound + tol {
                return Err(Error::solver(format!(
                    "atom {idx} failed midpoint convexity: g(mid)={gm} > {bound}"
                )));
            }
        }
    }
    Ok(())
}
