//! Sparse affine expressions over registered variables.

/// `sum coeff_i * x_i + constant`. Term indices refer to the owning
/// program's variable vector and need not be sorted or unique.
#[derive(Debug, Clone, Default)]
pub struct AffExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffExpr {
    pub fn constant(c: f64) -> Self {
        AffExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(i: usize) -> Self {
        AffExpr {
            terms: vec![(i, 1.0)],
            constant: 0.0,
        }
    }

    pub fn term(i: usize, coeff: f64) -> Self {
        AffExpr {
            terms: vec![(i, coeff)],
            constant: 0.0,
        }
    }

    pub fn plus(mut self, i: usize, coeff: f64) -> Self {
        if coeff != 0.0 {
            self.terms.push((i, coeff));
        }
        self
    }

    pub fn plus_const(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn scaled(mut self, by: f64) -> Self {
        for term in &mut self.terms {
            term.1 *= by;
        }
        self.constant *= by;
        self
    }

    pub fn add(&mut self, other: &AffExpr, scale: f64) {
        for &(i, c) in &other.terms {
            self.terms.push((i, c * scale));
        }
        self.constant += other.constant * scale;
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = self.constant;
        for &(i, c) in &self.terms {
            acc += c * x[i];
        }
        acc
    }

    /// Scatter `scale * grad(self)` into a dense accumulator.
    pub fn scatter(&self, scale: f64, into: &mut [f64]) {
        for &(i, c) in &self.terms {
            into[i] += scale * c;
        }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|&(_, c)| c == 0.0)
    }
}

/// A gradient vector stored sparsely; indices may repeat.
#[derive(Debug, Clone, Default)]
pub struct SparseVec {
    pub entries: Vec<(usize, f64)>,
}

impl SparseVec {
    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn push_expr(&mut self, expr: &AffExpr, scale: f64) {
        for &(i, c) in &expr.terms {
            if c != 0.0 && scale != 0.0 {
                self.entries.push((i, c * scale));
            }
        }
    }

    pub fn push(&mut self, i: usize, v: f64) {
        if v != 0.0 {
            self.entries.push((i, v));
        }
    }

    /// Consolidates duplicate indices (in-place, order by index).
    pub fn compact(&mut self) {
        self.entries.sort_unstable_by_key(|e| e.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.entries.len());
        for &(i, v) in &self.entries {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => out.push((i, v)),
            }
        }
        out.retain(|&(_, v)| v != 0.0);
        self.entries = out;
    }

    pub fn dot_dense(&self, x: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * x[i]).sum()
    }

    pub fn scatter(&self, scale: f64, into: &mut [f64]) {
        for &(i, v) in &self.entries {
            into[i] += scale * v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_scatter() {
        let e = AffExpr::constant(1.5).plus(0, 2.0).plus(2, -1.0);
        let x = [1.0, 10.0, 4.0];
        assert_eq!(e.eval(&x), 1.5 + 2.0 - 4.0);
        let mut acc = [0.0; 3];
        e.scatter(2.0, &mut acc);
        assert_eq!(acc, [4.0, 0.0, -2.0]);
    }

    #[test]
    fn sparse_compact_merges_duplicates() {
        let mut v = SparseVec::default();
        v.push(3, 1.0);
        v.push(1, 2.0);
        v.push(3, -0.5);
        v.compact();
        assert_eq!(v.entries, vec![(1, 2.0), (3, 0.5)]);
    }
}
