//! Primal log-barrier interior-point method over the atom set.
//!
//! The Newton system exploits the structure our programs always have: box
//! and per-element modulus constraints give a block-diagonal base (dense
//! over the scalar variables, 2x2 blocks over complex-vector parts), while
//! the beamforming/rate constraints contribute a modest number of rank-one
//! outer products handled by a Woodbury correction. The per-step cost is
//! therefore linear in the IRS element count.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::atom::{Atom, HessPiece};
use super::expr::AffExpr;
use super::program::{StructuredProgram, VarClass};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Feasibility tolerance for the reported solution.
    pub tol_feas: f64,
    /// Target duality-gap bound (barrier parameter sum over t).
    pub tol_opt: f64,
    /// Cap on total Newton iterations.
    pub max_newton: usize,
    /// Initial barrier weight; raise for warm starts.
    pub t0: f64,
    /// Barrier weight multiplier per centering round.
    pub mu_barrier: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol_feas: 1e-8,
            tol_opt: 1e-7,
            max_newton: 800,
            t0: 1.0,
            mu_barrier: 40.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    /// Value of the (maximized) affine objective at `x`.
    pub objective: f64,
    /// Largest inequality residual / equality gap at `x` (negative when
    /// strictly feasible).
    pub max_violation: f64,
    /// Newton iterations spent.
    pub iterations: usize,
    /// Final barrier weight (useful to warm-start related solves).
    pub final_t: f64,
}

/// Where a Hessian piece is accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Route {
    ScalarBlock,
    Pair(usize),
    UCol,
}

struct BlockLayout {
    /// var index -> scalar slot (usize::MAX when vector-class).
    scalar_slot: Vec<usize>,
    /// var index -> (pair id, part) for vector-class vars.
    pair_slot: Vec<(usize, usize)>,
    num_scalars: usize,
    num_pairs: usize,
}

impl BlockLayout {
    fn new(prog: &StructuredProgram) -> Result<Self> {
        let n = prog.num_vars();
        let mut scalar_slot = vec![usize::MAX; n];
        let mut pair_slot = vec![(usize::MAX, 0usize); n];
        let mut ns = 0;
        let mut np = 0;
        let mut i = 0;
        while i < n {
            match prog.var_class(i) {
                VarClass::Scalar => {
                    scalar_slot[i] = ns;
                    ns += 1;
                    i += 1;
                }
                VarClass::VectorPart => {
                    if i + 1 >= n || prog.var_class(i + 1) != VarClass::VectorPart {
                        return Err(Error::solver(
                            "vector-class variables must come in (re, im) pairs".to_string(),
                        ));
                    }
                    pair_slot[i] = (np, 0);
                    pair_slot[i + 1] = (np, 1);
                    np += 1;
                    i += 2;
                }
            }
        }
        Ok(BlockLayout {
            scalar_slot,
            pair_slot,
            num_scalars: ns,
            num_pairs: np,
        })
    }

    fn route_support(&self, vars: impl Iterator<Item = usize> + Clone) -> Route {
        let mut pair: Option<usize> = None;
        for i in vars.clone() {
            if self.scalar_slot[i] == usize::MAX {
                let (p, _) = self.pair_slot[i];
                match pair {
                    None => pair = Some(p),
                    Some(q) if q == p => {}
                    _ => return Route::UCol,
                }
            }
        }
        match pair {
            None => Route::ScalarBlock,
            Some(p) => {
                // Mixed pair + scalar support must go to the U factor.
                for i in vars {
                    if self.scalar_slot[i] != usize::MAX {
                        return Route::UCol;
                    }
                }
                Route::Pair(p)
            }
        }
    }
}

struct Workspace {
    grad: DVector<f64>,
    sb: DMatrix<f64>,
    pairs: Vec<[f64; 3]>,
    ucols: DMatrix<f64>,
    ucoefs: Vec<f64>,
    n_ucols: usize,
}

/// Solves a structured program from a strictly feasible start.
///
/// Deterministic: identical programs and options yield identical iterates.
pub fn solve(prog: &StructuredProgram, x0: &[f64], opts: &SolveOptions) -> Result<SolveResult> {
    let mut x = x0.to_vec();
    if x.len() != prog.num_vars() {
        return Err(Error::solver(format!(
            "initial point has {} entries, program has {} variables",
            x.len(),
            prog.num_vars()
        )));
    }
    for eq in &prog.equalities {
        if eq.eval(&x).abs() > 1e-7 {
            return Err(Error::solver(format!(
                "initial point violates an equality by {}",
                eq.eval(&x)
            )));
        }
    }
    let mut iterations = 0usize;
    if !strictly_feasible(prog, &x) {
        match phase_one(prog, &x, opts)? {
            PhaseOne::Feasible(xf, iters) => {
                x = xf;
                iterations += iters;
            }
            PhaseOne::Infeasible(iters) => {
                let objective = prog.objective.eval(&x);
                return Ok(SolveResult {
                    status: SolveStatus::Infeasible,
                    max_violation: prog.max_violation(&x),
                    x,
                    objective,
                    iterations: iterations + iters,
                    final_t: opts.t0,
                });
            }
        }
    }
    let status = barrier_minimize(prog, &mut x, opts, &mut iterations, None)?;
    let objective = prog.objective.eval(&x);
    let max_violation = prog.max_violation(&x);
    let final_t = match status {
        BarrierOutcome::Converged(t) => t,
        BarrierOutcome::IterationLimit(t) => t,
    };
    Ok(SolveResult {
        status: match status {
            BarrierOutcome::Converged(_) => SolveStatus::Optimal,
            BarrierOutcome::IterationLimit(_) => SolveStatus::IterationLimit,
        },
        x,
        objective,
        max_violation,
        iterations,
        final_t,
    })
}

fn strictly_feasible(prog: &StructuredProgram, x: &[f64]) -> bool {
    prog.atoms.iter().all(|a| a.domain_ok(x))
}

enum PhaseOne {
    Feasible(Vec<f64>, usize),
    Infeasible(usize),
}

/// Phase-I feasibility search: every atom is relaxed by a shared slack
/// `g(x) <= s` and `s` is driven negative. Domain side conditions (strict
/// positivity arguments) are not relaxed; callers must start inside them.
fn phase_one(prog: &StructuredProgram, x0: &[f64], opts: &SolveOptions) -> Result<PhaseOne> {
    let n = prog.num_vars();
    let s_idx = n;
    let g0 = prog
        .atoms
        .iter()
        .map(|a| a.violation(x0))
        .fold(f64::NEG_INFINITY, f64::max);
    if !g0.is_finite() {
        // A domain side condition fails; nothing the relaxation can fix.
        return Ok(PhaseOne::Infeasible(0));
    }
    let s0 = g0.abs() * 1.2 + 1e-3;
    let mut names = prog.names.clone();
    names.insert("phase1:s".to_string(), (s_idx, 1));
    let mut class = prog.class.clone();
    class.push(VarClass::Scalar);
    let mut atoms: Vec<Atom> = prog.atoms.iter().map(|a| relax_atom(a, s_idx)).collect();
    // Keep s bounded so the barrier problem stays bounded.
    atoms.push(Atom::Affine {
        expr: AffExpr::term(s_idx, -1.0).plus_const(-1.0),
    });
    atoms.push(Atom::Affine {
        expr: AffExpr::term(s_idx, 1.0).plus_const(-(s0 + 1.0)),
    });
    let aux = StructuredProgram {
        names,
        class,
        atoms,
        objective: AffExpr::term(s_idx, -1.0),
        equalities: prog.equalities.clone(),
    };
    let mut x = x0.to_vec();
    x.push(s0);
    let mut iterations = 0usize;
    let aux_opts = SolveOptions {
        tol_opt: 1e-4,
        ..*opts
    };
    barrier_minimize(&aux, &mut x, &aux_opts, &mut iterations, Some(s_idx))?;
    let feasible = x[s_idx] < -1e-9 && strictly_feasible(prog, &x[..n]);
    if feasible {
        Ok(PhaseOne::Feasible(x[..n].to_vec(), iterations))
    } else {
        Ok(PhaseOne::Infeasible(iterations))
    }
}

fn relax_atom(atom: &Atom, s: usize) -> Atom {
    let minus = |e: &AffExpr| e.clone().plus(s, -1.0);
    let plus = |e: &AffExpr| e.clone().plus(s, 1.0);
    match atom {
        Atom::Affine { expr } => Atom::Affine { expr: minus(expr) },
        Atom::Soc { terms, rhs } => Atom::Soc {
            terms: terms.clone(),
            rhs: plus(rhs),
        },
        Atom::LogRate { t, w, u } => Atom::LogRate {
            t: minus(t),
            w: *w,
            u: u.clone(),
        },
        Atom::Exp { t, arg } => Atom::Exp {
            t: plus(t),
            arg: arg.clone(),
        },
        Atom::Pow2 { t, x } => Atom::Pow2 {
            t: plus(t),
            x: x.clone(),
        },
        Atom::Recip { t, x } => Atom::Recip {
            t: plus(t),
            x: x.clone(),
        },
        Atom::QuadOverLin { t, x, z } => Atom::QuadOverLin {
            t: plus(t),
            x: x.clone(),
            z: z.clone(),
        },
        Atom::ExpMonomial { t, arg, f } => Atom::ExpMonomial {
            t: plus(t),
            arg: arg.clone(),
            f: f.clone(),
        },
        Atom::ConvexQuadratic { quad, lin } => Atom::ConvexQuadratic {
            quad: quad.clone(),
            lin: minus(lin),
        },
        Atom::DecayingExp { t, f, amp, decay, e0, e1 } => Atom::DecayingExp {
            t: minus(t),
            f: f.clone(),
            amp: *amp,
            decay: *decay,
            e0: *e0,
            e1: *e1,
        },
    }
}

enum BarrierOutcome {
    Converged(f64),
    IterationLimit(f64),
}

/// Runs the barrier path on `prog`, minimizing `t * (-objective) + phi`.
/// When `early_exit_var` is set, stops as soon as that variable goes below
/// -1e-6 (phase-I shortcut).
fn barrier_minimize(
    prog: &StructuredProgram,
    x: &mut Vec<f64>,
    opts: &SolveOptions,
    iterations: &mut usize,
    early_exit_var: Option<usize>,
) -> Result<BarrierOutcome> {
    let layout = BlockLayout::new(prog)?;
    let n = prog.num_vars();
    let m_eff: f64 = prog.atoms.iter().map(|a| a.barrier_param()).sum();

    // Static piece routing, derived from the (fixed) sparsity structure.
    let mut routes: Vec<Vec<Route>> = Vec::with_capacity(prog.atoms.len());
    let mut n_ucols = 0usize;
    {
        let probe = x.clone();
        for atom in &prog.atoms {
            let terms = atom.barrier(&probe);
            let mut atom_routes = Vec::with_capacity(terms.pieces.len());
            for piece in &terms.pieces {
                let route = match piece {
                    HessPiece::Rank1 { vec, .. } => {
                        layout.route_support(vec.entries.iter().map(|&(i, _)| i))
                    }
                    HessPiece::Block { vars, .. } => {
                        let r = layout.route_support(vars.iter().copied());
                        if r == Route::UCol {
                            return Err(Error::solver(
                                "dense Hessian block spans multiple variable blocks".to_string(),
                            ));
                        }
                        r
                    }
                };
                if route == Route::UCol {
                    n_ucols += 1;
                }
                atom_routes.push(route);
            }
            routes.push(atom_routes);
        }
    }

    let mut ws = Workspace {
        grad: DVector::zeros(n),
        sb: DMatrix::zeros(layout.num_scalars, layout.num_scalars),
        pairs: vec![[0.0; 3]; layout.num_pairs],
        ucols: DMatrix::zeros(n, n_ucols),
        ucoefs: vec![0.0; n_ucols],
        n_ucols,
    };

    // Equality gradient rows are constant.
    let eq_rows: Vec<DVector<f64>> = prog
        .equalities
        .iter()
        .map(|e| {
            let mut row = DVector::zeros(n);
            e.scatter(1.0, row.as_mut_slice());
            row
        })
        .collect();

    let mut t = opts.t0.max(1e-6);
    loop {
        // Newton centering for the current t.
        let mut decrement;
        loop {
            if *iterations >= opts.max_newton {
                return Ok(BarrierOutcome::IterationLimit(t));
            }
            assemble(prog, x, t, &layout, &routes, &mut ws)?;
            let step = newton_step(&layout, &mut ws, &eq_rows)?;
            decrement = -ws.grad.dot(&step);
            if !decrement.is_finite() {
                return Err(Error::solver("Newton decrement not finite".to_string()));
            }
            if decrement <= 0.0 {
                break; // at the center up to rounding
            }
            *iterations += 1;
            let taken = line_search(prog, x, &step, &ws.grad, t)?;
            if !taken {
                break;
            }
            if decrement * 0.5 < 1e-10 {
                break;
            }
            if let Some(sv) = early_exit_var {
                if x[sv] < -1e-6 {
                    return Ok(BarrierOutcome::Converged(t));
                }
            }
        }
        if m_eff / t <= opts.tol_opt {
            return Ok(BarrierOutcome::Converged(t));
        }
        t *= opts.mu_barrier;
    }
}

/// Builds gradient and Hessian blocks of `t * (-objective) + phi` at `x`.
fn assemble(
    prog: &StructuredProgram,
    x: &[f64],
    t: f64,
    layout: &BlockLayout,
    routes: &[Vec<Route>],
    ws: &mut Workspace,
) -> Result<()> {
    ws.grad.fill(0.0);
    ws.sb.fill(0.0);
    for p in &mut ws.pairs {
        *p = [0.0; 3];
    }
    ws.ucols.fill(0.0);
    let mut ucol_next = 0usize;

    prog.objective.scatter(-t, ws.grad.as_mut_slice());

    for (atom, atom_routes) in prog.atoms.iter().zip(routes) {
        if !atom.domain_ok(x) {
            return Err(Error::solver(
                "iterate left the feasible region during assembly".to_string(),
            ));
        }
        let terms = atom.barrier(x);
        terms.grad.scatter(1.0, ws.grad.as_mut_slice());
        for (piece, route) in terms.pieces.iter().zip(atom_routes) {
            match (piece, route) {
                (HessPiece::Rank1 { coef, vec }, Route::ScalarBlock) => {
                    if *coef <= 0.0 {
                        continue;
                    }
                    for &(i, vi) in &vec.entries {
                        let si = layout.scalar_slot[i];
                        for &(j, vj) in &vec.entries {
                            let sj = layout.scalar_slot[j];
                            ws.sb[(si, sj)] += coef * vi * vj;
                        }
                    }
                }
                (HessPiece::Rank1 { coef, vec }, Route::Pair(p)) => {
                    if *coef <= 0.0 {
                        continue;
                    }
                    let mut local = [0.0f64; 2];
                    for &(i, vi) in &vec.entries {
                        local[layout.pair_slot[i].1] += vi;
                    }
                    ws.pairs[*p][0] += coef * local[0] * local[0];
                    ws.pairs[*p][1] += coef * local[0] * local[1];
                    ws.pairs[*p][2] += coef * local[1] * local[1];
                }
                (HessPiece::Rank1 { coef, vec }, Route::UCol) => {
                    let col = ucol_next;
                    ucol_next += 1;
                    ws.ucoefs[col] = *coef;
                    let mut column = ws.ucols.column_mut(col);
                    for &(i, vi) in &vec.entries {
                        column[i] += vi;
                    }
                }
                (HessPiece::Block { vars, mat }, Route::ScalarBlock) => {
                    let m = vars.len();
                    for a in 0..m {
                        let sa = layout.scalar_slot[vars[a]];
                        for b in 0..m {
                            let sb_idx = layout.scalar_slot[vars[b]];
                            ws.sb[(sa, sb_idx)] += mat[a * m + b];
                        }
                    }
                }
                (HessPiece::Block { vars, mat }, Route::Pair(p)) => {
                    // Symmetric 2x2 block; the off-diagonal is stored once.
                    let m = vars.len();
                    for a in 0..m {
                        let pa = layout.pair_slot[vars[a]].1;
                        for b in 0..m {
                            let pb = layout.pair_slot[vars[b]].1;
                            let val = mat[a * m + b];
                            match (pa, pb) {
                                (0, 0) => ws.pairs[*p][0] += val,
                                (0, 1) => ws.pairs[*p][1] += val,
                                (1, 1) => ws.pairs[*p][2] += val,
                                _ => {}
                            }
                        }
                    }
                }
                (HessPiece::Block { .. }, Route::UCol) => {
                    return Err(Error::solver("unroutable Hessian block".to_string()));
                }
            }
        }
    }
    ws.n_ucols = ucol_next;
    Ok(())
}

/// Applies M^{-1} (scalar Cholesky + 2x2 pair blocks) to `rhs` in place.
fn m_solve(
    layout: &BlockLayout,
    chol: &Cholesky<f64, Dyn>,
    pair_inv: &[[f64; 3]],
    rhs: &mut DVector<f64>,
) {
    let ns = layout.num_scalars;
    let mut rs = DVector::zeros(ns);
    for (i, &slot) in layout.scalar_slot.iter().enumerate() {
        if slot != usize::MAX {
            rs[slot] = rhs[i];
        }
    }
    chol.solve_mut(&mut rs);
    for (i, &slot) in layout.scalar_slot.iter().enumerate() {
        if slot != usize::MAX {
            rhs[i] = rs[slot];
        }
    }
    // Pair parts: find each pair's two variable indices from the slot map.
    for (i, &(p, part)) in layout.pair_slot.iter().enumerate() {
        if p == usize::MAX || part != 0 {
            continue;
        }
        let inv = pair_inv[p];
        let (a, b) = (rhs[i], rhs[i + 1]);
        rhs[i] = inv[0] * a + inv[1] * b;
        rhs[i + 1] = inv[1] * a + inv[2] * b;
    }
}

fn newton_step(
    layout: &BlockLayout,
    ws: &mut Workspace,
    eq_rows: &[DVector<f64>],
) -> Result<DVector<f64>> {
    let n = ws.grad.len();
    // Factor the scalar block with a ridge retry.
    let mut ridge = 0.0;
    let base_scale = (0..layout.num_scalars)
        .map(|i| ws.sb[(i, i)].abs())
        .fold(0.0f64, f64::max)
        .max(1.0);
    let chol = loop {
        let mut m = ws.sb.clone();
        for i in 0..layout.num_scalars {
            m[(i, i)] += ridge;
        }
        match Cholesky::new(m) {
            Some(c) => break c,
            None => {
                ridge = if ridge == 0.0 { base_scale * 1e-12 } else { ridge * 100.0 };
                if ridge > base_scale * 1e3 {
                    return Err(Error::solver("scalar Hessian block not factorizable".to_string()));
                }
            }
        }
    };
    let pair_inv: Vec<[f64; 3]> = ws
        .pairs
        .iter()
        .map(|&[a, b, c]| {
            let det = (a * c - b * b).max(1e-300);
            [c / det, -b / det, a / det]
        })
        .collect();

    let r = ws.n_ucols;
    // W = M^{-1} U and the Woodbury core.
    let mut w_mat = DMatrix::zeros(n, r);
    let mut core = DMatrix::zeros(r, r);
    if r > 0 {
        for j in 0..r {
            let mut col = DVector::from_column_slice(ws.ucols.column(j).as_slice());
            m_solve(layout, &chol, &pair_inv, &mut col);
            w_mat.set_column(j, &col);
        }
        for j in 0..r {
            for i in 0..r {
                core[(i, j)] = ws.ucols.column(i).dot(&w_mat.column(j));
            }
            let c = ws.ucoefs[j].max(1e-300);
            core[(j, j)] += 1.0 / c;
        }
    }
    let core_chol = if r > 0 {
        Some(Cholesky::new(core).ok_or_else(|| {
            Error::solver("Woodbury core not positive definite".to_string())
        })?)
    } else {
        None
    };

    let h_solve = |rhs: &DVector<f64>| -> DVector<f64> {
        let mut y = rhs.clone();
        m_solve(layout, &chol, &pair_inv, &mut y);
        if let Some(cc) = &core_chol {
            let mut z = DVector::zeros(r);
            for j in 0..r {
                z[j] = ws.ucols.column(j).dot(&y);
            }
            cc.solve_mut(&mut z);
            for j in 0..r {
                let zj = z[j];
                if zj != 0.0 {
                    let wcol = w_mat.column(j);
                    for i in 0..n {
                        y[i] -= zj * wcol[i];
                    }
                }
            }
        }
        y
    };

    let neg_grad = -&ws.grad;
    let mut d = h_solve(&neg_grad);
    if !eq_rows.is_empty() {
        let p = eq_rows.len();
        let hinv_at: Vec<DVector<f64>> = eq_rows.iter().map(|row| h_solve(row)).collect();
        let mut g_mat = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                g_mat[(i, j)] = eq_rows[i].dot(&hinv_at[j]);
            }
        }
        let mut rhs = DVector::zeros(p);
        for i in 0..p {
            rhs[i] = eq_rows[i].dot(&d);
        }
        let lu = g_mat.lu();
        let nu = lu
            .solve(&rhs)
            .ok_or_else(|| Error::solver("equality KKT system singular".to_string()))?;
        for i in 0..p {
            d.axpy(-nu[i], &hinv_at[i], 1.0);
        }
    }
    Ok(d)
}

/// Backtracking line search on the barrier merit. Returns false when no
/// acceptable step exists (treated as converged at this centering).
fn line_search(
    prog: &StructuredProgram,
    x: &mut Vec<f64>,
    step: &DVector<f64>,
    grad: &DVector<f64>,
    t: f64,
) -> Result<bool> {
    let merit = |pt: &[f64]| -> Option<f64> {
        let mut val = -t * prog.objective.eval(pt);
        for atom in &prog.atoms {
            val += atom.phi_value(pt)?;
        }
        Some(val)
    };
    let base = merit(x).ok_or_else(|| Error::solver("merit undefined at iterate".to_string()))?;
    let slope = grad.dot(step);
    let mut alpha = 1.0;
    for _ in 0..90 {
        let cand: Vec<f64> = x
            .iter()
            .zip(step.iter())
            .map(|(&xi, &di)| xi + alpha * di)
            .collect();
        if let Some(val) = merit(&cand) {
            if val <= base + 0.25 * alpha * slope {
                *x = cand;
                return Ok(true);
            }
        }
        alpha *= 0.5;
    }
    Ok(false)
}

impl Atom {
    /// Barrier value only (for line search); `None` outside the domain.
    pub fn phi_value(&self, x: &[f64]) -> Option<f64> {
        match self {
            Atom::Soc { terms, rhs } => {
                let r = rhs.eval(x);
                if r <= 0.0 {
                    return None;
                }
                let q = r * r - terms.iter().map(|e| e.eval(x).powi(2)).sum::<f64>();
                if q <= 0.0 {
                    return None;
                }
                Some(-q.ln())
            }
            _ => {
                if !self.domain_ok(x) {
                    return None;
                }
                let s = -self.violation(x);
                if s <= 0.0 {
                    None
                } else {
                    Some(-s.ln())
                }
            }
        }
    }
}
