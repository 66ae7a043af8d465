//! Constraint atoms: the convex shapes the subproblem builders may emit.
//!
//! Every atom encodes a convex feasible set `g(x) <= 0` together with the
//! log-barrier term and its derivatives. Hessian contributions are reported
//! structurally (rank-one outer products and small dense blocks) so the
//! Newton solver can exploit them.

use super::expr::{AffExpr, SparseVec};

const LN2: f64 = std::f64::consts::LN_2;

/// One structural piece of a barrier Hessian.
#[derive(Debug, Clone)]
pub enum HessPiece {
    /// `coef * vec vec^T`, `coef >= 0`.
    Rank1 { coef: f64, vec: SparseVec },
    /// Dense symmetric block over `vars` (row-major `vars.len()^2`).
    Block { vars: Vec<usize>, mat: Vec<f64> },
}

/// Barrier value, gradient and Hessian structure at a point.
#[derive(Debug, Default)]
pub struct BarrierTerms {
    pub phi: f64,
    pub grad: SparseVec,
    pub pieces: Vec<HessPiece>,
}

/// A convex constraint in one of the supported shapes.
#[derive(Debug, Clone)]
pub enum Atom {
    /// `expr <= 0`.
    Affine { expr: AffExpr },
    /// `|| terms || <= rhs` (second-order cone).
    Soc { terms: Vec<AffExpr>, rhs: AffExpr },
    /// `t <= w * log2(1 + u)`, `w >= 0`.
    LogRate { t: AffExpr, w: f64, u: AffExpr },
    /// `exp(arg) <= t`.
    Exp { t: AffExpr, arg: AffExpr },
    /// `2^x <= t`.
    Pow2 { t: AffExpr, x: AffExpr },
    /// `1/x <= t`, `x > 0`.
    Recip { t: AffExpr, x: AffExpr },
    /// `x^2 / z <= t`, `z > 0`.
    QuadOverLin { t: AffExpr, x: AffExpr, z: AffExpr },
    /// `exp(arg) / f^2 <= t`, `f > 0`.
    ExpMonomial { t: AffExpr, arg: AffExpr, f: AffExpr },
    /// `sum coef * x_i x_j + lin <= 0` with the quadratic part PSD.
    /// Entries `(i, j, coef)` with `i <= j`; off-diagonal entries denote the
    /// full bilinear term `coef * x_i * x_j`.
    ConvexQuadratic { quad: Vec<(usize, usize, f64)>, lin: AffExpr },
    /// `t <= amp * exp(-decay * exp(e0 + e1 * f))`, concave in `f` while
    /// `decay * exp(e0 + e1 f) < 1` (checked by the builder and enforced at
    /// runtime by the domain guard).
    DecayingExp { t: AffExpr, f: AffExpr, amp: f64, decay: f64, e0: f64, e1: f64 },
}

impl Atom {
    /// Self-concordance parameter of the atom's barrier.
    pub fn barrier_param(&self) -> f64 {
        match self {
            Atom::Soc { .. } => 2.0,
            _ => 1.0,
        }
    }

    /// Constraint residual `g(x)`; feasible iff `<= 0`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        match self {
            Atom::Affine { expr } => expr.eval(x),
            Atom::Soc { terms, rhs } => {
                let norm2: f64 = terms.iter().map(|e| e.eval(x).powi(2)).sum();
                norm2.sqrt() - rhs.eval(x)
            }
            Atom::LogRate { t, w, u } => {
                let uu = u.eval(x);
                if uu <= -1.0 {
                    return f64::INFINITY;
                }
                t.eval(x) - w * (1.0 + uu).ln() / LN2
            }
            Atom::Exp { t, arg } => arg.eval(x).exp() - t.eval(x),
            Atom::Pow2 { t, x: xe } => (xe.eval(x) * LN2).exp() - t.eval(x),
            Atom::Recip { t, x: xe } => {
                let v = xe.eval(x);
                if v <= 0.0 {
                    return f64::INFINITY;
                }
                1.0 / v - t.eval(x)
            }
            Atom::QuadOverLin { t, x: xe, z } => {
                let zz = z.eval(x);
                if zz <= 0.0 {
                    return f64::INFINITY;
                }
                xe.eval(x).powi(2) / zz - t.eval(x)
            }
            Atom::ExpMonomial { t, arg, f } => {
                let ff = f.eval(x);
                if ff <= 0.0 {
                    return f64::INFINITY;
                }
                arg.eval(x).exp() / (ff * ff) - t.eval(x)
            }
            Atom::ConvexQuadratic { quad, lin } => {
                let mut acc = lin.eval(x);
                for &(i, j, c) in quad {
                    acc += c * x[i] * x[j];
                }
                acc
            }
            Atom::DecayingExp { t, f, amp, decay, e0, e1 } => {
                let inner = (e0 + e1 * f.eval(x)).exp();
                t.eval(x) - amp * (-decay * inner).exp()
            }
        }
    }

    /// True when the barrier is defined at `x` (strict feasibility plus any
    /// open-domain side conditions).
    pub fn domain_ok(&self, x: &[f64]) -> bool {
        let side = match self {
            Atom::Soc { rhs, .. } => rhs.eval(x) > 0.0,
            Atom::LogRate { u, .. } => u.eval(x) > -1.0,
            Atom::Exp { arg, .. } => arg.eval(x) < 700.0,
            Atom::Pow2 { x: xe, .. } => xe.eval(x) * LN2 < 700.0,
            Atom::Recip { x: xe, .. } => xe.eval(x) > 0.0,
            Atom::QuadOverLin { z, .. } => z.eval(x) > 0.0,
            Atom::ExpMonomial { arg, f, .. } => f.eval(x) > 0.0 && arg.eval(x) < 700.0,
            Atom::DecayingExp { f, decay, e0, e1, .. } => {
                decay * (e0 + e1 * f.eval(x)).exp() < 1.0
            }
            _ => true,
        };
        side && self.violation(x) < 0.0
    }

    /// Barrier value/gradient/Hessian at a strictly feasible point.
    pub fn barrier(&self, x: &[f64]) -> BarrierTerms {
        let mut out = BarrierTerms::default();
        match self {
            Atom::Affine { expr } => {
                let s = -expr.eval(x);
                out.phi = -s.ln();
                out.grad.push_expr(expr, 1.0 / s);
                let mut v = SparseVec::default();
                v.push_expr(expr, 1.0);
                out.pieces.push(HessPiece::Rank1 { coef: 1.0 / (s * s), vec: v });
            }
            Atom::Soc { terms, rhs } => {
                let r = rhs.eval(x);
                let tv: Vec<f64> = terms.iter().map(|e| e.eval(x)).collect();
                let q = r * r - tv.iter().map(|t| t * t).sum::<f64>();
                out.phi = -q.ln();
                // grad q = 2 r grad r - 2 sum t_i grad t_i
                let mut gq = SparseVec::default();
                gq.push_expr(rhs, 2.0 * r);
                for (e, &t) in terms.iter().zip(&tv) {
                    gq.push_expr(e, -2.0 * t);
                }
                gq.compact();
                out.grad.entries.extend(gq.entries.iter().map(|&(i, v)| (i, -v / q)));
                if rhs.is_constant() {
                    // All pieces PSD: (2/q) sum grad t grad t^T + gq gq^T / q^2.
                    for e in terms {
                        let mut v = SparseVec::default();
                        v.push_expr(e, 1.0);
                        out.pieces.push(HessPiece::Rank1 { coef: 2.0 / q, vec: v });
                    }
                    out.pieces.push(HessPiece::Rank1 { coef: 1.0 / (q * q), vec: gq });
                } else {
                    // General cone: assemble the full (indefinite-structured
                    // but PSD-in-total) Hessian as a dense block.
                    let mut vars: Vec<usize> = rhs
                        .terms
                        .iter()
                        .chain(terms.iter().flat_map(|e| e.terms.iter()))
                        .map(|&(i, _)| i)
                        .collect();
                    vars.sort_unstable();
                    vars.dedup();
                    let slot = |i: usize| vars.binary_search(&i).unwrap();
                    let m = vars.len();
                    let mut mat = vec![0.0; m * m];
                    let mut add_outer = |e: &SparseVec, c: f64, mat: &mut [f64]| {
                        for &(i, vi) in &e.entries {
                            for &(j, vj) in &e.entries {
                                mat[slot(i) * m + slot(j)] += c * vi * vj;
                            }
                        }
                    };
                    // -(grad^2 q)/q = (2 sum grad t grad t^T - 2 grad r grad r^T)/q
                    for e in terms {
                        let mut v = SparseVec::default();
                        v.push_expr(e, 1.0);
                        v.compact();
                        add_outer(&v, 2.0 / q, &mut mat);
                    }
                    let mut vr = SparseVec::default();
                    vr.push_expr(rhs, 1.0);
                    vr.compact();
                    add_outer(&vr, -2.0 / q, &mut mat);
                    add_outer(&gq, 1.0 / (q * q), &mut mat);
                    out.pieces.push(HessPiece::Block { vars, mat });
                }
            }
            Atom::LogRate { t, w, u } => {
                let uu = u.eval(x);
                let s = w * (1.0 + uu).ln() / LN2 - t.eval(x);
                out.phi = -s.ln();
                let du = w / ((1.0 + uu) * LN2);
                let mut g = SparseVec::default();
                g.push_expr(t, 1.0);
                g.push_expr(u, -du);
                g.compact();
                out.grad.entries.extend(g.entries.iter().map(|&(i, v)| (i, v / s)));
                let mut vu = SparseVec::default();
                vu.push_expr(u, 1.0);
                out.pieces.push(HessPiece::Rank1 {
                    coef: w / ((1.0 + uu) * (1.0 + uu) * LN2 * s),
                    vec: vu,
                });
                out.pieces.push(HessPiece::Rank1 { coef: 1.0 / (s * s), vec: g });
            }
            Atom::Exp { t, arg } | Atom::Pow2 { t, x: arg } => {
                let scale = if matches!(self, Atom::Pow2 { .. }) { LN2 } else { 1.0 };
                let a = arg.eval(x) * scale;
                let ea = a.exp();
                let s = t.eval(x) - ea;
                out.phi = -s.ln();
                let mut g = SparseVec::default();
                g.push_expr(arg, ea * scale);
                g.push_expr(t, -1.0);
                g.compact();
                out.grad.entries.extend(g.entries.iter().map(|&(i, v)| (i, v / s)));
                let mut va = SparseVec::default();
                va.push_expr(arg, scale);
                out.pieces.push(HessPiece::Rank1 { coef: ea / s, vec: va });
                out.pieces.push(HessPiece::Rank1 { coef: 1.0 / (s * s), vec: g });
            }
            Atom::Recip { t, x: xe } => {
                let v = xe.eval(x);
                let s = t.eval(x) - 1.0 / v;
                out.phi = -s.ln();
                let mut g = SparseVec::default();
                g.push_expr(xe, -1.0 / (v * v));
                g.push_expr(t, -1.0);
                g.compact();
                out.grad.entries.extend(g.entries.iter().map(|&(i, gv)| (i, gv / s)));
                let mut vx = SparseVec::default();
                vx.push_expr(xe, 1.0);
                out.pieces.push(HessPiece::Rank1 { coef: 2.0 / (v * v * v * s), vec: vx });
                out.pieces.push(HessPiece::Rank1 { coef: 1.0 / (s * s), vec: g });
            }
            Atom::QuadOverLin { t, x: xe, z } => {
                let xv = xe.eval(x);
                let zv = z.eval(x);
                let s = t.eval(x) - xv * xv / zv;
                out.phi = -s.ln();
                let mut g = SparseVec::default();
                g.push_expr(xe, 2.0 * xv / zv);
                g.push_expr(z, -xv * xv / (zv * zv));
                g.push_expr(t, -1.0);
                g.compact();
                out.grad.entries.extend(g.entries.iter().map(|&(i, gv)| (i, gv / s)));
                let mut u = SparseVec::default();
                u.push_expr(xe, 1.0);
                u.push_expr(z, -xv / zv);
                u.compact();
                out.pieces.push(HessPiece::Rank1 { coef: 2.0 / (zv * s), vec: u });
                out.pieces.push(HessPiece::Rank1 { coef: 1.0 / (s * s), vec: g });
            }
            Atom::ExpMonomial { t, arg, f } => {
                let fv = f.eval(x);
                let e = arg.eval(x).exp() / (fv * fv);
                let s = t.eval(x) - e;
                out.phi = -s.ln();
                let mut g = SparseVec::default();
                g.push_expr(arg, e);
                g.push_expr(f, -2.0 * e / fv);
                g.push_expr(t, -1.0);
                g.compact();
                out.grad.entries.extend(g.entries.iter().map(|&(i, gv)| (i, gv / s)));
                let mut u = SparseVec::default();
                u.push_expr(arg, 1.0);
                u.push_expr(f, -2.0 / fv);
                u.compact();
                out.pieces.push(HessPiece::Rank1 { coef: e / s, vec: u });
                let mut vf = SparseVec::default();
                vf.push_expr(f, 1.0);
                out.pieces.push(HessPiece::Rank1 { coef: 2.0 * e / (fv * fv * s), vec: vf });
                out.pieces.push(HessPiece::Rank1 { coef: 1.0 / (s * s), vec: g });
            }
            Atom::ConvexQuadratic { quad, lin } => {
                let s = -self.violation(x);
                out.phi = -s.ln();
                let mut g = SparseVec::default();
                g.push_expr(lin, 1.0);
                for &(i, j, c) in quad {
                    if i == j {
                        g.push(i, 2.0 * c * x[i]);
                    } else {
                        g.push(i, c * x[j]);
                        g.push(j, c * x[i]);
                    }
                }
                g.compact();
                out.grad.entries.extend(g.entries.iter().map(|&(i, gv)| (i, gv / s)));
                let mut vars: Vec<usize> = quad
                    .iter()
                    .flat_map(|&(i, j, _)| [i, j])
                    .collect();
                vars.sort_unstable();
                vars.dedup();
                let slot = |i: usize| vars.binary_search(&i).unwrap();
                let m = vars.len();
                let mut mat = vec![0.0; m * m];
                for &(i, j, c) in quad {
                    if i == j {
                        mat[slot(i) * m + slot(i)] += 2.0 * c / s;
                    } else {
                        mat[slot(i) * m + slot(j)] += c / s;
                        mat[slot(j) * m + slot(i)] += c / s;
                    }
                }
                out.pieces.push(HessPiece::Block { vars, mat });
                out.pieces.push(HessPiece::Rank1 { coef: 1.0 / (s * s), vec: g });
            }
            Atom::DecayingExp { t, f, amp, decay, e0, e1 } => {
                let inner = (e0 + e1 * f.eval(x)).exp();
                let h = amp * (-decay * inner).exp();
                let s = h - t.eval(x);
                out.phi = -s.ln();
                let dh = -decay * e1 * inner * h;
                let mut g = SparseVec::default();
                g.push_expr(t, 1.0);
                g.push_expr(f, -dh);
                g.compact();
                out.grad.entries.extend(g.entries.iter().map(|&(i, gv)| (i, gv / s)));
                // -h'' = decay e1^2 inner h (1 - decay inner) >= 0 in-domain.
                let mut vf = SparseVec::default();
                vf.push_expr(f, 1.0);
                out.pieces.push(HessPiece::Rank1 {
                    coef: decay * e1 * e1 * inner * h * (1.0 - decay * inner) / s,
                    vec: vf,
                });
                out.pieces.push(HessPiece::Rank1 { coef: 1.0 / (s * s), vec: g });
            }
        }
        out
    }
}
