//! The overlap coefficients `R_r(x,y)` (Krawtchouk side) and `P_r(x,y)`
//! (Al-Salam–Chihara side): inner-product and closed-form evaluation,
//! biorthogonality, and the three-term generalized eigenvalue recurrences.
//!
//! Both closed forms are instances of the `₃φ₂ × ₃φ₂ → ₄φ₃` summation with
//! parameters `(a, b², c², bcd)` in base `q²`:
//! `R_r` uses `(q^{−2N}, −q^{2s}, −q^{2t}, −q^{s+t−v+1})` and
//! `P_r` uses `(q^{2k}, q^{2s}, q^{2t}, q^{s+t−v+1})`.

use itertools::Itertools;

use crate::error::{out_of_range, QError, Result};
use crate::orthopoly::{
    asc, asc_big_w, asc_d_coeffs, asc_diff_coeffs, asc_w, kraw, kraw_b_coeffs, kraw_big_w, kraw_diff_coeffs,
    kraw_w, shifted_sum, AscParams, KrawParams,
};
use crate::qseries::{
    certified_recip, lemma21_lhs, lemma21_lhs_regular, product_error, Certified, SeriesSum, SumRange, SummationParams, TailBound,
};
use crate::scalar::{Exponent, HalfInt, QBase, Scalar};

/// Parameters of `R_r(x, y; s, t, v, N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RrParams<E> {
    pub s: E,
    pub t: E,
    pub v: E,
    pub n_max: u32,
}

/// Parameters of `P_r(x, y; s, t, v, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrParams<E> {
    pub s: E,
    pub t: E,
    pub v: E,
    pub k: E,
}

/// Which index a biorthogonality sum runs over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SumOver {
    X,
    Y,
}

/// `−v̄ − 2`, the biorthogonal partner of `v`.
pub fn partner<E: Exponent>(v: &E) -> E {
    -v.conj() - E::int(2)
}

fn delta<S: Scalar>(a: u32, b: u32) -> S {
    if a == b {
        S::one()
    } else {
        S::zero()
    }
}

/// `q^{s+t−v+1}` without the sign.
fn stv<S: Scalar>(qb: &QBase<S>, s: &S::Exp, t: &S::Exp, v: &S::Exp) -> S {
    qb.mono(HalfInt::int(1), &[(1, s), (1, t), (-1, v)])
}

/// Summation parameters of the `R_r` closed form, in base `q²`.
pub fn rr_summation<S: Scalar>(qb: &QBase<S>, rp: &RrParams<S::Exp>) -> SummationParams<S> {
    SummationParams {
        a: qb.qpow_int(-2 * rp.n_max as i64),
        b2: -qb.qpow(&rp.s.times(2)),
        c2: -qb.qpow(&rp.t.times(2)),
        bcd: -stv(qb, &rp.s, &rp.t, &rp.v),
    }
}

/// `Σ_n k_{1,s}(n,x) · conj(k_{v,t}(n,y)) · w(n)`.
pub fn rr_inner<S: Scalar>(qb: &QBase<S>, rp: &RrParams<S::Exp>, x: u32, y: u32) -> Result<S> {
    let left = KrawParams { u: S::Exp::int(1), s: rp.s.clone(), n_max: rp.n_max };
    let right = KrawParams { u: rp.v.clone(), s: rp.t.clone(), n_max: rp.n_max };
    let mut sum = S::zero();
    for n in 0..=rp.n_max {
        sum = sum + kraw(qb, &left, n, x)? * kraw(qb, &right, n, y)?.conj() * kraw_w(qb, n, rp.n_max)?;
    }
    Ok(sum)
}

/// Scans `(b; base)_j` for `j ≤ reach` and names the offending parameter.
fn scan_pole<S: Scalar>(label: &str, b: &S, base: &S, reach: u32) -> Result<()> {
    let mut x = b.clone();
    for j in 0..reach {
        if (S::one() - x.clone()).is_negligible(1.0) {
            return Err(QError::DenominatorPole(format!("{label} hits q^{{-2j}} at j = {j}")));
        }
        x = x * base.clone();
    }
    Ok(())
}

/// Closed form of `R_r` as a `₄φ₃`, evaluated literally; removable
/// singularities are reported as `DenominatorPole`.
pub fn rr_closed<S: Scalar>(qb: &QBase<S>, rp: &RrParams<S::Exp>, x: u32, y: u32) -> Result<S> {
    let (s, t, v) = (&rp.s, &rp.t, &rp.v);
    let (yi, bn) = (y as i64, rp.n_max as i64);
    if x > rp.n_max || y > rp.n_max {
        return Err(out_of_range(format!("(x, y) = ({x}, {y}) outside 0..={}", rp.n_max)));
    }
    let q2 = qb.qpow_int(2);
    let m = |c: i64, ms: i64, mt: i64, mv: i64| qb.mono(HalfInt::from_twice(c), &[(ms, s), (mt, t), (mv, v)]);
    scan_pole("-q^{2s+2}", &-m(4, 2, 0, 0), &q2, x)?;
    scan_pole("q^{-2y+s-t-v+1}", &m(2 - 4 * yi, 1, -1, -1), &q2, x)?;
    scan_pole("-q^{2y+s+t-2N-v+1}", &-m(4 * yi - 4 * bn + 2, 1, 1, -1), &q2, x)?;
    scan_pole("-q^{s+t-2N-v+1}", &-m(2 - 4 * bn, 1, 1, -1), &q2, y)?;
    let range = SumRange::Terminating(rp.n_max);
    Ok(lemma21_lhs(x, y, &rr_summation(qb, rp), &q2, &range)?.value)
}

/// Closed form of `R_r` with removable singularities cancelled; defined on all of `{0..N}²`.
pub fn rr_closed_regular<S: Scalar>(qb: &QBase<S>, rp: &RrParams<S::Exp>, x: u32, y: u32) -> Result<S> {
    let range = SumRange::Terminating(rp.n_max);
    Ok(lemma21_lhs_regular(x, y, &rr_summation(qb, rp), &qb.qpow_int(2), &range)?.value)
}

/// Residual of the biorthogonality of `R_r(·,·;v)` against `R_r(·,·;−v̄−2)`.
///
/// Over `x`: `Σ_x R(x,y;v) conj(R(x,y';v')) W(x,s;q⁻¹) − δ_{yy'}/W(y,t;q⁻¹)`;
/// over `y`: `Σ_y R(x,y;v) conj(R(x',y;v')) W(y,t;q⁻¹) − δ_{xx'}/W(x,s;q⁻¹)`.
pub fn rr_biorth_residual<S: Scalar>(
    qb: &QBase<S>,
    rp: &RrParams<S::Exp>,
    over: SumOver,
    i: u32,
    i2: u32,
) -> Result<S> {
    let dual = RrParams { v: partner(&rp.v), ..rp.clone() };
    let bn = rp.n_max;
    let mut sum = S::zero();
    for z in 0..=bn {
        let term = match over {
            SumOver::X => {
                rr_inner(qb, rp, z, i)?
                    * rr_inner(qb, &dual, z, i2)?.conj()
                    * kraw_big_w(qb, z, &rp.s, bn, true)?
            }
            SumOver::Y => {
                rr_inner(qb, rp, i, z)?
                    * rr_inner(qb, &dual, i2, z)?.conj()
                    * kraw_big_w(qb, z, &rp.t, bn, true)?
            }
        };
        sum = sum + term;
    }
    let weight = match over {
        SumOver::X => kraw_big_w(qb, i, &rp.t, bn, true)?,
        SumOver::Y => kraw_big_w(qb, i, &rp.s, bn, true)?,
    };
    Ok(sum - delta::<S>(i, i2) / weight)
}

/// Residual of
/// `[2x−N+s] Σ_ε a_ε R(x,y+ε) = Σ_ε b_ε R(x,y+ε) + [s] R(x,y)`.
pub fn rr_gevp_residual<S: Scalar>(qb: &QBase<S>, rp: &RrParams<S::Exp>, x: u32, y: u32) -> Result<S> {
    let bn = rp.n_max;
    let a = kraw_diff_coeffs(qb, y, &rp.t, bn)?;
    let b = kraw_b_coeffs(qb, y, &rp.t, &rp.v, bn)?;
    let r = |yy: u32| rr_closed_regular(qb, rp, x, yy);
    let lam = qb.qbracket(&(S::Exp::int(2 * x as i64 - bn as i64) + rp.s.clone()));
    let lhs = lam * shifted_sum(a.iter(), y, Some(bn), r)?;
    let rhs = shifted_sum(b.iter(), y, Some(bn), r)? + qb.qbracket(&rp.s) * r(y)?;
    Ok(lhs - rhs)
}

/// Summation parameters of the `P_r` closed form, in base `q²`.
pub fn pr_summation<S: Scalar>(qb: &QBase<S>, pp: &PrParams<S::Exp>) -> SummationParams<S> {
    SummationParams {
        a: qb.qpow(&pp.k.times(2)),
        b2: qb.qpow(&pp.s.times(2)),
        c2: qb.qpow(&pp.t.times(2)),
        bcd: stv(qb, &pp.s, &pp.t, &pp.v),
    }
}

fn pr_check_convergence<E: Exponent>(pp: &PrParams<E>) -> Result<()> {
    let (s, t, v) = (pp.s.real_part(), pp.t.real_part(), pp.v.real_part());
    if v.is_nan() || v >= 1.0 + s + t {
        return Err(QError::NonConvergent(format!(
            "P_r needs Re(v) < 1 + s + t, got v = {v}, s + t = {}",
            s + t
        )));
    }
    Ok(())
}

fn check_below_one<S: Scalar>(qb: &QBase<S>) -> Result<()> {
    if !qb.below_one() {
        return Err(QError::NonConvergent("the Al-Salam–Chihara side needs 0 < q < 1".into()));
    }
    Ok(())
}

/// `Σ_n φ_{1,s}(n,x) · conj(φ_{v,t}(n,y)) · w_k(n)`, truncated with a tail certificate.
pub fn pr_inner<S: Scalar>(
    qb: &QBase<S>,
    pp: &PrParams<S::Exp>,
    x: u32,
    y: u32,
    tb: &TailBound,
) -> Result<Certified<S>> {
    check_below_one(qb)?;
    pr_check_convergence(pp)?;
    let left = AscParams { u: S::Exp::int(1), s: pp.s.clone(), k: pp.k.clone() };
    let right = AscParams { u: pp.v.clone(), s: pp.t.clone(), k: pp.k.clone() };
    let mut acc = SeriesSum::new(*tb);
    for n in 0..tb.max_terms as u32 {
        let term = asc(qb, &left, n, x)? * asc(qb, &right, n, y)?.conj() * asc_w(qb, n, &pp.k)?;
        if let Some(done) = acc.push(term)? {
            return Ok(done);
        }
    }
    acc.give_up()
}

/// Closed form of `P_r` as a `₄φ₃`, evaluated literally.
pub fn pr_closed<S: Scalar>(
    qb: &QBase<S>,
    pp: &PrParams<S::Exp>,
    x: u32,
    y: u32,
    tb: &TailBound,
) -> Result<Certified<S>> {
    check_below_one(qb)?;
    pr_check_convergence(pp)?;
    let (s, t, v, k) = (&pp.s, &pp.t, &pp.v, &pp.k);
    let yi = y as i64;
    let q2 = qb.qpow_int(2);
    let m = |c: i64, ms: i64, mt: i64, mv: i64, mk: i64| {
        qb.mono(HalfInt::from_twice(c), &[(ms, s), (mt, t), (mv, v), (mk, k)])
    };
    scan_pole("q^{2s+2}", &m(4, 2, 0, 0, 0), &q2, x)?;
    scan_pole("q^{-2y+s-t-v+1}", &m(2 - 4 * yi, 1, -1, -1, 0), &q2, x)?;
    scan_pole("q^{2y+s+t+2k-v+1}", &m(4 * yi + 2, 1, 1, -1, 2), &q2, x)?;
    scan_pole("q^{s+t+2k-v+1}", &m(2, 1, 1, -1, 2), &q2, y)?;
    scan_pole("q^{2k}", &m(0, 0, 0, 0, 2), &q2, x)?;
    lemma21_lhs(x, y, &pr_summation(qb, pp), &q2, &SumRange::Convergent(*tb))
}

/// Closed form of `P_r` with removable singularities cancelled. Exact for
/// integer `k`, where the infinite Pochhammer ratio is a finite product.
pub fn pr_closed_regular<S: Scalar>(
    qb: &QBase<S>,
    pp: &PrParams<S::Exp>,
    x: u32,
    y: u32,
    tb: &TailBound,
) -> Result<Certified<S>> {
    check_below_one(qb)?;
    pr_check_convergence(pp)?;
    lemma21_lhs_regular(x, y, &pr_summation(qb, pp), &qb.qpow_int(2), &SumRange::Convergent(*tb))
}

/// Residual of the biorthogonality of `P_r(·,·;v)` against `P_r(·,·;−v̄−2)`,
/// with weights `W_k`; the outer sum is truncated by the tail certificate.
pub fn pr_biorth_residual<S: Scalar>(
    qb: &QBase<S>,
    pp: &PrParams<S::Exp>,
    over: SumOver,
    i: u32,
    i2: u32,
    tb: &TailBound,
) -> Result<Certified<S>> {
    Ok(pr_biorth_block(qb, pp, over, &[i], &[i2], tb)?.remove(0).remove(0))
}

/// [`pr_biorth_residual`] for every pair of `left × right`, sharing the
/// evaluations of each column.
pub fn pr_biorth_block<S: Scalar>(
    qb: &QBase<S>,
    pp: &PrParams<S::Exp>,
    over: SumOver,
    left: &[u32],
    right: &[u32],
    tb: &TailBound,
) -> Result<Vec<Vec<Certified<S>>>> {
    let (s, t, v) = (pp.s.real_part(), pp.t.real_part(), pp.v.real_part());
    if v.is_nan() || (v + 1.0).abs() >= 2.0 + s + t {
        return Err(QError::NonConvergent(format!(
            "biorthogonality needs |Re(v) + 1| < 2 + s + t, got v = {v}, s + t = {}",
            s + t
        )));
    }
    let dual = PrParams { v: partner(&pp.v), ..pp.clone() };
    let eval = |p: &PrParams<S::Exp>, z: u32, i: u32| match over {
        SumOver::X => pr_closed_regular(qb, p, z, i, tb),
        SumOver::Y => pr_closed_regular(qb, p, i, z, tb),
    };
    let (wz_base, wi_base) = match over {
        SumOver::X => (&pp.s, &pp.t),
        SumOver::Y => (&pp.t, &pp.s),
    };
    let pairs = left.len() * right.len();
    let mut accs = vec![SeriesSum::new(*tb); pairs];
    let mut inner_err = vec![0.0; pairs];
    let mut done: Vec<Option<Certified<S>>> = vec![None; pairs];
    for z in 0..tb.max_terms as u32 {
        let w = asc_big_w(qb, z, wz_base, &pp.k, tb)?;
        let ps: Vec<_> = left.iter().map(|&i| eval(pp, z, i)).collect::<Result<_>>()?;
        let ds: Vec<_> = right.iter().map(|&i| eval(&dual, z, i)).collect::<Result<_>>()?;
        for (n, (p1, p2)) in ps.iter().cartesian_product(&ds).enumerate() {
            if done[n].is_some() {
                continue;
            }
            let term = p1.value.clone() * p2.value.conj() * w.value.clone();
            inner_err[n] += product_error(&[p1, p2, &w]);
            done[n] = accs[n].push(term)?;
        }
        if done.iter().all(Option::is_some) {
            break;
        }
    }
    let mut out = Vec::with_capacity(left.len());
    let mut cells = done.into_iter().zip(inner_err);
    for &i in left {
        let mut row = Vec::with_capacity(right.len());
        for &i2 in right {
            let (sum, err) = cells.next().expect("one cell per pair");
            let sum = sum.map_or_else(|| SeriesSum::<S>::new(*tb).give_up(), Ok)?;
            let target = if i == i2 {
                certified_recip(&asc_big_w(qb, i, wi_base, &pp.k, tb)?)?
            } else {
                Certified::exact(S::zero(), 0)
            };
            row.push(Certified {
                value: sum.value - target.value,
                error_bound: sum.error_bound + err + target.error_bound,
                terms: sum.terms,
            });
        }
        out.push(row);
    }
    Ok(out)
}

/// Residual of
/// `⟦2x+k+s⟧ Σ_ε c_ε P(x,y+ε) = Σ_ε d_ε P(x,y+ε) + ⟦s⟧ P(x,y)`.
pub fn pr_gevp_residual<S: Scalar>(
    qb: &QBase<S>,
    pp: &PrParams<S::Exp>,
    x: u32,
    y: u32,
    tb: &TailBound,
) -> Result<Certified<S>> {
    let c = asc_diff_coeffs(qb, y, &pp.t, &pp.k)?;
    let d = asc_d_coeffs(qb, y, &pp.t, &pp.v, &pp.k)?;
    let mut vals = Vec::with_capacity(3);
    for eps in -1i64..=1 {
        let yy = y as i64 + eps;
        vals.push(if yy < 0 { None } else { Some(pr_closed_regular(qb, pp, x, yy as u32, tb)?) });
    }
    let get = |yy: u32| -> Result<S> {
        let idx = (yy as i64 - y as i64 + 1) as usize;
        vals[idx]
            .as_ref()
            .map(|c| c.value.clone())
            .ok_or_else(|| QError::Internal("shift below zero was not skipped".into()))
    };
    let lam = qb.qbrace_su11(&(S::Exp::int(2 * x as i64) + pp.k.clone() + pp.s.clone()));
    let lhs = lam.clone() * shifted_sum(c.iter(), y, None, get)?;
    let rhs = shifted_sum(d.iter(), y, None, get)? + qb.qbrace_su11(&pp.s) * get(y)?;
    let coeff_scale = lam.magnitude()
        * c.iter().map(|(_, x)| x.magnitude()).sum::<f64>()
        + d.iter().map(|(_, x)| x.magnitude()).sum::<f64>()
        + qb.qbrace_su11(&pp.s).magnitude();
    let err = vals.iter().flatten().map(|c| c.error_bound).fold(0.0, f64::max) * coeff_scale;
    Ok(Certified { value: lhs - rhs, error_bound: err, terms: 0 })
}
