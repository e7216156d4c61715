//! q⁻¹-Krawtchouk and q⁻¹-Al-Salam–Chihara polynomials, their weights and
//! orthogonality, and the coefficient tables that transfer multiplication by
//! `K²` (plain and with a shifted parameter) to three-term actions in `y`.

use crate::error::{out_of_range, QError, Result};
use crate::qseries::{qbinom, qpoch, qpoch_ratio_inf, rphis, scale_bound, Certified, PhiSpec, SeriesSum, TailBound};
use crate::scalar::{Exponent, HalfInt, QBase, Scalar};

/// Parameters of `k_{u,s}(n, x; N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrawParams<E> {
    pub u: E,
    pub s: E,
    pub n_max: u32,
}

/// Parameters of `φ_{u,s}(n, x; k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AscParams<E> {
    pub u: E,
    pub s: E,
    pub k: E,
}

/// Coefficients indexed by a shift `ε ∈ {−1, 0, 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffTriple<S> {
    pub minus: S,
    pub zero: S,
    pub plus: S,
}

impl<S> CoeffTriple<S> {
    pub fn get(&self, eps: i32) -> Option<&S> {
        match eps {
            -1 => Some(&self.minus),
            0 => Some(&self.zero),
            1 => Some(&self.plus),
            _ => None,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, &S)> {
        [(-1, &self.minus), (0, &self.zero), (1, &self.plus)].into_iter()
    }
}

/// Direction of the parameter shift in the dynamical identities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Shift {
    /// `t ↦ t + 2`, paired with `ε ∈ {−2, −1, 0}`.
    Up,
    /// `t ↦ t − 2`, paired with `ε ∈ {0, 1, 2}`.
    Down,
}

impl Shift {
    pub fn delta(self) -> i64 {
        match self {
            Shift::Up => 2,
            Shift::Down => -2,
        }
    }

    pub fn from_delta(delta: i64) -> Option<Self> {
        match delta {
            2 => Some(Shift::Up),
            -2 => Some(Shift::Down),
            _ => None,
        }
    }

    fn first_eps(self) -> i32 {
        match self {
            Shift::Up => -2,
            Shift::Down => 0,
        }
    }
}

/// Three coefficients `c_{ε,δ}` for one shift direction `δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffShift<S> {
    pub shift: Shift,
    pub coeffs: [S; 3],
}

impl<S> CoeffShift<S> {
    pub fn get(&self, eps: i32) -> Option<&S> {
        let i = eps - self.shift.first_eps();
        (0..3).contains(&i).then(|| &self.coeffs[i as usize])
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, &S)> {
        let e0 = self.shift.first_eps();
        self.coeffs.iter().enumerate().map(move |(i, c)| (e0 + i as i32, c))
    }
}

fn check_index(what: &str, v: u32, max: u32) -> Result<()> {
    if v > max {
        return Err(out_of_range(format!("{what} = {v} exceeds N = {max}")));
    }
    Ok(())
}

fn frac<S: Scalar>(num: S, den: S, what: &str) -> Result<S> {
    if den.is_negligible(1.0) {
        return Err(QError::DenominatorPole(format!("denominator of {what} vanishes")));
    }
    Ok(num / den)
}

/// `q^(c + m·t)`.
fn qt<S: Scalar>(qb: &QBase<S>, c: i64, m: i64, t: &S::Exp) -> S {
    qb.mono(HalfInt::int(c), &[(m, t)])
}

fn one<S: Scalar>() -> S {
    S::one()
}

/// `k_{u,s}(n, x; N) = (−1)^n q^{n(s−u−N/2+1/2)} ₃φ₂(q^{2n}, q^{2x}, −q^{−2x−2s+2N}; q^{2N}, 0 | q⁻², q⁻²)`.
pub fn kraw<S: Scalar>(qb: &QBase<S>, kp: &KrawParams<S::Exp>, n: u32, x: u32) -> Result<S> {
    let big_n = kp.n_max;
    check_index("n", n, big_n)?;
    check_index("x", x, big_n)?;
    let (n, x, bn) = (n as i64, x as i64, big_n as i64);
    let e = (kp.s.clone() - kp.u.clone()).times(n) + S::Exp::half(HalfInt::from_twice(n * (1 - bn)));
    let mut pre = qb.qpow(&e);
    if n % 2 == 1 {
        pre = -pre;
    }
    let spec = PhiSpec::new(
        vec![qb.qpow_int(2 * n), qb.qpow_int(2 * x), -qt(qb, 2 * bn - 2 * x, -2, &kp.s)],
        vec![qb.qpow_int(2 * bn), S::zero()],
        qb.qpow_int(-2),
        qb.qpow_int(-2),
    );
    Ok(pre * rphis(&spec)?)
}

/// `w(n) = q^{n(n−N)} [N choose n]_{q²}`.
pub fn kraw_w<S: Scalar>(qb: &QBase<S>, n: u32, big_n: u32) -> Result<S> {
    check_index("n", n, big_n)?;
    let (n, bn) = (n as i64, big_n as i64);
    Ok(qb.qpow_int(n * (n - bn)) * qbinom(bn, n, &qb.qpow_int(2))?)
}

/// The dual weight `W(x, s; q)`, or `W(x, s; q⁻¹)` when `inverse_base` is set.
pub fn kraw_big_w<S: Scalar>(qb: &QBase<S>, x: u32, s: &S::Exp, big_n: u32, inverse_base: bool) -> Result<S> {
    check_index("x", x, big_n)?;
    let b = if inverse_base { qb.inverse() } else { qb.clone() };
    let (xi, bn) = (x as i64, big_n as i64);
    let q2 = b.qpow_int(2);
    let num = (one::<S>() + qt(&b, 4 * xi - 2 * bn, 2, s))
        * qpoch(&-qt(&b, -2 * bn, 2, s), &q2, x as usize)
        * qt(&b, -xi * (1 + xi - 2 * bn), -2 * xi, s)
        * qbinom(bn, xi, &q2)?;
    let den = (one::<S>() + qt(&b, -2 * bn, 2, s))
        * qpoch(&-qt(&b, 2, 2, s), &q2, x as usize)
        * qpoch(&-qt(&b, 0, -2, s), &q2, big_n as usize);
    frac(num, den, "W(x,s)")
}

fn delta<S: Scalar>(a: u32, b: u32) -> S {
    if a == b {
        S::one()
    } else {
        S::zero()
    }
}

/// `Σ_n k_{0,s}(n,x) k̄_{0,s}(n,x') w(n) − δ_{xx'}/W(x,s;q⁻¹)`.
pub fn kraw_orth_n<S: Scalar>(qb: &QBase<S>, s: &S::Exp, big_n: u32, x: u32, x2: u32) -> Result<S> {
    let kp = KrawParams { u: S::Exp::int(0), s: s.clone(), n_max: big_n };
    let mut sum = S::zero();
    for n in 0..=big_n {
        sum = sum + kraw(qb, &kp, n, x)? * kraw(qb, &kp, n, x2)?.conj() * kraw_w(qb, n, big_n)?;
    }
    let target = if x == x2 { S::one() / kraw_big_w(qb, x, s, big_n, true)? } else { S::zero() };
    Ok(sum - target)
}

/// `Σ_x k_{0,s}(n,x) k̄_{0,s}(n',x) W(x,s;q⁻¹) − δ_{nn'}/w(n)`.
pub fn kraw_orth_x<S: Scalar>(qb: &QBase<S>, s: &S::Exp, big_n: u32, n: u32, n2: u32) -> Result<S> {
    let kp = KrawParams { u: S::Exp::int(0), s: s.clone(), n_max: big_n };
    let mut sum = S::zero();
    for x in 0..=big_n {
        sum = sum + kraw(qb, &kp, n, x)? * kraw(qb, &kp, n2, x)?.conj() * kraw_big_w(qb, x, s, big_n, true)?;
    }
    let target = S::one() / kraw_w(qb, n, big_n)? * delta::<S>(n, n2);
    Ok(sum - target)
}

/// `a_{−1}, a_0, a_1` with `q^{2n−N} k_{v,t}(n,y) = Σ_ε a_ε(y,t) k_{v,t}(n,y+ε)`.
pub fn kraw_diff_coeffs<S: Scalar>(qb: &QBase<S>, y: u32, t: &S::Exp, big_n: u32) -> Result<CoeffTriple<S>> {
    check_index("y", y, big_n)?;
    let (y, bn) = (y as i64, big_n as i64);
    let q = |c: i64, m: i64| qt(qb, c, m, t);
    let o = one::<S>;
    let minus = -frac(
        q(-4 * y + 3 * bn + 2, -2) * (o() - q(-2 * y, 0)) * (o() + q(-2 * y, -2)),
        (o() + q(-4 * y + 2 * bn + 2, -2)) * (o() + q(-4 * y + 2 * bn, -2)),
        "a_-1",
    )?;
    let plus = frac(
        q(-bn, 0) * (o() - q(-2 * y + 2 * bn, 0)) * (o() + q(-2 * y + 2 * bn, -2)),
        (o() + q(-4 * y + 2 * bn, -2)) * (o() + q(-4 * y + 2 * bn - 2, -2)),
        "a_1",
    )?;
    let zero = q(-bn, 0) - minus.clone() - plus.clone();
    Ok(CoeffTriple { minus, zero, plus })
}

/// `b_{−1}, b_0, b_1` with
/// `[π_N(X_{0,s}) k_{v,t}(·,y)](n) = b_{−1}k(n,y−1) + (b_0 + [s]) k(n,y) + b_1 k(n,y+1)`.
pub fn kraw_b_coeffs<S: Scalar>(
    qb: &QBase<S>,
    y: u32,
    t: &S::Exp,
    v: &S::Exp,
    big_n: u32,
) -> Result<CoeffTriple<S>> {
    let a = kraw_diff_coeffs(qb, y, t, big_n)?;
    let h = S::Exp::int(2 * y as i64 - big_n as i64) + t.clone();
    let bv = qb.qbrace(v);
    Ok(CoeffTriple {
        minus: a.minus * qb.qbracket(&(h.clone() + v.clone() - S::Exp::int(1))),
        zero: a.zero * qb.qbracket(&h) * bv.clone() - qb.qbracket(t) * bv,
        plus: a.plus * qb.qbracket(&(h - v.clone() + S::Exp::int(1))),
    })
}

/// `a_{ε,δ}` with `q^{2n−N} k_{v,t}(n,y) = Σ_ε a_{ε,δ}(y,t) k_{v,t+δ}(n,y+ε)`.
pub fn kraw_dyn_coeffs<S: Scalar>(
    qb: &QBase<S>,
    y: u32,
    t: &S::Exp,
    big_n: u32,
    shift: Shift,
) -> Result<CoeffShift<S>> {
    check_index("y", y, big_n)?;
    let (y, bn) = (y as i64, big_n as i64);
    let q = |c: i64, m: i64| qt(qb, c, m, t);
    let o = one::<S>;
    let qn = q(-bn, 0);
    let q2 = o() + qb.qpow_int(2);
    let coeffs = match shift {
        Shift::Up => [
            frac(
                qn.clone() * (o() - q(2 * y, 0)) * (o() - q(2 * y - 2, 0)),
                (o() + q(4 * y - 2 * bn, 2)) * (o() + q(4 * y - 2 * bn - 2, 2)),
                "a_-2,2",
            )?,
            frac(
                qn.clone() * q2 * (o() - q(2 * y, 0)) * (o() + q(2 * bn - 2 * y, -2)),
                (o() + q(4 * y - 2 * bn + 2, 2)) * (o() + q(2 * bn - 4 * y + 2, -2)),
                "a_-1,2",
            )?,
            frac(
                qn * (o() + q(2 * bn - 2 * y, -2)) * (o() + q(2 * bn - 2 * y - 2, -2)),
                (o() + q(2 * bn - 4 * y, -2)) * (o() + q(2 * bn - 4 * y - 2, -2)),
                "a_0,2",
            )?,
        ],
        Shift::Down => [
            frac(
                qn.clone() * (o() + q(2 * y, 2)) * (o() + q(2 * y - 2, 2)),
                (o() + q(4 * y - 2 * bn, 2)) * (o() + q(4 * y - 2 * bn - 2, 2)),
                "a_0,-2",
            )?,
            frac(
                qn.clone() * q2 * (o() - q(2 * bn - 2 * y, 0)) * (o() + q(2 * y, 2)),
                (o() + q(2 * bn - 4 * y + 2, -2)) * (o() + q(4 * y - 2 * bn + 2, 2)),
                "a_1,-2",
            )?,
            frac(
                qn * (o() - q(2 * bn - 2 * y, 0)) * (o() - q(2 * bn - 2 * y - 2, 0)),
                (o() + q(2 * bn - 4 * y, -2)) * (o() + q(2 * bn - 4 * y - 2, -2)),
                "a_2,-2",
            )?,
        ],
    };
    Ok(CoeffShift { shift, coeffs })
}

/// `Σ_ε c_ε f(y+ε)`, skipping shifts that leave `0..=y_max`; a skipped shift
/// must carry a zero coefficient.
pub(crate) fn shifted_sum<'a, S: Scalar>(
    terms: impl Iterator<Item = (i32, &'a S)>,
    y: u32,
    y_max: Option<u32>,
    mut f: impl FnMut(u32) -> Result<S>,
) -> Result<S> {
    let mut acc = S::zero();
    for (eps, c) in terms {
        let yy = y as i64 + eps as i64;
        if yy < 0 || y_max.is_some_and(|m| yy > m as i64) {
            if !c.is_negligible(1.0) {
                return Err(QError::Internal(format!(
                    "coefficient for shift {eps} at y = {y} leaves the domain but is nonzero"
                )));
            }
            continue;
        }
        if c.is_zero() {
            continue;
        }
        acc = acc + c.clone() * f(yy as u32)?;
    }
    Ok(acc)
}

/// Residual of `q^{2n−N} k_{v,t}(n,y) = Σ_ε a_ε k_{v,t}(n,y+ε)`.
pub fn kraw_k2_residual<S: Scalar>(
    qb: &QBase<S>,
    v: &S::Exp,
    t: &S::Exp,
    big_n: u32,
    y: u32,
    n: u32,
) -> Result<S> {
    let kp = KrawParams { u: v.clone(), s: t.clone(), n_max: big_n };
    let a = kraw_diff_coeffs(qb, y, t, big_n)?;
    let rhs = shifted_sum(a.iter(), y, Some(big_n), |yy| kraw(qb, &kp, n, yy))?;
    Ok(qb.qpow_int(2 * n as i64 - big_n as i64) * kraw(qb, &kp, n, y)? - rhs)
}

/// Residual of `q^{2n−N} k_{v,t}(n,y) = Σ_ε a_{ε,δ} k_{v,t+δ}(n,y+ε)`.
pub fn kraw_dyn_residual<S: Scalar>(
    qb: &QBase<S>,
    v: &S::Exp,
    t: &S::Exp,
    big_n: u32,
    y: u32,
    n: u32,
    shift: Shift,
) -> Result<S> {
    let kp = KrawParams { u: v.clone(), s: t.clone(), n_max: big_n };
    let shifted = KrawParams { s: t.clone() + S::Exp::int(shift.delta()), ..kp.clone() };
    let a = kraw_dyn_coeffs(qb, y, t, big_n, shift)?;
    let rhs = shifted_sum(a.iter(), y, Some(big_n), |yy| kraw(qb, &shifted, n, yy))?;
    Ok(qb.qpow_int(2 * n as i64 - big_n as i64) * kraw(qb, &kp, n, y)? - rhs)
}

fn half_k_times<E: Exponent>(k: &E, n: i64) -> Result<E> {
    k.times(n).halved().ok_or_else(|| {
        QError::InvalidParameter(format!("q^(nk/2) with k = {k} is outside the exact field"))
    })
}

/// `φ_{u,s}(n, x; k) = q^{n(s−u+k/2+1/2)} ₃φ₂(q^{2n}, q^{2x}, q^{−2x−2s−2k}; q^{−2k}, 0 | q⁻², q⁻²)`.
pub fn asc<S: Scalar>(qb: &QBase<S>, ap: &AscParams<S::Exp>, n: u32, x: u32) -> Result<S> {
    let (ni, xi) = (n as i64, x as i64);
    let e = (ap.s.clone() - ap.u.clone()).times(ni)
        + half_k_times(&ap.k, ni)?
        + S::Exp::half(HalfInt::from_twice(ni));
    let third = qb.mono(HalfInt::int(-2 * xi), &[(-2, &ap.s), (-2, &ap.k)]);
    let spec = PhiSpec::new(
        vec![qb.qpow_int(2 * ni), qb.qpow_int(2 * xi), third],
        vec![qb.qpow(&ap.k.times(-2)), S::zero()],
        qb.qpow_int(-2),
        qb.qpow_int(-2),
    );
    Ok(qb.qpow(&e) * rphis(&spec)?)
}

/// `w_k(n) = q^{−n(k−1)} (q^{2k};q²)_n / (q²;q²)_n`.
pub fn asc_w<S: Scalar>(qb: &QBase<S>, n: u32, k: &S::Exp) -> Result<S> {
    let ni = n as i64;
    let q2 = qb.qpow_int(2);
    let lead = qb.mono(HalfInt::int(ni), &[(-ni, k)]);
    // for integer k ≥ 1 the ratio telescopes to (q^{2n+2};q²)_{k−1}/(q²;q²)_{k−1}
    if let Some(kk) = k.as_nonneg_int().filter(|&kk| kk >= 1) {
        let m = kk as usize - 1;
        return frac(lead * qpoch(&qb.qpow_int(2 * ni + 2), &q2, m), qpoch(&q2, &q2, m), "w_k(n)");
    }
    let num = lead * qpoch(&qb.qpow(&k.times(2)), &q2, n as usize);
    frac(num, qpoch(&q2, &q2, n as usize), "w_k(n)")
}

/// `(q^{2x+2s+2};q²)_∞ / (q^{2x+2s+2k+2};q²)_∞`, a finite product for integer `k`.
fn asc_weight_ratio<S: Scalar>(qb: &QBase<S>, x: u32, s: &S::Exp, k: &S::Exp, tb: &TailBound) -> Result<Certified<S>> {
    let q2 = qb.qpow_int(2);
    let lo = qb.mono(HalfInt::int(2 * x as i64 + 2), &[(2, s)]);
    if let Some(kk) = k.as_nonneg_int() {
        return Ok(Certified::exact(qpoch(&lo, &q2, kk as usize), kk as usize));
    }
    let hi = lo.clone() * qb.qpow(&k.times(2));
    qpoch_ratio_inf(&lo, &hi, &q2, tb)
}

/// `W_k(x, s)`.
pub fn asc_big_w<S: Scalar>(qb: &QBase<S>, x: u32, s: &S::Exp, k: &S::Exp, tb: &TailBound) -> Result<Certified<S>> {
    let xi = x as i64;
    let q2 = qb.qpow_int(2);
    let m = |c: i64, ms: i64, mk: i64| qb.mono(HalfInt::int(c), &[(ms, s), (mk, k)]);
    let lead = frac(
        (one::<S>() - m(4 * xi, 2, 2)) * qpoch(&qb.qpow(&k.times(2)), &q2, x as usize),
        (one::<S>() - m(2 * xi, 2, 2)) * qpoch(&q2, &q2, x as usize),
        "W_k(x,s)",
    )? * m(2 * xi * xi, 2 * xi, 0);
    let ratio = asc_weight_ratio(qb, x, s, k, tb)?;
    let scale = lead.magnitude();
    Ok(ratio.map(|r| r * lead, scale))
}

/// `Σ_n φ_{0,s}(n,x) φ̄_{0,s}(n,x') w_k(n) − δ_{xx'}/W_k(x,s)`, summed until the tail certificate holds.
pub fn asc_orth_n<S: Scalar>(
    qb: &QBase<S>,
    s: &S::Exp,
    k: &S::Exp,
    x: u32,
    x2: u32,
    tb: &TailBound,
) -> Result<Certified<S>> {
    let ap = AscParams { u: S::Exp::int(0), s: s.clone(), k: k.clone() };
    let mut acc = SeriesSum::new(*tb);
    let mut total = None;
    for n in 0..tb.max_terms as u32 {
        let term = asc(qb, &ap, n, x)? * asc(qb, &ap, n, x2)?.conj() * asc_w(qb, n, k)?;
        if let Some(done) = acc.push(term)? {
            total = Some(done);
            break;
        }
    }
    let total = match total {
        Some(t) => t,
        None => acc.give_up()?,
    };
    if x != x2 {
        return Ok(total);
    }
    let w = asc_big_w(qb, x, s, k, tb)?;
    let inv_bound = w.error_bound / (w.value.magnitude().powi(2)).max(f64::MIN_POSITIVE);
    Ok(Certified {
        value: total.value - S::one() / w.value,
        error_bound: total.error_bound + inv_bound,
        terms: total.terms,
    })
}

/// `Σ_x φ_{0,s}(n,x) φ̄_{0,s}(n',x) W_k(x,s) − δ_{nn'}/w_k(n)`.
pub fn asc_orth_x<S: Scalar>(
    qb: &QBase<S>,
    s: &S::Exp,
    k: &S::Exp,
    n: u32,
    n2: u32,
    tb: &TailBound,
) -> Result<Certified<S>> {
    let ap = AscParams { u: S::Exp::int(0), s: s.clone(), k: k.clone() };
    let mut acc = SeriesSum::new(*tb);
    let mut weight_err = 0.0;
    for x in 0..tb.max_terms as u32 {
        let w = asc_big_w(qb, x, s, k, tb)?;
        let pp = asc(qb, &ap, n, x)? * asc(qb, &ap, n2, x)?.conj();
        weight_err += scale_bound(w.error_bound, pp.magnitude());
        if let Some(done) = acc.push(pp * w.value)? {
            let target = S::one() / asc_w(qb, n, k)? * delta::<S>(n, n2);
            return Ok(Certified {
                value: done.value - target,
                error_bound: done.error_bound + weight_err,
                terms: done.terms,
            });
        }
    }
    acc.give_up()
}

/// `c_{−1}, c_0, c_1` with `q^{2n+k} φ_{v,t}(n,y) = Σ_ε c_ε(y,t) φ_{v,t}(n,y+ε)`.
pub fn asc_diff_coeffs<S: Scalar>(qb: &QBase<S>, y: u32, t: &S::Exp, k: &S::Exp) -> Result<CoeffTriple<S>> {
    let y = y as i64;
    let q = |c: i64, mt: i64, mk: i64| qb.mono(HalfInt::int(c), &[(mt, t), (mk, k)]);
    let o = one::<S>;
    let minus = if y == 0 {
        S::zero()
    } else {
        frac(
            q(-4 * y + 2, -2, -3) * (o() - q(-2 * y, 0, 0)) * (o() - q(-2 * y, -2, 0)),
            (o() - q(-4 * y + 2, -2, -2)) * (o() - q(-4 * y, -2, -2)),
            "c_-1",
        )?
    };
    let plus = frac(
        q(0, 0, 1) * (o() - q(-2 * y, 0, -2)) * (o() - q(-2 * y, -2, -2)),
        (o() - q(-4 * y, -2, -2)) * (o() - q(-4 * y - 2, -2, -2)),
        "c_1",
    )?;
    let zero = q(0, 0, 1) - minus.clone() - plus.clone();
    Ok(CoeffTriple { minus, zero, plus })
}

/// `d_{−1}, d_0, d_1` with
/// `[π_k(Y_{0,s}) φ_{v,t}(·,y)](n) = d_{−1}φ(n,y−1) + (d_0 + ⟦s⟧) φ(n,y) + d_1 φ(n,y+1)`,
/// where `⟦t⟧ = (q^t + q^{−t})/(q − q^{−1})`.
pub fn asc_d_coeffs<S: Scalar>(
    qb: &QBase<S>,
    y: u32,
    t: &S::Exp,
    v: &S::Exp,
    k: &S::Exp,
) -> Result<CoeffTriple<S>> {
    let c = asc_diff_coeffs(qb, y, t, k)?;
    let h = S::Exp::int(2 * y as i64) + t.clone() + k.clone();
    let bv = qb.qbrace(v);
    Ok(CoeffTriple {
        minus: c.minus * qb.qbrace_su11(&(h.clone() + v.clone() - S::Exp::int(1))),
        zero: c.zero * qb.qbrace_su11(&h) * bv.clone() - qb.qbrace_su11(t) * bv,
        plus: c.plus * qb.qbrace_su11(&(h - v.clone() + S::Exp::int(1))),
    })
}

/// `c_{ε,δ}` with `q^{2n+k} φ_{v,t}(n,y) = Σ_ε c_{ε,δ}(y,t) φ_{v,t+δ}(n,y+ε)`.
pub fn asc_dyn_coeffs<S: Scalar>(
    qb: &QBase<S>,
    y: u32,
    t: &S::Exp,
    k: &S::Exp,
    shift: Shift,
) -> Result<CoeffShift<S>> {
    let y = y as i64;
    let q = |c: i64, mt: i64, mk: i64| qb.mono(HalfInt::int(c), &[(mt, t), (mk, k)]);
    let o = one::<S>;
    let qk = q(0, 0, 1);
    let q2 = o() + qb.qpow_int(2);
    let coeffs = match shift {
        Shift::Up => [
            if y < 2 {
                S::zero()
            } else {
                frac(
                    qk.clone() * (o() - q(2 * y, 0, 0)) * (o() - q(2 * y - 2, 0, 0)),
                    (o() - q(4 * y, 2, 2)) * (o() - q(4 * y - 2, 2, 2)),
                    "c_-2,2",
                )?
            },
            if y < 1 {
                S::zero()
            } else {
                frac(
                    qk.clone() * q2 * (o() - q(2 * y, 0, 0)) * (o() - q(-2 * y, -2, -2)),
                    (o() - q(4 * y + 2, 2, 2)) * (o() - q(-4 * y + 2, -2, -2)),
                    "c_-1,2",
                )?
            },
            frac(
                qk * (o() - q(-2 * y, -2, -2)) * (o() - q(-2 * y - 2, -2, -2)),
                (o() - q(-4 * y, -2, -2)) * (o() - q(-4 * y - 2, -2, -2)),
                "c_0,2",
            )?,
        ],
        Shift::Down => [
            frac(
                qk.clone() * (o() - q(2 * y, 2, 0)) * (o() - q(2 * y - 2, 2, 0)),
                (o() - q(4 * y, 2, 2)) * (o() - q(4 * y - 2, 2, 2)),
                "c_0,-2",
            )?,
            frac(
                qk.clone() * q2 * (o() - q(-2 * y, 0, -2)) * (o() - q(2 * y, 2, 0)),
                (o() - q(-4 * y + 2, -2, -2)) * (o() - q(4 * y + 2, 2, 2)),
                "c_1,-2",
            )?,
            frac(
                qk * (o() - q(-2 * y, 0, -2)) * (o() - q(-2 * y - 2, 0, -2)),
                (o() - q(-4 * y, -2, -2)) * (o() - q(-4 * y - 2, -2, -2)),
                "c_2,-2",
            )?,
        ],
    };
    Ok(CoeffShift { shift, coeffs })
}

/// Residual of `q^{2n+k} φ_{v,t}(n,y) = Σ_ε c_ε φ_{v,t}(n,y+ε)`.
pub fn asc_k2_residual<S: Scalar>(qb: &QBase<S>, v: &S::Exp, t: &S::Exp, k: &S::Exp, y: u32, n: u32) -> Result<S> {
    let ap = AscParams { u: v.clone(), s: t.clone(), k: k.clone() };
    let c = asc_diff_coeffs(qb, y, t, k)?;
    let rhs = shifted_sum(c.iter(), y, None, |yy| asc(qb, &ap, n, yy))?;
    let lhs = qb.mono(HalfInt::int(2 * n as i64), &[(1, k)]) * asc(qb, &ap, n, y)?;
    Ok(lhs - rhs)
}

/// Residual of `q^{2n+k} φ_{v,t}(n,y) = Σ_ε c_{ε,δ} φ_{v,t+δ}(n,y+ε)`.
pub fn asc_dyn_residual<S: Scalar>(
    qb: &QBase<S>,
    v: &S::Exp,
    t: &S::Exp,
    k: &S::Exp,
    y: u32,
    n: u32,
    shift: Shift,
) -> Result<S> {
    let ap = AscParams { u: v.clone(), s: t.clone(), k: k.clone() };
    let shifted = AscParams { s: t.clone() + S::Exp::int(shift.delta()), ..ap.clone() };
    let c = asc_dyn_coeffs(qb, y, t, k, shift)?;
    let rhs = shifted_sum(c.iter(), y, None, |yy| asc(qb, &shifted, n, yy))?;
    let lhs = qb.mono(HalfInt::int(2 * n as i64), &[(1, k)]) * asc(qb, &ap, n, y)?;
    Ok(lhs - rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    type Q = BigRational;

    fn base(n: i64, d: i64) -> QBase<Q> {
        QBase::from_p(n, d).unwrap()
    }

    fn h(n: i64) -> HalfInt {
        HalfInt::int(n)
    }

    #[test]
    fn kraw_trivial_values() {
        let qb = base(1, 2);
        let kp = KrawParams { u: h(1), s: HalfInt::from_twice(3), n_max: 3 };
        for x in 0..=3 {
            assert_eq!(kraw(&qb, &kp, 0, x).unwrap(), Q::from_integer(1.into()));
        }
        for n in 0..=3i64 {
            let e = (HalfInt::from_twice(3) - h(1)).times(n) + HalfInt::from_twice(n * (1 - 3));
            let mut expect = qb.qpow(&e);
            if n % 2 == 1 {
                expect = -expect;
            }
            assert_eq!(kraw(&qb, &kp, n as u32, 0).unwrap(), expect);
        }
        assert!(matches!(kraw(&qb, &kp, 4, 0), Err(QError::OutOfRange(_))));
    }

    #[test]
    fn kraw_u_shift_is_a_power() {
        let qb = base(1, 2);
        let k0 = KrawParams { u: h(0), s: h(1), n_max: 3 };
        let k2 = KrawParams { u: HalfInt::from_twice(3), ..k0.clone() };
        for n in 0..=3 {
            for x in 0..=3 {
                let lhs = kraw(&qb, &k2, n, x).unwrap();
                let rhs = qb.qpow(&HalfInt::from_twice(-3 * n as i64)) * kraw(&qb, &k0, n, x).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn weight_symmetric_under_inverse_base() {
        let qb = base(1, 2);
        for big_n in 0..=6 {
            for n in 0..=big_n {
                assert_eq!(kraw_w(&qb, n, big_n).unwrap(), kraw_w(&qb.inverse(), n, big_n).unwrap());
            }
        }
        assert_eq!(kraw_w(&qb, 0, 4).unwrap(), Q::from_integer(1.into()));
    }

    #[test]
    fn small_orthogonality_examples() {
        let qb = base(1, 2);
        let kp = KrawParams { u: h(0), s: h(1), n_max: 2 };
        let mut sum = Q::from_integer(0.into());
        for x in 0..=2 {
            let k = kraw(&qb, &kp, 1, x).unwrap();
            sum += k.clone() * k * kraw_big_w(&qb, x, &h(1), 2, true).unwrap();
        }
        assert_eq!(sum, Q::from_integer(1.into()) / kraw_w(&qb, 1, 2).unwrap());
        assert_eq!(kraw_orth_n(&qb, &h(0), 0, 0, 0).unwrap(), Q::from_integer(0.into()));
        // N = 1, s = 0, q = 1/2 has irrational p, so this one runs in floats
        let qf = QBase::<f64>::from_q(&Q::new(1.into(), 2.into())).unwrap();
        let total: f64 = (0..=1).map(|x| kraw_big_w(&qf, x, &0.0, 1, true).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn boundary_coefficients_vanish() {
        let qb = base(1, 2);
        let t = h(1);
        assert_eq!(kraw_diff_coeffs(&qb, 0, &t, 3).unwrap().minus, Q::from_integer(0.into()));
        assert_eq!(kraw_diff_coeffs(&qb, 3, &t, 3).unwrap().plus, Q::from_integer(0.into()));
        let up = kraw_dyn_coeffs(&qb, 0, &t, 3, Shift::Up).unwrap();
        assert_eq!(up.get(-2).unwrap(), &Q::from_integer(0.into()));
        assert_eq!(up.get(-1).unwrap(), &Q::from_integer(0.into()));
        let down = kraw_dyn_coeffs(&qb, 3, &t, 3, Shift::Down).unwrap();
        assert_eq!(down.get(2).unwrap(), &Q::from_integer(0.into()));
        assert!(down.get(-1).is_none());
        assert_eq!(asc_diff_coeffs(&qb, 0, &t, &h(2)).unwrap().minus, Q::from_integer(0.into()));
    }

    #[test]
    fn three_term_identities_small_case() {
        let qb = base(1, 2);
        for n in 0..=2 {
            assert_eq!(kraw_k2_residual(&qb, &h(0), &h(1), 2, 1, n).unwrap(), Q::from_integer(0.into()));
        }
        for n in 0..=3 {
            for shift in [Shift::Up, Shift::Down] {
                let r = kraw_dyn_residual(&qb, &h(1), &h(2), 3, 1, n, shift).unwrap();
                assert_eq!(r, Q::from_integer(0.into()));
            }
        }
    }

    #[test]
    fn b_coefficients_at_v_zero() {
        let qb = base(1, 2);
        let (t, v) = (h(1), h(0));
        let a = kraw_diff_coeffs(&qb, 1, &t, 2).unwrap();
        let b = kraw_b_coeffs(&qb, 1, &t, &v, 2).unwrap();
        let expect = a.zero * qb.qbracket(&h(1)) * qb.qbrace(&h(0)) - qb.qbracket(&t) * qb.qbrace(&h(0));
        assert_eq!(b.zero, expect);
        assert_eq!(kraw_b_coeffs(&qb, 0, &t, &v, 2).unwrap().minus, Q::from_integer(0.into()));
    }

    #[test]
    fn asc_trivial_values() {
        let qb = base(1, 2);
        let ap = AscParams { u: h(0), s: h(1), k: h(2) };
        assert_eq!(asc(&qb, &ap, 0, 5).unwrap(), Q::from_integer(1.into()));
        let pre = qb.qpow(&HalfInt::from_twice(3 * (2 + 2 + 1)));
        assert_eq!(asc(&qb, &ap, 3, 0).unwrap(), pre);
        for n in 0..6 {
            assert_eq!(asc_w(&qb, n, &h(1)).unwrap(), Q::from_integer(1.into()));
        }
        let tb = TailBound::default();
        for x in 0..=10 {
            assert!(asc_big_w(&qb, x, &h(0), &h(2), &tb).unwrap().value > Q::from_integer(0.into()));
        }
    }

    #[test]
    fn asc_w_integer_k_matches_the_product() {
        let qb = base(2, 3);
        let q2 = qb.qpow_int(2);
        for k in 1..=3 {
            for n in 0..7u32 {
                let ni = n as i64;
                let direct = qb.qpow_int(-ni * (k - 1)) * qpoch(&qb.qpow_int(2 * k), &q2, n as usize)
                    / qpoch(&q2, &q2, n as usize);
                assert_eq!(asc_w(&qb, n, &h(k)).unwrap(), direct, "k = {k}, n = {n}");
            }
        }
    }

    #[test]
    fn asc_orthogonality_float() {
        let qb = QBase::<f64>::from_p(1, 2).unwrap();
        let tb = TailBound::new(1e-14, 0.9, 500).unwrap();
        for (x, x2) in [(1, 2), (0, 3), (2, 2)] {
            let r = asc_orth_n(&qb, &0.0, &1.0, x, x2, &tb).unwrap();
            assert!(r.value.abs() < 1e-10, "{x} {x2} {}", r.value);
        }
        let r = asc_orth_x(&qb, &0.0, &1.0, 0, 0, &tb).unwrap();
        assert!(r.value.abs() < 1e-10);
        let small = QBase::<f64>::from_q(&BigRational::new(1.into(), 10.into())).unwrap();
        let r = asc_orth_n(&small, &0.5, &2.0, 1, 2, &tb).unwrap();
        assert!(r.value.abs() < 1e-10);
    }

    #[test]
    fn asc_d_coefficients_exact_example() {
        // q = 1/9 exactly (p = 1/3)
        let qb = base(1, 3);
        let (k, t, v, s) = (h(2), h(1), h(0), h(0));
        let d = asc_d_coeffs(&qb, 1, &t, &v, &k).unwrap();
        let c = asc_diff_coeffs(&qb, 1, &t, &k).unwrap();
        let d1 = asc_d_coeffs(&qb, 1, &t, &h(1), &k).unwrap();
        assert_eq!(d1.plus, c.plus.clone() * qb.qbrace_su11(&h(2 + 2 + 1)));
        let ap = AscParams { u: v, s: t, k };
        let g = crate::uqsl2::gens(&qb, &crate::uqsl2::RepSpec::Su11 { k: h(2), trunc: 12 }).unwrap();
        let y0s = crate::uqsl2::twist(&qb, &g, crate::uqsl2::Twist::Y, &h(0), &s);
        let col: Vec<Q> = (0..=12).map(|n| asc(&qb, &ap, n, 1).unwrap()).collect();
        let act = y0s.apply(&col).unwrap();
        for n in 0..=6u32 {
            let rhs = d.minus.clone() * asc(&qb, &ap, n, 0).unwrap()
                + (d.zero.clone() + qb.qbrace_su11(&s)) * asc(&qb, &ap, n, 1).unwrap()
                + d.plus.clone() * asc(&qb, &ap, n, 2).unwrap();
            assert_eq!(act[n as usize], rhs, "n = {n}");
        }
    }
}
