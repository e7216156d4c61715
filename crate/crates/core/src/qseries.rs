//! q-shifted factorials, q-binomials, basic hypergeometric series and the
//! ₃φ₂ × ₃φ₂ → ₄φ₃ summation formula.

use crate::error::{out_of_range, QError, Result};
use crate::scalar::Scalar;

/// Truncation policy for non-terminating sums and products.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailBound {
    pub tolerance: f64,
    pub ratio_cap: f64,
    pub max_terms: usize,
}

impl TailBound {
    pub fn new(tolerance: f64, ratio_cap: f64, max_terms: usize) -> Result<Self> {
        if !(tolerance > 0.0 && ratio_cap > 0.0 && ratio_cap < 1.0) {
            return Err(QError::InvalidParameter(format!(
                "tail bound needs tolerance > 0 and ratio_cap in (0,1), got {tolerance}, {ratio_cap}"
            )));
        }
        Ok(TailBound { tolerance, ratio_cap, max_terms })
    }
}

impl Default for TailBound {
    fn default() -> Self {
        TailBound { tolerance: 1e-15, ratio_cap: 0.9, max_terms: 4000 }
    }
}

/// A value together with a bound on its truncation error. `error_bound` is
/// zero when the computation was finite.
#[derive(Clone, Debug, PartialEq)]
pub struct Certified<S> {
    pub value: S,
    pub error_bound: f64,
    pub terms: usize,
}

impl<S: Scalar> Certified<S> {
    pub fn exact(value: S, terms: usize) -> Self {
        Certified { value, error_bound: 0.0, terms }
    }

    pub fn map(self, f: impl FnOnce(S) -> S, scale: f64) -> Self {
        Certified { value: f(self.value), error_bound: scale_bound(self.error_bound, scale), terms: self.terms }
    }
}

/// `(a; base)_n`.
pub fn qpoch<S: Scalar>(a: &S, base: &S, n: usize) -> S {
    let mut acc = S::one();
    let mut x = a.clone();
    for _ in 0..n {
        acc = acc * (S::one() - x.clone());
        x = x * base.clone();
    }
    acc
}

/// `(a; base)_∞`, stopping once `|a·base^m| < tolerance·(1−|base|)`.
pub fn qpoch_inf<S: Scalar>(a: &S, base: &S, tb: &TailBound) -> Result<Certified<S>> {
    let r = base.magnitude();
    if r >= 1.0 {
        return Err(QError::NonConvergent(format!("infinite product needs |base| < 1, got {r}")));
    }
    let mut acc = S::one();
    let mut x = a.clone();
    for m in 0..tb.max_terms {
        let tail = x.magnitude() / (1.0 - r);
        if tail < tb.tolerance {
            let bound = acc.magnitude() * (tail.exp() - 1.0);
            return Ok(Certified { value: acc, error_bound: bound, terms: m });
        }
        acc = acc * (S::one() - x.clone());
        x = x * base.clone();
    }
    Err(QError::NonConvergent(format!(
        "infinite product not within {} after {} factors",
        tb.tolerance, tb.max_terms
    )))
}

/// `(a; base)_∞ / (b; base)_∞` as a single product of factor ratios.
pub fn qpoch_ratio_inf<S: Scalar>(a: &S, b: &S, base: &S, tb: &TailBound) -> Result<Certified<S>> {
    let r = base.magnitude();
    if r >= 1.0 {
        return Err(QError::NonConvergent(format!("infinite product needs |base| < 1, got {r}")));
    }
    let mut acc = S::one();
    let (mut x, mut y) = (a.clone(), b.clone());
    for m in 0..tb.max_terms {
        let ym = y.magnitude();
        if ym < 1.0 {
            let tail = (x.magnitude() + ym) / ((1.0 - r) * (1.0 - ym));
            if tail < tb.tolerance {
                let bound = acc.magnitude() * (tail.exp() - 1.0);
                return Ok(Certified { value: acc, error_bound: bound, terms: m });
            }
        }
        let den = S::one() - y.clone();
        if den.is_negligible(1.0) {
            return Err(QError::DenominatorPole(format!(
                "factor {m} of the denominator product vanishes"
            )));
        }
        acc = acc * (S::one() - x.clone()) / den;
        x = x * base.clone();
        y = y * base.clone();
    }
    Err(QError::NonConvergent(format!(
        "product ratio not within {} after {} factors",
        tb.tolerance, tb.max_terms
    )))
}

/// Gaussian binomial `(base;base)_n / ((base;base)_j (base;base)_{n−j})`.
pub fn qbinom<S: Scalar>(n: i64, j: i64, base: &S) -> Result<S> {
    if j < 0 || j > n {
        return Err(out_of_range(format!("qbinom needs 0 <= j <= n, got n={n}, j={j}")));
    }
    let (n, j) = (n as usize, j as usize);
    let top = qpoch(base, base, n);
    let bot = qpoch(base, base, j) * qpoch(base, base, n - j);
    if bot.is_negligible(1.0) {
        return Err(QError::DenominatorPole("qbinom with base on the unit circle".into()));
    }
    Ok(top / bot)
}

/// Parameters of `_{r+1}φ_r(numerators; denominators | base, argument)`.
#[derive(Clone, Debug)]
pub struct PhiSpec<S> {
    pub numerators: Vec<S>,
    pub denominators: Vec<S>,
    pub base: S,
    pub argument: S,
    pub max_terms: Option<usize>,
}

impl<S: Scalar> PhiSpec<S> {
    pub fn new(numerators: Vec<S>, denominators: Vec<S>, base: S, argument: S) -> Self {
        PhiSpec { numerators, denominators, base, argument, max_terms: None }
    }

    fn check_shape(&self) -> Result<()> {
        if self.numerators.len() != self.denominators.len() + 1 {
            return Err(QError::InvalidParameter(format!(
                "expected r+1 numerators over r denominators, got {} over {}",
                self.numerators.len(),
                self.denominators.len()
            )));
        }
        Ok(())
    }

    /// Index of the last possibly nonzero term, if some numerator is `base^(−m)`.
    pub fn termination_index(&self) -> Option<usize> {
        let limit = self.max_terms.unwrap_or(usize::MAX);
        let mut best: Option<usize> = None;
        for a in &self.numerators {
            let mut x = a.clone();
            let stop = best.unwrap_or(limit).min(TERMINATION_SCAN);
            for m in 0..stop {
                if (S::one() - x.clone()).is_negligible(1.0) {
                    best = Some(best.map_or(m, |b| b.min(m)));
                    break;
                }
                x = x * self.base.clone();
            }
        }
        match (best, self.max_terms) {
            (Some(b), Some(cap)) => Some(b.min(cap)),
            (None, Some(cap)) => Some(cap),
            (b, None) => b,
        }
    }

    fn pole_scan(&self, last: usize) -> Result<()> {
        for (i, b) in self.denominators.iter().enumerate() {
            let mut x = b.clone();
            for m in 0..last {
                if (S::one() - x.clone()).is_negligible(1.0) {
                    return Err(QError::DenominatorPole(format!(
                        "denominator parameter {} equals base^-{m} inside the summation range",
                        i + 1
                    )));
                }
                x = x * self.base.clone();
            }
        }
        let mut x = self.base.clone();
        for m in 0..last {
            if (S::one() - x.clone()).is_negligible(1.0) {
                return Err(QError::DenominatorPole(format!("(base;base) vanishes at index {}", m + 1)));
            }
            x = x * self.base.clone();
        }
        Ok(())
    }

    fn ratio(&self, n: usize, pw: &S) -> S {
        let mut num = S::one();
        for a in &self.numerators {
            num = num * (S::one() - a.clone() * pw.clone());
        }
        let mut den = S::one() - pw.clone() * self.base.clone();
        for b in &self.denominators {
            den = den * (S::one() - b.clone() * pw.clone());
        }
        let _ = n;
        num * self.argument.clone() / den
    }
}

const TERMINATION_SCAN: usize = 4096;

/// Terminating `_{r+1}φ_r`, summed in full after an eager pole scan.
pub fn rphis<S: Scalar>(spec: &PhiSpec<S>) -> Result<S> {
    spec.check_shape()?;
    let last = spec.termination_index().ok_or_else(|| {
        QError::NonConvergent("series does not terminate; use rphis_certified".into())
    })?;
    spec.pole_scan(last)?;
    let mut sum = S::one();
    let mut term = S::one();
    let mut pw = S::one();
    for n in 0..last {
        term = term * spec.ratio(n, &pw);
        sum = sum + term.clone();
        pw = pw * spec.base.clone();
    }
    Ok(sum)
}

/// `_{r+1}φ_r` with a ratio-cap certificate when the series does not terminate.
pub fn rphis_certified<S: Scalar>(spec: &PhiSpec<S>, tb: &TailBound) -> Result<Certified<S>> {
    spec.check_shape()?;
    if spec.termination_index().is_some() {
        return rphis(spec).map(|v| Certified::exact(v, spec.termination_index().unwrap_or(0) + 1));
    }
    let mut terms = SeriesSum::new(*tb);
    let mut term = S::one();
    let mut pw = S::one();
    terms.push(term.clone())?;
    for n in 0..tb.max_terms {
        for (i, b) in spec.denominators.iter().enumerate() {
            if (S::one() - b.clone() * pw.clone()).is_negligible(1.0) {
                return Err(QError::DenominatorPole(format!(
                    "denominator parameter {} equals base^-{n}",
                    i + 1
                )));
            }
        }
        term = term * spec.ratio(n, &pw);
        pw = pw * spec.base.clone();
        if let Some(done) = terms.push(term.clone())? {
            return Ok(done);
        }
    }
    terms.give_up()
}

/// `bound · scale`, where a zero bound stays zero even against an overflowed scale.
pub fn scale_bound(bound: f64, scale: f64) -> f64 {
    if bound == 0.0 {
        0.0
    } else {
        bound * scale
    }
}

/// Bound on `|Π(v_i + δ_i) − Π v_i|` over `|δ_i| ≤ e_i`. Works in log space
/// since huge and tiny factors routinely meet in weighted sums.
pub fn product_error<S: Scalar>(parts: &[&Certified<S>]) -> f64 {
    if parts.iter().all(|c| c.error_bound == 0.0) {
        return 0.0;
    }
    let logs: Vec<f64> = parts.iter().map(|c| c.value.log2_magnitude()).collect();
    if logs.contains(&f64::NEG_INFINITY) {
        // Π v_i = 0, so the bound is Π(|v_i| + e_i)
        let total: f64 = parts
            .iter()
            .zip(&logs)
            .map(|(c, &l)| match l {
                f64::NEG_INFINITY => c.error_bound.log2(),
                l => l + (c.error_bound.log2() - l).exp2().ln_1p() / std::f64::consts::LN_2,
            })
            .sum();
        return total.exp2();
    }
    // (1 + R)(1 + r) − 1 = R + r + Rr
    let rel = parts.iter().zip(&logs).fold(0.0, |acc: f64, (c, &l)| {
        let r = (c.error_bound.log2() - l).exp2();
        acc + r + acc * r
    });
    (logs.iter().sum::<f64>() + rel.log2()).exp2()
}

/// Certified reciprocal; needs `e < |v|`.
pub fn certified_recip<S: Scalar>(c: &Certified<S>) -> Result<Certified<S>> {
    let m = c.value.magnitude();
    if c.value.is_zero() || c.error_bound >= m {
        return Err(QError::DenominatorPole(format!("cannot invert a value within {:e} of 0", c.error_bound)));
    }
    // |1/(v + δ) − 1/v| ≤ e / (|v| (|v| − e))
    let err = if c.error_bound > 0.0 { c.error_bound / (m * (m - c.error_bound)) } else { 0.0 };
    Ok(Certified { value: S::one() / c.value.clone(), error_bound: err, terms: c.terms })
}

/// Running sum of an eventually geometric series with the ratio-cap stopping rule.
///
/// The sum stops after term `n` when `|t_n| < tolerance·(1 − cap)` and the
/// last two term ratios are both `≤ cap`; the reported bound is
/// `|t_n|·cap/(1 − cap)`.
#[derive(Clone, Debug)]
pub struct SeriesSum<S> {
    tb: TailBound,
    sum: Option<S>,
    prev: Option<f64>,
    good_ratios: usize,
    count: usize,
}

impl<S: Scalar> SeriesSum<S> {
    pub fn new(tb: TailBound) -> Self {
        SeriesSum { tb, sum: None, prev: None, good_ratios: 0, count: 0 }
    }

    /// Adds a term; returns the certified total once the stopping rule fires.
    pub fn push(&mut self, term: S) -> Result<Option<Certified<S>>> {
        let mag = term.magnitude();
        if !mag.is_finite() {
            return Err(QError::NonConvergent(format!("term {} is not finite", self.count)));
        }
        self.sum = Some(match self.sum.take() {
            Some(s) => s + term,
            None => term,
        });
        self.count += 1;
        let cap = self.tb.ratio_cap;
        match self.prev {
            Some(p) if p > 0.0 && mag / p <= cap => self.good_ratios += 1,
            Some(p) if p == 0.0 && mag == 0.0 => self.good_ratios += 1,
            Some(_) => self.good_ratios = 0,
            None => {}
        }
        self.prev = Some(mag);
        if self.good_ratios >= 2 && mag < self.tb.tolerance * (1.0 - cap) {
            let value = self.sum.clone().unwrap_or_else(S::zero);
            return Ok(Some(Certified {
                value,
                error_bound: mag * cap / (1.0 - cap),
                terms: self.count,
            }));
        }
        if self.count >= self.tb.max_terms {
            return Err(self.exhausted());
        }
        Ok(None)
    }

    fn exhausted(&self) -> QError {
        QError::NonConvergent(format!(
            "tail not below {} (ratio cap {}) within {} terms",
            self.tb.tolerance, self.tb.ratio_cap, self.tb.max_terms
        ))
    }

    pub fn give_up(&self) -> Result<Certified<S>> {
        Err(self.exhausted())
    }
}

/// `(a, b², c², bcd)`: the summation formula depends on `b, c, d` only through these.
#[derive(Clone, Debug, PartialEq)]
pub struct SummationParams<S> {
    pub a: S,
    pub b2: S,
    pub c2: S,
    pub bcd: S,
}

impl<S: Scalar> SummationParams<S> {
    pub fn from_abcd(a: S, b: S, c: S, d: S) -> Self {
        SummationParams {
            a,
            b2: b.clone() * b.clone(),
            c2: c.clone() * c.clone(),
            bcd: b * c * d,
        }
    }

    /// `bd/c`.
    fn bd_over_c(&self) -> S {
        self.bcd.clone() / self.c2.clone()
    }
}

/// Which form of the summation formula applies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SumRange {
    /// `a = base^(−N)`: all sums are finite.
    Terminating(u32),
    /// `|bcd| < 1` and `0 < base < 1`.
    Convergent(TailBound),
}

fn check_range<S: Scalar>(x: u32, y: u32, sp: &SummationParams<S>, base: &S, range: &SumRange) -> Result<()> {
    match range {
        SumRange::Terminating(n) => {
            let an = sp.a.clone() * pow_u(base, *n);
            if !(S::one() - an).is_negligible(1.0) {
                return Err(QError::InvalidParameter(format!("terminating case needs a = base^-{n}")));
            }
            if x > *n || y > *n {
                return Err(out_of_range(format!(
                    "terminating summation formula holds for x, y <= N = {n}, got ({x}, {y})"
                )));
            }
            Ok(())
        }
        SumRange::Convergent(_) => {
            let r = base.magnitude();
            let t = sp.bcd.magnitude();
            if !(r < 1.0 && t < 1.0) {
                return Err(QError::NonConvergent(format!(
                    "infinite case needs 0 < base < 1 and |bcd| < 1, got {r} and {t}"
                )));
            }
            Ok(())
        }
    }
}

fn pow_u<S: Scalar>(x: &S, n: u32) -> S {
    x.powi(n as i32)
}

fn pow_i<S: Scalar>(x: &S, n: i64) -> S {
    x.powi(n as i32)
}

fn inf_prefactor<S: Scalar>(sp: &SummationParams<S>, base: &S, range: &SumRange) -> Result<Certified<S>> {
    let at = sp.a.clone() * sp.bcd.clone();
    match range {
        SumRange::Terminating(n) => Ok(Certified::exact(qpoch(&at, base, *n as usize), *n as usize)),
        SumRange::Convergent(tb) => match integer_exponent(&sp.a, base) {
            // (abcd;q)_∞/(bcd;q)_∞ = 1/(bcd;q)_k when a = q^k
            Some(k) => {
                let den = nonzero(qpoch(&sp.bcd, base, k as usize), "(bcd;q)_k")?;
                Ok(Certified::exact(S::one() / den, k as usize))
            }
            None => qpoch_ratio_inf(&at, &sp.bcd, base, tb),
        },
    }
}

const INTEGER_EXPONENT_SCAN: u32 = 64;
const ROUNDING_SLACK: f64 = 4.0;

/// `k` with `a = base^k`, if one exists in `0..64`.
pub fn integer_exponent<S: Scalar>(a: &S, base: &S) -> Option<u32> {
    let mut x = S::one();
    for k in 0..INTEGER_EXPONENT_SCAN {
        if (a.clone() / x.clone() - S::one()).is_negligible(1.0) {
            return Some(k);
        }
        x = x * base.clone();
        if x.is_negligible(0.0) {
            return None;
        }
    }
    None
}

fn nonzero<S: Scalar>(x: S, what: &str) -> Result<S> {
    if x.is_negligible(1.0) {
        Err(QError::DenominatorPole(format!("{what} vanishes")))
    } else {
        Ok(x)
    }
}

/// The ₄φ₃ side of the summation formula, evaluated literally: removable
/// singularities are reported as `DenominatorPole`.
pub fn lemma21_lhs<S: Scalar>(
    x: u32,
    y: u32,
    sp: &SummationParams<S>,
    base: &S,
    range: &SumRange,
) -> Result<Certified<S>> {
    check_range(x, y, sp, base, range)?;
    let (xu, yu) = (x as usize, y as usize);
    let tc = sp.bd_over_c();
    let tcy = tc.clone() * pow_i(base, -(y as i64));
    let at = sp.a.clone() * sp.bcd.clone();
    let pref = inf_prefactor(sp, base, range)?;
    let mut c1 = qpoch(&tcy, base, yu) / nonzero(qpoch(&at, base, yu), "(abcd;q)_y")?;
    let qx = pow_i(base, -(x as i64));
    c1 = c1 * qpoch(&(qx.clone() / sp.b2.clone()), base, xu) / nonzero(qpoch(&sp.a, base, xu), "(a;q)_x")?;
    let spec = PhiSpec::new(
        vec![
            qx,
            sp.a.clone() * sp.b2.clone() * pow_u(base, x),
            sp.bcd.clone(),
            tc,
        ],
        vec![
            sp.b2.clone() * base.clone(),
            tcy,
            at * pow_u(base, y),
        ],
        base.clone(),
        base.clone(),
    );
    // an earlier vanishing numerator would stop the sum before a 0/0 term
    spec.pole_scan(xu)?;
    let phi = rphis(&spec)?;
    let scale = (c1.clone() * phi.clone()).magnitude();
    Ok(Certified {
        value: pref.value.clone() * c1 * phi,
        error_bound: scale_bound(pref.error_bound, scale),
        terms: pref.terms,
    })
}

/// The ₄φ₃ side with the `(bd q^{−y}/c; q)` factors of prefactor and series
/// paired analytically, so it is finite wherever the sum side is.
pub fn lemma21_lhs_regular<S: Scalar>(
    x: u32,
    y: u32,
    sp: &SummationParams<S>,
    base: &S,
    range: &SumRange,
) -> Result<Certified<S>> {
    check_range(x, y, sp, base, range)?;
    let (xu, yu) = (x as usize, y as usize);
    let tc = sp.bd_over_c();
    let tcy = tc.clone() * pow_i(base, -(y as i64));
    let at = sp.a.clone() * sp.bcd.clone();
    let pref = inf_prefactor(sp, base, range)?;
    let qx = pow_i(base, -(x as i64));
    let c1 = qpoch(&(qx.clone() / sp.b2.clone()), base, xu)
        / nonzero(qpoch(&sp.a, base, xu), "(a;q)_x")?
        / nonzero(qpoch(&at, base, yu), "(abcd;q)_y")?;
    let abx = sp.a.clone() * sp.b2.clone() * pow_u(base, x);
    let bq = sp.b2.clone() * base.clone();
    let aty = at * pow_u(base, y);
    let mut sum = S::zero();
    let mut abs_sum = 0.0;
    let one = S::one();
    // ratio of the Pochhammer products of term j, and base^j
    let mut poch = S::one();
    let mut qj = S::one();
    for j in 0..=xu {
        if j > 0 {
            let f = |a: &S| one.clone() - a.clone() * qj.clone();
            let den = nonzero(f(&bq) * f(&aty) * f(base), "a denominator Pochhammer of the 4phi3")?;
            poch = poch * f(&qx) * f(&abx) * f(&sp.bcd) / den;
            qj = qj * base.clone();
        }
        let paired = if j <= yu {
            qpoch(&tc, base, j) * qpoch(&(tcy.clone() * pow_u(base, j as u32)), base, yu - j)
        } else {
            qpoch(&(tc.clone() * pow_u(base, (j - yu) as u32)), base, yu)
        };
        let term = poch.clone() * paired * qj.clone();
        abs_sum += term.magnitude();
        sum = sum + term;
    }
    let scale = (c1.clone() * sum.clone()).magnitude();
    let rounding = if S::is_exact() {
        0.0
    } else {
        // alternating terms cancel; the sum is only as good as its largest term
        abs_sum * (pref.value.clone() * c1.clone()).magnitude() * ROUNDING_SLACK * (xu + yu + 8) as f64 * f64::EPSILON
    };
    Ok(Certified {
        value: pref.value.clone() * c1 * sum,
        error_bound: scale_bound(pref.error_bound, scale) + rounding,
        terms: pref.terms,
    })
}

/// `₃φ₂(base^n, base^z, base^{−z}/(a·b²); 1/a, 0 | base⁻¹, base⁻¹)`.
fn inverse_base_phi<S: Scalar>(n: usize, z: u32, a: &S, b2: &S, base: &S) -> Result<S> {
    let inv = S::one() / base.clone();
    let spec = PhiSpec::new(
        vec![
            pow_u(base, n as u32),
            pow_u(base, z),
            pow_i(base, -(z as i64)) / (a.clone() * b2.clone()),
        ],
        vec![S::one() / a.clone(), S::zero()],
        inv.clone(),
        inv,
    );
    rphis(&spec)
}

/// The sum side `Σ_n (bcd)^n (a;q)_n/(q;q)_n ₃φ₂(x) ₃φ₂(y)`.
pub fn lemma21_rhs<S: Scalar>(
    x: u32,
    y: u32,
    sp: &SummationParams<S>,
    base: &S,
    range: &SumRange,
) -> Result<Certified<S>> {
    check_range(x, y, sp, base, range)?;
    let term = |n: usize, lead: &S| -> Result<S> {
        let fx = inverse_base_phi(n, x, &sp.a, &sp.b2, base)?;
        let fy = inverse_base_phi(n, y, &sp.a, &sp.c2, base)?;
        Ok(lead.clone() * fx * fy)
    };
    // lead_n = (bcd)^n (a;q)_n / (q;q)_n, updated incrementally
    let step = |n: usize, lead: S| -> S {
        let qn = pow_u(base, n as u32);
        lead * sp.bcd.clone() * (S::one() - sp.a.clone() * qn.clone())
            / (S::one() - qn * base.clone())
    };
    match range {
        SumRange::Terminating(nn) => {
            let mut lead = S::one();
            let mut sum = S::zero();
            for n in 0..=(*nn as usize) {
                sum = sum + term(n, &lead)?;
                lead = step(n, lead);
            }
            Ok(Certified::exact(sum, *nn as usize + 1))
        }
        SumRange::Convergent(tb) => {
            let mut acc = SeriesSum::new(*tb);
            let mut lead = S::one();
            for n in 0..tb.max_terms {
                if let Some(done) = acc.push(term(n, &lead)?)? {
                    return Ok(done);
                }
                lead = step(n, lead);
            }
            acc.give_up()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    type Q = BigRational;

    fn r(n: i64, d: i64) -> Q {
        Q::new(n.into(), d.into())
    }

    #[test]
    fn pochhammer_basics() {
        let q = r(1, 4);
        assert_eq!(qpoch(&r(3, 7), &q, 0), r(1, 1));
        assert_eq!(qpoch(&r(1, 1), &q, 3), r(0, 1));
        assert_eq!(qpoch(&r(1, 4), &r(1, 4), 1), r(3, 4));
    }

    #[test]
    fn qbinom_small() {
        let q2 = r(1, 16);
        assert_eq!(qbinom(5, 0, &q2).unwrap(), r(1, 1));
        assert_eq!(qbinom(5, 5, &q2).unwrap(), r(1, 1));
        assert_eq!(qbinom(2, 1, &r(1, 4)).unwrap(), r(5, 4));
        assert!(matches!(qbinom(2, 3, &q2), Err(QError::OutOfRange(_))));
        assert_eq!(qbinom(6, 2, &q2).unwrap(), qbinom(6, 4, &q2).unwrap());
    }

    #[test]
    fn phi_trivial_cases() {
        let q2 = r(1, 16);
        let spec = PhiSpec::new(vec![r(2, 3), r(1, 5)], vec![r(3, 11)], q2.clone(), Q::from_integer(0.into()));
        // argument 0 needs a terminating spec for the exact path
        let mut s = spec.clone();
        s.max_terms = Some(4);
        assert_eq!(rphis(&s).unwrap(), r(1, 1));
        let spec = PhiSpec::new(vec![r(1, 1), r(1, 5)], vec![r(3, 11)], q2.clone(), r(2, 3));
        assert_eq!(rphis(&spec).unwrap(), r(1, 1));
    }

    #[test]
    fn phi_two_terms_by_hand() {
        // numerators (base^-1, b), denominator c: stops after the n = 1 term
        let base = r(1, 16);
        let (b, c, z) = (r(2, 7), r(3, 5), r(5, 3));
        let spec = PhiSpec::new(vec![r(16, 1), b.clone()], vec![c.clone()], base.clone(), z.clone());
        let expect = r(1, 1) + (r(1, 1) - r(16, 1)) * (r(1, 1) - b) * z / ((r(1, 1) - c) * (r(1, 1) - base));
        assert_eq!(rphis(&spec).unwrap(), expect);
    }

    #[test]
    fn phi_reports_pole() {
        let base = r(1, 4);
        // denominator base^-1 vanishes at index 1, numerator base^-3 runs to index 3
        let spec = PhiSpec::new(vec![r(64, 1), r(1, 3)], vec![r(4, 1)], base.clone(), base);
        assert!(matches!(rphis(&spec), Err(QError::DenominatorPole(_))));
    }

    #[test]
    fn infinite_product_shift() {
        let tb = TailBound::new(1e-15, 0.5, 500).unwrap();
        let (a, q) = (0.2f64, 0.25f64);
        let full = qpoch_inf(&a, &q, &tb).unwrap().value;
        let shifted = qpoch_inf(&(a * q.powi(3)), &q, &tb).unwrap().value;
        assert!((full / shifted - qpoch(&a, &q, 3)).abs() < 1e-14);
        assert_eq!(qpoch_inf(&0.0f64, &q, &tb).unwrap().value, 1.0);
        let brute = qpoch(&0.5f64, &0.5, 200);
        assert!((qpoch_inf(&0.5f64, &0.5, &tb).unwrap().value - brute).abs() < 1e-12);
        assert!(matches!(qpoch_inf(&0.5f64, &1.5, &tb), Err(QError::NonConvergent(_))));
    }

    #[test]
    fn summation_x_y_zero_and_a_one() {
        let q = r(1, 4);
        // a = q^-2
        let sp = SummationParams::from_abcd(r(16, 1), r(2, 3), r(3, 5), r(5, 7));
        let range = SumRange::Terminating(2);
        let lhs = lemma21_lhs(0, 0, &sp, &q, &range).unwrap().value;
        let rhs = lemma21_rhs(0, 0, &sp, &q, &range).unwrap().value;
        assert_eq!(lhs, rhs);
        let at = sp.a.clone() * sp.bcd.clone();
        assert_eq!(rhs, qpoch(&at, &q, 2));
        let sp = SummationParams::from_abcd(r(1, 1), r(2, 3), r(3, 5), r(5, 7));
        let range = SumRange::Terminating(0);
        assert_eq!(
            lemma21_lhs(0, 0, &sp, &q, &range).unwrap().value,
            lemma21_rhs(0, 0, &sp, &q, &range).unwrap().value
        );
    }

    #[test]
    fn summation_generic_rationals() {
        let q = r(1, 4);
        let sp = SummationParams::from_abcd(r(16, 1), r(2, 3), r(3, 5), r(5, 7));
        let range = SumRange::Terminating(2);
        assert_eq!(
            lemma21_lhs(1, 1, &sp, &q, &range).unwrap().value,
            lemma21_rhs(1, 1, &sp, &q, &range).unwrap().value
        );
        let sp = SummationParams { a: r(256, 1), ..sp };
        let range = SumRange::Terminating(4);
        for x in 0..=4 {
            for y in 0..=4 {
                let rhs = lemma21_rhs(x, y, &sp, &q, &range).unwrap().value;
                assert_eq!(lemma21_lhs(x, y, &sp, &q, &range).unwrap().value, rhs);
                assert_eq!(lemma21_lhs_regular(x, y, &sp, &q, &range).unwrap().value, rhs);
            }
        }
    }

    #[test]
    fn summation_out_of_range_is_reported() {
        let q = r(1, 4);
        let sp = SummationParams::from_abcd(r(4, 1), r(2, 3), r(3, 5), r(5, 7));
        assert!(matches!(
            lemma21_lhs(2, 0, &sp, &q, &SumRange::Terminating(1)),
            Err(QError::OutOfRange(_))
        ));
    }

    #[test]
    fn summation_convergent_case() {
        let q = 0.25f64;
        let tb = TailBound::new(1e-15, 0.9, 2000).unwrap();
        let sp = SummationParams::from_abcd(0.3, 0.7, 0.6, 0.5);
        for x in 0..4 {
            for y in 0..4 {
                let l = lemma21_lhs(x, y, &sp, &q, &SumRange::Convergent(tb)).unwrap();
                let r = lemma21_rhs(x, y, &sp, &q, &SumRange::Convergent(tb)).unwrap();
                let scale = l.value.abs().max(1.0);
                assert!((l.value - r.value).abs() <= 1e-11 * scale, "{x} {y} {} {}", l.value, r.value);
            }
        }
    }
}
