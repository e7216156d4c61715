//! Matrix realizations of `U_q(sl₂)` under `π_N` and truncated `π_k`, the
//! twisted primitive elements, tensor-product coproducts, and the algebraic
//! identities they satisfy.
//!
//! Tensor bases are ordered row-major over `(n₁, …, n_M)` with `n₁` slowest,
//! which is the order produced by [`OpMatrix::kron`].

use crate::error::{QError, Result};
use crate::orthopoly::{asc, kraw, AscParams, KrawParams};
use crate::scalar::{Exponent, HalfInt, QBase, Scalar};

/// Dense square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct OpMatrix<S> {
    dim: usize,
    data: Vec<S>,
}

impl<S: Scalar> OpMatrix<S> {
    pub fn zeros(dim: usize) -> Self {
        OpMatrix { dim, data: vec![S::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag((0..dim).map(|_| S::one()).collect())
    }

    pub fn diag(entries: Vec<S>) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, e) in entries.into_iter().enumerate() {
            m.set(i, i, e);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.dim + j] = v;
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(QError::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        Ok(())
    }

    /// Matrix product; zero entries of `self` are skipped, which keeps the
    /// banded operators of this crate cheap in exact arithmetic.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..d {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * d + j;
                    out.data[idx] = out.data[idx].clone() + a.clone() * b.clone();
                }
            }
        }
        Ok(out)
    }

    fn zip(&self, other: &Self, f: impl Fn(&S, &S) -> S) -> Result<Self> {
        self.same_dim(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect();
        Ok(OpMatrix { dim: self.dim, data })
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a.clone() + b.clone())
    }

    pub fn minus(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a.clone() - b.clone())
    }

    pub fn scaled(&self, c: &S) -> Self {
        if c.is_zero() {
            return Self::zeros(self.dim);
        }
        OpMatrix { dim: self.dim, data: self.data.iter().map(|a| a.clone() * c.clone()).collect() }
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (da, db) = (self.dim, other.dim);
        let d = da * db;
        let mut out = Self::zeros(d);
        for i in 0..da {
            for j in 0..da {
                let a = self.get(i, j);
                if a.is_zero() {
                    continue;
                }
                for k in 0..db {
                    for l in 0..db {
                        let b = other.get(k, l);
                        if !b.is_zero() {
                            out.set(i * db + k, j * db + l, a.clone() * b.clone());
                        }
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[S]) -> Result<Vec<S>> {
        if v.len() != self.dim {
            return Err(QError::DimensionMismatch { expected: self.dim, found: v.len() });
        }
        Ok((0..self.dim)
            .map(|i| {
                let mut acc = S::zero();
                for (j, x) in v.iter().enumerate() {
                    let a = self.get(i, j);
                    if !a.is_zero() {
                        acc = acc + a.clone() * x.clone();
                    }
                }
                acc
            })
            .collect())
    }

    pub fn transpose_conj(&self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    /// Largest entry magnitude on the rows where `mask` is true.
    pub fn max_abs_on(&self, mask: &[bool]) -> f64 {
        let mut m = 0.0f64;
        for (i, keep) in mask.iter().enumerate().take(self.dim) {
            if *keep {
                for j in 0..self.dim {
                    m = m.max(self.get(i, j).magnitude());
                }
            }
        }
        m
    }

    /// True when every entry on the masked rows is zero (exactly, or within
    /// the float threshold at `scale`).
    pub fn is_zero_on(&self, mask: &[bool], scale: f64) -> bool {
        mask.iter()
            .enumerate()
            .take(self.dim)
            .filter(|(_, keep)| **keep)
            .all(|(i, _)| (0..self.dim).all(|j| self.get(i, j).is_negligible(scale)))
    }
}

/// Which representation the generators act in.
#[derive(Clone, Debug, PartialEq)]
pub enum RepSpec<E> {
    /// `π_N` on `{0..N}`.
    Su2 { n: u32 },
    /// `π_k` truncated to `{0..trunc}`; `F` maps the last basis vector outside.
    Su11 { k: E, trunc: u32 },
}

impl<E> RepSpec<E> {
    pub fn dim(&self) -> usize {
        match self {
            RepSpec::Su2 { n } => *n as usize + 1,
            RepSpec::Su11 { trunc, .. } => *trunc as usize + 1,
        }
    }
}

/// Images of `K, K⁻¹, E, F`, with the rows on which they are exact.
#[derive(Clone, Debug, PartialEq)]
pub struct Gens<S> {
    pub k: OpMatrix<S>,
    pub k_inv: OpMatrix<S>,
    pub e: OpMatrix<S>,
    pub f: OpMatrix<S>,
    pub exact_rows: Vec<bool>,
}

impl<S: Scalar> Gens<S> {
    pub fn dim(&self) -> usize {
        self.k.dim()
    }

    pub fn k_squared(&self) -> Result<OpMatrix<S>> {
        self.k.matmul(&self.k)
    }

    pub fn k_inv_squared(&self) -> Result<OpMatrix<S>> {
        self.k_inv.matmul(&self.k_inv)
    }
}

/// `π_N` or truncated `π_k` applied to the generators.
pub fn gens<S: Scalar>(qb: &QBase<S>, rep: &RepSpec<S::Exp>) -> Result<Gens<S>> {
    let d = rep.dim();
    let (mut k, mut k_inv, mut e, mut f) =
        (OpMatrix::zeros(d), OpMatrix::zeros(d), OpMatrix::zeros(d), OpMatrix::zeros(d));
    let mut exact_rows = vec![true; d];
    match rep {
        RepSpec::Su2 { n: big_n } => {
            let bn = *big_n as i64;
            for n in 0..d {
                let ni = n as i64;
                let kk = qb.qpow_half(HalfInt::from_twice(2 * ni - bn));
                k_inv.set(n, n, S::one() / kk.clone());
                k.set(n, n, kk);
                if n >= 1 {
                    e.set(n, n - 1, qb.qbracket(&S::Exp::int(ni)));
                }
                if n < d - 1 {
                    f.set(n, n + 1, qb.qbracket(&S::Exp::int(bn - ni)));
                }
            }
        }
        RepSpec::Su11 { k: kp, trunc } => {
            let half_k = kp.halved().ok_or_else(|| {
                QError::InvalidParameter(format!("q^(k/2) with k = {kp} is outside the exact field"))
            })?;
            for n in 0..d {
                let ni = n as i64;
                let kk = qb.qpow(&(S::Exp::int(ni) + half_k.clone()));
                k_inv.set(n, n, S::one() / kk.clone());
                k.set(n, n, kk);
                if n >= 1 {
                    e.set(n, n - 1, qb.qbracket(&S::Exp::int(ni)));
                }
                if n < d - 1 {
                    f.set(n, n + 1, -qb.qbracket(&(S::Exp::int(ni) + kp.clone())));
                }
            }
            exact_rows[*trunc as usize] = false;
        }
    }
    Ok(Gens { k, k_inv, e, f, exact_rows })
}

/// The twisted primitive elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Twist {
    /// `q^{u+½}EK + q^{−u−½}FK + [s]`
    X,
    /// `q^{−u−½}EK⁻¹ + q^{u+½}FK⁻¹ + [s]K⁻²`
    XTilde,
    /// `q^{u+½}EK − q^{−u−½}FK + ⟦s⟧`
    Y,
    /// `q^{−u−½}EK⁻¹ − q^{u+½}FK⁻¹ + ⟦s⟧K⁻²`
    YTilde,
}

impl Twist {
    fn constant<S: Scalar>(self, qb: &QBase<S>, s: &S::Exp) -> S {
        match self {
            Twist::X | Twist::XTilde => qb.qbracket(s),
            Twist::Y | Twist::YTilde => qb.qbrace_su11(s),
        }
    }
}

/// The matrix of a twisted primitive element in the representation `g`.
pub fn twist<S: Scalar>(qb: &QBase<S>, g: &Gens<S>, which: Twist, u: &S::Exp, s: &S::Exp) -> OpMatrix<S> {
    let up = qb.qpow(&(u.clone() + S::Exp::half(HalfInt::HALF)));
    let down = S::one() / up.clone();
    let c = which.constant(qb, s);
    let build = || -> Result<OpMatrix<S>> {
        match which {
            Twist::X | Twist::Y => {
                let ek = g.e.matmul(&g.k)?.scaled(&up);
                let mut fk = g.f.matmul(&g.k)?.scaled(&down);
                if which == Twist::Y {
                    fk = fk.scaled(&-S::one());
                }
                ek.plus(&fk)?.plus(&OpMatrix::identity(g.dim()).scaled(&c))
            }
            Twist::XTilde | Twist::YTilde => {
                let ek = g.e.matmul(&g.k_inv)?.scaled(&down);
                let mut fk = g.f.matmul(&g.k_inv)?.scaled(&up);
                if which == Twist::YTilde {
                    fk = fk.scaled(&-S::one());
                }
                ek.plus(&fk)?.plus(&g.k_inv_squared()?.scaled(&c))
            }
        }
    };
    build().expect("generators share one dimension")
}

/// `[A, B]_q = qAB − q⁻¹BA`.
pub fn q_commutator<S: Scalar>(qb: &QBase<S>, a: &OpMatrix<S>, b: &OpMatrix<S>) -> Result<OpMatrix<S>> {
    a.matmul(b)?.scaled(&qb.q()).minus(&b.matmul(a)?.scaled(&qb.q_inv()))
}

/// `KE − qEK`, `KF − q⁻¹FK` and `[E,F] − (K² − K⁻²)/(q − q⁻¹)`.
pub fn relation_residuals<S: Scalar>(qb: &QBase<S>, g: &Gens<S>) -> Result<[OpMatrix<S>; 3]> {
    let ke = g.k.matmul(&g.e)?.minus(&g.e.matmul(&g.k)?.scaled(&qb.q()))?;
    let kf = g.k.matmul(&g.f)?.minus(&g.f.matmul(&g.k)?.scaled(&qb.q_inv()))?;
    let comm = g.e.matmul(&g.f)?.minus(&g.f.matmul(&g.e)?)?;
    let cas = g
        .k_squared()?
        .minus(&g.k_inv_squared()?)?
        .scaled(&(S::one() / (qb.q() - qb.q_inv())));
    Ok([ke, kf, comm.minus(&cas)?])
}

/// `w(m)·A[m,n] − w(n)·conj(A*[n,m])`: zero when `⟨Af,g⟩ = ⟨f,A*g⟩` for the weight `w`.
pub fn star_residual<S: Scalar>(a: &OpMatrix<S>, astar: &OpMatrix<S>, weights: &[S]) -> Result<OpMatrix<S>> {
    a.same_dim(astar)?;
    if weights.len() != a.dim() {
        return Err(QError::DimensionMismatch { expected: a.dim(), found: weights.len() });
    }
    let d = a.dim();
    let mut out = OpMatrix::zeros(d);
    for m in 0..d {
        for n in 0..d {
            let lhs = weights[m].clone() * a.get(m, n).clone();
            let rhs = weights[n].clone() * astar.get(n, m).conj();
            out.set(m, n, lhs - rhs);
        }
    }
    Ok(out)
}

fn expansion_residual<S: Scalar>(
    qb: &QBase<S>,
    g: &Gens<S>,
    plain: Twist,
    tilde: Twist,
    (u, v, s, t): (&S::Exp, &S::Exp, &S::Exp, &S::Exp),
) -> Result<OpMatrix<S>> {
    let k2 = g.k_squared()?;
    let xt = twist(qb, g, tilde, v, t);
    let uv = u.clone() + v.clone();
    let denom = qb.qpow_int(2) - qb.qpow_int(-2);
    let left = q_commutator(qb, &k2, &xt)?.scaled(&(qb.qpow(&uv) / denom.clone()));
    let right = q_commutator(qb, &xt, &k2)?.scaled(&(qb.qpow(&uv.times(-1)) / denom));
    let c = plain.constant(qb, s) - tilde.constant(qb, t) * qb.qbrace(&uv);
    let rhs = left.plus(&right)?.plus(&OpMatrix::identity(g.dim()).scaled(&c))?;
    twist(qb, g, plain, u, s).minus(&rhs)
}

/// `X_{u,s}` minus its expansion in `K²` and `X̃_{v,t}`.
pub fn lemma31_residual<S: Scalar>(
    qb: &QBase<S>,
    g: &Gens<S>,
    u: &S::Exp,
    v: &S::Exp,
    s: &S::Exp,
    t: &S::Exp,
) -> Result<OpMatrix<S>> {
    expansion_residual(qb, g, Twist::X, Twist::XTilde, (u, v, s, t))
}

/// The same expansion for `Y_{u,s}` in `K²` and `Ỹ_{v,t}`.
pub fn cor41_residual<S: Scalar>(
    qb: &QBase<S>,
    g: &Gens<S>,
    u: &S::Exp,
    v: &S::Exp,
    s: &S::Exp,
    t: &S::Exp,
) -> Result<OpMatrix<S>> {
    expansion_residual(qb, g, Twist::Y, Twist::YTilde, (u, v, s, t))
}

/// `K⁻²X_{0,s} − X̃_{1,s}` (or the `Y` analogue).
pub fn rewrite_residual<S: Scalar>(qb: &QBase<S>, g: &Gens<S>, s: &S::Exp, su11: bool) -> Result<OpMatrix<S>> {
    let (plain, tilde) = if su11 { (Twist::Y, Twist::YTilde) } else { (Twist::X, Twist::XTilde) };
    let lhs = g.k_inv_squared()?.matmul(&twist(qb, g, plain, &S::Exp::int(0), s))?;
    lhs.minus(&twist(qb, g, tilde, &S::Exp::int(1), s))
}

/// `(A − λ)v`, entrywise.
pub fn eigen_residual<S: Scalar>(op: &OpMatrix<S>, v: &[S], lambda: &S) -> Result<Vec<S>> {
    let av = op.apply(v)?;
    Ok(av.into_iter().zip(v).map(|(a, x)| a - lambda.clone() * x.clone()).collect())
}

/// Residual of the eigenvalue equation of `X̃_{u,s}` on `k_{u,s}(·,x)` (`π_N`)
/// or of `Ỹ_{u,s}` on `φ_{u,s}(·,x)` (truncated `π_k`), with the exact-row mask.
pub fn eigen_univariate<S: Scalar>(
    qb: &QBase<S>,
    rep: &RepSpec<S::Exp>,
    u: &S::Exp,
    s: &S::Exp,
    x: u32,
) -> Result<(Vec<S>, Vec<bool>)> {
    let g = gens(qb, rep)?;
    let d = rep.dim() as u32;
    let (op, col, lambda) = match rep {
        RepSpec::Su2 { n: big_n } => {
            let kp = KrawParams { u: u.clone(), s: s.clone(), n_max: *big_n };
            let col = (0..d).map(|n| kraw(qb, &kp, n, x)).collect::<Result<Vec<_>>>()?;
            let lam = qb.qbracket(&(S::Exp::int(2 * x as i64 - *big_n as i64) + s.clone()));
            (twist(qb, &g, Twist::XTilde, u, s), col, lam)
        }
        RepSpec::Su11 { k, .. } => {
            let ap = AscParams { u: u.clone(), s: s.clone(), k: k.clone() };
            let col = (0..d).map(|n| asc(qb, &ap, n, x)).collect::<Result<Vec<_>>>()?;
            let lam = qb.qbrace_su11(&(S::Exp::int(2 * x as i64) + k.clone() + s.clone()));
            (twist(qb, &g, Twist::YTilde, u, s), col, lam)
        }
    };
    Ok((eigen_residual(&op, &col, &lambda)?, g.exact_rows))
}

fn kron_mask(a: &[bool], b: &[bool]) -> Vec<bool> {
    a.iter().flat_map(|x| b.iter().map(move |y| *x && *y)).collect()
}

/// Generators on the tensor product of `sites` via `Δ^{M−1} = (Δ ⊗ 1^{⊗(M−2)})Δ^{M−2}`,
/// with `Δ(K) = K⊗K`, `Δ(E) = K⊗E + E⊗K⁻¹`, `Δ(F) = K⊗F + F⊗K⁻¹`.
pub fn delta_gens<S: Scalar>(sites: &[Gens<S>]) -> Result<Gens<S>> {
    let (first, rest) = sites
        .split_first()
        .ok_or_else(|| QError::InvalidParameter("coproduct of an empty tensor product".into()))?;
    let mut acc = first.clone();
    for g in rest {
        acc = Gens {
            k: acc.k.kron(&g.k),
            k_inv: acc.k_inv.kron(&g.k_inv),
            e: acc.k.kron(&g.e).plus(&acc.e.kron(&g.k_inv))?,
            f: acc.k.kron(&g.f).plus(&acc.f.kron(&g.k_inv))?,
            exact_rows: kron_mask(&acc.exact_rows, &g.exact_rows),
        };
    }
    Ok(acc)
}

fn krons<S: Scalar>(ops: Vec<OpMatrix<S>>) -> OpMatrix<S> {
    let mut it = ops.into_iter();
    let first = it.next().unwrap_or_else(|| OpMatrix::identity(1));
    it.fold(first, |acc, m| acc.kron(&m))
}

/// `Δ^{M−1}` of `X̃_{u,s}` or `Ỹ_{u,s}` in coideal form:
/// `Σ_i 1^{⊗(i−1)} ⊗ Z_i ⊗ (K⁻²)^{⊗(M−i)}`, where `Z_1` is the element itself
/// and `Z_i` for `i > 1` is the element with `s = 0` and no `K⁻²` constant term.
pub fn coideal_twisted<S: Scalar>(
    qb: &QBase<S>,
    sites: &[Gens<S>],
    which: Twist,
    u: &S::Exp,
    s: &S::Exp,
) -> Result<OpMatrix<S>> {
    if !matches!(which, Twist::XTilde | Twist::YTilde) {
        return Err(QError::InvalidParameter("coideal form exists for X̃ and Ỹ only".into()));
    }
    let zero = S::Exp::int(0);
    let mut total: Option<OpMatrix<S>> = None;
    for (i, g) in sites.iter().enumerate() {
        let core = if i == 0 {
            twist(qb, g, which, u, s)
        } else {
            let bare = twist(qb, g, which, u, &zero);
            bare.minus(&g.k_inv_squared()?.scaled(&which.constant(qb, &zero)))?
        };
        let mut ops: Vec<OpMatrix<S>> = sites[..i].iter().map(|h| OpMatrix::identity(h.dim())).collect();
        ops.push(core);
        for h in &sites[i + 1..] {
            ops.push(h.k_inv_squared()?);
        }
        let term = krons(ops);
        total = Some(match total {
            Some(t) => t.plus(&term)?,
            None => term,
        });
    }
    total.ok_or_else(|| QError::InvalidParameter("coproduct of an empty tensor product".into()))
}

/// Algebra elements available as tensor operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Element {
    XTilde,
    YTilde,
    KSquared,
    KInvSquared,
}

/// Placement of `Δ^{j−1}` among the `M` sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// On sites `1..j`, identities on the rest.
    Left,
    /// On sites `M−j+1..M`, identities before.
    Right,
}

/// `Δ^{j−1}_L` or `Δ^{j−1}_R` of an element on the tensor product of `sites`.
pub fn coproduct_op<S: Scalar>(
    qb: &QBase<S>,
    sites: &[Gens<S>],
    element: Element,
    u: &S::Exp,
    s: &S::Exp,
    side: Side,
    j: usize,
) -> Result<OpMatrix<S>> {
    let m = sites.len();
    if j == 0 || j > m {
        return Err(QError::OutOfRange(format!("coproduct level j = {j} outside 1..={m}")));
    }
    let block = match side {
        Side::Left => &sites[..j],
        Side::Right => &sites[m - j..],
    };
    let core = match element {
        Element::XTilde => coideal_twisted(qb, block, Twist::XTilde, u, s)?,
        Element::YTilde => coideal_twisted(qb, block, Twist::YTilde, u, s)?,
        Element::KSquared => krons(block.iter().map(|g| g.k_squared()).collect::<Result<_>>()?),
        Element::KInvSquared => krons(block.iter().map(|g| g.k_inv_squared()).collect::<Result<_>>()?),
    };
    Ok(pad(sites, core, side, j))
}

/// Kronecker-pads a `Δ^{j−1}` block with identities on the untouched sites.
pub fn pad<S: Scalar>(sites: &[Gens<S>], core: OpMatrix<S>, side: Side, j: usize) -> OpMatrix<S> {
    let m = sites.len();
    let ids = |range: &[Gens<S>]| range.iter().map(|g| OpMatrix::identity(g.dim())).collect::<Vec<_>>();
    match side {
        Side::Left => {
            let mut ops = vec![core];
            ops.extend(ids(&sites[j..]));
            krons(ops)
        }
        Side::Right => {
            let mut ops = ids(&sites[..m - j]);
            ops.push(core);
            krons(ops)
        }
    }
}

/// Row mask of a tensor product: exact where every factor is exact.
pub fn tensor_mask<S: Scalar>(sites: &[Gens<S>]) -> Vec<bool> {
    sites.iter().fold(vec![true], |acc, g| kron_mask(&acc, &g.exact_rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::Zero;

    type Q = BigRational;

    fn qb() -> QBase<Q> {
        QBase::from_p(1, 2).unwrap()
    }

    fn h(n: i64) -> HalfInt {
        HalfInt::int(n)
    }

    fn r(n: i64, d: i64) -> Q {
        Q::new(n.into(), d.into())
    }

    #[test]
    fn small_generators() {
        let g = gens(&qb(), &RepSpec::Su2 { n: 0 }).unwrap();
        assert_eq!(g.k, OpMatrix::identity(1));
        assert!(g.e.get(0, 0).is_zero() && g.f.get(0, 0).is_zero());
        let g = gens(&qb(), &RepSpec::Su2 { n: 1 }).unwrap();
        assert_eq!(g.k, OpMatrix::diag(vec![r(2, 1), r(1, 2)]));
        assert_eq!(g.k.matmul(&g.k_inv).unwrap(), OpMatrix::identity(2));
        // q = 1/2 is outside the exact field, so the su(1,1) entry is checked in floats
        let qf = QBase::<f64>::from_q(&r(1, 2)).unwrap();
        let g = gens(&qf, &RepSpec::Su11 { k: 1.0, trunc: 3 }).unwrap();
        assert!((g.f.get(1, 2) + 2.5).abs() < 1e-14);
        assert!(!g.exact_rows[3] && g.exact_rows[2]);
    }

    #[test]
    fn twisted_elements_small() {
        let qb = qb();
        let g = gens(&qb, &RepSpec::Su2 { n: 0 }).unwrap();
        let x = twist(&qb, &g, Twist::X, &h(1), &h(2));
        assert_eq!(x, OpMatrix::identity(1).scaled(&qb.qbracket(&h(2))));
        let g = gens(&qb, &RepSpec::Su2 { n: 1 }).unwrap();
        let xt = twist(&qb, &g, Twist::XTilde, &h(0), &h(2));
        let s2 = qb.qbracket(&h(2));
        assert_eq!(xt.get(0, 0), &(s2.clone() * qb.q()));
        assert_eq!(xt.get(1, 1), &(s2 * qb.q_inv()));
        let g = gens(&qb, &RepSpec::Su11 { k: h(1), trunc: 2 }).unwrap();
        let yt = twist(&qb, &g, Twist::YTilde, &h(0), &h(0));
        assert!(yt.get(0, 2).is_zero() && yt.get(2, 0).is_zero());
        assert!(!yt.get(0, 1).is_zero() && !yt.get(1, 0).is_zero());
    }

    #[test]
    fn relations_hold() {
        let qb = qb();
        for n in 0..=4 {
            let g = gens(&qb, &RepSpec::Su2 { n }).unwrap();
            for res in relation_residuals(&qb, &g).unwrap() {
                assert!(res.is_zero_on(&g.exact_rows, 1.0));
            }
        }
        let g = gens(&qb, &RepSpec::Su11 { k: h(2), trunc: 10 }).unwrap();
        let [ke, kf, comm] = relation_residuals(&qb, &g).unwrap();
        assert!(ke.is_zero_on(&[true; 11], 1.0) && kf.is_zero_on(&[true; 11], 1.0));
        assert!(comm.is_zero_on(&g.exact_rows, 1.0));
        assert!(!comm.is_zero_on(&[true; 11], 1.0));
    }

    #[test]
    fn coproduct_is_an_algebra_map() {
        let qb = qb();
        let sites: Vec<_> = [1, 2].iter().map(|&n| gens(&qb, &RepSpec::Su2 { n }).unwrap()).collect();
        let d = delta_gens(&sites).unwrap();
        for res in relation_residuals(&qb, &d).unwrap() {
            assert!(res.is_zero_on(&d.exact_rows, 1.0));
        }
        let k2 = coproduct_op(&qb, &sites, Element::KSquared, &h(0), &h(0), Side::Left, 2).unwrap();
        assert_eq!(k2, sites[0].k_squared().unwrap().kron(&sites[1].k_squared().unwrap()));
    }

    #[test]
    fn coideal_matches_homomorphism_route() {
        let qb = qb();
        let sites: Vec<_> = [1, 2, 1].iter().map(|&n| gens(&qb, &RepSpec::Su2 { n }).unwrap()).collect();
        let hom = twist(&qb, &delta_gens(&sites).unwrap(), Twist::XTilde, &h(1), &HalfInt::HALF);
        let coi = coideal_twisted(&qb, &sites, Twist::XTilde, &h(1), &HalfInt::HALF).unwrap();
        assert_eq!(hom, coi);
        let two = &sites[..2];
        let direct = OpMatrix::identity(2)
            .kron(&twist(&qb, &two[1], Twist::XTilde, &h(0), &h(0)))
            .plus(&twist(&qb, &two[0], Twist::XTilde, &h(0), &h(3)).kron(&two[1].k_inv_squared().unwrap()))
            .unwrap();
        assert_eq!(coideal_twisted(&qb, two, Twist::XTilde, &h(0), &h(3)).unwrap(), direct);
    }

    #[test]
    fn coproduct_padding() {
        let qb = qb();
        let sites: Vec<_> = [1, 1].iter().map(|&n| gens(&qb, &RepSpec::Su2 { n }).unwrap()).collect();
        let left = coproduct_op(&qb, &sites, Element::XTilde, &h(0), &h(1), Side::Left, 1).unwrap();
        let xt = twist(&qb, &sites[0], Twist::XTilde, &h(0), &h(1));
        assert_eq!(left, xt.kron(&OpMatrix::identity(2)));
        let right = coproduct_op(&qb, &sites, Element::XTilde, &h(0), &h(1), Side::Right, 1).unwrap();
        assert_eq!(right, OpMatrix::identity(2).kron(&xt));
        assert!(coproduct_op(&qb, &sites, Element::XTilde, &h(0), &h(1), Side::Right, 3).is_err());
    }

    #[test]
    fn univariate_eigen_small() {
        let qb = qb();
        let (res, _) = eigen_univariate(&qb, &RepSpec::Su2 { n: 0 }, &h(0), &h(2), 0).unwrap();
        assert!(res[0].is_zero());
        for x in 0..=4 {
            let (res, _) = eigen_univariate(&qb, &RepSpec::Su2 { n: 4 }, &h(1), &h(2), x).unwrap();
            assert!(res.iter().all(|r| r.is_zero()));
        }
    }
}
