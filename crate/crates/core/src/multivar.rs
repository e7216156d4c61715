//! Multivariate functions on `M`-fold tensor products: heights, nested
//! polynomials, the shift set `E_j`, transfer coefficients, multivariate
//! `R_r`/`P_r` and their biorthogonality and GEVP residuals.

use std::collections::HashMap;
use std::fmt;

use itertools::Itertools;

use crate::error::{out_of_range, QError, Result};
use crate::orthopoly::{
    asc, asc_big_w, asc_diff_coeffs, asc_dyn_coeffs, kraw, kraw_big_w, kraw_diff_coeffs, kraw_dyn_coeffs,
    kraw_w, AscParams, KrawParams, Shift,
};
use crate::qseries::{certified_recip, product_error, Certified, SeriesSum, TailBound};
use crate::ratfun::{partner, pr_closed_regular, pr_inner, rr_closed_regular, PrParams, RrParams, SumOver};
use crate::scalar::{Exponent, QBase, Scalar};
use crate::uqsl2::{coproduct_op, delta_gens, gens, pad, tensor_mask, twist, Element, Gens, RepSpec, Side, Twist};

/// Per-site sizes: `N̄` for `π_{N_1}⊗…⊗π_{N_M}`, `k̄` for `π_{k_1}⊗…⊗π_{k_M}`.
#[derive(Clone, Debug, PartialEq)]
pub enum Sizes<E> {
    Su2(Vec<u32>),
    Su11(Vec<E>),
}

impl<E: Exponent> Sizes<E> {
    pub fn len(&self) -> usize {
        match self {
            Sizes::Su2(n) => n.len(),
            Sizes::Su11(k) => k.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `h_{i+1} − h_i` at site `i`.
    fn step(&self, i: usize, y: u32) -> E {
        match self {
            Sizes::Su2(n) => E::int(2 * y as i64 - n[i] as i64),
            Sizes::Su11(k) => E::int(2 * y as i64) + k[i].clone(),
        }
    }

    fn max_index(&self, i: usize) -> Option<u32> {
        match self {
            Sizes::Su2(n) => Some(n[i]),
            Sizes::Su11(_) => None,
        }
    }

    fn check_nonempty(&self) -> Result<()> {
        if self.is_empty() {
            return Err(QError::InvalidParameter("at least one site is needed".into()));
        }
        Ok(())
    }

    /// Checks length and componentwise range of a multi-index.
    pub fn check(&self, idx: &[u32]) -> Result<()> {
        self.check_nonempty()?;
        if idx.len() != self.len() {
            return Err(QError::DimensionMismatch { expected: self.len(), found: idx.len() });
        }
        for (i, &y) in idx.iter().enumerate() {
            if let Some(m) = self.max_index(i) {
                if y > m {
                    return Err(out_of_range(format!("index {i} is {y}, above N = {m}")));
                }
            }
        }
        Ok(())
    }

    fn contains(&self, idx: &[i64]) -> bool {
        idx.iter()
            .enumerate()
            .all(|(i, &y)| y >= 0 && self.max_index(i).is_none_or(|m| y <= m as i64))
    }

    /// The bracket `[·]` (su2) or `⟦·⟧` (su11) used for heights and eigenvalues.
    fn bracket<S: Scalar<Exp = E>>(&self, qb: &QBase<S>, t: &E) -> S {
        match self {
            Sizes::Su2(_) => qb.qbracket(t),
            Sizes::Su11(_) => qb.qbrace_su11(t),
        }
    }
}

/// `h_0, …, h_M` for base `t` and multi-index `ȳ`.
pub fn heights<E: Exponent>(sizes: &Sizes<E>, base: &E, ys: &[u32]) -> Result<Vec<E>> {
    sizes.check(ys)?;
    let mut out = Vec::with_capacity(ys.len() + 1);
    let mut h = base.clone();
    out.push(h.clone());
    for (i, &y) in ys.iter().enumerate() {
        h = h + sizes.step(i, y);
        out.push(h.clone());
    }
    Ok(out)
}

/// `h_j(ȳ, base)`.
pub fn height<E: Exponent>(sizes: &Sizes<E>, base: &E, ys: &[u32], j: usize) -> Result<E> {
    let hs = heights(sizes, base, ys)?;
    hs.get(j).cloned().ok_or_else(|| out_of_range(format!("height index {j} outside 0..={}", ys.len())))
}

/// `K_{v,t}(n̄, ȳ) = Π_j k_{v,h_{j−1}(ȳ,t)}(n_j, y_j)`.
pub fn nested_kraw<S: Scalar>(qb: &QBase<S>, v: &S::Exp, t: &S::Exp, n: &[u32], ys: &[u32], ns: &[u32]) -> Result<S> {
    let sizes = Sizes::Su2(n.to_vec());
    let hs = heights(&sizes, t, ys)?;
    sizes.check(ns)?;
    let mut acc = S::one();
    for j in 0..n.len() {
        let kp = KrawParams { u: v.clone(), s: hs[j].clone(), n_max: n[j] };
        acc = acc * kraw(qb, &kp, ns[j], ys[j])?;
    }
    Ok(acc)
}

/// `Φ_{v,t}(n̄, ȳ) = Π_j φ_{v,h'_{j−1}(ȳ,t)}(n_j, y_j)`.
pub fn nested_asc<S: Scalar>(qb: &QBase<S>, v: &S::Exp, t: &S::Exp, k: &[S::Exp], ys: &[u32], ns: &[u32]) -> Result<S> {
    let sizes = Sizes::Su11(k.to_vec());
    let hs = heights(&sizes, t, ys)?;
    sizes.check(ns)?;
    let mut acc = S::one();
    for j in 0..k.len() {
        let ap = AscParams { u: v.clone(), s: hs[j].clone(), k: k[j].clone() };
        acc = acc * asc(qb, &ap, ns[j], ys[j])?;
    }
    Ok(acc)
}

fn nested<S: Scalar>(qb: &QBase<S>, sizes: &Sizes<S::Exp>, v: &S::Exp, t: &S::Exp, ys: &[u32], ns: &[u32]) -> Result<S> {
    match sizes {
        Sizes::Su2(n) => nested_kraw(qb, v, t, n, ys, ns),
        Sizes::Su11(k) => nested_asc(qb, v, t, k, ys, ns),
    }
}

/// A shift vector in `E_j`: zero on the first `M − j` entries, prefix sums in `{−1, 0, 1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Epsilon(Vec<i32>);

impl Epsilon {
    /// Validates membership in `E_j`.
    pub fn new(entries: Vec<i32>, j: usize) -> Result<Self> {
        let m = entries.len();
        if j == 0 || j > m {
            return Err(QError::InvalidEpsilon(format!("level j = {j} outside 1..={m}")));
        }
        if entries[..m - j].iter().any(|&e| e != 0) {
            return Err(QError::InvalidEpsilon(format!("{entries:?} is nonzero before position {}", m - j)));
        }
        let mut sum = 0;
        for &e in &entries {
            if !(-2..=2).contains(&e) {
                return Err(QError::InvalidEpsilon(format!("{entries:?} has an entry outside -2..=2")));
            }
            sum += e;
            if !(-1..=1).contains(&sum) {
                return Err(QError::InvalidEpsilon(format!("{entries:?} has a prefix sum {sum}")));
            }
        }
        Ok(Epsilon(entries))
    }

    pub fn entries(&self) -> &[i32] {
        &self.0
    }

    pub fn sum(&self) -> i32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// `δ_i = 2 Σ_{l<i} ε_l`, the height shift seen by site `i`.
    fn delta(&self, i: usize) -> i64 {
        2 * self.0[..i].iter().map(|&e| e as i64).sum::<i64>()
    }

    fn shifted(&self, ys: &[u32]) -> Vec<i64> {
        ys.iter().zip(&self.0).map(|(&y, &e)| y as i64 + e as i64).collect()
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.iter().join(","))
    }
}

/// `E_j` for `M` sites, lexicographic in the free tail.
pub fn epsilon_set(m: usize, j: usize) -> Result<Vec<Epsilon>> {
    if j == 0 || j > m {
        return Err(out_of_range(format!("level j = {j} outside 1..={m}")));
    }
    let mut out = Vec::new();
    for tail in std::iter::repeat_n(-2i32..=2, j).multi_cartesian_product() {
        let mut entries = vec![0; m - j];
        entries.extend(tail);
        if let Ok(e) = Epsilon::new(entries, j) {
            out.push(e);
        }
    }
    Ok(out)
}

/// The univariate coefficient of kind `(ε, δ)` at one site.
fn site_coeff<S: Scalar>(
    qb: &QBase<S>,
    sizes: &Sizes<S::Exp>,
    i: usize,
    eps: i32,
    delta: i64,
    y: u32,
    h: &S::Exp,
) -> Result<S> {
    let kind = || QError::InvalidEpsilon(format!("no coefficient of kind ({eps}, {delta})"));
    let got = match (sizes, Shift::from_delta(delta)) {
        (_, None) if delta != 0 => return Err(kind()),
        (Sizes::Su2(n), None) => kraw_diff_coeffs(qb, y, h, n[i])?.get(eps).cloned(),
        (Sizes::Su2(n), Some(sh)) => kraw_dyn_coeffs(qb, y, h, n[i], sh)?.get(eps).cloned(),
        (Sizes::Su11(k), None) => asc_diff_coeffs(qb, y, h, &k[i])?.get(eps).cloned(),
        (Sizes::Su11(k), Some(sh)) => asc_dyn_coeffs(qb, y, h, &k[i], sh)?.get(eps).cloned(),
    };
    got.ok_or_else(kind)
}

fn check_level<E: Exponent>(sizes: &Sizes<E>, eps: &Epsilon, j: usize) -> Result<()> {
    let m = sizes.len();
    if eps.0.len() != m {
        return Err(QError::DimensionMismatch { expected: m, found: eps.0.len() });
    }
    Epsilon::new(eps.0.clone(), j).map(|_| ())
}

/// `A^{(j)}_ε(ȳ,t)` (su2) or `C^{(j)}_ε(ȳ,t)` (su11): the product over the last
/// `j` sites of the univariate coefficients of kind `(ε_i, δ_i)` at `(y_i, h_{i−1})`.
pub fn coeff_a<S: Scalar>(
    qb: &QBase<S>,
    sizes: &Sizes<S::Exp>,
    j: usize,
    eps: &Epsilon,
    ys: &[u32],
    t: &S::Exp,
) -> Result<S> {
    check_level(sizes, eps, j)?;
    let hs = heights(sizes, t, ys)?;
    let m = sizes.len();
    let mut acc = S::one();
    for i in m - j..m {
        acc = acc * site_coeff(qb, sizes, i, eps.0[i], eps.delta(i), ys[i], &hs[i])?;
    }
    Ok(acc)
}

/// `B^{(j)}_ε` (su2) or `D^{(j)}_ε` (su11).
pub fn coeff_b<S: Scalar>(
    qb: &QBase<S>,
    sizes: &Sizes<S::Exp>,
    j: usize,
    eps: &Epsilon,
    ys: &[u32],
    t: &S::Exp,
    v: &S::Exp,
) -> Result<S> {
    let a = coeff_a(qb, sizes, j, eps, ys, t)?;
    let hs = heights(sizes, t, ys)?;
    let m = sizes.len();
    let hm = hs[m].clone();
    let one = S::Exp::int(1);
    let bv = qb.qbrace(v);
    Ok(match eps.sum() {
        -1 => a * sizes.bracket(qb, &(hm + v.clone() - one)),
        1 => a * sizes.bracket(qb, &(hm - v.clone() + one)),
        _ if eps.is_zero() => a * sizes.bracket(qb, &hm) * bv.clone() - sizes.bracket(qb, &hs[m - j]) * bv,
        _ => a * sizes.bracket(qb, &hm) * bv,
    })
}

/// Generators of every site: `π_{N_i}`, or `π_{k_i}` truncated at `trunc`.
pub fn site_gens<S: Scalar>(qb: &QBase<S>, sizes: &Sizes<S::Exp>, trunc: u32) -> Result<Vec<Gens<S>>> {
    sizes.check_nonempty()?;
    match sizes {
        Sizes::Su2(n) => n.iter().map(|&n| gens(qb, &RepSpec::Su2 { n })).collect(),
        Sizes::Su11(k) => k.iter().map(|k| gens(qb, &RepSpec::Su11 { k: k.clone(), trunc })).collect(),
    }
}

/// Basis labels `n̄` of the (truncated) tensor space in Kronecker order.
pub fn basis_grid<E: Exponent>(sizes: &Sizes<E>, trunc: u32) -> Vec<Vec<u32>> {
    let ranges: Vec<_> = (0..sizes.len()).map(|i| 0..=sizes.max_index(i).unwrap_or(trunc)).collect();
    ranges.into_iter().multi_cartesian_product().collect()
}

/// The nested function `K_{v,t}(·, ȳ)` or `Φ_{v,t}(·, ȳ)` as a vector on the basis grid.
fn nested_vector<S: Scalar>(
    qb: &QBase<S>,
    sizes: &Sizes<S::Exp>,
    trunc: u32,
    v: &S::Exp,
    t: &S::Exp,
    ys: &[u32],
) -> Result<Vec<S>> {
    basis_grid(sizes, trunc).iter().map(|ns| nested(qb, sizes, v, t, ys, ns)).collect()
}

/// The terms `(c_ε, ȳ+ε)` of a sum over `E_j`, without the shifts that leave
/// the domain; a dropped shift must carry a zero coefficient.
fn epsilon_terms<S: Scalar>(
    sizes: &Sizes<S::Exp>,
    j: usize,
    ys: &[u32],
    mut coeff: impl FnMut(&Epsilon) -> Result<S>,
) -> Result<Vec<(S, Vec<u32>)>> {
    let mut out = Vec::new();
    for eps in epsilon_set(sizes.len(), j)? {
        let c = coeff(&eps)?;
        let shifted = eps.shifted(ys);
        if !sizes.contains(&shifted) {
            if !c.is_negligible(1.0) {
                return Err(QError::Internal(format!(
                    "shift {eps} leaves the domain at {ys:?} but its coefficient is nonzero"
                )));
            }
            continue;
        }
        if !c.is_zero() {
            out.push((c, shifted.iter().map(|&y| y as u32).collect()));
        }
    }
    Ok(out)
}


/// Residuals over the basis grid, with the rows on which they are meaningful.
#[derive(Clone, Debug, PartialEq)]
pub struct GridResidual<S> {
    pub values: Vec<S>,
    pub exact_rows: Vec<bool>,
}

impl<S: Scalar> GridResidual<S> {
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.exact_rows)
            .filter(|(_, &e)| e)
            .map(|(v, _)| v.magnitude())
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().zip(&self.exact_rows).all(|(v, &e)| !e || v.is_zero())
    }
}

fn grid_residual<S: Scalar>(lhs: Vec<S>, rhs: Vec<S>, exact_rows: Vec<bool>) -> GridResidual<S> {
    GridResidual { values: lhs.into_iter().zip(rhs).map(|(a, b)| a - b).collect(), exact_rows }
}

/// The nested columns `F(·,ȳ)` on the basis grid, built once per parameter set and cached.
pub struct Transfer<'a, S: Scalar> {
    qb: &'a QBase<S>,
    sizes: &'a Sizes<S::Exp>,
    trunc: u32,
    t: S::Exp,
    v: S::Exp,
    sites: Vec<Gens<S>>,
    cols: HashMap<Vec<u32>, Vec<S>>,
}

impl<'a, S: Scalar> Transfer<'a, S> {
    pub fn new(qb: &'a QBase<S>, sizes: &'a Sizes<S::Exp>, trunc: u32, t: &S::Exp, v: &S::Exp) -> Result<Self> {
        let sites = site_gens(qb, sizes, trunc)?;
        Ok(Transfer { qb, sizes, trunc, t: t.clone(), v: v.clone(), sites, cols: HashMap::new() })
    }

    fn column(&mut self, ys: &[u32]) -> Result<&Vec<S>> {
        if !self.cols.contains_key(ys) {
            let col = nested_vector(self.qb, self.sizes, self.trunc, &self.v, &self.t, ys)?;
            self.cols.insert(ys.to_vec(), col);
        }
        Ok(&self.cols[ys])
    }

    /// `Σ_ε c_ε F(·,ȳ+ε)`.
    fn shifted(&mut self, j: usize, ys: &[u32], coeff: impl FnMut(&Epsilon) -> Result<S>) -> Result<Vec<S>> {
        let mut acc = vec![S::zero(); basis_grid(self.sizes, self.trunc).len()];
        for (c, yy) in epsilon_terms(self.sizes, j, ys, coeff)? {
            for (a, x) in acc.iter_mut().zip(self.column(&yy)?) {
                *a = a.clone() + c.clone() * x.clone();
            }
        }
        Ok(acc)
    }

    /// `Δ_R^{j−1}(K²) F(·,ȳ) − Σ_ε A^{(j)}_ε F(·,ȳ+ε)` for the nested function `F = K_{v,t}` or `Φ_{v,t}`.
    pub fn check_k2(&mut self, j: usize, ys: &[u32]) -> Result<GridResidual<S>> {
        let (qb, sizes) = (self.qb, self.sizes);
        let zero = S::Exp::int(0);
        let op = coproduct_op(qb, &self.sites, Element::KSquared, &zero, &zero, Side::Right, j)?;
        let lhs = op.apply(self.column(ys)?)?;
        let t = self.t.clone();
        let rhs = self.shifted(j, ys, |e| coeff_a(qb, sizes, j, e, ys, &t))?;
        Ok(grid_residual(lhs, rhs, tensor_mask(&self.sites)))
    }

    /// `Δ_R^{j−1}(X_{0,σ}) F(·,ȳ) − [σ]F(·,ȳ) − Σ_ε B^{(j)}_ε F(·,ȳ+ε)`, with `Y` and `⟦σ⟧` for su11.
    /// In the corollaries `σ = h_{M−j}(x̄, s)`.
    pub fn check_x(&mut self, j: usize, ys: &[u32], sigma: &S::Exp) -> Result<GridResidual<S>> {
        let (qb, sizes) = (self.qb, self.sizes);
        let m = self.sites.len();
        if j == 0 || j > m {
            return Err(out_of_range(format!("level j = {j} outside 1..={m}")));
        }
        let which = match sizes {
            Sizes::Su2(_) => Twist::X,
            Sizes::Su11(_) => Twist::Y,
        };
        let block = delta_gens(&self.sites[m - j..])?;
        let op = pad(&self.sites, twist(qb, &block, which, &S::Exp::int(0), sigma), Side::Right, j);
        let col = self.column(ys)?.clone();
        let lhs = op.apply(&col)?;
        let lam = sizes.bracket(qb, sigma);
        let (t, v) = (self.t.clone(), self.v.clone());
        let shifted = self.shifted(j, ys, |e| coeff_b(qb, sizes, j, e, ys, &t, &v))?;
        let rhs = col.iter().zip(shifted).map(|(c, sh)| lam.clone() * c.clone() + sh).collect();
        Ok(grid_residual(lhs, rhs, tensor_mask(&self.sites)))
    }
}

/// One-off [`Transfer::check_k2`].
pub fn transfer_check_k2<S: Scalar>(
    qb: &QBase<S>,
    sizes: &Sizes<S::Exp>,
    trunc: u32,
    j: usize,
    ys: &[u32],
    t: &S::Exp,
    v: &S::Exp,
) -> Result<GridResidual<S>> {
    Transfer::new(qb, sizes, trunc, t, v)?.check_k2(j, ys)
}

/// One-off [`Transfer::check_x`].
#[allow(clippy::too_many_arguments)]
pub fn transfer_check_x<S: Scalar>(
    qb: &QBase<S>,
    sizes: &Sizes<S::Exp>,
    trunc: u32,
    j: usize,
    ys: &[u32],
    t: &S::Exp,
    v: &S::Exp,
    sigma: &S::Exp,
) -> Result<GridResidual<S>> {
    Transfer::new(qb, sizes, trunc, t, v)?.check_x(j, ys, sigma)
}

fn tilde_element<E>(sizes: &Sizes<E>) -> Element {
    match sizes {
        Sizes::Su2(_) => Element::XTilde,
        Sizes::Su11(_) => Element::YTilde,
    }
}

/// `Δ_L^{j−1}(X̃_{v,t}) F(·,ȳ) − [h_j(ȳ,t)] F(·,ȳ)` (with `Ỹ` and `⟦·⟧` for su11).
pub fn left_eigen_residual<S: Scalar>(
    qb: &QBase<S>,
    sizes: &Sizes<S::Exp>,
    trunc: u32,
    j: usize,
    ys: &[u32],
    t: &S::Exp,
    v: &S::Exp,
) -> Result<GridResidual<S>> {
    let sites = site_gens(qb, sizes, trunc)?;
    let op = coproduct_op(qb, &sites, tilde_element(sizes), v, t, Side::Left, j)?;
    let col = nested_vector(qb, sizes, trunc, v, t, ys)?;
    let lam = sizes.bracket(qb, &height(sizes, t, ys, j)?);
    let lhs = op.apply(&col)?;
    let rhs = col.into_iter().map(|c| lam.clone() * c).collect();
    Ok(grid_residual(lhs, rhs, tensor_mask(&sites)))
}

/// `Δ_R^{j−1}(X̃_{1,h_{M−j}(x̄,s)}) F_{1,s}(·,x̄) − [h_M(x̄,s)] F_{1,s}(·,x̄)` (with `Ỹ`, `⟦·⟧` for su11).
pub fn right_eigen_residual<S: Scalar>(
    qb: &QBase<S>,
    sizes: &Sizes<S::Exp>,
    trunc: u32,
    j: usize,
    xs: &[u32],
    s: &S::Exp,
) -> Result<GridResidual<S>> {
    let sites = site_gens(qb, sizes, trunc)?;
    let m = sites.len();
    if j == 0 || j > m {
        return Err(out_of_range(format!("level j = {j} outside 1..={m}")));
    }
    let hs = heights(sizes, s, xs)?;
    let one = S::Exp::int(1);
    let op = coproduct_op(qb, &sites, tilde_element(sizes), &one, &hs[m - j], Side::Right, j)?;
    let col = nested_vector(qb, sizes, trunc, &one, s, xs)?;
    let lam = sizes.bracket(qb, &hs[m]);
    let lhs = op.apply(&col)?;
    let rhs = col.into_iter().map(|c| lam.clone() * c).collect();
    Ok(grid_residual(lhs, rhs, tensor_mask(&sites)))
}

/// Parameters shared by the multivariate rational functions.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiParams<E> {
    pub sizes: Sizes<E>,
    pub s: E,
    pub t: E,
    pub v: E,
}

impl<E: Exponent> MultiParams<E> {
    fn with_v(&self, v: E) -> Self {
        MultiParams { v, ..self.clone() }
    }
}

/// `R_r(x̄,ȳ) = Π_j R_r(x_j, y_j; h_{j−1}(x̄,s), h_{j−1}(ȳ,t), v, N_j)`, or the `P_r` analogue.
pub fn multi_closed<S: Scalar>(
    qb: &QBase<S>,
    mp: &MultiParams<S::Exp>,
    xs: &[u32],
    ys: &[u32],
    tb: &TailBound,
) -> Result<Certified<S>> {
    let hx = heights(&mp.sizes, &mp.s, xs)?;
    let hy = heights(&mp.sizes, &mp.t, ys)?;
    let mut factors = Vec::with_capacity(xs.len());
    for j in 0..xs.len() {
        factors.push(match &mp.sizes {
            Sizes::Su2(n) => {
                let rp = RrParams { s: hx[j].clone(), t: hy[j].clone(), v: mp.v.clone(), n_max: n[j] };
                Certified::exact(rr_closed_regular(qb, &rp, xs[j], ys[j])?, 0)
            }
            Sizes::Su11(k) => {
                let pp = PrParams { s: hx[j].clone(), t: hy[j].clone(), v: mp.v.clone(), k: k[j].clone() };
                pr_closed_regular(qb, &pp, xs[j], ys[j], tb)?
            }
        });
    }
    Ok(certified_product(factors))
}

fn certified_product<S: Scalar>(factors: Vec<Certified<S>>) -> Certified<S> {
    let terms = factors.iter().map(|c| c.terms).max().unwrap_or(0);
    let value = factors.iter().fold(S::one(), |acc, c| acc * c.value.clone());
    let error_bound = product_error(&factors.iter().collect::<Vec<_>>());
    Certified { value, error_bound, terms }
}

/// `⟨K_{1,s}(·,x̄), K_{v,t}(·,ȳ)⟩` summed over the full tensor grid, or, for su11,
/// the product of the factorwise certified inner products.
pub fn multi_inner<S: Scalar>(
    qb: &QBase<S>,
    mp: &MultiParams<S::Exp>,
    xs: &[u32],
    ys: &[u32],
    tb: &TailBound,
) -> Result<Certified<S>> {
    match &mp.sizes {
        Sizes::Su2(n) => {
            heights(&mp.sizes, &mp.s, xs)?;
            heights(&mp.sizes, &mp.t, ys)?;
            let one = S::Exp::int(1);
            let mut sum = S::zero();
            for ns in basis_grid(&mp.sizes, 0) {
                let mut w = S::one();
                for (j, &nj) in ns.iter().enumerate() {
                    w = w * kraw_w(qb, nj, n[j])?;
                }
                let left = nested_kraw(qb, &one, &mp.s, n, xs, &ns)?;
                let right = nested_kraw(qb, &mp.v, &mp.t, n, ys, &ns)?;
                sum = sum + left * right.conj() * w;
            }
            Ok(Certified::exact(sum, 0))
        }
        Sizes::Su11(k) => {
            let hx = heights(&mp.sizes, &mp.s, xs)?;
            let hy = heights(&mp.sizes, &mp.t, ys)?;
            let factors = (0..k.len())
                .map(|j| {
                    let pp = PrParams { s: hx[j].clone(), t: hy[j].clone(), v: mp.v.clone(), k: k[j].clone() };
                    pr_inner(qb, &pp, xs[j], ys[j], tb)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(certified_product(factors))
        }
    }
}

/// `W(x̄,s) = Π_j W(x_j, h_{j−1}(x̄,s))`, in base `q⁻¹` for su2.
pub fn multi_weight<S: Scalar>(
    qb: &QBase<S>,
    sizes: &Sizes<S::Exp>,
    xs: &[u32],
    s: &S::Exp,
    tb: &TailBound,
) -> Result<Certified<S>> {
    let hs = heights(sizes, s, xs)?;
    let factors = (0..xs.len())
        .map(|j| match sizes {
            Sizes::Su2(n) => Ok(Certified::exact(kraw_big_w(qb, xs[j], &hs[j], n[j], true)?, 0)),
            Sizes::Su11(k) => asc_big_w(qb, xs[j], &hs[j], &k[j], tb),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(certified_product(factors))
}

/// `Σ_{z̄} f(z̄)` over `{0..N_1}×…×{0..N_M}` in full, or over `ℕ^M` with a
/// tail certificate at every nesting level.
fn multi_sum<S: Scalar>(
    sizes: &Sizes<S::Exp>,
    tb: &TailBound,
    f: &mut dyn FnMut(&[u32]) -> Result<Certified<S>>,
) -> Result<Certified<S>> {
    match sizes {
        Sizes::Su2(_) => {
            let mut sum = S::zero();
            let mut err = 0.0;
            for z in basis_grid(sizes, 0) {
                let c = f(&z)?;
                sum = sum + c.value;
                err += c.error_bound;
            }
            Ok(Certified { value: sum, error_bound: err, terms: 0 })
        }
        Sizes::Su11(k) => nested_series(&mut Vec::with_capacity(k.len()), k.len(), tb, f),
    }
}

fn nested_series<S: Scalar>(
    prefix: &mut Vec<u32>,
    m: usize,
    tb: &TailBound,
    f: &mut dyn FnMut(&[u32]) -> Result<Certified<S>>,
) -> Result<Certified<S>> {
    if prefix.len() == m {
        return f(prefix);
    }
    let mut acc = SeriesSum::new(*tb);
    let mut inner_err = 0.0;
    for z in 0..tb.max_terms as u32 {
        prefix.push(z);
        let c = nested_series(prefix, m, tb, f);
        prefix.pop();
        let c = c?;
        inner_err += c.error_bound;
        if let Some(done) = acc.push(c.value)? {
            return Ok(Certified { error_bound: done.error_bound + inner_err, ..done });
        }
    }
    acc.give_up()
}

/// Residual of the multivariate biorthogonality of `R_r(·,·;v)` (or `P_r`) against
/// the partner `v' = −v̄ − 2`.
pub fn multi_biorth_residual<S: Scalar>(
    qb: &QBase<S>,
    mp: &MultiParams<S::Exp>,
    over: SumOver,
    idx: &[u32],
    idx2: &[u32],
    tb: &TailBound,
) -> Result<Certified<S>> {
    mp.sizes.check(idx)?;
    mp.sizes.check(idx2)?;
    let dual = mp.with_v(partner(&mp.v));
    let mut term = |z: &[u32]| -> Result<Certified<S>> {
        let (a, b, w) = match over {
            SumOver::X => (
                multi_closed(qb, mp, z, idx, tb)?,
                multi_closed(qb, &dual, z, idx2, tb)?,
                multi_weight(qb, &mp.sizes, z, &mp.s, tb)?,
            ),
            SumOver::Y => (
                multi_closed(qb, mp, idx, z, tb)?,
                multi_closed(qb, &dual, idx2, z, tb)?,
                multi_weight(qb, &mp.sizes, z, &mp.t, tb)?,
            ),
        };
        let b = Certified { value: b.value.conj(), ..b };
        Ok(certified_product(vec![a, b, w]))
    };
    let total = multi_sum(&mp.sizes, tb, &mut term)?;
    let target = if idx == idx2 {
        let base = match over {
            SumOver::X => &mp.t,
            SumOver::Y => &mp.s,
        };
        certified_recip(&multi_weight(qb, &mp.sizes, idx, base, tb)?)?
    } else {
        Certified::exact(S::zero(), 0)
    };
    Ok(Certified {
        value: total.value - target.value,
        error_bound: total.error_bound + target.error_bound,
        terms: total.terms,
    })
}

/// Residual of
/// `[h_M(x̄,s)] Σ_ε A_ε F(x̄,ȳ+ε) − [h_{M−j}(x̄,s)] F(x̄,ȳ) − Σ_ε B_ε F(x̄,ȳ+ε)`
/// with `F = R_r` (su2) or `F = P_r`, `C`, `D` and `⟦·⟧` (su11).
pub fn multi_gevp_residual<S: Scalar>(
    qb: &QBase<S>,
    mp: &MultiParams<S::Exp>,
    j: usize,
    xs: &[u32],
    ys: &[u32],
    tb: &TailBound,
) -> Result<Certified<S>> {
    let terms = GevpTerms::new(qb, mp, j, ys)?;
    terms.residual(qb, mp, xs, |yy| multi_closed(qb, mp, xs, yy, tb))
}

/// The `ȳ`-dependent half of the GEVP: both shift combinations at level `j`.
pub struct GevpTerms<S> {
    j: usize,
    ys: Vec<u32>,
    a: Vec<(S, Vec<u32>)>,
    b: Vec<(S, Vec<u32>)>,
}

impl<S: Scalar> GevpTerms<S> {
    pub fn new(qb: &QBase<S>, mp: &MultiParams<S::Exp>, j: usize, ys: &[u32]) -> Result<Self> {
        let sizes = &mp.sizes;
        let m = sizes.len();
        sizes.check(ys)?;
        if j == 0 || j > m {
            return Err(out_of_range(format!("level j = {j} outside 1..={m}")));
        }
        let a = epsilon_terms(sizes, j, ys, |e| coeff_a(qb, sizes, j, e, ys, &mp.t))?;
        let b = epsilon_terms(sizes, j, ys, |e| coeff_b(qb, sizes, j, e, ys, &mp.t, &mp.v))?;
        Ok(GevpTerms { j, ys: ys.to_vec(), a, b })
    }

    /// The residual at `x̄`, with `F(x̄,·)` supplied by the caller so values can be shared.
    pub fn residual(
        &self,
        qb: &QBase<S>,
        mp: &MultiParams<S::Exp>,
        xs: &[u32],
        mut f: impl FnMut(&[u32]) -> Result<Certified<S>>,
    ) -> Result<Certified<S>> {
        let sizes = &mp.sizes;
        let m = sizes.len();
        let hx = heights(sizes, &mp.s, xs)?;
        let mut err = 0.0;
        let mut combine = |terms: &[(S, Vec<u32>)]| -> Result<S> {
            let mut acc = S::zero();
            for (c, yy) in terms {
                let v = f(yy)?;
                err += v.error_bound;
                acc = acc + c.clone() * v.value;
            }
            Ok(acc)
        };
        let a_sum = combine(&self.a)?;
        let b_sum = combine(&self.b)?;
        let here = f(&self.ys)?;
        err += here.error_bound;
        let lam_m = sizes.bracket(qb, &hx[m]);
        let lam_j = sizes.bracket(qb, &hx[m - self.j]);
        let value = lam_m.clone() * a_sum - lam_j.clone() * here.value - b_sum;
        // crude: every evaluated value enters with a coefficient no larger than the largest bracket
        let coeff_scale = 1.0 + lam_m.magnitude() + lam_j.magnitude();
        let err = if S::is_exact() { 0.0 } else { err * coeff_scale * 10.0 };
        Ok(Certified { value, error_bound: err, terms: 0 })
    }
}
