//! Named verification suites. A suite expands a [`SuiteConfig`] into [`Job`]s,
//! one per parameter point; running a job yields one [`CheckReport`] per identity
//! checked at that point.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Display;
use std::sync::Arc;
use std::time::Instant;

use itertools::{iproduct, Itertools};
use num_rational::BigRational;

use crate::error::{QError, Result};
use crate::multivar::{
    heights, left_eigen_residual, multi_biorth_residual, multi_closed, multi_inner, GevpTerms,
    right_eigen_residual, site_gens, transfer_check_x, GridResidual, Transfer, MultiParams, Sizes,
};
use crate::orthopoly::{
    asc_dyn_residual, asc_k2_residual, asc_orth_n, asc_orth_x, asc_w, kraw_dyn_residual, kraw_k2_residual,
    kraw_orth_n, kraw_orth_x, kraw_w, Shift,
};
use crate::qseries::{Certified, lemma21_lhs, lemma21_lhs_regular, lemma21_rhs, SumRange, TailBound};
use crate::ratfun::{
    pr_biorth_block, pr_closed, pr_closed_regular, pr_gevp_residual, pr_inner, pr_summation, rr_biorth_residual,
    rr_closed, rr_closed_regular, rr_gevp_residual, rr_inner, rr_summation, PrParams, RrParams, SumOver,
};
use crate::report::{CheckReport, Verdict};
use crate::scalar::{Backend, Exponent, QBase, Scalar};
use crate::uqsl2::{
    cor41_residual, delta_gens, eigen_univariate, gens, lemma31_residual, relation_residuals, rewrite_residual,
    star_residual, tensor_mask, twist, Gens, OpMatrix, RepSpec, Twist,
};
use crate::{Cplx, Exact, Real};

/// Suite identifiers with a one-line description, in run order.
pub const SUITES: &[(&str, &str)] = &[
    ("lemma2.1", "3phi2 x 3phi2 summation, literal and regularized, terminating and convergent"),
    ("relations", "defining relations of the generators and of their iterated coproducts"),
    ("star", "adjointness of K, E, F and the twisted elements under the orthogonality weights"),
    ("lemma3.1", "expansion of X_{u,s} in K^2 and X~_{v,t}"),
    ("ev3.x", "Krawtchouk eigenvectors of X~, dual orthogonality, K^-2 X_{0,s} = X~_{1,s}"),
    ("prop3.3", "inner-product and closed forms of R_r agree"),
    ("prop3.4", "biorthogonality of R_r, univariate and nested"),
    ("lemma3.5", "K^2 and X transfer onto Krawtchouk polynomials"),
    ("cor3.6", "three-term generalized eigenvalue recurrence of R_r"),
    ("prop3.7", "nested Krawtchouk functions as coproduct eigenvectors"),
    ("lemma3.8", "dynamical Krawtchouk transfer with t shifted by 2"),
    ("lemma3.9", "multivariate K^2 and X transfer, su2"),
    ("cor3.10", "multivariate generalized eigenvalue recurrence of R_r"),
    ("cor4.1", "expansion of Y_{u,s} in K^2 and Y~_{v,t}"),
    ("ev4.x", "Al-Salam-Chihara eigenvectors of Y~, dual orthogonality, K^-2 Y_{0,s} = Y~_{1,s}"),
    ("cor4.3", "inner-product and closed forms of P_r agree"),
    ("prop4.4", "biorthogonality of P_r, univariate and nested"),
    ("lemma4.5", "K^2 and Y transfer onto Al-Salam-Chihara polynomials"),
    ("prop4.5", "three-term generalized eigenvalue recurrence of P_r"),
    ("prop4.6", "nested Al-Salam-Chihara functions as coproduct eigenvectors"),
    ("lemma4.8", "dynamical Al-Salam-Chihara transfer and multivariate transfer, su11"),
    ("cor4.9", "multivariate generalized eigenvalue recurrence of P_r"),
];

/// Runs every suite.
pub const ALL: &str = "all";

pub fn suite_ids() -> impl Iterator<Item = &'static str> {
    SUITES.iter().map(|(id, _)| *id)
}

/// Resolves `all` or a single id to the suites to run.
pub fn resolve(id: &str) -> Result<Vec<&'static str>> {
    if id == ALL {
        return Ok(suite_ids().collect());
    }
    suite_ids()
        .find(|s| *s == id)
        .map(|s| vec![s])
        .ok_or_else(|| QError::InvalidParameter(format!("unknown suite {id:?}")))
}

/// The parameter grid a suite run sweeps. Exponents are rationals and must be
/// half-integers for the exact backend.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    pub p: Vec<BigRational>,
    pub s: Vec<BigRational>,
    pub t: Vec<BigRational>,
    pub v: Vec<BigRational>,
    pub u: Vec<BigRational>,
    /// Univariate `N`.
    pub n: Vec<u32>,
    /// Site sizes `N̄` of the multivariate su2 checks.
    pub n_multi: Vec<Vec<u32>>,
    /// Univariate `k`.
    pub k: Vec<BigRational>,
    /// Site weights `k̄` of the multivariate su11 checks.
    pub k_multi: Vec<Vec<BigRational>>,
    /// Truncation of the su11 representation matrices.
    pub trunc: u32,
    /// Largest index of the unbounded su11 variables.
    pub x_max: u32,
    /// Largest index per site of the su11 multi-indices.
    pub multi_x_max: u32,
    pub tolerance: f64,
    pub tail: TailBound,
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn ints(r: std::ops::RangeInclusive<i64>) -> Vec<BigRational> {
    r.map(|n| ratio(n, 1)).collect()
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            p: vec![ratio(1, 2), ratio(2, 3)],
            s: ints(0..=2),
            t: ints(0..=2),
            v: ints(-2..=1),
            u: ints(0..=2),
            n: (0..=4).collect(),
            n_multi: vec![vec![1, 1], vec![2, 1], vec![2, 2], vec![1, 1, 1], vec![1, 2, 1]],
            k: ints(1..=2),
            k_multi: vec![vec![ratio(1, 1); 2], vec![ratio(1, 1), ratio(2, 1)]],
            trunc: 8,
            x_max: 3,
            multi_x_max: 2,
            tolerance: 1e-9,
            // absolute, so it must sit well below `tolerance` times the smallest factor
            tail: TailBound::default(),
        }
    }
}

impl SuiteConfig {
    fn validate(&self) -> Result<()> {
        let empty = [
            ("p", self.p.is_empty()),
            ("s", self.s.is_empty()),
            ("t", self.t.is_empty()),
            ("v", self.v.is_empty()),
            ("u", self.u.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(QError::InvalidParameter(format!("empty grid for {name}")));
        }
        if self.n_multi.iter().any(Vec::is_empty) || self.k_multi.iter().any(Vec::is_empty) {
            return Err(QError::InvalidParameter("a multivariate size list is empty".into()));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(QError::InvalidParameter(format!("tolerance must be >= 0, got {}", self.tolerance)));
        }
        Ok(())
    }
}

pub type Params = BTreeMap<String, String>;

/// One checked identity inside a job, located by `at` within the job's parameter point.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub check: String,
    pub at: Vec<(String, String)>,
    pub verdict: Verdict,
}

fn outcome(check: &str, at: &[(&str, &dyn Display)], verdict: Verdict) -> Outcome {
    Outcome {
        check: check.to_string(),
        at: at.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        verdict,
    }
}

type Runner = Box<dyn Fn() -> Result<Vec<Outcome>> + Send + Sync>;

/// A parameter point of a suite. Jobs are independent and may run in parallel.
pub struct Job {
    pub suite: &'static str,
    pub params: Params,
    backend: Backend,
    runner: Runner,
}

impl Job {
    /// Evaluates the job. An evaluation error becomes a single failed report
    /// whose residual is the error message. Elapsed time is split evenly over the
    /// reports, or zeroed when `timing` is off.
    pub fn run(&self, timing: bool) -> Vec<CheckReport> {
        let start = Instant::now();
        let outcomes = (self.runner)().unwrap_or_else(|e| {
            vec![Outcome { check: "evaluate".into(), at: vec![], verdict: Verdict::error(self.backend, e.to_string()) }]
        });
        let elapsed = if timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
        let share = elapsed / outcomes.len().max(1) as f64;
        outcomes
            .into_iter()
            .map(|o| {
                let mut params = self.params.clone();
                params.extend(o.at);
                CheckReport {
                    suite: self.suite.to_string(),
                    check: o.check,
                    params,
                    residual: o.verdict.residual,
                    error_bound: o.verdict.error_bound,
                    pass: o.verdict.pass,
                    backend: o.verdict.backend,
                    elapsed_ms: share,
                }
            })
            .collect()
    }
}

/// Jobs of one suite (or `all`) in the given backend, in deterministic order.
pub fn build_jobs(backend: Backend, suite: &str, cfg: &SuiteConfig) -> Result<Vec<Job>> {
    match backend {
        Backend::Exact => build::<Exact>(suite, cfg),
        Backend::Float => build::<Real>(suite, cfg),
        Backend::Complex => build::<Cplx>(suite, cfg),
    }
}

/// Runs all jobs sequentially.
pub fn run_suite(backend: Backend, suite: &str, cfg: &SuiteConfig, timing: bool) -> Result<Vec<CheckReport>> {
    Ok(build_jobs(backend, suite, cfg)?.iter().flat_map(|j| j.run(timing)).collect())
}

fn build<S: Scalar>(suite: &str, cfg: &SuiteConfig) -> Result<Vec<Job>> {
    cfg.validate()?;
    let ctx = Ctx::<S>::new(cfg)?;
    let mut out = Vec::new();
    for id in resolve(suite)? {
        let mut b = Builder { ctx: &ctx, suite: id, jobs: &mut out };
        match id {
            "lemma2.1" => b.summation(),
            "relations" => b.relations()?,
            "star" => b.star(),
            "lemma3.1" => b.expansion(false),
            "ev3.x" => b.ev_su2(),
            "prop3.3" => b.rr_forms(),
            "prop3.4" => b.rr_biorth(),
            "lemma3.5" => b.kraw_transfer(),
            "cor3.6" => b.rr_gevp(),
            "prop3.7" => b.multi_eigen(false),
            "lemma3.8" => b.kraw_dynamical(),
            "lemma3.9" => b.multi_transfer(false),
            "cor3.10" => b.multi_gevp(false),
            "cor4.1" => b.expansion(true),
            "ev4.x" => b.ev_su11(),
            "cor4.3" => b.pr_forms(),
            "prop4.4" => b.pr_biorth(),
            "lemma4.5" => b.asc_transfer(),
            "prop4.5" => b.pr_gevp(),
            "prop4.6" => b.multi_eigen(true),
            "lemma4.8" => {
                b.asc_dynamical();
                b.multi_transfer(true)
            }
            "cor4.9" => b.multi_gevp(true),
            _ => unreachable!("resolve only returns registered ids"),
        }
    }
    Ok(out)
}

type Labelled<E> = (String, E);
type TvPair<E> = (Labelled<E>, Labelled<E>);

fn labelled<E: Exponent>(rs: &[BigRational]) -> Result<Vec<Labelled<E>>> {
    rs.iter().map(|r| Ok((r.to_string(), E::from_param(r)?))).collect()
}

fn join<T: Display>(xs: &[T]) -> String {
    xs.iter().join(",")
}

struct Ctx<S: Scalar> {
    cfg: Arc<SuiteConfig>,
    bases: Vec<Labelled<QBase<S>>>,
    s: Vec<Labelled<S::Exp>>,
    t: Vec<Labelled<S::Exp>>,
    v: Vec<Labelled<S::Exp>>,
    u: Vec<Labelled<S::Exp>>,
    k: Vec<Labelled<S::Exp>>,
    k_multi: Vec<Labelled<Vec<S::Exp>>>,
}

#[derive(Clone)]
struct Stv<E> {
    s: Labelled<E>,
    t: Labelled<E>,
    v: Labelled<E>,
}

impl<E: Exponent> Stv<E> {
    fn real(&self) -> (f64, f64, f64) {
        (self.s.1.real_part(), self.t.1.real_part(), self.v.1.real_part())
    }

    /// `Re v < 1 + s + t`, needed for the `P_r` series.
    fn converges(&self) -> bool {
        let (s, t, v) = self.real();
        v < 1.0 + s + t
    }

    /// `|Re v + 1| < 2 + s + t`, needed for the `P_r` biorthogonality sums.
    fn pairs_converge(&self) -> bool {
        let (s, t, v) = self.real();
        (v + 1.0).abs() < 2.0 + s + t
    }
}

impl<S: Scalar> Ctx<S> {
    fn new(cfg: &SuiteConfig) -> Result<Self> {
        let bases = cfg.p.iter().map(|p| Ok((p.to_string(), QBase::new(p.clone())?))).collect::<Result<_>>()?;
        let k_multi = cfg
            .k_multi
            .iter()
            .map(|ks| Ok((join(ks), labelled::<S::Exp>(ks)?.into_iter().map(|(_, k)| k).collect())))
            .collect::<Result<_>>()?;
        Ok(Ctx {
            cfg: Arc::new(cfg.clone()),
            bases,
            s: labelled(&cfg.s)?,
            t: labelled(&cfg.t)?,
            v: labelled(&cfg.v)?,
            u: labelled(&cfg.u)?,
            k: labelled(&cfg.k)?,
            k_multi,
        })
    }

    fn full_stv(&self) -> Vec<Stv<S::Exp>> {
        iproduct!(&self.s, &self.t, &self.v)
            .map(|(s, t, v)| Stv { s: s.clone(), t: t.clone(), v: v.clone() })
            .collect()
    }

    /// A diagonal walk through the `(s, t, v)` grid, used where the full product is too costly.
    fn sampled_stv(&self) -> Vec<Stv<S::Exp>> {
        let (ls, lt, lv) = (self.s.len(), self.t.len(), self.v.len());
        (0..ls.max(lt).max(lv))
            .map(|i| Stv { s: self.s[i % ls].clone(), t: self.t[(i + 1) % lt].clone(), v: self.v[i % lv].clone() })
            .collect()
    }

    fn multi_sizes(&self, su11: bool) -> Vec<(String, Sizes<S::Exp>)> {
        if su11 {
            self.k_multi.iter().map(|(l, k)| (l.clone(), Sizes::Su11(k.clone()))).collect()
        } else {
            self.cfg.n_multi.iter().map(|n| (join(n), Sizes::Su2(n.clone()))).collect()
        }
    }

    /// Multi-indices of `sizes`, capped per site by `multi_x_max` on the su11 side.
    fn index_grid(&self, sizes: &Sizes<S::Exp>) -> Vec<Vec<u32>> {
        let ranges: Vec<Vec<u32>> = match sizes {
            Sizes::Su2(n) => n.iter().map(|&m| (0..=m).collect()).collect(),
            Sizes::Su11(k) => k.iter().map(|_| (0..=self.cfg.multi_x_max).collect()).collect(),
        };
        ranges.into_iter().multi_cartesian_product().collect()
    }

    /// Multi-indices for checks that pair every index with every other. On the su11
    /// side each pair costs a nested infinite sum, so the grid stops at `{0,1}^M`.
    fn pair_grid(&self, sizes: &Sizes<S::Exp>) -> Vec<Vec<u32>> {
        match sizes {
            Sizes::Su2(_) => self.index_grid(sizes),
            Sizes::Su11(k) => k.iter().map(|_| 0..=self.cfg.multi_x_max.min(1)).multi_cartesian_product().collect(),
        }
    }
}

fn point(pairs: &[(&str, &str)]) -> Params {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn stv_point(p: &str, stv: &Stv<impl Exponent>, extra: &[(&str, &str)]) -> Params {
    let mut params = point(&[("p", p), ("s", &stv.s.0), ("t", &stv.t.0), ("v", &stv.v.0)]);
    params.extend(point(extra));
    params
}

fn skip_pole<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(QError::DenominatorPole(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn grid_verdict<S: Scalar>(g: &GridResidual<S>, tol: f64) -> Verdict {
    Verdict::from_values(&g.values, Some(&g.exact_rows), tol)
}

/// Keeps entry `(m, n)` only if both rows are exact, since the star residual pairs `A[m,n]` with `A*[n,m]`.
fn pair_mask(rows: &[bool]) -> Vec<bool> {
    iproduct!(rows, rows).map(|(a, b)| *a && *b).collect()
}

fn matrix_values<S: Scalar>(m: &OpMatrix<S>) -> Vec<S> {
    iproduct!(0..m.dim(), 0..m.dim()).map(|(i, j)| m.get(i, j).clone()).collect()
}

fn over_label(over: SumOver) -> &'static str {
    match over {
        SumOver::X => "x",
        SumOver::Y => "y",
    }
}

struct Builder<'a, S: Scalar> {
    ctx: &'a Ctx<S>,
    suite: &'static str,
    jobs: &'a mut Vec<Job>,
}

impl<S: Scalar> Builder<'_, S> {
    fn push(&mut self, params: Params, f: impl Fn() -> Result<Vec<Outcome>> + Send + Sync + 'static) {
        self.jobs.push(Job { suite: self.suite, params, backend: S::BACKEND, runner: Box::new(f) });
    }

    fn tol(&self) -> f64 {
        self.ctx.cfg.tolerance
    }

    fn summation(&mut self) {
        let (tol, tb, x_max) = (self.tol(), self.ctx.cfg.tail, self.ctx.cfg.x_max);
        for (pl, qb) in &self.ctx.bases {
            for stv in self.ctx.full_stv() {
                for &big_n in &self.ctx.cfg.n {
                    let rp = RrParams { s: stv.s.1.clone(), t: stv.t.1.clone(), v: stv.v.1.clone(), n_max: big_n };
                    let sp = rr_summation(qb, &rp);
                    let base = qb.qpow_int(2);
                    let params = stv_point(pl, &stv, &[("N", &big_n.to_string())]);
                    self.push(params, move || {
                        let range = SumRange::Terminating(big_n);
                        let mut out = Vec::new();
                        for (x, y) in iproduct!(0..=big_n, 0..=big_n) {
                            let rhs = lemma21_rhs(x, y, &sp, &base, &range)?;
                            let reg = lemma21_lhs_regular(x, y, &sp, &base, &range)?;
                            out.push(outcome(
                                "terminating_regular",
                                &[("x", &x), ("y", &y)],
                                Verdict::from_certified_comparison(&reg, &rhs, tol),
                            ));
                            if let Some(lhs) = skip_pole(lemma21_lhs(x, y, &sp, &base, &range))? {
                                out.push(outcome(
                                    "terminating_literal",
                                    &[("x", &x), ("y", &y)],
                                    Verdict::from_certified_comparison(&lhs, &rhs, tol),
                                ));
                            }
                        }
                        Ok(out)
                    });
                }
                if !stv.converges() || !qb.below_one() {
                    continue;
                }
                for (kl, k) in &self.ctx.k {
                    let pp = PrParams { s: stv.s.1.clone(), t: stv.t.1.clone(), v: stv.v.1.clone(), k: k.clone() };
                    let sp = pr_summation(qb, &pp);
                    let base = qb.qpow_int(2);
                    self.push(stv_point(pl, &stv, &[("k", kl)]), move || {
                        let range = SumRange::Convergent(tb);
                        let mut out = Vec::new();
                        for (x, y) in iproduct!(0..=x_max, 0..=x_max) {
                            let rhs = lemma21_rhs(x, y, &sp, &base, &range)?;
                            let reg = lemma21_lhs_regular(x, y, &sp, &base, &range)?;
                            out.push(outcome(
                                "convergent_regular",
                                &[("x", &x), ("y", &y)],
                                Verdict::from_certified_comparison(&reg, &rhs, tol),
                            ));
                        }
                        Ok(out)
                    });
                }
            }
        }
    }

    fn relations(&mut self) -> Result<()> {
        let tol = self.tol();
        let trunc = self.ctx.cfg.trunc;
        const NAMES: [&str; 3] = ["k_e", "k_f", "e_f"];
        for (pl, qb) in &self.ctx.bases {
            for &big_n in &self.ctx.cfg.n {
                let qb = qb.clone();
                self.push(point(&[("p", pl), ("N", &big_n.to_string())]), move || {
                    let g = gens(&qb, &RepSpec::Su2 { n: big_n })?;
                    let res = relation_residuals(&qb, &g)?;
                    Ok(NAMES.iter().zip(&res).map(|(n, r)| outcome(n, &[], Verdict::from_matrix(r, None, tol))).collect())
                });
            }
            for (kl, k) in &self.ctx.k {
                let (qb, rep) = (qb.clone(), RepSpec::Su11 { k: k.clone(), trunc });
                self.push(point(&[("p", pl), ("k", kl), ("trunc", &trunc.to_string())]), move || {
                    let g = gens(&qb, &rep)?;
                    let res = relation_residuals(&qb, &g)?;
                    let mask = g.exact_rows.clone();
                    Ok(NAMES
                        .iter()
                        .zip(&res)
                        .map(|(n, r)| outcome(n, &[], Verdict::from_matrix(r, Some(&mask), tol)))
                        .collect())
                });
            }
            for su11 in [false, true] {
                for (label, sizes) in self.ctx.multi_sizes(su11) {
                    let qb = qb.clone();
                    let key = if su11 { "k" } else { "N" };
                    let trunc_s = trunc.to_string();
                    let mut params = point(&[("p", pl), (key, &label)]);
                    if su11 {
                        params.extend(point(&[("trunc", &trunc_s)]));
                    }
                    self.push(params, move || {
                        let sites = site_gens(&qb, &sizes, trunc)?;
                        let g = delta_gens(&sites)?;
                        let mask = tensor_mask(&sites);
                        let res = relation_residuals(&qb, &g)?;
                        Ok(NAMES
                            .iter()
                            .zip(&res)
                            .map(|(n, r)| {
                                outcome(&format!("coproduct_{n}"), &[], Verdict::from_matrix(r, Some(&mask), tol))
                            })
                            .collect())
                    });
                }
            }
        }
        Ok(())
    }

    fn star(&mut self) {
        let tol = self.tol();
        let trunc = self.ctx.cfg.trunc;
        let s_list = self.ctx.s.clone();
        for (pl, qb) in &self.ctx.bases {
            for &big_n in &self.ctx.cfg.n {
                let (qb, s_list) = (qb.clone(), s_list.clone());
                self.push(point(&[("p", pl), ("N", &big_n.to_string())]), move || {
                    let g = gens(&qb, &RepSpec::Su2 { n: big_n })?;
                    let w = (0..=big_n).map(|n| kraw_w(&qb, n, big_n)).collect::<Result<Vec<_>>>()?;
                    star_checks(&qb, &g, &w, &s_list, false, tol)
                });
            }
            for (kl, k) in &self.ctx.k {
                let (qb, s_list, k) = (qb.clone(), s_list.clone(), k.clone());
                self.push(point(&[("p", pl), ("k", kl), ("trunc", &trunc.to_string())]), move || {
                    let g = gens(&qb, &RepSpec::Su11 { k: k.clone(), trunc })?;
                    let w = (0..=trunc).map(|n| asc_w(&qb, n, &k)).collect::<Result<Vec<_>>>()?;
                    star_checks(&qb, &g, &w, &s_list, true, tol)
                });
            }
        }
    }

    fn expansion(&mut self, su11: bool) {
        let tol = self.tol();
        let trunc = self.ctx.cfg.trunc;
        let (u_list, s_list, t_list) = (self.ctx.u.clone(), self.ctx.s.clone(), self.ctx.t.clone());
        let reps: Vec<(Params, RepSpec<S::Exp>)> = if su11 {
            let trunc_s = trunc.to_string();
            self.ctx
                .k
                .iter()
                .map(|(kl, k)| (point(&[("k", kl), ("trunc", &trunc_s)]), RepSpec::Su11 { k: k.clone(), trunc }))
                .collect()
        } else {
            self.ctx.cfg.n.iter().map(|&n| (point(&[("N", &n.to_string())]), RepSpec::Su2 { n })).collect()
        };
        for (pl, qb) in &self.ctx.bases {
            for (rp, rep) in &reps {
                let mut params = point(&[("p", pl)]);
                params.extend(rp.clone());
                let (qb, rep) = (qb.clone(), rep.clone());
                let (u_list, s_list, t_list) = (u_list.clone(), s_list.clone(), t_list.clone());
                self.push(params, move || {
                    let g = gens(&qb, &rep)?;
                    let mask = g.exact_rows.clone();
                    let mut out = Vec::new();
                    for ((ul, u), (vl, v), (sl, s), (tl, t)) in iproduct!(&u_list, &u_list, &s_list, &t_list) {
                        let r = if su11 {
                            cor41_residual(&qb, &g, u, v, s, t)?
                        } else {
                            lemma31_residual(&qb, &g, u, v, s, t)?
                        };
                        out.push(outcome(
                            "expansion",
                            &[("u", ul), ("v", vl), ("s", sl), ("t", tl)],
                            Verdict::from_matrix(&r, Some(&mask), tol),
                        ));
                    }
                    Ok(out)
                });
            }
        }
    }

    fn ev_su2(&mut self) {
        let tol = self.tol();
        let (u_list, s_list) = (self.ctx.u.clone(), self.ctx.s.clone());
        for (pl, qb) in &self.ctx.bases {
            for &big_n in &self.ctx.cfg.n {
                let (qb, u_list, s_list) = (qb.clone(), u_list.clone(), s_list.clone());
                self.push(point(&[("p", pl), ("N", &big_n.to_string())]), move || {
                    let rep = RepSpec::Su2 { n: big_n };
                    let g = gens(&qb, &rep)?;
                    let mut out = Vec::new();
                    for ((ul, u), (sl, s)) in iproduct!(&u_list, &s_list) {
                        for x in 0..=big_n {
                            let (res, mask) = eigen_univariate(&qb, &rep, u, s, x)?;
                            out.push(outcome(
                                "eigen",
                                &[("u", ul), ("s", sl), ("x", &x)],
                                Verdict::from_values(&res, Some(&mask), tol),
                            ));
                        }
                    }
                    for (sl, s) in &s_list {
                        for (a, b) in iproduct!(0..=big_n, 0..=big_n) {
                            let rn = kraw_orth_n(&qb, s, big_n, a, b)?;
                            out.push(outcome("orth_n", &[("s", sl), ("x", &a), ("x2", &b)], Verdict::from_scalar(&rn, tol)));
                            let rx = kraw_orth_x(&qb, s, big_n, a, b)?;
                            out.push(outcome("orth_x", &[("s", sl), ("n", &a), ("n2", &b)], Verdict::from_scalar(&rx, tol)));
                        }
                        let r = rewrite_residual(&qb, &g, s, false)?;
                        out.push(outcome("rewrite", &[("s", sl)], Verdict::from_matrix(&r, None, tol)));
                    }
                    Ok(out)
                });
            }
        }
    }

    fn ev_su11(&mut self) {
        let (tol, tb, trunc, x_max) = (self.tol(), self.ctx.cfg.tail, self.ctx.cfg.trunc, self.ctx.cfg.x_max);
        let (u_list, s_list) = (self.ctx.u.clone(), self.ctx.s.clone());
        for (pl, qb) in &self.ctx.bases {
            for (kl, k) in &self.ctx.k {
                let (qb, u_list, s_list, k) = (qb.clone(), u_list.clone(), s_list.clone(), k.clone());
                self.push(point(&[("p", pl), ("k", kl), ("trunc", &trunc.to_string())]), move || {
                    let rep = RepSpec::Su11 { k: k.clone(), trunc };
                    let g = gens(&qb, &rep)?;
                    let mut out = Vec::new();
                    for ((ul, u), (sl, s)) in iproduct!(&u_list, &s_list) {
                        for x in 0..=x_max {
                            let (res, mask) = eigen_univariate(&qb, &rep, u, s, x)?;
                            out.push(outcome(
                                "eigen",
                                &[("u", ul), ("s", sl), ("x", &x)],
                                Verdict::from_values(&res, Some(&mask), tol),
                            ));
                        }
                    }
                    if qb.below_one() {
                        for (sl, s) in &s_list {
                            for (a, b) in iproduct!(0..=x_max, 0..=x_max) {
                                let rn = asc_orth_n(&qb, s, &k, a, b, &tb)?;
                                out.push(outcome(
                                    "orth_n",
                                    &[("s", sl), ("x", &a), ("x2", &b)],
                                    Verdict::from_certified(&rn, tol),
                                ));
                                let rx = asc_orth_x(&qb, s, &k, a, b, &tb)?;
                                out.push(outcome(
                                    "orth_x",
                                    &[("s", sl), ("n", &a), ("n2", &b)],
                                    Verdict::from_certified(&rx, tol),
                                ));
                            }
                        }
                    }
                    for (sl, s) in &s_list {
                        let r = rewrite_residual(&qb, &g, s, true)?;
                        out.push(outcome("rewrite", &[("s", sl)], Verdict::from_matrix(&r, Some(&g.exact_rows), tol)));
                    }
                    Ok(out)
                });
            }
        }
    }

    fn rr_forms(&mut self) {
        let tol = self.tol();
        let tb = self.ctx.cfg.tail;
        for (pl, qb) in &self.ctx.bases {
            for stv in self.ctx.full_stv() {
                for &big_n in &self.ctx.cfg.n {
                    let rp = RrParams { s: stv.s.1.clone(), t: stv.t.1.clone(), v: stv.v.1.clone(), n_max: big_n };
                    let qb = qb.clone();
                    self.push(stv_point(pl, &stv, &[("N", &big_n.to_string())]), move || {
                        let swapped = RrParams { s: rp.t.clone(), t: rp.s.clone(), ..rp.clone() };
                        let mut out = Vec::new();
                        for (x, y) in iproduct!(0..=big_n, 0..=big_n) {
                            let at: [(&str, &dyn Display); 2] = [("x", &x), ("y", &y)];
                            let inner = rr_inner(&qb, &rp, x, y)?;
                            let reg = rr_closed_regular(&qb, &rp, x, y)?;
                            out.push(outcome("closed_regular", &at, Verdict::from_comparison(&inner, &reg, tol)));
                            if let Some(lit) = skip_pole(rr_closed(&qb, &rp, x, y))? {
                                out.push(outcome("closed_literal", &at, Verdict::from_comparison(&inner, &lit, tol)));
                            }
                            let sym = rr_closed_regular(&qb, &swapped, y, x)?;
                            out.push(outcome("symmetry", &at, Verdict::from_comparison(&reg, &sym, tol)));
                        }
                        Ok(out)
                    });
                }
            }
            self.multi_forms(pl, qb, false, tb);
        }
    }

    fn pr_forms(&mut self) {
        let (tol, tb, x_max) = (self.tol(), self.ctx.cfg.tail, self.ctx.cfg.x_max);
        for (pl, qb) in &self.ctx.bases {
            if !qb.below_one() {
                continue;
            }
            for stv in self.ctx.full_stv().into_iter().filter(Stv::converges) {
                for (kl, k) in &self.ctx.k {
                    let pp = PrParams { s: stv.s.1.clone(), t: stv.t.1.clone(), v: stv.v.1.clone(), k: k.clone() };
                    let qb = qb.clone();
                    self.push(stv_point(pl, &stv, &[("k", kl)]), move || {
                        let swapped = PrParams { s: pp.t.clone(), t: pp.s.clone(), ..pp.clone() };
                        let mut out = Vec::new();
                        for (x, y) in iproduct!(0..=x_max, 0..=x_max) {
                            let at: [(&str, &dyn Display); 2] = [("x", &x), ("y", &y)];
                            let inner = pr_inner(&qb, &pp, x, y, &tb)?;
                            let reg = pr_closed_regular(&qb, &pp, x, y, &tb)?;
                            out.push(outcome(
                                "closed_regular",
                                &at,
                                Verdict::from_certified_comparison(&inner, &reg, tol),
                            ));
                            if let Some(lit) = skip_pole(pr_closed(&qb, &pp, x, y, &tb))? {
                                out.push(outcome(
                                    "closed_literal",
                                    &at,
                                    Verdict::from_certified_comparison(&inner, &lit, tol),
                                ));
                            }
                            let sym = pr_closed_regular(&qb, &swapped, y, x, &tb)?;
                            out.push(outcome("symmetry", &at, Verdict::from_certified_comparison(&reg, &sym, tol)));
                        }
                        Ok(out)
                    });
                }
            }
            self.multi_forms(pl, qb, true, tb);
        }
    }

    /// Nested closed form against the tensor inner product.
    fn multi_forms(&mut self, pl: &str, qb: &QBase<S>, su11: bool, tb: TailBound) {
        let tol = self.tol();
        let key = if su11 { "k" } else { "N" };
        for (label, sizes) in self.ctx.multi_sizes(su11) {
            for stv in self.ctx.sampled_stv() {
                if su11 && !stv.converges() {
                    continue;
                }
                let mp = MultiParams { sizes: sizes.clone(), s: stv.s.1.clone(), t: stv.t.1.clone(), v: stv.v.1.clone() };
                let grid = self.ctx.pair_grid(&sizes);
                let qb = qb.clone();
                self.push(stv_point(pl, &stv, &[(key, &label)]), move || {
                    let mut out = Vec::new();
                    for (xs, ys) in iproduct!(&grid, &grid) {
                        let inner = multi_inner(&qb, &mp, xs, ys, &tb)?;
                        let closed = multi_closed(&qb, &mp, xs, ys, &tb)?;
                        out.push(outcome(
                            "multi_inner",
                            &[("x", &join(xs)), ("y", &join(ys))],
                            Verdict::from_certified_comparison(&inner, &closed, tol),
                        ));
                    }
                    Ok(out)
                });
            }
        }
    }

    fn rr_biorth(&mut self) {
        let tol = self.tol();
        let tb = self.ctx.cfg.tail;
        for (pl, qb) in &self.ctx.bases {
            for stv in self.ctx.full_stv() {
                for &big_n in &self.ctx.cfg.n {
                    for over in [SumOver::X, SumOver::Y] {
                        let rp = RrParams { s: stv.s.1.clone(), t: stv.t.1.clone(), v: stv.v.1.clone(), n_max: big_n };
                        let qb = qb.clone();
                        let params = stv_point(pl, &stv, &[("N", &big_n.to_string()), ("over", over_label(over))]);
                        self.push(params, move || {
                            let mut out = Vec::new();
                            for (i, i2) in iproduct!(0..=big_n, 0..=big_n) {
                                let r = rr_biorth_residual(&qb, &rp, over, i, i2)?;
                                out.push(outcome("biorth", &[("i", &i), ("i2", &i2)], Verdict::from_scalar(&r, tol)));
                            }
                            Ok(out)
                        });
                    }
                }
            }
            self.multi_biorth(pl, qb, false, tb);
        }
    }

    fn pr_biorth(&mut self) {
        let (tol, tb) = (self.tol(), self.ctx.cfg.tail);
        let i_max = self.ctx.cfg.x_max.min(2);
        for (pl, qb) in &self.ctx.bases {
            if !qb.below_one() {
                continue;
            }
            let usable = |stv: &Stv<S::Exp>| stv.converges() && stv.pairs_converge();
            for stv in self.ctx.full_stv().into_iter().filter(usable) {
                for (kl, k) in &self.ctx.k {
                    for over in [SumOver::X, SumOver::Y] {
                        let pp = PrParams { s: stv.s.1.clone(), t: stv.t.1.clone(), v: stv.v.1.clone(), k: k.clone() };
                        let qb = qb.clone();
                        self.push(stv_point(pl, &stv, &[("k", kl), ("over", over_label(over))]), move || {
                            let is: Vec<u32> = (0..=i_max).collect();
                            let block = pr_biorth_block(&qb, &pp, over, &is, &is, &tb)?;
                            let mut out = Vec::new();
                            for (i, i2) in iproduct!(0..=i_max, 0..=i_max) {
                                let r = &block[i as usize][i2 as usize];
                                out.push(outcome("biorth", &[("i", &i), ("i2", &i2)], Verdict::from_certified(r, tol)));
                            }
                            Ok(out)
                        });
                    }
                }
            }
            self.multi_biorth(pl, qb, true, tb);
        }
    }

    fn multi_biorth(&mut self, pl: &str, qb: &QBase<S>, su11: bool, tb: TailBound) {
        let tol = self.tol();
        let key = if su11 { "k" } else { "N" };
        for (label, sizes) in self.ctx.multi_sizes(su11) {
            for stv in self.ctx.sampled_stv() {
                if su11 && !(stv.converges() && stv.pairs_converge()) {
                    continue;
                }
                for over in [SumOver::X, SumOver::Y] {
                    let mp =
                        MultiParams { sizes: sizes.clone(), s: stv.s.1.clone(), t: stv.t.1.clone(), v: stv.v.1.clone() };
                    let grid = self.ctx.pair_grid(&sizes);
                    let qb = qb.clone();
                    self.push(stv_point(pl, &stv, &[(key, &label), ("over", over_label(over))]), move || {
                        let mut out = Vec::new();
                        for (a, b) in iproduct!(&grid, &grid) {
                            let r = multi_biorth_residual(&qb, &mp, over, a, b, &tb)?;
                            out.push(outcome(
                                "multi_biorth",
                                &[("i", &join(a)), ("i2", &join(b))],
                                Verdict::from_certified(&r, tol),
                            ));
                        }
                        Ok(out)
                    });
                }
            }
        }
    }

    fn rr_gevp(&mut self) {
        let tol = self.tol();
        for (pl, qb) in &self.ctx.bases {
            for stv in self.ctx.full_stv() {
                for &big_n in &self.ctx.cfg.n {
                    let rp = RrParams { s: stv.s.1.clone(), t: stv.t.1.clone(), v: stv.v.1.clone(), n_max: big_n };
                    let qb = qb.clone();
                    self.push(stv_point(pl, &stv, &[("N", &big_n.to_string())]), move || {
                        let mut out = Vec::new();
                        for (x, y) in iproduct!(0..=big_n, 0..=big_n) {
                            let r = rr_gevp_residual(&qb, &rp, x, y)?;
                            out.push(outcome("gevp", &[("x", &x), ("y", &y)], Verdict::from_scalar(&r, tol)));
                        }
                        Ok(out)
                    });
                }
            }
        }
    }

    fn pr_gevp(&mut self) {
        let (tol, tb, x_max) = (self.tol(), self.ctx.cfg.tail, self.ctx.cfg.x_max);
        for (pl, qb) in &self.ctx.bases {
            if !qb.below_one() {
                continue;
            }
            for stv in self.ctx.full_stv().into_iter().filter(Stv::converges) {
                for (kl, k) in &self.ctx.k {
                    let pp = PrParams { s: stv.s.1.clone(), t: stv.t.1.clone(), v: stv.v.1.clone(), k: k.clone() };
                    let qb = qb.clone();
                    self.push(stv_point(pl, &stv, &[("k", kl)]), move || {
                        let mut out = Vec::new();
                        for (x, y) in iproduct!(0..=x_max, 0..=x_max) {
                            let r = pr_gevp_residual(&qb, &pp, x, y, &tb)?;
                            out.push(outcome("gevp", &[("x", &x), ("y", &y)], Verdict::from_certified(&r, tol)));
                        }
                        Ok(out)
                    });
                }
            }
        }
    }

    /// `(t, v)` pairs: the univariate transfer identities do not involve `s`.
    fn tv_pairs(&self) -> Vec<TvPair<S::Exp>> {
        iproduct!(&self.ctx.t, &self.ctx.v).map(|(t, v)| (t.clone(), v.clone())).collect()
    }

    fn kraw_transfer(&mut self) {
        let tol = self.tol();
        let s_list = self.ctx.s.clone();
        for (pl, qb) in &self.ctx.bases {
            for ((tl, t), (vl, v)) in self.tv_pairs() {
                for &big_n in &self.ctx.cfg.n {
                    let (qb, s_list, t, v) = (qb.clone(), s_list.clone(), t.clone(), v.clone());
                    let params = point(&[("p", pl), ("t", &tl), ("v", &vl), ("N", &big_n.to_string())]);
                    self.push(params, move || {
                        let sizes = Sizes::Su2(vec![big_n]);
                        let mut out = Vec::new();
                        for y in 0..=big_n {
                            for n in 0..=big_n {
                                let r = kraw_k2_residual(&qb, &v, &t, big_n, y, n)?;
                                out.push(outcome("k2", &[("y", &y), ("n", &n)], Verdict::from_scalar(&r, tol)));
                            }
                            for (sl, s) in &s_list {
                                let g = transfer_check_x(&qb, &sizes, 0, 1, &[y], &t, &v, s)?;
                                out.push(outcome("x_transfer", &[("y", &y), ("sigma", sl)], grid_verdict(&g, tol)));
                            }
                        }
                        Ok(out)
                    });
                }
            }
        }
    }

    fn kraw_dynamical(&mut self) {
        let tol = self.tol();
        for (pl, qb) in &self.ctx.bases {
            for ((tl, t), (vl, v)) in self.tv_pairs() {
                for &big_n in &self.ctx.cfg.n {
                    let (qb, t, v) = (qb.clone(), t.clone(), v.clone());
                    let params = point(&[("p", pl), ("t", &tl), ("v", &vl), ("N", &big_n.to_string())]);
                    self.push(params, move || {
                        let mut out = Vec::new();
                        for (shift, y, n) in iproduct!([Shift::Up, Shift::Down], 0..=big_n, 0..=big_n) {
                            // a dynamical coefficient can have a genuine pole at the boundary
                            let Some(r) = skip_pole(kraw_dyn_residual(&qb, &v, &t, big_n, y, n, shift))? else { continue };
                            let at: [(&str, &dyn Display); 3] = [("shift", &shift.delta()), ("y", &y), ("n", &n)];
                            out.push(outcome("dynamical", &at, Verdict::from_scalar(&r, tol)));
                        }
                        Ok(out)
                    });
                }
            }
        }
    }

    fn asc_transfer(&mut self) {
        let (tol, trunc, x_max) = (self.tol(), self.ctx.cfg.trunc, self.ctx.cfg.x_max);
        let s_list = self.ctx.s.clone();
        for (pl, qb) in &self.ctx.bases {
            for ((tl, t), (vl, v)) in self.tv_pairs() {
                for (kl, k) in &self.ctx.k {
                    let (qb, s_list, k, t, v) = (qb.clone(), s_list.clone(), k.clone(), t.clone(), v.clone());
                    let params = point(&[("p", pl), ("t", &tl), ("v", &vl), ("k", kl), ("trunc", &trunc.to_string())]);
                    self.push(params, move || {
                        let sizes = Sizes::Su11(vec![k.clone()]);
                        let mut out = Vec::new();
                        for y in 0..=x_max {
                            for n in 0..=trunc {
                                let r = asc_k2_residual(&qb, &v, &t, &k, y, n)?;
                                out.push(outcome("k2", &[("y", &y), ("n", &n)], Verdict::from_scalar(&r, tol)));
                            }
                            for (sl, s) in &s_list {
                                let g = transfer_check_x(&qb, &sizes, trunc, 1, &[y], &t, &v, s)?;
                                out.push(outcome("y_transfer", &[("y", &y), ("sigma", sl)], grid_verdict(&g, tol)));
                            }
                        }
                        Ok(out)
                    });
                }
            }
        }
    }

    fn asc_dynamical(&mut self) {
        let (tol, trunc, x_max) = (self.tol(), self.ctx.cfg.trunc, self.ctx.cfg.x_max);
        for (pl, qb) in &self.ctx.bases {
            for ((tl, t), (vl, v)) in self.tv_pairs() {
                for (kl, k) in &self.ctx.k {
                    let (qb, k, t, v) = (qb.clone(), k.clone(), t.clone(), v.clone());
                    self.push(point(&[("p", pl), ("t", &tl), ("v", &vl), ("k", kl)]), move || {
                        let mut out = Vec::new();
                        for (shift, y, n) in iproduct!([Shift::Up, Shift::Down], 0..=x_max, 0..=trunc) {
                            // a dynamical coefficient can have a genuine pole at the boundary
                            let Some(r) = skip_pole(asc_dyn_residual(&qb, &v, &t, &k, y, n, shift))? else { continue };
                            let at: [(&str, &dyn Display); 3] = [("shift", &shift.delta()), ("y", &y), ("n", &n)];
                            out.push(outcome("dynamical", &at, Verdict::from_scalar(&r, tol)));
                        }
                        Ok(out)
                    });
                }
            }
        }
    }

    fn multi_params_point(&self, pl: &str, label: &str, stv: &Stv<S::Exp>, su11: bool) -> Params {
        let trunc = self.ctx.cfg.trunc.to_string();
        if su11 {
            stv_point(pl, stv, &[("k", label), ("trunc", &trunc)])
        } else {
            stv_point(pl, stv, &[("N", label)])
        }
    }

    fn multi_eigen(&mut self, su11: bool) {
        let (tol, trunc) = (self.tol(), self.ctx.cfg.trunc);
        for (pl, qb) in &self.ctx.bases {
            for (label, sizes) in self.ctx.multi_sizes(su11) {
                for stv in self.ctx.sampled_stv() {
                    let grid = self.ctx.index_grid(&sizes);
                    let (qb, sizes, stv2) = (qb.clone(), sizes.clone(), stv.clone());
                    self.push(self.multi_params_point(pl, &label, &stv, su11), move || {
                        let (s, t, v) = (&stv2.s.1, &stv2.t.1, &stv2.v.1);
                        let mut out = Vec::new();
                        for j in 1..=sizes.len() {
                            for ys in &grid {
                                let g = left_eigen_residual(&qb, &sizes, trunc, j, ys, t, v)?;
                                out.push(outcome("left_eigen", &[("j", &j), ("y", &join(ys))], grid_verdict(&g, tol)));
                                let g = right_eigen_residual(&qb, &sizes, trunc, j, ys, s)?;
                                out.push(outcome("right_eigen", &[("j", &j), ("x", &join(ys))], grid_verdict(&g, tol)));
                            }
                        }
                        Ok(out)
                    });
                }
            }
        }
    }

    fn multi_transfer(&mut self, su11: bool) {
        let (tol, trunc) = (self.tol(), self.ctx.cfg.trunc);
        for (pl, qb) in &self.ctx.bases {
            for (label, sizes) in self.ctx.multi_sizes(su11) {
                for stv in self.ctx.sampled_stv() {
                    let grid = self.ctx.index_grid(&sizes);
                    let (qb, sizes, stv2) = (qb.clone(), sizes.clone(), stv.clone());
                    self.push(self.multi_params_point(pl, &label, &stv, su11), move || {
                        let (s, t, v) = (&stv2.s.1, &stv2.t.1, &stv2.v.1);
                        let m = sizes.len();
                        // σ = h_{M−j}(x̄, s) at the two corners of the grid
                        let corners = [grid.first(), grid.last()].into_iter().flatten().dedup().collect_vec();
                        let mut out = Vec::new();
                        let mut tr = Transfer::new(&qb, &sizes, trunc, t, v)?;
                        for j in 1..=m {
                            for ys in &grid {
                                let g = tr.check_k2(j, ys)?;
                                out.push(outcome("k2_transfer", &[("j", &j), ("y", &join(ys))], grid_verdict(&g, tol)));
                                for xs in &corners {
                                    let sigma = heights(&sizes, s, xs)?[m - j].clone();
                                    let g = tr.check_x(j, ys, &sigma)?;
                                    out.push(outcome(
                                        "x_transfer",
                                        &[("j", &j), ("y", &join(ys)), ("sigma_x", &join(xs))],
                                        grid_verdict(&g, tol),
                                    ));
                                }
                            }
                        }
                        Ok(out)
                    });
                }
            }
        }
    }

    fn multi_gevp(&mut self, su11: bool) {
        let (tol, tb) = (self.tol(), self.ctx.cfg.tail);
        for (pl, qb) in &self.ctx.bases {
            if su11 && !qb.below_one() {
                continue;
            }
            for (label, sizes) in self.ctx.multi_sizes(su11) {
                for stv in self.ctx.sampled_stv() {
                    if su11 && !stv.converges() {
                        continue;
                    }
                    let grid = self.ctx.index_grid(&sizes);
                    let mp =
                        MultiParams { sizes: sizes.clone(), s: stv.s.1.clone(), t: stv.t.1.clone(), v: stv.v.1.clone() };
                    for j in 1..=sizes.len() {
                        let mut params = self.multi_params_point(pl, &label, &stv, su11);
                        params.remove("trunc");
                        params.insert("j".into(), j.to_string());
                        let (qb, mp, grid) = (qb.clone(), mp.clone(), grid.clone());
                        self.push(params, move || {
                            let mut out = Vec::new();
                            let mut memo: HashMap<_, Certified<_>> = HashMap::new();
                            let terms: Vec<_> = grid.iter().map(|ys| GevpTerms::new(&qb, &mp, j, ys)).try_collect()?;
                            for (xs, (ys, terms)) in iproduct!(&grid, grid.iter().zip(&terms)) {
                                let r = terms.residual(&qb, &mp, xs, |yy| {
                                    let key = (xs.clone(), yy.to_vec());
                                    if let Some(c) = memo.get(&key) {
                                        return Ok(c.clone());
                                    }
                                    let c = multi_closed(&qb, &mp, xs, yy, &tb)?;
                                    memo.insert(key, c.clone());
                                    Ok(c)
                                })?;
                                out.push(outcome(
                                    "multi_gevp",
                                    &[("x", &join(xs)), ("y", &join(ys))],
                                    Verdict::from_certified(&r, tol),
                                ));
                            }
                            Ok(out)
                        });
                    }
                }
            }
        }
    }
}

/// `(K,K)`, `(E,F)`, `(F,E)`, `(X_{0,s},X_{0,s})` for su2; `(K,K)`, `(E,−F)`, `(F,−E)`,
/// `(Y_{0,s},Y_{0,s})` for su11.
fn star_checks<S: Scalar>(
    qb: &QBase<S>,
    g: &Gens<S>,
    w: &[S],
    s_list: &[Labelled<S::Exp>],
    su11: bool,
    tol: f64,
) -> Result<Vec<Outcome>> {
    let mask = pair_mask(&g.exact_rows);
    let sign = if su11 { -S::one() } else { S::one() };
    let mut out = Vec::new();
    let mut check = |name: &str, at: &[(&str, &dyn Display)], a: &OpMatrix<S>, astar: &OpMatrix<S>| -> Result<()> {
        let r = star_residual(a, astar, w)?;
        out.push(outcome(name, at, Verdict::from_values(&matrix_values(&r), Some(&mask), tol)));
        Ok(())
    };
    check("k", &[], &g.k, &g.k)?;
    check("e", &[], &g.e, &g.f.scaled(&sign))?;
    check("f", &[], &g.f, &g.e.scaled(&sign))?;
    let which = if su11 { Twist::Y } else { Twist::X };
    let zero = S::Exp::int(0);
    for (sl, s) in s_list {
        let x = twist(qb, g, which, &zero, s);
        check("twisted", &[("s", sl)], &x, &x)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SuiteConfig {
        SuiteConfig {
            p: vec![ratio(1, 2)],
            s: ints(0..=1),
            t: ints(1..=1),
            v: ints(-1..=0),
            u: ints(0..=1),
            n: vec![1, 2],
            n_multi: vec![vec![1, 1]],
            k: ints(1..=1),
            k_multi: vec![vec![ratio(1, 1); 2]],
            trunc: 4,
            x_max: 1,
            multi_x_max: 1,
            ..SuiteConfig::default()
        }
    }

    #[test]
    fn registry_resolves() {
        assert_eq!(resolve(ALL).unwrap().len(), SUITES.len());
        assert_eq!(resolve("cor3.6").unwrap(), vec!["cor3.6"]);
        assert!(matches!(resolve("lemma9.9"), Err(QError::InvalidParameter(_))));
    }

    #[test]
    fn every_suite_passes_on_a_small_grid() {
        let cfg = small();
        for id in suite_ids() {
            let reports = run_suite(Backend::Exact, id, &cfg, false).unwrap();
            assert!(!reports.is_empty(), "{id} produced no checks");
            let bad: Vec<_> = reports.iter().filter(|r| !r.pass).take(3).collect();
            assert!(bad.is_empty(), "{id}: {bad:#?}");
        }
    }

    #[test]
    fn exact_reports_are_zero_when_passing() {
        let reports = run_suite(Backend::Exact, "cor3.6", &small(), false).unwrap();
        assert!(reports.iter().all(|r| r.pass && r.residual == "0" && r.backend == "exact"));
    }

    #[test]
    fn errors_become_failed_reports() {
        let job = Job {
            suite: "star",
            params: point(&[("p", "1/2")]),
            backend: Backend::Exact,
            runner: Box::new(|| Err(QError::DenominatorPole("at x = 1".into()))),
        };
        let reports = job.run(true);
        assert_eq!(reports.len(), 1);
        let r = &reports[0];
        assert!(!r.pass);
        assert_eq!((r.check.as_str(), r.backend.as_str()), ("evaluate", "exact"));
        assert!(r.residual.contains("at x = 1"), "{}", r.residual);
        assert_eq!(r.params["p"], "1/2");
        assert_eq!(r.error_bound, None);
    }

    #[test]
    fn exact_mode_rejects_non_half_integer_parameters() {
        let cfg = SuiteConfig { s: vec![ratio(1, 3)], ..small() };
        assert!(build_jobs(Backend::Exact, "cor3.6", &cfg).is_err());
        assert!(build_jobs(Backend::Float, "cor3.6", &cfg).is_ok());
    }
}
