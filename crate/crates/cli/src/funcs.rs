//! Functions reachable from `eval` and `table`.

use itertools::Itertools;
use qracah::multivar::{coeff_a, coeff_b, epsilon_set, heights, multi_closed, MultiParams, Sizes};
use qracah::orthopoly::{asc, asc_big_w, asc_w, kraw, kraw_big_w, kraw_w, AscParams, KrawParams};
use qracah::ratfun::{
    pr_closed, pr_closed_regular, pr_inner, rr_closed, rr_closed_regular, rr_inner, PrParams, RrParams,
};
use qracah::report::format_float;
use qracah::{Certified, Exponent, QBase, QError, Result, Scalar, TailBound};

use crate::point::Point;

/// A table row: column names with rendered values.
pub type Row = Vec<(String, String)>;

pub struct FnSpec {
    pub name: &'static str,
    /// Grid variables, in row-major order.
    pub axes: &'static [&'static str],
    /// Whether the axes are multi-indices.
    pub multi: bool,
    pub about: &'static str,
}

pub const FUNCTIONS: &[FnSpec] = &[
    FnSpec { name: "kraw", axes: &["n", "x"], multi: false, about: "k_{u,s}(n,x) on {0..N}" },
    FnSpec { name: "asc", axes: &["n", "x"], multi: false, about: "phi_{u,s}(n,x) for weight k" },
    FnSpec { name: "rr_inner", axes: &["x", "y"], multi: false, about: "R_r as an inner product" },
    FnSpec { name: "rr_closed", axes: &["x", "y"], multi: false, about: "R_r closed form, literal" },
    FnSpec { name: "rr_regular", axes: &["x", "y"], multi: false, about: "R_r closed form, poles paired" },
    FnSpec { name: "pr_inner", axes: &["x", "y"], multi: false, about: "P_r as an inner product" },
    FnSpec { name: "pr_closed", axes: &["x", "y"], multi: false, about: "P_r closed form, literal" },
    FnSpec { name: "pr_regular", axes: &["x", "y"], multi: false, about: "P_r closed form, poles paired" },
    FnSpec { name: "rr_multi", axes: &["x", "y"], multi: true, about: "nested R_r for sizes N" },
    FnSpec { name: "pr_multi", axes: &["x", "y"], multi: true, about: "nested P_r for weights k" },
    FnSpec { name: "weights", axes: &["n", "x"], multi: false, about: "w and W for both families" },
    FnSpec { name: "coefficients", axes: &["y"], multi: true, about: "A,B (or C,D) over the shift set E_j" },
    FnSpec { name: "heights", axes: &["y"], multi: true, about: "h_0..h_M at the multi-index y" },
];

pub fn lookup(name: &str) -> Result<&'static FnSpec> {
    FUNCTIONS.iter().find(|f| f.name == name).ok_or_else(|| {
        let known = FUNCTIONS.iter().map(|f| f.name).join(", ");
        QError::InvalidParameter(format!("unknown function {name:?}; known: {known}"))
    })
}

/// Settings that are not part of the evaluation point.
#[derive(Clone, Copy, Debug)]
pub struct EvalSettings {
    pub tail: TailBound,
    pub x_max: u32,
}

fn cert_row<S: Scalar>(c: Certified<S>) -> Row {
    vec![("value".to_string(), c.value.to_string()), ("error_bound".into(), format_float(c.error_bound))]
}

fn value_row<S: Scalar>(v: S) -> Row {
    vec![("value".into(), v.to_string())]
}

fn rr_params<E: Exponent>(pt: &Point) -> Result<RrParams<E>> {
    Ok(RrParams { s: pt.exp("s", 0)?, t: pt.exp("t", 0)?, v: pt.exp("v", 0)?, n_max: pt.uint("N", 1)? })
}

fn pr_params<E: Exponent>(pt: &Point) -> Result<PrParams<E>> {
    Ok(PrParams { s: pt.exp("s", 0)?, t: pt.exp("t", 0)?, v: pt.exp("v", 0)?, k: pt.exp("k", 1)? })
}

/// `N̄` from `N`, or `k̄` from `k` when only that is given; `M` pads the default to `M` ones.
fn sizes<E: Exponent>(pt: &Point, su11: bool) -> Result<Sizes<E>> {
    let m = pt.uint("M", 0)? as usize;
    let pad = |len: usize| if m > 0 { m } else { len.max(1) };
    if su11 {
        let k = match pt.exp_list::<E>("k") {
            Some(k) => k?,
            None => vec![E::int(1); pad(0)],
        };
        return Ok(Sizes::Su11(k));
    }
    let n = match pt.uint_list("N") {
        Some(n) => n?,
        None => vec![1; pad(0)],
    };
    Ok(Sizes::Su2(n))
}

fn is_su11(pt: &Point) -> bool {
    pt.has("k") && !pt.has("N")
}

fn multi_index(pt: &Point, key: &str, len: usize) -> Result<Vec<u32>> {
    match pt.uint_list(key) {
        Some(v) => v,
        None => Ok(vec![0; len]),
    }
}

/// Evaluates `spec` at `pt`; most functions give one row, `coefficients` one per shift vector.
pub fn evaluate<S: Scalar>(spec: &FnSpec, qb: &QBase<S>, pt: &Point, set: &EvalSettings) -> Result<Vec<Row>> {
    let tb = &set.tail;
    let (x, y) = (pt.uint("x", 0), pt.uint("y", 0));
    let one = |r: Row| Ok(vec![r]);
    match spec.name {
        "kraw" => {
            let kp = KrawParams { u: pt.exp("u", 0)?, s: pt.exp("s", 0)?, n_max: pt.uint("N", 1)? };
            one(value_row(kraw(qb, &kp, pt.uint("n", 0)?, x?)?))
        }
        "asc" => {
            let ap = AscParams { u: pt.exp("u", 0)?, s: pt.exp("s", 0)?, k: pt.exp("k", 1)? };
            one(value_row(asc(qb, &ap, pt.uint("n", 0)?, x?)?))
        }
        "rr_inner" => one(value_row(rr_inner(qb, &rr_params(pt)?, x?, y?)?)),
        "rr_closed" => one(value_row(rr_closed(qb, &rr_params(pt)?, x?, y?)?)),
        "rr_regular" => one(value_row(rr_closed_regular(qb, &rr_params(pt)?, x?, y?)?)),
        "pr_inner" => one(cert_row(pr_inner(qb, &pr_params(pt)?, x?, y?, tb)?)),
        "pr_closed" => one(cert_row(pr_closed(qb, &pr_params(pt)?, x?, y?, tb)?)),
        "pr_regular" => one(cert_row(pr_closed_regular(qb, &pr_params(pt)?, x?, y?, tb)?)),
        "rr_multi" | "pr_multi" => {
            let sizes = sizes(pt, spec.name == "pr_multi")?;
            let m = sizes.len();
            let mp = MultiParams { sizes, s: pt.exp("s", 0)?, t: pt.exp("t", 0)?, v: pt.exp("v", 0)? };
            one(cert_row(multi_closed(qb, &mp, &multi_index(pt, "x", m)?, &multi_index(pt, "y", m)?, tb)?))
        }
        "weights" => {
            let (n, xv, big_n) = (pt.uint("n", 0)?, x?, pt.uint("N", 1)?);
            let (s, k) = (pt.exp::<S::Exp>("s", 0)?, pt.exp::<S::Exp>("k", 1)?);
            let mut row = vec![
                ("kraw_w".to_string(), kraw_w(qb, n, big_n)?.to_string()),
                ("kraw_W".to_string(), kraw_big_w(qb, xv, &s, big_n, false)?.to_string()),
                ("kraw_W_inv".to_string(), kraw_big_w(qb, xv, &s, big_n, true)?.to_string()),
                ("asc_w".to_string(), asc_w(qb, n, &k)?.to_string()),
            ];
            if qb.below_one() {
                row.push(("asc_W".into(), asc_big_w(qb, xv, &s, &k, tb)?.value.to_string()));
            }
            one(row)
        }
        "coefficients" => {
            let sizes = sizes::<S::Exp>(pt, is_su11(pt))?;
            let m = sizes.len();
            let j = pt.uint("j", 1)? as usize;
            let ys = multi_index(pt, "y", m)?;
            let (t, v) = (pt.exp("t", 0)?, pt.exp("v", 0)?);
            let (an, bn) = match sizes {
                Sizes::Su2(_) => ("A", "B"),
                Sizes::Su11(_) => ("C", "D"),
            };
            epsilon_set(m, j)?
                .iter()
                .map(|e| {
                    Ok(vec![
                        ("eps".to_string(), e.to_string()),
                        (an.to_string(), coeff_a(qb, &sizes, j, e, &ys, &t)?.to_string()),
                        (bn.to_string(), coeff_b(qb, &sizes, j, e, &ys, &t, &v)?.to_string()),
                    ])
                })
                .collect()
        }
        "heights" => {
            let sizes = sizes::<S::Exp>(pt, is_su11(pt))?;
            let ys = multi_index(pt, "y", sizes.len())?;
            let hs = heights(&sizes, &pt.exp("t", 0)?, &ys)?;
            one(hs.iter().enumerate().map(|(i, h)| (format!("h_{i}"), h.to_string())).collect())
        }
        other => Err(QError::Internal(format!("function {other} is registered but not wired"))),
    }
}

/// Default grid of one axis when the table command does not give it.
pub fn default_axis(spec: &FnSpec, axis: &str, pt: &Point, set: &EvalSettings) -> Result<Vec<String>> {
    let upto = |n: u32| (0..=n).map(|i| i.to_string()).collect::<Vec<_>>();
    if spec.multi {
        let su11 = spec.name == "pr_multi" || (spec.name != "rr_multi" && is_su11(pt));
        let sizes = sizes::<f64>(pt, su11)?;
        let ranges: Vec<Vec<u32>> = match &sizes {
            Sizes::Su2(n) => n.iter().map(|&m| (0..=m).collect()).collect(),
            Sizes::Su11(k) => k.iter().map(|_| (0..=set.x_max.min(2)).collect()).collect(),
        };
        return Ok(ranges.into_iter().multi_cartesian_product().map(|v| v.iter().join(",")).collect());
    }
    let _ = axis;
    Ok(match spec.name {
        "kraw" | "rr_inner" | "rr_closed" | "rr_regular" | "weights" => upto(pt.uint("N", 1)?),
        _ => upto(set.x_max),
    })
}
