//! Outcomes of identity checks.

use std::collections::BTreeMap;

use crate::qseries::Certified;
use crate::scalar::{Backend, Scalar};
use crate::uqsl2::OpMatrix;

/// The judged result of one check, before suite and timing are attached.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    /// `"0"` for an exact zero, the exact rational of the largest entry otherwise;
    /// the largest magnitude in scientific notation for floats.
    pub residual: String,
    /// Present when the residual carries a truncation or rounding certificate.
    pub error_bound: Option<f64>,
    pub pass: bool,
    pub backend: String,
}

impl Verdict {
    /// Residual entries, restricted to `mask` when given. Exact backends pass only
    /// on identically zero entries; float backends when the largest magnitude is `≤ tol`.
    pub fn from_values<S: Scalar>(values: &[S], mask: Option<&[bool]>, tol: f64) -> Verdict {
        let kept: Vec<&S> = match mask {
            Some(m) => values.iter().zip(m).filter(|(_, &keep)| keep).map(|(v, _)| v).collect(),
            None => values.iter().collect(),
        };
        let worst = kept.iter().copied().max_by(|a, b| a.magnitude().total_cmp(&b.magnitude()));
        let backend = S::BACKEND.name().to_string();
        if S::is_exact() {
            return match kept.iter().find(|v| !v.is_zero()) {
                None => Verdict { residual: "0".into(), error_bound: None, pass: true, backend },
                Some(_) => Verdict {
                    residual: worst.map(|w| w.to_string()).unwrap_or_default(),
                    error_bound: None,
                    pass: false,
                    backend,
                },
            };
        }
        let mag = worst.map(|w| w.magnitude()).unwrap_or(0.0);
        Verdict { residual: format_float(mag), error_bound: None, pass: mag <= tol, backend }
    }

    pub fn from_scalar<S: Scalar>(value: &S, tol: f64) -> Verdict {
        Verdict::from_values(std::slice::from_ref(value), None, tol)
    }

    pub fn from_matrix<S: Scalar>(m: &OpMatrix<S>, mask: Option<&[bool]>, tol: f64) -> Verdict {
        let d = m.dim();
        let mut values = Vec::with_capacity(d * d);
        let mut keep = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                values.push(m.get(i, j).clone());
                keep.push(mask.is_none_or(|mk| mk[i]));
            }
        }
        Verdict::from_values(&values, Some(&keep), tol)
    }

    /// A certified residual: passes when both `|value|` and the bound are `≤ tol`.
    /// In exact arithmetic with a zero bound this is the exact verdict.
    pub fn from_certified<S: Scalar>(c: &Certified<S>, tol: f64) -> Verdict {
        if S::is_exact() && c.error_bound == 0.0 {
            return Verdict::from_scalar(&c.value, tol);
        }
        let mag = c.value.magnitude();
        let backend = backend_label::<S>();
        Verdict {
            residual: format_float(mag),
            error_bound: Some(c.error_bound),
            pass: mag <= tol && c.error_bound <= tol,
            backend,
        }
    }

    /// Two evaluations of the same quantity. Floats compare relative to `max(1, |a|, |b|)`
    /// since both paths carry rounding proportional to their size.
    pub fn from_comparison<S: Scalar>(a: &S, b: &S, tol: f64) -> Verdict {
        let diff = a.clone() - b.clone();
        if S::is_exact() {
            return Verdict::from_scalar(&diff, tol);
        }
        let mag = diff.magnitude() / comparison_scale(a.magnitude(), b.magnitude());
        Verdict { residual: format_float(mag), error_bound: None, pass: mag <= tol, backend: S::BACKEND.name().into() }
    }

    /// As [`Verdict::from_comparison`] for truncated sums; the bounds add. Once a
    /// truncation is involved the comparison is relative in every backend.
    pub fn from_certified_comparison<S: Scalar>(a: &Certified<S>, b: &Certified<S>, tol: f64) -> Verdict {
        let diff = a.value.clone() - b.value.clone();
        let bound = a.error_bound + b.error_bound;
        if S::is_exact() && bound == 0.0 {
            return Verdict::from_scalar(&diff, tol);
        }
        let scale = comparison_scale(a.value.magnitude(), b.value.magnitude());
        let (mag, bound) = (diff.magnitude() / scale, bound / scale);
        Verdict {
            residual: format_float(mag),
            error_bound: Some(bound),
            pass: mag <= tol && bound <= tol,
            backend: backend_label::<S>(),
        }
    }

    /// A failed evaluation, reported as a failed check.
    pub fn error(backend: Backend, message: String) -> Verdict {
        Verdict { residual: message, error_bound: None, pass: false, backend: backend.name().to_string() }
    }
}

/// Shortest round-trip scientific rendering, so reports are reproducible bit for bit.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x:e}")
    }
}

/// Exact arithmetic that went through a truncated sum is labelled as such.
fn backend_label<S: Scalar>() -> String {
    match S::BACKEND {
        Backend::Exact => "exact-truncated".into(),
        b => b.name().into(),
    }
}

fn comparison_scale(a: f64, b: f64) -> f64 {
    1f64.max(a).max(b)
}

/// One verified identity at one parameter point.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub suite: String,
    pub check: String,
    pub params: BTreeMap<String, String>,
    pub residual: String,
    pub error_bound: Option<f64>,
    pub pass: bool,
    pub backend: String,
    pub elapsed_ms: f64,
}

/// Pass and fail counts over a report stream.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
}

impl Summary {
    pub fn of<'a>(reports: impl IntoIterator<Item = &'a CheckReport>) -> Summary {
        reports.into_iter().fold(Summary::default(), |mut acc, r| {
            if r.pass {
                acc.passed += 1;
            } else {
                acc.failed += 1;
            }
            acc
        })
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn exact_verdicts() {
        let z = BigRational::from_integer(0.into());
        let h = BigRational::new(1.into(), 2.into());
        assert!(Verdict::from_values(&[z.clone(), z.clone()], None, 1.0).pass);
        let v = Verdict::from_values(&[z.clone(), h.clone()], None, 1.0);
        assert!(!v.pass);
        assert_eq!(v.residual, "1/2");
        assert!(Verdict::from_values(&[z, h], Some(&[true, false]), 1.0).pass);
    }

    #[test]
    fn certified_needs_both_bounds() {
        let c = Certified { value: 1e-12, error_bound: 1e-3, terms: 3 };
        assert!(!Verdict::from_certified(&c, 1e-9).pass);
        let c = Certified { value: 1e-12, error_bound: 1e-12, terms: 3 };
        assert!(Verdict::from_certified(&c, 1e-9).pass);
        let e = Certified { value: BigRational::new(1.into(), 1000.into()), error_bound: 1e-20, terms: 9 };
        let v = Verdict::from_certified(&e, 1e-9);
        assert!(!v.pass);
        assert_eq!(v.backend, "exact-truncated");
    }
}
