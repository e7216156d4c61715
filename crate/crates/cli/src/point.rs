//! Parameter points given as `key=value` assignments or flags.

use std::collections::BTreeMap;

use itertools::Itertools;
use num_rational::BigRational;
use qracah::scalar::parse_ratio;
use qracah::{Exponent, QError, Result};

/// Raw parameter values by name. Typed accessors parse on demand so every
/// backend sees the same text.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Point(BTreeMap<String, String>);

fn invalid(msg: String) -> QError {
    QError::InvalidParameter(msg)
}

impl Point {
    pub fn new() -> Self {
        Point::default()
    }

    /// Adds `key = value`, refusing a second value for the same key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if let Some(old) = self.0.get(key) {
            if old != value {
                return Err(invalid(format!("{key} given twice: {old} and {value}")));
            }
        }
        self.0.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Parses `key=value` assignments.
    pub fn extend_assignments(&mut self, args: &[String]) -> Result<()> {
        for a in args {
            let (k, v) = a.split_once('=').ok_or_else(|| invalid(format!("expected key=value, got {a:?}")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn has(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }

    pub fn ratio(&self, key: &str, default: i64) -> Result<BigRational> {
        match self.get(key) {
            Some(s) => single(key, s).and_then(parse_ratio),
            None => Ok(BigRational::from_integer(default.into())),
        }
    }

    pub fn exp<E: Exponent>(&self, key: &str, default: i64) -> Result<E> {
        E::from_param(&self.ratio(key, default)?)
    }

    pub fn uint(&self, key: &str, default: u32) -> Result<u32> {
        match self.get(key) {
            Some(s) => parse_uint(key, single(key, s)?),
            None => Ok(default),
        }
    }

    pub fn uint_list(&self, key: &str) -> Option<Result<Vec<u32>>> {
        self.get(key).map(|s| split_list(s).map(|x| parse_uint(key, x)).collect())
    }

    pub fn exp_list<E: Exponent>(&self, key: &str) -> Option<Result<Vec<E>>> {
        self.get(key).map(|s| split_list(s).map(|x| parse_ratio(x).and_then(|r| E::from_param(&r))).collect())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &String)> {
        self.0.iter()
    }
}

fn single<'a>(key: &str, s: &'a str) -> Result<&'a str> {
    if s.contains(',') {
        return Err(invalid(format!("{key} takes a single value here, got {s:?}")));
    }
    Ok(s)
}

pub fn parse_uint(key: &str, s: &str) -> Result<u32> {
    s.trim().parse().map_err(|_| invalid(format!("{key} must be a nonnegative integer, got {s:?}")))
}

pub fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty())
}

pub fn parse_ratio_list(key: &str, s: &str) -> Result<Vec<BigRational>> {
    let out: Vec<_> = split_list(s).map(parse_ratio).try_collect()?;
    if out.is_empty() {
        return Err(invalid(format!("{key} is empty")));
    }
    Ok(out)
}

/// Expands a table axis: `a..b` (inclusive), `a,b,c`, or `x1,x2;y1,y2` for multi-indices.
pub fn expand_axis(key: &str, s: &str, multi: bool) -> Result<Vec<String>> {
    if multi {
        return Ok(s.split(';').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect());
    }
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (parse_uint(key, a)?, parse_uint(key, b)?);
        if a > b {
            return Err(invalid(format!("empty range {s:?} for {key}")));
        }
        return Ok((a..=b).map(|i| i.to_string()).collect());
    }
    Ok(split_list(s).map(str::to_string).collect())
}
