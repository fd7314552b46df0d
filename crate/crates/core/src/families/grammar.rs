//! Text form of a family:
//!
//! ```text
//! gaussian | student(nu=..) | cauchy | gg(s=.., b=..|b=cov) | k(nu=..) | epscont(eps=.., a2=..)
//! ```
//!
//! Any form may also carry `scale=cov|median|raw` inside the parentheses.

use super::{Family, GgScale, ScaleRule};
use crate::{Error, Result, Scalar};

/// Parsed family plus an optional scale rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilySpec<T> {
    pub family: Family<T>,
    pub rule: Option<ScaleRule>,
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

pub fn parse_scale_rule(s: &str) -> Result<ScaleRule> {
    match s.trim() {
        "cov" => Ok(ScaleRule::Cov),
        "median" => Ok(ScaleRule::Median),
        "raw" => Ok(ScaleRule::Raw),
        other => Err(parse_err(format!("unknown scale rule `{other}`"))),
    }
}

pub fn parse_family<T: Scalar>(text: &str) -> Result<FamilySpec<T>> {
    let text = text.trim();
    let (name, body) = match text.find('(') {
        Some(open) => {
            if !text.ends_with(')') {
                return Err(parse_err(format!("missing `)` in `{text}`")));
            }
            (&text[..open], &text[open + 1..text.len() - 1])
        }
        None => (text, ""),
    };
    let name = name.trim().to_ascii_lowercase();

    let mut args: Vec<(String, String)> = Vec::new();
    for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| parse_err(format!("expected key=value, got `{part}`")))?;
        let key = k.trim().to_ascii_lowercase();
        if args.iter().any(|(seen, _)| *seen == key) {
            return Err(parse_err(format!("duplicate argument `{key}`")));
        }
        args.push((key, v.trim().to_string()));
    }

    let mut rule = None;
    args.retain(|(k, v)| {
        if k == "scale" {
            rule = Some(v.clone());
            false
        } else {
            true
        }
    });
    let rule = rule.map(|r| parse_scale_rule(&r)).transpose()?;

    let take = |args: &mut Vec<(String, String)>, key: &str| -> Result<Option<String>> {
        Ok(args
            .iter()
            .position(|(k, _)| k == key)
            .map(|i| args.remove(i).1))
    };
    let number = |v: String, key: &str| -> Result<T> {
        let x: f64 = v
            .parse()
            .map_err(|_| parse_err(format!("`{key}` expects a number, got `{v}`")))?;
        if !x.is_finite() {
            return Err(parse_err(format!("`{key}` must be finite")));
        }
        Ok(T::c(x))
    };
    let required = |args: &mut Vec<(String, String)>, key: &str| -> Result<T> {
        let v = take(args, key)?.ok_or_else(|| parse_err(format!("missing `{key}`")))?;
        number(v, key)
    };

    let family = match name.as_str() {
        "gaussian" | "normal" => Family::Gaussian,
        "student" | "t" => Family::StudentT {
            nu: required(&mut args, "nu")?,
        },
        "cauchy" => Family::StudentT { nu: T::one() },
        "gg" => {
            let s = required(&mut args, "s")?;
            let b = match take(&mut args, "b")? {
                None => GgScale::Cov,
                Some(v) if v == "cov" => GgScale::Cov,
                Some(v) => GgScale::Value(number(v, "b")?),
            };
            Family::GeneralizedGaussian { s, b }
        }
        "k" => Family::KDist {
            nu: required(&mut args, "nu")?,
        },
        "epscont" => Family::EpsContaminated {
            eps: required(&mut args, "eps")?,
            a2: required(&mut args, "a2")?,
        },
        other => return Err(parse_err(format!("unknown family `{other}`"))),
    };
    if let Some((k, _)) = args.first() {
        return Err(parse_err(format!("unexpected argument `{k}` for `{name}`")));
    }
    Ok(FamilySpec { family, rule })
}
