//! Sweep value lists: `5,10,15`, `0.01`, `1/10`, `T/100`, `T`.

use crate::error::{Error, Result};

/// One value: a number, `a/b`, `T`, `T/b` or `T*b` (T = final time).
pub fn parse_value(item: &str, t_final: f64) -> Result<f64> {
    let s = item.trim();
    if s.is_empty() {
        return Err(Error::InvalidSpec("empty value".into()));
    }
    let number = |p: &str| -> Result<f64> {
        let p = p.trim();
        if p.eq_ignore_ascii_case("t") {
            return Ok(t_final);
        }
        p.parse::<f64>().map_err(|_| Error::InvalidSpec(format!("cannot parse '{p}' as a number")))
    };
    let v = if let Some((a, b)) = s.split_once('/') {
        number(a)? / number(b)?
    } else if let Some((a, b)) = s.split_once('*') {
        number(a)? * number(b)?
    } else {
        number(s)?
    };
    if !v.is_finite() {
        return Err(Error::InvalidSpec(format!("value '{s}' is not finite")));
    }
    Ok(v)
}

/// Comma- (or whitespace-) separated list of values.
pub fn parse_values(list: &str, t_final: f64) -> Result<Vec<f64>> {
    let items: Vec<&str> =
        list.split(|c: char| c == ',' || c.is_whitespace() || c == ';').filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(Error::InvalidSpec("empty value list".into()));
    }
    items.iter().map(|s| parse_value(s, t_final)).collect()
}
