//! Numeric flag syntax: `4pi`, `-pi/2`, `sqrt2`, `2*sqrt2`, lists
//! `0,sqrt2,10` and inclusive ranges `start:stop:count`.

use std::f64::consts::{PI, SQRT_2};

fn coefficient(text: &str, whole: &str) -> Result<f64, String> {
    let t = text.trim_end_matches('*').trim();
    if t.is_empty() {
        return Ok(1.0);
    }
    t.parse::<f64>()
        .map_err(|_| format!("cannot parse {whole:?} as a number"))
}

fn unsigned(text: &str, whole: &str) -> Result<f64, String> {
    for (suffix, value) in [("pi", PI), ("π", PI), ("sqrt2", SQRT_2), ("√2", SQRT_2)] {
        if let Some(head) = text.strip_suffix(suffix) {
            return Ok(coefficient(head, whole)? * value);
        }
    }
    text.parse::<f64>()
        .map_err(|_| format!("cannot parse {whole:?} as a number"))
}

/// Parses a real number with optional `pi`/`sqrt2` factor and `/d` divisor.
pub fn number(text: &str) -> Result<f64, String> {
    let whole = text;
    let t = text.trim();
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, t.strip_prefix('+').unwrap_or(t)),
    };
    let (num, den) = match body.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (body, None),
    };
    let mut v = unsigned(num.trim(), whole)?;
    if let Some(d) = den {
        let d = unsigned(d.trim(), whole)?;
        if d == 0.0 {
            return Err(format!("division by zero in {whole:?}"));
        }
        v /= d;
    }
    let v = sign * v;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{whole:?} is not finite"))
    }
}

/// Comma-separated numbers.
pub fn list(text: &str) -> Result<Vec<f64>, String> {
    let values: Vec<f64> = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(number)
        .collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err("empty list".into());
    }
    Ok(values)
}

/// `start:stop:count`, inclusive of both ends.
pub fn range(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(format!("range {text:?} must look like start:stop:count"));
    };
    let (a, b) = (number(a)?, number(b)?);
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| format!("range count in {text:?} must be a positive integer"))?;
    match n {
        0 => Err(format!("range {text:?} has no points")),
        1 => Ok(vec![a]),
        _ => Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()),
    }
}

/// A pair `lo:hi`.
pub fn window(text: &str) -> Result<(f64, f64), String> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| format!("window {text:?} must look like lo:hi"))?;
    Ok((number(a)?, number(b)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers() {
        assert_eq!(number("4pi").unwrap(), 4.0 * PI);
        assert_eq!(number("-pi/2").unwrap(), -PI / 2.0);
        assert_eq!(number("sqrt2").unwrap(), SQRT_2);
        assert_eq!(number("2*sqrt2").unwrap(), 2.0 * SQRT_2);
        assert_eq!(number("1e-3").unwrap(), 1e-3);
        assert_eq!(number(" 10 ").unwrap(), 10.0);
        assert!(number("pie").is_err());
        assert!(number("1/0").is_err());
        assert!(number("").is_err());
    }

    #[test]
    fn lists_and_ranges() {
        assert_eq!(list("0,sqrt2,10").unwrap(), vec![0.0, SQRT_2, 10.0]);
        let r = range("0.2:2.0:7").unwrap();
        assert_eq!(r.len(), 7);
        assert!((r[3] - 1.1).abs() < 1e-12 && (r[6] - 2.0).abs() < 1e-12);
        assert_eq!(range("-3:3:1").unwrap(), vec![-3.0]);
        assert!(range("1:2").is_err());
        assert!(range("1:2:0").is_err());
        assert_eq!(window("4700:9e3").unwrap(), (4700.0, 9000.0));
    }
}
