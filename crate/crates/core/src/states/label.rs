//! State label grammar.
//!
//! ```text
//! label     := name [":" args]
//! args      := key "=" value ("," key "=" value)*      simple states
//!            | "[" item (";" item)* "]"                 composite states
//! value     := real expression (numbers, pi, sqrt(..), + - * / and parentheses)
//! ```
//!
//! Composite forms: `product:[A; B]`, `superpose:[c1*A; c2*B; ..]` where a
//! coefficient is a real expression or `(re,im)`, and
//! `corrupt:[delta=..,sigma=..,at=(x,..); A]`.

use super::{catalog, AnalyticState};
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::collections::BTreeMap;

fn err(label: &str, reason: impl Into<String>) -> Error {
    Error::Label {
        label: label.to_string(),
        reason: reason.into(),
    }
}

/// Splits on `sep` outside brackets and parentheses.
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut depth = 0i32;
    let mut start = 0;
    let mut out = Vec::new();
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + ch.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn bracketed<'a>(label: &str, args: &'a str) -> Result<&'a str> {
    let args = args.trim();
    args.strip_prefix('[')
        .and_then(|a| a.strip_suffix(']'))
        .ok_or_else(|| err(label, "expected arguments in [ ... ]"))
}

fn key_values<'a>(label: &str, args: &'a str) -> Result<BTreeMap<&'a str, &'a str>> {
    let mut map = BTreeMap::new();
    if args.trim().is_empty() {
        return Ok(map);
    }
    for part in split_top(args, ',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| err(label, format!("expected key=value, found `{}`", part.trim())))?;
        if map.insert(k.trim(), v.trim()).is_some() {
            return Err(err(label, format!("duplicate key `{}`", k.trim())));
        }
    }
    Ok(map)
}

struct Args<'a> {
    label: &'a str,
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Args<'a> {
    fn real(&mut self, key: &str) -> Result<Option<f64>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(v) => parse_real(v)
                .map(Some)
                .map_err(|e| err(self.label, format!("`{key}`: {e}"))),
        }
    }

    fn required(&mut self, key: &str) -> Result<f64> {
        self.real(key)?
            .ok_or_else(|| err(self.label, format!("missing `{key}`")))
    }

    fn integer(&mut self, key: &str) -> Result<Option<i64>> {
        match self.real(key)? {
            None => Ok(None),
            Some(v) if v.fract() == 0.0 && v.abs() < 1e15 => Ok(Some(v as i64)),
            Some(v) => Err(err(self.label, format!("`{key}` = {v} is not an integer"))),
        }
    }

    fn unsigned(&mut self, key: &str) -> Result<Option<u32>> {
        match self.integer(key)? {
            None => Ok(None),
            Some(v) if (0..=u32::MAX as i64).contains(&v) => Ok(Some(v as u32)),
            Some(v) => Err(err(self.label, format!("`{key}` = {v} must be non-negative"))),
        }
    }

    fn flag(&mut self, key: &str) -> Result<Option<bool>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some("true") | Some("1") => Ok(Some(true)),
            Some("false") | Some("0") => Ok(Some(false)),
            Some(v) => Err(err(self.label, format!("`{key}` = `{v}` is not a boolean"))),
        }
    }

    fn point(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(v) => {
                let inner = v
                    .strip_prefix('(')
                    .and_then(|s| s.strip_suffix(')'))
                    .unwrap_or(v);
                split_top(inner, ',')
                    .into_iter()
                    .map(|c| parse_real(c).map_err(|e| err(self.label, format!("`{key}`: {e}"))))
                    .collect::<Result<Vec<_>>>()
                    .map(Some)
            }
        }
    }

    fn finish(self) -> Result<()> {
        match self.map.keys().next() {
            Some(k) => Err(err(self.label, format!("unknown parameter `{k}`"))),
            None => Ok(()),
        }
    }
}

/// Parses a state label into an [`AnalyticState`].
pub(crate) fn parse_state(label: &str) -> Result<AnalyticState> {
    let label = label.trim();
    let (name, args) = match label.split_once(':') {
        Some((n, a)) => (n.trim(), a.trim()),
        None => (label, ""),
    };
    let state = match name {
        "product" => {
            let items = split_top(bracketed(label, args)?, ';');
            if items.len() != 2 {
                return Err(err(label, "product takes exactly two states"));
            }
            catalog::product(parse_state(items[0])?, parse_state(items[1])?)?
        }
        "superpose" => {
            let mut states = Vec::new();
            let mut coeffs = Vec::new();
            for item in split_top(bracketed(label, args)?, ';') {
                let (c, s) = parse_term(item.trim())?;
                coeffs.push(c);
                states.push(s);
            }
            catalog::superpose(states, coeffs)?
        }
        "corrupt" => {
            let items = split_top(bracketed(label, args)?, ';');
            if items.len() != 2 {
                return Err(err(label, "corrupt takes parameters and one state"));
            }
            let inner = parse_state(items[1])?;
            let mut a = Args {
                label,
                map: key_values(label, items[0])?,
            };
            let delta = a.real("delta")?.unwrap_or(1e-3);
            let sigma = a.real("sigma")?.unwrap_or(0.5);
            let center = a.point("at")?.unwrap_or_else(|| vec![0.0; inner.config_dim()]);
            a.finish()?;
            catalog::corrupt(inner, delta, sigma, center)?
        }
        _ => {
            let mut a = Args {
                label,
                map: key_values(label, args)?,
            };
            let s = simple(name, &mut a)?;
            a.finish()?;
            s
        }
    };
    Ok(state.relabel(label))
}

fn simple(name: &str, a: &mut Args) -> Result<AnalyticState> {
    match name {
        "hydrogen_1s" => catalog::catalog_hydrogen_ns(1),
        "hydrogen_2s" => catalog::catalog_hydrogen_ns(2),
        "hydrogen_3s" => catalog::catalog_hydrogen_ns(3),
        "hydrogen_ns" => {
            let n = a.unsigned("n")?.ok_or_else(|| err(a.label, "missing `n`"))?;
            catalog::catalog_hydrogen_ns(n)
        }
        "hydrogen_2p" => {
            let m = a.integer("m")?.unwrap_or(0);
            catalog::hydrogen_2p(m.clamp(i32::MIN as i64, i32::MAX as i64) as i32)
        }
        "box" => {
            let k = a.unsigned("k")?.unwrap_or(1);
            let l = a.real("L")?.unwrap_or(std::f64::consts::PI);
            catalog::catalog_box_1d(k, l)
        }
        "harmonic" => {
            let n = a.unsigned("n")?.unwrap_or(0);
            let omega = a.real("omega")?.unwrap_or(1.0);
            catalog::harmonic(n, omega)
        }
        "ring" => {
            let j = a.integer("j")?.unwrap_or(1);
            let l = a.real("L")?.unwrap_or(2.0 * std::f64::consts::PI);
            catalog::ring(j, l)
        }
        "plane_gaussian" => {
            let k = a.required("k")?;
            let sigma = a.real("sigma")?.unwrap_or(1.0);
            let x0 = a.real("x0")?.unwrap_or(0.0);
            catalog::plane_gaussian(k, sigma, x0)
        }
        "packet" => {
            let k = a.real("k")?.unwrap_or(0.0);
            let sigma = a.real("sigma")?.unwrap_or(1.0);
            let x0 = a.real("x0")?.unwrap_or(0.0);
            catalog::gaussian_packet(k, sigma, x0)
        }
        "smooth" => {
            let seed = a.integer("seed")?.unwrap_or(0);
            let dim = a.unsigned("dim")?.unwrap_or(3);
            let complex = a.flag("complex")?.unwrap_or(true);
            catalog::smooth_random(seed as u64, dim as usize, complex)
        }
        other => Err(Error::UnsupportedState(format!("unknown state `{other}`"))),
    }
}

/// `coefficient*label`; the split point is the first `*` after which a
/// valid label follows.
fn parse_term(item: &str) -> Result<(Complex64, AnalyticState)> {
    let mut last_err = err(item, "expected coefficient*state");
    let mut depth = 0i32;
    for (i, ch) in item.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            '*' if depth == 0 => {
                let (c, s) = (&item[..i], &item[i + 1..]);
                let starts_label = s.trim_start().starts_with(|c: char| c.is_ascii_alphabetic());
                if !starts_label || s.trim_start().starts_with("pi") || s.trim_start().starts_with("sqrt") {
                    continue;
                }
                match (parse_coeff(c), parse_state(s)) {
                    (Ok(c), Ok(s)) => return Ok((c, s)),
                    (Err(e), _) | (_, Err(e)) => last_err = e,
                }
            }
            _ => {}
        }
    }
    Err(last_err)
}

fn parse_coeff(s: &str) -> Result<Complex64> {
    let s = s.trim();
    if let Some(inner) = s.strip_prefix('(').and_then(|x| x.strip_suffix(')')) {
        let parts = split_top(inner, ',');
        if parts.len() == 2 {
            let re = parse_real(parts[0]).map_err(|e| err(s, e))?;
            let im = parse_real(parts[1]).map_err(|e| err(s, e))?;
            return Ok(Complex64::new(re, im));
        }
    }
    parse_real(s).map(|v| Complex64::new(v, 0.0)).map_err(|e| err(s, e))
}

/// Evaluates a real expression: numbers, `pi`, `sqrt(..)`, `+ - * /`, parentheses.
pub fn parse_real(text: &str) -> std::result::Result<f64, String> {
    let mut p = Expr {
        s: text.as_bytes(),
        pos: 0,
    };
    let v = p.sum()?;
    p.skip_ws();
    if p.pos != p.s.len() {
        return Err(format!("unexpected `{}` in `{}`", &text[p.pos..], text.trim()));
    }
    if !v.is_finite() {
        return Err(format!("`{}` is not finite", text.trim()));
    }
    Ok(v)
}

struct Expr<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Expr<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> std::result::Result<f64, String> {
        let mut v = self.product()?;
        loop {
            if self.eat(b'+') {
                v += self.product()?;
            } else if self.eat(b'-') {
                v -= self.product()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn product(&mut self) -> std::result::Result<f64, String> {
        let mut v = self.unary()?;
        loop {
            if self.eat(b'*') {
                v *= self.unary()?;
            } else if self.eat(b'/') {
                v /= self.unary()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> std::result::Result<f64, String> {
        if self.eat(b'-') {
            return Ok(-self.unary()?);
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.atom()
    }

    fn atom(&mut self) -> std::result::Result<f64, String> {
        if self.eat(b'(') {
            let v = self.sum()?;
            if !self.eat(b')') {
                return Err("missing `)`".into());
            }
            return Ok(v);
        }
        let start = self.pos;
        let rest = &self.s[start..];
        if rest.starts_with(b"pi") {
            self.pos += 2;
            return Ok(std::f64::consts::PI);
        }
        if rest.starts_with(b"sqrt") {
            self.pos += 4;
            if !self.eat(b'(') {
                return Err("expected `(` after sqrt".into());
            }
            let v = self.sum()?;
            if !self.eat(b')') {
                return Err("missing `)`".into());
            }
            return Ok(v.sqrt());
        }
        let mut end = start;
        while end < self.s.len() {
            let c = self.s[end];
            let exp_sign = (c == b'-' || c == b'+') && end > start && matches!(self.s[end - 1], b'e' | b'E');
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                end += 1;
            } else {
                break;
            }
        }
        let tok = std::str::from_utf8(&self.s[start..end]).unwrap_or("");
        let v = tok
            .parse::<f64>()
            .map_err(|_| format!("expected a number at `{}`", String::from_utf8_lossy(rest)))?;
        self.pos = end;
        Ok(v)
    }
}
