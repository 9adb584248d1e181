//! Truncated multivariate Taylor series ("jets") over complex coefficients.
//!
//! A [`Jet`] carries the Taylor coefficients of a function around one point
//! in `nvars` real variables, up to a fixed total degree. Arithmetic and
//! composition with analytic univariate functions propagate every partial
//! derivative exactly (up to rounding), so closed-form states built from
//! jets yield exact derivatives of any order the [`JetSpace`] allows.
//!
//! Coefficients are stored as `f^(α)(a) / α!` in graded order. Each jet
//! tracks the degree up to which its coefficients are trustworthy; taking a
//! derivative lowers it by one.

use num_complex::Complex64;
use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

/// Monomial layout and multiplication tables shared by all jets of one shape.
#[derive(Debug)]
pub struct JetSpace {
    nvars: usize,
    order: usize,
    exps: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    /// number of monomials of degree <= k
    len_upto: Vec<usize>,
    /// (lhs, rhs, out) index triples sorted by degree of `out`
    products: Vec<(u32, u32, u32)>,
    products_upto: Vec<usize>,
    derivs: Vec<Vec<(u32, u32, f64)>>,
    alpha_factorial: Vec<f64>,
}

impl JetSpace {
    pub fn new(nvars: usize, order: usize) -> Self {
        assert!(nvars > 0, "jet space needs at least one variable");
        let mut exps = Vec::new();
        let mut len_upto = Vec::with_capacity(order + 1);
        for deg in 0..=order {
            let mut cur = vec![0u8; nvars];
            push_monomials(&mut exps, &mut cur, 0, deg);
            len_upto.push(exps.len());
        }
        let index: HashMap<Vec<u8>, usize> =
            exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let degree: Vec<usize> = exps
            .iter()
            .map(|e| e.iter().map(|&p| p as usize).sum())
            .collect();

        let mut products = Vec::new();
        for (i, ei) in exps.iter().enumerate() {
            for (j, ej) in exps.iter().enumerate() {
                if degree[i] + degree[j] > order {
                    continue;
                }
                let sum: Vec<u8> = ei.iter().zip(ej).map(|(a, b)| a + b).collect();
                products.push((i as u32, j as u32, index[&sum] as u32));
            }
        }
        products.sort_by_key(|&(_, _, k)| degree[k as usize]);
        let products_upto = (0..=order)
            .map(|k| {
                products
                    .iter()
                    .take_while(|&&(_, _, o)| degree[o as usize] <= k)
                    .count()
            })
            .collect();

        let derivs = (0..nvars)
            .map(|v| {
                exps.iter()
                    .enumerate()
                    .filter(|(_, e)| e[v] > 0)
                    .map(|(src, e)| {
                        let mut lowered = e.clone();
                        lowered[v] -= 1;
                        (src as u32, index[&lowered] as u32, e[v] as f64)
                    })
                    .collect()
            })
            .collect();

        let alpha_factorial = exps
            .iter()
            .map(|e| e.iter().map(|&p| factorial(p as usize)).product())
            .collect();

        Self {
            nvars,
            order,
            exps,
            index,
            len_upto,
            products,
            products_upto,
            derivs,
            alpha_factorial,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    /// Number of monomials of total degree at most `degree`.
    pub fn len_upto(&self, degree: usize) -> usize {
        self.len_upto[degree.min(self.order)]
    }

    pub fn constant(&self, value: impl Into<Complex64>) -> Jet<'_> {
        let mut c = vec![Complex64::new(0.0, 0.0); self.len()];
        c[0] = value.into();
        Jet {
            space: self,
            c,
            valid: self.order,
        }
    }

    /// The jet of the coordinate function `x_var` expanded around `value`.
    pub fn variable(&self, var: usize, value: f64) -> Jet<'_> {
        assert!(var < self.nvars, "variable {var} out of range");
        let mut jet = self.constant(value);
        if self.order >= 1 {
            let mut e = vec![0u8; self.nvars];
            e[var] = 1;
            jet.c[self.index[&e]] = Complex64::new(1.0, 0.0);
        }
        jet
    }

    fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.index.get(exps).copied()
    }
}

fn push_monomials(out: &mut Vec<Vec<u8>>, cur: &mut [u8], var: usize, remaining: usize) {
    if var == cur.len() - 1 {
        cur[var] = remaining as u8;
        out.push(cur.to_vec());
        cur[var] = 0;
        return;
    }
    for p in (0..=remaining).rev() {
        cur[var] = p as u8;
        push_monomials(out, cur, var + 1, remaining - p);
    }
    cur[var] = 0;
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Truncated Taylor expansion of a complex-valued function of real variables.
#[derive(Debug, Clone)]
pub struct Jet<'s> {
    space: &'s JetSpace,
    c: Vec<Complex64>,
    valid: usize,
}

impl<'s> Jet<'s> {
    pub fn space(&self) -> &'s JetSpace {
        self.space
    }

    /// Highest total degree whose coefficients are exact.
    pub fn valid_order(&self) -> usize {
        self.valid
    }

    pub fn value(&self) -> Complex64 {
        self.c[0]
    }

    pub fn re_value(&self) -> f64 {
        self.c[0].re
    }

    /// Partial derivative `∂^α f` at the expansion point.
    pub fn partial(&self, alpha: &[u8]) -> Complex64 {
        let deg: usize = alpha.iter().map(|&p| p as usize).sum();
        assert!(
            deg <= self.valid,
            "derivative of degree {deg} requested from a jet valid to {}",
            self.valid
        );
        match self.space.index_of(alpha) {
            Some(i) => self.c[i] * self.space.alpha_factorial[i],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// First partial derivative with respect to `var`, evaluated at the point.
    pub fn d_value(&self, var: usize) -> Complex64 {
        let mut alpha = vec![0u8; self.space.nvars];
        alpha[var] = 1;
        self.partial(&alpha)
    }

    /// Derivative jet `∂f/∂x_var`, valid to one degree less.
    pub fn d(&self, var: usize) -> Jet<'s> {
        assert!(self.valid >= 1, "cannot differentiate a degree-0 jet");
        let mut c = vec![Complex64::new(0.0, 0.0); self.c.len()];
        for &(src, dst, f) in &self.space.derivs[var] {
            c[dst as usize] += self.c[src as usize] * f;
        }
        Jet {
            space: self.space,
            c,
            valid: self.valid - 1,
        }
    }

    pub fn map_coeffs(&self, f: impl Fn(Complex64) -> Complex64) -> Jet<'s> {
        Jet {
            space: self.space,
            c: self.c.iter().map(|&z| f(z)).collect(),
            valid: self.valid,
        }
    }

    pub fn re(&self) -> Jet<'s> {
        self.map_coeffs(|z| Complex64::new(z.re, 0.0))
    }

    pub fn im(&self) -> Jet<'s> {
        self.map_coeffs(|z| Complex64::new(z.im, 0.0))
    }

    pub fn conj(&self) -> Jet<'s> {
        self.map_coeffs(|z| z.conj())
    }

    pub fn scale(&self, k: impl Into<Complex64>) -> Jet<'s> {
        let k = k.into();
        self.map_coeffs(|z| z * k)
    }

    pub fn add_const(&self, k: impl Into<Complex64>) -> Jet<'s> {
        let mut out = self.clone();
        out.c[0] += k.into();
        out
    }

    /// `|f|²` as a jet (real-valued).
    pub fn norm_sqr(&self) -> Jet<'s> {
        self * &self.conj()
    }

    /// Evaluates `g(f)` from the Taylor coefficients `taylor[k] = g^(k)(f(a)) / k!`.
    pub fn compose(&self, taylor: &[Complex64]) -> Jet<'s> {
        let top = self.valid.min(taylor.len() - 1);
        let mut h = self.clone();
        h.c[0] = Complex64::new(0.0, 0.0);
        let mut out = self.space.constant(taylor[top]);
        out.valid = self.valid;
        for k in (0..top).rev() {
            out = &out * &h;
            out.c[0] += taylor[k];
        }
        out
    }

    fn taylor_len(&self) -> usize {
        self.valid + 1
    }

    pub fn exp(&self) -> Jet<'s> {
        let e = self.value().exp();
        let t: Vec<Complex64> = (0..self.taylor_len())
            .map(|k| e / factorial(k))
            .collect();
        self.compose(&t)
    }

    /// Principal-branch logarithm; derivatives are branch independent.
    pub fn ln(&self) -> Jet<'s> {
        let a = self.value();
        let mut t = vec![a.ln()];
        let inv = a.inv();
        let mut pw = inv;
        for k in 1..self.taylor_len() {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            t.push(pw * (sign / k as f64));
            pw *= inv;
        }
        self.compose(&t)
    }

    /// Principal-branch power `f^p`.
    pub fn powf(&self, p: f64) -> Jet<'s> {
        let a = self.value();
        let inv = a.inv();
        let mut t = Vec::with_capacity(self.taylor_len());
        let mut term = a.powf(p);
        t.push(term);
        for k in 1..self.taylor_len() {
            term = term * inv * ((p - (k - 1) as f64) / k as f64);
            t.push(term);
        }
        self.compose(&t)
    }

    pub fn sqrt(&self) -> Jet<'s> {
        self.powf(0.5)
    }

    pub fn recip(&self) -> Jet<'s> {
        let inv = self.value().inv();
        let mut t = Vec::with_capacity(self.taylor_len());
        let mut term = inv;
        for k in 0..self.taylor_len() {
            if k > 0 {
                term = -term * inv;
            }
            t.push(term);
        }
        self.compose(&t)
    }

    pub fn div(&self, rhs: &Jet<'s>) -> Jet<'s> {
        self * &rhs.recip()
    }

    pub fn powi(&self, n: u32) -> Jet<'s> {
        let mut out = self.space.constant(1.0);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    pub fn sin(&self) -> Jet<'s> {
        let (s, c) = (self.value().sin(), self.value().cos());
        let cycle = [s, c, -s, -c];
        let t: Vec<Complex64> = (0..self.taylor_len())
            .map(|k| cycle[k % 4] / factorial(k))
            .collect();
        self.compose(&t)
    }

    pub fn cos(&self) -> Jet<'s> {
        let (s, c) = (self.value().sin(), self.value().cos());
        let cycle = [c, -s, -c, s];
        let t: Vec<Complex64> = (0..self.taylor_len())
            .map(|k| cycle[k % 4] / factorial(k))
            .collect();
        self.compose(&t)
    }
}

impl<'s> Add<&Jet<'s>> for &Jet<'s> {
    type Output = Jet<'s>;
    fn add(self, rhs: &Jet<'s>) -> Jet<'s> {
        Jet {
            space: self.space,
            c: self.c.iter().zip(&rhs.c).map(|(a, b)| a + b).collect(),
            valid: self.valid.min(rhs.valid),
        }
    }
}

impl<'s> Sub<&Jet<'s>> for &Jet<'s> {
    type Output = Jet<'s>;
    fn sub(self, rhs: &Jet<'s>) -> Jet<'s> {
        Jet {
            space: self.space,
            c: self.c.iter().zip(&rhs.c).map(|(a, b)| a - b).collect(),
            valid: self.valid.min(rhs.valid),
        }
    }
}

impl<'s> Mul<&Jet<'s>> for &Jet<'s> {
    type Output = Jet<'s>;
    fn mul(self, rhs: &Jet<'s>) -> Jet<'s> {
        let valid = self.valid.min(rhs.valid);
        let space = self.space;
        let mut c = vec![Complex64::new(0.0, 0.0); self.c.len()];
        for &(i, j, k) in &space.products[..space.products_upto[valid]] {
            c[k as usize] += self.c[i as usize] * rhs.c[j as usize];
        }
        Jet { space, c, valid }
    }
}

impl<'s> Neg for &Jet<'s> {
    type Output = Jet<'s>;
    fn neg(self) -> Jet<'s> {
        self.map_coeffs(|z| -z)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl<'s> $tr<Jet<'s>> for Jet<'s> {
            type Output = Jet<'s>;
            fn $m(self, rhs: Jet<'s>) -> Jet<'s> {
                (&self).$m(&rhs)
            }
        }
        impl<'s> $tr<&Jet<'s>> for Jet<'s> {
            type Output = Jet<'s>;
            fn $m(self, rhs: &Jet<'s>) -> Jet<'s> {
                (&self).$m(rhs)
            }
        }
        impl<'s> $tr<Jet<'s>> for &Jet<'s> {
            type Output = Jet<'s>;
            fn $m(self, rhs: Jet<'s>) -> Jet<'s> {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl<'s> Neg for Jet<'s> {
    type Output = Jet<'s>;
    fn neg(self) -> Jet<'s> {
        -&self
    }
}

/// Shared, lazily built space for `(nvars, order)`. Spaces are small and
/// few distinct shapes are ever used, so they live for the whole program.
pub fn space(nvars: usize, order: usize) -> &'static JetSpace {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), &'static JetSpace>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    map.entry((nvars, order))
        .or_insert_with(|| Box::leak(Box::new(JetSpace::new(nvars, order))))
}

/// Sum of jets; `None` for an empty iterator.
pub fn sum<'s, I: IntoIterator<Item = Jet<'s>>>(items: I) -> Option<Jet<'s>> {
    items.into_iter().reduce(|a, b| a + b)
}
