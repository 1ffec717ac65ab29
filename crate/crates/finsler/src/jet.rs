//! Truncated multivariate Taylor polynomials ("jets").
//!
//! A jet of order N at a point p stores the Taylor coefficients
//! `c_α = ∂^α f(p) / α!` for all multi-indices `|α| ≤ N`. Multiplication
//! and composition are exact on the retained coefficients, and `∂_v` drops
//! the order by one. Monomials are listed in the same order that
//! [`exprlang::multi_indices`] uses, so partial tables map onto jets
//! one-to-one.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use exprlang::multi_indices;

const NONE: u32 = u32::MAX;

pub struct JetSpace {
    nvars: usize,
    order: usize,
    monos: Vec<Vec<u8>>,
    /// counts[d] = number of monomials of degree ≤ d.
    counts: Vec<usize>,
    factorial: Vec<f64>,
    /// up[v][i] = index of monomial i + e_v (NONE when past the order).
    up: Vec<Vec<u32>>,
    /// Products (i, j, k): mono_i · mono_j = mono_k, sorted by degree of k.
    triplets: Vec<(u32, u32, u32)>,
    /// tcounts[d] = number of triplets whose result has degree ≤ d.
    tcounts: Vec<usize>,
}

impl fmt::Debug for JetSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "JetSpace(vars={}, order={})", self.nvars, self.order)
    }
}

impl JetSpace {
    pub fn new(nvars: usize, order: usize) -> Arc<JetSpace> {
        let monos = multi_indices(nvars, order);
        let deg = |m: &[u8]| m.iter().map(|&c| c as usize).sum::<usize>();
        let counts: Vec<usize> = (0..=order).map(|d| monos.iter().filter(|m| deg(m) <= d).count()).collect();
        let index: std::collections::HashMap<&[u8], u32> =
            monos.iter().enumerate().map(|(i, m)| (m.as_slice(), i as u32)).collect();
        let factorial = monos
            .iter()
            .map(|m| m.iter().map(|&c| (1..=c as u64).product::<u64>() as f64).product())
            .collect();
        let up = (0..nvars)
            .map(|v| {
                monos
                    .iter()
                    .map(|m| {
                        let mut s = m.clone();
                        s[v] += 1;
                        index.get(s.as_slice()).copied().unwrap_or(NONE)
                    })
                    .collect()
            })
            .collect();
        let mut triplets = Vec::new();
        for (i, a) in monos.iter().enumerate() {
            for (j, b) in monos.iter().enumerate() {
                if deg(a) + deg(b) > order {
                    continue;
                }
                let s: Vec<u8> = a.iter().zip(b).map(|(p, q)| p + q).collect();
                triplets.push((i as u32, j as u32, index[s.as_slice()]));
            }
        }
        triplets.sort_by_key(|&(_, _, k)| (deg(&monos[k as usize]), k));
        let tcounts = (0..=order)
            .map(|d| triplets.iter().filter(|t| deg(&monos[t.2 as usize]) <= d).count())
            .collect();
        Arc::new(JetSpace { nvars, order, monos, counts, factorial, up, triplets, tcounts })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }
    pub fn order(&self) -> usize {
        self.order
    }
    pub fn count(&self, order: usize) -> usize {
        self.counts[order]
    }
    pub fn monomials(&self) -> &[Vec<u8>] {
        &self.monos
    }
    pub fn factorial(&self, i: usize) -> f64 {
        self.factorial[i]
    }
}

/// Truncated Taylor polynomial in the variables of a [`JetSpace`].
#[derive(Clone)]
pub struct Jet {
    sp: Arc<JetSpace>,
    order: usize,
    c: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet(order={}, value={})", self.order, self.c[0])
    }
}

impl Jet {
    pub fn constant(sp: &Arc<JetSpace>, v: f64) -> Jet {
        let mut c = vec![0.0; sp.count(sp.order)];
        c[0] = v;
        Jet { sp: sp.clone(), order: sp.order, c }
    }

    /// The coordinate function `v` through the point with value `value`.
    pub fn variable(sp: &Arc<JetSpace>, v: usize, value: f64) -> Jet {
        let mut j = Jet::constant(sp, value);
        if sp.order >= 1 {
            j.c[sp.up[v][0] as usize] = 1.0;
        }
        j
    }

    /// Build from partial derivatives listed in monomial order.
    pub fn from_partials(sp: &Arc<JetSpace>, order: usize, partials: &[f64]) -> Jet {
        let len = sp.count(order);
        let c = (0..len).map(|i| partials[i] / sp.factorial[i]).collect();
        Jet { sp: sp.clone(), order, c }
    }

    pub fn zero_like(&self) -> Jet {
        Jet { sp: self.sp.clone(), order: self.order, c: vec![0.0; self.c.len()] }
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.sp
    }
    pub fn order(&self) -> usize {
        self.order
    }
    pub fn value(&self) -> f64 {
        self.c[0]
    }
    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    /// `∂^α f(p)` for the monomial at position `i`.
    pub fn partial(&self, i: usize) -> f64 {
        self.c[i] * self.sp.factorial[i]
    }

    /// `∂f/∂v` at the point.
    pub fn d1(&self, v: usize) -> f64 {
        let k = self.sp.up[v][0];
        if k == NONE || k as usize >= self.c.len() {
            0.0
        } else {
            self.c[k as usize]
        }
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order {
            return self.clone();
        }
        Jet { sp: self.sp.clone(), order, c: self.c[..self.sp.count(order)].to_vec() }
    }

    pub fn scale(&self, k: f64) -> Jet {
        Jet { sp: self.sp.clone(), order: self.order, c: self.c.iter().map(|v| v * k).collect() }
    }

    pub fn add_const(&self, k: f64) -> Jet {
        let mut r = self.clone();
        r.c[0] += k;
        r
    }

    /// `∂f/∂(variable v)`; the order drops by one.
    pub fn deriv(&self, v: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let order = self.order - 1;
        let up = &self.sp.up[v];
        let c = (0..self.sp.count(order))
            .map(|i| {
                let k = up[i] as usize;
                self.c[k] * (self.sp.monos[i][v] as f64 + 1.0)
            })
            .collect();
        Jet { sp: self.sp.clone(), order, c }
    }

    /// `self += k·other` (in place, truncating to the lower order).
    pub fn axpy(&mut self, k: f64, other: &Jet) {
        if other.order < self.order {
            self.order = other.order;
            self.c.truncate(other.c.len());
        }
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            *a += k * b;
        }
    }

    /// `f(self)` from the derivatives `f^(k)(self.value())`, k = 0..=order.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        let mut u = self.clone();
        u.c[0] = 0.0;
        let mut out = Jet::constant(&self.sp, derivs[0]).truncate(self.order);
        let mut pow = u.clone();
        let mut kfact = 1.0;
        for (k, d) in derivs.iter().enumerate().take(self.order + 1).skip(1) {
            kfact *= k as f64;
            out.axpy(d / kfact, &pow);
            if k < self.order {
                pow = &pow * &u;
            }
        }
        out
    }

    /// Real power `self^p` (requires a positive value unless p is an integer).
    pub fn powf(&self, p: f64) -> Jet {
        let a = self.value();
        let mut derivs = Vec::with_capacity(self.order + 1);
        let mut coef = 1.0;
        for k in 0..=self.order {
            derivs.push(coef * a.powf(p - k as f64));
            coef *= p - k as f64;
        }
        self.compose(&derivs)
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn recip(&self) -> Jet {
        self.powf(-1.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        let (lo, hi) = if self.order <= rhs.order { (self, rhs) } else { (rhs, self) };
        let mut r = lo.clone();
        for (a, b) in r.c.iter_mut().zip(&hi.c) {
            *a += b;
        }
        r
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let len = self.sp.count(order);
        let c = self.c[..len].iter().zip(&rhs.c[..len]).map(|(a, b)| a - b).collect();
        Jet { sp: self.sp.clone(), order, c }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut c = vec![0.0; self.sp.count(order)];
        let (a, b) = (&self.c, &rhs.c);
        for &(i, j, k) in &self.sp.triplets[..self.sp.tcounts[order]] {
            c[k as usize] += a[i as usize] * b[j as usize];
        }
        Jet { sp: self.sp.clone(), order, c }
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet { (&self).$m(&rhs) }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet { (&self).$m(rhs) }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet { self.$m(&rhs) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_derivative() {
        let sp = JetSpace::new(2, 4);
        let x = Jet::variable(&sp, 0, 0.5);
        let y = Jet::variable(&sp, 1, -1.0);
        let f = &(&x * &x) * &y; // x²y
        assert_eq!(f.value(), -0.25);
        let fx = f.deriv(0);
        assert!((fx.value() - (-1.0)).abs() < 1e-15);
        let fxy = fx.deriv(1);
        assert!((fxy.value() - 1.0).abs() < 1e-15);
        assert_eq!(fxy.deriv(0).value(), 2.0);
    }

    #[test]
    fn sqrt_and_recip() {
        let sp = JetSpace::new(1, 5);
        let x = Jet::variable(&sp, 0, 2.0);
        let s = x.sqrt();
        let back = &s * &s;
        for (i, v) in back.coeffs().iter().enumerate() {
            let want = if i == 0 { 2.0 } else if i == 1 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-14, "{i}: {v}");
        }
        let r = &x.recip() * &x;
        assert!((r.value() - 1.0).abs() < 1e-15);
        assert!(r.coeffs()[1..].iter().all(|v| v.abs() < 1e-15));
    }
}
