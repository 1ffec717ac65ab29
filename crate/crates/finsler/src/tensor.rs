//! Dense tensors over an n-dimensional chart.
//!
//! Storage is row-major over the index list. The first `up` indices are
//! contravariant and the rest are covariant. Every tensor in this crate has
//! at most one upper index.

use crate::jet::Jet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Up,
    Down,
}

/// Iterator over all index tuples of a given rank.
pub fn indices(n: usize, rank: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = n.pow(rank as u32);
    (0..total).map(move |mut k| {
        let mut idx = vec![0; rank];
        for slot in (0..rank).rev() {
            idx[slot] = k % n;
            k /= n;
        }
        idx
    })
}

pub fn flat(n: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

/// Tensor whose components are jets.
#[derive(Clone, Debug)]
pub struct JetTensor {
    pub n: usize,
    pub rank: usize,
    pub up: usize,
    pub data: Vec<Jet>,
}

impl JetTensor {
    pub fn from_fn(n: usize, rank: usize, up: usize, mut f: impl FnMut(&[usize]) -> Jet) -> JetTensor {
        let data = indices(n, rank).map(|i| f(&i)).collect();
        JetTensor { n, rank, up, data }
    }

    pub fn at(&self, idx: &[usize]) -> &Jet {
        &self.data[flat(self.n, idx)]
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> JetTensor {
        JetTensor { n: self.n, rank: self.rank, up: self.up, data: self.data.iter().map(f).collect() }
    }

    pub fn zip(&self, other: &JetTensor, f: impl Fn(&Jet, &Jet) -> Jet) -> JetTensor {
        assert_eq!((self.rank, self.up), (other.rank, other.up), "shape mismatch");
        JetTensor {
            n: self.n,
            rank: self.rank,
            up: self.up,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.data.iter().map(Jet::order).min().unwrap_or(0)
    }

    /// Insert a new covariant slot after the upper indices: `out[.., a, ..] = f(a, t[..])`.
    pub fn new_slot(&self, f: impl Fn(usize, &[usize]) -> Jet) -> JetTensor {
        let up = self.up;
        JetTensor::from_fn(self.n, self.rank + 1, up, |idx| {
            let a = idx[up];
            let mut rest = idx[..up].to_vec();
            rest.extend_from_slice(&idx[up + 1..]);
            f(a, &rest)
        })
    }

    /// Vertical derivative with the new slot first among the covariant ones.
    pub fn dy(&self, n_offset: usize) -> JetTensor {
        self.new_slot(|a, rest| self.at(rest).deriv(n_offset + a))
    }

    /// Plain x-derivative, same slot convention.
    pub fn dx(&self) -> JetTensor {
        self.new_slot(|a, rest| self.at(rest).deriv(a))
    }

    /// Contract the upper index with covariant slot `slot`.
    pub fn trace(&self, slot: usize) -> JetTensor {
        assert_eq!(self.up, 1, "trace needs one upper index");
        assert!(slot >= 1 && slot < self.rank);
        JetTensor::from_fn(self.n, self.rank - 2, 0, |idx| {
            let mut full = Vec::with_capacity(self.rank);
            full.push(0);
            full.extend_from_slice(idx);
            full.insert(slot, 0);
            let mut acc: Option<Jet> = None;
            for k in 0..self.n {
                full[0] = k;
                full[slot] = k;
                let t = self.at(&full);
                acc = Some(match acc {
                    None => t.clone(),
                    Some(a) => a + t,
                });
            }
            acc.expect("n ≥ 1")
        })
    }

    /// Component values (order-0 coefficients).
    pub fn values(&self, name: &str) -> ComponentTensor {
        ComponentTensor {
            name: name.to_string(),
            n: self.n,
            roles: (0..self.rank).map(|i| if i < self.up { Role::Up } else { Role::Down }).collect(),
            data: self.data.iter().map(Jet::value).collect(),
        }
    }
}

/// Tensor of plain numbers at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentTensor {
    pub name: String,
    pub n: usize,
    pub roles: Vec<Role>,
    pub data: Vec<f64>,
}

impl ComponentTensor {
    pub fn new(name: &str, n: usize, roles: Vec<Role>, data: Vec<f64>) -> ComponentTensor {
        assert_eq!(data.len(), n.pow(roles.len() as u32));
        ComponentTensor { name: name.to_string(), n, roles, data }
    }

    pub fn rank(&self) -> usize {
        self.roles.len()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[flat(self.n, idx)]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(tr t)_{j…} = t^k_{k j…}`: the upper index against the first covariant one.
    pub fn trace(&self) -> Result<ComponentTensor, crate::Error> {
        if self.roles.len() < 2 || self.roles[0] != Role::Up || self.roles[1..].iter().any(|r| *r != Role::Down) {
            return Err(crate::Error::Signature(format!(
                "trace of `{}` needs one upper index followed by at least one lower index",
                self.name
            )));
        }
        let rank = self.rank() - 2;
        let data = indices(self.n, rank)
            .map(|idx| {
                (0..self.n)
                    .map(|k| {
                        let mut full = vec![k, k];
                        full.extend_from_slice(&idx);
                        self.get(&full)
                    })
                    .sum()
            })
            .collect();
        Ok(ComponentTensor::new(&format!("tr {}", self.name), self.n, vec![Role::Down; rank], data))
    }
}
