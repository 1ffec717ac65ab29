use std::collections::HashMap;

use thiserror::Error;

use crate::ast::{Expr, Var};
use crate::eval::EvalError;
use crate::graph::{Graph, NodeId};

pub const DEFAULT_NODE_CAP: usize = 5_000_000;

/// Differentiation counts per table variable.
pub type MultiIndex = Vec<u8>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TableError {
    #[error("partial table exceeded the node cap of {cap} while building order {order}")]
    NodeCap { cap: usize, order: usize },
}

/// Multi-indices of total order ≤ `max_order`, grouped by order; within an
/// order, lexicographically descending (`[1,0]` before `[0,1]`).
pub fn multi_indices(nvars: usize, max_order: usize) -> Vec<MultiIndex> {
    fn fill(rest: usize, pos: usize, cur: &mut MultiIndex, out: &mut Vec<MultiIndex>) {
        if pos + 1 == cur.len() {
            cur[pos] = rest as u8;
            out.push(cur.clone());
            return;
        }
        for k in (0..=rest).rev() {
            cur[pos] = k as u8;
            fill(rest - k, pos + 1, cur, out);
        }
    }
    let mut out = Vec::new();
    if nvars == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut cur = vec![0u8; nvars];
    for d in 0..=max_order {
        fill(d, 0, &mut cur, &mut out);
    }
    out
}

/// Every canonical mixed partial, up to `max_order`, of one or more base
/// expressions, all sharing one DAG.
#[derive(Clone)]
pub struct PartialTable {
    graph: Graph,
    vars: Vec<Var>,
    max_order: usize,
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
    /// Number of indices of total order ≤ k.
    counts: Vec<usize>,
    /// entries[base][index]
    entries: Vec<Vec<NodeId>>,
    /// plans[k]: nodes needed for all entries of order ≤ k.
    plans: Vec<Vec<NodeId>>,
}

impl PartialTable {
    pub fn build(bases: &[Expr], vars: &[Var], max_order: usize, node_cap: usize) -> Result<PartialTable, TableError> {
        let mut graph = Graph::new();
        let indices = multi_indices(vars.len(), max_order);
        let lookup: HashMap<MultiIndex, usize> = indices.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let mut entries = Vec::with_capacity(bases.len());
        for base in bases {
            let root = graph.import(base);
            let mut ids: Vec<NodeId> = Vec::with_capacity(indices.len());
            for m in &indices {
                let Some(last) = m.iter().rposition(|&c| c > 0) else {
                    ids.push(root);
                    continue;
                };
                let mut parent = m.clone();
                parent[last] -= 1;
                let d = graph.diff(ids[lookup[&parent]], vars[last]);
                ids.push(d);
                if graph.len() > node_cap {
                    let order = m.iter().map(|&c| c as usize).sum();
                    return Err(TableError::NodeCap { cap: node_cap, order });
                }
            }
            entries.push(ids);
        }
        let counts: Vec<usize> = (0..=max_order)
            .map(|k| indices.iter().take_while(|m| m.iter().map(|&c| c as usize).sum::<usize>() <= k).count())
            .collect();
        let plans = counts
            .iter()
            .map(|&c| {
                let roots: Vec<NodeId> = entries.iter().flat_map(|e| e[..c].iter().copied()).collect();
                graph.plan(&roots)
            })
            .collect();
        Ok(PartialTable { graph, vars: vars.to_vec(), max_order, indices, lookup, counts, entries, plans })
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn node_count(&self) -> usize {
        self.graph.len()
    }

    /// All multi-indices in table order.
    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    /// Number of entries of total order ≤ `order`.
    pub fn count(&self, order: usize) -> usize {
        self.counts[order.min(self.max_order)]
    }

    pub fn position(&self, m: &[u8]) -> Option<usize> {
        self.lookup.get(m).copied()
    }

    /// The derivative of base `base` for multi-index `m`, as a tree.
    pub fn entry(&self, base: usize, m: &[u8]) -> Option<Expr> {
        let i = self.position(m)?;
        Some(self.graph.export(self.entries[base][i]))
    }

    /// Values of all entries of order ≤ `order`, one vector per base.
    pub fn evaluate(&self, order: usize, x: &[f64], y: &[f64]) -> Result<Vec<Vec<f64>>, EvalError> {
        let order = order.min(self.max_order);
        let mut vals = vec![0.0; self.graph.len()];
        self.graph.eval_plan(&self.plans[order], x, y, &mut vals).map_err(|(id, reason)| {
            let mut subexpr = self.graph.export(id).to_string();
            if subexpr.len() > 200 {
                subexpr.truncate(200);
                subexpr.push_str("...");
            }
            if reason == "non-finite value" {
                EvalError::NonFinite { subexpr, value: f64::NAN }
            } else {
                EvalError::Domain { subexpr, reason: reason.to_string() }
            }
        })?;
        let c = self.counts[order];
        Ok(self.entries.iter().map(|ids| ids[..c].iter().map(|&id| vals[id as usize]).collect()).collect())
    }
}

/// Table of `e` over `x1..xn, y1..yn` (in that order).
pub fn partial_table(e: &Expr, n: usize, max_order: usize) -> Result<PartialTable, TableError> {
    let vars: Vec<Var> = (0..n).map(Var::x).chain((0..n).map(Var::y)).collect();
    PartialTable::build(std::slice::from_ref(e), &vars, max_order, DEFAULT_NODE_CAP)
}
