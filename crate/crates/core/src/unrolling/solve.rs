//! Maximal probability of reaching ⊤ in an unrolled model.

use num_traits::{One, Zero};
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::deadline::Deadline;
use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::rational::{to_f64, Rational};

use super::{Row, UnrolledMdp, BOTTOM, TOP};

pub const DEFAULT_EPSILON: f64 = 1e-6;
const MAX_SWEEPS: usize = 2_000_000;

#[derive(Clone, Debug, PartialEq)]
pub enum ReachValue {
    Exact(Rational),
    Bounds { lower: f64, upper: f64 },
}

#[derive(Clone, Debug)]
pub struct PolicySolution {
    pub value: Rational,
    /// Chosen choice index per unrolled state.
    pub policy: Vec<usize>,
    pub iterations: usize,
}

pub fn max_reach(u: &UnrolledMdp, exact: bool, epsilon: f64, deadline: &Deadline) -> Result<ReachValue> {
    if exact {
        Ok(ReachValue::Exact(exact_policy_iteration(u, None, deadline)?.value))
    } else {
        let (lower, upper) = interval_value_iteration(u, epsilon, deadline)?;
        Ok(ReachValue::Bounds { lower, upper })
    }
}

/// Values of the form `a + b·X`, where `X` is the (unknown) value of the
/// initial distribution. Every cycle passes through a restart, so a single
/// backward pass over the layers determines `a` and `b`.
fn evaluate(u: &UnrolledMdp, order: &[usize], policy: &[usize], deadline: &Deadline) -> Result<(Vec<Rational>, Vec<Rational>, Rational)> {
    let n = u.num_states();
    let mut a = vec![Rational::zero(); n];
    let mut b = vec![Rational::zero(); n];
    a[TOP] = Rational::one();
    for (k, &q) in order.iter().enumerate() {
        if k % 512 == 0 {
            deadline.check()?;
        }
        match u.row(q) {
            Row::Absorbing => {}
            Row::Restart => b[q] = Rational::one(),
            Row::Lottery(p) => a[q] = p.clone(),
            Row::Forward(cs) => {
                let d = &cs[policy[q]].1;
                a[q] = d.dot(&a);
                b[q] = d.dot(&b);
            }
        }
    }
    let big_a = u.init().dot(&a);
    let big_b = u.init().dot(&b);
    // With B = 1 every path restarts forever and ⊤ is never reached.
    let x = if big_b.is_one() { Rational::zero() } else { big_a / (Rational::one() - big_b) };
    Ok((a, b, x))
}

/// Policy iteration with exact values. A state switches only to a strictly
/// better choice; among equally good choices the smallest index wins.
pub fn exact_policy_iteration(u: &UnrolledMdp, warm: Option<&[usize]>, deadline: &Deadline) -> Result<PolicySolution> {
    let n = u.num_states();
    let order = u.backward_order();
    let mut policy = vec![0usize; n];
    if let Some(w) = warm {
        for q in 0..n.min(w.len()) {
            if let Row::Forward(cs) = u.row(q) {
                if w[q] < cs.len() {
                    policy[q] = w[q];
                }
            }
        }
    }
    let mut iterations = 0;
    loop {
        iterations += 1;
        let (a, b, x) = evaluate(u, &order, &policy, deadline)?;
        let values: Vec<Rational> = a.iter().zip(&b).map(|(a, b)| a + b * &x).collect();
        let mut changed = false;
        for &q in &order {
            if let Row::Forward(cs) = u.row(q) {
                if cs.len() < 2 {
                    continue;
                }
                let current = cs[policy[q]].1.dot(&values);
                let mut best = (policy[q], current.clone());
                for (i, (_, d)) in cs.iter().enumerate() {
                    let v = d.dot(&values);
                    if v > best.1 {
                        best = (i, v);
                    }
                }
                if best.1 > current {
                    policy[q] = best.0;
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok(PolicySolution { value: x, policy, iterations });
        }
    }
}

/// Bounds on a sum of nonnegative products computed in floating point.
fn widen(sum: f64, terms: usize) -> (f64, f64) {
    let slack = sum * (terms as f64 + 2.0) * f64::EPSILON;
    ((sum - slack).next_down().max(0.0), (sum + slack).next_up().min(1.0))
}

fn prob_bounds(p: &Rational) -> (f64, f64) {
    let f = to_f64(p);
    (f.next_down().max(0.0), f.next_up().min(1.0))
}

enum Node {
    Fixed(f64),
    Free { layer: usize },
}

/// Quotient of the model by its maximal end components, with states that
/// cannot reach ⊤ merged into a zero node. Node 0 is ⊤, node 1 is zero.
struct Quotient {
    nodes: Vec<Node>,
    /// Per node, its choices as (target node, lower prob, upper prob).
    choices: Vec<Vec<Vec<(usize, f64, f64)>>>,
    node_of: Vec<usize>,
}

fn reaches_top(u: &UnrolledMdp, succ: &[Vec<Dist>]) -> Vec<bool> {
    let n = u.num_states();
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (q, cs) in succ.iter().enumerate() {
        for d in cs {
            for t in d.support() {
                pred[t].push(q);
            }
        }
    }
    let mut seen = vec![false; n];
    seen[TOP] = true;
    let mut stack = vec![TOP];
    while let Some(t) = stack.pop() {
        for &q in &pred[t] {
            if !seen[q] {
                seen[q] = true;
                stack.push(q);
            }
        }
    }
    seen
}

/// Maximal end components among the `candidate` states, by repeated SCC
/// refinement. Returns a component id per state (`None` outside every MEC)
/// and, per state, which of its choices stay inside its component.
fn end_components(succ: &[Vec<Dist>], candidate: &[bool]) -> (Vec<Option<usize>>, Vec<Vec<bool>>) {
    let n = succ.len();
    let mut inside = candidate.to_vec();
    let mut allowed: Vec<Vec<bool>> = succ
        .iter()
        .enumerate()
        .map(|(q, cs)| cs.iter().map(|d| inside[q] && d.support().all(|t| inside[t])).collect())
        .collect();
    loop {
        for q in 0..n {
            for (i, d) in succ[q].iter().enumerate() {
                if allowed[q][i] && d.support().any(|t| !inside[t]) {
                    allowed[q][i] = false;
                }
            }
        }
        let mut graph: DiGraph<usize, ()> = DiGraph::new();
        let mut index = vec![NodeIndex::end(); n];
        for q in 0..n {
            if inside[q] {
                index[q] = graph.add_node(q);
            }
        }
        for q in 0..n {
            if !inside[q] {
                continue;
            }
            for (i, d) in succ[q].iter().enumerate() {
                if allowed[q][i] {
                    for t in d.support() {
                        graph.add_edge(index[q], index[t], ());
                    }
                }
            }
        }
        let mut scc_of = vec![usize::MAX; n];
        for (k, comp) in tarjan_scc(&graph).into_iter().enumerate() {
            for v in comp {
                scc_of[graph[v]] = k;
            }
        }
        let mut changed = false;
        for q in 0..n {
            if !inside[q] {
                continue;
            }
            for (i, d) in succ[q].iter().enumerate() {
                if allowed[q][i] && d.support().any(|t| !inside[t] || scc_of[t] != scc_of[q]) {
                    allowed[q][i] = false;
                    changed = true;
                }
            }
            if !allowed[q].iter().any(|&x| x) {
                inside[q] = false;
                changed = true;
            }
        }
        if !changed {
            let comp = (0..n).map(|q| inside[q].then_some(scc_of[q])).collect();
            return (comp, allowed);
        }
    }
}

fn quotient(u: &UnrolledMdp) -> Quotient {
    let n = u.num_states();
    let succ: Vec<Vec<Dist>> = (0..n).map(|q| u.choices(q)).collect();
    let reach = reaches_top(u, &succ);
    let layer = |q: usize| u.origin(q).map_or(0, |(_, l)| l);
    let candidate: Vec<bool> = (0..n).map(|q| q >= 2 && reach[q]).collect();
    let (comp, allowed) = end_components(&succ, &candidate);

    let mut nodes = vec![Node::Fixed(1.0), Node::Fixed(0.0)];
    let mut node_of = vec![1usize; n];
    node_of[TOP] = 0;
    node_of[BOTTOM] = 1;
    let mut comp_node = std::collections::HashMap::new();
    for q in 2..n {
        if !candidate[q] {
            continue;
        }
        node_of[q] = match comp[q] {
            Some(c) => *comp_node.entry(c).or_insert_with(|| {
                nodes.push(Node::Free { layer: 0 });
                nodes.len() - 1
            }),
            None => {
                nodes.push(Node::Free { layer: 0 });
                nodes.len() - 1
            }
        };
        if let Node::Free { layer: l } = &mut nodes[node_of[q]] {
            *l = (*l).max(layer(q));
        }
    }
    let mut choices: Vec<Vec<Vec<(usize, f64, f64)>>> = vec![Vec::new(); nodes.len()];
    for q in 2..n {
        if !candidate[q] {
            continue;
        }
        for (i, d) in succ[q].iter().enumerate() {
            if comp[q].is_some() && allowed[q][i] {
                continue;
            }
            let row = d
                .iter()
                .map(|(t, p)| {
                    let (lo, hi) = prob_bounds(p);
                    (node_of[t], lo, hi)
                })
                .collect();
            choices[node_of[q]].push(row);
        }
    }
    Quotient { nodes, choices, node_of }
}

/// Certified lower and upper bounds on the maximal reachability probability,
/// with gap at most `epsilon`. Interval iteration on the end-component
/// quotient with outward rounding.
pub fn interval_value_iteration(u: &UnrolledMdp, epsilon: f64, deadline: &Deadline) -> Result<(f64, f64)> {
    let q = quotient(u);
    let k = q.nodes.len();
    let mut lo = vec![0.0f64; k];
    let mut hi = vec![1.0f64; k];
    for (i, node) in q.nodes.iter().enumerate() {
        if let Node::Fixed(v) = node {
            lo[i] = *v;
            hi[i] = *v;
        }
    }
    let mut order: Vec<usize> = (0..k).filter(|&i| matches!(q.nodes[i], Node::Free { .. })).collect();
    order.sort_by_key(|&i| match q.nodes[i] {
        Node::Free { layer } => std::cmp::Reverse(layer),
        Node::Fixed(_) => std::cmp::Reverse(usize::MAX),
    });
    let init: Vec<(usize, f64, f64)> = u
        .init()
        .iter()
        .map(|(s, p)| {
            let (l, h) = prob_bounds(p);
            (q.node_of[s], l, h)
        })
        .collect();
    let bound = |lo: &[f64], hi: &[f64], row: &[(usize, f64, f64)]| {
        let l: f64 = row.iter().map(|&(t, pl, _)| pl * lo[t]).sum();
        let h: f64 = row.iter().map(|&(t, _, ph)| ph * hi[t]).sum();
        (widen(l, row.len()).0, widen(h, row.len()).1)
    };
    let mut gap = 1.0;
    for sweep in 0..MAX_SWEEPS {
        if sweep % 64 == 0 {
            deadline.check()?;
        }
        for &i in &order {
            let mut best_lo = 0.0f64;
            let mut best_hi = 0.0f64;
            for row in &q.choices[i] {
                let (l, h) = bound(&lo, &hi, row);
                best_lo = best_lo.max(l);
                best_hi = best_hi.max(h);
            }
            lo[i] = lo[i].max(best_lo);
            hi[i] = hi[i].min(best_hi);
        }
        let (l, h) = bound(&lo, &hi, &init);
        gap = h - l;
        if gap <= epsilon {
            return Ok((l, h));
        }
    }
    Err(Error::NumericPrecision { gap })
}
