use std::collections::{BTreeSet, HashSet};

use num_traits::Zero;

use crate::deadline::Deadline;
use crate::error::Result;
use crate::lp::{feasible_point, solve_guided_with, Feasibility};
use crate::rational::{to_f64, Rational};

use super::Belief;

/// Is `x` a convex combination of `generators`? Only generators whose
/// support lies inside `supp(x)` can take part, and since all beliefs sum
/// to one the weights summing to one is implied by matching `x` on its
/// support.
pub fn in_convex_hull(x: &Belief, generators: &[&Belief], deadline: &Deadline) -> Result<bool> {
    let usable: Vec<&Belief> = generators
        .iter()
        .copied()
        .filter(|g| g.support().all(|s| x.contains(s)))
        .collect();
    if usable.is_empty() {
        return Ok(false);
    }
    if usable.iter().any(|g| *g == x) {
        return Ok(true);
    }
    // A coordinate that no generator reaches rules the point out cheaply.
    for (s, p) in x.iter() {
        if usable.iter().all(|g| g.get_ref(s).is_none_or(|q| q < p)) {
            return Ok(false);
        }
    }
    let rows: Vec<Vec<Rational>> = x
        .support()
        .map(|s| usable.iter().map(|g| g.get_ref(s).cloned().unwrap_or_else(Rational::zero)).collect())
        .collect();
    let rhs: Vec<Rational> = x.iter().map(|(_, p)| p.clone()).collect();
    Ok(feasible_point(&rows, &rhs, deadline)?.is_some())
}

/// Removes every candidate that is a convex combination of the others;
/// survivors keep their original order.
///
/// Output-sensitive: each candidate is tested only against the vertices
/// found so far. When it lies outside their hull, the infeasibility
/// certificate is a direction in which it beats all of them, and the
/// candidate maximizing that direction (lexicographically largest among
/// ties) is a new vertex.
pub fn hull_reduce(candidates: &[Belief], deadline: &Deadline) -> Result<Vec<Belief>> {
    let mut seen = HashSet::new();
    let unique: Vec<&Belief> = candidates.iter().filter(|b| seen.insert(*b)).collect();
    if unique.len() <= 1 {
        return Ok(unique.into_iter().cloned().collect());
    }
    let coords: Vec<usize> = unique.iter().flat_map(|b| b.support()).collect::<BTreeSet<_>>().into_iter().collect();
    let dense: Vec<Vec<Rational>> = unique.iter().map(|b| coords.iter().map(|&s| b.get(s)).collect()).collect();
    let approx: Vec<Vec<f64>> = dense.iter().map(|v| v.iter().map(to_f64).collect()).collect();
    let lex_greater = |i: usize, j: usize| dense[i] > dense[j];

    let mut is_vertex = vec![false; unique.len()];
    // Vertex columns, row-major, exact and approximate.
    let mut rows: Vec<Vec<Rational>> = vec![Vec::new(); coords.len()];
    let mut rows_f: Vec<Vec<f64>> = vec![Vec::new(); coords.len()];
    let add_vertex = |v: usize, is_vertex: &mut Vec<bool>, rows: &mut Vec<Vec<Rational>>, rows_f: &mut Vec<Vec<f64>>| {
        is_vertex[v] = true;
        for k in 0..coords.len() {
            rows[k].push(dense[v][k].clone());
            rows_f[k].push(approx[v][k]);
        }
    };
    let first = (1..unique.len()).fold(0, |best, i| if lex_greater(i, best) { i } else { best });
    add_vertex(first, &mut is_vertex, &mut rows, &mut rows_f);
    for i in 0..unique.len() {
        while !is_vertex[i] {
            deadline.check()?;
            let y = match solve_guided_with(&rows, &dense[i], &rows_f, &approx[i], deadline)? {
                Feasibility::Point(_) => break,
                Feasibility::Infeasible(y) => y,
            };
            // Maximize -y over all candidates: screen in floating point,
            // then decide exactly among the near-maximal ones.
            let yf: Vec<f64> = y.iter().map(to_f64).collect();
            let slack = 1e-9 * (1.0 + yf.iter().map(|v| v.abs()).sum::<f64>());
            let fscore: Vec<f64> = approx.iter().map(|x| -x.iter().zip(&yf).map(|(a, b)| a * b).sum::<f64>()).collect();
            let top = fscore.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let score = |j: usize| -> Rational { -dense[j].iter().zip(&y).map(|(a, b)| a * b).sum::<Rational>() };
            let mut best = i;
            let mut best_score = score(i);
            for j in 0..unique.len() {
                if j == i || fscore[j] < top - slack {
                    continue;
                }
                let v = score(j);
                if v > best_score || (v == best_score && lex_greater(j, best)) {
                    best = j;
                    best_score = v;
                }
            }
            debug_assert!(!is_vertex[best]);
            add_vertex(best, &mut is_vertex, &mut rows, &mut rows_f);
        }
    }
    Ok(unique
        .into_iter()
        .zip(is_vertex)
        .filter(|(_, keep)| *keep)
        .map(|(b, _)| b.clone())
        .collect())
}

/// Reference elimination: every candidate is tested against all others that
/// are still alive, in insertion order.
pub fn hull_reduce_pairwise(candidates: &[Belief], deadline: &Deadline) -> Result<Vec<Belief>> {
    let mut seen = HashSet::new();
    let unique: Vec<&Belief> = candidates.iter().filter(|b| seen.insert(*b)).collect();
    let mut alive = vec![true; unique.len()];
    for i in 0..unique.len() {
        deadline.check()?;
        let others: Vec<&Belief> = unique
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i && alive[j])
            .map(|(_, b)| *b)
            .collect();
        if in_convex_hull(unique[i], &others, deadline)? {
            alive[i] = false;
        }
    }
    Ok(unique
        .into_iter()
        .zip(alive)
        .filter(|(_, keep)| *keep)
        .map(|(b, _)| b.clone())
        .collect())
}
