//! Two robots on a `D x D` grid. The monitored robot moves to a uniformly
//! random neighbouring cell each step; the other robot is the source of
//! nondeterminism. Both move at once, and states where they share a cell
//! are labelled `crash`. Crashes are not absorbing: the risk of interest is
//! reaching one within a horizon.
//!
//! Kind I: the other robot carries a hidden heading and either moves along
//! it (staying put at the border) or turns to a uniformly random heading.
//! Kind V: the other robot has no heading and picks any cardinal move, which
//! succeeds with probability 4/5 and otherwise leaves it in place.
//!
//! Observations are `a<x>_<y>:b<x>_<y>` or `a<x>_<y>:u` when the other robot
//! is out of view. With a view range `v`, it is seen at Chebyshev distance
//! below `v`, seen with probability 1/2 at distance exactly `v`, and unseen
//! beyond. Without a view range it is always seen.

use crate::error::Result;
use crate::mdp::{Mdp, MdpBuilder};
use crate::rational::{frac, int, one, Rational};

pub const CRASH: &str = "crash";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvadeKind {
    I,
    V,
}

const HEADINGS: [(&str, i64, i64); 4] = [("N", 0, 1), ("E", 1, 0), ("S", 0, -1), ("W", -1, 0)];

type Cell = (usize, usize);

fn step(c: Cell, h: usize, d: usize) -> Option<Cell> {
    let (_, dx, dy) = HEADINGS[h];
    let (x, y) = (c.0 as i64 + dx, c.1 as i64 + dy);
    (x >= 0 && y >= 0 && x < d as i64 && y < d as i64).then_some((x as usize, y as usize))
}

fn neighbours(c: Cell, d: usize) -> Vec<Cell> {
    (0..4).filter_map(|h| step(c, h, d)).collect()
}

fn cell(c: Cell) -> String {
    format!("{}_{}", c.0, c.1)
}

fn observation(own: Cell, other: Option<Cell>) -> String {
    match other {
        Some(o) => format!("a{}:b{}", cell(own), cell(o)),
        None => format!("a{}:u", cell(own)),
    }
}

/// Probability that the other robot is seen.
fn seen(own: Cell, other: Cell, view: Option<usize>) -> Rational {
    let Some(v) = view else { return one() };
    let dist = own.0.abs_diff(other.0).max(own.1.abs_diff(other.1));
    match dist.cmp(&v) {
        std::cmp::Ordering::Less => one(),
        std::cmp::Ordering::Equal => frac(1, 2),
        std::cmp::Ordering::Greater => int(0),
    }
}

pub fn gen_evade(d: usize, kind: EvadeKind, view: Option<usize>) -> Result<Mdp> {
    assert!(d >= 3, "need a grid of side at least three");
    let cells: Vec<Cell> = (0..d).flat_map(|y| (0..d).map(move |x| (x, y))).collect();
    let headings: Vec<Option<usize>> = match kind {
        EvadeKind::I => (0..4).map(Some).collect(),
        EvadeKind::V => vec![None],
    };
    let name = |a: Cell, b: Cell, h: Option<usize>| match h {
        Some(h) => format!("a{}.b{}.{}", cell(a), cell(b), HEADINGS[h].0),
        None => format!("a{}.b{}", cell(a), cell(b)),
    };
    let mut m = MdpBuilder::new();
    for &a in &cells {
        m.observation(&observation(a, None));
        for &b in &cells {
            m.observation(&observation(a, Some(b)));
        }
    }
    m.declare_label(CRASH);
    let mut ids = std::collections::HashMap::new();
    for &a in &cells {
        for &b in &cells {
            for &h in &headings {
                let s = m.state(&name(a, b, h));
                ids.insert((a, b, h), s);
                let p = seen(a, b, view);
                if p > int(0) {
                    let z = m.observation(&observation(a, Some(b)));
                    m.obs(s, z, p.clone());
                }
                if p < one() {
                    let z = m.observation(&observation(a, None));
                    m.obs(s, z, one() - p);
                }
            }
        }
    }
    let (start_a, start_b) = ((0, 0), (d - 1, d - 1));
    for &h in &headings {
        m.init(ids[&(start_a, start_b, h)], frac(1, headings.len() as i64));
    }
    for &a in &cells {
        let own_moves = neighbours(a, d);
        let p_own = frac(1, own_moves.len() as i64);
        for &b in &cells {
            for &h in &headings {
                let s = ids[&(a, b, h)];
                if a == b {
                    m.label(CRASH, s);
                }
                // Other robot's options: action and resulting (cell, heading) lottery.
                let mut options: Vec<(usize, Vec<(Cell, Option<usize>, Rational)>)> = Vec::new();
                match (kind, h) {
                    (EvadeKind::I, Some(h)) => {
                        options.push((m.action("move"), vec![(step(b, h, d).unwrap_or(b), Some(h), one())]));
                        options.push((m.action("turn"), (0..4).map(|g| (b, Some(g), frac(1, 4))).collect()));
                    }
                    _ => {
                        for (k, &(dir, _, _)) in HEADINGS.iter().enumerate() {
                            if let Some(t) = step(b, k, d) {
                                options.push((m.action(dir), vec![(t, None, frac(4, 5)), (b, None, frac(1, 5))]));
                            }
                        }
                    }
                }
                for (act, outcomes) in options {
                    for &a2 in &own_moves {
                        for (b2, h2, p) in &outcomes {
                            m.trans(s, act, ids[&(a2, *b2, *h2)], &p_own * p);
                        }
                    }
                }
            }
        }
    }
    m.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{classify, ObsDeterminism, Structure};

    #[test]
    fn observation_alphabet_is_cell_pairs_plus_unseen() {
        let m = gen_evade(4, EvadeKind::V, Some(2)).unwrap();
        assert_eq!(m.num_observations(), 16 * 17);
        assert_eq!(classify(&m), (Structure::GeneralMdp, ObsDeterminism::StochasticObs));
    }

    #[test]
    fn crash_cells_keep_moving() {
        let m = gen_evade(3, EvadeKind::I, None).unwrap();
        let crash = m.label(CRASH).unwrap();
        assert_eq!(crash.len(), 9 * 4);
        for &s in crash {
            assert_eq!(m.choices(s).len(), 2);
        }
    }
}
