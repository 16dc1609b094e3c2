//! A robot on a `D x D` grid with a battery. Every move costs one unit of
//! charge; on a charging cell (the two corners `(0,0)` and `(D-1,D-1)`) the
//! robot may refill to capacity. A move reaches the intended neighbour
//! with probability 4/5 and otherwise stays put, still paying for it.
//! An empty battery is absorbing and labelled `empty`.
//!
//! The sensor sees the cell exactly and reads the battery with an error of
//! one unit up or down. Kind B adds a degraded sensor mode with a wider
//! error, entered and left stochastically.

use crate::error::Result;
use crate::mdp::{Mdp, MdpBuilder};
use crate::rational::{frac, int, one, Rational};

use super::airport::SensorKind;
use crate::compose::compose;

pub const EMPTY: &str = "empty";

const MOVES: [(&str, i64, i64); 4] = [("N", 0, 1), ("E", 1, 0), ("S", 0, -1), ("W", -1, 0)];

fn cell_name(x: usize, y: usize, b: usize) -> String {
    format!("x{x}y{y}b{b}")
}

fn is_charger(x: usize, y: usize, d: usize) -> bool {
    (x == 0 && y == 0) || (x == d - 1 && y == d - 1)
}

pub fn refuel_world(d: usize, capacity: usize) -> Result<Mdp> {
    assert!(d >= 3 && capacity >= 1, "need a grid of side at least three and some capacity");
    let mut m = MdpBuilder::new();
    let mut id = vec![vec![vec![0usize; capacity + 1]; d]; d];
    for y in 0..d {
        for x in 0..d {
            for b in (0..=capacity).rev() {
                id[x][y][b] = m.state(&cell_name(x, y, b));
            }
        }
    }
    let moves: Vec<usize> = MOVES.iter().map(|(a, _, _)| m.action(a)).collect();
    let charge = m.action("charge");
    let idle = m.action("idle");
    m.declare_label(EMPTY);
    m.init(id[0][0][capacity], one());
    for y in 0..d {
        for x in 0..d {
            for b in 0..=capacity {
                let s = id[x][y][b];
                if b == 0 {
                    m.trans(s, idle, s, one()).label(EMPTY, s);
                    continue;
                }
                for (k, &(_, dx, dy)) in MOVES.iter().enumerate() {
                    let (tx, ty) = (x as i64 + dx, y as i64 + dy);
                    if tx < 0 || ty < 0 || tx >= d as i64 || ty >= d as i64 {
                        continue;
                    }
                    let (tx, ty) = (tx as usize, ty as usize);
                    m.trans(s, moves[k], id[tx][ty][b - 1], frac(4, 5));
                    m.trans(s, moves[k], id[x][y][b - 1], frac(1, 5));
                }
                if is_charger(x, y, d) {
                    m.trans(s, charge, id[x][y][capacity], one());
                }
            }
        }
    }
    m.build()
}

/// Battery reading `b - 1`, `b`, `b + 1` (clamped to the valid range) with
/// the error mass split evenly over the readings that exist.
fn reading(b: usize, capacity: usize, correct: &Rational) -> Vec<(usize, Rational)> {
    let others: Vec<usize> = [b.checked_sub(1), (b < capacity).then_some(b + 1)].into_iter().flatten().collect();
    let wrong = (one() - correct) / int(others.len() as i64);
    let mut out = vec![(b, correct.clone())];
    out.extend(others.into_iter().map(|o| (o, wrong.clone())));
    out
}

pub fn refuel_sensor(d: usize, capacity: usize, kind: SensorKind) -> Result<Mdp> {
    let mut m = MdpBuilder::new();
    let modes: Vec<usize> = match kind {
        SensorKind::A => vec![m.state("sense")],
        SensorKind::B => vec![m.state("ok"), m.state("noisy")],
    };
    m.init(modes[0], one());
    for y in 0..d {
        for x in 0..d {
            for b in (0..=capacity).rev() {
                let a = m.action(&cell_name(x, y, b));
                for (k, &mode) in modes.iter().enumerate() {
                    let correct = if k == 0 { frac(3, 4) } else { frac(1, 3) };
                    for (r, p) in reading(b, capacity, &correct) {
                        let z = m.observation(&format!("x{x}y{y}r{r}"));
                        m.sobs(mode, a, z, p);
                    }
                    match kind {
                        SensorKind::A => {
                            m.trans(mode, a, mode, one());
                        }
                        SensorKind::B if k == 0 => {
                            m.trans(mode, a, modes[0], frac(9, 10)).trans(mode, a, modes[1], frac(1, 10));
                        }
                        SensorKind::B => {
                            m.trans(mode, a, modes[0], frac(1, 2)).trans(mode, a, modes[1], frac(1, 2));
                        }
                    }
                }
            }
        }
    }
    m.build()
}

/// World and sensor composed into one model with state observations.
pub fn gen_refuel(d: usize, capacity: usize, kind: SensorKind) -> Result<Mdp> {
    compose(&refuel_world(d, capacity)?, &refuel_sensor(d, capacity, kind)?)
}
