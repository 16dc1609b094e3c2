//! Landing approach: a ground vehicle crossing the runway while a plane
//! descends, observed through a noisy position sensor.
//!
//! The vehicle starts on the right (`R`), crosses `lanes - 2` runway cells
//! and ends on the left (`L`). The plane is `res - 1` distance steps out
//! and lands at `D0`. Actions are the plane's signals: `p` (progress), `w`
//! (hold the vehicle), both (`pw`) or neither (`none`); at `D0` only `any`.
//! Probabilities are given for the far and near distances and linearly
//! interpolated in between, so `(3, 3)` is exactly the three-by-three
//! reference model.

use crate::error::Result;
use crate::mdp::{Mdp, MdpBuilder};
use crate::rational::{frac, int, one, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SensorKind {
    /// One sensor state whose accuracy depends on the distance.
    A,
    /// Two sensor states, `ok` and `noisy`, switching stochastically.
    B,
}

pub const CRASH: &str = "crash";

fn position_names(lanes: usize) -> Vec<String> {
    let mut names = vec!["L".to_string()];
    if lanes == 3 {
        names.push("M".to_string());
    } else {
        names.extend((1..lanes - 1).map(|k| format!("M{k}")));
    }
    names.push("R".to_string());
    names
}

fn state_name(positions: &[String], pos: usize, d: usize) -> String {
    format!("{}D{d}", positions[pos])
}

/// `near` at distance 1, `far` at distance `res - 1`.
fn interpolate(near: Rational, far: Rational, d: usize, res: usize) -> Rational {
    if res <= 2 {
        return near;
    }
    &near + (far - &near) * frac(d as i64 - 1, res as i64 - 2)
}

/// The world model with state risk left open; runway cells at `D0` carry
/// the label `crash`.
pub fn airport_world(lanes: usize, res: usize) -> Result<Mdp> {
    assert!(lanes >= 3 && res >= 3, "need at least three lanes and three distances");
    let positions = position_names(lanes);
    let right = lanes - 1;
    let mut b = MdpBuilder::new();
    let mut id = vec![vec![0usize; res]; lanes];
    for d in (0..res).rev() {
        for pos in (0..lanes).rev() {
            id[pos][d] = b.state(&state_name(&positions, pos, d));
        }
    }
    let [none, p, w, pw, any] = ["none", "p", "w", "pw", "any"].map(|a| b.action(a));
    b.declare_label(CRASH);
    b.init(id[right][res - 1], one());
    for d in 0..res {
        for pos in 0..lanes {
            let s = id[pos][d];
            if d == 0 {
                let next = if pos == 0 || pos == right { s } else { id[pos - 1][0] };
                b.trans(s, any, next, one());
                if pos != 0 && pos != right {
                    b.label(CRASH, s);
                }
                continue;
            }
            // Probability that the vehicle advances one cell.
            let (q_none, q_p) = if pos == right {
                (interpolate(frac(1, 2), frac(19, 20), d, res), interpolate(frac(1, 100), frac(1, 2), d, res))
            } else if pos > 0 {
                (interpolate(one(), frac(1, 2), d, res), interpolate(frac(99, 100), frac(9, 10), d, res))
            } else {
                (int(0), int(0))
            };
            let branch = |b: &mut MdpBuilder, a: usize, q: &Rational, to_d: usize| {
                let stay = id[pos][to_d];
                let q_stay = one() - q;
                if q_stay > int(0) {
                    b.trans(s, a, stay, q_stay);
                }
                if *q > int(0) {
                    b.trans(s, a, id[pos - 1][to_d], q.clone());
                }
            };
            branch(&mut b, none, &q_none, d);
            branch(&mut b, p, &q_p, d - 1);
            if pos == right {
                b.trans(s, w, s, one());
                b.trans(s, pw, id[pos][d - 1], one());
            }
        }
    }
    b.build()
}

/// Probability of reporting the true position, at an edge cell or on the
/// runway, in the accurate sensor mode.
fn accuracy(edge: bool, d: usize, res: usize) -> Rational {
    match (edge, d) {
        (true, 0) => frac(19, 20),
        (false, 0) => frac(98, 100),
        (true, _) => interpolate(frac(2, 3), frac(1, 2), d, res),
        (false, _) => interpolate(frac(3, 4), frac(1, 2), d, res),
    }
}

/// The sensor reads the world state as its action and emits one position
/// symbol `<pos>_o`. Misreports go to the neighbouring cells, split evenly.
/// With `altimeter` the plane's own distance is appended, as `<pos>_o.D<d>`.
pub fn airport_sensor(lanes: usize, res: usize, kind: SensorKind, altimeter: bool) -> Result<Mdp> {
    assert!(lanes >= 3 && res >= 3, "need at least three lanes and three distances");
    let positions = position_names(lanes);
    let mut b = MdpBuilder::new();
    let modes: Vec<usize> = match kind {
        SensorKind::A => vec![b.state("sense")],
        SensorKind::B => vec![b.state("ok"), b.state("noisy")],
    };
    b.init(modes[0], one());
    let symbol = |b: &mut MdpBuilder, pos: usize, d: usize| {
        if altimeter {
            b.observation(&format!("{}_o.D{d}", positions[pos]))
        } else {
            b.observation(&format!("{}_o", positions[pos]))
        }
    };
    for d in (0..res).rev() {
        for pos in (0..lanes).rev() {
            symbol(&mut b, pos, d);
        }
    }
    for d in (0..res).rev() {
        for pos in (0..lanes).rev() {
            let a = b.action(&state_name(&positions, pos, d));
            let edge = pos == 0 || pos == lanes - 1;
            let neighbours: Vec<usize> = [pos.checked_sub(1), (pos + 1 < lanes).then_some(pos + 1)].into_iter().flatten().collect();
            for (k, &mode) in modes.iter().enumerate() {
                let correct = if k == 0 { accuracy(edge, d, res) } else { frac(1, 3) };
                let wrong = (one() - &correct) / int(neighbours.len() as i64);
                let z = symbol(&mut b, pos, d);
                b.sobs(mode, a, z, correct);
                for &nb in &neighbours {
                    let z = symbol(&mut b, nb, d);
                    b.sobs(mode, a, z, wrong.clone());
                }
                match kind {
                    SensorKind::A => {
                        b.trans(mode, a, mode, one());
                    }
                    SensorKind::B if k == 0 => {
                        b.trans(mode, a, modes[0], frac(9, 10)).trans(mode, a, modes[1], frac(1, 10));
                    }
                    SensorKind::B => {
                        b.trans(mode, a, modes[0], frac(1, 4)).trans(mode, a, modes[1], frac(3, 4));
                    }
                }
            }
        }
    }
    b.build()
}

pub fn gen_airport(lanes: usize, res: usize, kind: SensorKind, altimeter: bool) -> Result<(Mdp, Mdp)> {
    Ok((airport_world(lanes, res)?, airport_sensor(lanes, res, kind, altimeter)?))
}
