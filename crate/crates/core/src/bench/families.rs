//! Theory families: the exponential-vertex model and its extension with
//! per-component exits.

use crate::error::Result;
use crate::mdp::{Mdp, MdpBuilder};
use crate::rational::{frac, one, Rational};

/// `n` two-state components `h_i`, `l_i` entered uniformly from `s0`.
/// Observations sit on state-action pairs: every action emits `A`, since
/// `B` is observationally indistinguishable from `A`.
pub fn gen_blowup(n: usize) -> Result<Mdp> {
    assert!(n >= 1, "need at least one component");
    let mut b = MdpBuilder::new();
    let s0 = b.state("s0");
    let a = b.action("A");
    let bb = b.action("B");
    let z = b.observation("A");
    b.init(s0, one()).obs(s0, z, one());
    let p = frac(1, 2 * n as i64);
    let comps: Vec<(usize, usize)> = (1..=n).map(|i| (b.state(&format!("h{i}")), b.state(&format!("l{i}")))).collect();
    for &(h, l) in &comps {
        b.trans(s0, a, h, p.clone()).trans(s0, a, l, p.clone());
    }
    b.sobs(s0, a, z, one());
    for &(h, l) in &comps {
        b.trans(h, a, l, one()).sobs(h, a, z, one());
        b.trans(h, bb, h, one()).sobs(h, bb, z, one());
        b.trans(l, a, h, one()).sobs(l, a, z, one());
    }
    b.build()
}

/// Extension with absorbing `top` (risk 1) and `bot`. Every step emits `A`
/// with probability 1/2 and each exit symbol `H_j`, `L_j` with probability
/// 1/(4n), independently of state and action, so no scheduler can discard
/// mass by choosing an inconsistent action. The emitted symbol drives the
/// move: on `A` the chosen action applies as in [`gen_blowup`]; on `H_j`
/// state `h_j` exits to `top` and `l_j` to `bot`, on `L_j` the other way
/// round; all other states stay put.
///
/// States are `x#z` for location `x` and last symbol `z`. After `A A A` the
/// belief set has one vertex per choice of "all mass on `h_i`" or "split"
/// per component, and the suffix picking `H_i` for the former and `L_i` for
/// the latter is maximized by that vertex alone.
pub fn gen_blowup_ext(n: usize) -> Result<Mdp> {
    assert!(n >= 1, "need at least one component");
    #[derive(Clone, Copy, PartialEq)]
    enum Loc {
        Start,
        H(usize),
        L(usize),
        Top,
        Bot,
    }
    #[derive(Clone, Copy)]
    enum Sym {
        A,
        H(usize),
        L(usize),
    }
    let loc_name = |x: Loc| match x {
        Loc::Start => "s0".to_string(),
        Loc::H(i) => format!("h{}", i + 1),
        Loc::L(i) => format!("l{}", i + 1),
        Loc::Top => "top".to_string(),
        Loc::Bot => "bot".to_string(),
    };
    let sym_name = |z: Sym| match z {
        Sym::A => "A".to_string(),
        Sym::H(j) => format!("H{}", j + 1),
        Sym::L(j) => format!("L{}", j + 1),
    };
    let mut symbols = vec![(Sym::A, frac(1, 2))];
    for j in 0..n {
        symbols.push((Sym::H(j), frac(1, 4 * n as i64)));
        symbols.push((Sym::L(j), frac(1, 4 * n as i64)));
    }
    let mut locs = vec![Loc::Start];
    for i in 0..n {
        locs.push(Loc::H(i));
        locs.push(Loc::L(i));
    }
    locs.push(Loc::Top);
    locs.push(Loc::Bot);

    let mut b = MdpBuilder::new();
    let act_a = b.action("A");
    let act_b = b.action("B");
    for &(z, _) in &symbols {
        b.observation(&sym_name(z));
    }
    let state = |b: &mut MdpBuilder, x: Loc, z: Sym| {
        let name = format!("{}#{}", loc_name(x), sym_name(z));
        if b.has_state(&name) {
            return b.state(&name);
        }
        let s = b.state(&name);
        let o = b.observation(&sym_name(z));
        b.obs(s, o, one());
        if x == Loc::Top {
            b.risk(s, one());
        }
        s
    };
    // Successor location of `x` under symbol `z` when action `act` is chosen.
    let step = |x: Loc, z: Sym, act: usize| -> Vec<(Loc, Rational)> {
        match (x, z) {
            (Loc::Top | Loc::Bot, _) => vec![(x, one())],
            (Loc::Start, Sym::A) => {
                let p = frac(1, 2 * n as i64);
                (0..n).flat_map(|i| [(Loc::H(i), p.clone()), (Loc::L(i), p.clone())]).collect()
            }
            (Loc::Start, _) => vec![(Loc::Bot, one())],
            (Loc::H(i), Sym::A) if act == act_b => vec![(Loc::H(i), one())],
            (Loc::H(i), Sym::A) => vec![(Loc::L(i), one())],
            (Loc::L(i), Sym::A) => vec![(Loc::H(i), one())],
            (Loc::H(i), Sym::H(j)) | (Loc::L(i), Sym::L(j)) if i == j => vec![(Loc::Top, one())],
            (Loc::H(i), Sym::L(j)) | (Loc::L(i), Sym::H(j)) if i == j => vec![(Loc::Bot, one())],
            (Loc::H(_) | Loc::L(_), _) => vec![(x, one())],
        }
    };
    let start = state(&mut b, Loc::Start, Sym::A);
    b.init(start, one());
    for &x in &locs {
        let acts: &[usize] = if matches!(x, Loc::H(_)) { &[act_a, act_b] } else { &[act_a] };
        for &(from_z, _) in &symbols {
            // Only the start location is entered with a fixed symbol.
            if x == Loc::Start && !matches!(from_z, Sym::A) {
                continue;
            }
            let s = state(&mut b, x, from_z);
            for &act in acts {
                for &(z, ref pz) in &symbols {
                    for (t, pt) in step(x, z, act) {
                        let target = state(&mut b, t, z);
                        b.trans(s, act, target, pz * pt);
                    }
                }
            }
        }
    }
    b.build()
}
