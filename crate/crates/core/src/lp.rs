//! Exact feasibility of `A x = b, x >= 0` by phase-one simplex over
//! rationals with Bland's rule.

use num_traits::{Signed, Zero};

use crate::deadline::Deadline;
use crate::error::Result;
use crate::rational::{to_f64, Rational};

#[derive(Clone, Debug, PartialEq)]
pub enum Feasibility {
    Point(Vec<Rational>),
    /// `y` with `yᵀA ≥ 0` in every column and `yᵀb < 0`.
    Infeasible(Vec<Rational>),
}

/// Returns a nonnegative solution of `a x = b`, or `None` if there is none.
/// `a` is given row-major with `b.len()` rows.
pub fn feasible_point(a: &[Vec<Rational>], b: &[Rational], deadline: &Deadline) -> Result<Option<Vec<Rational>>> {
    Ok(match solve(a, b, deadline)? {
        Feasibility::Point(x) => Some(x),
        Feasibility::Infeasible(_) => None,
    })
}

/// Like [`feasible_point`], but an infeasible system comes with a Farkas
/// certificate.
pub fn solve(a: &[Vec<Rational>], b: &[Rational], deadline: &Deadline) -> Result<Feasibility> {
    let m = b.len();
    let n = a.first().map_or(0, Vec::len);
    let width = n + m + 1;
    let rhs = n + m;
    let mut t: Vec<Vec<Rational>> = Vec::with_capacity(m + 1);
    for i in 0..m {
        let flip = b[i].is_negative();
        let mut row = vec![Rational::zero(); width];
        for j in 0..n {
            row[j] = if flip { -&a[i][j] } else { a[i][j].clone() };
        }
        row[n + i] = Rational::from_integer(1.into());
        row[rhs] = b[i].abs();
        t.push(row);
    }
    // Reduced costs of the phase-one objective (sum of artificials), with
    // the negated objective value in the last column.
    let mut cost = vec![Rational::zero(); width];
    for row in &t {
        for j in 0..n {
            if !row[j].is_zero() {
                cost[j] -= &row[j];
            }
        }
        cost[rhs] -= &row[rhs];
    }
    t.push(cost);
    let mut basis: Vec<usize> = (n..n + m).collect();

    loop {
        deadline.check()?;
        let Some(enter) = (0..n + m).find(|&j| t[m][j].is_negative()) else {
            break;
        };
        let mut leave: Option<(usize, Rational)> = None;
        for i in 0..m {
            if t[i][enter].is_positive() {
                let ratio = &t[i][rhs] / &t[i][enter];
                let better = match &leave {
                    None => true,
                    Some((k, best)) => ratio < *best || (ratio == *best && basis[i] < basis[*k]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        // Phase one is bounded below by zero, so a leaving row always exists.
        let (r, _) = leave.expect("phase-one objective is bounded");
        pivot(&mut t, r, enter);
        basis[r] = enter;
    }

    if !t[m][rhs].is_zero() {
        // Simplex multipliers are 1 minus the artificials' reduced costs;
        // their negation, with the row flips undone, certifies infeasibility.
        let y = (0..m)
            .map(|i| {
                let pi = Rational::from_integer(1.into()) - &t[m][n + i];
                if b[i].is_negative() { pi } else { -pi }
            })
            .collect();
        return Ok(Feasibility::Infeasible(y));
    }
    let mut x = vec![Rational::zero(); n];
    for (i, &var) in basis.iter().enumerate() {
        if var < n {
            x[var] = t[i][rhs].clone();
        }
    }
    Ok(Feasibility::Point(x))
}

/// Same contract as [`solve`]. A floating-point phase one runs first; its
/// basis or certificate is checked exactly and the exact simplex only runs
/// when that check fails.
pub fn solve_guided(a: &[Vec<Rational>], b: &[Rational], deadline: &Deadline) -> Result<Feasibility> {
    let af: Vec<Vec<f64>> = a.iter().map(|row| row.iter().map(to_f64).collect()).collect();
    let bf: Vec<f64> = b.iter().map(to_f64).collect();
    solve_guided_with(a, b, &af, &bf, deadline)
}

/// [`solve_guided`] with the floating-point copies of `a` and `b` supplied
/// by the caller.
pub fn solve_guided_with(
    a: &[Vec<Rational>],
    b: &[Rational],
    af: &[Vec<f64>],
    bf: &[f64],
    deadline: &Deadline,
) -> Result<Feasibility> {
    let n = a.first().map_or(0, Vec::len);
    // A zero right-hand side on a nonnegative row forces every column with a
    // positive entry there to zero. Dropping those up front removes the
    // degeneracy that otherwise defeats the floating-point basis.
    let zero_rows: Vec<usize> =
        (0..b.len()).filter(|&i| b[i].is_zero() && a[i].iter().all(|v| !v.is_negative())).collect();
    if zero_rows.is_empty() {
        return guided_core(a, b, af, bf, deadline);
    }
    let keep_cols: Vec<usize> = (0..n).filter(|&j| zero_rows.iter().all(|&i| a[i][j].is_zero())).collect();
    let keep_rows: Vec<usize> = (0..b.len()).filter(|i| !zero_rows.contains(i)).collect();
    let pick = |rows: &[usize]| -> (Vec<Vec<Rational>>, Vec<Vec<f64>>) {
        rows.iter()
            .map(|&i| (keep_cols.iter().map(|&j| a[i][j].clone()).collect(), keep_cols.iter().map(|&j| af[i][j]).collect()))
            .unzip()
    };
    let (ra, raf) = pick(&keep_rows);
    let rb: Vec<Rational> = keep_rows.iter().map(|&i| b[i].clone()).collect();
    let rbf: Vec<f64> = keep_rows.iter().map(|&i| bf[i]).collect();
    Ok(match guided_core(&ra, &rb, &raf, &rbf, deadline)? {
        Feasibility::Point(x) => {
            let mut full = vec![Rational::zero(); n];
            for (k, &j) in keep_cols.iter().enumerate() {
                full[j] = x[k].clone();
            }
            Feasibility::Point(full)
        }
        Feasibility::Infeasible(yr) => {
            // Weight the dropped rows heavily enough that the dropped columns
            // stay on the nonnegative side; `yᵀb` is unchanged.
            let mut weight = Rational::zero();
            for j in (0..n).filter(|j| !keep_cols.contains(j)) {
                let kept: Rational = keep_rows.iter().zip(&yr).map(|(&i, u)| u * &a[i][j]).sum();
                let dropped: Rational = zero_rows.iter().map(|&i| a[i][j].clone()).sum();
                if kept.is_negative() {
                    weight = weight.max(-kept / dropped);
                }
            }
            let mut y = vec![weight; b.len()];
            for (&i, u) in keep_rows.iter().zip(yr) {
                y[i] = u;
            }
            Feasibility::Infeasible(y)
        }
    })
}

fn guided_core(
    a: &[Vec<Rational>],
    b: &[Rational],
    af: &[Vec<f64>],
    bf: &[f64],
    deadline: &Deadline,
) -> Result<Feasibility> {
    let (scaled, bs, row_scale) = equilibrate(af, bf);
    match float_phase_one(&scaled, &bs) {
        Some(FloatOutcome::Basis(cols)) => {
            let all: Vec<usize> = cols.iter().map(|&(j, _)| j).collect();
            if let Some(x) = exact_on_columns(a, b, &all) {
                return Ok(Feasibility::Point(x));
            }
            // A point on a face of the hull leaves near-zero basics whose
            // exact value may be slightly negative; retry on the support.
            let top = cols.iter().fold(0.0f64, |m, &(_, v)| m.max(v));
            let support: Vec<usize> = cols.iter().filter(|&&(_, v)| v > 1e-9 * top).map(|&(j, _)| j).collect();
            if support.len() < all.len() {
                if let Some(x) = exact_on_columns(a, b, &support) {
                    return Ok(Feasibility::Point(x));
                }
            }
        }
        Some(FloatOutcome::Certificate(y)) => {
            let mut y: Vec<Rational> = y.iter().zip(&row_scale).filter_map(|(&v, &s)| Rational::from_float(v * s)).collect();
            if y.len() == b.len() {
                if certifies(a, af, b, &y) {
                    return Ok(Feasibility::Infeasible(y));
                }
                // Rounding tends to leave columns on the separating
                // hyperplane slightly negative. When every column and `b`
                // share a coordinate sum (as distributions do), shifting
                // `y` uniformly by half the margin fixes that.
                let half = -y.iter().zip(b).map(|(u, v)| u * v).sum::<Rational>() / Rational::from_integer(2.into());
                if half.is_positive() {
                    for v in y.iter_mut() {
                        *v += &half;
                    }
                    if certifies(a, af, b, &y) {
                        return Ok(Feasibility::Infeasible(y));
                    }
                }
            }
        }
        None => {}
    }
    solve(a, b, deadline)
}

/// Power-of-two row and column scaling so that every row and column has
/// largest magnitude in [1, 2). Belief coordinates can differ by many orders
/// of magnitude, which an absolute pivot tolerance would otherwise ignore.
/// Returns the scaled system and the row factors.
fn equilibrate(a: &[Vec<f64>], b: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let pow2 = |v: f64| if v > 0.0 && v.is_finite() { 2f64.powi(-v.log2().floor() as i32) } else { 1.0 };
    let n = a.first().map_or(0, Vec::len);
    let rows: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(row, v)| pow2(row.iter().chain(std::iter::once(v)).fold(0.0f64, |m, x| m.max(x.abs()))))
        .collect();
    let cols: Vec<f64> = (0..n).map(|j| pow2(a.iter().zip(&rows).fold(0.0f64, |m, (row, r)| m.max((row[j] * r).abs())))).collect();
    let scaled = a
        .iter()
        .zip(&rows)
        .map(|(row, r)| row.iter().zip(&cols).map(|(x, c)| x * r * c).collect())
        .collect();
    let bs = b.iter().zip(&rows).map(|(v, r)| v * r).collect();
    (scaled, bs, rows)
}

fn certifies(a: &[Vec<Rational>], af: &[Vec<f64>], b: &[Rational], y: &[Rational]) -> bool {
    let n = a.first().map_or(0, Vec::len);
    let yb: Rational = y.iter().zip(b).map(|(u, v)| u * v).sum();
    if !yb.is_negative() {
        return false;
    }
    let yf: Vec<f64> = y.iter().map(to_f64).collect();
    // Columns clearly on the positive side in floating point need no exact check.
    let clear = 1e-9 * (1.0 + yf.iter().map(|v| v.abs()).sum::<f64>());
    (0..n).all(|j| {
        let approx: f64 = yf.iter().zip(af).map(|(u, row)| u * row[j]).sum();
        if approx > clear {
            return true;
        }
        let col: Rational = y.iter().zip(a).filter(|(u, _)| !u.is_zero()).map(|(u, row)| u * &row[j]).sum();
        !col.is_negative()
    })
}

/// Solves `a x = b` using only the given columns, by exact elimination.
/// Returns the full-length solution if it exists and is nonnegative.
fn exact_on_columns(a: &[Vec<Rational>], b: &[Rational], cols: &[usize]) -> Option<Vec<Rational>> {
    let m = b.len();
    let k = cols.len();
    let mut t: Vec<Vec<Rational>> = (0..m)
        .map(|i| {
            let mut row: Vec<Rational> = cols.iter().map(|&j| a[i][j].clone()).collect();
            row.push(b[i].clone());
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..k {
        let Some(p) = (r..m).find(|&i| !t[i][c].is_zero()) else {
            continue;
        };
        t.swap(r, p);
        pivot(&mut t, r, c);
        pivots.push((r, c));
        r += 1;
    }
    // Remaining rows must read 0 = 0.
    if (r..m).any(|i| !t[i][k].is_zero()) {
        return None;
    }
    let mut x = vec![Rational::zero(); a.first().map_or(0, Vec::len)];
    for (row, c) in pivots {
        let v = t[row][k].clone();
        if v.is_negative() {
            return None;
        }
        x[cols[c]] = v;
    }
    Some(x)
}

enum FloatOutcome {
    /// Original columns in the final basis of a feasible phase one, with
    /// their values.
    Basis(Vec<(usize, f64)>),
    Certificate(Vec<f64>),
}

/// Phase one in floating point with Bland's rule. `None` when it does not
/// settle within the iteration budget.
fn float_phase_one(a: &[Vec<f64>], b: &[f64]) -> Option<FloatOutcome> {
    const TOL: f64 = 1e-11;
    let m = b.len();
    let n = a.first().map_or(0, Vec::len);
    let width = n + m + 1;
    let rhs = n + m;
    let mut t = vec![vec![0.0f64; width]; m + 1];
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sign * a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][rhs] = sign * b[i];
        for j in 0..n {
            t[m][j] -= t[i][j];
        }
        t[m][rhs] -= t[i][rhs];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    for _ in 0..50 * (n + m + 1) {
        let Some(enter) = (0..n + m).find(|&j| t[m][j] < -TOL) else {
            if -t[m][rhs] > 1e-9 {
                let y = (0..m)
                    .map(|i| {
                        let pi = 1.0 - t[m][n + i];
                        if b[i] < 0.0 { pi } else { -pi }
                    })
                    .collect();
                return Some(FloatOutcome::Certificate(y));
            }
            let cols = basis.iter().enumerate().filter(|&(_, &j)| j < n).map(|(i, &j)| (j, t[i][rhs])).collect();
            return Some(FloatOutcome::Basis(cols));
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[i][enter] > TOL {
                let ratio = t[i][rhs] / t[i][enter];
                let better = match leave {
                    None => true,
                    Some((k, best)) => ratio < best - TOL || ((ratio - best).abs() <= TOL && basis[i] < basis[k]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let (r, _) = leave?;
        let p = t[r][enter];
        for v in t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && row[enter] != 0.0 {
                let f = row[enter];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        basis[r] = enter;
    }
    None
}

fn pivot(t: &mut [Vec<Rational>], r: usize, c: usize) {
    let p = t[r][c].clone();
    for v in t[r].iter_mut() {
        if !v.is_zero() {
            *v /= &p;
        }
    }
    let pivot_row = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i == r || row[c].is_zero() {
            continue;
        }
        let f = row[c].clone();
        for (j, pv) in pivot_row.iter().enumerate() {
            if !pv.is_zero() {
                row[j] -= &f * pv;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    fn solve(a: Vec<Vec<Rational>>, b: Vec<Rational>) -> Option<Vec<Rational>> {
        feasible_point(&a, &b, &Deadline::none()).unwrap()
    }

    #[test]
    fn midpoint_is_feasible() {
        // (1/2, 1/2) = w1 (1,0) + w2 (0,1)
        let x = solve(vec![vec![int(1), int(0)], vec![int(0), int(1)]], vec![frac(1, 2), frac(1, 2)]).unwrap();
        assert_eq!(x, vec![frac(1, 2), frac(1, 2)]);
    }

    #[test]
    fn outside_point_is_infeasible() {
        // (1, 0) is not a nonnegative combination reproducing both rows of (1/2,1/2) generators.
        assert!(solve(vec![vec![frac(1, 2)], vec![frac(1, 2)]], vec![int(1), int(0)]).is_none());
    }

    fn check_certificate(a: &[Vec<Rational>], b: &[Rational]) {
        let Feasibility::Infeasible(y) = super::solve(a, b, &Deadline::none()).unwrap() else {
            panic!("expected infeasible");
        };
        let af: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(to_f64).collect()).collect();
        assert!(certifies(a, &af, b, &y));
        assert!(matches!(solve_guided(a, b, &Deadline::none()).unwrap(), Feasibility::Infeasible(_)));
        for j in 0..a[0].len() {
            let col: Rational = (0..b.len()).map(|i| &y[i] * &a[i][j]).sum();
            assert!(!col.is_negative());
        }
        let yb: Rational = (0..b.len()).map(|i| &y[i] * &b[i]).sum();
        assert!(yb.is_negative());
    }

    #[test]
    fn certificates_separate() {
        check_certificate(&[vec![frac(1, 2)], vec![frac(1, 2)]], &[int(1), int(0)]);
        check_certificate(&[vec![int(1), int(2)], vec![int(-1), int(1)]], &[int(-3), int(-5)]);
        check_certificate(&[vec![int(1), int(0)], vec![int(0), int(1)]], &[int(1), int(-1)]);
    }

    #[test]
    fn negative_rhs_and_degenerate() {
        let x = solve(vec![vec![int(-1), int(1)], vec![int(1), int(1)]], vec![int(-1), int(3)]).unwrap();
        assert_eq!(x, vec![int(2), int(1)]);
        let x = solve(vec![vec![int(1), int(1)], vec![int(2), int(2)]], vec![int(0), int(0)]).unwrap();
        assert_eq!(x, vec![int(0), int(0)]);
        let a = vec![vec![frac(1, 3), frac(2, 3), int(0)], vec![frac(2, 3), frac(1, 3), int(1)]];
        let b = vec![frac(1, 2), frac(1, 2)];
        let Feasibility::Point(x) = solve_guided(&a, &b, &Deadline::none()).unwrap() else { panic!() };
        for i in 0..2 {
            let lhs: Rational = (0..3).map(|j| &a[i][j] * &x[j]).sum();
            assert_eq!(lhs, b[i]);
        }
    }

    #[test]
    fn zero_coordinates_drop_columns() {
        // The point lies on the face x2 = 0; the third column is excluded.
        let a = vec![vec![int(1), int(0), frac(1, 2)], vec![int(0), int(1), int(0)], vec![int(0), int(0), frac(1, 2)]];
        let b = vec![frac(1, 3), frac(2, 3), int(0)];
        let Feasibility::Point(x) = solve_guided(&a, &b, &Deadline::none()).unwrap() else { panic!() };
        assert_eq!(x, vec![frac(1, 3), frac(2, 3), int(0)]);
        // Only the excluded column could reach (1, 0, 0) together with row 1.
        let a = vec![vec![int(0), int(1)], vec![int(1), int(0)], vec![int(0), int(1)]];
        let b = vec![int(1), int(0), int(0)];
        let Feasibility::Infeasible(y) = solve_guided(&a, &b, &Deadline::none()).unwrap() else { panic!() };
        for j in 0..2 {
            let col: Rational = (0..3).map(|i| &y[i] * &a[i][j]).sum();
            assert!(!col.is_negative());
        }
        let yb: Rational = (0..3).map(|i| &y[i] * &b[i]).sum();
        assert!(yb.is_negative());
    }
}
