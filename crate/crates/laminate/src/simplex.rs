//! Exact rational phase-I simplex for small equality-constrained
//! feasibility problems: find `x >= 0` with `A x = b`.
//!
//! Problem sizes in this crate stay at a handful of rows and at most a few
//! dozen columns, so a dense tableau with Bland's anti-cycling rule is both
//! simple and fast, and exact arithmetic removes any doubt near degenerate
//! faces.

use crate::scalar::Scalar;

pub enum Feasibility {
    Feasible(Vec<Scalar>),
    Infeasible,
}

/// Decides feasibility of `{ x >= 0 : A x = b }` and returns a basic
/// feasible point when one exists. All arithmetic is exact; inputs must be
/// exact scalars.
pub fn solve_feasibility(a: &[Vec<Scalar>], b: &[Scalar]) -> Feasibility {
    let m = a.len();
    assert_eq!(m, b.len());
    let n = if m == 0 { 0 } else { a[0].len() };

    // Tableau: n structural columns, m artificial columns, rhs.
    let mut tab: Vec<Vec<Scalar>> = Vec::with_capacity(m);
    for (row, rhs) in a.iter().zip(b) {
        assert_eq!(row.len(), n);
        let negate = rhs.is_negative();
        let mut r: Vec<Scalar> = row
            .iter()
            .map(|v| if negate { -v } else { v.clone() })
            .collect();
        // Artificial columns (identity filled in below), then the rhs.
        r.extend(std::iter::repeat_with(Scalar::zero).take(m));
        r.push(if negate { -rhs } else { rhs.clone() });
        tab.push(r);
    }
    for (i, row) in tab.iter_mut().enumerate() {
        row[n + i] = Scalar::one();
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Phase-I objective: minimize the sum of artificials. Maintain the
    // aggregated row `obj[j] = sum_i tab[i][j]` over rows whose basic
    // variable is artificial; a structural column with positive aggregate
    // can reduce the objective.
    loop {
        let mut obj = vec![Scalar::zero(); n + m + 1];
        for (i, row) in tab.iter().enumerate() {
            if basis[i] >= n {
                for (o, v) in obj.iter_mut().zip(row) {
                    *o = &*o + v;
                }
            }
        }
        if obj[n + m].is_zero() {
            break; // all artificials at zero: feasible
        }
        // Bland: smallest structural-or-artificial column improving the
        // objective (artificials never re-enter).
        let entering = (0..n).find(|&j| obj[j].is_positive());
        let Some(col) = entering else {
            return Feasibility::Infeasible;
        };
        // Ratio test with Bland's tie-break on the basis index.
        let mut pivot: Option<(usize, Scalar)> = None;
        for i in 0..m {
            if tab[i][col].is_positive() {
                let ratio = &tab[i][n + m] / &tab[i][col];
                let better = match &pivot {
                    None => true,
                    Some((pi, pr)) => {
                        ratio < *pr || (ratio == *pr && basis[i] < basis[*pi])
                    }
                };
                if better {
                    pivot = Some((i, ratio));
                }
            }
        }
        let Some((prow, _)) = pivot else {
            // Phase-I is bounded below by zero, so no pivot row means no
            // further progress: infeasible.
            return Feasibility::Infeasible;
        };
        pivot_on(&mut tab, prow, col);
        basis[prow] = col;
    }

    let mut x = vec![Scalar::zero(); n];
    for (i, &bi) in basis.iter().enumerate() {
        if bi < n {
            x[bi] = tab[i][n + m].clone();
        }
    }
    Feasibility::Feasible(x)
}

fn pivot_on(tab: &mut [Vec<Scalar>], prow: usize, pcol: usize) {
    let p = tab[prow][pcol].clone();
    for v in tab[prow].iter_mut() {
        *v = &*v / &p;
    }
    let pivot_row = tab[prow].clone();
    for (i, row) in tab.iter_mut().enumerate() {
        if i == prow || row[pcol].is_zero() {
            continue;
        }
        let factor = row[pcol].clone();
        for (v, pv) in row.iter_mut().zip(&pivot_row) {
            *v = &*v - &(&factor * pv);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d)
    }

    #[test]
    fn simple_feasible_system() {
        // x1 + x2 = 1, x1 - x2 = 0 -> x = (1/2, 1/2).
        let a = vec![
            vec![s(1, 1), s(1, 1)],
            vec![s(1, 1), s(-1, 1)],
        ];
        let b = vec![s(1, 1), s(0, 1)];
        match solve_feasibility(&a, &b) {
            Feasibility::Feasible(x) => {
                assert_eq!(x, vec![s(1, 2), s(1, 2)]);
            }
            Feasibility::Infeasible => panic!("should be feasible"),
        }
    }

    #[test]
    fn infeasible_system() {
        // x1 + x2 = 1 and x1 + x2 = 2 cannot hold together.
        let a = vec![
            vec![s(1, 1), s(1, 1)],
            vec![s(1, 1), s(1, 1)],
        ];
        let b = vec![s(1, 1), s(2, 1)];
        assert!(matches!(
            solve_feasibility(&a, &b),
            Feasibility::Infeasible
        ));
    }

    #[test]
    fn nonnegativity_binds() {
        // x1 - x2 = 1 with x >= 0 is feasible (x = (1,0)), but
        // -x1 - x2 = 1 is not.
        let a = vec![vec![s(1, 1), s(-1, 1)]];
        let b = vec![s(1, 1)];
        assert!(matches!(
            solve_feasibility(&a, &b),
            Feasibility::Feasible(_)
        ));
        let a = vec![vec![s(-1, 1), s(-1, 1)]];
        assert!(matches!(
            solve_feasibility(&a, &b),
            Feasibility::Infeasible
        ));
    }

    #[test]
    fn degenerate_system_terminates() {
        // Redundant constraints with a degenerate vertex; Bland's rule must
        // still terminate.
        let a = vec![
            vec![s(1, 1), s(1, 1), s(1, 1)],
            vec![s(2, 1), s(2, 1), s(2, 1)],
            vec![s(1, 1), s(0, 1), s(0, 1)],
        ];
        let b = vec![s(1, 1), s(2, 1), s(0, 1)];
        match solve_feasibility(&a, &b) {
            Feasibility::Feasible(x) => {
                assert_eq!(x[0], s(0, 1));
                assert_eq!(&x[1] + &x[2], s(1, 1));
            }
            Feasibility::Infeasible => panic!("should be feasible"),
        }
    }
}
