//! Dense two-phase simplex with Bland's rule, for small test oracles.
//!
//! Solves `min cᵀx` subject to `A_le x ≤ b_le`, `A_eq x = b_eq`, `x ≥ 0`.

#![allow(dead_code)]

const EPS: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Default)]
pub struct Lp {
    pub cost: Vec<f64>,
    pub le: Vec<(Vec<f64>, f64)>,
    pub eq: Vec<(Vec<f64>, f64)>,
}

impl Lp {
    pub fn new(cost: Vec<f64>) -> Self {
        Self {
            cost,
            ..Self::default()
        }
    }

    pub fn le(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.le.push((row, rhs));
        self
    }

    pub fn eq(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.eq.push((row, rhs));
        self
    }

    pub fn solve(&self) -> LpOutcome {
        let n = self.cost.len();
        let n_le = self.le.len();
        let m = n_le + self.eq.len();
        // columns: x (n), slacks (n_le), artificials (m), rhs
        let width = n + n_le + m + 1;
        let rhs_col = width - 1;
        let mut t = vec![vec![0.0; width]; m];
        let rows = self.le.iter().chain(self.eq.iter()).enumerate();
        for (i, (row, rhs)) in rows {
            assert_eq!(row.len(), n, "constraint row length");
            t[i][..n].copy_from_slice(row);
            if i < n_le {
                t[i][n + i] = 1.0;
            }
            t[i][rhs_col] = *rhs;
            if *rhs < 0.0 {
                for v in t[i].iter_mut() {
                    *v = -*v;
                }
            }
            t[i][n + n_le + i] = 1.0;
        }
        let mut basis: Vec<usize> = (0..m).map(|i| n + n_le + i).collect();

        let mut phase1 = vec![0.0; width - 1];
        for c in phase1.iter_mut().skip(n + n_le) {
            *c = 1.0;
        }
        if !run(&mut t, &mut basis, &phase1, width - 1) {
            return LpOutcome::Unbounded;
        }
        let infeasibility: f64 = basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| b >= n + n_le)
            .map(|(i, _)| t[i][rhs_col])
            .sum();
        if infeasibility > 1e-9 {
            return LpOutcome::Infeasible;
        }
        // drive zero-level artificials out of the basis
        for i in 0..m {
            if basis[i] >= n + n_le {
                if let Some(j) = (0..n + n_le).find(|&j| t[i][j].abs() > EPS) {
                    pivot(&mut t, &mut basis, i, j);
                }
            }
        }
        let mut phase2 = vec![0.0; width - 1];
        phase2[..n].copy_from_slice(&self.cost);
        if !run(&mut t, &mut basis, &phase2, n + n_le) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![0.0; n];
        for (i, &b) in basis.iter().enumerate() {
            if b < n {
                x[b] = t[i][rhs_col];
            }
        }
        let value = x.iter().zip(&self.cost).map(|(a, b)| a * b).sum();
        LpOutcome::Optimal { x, value }
    }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, c: usize) {
    let p = t[r][c];
    for v in t[r].iter_mut() {
        *v /= p;
    }
    let pivot_row = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != r {
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    basis[r] = c;
}

/// Minimizes `cost` over the columns `< allowed`; false when unbounded.
fn run(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], allowed: usize) -> bool {
    let rhs = t.first().map_or(0, |r| r.len() - 1);
    loop {
        let entering = (0..allowed).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let reduced = cost[j] - basis.iter().enumerate().map(|(i, &b)| cost[b] * t[i][j]).sum::<f64>();
            reduced < -EPS
        });
        let Some(c) = entering else { return true };
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in t.iter().enumerate() {
            if row[c] > EPS {
                let ratio = row[rhs] / row[c];
                best = match best {
                    None => Some((i, ratio)),
                    Some((k, r)) if ratio < r - EPS || (ratio <= r + EPS && basis[i] < basis[k]) => Some((i, ratio)),
                    keep => keep,
                };
            }
        }
        let Some((r, _)) = best else { return false };
        pivot(t, basis, r, c);
    }
}

/// Value and optimal strategies of the matrix game where the row player
/// minimizes `x₁ᵀFx₂`, given row-major `f` with `n1` rows.
pub struct GameLp {
    pub value: f64,
    pub row: Vec<f64>,
    pub column: Vec<f64>,
}

fn shift_of(f: &[f64]) -> f64 {
    1.0 - f.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn solve_game(f: &[f64], n1: usize, n2: usize) -> GameLp {
    let shift = shift_of(f);
    let g = |i: usize, j: usize| f[i * n2 + j] + shift;
    // row player: min v s.t. Σᵢ g_ij πᵢ ≤ v, Σπ = 1 (variables π, v)
    let mut row_lp = Lp::new([vec![0.0; n1], vec![1.0]].concat());
    for j in 0..n2 {
        let mut r: Vec<f64> = (0..n1).map(|i| g(i, j)).collect();
        r.push(-1.0);
        row_lp = row_lp.le(r, 0.0);
    }
    row_lp = row_lp.eq([vec![1.0; n1], vec![0.0]].concat(), 1.0);
    let LpOutcome::Optimal { x: rx, value: rv } = row_lp.solve() else {
        panic!("row LP failed")
    };
    // column player: max w s.t. Σⱼ g_ij qⱼ ≥ w
    let mut col_lp = Lp::new([vec![0.0; n2], vec![-1.0]].concat());
    for i in 0..n1 {
        let mut r: Vec<f64> = (0..n2).map(|j| -g(i, j)).collect();
        r.push(1.0);
        col_lp = col_lp.le(r, 0.0);
    }
    col_lp = col_lp.eq([vec![1.0; n2], vec![0.0]].concat(), 1.0);
    let LpOutcome::Optimal { x: cx, value: cv } = col_lp.solve() else {
        panic!("column LP failed")
    };
    assert!((rv + cv).abs() <= 1e-8 * rv.abs().max(1.0), "LP duality: {rv} vs {}", -cv);
    GameLp {
        value: rv - shift,
        row: rx[..n1].to_vec(),
        column: cx[..n2].to_vec(),
    }
}

/// L¹ distance from `point` to the row player's optimal strategies
/// `{π ≥ 0, Σπ = 1, Fᵀπ ≤ value + slack}`.
pub fn row_optimal_distance(f: &[f64], n1: usize, n2: usize, value: f64, point: &[f64], slack: f64) -> f64 {
    let constraints: Vec<Vec<f64>> = (0..n2).map(|j| (0..n1).map(|i| f[i * n2 + j]).collect()).collect();
    face_distance(&constraints, value + slack, point)
}

/// L¹ distance from `point` to the column player's optimal strategies
/// `{q ≥ 0, Σq = 1, Fq ≥ value − slack}`.
pub fn column_optimal_distance(f: &[f64], n1: usize, n2: usize, value: f64, point: &[f64], slack: f64) -> f64 {
    let constraints: Vec<Vec<f64>> = (0..n1).map(|i| (0..n2).map(|j| -f[i * n2 + j]).collect()).collect();
    face_distance(&constraints, -(value - slack), point)
}

/// `min Σ|π − p|` over `{π ≥ 0, Σπ = 1, aₖᵀπ ≤ bound}`, with
/// variables `(π, d⁺, d⁻)` and `π − d⁺ + d⁻ = p`.
fn face_distance(constraints: &[Vec<f64>], bound: f64, point: &[f64]) -> f64 {
    let n = point.len();
    let mut lp = Lp::new([vec![0.0; n], vec![1.0; 2 * n]].concat());
    for a in constraints {
        lp = lp.le([a.clone(), vec![0.0; 2 * n]].concat(), bound);
    }
    lp = lp.eq([vec![1.0; n], vec![0.0; 2 * n]].concat(), 1.0);
    for k in 0..n {
        let mut row = vec![0.0; 3 * n];
        row[k] = 1.0;
        row[n + k] = -1.0;
        row[2 * n + k] = 1.0;
        lp = lp.eq(row, point[k]);
    }
    match lp.solve() {
        LpOutcome::Optimal { value, .. } => value,
        other => panic!("distance LP failed: {other:?}"),
    }
}
