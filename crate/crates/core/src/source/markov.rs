use serde::Serialize;

use crate::alphabet::{Alphabet, Symbol};
use crate::error::{model, Result};

const ROW_TOL: f64 = 1e-12;
const FIXED_POINT_TOL: f64 = 1e-10;

/// Stationary, irreducible and aperiodic finite-state Markov chain observed
/// directly.
#[derive(Debug, Clone, Serialize)]
pub struct MarkovSource {
    alphabet: Alphabet,
    transition: Vec<Vec<f64>>,
    stationary: Vec<f64>,
}

impl MarkovSource {
    pub fn new(alphabet: Alphabet, transition: Vec<Vec<f64>>) -> Result<Self> {
        validate_stochastic(&transition, alphabet.len())?;
        let stationary = stationary_law(&transition)?;
        if let Some(s) = stationary.iter().position(|&p| p <= 0.0) {
            return model(format!(
                "symbol {:?} has zero stationary probability",
                alphabet.name(s as Symbol)
            ));
        }
        Ok(MarkovSource {
            alphabet,
            transition,
            stationary,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// `P(x | prev)`.
    pub fn p(&self, prev: Symbol, x: Symbol) -> f64 {
        self.transition[prev as usize][x as usize]
    }

    pub fn word_probability(&self, word: &[Symbol]) -> f64 {
        match word.split_first() {
            None => 1.0,
            Some((&first, rest)) => {
                let mut p = self.stationary[first as usize];
                let mut prev = first;
                for &x in rest {
                    p *= self.p(prev, x);
                    prev = x;
                }
                p
            }
        }
    }
}

pub(crate) fn validate_stochastic(matrix: &[Vec<f64>], size: usize) -> Result<()> {
    if matrix.len() != size {
        return model(format!(
            "transition matrix has {} rows, expected {size}",
            matrix.len()
        ));
    }
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != size {
            return model(format!(
                "row {i} has {} entries, expected {size}",
                row.len()
            ));
        }
        if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return model(format!("row {i} has an entry outside [0,1]"));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_TOL {
            return model(format!("row {i} sums to {sum}"));
        }
    }
    Ok(())
}

/// A non-negative matrix is irreducible and aperiodic iff some power is
/// entrywise positive; Wielandt's bound `(m-1)^2 + 1` caps the search.
pub(crate) fn is_primitive(matrix: &[Vec<f64>]) -> bool {
    let m = matrix.len();
    let adj: Vec<Vec<bool>> = matrix
        .iter()
        .map(|row| row.iter().map(|&p| p > 0.0).collect())
        .collect();
    let mut reach = adj.clone();
    let bound = (m - 1) * (m - 1) + 1;
    for _ in 1..bound {
        if reach.iter().all(|row| row.iter().all(|&b| b)) {
            return true;
        }
        let mut next = vec![vec![false; m]; m];
        for i in 0..m {
            for k in 0..m {
                if reach[i][k] {
                    for j in 0..m {
                        next[i][j] |= adj[k][j];
                    }
                }
            }
        }
        reach = next;
    }
    reach.iter().all(|row| row.iter().all(|&b| b))
}

/// Unique solution of `π P = π`, `Σ π = 1` for a primitive stochastic matrix.
pub fn stationary_law(matrix: &[Vec<f64>]) -> Result<Vec<f64>> {
    let m = matrix.len();
    if m == 0 {
        return model("empty transition matrix");
    }
    if !is_primitive(matrix) {
        return model("chain is reducible or periodic");
    }
    // rows of (P^T - I), last equation replaced by the normalization
    let mut a: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row: Vec<f64> = (0..m).map(|j| matrix[j][i]).collect();
            row[i] -= 1.0;
            row.push(0.0);
            row
        })
        .collect();
    a[m - 1] = vec![1.0; m + 1];
    let pi = solve_augmented(a)?;
    let residual = (0..m)
        .map(|j| ((0..m).map(|i| pi[i] * matrix[i][j]).sum::<f64>() - pi[j]).abs())
        .fold(0.0, f64::max);
    if residual > FIXED_POINT_TOL {
        return model(format!("stationary law residual {residual:e} too large"));
    }
    Ok(pi)
}

/// Gaussian elimination with partial pivoting on an `m × (m+1)` augmented system.
pub(crate) fn solve_augmented(mut a: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let m = a.len();
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() < 1e-300 {
            return model("singular linear system");
        }
        a.swap(col, pivot);
        for row in col + 1..m {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..=m {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let s: f64 = (row + 1..m).map(|k| a[row][k] * x[k]).sum();
        x[row] = (a[row][m] - s) / a[row][row];
    }
    Ok(x)
}

pub(crate) fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = a.len();
    let p = b[0].len();
    let mut out = vec![vec![0.0; p]; m];
    for i in 0..m {
        for k in 0..b.len() {
            let aik = a[i][k];
            if aik != 0.0 {
                for j in 0..p {
                    out[i][j] += aik * b[k][j];
                }
            }
        }
    }
    out
}

/// `φ(ℓ) = max_i TV(P^{ℓ+1}(i,·), π)` for `ℓ = 1..=max_lag`, with `φ(0) = 1`.
pub(crate) fn tv_mixing_profile(
    matrix: &[Vec<f64>],
    stationary: &[f64],
    max_lag: usize,
) -> Vec<f64> {
    let mut phi = vec![1.0];
    let mut power = matrix.to_vec();
    for _ in 1..=max_lag {
        power = mat_mul(&power, matrix);
        let worst = power
            .iter()
            .map(|row| {
                0.5 * row
                    .iter()
                    .zip(stationary)
                    .map(|(p, s)| (p - s).abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        phi.push(worst.min(1.0));
    }
    phi
}
