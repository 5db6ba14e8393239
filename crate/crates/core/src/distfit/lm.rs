//! Small dense Levenberg–Marquardt solver with a finite-difference Jacobian.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
}

/// Minimize `Σ r_i(p)²`. Non-finite residuals are treated as an infinitely
/// bad step.
pub fn minimize<F>(residuals: F, start: &[f64], max_iter: usize) -> Result<LmOutcome>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let cost_of = |r: &[f64]| -> f64 {
        let c: f64 = r.iter().map(|v| v * v).sum();
        if c.is_finite() {
            c
        } else {
            f64::INFINITY
        }
    };
    let mut p = start.to_vec();
    let mut r = residuals(&p);
    let mut cost = cost_of(&r);
    if !cost.is_finite() {
        return Err(Error::Fit {
            reason: "non-finite residual at the starting point".into(),
            residual: cost,
        });
    }
    let k = p.len();
    let m = r.len();
    let mut lambda = 1e-3;

    for iter in 0..max_iter {
        let jac = jacobian(&residuals, &p, m);
        let mut a = vec![vec![0.0; k]; k];
        let mut g = vec![0.0; k];
        for i in 0..m {
            for u in 0..k {
                g[u] += jac[u][i] * r[i];
                for v in 0..=u {
                    a[u][v] += jac[u][i] * jac[v][i];
                }
            }
        }
        for u in 0..k {
            for v in 0..u {
                a[v][u] = a[u][v];
            }
        }
        let gmax = g.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        if gmax <= 1e-15 * cost.max(1e-300).sqrt() || cost == 0.0 {
            return Ok(LmOutcome { params: p, cost, iterations: iter });
        }

        loop {
            let mut damped = a.clone();
            for u in 0..k {
                damped[u][u] += lambda * a[u][u].max(1e-30);
            }
            let step = solve(damped, g.iter().map(|v| -v).collect());
            let Some(step) = step else {
                lambda *= 10.0;
                if lambda > 1e20 {
                    return Ok(LmOutcome { params: p, cost, iterations: iter });
                }
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(&step).map(|(a, b)| a + b).collect();
            let r_new = residuals(&trial);
            let c_new = cost_of(&r_new);
            if c_new < cost {
                let small_step = step
                    .iter()
                    .zip(&trial)
                    .all(|(s, x)| s.abs() <= 1e-12 * (x.abs() + 1e-12));
                let small_gain = cost - c_new <= 1e-14 * cost;
                p = trial;
                r = r_new;
                cost = c_new;
                lambda = (lambda / 3.0).max(1e-12);
                if small_step || small_gain {
                    return Ok(LmOutcome { params: p, cost, iterations: iter + 1 });
                }
                break;
            }
            lambda *= 4.0;
            if lambda > 1e20 {
                // no descent direction left at this precision
                return Ok(LmOutcome { params: p, cost, iterations: iter });
            }
        }
    }
    Err(Error::Fit {
        reason: format!("no convergence within {max_iter} iterations"),
        residual: cost,
    })
}

fn jacobian<F>(f: &F, p: &[f64], m: usize) -> Vec<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut cols = Vec::with_capacity(p.len());
    let mut x = p.to_vec();
    for j in 0..p.len() {
        let h = 1e-6 * p[j].abs().max(1e-3);
        x[j] = p[j] + h;
        let up = f(&x);
        x[j] = p[j] - h;
        let down = f(&x);
        x[j] = p[j];
        let col = (0..m)
            .map(|i| {
                let d = (up[i] - down[i]) / (2.0 * h);
                if d.is_finite() {
                    d
                } else {
                    0.0
                }
            })
            .collect();
        cols.push(col);
    }
    cols
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
