//! DC power transfer distribution factors.
//!
//! For every case (base plus one table per single-line outage) the reduced
//! bus susceptance matrix, reference bus removed, is factorized once with a
//! dense Cholesky decomposition and solved for each unit injection.

use rayon::prelude::*;
use thiserror::Error;

use super::Network;

/// Slack allowed on `|δ| ≤ 1` before a table is considered corrupt.
pub const PTDF_SANITY_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PtdfError {
    #[error("susceptance matrix is singular in case {case} (network disconnected)")]
    Singular { case: usize },
    #[error("contingency {contingency} islands the network")]
    Islanding { contingency: String },
    #[error("ptdf table must be {lines} lines x {buses} buses")]
    Shape { lines: usize, buses: usize },
    #[error("expected {expected} contingency ptdf tables, found {found}")]
    CaseCount { expected: usize, found: usize },
}

/// `δ^c_{lb}` for every case `c` (0 = base), line `l` and bus `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct PtdfTable {
    cases: Vec<Vec<Vec<f64>>>,
}

impl PtdfTable {
    pub(crate) fn from_cases(cases: Vec<Vec<Vec<f64>>>) -> Self {
        Self { cases }
    }

    pub fn num_cases(&self) -> usize {
        self.cases.len()
    }

    /// Lines × buses table of one case.
    pub fn case(&self, c: usize) -> &[Vec<f64>] {
        &self.cases[c]
    }

    pub fn get(&self, case: usize, line: usize, bus: usize) -> f64 {
        self.cases[case][line][bus]
    }

    /// Line flows in `case` for a vector of bus injections (the imbalance is
    /// absorbed at the reference bus).
    pub fn flows(&self, case: usize, injections: &[f64]) -> Vec<f64> {
        self.cases[case].iter().map(|row| row.iter().zip(injections).map(|(d, p)| d * p).sum()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.cases.iter().flatten().flatten().fold(0.0, |m, v| f64::max(m, v.abs()))
    }
}

/// Builds the PTDF table for the base topology and every contingency.
pub fn compute_ptdf(network: &Network) -> Result<PtdfTable, PtdfError> {
    let mut cases = Vec::with_capacity(network.num_cases());
    cases.push(case_ptdf(network, None).ok_or(PtdfError::Singular { case: 0 })?);
    for c in &network.contingencies {
        let table = case_ptdf(network, Some(c.line))
            .ok_or_else(|| PtdfError::Islanding { contingency: c.id.clone() })?;
        cases.push(table);
    }
    Ok(PtdfTable { cases })
}

fn case_ptdf(network: &Network, outage: Option<usize>) -> Option<Vec<Vec<f64>>> {
    let nb = network.buses.len();
    let nl = network.lines.len();
    let r = network.reference_bus;
    // reduced index for every non-reference bus
    let reduced: Vec<Option<usize>> = {
        let mut k = 0;
        (0..nb)
            .map(|b| {
                if b == r {
                    None
                } else {
                    k += 1;
                    Some(k - 1)
                }
            })
            .collect()
    };
    let n = nb - 1;
    let mut bmat = vec![0.0; n * n];
    for (l, line) in network.lines.iter().enumerate() {
        if Some(l) == outage {
            continue;
        }
        let y = 1.0 / line.reactance;
        let (f, t) = (reduced[line.from], reduced[line.to]);
        if let Some(f) = f {
            bmat[f * n + f] += y;
        }
        if let Some(t) = t {
            bmat[t * n + t] += y;
        }
        if let (Some(f), Some(t)) = (f, t) {
            bmat[f * n + t] -= y;
            bmat[t * n + f] -= y;
        }
    }
    let chol = cholesky(bmat, n)?;

    // angle response to a unit injection at each bus
    let angles: Vec<Vec<f64>> = (0..nb)
        .into_par_iter()
        .map(|b| {
            let mut theta = vec![0.0; nb];
            if let Some(k) = reduced[b] {
                let mut rhs = vec![0.0; n];
                rhs[k] = 1.0;
                let sol = cholesky_solve(&chol, n, rhs);
                for bb in 0..nb {
                    if let Some(kk) = reduced[bb] {
                        theta[bb] = sol[kk];
                    }
                }
            }
            theta
        })
        .collect();

    let mut table = vec![vec![0.0; nb]; nl];
    for (l, line) in network.lines.iter().enumerate() {
        if Some(l) == outage {
            continue;
        }
        for b in 0..nb {
            table[l][b] = (angles[b][line.from] - angles[b][line.to]) / line.reactance;
        }
    }
    Some(table)
}

/// Lower-triangular factor of a dense SPD matrix, `None` if not positive definite.
fn cholesky(mut a: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 1e-12 * scale {
            return None;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    Some(a)
}

fn cholesky_solve(l: &[f64], n: usize, mut b: Vec<f64>) -> Vec<f64> {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    b
}
