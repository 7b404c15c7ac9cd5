//! User/resource-element occupancy structure.

use crate::{Error, Result};

/// K×J binary occupancy matrix of a regular, overloaded SCMA system.
///
/// Indices are 0-based throughout: `users_on(k)` is the ascending set of
/// users sharing resource element `k`, `res_of(j)` the ascending set of
/// resource elements used by user `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorGraph {
    k: usize,
    j: usize,
    occupancy: Vec<Vec<bool>>,
    users_on: Vec<Vec<usize>>,
    res_of: Vec<Vec<usize>>,
}

impl FactorGraph {
    /// Builds the canonical regular graph for `(K, J, dv)`.
    ///
    /// `(4, 6, 2)` yields the graph whose columns enumerate every 2-subset of
    /// the four rows in lexicographic order; `(4m, 6m, 2)` yields `m`
    /// block-diagonal copies of it.
    pub fn build(k: usize, j: usize, dv: usize) -> Result<Self> {
        let unsupported = |reason: &str| Error::UnsupportedGraph {
            k,
            j,
            dv,
            reason: reason.to_string(),
        };
        if k == 0 || j == 0 || dv == 0 {
            return Err(unsupported("dimensions must be positive"));
        }
        if (j * dv) % k != 0 {
            return Err(unsupported("J*dv must be divisible by K"));
        }
        if dv != 2 {
            return Err(unsupported("only dv = 2 is supported"));
        }
        if k % 4 != 0 {
            return Err(unsupported("K must be a multiple of 4"));
        }
        let copies = k / 4;
        if j != 6 * copies {
            return Err(unsupported("J must equal 6K/4 for the replicated 4x6 base graph"));
        }

        const BASE: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];
        let mut occupancy = vec![vec![false; j]; k];
        for block in 0..copies {
            for (col, rows) in BASE.iter().enumerate() {
                for &r in rows {
                    occupancy[4 * block + r][6 * block + col] = true;
                }
            }
        }
        Self::from_occupancy(occupancy)
    }

    /// Validates an explicit occupancy matrix (`occupancy[k][j]`).
    pub fn from_occupancy(occupancy: Vec<Vec<bool>>) -> Result<Self> {
        let k = occupancy.len();
        if k == 0 {
            return Err(Error::InvalidGraph("no resource elements".into()));
        }
        let j = occupancy[0].len();
        if occupancy.iter().any(|row| row.len() != j) {
            return Err(Error::InvalidGraph("ragged occupancy matrix".into()));
        }
        if j <= k {
            return Err(Error::InvalidGraph(format!(
                "system must be overloaded (J={j} <= K={k})"
            )));
        }
        let users_on: Vec<Vec<usize>> = occupancy
            .iter()
            .map(|row| (0..j).filter(|&u| row[u]).collect())
            .collect();
        let res_of: Vec<Vec<usize>> = (0..j)
            .map(|u| (0..k).filter(|&r| occupancy[r][u]).collect())
            .collect();

        let dv = res_of[0].len();
        if dv == 0 || res_of.iter().any(|s| s.len() != dv) {
            return Err(Error::InvalidGraph("column sums are not all equal and positive".into()));
        }
        let eta = users_on[0].len();
        if eta == 0 || users_on.iter().any(|s| s.len() != eta) {
            return Err(Error::InvalidGraph("row sums are not all equal and positive".into()));
        }
        Ok(Self {
            k,
            j,
            occupancy,
            users_on,
            res_of,
        })
    }

    pub fn num_res(&self) -> usize {
        self.k
    }

    pub fn num_users(&self) -> usize {
        self.j
    }

    /// User degree (REs per user).
    pub fn dv(&self) -> usize {
        self.res_of[0].len()
    }

    /// RE degree (users per RE).
    pub fn eta(&self) -> usize {
        self.users_on[0].len()
    }

    pub fn occupied(&self, re: usize, user: usize) -> bool {
        self.occupancy[re][user]
    }

    pub fn users_on(&self, re: usize) -> &[usize] {
        &self.users_on[re]
    }

    pub fn res_of(&self, user: usize) -> &[usize] {
        &self.res_of[user]
    }

    pub fn occupancy(&self) -> &[Vec<bool>] {
        &self.occupancy
    }
}
