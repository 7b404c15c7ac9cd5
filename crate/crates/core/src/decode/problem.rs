use crate::channel::ChannelRealization;
use crate::codebook::CodebookSet;
use crate::{Error, Result, C64};

/// A user with an unknown data symbol in the current sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveUser {
    pub user: usize,
    /// Resource elements carrying this user's symbol.
    pub res: Vec<usize>,
    /// `points[m][i]`: received contribution of candidate `m` on `res[i]`
    /// (channel applied).
    pub points: Vec<Vec<C64>>,
}

impl ActiveUser {
    pub fn num_candidates(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.points.len().trailing_zeros() as usize
    }
}

/// One sample's detection problem: the K-vector `y` (known interference
/// already removed) and the users whose data symbols it carries.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveContext {
    pub y: Vec<C64>,
    pub users: Vec<ActiveUser>,
}

impl ActiveContext {
    /// Candidates of `users` taken from their codebooks and weighted by the
    /// channel.
    pub fn from_codebooks(
        y: Vec<C64>,
        users: &[usize],
        codebooks: &CodebookSet,
        channel: &ChannelRealization,
    ) -> Self {
        let graph = codebooks.graph();
        let users = users
            .iter()
            .map(|&u| {
                let res = graph.res_of(u).to_vec();
                let points = codebooks
                    .user(u)
                    .codewords()
                    .iter()
                    .map(|cw| res.iter().map(|&k| channel.coefficient(k, u) * cw[k]).collect())
                    .collect();
                ActiveUser { user: u, res, points }
            })
            .collect();
        Self { y, users }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.y.len();
        for u in &self.users {
            let m = u.points.len();
            if m < 2 || !m.is_power_of_two() {
                return Err(Error::Dimension(format!("user {} has {m} candidates", u.user)));
            }
            if u.res.iter().any(|&r| r >= k) {
                return Err(Error::Dimension(format!("user {} uses an RE beyond K={k}", u.user)));
            }
            if u.points.iter().any(|p| p.len() != u.res.len()) {
                return Err(Error::Dimension(format!("user {} candidate length mismatch", u.user)));
            }
        }
        Ok(())
    }

    /// Number of joint hypotheses, saturating.
    pub fn combinations(&self) -> u128 {
        self.users
            .iter()
            .fold(1u128, |acc, u| acc.saturating_mul(u.points.len() as u128))
    }

    /// True when the user/RE graph induced by the active users has no cycle.
    pub fn is_tree(&self) -> bool {
        let k = self.y.len();
        let mut parent: Vec<usize> = (0..k + self.users.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (i, u) in self.users.iter().enumerate() {
            for &re in &u.res {
                let (a, b) = (find(&mut parent, k + i), find(&mut parent, re));
                if a == b {
                    return false;
                }
                parent[a] = b;
            }
        }
        true
    }

    /// Per-RE list of `(active user index, position within that user's res)`.
    pub(crate) fn re_incidence(&self) -> Vec<Vec<(usize, usize)>> {
        let mut inc = vec![Vec::new(); self.y.len()];
        for (i, u) in self.users.iter().enumerate() {
            for (pos, &re) in u.res.iter().enumerate() {
                inc[re].push((i, pos));
            }
        }
        inc
    }
}

/// Bit LLRs for every active user of one sample, in context order.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleLlrs {
    pub users: Vec<usize>,
    /// `llrs[i][b]` for active user `i`, big-endian bit `b`.
    pub llrs: Vec<Vec<f64>>,
}

impl SampleLlrs {
    pub fn empty() -> Self {
        Self {
            users: Vec::new(),
            llrs: Vec::new(),
        }
    }

    /// Hard decisions, bit 0 where the LLR is non-negative.
    pub fn decisions(&self) -> Vec<Vec<u8>> {
        self.llrs
            .iter()
            .map(|l| l.iter().map(|&v| u8::from(v < 0.0)).collect())
            .collect()
    }
}
