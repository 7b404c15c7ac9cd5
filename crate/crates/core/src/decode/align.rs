use crate::graph::FactorGraph;
use crate::txchain::DelayProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Pilot,
    Data,
}

/// User `user` contributes its symbol `symbol` (frame index, pilot first).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleEntry {
    pub user: usize,
    pub symbol: usize,
    pub phase: Phase,
}

/// Which (user, symbol) pairs are present at every sample of the padded frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentSchedule {
    pilot_len: usize,
    data_len: usize,
    samples: Vec<Vec<ScheduleEntry>>,
}

impl AlignmentSchedule {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn at(&self, n: usize) -> &[ScheduleEntry] {
        &self.samples[n]
    }

    pub fn pilot_len(&self) -> usize {
        self.pilot_len
    }

    pub fn data_len(&self) -> usize {
        self.data_len
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[ScheduleEntry])> {
        self.samples.iter().enumerate().map(|(n, v)| (n, v.as_slice()))
    }
}

/// User `j` is active at samples `d_j <= n < d_j + S + N`, carrying symbol
/// `n - d_j`; symbols at or beyond `S` are data.
pub fn align(delays: &DelayProfile, s: usize, n: usize, graph: &FactorGraph) -> AlignmentSchedule {
    let frame = s + n;
    let total = frame + delays.max_delay();
    let users = graph.num_users().min(delays.num_users());
    let samples = (0..total)
        .map(|t| {
            (0..users)
                .filter_map(|user| {
                    let d = delays.delay(user);
                    (d <= t && t < d + frame).then(|| {
                        let symbol = t - d;
                        ScheduleEntry {
                            user,
                            symbol,
                            phase: if symbol < s { Phase::Pilot } else { Phase::Data },
                        }
                    })
                })
                .collect()
        })
        .collect();
    AlignmentSchedule {
        pilot_len: s,
        data_len: n,
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_user_example() {
        // users 0 and 1 with delays 0 and 2; S = 3, N = 2
        let g = FactorGraph::build(4, 6, 2).unwrap();
        let d = DelayProfile::new(vec![0, 2, 0, 0, 0, 0], 2).unwrap();
        let sched = align(&d, 3, 2, &g);
        let at4 = sched.at(4);
        let u0 = at4.iter().find(|e| e.user == 0).unwrap();
        let u1 = at4.iter().find(|e| e.user == 1).unwrap();
        assert_eq!((u0.symbol, u0.phase), (4, Phase::Data));
        assert_eq!((u1.symbol, u1.phase), (2, Phase::Pilot));
        assert_eq!(sched.len(), 7);
    }

    #[test]
    fn zero_delays_are_synchronous() {
        let g = FactorGraph::build(4, 6, 2).unwrap();
        let sched = align(&DelayProfile::zeros(6, 3), 4, 5, &g);
        for (n, entries) in sched.iter() {
            if n < 9 {
                assert_eq!(entries.len(), 6);
                assert!(entries.iter().all(|e| e.symbol == n));
            } else {
                assert!(entries.is_empty());
            }
        }
    }

    #[test]
    fn every_symbol_appears_once() {
        let g = FactorGraph::build(4, 6, 2).unwrap();
        let d = DelayProfile::new(vec![3, 0, 1, 5, 2, 5], 5).unwrap();
        let (s, n) = (6, 4);
        let sched = align(&d, s, n, &g);
        for user in 0..6 {
            let mut symbols: Vec<usize> = sched
                .iter()
                .flat_map(|(_, es)| es.iter().filter(|e| e.user == user).map(|e| e.symbol).collect::<Vec<_>>())
                .collect();
            assert_eq!(symbols.len(), s + n);
            symbols.sort_unstable();
            assert_eq!(symbols, (0..s + n).collect::<Vec<_>>());
        }
    }
}
