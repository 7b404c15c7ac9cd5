//! Per-user sparse codebooks and the bit/codeword mapping.
//!
//! Bit words are big-endian: bit 0 of a word is the most significant bit of
//! the codeword index, so `[0, 0]` selects codeword 0 and `[1, 0]` codeword 2
//! when `M = 4`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::graph::FactorGraph;
use crate::{Error, Result, C64};

/// Codewords within this distance are considered identical.
const MEMBER_TOL: f64 = 1e-12;

/// One user's codebook: `M` codewords of length `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    user: usize,
    codewords: Vec<Vec<C64>>,
}

impl Codebook {
    pub fn user(&self) -> usize {
        self.user
    }

    pub fn size(&self) -> usize {
        self.codewords.len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.codewords.len().trailing_zeros() as usize
    }

    pub fn codeword(&self, index: usize) -> &[C64] {
        &self.codewords[index]
    }

    pub fn codewords(&self) -> &[Vec<C64>] {
        &self.codewords
    }

    /// Codeword selected by a big-endian bit word.
    pub fn map_bits(&self, bits: &[u8]) -> Result<&[C64]> {
        let nb = self.bits_per_symbol();
        if bits.len() != nb {
            return Err(Error::BitCount {
                expected: nb,
                actual: bits.len(),
            });
        }
        Ok(&self.codewords[bits_to_index(bits)])
    }

    /// Index of an exact codebook member.
    pub fn index_of(&self, codeword: &[C64]) -> Result<usize> {
        self.codewords
            .iter()
            .position(|c| {
                c.len() == codeword.len()
                    && c.iter().zip(codeword).all(|(a, b)| (a - b).norm() <= MEMBER_TOL)
            })
            .ok_or(Error::NotACodeword { user: self.user })
    }

    /// Inverse of [`Codebook::map_bits`].
    pub fn demap_codeword(&self, codeword: &[C64]) -> Result<Vec<u8>> {
        let idx = self.index_of(codeword)?;
        Ok(index_to_bits(idx, self.bits_per_symbol()))
    }
}

pub fn bits_to_index(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b != 0))
}

pub fn index_to_bits(index: usize, nb: usize) -> Vec<u8> {
    (0..nb).map(|i| ((index >> (nb - 1 - i)) & 1) as u8).collect()
}

/// Bit `i` (big-endian) of codeword index `index` in a `nb`-bit word.
#[inline]
pub fn bit_of(index: usize, i: usize, nb: usize) -> u8 {
    ((index >> (nb - 1 - i)) & 1) as u8
}

/// Unit-energy scalar constellation, Gray labelled for QPSK.
fn base_constellation(m: usize) -> Vec<C64> {
    match m {
        2 => vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)],
        _ => {
            let a = std::f64::consts::FRAC_1_SQRT_2;
            // first bit -> sign of the real part, second -> sign of the imaginary part
            vec![C64::new(a, a), C64::new(a, -a), C64::new(-a, a), C64::new(-a, -a)]
        }
    }
}

/// A factor graph together with every user's codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookSet {
    graph: FactorGraph,
    m: usize,
    codebooks: Vec<Codebook>,
}

impl CodebookSet {
    /// Deterministic phase-rotated BPSK (`M = 2`) or QPSK (`M = 4`) codebooks.
    ///
    /// User `j` places the rotated scalar symbol `a_m e^{i theta_j} / sqrt(dv)`
    /// on each of its resource elements, with `theta_j = (2 pi / M) j / J`.
    /// The rotation step divides the constellation's symmetry angle `2 pi / M`
    /// by `J`, so no two users of the system share a scalar constellation.
    pub fn default_for(graph: &FactorGraph, m: usize) -> Result<Self> {
        if m != 2 && m != 4 {
            return Err(Error::UnsupportedCodebookSize(m));
        }
        let k = graph.num_res();
        let j_total = graph.num_users();
        let scale = 1.0 / (graph.dv() as f64).sqrt();
        let base = base_constellation(m);
        let codebooks = (0..j_total)
            .map(|user| {
                let theta = 2.0 * PI / m as f64 * user as f64 / j_total as f64;
                let rot = C64::from_polar(scale, theta);
                let codewords = base
                    .iter()
                    .map(|&a| {
                        let mut cw = vec![C64::new(0.0, 0.0); k];
                        for &re in graph.res_of(user) {
                            cw[re] = a * rot;
                        }
                        cw
                    })
                    .collect();
                Codebook { user, codewords }
            })
            .collect();
        Ok(Self {
            graph: graph.clone(),
            m,
            codebooks,
        })
    }

    /// Builds a set from explicit codewords, validating every invariant.
    pub fn from_parts(graph: FactorGraph, codewords: Vec<Vec<Vec<C64>>>) -> Result<Self> {
        let k = graph.num_res();
        if codewords.len() != graph.num_users() {
            return Err(Error::InvalidCodebook(format!(
                "{} codebooks for {} users",
                codewords.len(),
                graph.num_users()
            )));
        }
        let m = codewords[0].len();
        if m < 2 || !m.is_power_of_two() {
            return Err(Error::InvalidCodebook(format!("M={m} is not a power of two >= 2")));
        }
        let mut codebooks = Vec::with_capacity(codewords.len());
        for (user, cws) in codewords.into_iter().enumerate() {
            if cws.len() != m {
                return Err(Error::InvalidCodebook(format!("user {user} has {} codewords", cws.len())));
            }
            let mut energy = 0.0;
            for (idx, cw) in cws.iter().enumerate() {
                if cw.len() != k {
                    return Err(Error::InvalidCodebook(format!(
                        "user {user} codeword {idx} has length {}",
                        cw.len()
                    )));
                }
                if cw.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                    return Err(Error::NonFinite("codebook"));
                }
                for (re, c) in cw.iter().enumerate() {
                    let nonzero = c.norm() > 0.0;
                    if nonzero != graph.occupied(re, user) {
                        return Err(Error::InvalidCodebook(format!(
                            "user {user} codeword {idx} violates the sparsity pattern at RE {re}"
                        )));
                    }
                }
                energy += cw.iter().map(|c| c.norm_sqr()).sum::<f64>();
            }
            let avg = energy / m as f64;
            if (avg - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidCodebook(format!(
                    "user {user} average codeword energy {avg} != 1"
                )));
            }
            for a in 0..m {
                for b in (a + 1)..m {
                    if cws[a].iter().zip(&cws[b]).all(|(x, y)| (x - y).norm() <= MEMBER_TOL) {
                        return Err(Error::InvalidCodebook(format!(
                            "user {user} codewords {a} and {b} coincide"
                        )));
                    }
                }
            }
            codebooks.push(Codebook { user, codewords: cws });
        }
        Ok(Self { graph, m, codebooks })
    }

    pub fn graph(&self) -> &FactorGraph {
        &self.graph
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.m.trailing_zeros() as usize
    }

    pub fn user(&self, j: usize) -> &Codebook {
        &self.codebooks[j]
    }

    pub fn codebooks(&self) -> &[Codebook] {
        &self.codebooks
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = CodebookDoc {
            k: self.graph.num_res(),
            j: self.graph.num_users(),
            m: self.m,
            occupancy: self
                .graph
                .occupancy()
                .iter()
                .map(|row| row.iter().map(|&b| u8::from(b)).collect())
                .collect(),
            codebooks: self.codebooks.iter().map(|c| c.codewords.clone()).collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CodebookDoc = serde_json::from_str(text)?;
        if doc.occupancy.len() != doc.k || doc.occupancy.iter().any(|r| r.len() != doc.j) {
            return Err(Error::InvalidGraph("occupancy shape disagrees with K, J".into()));
        }
        let occupancy = doc
            .occupancy
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&v| match v {
                        0 => Ok(false),
                        1 => Ok(true),
                        other => Err(Error::InvalidGraph(format!("occupancy entry {other}"))),
                    })
                    .collect::<Result<Vec<bool>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let graph = FactorGraph::from_occupancy(occupancy)?;
        let set = Self::from_parts(graph, doc.codebooks)?;
        if set.m != doc.m {
            return Err(Error::InvalidCodebook(format!("M={} but codebooks hold {}", doc.m, set.m)));
        }
        Ok(set)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodebookDoc {
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "J")]
    j: usize,
    #[serde(rename = "M")]
    m: usize,
    occupancy: Vec<Vec<u8>>,
    #[serde(with = "crate::serde_complex::vec3")]
    codebooks: Vec<Vec<Vec<C64>>>,
}
