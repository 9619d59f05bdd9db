//! Exhaustive search for per-node repair optima over small fields.
//!
//! Left-multiplying a repair matrix by any invertible 2x2 matrix changes
//! neither rank nor nonzero-column counts of the products M*H_j, so
//! repair behavior only depends on the row space of M. The oracle
//! therefore enumerates one RREF representative per 2-dimensional row
//! space of F_q^4 — (q^2+1)(q^2+q+1) of them — instead of all q^8
//! matrices, and minimizes bandwidth and I/O per node over that list.
//! Averages are exact rationals; no floating point is involved anywhere.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::{CodeSpec, ConstructionId, ELL};
use crate::gf::Field;
use crate::linalg::{LinalgError, Mat};

/// Enumeration guard: largest field order the oracle will scan.
pub const MAX_ORACLE_FIELD: u32 = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("field order {q} exceeds the oracle guard ({max})")]
    FieldTooLarge { q: u32, max: u32 },
    #[error("code is not MDS")]
    NotMds,
    #[error("no qualifying repair matrix found for node {node}")]
    WitnessNotFound { node: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Exact rational with a positive denominator, reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: i64,
    pub den: i64,
}

impl Ratio {
    pub fn new(num: i64, den: i64) -> Ratio {
        assert!(den != 0, "zero denominator");
        let sign = if den < 0 { -1 } else { 1 };
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()).max(1) as i64;
        Ratio {
            num: sign * num / g,
            den: sign * den / g,
        }
    }

    pub fn from_int(v: i64) -> Ratio {
        Ratio { num: v, den: 1 }
    }

    pub fn sub(self, other: Ratio) -> Ratio {
        Ratio::new(
            self.num * other.den - other.num * self.den,
            self.den * other.den,
        )
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let lhs = self.num as i128 * other.den as i128;
        let rhs = other.num as i128 * self.den as i128;
        lhs.cmp(&rhs)
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

/// True minima for one node, with the first attaining representatives.
#[derive(Debug, Clone)]
pub struct NodeOptimum {
    pub node: usize,
    /// Minimal bandwidth over matrices that repair this node.
    pub beta: usize,
    /// Minimal I/O over matrices that repair this node.
    pub gamma: usize,
    /// Minimal I/O over the larger set of full-rank matrices whose
    /// product at this node merely has both columns nonzero.
    pub gamma_relaxed: usize,
    pub witness_bw: Mat,
    pub witness_io: Mat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerNodeReport {
    pub node: usize,
    pub beta: usize,
    pub gamma: usize,
    pub gamma_relaxed: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundValues {
    pub avg_beta: Ratio,
    pub max_beta: usize,
    pub avg_gamma: Ratio,
    pub max_gamma: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatisfiedFlags {
    pub avg_beta: bool,
    pub max_beta: bool,
    pub avg_gamma: bool,
    pub max_gamma: bool,
}

/// Observed optima against the four lower bounds 5k/4, ceil(5k/4),
/// (4k+1)/3 and ceil((4k+1)/3).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub k: usize,
    pub q: u32,
    pub construction: ConstructionId,
    pub per_node: Vec<PerNodeReport>,
    pub avg_beta: Ratio,
    pub max_beta: usize,
    pub avg_gamma: Ratio,
    pub max_gamma: usize,
    pub bounds: BoundValues,
    pub satisfied: SatisfiedFlags,
}

impl BoundsReport {
    pub fn all_satisfied(&self) -> bool {
        self.satisfied.avg_beta
            && self.satisfied.max_beta
            && self.satisfied.avg_gamma
            && self.satisfied.max_gamma
    }
}

/// The four lower bounds for a given k.
pub fn lower_bounds(k: usize) -> BoundValues {
    BoundValues {
        avg_beta: Ratio::new(5 * k as i64, 4),
        max_beta: ceil_div(5 * k, 4),
        avg_gamma: Ratio::new(4 * k as i64 + 1, 3),
        max_gamma: ceil_div(4 * k + 1, 3),
    }
}

fn guard(field: &Field) -> Result<(), OracleError> {
    if field.order() > MAX_ORACLE_FIELD {
        return Err(OracleError::FieldTooLarge {
            q: field.order(),
            max: MAX_ORACLE_FIELD,
        });
    }
    Ok(())
}

/// One RREF representative per 2-dimensional row space of F_q^4, in a
/// fixed deterministic order: pivot-column pairs ascending
/// lexicographically, free entries counting up with the last (row-major)
/// free position moving fastest.
pub fn enumerate_row_spaces(field: &Field) -> Result<Vec<Mat>, OracleError> {
    guard(field)?;
    let q = field.order();
    let width = 2 * ELL;
    let mut out = Vec::new();
    for p1 in 0..width {
        for p2 in (p1 + 1)..width {
            let mut free = Vec::new();
            for c in (p1 + 1)..width {
                if c != p2 {
                    free.push((0usize, c));
                }
            }
            for c in (p2 + 1)..width {
                free.push((1usize, c));
            }
            let mut values = vec![0u32; free.len()];
            loop {
                let mut m = Mat::zeros(field, ELL, width);
                m.set(0, p1, field.one());
                m.set(1, p2, field.one());
                for (slot, &(r, c)) in free.iter().enumerate() {
                    m.set(r, c, field.elem(values[slot]));
                }
                out.push(m);
                if !advance(&mut values, q) {
                    break;
                }
            }
        }
    }
    debug_assert_eq!(out.len() as u64, expected_row_space_count(q));
    Ok(out)
}

// odometer step, last position fastest; false once all values wrapped
fn advance(values: &mut [u32], q: u32) -> bool {
    for v in values.iter_mut().rev() {
        *v += 1;
        if *v < q {
            return true;
        }
        *v = 0;
    }
    false
}

/// (q^2+1)(q^2+q+1): the number of 2-dimensional subspaces of F_q^4.
pub fn expected_row_space_count(q: u32) -> u64 {
    let q = q as u64;
    (q * q + 1) * (q * q + q + 1)
}

// rank and nonzero-column count of a 2x2 product, without allocation
fn profile_2x2(m: &Mat) -> (usize, usize) {
    let f = m.field();
    let (a, b, c, d) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
    let nz = usize::from(a.0 != 0 || c.0 != 0) + usize::from(b.0 != 0 || d.0 != 0);
    let det = f.sub(f.mul(a, d), f.mul(b, c));
    let rk = if det.0 != 0 {
        2
    } else if nz == 0 {
        0
    } else {
        1
    };
    (rk, nz)
}

#[derive(Clone)]
struct MinAcc {
    beta: Vec<(usize, usize)>,
    gamma: Vec<(usize, usize)>,
    gamma_relaxed: Vec<(usize, usize)>,
    // per-worker scratch, ignored by merge
    rks: Vec<usize>,
    nzs: Vec<usize>,
}

impl MinAcc {
    fn new(n: usize) -> MinAcc {
        let sentinel = vec![(usize::MAX, usize::MAX); n];
        MinAcc {
            beta: sentinel.clone(),
            gamma: sentinel.clone(),
            gamma_relaxed: sentinel,
            rks: vec![0; n],
            nzs: vec![0; n],
        }
    }

    fn merge(mut self, other: MinAcc) -> MinAcc {
        for i in 0..self.beta.len() {
            self.beta[i] = self.beta[i].min(other.beta[i]);
            self.gamma[i] = self.gamma[i].min(other.gamma[i]);
            self.gamma_relaxed[i] = self.gamma_relaxed[i].min(other.gamma_relaxed[i]);
        }
        self
    }
}

/// Computes beta_i, gamma_i and the relaxed gamma for every node by
/// scanning all row-space representatives. Deterministic regardless of
/// worker count: ties break on the enumeration index.
pub fn node_optima(code: &CodeSpec) -> Result<Vec<NodeOptimum>, OracleError> {
    guard(code.field())?;
    if !code.mds_check().ok {
        return Err(OracleError::NotMds);
    }
    let reps = enumerate_row_spaces(code.field())?;
    let n = code.n();

    let acc = reps
        .par_iter()
        .enumerate()
        .fold(
            || MinAcc::new(n),
            |mut acc, (idx, m)| {
                let mut rk_sum = 0;
                let mut nz_sum = 0;
                for j in 1..=n {
                    let mh = m.mul(code.h_block(j)).expect("2x4 times 4x2");
                    let (rk, nz) = profile_2x2(&mh);
                    acc.rks[j - 1] = rk;
                    acc.nzs[j - 1] = nz;
                    rk_sum += rk;
                    nz_sum += nz;
                }
                let bw = rk_sum - ELL;
                let io = nz_sum - ELL;
                for i in 0..n {
                    if acc.rks[i] == ELL {
                        acc.beta[i] = acc.beta[i].min((bw, idx));
                        acc.gamma[i] = acc.gamma[i].min((io, idx));
                    }
                    if acc.nzs[i] == ELL {
                        acc.gamma_relaxed[i] = acc.gamma_relaxed[i].min((io, idx));
                    }
                }
                acc
            },
        )
        .reduce(|| MinAcc::new(n), MinAcc::merge);

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (beta, bw_idx) = acc.beta[i];
        let (gamma, io_idx) = acc.gamma[i];
        let (gamma_relaxed, _) = acc.gamma_relaxed[i];
        assert!(
            beta != usize::MAX,
            "every node of an MDS code admits a repair matrix"
        );
        out.push(NodeOptimum {
            node: i + 1,
            beta,
            gamma,
            gamma_relaxed,
            witness_bw: reps[bw_idx].clone(),
            witness_io: reps[io_idx].clone(),
        });
    }
    Ok(out)
}

/// Aggregates per-node optima and compares them against the lower bounds
/// with exact rational arithmetic.
pub fn bounds_report(code: &CodeSpec) -> Result<BoundsReport, OracleError> {
    let optima = node_optima(code)?;
    bounds_report_from(code, &optima)
}

/// Same as [`bounds_report`] but reusing already-computed optima.
pub fn bounds_report_from(
    code: &CodeSpec,
    optima: &[NodeOptimum],
) -> Result<BoundsReport, OracleError> {
    let n = code.n();
    let k = code.k();
    let beta_sum: usize = optima.iter().map(|o| o.beta).sum();
    let gamma_sum: usize = optima.iter().map(|o| o.gamma).sum();
    let avg_beta = Ratio::new(beta_sum as i64, n as i64);
    let avg_gamma = Ratio::new(gamma_sum as i64, n as i64);
    let max_beta = optima.iter().map(|o| o.beta).max().unwrap_or(0);
    let max_gamma = optima.iter().map(|o| o.gamma).max().unwrap_or(0);
    let bounds = lower_bounds(k);
    let satisfied = SatisfiedFlags {
        avg_beta: avg_beta >= bounds.avg_beta,
        max_beta: max_beta >= bounds.max_beta,
        avg_gamma: avg_gamma >= bounds.avg_gamma,
        max_gamma: max_gamma >= bounds.max_gamma,
    };
    Ok(BoundsReport {
        k,
        q: code.field().order(),
        construction: code.construction(),
        per_node: optima
            .iter()
            .map(|o| PerNodeReport {
                node: o.node,
                beta: o.beta,
                gamma: o.gamma,
                gamma_relaxed: o.gamma_relaxed,
            })
            .collect(),
        avg_beta,
        max_beta,
        avg_gamma,
        max_gamma,
        bounds,
        satisfied,
    })
}

/// Strict total order on index sets: first by cardinality, then by
/// dictionary order of the ascending element sequences.
pub fn subset_less(s: &BTreeSet<usize>, t: &BTreeSet<usize>) -> bool {
    if s.len() != t.len() {
        return s.len() < t.len();
    }
    for (a, b) in s.iter().zip(t.iter()) {
        if a != b {
            return a < b;
        }
    }
    false
}

/// First repair matrix for `node` that contacts all n-1 helpers and
/// reads at most 2k symbols. One always exists for an MDS code; failure
/// to find one indicates a broken code and surfaces as an error.
pub fn full_degree_witness(code: &CodeSpec, node: usize) -> Result<Mat, OracleError> {
    guard(code.field())?;
    if !code.mds_check().ok {
        return Err(OracleError::NotMds);
    }
    let n = code.n();
    let k = code.k();
    for m in enumerate_row_spaces(code.field())? {
        let mut ok_node = false;
        let mut all_nonzero = true;
        let mut nz_sum = 0;
        for j in 1..=n {
            let mh = m.mul(code.h_block(j)).expect("2x4 times 4x2");
            let (rk, nz) = profile_2x2(&mh);
            if j == node && rk == ELL {
                ok_node = true;
            }
            if rk == 0 {
                all_nonzero = false;
                break;
            }
            nz_sum += nz;
        }
        if ok_node && all_nonzero && nz_sum - ELL <= 2 * k {
            return Ok(m);
        }
    }
    Err(OracleError::WitnessNotFound { node })
}
