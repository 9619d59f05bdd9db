//! Single-node repair driven by a 2x4 repair matrix.
//!
//! Multiplying the stripe equation by a repair matrix M turns it into
//! repair equations; if M*H_i is invertible the failed column is
//! C_i = -(M H_i)^-1 * sum_j M H_j C_j. Each product M*H_j factors as
//! L_j * R_j, and helpers only ship the short vectors R_j*C_j, which is
//! where the bandwidth (total symbols sent, one per unit of rank) and
//! I/O (total symbols read, one per nonzero column) accounting comes
//! from. The engine takes any caller-supplied matrix that passes the
//! rank precondition, not just the designed ones.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::code::{CodeSpec, ELL};
use crate::gf::FieldElem;
use crate::linalg::{LinalgError, Mat};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RepairError {
    #[error("matrix cannot repair node {failed}: rank(M*H) < 2")]
    NotARepairMatrix { failed: usize },
    #[error("node index {0} out of range")]
    BadNodeIndex(usize),
    #[error("{0} is not a helper of this plan")]
    BadHelperIndex(usize),
    #[error("missing payload from helper {0}")]
    MissingPayload(usize),
    #[error("payload from helper {helper} has {got} symbols, expected {expected}")]
    WrongPayloadLength {
        helper: usize,
        expected: usize,
        got: usize,
    },
    #[error("repair matrix is zero")]
    ZeroMatrix,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Cost and reach statistics of one repair matrix on one code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairStats {
    /// Symbols transmitted: sum of rank(M*H_j) over helpers.
    pub bandwidth: usize,
    /// Symbols read from helper disks: sum of nz(M*H_j) over helpers.
    pub io: usize,
    /// Helper nodes contacted.
    pub degree: usize,
    /// Nodes this matrix can repair (rank 2).
    pub repairable_set: BTreeSet<usize>,
    /// Nodes where M*H_j has both columns nonzero.
    pub nz_set: BTreeSet<usize>,
}

/// L/R factors of one helper's product M*H_j.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HelperFactors {
    /// 2 x rank; reconstruction coefficients kept by the repairer.
    pub l: Mat,
    /// rank x 2; what the helper applies to its column before sending.
    pub r: Mat,
}

/// Everything needed to run and account one node's repair.
#[derive(Debug, Clone)]
pub struct RepairPlan {
    failed: usize,
    m: Mat,
    inv_mhi: Mat,
    helpers: BTreeMap<usize, HelperFactors>,
    stats: RepairStats,
}

impl RepairPlan {
    pub fn failed(&self) -> usize {
        self.failed
    }

    pub fn matrix(&self) -> &Mat {
        &self.m
    }

    pub fn stats(&self) -> &RepairStats {
        &self.stats
    }

    /// Helpers with nonzero M*H_j, keyed by node index. Nodes absent from
    /// this map transmit nothing at all.
    pub fn helpers(&self) -> &BTreeMap<usize, HelperFactors> {
        &self.helpers
    }
}

/// Computes factorizations and statistics for repairing `failed` with `m`.
pub fn plan_repair(code: &CodeSpec, m: &Mat, failed: usize) -> Result<RepairPlan, RepairError> {
    if failed == 0 || failed > code.n() {
        return Err(RepairError::BadNodeIndex(failed));
    }
    let stats = repair_stats(code, m)?;
    if !stats.repairable_set.contains(&failed) {
        return Err(RepairError::NotARepairMatrix { failed });
    }
    let inv_mhi = m.mul(code.h_block(failed))?.inverse()?;
    let mut helpers = BTreeMap::new();
    for j in 1..=code.n() {
        if j == failed {
            continue;
        }
        let mh = m.mul(code.h_block(j))?;
        if mh.is_zero() {
            continue;
        }
        let (l, r) = mh.column_factorize();
        helpers.insert(j, HelperFactors { l, r });
    }
    Ok(RepairPlan {
        failed,
        m: m.clone(),
        inv_mhi,
        helpers,
        stats,
    })
}

/// Statistics of a repair matrix independent of any particular failure.
pub fn repair_stats(code: &CodeSpec, m: &Mat) -> Result<RepairStats, RepairError> {
    let mut rank_sum = 0;
    let mut nz_sum = 0;
    let mut nonzero = 0;
    let mut repairable_set = BTreeSet::new();
    let mut nz_set = BTreeSet::new();
    for j in 1..=code.n() {
        let mh = m.mul(code.h_block(j))?;
        let rk = mh.rank();
        let nz = mh.nonzero_columns();
        rank_sum += rk;
        nz_sum += nz;
        if !mh.is_zero() {
            nonzero += 1;
        }
        if rk == ELL {
            repairable_set.insert(j);
        }
        if nz == ELL {
            nz_set.insert(j);
        }
    }
    Ok(RepairStats {
        bandwidth: rank_sum.saturating_sub(ELL),
        io: nz_sum.saturating_sub(ELL),
        degree: nonzero.saturating_sub(1),
        repairable_set,
        nz_set,
    })
}

/// What helper j sends for its column c_j: the vector R_j * c_j, of
/// length rank(M*H_j). Reading it costs nz(R_j) symbols of c_j. Helpers
/// outside the plan (zero M*H_j) send nothing.
pub fn helper_payload(
    plan: &RepairPlan,
    j: usize,
    c_j: &Mat,
) -> Result<Vec<FieldElem>, RepairError> {
    if j == plan.failed || j == 0 {
        return Err(RepairError::BadHelperIndex(j));
    }
    let Some(factors) = plan.helpers.get(&j) else {
        return Ok(Vec::new());
    };
    let out = factors.r.mul(c_j)?;
    Ok(out.entries().to_vec())
}

/// Reconstructs the failed column from helper payloads.
pub fn execute_repair(
    plan: &RepairPlan,
    payloads: &BTreeMap<usize, Vec<FieldElem>>,
) -> Result<Mat, RepairError> {
    let field = plan.m.field().clone();
    let mut acc = Mat::zeros(&field, ELL, 1);
    for (&j, factors) in &plan.helpers {
        let payload = payloads.get(&j).ok_or(RepairError::MissingPayload(j))?;
        let expected = factors.r.rows();
        if payload.len() != expected {
            return Err(RepairError::WrongPayloadLength {
                helper: j,
                expected,
                got: payload.len(),
            });
        }
        let p = Mat::from_elems(&field, expected, 1, payload.clone());
        acc = acc.add(&factors.l.mul(&p)?)?;
    }
    Ok(plan.inv_mhi.mul(&acc)?.neg())
}

/// Number of helper nodes a matrix touches: |{j : M*H_j != 0}| - 1.
pub fn repair_degree(code: &CodeSpec, m: &Mat) -> Result<usize, RepairError> {
    if m.is_zero() {
        return Err(RepairError::ZeroMatrix);
    }
    Ok(repair_stats(code, m)?.degree)
}

/// Convenience: full plan/payload/execute cycle against an intact stripe.
pub fn repair_column(
    code: &CodeSpec,
    stripe: &crate::code::Stripe,
    m: &Mat,
    failed: usize,
) -> Result<Mat, RepairError> {
    let plan = plan_repair(code, m, failed)?;
    let mut payloads = BTreeMap::new();
    for &j in plan.helpers().keys() {
        payloads.insert(j, helper_payload(&plan, j, stripe.column(j))?);
    }
    execute_repair(&plan, &payloads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{build_c1, build_c2};
    use crate::gf::FieldSpec;
    use rand::{Rng, SeedableRng};

    fn random_stripe(code: &CodeSpec, rng: &mut impl Rng) -> crate::code::Stripe {
        let q = code.field().order();
        let data: Vec<FieldElem> = (0..ELL * code.k())
            .map(|_| code.field().elem(rng.gen_range(0..q)))
            .collect();
        code.encode(&data).unwrap()
    }

    #[test]
    fn designed_bandwidth_examples() {
        let code = build_c1(4, &FieldSpec::prime(13).unwrap()).unwrap();
        let plan1 = plan_repair(&code, code.designed_repair(1).unwrap(), 1).unwrap();
        assert_eq!(plan1.stats().bandwidth, 6); // k + |G_1| = 4 + 2
        let plan5 = plan_repair(&code, code.designed_repair(5).unwrap(), 5).unwrap();
        assert_eq!(plan5.stats().bandwidth, 5); // k + |G_3| = 4 + 1
    }

    #[test]
    fn designed_io_example() {
        let code = build_c2(6, &FieldSpec::prime(11).unwrap()).unwrap();
        let plan = plan_repair(&code, code.designed_repair(7).unwrap(), 7).unwrap();
        assert_eq!(plan.stats().io, 8); // k + |G_3| = 6 + 2
    }

    #[test]
    fn payload_lengths_match_rank() {
        let code = build_c1(4, &FieldSpec::prime(13).unwrap()).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        let stripe = random_stripe(&code, &mut rng);
        let plan = plan_repair(&code, code.designed_repair(1).unwrap(), 1).unwrap();
        // helper 3 is in another group: rank 1, a single symbol
        let p3 = helper_payload(&plan, 3, stripe.column(3)).unwrap();
        assert_eq!(p3.len(), 1);
        // helper 2 shares the group: rank 2
        let p2 = helper_payload(&plan, 2, stripe.column(2)).unwrap();
        assert_eq!(p2.len(), 2);
        assert!(matches!(
            helper_payload(&plan, 1, stripe.column(1)),
            Err(RepairError::BadHelperIndex(1))
        ));
    }

    #[test]
    fn repair_round_trip_both_constructions() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(2);
        let codes = [
            build_c1(4, &FieldSpec::prime(13).unwrap()).unwrap(),
            build_c1(5, &FieldSpec::binary_default(8).unwrap()).unwrap(),
            build_c2(4, &FieldSpec::prime(11).unwrap()).unwrap(),
            build_c2(6, &FieldSpec::binary_default(8).unwrap()).unwrap(),
        ];
        for code in &codes {
            for _ in 0..20 {
                let stripe = random_stripe(code, &mut rng);
                for failed in 1..=code.n() {
                    let m = code.designed_repair(failed).unwrap();
                    let got = repair_column(code, &stripe, m, failed).unwrap();
                    assert_eq!(&got, stripe.column(failed));
                }
            }
        }
    }

    #[test]
    fn zero_stripe_repairs_to_zero() {
        let code = build_c1(4, &FieldSpec::prime(13).unwrap()).unwrap();
        let stripe = code.encode(&vec![FieldElem(0); 8]).unwrap();
        let got = repair_column(&code, &stripe, code.designed_repair(3).unwrap(), 3).unwrap();
        assert!(got.is_zero());
    }

    #[test]
    fn bandwidth_equals_total_payload_symbols() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let code = build_c2(5, &FieldSpec::prime(11).unwrap()).unwrap();
        let stripe = random_stripe(&code, &mut rng);
        for failed in 1..=code.n() {
            let plan = plan_repair(&code, code.designed_repair(failed).unwrap(), failed).unwrap();
            let mut sent = 0;
            let mut read = 0;
            for (&j, factors) in plan.helpers() {
                sent += helper_payload(&plan, j, stripe.column(j)).unwrap().len();
                read += factors.r.nonzero_columns();
            }
            assert_eq!(sent, plan.stats().bandwidth);
            assert_eq!(read, plan.stats().io);
        }
    }

    #[test]
    fn lambda_scaling_leaves_repair_unchanged() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(4);
        let f = FieldSpec::prime(13).unwrap();
        let code = build_c1(4, &f).unwrap();
        let stripe = random_stripe(&code, &mut rng);
        for _ in 0..50 {
            let lambda = loop {
                let entries = (0..4).map(|_| f.elem(rng.gen_range(0..13))).collect();
                let l = Mat::from_elems(&f, 2, 2, entries);
                if l.rank() == 2 {
                    break l;
                }
            };
            let failed = rng.gen_range(1..=code.n());
            let m = code.designed_repair(failed).unwrap();
            let lm = lambda.mul(m).unwrap();
            let plan_a = plan_repair(&code, m, failed).unwrap();
            let plan_b = plan_repair(&code, &lm, failed).unwrap();
            assert_eq!(plan_a.stats(), plan_b.stats());
            assert_eq!(
                repair_column(&code, &stripe, m, failed).unwrap(),
                repair_column(&code, &stripe, &lm, failed).unwrap()
            );
        }
    }

    #[test]
    fn degree_at_least_k_for_random_matrices() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let f = FieldSpec::prime(7).unwrap();
        let code = build_c2(3, &f).unwrap();
        for _ in 0..500 {
            let m = loop {
                let entries = (0..8).map(|_| f.elem(rng.gen_range(0..7))).collect();
                let m = Mat::from_elems(&f, 2, 4, entries);
                if !m.is_zero() {
                    break m;
                }
            };
            assert!(repair_degree(&code, &m).unwrap() >= code.k());
        }
    }

    #[test]
    fn degree_example_and_zero_matrix() {
        let code = build_c1(4, &FieldSpec::prime(13).unwrap()).unwrap();
        assert_eq!(
            repair_degree(&code, code.designed_repair(1).unwrap()).unwrap(),
            5
        );
        let z = Mat::zeros(code.field(), 2, 4);
        assert_eq!(repair_degree(&code, &z).unwrap_err(), RepairError::ZeroMatrix);
    }

    #[test]
    fn non_repair_matrix_rejected() {
        let code = build_c1(4, &FieldSpec::prime(13).unwrap()).unwrap();
        // M_1 = [I | 0] has rank 1 against cross-group nodes
        let m1 = code.designed_repair(1).unwrap();
        assert!(matches!(
            plan_repair(&code, m1, 3),
            Err(RepairError::NotARepairMatrix { failed: 3 })
        ));
        assert!(matches!(
            plan_repair(&code, m1, 0),
            Err(RepairError::BadNodeIndex(0))
        ));
    }

    #[test]
    fn missing_payload_detected() {
        let code = build_c1(4, &FieldSpec::prime(13).unwrap()).unwrap();
        let plan = plan_repair(&code, code.designed_repair(1).unwrap(), 1).unwrap();
        let payloads = BTreeMap::new();
        assert!(matches!(
            execute_repair(&plan, &payloads),
            Err(RepairError::MissingPayload(2))
        ));
    }
}
