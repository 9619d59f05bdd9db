//! The two explicit (k+2, k, 2) code families.
//!
//! Both partition the n = k+2 nodes into consecutive groups and assign
//! each node a 4x2 parity-check block built from Vandermonde column
//! vectors [1, lambda]^T, plus a designed 2x4 repair matrix. C1 (four
//! groups, lambda_i = alpha^i for a primitive alpha) minimizes repair
//! bandwidth; C2 (three groups, lambda_i = the i-th field element)
//! minimizes repair I/O. Same-group blocks interact at rank/nz 2, cross
//! group at 1, which is where the k + |G_z| repair cost comes from.
//!
//! Field-size preconditions are the paper-thin part of the recipe: the
//! builders gate on the minimum order and then run the pairwise MDS check
//! as the hard gate, so a field that wraps the lambda sequence is
//! accepted exactly when the resulting code is still MDS.

use thiserror::Error;

use crate::code::{CodeError, CodeSpec, ConstructionId};
use crate::gf::{Field, FieldElem, FieldSpec, GfError};
use crate::linalg::Mat;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BuildError {
    #[error("cannot split {n} nodes into {g} groups")]
    BadArity { n: usize, g: usize },
    #[error("k must be at least 2, got {0}")]
    KTooSmall(usize),
    #[error("field order {got} too small, need at least {needed}")]
    FieldTooSmall { needed: u32, got: u32 },
    #[error("construction is not MDS over this field: pair ({}, {}) is singular", pair.0, pair.1)]
    MdsCheckFailed { pair: (usize, usize) },
    #[error(transparent)]
    Gf(#[from] GfError),
    #[error(transparent)]
    Code(#[from] CodeError),
}

/// Consecutive, nearly-even partition of nodes 1..=n into g groups. The
/// first n mod g groups hold ceil(n/g) nodes, the rest floor(n/g).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPartition {
    groups: Vec<Vec<usize>>,
}

impl GroupPartition {
    pub fn new(n: usize, g: usize) -> Result<GroupPartition, BuildError> {
        if g == 0 || g > n {
            return Err(BuildError::BadArity { n, g });
        }
        let big = n % g;
        let small_size = n / g;
        let mut groups = Vec::with_capacity(g);
        let mut next = 1;
        for z in 0..g {
            let size = if z < big { small_size + 1 } else { small_size };
            groups.push((next..next + size).collect());
            next += size;
        }
        Ok(GroupPartition { groups })
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// 0-based index of the group containing node i.
    pub fn group_of(&self, i: usize) -> usize {
        self.groups
            .iter()
            .position(|grp| grp.contains(&i))
            .expect("node within 1..=n")
    }

    pub fn group_size_of(&self, i: usize) -> usize {
        self.groups[self.group_of(i)].len()
    }
}

// [1, lambda]^T
fn lambda_vec(field: &Field, lambda: FieldElem) -> Mat {
    Mat::col2(field, field.one(), lambda)
}

fn h_from_blocks(field: &Field, tl: &Mat, tr: &Mat, bl: &Mat, br: &Mat) -> Mat {
    Mat::block(&[&[tl, tr], &[bl, br]]).expect("2x1 blocks")
}

/// Bandwidth-optimal construction over lambda_i = alpha^i.
pub fn build_c1(k: usize, field: &Field) -> Result<CodeSpec, BuildError> {
    if k < 2 {
        return Err(BuildError::KTooSmall(k));
    }
    let n = k + 2;
    let q = field.order();
    if (q as u64) < n as u64 + 3 {
        return Err(BuildError::FieldTooSmall {
            needed: (n + 3) as u32,
            got: q,
        });
    }
    let alpha = field.generator();
    let lam = |i: usize| field.pow(alpha, i as u64);
    let lv = |i: usize| lambda_vec(field, lam(i));
    let zero = Mat::zeros(field, 2, 1);
    let part = GroupPartition::new(n, 4)?;

    let mut h_blocks = Vec::with_capacity(n);
    let mut repair = Vec::with_capacity(n);
    let neg1 = field.neg(field.one()).0 as u64;
    let a = alpha.0 as u64;
    for i in 1..=n {
        let (h, m) = match part.group_of(i) {
            0 => (
                h_from_blocks(field, &lv(i - 1), &lv(i).neg(), &zero, &lv(i)),
                Mat::from_ints(field, &[&[1, 0, 0, 0], &[0, 1, 0, 0]]),
            ),
            1 => (
                h_from_blocks(field, &lv(i), &zero, &lv(i).neg(), &lv(i + 1)),
                Mat::from_ints(field, &[&[0, 0, 1, 0], &[0, 0, 0, 1]]),
            ),
            2 => (
                h_from_blocks(field, &lv(i), &zero, &zero, &lv(i + 2)),
                Mat::from_ints(field, &[&[1, 0, 1, 0], &[0, 1, 0, 1]]),
            ),
            _ => (
                h_from_blocks(field, &lv(i + 2), &zero, &zero, &lv(i + 2)),
                Mat::from_ints(field, &[&[neg1, 0, a, 0], &[0, a, 0, neg1]]),
            ),
        };
        h_blocks.push(h);
        repair.push(m);
    }
    finish(field, h_blocks, repair, ConstructionId::C1)
}

/// I/O-optimal construction over lambda_i = the i-th field element in
/// value order (wrapping mod q; the MDS check decides whether a wrap is
/// harmless for the given k).
pub fn build_c2(k: usize, field: &Field) -> Result<CodeSpec, BuildError> {
    if k < 2 {
        return Err(BuildError::KTooSmall(k));
    }
    let n = k + 2;
    let q = field.order();
    if (q as u64) < n as u64 + 1 {
        return Err(BuildError::FieldTooSmall {
            needed: (n + 1) as u32,
            got: q,
        });
    }
    let lv = |i: usize| lambda_vec(field, field.from_int(i as u64));
    let zero = Mat::zeros(field, 2, 1);
    let part = GroupPartition::new(n, 3)?;

    let mut h_blocks = Vec::with_capacity(n);
    let mut repair = Vec::with_capacity(n);
    for i in 1..=n {
        let (h, m) = match part.group_of(i) {
            0 => (
                h_from_blocks(field, &lv(i - 1), &lv(i).neg(), &zero, &lv(i)),
                Mat::from_ints(field, &[&[1, 0, 0, 0], &[0, 1, 0, 0]]),
            ),
            1 => (
                h_from_blocks(field, &lv(i), &zero, &lv(i).neg(), &lv(i - 1)),
                Mat::from_ints(field, &[&[0, 0, 1, 0], &[0, 0, 0, 1]]),
            ),
            _ => (
                h_from_blocks(field, &lv(i), &zero, &zero, &lv(i + 1)),
                Mat::from_ints(field, &[&[1, 0, 1, 0], &[0, 1, 0, 1]]),
            ),
        };
        h_blocks.push(h);
        repair.push(m);
    }
    finish(field, h_blocks, repair, ConstructionId::C2)
}

fn finish(
    field: &Field,
    h_blocks: Vec<Mat>,
    repair: Vec<Mat>,
    id: ConstructionId,
) -> Result<CodeSpec, BuildError> {
    let code = CodeSpec::new(field.clone(), h_blocks, Some(repair), id)?;
    let chk = code.mds_check();
    if !chk.ok {
        return Err(BuildError::MdsCheckFailed {
            pair: chk.first_failing_pair.unwrap(),
        });
    }
    Ok(code)
}

/// Group partition used by a construction for a given k.
pub fn partition_for(id: ConstructionId, k: usize) -> Result<GroupPartition, BuildError> {
    let g = match id {
        ConstructionId::C1 => 4,
        ConstructionId::C2 => 3,
        ConstructionId::Custom => return Err(BuildError::BadArity { n: k + 2, g: 0 }),
    };
    GroupPartition::new(k + 2, g)
}

/// Default data-path field for a construction: GF(2^8) whenever it is
/// large enough, otherwise the smallest adequate prime.
pub fn default_field(id: ConstructionId, k: usize) -> Result<Field, BuildError> {
    let n = k + 2;
    let min_order: u64 = match id {
        // alpha^0..alpha^(n+2) must be distinct, so n+2 < q-1.
        ConstructionId::C1 => n as u64 + 4,
        // lambda_0..lambda_{n+1} distinct.
        ConstructionId::C2 => n as u64 + 2,
        ConstructionId::Custom => n as u64,
    };
    if min_order <= 256 {
        return Ok(FieldSpec::binary_default(8)?);
    }
    let mut p = min_order;
    loop {
        if p > crate::gf::MAX_FIELD_ORDER {
            return Err(BuildError::FieldTooSmall {
                needed: min_order as u32,
                got: 0,
            });
        }
        if let Ok(f) = FieldSpec::prime(p as u32) {
            return Ok(f);
        }
        p += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::FieldSpec;

    #[test]
    fn partition_examples() {
        let p = GroupPartition::new(6, 4).unwrap();
        assert_eq!(
            p.groups(),
            &[vec![1, 2], vec![3, 4], vec![5], vec![6]]
        );
        let p = GroupPartition::new(8, 3).unwrap();
        assert_eq!(p.groups(), &[vec![1, 2, 3], vec![4, 5, 6], vec![7, 8]]);
        let p = GroupPartition::new(4, 4).unwrap();
        assert_eq!(p.groups(), &[vec![1], vec![2], vec![3], vec![4]]);
        assert!(GroupPartition::new(3, 4).is_err());
        assert!(GroupPartition::new(3, 0).is_err());
    }

    #[test]
    fn c1_table_cells() {
        let f = FieldSpec::prime(13).unwrap();
        let code = build_c1(4, &f).unwrap();
        // node 6 sits in the last group: H_6 = diag(lambda-vec_8, lambda-vec_8)
        let lam8 = f.pow(f.generator(), 8);
        let h6 = code.h_block(6);
        assert_eq!(h6.get(0, 0), f.one());
        assert_eq!(h6.get(1, 0), lam8);
        assert_eq!(h6.get(2, 1), f.one());
        assert_eq!(h6.get(3, 1), lam8);
        assert_eq!(h6.get(0, 1), f.zero());
        assert_eq!(h6.get(2, 0), f.zero());
        // node 1 sits in the first group: M_1 = [I | 0]
        assert_eq!(
            code.designed_repair(1).unwrap(),
            &Mat::from_ints(&f, &[&[1, 0, 0, 0], &[0, 1, 0, 0]])
        );
        assert!(code.mds_check().ok);
    }

    #[test]
    fn c2_table_cells() {
        let f = FieldSpec::prime(11).unwrap();
        let code = build_c2(6, &f).unwrap();
        // n = 8: third group is {7, 8}; H_7 = diag(lambda-vec_7, lambda-vec_8)
        let h7 = code.h_block(7);
        assert_eq!(h7.get(1, 0), f.elem(7));
        assert_eq!(h7.get(3, 1), f.elem(8));
        // node 4 sits in the middle group: M_4 = [0 | I]
        assert_eq!(
            code.designed_repair(4).unwrap(),
            &Mat::from_ints(&f, &[&[0, 0, 1, 0], &[0, 0, 0, 1]])
        );
        assert!(code.mds_check().ok);
    }

    #[test]
    fn rank_pattern_c1() {
        for (k, f) in [
            (2, FieldSpec::prime(11).unwrap()),
            (4, FieldSpec::prime(13).unwrap()),
            (6, FieldSpec::binary_default(8).unwrap()),
        ] {
            let code = build_c1(k, &f).unwrap();
            let part = partition_for(ConstructionId::C1, k).unwrap();
            for i in 1..=code.n() {
                for j in 1..=code.n() {
                    let mh = code
                        .designed_repair(i)
                        .unwrap()
                        .mul(code.h_block(j))
                        .unwrap();
                    let expected = if part.group_of(i) == part.group_of(j) { 2 } else { 1 };
                    assert_eq!(mh.rank(), expected, "k={k} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn nz_pattern_c2() {
        for (k, f) in [
            (2, FieldSpec::prime(7).unwrap()),
            (6, FieldSpec::prime(11).unwrap()),
            (5, FieldSpec::binary_default(8).unwrap()),
        ] {
            let code = build_c2(k, &f).unwrap();
            let part = partition_for(ConstructionId::C2, k).unwrap();
            for i in 1..=code.n() {
                for j in 1..=code.n() {
                    let mh = code
                        .designed_repair(i)
                        .unwrap()
                        .mul(code.h_block(j))
                        .unwrap();
                    let expected = if part.group_of(i) == part.group_of(j) { 2 } else { 1 };
                    assert_eq!(mh.nonzero_columns(), expected, "k={k} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn c1_minimum_field_wraps_and_fails() {
        // q = n+3 makes alpha^(n+2) = alpha^0, so H_1 and H_n share a
        // column and the pair check must fail.
        let f = FieldSpec::prime(7).unwrap();
        let err = build_c1(2, &f).unwrap_err();
        assert!(matches!(err, BuildError::MdsCheckFailed { .. }));
    }

    #[test]
    fn field_too_small_is_rejected_early() {
        let f = FieldSpec::prime(5).unwrap();
        assert!(matches!(
            build_c1(2, &f).unwrap_err(),
            BuildError::FieldTooSmall { needed: 7, .. }
        ));
        let f3 = FieldSpec::prime(3).unwrap();
        assert!(matches!(
            build_c2(2, &f3).unwrap_err(),
            BuildError::FieldTooSmall { needed: 5, .. }
        ));
    }

    #[test]
    fn c2_wrap_case_from_small_prime() {
        // k=2 over GF(5): lambda_5 wraps onto lambda_0 yet the code stays
        // MDS, so the builder must accept it.
        let f = FieldSpec::prime(5).unwrap();
        let code = build_c2(2, &f).unwrap();
        assert!(code.mds_check().ok);
    }

    #[test]
    fn k_too_small() {
        let f = FieldSpec::prime(13).unwrap();
        assert!(matches!(build_c1(1, &f), Err(BuildError::KTooSmall(1))));
        assert!(matches!(build_c2(0, &f), Err(BuildError::KTooSmall(0))));
    }

    #[test]
    fn constructions_pass_mds_over_default_fields() {
        for k in 2..=32 {
            let f1 = default_field(ConstructionId::C1, k).unwrap();
            assert!(build_c1(k, &f1).unwrap().mds_check().ok);
            let f2 = default_field(ConstructionId::C2, k).unwrap();
            assert!(build_c2(k, &f2).unwrap().mds_check().ok);
        }
    }

    #[test]
    fn lambda_vectors_pairwise_independent() {
        let f = FieldSpec::prime(13).unwrap();
        let alpha = f.generator();
        for i in 0..11u64 {
            for j in (i + 1)..12u64 {
                let vi = lambda_vec(&f, f.pow(alpha, i));
                let vj = lambda_vec(&f, f.pow(alpha, j));
                assert_eq!(Mat::hstack(&[&vi, &vj]).unwrap().rank(), 2);
            }
        }
    }
}
