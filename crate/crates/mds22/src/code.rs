//! The (n = k+2, k, l = 2, r = 2) MDS array code abstraction.
//!
//! A code is given by n parity-check sub-matrices H_1..H_n (each 4x2) tied
//! together by the stripe equation sum_i H_i C_i = 0, where each node
//! column C_i is a 2x1 vector. The code is MDS exactly when every pair
//! [H_i H_j] forms an invertible 4x4 matrix, which makes any two erased
//! nodes recoverable. Node indices are 1-based throughout the public API.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{Field, FieldElem};
use crate::linalg::{LinalgError, Mat};

/// Sub-packetization: symbols per node column.
pub const ELL: usize = 2;
/// Parity nodes: n - k.
pub const PARITY: usize = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("expected {expected} data symbols, got {got}")]
    WrongDataLength { expected: usize, got: usize },
    #[error("k must be at least 2, got {0}")]
    KTooSmall(usize),
    #[error("malformed code: {0}")]
    MalformedCode(String),
    #[error("parity pair [H_{{k+1}} H_{{k+2}}] is singular")]
    SingularParityPair,
    #[error("stripe has erased columns")]
    HasErasures,
    #[error("{got} erasures exceed the 2-erasure correction capability")]
    TooManyErasures { got: usize },
    #[error("no MDS code found after {tries} random attempts")]
    RandomSearchExhausted { tries: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstructionId {
    C1,
    C2,
    Custom,
}

impl std::fmt::Display for ConstructionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConstructionId::C1 => write!(f, "c1"),
            ConstructionId::C2 => write!(f, "c2"),
            ConstructionId::Custom => write!(f, "custom"),
        }
    }
}

/// Outcome of the pairwise invertibility scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MdsCheck {
    pub ok: bool,
    /// First (i, j) with [H_i H_j] singular, in 1-based node indices.
    pub first_failing_pair: Option<(usize, usize)>,
}

/// An (k+2, k, 2) array code: parity-check blocks plus optional designed
/// repair matrices.
#[derive(Debug, Clone)]
pub struct CodeSpec {
    k: usize,
    n: usize,
    field: Field,
    h_blocks: Vec<Mat>,
    designed_repair: Option<Vec<Mat>>,
    construction: ConstructionId,
}

impl CodeSpec {
    pub fn new(
        field: Field,
        h_blocks: Vec<Mat>,
        designed_repair: Option<Vec<Mat>>,
        construction: ConstructionId,
    ) -> Result<CodeSpec, CodeError> {
        let n = h_blocks.len();
        if n < 4 {
            return Err(CodeError::KTooSmall(n.saturating_sub(PARITY)));
        }
        let k = n - PARITY;
        for (idx, h) in h_blocks.iter().enumerate() {
            if h.rows() != 2 * ELL || h.cols() != ELL {
                return Err(CodeError::MalformedCode(format!(
                    "H_{} is {}x{}, expected 4x2",
                    idx + 1,
                    h.rows(),
                    h.cols()
                )));
            }
            if *h.field().as_ref() != *field.as_ref() {
                return Err(CodeError::MalformedCode(format!(
                    "H_{} belongs to a different field",
                    idx + 1
                )));
            }
        }
        if let Some(ms) = &designed_repair {
            if ms.len() != n {
                return Err(CodeError::MalformedCode(format!(
                    "{} repair matrices for {} nodes",
                    ms.len(),
                    n
                )));
            }
            for (idx, m) in ms.iter().enumerate() {
                if m.rows() != ELL || m.cols() != 2 * ELL {
                    return Err(CodeError::MalformedCode(format!(
                        "M_{} is {}x{}, expected 2x4",
                        idx + 1,
                        m.rows(),
                        m.cols()
                    )));
                }
                let mh = m.mul(&h_blocks[idx])?;
                if mh.rank() != ELL {
                    return Err(CodeError::MalformedCode(format!(
                        "designed M_{} does not repair node {} (rank {})",
                        idx + 1,
                        idx + 1,
                        mh.rank()
                    )));
                }
            }
        }
        Ok(CodeSpec {
            k,
            n,
            field,
            h_blocks,
            designed_repair,
            construction,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn construction(&self) -> ConstructionId {
        self.construction
    }

    /// Parity-check sub-matrix of node i (1-based).
    pub fn h_block(&self, i: usize) -> &Mat {
        &self.h_blocks[i - 1]
    }

    /// Designed repair matrix of node i (1-based), if the code has one.
    pub fn designed_repair(&self, i: usize) -> Option<&Mat> {
        self.designed_repair.as_ref().map(|ms| &ms[i - 1])
    }

    pub fn has_designed_repair(&self) -> bool {
        self.designed_repair.is_some()
    }

    /// MDS iff every pair [H_i H_j] is invertible.
    pub fn mds_check(&self) -> MdsCheck {
        for i in 1..=self.n {
            for j in (i + 1)..=self.n {
                let pair = Mat::hstack(&[self.h_block(i), self.h_block(j)])
                    .expect("blocks are 4x2");
                if pair.rank() != 2 * ELL {
                    return MdsCheck {
                        ok: false,
                        first_failing_pair: Some((i, j)),
                    };
                }
            }
        }
        MdsCheck {
            ok: true,
            first_failing_pair: None,
        }
    }

    /// Encodes 2k data symbols into a full stripe. Node i <= k stores
    /// symbols 2(i-1), 2(i-1)+1 as [top; bottom]; the two parity columns
    /// solve the stripe equation.
    pub fn encode(&self, data: &[FieldElem]) -> Result<Stripe, CodeError> {
        if data.len() != ELL * self.k {
            return Err(CodeError::WrongDataLength {
                expected: ELL * self.k,
                got: data.len(),
            });
        }
        let f = &self.field;
        let mut columns = Vec::with_capacity(self.n);
        let mut syndrome = Mat::zeros(f, 2 * ELL, 1);
        for i in 1..=self.k {
            let col = Mat::col2(f, data[2 * (i - 1)], data[2 * (i - 1) + 1]);
            syndrome = syndrome.add(&self.h_block(i).mul(&col)?)?;
            columns.push(col);
        }
        let parity_pair = Mat::hstack(&[self.h_block(self.k + 1), self.h_block(self.k + 2)])?;
        let x = parity_pair
            .solve(&syndrome.neg())
            .map_err(|_| CodeError::SingularParityPair)?;
        columns.push(x.submatrix(0..2, 0..1));
        columns.push(x.submatrix(2..4, 0..1));
        Ok(Stripe {
            columns,
            erased: BTreeSet::new(),
        })
    }

    /// True iff the stripe satisfies sum_i H_i C_i = 0.
    pub fn verify_stripe(&self, stripe: &Stripe) -> Result<bool, CodeError> {
        if !stripe.erased.is_empty() {
            return Err(CodeError::HasErasures);
        }
        Ok(self.syndrome_of(stripe, |_| true)?.is_zero())
    }

    fn syndrome_of(
        &self,
        stripe: &Stripe,
        include: impl Fn(usize) -> bool,
    ) -> Result<Mat, CodeError> {
        let mut syndrome = Mat::zeros(&self.field, 2 * ELL, 1);
        for i in 1..=self.n {
            if include(i) {
                syndrome = syndrome.add(&self.h_block(i).mul(stripe.column(i))?)?;
            }
        }
        Ok(syndrome)
    }

    /// Rebuilds up to two erased columns from the survivors.
    pub fn decode_erasures(&self, stripe: &Stripe) -> Result<Stripe, CodeError> {
        let erased: Vec<usize> = stripe.erased.iter().copied().collect();
        match erased.len() {
            0 => Ok(stripe.clone()),
            1 => {
                let i = erased[0];
                let b = self.syndrome_of(stripe, |j| j != i)?.neg();
                // H_i * C_i = b is consistent and overdetermined; solve it
                // through the first invertible 2x2 row pair of H_i.
                let h = self.h_block(i);
                let (r1, r2) = first_invertible_row_pair(h)
                    .ok_or_else(|| CodeError::MalformedCode(format!("H_{i} is rank deficient")))?;
                let sub = Mat::from_elems(
                    &self.field,
                    2,
                    2,
                    vec![h.get(r1, 0), h.get(r1, 1), h.get(r2, 0), h.get(r2, 1)],
                );
                let bsub = Mat::from_elems(&self.field, 2, 1, vec![b.get(r1, 0), b.get(r2, 0)]);
                let col = sub.solve(&bsub)?;
                let mut out = stripe.clone();
                out.set_column(i, col);
                out.erased.clear();
                Ok(out)
            }
            2 => {
                let (i1, i2) = (erased[0], erased[1]);
                let b = self
                    .syndrome_of(stripe, |j| j != i1 && j != i2)?
                    .neg();
                let pair = Mat::hstack(&[self.h_block(i1), self.h_block(i2)])?;
                let x = pair.solve(&b)?;
                let mut out = stripe.clone();
                out.set_column(i1, x.submatrix(0..2, 0..1));
                out.set_column(i2, x.submatrix(2..4, 0..1));
                out.erased.clear();
                Ok(out)
            }
            got => Err(CodeError::TooManyErasures { got }),
        }
    }

    /// Searches random parity-check blocks until the MDS check passes.
    pub fn random_mds(
        k: usize,
        field: &Field,
        rng: &mut impl Rng,
        max_tries: usize,
    ) -> Result<CodeSpec, CodeError> {
        if k < 2 {
            return Err(CodeError::KTooSmall(k));
        }
        let n = k + PARITY;
        let q = field.order();
        for _ in 0..max_tries {
            let h_blocks: Vec<Mat> = (0..n)
                .map(|_| {
                    let entries = (0..2 * ELL * ELL)
                        .map(|_| field.elem(rng.gen_range(0..q)))
                        .collect();
                    Mat::from_elems(field, 2 * ELL, ELL, entries)
                })
                .collect();
            let code = CodeSpec::new(field.clone(), h_blocks, None, ConstructionId::Custom)?;
            if code.mds_check().ok {
                return Ok(code);
            }
        }
        Err(CodeError::RandomSearchExhausted { tries: max_tries })
    }
}

fn first_invertible_row_pair(h: &Mat) -> Option<(usize, usize)> {
    let f = h.field();
    for r1 in 0..h.rows() {
        for r2 in (r1 + 1)..h.rows() {
            let det = f.sub(
                f.mul(h.get(r1, 0), h.get(r2, 1)),
                f.mul(h.get(r1, 1), h.get(r2, 0)),
            );
            if det.0 != 0 {
                return Some((r1, r2));
            }
        }
    }
    None
}

/// One codeword: n node columns (2x1 each) plus the set of erased nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stripe {
    columns: Vec<Mat>,
    erased: BTreeSet<usize>,
}

impl Stripe {
    pub fn from_columns(columns: Vec<Mat>) -> Stripe {
        Stripe {
            columns,
            erased: BTreeSet::new(),
        }
    }

    /// Column of node i (1-based). Erased columns read as whatever
    /// placeholder they hold; consult [`Stripe::erased`].
    pub fn column(&self, i: usize) -> &Mat {
        &self.columns[i - 1]
    }

    pub fn set_column(&mut self, i: usize, col: Mat) {
        self.columns[i - 1] = col;
    }

    pub fn n(&self) -> usize {
        self.columns.len()
    }

    pub fn erased(&self) -> &BTreeSet<usize> {
        &self.erased
    }

    /// Marks node i erased and zeroes its column.
    pub fn erase(&mut self, i: usize) {
        let field = self.columns[i - 1].field().clone();
        self.columns[i - 1] = Mat::zeros(&field, ELL, 1);
        self.erased.insert(i);
    }
}
