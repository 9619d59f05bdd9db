//! Shard files: persistence for encoded byte streams.
//!
//! A file is chunked into stripes of 2k bytes over GF(2^8) (one byte per
//! symbol), encoded, and spread over n = k+2 shard files named
//! `shard_<node>.mds`. Every shard carries the same self-describing
//! header (node index aside), so any k shards identify the code and the
//! original length. Repair reads helper shards through a repair plan and
//! reports exactly how many symbols were sent and read.
//!
//! Header layout, little-endian, 30 bytes:
//!
//! ```text
//! magic "MA22" | version u8 | field_desc [u8;4] | construction u8
//! | k u16 | node_index u16 | stripe_count u64 | payload_length u64
//! ```
//!
//! field_desc is `00 p p p` (prime p, 24-bit LE) or `01 m 00 00`
//! (GF(2^m), default modulus).

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::{CodeError, CodeSpec, ConstructionId, Stripe, ELL};
use crate::constructions::{build_c1, build_c2, BuildError};
use crate::gf::{Field, FieldElem, FieldKind, FieldSpec, GfError};
use crate::linalg::Mat;
use crate::repair::{execute_repair, helper_payload, plan_repair, RepairError};

pub const SHARD_MAGIC: [u8; 4] = *b"MA22";
pub const SHARD_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 30;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("code field must be GF(2^8) with the default modulus for the data path")]
    FieldMismatch,
    #[error("only {present} shards present, need at least {need}")]
    TooFewShards { present: usize, need: usize },
    #[error("inconsistent shard files: {0}")]
    HeaderMismatch(String),
    #[error("helper shard {0} is missing")]
    MissingHelper(usize),
    #[error("node {node} out of range 1..={n}")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("shards describe a custom construction; parity blocks cannot be rebuilt from headers")]
    UnsupportedConstruction,
    #[error(transparent)]
    Gf(#[from] GfError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Repair(#[from] RepairError),
}

/// Field identity as stored in a shard header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldDesc {
    Prime(u32),
    Binary(u8),
}

impl FieldDesc {
    pub fn of(field: &Field) -> Result<FieldDesc, StoreError> {
        match field.kind() {
            FieldKind::Prime { p } => Ok(FieldDesc::Prime(p)),
            FieldKind::Binary { m, modulus } => {
                if crate::gf::default_modulus(m) != Some(modulus) {
                    return Err(StoreError::FieldMismatch);
                }
                Ok(FieldDesc::Binary(m as u8))
            }
        }
    }

    pub fn to_field(self) -> Result<Field, StoreError> {
        match self {
            FieldDesc::Prime(p) => Ok(FieldSpec::prime(p)?),
            FieldDesc::Binary(m) => Ok(FieldSpec::binary_default(m as u32)?),
        }
    }

    fn to_bytes(self) -> [u8; 4] {
        match self {
            FieldDesc::Prime(p) => {
                let le = p.to_le_bytes();
                [0x00, le[0], le[1], le[2]]
            }
            FieldDesc::Binary(m) => [0x01, m, 0, 0],
        }
    }

    fn parse(bytes: &[u8]) -> Result<FieldDesc, StoreError> {
        match bytes[0] {
            0x00 => Ok(FieldDesc::Prime(u32::from_le_bytes([
                bytes[1], bytes[2], bytes[3], 0,
            ]))),
            0x01 => Ok(FieldDesc::Binary(bytes[1])),
            tag => Err(StoreError::HeaderMismatch(format!(
                "unknown field tag {tag:#x}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShardHeader {
    pub field_desc: FieldDesc,
    pub construction: ConstructionId,
    pub k: u16,
    pub node_index: u16,
    pub stripe_count: u64,
    pub payload_length: u64,
}

impl ShardHeader {
    pub fn n(&self) -> usize {
        self.k as usize + 2
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(&SHARD_MAGIC);
        out[4] = SHARD_VERSION;
        out[5..9].copy_from_slice(&self.field_desc.to_bytes());
        out[9] = match self.construction {
            ConstructionId::Custom => 0,
            ConstructionId::C1 => 1,
            ConstructionId::C2 => 2,
        };
        out[10..12].copy_from_slice(&self.k.to_le_bytes());
        out[12..14].copy_from_slice(&self.node_index.to_le_bytes());
        out[14..22].copy_from_slice(&self.stripe_count.to_le_bytes());
        out[22..30].copy_from_slice(&self.payload_length.to_le_bytes());
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<ShardHeader, StoreError> {
        if bytes.len() < HEADER_LEN {
            return Err(StoreError::HeaderMismatch("header truncated".into()));
        }
        if bytes[0..4] != SHARD_MAGIC {
            return Err(StoreError::HeaderMismatch("bad magic".into()));
        }
        if bytes[4] != SHARD_VERSION {
            return Err(StoreError::HeaderMismatch(format!(
                "unsupported version {}",
                bytes[4]
            )));
        }
        let field_desc = FieldDesc::parse(&bytes[5..9])?;
        let construction = match bytes[9] {
            0 => ConstructionId::Custom,
            1 => ConstructionId::C1,
            2 => ConstructionId::C2,
            other => {
                return Err(StoreError::HeaderMismatch(format!(
                    "unknown construction {other}"
                )))
            }
        };
        let k = u16::from_le_bytes([bytes[10], bytes[11]]);
        let node_index = u16::from_le_bytes([bytes[12], bytes[13]]);
        let stripe_count = u64::from_le_bytes(bytes[14..22].try_into().unwrap());
        let payload_length = u64::from_le_bytes(bytes[22..30].try_into().unwrap());
        let header = ShardHeader {
            field_desc,
            construction,
            k,
            node_index,
            stripe_count,
            payload_length,
        };
        if node_index == 0 || node_index as usize > header.n() {
            return Err(StoreError::HeaderMismatch(format!(
                "node index {node_index} out of range"
            )));
        }
        if payload_length > stripe_count * 2 * header.k as u64 {
            return Err(StoreError::HeaderMismatch(
                "payload length exceeds stripe capacity".into(),
            ));
        }
        Ok(header)
    }

    /// Same file identity, ignoring which node the shard belongs to.
    pub fn same_file(&self, other: &ShardHeader) -> bool {
        self.field_desc == other.field_desc
            && self.construction == other.construction
            && self.k == other.k
            && self.stripe_count == other.stripe_count
            && self.payload_length == other.payload_length
    }

    /// Rebuilds the code the shards were encoded with.
    pub fn build_code(&self) -> Result<CodeSpec, StoreError> {
        let field = self.field_desc.to_field()?;
        match self.construction {
            ConstructionId::C1 => Ok(build_c1(self.k as usize, &field)?),
            ConstructionId::C2 => Ok(build_c2(self.k as usize, &field)?),
            ConstructionId::Custom => Err(StoreError::UnsupportedConstruction),
        }
    }
}

pub fn shard_path(dir: &Path, node: usize) -> PathBuf {
    dir.join(format!("shard_{node}.mds"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShardInfo {
    pub node: usize,
    pub path: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncodeManifest {
    pub construction: ConstructionId,
    pub k: usize,
    pub n: usize,
    pub stripes: u64,
    pub payload_length: u64,
    pub shards: Vec<ShardInfo>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HelperTransfer {
    pub node: usize,
    pub symbols_sent: u64,
    pub symbols_read: u64,
}

/// Per-helper and total symbol movement of one shard repair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransferReport {
    pub failed: usize,
    pub helpers: Vec<HelperTransfer>,
    pub total_sent: u64,
    pub total_read: u64,
    pub stripes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecodeSummary {
    pub bytes_written: u64,
    pub missing_shards: Vec<usize>,
    pub out_path: String,
}

/// Splits a file into stripes and writes one shard per node. The input
/// is zero-padded up to a whole number of stripes; the true byte length
/// travels in every header.
pub fn encode_file(
    code: &CodeSpec,
    input: &Path,
    out_dir: &Path,
) -> Result<EncodeManifest, StoreError> {
    let field = code.field();
    if field.order() != 256 {
        return Err(StoreError::FieldMismatch);
    }
    let field_desc = FieldDesc::of(field)?;
    let data = fs::read(input)?;
    let k = code.k();
    let n = code.n();
    let block = 2 * k;
    let stripe_count = data.len().div_ceil(block) as u64;

    let mut bodies: Vec<Vec<u8>> = vec![Vec::with_capacity(2 * stripe_count as usize); n];
    let mut symbols = vec![FieldElem(0); block];
    for s in 0..stripe_count as usize {
        for t in 0..block {
            let byte = data.get(s * block + t).copied().unwrap_or(0);
            symbols[t] = FieldElem(byte as u16);
        }
        let stripe = code.encode(&symbols)?;
        for i in 1..=n {
            let col = stripe.column(i);
            bodies[i - 1].push(col.get(0, 0).0 as u8);
            bodies[i - 1].push(col.get(1, 0).0 as u8);
        }
    }

    fs::create_dir_all(out_dir)?;
    let mut shards = Vec::with_capacity(n);
    for i in 1..=n {
        let header = ShardHeader {
            field_desc,
            construction: code.construction(),
            k: k as u16,
            node_index: i as u16,
            stripe_count,
            payload_length: data.len() as u64,
        };
        let path = shard_path(out_dir, i);
        let mut out = header.to_bytes().to_vec();
        out.extend_from_slice(&bodies[i - 1]);
        fs::write(&path, &out)?;
        shards.push(ShardInfo {
            node: i,
            path: path.display().to_string(),
            bytes: (HEADER_LEN + bodies[i - 1].len()) as u64,
        });
    }
    Ok(EncodeManifest {
        construction: code.construction(),
        k,
        n,
        stripes: stripe_count,
        payload_length: data.len() as u64,
        shards,
    })
}

struct LoadedShards {
    header: ShardHeader,
    bodies: BTreeMap<usize, Vec<u8>>,
}

fn load_shards(dir: &Path) -> Result<LoadedShards, StoreError> {
    let mut bodies = BTreeMap::new();
    let mut template: Option<ShardHeader> = None;
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|s| s.to_str()) else {
            continue;
        };
        let Some(node) = name
            .strip_prefix("shard_")
            .and_then(|rest| rest.strip_suffix(".mds"))
            .and_then(|num| num.parse::<usize>().ok())
        else {
            continue;
        };
        let raw = fs::read(&path)?;
        let header = ShardHeader::parse(&raw)?;
        if header.node_index as usize != node {
            return Err(StoreError::HeaderMismatch(format!(
                "{name} claims node {}",
                header.node_index
            )));
        }
        let body = raw[HEADER_LEN..].to_vec();
        if body.len() as u64 != 2 * header.stripe_count {
            return Err(StoreError::HeaderMismatch(format!(
                "{name} body has {} bytes, expected {}",
                body.len(),
                2 * header.stripe_count
            )));
        }
        match &template {
            None => template = Some(header),
            Some(t) => {
                if !t.same_file(&header) {
                    return Err(StoreError::HeaderMismatch(format!(
                        "{name} disagrees with other shards"
                    )));
                }
            }
        }
        bodies.insert(node, body);
    }
    let header = template.ok_or(StoreError::TooFewShards { present: 0, need: 1 })?;
    Ok(LoadedShards { header, bodies })
}

fn column_at(field: &Field, body: &[u8], stripe: usize) -> Mat {
    Mat::col2(
        field,
        FieldElem(body[2 * stripe] as u16),
        FieldElem(body[2 * stripe + 1] as u16),
    )
}

/// Reconstructs the original byte stream from any >= k shards, running
/// erasure decoding per stripe when up to two shards are gone.
pub fn decode_file(shard_dir: &Path, out_path: &Path) -> Result<DecodeSummary, StoreError> {
    let loaded = load_shards(shard_dir)?;
    let header = loaded.header;
    let code = header.build_code()?;
    let (n, k) = (code.n(), code.k());
    let missing: Vec<usize> = (1..=n).filter(|i| !loaded.bodies.contains_key(i)).collect();
    if loaded.bodies.len() < k {
        return Err(StoreError::TooFewShards {
            present: loaded.bodies.len(),
            need: k,
        });
    }
    let field = code.field().clone();
    let stripes = header.stripe_count as usize;
    let data_missing = missing.iter().any(|&i| i <= k);

    let mut out = Vec::with_capacity(stripes * 2 * k);
    for s in 0..stripes {
        if !data_missing {
            for i in 1..=k {
                let body = &loaded.bodies[&i];
                out.push(body[2 * s]);
                out.push(body[2 * s + 1]);
            }
            continue;
        }
        let mut stripe = Stripe::from_columns(
            (1..=n)
                .map(|i| match loaded.bodies.get(&i) {
                    Some(body) => column_at(&field, body, s),
                    None => Mat::zeros(&field, ELL, 1),
                })
                .collect(),
        );
        for &i in &missing {
            stripe.erase(i);
        }
        let repaired = code.decode_erasures(&stripe)?;
        for i in 1..=k {
            let col = repaired.column(i);
            out.push(col.get(0, 0).0 as u8);
            out.push(col.get(1, 0).0 as u8);
        }
    }
    out.truncate(header.payload_length as usize);
    fs::write(out_path, &out)?;
    Ok(DecodeSummary {
        bytes_written: out.len() as u64,
        missing_shards: missing,
        out_path: out_path.display().to_string(),
    })
}

/// Rebuilds one shard from the other n-1 and writes it back. Uses the
/// construction's designed repair matrix unless `matrix` overrides it.
/// Helpers only read the body offsets that the plan's R factors touch.
pub fn repair_shard(
    shard_dir: &Path,
    failed: usize,
    matrix: Option<&Mat>,
) -> Result<(TransferReport, PathBuf), StoreError> {
    let loaded = load_shards(shard_dir)?;
    let header = loaded.header;
    let code = header.build_code()?;
    let n = code.n();
    if failed == 0 || failed > n {
        return Err(StoreError::NodeOutOfRange { node: failed, n });
    }
    for j in 1..=n {
        if j != failed && !loaded.bodies.contains_key(&j) {
            return Err(StoreError::MissingHelper(j));
        }
    }
    let m = match matrix {
        Some(m) => m.clone(),
        None => code
            .designed_repair(failed)
            .ok_or(StoreError::UnsupportedConstruction)?
            .clone(),
    };
    let plan = plan_repair(&code, &m, failed)?;
    let field = code.field().clone();
    let stripes = header.stripe_count as usize;

    // per helper: which symbol offsets of a stripe column are read
    let read_cols: BTreeMap<usize, Vec<usize>> = plan
        .helpers()
        .iter()
        .map(|(&j, factors)| {
            let cols = (0..ELL)
                .filter(|&c| (0..factors.r.rows()).any(|r| factors.r.get(r, c).0 != 0))
                .collect();
            (j, cols)
        })
        .collect();

    let mut sent: BTreeMap<usize, u64> = BTreeMap::new();
    let mut read: BTreeMap<usize, u64> = BTreeMap::new();
    let mut body = Vec::with_capacity(2 * stripes);
    for s in 0..stripes {
        let mut payloads = BTreeMap::new();
        for &j in plan.helpers().keys() {
            let shard = &loaded.bodies[&j];
            let mut col = Mat::zeros(&field, ELL, 1);
            for &c in &read_cols[&j] {
                col.set(c, 0, FieldElem(shard[2 * s + c] as u16));
            }
            let payload = helper_payload(&plan, j, &col)?;
            *sent.entry(j).or_default() += payload.len() as u64;
            *read.entry(j).or_default() += read_cols[&j].len() as u64;
            payloads.insert(j, payload);
        }
        let column = execute_repair(&plan, &payloads)?;
        body.push(column.get(0, 0).0 as u8);
        body.push(column.get(1, 0).0 as u8);
    }

    let out_header = ShardHeader {
        node_index: failed as u16,
        ..header
    };
    let path = shard_path(shard_dir, failed);
    let mut out = out_header.to_bytes().to_vec();
    out.extend_from_slice(&body);
    fs::write(&path, &out)?;

    let helpers: Vec<HelperTransfer> = plan
        .helpers()
        .keys()
        .map(|&j| HelperTransfer {
            node: j,
            symbols_sent: *sent.get(&j).unwrap_or(&0),
            symbols_read: *read.get(&j).unwrap_or(&0),
        })
        .collect();
    let report = TransferReport {
        failed,
        total_sent: helpers.iter().map(|h| h.symbols_sent).sum(),
        total_read: helpers.iter().map(|h| h.symbols_read).sum(),
        stripes: stripes as u64,
        helpers,
    };
    Ok((report, path))
}

/// The set of body offsets a repair of `failed` reads from helper `j`
/// under the designed plan; used to check access contiguity.
pub fn helper_read_offsets(
    code: &CodeSpec,
    failed: usize,
    j: usize,
    stripes: usize,
) -> Result<BTreeSet<usize>, StoreError> {
    let m = code
        .designed_repair(failed)
        .ok_or(StoreError::UnsupportedConstruction)?;
    let plan = plan_repair(code, m, failed)?;
    let mut out = BTreeSet::new();
    if let Some(factors) = plan.helpers().get(&j) {
        for s in 0..stripes {
            for c in 0..ELL {
                if (0..factors.r.rows()).any(|r| factors.r.get(r, c).0 != 0) {
                    out.insert(2 * s + c);
                }
            }
        }
    }
    Ok(out)
}
