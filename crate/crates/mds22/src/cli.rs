//! Command-line wiring: encode/decode/repair against shard directories,
//! construction verification, and oracle bounds reports.
//!
//! Exit codes: 0 success, 2 usage or configuration, 3 I/O, 4 missing
//! shards or helpers, 5 MDS failure, 6 oracle field guard. `--json`
//! switches any subcommand to machine-readable output with the same
//! numbers as the human output. `MDS22_THREADS` caps the worker count
//! (0 or unset picks the number of CPUs).

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::code::{CodeSpec, ConstructionId};
use crate::constructions::{build_c1, build_c2, default_field, partition_for, BuildError};
use crate::gf::{Field, FieldSpec};
use crate::oracle::{self, OracleError};
use crate::store::{self, StoreError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_MISSING_SHARDS: i32 = 4;
pub const EXIT_MDS_FAILURE: i32 = 5;
pub const EXIT_ORACLE_GUARD: i32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConstructionArg {
    C1,
    C2,
}

impl From<ConstructionArg> for ConstructionId {
    fn from(arg: ConstructionArg) -> ConstructionId {
        match arg {
            ConstructionArg::C1 => ConstructionId::C1,
            ConstructionArg::C2 => ConstructionId::C2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mds22",
    version,
    about = "(k+2, k, 2) MDS array codes with repair-optimal constructions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode a file into k+2 shard files
    Encode {
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum)]
        construction: ConstructionArg,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Field descriptor; defaults to gf:2^8
        #[arg(long)]
        field: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Reconstruct the original file from any k shards
    Decode {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Rebuild one shard from the others and report symbol transfer
    Repair {
        #[arg(long)]
        dir: PathBuf,
        /// 1-based node index of the shard to rebuild
        #[arg(long)]
        node: usize,
        #[arg(long)]
        json: bool,
    },
    /// Check the MDS property and the group interaction pattern
    Verify {
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum)]
        construction: ConstructionArg,
        /// Field descriptor; defaults to the construction's data-path field
        #[arg(long)]
        field: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Exhaustive per-node repair minima vs the lower bounds (small q only)
    Bounds {
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum)]
        construction: ConstructionArg,
        /// Field descriptor, e.g. gf:p=13 (order must be <= 16)
        #[arg(long)]
        field: String,
        #[arg(long)]
        json: bool,
    },
}

/// Runs the CLI against explicit arguments and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            // clap prints help/version on stdout with status 0
            let _ = err.print();
            return if err.exit_code() == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    configure_threads();
    match cli.command {
        Command::Encode {
            k,
            construction,
            input,
            out,
            field,
            json,
        } => cmd_encode(k, construction.into(), &input, &out, field.as_deref(), json),
        Command::Decode { dir, out, json } => cmd_decode(&dir, &out, json),
        Command::Repair { dir, node, json } => cmd_repair(&dir, node, json),
        Command::Verify {
            k,
            construction,
            field,
            json,
        } => cmd_verify(k, construction.into(), field.as_deref(), json),
        Command::Bounds {
            k,
            construction,
            field,
            json,
        } => cmd_bounds(k, construction.into(), &field, json),
    }
}

fn configure_threads() {
    if let Ok(val) = std::env::var("MDS22_THREADS") {
        match val.parse::<usize>() {
            Ok(0) | Err(_) => {}
            Ok(t) => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
            }
        }
    }
}

fn fail(code: i32, err: impl std::fmt::Display) -> i32 {
    eprintln!("error: {err}");
    code
}

fn build_code(id: ConstructionId, k: usize, field: &Field) -> Result<CodeSpec, i32> {
    let build = match id {
        ConstructionId::C1 => build_c1,
        ConstructionId::C2 => build_c2,
        ConstructionId::Custom => unreachable!("CLI only exposes c1/c2"),
    };
    build(k, field).map_err(|err| match err {
        BuildError::MdsCheckFailed { .. } => fail(EXIT_MDS_FAILURE, err),
        _ => fail(EXIT_USAGE, err),
    })
}

fn resolve_field(id: ConstructionId, k: usize, desc: Option<&str>) -> Result<Field, i32> {
    match desc {
        Some(desc) => FieldSpec::parse(desc).map_err(|e| fail(EXIT_USAGE, e)),
        None => default_field(id, k).map_err(|e| fail(EXIT_USAGE, e)),
    }
}

fn store_exit_code(err: &StoreError) -> i32 {
    match err {
        StoreError::Io(_) | StoreError::HeaderMismatch(_) => EXIT_IO,
        StoreError::TooFewShards { .. } | StoreError::MissingHelper(_) => EXIT_MISSING_SHARDS,
        StoreError::Build(BuildError::MdsCheckFailed { .. }) => EXIT_MDS_FAILURE,
        _ => EXIT_USAGE,
    }
}

fn cmd_encode(
    k: usize,
    id: ConstructionId,
    input: &std::path::Path,
    out: &std::path::Path,
    field: Option<&str>,
    json: bool,
) -> i32 {
    if k < 2 {
        return fail(EXIT_USAGE, "k must be at least 2");
    }
    let field = match resolve_field(id, k, field) {
        Ok(f) => f,
        Err(code) => return code,
    };
    let code = match build_code(id, k, &field) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match store::encode_file(&code, input, out) {
        Ok(manifest) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&manifest).unwrap());
            } else {
                println!(
                    "encoded {} bytes into {} shards (construction {}, k={}, {} stripes)",
                    manifest.payload_length,
                    manifest.n,
                    manifest.construction,
                    manifest.k,
                    manifest.stripes
                );
                for s in &manifest.shards {
                    println!("  node {:>2}: {} ({} bytes)", s.node, s.path, s.bytes);
                }
            }
            EXIT_OK
        }
        Err(err) => {
            let code = store_exit_code(&err);
            fail(code, err)
        }
    }
}

fn cmd_decode(dir: &std::path::Path, out: &std::path::Path, json: bool) -> i32 {
    match store::decode_file(dir, out) {
        Ok(summary) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&summary).unwrap());
            } else {
                let missing = if summary.missing_shards.is_empty() {
                    "none".to_string()
                } else {
                    format!("{:?}", summary.missing_shards)
                };
                println!(
                    "wrote {} bytes to {} (missing shards: {missing})",
                    summary.bytes_written, summary.out_path
                );
            }
            EXIT_OK
        }
        Err(err) => {
            let code = store_exit_code(&err);
            fail(code, err)
        }
    }
}

fn cmd_repair(dir: &std::path::Path, node: usize, json: bool) -> i32 {
    if node == 0 {
        return fail(EXIT_USAGE, "node indices are 1-based");
    }
    match store::repair_shard(dir, node, None) {
        Ok((report, path)) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            } else {
                println!("rebuilt shard {} at {}", report.failed, path.display());
                for h in &report.helpers {
                    println!(
                        "  helper {}: sent {} symbols, read {} symbols",
                        h.node, h.symbols_sent, h.symbols_read
                    );
                }
                println!(
                    "total: sent {} read {} over {} stripes",
                    report.total_sent, report.total_read, report.stripes
                );
            }
            EXIT_OK
        }
        Err(StoreError::NodeOutOfRange { node, n }) => fail(
            EXIT_USAGE,
            format!("node {node} out of range 1..={n}"),
        ),
        Err(err) => {
            let code = store_exit_code(&err);
            fail(code, err)
        }
    }
}

fn cmd_verify(k: usize, id: ConstructionId, field: Option<&str>, json: bool) -> i32 {
    if k < 2 {
        return fail(EXIT_USAGE, "k must be at least 2");
    }
    let field = match resolve_field(id, k, field) {
        Ok(f) => f,
        Err(code) => return code,
    };
    let code = match build_code(id, k, &field) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let part = partition_for(id, k).expect("c1/c2 partition");
    let mut pattern_ok = true;
    let mut first_bad = None;
    for i in 1..=code.n() {
        for j in 1..=code.n() {
            let mh = code
                .designed_repair(i)
                .expect("constructions carry designed matrices")
                .mul(code.h_block(j))
                .expect("2x4 times 4x2");
            let expected = if part.group_of(i) == part.group_of(j) { 2 } else { 1 };
            let got = match id {
                ConstructionId::C1 => mh.rank(),
                _ => mh.nonzero_columns(),
            };
            if got != expected {
                pattern_ok = false;
                first_bad.get_or_insert((i, j, expected, got));
            }
        }
    }
    let pattern_kind = match id {
        ConstructionId::C1 => "rank",
        _ => "nz",
    };
    if json {
        let out = json!({
            "construction": code.construction(),
            "k": k,
            "n": code.n(),
            "field": field.descriptor(),
            "q": field.order(),
            "mds": true,
            "pattern": pattern_kind,
            "pattern_ok": pattern_ok,
        });
        println!("{}", serde_json::to_string_pretty(&out).unwrap());
    } else {
        println!(
            "construction {}, k={}, n={}, field {} (q={})",
            code.construction(),
            k,
            code.n(),
            field.descriptor(),
            field.order()
        );
        println!(
            "mds check: pass ({} node pairs invertible)",
            code.n() * (code.n() - 1) / 2
        );
        match first_bad {
            None => println!("{pattern_kind} pattern: pass (2 in-group, 1 cross-group)"),
            Some((i, j, want, got)) => println!(
                "{pattern_kind} pattern: FAIL at (i={i}, j={j}): expected {want}, got {got}"
            ),
        }
    }
    if pattern_ok {
        EXIT_OK
    } else {
        EXIT_MDS_FAILURE
    }
}

fn cmd_bounds(k: usize, id: ConstructionId, field_desc: &str, json: bool) -> i32 {
    if k < 2 {
        return fail(EXIT_USAGE, "k must be at least 2");
    }
    let field = match FieldSpec::parse(field_desc) {
        Ok(f) => f,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    if field.order() > oracle::MAX_ORACLE_FIELD {
        return fail(
            EXIT_ORACLE_GUARD,
            OracleError::FieldTooLarge {
                q: field.order(),
                max: oracle::MAX_ORACLE_FIELD,
            },
        );
    }
    let code = match build_code(id, k, &field) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let report = match oracle::bounds_report(&code) {
        Ok(r) => r,
        Err(err @ OracleError::FieldTooLarge { .. }) => return fail(EXIT_ORACLE_GUARD, err),
        Err(err @ OracleError::NotMds) => return fail(EXIT_MDS_FAILURE, err),
        Err(err) => return fail(EXIT_USAGE, err),
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&report).unwrap());
    } else {
        println!(
            "construction {}, k={}, q={} ({} row spaces scanned per node)",
            report.construction,
            report.k,
            report.q,
            oracle::expected_row_space_count(report.q)
        );
        println!("per-node minima:");
        for o in &report.per_node {
            println!(
                "  node {:>2}: beta={} gamma={} gamma_relaxed={}",
                o.node, o.beta, o.gamma, o.gamma_relaxed
            );
        }
        println!("observed vs lower bound:");
        let rows = [
            (
                "avg_beta",
                report.avg_beta.to_string(),
                report.bounds.avg_beta.to_string(),
                report.satisfied.avg_beta,
            ),
            (
                "max_beta",
                report.max_beta.to_string(),
                report.bounds.max_beta.to_string(),
                report.satisfied.max_beta,
            ),
            (
                "avg_gamma",
                report.avg_gamma.to_string(),
                report.bounds.avg_gamma.to_string(),
                report.satisfied.avg_gamma,
            ),
            (
                "max_gamma",
                report.max_gamma.to_string(),
                report.bounds.max_gamma.to_string(),
                report.satisfied.max_gamma,
            ),
        ];
        for (name, observed, bound, ok) in rows {
            println!(
                "  {name:<9} = {observed:>6}  >= {bound:>6}  {}",
                if ok { "ok" } else { "VIOLATED" }
            );
        }
        println!(
            "satisfied: {}",
            if report.all_satisfied() { "all" } else { "NO" }
        );
    }
    if report.all_satisfied() {
        EXIT_OK
    } else {
        EXIT_MDS_FAILURE
    }
}
