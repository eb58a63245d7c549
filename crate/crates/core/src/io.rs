//! Parameter, shard and message file formats.
//!
//! # Parameter file
//!
//! TOML with the keys below, always written in this order. The written text
//! is canonical: regenerating it from the parsed parameters reproduces it
//! byte for byte, and its SHA-256 prefix is the digest stamped into shards.
//!
//! ```toml
//! format_version = 1
//! n = 6
//! k = 3
//! h = 2
//! d = 4
//! field_width = 4
//! reduction_polynomial = "0x13"
//! lambda_seed = "canonical"   # or an integer seed
//! ```
//!
//! # Shard file
//!
//! | offset | size | content                                  |
//! |--------|------|------------------------------------------|
//! | 0      | 4    | magic `CMSR`                             |
//! | 4      | 1    | format version (1)                       |
//! | 5      | 1    | field width in bits                      |
//! | 6      | 2    | node index, 1-based, LE                  |
//! | 8      | 2    | plane count `m`, LE                      |
//! | 10     | 2    | digit count `n`, LE                      |
//! | 12     | 2    | digit base `s`, LE                       |
//! | 14     | 8    | first 8 bytes of SHA-256(params text)    |
//! | 22     | ...  | `l` symbols, plane-major, LE             |
//!
//! Symbols take `ceil(width / 8)` bytes. Message files are bare symbol
//! streams in the same encoding.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::code::{CodeParams, NodeVector, ParamOptions};
use crate::error::{Error, Result};
use crate::field::{reduction_polynomial, Field, Symbol};

pub const FORMAT_VERSION: u8 = 1;
pub const SHARD_MAGIC: &[u8; 4] = b"CMSR";
pub const SHARD_HEADER_LEN: usize = 22;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSeed {
    Seed(u64),
    Named(String),
}

impl LambdaSeed {
    const CANONICAL: &'static str = "canonical";

    fn to_option(&self) -> Result<Option<u64>> {
        match self {
            LambdaSeed::Seed(s) => Ok(Some(*s)),
            LambdaSeed::Named(name) if name == Self::CANONICAL => Ok(None),
            LambdaSeed::Named(other) => Err(Error::Format(format!(
                "lambda_seed must be an integer or \"canonical\", got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub format_version: u8,
    pub n: usize,
    pub k: usize,
    pub h: usize,
    pub d: usize,
    pub field_width: u32,
    pub reduction_polynomial: String,
    pub lambda_seed: LambdaSeed,
}

impl ParamsFile {
    pub fn from_params(params: &CodeParams) -> Self {
        let field = params.field();
        ParamsFile {
            format_version: FORMAT_VERSION,
            n: params.n(),
            k: params.k(),
            h: params.h(),
            d: params.d(),
            field_width: field.width(),
            reduction_polynomial: format!("{:#x}", field.polynomial()),
            lambda_seed: match params.seed() {
                Some(s) => LambdaSeed::Seed(s),
                None => LambdaSeed::Named(LambdaSeed::CANONICAL.into()),
            },
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(format!("params file: {e}")))
    }

    pub fn canonical_text(&self) -> String {
        toml::to_string(self).expect("plain keys always serialize")
    }

    pub fn digest(&self) -> [u8; 8] {
        let hash = Sha256::digest(self.canonical_text().as_bytes());
        let mut out = [0u8; 8];
        out.copy_from_slice(&hash[..8]);
        out
    }

    pub fn to_params(&self, max_symbols: usize) -> Result<CodeParams> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "params format version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        let poly = reduction_polynomial(self.field_width)?;
        let given = u32::from_str_radix(
            self.reduction_polynomial
                .trim_start_matches("0x")
                .trim_start_matches("0X"),
            16,
        )
        .map_err(|e| Error::Format(format!("reduction_polynomial: {e}")))?;
        if given != poly {
            return Err(Error::Format(format!(
                "reduction polynomial {given:#x} does not match the width-{} polynomial {poly:#x}",
                self.field_width
            )));
        }
        let opts = ParamOptions {
            width: Some(self.field_width),
            seed: self.lambda_seed.to_option()?,
            max_symbols,
        };
        CodeParams::with_options(self.n, self.k, self.h, self.d, &opts)
    }
}

/// Digest stamped into every shard of a code.
pub fn params_digest(params: &CodeParams) -> [u8; 8] {
    ParamsFile::from_params(params).digest()
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_params(path: &Path, params: &CodeParams) -> Result<()> {
    write_atomic(
        path,
        ParamsFile::from_params(params).canonical_text().as_bytes(),
    )
}

pub fn read_params(path: &Path, max_symbols: usize) -> Result<CodeParams> {
    ParamsFile::parse(&fs::read_to_string(path)?)?.to_params(max_symbols)
}

pub fn symbols_to_bytes(field: &Field, symbols: &[Symbol]) -> Vec<u8> {
    match field.symbol_bytes() {
        1 => symbols.iter().map(|&x| x as u8).collect(),
        _ => symbols.iter().flat_map(|&x| x.to_le_bytes()).collect(),
    }
}

pub fn symbols_from_bytes(field: &Field, bytes: &[u8]) -> Result<Vec<Symbol>> {
    let width = field.symbol_bytes();
    if !bytes.len().is_multiple_of(width) {
        return Err(Error::Format(format!(
            "{} bytes is not a whole number of {width}-byte symbols",
            bytes.len()
        )));
    }
    let symbols: Vec<Symbol> = match width {
        1 => bytes.iter().map(|&b| b as Symbol).collect(),
        _ => bytes
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect(),
    };
    if let Some(bad) = symbols.iter().find(|&&x| !field.contains(x)) {
        return Err(Error::Format(format!(
            "symbol {bad:#x} is outside GF(2^{})",
            field.width()
        )));
    }
    Ok(symbols)
}

pub fn read_message(path: &Path, params: &CodeParams) -> Result<Vec<Symbol>> {
    let symbols = symbols_from_bytes(params.field(), &fs::read(path)?)?;
    let expected = params.k() * params.l();
    if symbols.len() != expected {
        return Err(Error::Length {
            expected,
            got: symbols.len(),
        });
    }
    Ok(symbols)
}

fn to_u16(what: &str, v: usize) -> Result<[u8; 2]> {
    u16::try_from(v)
        .map(u16::to_le_bytes)
        .map_err(|_| Error::Format(format!("{what} = {v} does not fit the shard header")))
}

/// Serializes node `node` (0-based).
pub fn encode_shard(params: &CodeParams, node: usize, content: &NodeVector) -> Result<Vec<u8>> {
    params.check_node(content)?;
    if node >= params.n() {
        return Err(Error::OutOfRange {
            value: node,
            limit: params.n(),
        });
    }
    let field = params.field();
    let mut out = Vec::with_capacity(SHARD_HEADER_LEN + params.l() * field.symbol_bytes());
    out.extend_from_slice(SHARD_MAGIC);
    out.push(FORMAT_VERSION);
    out.push(field.width() as u8);
    out.extend_from_slice(&to_u16("node index", node + 1)?);
    out.extend_from_slice(&to_u16("m", params.m())?);
    out.extend_from_slice(&to_u16("n", params.n())?);
    out.extend_from_slice(&to_u16("s", params.s())?);
    out.extend_from_slice(&params_digest(params));
    out.extend_from_slice(&symbols_to_bytes(field, content.as_slice()));
    Ok(out)
}

/// Parses a shard for `params`, returning the 0-based node index.
pub fn decode_shard(params: &CodeParams, bytes: &[u8]) -> Result<(usize, NodeVector)> {
    if bytes.len() < SHARD_HEADER_LEN {
        return Err(Error::Format("truncated shard header".into()));
    }
    if &bytes[0..4] != SHARD_MAGIC {
        return Err(Error::Format("bad shard magic".into()));
    }
    if bytes[4] != FORMAT_VERSION {
        return Err(Error::Format(format!("shard format version {}", bytes[4])));
    }
    let u16_at = |off: usize| u16::from_le_bytes([bytes[off], bytes[off + 1]]) as usize;
    let field = params.field();
    if bytes[5] as u32 != field.width() {
        return Err(Error::Format(format!(
            "shard field width {} does not match params width {}",
            bytes[5],
            field.width()
        )));
    }
    let node = u16_at(6);
    if node == 0 || node > params.n() {
        return Err(Error::Format(format!(
            "shard node index {node} out of range"
        )));
    }
    if (u16_at(8), u16_at(10), u16_at(12)) != (params.m(), params.n(), params.s()) {
        return Err(Error::Format("shard shape does not match params".into()));
    }
    if bytes[14..22] != params_digest(params) {
        return Err(Error::Format("shard digest does not match params".into()));
    }
    let payload = &bytes[SHARD_HEADER_LEN..];
    let expected = params.l() * field.symbol_bytes();
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "shard payload is {} bytes, expected {expected}",
            payload.len()
        )));
    }
    let symbols = symbols_from_bytes(field, payload)?;
    Ok((node - 1, NodeVector::from_symbols(params.span(), symbols)?))
}

/// `<dir>/node_<NNN>.cmsr` with a 1-based node number.
pub fn shard_path(dir: &Path, node: usize) -> PathBuf {
    dir.join(format!("node_{:03}.cmsr", node + 1))
}

pub fn write_shard(
    path: &Path,
    params: &CodeParams,
    node: usize,
    content: &NodeVector,
) -> Result<()> {
    write_atomic(path, &encode_shard(params, node, content)?)
}

pub fn read_shard(path: &Path, params: &CodeParams) -> Result<(usize, NodeVector)> {
    decode_shard(params, &fs::read(path)?)
}

/// Reads every shard present in `dir`; missing files become `None`.
pub fn read_shard_dir(dir: &Path, params: &CodeParams) -> Result<Vec<Option<NodeVector>>> {
    let mut out = vec![None; params.n()];
    for (i, slot) in out.iter_mut().enumerate() {
        let path = shard_path(dir, i);
        if !path.exists() {
            continue;
        }
        let (node, content) = read_shard(&path, params)?;
        if node != i {
            return Err(Error::Format(format!(
                "{} holds node {}",
                path.display(),
                node + 1
            )));
        }
        *slot = Some(content);
    }
    Ok(out)
}
