//! On-disk tables and checkpoints.
//!
//! A file is one JSON header line followed by a binary payload. The header
//! carries the format version, what the payload holds, the space it covers
//! and a SHA-256 checksum of the payload. The payload is a sequence of
//! little-endian big integers, each prefixed by its byte length as a `u32`.
//! Checkpoints store raw numerators over the implicit scale `2^n`; tables
//! store reduced numerator/denominator pairs, both transient labels and the
//! position class.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_bigint::{BigInt, BigUint};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::{self, Classification};
use crate::board::{BoardDims, Status};
use crate::certify::{self, Perspective, QuiescenceClass, TransientLabels};
use crate::dyadic::{Kind, ThresholdVector};
use crate::error::{Error, Result};
use crate::pieceset::PieceSet;
use crate::solution::Solution;
use crate::space::{PositionSpace, SpaceOptions};
use crate::Rational;

pub const FORMAT_VERSION: &str = "1.0";
const FORMAT_MAJOR: &str = "1";
const NO_LABEL: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PayloadKind {
    Alpha,
    Beta,
    Table,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Horizon {
    Step(u32),
    Certified(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub n_stabilized: u32,
    /// Seconds since the Unix epoch when the certification finished.
    pub certified_at: u64,
    pub tool_version: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub format_version: String,
    pub kind: PayloadKind,
    pub n: Horizon,
    pub dims: Option<BoardDims>,
    pub piece_sets: Vec<PieceSet>,
    pub symmetry: bool,
    pub count: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub provenance: Option<Provenance>,
    pub checksum: String,
}

/// Per-position class stored in a table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PositionClass {
    Terminal,
    Normal,
    Zugzwang,
    Quiescent(QuiescenceClass),
}

impl PositionClass {
    fn code(self) -> u8 {
        match self {
            PositionClass::Terminal => 0,
            PositionClass::Normal => 1,
            PositionClass::Zugzwang => 2,
            PositionClass::Quiescent(q) => 3 + q as u8,
        }
    }

    fn from_code(c: u8) -> Result<PositionClass> {
        use QuiescenceClass::*;
        Ok(match c {
            0 => PositionClass::Terminal,
            1 => PositionClass::Normal,
            2 => PositionClass::Zugzwang,
            3..=7 => PositionClass::Quiescent([BareKings, GhostBishop, BlockedPawn, CorneredKing, Other][c as usize - 3]),
            _ => return Err(Error::Format(format!("unknown class code {c}"))),
        })
    }
}

/// A certified Richman function with its labels, in enumerate order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RichmanTable {
    pub dims: BoardDims,
    pub piece_sets: Vec<PieceSet>,
    pub options: SpaceOptions,
    pub values: Vec<Rational>,
    pub t_labels: Vec<Option<u32>>,
    pub t_prime_labels: Vec<Option<u32>>,
    pub classes: Vec<PositionClass>,
    pub provenance: Provenance,
}

impl RichmanTable {
    /// Table of a certified solution. Fails if either closure leaves
    /// positions uncovered.
    pub fn from_solution(sol: &Solution) -> Result<RichmanTable> {
        if !sol.is_certified() {
            return Err(Error::Analysis("solution is not certified".into()));
        }
        let space = sol.space();
        let certified_at = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let classes = (0..space.len())
            .map(|i| {
                if space.status(i).is_terminal() {
                    return PositionClass::Terminal;
                }
                match analytics::classify_index(sol, i) {
                    Classification::Normal => PositionClass::Normal,
                    Classification::Zugzwang => PositionClass::Zugzwang,
                    Classification::Quiescent => PositionClass::Quiescent(certify::classify(&space.position(i))),
                }
            })
            .collect();
        Ok(RichmanTable {
            dims: space.dims(),
            piece_sets: space.piece_sets().to_vec(),
            options: space.options(),
            values: sol.values().to_vec(),
            t_labels: sol.labels(Perspective::White).labels.clone(),
            t_prime_labels: sol.labels(Perspective::Black).labels.clone(),
            classes,
            provenance: Provenance {
                n_stabilized: sol.n().unwrap_or(0),
                certified_at,
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
            },
        })
    }

    /// Rebuilds the space and graph and wraps the stored values and labels.
    pub fn into_solution(self) -> Result<Solution> {
        let space = PositionSpace::build(self.dims, &self.piece_sets, self.options)?;
        if space.len() != self.values.len() {
            return Err(Error::Mismatch(format!("table has {} entries, space has {}", self.values.len(), space.len())));
        }
        let graph = space.graph()?;
        let uncovered = |labels: &[Option<u32>], need: &dyn Fn(&Rational) -> bool| -> Vec<usize> {
            (0..labels.len()).filter(|&i| labels[i].is_none() && need(&self.values[i])).collect()
        };
        let zero = Rational::from_integer(BigInt::from(0));
        let one = Rational::from_integer(BigInt::from(1));
        let t = TransientLabels {
            perspective: Perspective::White,
            uncovered: uncovered(&self.t_labels, &|v| *v > zero),
            labels: self.t_labels,
        };
        let t_prime = TransientLabels {
            perspective: Perspective::Black,
            uncovered: uncovered(&self.t_prime_labels, &|v| *v < one),
            labels: self.t_prime_labels,
        };
        Solution::with_labels(space, graph, self.values, t, t_prime, Some(self.provenance.n_stabilized))
    }
}

fn put_big(out: &mut Vec<u8>, v: &BigUint) {
    let bytes = v.to_bytes_le();
    out.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
    out.extend_from_slice(&bytes);
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| Error::Format("truncated payload".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn big(&mut self) -> Result<BigUint> {
        let n = self.u32()? as usize;
        Ok(BigUint::from_bytes_le(self.take(n)?))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format("trailing bytes after payload".into()));
        }
        Ok(())
    }
}

fn checksum(payload: &[u8]) -> String {
    hex::encode(Sha256::digest(payload))
}

fn write_file(path: &Path, header: &Header, payload: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    {
        let mut f = std::io::BufWriter::new(fs::File::create(&tmp)?);
        serde_json::to_writer(&mut f, header)?;
        f.write_all(b"\n")?;
        f.write_all(payload)?;
        f.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn read_file(path: &Path) -> Result<(Header, Vec<u8>)> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: Header = serde_json::from_str(line.trim_end()).map_err(|e| Error::Format(format!("bad header: {e}")))?;
    let major = header.format_version.split('.').next().unwrap_or("");
    if major != FORMAT_MAJOR {
        return Err(Error::Format(format!("unsupported format version {}", header.format_version)));
    }
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    let found = checksum(&payload);
    if found != header.checksum {
        return Err(Error::Integrity { expected: header.checksum, found });
    }
    Ok((header, payload))
}

/// Reads only the header line of a table or checkpoint file.
pub fn read_header(path: &Path) -> Result<Header> {
    let mut line = String::new();
    BufReader::new(fs::File::open(path)?).read_line(&mut line)?;
    serde_json::from_str(line.trim_end()).map_err(|e| Error::Format(format!("bad header: {e}")))
}

pub fn save_table(t: &RichmanTable, path: &Path) -> Result<()> {
    let n = t.values.len();
    if t.t_labels.len() != n || t.t_prime_labels.len() != n || t.classes.len() != n {
        return Err(Error::Mismatch("table columns differ in length".into()));
    }
    let mut payload = Vec::new();
    for i in 0..n {
        let v = &t.values[i];
        put_big(&mut payload, v.numer().magnitude());
        put_big(&mut payload, v.denom().magnitude());
        payload.extend_from_slice(&t.t_labels[i].unwrap_or(NO_LABEL).to_le_bytes());
        payload.extend_from_slice(&t.t_prime_labels[i].unwrap_or(NO_LABEL).to_le_bytes());
        payload.push(t.classes[i].code());
    }
    let header = Header {
        format_version: FORMAT_VERSION.into(),
        kind: PayloadKind::Table,
        n: Horizon::Certified("certified".into()),
        dims: Some(t.dims),
        piece_sets: t.piece_sets.clone(),
        symmetry: t.options.symmetry,
        count: n,
        provenance: Some(t.provenance.clone()),
        checksum: checksum(&payload),
    };
    write_file(path, &header, &payload)
}

pub fn load_table(path: &Path) -> Result<RichmanTable> {
    let (h, payload) = read_file(path)?;
    if h.kind != PayloadKind::Table {
        return Err(Error::Format(format!("{} holds a checkpoint, not a table", path.display())));
    }
    let dims = h.dims.ok_or_else(|| Error::Format("table header without dims".into()))?;
    let provenance = h.provenance.ok_or_else(|| Error::Format("table header without provenance".into()))?;
    let mut c = Cursor { buf: &payload, pos: 0 };
    let mut values = Vec::with_capacity(h.count);
    let mut t_labels = Vec::with_capacity(h.count);
    let mut t_prime_labels = Vec::with_capacity(h.count);
    let mut classes = Vec::with_capacity(h.count);
    let label = |l: u32| (l != NO_LABEL).then_some(l);
    for _ in 0..h.count {
        let (num, den) = (c.big()?, c.big()?);
        if den == BigUint::from(0u32) {
            return Err(Error::Format("zero denominator".into()));
        }
        values.push(Rational::new(num.into(), den.into()));
        t_labels.push(label(c.u32()?));
        t_prime_labels.push(label(c.u32()?));
        classes.push(PositionClass::from_code(c.take(1)?[0])?);
    }
    c.finish()?;
    Ok(RichmanTable {
        dims,
        piece_sets: h.piece_sets,
        options: SpaceOptions { symmetry: h.symmetry },
        values,
        t_labels,
        t_prime_labels,
        classes,
        provenance,
    })
}

/// Writes a threshold vector. `space` describes what it covers.
pub fn save_checkpoint(v: &ThresholdVector, space: Option<&PositionSpace>, path: &Path) -> Result<()> {
    let mut payload = Vec::new();
    for num in v.numerators() {
        put_big(&mut payload, &num);
    }
    let header = Header {
        format_version: FORMAT_VERSION.into(),
        kind: match v.kind() {
            Kind::Alpha => PayloadKind::Alpha,
            Kind::Beta => PayloadKind::Beta,
        },
        n: Horizon::Step(v.n()),
        dims: space.map(|s| s.dims()),
        piece_sets: space.map(|s| s.piece_sets().to_vec()).unwrap_or_default(),
        symmetry: space.is_some_and(|s| s.options().symmetry),
        count: v.len(),
        provenance: None,
        checksum: checksum(&payload),
    };
    write_file(path, &header, &payload)
}

pub fn load_checkpoint(path: &Path) -> Result<ThresholdVector> {
    let (h, payload) = read_file(path)?;
    let kind = match h.kind {
        PayloadKind::Alpha => Kind::Alpha,
        PayloadKind::Beta => Kind::Beta,
        PayloadKind::Table => return Err(Error::Format(format!("{} holds a table, not a checkpoint", path.display()))),
    };
    let Horizon::Step(n) = h.n else {
        return Err(Error::Format("checkpoint without a step count".into()));
    };
    let mut c = Cursor { buf: &payload, pos: 0 };
    let nums = (0..h.count).map(|_| c.big()).collect::<Result<Vec<_>>>()?;
    c.finish()?;
    ThresholdVector::from_numerators(kind, n, &nums)
}

/// Loads a checkpoint to resume the sequence of the given kind.
pub fn resume_checkpoint(path: &Path, kind: Kind) -> Result<ThresholdVector> {
    let v = load_checkpoint(path)?;
    if v.kind() != kind {
        return Err(Error::Mismatch(format!("checkpoint holds {} thresholds, expected {kind}", v.kind())));
    }
    Ok(v)
}

/// One line per position in enumerate order: FEN and value as `num/den`.
pub fn export_text(values: &[Rational], space: &PositionSpace, mut w: impl Write) -> Result<()> {
    if values.len() != space.len() {
        return Err(Error::Mismatch("values do not cover the space".into()));
    }
    for (i, v) in values.iter().enumerate() {
        writeln!(w, "{} {}/{}", space.position(i).to_fen(), v.numer(), v.denom())?;
    }
    Ok(())
}

/// Terminal status of entry `i`, for consumers that only hold a table.
pub fn table_status(t: &RichmanTable, i: usize) -> Status {
    match t.classes[i] {
        PositionClass::Terminal if t.values[i] == Rational::from_integer(BigInt::from(1)) => Status::WhiteWon,
        PositionClass::Terminal => Status::BlackWon,
        _ => Status::Ongoing,
    }
}
