//! The certificate file format: a small header plus one cycle per line as
//! part-tagged vertex labels (`r12 s3 t45 s7 t2`). Plain text for
//! diffability; parse and serialize round-trip byte-identically. A gzip
//! flag exists for big blowup outputs, detected on read by the magic bytes.
//!
//! Parsing checks syntax only. Whether the cycles decompose anything is the
//! verifier's call, so structurally absurd cycles still parse.

use std::collections::BTreeSet;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::model::{Cycle, Decomposition, Params, Part, Vertex};
use crate::trades::{Role, Trade, TradeKind};
use crate::model::CellRef;

pub const FORMAT_TAG: &str = "tricycle-cert";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertificateFile {
    pub params: Params,
    pub lengths: BTreeSet<usize>,
    pub producer: String,
    /// Present on blowup outputs: the parameters the certificate was
    /// lifted from.
    pub source: Option<Params>,
    pub decomposition: Decomposition,
}

impl CertificateFile {
    pub fn new(
        decomposition: Decomposition,
        lengths: &BTreeSet<usize>,
        producer: &str,
        source: Option<Params>,
    ) -> CertificateFile {
        CertificateFile {
            params: decomposition.params,
            lengths: lengths.clone(),
            producer: producer.to_string(),
            source,
            decomposition,
        }
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{FORMAT_TAG} v{FORMAT_VERSION}\n"));
        out.push_str(&format!(
            "params {} {} {}\n",
            self.params.r, self.params.s, self.params.t
        ));
        let lens: Vec<String> = self.lengths.iter().map(|l| l.to_string()).collect();
        out.push_str(&format!("lengths {}\n", lens.join(" ")));
        out.push_str(&format!("producer {}\n", self.producer));
        if let Some(src) = self.source {
            out.push_str(&format!("source {} {} {}\n", src.r, src.s, src.t));
        }
        out.push_str(&format!("cycles {}\n", self.decomposition.cycles.len()));
        out.push_str("---\n");
        for cycle in &self.decomposition.cycles {
            let labels: Vec<String> = cycle
                .vertices()
                .iter()
                .map(|v| format!("{}{}", v.part.tag(), v.index))
                .collect();
            out.push_str(&labels.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<CertificateFile, ParseError> {
        let syntax = |line: usize, msg: &str| ParseError::Syntax { line, msg: msg.to_string() };
        let mut lines = text.lines().enumerate();

        let (ln, head) = lines.next().ok_or_else(|| syntax(0, "empty file"))?;
        if head != format!("{FORMAT_TAG} v{FORMAT_VERSION}") {
            return Err(syntax(ln + 1, "unrecognized format header"));
        }

        let mut params = None;
        let mut lengths = None;
        let mut producer = None;
        let mut source = None;
        let mut declared = None;
        loop {
            let (ln, line) = lines.next().ok_or_else(|| syntax(0, "truncated header"))?;
            if line == "---" {
                break;
            }
            let (key, rest) = line
                .split_once(' ')
                .ok_or_else(|| syntax(ln + 1, "malformed header line"))?;
            match key {
                "params" => params = Some(parse_triple(rest, ln + 1)?),
                "source" => source = Some(parse_triple(rest, ln + 1)?),
                "lengths" => {
                    let mut set = BTreeSet::new();
                    for tok in rest.split(' ') {
                        set.insert(
                            tok.parse::<usize>()
                                .map_err(|_| syntax(ln + 1, "bad length"))?,
                        );
                    }
                    lengths = Some(set);
                }
                "producer" => producer = Some(rest.to_string()),
                "cycles" => {
                    declared = Some(
                        rest.parse::<usize>()
                            .map_err(|_| syntax(ln + 1, "bad cycle count"))?,
                    )
                }
                _ => return Err(syntax(ln + 1, "unknown header key")),
            }
        }

        let params = params.ok_or_else(|| syntax(0, "missing params"))?;
        let lengths = lengths.ok_or_else(|| syntax(0, "missing lengths"))?;
        let producer = producer.ok_or_else(|| syntax(0, "missing producer"))?;
        let declared = declared.ok_or_else(|| syntax(0, "missing cycle count"))?;

        let mut cycles = Vec::with_capacity(declared);
        for (ln, line) in lines {
            if line.is_empty() {
                return Err(syntax(ln + 1, "blank line in body"));
            }
            let mut vs = Vec::new();
            for tok in line.split(' ') {
                vs.push(parse_vertex(tok, ln + 1)?);
            }
            cycles.push(Cycle::new_unchecked(vs));
        }
        if cycles.len() != declared {
            return Err(syntax(0, "cycle count does not match body"));
        }
        Ok(CertificateFile {
            params,
            lengths,
            producer,
            source,
            decomposition: Decomposition::new(params, cycles),
        })
    }

    /// Writes the certificate, gzip-compressed when `gzip` is set.
    pub fn write_file(&self, path: &Path, gzip: bool) -> std::io::Result<()> {
        let text = self.serialize();
        if gzip {
            let file = fs::File::create(path)?;
            let mut enc = flate2::write::GzEncoder::new(file, flate2::Compression::default());
            enc.write_all(text.as_bytes())?;
            enc.finish()?;
        } else {
            fs::write(path, text)?;
        }
        Ok(())
    }

    /// Reads a certificate, transparently inflating gzip (sniffed from the
    /// magic bytes).
    pub fn read_file(path: &Path) -> Result<CertificateFile, ParseError> {
        let raw = fs::read(path)?;
        let text = if raw.starts_with(&[0x1f, 0x8b]) {
            let mut dec = flate2::read::GzDecoder::new(&raw[..]);
            let mut s = String::new();
            dec.read_to_string(&mut s)?;
            s
        } else {
            String::from_utf8(raw)
                .map_err(|_| ParseError::Syntax { line: 0, msg: "not utf-8".into() })?
        };
        CertificateFile::parse(&text)
    }
}

fn parse_triple(rest: &str, line: usize) -> Result<Params, ParseError> {
    let nums: Vec<u32> = rest
        .split(' ')
        .map(|t| t.parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|_| ParseError::Syntax { line, msg: "bad integer".into() })?;
    if nums.len() != 3 {
        return Err(ParseError::Syntax { line, msg: "want three sizes".into() });
    }
    Params::new(nums[0], nums[1], nums[2])
        .map_err(|e| ParseError::Syntax { line, msg: e.to_string() })
}

fn parse_vertex(tok: &str, line: usize) -> Result<Vertex, ParseError> {
    let mut chars = tok.chars();
    let tag = chars
        .next()
        .and_then(Part::from_tag)
        .ok_or_else(|| ParseError::Syntax { line, msg: format!("bad vertex '{tok}'") })?;
    let index: u32 = chars
        .as_str()
        .parse()
        .map_err(|_| ParseError::Syntax { line, msg: format!("bad vertex '{tok}'") })?;
    if index == 0 {
        return Err(ParseError::Syntax { line, msg: "vertex index 0".into() });
    }
    Ok(Vertex::new(tag, index))
}

/// Sidecar listing of the trades behind a certificate, one per line:
/// `KIND cells (r,c) ... roles name=vertex ...`. Lets a third party
/// re-expand each trade and re-check the exchange independently.
pub fn serialize_trades(params: &Params, trades: &[Trade]) -> String {
    let mut out = String::new();
    out.push_str(&format!("tricycle-trades v{FORMAT_VERSION}\n"));
    out.push_str(&format!("params {} {} {}\n", params.r, params.s, params.t));
    out.push_str(&format!("trades {}\n", trades.len()));
    out.push_str("---\n");
    for tr in trades {
        out.push_str(tr.kind.label());
        out.push_str(" cells");
        for c in &tr.cells {
            out.push_str(&format!(" ({},{})", c.row, c.col));
        }
        out.push_str(" roles");
        for (role, v) in &tr.roles {
            out.push_str(&format!(" {}={}{}", role.label(), v.part.tag(), v.index));
        }
        out.push('\n');
    }
    out
}

pub fn parse_trades(text: &str) -> Result<(Params, Vec<Trade>), ParseError> {
    let syntax = |line: usize, msg: &str| ParseError::Syntax { line, msg: msg.to_string() };
    let mut lines = text.lines().enumerate();
    let (ln, head) = lines.next().ok_or_else(|| syntax(0, "empty file"))?;
    if head != format!("tricycle-trades v{FORMAT_VERSION}") {
        return Err(syntax(ln + 1, "unrecognized format header"));
    }
    let (ln, pline) = lines.next().ok_or_else(|| syntax(0, "truncated"))?;
    let params = pline
        .strip_prefix("params ")
        .ok_or_else(|| syntax(ln + 1, "missing params"))
        .and_then(|rest| parse_triple(rest, ln + 1))?;
    let (_, _count) = lines.next().ok_or_else(|| syntax(0, "truncated"))?;
    let (_, sep) = lines.next().ok_or_else(|| syntax(0, "truncated"))?;
    if sep != "---" {
        return Err(syntax(0, "missing separator"));
    }
    let mut trades = Vec::new();
    for (ln, line) in lines {
        let (kind_tok, rest) = line
            .split_once(" cells")
            .ok_or_else(|| syntax(ln + 1, "missing cells"))?;
        let kind = TradeKind::from_label(kind_tok)
            .ok_or_else(|| syntax(ln + 1, "unknown trade kind"))?;
        let (cells_tok, roles_tok) = rest
            .split_once(" roles")
            .ok_or_else(|| syntax(ln + 1, "missing roles"))?;
        let mut cells = Vec::new();
        for tok in cells_tok.split_whitespace() {
            let inner = tok
                .strip_prefix('(')
                .and_then(|x| x.strip_suffix(')'))
                .ok_or_else(|| syntax(ln + 1, "bad cell"))?;
            let (a, b) = inner
                .split_once(',')
                .ok_or_else(|| syntax(ln + 1, "bad cell"))?;
            let row = a.parse().map_err(|_| syntax(ln + 1, "bad cell row"))?;
            let col = b.parse().map_err(|_| syntax(ln + 1, "bad cell col"))?;
            cells.push(CellRef::new(row, col));
        }
        let mut roles = Vec::new();
        for tok in roles_tok.split_whitespace() {
            let (name, vtx) = tok
                .split_once('=')
                .ok_or_else(|| syntax(ln + 1, "bad role"))?;
            let role =
                Role::from_label(name).ok_or_else(|| syntax(ln + 1, "unknown role"))?;
            roles.push((role, parse_vertex(vtx, ln + 1)?));
        }
        trades.push(Trade::new(kind, cells, roles));
    }
    Ok((params, trades))
}
