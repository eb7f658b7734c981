//! Graph persistence.
//!
//! Binary layout (little endian): `b"LRPG"`, version `u16`, d `u8`, n `u64`,
//! beta `f64`, seed `u64`, edge count `u64`, then one `(i, j)` pair of `u64`
//! row-major vertex indices per long edge with `i < j`.
//!
//! The text export has a header line `# d n beta seed` and one `i j` pair per
//! line.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::graph::LrpGraph;
use crate::kernel::ModelConfig;

pub const MAGIC: &[u8; 4] = b"LRPG";
pub const VERSION: u16 = 1;

pub fn write_binary(g: &LrpGraph, mut w: impl Write) -> Result<()> {
    let c = g.config();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[c.d as u8])?;
    w.write_all(&c.n.to_le_bytes())?;
    w.write_all(&c.beta.to_le_bytes())?;
    w.write_all(&c.seed.to_le_bytes())?;
    w.write_all(&(g.long_edges().len() as u64).to_le_bytes())?;
    for &(i, j) in g.long_edges() {
        w.write_all(&i.to_le_bytes())?;
        w.write_all(&j.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_binary(mut r: impl Read) -> Result<LrpGraph> {
    let bad = |reason: &str| Error::Parse {
        line: 0,
        reason: reason.to_string(),
    };
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let mut v = [0u8; 2];
    r.read_exact(&mut v)?;
    if u16::from_le_bytes(v) != VERSION {
        return Err(bad("unsupported version"));
    }
    let mut d = [0u8; 1];
    r.read_exact(&mut d)?;
    let n = read_u64(&mut r)?;
    let beta = f64::from_le_bytes(read_u64(&mut r)?.to_le_bytes());
    let seed = read_u64(&mut r)?;
    let count = read_u64(&mut r)?;
    let config = ModelConfig::new(d[0] as usize, beta, n, seed)?;
    let mut edges = Vec::with_capacity(count.min(1 << 24) as usize);
    for _ in 0..count {
        let i = read_u64(&mut r)?;
        let j = read_u64(&mut r)?;
        if i >= j {
            return Err(bad("edge endpoints out of canonical order"));
        }
        edges.push((i, j));
    }
    LrpGraph::from_long_edges(config, edges)
}

pub fn write_text(g: &LrpGraph, mut w: impl Write) -> Result<()> {
    let c = g.config();
    writeln!(w, "# {} {} {:?} {}", c.d, c.n, c.beta, c.seed)?;
    for &(i, j) in g.long_edges() {
        writeln!(w, "{i} {j}")?;
    }
    Ok(())
}

pub fn read_text(r: impl BufRead) -> Result<LrpGraph> {
    let mut config = None;
    let mut edges = Vec::new();
    for (no, line) in r.lines().enumerate() {
        let line = line?;
        let line_no = no + 1;
        let bad = |reason: &str| Error::Parse {
            line: line_no,
            reason: reason.to_string(),
        };
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(header) = t.strip_prefix('#') {
            if config.is_some() {
                continue;
            }
            let f: Vec<&str> = header.split_whitespace().collect();
            if f.len() != 4 {
                return Err(bad("header must be `# d n beta seed`"));
            }
            let d = f[0].parse().map_err(|_| bad("d"))?;
            let n = f[1].parse().map_err(|_| bad("n"))?;
            let beta = f[2].parse().map_err(|_| bad("beta"))?;
            let seed = f[3].parse().map_err(|_| bad("seed"))?;
            config = Some(ModelConfig::new(d, beta, n, seed)?);
            continue;
        }
        if config.is_none() {
            return Err(bad("missing header"));
        }
        let mut it = t.split_whitespace();
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(bad("expected `i j`"));
        };
        let i = a.parse().map_err(|_| bad("vertex index"))?;
        let j = b.parse().map_err(|_| bad("vertex index"))?;
        edges.push((i, j));
    }
    let config = config.ok_or(Error::Empty("edge list header"))?;
    LrpGraph::from_long_edges(config, edges)
}
