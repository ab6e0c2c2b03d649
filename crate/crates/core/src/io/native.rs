//! Native paged block store.
//!
//! ```text
//! file   := header page*
//! header := magic "ARBRBLK1" | version u32 | num_features u32 | block_rows u32
//!           | page_size u32 | header_crc u32 | reserved u32            (32 bytes)
//! page   := num_blocks u32 | body_len u32 | body_crc u32 | reserved u32 | body
//! body   := block* zero padding, so that 16 + body_len is a multiple of page_size
//! block  := block_id u64 | row_offset u64 | rows u64
//!           | values f64 × (rows · num_features) | missing u64 × ceil(rows · num_features / 64)
//! ```
//!
//! All integers and floats are little-endian. A page holds whole blocks; a
//! block larger than one page gets a page spanning several page units.

use std::io::Write;
use std::path::Path;

use bitvec::prelude::*;

use crate::block::SampleBlock;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"ARBRBLK1";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 32;
const PAGE_HEADER_LEN: usize = 16;
pub const DEFAULT_PAGE_SIZE: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NativeLayout {
    pub num_features: usize,
    pub block_rows: usize,
    pub page_size: usize,
}

impl NativeLayout {
    pub fn new(num_features: usize, block_rows: usize) -> Self {
        NativeLayout { num_features, block_rows, page_size: DEFAULT_PAGE_SIZE }
    }

    fn header(&self) -> [u8; HEADER_LEN] {
        let mut h = [0u8; HEADER_LEN];
        h[..8].copy_from_slice(MAGIC);
        h[8..12].copy_from_slice(&VERSION.to_le_bytes());
        h[12..16].copy_from_slice(&(self.num_features as u32).to_le_bytes());
        h[16..20].copy_from_slice(&(self.block_rows as u32).to_le_bytes());
        h[20..24].copy_from_slice(&(self.page_size as u32).to_le_bytes());
        let crc = crc32fast::hash(&h[..24]);
        h[24..28].copy_from_slice(&crc.to_le_bytes());
        h
    }
}

fn encoded_len(block: &SampleBlock) -> usize {
    let cells = block.values().len();
    24 + cells * 8 + cells.div_ceil(64) * 8
}

fn encode_block(block: &SampleBlock, out: &mut Vec<u8>) {
    out.extend_from_slice(&(block.block_id as u64).to_le_bytes());
    out.extend_from_slice(&(block.row_offset as u64).to_le_bytes());
    out.extend_from_slice(&(block.num_rows() as u64).to_le_bytes());
    for v in block.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let cells = block.values().len();
    let mut words = vec![0u64; cells.div_ceil(64)];
    let missing = block.missing();
    for (i, word) in words.iter_mut().enumerate() {
        let end = ((i + 1) * 64).min(cells);
        *word = missing[i * 64..end].load_le::<u64>();
    }
    for w in words {
        out.extend_from_slice(&w.to_le_bytes());
    }
}

/// Writes `blocks` to a new store at `path`.
pub fn store_native(path: impl AsRef<Path>, layout: NativeLayout, blocks: &[SampleBlock]) -> Result<()> {
    let path = path.as_ref();
    if layout.page_size <= PAGE_HEADER_LEN || layout.num_features == 0 {
        return Err(Error::Config(format!("unusable native layout {layout:?}")));
    }
    if let Some(b) = blocks.iter().find(|b| b.num_features() != layout.num_features) {
        return Err(Error::DimensionMismatch { expected: layout.num_features, actual: b.num_features() });
    }
    let capacity = layout.page_size - PAGE_HEADER_LEN;
    let mut file = Vec::with_capacity(HEADER_LEN + blocks.iter().map(encoded_len).sum::<usize>());
    file.extend_from_slice(&layout.header());
    let mut body = Vec::with_capacity(capacity);
    let mut count = 0u32;
    let flush_page = |body: &mut Vec<u8>, count: &mut u32, file: &mut Vec<u8>| {
        if *count == 0 {
            return;
        }
        let padded = (PAGE_HEADER_LEN + body.len()).div_ceil(layout.page_size) * layout.page_size;
        body.resize(padded - PAGE_HEADER_LEN, 0);
        file.extend_from_slice(&count.to_le_bytes());
        file.extend_from_slice(&(body.len() as u32).to_le_bytes());
        file.extend_from_slice(&crc32fast::hash(body).to_le_bytes());
        file.extend_from_slice(&0u32.to_le_bytes());
        file.extend_from_slice(body);
        body.clear();
        *count = 0;
    };
    for block in blocks {
        if count > 0 && body.len() + encoded_len(block) > capacity {
            flush_page(&mut body, &mut count, &mut file);
        }
        encode_block(block, &mut body);
        count += 1;
    }
    flush_page(&mut body, &mut count, &mut file);
    let mut out = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    out.write_all(&file).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let slice = self.bytes.get(self.pos..self.pos.checked_add(n)?)?;
        self.pos += n;
        Some(slice)
    }

    fn u32(&mut self) -> Option<u32> {
        Some(u32::from_le_bytes(self.take(4)?.try_into().ok()?))
    }

    fn u64(&mut self) -> Option<u64> {
        Some(u64::from_le_bytes(self.take(8)?.try_into().ok()?))
    }
}

/// Reads a whole store, verifying the header and every page checksum.
pub fn load_native(path: impl AsRef<Path>) -> Result<(NativeLayout, Vec<SampleBlock>)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let corrupt = |reason: &str| Error::StoreCorrupt { path: path.to_path_buf(), reason: reason.to_owned() };
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let mut cur = Cursor { bytes: &bytes, pos: 8 };
    let version = cur.u32().ok_or_else(|| corrupt("truncated header"))?;
    let num_features = cur.u32().ok_or_else(|| corrupt("truncated header"))? as usize;
    let block_rows = cur.u32().ok_or_else(|| corrupt("truncated header"))? as usize;
    let page_size = cur.u32().ok_or_else(|| corrupt("truncated header"))? as usize;
    let crc = cur.u32().ok_or_else(|| corrupt("truncated header"))?;
    if crc != crc32fast::hash(&bytes[..24]) {
        return Err(corrupt("header checksum mismatch"));
    }
    if version != VERSION {
        return Err(corrupt("unsupported version"));
    }
    if num_features == 0 {
        return Err(corrupt("zero features"));
    }
    let layout = NativeLayout { num_features, block_rows, page_size };
    cur.pos = HEADER_LEN;
    let mut blocks = Vec::new();
    while cur.pos < bytes.len() {
        let count = cur.u32().ok_or_else(|| corrupt("truncated page header"))?;
        let body_len = cur.u32().ok_or_else(|| corrupt("truncated page header"))? as usize;
        let crc = cur.u32().ok_or_else(|| corrupt("truncated page header"))?;
        cur.take(4).ok_or_else(|| corrupt("truncated page header"))?;
        let body = cur.take(body_len).ok_or_else(|| corrupt("truncated page"))?;
        if crc32fast::hash(body) != crc {
            return Err(corrupt("page checksum mismatch"));
        }
        let mut page = Cursor { bytes: body, pos: 0 };
        for _ in 0..count {
            blocks.push(decode_block(&mut page, num_features).ok_or_else(|| corrupt("malformed block"))?);
        }
        if body[page.pos..].iter().any(|&b| b != 0) {
            return Err(corrupt("garbage after last block"));
        }
    }
    Ok((layout, blocks))
}

fn decode_block(cur: &mut Cursor<'_>, num_features: usize) -> Option<SampleBlock> {
    let block_id = cur.u64()? as usize;
    let row_offset = cur.u64()? as usize;
    let rows = cur.u64()? as usize;
    let cells = rows.checked_mul(num_features)?;
    let raw = cur.take(cells.checked_mul(8)?)?;
    let values: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let words: Vec<u64> = cur
        .take(cells.div_ceil(64) * 8)?
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let mut missing = BitVec::<u64, Lsb0>::from_vec(words);
    if missing[cells..].any() {
        return None;
    }
    missing.truncate(cells);
    SampleBlock::new(block_id, row_offset, num_features, values, missing).ok()
}
