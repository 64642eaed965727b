use reed_solomon_erasure::{galois_16, galois_8, Field, ReedSolomon};

use super::{CodecError, GroupCodec};
use crate::bits::{push_uint, read_uint, Bits};

/// Systematic Reed–Solomon code over GF(2^8), or GF(2^16) when a group needs
/// more than 256 symbols.
///
/// A column of `s` bits is packed into `k = ⌈s/q⌉` data symbols of `q` bits.
/// Each of the `s` blocks holds `x` symbols, with `x` the smallest value such
/// that any `s − budget` blocks carry at least `k` symbols.
#[derive(Clone, Copy, Debug)]
pub struct MdsCodec {
    budget: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MdsLayout {
    pub symbol_bits: usize,
    pub data: usize,
    pub per_block: usize,
    pub total: usize,
}

trait Symbols: Field {
    const BITS: usize;
    fn elem(v: u64) -> Self::Elem;
    fn value(e: Self::Elem) -> u64;
}

impl Symbols for galois_8::Field {
    const BITS: usize = 8;
    fn elem(v: u64) -> u8 {
        v as u8
    }
    fn value(e: u8) -> u64 {
        u64::from(e)
    }
}

impl Symbols for galois_16::Field {
    const BITS: usize = 16;
    fn elem(v: u64) -> [u8; 2] {
        (v as u16).to_be_bytes()
    }
    fn value(e: [u8; 2]) -> u64 {
        u64::from(u16::from_be_bytes(e))
    }
}

impl MdsCodec {
    pub fn new(budget: usize) -> Self {
        MdsCodec { budget }
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn layout(&self, s: usize) -> Option<MdsLayout> {
        if s == 0 || self.budget >= s {
            return None;
        }
        [(8, galois_8::Field::ORDER), (16, galois_16::Field::ORDER)].into_iter().find_map(|(q, order)| {
            let data = s.div_ceil(q);
            let per_block = data.div_ceil(s - self.budget);
            let total = s * per_block;
            (total <= order).then_some(MdsLayout { symbol_bits: q, data, per_block, total })
        })
    }

    fn layout_or_err(&self, s: usize) -> Result<MdsLayout, CodecError> {
        self.layout(s).ok_or(CodecError::IntolerantCodec { s, budget: self.budget })
    }
}

fn encode_with<F: Symbols>(lay: MdsLayout, s: usize, columns: &[Bits]) -> Vec<Bits> {
    let ell = columns.len();
    if ell == 0 {
        return Vec::new();
    }
    // Shard t holds symbol t of every column, so one call encodes the group.
    let mut shards = vec![vec![F::zero(); ell]; lay.total];
    for (j, col) in columns.iter().enumerate() {
        for (t, shard) in shards.iter_mut().take(lay.data).enumerate() {
            let lo = t * F::BITS;
            let mut v = 0u64;
            for b in lo..lo + F::BITS {
                v = (v << 1) | u64::from(b < s && col[b]);
            }
            shard[j] = F::elem(v);
        }
    }
    if lay.total > lay.data {
        ReedSolomon::<F>::new(lay.data, lay.total - lay.data)
            .expect("layout respects field order")
            .encode(&mut shards)
            .expect("shard shapes are consistent");
    }
    (0..ell)
        .map(|j| {
            let mut w = Bits::with_capacity(lay.total * F::BITS);
            for shard in &shards {
                push_uint(&mut w, F::value(shard[j]), F::BITS);
            }
            w
        })
        .collect()
}

fn decode_with<F: Symbols>(
    lay: MdsLayout,
    s: usize,
    ell: usize,
    blocks: &[Option<Vec<Bits>>],
) -> Result<Vec<Bits>, CodecError> {
    let mut shards: Vec<Option<Vec<F::Elem>>> = vec![None; lay.total];
    for (i, block) in blocks.iter().enumerate() {
        let Some(cols) = block else { continue };
        for x in 0..lay.per_block {
            let t = i * lay.per_block + x;
            let shard = cols
                .iter()
                .map(|b| read_uint(b, x * F::BITS, F::BITS).map(F::elem))
                .collect::<Option<Vec<_>>>()
                .ok_or(CodecError::CorruptBlockSize { index: i, expected: lay.per_block * F::BITS, got: 0 })?;
            shards[t] = Some(shard);
        }
    }
    if lay.total > lay.data {
        ReedSolomon::<F>::new(lay.data, lay.total - lay.data)
            .expect("layout respects field order")
            .reconstruct_data(&mut shards)
            .map_err(|e| CodecError::Decode(format!("{e:?}")))?;
    } else if shards.iter().any(Option::is_none) {
        return Err(CodecError::Decode("erased block with no redundancy".into()));
    }
    let mut columns = vec![Bits::with_capacity(s); ell];
    for (j, col) in columns.iter_mut().enumerate() {
        for shard in shards.iter().take(lay.data) {
            let v = F::value(shard.as_ref().expect("data reconstructed")[j]);
            push_uint(col, v, F::BITS);
        }
        if col[s..].any() {
            return Err(CodecError::Decode(format!("nonzero padding in column {j}")));
        }
        col.truncate(s);
    }
    Ok(columns)
}

impl GroupCodec for MdsCodec {
    fn name(&self) -> &str {
        "mds"
    }

    fn tolerates(&self, s: usize, erasures: usize) -> bool {
        erasures <= self.budget && self.layout(s).is_some()
    }

    fn codeword_len(&self, s: usize) -> usize {
        self.layout(s).map_or(0, |l| l.total * l.symbol_bits)
    }

    fn encode_columns(&self, s: usize, columns: &[Bits]) -> Vec<Bits> {
        let lay = self.layout(s).expect("encode on a group size the codec does not support");
        match lay.symbol_bits {
            8 => encode_with::<galois_8::Field>(lay, s, columns),
            _ => encode_with::<galois_16::Field>(lay, s, columns),
        }
    }

    fn decode_columns(&self, s: usize, ell: usize, blocks: &[Option<Vec<Bits>>]) -> Result<Vec<Bits>, CodecError> {
        let lay = self.layout_or_err(s)?;
        match lay.symbol_bits {
            8 => decode_with::<galois_8::Field>(lay, s, ell, blocks),
            _ => decode_with::<galois_16::Field>(lay, s, ell, blocks),
        }
    }
}
