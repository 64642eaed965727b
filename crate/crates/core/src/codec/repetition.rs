use super::{CodecError, GroupCodec};
use crate::bits::Bits;

/// Each column is written out `s` times, one copy per block.
#[derive(Clone, Copy, Debug, Default)]
pub struct RepetitionCodec;

impl GroupCodec for RepetitionCodec {
    fn name(&self) -> &str {
        "repetition"
    }

    fn tolerates(&self, s: usize, erasures: usize) -> bool {
        erasures < s
    }

    fn codeword_len(&self, s: usize) -> usize {
        s * s
    }

    fn encode_columns(&self, s: usize, columns: &[Bits]) -> Vec<Bits> {
        columns
            .iter()
            .map(|col| {
                let mut w = Bits::with_capacity(s * s);
                for _ in 0..s {
                    w.extend_from_bitslice(col);
                }
                w
            })
            .collect()
    }

    fn decode_columns(&self, s: usize, ell: usize, blocks: &[Option<Vec<Bits>>]) -> Result<Vec<Bits>, CodecError> {
        let copy = blocks.iter().flatten().next().ok_or(CodecError::TooManyErasures { erased: s, budget: s - 1 })?;
        debug_assert_eq!(copy.len(), ell);
        Ok(copy.clone())
    }
}
