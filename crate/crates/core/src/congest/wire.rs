//! Tagged fixed-width messages.

use crate::bits::{push_uint, read_uint, BitStr, Bits};

pub const TAG_BITS: usize = 3;

/// A 3-bit tag followed by `(value, width)` fields.
pub fn message(tag: u8, fields: &[(u64, usize)]) -> Bits {
    let mut m = Bits::with_capacity(TAG_BITS + fields.iter().map(|f| f.1).sum::<usize>());
    push_uint(&mut m, u64::from(tag), TAG_BITS);
    for &(v, w) in fields {
        push_uint(&mut m, v, w);
    }
    m
}

/// Sequential field reader over a received message.
pub struct Reader<'a> {
    msg: &'a BitStr,
    at: usize,
}

impl<'a> Reader<'a> {
    pub fn new(msg: &'a BitStr) -> Self {
        Reader { msg, at: 0 }
    }

    pub fn tag(msg: &BitStr) -> Option<u8> {
        read_uint(msg, 0, TAG_BITS).map(|t| t as u8)
    }

    /// Reader positioned after the tag.
    pub fn body(msg: &'a BitStr) -> Self {
        Reader { msg, at: TAG_BITS }
    }

    pub fn uint(&mut self, width: usize) -> Option<u64> {
        let v = read_uint(self.msg, self.at, width)?;
        self.at += width;
        Some(v)
    }

    pub fn rest(&self) -> &'a BitStr {
        &self.msg[self.at.min(self.msg.len())..]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::to_str01;

    #[test]
    fn roundtrip() {
        let m = message(5, &[(3, 2), (0, 1), (9, 4)]);
        assert_eq!(to_str01(&m), "1011101001");
        assert_eq!(Reader::tag(&m), Some(5));
        let mut r = Reader::body(&m);
        assert_eq!((r.uint(2), r.uint(1), r.uint(4)), (Some(3), Some(0), Some(9)));
        assert!(r.rest().is_empty());
        assert_eq!(r.uint(1), None);
    }
}
