//! Packed bit strings and binary Toeplitz convolution.
//!
//! Bit `i` of a [`BitString`] lives in byte `i / 8` at position `i % 8`
//! (least-significant bit first). This is also the on-disk layout of every
//! file format in the crate.

use std::fmt;
use std::str::FromStr;

use crate::ntt::{self, Operand, Twiddles};
use crate::{Error, Result};

/// A sequence of bits with explicit length.
///
/// Unused high bits of the last byte are always zero.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    len: usize,
    bytes: Vec<u8>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString {
            len,
            bytes: vec![0; len.div_ceil(8)],
        }
    }

    /// Wraps a packed payload. Fails if the byte count is not `ceil(len/8)`
    /// or if padding bits are set.
    pub fn from_bytes(bytes: Vec<u8>, len: usize) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::LengthMismatch {
                expected: len.div_ceil(8),
                actual: bytes.len(),
            });
        }
        if len % 8 != 0 {
            let last = bytes[bytes.len() - 1];
            if last >> (len % 8) != 0 {
                return Err(Error::Parse("nonzero padding bits".into()));
            }
        }
        Ok(BitString { len, bytes })
    }

    /// Takes the first `len` bits of a packed payload.
    pub fn from_prefix(bytes: &[u8], len: usize) -> Result<Self> {
        let need = len.div_ceil(8);
        if bytes.len() < need {
            return Err(Error::LengthMismatch {
                expected: need,
                actual: bytes.len(),
            });
        }
        let mut out = bytes[..need].to_vec();
        if len % 8 != 0 {
            out[need - 1] &= (1u8 << (len % 8)) - 1;
        }
        Ok(BitString { len, bytes: out })
    }

    /// Low `len` bits of `value`, least significant first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64);
        let mut s = BitString::zeros(len);
        for i in 0..len {
            s.set(i, (value >> i) & 1 == 1);
        }
        s
    }

    /// Inverse of [`BitString::from_u64`]; `len` must be at most 64.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= 64);
        let mut v = 0u64;
        for (i, b) in self.bytes.iter().enumerate() {
            v |= (*b as u64) << (8 * i);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.bytes[i / 8] >> (i % 8)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u8 << (i % 8);
        if bit {
            self.bytes[i / 8] |= mask;
        } else {
            self.bytes[i / 8] &= !mask;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn count_ones(&self) -> usize {
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                actual: other.len,
            });
        }
        let bytes = self
            .bytes
            .iter()
            .zip(&other.bytes)
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(BitString {
            len: self.len,
            bytes,
        })
    }

    /// `len` bits starting at `start`.
    pub fn slice(&self, start: usize, len: usize) -> BitString {
        assert!(start + len <= self.len);
        let mut out = BitString::zeros(len);
        if start % 8 == 0 {
            out.bytes
                .copy_from_slice(&self.bytes[start / 8..start / 8 + len.div_ceil(8)]);
            if len % 8 != 0 {
                let last = out.bytes.len() - 1;
                out.bytes[last] &= (1u8 << (len % 8)) - 1;
            }
        } else {
            for i in 0..len {
                out.set(i, self.get(start + i));
            }
        }
        out
    }

    /// Concatenates bit strings without byte alignment between parts.
    pub fn concat<'a, I: IntoIterator<Item = &'a BitString>>(parts: I) -> BitString {
        let mut w = BitWriter::default();
        for p in parts {
            w.push_bits(p);
        }
        w.finish()
    }

    /// Packs into little-endian 64-bit words (bit `i` in word `i / 64`).
    pub fn to_words(&self) -> Vec<u64> {
        let mut words = vec![0u64; self.len.div_ceil(64)];
        for (i, b) in self.bytes.iter().enumerate() {
            words[i / 8] |= (*b as u64) << (8 * (i % 8));
        }
        words
    }

    pub fn from_words(words: &[u64], len: usize) -> BitString {
        assert!(words.len() * 64 >= len);
        let mut bytes: Vec<u8> = words.iter().flat_map(|w| w.to_le_bytes()).collect();
        bytes.truncate(len.div_ceil(8));
        if len % 8 != 0 {
            let last = bytes.len() - 1;
            bytes[last] &= (1u8 << (len % 8)) - 1;
        }
        BitString { len, bytes }
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({}: {})", self.len, self)
    }
}

/// Renders as a bit literal, first bit first.
impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<bool>>>()?;
        Ok(bits.into_iter().collect())
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut w = BitWriter::default();
        for b in iter {
            w.push(b);
        }
        w.finish()
    }
}

/// Packs a 0/1 sequence; any nonzero entry counts as 1.
pub fn bits_pack(bits: &[u8]) -> BitString {
    bits.iter().map(|&b| b != 0).collect()
}

pub fn bits_unpack(s: &BitString) -> Vec<u8> {
    s.iter().map(u8::from).collect()
}

/// Append-only bit packer.
#[derive(Debug, Default)]
pub struct BitWriter {
    len: usize,
    bytes: Vec<u8>,
}

impl BitWriter {
    pub fn push(&mut self, bit: bool) {
        if self.len % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.len() - 1;
            self.bytes[last] |= 1 << (self.len % 8);
        }
        self.len += 1;
    }

    /// Pushes the low `count` bits of `value`, least significant first.
    pub fn push_u64(&mut self, value: u64, count: u32) {
        for i in 0..count {
            self.push((value >> i) & 1 == 1);
        }
    }

    pub fn push_bits(&mut self, s: &BitString) {
        if self.len % 8 == 0 {
            self.bytes.extend_from_slice(&s.bytes);
            self.len += s.len;
        } else {
            for b in s.iter() {
                self.push(b);
            }
        }
    }

    pub fn finish(self) -> BitString {
        BitString {
            len: self.len,
            bytes: self.bytes,
        }
    }
}

/// Sequential reader over a packed payload.
#[derive(Debug)]
pub struct BitReader<'a> {
    src: &'a BitString,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(src: &'a BitString) -> Self {
        BitReader { src, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.src.len() - self.pos
    }

    pub fn read_u64(&mut self, count: u32) -> Result<u64> {
        if self.remaining() < count as usize {
            return Err(Error::Parse("seed payload truncated".into()));
        }
        let mut v = 0u64;
        for i in 0..count {
            if self.src.get(self.pos) {
                v |= 1 << i;
            }
            self.pos += 1;
        }
        Ok(v)
    }

    pub fn read_bits(&mut self, count: usize) -> Result<BitString> {
        if self.remaining() < count {
            return Err(Error::Parse("seed payload truncated".into()));
        }
        let out = self.src.slice(self.pos, count);
        self.pos += count;
        Ok(out)
    }
}

fn check_toeplitz_dims(r: &BitString, x: &BitString, ell: usize) -> Result<()> {
    if ell == 0 {
        return Err(Error::Dimensions("output length must be positive".into()));
    }
    if x.is_empty() {
        return Err(Error::Dimensions("input must be nonempty".into()));
    }
    let expected = x.len() + ell - 1;
    if r.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: r.len(),
        });
    }
    Ok(())
}

/// Word-packed reversal of `x`, shared by every naive product with the
/// same input.
#[derive(Debug, Clone)]
pub struct NaiveInput {
    n: usize,
    rev_words: Vec<u64>,
}

impl NaiveInput {
    pub fn new(x: &BitString) -> Self {
        let n = x.len();
        let mut rev = BitString::zeros(n);
        for t in 0..n {
            if x.get(n - 1 - t) {
                rev.set(t, true);
            }
        }
        NaiveInput {
            n,
            rev_words: rev.to_words(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Toeplitz product `T x` for generating vector `r` (see
    /// [`xor_convolve_naive`]).
    pub fn apply(&self, r: &BitString, ell: usize) -> Result<BitString> {
        let n = self.n;
        if ell == 0 || n == 0 {
            return Err(Error::Dimensions("empty Toeplitz product".into()));
        }
        if r.len() != n + ell - 1 {
            return Err(Error::LengthMismatch {
                expected: n + ell - 1,
                actual: r.len(),
            });
        }
        let mut r_words = r.to_words();
        r_words.push(0);
        let nw = self.rev_words.len();
        let mut out = vec![0u64; ell.div_ceil(64)];
        // Output bit i is the parity of rev(x) AND r[i .. i + n].
        for i in 0..ell {
            let (w0, s) = (i / 64, (i % 64) as u32);
            let mut acc = 0u64;
            if s == 0 {
                for (k, &xw) in self.rev_words.iter().enumerate() {
                    acc ^= xw & r_words[w0 + k];
                }
            } else {
                for (k, &xw) in self.rev_words.iter().enumerate() {
                    let lo = r_words[w0 + k] >> s;
                    let hi = r_words[w0 + k + 1] << (64 - s);
                    acc ^= xw & (lo | hi);
                }
            }
            // rev(x) is zero beyond bit n, so no masking is needed
            debug_assert!(nw * 64 >= n);
            if acc.count_ones() & 1 == 1 {
                out[i / 64] |= 1 << (i % 64);
            }
        }
        Ok(BitString::from_words(&out, ell))
    }
}

/// Toeplitz matrix-vector product over GF(2) by direct word loops.
///
/// `r` holds `n + ell - 1` bits; position `p` carries the Toeplitz entry
/// with index `p - (n - 1)`, so row `i`, column `j` of the matrix (1-based)
/// is `r[i - j + n - 1]`. Output bit `i` is `XOR_j r[i - j + n - 1] & x[j]`.
pub fn xor_convolve_naive(r: &BitString, x: &BitString, ell: usize) -> Result<BitString> {
    check_toeplitz_dims(r, x, ell)?;
    NaiveInput::new(x).apply(r, ell)
}

/// Transform-domain image of an input string, reusable across many
/// generating vectors of the same shape.
///
/// The input is cut into blocks of `block` bits; each block is convolved
/// with the matching window of `r` in a transform of size `size >= block +
/// ell - 1`, and the block products are summed before a single inverse.
#[derive(Debug, Clone)]
pub struct ToeplitzPlan {
    n: usize,
    ell: usize,
    block: usize,
    twiddles: Twiddles,
    /// Transformed input blocks.
    x_hat: Vec<Operand>,
}

impl ToeplitzPlan {
    /// Largest supported `n + ell - 1`.
    pub const MAX_LEN: usize = 1 << ntt::MAX_LOG_SIZE;

    pub fn new(x: &BitString, ell: usize) -> Result<Self> {
        let (n, total) = Self::check(x, ell)?;
        let full = total.next_power_of_two();
        // cost per product: one forward per block plus one inverse
        let cost = |size: usize| {
            let blocks = n.div_ceil(size - ell + 1);
            (blocks + 1) as f64 * size as f64 * (size.trailing_zeros() as f64 + 1.0)
        };
        let mut best = full;
        let mut size = (2 * ell).next_power_of_two();
        while size < full {
            if cost(size) < cost(best) {
                best = size;
            }
            size *= 2;
        }
        Self::build(x, ell, best)
    }

    /// Plan with a fixed transform size, a power of two `>= ell`.
    pub fn with_transform_size(x: &BitString, ell: usize, size: usize) -> Result<Self> {
        Self::check(x, ell)?;
        if !size.is_power_of_two() || size < ell {
            return Err(Error::Dimensions(format!(
                "transform size {size} does not fit output length {ell}"
            )));
        }
        if size > Self::MAX_LEN {
            return Err(Error::TransformTooLarge {
                needed: size,
                max: Self::MAX_LEN,
            });
        }
        Self::build(x, ell, size)
    }

    fn check(x: &BitString, ell: usize) -> Result<(usize, usize)> {
        let n = x.len();
        if ell == 0 || n == 0 {
            return Err(Error::Dimensions("empty Toeplitz product".into()));
        }
        let total = n + ell - 1;
        if total > Self::MAX_LEN {
            return Err(Error::TransformTooLarge {
                needed: total,
                max: Self::MAX_LEN,
            });
        }
        Ok((n, total))
    }

    fn build(x: &BitString, ell: usize, size: usize) -> Result<Self> {
        let n = x.len();
        let block = (size + 1 - ell).min(n);
        let blocks = n.div_ceil(block);
        let twiddles = Twiddles::new(size);
        let words = x.to_words();
        let x_hat = (0..blocks)
            .map(|b| {
                let lo = b * block;
                let mut chunk = vec![0u32; size];
                scatter_ones(&words, lo, (lo + block).min(n), lo, &mut chunk);
                twiddles.forward(&mut chunk);
                Operand::new(chunk)
            })
            .collect();
        Ok(ToeplitzPlan {
            n,
            ell,
            block,
            twiddles,
            x_hat,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn transform_size(&self) -> usize {
        self.twiddles.size()
    }

    pub fn block_len(&self) -> usize {
        self.block
    }

    /// `T x` for the generating vector `r`; bit-identical to
    /// [`xor_convolve_naive`].
    pub fn apply(&self, r: &BitString) -> Result<BitString> {
        let (n, ell, block) = (self.n, self.ell, self.block);
        let total = n + ell - 1;
        if r.len() != total {
            return Err(Error::LengthMismatch {
                expected: total,
                actual: r.len(),
            });
        }
        let size = self.twiddles.size();
        let words = r.to_words();
        let mut acc = vec![0u32; size];
        let mut buf = vec![0u32; size];
        for (b, xb) in self.x_hat.iter().enumerate() {
            // block b covers x[b*block ..]; its window of r starts at
            // n - (b+1)*block, which is negative for a short last block
            let base = n as isize - ((b + 1) * block) as isize;
            let lo = base.max(0) as usize;
            let hi = ((base + (block + ell - 1) as isize) as usize).min(total);
            buf.fill(0);
            scatter_ones(
                &words,
                lo,
                hi,
                lo,
                &mut buf[(lo as isize - base) as usize..],
            );
            self.twiddles.forward(&mut buf);
            xb.mul_accumulate(&mut acc, &buf);
        }
        self.twiddles.inverse_to_plain(&mut acc);
        // integer coefficients are at most n < p, so parity is exact
        Ok(acc[block - 1..block - 1 + ell]
            .iter()
            .map(|&c| c & 1 == 1)
            .collect())
    }
}

/// Writes `ONE` at `out[p - origin]` for every set bit `p` in `lo..hi`.
fn scatter_ones(words: &[u64], lo: usize, hi: usize, origin: usize, out: &mut [u32]) {
    if lo >= hi {
        return;
    }
    for w in lo / 64..=(hi - 1) / 64 {
        let mut bits = words[w];
        let first = w * 64;
        if first < lo {
            bits &= !0u64 << (lo - first);
        }
        if first + 64 > hi {
            bits &= (1u64 << (hi - first)) - 1;
        }
        while bits != 0 {
            let k = bits.trailing_zeros() as usize;
            out[first + k - origin] = ntt::ONE;
            bits &= bits - 1;
        }
    }
}

/// Toeplitz matrix-vector product via an exact number-theoretic transform.
pub fn xor_convolve_fast(r: &BitString, x: &BitString, ell: usize) -> Result<BitString> {
    check_toeplitz_dims(r, x, ell)?;
    ToeplitzPlan::new(x, ell)?.apply(r)
}
