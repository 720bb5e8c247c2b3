//! Deterministic, metered pseudorandom bit streams.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::bitconv::{BitString, BitWriter};

/// Root of a family of named substreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MasterSeed(pub u64);

impl MasterSeed {
    /// The substream with the given label. Identical master seed and label
    /// always give the identical bit sequence.
    pub fn stream(&self, label: &str) -> RandomStream {
        let mut h = Sha256::new();
        h.update(b"listpa/substream/v1");
        h.update(self.0.to_le_bytes());
        h.update((label.len() as u64).to_le_bytes());
        h.update(label.as_bytes());
        let key: [u8; 32] = h.finalize().into();
        RandomStream {
            label: label.to_owned(),
            rng: ChaCha20Rng::from_seed(key),
            buf: 0,
            buf_bits: 0,
            consumed: 0,
        }
    }
}

/// A ChaCha20 bit source that counts every bit it hands out.
#[derive(Debug, Clone)]
pub struct RandomStream {
    label: String,
    rng: ChaCha20Rng,
    buf: u64,
    buf_bits: u32,
    consumed: u64,
}

impl RandomStream {
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Total bits handed out so far.
    pub fn bits_consumed(&self) -> u64 {
        self.consumed
    }

    pub fn next_bit(&mut self) -> bool {
        self.next_bits(1) == 1
    }

    /// `count <= 64` fresh uniform bits in the low end of the result.
    pub fn next_bits(&mut self, count: u32) -> u64 {
        assert!(count <= 64);
        if count == 0 {
            return 0;
        }
        self.consumed += count as u64;
        if self.buf_bits >= count {
            let v = if count == 64 {
                self.buf
            } else {
                self.buf & ((1u64 << count) - 1)
            };
            self.buf = self.buf.checked_shr(count).unwrap_or(0);
            self.buf_bits -= count;
            return v;
        }
        // take what is buffered, refill, take the rest
        let have = self.buf_bits;
        let low = self.buf;
        let fresh = self.rng.next_u64();
        let need = count - have;
        let high = if need == 64 {
            fresh
        } else {
            fresh & ((1u64 << need) - 1)
        };
        self.buf = fresh.checked_shr(need).unwrap_or(0);
        self.buf_bits = 64 - need;
        low | high.checked_shl(have).unwrap_or(0)
    }

    pub fn bit_string(&mut self, len: usize) -> BitString {
        let mut w = BitWriter::default();
        let mut left = len;
        while left > 0 {
            let take = left.min(64) as u32;
            w.push_u64(self.next_bits(take), take);
            left -= take as usize;
        }
        w.finish()
    }

    /// Uniform integer in `0..bound` by rejection on `ceil(log2 bound)` bits.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        if bound == 1 {
            return 0;
        }
        let bits = 64 - (bound - 1).leading_zeros();
        loop {
            let v = self.next_bits(bits);
            if v < bound {
                return v;
            }
        }
    }

    /// Bernoulli draw with probability `p`, metered as 64 bits.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        let u = (self.next_bits(64) >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        u < p
    }

    /// An independent child stream, e.g. for one Monte-Carlo shard.
    pub fn fork(&mut self, label: &str) -> RandomStream {
        let seed = MasterSeed(self.rng.gen());
        seed.stream(&format!("{}/{}", self.label, label))
    }
}
