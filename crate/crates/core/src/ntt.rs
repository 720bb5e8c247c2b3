//! Number-theoretic transform over the prime `p = 7 * 2^26 + 1`.
//!
//! Twiddle products use Shoup's precomputed quotients, and butterflies keep
//! values lazily reduced in `[0, 2p)`; `4p < 2^32` keeps every intermediate
//! in a `u32`, so the hot loops use wrapping arithmetic, which never
//! actually wraps.

pub(crate) const P: u32 = 469_762_049;
/// `p - 1 = 7 * 2^26`, so power-of-two transforms up to `2^26` exist.
pub(crate) const MAX_LOG_SIZE: u32 = 26;
pub(crate) const GENERATOR: u32 = 3;
pub(crate) const ONE: u32 = 1;

const TWO_P: u32 = 2 * P;

fn mul_mod(a: u32, b: u32) -> u32 {
    (a as u64 * b as u64 % P as u64) as u32
}

pub(crate) fn pow(base: u32, mut exp: u64) -> u32 {
    let mut acc = 1;
    let mut b = base % P;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, b);
        }
        b = mul_mod(b, b);
        exp >>= 1;
    }
    acc
}

/// `floor(w * 2^32 / p)` for a constant `w < p`.
#[inline(always)]
fn quotient(w: u32) -> u32 {
    (((w as u64) << 32) / P as u64) as u32
}

/// `a * w mod p` up to one extra `p`: result in `[0, 2p)` for any `a < 2^32`.
#[inline(always)]
fn shoup(a: u32, w: u32, wq: u32) -> u32 {
    let q = ((a as u64 * wq as u64) >> 32) as u32;
    a.wrapping_mul(w).wrapping_sub(q.wrapping_mul(P))
}

/// `[0, 4p) -> [0, 2p)`.
#[inline(always)]
fn fold(a: u32) -> u32 {
    a.min(a.wrapping_sub(TWO_P))
}

/// Twiddle tables for one transform size. `fwd[h + j] = w_{2h}^j`.
#[derive(Debug, Clone)]
pub(crate) struct Twiddles {
    size: usize,
    fwd: Vec<u32>,
    fwd_q: Vec<u32>,
    inv: Vec<u32>,
    inv_q: Vec<u32>,
    size_inv: u32,
}

impl Twiddles {
    pub(crate) fn new(size: usize) -> Self {
        assert!(size.is_power_of_two());
        assert!(size.trailing_zeros() <= MAX_LOG_SIZE);
        let mut fwd = vec![0u32; size.max(1)];
        let mut inv = vec![0u32; size.max(1)];
        let mut h = 1;
        while h < size {
            let w = pow(GENERATOR, (P as u64 - 1) / (2 * h) as u64);
            let wi = pow(w, P as u64 - 2);
            let (mut a, mut b) = (1, 1);
            for j in 0..h {
                fwd[h + j] = a;
                inv[h + j] = b;
                a = mul_mod(a, w);
                b = mul_mod(b, wi);
            }
            h *= 2;
        }
        Twiddles {
            size,
            fwd_q: fwd.iter().map(|&w| quotient(w)).collect(),
            inv_q: inv.iter().map(|&w| quotient(w)).collect(),
            fwd,
            inv,
            size_inv: pow(size as u32, P as u64 - 2),
        }
    }

    pub(crate) fn size(&self) -> usize {
        self.size
    }

    /// Decimation-in-frequency; natural order in, bit-reversed order out.
    /// Inputs in `[0, 2p)`, outputs in `[0, 2p)`.
    pub(crate) fn forward(&self, a: &mut [u32]) {
        debug_assert_eq!(a.len(), self.size);
        let mut h = self.size / 2;
        while h >= 1 {
            let (tw, tq) = (&self.fwd[h..2 * h], &self.fwd_q[h..2 * h]);
            for block in a.chunks_exact_mut(2 * h) {
                let (lo, hi) = block.split_at_mut(h);
                for (((u, v), &w), &wq) in lo.iter_mut().zip(hi.iter_mut()).zip(tw).zip(tq) {
                    let (x, y) = (*u, *v);
                    *u = fold(x.wrapping_add(y));
                    *v = shoup(x.wrapping_add(TWO_P.wrapping_sub(y)), w, wq);
                }
            }
            h /= 2;
        }
    }

    /// Decimation-in-time inverse; bit-reversed in (values below `2p`),
    /// natural order out as residues in `[0, p)`, scaled by `1/size`.
    pub(crate) fn inverse_to_plain(&self, a: &mut [u32]) {
        debug_assert_eq!(a.len(), self.size);
        let n = self.size;
        let mut h = 1;
        while h < n {
            let (tw, tq) = (&self.inv[h..2 * h], &self.inv_q[h..2 * h]);
            for block in a.chunks_exact_mut(2 * h) {
                let (lo, hi) = block.split_at_mut(h);
                for (((u, v), &w), &wq) in lo.iter_mut().zip(hi.iter_mut()).zip(tw).zip(tq) {
                    let x = fold(*u);
                    let y = shoup(*v, w, wq);
                    *u = x.wrapping_add(y);
                    *v = x.wrapping_add(TWO_P.wrapping_sub(y));
                }
            }
            h *= 2;
        }
        let (s, sq) = (self.size_inv, quotient(self.size_inv));
        for v in a.iter_mut() {
            let r = shoup(*v, s, sq);
            *v = r.min(r.wrapping_sub(P));
        }
    }
}

/// A fixed transform-domain operand with Shoup quotients, for repeated
/// pointwise products.
#[derive(Debug, Clone)]
pub(crate) struct Operand {
    val: Vec<u32>,
    quo: Vec<u32>,
}

impl Operand {
    /// Takes values in `[0, 2p)`, e.g. straight from [`Twiddles::forward`].
    pub(crate) fn new(mut val: Vec<u32>) -> Self {
        for v in val.iter_mut() {
            *v = (*v).min(v.wrapping_sub(P));
        }
        let quo = val.iter().map(|&v| quotient(v)).collect();
        Operand { val, quo }
    }

    /// `acc += a * self` pointwise, keeping `acc` in `[0, 2p)`.
    pub(crate) fn mul_accumulate(&self, acc: &mut [u32], a: &[u32]) {
        for (((s, &x), &w), &wq) in acc.iter_mut().zip(a).zip(&self.val).zip(&self.quo) {
            *s = fold(s.wrapping_add(shoup(x, w, wq)));
        }
    }
}
