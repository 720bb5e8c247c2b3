//! Arithmetic in `GF(2^m)` for `1 <= m <= 64`.
//!
//! Elements are stored in a `u64`; bit `i` is the coefficient of `x^i`.
//! Reduction polynomials are stored in a `u128` with bit `m` set.

use crate::{Error, Result};

pub const MAX_DEGREE: u32 = 64;

/// One low-weight irreducible polynomial per degree, index `m - 1`.
/// Trinomials where one exists, otherwise the smallest pentanomial; `m = 8`
/// uses the AES polynomial.
const DEFAULT_POLYS: [u128; 64] = [
    0x3,
    0x7,
    0xb,
    0x13,
    0x25,
    0x43,
    0x83,
    0x11b,
    0x203,
    0x409,
    0x805,
    0x1009,
    0x201b,
    0x4021,
    0x8003,
    0x1002b,
    0x20009,
    0x40009,
    0x80027,
    0x100009,
    0x200005,
    0x400003,
    0x800021,
    0x100001b,
    0x2000009,
    0x400001b,
    0x8000027,
    0x10000003,
    0x20000005,
    0x40000003,
    0x80000009,
    0x10000008d,
    0x200000401,
    0x400000081,
    0x800000005,
    0x1000000201,
    0x2000000053,
    0x4000000063,
    0x8000000011,
    0x10000000039,
    0x20000000009,
    0x40000000081,
    0x80000000059,
    0x100000000021,
    0x20000000001b,
    0x400000000003,
    0x800000000021,
    0x100000000002d,
    0x2000000000201,
    0x400000000001d,
    0x800000000004b,
    0x10000000000009,
    0x20000000000047,
    0x40000000000201,
    0x80000000000081,
    0x100000000000095,
    0x200000000000011,
    0x400000000080001,
    0x800000000000095,
    0x1000000000000003,
    0x2000000000000027,
    0x4000000020000001,
    0x8000000000000003,
    0x1000000000000001b,
];

/// Binary field parameters: degree `m` and reduction polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    pub m: u32,
    pub poly: u128,
}

impl FieldSpec {
    /// The built-in polynomial for degree `m`.
    pub fn default_for(m: u32) -> Result<Self> {
        if !(1..=MAX_DEGREE).contains(&m) {
            return Err(Error::DegreeOutOfRange(m));
        }
        Ok(FieldSpec {
            m,
            poly: DEFAULT_POLYS[m as usize - 1],
        })
    }

    pub fn order_bits(&self) -> u32 {
        self.m
    }
}

/// Returns whether `spec.poly` is irreducible of degree exactly `spec.m`.
///
/// Uses Ben-Or's test: `f` of degree `m` is irreducible iff
/// `gcd(x^(2^i) - x, f) = 1` for every `1 <= i <= m/2`.
pub fn validate_field(spec: &FieldSpec) -> Result<bool> {
    let m = spec.m;
    if !(1..=MAX_DEGREE).contains(&m) {
        return Err(Error::DegreeOutOfRange(m));
    }
    if poly_degree(spec.poly) != Some(m) {
        return Ok(false);
    }
    let f = spec.poly;
    let mut t: u128 = 0b10;
    for _ in 0..m / 2 {
        t = poly_mulmod(t, t, f, m);
        if poly_gcd(t ^ 0b10, f) != 1 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn poly_degree(p: u128) -> Option<u32> {
    if p == 0 {
        None
    } else {
        Some(127 - p.leading_zeros())
    }
}

fn poly_rem(mut a: u128, f: u128) -> u128 {
    let df = poly_degree(f).expect("nonzero modulus");
    while let Some(da) = poly_degree(a) {
        if da < df {
            break;
        }
        a ^= f << (da - df);
    }
    a
}

fn poly_gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let r = poly_rem(a, b);
        a = b;
        b = r;
    }
    a
}

// a, b have degree < m <= 64, so the product fits in 127 bits.
fn poly_mulmod(a: u128, b: u128, f: u128, m: u32) -> u128 {
    let mut r = 0u128;
    for i in 0..m {
        if (b >> i) & 1 == 1 {
            r ^= a << i;
        }
    }
    poly_rem(r, f)
}

#[inline]
fn clmul(a: u64, b: u64) -> u128 {
    let a = a as u128;
    let mut r = 0u128;
    let mut b = b;
    while b != 0 {
        let i = b.trailing_zeros();
        r ^= a << i;
        b &= b - 1;
    }
    r
}

/// A validated binary field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Field {
    spec: FieldSpec,
    mask: u64,
}

impl Field {
    pub fn new(spec: FieldSpec) -> Result<Self> {
        if !validate_field(&spec)? {
            if poly_degree(spec.poly) != Some(spec.m) {
                return Err(Error::PolynomialDegree {
                    m: spec.m,
                    poly: spec.poly,
                });
            }
            return Err(Error::ReduciblePolynomial { poly: spec.poly });
        }
        let mask = if spec.m == 64 {
            u64::MAX
        } else {
            (1u64 << spec.m) - 1
        };
        Ok(Field { spec, mask })
    }

    pub fn with_default_poly(m: u32) -> Result<Self> {
        Field::new(FieldSpec::default_for(m)?)
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn degree(&self) -> u32 {
        self.spec.m
    }

    /// Mask of the valid element bits.
    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn contains(&self, a: u64) -> bool {
        a & !self.mask == 0
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        debug_assert!(self.contains(a) && self.contains(b));
        self.reduce(clmul(a, b))
    }

    #[inline]
    fn reduce(&self, mut r: u128) -> u64 {
        let m = self.spec.m;
        let poly = self.spec.poly;
        // clear bits 2m-2 ..= m from the top down
        let mut top = 127u32.saturating_sub(r.leading_zeros());
        while r >> m != 0 {
            if (r >> top) & 1 == 1 {
                r ^= poly << (top - m);
            }
            top -= 1;
        }
        r as u64
    }

    /// `sum_i a[i] * x[i]`.
    pub fn inner_product(&self, a: &[u64], x: &[u64]) -> Result<u64> {
        if a.len() != x.len() {
            return Err(Error::LengthMismatch {
                expected: a.len(),
                actual: x.len(),
            });
        }
        if a.is_empty() {
            return Err(Error::Dimensions("empty inner product".into()));
        }
        // Accumulate unreduced products; reduction is linear over GF(2).
        let acc = a
            .iter()
            .zip(x)
            .fold(0u128, |acc, (&ai, &xi)| acc ^ clmul(ai, xi));
        Ok(self.reduce(acc))
    }

    pub fn pow(&self, mut base: u64, mut exp: u128) -> u64 {
        let mut acc = 1u64 & self.mask;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via `a^(2^m - 2)`; `None` for zero.
    pub fn inv(&self, a: u64) -> Option<u64> {
        if a == 0 {
            return None;
        }
        let order = (1u128 << self.spec.m) - 1;
        Some(self.pow(a, order - 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Reducibility oracle: trial division by every polynomial of degree
    /// 1..=m/2.
    fn irreducible_by_division(poly: u128, m: u32) -> bool {
        if m == 1 {
            return true;
        }
        for d in 1..=m / 2 {
            for low in 0..(1u128 << d) {
                let divisor = (1u128 << d) | low;
                if poly_rem(poly, divisor) == 0 {
                    return false;
                }
            }
        }
        true
    }

    // Schoolbook multiply then long division, bit by bit.
    fn mul_oracle(a: u64, b: u64, poly: u128, m: u32) -> u64 {
        let mut prod = 0u128;
        for i in 0..64 {
            for j in 0..64 {
                if (a >> i) & 1 == 1 && (b >> j) & 1 == 1 {
                    prod ^= 1u128 << (i + j);
                }
            }
        }
        for bit in (m..128).rev() {
            if (prod >> bit) & 1 == 1 {
                prod ^= poly << (bit - m);
            }
        }
        prod as u64
    }

    #[test]
    fn validate_examples() {
        assert!(validate_field(&FieldSpec { m: 3, poly: 0b1011 }).unwrap());
        assert!(validate_field(&FieldSpec { m: 2, poly: 0b111 }).unwrap());
        assert!(!validate_field(&FieldSpec { m: 3, poly: 0b1001 }).unwrap());
        assert_eq!(
            validate_field(&FieldSpec { m: 0, poly: 1 }),
            Err(Error::DegreeOutOfRange(0))
        );
        assert_eq!(
            validate_field(&FieldSpec { m: 65, poly: 1 }),
            Err(Error::DegreeOutOfRange(65))
        );
        // wrong degree
        assert!(!validate_field(&FieldSpec { m: 4, poly: 0b1011 }).unwrap());
    }

    #[test]
    fn default_table_is_irreducible() {
        for m in 1..=64 {
            let spec = FieldSpec::default_for(m).unwrap();
            assert!(validate_field(&spec).unwrap(), "m = {m}");
        }
        assert_eq!(FieldSpec::default_for(8).unwrap().poly, 0x11b);
    }

    #[test]
    fn ben_or_matches_trial_division_up_to_12() {
        for m in 1..=12u32 {
            for low in 0..(1u128 << m) {
                let poly = (1u128 << m) | low;
                let spec = FieldSpec { m, poly };
                assert_eq!(
                    validate_field(&spec).unwrap(),
                    irreducible_by_division(poly, m),
                    "m = {m}, poly = {poly:#b}"
                );
            }
        }
    }

    #[test]
    fn field_new_rejects_bad_specs() {
        assert!(matches!(
            Field::new(FieldSpec { m: 3, poly: 0b1001 }),
            Err(Error::ReduciblePolynomial { .. })
        ));
        assert!(matches!(
            Field::new(FieldSpec { m: 3, poly: 0b111 }),
            Err(Error::PolynomialDegree { .. })
        ));
    }

    #[test]
    fn add_examples() {
        let f = Field::with_default_poly(3).unwrap();
        assert_eq!(f.add(0b101, 0b011), 0b110);
        assert_eq!(f.add(0b111, 0b111), 0);
        assert_eq!(f.add(0b101, 0), 0b101);
    }

    #[test]
    fn mul_examples() {
        let f3 = Field::new(FieldSpec { m: 3, poly: 0b1011 }).unwrap();
        assert_eq!(f3.mul(0b010, 0b110), 0b111);
        assert_eq!(mul_oracle(0b010, 0b110, 0b1011, 3), 0b111);
        let aes = Field::new(FieldSpec { m: 8, poly: 0x11b }).unwrap();
        assert_eq!(aes.mul(0x53, 0xca), 0x01);
        assert_eq!(mul_oracle(0x53, 0xca, 0x11b, 8), 0x01);
        for m in [1, 5, 17, 64] {
            let f = Field::with_default_poly(m).unwrap();
            let a = 0x9e37_79b9_7f4a_7c15 & f.mask();
            assert_eq!(f.mul(a, 1), a);
        }
    }

    #[test]
    fn inner_product_examples() {
        let f1 = Field::with_default_poly(1).unwrap();
        assert_eq!(f1.inner_product(&[1, 0, 1, 1], &[1, 1, 0, 1]).unwrap(), 0);
        assert_eq!(f1.inner_product(&[0, 0, 0, 0], &[1, 1, 0, 1]).unwrap(), 0);
        let f2 = Field::new(FieldSpec { m: 2, poly: 0b111 }).unwrap();
        assert_eq!(f2.inner_product(&[0b01, 0b10], &[0b11, 0b10]).unwrap(), 0);
        assert!(matches!(
            f2.inner_product(&[1, 2], &[1]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn nonzero_elements_invertible_up_to_12() {
        for m in 1..=12 {
            let f = Field::with_default_poly(m).unwrap();
            for a in 1..(1u64 << m) {
                let inv = f.inv(a).unwrap();
                assert_eq!(f.mul(a, inv), 1, "m = {m}, a = {a}");
            }
            assert_eq!(f.inv(0), None);
        }
    }

    #[test]
    fn mul_matches_oracle_exhaustively_small() {
        for m in 1..=6 {
            let f = Field::with_default_poly(m).unwrap();
            let poly = f.spec().poly;
            for a in 0..(1u64 << m) {
                for b in 0..(1u64 << m) {
                    assert_eq!(f.mul(a, b), mul_oracle(a, b, poly, m));
                }
            }
        }
    }

    fn field_and_triple() -> impl Strategy<Value = (Field, u64, u64, u64)> {
        prop::sample::select(vec![3u32, 8, 16, 32, 64]).prop_flat_map(|m| {
            let f = Field::with_default_poly(m).unwrap();
            let mask = f.mask();
            (
                Just(f),
                any::<u64>().prop_map(move |v| v & mask),
                any::<u64>().prop_map(move |v| v & mask),
                any::<u64>().prop_map(move |v| v & mask),
            )
        })
    }

    proptest! {
        #[test]
        fn ring_laws((f, a, b, c) in field_and_triple()) {
            prop_assert_eq!(f.mul(a, b), f.mul(b, a));
            prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
            prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
            prop_assert!(f.contains(f.mul(a, b)));
            prop_assert_eq!(f.mul(a, b), mul_oracle(a, b, f.spec().poly, f.degree()));
        }

        #[test]
        fn inner_product_bilinear(
            m in prop::sample::select(vec![1u32, 2, 8, 13, 64]),
            seed in prop::collection::vec(any::<u64>(), 24),
        ) {
            let f = Field::with_default_poly(m).unwrap();
            let k = 8;
            let a: Vec<u64> = seed[..k].iter().map(|v| v & f.mask()).collect();
            let a2: Vec<u64> = seed[k..2 * k].iter().map(|v| v & f.mask()).collect();
            let x: Vec<u64> = seed[2 * k..].iter().map(|v| v & f.mask()).collect();
            let sum: Vec<u64> = a.iter().zip(&a2).map(|(p, q)| p ^ q).collect();
            let lhs = f.inner_product(&sum, &x).unwrap();
            let rhs = f.inner_product(&a, &x).unwrap() ^ f.inner_product(&a2, &x).unwrap();
            prop_assert_eq!(lhs, rhs);
            let direct = a.iter().zip(&x).fold(0, |acc, (&p, &q)| acc ^ f.mul(p, q));
            prop_assert_eq!(f.inner_product(&a, &x).unwrap(), direct);
        }
    }
}
