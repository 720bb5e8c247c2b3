//! List privacy amplification with the inner-product (IP) and Toeplitz
//! families.
//!
//! Both constructions sample `L` independent hash functions, hash the raw
//! string once per function, and then draw a secret index `I` uniformly
//! from `1..=L` on a substream that never touches seed sampling.
//!
//! The IP hash of `x` under `(a, b)` is the low `ell` bits of the field
//! inner product `<a, chunks(x)>`, XORed with the `ell`-bit offset `b`.
//! `chunks(x)` zero-pads `x` to a multiple of `m` and cuts it into `m`-bit
//! elements, first bit least significant. This keeps the seed at
//! `ceil(n/m) * m + ell` bits per function and requires `ell <= m`.

use std::fmt;

use crate::bitconv::{BitReader, BitString, BitWriter, NaiveInput, ToeplitzPlan};
use crate::gf2m::{Field, FieldSpec};
use crate::{Error, Exec, MasterSeed, RandomStream, Result};

/// Substream label for seed sampling.
pub const SEED_STREAM: &str = "listhash/seed";
/// Substream label for the secret index.
pub const INDEX_STREAM: &str = "listhash/index";

const MAGIC: &[u8; 4] = b"LPA1";
const HEADER_LEN: usize = 4 + 1 + 2 + 8 + 8 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    Ip,
    Toeplitz,
}

impl Construction {
    fn tag(self) -> u8 {
        match self {
            Construction::Ip => 0,
            Construction::Toeplitz => 1,
        }
    }
}

fn check_dims(n: usize, ell: usize, list: usize) -> Result<()> {
    if list == 0 {
        return Err(Error::EmptyList);
    }
    if n == 0 || ell == 0 {
        return Err(Error::Dimensions(format!(
            "n = {n} and ell = {ell} must both be positive"
        )));
    }
    Ok(())
}

/// Splits `x` into `ceil(n/m)` field elements of `m` bits each.
pub fn chunk_elements(x: &BitString, m: u32) -> Vec<u64> {
    let m = m as usize;
    let words = x.to_words();
    let count = x.len().div_ceil(m);
    (0..count)
        .map(|i| {
            let start = i * m;
            let (w, s) = (start / 64, start % 64);
            let mut v = words[w] >> s;
            if s != 0 && s + m > 64 && w + 1 < words.len() {
                v |= words[w + 1] << (64 - s);
            }
            if m < 64 {
                v &= (1u64 << m) - 1;
            }
            v
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IpPair {
    pub a: Vec<u64>,
    pub b: BitString,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IpSeed {
    field: Field,
    n: usize,
    ell: usize,
    pairs: Vec<IpPair>,
}

impl IpSeed {
    pub fn new(field: Field, n: usize, ell: usize, pairs: Vec<IpPair>) -> Result<Self> {
        check_dims(n, ell, pairs.len())?;
        let m = field.degree();
        if ell > m as usize {
            return Err(Error::OutputTooWide { ell, m });
        }
        let elems = n.div_ceil(m as usize);
        for p in &pairs {
            if p.a.len() != elems {
                return Err(Error::LengthMismatch {
                    expected: elems,
                    actual: p.a.len(),
                });
            }
            if p.b.len() != ell {
                return Err(Error::LengthMismatch {
                    expected: ell,
                    actual: p.b.len(),
                });
            }
            if p.a.iter().any(|&v| !field.contains(v)) {
                return Err(Error::Dimensions("coefficient outside the field".into()));
            }
        }
        Ok(IpSeed {
            field,
            n,
            ell,
            pairs,
        })
    }

    pub fn field(&self) -> Field {
        self.field
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn ell(&self) -> usize {
        self.ell
    }
    pub fn list_size(&self) -> usize {
        self.pairs.len()
    }
    pub fn pairs(&self) -> &[IpPair] {
        &self.pairs
    }

    /// Seed size in bits: `L * (ceil(n/m) * m + ell)`.
    pub fn bit_len(&self) -> u64 {
        ip_seed_bits(self.n, self.ell, self.field.degree(), self.pairs.len())
    }
}

pub fn ip_seed_bits(n: usize, ell: usize, m: u32, list: usize) -> u64 {
    let m = m as u64;
    list as u64 * ((n as u64).div_ceil(m) * m + ell as u64)
}

pub fn toeplitz_seed_bits(n: usize, ell: usize, list: usize) -> u64 {
    list as u64 * (n as u64 + 2 * ell as u64 - 1)
}

/// Samples `list` independent IP pairs. Each `a_j` takes `ceil(n/m) * m`
/// bits and each `b_j` takes `ell` bits from `rng`.
pub fn ip_sample_seed(
    rng: &mut RandomStream,
    field: Field,
    n: usize,
    ell: usize,
    list: usize,
) -> Result<IpSeed> {
    check_dims(n, ell, list)?;
    let m = field.degree();
    if ell > m as usize {
        return Err(Error::OutputTooWide { ell, m });
    }
    let elems = n.div_ceil(m as usize);
    let pairs = (0..list)
        .map(|_| {
            let a = (0..elems).map(|_| rng.next_bits(m)).collect();
            let b = rng.bit_string(ell);
            IpPair { a, b }
        })
        .collect();
    IpSeed::new(field, n, ell, pairs)
}

/// One IP hash evaluation on pre-chunked input.
pub fn ip_hash(field: &Field, pair: &IpPair, chunks: &[u64], ell: usize) -> Result<BitString> {
    let t = field.inner_product(&pair.a, chunks)?;
    BitString::from_u64(t, ell).xor(&pair.b)
}

pub fn ip_list_hash(seed: &IpSeed, x: &BitString) -> Result<Vec<BitString>> {
    ip_list_hash_with(seed, x, Exec::default())
}

pub fn ip_list_hash_with(seed: &IpSeed, x: &BitString, exec: Exec) -> Result<Vec<BitString>> {
    if x.len() != seed.n {
        return Err(Error::LengthMismatch {
            expected: seed.n,
            actual: x.len(),
        });
    }
    let chunks = chunk_elements(x, seed.field.degree());
    exec.map_slice(&seed.pairs, |p| ip_hash(&seed.field, p, &chunks, seed.ell))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToeplitzPair {
    /// Generating vector, `n + ell - 1` bits (see [`crate::bitconv::xor_convolve_naive`]).
    pub r: BitString,
    pub b: BitString,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToeplitzSeed {
    n: usize,
    ell: usize,
    pairs: Vec<ToeplitzPair>,
}

impl ToeplitzSeed {
    pub fn new(n: usize, ell: usize, pairs: Vec<ToeplitzPair>) -> Result<Self> {
        check_dims(n, ell, pairs.len())?;
        for p in &pairs {
            if p.r.len() != n + ell - 1 {
                return Err(Error::LengthMismatch {
                    expected: n + ell - 1,
                    actual: p.r.len(),
                });
            }
            if p.b.len() != ell {
                return Err(Error::LengthMismatch {
                    expected: ell,
                    actual: p.b.len(),
                });
            }
        }
        Ok(ToeplitzSeed { n, ell, pairs })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn ell(&self) -> usize {
        self.ell
    }
    pub fn list_size(&self) -> usize {
        self.pairs.len()
    }
    pub fn pairs(&self) -> &[ToeplitzPair] {
        &self.pairs
    }

    /// `L * (n + 2 ell - 1)`.
    pub fn bit_len(&self) -> u64 {
        toeplitz_seed_bits(self.n, self.ell, self.pairs.len())
    }
}

pub fn toeplitz_sample_seed(
    rng: &mut RandomStream,
    n: usize,
    ell: usize,
    list: usize,
) -> Result<ToeplitzSeed> {
    check_dims(n, ell, list)?;
    let pairs = (0..list)
        .map(|_| {
            let r = rng.bit_string(n + ell - 1);
            let b = rng.bit_string(ell);
            ToeplitzPair { r, b }
        })
        .collect();
    ToeplitzSeed::new(n, ell, pairs)
}

pub fn toeplitz_list_hash(seed: &ToeplitzSeed, x: &BitString) -> Result<Vec<BitString>> {
    toeplitz_list_hash_with(seed, x, Exec::default())
}

/// Transform path: the transform of `x` is computed once and shared by all
/// `L` generating vectors.
pub fn toeplitz_list_hash_with(
    seed: &ToeplitzSeed,
    x: &BitString,
    exec: Exec,
) -> Result<Vec<BitString>> {
    if x.len() != seed.n {
        return Err(Error::LengthMismatch {
            expected: seed.n,
            actual: x.len(),
        });
    }
    let plan = ToeplitzPlan::new(x, seed.ell)?;
    exec.map_slice(&seed.pairs, |p| plan.apply(&p.r)?.xor(&p.b))
        .into_iter()
        .collect()
}

/// Reference path using the word-loop Toeplitz product.
pub fn toeplitz_list_hash_naive(
    seed: &ToeplitzSeed,
    x: &BitString,
    exec: Exec,
) -> Result<Vec<BitString>> {
    if x.len() != seed.n {
        return Err(Error::LengthMismatch {
            expected: seed.n,
            actual: x.len(),
        });
    }
    let input = NaiveInput::new(x);
    exec.map_slice(&seed.pairs, |p| input.apply(&p.r, seed.ell)?.xor(&p.b))
        .into_iter()
        .collect()
}

/// The list index, `1..=L`. Debug output is redacted.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct SecretIndex(usize);

impl SecretIndex {
    pub fn new(index: usize, list: usize) -> Result<Self> {
        if index == 0 || index > list {
            return Err(Error::Dimensions(format!(
                "index {index} outside 1..={list}"
            )));
        }
        Ok(SecretIndex(index))
    }

    /// 1-based index value.
    pub fn reveal(self) -> usize {
        self.0
    }
}

impl fmt::Debug for SecretIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SecretIndex(<redacted>)")
    }
}

/// Draws `I` uniformly from `1..=list`. Refuses the seed-sampling
/// substream.
pub fn draw_secret_index(rng: &mut RandomStream, list: usize) -> Result<SecretIndex> {
    if list == 0 {
        return Err(Error::EmptyList);
    }
    if rng.label() == SEED_STREAM {
        return Err(Error::SharedIndexStream);
    }
    Ok(SecretIndex(rng.below(list as u64) as usize + 1))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListKeyBundle {
    keys: Vec<BitString>,
    index: SecretIndex,
}

impl ListKeyBundle {
    pub fn new(keys: Vec<BitString>, index: SecretIndex) -> Result<Self> {
        if keys.is_empty() {
            return Err(Error::EmptyList);
        }
        let ell = keys[0].len();
        if keys.iter().any(|k| k.len() != ell) {
            return Err(Error::Dimensions("keys differ in length".into()));
        }
        SecretIndex::new(index.0, keys.len())?;
        Ok(ListKeyBundle { keys, index })
    }

    pub fn keys(&self) -> &[BitString] {
        &self.keys
    }
    pub fn index(&self) -> SecretIndex {
        self.index
    }
    pub fn key_len(&self) -> usize {
        self.keys[0].len()
    }
    pub fn list_size(&self) -> usize {
        self.keys.len()
    }

    /// The key selected by the secret index.
    pub fn selected(&self) -> &BitString {
        &self.keys[self.index.0 - 1]
    }

    /// Key file payload: `L * ell` bits packed back to back. The index is
    /// not part of it.
    pub fn keys_to_bytes(&self) -> Vec<u8> {
        BitString::concat(&self.keys).into_bytes()
    }
}

/// Parses a key file written by [`ListKeyBundle::keys_to_bytes`].
pub fn keys_from_bytes(bytes: &[u8], ell: usize, list: usize) -> Result<Vec<BitString>> {
    let all = BitString::from_bytes(bytes.to_vec(), ell * list)?;
    Ok((0..list).map(|j| all.slice(j * ell, ell)).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ListHashSeed {
    Ip(IpSeed),
    Toeplitz(ToeplitzSeed),
}

impl ListHashSeed {
    pub fn construction(&self) -> Construction {
        match self {
            ListHashSeed::Ip(_) => Construction::Ip,
            ListHashSeed::Toeplitz(_) => Construction::Toeplitz,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            ListHashSeed::Ip(s) => s.n,
            ListHashSeed::Toeplitz(s) => s.n,
        }
    }

    pub fn ell(&self) -> usize {
        match self {
            ListHashSeed::Ip(s) => s.ell,
            ListHashSeed::Toeplitz(s) => s.ell,
        }
    }

    pub fn list_size(&self) -> usize {
        match self {
            ListHashSeed::Ip(s) => s.pairs.len(),
            ListHashSeed::Toeplitz(s) => s.pairs.len(),
        }
    }

    pub fn bit_len(&self) -> u64 {
        match self {
            ListHashSeed::Ip(s) => s.bit_len(),
            ListHashSeed::Toeplitz(s) => s.bit_len(),
        }
    }

    pub fn hash(&self, x: &BitString, exec: Exec) -> Result<Vec<BitString>> {
        match self {
            ListHashSeed::Ip(s) => ip_list_hash_with(s, x, exec),
            ListHashSeed::Toeplitz(s) => toeplitz_list_hash_with(s, x, exec),
        }
    }

    /// Like [`Self::hash`], with Toeplitz products on the word-loop path.
    pub fn hash_naive(&self, x: &BitString, exec: Exec) -> Result<Vec<BitString>> {
        match self {
            ListHashSeed::Ip(s) => ip_list_hash_with(s, x, exec),
            ListHashSeed::Toeplitz(s) => toeplitz_list_hash_naive(s, x, exec),
        }
    }

    /// Seed file bytes: `"LPA1"`, construction tag (0 = IP, 1 = Toeplitz),
    /// `m` as u16 (0 for Toeplitz), then `n`, `ell`, `L` as u64, all
    /// little-endian, followed by the packed seed bits in pair order.
    ///
    /// IP seed files carry only `m`; readers use the built-in polynomial
    /// for that degree.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + (self.bit_len() as usize).div_ceil(8));
        out.extend_from_slice(MAGIC);
        out.push(self.construction().tag());
        let m = match self {
            ListHashSeed::Ip(s) => s.field.degree() as u16,
            ListHashSeed::Toeplitz(_) => 0,
        };
        out.extend_from_slice(&m.to_le_bytes());
        out.extend_from_slice(&(self.n() as u64).to_le_bytes());
        out.extend_from_slice(&(self.ell() as u64).to_le_bytes());
        out.extend_from_slice(&(self.list_size() as u64).to_le_bytes());
        let mut w = BitWriter::default();
        match self {
            ListHashSeed::Ip(s) => {
                let m = s.field.degree();
                for p in &s.pairs {
                    for &v in &p.a {
                        w.push_u64(v, m);
                    }
                    w.push_bits(&p.b);
                }
            }
            ListHashSeed::Toeplitz(s) => {
                for p in &s.pairs {
                    w.push_bits(&p.r);
                    w.push_bits(&p.b);
                }
            }
        }
        out.extend_from_slice(w.finish().as_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
            return Err(Error::Parse("not a seed file".into()));
        }
        let tag = bytes[4];
        let m = u16::from_le_bytes([bytes[5], bytes[6]]) as u32;
        let read_u64 = |at: usize| {
            let v = u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
            usize::try_from(v).map_err(|_| Error::Parse("dimension overflows usize".into()))
        };
        let (n, ell, list) = (read_u64(7)?, read_u64(15)?, read_u64(23)?);
        check_dims(n, ell, list)?;
        let bits = match tag {
            0 => ip_seed_bits(n, ell, m.max(1), list),
            1 => toeplitz_seed_bits(n, ell, list),
            t => return Err(Error::Parse(format!("unknown construction tag {t}"))),
        } as usize;
        let payload = BitString::from_bytes(bytes[HEADER_LEN..].to_vec(), bits)?;
        let mut rd = BitReader::new(&payload);
        match tag {
            0 => {
                let field = Field::new(FieldSpec::default_for(m)?)?;
                let elems = n.div_ceil(m as usize);
                let mut pairs = Vec::with_capacity(list);
                for _ in 0..list {
                    let a = (0..elems)
                        .map(|_| rd.read_u64(m))
                        .collect::<Result<Vec<_>>>()?;
                    let b = rd.read_bits(ell)?;
                    pairs.push(IpPair { a, b });
                }
                Ok(ListHashSeed::Ip(IpSeed::new(field, n, ell, pairs)?))
            }
            _ => {
                let mut pairs = Vec::with_capacity(list);
                for _ in 0..list {
                    let r = rd.read_bits(n + ell - 1)?;
                    let b = rd.read_bits(ell)?;
                    pairs.push(ToeplitzPair { r, b });
                }
                Ok(ListHashSeed::Toeplitz(ToeplitzSeed::new(n, ell, pairs)?))
            }
        }
    }
}

/// Which family to use and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HashFamily {
    /// Inner product over `GF(2^m)` with the built-in polynomial.
    Ip {
        m: u32,
    },
    Toeplitz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ListPaParams {
    pub family: HashFamily,
    pub ell: usize,
    pub list: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListPaOutput {
    pub bundle: ListKeyBundle,
    /// Public seed; safe to publish.
    pub seed: ListHashSeed,
    /// Bits drawn for the seed, as metered by the stream.
    pub seed_bits: u64,
}

pub fn list_pa(x: &BitString, params: &ListPaParams, master: MasterSeed) -> Result<ListPaOutput> {
    list_pa_with(x, params, master, Exec::default())
}

/// Samples the public seed for an `n`-bit input from the seed substream.
/// Returns the seed and the number of bits drawn.
pub fn sample_list_seed(
    n: usize,
    params: &ListPaParams,
    master: MasterSeed,
) -> Result<(ListHashSeed, u64)> {
    let mut rng = master.stream(SEED_STREAM);
    let seed = match params.family {
        HashFamily::Ip { m } => ListHashSeed::Ip(ip_sample_seed(
            &mut rng,
            Field::with_default_poly(m)?,
            n,
            params.ell,
            params.list,
        )?),
        HashFamily::Toeplitz => {
            ListHashSeed::Toeplitz(toeplitz_sample_seed(&mut rng, n, params.ell, params.list)?)
        }
    };
    Ok((seed, rng.bits_consumed()))
}

/// Samples the seed, hashes `x` `L` times, then draws the secret index.
pub fn list_pa_with(
    x: &BitString,
    params: &ListPaParams,
    master: MasterSeed,
    exec: Exec,
) -> Result<ListPaOutput> {
    let (seed, seed_bits) = sample_list_seed(x.len(), params, master)?;
    let keys = seed.hash(x, exec)?;
    finish(keys, seed, seed_bits, master)
}

/// Same as [`list_pa_with`] but hashes with the word-loop Toeplitz product.
pub fn list_pa_naive(
    x: &BitString,
    params: &ListPaParams,
    master: MasterSeed,
    exec: Exec,
) -> Result<ListPaOutput> {
    let (seed, seed_bits) = sample_list_seed(x.len(), params, master)?;
    let keys = seed.hash_naive(x, exec)?;
    finish(keys, seed, seed_bits, master)
}

fn finish(
    keys: Vec<BitString>,
    seed: ListHashSeed,
    seed_bits: u64,
    master: MasterSeed,
) -> Result<ListPaOutput> {
    let mut index_rng = master.stream(INDEX_STREAM);
    let index = draw_secret_index(&mut index_rng, seed.list_size())?;
    Ok(ListPaOutput {
        bundle: ListKeyBundle::new(keys, index)?,
        seed,
        seed_bits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitconv::bits_pack;

    fn f4() -> Field {
        Field::new(FieldSpec { m: 2, poly: 0b111 }).unwrap()
    }

    #[test]
    fn chunking_is_lsb_first_and_zero_padded() {
        let x: BitString = "1101".parse().unwrap();
        assert_eq!(chunk_elements(&x, 2), vec![0b11, 0b10]);
        let y: BitString = "101".parse().unwrap();
        assert_eq!(chunk_elements(&y, 2), vec![0b01, 0b01]);
        let long: BitString = (0..130).map(|i| i % 3 == 0).collect();
        let c = chunk_elements(&long, 64);
        assert_eq!(c.len(), 3);
        for (i, bit) in long.iter().enumerate() {
            assert_eq!((c[i / 64] >> (i % 64)) & 1 == 1, bit);
        }
        let c7 = chunk_elements(&long, 7);
        for (i, bit) in long.iter().enumerate() {
            assert_eq!((c7[i / 7] >> (i % 7)) & 1 == 1, bit);
        }
    }

    #[test]
    fn ip_example() {
        let seed = IpSeed::new(
            f4(),
            4,
            2,
            vec![IpPair {
                a: vec![0b01, 0b10],
                b: BitString::from_u64(0b11, 2),
            }],
        )
        .unwrap();
        let x: BitString = "1101".parse().unwrap();
        let k = ip_list_hash(&seed, &x).unwrap();
        assert_eq!(k[0].to_u64(), 0b11);
    }

    #[test]
    fn ip_constant_and_zero_input() {
        let b = BitString::from_u64(0b10, 2);
        let seed = IpSeed::new(
            f4(),
            4,
            2,
            vec![
                IpPair {
                    a: vec![0, 0],
                    b: b.clone(),
                },
                IpPair {
                    a: vec![0b11, 0b01],
                    b: BitString::from_u64(0b01, 2),
                },
            ],
        )
        .unwrap();
        for xv in 0..16 {
            let k = ip_list_hash(&seed, &BitString::from_u64(xv, 4)).unwrap();
            assert_eq!(k[0], b);
        }
        let k = ip_list_hash(&seed, &BitString::zeros(4)).unwrap();
        assert_eq!(k[1].to_u64(), 0b01);
    }

    #[test]
    fn ip_rejects_wide_output_and_bad_lengths() {
        let mut rng = MasterSeed(1).stream(SEED_STREAM);
        assert!(matches!(
            ip_sample_seed(&mut rng, f4(), 4, 3, 1),
            Err(Error::OutputTooWide { .. })
        ));
        let seed = ip_sample_seed(&mut rng, f4(), 4, 2, 2).unwrap();
        assert!(matches!(
            ip_list_hash(&seed, &BitString::zeros(5)),
            Err(Error::LengthMismatch { .. })
        ));
        assert_eq!(
            ip_sample_seed(&mut rng, f4(), 4, 2, 0),
            Err(Error::EmptyList)
        );
    }

    #[test]
    fn ip_seed_metering() {
        let field = Field::with_default_poly(64).unwrap();
        let mut rng = MasterSeed(5).stream(SEED_STREAM);
        let seed = ip_sample_seed(&mut rng, field, 256, 64, 4).unwrap();
        assert_eq!(rng.bits_consumed(), 1280);
        assert_eq!(seed.bit_len(), 1280);
        // padded case: n = 10, m = 4 -> 3 elements = 12 bits per a_j
        let mut rng = MasterSeed(5).stream(SEED_STREAM);
        ip_sample_seed(&mut rng, Field::with_default_poly(4).unwrap(), 10, 3, 2).unwrap();
        assert_eq!(rng.bits_consumed(), 2 * (12 + 3));
    }

    #[test]
    fn toeplitz_example() {
        let seed = ToeplitzSeed::new(
            3,
            2,
            vec![ToeplitzPair {
                r: bits_pack(&[1, 0, 1, 1]),
                b: bits_pack(&[0, 1]),
            }],
        )
        .unwrap();
        let x = bits_pack(&[1, 1, 0]);
        let k = toeplitz_list_hash(&seed, &x).unwrap();
        assert_eq!(k[0], bits_pack(&[1, 1]));
        let zero_r = ToeplitzSeed::new(
            3,
            2,
            vec![ToeplitzPair {
                r: BitString::zeros(4),
                b: bits_pack(&[1, 0]),
            }],
        )
        .unwrap();
        assert_eq!(
            toeplitz_list_hash(&zero_r, &x).unwrap()[0],
            bits_pack(&[1, 0])
        );
    }

    #[test]
    fn toeplitz_seed_metering() {
        let mut rng = MasterSeed(5).stream(SEED_STREAM);
        let seed = toeplitz_sample_seed(&mut rng, 256, 64, 4).unwrap();
        assert_eq!(rng.bits_consumed(), 1532);
        assert_eq!(seed.bit_len(), 1532);
    }

    #[test]
    fn toeplitz_fast_matches_naive_path() {
        let master = MasterSeed(11);
        for (n, ell, list) in [(1, 1, 1), (7, 3, 5), (200, 77, 3), (1000, 129, 4)] {
            let x = master.stream("x").bit_string(n);
            let seed = toeplitz_sample_seed(&mut master.stream(SEED_STREAM), n, ell, list).unwrap();
            let fast = toeplitz_list_hash(&seed, &x).unwrap();
            let naive = toeplitz_list_hash_naive(&seed, &x, Exec::Sequential).unwrap();
            assert_eq!(fast, naive);
            assert_eq!(
                fast,
                toeplitz_list_hash_with(&seed, &x, Exec::Sequential).unwrap()
            );
        }
    }

    #[test]
    fn secret_index() {
        let mut rng = MasterSeed(0).stream(INDEX_STREAM);
        for _ in 0..100 {
            assert_eq!(draw_secret_index(&mut rng, 1).unwrap().reveal(), 1);
        }
        assert_eq!(draw_secret_index(&mut rng, 0), Err(Error::EmptyList));
        let mut seed_rng = MasterSeed(0).stream(SEED_STREAM);
        assert_eq!(
            draw_secret_index(&mut seed_rng, 4),
            Err(Error::SharedIndexStream)
        );
        assert_ne!(SEED_STREAM, INDEX_STREAM);
        let shown = format!("{:?}", SecretIndex(3));
        assert!(!shown.contains('3'));
    }

    #[test]
    fn secret_index_is_uniform() {
        // chi-square with 3 degrees of freedom; 16.27 is the 0.999 quantile
        let mut rng = MasterSeed(2024).stream(INDEX_STREAM);
        let draws = 100_000;
        let mut counts = [0u64; 4];
        for _ in 0..draws {
            counts[draw_secret_index(&mut rng, 4).unwrap().reveal() - 1] += 1;
        }
        let expect = draws as f64 / 4.0;
        let sigma = (draws as f64 * 0.25 * 0.75).sqrt();
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expect).powi(2) / expect)
            .sum();
        assert!(chi2 < 16.27, "chi2 = {chi2}");
        for c in counts {
            assert!((c as f64 - expect).abs() < 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn list_pa_single_hash_matches_direct_path() {
        let x = MasterSeed(77).stream("raw").bit_string(300);
        let params = ListPaParams {
            family: HashFamily::Ip { m: 32 },
            ell: 20,
            list: 1,
        };
        let out = list_pa(&x, &params, MasterSeed(3)).unwrap();
        assert_eq!(out.bundle.list_size(), 1);
        assert_eq!(out.bundle.index().reveal(), 1);
        // direct single hash with the same stream
        let field = Field::with_default_poly(32).unwrap();
        let mut rng = MasterSeed(3).stream(SEED_STREAM);
        let a: Vec<u64> = (0..300usize.div_ceil(32))
            .map(|_| rng.next_bits(32))
            .collect();
        let b = rng.bit_string(20);
        let direct = ip_hash(&field, &IpPair { a, b }, &chunk_elements(&x, 32), 20).unwrap();
        assert_eq!(out.bundle.keys_to_bytes(), direct.as_bytes());
        assert_eq!(out.bundle.selected(), &direct);
    }

    #[test]
    fn list_pa_is_deterministic() {
        let x = MasterSeed(1).stream("raw").bit_string(500);
        for family in [HashFamily::Ip { m: 16 }, HashFamily::Toeplitz] {
            let params = ListPaParams {
                family,
                ell: 16,
                list: 8,
            };
            let a = list_pa(&x, &params, MasterSeed(9)).unwrap();
            let b = list_pa_with(&x, &params, MasterSeed(9), Exec::Sequential).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.bundle.index(), b.bundle.index());
            let naive = list_pa_naive(&x, &params, MasterSeed(9), Exec::Sequential).unwrap();
            assert_eq!(naive, a);
            let c = list_pa(&x, &params, MasterSeed(10)).unwrap();
            assert_ne!(a.seed, c.seed);
        }
    }

    #[test]
    fn seed_file_roundtrip() {
        let x = MasterSeed(1).stream("raw").bit_string(37);
        for family in [HashFamily::Ip { m: 5 }, HashFamily::Toeplitz] {
            let params = ListPaParams {
                family,
                ell: 3,
                list: 3,
            };
            let out = list_pa(&x, &params, MasterSeed(4)).unwrap();
            let bytes = out.seed.to_bytes();
            assert_eq!(&bytes[..4], b"LPA1");
            assert_eq!(
                bytes.len(),
                HEADER_LEN + (out.seed.bit_len() as usize).div_ceil(8)
            );
            let back = ListHashSeed::from_bytes(&bytes).unwrap();
            assert_eq!(back, out.seed);
            assert_eq!(back.hash(&x, Exec::Sequential).unwrap(), out.bundle.keys());
        }
        assert!(ListHashSeed::from_bytes(b"LPA2xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx").is_err());
    }

    #[test]
    fn seed_header_layout() {
        let seed = ListHashSeed::Toeplitz(
            ToeplitzSeed::new(
                3,
                2,
                vec![ToeplitzPair {
                    r: bits_pack(&[1, 0, 1, 1]),
                    b: bits_pack(&[0, 1]),
                }],
            )
            .unwrap(),
        );
        let bytes = seed.to_bytes();
        let mut expect = b"LPA1".to_vec();
        expect.push(1);
        expect.extend_from_slice(&[0, 0]);
        expect.extend_from_slice(&3u64.to_le_bytes());
        expect.extend_from_slice(&2u64.to_le_bytes());
        expect.extend_from_slice(&1u64.to_le_bytes());
        // r = 1,0,1,1 then b = 0,1 -> bits 0..6 = 1,0,1,1,0,1
        expect.push(0b10_1101);
        assert_eq!(bytes, expect);
    }

    #[test]
    fn keys_file_roundtrip() {
        let x = MasterSeed(1).stream("raw").bit_string(64);
        let params = ListPaParams {
            family: HashFamily::Toeplitz,
            ell: 5,
            list: 3,
        };
        let out = list_pa(&x, &params, MasterSeed(4)).unwrap();
        let bytes = out.bundle.keys_to_bytes();
        assert_eq!(bytes.len(), 2);
        assert_eq!(keys_from_bytes(&bytes, 5, 3).unwrap(), out.bundle.keys());
    }
}
