//! Exact verification on small classical sources.
//!
//! A [`CqSource`] is a joint distribution of an `n`-bit value `x` and an
//! adversary value `e`, given by integer weights. With a classical
//! adversary the trace distance is the statistical distance and the
//! conditional min-entropy is `-log` of the optimal guessing probability,
//! so everything here is computed with exact integer counting.
//!
//! Values `x` are held as `u64` with bit `i` of the string in bit `i` of the
//! integer; `n` is limited to [`MAX_SOURCE_BITS`].

use std::collections::HashMap;
use std::fmt;

use num_rational::Ratio;

use crate::bitconv::{xor_convolve_naive, BitString};
use crate::bounds::{qllhl_length, ListSize};
use crate::gf2m::Field;
use crate::listhash::HashFamily;
use crate::{Error, Exec, MasterSeed, Result};

/// Exact probabilities and distances.
pub type Rational = Ratio<u128>;

pub const MAX_SOURCE_BITS: usize = 32;
/// Largest seed space [`universality_check`] will enumerate, in bits.
pub const MAX_UNIVERSALITY_SEED_BITS: u32 = 24;
/// Largest number of hash tuples an exact distance will enumerate.
pub const EXACT_LIMIT: u128 = 1 << 24;
const MC_SHARDS: u64 = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CqSource {
    n: usize,
    labels: Vec<String>,
    /// `(x, e, weight)`, merged, sorted, positive weights only.
    entries: Vec<(u64, usize, u64)>,
    total: u128,
}

impl CqSource {
    /// Builds a source from `(x, e, weight)` triples. Repeated `(x, e)`
    /// pairs add up; zero weights are dropped.
    pub fn new<S: Into<String>>(
        n: usize,
        entries: impl IntoIterator<Item = (u64, S, u64)>,
    ) -> Result<Self> {
        if n > MAX_SOURCE_BITS {
            return Err(Error::Dimensions(format!(
                "source length {n} exceeds {MAX_SOURCE_BITS}"
            )));
        }
        let mut labels: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut merged: HashMap<(u64, usize), u64> = HashMap::new();
        for (x, e, w) in entries {
            if n < 64 && x >> n != 0 {
                return Err(Error::Dimensions(format!("x = {x} has more than {n} bits")));
            }
            let e = e.into();
            let id = *index.entry(e.clone()).or_insert_with(|| {
                labels.push(e);
                labels.len() - 1
            });
            let slot = merged.entry((x, id)).or_insert(0);
            *slot = slot
                .checked_add(w)
                .ok_or_else(|| Error::Dimensions("weight overflow".into()))?;
        }
        Self::from_parts(n, labels, merged.into_iter().map(|((x, e), w)| (x, e, w)))
    }

    fn from_parts(
        n: usize,
        labels: Vec<String>,
        entries: impl IntoIterator<Item = (u64, usize, u64)>,
    ) -> Result<Self> {
        let mut entries: Vec<_> = entries.into_iter().filter(|&(_, _, w)| w > 0).collect();
        entries.sort_unstable();
        let total: u128 = entries.iter().map(|&(_, _, w)| w as u128).sum();
        if total == 0 {
            return Err(Error::EmptySource);
        }
        Ok(CqSource {
            n,
            labels,
            entries,
            total,
        })
    }

    /// Reads lines of `x e weight`; `x` is a bit literal whose first
    /// character is bit 0. Blank lines and lines starting with `#` are
    /// skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut n = None;
        let mut rows = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("line {}: {what}", no + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(bad("expected `x e weight`"));
            }
            let x: BitString = fields[0].parse().map_err(|_| bad("bad bit literal"))?;
            if *n.get_or_insert(x.len()) != x.len() {
                return Err(bad("inconsistent x length"));
            }
            if x.len() > MAX_SOURCE_BITS {
                return Err(bad("x too long"));
            }
            let w: u64 = fields[2].parse().map_err(|_| bad("bad weight"))?;
            rows.push((x.to_u64(), fields[1].to_string(), w));
        }
        Self::new(n.ok_or(Error::EmptySource)?, rows)
    }

    /// Uniform `x` with a single adversary value.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::check_enumerable(n)?;
        Self::new(n, (0..1u64 << n).map(|x| (x, "-", 1)))
    }

    /// Uniform `x` fully known to the adversary.
    pub fn copy(n: usize) -> Result<Self> {
        make_syndrome_source(n, 0)
    }

    fn check_enumerable(n: usize) -> Result<()> {
        if n > 24 {
            return Err(Error::EnumerationTooLarge(1u128 << n));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn total(&self) -> u128 {
        self.total
    }
    pub fn labels(&self) -> &[String] {
        &self.labels
    }
    pub fn entries(&self) -> impl Iterator<Item = (u64, &str, u64)> + '_ {
        self.entries
            .iter()
            .map(|&(x, e, w)| (x, self.labels[e].as_str(), w))
    }

    /// Total weight of each adversary value, indexed like [`Self::labels`].
    pub fn adversary_weights(&self) -> Vec<u128> {
        let mut out = vec![0u128; self.labels.len()];
        for &(_, e, w) in &self.entries {
            out[e] += w as u128;
        }
        out
    }

    /// Applies a deterministic channel to the adversary value.
    pub fn map_adversary<F: Fn(&str) -> String>(&self, f: F) -> Result<Self> {
        Self::new(self.n, self.entries().map(|(x, e, w)| (x, f(e), w)))
    }

    /// Replaces `x` by `f(x)`, an `n_out`-bit value.
    pub fn map_value<F: Fn(u64) -> u64>(&self, n_out: usize, f: F) -> Result<Self> {
        Self::new(
            n_out,
            self.entries().map(|(x, e, w)| (f(x), e.to_string(), w)),
        )
    }

    fn columns(&self) -> Vec<Vec<u64>> {
        let mut cols = vec![Vec::new(); self.labels.len()];
        for &(_, e, w) in &self.entries {
            cols[e].push(w);
        }
        cols
    }

    fn distinct_values(&self) -> Vec<u64> {
        let mut xs: Vec<u64> = self.entries.iter().map(|e| e.0).collect();
        xs.sort_unstable();
        xs.dedup();
        xs
    }
}

/// Uniform `x` with the adversary holding its last `n - k` bits.
pub fn make_syndrome_source(n: usize, k: usize) -> Result<CqSource> {
    if k > n {
        return Err(Error::Dimensions(format!("k = {k} exceeds n = {n}")));
    }
    CqSource::check_enumerable(n)?;
    let width = n - k;
    CqSource::new(
        n,
        (0..1u64 << n).map(|x| {
            let e = BitString::from_u64(x >> k, width);
            (x, format!("s{e}"), 1)
        }),
    )
}

/// `sum_e max_x p(x, e)`.
pub fn guessing_probability(source: &CqSource) -> Ratio<u128> {
    let best: u128 = source
        .columns()
        .iter()
        .map(|c| c.iter().copied().max().unwrap_or(0) as u128)
        .sum();
    Ratio::new(best, source.total)
}

fn neg_log2(r: Ratio<u128>) -> f64 {
    (*r.denom() as f64).log2() - (*r.numer() as f64).log2()
}

/// `-log2` of the guessing probability.
pub fn min_entropy(source: &CqSource) -> f64 {
    neg_log2(guessing_probability(source))
}

/// Smooth min-entropy with removed-mass budget `epsilon`: the best
/// subnormalized `q <= p` with at most `epsilon` mass removed.
///
/// Lowering the cap of column `e` by `d` costs `d` times the number of
/// atoms above the cap, a convex piecewise-linear cost, so spending the
/// budget on the cheapest segments first is optimal. The result is capped
/// at `n`.
pub fn smooth_min_entropy(source: &CqSource, epsilon: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::OutOfRange {
            value: epsilon,
            range: "[0, 1)",
        });
    }
    let total = source.total as f64;
    let mut guess = 0.0;
    let mut segments: Vec<(usize, f64)> = Vec::new();
    for mut col in source.columns() {
        col.sort_unstable_by(|a, b| b.cmp(a));
        guess += col[0] as f64 / total;
        for (j, &v) in col.iter().enumerate() {
            let next = col.get(j + 1).copied().unwrap_or(0);
            if v > next {
                segments.push((j + 1, (v - next) as f64 / total));
            }
        }
    }
    segments.sort_by_key(|s| s.0);
    let mut budget = epsilon;
    for (rate, len) in segments {
        if budget <= 0.0 {
            break;
        }
        let cut = len.min(budget / rate as f64);
        guess -= cut;
        budget -= cut * rate as f64;
    }
    let n = source.n as f64;
    if guess <= 0.0 {
        return Ok(n);
    }
    Ok((-guess.log2()).min(n))
}

/// One hash family at fixed `(n, ell)`, split into its linear part (`a_j`
/// or `r_j`) and the output offset `b_j`.
#[derive(Debug, Clone, Copy)]
struct Family {
    kind: HashFamily,
    field: Option<Field>,
    n: usize,
    ell: usize,
}

impl Family {
    fn new(kind: HashFamily, n: usize, ell: usize) -> Result<Self> {
        if n == 0 || ell == 0 {
            return Err(Error::Dimensions("n and ell must be positive".into()));
        }
        let field = match kind {
            HashFamily::Ip { m } => {
                let f = Field::with_default_poly(m)?;
                if ell > m as usize {
                    return Err(Error::OutputTooWide { ell, m });
                }
                Some(f)
            }
            HashFamily::Toeplitz => None,
        };
        Ok(Family {
            kind,
            field,
            n,
            ell,
        })
    }

    fn linear_bits(&self) -> usize {
        match self.field {
            Some(f) => {
                let m = f.degree() as usize;
                self.n.div_ceil(m) * m
            }
            None => self.n + self.ell - 1,
        }
    }

    fn eval(&self, part: &BitString, x: u64) -> Result<u64> {
        match self.field {
            Some(f) => {
                let m = f.degree() as usize;
                let elems = self.n.div_ceil(m);
                let a: Vec<u64> = (0..elems).map(|i| part.slice(i * m, m).to_u64()).collect();
                let chunks: Vec<u64> = (0..elems)
                    .map(|i| {
                        BitString::from_u64(x, self.n.max(elems * m))
                            .slice(i * m, m)
                            .to_u64()
                    })
                    .collect();
                let t = f.inner_product(&a, &chunks)?;
                Ok(if self.ell == 64 {
                    t
                } else {
                    t & ((1u64 << self.ell) - 1)
                })
            }
            None => {
                Ok(xor_convolve_naive(part, &BitString::from_u64(x, self.n), self.ell)?.to_u64())
            }
        }
    }

    /// Outputs of every linear part on `xs`, row-major by part.
    fn table(&self, xs: &[u64], exec: Exec) -> Result<Vec<u64>> {
        let bits = self.linear_bits();
        let parts = 1u128 << bits;
        if bits >= 40 || parts * xs.len() as u128 > 1 << 28 {
            return Err(Error::EnumerationTooLarge(parts));
        }
        let rows: Vec<Result<Vec<u64>>> = exec.map(parts as usize, |u| {
            let part = BitString::from_u64(u as u64, bits);
            xs.iter().map(|&x| self.eval(&part, x)).collect()
        });
        let mut out = Vec::with_capacity(parts as usize * xs.len());
        for r in rows {
            out.extend(r?);
        }
        Ok(out)
    }
}

/// Counts, over every seed `(linear part, b)` of one hash, the seeds with
/// `(F(x), F(x')) = (y, y')`. Indexed by `y * 2^ell + y'`.
pub fn pair_distribution(
    family: HashFamily,
    n: usize,
    ell: usize,
    x: u64,
    x_prime: u64,
) -> Result<Vec<u64>> {
    if x == x_prime {
        return Err(Error::IdenticalInputs);
    }
    let fam = Family::new(family, n, ell)?;
    check_seed_space(&fam)?;
    let table = fam.table(&[x, x_prime], Exec::Sequential)?;
    Ok(pair_counts(&table, 0, 1, 2, ell))
}

fn check_seed_space(fam: &Family) -> Result<()> {
    let bits = fam.linear_bits() + fam.ell;
    if bits > MAX_UNIVERSALITY_SEED_BITS as usize {
        return Err(Error::EnumerationTooLarge(1u128 << bits.min(127)));
    }
    Ok(())
}

fn pair_counts(table: &[u64], i: usize, j: usize, width: usize, ell: usize) -> Vec<u64> {
    let size = 1usize << ell;
    let mut counts = vec![0u64; size * size];
    for row in table.chunks_exact(width) {
        for b in 0..size as u64 {
            let y = (row[i] ^ b) as usize;
            let y2 = (row[j] ^ b) as usize;
            counts[y * size + y2] += 1;
        }
    }
    counts
}

/// Largest `|Pr[F(x) = y, F(x') = y'] - 2^(-2 ell)|` over all distinct
/// `x, x'` and outputs, by enumerating every seed. Zero for a strongly
/// two-universal family.
pub fn universality_check(family: HashFamily, n: usize, ell: usize) -> Result<Ratio<u128>> {
    universality_check_with(family, n, ell, Exec::default())
}

pub fn universality_check_with(
    family: HashFamily,
    n: usize,
    ell: usize,
    exec: Exec,
) -> Result<Ratio<u128>> {
    let fam = Family::new(family, n, ell)?;
    check_seed_space(&fam)?;
    if n > 12 {
        return Err(Error::EnumerationTooLarge(1u128 << (2 * n)));
    }
    let xs: Vec<u64> = (0..1u64 << n).collect();
    let table = fam.table(&xs, exec)?;
    let seeds = (1u128 << fam.linear_bits()) << ell;
    let expect = Ratio::new(1u128, 1u128 << (2 * ell));
    let width = xs.len();
    let worst = exec.map(width, |i| {
        let mut worst = Ratio::from_integer(0u128);
        for j in 0..width {
            if i == j {
                continue;
            }
            for c in pair_counts(&table, i, j, width, ell) {
                let p = Ratio::new(c as u128, seeds);
                let d = if p > expect { p - expect } else { expect - p };
                worst = worst.max(d);
            }
        }
        worst
    });
    Ok(worst
        .into_iter()
        .max()
        .unwrap_or_else(|| Ratio::from_integer(0)))
}

/// The ideal list state: `L` uniform keys, a uniform index and the
/// adversary marginal, all independent.
#[derive(Debug, Clone)]
pub struct IdealDistribution {
    ell: usize,
    list: usize,
    total: u128,
    adversary: Vec<u128>,
}

pub fn ideal_distribution(source: &CqSource, ell: usize, list: usize) -> Result<IdealDistribution> {
    if list == 0 {
        return Err(Error::EmptyList);
    }
    if ell * list > 64 {
        return Err(Error::Dimensions("L * ell exceeds 64".into()));
    }
    Ok(IdealDistribution {
        ell,
        list,
        total: source.total,
        adversary: source.adversary_weights(),
    })
}

impl IdealDistribution {
    /// Probability of keys `keys` (key `j` in bits `j*ell..`), index
    /// `i` in `1..=L` and adversary value number `e`.
    pub fn prob(&self, keys: u128, i: usize, e: usize) -> Ratio<u128> {
        let bits = self.ell * self.list;
        if i == 0 || i > self.list || keys >> bits != 0 || e >= self.adversary.len() {
            return Ratio::from_integer(0);
        }
        Ratio::new(self.adversary[e], self.total << bits) / self.list as u128
    }

    pub fn key_bits(&self) -> usize {
        self.ell * self.list
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Exact,
    MonteCarlo { samples: u64, master: MasterSeed },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMode {
    Exact,
    MonteCarlo,
}

impl fmt::Display for DistanceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceMode::Exact => "exact",
            DistanceMode::MonteCarlo => "monte-carlo",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceReport {
    pub value: f64,
    pub mode: DistanceMode,
    /// Exact value (exact mode only).
    pub exact: Option<Ratio<u128>>,
    /// Sampled seed tuples (Monte-Carlo only).
    pub samples: Option<u64>,
    /// Standard error of the mean (Monte-Carlo only).
    pub stderr: Option<f64>,
}

/// Per-source data used by every seed tuple.
struct Prepared {
    xs: Vec<u64>,
    /// For each adversary value: its weight and `(x position, weight)`.
    groups: Vec<(u128, Vec<(usize, u64)>)>,
    total: u128,
}

impl Prepared {
    fn new(source: &CqSource) -> Self {
        let xs = source.distinct_values();
        let pos: HashMap<u64, usize> = xs.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let mut groups: Vec<(u128, Vec<(usize, u64)>)> = vec![(0, Vec::new()); source.labels.len()];
        for &(x, e, w) in &source.entries {
            groups[e].0 += w as u128;
            groups[e].1.push((pos[&x], w));
        }
        Prepared {
            xs,
            groups,
            total: source.total,
        }
    }

    /// `sum_{k,e} |2^(L ell) W(k, e) - w_e|` for one tuple of hashes whose
    /// outputs on `xs` are `rows[j]`. Dividing by `2 * total * 2^(L ell)`
    /// gives the distance for that seed; offsets only permute `k` and the
    /// index factors out.
    fn numerator(&self, rows: &[&[u64]], ell: usize, scratch: &mut Vec<(u64, u64)>) -> u128 {
        let scale = 1u128 << (rows.len() * ell);
        let mut sum = 0u128;
        for (w_e, members) in &self.groups {
            scratch.clear();
            scratch.extend(members.iter().map(|&(p, w)| {
                let key = rows
                    .iter()
                    .enumerate()
                    .fold(0u64, |k, (j, row)| k | (row[p] << (j * ell)));
                (key, w)
            }));
            scratch.sort_unstable_by_key(|s| s.0);
            let mut distinct = 0u128;
            let mut i = 0;
            while i < scratch.len() {
                let key = scratch[i].0;
                let mut weight = 0u128;
                while i < scratch.len() && scratch[i].0 == key {
                    weight += scratch[i].1 as u128;
                    i += 1;
                }
                distinct += 1;
                sum += (scale * weight).abs_diff(*w_e);
            }
            sum += (scale - distinct) * w_e;
        }
        sum
    }

    fn denominator(&self, list: usize, ell: usize) -> u128 {
        2 * self.total << (list * ell)
    }
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    let mut acc = 1u128;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Calls `f(tuple, multiplicity)` for each nondecreasing tuple of length
/// `len` over `start..parts` whose first entry is `first`.
fn for_each_multiset<F: FnMut(&[usize], u128)>(parts: usize, len: usize, first: usize, mut f: F) {
    let mut idx = vec![first; len];
    let factorial = |k: usize| (1..=k as u128).product::<u128>();
    let full = factorial(len);
    loop {
        let mut mult = full;
        let mut run = 1;
        for t in 1..=len {
            if t < len && idx[t] == idx[t - 1] {
                run += 1;
            } else {
                mult /= factorial(run);
                run = 1;
            }
        }
        f(&idx, mult);
        // advance, keeping idx[0] fixed
        let mut t = len - 1;
        loop {
            if t == 0 {
                return;
            }
            if idx[t] + 1 < parts {
                let v = idx[t] + 1;
                for slot in &mut idx[t..] {
                    *slot = v;
                }
                break;
            }
            t -= 1;
        }
    }
}

/// Expected statistical distance between the real list state (keys
/// `F_j(x)`, uniform index, adversary value) and [`ideal_distribution`],
/// with the seed public: the distance is taken per seed and averaged.
pub fn real_ideal_distance(
    source: &CqSource,
    family: HashFamily,
    ell: usize,
    list: usize,
    mode: Mode,
) -> Result<DistanceReport> {
    real_ideal_distance_with(source, family, ell, list, mode, Exec::default())
}

pub fn real_ideal_distance_with(
    source: &CqSource,
    family: HashFamily,
    ell: usize,
    list: usize,
    mode: Mode,
    exec: Exec,
) -> Result<DistanceReport> {
    ideal_distribution(source, ell, list)?;
    if list * ell > 62 {
        return Err(Error::Dimensions("L * ell exceeds 62".into()));
    }
    let fam = Family::new(family, source.n, ell)?;
    let prep = Prepared::new(source);
    match mode {
        Mode::Exact => exact_distance(&fam, &prep, list, exec),
        Mode::MonteCarlo { samples, master } => {
            monte_carlo_distance(&fam, &prep, list, samples, master, exec)
        }
    }
}

/// Number of hash tuples exact mode visits (multisets of linear parts).
pub fn exact_tuple_count(family: HashFamily, n: usize, ell: usize, list: usize) -> Result<u128> {
    let fam = Family::new(family, n, ell)?;
    let bits = fam.linear_bits();
    if bits >= 100 {
        return Ok(u128::MAX);
    }
    Ok(binomial((1u128 << bits) + list as u128 - 1, list as u128).unwrap_or(u128::MAX))
}

fn exact_distance(
    fam: &Family,
    prep: &Prepared,
    list: usize,
    exec: Exec,
) -> Result<DistanceReport> {
    let count = exact_tuple_count(fam.kind, fam.n, fam.ell, list)?;
    if count > EXACT_LIMIT {
        return Err(Error::EnumerationTooLarge(count));
    }
    let bits = fam.linear_bits();
    let parts = 1usize << bits;
    let width = prep.xs.len();
    let table = fam.table(&prep.xs, exec)?;
    let ell = fam.ell;
    let sums = exec.map(parts, |first| {
        let mut scratch = Vec::new();
        let mut rows: Vec<&[u64]> = Vec::with_capacity(list);
        let mut acc = Some(0u128);
        for_each_multiset(parts, list, first, |idx, mult| {
            rows.clear();
            rows.extend(idx.iter().map(|&u| &table[u * width..(u + 1) * width]));
            let num = prep.numerator(&rows, ell, &mut scratch);
            acc = acc.and_then(|a| a.checked_add(num.checked_mul(mult)?));
        });
        acc
    });
    let overflow = || Error::EnumerationTooLarge(count);
    let mut numer = 0u128;
    for s in sums {
        numer = numer
            .checked_add(s.ok_or_else(overflow)?)
            .ok_or_else(overflow)?;
    }
    let tuples = (parts as u128)
        .checked_pow(list as u32)
        .ok_or_else(overflow)?;
    let denom = prep
        .denominator(list, ell)
        .checked_mul(tuples)
        .ok_or_else(overflow)?;
    let exact = Ratio::new(numer, denom);
    Ok(DistanceReport {
        value: *exact.numer() as f64 / *exact.denom() as f64,
        mode: DistanceMode::Exact,
        exact: Some(exact),
        samples: None,
        stderr: None,
    })
}

fn monte_carlo_distance(
    fam: &Family,
    prep: &Prepared,
    list: usize,
    samples: u64,
    master: MasterSeed,
    exec: Exec,
) -> Result<DistanceReport> {
    if samples == 0 {
        return Err(Error::Dimensions(
            "Monte-Carlo needs at least one sample".into(),
        ));
    }
    let bits = fam.linear_bits();
    let denom = prep.denominator(list, fam.ell) as f64;
    let shards = exec.map(MC_SHARDS as usize, |s| -> Result<(f64, f64)> {
        let s = s as u64;
        let count = samples * (s + 1) / MC_SHARDS - samples * s / MC_SHARDS;
        let mut rng = master.stream(&format!("seclab/distance/{s}"));
        let mut scratch = Vec::new();
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..count {
            let outs: Vec<Vec<u64>> = (0..list)
                .map(|_| {
                    let part = rng.bit_string(bits);
                    prep.xs.iter().map(|&x| fam.eval(&part, x)).collect()
                })
                .collect::<Result<_>>()?;
            let rows: Vec<&[u64]> = outs.iter().map(Vec::as_slice).collect();
            let d = prep.numerator(&rows, fam.ell, &mut scratch) as f64 / denom;
            sum += d;
            sumsq += d * d;
        }
        Ok((sum, sumsq))
    });
    let (mut sum, mut sumsq) = (0.0, 0.0);
    for r in shards {
        let (a, b) = r?;
        sum += a;
        sumsq += b;
    }
    let s = samples as f64;
    let mean = sum / s;
    let var = if samples > 1 {
        ((sumsq - s * mean * mean) / (s - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(DistanceReport {
        value: mean.clamp(0.0, 1.0),
        mode: DistanceMode::MonteCarlo,
        exact: None,
        samples: Some(samples),
        stderr: Some((var / s).sqrt()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The requested length exceeds the bound; nothing is claimed.
    NotApplicable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "bound not applicable",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QllhlReport {
    pub verdict: Verdict,
    pub smooth_entropy: f64,
    /// `H^eps + log L - 2 log(1/eps) - 3`.
    pub bound: f64,
    /// `4 eps`.
    pub target: f64,
    pub distance: DistanceReport,
}

/// Checks that hashing `source` to `L` keys of `ell` bits is within `4 eps`
/// of ideal whenever `ell` is at most the list bound.
pub fn verify_qllhl(
    source: &CqSource,
    epsilon: f64,
    list: usize,
    ell: usize,
    family: HashFamily,
    mode: Mode,
) -> Result<QllhlReport> {
    let mut out = verify_qllhl_grid(source, &[epsilon], list, ell, family, mode)?;
    Ok(out.remove(0))
}

/// [`verify_qllhl`] for several values of `eps`, sharing one distance
/// computation.
pub fn verify_qllhl_grid(
    source: &CqSource,
    epsilons: &[f64],
    list: usize,
    ell: usize,
    family: HashFamily,
    mode: Mode,
) -> Result<Vec<QllhlReport>> {
    let size = ListSize::from_count(list as u64)?;
    let bounds = epsilons
        .iter()
        .map(|&e| {
            let smooth = smooth_min_entropy(source, e)?;
            Ok((e, smooth, qllhl_length(smooth, e, size)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let distance = real_ideal_distance(source, family, ell, list, mode)?;
    Ok(bounds
        .into_iter()
        .map(|(e, smooth, bound)| {
            let target = 4.0 * e;
            let verdict = if ell as f64 > bound {
                Verdict::NotApplicable
            } else if within(&distance, target) {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            QllhlReport {
                verdict,
                smooth_entropy: smooth,
                bound,
                target,
                distance: distance.clone(),
            }
        })
        .collect())
}

fn within(d: &DistanceReport, target: f64) -> bool {
    match &d.exact {
        // compare exactly when target is a dyadic-friendly f64
        Some(r) => (*r.numer() as f64) <= target * *r.denom() as f64,
        None => d.value <= target,
    }
}
