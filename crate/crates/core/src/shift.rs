//! Subshifts of finite type: validation, word enumeration, connecting words
//! and higher-block recoding.
//!
//! Symbols are `0..N` internally. Words are always produced in
//! lexicographic order so that every derived table is bit-stable.

use std::fmt;
use std::ops::Deref;

use crate::error::{Error, Result};

pub type Symbol = usize;

/// Default cap on the number of words (or block states) any single
/// enumeration may touch.
pub const DEFAULT_ENUM_CAP: u128 = 1 << 20;

/// A finite sequence of symbols. Admissibility is checked by the
/// [`ShiftSpace`] that hands words out; a bare `Word` is just data.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Word(symbols)
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Symbol> {
        self.0
    }
}

impl Deref for Word {
    type Target = [Symbol];
    fn deref(&self) -> &[Symbol] {
        &self.0
    }
}

impl From<Vec<Symbol>> for Word {
    fn from(v: Vec<Symbol>) -> Self {
        Word(v)
    }
}

impl fmt::Display for Word {
    /// One-based, comma separated: the format used for table keys.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, s) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", s + 1)?;
        }
        Ok(())
    }
}

/// One-sided subshift of finite type with a primitive 0/1 matrix.
#[derive(Debug, Clone)]
pub struct ShiftSpace {
    alphabet: usize,
    allowed: Vec<Vec<bool>>,
    mixing_time: usize,
    enum_cap: u128,
}

// The enumeration cap is a resource limit, not part of the space.
impl PartialEq for ShiftSpace {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet && self.allowed == other.allowed
    }
}

impl Eq for ShiftSpace {}

impl ShiftSpace {
    /// Validates a 0/1 transition matrix (rows = source symbol) and computes
    /// its minimal mixing time.
    pub fn new(alphabet: usize, transitions: &[Vec<u8>]) -> Result<Self> {
        if transitions.len() != alphabet
            || transitions.iter().any(|r| r.len() != alphabet || r.iter().any(|&x| x > 1))
        {
            return Err(Error::MalformedMatrix { n: alphabet });
        }
        let allowed = transitions.iter().map(|r| r.iter().map(|&x| x == 1).collect()).collect();
        Self::from_allowed(allowed)
    }

    fn from_allowed(allowed: Vec<Vec<bool>>) -> Result<Self> {
        let n = allowed.len();
        if n < 2 {
            return Err(Error::AlphabetTooSmall(n));
        }
        for i in 0..n {
            if !allowed[i].iter().any(|&b| b) {
                return Err(Error::RowColumnEmpty { kind: "row", index: i });
            }
            if !(0..n).any(|r| allowed[r][i]) {
                return Err(Error::RowColumnEmpty { kind: "column", index: i });
            }
        }
        let mixing_time = primitive_exponent(&allowed)?;
        Ok(Self { alphabet: n, allowed, mixing_time, enum_cap: DEFAULT_ENUM_CAP })
    }

    /// Full shift on `n` symbols.
    pub fn full(n: usize) -> Result<Self> {
        Self::new(n, &vec![vec![1; n]; n])
    }

    /// Alphabet {0, 1} with the word `11` forbidden.
    pub fn golden_mean() -> Self {
        Self::new(2, &[vec![1, 1], vec![1, 0]]).expect("golden mean matrix is primitive")
    }

    pub fn with_enum_cap(mut self, cap: u128) -> Self {
        self.enum_cap = cap;
        self
    }

    pub fn enum_cap(&self) -> u128 {
        self.enum_cap
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet
    }

    pub fn mixing_time(&self) -> usize {
        self.mixing_time
    }

    pub fn allows(&self, from: Symbol, to: Symbol) -> bool {
        self.allowed[from][to]
    }

    /// Transition matrix as 0/1 rows.
    pub fn transitions(&self) -> Vec<Vec<u8>> {
        self.allowed.iter().map(|r| r.iter().map(|&b| u8::from(b)).collect()).collect()
    }

    pub fn transition_count(&self) -> usize {
        self.allowed.iter().flatten().filter(|&&b| b).count()
    }

    pub fn successors(&self, s: Symbol) -> impl Iterator<Item = Symbol> + '_ {
        (0..self.alphabet).filter(move |&t| self.allowed[s][t])
    }

    pub fn is_admissible(&self, w: &[Symbol]) -> bool {
        w.iter().all(|&s| s < self.alphabet) && w.windows(2).all(|p| self.allowed[p[0]][p[1]])
    }

    /// Wraps `symbols` as a word after checking admissibility.
    pub fn word(&self, symbols: &[Symbol]) -> Result<Word> {
        if let Some(&s) = symbols.iter().find(|&&s| s >= self.alphabet) {
            return Err(Error::InvalidSymbol { symbol: s, alphabet: self.alphabet });
        }
        if !self.is_admissible(symbols) {
            return Err(Error::NotAdmissible(symbols.to_vec()));
        }
        Ok(Word(symbols.to_vec()))
    }

    /// Number of admissible words of length `n` (sum of the entries of
    /// `A^(n-1)`), saturating.
    pub fn word_count(&self, n: usize) -> u128 {
        if n == 0 {
            return 1;
        }
        let mut ends = vec![1u128; self.alphabet];
        for _ in 1..n {
            let mut next = vec![0u128; self.alphabet];
            for (i, &c) in ends.iter().enumerate() {
                for j in self.successors(i) {
                    next[j] = next[j].saturating_add(c);
                }
            }
            ends = next;
        }
        ends.into_iter().fold(0u128, u128::saturating_add)
    }

    pub(crate) fn guard(&self, requested: u128) -> Result<()> {
        if requested > self.enum_cap {
            Err(Error::SizeGuard { requested, cap: self.enum_cap })
        } else {
            Ok(())
        }
    }

    fn guard_len(&self, n: usize) -> Result<()> {
        let requested = (self.alphabet as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        self.guard(requested)
    }

    /// All admissible words of length `n ≥ 1`, lexicographically.
    pub fn enumerate_words(&self, n: usize) -> Result<Vec<Word>> {
        if n == 0 {
            return Err(Error::InvalidArgument("word length must be at least 1".into()));
        }
        self.guard_len(n)?;
        let mut out = Vec::new();
        let mut buf = Vec::with_capacity(n);
        for s in 0..self.alphabet {
            buf.push(s);
            self.extend_into(&mut buf, n, &mut out);
            buf.pop();
        }
        Ok(out)
    }

    fn extend_into(&self, buf: &mut Vec<Symbol>, n: usize, out: &mut Vec<Word>) {
        if buf.len() == n {
            out.push(Word(buf.clone()));
            return;
        }
        let last = *buf.last().unwrap();
        for t in 0..self.alphabet {
            if self.allowed[last][t] {
                buf.push(t);
                self.extend_into(buf, n, out);
                buf.pop();
            }
        }
    }

    /// All admissible continuations of length `k` that may follow `w`
    /// (lexicographic). A single empty continuation when `k == 0`.
    pub fn continuations(&self, w: &[Symbol], k: usize) -> Vec<Vec<Symbol>> {
        if k == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        let mut buf = vec![*w.last().expect("non-empty word")];
        let mut words = Vec::new();
        self.extend_into(&mut buf, k + 1, &mut words);
        for wd in words {
            out.push(wd.0[1..].to_vec());
        }
        out
    }

    /// Lexicographically smallest admissible word of length `len` starting
    /// at `from` that can be followed by `to`.
    pub fn connecting_word(&self, from: Symbol, to: Symbol, len: usize) -> Result<Word> {
        for &s in &[from, to] {
            if s >= self.alphabet {
                return Err(Error::InvalidSymbol { symbol: s, alphabet: self.alphabet });
            }
        }
        if len == 0 {
            return Err(Error::InvalidArgument("connecting word length must be positive".into()));
        }
        // reach[k][s]: `to` reachable from `s` in exactly k steps
        let mut reach = vec![vec![false; self.alphabet]; len + 1];
        reach[0][to] = true;
        for k in 1..=len {
            for s in 0..self.alphabet {
                reach[k][s] = self.successors(s).any(|t| reach[k - 1][t]);
            }
        }
        if !reach[len][from] {
            return Err(Error::NoPath { from, to, len });
        }
        let mut path = vec![from];
        for k in (1..len).rev() {
            let cur = *path.last().unwrap();
            let next = self.successors(cur).find(|&t| reach[k][t]).unwrap();
            path.push(next);
        }
        Ok(Word(path))
    }

    /// Extends `w` by `horizon` symbols, each the smallest admissible
    /// successor of the previous one.
    pub fn canonical_extension(&self, w: &[Symbol], horizon: usize) -> Word {
        let mut out = w.to_vec();
        for _ in 0..horizon {
            let last = *out.last().expect("non-empty word");
            out.push(self.successors(last).next().expect("validated: every row non-empty"));
        }
        Word(out)
    }

    /// Higher-block presentation on admissible `len`-words.
    pub fn recode(&self, len: usize) -> Result<HigherBlock> {
        if len == 0 {
            return Err(Error::InvalidArgument("block length must be at least 1".into()));
        }
        let blocks = self.enumerate_words(len)?;
        let size = (self.alphabet as u128).pow(len as u32) as usize;
        let mut lookup = vec![u32::MAX; size];
        for (i, b) in blocks.iter().enumerate() {
            lookup[block_code(self.alphabet, b)] = i as u32;
        }
        let space = if len == 1 {
            self.clone()
        } else {
            let allowed: Vec<Vec<bool>> = blocks
                .iter()
                .map(|u| {
                    blocks
                        .iter()
                        .map(|v| u[1..] == v[..len - 1] && self.allowed[u[len - 1]][v[len - 1]])
                        .collect()
                })
                .collect();
            let mut s = Self::from_allowed(allowed)?;
            s.enum_cap = self.enum_cap;
            s
        };
        Ok(HigherBlock { base: self.clone(), space, block_len: len, blocks, lookup })
    }
}

/// Primitive exponent of a 0/1 matrix: the least `k` with `A^k > 0`, searched
/// up to the Wielandt bound `(n-1)^2 + 1`.
fn primitive_exponent(allowed: &[Vec<bool>]) -> Result<usize> {
    let n = allowed.len();
    let words = n.div_ceil(64);
    let bits = |row: &[bool]| {
        let mut b = vec![0u64; words];
        for (j, &x) in row.iter().enumerate() {
            if x {
                b[j / 64] |= 1 << (j % 64);
            }
        }
        b
    };
    let base: Vec<Vec<u64>> = allowed.iter().map(|r| bits(r)).collect();
    let full = |row: &[u64]| (0..n).all(|j| row[j / 64] >> (j % 64) & 1 == 1);
    let bound = (n - 1) * (n - 1) + 1;
    let mut power = base.clone();
    for k in 1..=bound {
        if power.iter().all(|r| full(r)) {
            return Ok(k);
        }
        let next = power
            .iter()
            .map(|row| {
                let mut acc = vec![0u64; words];
                for j in 0..n {
                    if row[j / 64] >> (j % 64) & 1 == 1 {
                        for (a, b) in acc.iter_mut().zip(&base[j]) {
                            *a |= b;
                        }
                    }
                }
                acc
            })
            .collect();
        power = next;
    }
    Err(Error::NotPrimitive { bound })
}

fn block_code(alphabet: usize, w: &[Symbol]) -> usize {
    w.iter().fold(0, |acc, &s| acc * alphabet + s)
}

/// A shift recoded on blocks of `block_len` symbols. State `i` of the
/// recoded space is `blocks()[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HigherBlock {
    base: ShiftSpace,
    space: ShiftSpace,
    block_len: usize,
    blocks: Vec<Word>,
    lookup: Vec<u32>,
}

impl HigherBlock {
    pub fn base(&self) -> &ShiftSpace {
        &self.base
    }

    pub fn space(&self) -> &ShiftSpace {
        &self.space
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn blocks(&self) -> &[Word] {
        &self.blocks
    }

    pub fn state_count(&self) -> usize {
        self.blocks.len()
    }

    /// State index of an admissible block of exactly `block_len` symbols.
    pub fn state_of(&self, block: &[Symbol]) -> Option<usize> {
        if block.len() != self.block_len || block.iter().any(|&s| s >= self.base.alphabet) {
            return None;
        }
        match self.lookup[block_code(self.base.alphabet, block)] {
            u32::MAX => None,
            i => Some(i as usize),
        }
    }

    /// States visited by a word of length ≥ `block_len`, one per window.
    pub fn states_along(&self, w: &[Symbol]) -> Option<Vec<usize>> {
        w.windows(self.block_len).map(|b| self.state_of(b)).collect()
    }
}
