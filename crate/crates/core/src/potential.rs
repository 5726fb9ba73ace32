//! Finite-memory functions on a shift space: potentials and observables
//! stored as value tables on admissible words.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::shift::{ShiftSpace, Symbol, Word};

/// A function `f(x) = table[x_0 … x_{m-1}]` of the first `memory`
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMemoryFunction<T> {
    space: ShiftSpace,
    memory: usize,
    words: Vec<Word>,
    values: Vec<T>,
    lookup: Vec<u32>,
    alpha: T,
}

impl<T: Real> FiniteMemoryFunction<T> {
    /// Tabulates `f` on every admissible `memory`-word.
    pub fn from_fn(space: &ShiftSpace, memory: usize, f: impl Fn(&[Symbol]) -> T) -> Result<Self> {
        let words = Self::words_of(space, memory)?;
        let values = words.iter().map(|w| f(w)).collect();
        Ok(Self::assemble(space, memory, words, values))
    }

    /// Builds from explicit `(word, value)` entries. Every admissible word
    /// must be present exactly once and nothing else may be.
    pub fn from_table(
        space: &ShiftSpace,
        memory: usize,
        entries: impl IntoIterator<Item = (Vec<Symbol>, T)>,
    ) -> Result<Self> {
        let mut given = BTreeMap::new();
        for (w, v) in entries {
            if w.len() != memory {
                return Err(Error::InvalidArgument(format!(
                    "word {w:?} has length {}, expected {memory}",
                    w.len()
                )));
            }
            space.word(&w)?;
            if given.insert(w.clone(), v).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate entry for word {w:?}")));
            }
        }
        let words = Self::words_of(space, memory)?;
        let values = words
            .iter()
            .map(|w| given.get(w.symbols()).copied().ok_or_else(|| Error::MissingWord(w.to_vec())))
            .collect::<Result<Vec<T>>>()?;
        Ok(Self::assemble(space, memory, words, values))
    }

    pub fn constant(space: &ShiftSpace, c: T) -> Self {
        Self::from_fn(space, 1, |_| c).expect("single symbols always enumerable")
    }

    /// `1_[symbol](x) = [x_0 == symbol]`.
    pub fn indicator(space: &ShiftSpace, symbol: Symbol) -> Self {
        Self::from_fn(space, 1, |w| if w[0] == symbol { T::one() } else { T::zero() })
            .expect("single symbols always enumerable")
    }

    /// Memory-1 function with one value per symbol.
    pub fn per_symbol(space: &ShiftSpace, values: &[T]) -> Result<Self> {
        if values.len() != space.alphabet_size() {
            return Err(Error::InvalidArgument(format!(
                "expected {} per-symbol values, got {}",
                space.alphabet_size(),
                values.len()
            )));
        }
        Self::from_fn(space, 1, |w| values[w[0]])
    }

    fn words_of(space: &ShiftSpace, memory: usize) -> Result<Vec<Word>> {
        if memory == 0 {
            return Err(Error::InvalidArgument("memory must be at least 1".into()));
        }
        space.enumerate_words(memory)
    }

    fn assemble(space: &ShiftSpace, memory: usize, words: Vec<Word>, values: Vec<T>) -> Self {
        let n = space.alphabet_size();
        let mut lookup = vec![u32::MAX; n.pow(memory as u32)];
        for (i, w) in words.iter().enumerate() {
            lookup[code(n, w)] = i as u32;
        }
        Self { space: space.clone(), memory, words, values, lookup, alpha: T::lit(0.5) }
    }

    /// Sets the Hölder metric parameter (default 1/2).
    pub fn with_alpha(mut self, alpha: T) -> Result<Self> {
        check_alpha(alpha)?;
        self.alpha = alpha;
        Ok(self)
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn space(&self) -> &ShiftSpace {
        &self.space
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    /// `(word, value)` pairs in lexicographic word order.
    pub fn entries(&self) -> impl Iterator<Item = (&Word, T)> + '_ {
        self.words.iter().zip(self.values.iter().copied())
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Value on a prefix of at least `memory` symbols; `None` if that prefix
    /// is not admissible.
    pub fn get(&self, x: &[Symbol]) -> Option<T> {
        let w = x.get(..self.memory)?;
        if w.iter().any(|&s| s >= self.space.alphabet_size()) {
            return None;
        }
        match self.lookup[code(self.space.alphabet_size(), w)] {
            u32::MAX => None,
            i => Some(self.values[i as usize]),
        }
    }

    pub(crate) fn value(&self, x: &[Symbol]) -> T {
        self.get(x).expect("admissible word of sufficient length")
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// Largest oscillation over words sharing their first `n` coordinates.
    pub fn var_n(&self, n: usize) -> T {
        if n >= self.memory {
            return T::zero();
        }
        let mut best = T::zero();
        let mut start = 0;
        while start < self.words.len() {
            let head = &self.words[start][..n];
            let mut end = start;
            let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
            while end < self.words.len() && &self.words[end][..n] == head {
                lo = lo.min(self.values[end]);
                hi = hi.max(self.values[end]);
                end += 1;
            }
            best = best.max(hi - lo);
            start = end;
        }
        best
    }

    /// `V(f) = Σ_n var_n(f)`; a finite sum for finite memory.
    pub fn total_variation(&self) -> T {
        (0..self.memory).map(|n| self.var_n(n)).sum()
    }

    /// `‖f‖_∞ + V(f)`.
    pub fn summable_variation_norm(&self) -> T {
        self.sup_norm() + self.total_variation()
    }

    /// `sup_n α^{-n} var_n(f)`.
    pub fn holder_seminorm(&self, alpha: T) -> Result<T> {
        check_alpha(alpha)?;
        Ok((0..self.memory)
            .map(|n| self.var_n(n) / alpha.powi(n as i32))
            .fold(T::zero(), T::max))
    }

    /// `S_n f(x) = Σ_{k<n} f(σ^k x)`; needs `n + memory - 1` symbols.
    pub fn birkhoff_sum(&self, x: &[Symbol], n: usize) -> Result<T> {
        let need = n + self.memory - 1;
        if x.len() < need {
            return Err(Error::TooShort { have: x.len(), need });
        }
        (0..n)
            .map(|k| self.get(&x[k..]).ok_or_else(|| Error::NotAdmissible(x[k..k + self.memory].to_vec())))
            .sum()
    }

    /// Smallest and largest `S_n f` over every admissible point of the
    /// cylinder `[w]`, `|w| = n`. Exact: only `memory - 1` symbols beyond
    /// `w` matter.
    pub fn birkhoff_range_on_cylinder(&self, w: &[Symbol]) -> (T, T) {
        let n = w.len();
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        let mut x = w.to_vec();
        for tail in self.space.continuations(w, self.memory - 1) {
            x.truncate(n);
            x.extend_from_slice(&tail);
            let s = self.birkhoff_sum(&x, n).expect("continuation is admissible");
            lo = lo.min(s);
            hi = hi.max(s);
        }
        (lo, hi)
    }

    /// The same function viewed as depending on `memory` coordinates.
    pub fn lift(&self, memory: usize) -> Result<Self> {
        if memory < self.memory {
            return Err(Error::InvalidArgument(format!(
                "cannot lower memory from {} to {memory}",
                self.memory
            )));
        }
        let mut out = Self::from_fn(&self.space, memory, |w| self.value(w))?;
        out.alpha = self.alpha;
        Ok(out)
    }

    /// `self + s · other` at the larger of the two memories.
    pub fn affine_combine(&self, other: &Self, s: T) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::DomainMismatch);
        }
        let m = self.memory.max(other.memory);
        let mut out = Self::from_fn(&self.space, m, |w| self.value(w) + s * other.value(w))?;
        out.alpha = self.alpha;
        Ok(out)
    }

    /// Applies `f` to every table entry.
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = f(*v));
        out
    }

    /// Pointwise product at the larger memory.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::DomainMismatch);
        }
        let m = self.memory.max(other.memory);
        Self::from_fn(&self.space, m, |w| self.value(w) * other.value(w))
    }

    pub fn is_constant(&self) -> bool {
        self.var_n(0) == T::zero()
    }
}

pub(crate) fn code(alphabet: usize, w: &[Symbol]) -> usize {
    w.iter().fold(0, |acc, &s| acc * alphabet + s)
}

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if alpha > T::zero() && alpha < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("metric parameter {alpha} not in (0,1)")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn bernoulli_variations() {
        let m = models::bernoulli::<f64>(0.7).unwrap();
        let phi = &m.potential;
        let expect = (7.0f64 / 3.0).ln();
        assert!((phi.var_n(0) - expect).abs() < 1e-15);
        assert_eq!(phi.var_n(1), 0.0);
        assert!((phi.total_variation() - expect).abs() < 1e-15);
        assert!((phi.holder_seminorm(0.5).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn ising_variations() {
        let m = models::ising::<f64>(1.0, 0.0).unwrap();
        let phi = &m.potential;
        assert_eq!(phi.var_n(0), 2.0);
        assert_eq!(phi.var_n(1), 2.0);
        assert_eq!(phi.var_n(2), 0.0);
        assert_eq!(phi.total_variation(), 4.0);
        assert_eq!(phi.holder_seminorm(0.5).unwrap(), 4.0);
        // with a field: var_0 = var_1 = 2|β| + |h|
        let m = models::ising::<f64>(1.0, 0.5).unwrap();
        assert!((m.potential.var_n(0) - 2.5).abs() < 1e-15);
        assert!((m.potential.var_n(1) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn constant_function() {
        let s = ShiftSpace::golden_mean();
        let c = FiniteMemoryFunction::constant(&s, 3.0);
        assert_eq!(c.total_variation(), 0.0);
        assert_eq!(c.holder_seminorm(0.5).unwrap(), 0.0);
        assert_eq!(c.birkhoff_sum(&[0, 1, 0, 0, 1], 5).unwrap(), 15.0);
    }

    #[test]
    fn birkhoff_sums() {
        let m = models::bernoulli::<f64>(0.7).unwrap();
        let s = m.potential.birkhoff_sum(&[0, 1, 0, 0], 4).unwrap();
        assert!((s - 0.1029f64.ln()).abs() < 1e-12);
        let ising = models::ising::<f64>(1.0, 0.0).unwrap();
        assert_eq!(ising.potential.birkhoff_sum(&[0, 0, 1], 2).unwrap(), 0.0);
        assert_eq!(
            ising.potential.birkhoff_sum(&[0, 0], 2).unwrap_err(),
            Error::TooShort { have: 2, need: 3 }
        );
    }

    #[test]
    fn affine_combinations() {
        let b = models::bernoulli::<f64>(0.7).unwrap().potential;
        let s = ShiftSpace::full(2).unwrap();
        let g = FiniteMemoryFunction::<f64>::indicator(&s, 0).lift(2).unwrap();
        let same = b.affine_combine(&g, 0.0).unwrap();
        assert_eq!(same.memory(), 2);
        assert_eq!(same, b.lift(2).unwrap());
        let doubled = b.affine_combine(&b, 1.0).unwrap();
        for ((_, d), (_, v)) in doubled.entries().zip(b.entries()) {
            assert_eq!(d, 2.0 * v);
        }
        let i1 = models::ising::<f64>(1.0, 0.0).unwrap().potential;
        let i2 = models::ising::<f64>(2.0, 0.0).unwrap().potential;
        assert_eq!(i1.affine_combine(&i1, 1.0).unwrap(), i2);
    }

    #[test]
    fn table_validation() {
        let s = ShiftSpace::golden_mean();
        let missing = FiniteMemoryFunction::from_table(&s, 2, vec![(vec![0, 0], 1.0), (vec![0, 1], 2.0)]);
        assert_eq!(missing.unwrap_err(), Error::MissingWord(vec![1, 0]));
        let forbidden = FiniteMemoryFunction::from_table(&s, 1, vec![(vec![0], 1.0), (vec![1], 2.0), (vec![1], 3.0)]);
        assert!(matches!(forbidden, Err(Error::InvalidArgument(_))));
        let bad = FiniteMemoryFunction::from_table(&s, 2, vec![(vec![1, 1], 1.0)]);
        assert_eq!(bad.unwrap_err(), Error::NotAdmissible(vec![1, 1]));
    }

    #[test]
    fn cylinder_range_covers_boundary_symbol() {
        let ising = models::ising::<f64>(1.0, 0.0).unwrap().potential;
        let (lo, hi) = ising.birkhoff_range_on_cylinder(&[0, 0]);
        assert_eq!((lo, hi), (0.0, 2.0));
    }

    #[test]
    fn alpha_must_be_in_unit_interval() {
        let s = ShiftSpace::golden_mean();
        let f = FiniteMemoryFunction::<f64>::indicator(&s, 0);
        assert!(f.holder_seminorm(1.0).is_err());
        assert!(f.with_alpha(0.0).is_err());
    }
}
