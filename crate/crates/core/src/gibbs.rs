//! Stationary Markov measures on a recoded shift, and the Gibbs measure
//! `μ = hν` of a finite-memory potential as one of them.
//!
//! Cylinder values are always derived from `(π, Q)`, never tabulated.

use std::ops::Deref;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::potential::FiniteMemoryFunction;
use crate::scalar::Real;
use crate::shift::{HigherBlock, ShiftSpace, Symbol, Word};
use crate::transfer::{EigenData, TransferSystem};

/// A stationary Markov chain on the `ℓ`-block states of a shift.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovMeasure<T> {
    blocks: HigherBlock,
    stationary: Vec<T>,
    transition: Matrix<T>,
}

impl<T: Real> MarkovMeasure<T> {
    /// Validates stochasticity, support on allowed transitions, and
    /// stationarity of `π` (all within `√eps`).
    pub fn new(blocks: HigherBlock, stationary: Vec<T>, transition: Matrix<T>) -> Result<Self> {
        let n = blocks.state_count();
        if stationary.len() != n || transition.rows() != n || transition.cols() != n {
            return Err(Error::InvalidArgument(format!("chain must have {n} states")));
        }
        let tol = T::epsilon().sqrt();
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.into()));
        if stationary.iter().any(|&p| p < T::zero()) || (stationary.iter().copied().sum::<T>() - T::one()).abs() > tol {
            return bad("stationary vector is not a probability vector");
        }
        for u in 0..n {
            let row = transition.row(u);
            if row.iter().any(|&q| q < T::zero()) || (row.iter().copied().sum::<T>() - T::one()).abs() > tol {
                return bad("transition rows must be probability vectors");
            }
            if (0..n).any(|w| row[w] > T::zero() && !blocks.space().allows(u, w)) {
                return bad("transition charges a forbidden block pair");
            }
        }
        let pq = transition.tmul_vec(&stationary);
        if pq.iter().zip(&stationary).any(|(&a, &b)| (a - b).abs() > tol) {
            return bad("stationary vector is not invariant");
        }
        Ok(Self { blocks, stationary, transition })
    }

    /// The chain with kernel `Q` started from its unique stationary law.
    pub fn from_kernel(blocks: HigherBlock, transition: Matrix<T>) -> Result<Self> {
        let n = blocks.state_count();
        if transition.rows() != n || transition.cols() != n {
            return Err(Error::InvalidArgument(format!("kernel must be {n}x{n}")));
        }
        // π(I − Q) = 0 with one equation replaced by Σπ = 1
        let a = Matrix::from_fn(n, n, |i, j| {
            if i == n - 1 {
                T::one()
            } else {
                let delta = if i == j { T::one() } else { T::zero() };
                delta - transition[(j, i)]
            }
        });
        let mut b = vec![T::zero(); n];
        b[n - 1] = T::one();
        let pi = a
            .solve(&b, T::epsilon())
            .ok_or(Error::SolveFailure("stationary law of a reducible kernel"))?;
        let pi = pi.into_iter().map(|p| p.max(T::zero())).collect();
        Self::new(blocks, pi, transition)
    }

    /// Uniform choice among the allowed successors of each symbol: the
    /// fair coin on a full shift.
    pub fn uniform(space: &ShiftSpace) -> Result<Self> {
        let blocks = space.recode(1)?;
        let n = space.alphabet_size();
        let q = Matrix::from_fn(n, n, |u, w| {
            if space.allows(u, w) {
                T::one() / T::from_usize(space.successors(u).count()).unwrap()
            } else {
                T::zero()
            }
        });
        Self::from_kernel(blocks, q)
    }

    pub fn blocks(&self) -> &HigherBlock {
        &self.blocks
    }

    /// The underlying (unrecoded) shift.
    pub fn base(&self) -> &ShiftSpace {
        self.blocks.base()
    }

    pub fn block_len(&self) -> usize {
        self.blocks.block_len()
    }

    pub fn state_count(&self) -> usize {
        self.blocks.state_count()
    }

    pub fn stationary(&self) -> &[T] {
        &self.stationary
    }

    pub fn transition(&self) -> &Matrix<T> {
        &self.transition
    }

    /// `μ([w])`; zero for non-admissible words, one for the empty word.
    pub fn cylinder_measure(&self, w: &[Symbol]) -> T {
        let l = self.block_len();
        if w.len() < l {
            return self
                .blocks
                .blocks()
                .iter()
                .zip(&self.stationary)
                .filter(|(b, _)| b.starts_with(w))
                .map(|(_, &p)| p)
                .sum();
        }
        match self.blocks.states_along(w) {
            None => T::zero(),
            Some(states) => states
                .windows(2)
                .fold(self.stationary[states[0]], |acc, s| acc * self.transition[(s[0], s[1])]),
        }
    }

    /// `J(w) = μ([w₁…w_{k-1}]) / μ([w₀…w_{k-1}])`, which for a Markov measure
    /// no longer depends on `w` beyond its first `ℓ + 1` symbols.
    pub fn jacobian(&self, w: &[Symbol]) -> Result<T> {
        let need = self.block_len() + 1;
        if w.len() < need {
            return Err(Error::TooShort { have: w.len(), need });
        }
        let full = self.cylinder_measure(w);
        if full == T::zero() {
            return Err(Error::Undefined("Jacobian on a null cylinder"));
        }
        Ok(self.cylinder_measure(&w[1..]) / full)
    }

    /// Entropy rate `−Σ π(u) Q(u,v) log Q(u,v)`, in nats.
    pub fn entropy(&self) -> T {
        let mut h = T::zero();
        for (u, &p) in self.stationary.iter().enumerate() {
            for &q in self.transition.row(u) {
                if q > T::zero() {
                    h -= p * q * q.ln();
                }
            }
        }
        h
    }

    /// `∫ψ dμ` over the admissible words of ψ's memory.
    pub fn expectation(&self, psi: &FiniteMemoryFunction<T>) -> Result<T> {
        if psi.space() != self.base() {
            return Err(Error::DomainMismatch);
        }
        Ok(psi.entries().map(|(w, v)| v * self.cylinder_measure(w)).sum())
    }

    /// The same measure presented on blocks of length `len ≥ ℓ`.
    pub fn lift(&self, len: usize) -> Result<Self> {
        let l = self.block_len();
        if len < l {
            return Err(Error::InvalidArgument(format!("cannot lift block length {l} to {len}")));
        }
        if len == l {
            return Ok(self.clone());
        }
        let blocks = self.base().recode(len)?;
        let tail_state: Vec<usize> = blocks
            .blocks()
            .iter()
            .map(|b| self.blocks.state_of(&b[len - l..]).expect("sub-block of an admissible block"))
            .collect();
        let stationary = blocks.blocks().iter().map(|b| self.cylinder_measure(b)).collect();
        let n = blocks.state_count();
        let mut q = Matrix::zeros(n, n);
        for u in 0..n {
            for w in blocks.space().successors(u) {
                q[(u, w)] = self.transition[(tail_state[u], tail_state[w])];
            }
        }
        Ok(Self { blocks, stationary, transition: q })
    }

    /// Values of `ψ` on block states; needs `memory(ψ) ≤ ℓ`.
    pub fn state_values(&self, psi: &FiniteMemoryFunction<T>) -> Result<Vec<T>> {
        if psi.space() != self.base() {
            return Err(Error::DomainMismatch);
        }
        if psi.memory() > self.block_len() {
            return Err(Error::InvalidArgument(format!(
                "observable memory {} exceeds block length {}",
                psi.memory(),
                self.block_len()
            )));
        }
        Ok(self.blocks.blocks().iter().map(|b| psi.value(b)).collect())
    }
}

/// The Gibbs measure of a potential, with the spectral data it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsMeasure<T> {
    chain: MarkovMeasure<T>,
    pressure: T,
    gap_ratio: T,
    h: Vec<T>,
    nu: Vec<T>,
    source: FiniteMemoryFunction<T>,
}

impl<T> Deref for GibbsMeasure<T> {
    type Target = MarkovMeasure<T>;
    fn deref(&self) -> &MarkovMeasure<T> {
        &self.chain
    }
}

/// Assembles `μ = hν` from converged eigendata.
pub fn gibbs_measure<T: Real>(t: &TransferSystem<T>, e: &EigenData<T>) -> GibbsMeasure<T> {
    let op = t.normalized_operator(e);
    GibbsMeasure {
        chain: MarkovMeasure {
            blocks: t.blocks().clone(),
            stationary: op.stationary,
            transition: op.forward,
        },
        pressure: e.pressure,
        gap_ratio: e.gap_ratio,
        h: e.h.clone(),
        nu: e.nu.clone(),
        source: t.potential().clone(),
    }
}

impl<T: Real> GibbsMeasure<T> {
    pub fn from_potential(space: &ShiftSpace, phi: &FiniteMemoryFunction<T>) -> Result<Self> {
        let t = TransferSystem::build(space, phi)?;
        let e = t.eigendata()?;
        Ok(gibbs_measure(&t, &e))
    }

    pub fn chain(&self) -> &MarkovMeasure<T> {
        &self.chain
    }

    pub fn pressure(&self) -> T {
        self.pressure
    }

    pub fn gap_ratio(&self) -> T {
        self.gap_ratio
    }

    pub fn eigenfunction(&self) -> &[T] {
        &self.h
    }

    pub fn eigenmeasure(&self) -> &[T] {
        &self.nu
    }

    pub fn source(&self) -> &FiniteMemoryFunction<T> {
        &self.source
    }

    /// `e^{P − φ(w)}` for a word of at least `memory` symbols.
    pub fn literal_jacobian(&self, w: &[Symbol]) -> T {
        (self.pressure - self.source.value(w)).exp()
    }

    /// `e^{P − φ(w)} h(w₁…)/h(w₀…)`: the Jacobian predicted from the
    /// eigendata for a word of at least `ℓ + 1` symbols. Equal to the
    /// literal form whenever `h` is constant.
    pub fn predicted_jacobian(&self, w: &[Symbol]) -> T {
        let l = self.block_len();
        let a = self.blocks.state_of(&w[..l]).expect("admissible");
        let b = self.blocks.state_of(&w[1..=l]).expect("admissible");
        self.literal_jacobian(w) * self.h[b] / self.h[a]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsScanReport<T> {
    pub n_max: usize,
    pub min_ratio: T,
    pub max_ratio: T,
    /// `(e^{−2V}, e^{2V})`.
    pub theoretical: (T, T),
    /// Extremal ratios for each word length `1..=n_max`.
    pub per_length: Vec<(T, T)>,
    /// Largest relative deviation of the per-length extrema from those at
    /// `n_max`, over the upper half of the lengths scanned.
    pub band_drift: T,
    /// `band_drift ≤ 1e-9`.
    pub band_stable: bool,
    pub within_theoretical: bool,
}

impl<T: Real> GibbsScanReport<T> {
    pub fn pass(&self) -> bool {
        self.within_theoretical
    }
}

/// Scans `μ([w]) / exp(−nP + S_nφ(x))` over every admissible `w` with
/// `|w| ≤ n_max` and every admissible `(m−1)`-symbol continuation `x` of
/// `w` — all that `S_nφ` on `[w]` depends on.
pub fn gibbs_ratio_scan<T: Real>(mu: &GibbsMeasure<T>, n_max: usize) -> Result<GibbsScanReport<T>> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let phi = &mu.source;
    let tail = phi.memory() - 1;
    let space = mu.base();
    let mut per_length = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let words = space.enumerate_words(n)?;
        let np = T::from_usize(n).unwrap() * mu.pressure;
        let (lo, hi) = words
            .par_iter()
            .map(|w| {
                let log_mu = mu.cylinder_measure(w).ln();
                let mut x = w.to_vec();
                let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
                for c in space.continuations(w, tail) {
                    x.truncate(n);
                    x.extend_from_slice(&c);
                    let s = phi.birkhoff_sum(&x, n).expect("admissible continuation");
                    let r = (log_mu + np - s).exp();
                    lo = lo.min(r);
                    hi = hi.max(r);
                }
                (lo, hi)
            })
            .reduce(|| (T::infinity(), T::neg_infinity()), |a, b| (a.0.min(b.0), a.1.max(b.1)));
        per_length.push((lo, hi));
    }
    let min_ratio = per_length.iter().map(|p| p.0).fold(T::infinity(), T::min);
    let max_ratio = per_length.iter().map(|p| p.1).fold(T::neg_infinity(), T::max);
    let two_v = T::lit(2.0) * phi.total_variation();
    let theoretical = ((-two_v).exp(), two_v.exp());
    let slack = T::lit(1e-12).max(T::epsilon() * T::lit(64.0));
    let within_theoretical =
        min_ratio >= theoretical.0 * (T::one() - slack) && max_ratio <= theoretical.1 * (T::one() + slack);
    let rel = T::lit(1e-9).max(T::epsilon().sqrt());
    let last = per_length[n_max - 1];
    let dev = |a: T, b: T| (a - b).abs() / a.abs().max(b.abs());
    let band_drift = per_length[n_max / 2..]
        .iter()
        .map(|&(lo, hi)| dev(lo, last.0).max(dev(hi, last.1)))
        .fold(T::zero(), T::max);
    let band_stable = band_drift <= rel;
    Ok(GibbsScanReport {
        n_max,
        min_ratio,
        max_ratio,
        theoretical,
        per_length,
        band_drift,
        band_stable,
        within_theoretical,
    })
}

/// `P − h(μ) − ∫φ dμ`, nonnegative for every invariant `μ` and zero exactly
/// at the equilibrium state.
pub fn variational_defect<T: Real>(
    mu: &MarkovMeasure<T>,
    phi: &FiniteMemoryFunction<T>,
    pressure: T,
) -> Result<T> {
    Ok(pressure - mu.entropy() - mu.expectation(phi)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WassersteinEstimate<T> {
    /// Contribution of word lengths `1..=n_max`; the true distance lies in
    /// `[value, value + tail_bound]`.
    pub value: T,
    pub tail_bound: T,
    pub n_max: usize,
}

/// `TV_n = ½ Σ_{|w|=n} |μ₁[w] − μ₂[w]|`.
pub fn level_total_variation<T: Real>(a: &MarkovMeasure<T>, b: &MarkovMeasure<T>, n: usize) -> Result<T> {
    let words = common_words(a, b, n)?;
    let s: T = words.iter().map(|w| (a.cylinder_measure(w) - b.cylinder_measure(w)).abs()).sum();
    Ok(s * T::lit(0.5))
}

fn common_words<T: Real>(a: &MarkovMeasure<T>, b: &MarkovMeasure<T>, n: usize) -> Result<Vec<Word>> {
    if a.base().alphabet_size() != b.base().alphabet_size() {
        return Err(Error::DomainMismatch);
    }
    if a.base() == b.base() {
        a.base().enumerate_words(n)
    } else {
        let cap = a.base().enum_cap().min(b.base().enum_cap());
        ShiftSpace::full(a.base().alphabet_size())?.with_enum_cap(cap).enumerate_words(n)
    }
}

/// `W₁` for the metric `d(x, y) = α^{first disagreement}`, via the
/// ultrametric level sum `Σ_{n≥1} (α^{n−1} − α^n) TV_n` truncated at
/// `n_max`.
pub fn wasserstein_distance<T: Real>(
    a: &MarkovMeasure<T>,
    b: &MarkovMeasure<T>,
    alpha: T,
    n_max: usize,
) -> Result<WassersteinEstimate<T>> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::InvalidArgument("α must lie in (0, 1)".into()));
    }
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let mut value = T::zero();
    let mut weight = T::one();
    for n in 1..=n_max {
        let next = weight * alpha;
        value += (weight - next) * level_total_variation(a, b, n)?;
        weight = next;
    }
    Ok(WassersteinEstimate { value, tail_bound: weight, n_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    fn gibbs(m: &models::Model<f64>) -> GibbsMeasure<f64> {
        GibbsMeasure::from_potential(&m.space, &m.potential).unwrap()
    }

    #[test]
    fn bernoulli_cylinders_and_jacobian() {
        let mu = gibbs(&models::bernoulli(0.7).unwrap());
        assert!((mu.cylinder_measure(&[0, 1, 0, 0]) - 0.1029).abs() < 1e-12);
        assert!((mu.jacobian(&[0, 1, 0]).unwrap() - 1.0 / 0.7).abs() < 1e-12);
        assert!((mu.jacobian(&[1, 0]).unwrap() - 1.0 / 0.3).abs() < 1e-12);
        assert!((mu.entropy() - 0.6108643).abs() < 1e-6);
        let e = mu.expectation(mu.source()).unwrap();
        assert!((e + 0.6108643).abs() < 1e-6);
    }

    #[test]
    fn ising_chain() {
        let m = models::ising(1.0, 0.0).unwrap();
        let mu = gibbs(&m);
        assert!((mu.stationary()[0] - 0.5).abs() < 1e-12);
        let same = 1f64.exp() / (2.0 * 1f64.cosh());
        assert!((mu.cylinder_measure(&[0, 0]) - 0.5 * same).abs() < 1e-12);
        let j = mu.jacobian(&[0, 0, 1]).unwrap();
        assert!((j - 2.0 * 1f64.cosh() / 1f64.exp()).abs() < 1e-12);
        assert!(mu.expectation(&m.observable).unwrap().abs() < 1e-12);
    }

    #[test]
    fn golden_mean_parry() {
        let mu = gibbs(&models::golden_mean(0.0).unwrap());
        assert_eq!(mu.cylinder_measure(&[1, 1]), 0.0);
        let g = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((mu.entropy() - g.ln()).abs() < 1e-12);
        assert!((mu.eigenmeasure()[0] - 1.0 / g).abs() < 1e-12);
        assert!((mu.stationary()[0] - g * g / (1.0 + g * g)).abs() < 1e-12);
        assert!((mu.transition()[(0, 0)] - 1.0 / g).abs() < 1e-12);
        assert!((mu.transition()[(1, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kolmogorov_consistency_and_shift_invariance() {
        for m in [
            models::bernoulli(0.7).unwrap(),
            models::ising(1.0, 0.3).unwrap(),
            models::golden_mean(0.4).unwrap(),
        ] {
            let mu = gibbs(&m);
            for n in 1..=8 {
                let words = m.space.enumerate_words(n).unwrap();
                let total: f64 = words.iter().map(|w| mu.cylinder_measure(w)).sum();
                assert!((total - 1.0).abs() < 1e-12);
                for w in &words {
                    let pre: f64 = (0..2)
                        .map(|a| {
                            let mut aw = vec![a];
                            aw.extend_from_slice(w);
                            mu.cylinder_measure(&aw)
                        })
                        .sum();
                    assert!((pre - mu.cylinder_measure(w)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn scans() {
        let b = gibbs(&models::bernoulli(0.7).unwrap());
        let r = gibbs_ratio_scan(&b, 8).unwrap();
        assert!((r.min_ratio - 1.0).abs() < 1e-12 && (r.max_ratio - 1.0).abs() < 1e-12);
        assert!(r.pass() && r.band_stable);
        let i = gibbs(&models::ising(1.0, 0.0).unwrap());
        let r = gibbs_ratio_scan(&i, 8).unwrap();
        let c = 1f64.cosh();
        assert!((r.min_ratio - c / 1f64.exp()).abs() < 1e-10);
        assert!((r.max_ratio - c * 1f64.exp()).abs() < 1e-10);
        assert!(r.pass() && r.band_stable);
        let g = gibbs(&models::golden_mean(0.0).unwrap());
        let r = gibbs_ratio_scan(&g, 8).unwrap();
        assert!(r.band_stable);
        assert!(!r.within_theoretical);
    }

    #[test]
    fn defects() {
        let m = models::bernoulli(0.7).unwrap();
        let mu = gibbs(&m);
        assert!(variational_defect(&mu, &m.potential, mu.pressure()).unwrap().abs() < 1e-12);
        let fair = MarkovMeasure::<f64>::uniform(&m.space).unwrap();
        let d = variational_defect(&fair, &m.potential, 0.0).unwrap();
        assert!((d - (-2f64.ln() - 0.5 * 0.21f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn lifting_preserves_cylinders() {
        let mu = gibbs(&models::ising(0.7, 0.2).unwrap());
        let lifted = mu.lift(3).unwrap();
        for w in mu.base().enumerate_words(5).unwrap() {
            assert!((lifted.cylinder_measure(&w) - mu.cylinder_measure(&w)).abs() < 1e-14);
        }
        assert!((lifted.entropy() - mu.entropy()).abs() < 1e-12);
    }

    #[test]
    fn from_kernel_rejects_forbidden_mass() {
        let s = ShiftSpace::golden_mean();
        let q = Matrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert!(MarkovMeasure::<f64>::from_kernel(s.recode(1).unwrap(), q).is_err());
    }

    #[test]
    fn wasserstein_basics() {
        let a = gibbs(&models::bernoulli(0.7).unwrap());
        let b = gibbs(&models::bernoulli(0.8).unwrap());
        let same = wasserstein_distance(&a, &a, 0.5, 6).unwrap();
        assert_eq!(same.value, 0.0);
        let w = wasserstein_distance(&a, &b, 0.5, 6).unwrap();
        let w_rev = wasserstein_distance(&b, &a, 0.5, 6).unwrap();
        assert_eq!(w.value, w_rev.value);
        assert!(w.value >= 0.5 * 0.1 - 1e-15);
        assert_eq!(w.tail_bound, 0.5f64.powi(6));
    }
}
