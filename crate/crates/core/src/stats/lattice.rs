use crate::error::{Error, Result};
use crate::gibbs::MarkovMeasure;
use crate::potential::FiniteMemoryFunction;
use crate::scalar::Real;

use super::lift_for;

/// Default bound on `states × lattice points` for the exact DP.
pub const DEFAULT_DP_CAP: u128 = 100_000_000;

const LATTICE_TOL: f64 = 1e-9;
const MAX_SPAN_RATIO: f64 = 1e6;

/// Exact law of `S_nψ` on the lattice `n·a + b·k`, `k = 0..probs.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDistribution<T> {
    pub n: usize,
    pub offset: T,
    pub span: T,
    pub probs: Vec<T>,
}

impl<T: Real> LatticeDistribution<T> {
    pub fn value(&self, k: usize) -> T {
        T::from_usize(self.n).unwrap() * self.offset + self.span * T::from_usize(k).unwrap()
    }

    /// `(k, value, probability)` for atoms of positive mass.
    pub fn atoms(&self) -> impl Iterator<Item = (usize, T, T)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > T::zero())
            .map(|(k, &p)| (k, self.value(k), p))
    }

    pub fn total(&self) -> T {
        self.probs.iter().copied().sum()
    }

    pub fn mean(&self) -> T {
        self.atoms().map(|(_, v, p)| v * p).sum()
    }

    pub fn variance(&self) -> T {
        let m = self.mean();
        self.atoms().map(|(_, v, p)| (v - m) * (v - m) * p).sum()
    }

    /// `P(a ≤ S_n/n ≤ b)`, boundary atoms included (to `1e-12` relative).
    pub fn interval_probability(&self, a: T, b: T) -> T {
        let nt = T::from_usize(self.n).unwrap();
        let slack = T::lit(1e-12) * T::one().max(a.abs().max(b.abs()));
        self.atoms()
            .filter(|&(_, v, _)| {
                let x = v / nt;
                x >= a - slack && x <= b + slack
            })
            .map(|(_, _, p)| p)
            .sum()
    }

    /// Lattice index of a value, if it lies on the lattice.
    pub fn index_of(&self, v: T) -> Option<usize> {
        let k = (v - T::from_usize(self.n).unwrap() * self.offset) / self.span;
        let r = k.round();
        ((k - r).abs() <= T::lit(1e-6) && r >= T::zero()).then(|| r.to_usize().unwrap())
    }

    /// Dump with a header recording `n`, `a`, `b`.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# n={} a={:.16e} b={:.16e}\nk,value,probability\n",
            self.n,
            self.offset.as_f64(),
            self.span.as_f64()
        );
        for (k, v, p) in self.atoms() {
            out.push_str(&format!("{k},{:.16e},{:.16e}\n", v.as_f64(), p.as_f64()));
        }
        out
    }
}

/// Offset, span and per-value indices of a finite set of reals lying on
/// `a + bℤ`. The span is a real gcd of the differences to the minimum, with
/// tolerance `1e-9` relative to their range.
pub(crate) fn lattice_of(values: &[f64]) -> Result<(f64, f64, Vec<usize>)> {
    let a = values.iter().copied().fold(f64::INFINITY, f64::min);
    let diffs: Vec<f64> = values.iter().map(|v| v - a).collect();
    let range = diffs.iter().copied().fold(0.0, f64::max);
    if range == 0.0 {
        return Ok((a, 1.0, vec![0; values.len()]));
    }
    let eps = LATTICE_TOL * range;
    let mut b = 0.0f64;
    for &d in diffs.iter().filter(|&&d| d > eps) {
        let (mut x, mut y) = (d.max(b), d.min(b));
        while y > eps {
            let r = x % y;
            x = y;
            y = if r > y - eps { 0.0 } else { r };
        }
        b = x;
    }
    if range / b > MAX_SPAN_RATIO {
        return Err(Error::NotLattice);
    }
    let idx: Vec<usize> = diffs.iter().map(|d| (d / b).round() as usize).collect();
    if diffs.iter().zip(&idx).any(|(d, &k)| (d - k as f64 * b).abs() > eps) {
        return Err(Error::NotLattice);
    }
    // Re-fit the span to the largest index to shed accumulated remainder error.
    let top = *idx.iter().max().unwrap();
    Ok((a, range / top as f64, idx))
}

pub fn exact_birkhoff_distribution<T: Real>(
    mu: &MarkovMeasure<T>,
    psi: &FiniteMemoryFunction<T>,
    n: usize,
) -> Result<LatticeDistribution<T>> {
    exact_birkhoff_distribution_capped(mu, psi, n, DEFAULT_DP_CAP)
}

/// Dynamic programming over (block state, lattice index) along the chain.
pub fn exact_birkhoff_distribution_capped<T: Real>(
    mu: &MarkovMeasure<T>,
    psi: &FiniteMemoryFunction<T>,
    n: usize,
    cap: u128,
) -> Result<LatticeDistribution<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("Birkhoff length must be at least 1".into()));
    }
    let (chain, vals) = lift_for(mu, &[psi])?;
    let raw: Vec<f64> = vals[0].iter().map(|v| v.as_f64()).collect();
    let (a, b, idx) = lattice_of(&raw)?;
    let kmax = *idx.iter().max().unwrap();
    let states = chain.state_count();
    let width = n * kmax + 1;
    let cells = states as u128 * width as u128;
    if cells > cap {
        return Err(Error::SizeGuard { requested: cells, cap });
    }
    let q = chain.transition();
    let mut cur = vec![vec![T::zero(); width]; states];
    for (s, &p) in chain.stationary().iter().enumerate() {
        cur[s][idx[s]] = p;
    }
    let mut next = vec![vec![T::zero(); width]; states];
    for step in 1..n {
        let reach = step * kmax + 1;
        next.iter_mut().for_each(|row| row[..reach + kmax].fill(T::zero()));
        for s in 0..states {
            for t in 0..states {
                let w = q[(s, t)];
                if w == T::zero() {
                    continue;
                }
                let shift = idx[t];
                let (src, dst) = (&cur[s][..reach], &mut next[t][shift..shift + reach]);
                for (d, &p) in dst.iter_mut().zip(src) {
                    *d += p * w;
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    let mut probs = vec![T::zero(); width];
    for row in &cur {
        for (acc, &p) in probs.iter_mut().zip(row) {
            *acc += p;
        }
    }
    Ok(LatticeDistribution { n, offset: T::lit(a), span: T::lit(b), probs })
}

/// `Φ(z)` via the complementary error function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CltDiagnostics<T> {
    pub n: usize,
    /// `sup_t |F_n(t) − Φ(t)|` for `(S_n − n·mean)/(ξ√n)`.
    pub ks: T,
    /// `√n · ks`.
    pub be_constant: T,
}

pub fn clt_diagnostics<T: Real>(d: &LatticeDistribution<T>, mean: T, xi2: T) -> Result<CltDiagnostics<T>> {
    if !(xi2 > T::zero()) {
        return Err(Error::DegenerateVariance);
    }
    let n = d.n as f64;
    let scale = (xi2.as_f64() * n).sqrt();
    let centre = n * mean.as_f64();
    let mut below = 0.0f64;
    let mut ks = 0.0f64;
    for (_, v, p) in d.atoms() {
        let phi = normal_cdf((v.as_f64() - centre) / scale);
        let above = below + p.as_f64();
        ks = ks.max((phi - below).abs()).max((phi - above).abs());
        below = above;
    }
    Ok(CltDiagnostics { n: d.n, ks: T::lit(ks), be_constant: T::lit(ks * n.sqrt()) })
}

/// `max_k |ξ√n P(S_n = v_k)/b − φ((v_k − n·mean)/(ξ√n))|` over the atoms,
/// with `φ` the standard normal density.
pub fn local_limit_check<T: Real>(d: &LatticeDistribution<T>, mean: T, xi2: T) -> Result<T> {
    if !(xi2 > T::zero()) {
        return Err(Error::DegenerateVariance);
    }
    let n = d.n as f64;
    let xi = xi2.as_f64().sqrt();
    let b = d.span.as_f64();
    let centre = n * mean.as_f64();
    let inv_root_2pi = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let err = d
        .atoms()
        .map(|(_, v, p)| {
            let z = (v.as_f64() - centre) / (xi * n.sqrt());
            (xi * n.sqrt() * p.as_f64() / b - inv_root_2pi * (-0.5 * z * z).exp()).abs()
        })
        .fold(0.0, f64::max);
    Ok(T::lit(err))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdpRow<T> {
    pub n: usize,
    pub probability: T,
    /// `−(1/n) log P(S_n/n ∈ [a, b])`; `None` when the event is null.
    pub empirical_rate: Option<T>,
    /// `inf_{t∈[a,b]} I(t)`.
    pub rate: T,
}

impl<T: Real> LdpRow<T> {
    pub fn gap(&self) -> Option<T> {
        self.empirical_rate.map(|e| (e - self.rate).abs())
    }
}

pub fn ldp_empirical<T: Real>(dists: &[LatticeDistribution<T>], a: T, b: T, rate: T) -> Vec<LdpRow<T>> {
    dists
        .iter()
        .map(|d| {
            let p = d.interval_probability(a, b);
            let empirical_rate = (p > T::zero()).then(|| -p.ln() / T::from_usize(d.n).unwrap());
            LdpRow { n: d.n, probability: p, empirical_rate, rate }
        })
        .collect()
}
