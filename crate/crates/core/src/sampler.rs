//! Seeded simulation of stationary Markov measures.
//!
//! Generator contract: ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded with
//! `seed_from_u64(seed)`, stream `i` for trial `i`; uniforms are
//! `(next_u64 >> 11) · 2⁻⁵³`; categorical draws are by inverse CDF over
//! states in lexicographic order. Output is bit-identical across platforms
//! and thread counts.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gibbs::MarkovMeasure;
use crate::potential::FiniteMemoryFunction;
use crate::scalar::Real;
use crate::shift::{Symbol, Word};
use crate::stats::{lift_for, LatticeDistribution};

pub const GENERATOR: &str = "ChaCha20 (rand_chacha 0.9), seed_from_u64(seed), set_stream(trial)";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleConfig {
    pub seed: u64,
    pub n: usize,
    pub trials: usize,
}

fn generator(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn uniform(rng: &mut ChaCha20Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Cumulative distributions of the initial law and every kernel row.
struct Tables {
    initial: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

fn cumulative<T: Real>(p: &[T]) -> Vec<f64> {
    let mut acc = 0.0;
    p.iter()
        .map(|x| {
            acc += x.as_f64();
            acc
        })
        .collect()
}

/// Smallest index whose cumulative mass exceeds `u`, skipping null
/// states; the last charged state absorbs rounding at the top.
fn draw(cdf: &[f64], u: f64) -> usize {
    let mut prev = 0.0;
    let mut last = 0;
    for (i, &c) in cdf.iter().enumerate() {
        if c > prev {
            if u < c {
                return i;
            }
            last = i;
        }
        prev = c;
    }
    last
}

impl Tables {
    fn new<T: Real>(mu: &MarkovMeasure<T>) -> Self {
        let q = mu.transition();
        Self {
            initial: cumulative(mu.stationary()),
            rows: (0..mu.state_count()).map(|u| cumulative(q.row(u))).collect(),
        }
    }

    fn states(&self, rng: &mut ChaCha20Rng, n: usize, mut visit: impl FnMut(usize)) {
        let mut s = draw(&self.initial, uniform(rng));
        visit(s);
        for _ in 1..n {
            s = draw(&self.rows[s], uniform(rng));
            visit(s);
        }
    }
}

/// A path of `n` symbols: the first block from `π`, then one symbol per
/// kernel step. Uses stream 0.
pub fn sample_path<T: Real>(mu: &MarkovMeasure<T>, n: usize, seed: u64) -> Result<Word> {
    if n == 0 {
        return Err(Error::InvalidArgument("path length must be at least 1".into()));
    }
    let l = mu.block_len();
    let steps = n.saturating_sub(l) + 1;
    let blocks = mu.blocks().blocks();
    let mut out: Vec<Symbol> = Vec::with_capacity(n.max(l));
    let mut rng = generator(seed, 0);
    Tables::new(mu).states(&mut rng, steps, |s| {
        if out.is_empty() {
            out.extend_from_slice(&blocks[s]);
        } else {
            out.push(*blocks[s].last().unwrap());
        }
    });
    out.truncate(n);
    Ok(Word::new(out))
}

/// Independent paths for trials `0..trials`, one per stream.
pub fn sample_paths<T: Real>(mu: &MarkovMeasure<T>, cfg: &SampleConfig) -> Result<Vec<Word>> {
    if cfg.n == 0 || cfg.trials == 0 {
        return Err(Error::InvalidArgument("n and trials must be at least 1".into()));
    }
    let l = mu.block_len();
    let blocks = mu.blocks().blocks();
    let tables = Tables::new(mu);
    let steps = cfg.n.saturating_sub(l) + 1;
    Ok((0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut out: Vec<Symbol> = Vec::with_capacity(cfg.n.max(l));
            let mut rng = generator(cfg.seed, trial as u64);
            tables.states(&mut rng, steps, |s| {
                if out.is_empty() {
                    out.extend_from_slice(&blocks[s]);
                } else {
                    out.push(*blocks[s].last().unwrap());
                }
            });
            out.truncate(cfg.n);
            Word::new(out)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalBirkhoff<T> {
    pub samples: Vec<T>,
    pub mean: T,
    /// Unbiased sample variance of `S_n`, divided by `n`.
    pub var_over_n: T,
    /// Kolmogorov distance to the exact law, when one was supplied.
    pub ks: Option<T>,
}

/// `trials` independent draws of `S_nψ` under `μ`, trial `i` on stream `i`.
pub fn empirical_birkhoff<T: Real>(
    mu: &MarkovMeasure<T>,
    psi: &FiniteMemoryFunction<T>,
    cfg: &SampleConfig,
    exact: Option<&LatticeDistribution<T>>,
) -> Result<EmpiricalBirkhoff<T>> {
    if cfg.n == 0 || cfg.trials == 0 {
        return Err(Error::InvalidArgument("n and trials must be at least 1".into()));
    }
    let (chain, vals) = lift_for(mu, &[psi])?;
    let values = &vals[0];
    let tables = Tables::new(&chain);
    let samples: Vec<T> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = generator(cfg.seed, trial as u64);
            let mut s = T::zero();
            tables.states(&mut rng, cfg.n, |st| s += values[st]);
            s
        })
        .collect();
    let count = T::from_usize(cfg.trials).unwrap();
    let mean = samples.iter().copied().sum::<T>() / count;
    let ss: T = samples.iter().map(|&x| (x - mean) * (x - mean)).sum();
    let var = if cfg.trials > 1 { ss / (count - T::one()) } else { T::zero() };
    let ks = match exact {
        Some(d) => Some(ks_to_lattice(&samples, d)?),
        None => None,
    };
    Ok(EmpiricalBirkhoff { mean, var_over_n: var / T::from_usize(cfg.n).unwrap(), ks, samples })
}

/// `sup |F_emp − F_exact|`; both are step functions on the same lattice so
/// comparing right limits at every lattice point is exact.
pub fn ks_to_lattice<T: Real>(samples: &[T], d: &LatticeDistribution<T>) -> Result<T> {
    let mut counts = vec![0usize; d.probs.len()];
    for &x in samples {
        let k = d
            .index_of(x)
            .filter(|&k| k < counts.len())
            .ok_or_else(|| Error::InvalidArgument(format!("sample {x} is off the lattice")))?;
        counts[k] += 1;
    }
    let total = samples.len() as f64;
    let (mut fe, mut fx, mut ks) = (0.0f64, 0.0f64, 0.0f64);
    for (c, p) in counts.iter().zip(&d.probs) {
        fe += *c as f64 / total;
        fx += p.as_f64();
        ks = ks.max((fe - fx).abs());
    }
    Ok(T::lit(ks))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
}

/// Pearson statistic of overlapping 2-cylinder counts along `path` against
/// `μ([ab])`. A forbidden pair makes the statistic infinite.
pub fn two_cylinder_chi_square<T: Real>(mu: &MarkovMeasure<T>, path: &[Symbol]) -> Result<ChiSquare> {
    if path.len() < 2 {
        return Err(Error::TooShort { have: path.len(), need: 2 });
    }
    let words = mu.base().enumerate_words(2)?;
    let n = mu.base().alphabet_size();
    let mut counts = vec![0usize; n * n];
    for p in path.windows(2) {
        counts[p[0] * n + p[1]] += 1;
    }
    let pairs = (path.len() - 1) as f64;
    let mut stat = 0.0;
    let mut seen = 0;
    for w in &words {
        let expected = pairs * mu.cylinder_measure(w).as_f64();
        let observed = counts[w[0] * n + w[1]] as f64;
        seen += counts[w[0] * n + w[1]];
        stat += (observed - expected).powi(2) / expected;
    }
    if seen != path.len() - 1 {
        stat = f64::INFINITY;
    }
    Ok(ChiSquare { statistic: stat, dof: words.len() - 1 })
}

/// One trajectory per line, 1-based symbols, comma separated.
pub fn paths_to_text(paths: &[Word]) -> String {
    let mut out = String::new();
    for p in paths {
        out.push_str(&p.to_string());
        out.push('\n');
    }
    out
}
