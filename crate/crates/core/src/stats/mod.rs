//! Correlations, asymptotic variance, cohomology to constants, cumulants and
//! rate functions, and exact laws of Birkhoff sums for lattice observables.

mod cumulant;
mod lattice;

pub use cumulant::{
    cumulant, interval_rate, pressure_derivative_check, rate_function, Cumulant, DerivativeCheck,
    RateFunctionPoint, DEFAULT_S_MAX,
};
pub use lattice::{
    clt_diagnostics, exact_birkhoff_distribution, exact_birkhoff_distribution_capped, ldp_empirical,
    local_limit_check, normal_cdf, CltDiagnostics, LatticeDistribution, LdpRow, DEFAULT_DP_CAP,
};

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::gibbs::MarkovMeasure;
use crate::linalg::Matrix;
use crate::potential::FiniteMemoryFunction;
use crate::scalar::Real;

/// The measure on blocks long enough for every function in `fs` to be a
/// function of the state, together with those state values.
pub(crate) fn lift_for<T: Real>(
    mu: &MarkovMeasure<T>,
    fs: &[&FiniteMemoryFunction<T>],
) -> Result<(MarkovMeasure<T>, Vec<Vec<T>>)> {
    let len = fs.iter().map(|f| f.memory()).fold(mu.block_len(), usize::max);
    let lifted = mu.lift(len)?;
    let values = fs.iter().map(|f| lifted.state_values(f)).collect::<Result<Vec<_>>>()?;
    Ok((lifted, values))
}

fn weighted_dot<T: Real>(p: &[T], a: &[T], b: &[T]) -> T {
    p.iter().zip(a).zip(b).map(|((&p, &a), &b)| p * a * b).sum()
}

/// `C_k(f, g) = E[f · g∘σᵏ] − E[f] E[g]` for `k = 0..=n_max`, by pushing
/// `g` backwards through the chain.
pub fn correlation_sequence<T: Real>(
    mu: &MarkovMeasure<T>,
    f: &FiniteMemoryFunction<T>,
    g: &FiniteMemoryFunction<T>,
    n_max: usize,
) -> Result<Vec<T>> {
    let (chain, vals) = lift_for(mu, &[f, g])?;
    let pi = chain.stationary();
    let ones = vec![T::one(); pi.len()];
    let ef = weighted_dot(pi, &vals[0], &ones);
    let eg = weighted_dot(pi, &vals[1], &ones);
    let mut v = vals[1].clone();
    let mut out = Vec::with_capacity(n_max + 1);
    for k in 0..=n_max {
        if k > 0 {
            v = chain.transition().mul_vec(&v);
        }
        out.push(weighted_dot(pi, &vals[0], &v) - ef * eg);
    }
    Ok(out)
}

pub fn correlation<T: Real>(
    mu: &MarkovMeasure<T>,
    f: &FiniteMemoryFunction<T>,
    g: &FiniteMemoryFunction<T>,
    n: usize,
) -> Result<T> {
    Ok(*correlation_sequence(mu, f, g, n)?.last().unwrap())
}

/// `Var(S_n) = Σ_{|k|<n} (n − |k|) C_k` from a correlation sequence
/// holding at least `n` terms.
pub fn finite_variance<T: Real>(corr: &[T], n: usize) -> T {
    let nt = T::from_usize(n).unwrap();
    let mut v = nt * corr[0];
    for (k, &c) in corr.iter().enumerate().take(n).skip(1) {
        v += T::lit(2.0) * (nt - T::from_usize(k).unwrap()) * c;
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceReport<T> {
    /// The reported value (resolvent method).
    pub value: T,
    pub green_kubo: T,
    pub resolvent: T,
    /// Correlation terms summed by Green–Kubo.
    pub terms: usize,
}

const GREEN_KUBO_MAX_TERMS: usize = 1_000_000;

/// `ξ² = lim Var(S_nψ)/n`, by the resolvent and by the Green–Kubo series,
/// which must agree to `1e-9` (relative above one).
pub fn asymptotic_variance<T: Real>(mu: &MarkovMeasure<T>, psi: &FiniteMemoryFunction<T>) -> Result<VarianceReport<T>> {
    let (chain, vals) = lift_for(mu, &[psi])?;
    let pi = chain.stationary();
    let q = chain.transition();
    let mean: T = pi.iter().zip(&vals[0]).map(|(&p, &v)| p * v).sum();
    let centred: Vec<T> = vals[0].iter().map(|&v| v - mean).collect();
    let var0 = weighted_dot(pi, &centred, &centred);
    if var0 <= T::zero() {
        let zero = T::zero();
        return Ok(VarianceReport { value: zero, green_kubo: zero, resolvent: zero, terms: 0 });
    }

    let cutoff = T::lit(1e-15).max(T::epsilon()) * var0;
    let mut gk = var0;
    let mut v = centred.clone();
    let mut small = 0;
    let mut terms = 0;
    while small < 2 {
        if terms == GREEN_KUBO_MAX_TERMS {
            return Err(Error::NoConvergence { what: "Green-Kubo series", iterations: terms });
        }
        v = q.mul_vec(&v);
        let c = weighted_dot(pi, &centred, &v);
        gk += T::lit(2.0) * c;
        terms += 1;
        small = if c.abs() < cutoff { small + 1 } else { 0 };
    }

    let resolvent = resolvent_variance_on(pi, q, &centred)?;
    let tol = T::lit(1e-9).max(T::lit(1e4) * T::epsilon()) * T::one().max(resolvent.abs());
    if (gk - resolvent).abs() > tol {
        return Err(Error::VarianceMismatch { green_kubo: gk.as_f64(), resolvent: resolvent.as_f64() });
    }
    Ok(VarianceReport { value: resolvent.max(T::zero()), green_kubo: gk, resolvent, terms })
}

/// Resolvent variance alone; used inside iterative solvers.
pub(crate) fn resolvent_variance<T: Real>(mu: &MarkovMeasure<T>, psi: &FiniteMemoryFunction<T>) -> Result<T> {
    let (chain, vals) = lift_for(mu, &[psi])?;
    let pi = chain.stationary();
    let mean: T = pi.iter().zip(&vals[0]).map(|(&p, &v)| p * v).sum();
    let centred: Vec<T> = vals[0].iter().map(|&v| v - mean).collect();
    Ok(resolvent_variance_on(pi, chain.transition(), &centred)?.max(T::zero()))
}

/// Solves `(I − Q + 1πᵀ) u = Qψ̂`, whose solution has `πu = 0`, and returns
/// `E[ψ̂²] + 2 E[ψ̂ u]`.
fn resolvent_variance_on<T: Real>(pi: &[T], q: &Matrix<T>, centred: &[T]) -> Result<T> {
    let n = pi.len();
    let a = Matrix::from_fn(n, n, |i, j| {
        let delta = if i == j { T::one() } else { T::zero() };
        delta - q[(i, j)] + pi[j]
    });
    let rhs = q.mul_vec(centred);
    let u = a
        .solve(&rhs, T::epsilon() * T::lit(16.0))
        .ok_or(Error::SolveFailure("resolvent system is singular (spectral gap closing)"))?;
    Ok(weighted_dot(pi, centred, centred) + T::lit(2.0) * weighted_dot(pi, centred, &u))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohomologyReport<T> {
    pub degenerate: bool,
    /// `u` on the block states of `block_len` symbols with
    /// `ψ − E[ψ] = u − u∘σ`, when degenerate.
    pub transfer_function: Option<Vec<T>>,
    pub block_len: usize,
    pub mean: T,
    /// Largest coboundary defect over the edges of the block graph.
    pub max_defect: T,
}

/// Decides whether `ψ` is cohomologous to a constant: assigns a potential
/// along a breadth-first spanning tree of the block graph and checks every
/// remaining edge.
pub fn cohomology_check<T: Real>(
    mu: &MarkovMeasure<T>,
    psi: &FiniteMemoryFunction<T>,
    tol: T,
) -> Result<CohomologyReport<T>> {
    let mean = mu.expectation(psi)?;
    let len = psi.memory().max(2) - 1;
    let blocks = mu.base().recode(len)?;
    let graph = blocks.space();
    let n = blocks.state_count();
    let edge_value = |a: usize, b: usize| {
        let mut w = blocks.blocks()[a].to_vec();
        w.push(*blocks.blocks()[b].last().unwrap());
        psi.value(&w) - mean
    };
    let mut u: Vec<Option<T>> = vec![None; n];
    u[0] = Some(T::zero());
    let mut queue = VecDeque::from([0]);
    while let Some(a) = queue.pop_front() {
        let ua = u[a].unwrap();
        for b in graph.successors(a) {
            if u[b].is_none() {
                u[b] = Some(ua - edge_value(a, b));
                queue.push_back(b);
            }
        }
    }
    let u: Vec<T> = u.into_iter().map(|x| x.expect("block graph is irreducible")).collect();
    let mut max_defect = T::zero();
    for a in 0..n {
        for b in graph.successors(a) {
            max_defect = max_defect.max((u[a] - u[b] - edge_value(a, b)).abs());
        }
    }
    let degenerate = max_defect <= tol;
    Ok(CohomologyReport {
        degenerate,
        transfer_function: degenerate.then_some(u),
        block_len: len,
        mean,
        max_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::GibbsMeasure;
    use crate::models;

    fn gibbs(m: &models::Model<f64>) -> GibbsMeasure<f64> {
        GibbsMeasure::from_potential(&m.space, &m.potential).unwrap()
    }

    #[test]
    fn ising_correlations_are_powers_of_tanh() {
        let m = models::ising(1.0, 0.0).unwrap();
        let mu = gibbs(&m);
        let c = correlation_sequence(&mu, &m.observable, &m.observable, 30).unwrap();
        for (n, &v) in c.iter().enumerate() {
            assert!((v - 1f64.tanh().powi(n as i32)).abs() < 1e-10);
        }
    }

    #[test]
    fn bernoulli_coordinates_independent() {
        let m = models::bernoulli(0.7).unwrap();
        let mu = gibbs(&m);
        let ind = FiniteMemoryFunction::indicator(&m.space, 0);
        let c = correlation_sequence(&mu, &ind, &ind, 5).unwrap();
        assert!((c[0] - 0.21).abs() < 1e-12);
        assert!(c[1..].iter().all(|x| x.abs() < 1e-12));
        let k = FiniteMemoryFunction::constant(&m.space, 3.0);
        assert!(correlation(&mu, &k, &ind, 4).unwrap().abs() < 1e-14);
    }

    #[test]
    fn variances() {
        let b = models::bernoulli(0.7).unwrap();
        let r = asymptotic_variance(&gibbs(&b), &b.observable).unwrap();
        assert!((r.value - 0.21).abs() < 1e-12);
        let i = models::ising(1.0, 0.0).unwrap();
        let r = asymptotic_variance(&gibbs(&i), &i.observable).unwrap();
        assert!((r.value - 2f64.exp()).abs() < 1e-9);
        assert!((r.green_kubo - r.resolvent).abs() < 1e-9);
        let k = FiniteMemoryFunction::constant(&i.space, 2.0);
        assert_eq!(asymptotic_variance(&gibbs(&i), &k).unwrap().value, 0.0);
    }

    #[test]
    fn variance_matches_finite_n_growth() {
        let g = models::golden_mean(0.3).unwrap();
        let mu = gibbs(&g);
        let c = correlation_sequence(&mu, &g.observable, &g.observable, 4000).unwrap();
        let xi2 = asymptotic_variance(&mu, &g.observable).unwrap().value;
        let n = 4000;
        assert!((finite_variance(&c, n) / n as f64 - xi2).abs() < 1e-3);
    }

    #[test]
    fn coboundaries_are_detected() {
        let s = crate::shift::ShiftSpace::full(2).unwrap();
        let mu = gibbs(&models::bernoulli(0.7).unwrap());
        // v − v∘σ + 3 with v = 1_[1]
        let psi = FiniteMemoryFunction::from_fn(&s, 2, |w| {
            f64::from(u8::from(w[0] == 0)) - f64::from(u8::from(w[1] == 0)) + 3.0
        })
        .unwrap();
        let r = cohomology_check(&mu, &psi, 1e-12).unwrap();
        assert!(r.degenerate);
        assert!((r.mean - 3.0).abs() < 1e-12);
        let u = r.transfer_function.unwrap();
        assert!(((u[0] - u[1]) - 1.0).abs() < 1e-12);
        assert!(asymptotic_variance(&mu, &psi).unwrap().value < 1e-12);

        let k = FiniteMemoryFunction::constant(&s, 5.0);
        let r = cohomology_check(&mu, &k, 1e-12).unwrap();
        assert!(r.degenerate && r.transfer_function.unwrap().iter().all(|&x| x == 0.0));

        let i = models::ising(1.0, 0.0).unwrap();
        assert!(!cohomology_check(&gibbs(&i), &i.observable, 1e-12).unwrap().degenerate);
    }
}
