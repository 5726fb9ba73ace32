//! The transfer operator of a finite-memory potential as an exact finite
//! matrix, its dominant eigendata, spectral gap, the normalised operator,
//! and the partition-function route to the pressure.
//!
//! Orientation: `matrix()[(u, w)] = exp φ(u_0 w)` is the weight of the
//! preimage block `u` of the block `w`. The operator acting on functions of
//! blocks is its transpose, `(𝓛g)(w) = Σ_u matrix[(u, w)] g(u)`, so the
//! eigenfunction satisfies `matrixᵀ h = λ h` and the eigenmeasure
//! `matrix ν = λ ν`.

use crate::cone::{self, ConeConstants};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::potential::FiniteMemoryFunction;
use crate::scalar::{log_sum_exp, max_abs, sum, Real};
use crate::shift::{HigherBlock, ShiftSpace};

/// Systems with at most this many block states get a full eigen-solve as
/// a cross-check of the deflated power iteration.
pub const FULL_SOLVE_MAX_STATES: usize = 64;
/// Iterations without a 1% residual improvement before giving up.
const STAGNATION_WINDOW: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions<T> {
    pub tol: T,
    pub max_iter: usize,
    pub gap_max_iter: usize,
}

impl<T: Real> Default for EigenOptions<T> {
    fn default() -> Self {
        Self { tol: T::default_tolerance(), max_iter: 1_000_000, gap_max_iter: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferSystem<T> {
    blocks: HigherBlock,
    matrix: Matrix<T>,
    potential: FiniteMemoryFunction<T>,
}

/// Dominant eigendata of a transfer system.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenData<T> {
    pub lambda: T,
    /// `log λ`, in nats.
    pub pressure: T,
    /// Eigenfunction, normalised so that `Σ ν_i h_i = 1`.
    pub h: Vec<T>,
    /// Eigenmeasure on block cylinders, `Σ ν_i = 1`.
    pub nu: Vec<T>,
    pub min_h: T,
    pub gap_ratio: T,
    pub ess_radius_bound: T,
    pub residual_h: T,
    pub residual_nu: T,
    pub iterations: usize,
}

/// Second-eigenvalue modulus over λ from both solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapEstimate<T> {
    pub ratio: T,
    pub deflated: Option<T>,
    pub full: Option<T>,
}

impl<T: Real> GapEstimate<T> {
    /// |deflated − full| when both ran.
    pub fn discrepancy(&self) -> Option<T> {
        Some((self.deflated? - self.full?).abs())
    }
}

/// The normalised operator and the Markov chain it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedOperator<T> {
    /// `λ⁻¹ h⁻¹ 𝓛(h ·)` as a stochastic matrix from a block to its preimages.
    pub backward: Matrix<T>,
    /// Forward kernel of the Gibbs chain, `Q(u→w) = matrix(u,w) ν(w) / (λ ν(u))`.
    pub forward: Matrix<T>,
    /// `π(u) = h(u) ν(u)`.
    pub stationary: Vec<T>,
}

impl<T: Real> TransferSystem<T> {
    /// Recodes onto blocks of length `max(m-1, 1)` and tabulates the weights.
    pub fn build(space: &ShiftSpace, potential: &FiniteMemoryFunction<T>) -> Result<Self> {
        if potential.space() != space {
            return Err(Error::DomainMismatch);
        }
        let m = potential.memory();
        let blocks = space.recode((m.max(2)) - 1)?;
        let n = blocks.state_count();
        let mut matrix = Matrix::zeros(n, n);
        let mut word = Vec::with_capacity(m);
        for u in 0..n {
            for w in blocks.space().successors(u) {
                word.clear();
                word.push(blocks.blocks()[u][0]);
                word.extend_from_slice(&blocks.blocks()[w][..m - 1]);
                matrix[(u, w)] = potential.value(&word).exp();
            }
        }
        Ok(Self { blocks, matrix, potential: potential.clone() })
    }

    pub fn blocks(&self) -> &HigherBlock {
        &self.blocks
    }

    pub fn block_len(&self) -> usize {
        self.blocks.block_len()
    }

    pub fn state_count(&self) -> usize {
        self.blocks.state_count()
    }

    /// Preimage-weight matrix, rows indexed by the preimage block.
    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    /// The operator acting on column vectors of block functions.
    pub fn operator_matrix(&self) -> Matrix<T> {
        self.matrix.transpose()
    }

    pub fn potential(&self) -> &FiniteMemoryFunction<T> {
        &self.potential
    }

    pub fn space(&self) -> &ShiftSpace {
        self.blocks.base()
    }

    /// `𝓛 g` for a function `g` of block states.
    pub fn apply(&self, g: &[T]) -> Vec<T> {
        self.matrix.tmul_vec(g)
    }

    pub fn eigendata(&self) -> Result<EigenData<T>> {
        self.dominant_eigendata(&EigenOptions::default())
    }

    /// Power iteration on the matrix and its transpose from the all-ones
    /// vector. Stops once both residuals fall below `tol · λ`.
    pub fn dominant_eigendata(&self, opts: &EigenOptions<T>) -> Result<EigenData<T>> {
        if !(opts.tol > T::zero()) {
            return Err(Error::InvalidArgument("eigen tolerance must be positive".into()));
        }
        let n = self.state_count();
        let uniform = T::one() / T::from_usize(n).unwrap();
        let mut nu = vec![uniform; n];
        let mut h = vec![uniform; n];
        // Once within tolerance, keep iterating while the residual still
        // improves (at most as many extra steps as it took to converge) and
        // keep the best iterate: downstream kernels inherit this accuracy.
        let mut best: Option<(T, EigenData<T>)> = None;
        let mut polish_until = opts.max_iter;
        // residual floor above tolerance (round-off at tiny λ): stop early
        let (mut floor, mut floor_at) = (T::infinity(), 0usize);
        let mut last = opts.max_iter;
        for it in 1..=opts.max_iter {
            let m_nu = self.matrix.mul_vec(&nu);
            let mt_h = self.matrix.tmul_vec(&h);
            let h_nu = dot(&h, &nu);
            // second order in the eigenvector errors
            let lambda = dot(&h, &m_nu) / h_nu;
            let res_nu: T = m_nu.iter().zip(&nu).map(|(&a, &b)| (a - lambda * b).abs()).sum();
            let res_h = max_abs(&sub_scaled(&mt_h, &h, lambda)) / h_nu;
            let res = res_nu.max(res_h);
            if res <= opts.tol * lambda {
                if best.is_none() {
                    polish_until = opts.max_iter.min(2 * it);
                }
                if best.as_ref().map_or(true, |(r, _)| res < *r) {
                    let h: Vec<T> = h.iter().map(|&x| x / h_nu).collect();
                    let min_h = h.iter().copied().fold(T::infinity(), T::min);
                    let data = EigenData {
                        lambda,
                        pressure: lambda.ln(),
                        h,
                        nu: nu.clone(),
                        min_h,
                        gap_ratio: T::zero(),
                        ess_radius_bound: self.potential.alpha() * lambda,
                        residual_h: res_h,
                        residual_nu: res_nu,
                        iterations: it,
                    };
                    best = Some((res, data));
                } else {
                    break;
                }
            }
            if it >= polish_until {
                break;
            }
            if res < floor * T::lit(0.99) {
                (floor, floor_at) = (res, it);
            } else if best.is_none() && it - floor_at > STAGNATION_WINDOW {
                last = it;
                break;
            }
            // Iterate with M + (λ/4)I: same eigenvectors, but a nearly
            // periodic chain (second eigenvalue near −λ) still contracts.
            let shift = lambda / T::lit(4.0);
            let m_nu: Vec<T> = m_nu.iter().zip(&nu).map(|(&a, &b)| a + shift * b).collect();
            let mt_h: Vec<T> = mt_h.iter().zip(&h).map(|(&a, &b)| a + shift * b).collect();
            let s_nu = sum(&m_nu);
            let s_h = sum(&mt_h);
            nu = m_nu.into_iter().map(|x| x / s_nu).collect();
            h = mt_h.into_iter().map(|x| x / s_h).collect();
        }
        match best {
            Some((_, mut data)) => {
                data.gap_ratio = self.spectral_gap(&data, opts)?.ratio;
                Ok(data)
            }
            None => Err(Error::NoConvergence { what: "dominant eigendata", iterations: last }),
        }
    }

    /// `|λ₂| / λ`. Deflated power iteration on `matrix − λ ν hᵀ`, with a
    /// full eigen-solve for small systems or when the deflation oscillates.
    pub fn spectral_gap(&self, eig: &EigenData<T>, opts: &EigenOptions<T>) -> Result<GapEstimate<T>> {
        let n = self.state_count();
        let deflated = deflated_ratio(&self.matrix, eig, opts.tol, opts.gap_max_iter);
        let full = if n <= FULL_SOLVE_MAX_STATES || deflated.is_none() {
            let moduli = self.matrix.eigenvalue_moduli();
            let second = moduli.get(1).copied().unwrap_or(0.0);
            Some(T::lit(second) / eig.lambda)
        } else {
            None
        };
        let ratio = full.or(deflated).expect("at least one solver ran");
        Ok(GapEstimate { ratio, deflated, full })
    }

    pub fn normalized_operator(&self, eig: &EigenData<T>) -> NormalizedOperator<T> {
        let n = self.state_count();
        let lam = eig.lambda;
        let backward =
            Matrix::from_fn(n, n, |w, u| self.matrix[(u, w)] * eig.h[u] / (lam * eig.h[w]));
        let forward =
            Matrix::from_fn(n, n, |u, w| self.matrix[(u, w)] * eig.nu[w] / (lam * eig.nu[u]));
        let stationary = eig.h.iter().zip(&eig.nu).map(|(&a, &b)| a * b).collect();
        NormalizedOperator { backward, forward, stationary }
    }

    /// Reports the explicit constants computable from `(α, φ, N, M, λ)`.
    pub fn constants_report(&self, eig: &EigenData<T>) -> Result<ConstantsReport<T>> {
        let phi = &self.potential;
        let alpha = phi.alpha();
        let two = T::lit(2.0);
        let memory = phi.memory();
        let b_m = (0..=memory)
            .map(|m| (two * (m + 1..memory).map(|k| phi.var_n(k)).sum::<T>()).exp())
            .collect();
        let holder = phi.holder_seminorm(alpha)?;
        let b0_geometric = (two * holder * alpha / (T::one() - alpha)).exp();
        let mix = T::from_usize(self.space().mixing_time()).unwrap();
        let k_constant = eig.lambda.powf(mix) * (mix * phi.sup_norm()).exp() * b0_geometric;
        let v = phi.total_variation();
        let f_norm = phi.summable_variation_norm();
        Ok(ConstantsReport {
            alpha,
            b_m,
            holder_seminorm: holder,
            b0_geometric,
            k_constant,
            ess_radius_bound: alpha * eig.lambda,
            gibbs_band_variation: ((-two * v).exp(), (two * v).exp()),
            gibbs_band_norm: ((-two * f_norm).exp(), (two * f_norm).exp()),
            cone: cone::cone_constants(self.space(), phi),
            eta: None,
            gap_rate_bound: None,
            convergence_constant: None,
        })
    }
}

/// Explicit-constant report. The entries depending on the cone
/// contraction coefficient `η` are `None`: that coefficient is defined
/// through quantities not determined by the model data.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsReport<T> {
    pub alpha: T,
    /// `B_m = exp(Σ_{k>m} 2 var_k φ)` for `m = 0..=memory`.
    pub b_m: Vec<T>,
    pub holder_seminorm: T,
    /// `B_0 = exp(2bα/(1-α))` with `b = |φ|_α`.
    pub b0_geometric: T,
    /// `K = λ^M e^{M‖φ‖_∞} B_0`.
    pub k_constant: T,
    pub ess_radius_bound: T,
    /// `(e^{-2V}, e^{2V})`.
    pub gibbs_band_variation: (T, T),
    /// `(e^{-2‖φ‖_F}, e^{2‖φ‖_F})` with `‖φ‖_F = ‖φ‖_∞ + V`.
    pub gibbs_band_norm: (T, T),
    pub cone: ConeConstants<T>,
    pub eta: Option<T>,
    pub gap_rate_bound: Option<T>,
    pub convergence_constant: Option<T>,
}

/// `(1/n) log Z_n` with `Z_n = Σ_{|w|=n} exp sup_{x∈[w]} S_nφ(x)`.
pub fn pressure_via_partition<T: Real>(
    space: &ShiftSpace,
    potential: &FiniteMemoryFunction<T>,
    n: usize,
) -> Result<T> {
    let words = space.enumerate_words(n)?;
    let tops: Vec<T> = words.iter().map(|w| potential.birkhoff_range_on_cylinder(w).1).collect();
    Ok(log_sum_exp(&tops) / T::from_usize(n).unwrap())
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn sub_scaled<T: Real>(a: &[T], b: &[T], s: T) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - s * y).collect()
}

fn norm2<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// Power iteration restricted to `{v : hᵀv = 0}`, where the matrix acts as
/// its deflation `M − λ ν hᵀ`. Uses the two-step growth rate so that a
/// real pair `±λ₂` still converges; a genuinely complex pair does not, and
/// yields `None`.
fn deflated_ratio<T: Real>(m: &Matrix<T>, eig: &EigenData<T>, tol: T, max_iter: usize) -> Option<T> {
    let n = m.rows();
    let golden = T::lit(0.618_033_988_749_895);
    let project = |v: &mut Vec<T>| {
        let c = dot(&eig.h, v);
        for (x, &p) in v.iter_mut().zip(&eig.nu) {
            *x -= c * p;
        }
    };
    let mut v: Vec<T> = (0..n)
        .map(|i| (T::from_usize(i + 1).unwrap() * golden).fract() - T::lit(0.5))
        .collect();
    project(&mut v);
    let nv = norm2(&v);
    if nv == T::zero() {
        return Some(T::zero());
    }
    v.iter_mut().for_each(|x| *x /= nv);
    let floor = T::epsilon() * T::lit(16.0) * eig.lambda;
    let mut prev_growth: Option<T> = None;
    let mut prev_est: Option<T> = None;
    let mut stable = 0;
    for _ in 0..max_iter {
        let mut w = m.mul_vec(&v);
        project(&mut w);
        let g = norm2(&w);
        if g <= floor {
            return Some(T::zero());
        }
        if let Some(pg) = prev_growth {
            let est = (pg * g).sqrt() / eig.lambda;
            if let Some(pe) = prev_est {
                if (est - pe).abs() <= tol {
                    stable += 1;
                    if stable >= 3 {
                        return Some(est);
                    }
                } else {
                    stable = 0;
                }
            }
            prev_est = Some(est);
        }
        prev_growth = Some(g);
        v = w.into_iter().map(|x| x / g).collect();
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    fn eig_of(m: &models::Model<f64>) -> (TransferSystem<f64>, EigenData<f64>) {
        let t = TransferSystem::build(&m.space, &m.potential).unwrap();
        let e = t.eigendata().unwrap();
        (t, e)
    }

    #[test]
    fn bernoulli_matrix_and_eigendata() {
        let m = models::bernoulli::<f64>(0.7).unwrap();
        let (t, e) = eig_of(&m);
        let mat = t.matrix();
        assert!((mat[(0, 0)] - 0.7).abs() < 1e-15 && (mat[(0, 1)] - 0.7).abs() < 1e-15);
        assert!((mat[(1, 0)] - 0.3).abs() < 1e-15 && (mat[(1, 1)] - 0.3).abs() < 1e-15);
        assert!((e.lambda - 1.0).abs() < 1e-12);
        assert!(e.pressure.abs() < 1e-12);
        assert!((e.h[0] - 1.0).abs() < 1e-12 && (e.h[1] - 1.0).abs() < 1e-12);
        assert!((e.nu[0] - 0.7).abs() < 1e-12 && (e.nu[1] - 0.3).abs() < 1e-12);
        assert!(e.gap_ratio.abs() < 1e-12);
    }

    #[test]
    fn ising_matrix_and_eigendata() {
        let m = models::ising::<f64>(1.0, 0.0).unwrap();
        let (t, e) = eig_of(&m);
        let ee = 1f64.exp();
        assert!((t.matrix()[(0, 0)] - ee).abs() < 1e-14);
        assert!((t.matrix()[(0, 1)] - 1.0 / ee).abs() < 1e-14);
        assert!((e.lambda - 2.0 * 1f64.cosh()).abs() < 1e-12);
        assert!((e.nu[0] - 0.5).abs() < 1e-12);
        assert!((e.h[0] - e.h[1]).abs() < 1e-12);
        let gap = t.spectral_gap(&e, &EigenOptions::default()).unwrap();
        assert!((gap.ratio - 1f64.tanh()).abs() < 1e-12);
        assert!(gap.discrepancy().unwrap() < 1e-8);
    }

    #[test]
    fn golden_mean_pressure() {
        let m = models::golden_mean::<f64>(0.0).unwrap();
        let (t, e) = eig_of(&m);
        assert_eq!(t.matrix().to_rows(), vec![vec![1.0, 1.0], vec![1.0, 0.0]]);
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((e.lambda - golden).abs() < 1e-12);
        assert!((e.pressure - golden.ln()).abs() < 1e-12);
    }

    #[test]
    fn residuals_and_normalisation() {
        for m in [
            models::bernoulli::<f64>(0.7).unwrap(),
            models::ising::<f64>(1.0, 0.0).unwrap(),
            models::golden_mean::<f64>(0.0).unwrap(),
        ] {
            let (t, e) = eig_of(&m);
            let lh = t.apply(&e.h);
            let r_h = max_abs(&sub_scaled(&lh, &e.h, e.lambda));
            let mn = t.matrix().mul_vec(&e.nu);
            let r_nu: f64 = sub_scaled(&mn, &e.nu, e.lambda).iter().map(|x| x.abs()).sum();
            assert!(r_h <= 1e-10 * e.lambda && r_nu <= 1e-10 * e.lambda);
            assert!((sum(&e.nu) - 1.0).abs() < 1e-14);
            assert!((dot(&e.nu, &e.h) - 1.0).abs() < 1e-14);
            assert!(e.h.iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn normalized_operator_is_stochastic() {
        let m = models::ising::<f64>(1.0, 0.0).unwrap();
        let (t, e) = eig_of(&m);
        let op = t.normalized_operator(&e);
        let same = 1f64.exp() / (2.0 * 1f64.cosh());
        assert!((op.forward[(0, 0)] - same).abs() < 1e-12);
        assert!((op.forward[(0, 1)] - (1.0 - same)).abs() < 1e-12);
        for mat in [&op.forward, &op.backward] {
            for i in 0..2 {
                assert!((sum(mat.row(i)) - 1.0).abs() < 1e-12);
            }
        }
        let b = models::bernoulli::<f64>(0.7).unwrap();
        let (t, e) = eig_of(&b);
        let q = t.normalized_operator(&e).forward;
        for i in 0..2 {
            assert!((q[(i, 0)] - 0.7).abs() < 1e-12 && (q[(i, 1)] - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn memory_three_uses_two_blocks() {
        let s = ShiftSpace::golden_mean();
        let f = FiniteMemoryFunction::from_fn(&s, 3, |w| (w[0] + 2 * w[1] + 3 * w[2]) as f64 * 0.1).unwrap();
        let t = TransferSystem::build(&s, &f).unwrap();
        assert_eq!(t.block_len(), 2);
        assert_eq!(t.state_count(), 3);
        // 01 -> 10 corresponds to the word 010
        assert!((t.matrix()[(1, 2)] - (0.2f64).exp()).abs() < 1e-15);
        assert_eq!(t.matrix()[(1, 0)], 0.0);
    }

    #[test]
    fn partition_pressure() {
        let b = models::bernoulli::<f64>(0.7).unwrap();
        assert!(pressure_via_partition(&b.space, &b.potential, 8).unwrap().abs() < 1e-14);
        let g = models::golden_mean::<f64>(0.0).unwrap();
        // 144 admissible words of length 10 (Fibonacci)
        let p = pressure_via_partition(&g.space, &g.potential, 10).unwrap();
        assert!((p - 144f64.ln() / 10.0).abs() < 1e-14);
        let i = models::ising::<f64>(1.0, 0.0).unwrap();
        let p = pressure_via_partition(&i.space, &i.potential, 10).unwrap();
        assert!((p - (2.0 * 1f64.cosh()).ln()).abs() <= 4.0 / 10.0);
    }

    #[test]
    fn constants() {
        let b = models::bernoulli::<f64>(0.7).unwrap();
        let (t, e) = eig_of(&b);
        let r = t.constants_report(&e).unwrap();
        assert_eq!(r.b_m, vec![1.0, 1.0]);
        let expect_k = e.lambda * b.potential.sup_norm().exp() * r.b0_geometric;
        assert!((r.k_constant - expect_k).abs() < 1e-12);
        assert!(r.eta.is_none());
        let i = models::ising::<f64>(1.0, 0.0).unwrap();
        let (t, e) = eig_of(&i);
        let r = t.constants_report(&e).unwrap();
        assert!((r.ess_radius_bound - 0.5 * 2.0 * 1f64.cosh()).abs() < 1e-12);
        assert_eq!(r.b_m.len(), 3);
        assert!((r.b_m[0] - 4f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn single_precision_path() {
        let m = models::ising::<f32>(1.0, 0.0).unwrap();
        let t = TransferSystem::build(&m.space, &m.potential).unwrap();
        let e = t.eigendata().unwrap();
        assert!((e.lambda - 2.0 * 1f32.cosh()).abs() < 1e-4);
    }
}
