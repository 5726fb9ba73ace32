//! Hilbert projective metric on the positive orthant, the cones `𝒫_δ`, the
//! explicit cone-contraction constants, and empirical contraction traces.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::potential::FiniteMemoryFunction;
use crate::scalar::Real;
use crate::shift::ShiftSpace;
use crate::transfer::TransferSystem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeConstants<T> {
    /// `δ' = M var₀φ + V(φ) + M log N`.
    pub delta_prime: T,
    /// `n₀ = 2M`.
    pub n0: usize,
}

impl<T: Real> ConeConstants<T> {
    /// `κ(δ) = tanh(δ'/4) / tanh(δ/4)`; below one exactly when `δ > δ'`.
    pub fn kappa(&self, delta: T) -> T {
        let four = T::lit(4.0);
        (self.delta_prime / four).tanh() / (delta / four).tanh()
    }

    /// Infimum of admissible `δ`; any `δ` strictly above it is allowed.
    pub fn threshold_delta(&self) -> T {
        self.delta_prime
    }

    pub fn default_delta(&self) -> T {
        T::lit(2.0) * self.delta_prime
    }
}

pub fn cone_constants<T: Real>(space: &ShiftSpace, phi: &FiniteMemoryFunction<T>) -> ConeConstants<T> {
    let m = space.mixing_time();
    let mt = T::from_usize(m).unwrap();
    let n = T::from_usize(space.alphabet_size()).unwrap();
    ConeConstants {
        delta_prime: mt * phi.var_n(0) + phi.total_variation() + mt * n.ln(),
        n0: 2 * m,
    }
}

fn check_positive<T: Real>(v: &[T]) -> Result<()> {
    match v.iter().position(|&x| !(x > T::zero())) {
        Some(index) => Err(Error::NonPositive { index }),
        None => Ok(()),
    }
}

/// `sup g / inf g`.
pub fn oscillation_ratio<T: Real>(g: &[T]) -> Result<T> {
    check_positive(g)?;
    let hi = g.iter().copied().fold(T::neg_infinity(), T::max);
    let lo = g.iter().copied().fold(T::infinity(), T::min);
    Ok(hi / lo)
}

/// Membership in `𝒫_δ = {g > 0 : sup g ≤ e^δ inf g}`, compared in log
/// space so the boundary case is decided exactly.
pub fn in_cone<T: Real>(g: &[T], delta: T) -> Result<bool> {
    check_positive(g)?;
    let hi = g.iter().copied().fold(T::neg_infinity(), T::max);
    let lo = g.iter().copied().fold(T::infinity(), T::min);
    Ok(hi.ln() - lo.ln() <= delta)
}

/// `Θ(f, g) = log(max f/g) − log(min f/g)`.
pub fn hilbert_metric<T: Real>(f: &[T], g: &[T]) -> Result<T> {
    if f.len() != g.len() {
        return Err(Error::InvalidArgument("vectors of different length".into()));
    }
    check_positive(f)?;
    check_positive(g)?;
    let mut hi = T::neg_infinity();
    let mut lo = T::infinity();
    for (&a, &b) in f.iter().zip(g) {
        let r = a.ln() - b.ln();
        hi = hi.max(r);
        lo = lo.min(r);
    }
    Ok(hi - lo)
}

/// Projective diameter of the image of the positive orthant under `A`
/// acting on column vectors; infinite when `A` has a zero entry.
pub fn projective_diameter<T: Real>(a: &Matrix<T>) -> T {
    let (r, c) = (a.rows(), a.cols());
    let mut diam = T::zero();
    for i in 0..r {
        for j in 0..r {
            for k in 0..c {
                for l in 0..c {
                    let num = a[(i, k)] * a[(j, l)];
                    let den = a[(j, k)] * a[(i, l)];
                    if den == T::zero() {
                        if num > T::zero() {
                            return T::infinity();
                        }
                        continue;
                    }
                    diam = diam.max((num / den).ln());
                }
            }
        }
    }
    diam
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep<T> {
    pub step: usize,
    pub theta: T,
    /// `Θ_j / Θ_{j-1}`; `None` at step 0 or when the previous Θ vanished.
    pub factor: Option<T>,
    /// Both iterates entering this step lie in `𝒫_δ`.
    pub in_cone: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionTrace<T> {
    pub delta: T,
    pub kappa: T,
    pub n0: usize,
    pub steps: Vec<TraceStep<T>>,
    /// `tanh(Δ/4)` for the projective diameter Δ of `𝓛^{n₀}`'s image.
    pub birkhoff_bound: T,
}

impl<T: Real> ContractionTrace<T> {
    /// Every factor measured from inside the cone is at most `κ + slack`.
    pub fn within_kappa(&self, slack: T) -> bool {
        self.steps
            .iter()
            .filter(|s| s.in_cone)
            .filter_map(|s| s.factor)
            .all(|f| f <= self.kappa + slack)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,theta,factor,in_cone_flag\n");
        for s in &self.steps {
            let factor = s.factor.map_or(String::new(), |f| format!("{:.16e}", f.as_f64()));
            out.push_str(&format!(
                "{},{:.16e},{},{}\n",
                s.step,
                s.theta.as_f64(),
                factor,
                u8::from(s.in_cone)
            ));
        }
        out
    }
}

/// Applies `𝓛^{n₀}` to `f` and `g` `k` times, recording the Hilbert
/// distance after each block. Iterates are rescaled to unit maximum, which
/// leaves `Θ` unchanged.
pub fn contraction_trace<T: Real>(
    t: &TransferSystem<T>,
    f: &[T],
    g: &[T],
    k: usize,
    delta: Option<T>,
) -> Result<ContractionTrace<T>> {
    if k == 0 {
        return Err(Error::InvalidArgument("trace length must be at least 1".into()));
    }
    let n = t.state_count();
    if f.len() != n || g.len() != n {
        return Err(Error::InvalidArgument(format!("vectors must have {n} entries")));
    }
    let consts = cone_constants(t.space(), t.potential());
    let delta = delta.unwrap_or_else(|| consts.default_delta());
    let kappa = consts.kappa(delta);
    let n0 = consts.n0;
    let power = t.operator_matrix().pow(n0);
    let diam = projective_diameter(&power);
    let birkhoff_bound = if diam.is_finite() { (diam / T::lit(4.0)).tanh() } else { T::one() };

    let rescale = |v: Vec<T>| -> Vec<T> {
        let top = v.iter().copied().fold(T::zero(), T::max);
        v.into_iter().map(|x| x / top).collect()
    };
    let mut fi = f.to_vec();
    let mut gi = g.to_vec();
    let mut theta = hilbert_metric(&fi, &gi)?;
    let mut steps = vec![TraceStep { step: 0, theta, factor: None, in_cone: false }];
    for step in 1..=k {
        let inside = in_cone(&fi, delta)? && in_cone(&gi, delta)?;
        fi = rescale(power.mul_vec(&fi));
        gi = rescale(power.mul_vec(&gi));
        let next = hilbert_metric(&fi, &gi)?;
        let factor = (theta > T::zero()).then(|| next / theta);
        steps.push(TraceStep { step, theta: next, factor, in_cone: inside });
        theta = next;
    }
    Ok(ContractionTrace { delta, kappa, n0, steps, birkhoff_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn metric_examples() {
        assert_eq!(hilbert_metric(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!(hilbert_metric(&[2.0f64, 4.0], &[1.0, 2.0]).unwrap().abs() < 1e-15);
        assert!((hilbert_metric(&[1.0, 2.0], &[1.0, 1.0]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(matches!(hilbert_metric(&[1.0, 0.0], &[1.0, 1.0]), Err(Error::NonPositive { index: 1 })));
    }

    #[test]
    fn cone_membership() {
        assert!(in_cone(&[3.0, 3.0], 0.0).unwrap());
        assert_eq!(oscillation_ratio(&[3.0, 3.0]).unwrap(), 1.0);
        assert!(in_cone(&[1f64.exp(), 1.0], 1.0).unwrap());
        assert!(!in_cone(&[2f64.exp(), 1.0], 1.0).unwrap());
    }

    #[test]
    fn constants_examples() {
        let b = models::bernoulli::<f64>(0.7).unwrap();
        let c = cone_constants(&b.space, &b.potential);
        let l = (7.0f64 / 3.0).ln();
        assert!((c.delta_prime - (2.0 * l + 2f64.ln())).abs() < 1e-14);
        assert!((c.delta_prime - 2.3877).abs() < 1e-4);
        assert_eq!(c.n0, 2);
        let i = models::ising::<f64>(1.0, 0.0).unwrap();
        let c = cone_constants(&i.space, &i.potential);
        assert!((c.delta_prime - (6.0 + 2f64.ln())).abs() < 1e-14);
        assert!(c.kappa(2.0 * c.delta_prime) < 1.0);
        let g = models::golden_mean::<f64>(0.0).unwrap();
        let c = cone_constants(&g.space, &g.potential);
        assert!((c.delta_prime - 2.0 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn ising_trace_contracts() {
        let i = models::ising::<f64>(1.0, 0.0).unwrap();
        let t = TransferSystem::build(&i.space, &i.potential).unwrap();
        let tr = contraction_trace(&t, &[1.0, 10.0], &[10.0, 1.0], 5, None).unwrap();
        for w in tr.steps.windows(2) {
            assert!(w[1].theta < w[0].theta);
        }
        assert!(tr.steps[1..].iter().all(|s| s.in_cone));
        assert!(tr.within_kappa(1e-12));
        assert!(tr.birkhoff_bound < 1.0);
    }

    #[test]
    fn bernoulli_collapses_in_one_step() {
        let b = models::bernoulli::<f64>(0.7).unwrap();
        let t = TransferSystem::build(&b.space, &b.potential).unwrap();
        let tr = contraction_trace(&t, &[1.0, 5.0], &[3.0, 0.5], 2, None).unwrap();
        assert!(tr.steps[1].theta.abs() < 1e-14);
        assert_eq!(tr.birkhoff_bound, 0.0);
    }

    #[test]
    fn identical_inputs_stay_at_zero() {
        let g = models::golden_mean::<f64>(0.3).unwrap();
        let t = TransferSystem::build(&g.space, &g.potential).unwrap();
        let tr = contraction_trace(&t, &[1.0, 2.0], &[1.0, 2.0], 3, None).unwrap();
        assert!(tr.steps.iter().all(|s| s.theta == 0.0));
        assert!(tr.to_csv().starts_with("step,theta,factor,in_cone_flag\n0,"));
    }
}
