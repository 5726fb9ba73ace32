use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::gibbs::{gibbs_measure, GibbsMeasure};
use crate::potential::FiniteMemoryFunction;
use crate::scalar::Real;
use crate::shift::ShiftSpace;
use crate::transfer::{EigenOptions, TransferSystem};

use super::{asymptotic_variance, resolvent_variance};

/// Default half-width of the `s` bracket used to estimate the range of `Λ'`.
pub const DEFAULT_S_MAX: f64 = 50.0;

/// `Λ(s) = P(φ + sψ) − P(φ)`, caching the Gibbs measure of every `s`
/// visited so derivatives reuse the same eigendata.
#[derive(Debug)]
pub struct Cumulant<T> {
    space: ShiftSpace,
    phi: FiniteMemoryFunction<T>,
    psi: FiniteMemoryFunction<T>,
    opts: EigenOptions<T>,
    base_pressure: T,
    cache: Mutex<HashMap<u64, Arc<GibbsMeasure<T>>>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFunctionPoint<T> {
    pub t: T,
    pub s_star: T,
    /// `I(t) = s* t − Λ(s*)`, nats per step.
    pub rate: T,
    pub lambda_at_s_star: T,
}

impl<T: Real> Cumulant<T> {
    pub fn new(space: &ShiftSpace, phi: &FiniteMemoryFunction<T>, psi: &FiniteMemoryFunction<T>) -> Result<Self> {
        Self::with_options(space, phi, psi, EigenOptions::default())
    }

    pub fn with_options(
        space: &ShiftSpace,
        phi: &FiniteMemoryFunction<T>,
        psi: &FiniteMemoryFunction<T>,
        opts: EigenOptions<T>,
    ) -> Result<Self> {
        if phi.space() != space || psi.space() != space {
            return Err(Error::DomainMismatch);
        }
        let mut c = Self {
            space: space.clone(),
            phi: phi.clone(),
            psi: psi.clone(),
            opts,
            base_pressure: T::zero(),
            cache: Mutex::new(HashMap::new()),
        };
        c.base_pressure = c.measure_at(T::zero())?.pressure();
        Ok(c)
    }

    pub fn observable(&self) -> &FiniteMemoryFunction<T> {
        &self.psi
    }

    /// Gibbs measure of `φ + sψ`.
    pub fn measure_at(&self, s: T) -> Result<Arc<GibbsMeasure<T>>> {
        let key = s.as_f64().to_bits();
        if let Some(m) = self.cache.lock().unwrap().get(&key) {
            return Ok(Arc::clone(m));
        }
        let potential = self.phi.affine_combine(&self.psi, s)?;
        let t = TransferSystem::build(&self.space, &potential)?;
        let e = t.dominant_eigendata(&self.opts)?;
        let m = Arc::new(gibbs_measure(&t, &e));
        self.cache.lock().unwrap().insert(key, Arc::clone(&m));
        Ok(m)
    }

    /// `P(φ + sψ)`.
    pub fn pressure(&self, s: T) -> Result<T> {
        Ok(self.measure_at(s)?.pressure())
    }

    pub fn value(&self, s: T) -> Result<T> {
        Ok(self.pressure(s)? - self.base_pressure)
    }

    /// `Λ'(s) = ∫ψ dμ_{φ+sψ}`.
    pub fn derivative(&self, s: T) -> Result<T> {
        self.measure_at(s)?.expectation(&self.psi)
    }

    /// `Λ''(s)`: the asymptotic variance of `ψ` under `μ_{φ+sψ}`.
    pub fn second_derivative(&self, s: T) -> Result<T> {
        resolvent_variance(self.measure_at(s)?.chain(), &self.psi)
    }

    /// `(Λ'(s₋), Λ'(s₊))`, the attainable means, where `s±` are the
    /// furthest tilts (at most `s_max`) whose eigendata still solves.
    pub fn mean_range(&self, s_max: T) -> Result<(T, T)> {
        Ok((self.reach(-T::one(), s_max)?.1, self.reach(T::one(), s_max)?.1))
    }

    /// Doubles the tilt in direction `sign` up to `s_max`. Strong tilts can
    /// make the chain nearly periodic, where power iteration stalls; the
    /// last tilt that solved is returned with `Λ'` there.
    fn reach(&self, sign: T, s_max: T) -> Result<(T, T)> {
        let mut best = (T::zero(), self.derivative(T::zero())?);
        let mut s = T::one().min(s_max);
        loop {
            match self.derivative(sign * s) {
                Ok(d) => best = (sign * s, d),
                Err(e) if e.is_numerical() && best.0 != T::zero() => break,
                Err(e) => return Err(e),
            }
            if s >= s_max {
                break;
            }
            s = (s * T::lit(2.0)).min(s_max);
        }
        Ok(best)
    }

    pub fn rate(&self, t: T) -> Result<RateFunctionPoint<T>> {
        self.rate_with(t, T::lit(DEFAULT_S_MAX))
    }

    /// Solves `Λ'(s) = t` by bisection on the monotone `Λ'`, switching to
    /// safeguarded Newton steps, and returns the Legendre transform at `t`.
    pub fn rate_with(&self, t: T, s_max: T) -> Result<RateFunctionPoint<T>> {
        let mean = self.derivative(T::zero())?;
        let tiny = T::lit(1e-14).max(T::epsilon() * T::lit(16.0)) * T::one().max(t.abs());
        if (t - mean).abs() <= tiny {
            return Ok(RateFunctionPoint { t, s_star: T::zero(), rate: T::zero(), lambda_at_s_star: T::zero() });
        }
        let (s_lo, lo_t) = self.reach(-T::one(), s_max)?;
        let (s_hi, hi_t) = self.reach(T::one(), s_max)?;
        if !(t > lo_t && t < hi_t) {
            return Err(Error::OutOfRange { target: t.as_f64(), lo: lo_t.as_f64(), hi: hi_t.as_f64() });
        }
        let (mut lo, mut hi) = if t > mean { (T::zero(), s_hi) } else { (s_lo, T::zero()) };
        let mut s = (lo + hi) / T::lit(2.0);
        let tol = T::lit(1e-13).max(T::epsilon() * T::lit(64.0)) * T::one().max(t.abs());
        const MAX_ITER: usize = 400;
        for _ in 0..MAX_ITER {
            let g = self.derivative(s)? - t;
            if g.abs() <= tol {
                let lam = self.value(s)?;
                return Ok(RateFunctionPoint { t, s_star: s, rate: (s * t - lam).max(T::zero()), lambda_at_s_star: lam });
            }
            if g > T::zero() {
                hi = s;
            } else {
                lo = s;
            }
            let mid = (lo + hi) / T::lit(2.0);
            if hi - lo <= T::epsilon() * T::lit(4.0) * T::one().max(s.abs()) {
                break;
            }
            // Newton only once the bracket is narrow enough to trust it
            s = if hi - lo < T::one() {
                let curv = self.second_derivative(s)?;
                let step = s - g / curv;
                if curv > T::zero() && step > lo && step < hi {
                    step
                } else {
                    mid
                }
            } else {
                mid
            };
        }
        let g = self.derivative(s)? - t;
        if g.abs() <= T::lit(1e3) * tol {
            // bracket collapsed at machine precision: accept
            let lam = self.value(s)?;
            return Ok(RateFunctionPoint { t, s_star: s, rate: (s * t - lam).max(T::zero()), lambda_at_s_star: lam });
        }
        Err(Error::NoConvergence { what: "rate function solve", iterations: MAX_ITER })
    }
}

pub fn cumulant<T: Real>(
    space: &ShiftSpace,
    phi: &FiniteMemoryFunction<T>,
    psi: &FiniteMemoryFunction<T>,
    s: T,
) -> Result<T> {
    Cumulant::new(space, phi, psi)?.value(s)
}

pub fn rate_function<T: Real>(
    space: &ShiftSpace,
    phi: &FiniteMemoryFunction<T>,
    psi: &FiniteMemoryFunction<T>,
    t: T,
) -> Result<RateFunctionPoint<T>> {
    Cumulant::new(space, phi, psi)?.rate(t)
}

/// `inf_{t∈[a,b]} I(t)`: zero if the interval holds the mean, otherwise
/// the rate at the nearer endpoint (I is convex with its zero at the mean).
pub fn interval_rate<T: Real>(c: &Cumulant<T>, a: T, b: T) -> Result<T> {
    let mean = c.derivative(T::zero())?;
    if a <= mean && mean <= b {
        Ok(T::zero())
    } else if b < mean {
        Ok(c.rate(b)?.rate)
    } else {
        Ok(c.rate(a)?.rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeCheck<T> {
    pub step: T,
    pub fd_first: T,
    pub analytic_first: T,
    pub fd_second: T,
    pub analytic_second: T,
}

impl<T: Real> DerivativeCheck<T> {
    pub fn first_error(&self) -> T {
        (self.fd_first - self.analytic_first).abs()
    }

    pub fn second_error(&self) -> T {
        (self.fd_second - self.analytic_second).abs()
    }
}

/// Central differences of `s ↦ P(φ + sψ)` at zero against `∫ψ dμ` and `ξ²`.
pub fn pressure_derivative_check<T: Real>(
    space: &ShiftSpace,
    phi: &FiniteMemoryFunction<T>,
    psi: &FiniteMemoryFunction<T>,
    step: T,
) -> Result<DerivativeCheck<T>> {
    if !(step > T::zero()) {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    let c = Cumulant::new(space, phi, psi)?;
    let (p_minus, p0, p_plus) = (c.pressure(-step)?, c.pressure(T::zero())?, c.pressure(step)?);
    let two = T::lit(2.0);
    let mu = c.measure_at(T::zero())?;
    Ok(DerivativeCheck {
        step,
        fd_first: (p_plus - p_minus) / (two * step),
        analytic_first: mu.expectation(psi)?,
        fd_second: (p_plus - two * p0 + p_minus) / (step * step),
        analytic_second: asymptotic_variance(&mu, psi)?.value,
    })
}
