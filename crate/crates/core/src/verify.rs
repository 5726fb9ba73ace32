//! Executable checks of the five equivalent characterisations of the
//! equilibrium state: (i) Jacobian, (ii) Gibbs bounds, (iii) eigendata,
//! (iv) variational principle, (v) rate function.

use serde_json::Value;

use crate::error::{Error, Result};
use crate::gibbs::{gibbs_ratio_scan, gibbs_measure, variational_defect, MarkovMeasure};
use crate::models::Model;
use crate::report::{num, object};
use crate::scalar::Real;
use crate::stats::Cumulant;
use crate::transfer::TransferSystem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyTolerances {
    /// Relative error of the Jacobian identity.
    pub jacobian: f64,
    /// Relative drift of the Gibbs band in the word length.
    pub band: f64,
    /// Eigen residuals relative to λ.
    pub residual: f64,
    pub defect: f64,
    /// `|Λ'(0) − ∫ψ dμ|` by central differences with step `1e-4`.
    pub rate: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        Self { jacobian: 1e-10, band: 1e-9, residual: 1e-10, defect: 1e-10, rate: 1e-6 }
    }
}

/// Non-equilibrium candidates substituted into a single check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Injection {
    #[default]
    None,
    /// Uniform successor choice in place of `μ` for (iv).
    UniformMeasure,
    /// A renormalised perturbation of `ν` in place of `ν` for (iii).
    PerturbedEigenmeasure,
}

impl std::str::FromStr for Injection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "uniform-measure" => Ok(Self::UniformMeasure),
            "perturbed-nu" => Ok(Self::PerturbedEigenmeasure),
            other => Err(Error::InvalidArgument(format!(
                "unknown injection '{other}' (none | uniform-measure | perturbed-nu)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub metric: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Supporting numbers, not part of the verdict unless stated.
    pub detail: Vec<(&'static str, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Value {
        let checks = self
            .checks
            .iter()
            .map(|c| {
                object([
                    ("name", Value::from(c.name)),
                    ("metric", num(c.metric)),
                    ("tolerance", num(c.tolerance)),
                    ("pass", Value::from(c.pass)),
                    ("detail", object(c.detail.iter().map(|&(k, v)| (k, num(v))))),
                ])
            })
            .collect();
        object([("pass", Value::from(self.pass())), ("checks", Value::Array(checks))])
    }
}

pub fn verify<T: Real>(model: &Model<T>, n_max: usize, tol: &VerifyTolerances, inject: Injection) -> Result<VerifyReport> {
    let t = TransferSystem::build(&model.space, &model.potential)?;
    let e = t.eigendata()?;
    let mu = gibbs_measure(&t, &e);
    let lambda = e.lambda.as_f64();
    let mut checks = Vec::with_capacity(5);

    // (i) J_μ = e^{P−φ} after the cohomologous normalisation by h
    let words = model.space.enumerate_words(mu.block_len() + 1)?;
    let (mut err, mut literal) = (0.0f64, 0.0f64);
    for w in &words {
        let j = mu.jacobian(w)?.as_f64();
        let predicted = mu.predicted_jacobian(w).as_f64();
        let plain = mu.literal_jacobian(w).as_f64();
        err = err.max((j - predicted).abs() / predicted);
        literal = literal.max((j - plain).abs() / plain);
    }
    checks.push(CheckResult {
        name: "jacobian",
        metric: err,
        tolerance: tol.jacobian,
        pass: err <= tol.jacobian,
        detail: vec![("literal_relative_error", literal), ("words", words.len() as f64)],
    });

    // (ii) Gibbs property: a band uniform in n (and inside e^{±2V} when V > 0)
    let scan = gibbs_ratio_scan(&mu, n_max)?;
    let v = model.potential.total_variation();
    let drift = scan.band_drift.as_f64();
    let band_ok = drift <= tol.band && (v == T::zero() || scan.within_theoretical);
    checks.push(CheckResult {
        name: "gibbs_property",
        metric: drift,
        tolerance: tol.band,
        pass: band_ok,
        detail: vec![
            ("min_ratio", scan.min_ratio.as_f64()),
            ("max_ratio", scan.max_ratio.as_f64()),
            ("c1", scan.theoretical.0.as_f64()),
            ("c2", scan.theoretical.1.as_f64()),
            ("within_c1_c2", f64::from(u8::from(scan.within_theoretical))),
            ("n_max", n_max as f64),
        ],
    });

    // (iii) eigen residuals of the candidate pair (h, ν)
    let nu: Vec<T> = match inject {
        Injection::PerturbedEigenmeasure => {
            let mut p: Vec<T> = e
                .nu
                .iter()
                .enumerate()
                .map(|(i, &x)| x * (T::one() + T::lit(if i % 2 == 0 { 0.1 } else { -0.1 })))
                .collect();
            let s: T = p.iter().copied().sum();
            p.iter_mut().for_each(|x| *x /= s);
            p
        }
        _ => e.nu.clone(),
    };
    let m_nu = t.matrix().mul_vec(&nu);
    let res_nu: f64 = m_nu.iter().zip(&nu).map(|(&a, &b)| (a - e.lambda * b).abs().as_f64()).sum();
    let lh = t.apply(&e.h);
    let res_h = lh.iter().zip(&e.h).map(|(&a, &b)| (a - e.lambda * b).abs().as_f64()).fold(0.0, f64::max);
    let residual = res_h.max(res_nu) / lambda;
    checks.push(CheckResult {
        name: "eigendata",
        metric: residual,
        tolerance: tol.residual,
        pass: residual <= tol.residual,
        detail: vec![("residual_h", res_h), ("residual_nu", res_nu), ("lambda", lambda)],
    });

    // (iv) variational principle
    let candidate: MarkovMeasure<T> = match inject {
        Injection::UniformMeasure => MarkovMeasure::uniform(&model.space)?,
        _ => mu.chain().clone(),
    };
    let defect = variational_defect(&candidate, &model.potential, e.pressure)?.as_f64();
    checks.push(CheckResult {
        name: "variational",
        metric: defect.abs(),
        tolerance: tol.defect,
        pass: defect.abs() <= tol.defect,
        detail: vec![
            ("defect", defect),
            ("entropy", candidate.entropy().as_f64()),
            ("pressure", e.pressure.as_f64()),
        ],
    });

    // (v) rate function vanishes at the Gibbs mean, with positive curvature
    let c = Cumulant::new(&model.space, &model.potential, &model.observable)?;
    let mean = mu.expectation(&model.observable)?;
    let h = T::lit(1e-4);
    let (lm, l0, lp) = (c.value(-h)?, c.value(T::zero())?, c.value(h)?);
    let fd_first = ((lp - lm) / (T::lit(2.0) * h)).as_f64();
    let fd_second = ((lp - T::lit(2.0) * l0 + lm) / (h * h)).as_f64();
    let at_mean = c.rate(mean)?.rate.as_f64();
    let location = (fd_first - mean.as_f64()).abs();
    checks.push(CheckResult {
        name: "rate_function",
        metric: location,
        tolerance: tol.rate,
        pass: location <= tol.rate && at_mean.abs() <= tol.rate && fd_second > 0.0,
        detail: vec![
            ("mean", mean.as_f64()),
            ("rate_at_mean", at_mean),
            ("curvature", if fd_second > 0.0 { 1.0 / fd_second } else { 0.0 }),
            ("lambda_second_derivative", fd_second),
        ],
    });

    Ok(VerifyReport { checks })
}
