//! Built-in example models: Bernoulli full 2-shift, nearest-neighbour
//! Ising chain, and the golden mean shift.

use crate::error::{Error, Result};
use crate::potential::FiniteMemoryFunction;
use crate::scalar::Real;
use crate::shift::ShiftSpace;

/// A potential together with the observable the examples study under it.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub name: String,
    pub space: ShiftSpace,
    pub potential: FiniteMemoryFunction<T>,
    pub observable: FiniteMemoryFunction<T>,
    pub alpha: T,
    /// Display labels for symbols `0..N`.
    pub labels: Vec<String>,
}

pub const BUILTIN_NAMES: [&str; 3] = ["bernoulli", "ising", "golden-mean"];

/// Parameters of the built-in models. Unused fields are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuiltinParams {
    pub p: f64,
    pub beta: f64,
    pub field: f64,
    pub a: f64,
}

impl Default for BuiltinParams {
    fn default() -> Self {
        Self { p: 0.7, beta: 1.0, field: 0.0, a: 0.0 }
    }
}

pub fn builtin<T: Real>(name: &str, params: BuiltinParams) -> Result<Model<T>> {
    match name {
        "bernoulli" => bernoulli(params.p),
        "ising" => ising(params.beta, params.field),
        "golden-mean" | "golden_mean" => golden_mean(params.a),
        other => Err(Error::InvalidArgument(format!(
            "unknown builtin '{other}', expected one of {BUILTIN_NAMES:?}"
        ))),
    }
}

/// Full 2-shift, `φ = log p` on symbol 1 and `log(1-p)` on symbol 2.
/// Observable: centred indicator `1_[1] - p`.
pub fn bernoulli<T: Real>(p: f64) -> Result<Model<T>> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("p = {p} not in (0,1)")));
    }
    let space = ShiftSpace::full(2)?;
    let potential = FiniteMemoryFunction::per_symbol(&space, &[T::lit(p.ln()), T::lit((1.0 - p).ln())])?;
    let observable = FiniteMemoryFunction::per_symbol(&space, &[T::lit(1.0 - p), T::lit(-p)])?;
    Ok(Model {
        name: "bernoulli".into(),
        space,
        potential,
        observable,
        alpha: T::lit(0.5),
        labels: vec!["1".into(), "2".into()],
    })
}

/// Spin of Ising symbol `s`: symbol 0 is `+1`, symbol 1 is `-1`.
pub fn spin<T: Real>(s: usize) -> T {
    if s == 0 {
        T::one()
    } else {
        -T::one()
    }
}

/// Full 2-shift on spins, `φ(x) = β x_0 x_1 + (h/2)(x_0 + x_1)`.
/// Observable: the spin `x_0`.
pub fn ising<T: Real>(beta: f64, field: f64) -> Result<Model<T>> {
    let space = ShiftSpace::full(2)?;
    let (b, h) = (T::lit(beta), T::lit(field));
    let half = T::lit(0.5);
    let potential = FiniteMemoryFunction::from_fn(&space, 2, |w| {
        let (x0, x1) = (spin::<T>(w[0]), spin::<T>(w[1]));
        b * x0 * x1 + half * h * (x0 + x1)
    })?;
    let observable = FiniteMemoryFunction::per_symbol(&space, &[T::one(), -T::one()])?;
    Ok(Model {
        name: "ising".into(),
        space,
        potential,
        observable,
        alpha: T::lit(0.5),
        labels: vec!["+1".into(), "-1".into()],
    })
}

/// Golden mean shift on {0, 1}, `φ = a · 1_[0]`. Observable: `1_[0]`.
pub fn golden_mean<T: Real>(a: f64) -> Result<Model<T>> {
    let space = ShiftSpace::golden_mean();
    let potential = FiniteMemoryFunction::per_symbol(&space, &[T::lit(a), T::zero()])?;
    let observable = FiniteMemoryFunction::indicator(&space, 0);
    Ok(Model {
        name: "golden-mean".into(),
        space,
        potential,
        observable,
        alpha: T::lit(0.5),
        labels: vec!["0".into(), "1".into()],
    })
}
