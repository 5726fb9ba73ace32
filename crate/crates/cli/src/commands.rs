use std::fs;

use anyhow::{bail, Context, Result};
use gibbslab::cone::{contraction_trace, projective_diameter};
use gibbslab::gibbs::{gibbs_measure, gibbs_ratio_scan};
use gibbslab::model_file::{model_to_json, parse_model, parse_table};
use gibbslab::models::{self, BuiltinParams, Model, BUILTIN_NAMES};
use gibbslab::report::{num, nums, object, to_json};
use gibbslab::sampler::{self, SampleConfig, GENERATOR};
use gibbslab::stats::{self, interval_rate, Cumulant};
use gibbslab::transfer::{EigenOptions, TransferSystem};
use gibbslab::verify::{self, Injection, VerifyTolerances};
use serde_json::Value;

use crate::grid::{parse_grid, parse_lengths};
use crate::table::Table;
use crate::{Format, ModelArgs, OutArgs};

const ENUM_CAP_VAR: &str = "GIBBSLAB_ENUM_CAP";

pub fn load_model(args: &ModelArgs) -> Result<Model<f64>> {
    let mut model = match (&args.model, &args.builtin) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_model(&text).with_context(|| format!("model file {}", path.display()))?
        }
        (None, Some(name)) => {
            let params = BuiltinParams { p: args.p, beta: args.beta, field: args.field, a: args.a };
            models::builtin(name, params)?
        }
        _ => bail!("exactly one of --model or --builtin is required"),
    };
    if let Ok(cap) = std::env::var(ENUM_CAP_VAR) {
        let cap: u128 = cap.trim().parse().with_context(|| format!("{ENUM_CAP_VAR}={cap} is not an integer"))?;
        model.space = model.space.clone().with_enum_cap(cap);
    }
    if let Some(path) = &args.observable {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        model.observable = parse_table(&model.space, &text).with_context(|| format!("observable {}", path.display()))?;
    }
    Ok(model)
}

/// Writes `files` under `--out`, or prints the first one to stdout.
fn emit(out: &OutArgs, files: &[(String, String)]) -> Result<()> {
    match &out.out {
        None => {
            print!("{}", files[0].1);
            Ok(())
        }
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for (name, text) in files {
                let path = dir.join(name);
                fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}

fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

fn eigen_options(tol: Option<f64>) -> Result<EigenOptions<f64>> {
    let mut opts = EigenOptions::default();
    if let Some(t) = tol {
        if !(t > 0.0 && t.is_finite()) {
            bail!("--tol must be positive");
        }
        opts.tol = t;
    }
    Ok(opts)
}

pub fn analyze(args: &ModelArgs, out: &OutArgs, nmax: usize, tol: Option<f64>) -> Result<()> {
    let model = load_model(args)?;
    let opts = eigen_options(tol)?;
    let t = TransferSystem::build(&model.space, &model.potential)?;
    let e = t.dominant_eigendata(&opts)?;
    let gap = t.spectral_gap(&e, &opts)?;
    let mu = gibbs_measure(&t, &e);
    let constants = t.constants_report(&e)?;
    let scan = gibbs_ratio_scan(&mu, nmax)?;
    let cone = constants.cone;
    let delta = cone.default_delta();
    let diam = projective_diameter(&t.operator_matrix().pow(cone.n0));
    let ones = vec![1.0; t.state_count()];
    let trace = contraction_trace(&t, &ones, &e.h, 1, Some(delta))?;

    let report = object([
        ("model", model_to_json(&model)),
        (
            "eigendata",
            object([
                ("lambda", num(e.lambda)),
                ("pressure", num(e.pressure)),
                ("states", Value::from(t.state_count() as u64)),
                ("block_length", Value::from(t.block_len() as u64)),
                ("iterations", Value::from(e.iterations as u64)),
                ("residual_h", num(e.residual_h)),
                ("residual_nu", num(e.residual_nu)),
                ("min_h", num(e.min_h)),
                ("h", nums(e.h.iter().copied())),
                ("nu", nums(e.nu.iter().copied())),
            ]),
        ),
        (
            "gap",
            object([
                ("ratio", num(gap.ratio)),
                ("deflated", opt(gap.deflated)),
                ("full", opt(gap.full)),
                ("discrepancy", opt(gap.discrepancy())),
            ]),
        ),
        ("entropy", num(mu.entropy())),
        (
            "stationary",
            nums(mu.stationary().iter().copied()),
        ),
        (
            "transition",
            Value::Array(mu.transition().to_rows().into_iter().map(nums).collect()),
        ),
        (
            "constants",
            object([
                ("alpha", num(constants.alpha)),
                ("b_m", nums(constants.b_m.iter().copied())),
                ("holder_seminorm", num(constants.holder_seminorm)),
                ("b0", num(constants.b0_geometric)),
                ("k", num(constants.k_constant)),
                ("essential_radius_bound", num(constants.ess_radius_bound)),
                ("gibbs_band_variation", nums([constants.gibbs_band_variation.0, constants.gibbs_band_variation.1])),
                ("gibbs_band_norm", nums([constants.gibbs_band_norm.0, constants.gibbs_band_norm.1])),
                ("eta", opt(constants.eta)),
                ("gap_rate_bound", opt(constants.gap_rate_bound)),
                ("convergence_constant", opt(constants.convergence_constant)),
            ]),
        ),
        (
            "cone",
            object([
                ("delta_prime", num(cone.delta_prime)),
                ("n0", Value::from(cone.n0 as u64)),
                ("delta", num(delta)),
                ("kappa", num(trace.kappa)),
                ("projective_diameter", num(diam)),
                ("birkhoff_bound", num(trace.birkhoff_bound)),
            ]),
        ),
        (
            "gibbs_scan",
            object([
                ("n_max", Value::from(scan.n_max as u64)),
                ("min_ratio", num(scan.min_ratio)),
                ("max_ratio", num(scan.max_ratio)),
                ("c1", num(scan.theoretical.0)),
                ("c2", num(scan.theoretical.1)),
                ("band_drift", num(scan.band_drift)),
                ("band_stable", Value::from(scan.band_stable)),
                ("within_c1_c2", Value::from(scan.within_theoretical)),
                (
                    "per_length",
                    Value::Array(
                        scan.per_length
                            .iter()
                            .enumerate()
                            .map(|(i, &(lo, hi))| {
                                object([("n", Value::from(i as u64 + 1)), ("min", num(lo)), ("max", num(hi))])
                            })
                            .collect(),
                    ),
                ),
            ]),
        ),
    ]);
    emit(
        out,
        &[
            ("analyze.json".into(), to_json(&report)),
            ("model.json".into(), to_json(&model_to_json(&model))),
        ],
    )
}

pub fn verify(args: &ModelArgs, out: &OutArgs, nmax: usize, tol: Option<f64>, inject: &str) -> Result<()> {
    let model = load_model(args)?;
    let inject: Injection = inject.parse()?;
    let mut tolerances = VerifyTolerances::default();
    if let Some(t) = tol {
        if !(t > 0.0 && t.is_finite()) {
            bail!("--tol must be positive");
        }
        tolerances.jacobian = t;
        tolerances.residual = t;
        tolerances.defect = t;
    }
    let report = verify::verify(&model, nmax, &tolerances, inject)?;
    let mut json = report.to_json();
    if let Value::Object(map) = &mut json {
        map.insert("model".into(), Value::from(model.name.clone()));
        map.insert("injection".into(), Value::from(format!("{inject:?}")));
    }
    emit(out, &[("verify.json".into(), to_json(&json))])
}

fn cumulant(model: &Model<f64>) -> Result<Cumulant<f64>> {
    Ok(Cumulant::new(&model.space, &model.potential, &model.observable)?)
}

pub fn pressure_curve(args: &ModelArgs, out: &OutArgs, grid: &str, format: Format) -> Result<()> {
    let model = load_model(args)?;
    let grid = parse_grid(grid)?;
    let mut table = Table::new(&["s", "pressure", "cumulant", "derivative", "second_derivative"]);
    if !grid.is_empty() {
        let c = cumulant(&model)?;
        for s in grid {
            let row = (|| -> gibbslab::Result<Vec<Value>> {
                Ok(vec![num(s), num(c.pressure(s)?), num(c.value(s)?), num(c.derivative(s)?), num(c.second_derivative(s)?)])
            })();
            match row {
                Ok(cells) => table.push(cells),
                Err(e) => table.push_error(vec![num(s)], e),
            }
        }
    }
    emit(out, &[(format!("pressure_curve.{}", extension(format)), table.render(format))])
}

pub fn rate_curve(args: &ModelArgs, out: &OutArgs, grid: &str, format: Format) -> Result<()> {
    let model = load_model(args)?;
    let grid = parse_grid(grid)?;
    let mut table = Table::new(&["t", "s_star", "rate", "cumulant_at_s_star"]);
    if !grid.is_empty() {
        let c = cumulant(&model)?;
        for t in grid {
            match c.rate(t) {
                Ok(r) => table.push(vec![num(t), num(r.s_star), num(r.rate), num(r.lambda_at_s_star)]),
                Err(e @ gibbslab::Error::OutOfRange { .. }) => table.push_error(vec![num(t)], e),
                Err(e) => return Err(e.into()),
            }
        }
    }
    emit(out, &[(format!("rate_curve.{}", extension(format)), table.render(format))])
}

pub fn clt(args: &ModelArgs, out: &OutArgs, lengths: &str, dump: bool, format: Format) -> Result<()> {
    if dump && out.out.is_none() {
        bail!("--dump needs --out");
    }
    let model = load_model(args)?;
    let lengths = parse_lengths(lengths)?;
    let mu = gibbslab::gibbs::GibbsMeasure::from_potential(&model.space, &model.potential)?;
    let mean = mu.expectation(&model.observable)?;
    let xi2 = stats::asymptotic_variance(&mu, &model.observable)?.value;
    let mut table = Table::new(&["n", "mean", "xi2", "variance_over_n", "ks", "be_constant", "local_limit_error"]);
    let mut files = vec![];
    for n in lengths {
        let d = stats::exact_birkhoff_distribution(&mu, &model.observable, n)?;
        let diag = stats::clt_diagnostics(&d, mean, xi2)?;
        let local = stats::local_limit_check(&d, mean, xi2)?;
        table.push(vec![
            Value::from(n as u64),
            num(mean),
            num(xi2),
            num(d.variance() / n as f64),
            num(diag.ks),
            num(diag.be_constant),
            num(local),
        ]);
        if dump {
            files.push((format!("clt_n{n}.csv"), d.to_csv()));
        }
    }
    files.insert(0, (format!("clt.{}", extension(format)), table.render(format)));
    emit(out, &files)
}

pub fn ldp(args: &ModelArgs, out: &OutArgs, lengths: &str, lower: f64, upper: f64, format: Format) -> Result<()> {
    let model = load_model(args)?;
    let lengths = parse_lengths(lengths)?;
    let c = cumulant(&model)?;
    let mu = c.measure_at(0.0)?;
    let mut table = Table::new(&["n", "probability", "empirical_rate", "rate", "gap"]);
    let rate = match interval_rate(&c, lower, upper) {
        Ok(r) => Ok(r),
        Err(e @ gibbslab::Error::OutOfRange { .. }) => Err(e),
        Err(e) => return Err(e.into()),
    };
    for n in lengths {
        let d = stats::exact_birkhoff_distribution(&mu, &model.observable, n)?;
        match &rate {
            Ok(r) => {
                let row = stats::ldp_empirical(std::slice::from_ref(&d), lower, upper, *r)[0];
                table.push(vec![
                    Value::from(n as u64),
                    num(row.probability),
                    opt(row.empirical_rate),
                    num(row.rate),
                    opt(row.gap()),
                ]);
            }
            Err(e) => table.push_error(vec![Value::from(n as u64), num(d.interval_probability(lower, upper))], e),
        }
    }
    emit(out, &[(format!("ldp.{}", extension(format)), table.render(format))])
}

pub fn sample(args: &ModelArgs, out: &OutArgs, seed: u64, n: usize, trials: usize) -> Result<()> {
    let model = load_model(args)?;
    let mu = gibbslab::gibbs::GibbsMeasure::from_potential(&model.space, &model.potential)?;
    let cfg = SampleConfig { seed, n, trials };
    let paths = sampler::sample_paths(&mu, &cfg)?;
    let sums = sampler::empirical_birkhoff(&mu, &model.observable, &cfg, None)?;
    let chi = if n >= 2 { Some(sampler::two_cylinder_chi_square(&mu, &paths[0])?) } else { None };
    let summary = object([
        ("generator", Value::from(GENERATOR)),
        ("seed", Value::from(seed)),
        ("n", Value::from(n as u64)),
        ("trials", Value::from(trials as u64)),
        (
            "birkhoff",
            object([
                ("mean", num(sums.mean)),
                ("expected_mean", num(n as f64 * mu.expectation(&model.observable)?)),
                ("var_over_n", num(sums.var_over_n)),
            ]),
        ),
        (
            "chi_square",
            chi.map_or(Value::Null, |c| {
                object([("statistic", num(c.statistic)), ("dof", Value::from(c.dof as u64))])
            }),
        ),
    ]);
    emit(
        out,
        &[
            ("sample_paths.txt".into(), sampler::paths_to_text(&paths)),
            ("sample.json".into(), to_json(&summary)),
        ],
    )
}

pub fn examples(out: &OutArgs) -> Result<()> {
    let defaults = BuiltinParams::default();
    let mut list = Vec::new();
    let mut files = Vec::new();
    for name in BUILTIN_NAMES {
        let model: Model<f64> = models::builtin(name, defaults)?;
        let (flags, about) = match name {
            "bernoulli" => (object([("p", num(defaults.p))]), "full 2-shift, φ = log p on symbol 1, log(1−p) on symbol 2"),
            "ising" => (
                object([("beta", num(defaults.beta)), ("field", num(defaults.field))]),
                "full 2-shift with spins ±1, φ = β x₀x₁ + h(x₀ + x₁)/2",
            ),
            _ => (object([("a", num(defaults.a))]), "golden mean shift (no 2 after 2), φ = a·1[symbol 1]"),
        };
        let canonical = model_to_json(&model);
        files.push((format!("{name}.json"), to_json(&canonical)));
        list.push(object([
            ("name", Value::from(name)),
            ("description", Value::from(about)),
            ("flags", flags),
            ("model", canonical),
        ]));
    }
    files.insert(0, ("examples.json".into(), to_json(&Value::Array(list))));
    emit(out, &files)
}
