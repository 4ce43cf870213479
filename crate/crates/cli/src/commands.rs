//! Subcommand bodies. Each returns the bytes to write; `main` writes them
//! and the manifest.

use std::fmt::Write as _;
use std::path::PathBuf;

use hylleraas::basis::BasisSpec;
use hylleraas::density::{density_at, density_oracle, radial_profile, shannon_entropy};
use hylleraas::integrals::{base_integral, base_integral_oracle, IntegralKey};
use hylleraas::operators::{expectations, SystemSpec, Wavefunction, WavefunctionArchive};
use hylleraas::precision::{BigFloat, Real};
use hylleraas::quadrature::QuadratureRule;
use hylleraas::scan::{emit_table, scan_z_with, ScanConfig, TableFormat};
use hylleraas::spectral::{energy_lower_bound, optimize_parameters, solve_system};
use hylleraas::with_real;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::{
    CliError, Context, DensityArgs, EntropyArgs, ExpectArgs, GlArgs, Outcome, ScanArgs, SolveArgs, ValidateArgs,
};

const DEFAULT_BUDGET: usize = 300;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn computation(e: impl std::fmt::Display) -> CliError {
    CliError::Computation(e.to_string())
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("missing required --{flag}")))
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

/// The document goes to `out` when given, else to stdout.
fn emit(doc: String, out: Option<&PathBuf>, converged: bool) -> Outcome {
    match out {
        Some(p) => Outcome {
            stdout: String::new(),
            files: vec![(p.clone(), doc.into_bytes())],
            converged,
        },
        None => Outcome {
            stdout: doc,
            files: Vec::new(),
            converged,
        },
    }
}

/// Loads an archive and evaluates `$body` at the precision it was written with.
macro_rules! with_archive {
    ($ctx:expr, $path:expr, $wf:ident => $body:expr) => {{
        let path: &PathBuf = $path;
        $ctx.record("wavefunction", path.display());
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let archive: WavefunctionArchive =
            serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        with_real!(archive.precision_bits, R => {
            let $wf = Wavefunction::<R>::from_archive(&archive).map_err(usage)?;
            $body
        })
    }};
}

pub fn solve(ctx: &mut Context, a: &SolveArgs, out: Option<&PathBuf>) -> Result<Outcome, CliError> {
    let c = &ctx.config;
    let system_name: String = required(c.merge(a.system.clone(), "system")?, "system")?;
    let mut system: SystemSpec = system_name.parse().map_err(usage)?;
    let omega: u32 = required(c.merge(a.omega, "omega")?, "omega")?;
    if c.switch(a.no_ee, "no_ee")? {
        system.interaction_on = false;
    }
    let alpha: Option<f64> = c.merge(a.alpha, "alpha")?;
    let beta: Option<f64> = c.merge(a.beta, "beta")?;
    let optimize = c.switch(a.optimize, "optimize")? || (alpha.is_none() && beta.is_none());
    let budget = c.merge(a.budget, "budget")?.unwrap_or(DEFAULT_BUDGET);
    let start = c.merge(a.start, "start")?.unwrap_or(system.default_exponent());
    let policy = ctx.policy;
    ctx.record("system", &system_name);
    ctx.record("omega", omega);
    ctx.record("interaction", system.interaction_on);
    ctx.record("optimize", optimize);

    with_real!(policy.effective_bits(), R => {
        let (wf, mut report, converged) = if optimize {
            if alpha.is_some() || beta.is_some() {
                return Err(usage("--alpha/--beta cannot be combined with --optimize"));
            }
            ctx.record("start", start);
            ctx.record("budget", budget);
            let opt = optimize_parameters::<R>(&system, omega, (start, start), budget, &policy).map_err(computation)?;
            let report = json!({
                "evaluations": opt.evaluations,
                "optimizer_converged": opt.converged,
                "virial_ratio": opt.virial_ratio().to_digits(12),
            });
            (opt.wavefunction(&system), report, opt.converged)
        } else {
            let (Some(al), Some(be)) = (alpha, beta) else {
                return Err(usage("--alpha and --beta must be given together"));
            };
            ctx.record("alpha", al);
            ctx.record("beta", be);
            let basis = BasisSpec::new(omega, R::from_f64(al), R::from_f64(be)).map_err(usage)?;
            let sol = solve_system(&system, &basis, 1, &policy, Some(energy_lower_bound(&system)))
                .map_err(computation)?;
            let root = &sol.roots[0];
            let wf = Wavefunction {
                system,
                basis,
                coefficients: root.coefficients.clone(),
                energy: root.energy,
                metadata: Default::default(),
            };
            let report = json!({
                "virial_ratio": (sol.potential[0] / root.energy).to_digits(12),
            });
            (wf, report, true)
        };
        let mut wf = wf;
        wf.metadata.insert("manifest".into(), ctx.manifest_path.display().to_string());
        wf.metadata.insert("library_version".into(), hylleraas::VERSION.into());
        let fields = report.as_object_mut().expect("object");
        fields.insert("system".into(), Value::String(system.to_string()));
        fields.insert("omega".into(), json!(omega));
        fields.insert("basis_size".into(), json!(wf.basis.len()));
        fields.insert("alpha".into(), Value::String(wf.basis.alpha.to_digits(16)));
        fields.insert("beta".into(), Value::String(wf.basis.beta.to_digits(16)));
        fields.insert("energy".into(), Value::String(wf.energy.to_digits(16)));
        fields.insert("precision_bits".into(), json!(R::BITS));
        fields.insert("manifest".into(), Value::String(ctx.manifest_path.display().to_string()));
        let mut outcome = Outcome {
            stdout: json_text(&report),
            files: Vec::new(),
            converged,
        };
        if let Some(p) = out {
            let mut archive = wf.to_json();
            archive.push('\n');
            outcome.files.push((p.clone(), archive.into_bytes()));
        }
        Ok(outcome)
    })
}

pub fn entropy(ctx: &mut Context, a: &EntropyArgs, out: Option<&PathBuf>) -> Result<Outcome, CliError> {
    let path: PathBuf = required(ctx.config.merge(a.wavefunction.clone(), "wavefunction")?, "wavefunction")?;
    let order: Option<usize> = ctx.config.merge(a.order, "order")?;
    let scale: Option<f64> = ctx.config.merge(a.scale, "scale")?;
    if let Some(o) = order {
        ctx.record("order", o);
    }
    if let Some(s) = scale {
        ctx.record("scale", s);
    }
    let result = with_archive!(ctx, &path, wf => shannon_entropy(&wf, order, scale).map_err(computation)?);
    let doc = json!({
        "S_r": result.s_r.to_digits(12),
        "norm_residual": format!("{:.3e}", result.norm_residual),
        "order": result.quadrature_order,
        "scale": format!("{}", result.scale),
        "converged": result.converged,
        "manifest": ctx.manifest_path.display().to_string(),
    });
    Ok(emit(json_text(&doc), out, result.converged))
}

pub fn density(ctx: &mut Context, a: &DensityArgs, out: Option<&PathBuf>) -> Result<Outcome, CliError> {
    let path: PathBuf = required(ctx.config.merge(a.wavefunction.clone(), "wavefunction")?, "wavefunction")?;
    let rmax: f64 = ctx.config.merge(a.rmax, "rmax")?.unwrap_or(10.0);
    let points: usize = ctx.config.merge(a.points, "points")?.unwrap_or(200);
    if points == 0 {
        return Err(usage("--points must be positive"));
    }
    ctx.record("rmax", rmax);
    ctx.record("points", points);
    let manifest = ctx.manifest_path.display().to_string();
    let csv = with_archive!(ctx, &path, wf => {
        let rows = radial_profile(&wf, rmax, points).map_err(usage)?;
        let mut s = format!("# manifest: {manifest}\nr,rho,4*pi*r^2*rho\n");
        for (r, rho, shell) in rows {
            let _ = writeln!(s, "{},{},{}", r.to_digits(12), rho.to_digits(16), shell.to_digits(16));
        }
        s
    });
    Ok(emit(csv, out, true))
}

pub fn expect(ctx: &mut Context, a: &ExpectArgs, out: Option<&PathBuf>) -> Result<Outcome, CliError> {
    let path: PathBuf = required(ctx.config.merge(a.wavefunction.clone(), "wavefunction")?, "wavefunction")?;
    let manifest = ctx.manifest_path.display().to_string();
    let doc = with_archive!(ctx, &path, wf => {
        let e = expectations(&wf).map_err(computation)?;
        json!({
            "system": wf.system.to_string(),
            "omega": wf.basis.omega,
            "r1": e.r1.to_digits(16),
            "r12": e.r12.to_digits(16),
            "norm": e.norm.to_digits(16),
            "manifest": manifest,
        })
    });
    Ok(emit(json_text(&doc), out, true))
}

pub fn scan(ctx: &mut Context, a: &ScanArgs, out: Option<&PathBuf>) -> Result<Outcome, CliError> {
    let c = &ctx.config;
    let d = ScanConfig::default();
    let strategy: String = c.merge(a.strategy.clone(), "strategy")?.unwrap_or(d.strategy.to_string());
    let format: String = c.merge(a.format.clone(), "format")?.unwrap_or("csv".into());
    let config = ScanConfig {
        z_from: c.merge(a.from, "from")?.unwrap_or(d.z_from),
        z_to: c.merge(a.to, "to")?.unwrap_or(d.z_to),
        z_step: c.merge(a.step, "step")?.unwrap_or(d.z_step),
        omega: c.merge(a.omega, "omega")?.unwrap_or(d.omega),
        strategy: strategy.parse().map_err(usage)?,
        entropy_order: c.merge(a.order, "order")?,
        budget: c.merge(a.budget, "budget")?.unwrap_or(d.budget),
        tracked_roots: c.merge(a.roots, "roots")?.unwrap_or(d.tracked_roots),
        precision: ctx.policy,
        ..d
    };
    let table_format: TableFormat = format.parse().map_err(usage)?;
    let keep_going = c.switch(a.keep_going, "keep_going")?;
    config.validate().map_err(usage)?;
    for (k, v) in [
        ("from", config.z_from.to_string()),
        ("to", config.z_to.to_string()),
        ("step", config.z_step.to_string()),
        ("omega", config.omega.to_string()),
        ("strategy", config.strategy.to_string()),
        ("budget", config.budget.to_string()),
        ("roots", config.tracked_roots.to_string()),
        ("format", format.clone()),
        ("keep_going", keep_going.to_string()),
        ("z_critical", config.z_critical.to_string()),
    ] {
        ctx.record(k, v);
    }
    if let Some(o) = config.entropy_order {
        ctx.record("order", o);
    }
    let rows = with_real!(config.precision.effective_bits(), R => {
        scan_z_with::<R>(&config, |row| {
            eprintln!("Z = {:.6}  E = {:.10}  S_r = {:.6}  {}", row.z, row.energy, row.s_r, row.regime);
        })
        .map_err(usage)?
    });
    let manifest = ctx.manifest_path.display().to_string();
    let doc = match table_format {
        TableFormat::Csv => format!("# manifest: {manifest}\n{}", emit_table(&rows, table_format)),
        TableFormat::Json => {
            let table: Value = serde_json::from_str(&emit_table(&rows, table_format)).expect("table is json");
            json_text(&json!({ "manifest": manifest, "rows": table }))
        }
    };
    let all = rows.iter().all(|r| r.converged());
    Ok(emit(doc, out, all || keep_going))
}

pub fn gl_nodes(ctx: &mut Context, a: &GlArgs, out: Option<&PathBuf>) -> Result<Outcome, CliError> {
    let order: usize = required(ctx.config.merge(a.order, "order")?, "order")?;
    let scale: f64 = ctx.config.merge(a.scale, "scale")?.unwrap_or(1.0);
    if !(scale > 0.0) {
        return Err(usage("--scale must be positive"));
    }
    ctx.record("order", order);
    ctx.record("scale", scale);
    let manifest = ctx.manifest_path.display().to_string();
    let csv = with_real!(ctx.policy.effective_bits(), R => {
        let rule = QuadratureRule::<R>::gauss_laguerre(order).map_err(usage)?;
        let s = R::from_f64(scale);
        let mut text = format!("# manifest: {manifest}\nindex,node,weight,r,r_weight\n");
        for (i, ((x, w), sw)) in rule.nodes().iter().zip(rule.weights()).zip(rule.scaled_weights()).enumerate() {
            let _ = writeln!(
                text,
                "{i},{},{},{},{}",
                x.to_decimal(),
                w.to_decimal(),
                (*x / s).to_decimal(),
                (*sw / s).to_decimal()
            );
        }
        text
    });
    Ok(emit(csv, out, true))
}

const VALIDATE_SEED: u64 = 0x4879_6c6c;

fn check(report: &mut String, name: &str, ok: bool, detail: String) -> bool {
    let _ = writeln!(report, "{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

pub fn validate(ctx: &mut Context, a: &ValidateArgs, out: Option<&PathBuf>) -> Result<Outcome, CliError> {
    type F = BigFloat<4>;
    let samples: usize = ctx.config.merge(a.integral_samples, "integral_samples")?.unwrap_or(50);
    ctx.record("integral_samples", samples);
    ctx.record("seed", VALIDATE_SEED);
    let mut report = format!("# manifest: {}\n", ctx.manifest_path.display());
    let mut all = true;

    let mut rng = ChaCha8Rng::seed_from_u64(VALIDATE_SEED);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let (l, m, n) = (rng.gen_range(0..=6), rng.gen_range(0..=6), rng.gen_range(0..=6));
        let (da, db) = (rng.gen_range(0.3..=4.0), rng.gen_range(0.3..=4.0));
        let exact = base_integral(&IntegralKey::new(l, m, n, F::from_f64(da), F::from_f64(db)))
            .map_err(computation)?
            .to_f64();
        let approx = base_integral_oracle(&IntegralKey::new(l, m, n, da, db), exact.abs() * 1e-10).map_err(computation)?;
        worst = worst.max(((approx - exact) / exact).abs());
    }
    all &= check(
        &mut report,
        "integrals",
        worst <= 1e-8,
        format!("{samples} keys, worst relative deviation {worst:.2e}"),
    );

    for z in [1.0, 2.0, 3.0] {
        let system = SystemSpec::non_interacting(z);
        let basis = BasisSpec::new(3, F::from_f64(z), F::from_f64(z)).map_err(usage)?;
        let sol = solve_system(&system, &basis, 1, &ctx.policy, Some(energy_lower_bound(&system) - 1.0))
            .map_err(computation)?;
        let root = &sol.roots[0];
        let wf = Wavefunction {
            system,
            basis,
            coefficients: root.coefficients.clone(),
            energy: root.energy,
            metadata: Default::default(),
        };
        let de = (root.energy.to_f64() + z * z).abs();
        let s = shannon_entropy(&wf, None, None).map_err(computation)?;
        let ds = (s.s_r - (3.0 + std::f64::consts::PI.ln() - 3.0 * z.ln())).abs();
        all &= check(
            &mut report,
            &format!("non-interacting Z={z}"),
            de <= 1e-10 && ds <= 1e-8,
            format!("|dE| = {de:.2e}, |dS_r| = {ds:.2e}"),
        );
    }

    let he = SystemSpec::helium();
    let basis = BasisSpec::new(5, F::from_f64(1.8), F::from_f64(1.8)).map_err(usage)?;
    let sol = solve_system(&he, &basis, 1, &ctx.policy, Some(energy_lower_bound(&he))).map_err(computation)?;
    let wf = Wavefunction {
        system: he,
        basis,
        coefficients: sol.roots[0].coefficients.clone(),
        energy: sol.roots[0].energy,
        metadata: Default::default(),
    };
    for r in [0.1, 1.0, 5.0] {
        let exact = density_at(&wf, F::from_f64(r)).map_err(computation)?.to_f64();
        let approx = density_oracle(&wf, r, exact * 1e-11).map_err(computation)?;
        let dev = ((approx - exact) / exact).abs();
        all &= check(
            &mut report,
            &format!("density r={r}"),
            dev <= 1e-8,
            format!("relative deviation {dev:.2e}"),
        );
    }
    Ok(emit(report, out, all))
}
