mod args;

use std::fs;
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use ipszeta::dk::trial_rng;
use ipszeta::io::{
    coefficients_csv, dense_csv, histogram_csv, json_with_metadata, operator_from_json,
    operator_to_json, scan_csv, spectrum_csv, Metadata,
};
use ipszeta::verify::{
    verify_corollary, verify_lemma1, verify_prop1, verify_prop2, verify_stochastic,
    verify_theorem2, verify_theorem3, verify_unitary,
};
use ipszeta::zeta::qca_remark_check;
use ipszeta::{
    build_global_recursive, dk_local_operator, eig_dense, estimate_survival, histogram,
    power_traces, scan_critical, zeta_det, zeta_log_series, Caps, CriticalScanResult, DkParams,
    EigOptions, Error, LocalOperator, SpectrumMultiset, VerificationReport, C64,
};
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use args::{
    BuildArgs, Claim, Cli, Command, DkCommand, Format, ModelArgs, ModelKind, OpCommand,
    RandomFamily, ScanArgs, SpectrumArgs, SurviveArgs, VerifyArgs, ZetaArgs,
};

/// Process outcome other than success, mapped onto the exit-code contract.
enum Failure {
    /// Exit 1: a verification failed, or a scan found no bracket.
    Check(String),
    /// Exit 2: bad arguments, unreadable files, out-of-range parameters.
    Usage(String),
    /// Exit 3: size caps and eigensolver failures.
    Resource(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SizeCapExceeded { .. }
            | Error::NoConvergence { .. }
            | Error::ResidualTooLarge { .. } => Failure::Resource(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Resource(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let caps = Caps {
        dense: cli.max_dense,
        eigen: cli.max_eigen,
        matrix_free: cli.max_matrix_free,
    };
    match cli.command {
        Command::Op(OpCommand::Build(a)) => cmd_build(a, &caps),
        Command::Spectrum(a) => cmd_spectrum(a, &caps),
        Command::Zeta(a) => cmd_zeta(a, &caps),
        Command::Verify(a) => cmd_verify(a, &caps),
        Command::Dk(DkCommand::Survive(a)) => cmd_survive(a),
        Command::Dk(DkCommand::Scan(a)) => cmd_scan(a),
    }
}

fn write_output(path: Option<&Path>, text: &str) -> CmdResult {
    match path {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Resolves the model flags into a local operator and a site count, and
/// records them in `meta`.
fn resolve_model(
    model: &ModelArgs,
    n: Option<usize>,
    meta: Metadata,
) -> Result<(LocalOperator, usize, Metadata), Failure> {
    let (local, file_n, meta) = match model.model {
        ModelKind::Dk => {
            let params = DkParams::new(model.p, model.q)?;
            let meta = meta
                .with("model", "dk")
                .with("p", model.p)
                .with("q", model.q);
            (dk_local_operator(params), None, meta)
        }
        ModelKind::Qca => (
            LocalOperator::qca_rotation(model.xi),
            None,
            meta.with("model", "qca").with("xi", model.xi),
        ),
        ModelKind::Custom => {
            let path = model
                .file
                .as_ref()
                .ok_or_else(|| Failure::Usage("--model custom needs --file".into()))?;
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            let (local, file_n) = operator_from_json(&text)?;
            let meta = meta.with("model", "custom").with("file", path.display());
            (local, Some(file_n), meta)
        }
    };
    let n = n.or(file_n).unwrap_or(3);
    if n == 0 {
        return Err(Failure::Usage("n must be at least 1".into()));
    }
    Ok((local, n, meta.with("n", n)))
}

fn cmd_build(a: BuildArgs, caps: &Caps) -> CmdResult {
    let (local, n, meta) = resolve_model(&a.model, a.n, Metadata::new("op build"))?;
    let text = match a.output.format.unwrap_or(Format::Json) {
        Format::Json => {
            let doc: Value =
                serde_json::from_str(&operator_to_json(&local, n)).expect("operator JSON");
            json_with_metadata(&doc, &meta)
        }
        Format::Csv => {
            let m = build_global_recursive(&local, n, caps)?.into_dense()?;
            dense_csv(&m, &meta)
        }
    };
    write_output(a.output.out.as_deref(), &text)
}

fn dense_spectrum(
    local: &LocalOperator,
    n: usize,
    tol: f64,
    caps: &Caps,
) -> Result<SpectrumMultiset, Failure> {
    caps.check_eigen(n)?;
    let m = build_global_recursive(local, n, caps)?.into_dense()?;
    let opts = EigOptions {
        tol,
        max_dim: 1 << n,
        ..EigOptions::default()
    };
    Ok(eig_dense(&m, &opts)?)
}

fn cmd_spectrum(a: SpectrumArgs, caps: &Caps) -> CmdResult {
    let (local, n, meta) = resolve_model(&a.model, a.n, Metadata::new("spectrum"))?;
    let meta = meta.with("tol", format!("{:e}", a.tol));
    let spec = dense_spectrum(&local, n, a.tol, caps)?;
    if let Some(path) = &a.hist {
        let grid = histogram(&spec, a.bin)?;
        write_output(Some(path), &histogram_csv(&grid, &meta))?;
    }
    let text = match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => spectrum_csv(&spec, &meta),
        Format::Json => {
            let eigenvalues: Vec<Value> = spec
                .sorted()
                .entries()
                .iter()
                .map(|(z, m)| json!({ "re": z.re, "im": z.im, "multiplicity": m }))
                .collect();
            let payload = json!({
                "dim": spec.total(),
                "spectral_radius": spec.spectral_radius(),
                "worst_residual": spec.worst_residual(),
                "eigenvalues": eigenvalues,
            });
            json_with_metadata(&payload, &meta)
        }
    };
    write_output(a.output.out.as_deref(), &text)
}

fn cmd_zeta(a: ZetaArgs, caps: &Caps) -> CmdResult {
    let (local, n, meta) = resolve_model(&a.model, a.n, Metadata::new("zeta"))?;
    if a.rmax == Some(0) {
        return Err(Failure::Usage("--rmax must be at least 1".into()));
    }
    let Some(u_re) = a.u else {
        let r_max = a
            .rmax
            .ok_or_else(|| Failure::Usage("zeta needs --rmax, --u, or both".into()))?;
        let meta = meta.with("r_max", r_max);
        let scale = (1u64 << n) as f64;
        let coeffs: Vec<C64> = power_traces(&local, n, r_max, caps)?
            .into_iter()
            .map(|t| t / scale)
            .collect();
        let text = match a.output.format.unwrap_or(Format::Csv) {
            Format::Csv => coefficients_csv(&coeffs, &meta),
            Format::Json => json_with_metadata(&json!({ "coefficients": coeffs }), &meta),
        };
        return write_output(a.output.out.as_deref(), &text);
    };
    if a.output.format == Some(Format::Csv) {
        return Err(Failure::Usage(
            "zeta values are written as JSON; drop --format csv or --u".into(),
        ));
    }
    let u = C64::new(u_re, a.u_im);
    let r_max = a.rmax.unwrap_or(60);
    let meta = meta.with("r_max", r_max).with("u", u);
    let series = zeta_log_series(&local, n, r_max, caps)?;
    let value = series.evaluate(u);
    // the determinant form needs a dense eigensolve; past the cap only the
    // series is reported
    let determinant = match caps.check_eigen(n) {
        Ok(()) => serde_json::to_value(zeta_det(&local, n, u, caps)?).expect("JSON"),
        Err(_) => Value::Null,
    };
    let mut payload = json!({
        "u": u,
        "series": {
            "r_max": r_max,
            "rho_hat": series.rho_hat,
            "log_zeta": value.log_zeta,
            "zeta": value.zeta(),
            "truncation_bound": value.truncation_bound,
        },
        "determinant": determinant,
    });
    if a.rmax.is_some() {
        payload["coefficients"] = json!(series.coeffs);
    }
    write_output(
        a.output.out.as_deref(),
        &json_with_metadata(&payload, &meta),
    )
}

fn claim_name(claim: Claim) -> String {
    claim
        .to_possible_value()
        .expect("named claim")
        .get_name()
        .to_string()
}

fn default_tol(claim: Claim) -> f64 {
    match claim {
        Claim::Lemma1 | Claim::Corollary | Claim::Stochastic => 1e-12,
        Claim::Prop1 | Claim::Prop2 => 1e-10,
        Claim::Theorem2 | Claim::Theorem3 => 1e-7,
        Claim::Remark => 1e-9,
        Claim::Unitary => 1e-10,
    }
}

fn random_local(family: RandomFamily, seed: u64, trial: u64) -> LocalOperator {
    let mut rng = trial_rng(seed, trial);
    match family {
        RandomFamily::Ca => LocalOperator::random_ca(&mut rng),
        RandomFamily::Pca => LocalOperator::random_pca(&mut rng),
        RandomFamily::Qca => LocalOperator::random_qca(&mut rng),
        RandomFamily::General => LocalOperator::random_general(&mut rng),
        RandomFamily::T => {
            let t: f64 = rng.gen_range(-1.0..1.0);
            LocalOperator::random_t_condition(&mut rng, t)
        }
    }
}

fn check_claim(
    claim: Claim,
    local: &LocalOperator,
    n: usize,
    r_max: usize,
    caps: &Caps,
    tol: f64,
) -> Result<VerificationReport, Error> {
    match claim {
        Claim::Lemma1 => verify_lemma1(local, n, caps, tol),
        Claim::Corollary => verify_corollary(local, n, caps, tol),
        Claim::Prop1 => verify_prop1(local, n, caps, tol),
        Claim::Prop2 => verify_prop2(local, n, caps, tol),
        Claim::Theorem2 => verify_theorem2(local, n, caps, tol),
        Claim::Theorem3 => {
            let (spectral, coeffs) = verify_theorem3(local, n, r_max, caps, tol)?;
            Ok(VerificationReport::merge(
                &[spectral, coeffs],
                "theorem3",
                n,
                tol,
            ))
        }
        Claim::Stochastic => verify_stochastic(local, n, caps, tol),
        Claim::Unitary => verify_unitary(local, n, caps, tol),
        Claim::Remark => unreachable!("remark is checked per angle"),
    }
}

/// The remark concerns the rotation QCA only: coefficients against
/// `cos(r xi)^(n-1)` plus unitarity of `Q_n`.
fn check_remark(
    xi: f64,
    n: usize,
    r_max: usize,
    caps: &Caps,
    tol: f64,
) -> Result<VerificationReport, Error> {
    let coeffs = qca_remark_check(xi, n, r_max, caps)?;
    let coeffs = VerificationReport::new("remark-coefficients", n, tol, coeffs.worst_residual)
        .with_note(coeffs.note.unwrap_or_default());
    let unitary = verify_unitary(
        &LocalOperator::qca_rotation(xi),
        n,
        caps,
        default_tol(Claim::Unitary),
    )?;
    Ok(VerificationReport::merge(
        &[coeffs, unitary],
        "remark",
        n,
        tol,
    ))
}

fn cmd_verify(a: VerifyArgs, caps: &Caps) -> CmdResult {
    let name = claim_name(a.claim);
    let tol = a.tol.unwrap_or_else(|| default_tol(a.claim));
    if a.n == 0 || a.trials == 0 {
        return Err(Failure::Usage("--n and --trials must be at least 1".into()));
    }
    let mut meta = Metadata::new("verify")
        .with("claim", &name)
        .with("n", a.n)
        .with("tol", format!("{tol:e}"))
        .with("seed", a.seed);
    if matches!(a.claim, Claim::Theorem3 | Claim::Remark) {
        meta = meta.with("r_max", a.rmax);
    }

    let reports: Vec<VerificationReport> = match a.random {
        Some(family) => {
            if a.claim == Claim::Remark && family != RandomFamily::Qca {
                return Err(Failure::Usage("remark accepts only --random qca".into()));
            }
            meta = meta
                .with(
                    "random",
                    family.to_possible_value().expect("named family").get_name(),
                )
                .with("trials", a.trials);
            (0..a.trials as u64)
                .into_par_iter()
                .map(|trial| {
                    let report = if a.claim == Claim::Remark {
                        let xi = trial_rng(a.seed, trial).gen_range(0.0..std::f64::consts::PI);
                        check_remark(xi, a.n, a.rmax, caps, tol)?
                    } else {
                        check_claim(
                            a.claim,
                            &random_local(family, a.seed, trial),
                            a.n,
                            a.rmax,
                            caps,
                            tol,
                        )?
                    };
                    Ok(report.with_seed(a.seed))
                })
                .collect::<Result<_, Error>>()?
        }
        None => {
            if a.claim == Claim::Remark {
                meta = meta.with("xi", a.model.xi);
                vec![check_remark(a.model.xi, a.n, a.rmax, caps, tol)?]
            } else {
                let (local, n, model_meta) = resolve_model(&a.model, Some(a.n), meta)?;
                meta = model_meta;
                vec![check_claim(a.claim, &local, n, a.rmax, caps, tol)?]
            }
        }
    };

    let mut summary = VerificationReport::merge(&reports, &name, a.n, tol);
    summary.seed = Some(a.seed);
    let trials: Vec<Value> = reports
        .iter()
        .enumerate()
        .map(|(idx, r)| {
            let mut v = serde_json::to_value(r).expect("JSON");
            v["trial"] = json!(idx);
            v
        })
        .collect();
    let failed = reports.iter().filter(|r| !r.pass).count();
    let payload = json!({
        "claim": name,
        "pass": summary.pass,
        "failed_trials": failed,
        "worst_residual": summary.worst_residual,
        "summary": summary,
        "trials": trials,
    });
    write_output(a.out.as_deref(), &json_with_metadata(&payload, &meta))?;

    match reports.iter().position(|r| !r.pass) {
        None => Ok(()),
        Some(first) => Err(Failure::Check(format!(
            "verify {name}: FAIL in {failed} of {} trial(s); worst residual {:e} (tol {tol:e}); seed {}, first failing trial {first}",
            reports.len(),
            summary.worst_residual,
            a.seed,
        ))),
    }
}

fn cmd_survive(a: SurviveArgs) -> CmdResult {
    let params = DkParams::new(a.p, a.q)?;
    let est = estimate_survival(params, &a.seed_set, a.t, a.trials, a.seed)?;
    let seed_set: Vec<String> = est.seed_set.iter().map(i64::to_string).collect();
    let meta = Metadata::new("dk survive")
        .with("p", a.p)
        .with("q", a.q)
        .with("A", seed_set.join(","))
        .with("T", a.t)
        .with("trials", a.trials)
        .with("seed", a.seed)
        .with("rng", ipszeta::dk::RNG_NAME);
    let text = match a.output.format.unwrap_or(Format::Json) {
        Format::Json => json_with_metadata(&est, &meta),
        Format::Csv => format!(
            "{}survived,trials,estimate,ci_lo,ci_hi\n{},{},{},{},{}\n",
            meta.csv_header(),
            est.survived,
            est.trials,
            est.estimate,
            est.ci[0],
            est.ci[1]
        ),
    };
    write_output(a.output.out.as_deref(), &text)
}

fn p_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>, Failure> {
    if !(step > 0.0) || !(to >= from) || !from.is_finite() || !to.is_finite() {
        return Err(Failure::Usage(
            "need --p-step > 0 and --p-to >= --p-from".into(),
        ));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    // rounding keeps grid values such as 0.45 free of accumulated ulps
    Ok((0..count)
        .map(|i| ((from + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

fn cmd_scan(a: ScanArgs) -> CmdResult {
    let grid = p_grid(a.p_from, a.p_to, a.p_step)?;
    let meta = Metadata::new("dk scan")
        .with("q", a.q)
        .with("p_from", a.p_from)
        .with("p_to", a.p_to)
        .with("p_step", a.p_step)
        .with("T", a.t)
        .with("trials", a.trials)
        .with("threshold", a.threshold)
        .with("seed", a.seed)
        .with("rng", ipszeta::dk::RNG_NAME);
    let format = a.output.format.unwrap_or(Format::Csv);
    let render = |scan: &CriticalScanResult| match format {
        Format::Csv => scan_csv(scan, &meta),
        Format::Json => json_with_metadata(scan, &meta),
    };
    match scan_critical(a.q, &grid, a.t, a.trials, a.threshold, a.seed) {
        Ok(scan) => write_output(a.output.out.as_deref(), &render(&scan)),
        Err(Error::NoBracket { threshold, points }) => {
            // the points are still worth keeping; the bracket is reported as NaN
            let scan = CriticalScanResult {
                q: a.q,
                horizon: a.t,
                trials: a.trials,
                threshold,
                seed: a.seed,
                points,
                bracket: (f64::NAN, f64::NAN),
            };
            write_output(a.output.out.as_deref(), &render(&scan))?;
            Err(Failure::Check(format!(
                "dk scan: no bracket, the estimate never crosses {threshold} on the grid"
            )))
        }
        Err(e) => Err(e.into()),
    }
}
