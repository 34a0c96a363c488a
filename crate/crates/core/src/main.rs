#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sgl_mixing::config::RunConfig;
use sgl_mixing::doeblin::{
    condition_b, contraction_check, format_certificate, geometric_bound_check, minorization,
    parse_kernel, small_set_search,
};
use sgl_mixing::integrator::{
    ode_comparison, write_trajectory_rows, StepForcing, TRAJECTORY_CSV_COLUMNS,
};
use sgl_mixing::mixing::{self, EnsembleSpec, RateEstimate};
use sgl_mixing::{Error, Result};

#[derive(Parser)]
#[command(
    name = "sgl-mixing",
    version,
    about = "Stochastic Ginzburg-Landau ensembles and finite Doeblin checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Configuration file (`key = value` lines with `[section]` headers).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides `[model] seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for ensembles (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Write integer-time trajectory rows for every initial condition.
    Simulate,
    /// Moment table at `moment_time` and its uniformity verdict.
    Moments,
    /// Law-distance decay between the first two initial conditions.
    Mixing,
    /// Certificates, contraction and geometric bound for a kernel file.
    Doeblin,
    /// Scalar comparison ODE against both a-priori bounds.
    Odecheck,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Moments => "moments",
            Self::Mixing => "mixing",
            Self::Doeblin => "doeblin",
            Self::Odecheck => "odecheck",
        }
    }
}

/// Names of the checks that did not pass.
type Failures = Vec<String>;

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn ensemble_spec(cfg: &RunConfig, t_final: f64) -> Result<EnsembleSpec> {
    let mut params = cfg.model.params()?;
    params.t_final = t_final;
    let e = &cfg.ensemble;
    EnsembleSpec::from_conditions(&e.initial, e.n_traj, params, e.gamma, e.p)
}

fn simulate(cfg: &RunConfig, header: &str, out: &Path) -> Result<Failures> {
    let spec = ensemble_spec(cfg, cfg.model.t_final)?;
    let groups = spec.simulate_all()?;
    let mut w = create(out, "trajectories.csv")?;
    write!(w, "{header}")?;
    writeln!(w, "{TRAJECTORY_CSV_COLUMNS}")?;
    let mut failures = Vec::new();
    for group in &groups {
        for r in group {
            match r {
                Ok(traj) => write_trajectory_rows(&mut w, traj, spec.gamma)?,
                Err(e) => failures.push(format!("trajectory_aborted: {e}")),
            }
        }
    }
    w.flush()?;
    Ok(failures)
}

fn moments(cfg: &RunConfig, header: &str, out: &Path) -> Result<Failures> {
    let e = &cfg.ensemble;
    let spec = ensemble_spec(cfg, cfg.model.t_final.max(e.moment_time))?;
    let table = mixing::moment_bound(&spec, e.moment_time, e.criteria())?;
    let mut w = create(out, "moments.csv")?;
    write!(w, "{header}")?;
    table.write_csv(&mut w)?;
    w.flush()?;
    let mut summary = table.summary_block();
    let mut failures = Vec::new();
    if !table.verdict.passed {
        failures.push("moment_uniformity".to_string());
    }
    let aborted: usize = table.rows.iter().map(|r| r.aborted).sum();
    if aborted > 0 {
        failures.push(format!("trajectories_aborted: {aborted}"));
    }
    if let Some((t1, t2)) = e.window {
        let sup = mixing::sup_window_bound(&spec, t1, t2, e.criteria())?;
        for (i, est) in sup.estimates.iter().enumerate() {
            summary.push_str(&format!(
                "sup_window_{i} = {} +- {}\n",
                est.mean, est.stderr
            ));
        }
        summary.push_str(&format!("sup_window_uniform = {}\n", sup.verdict.passed));
        if !sup.verdict.passed {
            failures.push("sup_window_uniformity".to_string());
        }
    }
    print!("{summary}");
    let mut s = create(out, "moments_summary.txt")?;
    write!(s, "{header}{summary}")?;
    s.flush()?;
    Ok(failures)
}

fn mixing_cmd(cfg: &RunConfig, header: &str, out: &Path) -> Result<Failures> {
    let e = &cfg.ensemble;
    let spec = ensemble_spec(cfg, e.horizon)?;
    let report = mixing::mixing_experiment(&spec, e.bootstrap)?;
    let mut w = create(out, "mixing.csv")?;
    write!(w, "{header}")?;
    report.write_csv(&mut w)?;
    w.flush()?;
    let mut m = create(out, "mixing_moments.csv")?;
    write!(m, "{header}")?;
    let table = mixing::MomentTable {
        gamma: spec.gamma,
        p: spec.p,
        rows: report.moments.clone(),
        verdict: mixing::uniformity(&[], e.criteria()),
    };
    table.write_csv(&mut m)?;
    m.flush()?;
    let summary = report.summary_block();
    print!("{summary}");
    let mut s = create(out, "mixing_summary.txt")?;
    write!(s, "{header}{summary}")?;
    s.flush()?;
    let mut failures = Vec::new();
    if matches!(report.rate, RateEstimate::NotIdentifiable(_)) {
        failures.push("rate_not_identifiable".to_string());
    }
    if !(report.lambda_ci.0 > 0.0) {
        failures.push("lambda_ci_low_not_positive".to_string());
    }
    Ok(failures)
}

fn doeblin(cfg: &RunConfig, header: &str, out: &Path) -> Result<Failures> {
    let d = &cfg.doeblin;
    let path = d
        .kernel
        .as_ref()
        .ok_or_else(|| Error::InvalidParams("[doeblin] kernel = PATH is required".into()))?;
    let kernel = parse_kernel(&std::fs::read_to_string(path)?)?;
    let n = kernel.n();
    let set = d.set.clone().unwrap_or_else(|| (0..n).collect());
    let mut text = String::new();
    let mut failures = Vec::new();

    text.push_str("[minorization]\n");
    match minorization(&kernel, &set, d.m)? {
        Some(mut cert) => {
            if d.m == 1 {
                let dp = condition_b(&kernel, &set)?;
                if dp > 0.0 {
                    cert.delta_prime = Some(dp);
                }
            }
            cert.verify(&kernel)?;
            text.push_str(&format_certificate(&cert));
            if let Some(dp) = cert.delta_prime {
                let c = contraction_check(&kernel, &cert)?;
                text.push_str(&format!(
                    "[contraction]\nfactor = {}\nworst_ratio = {}\nlower_bound_slack = {}\nholds = {}\n",
                    c.factor,
                    c.worst_ratio,
                    c.lower_bound_slack,
                    c.holds()
                ));
                if !c.holds() {
                    failures.push("two_step_contraction".to_string());
                }
                let eps = cert.delta * dp;
                if eps < 1.0 {
                    let g = geometric_bound_check(&kernel, eps, d.horizon)?;
                    let mut w = create(out, "geometric.csv")?;
                    write!(w, "{header}")?;
                    writeln!(w, "n,distance,bound")?;
                    for (k, (dist, b)) in g.distances.iter().zip(&g.bounds).enumerate() {
                        writeln!(w, "{k},{dist:.17e},{b:.17e}")?;
                    }
                    w.flush()?;
                    text.push_str(&format!(
                        "[geometric]\nhorizon = {}\nholds = {}\n",
                        d.horizon,
                        g.holds()
                    ));
                    if !g.holds() {
                        failures.push("geometric_bound".to_string());
                    }
                }
            } else {
                text.push_str("condition_b = false\n");
            }
        }
        None => {
            text.push_str("found = false\n");
            failures.push("no_minorization".to_string());
        }
    }

    text.push_str("[small_set]\n");
    let mu0 = d.mu0.resolve(n)?;
    match small_set_search(&kernel, &mu0)? {
        Some(found) => {
            text.push_str(&format_certificate(&found.certificate));
            text.push_str(&format!(
                "D = {}\nE = {}\ndensity_bound = {}\n",
                list(&found.d),
                list(&found.e),
                found.density_bound
            ));
        }
        None => text.push_str("found = false\n"),
    }
    print!("{text}");
    let mut w = create(out, "certificate.txt")?;
    write!(w, "{header}{text}")?;
    w.flush()?;
    Ok(failures)
}

fn list(xs: &[usize]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn odecheck(cfg: &RunConfig, header: &str, out: &Path) -> Result<Failures> {
    let o = &cfg.odecheck;
    let forcing = StepForcing::new(&o.forcing)?;
    let r = ode_comparison(o.q, o.c, o.y0, &forcing, o.t)?;
    let text = format!(
        "y = {}\nliteral_bound = {}\ncorrected_bound = {}\nliteral_holds = {}\ncorrected_holds = {}\n",
        r.y, r.literal_bound, r.corrected_bound, r.literal_holds, r.corrected_holds
    );
    print!("{text}");
    let mut w = create(out, "odecheck.txt")?;
    write!(w, "{header}{text}")?;
    w.flush()?;
    Ok(if r.corrected_holds {
        Vec::new()
    } else {
        vec!["corrected_bound".to_string()]
    })
}

fn run(cli: &Cli) -> Result<Failures> {
    let mut cfg = match &cli.common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.common.seed {
        cfg.model.seed = seed;
    }
    if let Some(threads) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidParams(e.to_string()))?;
    }
    std::fs::create_dir_all(&cli.common.out)?;
    let header = cfg.header(&format!(
        "{} {}",
        env!("CARGO_PKG_VERSION"),
        cli.command.name()
    ));
    let out = cli.common.out.as_path();
    match cli.command {
        Command::Simulate => simulate(&cfg, &header, out),
        Command::Moments => moments(&cfg, &header, out),
        Command::Mixing => mixing_cmd(&cfg, &header, out),
        Command::Doeblin => doeblin(&cfg, &header, out),
        Command::Odecheck => odecheck(&cfg, &header, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for f in &failures {
                eprintln!("failure = {f}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            match &e {
                Error::Spectrum(v) => eprintln!("error = assumption_violation\n{v}"),
                other => eprintln!("error = {other}"),
            }
            ExitCode::from(2)
        }
    }
}
