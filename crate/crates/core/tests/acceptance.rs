//! Acceptance criteria 1-9, one `PASS`/`FAIL` line each.
//!
//! Runs as a plain binary (`harness = false`) so the verdicts print in order.
//! Pass criterion numbers as arguments to run a subset:
//! `cargo test --test acceptance -- 2 8`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use num::{BigInt, BigRational, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sgl_mixing::config::RunConfig;
use sgl_mixing::doeblin::{
    doeblin_certificate, geometric_bound_check, minorization, small_set_search, FiniteKernel,
    SmallSetCertificate,
};
use sgl_mixing::field::{eigenvalue, wavenumber};
use sgl_mixing::integrator::{ode_comparison, StepForcing};
use sgl_mixing::mixing::EnsembleSpec;
use sgl_mixing::NoiseSpectrum;

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

// ---------------------------------------------------------------------------
// CLI runs shared by criteria 1, 6, 7 and 9
// ---------------------------------------------------------------------------

const SEED: u64 = 20240601;

const OU_CONFIG: &str = "\
[model]
poly = linear
t_final = 1
[ensemble]
initial = 0.5, 0.3, -0.2, 0.1, 0.05, -0.05, 0.02, 0.01, 0.01, -0.01
n_traj = 10000
";

const MOMENTS_CONFIG: &str = "\
[ensemble]
initial = zero
initial = scaled-random:100
initial = scaled-random:10000
n_traj = 1000
moment_time = 1
gamma = 1
p = 2
";

const MIXING_CONFIG: &str = "\
[ensemble]
initial = zero
initial = scaled-random:100
n_traj = 2000
horizon = 10
gamma = 1
p = 2
";

struct Job {
    name: &'static str,
    subcommand: &'static str,
    config: &'static str,
}

const OU_JOB: Job = Job {
    name: "ou",
    subcommand: "simulate",
    config: OU_CONFIG,
};
const MOMENTS_JOB: Job = Job {
    name: "moments",
    subcommand: "moments",
    config: MOMENTS_CONFIG,
};
const MIXING_JOB: Job = Job {
    name: "mixing",
    subcommand: "mixing",
    config: MIXING_CONFIG,
};

struct Workdir {
    root: PathBuf,
}

impl Workdir {
    fn new() -> Self {
        let root =
            std::env::temp_dir().join(format!("sgl_mixing_acceptance_{}", std::process::id()));
        fs::create_dir_all(&root).unwrap();
        Self { root }
    }

    /// Runs `job` into `<root>/<tag>/<name>` and returns that directory.
    fn run(&self, job: &Job, tag: &str, threads: Option<usize>) -> (PathBuf, Option<i32>) {
        let cfg = self.root.join(format!("{}.cfg", job.name));
        fs::write(&cfg, job.config).unwrap();
        let out = self.root.join(tag).join(job.name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_sgl-mixing"));
        cmd.arg(job.subcommand)
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .arg("--seed")
            .arg(SEED.to_string());
        if let Some(t) = threads {
            cmd.arg("--threads").arg(t.to_string());
        }
        let status = cmd.output().expect("CLI runs");
        (out, status.status.code())
    }
}

impl Drop for Workdir {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.root);
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().filter(|l| !l.starts_with('#'))
}

fn summary(path: &Path) -> BTreeMap<String, String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

// ---------------------------------------------------------------------------
// 1. OU exactness
// ---------------------------------------------------------------------------

fn criterion_1(work: &Workdir) -> Verdict {
    let (dir, code) = work.run(&OU_JOB, "first", None);
    if code != Some(0) {
        return Verdict::new(false, format!("simulate exited with {code:?}"));
    }
    // The CSV carries only the first coefficients, all unforced here, so the
    // statistics come from the library run of the same resolved config. Its
    // leading coefficients must reproduce the CLI file exactly.
    let mut cfg = RunConfig::parse(OU_CONFIG).unwrap();
    cfg.model.seed = SEED;
    let e = &cfg.ensemble;
    let spec = EnsembleSpec::from_conditions(
        &e.initial,
        e.n_traj,
        cfg.model.params().unwrap(),
        e.gamma,
        e.p,
    )
    .unwrap();
    let trajs: Vec<_> = spec
        .simulate_all()
        .unwrap()
        .remove(0)
        .into_iter()
        .map(Result::unwrap)
        .collect();

    let text = fs::read_to_string(dir.join("trajectories.csv")).unwrap();
    let mut lines = data_lines(&text);
    let columns: Vec<&str> = lines.next().unwrap().split(',').collect();
    let first_coeff = columns.iter().position(|c| *c == "c0").unwrap();
    let mut csv_mismatch = 0usize;
    for (line, (traj, t)) in lines.zip(
        trajs
            .iter()
            .flat_map(|tr| (0..tr.states.len()).map(move |t| (tr, t))),
    ) {
        let fields: Vec<&str> = line.split(',').skip(first_coeff).collect();
        for (f, c) in fields.iter().zip(traj.states[t].coeffs()) {
            csv_mismatch += usize::from(f.parse::<f64>().unwrap() != *c);
        }
    }

    let x0 = spec.initial[0].coeffs().to_vec();
    let size = x0.len();
    let n_modes = size / 2;
    let mut sum = vec![0.0; size];
    let mut sum_sq = vec![0.0; size];
    for traj in &trajs {
        for (i, v) in traj.states[1].coeffs().iter().enumerate() {
            sum[i] += v;
            sum_sq[i] += v * v;
        }
    }
    let n = trajs.len();
    let spectrum = NoiseSpectrum::default_degenerate(n_modes);
    let nf = n as f64;
    let (mut checked, mut worst_mean, mut worst_var) = (0, 0.0f64, 0.0f64);
    for i in 0..size {
        let k = wavenumber(i);
        let q = spectrum.q[k];
        if q == 0.0 {
            continue;
        }
        let ell = eigenvalue(k);
        let mean_exact = (-ell).exp() * x0[i];
        let var_exact = q * q * (1.0 - (-2.0 * ell).exp()) / (2.0 * ell);
        let mean = sum[i] / nf;
        let var = (sum_sq[i] - nf * mean * mean) / (nf - 1.0);
        let se_mean = (var_exact / nf).sqrt();
        let se_var = var_exact * (2.0 / (nf - 1.0)).sqrt();
        worst_mean = worst_mean.max((mean - mean_exact).abs() / se_mean);
        worst_var = worst_var.max((var - var_exact).abs() / se_var);
        checked += 1;
    }
    Verdict::new(
        n == 10_000 && csv_mismatch == 0 && worst_mean <= 4.0 && worst_var <= 4.0 && checked == 2 * (n_modes - 3),
        format!(
            "{n} trajectories, {checked} forced coordinates, worst |z| mean {worst_mean:.2}, variance {worst_var:.2} \
             (limit 4), CSV mismatches {csv_mismatch}"
        ),
    )
}

// ---------------------------------------------------------------------------
// Random kernels for criteria 2-4
// ---------------------------------------------------------------------------

/// Row-stochastic kernel; with `sparse`, entries are zeroed with probability
/// 0.4 (diagonal kept so no row vanishes).
fn random_kernel(rng: &mut ChaCha8Rng, n: usize, sparse: bool) -> FiniteKernel {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|x| {
            let mut row: Vec<f64> = (0..n)
                .map(|y| {
                    if sparse && x != y && rng.random::<f64>() < 0.4 {
                        0.0
                    } else {
                        rng.random::<f64>() + 1e-3
                    }
                })
                .collect();
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
            row
        })
        .collect();
    FiniteKernel::from_rows(&rows).unwrap()
}

fn random_subset(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    loop {
        let set: Vec<usize> = (0..n).filter(|_| rng.random::<bool>()).collect();
        if !set.is_empty() {
            return set;
        }
    }
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

fn rows(k: &FiniteKernel) -> Vec<Vec<f64>> {
    (0..k.n()).map(|x| k.row(x).to_vec()).collect()
}

fn matpow(k: &FiniteKernel, m: usize) -> Vec<Vec<f64>> {
    let base = rows(k);
    let mut acc = base.clone();
    for _ in 1..m {
        acc = matmul(&acc, &base);
    }
    acc
}

// ---------------------------------------------------------------------------
// 2. Two-step contraction oracle
// ---------------------------------------------------------------------------

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut valid, mut drawn) = (0usize, 0usize);
    let mut worst_excess = f64::NEG_INFINITY;
    let mut lower_violations = 0usize;
    while valid < 10_000 {
        drawn += 1;
        let n = rng.random_range(2..=6);
        let k = random_kernel(&mut rng, n, drawn % 3 == 0);
        let set = random_subset(&mut rng, n);
        let Some(cert) = doeblin_certificate(&k, &set).unwrap() else {
            continue;
        };
        let Some(dp) = cert.delta_prime else {
            continue;
        };
        valid += 1;
        let p2 = matmul(&rows(&k), &rows(&k));
        // Dobrushin coefficient of P²: the exact sup of the TV ratio.
        let mut ratio: f64 = 0.0;
        for x in 0..n {
            for y in 0..n {
                let d: f64 = (0..n).map(|z| (p2[x][z] - p2[y][z]).abs()).sum::<f64>() / 2.0;
                ratio = ratio.max(d);
            }
        }
        let factor = 1.0 - cert.delta * dp;
        worst_excess = worst_excess.max(ratio - factor);
        // (P²δ_x)(z) ≥ δδ'ν(z) for every x, z; linearity covers all μ.
        for row in &p2 {
            for (z, v) in row.iter().enumerate() {
                if *v < cert.delta * dp * cert.nu[z] - 1e-15 {
                    lower_violations += 1;
                }
            }
        }
    }
    Verdict::new(
        worst_excess <= 1e-12 && lower_violations == 0,
        format!(
            "{valid} kernels ({drawn} drawn), max(ratio - (1 - δδ')) = {worst_excess:.3e}, lower-bound violations {lower_violations}"
        ),
    )
}

// ---------------------------------------------------------------------------
// 3. Minorization optimality
// ---------------------------------------------------------------------------

fn criterion_3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut accepted, mut tried, mut optimal_mismatch) = (0usize, 0usize, 0usize);
    for instance in 0..1000 {
        let n = rng.random_range(2..=6);
        let k = random_kernel(&mut rng, n, instance % 2 == 0);
        let set = random_subset(&mut rng, n);
        let m = rng.random_range(1..=3);
        let pm = matpow(&k, m);
        let minima: Vec<f64> = (0..n)
            .map(|y| set.iter().map(|&x| pm[x][y]).fold(f64::INFINITY, f64::min))
            .collect();
        let optimum: f64 = minima.iter().sum();
        let returned = minorization(&k, &set, m).unwrap();
        let delta = returned.as_ref().map_or(0.0, |c| c.delta);
        if (delta - optimum).abs() > 1e-12 {
            optimal_mismatch += 1;
        }
        for trial in 0..20 {
            let delta_tilde = if trial == 0 {
                delta + 1e-6
            } else {
                delta + rng.random::<f64>() * (1.0 - delta) + 1e-9
            };
            let nu_tilde: Vec<f64> = match (&returned, trial % 2) {
                // Sharpest competitor: the optimal shape with more mass.
                (Some(c), 0) => c.nu.clone(),
                _ => {
                    let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                    let s: f64 = w.iter().sum();
                    w.iter().map(|v| v / s).collect()
                }
            };
            let candidate = SmallSetCertificate {
                set: set.clone(),
                m,
                delta: delta_tilde,
                nu: nu_tilde,
                delta_prime: None,
            };
            tried += 1;
            if candidate.verify(&k).is_ok() {
                accepted += 1;
            }
        }
    }
    Verdict::new(
        accepted == 0 && optimal_mismatch == 0,
        format!("1000 instances, {tried} candidates above δ, {accepted} accepted, δ ≠ Σ column minima in {optimal_mismatch}"),
    )
}

// ---------------------------------------------------------------------------
// 4. Small-set construction
// ---------------------------------------------------------------------------

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut missing, mut invalid, mut below) = (0usize, 0usize, 0usize);
    let mut min_slack = f64::INFINITY;
    for _ in 0..1000 {
        let k = random_kernel(&mut rng, 5, false);
        let w: Vec<f64> = (0..5).map(|_| rng.random::<f64>() + 0.05).collect();
        let s: f64 = w.iter().sum();
        let mu0: Vec<f64> = w.iter().map(|v| v / s).collect();
        let Some(found) = small_set_search(&k, &mu0).unwrap() else {
            missing += 1;
            continue;
        };
        let cert = &found.certificate;
        if cert.verify(&k).is_err() || cert.m != 2 {
            invalid += 1;
        }
        let p2 = matmul(&rows(&k), &rows(&k));
        // μ0(v-cell)/8 recomputed from the returned cell.
        let v_mass: f64 = (0..5)
            .filter(|&y| found.v_cell.contains(&y))
            .map(|y| mu0[y])
            .sum();
        let bound = v_mass / 8.0;
        if (found.density_bound - bound).abs() > 1e-15 {
            invalid += 1;
        }
        for &x in &found.d {
            for &z in &found.e {
                let slack = p2[x][z] / mu0[z] - bound;
                min_slack = min_slack.min(slack);
                if slack < -1e-12 {
                    below += 1;
                }
            }
        }
        // The certificate's mass is the density bound integrated over E.
        let e_mass: f64 = found.e.iter().map(|&z| mu0[z]).sum();
        if (cert.delta - bound * e_mass).abs() > 1e-12 {
            invalid += 1;
        }
    }
    Verdict::new(
        missing == 0 && invalid == 0 && below == 0,
        format!(
            "1000 kernels, {missing} without certificate, {invalid} invalid, {below} density violations, min p² - μ0(V)/8 = {min_slack:.3e}"
        ),
    )
}

// ---------------------------------------------------------------------------
// 5. ODE comparison
// ---------------------------------------------------------------------------

fn criterion_5() -> Verdict {
    let forcings: [(&str, Vec<(f64, f64)>); 3] = [
        ("zero", vec![(0.0, 0.0)]),
        ("constant", vec![(0.0, 1.0)]),
        ("step", vec![(0.0, 2.0), (0.25, 0.0), (0.75, 0.5)]),
    ];
    let (mut total, mut corrected_fail, mut literal_fail, mut oracle_fail) = (0, 0, 0, 0);
    for q in [3u32, 5, 7] {
        for c in [0.5, 1.0, 2.0] {
            for y0 in [0.5, 2.0, 10.0, 100.0] {
                for t in [0.1, 0.5, 1.0, 2.0] {
                    for (name, pieces) in &forcings {
                        let f = StepForcing::new(pieces).unwrap();
                        let r = ode_comparison(q, c, y0, &f, t).unwrap();
                        total += 1;
                        corrected_fail += usize::from(!r.corrected_holds);
                        literal_fail += usize::from(!r.literal_holds);
                        if *name == "zero" {
                            let qf = q as f64;
                            let exact =
                                (y0.powf(1.0 - qf) + (qf - 1.0) * c * t).powf(-1.0 / (qf - 1.0));
                            if (r.y - exact).abs() > 1e-8 {
                                oracle_fail += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    let w = ode_comparison(3, 1.0, 10.0, &StepForcing::zero(), 0.5).unwrap();
    let witness =
        !w.literal_holds && (w.literal_bound - 0.8165).abs() < 1e-4 && (w.y - 0.99504).abs() < 1e-5;
    Verdict::new(
        corrected_fail == 0 && oracle_fail == 0 && witness,
        format!(
            "{total} instances, corrected fails {corrected_fail}, literal fails {literal_fail}, \
             integrator off closed form {oracle_fail}, witness literal {:.4} vs y {:.5}",
            w.literal_bound, w.y
        ),
    )
}

// ---------------------------------------------------------------------------
// 6. Uniform moments
// ---------------------------------------------------------------------------

fn criterion_6(work: &Workdir) -> Verdict {
    let (dir, code) = work.run(&MOMENTS_JOB, "first", None);
    if !matches!(code, Some(0 | 1)) {
        return Verdict::new(false, format!("moments exited with {code:?}"));
    }
    let text = fs::read_to_string(dir.join("moments.csv")).unwrap();
    let mut lines = data_lines(&text);
    let columns: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| columns.iter().position(|c| *c == name).unwrap();
    let (mean_c, se_c, norm_c, n_c) = (col("mean"), col("stderr"), col("initial_norm"), col("n"));
    let rows: Vec<(f64, f64, f64, usize)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[norm_c].parse().unwrap(),
                f[mean_c].parse().unwrap(),
                f[se_c].parse().unwrap(),
                f[n_c].parse().unwrap(),
            )
        })
        .collect();
    let z = 1.959_963_984_540_054;
    let mut max_ratio: f64 = 1.0;
    let mut overlap = true;
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            max_ratio = max_ratio.max(a.1 / b.1).max(b.1 / a.1);
            overlap &= (a.1 - b.1).abs() <= z * (a.2 + b.2);
        }
    }
    let norms_ok = rows.len() == 3
        && rows
            .iter()
            .zip([0.0, 1e2, 1e4])
            .all(|(r, x)| (r.0 - x).abs() <= 1e-9 * x.max(1.0))
        && rows.iter().all(|r| r.3 == 1000);
    let detail = rows
        .iter()
        .map(|r| format!("‖x‖={:.0e}: {:.6}±{:.6}", r.0, r.1, r.2))
        .collect::<Vec<_>>()
        .join(", ");
    Verdict::new(
        norms_ok && max_ratio <= 2.0 && overlap,
        format!("{detail}; max ratio {max_ratio:.3} (limit 2), CIs overlap {overlap}"),
    )
}

// ---------------------------------------------------------------------------
// 7. Exponential mixing witness
// ---------------------------------------------------------------------------

fn criterion_7(work: &Workdir) -> Verdict {
    let (dir, code) = work.run(&MIXING_JOB, "first", None);
    if !matches!(code, Some(0 | 1)) {
        return Verdict::new(false, format!("mixing exited with {code:?}"));
    }
    let s = summary(&dir.join("mixing_summary.txt"));
    let ci_low: f64 = s["lambda_ci_low"].parse().unwrap();
    let ci_high: f64 = s["lambda_ci_high"].parse().unwrap();
    let text = fs::read_to_string(dir.join("mixing.csv")).unwrap();
    let distances: BTreeMap<String, f64> = data_lines(&text)
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].parse().unwrap())
        })
        .collect();
    let (d1, d10) = (distances["1"], distances["10"]);
    let decay = d10 / d1;
    Verdict::new(
        ci_low > 0.0 && decay < 0.1,
        format!(
            "lambda = {} CI [{ci_low:.4}, {ci_high:.4}], d(1) = {d1:.4}, d(10) = {d10:.4}, ratio {decay:.3} (limit 0.1)",
            s["lambda"]
        ),
    )
}

// ---------------------------------------------------------------------------
// 8. Geometric bound, exact arithmetic
// ---------------------------------------------------------------------------

fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn criterion_8() -> Verdict {
    let p = [
        [rational(9, 10), rational(1, 10)],
        [rational(2, 10), rational(8, 10)],
    ];
    let stationary = [rational(2, 3), rational(1, 3)];
    let contraction = rational(7, 10);
    let kernel = FiniteKernel::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
    let float = geometric_bound_check(&kernel, 0.3, 50).unwrap();

    let mut laws = [
        [BigRational::from_integer(1.into()), BigRational::zero()],
        [BigRational::zero(), BigRational::from_integer(1.into())],
    ];
    let mut bound = rational(2, 1);
    let mut violations = 0;
    let mut worst_float_gap: f64 = 0.0;
    for n in 0..=50usize {
        if n > 0 {
            for law in laws.iter_mut() {
                let next = [
                    &law[0] * &p[0][0] + &law[1] * &p[1][0],
                    &law[0] * &p[0][1] + &law[1] * &p[1][1],
                ];
                *law = next;
            }
            if n % 2 == 0 {
                bound = &bound * &contraction;
            }
        }
        let mut worst = BigRational::zero();
        for law in &laws {
            let d = (&law[0] - &stationary[0]).abs() + (&law[1] - &stationary[1]).abs();
            if d > bound {
                violations += 1;
            }
            if d > worst {
                worst = d;
            }
        }
        let exact = to_f64(&worst);
        worst_float_gap = worst_float_gap.max((exact - float.distances[n]).abs());
    }
    Verdict::new(
        violations == 0 && float.holds() && worst_float_gap < 1e-12,
        format!("n = 0..50 from both states, {violations} exact violations, float vs exact gap {worst_float_gap:.2e}"),
    )
}

fn to_f64(r: &BigRational) -> f64 {
    // Scale to 60 bits, then divide in floating point.
    let scaled = (r * BigRational::from_integer(BigInt::from(1u64 << 60))).to_integer();
    scaled.to_string().parse::<f64>().unwrap() / (1u64 << 60) as f64
}

// ---------------------------------------------------------------------------
// 9. Determinism
// ---------------------------------------------------------------------------

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    if let Ok(entries) = fs::read_dir(dir) {
        for e in entries.flatten() {
            out.insert(
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            );
        }
    }
    out
}

fn criterion_9(work: &Workdir) -> Verdict {
    let mut compared = 0;
    let mut differing = Vec::new();
    for job in [&OU_JOB, &MOMENTS_JOB, &MIXING_JOB] {
        let first = work.root.join("first").join(job.name);
        if !first.exists() {
            work.run(job, "first", None);
        }
        // Different worker count on the rerun: results must not depend on it.
        let (second, _) = work.run(job, "second", Some(3));
        let (a, b) = (files(&first), files(&second));
        if a.is_empty() || a.keys().ne(b.keys()) {
            differing.push(format!("{}: file sets differ", job.name));
            continue;
        }
        for (name, bytes) in &a {
            compared += 1;
            if b[name] != *bytes {
                differing.push(format!("{}/{name}", job.name));
            }
        }
    }
    Verdict::new(
        differing.is_empty() && compared > 0,
        format!(
            "{compared} files compared byte-for-byte, differing: [{}]",
            differing.join(", ")
        ),
    )
}

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let wanted = |n: usize| selected.is_empty() || selected.contains(&n);
    let work = Workdir::new();
    let criteria: [(usize, &str, &dyn Fn() -> Verdict); 9] = [
        (1, "OU exactness", &|| criterion_1(&work)),
        (2, "two-step contraction oracle", &criterion_2),
        (3, "minorization optimality", &criterion_3),
        (4, "small-set construction", &criterion_4),
        (5, "ODE comparison bound", &criterion_5),
        (6, "uniform moments", &|| criterion_6(&work)),
        (7, "exponential mixing witness", &|| criterion_7(&work)),
        (8, "geometric bound (exact)", &criterion_8),
        (9, "determinism", &|| criterion_9(&work)),
    ];
    let mut failed = Vec::new();
    for (n, name, run) in criteria {
        if !wanted(n) {
            continue;
        }
        let start = Instant::now();
        let v = run();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "criterion {n} {}: {name} ({secs:.1} s): {}",
            if v.passed { "PASS" } else { "FAIL" },
            v.detail
        );
        if !v.passed {
            failed.push(n);
        }
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
