//! Line-oriented run configuration.
//!
//! ```text
//! # comment
//! [model]
//! n_modes = 32
//! dt = 1/256
//! poly = 0, -1, 0, 1
//!
//! [ensemble]
//! initial = zero
//! initial = scaled-random:100
//! ```
//!
//! Keys are `key = value`, sections are `[name]`, `#` starts a comment.
//! Numbers may be written as fractions `a/b`. `initial` and `q_override` may
//! repeat; every other key may appear once. [`RunConfig::render`] writes every
//! resolved value back in the same format, and parsing the rendered text
//! gives the same configuration.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::field::DriftPolynomial;
use crate::integrator::{Reaction, Scheme, SimulationParams, DEFAULT_BLOWUP_GUARD};
use crate::mixing::{InitialCondition, UniformityCriteria};
use crate::noise::NoiseSpectrum;

/// First line of every output header.
pub const HEADER_TITLE: &str = "# sgl-mixing";

#[derive(Clone, Debug, PartialEq)]
pub enum PolySpec {
    /// `P(u) = u`, no effective nonlinearity.
    Linear,
    /// Coefficients in increasing degree.
    Coefficients(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub n_modes: usize,
    pub dt: f64,
    pub t_final: f64,
    pub poly: PolySpec,
    pub alpha: f64,
    pub beta: f64,
    pub c1_const: f64,
    pub c2_const: f64,
    pub k_star: usize,
    /// `q_k = amplitude · k^{-2α}` for `k > k_*` before overrides.
    pub amplitude: f64,
    /// `(k, q_k)` pairs applied last.
    pub q_overrides: Vec<(usize, f64)>,
    pub seed: u64,
    pub scheme: Scheme,
    pub blowup_guard: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_modes: 32,
            dt: 1.0 / 256.0,
            t_final: 1.0,
            poly: PolySpec::Coefficients(vec![0.0, -1.0, 0.0, 1.0]),
            alpha: 2.0,
            beta: 2.0,
            c1_const: 1.0,
            c2_const: 1.0,
            k_star: 3,
            amplitude: 1.0,
            q_overrides: Vec::new(),
            seed: 0,
            scheme: Scheme::ExponentialEuler,
            blowup_guard: DEFAULT_BLOWUP_GUARD,
        }
    }
}

impl ModelConfig {
    pub fn spectrum(&self) -> Result<NoiseSpectrum> {
        let mut s = NoiseSpectrum::power_law(self.n_modes, self.alpha, self.k_star, self.amplitude);
        s.beta = self.beta;
        s.c1 = self.c1_const;
        s.c2 = self.c2_const;
        for &(k, q) in &self.q_overrides {
            if k > self.n_modes {
                return Err(Error::InvalidParams(format!(
                    "q_override for k = {k} beyond n_modes = {}",
                    self.n_modes
                )));
            }
            s.q[k] = q;
        }
        Ok(s)
    }

    /// The validated simulation parameters.
    pub fn params(&self) -> Result<SimulationParams> {
        let reaction = match &self.poly {
            PolySpec::Linear => Reaction::Linear,
            PolySpec::Coefficients(c) => Reaction::Polynomial(DriftPolynomial::new(c.clone())?),
        };
        let params = SimulationParams {
            n_modes: self.n_modes,
            dt: self.dt,
            t_final: self.t_final,
            reaction,
            spectrum: self.spectrum()?,
            seed: self.seed,
            scheme: self.scheme,
            blowup_guard: self.blowup_guard,
            record_dense: false,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleConfig {
    pub initial: Vec<InitialCondition>,
    pub n_traj: usize,
    pub gamma: f64,
    pub p: f64,
    /// Time of the moment table.
    pub moment_time: f64,
    /// Last integer time of the mixing comparison.
    pub horizon: f64,
    pub bootstrap: usize,
    pub ratio_threshold: f64,
    pub require_overlap: bool,
    /// `(t1, t2)` for the supremum-window estimate.
    pub window: Option<(f64, f64)>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            initial: vec![
                InitialCondition::Zero,
                InitialCondition::ScaledRandom(100.0),
                InitialCondition::ScaledRandom(10_000.0),
            ],
            n_traj: 1000,
            gamma: 1.0,
            p: 2.0,
            moment_time: 1.0,
            horizon: 10.0,
            bootstrap: 200,
            ratio_threshold: 2.0,
            require_overlap: true,
            window: None,
        }
    }
}

impl EnsembleConfig {
    pub fn criteria(&self) -> UniformityCriteria {
        UniformityCriteria {
            max_ratio: self.ratio_threshold,
            require_overlap: self.require_overlap,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Mu0Spec {
    Uniform,
    Weights(Vec<f64>),
}

impl Mu0Spec {
    pub fn resolve(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            Self::Uniform => Ok(vec![1.0 / n as f64; n]),
            Self::Weights(w) if w.len() == n => Ok(w.clone()),
            Self::Weights(w) => Err(Error::InvalidParams(format!(
                "mu0 has {} weights for {n} states",
                w.len()
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DoeblinConfig {
    pub kernel: Option<PathBuf>,
    /// `K`; the full state space when absent.
    pub set: Option<Vec<usize>>,
    pub m: usize,
    pub mu0: Mu0Spec,
    /// Last `n` in the geometric-bound table.
    pub horizon: usize,
}

impl Default for DoeblinConfig {
    fn default() -> Self {
        Self {
            kernel: None,
            set: None,
            m: 1,
            mu0: Mu0Spec::Uniform,
            horizon: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OdeConfig {
    pub q: u32,
    pub c: f64,
    pub y0: f64,
    pub t: f64,
    /// `(start, value)` pieces of the forcing.
    pub forcing: Vec<(f64, f64)>,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self {
            q: 3,
            c: 1.0,
            y0: 10.0,
            t: 0.5,
            forcing: vec![(0.0, 0.0)],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub ensemble: EnsembleConfig,
    pub doeblin: DoeblinConfig,
    pub odecheck: OdeConfig,
}

fn num(line: usize, v: &str) -> Result<f64> {
    let bad = || Error::Config {
        line,
        message: format!("expected a number, got {v:?}"),
    };
    let v = v.trim();
    let x = match v.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            a / b
        }
        None => v.parse().map_err(|_| bad())?,
    };
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad())
    }
}

fn int<T: std::str::FromStr>(line: usize, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Config {
        line,
        message: format!("expected a nonnegative integer, got {v:?}"),
    })
}

fn items(v: &str) -> impl Iterator<Item = &str> {
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
}

fn num_list(line: usize, v: &str) -> Result<Vec<f64>> {
    items(v).map(|s| num(line, s)).collect()
}

fn pairs(line: usize, v: &str) -> Result<Vec<(f64, f64)>> {
    items(v)
        .map(|s| {
            let (a, b) = s.split_once(':').ok_or(Error::Config {
                line,
                message: format!("expected start:value, got {s:?}"),
            })?;
            Ok((num(line, a)?, num(line, b)?))
        })
        .collect()
}

fn boolean(line: usize, v: &str) -> Result<bool> {
    match v.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(Error::Config {
            line,
            message: format!("expected true or false, got {other:?}"),
        }),
    }
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut section = String::new();
        let mut seen: Vec<(String, String)> = Vec::new();
        let mut initial_reset = false;
        let mut overrides_reset = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or(Error::Config {
                    line,
                    message: format!("unterminated section header {content:?}"),
                })?;
                section = name.trim().to_string();
                if !["model", "ensemble", "doeblin", "odecheck"].contains(&section.as_str()) {
                    return Err(Error::Config {
                        line,
                        message: format!("unknown section [{section}]"),
                    });
                }
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(Error::Config {
                line,
                message: format!("expected key = value, got {content:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if section.is_empty() {
                return Err(Error::Config {
                    line,
                    message: format!("key {key:?} outside any section"),
                });
            }
            let repeatable = matches!(
                (section.as_str(), key),
                ("ensemble", "initial") | ("model", "q_override")
            );
            let id = (section.clone(), key.to_string());
            if !repeatable && seen.contains(&id) {
                return Err(Error::Config {
                    line,
                    message: format!("duplicate key {key:?} in [{section}]"),
                });
            }
            seen.push(id);
            let m = &mut cfg.model;
            let e = &mut cfg.ensemble;
            let d = &mut cfg.doeblin;
            let o = &mut cfg.odecheck;
            match (section.as_str(), key) {
                ("model", "n_modes") => m.n_modes = int(line, value)?,
                ("model", "dt") => m.dt = num(line, value)?,
                ("model", "t_final") => m.t_final = num(line, value)?,
                ("model", "poly") => {
                    m.poly = if value == "linear" {
                        PolySpec::Linear
                    } else {
                        PolySpec::Coefficients(num_list(line, value)?)
                    }
                }
                ("model", "alpha") => m.alpha = num(line, value)?,
                ("model", "beta") => m.beta = num(line, value)?,
                ("model", "c1_const") => m.c1_const = num(line, value)?,
                ("model", "c2_const") => m.c2_const = num(line, value)?,
                ("model", "k_star") => m.k_star = int(line, value)?,
                ("model", "amplitude") => m.amplitude = num(line, value)?,
                ("model", "q_override") => {
                    if !overrides_reset {
                        m.q_overrides.clear();
                        overrides_reset = true;
                    }
                    for (k, q) in pairs(line, value)? {
                        if k < 0.0 || k.fract() != 0.0 {
                            return Err(Error::Config {
                                line,
                                message: format!("mode index {k} is not a nonnegative integer"),
                            });
                        }
                        m.q_overrides.push((k as usize, q));
                    }
                }
                ("model", "seed") => m.seed = int(line, value)?,
                ("model", "scheme") => {
                    m.scheme = Scheme::parse(value).ok_or(Error::Config {
                        line,
                        message: format!("unknown scheme {value:?}"),
                    })?
                }
                ("model", "blowup_guard") => m.blowup_guard = num(line, value)?,
                ("ensemble", "initial") => {
                    if !initial_reset {
                        e.initial.clear();
                        initial_reset = true;
                    }
                    e.initial
                        .push(InitialCondition::parse(value).map_err(|err| Error::Config {
                            line,
                            message: err.to_string(),
                        })?);
                }
                ("ensemble", "n_traj") => e.n_traj = int(line, value)?,
                ("ensemble", "gamma") => e.gamma = num(line, value)?,
                ("ensemble", "p") => e.p = num(line, value)?,
                ("ensemble", "moment_time") => e.moment_time = num(line, value)?,
                ("ensemble", "horizon") => e.horizon = num(line, value)?,
                ("ensemble", "bootstrap") => e.bootstrap = int(line, value)?,
                ("ensemble", "ratio_threshold") => e.ratio_threshold = num(line, value)?,
                ("ensemble", "require_overlap") => e.require_overlap = boolean(line, value)?,
                ("ensemble", "window") => {
                    let w = num_list(line, value)?;
                    if w.len() != 2 {
                        return Err(Error::Config {
                            line,
                            message: "window needs two times t1, t2".into(),
                        });
                    }
                    e.window = Some((w[0], w[1]));
                }
                ("doeblin", "kernel") => d.kernel = Some(PathBuf::from(value)),
                ("doeblin", "K") => {
                    d.set = Some(items(value).map(|s| int(line, s)).collect::<Result<_>>()?)
                }
                ("doeblin", "m") => d.m = int(line, value)?,
                ("doeblin", "mu0") => {
                    d.mu0 = if value == "uniform" {
                        Mu0Spec::Uniform
                    } else {
                        Mu0Spec::Weights(num_list(line, value)?)
                    }
                }
                ("doeblin", "horizon") => d.horizon = int(line, value)?,
                ("odecheck", "q") => o.q = int(line, value)?,
                ("odecheck", "c") => o.c = num(line, value)?,
                ("odecheck", "y0") => o.y0 = num(line, value)?,
                ("odecheck", "t") => o.t = num(line, value)?,
                ("odecheck", "forcing") => o.forcing = pairs(line, value)?,
                _ => {
                    return Err(Error::Config {
                        line,
                        message: format!("unknown key {key:?} in [{section}]"),
                    })
                }
            }
        }
        Ok(cfg)
    }

    /// Reads a configuration file, or the header of an output file written by
    /// the CLI so that any output can be regenerated from itself.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if text.starts_with(HEADER_TITLE) {
            Self::from_header(&text)
        } else {
            Self::parse(&text)
        }
    }

    /// Parses the configuration embedded in a `#`-prefixed output header.
    pub fn from_header(text: &str) -> Result<Self> {
        let body: String = text
            .lines()
            .map_while(|l| l.strip_prefix('#'))
            .map(|l| l.strip_prefix(' ').unwrap_or(l))
            .skip_while(|l| !l.starts_with('['))
            .fold(String::new(), |mut acc, l| {
                acc.push_str(l);
                acc.push('\n');
                acc
            });
        Self::parse(&body)
    }

    /// Every resolved value, in a fixed order.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let m = &self.model;
        let _ = writeln!(s, "[model]");
        let _ = writeln!(s, "n_modes = {}", m.n_modes);
        let _ = writeln!(s, "dt = {}", m.dt);
        let _ = writeln!(s, "t_final = {}", m.t_final);
        match &m.poly {
            PolySpec::Linear => {
                let _ = writeln!(s, "poly = linear");
            }
            PolySpec::Coefficients(c) => {
                let _ = writeln!(s, "poly = {}", join(c));
            }
        }
        let _ = writeln!(s, "alpha = {}", m.alpha);
        let _ = writeln!(s, "beta = {}", m.beta);
        let _ = writeln!(s, "c1_const = {}", m.c1_const);
        let _ = writeln!(s, "c2_const = {}", m.c2_const);
        let _ = writeln!(s, "k_star = {}", m.k_star);
        let _ = writeln!(s, "amplitude = {}", m.amplitude);
        for (k, q) in &m.q_overrides {
            let _ = writeln!(s, "q_override = {k}:{q}");
        }
        let _ = writeln!(s, "seed = {}", m.seed);
        let _ = writeln!(s, "scheme = {}", m.scheme.name());
        let _ = writeln!(s, "blowup_guard = {}", m.blowup_guard);
        let e = &self.ensemble;
        let _ = writeln!(s, "[ensemble]");
        for ic in &e.initial {
            let _ = writeln!(s, "initial = {ic}");
        }
        let _ = writeln!(s, "n_traj = {}", e.n_traj);
        let _ = writeln!(s, "gamma = {}", e.gamma);
        let _ = writeln!(s, "p = {}", e.p);
        let _ = writeln!(s, "moment_time = {}", e.moment_time);
        let _ = writeln!(s, "horizon = {}", e.horizon);
        let _ = writeln!(s, "bootstrap = {}", e.bootstrap);
        let _ = writeln!(s, "ratio_threshold = {}", e.ratio_threshold);
        let _ = writeln!(s, "require_overlap = {}", e.require_overlap);
        if let Some((a, b)) = e.window {
            let _ = writeln!(s, "window = {a}, {b}");
        }
        let d = &self.doeblin;
        let _ = writeln!(s, "[doeblin]");
        if let Some(k) = &d.kernel {
            let _ = writeln!(s, "kernel = {}", k.display());
        }
        if let Some(set) = &d.set {
            let _ = writeln!(s, "K = {}", join(set));
        }
        let _ = writeln!(s, "m = {}", d.m);
        match &d.mu0 {
            Mu0Spec::Uniform => {
                let _ = writeln!(s, "mu0 = uniform");
            }
            Mu0Spec::Weights(w) => {
                let _ = writeln!(s, "mu0 = {}", join(w));
            }
        }
        let _ = writeln!(s, "horizon = {}", d.horizon);
        let o = &self.odecheck;
        let _ = writeln!(s, "[odecheck]");
        let _ = writeln!(s, "q = {}", o.q);
        let _ = writeln!(s, "c = {}", o.c);
        let _ = writeln!(s, "y0 = {}", o.y0);
        let _ = writeln!(s, "t = {}", o.t);
        let forcing: Vec<String> = o.forcing.iter().map(|(a, b)| format!("{a}:{b}")).collect();
        let _ = writeln!(s, "forcing = {}", forcing.join(", "));
        s
    }

    /// [`render`](Self::render) with every line prefixed by `# `.
    /// `#`-prefixed block: [`HEADER_TITLE`], `detail`, then [`Self::render`].
    pub fn header(&self, detail: &str) -> String {
        let mut s = format!("{HEADER_TITLE} {detail}\n");
        for line in self.render().lines() {
            let _ = writeln!(s, "# {line}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_model() {
        let cfg = RunConfig::parse("").unwrap();
        let params = cfg.model.params().unwrap();
        assert_eq!(params, SimulationParams::default_model());
    }

    #[test]
    fn parses_sections_and_fractions() {
        let text = "\
# a comment
[model]
n_modes = 8   # trailing comment
dt = 1/64
poly = linear
q_override = 0:0.5, 1:0.25
seed = 42

[ensemble]
initial = zero
initial = 1, 0.5
window = 0.5, 1
";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.model.n_modes, 8);
        assert_eq!(cfg.model.dt, 1.0 / 64.0);
        assert_eq!(cfg.model.poly, PolySpec::Linear);
        assert_eq!(cfg.model.q_overrides, vec![(0, 0.5), (1, 0.25)]);
        assert_eq!(cfg.ensemble.initial.len(), 2);
        assert_eq!(cfg.ensemble.window, Some((0.5, 1.0)));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let line_of = |text: &str| match RunConfig::parse(text) {
            Err(Error::Config { line, .. }) => line,
            other => panic!("expected a config error, got {other:?}"),
        };
        assert_eq!(line_of("[model]\nn_modes = x\n"), 2);
        assert_eq!(line_of("n_modes = 3\n"), 1);
        assert_eq!(line_of("[model]\n\nbogus = 1\n"), 3);
        assert_eq!(line_of("[nowhere]\n"), 1);
        assert_eq!(line_of("[model]\nseed = 1\nseed = 2\n"), 3);
        assert_eq!(line_of("[model\n"), 1);
        assert_eq!(line_of("[model]\njust text\n"), 2);
    }

    #[test]
    fn render_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.model.q_overrides = vec![(2, 0.125)];
        cfg.model.dt = 1.0 / 3.0;
        cfg.ensemble.window = Some((0.25, 0.75));
        cfg.doeblin.kernel = Some(PathBuf::from("kernels/two.txt"));
        cfg.doeblin.set = Some(vec![0, 1]);
        cfg.doeblin.mu0 = Mu0Spec::Weights(vec![0.5, 0.5]);
        cfg.odecheck.forcing = vec![(0.0, 1.0), (0.5, 0.0)];
        assert_eq!(RunConfig::parse(&cfg.render()).unwrap(), cfg);
        let header = cfg.header("0.1.0 simulate");
        assert_eq!(
            RunConfig::from_header(&format!("{header}t,x\n1,2\n")).unwrap(),
            cfg
        );
    }

    #[test]
    fn invalid_beta_names_the_window() {
        let cfg = RunConfig::parse("[model]\nbeta = 1.5\n").unwrap();
        let msg = cfg.model.params().unwrap_err().to_string();
        assert!(msg.contains("beta"), "{msg}");
    }
}
