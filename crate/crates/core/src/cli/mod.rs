//! Command line: configuration files, command dispatch and report emission.
//!
//! Exit codes: 0 when every record passes, 1 when a check fails, 2 for usage,
//! configuration and precondition errors.

pub mod config;

use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng;
use sha2::{Digest, Sha256};

use crate::annihil::{self, SamplingPlan};
use crate::error::{Error, Result};
use crate::lawstruct::{self, refs};
use crate::limits::{validate_system, Thread, Verdict};
use crate::projlat;
use crate::random;
use crate::report::{CheckRecord, Report};
use crate::spectral::{self, MuRule, ReconstructOptions};
use crate::tol;

pub use config::{Model, SystemConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Clone, Debug, Parser)]
#[command(
    name = "locaw",
    version,
    about = "Verify locally AW* structure of finite projective systems"
)]
pub struct Cli {
    /// System configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for sampled checks; overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of chain nodes probed (lazy chains).
    #[arg(long, global = true)]
    pub horizon: Option<usize>,
    /// Target mesh of the spectral partition.
    #[arg(long, global = true, default_value_t = 0.1)]
    pub mesh: f64,
    /// Margin ε above the norm in the spectral interval.
    #[arg(long, global = true, default_value_t = 0.1)]
    pub eps: f64,
    /// Input validation tolerance; overrides the config value.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Sample count for sampled checks.
    #[arg(long, global = true, default_value_t = 50)]
    pub samples: usize,
    /// Tag point rule of the integral sums.
    #[arg(long, global = true, default_value = "midpoint")]
    pub rule: String,
    /// Reconstruct threads without a bounded verdict coordinate by coordinate.
    #[arg(long, global = true)]
    pub per_coordinate: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Subcommand)]
pub enum Command {
    /// Structural checks of the system.
    Validate,
    /// Property verifiers: baer, kaplansky, theorem1, lattice.
    Verify { target: String },
    /// Right and left annihilators of a set of elements.
    Annihilate {
        #[arg(required = true)]
        set: Vec<String>,
    },
    /// Center of the limit, certified at every node.
    Center,
    /// Corner system cut down by a projection thread.
    Corner { projection: String },
    /// Maximal abelian subalgebra containing a self-adjoint thread.
    Masa { element: String },
    /// Commutant of a self-adjoint set of threads.
    Commutant {
        #[arg(required = true)]
        set: Vec<String>,
    },
    /// Sup of the coordinate norms over the horizon.
    Bounded { element: String },
    /// Checks on the bounded part of the limit.
    BoundedPart,
    /// Annihilator of a set viewed as a two-sided ideal; must be central.
    IdealAnnihilator {
        #[arg(required = true)]
        set: Vec<String>,
    },
    /// Spectral family and integral-sum reconstruction of a self-adjoint thread.
    Spectral { element: String },
    /// Projection approximation of an element within eps.
    Lemma1 { element: String, eps: f64 },
    /// Supremum of an orthogonal projection family against an element.
    /// The family is given as comma-separated element names.
    Lemma2 { family: String, element: String },
    /// Print a random valid configuration for the seed.
    GenRandom,
}

impl Command {
    pub fn name(&self) -> String {
        match self {
            Command::Validate => "validate".into(),
            Command::Verify { target } => format!("verify {target}"),
            Command::Annihilate { set } => format!("annihilate {}", set.join(",")),
            Command::Center => "center".into(),
            Command::Corner { projection } => format!("corner {projection}"),
            Command::Masa { element } => format!("masa {element}"),
            Command::Commutant { set } => format!("commutant {}", set.join(",")),
            Command::Bounded { element } => format!("bounded {element}"),
            Command::BoundedPart => "bounded-part".into(),
            Command::IdealAnnihilator { set } => format!("ideal-annihilator {}", set.join(",")),
            Command::Spectral { element } => format!("spectral {element}"),
            Command::Lemma1 { element, eps } => format!("lemma1 {element} {eps}"),
            Command::Lemma2 { family, element } => format!("lemma2 {family} {element}"),
            Command::GenRandom => "gen-random".into(),
        }
    }
}

/// Result of a command: a report, or configuration text from `gen-random`.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Report(Report),
    Config(String),
}

/// Text and exit code of a full invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct Invocation {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (including the program name) and runs the command.
pub fn invoke<I, T>(args: I) -> Invocation
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Invocation {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Invocation {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    let loaded = match &cli.config {
        Some(path) => match fs::read_to_string(path) {
            Ok(text) => Some(text),
            Err(e) => return usage_error(format!("cannot read {}: {e}", path.display())),
        },
        None => None,
    };
    match execute(&cli, loaded.as_deref()) {
        Ok(Outcome::Config(text)) => Invocation {
            code: 0,
            stdout: text,
            stderr: String::new(),
        },
        Ok(Outcome::Report(r)) => {
            let stdout = match cli.format {
                Format::Text => r.to_text(),
                Format::Json => r.to_json() + "\n",
            };
            Invocation {
                code: r.exit_status,
                stdout,
                stderr: String::new(),
            }
        }
        Err(e) => usage_error(e.to_string()),
    }
}

fn usage_error(message: String) -> Invocation {
    Invocation {
        code: 2,
        stdout: String::new(),
        stderr: format!("error: {message}\n"),
    }
}

/// Hex SHA-256 of the canonical configuration text.
pub fn digest(cfg: &SystemConfig) -> String {
    hex::encode(Sha256::digest(cfg.to_toml().as_bytes()))
}

/// Runs a parsed command on configuration text.
pub fn execute(cli: &Cli, config_text: Option<&str>) -> Result<Outcome> {
    if let Command::GenRandom = cli.command {
        return Ok(Outcome::Config(gen_random(cli.seed.unwrap_or(0))?));
    }
    if let Command::Verify { target } = &cli.command {
        if target == "w-star" {
            return Err(Error::Precondition(
                "out of scope: predual (W*) structure is not modelled, so `verify w-star` is refused".into(),
            ));
        }
    }
    let Some(text) = config_text else {
        return Err(Error::Precondition(format!("`{}` needs --config", cli.command.name())));
    };
    let mut cfg = SystemConfig::parse(text)?;
    if let Some(t) = cli.tol {
        cfg.tolerances = Some(config::Tolerances { input: t });
    }
    let model = cfg.build()?;
    let ctx = Context {
        seed: cli.seed.or(model.seed).unwrap_or(0),
        horizon: cli.horizon,
        samples: cli.samples,
        mesh: cli.mesh,
        eps: cli.eps,
        rule: cli.rule.parse()?,
        per_coordinate: cli.per_coordinate,
        input_tol: model.tolerances.input,
    };
    let records = dispatch(&cli.command, &model, &ctx)?;
    Ok(Outcome::Report(Report::new(cli.command.name(), digest(&cfg), records)))
}

struct Context {
    seed: u64,
    horizon: Option<usize>,
    samples: usize,
    mesh: f64,
    eps: f64,
    rule: MuRule,
    per_coordinate: bool,
    input_tol: f64,
}

impl Context {
    fn plan(&self) -> SamplingPlan {
        SamplingPlan::new(self.samples, self.seed)
    }

    fn horizon(&self, model: &Model) -> Result<usize> {
        let sys = &model.system;
        match (sys.chain_descriptor(), self.horizon) {
            (Some(c), Some(h)) if h > c.horizon => Err(Error::Horizon {
                node: h,
                horizon: c.horizon,
            }),
            (_, Some(0)) => Err(Error::Precondition("horizon must be at least 1".into())),
            (Some(_), Some(h)) => Ok(h),
            _ => Ok(sys.len()),
        }
    }
}

fn names(set: &[String]) -> Vec<String> {
    set.iter()
        .flat_map(|s| s.split(','))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn threads(model: &Model, set: &[String]) -> Result<Vec<Thread>> {
    let set = names(set);
    if set.is_empty() {
        return Err(Error::Precondition("empty element set".into()));
    }
    set.iter().map(|n| model.element(n).cloned()).collect()
}

fn self_adjoint(model: &Model, name: &str, ctx: &Context) -> Result<Thread> {
    let x = model.element(name)?.clone();
    if !x.is_hermitian(ctx.input_tol) {
        return Err(Error::Precondition(format!("element `{name}` is not self-adjoint")));
    }
    Ok(x)
}

fn dispatch(cmd: &Command, model: &Model, ctx: &Context) -> Result<Vec<CheckRecord>> {
    let sys = &model.system;
    match cmd {
        Command::Validate => Ok(validate_system(sys)),
        Command::Verify { target } => verify(target, model, ctx),
        Command::Annihilate { set } => annihilate(model, &threads(model, set)?),
        Command::Center => lawstruct::center(sys).certify(ctx.seed),
        Command::Corner { projection } => {
            let e = model.element(projection)?;
            if !e.is_projection(ctx.input_tol) {
                return Err(Error::Precondition(format!(
                    "element `{projection}` is not a projection"
                )));
            }
            lawstruct::corner(e)?.certify(ctx.seed)
        }
        Command::Masa { element } => lawstruct::masa_containing(&self_adjoint(model, element, ctx)?)?.certify(ctx.seed),
        Command::Commutant { set } => lawstruct::commutant_system(&threads(model, set)?)?.certify(ctx.seed),
        Command::Bounded { element } => {
            let x = model.element(element)?;
            let v = x.sup_norm(ctx.horizon(model)?)?;
            let mut r = CheckRecord::new("bounded", refs::BOUNDED_PART, v.is_bounded())
                .with_residual("sup_over_horizon", v.sup_over_horizon)
                .with_residual("horizon", v.horizon as f64)
                .with_witness(match &v.verdict {
                    Verdict::Bounded { sup } => format!("bounded, sup {sup}"),
                    Verdict::ExceedsBound { node, value } => {
                        format!("exceeds the declared bound at node `{node}` ({value})")
                    }
                    Verdict::Inconclusive => "inconclusive: no declared monotone bound".to_string(),
                });
            if let Some(d) = x.declaration() {
                r = r.with_residual("declared_bound", d.bound);
            }
            Ok(vec![r])
        }
        Command::BoundedPart => lawstruct::bounded_part(sys, ctx.horizon(model)?, ctx.plan()),
        Command::IdealAnnihilator { set } => Ok(lawstruct::ideal_annihilator_central(sys, &threads(model, set)?)?.1),
        Command::Spectral { element } => {
            let x = self_adjoint(model, element, ctx)?;
            let opts = ReconstructOptions {
                rule: ctx.rule,
                horizon: ctx.horizon(model)?,
                per_coordinate_fallback: ctx.per_coordinate,
                ..ReconstructOptions::new(ctx.mesh, ctx.eps)
            };
            let r = spectral::reconstruct(&x, opts)?;
            let mut records = vec![
                CheckRecord::new("spectral-summary", spectral::refs::RECONSTRUCTION, r.passed())
                    .with_residual("max_error", r.max_error())
                    .with_residual("mesh", r.partition.mesh())
                    .with_residual("nodes", r.partition.nodes().len() as f64),
            ];
            records.extend(r.records);
            Ok(records)
        }
        Command::Lemma1 { element, eps } => approximate(model, element, *eps),
        Command::Lemma2 { family, element } => {
            let fam = threads(model, std::slice::from_ref(family))?;
            Ok(lawstruct::orthogonal_sup_check(&fam, model.element(element)?)?.0)
        }
        Command::GenRandom => unreachable!("handled before building the model"),
    }
}

fn verify(target: &str, model: &Model, ctx: &Context) -> Result<Vec<CheckRecord>> {
    let sys = &model.system;
    match target {
        "theorem1" => Ok(lawstruct::verify_equivalences(sys, ctx.plan())?.records()),
        "kaplansky" => {
            let all = lawstruct::verify_equivalences(sys, ctx.plan())?.records();
            Ok(all.into_iter().filter(|r| r.id.starts_with("kaplansky")).collect())
        }
        "baer" => {
            let mut out = Vec::new();
            for a in 0..sys.len() {
                let plan = SamplingPlan::new(ctx.samples.div_ceil(sys.len()).max(1), ctx.seed.wrapping_add(a as u64));
                for mut r in annihil::certify_baer(sys.algebra(a), plan)? {
                    r.id = format!("{}@{}", r.id, sys.label(a));
                    out.push(r);
                }
            }
            let mut rng = random::rng(ctx.seed);
            let mut worst = 0.0_f64;
            let mut witness = None;
            for i in 0..ctx.samples {
                let k = rng.gen_range(1..=3);
                let set = (0..k)
                    .map(|_| lawstruct::sample_thread(&mut rng, sys, annihil::sample_element))
                    .collect::<Result<Vec<_>>>()?;
                match lawstruct::limit_annihilator(&set) {
                    Ok((_, res, w)) => {
                        worst = worst.max(res);
                        if let Some(w) = w {
                            witness.get_or_insert(format!("subset {i}: {w}"));
                        }
                    }
                    Err(e) => {
                        witness.get_or_insert(format!("subset {i}: {e}"));
                    }
                }
            }
            let mut r = CheckRecord::new(
                "limit-annihilators-coherent",
                refs::BAER_LIMIT,
                witness.is_none() && worst <= tol::COHERENCE,
            )
            .with_residual("max_residual", worst);
            if let Some(w) = witness {
                r = r.with_witness(w);
            }
            out.push(r);
            Ok(out)
        }
        "lattice" => {
            let mut out = Vec::new();
            for a in 0..sys.len() {
                let rep = projlat::verify_lattice(sys.algebra(a), ctx.samples, ctx.seed.wrapping_add(a as u64))?;
                let mut r = CheckRecord::new(
                    format!("lattice@{}", sys.label(a)),
                    "projections form a complete orthomodular lattice",
                    rep.passed(),
                )
                .with_residual("checks", rep.checks as f64)
                .with_residual("max_residual", rep.max_residual);
                if let Some(v) = rep.violations.first() {
                    r = r.with_witness(format!("{v:?}"));
                }
                out.push(r);
            }
            Ok(out)
        }
        other => Err(Error::Precondition(format!(
            "unknown verify target `{other}` (baer, kaplansky, theorem1, lattice)"
        ))),
    }
}

fn annihilate(model: &Model, set: &[Thread]) -> Result<Vec<CheckRecord>> {
    let sys = &model.system;
    let mut out = Vec::new();
    let mut right = Vec::with_capacity(sys.len());
    let mut left = Vec::with_capacity(sys.len());
    for a in 0..sys.len() {
        let s = set.iter().map(|t| t.project(a)).collect::<Result<Vec<_>>>()?;
        for (side, res) in [
            ("right", annihil::right_annihilator(&s)?),
            ("left", annihil::left_annihilator(&s)?),
        ] {
            let mut r = CheckRecord::new(
                format!("{side}-annihilator@{}", sys.label(a)),
                "annihilators are generated by a projection",
                res.agrees(),
            )
            .with_residual("dimension", res.subspace_dim as f64)
            .with_residual("oracle_dimension", res.oracle_dim as f64)
            .with_residual("membership_residual", res.membership_residual)
            .with_witness(format!("ranks per block {:?}", res.generator.rank_per_block()));
            if !res.agrees() {
                r.passed = false;
            }
            out.push(r);
            if side == "right" {
                right.push(res.generator.into_element());
            } else {
                left.push(res.generator.into_element());
            }
        }
    }
    for (side, coords) in [("right", right), ("left", left)] {
        out.push(match Thread::lift(sys, coords) {
            Ok(_) => CheckRecord::pass(format!("{side}-annihilator-coherent"), refs::BAER_LIMIT),
            Err(e) => CheckRecord::fail(format!("{side}-annihilator-coherent"), refs::BAER_LIMIT, e.to_string()),
        });
    }
    Ok(out)
}

fn approximate(model: &Model, element: &str, eps: f64) -> Result<Vec<CheckRecord>> {
    let x = model.element(element)?;
    let sys = &model.system;
    let (_, approx) = lawstruct::kaplansky_approx_thread(x, eps)?;
    let mut out = Vec::new();
    for (a, p) in approx.iter().enumerate() {
        out.push(
            CheckRecord::new(
                format!("approx-residual@{}", sys.label(a)),
                refs::APPROX,
                p.residual < eps,
            )
            .with_residual("residual", p.residual)
            .with_residual("eps", eps),
        );
        out.push(CheckRecord::bounded(
            format!("approx-multiple@{}", sys.label(a)),
            refs::APPROX,
            p.multiple_residual,
            tol::COHERENCE,
        ));
        out.push(CheckRecord::bounded(
            format!("approx-membership@{}", sys.label(a)),
            refs::APPROX,
            p.membership_residual,
            tol::COHERENCE,
        ));
    }
    out.push(CheckRecord::pass("approx-coherent", refs::APPROX));
    Ok(out)
}

/// A random valid configuration with a self-adjoint element `x`, a
/// projection `p` and a general element `y`, all given at the top node.
pub fn gen_random(seed: u64) -> Result<String> {
    let mut rng = random::rng(seed);
    let sys = Arc::new(random::system(&mut rng));
    let top = sys.top()?;
    let alg = sys.algebra(top);
    let x = random::hermitian(&mut rng, alg);
    let p = random::projection(&mut rng, alg);
    let y = random::element(&mut rng, alg);
    let cfg = config::describe(&sys, &[("x", &x), ("p", &p), ("y", &y)], Some(seed))?;
    Ok(cfg.to_toml())
}
