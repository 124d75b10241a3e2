use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use toric_points::arith::{self, rat_to_f64, Rat};
use toric_points::densities::{self, AlphaChoice};
use toric_points::enumerate::{self, CountConfig, CountRun};
use toric_points::fan_functions::{self, FanVariant, InvariantConeSet};
use toric_points::fit::{self, Comparison};
use toric_points::points::{self, TorusPoint, Variant};
use toric_points::{fanfile, heights, library, picard, Fan, FanError, OrbifoldWeights, PlFunction};

#[derive(Parser, Debug)]
#[command(name = "toric-points", version, about = "Semi-integral points of bounded height on split toric varieties")]
struct Cli {
    /// `.fan` file, or a library name (P1, P2, P3, P1xP1, F1, dP6).
    #[arg(long, global = true)]
    fan: Option<String>,
    /// Orbit weights, e.g. `2,2` or `2,inf`; defaults to the file's weights, then all ones.
    #[arg(long, global = true)]
    weights: Option<String>,
    #[arg(long, global = true, default_value = "campana")]
    variant: Variant,
    /// Height bound, exact: `1e7`, `2.5`, `1/2`.
    #[arg(long, global = true)]
    bound: Option<String>,
    #[arg(long, global = true, default_value_t = 10_000)]
    primes_cutoff: u64,
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AlphaArg {
    Orbifold,
    Direct,
}

impl From<AlphaArg> for AlphaChoice {
    fn from(a: AlphaArg) -> Self {
        match a {
            AlphaArg::Orbifold => AlphaChoice::Orbifold,
            AlphaArg::Direct => AlphaChoice::Direct,
        }
    }
}

#[derive(clap::Args, Debug, Clone)]
struct CountArgs {
    /// Number of checkpoints `B, B/2, B/4, …`.
    #[arg(long, default_value_t = 12)]
    checkpoints: usize,
    /// Largest generic search space accepted.
    #[arg(long, default_value_t = 5e7)]
    budget: f64,
    #[arg(long)]
    no_audit: bool,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Validate the fan and print its invariants.
    Check,
    /// Locate a lattice vector such as `3,-1` in the fan.
    Locate {
        #[arg(allow_hyphen_values = true)]
        vector: String,
    },
    /// Multiplicity profile and verdict for a point such as `4/9,6`.
    Classify {
        #[arg(allow_hyphen_values = true)]
        point: String,
        /// Report every variant.
        #[arg(long)]
        all: bool,
    },
    /// Local, archimedean and global heights of a point.
    Height {
        #[arg(allow_hyphen_values = true)]
        point: String,
    },
    /// The fan polynomial Q and its degree bounds.
    Qpoly {
        #[arg(long)]
        plain: bool,
        /// Residue degree per ray.
        #[arg(long)]
        inertia: Option<String>,
    },
    /// Local density at one prime, by direct summation and in closed form.
    Density {
        #[arg(long)]
        prime: u64,
        #[arg(long, default_value = "1")]
        s: String,
        #[arg(long, default_value_t = 1e-10)]
        target: f64,
    },
    /// Predicted leading constant.
    Predict {
        #[arg(long, value_enum, default_value = "orbifold")]
        alpha: AlphaArg,
    },
    /// Count points of height at most the bound at each checkpoint.
    Count {
        #[command(flatten)]
        args: CountArgs,
    },
    /// Count, fit, and compare with the predicted constant.
    Report {
        #[command(flatten)]
        args: CountArgs,
        /// Smallest checkpoint entering the fit.
        #[arg(long, default_value_t = 100.0)]
        min_bound: f64,
        #[arg(long, value_enum, default_value = "orbifold")]
        alpha: AlphaArg,
    },
}

struct Input {
    fan: Fan,
    label: String,
    weights: OrbifoldWeights,
}

fn load(cli: &Cli) -> Result<Input, FanError> {
    let name = cli.fan.as_deref().ok_or_else(|| FanError::InvalidConfig("--fan is required".into()))?;
    let path = PathBuf::from(name);
    let (fan, file_weights, label) = if path.exists() {
        let ff = fanfile::read(&path)?;
        let label = path.file_stem().map_or(name.to_string(), |s| s.to_string_lossy().into_owned());
        (Fan::new(ff.raw)?, ff.weights, label)
    } else {
        let fan = library::by_name(name)
            .ok_or_else(|| FanError::InvalidConfig(format!("`{name}` is neither a file nor a library fan")))?;
        (fan, None, name.to_string())
    };
    let weights = match (&cli.weights, file_weights) {
        (Some(w), _) => OrbifoldWeights::parse_list(w)?,
        (None, Some(w)) => w,
        (None, None) => OrbifoldWeights::ones(fan.orbit_count()),
    };
    fan.check_weights(&weights)?;
    Ok(Input { fan, label, weights })
}

fn bound(cli: &Cli) -> Result<Rat, FanError> {
    let s = cli.bound.as_deref().ok_or_else(|| FanError::InvalidConfig("--bound is required".into()))?;
    arith::parse_rational(s).ok_or_else(|| FanError::Parse(format!("bad bound `{s}`")))
}

fn emit(cli: &Cli, text: &str) -> Result<(), FanError> {
    match &cli.out {
        Some(p) => fs::write(p, text).map_err(|e| FanError::InvalidConfig(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn point(s: &str, fan: &Fan) -> Result<TorusPoint, FanError> {
    let p: TorusPoint = s.parse()?;
    if p.dim() != fan.dim() {
        return Err(FanError::Parse(format!("point has {} coordinates, fan has dimension {}", p.dim(), fan.dim())));
    }
    Ok(p)
}

fn check(input: &Input) -> Result<String, FanError> {
    let fan = &input.fan;
    let mut s = String::new();
    let c = fan.completeness();
    s += &format!("dim={}\nrays={}\nmaximal_cones={}\n", fan.dim(), fan.ray_count(), fan.maximal_cones().len());
    s += &format!("regular={}\ncomplete={}\n", fan.is_regular(), c.complete);
    if let Some(w) = &c.witness {
        s += &format!("completeness_witness={w:?}\n");
    }
    s += &format!("split={}\nweights={}\n", fan.is_split(), input.weights);
    if !fan.is_smooth_complete() {
        print!("{s}");
        return Err(FanError::NotSmoothComplete);
    }
    let pic = picard::picard(fan)?;
    let phi = PlFunction::log_anticanonical(fan, &input.weights);
    s += &format!("picard_rank={}\n", pic.rank);
    s += &format!("kappa={}\n", heights::kappa(&phi));
    let fmt = |v: &[Rat]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    s += &format!("class_anticanonical={}\n", fmt(&pic.anticanonical()));
    s += &format!("class_log_anticanonical={}\n", fmt(&pic.log_anticanonical(fan, &input.weights)));
    Ok(s)
}

fn classify(input: &Input, cli: &Cli, pt: &str, all: bool) -> Result<String, FanError> {
    let fan = &input.fan;
    let p = point(pt, fan)?;
    let profile = points::multiplicity_profile(fan, &p)?;
    let mut s = String::new();
    for (prime, lp) in &profile.by_prime {
        s += &format!("p={prime} cone={:?} coeffs={:?}\n", lp.cone, lp.coeffs);
    }
    let variants: Vec<Variant> = if all { Variant::ALL.to_vec() } else { vec![cli.variant] };
    for v in variants {
        let g = points::classify_global_detailed(fan, &input.weights, &p, &BTreeSet::new(), v, None)?;
        s += &format!("{v}={}", g.ok);
        if let Some(w) = g.witness {
            s += &format!(" witness={w}");
        }
        if g.infinite_weight_violation {
            s += " infinite_weight";
        }
        s.push('\n');
    }
    Ok(s)
}

fn height(input: &Input, pt: &str) -> Result<String, FanError> {
    let fan = &input.fan;
    let p = point(pt, fan)?;
    let phi = PlFunction::log_anticanonical(fan, &input.weights);
    let h = heights::global_height(fan, &phi, &p)?;
    let mut s = String::new();
    for (prime, e) in &h.finite_part {
        s += &format!("p={prime} exponent={e}\n");
    }
    s += &format!("archimedean={}\n", h.archimedean());
    s += &format!("global={}\n", h.value());
    let d = h.exact_denominator();
    s += &format!("global^{d}={}\n", h.exact_power(&d));
    Ok(s)
}

fn qpoly(input: &Input, cli: &Cli, plain: bool, inertia: Option<&str>) -> Result<String, FanError> {
    let fan = &input.fan;
    let cs = match inertia {
        Some(list) => {
            let f = list
                .split(',')
                .map(|t| t.trim().parse::<u32>().map_err(|_| FanError::Parse(format!("bad inertia entry `{t}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            if f.len() != fan.ray_count() {
                return Err(FanError::Parse(format!("expected {} inertia entries", fan.ray_count())));
            }
            InvariantConeSet::with_inertia(fan, &f)
        }
        None => InvariantConeSet::split(fan),
    };
    let variant = if plain {
        FanVariant::Plain
    } else {
        match cli.variant.counting_kind() {
            Some(points::CountingKind::Campana) => FanVariant::Campana,
            Some(points::CountingKind::Darmon) => FanVariant::Darmon,
            None => return Err(FanError::Unsupported("weak points have no fan polynomial".into())),
        }
    };
    let q = fan_functions::q_polynomial(&cs, &input.weights, variant)?;
    let rep = fan_functions::verify_degree_bounds(&cs, &input.weights, variant, &q)?;
    let mut s = format!("Q = {}\n", q.render(&cs.variable_names()));
    for (name, c) in [
        ("block_degree", &rep.literal),
        ("single_block", &rep.single_block),
        ("total_degree", &rep.total_degree),
        ("convergence", &rep.convergence),
    ] {
        if c.applicable {
            s += &format!("{name}={}", if c.ok { "ok" } else { "violated" });
            if let Some(w) = &c.witness {
                s += &format!(" at {w}");
            }
            s.push('\n');
        }
    }
    Ok(s)
}

fn counting_kind(v: Variant) -> Result<points::CountingKind, FanError> {
    v.counting_kind().ok_or_else(|| FanError::Unsupported(format!("no density or constant for {v} points")))
}

fn run_count(input: &Input, cli: &Cli, args: &CountArgs, checkpoints: usize) -> Result<CountRun, FanError> {
    let mut cfg = CountConfig::new(input.weights.clone(), cli.variant, bound(cli)?);
    cfg.checkpoints = checkpoints;
    cfg.workers = cli.workers;
    cfg.budget = args.budget;
    cfg.seed = cli.seed;
    cfg.audit = !args.no_audit;
    let run = enumerate::count(&input.fan, &cfg)?;
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(a) = run.audit {
        eprintln!("audit: {} sampled, {} failures", a.sampled, a.failures);
        if a.failures > 0 {
            return Err(FanError::Unsupported(format!("audit found {} invalid points", a.failures)));
        }
    }
    Ok(run)
}

fn count_csv(run: &CountRun, label: &str) -> String {
    let mut s = format!("{}\n", CountRun::CSV_HEADER);
    for row in run.csv_rows(label) {
        s += &row;
        s.push('\n');
    }
    s
}

fn report(input: &Input, cli: &Cli, args: &CountArgs, min_bound: f64, alpha: AlphaArg) -> Result<String, FanError> {
    if args.checkpoints < 5 {
        return Err(FanError::InvalidConfig("a fit needs at least 5 checkpoints".into()));
    }
    let kind = counting_kind(cli.variant)?;
    let pred = densities::predicted_constant_with(&input.fan, &input.weights, kind, cli.primes_cutoff, alpha.into())?;
    let b = pred.b;
    let mut checkpoints = if b >= 2 { args.checkpoints.max(8) } else { args.checkpoints };
    let (run, fit) = loop {
        let run = run_count(input, cli, args, checkpoints)?;
        let data: Vec<(f64, f64)> = run.checkpoints.iter().map(|c| (rat_to_f64(&c.bound), c.count as f64)).collect();
        let fit = fit::fit_constant(&data, b, min_bound);
        let ill = fit.warnings.iter().any(|w| w.starts_with("ill-conditioned"));
        if ill && checkpoints < 4 * args.checkpoints {
            checkpoints *= 2;
            eprintln!("warning: ill-conditioned fit; widening grid to {checkpoints} checkpoints");
            continue;
        }
        break (run, fit);
    };
    for w in &fit.warnings {
        eprintln!("warning: {w}");
    }
    eprint!("{}", count_csv(&run, &input.label));
    eprintln!("{pred}");
    eprintln!("fit: points={} max_rel_residual={:.3e}", fit.points, fit.max_rel_residual);
    if let Some(c2) = fit.secondary {
        eprintln!("fit: secondary={c2}");
    }
    for (bb, ratio, model) in enumerate::doubling_ratios(&run, b).iter().rev().take(3) {
        eprintln!("doubling: B={bb} N(2B)/N(B)={ratio:.4} model={model:.4}");
    }
    Ok(format!("{}\n", Comparison::new(fit, &pred)))
}

fn run(cli: &Cli) -> Result<String, FanError> {
    let input = load(cli)?;
    match &cli.cmd {
        Cmd::Check => check(&input),
        Cmd::Locate { vector } => {
            let v = vector
                .split(',')
                .map(|t| t.trim().parse::<i64>().map_err(|_| FanError::Parse(format!("bad lattice entry `{t}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            if v.len() != input.fan.dim() {
                return Err(FanError::Parse(format!("vector must have {} entries", input.fan.dim())));
            }
            let lp = points::locate_degree(&input.fan, &v)?;
            Ok(format!("cone={:?}\ncoeffs={:?}\n", lp.cone, lp.coeffs))
        }
        Cmd::Classify { point, all } => classify(&input, cli, point, *all),
        Cmd::Height { point } => height(&input, point),
        Cmd::Qpoly { plain, inertia } => qpoly(&input, cli, *plain, inertia.as_deref()),
        Cmd::Density { prime, s, target } => {
            if !arith::is_prime(*prime) {
                return Err(FanError::InvalidConfig(format!("{prime} is not prime")));
            }
            let s = arith::parse_rational(s).ok_or_else(|| FanError::Parse(format!("bad s `{s}`")))?;
            let d = densities::local_density(&input.fan, &input.weights, counting_kind(cli.variant)?, *prime, &s, *target)?;
            Ok(format!(
                "p={}\ns={}\ndirect={}\ntail_bound={:e}\nclosed={}\nagree={}\n",
                d.p,
                d.s,
                d.direct_value,
                d.tail_bound,
                d.closed_value,
                d.agrees()
            ))
        }
        Cmd::Predict { alpha } => {
            let kind = counting_kind(cli.variant)?;
            let r = densities::predicted_constant_with(&input.fan, &input.weights, kind, cli.primes_cutoff, (*alpha).into())?;
            Ok(format!("{r}\n"))
        }
        Cmd::Count { args } => {
            let run = run_count(&input, cli, args, args.checkpoints)?;
            Ok(count_csv(&run, &input.label))
        }
        Cmd::Report { args, min_bound, alpha } => report(&input, cli, args, *min_bound, *alpha),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli).and_then(|text| emit(&cli, &text)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
