//! `lpa`: command-line front end for list privacy amplification.
//!
//! Exit codes: 0 on success, 1 on a domain error or failed check, 2 on a
//! usage error.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use listpa::bounds::{
    bb84_phase_threshold, clamp_length, qlhl_length, qllhl_length, Bb84Params, ListSize,
};
use listpa::gf2m::Field;
use listpa::listhash::{
    ip_list_hash_with, ip_sample_seed, list_pa_naive, list_pa_with, toeplitz_list_hash_naive,
    toeplitz_list_hash_with, toeplitz_sample_seed, HashFamily, ListPaParams, ToeplitzSeed,
};
use listpa::qkdsim::{
    emit_report, intercept_resend_demo, serialize, simulate_rounds, Channel, Format, PipelineConfig,
};
use listpa::seclab::{
    exact_tuple_count, make_syndrome_source, min_entropy, real_ideal_distance, smooth_min_entropy,
    universality_check, verify_qllhl_grid, CqSource, DistanceReport, Mode, Rational, Verdict,
    EXACT_LIMIT,
};
use listpa::{BitString, Exec, MasterSeed};

#[derive(Parser)]
#[command(name = "lpa", version, about = "List privacy amplification toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extractable list key length for a given min-entropy.
    Bound(BoundArgs),
    /// Phase-error thresholds as a CSV table over list sizes.
    Threshold(ThresholdArgs),
    /// Hash an input file into a list of keys.
    Hash(HashArgs),
    /// Run an exact verification suite.
    Verify(VerifyArgs),
    /// Simulate BB84 post-processing rounds.
    Simulate(SimulateArgs),
    /// Time the naive and transform Toeplitz paths and the IP path.
    Bench(BenchArgs),
}

#[derive(Args)]
struct BoundArgs {
    /// Smooth min-entropy in bits.
    #[arg(long, allow_hyphen_values = true)]
    k: f64,
    /// Security parameter exponent: eps = 2^-EPS_EXP.
    #[arg(long)]
    eps_exp: f64,
    /// List size, as an integer or 2^N.
    #[arg(long, value_parser = parse_list)]
    list: ListSize,
    /// Floor and clamp to a nonnegative integer.
    #[arg(long)]
    clamp: bool,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long)]
    n_sift: f64,
    #[arg(long)]
    e_b: f64,
    #[arg(long)]
    eps_exp: f64,
    /// List size exponents (L = 2^N); repeat or comma-separate.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    list_exp: Vec<u32>,
    /// Coefficient c in Delta = c * sqrt(n') * log2(1/eps).
    #[arg(long, default_value_t = 1.0)]
    delta_c: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConstructionArg {
    Ip,
    Toeplitz,
}

#[derive(Args)]
struct HashArgs {
    /// Raw input, bit i in byte i/8 at position i%8.
    #[arg(long = "in")]
    input: PathBuf,
    /// Number of input bits to use.
    #[arg(long)]
    bits: usize,
    #[arg(long, value_enum)]
    construction: ConstructionArg,
    #[arg(long)]
    ell: usize,
    #[arg(long)]
    list: usize,
    /// Field degree for the IP construction.
    #[arg(long, default_value_t = 64)]
    m: u32,
    #[arg(long)]
    seed_out: PathBuf,
    #[arg(long)]
    keys_out: PathBuf,
    /// Write the secret index here instead of standard error.
    #[arg(long)]
    index_out: Option<PathBuf>,
    #[arg(long, env = "LPA_MASTER_SEED")]
    master_seed: u64,
    /// Use the word-loop Toeplitz product.
    #[arg(long)]
    naive: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(subcommand)]
    suite: Suite,
}

#[derive(Subcommand)]
enum Suite {
    /// Exhaustive strong two-universality check.
    Universality {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        ell: usize,
    },
    /// Min-entropy of syndrome, copy and uniform sources, or of a source file.
    Minentropy {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long)]
        source: Option<PathBuf>,
        /// Smoothing budget for --source.
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
    /// Real-vs-ideal distance against the list bound.
    Qllhl {
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 4)]
        list: usize,
        #[arg(long, default_value_t = 1)]
        ell: usize,
        /// Single security parameter; by default a grid in (0, 1) is swept.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, value_enum, default_value = "toeplitz")]
        construction: ConstructionArg,
        #[arg(long, default_value_t = 1)]
        m: u32,
        #[arg(long)]
        source: Option<PathBuf>,
    },
    /// Distances of the fully exposed source for several list sizes.
    Tightness {
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        ell: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        lists: Vec<usize>,
        #[arg(long, value_enum, default_value = "toeplitz")]
        construction: ConstructionArg,
        #[arg(long, default_value_t = 1)]
        m: u32,
        /// Seed tuples per Monte-Carlo estimate when exact enumeration is too large.
        #[arg(long, default_value_t = 20_000)]
        samples: u64,
        #[arg(long, env = "LPA_MASTER_SEED", default_value_t = 0)]
        master_seed: u64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SimMode {
    Round,
    InterceptDemo,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ChannelArg {
    Iid,
    InterceptResend,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "round")]
    mode: SimMode,
    #[arg(long, default_value_t = 10_000)]
    n_raw: usize,
    #[arg(long, value_enum, default_value = "iid")]
    channel: ChannelArg,
    /// Flip probability of the iid channel.
    #[arg(long, default_value_t = 0.01)]
    e_b: f64,
    /// Use this phase-error rate instead of the estimated bit-error rate.
    #[arg(long)]
    e_ph: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    sample_fraction: f64,
    #[arg(long, default_value_t = 20.0)]
    eps_exp: f64,
    #[arg(long, default_value_t = 20.0)]
    eps_auth_exp: f64,
    #[arg(long, default_value_t = 0.0)]
    eps_ec: f64,
    #[arg(long, default_value_t = 1.0)]
    delta_c: f64,
    #[arg(long, value_parser = parse_list, default_value = "1")]
    list: ListSize,
    #[arg(long, value_enum, default_value = "toeplitz")]
    construction: ConstructionArg,
    #[arg(long, default_value_t = 64)]
    m: u32,
    #[arg(long, default_value_t = 1)]
    rounds: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Include the secret index and keys in the report.
    #[arg(long)]
    unsafe_reveal: bool,
    #[arg(long, env = "LPA_MASTER_SEED", default_value_t = 0)]
    master_seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 1 << 16)]
    n: usize,
    #[arg(long, default_value_t = 1 << 10)]
    ell: usize,
    #[arg(long, default_value_t = 4)]
    list: usize,
    #[arg(long, value_enum)]
    construction: Option<ConstructionArg>,
    #[arg(long, default_value_t = 64)]
    m: u32,
    #[arg(long, default_value_t = 3)]
    reps: u32,
    /// Run the per-list loop on one thread.
    #[arg(long)]
    sequential: bool,
    #[arg(long, env = "LPA_MASTER_SEED", default_value_t = 0)]
    master_seed: u64,
}

fn parse_list(s: &str) -> Result<ListSize, String> {
    let parsed = match s.strip_prefix("2^") {
        Some(exp) => exp
            .parse::<f64>()
            .map_err(|e| e.to_string())
            .and_then(|e| ListSize::from_log2(e).map_err(|e| e.to_string())),
        None => s
            .parse::<u64>()
            .map_err(|e| e.to_string())
            .and_then(|c| ListSize::from_count(c).map_err(|e| e.to_string())),
    };
    parsed.map_err(|e| format!("invalid list size `{s}`: {e}"))
}

fn family(c: ConstructionArg, m: u32) -> HashFamily {
    match c {
        ConstructionArg::Ip => HashFamily::Ip { m },
        ConstructionArg::Toeplitz => HashFamily::Toeplitz,
    }
}

fn list_label(list: ListSize) -> String {
    match list.count() {
        Some(c) => c.to_string(),
        None => format!("2^{}", list.log2()),
    }
}

fn eps(exp: f64) -> f64 {
    (-exp).exp2()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Returns whether every check passed.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Bound(a) => cmd_bound(a),
        Command::Threshold(a) => cmd_threshold(a),
        Command::Hash(a) => cmd_hash(a),
        Command::Verify(a) => cmd_verify(a.suite),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn cmd_bound(a: BoundArgs) -> Result<bool> {
    let e = eps(a.eps_exp);
    let list = qllhl_length(a.k, e, a.list)?;
    let single = qlhl_length(a.k, e)?;
    if a.clamp {
        println!("{}", clamp_length(list));
        eprintln!("single-hash length: {}", clamp_length(single));
    } else {
        println!("{list}");
        eprintln!("single-hash length: {single}");
    }
    Ok(true)
}

fn cmd_threshold(a: ThresholdArgs) -> Result<bool> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "L,log2_L,threshold")?;
    for exp in &a.list_exp {
        let list = ListSize::pow2(*exp);
        let p = Bb84Params {
            n_sift: a.n_sift,
            e_b: a.e_b,
            e_ph: 0.0,
            epsilon: eps(a.eps_exp),
            list,
            epsilon_auth: 0.5,
            delta_coeff: a.delta_c,
        };
        let t = bb84_phase_threshold(&p)?;
        writeln!(out, "{},{},{:.6}", list_label(list), exp, t)?;
    }
    eprintln!(
        "note: thresholds are the largest phase-error rate with a positive list key length \
         under Delta = c*sqrt(n')*log2(1/eps). Tabulated figures of about 10.6-10.8% at \
         e_b = 1% do not follow from this expression and are not reproduced."
    );
    Ok(true)
}

fn cmd_hash(a: HashArgs) -> Result<bool> {
    let bytes = fs::read(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let x = BitString::from_prefix(&bytes, a.bits)
        .with_context(|| format!("{} holds fewer than {} bits", a.input.display(), a.bits))?;
    let params = ListPaParams {
        family: family(a.construction, a.m),
        ell: a.ell,
        list: a.list,
    };
    let master = MasterSeed(a.master_seed);
    let out = if a.naive {
        list_pa_naive(&x, &params, master, Exec::default())?
    } else {
        list_pa_with(&x, &params, master, Exec::default())?
    };
    fs::write(&a.seed_out, out.seed.to_bytes())
        .with_context(|| format!("writing {}", a.seed_out.display()))?;
    fs::write(&a.keys_out, out.bundle.keys_to_bytes())
        .with_context(|| format!("writing {}", a.keys_out.display()))?;
    let index = out.bundle.index().reveal();
    match &a.index_out {
        Some(p) => fs::write(p, format!("{index}\n"))
            .with_context(|| format!("writing {}", p.display()))?,
        None => eprintln!("SECRET index: {index}"),
    }
    eprintln!("seed bits: {}", out.seed_bits);
    Ok(true)
}

fn load_source(path: &PathBuf) -> Result<CqSource> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(CqSource::parse(&text)?)
}

fn describe(d: &DistanceReport) -> String {
    match (&d.exact, d.stderr) {
        (Some(r), _) => format!("{} ({:.6}, exact)", r, d.value),
        (None, Some(se)) => format!(
            "{:.6} +/- {:.6} (monte-carlo, {} samples)",
            d.value,
            se,
            d.samples.unwrap_or(0)
        ),
        _ => format!("{:.6}", d.value),
    }
}

fn cmd_verify(suite: Suite) -> Result<bool> {
    match suite {
        Suite::Universality { n, ell } => {
            let mut ok = true;
            let mut ran = 0;
            let mut cases: Vec<(String, HashFamily)> = [1u32, 2]
                .iter()
                .filter(|&&m| ell <= m as usize)
                .map(|&m| (format!("ip m={m}"), HashFamily::Ip { m }))
                .collect();
            cases.push(("toeplitz".into(), HashFamily::Toeplitz));
            for (name, fam) in cases {
                let dev = universality_check(fam, n, ell)?;
                println!("{name} n={n} ell={ell}: max deviation {dev}");
                ok &= dev == 0u128.into();
                ran += 1;
            }
            if ran == 0 {
                bail!("no construction applies");
            }
            Ok(ok)
        }
        Suite::Minentropy { n, source, eps } => {
            if let Some(path) = source {
                let s = load_source(&path)?;
                println!("min-entropy: {}", min_entropy(&s));
                println!(
                    "smooth min-entropy (eps={eps}): {}",
                    smooth_min_entropy(&s, eps)?
                );
                return Ok(true);
            }
            let mut ok = true;
            for size in 0..=n {
                for k in 0..=size {
                    let h = min_entropy(&make_syndrome_source(size, k)?);
                    if h != k as f64 {
                        println!("syndrome n={size} k={k}: {h} (expected {k})");
                        ok = false;
                    }
                }
                ok &= min_entropy(&CqSource::copy(size)?) == 0.0;
                ok &= min_entropy(&CqSource::uniform(size)?) == size as f64;
            }
            println!(
                "syndrome, copy and uniform sources up to n={n}: {}",
                if ok { "pass" } else { "fail" }
            );
            Ok(ok)
        }
        Suite::Qllhl {
            n,
            k,
            list,
            ell,
            eps,
            construction,
            m,
            source,
        } => {
            let src = match source {
                Some(p) => load_source(&p)?,
                None => make_syndrome_source(n, k)?,
            };
            let fam = family(construction, m);
            let grid: Vec<f64> = match eps {
                Some(e) => vec![e],
                None => (1..20).map(|i| i as f64 * 0.05).collect(),
            };
            let reports = verify_qllhl_grid(&src, &grid, list, ell, fam, Mode::Exact)?;
            println!(
                "distance L={list} ell={ell}: {}",
                describe(&reports[0].distance)
            );
            let mut ok = true;
            let mut applicable = 0;
            for (e, r) in grid.iter().zip(&reports) {
                println!(
                    "eps={e:.2} smooth={:.4} bound={:.4} target={:.2}: {}",
                    r.smooth_entropy, r.bound, r.target, r.verdict
                );
                match r.verdict {
                    Verdict::Fail => ok = false,
                    Verdict::Pass => applicable += 1,
                    Verdict::NotApplicable => {}
                }
            }
            println!(
                "{applicable} applicable, {}",
                if ok { "no failures" } else { "FAILED" }
            );
            Ok(ok)
        }
        Suite::Tightness {
            n,
            ell,
            lists,
            construction,
            m,
            samples,
            master_seed,
        } => {
            let src = CqSource::copy(n)?;
            let fam = family(construction, m);
            let mut ok = true;
            let mut prev: Option<f64> = None;
            let mut monotone = true;
            for list in lists {
                let exact = exact_tuple_count(fam, n, ell, list)? <= EXACT_LIMIT;
                let mode = if exact {
                    Mode::Exact
                } else {
                    Mode::MonteCarlo {
                        samples,
                        master: MasterSeed(master_seed),
                    }
                };
                let d = real_ideal_distance(&src, fam, ell, list, mode)?;
                println!("L={list}: {}", describe(&d));
                if list == 1 {
                    let expect = 1.0 - (-(ell as f64)).exp2();
                    let hit = match &d.exact {
                        Some(r) => {
                            let den = 1u128 << ell;
                            *r == Rational::new(den - 1, den)
                        }
                        None => false,
                    };
                    println!(
                        "L=1 check 1 - 2^-ell = {expect}: {}",
                        if hit { "pass" } else { "fail" }
                    );
                    ok &= hit;
                }
                if let Some(p) = prev {
                    monotone &= d.value <= p;
                }
                prev = Some(d.value);
            }
            println!(
                "non-increasing in L: {}",
                if monotone { "yes" } else { "no" }
            );
            Ok(ok)
        }
    }
}

fn cmd_simulate(a: SimulateArgs) -> Result<bool> {
    let master = MasterSeed(a.master_seed);
    let format = match a.format {
        FormatArg::Json => Format::Json,
        FormatArg::Csv => Format::Csv,
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match a.mode {
        SimMode::InterceptDemo => {
            let d = intercept_resend_demo(a.n_raw, a.list, eps(a.eps_exp), master)?;
            out.write_all(&serialize(&[d], format)?)?;
        }
        SimMode::Round => {
            let cfg = PipelineConfig {
                n_raw: a.n_raw,
                channel: match a.channel {
                    ChannelArg::Iid => Channel::IidFlip(a.e_b),
                    ChannelArg::InterceptResend => Channel::InterceptResend,
                },
                sample_fraction: a.sample_fraction,
                bounds: Bb84Params {
                    epsilon: eps(a.eps_exp),
                    list: a.list,
                    epsilon_auth: eps(a.eps_auth_exp),
                    delta_coeff: a.delta_c,
                    ..Bb84Params::default()
                },
                e_ph_override: a.e_ph,
                eps_ec: a.eps_ec,
                family: family(a.construction, a.m),
                ..PipelineConfig::default()
            };
            let rounds = simulate_rounds(&cfg, master, a.rounds.max(1), Exec::default())?;
            if rounds.len() == 1 {
                out.write_all(&emit_report(&rounds[0], format, a.unsafe_reveal)?)?;
            } else {
                let reports: Vec<_> = rounds.iter().map(|t| t.report.clone()).collect();
                if a.unsafe_reveal {
                    eprintln!("note: --unsafe-reveal applies to single rounds only");
                }
                out.write_all(&serialize(&reports, format)?)?;
            }
        }
    }
    Ok(true)
}

fn time<T>(reps: u32, mut f: impl FnMut() -> Result<T>) -> Result<(Duration, T)> {
    let mut best = Duration::MAX;
    let mut last = None;
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        let v = f()?;
        best = best.min(start.elapsed());
        last = Some(v);
    }
    Ok((best, last.expect("at least one repetition")))
}

fn cmd_bench(a: BenchArgs) -> Result<bool> {
    let master = MasterSeed(a.master_seed);
    let exec = if a.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };
    let x = master.stream("bench/input").bit_string(a.n);
    let want = |c: ConstructionArg| a.construction.map_or(true, |x| x == c);
    println!("n={} ell={} L={} exec={:?}", a.n, a.ell, a.list, exec);
    let mut ok = true;
    if want(ConstructionArg::Toeplitz) {
        let seed: ToeplitzSeed =
            toeplitz_sample_seed(&mut master.stream("bench/seed"), a.n, a.ell, a.list)?;
        let (fast_t, fast) = time(a.reps, || Ok(toeplitz_list_hash_with(&seed, &x, exec)?))?;
        let (naive_t, naive) = time(a.reps, || Ok(toeplitz_list_hash_naive(&seed, &x, exec)?))?;
        if fast != naive {
            println!("toeplitz: paths disagree");
            ok = false;
        }
        println!("toeplitz naive: {:.3} ms", naive_t.as_secs_f64() * 1e3);
        println!("toeplitz fast:  {:.3} ms", fast_t.as_secs_f64() * 1e3);
        println!(
            "ratio naive/fast: {:.2}",
            naive_t.as_secs_f64() / fast_t.as_secs_f64().max(1e-12)
        );
    }
    if want(ConstructionArg::Ip) {
        let field = Field::with_default_poly(a.m)?;
        let ell = a.ell.min(a.m as usize);
        let seed = ip_sample_seed(&mut master.stream("bench/seed"), field, a.n, ell, a.list)?;
        let (t, _) = time(a.reps, || Ok(ip_list_hash_with(&seed, &x, exec)?))?;
        println!("ip m={} ell={}: {:.3} ms", a.m, ell, t.as_secs_f64() * 1e3);
    }
    Ok(ok)
}
