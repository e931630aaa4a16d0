//! `lpn` command-line tool.
//!
//! Exit codes: 0 success, 2 bad input, 3 infeasible plan, 4 key not
//! recovered, 5 resource budget exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use lpn_core::instance_file;
use lpn_core::oracle::noise_bit;
use lpn_core::planner::fmt_display;
use lpn_core::{
    desk_plan, emit_table, format_table, make_plan, piling_up_bias, seeded_rng, solve, Bias,
    LpnError, LpnInstance, Plan, PlanOverrides, SolverConfig,
};
use num_traits::ToPrimitive;

#[derive(Parser)]
#[command(name = "lpn", version, about = "Learning Parity with Noise solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted instance file.
    Gen(GenArgs),
    /// Print solver parameters for a sample budget.
    Plan(PlanArgs),
    /// Parameter and complexity table over several sample budgets.
    Table(TableArgs),
    /// Recover the key of an instance file.
    Solve(SolveArgs),
    /// Monte Carlo check of the bias of a w-wise XOR of noise bits.
    Pileup(PileupArgs),
    /// Time every solver stage on fresh instances.
    Bench(BenchArgs),
}

#[derive(Args, Clone, Copy, Default)]
struct Overrides {
    /// Even number of samples per combination.
    #[arg(long)]
    w: Option<u32>,
    /// Coordinates cancelled by the combination step.
    #[arg(long)]
    b: Option<u32>,
    /// Coordinates removed by decimation.
    #[arg(long)]
    l: Option<u32>,
}

impl From<Overrides> for PlanOverrides {
    fn from(o: Overrides) -> Self {
        PlanOverrides {
            w_int: o.w,
            b_int: o.b,
            l_prime: o.l,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    /// Bias as NUM/DEN.
    #[arg(long)]
    eps: Bias,
    /// Number of samples.
    #[arg(long = "N")]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Write the planted key to `<out>.key`.
    #[arg(long)]
    include_key: bool,
    /// Store the planted key in the instance header.
    #[arg(long)]
    embed_key: bool,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    eps: Bias,
    #[arg(long = "logN", allow_negative_numbers = true)]
    log_n: f64,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long, default_value_t = 128)]
    n: usize,
    #[arg(long, default_value = "1/8")]
    eps: Bias,
    #[arg(
        long = "logN",
        value_delimiter = ',',
        default_value = "10,20,30,40,47,50"
    )]
    log_n: Vec<f64>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    /// Recorded in the report; the solver itself is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the result document here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Planted-key side file for the exact-match check.
    #[arg(long)]
    key: Option<PathBuf>,
}

#[derive(Args)]
struct PileupArgs {
    #[arg(long)]
    eps: Bias,
    #[arg(long)]
    w: u32,
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    eps: Bias,
    #[arg(long = "logN")]
    log_n: f64,
    #[arg(long, default_value_t = 3)]
    repetitions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    overrides: Overrides,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<LpnError> for Failure {
    fn from(e: LpnError) -> Self {
        let code = match e {
            LpnError::InfeasiblePlan(_) => 3,
            LpnError::Resource { .. } => 5,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Table(a) => cmd_table(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Pileup(a) => cmd_pileup(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| fail(2, format!("cannot write {}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| fail(2, format!("cannot read {}: {e}", path.display())))
}

fn key_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".key");
    PathBuf::from(s)
}

fn cmd_gen(a: GenArgs) -> CmdResult {
    let inst = LpnInstance::generate(a.n, a.eps, a.count, a.seed)?;
    let key = inst.key.clone().expect("generated instances carry a key");
    let file = if a.embed_key {
        inst
    } else {
        inst.attack_only()
    };
    write_file(&a.out, &instance_file::serialize(&file))?;
    if a.include_key {
        write_file(&key_path(&a.out), &instance_file::serialize_key(&key))?;
    }
    Ok(0)
}

fn cmd_plan(a: PlanArgs) -> CmdResult {
    let plan = make_plan(a.n, a.eps, a.log_n, a.overrides.into())?;
    print!("{}", plan.to_kv());
    Ok(if plan.feasible { 0 } else { 3 })
}

fn cmd_table(a: TableArgs) -> CmdResult {
    let rows = emit_table(a.n, a.eps, &a.log_n);
    print!("{}", format_table(&rows, &a.log_n));
    Ok(0)
}

fn solver_plan(
    n: usize,
    eps: Bias,
    samples: usize,
    overrides: PlanOverrides,
) -> Result<Plan, Failure> {
    if samples == 0 {
        return Err(fail(2, "instance has no samples"));
    }
    let plan = desk_plan(n, eps, (samples as f64).log2(), overrides)?;
    if !plan.feasible {
        return Err(fail(
            3,
            format!(
                "infeasible plan (w' = {}, b' = {}, l' = {})",
                plan.w_int, plan.b_int, plan.l_prime
            ),
        ));
    }
    Ok(plan)
}

fn cmd_solve(a: SolveArgs) -> CmdResult {
    let inst = instance_file::parse(&read_file(&a.input)?)?;
    let key = match &a.key {
        Some(p) => Some(instance_file::parse_key(&read_file(p)?)?),
        None => inst.key.clone(),
    };
    let plan = solver_plan(inst.n, inst.eps, inst.len(), a.overrides.into())?;
    let result = solve(&inst, &plan, &SolverConfig::default())?;
    let exact = key.map(|k| k == result.key_hat);
    let mut doc = result.to_kv(inst.eps, exact);
    if let Some(seed) = a.seed {
        doc = format!("seed = {seed}\n{doc}");
    }
    print!("{doc}");
    if let Some(p) = &a.report {
        write_file(p, &doc)?;
    }
    Ok(if result.success { 0 } else { 4 })
}

fn cmd_pileup(a: PileupArgs) -> CmdResult {
    if a.trials < 1000 {
        return Err(fail(
            2,
            format!("need at least 1000 trials, got {}", a.trials),
        ));
    }
    let predicted = piling_up_bias(&a.eps.to_rational(), a.w)?;
    let mut rng = seeded_rng(a.seed);
    let mut clean = 0u64;
    for _ in 0..a.trials {
        let mut e = false;
        for _ in 0..a.w {
            e ^= noise_bit(a.eps, &mut rng);
        }
        if !e {
            clean += 1;
        }
    }
    let empirical = clean as f64 / a.trials as f64 - 0.5;
    let pred = predicted.to_f64().unwrap_or(0.0);
    let sigma = 0.5 / (a.trials as f64).sqrt();
    println!("eps = {}", a.eps);
    println!("w = {}", a.w);
    println!("predicted = {predicted}");
    println!("predicted_value = {pred:.6}");
    println!("empirical = {empirical:.6}");
    println!("trials = {}", a.trials);
    println!("z = {:.3}", (empirical - pred) / sigma);
    Ok(0)
}

fn cmd_bench(a: BenchArgs) -> CmdResult {
    if a.repetitions == 0 {
        return Err(fail(2, "repetitions must be at least 1"));
    }
    let count = a.log_n.exp2().round() as usize;
    let plan = solver_plan(a.n, a.eps, count, a.overrides.into())?;
    let cfg = SolverConfig::default();
    let stages = ["decimate", "combine", "walsh", "suffix", "verify", "total"];
    let mut times = vec![Vec::new(); stages.len()];
    let (mut exact, mut halves, mut equations) = (0, 0.0, 0.0);
    for rep in 0..a.repetitions {
        let inst = LpnInstance::generate(a.n, a.eps, count, a.seed + rep as u64)?;
        let t = Instant::now();
        let res = solve(&inst, &plan, &cfg)?;
        let total = t.elapsed().as_secs_f64() * 1e3;
        let r = &res.report;
        for (v, x) in times.iter_mut().zip([
            r.decimate_ms,
            r.combine_ms,
            r.walsh_ms,
            r.suffix_ms,
            r.verify_ms,
            total,
        ]) {
            v.push(x);
        }
        if inst.key.as_ref() == Some(&res.key_hat) {
            exact += 1;
        }
        halves += r.halves as f64;
        equations += r.equations as f64;
    }
    let reps = a.repetitions as f64;
    println!(
        "n = {}, eps = {}, log N = {}, w' = {}, b' = {}, l' = {}, exact = {exact}/{}",
        a.n, a.eps, a.log_n, plan.w_int, plan.b_int, plan.l_prime, a.repetitions
    );
    println!("{:<10} {:>12} {:>12}", "stage", "mean ms", "min ms");
    for (name, v) in stages.iter().zip(&times) {
        let mean = v.iter().sum::<f64>() / reps;
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        println!("{name:<10} {mean:>12.3} {min:>12.3}");
    }
    let m = plan.spectrum_dim() as f64;
    let lc = ((halves + equations) / reps).max(1.0).log2();
    let ht = (m.max(1.0) * m.exp2() + equations / reps).log2();
    println!(
        "{:<10} {:>12} {:>12} {:>12}",
        "cost", "predicted", "measured", "delta"
    );
    for (name, p, got) in [
        ("log C_LC", plan.log_c_lc, lc),
        ("log C_HT", plan.log_c_ht, ht),
    ] {
        println!(
            "{name:<10} {:>12} {:>12} {:>12}",
            fmt_display(p, 2),
            fmt_display(got, 2),
            fmt_display(got - p, 2)
        );
    }
    Ok(0)
}
