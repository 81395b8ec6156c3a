use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand, ValueEnum};

use optocool::config::tau_m;
use optocool::control::{
    compose_coupling, optimize, optimize_maintenance, reset_config, Basis, Objective, ObjectiveSpec,
    OptimizationResult, OptimizeOptions, Waveform,
};
use optocool::io::RunConfig;
use optocool::propagator::{simulate, Constant, Coupling, Trajectory};
use optocool::scenario::{table_one, table_two};
use optocool::{Config, Error};

#[derive(Parser, Debug)]
#[command(name = "optocool", version, about = "Optimal-control cooling of a mechanical resonator with structured baths")]
struct Cli {
    /// Run configuration (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (simulate) or directory (other commands).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Reject unknown configuration keys.
    #[arg(long, global = true, default_value_t = true, action = ArgAction::Set)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Propagate one coupling and write the phonon-number time series.
    Simulate {
        /// Waveform file; without it a constant coupling is used.
        #[arg(long)]
        coupling: Option<PathBuf>,
        /// Constant coupling, overriding `g_const`.
        #[arg(long)]
        g: Option<f64>,
    },
    /// Optimize the cooling pulse for `n_mech(t_cool)`.
    Cool,
    /// Optimize the maintenance pulse after a `cool` run.
    Maintain {
        /// Output directory of the `cool` run.
        #[arg(long)]
        cool: PathBuf,
    },
    /// Scenario tables.
    Tables {
        #[arg(value_enum)]
        which: Which,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Which {
    One,
    Two,
}

enum Failure {
    Input(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(format!("io error: {e}"))
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    let path = cli.config.as_ref().ok_or_else(|| Failure::Input("--config is required".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    let cfg = RunConfig::parse(&text, cli.strict)?;
    let out = cli.out.as_ref().ok_or_else(|| Failure::Input("--out is required".into()))?;
    let threads = cli
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(Failure::Input("--threads must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Input(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Simulate { coupling, g } => cmd_simulate(&cfg, cli.seed, coupling.as_deref(), *g, out),
        Command::Cool => cmd_cool(&cfg, cli.seed, out),
        Command::Maintain { cool } => cmd_maintain(&cfg, cli.seed, cool, out),
        Command::Tables { which } => cmd_tables(&cfg, cli.seed, *which, out),
    })
}

fn write(path: &Path, header: &str, body: &str) -> Outcome {
    fs::write(path, format!("{header}{body}"))
        .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

fn out_dir(out: &Path) -> Outcome {
    fs::create_dir_all(out).map_err(|e| Failure::Input(format!("cannot create {}: {e}", out.display())))
}

fn trajectory_csv(tr: &Trajectory<f64>, offset: f64, skip_first: bool) -> String {
    let tau = tau_m::<f64>();
    let mut s = String::new();
    let start = usize::from(skip_first);
    for i in start..tr.times.len() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            (tr.times[i] + offset) / tau,
            tr.n_mech[i],
            tr.n_opt[i],
            tr.coupling[i]
        );
    }
    s
}

const TRAJECTORY_COLUMNS: &str = "t_over_tau_m,n_mech,n_opt,g_of_t\n";

fn run_length(cfg: &RunConfig) -> Result<f64, Failure> {
    Ok(match cfg.opt_f64("t_final")? {
        Some(t) => t * tau_m::<f64>(),
        None => cfg.time("t_cool")?,
    })
}

fn cmd_simulate(cfg: &RunConfig, seed: u64, coupling: Option<&Path>, g: Option<f64>, out: &Path) -> Outcome {
    let system = cfg.system(run_length(cfg)?)?;
    let stride = cfg.usize("sample_stride")?.max(1);
    let tr = match coupling {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Failure::Input(format!("cannot read {}: {e}", p.display())))?;
            let w = Waveform::from_text(&text)?;
            w.check_feasible(&system.grid)?;
            simulate(&system, &w, stride)?
        }
        None => {
            let g0 = match g {
                Some(v) => v,
                None => cfg.f64("g_const")?,
            };
            simulate(&system, &Constant(g0), stride)?
        }
    };
    let body = format!("{TRAJECTORY_COLUMNS}{}", trajectory_csv(&tr, 0.0, false));
    write(out, &cfg.header(seed), &body)
}

fn summary(r: &OptimizationResult, extra: &[(&str, String)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "best_value = {}", r.best_value);
    let _ = writeln!(s, "iterations = {}", r.iterations);
    let _ = writeln!(s, "evaluation_count = {}", r.evaluation_count);
    let _ = writeln!(s, "converged = {}", r.converged);
    let _ = writeln!(s, "start_index = {}", r.start_index);
    for (k, v) in extra {
        let _ = writeln!(s, "{k} = {v}");
    }
    let trace: Vec<String> = r.objective_trace.iter().map(|v| v.to_string()).collect();
    let _ = writeln!(s, "objective_trace = {}", trace.join(" "));
    for st in &r.starts {
        let show = |v: Option<f64>| v.map_or("none".to_string(), |x| x.to_string());
        let _ = writeln!(
            s,
            "start_{} = initial {} final {} iterations {} converged {}{}",
            st.index,
            show(st.initial_value),
            show(st.final_value),
            st.iterations,
            st.converged,
            st.failure.as_ref().map_or(String::new(), |f| format!(" failure {f}"))
        );
    }
    s
}

fn cmd_cool(cfg: &RunConfig, seed: u64, out: &Path) -> Outcome {
    out_dir(out)?;
    let t_cool = cfg.time("t_cool")?;
    let system = cfg.system(t_cool)?;
    let options = cfg.optimize_options(seed)?;
    let spec = ObjectiveSpec::Terminal { t_cool };
    let r = optimize(&system, spec, &options)?;
    let header = cfg.header(seed);
    write(&out.join("summary.txt"), &header, &summary(&r, &[("t_cool", t_cool.to_string())]))?;
    write(&out.join("waveform.txt"), &header, &r.best_waveform.to_text())?;
    write(&out.join("waveform.csv"), &header, &r.best_waveform.to_csv(&system.grid))?;
    let tr = simulate(&system, &r.best_waveform, cfg.usize("sample_stride")?.max(1))?;
    write(
        &out.join("trace.csv"),
        &header,
        &format!("{TRAJECTORY_COLUMNS}{}", trajectory_csv(&tr, 0.0, false)),
    )
}

fn read_waveform(dir: &Path) -> Result<Waveform, Failure> {
    let p = dir.join("waveform.txt");
    let text = fs::read_to_string(&p).map_err(|e| Failure::Input(format!("cannot read {}: {e}", p.display())))?;
    Ok(Waveform::from_text(&text)?)
}

fn cmd_maintain(cfg: &RunConfig, seed: u64, cool_dir: &Path, out: &Path) -> Outcome {
    out_dir(out)?;
    let cool = read_waveform(cool_dir)?;
    let t_cool = cool.span.1;
    let system: Config = cfg.system(t_cool)?;
    let n_start = Objective::from_config(&system, ObjectiveSpec::Terminal { t_cool })?.evaluate(&cool)?;
    let window = cfg.time("window")?;
    let (markovian, _) = cfg.regimes()?;
    let options = OptimizeOptions {
        g_max: cfg.f64("maintain_g_max")?,
        basis: Basis::PiecewiseLinear {
            knots: cfg.usize("maintain_knots")?,
        },
        ..cfg.optimize_options(seed)?
    };
    options.validate()?;
    let (r, _) = optimize_maintenance(&system, n_start, window, markovian.cutoff, &options)?;
    let maintain = r.best_waveform.shifted(t_cool);
    let composite = compose_coupling(&cool, &maintain, t_cool)?;
    let header = cfg.header(seed);
    let baseline = {
        let reset = reset_config(&system, n_start, window, markovian.cutoff)?;
        let spec = optocool::control::window_spec(&reset, 0.0, reset.grid.t_final());
        Objective::from_config(&reset, spec)?.evaluate_coupling(&Constant(0.0))?
    };
    write(
        &out.join("summary.txt"),
        &header,
        &summary(
            &r,
            &[
                ("n_start", n_start.to_string()),
                ("baseline_average", baseline.to_string()),
                ("t_cool", t_cool.to_string()),
                ("window", window.to_string()),
            ],
        ),
    )?;
    write(&out.join("maintain_waveform.txt"), &header, &maintain.to_text())?;
    let stride = cfg.usize("sample_stride")?.max(1);
    let phase_one = simulate(&system, &cool, stride)?;
    let reset = reset_config(&system, n_start, window, markovian.cutoff)?;
    let phase_two = simulate(&reset, &r.best_waveform, stride)?;
    let mut trace = String::from(TRAJECTORY_COLUMNS);
    trace.push_str(&trajectory_csv(&phase_one, 0.0, false));
    trace.push_str(&trajectory_csv(&phase_two, t_cool, true));
    write(&out.join("trace.csv"), &header, &trace)?;
    let full = system.with_t_final(t_cool + window)?;
    let mut g = String::from("t,g\n");
    for j in 0..=full.grid.n_steps {
        let t = full.grid.time(j);
        let _ = writeln!(g, "{t},{}", composite.value(t));
    }
    write(&out.join("composite.csv"), &header, &g)
}

fn cmd_tables(cfg: &RunConfig, seed: u64, which: Which, out: &Path) -> Outcome {
    out_dir(out)?;
    let mut sweep = cfg.sweep(seed)?;
    let (table, name) = match which {
        Which::One => {
            if sweep.t_cool_list.len() > 1 {
                sweep.t_cool_list.truncate(1);
            }
            (table_one(&sweep)?, "table_one")
        }
        Which::Two => (table_two(&sweep)?, "table_two"),
    };
    let header = cfg.header(seed);
    write(&out.join(format!("{name}.csv")), &header, &table.to_csv())?;
    fs::write(out.join(format!("{name}.provenance.json")), table.provenance_json(&cfg.hash(), seed))?;
    Ok(())
}
