//! `smclab`: run, compare and tune sliding-mode controllers from TOML scenarios.
//!
//! Exit codes: 0 ok, 1 I/O failure, 2 config error, 3 simulation aborted,
//! 4 assertion (ordering or self-test) failed.

mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use smc_core::config::{self, Config, Objective, ScenarioObjective};
use smc_core::mpso::{self, tune, Variant};
use smc_core::sim::{compare, compute_metrics, reaching_stats, simulate};

#[derive(Parser)]
#[command(name = "smclab", version, about = "Sliding-mode control lab")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one scenario; writes trajectory.csv, metrics.txt, metrics.csv.
    Run(Common),
    /// Run every [[compare]] entry; writes comparison.csv and checks orderings.
    Compare(Common),
    /// Tune gains with the particle swarm; writes convergence.csv and best_gains.txt.
    Tune(Common),
    /// Run the bundled scenarios and report pass/fail per check.
    Selftest {
        #[arg(long, default_value = "out/selftest")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file, or `bundled:<name>` for a shipped scenario.
    #[arg(long)]
    config: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides tuning.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides sim.dt.
    #[arg(long)]
    dt: Option<f64>,
}

enum Failure {
    Io(anyhow::Error),
    Config(String),
    Abort(String),
    Assertion(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<config::ConfigError> for Failure {
    fn from(e: config::ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn load(c: &Common) -> Result<Config, Failure> {
    let text = match c.config.strip_prefix("bundled:") {
        Some(name) => config::bundled(name)
            .ok_or_else(|| {
                let names: Vec<&str> = config::BUNDLED.iter().map(|(n, _)| *n).collect();
                Failure::Config(format!("no bundled scenario `{name}` (have: {})", names.join(", ")))
            })?
            .to_string(),
        None => fs::read_to_string(&c.config)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", c.config)))?,
    };
    let mut cfg = Config::from_toml(&text)?;
    if let Some(dt) = c.dt {
        cfg = cfg.with_dt(dt)?;
    }
    if let Some(seed) = c.seed {
        cfg = cfg.with_seed(seed);
    }
    Ok(cfg)
}

fn write(dir: &Path, file: &str, body: &str) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let p = dir.join(file);
    fs::write(&p, body).with_context(|| format!("writing {}", p.display()))
}

fn cmd_run(c: &Common) -> Outcome {
    let cfg = load(c)?;
    let sc = &cfg.scenario;
    let tr = simulate(sc).map_err(|e| Failure::Config(e.to_string()))?;
    let m = compute_metrics(&tr, &sc.reference, sc.settle_band);
    write(&c.out, "trajectory.csv", &output::trajectory_csv(&tr))?;
    let text = output::metrics_text(&sc.name, &m, &tr);
    write(&c.out, "metrics.txt", &text)?;
    let abort = tr.abort.as_ref().map(|a| a.reason.to_string());
    let csv = format!(
        "{}\n{}\n",
        output::metrics_csv_header(),
        output::metrics_csv_row(&sc.name, &m, abort.as_deref())
    );
    write(&c.out, "metrics.csv", &csv)?;
    print!("{text}");
    match &tr.abort {
        Some(a) => Err(Failure::Abort(format!("aborted at step {} (t = {}): {}", a.step, a.t, a.reason))),
        None => Ok(()),
    }
}

fn cmd_compare(c: &Common) -> Outcome {
    let cfg = load(c)?;
    if cfg.compare.is_empty() {
        return Err(Failure::Config("no [[compare]] entries".into()));
    }
    let cmp = compare(&cfg.compare).map_err(|e| Failure::Config(e.to_string()))?;
    write(&c.out, "comparison.csv", &output::comparison_csv(&cmp))?;
    print!("{}", output::comparison_table(&cmp));
    let mut failed = Vec::new();
    for o in &cfg.orderings {
        match cmp.check(o) {
            Ok(()) => println!("ordering {} [{}]: ok", o.metric, o.order.join(" < ")),
            Err(msg) => {
                println!("ordering {} [{}]: FAILED ({msg})", o.metric, o.order.join(" < "));
                failed.push(msg);
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Assertion(failed.join("; ")))
    }
}

fn cmd_tune(c: &Common) -> Outcome {
    let cfg = load(c)?;
    let t = cfg.tuning.as_ref().ok_or_else(|| Failure::Config("missing [tuning] section".into()))?;
    let names = t.names();
    let swarm = t.swarm();
    let res = match t.objective {
        Objective::Sphere => tune(&swarm, mpso::sphere),
        Objective::Ise => {
            let obj = ScenarioObjective {
                base: cfg.scenario.clone(),
                names: names.clone(),
                chattering_weight: t.chattering_weight,
            };
            tune(&swarm, |x| obj.eval(x))
        }
    }
    .map_err(|e| Failure::Config(e.to_string()))?;

    let mut conv = format!("iter,best_fitness,{}\n", names.join(","));
    for h in &res.history {
        let gains: Vec<String> = h.best_position.iter().map(|v| output::sig9(*v)).collect();
        conv.push_str(&format!("{},{},{}\n", h.iter, output::sig9(h.best_fitness), gains.join(",")));
    }
    write(&c.out, "convergence.csv", &conv)?;
    let mut best = String::new();
    for (n, v) in names.iter().zip(&res.best_position) {
        best.push_str(&format!("{n}={}\n", output::sig9(*v)));
    }
    best.push_str(&format!("fitness={}\n", output::sig9(res.best_fitness)));
    write(&c.out, "best_gains.txt", &best)?;
    print!("{best}");
    Ok(())
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn selftest_checks() -> Result<Vec<Check>, Failure> {
    let mut checks = Vec::new();

    let stab = config::load_bundled("impulse_stabilization")?;
    let tr = simulate(&stab.scenario).map_err(|e| Failure::Config(e.to_string()))?;
    let m = compute_metrics(&tr, &stab.scenario.reference, stab.scenario.settle_band);
    let ts = m.settling_time;
    checks.push(Check {
        name: "pendulum impulse rejection settles within 0.1 s",
        pass: tr.is_complete() && ts.is_some_and(|t| t <= 0.1 + 1e-9),
        detail: format!("settling_time = {ts:?}"),
    });
    let rs = reaching_stats(&tr, 0.05);
    checks.push(Check {
        name: "pendulum surface reached and V decreasing",
        pass: rs.reach_fraction >= 0.95 && rs.lyapunov_fraction >= 0.95,
        detail: format!("reach = {:.3}, lyapunov = {:.3}", rs.reach_fraction, rs.lyapunov_fraction),
    });

    for name in ["impulse_ranking", "swingup_composite"] {
        let cfg = config::load_bundled(name)?;
        let cmp = compare(&cfg.compare).map_err(|e| Failure::Config(e.to_string()))?;
        let errs: Vec<String> = cfg.orderings.iter().filter_map(|o| cmp.check(o).err()).collect();
        checks.push(Check {
            name: if name == "impulse_ranking" {
                "controller ranking by settling time"
            } else {
                "composite beats its parents"
            },
            pass: errs.is_empty(),
            detail: if errs.is_empty() { "orderings hold".into() } else { errs.join("; ") },
        });
    }

    let vdp = config::load_bundled("vdp_tracking")?;
    let tr = simulate(&vdp.scenario).map_err(|e| Failure::Config(e.to_string()))?;
    let worst = tr.records.iter().filter(|r| r.t >= 2.0).map(|r| r.e.abs()).fold(0.0, f64::max);
    checks.push(Check {
        name: "Van der Pol tracks 0.1 sin t within 0.01 after 2 s",
        pass: tr.is_complete() && worst < 0.01,
        detail: format!("max |e| = {worst:.3e}"),
    });

    let tank = config::load_bundled("tank_level")?;
    let tr = simulate(&tank.scenario).map_err(|e| Failure::Config(e.to_string()))?;
    let m = compute_metrics(&tr, &tank.scenario.reference, tank.scenario.settle_band);
    let sse = m.steady_state_error;
    checks.push(Check {
        name: "tank level reaches 32 cm within 1%",
        pass: tr.is_complete() && sse.is_some_and(|e| e < 0.32),
        detail: format!("steady_state_error = {sse:?}"),
    });

    let sing = config::load_bundled("pi2smc_singular")?;
    let tr = simulate(&sing.scenario).map_err(|e| Failure::Config(e.to_string()))?;
    checks.push(Check {
        name: "singular gain is reported, not propagated",
        pass: tr.singular() && tr.records.iter().all(|r| r.u.is_finite()),
        detail: format!("abort = {:?}", tr.abort.as_ref().map(|a| a.reason.to_string())),
    });

    let sphere = config::load_bundled("sphere_selftest")?;
    let t = sphere.tuning.as_ref().ok_or_else(|| Failure::Config("sphere_selftest lacks [tuning]".into()))?;
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let mut sw = t.swarm();
        sw.seed = seed;
        sw.variant = Variant::Modified;
        let r = tune(&sw, mpso::sphere).map_err(|e| Failure::Config(e.to_string()))?;
        worst = worst.max(r.best_fitness);
    }
    checks.push(Check {
        name: "swarm minimises the sphere below 1e-3 on 10 seeds",
        pass: worst < 1e-3,
        detail: format!("worst = {worst:.3e}"),
    });
    Ok(checks)
}

fn cmd_selftest(out: &Path) -> Outcome {
    let checks = selftest_checks()?;
    let mut report = String::new();
    for c in &checks {
        report.push_str(&format!("{} {}: {}\n", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail));
    }
    write(out, "selftest.txt", &report)?;
    print!("{report}");
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Assertion(format!("{failed} self-test check(s) failed")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Run(c) => cmd_run(c),
        Cmd::Compare(c) => cmd_compare(c),
        Cmd::Tune(c) => cmd_tune(c),
        Cmd::Selftest { out } => cmd_selftest(out),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Abort(m)) => {
            eprintln!("simulation aborted: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Assertion(m)) => {
            eprintln!("assertion failed: {m}");
            ExitCode::from(4)
        }
    }
}
