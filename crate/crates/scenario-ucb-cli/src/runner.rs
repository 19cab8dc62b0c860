//! Experiment orchestration and file emission.
//!
//! A single run draws the scenario set, executes the decision loop, draws
//! the re-draw sequence, and evaluates the regret curves. Sweeps fan the
//! same repetition seeds across every `nu` value so series are paired, and
//! aggregate mean curves after all jobs complete.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;

use scenario_ucb::algo::{run_scenario_ucb, BetaSchedule, BetaVariant, RunTrace};
use scenario_ucb::env::GroundTruth;
use scenario_ucb::kernel::KernelSpec;
use scenario_ucb::regret::{redraw_regret, RegretCurve};
use scenario_ucb::rng::SeedBundle;
use scenario_ucb::scenario::{draw_redraw_sequence, draw_scenarios, RedrawSchedule, Scenario};
use scenario_ucb::Result;

use crate::config::ExperimentConfig;

/// Everything one run produced.
pub struct RunOutput {
    pub trace: RunTrace,
    pub curve: RegretCurve,
    pub redraws: Vec<(usize, Scenario)>,
}

/// Execute one seeded run of the scenario-UCB loop under `cfg`, with the
/// re-draw exponent optionally overridden (used by sweeps).
pub fn execute_run(
    cfg: &ExperimentConfig,
    nu_override: Option<f64>,
    bundle: SeedBundle,
) -> Result<RunOutput> {
    let grid = cfg.grid()?;
    let map = cfg.lengthscale_map();
    let n = cfg.resolved_n()?;
    let schedule = match nu_override {
        Some(nu) => RedrawSchedule::new(scenario_ucb::scenario::AlphaSpec::Exponent(nu), cfg.t_max)?,
        None => cfg.schedule()?,
    };

    let set = draw_scenarios(
        n,
        &cfg.delta_dist,
        map,
        &grid,
        bundle.master,
        &mut bundle.scenario_rng(),
        &mut bundle.realization_rng(),
    )?;
    let kernels: Vec<KernelSpec> = set
        .deltas()
        .into_iter()
        .map(|d| KernelSpec::new(cfg.kernel_family, d, map))
        .collect::<Result<_>>()?;
    let beta = BetaSchedule::new(BetaVariant::ScenarioUcb, grid.len(), cfg.epsilon)?;
    let mut gt = GroundTruth::new(grid.clone(), set, cfg.noise_var, bundle.noise_rng())?;
    let trace = run_scenario_ucb(
        &mut gt,
        &kernels,
        &grid,
        cfg.noise_var,
        cfg.t_max,
        beta,
        bundle.master,
    )?;
    let redraws = draw_redraw_sequence(
        &schedule,
        &cfg.delta_dist,
        map,
        &grid,
        &mut bundle.redraw_rng(),
    )?;
    let curve = redraw_regret(&trace, &gt, &redraws)?;
    Ok(RunOutput {
        trace,
        curve,
        redraws,
    })
}

/// Mean curves over repetitions for one `nu`.
pub struct SweepSeries {
    pub nu: f64,
    pub mean_redraw: Vec<f64>,
    pub mean_noredraw: Vec<f64>,
    pub mean_bound: Vec<f64>,
    pub repetitions: usize,
}

/// Run `cfg.repetitions` seeded runs for every `nu`, in parallel, pairing
/// repetition seeds across the series.
pub fn execute_sweep(cfg: &ExperimentConfig, nus: &[f64]) -> Result<Vec<SweepSeries>> {
    let jobs: Vec<(usize, usize)> = (0..nus.len())
        .flat_map(|i| (0..cfg.repetitions).map(move |rep| (i, rep)))
        .collect();
    let curves: Vec<((usize, usize), RegretCurve)> = jobs
        .into_par_iter()
        .map(|(i, rep)| -> Result<((usize, usize), RegretCurve)> {
            let bundle = SeedBundle::derive(cfg.seed, rep as u64);
            let out = execute_run(cfg, Some(nus[i]), bundle)?;
            Ok(((i, rep), out.curve))
        })
        .collect::<Result<_>>()?;

    let mut series = Vec::with_capacity(nus.len());
    for (i, &nu) in nus.iter().enumerate() {
        let mut mean_redraw = vec![0.0; cfg.t_max];
        let mut mean_noredraw = vec![0.0; cfg.t_max];
        let mut mean_bound = vec![0.0; cfg.t_max];
        let mut count = 0usize;
        for ((j, _), curve) in curves.iter().filter(|((j, _), _)| *j == i) {
            debug_assert_eq!(*j, i);
            for t in 0..cfg.t_max {
                mean_redraw[t] += curve.redraw_avg[t];
                mean_noredraw[t] += curve.noredraw_avg[t];
                mean_bound[t] += curve.bound[t];
            }
            count += 1;
        }
        let scale = 1.0 / count as f64;
        for t in 0..cfg.t_max {
            mean_redraw[t] *= scale;
            mean_noredraw[t] *= scale;
            mean_bound[t] *= scale;
        }
        series.push(SweepSeries {
            nu,
            mean_redraw,
            mean_noredraw,
            mean_bound,
            repetitions: count,
        });
    }
    Ok(series)
}

/// Fixed-point serialization: 12 significant digits, scientific notation,
/// bit-stable across runs.
pub fn fmt_sig(x: f64) -> String {
    format!("{x:.11e}")
}

pub const TRACE_HEADER: &str = "t,redraw_count,x_index,i_t,y_t,sigma_it,beta_t,r_inst,r_redraw_avg,bound";

pub const CURVE_HEADER: &str = "t,r_redraw_avg,r_noredraw_avg,bound";

/// Full per-iteration record: one row per step.
pub fn trace_csv(out: &RunOutput) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    let trace = &out.trace;
    let curve = &out.curve;
    for (k, d) in trace.decisions.iter().enumerate() {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            d.t,
            curve.redraw_count[k],
            d.x_index,
            d.scenario_index.map_or(0, |i| i),
            fmt_sig(d.y),
            fmt_sig(trace.sigmas[k]),
            fmt_sig(trace.betas[k]),
            fmt_sig(curve.r_inst[k]),
            fmt_sig(curve.redraw_avg[k]),
            fmt_sig(curve.bound[k]),
        ));
    }
    s
}

/// Regret curves only, for plotting.
pub fn curve_csv(curve: &RegretCurve) -> String {
    let mut s = String::from(CURVE_HEADER);
    s.push('\n');
    for k in 0..curve.len() {
        s.push_str(&format!(
            "{},{},{},{}\n",
            k + 1,
            fmt_sig(curve.redraw_avg[k]),
            fmt_sig(curve.noredraw_avg[k]),
            fmt_sig(curve.bound[k]),
        ));
    }
    s
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut f = fs::File::create(dir.join(name))?;
    f.write_all(contents.as_bytes())
}

/// Write manifest, trace CSV, and curve CSV for a single run.
pub fn write_run_outputs(
    dir: &Path,
    cfg: &ExperimentConfig,
    out: &RunOutput,
) -> std::io::Result<()> {
    write_file(dir, "manifest.txt", &cfg.manifest("run", version()))?;
    write_file(dir, "trace.csv", &trace_csv(out))?;
    write_file(dir, "curve.csv", &curve_csv(&out.curve))
}

/// Write per-series mean curves, the aggregate table, and plot-data series
/// for a sweep.
pub fn write_sweep_outputs(
    dir: &Path,
    cfg: &ExperimentConfig,
    series: &[SweepSeries],
) -> std::io::Result<()> {
    write_file(dir, "manifest.txt", &cfg.manifest("sweep", version()))?;
    let mut aggregate = String::from("nu,t,mean_r_redraw_avg,mean_r_noredraw_avg,mean_bound\n");
    for s in series {
        let mut per_nu = String::from("t,mean_r_redraw_avg,mean_r_noredraw_avg,mean_bound\n");
        let mut plot = String::new();
        for t in 0..s.mean_redraw.len() {
            per_nu.push_str(&format!(
                "{},{},{},{}\n",
                t + 1,
                fmt_sig(s.mean_redraw[t]),
                fmt_sig(s.mean_noredraw[t]),
                fmt_sig(s.mean_bound[t]),
            ));
            aggregate.push_str(&format!(
                "{},{},{},{},{}\n",
                s.nu,
                t + 1,
                fmt_sig(s.mean_redraw[t]),
                fmt_sig(s.mean_noredraw[t]),
                fmt_sig(s.mean_bound[t]),
            ));
            plot.push_str(&format!("{} {}\n", t + 1, fmt_sig(s.mean_redraw[t])));
        }
        write_file(dir, &format!("sweep_nu{}.csv", s.nu), &per_nu)?;
        write_file(dir, &format!("plot_nu{}.dat", s.nu), &plot)?;
    }
    write_file(dir, "sweep_aggregate.csv", &aggregate)
}

pub fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}
