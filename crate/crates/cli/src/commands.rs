use std::path::{Path, PathBuf};

use log::info;
use rbdecay::atom::{AtomConstants, Term};
use rbdecay::config::{load_config, KeyMode, RunConfig};
use rbdecay::csvio::{read_trace_csv, write_trace_csv};
use rbdecay::experiments::{
    field_sweep, m_state_analysis, protocol_specs, run_sweep, zeeman_decoherence, DerivedRates, FieldPoint, MStateReport,
    SweepPoint, REFERENCE_DENSITY_CM3,
};
use rbdecay::fit::{fit_decaying_sinusoid_xy, fit_double_exponential_xy, fit_exponential_xy, FitResult, ModelKind};
use rbdecay::protocol::{
    dark_state_weights, normalized_f2_block, subtract_traces, DarkStateWeights, ExperimentSpec, ProtocolKind, Simulator,
    StateDiagnostics,
};
use rbdecay::trace::DecayTrace;
use rbdecay::validation::{run_suite, SuiteOptions};
use rbdecay::{Error, Result};
use serde::Serialize;

use crate::{ConfigArgs, ModelArg};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    ValidationFailed,
    NotConverged,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Self::Success => 0,
            Self::ValidationFailed => 2,
            Self::NotConverged => 3,
        }
    }
}

fn load(args: &ConfigArgs) -> Result<(RunConfig, PathBuf)> {
    let mode = if args.lenient { KeyMode::Lenient } else { KeyMode::Strict };
    let cfg = load_config(&args.config, mode)?;
    let out = args.out_dir.clone().unwrap_or_else(|| cfg.output.dir.clone());
    std::fs::create_dir_all(&out)?;
    Ok((cfg, out))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    info!("wrote {}", path.display());
    Ok(())
}

fn write_trace(path: &Path, trace: &DecayTrace) -> Result<()> {
    write_trace_csv(trace, path)?;
    println!("{}", path.display());
    Ok(())
}

fn density_tag(n: f64) -> String {
    format!("{n:.3e}")
}

fn physical(traces: &[&DecayTrace]) -> bool {
    let mut ok = true;
    for t in traces {
        if let Some(d) = StateDiagnostics::from_trace(t) {
            if !d.is_physical() {
                eprintln!(
                    "state bounds violated: trace error {:e}, hermiticity {:e}, min eigenvalue {:e}",
                    d.max_trace_error, d.max_hermiticity_error, d.min_eigenvalue
                );
                ok = false;
            }
        }
    }
    ok
}

fn report_fits<'a>(fits: impl IntoIterator<Item = (&'a str, &'a FitResult)>) -> Status {
    let mut status = Status::Success;
    for (name, f) in fits {
        if !f.converged {
            eprintln!("fit did not converge for {name}: {}", f.message);
            status = Status::NotConverged;
        }
    }
    status
}

pub fn simulate(args: &ConfigArgs, density: Option<f64>, noise: Option<f64>) -> Result<Status> {
    let (cfg, out) = load(args)?;
    let n = match density {
        Some(n) => n,
        None => cfg.spec.densities()?[0],
    };
    let seed = cfg.output.seed;
    let noisy = |t: DecayTrace, k: u64| match noise {
        Some(s) => t.with_noise(s, seed.wrapping_add(k)),
        None => Ok(t),
    };
    let p = cfg.spec.protocol;
    let base = format!("trace_{p}_{}", density_tag(n));
    let written = match p {
        ProtocolKind::A | ProtocolKind::B => {
            let t = noisy(Simulator::new(&cfg.spec, &cfg.constants, n)?.simulate(None)?, 0)?;
            write_trace(&out.join(format!("{base}.csv")), &t)?;
            vec![t]
        }
        ProtocolKind::C => {
            let run = zeeman_decoherence(&cfg.spec, &cfg.constants, n)?;
            let early = noisy(run.early, 0)?;
            let late = noisy(run.late, 1)?;
            let from = early.meta_f64("delay_s").unwrap_or(0.0).max(late.meta_f64("delay_s").unwrap_or(0.0));
            let diff = subtract_traces(&early, &late)?.window_from(from);
            write_trace(&out.join(format!("{base}_delay1.csv")), &early)?;
            write_trace(&out.join(format!("{base}_delay2.csv")), &late)?;
            write_trace(&out.join(format!("{base}_difference.csv")), &diff)?;
            vec![early, late]
        }
    };
    let refs: Vec<&DecayTrace> = written.iter().collect();
    Ok(if physical(&refs) { Status::Success } else { Status::ValidationFailed })
}

#[derive(Debug, Serialize)]
struct FitEntry {
    file: String,
    protocol: Option<String>,
    fitted: &'static str,
    fit: FitResult,
}

#[derive(Debug, Serialize)]
struct FitReport {
    fits: Vec<FitEntry>,
}

/// Model and fit window for a trace; `None` when the protocol is unknown.
fn auto_model(trace: &DecayTrace) -> Option<(ModelKind, f64)> {
    match trace.meta("protocol")?.parse::<ProtocolKind>().ok()? {
        ProtocolKind::A => Some((ModelKind::Exponential, f64::NEG_INFINITY)),
        ProtocolKind::B => Some((ModelKind::DoubleExponential, f64::NEG_INFINITY)),
        // a single protocol-C trace is fit after its field switch
        ProtocolKind::C if trace.meta("delay_1_s").is_none() => Some((ModelKind::DecayingSinusoid, trace.meta_f64("delay_s").unwrap_or(0.0))),
        ProtocolKind::C => Some((ModelKind::DecayingSinusoid, f64::NEG_INFINITY)),
    }
}

pub fn fit_trace(trace: &DecayTrace, model: ModelArg, raw: bool) -> Result<FitResult> {
    let (kind, from) = match model {
        ModelArg::Auto => auto_model(trace).ok_or_else(|| {
            Error::InvalidTrace("trace has no protocol tag; pass --model".into())
        })?,
        ModelArg::Exponential => (ModelKind::Exponential, f64::NEG_INFINITY),
        ModelArg::DoubleExponential => (ModelKind::DoubleExponential, f64::NEG_INFINITY),
        ModelArg::DecayingSinusoid => (ModelKind::DecayingSinusoid, f64::NEG_INFINITY),
    };
    let w = trace.window_from(from);
    let y = if raw { &w.alpha_raw } else { &w.alpha_norm };
    match kind {
        ModelKind::Exponential => fit_exponential_xy(&w.time, y),
        ModelKind::DoubleExponential => fit_double_exponential_xy(&w.time, y),
        ModelKind::DecayingSinusoid => fit_decaying_sinusoid_xy(&w.time, y),
    }
}

pub fn fit(files: &[PathBuf], model: ModelArg, raw: bool, out: Option<&Path>) -> Result<Status> {
    if files.is_empty() {
        return Err(Error::InvalidExperiment("no trace files given".into()));
    }
    let mut fits = Vec::new();
    for f in files {
        let trace = read_trace_csv(f)?;
        let fit = fit_trace(&trace, model, raw)?;
        fits.push(FitEntry {
            file: f.display().to_string(),
            protocol: trace.meta("protocol").map(str::to_string),
            fitted: if raw { "alpha_raw" } else { "alpha_norm" },
            fit,
        });
    }
    let status = report_fits(fits.iter().map(|e| (e.file.as_str(), &e.fit)));
    let report = FitReport { fits };
    match out {
        Some(p) => write_json(p, &report)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(status)
}

#[derive(Debug, Serialize)]
struct SweepReport<'a> {
    rates: &'a DerivedRates,
    field_sweep: Option<Vec<FieldPoint>>,
}

fn write_sweep_traces(dir: &Path, points: &[SweepPoint]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for p in points {
        let n = density_tag(p.density_cm3);
        write_trace(&dir.join(format!("trace_A_{n}.csv")), &p.hyperfine.trace)?;
        write_trace(&dir.join(format!("trace_B_{n}.csv")), &p.zeeman.trace)?;
        write_trace(&dir.join(format!("trace_C_{n}_delay1.csv")), &p.decoherence.early)?;
        write_trace(&dir.join(format!("trace_C_{n}_delay2.csv")), &p.decoherence.late)?;
        write_trace(&dir.join(format!("trace_C_{n}_difference.csv")), &p.decoherence.difference)?;
    }
    Ok(())
}

fn sweep_status(points: &[SweepPoint]) -> Status {
    let mut fits = Vec::new();
    for p in points {
        fits.push(("protocol A", &p.hyperfine.fit));
        fits.push(("protocol B", &p.zeeman.fit));
        fits.push(("protocol C", &p.decoherence.fit));
    }
    let mut status = report_fits(fits);
    let traces: Vec<&DecayTrace> = points
        .iter()
        .flat_map(|p| [&p.hyperfine.trace, &p.zeeman.trace, &p.decoherence.early, &p.decoherence.late])
        .collect();
    if !physical(&traces) {
        status = Status::ValidationFailed;
    }
    status
}

pub fn sweep(args: &ConfigArgs) -> Result<Status> {
    let (cfg, out) = load(args)?;
    let points = run_sweep(&cfg.spec, &cfg.constants)?;
    write_sweep_traces(&out.join("sweep"), &points)?;
    let rates = DerivedRates::from_points(&points, cfg.spec.vapor.temperature_k);
    let fields = if cfg.spec.protocol == ProtocolKind::C {
        let [_, _, sc] = protocol_specs(&cfg.spec);
        Some(field_sweep(&sc, &cfg.constants, points[0].density_cm3, &cfg.sweep.b_z_values_gauss)?)
    } else {
        None
    };
    std::fs::write(out.join("rates.csv"), rates.to_csv())?;
    write_json(
        &out.join("sweep.json"),
        &SweepReport {
            rates: &rates,
            field_sweep: fields,
        },
    )?;
    Ok(sweep_status(&points))
}

#[derive(Debug, Serialize)]
struct SteadyStateReport {
    density_cm3: f64,
    weights: DarkStateWeights,
    /// Rows of the normalized F=2 block, m_F = −2..2: [re, im] pairs.
    f2_block: Vec<Vec<[f64; 2]>>,
    pump_elapsed_s: f64,
}

#[derive(Debug, Serialize)]
struct OscillationReport {
    density_cm3: f64,
    fit: FitResult,
    predicted_omega: f64,
    m_state: MStateReport,
}

fn populations_csv(times: &[f64], pops: &[[f64; 8]]) -> String {
    let mut s = String::from("time_s,f1_m-1,f1_m0,f1_m+1,f2_m-2,f2_m-1,f2_m0,f2_m+1,f2_m+2\n");
    for (t, p) in times.iter().zip(pops) {
        s += &format!("{t:.16e}");
        for v in p {
            s += &format!(",{v:.16e}");
        }
        s.push('\n');
    }
    s
}

fn reference_spec(cfg: &RunConfig, p: ProtocolKind) -> ExperimentSpec {
    let [a, b, c] = protocol_specs(&cfg.spec);
    match p {
        ProtocolKind::A => a,
        ProtocolKind::B => b,
        ProtocolKind::C => c,
    }
}

pub fn figures(args: &ConfigArgs) -> Result<Status> {
    let (cfg, out) = load(args)?;
    let dir = out.join("figures");
    std::fs::create_dir_all(&dir)?;
    let c: &AtomConstants = &cfg.constants;
    let n_ref = REFERENCE_DENSITY_CM3;

    // hyperfine decay at every density, and the rates table
    let points = run_sweep(&cfg.spec, c)?;
    let mut status = sweep_status(&points);
    for p in &points {
        write_trace(&dir.join(format!("fig2_hyperfine_{}.csv", density_tag(p.density_cm3))), &p.hyperfine.trace)?;
    }
    let fig2: Vec<(f64, &FitResult)> = points.iter().map(|p| (p.density_cm3, &p.hyperfine.fit)).collect();
    write_json(&dir.join("fig2_fits.json"), &fig2)?;
    let rates = DerivedRates::from_points(&points, cfg.spec.vapor.temperature_k);
    std::fs::write(dir.join("fig7_rates.csv"), rates.to_csv())?;
    write_json(&dir.join("fig7_rates.json"), &rates)?;

    // linear vs circular pumping at the reference density, F sub-level populations
    let (sa, sb, sc) = (
        reference_spec(&cfg, ProtocolKind::A),
        reference_spec(&cfg, ProtocolKind::B),
        reference_spec(&cfg, ProtocolKind::C),
    );
    let a = rbdecay::experiments::hyperfine_population(&sa, c, n_ref)?;
    let b = rbdecay::experiments::zeeman_population(&sb, c, n_ref)?;
    write_trace(&dir.join("fig3a_linear.csv"), &a.trace)?;
    write_trace(&dir.join("fig3a_circular.csv"), &b.trace)?;
    write_json(&dir.join("fig3a_fits.json"), &[("linear", &a.fit), ("circular", &b.fit)])?;
    let sim_b = Simulator::new(&sb, c, n_ref)?;
    let pumped = sim_b.run_pump_to_steady_state(0.0)?;
    let pops = sim_b.dark_population_history(&pumped.rho, &b.trace.time)?;
    std::fs::write(dir.join("fig3b_populations.csv"), populations_csv(&b.trace.time, &pops))?;

    // dark-state steady state
    let sim_c = Simulator::new(&sc, c, n_ref)?;
    let pumped_c = sim_c.run_pump_to_steady_state(0.0)?;
    let scheme = sim_c.scheme();
    let block = normalized_f2_block(&pumped_c.rho, scheme).ok_or_else(|| Error::Degenerate("empty F=2 block".into()))?;
    let idx = scheme.manifold(Term::Ground, 2);
    let fig4 = SteadyStateReport {
        density_cm3: n_ref,
        weights: dark_state_weights(&pumped_c.rho, scheme).ok_or_else(|| Error::Degenerate("empty F=2 block".into()))?,
        f2_block: idx
            .iter()
            .map(|&i| idx.iter().map(|&j| [block[(i, j)].re, block[(i, j)].im]).collect())
            .collect(),
        pump_elapsed_s: pumped_c.elapsed_s,
    };
    write_json(&dir.join("fig4_steady_state.json"), &fig4)?;

    // oscillations: no field, the two switch delays, and their difference
    let no_field = sim_c.simulate(None)?;
    let run = zeeman_decoherence(&sc, c, n_ref)?;
    write_trace(&dir.join("fig5_no_field.csv"), &no_field)?;
    write_trace(&dir.join("fig5_delay1.csv"), &run.early)?;
    write_trace(&dir.join("fig5_delay2.csv"), &run.late)?;
    write_trace(&dir.join("fig6_oscillation.csv"), &run.difference)?;
    let m_state = m_state_analysis(&sc, c, n_ref, &run)?;
    write_json(
        &dir.join("fig6_fit.json"),
        &OscillationReport {
            density_cm3: n_ref,
            fit: run.fit.clone(),
            predicted_omega: run.predicted_omega,
            m_state,
        },
    )?;
    for (name, f) in [("fig3 linear", &a.fit), ("fig3 circular", &b.fit), ("fig6", &run.fit)] {
        if report_fits([(name, f)]) == Status::NotConverged && status == Status::Success {
            status = Status::NotConverged;
        }
    }
    if !physical(&[&a.trace, &b.trace, &no_field, &run.early, &run.late]) {
        status = Status::ValidationFailed;
    }
    Ok(status)
}

pub fn validate(config: Option<&Path>, quick: bool) -> Result<Status> {
    let (constants, seed) = match config {
        Some(p) => {
            let cfg = load_config(p, KeyMode::Strict)?;
            (cfg.constants, cfg.output.seed)
        }
        None => (AtomConstants::default(), 1),
    };
    let checks = run_suite(&constants, SuiteOptions { quick, seed });
    let mut failed = 0;
    for c in &checks {
        println!("{c}");
        if !c.passed {
            failed += 1;
        }
    }
    println!("{} checks, {} failed", checks.len(), failed);
    Ok(if failed == 0 { Status::Success } else { Status::ValidationFailed })
}
