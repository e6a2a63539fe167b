#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use ots_core::edge::{
    binarize, compare_edges, detect_edges, fit_linear, gradient_csv, gradient_sweep, load_image,
    otsu_threshold, reference_edges, save_pgm, GradientConfig, StreamEncoding,
};
use ots_core::energy::{
    comparison_report, simulated_xor_spike_energy, xor_op_count, EnergyRow, Method, Source,
};
use ots_core::gates::{
    build_gate, evaluate_row, oscillator, truth_table, TruthTable, TruthTableRow,
};
use ots_core::units::{format_number, parse_si};
use ots_core::{
    dynamic_iv_with, firing_rate, parse_netlist, transient, write_netlist, GateKind, LogicEncoding,
    Netlist64, SimOptions, SourceSpec,
};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "otsim", version, about = "Threshold-switch circuit simulator")]
struct Cli {
    /// Flat key = value file; command-line flags take precedence over it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Write every built-in circuit as a netlist file into DIR.
    #[arg(long, value_name = "DIR")]
    seed_circuits: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dynamic I-V trajectory of a switch under a triangular ramp.
    Iv(IvArgs),
    /// Relaxation oscillator at one bias, or a rate-versus-bias sweep.
    Oscillate(OscArgs),
    /// Truth table or single row of a logic gate.
    Gate(GateArgs),
    /// Edge map of a PGM/PPM image through the XOR circuit.
    Edge(EdgeArgs),
    /// XOR firing rate against contrast difference.
    Gradient(GradientArgs),
    /// Energy comparison table.
    Energy(EnergyArgs),
}

fn si(s: &str) -> Result<f64, String> {
    parse_si(s).map_err(|e| e.to_string())
}

fn gate_kind(s: &str) -> Result<GateKind, String> {
    s.parse().map_err(|e: ots_core::GateError| e.to_string())
}

#[derive(Args, Debug)]
struct IvArgs {
    /// Circuit with one switch; its first voltage source is replaced by the ramp.
    #[arg(long, conflicts_with = "default")]
    netlist: Option<PathBuf>,
    /// Use the built-in oscillator circuit (the default).
    #[arg(long)]
    default: bool,
    /// Ramp peak; defaults to twice v_th.
    #[arg(long, value_parser = si)]
    peak: Option<f64>,
    #[arg(long, value_parser = si, default_value = "50u")]
    rise: f64,
    /// Fall time; defaults to the rise time.
    #[arg(long, value_parser = si)]
    fall: Option<f64>,
    #[arg(long, value_parser = si)]
    dt: Option<f64>,
    /// CSV destination; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OscArgs {
    #[arg(long, value_parser = si, default_value = "5")]
    vin: f64,
    #[arg(long, value_parser = si, default_value = "200u")]
    duration: f64,
    #[arg(long, value_parser = si)]
    dt: Option<f64>,
    /// `v0:v1:points`; writes a `v_in,rate_hz` CSV instead of waveforms.
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GateArgs {
    #[arg(long, value_parser = gate_kind)]
    kind: GateKind,
    /// Evaluate every input row (the default).
    #[arg(long, conflicts_with = "inputs")]
    table: bool,
    /// One input row, first input first, e.g. `101`.
    #[arg(long)]
    inputs: Option<String>,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Waveform CSV of the row given by --inputs.
    #[arg(long, requires = "inputs")]
    waveforms: Option<PathBuf>,
    #[arg(long, value_parser = si)]
    dt: Option<f64>,
    #[arg(long, value_parser = si)]
    v_high: Option<f64>,
}

#[derive(Args, Debug)]
struct EdgeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, conflicts_with = "otsu")]
    threshold: Option<u8>,
    /// Pick the binarization threshold with Otsu's method.
    #[arg(long)]
    otsu: bool,
    /// Compare against the software edge map; exit 1 on any mismatch.
    #[arg(long)]
    oracle_check: bool,
    /// Mismatch report JSON; implies --oracle-check.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_parser = si)]
    dt: Option<f64>,
}

#[derive(Args, Debug)]
struct GradientArgs {
    /// Comma-separated contrast differences; defaults to 0,16,...,240,255.
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<u8>>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append the linear fit over the nonzero rates.
    #[arg(long)]
    fit: bool,
    #[arg(long, value_parser = si, default_value = "1m")]
    window: f64,
    #[arg(long, value_parser = si)]
    dt: Option<f64>,
}

#[derive(Args, Debug)]
struct EnergyArgs {
    #[arg(long, default_value_t = 512)]
    width: usize,
    #[arg(long, default_value_t = 512)]
    height: usize,
    /// Feature size for the scaled row.
    #[arg(long, value_parser = si, default_value = "16n")]
    node: f64,
    #[arg(long, value_parser = si)]
    exponent: Option<f64>,
    /// Add a row for the simulated XOR spike energy.
    #[arg(long)]
    simulate: bool,
    #[arg(long)]
    json: Option<PathBuf>,
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Pass,
    CheckFailed(String),
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_json<S: serde::Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_out(Some(path), &s)
}

fn cmd_iv(a: &IvArgs, cfg: &RunConfig) -> Result<Outcome> {
    let p = cfg.params()?;
    let net: Netlist64 = match &a.netlist {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            parse_netlist(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => oscillator(0.0, p).net,
    };
    let ots = match net.ots_indices()[..] {
        [i] => i,
        ref v => bail!(
            "the circuit must contain exactly one switch, found {}",
            v.len()
        ),
    };
    let peak = a.peak.unwrap_or(2.0 * p.v_th);
    let ramp = SourceSpec::Triangle {
        v_peak: peak,
        t_rise: a.rise,
        t_fall: a.fall.unwrap_or(a.rise),
    };
    ramp.validate().map_err(anyhow::Error::msg)?;
    let dt = a.dt.map_or_else(|| cfg.dt_or(10e-9), Ok)?;
    let iv = dynamic_iv_with(&net, ramp, ots, dt, cfg.solver()?)?;
    let snapbacks = iv
        .windows(2)
        .filter(|w| w[1].1.abs() > w[0].1.abs() && w[1].0.abs() < w[0].0.abs())
        .count();
    info!("{} points, {snapbacks} snap-back steps", iv.len());
    let mut csv = String::from("v,i\n");
    for (v, i) in &iv {
        let _ = writeln!(csv, "{},{}", format_number(*v), format_number(*i));
    }
    write_out(a.out.as_deref(), &csv)?;
    Ok(Outcome::Pass)
}

fn parse_sweep(s: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = s.split(':').collect();
    let [v0, v1, n] = parts[..] else {
        bail!("sweep must be v0:v1:points, got '{s}'")
    };
    let n: usize = n
        .parse()
        .with_context(|| format!("bad point count '{n}'"))?;
    if n < 2 {
        bail!("a sweep needs at least 2 points");
    }
    Ok((parse_si(v0)?, parse_si(v1)?, n))
}

fn cmd_oscillate(a: &OscArgs, cfg: &RunConfig) -> Result<Outcome> {
    let p = cfg.params()?;
    let dt = a.dt.map_or_else(|| cfg.dt_or(10e-9), Ok)?;
    let solver = cfg.solver()?;
    if let Some(sweep) = &a.sweep {
        let (v0, v1, n) = parse_sweep(sweep)?;
        let mut csv = String::from("v_in,rate_hz\n");
        for k in 0..n {
            let v = v0 + (v1 - v0) * k as f64 / (n - 1) as f64;
            let osc = oscillator(v, p);
            let opts = SimOptions::with_solver(solver).record_nodes(&[osc.node_b]);
            let tr = transient(&osc.net, a.duration, dt, &opts)?;
            let _ = writeln!(csv, "{v},{}", firing_rate(&osc.spike_train(&tr)?));
        }
        write_out(a.out.as_deref(), &csv)?;
        return Ok(Outcome::Pass);
    }
    let osc = oscillator(a.vin, p);
    let opts = SimOptions::with_solver(solver).record_branches(&[osc.ots]);
    let tr = transient(&osc.net, a.duration, dt, &opts)?;
    let st = osc.spike_train(&tr)?;
    let period = st
        .mean_period()
        .map_or("n/a".to_string(), |t| format!("{t:e} s"));
    eprintln!(
        "spikes: {}, rate: {} Hz, mean period: {period}",
        st.count(),
        firing_rate(&st)
    );
    if let Some(out) = &a.out {
        write_out(Some(out), &tr.to_csv())?;
    }
    Ok(Outcome::Pass)
}

fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .filter(|c| !matches!(c, ',' | ' '))
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => bail!("input bits must be 0 or 1, got '{c}'"),
        })
        .collect()
}

fn table_text(t: &TruthTable) -> String {
    let bits = |v: &[u8]| v.iter().map(u8::to_string).collect::<String>();
    let mut s = format!("{}\nin   expected  measured  spikes\n", t.kind);
    for r in &t.rows {
        let spikes: Vec<String> = r.spikes.iter().map(usize::to_string).collect();
        let mark = if r.expected == r.measured {
            ""
        } else {
            "  MISMATCH"
        };
        let _ = writeln!(
            s,
            "{:<4} {:<9} {:<9} {}{mark}",
            bits(&r.inputs),
            bits(&r.expected),
            bits(&r.measured),
            spikes.join(",")
        );
    }
    s
}

fn cmd_gate(a: &GateArgs, cfg: &RunConfig) -> Result<Outcome> {
    let p = cfg.params()?;
    let mut enc = LogicEncoding::<f64> {
        solver: cfg.solver()?,
        ..Default::default()
    };
    enc.dt = a.dt.map_or_else(|| cfg.dt_or(enc.dt), Ok)?;
    if let Some(v) = a.v_high.or(cfg.v_high) {
        enc.v_high = v;
    }
    if let Some(w) = cfg.bit_width {
        enc.bit_width = w;
    }
    if let Some(s) = cfg.settle {
        enc.settle = s;
    }
    enc.validate()?;
    let tpl = build_gate(a.kind, p);
    let table = match &a.inputs {
        Some(bits) => {
            let inputs = parse_bits(bits)?;
            let row = evaluate_row(&tpl, &inputs, &enc, a.waveforms.is_some())?;
            if let (Some(path), Some(tr)) = (&a.waveforms, &row.trace) {
                write_out(Some(path), &tr.to_csv())?;
            }
            let b = |v: &[bool]| v.iter().map(|&x| u8::from(x)).collect();
            TruthTable {
                kind: a.kind,
                rows: vec![TruthTableRow {
                    inputs: b(&row.inputs),
                    expected: b(&row.expected),
                    measured: b(&row.measured),
                    spikes: row.spikes,
                }],
                max_residual: row.max_residual,
            }
        }
        None => truth_table(&tpl, &enc)?,
    };
    print!("{}", table_text(&table));
    if let Some(path) = &a.json {
        write_json(path, &table)?;
    }
    Ok(match table.mismatches() {
        0 => Outcome::Pass,
        n => Outcome::CheckFailed(format!("{n} row(s) differ from the {} truth table", a.kind)),
    })
}

fn cmd_edge(a: &EdgeArgs, cfg: &RunConfig) -> Result<Outcome> {
    let p = cfg.params()?;
    let gray = load_image(&a.input)?.into_gray();
    let threshold = match (a.otsu, a.threshold.or(cfg.threshold)) {
        (true, _) => otsu_threshold(&gray),
        (false, t) => t.unwrap_or(128),
    };
    let bin = binarize(&gray, threshold);
    let mut enc = StreamEncoding::<f64> {
        solver: cfg.solver()?,
        ..Default::default()
    };
    enc.dt = a.dt.map_or_else(|| cfg.dt_or(enc.dt), Ok)?;
    if let Some(v) = cfg.v_high {
        enc.v_high = v;
    }
    if let Some(n) = cfg.count_threshold {
        enc.count_threshold = n;
    }
    if let Some(n) = cfg.segment_periods {
        enc.segment_periods = n;
    }
    let edges = detect_edges(&bin, &enc, p)?;
    save_pgm(&edges.to_gray(), &a.out)?;
    eprintln!(
        "{}x{} image, threshold {threshold}, {} edge pixels",
        edges.width,
        edges.height,
        edges.count_ones()
    );
    if !(a.oracle_check || a.report.is_some()) {
        return Ok(Outcome::Pass);
    }
    let report = compare_edges(&edges, &reference_edges(&bin)?)?;
    eprintln!(
        "oracle mismatches: {} of {}",
        report.mismatches.len(),
        report.total
    );
    if let Some(path) = &a.report {
        write_json(path, &report)?;
    }
    Ok(match report.mismatches.len() {
        0 => Outcome::Pass,
        n => Outcome::CheckFailed(format!("{n} pixel(s) differ from the software edge map")),
    })
}

fn cmd_gradient(a: &GradientArgs, cfg: &RunConfig) -> Result<Outcome> {
    let p = cfg.params()?;
    let mut gc = GradientConfig::<f64> {
        window: a.window,
        solver: cfg.solver()?,
        ..Default::default()
    };
    gc.dt = a.dt.map_or_else(|| cfg.dt_or(gc.dt), Ok)?;
    if let Some(v) = cfg.v_high {
        gc.v_high = v;
    }
    let deltas = a.sweep.clone().unwrap_or_else(|| {
        (0..=240)
            .step_by(16)
            .map(|d| d as u8)
            .chain([255])
            .collect()
    });
    let samples = gradient_sweep(&deltas, &gc, p)?;
    let mut csv = gradient_csv(&samples);
    let mut outcome = Outcome::Pass;
    if a.fit {
        match fit_linear(&samples) {
            Ok(f) => {
                let _ = writeln!(
                    csv,
                    "# fit slope_hz_per_unit={} floor={} r2={} points={}",
                    f.slope, f.floor, f.r2, f.points
                );
            }
            Err(e) => outcome = Outcome::CheckFailed(e.to_string()),
        }
    }
    write_out(a.out.as_deref(), &csv)?;
    Ok(outcome)
}

fn cmd_energy(a: &EnergyArgs, cfg: &RunConfig) -> Result<Outcome> {
    if a.width == 0 || a.height == 0 {
        bail!("image dimensions must be at least 1");
    }
    let exponent = a.exponent.or(cfg.exponent).unwrap_or(1.6);
    let mut report = comparison_report(a.width, a.height).with_projection(a.node, exponent)?;
    if a.simulate {
        let p = cfg.params()?;
        let e = simulated_xor_spike_energy(cfg.v_high.unwrap_or(5.0), cfg.dt_or(10e-9)?, p)?;
        let ops = xor_op_count(a.width, a.height);
        report = report.with_row(EnergyRow::new(
            "OTS XOR (simulated)",
            e,
            ops,
            Method::Xor,
            Source::Simulated,
        ));
    }
    print!("{}", report.to_text());
    if let Some(path) = &a.json {
        write_json(path, &report)?;
    }
    Ok(Outcome::Pass)
}

fn seed_circuits(dir: &Path, cfg: &RunConfig) -> Result<()> {
    let p = cfg.params()?;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for kind in GateKind::ALL {
        let tpl = build_gate(kind, p);
        let title = format!("{kind} gate; inputs {}", tpl.inputs.join(", "));
        let mut header = vec![title.as_str(), ""];
        header.extend(tpl.notes.iter().copied());
        std::fs::write(
            dir.join(format!("{kind}.net")),
            write_netlist(&tpl.net, &header),
        )?;
    }
    let osc = oscillator(5.0, p);
    let text = write_netlist(&osc.net, &["relaxation oscillator; spikes read across Rs"]);
    std::fs::write(dir.join("oscillator.net"), text)?;
    eprintln!(
        "wrote {} netlists to {}",
        GateKind::ALL.len() + 1,
        dir.display()
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &cli.seed_circuits {
        seed_circuits(dir, &cfg)?;
    }
    match &cli.command {
        Some(Command::Iv(a)) => cmd_iv(a, &cfg),
        Some(Command::Oscillate(a)) => cmd_oscillate(a, &cfg),
        Some(Command::Gate(a)) => cmd_gate(a, &cfg),
        Some(Command::Edge(a)) => cmd_edge(a, &cfg),
        Some(Command::Gradient(a)) => cmd_gradient(a, &cfg),
        Some(Command::Energy(a)) => cmd_energy(a, &cfg),
        None if cli.seed_circuits.is_some() => Ok(Outcome::Pass),
        None => bail!("no command given; see --help"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
