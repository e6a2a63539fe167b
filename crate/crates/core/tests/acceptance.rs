//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use ots_core::edge::{
    binarize, detect_edges, fit_linear, gradient_sweep, reference_edges, xor_stream_detailed,
    BinaryImage, GradientConfig, GrayImage, StreamEncoding,
};
use ots_core::energy::{comparison_report, scale_energy, sobel_op_count, xor_op_count, ScalingLaw};
use ots_core::gates::{
    build_gate, input_rows, oscillator, truth_table, TruthTable, OSC_C_P, OSC_R_D, OSC_R_S,
};
use ots_core::{
    default_params, dynamic_iv, firing_rate, transient, GateKind, LogicEncoding, Netlist,
    OtsParams64, SimOptions, SourceSpec, GROUND,
};

type Outcome = Result<String, String>;

static MAX_RESIDUAL: Mutex<f64> = Mutex::new(0.0);

fn note_residual(r: f64) {
    let mut m = MAX_RESIDUAL.lock().unwrap();
    *m = m.max(r);
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bits(v: &[bool]) -> Vec<u8> {
    v.iter().map(|&b| u8::from(b)).collect()
}

fn oracle_outputs(kind: GateKind, x: &[bool]) -> Vec<bool> {
    match kind {
        GateKind::And => vec![x[0] & x[1]],
        GateKind::Or => vec![x[0] | x[1]],
        GateKind::Nand => vec![!(x[0] & x[1])],
        GateKind::Nor => vec![!(x[0] | x[1])],
        GateKind::Xor => vec![x[0] != x[1]],
        GateKind::HalfAdder => {
            let s = u8::from(x[0]) + u8::from(x[1]);
            vec![s & 1 == 1, s >> 1 == 1]
        }
        GateKind::FullAdder => {
            let s = u8::from(x[0]) + u8::from(x[1]) + u8::from(x[2]);
            vec![s & 1 == 1, s >> 1 == 1]
        }
        GateKind::DcaapCascade => {
            let y1 = x[0] != x[1];
            vec![y1, y1 != x[2]]
        }
    }
}

fn check_table(t: &TruthTable) -> Result<(), String> {
    let rows = input_rows(t.kind.arity());
    ensure(t.rows.len() == rows.len(), || {
        format!("{}: {} rows", t.kind, t.rows.len())
    })?;
    for (row, x) in t.rows.iter().zip(&rows) {
        let want = bits(&oracle_outputs(t.kind, x));
        ensure(row.inputs == bits(x) && row.measured == want, || {
            format!(
                "{} row {:?}: measured {:?}, expected {:?}",
                t.kind, row.inputs, row.measured, want
            )
        })?;
    }
    Ok(())
}

fn criterion_truth_tables(p: OtsParams64) -> Outcome {
    let enc = LogicEncoding::<f64>::default();
    let start = Instant::now();
    let kinds = [
        GateKind::And,
        GateKind::Or,
        GateKind::Nand,
        GateKind::Nor,
        GateKind::Xor,
        GateKind::HalfAdder,
        GateKind::FullAdder,
    ];
    let mut rows = 0;
    for kind in kinds {
        let t = truth_table(&build_gate(kind, p), &enc).map_err(|e| format!("{kind}: {e}"))?;
        note_residual(t.max_residual);
        check_table(&t)?;
        rows += t.rows.len();
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "7 gates, {rows} rows, 0 mismatches in {:.2} s at dt = 50 ns",
        elapsed.as_secs_f64()
    ))
}

fn criterion_cascade(p: OtsParams64) -> Outcome {
    let t = truth_table(
        &build_gate(GateKind::DcaapCascade, p),
        &LogicEncoding::default(),
    )
    .map_err(|e| e.to_string())?;
    note_residual(t.max_residual);
    check_table(&t)?;
    for (x, y) in [([1, 1, 0], [0, 0]), ([1, 0, 1], [1, 0])] {
        let row = t.rows.iter().find(|r| r.inputs == x).ok_or("missing row")?;
        ensure(row.measured == y, || {
            format!("row {x:?} gave {:?}", row.measured)
        })?;
    }
    Ok("8 rows match y1 = ex1 ^ ex2, y2 = y1 ^ inh".into())
}

/// Charge-discharge period of the relaxation oscillator from its piecewise
/// linear device laws: charge from the reset voltage to v_th through R_d,
/// turn-on delay, on-state discharge to the hold current, turn-off delay.
fn oscillator_period(v_in: f64, p: &OtsParams64) -> f64 {
    let (rd, c) = (OSC_R_D, OSC_C_P);
    let rl = p.r_on + OSC_R_S;
    let v_eq = (v_in * rl + p.v_hold * rd) / (rd + rl);
    let tau_d = c * rd * rl / (rd + rl);
    let a_hold = p.v_hold + p.i_hold * rl;
    let t_dis = tau_d * ((p.v_th - v_eq) / (a_hold - v_eq)).ln();
    let v_reset = v_eq + (a_hold - v_eq) * (-p.tau_off / tau_d).exp();
    let t_chg = rd * c * ((v_in - v_reset) / (v_in - p.v_th)).ln();
    t_chg + p.tau_on + t_dis + p.tau_off
}

fn oscillator_rate(v_in: f64, p: OtsParams64) -> Result<(usize, f64, Option<f64>), String> {
    let osc = oscillator(v_in, p);
    let opts = SimOptions::default().record_nodes(&[osc.node_b]);
    let tr = transient(&osc.net, 200e-6, 10e-9, &opts).map_err(|e| e.to_string())?;
    note_residual(tr.max_residual);
    let st = osc.spike_train(&tr).map_err(|e| e.to_string())?;
    Ok((st.count(), firing_rate(&st), st.mean_period()))
}

fn criterion_oscillator(p: OtsParams64) -> Outcome {
    let v_in = 5.0;
    let (n, _, period) = oscillator_rate(v_in, p)?;
    ensure(n >= 10, || format!("{n} spikes at {v_in} V"))?;
    let period = period.ok_or("no period")?;
    let expected = oscillator_period(v_in, &p);
    let err = (period / expected - 1.0).abs();
    ensure(err <= 0.15, || {
        format!("period {period:e} s vs oracle {expected:e} s")
    })?;
    let sweep = [5.0, 7.5, 10.0, 12.5, 15.0];
    let mut rates = Vec::new();
    for v in sweep {
        rates.push(oscillator_rate(v, p)?.1);
    }
    ensure(rates.windows(2).all(|w| w[1] > w[0]), || {
        format!("rates {rates:?}")
    })?;
    let khz: Vec<String> = rates.iter().map(|r| format!("{:.0}", r / 1e3)).collect();
    Ok(format!(
        "{n} spikes at {v_in} V, period {:.3} us vs oracle {:.3} us ({:.1}%), rates {} kHz over 5..15 V",
        period * 1e6,
        expected * 1e6,
        err * 100.0,
        khz.join(" < ")
    ))
}

fn criterion_ndr(p: OtsParams64) -> Outcome {
    let osc = oscillator(0.0, p);
    let ramp = SourceSpec::Triangle {
        v_peak: 2.0 * p.v_th,
        t_rise: 50e-6,
        t_fall: 50e-6,
    };
    let iv = dynamic_iv(&osc.net, ramp, osc.ots, 10e-9).map_err(|e| e.to_string())?;
    let n = iv
        .windows(2)
        .filter(|w| w[1].1 > w[0].1 && w[1].0 < w[0].0)
        .count();
    ensure(n >= 1, || "no sample pair with di > 0 and dv < 0".into())?;
    Ok(format!(
        "{n} snap-back steps in {} samples, peak {} V",
        iv.len(),
        2.0 * p.v_th
    ))
}

/// Brute-force edge map: a pixel is an edge if it differs from its left or
/// upper neighbour (none on the first column or row).
fn oracle_edges(img: &BinaryImage) -> Vec<bool> {
    let (w, h) = (img.width, img.height);
    let at = |x: usize, y: usize| img.bits[y * w + x];
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let left = x > 0 && at(x - 1, y) != at(x, y);
            let up = y > 0 && at(x, y - 1) != at(x, y);
            out[y * w + x] = left || up;
        }
    }
    out
}

fn photo_like(w: usize, h: usize) -> GrayImage {
    let data = (0..w * h)
        .map(|k| {
            let (x, y) = ((k % w) as f64, (k / w) as f64);
            let v = 128.0 + 90.0 * (x / 4.0).sin() * (y / 5.0).cos() + 2.0 * (x - y);
            v.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage {
        width: w,
        height: h,
        data,
    }
}

fn criterion_edges(p: OtsParams64) -> Outcome {
    let enc = StreamEncoding::<f64>::default();
    let images = [
        ("uniform 16x16", BinaryImage::from_fn(16, 16, |_, _| true)),
        (
            "checkerboard 8x8",
            BinaryImage::from_fn(8, 8, |x, y| (x + y) % 2 == 1),
        ),
        ("gradient 32x32", binarize(&photo_like(32, 32), 128)),
    ];
    let start = Instant::now();
    let mut summary = Vec::new();
    for (name, img) in &images {
        let want = oracle_edges(img);
        ensure(
            reference_edges(img).map_err(|e| e.to_string())?.bits == want,
            || format!("{name}: software reference disagrees with the brute-force oracle"),
        )?;
        let got = detect_edges(img, &enc, p).map_err(|e| e.to_string())?;
        let mismatches = got.bits.iter().zip(&want).filter(|(a, b)| a != b).count();
        ensure(mismatches == 0, || {
            format!("{name}: {mismatches} mismatching pixels")
        })?;
        // residual bookkeeping for the horizontal pass
        let sh: Vec<bool> = (0..img.bits.len())
            .map(|k| {
                if k % img.width == 0 {
                    img.bits[k]
                } else {
                    img.bits[k - 1]
                }
            })
            .collect();
        note_residual(
            xor_stream_detailed(&img.bits, &sh, &enc, p)
                .map_err(|e| e.to_string())?
                .max_residual,
        );
        summary.push(format!(
            "{name}: {} edges",
            want.iter().filter(|&&b| b).count()
        ));
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(300), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "0 mismatches ({}) in {:.1} s at dt = 50 ns",
        summary.join(", "),
        elapsed.as_secs_f64()
    ))
}

fn criterion_gradient(p: OtsParams64) -> Outcome {
    let deltas: Vec<u8> = (0..=240)
        .step_by(16)
        .map(|d| d as u8)
        .chain([255])
        .collect();
    let samples =
        gradient_sweep(&deltas, &GradientConfig::default(), p).map_err(|e| e.to_string())?;
    let rates: Vec<f64> = samples.iter().map(|s| s.rate).collect();
    ensure(rates.windows(2).all(|w| w[1] >= w[0]), || {
        format!("rates not monotone: {rates:?}")
    })?;
    let first = samples
        .iter()
        .position(|s| s.rate > 0.0)
        .ok_or("no sample fires")?;
    ensure(first > 0 && samples[first].delta_c > 0.0, || {
        "no detection floor".into()
    })?;
    // independent least squares over the firing samples
    let pts: Vec<(f64, f64)> = samples[first..]
        .iter()
        .map(|s| (s.delta_c, s.rate))
        .collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (sxx, sxy, syy) = pts.iter().fold((0.0, 0.0, 0.0), |a, p| {
        (a.0 + p.0 * p.0, a.1 + p.0 * p.1, a.2 + p.1 * p.1)
    });
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let r = (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt());
    let fit = fit_linear(&samples).map_err(|e| e.to_string())?;
    ensure(
        (fit.r2 - r * r).abs() < 1e-9 && (fit.slope / slope - 1.0).abs() < 1e-9,
        || {
            format!(
                "fit_linear {fit:?} disagrees with slope {slope}, r2 {}",
                r * r
            )
        },
    )?;
    ensure(fit.r2 >= 0.95, || format!("R^2 = {}", fit.r2))?;
    Ok(format!(
        "first firing at dC = {}, fitted floor {:.1}, slope {:.2} kHz per unit, R^2 = {:.4}",
        samples[first].delta_c,
        fit.floor,
        fit.slope / 1e3,
        fit.r2
    ))
}

fn criterion_energy() -> Outcome {
    let r = comparison_report(512, 512);
    ensure(
        sobel_op_count(512, 512) == 4_718_592 && xor_op_count(512, 512) == 524_288,
        || "op counts".into(),
    )?;
    let expected = [
        (290.0, 1368.0),
        (75.0, 354.0),
        (20.0, 94.0),
        (2071.0, 9772.0),
        (467.0, 245.0),
    ];
    ensure(r.rows.len() == expected.len(), || {
        format!("{} rows", r.rows.len())
    })?;
    for (row, (pj, uj)) in r.rows.iter().zip(expected) {
        let ops = if row.label.contains("XOR") {
            524_288
        } else {
            4_718_592
        };
        ensure(row.op_count == ops, || {
            format!("{}: {} ops", row.label, row.op_count)
        })?;
        ensure(row.energy_per_op == pj * 1e-12, || {
            format!("{}: {} J/op", row.label, row.energy_per_op)
        })?;
        ensure(row.total == row.energy_per_op * row.op_count as f64, || {
            format!("{}: total", row.label)
        })?;
        ensure((row.total * 1e6 - uj).abs() < 1.0, || {
            format!("{}: {} uJ vs {uj}", row.label, row.total * 1e6)
        })?;
    }
    let law = ScalingLaw::new(1.6, 6e-6, 467e-12).map_err(|e| e.to_string())?;
    ensure(
        scale_energy(&law, 6e-6).map_err(|e| e.to_string())? == 467e-12,
        || "identity scaling".into(),
    )?;
    let projected = scale_energy(&law, 16e-9).map_err(|e| e.to_string())?;
    let oracle = 467e-12 / (6e-6f64 / 16e-9).powf(1.6);
    ensure((projected / oracle - 1.0).abs() < 1e-12, || {
        format!("16 nm: {projected:e}")
    })?;
    let with = comparison_report(512, 512)
        .with_projection(16e-9, 1.6)
        .map_err(|e| e.to_string())?;
    ensure(
        with.notes
            .iter()
            .any(|n| n.contains("0.356") && n.contains("0.0032")),
        || "no discrepancy note".into(),
    )?;
    Ok(format!(
        "5 rows reproduced, 16 nm projection {:.4} pJ/op annotated",
        projected * 1e12
    ))
}

fn rc_error() -> Result<(f64, f64), String> {
    let (r, c, v) = (1e3, 1e-9, 1.0);
    let mut net = Netlist::<f64>::new();
    let (a, b) = (net.node("a"), net.node("b"));
    net.dc("V1", a, GROUND, v);
    net.resistor("R1", a, b, r);
    net.capacitor("C1", b, GROUND, c);
    let tr = transient(&net, 5e-6, 10e-9, &SimOptions::default()).map_err(|e| e.to_string())?;
    let vb = tr.voltage(b).map_err(|e| e.to_string())?;
    let worst = vb
        .iter()
        .enumerate()
        .map(|(k, &x)| (x - v * (1.0 - (-tr.time(k) / (r * c)).exp())).abs())
        .fold(0.0, f64::max);
    Ok((worst / v, tr.max_residual))
}

fn deterministic_run(p: OtsParams64) -> Result<(TruthTable, Vec<bool>, Vec<f64>), String> {
    let t = truth_table(
        &build_gate(GateKind::FullAdder, p),
        &LogicEncoding::default(),
    )
    .map_err(|e| e.to_string())?;
    let img = BinaryImage::from_fn(8, 8, |x, y| (x / 2 + y) % 3 == 0);
    let e = detect_edges(
        &img,
        &StreamEncoding {
            segment_periods: 16,
            ..Default::default()
        },
        p,
    )
    .map_err(|e| e.to_string())?;
    let g = gradient_sweep(
        &[200, 255],
        &GradientConfig {
            window: 100e-6,
            ..Default::default()
        },
        p,
    )
    .map_err(|e| e.to_string())?;
    Ok((t, e.bits, g.iter().map(|s| s.rate).collect()))
}

fn criterion_solver(p: OtsParams64) -> Outcome {
    let (err, res) = rc_error()?;
    note_residual(res);
    ensure(err < 0.01, || {
        format!("RC error {:.3}% of the step", err * 100.0)
    })?;
    let pool = |n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| e.to_string())
    };
    let one = pool(1)?.install(|| deterministic_run(p))?;
    let many = pool(4)?.install(|| deterministic_run(p))?;
    let again = pool(4)?.install(|| deterministic_run(p))?;
    ensure(one == many && many == again, || {
        "results differ across runs or thread counts".into()
    })?;
    let max_res = *MAX_RESIDUAL.lock().unwrap();
    ensure(max_res < 1e-9, || format!("max KCL residual {max_res:e} A"))?;
    Ok(format!(
        "RC max error {:.3}% at dt = 10 ns, max KCL residual {max_res:.2e} A, identical on 1 and 4 threads",
        err * 100.0
    ))
}

fn main() {
    let p = default_params::<f64>();
    let criteria: [(&str, &dyn Fn() -> Outcome); 8] = [
        ("1 truth tables", &|| criterion_truth_tables(p)),
        ("2 dendritic cascade", &|| criterion_cascade(p)),
        ("3 oscillator", &|| criterion_oscillator(p)),
        ("4 NDR snap-back", &|| criterion_ndr(p)),
        ("5 edge detection", &|| criterion_edges(p)),
        ("6 gradient estimation", &|| criterion_gradient(p)),
        ("7 energy arithmetic", &criterion_energy),
        ("8 solver validation", &|| criterion_solver(p)),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
            .unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS [{name}] {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL [{name}] {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
