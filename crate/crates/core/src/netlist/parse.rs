//! Line-oriented netlist text format.
//!
//! ```text
//! # comment
//! V vin in 0 dc 5
//! R rd in a 9.1k
//! C cp a 0 1n ic=0
//! OTS x1 a b vth=3.2
//! D d1 in x vf=0.7
//! CMP u1 p m out vh=5 vl=0 rout=50
//! ```
//!
//! Sources: `dc <v>`, `pwl <t1> <v1> <t2> <v2> ...`,
//! `pulse <vlow> <vhigh> <delay> <width> <period> [repeat]`,
//! `tri <vpeak> <trise> <tfall>`. Every number accepts SI suffixes.

use crate::units::format_number;
use std::fmt::Write as _;

use super::{ElementKind, Netlist, NetlistError, SourceSpec};
use super::{CMP_R_OUT, CMP_V_HIGH, CMP_V_LOW, DIODE_R_SERIES, DIODE_V_F, DIODE_V_Z};
use crate::device::default_params;
use crate::scalar::Scalar;
use crate::units::parse_si;

pub fn parse_netlist<T: Scalar>(text: &str) -> Result<Netlist<T>, NetlistError> {
    let mut net = Netlist::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |msg: String| NetlistError::Parse { line, msg };
        let tok: Vec<&str> = content.split_whitespace().collect();
        let kind = tok[0].to_ascii_uppercase();
        let need = |n: usize| {
            if tok.len() < n {
                Err(err(format!("'{}' needs at least {} fields", tok[0], n)))
            } else {
                Ok(())
            }
        };
        let num = |s: &str| parse_si(s).map(T::lit).map_err(|e| err(e.to_string()));
        match kind.as_str() {
            "R" => {
                need(5)?;
                no_extra(&tok, 5, line)?;
                let (a, b) = (net.node(tok[2]), net.node(tok[3]));
                net.push(tok[1], ElementKind::Resistor(num(tok[4])?), &[a, b]);
            }
            "C" => {
                need(5)?;
                let mut initial = T::zero();
                for (k, v) in options(&tok[5..], line)? {
                    match k.as_str() {
                        "ic" => initial = num(v)?,
                        _ => return Err(err(format!("unknown capacitor option '{k}'"))),
                    }
                }
                let (a, b) = (net.node(tok[2]), net.node(tok[3]));
                net.push(
                    tok[1],
                    ElementKind::Capacitor {
                        farads: num(tok[4])?,
                        initial,
                    },
                    &[a, b],
                );
            }
            "V" => {
                need(5)?;
                let args = tok[5..]
                    .iter()
                    .map(|s| num(s))
                    .collect::<Result<Vec<T>, _>>()?;
                let spec = source_spec(&tok[4].to_ascii_lowercase(), &args).map_err(err)?;
                let (a, b) = (net.node(tok[2]), net.node(tok[3]));
                net.push(tok[1], ElementKind::VoltageSource(spec), &[a, b]);
            }
            "D" => {
                need(4)?;
                let (mut v_f, mut v_z, mut r_series) =
                    (T::lit(DIODE_V_F), T::lit(DIODE_V_Z), T::lit(DIODE_R_SERIES));
                for (k, v) in options(&tok[4..], line)? {
                    match k.as_str() {
                        "vf" => v_f = num(v)?,
                        "vz" => v_z = num(v)?,
                        "rs" => r_series = num(v)?,
                        _ => return Err(err(format!("unknown diode option '{k}'"))),
                    }
                }
                let (a, b) = (net.node(tok[2]), net.node(tok[3]));
                net.push(tok[1], ElementKind::Diode { v_f, v_z, r_series }, &[a, b]);
            }
            "OTS" => {
                need(4)?;
                let mut p = default_params::<T>();
                for (k, v) in options(&tok[4..], line)? {
                    let slot = match k.as_str() {
                        "vth" => &mut p.v_th,
                        "vhold" => &mut p.v_hold,
                        "ron" => &mut p.r_on,
                        "goff" => &mut p.g_off,
                        "ihold" => &mut p.i_hold,
                        "ton" => &mut p.tau_on,
                        "toff" => &mut p.tau_off,
                        _ => return Err(err(format!("unknown OTS option '{k}'"))),
                    };
                    *slot = num(v)?;
                }
                let (a, b) = (net.node(tok[2]), net.node(tok[3]));
                net.push(tok[1], ElementKind::Ots(p), &[a, b]);
            }
            "CMP" => {
                need(5)?;
                let (mut v_out_high, mut v_out_low, mut r_out) =
                    (T::lit(CMP_V_HIGH), T::lit(CMP_V_LOW), T::lit(CMP_R_OUT));
                for (k, v) in options(&tok[5..], line)? {
                    match k.as_str() {
                        "vh" => v_out_high = num(v)?,
                        "vl" => v_out_low = num(v)?,
                        "rout" => r_out = num(v)?,
                        _ => return Err(err(format!("unknown comparator option '{k}'"))),
                    }
                }
                let (p, m, o) = (net.node(tok[2]), net.node(tok[3]), net.node(tok[4]));
                net.push(
                    tok[1],
                    ElementKind::Comparator {
                        v_out_high,
                        v_out_low,
                        r_out,
                    },
                    &[p, m, o],
                );
            }
            other => return Err(err(format!("unknown element type '{other}'"))),
        }
        if net.elements.iter().filter(|e| e.name == tok[1]).count() > 1 {
            return Err(err(format!("duplicate element name '{}'", tok[1])));
        }
    }
    net.validate()?;
    Ok(net)
}

fn no_extra(tok: &[&str], n: usize, line: usize) -> Result<(), NetlistError> {
    if tok.len() > n {
        return Err(NetlistError::Parse {
            line,
            msg: format!("unexpected field '{}'", tok[n]),
        });
    }
    Ok(())
}

fn options<'a>(tok: &[&'a str], line: usize) -> Result<Vec<(String, &'a str)>, NetlistError> {
    tok.iter()
        .map(|t| {
            t.split_once('=')
                .map(|(k, v)| (k.to_ascii_lowercase(), v))
                .ok_or_else(|| NetlistError::Parse {
                    line,
                    msg: format!("expected key=value, got '{t}'"),
                })
        })
        .collect()
}

fn source_spec<T: Scalar>(kind: &str, a: &[T]) -> Result<SourceSpec<T>, String> {
    let spec = match kind {
        "dc" if a.len() == 1 => SourceSpec::Dc(a[0]),
        "pwl" if !a.is_empty() && a.len().is_multiple_of(2) => {
            SourceSpec::PiecewiseLinear(a.chunks(2).map(|c| (c[0], c[1])).collect())
        }
        "pulse" if a.len() == 5 || a.len() == 6 => {
            let repeat = match a.get(5) {
                None => None,
                Some(&r) if r >= T::zero() && r.fract() == T::zero() => r.to_u64(),
                Some(r) => return Err(format!("pulse repeat must be a whole number, got {r}")),
            };
            SourceSpec::Pulse {
                v_low: a[0],
                v_high: a[1],
                delay: a[2],
                width: a[3],
                period: a[4],
                repeat,
            }
        }
        "tri" if a.len() == 3 => SourceSpec::Triangle {
            v_peak: a[0],
            t_rise: a[1],
            t_fall: a[2],
        },
        "dc" | "pwl" | "pulse" | "tri" => {
            return Err(format!("wrong number of arguments for '{kind}' source"))
        }
        _ => return Err(format!("unknown source type '{kind}'")),
    };
    spec.validate()?;
    Ok(spec)
}

/// Writes the netlist in the text format. `header` lines are emitted as comments.
pub fn write_netlist<T: Scalar>(net: &Netlist<T>, header: &[&str]) -> String {
    let mut out = String::new();
    for h in header {
        if h.is_empty() {
            out.push_str("#\n");
        } else {
            let _ = writeln!(out, "# {h}");
        }
    }
    let f = |x: T| format_number(x.to_f64_lossy());
    for e in &net.elements {
        let nodes: Vec<&str> = e.terminals.iter().map(|&n| net.node_name(n)).collect();
        let nodes = nodes.join(" ");
        let _ = match &e.kind {
            ElementKind::Resistor(r) => writeln!(out, "R {} {} {}", e.name, nodes, f(*r)),
            ElementKind::Capacitor { farads, initial } => {
                if *initial == T::zero() {
                    writeln!(out, "C {} {} {}", e.name, nodes, f(*farads))
                } else {
                    writeln!(
                        out,
                        "C {} {} {} ic={}",
                        e.name,
                        nodes,
                        f(*farads),
                        f(*initial)
                    )
                }
            }
            ElementKind::VoltageSource(s) => {
                let args = match s {
                    SourceSpec::Dc(v) => format!("dc {}", f(*v)),
                    SourceSpec::PiecewiseLinear(p) => {
                        let pts: Vec<String> = p
                            .iter()
                            .map(|&(t, v)| format!("{} {}", f(t), f(v)))
                            .collect();
                        format!("pwl {}", pts.join(" "))
                    }
                    SourceSpec::Pulse {
                        v_low,
                        v_high,
                        delay,
                        width,
                        period,
                        repeat,
                    } => {
                        let mut s = format!(
                            "pulse {} {} {} {} {}",
                            f(*v_low),
                            f(*v_high),
                            f(*delay),
                            f(*width),
                            f(*period)
                        );
                        if let Some(n) = repeat {
                            let _ = write!(s, " {n}");
                        }
                        s
                    }
                    SourceSpec::Triangle {
                        v_peak,
                        t_rise,
                        t_fall,
                    } => {
                        format!("tri {} {} {}", f(*v_peak), f(*t_rise), f(*t_fall))
                    }
                };
                writeln!(out, "V {} {} {}", e.name, nodes, args)
            }
            ElementKind::Diode { v_f, v_z, r_series } => writeln!(
                out,
                "D {} {} vf={} vz={} rs={}",
                e.name,
                nodes,
                f(*v_f),
                f(*v_z),
                f(*r_series)
            ),
            ElementKind::Ots(p) => writeln!(
                out,
                "OTS {} {} vth={} vhold={} ron={} goff={} ihold={} ton={} toff={}",
                e.name,
                nodes,
                f(p.v_th),
                f(p.v_hold),
                f(p.r_on),
                f(p.g_off),
                f(p.i_hold),
                f(p.tau_on),
                f(p.tau_off)
            ),
            ElementKind::Comparator {
                v_out_high,
                v_out_low,
                r_out,
            } => writeln!(
                out,
                "CMP {} {} vh={} vl={} rout={}",
                e.name,
                nodes,
                f(*v_out_high),
                f(*v_out_low),
                f(*r_out)
            ),
        };
    }
    out
}
