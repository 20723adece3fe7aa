//! CSV formats used by the subcommands. Columns are fixed and documented
//! on the flags that consume or produce them; floats are written in plain
//! decimal with 17 significant digits so they round-trip exactly.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use tautband_core::buffer::{LossSchedule, TrafficTrace};
use tautband_core::montecarlo::{PathSample, SweepPoint};
use tautband_core::stats::{fmt_sig, Histogram};
use tautband_core::tautstring::TautStringResult;

use crate::CliError;

fn f(v: f64) -> String {
    fmt_sig(v, 17)
}

fn parse_field(raw: &str, path: &Path, line: usize, column: &str) -> Result<f64, CliError> {
    raw.trim().parse::<f64>().map_err(|_| {
        CliError::Input(format!(
            "{} line {line}: column `{column}` is not a number: {raw:?}",
            path.display()
        ))
    })
}

/// Reads `t,lower,upper` rows; returns (times, lower, upper).
pub fn read_tube_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), CliError> {
    let body = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = body.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "t,lower,upper" => {}
        _ => {
            return Err(CliError::Input(format!(
                "{} must start with the header `t,lower,upper`",
                path.display()
            )))
        }
    }
    let mut times = Vec::new();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(CliError::Input(format!(
                "{} line {}: expected 3 columns, found {}",
                path.display(),
                idx + 1,
                cols.len()
            )));
        }
        times.push(parse_field(cols[0], path, idx + 1, "t")?);
        lower.push(parse_field(cols[1], path, idx + 1, "lower")?);
        upper.push(parse_field(cols[2], path, idx + 1, "upper")?);
    }
    if times.len() < 2 {
        return Err(CliError::Input(format!(
            "{} holds {} knots; a tube needs at least 2",
            path.display(),
            times.len()
        )));
    }
    Ok((times, lower, upper))
}

/// Reads `slot,S,C` rows in slot order.
pub fn read_trace_csv(path: &Path) -> Result<TrafficTrace, CliError> {
    let body = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = body.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "slot,S,C" => {}
        _ => {
            return Err(CliError::Input(format!(
                "{} must start with the header `slot,S,C`",
                path.display()
            )))
        }
    }
    let mut inflow = Vec::new();
    let mut capacity = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(CliError::Input(format!(
                "{} line {}: expected 3 columns, found {}",
                path.display(),
                idx + 1,
                cols.len()
            )));
        }
        let slot = cols[0].trim().parse::<usize>().map_err(|_| {
            CliError::Input(format!(
                "{} line {}: slot must be an integer, got {:?}",
                path.display(),
                idx + 1,
                cols[0]
            ))
        })?;
        if slot != inflow.len() {
            return Err(CliError::Input(format!(
                "{} line {}: slots must run 0,1,2,…; expected {}, got {slot}",
                path.display(),
                idx + 1,
                inflow.len()
            )));
        }
        inflow.push(parse_field(cols[1], path, idx + 1, "S")?);
        capacity.push(parse_field(cols[2], path, idx + 1, "C")?);
    }
    Ok(TrafficTrace::new(inflow, capacity)?)
}

/// Writes `t,value,contact` rows for a solved string.
pub fn write_solution_csv(path: &Path, solution: &TautStringResult) -> Result<(), CliError> {
    let mut out = String::from("t,value,contact\n");
    for ((t, v), c) in solution
        .path
        .times()
        .iter()
        .zip(solution.path.values())
        .zip(&solution.contact)
    {
        out.push_str(&format!("{},{},{c}\n", f(*t), f(*v)));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes `bin_lo,bin_hi,count,frequency` rows.
pub fn write_hist_csv(path: &Path, hist: &Histogram) -> Result<(), CliError> {
    let total = hist.total().max(1) as f64;
    let mut out = String::from("bin_lo,bin_hi,count,frequency\n");
    for (b, &count) in hist.counts.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{count},{}\n",
            f(hist.edge(b)),
            f(hist.edge(b + 1)),
            f(count as f64 / total)
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes `path,normalized,raw` rows.
pub fn write_per_path_csv(path: &Path, samples: &[PathSample]) -> Result<(), CliError> {
    let mut out = String::from("path,normalized,raw\n");
    for s in samples {
        out.push_str(&format!("{},{},{}\n", s.index, f(s.normalized), f(s.raw)));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes `slot,S,C,L_opt,L_fifo,B_opt,B_fifo` rows.
pub fn write_schedule_csv(
    path: &Path,
    trace: &TrafficTrace,
    optimal: &LossSchedule,
    fifo: &LossSchedule,
) -> Result<(), CliError> {
    let mut out = String::from("slot,S,C,L_opt,L_fifo,B_opt,B_fifo\n");
    for j in 0..trace.slots() {
        out.push_str(&format!(
            "{j},{},{},{},{},{},{}\n",
            f(trace.inflow()[j]),
            f(trace.capacity()[j]),
            f(optimal.losses[j]),
            f(fifo.losses[j]),
            f(optimal.buffer_levels[j]),
            f(fifo.buffer_levels[j]),
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes one row per sweep horizon with the headline statistics.
pub fn write_sweep_csv(path: &Path, points: &[SweepPoint]) -> Result<(), CliError> {
    let mut out = String::from(
        "t,steps,mean,se_mean,sample_variance,se_variance,second_moment,raw_mean,raw_variance\n",
    );
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            f(p.horizon),
            p.steps,
            f(p.stats.sample_mean),
            f(p.stats.se_mean),
            f(p.stats.sample_variance),
            f(p.stats.se_variance),
            f(p.stats.second_moment),
            f(p.stats.raw_mean),
            f(p.stats.raw_variance),
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Pretty JSON either to a file or to standard output.
pub fn emit_json<T: serde::Serialize>(target: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    match target {
        Some(path) => fs::write(path, body)?,
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
        }
    }
    Ok(())
}
