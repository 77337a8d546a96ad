//! CSV readers and writers.
//!
//! Numbers are written with the shortest representation that round-trips, so
//! a trace written and read back yields identical `f64` values.

use std::io::{Read, Write};

use relest_core::actuator::{snr, SimTrace};
use relest_core::EstimateFrame;

use crate::error::{Error, Result};
use crate::experiment::{RmseTable, Window};

pub const INPUT_HEADER: [&str; 3] = ["t", "u", "iota"];
pub const TRACE_HEADER: [&str; 10] = ["t", "v", "i", "u", "iota", "r_true", "l_true", "lambda_true", "h", "mode"];
pub const ESTIMATE_HEADER: [&str; 6] = ["t", "estimator", "r_hat", "l_hat", "lambda_hat", "quality"];

/// One `t,u,iota` row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputSample {
    pub t: f64,
    pub u: f64,
    pub iota: f64,
}

/// Read `t,u,iota` samples. Extra columns are ignored, so trace files can be
/// replayed directly. Timestamps must advance by `delta`.
pub fn read_input<R: Read>(reader: R, name: &str, delta: f64) -> Result<Vec<InputSample>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| parse_error(name, &e))?.clone();
    if headers.is_empty() {
        return Err(Error::EmptyInput(name.into()));
    }
    let col = |want: &str| {
        headers.iter().position(|h| h == want).ok_or_else(|| Error::Schema {
            path: name.into(),
            msg: format!("missing column {want:?}"),
        })
    };
    let idx = [col("t")?, col("u")?, col("iota")?];

    let mut samples = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_error(name, &e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut vals = [0.0f64; 3];
        for (v, (&i, col_name)) in vals.iter_mut().zip(idx.iter().zip(INPUT_HEADER)) {
            let field = rec.get(i).unwrap_or("");
            *v = field.parse().map_err(|_| Error::Parse {
                path: name.into(),
                line,
                msg: format!("column {col_name}: cannot parse {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse { path: name.into(), line, msg: format!("column {col_name}: not finite") });
            }
        }
        samples.push(InputSample { t: vals[0], u: vals[1], iota: vals[2] });
    }
    if samples.is_empty() {
        return Err(Error::EmptyInput(name.into()));
    }

    let t0 = samples[0].t;
    for (k, s) in samples.iter().enumerate() {
        let expected = t0 + k as f64 * delta;
        if (s.t - expected).abs() > 1e-6 * delta {
            return Err(Error::Schema {
                path: name.into(),
                msg: format!("non-uniform timestamps: row {} has t = {}, expected {expected}", k + 1, s.t),
            });
        }
    }
    Ok(samples)
}

fn parse_error(name: &str, e: &csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse { path: name.into(), line, msg: e.to_string() }
}

pub fn write_input<W: Write>(w: W, samples: &[InputSample]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(INPUT_HEADER)?;
    for s in samples {
        wtr.write_record([s.t.to_string(), s.u.to_string(), s.iota.to_string()])?;
    }
    wtr.flush().map_err(Error::io("csv output"))?;
    Ok(())
}

pub fn write_trace<W: Write>(w: W, trace: &SimTrace) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(TRACE_HEADER)?;
    for s in &trace.samples {
        wtr.write_record([
            s.t.to_string(),
            s.v.to_string(),
            s.i.to_string(),
            s.u.to_string(),
            s.iota.to_string(),
            s.r.to_string(),
            s.l.to_string(),
            s.lambda.to_string(),
            s.h.to_string(),
            s.mode.as_str().to_string(),
        ])?;
    }
    wtr.flush().map_err(Error::io("csv output"))?;
    Ok(())
}

/// Estimates in long format, one block per estimator.
pub fn write_estimates<W: Write>(w: W, blocks: &[(&str, &[EstimateFrame])]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(ESTIMATE_HEADER)?;
    for (name, frames) in blocks {
        for f in *frames {
            wtr.write_record([
                f.t.to_string(),
                (*name).to_string(),
                f.r_hat.to_string(),
                f.l_hat.to_string(),
                f.lambda_hat.to_string(),
                f.quality.as_str().to_string(),
            ])?;
        }
    }
    wtr.flush().map_err(Error::io("csv output"))?;
    Ok(())
}

/// Per-sample SNR of the voltage and current measurements.
pub fn write_snr<W: Write>(w: W, trace: &SimTrace) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["t", "snr_v_db", "snr_i_db"])?;
    for s in &trace.samples {
        wtr.write_record([s.t.to_string(), fmt_db(snr(s.v, s.u - s.v)), fmt_db(snr(s.i, s.iota - s.i))])?;
    }
    wtr.flush().map_err(Error::io("csv output"))?;
    Ok(())
}

fn fmt_db(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        x.to_string()
    }
}

/// `source` is `true` when computed from simulated currents, `measured`
/// when computed from noisy samples.
pub fn write_observability<W: Write>(w: W, delta: f64, t0: f64, source: &str, steps: &[usize]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["t", "source", "steps_since_observable"])?;
    for (k, n) in steps.iter().enumerate() {
        wtr.write_record([(t0 + k as f64 * delta).to_string(), source.to_string(), n.to_string()])?;
    }
    wtr.flush().map_err(Error::io("csv output"))?;
    Ok(())
}

pub const INSUFFICIENT_DATA: &str = "insufficient data";

/// RMSE tables for both windows. Empty windows get a status marker and
/// blank cells.
pub fn write_rmse<W: Write>(w: W, tables: &[(Window, &RmseTable)]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "window", "row", "status", "rmse_r", "rmse_l", "rmse_lambda", "std_r", "std_l", "std_lambda", "n_seeds",
    ])?;
    for (window, table) in tables {
        for (name, row) in table.rows() {
            let mut rec = vec![window.as_str().to_string(), name.to_string()];
            match row {
                Some(r) => {
                    rec.push("ok".into());
                    rec.extend(r.mean.iter().map(f64::to_string));
                    match r.std {
                        Some(s) => rec.extend(s.iter().map(f64::to_string)),
                        None => rec.extend(["", "", ""].map(String::from)),
                    }
                }
                None => {
                    rec.push(INSUFFICIENT_DATA.into());
                    rec.extend(["", "", "", "", "", ""].map(String::from));
                }
            }
            rec.push(table.n_seeds.to_string());
            wtr.write_record(&rec)?;
        }
    }
    wtr.flush().map_err(Error::io("csv output"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for x in [0.1f64 + 0.2, 5e-5 * 3.0, -1.234e-300, 79.0 / 3.0] {
            assert_eq!(x.to_string().parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn infinite_snr_is_labelled() {
        assert_eq!(fmt_db(f64::INFINITY), "inf");
        assert_eq!(fmt_db(20.0), "20");
    }
}
