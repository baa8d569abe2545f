//! Planning tables as delimited text: one aircraft per row, times as H:MM,
//! durations in whole minutes, the gate as a quoted `(k, d)` pair.

use std::io::{Read, Write};

use super::model::{Aircraft, GateId};
use super::AircraftError;
use crate::hlpn::{Minutes, Time};

pub const HEADER: [&str; 12] = [
    "Aircraft", "c", "r", "g", "(k, d)", "ts", "t", "tr", "tg", "tp", "tk", "tf",
];

fn field_err(line: u64, what: &str, raw: &str) -> AircraftError {
    AircraftError::Table {
        line,
        message: format!("bad {what} `{raw}`"),
    }
}

fn parse_id(raw: &str, line: u64) -> Result<u32, AircraftError> {
    let digits = raw.trim().trim_start_matches("Aircraft").trim();
    digits.parse().map_err(|_| field_err(line, "aircraft", raw))
}

fn parse_time(raw: &str, line: u64) -> Result<Time, AircraftError> {
    raw.trim().parse().map_err(|_| field_err(line, "time", raw))
}

fn parse_minutes(raw: &str, line: u64) -> Result<Minutes, AircraftError> {
    raw.trim()
        .parse()
        .map(Minutes)
        .map_err(|_| field_err(line, "duration", raw))
}

fn parse_u32(raw: &str, line: u64, what: &str) -> Result<u32, AircraftError> {
    raw.trim().parse().map_err(|_| field_err(line, what, raw))
}

pub fn read_table<R: Read>(input: R) -> Result<Vec<Aircraft>, AircraftError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| AircraftError::Table {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != HEADER.len() {
            return Err(AircraftError::Table {
                line,
                message: format!("expected {} fields, found {}", HEADER.len(), rec.len()),
            });
        }
        let a = Aircraft {
            id: parse_id(&rec[0], line)?,
            category: rec[1]
                .parse()
                .map_err(|_| field_err(line, "category", &rec[1]))?,
            runway: parse_u32(&rec[2], line, "runway")?,
            gateway: parse_u32(&rec[3], line, "gateway")?,
            gate: rec[4]
                .parse::<GateId>()
                .map_err(|_| field_err(line, "gate", &rec[4]))?,
            ts: parse_time(&rec[5], line)?,
            t: parse_minutes(&rec[6], line)?,
            tr: parse_time(&rec[7], line)?,
            tg: parse_time(&rec[8], line)?,
            tp: parse_minutes(&rec[9], line)?,
            tk: parse_time(&rec[10], line)?,
            tf: parse_time(&rec[11], line)?,
        };
        a.check_order().map_err(|_| AircraftError::Table {
            line,
            message: format!("aircraft {} times out of order", a.id),
        })?;
        if out.iter().any(|b: &Aircraft| b.id == a.id) {
            return Err(AircraftError::Table {
                line,
                message: format!("duplicate aircraft {}", a.id),
            });
        }
        out.push(a);
    }
    Ok(out)
}

pub fn write_table<W: Write>(output: W, plan: &[Aircraft]) -> Result<(), AircraftError> {
    let io = |e: csv::Error| AircraftError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(output);
    w.write_record(HEADER).map_err(io)?;
    for a in plan {
        w.write_record([
            format!("Aircraft {}", a.id),
            a.category.to_string(),
            a.runway.to_string(),
            a.gateway.to_string(),
            a.gate.to_string(),
            a.ts.to_string(),
            a.t.0.to_string(),
            a.tr.to_string(),
            a.tg.to_string(),
            a.tp.0.to_string(),
            a.tk.to_string(),
            a.tf.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| AircraftError::Io(e.to_string()))
}
