//! CSV and JSON output.
//!
//! Numbers are written with Rust's shortest round-trip formatting (`{:?}`), so equal
//! inputs give byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::field::Field;
use crate::invariants::InvariantReport;
use crate::kernel::IdentityCheck;

/// Columns `t,x,u`, plus `source` when given, one row per node.
pub fn write_fields_csv<W: Write>(out: W, fields: &[&Field], source: Option<&str>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match source {
        Some(_) => w.write_record(["t", "x", "u", "source"])?,
        None => w.write_record(["t", "x", "u"])?,
    }
    for f in fields {
        let t = num(f.t);
        for (i, v) in f.values.iter().enumerate() {
            let x = num(f.grid.x(i));
            let u = num(*v);
            match source {
                Some(s) => w.write_record([t.as_str(), &x, &u, s])?,
                None => w.write_record([t.as_str(), &x, &u])?,
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns `identity_name,parameter,computed,expected,abs_error`.
pub fn write_identities_csv<W: Write>(out: W, rows: &[IdentityCheck]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["identity_name", "parameter", "computed", "expected", "abs_error"])?;
    for r in rows {
        w.write_record([
            r.identity_name.clone(),
            num(r.parameter),
            num(r.computed),
            num(r.expected),
            num(r.abs_error),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `check,status,kind,name,t,value`: one row per measured value,
/// threshold and per-time detail.
pub fn write_reports_csv<W: Write>(out: W, reports: &[InvariantReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["check", "status", "kind", "name", "t", "value"])?;
    for r in reports {
        let status = serde_json::to_value(r.status)?.as_str().unwrap_or_default().to_string();
        for m in &r.measured {
            w.write_record([&r.name, &status, "measured", &m.name, "", &num(m.value)])?;
        }
        for m in &r.threshold {
            w.write_record([&r.name, &status, "threshold", &m.name, "", &num(m.value)])?;
        }
        for d in &r.details {
            w.write_record([&r.name, &status, "detail", &d.name, &num(d.t), &num(d.value)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip text of `v`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}
