//! Per-element field export: legacy ASCII VTK unstructured grids and CSV.

use std::fmt::Write as _;
use std::path::Path;

use crestim::{ErrorReport, Mesh};

use crate::error::{CliError, CliResult};

/// A named per-element scalar map.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    pub name: String,
    pub values: Vec<f64>,
}

impl CellField {
    pub fn new(name: &str, values: Vec<f64>) -> Self {
        Self { name: name.to_string(), values }
    }
}

/// `contribution^2 / area` per element.
pub fn density(mesh: &Mesh, contributions: &[f64]) -> Vec<f64> {
    contributions.iter().enumerate().map(|(e, c)| c * c / mesh.area(e)).collect()
}

/// Fields exported for one report. Undefined local effectivities are NaN.
pub fn report_fields(mesh: &Mesh, report: &ErrorReport) -> Vec<CellField> {
    vec![
        CellField::new("estimate_density", density(mesh, &report.contributions)),
        CellField::new("estimate", report.contributions.clone()),
        CellField::new("reference_density", density(mesh, &report.reference_contributions)),
        CellField::new("reference", report.reference_contributions.clone()),
        CellField::new("local_effectivity", report.local_effectivity.iter().map(|v| v.unwrap_or(f64::NAN)).collect()),
    ]
}

/// 17 significant digits: parsing the text returns the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

fn check(mesh: &Mesh, fields: &[CellField]) -> CliResult<()> {
    for f in fields {
        if f.values.len() != mesh.num_elements() {
            return Err(CliError::Validation(format!(
                "field '{}' has {} values for {} elements",
                f.name,
                f.values.len(),
                mesh.num_elements()
            )));
        }
    }
    Ok(())
}

pub fn vtk_string(mesh: &Mesh, title: &str, fields: &[CellField]) -> CliResult<String> {
    check(mesh, fields)?;
    let mut s = String::new();
    let n = mesh.num_elements();
    writeln!(s, "# vtk DataFile Version 3.0").unwrap();
    writeln!(s, "{}", title.replace('\n', " ")).unwrap();
    writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(s, "POINTS {} double", mesh.num_nodes()).unwrap();
    for p in mesh.nodes() {
        writeln!(s, "{} {} 0", fmt_f64(p.x), fmt_f64(p.y)).unwrap();
    }
    writeln!(s, "CELLS {n} {}", 4 * n).unwrap();
    for t in mesh.triangles() {
        writeln!(s, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(s, "CELL_TYPES {n}").unwrap();
    for _ in 0..n {
        writeln!(s, "5").unwrap();
    }
    writeln!(s, "CELL_DATA {n}").unwrap();
    for f in fields {
        writeln!(s, "SCALARS {} double 1\nLOOKUP_TABLE default", f.name).unwrap();
        for v in &f.values {
            writeln!(s, "{}", fmt_f64(*v)).unwrap();
        }
    }
    Ok(s)
}

pub fn csv_string(mesh: &Mesh, fields: &[CellField]) -> CliResult<String> {
    check(mesh, fields)?;
    let mut s = String::from("element,area");
    for f in fields {
        s.push(',');
        s.push_str(&f.name);
    }
    s.push('\n');
    for e in 0..mesh.num_elements() {
        write!(s, "{e},{}", fmt_f64(mesh.area(e))).unwrap();
        for f in fields {
            write!(s, ",{}", fmt_f64(f.values[e])).unwrap();
        }
        s.push('\n');
    }
    Ok(s)
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes `<stem>.vtk` and `<stem>.csv` into `dir`.
pub fn export_fields(dir: &Path, stem: &str, mesh: &Mesh, title: &str, fields: &[CellField]) -> CliResult<[std::path::PathBuf; 2]> {
    let vtk = dir.join(format!("{stem}.vtk"));
    let csv = dir.join(format!("{stem}.csv"));
    write(&vtk, &vtk_string(mesh, title, fields)?)?;
    write(&csv, &csv_string(mesh, fields)?)?;
    Ok([vtk, csv])
}

/// Reads the field columns of a CSV written by [`csv_string`].
pub fn read_csv_fields(text: &str) -> CliResult<Vec<CellField>> {
    let bad = |m: &str| CliError::Validation(format!("field csv: {m}"));
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty"))?.split(',').collect();
    if header.len() < 2 || header[0] != "element" || header[1] != "area" {
        return Err(bad("unexpected header"));
    }
    let mut fields: Vec<CellField> = header[2..].iter().map(|h| CellField::new(h, Vec::new())).collect();
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != header.len() {
            return Err(bad("ragged row"));
        }
        for (f, c) in fields.iter_mut().zip(&cols[2..]) {
            f.values.push(c.parse().map_err(|_| bad("bad number"))?);
        }
    }
    Ok(fields)
}
