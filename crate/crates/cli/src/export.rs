use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use sgs_core::multires::compress_to;
use sgs_core::{CellStatus, PatternBase, PatternRecord, SgsSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    /// One row per cell.
    Sgs,
    /// One row per member point, for records archived with --emit-full.
    Points,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[arg(long)]
    pub archive: PathBuf,
    #[arg(long)]
    pub id: u64,
    #[arg(long, value_enum, default_value_t = ExportFormat::Sgs)]
    pub format: ExportFormat,
    /// Coarsen the summary to this level before writing.
    #[arg(long)]
    pub level: Option<u8>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn status_name(s: CellStatus) -> &'static str {
    match s {
        CellStatus::Core => "core",
        CellStatus::Edge => "edge",
        CellStatus::Noise => "noise",
    }
}

/// Cell rows: grid location, lower corner in data coordinates, side length, status,
/// population and number of connections.
pub fn write_sgs(s: &SgsSummary, out: &mut dyn Write) -> Result<()> {
    let d = s.dim();
    let mut header: Vec<String> = (1..=d).map(|i| format!("c{i}")).collect();
    header.extend((1..=d).map(|i| format!("min{i}")));
    header.extend(["side", "status", "population", "connections"].map(String::from));
    writeln!(out, "{}", header.join(","))?;
    let side = s.side();
    for c in &s.cells {
        let mut row: Vec<String> = c.location.0.iter().map(|x| x.to_string()).collect();
        row.extend(
            s.grid
                .min_corner(&c.location, side)
                .iter()
                .map(|x| x.to_string()),
        );
        row.push(side.to_string());
        row.push(status_name(c.status).into());
        row.push(c.population.to_string());
        row.push(c.connections.len().to_string());
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_points(rec: &PatternRecord, out: &mut dyn Write) -> Result<()> {
    let Some(points) = &rec.points else {
        bail!(
            "record {} has no member points (archive with --emit-full)",
            rec.id
        );
    };
    let d = rec.sgs.dim();
    let cols: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    writeln!(out, "id,t,{}", cols.join(","))?;
    for p in points {
        let xs: Vec<String> = p.coords.iter().map(|x| x.to_string()).collect();
        writeln!(out, "{},{},{}", p.id, p.t, xs.join(","))?;
    }
    Ok(())
}

pub fn cmd_export(a: &ExportArgs) -> Result<()> {
    let base = PatternBase::load(&a.archive)?;
    let rec = base.get(a.id)?;
    let mut out = output(a.output.as_deref())?;
    match a.format {
        ExportFormat::Sgs => {
            let s = match a.level {
                Some(l) => compress_to(&rec.sgs, l)?,
                None => rec.sgs.clone(),
            };
            write_sgs(&s, &mut out)?;
        }
        ExportFormat::Points => write_points(rec, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use sgs_core::{CellCoord, ClusterParams, GridSpec, SgsCell};

    #[test]
    fn one_cell_one_row() {
        let s = SgsSummary {
            cluster_id: 1,
            level: 0,
            rho: 3,
            grid: GridSpec::new(&ClusterParams::new(2f64.sqrt(), 3).unwrap(), 2).unwrap(),
            cells: vec![SgsCell {
                location: CellCoord(vec![2, -1]),
                population: 7,
                status: CellStatus::Core,
                connections: vec![],
            }],
        };
        let mut buf = Vec::new();
        write_sgs(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[0],
            "c1,c2,min1,min2,side,status,population,connections"
        );
        assert_eq!(lines[1], "2,-1,2,-1,1,core,7,0");
    }
}
