//! Surface files: `<stem>.csv` holds one row per grid node (`t,D,h` or
//! `t,D,N,h`), `<stem>.json` holds the [`SurfaceHeader`]. Floats are written
//! in shortest round-trip form, so a save/load cycle is bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::surface::{DiscretionSurface, DiscretionSurface3, SurfaceHeader, SURFACE_SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::mpp::ArrivalKind;

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

pub fn write_surface_csv<W: Write>(surface: &DiscretionSurface, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "D", "h"])?;
    let grid = surface.grid();
    for i in 0..grid.nodes() {
        let t = grid.time(i).to_string();
        for (d, h) in surface.slice(i).iter().enumerate() {
            w.write_record([t.as_str(), &d.to_string(), &h.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io("<surface csv>", e))?;
    Ok(())
}

pub fn write_surface3_csv<W: Write>(surface: &DiscretionSurface3, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "D", "N", "h"])?;
    let grid = surface.grid();
    let m = surface.target();
    for i in 0..grid.nodes() {
        let t = grid.time(i).to_string();
        for n in 0..=m {
            for d in 0..=m {
                let h = surface.node(i, d, n);
                w.write_record([t.as_str(), &d.to_string(), &n.to_string(), &h.to_string()])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<surface csv>", e))?;
    Ok(())
}

fn write_header(header: &SurfaceHeader, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(header)?;
    std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

fn read_header(path: &Path) -> Result<SurfaceHeader> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header: SurfaceHeader = serde_json::from_str(&text)?;
    if header.schema_version != SURFACE_SCHEMA_VERSION {
        return Err(Error::Contract(format!(
            "{}: unsupported surface schema version {}",
            path.display(),
            header.schema_version
        )));
    }
    Ok(header)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes `<stem>.csv` and `<stem>.json`.
pub fn save_surface(surface: &DiscretionSurface, stem: &Path) -> Result<()> {
    write_header(surface.header(), &with_ext(stem, "json"))?;
    write_surface_csv(surface, create(&with_ext(stem, "csv"))?)
}

pub fn save_surface3(surface: &DiscretionSurface3, stem: &Path) -> Result<()> {
    write_header(surface.header(), &with_ext(stem, "json"))?;
    write_surface3_csv(surface, create(&with_ext(stem, "csv"))?)
}

fn parse<T: std::str::FromStr>(field: &str, what: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::Contract(format!("bad {what} field `{field}` in surface csv")))
}

fn read_values<R: Read>(
    header: &SurfaceHeader,
    input: R,
    with_attempts: bool,
) -> Result<Vec<f64>> {
    let m = header.d_max as usize;
    let per_slice = if with_attempts { (m + 1) * (m + 1) } else { m + 1 };
    let mut reader = csv::Reader::from_reader(input);
    let mut values = Vec::with_capacity(header.grid.nodes() * per_slice);
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let i = k / per_slice;
        let within = k % per_slice;
        let (d, n) = if with_attempts {
            (within % (m + 1), Some(within / (m + 1)))
        } else {
            (within, None)
        };
        let t: f64 = parse(&record[0], "t")?;
        if i >= header.grid.nodes() || t.to_bits() != header.grid.time(i).to_bits() {
            return Err(Error::Contract(format!("row {k}: unexpected time {t}")));
        }
        if parse::<usize>(&record[1], "D")? != d {
            return Err(Error::Contract(format!("row {k}: D out of order")));
        }
        if let Some(n) = n {
            if parse::<usize>(&record[2], "N")? != n {
                return Err(Error::Contract(format!("row {k}: N out of order")));
            }
        }
        values.push(parse(&record[record.len() - 1], "h")?);
    }
    Ok(values)
}

pub fn load_surface(stem: &Path) -> Result<DiscretionSurface> {
    let header = read_header(&with_ext(stem, "json"))?;
    if !matches!(header.arrivals, ArrivalKind::Poisson { .. }) {
        return Err(Error::Contract("header describes a pinned surface".into()));
    }
    let values = read_values(&header, open(&with_ext(stem, "csv"))?, false)?;
    DiscretionSurface::from_parts(header, values)
}

pub fn load_surface3(stem: &Path) -> Result<DiscretionSurface3> {
    let header = read_header(&with_ext(stem, "json"))?;
    if !matches!(header.arrivals, ArrivalKind::Pinned { .. }) {
        return Err(Error::Contract("header describes a Poisson surface".into()));
    }
    let values = read_values(&header, open(&with_ext(stem, "csv"))?, true)?;
    DiscretionSurface3::from_parts(header, values)
}
