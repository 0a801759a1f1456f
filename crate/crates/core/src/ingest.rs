//! Station annual-maxima ingestion, year alignment, region-pair analysis
//! and file formats for panels, grids and lambda slices.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{GridKind, Location, MadogramGrid, Margin, Panel, Region};
use crate::error::{Error, Result};
use crate::estimators::{estimate_grid, lambda_slice, EstimatorKind, LambdaConvention, LambdaSlice};

pub const STATION_HEADER: [&str; 4] = ["station_id", "station_name", "year", "value"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationSeries {
    pub station_id: String,
    pub name: String,
    /// `(year, value)` with strictly increasing years.
    pub records: Vec<(i32, f64)>,
}

pub fn load_station_csv(path: impl AsRef<Path>) -> Result<Vec<StationSeries>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_station_csv(file, &path.display().to_string())
}

/// Parses `station_id,station_name,year,value` records. Stations keep the
/// order of their first appearance; records are sorted by year.
pub fn parse_station_csv<R: Read>(input: R, source: &str) -> Result<Vec<StationSeries>> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != STATION_HEADER {
        return Err(parse_err(
            1,
            format!("expected header {:?}, found {:?}", STATION_HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }

    let mut order: Vec<String> = Vec::new();
    let mut stations: HashMap<String, (String, BTreeMap<i32, f64>)> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 4 {
            return Err(parse_err(line, format!("expected 4 fields, found {}", record.len())));
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(parse_err(line, "empty station_id".into()));
        }
        let year: i32 = record[2]
            .parse()
            .map_err(|_| parse_err(line, format!("invalid year {:?}", &record[2])))?;
        let value: f64 = record[3]
            .parse()
            .map_err(|_| parse_err(line, format!("invalid value {:?}", &record[3])))?;
        if !(value.is_finite() && value > 0.0) {
            return Err(parse_err(line, format!("value must be positive, got {value}")));
        }
        let entry = stations.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            (record[1].to_string(), BTreeMap::new())
        });
        if entry.1.insert(year, value).is_some() {
            return Err(parse_err(line, format!("duplicate record for station {id:?} in {year}")));
        }
    }
    Ok(order
        .into_iter()
        .map(|id| {
            let (name, records) = stations.remove(&id).expect("station recorded in order");
            StationSeries {
                station_id: id,
                name,
                records: records.into_iter().collect(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignPolicy {
    CompleteYears,
    FailOnMissing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedYear {
    pub year: i32,
    pub reason: String,
}

/// Stations aligned on shared years. Station `c` occupies the panel column
/// at `Location(c, 0)`.
#[derive(Debug, Clone)]
pub struct AlignedDataset {
    pub stations: Vec<String>,
    pub names: Vec<String>,
    pub years: Vec<i32>,
    pub panel: Panel,
    pub dropped_years: Vec<DroppedYear>,
}

pub fn align(series: &[StationSeries], policy: AlignPolicy) -> Result<AlignedDataset> {
    if series.is_empty() {
        return Err(Error::param("no station series to align"));
    }
    let lookups: Vec<HashMap<i32, f64>> = series
        .iter()
        .map(|s| s.records.iter().copied().collect())
        .collect();
    let all_years: BTreeSet<i32> = series
        .iter()
        .flat_map(|s| s.records.iter().map(|r| r.0))
        .collect();

    let mut years = Vec::new();
    let mut rows = Vec::new();
    let mut dropped_years = Vec::new();
    for &year in &all_years {
        let missing: Vec<&str> = series
            .iter()
            .zip(&lookups)
            .filter(|(_, l)| !l.contains_key(&year))
            .map(|(s, _)| s.station_id.as_str())
            .collect();
        if missing.is_empty() {
            years.push(year);
            rows.push(lookups.iter().map(|l| l[&year]).collect::<Vec<f64>>());
        } else {
            match policy {
                AlignPolicy::FailOnMissing => {
                    return Err(Error::MissingYear {
                        station: missing[0].to_string(),
                        year,
                    })
                }
                AlignPolicy::CompleteYears => dropped_years.push(DroppedYear {
                    year,
                    reason: format!("missing at {}", missing.join(",")),
                }),
            }
        }
    }
    if years.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let locations = (0..series.len()).map(|c| Location::new(c as i64, 0)).collect();
    Ok(AlignedDataset {
        stations: series.iter().map(|s| s.station_id.clone()).collect(),
        names: series.iter().map(|s| s.name.clone()).collect(),
        years,
        panel: Panel::new(locations, rows, Margin::Raw)?,
        dropped_years,
    })
}

impl AlignedDataset {
    /// Region of the named stations, labelled with the ids.
    pub fn region<S: AsRef<str>>(&self, ids: &[S]) -> Result<Region> {
        let locations = ids
            .iter()
            .map(|id| {
                self.stations
                    .iter()
                    .position(|s| s == id.as_ref())
                    .map(|c| Location::new(c as i64, 0))
                    .ok_or_else(|| Error::UnknownStation(id.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let label = ids.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(",");
        Region::with_label(locations, Some(label))
    }
}

/// Rank-based estimate grid for two disjoint station groups.
pub fn analyze_pair<S: AsRef<str>>(
    dataset: &AlignedDataset,
    x: &[S],
    y: &[S],
    alphas: &[f64],
    betas: &[f64],
) -> Result<MadogramGrid> {
    let (rx, ry) = (dataset.region(x)?, dataset.region(y)?);
    estimate_grid(&dataset.panel, &rx, &ry, alphas, betas, EstimatorKind::EmpiricalMargins)
}

pub fn analyze_slice<S: AsRef<str>>(
    dataset: &AlignedDataset,
    x: &[S],
    y: &[S],
    lambdas: &[f64],
    convention: LambdaConvention,
) -> Result<LambdaSlice> {
    let (rx, ry) = (dataset.region(x)?, dataset.region(y)?);
    lambda_slice(&dataset.panel, &rx, &ry, lambdas, convention)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FileFormat {
    Csv,
    Json,
}

impl FromStr for FileFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(FileFormat::Csv),
            "json" => Ok(FileFormat::Json),
            other => Err(Error::param(format!("unknown format {other:?}"))),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(mut w: impl Write, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes a grid as JSON, or as CSV with `# key: value` metadata lines
/// followed by one `alpha,beta,value` row per cell.
pub fn export_grid(grid: &MadogramGrid, path: impl AsRef<Path>, format: FileFormat) -> Result<()> {
    let path = path.as_ref();
    grid.validate()?;
    let mut out = create(path)?;
    match format {
        FileFormat::Json => serde_json::to_writer_pretty(&mut out, grid)?,
        FileFormat::Csv => write_grid_csv(grid, &mut out)?,
    }
    finish(out, path)
}

pub fn write_grid_csv<W: Write>(grid: &MadogramGrid, mut out: W) -> Result<()> {
    let io = |e| Error::io("<grid csv>", e);
    writeln!(out, "# kind: {}", grid.kind.as_str()).map_err(io)?;
    writeln!(out, "# region_x: {}", serde_json::to_string(&grid.region_x)?).map_err(io)?;
    writeln!(out, "# region_y: {}", serde_json::to_string(&grid.region_y)?).map_err(io)?;
    if let Some(seed) = grid.seed {
        writeln!(out, "# seed: {seed}").map_err(io)?;
    }
    if let Some(t) = grid.t {
        writeln!(out, "# T: {t}").map_err(io)?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "beta", "value"])?;
    for (a, alpha) in grid.alphas.iter().enumerate() {
        for (b, beta) in grid.betas.iter().enumerate() {
            w.write_record([
                alpha.to_string(),
                beta.to_string(),
                grid.values[a][b].to_string(),
            ])?;
        }
    }
    w.flush().map_err(io)?;
    Ok(())
}

pub fn import_grid(path: impl AsRef<Path>, format: FileFormat) -> Result<MadogramGrid> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let grid = match format {
        FileFormat::Json => serde_json::from_str(&text)?,
        FileFormat::Csv => parse_grid_csv(&text, &path.display().to_string())?,
    };
    grid.validate()?;
    Ok(grid)
}

pub fn parse_grid_csv(text: &str, source: &str) -> Result<MadogramGrid> {
    let err = |line: u64, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };
    let mut meta = HashMap::new();
    let mut body = String::new();
    for (n, line) in text.lines().enumerate() {
        if let Some(rest) = line.strip_prefix('#') {
            let (k, v) = rest
                .split_once(':')
                .ok_or_else(|| err(n as u64 + 1, format!("bad metadata line {line:?}")))?;
            meta.insert(k.trim().to_string(), v.trim().to_string());
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    let field = |k: &str| meta.get(k).ok_or_else(|| err(1, format!("missing metadata {k:?}")));
    let kind = GridKind::from_str(field("kind")?)?;
    let region_x: Region = serde_json::from_str(field("region_x")?)?;
    let region_y: Region = serde_json::from_str(field("region_y")?)?;
    let seed = meta
        .get("seed")
        .map(|s| s.parse().map_err(|_| err(1, format!("bad seed {s:?}"))))
        .transpose()?;
    let t = meta
        .get("T")
        .map(|s| s.parse().map_err(|_| err(1, format!("bad T {s:?}"))))
        .transpose()?;

    let mut cells = Vec::new();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64> {
            record
                .get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err(line, format!("bad number in column {i}")))
        };
        cells.push((num(0)?, num(1)?, num(2)?));
    }
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    for &(a, b, _) in &cells {
        if !alphas.contains(&a) {
            alphas.push(a);
        }
        if !betas.contains(&b) {
            betas.push(b);
        }
    }
    if cells.len() != alphas.len() * betas.len() {
        return Err(err(0, "cells do not form a complete alpha x beta grid".into()));
    }
    let nb = betas.len();
    let mut values = vec![vec![0.0; nb]; alphas.len()];
    for (n, &(a, b, v)) in cells.iter().enumerate() {
        if alphas[n / nb] != a || betas[n % nb] != b {
            return Err(err(0, "cells are not in alpha-major order".into()));
        }
        values[n / nb][n % nb] = v;
    }
    Ok(MadogramGrid {
        alphas,
        betas,
        values,
        kind,
        region_x,
        region_y,
        seed,
        t,
    })
}

/// JSON, or CSV rows of `lambda,alpha,beta,value`.
pub fn export_slice(slice: &LambdaSlice, path: impl AsRef<Path>, format: FileFormat) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    match format {
        FileFormat::Json => serde_json::to_writer_pretty(&mut out, slice)?,
        FileFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["lambda", "alpha", "beta", "value"])?;
            for i in 0..slice.lambdas.len() {
                w.write_record([
                    slice.lambdas[i].to_string(),
                    slice.alphas[i].to_string(),
                    slice.betas[i].to_string(),
                    slice.values[i].to_string(),
                ])?;
            }
            w.flush().map_err(|e| Error::io(path, e))?;
        }
    }
    finish(out, path)
}

/// Header holds the locations as `(i,j)`, one row per replication.
pub fn write_panel_csv<W: Write>(panel: &Panel, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(panel.locations().iter().map(ToString::to_string))?;
    for row in panel.rows() {
        w.write_record(row.iter().map(ToString::to_string))?;
    }
    w.flush().map_err(|e| Error::io("<panel csv>", e))?;
    Ok(())
}

pub fn export_panel(panel: &Panel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    write_panel_csv(panel, &mut out)?;
    finish(out, path)
}

pub fn import_panel(path: impl AsRef<Path>, margin: Margin) -> Result<Panel> {
    let path = path.as_ref();
    let source = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let locations = reader
        .headers()?
        .iter()
        .map(Location::from_str)
        .collect::<Result<Vec<_>>>()?;
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        for field in record.iter() {
            values.push(field.parse::<f64>().map_err(|_| Error::Parse {
                path: source.clone(),
                line,
                message: format!("invalid number {field:?}"),
            })?);
        }
    }
    Panel::from_flat(locations, values, margin)
}
