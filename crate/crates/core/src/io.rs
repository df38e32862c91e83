//! On-disk artifact formats.
//!
//! Every artifact carries the configuration hash that produced it. Text
//! files start with a `# ... config_hash=<hex>` comment line. Binary dumps end
//! with a trailer line `config_hash=<hex>\n` after the numeric payload.
//!
//! Formats:
//!
//! * Eigensystem (text): header line
//!   `# dwell-eigensystem n_states=N n_points=M half_width=L config_hash=H`
//!   (optionally followed by further `key=value` tags),
//!   then `N` lines `index energy parity` (parity `+` or `-`), then `N` lines
//!   holding the rows of the position matrix separated by spaces.
//! * Eigenfunctions (binary): `u64 n_points`, `u64 n_states`, then the
//!   `n_points x n_states` block column by column as `f64`, then the trailer.
//! * Density matrix (binary): `u64 dim`, then the entries in row-major order
//!   as interleaved `f64` real and imaginary parts, then the trailer.
//! * CSV: `# config_hash=H ...` comment, one header row, then data rows.
//! * PGM: binary `P5` greyscale, one pixel column per `x` node and one row per
//!   `p` node with `+p_max` on top. Grey level `round(127.5 (1 + W / W_s))`
//!   clamped to `[0, 255]` with the fixed scale `W_s = 1/π`, so `W = 0` maps
//!   to 128, positive values are lighter and negative values darker.
//!
//! All integers and floats are little-endian. Floats in text are written in
//! shortest round-trip form, so identical inputs give identical bytes.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::bath::CoefficientSet;
use crate::error::IoError;
use crate::evolve::DensityMatrix;
use crate::num::{cplx, lit, to_f64, Real};
use crate::observe::{ObservableRecord, WignerGrid};
use crate::spectral::{EigenSystem, Parity, SpatialGrid};

/// Columns of the observables CSV.
pub const OBSERVABLE_COLUMNS: [&str; 9] = [
    "t",
    "p_left",
    "p_right",
    "p_barrier",
    "purity",
    "mean_energy",
    "energy_dispersion",
    "negativity_volume",
    "fringe_visibility",
];

/// Columns of the bath-coefficient CSV.
pub const COEFFICIENT_COLUMNS: [&str; 6] = ["delta", "t", "D", "f", "gamma", "omega_shift_sq"];

/// Fixed Wigner value mapped to full white in PGM output.
pub const PGM_SCALE: f64 = std::f64::consts::FRAC_1_PI;

fn file_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::File { path: path.display().to_string(), source }
}

fn format_err(path: &Path, message: impl Into<String>) -> IoError {
    IoError::Format { path: path.display().to_string(), message: message.into() }
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    File::create(path).map(BufWriter::new).map_err(|e| file_err(path, e))
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn parse_num(path: &Path, s: &str) -> Result<f64, IoError> {
    s.parse().map_err(|_| format_err(path, format!("`{s}` is not a number")))
}

fn trailer(hash: &str) -> String {
    format!("config_hash={hash}\n")
}

/// Writes a CSV table with a provenance comment line.
pub fn write_csv<I>(path: &Path, hash: &str, comment: &str, columns: &[&str], rows: I) -> Result<(), IoError>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut w = create(path)?;
    let mut body = String::new();
    body.push_str(&format!("# config_hash={hash}"));
    if !comment.is_empty() {
        body.push(' ');
        body.push_str(comment);
    }
    body.push('\n');
    body.push_str(&columns.join(","));
    body.push('\n');
    for row in rows {
        body.push_str(&row.iter().map(|&v| if v.is_nan() { String::new() } else { num(v) }).collect::<Vec<_>>().join(","));
        body.push('\n');
    }
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(|e| file_err(path, e))
}

/// Parsed CSV table; empty cells read as `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub config_hash: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    /// Values of one column, if present.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

pub fn read_csv(path: &Path) -> Result<CsvTable, IoError> {
    let f = File::open(path).map_err(|e| file_err(path, e))?;
    let mut lines = BufReader::new(f).lines();
    let mut next = || lines.next().transpose().map_err(|e| file_err(path, e));
    let first = next()?.ok_or_else(|| format_err(path, "empty file"))?;
    let config_hash = hash_from_comment(&first).ok_or_else(|| format_err(path, "missing config_hash comment"))?;
    let header = next()?.ok_or_else(|| format_err(path, "missing header row"))?;
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    while let Some(line) = next()? {
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|c| if c.is_empty() { Ok(f64::NAN) } else { parse_num(path, c) })
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != columns.len() {
            return Err(format_err(path, format!("row has {} cells, header has {}", row.len(), columns.len())));
        }
        rows.push(row);
    }
    Ok(CsvTable { config_hash, columns, rows })
}

fn hash_from_comment(line: &str) -> Option<String> {
    line.strip_prefix('#')?
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix("config_hash=").map(str::to_string))
}

/// Configuration hash recorded in any artifact written by this module.
pub fn read_config_hash(path: &Path) -> Result<String, IoError> {
    let bytes = std::fs::read(path).map_err(|e| file_err(path, e))?;
    if bytes.first() == Some(&b'#') {
        let end = bytes.iter().position(|&b| b == b'\n').unwrap_or(bytes.len());
        let line = String::from_utf8_lossy(&bytes[..end]);
        return hash_from_comment(&line).ok_or_else(|| format_err(path, "missing config_hash comment"));
    }
    if bytes.starts_with(b"P5") {
        let text = String::from_utf8_lossy(&bytes);
        return text
            .lines()
            .take_while(|l| l.starts_with('#') || l.starts_with("P5"))
            .find_map(hash_from_comment)
            .ok_or_else(|| format_err(path, "missing config_hash comment"));
    }
    let pos = bytes
        .windows(12)
        .rposition(|w| w == b"config_hash=")
        .ok_or_else(|| format_err(path, "missing config_hash trailer"))?;
    let tail = String::from_utf8_lossy(&bytes[pos + 12..]);
    Ok(tail.trim_end().to_string())
}

/// Writes the observables of one run.
pub fn write_observables<T: Real>(path: &Path, hash: &str, records: &[ObservableRecord<T>]) -> Result<(), IoError> {
    let rows = records.iter().map(|r| {
        vec![
            to_f64(r.time),
            to_f64(r.p_left),
            to_f64(r.p_right),
            to_f64(r.p_barrier),
            to_f64(r.purity),
            to_f64(r.mean_energy),
            to_f64(r.energy_dispersion),
            to_f64(r.negativity_volume),
            r.fringe_visibility.map_or(f64::NAN, to_f64),
        ]
    });
    write_csv(path, hash, "", &OBSERVABLE_COLUMNS, rows)
}

/// Writes tabulated bath coefficients.
pub fn write_coefficients<T: Real>(path: &Path, hash: &str, sets: &[CoefficientSet<T>]) -> Result<(), IoError> {
    let rows = sets.iter().map(|c| {
        vec![
            to_f64(c.delta),
            to_f64(c.time),
            to_f64(c.d_normal),
            to_f64(c.f_anomalous),
            to_f64(c.gamma_dissipation),
            to_f64(c.omega_shift_sq),
        ]
    });
    write_csv(path, hash, "", &COEFFICIENT_COLUMNS, rows)
}

/// Writes a Wigner grid as a dense CSV: the first row lists the momenta, every
/// following row starts with its position.
pub fn write_wigner_csv<T: Real>(path: &Path, hash: &str, time: T, w: &WignerGrid<T>) -> Result<(), IoError> {
    let mut columns = vec!["x\\p".to_string()];
    columns.extend(w.p_nodes.iter().map(|&p| num(to_f64(p))));
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let rows = w.x_nodes.iter().enumerate().map(|(i, &x)| {
        let mut row = vec![to_f64(x)];
        row.extend((0..w.p_nodes.len()).map(|j| to_f64(w.values[(i, j)])));
        row
    });
    write_csv(path, hash, &format!("t={}", num(to_f64(time))), &cols, rows)
}

/// Grey level for a Wigner value on the fixed symmetric scale.
pub fn pgm_level(value: f64) -> u8 {
    let g = (127.5 * (1.0 + value / PGM_SCALE)).round();
    g.clamp(0.0, 255.0) as u8
}

/// Writes a Wigner grid as an 8-bit PGM heat map.
pub fn write_wigner_pgm<T: Real>(path: &Path, hash: &str, time: T, w: &WignerGrid<T>) -> Result<(), IoError> {
    let (nx, np) = (w.x_nodes.len(), w.p_nodes.len());
    let mut out = Vec::with_capacity(nx * np + 512);
    let header = format!(
        "P5\n# config_hash={hash} t={}\n# grey = round(127.5*(1 + W*pi)) clamped to 0..255; W = 0 -> 128, W > 0 lighter, W < 0 darker\n# columns: x from {} to {}; rows: p from {} (top) to {}\n{nx} {np}\n255\n",
        num(to_f64(time)),
        num(w.x_nodes.first().map_or(0.0, |&v| to_f64(v))),
        num(w.x_nodes.last().map_or(0.0, |&v| to_f64(v))),
        num(w.p_nodes.last().map_or(0.0, |&v| to_f64(v))),
        num(w.p_nodes.first().map_or(0.0, |&v| to_f64(v))),
    );
    out.extend_from_slice(header.as_bytes());
    for j in (0..np).rev() {
        for i in 0..nx {
            out.push(pgm_level(to_f64(w.values[(i, j)])));
        }
    }
    std::fs::write(path, out).map_err(|e| file_err(path, e))
}

/// Writes `key = value` metadata lines.
pub fn write_metadata(path: &Path, hash: &str, entries: &[(String, String)]) -> Result<(), IoError> {
    let mut w = create(path)?;
    let mut body = format!("# dwell metadata config_hash={hash}\n");
    for (k, v) in entries {
        body.push_str(&format!("{k} = {v}\n"));
    }
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(|e| file_err(path, e))
}

pub fn read_metadata(path: &Path) -> Result<Vec<(String, String)>, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| file_err(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split_once(" = ")
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| format_err(path, format!("expected `key = value`, found `{l}`")))
        })
        .collect()
}

/// Writes a density matrix in the binary dump layout.
pub fn write_density<T: Real>(path: &Path, hash: &str, rho: &DensityMatrix<T>) -> Result<(), IoError> {
    let n = rho.dim();
    let m = rho.matrix();
    let mut out = Vec::with_capacity(8 + 16 * n * n + 32);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    for i in 0..n {
        for j in 0..n {
            out.extend_from_slice(&to_f64(m[(i, j)].re).to_le_bytes());
            out.extend_from_slice(&to_f64(m[(i, j)].im).to_le_bytes());
        }
    }
    out.extend_from_slice(trailer(hash).as_bytes());
    std::fs::write(path, out).map_err(|e| file_err(path, e))
}

fn read_u64(path: &Path, bytes: &[u8], at: usize) -> Result<u64, IoError> {
    let chunk = bytes.get(at..at + 8).ok_or_else(|| format_err(path, "truncated header"))?;
    Ok(u64::from_le_bytes(chunk.try_into().expect("eight bytes")))
}

fn read_f64s(path: &Path, bytes: &[u8], at: usize, count: usize) -> Result<Vec<f64>, IoError> {
    let end = at + 8 * count;
    let body = bytes.get(at..end).ok_or_else(|| format_err(path, "truncated payload"))?;
    let rest = &bytes[end..];
    if !rest.is_empty() && !rest.starts_with(b"config_hash=") {
        return Err(format_err(path, "unexpected bytes after payload"));
    }
    Ok(body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes"))).collect())
}

pub fn read_density<T: Real>(path: &Path) -> Result<DensityMatrix<T>, IoError> {
    let mut bytes = Vec::new();
    File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| file_err(path, e))?;
    let n = usize::try_from(read_u64(path, &bytes, 0)?).map_err(|_| format_err(path, "dimension overflow"))?;
    if n == 0 || n > 1 << 14 {
        return Err(format_err(path, format!("implausible dimension {n}")));
    }
    let v = read_f64s(path, &bytes, 8, 2 * n * n)?;
    let m = DMatrix::from_fn(n, n, |i, j| {
        let k = 2 * (i * n + j);
        cplx(lit(v[k]), lit(v[k + 1]))
    });
    DensityMatrix::from_matrix(m).map_err(|e| format_err(path, e.to_string()))
}

/// Writes the eigenfunction block in the binary layout.
pub fn write_eigenfunctions<T: Real>(path: &Path, hash: &str, eig: &EigenSystem<T>) -> Result<(), IoError> {
    let phi = eig.eigenfunctions();
    let mut out = Vec::with_capacity(16 + 8 * phi.len() + 32);
    out.extend_from_slice(&(phi.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(phi.ncols() as u64).to_le_bytes());
    for v in phi.iter() {
        out.extend_from_slice(&to_f64(*v).to_le_bytes());
    }
    out.extend_from_slice(trailer(hash).as_bytes());
    std::fs::write(path, out).map_err(|e| file_err(path, e))
}

pub fn read_eigenfunctions<T: Real>(path: &Path) -> Result<DMatrix<T>, IoError> {
    let bytes = std::fs::read(path).map_err(|e| file_err(path, e))?;
    let rows = read_u64(path, &bytes, 0)? as usize;
    let cols = read_u64(path, &bytes, 8)? as usize;
    let count = rows.checked_mul(cols).filter(|&c| c <= bytes.len()).ok_or_else(|| format_err(path, "implausible shape"))?;
    let v = read_f64s(path, &bytes, 16, count)?;
    Ok(DMatrix::from_iterator(rows, cols, v.into_iter().map(lit)))
}

/// Writes energies, parities and the position matrix as text.
///
/// `tags` are extra `key=value` tokens appended to the header line.
pub fn write_eigensystem<T: Real>(path: &Path, hash: &str, tags: &[(&str, &str)], eig: &EigenSystem<T>) -> Result<(), IoError> {
    let n = eig.n_states();
    let grid = eig.grid();
    let mut body = format!(
        "# dwell-eigensystem n_states={n} n_points={} half_width={} config_hash={hash}",
        grid.n_points(),
        num(to_f64(grid.half_width()))
    );
    for (k, v) in tags {
        body.push_str(&format!(" {k}={v}"));
    }
    body.push('\n');
    for (k, (&e, p)) in eig.energies().iter().zip(eig.parities()).enumerate() {
        body.push_str(&format!("{k} {} {}\n", num(to_f64(e)), p.symbol()));
    }
    let x = eig.x_matrix();
    for i in 0..n {
        body.push_str(&(0..n).map(|j| num(to_f64(x[(i, j)]))).collect::<Vec<_>>().join(" "));
        body.push('\n');
    }
    let mut w = create(path)?;
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(|e| file_err(path, e))
}

/// Cached spectrum read back from text.
#[derive(Debug, Clone)]
pub struct StoredEigensystem<T: Real> {
    pub config_hash: String,
    /// Every `key=value` token of the header line.
    pub tags: Vec<(String, String)>,
    pub grid: SpatialGrid<T>,
    pub energies: Vec<T>,
    pub parities: Vec<Parity>,
    pub x_matrix: DMatrix<T>,
}

impl<T: Real> StoredEigensystem<T> {
    pub fn tag(&self, key: &str) -> Option<&str> {
        self.tags.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Rebuilds the eigensystem, optionally with its eigenfunctions.
    pub fn into_eigensystem(self, eigenfunctions: Option<DMatrix<T>>) -> Result<EigenSystem<T>, crate::error::SpectralError> {
        let phi = eigenfunctions.unwrap_or_else(|| DMatrix::zeros(self.grid.n_points(), 0));
        EigenSystem::from_parts(self.grid, self.energies, phi, self.x_matrix, self.parities)
    }
}

pub fn read_eigensystem<T: Real>(path: &Path) -> Result<StoredEigensystem<T>, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| file_err(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| format_err(path, "empty file"))?;
    if !header.starts_with("# dwell-eigensystem") {
        return Err(format_err(path, "not an eigensystem file"));
    }
    let field = |name: &str| {
        header
            .split_whitespace()
            .find_map(|t| t.strip_prefix(name).and_then(|r| r.strip_prefix('=')))
            .ok_or_else(|| format_err(path, format!("header lacks `{name}`")))
    };
    let n: usize = field("n_states")?.parse().map_err(|_| format_err(path, "bad n_states"))?;
    let n_points: usize = field("n_points")?.parse().map_err(|_| format_err(path, "bad n_points"))?;
    let half_width = parse_num(path, field("half_width")?)?;
    let config_hash = field("config_hash")?.to_string();
    let tags = header
        .split_whitespace()
        .filter_map(|t| t.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
        .collect();
    let grid = SpatialGrid::new(lit(half_width), n_points).map_err(|e| format_err(path, e.to_string()))?;

    let mut energies = Vec::with_capacity(n);
    let mut parities = Vec::with_capacity(n);
    for k in 0..n {
        let line = lines.next().ok_or_else(|| format_err(path, "missing energy rows"))?;
        let cells: Vec<&str> = line.split_whitespace().collect();
        if cells.len() != 3 || cells[0] != k.to_string() {
            return Err(format_err(path, format!("malformed energy row `{line}`")));
        }
        energies.push(lit(parse_num(path, cells[1])?));
        let p = cells[2].chars().next().and_then(Parity::from_symbol);
        parities.push(p.ok_or_else(|| format_err(path, format!("bad parity `{}`", cells[2])))?);
    }
    let mut x = DMatrix::zeros(n, n);
    for i in 0..n {
        let line = lines.next().ok_or_else(|| format_err(path, "missing position-matrix rows"))?;
        let cells: Vec<&str> = line.split_whitespace().collect();
        if cells.len() != n {
            return Err(format_err(path, format!("position-matrix row {i} has {} entries", cells.len())));
        }
        for (j, c) in cells.iter().enumerate() {
            x[(i, j)] = lit(parse_num(path, c)?);
        }
    }
    Ok(StoredEigensystem { config_hash, tags, grid, energies, parities, x_matrix: x })
}
