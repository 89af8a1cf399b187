//! File outputs: VTK, CSV, PPM, the analysis table and binary state files.
//!
//! Every text output carries a reproducibility header with the tool version
//! and the normalized config, so a run can be repeated from any of its files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use treedg::dg::StateArray;
use treedg::mesh::TreeMesh;
use treedg::semi::{AnalysisReport, Semidiscretization};

use crate::error::{CliError, CliResult};

pub const VERSION: &str = concat!("treedg ", env!("CARGO_PKG_VERSION"));

const CONFIG_MARKER: &str = "config:";

/// `# `-prefixed header lines holding the version, time and config.
pub fn comment_header(config_text: &str, t: f64) -> String {
    let mut out = format!("# {VERSION}\n# t = {t:e}\n# {CONFIG_MARKER}\n");
    for line in config_text.lines() {
        let _ = writeln!(out, "#   {line}");
    }
    out
}

/// Recovers the config embedded by `comment_header`.
pub fn extract_config(text: &str) -> Option<String> {
    let mut lines = text.lines().skip_while(|l| l.trim() != format!("# {CONFIG_MARKER}"));
    lines.next()?;
    let mut config = String::new();
    for line in lines {
        match line.strip_prefix("#   ") {
            Some(rest) => {
                config.push_str(rest);
                config.push('\n');
            }
            None if line == "#  " || line == "#" => config.push('\n'),
            None => break,
        }
    }
    Some(config)
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Names and per-node values of all conserved and (distinct) primitive variables.
pub fn node_fields(semi: &Semidiscretization, u: &StateArray) -> (Vec<String>, Vec<Vec<f64>>) {
    let eq = semi.equations();
    let nvars = eq.nvars();
    let mut names: Vec<String> = eq.conserved_names().iter().map(|s| s.to_string()).collect();
    let extra: Vec<usize> = (0..nvars)
        .filter(|&v| !names.iter().any(|n| n == eq.primitive_names()[v]))
        .collect();
    names.extend(extra.iter().map(|&v| eq.primitive_names()[v].to_string()));
    let mut values = vec![Vec::with_capacity(semi.n_dofs()); names.len()];
    for e in 0..u.n_elements() {
        for node in 0..u.nodes_per_element() {
            let s = u.node(e, node);
            for v in 0..nvars {
                values[v].push(s[v]);
            }
            let prim = eq.cons2prim(&s).unwrap_or([f64::NAN; 4]);
            for (k, &v) in extra.iter().enumerate() {
                values[nvars + k].push(prim[v]);
            }
        }
    }
    (names, values)
}

/// Legacy ASCII VTK unstructured grid: one point per node, sub-cell lines
/// (1D) or quads (2D) between neighbouring nodes.
pub fn write_vtk(path: &Path, semi: &Semidiscretization, u: &StateArray, t: f64, config_text: &str) -> CliResult<()> {
    let ndims = semi.ndims();
    let n = semi.solver().basis.n_nodes();
    let nn = semi.nodes_per_element();
    let n_points = semi.n_dofs();
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(out, "{VERSION} t={t:e}");
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let bytes = config_text.as_bytes();
    let _ = writeln!(out, "FIELD FieldData 2\nTIME 1 1 double\n{t:e}\nCONFIG 1 {} unsigned_char", bytes.len());
    for chunk in bytes.chunks(32) {
        let line: Vec<String> = chunk.iter().map(|b| b.to_string()).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    let _ = writeln!(out, "POINTS {n_points} double");
    for e in 0..semi.n_elements() {
        for x in semi.node_coordinates(e) {
            let _ = writeln!(out, "{:e} {:e} 0", x[0], if ndims == 2 { x[1] } else { 0.0 });
        }
    }
    let mut cells: Vec<Vec<usize>> = Vec::new();
    for e in 0..semi.n_elements() {
        let base = e * nn;
        if ndims == 1 {
            cells.extend((0..n - 1).map(|i| vec![base + i, base + i + 1]));
        } else {
            for j in 0..n - 1 {
                for i in 0..n - 1 {
                    let p = base + j * n + i;
                    cells.push(vec![p, p + 1, p + n + 1, p + n]);
                }
            }
        }
    }
    let size: usize = cells.iter().map(|c| c.len() + 1).sum();
    let _ = writeln!(out, "CELLS {} {size}", cells.len());
    for c in &cells {
        let ids: Vec<String> = c.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "{} {}", c.len(), ids.join(" "));
    }
    let _ = writeln!(out, "CELL_TYPES {}", cells.len());
    let cell_type = if ndims == 1 { "3" } else { "9" };
    for _ in &cells {
        let _ = writeln!(out, "{cell_type}");
    }
    let (names, values) = node_fields(semi, u);
    let _ = writeln!(out, "POINT_DATA {n_points}");
    for (name, vals) in names.iter().zip(&values) {
        let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in vals {
            let _ = writeln!(out, "{v:e}");
        }
    }
    write_file(path, out.as_bytes())
}

/// Reads the config embedded in a VTK file by `write_vtk`.
pub fn extract_vtk_config(text: &str) -> Option<String> {
    let mut lines = text.lines().skip_while(|l| !l.starts_with("CONFIG 1 "));
    let len: usize = lines.next()?.split_whitespace().nth(2)?.parse().ok()?;
    let mut bytes = Vec::with_capacity(len);
    for line in lines {
        if bytes.len() >= len {
            break;
        }
        for b in line.split_whitespace() {
            bytes.push(b.parse::<u8>().ok()?);
        }
    }
    String::from_utf8(bytes).ok()
}

/// One row per node: coordinates followed by all variables.
pub fn write_csv(path: &Path, semi: &Semidiscretization, u: &StateArray, t: f64, config_text: &str) -> CliResult<()> {
    let ndims = semi.ndims();
    let (names, values) = node_fields(semi, u);
    let mut out = comment_header(config_text, t);
    let mut header: Vec<String> = ["x", "y"][..ndims].iter().map(|s| s.to_string()).collect();
    header.extend(names);
    out.push_str(&header.join(","));
    out.push('\n');
    let mut k = 0;
    for e in 0..semi.n_elements() {
        for x in semi.node_coordinates(e) {
            let mut row: Vec<String> = x[..ndims].iter().map(|c| format!("{c:e}")).collect();
            row.extend(values.iter().map(|v| format!("{:e}", v[k])));
            out.push_str(&row.join(","));
            out.push('\n');
            k += 1;
        }
    }
    write_file(path, out.as_bytes())
}

/// Blue-white-red colour map on `[0, 1]`.
fn colour(s: f64) -> [u8; 3] {
    const LOW: [f64; 3] = [59.0, 76.0, 192.0];
    const MID: [f64; 3] = [221.0, 221.0, 221.0];
    const HIGH: [f64; 3] = [180.0, 4.0, 38.0];
    let s = s.clamp(0.0, 1.0);
    let (a, b, f) = if s < 0.5 { (LOW, MID, 2.0 * s) } else { (MID, HIGH, 2.0 * s - 1.0) };
    [0, 1, 2].map(|c| (a[c] + f * (b[c] - a[c])).round() as u8)
}

/// Samples variable `field` (index into `node_fields`) on a uniform raster,
/// rows from top to bottom. 1D solutions give a single row.
pub fn rasterize(semi: &Semidiscretization, u: &StateArray, field: usize, resolution: usize) -> CliResult<(usize, usize, Vec<f64>)> {
    let (_, values) = node_fields(semi, u);
    let values = &values[field];
    let mesh = semi.mesh();
    let ndims = semi.ndims();
    let basis = &semi.solver().basis;
    let n = basis.n_nodes();
    let nn = semi.nodes_per_element();
    let (lo, edge) = (mesh.coords_min(), mesh.domain_edge());
    let height = if ndims == 1 { 1 } else { resolution };
    let mut pixels = Vec::with_capacity(resolution * height);
    for row in 0..height {
        for col in 0..resolution {
            let mut point = [lo[0] + (col as f64 + 0.5) * edge / resolution as f64, 0.0];
            if ndims == 2 {
                point[1] = lo[1] + edge - (row as f64 + 0.5) * edge / resolution as f64;
            }
            let cell = mesh
                .find_leaf(&point[..ndims])
                .ok_or_else(|| CliError::Input(format!("raster point {point:?} outside the mesh")))?;
            let e = mesh.element_of(cell).expect("find_leaf returns leaves");
            let g = semi.element_geometry(e);
            let xi: Vec<f64> = (0..ndims).map(|a| (2.0 * (point[a] - g.center[a]) / g.edge).clamp(-1.0, 1.0)).collect();
            let lx = basis.interpolation_to(&xi[..1]);
            let ly = if ndims == 2 { Some(basis.interpolation_to(&xi[1..2])) } else { None };
            let data = &values[e * nn..(e + 1) * nn];
            let mut v = 0.0;
            for j in 0..if ndims == 2 { n } else { 1 } {
                let wy = ly.as_ref().map_or(1.0, |m| m[(0, j)]);
                for i in 0..n {
                    v += wy * lx[(0, i)] * data[j * n + i];
                }
            }
            pixels.push(v);
        }
    }
    Ok((resolution, height, pixels))
}

/// Binary P6 heatmap plus a `<path>.txt` sidecar with the value range.
pub fn write_ppm(
    path: &Path,
    semi: &Semidiscretization,
    u: &StateArray,
    t: f64,
    variable: &str,
    resolution: usize,
    config_text: &str,
) -> CliResult<PathBuf> {
    let (names, _) = node_fields(semi, u);
    let variable = if variable.is_empty() { names[0].as_str() } else { variable };
    let field = names.iter().position(|n| n == variable).ok_or_else(|| {
        CliError::Config(format!("output.ppm_variable: unknown variable '{variable}', expected one of: {}", names.join(", ")))
    })?;
    let (width, height, pixels) = rasterize(semi, u, field, resolution)?;
    let min = pixels.iter().copied().fold(f64::INFINITY, f64::min);
    let max = pixels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut bytes = format!("P6\n# variable = {variable}\n# min = {min:e}\n# max = {max:e}\n").into_bytes();
    bytes.extend_from_slice(comment_header(config_text, t).as_bytes());
    bytes.extend_from_slice(format!("{width} {height}\n255\n").as_bytes());
    // Ranges at roundoff level count as a constant field.
    let flat = max - min <= 1e-12 * max.abs().max(min.abs()).max(1e-300);
    for v in &pixels {
        let s = if flat { 0.5 } else { (v - min) / (max - min) };
        bytes.extend_from_slice(&colour(s));
    }
    write_file(path, &bytes)?;
    let sidecar = PathBuf::from(format!("{}.txt", path.display()));
    let text = format!(
        "variable = {variable}\nmin = {min:e}\nmax = {max:e}\nwidth = {width}\nheight = {height}\n{}",
        comment_header(config_text, t)
    );
    write_file(&sidecar, text.as_bytes())?;
    Ok(sidecar)
}

/// Writes the requested formats as `<dir>/<stem>.<ext>` and returns the paths.
pub fn export_all(
    dir: &Path,
    stem: &str,
    formats: &[String],
    semi: &Semidiscretization,
    u: &StateArray,
    t: f64,
    ppm_variable: &str,
    ppm_resolution: usize,
    config_text: &str,
) -> CliResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    for format in formats {
        let path = dir.join(format!("{stem}.{format}"));
        match format.as_str() {
            "vtk" => write_vtk(&path, semi, u, t, config_text)?,
            "csv" => write_csv(&path, semi, u, t, config_text)?,
            "ppm" => {
                let sidecar = write_ppm(&path, semi, u, t, ppm_variable, ppm_resolution, config_text)?;
                written.push(sidecar);
            }
            other => return Err(CliError::Config(format!("unknown output format '{other}'"))),
        }
        written.push(path);
    }
    Ok(written)
}

/// Column names of the analysis table.
pub fn analysis_columns(semi: &Semidiscretization) -> Vec<String> {
    let names = semi.equations().conserved_names();
    let mut cols: Vec<String> = ["t", "dt", "step"].iter().map(|s| s.to_string()).collect();
    cols.extend(names.iter().map(|n| format!("l2_{n}")));
    cols.extend(names.iter().map(|n| format!("linf_{n}")));
    cols.extend(names.iter().map(|n| format!("total_{n}")));
    cols.push("entropy".into());
    cols.push("kinetic_energy".into());
    cols
}

/// One analysis table row; error columns stay empty without a reference solution.
pub fn analysis_row(report: &AnalysisReport, dt: f64, step: usize, nvars: usize) -> String {
    let mut row = vec![format!("{:e}", report.t), format!("{dt:e}"), step.to_string()];
    match &report.errors {
        Some(err) => {
            row.extend(err.l2.iter().map(|v| format!("{v:e}")));
            row.extend(err.linf.iter().map(|v| format!("{v:e}")));
        }
        None => row.extend(std::iter::repeat(String::new()).take(2 * nvars)),
    }
    row.extend(report.totals.iter().map(|v| format!("{v:e}")));
    row.push(format!("{:e}", report.entropy));
    row.push(format!("{:e}", report.kinetic_energy));
    row.join(",")
}

pub fn write_analysis(path: &Path, columns: &[String], rows: &[String], config_text: &str, t: f64) -> CliResult<()> {
    let mut out = comment_header(config_text, t);
    out.push_str(&columns.join(","));
    out.push('\n');
    for r in rows {
        out.push_str(r);
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

const STATE_MAGIC: &[u8; 4] = b"TDGS";
const STATE_VERSION: u32 = 1;

/// A saved solution: config text, time, mesh and nodal data.
///
/// Binary layout (little-endian): `b"TDGS"`, `u32` version, `u64` config
/// length + UTF-8 config, `f64` t, `u64` step, `u64` mesh length + mesh
/// snapshot, `u64` nvars, `u64` nodes per element, `u64` elements, then the
/// `f64` state values.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFile {
    pub config_text: String,
    pub t: f64,
    pub step: usize,
    pub mesh: TreeMesh,
    pub u: StateArray,
}

fn invalid_state(what: &str) -> CliError {
    CliError::Input(format!("invalid state file: {what}"))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> CliResult<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or_else(|| invalid_state("truncated"))?;
        let slice = self.bytes.get(self.pos..end).ok_or_else(|| invalid_state("truncated"))?;
        self.pos = end;
        Ok(slice)
    }

    fn array<const N: usize>(&mut self) -> CliResult<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn usize(&mut self) -> CliResult<usize> {
        usize::try_from(u64::from_le_bytes(self.array()?)).map_err(|_| invalid_state("size out of range"))
    }
}

impl StateFile {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(STATE_MAGIC);
        out.extend_from_slice(&STATE_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.config_text.len() as u64).to_le_bytes());
        out.extend_from_slice(self.config_text.as_bytes());
        out.extend_from_slice(&self.t.to_le_bytes());
        out.extend_from_slice(&(self.step as u64).to_le_bytes());
        let mesh = self.mesh.to_snapshot();
        out.extend_from_slice(&(mesh.len() as u64).to_le_bytes());
        out.extend_from_slice(&mesh);
        for n in [self.u.nvars(), self.u.nodes_per_element(), self.u.n_elements()] {
            out.extend_from_slice(&(n as u64).to_le_bytes());
        }
        for v in self.u.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> CliResult<Self> {
        let mut r = Cursor { bytes, pos: 0 };
        if r.take(4)? != STATE_MAGIC {
            return Err(invalid_state("bad magic"));
        }
        let version = u32::from_le_bytes(r.array()?);
        if version != STATE_VERSION {
            return Err(invalid_state(&format!("unsupported version {version}")));
        }
        let config_len = r.usize()?;
        let config_text =
            String::from_utf8(r.take(config_len)?.to_vec()).map_err(|_| invalid_state("config is not UTF-8"))?;
        let t = f64::from_le_bytes(r.array()?);
        let step = r.usize()?;
        let mesh_len = r.usize()?;
        let (mesh, used) = TreeMesh::from_snapshot(r.take(mesh_len)?)?;
        if used != mesh_len {
            return Err(invalid_state("mesh snapshot length mismatch"));
        }
        let (nvars, nodes, n_elements) = (r.usize()?, r.usize()?, r.usize()?);
        let len = nvars
            .checked_mul(nodes)
            .and_then(|x| x.checked_mul(n_elements))
            .and_then(|x| x.checked_mul(8))
            .ok_or_else(|| invalid_state("state dimensions overflow"))?;
        let data: Vec<f64> = r
            .take(len)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunks of 8")))
            .collect();
        if r.pos != bytes.len() {
            return Err(invalid_state("trailing bytes"));
        }
        let u = StateArray::from_vec(nvars, nodes, n_elements, data)?;
        Ok(Self {
            config_text,
            t,
            step,
            mesh,
            u,
        })
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_file(path, &self.to_bytes())
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
