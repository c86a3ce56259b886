//! File export: CSV tables, PGM heatmaps and the run manifest.
//!
//! All writers go through [`OutputDir`], which records a SHA-256 checksum of
//! every file it produces so that [`RunManifest`] can list them.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::continuation::{BifurcationDiagram, Branch};
use crate::equilibria::Equilibrium;
use crate::error::{Error, Result};
use crate::solver::{ConvergenceRow, DiagnosticsRow, Grid, State2};
use crate::turing::{DispersionResult, SpatialDim, TuringScan};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// An output directory that remembers what was written into it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(Self { root, files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    /// Write `contents` to `name` (relative, subdirectories allowed).
    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let bytes = contents.as_ref();
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileEntry { path: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let text = serde_json::to_string_pretty(value).map_err(|e| Error::Serialize(e.to_string()))?;
        self.write(name, text + "\n")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Description of one command invocation and everything it produced.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub wall_clock_seconds: f64,
    pub config: serde_json::Value,
    /// Configuration keys that were not given and took their default.
    pub defaulted: Vec<String>,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn new<C: Serialize>(
        command: &str,
        config: &C,
        seed: u64,
        defaulted: &[String],
        started: Instant,
        out: &OutputDir,
    ) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            wall_clock_seconds: started.elapsed().as_secs_f64(),
            config: serde_json::to_value(config).map_err(|e| Error::Serialize(e.to_string()))?,
            defaulted: defaulted.to_vec(),
            files: out.files().to_vec(),
        })
    }

    /// Written last, as `manifest.json`; it does not list itself.
    pub fn write(&self, out: &mut OutputDir) -> Result<PathBuf> {
        out.write_json("manifest.json", self)
    }
}

/// 1D: `x,R,T` rows. 2D: a `# n,L` header followed by row-major
/// `i,j,x,y,R,T` rows.
pub fn snapshot_csv(state: &State2, grid: &Grid) -> String {
    let mut s = String::new();
    match grid.dim {
        SpatialDim::One => {
            s.push_str("x,R,T\n");
            for i in 0..grid.n {
                let _ = writeln!(s, "{},{},{}", grid.center(i), state.r[i], state.t[i]);
            }
        }
        SpatialDim::Two => {
            let _ = writeln!(s, "# n={},L={}", grid.n, grid.length);
            s.push_str("i,j,x,y,R,T\n");
            for j in 0..grid.n {
                for i in 0..grid.n {
                    let c = j * grid.n + i;
                    let _ = writeln!(
                        s,
                        "{i},{j},{},{},{},{}",
                        grid.center(i),
                        grid.center(j),
                        state.r[c],
                        state.t[c]
                    );
                }
            }
        }
    }
    s
}

pub fn diagnostics_csv(rows: &[DiagnosticsRow]) -> String {
    let mut s = String::from("t,l1_R,min_R,max_R,std_R,l1_T,min_T,max_T\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.t, r.l1_r, r.min_r, r.max_r, r.std_r, r.l1_t, r.min_t, r.max_t
        );
    }
    s
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("epsilon,sup_error,l1_error\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{}", r.epsilon, r.sup_error, r.l1_error);
    }
    s
}

pub fn equilibria_csv(eqs: &[Equilibrium]) -> String {
    let mut s = String::from("kind,R,T,re_lambda1,im_lambda1,re_lambda2,im_lambda2,stable\n");
    for e in eqs {
        let [a, b] = e.eigenvalues;
        let _ = writeln!(
            s,
            "{:?},{},{},{},{},{},{},{}",
            e.kind, e.r_star, e.t_star, a.re, a.im, b.re, b.im, e.stable
        );
    }
    s
}

/// `kappa,lambda,multiplicity,re_growth,im_growth` with the leading growth
/// rate of each mode.
pub fn dispersion_csv(d: &DispersionResult) -> String {
    let mut s = String::from("kappa,lambda,multiplicity,re_growth,im_growth\n");
    for m in &d.modes {
        let z = m.growth_rates[0];
        let _ = writeln!(s, "{},{},{},{},{}", m.index, m.lambda, m.multiplicity, z.re, z.im);
    }
    s
}

/// `gamma,s,sigma_L,feasible`; infeasible cells have an empty `sigma_L`.
pub fn scan_csv(scan: &TuringScan) -> String {
    let mut s = String::from("gamma,s,sigma_L,feasible\n");
    for c in &scan.cells {
        match c.sigma_l {
            Some(v) => writeln!(s, "{},{},{v},true", c.gamma, c.s),
            None => writeln!(s, "{},{},,false", c.gamma, c.s),
        }
        .expect("writing to a String cannot fail");
    }
    s
}

/// Scaling metadata written next to every heatmap.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeatmapMeta {
    pub width: usize,
    pub height: usize,
    pub min: f64,
    pub max: f64,
    /// Grey level of missing values.
    pub missing: u8,
}

/// Binary 8-bit PGM of a row-major field scaled to its own min/max. `None`
/// entries map to black; finite values to `1..=255`. The first row of
/// `values` is drawn at the bottom.
pub fn pgm(values: &[Option<f64>], width: usize, height: usize) -> Result<(Vec<u8>, HeatmapMeta)> {
    if values.len() != width * height || width == 0 {
        return Err(Error::Usage(format!(
            "heatmap of {} values does not fit {width}x{height}",
            values.len()
        )));
    }
    let finite = values.iter().flatten().copied().filter(|v| v.is_finite());
    let (min, max) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let span = if max > min { max - min } else { 1.0 };
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    for row in (0..height).rev() {
        for v in &values[row * width..(row + 1) * width] {
            out.push(match v {
                Some(v) if v.is_finite() => 1 + ((v - min) / span * 254.0).round() as u8,
                _ => 0,
            });
        }
    }
    let (min, max) = if min <= max { (min, max) } else { (f64::NAN, f64::NAN) };
    Ok((out, HeatmapMeta { width, height, min, max, missing: 0 }))
}

/// Write `name.pgm` and `name.json` (scaling metadata).
pub fn write_heatmap(
    out: &mut OutputDir,
    name: &str,
    values: &[Option<f64>],
    width: usize,
    height: usize,
) -> Result<HeatmapMeta> {
    let (bytes, meta) = pgm(values, width, height)?;
    out.write(&format!("{name}.pgm"), bytes)?;
    out.write_json(&format!("{name}.json"), &meta)?;
    Ok(meta)
}

/// `σ_L` heatmap of a scan: `s` along the horizontal axis, `γ` vertical.
pub fn scan_heatmap_values(scan: &TuringScan) -> (Vec<Option<f64>>, usize, usize) {
    let (ng, ns) = (scan.gammas.len(), scan.ss.len());
    let values = (0..ng).flat_map(|gi| (0..ns).map(move |si| (gi, si))).map(|(gi, si)| scan.get(gi, si).sigma_l);
    (values.collect(), ns, ng)
}

/// `param,l1_R,n_unstable,is_special,special_type`. Special points are
/// interleaved after the regular point they follow.
pub fn branch_csv(branch: &Branch) -> String {
    let mut s = String::from("param,l1_R,n_unstable,is_special,special_type\n");
    for (i, p) in branch.points.iter().enumerate() {
        let _ = writeln!(s, "{},{},{},false,", p.param, p.l1_r, p.n_unstable);
        for sp in branch.special_points.iter().filter(|sp| sp.after == i) {
            let _ = writeln!(s, "{},{},{},true,{}", sp.param, sp.l1_r, p.n_unstable, sp.kind.label());
        }
    }
    s
}

/// One `branch_XX.csv` per branch and `branches.csv` indexing them, all
/// under `dir`.
pub fn write_diagram(out: &mut OutputDir, dir: &str, diagram: &BifurcationDiagram) -> Result<()> {
    let mut index = String::from("branch,file,parent_branch,parent_param,points,folds,branch_points,termination\n");
    for (i, (b, parent)) in diagram.branches.iter().zip(&diagram.parents).enumerate() {
        let file = format!("branch_{i:02}.csv");
        out.write(&format!("{dir}/{file}"), branch_csv(b))?;
        let (pb, pp) = match parent {
            Some((bi, si)) => (bi.to_string(), diagram.branches[*bi].special_points[*si].param.to_string()),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(
            index,
            "{i},{file},{pb},{pp},{},{},{},{:?}",
            b.points.len(),
            b.folds().count(),
            b.branch_points().count(),
            b.termination
        );
    }
    out.write(&format!("{dir}/branches.csv"), index)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_scales_to_own_range() {
        let v = [Some(1.0), Some(3.0), None, Some(2.0)];
        let (bytes, meta) = pgm(&v, 2, 2).unwrap();
        assert_eq!(meta.min, 1.0);
        assert_eq!(meta.max, 3.0);
        let header = b"P5\n2 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        // the second row is emitted first
        assert_eq!(&bytes[header.len()..], &[0, 128, 1, 255]);
        assert!(pgm(&v, 3, 2).is_err());
    }

    #[test]
    fn output_dir_checksums() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path().join("run")).unwrap();
        out.write("a/b.txt", "abc").unwrap();
        out.write("a/b.txt", "abc").unwrap();
        assert_eq!(out.files().len(), 1);
        assert_eq!(
            out.files()[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(fs::read_to_string(dir.path().join("run/a/b.txt")).unwrap(), "abc");
    }

    #[test]
    fn snapshot_layouts() {
        let g1 = Grid::one_d(3.0, 3).unwrap();
        let st = State2 { r: vec![1.0, 2.0, 3.0], t: vec![0.5, 0.25, 0.0], time: 0.0 };
        assert_eq!(snapshot_csv(&st, &g1), "x,R,T\n0.5,1,0.5\n1.5,2,0.25\n2.5,3,0\n");
        let g2 = Grid::two_d(3.0, 3).unwrap();
        let st = State2 { r: (0..9).map(f64::from).collect(), t: vec![0.0; 9], time: 0.0 };
        let text = snapshot_csv(&st, &g2);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# n=3,L=3");
        assert_eq!(lines.len(), 11);
        assert_eq!(lines[3], "1,0,1.5,0.5,1,0");
        assert_eq!(lines[5], "0,1,0.5,1.5,3,0");
    }
}
