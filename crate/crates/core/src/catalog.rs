//! Sampled distribution-valued maps x ↦ ω_x.
//!
//! A map is stored as its kernel Ω[j][n] = ⟨h_n, ω_{x_j}⟩ on a quadrature
//! grid, so that the analysis samples of f = Σ c_n h_n are (Ω c)_j = ⟨f, ω_{x_j}⟩.

use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::WeightExpr;
use crate::grid::QuadratureGrid;
use crate::schwartz::{fourier_phase, hermite_derivative_row, hermite_row, FourierDirection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    /// ζ_x with ⟨φ, ζ_x⟩ = φ̂(x).
    Fourier,
    /// δ_x.
    Dirac,
    /// δ'_x with ⟨φ, δ'_x⟩ = −φ'(x).
    DiracDerivative,
    /// g(x)·δ_x for a weight expression g.
    WeightedDirac,
    /// η(x)·δ_x for the smooth bump η supported on (a, b).
    BumpDirac,
    /// User-supplied kernel matrix.
    Custom,
}

impl MapKind {
    pub fn name(self) -> &'static str {
        match self {
            MapKind::Fourier => "fourier",
            MapKind::Dirac => "dirac",
            MapKind::DiracDerivative => "dirac_derivative",
            MapKind::WeightedDirac => "weighted_dirac",
            MapKind::BumpDirac => "bump_dirac",
            MapKind::Custom => "custom",
        }
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CustomKernel {
    /// CSV file, read and validated against the grid when sampled.
    Path(PathBuf),
    Matrix(Arc<DMatrix<Complex64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapSpec {
    pub kind: MapKind,
    pub weight: Option<WeightExpr>,
    pub bump_support: Option<(f64, f64)>,
    pub custom_kernel: Option<CustomKernel>,
}

impl MapSpec {
    fn bare(kind: MapKind) -> Self {
        Self {
            kind,
            weight: None,
            bump_support: None,
            custom_kernel: None,
        }
    }

    pub fn dirac() -> Self {
        Self::bare(MapKind::Dirac)
    }

    pub fn fourier() -> Self {
        Self::bare(MapKind::Fourier)
    }

    pub fn dirac_derivative() -> Self {
        Self::bare(MapKind::DiracDerivative)
    }

    pub fn weighted_dirac(weight: &str) -> Result<Self> {
        Ok(Self {
            weight: Some(WeightExpr::parse(weight)?),
            ..Self::bare(MapKind::WeightedDirac)
        })
    }

    pub fn bump_dirac(a: f64, b: f64) -> Result<Self> {
        let spec = Self {
            bump_support: Some((a, b)),
            ..Self::bare(MapKind::BumpDirac)
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn custom(kernel: CustomKernel) -> Self {
        Self {
            custom_kernel: Some(kernel),
            ..Self::bare(MapKind::Custom)
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            MapKind::WeightedDirac if self.weight.is_none() => Err(Error::InvalidConfig(
                "map.weight is required for weighted_dirac".into(),
            )),
            MapKind::BumpDirac => match self.bump_support {
                Some((a, b)) if a.is_finite() && b.is_finite() && a < b => Ok(()),
                Some((a, b)) => Err(Error::InvalidConfig(format!(
                    "map.bump_support must satisfy a < b, got ({a}, {b})"
                ))),
                None => Err(Error::InvalidConfig(
                    "map.bump_support is required for bump_dirac".into(),
                )),
            },
            MapKind::Custom if self.custom_kernel.is_none() => Err(Error::InvalidConfig(
                "map.custom_kernel is required for custom".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Whether the map can be resampled on arbitrary grids and truncations.
    pub fn is_resamplable(&self) -> bool {
        self.kind != MapKind::Custom
    }

    /// Short human-readable description, e.g. `weighted_dirac[2+sin(x)]`.
    pub fn label(&self) -> String {
        match (self.kind, &self.weight, self.bump_support) {
            (MapKind::WeightedDirac, Some(w), _) => format!("weighted_dirac[{w}]"),
            (MapKind::BumpDirac, _, Some((a, b))) => format!("bump_dirac[{a},{b}]"),
            (kind, _, _) => kind.name().to_string(),
        }
    }
}

/// Smooth bump on (a, b) with maximum 1 at the midpoint; zero outside.
pub fn bump_weight(x: f64, a: f64, b: f64) -> f64 {
    if x <= a || x >= b {
        return 0.0;
    }
    let t = (2.0 * x - a - b) / (b - a);
    let s = 1.0 - t * t;
    if s <= 0.0 {
        return 0.0;
    }
    (1.0 - 1.0 / s).exp()
}

/// The sampled map Ω[j][n] = ⟨h_n, ω_{x_j}⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    entries: DMatrix<Complex64>,
    grid: QuadratureGrid,
    source: Option<MapSpec>,
}

impl KernelMatrix {
    pub fn new(entries: DMatrix<Complex64>, grid: QuadratureGrid) -> Result<Self> {
        if entries.nrows() != grid.len() {
            return Err(Error::dim("kernel rows vs grid nodes", grid.len(), entries.nrows()));
        }
        if entries.ncols() == 0 {
            return Err(Error::InvalidConfig("kernel truncation must be positive".into()));
        }
        if entries.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Numeric("kernel has non-finite entries".into()));
        }
        Ok(Self {
            entries,
            grid,
            source: None,
        })
    }

    pub fn with_source(mut self, spec: MapSpec) -> Self {
        self.source = Some(spec);
        self
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn source(&self) -> Option<&MapSpec> {
        self.source.as_ref()
    }

    pub fn truncation(&self) -> usize {
        self.entries.ncols()
    }

    pub fn node_count(&self) -> usize {
        self.entries.nrows()
    }

    /// c·Ω on the same grid.
    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            entries: self.entries.map(|z| z * factor),
            grid: self.grid.clone(),
            source: None,
        }
    }

    /// W^{1/2}Ω: rows scaled by √w_j, so that Euclidean norms of its image
    /// are L²(X, μ) norms.
    pub fn weighted(&self) -> DMatrix<Complex64> {
        let mut m = self.entries.clone();
        for (j, w) in self.grid.weights().iter().enumerate() {
            let s = w.sqrt();
            m.row_mut(j).iter_mut().for_each(|z| *z *= s);
        }
        m
    }

    /// Kernel restricted to the first `truncation` Hermite indices.
    pub fn truncated(&self, truncation: usize) -> Result<Self> {
        if truncation == 0 || truncation > self.truncation() {
            return Err(Error::dim("kernel truncation", self.truncation(), truncation));
        }
        Ok(Self {
            entries: self.entries.columns(0, truncation).into_owned(),
            grid: self.grid.clone(),
            source: self.source.clone(),
        })
    }

    /// Writes the kernel in the custom-kernel CSV schema.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<String> = (0..self.truncation())
            .flat_map(|n| [format!("re{n}"), format!("im{n}")])
            .collect();
        w.write_record(&header)?;
        for row in self.entries.row_iter() {
            let rec: Vec<String> = row
                .iter()
                .flat_map(|z| [format!("{:?}", z.re), format!("{:?}", z.im)])
                .collect();
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Assembles Ω for a built-in or custom map on `grid` with truncation N.
/// Rows are computed in parallel; each entry is the same pure expression as in
/// a sequential sweep, so the result does not depend on the thread count.
pub fn sample_kernel(spec: &MapSpec, grid: &QuadratureGrid, truncation: usize) -> Result<KernelMatrix> {
    spec.validate()?;
    if truncation == 0 {
        return Err(Error::InvalidConfig("truncation N must be at least 1".into()));
    }
    if spec.kind == MapKind::Custom {
        let kernel = match spec.custom_kernel.as_ref().expect("validated") {
            CustomKernel::Path(p) => load_custom_kernel(p, grid, truncation)?,
            CustomKernel::Matrix(m) => {
                if m.ncols() != truncation {
                    return Err(Error::dim("custom kernel columns", truncation, m.ncols()));
                }
                KernelMatrix::new((**m).clone(), grid.clone())?
            }
        };
        return Ok(kernel.with_source(spec.clone()));
    }

    let weights: Option<Vec<f64>> = match spec.kind {
        MapKind::WeightedDirac => {
            let expr = spec.weight.as_ref().expect("validated");
            Some(
                grid.nodes()
                    .iter()
                    .map(|&x| expr.eval(x))
                    .collect::<Result<Vec<f64>>>()?,
            )
        }
        MapKind::BumpDirac => {
            let (a, b) = spec.bump_support.expect("validated");
            Some(grid.nodes().iter().map(|&x| bump_weight(x, a, b)).collect())
        }
        _ => None,
    };

    let rows: Vec<Vec<Complex64>> = grid
        .nodes()
        .par_iter()
        .enumerate()
        .map(|(j, &x)| match spec.kind {
            MapKind::Dirac => real_row(hermite_row(truncation, x)),
            MapKind::Fourier => hermite_row(truncation, x)
                .into_iter()
                .enumerate()
                .map(|(n, h)| fourier_phase(n, FourierDirection::Forward) * h)
                .collect(),
            MapKind::DiracDerivative => {
                real_row(hermite_derivative_row(truncation, x).into_iter().map(|d| -d).collect())
            }
            MapKind::WeightedDirac | MapKind::BumpDirac => {
                let w = weights.as_ref().expect("weights sampled")[j];
                real_row(hermite_row(truncation, x).into_iter().map(|h| w * h).collect())
            }
            MapKind::Custom => unreachable!("handled above"),
        })
        .collect();

    let m = grid.len();
    let entries = DMatrix::from_fn(m, truncation, |j, n| rows[j][n]);
    Ok(KernelMatrix::new(entries, grid.clone())?.with_source(spec.clone()))
}

fn real_row(v: Vec<f64>) -> Vec<Complex64> {
    v.into_iter().map(|x| Complex64::new(x, 0.0)).collect()
}

/// Reads an M×N complex kernel from CSV (`re0,im0,…` header, one row per
/// grid node).
pub fn load_custom_kernel(path: &Path, grid: &QuadratureGrid, truncation: usize) -> Result<KernelMatrix> {
    let file = std::fs::File::open(path)?;
    read_custom_kernel(file, grid, truncation)
}

pub fn read_custom_kernel<R: Read>(input: R, grid: &QuadratureGrid, truncation: usize) -> Result<KernelMatrix> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header_len = reader.headers()?.len();
    if header_len != 2 * truncation {
        return Err(Error::dim("custom kernel header columns", 2 * truncation, header_len));
    }
    let mut values = Vec::with_capacity(grid.len() * truncation);
    let mut rows = 0usize;
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if record.len() != 2 * truncation {
            return Err(Error::dim("custom kernel row width", 2 * truncation, record.len()));
        }
        let parse = |col: usize| -> Result<f64> {
            let cell = record[col].trim();
            cell.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::KernelParse {
                    row,
                    column: col + 1,
                    message: format!("cannot parse `{cell}` as a finite number"),
                })
        };
        for n in 0..truncation {
            values.push(Complex64::new(parse(2 * n)?, parse(2 * n + 1)?));
        }
        rows += 1;
    }
    if rows != grid.len() {
        return Err(Error::dim("custom kernel rows vs grid nodes", grid.len(), rows));
    }
    let entries = DMatrix::from_row_slice(rows, truncation, &values);
    KernelMatrix::new(entries, grid.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schwartz::hermite_eval;

    fn small_grid() -> QuadratureGrid {
        QuadratureGrid::build(4.0, 4, 3).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(MapSpec::bump_dirac(1.0, -1.0).is_err());
        assert!(MapSpec::bump_dirac(0.0, 0.0).is_err());
        let mut w = MapSpec::weighted_dirac("1").unwrap();
        w.weight = None;
        assert!(matches!(w.validate(), Err(Error::InvalidConfig(_))));
        assert!(MapSpec::weighted_dirac("1+").is_err());
        assert!(MapSpec::bare(MapKind::Custom).validate().is_err());
        assert_eq!(MapSpec::weighted_dirac("2+sin(x)").unwrap().label(), "weighted_dirac[(2.0+sin(x))]");
    }

    #[test]
    fn dirac_rows_are_hermite_values() {
        let grid = QuadratureGrid::from_parts(vec![0.0, 0.5], vec![1.0, 1.0]).unwrap();
        let k = sample_kernel(&MapSpec::dirac(), &grid, 6).unwrap();
        assert_eq!(k.entries()[(0, 1)], Complex64::new(0.0, 0.0));
        for n in 0..6 {
            assert_eq!(k.entries()[(1, n)].re, hermite_eval(n, 0.5));
        }
    }

    #[test]
    fn fourier_columns_have_hermite_magnitudes() {
        let grid = small_grid();
        let k = sample_kernel(&MapSpec::fourier(), &grid, 8).unwrap();
        for (j, &x) in grid.nodes().iter().enumerate() {
            for n in 0..8 {
                assert!((k.entries()[(j, n)].norm() - hermite_eval(n, x).abs()).abs() < 1e-15);
            }
            // (−i)^3 = i
            assert!((k.entries()[(j, 3)] - Complex64::new(0.0, hermite_eval(3, x))).norm() < 1e-15);
        }
    }

    #[test]
    fn weighted_and_bump_rows() {
        let grid = small_grid();
        let k = sample_kernel(&MapSpec::weighted_dirac("2+sin(x)").unwrap(), &grid, 5).unwrap();
        for (j, &x) in grid.nodes().iter().enumerate() {
            for n in 0..5 {
                let expected = (2.0 + x.sin()) * hermite_eval(n, x);
                assert!((k.entries()[(j, n)].re - expected).abs() < 1e-15);
            }
        }
        let k = sample_kernel(&MapSpec::bump_dirac(-1.0, 1.0).unwrap(), &grid, 5).unwrap();
        for (j, &x) in grid.nodes().iter().enumerate() {
            if x <= -1.0 || x >= 1.0 {
                assert!(k.entries().row(j).iter().all(|z| *z == Complex64::new(0.0, 0.0)));
            }
        }
        assert_eq!(bump_weight(0.0, -1.0, 1.0), 1.0);
        assert_eq!(bump_weight(2.5, 2.0, 3.0), 1.0);
        assert_eq!(bump_weight(-1.0, -1.0, 1.0), 0.0);
    }

    #[test]
    fn weight_evaluation_errors_propagate() {
        let grid = QuadratureGrid::from_parts(vec![-1.0, 0.0, 1.0], vec![1.0; 3]).unwrap();
        let spec = MapSpec::weighted_dirac("1/x").unwrap();
        assert!(matches!(sample_kernel(&spec, &grid, 3), Err(Error::Eval(_))));
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let grid = small_grid();
        let k = sample_kernel(&MapSpec::fourier(), &grid, 4).unwrap();
        let mut buf = Vec::new();
        k.write_csv(&mut buf).unwrap();
        let back = read_custom_kernel(buf.as_slice(), &grid, 4).unwrap();
        assert_eq!(back.entries(), k.entries());

        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines.pop();
        let short = lines.join("\n");
        assert!(matches!(
            read_custom_kernel(short.as_bytes(), &grid, 4),
            Err(Error::Dimension { .. })
        ));

        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        let mut cells: Vec<String> = lines[3].split(',').map(str::to_string).collect();
        cells[5] = "abc".into();
        lines[3] = cells.join(",");
        match read_custom_kernel(lines.join("\n").as_bytes(), &grid, 4) {
            Err(Error::KernelParse { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, 6);
            }
            other => panic!("{other:?}"),
        }
        assert!(read_custom_kernel(text.as_bytes(), &grid, 3).is_err());
    }

    #[test]
    fn custom_matrix_kernel() {
        let grid = small_grid();
        let m = DMatrix::from_element(grid.len(), 3, Complex64::new(1.0, -1.0));
        let spec = MapSpec::custom(CustomKernel::Matrix(Arc::new(m.clone())));
        let k = sample_kernel(&spec, &grid, 3).unwrap();
        assert_eq!(k.entries(), &m);
        assert!(sample_kernel(&spec, &grid, 4).is_err());
    }
}
