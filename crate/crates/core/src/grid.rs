//! Uniform node grids on `[-L, L]^d` and functions sampled on them.

use crate::error::{config_err, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub dim: usize,
    pub half_width: f64,
    /// Nodes per axis, endpoints included.
    pub nodes: usize,
}

impl GridSpec {
    pub fn new(dim: usize, half_width: f64, spacing: f64) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(config_err("grids support d = 1 or 2"));
        }
        if !(half_width > 0.0 && spacing > 0.0 && spacing <= 2.0 * half_width) {
            return Err(config_err(format!("invalid grid: L = {half_width}, h = {spacing}")));
        }
        let cells = (2.0 * half_width / spacing).round();
        if ((cells * spacing) - 2.0 * half_width).abs() > 1e-9 * half_width {
            return Err(config_err("grid spacing must divide the box width"));
        }
        Ok(GridSpec { dim, half_width, nodes: cells as usize + 1 })
    }

    /// Default analysis grid: `[-4, 4]` with `h = 1/256`.
    pub fn default_1d() -> Self {
        GridSpec::new(1, 4.0, 1.0 / 256.0).expect("static grid")
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.nodes - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.nodes.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.nodes == 0
    }

    pub fn axis(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Coordinates of flat node `idx` written into `out`.
    pub fn node(&self, idx: usize, out: &mut [f64]) {
        if self.dim == 1 {
            out[0] = self.axis(idx);
        } else {
            out[0] = self.axis(idx / self.nodes);
            out[1] = self.axis(idx % self.nodes);
        }
    }

    /// Trapezoid weight of flat node `idx` (product rule in 2-d).
    pub fn trapezoid_weight(&self, idx: usize) -> f64 {
        let h = self.spacing();
        let w1 = |i: usize| if i == 0 || i + 1 == self.nodes { 0.5 * h } else { h };
        if self.dim == 1 {
            w1(idx)
        } else {
            w1(idx / self.nodes) * w1(idx % self.nodes)
        }
    }
}

/// Real values on the nodes of a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("grid function has non-finite values".into()));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn sample(grid: &GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut x = vec![0.0; grid.dim];
        let values = (0..grid.len())
            .map(|i| {
                grid.node(i, &mut x);
                f(&x)
            })
            .collect();
        GridFunction { grid: grid.clone(), values }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        GridFunction { grid: self.grid.clone(), values: self.values.iter().map(|v| f(*v)).collect() }
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(config_err("grid functions live on different grids"));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect();
        Ok(GridFunction { grid: self.grid.clone(), values })
    }

    /// Piecewise-linear (bilinear in 2-d) interpolation, zero outside the box.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let g = &self.grid;
        let h = g.spacing();
        let locate = |c: f64| -> Option<(usize, f64)> {
            let s = (c + g.half_width) / h;
            if !(s >= 0.0 && s <= (g.nodes - 1) as f64) {
                return None;
            }
            let i = (s.floor() as usize).min(g.nodes - 2);
            Some((i, s - i as f64))
        };
        if g.dim == 1 {
            match locate(x[0]) {
                Some((i, f)) => self.values[i] * (1.0 - f) + self.values[i + 1] * f,
                None => 0.0,
            }
        } else {
            match (locate(x[0]), locate(x[1])) {
                (Some((i, fx)), Some((j, fy))) => {
                    let n = g.nodes;
                    let v = |a: usize, b: usize| self.values[a * n + b];
                    (1.0 - fx) * ((1.0 - fy) * v(i, j) + fy * v(i, j + 1))
                        + fx * ((1.0 - fy) * v(i + 1, j) + fy * v(i + 1, j + 1))
                }
                _ => 0.0,
            }
        }
    }

    /// CSV with node coordinates followed by `value`.
    pub fn to_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.grid.dim).map(|k| format!("x_{k}")).collect();
        header.push("value".into());
        w.write_record(&header).map_err(crate::measure::csv_err)?;
        let mut x = vec![0.0; self.grid.dim];
        for (i, v) in self.values.iter().enumerate() {
            self.grid.node(i, &mut x);
            let mut row: Vec<String> = x.iter().map(|c| c.to_string()).collect();
            row.push(v.to_string());
            w.write_record(&row).map_err(crate::measure::csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Time-indexed grid function on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGridFunction {
    pub times: Vec<f64>,
    pub slices: Vec<GridFunction>,
}

impl TimeGridFunction {
    pub fn new(times: Vec<f64>, slices: Vec<GridFunction>) -> Result<Self> {
        if times.is_empty() || times.len() != slices.len() {
            return Err(config_err("time grid and slices must be nonempty and of equal length"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_err("time grid must be strictly increasing"));
        }
        Ok(TimeGridFunction { times, slices })
    }

    /// Constant-in-time function on `[0, horizon]`.
    pub fn constant(f: GridFunction, horizon: f64) -> Self {
        TimeGridFunction { times: vec![0.0, horizon], slices: vec![f.clone(), f] }
    }
}
