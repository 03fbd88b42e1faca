use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Periodic rectangular lattice in dimensionless coordinates.
///
/// Sites are stored row-major with `x` fastest: `index = iy * nx + ix`.
/// Fourier modes use the same layout in FFT order, so mode `ix` carries the
/// integer wavenumber `m = ix` for `ix < nx/2` and `m = ix - nx` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeGrid {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    kx: Vec<f64>,
    ky: Vec<f64>,
}

fn wavenumbers(n: usize, l: f64) -> Vec<f64> {
    (0..n)
        .map(|i| 2.0 * PI * mode_number(i, n) as f64 / l)
        .collect()
}

fn mode_number(i: usize, n: usize) -> i64 {
    if i < n.div_ceil(2) || n == 1 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl LatticeGrid {
    /// Builds a grid with `nx * ny` sites covering `lx * ly`.
    ///
    /// Site counts must be even and at least 4. The single-site lattice
    /// (`nx = ny = 1`) is also accepted; it has only the `k = 0` mode and is
    /// used for zero-dimensional checks.
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        let single = nx == 1 && ny == 1;
        if !single {
            for (name, n) in [("nx", nx), ("ny", ny)] {
                if n < 4 || n % 2 != 0 {
                    return Err(Error::InvalidGrid(format!(
                        "{name} = {n} must be even and >= 4"
                    )));
                }
            }
        }
        for (name, l) in [("lx", lx), ("ly", ly)] {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!("{name} = {l} must be positive")));
            }
        }
        Ok(Self {
            nx,
            ny,
            lx,
            ly,
            kx: wavenumbers(nx, lx),
            ky: wavenumbers(ny, ly),
        })
    }

    pub fn square(n: usize, l: f64) -> Result<Self> {
        Self::new(n, n, l, l)
    }

    /// One site of area `dx * dy`.
    pub fn single_site(dx: f64, dy: f64) -> Result<Self> {
        Self::new(1, 1, dx, dy)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.nx, index / self.nx)
    }

    /// Position of a site in domain coordinates.
    pub fn position(&self, index: usize) -> (f64, f64) {
        let (ix, iy) = self.coords(index);
        (ix as f64 * self.dx(), iy as f64 * self.dy())
    }

    pub fn kx_table(&self) -> &[f64] {
        &self.kx
    }

    pub fn ky_table(&self) -> &[f64] {
        &self.ky
    }

    /// Integer wavenumbers `(mx, my)` of a mode index.
    pub fn mode_numbers(&self, index: usize) -> (i64, i64) {
        let (ix, iy) = self.coords(index);
        (mode_number(ix, self.nx), mode_number(iy, self.ny))
    }

    pub fn wavevector(&self, index: usize) -> (f64, f64) {
        let (ix, iy) = self.coords(index);
        (self.kx[ix], self.ky[iy])
    }

    pub fn k2(&self, index: usize) -> f64 {
        let (kx, ky) = self.wavevector(index);
        kx * kx + ky * ky
    }

    /// `|k|^2` for every mode in storage order.
    pub fn k2_table(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.k2(i)).collect()
    }

    /// Index of the mode carrying `-k`.
    pub fn mirror(&self, index: usize) -> usize {
        let (ix, iy) = self.coords(index);
        self.index((self.nx - ix) % self.nx, (self.ny - iy) % self.ny)
    }

    /// Smallest nonzero wavevector spacing.
    pub fn dk(&self) -> f64 {
        (2.0 * PI / self.lx).min(2.0 * PI / self.ly)
    }

    /// Modes retained by the 2/3 rule: `|m| <= n/3` along both axes.
    pub fn two_thirds_mask(&self) -> Vec<bool> {
        (0..self.len())
            .map(|i| {
                let (mx, my) = self.mode_numbers(i);
                3 * mx.unsigned_abs() as usize <= self.nx
                    && 3 * my.unsigned_abs() as usize <= self.ny
            })
            .collect()
    }
}
