use super::grid::{GridFunction, RealGrid};
use crate::model::SiteDistribution;
use crate::{Error, Result};

/// Compressed sparse rows.
#[derive(Debug, Clone)]
pub(crate) struct Csr {
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl Csr {
    fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for row in rows {
            for (j, v) in row {
                cols.push(j as u32);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self { row_ptr, cols, vals }
    }

    pub(crate) fn rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub(crate) fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.vals[r])
            .map(|(j, v)| (*j as usize, *v))
    }

    pub(crate) fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows())
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// Columns as sparse lists.
    pub(crate) fn columns(&self, n: usize) -> Vec<Vec<(usize, f64)>> {
        let mut cols = vec![Vec::new(); n];
        for i in 0..self.rows() {
            for (j, v) in self.row(i) {
                cols[j].push((i, v));
            }
        }
        cols
    }
}

/// The energy-independent inversion resamples on a grid:
/// `P`, the cell projection of `f ↦ u^{-2} f(1/u)`, and `U`, the cell
/// projection of `f ↦ |u|^{-1} f(1/u)`.
#[derive(Debug, Clone)]
pub struct InversionMaps {
    grid: RealGrid,
    pub(crate) p: Csr,
    pub(crate) u: Csr,
}

impl InversionMaps {
    pub fn new(grid: RealGrid) -> Self {
        let n = grid.points();
        let half = n / 2;
        let h = grid.spacing();
        let x = grid.half_width();
        let pos_edge = |k: usize| k as f64 * h;
        // rows for the positive half, columns in positive-half offsets
        let mut p_rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(half);
        let mut u_rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(half);
        for i in 0..half {
            let (a, b) = (pos_edge(i), pos_edge(i + 1));
            let y_lo = 1.0 / b;
            let y_hi = if a == 0.0 { x } else { (1.0 / a).min(x) };
            let mut p_row = Vec::new();
            let mut u_row = Vec::new();
            if y_lo < x {
                let mut k = ((y_lo / h).floor() as usize).min(half - 1);
                while k < half && pos_edge(k) < y_hi {
                    let y1 = y_lo.max(pos_edge(k));
                    let y2 = y_hi.min(pos_edge(k + 1));
                    if y2 > y1 {
                        p_row.push((k, (y2 - y1) / h));
                        u_row.push((k, (y2 / y1).ln() / h));
                    }
                    k += 1;
                }
            }
            p_rows.push(p_row);
            u_rows.push(u_row);
        }
        let assemble = |rows: &[Vec<(usize, f64)>]| {
            let mut full = vec![Vec::new(); n];
            for (i, row) in rows.iter().enumerate() {
                full[half + i] = row.iter().map(|(k, v)| (half + k, *v)).collect();
                full[half - 1 - i] = row.iter().rev().map(|(k, v)| (half - 1 - k, *v)).collect();
            }
            Csr::from_rows(full)
        };
        Self {
            grid,
            p: assemble(&p_rows),
            u: assemble(&u_rows),
        }
    }

    pub fn grid(&self) -> RealGrid {
        self.grid
    }

    pub fn apply_u(&self, f: &[f64]) -> Vec<f64> {
        self.u.apply(f)
    }

    pub fn apply_p(&self, f: &[f64]) -> Vec<f64> {
        self.p.apply(f)
    }

    pub fn op_u(&self, f: &GridFunction) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.apply_u(&f.values),
        }
    }
}

/// Correlation `(C g)_i = Σ_j K(i + j) g_j` with
/// `K(k) = h^{-1} ∫ r(s) (h − |s − (E − s_k)|)_+ ds`, `s_k = x_0 + x_k`,
/// the cell projection of `g ↦ ∫ r(E − x − u) g(u) du`.
#[derive(Debug, Clone)]
pub(crate) struct Correlation {
    first: usize,
    kernel: Vec<f64>,
}

impl Correlation {
    fn new(dist: &SiteDistribution, energy: f64, grid: RealGrid) -> Self {
        let n = grid.points();
        let h = grid.spacing();
        let x = grid.half_width();
        let (smin, smax) = dist.support_hull();
        let k_of = |s: f64| (s + 2.0 * x) / h - 1.0;
        let last = 2 * n - 2;
        let lo = (k_of(energy - smax - h).floor() - 1.0).max(0.0) as usize;
        let hi = ((k_of(energy - smin + h).ceil() + 1.0).max(0.0) as usize).min(last);
        if lo > hi {
            return Self {
                first: 0,
                kernel: Vec::new(),
            };
        }
        let mut kernel: Vec<f64> = (lo..=hi)
            .map(|k| {
                let s = -2.0 * x + (k as f64 + 1.0) * h;
                dist.hat_integral(energy - s, h) / h
            })
            .collect();
        let lead = kernel.iter().position(|v| *v != 0.0).unwrap_or(kernel.len());
        let trail = kernel.iter().rposition(|v| *v != 0.0).map_or(0, |p| p + 1);
        if lead >= trail {
            kernel.clear();
            return Self { first: 0, kernel };
        }
        let kernel = kernel[lead..trail].to_vec();
        Self {
            first: lo + lead,
            kernel,
        }
    }

    fn apply(&self, g: &[f64]) -> Vec<f64> {
        let n = g.len();
        let mut out = vec![0.0; n];
        if self.kernel.is_empty() {
            return out;
        }
        let k_lo = self.first;
        let k_hi = self.first + self.kernel.len() - 1;
        for (i, o) in out.iter_mut().enumerate() {
            if i + n - 1 < k_lo || i > k_hi {
                continue;
            }
            let j0 = k_lo.saturating_sub(i);
            let j1 = (k_hi - i).min(n - 1);
            let base = i + j0 - k_lo;
            let kern = &self.kernel[base..base + (j1 - j0 + 1)];
            *o = kern.iter().zip(&g[j0..=j1]).map(|(k, v)| k * v).sum();
        }
        out
    }

    /// `Σ_i K(i + t)` for every `t`.
    fn column_sums(&self, n: usize) -> Vec<f64> {
        let mut prefix = vec![0.0; self.kernel.len() + 1];
        for (i, k) in self.kernel.iter().enumerate() {
            prefix[i + 1] = prefix[i] + k;
        }
        (0..n)
            .map(|t| {
                if self.kernel.is_empty() {
                    return 0.0;
                }
                let a = t.max(self.first);
                let b = (t + n - 1).min(self.first + self.kernel.len() - 1);
                if a > b {
                    0.0
                } else {
                    prefix[b - self.first + 1] - prefix[a - self.first]
                }
            })
            .collect()
    }

    /// Column `t` of `C` as `(first_row, values)`.
    fn column(&self, t: usize, n: usize) -> (usize, &[f64]) {
        if self.kernel.is_empty() {
            return (0, &[]);
        }
        let k_hi = self.first + self.kernel.len() - 1;
        let i0 = self.first.saturating_sub(t);
        if t + i0 > k_hi || i0 >= n {
            return (0, &[]);
        }
        let i1 = (k_hi - t).min(n - 1);
        let a = t + i0 - self.first;
        (i0, &self.kernel[a..a + (i1 - i0 + 1)])
    }
}

/// `U`, `T0 = C P` and `T1 = C U` at one energy.
#[derive(Debug, Clone)]
pub struct KsOperators<'a> {
    maps: &'a InversionMaps,
    dist: SiteDistribution,
    energy: f64,
    corr: Correlation,
}

impl<'a> KsOperators<'a> {
    pub fn new(dist: &SiteDistribution, energy: f64, maps: &'a InversionMaps) -> Result<Self> {
        if dist.density_max().is_none() {
            return Err(Error::DensityRequired);
        }
        Ok(Self {
            maps,
            dist: dist.clone(),
            energy,
            corr: Correlation::new(dist, energy, maps.grid()),
        })
    }

    pub fn grid(&self) -> RealGrid {
        self.maps.grid()
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn maps(&self) -> &InversionMaps {
        self.maps
    }

    /// Cell averages of `φ(x) = r(E − x)`.
    pub fn phi(&self) -> GridFunction {
        let (d, e) = (&self.dist, self.energy);
        GridFunction::from_antiderivative(self.grid(), |x| -d.cdf(e - x))
    }

    pub fn apply_c(&self, g: &[f64]) -> Vec<f64> {
        self.corr.apply(g)
    }

    pub fn apply_u(&self, f: &[f64]) -> Vec<f64> {
        self.maps.apply_u(f)
    }

    pub fn apply_t0(&self, f: &[f64]) -> Vec<f64> {
        self.corr.apply(&self.maps.apply_p(f))
    }

    pub fn apply_t1(&self, f: &[f64]) -> Vec<f64> {
        self.corr.apply(&self.maps.apply_u(f))
    }

    /// `T1ᵀ = U C` (both factors are symmetric).
    pub fn apply_t1_transpose(&self, f: &[f64]) -> Vec<f64> {
        self.maps.apply_u(&self.corr.apply(f))
    }

    pub fn op_t0(&self, f: &GridFunction) -> GridFunction {
        GridFunction {
            grid: self.grid(),
            values: self.apply_t0(&f.values),
        }
    }

    pub fn op_t1(&self, f: &GridFunction) -> GridFunction {
        GridFunction {
            grid: self.grid(),
            values: self.apply_t1(&f.values),
        }
    }

    pub fn op_u(&self, f: &GridFunction) -> GridFunction {
        self.maps.op_u(f)
    }

    /// Exact `‖T0‖_{1→1}`: the largest column sum (all entries are ≥ 0).
    pub fn t0_norm_1_1(&self) -> f64 {
        let n = self.grid().points();
        let c = self.corr.column_sums(n);
        self.maps
            .p
            .columns(n)
            .iter()
            .map(|col| col.iter().map(|(t, w)| w * c[*t]).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Exact `‖T0‖_{1→2}`: `max_j ‖T0 e_j‖₂ / h` over cell indicators.
    pub fn t0_norm_1_2(&self) -> f64 {
        let grid = self.grid();
        let n = grid.points();
        let h = grid.spacing();
        let mut best: f64 = 0.0;
        let mut buf: Vec<f64> = Vec::new();
        for col in self.maps.p.columns(n) {
            if col.is_empty() {
                continue;
            }
            let mut ranges = Vec::with_capacity(col.len());
            let (mut lo, mut hi) = (usize::MAX, 0);
            for (t, w) in &col {
                let (i0, vals) = self.corr.column(*t, n);
                if !vals.is_empty() {
                    lo = lo.min(i0);
                    hi = hi.max(i0 + vals.len());
                    ranges.push((i0, vals, *w));
                }
            }
            if ranges.is_empty() {
                continue;
            }
            buf.clear();
            buf.resize(hi - lo, 0.0);
            for (i0, vals, w) in ranges {
                for (k, v) in vals.iter().enumerate() {
                    buf[i0 - lo + k] += w * v;
                }
            }
            best = best.max(buf.iter().map(|v| v * v).sum::<f64>());
        }
        // ‖T0 (e_j / h)‖₂ = sqrt(h Σ col²) / h
        (best / h).sqrt()
    }
}
