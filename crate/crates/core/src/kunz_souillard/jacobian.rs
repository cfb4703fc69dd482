use nalgebra::DMatrix;

use crate::model::FiniteHamiltonian;
use crate::spectra::diagonalize;
use crate::{Error, Result};

/// Smallest `|φ_k(0)|` for which the change of variables is attempted.
pub const MIN_CENTER_AMPLITUDE: f64 = 1e-8;

/// Image of `V` under `V ↦ (x_{−L}, …, x_{−1}, E, x_1, …, x_L)`, with
/// `x_n = φ(n+1)/φ(n)` for `n < 0` and `x_n = φ(n−1)/φ(n)` for `n > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateChange {
    pub energy: f64,
    /// `x_{−L}, …, x_{−1}`.
    pub left: Vec<f64>,
    /// `x_1, …, x_L`.
    pub right: Vec<f64>,
    /// The eigenvector `φ_k` on `−L..=L`.
    pub eigenvector: Vec<f64>,
}

impl CoordinateChange {
    fn flat(&self) -> Vec<f64> {
        let mut v = self.left.clone();
        v.push(self.energy);
        v.extend_from_slice(&self.right);
        v
    }

    /// `x_n` for `n ∈ [−L, −1] ∪ [1, L]`.
    pub fn x(&self, n: i64) -> f64 {
        let l = self.right.len() as i64;
        if n < 0 {
            self.left[(n + l) as usize]
        } else {
            self.right[(n - 1) as usize]
        }
    }

    /// `V` recovered from `(x, E)`:
    /// `V_n = E − x_{n−1}^{-1} − x_n` (n < 0), `E − x_{−1}^{-1} − x_1^{-1}` (n = 0),
    /// `E − x_{n+1}^{-1} − x_n` (n > 0), with `x_{±(L+1)}^{-1} = 0`.
    pub fn potential(&self) -> Vec<f64> {
        let l = self.right.len() as i64;
        let inv = |n: i64| if n.abs() > l { 0.0 } else { 1.0 / self.x(n) };
        (-l..=l)
            .map(|n| match n.cmp(&0) {
                std::cmp::Ordering::Less => self.energy - inv(n - 1) - self.x(n),
                std::cmp::Ordering::Equal => self.energy - inv(-1) - inv(1),
                std::cmp::Ordering::Greater => self.energy - inv(n + 1) - self.x(n),
            })
            .collect()
    }
}

pub fn coordinate_map(v: &[f64], k: usize) -> Result<CoordinateChange> {
    let h = FiniteHamiltonian::from_diagonal(v.to_vec())?;
    let l = h.half_width();
    if k >= h.size() {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: format!("eigenvalue index {k} out of range for size {}", h.size()),
        });
    }
    let es = diagonalize(&h)?;
    let phi = es.vector(k).to_vec();
    if phi[l].abs() < MIN_CENTER_AMPLITUDE {
        return Err(Error::DegenerateEigenvector { value: phi[l] });
    }
    if let Some(z) = phi.iter().find(|p| **p == 0.0) {
        return Err(Error::DegenerateEigenvector { value: *z });
    }
    let at = |n: i64| phi[(n + l as i64) as usize];
    let l = l as i64;
    Ok(CoordinateChange {
        energy: es.eigenvalues()[k],
        left: (-l..=-1).map(|n| at(n + 1) / at(n)).collect(),
        right: (1..=l).map(|n| at(n - 1) / at(n)).collect(),
        eigenvector: phi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianReport {
    /// `|det ∂V/∂(x, E)|` as the reciprocal of the finite-difference
    /// determinant of the forward map.
    pub det_numeric: f64,
    /// `1 + x_1^{-2}{1 + x_2^{-2}{…}} + x_{−1}^{-2}{1 + x_{−2}^{-2}{…}}`.
    pub det_continued_fraction: f64,
    /// `φ_k(0)^{-2}`.
    pub phi0_inverse_square: f64,
    /// `|det_numeric − φ_k(0)^{-2}| / φ_k(0)^{-2}`.
    pub relative_defect: f64,
    /// Largest relative error of `|φ(m)| / |φ(0)| = |x_1^{-1} ⋯ x_m^{-1}|`
    /// (and its mirror for `m < 0`).
    pub ratio_defect: f64,
}

/// Compares the Jacobian of the eigenvector change of variables, obtained
/// by central finite differences with step `step`, to `φ_k(0)^{-2}`.
pub fn jacobian_check(v: &[f64], k: usize, step: f64) -> Result<JacobianReport> {
    let base = coordinate_map(v, k)?;
    let n = v.len();
    let l = n / 2;
    let mut d = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut plus = v.to_vec();
        let mut minus = v.to_vec();
        plus[j] += step;
        minus[j] -= step;
        let fp = coordinate_map(&plus, k)?.flat();
        let fm = coordinate_map(&minus, k)?.flat();
        for i in 0..n {
            d[(i, j)] = (fp[i] - fm[i]) / (2.0 * step);
        }
    }
    let det_numeric = 1.0 / d.determinant().abs();

    let nest = |xs: &mut dyn Iterator<Item = f64>| xs.fold(0.0, |acc, x| (1.0 + acc) / (x * x));
    let right = nest(&mut base.right.iter().rev().copied());
    let left = nest(&mut base.left.iter().copied());
    let det_continued_fraction = 1.0 + right + left;

    let phi = &base.eigenvector;
    let phi0 = phi[l];
    let phi0_inverse_square = 1.0 / (phi0 * phi0);
    let mut ratio_defect: f64 = 0.0;
    let mut prod = 1.0;
    for m in 1..=l as i64 {
        prod /= base.x(m).abs();
        let want = phi[l + m as usize].abs() / phi0.abs();
        ratio_defect = ratio_defect.max((prod - want).abs() / want);
    }
    prod = 1.0;
    for m in 1..=l as i64 {
        prod /= base.x(-m).abs();
        let want = phi[l - m as usize].abs() / phi0.abs();
        ratio_defect = ratio_defect.max((prod - want).abs() / want);
    }
    Ok(JacobianReport {
        det_numeric,
        det_continued_fraction,
        phi0_inverse_square,
        relative_defect: (det_numeric - phi0_inverse_square).abs() / phi0_inverse_square,
        ratio_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_site_example() {
        let v = [0.3, -0.2, 0.5];
        let r = jacobian_check(&v, 1, 1e-5).unwrap();
        assert!(r.relative_defect < 1e-5, "{r:?}");
        assert!((r.det_continued_fraction - r.phi0_inverse_square).abs() < 1e-12 * r.phi0_inverse_square);
        assert!(r.ratio_defect < 1e-14);
    }

    #[test]
    fn three_site_closed_form() {
        let c = coordinate_map(&[0.3, -0.2, 0.5], 2).unwrap();
        let (xm, xp) = (c.x(-1), c.x(1));
        let closed = 1.0 + 1.0 / (xp * xp) + 1.0 / (xm * xm);
        let phi0 = c.eigenvector[1];
        assert!((closed - 1.0 / (phi0 * phi0)).abs() < 1e-12 * closed);
    }

    #[test]
    fn inverse_map_recovers_potential() {
        let v = [0.1, 0.9, -0.4, 0.3, 0.7];
        for k in 0..5 {
            let c = coordinate_map(&v, k).unwrap();
            for (a, b) in c.potential().iter().zip(&v) {
                assert!((a - b).abs() < 1e-9, "k={k}");
            }
        }
    }

    #[test]
    fn vanishing_center_refused() {
        // symmetric free chain: the middle eigenvector vanishes at odd offsets,
        // and the L=1 eigenvector for E = 0 vanishes at the center
        let r = coordinate_map(&[0.0, 0.0, 0.0], 1);
        assert!(matches!(r, Err(Error::DegenerateEigenvector { .. })));
    }
}
