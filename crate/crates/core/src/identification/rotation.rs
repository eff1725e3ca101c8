use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::restrictions::RestrictionSet;
use crate::error::{Error, Result};
use crate::linalg::cholesky_lower;

/// Projects `z` onto the orthogonal complement of the rows of `rows`.
fn project_out(rows: &DMatrix<f64>, z: &DVector<f64>) -> DVector<f64> {
    if rows.nrows() == 0 {
        return z.clone();
    }
    let basis = rows.transpose().qr().q();
    let mut v = z - &basis * (basis.transpose() * z);
    // second pass removes the residual left by rounding
    v -= &basis * (basis.transpose() * &v);
    v
}

/// Rows that column `j` of the rotation must be orthogonal to: the zero rows
/// of `chol` for shock `j` plus the columns already chosen.
fn constraint_rows(chol: &DMatrix<f64>, r: &RestrictionSet, j: usize, done: &[DVector<f64>]) -> DMatrix<f64> {
    let zeros = r.zeros(j);
    let n = chol.nrows();
    let mut rows = DMatrix::zeros(zeros.len() + done.len(), n);
    for (k, &i) in zeros.iter().enumerate() {
        rows.set_row(k, &chol.row(i));
    }
    for (k, q) in done.iter().enumerate() {
        rows.set_row(zeros.len() + k, &q.transpose());
    }
    rows
}

/// Draws an orthogonal `Q` such that `chol(Σ)·Q` meets the zero restrictions
/// by construction; returns `None` when a sign restriction fails and a
/// single column flip cannot repair it.
pub fn draw_rotation<R: Rng + ?Sized>(
    sigma: &DMatrix<f64>,
    restrictions: &RestrictionSet,
    rng: &mut R,
) -> Result<Option<DMatrix<f64>>> {
    let n = restrictions.n();
    if sigma.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "Σ is {}x{} but restrictions are for {n} variables",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    restrictions.validate()?;
    let chol = cholesky_lower(sigma, "innovation covariance")?;
    Ok(rotation_from_chol(&chol, restrictions, rng))
}

pub(crate) fn rotation_from_chol<R: Rng + ?Sized>(
    chol: &DMatrix<f64>,
    restrictions: &RestrictionSet,
    rng: &mut R,
) -> Option<DMatrix<f64>> {
    let n = restrictions.n();
    let mut q = DMatrix::zeros(n, n);
    let mut done: Vec<DVector<f64>> = Vec::with_capacity(n);
    for j in restrictions.processing_order() {
        let rows = constraint_rows(chol, restrictions, j, &done);
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let v = project_out(&rows, &z);
        let norm = v.norm();
        if norm < 1e-12 {
            return None;
        }
        let mut v = v / norm;
        let column = chol * &v;
        let holds = |sign: f64| (0..n).all(|i| restrictions.cell(i, j).sign_holds(sign * column[i]));
        if !holds(1.0) {
            if holds(-1.0) {
                v = -v;
            } else {
                return None;
            }
        }
        q.set_column(j, &v);
        done.push(v);
    }
    Some(q)
}

/// Orthonormal basis of the complement of the row space of `rows`, made
/// smooth in `rows` by projecting a fixed reference basis and
/// re-orthonormalizing symmetrically.
fn smooth_null_basis(rows: &DMatrix<f64>, reference: &DMatrix<f64>) -> DMatrix<f64> {
    let projected = DMatrix::from_columns(
        &reference.column_iter().map(|c| project_out(rows, &c.into_owned())).collect::<Vec<_>>(),
    );
    let gram = projected.transpose() * &projected;
    let eig = gram.symmetric_eigen();
    let inv_sqrt = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.max(1e-300).sqrt()))
        * eig.eigenvectors.transpose();
    projected * inv_sqrt
}

fn null_basis(rows: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    // eigenvectors of the complement projector with eigenvalue one
    let projector = DMatrix::identity(n, n) - {
        if rows.nrows() == 0 {
            DMatrix::zeros(n, n)
        } else {
            let b = rows.transpose().qr().q();
            &b * b.transpose()
        }
    };
    let eig = projector.symmetric_eigen();
    let keep: Vec<_> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    DMatrix::from_columns(&keep.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>())
}

struct WeightMap<'a> {
    restrictions: &'a RestrictionSet,
    n: usize,
    k: usize,
    references: Vec<DMatrix<f64>>,
}

impl WeightMap<'_> {
    fn split(&self, theta: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.n;
        let a0 = DMatrix::from_column_slice(n, n, &theta[..n * n]);
        let a_plus = DMatrix::from_column_slice(self.k, n, &theta[n * n..]);
        (a0, a_plus)
    }

    /// Structural parameters to (B, vech Σ, w_1, ..., w_n).
    fn forward(&self, theta: &[f64]) -> Option<Vec<f64>> {
        let n = self.n;
        let (a0, a_plus) = self.split(theta);
        let a0_inv = a0.clone().try_inverse()?;
        let b = &a_plus * &a0_inv;
        let sigma = a0_inv.transpose() * &a0_inv;
        let chol = sigma.clone().cholesky()?.l();
        let q = chol.transpose() * &a0;
        let mut out: Vec<f64> = b.iter().copied().collect();
        for j in 0..n {
            for i in j..n {
                out.push(sigma[(i, j)]);
            }
        }
        let mut done = Vec::with_capacity(n);
        for (rank, j) in self.restrictions.processing_order().into_iter().enumerate() {
            let rows = constraint_rows(&chol, self.restrictions, j, &done);
            let basis = smooth_null_basis(&rows, &self.references[rank]);
            let qj = q.column(j).into_owned();
            out.extend((basis.transpose() * &qj).iter());
            done.push(qj);
        }
        Some(out)
    }

    /// Zero-restricted entries of `L0 = (A0⁻¹)'`.
    fn zero_constraints(&self, theta: &[f64]) -> Vec<f64> {
        let (a0, _) = self.split(theta);
        let inv = a0.try_inverse().expect("A0 invertible near the draw");
        let mut out = Vec::new();
        for j in 0..self.n {
            for i in self.restrictions.zeros(j) {
                out.push(inv[(j, i)]);
            }
        }
        out
    }
}

fn jacobian(f: impl Fn(&[f64]) -> Option<Vec<f64>>, theta: &[f64]) -> Result<DMatrix<f64>> {
    let base = f(theta).ok_or_else(|| Error::Numerical("weight map undefined at the draw".into()))?;
    let mut jac = DMatrix::zeros(base.len(), theta.len());
    let mut x = theta.to_vec();
    for c in 0..theta.len() {
        let h = 1e-6 * theta[c].abs().max(1.0);
        x[c] = theta[c] + h;
        let up = f(&x);
        x[c] = theta[c] - h;
        let down = f(&x);
        x[c] = theta[c];
        let (up, down) = up
            .zip(down)
            .ok_or_else(|| Error::Numerical("weight map undefined near the draw".into()))?;
        for r in 0..base.len() {
            jac[(r, c)] = (up[r] - down[r]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Log importance weight `-(2n+k+1)·log|det A0| - log v` of an accepted
/// draw, where `v` is the volume element of the map from structural
/// parameters to (B, Σ, projected normals) on the zero-restriction manifold.
/// Without zero restrictions the weight is constant across draws.
pub fn log_importance_weight(
    coefficients: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    q: &DMatrix<f64>,
    restrictions: &RestrictionSet,
) -> Result<f64> {
    let n = restrictions.n();
    let k = coefficients.nrows();
    let chol = cholesky_lower(sigma, "innovation covariance")?;
    let a0 = chol
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::Singular("Cholesky factor".into()))?
        * q;
    let a_plus = coefficients * &a0;

    let mut references = Vec::with_capacity(n);
    let mut done: Vec<DVector<f64>> = Vec::with_capacity(n);
    for j in restrictions.processing_order() {
        references.push(null_basis(&constraint_rows(&chol, restrictions, j, &done), n));
        done.push(q.column(j).into_owned());
    }
    let map = WeightMap { restrictions, n, k, references };
    let theta: Vec<f64> = a0.iter().chain(a_plus.iter()).copied().collect();

    let j_map = jacobian(|t| map.forward(t), &theta)?;
    let tangent = if restrictions.has_zeros() {
        let jc = jacobian(|t| Some(map.zero_constraints(t)), &theta)?;
        null_basis(&jc, theta.len())
    } else {
        DMatrix::identity(theta.len(), theta.len())
    };
    let d = j_map * tangent;
    let gram = d.transpose() * &d;
    let log_volume = 0.5 * crate::linalg::log_det_pd(&gram, "volume element")?;
    let log_det_a0 = a0.determinant().abs().ln();
    Ok(-((2 * n + k + 1) as f64) * log_det_a0 - log_volume)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identification::restrictions::{paper_restrictions, Cell};
    use crate::seeding::substream;

    fn spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = substream(seed, 0);
        let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        &a * a.transpose() + DMatrix::identity(n, n) * 0.5
    }

    fn feasible_sigma() -> DMatrix<f64> {
        let l = crate::simulate::paper_like_dgp().impact;
        &l * l.transpose()
    }

    #[test]
    fn single_zero_is_exact() {
        let mut r = RestrictionSet::unrestricted(2);
        r.set(1, 0, Cell::Zero).unwrap();
        let sigma = spd(2, 3);
        let chol = cholesky_lower(&sigma, "s").unwrap();
        let mut rng = substream(1, 1);
        for _ in 0..100 {
            let q = draw_rotation(&sigma, &r, &mut rng).unwrap().unwrap();
            assert!((chol.row(1) * q.column(0))[0].abs() < 1e-12);
            assert!((q.transpose() * &q - DMatrix::identity(2, 2)).abs().max() < 1e-12);
        }
    }

    #[test]
    fn one_dimensional_sign_flip() {
        let r = RestrictionSet::parse("+\n").unwrap();
        let sigma = DMatrix::from_element(1, 1, 2.0);
        let mut rng = substream(5, 0);
        for _ in 0..50 {
            assert_eq!(draw_rotation(&sigma, &r, &mut rng).unwrap().unwrap()[(0, 0)], 1.0);
        }
    }

    #[test]
    fn builtin_restrictions_hold_when_accepted() {
        let r = paper_restrictions();
        let sigma = feasible_sigma();
        let chol = cholesky_lower(&sigma, "s").unwrap();
        let mut rng = substream(2, 0);
        let mut hits = 0;
        for _ in 0..20_000 {
            if let Some(q) = draw_rotation(&sigma, &r, &mut rng).unwrap() {
                hits += 1;
                assert!(r.is_satisfied(&(&chol * &q), 1e-10));
                assert!((q.transpose() * &q - DMatrix::identity(5, 5)).abs().max() < 1e-10);
            }
        }
        assert!(hits > 0);
    }

    #[test]
    fn sign_only_weights_are_constant() {
        let mut r = RestrictionSet::unrestricted(3);
        r.set(0, 0, Cell::Positive).unwrap();
        let mut logs = Vec::new();
        for seed in 0..5 {
            let sigma = spd(3, seed);
            let mut rng = substream(seed, 7);
            let b = DMatrix::from_fn(4, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
            let q = loop {
                if let Some(q) = draw_rotation(&sigma, &r, &mut rng).unwrap() {
                    break q;
                }
            };
            logs.push(log_importance_weight(&b, &sigma, &q, &r).unwrap());
        }
        for w in &logs {
            assert!((w - logs[0]).abs() < 1e-5, "{logs:?}");
        }
    }

    #[test]
    fn zero_restricted_weights_are_finite() {
        let r = paper_restrictions();
        let sigma = feasible_sigma();
        let mut rng = substream(3, 3);
        let b = DMatrix::from_fn(11, 5, |_, _| 0.1 * rng.sample::<f64, _>(StandardNormal));
        let q = loop {
            if let Some(q) = draw_rotation(&sigma, &r, &mut rng).unwrap() {
                break q;
            }
        };
        assert!(log_importance_weight(&b, &sigma, &q, &r).unwrap().is_finite());
    }
}
