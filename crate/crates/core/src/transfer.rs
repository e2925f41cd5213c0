//! The `2n × 2n` transfer matrix `T(ω)` and its spectrum.
//!
//! Two independent routes produce the eigenvalues:
//!
//! * [`spectrum_direct`] runs a dense real Schur decomposition of `T(ω)`.
//! * [`spectrum_via_dispersion`] solves `ω = ε(z)` through the degree-`n`
//!   polynomial in `x = cos z` and maps every root to the pair `e^{∓iz}`.
//!
//! The second route is the trusted one: it knows root multiplicities, which is
//! how exceptional points are recognised. A root of multiplicity `s` with
//! `x ≠ ±1` yields two coalesced clusters of size `s` at `z = ±arccos x`; a root
//! of multiplicity `s` at `x = ±1` yields a single cluster of size `2s` at
//! `z = 0` or `π`, because `ω - ε(z)` vanishes like `z^{2s}` there.

use std::io;

use nalgebra::{DMatrix, DVector, Schur, SVD};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::model::{ComplexMomentum, LatticeModel};
use crate::poly::{self, RootError};

/// Default tolerance on `||λ| - 1|` for counting unit-modulus eigenvalues.
pub const DEFAULT_UNIT_TOL: f64 = 1e-9;
/// Relative merging radius used to label coalesced eigenvalues in the direct route.
pub const DIRECT_CLUSTER_RADIUS: f64 = 1e-6;
const DIRECT_MAX_ITER_PER_DIM: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("dense Schur iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error(transparent)]
    Roots(#[from] RootError),
}

/// `T(ω)` for a given model, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    pub omega: f64,
    pub entries: DMatrix<f64>,
}

impl TransferMatrix {
    /// Wrap arbitrary entries, e.g. for negative controls in the verification suite.
    pub fn from_entries(omega: f64, entries: DMatrix<f64>) -> Self {
        Self { omega, entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn determinant(&self) -> f64 {
        self.entries.clone().lu().determinant()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.norm()
    }

    fn complex_entries(&self) -> DMatrix<Complex64> {
        self.entries.map(|v| Complex64::new(v, 0.0))
    }

    /// `‖T v - λ v‖` for a candidate eigenpair.
    pub fn residual(&self, lambda: Complex64, v: &DVector<Complex64>) -> f64 {
        (self.complex_entries() * v - v * lambda).norm()
    }
}

/// Build `T(ω)`. With one-based indices: `T[j+1][j] = 1`, and the first row is
/// `-t_{n-j}/t_n` for `j < n`, `-ω/t_n` at `j = n`, `-t_{j-n}/t_n` for `j > n`.
pub fn build_transfer(model: &LatticeModel, omega: f64) -> TransferMatrix {
    let n = model.range();
    let dim = 2 * n;
    let tn = model.hopping(n);
    let mut t = DMatrix::<f64>::zeros(dim, dim);
    for j in 1..dim {
        t[(j, j - 1)] = 1.0;
    }
    for j in 1..=dim {
        let v = match j.cmp(&n) {
            std::cmp::Ordering::Less => model.hopping(n - j),
            std::cmp::Ordering::Equal => omega,
            std::cmp::Ordering::Greater => model.hopping(j - n),
        };
        t[(0, j - 1)] = -v / tn;
    }
    TransferMatrix { omega, entries: t }
}

/// Which route produced an [`EigenSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Direct,
    Dispersion,
}

/// One eigenvalue of `T(ω)` with its momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenRecord {
    pub lambda: Complex64,
    pub z: ComplexMomentum,
    /// Size of the coalesced cluster this eigenvalue belongs to.
    pub multiplicity: usize,
    pub unit_modulus: bool,
    /// Index of the cluster within the set.
    pub cluster: usize,
}

/// A distinct eigenvalue with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenCluster {
    pub lambda: Complex64,
    pub z: ComplexMomentum,
    pub multiplicity: usize,
}

/// All `2n` eigenvalues of `T(ω)`. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenSet {
    pub omega: f64,
    pub route: Route,
    pub records: Vec<EigenRecord>,
    /// Set when two raw roots were closer than the ill-conditioning gap.
    pub ill_conditioned: bool,
}

impl EigenSet {
    pub fn lambdas(&self) -> Vec<Complex64> {
        self.records.iter().map(|r| r.lambda).collect()
    }

    pub fn clusters(&self) -> Vec<EigenCluster> {
        let mut seen = Vec::new();
        let mut out = Vec::new();
        for r in &self.records {
            if !seen.contains(&r.cluster) {
                seen.push(r.cluster);
                out.push(EigenCluster {
                    lambda: r.lambda,
                    z: r.z,
                    multiplicity: r.multiplicity,
                });
            }
        }
        out
    }

    pub fn unit_count(&self) -> usize {
        self.records.iter().filter(|r| r.unit_modulus).count()
    }

    pub fn product(&self) -> Complex64 {
        self.records.iter().map(|r| r.lambda).product()
    }
}

fn unit_modulus(z: Complex64, tol: f64) -> bool {
    // |e^{-iz}| = e^{Im z}
    z.im == 0.0 || z.im.exp_m1().abs() <= tol
}

fn momentum_from_lambda(lambda: Complex64) -> ComplexMomentum {
    ComplexMomentum::new(Complex64::new(0.0, 1.0) * lambda.ln())
}

fn sort_records(records: &mut [EigenRecord]) {
    records.sort_by(|a, b| {
        a.z.0
            .re
            .total_cmp(&b.z.0.re)
            .then(a.z.0.im.total_cmp(&b.z.0.im))
    });
}

/// Eigenvalues of `T(ω)` from a dense Schur decomposition.
///
/// Multiplicities here are a coarse label from merging eigenvalues closer than
/// [`DIRECT_CLUSTER_RADIUS`]; defective eigenvalues scatter much further than
/// that, so exceptional-point orders should come from the dispersion route.
pub fn spectrum_direct(t: &TransferMatrix) -> Result<EigenSet, SpectrumError> {
    let dim = t.dim();
    let max_iter = DIRECT_MAX_ITER_PER_DIM * dim;
    let schur = Schur::try_new(t.entries.clone(), f64::EPSILON, max_iter)
        .ok_or(SpectrumError::NoConvergence {
            iterations: max_iter,
        })?;
    let lambdas: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();

    // Union-find by proximity.
    let mut label: Vec<usize> = (0..dim).collect();
    for a in 0..dim {
        for b in (a + 1)..dim {
            let scale = lambdas[a].norm().max(1.0);
            if (lambdas[a] - lambdas[b]).norm() <= DIRECT_CLUSTER_RADIUS * scale {
                let (la, lb) = (label[a], label[b]);
                let keep = la.min(lb);
                for l in label.iter_mut() {
                    if *l == la || *l == lb {
                        *l = keep;
                    }
                }
            }
        }
    }
    let mut records: Vec<EigenRecord> = lambdas
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let z = momentum_from_lambda(lambda);
            EigenRecord {
                lambda,
                z,
                multiplicity: label.iter().filter(|&&l| l == label[i]).count(),
                unit_modulus: (lambda.norm() - 1.0).abs() <= DEFAULT_UNIT_TOL,
                cluster: label[i],
            }
        })
        .collect();
    sort_records(&mut records);
    Ok(EigenSet {
        omega: t.omega,
        route: Route::Direct,
        records,
        ill_conditioned: false,
    })
}

/// Null vector of `T - λ I` from a complex SVD, with its residual `‖T v - λ v‖`.
pub fn direct_eigenvector(t: &TransferMatrix, lambda: Complex64) -> (DVector<Complex64>, f64) {
    let dim = t.dim();
    let shifted = t.complex_entries() - DMatrix::<Complex64>::identity(dim, dim) * lambda;
    let svd = SVD::new(shifted, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let v: DVector<Complex64> = v_t.row(imin).transpose().map(|c| c.conj());
    let res = t.residual(lambda, &v);
    (v, res)
}

/// Eigenvalues of `T(ω)` from the roots of the dispersion polynomial.
pub fn spectrum_via_dispersion(
    model: &LatticeModel,
    omega: f64,
) -> Result<EigenSet, SpectrumError> {
    spectrum_via_dispersion_tol(model, omega, DEFAULT_UNIT_TOL)
}

pub fn spectrum_via_dispersion_tol(
    model: &LatticeModel,
    omega: f64,
    unit_tol: f64,
) -> Result<EigenSet, SpectrumError> {
    let clusters = model.dispersion_polynomial(omega).root_clusters()?;
    let ill_conditioned = poly::has_ill_conditioned_pair(&clusters);
    let mut records = Vec::with_capacity(2 * model.range());
    let mut next_cluster = 0;
    for c in &clusters {
        let x = c.center;
        let s = c.multiplicity;
        if c.is_real() && x.re.abs() == 1.0 {
            // Zone centre or edge: both branches coincide.
            let k = x.re.acos();
            let z = ComplexMomentum::real(k);
            for _ in 0..2 * s {
                records.push(EigenRecord {
                    lambda: z.eigenvalue(),
                    z,
                    multiplicity: 2 * s,
                    unit_modulus: true,
                    cluster: next_cluster,
                });
            }
            next_cluster += 1;
            continue;
        }
        let zp = if c.is_real() && x.re.abs() < 1.0 {
            Complex64::new(x.re.acos(), 0.0)
        } else {
            x.acos()
        };
        for sign in [1.0, -1.0] {
            let z = ComplexMomentum::new(zp * sign);
            let unit = unit_modulus(z.0, unit_tol);
            for _ in 0..s {
                records.push(EigenRecord {
                    lambda: z.eigenvalue(),
                    z,
                    multiplicity: s,
                    unit_modulus: unit,
                    cluster: next_cluster,
                });
            }
            next_cluster += 1;
        }
    }
    sort_records(&mut records);
    Ok(EigenSet {
        omega,
        route: Route::Dispersion,
        records,
        ill_conditioned,
    })
}

/// `φ(z)` with element `j = 1..2n` equal to `e^{-iz(n-j+1)}`.
pub fn eigenvector(model: &LatticeModel, z: Complex64) -> Vec<Complex64> {
    let n = model.range() as i64;
    (1..=2 * n)
        .map(|j| (Complex64::new(0.0, -1.0) * z * (n - j + 1) as f64).exp())
        .collect()
}

/// `c(ω)`: number of eigenvalues with `||λ| - 1| ≤ tol`, counted with
/// multiplicity from the dispersion route.
pub fn unit_modulus_count(model: &LatticeModel, omega: f64, tol: f64) -> Result<usize, SpectrumError> {
    Ok(spectrum_via_dispersion_tol(model, omega, tol)?.unit_count())
}

#[derive(Serialize)]
struct EigenRow {
    omega: f64,
    re_lambda: f64,
    im_lambda: f64,
    re_z: f64,
    im_z: f64,
    multiplicity: usize,
    unit_modulus: bool,
}

/// Write eigenvalue sets as CSV, one row per eigenvalue.
pub fn write_eigen_csv<W: io::Write>(w: W, sets: &[EigenSet]) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for set in sets {
        for r in &set.records {
            wtr.serialize(EigenRow {
                omega: set.omega,
                re_lambda: r.lambda.re,
                im_lambda: r.lambda.im,
                re_z: r.z.0.re,
                im_z: r.z.0.im,
                multiplicity: r.multiplicity,
                unit_modulus: r.unit_modulus,
            })?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Match two eigenvalue multisets greedily by nearest distance and return the
/// largest relative distance `|a - b| / max(1, |a|)` among the pairs.
pub fn max_pairing_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push(((x - y).norm() / x.norm().max(1.0), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for (d, i, j) in pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            worst = worst.max(d);
        }
    }
    worst
}
