//! Finite-range hopping chains and their dispersion relation.
//!
//! A chain of range `n` with real hoppings `t_1..t_n` has the band
//! `ε(k) = -2 Σ_m t_m cos(m k)`. Everything else in the crate is derived from a
//! [`LatticeModel`], either through the dispersion itself, its derivatives
//! `a_r(k) = dʳε/dkʳ`, or the degree-`n` polynomial obtained by substituting
//! `x = cos z`.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{self, ChebyshevSeries, RootCluster};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("a lattice model needs at least one hopping")]
    Empty,
    #[error("declared range n = {declared} does not match {actual} hopping values")]
    ArityMismatch { declared: usize, actual: usize },
    #[error("the longest-range hopping t_n must be nonzero")]
    VanishingLastHopping,
    #[error("hopping t_{index} is not finite")]
    NonFinite { index: usize },
}

/// A 1D chain with hopping range `n` and real hopping strengths `t_1..t_n`.
///
/// Serialized as `{"n": 3, "t": [1.0, 0.925, 0.3]}`; deserialization runs the
/// same validation as [`LatticeModel::new`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct LatticeModel {
    hoppings: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    n: usize,
    t: Vec<f64>,
}

impl TryFrom<RawModel> for LatticeModel {
    type Error = ModelError;

    fn try_from(raw: RawModel) -> Result<Self, Self::Error> {
        if raw.n != raw.t.len() {
            return Err(ModelError::ArityMismatch {
                declared: raw.n,
                actual: raw.t.len(),
            });
        }
        LatticeModel::new(raw.t)
    }
}

impl From<LatticeModel> for RawModel {
    fn from(model: LatticeModel) -> Self {
        RawModel {
            n: model.range(),
            t: model.hoppings,
        }
    }
}

impl LatticeModel {
    pub fn new(hoppings: Vec<f64>) -> Result<Self, ModelError> {
        if hoppings.is_empty() {
            return Err(ModelError::Empty);
        }
        if let Some(i) = hoppings.iter().position(|t| !t.is_finite()) {
            return Err(ModelError::NonFinite { index: i + 1 });
        }
        if *hoppings.last().unwrap() == 0.0 {
            return Err(ModelError::VanishingLastHopping);
        }
        Ok(Self { hoppings })
    }

    /// Hopping range `n`.
    pub fn range(&self) -> usize {
        self.hoppings.len()
    }

    /// `t_1..t_n`, zero-based (`hoppings()[0]` is `t_1`).
    pub fn hoppings(&self) -> &[f64] {
        &self.hoppings
    }

    /// `t_m` with the usual one-based index.
    pub fn hopping(&self, m: usize) -> f64 {
        self.hoppings[m - 1]
    }

    fn terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.hoppings
            .iter()
            .enumerate()
            .map(|(i, &t)| ((i + 1) as f64, t))
    }

    /// `ε(z) = -2 Σ t_m cos(m z)`, analytically continued to complex `z`.
    pub fn dispersion(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, t) in self.terms() {
            acc += (z * m).cos() * t;
        }
        acc * -2.0
    }

    /// Dispersion at a real momentum.
    pub fn energy(&self, k: f64) -> f64 {
        -2.0 * self.terms().map(|(m, t)| t * (m * k).cos()).sum::<f64>()
    }

    /// `a_r(z0) = dʳε/dzʳ = -2 Σ t_m mʳ cos(rπ/2 + m z0)`.
    ///
    /// The quarter-turn phase is applied by cycling through `cos, -sin, -cos, sin`,
    /// so odd derivatives at `z0 = 0` are exactly zero.
    pub fn derivative(&self, z0: Complex64, r: u32) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, t) in self.terms() {
            let arg = z0 * m;
            let phase = match r % 4 {
                0 => arg.cos(),
                1 => -arg.sin(),
                2 => -arg.cos(),
                _ => arg.sin(),
            };
            acc += phase * (t * m.powi(r as i32));
        }
        acc * -2.0
    }

    /// Real-momentum version of [`derivative`](Self::derivative).
    pub fn derivative_real(&self, k0: f64, r: u32) -> f64 {
        let mut acc = 0.0;
        for (m, t) in self.terms() {
            let arg = m * k0;
            let phase = match r % 4 {
                0 => arg.cos(),
                1 => -arg.sin(),
                2 => -arg.cos(),
                _ => arg.sin(),
            };
            acc += t * m.powi(r as i32) * phase;
        }
        -2.0 * acc
    }

    /// Natural magnitude of `a_r`: `2 Σ |t_m| mʳ`. Used to make zero tests relative.
    pub fn derivative_scale(&self, r: u32) -> f64 {
        2.0 * self.terms().map(|(m, t)| t.abs() * m.powi(r as i32)).sum::<f64>()
    }

    /// The dispersion equation `ω = ε(z)` written as `P(x) = ω + 2 Σ t_m T_m(x)`
    /// with `x = cos z`, so that `P(cos z) = ω - ε(z)`.
    pub fn dispersion_polynomial(&self, omega: f64) -> DispersionPolynomial {
        let mut cheb = Vec::with_capacity(self.range() + 1);
        cheb.push(omega);
        cheb.extend(self.hoppings.iter().map(|t| 2.0 * t));
        DispersionPolynomial::from_chebyshev(cheb)
    }

    /// Global extrema of the band, `(ω_min, ω_max)`.
    pub fn band_extent(&self) -> (f64, f64) {
        let mut lo = self.energy(0.0).min(self.energy(PI));
        let mut hi = self.energy(0.0).max(self.energy(PI));
        for x in self.interior_stationary_cosines() {
            let e = self.energy(x.acos());
            lo = lo.min(e);
            hi = hi.max(e);
        }
        (lo, hi)
    }

    pub fn bandwidth(&self) -> f64 {
        let (lo, hi) = self.band_extent();
        hi - lo
    }

    /// `a_1(k) = 2 sin k · Q(cos k)` where `Q(x) = Σ m t_m U_{m-1}(x)`; this returns
    /// `Q` in the first-kind Chebyshev basis.
    pub fn velocity_factor(&self) -> ChebyshevSeries {
        let second_kind: Vec<f64> = self.terms().map(|(m, t)| m * t).collect();
        ChebyshevSeries::from_second_kind(&second_kind)
    }

    /// Root clusters of `Q(x)`, the cosines of interior stationary momenta.
    pub fn velocity_factor_roots(&self) -> Vec<RootCluster> {
        let q = self.velocity_factor();
        if q.degree() == 0 {
            return Vec::new();
        }
        poly::clustered_roots(&q).unwrap_or_default()
    }

    /// Real roots of `Q` strictly inside `(-1, 1)`.
    pub(crate) fn interior_stationary_cosines(&self) -> Vec<f64> {
        self.velocity_factor_roots()
            .into_iter()
            .filter(|c| c.is_real())
            .map(|c| c.center.re)
            .filter(|x| x.abs() < 1.0 - poly::EDGE_TOL)
            .collect()
    }
}

impl fmt::Display for LatticeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} t=(", self.range())?;
        for (i, t) in self.hoppings.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, ")")
    }
}

/// Reduce a real momentum into the Brillouin zone `(-π, π]`.
/// Momenta already in the zone are returned unchanged, so no precision is lost
/// near `k = 0`.
pub fn reduce_to_zone(k: f64) -> f64 {
    if k > -PI && k <= PI {
        return k;
    }
    let mut r = k.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    if r <= -PI {
        r += TAU;
    }
    r
}

/// A complex momentum `z`. The real part is always kept in `(-π, π]`, which is
/// harmless because `ε` is `2π`-periodic along the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexMomentum(pub Complex64);

impl ComplexMomentum {
    pub fn new(z: Complex64) -> Self {
        Self(Complex64::new(reduce_to_zone(z.re), z.im))
    }

    pub fn real(k: f64) -> Self {
        Self::new(Complex64::new(k, 0.0))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0.im == 0.0
    }

    /// The transfer-matrix eigenvalue `e^{-iz}` belonging to this momentum.
    pub fn eigenvalue(self) -> Complex64 {
        (Complex64::new(0.0, -1.0) * self.0).exp()
    }

    /// Distance on the cylinder `Re z mod 2π`.
    pub fn distance(self, other: ComplexMomentum) -> f64 {
        let d = self.0 - other.0;
        [-TAU, 0.0, TAU]
            .iter()
            .map(|s| (d + s).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

/// `P(x) = ω + 2 Σ t_m T_m(x)`, stored in both the Chebyshev and monomial bases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionPolynomial {
    /// Chebyshev-basis coefficients `c_0..c_n` (`c_0 = ω`, `c_m = 2 t_m`).
    pub chebyshev: Vec<f64>,
    /// Monomial coefficients, lowest degree first.
    pub monomial: Vec<f64>,
}

impl DispersionPolynomial {
    fn from_chebyshev(chebyshev: Vec<f64>) -> Self {
        let monomial = poly::chebyshev_to_monomial(&chebyshev);
        Self {
            chebyshev,
            monomial,
        }
    }

    pub fn degree(&self) -> usize {
        self.chebyshev.len() - 1
    }

    pub fn series(&self) -> ChebyshevSeries {
        ChebyshevSeries::new(self.chebyshev.clone())
    }

    /// Clenshaw evaluation in the Chebyshev basis.
    pub fn eval(&self, x: Complex64) -> Complex64 {
        poly::clenshaw(&self.chebyshev, x)
    }

    /// Roots grouped into multiplicity clusters.
    pub fn root_clusters(&self) -> Result<Vec<RootCluster>, poly::RootError> {
        poly::clustered_roots(&self.series())
    }
}
