//! Critical points of the band and exceptional points of `T(ω)`.
//!
//! A real momentum `k0` where `a_1 = … = a_{p-1} = 0 ≠ a_p` is an order-`p`
//! critical point, and `T(ε(k0))` then has an order-`p` exceptional point at
//! `z0 = k0`. The two sides are computed independently here: critical points
//! from derivatives of `ε`, exceptional points from root multiplicities of the
//! dispersion polynomial.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{reduce_to_zone, ComplexMomentum, LatticeModel};
use crate::poly;
use crate::transfer::{self, SpectrumError};

/// Relative tolerance for treating `a_r(k0)` as zero, against `2 Σ |t_m| mʳ`.
pub const CLASSIFY_TOL: f64 = 1e-9;
/// Default `δ` for [`index_at`], as a fraction of the bandwidth.
pub const DEFAULT_INDEX_DELTA: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CriticalError {
    #[error("k0 = {k0} is not stationary: |a_1| = {a1:e}")]
    NotStationary { k0: f64, a1: f64 },
    #[error("no derivative of order ≤ {max_order} is nonzero at k0 = {k0}")]
    Undetermined { k0: f64, max_order: u32 },
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalClass {
    Minimum,
    Maximum,
    Saddle,
}

/// A real critical point of the band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub k0: f64,
    pub omega0: f64,
    pub order: u32,
    /// `a_p(k0)`, the first nonvanishing derivative.
    #[serde(rename = "a_p")]
    pub leading: f64,
    /// `[1 + (-1)^p] sign(a_p) / 2`.
    pub index: i32,
    pub class: CriticalClass,
}

fn is_negligible(model: &LatticeModel, value: f64, r: u32) -> bool {
    value.abs() <= CLASSIFY_TOL * model.derivative_scale(r)
}

/// Order, index and class of a stationary momentum.
pub fn classify(model: &LatticeModel, k0: f64) -> Result<CriticalPoint, CriticalError> {
    let k0 = reduce_to_zone(k0);
    let a1 = model.derivative_real(k0, 1);
    if !is_negligible(model, a1, 1) {
        return Err(CriticalError::NotStationary { k0, a1 });
    }
    let max_order = 2 * model.range() as u32;
    for p in 2..=max_order {
        let ap = model.derivative_real(k0, p);
        if !is_negligible(model, ap, p) {
            let even = p % 2 == 0;
            let index = if even { ap.signum() as i32 } else { 0 };
            let class = match (even, ap > 0.0) {
                (true, true) => CriticalClass::Minimum,
                (true, false) => CriticalClass::Maximum,
                (false, _) => CriticalClass::Saddle,
            };
            return Ok(CriticalPoint {
                k0,
                omega0: model.energy(k0),
                order: p,
                leading: ap,
                index,
                class,
            });
        }
    }
    Err(CriticalError::Undetermined { k0, max_order })
}

/// All real critical points in `(-π, π]`, sorted by momentum.
///
/// `k = 0` and `k = π` are always stationary. Interior ones come from the real
/// roots in `(-1, 1)` of `Q(x)`, where `a_1(k) = 2 sin k · Q(cos k)`; each such
/// root gives the pair `±arccos x`.
pub fn find_critical_points(model: &LatticeModel) -> Vec<CriticalPoint> {
    let mut ks = vec![0.0, PI];
    for x in model.interior_stationary_cosines() {
        let k = x.acos();
        ks.push(k);
        ks.push(-k);
    }
    let mut out: Vec<CriticalPoint> = ks
        .into_iter()
        .filter_map(|k| match classify(model, k) {
            Ok(cp) => Some(cp),
            Err(e) => {
                log::warn!("skipping stationary candidate: {e}");
                None
            }
        })
        .collect();
    out.sort_by(|a, b| a.k0.total_cmp(&b.k0));
    out
}

/// Distinct critical energies, ascending.
pub fn critical_energies(model: &LatticeModel) -> Vec<f64> {
    let bw = model.bandwidth().max(f64::MIN_POSITIVE);
    let mut es: Vec<f64> = find_critical_points(model).iter().map(|c| c.omega0).collect();
    es.sort_by(f64::total_cmp);
    es.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * bw);
    es
}

/// An exceptional point of `T(ω0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpSite {
    pub z0: ComplexMomentum,
    pub order: u32,
}

/// Every exceptional point of `T(ω0)`, real or complex `z0`, from multiplicities
/// of the dispersion-polynomial roots.
pub fn ep_orders_at(model: &LatticeModel, omega0: f64) -> Result<Vec<EpSite>, SpectrumError> {
    let clusters = model.dispersion_polynomial(omega0).root_clusters()?;
    let mut out = Vec::new();
    for c in clusters {
        let s = c.multiplicity as u32;
        if c.is_real() && c.center.re.abs() == 1.0 {
            out.push(EpSite {
                z0: ComplexMomentum::real(c.center.re.acos()),
                order: 2 * s,
            });
        } else if s > 1 {
            let z = if c.is_real() && c.center.re.abs() < 1.0 {
                Complex64::new(c.center.re.acos(), 0.0)
            } else {
                c.center.acos()
            };
            out.push(EpSite {
                z0: ComplexMomentum::new(z),
                order: s,
            });
            out.push(EpSite {
                z0: ComplexMomentum::new(-z),
                order: s,
            });
        }
    }
    out.sort_by(|a, b| {
        a.z0.0
            .re
            .total_cmp(&b.z0.0.re)
            .then(a.z0.0.im.total_cmp(&b.z0.0.im))
    });
    Ok(out)
}

/// Index `sign[c(ω0+δ) - c(ω0-δ)]` together with the counts it came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexReport {
    pub index: i32,
    pub delta: f64,
    pub count_below: usize,
    pub count_above: usize,
    /// Other critical energies inside `(ω0-δ, ω0+δ)`; nonempty means the
    /// window is too wide for the index to refer to `ω0` alone.
    pub intruders: Vec<f64>,
}

pub fn index_from_counts(
    model: &LatticeModel,
    omega0: f64,
    delta: f64,
) -> Result<IndexReport, CriticalError> {
    let tol = transfer::DEFAULT_UNIT_TOL;
    let above = transfer::unit_modulus_count(model, omega0 + delta, tol)?;
    let below = transfer::unit_modulus_count(model, omega0 - delta, tol)?;
    let intruders = intruding_energies(model, omega0, delta);
    if !intruders.is_empty() {
        log::warn!(
            "critical energies {intruders:?} lie within δ = {delta:e} of ω0 = {omega0}"
        );
    }
    Ok(IndexReport {
        index: (above as i64 - below as i64).signum() as i32,
        delta,
        count_below: below,
        count_above: above,
        intruders,
    })
}

fn intruding_energies(model: &LatticeModel, omega0: f64, delta: f64) -> Vec<f64> {
    let bw = model.bandwidth();
    critical_energies(model)
        .into_iter()
        .filter(|&e| (e - omega0).abs() < delta && (e - omega0).abs() > 1e-12 * bw)
        .collect()
}

/// [`index_from_counts`] with `δ = 1e-6 · bandwidth`, halved until no other
/// critical energy falls inside the window.
pub fn index_at(model: &LatticeModel, omega0: f64) -> Result<IndexReport, CriticalError> {
    let mut delta = DEFAULT_INDEX_DELTA * model.bandwidth();
    for _ in 0..40 {
        if intruding_energies(model, omega0, delta).is_empty() {
            break;
        }
        delta *= 0.5;
    }
    index_from_counts(model, omega0, delta)
}

/// Leading-order momenta `z±` solving `ε(z) = ω0 ± δ` near an order-`p` point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpSplitting {
    pub k0: f64,
    pub p: u32,
    pub delta: f64,
    /// `B_p = (p! δ / |a_p|)^{1/p}`.
    pub radius: f64,
    pub roots_above: Vec<ComplexMomentum>,
    pub roots_below: Vec<ComplexMomentum>,
    pub real_count_above: usize,
    pub real_count_below: usize,
}

pub fn splitting_radius(p: u32, a_p: f64, delta: f64) -> f64 {
    let fact: f64 = (1..=p).map(f64::from).product();
    (fact * delta / a_p.abs()).powf(1.0 / f64::from(p))
}

/// Roots `k0 + B_p e^{iθ_m}`: the phases are `2mπ/p` on the side where
/// `(ω - ω0)/a_p > 0` and `(2m+1)π/p` on the other.
pub fn ep_splitting(model: &LatticeModel, k0: f64, delta: f64) -> Result<EpSplitting, CriticalError> {
    let cp = classify(model, k0)?;
    let p = cp.order;
    let radius = splitting_radius(p, cp.leading, delta);
    let ring = |odd: bool| -> (Vec<ComplexMomentum>, usize) {
        let mut real = 0;
        let roots = (0..p)
            .map(|m| {
                let twice_phase = if odd { 2 * m + 1 } else { 2 * m };
                // Real exactly when the phase is 0 or π.
                if twice_phase == 0 || twice_phase == p {
                    real += 1;
                }
                let theta = PI * f64::from(twice_phase) / f64::from(p);
                ComplexMomentum::new(Complex64::new(cp.k0, 0.0) + Complex64::from_polar(radius, theta))
            })
            .collect();
        (roots, real)
    };
    let positive = cp.leading > 0.0;
    let (roots_above, real_count_above) = ring(!positive);
    let (roots_below, real_count_below) = ring(positive);
    Ok(EpSplitting {
        k0: cp.k0,
        p,
        delta,
        radius,
        roots_above,
        roots_below,
        real_count_above,
        real_count_below,
    })
}

/// `ε(z) - ε(k0)` as `4 Σ t_m sin(m(z+k0)/2) sin(m(z-k0)/2)`, which keeps full
/// relative precision when `z` is close to `k0`.
pub fn energy_offset(model: &LatticeModel, k0: f64, z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, &t) in model.hoppings().iter().enumerate() {
        let m = (i + 1) as f64;
        acc += ((z + k0) * (0.5 * m)).sin() * ((z - k0) * (0.5 * m)).sin() * t;
    }
    acc * 4.0
}

/// Exact solutions of `ε(z) = ε(k0) + side·δ` within `3 B_p` of `k0`.
///
/// Starting points come from the dispersion-route spectrum at `ω0 + side·δ`.
/// Each is then Newton-polished on [`energy_offset`], so the offset `δ` enters
/// exactly instead of through the rounded sum `ω0 + δ`. Without this the error
/// of the computed roots is about `eps·|ω0| / δ` relative to `B_p`, which is
/// the whole signal for `p = 2` at `δ = 1e-8`.
pub fn exact_splitting_roots(
    model: &LatticeModel,
    k0: f64,
    delta: f64,
    above: bool,
) -> Result<Vec<ComplexMomentum>, CriticalError> {
    let cp = classify(model, k0)?;
    let radius = splitting_radius(cp.order, cp.leading, delta);
    let target = if above { delta } else { -delta };
    let set = transfer::spectrum_via_dispersion(model, cp.omega0 + target)?;
    let center = ComplexMomentum::real(cp.k0);
    let mut out = Vec::new();
    for r in set.records.iter().filter(|r| r.z.distance(center) <= 3.0 * radius) {
        // Unwrap onto the sheet nearest k0 before polishing.
        let mut z = r.z.0;
        let turns = ((z.re - cp.k0) / (2.0 * PI)).round();
        z.re -= turns * 2.0 * PI;
        let mut g = energy_offset(model, cp.k0, z) - target;
        for _ in 0..20 {
            let step = g / model.derivative(z, 1);
            let next = z - step;
            let gn = energy_offset(model, cp.k0, next) - target;
            if !(gn.norm() < g.norm()) {
                break;
            }
            z = next;
            g = gn;
        }
        out.push(ComplexMomentum::new(z));
    }
    Ok(out)
}

/// Whether `z` is within `tol` of the real momentum `k` on the cylinder.
pub fn momentum_matches(z: ComplexMomentum, k: f64, tol: f64) -> bool {
    z.distance(ComplexMomentum::real(k)) <= tol
}

/// Tolerance used when matching an exceptional point to a critical momentum.
pub fn site_tolerance() -> f64 {
    1e-6
}

/// Whether a root cluster center counts as the zone boundary.
pub fn at_zone_boundary(x: f64) -> bool {
    (x.abs() - 1.0).abs() <= poly::EDGE_TOL
}
