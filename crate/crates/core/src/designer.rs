//! Hopping parameters that realize an exceptional point of a chosen order.
//!
//! With `t_1 = 1`, an order-`p` point at `k = 0` or `π` needs `a_r = 0` for even
//! `r < p` only (odd derivatives vanish there by symmetry), which is linear in
//! the hoppings. At an interior momentum all of `a_1 … a_{p-1}` must vanish and
//! `k0` itself is an unknown, so that case goes through Newton's method.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::critical::{self, momentum_matches};
use crate::model::{reduce_to_zone, LatticeModel, ModelError};
use crate::transfer::SpectrumError;

/// Value given to hoppings that are neither constrained nor assigned.
pub const DEFAULT_FREE_HOPPING: f64 = 0.1;
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 100;
pub const MULTI_STARTS: usize = 64;
/// Sweep range for free hoppings in [`hypersurface_sample`].
pub const SWEEP_RANGE: (f64, f64) = (0.05, 0.5);
/// Momenta closer than this (in `|sin k0|`) to `0` or `π` are not interior.
pub const INTERIOR_MARGIN: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("order {p} is not attainable with range {n}; allowed: {allowed:?}")]
    NotAllowed { n: usize, p: u32, allowed: Vec<u32> },
    #[error("odd order {p} cannot occur at k = 0 or π")]
    OddAtZoneBoundary { p: u32 },
    #[error("order {p} exceeds the range {n}, so it cannot occur at an interior momentum")]
    InteriorTooHigh { n: usize, p: u32 },
    #[error("bad free parameter: {0}")]
    FreeParameter(String),
    #[error("singular constraint system")]
    Singular,
    #[error("no solution after {starts} starts; smallest relative residual {best_residual:e}")]
    NoSolution { starts: usize, best_residual: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    ZoneCenter,
    ZoneEdge,
    Interior,
}

impl FromStr for Location {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zone_center" | "center" => Ok(Location::ZoneCenter),
            "zone_edge" | "edge" => Ok(Location::ZoneEdge),
            "interior" => Ok(Location::Interior),
            other => Err(format!("unknown location '{other}' (zone_center, zone_edge, interior)")),
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Location::ZoneCenter => "zone_center",
            Location::ZoneEdge => "zone_edge",
            Location::Interior => "interior",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRequest {
    pub n: usize,
    pub p: u32,
    pub location: Location,
    /// Assigned hoppings by 1-based index (`2..=n`).
    #[serde(default)]
    pub free: BTreeMap<usize, f64>,
}

impl DesignRequest {
    pub fn new(n: usize, p: u32, location: Location) -> Self {
        Self { n, p, location, free: BTreeMap::new() }
    }

    pub fn with_free(mut self, m: usize, value: f64) -> Self {
        self.free.insert(m, value);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignStatus {
    Verified,
    OrderMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignResult {
    pub model: LatticeModel,
    pub k0: f64,
    pub omega0: f64,
    /// Order found by classifying the designed model at `k0`.
    pub order: u32,
    pub requested_order: u32,
    /// `|a_r(k0)|` for `r = 1 … p-1`.
    pub residuals: Vec<f64>,
    pub status: DesignStatus,
}

/// `{2..n} ∪ {even p : n < p ≤ 2n}`.
pub fn allowed_orders(n: usize) -> Vec<u32> {
    let n = n as u32;
    (2..=2 * n).filter(|&p| p <= n || p % 2 == 0).collect()
}

fn validate(req: &DesignRequest) -> Result<(), DesignError> {
    let allowed = allowed_orders(req.n);
    if req.n == 0 || !allowed.contains(&req.p) {
        return Err(DesignError::NotAllowed { n: req.n, p: req.p, allowed });
    }
    match req.location {
        Location::Interior if req.p as usize > req.n => {
            Err(DesignError::InteriorTooHigh { n: req.n, p: req.p })
        }
        Location::ZoneCenter | Location::ZoneEdge if req.p % 2 == 1 => {
            Err(DesignError::OddAtZoneBoundary { p: req.p })
        }
        _ => Ok(()),
    }?;
    for (&m, &v) in &req.free {
        if m < 2 || m > req.n {
            return Err(DesignError::FreeParameter(format!("t{m} is not among t2..t{}", req.n)));
        }
        if !v.is_finite() {
            return Err(DesignError::FreeParameter(format!("t{m} = {v}")));
        }
    }
    Ok(())
}

/// Number of hoppings the constraints determine.
fn unknown_count(req: &DesignRequest) -> usize {
    match req.location {
        Location::Interior => req.p as usize - 2,
        _ => req.p as usize / 2 - 1,
    }
}

/// Solved-for hoppings: the lowest indices not assigned in `free`.
fn unknown_indices(req: &DesignRequest) -> Result<Vec<usize>, DesignError> {
    let want = unknown_count(req);
    let open: Vec<usize> = (2..=req.n).filter(|m| !req.free.contains_key(m)).collect();
    if open.len() < want {
        return Err(DesignError::FreeParameter(format!(
            "{} hoppings assigned but order {} needs {want} of t2..t{} unconstrained",
            req.free.len(),
            req.p,
            req.n
        )));
    }
    Ok(open[..want].to_vec())
}

fn base_hoppings(req: &DesignRequest) -> Vec<f64> {
    (1..=req.n)
        .map(|m| match m {
            1 => 1.0,
            _ => req.free.get(&m).copied().unwrap_or(DEFAULT_FREE_HOPPING),
        })
        .collect()
}

fn finish(model: LatticeModel, k0: f64, p: u32) -> Result<DesignResult, DesignError> {
    let k0 = reduce_to_zone(k0);
    let residuals = (1..p).map(|r| model.derivative_real(k0, r).abs()).collect();
    let omega0 = model.energy(k0);
    let order = critical::classify(&model, k0).map(|c| c.order).unwrap_or(0);
    let sites = critical::ep_orders_at(&model, omega0)?;
    let tol = critical::site_tolerance();
    let has_site = |k: f64| sites.iter().any(|s| s.order == p && momentum_matches(s.z0, k, tol));
    let verified = order == p && has_site(k0) && has_site(-k0);
    Ok(DesignResult {
        model,
        k0,
        omega0,
        order,
        requested_order: p,
        residuals,
        status: if verified { DesignStatus::Verified } else { DesignStatus::OrderMismatch },
    })
}

/// Order-`p` point at `k = 0` or `π` from the linear conditions
/// `Σ s_m t_m m^r = 0`, `r = 2, 4, …, p-2`, with `s_m = 1` at `k = 0` and
/// `(-1)^m` at `π`.
pub fn design_even_ep(req: &DesignRequest) -> Result<DesignResult, DesignError> {
    validate(req)?;
    let k0 = match req.location {
        Location::ZoneCenter => 0.0,
        Location::ZoneEdge => PI,
        Location::Interior => return design_odd_ep(req),
    };
    let sign = |m: usize| if req.location == Location::ZoneEdge && m % 2 == 1 { -1.0 } else { 1.0 };
    let unknowns = unknown_indices(req)?;
    let mut t = base_hoppings(req);
    let c = unknowns.len();
    if c > 0 {
        let mut a = DMatrix::<f64>::zeros(c, c);
        let mut b = DVector::<f64>::zeros(c);
        for row in 0..c {
            let r = 2 * (row as i32 + 1);
            for (col, &m) in unknowns.iter().enumerate() {
                a[(row, col)] = sign(m) * (m as f64).powi(r);
            }
            b[row] = -(1..=req.n)
                .filter(|m| !unknowns.contains(m))
                .map(|m| sign(m) * (m as f64).powi(r) * t[m - 1])
                .sum::<f64>();
        }
        let x = a.lu().solve(&b).ok_or(DesignError::Singular)?;
        for (col, &m) in unknowns.iter().enumerate() {
            t[m - 1] = x[col];
        }
    }
    finish(LatticeModel::new(t)?, k0, req.p)
}

fn raw_derivative(t: &[f64], k: f64, r: u32) -> f64 {
    let phase = f64::from(r) * PI / 2.0;
    -2.0 * t
        .iter()
        .enumerate()
        .map(|(i, tm)| {
            let m = (i + 1) as f64;
            tm * m.powi(r as i32) * (phase + m * k).cos()
        })
        .sum::<f64>()
}

fn raw_scale(t: &[f64], r: u32) -> f64 {
    2.0 * t
        .iter()
        .enumerate()
        .map(|(i, tm)| tm.abs() * ((i + 1) as f64).powi(r as i32))
        .sum::<f64>()
}

fn relative_residual(t: &[f64], k: f64, p: u32) -> f64 {
    (1..p)
        .map(|r| raw_derivative(t, k, r).abs() / raw_scale(t, r))
        .fold(0.0, f64::max)
}

/// `i`-th point of the Halton sequence in `dim` dimensions.
pub fn halton(i: usize, dim: usize) -> Vec<f64> {
    const PRIMES: [usize; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    PRIMES[..dim]
        .iter()
        .map(|&b| {
            let (mut f, mut r, mut x) = (1.0, 0.0, i);
            while x > 0 {
                f /= b as f64;
                r += f * (x % b) as f64;
                x /= b;
            }
            r
        })
        .collect()
}

/// One damped Newton run on `a_1 = … = a_{p-1} = 0` over `(k0, t_unknown)`,
/// continued while the residual keeps dropping.
fn newton(
    p: u32,
    mut t: Vec<f64>,
    unknowns: &[usize],
    mut k: f64,
) -> (Vec<f64>, f64, f64) {
    let dim = p as usize - 1;
    let apply = |t: &mut Vec<f64>, k: &mut f64, step: &DVector<f64>, lambda: f64| {
        *k += lambda * step[0];
        for (j, &m) in unknowns.iter().enumerate() {
            t[m - 1] += lambda * step[j + 1];
        }
    };
    let mut res = relative_residual(&t, k, p);
    // Iterate past NEWTON_TOL down to the rounding floor: a design that is only
    // 1e-12 accurate splits an order-p root by about 1e-12^(1/p), which the
    // multiplicity check downstream rightly refuses to merge.
    for _ in 0..NEWTON_MAX_ITER {
        if res == 0.0 || !res.is_finite() {
            break;
        }
        let f = DVector::from_iterator(dim, (1..p).map(|r| raw_derivative(&t, k, r)));
        let mut jac = DMatrix::<f64>::zeros(dim, dim);
        for (row, r) in (1..p).enumerate() {
            jac[(row, 0)] = raw_derivative(&t, k, r + 1);
            for (j, &m) in unknowns.iter().enumerate() {
                let mf = m as f64;
                jac[(row, j + 1)] = -2.0 * mf.powi(r as i32) * (f64::from(r) * PI / 2.0 + mf * k).cos();
            }
        }
        let Some(step) = jac.lu().solve(&(-f)) else { break };
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let (mut t2, mut k2) = (t.clone(), k);
            apply(&mut t2, &mut k2, &step, lambda);
            let r2 = relative_residual(&t2, k2, p);
            if r2 < res {
                t = t2;
                k = k2;
                res = r2;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (t, k, res)
}

/// Every distinct interior solution found from the multi-start set, ordered by
/// hoppings (descending, lexicographic) and then `k0`.
pub fn design_odd_ep_all(req: &DesignRequest) -> Result<Vec<DesignResult>, DesignError> {
    validate(req)?;
    if req.location != Location::Interior {
        return Err(DesignError::FreeParameter(format!(
            "Newton design needs an interior location, got {}",
            req.location
        )));
    }
    let unknowns = unknown_indices(req)?;
    let base = base_hoppings(req);
    let mut best = f64::INFINITY;
    let mut found: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 1..=MULTI_STARTS {
        let h = halton(i, 1 + unknowns.len());
        let mut t = base.clone();
        for (j, &m) in unknowns.iter().enumerate() {
            t[m - 1] = 2.0 * h[j + 1] - 1.0;
        }
        let (t, k, res) = newton(req.p, t, &unknowns, PI * h[0]);
        if res.is_finite() {
            best = best.min(res);
        }
        if res > NEWTON_TOL || t.iter().any(|x| !x.is_finite()) {
            continue;
        }
        let k = reduce_to_zone(k).abs();
        if k.sin().abs() < INTERIOR_MARGIN || *t.last().unwrap() == 0.0 {
            continue;
        }
        let duplicate = found.iter().any(|(t0, k0)| {
            (k0 - k).abs() < 1e-8 && t0.iter().zip(&t).all(|(a, b)| (a - b).abs() < 1e-8)
        });
        if !duplicate {
            found.push((t, k));
        }
    }
    found.sort_by(|(ta, ka), (tb, kb)| {
        tb.iter()
            .zip(ta.iter())
            .map(|(b, a)| b.total_cmp(a))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(ka.total_cmp(kb))
    });
    let mut out = Vec::new();
    for (t, k) in found {
        let result = finish(LatticeModel::new(t)?, k, req.p)?;
        if result.status == DesignStatus::Verified {
            out.push(result);
        }
    }
    if out.is_empty() {
        return Err(DesignError::NoSolution { starts: MULTI_STARTS, best_residual: best });
    }
    Ok(out)
}

/// First solution of [`design_odd_ep_all`].
pub fn design_odd_ep(req: &DesignRequest) -> Result<DesignResult, DesignError> {
    Ok(design_odd_ep_all(req)?.remove(0))
}

pub fn design(req: &DesignRequest) -> Result<DesignResult, DesignError> {
    match req.location {
        Location::Interior => design_odd_ep(req),
        _ => design_even_ep(req),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplePoint {
    pub free: BTreeMap<usize, f64>,
    pub design: Option<DesignResult>,
    pub error: Option<String>,
}

/// Up to `count` points of the order-`p` hypersurface, sweeping the hoppings
/// the constraints leave free over [`SWEEP_RANGE`] along a Halton sequence.
/// When nothing is free the hypersurface is a single point.
pub fn hypersurface_sample(
    n: usize,
    p: u32,
    location: Location,
    count: usize,
) -> Result<Vec<SamplePoint>, DesignError> {
    let probe = DesignRequest::new(n, p, location);
    validate(&probe)?;
    let solved = unknown_indices(&probe)?;
    let free: Vec<usize> = (2..=n).filter(|m| !solved.contains(m)).collect();
    let count = if free.is_empty() { 1 } else { count };
    let (lo, hi) = SWEEP_RANGE;
    let mut out: Vec<SamplePoint> = Vec::new();
    for i in 1..=count {
        let h = halton(i, free.len());
        let mut req = probe.clone();
        for (j, &m) in free.iter().enumerate() {
            req.free.insert(m, lo + (hi - lo) * h[j]);
        }
        let point = match design(&req) {
            Ok(d) => SamplePoint { free: req.free, design: Some(d), error: None },
            Err(e) => SamplePoint { free: req.free, design: None, error: Some(e.to_string()) },
        };
        let duplicate = point.design.as_ref().is_some_and(|d| {
            out.iter().filter_map(|q| q.design.as_ref()).any(|q| {
                q.model.hoppings().iter().zip(d.model.hoppings()).all(|(a, b)| (a - b).abs() < 1e-12)
            })
        });
        if !duplicate {
            out.push(point);
        }
    }
    Ok(out)
}

/// Outcome of the randomized search for an order-5 point with range 3.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpossibilityScan {
    pub samples: usize,
    pub seed: u64,
    /// Searched momenta are confined to `[kappa, π - kappa]`.
    pub kappa: f64,
    /// Smallest `max_{r ≤ 4} |a_r(k0)|` reached.
    pub min_residual: f64,
    pub argmin: [f64; 3],
    pub label: &'static str,
}

pub const SCAN_KAPPA: f64 = 0.1;
const SCAN_BOX: f64 = 2.0;

fn scan_residuals(x: &Vector3<f64>) -> [f64; 4] {
    let t = [1.0, x[1], x[2]];
    [1, 2, 3, 4].map(|r| raw_derivative(&t, x[0], r))
}

/// Levenberg–Marquardt polish of `a_1 = … = a_4 = 0` over `(k0, t2, t3)`, kept
/// inside the search box.
fn scan_polish(mut x: Vector3<f64>, kappa: f64) -> (f64, Vector3<f64>) {
    let clamp = |x: &mut Vector3<f64>| {
        x[0] = x[0].clamp(kappa, PI - kappa);
        x[1] = x[1].clamp(-SCAN_BOX, SCAN_BOX);
        x[2] = x[2].clamp(-SCAN_BOX, SCAN_BOX);
    };
    let cost = |x: &Vector3<f64>| scan_residuals(x).iter().map(|v| v * v).sum::<f64>();
    let mut mu = 1e-3;
    let mut c = cost(&x);
    for _ in 0..40 {
        let f = scan_residuals(&x);
        let mut jtj = Matrix3::<f64>::zeros();
        let mut jtf = Vector3::<f64>::zeros();
        for (i, r) in (1..=4u32).enumerate() {
            let row = Vector3::new(
                raw_derivative(&[1.0, x[1], x[2]], x[0], r + 1),
                -2.0 * 2f64.powi(r as i32) * (f64::from(r) * PI / 2.0 + 2.0 * x[0]).cos(),
                -2.0 * 3f64.powi(r as i32) * (f64::from(r) * PI / 2.0 + 3.0 * x[0]).cos(),
            );
            jtj += row * row.transpose();
            jtf += row * f[i];
        }
        let mut accepted = false;
        for _ in 0..10 {
            let damped = jtj + Matrix3::from_diagonal(&jtj.diagonal().map(|d| mu * d.max(1e-12)));
            let Some(step) = damped.lu().solve(&(-jtf)) else { break };
            let mut y = x + step;
            clamp(&mut y);
            let cy = cost(&y);
            if cy < c {
                x = y;
                c = cy;
                mu = (mu * 0.3).max(1e-12);
                accepted = true;
                break;
            }
            mu *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    let worst = scan_residuals(&x).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (worst, x)
}

/// Random search over `(t2, t3) ∈ [-2, 2]²` and interior `k0` for a point with
/// `a_1 = a_2 = a_3 = a_4 = 0`. A minimal residual bounded away from zero is
/// evidence, not proof, that order 5 does not occur for range 3.
pub fn impossibility_scan(samples: usize, seed: u64, kappa: f64) -> ImpossibilityScan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_residual = f64::INFINITY;
    let mut argmin = [0.0; 3];
    for _ in 0..samples {
        let x = Vector3::new(
            rng.gen_range(kappa..PI - kappa),
            rng.gen_range(-SCAN_BOX..SCAN_BOX),
            rng.gen_range(-SCAN_BOX..SCAN_BOX),
        );
        let (res, x) = scan_polish(x, kappa);
        if res < min_residual {
            min_residual = res;
            argmin = [x[0], x[1], x[2]];
        }
    }
    ImpossibilityScan {
        samples,
        seed,
        kappa,
        min_residual,
        argmin,
        label: "evidence",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn allowed_order_sets() {
        assert_eq!(allowed_orders(1), vec![2]);
        assert_eq!(allowed_orders(3), vec![2, 3, 4, 6]);
        assert_eq!(allowed_orders(4), vec![2, 3, 4, 6, 8]);
    }

    #[test]
    fn even_designs() {
        let d = design_even_ep(&DesignRequest::new(3, 4, Location::ZoneEdge).with_free(3, 0.3)).unwrap();
        assert_abs_diff_eq!(d.model.hopping(2), 37.0 / 40.0, epsilon = 1e-12);
        assert_eq!((d.order, d.status), (4, DesignStatus::Verified));
        assert_abs_diff_eq!(d.omega0, 0.75, epsilon = 1e-12);

        let d = design_even_ep(&DesignRequest::new(3, 6, Location::ZoneEdge)).unwrap();
        assert_abs_diff_eq!(d.model.hopping(2), 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(d.model.hopping(3), 1.0 / 15.0, epsilon = 1e-12);
        assert_eq!(d.status, DesignStatus::Verified);

        let d = design_even_ep(&DesignRequest::new(1, 2, Location::ZoneCenter)).unwrap();
        assert_eq!(d.model.hoppings(), &[1.0]);
        assert_abs_diff_eq!(d.omega0, -2.0, epsilon = 1e-15);

        let d = design_even_ep(&DesignRequest::new(3, 6, Location::ZoneCenter)).unwrap();
        assert_abs_diff_eq!(d.model.hopping(2), -0.4, epsilon = 1e-12);
        assert_eq!((d.order, d.status), (6, DesignStatus::Verified));
    }

    #[test]
    fn request_validation() {
        let e = |r: DesignRequest| design(&r).unwrap_err();
        assert!(matches!(e(DesignRequest::new(3, 5, Location::ZoneEdge)), DesignError::NotAllowed { .. }));
        assert!(matches!(e(DesignRequest::new(3, 3, Location::ZoneEdge)), DesignError::OddAtZoneBoundary { .. }));
        assert!(matches!(e(DesignRequest::new(3, 4, Location::Interior)), DesignError::InteriorTooHigh { .. }));
        assert!(matches!(
            e(DesignRequest::new(3, 6, Location::ZoneEdge).with_free(3, 0.2)),
            DesignError::FreeParameter(_)
        ));
        assert!(matches!(
            e(DesignRequest::new(3, 4, Location::ZoneEdge).with_free(7, 0.2)),
            DesignError::FreeParameter(_)
        ));
    }

    #[test]
    fn third_order_interior_design() {
        let d = design_odd_ep(&DesignRequest::new(3, 3, Location::Interior).with_free(3, 0.25)).unwrap();
        assert_abs_diff_eq!(d.model.hopping(2), 3f64.sqrt() / 4.0, epsilon = 1e-8);
        assert_abs_diff_eq!(d.k0, (-1.0 / 12f64.sqrt()).acos(), epsilon = 1e-8);
        assert_eq!(d.status, DesignStatus::Verified);
    }

    #[test]
    fn third_order_infeasible_outside_window() {
        let r = design_odd_ep(&DesignRequest::new(3, 3, Location::Interior).with_free(3, 0.5));
        assert!(matches!(r, Err(DesignError::NoSolution { .. })), "{r:?}");
    }

    #[test]
    fn range_two_interior_extremum() {
        let t2 = 0.5;
        let d = design_odd_ep(&DesignRequest::new(2, 2, Location::Interior).with_free(2, t2)).unwrap();
        assert_abs_diff_eq!(d.k0, (-1.0 / (4.0 * t2)).acos(), epsilon = 1e-10);
        assert!(design_odd_ep(&DesignRequest::new(2, 2, Location::Interior).with_free(2, 0.2)).is_err());
    }

    #[test]
    fn hypersurface_examples() {
        let pts = hypersurface_sample(3, 4, Location::ZoneEdge, 10).unwrap();
        assert_eq!(pts.len(), 10);
        for p in &pts {
            let d = p.design.as_ref().unwrap();
            let (t2, t3) = (d.model.hopping(2), d.model.hopping(3));
            assert_abs_diff_eq!(t2, 0.25 + 2.25 * t3, epsilon = 1e-12);
        }
        assert_eq!(hypersurface_sample(3, 6, Location::ZoneEdge, 7).unwrap().len(), 1);
        let pts = hypersurface_sample(2, 2, Location::ZoneCenter, 5).unwrap();
        assert_eq!(pts.len(), 5);
        for p in &pts {
            let d = p.design.as_ref().unwrap();
            assert_abs_diff_eq!(d.omega0, -2.0 * (1.0 + d.model.hopping(2)), epsilon = 1e-12);
        }
    }

    #[test]
    fn halton_first_points() {
        assert_eq!(halton(1, 2), vec![0.5, 1.0 / 3.0]);
        assert_eq!(halton(2, 2), vec![0.25, 2.0 / 3.0]);
        assert_eq!(halton(3, 1), vec![0.75]);
    }
}
