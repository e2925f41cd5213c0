//! Density of states by counting k-points and differentiating, the analytic
//! law near an exceptional point, and log-log exponent fits.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::critical::{self, CriticalClass, CriticalPoint};
use crate::model::LatticeModel;
use crate::poly::EDGE_TOL;
use crate::transfer::SpectrumError;

/// Default k-grid spacing, `2π · 1e-6`.
pub const DEFAULT_K_STEP: f64 = 2.0 * PI * 1e-6;
/// Default finite-difference step away from critical energies, relative to the bandwidth.
pub const DEFAULT_E_STEP_REL: f64 = 1e-3;
/// Finite-difference step right at a singularity, relative to the bandwidth.
pub const SINGULAR_E_STEP_REL: f64 = 1e-7;
/// Near-EP samples at offset `δ` use `h = δ · NEAR_EP_STEP_RATIO`, so the
/// stencil spans `[δ/2, 3δ/2]` and never crosses `ω0`.
pub const NEAR_EP_STEP_RATIO: f64 = 0.25;
/// Default fit window, in absolute energy offset.
pub const DEFAULT_FIT_WINDOW: (f64, f64) = (1e-6, 1e-3);
pub const DEFAULT_FIT_SAMPLES: usize = 31;
pub const MIN_FIT_SAMPLES: usize = 8;
/// Grid points allowed in one k-grid.
pub const MAX_K_POINTS: usize = 200_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DosError {
    #[error("invalid step {name} = {value}")]
    InvalidStep { name: &'static str, value: f64 },
    #[error("a {class:?} cannot be approached from {side:?}")]
    InconsistentSide { class: CriticalClass, side: Side },
    #[error("fit window has {got} samples, need at least {MIN_FIT_SAMPLES}")]
    TooFewSamples { got: usize },
    #[error("fit window contains the critical energy {energy}")]
    WindowContainsCritical { energy: f64 },
    #[error("nonpositive density {nu} at ω = {omega}")]
    NonPositive { omega: f64, nu: f64 },
    #[error("invalid window ({0}, {1})")]
    InvalidWindow(f64, f64),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Above,
    Below,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Above => 1.0,
            Side::Below => -1.0,
        }
    }
}

/// How the finite-difference step was chosen for a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepRule {
    Fixed,
    ProportionalToOffset { ratio: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub k_step: f64,
    pub fd_order: u32,
    pub e_step: f64,
    pub step_rule: StepRule,
}

/// Band energies on the uniform grid `k_j = -π + j·δk`, `j = 1..N`, sorted.
///
/// Built once, read-only afterwards: `D(E)` is a binary search, so any number
/// of threads can share one grid.
#[derive(Debug, Clone)]
pub struct KGrid {
    k_step: f64,
    energies: Vec<f64>,
    critical: Vec<f64>,
    bandwidth: f64,
}

impl KGrid {
    /// `N = round(2π / k_step)` points; the spacing actually used is `2π / N`.
    pub fn new(model: &LatticeModel, k_step: f64) -> Result<Self, DosError> {
        if !(k_step.is_finite() && k_step > 0.0) {
            return Err(DosError::InvalidStep { name: "k_step", value: k_step });
        }
        let n = (2.0 * PI / k_step).round().max(1.0);
        if n > MAX_K_POINTS as f64 {
            return Err(DosError::InvalidStep { name: "k_step", value: k_step });
        }
        let n = n as usize;
        let dk = 2.0 * PI / n as f64;
        let mut energies: Vec<f64> = (1..=n)
            .map(|j| model.energy(-PI + j as f64 * dk))
            .collect();
        energies.sort_unstable_by(f64::total_cmp);
        Ok(Self {
            k_step: dk,
            energies,
            critical: critical::critical_energies(model),
            bandwidth: model.bandwidth(),
        })
    }

    pub fn k_step(&self) -> f64 {
        self.k_step
    }

    pub fn points(&self) -> usize {
        self.energies.len()
    }

    pub fn critical_energies(&self) -> &[f64] {
        &self.critical
    }

    /// Fraction of grid points with `ε(k) < E`.
    pub fn integrated_dos(&self, e: f64) -> f64 {
        self.energies.partition_point(|&x| x < e) as f64 / self.points() as f64
    }

    fn stencil(&self, mu: f64, h: f64) -> f64 {
        let d = |x: f64| self.integrated_dos(x);
        (-d(mu + 2.0 * h) + 8.0 * d(mu + h) - 8.0 * d(mu - h) + d(mu - 2.0 * h)) / (12.0 * h)
    }

    /// Fourth-order central difference of `D` at `mu`.
    pub fn dos(&self, mu: f64, e_step: f64) -> Result<f64, DosError> {
        if !(e_step.is_finite() && e_step > 0.0) {
            return Err(DosError::InvalidStep { name: "e_step", value: e_step });
        }
        if let Some(e) = self.critical.iter().find(|&&e| (e - mu).abs() <= 2.0 * e_step) {
            log::warn!("stencil at μ = {mu} with h = {e_step:e} straddles the critical energy {e}");
        }
        Ok(self.stencil(mu, e_step))
    }

    pub fn default_e_step(&self) -> f64 {
        DEFAULT_E_STEP_REL * self.bandwidth
    }
}

pub fn integrated_dos(model: &LatticeModel, e: f64, k_step: f64) -> Result<f64, DosError> {
    Ok(KGrid::new(model, k_step)?.integrated_dos(e))
}

pub fn dos_numeric(model: &LatticeModel, mu: f64, k_step: f64, e_step: f64) -> Result<f64, DosError> {
    KGrid::new(model, k_step)?.dos(mu, e_step)
}

/// `A_p = (p-1)! / (π |a_p|) · (|a_p| / p!)^{(p-1)/p}`.
pub fn prefactor(p: u32, a_p: f64) -> f64 {
    let fact = |m: u32| (1..=m).map(f64::from).product::<f64>();
    let a = a_p.abs();
    let pf = f64::from(p);
    fact(p - 1) / (PI * a) * (a / fact(p)).powf((pf - 1.0) / pf)
}

/// Real branches leaving an order-`p` point on `side`: two on the allowed side
/// of an extremum, none on the other, one either way for a saddle.
pub fn real_branches(cp: &CriticalPoint, side: Side) -> usize {
    match (cp.class, side) {
        (CriticalClass::Saddle, _) => 1,
        (CriticalClass::Minimum, Side::Above) | (CriticalClass::Maximum, Side::Below) => 2,
        _ => 0,
    }
}

/// Leading behaviour of `ν(ω0 ± δ)`: each real branch leaving a critical point
/// at `ω0` adds `A_p/2 · δ^{-(p-1)/p}`, and each simple root `x = cos k_*` of
/// the dispersion polynomial at `ω0` adds `1/(π |a_1(k_*)|)` for the pair `±k_*`.
pub fn dos_analytic_near_ep(
    model: &LatticeModel,
    cp: &CriticalPoint,
    delta: f64,
    side: Side,
) -> Result<f64, DosError> {
    if real_branches(cp, side) == 0 {
        return Err(DosError::InconsistentSide { class: cp.class, side });
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(DosError::InvalidStep { name: "delta", value: delta });
    }
    let omega0 = cp.omega0;
    let same_energy = 1e-12 * model.bandwidth().max(1.0);
    let singular: f64 = critical::find_critical_points(model)
        .iter()
        .filter(|c| (c.omega0 - omega0).abs() <= same_energy)
        .map(|c| {
            let pf = f64::from(c.order);
            real_branches(c, side) as f64 * 0.5 * prefactor(c.order, c.leading)
                * delta.powf(-(pf - 1.0) / pf)
        })
        .sum();
    Ok(singular + background_at(model, omega0)?)
}

fn background_at(model: &LatticeModel, omega0: f64) -> Result<f64, DosError> {
    let clusters = model
        .dispersion_polynomial(omega0)
        .root_clusters()
        .map_err(SpectrumError::from)?;
    Ok(clusters
        .iter()
        .filter(|c| c.multiplicity == 1 && c.is_real() && c.center.re.abs() < 1.0 - EDGE_TOL)
        .map(|c| 1.0 / (PI * model.derivative_real(c.center.re.acos(), 1).abs()))
        .sum())
}

/// Sampled `ν(ω)`. Samples whose stencil straddles a critical energy (within
/// `2·e_step` of it) can undershoot below zero; everywhere else `ν ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DosCurve {
    pub energies: Vec<f64>,
    pub values: Vec<f64>,
    pub grid: GridSpec,
    pub critical_energies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DosSidecar {
    pub grid: GridSpec,
    pub samples: usize,
    pub critical_energies: Vec<f64>,
}

impl DosCurve {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["omega", "nu"])?;
        for (e, v) in self.energies.iter().zip(&self.values) {
            out.serialize((e, v))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn sidecar(&self) -> DosSidecar {
        DosSidecar {
            grid: self.grid,
            samples: self.len(),
            critical_energies: self.critical_energies.clone(),
        }
    }

    /// Trapezoidal `∫ ν dω`.
    pub fn integral(&self) -> f64 {
        self.energies
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(e, v)| 0.5 * (e[1] - e[0]) * (v[0] + v[1]))
            .sum()
    }

    /// Median of `ν` over samples strictly inside `(lo, hi)`.
    pub fn median_within(&self, lo: f64, hi: f64) -> Option<f64> {
        let mut v: Vec<f64> = self
            .energies
            .iter()
            .zip(&self.values)
            .filter(|(e, _)| **e > lo && **e < hi)
            .map(|(_, v)| *v)
            .collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(v[v.len() / 2])
    }
}

/// `points` samples spanning the band with a 2% margin on each side. The
/// stencil step equals the sample spacing, so the trapezoidal integral
/// telescopes to `D(far above) - D(far below)`.
pub fn band_curve(model: &LatticeModel, grid: &KGrid, points: usize) -> Result<DosCurve, DosError> {
    let (lo, hi) = model.band_extent();
    let margin = 0.02 * (hi - lo);
    let (a, b) = (lo - margin, hi + margin);
    let points = points.max(5);
    let h = (b - a) / (points - 1) as f64;
    let energies: Vec<f64> = (0..points).map(|i| a + i as f64 * h).collect();
    let values = energies.iter().map(|&e| grid.stencil(e, h)).collect();
    Ok(DosCurve {
        energies,
        values,
        grid: GridSpec { k_step: grid.k_step(), fd_order: 4, e_step: h, step_rule: StepRule::Fixed },
        critical_energies: grid.critical_energies().to_vec(),
    })
}

fn log_spaced(window: (f64, f64), samples: usize) -> Result<Vec<f64>, DosError> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) {
        return Err(DosError::InvalidWindow(lo, hi));
    }
    if samples < 2 {
        return Err(DosError::TooFewSamples { got: samples });
    }
    let (l0, l1) = (lo.ln(), hi.ln());
    Ok((0..samples)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (samples - 1) as f64).exp())
        .collect())
}

/// Log-spaced samples of `ν(ω0 ± δ)` over `window`, with step `δ/4` at each `δ`.
pub fn near_ep_curve(
    grid: &KGrid,
    omega0: f64,
    side: Side,
    window: (f64, f64),
    samples: usize,
) -> Result<DosCurve, DosError> {
    let deltas = log_spaced(window, samples)?;
    let mut pairs: Vec<(f64, f64)> = deltas
        .iter()
        .map(|&d| {
            let mu = omega0 + side.sign() * d;
            (mu, grid.stencil(mu, d * NEAR_EP_STEP_RATIO))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(DosCurve {
        energies: pairs.iter().map(|p| p.0).collect(),
        values: pairs.iter().map(|p| p.1).collect(),
        grid: GridSpec {
            k_step: grid.k_step(),
            fd_order: 4,
            e_step: window.0 * NEAR_EP_STEP_RATIO,
            step_rule: StepRule::ProportionalToOffset { ratio: NEAR_EP_STEP_RATIO },
        },
        critical_energies: grid.critical_energies().to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    pub omega0: f64,
    pub side: Side,
    pub window: (f64, f64),
    pub samples: usize,
    pub exponent: f64,
    pub prefactor: f64,
    pub r2: f64,
}

/// Least-squares slope of `ln ν` against `ln δ` for the curve samples on `side`
/// of `omega0` with `δ` inside `window`.
pub fn fit_exponent(
    curve: &DosCurve,
    omega0: f64,
    side: Side,
    window: (f64, f64),
) -> Result<ExponentFit, DosError> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(DosError::InvalidWindow(lo, hi));
    }
    let scale = omega0.abs().max(1.0);
    if let Some(&energy) = curve.critical_energies.iter().find(|&&e| {
        let off = side.sign() * (e - omega0);
        off > 1e-12 * scale && off <= hi
    }) {
        return Err(DosError::WindowContainsCritical { energy });
    }
    let slack = 1e-9;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&e, &nu) in curve.energies.iter().zip(&curve.values) {
        let d = side.sign() * (e - omega0);
        if d >= lo * (1.0 - slack) && d <= hi * (1.0 + slack) {
            if nu <= 0.0 {
                return Err(DosError::NonPositive { omega: e, nu });
            }
            xs.push(d.ln());
            ys.push(nu.ln());
        }
    }
    if xs.len() < MIN_FIT_SAMPLES {
        return Err(DosError::TooFewSamples { got: xs.len() });
    }
    let (slope, intercept, r2) = least_squares(&xs, &ys);
    Ok(ExponentFit {
        omega0,
        side,
        window,
        samples: xs.len(),
        exponent: slope,
        prefactor: intercept.exp(),
        r2,
    })
}

/// Ordinary least squares `y = slope·x + intercept`, with `r²`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, intercept, r2)
}

/// Fit at a critical point from the grid, over the default window.
pub fn fit_at(grid: &KGrid, cp: &CriticalPoint, side: Side) -> Result<ExponentFit, DosError> {
    let curve = near_ep_curve(grid, cp.omega0, side, DEFAULT_FIT_WINDOW, DEFAULT_FIT_SAMPLES)?;
    fit_exponent(&curve, cp.omega0, side, DEFAULT_FIT_WINDOW)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn nn() -> LatticeModel {
        LatticeModel::new(vec![1.0]).unwrap()
    }

    #[test]
    fn integrated_dos_limits() {
        let g = KGrid::new(&nn(), 2.0 * PI * 1e-4).unwrap();
        assert_eq!(g.integrated_dos(-2.5), 0.0);
        assert_eq!(g.integrated_dos(2.5), 1.0);
        // Exact counting oracle: ε < 0 iff |k| < π/2 on the half-open grid.
        let n = g.points();
        let brute = (1..=n)
            .filter(|&j| -2.0 * (-PI + j as f64 * 2.0 * PI / n as f64).cos() < 0.0)
            .count();
        assert_eq!(g.integrated_dos(0.0), brute as f64 / n as f64);
        assert_abs_diff_eq!(g.integrated_dos(0.0), 0.5, epsilon = 1e-4);
    }

    #[test]
    fn cosine_band_centre() {
        let g = KGrid::new(&nn(), DEFAULT_K_STEP).unwrap();
        let nu = g.dos(0.0, g.default_e_step()).unwrap();
        assert_abs_diff_eq!(nu, 1.0 / (2.0 * PI), epsilon = 1e-3);
    }

    #[test]
    fn prefactor_matches_cosine_band_edge() {
        // ν(-2 + δ) = 1/(π sqrt(δ(4 - δ))) ≈ δ^{-1/2} / (2π).
        assert_abs_diff_eq!(prefactor(2, 2.0), 1.0 / (2.0 * PI), epsilon = 1e-15);
        let cp = critical::classify(&nn(), 0.0).unwrap();
        let d: f64 = 1e-8;
        let exact = 1.0 / (PI * (d * (4.0 - d)).sqrt());
        let approx = dos_analytic_near_ep(&nn(), &cp, d, Side::Above).unwrap();
        assert!((approx / exact - 1.0).abs() < 1e-7);
        assert!(matches!(
            dos_analytic_near_ep(&nn(), &cp, d, Side::Below),
            Err(DosError::InconsistentSide { .. })
        ));
    }

    #[test]
    fn saddle_is_symmetric() {
        let m = LatticeModel::new(vec![1.0, 3f64.sqrt() / 4.0, 0.25]).unwrap();
        let k = (-1.0 / 12f64.sqrt()).acos();
        let cp = critical::classify(&m, k).unwrap();
        let a = dos_analytic_near_ep(&m, &cp, 1e-5, Side::Above).unwrap();
        let b = dos_analytic_near_ep(&m, &cp, 1e-5, Side::Below).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-12 * a);
    }

    #[test]
    fn fourth_order_point_background() {
        let m = LatticeModel::new(vec![1.0, 37.0 / 40.0, 0.3]).unwrap();
        let cp = critical::classify(&m, PI).unwrap();
        let d = 1e-5;
        let full = dos_analytic_near_ep(&m, &cp, d, Side::Above).unwrap();
        let ep = prefactor(4, 21.0) * d.powf(-0.75);
        // Background from the two simple crossings of ε = 0.75, found by bisection.
        let f = |k: f64| m.energy(k) - 0.75;
        let crossing = {
            let (mut lo, mut hi) = (0.0, 2.0);
            assert!(f(lo) * f(hi) < 0.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(lo) * f(mid) <= 0.0 { hi = mid } else { lo = mid }
            }
            0.5 * (lo + hi)
        };
        let bg = 1.0 / (PI * m.derivative_real(crossing, 1).abs());
        assert_abs_diff_eq!(full, ep + bg, epsilon = 1e-9 * full);
    }

    #[test]
    fn band_curve_normalised() {
        let m = LatticeModel::new(vec![1.0, 37.0 / 40.0, 0.3]).unwrap();
        let g = KGrid::new(&m, 2.0 * PI * 1e-5).unwrap();
        let c = band_curve(&m, &g, 2001).unwrap();
        assert_abs_diff_eq!(c.integral(), 1.0, epsilon = 1e-9);
        let h = c.grid.e_step;
        for (e, v) in c.energies.iter().zip(&c.values) {
            if *v < 0.0 {
                assert!(c.critical_energies.iter().any(|x| (x - e).abs() <= 2.0 * h), "ν({e}) = {v}");
            }
        }
    }

    #[test]
    fn least_squares_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, -1.0, -3.0, -5.0];
        let (s, i, r2) = least_squares(&xs, &ys);
        assert_abs_diff_eq!(s, -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(i, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r2, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn cosine_edge_exponent() {
        let g = KGrid::new(&nn(), DEFAULT_K_STEP).unwrap();
        let cp = critical::classify(&nn(), 0.0).unwrap();
        let fit = fit_at(&g, &cp, Side::Above).unwrap();
        assert!((fit.exponent + 0.5).abs() < 0.02, "{fit:?}");
    }

    #[test]
    fn fit_rejects_intruding_critical_energy() {
        let g = KGrid::new(&nn(), 2.0 * PI * 1e-4).unwrap();
        let c = near_ep_curve(&g, -2.0, Side::Above, (1e-3, 1.0), 10).unwrap();
        assert!(fit_exponent(&c, -2.0, Side::Above, (0.1, 5.0)).is_err());
        let mut c2 = c.clone();
        c2.energies.truncate(3);
        c2.values.truncate(3);
        assert!(matches!(
            fit_exponent(&c2, -2.0, Side::Above, (1e-3, 1.0)),
            Err(DosError::TooFewSamples { .. })
        ));
    }
}
