//! Seeded, reproducible invariant checks over random models.
//!
//! The report contains no timings or addresses, so the same configuration
//! serializes to the same bytes on every run.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::critical::{self, momentum_matches};
use crate::designer;
use crate::model::LatticeModel;
use crate::transfer::{self, build_transfer, max_pairing_distance, TransferMatrix};

pub type TransferBuilder = fn(&LatticeModel, f64) -> TransferMatrix;

pub const DET_TOL: f64 = 1e-10;
pub const CLOSURE_TOL: f64 = 1e-10;
pub const ROUTE_TOL: f64 = 1e-7;
/// Spectra with two eigenvalues closer than this (relative) skip the route check.
pub const ROUTE_MIN_GAP: f64 = 1e-3;
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-9;
pub const SCAN_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy)]
pub struct VerifyConfig {
    pub seed: u64,
    pub models: usize,
    /// Largest hopping range for the critical-point checks.
    pub max_range: usize,
    /// Largest hopping range for the spectral checks.
    pub spectral_max_range: usize,
    pub spectral_cases: usize,
    pub scan_samples: usize,
    pub builder: TransferBuilder,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            models: 200,
            max_range: 4,
            spectral_max_range: 6,
            spectral_cases: 500,
            scan_samples: 100_000,
            builder: build_transfer,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub kind: &'static str,
    pub passed: bool,
    pub cases: usize,
    pub skipped: usize,
    pub failures: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub first_failure: Option<String>,
}

impl CheckResult {
    fn new(name: &str, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            kind: "invariant",
            passed: true,
            cases: 0,
            skipped: 0,
            failures: 0,
            worst: 0.0,
            tolerance,
            first_failure: None,
        }
    }

    fn record(&mut self, error: f64, context: impl FnOnce() -> String) {
        self.cases += 1;
        self.worst = self.worst.max(error);
        if !(error <= self.tolerance) {
            self.failures += 1;
            self.passed = false;
            if self.first_failure.is_none() {
                self.first_failure = Some(context());
            }
        }
    }

    fn record_bool(&mut self, ok: bool, context: impl FnOnce() -> String) {
        self.record(if ok { 0.0 } else { 1.0 }, context);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub models: usize,
    pub max_range: usize,
    pub spectral_max_range: usize,
    pub spectral_cases: usize,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

/// `t_1 = 1`, inner hoppings uniform in `[-0.8, 0.8]`, last hopping of
/// magnitude in `[0.05, 0.8]` with random sign.
pub fn random_model<R: Rng>(rng: &mut R, max_range: usize) -> LatticeModel {
    let n = rng.gen_range(1..=max_range.max(1));
    let mut t = vec![1.0];
    if n > 1 {
        for _ in 2..n {
            t.push(rng.gen_range(-0.8..0.8));
        }
        let last: f64 = rng.gen_range(0.05..0.8);
        t.push(if rng.gen_bool(0.5) { last } else { -last });
    }
    LatticeModel::new(t).expect("generated hoppings are valid")
}

/// Energy uniform over the band widened by 10% on each side.
pub fn random_energy<R: Rng>(rng: &mut R, model: &LatticeModel) -> f64 {
    let (lo, hi) = model.band_extent();
    let bw = hi - lo;
    rng.gen_range(lo - 0.1 * bw..hi + 0.1 * bw)
}

/// A deliberately wrong builder: the first row is scaled by 1.001, so
/// `det T = 1.001`. Used as a negative control.
pub fn corrupted_transfer(model: &LatticeModel, omega: f64) -> TransferMatrix {
    let t = build_transfer(model, omega);
    let mut m = t.entries.clone();
    m.row_mut(0).scale_mut(1.001);
    TransferMatrix::from_entries(omega, m)
}

fn spectral_checks(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Vec<CheckResult> {
    let mut det = CheckResult::new("transfer_determinant", DET_TOL);
    let mut closure = CheckResult::new("spectrum_closure", CLOSURE_TOL);
    let mut routes = CheckResult::new("route_agreement", ROUTE_TOL);
    let mut eig = CheckResult::new("eigenrelation_residual", EIGEN_RESIDUAL_TOL);
    for case in 0..cfg.spectral_cases {
        let m = random_model(rng, cfg.spectral_max_range);
        let omega = random_energy(rng, &m);
        let ctx = || format!("case {case}: {m} at ω = {omega}");
        let t = (cfg.builder)(&m, omega);
        det.record((t.determinant() - 1.0).abs(), ctx);

        let set = match transfer::spectrum_via_dispersion(&m, omega) {
            Ok(s) => s,
            Err(e) => {
                closure.record(f64::INFINITY, || format!("{}: {e}", ctx()));
                continue;
            }
        };
        let l = set.lambdas();
        let conj: Vec<_> = l.iter().map(|z| z.conj()).collect();
        let inv: Vec<_> = l.iter().map(|z| z.inv()).collect();
        closure.record(
            max_pairing_distance(&l, &conj).max(max_pairing_distance(&l, &inv)),
            ctx,
        );

        let min_gap = l
            .iter()
            .enumerate()
            .flat_map(|(i, a)| l[i + 1..].iter().map(move |b| (a - b).norm() / a.norm().max(1.0)))
            .fold(f64::INFINITY, f64::min);
        if min_gap > ROUTE_MIN_GAP {
            match transfer::spectrum_direct(&t) {
                Ok(d) => routes.record(max_pairing_distance(&l, &d.lambdas()), ctx),
                Err(e) => routes.record(f64::INFINITY, || format!("{}: {e}", ctx())),
            }
        } else {
            routes.skipped += 1;
        }

        let worst = set
            .records
            .iter()
            .map(|r| {
                let v = DVector::from_vec(transfer::eigenvector(&m, r.z.0));
                t.residual(r.lambda, &v) / (t.frobenius_norm() * v.norm())
            })
            .fold(0.0, f64::max);
        eig.record(worst, ctx);
    }
    vec![det, closure, routes, eig]
}

fn critical_checks(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Vec<CheckResult> {
    let mut equivalence = CheckResult::new("critical_order_equals_ep_order", 0.0);
    let mut converse = CheckResult::new("no_real_ep_off_critical", 0.0);
    let mut index = CheckResult::new("index_matches_class", 0.0);
    let tol = critical::site_tolerance();
    for case in 0..cfg.models {
        let m = random_model(rng, cfg.max_range);
        let cps = critical::find_critical_points(&m);
        let (lo, hi) = m.band_extent();
        let omega = rng.gen_range(lo..hi);
        if cps.iter().any(|c| (c.omega0 - omega).abs() < 1e-3 * m.bandwidth()) {
            converse.skipped += 1;
        } else {
            match critical::ep_orders_at(&m, omega) {
                Ok(sites) => converse.record_bool(!sites.iter().any(|s| s.z0.is_real()), || {
                    format!("model {case}: {m} at ω = {omega} has real sites {sites:?}")
                }),
                Err(e) => converse.record(f64::INFINITY, || format!("model {case}: {e}")),
            }
        }
        for cp in &cps {
            let ctx = || format!("model {case}: {m}, k0 = {}", cp.k0);
            match critical::ep_orders_at(&m, cp.omega0) {
                Ok(sites) => {
                    // Critical point to exceptional point.
                    let found = sites.iter().find(|s| momentum_matches(s.z0, cp.k0, tol));
                    equivalence.record_bool(found.is_some_and(|s| s.order == cp.order), || {
                        format!("{}: order {} vs sites {:?}", ctx(), cp.order, sites)
                    });
                    // Real exceptional point to critical point.
                    for s in sites.iter().filter(|s| s.z0.is_real()) {
                        let back = cps.iter().find(|c| momentum_matches(s.z0, c.k0, tol));
                        equivalence.record_bool(back.is_some_and(|c| c.order == s.order), || {
                            format!("{}: site {:?} has no matching critical point", ctx(), s)
                        });
                    }
                }
                Err(e) => equivalence.record(f64::INFINITY, || format!("{}: {e}", ctx())),
            }
            let same_energy: Vec<_> = cps
                .iter()
                .filter(|c| (c.omega0 - cp.omega0).abs() <= 1e-9 * m.bandwidth())
                .collect();
            if same_energy.iter().any(|c| c.index != cp.index) {
                index.skipped += 1;
                continue;
            }
            match critical::index_at(&m, cp.omega0) {
                Ok(rep) => index.record_bool(rep.index == cp.index, || {
                    format!("{}: counted index {} vs class index {}", ctx(), rep.index, cp.index)
                }),
                Err(e) => index.record(f64::INFINITY, || format!("{}: {e}", ctx())),
            }
        }
    }
    vec![equivalence, converse, index]
}

fn scan_check(cfg: &VerifyConfig) -> CheckResult {
    let scan = designer::impossibility_scan(cfg.scan_samples, cfg.seed, designer::SCAN_KAPPA);
    CheckResult {
        name: "order_five_absent_for_range_three".to_string(),
        kind: "evidence",
        passed: scan.min_residual > SCAN_THRESHOLD,
        cases: scan.samples,
        skipped: 0,
        failures: usize::from(scan.min_residual <= SCAN_THRESHOLD),
        worst: scan.min_residual,
        tolerance: SCAN_THRESHOLD,
        first_failure: (scan.min_residual <= SCAN_THRESHOLD)
            .then(|| format!("residual {:e} at (k0, t2, t3) = {:?}", scan.min_residual, scan.argmin)),
    }
}

pub fn run(cfg: &VerifyConfig) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = spectral_checks(cfg, &mut rng);
    checks.extend(critical_checks(cfg, &mut rng));
    if cfg.scan_samples > 0 {
        checks.push(scan_check(cfg));
    }
    VerifyReport {
        seed: cfg.seed,
        models: cfg.models,
        max_range: cfg.max_range,
        spectral_max_range: cfg.spectral_max_range,
        spectral_cases: cfg.spectral_cases,
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}
