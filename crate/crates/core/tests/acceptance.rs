//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Exits 0 so a red criterion does not hide the rest of the workspace tests.
//! Set `TMEP_ACCEPTANCE_STRICT=1` to exit 1 when any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tmep::critical::{self, momentum_matches, CriticalClass, CriticalPoint};
use tmep::designer::{self, DesignRequest, Location};
use tmep::dos::{self, KGrid, Side, DEFAULT_K_STEP, NEAR_EP_STEP_RATIO};
use tmep::verify::{self, VerifyConfig};
use tmep::{ComplexMomentum, LatticeModel};

const SEED: u64 = 42;

type Criterion = (&'static str, &'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new() -> Self {
        Self { passed: true, detail: String::new() }
    }

    fn check(&mut self, ok: bool, what: impl AsRef<str>) {
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        if !ok {
            self.passed = false;
            self.detail.push_str("FAILED ");
        }
        self.detail.push_str(what.as_ref());
    }
}

fn cubic_pair() -> LatticeModel {
    LatticeModel::new(vec![1.0, 3f64.sqrt() / 4.0, 0.25]).unwrap()
}

fn quartic_min() -> LatticeModel {
    LatticeModel::new(vec![1.0, 37.0 / 40.0, 0.3]).unwrap()
}

fn sixth() -> LatticeModel {
    LatticeModel::new(vec![1.0, 0.4, 1.0 / 15.0]).unwrap()
}

fn is_zero(m: &LatticeModel, k: f64, r: u32) -> bool {
    m.derivative_real(k, r).abs() <= critical::CLASSIFY_TOL * m.derivative_scale(r)
}

fn fit(out: &mut Outcome, grid: &KGrid, cp: &CriticalPoint, side: Side, expected: f64, tol: f64) {
    match dos::fit_at(grid, cp, side) {
        Ok(f) => out.check(
            (f.exponent - expected).abs() <= tol,
            format!("k0={:.6} {side:?} exponent {:.4} (want {expected:.4}±{tol}, r²={:.5})", cp.k0, f.exponent, f.r2),
        ),
        Err(e) => out.check(false, format!("k0={:.6} {side:?} fit: {e}", cp.k0)),
    }
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let mut out = Outcome::new();
    let m = cubic_pair();
    let kstar = (-1.0 / 12f64.sqrt()).acos();
    let cps = critical::find_critical_points(&m);
    let pair: Vec<_> = cps.iter().filter(|c| c.order == 3).collect();
    let at = |k: f64| pair.iter().any(|c| (c.k0 - k).abs() <= 1e-8);
    out.check(pair.len() == 2 && at(kstar) && at(-kstar), format!("order-3 pair at ±{kstar:.10}: {}", pair.len()));
    let omega0 = pair.first().map_or(m.energy(kstar), |c| c.omega0);
    match critical::ep_orders_at(&m, omega0) {
        Ok(sites) => {
            let ok = [kstar, -kstar]
                .iter()
                .all(|&k| sites.iter().any(|s| s.order == 3 && momentum_matches(s.z0, k, critical::site_tolerance())));
            out.check(ok, "order-3 EPs of T(ω0) at ±k*");
        }
        Err(e) => out.check(false, format!("ep_orders_at: {e}")),
    }
    match critical::index_from_counts(&m, omega0, 1e-4) {
        Ok(r) => out.check(
            r.index == 0 && r.count_below == r.count_above,
            format!("index {} with c {} -> {}", r.index, r.count_below, r.count_above),
        ),
        Err(e) => out.check(false, format!("index: {e}")),
    }
    let grid = KGrid::new(&m, DEFAULT_K_STEP).unwrap();
    for cp in &pair {
        for side in [Side::Below, Side::Above] {
            fit(&mut out, &grid, cp, side, -2.0 / 3.0, 0.05);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    out.check(secs <= 60.0, format!("{secs:.1} s (limit 60 s)"));
    out
}

fn ac2() -> Outcome {
    let mut out = Outcome::new();
    let m = quartic_min();
    out.check(is_zero(&m, PI, 2) && is_zero(&m, PI, 3), format!(
        "a2(π)={:.1e} a3(π)={:.1e}",
        m.derivative_real(PI, 2),
        m.derivative_real(PI, 3)
    ));
    let a4 = m.derivative_real(PI, 4);
    out.check((a4 - 21.0).abs() <= 1e-8, format!("a4(π)={a4:.12}"));
    let cp = match critical::classify(&m, PI) {
        Ok(cp) => cp,
        Err(e) => {
            out.check(false, format!("classify: {e}"));
            return out;
        }
    };
    out.check(cp.order == 4 && cp.class == CriticalClass::Minimum, format!("order {} {:?}", cp.order, cp.class));
    match critical::ep_orders_at(&m, cp.omega0) {
        Ok(sites) => out.check(
            sites.iter().any(|s| s.order == 4 && momentum_matches(s.z0, PI, critical::site_tolerance())),
            "order-4 EP of T(0.75) at π",
        ),
        Err(e) => out.check(false, format!("ep_orders_at: {e}")),
    }
    match critical::index_at(&m, cp.omega0) {
        Ok(r) => out.check(r.index == 1, format!("index {}", r.index)),
        Err(e) => out.check(false, format!("index: {e}")),
    }
    match critical::index_from_counts(&m, 0.75, 1e-4) {
        Ok(r) => {
            let jump = r.count_above as i64 - r.count_below as i64;
            out.check(jump == 4, format!("c jump {} -> {} = {jump:+} (want +4)", r.count_below, r.count_above));
        }
        Err(e) => out.check(false, format!("c jump: {e}")),
    }
    let grid = KGrid::new(&m, DEFAULT_K_STEP).unwrap();
    fit(&mut out, &grid, &cp, Side::Above, -0.75, 0.05);
    let (lo, hi) = m.band_extent();
    let median = dos::band_curve(&m, &grid, 2001).unwrap().median_within(lo, hi).unwrap();
    let d = 1e-5;
    let below = grid.dos(cp.omega0 - d, d * NEAR_EP_STEP_RATIO).unwrap();
    out.check(below <= 10.0 * median, format!("ν(ω0-1e-5)={below:.4} vs 10×median {:.4}", 10.0 * median));
    out
}

fn ac3() -> Outcome {
    let mut out = Outcome::new();
    let m = sixth();
    let grid = KGrid::new(&m, DEFAULT_K_STEP).unwrap();
    match critical::classify(&m, PI) {
        Ok(cp) => {
            out.check(cp.order == 6 && cp.class == CriticalClass::Maximum, format!("π: order {} {:?}", cp.order, cp.class));
            out.check((cp.leading + 48.0).abs() <= 1e-6, format!("a6(π)={:.10}", cp.leading));
            out.check(cp.index == -1, format!("class index {}", cp.index));
            match critical::index_at(&m, cp.omega0) {
                Ok(r) => out.check(r.index == -1, format!("counted index {} ({} -> {})", r.index, r.count_below, r.count_above)),
                Err(e) => out.check(false, format!("index: {e}")),
            }
            fit(&mut out, &grid, &cp, Side::Below, -5.0 / 6.0, 0.05);
        }
        Err(e) => out.check(false, format!("classify(π): {e}")),
    }
    match critical::classify(&m, 0.0) {
        Ok(cp) => {
            out.check(cp.order == 2 && cp.class == CriticalClass::Minimum, format!("0: order {} {:?}", cp.order, cp.class));
            fit(&mut out, &grid, &cp, Side::Above, -0.5, 0.02);
        }
        Err(e) => out.check(false, format!("classify(0): {e}")),
    }
    let interior = critical::find_critical_points(&m).iter().filter(|c| c.k0.abs() > 1e-9 && (c.k0.abs() - PI).abs() > 1e-9).count();
    out.check(interior == 0, format!("{interior} interior critical points"));
    out
}

fn ac4() -> Outcome {
    let mut out = Outcome::new();
    match designer::design_even_ep(&DesignRequest::new(3, 4, Location::ZoneEdge).with_free(3, 0.3)) {
        Ok(d) => out.check((d.model.hopping(2) - 37.0 / 40.0).abs() <= 1e-12, format!("p=4: t2={:.15}", d.model.hopping(2))),
        Err(e) => out.check(false, format!("p=4: {e}")),
    }
    match designer::design_even_ep(&DesignRequest::new(3, 6, Location::ZoneEdge)) {
        Ok(d) => {
            let (t2, t3) = (d.model.hopping(2), d.model.hopping(3));
            out.check(
                (t2 - 0.4).abs() <= 1e-12 && (t3 - 1.0 / 15.0).abs() <= 1e-12,
                format!("p=6: (t2,t3)=({t2:.15}, {t3:.15})"),
            );
        }
        Err(e) => out.check(false, format!("p=6: {e}")),
    }
    match designer::design_odd_ep(&DesignRequest::new(3, 3, Location::Interior).with_free(3, 0.25)) {
        Ok(d) => {
            let t2 = d.model.hopping(2);
            let k = (-1.0 / 12f64.sqrt()).acos();
            out.check(
                (t2 - 3f64.sqrt() / 4.0).abs() <= 1e-8 && (d.k0 - k).abs() <= 1e-8,
                format!("p=3: t2={t2:.12} k0={:.12}", d.k0),
            );
        }
        Err(e) => out.check(false, format!("p=3: {e}")),
    }
    let orders = designer::allowed_orders(3);
    out.check(orders == [2, 3, 4, 6], format!("allowed_orders(3)={orders:?}"));
    out
}

fn report_check(out: &mut Outcome, report: &verify::VerifyReport, name: &str) {
    match report.checks.iter().find(|c| c.name == name) {
        Some(c) => out.check(
            c.passed,
            format!(
                "{name}: {} cases, {} skipped, {} failures, worst {:.2e} (tol {:.0e}){}",
                c.cases,
                c.skipped,
                c.failures,
                c.worst,
                c.tolerance,
                c.first_failure.as_deref().map(|f| format!(" first: {f}")).unwrap_or_default()
            ),
        ),
        None => out.check(false, format!("{name} missing from report")),
    }
}

fn ac5() -> Outcome {
    let start = Instant::now();
    let mut out = Outcome::new();
    let cfg = VerifyConfig { seed: SEED, models: 200, max_range: 5, spectral_cases: 0, scan_samples: 0, ..VerifyConfig::default() };
    let report = verify::run(&cfg);
    report_check(&mut out, &report, "critical_order_equals_ep_order");
    report_check(&mut out, &report, "no_real_ep_off_critical");
    let secs = start.elapsed().as_secs_f64();
    out.check(secs <= 120.0, format!("{secs:.1} s (limit 120 s)"));
    out
}

fn ac6() -> Outcome {
    let mut out = Outcome::new();
    let cfg = VerifyConfig { seed: SEED, models: 0, spectral_cases: 500, scan_samples: 0, ..VerifyConfig::default() };
    let report = verify::run(&cfg);
    for name in ["transfer_determinant", "spectrum_closure", "route_agreement"] {
        report_check(&mut out, &report, name);
    }
    out
}

fn nearest(z: ComplexMomentum, exact: &[ComplexMomentum]) -> f64 {
    exact.iter().map(|r| z.distance(*r)).fold(f64::INFINITY, f64::min)
}

fn ac7() -> Outcome {
    let mut out = Outcome::new();
    for m in [cubic_pair(), quartic_min(), sixth()] {
        for cp in critical::find_critical_points(&m) {
            let mut ratios = Vec::new();
            let mut counts = None;
            for delta in [1e-4, 1e-6, 1e-8] {
                let s = match critical::ep_splitting(&m, cp.k0, delta) {
                    Ok(s) => s,
                    Err(e) => {
                        out.check(false, format!("{m} k0={:.6}: {e}", cp.k0));
                        continue;
                    }
                };
                let (above, below) = match (
                    critical::exact_splitting_roots(&m, cp.k0, delta, true),
                    critical::exact_splitting_roots(&m, cp.k0, delta, false),
                ) {
                    (Ok(a), Ok(b)) => (a, b),
                    _ => {
                        out.check(false, format!("{m} k0={:.6}: exact roots failed", cp.k0));
                        continue;
                    }
                };
                let err = s
                    .roots_above
                    .iter()
                    .map(|z| nearest(*z, &above))
                    .chain(s.roots_below.iter().map(|z| nearest(*z, &below)))
                    .fold(0.0, f64::max);
                ratios.push(err / s.radius);
                if delta == 1e-4 {
                    counts = Some((s.real_count_above, s.real_count_below));
                    // The predicted real branches are really there.
                    let real = |zs: &[ComplexMomentum]| zs.iter().filter(|z| z.is_real()).count();
                    out.check(
                        real(&above) == s.real_count_above && real(&below) == s.real_count_below,
                        format!(
                            "{m} k0={:.6}: exact real branches ({}, {}) vs predicted ({}, {})",
                            cp.k0,
                            real(&above),
                            real(&below),
                            s.real_count_above,
                            s.real_count_below
                        ),
                    );
                }
            }
            let decreasing = ratios.len() == 3 && ratios.windows(2).all(|w| w[1] < w[0]);
            out.check(decreasing, format!("{m} k0={:.6} p={}: ratios {:?}", cp.k0, cp.order, ratios.iter().map(|r| format!("{r:.2e}")).collect::<Vec<_>>()));
            let expected = match cp.class {
                CriticalClass::Minimum => (2, 0),
                CriticalClass::Maximum => (0, 2),
                CriticalClass::Saddle => (1, 1),
            };
            out.check(counts == Some(expected), format!("real counts {counts:?} for {:?}", cp.class));
        }
    }
    out
}

fn ac8() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for m in [cubic_pair(), quartic_min(), sixth()] {
        let grid = KGrid::new(&m, DEFAULT_K_STEP).unwrap();
        let integral = dos::band_curve(&m, &grid, 20001).unwrap().integral();
        out.check((integral - 1.0).abs() <= 1e-3, format!("{m}: ∫ν={integral:.6}"));

        let (lo, hi) = m.band_extent();
        let bw = hi - lo;
        let samples = 10_000_000usize;
        let energies: Vec<f64> = (0..samples).map(|_| m.energy(rng.gen_range(-PI..PI))).collect();
        let width = 0.01 * bw;
        let mut worst = 0.0f64;
        let mut checked = 0;
        for j in 1..40 {
            let mu = lo + bw * j as f64 / 40.0;
            if grid.critical_energies().iter().any(|e| (e - mu).abs() < 0.05 * bw) {
                continue;
            }
            let hits = energies.iter().filter(|&&e| (e - mu).abs() < 0.5 * width).count();
            let hist = hits as f64 / (samples as f64 * width);
            let num = grid.dos(mu, grid.default_e_step()).unwrap();
            worst = worst.max((num - hist).abs() / hist);
            checked += 1;
        }
        out.check(checked > 0 && worst <= 0.02, format!("{m}: histogram worst {:.2}% over {checked} energies", 100.0 * worst));
    }
    out
}

fn ac9() -> Outcome {
    let mut out = Outcome::new();
    let scan = designer::impossibility_scan(100_000, SEED, designer::SCAN_KAPPA);
    out.check(
        scan.min_residual > verify::SCAN_THRESHOLD && scan.samples == 100_000,
        format!("{} samples, min residual {:.3e} at {:?}", scan.samples, scan.min_residual, scan.argmin),
    );
    out.check(scan.label == "evidence", format!("label {}", scan.label));
    out
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("AC1", "order-3 pair, t = (1, √3/4, 1/4)", ac1),
        ("AC2", "order-4 minimum, t = (1, 37/40, 3/10)", ac2),
        ("AC3", "order-6 maximum, t = (1, 2/5, 1/15)", ac3),
        ("AC4", "designer golden values", ac4),
        ("AC5", "critical order = EP order, 200 models", ac5),
        ("AC6", "spectral invariants, 500 cases", ac6),
        ("AC7", "EP splitting convergence", ac7),
        ("AC8", "DOS normalization and histogram", ac8),
        ("AC9", "order-5 impossibility evidence", ac9),
    ];
    let mut failed = 0;
    for (id, title, run) in criteria {
        let start = Instant::now();
        let o = run();
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        if !o.passed {
            failed += 1;
        }
        println!("{id} {verdict} {title} [{:.1} s]: {}", start.elapsed().as_secs_f64(), o.detail);
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var("TMEP_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
