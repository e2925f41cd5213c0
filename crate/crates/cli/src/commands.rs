use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use serde::Serialize;
use tmep::critical::{self, CriticalPoint, EpSite, IndexReport};
use tmep::designer::{self, DesignError, DesignRequest};
use tmep::dos::{self, DosCurve, ExponentFit, GridSpec, KGrid, Side};
use tmep::transfer::{self, EigenSet};
use tmep::verify::{self, VerifyConfig};
use tmep::{poly, LatticeModel};

use crate::{AnalyzeArgs, DesignArgs, DosArgs, Failure, ModelSource, SweepArgs, VerifyArgs};

type Outcome = Result<(), Failure>;

/// `t3=0.3` → `(3, 0.3)`.
pub fn parse_free(s: &str) -> Result<(usize, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected tM=VALUE, got '{s}'"))?;
    let m = name
        .trim()
        .strip_prefix('t')
        .and_then(|m| m.parse::<usize>().ok())
        .ok_or_else(|| format!("expected a hopping name like t3, got '{name}'"))?;
    let v: f64 = value.trim().parse().map_err(|e| format!("bad value '{value}': {e}"))?;
    if !v.is_finite() {
        return Err(format!("t{m} must be finite"));
    }
    Ok((m, v))
}

fn load_model(src: &ModelSource) -> Result<LatticeModel, Failure> {
    if let Some(t) = &src.hoppings {
        return LatticeModel::new(t.clone()).map_err(Failure::invalid);
    }
    let path = src.model.as_ref().expect("clap enforces one model source");
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::invalid)?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing model {}", path.display()))
        .map_err(Failure::invalid)
}

fn positive(name: &str, v: f64) -> Result<(), Failure> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Failure::invalid(anyhow!("--{name} must be positive and finite, got {v}")))
    }
}

fn at_least(name: &str, v: usize, min: usize) -> Result<(), Failure> {
    if v >= min {
        Ok(())
    } else {
        Err(Failure::invalid(anyhow!("--{name} must be at least {min}, got {v}")))
    }
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Outcome {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(Failure::failed)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_csv<R: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = R>) -> Outcome {
    let mut w = csv::Writer::from_path(path).map_err(Failure::failed)?;
    w.write_record(header).map_err(Failure::failed)?;
    for r in rows {
        w.serialize(r).map_err(Failure::failed)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Tolerances {
    multiplicity: f64,
    edge: f64,
    simple_edge: f64,
    ill_conditioned_gap: f64,
    classify: f64,
    unit_modulus: f64,
    site_match: f64,
}

fn tolerances() -> Tolerances {
    Tolerances {
        multiplicity: poly::MULTIPLICITY_TOL,
        edge: poly::EDGE_TOL,
        simple_edge: poly::SIMPLE_EDGE_TOL,
        ill_conditioned_gap: poly::ILL_CONDITIONED_GAP,
        classify: critical::CLASSIFY_TOL,
        unit_modulus: transfer::DEFAULT_UNIT_TOL,
        site_match: critical::site_tolerance(),
    }
}

#[derive(Serialize)]
struct EnergySites {
    omega0: f64,
    sites: Vec<EpSite>,
}

#[derive(Serialize)]
struct AnalyzeMeta<'a> {
    command: &'static str,
    version: &'static str,
    model: &'a LatticeModel,
    band: (f64, f64),
    bandwidth: f64,
    critical_energies: Vec<f64>,
    sweep_range: (f64, f64),
    sweep_points: usize,
    dispersion_points: usize,
    index_delta: Option<f64>,
    tolerances: Tolerances,
}

pub fn analyze(args: &AnalyzeArgs) -> Outcome {
    let model = load_model(&args.source)?;
    at_least("sweep-points", args.sweep_points, 2)?;
    at_least("dispersion-points", args.dispersion_points, 2)?;
    if let Some(d) = args.delta {
        positive("delta", d)?;
    }

    let cps = critical::find_critical_points(&model);
    let energies = critical::critical_energies(&model);
    let sites = energies
        .iter()
        .map(|&omega0| {
            critical::ep_orders_at(&model, omega0)
                .map(|sites| EnergySites { omega0, sites })
                .map_err(Failure::unconverged)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let indices: Vec<IndexReport> = cps
        .iter()
        .map(|cp| match args.delta {
            Some(d) => critical::index_from_counts(&model, cp.omega0, d),
            None => critical::index_at(&model, cp.omega0),
        })
        .collect::<Result<_, _>>()
        .map_err(Failure::unconverged)?;

    let (lo, hi) = model.band_extent();
    let bw = hi - lo;
    let (a, b) = (lo - 0.05 * bw, hi + 0.05 * bw);
    let n = args.sweep_points;
    let sweep: Vec<EigenSet> = (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .map(|w| transfer::spectrum_via_dispersion(&model, w))
        .collect::<Result<_, _>>()
        .map_err(Failure::unconverged)?;

    fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("critical_points.json"), &cps)?;
    write_json(&args.out.join("exceptional_points.json"), &sites)?;
    write_json(&args.out.join("index.json"), &indices)?;
    let file = BufWriter::new(File::create(args.out.join("eigenvalues.csv"))?);
    transfer::write_eigen_csv(file, &sweep).map_err(Failure::failed)?;
    write_csv(
        &args.out.join("unit_count.csv"),
        &["omega", "c"],
        sweep.iter().map(|s| (s.omega, s.unit_count())),
    )?;
    let m = args.dispersion_points;
    write_csv(
        &args.out.join("dispersion.csv"),
        &["k", "epsilon"],
        (0..m).map(|i| {
            let k = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / (m - 1) as f64;
            (k, model.energy(k))
        }),
    )?;
    write_json(
        &args.out.join("metadata.json"),
        &AnalyzeMeta {
            command: "analyze",
            version: env!("CARGO_PKG_VERSION"),
            model: &model,
            band: (lo, hi),
            bandwidth: bw,
            critical_energies: energies,
            sweep_range: (a, b),
            sweep_points: n,
            dispersion_points: m,
            index_delta: args.delta,
            tolerances: tolerances(),
        },
    )?;
    for cp in &cps {
        println!(
            "k0 = {:+.12}  ω0 = {:+.12}  p = {}  a_p = {:+.6e}  index = {:+}  {:?}",
            cp.k0, cp.omega0, cp.order, cp.leading, cp.index, cp.class
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct FitEntry {
    omega0: f64,
    side: Side,
    /// Critical momenta sharing this energy.
    k0: Vec<f64>,
    order: u32,
    expected_exponent: f64,
    fit: Option<ExponentFit>,
    error: Option<String>,
}

#[derive(Serialize)]
struct DosMeta<'a> {
    command: &'static str,
    version: &'static str,
    model: &'a LatticeModel,
    k_points: usize,
    band_curve: dos::DosSidecar,
    near_ep: Option<GridSpec>,
    fit_window: (f64, f64),
    fit_samples: usize,
    integral: f64,
    tolerances: Tolerances,
}

/// Critical points grouped by energy, each group with the sides that carry
/// real branches.
fn fit_targets<'a>(model: &LatticeModel, cps: &'a [CriticalPoint]) -> Vec<(f64, Side, Vec<&'a CriticalPoint>)> {
    let same = 1e-12 * model.bandwidth().max(1.0);
    let mut out: Vec<(f64, Side, Vec<&'a CriticalPoint>)> = Vec::new();
    for &omega0 in &critical::critical_energies(model) {
        let group: Vec<&CriticalPoint> = cps.iter().filter(|c| (c.omega0 - omega0).abs() <= same).collect();
        for side in [Side::Below, Side::Above] {
            let live: Vec<&CriticalPoint> =
                group.iter().copied().filter(|c| dos::real_branches(c, side) > 0).collect();
            if !live.is_empty() {
                out.push((omega0, side, live));
            }
        }
    }
    out
}

pub fn dos(args: &DosArgs) -> Outcome {
    let model = load_model(&args.source)?;
    positive("k-step", args.k_step)?;
    let k_points = (2.0 * std::f64::consts::PI / args.k_step).round();
    if k_points > dos::MAX_K_POINTS as f64 {
        return Err(Failure::invalid(anyhow!(
            "--k-step {} needs {k_points} grid points, more than {}",
            args.k_step,
            dos::MAX_K_POINTS
        )));
    }
    let window = (args.fit_window[0], args.fit_window[1]);
    if !(window.0 > 0.0 && window.1 > window.0 && window.1.is_finite()) {
        return Err(Failure::invalid(anyhow!("--fit-window needs 0 < LO < HI, got {window:?}")));
    }
    at_least("fit-samples", args.fit_samples, dos::MIN_FIT_SAMPLES)?;
    let (lo, hi) = model.band_extent();
    // The band curve spans the band plus 2% margins.
    let span = 1.04 * (hi - lo);
    let points = match args.e_step {
        Some(h) => {
            positive("e-step", h)?;
            let p = (span / h).ceil() + 1.0;
            if p > 1e8 {
                return Err(Failure::invalid(anyhow!("--e-step {h} needs {p} samples")));
            }
            p as usize
        }
        None => {
            at_least("points", args.points, 5)?;
            args.points
        }
    };

    let grid = KGrid::new(&model, args.k_step).map_err(Failure::invalid)?;
    let curve = dos::band_curve(&model, &grid, points).map_err(Failure::invalid)?;
    let cps = critical::find_critical_points(&model);
    let mut near: Vec<(f64, Side, DosCurve)> = Vec::new();
    let mut fits = Vec::new();
    for (omega0, side, group) in fit_targets(&model, &cps) {
        let order = group.iter().map(|c| c.order).max().unwrap_or(2);
        let c = dos::near_ep_curve(&grid, omega0, side, window, args.fit_samples).map_err(Failure::invalid)?;
        let (fit, error) = match dos::fit_exponent(&c, omega0, side, window) {
            Ok(f) => (Some(f), None),
            Err(e) => {
                log::warn!("no fit at ω0 = {omega0} ({side:?}): {e}");
                (None, Some(e.to_string()))
            }
        };
        fits.push(FitEntry {
            omega0,
            side,
            k0: group.iter().map(|c| c.k0).collect(),
            order,
            expected_exponent: -(f64::from(order) - 1.0) / f64::from(order),
            fit,
            error,
        });
        near.push((omega0, side, c));
    }

    fs::create_dir_all(&args.out)?;
    let file = BufWriter::new(File::create(args.out.join("dos.csv"))?);
    curve.write_csv(file).map_err(Failure::failed)?;
    write_csv(
        &args.out.join("near_ep.csv"),
        &["omega0", "side", "delta", "omega", "nu"],
        near.iter().flat_map(|(omega0, side, c)| {
            c.energies.iter().zip(&c.values).map(move |(&w, &nu)| {
                let name = if *side == Side::Above { "above" } else { "below" };
                (*omega0, name, (w - omega0).abs(), w, nu)
            })
        }),
    )?;
    write_json(&args.out.join("fits.json"), &fits)?;
    write_json(
        &args.out.join("dos_meta.json"),
        &DosMeta {
            command: "dos",
            version: env!("CARGO_PKG_VERSION"),
            model: &model,
            k_points: grid.points(),
            band_curve: curve.sidecar(),
            near_ep: near.first().map(|n| n.2.grid),
            fit_window: window,
            fit_samples: args.fit_samples,
            integral: curve.integral(),
            tolerances: tolerances(),
        },
    )?;
    for f in &fits {
        match &f.fit {
            Some(fit) => println!(
                "ω0 = {:+.10} {:<5} p = {}  exponent {:+.4} (expected {:+.4}, r² = {:.5})",
                f.omega0,
                format!("{:?}", f.side).to_lowercase(),
                f.order,
                fit.exponent,
                f.expected_exponent,
                fit.r2
            ),
            None => println!("ω0 = {:+.10} no fit: {}", f.omega0, f.error.as_deref().unwrap_or("")),
        }
    }
    Ok(())
}

fn design_failure(e: DesignError) -> Failure {
    match e {
        DesignError::Singular | DesignError::NoSolution { .. } | DesignError::Spectrum(_) => Failure::unconverged(e),
        _ => Failure::invalid(e),
    }
}

fn design_request(n: usize, p: u32, location: designer::Location, free: &[(usize, f64)]) -> Result<DesignRequest, Failure> {
    let mut req = DesignRequest::new(n, p, location);
    for &(m, v) in free {
        if req.free.insert(m, v).is_some() {
            return Err(Failure::invalid(anyhow!("t{m} given more than once")));
        }
    }
    Ok(req)
}

pub fn design(args: &DesignArgs) -> Outcome {
    let req = design_request(args.n, args.order, args.location, &args.free)?;
    let result = designer::design(&req).map_err(design_failure)?;
    let json = serde_json::to_string_pretty(&result).map_err(Failure::failed)?;
    if let Some(out) = &args.out {
        fs::create_dir_all(out)?;
        write_json(&out.join("design.json"), &result)?;
    }
    println!("{json}");
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    sample: usize,
    hoppings: String,
    k0: Option<f64>,
    omega0: Option<f64>,
    order: Option<u32>,
    status: String,
}

pub fn sweep(args: &SweepArgs) -> Outcome {
    at_least("count", args.count, 1)?;
    let points =
        designer::hypersurface_sample(args.n, args.order, args.location, args.count).map_err(design_failure)?;
    fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("hypersurface.json"), &points)?;
    let rows: Vec<SweepRow> = points
        .iter()
        .enumerate()
        .map(|(i, p)| match &p.design {
            Some(d) => SweepRow {
                sample: i,
                hoppings: d.model.hoppings().iter().map(f64::to_string).collect::<Vec<_>>().join(" "),
                k0: Some(d.k0),
                omega0: Some(d.omega0),
                order: Some(d.order),
                status: format!("{:?}", d.status).to_lowercase(),
            },
            None => SweepRow {
                sample: i,
                hoppings: p.free.iter().map(|(m, v)| format!("t{m}={v}")).collect::<Vec<_>>().join(" "),
                k0: None,
                omega0: None,
                order: None,
                status: p.error.clone().unwrap_or_default(),
            },
        })
        .collect();
    let mut w = csv::Writer::from_path(args.out.join("hypersurface.csv")).map_err(Failure::failed)?;
    for r in &rows {
        w.serialize(r).map_err(Failure::failed)?;
    }
    w.flush()?;
    let solved = points.iter().filter(|p| p.design.is_some()).count();
    println!("{solved} of {} samples on the order-{} hypersurface", points.len(), args.order);
    Ok(())
}

pub fn verify(args: &VerifyArgs) -> Outcome {
    at_least("max-range", args.max_range, 1)?;
    at_least("spectral-max-range", args.spectral_max_range, 1)?;
    let cfg = VerifyConfig {
        seed: args.seed,
        models: args.models,
        max_range: args.max_range,
        spectral_max_range: args.spectral_max_range,
        spectral_cases: args.spectral_cases,
        scan_samples: args.scan_samples,
        builder: if args.corrupt_transfer { verify::corrupted_transfer } else { tmep::build_transfer },
    };
    let report = verify::run(&cfg);
    match &args.out {
        Some(out) => {
            fs::create_dir_all(out)?;
            write_json(&out.join("report.json"), &report)?;
        }
        None => {
            let mut stdout = io::stdout().lock();
            serde_json::to_writer_pretty(&mut stdout, &report).map_err(Failure::failed)?;
            writeln!(stdout)?;
        }
    }
    for c in &report.checks {
        eprintln!(
            "{} {:<34} {:>6} cases {:>5} skipped  worst {:.2e}  ({})",
            if c.passed { "pass" } else { "FAIL" },
            c.name,
            c.cases,
            c.skipped,
            c.worst,
            c.kind
        );
    }
    if report.passed {
        Ok(())
    } else {
        let failed: BTreeMap<&str, Option<&str>> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| (c.name.as_str(), c.first_failure.as_deref()))
            .collect();
        Err(Failure::failed(anyhow!("failed checks: {failed:?}")))
    }
}
