use tmep::critical::{self, momentum_matches};
use tmep::designer::{self, DesignRequest, DesignStatus, Location};
use tmep::dos::{self, KGrid, Side, DEFAULT_K_STEP};

#[test]
fn range_three_feasibility_window() {
    // Dense enough to land near both ends of the window, where the order-3
    // pair approaches the zone boundary.
    for i in 1..400 {
        let t3 = 0.001 * i as f64;
        let inside = t3 > 1.0 / 15.0 + 1e-3 && t3 < 1.0 / 3.0 - 1e-3;
        let outside = !(1.0 / 15.0 - 1e-3..=1.0 / 3.0 + 1e-3).contains(&t3);
        let r = designer::design_odd_ep_all(&DesignRequest::new(3, 3, Location::Interior).with_free(3, t3));
        if inside {
            let sols = r.unwrap_or_else(|e| panic!("t3 = {t3}: {e}"));
            for s in sols {
                let t2 = s.model.hopping(2);
                assert!((t2 * t2 / (t3 * t3) - (3.0 / t3 - 9.0)).abs() < 1e-8, "t3 = {t3}, t2 = {t2}");
            }
        } else if outside {
            assert!(r.is_err(), "t3 = {t3} gave {r:?}");
        }
    }
}

#[test]
fn designed_points_round_trip() {
    let requests = [
        DesignRequest::new(3, 4, Location::ZoneEdge).with_free(3, 0.3),
        DesignRequest::new(3, 6, Location::ZoneEdge),
        DesignRequest::new(3, 3, Location::Interior).with_free(3, 0.2),
        DesignRequest::new(4, 8, Location::ZoneCenter),
        DesignRequest::new(4, 4, Location::Interior),
        DesignRequest::new(2, 2, Location::Interior).with_free(2, 0.4),
    ];
    for req in requests {
        let d = designer::design(&req).unwrap();
        assert_eq!(d.status, DesignStatus::Verified, "{req:?}");
        let cp = critical::classify(&d.model, d.k0).unwrap();
        assert_eq!(cp.order, req.p);
        let grid = KGrid::new(&d.model, DEFAULT_K_STEP).unwrap();
        let side = if cp.class == critical::CriticalClass::Maximum { Side::Below } else { Side::Above };
        let fit = dos::fit_at(&grid, &cp, side).unwrap();
        let expected = -(f64::from(req.p) - 1.0) / f64::from(req.p);
        assert!((fit.exponent - expected).abs() <= 0.05, "{req:?}: {fit:?}");
    }
}

#[test]
fn interior_designs_come_in_pairs() {
    let d = designer::design(&DesignRequest::new(3, 3, Location::Interior).with_free(3, 0.25)).unwrap();
    let sites = critical::ep_orders_at(&d.model, d.omega0).unwrap();
    for k in [d.k0, -d.k0] {
        assert!(sites.iter().any(|s| s.order == 3 && momentum_matches(s.z0, k, 1e-6)), "{sites:?}");
    }
}

#[test]
fn even_linear_residuals() {
    for (n, p, loc) in [(3, 4, Location::ZoneEdge), (4, 6, Location::ZoneCenter), (5, 10, Location::ZoneEdge)] {
        let d = designer::design_even_ep(&DesignRequest::new(n, p, loc)).unwrap();
        for (i, r) in d.residuals.iter().enumerate() {
            assert!(*r <= 1e-10 * d.model.derivative_scale(i as u32 + 1), "{d:?}");
        }
        assert_eq!(d.status, DesignStatus::Verified);
    }
}

#[test]
fn order_five_scan_small() {
    let scan = designer::impossibility_scan(2000, 42, designer::SCAN_KAPPA);
    assert!(scan.min_residual > 1e-3, "{scan:?}");
    assert_eq!(scan.label, "evidence");
}
