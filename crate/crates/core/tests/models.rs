use epscan_core::c64;
use epscan_core::dimer::{ep_condition_dephasing, full_dimer_liouvillian, Channel, DimerParams};
use epscan_core::scan::{extract_seam, fit_scaling, median_value, run_scan, Axis, ModelSpec, ObservableName, Param, ScanConfig};
use epscan_core::spectral::eigenvalues;

fn ep_only(model: ModelSpec, a1: Axis, a2: Option<Axis>) -> ScanConfig {
    let mut cfg = ScanConfig::new(model, a1, a2);
    cfg.observables = vec![ObservableName::EpStrength];
    cfg
}

/// Roots of the population block of the relaxation dimer: `-γ` and
/// `-γ ± √(γ²c² - Δ²)`.
fn relaxation_population_roots(g: f64, c: f64, d: f64) -> [c64; 3] {
    let disc = g * g * c * c - d * d;
    let r = if disc >= 0.0 { c64::new(disc.sqrt(), 0.0) } else { c64::new(0.0, (-disc).sqrt()) };
    [c64::new(-g, 0.0), c64::new(-g, 0.0) + r, c64::new(-g, 0.0) - r]
}

#[test]
fn relaxation_population_roots_are_in_the_spectrum() {
    for &(g, c, d) in &[(1.0, 0.1, 0.3), (1.0, 0.6, 0.2), (0.7, -0.4, 0.5), (1.3, 0.9, 0.05)] {
        let l = full_dimer_liouvillian(&DimerParams::relaxation(g, c, d)).unwrap();
        let ev = eigenvalues(&l).unwrap();
        for z in relaxation_population_roots(g, c, d) {
            let dist = ev.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min);
            assert!(dist < 1e-8, "root {z} missing at (γ={g}, c={c}, Δ={d}): {dist}");
        }
    }
}

#[test]
fn relaxation_seams_sit_at_detuning() {
    let cfg = ep_only(
        ModelSpec::dimer(Channel::Relaxation, 1.0, 0.0, 0.0, 0.25),
        Axis::new(Param::C, -1.0, 1.0, 401),
        None,
    );
    let r = run_scan(&cfg, 2).unwrap();
    let mut peaks: Vec<f64> = extract_seam(&r, ObservableName::EpStrength, None).iter().map(|s| s.axis1).collect();
    peaks.sort_by(f64::total_cmp);
    assert_eq!(peaks.len(), 2, "{peaks:?}");
    assert!((peaks[0] + 0.25).abs() < 1e-12 && (peaks[1] - 0.25).abs() < 1e-12);
}

#[test]
fn seam_exponents() {
    let h = 1e-4;
    let cases = [
        (ModelSpec::dimer(Channel::Dephasing, 1.0, 0.0, 0.25, 0.0), 0.5, -0.5),
        // three eigenvalues meet on the relaxation seam
        (ModelSpec::dimer(Channel::Relaxation, 1.0, 0.0, 0.0, 0.25), 0.25, -1.0),
    ];
    for (model, c_ep, expected) in cases {
        let cfg = ep_only(model, Axis::new(Param::C, c_ep - 0.031, c_ep + 0.031, 621), None);
        let r = run_scan(&cfg, 2).unwrap();
        let fit = fit_scaling(&r, c_ep, (3.0 * h, 300.0 * h)).unwrap();
        assert!((fit.exponent - expected).abs() < 0.05, "exponent {} vs {expected}", fit.exponent);
        assert!(fit.r_squared > 0.99);
    }
}

fn max_row_distance(cfg: &ScanConfig, analytic: impl Fn(f64) -> Vec<f64>) -> f64 {
    let r = run_scan(cfg, 4).unwrap();
    // off-grid seams on a 101-point axis only reach a few times the background,
    // below the default 10x-median prominence
    let prominence = median_value(&r, ObservableName::EpStrength).unwrap();
    let seam = extract_seam(&r, ObservableName::EpStrength, Some(prominence));
    let g2 = r.grid2.as_ref().unwrap();
    let step = cfg.axis1.step();
    let mut worst = 0.0f64;
    for (i2, &y) in g2.iter().enumerate() {
        let row: Vec<f64> = seam.iter().filter(|s| s.i2 == i2).map(|s| s.axis1).collect();
        let targets = analytic(y);
        assert_eq!(row.len(), targets.len(), "row {y}: {row:?} vs {targets:?}");
        for t in targets {
            let d = row.iter().map(|x| (x - t).abs()).fold(f64::INFINITY, f64::min);
            worst = worst.max(d / step);
        }
    }
    worst
}

#[test]
fn dephasing_seam_tracks_discriminant_root() {
    let cfg = ep_only(
        ModelSpec::dimer(Channel::Dephasing, 1.0, 0.0, 0.0, 0.0),
        Axis::new(Param::C, -1.0, 1.0, 101),
        Some(Axis::new(Param::J, 0.02, 0.9, 101)),
    );
    let worst = max_row_distance(&cfg, |j| vec![ep_condition_dephasing(1.0, j).c_crit]);
    assert!(worst <= 2.0, "{worst} grid steps");
}

#[test]
fn relaxation_seams_track_detuning_on_grid() {
    let cfg = ep_only(
        ModelSpec::dimer(Channel::Relaxation, 1.0, 0.0, 0.0, 0.0),
        Axis::new(Param::C, -1.0, 1.0, 101),
        Some(Axis::new(Param::Delta, 0.1, 0.9, 101)),
    );
    let worst = max_row_distance(&cfg, |d| vec![-d, d]);
    assert!(worst <= 2.0, "{worst} grid steps");
}

#[test]
fn repeated_scans_are_identical() {
    let cfg = ScanConfig::new(
        ModelSpec {
            family: epscan_core::scan::Family::Cycle { n: 3 },
            channel: Channel::Dephasing,
            gamma0: 1.0,
            c: 0.0,
            j: 0.3,
            delta: 0.1,
        },
        Axis::new(Param::C, -0.5, 1.0, 31),
        None,
    );
    let csv = |jobs| {
        let mut v = Vec::new();
        run_scan(&cfg, jobs).unwrap().write_csv(&mut v).unwrap();
        v
    };
    let first = csv(1);
    assert_eq!(first, csv(1));
    assert_eq!(first, csv(3));
}
