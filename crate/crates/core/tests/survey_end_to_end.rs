use gardentrack_core::behaviour::cluster_hotspots;
use gardentrack_core::nmea::parse_stream;
use gardentrack_core::pipeline::{analyze_text, PipelineConfig};
use gardentrack_core::quality::{extract_static_windows, static_precision, Placement, StaticWindowConfig};
use gardentrack_core::simulate::{
    default_loop, emit_nmea, simulate_survey, ErrorModel, Scenario,
};
use gardentrack_core::track::{project_fixes, residual_series, residuals_against_truth, usable_points};
use gardentrack_core::TransverseMercator;

fn tm() -> TransverseMercator<f64> {
    TransverseMercator::new(&gardentrack_core::ProjectionParams::utm32n_etrs89()).unwrap()
}

#[test]
fn emitted_survey_parses_with_exact_counts() {
    let sc = Scenario::field_protocol();
    let sim = simulate_survey(&sc, &ErrorModel::default()).unwrap();
    let text = emit_nmea(&sim.fixes, "Xiaomi - Redmi Note 8T", sc.start);
    let (fixes, report) = parse_stream(text.lines()).unwrap();
    assert_eq!(fixes.len(), sim.fixes.len());
    assert_eq!(report.total_lines, 3 + 2 * fixes.len());
    assert_eq!(report.rejected_checksum + report.rejected_malformed, 0);
    assert!(report.is_consistent());
}

#[test]
fn stops_recovered_with_dwell_times() {
    let sc = Scenario::field_protocol();
    let sim = simulate_survey(&sc, &ErrorModel { seed: 11, ..Default::default() }).unwrap();
    let text = emit_nmea(&sim.fixes, "Pixel 4", sc.start);
    let a = analyze_text(&text, Some(&sc.polyline), &PipelineConfig::default(), "s").unwrap();
    assert_eq!(a.stops.len(), sim.truth_stops.len());
    for (got, want) in a.stops.iter().zip(&sim.truth_stops) {
        assert!((got.duration_s - want.duration_s).abs() <= 3.0);
        assert!(got.centroid.distance(&want.position) < 3.0);
    }
}

#[test]
fn static_file_of_identical_positions_has_zero_sigma() {
    let mut sc = Scenario::with_even_stops(default_loop(), 0);
    sc.static_lead_s = 400.0;
    let sim = simulate_survey(
        &sc,
        &ErrorModel { sigma: 0.0, ..Default::default() },
    )
    .unwrap();
    let text = emit_nmea(&sim.fixes, "BV4900", sc.start);
    let (fixes, _) = parse_stream(text.lines()).unwrap();
    let pts = usable_points(&project_fixes(&fixes, &tm()).unwrap());
    let cfg = StaticWindowConfig { placement: Placement::Start, ..Default::default() };
    let w = extract_static_windows(&pts, &cfg).unwrap();
    let r = static_precision(&w[0]).unwrap();
    assert_eq!(r.n, 100);
    assert_eq!((r.sigma_east, r.sigma_north), (0.0, 0.0));
}

#[test]
fn quantization_never_adds_distinct_positions() {
    let mut sc = Scenario::with_even_stops(default_loop(), 0);
    sc.static_lead_s = 300.0;
    for seed in 0..5 {
        let raw = simulate_survey(&sc, &ErrorModel { sigma: 0.05, seed, quantize: false, ..Default::default() }).unwrap();
        let q = simulate_survey(&sc, &ErrorModel { sigma: 0.05, seed, quantize: true, ..Default::default() }).unwrap();
        let distinct = |s: &gardentrack_core::simulate::SimulatedSurvey| {
            let mut v: Vec<(u64, u64)> = s.fixes[..300]
                .iter()
                .map(|f| {
                    let c = f.coord.unwrap();
                    (c.latitude.to_bits(), c.longitude.to_bits())
                })
                .collect();
            v.sort_unstable();
            v.dedup();
            v.len()
        };
        assert!(distinct(&q) <= distinct(&raw));
        assert!(distinct(&q) < 300);
    }
}

#[test]
fn cross_track_residuals_understate_two_dimensional_error() {
    let sc = Scenario::field_protocol();
    let sim = simulate_survey(&sc, &ErrorModel { seed: 8, quantize: false, ..Default::default() }).unwrap();
    let cross = residual_series(&sim.projected, &sc.polyline).unwrap();
    let truth = residuals_against_truth(&sim.projected, &sim.truth).unwrap();
    let rms = |d: Vec<f64>| (d.iter().map(|x| x * x).sum::<f64>() / d.len() as f64).sqrt();
    assert!(rms(cross.distances()) < rms(truth.distances()));
}

#[test]
fn same_scenario_surveys_form_shared_hotspots() {
    let sc = Scenario::with_even_stops(default_loop(), 3);
    let mut events = Vec::new();
    for seed in 0..3 {
        let sim = simulate_survey(&sc, &ErrorModel { seed, ..Default::default() }).unwrap();
        let text = emit_nmea(&sim.fixes, "x", sc.start);
        let a = analyze_text(&text, None, &PipelineConfig::default(), &format!("s{seed}")).unwrap();
        events.extend(a.stops);
    }
    let hs = cluster_hotspots(&events, 10.0);
    assert_eq!(hs.len(), 4);
    assert!(hs.iter().all(|h| h.survey_count == 3));
}
