mod common;

use std::fs::File;

use common::oracle;
use lagscope::clusters::{StoreBucket, Window};
use lagscope::leadership::{lag_distribution, CarriedItems};
use lagscope::panel::{
    extract_changes, ingest_observations, CategoryLabel, CategorySet, PricePanel, StoreId,
};
use lagscope::report::{
    build_bundle, parse_lag_csv, render, BundleOptions, CategoryLag, Format, RenderError,
    ReportBundle, Section,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

fn fixture_bundle() -> ReportBundle {
    let panel = ingest_observations(File::open(format!("{FIXTURES}/fixture_panel.csv")).unwrap()).unwrap();
    let categories =
        CategorySet::read_csv(File::open(format!("{FIXTURES}/fixture_categories.csv")).unwrap()).unwrap();
    let options = BundleOptions {
        focal: Some(StoreId::new("alpha").unwrap()),
        version: "test".into(),
        ..BundleOptions::default()
    };
    build_bundle(&panel, &categories, &CarriedItems::from_panel(&panel), &options).unwrap()
}

fn lines(bytes: &[u8]) -> usize {
    std::str::from_utf8(bytes).unwrap().lines().count()
}

#[test]
fn empty_panel_renders_headers_only() {
    let panel = PricePanel::new();
    let options = BundleOptions {
        windows: Vec::new(),
        focal: Some(StoreId::new("anyone").unwrap()),
        ..BundleOptions::default()
    };
    let bundle = build_bundle(&panel, &CategorySet::default(), &CarriedItems::default(), &options).unwrap();
    let files = render(&bundle, Format::Csv).unwrap();
    for (name, bytes) in &files {
        if name.starts_with("report_metadata") {
            continue;
        }
        assert_eq!(lines(bytes), 1, "{name}");
    }
    assert!(files.contains_key("table1_all_all.csv"));
    assert!(files.contains_key("table4_all_all.csv"));

    let md = render(&bundle, Format::Markdown).unwrap();
    // title, blank, header, rule
    assert_eq!(lines(&md["table1_all_all.md"]), 4);
}

#[test]
fn rendering_is_byte_stable_and_survives_json_round_trip() {
    let bundle = fixture_bundle();
    let again = ReportBundle::from_json(&bundle.to_json()).unwrap();
    assert_eq!(again, bundle);
    for format in [Format::Csv, Format::Markdown] {
        let a = render(&bundle, format).unwrap();
        assert_eq!(a, render(&fixture_bundle(), format).unwrap());
        assert_eq!(a, render(&again, format).unwrap());
        // 1, 2, 4, metadata, 4 categories x 2 windows of table 3, and the
        // focal store's lag tables plus counts
        let lag_files = a.keys().filter(|k| k.starts_with("table5_")).count();
        assert_eq!(a.len(), 4 + 8 + lag_files);
        assert!(lag_files >= 2 && lag_files % 2 == 0);
    }
}

#[test]
fn tampered_totals_are_rejected_naming_the_table() {
    let mut bundle = fixture_bundle();
    if let Section::Present(t) = &mut bundle.change_counts {
        *t.totals.get_mut(&CategoryLabel::NytBestseller).unwrap() += 1;
    }
    assert_eq!(
        render(&bundle, Format::Csv).unwrap_err(),
        RenderError::TotalsMismatch {
            table: "table1_all_all".into(),
            column: "nyt_bestseller".into()
        }
    );

    let mut bundle = fixture_bundle();
    if let Section::Present(h) = &mut bundle.histograms {
        let entry = h.iter_mut().find(|e| e.category.is_none() && e.window == Window::SHORT).unwrap();
        entry.histogram.buckets.get_mut(&StoreBucket::Two).unwrap().up += 1;
    }
    let err = render(&bundle, Format::Markdown).unwrap_err();
    assert!(matches!(err, RenderError::DirectionSplit { ref table, .. } if table == "table3_all_3day"), "{err}");
}

#[test]
fn lag_csv_round_trips_within_display_rounding() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    for _ in 0..40 {
        let rp = oracle::random_panel(&mut rng, 8, 12, 40);
        let log = extract_changes(&rp.panel);
        let carried = CarriedItems::from_panel(&rp.panel);
        let Some(focal) = log.iter().next().map(|c| c.store_id.clone()) else {
            continue;
        };
        let table = lag_distribution(&log, &focal, 3, &carried).unwrap();
        let mut bundle = fixture_bundle();
        bundle.lag_tables = Section::Present(vec![CategoryLag {
            category: None,
            table: Section::Present(table.clone()),
        }]);
        let files = render(&bundle, Format::Csv).unwrap();
        let parsed = parse_lag_csv(&files["table5_all_all.csv"]).unwrap();
        assert_eq!(parsed.len(), table.rows.len());
        for (store, cells) in &table.rows {
            for (got, cell) in parsed[store].iter().zip(cells) {
                // half a point is attainable exactly (12.5% shows as 13%); allow float noise
                assert!((got - cell.fraction()).abs() <= 0.005 + 1e-12, "{store}: {got} vs {}", cell.fraction());
            }
        }
        checked += 1;
    }
    assert!(checked > 30);
}

#[test]
fn missing_category_and_unknown_focal_are_errors() {
    let panel = ingest_observations(File::open(format!("{FIXTURES}/fixture_panel.csv")).unwrap()).unwrap();
    let carried = CarriedItems::from_panel(&panel);
    let err = build_bundle(&panel, &CategorySet::default(), &carried, &BundleOptions::default()).unwrap_err();
    assert!(err.to_string().contains("no category"), "{err}");

    let categories =
        CategorySet::read_csv(File::open(format!("{FIXTURES}/fixture_categories.csv")).unwrap()).unwrap();
    let options = BundleOptions {
        focal: Some(StoreId::new("nobody").unwrap()),
        ..BundleOptions::default()
    };
    let err = build_bundle(&panel, &categories, &carried, &options).unwrap_err();
    assert!(err.to_string().contains("nobody"), "{err}");
}
