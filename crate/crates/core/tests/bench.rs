use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use iqpool::attributes::{QualityAttribute, SquaredError, Ssim, SsimParams};
use iqpool::bench::{
    attribute_from_name, build_codewords, emit_reports, parse_pooling_list, read_correlations,
    run_bench, BenchConfig, BestMode, CorrelationReport, Metric, OVERALL,
};
use iqpool::dataset::{load_manifest, write_manifest, EvalRecord};
use iqpool::synth::{generate, SynthConfig};
use iqpool::{PoolingFamily, PoolingSpec};

fn both() -> Vec<Arc<dyn QualityAttribute>> {
    vec![
        Arc::new(SquaredError),
        Arc::new(Ssim(SsimParams::default())),
    ]
}

fn small_synth(dir: &Path) -> PathBuf {
    let cfg = SynthConfig {
        references: 2,
        width: 40,
        height: 40,
        ..SynthConfig::default()
    };
    generate(dir, &cfg).unwrap().manifest_path
}

fn config(manifest: &Path, pooling: Vec<PoolingSpec>) -> BenchConfig {
    let mut cfg = BenchConfig::new(vec![manifest.to_path_buf()], both(), pooling);
    cfg.threads = Some(2);
    cfg
}

#[test]
fn single_record_is_undefined() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_synth(dir.path());
    let first = load_manifest(&manifest).unwrap().remove(0);
    let one = dir.path().join("one.csv");
    write_manifest(&one, &[first]).unwrap();

    let mut cfg = BenchConfig::new(
        vec![one],
        vec![Arc::new(SquaredError)],
        vec![PoolingSpec::Mean],
    );
    cfg.threads = Some(1);
    let report = run_bench(&cfg).unwrap();
    let typed: Vec<_> = report
        .rows
        .iter()
        .filter(|r| r.distortion_type != OVERALL)
        .collect();
    assert_eq!(typed.len(), 1);
    assert_eq!(typed[0].n, 1);
    assert_eq!(typed[0].pearson, None);
    assert_eq!(typed[0].error.as_deref(), Some("UndefinedCorrelation"));
}

#[test]
fn full_grid_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_synth(dir.path());
    let grid = PoolingSpec::full_grid(11, 10.0);
    let report = run_bench(&config(&manifest, grid.clone())).unwrap();
    let groups = report.groups();
    // three distortion types plus the whole database
    assert_eq!(groups.len(), 4);
    assert_eq!(report.rows.len(), groups.len() * 2 * grid.len());
    for (db, t) in &groups {
        for attr in ["squared_error", "ssim"] {
            for spec in &grid {
                let hits = report
                    .rows
                    .iter()
                    .filter(|r| {
                        &r.database == db
                            && &r.distortion_type == t
                            && r.attribute == attr
                            && r.pooling == *spec
                    })
                    .count();
                assert_eq!(hits, 1, "{db}/{t}/{attr}/{spec}");
            }
        }
    }
    assert_eq!(report.failed_records(), 0);
}

#[test]
fn distortion_attribute_sign_is_opposite() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_synth(dir.path());
    let report = run_bench(&config(&manifest, vec![PoolingSpec::Mean])).unwrap();
    let get = |attr: &str| {
        report
            .rows
            .iter()
            .find(|r| r.distortion_type == OVERALL && r.attribute == attr)
            .unwrap()
    };
    let se = get("squared_error");
    let ssim = get("ssim");
    assert!(se.spearman.unwrap() < 0.0);
    assert!(ssim.spearman.unwrap() > 0.0);
    assert!(se.pearson.unwrap() < 0.0);
    assert!(se.normalized(Metric::Spearman).unwrap() > 0.0);
    assert!(se.normalized(Metric::Pearson).unwrap() > 0.0);
}

#[test]
fn dmos_flips_expected_sign() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_synth(dir.path());
    let records: Vec<EvalRecord> = load_manifest(&manifest)
        .unwrap()
        .into_iter()
        .map(|mut r| {
            r.mos = 100.0 - r.mos;
            r.mos_is_dmos = true;
            r
        })
        .collect();
    let dmos = dir.path().join("dmos.csv");
    write_manifest(&dmos, &records).unwrap();
    let report = run_bench(&config(&dmos, vec![PoolingSpec::Mean])).unwrap();
    for r in report.rows.iter().filter(|r| r.distortion_type == OVERALL) {
        assert!(
            r.normalized(Metric::Spearman).unwrap() > 0.0,
            "{}",
            r.attribute
        );
    }
}

#[test]
fn missing_images_are_tallied() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_synth(dir.path());
    let mut records = load_manifest(&manifest).unwrap();
    records[0].distorted_path = dir.path().join("nope.png");
    records[1].reference_path = dir.path().join("also-missing.png");
    let broken = dir.path().join("broken.csv");
    write_manifest(&broken, &records).unwrap();

    let report = run_bench(&config(&broken, vec![PoolingSpec::Mean, PoolingSpec::Max])).unwrap();
    assert_eq!(report.failed_records(), 2);
    let all: Vec<_> = report
        .rows
        .iter()
        .filter(|r| r.distortion_type == OVERALL)
        .collect();
    for r in &all {
        assert_eq!(r.failed, 2);
        assert_eq!(r.n, records.len() - 2);
        assert_eq!(r.error.as_deref(), Some("IoError"));
        assert!(r.pearson.is_some());
    }
}

#[test]
fn config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_synth(dir.path());
    let empty_attrs = BenchConfig::new(vec![manifest.clone()], vec![], vec![PoolingSpec::Mean]);
    assert!(run_bench(&empty_attrs).is_err());
    let empty_grid = BenchConfig::new(vec![manifest.clone()], both(), vec![]);
    assert!(run_bench(&empty_grid).is_err());

    let off_catalog = config(&manifest, vec![PoolingSpec::Minkowski { p: 3.0 }]);
    assert!(run_bench(&off_catalog).is_err());
    let mut allowed = config(&manifest, vec![PoolingSpec::Minkowski { p: 3.0 }]);
    allowed.allow_custom_parameters = true;
    assert!(run_bench(&allowed).is_ok());

    let missing = config(&dir.path().join("absent.csv"), vec![PoolingSpec::Mean]);
    assert!(run_bench(&missing).is_err());
    assert!(attribute_from_name("plugin", 11).is_err());
    assert!(attribute_from_name("ssim", 7).is_ok());
}

#[test]
fn pooling_list_expansion() {
    let all = parse_pooling_list(&["all"], 11, 10.0).unwrap();
    assert_eq!(all.len(), 28);
    let some = parse_pooling_list(&["mean", "wpp", "minkowski(p=2)", "mean"], 11, 10.0).unwrap();
    let ids: Vec<String> = some.iter().map(|s| s.id()).collect();
    assert_eq!(
        ids,
        [
            "mean",
            "wpp(n_bin=1)",
            "wpp(n_bin=10)",
            "wpp(n_bin=20)",
            "minkowski(p=2)"
        ]
    );
    assert!(parse_pooling_list(&["bogus"], 11, 10.0).is_err());
}

#[test]
fn empty_report_writes_headers_only() {
    let dir = tempfile::tempdir().unwrap();
    let files = emit_reports(&CorrelationReport::default(), dir.path()).unwrap();
    assert_eq!(files.len(), 3);
    for name in ["correlations.csv", "codewords.csv"] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        assert_eq!(text.lines().count(), 1, "{name}");
    }
    assert!(dir.path().join("plotdata").is_dir());
    assert!(dir.path().join("run.json").is_file());
}

#[test]
fn one_codeword_row_per_strategy_pair() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_synth(dir.path());
    let families = [
        PoolingFamily::Mean,
        PoolingFamily::Max,
        PoolingFamily::Minkowski,
        PoolingFamily::Wpp,
    ];
    let grid: Vec<PoolingSpec> = families
        .iter()
        .flat_map(|f| f.default_specs(11, 10.0))
        .collect();
    let mut cfg = config(&manifest, grid);
    cfg.per_type_samples = true;
    let report = run_bench(&cfg).unwrap();
    // whole database plus one table per distortion type
    assert_eq!(report.codewords.len(), 4);
    for t in &report.codewords {
        assert_eq!(t.rows.len(), 4 * 3 / 2, "{}", t.scope);
        let totals = t.totals.unwrap();
        let sum: u32 = totals.columns.iter().sum();
        assert_eq!(sum, totals.databases.iter().sum::<u32>());
        // only the first database slot is populated
        assert_eq!(totals.databases[1], 0);
        assert_eq!(totals.databases[2], 0);
        for r in &t.rows {
            assert_eq!(r.codeword.to_string().len(), 9);
        }
    }
}

#[test]
fn reports_round_trip_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_synth(dir.path());
    let grid = parse_pooling_list(&["mean", "max", "qd", "wpp"], 11, 10.0).unwrap();
    let report = run_bench(&config(&manifest, grid)).unwrap();
    let out = dir.path().join("out");
    let files = emit_reports(&report, &out).unwrap();
    assert!(files.contains(&out.join("plotdata/SYNTH_pearson.csv")));
    assert!(files.contains(&out.join("plotdata/SYNTH_spearman.csv")));

    let rows = read_correlations(out.join("correlations.csv")).unwrap();
    assert_eq!(rows, report.rows);
    let tables = build_codewords(
        &rows,
        &report.run.database_slots,
        &report.run.attribute_slots,
        0.05,
        BestMode::PerType,
        false,
    )
    .unwrap();
    assert_eq!(tables, report.codewords);

    let plot = fs::read_to_string(out.join("plotdata/SYNTH_spearman.csv")).unwrap();
    let mut lines = plot.lines();
    assert_eq!(
        lines.next().unwrap(),
        "distortion_type,squared_error:mean,squared_error:max,squared_error:qd,squared_error:wpp,ssim:mean,ssim:max,ssim:qd,ssim:wpp"
    );
    let xs: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(xs, ["blur", "jpeg", "noise", OVERALL]);
}

#[test]
fn overall_mode_uses_one_member_per_database() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_synth(dir.path());
    let grid = PoolingFamily::Minkowski.default_specs(11, 10.0);
    let mut cfg = config(&manifest, grid);
    cfg.best = BestMode::Overall;
    let report = run_bench(&cfg).unwrap();
    let chosen = report
        .best(
            "SYNTH",
            OVERALL,
            "ssim",
            PoolingFamily::Minkowski,
            Metric::Pearson,
            BestMode::Overall,
        )
        .unwrap()
        .pooling;
    for t in ["blur", "jpeg", "noise"] {
        let r = report
            .best(
                "SYNTH",
                t,
                "ssim",
                PoolingFamily::Minkowski,
                Metric::Pearson,
                BestMode::Overall,
            )
            .unwrap();
        assert_eq!(r.pooling, chosen);
        let per_type = report
            .best(
                "SYNTH",
                t,
                "ssim",
                PoolingFamily::Minkowski,
                Metric::Pearson,
                BestMode::PerType,
            )
            .unwrap();
        assert!(per_type.pearson.unwrap().abs() >= r.pearson.unwrap().abs());
    }
}

#[test]
fn cache_serves_later_runs() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_synth(dir.path());
    let cache = dir.path().join("scores.jsonl");
    let grid = parse_pooling_list(&["mean", "iw", "wpp"], 11, 10.0).unwrap();
    let mut cfg = config(&manifest, grid);
    cfg.cache_path = Some(cache.clone());
    let first = run_bench(&cfg).unwrap();
    let lines = fs::read_to_string(&cache).unwrap().lines().count();
    assert_eq!(lines, 30 * 2 * 10);

    // with every score cached, the images are no longer needed
    fs::remove_dir_all(dir.path().join("dist")).unwrap();
    let second = run_bench(&cfg).unwrap();
    assert_eq!(second.failed_records(), 0);
    assert_eq!(first.rows, second.rows);
}
