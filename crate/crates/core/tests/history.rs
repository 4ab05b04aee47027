mod common;

use std::collections::BTreeMap;

use archdelta::history::{
    emit_summary, emit_timeseries, render_summary_table, replay, ArtifactWriter, ReplayConfig,
    ReplaySettings, Step, VersionSource,
};
use archdelta::ir::serialize_ir;
use archdelta::rules::builtin_rules;

fn settings() -> ReplaySettings {
    ReplaySettings {
        integrity_interval: 1,
        ..Default::default()
    }
}

#[test]
fn timeseries_matches_labels() {
    let record = replay(&common::fixture_source(6), &settings(), |_| Ok(())).unwrap();
    let csv = String::from_utf8(emit_timeseries(&record)).unwrap();
    assert_eq!(csv, common::oracle_csv(6));
    assert_eq!(csv, common::read_string(&common::golden("timeseries.csv")));
    assert!(record.integrity.is_empty(), "{:?}", record.integrity);
}

#[test]
fn single_version_record() {
    let record = replay(&common::fixture_source(1), &settings(), |_| Ok(())).unwrap();
    assert_eq!(record.versions.len(), 1);
    assert!(record.versions[0].deltas.is_empty());
    for series in record.per_rule_series.values() {
        assert_eq!(series, &vec![0]);
    }
}

#[test]
fn deleted_endpoint_raises_ic_at_index_2() {
    let record = replay(&common::fixture_source(3), &settings(), |_| Ok(())).unwrap();
    assert_eq!(record.per_rule_series["IC"], vec![0, 0, 1]);
}

#[test]
fn four_version_totals() {
    let record = replay(&common::fixture_source(4), &settings(), |_| Ok(())).unwrap();
    let s = emit_summary(&record, "fixture");
    let want: BTreeMap<String, usize> = [("IC", 1), ("UEM", 1), ("SMM", 1), ("RMM", 0)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    assert_eq!(s.unique_violations, want);
    assert_eq!(s.commits, 4);
    assert_eq!(
        render_summary_table(&s),
        "Project  IC  UEM  SMM  RMM  Commits\nfixture   1    1    1    0        4\n"
    );
}

#[test]
fn unique_totals_bounded_by_series_sums() {
    let record = replay(&common::fixture_source(6), &settings(), |_| Ok(())).unwrap();
    for (rule, total) in &record.unique_totals {
        let sum: usize = record.per_rule_series[rule].iter().sum();
        assert!(*total <= sum, "{rule}: {total} > {sum}");
        assert_eq!(record.per_rule_series[rule].len(), record.versions.len());
    }
}

#[test]
fn empty_rule_set_gives_zero_totals() {
    let s = ReplaySettings {
        rules: vec![],
        ..settings()
    };
    let record = replay(&common::fixture_source(3), &s, |_| Ok(())).unwrap();
    let summary = emit_summary(&record, "p");
    assert!(summary.unique_violations.values().all(|v| *v == 0));
}

#[test]
fn unparseable_version_is_skipped_and_chain_reanchored() {
    let dir = tempfile::tempdir().unwrap();
    let source = common::seven_with_broken(dir.path());
    let mut skipped = Vec::new();
    let record = replay(&source, &settings(), |s| {
        if let Step::Skipped(n) = s {
            skipped.push(n.index);
        }
        Ok(())
    })
    .unwrap();
    assert_eq!(record.versions.len(), 6);
    assert_eq!(record.skipped.len(), 1);
    assert_eq!(skipped, vec![5]);
    let notice = &record.skipped[0];
    assert_eq!(notice.label, "v4b");
    assert_eq!(notice.paths, vec!["ts-price/src/main/java/price/PriceService.java".to_string()]);
    // the increment after the skip still equals a full build of v5
    let last = record.versions.last().unwrap();
    assert_eq!(last.index, 6);
    let counts = common::oracle_counts();
    assert_eq!(record.per_rule_series["IC"][5], counts[5][0]);
    assert_eq!(record.per_rule_series["UEM"][5], counts[5][1]);
}

#[test]
fn increments_equal_full_reconstruction() {
    let mut irs = Vec::new();
    replay(&common::fixture_source(6), &settings(), |s| {
        if let Step::Analyzed { ir, .. } = s {
            irs.push(ir.clone());
        }
        Ok(())
    })
    .unwrap();
    assert_eq!(irs.len(), 6);
    for (i, ir) in irs.iter().enumerate() {
        assert_eq!(serialize_ir(ir), serialize_ir(&common::full_system(i)), "version {i}");
    }
}

fn tree_bytes(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    walkdir::WalkDir::new(dir)
        .into_iter()
        .map(Result::unwrap)
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e.path().strip_prefix(dir).unwrap().to_string_lossy().into_owned();
            (rel, std::fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn artifact_layout_and_idempotence() {
    let out = tempfile::tempdir().unwrap();
    let run = |dir: &std::path::Path| {
        let w = ArtifactWriter::new(dir).unwrap();
        let record = replay(&common::fixture_source(4), &settings(), |s| w.observe(s)).unwrap();
        w.finish(&record, "fixture").unwrap();
    };
    let a = out.path().join("a");
    let b = out.path().join("b");
    run(&a);
    run(&b);
    let ta = tree_bytes(&a);
    assert_eq!(ta, tree_bytes(&b));
    let count = |prefix: &str| ta.keys().filter(|k| k.starts_with(prefix)).count();
    assert_eq!(count("ir/"), 4);
    assert_eq!(count("deltas/"), 3);
    assert_eq!(count("violations/"), 4);
    assert!(ta.contains_key("timeseries.csv") && ta.contains_key("summary.json"));
    // re-running into the same directory reproduces the same bytes
    run(&a);
    assert_eq!(ta, tree_bytes(&a));
}

#[test]
fn config_driven_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("replay.toml");
    std::fs::write(
        &cfg_path,
        format!(
            "name = \"fx\"\nout = \"out\"\nintegrity_check_interval = 1\n[source]\ndirs = {:?}\n",
            common::fixture_root().display().to_string()
        ),
    )
    .unwrap();
    let cfg = ReplayConfig::load(&cfg_path).unwrap();
    let settings = cfg.settings().unwrap();
    assert_eq!(settings.rules, builtin_rules());
    let versions = cfg.versions().unwrap();
    assert!(matches!(&versions, VersionSource::Dirs(v) if v.len() == 6));
    let record = replay(&versions, &settings, |_| Ok(())).unwrap();
    assert_eq!(String::from_utf8(emit_timeseries(&record)).unwrap(), common::oracle_csv(6));
}

fn git_available() -> bool {
    std::process::Command::new("git")
        .arg("--version")
        .output()
        .is_ok_and(|o| o.status.success())
}

#[test]
fn git_history_replay() {
    if !git_available() {
        eprintln!("git not found; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let repo = dir.path().join("repo");
    std::fs::create_dir(&repo).unwrap();
    let git = |args: &[&str]| {
        let out = std::process::Command::new("git")
            .arg("-C")
            .arg(&repo)
            .args(["-c", "user.name=t", "-c", "user.email=t@t", "-c", "commit.gpgsign=false"])
            .args(args)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    git(&["init", "-q"]);
    for i in 0..3 {
        for entry in std::fs::read_dir(&repo).unwrap() {
            let p = entry.unwrap().path();
            if p.file_name().unwrap() != ".git" {
                std::fs::remove_dir_all(&p).unwrap();
            }
        }
        common::copy_tree(&common::version_dir(i), &repo);
        git(&["add", "-A"]);
        git(&["commit", "-q", "-m", &format!("v{i}")]);
    }
    let cfg = ReplayConfig::from_toml(
        &format!("out = \"o\"\n[source]\ngit = {:?}\n", repo.display().to_string()),
        dir.path(),
    )
    .unwrap();
    let versions = cfg.versions().unwrap();
    assert_eq!(versions.len(), 3);
    let record = replay(&versions, &settings(), |_| Ok(())).unwrap();
    assert_eq!(String::from_utf8(emit_timeseries(&record)).unwrap(), common::oracle_csv(3));
}
