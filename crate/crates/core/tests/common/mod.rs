#![allow(dead_code)]

pub mod gen;
pub mod props;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use archdelta::extract::{discover_services, scan_repository, MarkerProfile, ServiceNames};
use archdelta::history::{listed_dirs, EvolutionRecord, VersionSource};
use archdelta::ir::{MicroserviceIR, SystemIR};
use archdelta::link::{build_system_ir, DEFAULT_OVERLAP_THRESHOLD};

pub fn fixture_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/history")
}

pub fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

pub fn version_dir(i: usize) -> PathBuf {
    fixture_root().join(format!("v{i}"))
}

pub const VERSIONS: usize = 6;

/// Hand labels of the fixture history: what each version injects.
#[derive(Debug, Clone, Copy)]
pub struct Labels {
    /// `GET /api/v1/stations/{id}` exists; its only caller is `OrderService`.
    pub station_get: bool,
    /// `StationRepository.findByStationId` carries a custom query marker.
    pub repo_query: bool,
    /// `PriceService.compute` makes two extra calls on its return object.
    pub price_extra_calls: bool,
    /// `OrderController` exposes an uncalled status endpoint.
    pub order_status: bool,
}

pub const LABELS: [Labels; VERSIONS] = [
    Labels { station_get: true, repo_query: true, price_extra_calls: false, order_status: false },
    Labels { station_get: true, repo_query: true, price_extra_calls: true, order_status: false },
    Labels { station_get: false, repo_query: true, price_extra_calls: true, order_status: false },
    Labels { station_get: false, repo_query: true, price_extra_calls: true, order_status: true },
    Labels { station_get: false, repo_query: false, price_extra_calls: true, order_status: true },
    Labels { station_get: true, repo_query: false, price_extra_calls: true, order_status: true },
];

/// Expected (IC, UEM, SMM, RMM) counts per version, derived from the labels
/// alone: system rules follow the state, delta rules follow label flips.
pub fn oracle_counts() -> Vec<[usize; 4]> {
    (0..VERSIONS)
        .map(|i| {
            let l = LABELS[i];
            let prev = if i == 0 { None } else { Some(LABELS[i - 1]) };
            let flipped = |f: fn(&Labels) -> bool| prev.is_some_and(|p| f(&p) != f(&l));
            [
                usize::from(!l.station_get),
                usize::from(l.order_status),
                usize::from(flipped(|x| x.price_extra_calls)),
                usize::from(flipped(|x| x.repo_query)),
            ]
        })
        .collect()
}

pub fn oracle_csv(versions: usize) -> String {
    let mut s = String::from("Index,AR1,AR2,AR3,AR4\n");
    for (i, c) in oracle_counts().into_iter().take(versions).enumerate() {
        s.push_str(&format!("{i},{},{},{},{}\n", c[0], c[1], c[2], c[3]));
    }
    s
}

/// Expected violations per version, derived from the labels: one line per
/// violation as `index rule primary kind [reached ...]`, sorted.
pub fn oracle_anomalies() -> String {
    let mut lines = Vec::new();
    for (i, l) in LABELS.iter().enumerate() {
        let prev = (i > 0).then(|| LABELS[i - 1]);
        if !l.station_get {
            lines.push(format!("{i} IC ts-order/Service/order.OrderService call"));
        }
        if l.order_status {
            lines.push(format!("{i} UEM ts-order/Controller/order.OrderController endpoint"));
        }
        if prev.is_some_and(|p| p.price_extra_calls != l.price_extra_calls) {
            lines.push(format!(
                "{i} SMM ts-price/Service/price.PriceService method ts-price/Controller/price.PriceController"
            ));
        }
        if prev.is_some_and(|p| p.repo_query != l.repo_query) {
            lines.push(format!(
                "{i} RMM ts-station/Repository/station.StationRepository method ts-station/Service/station.StationService"
            ));
        }
    }
    lines.sort();
    lines.into_iter().map(|l| l + "\n").collect()
}

/// The same line format over a replay record.
pub fn anomaly_lines(record: &EvolutionRecord) -> String {
    let mut lines = Vec::new();
    for v in &record.versions {
        for viol in &v.violations {
            let p = viol.primary();
            let kind = serde_json::to_value(&p.evidence).unwrap()["kind"].as_str().unwrap().to_string();
            let mut line = format!("{} {} {} {kind}", v.index, viol.rule_name, p.component_id);
            for item in &viol.impacted[1..] {
                line.push(' ');
                line.push_str(&item.component_id.to_string());
            }
            lines.push(line);
        }
    }
    lines.sort();
    lines.into_iter().map(|l| l + "\n").collect()
}

/// Service IRs of one version, scanned from scratch.
pub fn scan_version(root: &Path, label: &str) -> BTreeMap<String, MicroserviceIR> {
    let names = ServiceNames::default();
    let profile = MarkerProfile::default();
    discover_services(root, &names)
        .unwrap()
        .into_iter()
        .map(|r| {
            let ir = scan_repository(&r.path, &profile, &r.name, label).unwrap();
            (r.name, ir)
        })
        .collect()
}

/// Full reconstruction of fixture version `i`.
pub fn full_system(i: usize) -> SystemIR {
    let services = scan_version(&version_dir(i), &format!("v{i}"));
    build_system_ir(services.into_values().collect(), DEFAULT_OVERLAP_THRESHOLD, "").unwrap()
}

pub fn fixture_source(versions: usize) -> VersionSource {
    let dirs: Vec<PathBuf> = (0..versions).map(version_dir).collect();
    VersionSource::Dirs(listed_dirs(&dirs))
}

pub fn copy_tree(from: &Path, to: &Path) {
    for entry in walkdir::WalkDir::new(from) {
        let entry = entry.unwrap();
        let rel = entry.path().strip_prefix(from).unwrap();
        let dest = to.join(rel);
        if entry.file_type().is_dir() {
            std::fs::create_dir_all(&dest).unwrap();
        } else {
            std::fs::copy(entry.path(), &dest).unwrap();
        }
    }
}

/// Seven versions: the six fixture versions with an unparseable copy of
/// v4 inserted at position 5.
pub fn seven_with_broken(dir: &Path) -> VersionSource {
    let mut roots = Vec::new();
    for (label, src) in [("v0", 0), ("v1", 1), ("v2", 2), ("v3", 3), ("v4", 4), ("v4b", 4), ("v5", 5)] {
        let dest = dir.join(label);
        copy_tree(&version_dir(src), &dest);
        roots.push(dest);
    }
    let broken = dir.join("v4b/ts-price/src/main/java/price/PriceService.java");
    std::fs::write(&broken, "package price;\n@Service\npublic class PriceService {\n    public void x( {\n").unwrap();
    VersionSource::Dirs(listed_dirs(&roots))
}

pub fn read_string(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}
