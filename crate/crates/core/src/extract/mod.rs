//! Source extraction: turns one microservice source tree into its IR.

pub mod body;
pub mod discover;
pub mod lexer;
pub mod parser;
pub mod profile;
mod unit;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;
use walkdir::WalkDir;

use crate::ir::hash::sha256_hex;
use crate::ir::{Component, ComponentId, ComponentType, Endpoint, HttpMethod, MicroserviceIR};
pub use discover::{discover_services, ServiceNames, ServiceRoot, SERVICE_NAMES_SCHEMA};
use parser::{parse_unit, simple_type_name, ParseError, ParsedUnit, TypeDecl};
pub use profile::{EndpointMarker, MarkerProfile, RemoteCallPattern, VerbSource, PROFILE_ENV, PROFILE_SCHEMA};
use unit::{entity_of, method_summary, MethodContext};
pub use unit::{
    classify_parsed, classify_source_unit, extract_endpoints, extract_entity, extract_rest_calls,
    interpret_url, type_names, Extracted,
};

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("invalid marker profile: {0}")]
    Profile(String),
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unreadable source tree {}: {message}", path.display())]
    UnreadableTree { path: PathBuf, message: String },
    #[error("`{unit}` carries both {first} and {second} markers")]
    AmbiguousClassification {
        unit: String,
        first: ComponentType,
        second: ComponentType,
    },
    #[error("parse failure: {0}")]
    Parse(String),
    #[error("two service roots map to the name `{0}`")]
    DuplicateService(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum WarningKind {
    ParseFailure,
    Unreadable,
    AmbiguousClassification,
    DuplicateUnit,
    DuplicateEndpoint,
    EmptyEntity,
    UnresolvedVerb,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExtractWarning {
    /// Path relative to the scanned root.
    pub path: String,
    pub kind: WarningKind,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ScanOutput {
    pub ir: MicroserviceIR,
    pub warnings: Vec<ExtractWarning>,
}

impl ScanOutput {
    /// Paths whose source failed to read or parse.
    pub fn failed_paths(&self) -> BTreeSet<String> {
        self.warnings
            .iter()
            .filter(|w| matches!(w.kind, WarningKind::ParseFailure | WarningKind::Unreadable))
            .map(|w| w.path.clone())
            .collect()
    }
}

type CachedParse = Arc<Result<ParsedUnit, ParseError>>;

/// Parse results keyed by content digest, shared across scans.
///
/// Entries live for two generations: [`ParseCache::next_generation`] drops
/// anything not looked up since the previous call, which bounds memory
/// during long replays while keeping unchanged files parsed once.
#[derive(Default)]
pub struct ParseCache {
    generations: Mutex<(HashMap<String, CachedParse>, HashMap<String, CachedParse>)>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl ParseCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn get_or_parse(&self, text: &str) -> CachedParse {
        let key = sha256_hex(text.as_bytes());
        {
            let mut g = self.generations.lock().expect("cache lock");
            if let Some(hit) = g.0.get(&key).cloned() {
                self.hits.fetch_add(1, Ordering::Relaxed);
                return hit;
            }
            if let Some(hit) = g.1.remove(&key) {
                g.0.insert(key, hit.clone());
                self.hits.fetch_add(1, Ordering::Relaxed);
                return hit;
            }
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let parsed = Arc::new(parse_unit(text));
        self.generations
            .lock()
            .expect("cache lock")
            .0
            .insert(key, parsed.clone());
        parsed
    }

    pub fn next_generation(&self) {
        let mut g = self.generations.lock().expect("cache lock");
        g.1 = std::mem::take(&mut g.0);
    }

    /// (hits, misses) since creation.
    pub fn stats(&self) -> (usize, usize) {
        (self.hits.load(Ordering::Relaxed), self.misses.load(Ordering::Relaxed))
    }
}

#[derive(Default, Clone, Copy)]
pub struct ScanOptions<'a> {
    pub names: Option<&'a ServiceNames>,
    pub cache: Option<&'a ParseCache>,
}

const SOURCE_EXTENSION: &str = "java";

struct SourceFile {
    rel_path: String,
    parsed: CachedParse,
}

fn collect_sources(
    root: &Path,
    warnings: &mut Vec<ExtractWarning>,
) -> Result<Vec<(String, PathBuf)>, ExtractError> {
    if !root.is_dir() {
        return Err(ExtractError::UnreadableTree {
            path: root.to_path_buf(),
            message: "not a readable directory".into(),
        });
    }
    if let Err(e) = std::fs::read_dir(root) {
        return Err(ExtractError::UnreadableTree {
            path: root.to_path_buf(),
            message: e.to_string(),
        });
    }
    let mut files = Vec::new();
    let walker = WalkDir::new(root).sort_by_file_name().into_iter().filter_entry(|e| {
        e.depth() == 0
            || !e.file_type().is_dir()
            || !discover::is_skipped_dir(&e.file_name().to_string_lossy())
    });
    for entry in walker {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                let rel = e
                    .path()
                    .and_then(|p| p.strip_prefix(root).ok())
                    .map(rel_string)
                    .unwrap_or_default();
                warnings.push(ExtractWarning {
                    path: rel,
                    kind: WarningKind::Unreadable,
                    message: e.to_string(),
                });
                continue;
            }
        };
        if entry.file_type().is_file()
            && entry.path().extension().is_some_and(|x| x == SOURCE_EXTENSION)
        {
            let rel = rel_string(entry.path().strip_prefix(root).unwrap_or(entry.path()));
            files.push((rel, entry.path().to_path_buf()));
        }
    }
    files.sort();
    Ok(files)
}

fn rel_string(p: &Path) -> String {
    p.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

/// One classified unit awaiting method resolution.
struct Classified<'a> {
    id: ComponentId,
    file: &'a SourceFile,
    unit: &'a ParsedUnit,
    decl: &'a TypeDecl,
}

/// Lookup tables for resolving intra-service call targets.
struct CallIndex<'a> {
    by_simple: BTreeMap<&'a str, Vec<usize>>,
    by_super: BTreeMap<String, Vec<usize>>,
    signatures: BTreeMap<(&'a str, usize), Vec<usize>>,
    units: &'a [Classified<'a>],
}

impl<'a> CallIndex<'a> {
    fn new(units: &'a [Classified<'a>]) -> Self {
        let mut by_simple: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        let mut by_super: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut signatures: BTreeMap<(&str, usize), Vec<usize>> = BTreeMap::new();
        for (i, u) in units.iter().enumerate() {
            by_simple.entry(u.decl.name.as_str()).or_default().push(i);
            for s in &u.decl.supertypes {
                by_super.entry(simple_type_name(s)).or_default().push(i);
            }
            for m in &u.decl.methods {
                signatures
                    .entry((m.name.as_str(), m.params.len()))
                    .or_default()
                    .push(i);
            }
        }
        CallIndex {
            by_simple,
            by_super,
            signatures,
            units,
        }
    }

    /// Component standing behind a declared type: the unit with that simple
    /// name, else the only unit implementing or extending it.
    fn by_type(&self, ty: &str) -> Option<usize> {
        let simple = simple_type_name(ty);
        match self.by_simple.get(simple.as_str()).map(Vec::as_slice) {
            Some([one]) => return Some(*one),
            Some([_, _, ..]) => return None,
            _ => {}
        }
        match self.by_super.get(&simple).map(Vec::as_slice) {
            Some([one]) => Some(*one),
            _ => None,
        }
    }

    fn by_signature(&self, name: &str, arity: usize, except: usize) -> Option<usize> {
        let found: Vec<usize> = self
            .signatures
            .get(&(name, arity))
            .into_iter()
            .flatten()
            .copied()
            .filter(|i| *i != except)
            .collect();
        match found.as_slice() {
            [one] => Some(*one),
            _ => None,
        }
    }

    fn declares(&self, idx: usize, name: &str, arity: usize) -> bool {
        self.units[idx]
            .decl
            .methods
            .iter()
            .any(|m| m.name == name && m.params.len() == arity)
    }

    fn call_targets(&self, me: usize, ctx: &MethodContext<'_>) -> Vec<String> {
        use body::Receiver;
        let mut out = Vec::new();
        for call in &ctx.facts.calls {
            let arity = call.args.len();
            let target = match &call.receiver {
                Receiver::Unqualified | Receiver::This => {
                    self.declares(me, &call.method, arity).then_some(me)
                }
                Receiver::Name(n) => match ctx.receiver_type(&call.receiver, call.pos) {
                    // a typed receiver resolves by type, even for inherited methods
                    Some(ty) => self.by_type(&ty),
                    None if n.starts_with(|c: char| c.is_ascii_uppercase()) => self.by_type(n),
                    None => self.by_signature(&call.method, arity, me),
                },
                Receiver::Complex => None,
            };
            if let Some(t) = target {
                out.push(format!("{}.{}", self.units[t].id.qualified_name, call.method));
            }
        }
        out
    }
}

/// Scans one service tree with default options.
pub fn scan_repository(
    root: &Path,
    profile: &MarkerProfile,
    service_name: &str,
    version_id: &str,
) -> Result<MicroserviceIR, ExtractError> {
    Ok(scan_repository_with(root, profile, service_name, version_id, ScanOptions::default())?.ir)
}

/// Scans one service tree, reporting per-file problems as warnings.
pub fn scan_repository_with(
    root: &Path,
    profile: &MarkerProfile,
    service_name: &str,
    version_id: &str,
    options: ScanOptions<'_>,
) -> Result<ScanOutput, ExtractError> {
    profile.validate()?;
    let default_names = ServiceNames::default();
    let names = options.names.unwrap_or(&default_names);
    let mut warnings = Vec::new();
    let paths = collect_sources(root, &mut warnings)?;

    let loaded: Vec<Result<SourceFile, ExtractWarning>> = paths
        .par_iter()
        .map(|(rel, abs)| {
            let text = std::fs::read(abs).map_err(|e| ExtractWarning {
                path: rel.clone(),
                kind: WarningKind::Unreadable,
                message: e.to_string(),
            })?;
            let text = String::from_utf8_lossy(&text);
            let parsed = match options.cache {
                Some(cache) => cache.get_or_parse(&text),
                None => Arc::new(parse_unit(&text)),
            };
            Ok(SourceFile {
                rel_path: rel.clone(),
                parsed,
            })
        })
        .collect();

    let mut files = Vec::new();
    for f in loaded {
        match f {
            Ok(f) => files.push(f),
            Err(w) => warnings.push(w),
        }
    }

    let mut classified: Vec<Classified<'_>> = Vec::new();
    let mut seen: BTreeMap<ComponentId, String> = BTreeMap::new();
    for file in &files {
        let unit = match file.parsed.as_ref() {
            Ok(u) => u,
            Err(e) => {
                warnings.push(ExtractWarning {
                    path: file.rel_path.clone(),
                    kind: WarningKind::ParseFailure,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let (idx, ctype) = match classify_parsed(unit, profile) {
            Ok(Some(found)) => found,
            Ok(None) => continue,
            Err(e) => {
                warnings.push(ExtractWarning {
                    path: file.rel_path.clone(),
                    kind: WarningKind::AmbiguousClassification,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let decl = &unit.types[idx];
        let id = ComponentId::new(service_name, ctype, unit.qualified_name(&decl.name))
            .map_err(|e| ExtractError::Profile(e.to_string()))?;
        if let Some(first) = seen.get(&id) {
            warnings.push(ExtractWarning {
                path: file.rel_path.clone(),
                kind: WarningKind::DuplicateUnit,
                message: format!("{id} already declared in {first}"),
            });
            continue;
        }
        seen.insert(id.clone(), file.rel_path.clone());
        classified.push(Classified {
            id,
            file,
            unit,
            decl,
        });
    }

    let index = CallIndex::new(&classified);
    let built: Vec<(Component, Vec<ExtractWarning>)> = classified
        .par_iter()
        .enumerate()
        .map(|(i, c)| build_component(i, c, &index, profile, names))
        .collect();

    let mut components = Vec::new();
    for (c, w) in built {
        components.push(c);
        warnings.extend(w);
    }
    components.sort_by(|a, b| a.id.cmp(&b.id));
    let components = drop_duplicate_endpoints(components, &mut warnings);

    warnings.sort();
    Ok(ScanOutput {
        ir: MicroserviceIR::from_components(service_name, version_id, components),
        warnings,
    })
}

fn build_component(
    me: usize,
    c: &Classified<'_>,
    index: &CallIndex<'_>,
    profile: &MarkerProfile,
    names: &ServiceNames,
) -> (Component, Vec<ExtractWarning>) {
    let mut notes = Vec::new();
    let mut warnings = Vec::new();
    let mut methods = Vec::new();
    for m in &c.decl.methods {
        let ctx = MethodContext::new(c.unit, c.decl, m);
        let mut method = method_summary(&ctx);
        method.body_call_targets = index.call_targets(me, &ctx);
        method.rest_calls = ctx.rest_calls(&c.id, profile, names, &mut notes);
        methods.push(method);
    }
    for n in notes.drain(..) {
        warnings.push(ExtractWarning {
            path: c.file.rel_path.clone(),
            kind: WarningKind::UnresolvedVerb,
            message: n,
        });
    }
    let endpoints = if c.id.component_type == ComponentType::Controller {
        extract_endpoints(c.unit, &c.id, profile)
    } else {
        Vec::new()
    };
    let entity = if c.id.component_type == ComponentType::Entity {
        let e = entity_of(c.decl, profile);
        for n in e.warnings {
            warnings.push(ExtractWarning {
                path: c.file.rel_path.clone(),
                kind: WarningKind::EmptyEntity,
                message: n,
            });
        }
        Some(e.value)
    } else {
        None
    };
    (
        Component::new(c.id.clone(), methods, endpoints, entity, c.file.rel_path.clone()),
        warnings,
    )
}

/// Keeps the first endpoint per (verb, path) in component order.
fn drop_duplicate_endpoints(
    components: Vec<Component>,
    warnings: &mut Vec<ExtractWarning>,
) -> Vec<Component> {
    let mut taken: BTreeMap<(HttpMethod, String), ComponentId> = BTreeMap::new();
    let mut out = Vec::with_capacity(components.len());
    for c in components {
        let mut kept: Vec<Endpoint> = Vec::new();
        let mut dropped = false;
        for e in &c.endpoints {
            let key = (e.http_method, e.path.clone());
            if let Some(owner) = taken.get(&key) {
                warnings.push(ExtractWarning {
                    path: c.source_path.clone(),
                    kind: WarningKind::DuplicateEndpoint,
                    message: format!("{} {} already served by {owner}", e.http_method, e.path),
                });
                dropped = true;
            } else {
                taken.insert(key, c.id.clone());
                kept.push(e.clone());
            }
        }
        if dropped {
            out.push(Component::new(c.id, c.methods, kept, c.entity_ref, c.source_path));
        } else {
            out.push(c);
        }
    }
    out
}
