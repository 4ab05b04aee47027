//! Replay configuration files (TOML).

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::source::{self, VersionInput};
use super::{HistoryError, ReplaySettings, DEFAULT_INTEGRITY_INTERVAL};
use crate::extract::{MarkerProfile, ServiceNames};
use crate::link::DEFAULT_OVERLAP_THRESHOLD;
use crate::rules::{builtin_rules, load_rules_file};

fn default_threshold() -> f64 {
    DEFAULT_OVERLAP_THRESHOLD
}

fn default_interval() -> usize {
    DEFAULT_INTEGRITY_INTERVAL
}

fn default_rev() -> String {
    "HEAD".into()
}

/// Relative paths are resolved against the directory of the config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub out: PathBuf,
    #[serde(default)]
    pub profile: Option<PathBuf>,
    #[serde(default)]
    pub rules: Option<PathBuf>,
    #[serde(default)]
    pub service_names: Option<PathBuf>,
    #[serde(default = "default_threshold")]
    pub overlap_threshold: f64,
    /// Compare the increment with a full build every N analyzed versions; 0 disables.
    #[serde(default = "default_interval")]
    pub integrity_check_interval: usize,
    pub source: SourceConfig,
    #[serde(skip)]
    base: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    /// A directory whose subdirectories are versions, in natural order.
    #[serde(default)]
    pub dirs: Option<PathBuf>,
    /// Explicit version directories, oldest first.
    #[serde(default)]
    pub versions: Option<Vec<PathBuf>>,
    /// A git working copy; history is its first-parent chain.
    #[serde(default)]
    pub git: Option<PathBuf>,
    #[serde(default = "default_rev")]
    pub rev: String,
    /// Explicit revisions instead of the `rev` history.
    #[serde(default)]
    pub revisions: Option<Vec<String>>,
}

/// Versions to replay; git revisions are materialized one at a time.
pub enum VersionSource {
    Dirs(Vec<VersionInput>),
    Git {
        repo: PathBuf,
        revisions: Vec<String>,
        scratch: tempfile::TempDir,
    },
}

impl VersionSource {
    pub fn len(&self) -> usize {
        match self {
            VersionSource::Dirs(v) => v.len(),
            VersionSource::Git { revisions, .. } => revisions.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn label(&self, i: usize) -> String {
        match self {
            VersionSource::Dirs(v) => v[i].label.clone(),
            VersionSource::Git { revisions, .. } => source::revision_label(&revisions[i]),
        }
    }

    /// Local tree of version `i`. A git checkout replaces the previous one.
    pub fn fetch(&self, i: usize) -> Result<VersionInput, HistoryError> {
        match self {
            VersionSource::Dirs(v) => Ok(v[i].clone()),
            VersionSource::Git {
                repo,
                revisions,
                scratch,
            } => {
                let dest = scratch.path().join("tree");
                if dest.exists() {
                    std::fs::remove_dir_all(&dest).map_err(|source| HistoryError::Io {
                        path: dest.clone(),
                        source,
                    })?;
                }
                source::materialize_revision(repo, &revisions[i], &dest)?;
                Ok(VersionInput {
                    label: source::revision_label(&revisions[i]),
                    root: dest,
                })
            }
        }
    }
}

impl ReplayConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, HistoryError> {
        let mut cfg: ReplayConfig = toml::from_str(text).map_err(|e| HistoryError::Config {
            path: base.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.base = base.to_path_buf();
        let s = &cfg.source;
        let modes = [s.dirs.is_some(), s.versions.is_some(), s.git.is_some()];
        if modes.iter().filter(|m| **m).count() != 1 {
            return Err(HistoryError::Config {
                path: base.to_path_buf(),
                message: "source needs exactly one of `dirs`, `versions` or `git`".into(),
            });
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HistoryError> {
        let text = std::fs::read_to_string(path).map_err(|source| HistoryError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve_path(&self.out)
    }

    pub fn project_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| "system".into())
    }

    pub fn settings(&self) -> Result<ReplaySettings, HistoryError> {
        let profile = MarkerProfile::resolve(self.profile.as_ref().map(|p| self.resolve_path(p)).as_deref())?;
        let rules = match &self.rules {
            Some(p) => load_rules_file(&self.resolve_path(p))?,
            None => builtin_rules(),
        };
        let names = match &self.service_names {
            Some(p) => ServiceNames::load(&self.resolve_path(p))?,
            None => ServiceNames::default(),
        };
        Ok(ReplaySettings {
            profile,
            rules,
            names,
            overlap_threshold: self.overlap_threshold,
            integrity_interval: self.integrity_check_interval,
        })
    }

    pub fn versions(&self) -> Result<VersionSource, HistoryError> {
        let s = &self.source;
        if let Some(d) = &s.dirs {
            return Ok(VersionSource::Dirs(source::version_dirs(&self.resolve_path(d))?));
        }
        if let Some(list) = &s.versions {
            let paths: Vec<PathBuf> = list.iter().map(|p| self.resolve_path(p)).collect();
            return Ok(VersionSource::Dirs(source::listed_dirs(&paths)));
        }
        let repo = self.resolve_path(s.git.as_ref().expect("validated source"));
        let revisions = match &s.revisions {
            Some(r) => r.clone(),
            None => source::git_revisions(&repo, &s.rev)?,
        };
        let scratch = tempfile::tempdir().map_err(|source| HistoryError::Io {
            path: std::env::temp_dir(),
            source,
        })?;
        Ok(VersionSource::Git {
            repo,
            revisions,
            scratch,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_one_source_mode() {
        let base = Path::new("/cfg");
        let ok = ReplayConfig::from_toml("out = \"o\"\n[source]\ndirs = \"v\"\n", base).unwrap();
        assert_eq!(ok.out_dir(), PathBuf::from("/cfg/o"));
        assert_eq!(ok.integrity_check_interval, DEFAULT_INTEGRITY_INTERVAL);
        assert!(ReplayConfig::from_toml("out = \"o\"\n[source]\n", base).is_err());
        assert!(ReplayConfig::from_toml(
            "out = \"o\"\n[source]\ndirs = \"v\"\ngit = \"r\"\n",
            base
        )
        .is_err());
        assert!(ReplayConfig::from_toml("out = \"o\"\nbogus = 1\n[source]\ndirs = \"v\"\n", base).is_err());
    }
}
