//! Where version trees come from.

use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use super::HistoryError;

/// One version of the system, materialized as a local tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VersionInput {
    pub label: String,
    pub root: PathBuf,
}

/// Subdirectories of `parent` in natural order (`v2` before `v10`).
pub fn version_dirs(parent: &Path) -> Result<Vec<VersionInput>, HistoryError> {
    let entries = std::fs::read_dir(parent).map_err(|source| HistoryError::Io {
        path: parent.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for e in entries {
        let e = e.map_err(|source| HistoryError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
        let name = e.file_name().to_string_lossy().into_owned();
        if e.path().is_dir() && !name.starts_with('.') {
            out.push(VersionInput {
                label: name,
                root: e.path(),
            });
        }
    }
    out.sort_by(|a, b| natord::compare(&a.label, &b.label));
    Ok(out)
}

/// Explicit version directories, labelled by their final path component.
pub fn listed_dirs(paths: &[PathBuf]) -> Vec<VersionInput> {
    paths
        .iter()
        .map(|p| VersionInput {
            label: p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string()),
            root: p.clone(),
        })
        .collect()
}

fn git(repo: &Path) -> Command {
    let mut c = Command::new("git");
    c.arg("-C").arg(repo);
    c
}

fn git_error(what: &str, detail: impl std::fmt::Display) -> HistoryError {
    HistoryError::Git(format!("{what}: {detail}"))
}

/// First-parent history of `rev`, oldest first.
pub fn git_revisions(repo: &Path, rev: &str) -> Result<Vec<String>, HistoryError> {
    let out = git(repo)
        .args(["rev-list", "--first-parent", "--reverse", rev])
        .output()
        .map_err(|e| git_error("cannot run git", e))?;
    if !out.status.success() {
        return Err(git_error("rev-list failed", String::from_utf8_lossy(&out.stderr).trim()));
    }
    Ok(String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(str::to_owned)
        .filter(|l| !l.is_empty())
        .collect())
}

/// Writes the tree of `rev` into `dest` with `git archive | tar -x`.
pub fn materialize_revision(repo: &Path, rev: &str, dest: &Path) -> Result<(), HistoryError> {
    std::fs::create_dir_all(dest).map_err(|source| HistoryError::Io {
        path: dest.to_path_buf(),
        source,
    })?;
    let mut archive = git(repo)
        .args(["archive", "--format=tar", rev])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| git_error("cannot run git", e))?;
    let stdout = archive.stdout.take().expect("piped stdout");
    let tar = Command::new("tar")
        .arg("-x")
        .arg("-C")
        .arg(dest)
        .stdin(stdout)
        .output()
        .map_err(|e| git_error("cannot run tar", e))?;
    let status = archive.wait().map_err(|e| git_error("git archive", e))?;
    if !status.success() {
        let mut msg = String::new();
        if let Some(mut err) = archive.stderr.take() {
            use std::io::Read;
            let _ = err.read_to_string(&mut msg);
        }
        return Err(git_error(&format!("archive of {rev} failed"), msg.trim()));
    }
    if !tar.status.success() {
        return Err(git_error("tar failed", String::from_utf8_lossy(&tar.stderr).trim()));
    }
    Ok(())
}

/// Label used for a revision: its first 12 characters.
pub fn revision_label(rev: &str) -> String {
    rev.chars().take(12).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn natural_order() {
        let dir = tempfile::tempdir().unwrap();
        for n in ["v10", "v2", "v1", ".hidden"] {
            std::fs::create_dir(dir.path().join(n)).unwrap();
        }
        std::fs::write(dir.path().join("notes.txt"), "x").unwrap();
        let labels: Vec<String> = version_dirs(dir.path()).unwrap().into_iter().map(|v| v.label).collect();
        assert_eq!(labels, ["v1", "v2", "v10"]);
    }
}
