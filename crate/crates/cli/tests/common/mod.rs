#![allow(dead_code)]

use std::path::{Path, PathBuf};

use cfdcast_cli::{commands, Workspace};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/synthetic")
}

/// Copy of the bundled fixture in a temporary directory, optionally
/// ingested and fitted.
pub fn workspace(prepare: bool) -> (tempfile::TempDir, Workspace) {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&fixture_dir(), dir.path());
    let ws = Workspace::new(dir.path());
    if prepare {
        commands::ingest(&ws, None).unwrap();
        commands::fit(&ws, None).unwrap();
    }
    (dir, ws)
}

fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            std::fs::copy(entry.path(), target).unwrap();
        }
    }
}
