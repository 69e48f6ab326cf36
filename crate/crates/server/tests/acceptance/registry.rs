use std::path::{Path, PathBuf};
use std::sync::Arc;

use modstat_core::registry::{discover, load_manifest, nav_structure, ErrorCode, RegistryError};
use modstat_core::session::Session;

use crate::ensure;

pub fn modules_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../modules")
}

pub fn extra_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../extra_modules")
}

pub fn copy_tree(from: &Path, to: &Path) -> std::io::Result<()> {
    for entry in std::fs::read_dir(from)? {
        let entry = entry?;
        let target = to.join(entry.file_name());
        if entry.path().is_dir() {
            std::fs::create_dir_all(&target)?;
            copy_tree(&entry.path(), &target)?;
        } else {
            std::fs::copy(entry.path(), target)?;
        }
    }
    Ok(())
}

const DEFAULTS: [&str; 7] = [
    "data/sources",
    "data/transform",
    "summaries/graphical",
    "summaries/numerical",
    "inference/contingency",
    "inference/regression",
    "inference/ttest",
];

pub fn run() -> Result<String, String> {
    let e = |e: RegistryError| e.to_string();
    let all = discover(&modules_dir(), None).map_err(e)?;
    ensure(all.ids() == DEFAULTS, || format!("default tree exposes {:?}", all.ids()))?;

    let enabled = ["data/transform".to_string(), "summaries/numerical".to_string()];
    let some = discover(&modules_dir(), Some(&enabled)).map_err(e)?;
    ensure(some.ids() == ["data/sources", "data/transform", "summaries/numerical"], || {
        format!("enablement example gave {:?}", some.ids())
    })?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    copy_tree(&modules_dir(), dir.path()).map_err(|e| e.to_string())?;
    copy_tree(&extra_dir(), dir.path()).map_err(|e| e.to_string())?;
    let extended = Arc::new(discover(dir.path(), None).map_err(e)?);
    ensure(extended.ids().len() == 8, || format!("drop-in gave {:?}", extended.ids()))?;
    let nav = nav_structure(&extended);
    let inference = nav.iter().find(|s| s.heading == "Inference").ok_or("no Inference section")?;
    ensure(inference.entries.iter().any(|m| m.id == "inference/nonparametric"), || {
        "nonparametric module missing from the Inference section".into()
    })?;
    let session = Session::new("registry", extended.clone()).map_err(|e| e.to_string())?;
    let out = session.outputs("inference/nonparametric").map_err(|e| e.to_string())?;
    ensure(out[0].statement.as_deref().is_some_and(|s| s.starts_with("wilcoxon_rank_sum(")), || {
        format!("nonparametric module not wired: {out:?}")
    })?;

    let path = extra_dir().join("inference/nonparametric/manifest.json");
    let mut manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    manifest.as_object_mut().ok_or("manifest is not an object")?.remove("store_button");
    let err = load_manifest(manifest.to_string().as_bytes()).err().ok_or("manifest without store button accepted")?;
    ensure(err.has(ErrorCode::StoreButtonMissing), || format!("wrong rejection: {err}"))?;
    let broken = dir.path().join("inference/nonparametric/manifest.json");
    std::fs::write(&broken, manifest.to_string()).map_err(|e| e.to_string())?;
    ensure(matches!(discover(dir.path(), None), Err(RegistryError::Manifest { .. })), || {
        "discovery accepted a module without a store button".into()
    })?;

    Ok("7 defaults; enablement example; nonparametric drop-in under Inference; missing store button rejected".into())
}
