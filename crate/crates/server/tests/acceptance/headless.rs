use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

use serde_json::json;

use modstat_core::registry::discover;
use modstat_core::session::{Session, DEMO_CSV};
use modstat_core::Parallelism;

use crate::ensure;
use crate::registry::{extra_dir, modules_dir};

fn modstat(args: &[&std::ffi::OsStr]) -> Result<Output, String> {
    Command::new(env!("CARGO_BIN_EXE_modstat")).args(args).output().map_err(|e| e.to_string())
}

fn validate(path: &Path) -> Result<Output, String> {
    modstat(&["validate".as_ref(), path.as_os_str()])
}

pub fn run() -> Result<String, String> {
    let mut manifests = Vec::new();
    for root in [modules_dir(), extra_dir()] {
        for cat in std::fs::read_dir(&root).map_err(|e| e.to_string())? {
            for module in std::fs::read_dir(cat.map_err(|e| e.to_string())?.path()).map_err(|e| e.to_string())? {
                manifests.push(module.map_err(|e| e.to_string())?.path().join("manifest.json"));
            }
        }
    }
    for path in &manifests {
        let out = validate(path)?;
        let stdout = String::from_utf8_lossy(&out.stdout);
        ensure(out.status.success() && stdout.starts_with("ok "), || {
            format!("validate {} failed: {}", path.display(), String::from_utf8_lossy(&out.stderr))
        })?;
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut broken: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&manifests[0]).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    broken.as_object_mut().ok_or("not an object")?.remove("store_button");
    let broken_path = dir.path().join("broken.json");
    std::fs::write(&broken_path, broken.to_string()).map_err(|e| e.to_string())?;
    let out = validate(&broken_path)?;
    ensure(!out.status.success(), || "validate accepted a manifest without a store button".into())?;

    // a script produced by a live session, replayed by the CLI
    let registry = Arc::new(discover(&modules_dir(), None).map_err(|e| e.to_string())?);
    let mut session = Session::new("headless", registry).map_err(|e| e.to_string())?;
    session.store_result("summaries/numerical").map_err(|e| e.to_string())?;
    session.set_input("summaries.graphical.kind", &json!("scatter")).map_err(|e| e.to_string())?;
    session.store_result("summaries/graphical").map_err(|e| e.to_string())?;
    session.store_result("inference/regression").map_err(|e| e.to_string())?;
    session.store_result("inference/ttest").map_err(|e| e.to_string())?;
    let expected = session.render_report(Parallelism::Sequential).map_err(|e| e.to_string())?;

    let script = dir.path().join("analysis.modstat");
    let csv = dir.path().join("mpg.csv");
    std::fs::write(&script, session.script_text()).map_err(|e| e.to_string())?;
    std::fs::write(&csv, DEMO_CSV).map_err(|e| e.to_string())?;
    let report_dir = dir.path().join("out");
    let out =
        modstat(&["report".as_ref(), script.as_os_str(), csv.as_os_str(), "--out".as_ref(), report_dir.as_os_str()])?;
    ensure(out.status.success(), || format!("report failed: {}", String::from_utf8_lossy(&out.stderr)))?;
    let md = std::fs::read_to_string(report_dir.join("report.md")).map_err(|e| e.to_string())?;
    ensure(md == expected.to_markdown(), || "CLI report differs from the in-process report".into())?;
    for rel in expected.images.keys() {
        ensure(report_dir.join(rel).is_file(), || format!("missing image {rel}"))?;
    }
    ensure(expected.images.len() == 1 && expected.blocks.len() == 4, || {
        format!("{} blocks, {} images", expected.blocks.len(), expected.images.len())
    })?;

    Ok(format!(
        "{} manifests validated, broken one rejected; CLI report of {} results matches",
        manifests.len(),
        expected.blocks.len()
    ))
}
