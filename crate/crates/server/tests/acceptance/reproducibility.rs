//! Randomized sessions: whatever was stored must come back unchanged when
//! the script is replayed against the uploaded file.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde_json::json;

use modstat_core::registry::{discover, Registry, Widget};
use modstat_core::session::{Session, SessionError};
use modstat_core::Parallelism;

use crate::ensure;
use crate::registry::{copy_tree, extra_dir, modules_dir};

const SESSIONS: usize = 200;
const LIMIT: Duration = Duration::from_secs(60);

fn cell(rng: &mut StdRng, positive: bool) -> String {
    if rng.gen_bool(0.05) {
        return String::new();
    }
    let v: f64 = if positive { rng.gen_range(0.1..50.0) } else { rng.gen_range(-20.0..20.0) };
    format!("{:.*}", rng.gen_range(0..=3), v)
}

fn dataset(rng: &mut StdRng) -> Vec<u8> {
    let rows = rng.gen_range(6..=40);
    let numeric = rng.gen_range(2..=5);
    let categorical = rng.gen_range(1..=3);
    let positive: Vec<bool> = (0..numeric).map(|_| rng.gen()).collect();
    let levels: Vec<usize> = (0..categorical).map(|_| rng.gen_range(2..=4)).collect();
    let mut header: Vec<String> = (0..numeric).map(|i| format!("x{i}")).collect();
    header.extend((0..categorical).map(|i| format!("group {i}")));
    let mut out = header.join(",") + "\n";
    for _ in 0..rows {
        let mut row: Vec<String> = positive.iter().map(|&p| cell(rng, p)).collect();
        row.extend(levels.iter().map(|&l| format!("level{}", rng.gen_range(0..l))));
        let _ = writeln!(out, "{}", row.join(","));
    }
    out.into_bytes()
}

fn random_value(rng: &mut StdRng, widget: &Widget, choices: Option<&Vec<String>>) -> Option<serde_json::Value> {
    match widget {
        Widget::Select => choices.and_then(|c| c.choose(rng)).map(|c| json!(c)),
        Widget::MultiSelect => {
            let c = choices?;
            let picked: Vec<&String> = c.iter().filter(|_| rng.gen_bool(0.5)).collect();
            Some(json!(picked))
        }
        Widget::NumericField => Some(if rng.gen_bool(0.7) {
            json!(rng.gen_range(1..=20))
        } else {
            json!((rng.gen_range(-5.0f64..5.0) * 100.0).round() / 100.0)
        }),
        Widget::Slider(s) => {
            let steps = ((s.max - s.min) / s.step).floor() as u64;
            let v = s.snap(s.min + rng.gen_range(0..=steps) as f64 * s.step)?;
            Some(json!(v))
        }
        Widget::Checkbox => Some(json!(rng.gen::<bool>())),
        Widget::ActionButton => None,
    }
}

fn one_session(registry: &Arc<Registry>, seed: u64) -> Result<usize, String> {
    let mut rng = StdRng::seed_from_u64(seed);
    let ctx = |msg: String| format!("session {seed}: {msg}");
    let bytes = dataset(&mut rng);
    let mut session = Session::with_data(format!("s{seed}"), registry.clone(), "data.csv", bytes.clone())
        .map_err(|e| ctx(e.to_string()))?;
    let ids = registry.ids();
    let mut stored = 0;
    for _ in 0..rng.gen_range(5..=40) {
        let module = ids.choose(&mut rng).expect("modules");
        if rng.gen_bool(0.3) {
            match session.store_result(module) {
                Ok(len) => {
                    stored += 1;
                    ensure(len == stored, || ctx(format!("script length {len} after {stored} stores")))?;
                }
                Err(SessionError::ErroredResult { .. } | SessionError::NothingToStore(_)) => {}
                Err(e) => return Err(ctx(format!("storing {module}: {e}"))),
            }
            continue;
        }
        let ui = session.module_ui(module).map_err(|e| ctx(e.to_string()))?;
        let Some(input) = ui.inputs.choose(&mut rng) else { continue };
        let Some(value) = random_value(&mut rng, &input.widget, input.choices.as_ref()) else { continue };
        match session.set_input(&input.global_id, &value) {
            Ok(_) => {}
            // free-form numbers may be out of range for their parameter
            Err(_) if input.widget == Widget::NumericField => {}
            Err(e) => return Err(ctx(format!("{} = {value}: {e}", input.global_id))),
        }
    }

    let live = session.stored_results();
    ensure(live.len() == stored, || ctx(format!("{} stored results, {stored} stores", live.len())))?;
    let mode = if seed.is_multiple_of(2) { Parallelism::Parallel } else { Parallelism::Sequential };
    let doc = session.render_report(mode).map_err(|e| ctx(e.to_string()))?;
    ensure(doc.blocks.len() == stored, || ctx(format!("report has {} blocks, {stored} stored", doc.blocks.len())))?;
    for (i, (block, want)) in doc.blocks.iter().zip(&live).enumerate() {
        ensure(block.result.value.approx_eq(want, 1e-12), || {
            ctx(format!("result {i} changed on replay:\n{}\nvs\n{}", block.result.value.to_json(), want.to_json()))
        })?;
    }

    // resuming from the script gives back the same script and results
    let resumed = Session::resume(format!("r{seed}"), registry.clone(), &session.script_text(), "data.csv", bytes)
        .map_err(|e| ctx(format!("resume: {e}")))?;
    ensure(resumed.script_text() == session.script_text(), || ctx("resumed script differs".into()))?;
    let again = resumed.stored_results();
    ensure(again.len() == live.len() && again.iter().zip(&live).all(|(a, b)| a.approx_eq(b, 1e-12)), || {
        ctx("resumed results differ".into())
    })?;
    Ok(stored)
}

pub fn run() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    copy_tree(&modules_dir(), dir.path()).map_err(|e| e.to_string())?;
    copy_tree(&extra_dir(), dir.path()).map_err(|e| e.to_string())?;
    let registry = Arc::new(discover(dir.path(), None).map_err(|e| e.to_string())?);
    let start = Instant::now();
    let mut total = 0;
    for seed in 0..SESSIONS as u64 {
        total += one_session(&registry, 0x2e9_0000 + seed)?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < LIMIT, || format!("{SESSIONS} sessions took {elapsed:.1?}, limit {LIMIT:?}"))?;
    Ok(format!("{SESSIONS} sessions, {total} stored results replayed identically in {elapsed:.1?}"))
}
