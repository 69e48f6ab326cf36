use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tower::ServiceExt;

use modstat_server::{app, AppState, ServerConfig};

use crate::ensure;
use crate::registry::modules_dir;

const ROWS: usize = 30_000;
const LIMIT: Duration = Duration::from_secs(5);

/// Seven numeric and three categorical columns, with a few blanks.
fn csv() -> String {
    let mut rng = StdRng::seed_from_u64(30_000);
    let mut out = String::from("id,a,b,c,d,e,f,group,site,flag\n");
    for i in 0..ROWS {
        let _ = write!(out, "{i}");
        for _ in 0..6 {
            if rng.gen_bool(0.01) {
                out.push(',');
            } else {
                let _ = write!(out, ",{:.3}", rng.gen_range(-100.0..100.0));
            }
        }
        let _ = writeln!(
            out,
            ",g{},site_{},{}",
            rng.gen_range(0..5),
            rng.gen_range(0..12),
            if rng.gen_bool(0.5) { "yes" } else { "no" }
        );
    }
    out
}

pub fn run() -> Result<String, String> {
    let body = csv();
    let bytes = body.len();
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(async move {
        let state = Arc::new(AppState::new(&ServerConfig::new(modules_dir())).map_err(|e| e.to_string())?);
        let router = app(state);
        let call = |req: Request<Body>| {
            let router = router.clone();
            async move {
                let resp = router.oneshot(req).await.map_err(|e| e.to_string())?;
                let status = resp.status();
                let body = resp.into_body().collect().await.map_err(|e| e.to_string())?.to_bytes();
                Ok::<_, String>((status, body))
            }
        };
        let (_, created) = call(Request::post("/api/sessions").body(Body::empty()).unwrap()).await?;
        let created: serde_json::Value = serde_json::from_slice(&created).map_err(|e| e.to_string())?;
        let sid = created["session_id"].as_str().ok_or("no session id")?.to_string();

        let start = Instant::now();
        let req = Request::post(format!("/api/sessions/{sid}/data?filename=big.csv")).body(Body::from(body)).unwrap();
        let (status, summary) = call(req).await?;
        let elapsed = start.elapsed();
        ensure(status == StatusCode::OK, || format!("upload failed: {status} {}", String::from_utf8_lossy(&summary)))?;
        let summary: serde_json::Value = serde_json::from_slice(&summary).map_err(|e| e.to_string())?;
        ensure(summary["n_rows"] == ROWS, || format!("summary reports {} rows", summary["n_rows"]))?;
        let columns = summary["columns"].as_array().ok_or("no columns")?;
        ensure(columns.len() == 10, || format!("{} columns", columns.len()))?;
        let types: Vec<&str> = columns.iter().filter_map(|c| c["type"].as_str()).collect();
        ensure(types.iter().filter(|t| **t == "Numeric").count() == 7, || format!("column types {types:?}"))?;
        ensure(elapsed < LIMIT, || format!("took {elapsed:.2?}, limit {LIMIT:?}"))?;
        Ok(format!("{ROWS} x 10 ({:.1} MiB) summarised in {elapsed:.2?}", bytes as f64 / 1048576.0))
    })
}
