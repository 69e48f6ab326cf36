// Bundled stylesheets. Each theme only overrides the palette; layout lives
// in the shared base.

const BASE: &str = r#"
* { box-sizing: border-box; }
body { margin: 0; font-family: var(--font); background: var(--bg); color: var(--fg); }
header { display: flex; justify-content: space-between; align-items: center; padding: .5rem 1rem; background: var(--bar); color: var(--bar-fg); }
header button { margin-left: .5rem; }
header button.flash { outline: 2px solid var(--accent); }
main { display: grid; grid-template-columns: 14rem 1fr; min-height: calc(100vh - 3rem); }
nav { padding: 1rem; border-right: 1px solid var(--rule); }
nav h3 { margin: 1rem 0 .25rem; font-size: .9rem; text-transform: uppercase; color: var(--muted); }
nav a { display: block; padding: .2rem 0; color: var(--accent); cursor: pointer; }
#workspace { display: grid; grid-template-columns: repeat(12, 1fr); gap: 1rem; padding: 1rem; align-content: start; }
#options label { display: block; margin-top: .75rem; font-size: .9rem; }
#options select, #options input { width: 100%; }
#results pre, #code pre { background: var(--panel); padding: .75rem; overflow: auto; }
#code { grid-column: 1 / -1; }
#code.hidden { display: none; }
.error { color: #b00020; }
"#;

const THEMES: &[(&str, &str)] = &[
    (
        "cerulean",
        ":root{--font:-apple-system,Segoe UI,Roboto,sans-serif;--bg:#fff;--fg:#495057;--bar:#2fa4e7;--bar-fg:#fff;--accent:#2fa4e7;--rule:#dee2e6;--panel:#f1f8fc;--muted:#868e96}",
    ),
    (
        "default",
        ":root{--font:Helvetica,Arial,sans-serif;--bg:#fff;--fg:#222;--bar:#f8f8f8;--bar-fg:#333;--accent:#337ab7;--rule:#e7e7e7;--panel:#f5f5f5;--muted:#777}",
    ),
    (
        "flatly",
        ":root{--font:Lato,Helvetica,Arial,sans-serif;--bg:#fff;--fg:#2c3e50;--bar:#2c3e50;--bar-fg:#fff;--accent:#18bc9c;--rule:#ecf0f1;--panel:#ecf0f1;--muted:#95a5a6}",
    ),
];

pub fn names() -> Vec<&'static str> {
    THEMES.iter().map(|(n, _)| *n).collect()
}

/// The canonical name of a bundled theme.
pub fn stylesheet_name(name: &str) -> Option<&'static str> {
    THEMES.iter().find(|(n, _)| n.eq_ignore_ascii_case(name)).map(|(n, _)| *n)
}

pub fn stylesheet(name: &str) -> String {
    let palette = THEMES.iter().find(|(n, _)| *n == name).map_or(THEMES[1].1, |(_, css)| css);
    format!("{palette}\n{BASE}")
}
