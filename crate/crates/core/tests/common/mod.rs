#![allow(dead_code)]

use frontier_nav::suite::SuiteConfig;
use std::path::{Path, PathBuf};

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn world_path(name: &str) -> PathBuf {
    repo_root().join("worlds").join(name)
}

/// A shipped config with its output redirected into `out`.
pub fn shipped_config(name: &str, out: &Path) -> SuiteConfig {
    let mut c = SuiteConfig::load(&repo_root().join("configs").join(name)).expect("shipped config loads");
    c.output_dir = out.to_path_buf();
    c
}

/// A small scripted suite on one of the bundled worlds.
pub fn small_config(world: &str, out: &Path, extra: &str) -> SuiteConfig {
    let text = format!(
        r#"
world = "{}"
output_dir = "{}"
master_seed = 11
levels = [1]
episodes_per_level = 2
methods = ["reasoned-explorer", "llm-as-eval"]
{extra}
[backend]
kind = "scripted"
"#,
        world_path(world).display(),
        out.display()
    );
    SuiteConfig::parse(&text, Path::new(".")).expect("test config parses")
}

/// Every file under `dir` as (relative path, bytes), sorted.
pub fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}
