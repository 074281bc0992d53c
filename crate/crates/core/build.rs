use std::env;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

// Embeds everything under assets/ as (name, contents) tables.
fn table(out: &mut String, root: &Path, dir: &str, ext: &str) {
    let path = root.join("assets").join(dir);
    println!("cargo:rerun-if-changed={}", path.display());
    let mut entries: Vec<PathBuf> = fs::read_dir(&path)
        .map(|rd| rd.filter_map(|e| e.ok()).map(|e| e.path()).collect())
        .unwrap_or_default();
    entries.retain(|p| p.extension().is_some_and(|e| e == ext));
    entries.sort();
    let konst = dir.to_uppercase();
    writeln!(out, "pub(crate) static {konst}: &[(&str, &str)] = &[").unwrap();
    for p in entries {
        println!("cargo:rerun-if-changed={}", p.display());
        let stem = p.file_stem().unwrap().to_string_lossy();
        writeln!(
            out,
            "    ({stem:?}, include_str!({:?})),",
            p.display().to_string()
        )
        .unwrap();
    }
    writeln!(out, "];").unwrap();
}

fn main() {
    let root = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    let mut out = String::new();
    table(&mut out, &root, "layouts", "layout");
    table(&mut out, &root, "params", "params");
    table(&mut out, &root, "suite", "scenario");
    table(&mut out, &root, "trajectories", "traj");
    let dest = PathBuf::from(env::var("OUT_DIR").unwrap()).join("assets.rs");
    fs::write(dest, out).unwrap();
}
