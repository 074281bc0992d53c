//! Files bundled into the library: layouts, parameter presets, the unit-test
//! suite and the replay trajectories used by the validation population.

use crate::grid::{Layout, LayoutError};

include!(concat!(env!("OUT_DIR"), "/assets.rs"));

fn lookup(table: &'static [(&'static str, &'static str)], name: &str) -> Option<&'static str> {
    table.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Names of the bundled layouts, sorted.
pub fn layout_names() -> Vec<&'static str> {
    LAYOUTS.iter().map(|(n, _)| *n).collect()
}

pub fn layout_text(name: &str) -> Option<&'static str> {
    lookup(LAYOUTS, name)
}

/// Parse a bundled layout. Panics only if a bundled file is malformed.
pub fn layout(name: &str) -> Option<Layout> {
    layout_text(name).map(|t| Layout::parse(name, t).expect("bundled layout is valid"))
}

/// Resolve a layout by bundled name or by path to a `.layout` file.
pub fn resolve_layout(name_or_path: &str) -> Result<Layout, ResolveError> {
    if let Some(l) = layout(name_or_path) {
        return Ok(l);
    }
    let path = std::path::Path::new(name_or_path);
    let text = std::fs::read_to_string(path)
        .map_err(|_| ResolveError::NotFound(name_or_path.to_string()))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| name_or_path.to_string());
    Layout::parse(&name, &text).map_err(ResolveError::Layout)
}

#[derive(Debug, thiserror::Error)]
pub enum ResolveError {
    #[error("no bundled layout or file named {0:?}")]
    NotFound(String),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

pub(crate) fn mle_like_preset(layout: &str) -> Option<&'static str> {
    lookup(PARAMS, &format!("mle_like_{layout}"))
}

pub(crate) fn validation_preset(name: &str) -> Option<&'static str> {
    if name.starts_with("mle_like") {
        return None;
    }
    lookup(PARAMS, name)
}

/// Bundled scenario files as (file stem, text).
pub fn suite_files() -> &'static [(&'static str, &'static str)] {
    SUITE
}

/// Bundled trajectory files as (file stem, text).
pub fn trajectory_files() -> &'static [(&'static str, &'static str)] {
    TRAJECTORIES
}
