//! Bundle directories: a generated game, its start partition, scripts, and
//! the manifest of machine-checkable claims, laid out as
//!
//! ```text
//! <dir>/game.hg          canonical game file
//! <dir>/start.part       start partition
//! <dir>/manifest.json    notion, metadata, and named checks
//! <dir>/script-<name>.txt one file per bundled script
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use hedonic_core::gadgets::bundle::{GadgetBundle, ManifestCheck, Script};
use hedonic_core::Rational;
use serde::{Deserialize, Serialize};

use crate::format;

#[derive(Serialize, Deserialize)]
struct ManifestFile {
    notion: String,
    metadata: BTreeMap<String, String>,
    checks: Vec<ManifestCheck>,
}

pub fn write_bundle(dir: &Path, bundle: &GadgetBundle) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let write = |name: &str, content: String| -> Result<(), String> {
        let path = dir.join(name);
        fs::write(&path, content).map_err(|e| format!("cannot write {}: {e}", path.display()))
    };

    let doc = format::GameDoc::unnamed(bundle.game.clone());
    write("game.hg", format::write_game(&doc))?;
    write("start.part", format::write_partition(&bundle.start))?;
    for (name, script) in &bundle.scripts {
        write(&format!("script-{name}.txt"), format::write_script(script))?;
    }

    let manifest = ManifestFile {
        notion: format::notion_token(&bundle.notion)?,
        metadata: bundle
            .metadata
            .iter()
            .map(|(k, v)| (k.clone(), v.to_string()))
            .collect(),
        checks: bundle.manifest.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| format!("cannot serialize manifest: {e}"))?;
    write("manifest.json", json + "\n")
}

pub fn read_bundle(dir: &Path) -> Result<GadgetBundle, String> {
    let read = |name: &str| -> Result<String, String> {
        let path = dir.join(name);
        fs::read_to_string(&path).map_err(|e| format!("cannot read {}: {e}", path.display()))
    };

    let doc = format::parse_game(&read("game.hg")?)?;
    let start = format::parse_partition(&read("start.part")?)?;
    if start.agent_count() != doc.game.agent_count() {
        return Err(format!(
            "start partition covers {} agents, game has {}",
            start.agent_count(),
            doc.game.agent_count()
        ));
    }

    let manifest: ManifestFile = serde_json::from_str(&read("manifest.json")?)
        .map_err(|e| format!("bad manifest.json: {e}"))?;
    let notion = format::parse_notion(&manifest.notion)?;
    let mut metadata: BTreeMap<String, Rational> = BTreeMap::new();
    for (key, value) in &manifest.metadata {
        metadata.insert(key.clone(), format::parse_rational(value)?);
    }

    let mut scripts: BTreeMap<String, Script> = BTreeMap::new();
    let entries =
        fs::read_dir(dir).map_err(|e| format!("cannot list {}: {e}", dir.display()))?;
    for entry in entries {
        let entry = entry.map_err(|e| format!("cannot list {}: {e}", dir.display()))?;
        let file_name = entry.file_name();
        let file_name = file_name.to_string_lossy();
        if let Some(name) = file_name
            .strip_prefix("script-")
            .and_then(|n| n.strip_suffix(".txt"))
        {
            scripts.insert(name.to_owned(), format::parse_script(&read(&file_name)?)?);
        }
    }

    Ok(GadgetBundle {
        game: doc.game,
        start,
        notion,
        scripts,
        manifest: manifest.checks,
        metadata,
    })
}
