//! File input with path context and schema-tagged JSON output.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use platoon::pipeline::InstanceDocument;
use platoon::{RoadNetwork, TaskPair};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const FEASIBILITY_SCHEMA: &str = "platoon-feasibility/1";
pub const SOLVE_SCHEMA: &str = "platoon-solve/1";
pub const INSTANCES_SCHEMA: &str = "platoon-instances/1";
pub const COMPARE_SCHEMA: &str = "platoon-compare/1";
pub const DECOMPOSITION_SCHEMA: &str = "platoon-decomposition/1";

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(file))
}

/// Parses a JSON file; parse errors carry the path, line and column.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).with_context(|| format!("{}", path.display()))
}

pub fn load_network(path: &Path) -> Result<RoadNetwork> {
    platoon::network::load_network(open(path)?).with_context(|| format!("{}", path.display()))
}

pub fn load_instance(path: &Path, net: &RoadNetwork) -> Result<(TaskPair, f64)> {
    let doc: InstanceDocument = read_json(path)?;
    doc.resolve(net).with_context(|| format!("{}", path.display()))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum InstanceList {
    Tagged { schema: String, instances: Vec<InstanceDocument> },
    Bare(Vec<InstanceDocument>),
}

/// Reads an instance list written by `sample`, or a bare array of instances.
pub fn load_instance_list(path: &Path) -> Result<Vec<InstanceDocument>> {
    match read_json(path)? {
        InstanceList::Tagged { schema, instances } => {
            anyhow::ensure!(
                schema == INSTANCES_SCHEMA,
                platoon::Error::InvalidParameter(format!("{}: unsupported schema `{schema}`", path.display()))
            );
            Ok(instances)
        }
        InstanceList::Bare(instances) => Ok(instances),
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Destination of the result document.
pub struct Emitter {
    path: Option<PathBuf>,
}

impl Emitter {
    pub fn new(path: Option<PathBuf>) -> Self {
        Self { path }
    }

    pub fn emit<T: Serialize>(&self, doc: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(doc)?;
        text.push('\n');
        match &self.path {
            Some(path) => write_text(path, &text),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes())?;
                Ok(stdout.flush()?)
            }
        }
    }
}
