//! Instance generators, entropy oracles and batch sweeps.

mod entropy;
pub mod fixtures;
mod gen;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use self::entropy::{empirical_entropy, entropy_vector, Entropy, JointDistribution};
pub use self::gen::{default_domain, gen_agm_tight, gen_grid_triangle, gen_random, random_relation, uniform_below};

use crate::error::{Error, Result};
use crate::exec::backtrack_join;
use crate::par::{self, Backend};
use crate::query::{topological_order, Query};
use crate::relation::{load_csv, write_csv, Database, Dictionary};

/// What to generate. Queries are kept as text so a manifest is
/// self-contained.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GenKind {
    GridTriangle { m: u64 },
    AgmTight { query: String, n: u64 },
    Random {
        query: String,
        sizes: Vec<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<u64>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSpec {
    #[serde(flatten)]
    pub kind: GenKind,
    pub seed: u64,
}

impl GenSpec {
    /// The query the instance is meant for.
    pub fn query(&self) -> Result<Query> {
        match &self.kind {
            GenKind::GridTriangle { .. } => Ok(fixtures::triangle_query()),
            GenKind::AgmTight { query, .. } | GenKind::Random { query, .. } => Query::parse(query),
        }
    }

    pub fn generate(&self) -> Result<Database> {
        match &self.kind {
            GenKind::GridTriangle { m } => gen_grid_triangle(*m),
            GenKind::AgmTight { n, .. } => gen_agm_tight(&self.query()?, *n),
            GenKind::Random { sizes, domain, .. } => gen_random(&self.query()?, sizes, self.seed, *domain),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub relation: String,
    pub file: String,
    pub rows: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub spec: GenSpec,
    pub query: String,
    pub relations: Vec<ManifestEntry>,
}

/// Writes `<name>.csv` per relation, `query.txt` and `manifest.json`.
pub fn write_instance(dir: &Path, spec: &GenSpec, db: &Database) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut relations = Vec::new();
    for rel in db.relations() {
        let file = format!("{}.csv", rel.name());
        write_csv(rel, &dir.join(&file), None)?;
        relations.push(ManifestEntry { relation: rel.name().to_string(), file, rows: rel.len() });
    }
    let query = spec.query()?.to_string();
    let manifest = Manifest { spec: spec.clone(), query: query.clone(), relations };
    let path = dir.join("query.txt");
    fs::write(&path, format!("{query}\n")).map_err(|e| Error::io(path, e))?;
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    fs::write(&path, json + "\n").map_err(|e| Error::io(path, e))?;
    Ok(manifest)
}

/// Loads `<dir>/<name>.csv` for every relation the query mentions, taking
/// each schema from the file header.
pub fn load_instance(query: &Query, dir: &Path, dict: &mut Dictionary) -> Result<Database> {
    let mut db = Database::new();
    for a in query.atoms() {
        if db.get(&a.relation).is_ok() {
            continue;
        }
        let path = dir.join(format!("{}.csv", a.relation));
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let header: Vec<String> =
            text.lines().next().unwrap_or("").split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        db.insert(load_csv(&path, &header, dict)?.with_name(a.relation.clone()));
    }
    Ok(db)
}

/// One grid size in a counter sweep.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SweepPoint {
    pub m: u64,
    pub output: usize,
    pub probes: u64,
    pub comparisons: u64,
}

/// Backtracking search on the `m × m` grid triangle for every `m`, one
/// instance per task.
pub fn grid_sweep(ms: &[u64], backend: Backend) -> Result<Vec<SweepPoint>> {
    let q = fixtures::triangle_query();
    par::map_with(backend, ms, |&m| {
        let db = gen_grid_triangle(m)?;
        let n = m * m;
        let dc = fixtures::triangle_constraints(n, n, n);
        let out = backtrack_join(&q, &dc, &topological_order(&dc)?, &db)?;
        Ok(SweepPoint { m, output: out.relation.len(), probes: out.counters.probes, comparisons: out.counters.comparisons })
    })
    .into_iter()
    .collect()
}

/// Runs `f` on every seed, in parallel unless `backend` says otherwise.
pub fn seed_sweep<R, F>(seeds: &[u64], backend: Backend, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(u64) -> R + Sync + Send,
{
    par::map_with(backend, seeds, |&s| f(s))
}
