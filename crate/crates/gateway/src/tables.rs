//! Loaded value tables and lookup by position.

use std::path::{Path, PathBuf};

use bidchess_core::board::Position;
use bidchess_core::tablebase;
use bidchess_core::{Error, Result, Solution};

/// Environment variable naming the directory scanned for `*.tb` tables.
pub const TABLE_DIR_ENV: &str = "BIDCHESS_TABLE_DIR";

#[derive(Debug, Default)]
pub struct TableSet {
    tables: Vec<(PathBuf, Solution)>,
}

impl TableSet {
    pub fn new() -> TableSet {
        TableSet::default()
    }

    pub fn push(&mut self, name: impl Into<PathBuf>, sol: Solution) {
        self.tables.push((name.into(), sol));
    }

    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let sol = tablebase::load_table(path)?.into_solution()?;
        tracing::info!(table = %path.display(), positions = sol.space().len(), "loaded table");
        self.push(path, sol);
        Ok(())
    }

    /// Loads every `*.tb` file of `dir`, in name order.
    pub fn load_dir(dir: &Path) -> Result<TableSet> {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "tb"))
            .collect();
        paths.sort();
        let mut set = TableSet::new();
        for p in paths {
            set.load_file(&p)?;
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn get(&self, i: usize) -> &Solution {
        &self.tables[i].1
    }

    /// Index of the first table covering `pos` (directly or through its
    /// colour flip).
    pub fn find(&self, pos: &Position) -> Option<usize> {
        self.tables.iter().position(|(_, sol)| sol.value(pos).is_ok())
    }

    pub fn lookup(&self, pos: &Position) -> Result<&Solution> {
        self.find(pos).map(|i| self.get(i)).ok_or_else(|| Error::NotInSpace(pos.to_fen()))
    }
}
