use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use num_complex::Complex64;
use serde::Serialize;

use esmap::{NormalizationConvention, QExpansion};

/// 17 significant digits, which round-trips every f64.
pub fn fl(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    /// Passes when `value <= threshold`.
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Check { name: name.into(), value, threshold, pass: value <= threshold, detail: detail.into() }
    }

    pub fn flag(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        let value = if pass { 1.0 } else { 0.0 };
        Check { name: name.into(), value, threshold: 1.0, pass, detail: detail.into() }
    }
}

#[derive(Debug, Serialize)]
struct FileEntry {
    file: String,
    columns: Vec<String>,
    rows: usize,
}

#[derive(Debug, Serialize)]
pub struct FormInfo {
    pub source: String,
    pub weight: u32,
    pub level: u64,
    pub truncation: usize,
    pub normalized_eigenform: bool,
    pub fe_sign: Option<i8>,
}

impl FormInfo {
    pub fn new(source: &str, f: &QExpansion) -> Self {
        FormInfo {
            source: source.to_string(),
            weight: f.weight(),
            level: f.level(),
            truncation: f.truncation(),
            normalized_eigenform: f.is_normalized_eigenform(),
            fe_sign: None,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ConventionInfo {
    name: &'static str,
    constant_re: f64,
    constant_im: f64,
    sign: i8,
}

impl From<&NormalizationConvention> for ConventionInfo {
    fn from(c: &NormalizationConvention) -> Self {
        ConventionInfo { name: c.name(), constant_re: c.constant.re, constant_im: c.constant.im, sign: c.sign }
    }
}

/// Collects CSVs written during a run and the facts the manifest records.
pub struct Run {
    dir: PathBuf,
    files: Vec<FileEntry>,
    pub checks: Vec<Check>,
    pub form: Option<FormInfo>,
    pub conventions: Vec<ConventionInfo>,
    pub summary: BTreeMap<String, serde_json::Value>,
}

impl Run {
    pub fn new(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Run {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            checks: Vec::new(),
            form: None,
            conventions: Vec::new(),
            summary: BTreeMap::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> anyhow::Result<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(header)?;
        let mut count = 0;
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            w.write_record(&row)?;
            count += 1;
        }
        w.flush()?;
        self.files.push(FileEntry { file: name.to_string(), columns: header.iter().map(|s| s.to_string()).collect(), rows: count });
        Ok(())
    }

    /// Records a non-CSV artifact.
    pub fn artifact(&mut self, name: &str, rows: usize) {
        self.files.push(FileEntry { file: name.to_string(), columns: Vec::new(), rows });
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.summary.insert(key.to_string(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
    }

    pub fn set_conventions(&mut self, convs: &[NormalizationConvention]) {
        self.conventions = convs.iter().map(ConventionInfo::from).collect();
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn write_manifest<C: Serialize>(
        &self,
        command: &str,
        argv: &[String],
        config: &C,
        threads: usize,
        elapsed_s: f64,
    ) -> anyhow::Result<PathBuf> {
        #[derive(Serialize)]
        struct Manifest<'a, C> {
            tool: &'static str,
            version: &'static str,
            command: &'a str,
            argv: &'a [String],
            config: &'a C,
            form: &'a Option<FormInfo>,
            conventions: &'a [ConventionInfo],
            outputs: &'a [FileEntry],
            checks: &'a [Check],
            all_passed: bool,
            summary: &'a BTreeMap<String, serde_json::Value>,
            threads: usize,
            parallel_feature: bool,
            elapsed_s: f64,
        }
        let m = Manifest {
            tool: "esmap",
            version: env!("CARGO_PKG_VERSION"),
            command,
            argv,
            config,
            form: &self.form,
            conventions: &self.conventions,
            outputs: &self.files,
            checks: &self.checks,
            all_passed: self.all_passed(),
            summary: &self.summary,
            threads,
            parallel_feature: cfg!(feature = "parallel"),
            elapsed_s,
        };
        let path = self.path(&format!("{command}.manifest.json"));
        fs::write(&path, serde_json::to_string_pretty(&m)? + "\n")?;
        Ok(path)
    }
}

pub fn cplx(z: Complex64) -> [String; 2] {
    [fl(z.re), fl(z.im)]
}
