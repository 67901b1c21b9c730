//! Declarative run configuration.
//!
//! A single TOML file names the datasets, the store and resolver settings.
//! Relative paths are taken relative to the directory holding the file.
//! Command-line flags override individual fields; the effective values are
//! echoed into every report.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use nsflow_core::analytics::{AttributionPolicy, DEFAULT_OTHERS_THRESHOLD};
use nsflow_core::resolver::ResolverPolicy;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetPaths {
    pub tranco: String,
    pub prefix2as_v4: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix2as_v6: Option<String>,
    pub as2org: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResolverSettings {
    pub timeout_ms: u64,
    pub retries: u32,
    pub max_in_flight: usize,
    pub queries_per_second: f64,
    pub upstreams: Vec<SocketAddr>,
    pub abort_after_domains: usize,
    pub abort_after_secs: u64,
}

impl Default for ResolverSettings {
    fn default() -> Self {
        let p = ResolverPolicy::default();
        ResolverSettings {
            timeout_ms: p.timeout.as_millis() as u64,
            retries: p.retries,
            max_in_flight: p.max_in_flight,
            queries_per_second: p.queries_per_second,
            upstreams: p.upstreams,
            abort_after_domains: p.abort_after_domains,
            abort_after_secs: p.abort_after.as_secs(),
        }
    }
}

impl ResolverSettings {
    pub fn policy(&self) -> CliResult<ResolverPolicy> {
        let policy = ResolverPolicy {
            timeout: Duration::from_millis(self.timeout_ms),
            retries: self.retries,
            max_in_flight: self.max_in_flight,
            queries_per_second: self.queries_per_second,
            upstreams: self.upstreams.clone(),
            abort_after_domains: self.abort_after_domains,
            abort_after: Duration::from_secs(self.abort_after_secs),
        };
        policy.validate().map_err(|e| CliError::usage(format!("resolver settings: {e}")))?;
        Ok(policy)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendChoice {
    Live,
    Fixture(String),
}

impl FromStr for BackendChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "live" => Ok(BackendChoice::Live),
            _ => match s.strip_prefix("fixture:") {
                Some(path) if !path.is_empty() => Ok(BackendChoice::Fixture(path.to_string())),
                _ => Err(format!("backend must be `live` or `fixture:PATH`, got `{s}`")),
            },
        }
    }
}

impl fmt::Display for BackendChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendChoice::Live => f.write_str("live"),
            BackendChoice::Fixture(p) => write!(f, "fixture:{p}"),
        }
    }
}

impl Serialize for BackendChoice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BackendChoice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisDefaults {
    pub policy: AttributionPolicy,
    pub k: usize,
    pub threshold: f64,
}

impl Default for AnalysisDefaults {
    fn default() -> Self {
        AnalysisDefaults { policy: AttributionPolicy::AnyNs, k: 10, threshold: DEFAULT_OTHERS_THRESHOLD }
    }
}

fn default_groups() -> BTreeMap<String, Vec<String>> {
    let mut groups = BTreeMap::new();
    groups.insert("BRICS".to_string(), [".br", ".cn", ".in", ".ru", ".za"].map(String::from).to_vec());
    groups.insert("EU".to_string(), vec![".eu".to_string()]);
    groups
}

fn default_store() -> String {
    "nsflow.db".to_string()
}

fn default_out() -> String {
    "reports".to_string()
}

fn default_backend() -> BackendChoice {
    BackendChoice::Live
}

/// The file as written. Paths stay as given so the echo is independent of
/// where the working copy lives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub datasets: DatasetPaths,
    #[serde(default = "default_store")]
    pub store: String,
    #[serde(default = "default_out")]
    pub out: String,
    #[serde(default = "default_backend")]
    pub backend: BackendChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_date: Option<NaiveDate>,
    #[serde(default)]
    pub resolver: ResolverSettings,
    #[serde(default)]
    pub analysis: AnalysisDefaults,
    /// Named ccTLD groups; defaults are added for names the file leaves out.
    #[serde(default = "default_groups")]
    pub groups: BTreeMap<String, Vec<String>>,
}

/// A validated configuration together with the directory its relative paths
/// hang off.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub base: PathBuf,
}

impl Loaded {
    pub fn read(path: &Path) -> CliResult<Loaded> {
        let text = fs::read_to_string(path).map_err(|e| CliError::open(path, e))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        for (name, suffixes) in default_groups() {
            config.groups.entry(name).or_insert(suffixes);
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Loaded { config, base })
    }

    pub fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn store_path(&self) -> PathBuf {
        self.resolve(&self.config.store)
    }

    /// The output directory. A flag value is relative to the working
    /// directory, a configured one to the config file.
    pub fn out_dir(&self, flag: Option<&Path>) -> PathBuf {
        match flag {
            Some(p) => p.to_path_buf(),
            None => self.resolve(&self.config.out),
        }
    }

    /// Checks that every referenced input exists and every group suffix is
    /// well formed.
    pub fn validate(&self) -> CliResult<()> {
        self.validate_inputs()?;
        self.validate_groups()
    }

    pub fn validate_inputs(&self) -> CliResult<()> {
        let d = &self.config.datasets;
        let mut inputs = vec![&d.tranco, &d.prefix2as_v4, &d.as2org];
        inputs.extend(&d.prefix2as_v6);
        if let BackendChoice::Fixture(p) = &self.config.backend {
            inputs.push(p);
        }
        for p in inputs {
            let path = self.resolve(p);
            if !path.is_file() {
                return Err(CliError::usage(format!("{}: no such file", path.display())));
            }
        }
        Ok(())
    }

    pub fn validate_groups(&self) -> CliResult<()> {
        for (name, suffixes) in &self.config.groups {
            if suffixes.is_empty() {
                return Err(CliError::usage(format!("group {name} has no suffixes")));
            }
            if let Some(bad) = suffixes.iter().find(|s| !s.starts_with('.') || s.len() < 2) {
                return Err(CliError::usage(format!("group {name}: suffix `{bad}` must start with `.`")));
            }
        }
        Ok(())
    }

    pub fn group(&self, name: &str) -> CliResult<&[String]> {
        self.config.groups.get(name).map(Vec::as_slice).ok_or_else(|| CliError::usage(format!("unknown group {name}")))
    }
}
