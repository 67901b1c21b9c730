//! A scratch directory holding rendered datasets, run configs and one store,
//! driven through the compiled binary.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use crate::support::world::World;

pub struct Workspace {
    dir: tempfile::TempDir,
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Run {
    fn from(out: Output) -> Run {
        Run {
            code: out.status.code().unwrap_or(-1),
            stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
            stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        }
    }

    /// Value of a `key<TAB>value` line printed by `measure`.
    pub fn field(&self, key: &str) -> Option<&str> {
        self.stdout.lines().find_map(|l| l.strip_prefix(key)?.strip_prefix('\t'))
    }
}

impl Workspace {
    pub fn new() -> Workspace {
        Workspace { dir: tempfile::tempdir().unwrap() }
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn write(&self, rel: &str, text: &str) -> PathBuf {
        let p = self.path().join(rel);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(&p, text).unwrap();
        p
    }

    /// Renders `world` under `name/` with a config named `name/run.toml`
    /// that shares the workspace store and report directory. Returns the
    /// config path relative to the workspace.
    pub fn world(&self, name: &str, world: &World, run_date: &str) -> String {
        self.write(&format!("{name}/tranco.csv"), &world.tranco());
        self.write(&format!("{name}/v4.pfx2as"), &world.prefix2as_v4());
        self.write(&format!("{name}/v6.pfx2as"), &world.prefix2as_v6());
        self.write(&format!("{name}/as2org.txt"), &world.as2org());
        self.write(&format!("{name}/ns.jsonl"), &world.fixture_jsonl());
        self.config(name, run_date, "fixture:ns.jsonl", "")
    }

    pub fn config(&self, name: &str, run_date: &str, backend: &str, extra: &str) -> String {
        let rel = format!("{name}/run.toml");
        self.write(
            &rel,
            &format!(
                r#"store = "../nsflow.db"
out = "../reports"
backend = "{backend}"
run_date = "{run_date}"

[datasets]
tranco = "tranco.csv"
prefix2as_v4 = "v4.pfx2as"
prefix2as_v6 = "v6.pfx2as"
as2org = "as2org.txt"

[resolver]
queries_per_second = 1000000.0
max_in_flight = 16
{extra}
"#
            ),
        );
        rel
    }

    pub fn nsflow(&self, args: &[&str]) -> Run {
        let out = Command::new(env!("CARGO_BIN_EXE_nsflow"))
            .args(args)
            .current_dir(self.path())
            .env("RUST_LOG", "warn")
            .output()
            .unwrap();
        Run::from(out)
    }

    /// Runs and asserts exit 0.
    pub fn ok(&self, args: &[&str]) -> Run {
        let run = self.nsflow(args);
        assert_eq!(run.code, 0, "nsflow {args:?}\nstdout:\n{}\nstderr:\n{}", run.stdout, run.stderr);
        run
    }

    /// Runs `measure` and returns the snapshot id.
    pub fn measure(&self, config: &str, extra: &[&str]) -> String {
        let mut args = vec!["--config", config, "measure"];
        args.extend_from_slice(extra);
        self.ok(&args).field("snapshot_id").unwrap().to_string()
    }

    pub fn read(&self, rel: &str) -> String {
        fs::read_to_string(self.path().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
    }

    /// Rows of a report CSV as header-keyed maps.
    pub fn csv(&self, rel: &str) -> Vec<BTreeMap<String, String>> {
        let mut r = csv::Reader::from_path(self.path().join(rel)).unwrap();
        r.deserialize().map(|row| row.unwrap()).collect()
    }
}
