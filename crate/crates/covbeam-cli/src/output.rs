//! Run artifacts: CSV data files plus one TOML manifest per run.
//!
//! Data files are deterministic: the same configuration and seeds produce
//! byte-identical bytes on any machine and any thread count. Wall-clock
//! facts (start time, elapsed seconds) are confined to the manifest's
//! `[timing]` table so the data files stay comparable. Every file lands via
//! a temp-file rename, so readers never observe a half-written artifact.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use crate::config::Resolved;
use toml::value::{Table, Value};

/// A created output directory that files are atomically published into.
pub struct OutDir {
    path: PathBuf,
}

impl OutDir {
    pub fn create(path: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(path)?;
        Ok(Self {
            path: path.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Write `contents` to `name` via a sibling temp file and rename, so a
    /// crash mid-write never leaves a truncated file under the final name.
    pub fn write_atomic(&self, name: &str, contents: &str) -> std::io::Result<()> {
        let final_path = self.path.join(name);
        let tmp_path = self.path.join(format!("{name}.tmp"));
        {
            let mut file = std::fs::File::create(&tmp_path)?;
            file.write_all(contents.as_bytes())?;
            file.sync_all()?;
        }
        std::fs::rename(&tmp_path, &final_path)
    }
}

/// Shortest representation that round-trips the exact value.
pub fn float(x: f64) -> String {
    format!("{x:?}")
}

/// In-memory CSV with a fixed column count enforced per row.
pub struct Csv {
    columns: usize,
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self {
            columns: header.len(),
            text,
        }
    }

    pub fn row<I>(&mut self, fields: I)
    where
        I: IntoIterator<Item = String>,
    {
        let mut count = 0;
        for (i, field) in fields.into_iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            self.text.push_str(&field);
            count += 1;
        }
        assert_eq!(count, self.columns, "row width must match the header");
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// Accumulates the run manifest and renders it as TOML.
pub struct Manifest {
    root: Table,
    started: Instant,
}

fn float_list(values: &[f64]) -> Value {
    Value::Array(values.iter().map(|&v| Value::Float(v)).collect())
}

fn int_pair(pair: (usize, usize)) -> Value {
    Value::Array(vec![
        Value::Integer(pair.0 as i64),
        Value::Integer(pair.1 as i64),
    ])
}

impl Manifest {
    /// Record the command, tool version, and full resolved configuration.
    pub fn new(command: &str, resolved: &Resolved) -> Self {
        let mut root = Table::new();
        root.insert("command".into(), Value::String(command.into()));
        root.insert(
            "version".into(),
            Value::String(env!("CARGO_PKG_VERSION").into()),
        );
        root.insert(
            "scale".into(),
            Value::String(resolved.scale.name().into()),
        );

        // The only nondeterministic fields in any artifact live here.
        let mut timing = Table::new();
        let started_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        timing.insert("started_unix".into(), Value::Integer(started_unix as i64));
        root.insert("timing".into(), Value::Table(timing));

        let s = &resolved.scenario;
        let mut scenario = Table::new();
        scenario.insert(
            "bs_tx".into(),
            float_list(&[s.bs_tx.x, s.bs_tx.y, s.bs_tx.z]),
        );
        scenario.insert(
            "bs_rx".into(),
            float_list(&[s.bs_rx.x, s.bs_rx.y, s.bs_rx.z]),
        );
        scenario.insert(
            "tx_antennas".into(),
            Value::Integer(s.tx_array.len() as i64),
        );
        scenario.insert(
            "rx_antennas".into(),
            Value::Integer(s.rx_array.len() as i64),
        );
        scenario.insert("power".into(), Value::Float(s.p_t));
        scenario.insert("noise_power".into(), Value::Float(s.noise_power));
        scenario.insert("bandwidth".into(), Value::Float(s.bandwidth));
        scenario.insert("cpi_duration".into(), Value::Float(s.cpi_duration));
        scenario.insert("beta0".into(), Value::Float(s.beta0));
        scenario.insert("alpha".into(), float_list(&[s.alpha.re, s.alpha.im]));
        scenario.insert("rician_factor".into(), Value::Float(s.rician_factor));
        root.insert("scenario".into(), Value::Table(scenario));

        let mut users = Vec::new();
        for u in &s.ues {
            let mut t = Table::new();
            t.insert(
                "theta_deg".into(),
                Value::Float(u.angles.theta.to_degrees()),
            );
            t.insert("phi_deg".into(), Value::Float(u.angles.phi.to_degrees()));
            t.insert("range".into(), Value::Float(u.range));
            t.insert("sinr_linear".into(), Value::Float(u.sinr_threshold));
            users.push(Value::Table(t));
        }
        root.insert("users".into(), Value::Array(users));

        let r = &resolved.region;
        let mut region = Table::new();
        region.insert("center".into(), float_list(&[r.center_x, r.center_y]));
        region.insert("height".into(), Value::Float(r.height));
        region.insert("extent".into(), float_list(&[r.extent_x, r.extent_y]));
        region.insert("grid".into(), int_pair(resolved.grid_counts));
        root.insert("region".into(), Value::Table(region));

        let mut sca = Table::new();
        sca.insert("epsilon".into(), Value::Float(resolved.sca.epsilon));
        sca.insert(
            "max_iterations".into(),
            Value::Integer(resolved.sca.max_outer_iterations as i64),
        );
        root.insert("sca".into(), Value::Table(sca));

        let mut seeds = Table::new();
        seeds.insert("channel".into(), Value::Integer(s.seeds.channel as i64));
        seeds.insert("waveform".into(), Value::Integer(s.seeds.waveform as i64));
        seeds.insert("noise".into(), Value::Integer(s.seeds.noise as i64));
        root.insert("seeds".into(), Value::Table(seeds));

        let mut defaults = Table::new();
        defaults.insert(
            "keys".into(),
            Value::Array(
                resolved
                    .defaulted
                    .iter()
                    .map(|k| Value::String(k.clone()))
                    .collect(),
            ),
        );
        root.insert("defaults".into(), Value::Table(defaults));

        Self {
            root,
            started: Instant::now(),
        }
    }

    /// Per-command summary values under `[results]`.
    pub fn results(&mut self) -> &mut Table {
        self.root
            .entry("results".to_string())
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .expect("results is always a table")
    }

    /// Attach extra nondeterministic timing facts (e.g. per-solve seconds).
    pub fn timing(&mut self) -> &mut Table {
        self.root
            .entry("timing".to_string())
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .expect("timing is always a table")
    }

    pub fn render(mut self) -> String {
        let wall = self.started.elapsed().as_secs_f64();
        self.timing().insert("wall_seconds".into(), Value::Float(wall));
        toml::to_string_pretty(&Value::Table(self.root))
            .expect("manifest values are all serializable")
    }
}
