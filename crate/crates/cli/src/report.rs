//! Line-oriented `key=value` files: run reports and ground-truth sidecars.
//!
//! Keys are written in a fixed order. Blank lines and lines starting with
//! `#` are ignored when reading. Floats use the shortest representation that
//! parses back to the same value.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use exposalign::{AlignConfig, CoderKind};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("duplicate key `{0}`")]
    Duplicate(String),
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("unknown key `{0}`")]
    Unknown(String),
    #[error("key `{key}`: cannot parse `{value}`")]
    Value { key: String, value: String },
    #[error("value of `{0}` contains a line break")]
    Multiline(String),
}

type Result<T> = std::result::Result<T, ReportError>;

/// Ordered writer that refuses values which would break the line format.
#[derive(Default)]
struct Writer {
    out: String,
}

impl Writer {
    fn put(&mut self, key: &str, value: impl std::fmt::Display) -> Result<()> {
        let value = value.to_string();
        if value.contains(['\n', '\r']) {
            return Err(ReportError::Multiline(key.to_string()));
        }
        writeln!(self.out, "{key}={value}").expect("writing to a String");
        Ok(())
    }
}

/// Parsed key/value pairs; every lookup consumes its key so leftovers can be
/// reported as unknown.
struct Fields {
    map: HashMap<String, String>,
}

impl Fields {
    fn parse(text: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ReportError::Syntax { line: i + 1 })?;
            if map.insert(key.to_string(), value.to_string()).is_some() {
                return Err(ReportError::Duplicate(key.to_string()));
            }
        }
        Ok(Self { map })
    }

    fn raw(&mut self, key: &str) -> Result<String> {
        self.map.remove(key).ok_or_else(|| ReportError::Missing(key.to_string()))
    }

    fn get<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let value = self.raw(key)?;
        value.parse().map_err(|_| ReportError::Value {
            key: key.to_string(),
            value,
        })
    }

    fn finish(self) -> Result<()> {
        match self.map.into_keys().min() {
            Some(key) => Err(ReportError::Unknown(key)),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlaveRecord {
    pub slave: String,
    pub aligned: String,
    pub theta_deg: f64,
    pub tx: f64,
    pub ty: f64,
    /// Coarsest level first.
    pub iterations: Vec<usize>,
    pub final_cost: f64,
    pub converged: bool,
    pub mi_before: f64,
    pub mi_after: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub version: String,
    pub reference: String,
    pub config: AlignConfig,
    pub records: Vec<SlaveRecord>,
}

fn write_config(w: &mut Writer, cfg: &AlignConfig) -> Result<()> {
    w.put("config.coder", cfg.coder)?;
    w.put("config.levels", cfg.max_pyramid_levels)?;
    w.put("config.max_iters", cfg.max_iters_per_level)?;
    w.put("config.theta_tolerance", cfg.theta_tolerance)?;
    w.put("config.translation_tolerance", cfg.translation_tolerance)?;
    w.put("config.sigma", cfg.sigma)?;
    w.put("config.alpha", cfg.alpha)?;
    w.put("config.beta", cfg.beta)?;
    w.put("config.histogram_init", cfg.use_histogram_init)?;
    w.put("config.imf", cfg.imf_normalization)
}

fn read_config(f: &mut Fields) -> Result<AlignConfig> {
    let coder = f.raw("config.coder")?;
    let coder = CoderKind::from_str(&coder).map_err(|_| ReportError::Value {
        key: "config.coder".into(),
        value: coder,
    })?;
    Ok(AlignConfig {
        coder,
        max_pyramid_levels: f.get("config.levels")?,
        max_iters_per_level: f.get("config.max_iters")?,
        theta_tolerance: f.get("config.theta_tolerance")?,
        translation_tolerance: f.get("config.translation_tolerance")?,
        sigma: f.get("config.sigma")?,
        alpha: f.get("config.alpha")?,
        beta: f.get("config.beta")?,
        use_histogram_init: f.get("config.histogram_init")?,
        imf_normalization: f.get("config.imf")?,
    })
}

fn join_counts(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn split_counts(key: &str, s: &str) -> Result<Vec<usize>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| {
            p.parse().map_err(|_| ReportError::Value {
                key: key.to_string(),
                value: s.to_string(),
            })
        })
        .collect()
}

impl RunReport {
    pub fn to_text(&self) -> Result<String> {
        let mut w = Writer::default();
        w.out.push_str("# exposalign run report\n");
        w.put("version", &self.version)?;
        w.put("reference", &self.reference)?;
        write_config(&mut w, &self.config)?;
        w.put("records", self.records.len())?;
        for (i, r) in self.records.iter().enumerate() {
            let k = |name: &str| format!("record.{i}.{name}");
            w.put(&k("slave"), &r.slave)?;
            w.put(&k("aligned"), &r.aligned)?;
            w.put(&k("theta_deg"), r.theta_deg)?;
            w.put(&k("tx"), r.tx)?;
            w.put(&k("ty"), r.ty)?;
            w.put(&k("iterations"), join_counts(&r.iterations))?;
            w.put(&k("final_cost"), r.final_cost)?;
            w.put(&k("converged"), r.converged)?;
            w.put(&k("mi_before"), r.mi_before)?;
            w.put(&k("mi_after"), r.mi_after)?;
        }
        Ok(w.out)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut f = Fields::parse(text)?;
        let version = f.raw("version")?;
        let reference = f.raw("reference")?;
        let config = read_config(&mut f)?;
        let n: usize = f.get("records")?;
        let mut records = Vec::with_capacity(n);
        for i in 0..n {
            let k = |name: &str| format!("record.{i}.{name}");
            let iterations_key = k("iterations");
            let iterations = f.raw(&iterations_key)?;
            records.push(SlaveRecord {
                slave: f.raw(&k("slave"))?,
                aligned: f.raw(&k("aligned"))?,
                theta_deg: f.get(&k("theta_deg"))?,
                tx: f.get(&k("tx"))?,
                ty: f.get(&k("ty"))?,
                iterations: split_counts(&iterations_key, &iterations)?,
                final_cost: f.get(&k("final_cost"))?,
                converged: f.get(&k("converged"))?,
                mi_before: f.get(&k("mi_before"))?,
                mi_after: f.get(&k("mi_after"))?,
            });
        }
        f.finish()?;
        Ok(Self {
            version,
            reference,
            config,
            records,
        })
    }
}

/// Read only the configuration echo of a report.
pub fn parse_config(text: &str) -> Result<AlignConfig> {
    let mut f = Fields::parse(text)?;
    read_config(&mut f)
}

/// Ground truth written next to a synthesized slave.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truth {
    pub theta_deg: f64,
    pub tx: f64,
    pub ty: f64,
    pub ev: f64,
}

impl Truth {
    pub fn to_text(self) -> String {
        let mut w = Writer::default();
        w.put("theta_deg", self.theta_deg).unwrap();
        w.put("tx", self.tx).unwrap();
        w.put("ty", self.ty).unwrap();
        w.put("ev", self.ev).unwrap();
        w.out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut f = Fields::parse(text)?;
        let t = Self {
            theta_deg: f.get("theta_deg")?,
            tx: f.get("tx")?,
            ty: f.get("ty")?,
            ev: f.get("ev")?,
        };
        f.finish()?;
        Ok(t)
    }
}
