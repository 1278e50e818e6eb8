use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use exposalign::coder::{encode, to_decimal};
use exposalign::eval::{motion_error, mutual_information, synth_exposure, synth_scene, synth_warp, DEFAULT_MI_BINS};
use exposalign::filter::gaussian_smooth;
use exposalign::imf::{normalize_pair_with, order_by_exposure, SaturationThresholds};
use exposalign::{align, load_gray, save_gray, AlignConfig, GrayImage, Motion, ValidityMask};
use rayon::prelude::*;

use crate::args::{AlignArgs, CodesArgs, EvalArgs, PairArgs, SynthArgs};
use crate::report::{parse_config, ReportError, RunReport, SlaveRecord, Truth};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] exposalign::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Report { path: PathBuf, source: ReportError },
    #[error("{0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "image".into(), |s| s.to_string_lossy().into_owned())
}

fn display(path: &Path) -> String {
    path.to_string_lossy().into_owned()
}

fn config_for(args: &AlignArgs) -> Result<AlignConfig> {
    if let Some(path) = &args.config {
        let cfg = parse_config(&read_text(path)?).map_err(|source| CliError::Report {
            path: path.clone(),
            source,
        })?;
        return Ok(cfg);
    }
    let d = AlignConfig::default();
    Ok(AlignConfig {
        coder: args.coder.unwrap_or(d.coder),
        max_pyramid_levels: args.levels.unwrap_or(d.max_pyramid_levels),
        max_iters_per_level: args.max_iters.unwrap_or(d.max_iters_per_level),
        sigma: args.sigma.unwrap_or(d.sigma),
        alpha: args.alpha.unwrap_or(d.alpha),
        beta: args.beta.unwrap_or(d.beta),
        use_histogram_init: !args.no_init,
        imf_normalization: !args.no_imf,
        ..d
    })
}

fn align_one(reference: &GrayImage, slave_path: &Path, out_dir: &Path, cfg: &AlignConfig) -> Result<SlaveRecord> {
    let slave = load_gray(slave_path)?;
    let out = align(reference, &slave, cfg)?;
    let aligned_path = out_dir.join(format!("{}_aligned.png", stem(slave_path)));
    save_gray(&out.aligned, &aligned_path)?;
    let full = ValidityMask::all_valid(reference.width(), reference.height());
    let m = out.result.motion;
    Ok(SlaveRecord {
        slave: display(slave_path),
        aligned: display(&aligned_path),
        theta_deg: m.theta_degrees(),
        tx: m.tx,
        ty: m.ty,
        iterations: out.result.per_level.iter().map(|s| s.iterations).collect(),
        final_cost: out.result.final_cost(),
        converged: out.result.converged,
        mi_before: mutual_information(reference, &slave, &full, DEFAULT_MI_BINS)?,
        mi_after: mutual_information(reference, &out.aligned, &out.mask, DEFAULT_MI_BINS)?,
    })
}

pub fn run_align(args: &AlignArgs) -> Result<()> {
    let cfg = config_for(args)?;
    cfg.validate()?;
    let mut stems = HashSet::new();
    for s in &args.slaves {
        if !stems.insert(stem(s)) {
            return Err(CliError::Input(format!(
                "two slaves share the file name `{}`; outputs would collide",
                stem(s)
            )));
        }
    }
    let reference = load_gray(&args.reference)?;
    let out_dir = &args.out.out;
    create_dir(out_dir)?;

    // Results come back in input order whatever the completion order.
    let records = args
        .slaves
        .par_iter()
        .map(|s| align_one(&reference, s, out_dir, &cfg))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    for r in &records {
        eprintln!(
            "{}: theta {:.4} deg, tx {:.3}, ty {:.3}, converged {}",
            r.slave, r.theta_deg, r.tx, r.ty, r.converged
        );
    }
    let report = RunReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        reference: display(&args.reference),
        config: cfg,
        records,
    };
    let path = out_dir.join("report.txt");
    let text = report.to_text().map_err(|source| CliError::Report {
        path: path.clone(),
        source,
    })?;
    write_text(&path, &text)
}

fn thresholds_text(t: &SaturationThresholds, first_is_long: bool) -> String {
    format!(
        "alpha={}\nbeta={}\nzeta1={}\nzeta2={}\nlong={}\n",
        t.alpha,
        t.beta,
        t.zeta1,
        t.zeta2,
        if first_is_long { "first" } else { "second" }
    )
}

/// Normalize in (long, short) order; returns the pair plus whether the inputs were swapped.
fn normalized(args: &PairArgs) -> Result<(exposalign::NormalizedPair, bool)> {
    let a = load_gray(&args.first)?;
    let b = load_gray(&args.second)?;
    if !a.same_dims(&b) {
        return Err(CliError::Input(format!(
            "{} and {} differ in size",
            display(&args.first),
            display(&args.second)
        )));
    }
    let order = order_by_exposure(&a, &b);
    let pair = normalize_pair_with(order.long, order.short, args.alpha, args.beta)?;
    Ok((pair, order.swapped))
}

pub fn run_normalize(args: &PairArgs) -> Result<()> {
    let (pair, swapped) = normalized(args)?;
    let out = &args.out.out;
    create_dir(out)?;
    let (first, second) = if swapped {
        (&pair.z2_hat, &pair.z1_hat)
    } else {
        (&pair.z1_hat, &pair.z2_hat)
    };
    save_gray(first, out.join(format!("{}_norm.png", stem(&args.first))))?;
    save_gray(second, out.join(format!("{}_norm.png", stem(&args.second))))?;
    write_text(&out.join("thresholds.txt"), &thresholds_text(&pair.thresholds, !swapped))
}

pub fn run_imf(args: &PairArgs) -> Result<()> {
    let (pair, swapped) = normalized(args)?;
    let out = &args.out.out;
    create_dir(out)?;
    let mut csv = String::from("z,f12,f21\n");
    for z in 0..=255u8 {
        writeln!(csv, "{z},{},{}", pair.f12.apply(z), pair.f21.apply(z)).unwrap();
    }
    write_text(&out.join("imf.csv"), &csv)?;
    write_text(&out.join("thresholds.txt"), &thresholds_text(&pair.thresholds, !swapped))
}

pub fn run_synth(args: &SynthArgs) -> Result<()> {
    let (source, name) = match &args.input {
        Some(path) => (load_gray(path)?, stem(path)),
        None => (synth_scene(args.width, args.height, args.seed)?, format!("scene{}", args.seed)),
    };
    let exposed = synth_exposure(&source, args.ev)?;
    let truth = Motion::from_degrees(args.theta, args.tx, args.ty);
    let slave = synth_warp(&exposed, &truth).image;
    let out = &args.out.out;
    create_dir(out)?;
    save_gray(&source, out.join(format!("{name}_ref.png")))?;
    save_gray(&slave, out.join(format!("{name}_synth.png")))?;
    let sidecar = Truth {
        theta_deg: args.theta,
        tx: args.tx,
        ty: args.ty,
        ev: args.ev,
    };
    write_text(&out.join(format!("{name}_synth.truth")), &sidecar.to_text())
}

fn sidecar_for(slave: &Path, truth_dir: Option<&Path>) -> PathBuf {
    match truth_dir {
        Some(dir) => dir.join(format!("{}.truth", stem(slave))),
        None => slave.with_extension("truth"),
    }
}

#[derive(Clone, Copy, Default)]
struct Row {
    d_theta: f64,
    d_ty: f64,
    d_tx: f64,
    mi_before: f64,
    mi_after: f64,
}

impl Row {
    fn fields(&self) -> [f64; 5] {
        [self.d_theta, self.d_ty, self.d_tx, self.mi_before, self.mi_after]
    }

    fn from_fields(f: [f64; 5]) -> Self {
        Self {
            d_theta: f[0],
            d_ty: f[1],
            d_tx: f[2],
            mi_before: f[3],
            mi_after: f[4],
        }
    }
}

/// Column-wise mean, max and min.
fn aggregate(rows: &[Row]) -> [Row; 3] {
    let n = rows.len() as f64;
    let cols: Vec<[f64; 5]> = rows.iter().map(Row::fields).collect();
    let fold = |init: f64, f: fn(f64, f64) -> f64| {
        Row::from_fields(std::array::from_fn(|k| cols.iter().map(|c| c[k]).fold(init, f)))
    };
    let sum = fold(0.0, |a, b| a + b);
    let mean = Row::from_fields(sum.fields().map(|v| v / n));
    [mean, fold(f64::NEG_INFINITY, f64::max), fold(f64::INFINITY, f64::min)]
}

fn table_line(out: &mut String, label: &str, r: &Row) {
    writeln!(
        out,
        "{label:<32} {:>8.3} {:>8.2} {:>8.2} {:>10.3} {:>10.3}",
        r.d_theta, r.d_ty, r.d_tx, r.mi_before, r.mi_after
    )
    .unwrap();
}

pub fn run_eval(args: &EvalArgs) -> Result<String> {
    let mut table = String::new();
    writeln!(
        table,
        "{:<32} {:>8} {:>8} {:>8} {:>10} {:>10}",
        "image", "dtheta", "dty", "dtx", "mi_before", "mi_after"
    )
    .unwrap();
    let mut all = Vec::new();
    let mut sequences = Vec::new();
    for path in &args.reports {
        let report = RunReport::parse(&read_text(path)?).map_err(|source| CliError::Report {
            path: path.clone(),
            source,
        })?;
        let mut rows = Vec::new();
        for r in &report.records {
            let slave = Path::new(&r.slave);
            let sidecar = sidecar_for(slave, args.truth_dir.as_deref());
            let truth = Truth::parse(&read_text(&sidecar)?).map_err(|source| CliError::Report {
                path: sidecar.clone(),
                source,
            })?;
            let err = motion_error(
                &Motion::from_degrees(r.theta_deg, r.tx, r.ty),
                &Motion::from_degrees(truth.theta_deg, truth.tx, truth.ty),
            );
            let row = Row {
                d_theta: err.d_theta,
                d_ty: err.d_ty,
                d_tx: err.d_tx,
                mi_before: r.mi_before,
                mi_after: r.mi_after,
            };
            table_line(&mut table, &r.slave, &row);
            rows.push(row);
        }
        if !rows.is_empty() {
            sequences.push(aggregate(&rows)[0]);
        }
        all.extend(rows);
    }
    if all.is_empty() {
        return Err(CliError::Input("no records to evaluate".into()));
    }
    table.push('\n');
    for (name, row) in ["mean", "max", "min"].iter().zip(aggregate(&all)) {
        table_line(&mut table, &format!("per-image {name}"), &row);
    }
    for (name, row) in ["mean", "max", "min"].iter().zip(aggregate(&sequences)) {
        table_line(&mut table, &format!("per-sequence {name}"), &row);
    }
    Ok(table)
}

pub fn run_codes(args: &CodesArgs) -> Result<()> {
    let img = load_gray(&args.image)?;
    let planes = encode(&gaussian_smooth(&img.to_float(), args.sigma, 1)?, args.coder)?;
    let out = &args.out.out;
    create_dir(out)?;
    let name = stem(&args.image);
    let plane_image = |j: usize| {
        GrayImage::from_vec(
            planes.width(),
            planes.height(),
            planes.plane(j).iter().map(|&b| b * 255).collect(),
        )
    };
    let codes = if planes.planes() == 8 {
        to_decimal(&planes)?
    } else {
        plane_image(0)?
    };
    save_gray(&codes, out.join(format!("{name}_{}.png", args.coder)))?;
    if args.planes {
        for j in 0..planes.planes() {
            save_gray(&plane_image(j)?, out.join(format!("{name}_{}_plane{j}.png", args.coder)))?;
        }
    }
    Ok(())
}
