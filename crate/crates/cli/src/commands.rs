use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use rom_core::plot::{LineChart, Series};
use rom_core::synth::{generate_eulerian, generate_lagrangian};
use rom_core::{
    error_series, evaluate as evaluate_rom, filter_snapshots, forecast, offline, project, psd_rows,
    relative_l2_error, train as train_model, FilterConfig, IdentificationReference, LstmModel, PodBasis,
    RomError, SnapshotFormat, SnapshotMatrix, TrainingConfig, Truncation,
};

use crate::config::{self, Config, ConfigError, FieldChoice};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(ConfigError),
    Rom(RomError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Rom(e) => match e {
                RomError::Io { .. } | RomError::Format { .. } => 3,
                RomError::Dimension(_) | RomError::InvalidInput(_) => 2,
                RomError::Numeric(_) | RomError::Divergence { .. } => 4,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Config(e) => e.fmt(f),
            CliError::Rom(e) => e.fmt(f),
        }
    }
}

impl From<RomError> for CliError {
    fn from(e: RomError) -> Self {
        CliError::Rom(e)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub struct Output {
    pub quiet: bool,
}

impl Output {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

fn load(path: &Path) -> Result<SnapshotMatrix> {
    Ok(SnapshotMatrix::load(path, SnapshotFormat::from_path(path))?)
}

fn save(s: &SnapshotMatrix, path: &Path) -> Result<()> {
    Ok(s.save(path, SnapshotFormat::from_path(path))?)
}

pub fn load_config(path: &Path) -> Result<Config> {
    let text =
        std::fs::read_to_string(path).map_err(|e| RomError::Io { path: path.to_owned(), source: e })?;
    Ok(Config::parse_file(&text, path)?)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| RomError::Io { path: path.to_owned(), source: e })?;
    Ok(())
}

/// `dir/stem_x.ext` for particle component `x`.
fn component_path(path: &Path, component: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{component}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{component}"),
    };
    path.with_file_name(name)
}

enum Synthesized {
    Eulerian(SnapshotMatrix),
    Lagrangian([SnapshotMatrix; 3]),
}

fn synthesize(cfg: &Config) -> Result<Synthesized> {
    let grid = config::grid(cfg)?;
    let seed: u64 = cfg.get_or("seed", 0)?;
    match cfg.field()? {
        FieldChoice::Eulerian => {
            let spec = config::synthetic_spec(cfg, "", seed)?;
            Ok(Synthesized::Eulerian(generate_eulerian(&spec, grid.n_time, grid.dt, grid.t0)?))
        }
        FieldChoice::Lagrangian => {
            let x = config::synthetic_spec(cfg, "x.", seed)?;
            let y = config::synthetic_spec(cfg, "y.", seed.wrapping_add(1))?;
            let z = config::synthetic_spec(cfg, "z.", seed.wrapping_add(2))?;
            let (x, y, z) = generate_lagrangian(&x, &y, &z, grid.n_time, grid.dt, grid.t0)?;
            Ok(Synthesized::Lagrangian([x, y, z]))
        }
    }
}

pub fn synth(out: &Output, config_path: &Path, path: &Path) -> Result<()> {
    let cfg = load_config(config_path)?;
    match synthesize(&cfg)? {
        Synthesized::Eulerian(s) => {
            save(&s, path)?;
            out.say(format!("wrote {} ({} DOFs x {} snapshots)", path.display(), s.n_dof(), s.n_time()));
        }
        Synthesized::Lagrangian(parts) => {
            for (s, c) in parts.iter().zip(["x", "y", "z"]) {
                let p = component_path(path, c);
                save(s, &p)?;
                out.say(format!(
                    "wrote {} ({} particles x {} snapshots)",
                    p.display(),
                    s.n_dof(),
                    s.n_time()
                ));
            }
        }
    }
    Ok(())
}

pub fn psd_report(
    out: &Output,
    input: &Path,
    dofs: &[usize],
    csv_path: &Path,
    svg_path: Option<&Path>,
    threshold: Option<f64>,
) -> Result<()> {
    let s = load(input)?;
    let rows = psd_rows(&s, dofs)?;
    let n = s.n_time();
    let mut csv = String::from("frequency");
    for d in dofs {
        let _ = write!(csv, ",dof_{d}");
    }
    csv.push('\n');
    for k in 0..n {
        let _ = write!(csv, "{:.16e}", rows[0].frequencies[k]);
        for r in &rows {
            let _ = write!(csv, ",{:.16e}", r.values[k]);
        }
        csv.push('\n');
    }
    write_text(csv_path, &csv)?;
    out.say(format!("wrote {}", csv_path.display()));
    if let Some(svg) = svg_path {
        let mut chart = LineChart::new("power spectral density", "frequency [Hz]", "PSD");
        chart.log_y = true;
        for (d, r) in dofs.iter().zip(&rows) {
            chart.series.push(Series {
                label: format!("DOF {d}"),
                points: (0..=n / 2).map(|k| (r.frequencies[k], r.values[k])).collect(),
            });
        }
        if let Some(t) = threshold {
            chart.hlines.push(t);
        }
        write_text(svg, &chart.to_svg())?;
        out.say(format!("wrote {}", svg.display()));
    }
    Ok(())
}

pub fn filter(out: &Output, input: &Path, path: &Path, threshold: f64, keep_dc: bool) -> Result<()> {
    let s = load(input)?;
    let f = filter_snapshots(&s, &FilterConfig { psd_threshold: threshold, keep_dc })?;
    save(&f, path)?;
    let removed = (s.values() - f.values()).norm() / s.values().norm().max(f64::MIN_POSITIVE);
    out.say(format!("wrote {} (removed {:.4}% of the signal norm)", path.display(), 100.0 * removed));
    Ok(())
}

pub fn pod(out: &Output, input: &Path, path: &Path, truncation: Truncation, center: bool) -> Result<()> {
    let s = load(input)?;
    let basis = PodBasis::fit_with(&s, truncation, center)?;
    basis.save(path)?;
    out.say(format!("modes: {}", basis.n_modes()));
    out.say(format!("energy: {:.6}", basis.energy()));
    out.say(format!("wrote {}", path.display()));
    Ok(())
}

pub fn train(
    out: &Output,
    input: &Path,
    basis_path: &Path,
    model_path: &Path,
    loss_path: Option<&Path>,
    n_train: Option<usize>,
    cfg: &TrainingConfig,
) -> Result<()> {
    cfg.validate()?;
    let mut s = load(input)?;
    if let Some(n) = n_train {
        s = s.columns(0, n)?;
    }
    let basis = PodBasis::load(basis_path)?;
    let c = project(&s, &basis)?;
    let (model, history) = train_model(&c, cfg)?;
    model.save(model_path)?;
    if let Some(p) = loss_path {
        let mut csv = String::from("epoch,loss\n");
        for (i, l) in history.iter().enumerate() {
            let _ = writeln!(csv, "{},{l:.16e}", i + 1);
        }
        write_text(p, &csv)?;
    }
    let final_loss = model.loss_on(&c)?;
    out.say(format!("final loss: {final_loss:.6e}"));
    out.say(format!("wrote {}", model_path.display()));
    Ok(())
}

pub fn predict(
    out: &Output,
    model_path: &Path,
    basis_path: &Path,
    seed_path: &Path,
    steps: usize,
    path: &Path,
    truth_path: Option<&Path>,
) -> Result<()> {
    if steps == 0 {
        return Err(CliError::Usage("--steps must be at least 1".into()));
    }
    let model = LstmModel::load(model_path)?;
    let basis = PodBasis::load(basis_path)?;
    let seed = project(&load(seed_path)?, &basis)?;
    let pred = forecast(&model, &basis, &seed, steps)?;
    save(&pred.snapshots, path)?;
    out.say(format!("wrote {} ({} steps, {:.6} s online)", path.display(), steps, pred.seconds));
    if let Some(tp) = truth_path {
        let truth = load(tp)?;
        if truth.n_dof() != pred.snapshots.n_dof() || truth.n_time() < steps {
            return Err(RomError::Dimension(format!(
                "truth is {}x{}, prediction is {}x{steps}",
                truth.n_dof(),
                truth.n_time(),
                pred.snapshots.n_dof()
            ))
            .into());
        }
        for k in 0..steps {
            let e = relative_l2_error(
                truth.values().column(k).as_slice(),
                pred.snapshots.values().column(k).as_slice(),
                None,
            )?;
            out.say(format!("step {}: t = {:.6}, relative error {e:.4}%", k + 1, pred.snapshots.time(k)));
        }
    }
    Ok(())
}

pub fn evaluate(
    out: &Output,
    fom_path: &Path,
    rom_path: &Path,
    csv_path: &Path,
    svg_path: Option<&Path>,
    n_train: Option<usize>,
) -> Result<()> {
    let fom = load(fom_path)?;
    let rom = load(rom_path)?;
    let report = error_series(&fom, &rom, n_train.unwrap_or(fom.n_time()))?;
    report.save_csv(csv_path)?;
    out.say(report.summary().trim_end());
    out.say(format!("wrote {}", csv_path.display()));
    if let Some(svg) = svg_path {
        write_text(svg, &report.to_svg("relative L2 error"))?;
        out.say(format!("wrote {}", svg.display()));
    }
    Ok(())
}

fn run_pipeline(
    out: &Output,
    cfg: &Config,
    s: &SnapshotMatrix,
    dir: &Path,
    prefix: &str,
    reference: IdentificationReference,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| RomError::Io { path: dir.to_owned(), source: e })?;
    let pcfg = config::pipeline_config(cfg, s.n_time(), prefix)?;
    let artifacts = offline(s, &pcfg)?;
    out.say(format!(
        "{}: {} modes, final training loss {:.6e}",
        dir.display(),
        artifacts.basis.n_modes(),
        artifacts.loss_history.last().copied().unwrap_or(f64::NAN)
    ));
    save(&artifacts.filtered_training, &dir.join("filtered_train.bin"))?;
    artifacts.basis.save(&dir.join("basis.bin"))?;
    artifacts.model.save(&dir.join("model.bin"))?;
    let mut loss = String::from("epoch,loss\n");
    for (i, l) in artifacts.loss_history.iter().enumerate() {
        let _ = writeln!(loss, "{},{l:.16e}", i + 1);
    }
    write_text(&dir.join("loss.csv"), &loss)?;
    let (report, rom) = evaluate_rom(s, &artifacts, reference)?;
    save(&rom, &dir.join("rom.bin"))?;
    report.save_csv(&dir.join("report.csv"))?;
    write_text(&dir.join("report.svg"), &report.to_svg("relative L2 error"))?;
    out.say(report.summary().trim_end());
    Ok(())
}

pub fn pipeline(
    out: &Output,
    config_path: &Path,
    dir: &Path,
    reference: IdentificationReference,
) -> Result<()> {
    let cfg = load_config(config_path)?;
    std::fs::create_dir_all(dir).map_err(|e| RomError::Io { path: dir.to_owned(), source: e })?;
    if let Some(input) = cfg.input_path() {
        let s = load(&input)?;
        return run_pipeline(out, &cfg, &s, dir, "", reference);
    }
    match synthesize(&cfg)? {
        Synthesized::Eulerian(s) => {
            save(&s, &dir.join("snapshots.bin"))?;
            run_pipeline(out, &cfg, &s, dir, "", reference)
        }
        Synthesized::Lagrangian(parts) => {
            for (s, c) in parts.iter().zip(["x", "y", "z"]) {
                let sub = dir.join(c);
                std::fs::create_dir_all(&sub).map_err(|e| RomError::Io { path: sub.clone(), source: e })?;
                save(s, &sub.join("snapshots.bin"))?;
                run_pipeline(out, &cfg, s, &sub, &format!("{c}."), reference)?;
            }
            Ok(())
        }
    }
}
