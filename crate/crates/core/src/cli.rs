//! `qgan` command line: TOML experiment files in, CSV and JSON artifacts out.
//!
//! Exit codes: 0 success, 1 runtime abort, 2 configuration error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::adversarial::{
    batch_runs, config_hash, summarize, train_run, ExperimentSummary, GeneratorConfig, RunRecord,
    ScheduleEvent, ScheduledEvent, TrainConfig,
};
use crate::ansatz::{AncillaConfig, InitMode};
use crate::expressivity::{
    expressivity_study, ordering_verdict, RankReport, StudySettings, DEFAULT_REL_TOL,
};
use crate::sim::{target_unitary_zzz, UnitaryMatrix};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::NonFinite(_) => CliError::Runtime(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "qgan", version, about = "Adversarial unitary learning with ancilla insertion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One seeded training run: run.json and trace.csv.
    Train(CommonArgs),
    /// Batches of runs over ancilla configurations, insertion timings or restart ratios.
    Sweep(CommonArgs),
    /// Jacobian-rank study over ancilla configurations.
    Expressivity(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `training.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Overrides `output.directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hamiltonian {
    Zzz,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub hamiltonian: Hamiltonian,
    pub time: f64,
}

impl TargetSection {
    pub fn unitary(&self) -> UnitaryMatrix {
        match self.hamiltonian {
            Hamiltonian::Zzz => target_unitary_zzz(self.time),
        }
    }
}

/// Training fields of [`TrainConfig`] other than the generator layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub max_iters_phase1: usize,
    pub max_iters_phase2: usize,
    pub fidelity_threshold: f64,
    pub lr_generator: f64,
    pub lr_discriminator: f64,
    pub disc_steps_per_iter: usize,
    pub gen_steps_per_iter: usize,
    pub clip_bound: f64,
    pub max_weight: usize,
    pub seed: u64,
    pub schedule: Vec<ScheduledEvent>,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            max_iters_phase1: d.max_iters_phase1,
            max_iters_phase2: d.max_iters_phase2,
            fidelity_threshold: d.fidelity_threshold,
            lr_generator: d.lr_generator,
            lr_discriminator: d.lr_discriminator,
            disc_steps_per_iter: d.disc_steps_per_iter,
            gen_steps_per_iter: d.gen_steps_per_iter,
            clip_bound: d.clip_bound,
            max_weight: d.max_weight,
            seed: d.seed,
            schedule: d.schedule,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Single,
    AncillaSweep,
    TimingSweep,
    RestartSweep,
    Expressivity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Timing {
    /// Ancilla wired in from iteration 0.
    Start,
    /// Ancilla inserted at `insertion_iteration`.
    Mid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySection {
    pub kind: StudyKind,
    pub runs_per_point: usize,
    /// Ancilla configurations; the default depends on `kind`.
    pub configs: Option<Vec<AncillaConfig>>,
    pub init_modes: Vec<InitMode>,
    /// Defaults to `max_iters_phase1`.
    pub insertion_iteration: Option<usize>,
    pub timings: Vec<Timing>,
    pub ratios: Vec<f64>,
    /// Defaults to `max_iters_phase1`.
    pub restart_iteration: Option<usize>,
    pub samples: usize,
    pub layers: usize,
    pub zero_params: bool,
    pub rel_tol: f64,
}

impl Default for StudySection {
    fn default() -> Self {
        Self {
            kind: StudyKind::Single,
            runs_per_point: 30,
            configs: None,
            init_modes: vec![InitMode::Random, InitMode::Zero],
            insertion_iteration: None,
            timings: vec![Timing::Start, Timing::Mid],
            ratios: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            restart_iteration: None,
            samples: 1000,
            layers: 1,
            zero_params: false,
            rel_tol: DEFAULT_REL_TOL,
        }
    }
}

impl StudySection {
    pub fn configs_or_default(&self) -> Vec<AncillaConfig> {
        if let Some(c) = &self.configs {
            return c.clone();
        }
        match self.kind {
            StudyKind::TimingSweep => vec![AncillaConfig::A3, AncillaConfig::A4],
            StudyKind::Expressivity => vec![AncillaConfig::A1, AncillaConfig::A3, AncillaConfig::A4],
            _ => AncillaConfig::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("results"),
            formats: vec![Format::Json, Format::Csv],
        }
    }
}

impl OutputSection {
    fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub target: TargetSection,
    #[serde(default)]
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub study: StudySection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.training;
        TrainConfig {
            generator: self.generator,
            max_iters_phase1: t.max_iters_phase1,
            max_iters_phase2: t.max_iters_phase2,
            fidelity_threshold: t.fidelity_threshold,
            lr_generator: t.lr_generator,
            lr_discriminator: t.lr_discriminator,
            disc_steps_per_iter: t.disc_steps_per_iter,
            gen_steps_per_iter: t.gen_steps_per_iter,
            clip_bound: t.clip_bound,
            max_weight: t.max_weight,
            seed: t.seed,
            schedule: t.schedule.clone(),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if !self.target.time.is_finite() {
            return bad(format!("target.time must be finite, got {}", self.target.time));
        }
        if self.output.formats.is_empty() {
            return bad("output.formats must name at least one of json, csv".into());
        }
        let s = &self.study;
        if s.runs_per_point < 1 {
            return bad("study.runs_per_point must be at least 1".into());
        }
        if s.samples < 1 {
            return bad("study.samples must be at least 1".into());
        }
        if s.layers < 1 {
            return bad("study.layers must be at least 1".into());
        }
        if !(s.rel_tol > 0.0 && s.rel_tol < 1.0) {
            return bad(format!("study.rel_tol must lie in (0, 1), got {}", s.rel_tol));
        }
        if let Some(r) = s.ratios.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return bad(format!("study.ratios entries must lie in [0, 1], got {r}"));
        }
        self.train_config().validate()?;
        let sweep = matches!(
            s.kind,
            StudyKind::AncillaSweep | StudyKind::TimingSweep | StudyKind::RestartSweep
        );
        if sweep && self.generator.ancilla_config.has_ancilla() {
            return bad("sweeps start from an ancilla-free generator; set generator.ancilla_config = \"none\"".into());
        }
        if sweep {
            for cfg in sweep_points(self) {
                cfg.train.validate()?;
            }
        }
        if s.kind == StudyKind::Expressivity {
            let configs = s.configs_or_default();
            for need in [AncillaConfig::A1, AncillaConfig::A3, AncillaConfig::A4] {
                if !configs.contains(&need) {
                    return bad(format!("study.configs must include {need} for the ordering verdict"));
                }
            }
        }
        Ok(())
    }
}

/// One row of a sweep table.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub name: String,
    pub train: TrainConfig,
}

fn with_event(base: &TrainConfig, iteration: usize, event: ScheduleEvent) -> TrainConfig {
    let mut cfg = base.clone();
    cfg.schedule.push(ScheduledEvent { iteration, event });
    cfg
}

/// Sweep rows in output order, starting with the no-ancilla reference.
pub fn sweep_points(config: &ExperimentConfig) -> Vec<SweepPoint> {
    let base = config.train_config();
    let s = &config.study;
    let mut points = vec![SweepPoint {
        name: "reference".into(),
        train: base.clone(),
    }];
    match s.kind {
        StudyKind::AncillaSweep => {
            let at = s.insertion_iteration.unwrap_or(base.max_iters_phase1);
            for c in s.configs_or_default() {
                if !c.has_ancilla() {
                    points.push(SweepPoint {
                        name: c.to_string(),
                        train: base.clone(),
                    });
                    continue;
                }
                for &init in &s.init_modes {
                    points.push(SweepPoint {
                        name: format!("{c}_{init}"),
                        train: with_event(&base, at, ScheduleEvent::InsertAncilla { config: c, init }),
                    });
                }
            }
        }
        StudyKind::TimingSweep => {
            let at = s.insertion_iteration.unwrap_or(base.max_iters_phase1);
            for c in s.configs_or_default().into_iter().filter(|c| c.has_ancilla()) {
                for &timing in &s.timings {
                    let train = match timing {
                        Timing::Start => {
                            let mut t = base.clone();
                            t.generator.ancilla_config = c;
                            t
                        }
                        Timing::Mid => with_event(
                            &base,
                            at,
                            ScheduleEvent::InsertAncilla {
                                config: c,
                                init: InitMode::Random,
                            },
                        ),
                    };
                    let label = match timing {
                        Timing::Start => "start",
                        Timing::Mid => "mid",
                    };
                    points.push(SweepPoint {
                        name: format!("{c}_{label}"),
                        train,
                    });
                }
            }
        }
        StudyKind::RestartSweep => {
            let at = s.restart_iteration.unwrap_or(base.max_iters_phase1);
            for &ratio in &s.ratios {
                points.push(SweepPoint {
                    name: format!("ratio_{ratio}"),
                    train: with_event(&base, at, ScheduleEvent::RandomRestart { ratio }),
                });
            }
        }
        StudyKind::Single | StudyKind::Expressivity => {}
    }
    points
}

fn apply_overrides(config: &mut ExperimentConfig, args: &CommonArgs) {
    if let Some(seed) = args.seed {
        config.training.seed = seed;
    }
    if let Some(out) = &args.out {
        config.output.directory = out.clone();
    }
}

fn prepare_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| io_err(path, e))
}

pub fn event_label(event: &ScheduleEvent) -> String {
    match event {
        ScheduleEvent::InsertAncilla { config, init } => format!("insert_ancilla:{config}:{init}"),
        ScheduleEvent::RandomRestart { ratio } => format!("random_restart:{ratio}"),
    }
}

/// Rows `(run_id, iteration, fidelity, loss, event)`. An event applied at
/// iteration `i` is marked on row `i`, the last point before it took effect.
fn write_trace(path: &Path, records: &[RunRecord]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let err = |e: csv::Error| io_err(path, e);
    w.write_record(["run_id", "iteration", "fidelity", "loss", "event"]).map_err(err)?;
    for (run_id, r) in records.iter().enumerate() {
        for (i, (f, l)) in r.fidelity_trace.iter().zip(&r.loss_trace).enumerate() {
            let event = r
                .events
                .iter()
                .filter(|e| e.iteration == i)
                .map(|e| event_label(&e.event))
                .collect::<Vec<_>>()
                .join(";");
            w.write_record([
                run_id.to_string(),
                i.to_string(),
                f.to_string(),
                l.to_string(),
                event,
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn aborted_runs(records: &[RunRecord]) -> usize {
    records.iter().filter(|r| r.aborted.is_some()).count()
}

pub fn cmd_train(args: &CommonArgs) -> CliResult<()> {
    let mut config = ExperimentConfig::load(&args.config)?;
    apply_overrides(&mut config, args);
    let train = config.train_config();
    let record = train_run(&train, &config.target.unitary())?;
    let dir = &config.output.directory;
    prepare_dir(dir)?;
    if config.output.wants(Format::Json) {
        write_json(
            &dir.join("run.json"),
            &json!({
                "schema_version": SCHEMA_VERSION,
                "config_hash": config_hash(&train),
                "target": config.target,
                "config": train,
                "record": record,
            }),
        )?;
    }
    if config.output.wants(Format::Csv) {
        write_trace(&dir.join("trace.csv"), std::slice::from_ref(&record))?;
    }
    match &record.aborted {
        Some(why) => Err(CliError::Runtime(format!("run aborted: {why}"))),
        None => Ok(()),
    }
}

pub fn cmd_sweep(args: &CommonArgs) -> CliResult<()> {
    let mut config = ExperimentConfig::load(&args.config)?;
    apply_overrides(&mut config, args);
    if !matches!(
        config.study.kind,
        StudyKind::AncillaSweep | StudyKind::TimingSweep | StudyKind::RestartSweep
    ) {
        return Err(CliError::Config(format!(
            "sweep needs study.kind = ancilla_sweep, timing_sweep or restart_sweep, got {:?}",
            config.study.kind
        )));
    }
    let target = config.target.unitary();
    let n_runs = config.study.runs_per_point;
    let points = sweep_points(&config);
    let mut summaries: Vec<(String, ExperimentSummary)> = Vec::with_capacity(points.len());
    let mut n_aborted = 0;
    let mut reference: Option<ExperimentSummary> = None;
    for p in &points {
        // The ancilla-free point and the reference are the same experiment.
        let summary = match &reference {
            Some(r) if p.train == points[0].train => r.clone(),
            _ => {
                let records = batch_runs(&p.train, &target, n_runs, args.workers)?;
                n_aborted += aborted_runs(&records);
                summarize(&p.train, &records)
            }
        };
        reference.get_or_insert_with(|| summary.clone());
        summaries.push((p.name.clone(), summary));
    }

    let dir = &config.output.directory;
    prepare_dir(dir)?;
    if config.output.wants(Format::Json) {
        let points_json: Vec<_> = summaries
            .iter()
            .zip(&points)
            .map(|((name, s), p)| json!({ "point": name, "config": p.train, "summary": s }))
            .collect();
        write_json(
            &dir.join("sweep.json"),
            &json!({
                "schema_version": SCHEMA_VERSION,
                "kind": config.study.kind,
                "target": config.target,
                "runs_per_point": n_runs,
                "points": points_json,
            }),
        )?;
    }
    if config.output.wants(Format::Csv) {
        let path = dir.join("sweep.csv");
        let mut w = csv_writer(&path)?;
        let err = |e: csv::Error| io_err(&path, e);
        w.write_record(["point", "F_avg_max", "std_error", "n_runs"]).map_err(err)?;
        for (name, s) in &summaries {
            w.write_record([
                name.clone(),
                s.f_avg_max.to_string(),
                s.std_error.to_string(),
                s.n_runs.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;
    }
    if n_aborted > 0 {
        return Err(CliError::Runtime(format!("{n_aborted} run(s) aborted")));
    }
    Ok(())
}

pub fn study_settings(config: &ExperimentConfig) -> StudySettings {
    StudySettings {
        n_system_qubits: config.generator.qubits,
        n_layers: config.study.layers,
        n_samples: config.study.samples,
        seed: config.training.seed,
        rel_tol: config.study.rel_tol,
        zero_params: config.study.zero_params,
    }
}

/// Verdict lines for the expressivity study.
pub fn verdict_text(reports: &[RankReport], zero_params: bool) -> CliResult<String> {
    let v = ordering_verdict(reports)?;
    let word = |ok: bool| if ok { "PASS" } else { "FAIL" };
    let mut text = String::new();
    for r in reports {
        text += &format!(
            "{}: generic rank {} (phase-quotiented {}), rank at zero {}\n",
            r.config, r.generic_rank, r.generic_phase_quotiented_rank, r.zero_param_rank
        );
    }
    if zero_params {
        let eq = if v.zero_ranks_equal { "equal ranks" } else { "unequal ranks" };
        text += &format!("zero parameters: {eq}\n");
    } else {
        text += &format!("ordering E(a4) > E(a3) > E(a1): {}\n", word(v.strict_ordering));
        text += &format!("ranks equal at zero: {}\n", word(v.zero_ranks_equal));
    }
    Ok(text)
}

pub fn cmd_expressivity(args: &CommonArgs) -> CliResult<()> {
    let mut config = ExperimentConfig::load(&args.config)?;
    apply_overrides(&mut config, args);
    if config.study.kind != StudyKind::Expressivity {
        return Err(CliError::Config(format!(
            "expressivity needs study.kind = expressivity, got {:?}",
            config.study.kind
        )));
    }
    let settings = study_settings(&config);
    let reports = expressivity_study(&config.study.configs_or_default(), &settings, args.workers)?;
    let verdict = ordering_verdict(&reports)?;
    let dir = &config.output.directory;
    prepare_dir(dir)?;
    if config.output.wants(Format::Json) {
        write_json(
            &dir.join("rank_reports.json"),
            &json!({
                "schema_version": SCHEMA_VERSION,
                "settings": settings,
                "reports": reports,
                "verdict": verdict,
            }),
        )?;
    }
    if config.output.wants(Format::Csv) {
        let path = dir.join("samples.csv");
        let mut w = csv_writer(&path)?;
        let err = |e: csv::Error| io_err(&path, e);
        w.write_record(["config", "sample_id", "rank"]).map_err(err)?;
        for r in &reports {
            for (k, rank) in r.sample_ranks.iter().enumerate() {
                w.write_record([r.config.to_string(), k.to_string(), rank.to_string()])
                    .map_err(err)?;
            }
        }
        w.flush().map_err(|e| io_err(&path, e))?;
    }
    let path = dir.join("verdict.txt");
    fs::write(&path, verdict_text(&reports, config.study.zero_params)?).map_err(|e| io_err(&path, e))
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Expressivity(a) => cmd_expressivity(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Usage errors map to 2.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("qgan: {e}");
            e.exit_code()
        }
    }
}
