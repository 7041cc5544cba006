//! End-to-end run: parse inputs, anneal, write artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;
use voltfloor_core::anneal::{anneal, wire_delays, AnnealConfig, AnnealError, AnnealResult};
use voltfloor_core::floorplan::{pack, SlicingExpr};
use voltfloor_core::model::modify_dp_curve_with;
use voltfloor_core::voltage::{build_timing_graph, VoltageError};

use crate::formats::{build_design, parse_blocks, parse_nets, parse_spec, write_floorplan, write_shifters, Design, FormatError};
use crate::render::emit_svg;
use crate::report::{emit_report, ReportRow};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub blocks: PathBuf,
    pub nets: PathBuf,
    pub spec: PathBuf,
    /// Report label; defaults to the blocks file stem.
    pub dataset: Option<String>,
    pub k: Option<usize>,
    pub t_cycle: Option<i64>,
    pub anneal: AnnealConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Format { path: PathBuf, source: FormatError },
    #[error(transparent)]
    Design(FormatError),
    #[error("timing infeasible: all-fastest critical path {fastest} exceeds T_cycle {t_cycle}; path: {}", critical_path.join(" -> "))]
    TimingInfeasible { fastest: i64, t_cycle: i64, critical_path: Vec<String> },
    #[error(transparent)]
    Anneal(AnnealError),
}

impl PipelineError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Read { .. } | Self::Format { .. } | Self::Design(_) => 2,
            Self::TimingInfeasible { .. } => 3,
            Self::Anneal(AnnealError::Model(_)) => 2,
            Self::Write { .. } | Self::Anneal(_) => 1,
        }
    }
}

pub fn read(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|source| PipelineError::Read { path: path.to_path_buf(), source })
}

pub fn write(path: &Path, text: &str) -> Result<(), PipelineError> {
    std::fs::write(path, text).map_err(|source| PipelineError::Write { path: path.to_path_buf(), source })
}

fn at(path: &Path) -> impl FnOnce(FormatError) -> PipelineError + '_ {
    move |source| PipelineError::Format { path: path.to_path_buf(), source }
}

pub fn load_design(blocks: &Path, nets: &Path, spec: &Path, k: Option<usize>, t_cycle: Option<i64>) -> Result<Design, PipelineError> {
    let b = parse_blocks(&read(blocks)?).map_err(at(blocks))?;
    let n = parse_nets(&read(nets)?, &b).map_err(at(nets))?;
    let s = parse_spec(&read(spec)?).map_err(at(spec))?;
    build_design(&b, &n, &s, k, t_cycle).map_err(PipelineError::Design)
}

/// Critical path under the all-fastest assignment on the starting floorplan.
fn diagnose(design: &Design, cfg: &AnnealConfig) -> Vec<String> {
    let nl = &design.netlist;
    let m = nl.modules().len();
    let Ok(fp) = pack(&SlicingExpr::initial(m), &nl.dims()) else { return Vec::new() };
    let Ok(tg) = build_timing_graph(nl, &wire_delays(&fp, nl, cfg.kappa)) else { return Vec::new() };
    let delays: Vec<i64> = nl
        .curves()
        .iter()
        .map(|c| modify_dp_curve_with(c, &design.shifter, cfg.overhead_at_top_level).map_or(c.delay(1), |c| c.delay(1)))
        .collect();
    tg.critical_path(&delays).into_iter().map(|i| design.names[i].clone()).collect()
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub row: ReportRow,
    pub design: Design,
    pub result: AnnealResult,
}

pub const REPORT_FILE: &str = "report.csv";
pub const FLOORPLAN_FILE: &str = "floorplan.txt";
pub const SHIFTERS_FILE: &str = "shifters.txt";
pub const SVG_FILE: &str = "layout.svg";

/// Runs the design through annealing and writes the report, floorplan,
/// shifter list and SVG into `out_dir`.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunOutcome, PipelineError> {
    let design = load_design(&cfg.blocks, &cfg.nets, &cfg.spec, cfg.k, cfg.t_cycle)?;
    let start = Instant::now();
    let result = match anneal(&design.netlist, &design.shifter, &cfg.anneal, cfg.seed) {
        Ok(r) => r,
        Err(AnnealError::Voltage(VoltageError::TimingInfeasible { fastest, t_cycle })) => {
            return Err(PipelineError::TimingInfeasible { fastest, t_cycle, critical_path: diagnose(&design, &cfg.anneal) })
        }
        Err(e) => return Err(PipelineError::Anneal(e)),
    };
    let runtime = start.elapsed().as_secs_f64();
    let dataset = cfg.dataset.clone().unwrap_or_else(|| {
        cfg.blocks.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "design".into())
    });
    let row = ReportRow {
        dataset,
        k: design.netlist.k(),
        power_cost: result.voltage.total_power,
        wirelength_with_ls: result.metrics.wirelength,
        ls_number: result.shifters.placements.len(),
        ilo_percent: result.shifters.ilo_percent,
        white_space_percent: result.floorplan.white_space_percent(),
        runtime_seconds: runtime,
    };
    std::fs::create_dir_all(&cfg.out_dir).map_err(|source| PipelineError::Write { path: cfg.out_dir.clone(), source })?;
    let shifter_rects: Vec<_> = result.shifters.placements.iter().map(|p| p.rect).collect();
    write(&cfg.out_dir.join(REPORT_FILE), &emit_report(std::slice::from_ref(&row)))?;
    write(&cfg.out_dir.join(FLOORPLAN_FILE), &write_floorplan(&result.floorplan, &design.names, &result.voltage.levels))?;
    write(&cfg.out_dir.join(SHIFTERS_FILE), &write_shifters(&result.shifters.placements, &design.names))?;
    write(&cfg.out_dir.join(SVG_FILE), &emit_svg(&result.floorplan, &result.voltage.levels, &shifter_rects))?;
    Ok(RunOutcome { row, design, result })
}
