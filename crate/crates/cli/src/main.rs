use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use num_rational::Ratio;
use voltfloor::formats::{parse_blocks, parse_floorplan, parse_nets, parse_shifters, write_spec};
use voltfloor::gen::{gen_bench, gen_spec, GenParams};
use voltfloor::gsrc::{convert_blocks, convert_nets};
use voltfloor::parse_ratio;
use voltfloor::pipeline::{read, run_pipeline, write, PipelineError, RunConfig};
use voltfloor::render::emit_svg;
use voltfloor::report::{emit_report, parse_report, pretty};
use voltfloor_core::anneal::AnnealConfig;
use voltfloor_core::floorplan::PhiWeights;
use voltfloor_core::model::decompose_multipin;

#[derive(Parser)]
#[command(name = "voltfloor", version, about = "Multi-voltage floorplanning with level-shifter assignment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate DP-curves and a shifter spec for a block set.
    GenSpec(GenSpecArgs),
    /// Generate a synthetic blocks/nets pair.
    GenBench(GenBenchArgs),
    /// Convert GSRC .blocks/.nets files to the plain formats.
    Convert(ConvertArgs),
    /// Floorplan a design and write report, floorplan, shifters and SVG.
    Run(Box<RunArgs>),
    /// Merge report files into one table.
    Report(ReportArgs),
    /// Render a saved floorplan and shifter list to SVG.
    Render(RenderArgs),
}

#[derive(Args)]
struct GenSpecArgs {
    #[arg(long)]
    blocks: PathBuf,
    #[arg(long)]
    nets: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// 0 = all-fastest critical path, 1 = all-slowest.
    #[arg(long, default_value = "1/2", value_parser = parse_ratio)]
    tightness: Ratio<i64>,
    #[arg(long, default_value_t = 16)]
    shifter_area: i64,
    /// Shifter width:height.
    #[arg(long, default_value = "1:1", value_parser = parse_pair)]
    shifter_ratio: (i64, i64),
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenBenchArgs {
    #[arg(long)]
    modules: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    /// File stem; defaults to `n<modules>`.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    blocks: PathBuf,
    #[arg(long)]
    nets: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// File stem; defaults to the blocks file stem.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    blocks: PathBuf,
    #[arg(long)]
    nets: PathBuf,
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    dataset: Option<String>,
    /// Use the first k levels of every curve.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    tcycle: Option<i64>,
    #[arg(long, default_value_t = 0.9)]
    alpha: f64,
    #[arg(long, default_value_t = 10)]
    beta: usize,
    #[arg(long, default_value_t = 0.9)]
    initial_acceptance: f64,
    #[arg(long, default_value_t = 5)]
    ls_every: usize,
    /// Wire delay per unit length.
    #[arg(long, default_value = "0", value_parser = parse_ratio)]
    kappa: Ratio<i64>,
    /// Shifter search window; half the mean room dimension when absent.
    #[arg(long)]
    window: Option<i64>,
    #[arg(long)]
    rotation: bool,
    /// Leave the fastest level free of shifter overhead.
    #[arg(long)]
    no_top_level_overhead: bool,
    /// Cost weights `area,wirelength,power,islands,unassigned`; sampled when absent.
    #[arg(long, value_parser = parse_weights)]
    weights: Option<PhiWeights>,
    #[arg(long)]
    max_evaluations: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// Report files to merge, in order.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Aligned columns instead of CSV.
    #[arg(long)]
    pretty: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    floorplan: PathBuf,
    #[arg(long)]
    shifters: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_pair(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once(':').ok_or("expected `<num>:<den>`")?;
    let a = a.parse().map_err(|_| format!("bad number `{a}`"))?;
    let b = b.parse().map_err(|_| format!("bad number `{b}`"))?;
    Ok((a, b))
}

fn parse_weights(s: &str) -> Result<PhiWeights, String> {
    let v = s.split(',').map(parse_ratio).collect::<Result<Vec<_>, _>>()?;
    let [a, w, p, r, n] = v[..] else { return Err("expected five comma-separated weights".into()) };
    PhiWeights::new(a, w, p, r, n).map_err(|e| e.to_string())
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), PipelineError> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Failure with its exit status.
struct Failure(i32, anyhow::Error);

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure(e.exit_code(), e.into())
    }
}

fn input<E: Into<anyhow::Error>>(path: &Path) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure(2, e.into().context(format!("in {}", path.display())))
}

fn gen_spec_cmd(a: GenSpecArgs) -> Result<(), Failure> {
    let blocks = parse_blocks(&read(&a.blocks)?).map_err(input(&a.blocks))?;
    let raw = parse_nets(&read(&a.nets)?, &blocks).map_err(input(&a.nets))?;
    let nets = decompose_multipin(&raw).map_err(input(&a.nets))?;
    if !(1..=voltfloor::gen::MAX_LEVELS).contains(&a.k) {
        return Err(Failure(2, anyhow::anyhow!("k must be between 1 and {}", voltfloor::gen::MAX_LEVELS)));
    }
    let params = GenParams {
        k: a.k,
        tightness: a.tightness,
        shifter_area: a.shifter_area,
        shifter_ratio: a.shifter_ratio,
        ..GenParams::default()
    };
    let spec = gen_spec(a.seed, &blocks, &nets, &params);
    Ok(emit(a.out.as_deref(), &write_spec(&spec))?)
}

fn make_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).map_err(|e| Failure(1, e))
}

fn gen_bench_cmd(a: GenBenchArgs) -> Result<(), Failure> {
    let name = a.name.unwrap_or_else(|| format!("n{}", a.modules));
    let (blocks, nets) = gen_bench(a.seed, a.modules);
    make_dir(&a.out_dir)?;
    write(&a.out_dir.join(format!("{name}.blocks")), &blocks)?;
    write(&a.out_dir.join(format!("{name}.nets")), &nets)?;
    Ok(())
}

fn convert_cmd(a: ConvertArgs) -> Result<(), Failure> {
    let blocks = convert_blocks(&read(&a.blocks)?).map_err(input(&a.blocks))?;
    let names: Vec<String> = parse_blocks(&blocks).map_err(input(&a.blocks))?.into_iter().map(|b| b.name).collect();
    let nets = convert_nets(&read(&a.nets)?, &names).map_err(input(&a.nets))?;
    let name = a
        .name
        .or_else(|| a.blocks.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "design".into());
    make_dir(&a.out_dir)?;
    write(&a.out_dir.join(format!("{name}.blocks")), &blocks)?;
    write(&a.out_dir.join(format!("{name}.nets")), &nets)?;
    Ok(())
}

fn run_cmd(a: RunArgs) -> Result<(), Failure> {
    let cfg = RunConfig {
        blocks: a.blocks,
        nets: a.nets,
        spec: a.spec,
        dataset: a.dataset,
        k: a.k,
        t_cycle: a.tcycle,
        anneal: AnnealConfig {
            alpha: a.alpha,
            beta: a.beta,
            initial_acceptance: a.initial_acceptance,
            ls_every: a.ls_every,
            kappa: a.kappa,
            window: a.window,
            rotation: a.rotation,
            weights: a.weights,
            overhead_at_top_level: !a.no_top_level_overhead,
            max_evaluations: a.max_evaluations,
            ..AnnealConfig::default()
        },
        seed: a.seed,
        out_dir: a.out_dir,
    };
    let outcome = run_pipeline(&cfg)?;
    print!("{}", emit_report(std::slice::from_ref(&outcome.row)));
    Ok(())
}

fn report_cmd(a: ReportArgs) -> Result<(), Failure> {
    let mut rows = Vec::new();
    for path in &a.inputs {
        rows.extend(parse_report(&read(path)?).map_err(input(path))?);
    }
    let text = if a.pretty { pretty(&rows) } else { emit_report(&rows) };
    Ok(emit(a.out.as_deref(), &text)?)
}

fn render_cmd(a: RenderArgs) -> Result<(), Failure> {
    let fp = parse_floorplan(&read(&a.floorplan)?).map_err(input(&a.floorplan))?;
    let shifters = match &a.shifters {
        Some(p) => parse_shifters(&read(p)?).map_err(input(p))?.into_iter().map(|s| s.rect).collect(),
        None => Vec::new(),
    };
    write(&a.out, &emit_svg(&fp.floorplan, &fp.levels, &shifters))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenSpec(a) => gen_spec_cmd(a),
        Command::GenBench(a) => gen_bench_cmd(a),
        Command::Convert(a) => convert_cmd(a),
        Command::Run(a) => run_cmd(*a),
        Command::Report(a) => report_cmd(a),
        Command::Render(a) => render_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code as u8)
        }
    }
}
