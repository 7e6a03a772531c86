//! `ssd`: verification, analysis, toy training, and sampling for the
//! scale-space diffusion crate.
//!
//! Exit codes: 0 success, 1 runtime or verification failure, 2 bad usage or
//! configuration.

mod config;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use config::{parse_levels, parse_schedule_kind, RunConfig};
use ssd_core::analysis;
use ssd_core::denoiser::{
    chain_mac_total, load_checkpoint, plan_route, save_checkpoint, synthetic_blobs, train_iter,
    AdamConfig, Denoiser, MlpConfig, MlpDenoiser, OracleDenoiser, TrainState,
};
use ssd_core::linops::check_psd_feasibility;
use ssd_core::sampler::{sample_chain, ChainOptions};
use ssd_core::schedules::{ScheduleKind, DEFAULT_BETA_END, DEFAULT_BETA_START, MIN_SNR_GAMMA};
use ssd_core::tensor::{pnm_extension, read_stf_file, write_pnm_file, write_stf_file};
use ssd_core::{DiffusionProcess, NoiseSchedule, ResolutionSchedule, SampleMode};

#[derive(Parser)]
#[command(name = "ssd", version, about = "scale-space diffusion toolkit")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct ScheduleArgs {
    /// Number of diffusion steps.
    #[arg(long)]
    t: Option<usize>,
    /// Ascending resolution levels, e.g. 8,16,32,64.
    #[arg(long)]
    levels: Option<String>,
    /// Schedule family: equal | convex:G | tanh:G | sigmoid:G | explicit.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    beta_start: Option<f64>,
    #[arg(long)]
    beta_end: Option<f64>,
    #[arg(long)]
    channels: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the dense-oracle invariant suite and print a pass/fail table.
    Verify {
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Dump (t, r(t), alpha_bar, sigma, min-snr weight) as CSV on stdout.
    Schedule {
        #[command(flatten)]
        sched: ScheduleArgs,
    },
    /// Write the information curves (t, info) and (r, info) as CSV files.
    InfoCurves {
        #[command(flatten)]
        sched: ScheduleArgs,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Check sigma_t^2 >= sigma_(t-1)^2 lambda_max(M M^T) at every step.
    PsdCheck {
        #[command(flatten)]
        sched: ScheduleArgs,
    },
    /// Train the toy MLP denoiser; writes checkpoint.ssdw and loss.csv.
    TrainToy {
        #[command(flatten)]
        sched: ScheduleArgs,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        weight_decay: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory of .stf training images (synthetic blobs if omitted).
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Generate samples from a checkpoint or an oracle image.
    Sample {
        #[command(flatten)]
        sched: ScheduleArgs,
        #[arg(long, conflicts_with = "oracle")]
        checkpoint: Option<PathBuf>,
        /// Clean image (.stf); the chain must reconstruct it.
        #[arg(long)]
        oracle: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// exact | isotropic
        #[arg(long)]
        mode: Option<String>,
        /// Record every Nth visited step of each chain.
        #[arg(long)]
        record: Option<usize>,
        /// Timestep stride inside resolution-preserving runs.
        #[arg(long)]
        stride: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Per-timestep routing costs: flexible routing vs full-depth baseline.
    Flops {
        #[command(flatten)]
        sched: ScheduleArgs,
        #[arg(long)]
        unet_levels: Option<usize>,
    },
    /// Map correction strengths c to backtracking timesteps s >= t.
    Backtrack {
        #[command(flatten)]
        sched: ScheduleArgs,
        /// Timestep to roll back from.
        #[arg(long)]
        step: usize,
        /// Comma-separated c values in (0, 0.25].
        #[arg(long)]
        c: String,
    },
}

/// A usage/configuration problem (exit 2) as opposed to a runtime failure.
struct UsageError(anyhow::Error);

enum CliError {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<UsageError> for CliError {
    fn from(e: UsageError) -> Self {
        CliError::Usage(e.0)
    }
}

fn usage<T>(r: anyhow::Result<T>) -> Result<T, UsageError> {
    r.map_err(UsageError)
}

struct Resolved {
    process: DiffusionProcess,
    kind: ScheduleKind,
    gamma: f64,
}

fn resolve_process(args: &ScheduleArgs, cfg: &RunConfig) -> Result<Resolved, UsageError> {
    resolve_process_with_channels(args, cfg, 1)
}

fn resolve_process_with_channels(
    args: &ScheduleArgs,
    cfg: &RunConfig,
    default_channels: usize,
) -> Result<Resolved, UsageError> {
    let t_max = args.t.or(cfg.t).unwrap_or(1000);
    let levels = match (&args.levels, &cfg.levels) {
        (Some(s), _) => usage(parse_levels(s))?,
        (None, Some(v)) => v.clone(),
        (None, None) => vec![8, 16, 32, 64],
    };
    let spec = args
        .schedule
        .clone()
        .or_else(|| cfg.schedule.clone())
        .unwrap_or_else(|| "convex:0.5".to_string());
    let (kind, gamma) = usage(parse_schedule_kind(&spec))?;
    let beta_start = args
        .beta_start
        .or(cfg.beta_start)
        .unwrap_or(DEFAULT_BETA_START);
    let beta_end = args.beta_end.or(cfg.beta_end).unwrap_or(DEFAULT_BETA_END);
    let channels = args.channels.or(cfg.channels).unwrap_or(default_channels);

    let noise = usage(
        NoiseSchedule::linear(t_max, beta_start, beta_end).map_err(|e| anyhow!(e.to_string())),
    )?;
    let resolution = usage(
        ResolutionSchedule::new(kind, gamma, &levels, t_max).map_err(|e| anyhow!(e.to_string())),
    )?;
    let process = usage(
        DiffusionProcess::new(noise, resolution, channels).map_err(|e| anyhow!(e.to_string())),
    )?;
    Ok(Resolved {
        process,
        kind,
        gamma,
    })
}

/// RFC-4180 field quoting (our fields are numeric or simple words, but the
/// writer stays general).
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_row(fields: &[String]) -> String {
    fields
        .iter()
        .map(|f| csv_field(f))
        .collect::<Vec<_>>()
        .join(",")
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut f = std::io::BufWriter::new(
        std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    );
    writeln!(f, "{}", header.join(","))?;
    for row in rows {
        writeln!(f, "{}", csv_row(row))?;
    }
    Ok(())
}

fn print_csv(header: &[&str], rows: &[Vec<String>]) {
    println!("{}", header.join(","));
    for row in rows {
        println!("{}", csv_row(row));
    }
}

fn run_verify(seed: u64) -> Result<u8, CliError> {
    let checks = ssd_core::verify::run_suite(seed).map_err(|e| anyhow!(e.to_string()))?;
    let mut all_pass = true;
    println!(
        "{:<34} {:>6}  {:>12}  {:>9}  detail",
        "check", "status", "error", "tol"
    );
    for c in &checks {
        all_pass &= c.pass;
        println!(
            "{:<34} {:>6}  {:>12.3e}  {:>9.0e}  {}",
            c.name,
            if c.pass { "PASS" } else { "FAIL" },
            c.error,
            c.tolerance,
            c.detail
        );
    }
    println!(
        "{} checks, {} failed",
        checks.len(),
        checks.iter().filter(|c| !c.pass).count()
    );
    Ok(if all_pass { 0 } else { 1 })
}

fn run_schedule(r: &Resolved) -> Result<u8, CliError> {
    let p = &r.process;
    let rows: Vec<Vec<String>> = (1..=p.t_max())
        .map(|t| {
            vec![
                t.to_string(),
                p.resolution().resolution(t).to_string(),
                format!("{:.12e}", p.noise().alpha_bar(t)),
                format!("{:.12e}", p.noise().sigma(t)),
                format!(
                    "{:.12e}",
                    p.noise().min_snr_weight(t, MIN_SNR_GAMMA).expect("t >= 1")
                ),
            ]
        })
        .collect();
    print_csv(&["t", "r_t", "alpha_bar", "sigma", "min_snr_weight"], &rows);
    Ok(0)
}

fn run_info_curves(r: &Resolved, points: Option<usize>, out_dir: &Path) -> Result<u8, CliError> {
    let quad = points.unwrap_or(analysis::DEFAULT_QUAD_POINTS);
    std::fs::create_dir_all(out_dir).context("cannot create output directory")?;
    let t_curve =
        analysis::info_t_curve(r.process.noise(), quad).map_err(|e| anyhow!(e.to_string()))?;
    let rows: Vec<Vec<String>> = t_curve
        .points
        .iter()
        .map(|(t, v)| vec![format!("{t}"), format!("{v:.12e}")])
        .collect();
    let t_path = out_dir.join("info_t.csv");
    write_csv(&t_path, &["t", "info"], &rows)?;

    let r_curve = analysis::info_r_curve(quad.max(2)).map_err(|e| anyhow!(e.to_string()))?;
    let rows: Vec<Vec<String>> = r_curve
        .points
        .iter()
        .map(|(x, v)| vec![format!("{x:.8}"), format!("{v:.12e}")])
        .collect();
    let r_path = out_dir.join("info_r.csv");
    write_csv(&r_path, &["r", "info"], &rows)?;
    eprintln!("wrote {} and {}", t_path.display(), r_path.display());
    Ok(0)
}

fn run_psd_check(r: &Resolved) -> Result<u8, CliError> {
    let p = &r.process;
    let report = check_psd_feasibility(p.noise(), p.resolution(), p.channels())
        .map_err(|e| anyhow!(e.to_string()))?;
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|row| {
            vec![
                row.t.to_string(),
                format!("{:.12e}", row.sigma_t_sq),
                format!("{:.12e}", row.bound),
                format!("{:.12e}", row.margin),
                (if row.pass { "pass" } else { "fail" }).to_string(),
            ]
        })
        .collect();
    print_csv(&["t", "sigma_t_sq", "bound", "margin", "pass"], &rows);
    eprintln!("overall: {}", if report.pass { "pass" } else { "fail" });
    Ok(if report.pass { 0 } else { 1 })
}

#[allow(clippy::too_many_arguments)]
fn run_train_toy(
    r: &Resolved,
    cfg: &RunConfig,
    iters: Option<usize>,
    batch: Option<usize>,
    hidden: Option<usize>,
    lr: Option<f64>,
    weight_decay: Option<f64>,
    seed: Option<u64>,
    data: Option<PathBuf>,
    out_dir: Option<PathBuf>,
) -> Result<u8, CliError> {
    let p = &r.process;
    let iters = iters.or(cfg.iters).unwrap_or(2000);
    let batch = batch.or(cfg.batch).unwrap_or(16);
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let out_dir = out_dir
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir).context("cannot create output directory")?;

    let data_dir = data.or_else(|| cfg.data.clone());
    let mut rng = ssd_core::rng::stream(seed, 0, 0, ssd_core::rng::tag::TRAIN);
    let images = match &data_dir {
        Some(dir) => {
            let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
                .with_context(|| format!("cannot read data dir {}", dir.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "stf"))
                .collect();
            paths.sort();
            if paths.is_empty() {
                return Err(UsageError(anyhow!("no .stf files in {}", dir.display())).into());
            }
            let mut images = Vec::with_capacity(paths.len());
            for path in paths {
                let t = read_stf_file(&path).map_err(|e| anyhow!(e.to_string()))?;
                if t.shape() != p.shape_at(0) {
                    return Err(UsageError(anyhow!(
                        "{} is {}, schedule wants {}",
                        path.display(),
                        t.shape(),
                        p.shape_at(0)
                    ))
                    .into());
                }
                images.push(t);
            }
            images
        }
        None => {
            let count = cfg.synthetic_count.unwrap_or(64);
            synthetic_blobs(count, p.channels(), p.resolution().r_max(), &mut rng)
        }
    };

    let mlp_cfg = MlpConfig {
        hidden: hidden.or(cfg.hidden).unwrap_or(128),
        embed_dim: cfg.embed_dim.unwrap_or(32),
    };
    let adam = AdamConfig {
        lr: lr.or(cfg.lr).unwrap_or(1e-4),
        weight_decay: weight_decay.or(cfg.weight_decay).unwrap_or(0.01),
        ..Default::default()
    };
    let mut model = MlpDenoiser::new(p, mlp_cfg, &mut rng).map_err(|e| anyhow!(e.to_string()))?;
    let mut state = TrainState::new(&model, adam);
    eprintln!(
        "training {} pair nets, {} parameters, {} images, {} iters",
        model.pairs().len(),
        model.param_count(),
        images.len(),
        iters
    );

    let started = Instant::now();
    let mut loss_rows = Vec::with_capacity(iters);
    for it in 1..=iters {
        let idx: Vec<usize> = (0..batch)
            .map(|k| (it * batch + k) % images.len())
            .collect();
        let batch_images: Vec<_> = idx.iter().map(|&i| images[i].clone()).collect();
        let loss = train_iter(&mut model, p, &batch_images, &mut rng, &mut state)
            .map_err(|e| anyhow!(e.to_string()))?;
        loss_rows.push(vec![it.to_string(), format!("{loss:.8e}")]);
    }
    let ckpt = out_dir.join("checkpoint.ssdw");
    save_checkpoint(&ckpt, &model).map_err(|e| anyhow!(e.to_string()))?;
    write_csv(&out_dir.join("loss.csv"), &["iter", "loss"], &loss_rows)?;
    eprintln!(
        "wrote {} and loss.csv in {:.1}s",
        ckpt.display(),
        started.elapsed().as_secs_f64()
    );
    Ok(0)
}

/// Denoiser plus the channel count it was built for.
enum CliDenoiser {
    Oracle(OracleDenoiser),
    Learned(MlpDenoiser),
}

impl CliDenoiser {
    fn channels(&self) -> usize {
        match self {
            CliDenoiser::Oracle(d) => d.clean_image().shape().channels,
            CliDenoiser::Learned(m) => m.channels(),
        }
    }

    fn as_denoiser(&self) -> &dyn Denoiser {
        match self {
            CliDenoiser::Oracle(d) => d,
            CliDenoiser::Learned(m) => m,
        }
    }
}

fn build_denoiser(
    checkpoint: &Option<PathBuf>,
    oracle: &Option<PathBuf>,
) -> Result<CliDenoiser, CliError> {
    match (checkpoint, oracle) {
        (Some(path), None) => Ok(CliDenoiser::Learned(
            load_checkpoint(path).map_err(|e| anyhow!(e.to_string()))?,
        )),
        (None, Some(path)) => Ok(CliDenoiser::Oracle(OracleDenoiser::new(
            read_stf_file(path).map_err(|e| anyhow!(e.to_string()))?,
        ))),
        _ => Err(UsageError(anyhow!("need exactly one of --checkpoint or --oracle")).into()),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_sample(
    r: &Resolved,
    cfg: &RunConfig,
    denoiser: CliDenoiser,
    n: Option<usize>,
    seed: Option<u64>,
    mode: Option<String>,
    record: Option<usize>,
    stride: Option<usize>,
    out_dir: Option<PathBuf>,
) -> Result<u8, CliError> {
    let p = &r.process;
    let n = n.unwrap_or(1);
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let out_dir = out_dir
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir).context("cannot create output directory")?;
    let mode = match mode.as_deref().unwrap_or("exact") {
        "exact" => SampleMode::Exact,
        "isotropic" | "isotropic-approx" => SampleMode::IsotropicApprox,
        other => return Err(UsageError(anyhow!("unknown mode '{other}'")).into()),
    };
    if let CliDenoiser::Oracle(d) = &denoiser {
        if d.clean_image().shape() != p.shape_at(0) {
            return Err(UsageError(anyhow!(
                "oracle image is {}, schedule wants {}",
                d.clean_image().shape(),
                p.shape_at(0)
            ))
            .into());
        }
    }

    let opts = ChainOptions {
        mode,
        record,
        stride: stride.unwrap_or(1),
        lanczos: cfg.lanczos_config(),
    };
    for chain in 0..n {
        let (x, traj) = sample_chain(p, denoiser.as_denoiser(), seed, chain as u64, &opts)
            .map_err(|e| anyhow!(e.to_string()))?;
        let clamped = x.clamp(-1.0, 1.0);
        let stf = out_dir.join(format!("sample_{chain:03}.stf"));
        write_stf_file(&stf, &clamped).map_err(|e| anyhow!(e.to_string()))?;
        // Preview is best effort: PGM/PPM only exist for 1 and 3 channels.
        if matches!(clamped.shape().channels, 1 | 3) {
            let pnm = out_dir.join(format!("sample_{chain:03}.{}", pnm_extension(&clamped)));
            write_pnm_file(&pnm, &clamped).map_err(|e| anyhow!(e.to_string()))?;
        }
        println!("{}", stf.display());
        if let Some(traj) = traj {
            let dir = out_dir.join(format!("trajectory_{chain:03}"));
            std::fs::create_dir_all(&dir).context("cannot create trajectory directory")?;
            for step in &traj.steps {
                write_stf_file(dir.join(format!("t{:04}_state.stf", step.t)), &step.state)
                    .map_err(|e| anyhow!(e.to_string()))?;
                write_stf_file(
                    dir.join(format!("t{:04}_pred.stf", step.t)),
                    &step.prediction,
                )
                .map_err(|e| anyhow!(e.to_string()))?;
            }
            eprintln!("recorded {} steps in {}", traj.steps.len(), dir.display());
        }
    }
    Ok(0)
}

fn run_flops(r: &Resolved, unet_levels: Option<usize>) -> Result<u8, CliError> {
    let p = &r.process;
    let rs = p.resolution();
    let unet_levels = unet_levels.unwrap_or(rs.levels().len());
    let r_max = rs.r_max();
    let full = plan_route(r_max, r_max, unet_levels, r_max)
        .map_err(|e| UsageError(anyhow!(e.to_string())))?;

    let mut rows = Vec::with_capacity(rs.t_max() + 1);
    let mut flexi_total: u64 = 0;
    for t in 1..=rs.t_max() {
        let plan = plan_route(rs.resolution(t), rs.resolution(t - 1), unet_levels, r_max)
            .map_err(|e| UsageError(anyhow!(e.to_string())))?;
        flexi_total += plan.mac_estimate;
        rows.push(vec![
            t.to_string(),
            rs.resolution(t).to_string(),
            rs.resolution(t - 1).to_string(),
            plan.mac_estimate.to_string(),
            full.mac_estimate.to_string(),
        ]);
    }
    let full_total = full.mac_estimate * rs.t_max() as u64;
    rows.push(vec![
        "total".to_string(),
        String::new(),
        String::new(),
        flexi_total.to_string(),
        full_total.to_string(),
    ]);
    print_csv(&["t", "r_in", "r_out", "flexi_macs", "full_macs"], &rows);
    eprintln!(
        "flexi/full = {:.4} ({} levels, {}-level unet, {} schedule gamma={})",
        flexi_total as f64 / full_total as f64,
        rs.levels().len(),
        unet_levels,
        r.kind,
        r.gamma,
    );
    let total_check = chain_mac_total(rs, unet_levels).map_err(|e| anyhow!(e.to_string()))?;
    debug_assert_eq!(total_check, flexi_total);
    Ok(0)
}

fn run_backtrack(r: &Resolved, step: usize, c_spec: &str) -> Result<u8, CliError> {
    let ns = r.process.noise();
    let cs: Vec<f64> = usage(
        c_spec
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .with_context(|| format!("bad c value '{s}'"))
            })
            .collect::<anyhow::Result<Vec<f64>>>(),
    )?;
    let mut rows = Vec::with_capacity(cs.len());
    for c in cs {
        let (s, achieved) =
            analysis::backtrack_timestep(ns, step, c).map_err(|e| anyhow!(e.to_string()))?;
        rows.push(vec![
            format!("{c}"),
            s.to_string(),
            format!("{achieved:.12e}"),
        ]);
    }
    print_csv(&["c", "s", "achieved_c"], &rows);
    Ok(0)
}

fn run(command: Command, cfg: &RunConfig) -> Result<u8, CliError> {
    match command {
        Command::Verify { seed } => run_verify(seed.or(cfg.seed).unwrap_or(7)),
        Command::Schedule { sched } => {
            let r = resolve_process(&sched, cfg)?;
            run_schedule(&r)
        }
        Command::InfoCurves {
            sched,
            points,
            out_dir,
        } => {
            let r = resolve_process(&sched, cfg)?;
            let out = out_dir
                .or_else(|| cfg.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from("."));
            run_info_curves(&r, points, &out)
        }
        Command::PsdCheck { sched } => {
            let r = resolve_process(&sched, cfg)?;
            run_psd_check(&r)
        }
        Command::TrainToy {
            sched,
            iters,
            batch,
            hidden,
            lr,
            weight_decay,
            seed,
            data,
            out_dir,
        } => {
            let r = resolve_process(&sched, cfg)?;
            run_train_toy(
                &r,
                cfg,
                iters,
                batch,
                hidden,
                lr,
                weight_decay,
                seed,
                data,
                out_dir,
            )
        }
        Command::Sample {
            sched,
            checkpoint,
            oracle,
            n,
            seed,
            mode,
            record,
            stride,
            out_dir,
        } => {
            let denoiser = build_denoiser(&checkpoint, &oracle)?;
            let r = resolve_process_with_channels(&sched, cfg, denoiser.channels())?;
            run_sample(&r, cfg, denoiser, n, seed, mode, record, stride, out_dir)
        }
        Command::Flops { sched, unet_levels } => {
            let r = resolve_process(&sched, cfg)?;
            run_flops(&r, unet_levels)
        }
        Command::Backtrack { sched, step, c } => {
            let r = resolve_process(&sched, cfg)?;
            run_backtrack(&r, step, &c)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
        },
        None => RunConfig::default(),
    };
    match run(cli.command, &cfg) {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
