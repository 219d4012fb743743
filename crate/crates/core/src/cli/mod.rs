//! Batch front-end: `tbq <subcommand> --config <path> --out <dir> [--seed N] [--plot]`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime error. Outputs
//! are staged in a hidden directory under `--out` and moved into place only
//! when the whole run succeeds.

pub mod config;
pub mod plot;

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::report::{
    kv, write_density_csv, write_fringe_csv, write_jti_csv, write_key_value_csv, write_rows,
};
use crate::analysis::{chsh_run, fit_fringe, fringe_scan, jti, phase_grid, CHSH_THETA_A, CHSH_THETA_B};
use crate::error::{Error, Result};
use crate::qkd::{
    compare_bounds, default_block_grid, default_window_grid, run_qkd, skr_vs_loss_sweep,
    BoundsRow, Protocol, BOUNDS_HEADER, SWEEP_HEADER,
};
use crate::quantum::{entanglement_metrics, DensityMatrix};
use crate::sim::{derive_seed, joint_period, run_simulation, BasisPolicy, ExperimentPlan, PrbsGenerator, Side};
use crate::tomography::{
    exact_counts, mle_reconstruct_with, poisson_counts, simulate_tomography, MeasurementBasis,
    TomographyData, TomographySetting,
};
use config::{
    parse, require_fixed, require_policy, BoundsConfig, ChshConfig, FringeConfig, QkdConfig,
    SweepConfig, SyntheticNoise, TomoConfig,
};
use plot::{line_chart, Series};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tbq", version, about = "Time-bin entanglement receiver simulator and analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Two-photon interference fringe and its visibility fit.
    Fringe(RunArgs),
    /// CHSH S-parameter from four analyzer settings.
    Chsh(RunArgs),
    /// Nine-setting tomography and maximum-likelihood reconstruction.
    Tomo(RunArgs),
    /// BBM92 with passive basis selection.
    QkdPassive(RunArgs),
    /// BBM92 with active PRBS basis selection.
    QkdActive(RunArgs),
    /// Secret-key rate against added channel loss.
    SweepLoss(RunArgs),
    /// Serfling against Chernoff finite-key bounds over block sizes.
    BoundsCompare(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write SVG plots.
    #[arg(long)]
    pub plot: bool,
    /// Progress messages on stderr.
    #[arg(short, long)]
    pub verbose: bool,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fringe(_) => "fringe",
            Command::Chsh(_) => "chsh",
            Command::Tomo(_) => "tomo",
            Command::QkdPassive(_) => "qkd-passive",
            Command::QkdActive(_) => "qkd-active",
            Command::SweepLoss(_) => "sweep-loss",
            Command::BoundsCompare(_) => "bounds-compare",
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Fringe(a)
            | Command::Chsh(a)
            | Command::Tomo(a)
            | Command::QkdPassive(a)
            | Command::QkdActive(a)
            | Command::SweepLoss(a)
            | Command::BoundsCompare(a) => a,
        }
    }
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn main_from_env() -> i32 {
    match Cli::try_parse() {
        Ok(cli) => execute(&cli.command),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

/// Runs one subcommand and reports errors on stderr.
pub fn execute(command: &Command) -> i32 {
    match run(command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("tbq {}: {e}", command.name());
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

/// Files of one run, written to a staging directory first.
struct Outputs {
    staging: PathBuf,
    files: Vec<String>,
    plot: bool,
}

impl Outputs {
    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.staging.join(name)
    }

    fn svg(&mut self, name: &str, svg: impl FnOnce() -> String) -> Result<()> {
        if self.plot {
            let path = self.path(name);
            fs::write(path, svg())?;
        }
        Ok(())
    }
}

/// Headline values plus the record needed to reproduce the run.
struct RunRecord {
    seed: Option<u64>,
    resolved: String,
    summary: Vec<(&'static str, String)>,
}

fn run(command: &Command) -> Result<()> {
    let args = command.args();
    let bytes = fs::read(&args.config)
        .map_err(|e| Error::Config(format!("{}: {e}", args.config.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Error::Config(format!("{}: not UTF-8", args.config.display())))?;
    let origin = args.config.display().to_string();
    let job = prepare(command, &text, &origin, args.seed)?;

    let existed = args.out.exists();
    fs::create_dir_all(&args.out)
        .map_err(|e| Error::Config(format!("{}: {e}", args.out.display())))?;
    let staging = args.out.join(format!(".tbq-partial-{}", std::process::id()));
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir(&staging)?;
    let mut out = Outputs {
        staging: staging.clone(),
        files: Vec::new(),
        plot: args.plot,
    };
    let result = job(&mut out, args.verbose).and_then(|record| {
        write_key_value_csv(out.path("summary.csv"), &record.summary)?;
        let meta = meta_text(command, args, &bytes, &record);
        fs::write(out.path("meta.txt"), meta)?;
        for name in &out.files {
            fs::rename(staging.join(name), args.out.join(name))?;
        }
        Ok(())
    });
    let _ = fs::remove_dir_all(&staging);
    if result.is_err() && !existed {
        let _ = fs::remove_dir(&args.out);
    }
    result
}

fn meta_text(command: &Command, args: &RunArgs, config: &[u8], record: &RunRecord) -> String {
    let hash: String = Sha256::digest(config).iter().map(|b| format!("{b:02x}")).collect();
    let seed = record.seed.map_or("none".to_string(), |s| s.to_string());
    let reproduce = match record.seed {
        Some(s) => format!(
            "tbq {} --config {} --out <dir> --seed {s}",
            command.name(),
            args.config.display()
        ),
        None => format!("tbq {} --config {} --out <dir>", command.name(), args.config.display()),
    };
    format!(
        "command: {}\nversion: {}\nseed: {seed}\nconfig_file: {}\nconfig_sha256: {hash}\nresolved_config: {}\nreproduce: {reproduce}\n",
        command.name(),
        env!("CARGO_PKG_VERSION"),
        args.config.display(),
        record.resolved,
    )
}

type Job = Box<dyn FnOnce(&mut Outputs, bool) -> Result<RunRecord>>;

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("configs serialize")
}

/// Parses and validates the configuration; every failure here is a
/// configuration error.
fn prepare(command: &Command, text: &str, origin: &str, seed: Option<u64>) -> Result<Job> {
    let to_config = |e: Error| match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    };
    Ok(match command {
        Command::Fringe(_) => {
            let cfg: FringeConfig = parse(text, origin)?;
            let plan = cfg.source.resolve(seed)?;
            require_fixed(&plan, "fringe")?;
            if cfg.points < 5 {
                return Err(Error::Config("`points` must be at least 5".into()));
            }
            Box::new(move |out, verbose| cmd_fringe(&cfg, plan, out, verbose))
        }
        Command::Chsh(_) => {
            let cfg: ChshConfig = parse(text, origin)?;
            let plan = cfg.source.resolve(seed)?;
            require_fixed(&plan, "chsh")?;
            Box::new(move |out, verbose| cmd_chsh(&cfg, plan, out, verbose))
        }
        Command::Tomo(_) => {
            let mut cfg: TomoConfig = parse(text, origin)?;
            let plan = match (&cfg.source, &mut cfg.synthetic) {
                (Some(src), None) => {
                    let plan = src.resolve(seed)?;
                    require_fixed(&plan, "tomo")?;
                    Some(plan)
                }
                (None, Some(syn)) => {
                    if let Some(s) = seed {
                        syn.seed = s;
                    }
                    DensityMatrix::werner(syn.werner_p).map_err(to_config)?;
                    if !(syn.counts_per_setting > 0.0) {
                        return Err(Error::Config("`counts_per_setting` must be positive".into()));
                    }
                    None
                }
                _ => return Err(Error::Config("give exactly one of `source` or `synthetic`".into())),
            };
            Box::new(move |out, verbose| cmd_tomo(&cfg, plan, out, verbose))
        }
        Command::QkdPassive(_) | Command::QkdActive(_) => {
            let cfg: QkdConfig = parse(text, origin)?;
            let plan = cfg.source.resolve(seed)?;
            require_policy(&plan, matches!(command, Command::QkdPassive(_)))?;
            cfg.security.validate().map_err(to_config)?;
            Box::new(move |out, verbose| cmd_qkd(&cfg, plan, out, verbose))
        }
        Command::SweepLoss(_) => {
            let cfg: SweepConfig = parse(text, origin)?;
            let plan = cfg.source.resolve(seed)?;
            if plan.basis_policy == BasisPolicy::FixedPhase {
                return Err(Error::Config("sweep-loss needs a passive or active plan".into()));
            }
            if cfg.losses_db.is_empty() || cfg.losses_db.iter().any(|l| !(*l >= 0.0)) {
                return Err(Error::Config("`losses_db` must be non-empty and non-negative".into()));
            }
            cfg.security.validate().map_err(to_config)?;
            Box::new(move |out, verbose| cmd_sweep(&cfg, plan, out, verbose))
        }
        Command::BoundsCompare(_) => {
            let cfg: BoundsConfig = parse(text, origin)?;
            cfg.security.validate().map_err(to_config)?;
            // validates error rates and ratio
            compare_bounds(cfg.q_key, cfg.q_test, cfg.test_to_key_ratio, &[1000], &cfg.security)
                .map_err(to_config)?;
            Box::new(move |out, _| cmd_bounds(&cfg, out))
        }
    })
}

fn say(verbose: bool, msg: impl AsRef<str>) {
    if verbose {
        eprintln!("{}", msg.as_ref());
    }
}

fn plan_record(plan: &ExperimentPlan, cfg: String, summary: Vec<(&'static str, String)>) -> RunRecord {
    RunRecord {
        seed: Some(plan.seed),
        resolved: format!("{cfg} plan={}", json(plan)),
        summary,
    }
}

fn cmd_fringe(cfg: &FringeConfig, plan: ExperimentPlan, out: &mut Outputs, verbose: bool) -> Result<RunRecord> {
    say(verbose, format!("fringe: {} points", cfg.points));
    let thetas = phase_grid(cfg.points);
    let rows = fringe_scan(&plan, &thetas, cfg.scanned, cfg.window_ps)?;
    write_fringe_csv(out.path("fringe.csv"), &rows)?;
    let fixed = match cfg.scanned {
        Side::A => plan.receiver_b.theta_tps,
        Side::B => plan.receiver_a.theta_tps,
    };
    let same: Vec<(f64, f64)> = rows.iter().map(|r| (r.theta + fixed, r.counts[0] as f64)).collect();
    let fit = fit_fringe(&same)?;
    let report = vec![
        kv("amplitude", fit.amplitude),
        kv("sigma_amplitude", fit.amplitude_err),
        kv("offset", fit.offset),
        kv("sigma_offset", fit.offset_err),
        kv("phase", fit.phase),
        kv("sigma_phase", fit.phase_err),
        kv("visibility", fit.visibility),
        kv("sigma_visibility", fit.sigma_visibility),
    ];
    write_key_value_csv(out.path("fit.csv"), &report)?;
    out.svg("fringe.svg", || {
        let labels = ["A0B0", "A0B1", "A1B0", "A1B1"];
        let series: Vec<Series> = labels
            .iter()
            .enumerate()
            .map(|(k, label)| Series {
                label,
                points: rows.iter().map(|r| (r.theta, r.counts[k] as f64)).collect(),
            })
            .collect();
        line_chart("Two-photon interference", "phase (rad)", "coincidences", &series, false)
    })?;
    let total: u64 = rows.iter().map(|r| r.counts.iter().sum::<u64>()).sum();
    let summary = vec![
        kv("visibility", fit.visibility),
        kv("sigma_visibility", fit.sigma_visibility),
        kv("sigmas_above_classical", fit.sigmas_above_classical()),
        kv("points", rows.len()),
        kv("total_coincidences", total),
    ];
    Ok(plan_record(&plan, json(cfg), summary))
}

fn cmd_chsh(cfg: &ChshConfig, plan: ExperimentPlan, out: &mut Outputs, verbose: bool) -> Result<RunRecord> {
    say(verbose, "chsh: four settings");
    let (r, counts) = chsh_run(&plan, cfg.window_ps)?;
    let mut rows = Vec::new();
    let mut k = 0;
    for ta in CHSH_THETA_A {
        for tb in CHSH_THETA_B {
            let c = counts[k];
            rows.push(vec![
                ta.to_string(),
                tb.to_string(),
                c[0][0].to_string(),
                c[0][1].to_string(),
                c[1][0].to_string(),
                c[1][1].to_string(),
                r.correlators[k].to_string(),
            ]);
            k += 1;
        }
    }
    write_rows(
        out.path("chsh.csv"),
        "theta_a,theta_b,counts_A0B0,counts_A0B1,counts_A1B0,counts_A1B1,correlator",
        &rows,
    )?;
    let summary = vec![
        kv("s", r.s),
        kv("sigma_s", r.sigma_s),
        kv("sigmas_above_classical", (r.s - 2.0) / r.sigma_s),
    ];
    Ok(plan_record(&plan, json(cfg), summary))
}

fn cmd_tomo(cfg: &TomoConfig, plan: Option<ExperimentPlan>, out: &mut Outputs, verbose: bool) -> Result<RunRecord> {
    let (data, seed) = match (&plan, &cfg.synthetic) {
        (Some(plan), _) => {
            say(verbose, "tomo: simulating nine settings");
            (simulate_tomography(plan)?, plan.seed)
        }
        (None, Some(syn)) => {
            let truth = DensityMatrix::werner(syn.werner_p)?;
            let data = match syn.noise {
                SyntheticNoise::Exact => exact_counts(&truth, syn.counts_per_setting)?,
                SyntheticNoise::Poisson => {
                    let mut rng = ChaCha8Rng::seed_from_u64(syn.seed);
                    poisson_counts(&truth, syn.counts_per_setting, &mut rng)?
                }
            };
            (data, syn.seed)
        }
        (None, None) => unreachable!("checked in prepare"),
    };
    write_tomography_counts(out.path("tomography_counts.csv"), &data)?;
    say(verbose, "tomo: maximum-likelihood reconstruction");
    let mle = mle_reconstruct_with(&data, &cfg.mle)?;
    write_density_csv(out.path("density.csv"), &mle.rho)?;
    let m = entanglement_metrics(&mle.rho)?;
    let metrics = vec![
        kv("purity", m.purity),
        kv("fidelity", m.fidelity_to_phi_plus),
        kv("concurrence", m.concurrence),
        kv("entanglement_of_formation", m.entanglement_of_formation),
        kv("entropy_a", m.entropy_a),
        kv("entropy_b", m.entropy_b),
    ];
    write_key_value_csv(out.path("metrics.csv"), &metrics)?;
    if let Some(plan) = &plan {
        // the Z⊗Z setting with the seed it had in the tomography run
        let mut zz = plan.clone();
        zz.receiver_a = MeasurementBasis::Z.configure(&plan.receiver_a);
        zz.receiver_b = MeasurementBasis::Z.configure(&plan.receiver_b);
        zz.seed = derive_seed(plan.seed, 8);
        let streams = run_simulation(&zz)?.streams;
        let t = plan.pump.bin_separation_ps.round() as i64;
        let edges = [-t / 2, t / 2, 3 * t / 2, 5 * t / 2];
        let map = jti(
            &streams.side(Side::A),
            &streams.side(Side::B),
            plan.clock_period_ps().round() as i64,
            &edges,
            cfg.window_ps,
        )?;
        write_jti_csv(out.path("jti.csv"), &map)?;
    }
    let mut summary = metrics;
    summary.push(kv("mle_iterations", mle.iterations));
    summary.push(kv("log_likelihood", mle.log_likelihood));
    summary.push(kv("total_counts", data.total()));
    let resolved = match &plan {
        Some(p) => format!("{} plan={}", json(cfg), json(p)),
        None => json(cfg),
    };
    Ok(RunRecord {
        seed: Some(seed),
        resolved,
        summary,
    })
}

fn write_tomography_counts(path: PathBuf, data: &TomographyData) -> Result<()> {
    let rows: Vec<Vec<String>> = TomographySetting::all()
        .iter()
        .zip(&data.counts)
        .map(|(s, c)| {
            std::iter::once(s.label())
                .chain(c.iter().map(|v| v.to_string()))
                .collect()
        })
        .collect();
    write_rows(path, "setting,counts_00,counts_01,counts_10,counts_11", &rows)
}

fn cmd_qkd(cfg: &QkdConfig, plan: ExperimentPlan, out: &mut Outputs, verbose: bool) -> Result<RunRecord> {
    say(verbose, format!("qkd: {} s of acquisition", plan.duration_s));
    let run = run_qkd(&plan, &cfg.security, None)?;
    let r = &run.report;
    let b = &run.block;
    let saturated: Vec<&str> = run.stats.saturated.iter().map(|c| c.name()).collect();
    let mut summary = vec![
        kv(
            "protocol",
            match run.protocol {
                Protocol::Passive => "passive",
                Protocol::Active => "active",
            },
        ),
        kv("sifting_factor", run.sifting_factor),
        kv("qber_key", r.qber_key),
        kv("qber_test", r.qber_test),
        kv("skr_asymptotic", r.skr_asymptotic),
        kv("skr_serfling", r.skr_serfling),
        kv("skr_chernoff", r.skr_chernoff),
        kv("block_size", r.block_size),
    ];
    if let Some(w) = run.window {
        summary.push(kv("z_half_window_ps", w.half_width_ps));
    }
    if let BasisPolicy::ActivePrbs { order_a, order_b, register_a, register_b } = plan.basis_policy {
        let pa = PrbsGenerator::new(order_a, register_a)?.period();
        let pb = PrbsGenerator::new(order_b, register_b)?.period();
        summary.push(kv("prbs_period_a", pa));
        summary.push(kv("prbs_period_b", pb));
        summary.push(kv("joint_basis_period", joint_period(pa, pb)));
    }
    let mut report = summary.clone();
    report.extend([
        kv("duration_s", plan.duration_s),
        kv("key_basis", format!("{:?}", b.key_basis)),
        kv("test_basis", format!("{:?}", b.test_basis)),
        kv("n_key", b.n_key),
        kv("e_key", b.e_key),
        kv("n_test", b.n_test),
        kv("e_test", b.e_test),
        kv("sifted_key_rate_hz", r.sifted_key_rate_hz),
        kv("key_length_serfling", r.key_length_serfling.bits),
        kv("key_length_chernoff", r.key_length_chernoff.bits),
        kv("phase_bound_serfling", r.key_length_serfling.phase_error_bound),
        kv("phase_bound_chernoff", r.key_length_chernoff.phase_error_bound),
        kv("aborted_serfling", r.key_length_serfling.aborted),
        kv("aborted_chernoff", r.key_length_chernoff.aborted),
        kv("coincident_rounds", run.counters.coincident_rounds),
        kv("double_clicks", run.counters.double_clicks),
        kv("basis_mismatch", run.counters.basis_mismatch),
        kv("saturated_detectors", saturated.join(" ")),
    ]);
    write_key_value_csv(out.path("qkd_report.csv"), &report)?;
    if run.protocol == Protocol::Passive {
        let rows: Vec<Vec<String>> = default_window_grid()
            .into_iter()
            .map(|w| {
                let [n, e] = run.tally.z_counts(w);
                let q = if n > 0 { e as f64 / n as f64 } else { 0.0 };
                vec![w.to_string(), n.to_string(), e.to_string(), q.to_string()]
            })
            .collect();
        write_rows(out.path("z_window_scan.csv"), "half_width_ps,n_key,errors,qber", &rows)?;
    }
    Ok(plan_record(&plan, json(cfg), summary))
}

fn cmd_sweep(cfg: &SweepConfig, plan: ExperimentPlan, out: &mut Outputs, verbose: bool) -> Result<RunRecord> {
    say(verbose, format!("sweep-loss: {} points", cfg.losses_db.len()));
    let points = skr_vs_loss_sweep(&plan, &cfg.losses_db, &cfg.security)?;
    let rows: Vec<Vec<String>> = points.iter().map(|p| p.csv_row()).collect();
    write_rows(out.path("sweep.csv"), SWEEP_HEADER, &rows)?;
    out.svg("sweep.svg", || {
        let series = vec![
            Series {
                label: "asymptotic",
                points: points.iter().map(|p| (p.loss_db, p.skr_asym)).collect(),
            },
            Series {
                label: "Chernoff",
                points: points.iter().map(|p| (p.loss_db, p.skr_chernoff)).collect(),
            },
            Series {
                label: "Serfling",
                points: points.iter().map(|p| (p.loss_db, p.skr_serfling)).collect(),
            },
        ];
        line_chart("Secret-key rate against added loss", "added loss (dB)", "bit/s", &series, true)
    })?;
    let last_positive = |f: fn(&crate::qkd::SweepPoint) -> f64| {
        points
            .iter()
            .filter(|p| f(p) > 0.0)
            .map(|p| p.loss_db)
            .fold(f64::NAN, f64::max)
    };
    let summary = vec![
        kv("points", points.len()),
        kv("max_loss_positive_asymptotic_db", last_positive(|p| p.skr_asym)),
        kv("max_loss_positive_chernoff_db", last_positive(|p| p.skr_chernoff)),
        kv("max_loss_positive_serfling_db", last_positive(|p| p.skr_serfling)),
        kv("baseline_skr_asymptotic", points[0].skr_asym),
        kv("baseline_qber_key", points[0].qber_key),
        kv("baseline_qber_test", points[0].qber_test),
    ];
    Ok(plan_record(&plan, json(cfg), summary))
}

fn cmd_bounds(cfg: &BoundsConfig, out: &mut Outputs) -> Result<RunRecord> {
    let blocks = cfg.blocks.clone().unwrap_or_else(default_block_grid);
    let rows = compare_bounds(cfg.q_key, cfg.q_test, cfg.test_to_key_ratio, &blocks, &cfg.security)?;
    let body: Vec<Vec<String>> = rows.iter().map(BoundsRow::csv_row).collect();
    write_rows(out.path("bounds.csv"), BOUNDS_HEADER, &body)?;
    out.svg("bounds.svg", || {
        let series = vec![
            Series {
                label: "asymptotic",
                points: rows.iter().map(|r| ((r.block_size as f64).log10(), r.key_asymptotic)).collect(),
            },
            Series {
                label: "Chernoff",
                points: rows.iter().map(|r| ((r.block_size as f64).log10(), r.key_chernoff as f64)).collect(),
            },
            Series {
                label: "Serfling",
                points: rows.iter().map(|r| ((r.block_size as f64).log10(), r.key_serfling as f64)).collect(),
            },
        ];
        line_chart("Finite-key length", "log10 block size", "key bits", &series, true)
    })?;
    let ordered = rows.iter().all(|r| r.key_chernoff >= r.key_serfling);
    let below = rows.iter().all(|r| r.key_chernoff as f64 <= r.key_asymptotic);
    let monotone = rows
        .windows(2)
        .all(|w| w[1].key_chernoff >= w[0].key_chernoff && w[1].key_serfling >= w[0].key_serfling);
    let summary = vec![
        kv("blocks", rows.len()),
        kv("chernoff_ge_serfling", ordered),
        kv("asymptotic_ge_chernoff", below),
        kv("monotone_in_block", monotone),
    ];
    Ok(RunRecord {
        seed: None,
        resolved: json(cfg),
        summary,
    })
}
