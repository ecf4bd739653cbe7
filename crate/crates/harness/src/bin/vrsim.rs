use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vrsim_core::defense::{spectral_detect, DetectorConfig};
use vrsim_core::fusion::{select_bypass_frequencies, FusionConfig};
use vrsim_core::series::{Channel, SampleSeries};
use vrsim_harness::cases::CaseMetrics;
use vrsim_harness::error::{HarnessError, Result};
use vrsim_harness::export::ManifestEntry;
use vrsim_harness::{export, load_config, run_scenario, write_manifest, RunReport};

/// Sensor-injection attack simulator for VR-class devices.
#[derive(Parser)]
#[command(name = "vrsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenario configs and export deterministic results.
    Simulate(SimulateArgs),
    /// Enumerate fusion-bypass carrier frequencies for a band.
    DesignSignal(DesignSignalArgs),
    /// Scan a `t,value` CSV stream for narrowband injections.
    Detect(DetectArgs),
    /// Pretty-print a report.json.
    Report(ReportArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario config path; repeat for a batch.
    #[arg(long = "config")]
    configs: Vec<PathBuf>,
    /// Parallel scenario workers.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output root; overrides out_dir from the configs.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DesignSignalArgs {
    /// Susceptible band as LO:HI in hertz.
    #[arg(long)]
    band: String,
    #[arg(long = "imu-rate", default_value_t = 500.0)]
    imu_rate: f64,
    #[arg(long = "cam-rate", default_value_t = 30.0)]
    cam_rate: f64,
    #[arg(long = "n-max", default_value_t = 16)]
    n_max: u64,
}

#[derive(Args)]
struct DetectArgs {
    /// Input series CSV with a `t,value` header.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 512)]
    window: usize,
    #[arg(long = "snr-db", default_value_t = 10.0)]
    snr_db: f64,
    /// DC exclusion half-width, Hz.
    #[arg(long, default_value_t = 2.0)]
    exclusion: f64,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    input: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::DesignSignal(args) => design_signal(args),
        Command::Detect(args) => detect(args),
        Command::Report(args) => report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vrsim: {e}");
            e.exit_code()
        }
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let out_root = args.out.clone().unwrap_or_else(|| PathBuf::from("out"));

    // load and validate everything before running anything
    let mut scenarios = Vec::new();
    for (index, path) in args.configs.iter().enumerate() {
        let cfg = load_config(path)?;
        let effective_seed = cfg.seed ^ index as u64;
        scenarios.push((index, cfg, effective_seed));
    }

    let jobs = args.jobs.max(1);
    let mut slots: Vec<Option<Result<ManifestEntry>>> =
        (0..scenarios.len()).map(|_| None).collect();

    std::thread::scope(|scope| {
        for chunk in scenarios.chunks(jobs) {
            let mut handles = Vec::new();
            for (index, cfg, effective_seed) in chunk {
                let out_root = out_root.clone();
                handles.push((
                    *index,
                    scope.spawn(move || -> Result<ManifestEntry> {
                        let run = run_scenario(cfg, *effective_seed)?;
                        let dir = cfg
                            .out_dir
                            .clone()
                            .unwrap_or_else(|| out_root.clone())
                            .join(format!("{:02}_{}", index, cfg.scenario_name()));
                        let written = export(&run, &dir)?;
                        println!(
                            "scenario {:02} ({}) -> {}",
                            index,
                            cfg.scenario_name(),
                            dir.display()
                        );
                        Ok(ManifestEntry {
                            name: cfg.scenario_name(),
                            case: cfg.case.name().to_string(),
                            seed: cfg.seed,
                            effective_seed: *effective_seed,
                            report: dir.join("report.json").display().to_string(),
                            files: written
                                .iter()
                                .map(|p| p.display().to_string())
                                .collect(),
                        })
                    }),
                ));
            }
            for (index, h) in handles {
                slots[index] = Some(h.join().unwrap_or_else(|_| {
                    Err(HarnessError::Runtime("scenario worker panicked".into()))
                }));
            }
        }
    });

    let mut entries = Vec::new();
    for slot in slots {
        entries.push(slot.expect("all slots filled")?);
    }
    let manifest = write_manifest(&out_root, entries)?;
    println!("manifest -> {}", manifest.display());
    Ok(())
}

fn design_signal(args: DesignSignalArgs) -> Result<()> {
    let (lo, hi) = args
        .band
        .split_once(':')
        .and_then(|(a, b)| Some((a.parse::<f64>().ok()?, b.parse::<f64>().ok()?)))
        .ok_or_else(|| {
            HarnessError::Validation(format!("band: expected LO:HI, got `{}`", args.band))
        })?;
    if hi < lo {
        return Err(HarnessError::Validation(format!(
            "band: empty range {lo}:{hi}"
        )));
    }
    let cfg = FusionConfig {
        f_imu_hz: args.imu_rate,
        f_cam_hz: args.cam_rate,
        ..FusionConfig::default()
    };
    cfg.validate()
        .map_err(|e| HarnessError::Validation(e.to_string()))?;
    for hit in select_bypass_frequencies(lo, hi, &cfg, args.n_max) {
        println!(
            r#"{{"f_a":{},"m":{},"n":{},"observed_hz":{}}}"#,
            hit.f_a,
            hit.m,
            hit.n,
            hit.observed_hz(&cfg)
        );
    }
    Ok(())
}

fn detect(args: DetectArgs) -> Result<()> {
    let file = std::fs::File::open(&args.input)?;
    let series = SampleSeries::read_csv(BufReader::new(file), Channel::GyroZ)
        .map_err(|e| HarnessError::Validation(format!("{}: {e}", args.input.display())))?;
    let cfg = DetectorConfig {
        window: args.window,
        snr_threshold_db: args.snr_db,
        exclusion_band_hz: args.exclusion,
        ..DetectorConfig::default()
    };
    cfg.validate()
        .map_err(|e| HarnessError::Validation(e.to_string()))?;
    let alarms = spectral_detect(&series, &cfg)?;
    for a in &alarms {
        println!("{}", a.to_json_line());
    }
    eprintln!(
        "{} window(s) alarmed over {:.1} s of data",
        alarms.len(),
        series.len() as f64 * series.dt
    );
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.input)?;
    let report: RunReport = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Validation(format!("{}: {e}", args.input.display())))?;

    println!("case:      {}", report.scenario.case.name());
    println!("seed:      {}", report.scenario.seed);
    println!("outcome:   {:?}", report.outcome);
    match &report.metrics {
        CaseMetrics::Trajectory(m) => {
            println!("alias:     n={} f_o={:.3} Hz", m.alias_n, m.alias_f_o_hz);
            println!("theta/T:   {:.6e} rad per {}-window run", m.theta_per_window_rad, m.attack_windows);
            println!("errors:    MAE {:.4} m, RMSE {:.4} m", m.errors.mae_m, m.errors.rmse_m);
            println!(
                "walk:      gain {:.2}, overshoot {:.4} m (study mean {:.3} +/- {:.2} m)",
                m.locomotion_gain, m.overshoot_m, m.reference_overshoot_m, m.reference_band_m
            );
            println!(
                "stealth:   v_a {:.2} m/s detectable: {}",
                m.attack_speed_mps, m.speed_attack_detectable
            );
        }
        CaseMetrics::Avatar(m) => {
            println!("bypass:    {} candidate(s)", m.candidates.len());
            if let Some(sel) = m.selected {
                println!("selected:  f_a={} Hz (m={}, n={})", sel.f_a, sel.m, sel.n);
                println!(
                    "bias:      aligned {:.4e} rad vs control {:.4e} rad (x{:.1})",
                    m.final_bias_rad.unwrap_or(0.0),
                    m.control_bias_rad.unwrap_or(0.0),
                    m.bias_ratio.unwrap_or(0.0)
                );
                println!(
                    "offset:    {:.4} m detectable: {}",
                    m.hand_offset_m.unwrap_or(0.0),
                    m.hand_offset_detectable.unwrap_or(false)
                );
            }
        }
        CaseMetrics::Dizziness(m) => {
            println!(
                "ipd:       peak bias {:.2} mm, jitter {:.2} Hz (target {:.2} Hz)",
                m.ipd_peak_bias_mm, m.jitter_dominant_hz, m.expected_jitter_hz
            );
            println!(
                "scores:    still {:.3} < gameplay {:.3} < attack {:.3}: {}",
                m.score_stationary, m.score_gameplay, m.score_attack, m.ordering_holds
            );
            println!("alarms:    {}", m.narrowband_alarms);
        }
    }
    println!("artifacts:");
    for a in &report.artifacts {
        println!("  {} ({} rows)", a.name, a.rows);
    }
    Ok(())
}
