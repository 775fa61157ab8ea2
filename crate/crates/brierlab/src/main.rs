//! Command-line front end: simulate populations, compute decompositions and
//! curves, run the probing reduction, execute the verification suite, and
//! emit CSV + SVG reports.

use brierlab::config::RunConfig;
use brierlab::curves::{brier_curve, exact_curve, uniform_grid};
use brierlab::error::Error;
use brierlab::metrics::{decompose, Prediction};
use brierlab::model::InformationScope;
use brierlab::probing::{probing_bound, ClassifierFamily};
use brierlab::report::{
    curve_csv, curves_svg, decomposition_csv, family_csv, probing_csv, read_family_csv,
    read_predictions_csv, sample_csv, verdict_csv, write_file,
};
use brierlab::sufficiency::{counterexample_harness, curve_dominance};
use brierlab::verify::{format_table, run_checks};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "brierlab",
    version,
    about = "Brier-score decompositions, cost curves, probing reductions and sufficiency diagnostics"
)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

/// Global options; flag values override the config file.
#[derive(Args)]
struct Overrides {
    /// TOML configuration file (defaults used when absent)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// RNG seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Sample size
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Number of grid points for curves
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Numerical tolerance for verification checks
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Comma-separated scopes (full,c1,c2,nb,nbcal,prior)
    #[arg(long, global = true, value_delimiter = ',')]
    scopes: Option<Vec<String>>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a population sample and write it as CSV
    Simulate,
    /// Compute exact loss curves per scope plus a combined SVG figure
    Curves,
    /// Compute a Brier-score decomposition
    Decompose {
        /// External predictions CSV (`z,label[,psi,group_score]`); when
        /// absent, decomposes the simulated model per scope
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Run the probing reduction and report the regret bound
    Probe {
        /// External decision-family CSV (`instance_id,t,decision`)
        #[arg(long, requires = "predictions")]
        family: Option<PathBuf>,
        /// Predictions CSV supplying the per-instance probabilities that go
        /// with --family
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Run the full invariant suite and print a pass/fail table
    Verify {
        /// Additively corrupt the oracle posterior column (fault injection)
        #[arg(long, default_value_t = 0.0)]
        perturb_psi: f64,
    },
    /// Produce the full artifact bundle: sample, curves, decompositions,
    /// probing report and dominance summary
    Report,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_) => 2,
        _ => 1,
    }
}

fn load_config(o: &Overrides) -> Result<RunConfig, Error> {
    let mut cfg = match &o.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    if let Some(n) = o.n {
        cfg.n = n;
    }
    if let Some(grid) = o.grid {
        cfg.grid_points = grid;
    }
    if let Some(tol) = o.tolerance {
        cfg.tolerance = tol;
    }
    if let Some(scopes) = &o.scopes {
        cfg.scopes = scopes.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn scope_predictions(
    sample: &brierlab::model::PopulationSample,
    scope: InformationScope,
) -> Vec<Prediction> {
    let z = sample.psis(scope);
    let psi = sample.psis(InformationScope::Full);
    (0..sample.len())
        .map(|i| Prediction::with_oracle(z[i], sample.labels[i], psi[i], z[i]))
        .collect()
}

fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<(), Error> {
    let sample = cfg.model()?.sample(cfg.n, cfg.seed)?;
    let path = out.join("sample.csv");
    write_file(&path, &sample_csv(&sample))?;
    println!("wrote {} ({} rows)", path.display(), sample.len());
    Ok(())
}

fn cmd_curves(cfg: &RunConfig, out: &Path) -> Result<(), Error> {
    let model = cfg.model()?;
    let grid = uniform_grid(cfg.grid_points);
    let scopes = cfg.scope_list()?;
    let mut curves = Vec::new();
    for &scope in &scopes {
        let curve = exact_curve(&model, scope, &grid)?;
        let path = out.join(format!("curve_{}.csv", scope.label()));
        write_file(&path, &curve_csv(&curve))?;
        println!("wrote {}", path.display());
        curves.push((scope.label(), curve));
    }
    let labelled: Vec<(&str, &brierlab::LossCurve)> =
        curves.iter().map(|(l, c)| (*l, c)).collect();
    let svg_path = out.join("curves.svg");
    write_file(&svg_path, &curves_svg(&labelled))?;
    println!("wrote {}", svg_path.display());
    Ok(())
}

fn cmd_decompose(cfg: &RunConfig, out: &Path, predictions: Option<&Path>) -> Result<(), Error> {
    if let Some(path) = predictions {
        let preds = read_predictions_csv(&std::fs::read_to_string(path)?)?;
        let d = decompose(&preds)?;
        let dest = out.join("decomposition.csv");
        write_file(&dest, &decomposition_csv(&d))?;
        println!("wrote {}", dest.display());
        return Ok(());
    }
    let sample = cfg.model()?.sample(cfg.n, cfg.seed)?;
    for scope in cfg.scope_list()? {
        let d = decompose(&scope_predictions(&sample, scope))?;
        let dest = out.join(format!("decomposition_{}.csv", scope.label()));
        write_file(&dest, &decomposition_csv(&d))?;
        println!("wrote {}", dest.display());
    }
    Ok(())
}

fn cmd_probe(
    cfg: &RunConfig,
    out: &Path,
    family: Option<&Path>,
    predictions: Option<&Path>,
) -> Result<(), Error> {
    let (family, psis) = match (family, predictions) {
        (Some(fpath), Some(ppath)) => {
            let family = read_family_csv(&std::fs::read_to_string(fpath)?)?;
            let preds = read_predictions_csv(&std::fs::read_to_string(ppath)?)?;
            let psis: Vec<f64> = preds
                .iter()
                .map(|p| p.oracle_psi.unwrap_or(p.z))
                .collect();
            (family, psis)
        }
        _ => {
            let sample = cfg.model()?.sample(cfg.n, cfg.seed)?;
            let psis = sample.psis(InformationScope::Full).to_vec();
            let grid_points = cfg.grid_points.min(999);
            let family = ClassifierFamily::from_threshold_scores(&psis, grid_points)?;
            let fam_path = out.join("family.csv");
            write_file(&fam_path, &family_csv(&family))?;
            println!("wrote {}", fam_path.display());
            (family, psis)
        }
    };
    let report = probing_bound(&family, &psis)?;
    let dest = out.join("probing.csv");
    write_file(&dest, &probing_csv(&report))?;
    println!("wrote {}", dest.display());
    println!(
        "calibration loss {:.6e}; combined regret {:.6e}; integrated regret bound {:.6e}",
        report.calibration_loss_lhs, report.combined_regret, report.regret_integral_rhs
    );
    Ok(())
}

fn cmd_verify(cfg: &RunConfig, perturb_psi: f64) -> Result<bool, Error> {
    let results = run_checks(cfg, perturb_psi)?;
    print!("{}", format_table(&results));
    Ok(results.iter().all(|r| r.passed))
}

fn cmd_report(cfg: &RunConfig, out: &Path) -> Result<(), Error> {
    cmd_simulate(cfg, out)?;
    cmd_curves(cfg, out)?;
    cmd_decompose(cfg, out, None)?;
    cmd_probe(cfg, out, None, None)?;

    // dominance summary over empirical curves for the configured scopes
    let model = cfg.model()?;
    let sample = model.sample(cfg.n, cfg.seed)?;
    let grid = uniform_grid(cfg.grid_points);
    let scopes = cfg.scope_list()?;
    let mut summary = String::new();
    for (i, &a) in scopes.iter().enumerate() {
        for &b in &scopes[i + 1..] {
            let ca = brier_curve(&scope_predictions(&sample, a), &grid)?;
            let cb = brier_curve(&scope_predictions(&sample, b), &grid)?;
            let verdict = curve_dominance(&ca, &cb, cfg.tolerance)?;
            let dest = out.join(format!("verdict_{}_{}.csv", a.label(), b.label()));
            write_file(&dest, &verdict_csv(&verdict))?;
            summary.push_str(&format!(
                "{} vs {}: {} (max gap {:.4e} at t={:.4})\n",
                a.label(),
                b.label(),
                verdict.relation.label(),
                verdict.max_gap,
                verdict.argmax_t
            ));
        }
    }
    if model.is_cov_diagonal() {
        let harness = counterexample_harness(&model, cfg.grid_points.max(3), cfg.tolerance)?;
        summary.push_str(&format!(
            "dominance without sufficiency exhibited: {}\n",
            harness.dominance_without_sufficiency
        ));
    }
    let dest = out.join("summary.txt");
    write_file(&dest, &summary)?;
    println!("wrote {}", dest.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<bool, Error> {
    let cfg = load_config(&cli.overrides)?;
    let out = cli.overrides.out.as_path();
    match &cli.command {
        Command::Simulate => cmd_simulate(&cfg, out).map(|()| true),
        Command::Curves => cmd_curves(&cfg, out).map(|()| true),
        Command::Decompose { predictions } => {
            cmd_decompose(&cfg, out, predictions.as_deref()).map(|()| true)
        }
        Command::Probe {
            family,
            predictions,
        } => cmd_probe(&cfg, out, family.as_deref(), predictions.as_deref()).map(|()| true),
        Command::Verify { perturb_psi } => cmd_verify(&cfg, *perturb_psi),
        Command::Report => cmd_report(&cfg, out).map(|()| true),
    }
}

fn init_thread_pool() {
    if let Ok(val) = std::env::var("BRIERLAB_THREADS") {
        if let Ok(threads) = val.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: verification failed");
            ExitCode::from(3)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
