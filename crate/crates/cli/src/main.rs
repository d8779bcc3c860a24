use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use orthomin_lab::config::{ExperimentConfig, OutputFormat, R0Choice};
use orthomin_lab::error::CliError;
use orthomin_lab::experiments::{
    check_bounds, cmd_conjecture_scan, cmd_ellipse, cmd_moments, cmd_qcheck, cmd_solve,
    cmd_table21, EllipseParams, MomentsMode, MomentsParams, QCheckParams, ScanGrid, ScanKind,
};
use orthomin_lab::report::{format_sig, CsvTable, RunReport, DEFAULT_DIGITS};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "orthomin", version, about = "Orthomin(k) convergence experiments")]
struct Cli {
    /// Significant digits in CSV output.
    #[arg(long, global = true, default_value_t = DEFAULT_DIGITS)]
    digits: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Residual norms and ratios on roots of unity for k = 1,2,3,4,5,7,9,11.
    Table21 {
        #[arg(long, default_value_t = 0.8)]
        rho: f64,
        #[arg(long, default_value_t = 13)]
        d: usize,
        #[arg(long, default_value_t = 14)]
        iters: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
    /// Rates on eigenvalues spread along an ellipse.
    Ellipse {
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Rotation angle in radians (default pi/3).
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_3)]
        theta: f64,
        #[arg(long, default_value_t = 2.0)]
        u_re: f64,
        #[arg(long, default_value_t = 1.0)]
        u_im: f64,
        #[arg(long, default_value_t = 128)]
        d: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3, 4, 5, 10])]
        k: Vec<usize>,
        #[arg(long, default_value_t = 400)]
        iters: usize,
        #[arg(long, default_value_t = 20)]
        window: usize,
        /// Seeded Gaussian b and x0 instead of b = ones, x0 = 0.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
    /// Limits of q_n across a grid of circle or arc spectra.
    Scan {
        #[arg(long, value_enum, default_value_t = ScanKind::Circle)]
        kind: ScanKind,
        #[arg(long, value_delimiter = ',', default_values_t = [2, 3, 5, 8, 13, 21])]
        d: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.3, 0.5, 0.8])]
        rho: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3])]
        k: Vec<usize>,
        /// Arc half-angles in radians (hull scans).
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0])]
        half_angle: Vec<f64>,
        #[arg(long, default_value_t = 600)]
        iters: usize,
        #[arg(long, default_value_t = 20)]
        window: usize,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
    /// Moment dynamics of the Orthomin(1) measure.
    Moments {
        #[arg(long, value_enum, default_value_t = MomentsMode::Finite)]
        mode: MomentsMode,
        /// Decimal or p/q; exact mode requires p/q.
        #[arg(long, default_value = "0.8")]
        rho: String,
        #[arg(long, default_value_t = 13)]
        d: usize,
        /// Highest moment index reported.
        #[arg(long, default_value_t = 4)]
        j: usize,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
    /// q-series identity checks.
    Qcheck {
        #[arg(long, default_value_t = 12)]
        max_n: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also check in exact rational arithmetic.
        #[arg(long)]
        exact: bool,
    },
    /// Run a JSON experiment configuration.
    Solve {
        config: PathBuf,
        /// Overrides the configuration's output path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
    },
}

fn r0_from_seed(seed: Option<u64>) -> R0Choice {
    seed.map_or(R0Choice::Ones, |seed| R0Choice::SeededRandom { seed })
}

fn save<T: Serialize>(
    out: Option<&Path>,
    format: OutputFormat,
    csv: &CsvTable,
    json: &T,
) -> Result<(), CliError> {
    let Some(path) = out else {
        return Ok(());
    };
    match format {
        OutputFormat::Csv => csv.save(path)?,
        OutputFormat::Json => std::fs::write(path, serde_json::to_string_pretty(json)?)?,
    }
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn print_rates(report: &RunReport) {
    if let Some(b) = &report.bounds {
        println!(
            "field-of-values distance {:.6}, bound {:.7}",
            b.fov_distance, b.eisenstat_bound
        );
    }
    for res in &report.results {
        let rate = report
            .rates
            .get(&res.k.to_string())
            .map(|r| format!("{:.7} (spread {:.1e})", r.limit, r.residual_spread))
            .unwrap_or_else(|| "n/a".into());
        println!(
            "k = {:>3}: {:>4} steps, final |r| = {:.3e}, rate {rate}",
            res.k, res.iterations, res.final_residual
        );
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let digits = cli.digits;
    match cli.command {
        Command::Table21 {
            rho,
            d,
            iters,
            out,
            format,
        } => {
            let table = cmd_table21(rho, d, iters)?;
            print!("{}", table.render());
            save(out.as_deref(), format, &table.csv(digits), &table)?;
        }
        Command::Ellipse {
            alpha,
            beta,
            theta,
            u_re,
            u_im,
            d,
            k,
            iters,
            window,
            seed,
            out,
            format,
        } => {
            let params = EllipseParams {
                alpha,
                beta,
                theta,
                u: Complex64::new(u_re, u_im),
                d,
                k_list: k,
                iters,
                window,
                r0: r0_from_seed(seed),
            };
            let report = cmd_ellipse(&params)?;
            print_rates(&report);
            save(out.as_deref(), format, &report.tidy_csv(digits), &report)?;
        }
        Command::Scan {
            kind,
            d,
            rho,
            k,
            half_angle,
            iters,
            window,
            tol,
            out,
            format,
        } => {
            let grid = ScanGrid {
                d_list: d,
                rho_list: rho,
                k_list: k,
                half_angles: half_angle,
                iters,
                window,
                tol,
            };
            let report = cmd_conjecture_scan(kind, &grid)?;
            for r in &report.rows {
                let half = r.half_angle.map(|h| format!(" half_angle={h:.4}")).unwrap_or_default();
                println!(
                    "d={:<3} rho={:<5} k={:<2}{half} limit={} |limit-rho|={:.2e} hull_dist={:.4} {}",
                    r.d,
                    r.rho,
                    r.k,
                    format_sig(r.limit, 8),
                    r.abs_diff,
                    r.hull_distance,
                    r.verdict.label()
                );
            }
            println!(
                "consistent {} / inconsistent {} / excluded {}",
                report.consistent, report.inconsistent, report.excluded
            );
            save(out.as_deref(), format, &report.csv(digits), &report)?;
        }
        Command::Moments {
            mode,
            rho,
            d,
            j,
            steps,
            seed,
            out,
            format,
        } => {
            let params = MomentsParams {
                mode,
                rho,
                d,
                j_max: j,
                steps,
                r0: r0_from_seed(seed),
            };
            let output = cmd_moments(&params, digits)?;
            if mode == MomentsMode::HaarExact {
                for line in &output.lines {
                    println!("{line}");
                }
            } else {
                let mut stdout = std::io::stdout().lock();
                output.table.write_body(&mut stdout)?;
                for line in &output.lines {
                    eprintln!("{line}");
                }
            }
            let json = serde_json::json!({
                "params": params,
                "header": output.table.header,
                "rows": output.table.rows,
            });
            save(out.as_deref(), format, &output.table, &json)?;
            if let Some(err) = output.failure {
                return Err(err);
            }
        }
        Command::Qcheck {
            max_n,
            trials,
            seed,
            exact,
        } => {
            let lines = cmd_qcheck(&QCheckParams {
                max_n,
                trials,
                seed,
                exact,
            })?;
            for line in &lines {
                println!("{}", line.render());
            }
            let failed: Vec<_> = lines.iter().filter(|l| !l.pass).map(|l| l.name.clone()).collect();
            if !failed.is_empty() {
                return Err(CliError::Identity(failed.join(", ")));
            }
        }
        Command::Solve {
            config,
            out,
            format,
        } => {
            let text = std::fs::read_to_string(&config)?;
            let cfg = ExperimentConfig::from_json(&text)?;
            let report = cmd_solve(&cfg)?;
            print_rates(&report);
            let out = out.or_else(|| cfg.output.clone());
            save(out.as_deref(), format.unwrap_or(cfg.format), &report.tidy_csv(digits), &report)?;
            check_bounds(&report)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
