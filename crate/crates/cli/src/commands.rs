use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{header, Staged};
use ionsim_core::compiler::{synthesize, OperatorExpr};
use ionsim_core::interferometer::{fit_fringe, sweep};
use ionsim_core::noise::{allan_scan, sample_interferometer};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub const FRINGE_CSV: &str = "fringe.csv";
pub const FRINGE_FIT: &str = "fringe_fit.txt";
pub const ALLAN_CSV: &str = "allan.csv";
pub const SHOTS_TXT: &str = "shots.txt";
pub const PROGRAM_TXT: &str = "program.txt";
pub const COMPILE_REPORT: &str = "compile_report.txt";

/// Fringe sweep plus fit report.
pub fn fringe(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let icfg = cfg.interferometer()?;
    let grid = cfg.fringe_grid()?;
    let data = sweep(&icfg, &grid, cfg.fringe.shots, cfg.seed)?;
    let head = header(&cfg.digest(b""), cfg.seed);

    let expected = icfg.order as f64 * icfg.delta_omega_z.abs();
    let mut report = head.clone();
    writeln!(report, "order={}", icfg.order).unwrap();
    writeln!(report, "mode={:?}", data.mode).unwrap();
    writeln!(report, "expected_frequency={expected:?}").unwrap();
    match fit_fringe(&data) {
        Ok(fit) => {
            match fit.frequency {
                Some(w) => {
                    writeln!(report, "frequency={w:?}").unwrap();
                    writeln!(report, "relative_frequency_error={:?}", (w - expected).abs() / expected).unwrap();
                }
                None => writeln!(report, "frequency=none").unwrap(),
            }
            writeln!(report, "contrast={:?}", fit.contrast).unwrap();
            writeln!(report, "phase_offset={:?}", fit.phase_offset).unwrap();
            writeln!(report, "residual_norm={:?}", fit.residual_norm).unwrap();
            if let Some([c, w, p]) = fit.std_errors {
                writeln!(report, "std_error_contrast={c:?}").unwrap();
                writeln!(report, "std_error_frequency={w:?}").unwrap();
                writeln!(report, "std_error_phase={p:?}").unwrap();
            }
        }
        Err(e) => writeln!(report, "fit=failed: {e}").unwrap(),
    }

    let mut staged = Staged::new(out)?;
    staged.add(FRINGE_CSV, &format!("{head}{}", data.to_csv()))?;
    staged.add(FRINGE_FIT, &report)?;
    Ok(staged.commit()?)
}

/// Shot record at the operating point and its Allan scan.
pub fn allan(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let icfg = cfg.interferometer()?;
    cfg.allan_checked()?;
    let phi = cfg.operating_point()?;
    let digest = cfg.digest(b"");
    let mut record = sample_interferometer(&icfg, phi, cfg.allan.shots, cfg.seed)?;
    record.config = digest.clone();
    let result = allan_scan(&record, &icfg, &cfg.allan.bin_sizes)?;
    let head = header(&digest, cfg.seed);

    let mut staged = Staged::new(out)?;
    staged.add(ALLAN_CSV, &format!("{head}{}", result.to_csv(true)))?;
    staged.add(SHOTS_TXT, &format!("{head}{}", record.to_text()))?;
    Ok(staged.commit()?)
}

/// Compiles the expression in `expr_path` and verifies the program.
pub fn compile(cfg: &RunConfig, expr_path: &Path, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let text = fs::read_to_string(expr_path).map_err(|source| CliError::Input {
        path: expr_path.to_path_buf(),
        source,
    })?;
    let options = cfg.compile_options()?;
    let target = OperatorExpr::<f64>::parse(&text)?;
    let c = &cfg.compile;
    let (program, report) = synthesize(&target, c.time, c.delta_t, c.depth, &options)?;
    let head = header(&cfg.digest(text.as_bytes()), cfg.seed);

    let mut prog_text = head.clone();
    writeln!(prog_text, "# time={} delta_t={} depth={}", c.time, c.delta_t, c.depth).unwrap();
    prog_text.push_str(&program.to_text());
    let report_text = format!("{head}{report}");

    let mut staged = Staged::new(out)?;
    staged.add(PROGRAM_TXT, &prog_text)?;
    staged.add(COMPILE_REPORT, &report_text)?;
    Ok(staged.commit()?)
}
