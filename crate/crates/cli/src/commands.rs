//! The four subcommands. Each returns a typed failure carrying its exit
//! class: 1 validation failure, 2 usage/config error, 3 I/O error. All
//! output is deterministic for a fixed (config, seed); everything diagnostic
//! goes to stderr so CSV on stdout stays machine-readable.

use crate::config::{CliConfig, Scenario};
use entrec_core::optics::{gaussian_characteristic, reduce, BiphotonState, Spectrum};
use entrec_core::oracle::{characteristic_disagreement, numeric_reduce, QuadratureGrid};
use entrec_core::scenarios::{
    assemble_dephasing, assemble_esd, assemble_partial, assemble_recovery, make_spectrum,
    scenario_a, scenario_esd, scenario_recovery, sweep, ScenarioKind,
};
use entrec_core::states::{concurrence, horodecki_smax, maximize_chsh_linear, DensityMatrix};
use entrec_core::tomo::{mc_error, ProjectionSet, TomoError};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

#[derive(Debug)]
pub enum CmdError {
    /// A requested check did not hold (exit 1).
    Failure(String),
    /// The configuration or arguments cannot be run (exit 2).
    Usage(String),
    /// Output could not be written (exit 3).
    Io(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Failure(_) => 1,
            CmdError::Usage(_) => 2,
            CmdError::Io(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CmdError::Failure(m) | CmdError::Usage(m) | CmdError::Io(m) => m,
        }
    }
}

/// Scenario errors at command level are configuration problems: the physics
/// layer validated a parameter and refused it.
fn usage(e: impl std::fmt::Display) -> CmdError {
    CmdError::Usage(e.to_string())
}

fn bell_fixture() -> DensityMatrix {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    DensityMatrix::from_pure([
        Complex64::new(r, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(r, 0.0),
    ])
}

/// The configured point state: what `chsh` and `tomo` analyze. Success
/// probability is `None` where nothing post-selects.
fn point_state(cfg: &CliConfig) -> Result<(DensityMatrix, Option<f64>), CmdError> {
    let ec = cfg.experiment();
    match cfg.scenario {
        Scenario::Bell => Ok((bell_fixture(), None)),
        Scenario::A => {
            let (rho, _) = scenario_a(&ec, cfg.l1).map_err(usage)?;
            Ok((rho, None))
        }
        Scenario::Recovery => {
            let (rho, _, success) = scenario_recovery(&ec, cfg.l1, cfg.l2).map_err(usage)?;
            Ok((rho, Some(success)))
        }
        Scenario::Esd => {
            let point = scenario_esd(&ec, cfg.la, cfg.l1, cfg.l2).map_err(usage)?;
            Ok((point.rho, Some(point.success_prob)))
        }
    }
}

/// Writes `text` to the configured output path, or stdout when none is set.
fn emit(cfg: &CliConfig, text: &str) -> Result<(), CmdError> {
    let io_err = |path: &Path, e: std::io::Error| {
        CmdError::Io(format!("cannot write {}: {e}", path.display()))
    };
    match &cfg.out {
        Some(path) => {
            let mut f = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
            f.write_all(text.as_bytes()).map_err(|e| io_err(path, e))?;
            f.flush().map_err(|e| io_err(path, e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())
                .and_then(|()| lock.flush())
                .map_err(|e| CmdError::Io(format!("cannot write standard output: {e}")))
        }
    }
}

/// Twelve significant digits, `.` decimal separator, for every CSV number.
fn sig12(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.11e}")
    }
}

pub fn run_sweep(cfg: &CliConfig) -> Result<(), CmdError> {
    let kind = match cfg.scenario {
        Scenario::A => ScenarioKind::Dephasing,
        Scenario::Recovery => ScenarioKind::Recovery,
        Scenario::Esd => ScenarioKind::Esd,
        Scenario::Bell => {
            return Err(CmdError::Usage(
                "scenario bell has no sweep axis; pick a, recovery, or esd".into(),
            ))
        }
    };
    let ec = cfg.experiment();
    let result = sweep(
        &ec,
        kind,
        cfg.l2_start,
        cfg.l2_end,
        cfg.l2_step,
        cfg.with_chsh,
    )
    .map_err(usage)?;

    let mut csv = String::from("L2_lambda0,concurrence,success_prob");
    if cfg.with_chsh {
        csv.push_str(",S_max");
    }
    csv.push('\n');
    for (l2, outcome) in &result.rows {
        match outcome {
            Ok(row) => {
                let _ = write!(
                    csv,
                    "{},{},{}",
                    sig12(*l2),
                    sig12(row.concurrence),
                    sig12(row.success_prob)
                );
                if cfg.with_chsh {
                    let _ = write!(csv, ",{}", sig12(row.s_max.unwrap_or(f64::NAN)));
                }
                csv.push('\n');
            }
            Err(e) => {
                eprintln!("warning: row L2 = {l2} failed: {e}");
                let _ = write!(csv, "{},nan,nan", sig12(*l2));
                if cfg.with_chsh {
                    csv.push_str(",nan");
                }
                csv.push('\n');
            }
        }
    }
    emit(cfg, &csv)
}

fn fmt_complex(z: Complex64) -> String {
    format!("{:+.11e}{:+.11e}i", z.re, z.im)
}

pub fn run_chsh(cfg: &CliConfig) -> Result<(), CmdError> {
    let (rho, success) = point_state(cfg)?;
    let c = concurrence(&rho).map_err(|e| CmdError::Failure(e.to_string()))?;
    let (setting, smax) = maximize_chsh_linear(&rho);
    let bound = horodecki_smax(&rho);

    let mut report = format!(
        "scenario: {} (La = {}, L1 = {}, L2 = {})\n",
        cfg.scenario, cfg.la, cfg.l1, cfg.l2
    );
    report.push_str("rho (HH, HV, VH, VV basis):\n");
    for r in 0..4 {
        report.push_str("  ");
        for col in 0..4 {
            report.push_str(&fmt_complex(rho.entry(r, col)));
            if col < 3 {
                report.push_str("  ");
            }
        }
        report.push('\n');
    }
    let _ = writeln!(report, "concurrence: {}", sig12(c));
    if let Some(p) = success {
        let _ = writeln!(report, "success_prob: {}", sig12(p));
    }
    let _ = writeln!(
        report,
        "optimal linear angles (deg): theta1 = {:.2}, theta1' = {:.2}, theta2 = {:.2}, theta2' = {:.2}",
        setting.theta1(),
        setting.theta1_prime(),
        setting.theta2(),
        setting.theta2_prime()
    );
    let _ = writeln!(report, "S_max (linear polarizers): {}", sig12(smax));
    let _ = writeln!(report, "S upper bound (arbitrary settings): {}", sig12(bound));
    emit(cfg, &report)
}

pub fn run_tomo(cfg: &CliConfig) -> Result<(), CmdError> {
    let (rho, _) = point_state(cfg)?;
    let ps = ProjectionSet::canonical();
    let bars = mc_error(
        &rho,
        &ps,
        cfg.tomo_n,
        cfg.tomo_trials,
        cfg.seed,
        cfg.tomo_jitter_deg,
    )
    .map_err(|e| match e {
        TomoError::InvalidTrials { .. } | TomoError::InvalidProjectionCount { .. } => {
            CmdError::Usage(e.to_string())
        }
        other => CmdError::Failure(other.to_string()),
    })?;

    let mut report = format!(
        "scenario: {} (La = {}, L1 = {}, L2 = {})\n",
        cfg.scenario, cfg.la, cfg.l1, cfg.l2
    );
    let _ = writeln!(
        report,
        "settings: 16 projections, N = {} pairs each, {} trials, jitter = {} deg, seed = {}",
        cfg.tomo_n, cfg.tomo_trials, cfg.tomo_jitter_deg, cfg.seed
    );
    let _ = writeln!(
        report,
        "concurrence: {} +/- {}",
        sig12(bars.concurrence_mean),
        sig12(bars.concurrence_std)
    );
    let _ = writeln!(
        report,
        "S: {} +/- {}",
        sig12(bars.s_mean),
        sig12(bars.s_std)
    );
    emit(cfg, &report)
}

/// One cross-check row of the validation report.
struct Check {
    name: &'static str,
    max_err: f64,
    tol: f64,
}

impl Check {
    fn ok(&self) -> bool {
        self.max_err < self.tol
    }
}

/// Largest entrywise and success-probability gap between the closed-form
/// reduction and the quadrature reduction of the same optical state.
fn reduce_gap(
    s: &BiphotonState,
    sp: &Spectrum,
    grid: &QuadratureGrid,
) -> Result<f64, CmdError> {
    let (rho_c, succ_c) = reduce(s, sp, sp).map_err(|e| CmdError::Failure(e.to_string()))?;
    let (rho_n, succ_n) =
        numeric_reduce(s, sp, sp, grid).map_err(|e| CmdError::Failure(e.to_string()))?;
    let mut gap = (succ_c - succ_n).abs();
    for r in 0..4 {
        for c in 0..4 {
            gap = gap.max((rho_c.entry(r, c) - rho_n.entry(r, c)).norm());
        }
    }
    Ok(gap)
}

/// Runs the closed-form-vs-quadrature suite: the characteristic function on
/// a dense scan, then full pipeline reductions at seeded random thickness
/// tuples. `broken_char` swaps in a deliberately corrupted closed form so
/// the negative path of the gate itself stays tested.
pub fn run_validate(cfg: &CliConfig, broken_char: bool) -> Result<(), CmdError> {
    let ec = cfg.experiment();
    let sp = make_spectrum(&ec).map_err(usage)?;
    let grid = QuadratureGrid::default();

    let closed: Box<dyn Fn(f64, &Spectrum) -> Complex64> = if broken_char {
        // Damping exponent off by one part in 1e6: far outside the 1e−9
        // gate, far inside what a glance at a curve would miss.
        Box::new(|da: f64, sp: &Spectrum| {
            let exact = gaussian_characteristic(da, sp);
            let extra = (-da * da * sp.sigma() * sp.sigma() / 16.0 * 1e-6).exp();
            exact * extra
        })
    } else {
        Box::new(gaussian_characteristic)
    };

    let mut checks = Vec::new();
    let char_err = characteristic_disagreement(closed.as_ref(), &sp, &grid, 10.0, 200)
        .map_err(|e| CmdError::Failure(e.to_string()))?;
    checks.push(Check {
        name: "characteristic closed form vs quadrature",
        max_err: char_err,
        tol: cfg.char_tol,
    });

    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut tuples = Vec::with_capacity(20);
    for _ in 0..20 {
        tuples.push((
            rng.gen_range(0.0..600.0),
            rng.gen_range(0.0..600.0),
            rng.gen_range(0.0..600.0),
        ));
    }

    let mut gaps = [0.0f64; 4];
    for &(a, b, c) in &tuples {
        let states = [
            assemble_dephasing(&ec, a).map_err(usage)?,
            assemble_recovery(&ec, a, b).map_err(usage)?,
            assemble_esd(&ec, a, b, c).map_err(usage)?,
            assemble_partial(&ec, a).map_err(usage)?,
        ];
        for (slot, state) in gaps.iter_mut().zip(states.iter()) {
            *slot = slot.max(reduce_gap(state, &sp, &grid)?);
        }
    }
    for (name, gap) in [
        ("reduce dephasing pipeline vs quadrature", gaps[0]),
        ("reduce recovery pipeline vs quadrature", gaps[1]),
        ("reduce sudden-death pipeline vs quadrature", gaps[2]),
        ("reduce partial-input pipeline vs quadrature", gaps[3]),
    ] {
        checks.push(Check {
            name,
            max_err: gap,
            tol: cfg.reduce_tol,
        });
    }

    let mut report = String::new();
    let mut failed = Vec::new();
    for check in &checks {
        let _ = writeln!(
            report,
            "check {}: max error {:.3e} (tolerance {:.1e}) .. {}",
            check.name,
            check.max_err,
            check.tol,
            if check.ok() { "ok" } else { "FAIL" }
        );
        if !check.ok() {
            failed.push(check.name);
        }
    }
    emit(cfg, &report)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CmdError::Failure(format!(
            "validation failed: {}",
            failed.join("; ")
        )))
    }
}
