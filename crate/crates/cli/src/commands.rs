use num_complex::Complex64;
use rayon::prelude::*;

use cvqkd_core::intercept::{eve_success, ml_agreement, optimize_alpha, lossless_acceptance, ML_AGREEMENT_MIN};
use cvqkd_core::keyrate::{keyrate_vs_distance, sweep_keyrate, AttackScenario, KeyRateGrid, DistancePoint};
use cvqkd_core::protocol::run_protocol;
use cvqkd_core::state::PascsWigner;
use cvqkd_core::{
    Error as CoreError, KeyRateConfig, KeyRateReport, PhasePoint, ProtocolConfig, SiftReport, StateFamily,
    SweepAxis,
};

use crate::config::{CommandKind, RunConfig};
use crate::error::CliError;
use crate::table::{fmt_float, Cell, Table, DISTANCE, INTERCEPT, KEYRATE, SIMULATE, WIGNER};

/// Tolerance of the key-rate invariant audit.
pub const REPORT_TOL: f64 = 1e-9;

/// A finished table plus any audit failures found while building it.
#[derive(Debug)]
pub struct Outcome {
    pub table: Table,
    pub audit_failures: Vec<String>,
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        CommandKind::Wigner => wigner(cfg),
        CommandKind::KeyrateSweep => keyrate_sweep(cfg),
        CommandKind::Distance => distance(cfg),
        CommandKind::Intercept => intercept(cfg),
        CommandKind::Simulate => simulate(cfg),
    }
}

fn axis_text(a: &SweepAxis) -> String {
    if a.start == a.stop {
        fmt_float(a.start)
    } else {
        format!("{}:{}:{}", fmt_float(a.start), fmt_float(a.stop), fmt_float(a.step))
    }
}

fn keyrate_config(cfg: &RunConfig) -> KeyRateConfig {
    let d = KeyRateConfig::default();
    KeyRateConfig {
        panel_order: cfg.nodes.unwrap_or(d.panel_order),
        margin: cfg.half_width.unwrap_or(d.margin),
        ..d
    }
}

fn record_integration(cfg: &KeyRateConfig, t: &mut Table) {
    t.meta.insert("panel_width".into(), fmt_float(cfg.panel_width));
    t.meta.insert("nodes".into(), cfg.panel_order.to_string());
    t.meta.insert("half_width".into(), fmt_float(cfg.margin));
}

fn wigner(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let alpha = Complex64::new(cfg.alpha.start, cfg.alpha_im);
    let w = PascsWigner::new(cfg.family.params(alpha))?;
    let n = cfg.nodes.unwrap_or(41);
    let hw = cfg.half_width.unwrap_or(3.0);
    let h = 2.0 * hw / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| -hw + i as f64 * h).collect();
    let mut t = Table::new(&WIGNER);
    t.meta.insert("family".into(), cfg.family.to_string());
    t.meta.insert("alpha".into(), fmt_float(alpha.re));
    t.meta.insert("alpha_im".into(), fmt_float(alpha.im));
    t.meta.insert("nodes".into(), n.to_string());
    t.meta.insert("half_width".into(), fmt_float(hw));
    let (mut lo, mut hi, mut mass) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &zr in &xs {
        for &zi in &xs {
            let v = w.eval(PhasePoint::new(zr, zi));
            if !v.is_finite() {
                return Err(CliError::Audit(format!("non-finite Wigner value at ({zr}, {zi})")));
            }
            lo = lo.min(v);
            hi = hi.max(v);
            mass += v * h * h;
            t.push(vec![Cell::float(zr), Cell::float(zi), Cell::float(v)]);
        }
    }
    t.summary.insert("w_min".into(), fmt_float(lo));
    t.summary.insert("w_max".into(), fmt_float(hi));
    t.summary.insert("negative".into(), (lo < 0.0).to_string());
    t.summary.insert("riemann_mass".into(), fmt_float(mass));
    Ok(Outcome {
        table: t,
        audit_failures: vec![],
    })
}

pub fn keyrate_row(r: &KeyRateReport) -> Vec<Cell> {
    vec![
        Cell::text(r.family.name()),
        Cell::float(r.alpha),
        Cell::float(r.beta_c),
        Cell::float(r.beta_c_grid),
        Cell::float(r.grid_resolution),
        Cell::float(r.t_squared),
        Cell::float(r.p0),
        Cell::float(r.p1),
        Cell::float(r.r_acc),
        Cell::float(r.i_ab),
        Cell::float(r.p_c),
        Cell::float(r.tau),
        Cell::float(r.s_ab),
        Cell::float(r.s_ab_usable),
    ]
}

fn parse_family(c: Option<&Cell>) -> Result<StateFamily, CliError> {
    c.and_then(Cell::as_str)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CliError::Parse("bad family cell".into()))
}

fn f(t: &Table, row: usize, col: &str) -> Result<f64, CliError> {
    t.get(row, col)
        .and_then(Cell::as_f64)
        .ok_or_else(|| CliError::Parse(format!("row {row}: bad `{col}`")))
}

fn u(t: &Table, row: usize, col: &str) -> Result<u64, CliError> {
    t.get(row, col)
        .and_then(Cell::as_u64)
        .ok_or_else(|| CliError::Parse(format!("row {row}: bad `{col}`")))
}

pub fn keyrate_reports(t: &Table) -> Result<Vec<KeyRateReport>, CliError> {
    (0..t.rows.len())
        .map(|i| {
            Ok(KeyRateReport {
                family: parse_family(t.get(i, "family"))?,
                alpha: f(t, i, "alpha")?,
                beta_c: f(t, i, "beta_c")?,
                beta_c_grid: f(t, i, "beta_c_grid")?,
                grid_resolution: f(t, i, "grid_resolution")?,
                t_squared: f(t, i, "t_squared")?,
                p0: f(t, i, "p0")?,
                p1: f(t, i, "p1")?,
                r_acc: f(t, i, "r_acc")?,
                i_ab: f(t, i, "i_ab")?,
                p_c: f(t, i, "p_c")?,
                tau: f(t, i, "tau")?,
                s_ab: f(t, i, "s_ab")?,
                s_ab_usable: f(t, i, "s_ab_usable")?,
            })
        })
        .collect()
}

fn keyrate_sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let kc = keyrate_config(cfg);
    let sweep = sweep_keyrate(cfg.family, cfg.t2, &cfg.alpha, &cfg.beta_c, &kc)?;
    let mut t = Table::new(&KEYRATE);
    t.meta.insert("family".into(), cfg.family.to_string());
    t.meta.insert("t2".into(), fmt_float(cfg.t2));
    t.meta.insert("alpha".into(), axis_text(&cfg.alpha));
    t.meta.insert("beta_c".into(), axis_text(&cfg.beta_c));
    record_integration(&kc, &mut t);
    let mut failures = vec![];
    for r in &sweep.reports {
        if let Err(e) = r.check_invariants(REPORT_TOL) {
            failures.push(e);
        }
        t.push(keyrate_row(r));
    }
    let b = &sweep.best;
    t.summary.insert("best_alpha".into(), fmt_float(b.alpha));
    t.summary.insert("best_beta_c".into(), fmt_float(b.beta_c));
    t.summary.insert("best_s_ab".into(), fmt_float(b.s_ab_usable));
    t.summary.insert("audit".into(), audit_text(&failures));
    Ok(Outcome {
        table: t,
        audit_failures: failures,
    })
}

fn audit_text(failures: &[String]) -> String {
    if failures.is_empty() { "ok" } else { "fail" }.into()
}

/// One line of the distance table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceRow {
    pub distance_km: f64,
    pub t_squared: f64,
    pub pascs: (f64, f64, f64),
    pub coherent: (f64, f64, f64),
}

pub fn distance_rows(t: &Table) -> Result<Vec<DistanceRow>, CliError> {
    (0..t.rows.len())
        .map(|i| {
            Ok(DistanceRow {
                distance_km: f(t, i, "distance_km")?,
                t_squared: f(t, i, "t_squared")?,
                pascs: (f(t, i, "s_ab_pascs")?, f(t, i, "alpha_pascs")?, f(t, i, "beta_c_pascs")?),
                coherent: (
                    f(t, i, "s_ab_coherent")?,
                    f(t, i, "alpha_coherent")?,
                    f(t, i, "beta_c_coherent")?,
                ),
            })
        })
        .collect()
}

fn non_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

fn distance(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let kc = keyrate_config(cfg);
    let ds = cfg.distance.values();
    let curve = |fam| keyrate_vs_distance(fam, &ds, cfg.loss_db_km, &cfg.alpha, &cfg.beta_c, &kc);
    let p: Vec<DistancePoint> = curve(StateFamily::Pascs)?;
    let c: Vec<DistancePoint> = curve(StateFamily::Coherent)?;
    let mut t = Table::new(&DISTANCE);
    t.meta.insert("loss_db_km".into(), fmt_float(cfg.loss_db_km));
    t.meta.insert("distance".into(), axis_text(&cfg.distance));
    t.meta.insert("alpha".into(), axis_text(&cfg.alpha));
    t.meta.insert("beta_c".into(), axis_text(&cfg.beta_c));
    record_integration(&kc, &mut t);
    let mut failures = vec![];
    for (a, b) in p.iter().zip(&c) {
        for r in [&a.best, &b.best] {
            if let Err(e) = r.check_invariants(REPORT_TOL) {
                failures.push(e);
            }
        }
        t.push(vec![
            Cell::float(a.distance_km),
            Cell::float(a.t_squared),
            Cell::float(a.best.s_ab),
            Cell::float(b.best.s_ab),
            Cell::float(a.best.alpha),
            Cell::float(a.best.beta_c),
            Cell::float(b.best.alpha),
            Cell::float(b.best.beta_c),
        ]);
    }
    let sp: Vec<f64> = p.iter().map(|x| x.best.s_ab).collect();
    let sc: Vec<f64> = c.iter().map(|x| x.best.s_ab).collect();
    t.summary.insert("pascs_non_increasing".into(), non_increasing(&sp).to_string());
    t.summary.insert("coherent_non_increasing".into(), non_increasing(&sc).to_string());
    t.summary
        .insert("pascs_dominates".into(), sp.iter().zip(&sc).all(|(a, b)| a >= b).to_string());
    t.summary.insert("audit".into(), audit_text(&failures));
    Ok(Outcome {
        table: t,
        audit_failures: failures,
    })
}

/// One line of the intercept table; `None` when no amplitude in the
/// search bracket reaches the target error rate.
#[derive(Debug, Clone, PartialEq)]
pub struct InterceptRow {
    pub family: StateFamily,
    pub beta_c: f64,
    pub solved: Option<InterceptValues>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterceptValues {
    pub alpha_opt: f64,
    pub r_acc: f64,
    pub p_corr: f64,
    pub p_corr_wedge2x: f64,
    pub wedge2x_in_range: bool,
    pub partition_sum: f64,
    pub ml_agreement: f64,
    pub audit_ok: bool,
}

/// Grid spacing of the maximum-likelihood audit.
const ML_GRID: f64 = 0.05;

fn intercept_row(family: StateFamily, beta_c: f64, delta: f64) -> Result<(InterceptRow, Option<String>), CliError> {
    let alpha_opt = match optimize_alpha(family, beta_c, delta) {
        Ok(a) => a,
        Err(CoreError::NoSignChange { .. }) => {
            return Ok((
                InterceptRow {
                    family,
                    beta_c,
                    solved: None,
                },
                None,
            ))
        }
        Err(e) => return Err(e.into()),
    };
    let acc = lossless_acceptance(family, alpha_opt, beta_c)?;
    let eve = eve_success(family, alpha_opt)?;
    let ml = ml_agreement(family, alpha_opt, ML_GRID)?;
    let mut failure = eve.audit().err();
    if failure.is_none() && ml < ML_AGREEMENT_MIN {
        failure = Some(format!(
            "wedge rule matches maximum likelihood on {ml} of the mass (family={family} alpha={alpha_opt})"
        ));
    }
    Ok((
        InterceptRow {
            family,
            beta_c,
            solved: Some(InterceptValues {
                alpha_opt,
                r_acc: acc.r_acc,
                p_corr: eve.p_corr,
                p_corr_wedge2x: eve.p_corr_wedge2x,
                wedge2x_in_range: eve.wedge2x_in_range,
                partition_sum: eve.partition_sum,
                ml_agreement: ml,
                audit_ok: failure.is_none(),
            }),
        },
        failure,
    ))
}

pub fn intercept_rows(t: &Table) -> Result<Vec<InterceptRow>, CliError> {
    (0..t.rows.len())
        .map(|i| {
            let family = parse_family(t.get(i, "family"))?;
            let beta_c = f(t, i, "beta_c")?;
            let status = t.get(i, "status").and_then(Cell::as_str).unwrap_or("");
            let solved = match status {
                "ok" => Some(InterceptValues {
                    alpha_opt: f(t, i, "alpha_opt")?,
                    r_acc: f(t, i, "r_acc")?,
                    p_corr: f(t, i, "p_corr")?,
                    p_corr_wedge2x: f(t, i, "p_corr_wedge2x")?,
                    wedge2x_in_range: t
                        .get(i, "wedge2x_in_range")
                        .and_then(Cell::as_bool)
                        .ok_or_else(|| CliError::Parse(format!("row {i}: bad `wedge2x_in_range`")))?,
                    partition_sum: f(t, i, "partition_sum")?,
                    ml_agreement: f(t, i, "ml_agreement")?,
                    audit_ok: t.get(i, "audit").and_then(Cell::as_str) == Some("ok"),
                }),
                "no_sign_change" => None,
                s => return Err(CliError::Parse(format!("row {i}: unknown status `{s}`"))),
            };
            Ok(InterceptRow { family, beta_c, solved })
        })
        .collect()
}

fn intercept(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let betas = cfg.beta_c.values();
    let jobs: Vec<(StateFamily, f64)> = StateFamily::ALL
        .into_iter()
        .flat_map(|fam| betas.iter().map(move |&b| (fam, b)))
        .collect();
    let results: Vec<(InterceptRow, Option<String>)> = jobs
        .par_iter()
        .map(|&(fam, b)| intercept_row(fam, b, cfg.delta_target))
        .collect::<Result<_, _>>()?;
    let mut t = Table::new(&INTERCEPT);
    t.meta.insert("delta_target".into(), fmt_float(cfg.delta_target));
    t.meta.insert("beta_c".into(), axis_text(&cfg.beta_c));
    let mut failures = vec![];
    let mut unsolved = 0;
    for (row, failure) in results {
        failures.extend(failure);
        let head = [Cell::text(row.family.name()), Cell::float(row.beta_c)];
        let tail = match row.solved {
            Some(v) => vec![
                Cell::text("ok"),
                Cell::float(v.alpha_opt),
                Cell::float(v.r_acc),
                Cell::float(v.p_corr),
                Cell::float(v.p_corr_wedge2x),
                Cell::Bool(v.wedge2x_in_range),
                Cell::float(v.partition_sum),
                Cell::float(v.ml_agreement),
                Cell::text(if v.audit_ok { "ok" } else { "fail" }),
            ],
            None => {
                unsolved += 1;
                let nan = || Cell::Float(f64::NAN);
                vec![
                    Cell::text("no_sign_change"),
                    nan(),
                    nan(),
                    nan(),
                    nan(),
                    Cell::Bool(false),
                    nan(),
                    nan(),
                    Cell::text("skipped"),
                ]
            }
        };
        t.push(head.into_iter().chain(tail).collect());
    }
    t.summary.insert("unsolved_rows".into(), unsolved.to_string());
    t.summary.insert("audit".into(), audit_text(&failures));
    Ok(Outcome {
        table: t,
        audit_failures: failures,
    })
}

pub fn simulate_report(t: &Table) -> Result<(ProtocolConfig, SiftReport), CliError> {
    if t.rows.len() != 1 {
        return Err(CliError::Parse(format!("expected one row, found {}", t.rows.len())));
    }
    let config = ProtocolConfig {
        family: parse_family(t.get(0, "family"))?,
        alpha: f(t, 0, "alpha")?,
        beta_c: f(t, 0, "beta_c")?,
        n_pulses: u(t, 0, "n_sent")?,
        rng_seed: u(t, 0, "seed")?,
        t_squared: f(t, 0, "t_squared")?,
    };
    let report = SiftReport {
        n_sent: u(t, 0, "n_sent")?,
        n_sifted: u(t, 0, "n_sifted")?,
        n_accepted: u(t, 0, "n_accepted")?,
        n_errors: u(t, 0, "n_errors")?,
        r_acc: f(t, 0, "r_acc")?,
        r_acc_se: f(t, 0, "r_acc_se")?,
        delta: f(t, 0, "delta")?,
        delta_se: f(t, 0, "delta_se")?,
        sift_fraction: f(t, 0, "sift_fraction")?,
        sift_se: f(t, 0, "sift_se")?,
    };
    Ok((config, report))
}

fn simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let pc = ProtocolConfig {
        family: cfg.family,
        alpha: cfg.alpha.start,
        beta_c: cfg.beta_c.start,
        n_pulses: cfg.pulses,
        rng_seed: cfg.seed,
        t_squared: cfg.t2,
    };
    let r = run_protocol(&pc)?;
    let mut t = Table::new(&SIMULATE);
    t.push(vec![
        Cell::text(pc.family.name()),
        Cell::float(pc.alpha),
        Cell::float(pc.beta_c),
        Cell::float(pc.t_squared),
        Cell::UInt(pc.rng_seed),
        Cell::UInt(r.n_sent),
        Cell::UInt(r.n_sifted),
        Cell::UInt(r.n_accepted),
        Cell::UInt(r.n_errors),
        Cell::float(r.r_acc),
        Cell::float(r.r_acc_se),
        Cell::float(r.delta),
        Cell::float(r.delta_se),
        Cell::float(r.sift_fraction),
        Cell::float(r.sift_se),
    ]);
    let analytic = if pc.t_squared >= 1.0 {
        lossless_acceptance(pc.family, pc.alpha, pc.beta_c)?
    } else {
        let s = AttackScenario::with_transmission(pc.family, pc.alpha, pc.t_squared)?;
        KeyRateGrid::new(&s, &KeyRateConfig::default())?.acceptance(pc.beta_c)?
    };
    t.summary.insert("analytic_r_acc".into(), fmt_float(analytic.r_acc));
    if r.r_acc_se > 0.0 {
        t.summary
            .insert("r_acc_z".into(), fmt_float((r.r_acc - analytic.r_acc) / r.r_acc_se));
    }
    Ok(Outcome {
        table: t,
        audit_failures: vec![],
    })
}
