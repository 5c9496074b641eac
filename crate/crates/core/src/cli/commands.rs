use std::fs;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{self, Format, RunConfig};
use super::output::{fmt_f64, render};
use super::presets::{preset, NAMES};
use super::{CliError, Cli, Command, Common, Outcome};
use crate::analysis::{
    best_rate, compare_schemes, max_distance, noise_sweep, optimize_tps, rate_sweep,
    tolerable_excess_noise, NoiseOutcome, SchemeTemplate, Side, SweepAxis, SweepKind, SweepPoint,
    SweepResult, SweepMetadata,
};
use crate::sources::{
    fock_oracle_covariance, integral_oracle_covariance, subtracted_covariance, SourceSpec,
    SubtractionSpec, Weighting,
};

/// Config text and the overrides applied on top of it.
struct Loaded {
    config: RunConfig,
    overrides: Vec<String>,
}

fn load(common: &Common, required: bool) -> Result<Loaded, CliError> {
    let text = match (&common.config, &common.preset) {
        (Some(path), _) => Some(fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?),
        (None, Some(name)) => {
            if !common.overrides.is_empty() && !common.allow_override {
                return Err(CliError::Config(format!(
                    "preset `{name}` is frozen; pass --allow-override to apply --set"
                )));
            }
            Some(preset(name).ok_or_else(|| {
                CliError::Config(format!("unknown preset `{name}` (available: {})", NAMES.join(", ")))
            })?)
        }
        (None, None) if required => {
            return Err(CliError::Config("one of --config or --preset is required".into()))
        }
        (None, None) => None,
    };
    let config = config::parse(text.as_deref().unwrap_or(""), &common.overrides)?;
    Ok(Loaded {
        config,
        overrides: common.overrides.clone(),
    })
}

fn emit(common: &Common, cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    match common.out.as_ref().or(cfg.output.path.as_ref()) {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io {
                    path: Path::new("<stdout>").to_path_buf(),
                    source,
                })
        }
    }
}

fn emit_json<T: Serialize>(common: &Common, cfg: &RunConfig, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).expect("results serialise");
    s.push('\n');
    emit(common, cfg, &s)
}

fn format(common: &Common, cfg: &RunConfig) -> Format {
    common.format.or(cfg.output.format).unwrap_or(Format::Csv)
}

fn outcome(positive: bool) -> Outcome {
    if positive {
        Outcome::Positive
    } else {
        Outcome::Negative
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let common = &cli.common;
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::Presets { name } => presets(name.as_deref()),
        Command::OracleCheck {
            fock_tol,
            integral_tol,
            inject_fault,
        } => {
            let l = load(common, false)?;
            oracle_check(common, &l.config, *fock_tol, *integral_tol, *inject_fault)
        }
        cmd => {
            let l = load(common, true)?;
            match cmd {
                Command::Keyrate => keyrate(common, &l),
                Command::Sweep => sweep(common, &l),
                Command::OptimizeTps { side } => optimize(common, &l, side.map(Side::from)),
                Command::Noise => noise(common, &l),
                Command::MaxDistance { cutoff } => reach(common, &l, *cutoff),
                Command::Compare => compare(common, &l),
                Command::Presets { .. } | Command::OracleCheck { .. } => unreachable!(),
            }
        }
    }
}

fn presets(name: Option<&str>) -> Result<Outcome, CliError> {
    match name {
        None => println!("{}", NAMES.join("\n")),
        Some(n) => print!(
            "{}",
            preset(n).ok_or_else(|| CliError::Config(format!("unknown preset `{n}`")))?
        ),
    }
    Ok(Outcome::Positive)
}

fn metadata(l: &Loaded, template: &SchemeTemplate) -> SweepMetadata {
    SweepMetadata {
        template: template.clone(),
        settings: l.config.optimizer,
        noise_mode: None,
        noise_tol: None,
        overrides: l.overrides.clone(),
    }
}

fn keyrate(common: &Common, l: &Loaded) -> Result<Outcome, CliError> {
    let tpl = l.config.template()?;
    let o = best_rate(&tpl, &l.config.optimizer)?;
    let positive = o.report.k_ps > 0.0;
    let result = SweepResult {
        curve: "keyrate".into(),
        axis: SweepAxis::DistanceKm,
        kind: SweepKind::Rate,
        points: vec![SweepPoint {
            parameter: tpl.distance_km,
            t_ps_alice: o.t_ps_alice,
            t_ps_bob: o.t_ps_bob,
            report: o.report,
            tolerable_eps: None,
        }],
        metadata: metadata(l, &tpl),
    };
    emit(common, &l.config, &render(&[result], format(common, &l.config)))?;
    Ok(outcome(positive))
}

fn curves(l: &Loaded) -> Result<Vec<(String, SchemeTemplate)>, CliError> {
    let base = l.config.template()?;
    if l.config.curves.is_empty() {
        return Ok(vec![("scheme".into(), base)]);
    }
    l.config
        .curves
        .iter()
        .map(|c| Ok((c.name.clone(), c.apply(&base)?)))
        .collect()
}

fn sweep(common: &Common, l: &Loaded) -> Result<Outcome, CliError> {
    let s = l.config.sweep()?;
    let grid = s.values()?;
    let curves = curves(l)?;
    let mut results = Vec::with_capacity(curves.len());
    for (name, tpl) in &curves {
        let mut r = match s.kind {
            SweepKind::Rate => rate_sweep(name, tpl, s.axis, &grid, &l.config.optimizer)?,
            SweepKind::TolerableNoise => noise_sweep(
                name,
                tpl,
                s.axis,
                &grid,
                l.config.noise.mode,
                l.config.noise.tol,
                &l.config.optimizer,
            )?,
        };
        r.metadata.overrides = l.overrides.clone();
        log::info!("curve `{name}`: {} points", r.points.len());
        results.push(r);
    }
    emit(common, &l.config, &render(&results, format(common, &l.config)))?;
    Ok(Outcome::Positive)
}

fn optimize(common: &Common, l: &Loaded, side: Option<Side>) -> Result<Outcome, CliError> {
    let tpl = l.config.template()?;
    let side = match side.or(l.config.optimize.side) {
        Some(s) => s,
        None => match (tpl.k_alice > 0, tpl.k_bob > 0) {
            (true, true) => Side::Both,
            (true, false) => Side::Alice,
            (false, true) => Side::Bob,
            (false, false) => {
                return Err(CliError::Config(
                    "[scheme]: no side subtracts photons (set k_alice or k_bob)".into(),
                ))
            }
        },
    };
    let o = optimize_tps(&tpl, side, &l.config.optimizer)?;
    emit_json(common, &l.config, &o)?;
    Ok(outcome(o.positive))
}

fn noise(common: &Common, l: &Loaded) -> Result<Outcome, CliError> {
    let tpl = l.config.template()?;
    let n = l.config.noise;
    let out = tolerable_excess_noise(&tpl, n.mode, &l.config.optimizer, n.tol)?;
    emit_json(common, &l.config, &out)?;
    Ok(outcome(matches!(out, NoiseOutcome::Tolerable { .. })))
}

fn reach(common: &Common, l: &Loaded, cutoff: Option<f64>) -> Result<Outcome, CliError> {
    let tpl = l.config.template()?;
    let cutoff = cutoff.unwrap_or(l.config.max_distance.cutoff);
    let d = max_distance(&tpl, cutoff, &l.config.optimizer)?;
    emit_json(common, &l.config, &d)?;
    Ok(outcome(d.km > 0.0))
}

fn compare(common: &Common, l: &Loaded) -> Result<Outcome, CliError> {
    let s = l.config.sweep()?;
    if s.axis != SweepAxis::DistanceKm {
        return Err(CliError::Config("[sweep]: compare needs axis = \"distance-km\"".into()));
    }
    let tpl = l.config.template()?;
    let mut results = compare_schemes(&tpl, l.config.compare.k, &s.values()?, &l.config.optimizer)?.into_curves();
    for r in &mut results {
        r.metadata.overrides = l.overrides.clone();
    }
    emit(common, &l.config, &render(&results, format(common, &l.config)))?;
    Ok(Outcome::Positive)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCell {
    pub v: f64,
    pub t_ps: f64,
    pub k: u32,
    pub fock_dev: f64,
    pub integral_dev: f64,
    pub pass: bool,
}

/// Compares the closed form with both oracles over the configured grid.
pub fn oracle_cells(
    cfg: &config::OracleConfig,
    fock_tol: f64,
    integral_tol: f64,
    inject_fault: bool,
) -> Result<Vec<OracleCell>, CliError> {
    let mut cells = Vec::new();
    for &v in &cfg.v {
        for &t in &cfg.t_ps {
            for &k in &cfg.k {
                cells.push((v, t, k));
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(v, t, k)| {
            let src = SourceSpec::new(v)?;
            let sub = if k == 0 && t == 1.0 {
                SubtractionSpec::disabled()
            } else {
                SubtractionSpec::new(k, t)?
            };
            let mut closed = subtracted_covariance(&src, &sub);
            if inject_fault {
                closed.c += 1e-3;
            }
            let fock = fock_oracle_covariance(&src, &sub, cfg.fock_tail)?;
            let integral = integral_oracle_covariance(&src, &sub, &cfg.grid, Weighting::Selected).covariance;
            let fock_dev = closed.max_abs_diff(&fock);
            let integral_dev = closed.max_abs_diff(&integral);
            Ok(OracleCell {
                v,
                t_ps: t,
                k,
                fock_dev,
                integral_dev,
                pass: fock_dev <= fock_tol && integral_dev <= integral_tol,
            })
        })
        .collect::<Result<Vec<_>, crate::Error>>()
        .map_err(CliError::from)
}

fn oracle_check(
    common: &Common,
    cfg: &RunConfig,
    fock_tol: Option<f64>,
    integral_tol: Option<f64>,
    inject_fault: bool,
) -> Result<Outcome, CliError> {
    let o = &cfg.oracle;
    let fock_tol = fock_tol.unwrap_or(o.fock_tol);
    let integral_tol = integral_tol.unwrap_or(o.integral_tol);
    let cells = oracle_cells(o, fock_tol, integral_tol, inject_fault)?;
    let mut text = String::new();
    for c in &cells {
        text.push_str(&format!(
            "{} v={} t_ps={} k={} fock_dev={} integral_dev={}\n",
            if c.pass { "PASS" } else { "FAIL" },
            c.v,
            c.t_ps,
            c.k,
            fmt_f64(c.fock_dev),
            fmt_f64(c.integral_dev),
        ));
    }
    let failed = cells.iter().filter(|c| !c.pass).count();
    text.push_str(&format!(
        "{} of {} cells passed (fock tol {}, integral tol {})\n",
        cells.len() - failed,
        cells.len(),
        fmt_f64(fock_tol),
        fmt_f64(integral_tol)
    ));
    emit(common, cfg, &text)?;
    Ok(outcome(failed == 0))
}
