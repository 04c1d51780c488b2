use serde::Serialize;

use weakcurrent_core::constants::{FEMTOSECOND, HBAR, NANOMETER, TERAHERTZ};
use weakcurrent_core::electrostatics::{
    classicality_margin, flux_rect, mean_field_from_flux, ClassicalityVerdict, DEFAULT_CLASSICALITY_RATIO,
};
use weakcurrent_core::measurement::{build_distribution, fit_gaussian_sigma, Binning, GaussianFit};
use weakcurrent_core::oracle::{
    analytic_two_packet_velocity, operator_weak_value, ClosedFormState, OracleValue, QuadratureSpec,
};
use weakcurrent_core::quantum::interpolate;
use weakcurrent_core::weak_value::{
    calibrate_weak_width, distance_sweep, frequency_sweep, position_momentum_scale, reconstruct_trajectories,
    reference_velocity, run_ensemble, velocity_field, weak_mean, ExperimentContext, ExperimentRecord, WeakMean,
    WeakValueError, MIN_CONDITION_RATIO,
};

use crate::manifest::RunContext;
use crate::svg::{Chart, Series};
use crate::{CliError, SweepParameter};

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut out = Vec::new();
    f(&mut out).expect("writing to memory");
    out
}

fn discard_check(discarded: usize, total: usize) -> Result<(), CliError> {
    if total > 0 && discarded as f64 > 0.1 * total as f64 {
        return Err(CliError::Discards { discarded, total });
    }
    Ok(())
}

fn run_records(run: &mut RunContext) -> Result<(ExperimentContext, Vec<ExperimentRecord>), CliError> {
    let ctx = ExperimentContext::new(&run.config).map_err(runtime)?;
    if let Some((w, s)) = ctx.kraus_widths() {
        run.manifest.checks.condition_ratio = Some(w * s / HBAR);
    }
    eprintln!("running {} experiments ({} mode)", run.config.experiments, run.config.mode);
    let records = run_ensemble(&ctx);
    Ok((ctx, records))
}

#[derive(Serialize)]
struct HistogramReport {
    fit: GaussianFit,
    weak_mean: WeakMean,
    /// q⟨p⟩/(mL_x) of the initial state: the mean reading without probes.
    no_probe_mean_a: f64,
    discarded: usize,
    bins: usize,
    bin_width_a: f64,
}

pub fn histogram(run: &mut RunContext) -> Result<(), CliError> {
    let (ctx, records) = run_records(run)?;
    let discarded = records.iter().filter(|r| r.discard.is_some()).count();
    let values: Vec<f64> =
        records.iter().filter(|r| r.discard.is_none()).filter_map(|r| r.weak.first().map(|w| w.value)).collect();
    let dist = build_distribution(&values, Binning::FreedmanDiaconis, run.config.t_m).map_err(runtime)?;
    let c = &run.config;
    let fit = fit_gaussian_sigma(&dist, c.mass, c.geometry.device_length, c.charge).map_err(runtime)?;
    let no_probe = c.charge * ctx.initial_state().mean_momentum() / (c.mass * c.geometry.device_length);
    let report = HistogramReport {
        fit,
        weak_mean: weak_mean(&records, 0).map_err(runtime)?,
        no_probe_mean_a: no_probe,
        discarded,
        bins: dist.counts.len(),
        bin_width_a: dist.width,
    };
    if values.len() == 1 {
        run.warn("a single experiment gives a one-bin histogram".into());
    }

    let comment = run.csv_comment();
    run.write_file("histogram.csv", &csv_bytes(|o| dist.write_csv(o, Some(&comment))))?;
    run.write_json("histogram_fit.json", &report)?;

    let bars =
        (0..dist.counts.len()).map(|i| (dist.origin + i as f64 * dist.width, dist.width, dist.density(i))).collect();
    let mut series = vec![Series::Bars { label: "histogram".into(), color: "#c0392b", bars }];
    if fit.sigma > 0.0 {
        let lo = dist.origin;
        let hi = dist.origin + dist.width * dist.counts.len() as f64;
        let gauss = (0..=200)
            .map(|k| {
                let x = lo + (hi - lo) * k as f64 / 200.0;
                let z = (x - fit.mean) / fit.sigma;
                (x, (-0.5 * z * z).exp() / (fit.sigma * (2.0 * std::f64::consts::PI).sqrt()))
            })
            .collect();
        series.push(Series::Line { label: "Gaussian fit".into(), color: "#2c3e50", points: gauss });
    }
    series.push(Series::VerticalLine { label: "mean without probes".into(), color: "#2980b9", x: no_probe });
    let chart = Chart {
        title: format!("weak current at t_m, M = {}", values.len()),
        x_label: "window-averaged current (A)".into(),
        y_label: "probability density (1/A)".into(),
        series,
    };
    run.write_file("histogram.svg", chart.render().as_bytes())?;
    eprintln!(
        "mean {:.4e} A (stderr {:.2e}), σ {:.3e} A, no-probe mean {:.4e} A",
        report.weak_mean.mean, report.weak_mean.stderr, fit.sigma, no_probe
    );
    discard_check(discarded, records.len())
}

pub fn velocity_map(run: &mut RunContext) -> Result<(), CliError> {
    let (ctx, records) = run_records(run)?;
    let discarded = records.iter().filter(|r| r.discard.is_some()).count();
    let field = velocity_field(&records, &ctx).map_err(|e| match e {
        WeakValueError::EmptyPostselection => CliError::Runtime(
            "no experiment reached a detection tile after t_m; the detection plane lies behind the packets or the run ends too early"
                .into(),
        ),
        other => runtime(other),
    })?;
    if let Some(r) = field.condition_ratio {
        run.manifest.checks.condition_ratio = Some(r);
        if r < MIN_CONDITION_RATIO {
            run.warn(format!(
                "condition ratio {r:.2} < {MIN_CONDITION_RATIO}; the conditional average is not a Bohmian velocity"
            ));
        }
    }
    let free = ctx.free_state_at_measurement().map_err(runtime)?;
    // Only where the free density is appreciable; the ratio J/|ψ|² is noise elsewhere.
    let floor = 1e-4 * free.max_density();
    let reference: Vec<(f64, f64)> = (0..ctx.geometry().tiles.len())
        .filter(|&i| interpolate(&free, ctx.geometry().tiles[i].center.x).is_ok_and(|a| a.density() > floor))
        .filter_map(|i| {
            reference_velocity(&free, ctx.geometry(), i, true).map(|v| (ctx.geometry().tiles[i].center.x, v))
        })
        .collect();
    let bundle = reconstruct_trajectories(&records).map_err(runtime)?;

    let mode = run.config.mode.to_string();
    let comment = run.csv_comment();
    run.write_file(&format!("velocity_{mode}.csv"), &csv_bytes(|o| field.write_csv(o, Some(&comment))))?;
    run.write_file(&format!("trajectories_{mode}.csv"), &csv_bytes(|o| bundle.write_csv(o, Some(&comment))))?;
    let reference_csv = csv_bytes(|o| {
        use std::io::Write;
        writeln!(o, "# {comment}")?;
        writeln!(o, "x_s_m,v_mps")?;
        for (x, v) in &reference {
            writeln!(o, "{x:e},{v:e}")?;
        }
        Ok(())
    });
    run.write_file("velocity_reference.csv", &reference_csv)?;

    let chart = Chart {
        title: format!("postselected weak velocity at t_m ({mode})"),
        x_label: "detection position x_s (m)".into(),
        y_label: "velocity (m/s)".into(),
        series: vec![
            Series::Line { label: "guidance velocity without probes".into(), color: "#2c3e50", points: reference },
            Series::Markers {
                label: "weak value".into(),
                color: "#c0392b",
                points: field.occupied(1).map(|b| (b.x_s, b.mean.unwrap_or(0.0), b.stderr)).collect(),
            },
        ],
    };
    run.write_file(&format!("velocity_{mode}.svg"), chart.render().as_bytes())?;
    eprintln!(
        "{} postselected, {} discarded, {} tiles occupied",
        records.iter().filter(|r| r.is_postselected()).count(),
        discarded,
        field.occupied(1).count()
    );
    discard_check(discarded, records.len())
}

pub fn sweep(run: &mut RunContext, parameter: SweepParameter) -> Result<(), CliError> {
    let comment = run.csv_comment();
    match parameter {
        SweepParameter::Frequency => {
            let freqs: Vec<f64> =
                run.settings.sweep_frequencies_thz.clone().unwrap_or_default().iter().map(|f| f * TERAHERTZ).collect();
            if freqs.is_empty() {
                return Err(CliError::Config("sweep_frequencies_THz is empty".into()));
            }
            let points = frequency_sweep(&run.config, &freqs).map_err(runtime)?;
            let csv = csv_bytes(|o| {
                use std::io::Write;
                writeln!(o, "# {comment}")?;
                writeln!(o, "frequency_Hz,sigma_A,sigma_w_kg_m_per_s,count")?;
                for p in &points {
                    writeln!(o, "{:e},{:e},{:e},{}", p.frequency, p.fit.sigma, p.fit.kraus_width, p.fit.count)?;
                }
                Ok(())
            });
            run.write_file("sweep_frequency.csv", &csv)?;
            let chart = Chart {
                title: "pointer width against measurement frequency".into(),
                x_label: "frequency (Hz)".into(),
                y_label: "σ_w (kg·m/s)".into(),
                series: vec![Series::Markers {
                    label: "fitted Kraus width".into(),
                    color: "#c0392b",
                    points: points.iter().map(|p| (p.frequency, p.fit.kraus_width, 0.0)).collect(),
                }],
            };
            run.write_file("sweep_frequency.svg", chart.render().as_bytes())?;
            Ok(())
        }
        SweepParameter::Distance => {
            let distances: Vec<f64> =
                run.settings.sweep_distances_nm.clone().unwrap_or_default().iter().map(|d| d * NANOMETER).collect();
            if distances.is_empty() {
                return Err(CliError::Config("sweep_distances_nm is empty".into()));
            }
            let runs = run.settings.sweep_runs.unwrap_or(1).max(1);
            let points = distance_sweep(&run.config, &distances, runs).map_err(runtime)?;
            let csv = csv_bytes(|o| {
                use std::io::Write;
                writeln!(o, "# {comment}")?;
                writeln!(o, "distance_m,error_wave,stderr,runs,discarded")?;
                for p in &points {
                    writeln!(o, "{:e},{:e},{:e},{},{}", p.distance, p.error_wave, p.stderr, p.runs, p.discarded)?;
                }
                Ok(())
            });
            run.write_file("sweep_distance.csv", &csv)?;
            let chart = Chart {
                title: "wave-function disturbance against cable distance".into(),
                x_label: "cable distance d (m)".into(),
                y_label: "Error_wave".into(),
                series: vec![Series::Markers {
                    label: "mean over runs".into(),
                    color: "#c0392b",
                    points: points.iter().map(|p| (p.distance, p.error_wave, p.stderr)).collect(),
                }],
            };
            run.write_file("sweep_distance.svg", chart.render().as_bytes())?;
            let discarded: usize = points.iter().map(|p| p.discarded).sum();
            discard_check(discarded, runs * points.len())
        }
    }
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    limit: f64,
    pass: bool,
    note: Option<String>,
}

#[derive(Serialize)]
struct ValidationReport {
    checks: Vec<Check>,
    mean_flux_vm: f64,
    area_m2: f64,
    interval_s: f64,
    classicality: ClassicalityVerdict,
}

pub fn validate(run: &mut RunContext) -> Result<(), CliError> {
    let (weak_ratio, tile_ratio) = (run.manifest.checks.weak_surface_ratio, run.manifest.checks.tile_surface_ratio);
    let mut checks = vec![
        Check {
            name: "weak surface S/L_x² ≥ 100",
            value: weak_ratio,
            limit: 100.0,
            pass: weak_ratio >= 100.0,
            note: None,
        },
        Check {
            name: "tile surface S/L_x² ≤ 0.01",
            value: tile_ratio,
            limit: 0.01,
            pass: tile_ratio <= 0.01,
            note: None,
        },
    ];

    let windows = run.settings.calibration_windows.unwrap_or(400).max(2);
    let calibration = calibrate_weak_width(&run.config, windows).map_err(runtime)?;
    let ratio = calibration.kraus_width / position_momentum_scale(&run.geometry);
    run.manifest.checks.condition_ratio = Some(ratio);
    let note =
        (ratio < MIN_CONDITION_RATIO).then(|| "below 10: postselected averages are not Bohmian velocities".to_string());
    if let Some(n) = &note {
        run.warn(format!("condition ratio {ratio:.2}: {n}"));
    }
    checks.push(Check {
        name: "condition ratio σ_w·σ_s/ħ",
        value: ratio,
        limit: MIN_CONDITION_RATIO,
        pass: true,
        note,
    });

    let ctx = ExperimentContext::new(&run.config).map_err(runtime)?;
    let psi = ctx.initial_state();
    let simulated: f64 = psi
        .density()
        .iter()
        .enumerate()
        .map(|(i, rho)| {
            let p = nalgebra::Vector3::new(psi.grid.x(i), 0.0, 0.0);
            rho * psi.grid.dx * flux_rect(&run.geometry.weak, &p, run.config.charge, run.geometry.permittivity)
        })
        .sum();
    let flux = run.settings.validate_flux_vm.unwrap_or(simulated);
    let area = run.settings.validate_area_m2.unwrap_or(run.geometry.weak.area());
    let interval = run.settings.validate_interval_fs.unwrap_or(20.0) * FEMTOSECOND;
    let field = mean_field_from_flux(flux, area);
    let verdict = classicality_margin(field * field, interval, DEFAULT_CLASSICALITY_RATIO).map_err(runtime)?;
    run.manifest.checks.classicality = Some(verdict);
    checks.push(Check {
        name: "classicality |Ē|² / threshold",
        value: verdict.ratio,
        limit: DEFAULT_CLASSICALITY_RATIO,
        pass: verdict.pass,
        note: Some(format!("|Ē|² = {:.3e} N²/C², threshold {:.4e} N²/C²", verdict.field_squared, verdict.threshold)),
    });

    for c in &checks {
        println!(
            "{} {:<34} {:.4e} (limit {:.4e}){}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.limit,
            c.note.as_ref().map(|n| format!("  {n}")).unwrap_or_default()
        );
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    run.write_json(
        "validation.json",
        &ValidationReport { checks, mean_flux_vm: flux, area_m2: area, interval_s: interval, classicality: verdict },
    )?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Physics(failed.join("; ")))
    }
}

#[derive(Serialize)]
struct OracleRow {
    #[serde(flatten)]
    value: OracleValue,
    density_closed_form: f64,
    velocity_closed_form: f64,
    density_error: f64,
    velocity_error: f64,
}

#[derive(Serialize)]
struct OracleReport {
    t_m_s: f64,
    sigma_w: f64,
    sigma_s: f64,
    max_density_error: f64,
    max_velocity_error: f64,
    points: Vec<OracleRow>,
}

/// Evenly spaced positions where the density at `t` exceeds 5% of its peak.
fn support_points(state: &ClosedFormState, t: f64, n: usize) -> Vec<f64> {
    let (lo, hi) = state.packets.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let c = p.center + p.velocity * t;
        let w = 4.0 * p.width_at(t);
        (lo.min(c - w), hi.max(c + w))
    });
    let scan: Vec<(f64, f64)> =
        (0..=4000).map(|k| lo + (hi - lo) * k as f64 / 4000.0).map(|x| (x, state.density(x, t))).collect();
    let peak = scan.iter().map(|s| s.1).fold(0.0, f64::max);
    let inside: Vec<f64> = scan.iter().filter(|s| s.1 > 0.05 * peak).map(|s| s.0).collect();
    if inside.is_empty() || n == 0 {
        return Vec::new();
    }
    (0..n).map(|k| inside[(k * (inside.len() - 1)) / (n.max(2) - 1).max(1)]).collect()
}

pub fn oracle_compare(run: &mut RunContext) -> Result<(), CliError> {
    let c = run.config.clone();
    let state = ClosedFormState::from_specs(&c.packets, c.mass).map_err(runtime)?;
    let sigma_s = run.settings.oracle_strong_width_nm.unwrap_or(0.2) * NANOMETER;
    let ratio = run.settings.oracle_condition_ratio.unwrap_or(100.0);
    let sigma_w = ratio * HBAR / sigma_s;
    let t = c.t_m;
    let mut rows = Vec::new();
    for x in support_points(&state, t, run.settings.oracle_points.unwrap_or(20)) {
        let spec = QuadratureSpec::for_state(&state, t, x);
        let value = operator_weak_value(&state, t, sigma_w, sigma_s, x, &spec).map_err(runtime)?;
        let rho = state.density(x, t);
        let v = analytic_two_packet_velocity(&state, x, t).map_err(runtime)?;
        rows.push(OracleRow {
            density_error: (value.probability - rho).abs() / rho,
            velocity_error: (value.expectation / c.mass - v).abs() / v.abs().max(f64::MIN_POSITIVE),
            value,
            density_closed_form: rho,
            velocity_closed_form: v,
        });
    }
    let max_rho = rows.iter().map(|r| r.density_error).fold(0.0, f64::max);
    let max_v = rows.iter().map(|r| r.velocity_error).fold(0.0, f64::max);
    run.manifest.checks.condition_ratio = Some(ratio);

    let comment = run.csv_comment();
    let csv = csv_bytes(|o| {
        use std::io::Write;
        writeln!(o, "# {comment}")?;
        writeln!(o, "x_s_m,probability_per_m,expectation_kg_m_per_s,density_closed_form,velocity_closed_form_mps,error_estimate")?;
        for r in &rows {
            writeln!(
                o,
                "{:e},{:e},{:e},{:e},{:e},{:e}",
                r.value.x_s,
                r.value.probability,
                r.value.expectation,
                r.density_closed_form,
                r.velocity_closed_form,
                r.value.error_estimate
            )?;
        }
        Ok(())
    });
    run.write_file("oracle.csv", &csv)?;
    let chart = Chart {
        title: format!("Kraus-pipeline weak value at condition ratio {ratio}"),
        x_label: "x_s (m)".into(),
        y_label: "velocity (m/s)".into(),
        series: vec![
            Series::Line {
                label: "J/|ψ|² closed form".into(),
                color: "#2c3e50",
                points: rows.iter().map(|r| (r.value.x_s, r.velocity_closed_form)).collect(),
            },
            Series::Markers {
                label: "E[p_w | x_s]/m".into(),
                color: "#c0392b",
                points: rows.iter().map(|r| (r.value.x_s, r.value.expectation / c.mass, 0.0)).collect(),
            },
        ],
    };
    let svg = chart.render();
    run.write_json(
        "oracle.json",
        &OracleReport {
            t_m_s: t,
            sigma_w,
            sigma_s,
            max_density_error: max_rho,
            max_velocity_error: max_v,
            points: rows,
        },
    )?;
    run.write_file("oracle.svg", svg.as_bytes())?;
    println!("max relative error: density {max_rho:.3e}, velocity {max_v:.3e} at condition ratio {ratio}");
    if ratio >= 100.0 && (max_rho > 0.01 || max_v > 0.01) {
        return Err(CliError::Physics(format!(
            "oracle limit missed: density {max_rho:.3e}, velocity {max_v:.3e} (limit 1%)"
        )));
    }
    Ok(())
}
