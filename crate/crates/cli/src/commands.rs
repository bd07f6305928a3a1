use std::path::PathBuf;

use ptscatter::barrier::{log_transmission_probability, resonance_residual};
use ptscatter::physical::{
    potential_strength, solve_geometry_for_singularity, tau0_physical, to_dimensionless, PhysicalWaveguide,
};
use ptscatter::singularity::{find_singularities, peak_scan, peak_spacing_stats, SearchBox, SearchOptions};
use ptscatter::sweep::evaluate_grid;
use ptscatter::timing::delay_curve;
use ptscatter::{BarrierPoint, Execution};
use serde_json::json;

use crate::config::{OutputFormat, Quantity, RangeSpec, RunConfig};
use crate::error::{CliError, CliResult};
use crate::format::{fmt_f64, Table};
use crate::output::{json_document, FileSet, RunManifest};
use crate::svg::{heatmap, line_plot, timing_overlay, Series};

/// What a command printed and wrote.
#[derive(Debug, Default)]
pub struct Report {
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
}

fn finish(cfg: &RunConfig, files: FileSet, mut lines: Vec<String>) -> CliResult<Report> {
    let files = files.write(&cfg.out_dir())?;
    lines.extend(files.iter().map(|p| format!("wrote {}", p.display())));
    Ok(Report { lines, files })
}

/// Peak-scan density matching the sampling of `range`, at least 100 per unit.
fn scan_density(range: &RangeSpec) -> f64 {
    let n = range.steps.unwrap_or(2) as f64;
    ((n - 1.0) / (range.hi - range.lo)).max(100.0)
}

fn t2_of(xi: f64, ka: f64) -> Option<f64> {
    log_transmission_probability(BarrierPoint::new(xi, ka).ok()?)
        .ok()
        .map(f64::exp)
}

pub fn scan(cfg: &RunConfig) -> CliResult<Report> {
    let xi = cfg.xi_values()?;
    let ka = cfg.ka_values()?;
    let mut quantities = if cfg.quantities.is_empty() {
        vec![Quantity::Probability, Quantity::Phase, Quantity::Delay]
    } else {
        cfg.quantities.clone()
    };
    quantities.sort();
    quantities.dedup();
    let has = |q: Quantity| quantities.contains(&q);

    let samples = evaluate_grid(&xi, &ka, cfg.mode(), Execution::Parallel)?;
    let mut header = vec!["xi", "ka"];
    if has(Quantity::Probability) {
        header.push("T2");
    }
    if has(Quantity::Phase) {
        header.push("phase");
    }
    if has(Quantity::Delay) {
        header.push("delay_ratio");
    }
    if has(Quantity::Residuals) {
        header.extend(["r1_scaled", "r2_scaled"]);
    }
    let mut table = Table::new(&header);
    for s in &samples {
        let mut row = vec![Some(s.xi), Some(s.ka)];
        if has(Quantity::Probability) {
            row.push(Some(s.t2));
        }
        if has(Quantity::Phase) {
            row.push(s.phase);
        }
        if has(Quantity::Delay) {
            row.push(s.delay_ratio);
        }
        if has(Quantity::Residuals) {
            let r = resonance_residual(BarrierPoint::new(s.xi, s.ka)?);
            row.extend([Some(r.r1_scaled), Some(r.r2_scaled)]);
        }
        table.push(row);
    }

    let mut files = FileSet::default();
    for f in cfg.formats(OutputFormat::Csv) {
        match f {
            OutputFormat::Csv => files.add("scan.csv", table.to_csv()),
            OutputFormat::Json => {
                let mut m = RunManifest::new("scan", cfg);
                m.hash_axis("xi", &xi);
                m.hash_axis("ka", &ka);
                files.add("scan.json", json_document(&m, table.to_json()));
            }
            OutputFormat::Svg => {
                let rows: Vec<Vec<Option<f64>>> = samples
                    .chunks(ka.len())
                    .map(|row| row.iter().map(|s| Some(s.t2.log10())).collect())
                    .collect();
                if xi.len() > 1 {
                    files.add("scan_heatmap.svg", heatmap("log10 |T|²", "ka", "ξ", &ka, &xi, &rows));
                }
                let series: Vec<Series> = samples
                    .chunks(ka.len())
                    .map(|row| Series {
                        label: format!("ξ = {}", fmt_f64(row[0].xi)),
                        points: row.iter().map(|s| (s.ka, Some(s.t2))).collect(),
                    })
                    .collect();
                files.add("scan_lines.svg", line_plot("|T|²", "ka", "|T|²", &series));
            }
        }
    }
    let lines = vec![format!(
        "scan: {} xi x {} ka = {} samples ({:?})",
        xi.len(),
        ka.len(),
        samples.len(),
        cfg.mode()
    )];
    finish(cfg, files, lines)
}

pub fn peaks(cfg: &RunConfig) -> CliResult<Report> {
    let xi = cfg.xi_values()?;
    let range = cfg.ka_range()?;
    let density = scan_density(&range);
    let mut table = Table::new(&["xi", "ka_position", "height", "half_width"]);
    let mut spacing = Vec::new();
    let mut lines = Vec::new();
    for &x in &xi {
        let found = peak_scan(x, (range.lo, range.hi), density)?;
        for p in &found {
            table.push(vec![
                Some(p.xi),
                Some(p.ka_position),
                Some(p.height),
                Some(p.half_width),
            ]);
        }
        let stats = peak_spacing_stats(&found).ok();
        lines.push(match stats {
            Some(s) => format!(
                "xi {}: {} peaks, mean spacing {:.6}, relative std {:.4}",
                fmt_f64(x),
                found.len(),
                s.mean_spacing,
                s.relative_std
            ),
            None => format!("xi {}: {} peaks", fmt_f64(x), found.len()),
        });
        spacing.push(json!({ "xi": x, "count": found.len(), "spacing": stats }));
    }
    let mut files = FileSet::default();
    for f in cfg.formats(OutputFormat::Csv) {
        match f {
            OutputFormat::Csv => files.add("peaks.csv", table.to_csv()),
            OutputFormat::Json => {
                let mut m = RunManifest::new("peaks", cfg);
                m.hash_axis("xi", &xi);
                files.add(
                    "peaks.json",
                    json_document(&m, json!({ "peaks": table.to_json(), "spacing": spacing })),
                );
            }
            OutputFormat::Svg => {
                let series: Vec<Series> = xi
                    .iter()
                    .map(|&x| {
                        let grid = ptscatter::numeric::linspace(range.lo, range.hi, range.steps.unwrap_or(501));
                        Series {
                            label: format!("ξ = {}", fmt_f64(x)),
                            points: grid.iter().map(|&k| (k, t2_of(x, k))).collect(),
                        }
                    })
                    .collect();
                files.add("peaks.svg", line_plot("|T|²", "ka", "|T|²", &series));
            }
        }
    }
    finish(cfg, files, lines)
}

pub fn singularities(cfg: &RunConfig) -> CliResult<Report> {
    let (xr, kr) = match (cfg.xi_range, cfg.ka_range) {
        (Some(x), Some(k)) => (x, k),
        _ => {
            return Err(CliError::Usage(
                "singularities needs --xi-range A:B and --ka-range A:B".into(),
            ))
        }
    };
    let bx = SearchBox::new((xr.lo, xr.hi), (kr.lo, kr.hi)).map_err(|e| CliError::Usage(e.to_string()))?;
    let opts = SearchOptions {
        tol: cfg.tol(1e-10)?,
        grid_density: cfg.density.unwrap_or(20.0),
        ..SearchOptions::default()
    };
    let roots = find_singularities(&bx, &opts)?;
    let mut lines = vec![format!(
        "{} spectral singularit{} in box",
        roots.len(),
        if roots.len() == 1 { "y" } else { "ies" }
    )];
    for r in &roots {
        lines.push(format!(
            "  xi = {}, ka = {}, residual = {:.3e}, iterations = {}",
            fmt_f64(r.xi),
            fmt_f64(r.ka),
            r.residual_norm,
            r.newton_iterations
        ));
    }
    let mut files = FileSet::default();
    for f in cfg.formats(OutputFormat::Json) {
        match f {
            OutputFormat::Json => {
                let m = RunManifest::new("singularities", cfg);
                let data = json!({
                    "box": bx,
                    "method": "sign-change and residual-minimum seeds on a coarse grid, damped Newton on the scaled resonance residuals",
                    "grid_density": opts.grid_density,
                    "tol": opts.tol,
                    "points": roots,
                });
                files.add("singularities.json", json_document(&m, data));
            }
            OutputFormat::Csv => {
                let mut t = Table::new(&["xi", "ka", "residual_norm", "newton_iterations"]);
                for r in &roots {
                    t.push(vec![
                        Some(r.xi),
                        Some(r.ka),
                        Some(r.residual_norm),
                        Some(r.newton_iterations as f64),
                    ]);
                }
                files.add("singularities.csv", t.to_csv());
            }
            OutputFormat::Svg => {
                return Err(CliError::Usage("singularities writes csv or json".into()));
            }
        }
    }
    finish(cfg, files, lines)
}

pub fn timing(cfg: &RunConfig) -> CliResult<Report> {
    let xi = cfg.xi_values()?;
    let range = cfg.ka_range()?;
    let ka = cfg.ka_values()?;
    let mode = cfg.mode();
    let mut table = Table::new(&["xi", "ka", "delay_ratio", "time_ratio", "T2"]);
    let mut files = FileSet::default();
    let formats = cfg.formats(OutputFormat::Csv);
    let mut lines = Vec::new();
    for (i, &x) in xi.iter().enumerate() {
        let curve = delay_curve(x, &ka, mode, &[], 0.0, Execution::Parallel);
        let t2: Vec<Option<f64>> = ka.iter().map(|&k| t2_of(x, k)).collect();
        for (s, t) in curve.iter().zip(&t2) {
            table.push(vec![Some(s.xi), Some(s.ka), s.delay_ratio, s.time_ratio(), *t]);
        }
        let delays: Vec<f64> = curve.iter().filter_map(|s| s.delay_ratio).collect();
        let lo = delays.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = delays.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let extremum = if lo.abs() > hi.abs() { lo } else { hi };
        lines.push(format!(
            "xi {}: min delay {:.6}, max delay {:.6}, largest-magnitude extremum {}",
            fmt_f64(x),
            lo,
            hi,
            if extremum < 0.0 { "negative" } else { "non-negative" }
        ));
        if formats.contains(&OutputFormat::Svg) {
            let peaks: Vec<f64> = peak_scan(x, (range.lo, range.hi), scan_density(&range))?
                .iter()
                .map(|p| p.ka_position)
                .collect();
            let delay: Vec<Option<f64>> = curve.iter().map(|s| s.delay_ratio).collect();
            files.add(
                format!("timing_{i:03}.svg"),
                timing_overlay(&format!("ξ = {}", fmt_f64(x)), &ka, &delay, &t2, &peaks),
            );
        }
    }
    for f in &formats {
        match f {
            OutputFormat::Csv => files.add("timing.csv", table.to_csv()),
            OutputFormat::Json => {
                let mut m = RunManifest::new("timing", cfg);
                m.hash_axis("xi", &xi);
                m.hash_axis("ka", &ka);
                files.add("timing.json", json_document(&m, table.to_json()));
            }
            OutputFormat::Svg => {}
        }
    }
    finish(cfg, files, lines)
}

fn need(v: Option<f64>, flag: &str) -> CliResult<f64> {
    v.ok_or_else(|| CliError::Usage(format!("physical needs --{flag}")))
}

pub fn physical(cfg: &RunConfig) -> CliResult<Report> {
    let photon = need(cfg.photon_energy, "photon-energy")?;
    let plasma = need(cfg.plasma_energy, "plasma-energy")?;
    let damping = need(cfg.damping_energy, "damping-energy")?;
    let a = need(cfg.half_length, "half-length")?;
    let mut lines = Vec::new();
    let mut data = serde_json::Map::new();

    let solved = if cfg.solve {
        let s = solve_geometry_for_singularity(photon, plasma, damping, a)?;
        lines.push(format!("solved half height b = {:.6} nm", s.half_height_b));
        lines.push(format!(
            "  nearest singularity xi = {:.9}, ka = {:.9}",
            s.singularity.xi, s.singularity.ka
        ));
        data.insert("solution".into(), json!(s));
        Some(s.half_height_b)
    } else {
        None
    };
    let b = match (cfg.half_height, solved) {
        (Some(b), _) => b,
        (None, Some(b)) => b,
        (None, None) => return Err(CliError::Usage("physical needs --half-height or --solve".into())),
    };
    let w = PhysicalWaveguide {
        photon_energy: photon,
        plasma_energy: plasma,
        damping_energy: damping,
        half_length_a: a,
        half_height_b: b,
    };
    let v = potential_strength(&w)?;
    let p = to_dimensionless(&w)?;
    let tau0 = tau0_physical(&w)?;
    let residual = resonance_residual(p).norm();
    lines.push(format!("v = {}", fmt_f64(v)));
    lines.push(format!("xi = {}, ka = {}", fmt_f64(p.xi()), fmt_f64(p.ka())));
    lines.push(format!("tau0 = {:.6} fs", tau0 * 1e15));
    lines.push(format!("resonance residual = {residual:.3e}"));
    if let Some(t) = t2_of(p.xi(), p.ka()) {
        lines.push(format!("|T|² = {t:.6e}"));
    }
    data.insert("waveguide".into(), json!(w));
    data.insert("v".into(), json!(v));
    data.insert("point".into(), json!(p));
    data.insert("tau0_seconds".into(), json!(tau0));
    data.insert("residual_norm".into(), json!(residual));

    let mut files = FileSet::default();
    if cfg.formats(OutputFormat::Json).iter().any(|f| *f != OutputFormat::Json) {
        return Err(CliError::Usage("physical writes json only".into()));
    }
    let m = RunManifest::new("physical", cfg);
    files.add("physical.json", json_document(&m, serde_json::Value::Object(data)));
    finish(cfg, files, lines)
}
