//! The four subcommands. Each reads its inputs from the config, writes a
//! fixed set of files under the output directory and finishes with a
//! manifest.

use std::path::{Path, PathBuf};

use porescope::flowfield::{self, channel_csv, channel_re, sectional_flow_csv, sectional_flow_stats, ChannelSection};
use porescope::pnm::{self, ConductanceModel, PnmError, PoreNetwork, SampleGeometry};
use porescope::poreseg::{self, DistanceMap, LabeledPoreSpace};
use porescope::regime::{self, RegimeCurve, RegimeError, TransitionOptions};
use porescope::section::Sectioning;
use porescope::stats::summarize;
use porescope::streamline::{self, StreamField, Streamline};
use porescope::svg;
use porescope::voxel::{self, BinaryPoreMask, Connectivity, VolumeFormat};
use serde::Serialize;
use serde_json::json;

use crate::config::{PipelineConfig, VolumeFormatName};
use crate::output::Outputs;
use crate::CliError;

/// Streams drawn in the Re-vs-arc-length plot.
const MAX_TRACES: usize = 12;

fn require<'a>(p: &'a Option<PathBuf>, field: &str) -> Result<&'a Path, CliError> {
    p.as_deref().ok_or_else(|| CliError::Input(format!("config field `{field}` is not set")))
}

fn section_length(cfg: &PipelineConfig, nz: usize, voxel_size: f64) -> f64 {
    cfg.section_length_um.unwrap_or(nz as f64 * voxel_size)
}

pub fn ingest(cfg: &PipelineConfig, out: &Path) -> Result<PathBuf, CliError> {
    let path = require(&cfg.volume, "volume")?;
    let format = match cfg.volume_format {
        VolumeFormatName::Raw => VolumeFormat::RawSidecar,
        VolumeFormatName::Pgm => VolumeFormat::PgmStack,
    };
    let grid = voxel::load_volume(path, format, cfg.voxel_size_um)?;
    let mut o = Outputs::create(out, cfg)?;
    o.input(path)?;
    if format == VolumeFormat::RawSidecar {
        o.input(&voxel::sidecar_path(path))?;
    }
    let mask = voxel::binarise(&grid, cfg.threshold_u8());
    let (clean, report) = voxel::clean_pore_space(&mask, cfg.min_component_voxels, Connectivity::TwentySix)?;
    clean.save(&o.path("mask.raw"))?;
    o.adopt("mask.raw")?;
    o.adopt("mask.json")?;
    o.json("clean_report.json", &report)?;
    let d = clean.dims();
    let sections = voxel::sectional_porosity(&clean, section_length(cfg, d.nz, clean.voxel_size()))?;
    o.csv("porosity.csv", &voxel::porosity_csv(&sections))?;
    o.finish("ingest", cfg)
}

fn load_mask(cfg: &PipelineConfig, out: &Path, o: &mut Outputs) -> Result<BinaryPoreMask, CliError> {
    let path = cfg.mask.clone().unwrap_or_else(|| out.join("mask.raw"));
    if !path.exists() {
        return Err(CliError::Input(format!("mask not found: {} (run `ingest` or set `mask`)", path.display())));
    }
    let mask = BinaryPoreMask::load(&path)?;
    o.input(&path)?;
    Ok(mask)
}

fn segment(mask: &BinaryPoreMask) -> Result<(DistanceMap, LabeledPoreSpace), CliError> {
    let dmap = poreseg::distance_transform(mask);
    let spheres = poreseg::maximal_inscribed_spheres(&dmap);
    let lps = poreseg::segment_pores(&dmap, &spheres)?;
    Ok((dmap, lps))
}

#[derive(Serialize)]
struct PermeabilityReport {
    status: &'static str,
    reason: Option<String>,
    k_m2: f64,
    k_darcy: f64,
    total_flux_m3_per_s: f64,
    delta_p_pa: f64,
    sample: SampleGeometry,
    viscosity_pa_s: f64,
    pores: usize,
    throats: usize,
    isolated_pores: usize,
    solver_residual: Option<f64>,
    solver_iterations: Option<usize>,
    mass_imbalance: Option<f64>,
}

pub fn analyze(cfg: &PipelineConfig, out: &Path) -> Result<PathBuf, CliError> {
    let mut o = Outputs::create(out, cfg)?;
    let mask = load_mask(cfg, out, &mut o)?;
    let (dmap, lps) = segment(&mask)?;
    let d = mask.dims();
    let stats = poreseg::architectural_stats(&lps, &mask, section_length(cfg, d.nz, mask.voxel_size()))?;
    o.csv("stats.csv", &poreseg::stats_csv(&stats))?;
    o.json("stats.json", &stats)?;

    let net = pnm::extract_network(&lps, &dmap, &cfg.fluid, ConductanceModel::default())?;
    o.json("network.json", &net)?;
    let sample = SampleGeometry::from_dims(d, mask.voxel_size());
    let mut report = PermeabilityReport {
        status: "ok",
        reason: None,
        k_m2: 0.0,
        k_darcy: 0.0,
        total_flux_m3_per_s: 0.0,
        delta_p_pa: cfg.delta_p_pa,
        sample,
        viscosity_pa_s: cfg.fluid.dynamic_viscosity,
        pores: net.real_pore_count(),
        throats: net.throats.len(),
        isolated_pores: 0,
        solver_residual: None,
        solver_iterations: None,
        mass_imbalance: None,
    };
    match pnm::solve_pressure(&net, cfg.delta_p_pa, 0.0) {
        Ok(sol) => {
            let k = pnm::permeability(&sol, sample, &cfg.fluid, cfg.delta_p_pa)?;
            report.k_m2 = k.k_m2;
            report.k_darcy = k.k_darcy;
            report.total_flux_m3_per_s = sol.total_flux;
            report.isolated_pores = sol.isolated.len();
            report.solver_residual = Some(sol.residual);
            report.solver_iterations = Some(sol.iterations);
            report.mass_imbalance = Some(sol.mass_imbalance);
            o.csv("pressures.csv", &pnm::pressures_csv(&net, &sol))?;
            o.csv("fluxes.csv", &pnm::fluxes_csv(&net, &sol))?;
            o.json("permeability.json", &report)?;
            particles(cfg, &net, &sol, &mut o)?;
        }
        Err(e @ (PnmError::NoSpanningPath | PnmError::DisconnectedNetwork(_))) => {
            eprintln!("warning: {e}; permeability reported as 0");
            report.status = "no_spanning_path";
            report.reason = Some(e.to_string());
            o.json("permeability.json", &report)?;
        }
        Err(e) => return Err(e.into()),
    }
    if cfg.curves_csv.is_some() {
        regime_reports(cfg, &mut o)?;
    }
    o.finish("analyze", cfg)
}

fn particles(cfg: &PipelineConfig, net: &PoreNetwork, sol: &pnm::PressureSolution, o: &mut Outputs) -> Result<(), CliError> {
    let t = match pnm::particle_tortuosity(net, sol, cfg.n_particles, cfg.seed) {
        Ok(t) => t,
        Err(PnmError::NoFlow) => {
            eprintln!("warning: no inlet flux; particle tracking skipped");
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    let mut csv = String::from("tortuosity\n");
    for v in &t.tortuosity {
        csv.push_str(&format!("{v}\n"));
    }
    o.csv("particle_tortuosity.csv", &csv)?;
    o.json(
        "particle_tortuosity.json",
        &json!({
            "n_particles": t.n_particles,
            "seed": t.seed,
            "completed": t.tortuosity.len(),
            "trapped": t.trapped,
            "summary": t.summary,
            "histogram": t.histogram,
        }),
    )?;
    Ok(())
}

#[derive(Serialize)]
struct StreamReport {
    streams: usize,
    tortuosity: porescope::stats::Summary,
    orientation: Option<streamline::FitReport>,
    orientation_error: Option<String>,
    polar_histogram: Option<porescope::stats::Histogram>,
}

pub fn flow(cfg: &PipelineConfig, out: &Path) -> Result<PathBuf, CliError> {
    if cfg.nodal_csv.is_none() && cfg.streamlines_csv.is_none() {
        return Err(CliError::Input("`flow` needs `nodal_csv`, `streamlines_csv` or both".into()));
    }
    let mut o = Outputs::create(out, cfg)?;
    let mut regressions: Vec<(String, String, streamline::RegressionResult)> = Vec::new();
    if let Some(nodal) = &cfg.nodal_csv {
        let mask = load_mask(cfg, out, &mut o)?;
        let field = flowfield::import_nodal_csv(nodal, mask.voxel_size())?;
        o.input(nodal)?;
        let vfield = flowfield::interpolate_to_voxels(&field, &mask)?;
        let (_, lps) = segment(&mask)?;
        let channels = channel_re(&vfield, &lps, &cfg.fluid)?;
        o.csv("channel_re.csv", &channel_csv(&channels))?;
        let d = mask.dims();
        let sec = Sectioning::new(d.nz, mask.voxel_size(), section_length(cfg, d.nz, mask.voxel_size()))
            .map_err(|e| CliError::Input(e.to_string()))?;
        o.csv("section_re.csv", &sectional_flow_csv(&sectional_flow_stats(&channels, &sec)))?;
        let pairs: [(&str, fn(&ChannelSection) -> f64, &str); 2] =
            [("dhyd_um", |c| c.dhyd_um, "scatter_dhyd_re.svg"), ("u_mean", |c| c.u_mean, "scatter_u_re.svg")];
        let re: Vec<f64> = channels.iter().map(|c| c.re).collect();
        for (name, get, file) in pairs {
            let x: Vec<f64> = channels.iter().map(get).collect();
            scatter(&mut o, &mut regressions, name, "re", &x, &re, file)?;
        }
    }
    if let Some(path) = &cfg.streamlines_csv {
        let streams = streamline::import_streamlines_csv(path)?;
        o.input(path)?;
        stream_reports(cfg, &streams, &mut o, &mut regressions)?;
    }
    o.csv("regression.csv", &streamline::regression_csv(&regressions))?;
    o.finish("flow", cfg)
}

/// Fits `y = a·x + b` and plots it; pairs without spread in x are skipped.
fn scatter(
    o: &mut Outputs,
    rows: &mut Vec<(String, String, streamline::RegressionResult)>,
    xname: &str,
    yname: &str,
    x: &[f64],
    y: &[f64],
    file: &str,
) -> Result<(), CliError> {
    match streamline::regress(x, y) {
        Ok(r) => {
            let pts: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
            let title = format!("{yname} vs {xname}");
            let desc = o.desc(&format!("{title}, R²={:.4}", r.r_squared));
            o.svg(file, &svg::scatter_with_fit(&pts, r.slope, r.intercept, xname, yname, &title, &desc))?;
            rows.push((xname.to_string(), yname.to_string(), r));
        }
        Err(e) => eprintln!("warning: regression {yname} ~ {xname} skipped: {e}"),
    }
    Ok(())
}

fn stream_reports(
    cfg: &PipelineConfig,
    streams: &[Streamline],
    o: &mut Outputs,
    regressions: &mut Vec<(String, String, streamline::RegressionResult)>,
) -> Result<(), CliError> {
    let aggs = streams
        .iter()
        .map(|s| streamline::stream_aggregate(s, &[], cfg.angle_mode))
        .collect::<Result<Vec<_>, _>>()?;
    o.csv("streamline_stats.csv", &streamline::aggregates_csv(&aggs))?;
    o.csv("streamline_trace.csv", &streamline::trace_csv(streams))?;
    let tort: Vec<f64> = aggs.iter().map(|a| a.tortuosity).collect();
    let mut report =
        StreamReport { streams: streams.len(), tortuosity: summarize(&tort), orientation: None, orientation_error: None, polar_histogram: None };
    match streamline::orientation_fit(streams, cfg.angle_mode) {
        Ok((angles, fit)) => {
            let h = streamline::polar_histogram(&angles, cfg.angle_mode, cfg.polar_bins);
            let desc = o.desc(&format!("von Mises fit mu={:.3} deg, kappa={:.4}, n={}", fit.mu_deg, fit.kappa, fit.n));
            o.svg("orientation_polar.svg", &svg::polar_histogram(&h.edges, &h.counts, cfg.angle_mode.period(), "Streamline orientation (XY)", &desc))?;
            report.orientation = Some(fit);
            report.polar_histogram = Some(h);
        }
        Err(e) => {
            eprintln!("warning: orientation fit skipped: {e}");
            report.orientation_error = Some(e.to_string());
        }
    }
    o.json("streamline_report.json", &report)?;

    let traces: Vec<(String, Vec<(f64, f64)>)> = streams
        .iter()
        .filter_map(|s| {
            let re = s.samples(StreamField::Re)?;
            Some((format!("stream {}", s.id), s.arc_length().into_iter().zip(re.iter().copied()).collect()))
        })
        .take(MAX_TRACES)
        .collect();
    if !traces.is_empty() {
        let desc = o.desc("Reynolds number along arc length");
        o.svg("re_traces.svg", &svg::line_traces(&traces, "arc length (µm)", "Re", "Re along streamlines", &desc))?;
    }

    for (yname, get, file) in [
        ("mean_re", (|a: &streamline::StreamAggregate| a.mean_re) as fn(&_) -> _, "scatter_tortuosity_re.svg"),
        ("mean_speed", |a| a.mean_speed, "scatter_tortuosity_speed.svg"),
    ] {
        let (x, y): (Vec<f64>, Vec<f64>) = aggs.iter().filter_map(|a| get(a).map(|v| (a.tortuosity, v))).unzip();
        if !x.is_empty() {
            scatter(o, regressions, "tortuosity", yname, &x, &y, file)?;
        }
    }
    Ok(())
}

fn regime_reports(cfg: &PipelineConfig, o: &mut Outputs) -> Result<(), CliError> {
    let path = require(&cfg.curves_csv, "curves_csv")?;
    let curves: Vec<RegimeCurve> = regime::import_curves_csv(path)?;
    o.input(path)?;
    let opts = TransitionOptions { deviation_tol: cfg.deviation_tol, reference_points: cfg.reference_points };
    let fits = curves.iter().map(|c| regime::analyze_regime(c, &cfg.fluid, opts)).collect::<Result<Vec<_>, _>>()?;
    o.csv("regime.csv", &regime::regime_csv(&fits))?;
    o.json("regime.json", &json!({ "sections": fits, "deviation_tol": cfg.deviation_tol, "reference_points": cfg.reference_points }))?;
    let mut text = String::new();
    for f in &fits {
        let transition = match f.transition.velocity {
            Some(v) => format!("{v} m/s"),
            None => "none".into(),
        };
        text.push_str(&format!(
            "section {}: k = {:.6e} m² ({:.6} D), R² = {:.6}, transition: {transition}\n",
            f.section, f.darcy.k_m2, f.darcy.k_darcy, f.darcy.r_squared
        ));
    }
    o.text("regime_report.txt", &text)?;
    o.csv("pressure_drop.csv", &regime::pressure_drop_report(&curves).to_csv())?;
    let series: Vec<(String, Vec<(f64, f64)>)> = curves
        .iter()
        .map(|c| (c.section().to_string(), c.points().iter().map(|p| (p.inlet_velocity, p.dp_per_length / 1e6)).collect()))
        .collect();
    let desc = o.desc("pressure drop per unit length against inlet velocity");
    o.svg("regime_curves.svg", &svg::line_traces(&series, "inlet velocity (m/s)", "Δp/L (MPa/m)", "Flow regime", &desc))?;
    Ok(())
}

pub fn regime(cfg: &PipelineConfig, out: &Path) -> Result<PathBuf, CliError> {
    let mut o = Outputs::create(out, cfg)?;
    regime_reports(cfg, &mut o)?;
    o.finish("regime", cfg)
}

impl From<RegimeError> for CliError {
    fn from(e: RegimeError) -> Self {
        match e {
            RegimeError::IllConditioned { .. } => CliError::Compute(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}
