//! Darcy and Forchheimer fits of pressure-drop curves and detection of the
//! Darcian to non-Darcian transition.

use std::path::Path;

use serde::Serialize;

use crate::{m2_to_darcy, FluidProps};

#[derive(Debug, thiserror::Error)]
pub enum RegimeError {
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("curve CSV header must be `section,inlet_velocity_mps,dp_per_length_pa_per_m`, found `{0}`")]
    MalformedHeader(String),
    #[error("malformed curve row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("curve file has no data rows")]
    Empty,
    #[error("invalid curve `{section}`: {reason}")]
    InvalidCurve { section: String, reason: String },
    #[error("need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("Forchheimer fit is ill-conditioned (condition number {condition:e}): {reason}")]
    IllConditioned { condition: f64, reason: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimePoint {
    /// m/s
    pub inlet_velocity: f64,
    /// Pa/m
    pub dp_per_length: f64,
}

/// Pressure drop per length against inlet velocity for one section.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeCurve {
    section: String,
    points: Vec<RegimePoint>,
}

impl RegimeCurve {
    /// Requires velocities strictly increasing and positive, Δp/L positive.
    pub fn new(section: impl Into<String>, points: Vec<RegimePoint>) -> Result<Self, RegimeError> {
        let section = section.into();
        let bad = |reason: String| RegimeError::InvalidCurve { section: section.clone(), reason };
        if points.is_empty() {
            return Err(bad("no points".into()));
        }
        for p in &points {
            if !(p.inlet_velocity > 0.0 && p.inlet_velocity.is_finite()) {
                return Err(bad(format!("velocity {} is not positive", p.inlet_velocity)));
            }
            if !(p.dp_per_length > 0.0 && p.dp_per_length.is_finite()) {
                return Err(bad(format!("pressure drop {} is not positive", p.dp_per_length)));
            }
        }
        if let Some(w) = points.windows(2).find(|w| w[1].inlet_velocity <= w[0].inlet_velocity) {
            return Err(bad(format!("velocities not strictly increasing at {}", w[1].inlet_velocity)));
        }
        Ok(RegimeCurve { section, points })
    }

    /// Builds from `(v, Δp/L)` pairs.
    pub fn from_pairs(section: impl Into<String>, pairs: &[(f64, f64)]) -> Result<Self, RegimeError> {
        RegimeCurve::new(
            section,
            pairs.iter().map(|&(v, dp)| RegimePoint { inlet_velocity: v, dp_per_length: dp }).collect(),
        )
    }

    pub fn section(&self) -> &str {
        &self.section
    }

    pub fn points(&self) -> &[RegimePoint] {
        &self.points
    }

    pub fn velocities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.inlet_velocity).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DarcyFit {
    /// µ/k, Pa·s/m²
    pub slope: f64,
    pub k_m2: f64,
    pub k_darcy: f64,
    pub r_squared: f64,
    pub n: usize,
    pub v_max: f64,
}

fn r_squared(y: &[f64], pred: impl Iterator<Item = f64>) -> f64 {
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(pred).map(|(a, b)| (a - b).powi(2)).sum();
    if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    }
}

/// Zero-intercept least squares of Δp/L against v over points with
/// `v ≤ v_max`; `k = µ / slope`.
pub fn fit_darcy(curve: &RegimeCurve, props: &FluidProps, v_max: f64) -> Result<DarcyFit, RegimeError> {
    let pts: Vec<&RegimePoint> = curve.points.iter().filter(|p| p.inlet_velocity <= v_max).collect();
    if pts.len() < 2 {
        return Err(RegimeError::InsufficientPoints { needed: 2, got: pts.len() });
    }
    let sxy: f64 = pts.iter().map(|p| p.inlet_velocity * p.dp_per_length).sum();
    let sxx: f64 = pts.iter().map(|p| p.inlet_velocity * p.inlet_velocity).sum();
    let slope = sxy / sxx;
    let y: Vec<f64> = pts.iter().map(|p| p.dp_per_length).collect();
    let k = props.dynamic_viscosity / slope;
    Ok(DarcyFit {
        slope,
        k_m2: k,
        k_darcy: m2_to_darcy(k),
        r_squared: r_squared(&y, pts.iter().map(|p| slope * p.inlet_velocity)),
        n: pts.len(),
        v_max: pts.last().expect("n >= 2").inlet_velocity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForchheimerFit {
    /// Linear coefficient µ/k, Pa·s/m².
    pub linear: f64,
    /// Quadratic coefficient βρ, Pa·s²/m³.
    pub quadratic: f64,
    pub k_m2: f64,
    pub k_darcy: f64,
    /// 1/m
    pub beta: f64,
    pub r_squared: f64,
    /// 2-norm condition number of the column-scaled design matrix.
    pub condition: f64,
    pub n: usize,
}

const MAX_CONDITION: f64 = 1e10;

/// Least squares of `Δp/L = (µ/k)·v + βρ·v²` (no constant term) through a
/// QR factorisation of the column-scaled design matrix.
pub fn fit_forchheimer(curve: &RegimeCurve, props: &FluidProps) -> Result<ForchheimerFit, RegimeError> {
    let n = curve.points.len();
    if n < 3 {
        return Err(RegimeError::InsufficientPoints { needed: 3, got: n });
    }
    let v: Vec<f64> = curve.velocities();
    let y: Vec<f64> = curve.points.iter().map(|p| p.dp_per_length).collect();
    let c1: Vec<f64> = v.clone();
    let c2: Vec<f64> = v.iter().map(|x| x * x).collect();
    let norm = |c: &[f64]| c.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (s1, s2) = (norm(&c1), norm(&c2));
    let q1: Vec<f64> = c1.iter().map(|x| x / s1).collect();
    let a2: Vec<f64> = c2.iter().map(|x| x / s2).collect();
    // modified Gram–Schmidt on two unit columns
    let r11 = 1.0;
    let r12: f64 = q1.iter().zip(&a2).map(|(a, b)| a * b).sum();
    let rest: Vec<f64> = a2.iter().zip(&q1).map(|(a, q)| a - r12 * q).collect();
    let r22 = norm(&rest);
    // singular values of [[r11, r12], [0, r22]]
    let t = r11 * r11 + r12 * r12 + r22 * r22;
    let det = (r11 * r22).abs();
    let disc = (t * t - 4.0 * det * det).max(0.0).sqrt();
    let smax = ((t + disc) / 2.0).sqrt();
    let smin = det / smax;
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(RegimeError::IllConditioned { condition, reason: "velocity columns are nearly dependent".into() });
    }
    let q2: Vec<f64> = rest.iter().map(|x| x / r22).collect();
    let qty1: f64 = q1.iter().zip(&y).map(|(a, b)| a * b).sum();
    let qty2: f64 = q2.iter().zip(&y).map(|(a, b)| a * b).sum();
    let z2 = qty2 / r22;
    let z1 = (qty1 - r12 * z2) / r11;
    let (lin, quad) = (z1 / s1, z2 / s2);
    let vmax = *v.last().expect("n >= 3");
    if !(lin > 1e-9 * (lin.abs() + quad.abs() * vmax)) {
        return Err(RegimeError::IllConditioned {
            condition,
            reason: format!("linear coefficient {lin:e} is not positive; permeability unbounded"),
        });
    }
    let k = props.dynamic_viscosity / lin;
    Ok(ForchheimerFit {
        linear: lin,
        quadratic: quad,
        k_m2: k,
        k_darcy: m2_to_darcy(k),
        beta: quad / props.density,
        r_squared: r_squared(&y, v.iter().map(|x| lin * x + quad * x * x)),
        condition,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct TransitionOptions {
    /// Relative deviation from the Darcy line that marks the transition.
    pub deviation_tol: f64,
    /// Lowest-velocity points that define the Darcy reference line.
    pub reference_points: usize,
}

impl Default for TransitionOptions {
    fn default() -> Self {
        TransitionOptions { deviation_tol: 0.05, reference_points: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transition {
    /// First sampled velocity whose deviation exceeds the tolerance.
    pub velocity: Option<f64>,
    /// Index of that point in the curve.
    pub index: Option<usize>,
    /// Reference slope µ/k from the lowest points.
    pub reference_slope: f64,
    /// Largest deviation over the points accepted as linear.
    pub max_linear_deviation: f64,
}

/// Walks up the curve from the reference prefix; each next point is
/// compared with the zero-intercept Darcy line of the lowest
/// `reference_points` points, and the first one deviating by more than
/// `deviation_tol` (relative) is the transition.
pub fn detect_transition(curve: &RegimeCurve, opts: TransitionOptions) -> Result<Transition, RegimeError> {
    let n = curve.points.len();
    if n < 4 {
        return Err(RegimeError::InsufficientPoints { needed: 4, got: n });
    }
    if !(opts.deviation_tol >= 0.0) {
        return Err(RegimeError::InvalidArgument(format!("deviation_tol must be ≥ 0, got {}", opts.deviation_tol)));
    }
    let m = opts.reference_points.clamp(2, n - 1);
    let pre = &curve.points[..m];
    let slope = pre.iter().map(|p| p.inlet_velocity * p.dp_per_length).sum::<f64>()
        / pre.iter().map(|p| p.inlet_velocity * p.inlet_velocity).sum::<f64>();
    let dev = |p: &RegimePoint| {
        let pred = slope * p.inlet_velocity;
        (p.dp_per_length - pred).abs() / pred
    };
    let mut max_dev = pre.iter().map(dev).fold(0.0, f64::max);
    for (i, p) in curve.points.iter().enumerate().skip(m) {
        let d = dev(p);
        if d > opts.deviation_tol {
            return Ok(Transition { velocity: Some(p.inlet_velocity), index: Some(i), reference_slope: slope, max_linear_deviation: max_dev });
        }
        max_dev = max_dev.max(d);
    }
    Ok(Transition { velocity: None, index: None, reference_slope: slope, max_linear_deviation: max_dev })
}

/// Fit summary for one section.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeFit {
    pub section: String,
    /// Darcy fit on the reference (lowest-velocity) points: the permeability.
    pub darcy: DarcyFit,
    /// Darcy fit over every point below the transition.
    pub linear_region: DarcyFit,
    /// `None` when the curve has fewer than 3 points or the fit is
    /// ill-conditioned (see `forchheimer_error`).
    pub forchheimer: Option<ForchheimerFit>,
    pub forchheimer_error: Option<String>,
    pub transition: Transition,
}

pub fn analyze_regime(curve: &RegimeCurve, props: &FluidProps, opts: TransitionOptions) -> Result<RegimeFit, RegimeError> {
    let transition = detect_transition(curve, opts)?;
    let m = opts.reference_points.clamp(2, curve.points.len() - 1);
    let darcy = fit_darcy(curve, props, curve.points[m - 1].inlet_velocity)?;
    let last_linear = match transition.index {
        Some(i) => curve.points[i - 1].inlet_velocity,
        None => f64::INFINITY,
    };
    let linear_region = fit_darcy(curve, props, last_linear)?;
    let (forchheimer, forchheimer_error) = match fit_forchheimer(curve, props) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(RegimeFit { section: curve.section.clone(), darcy, linear_region, forchheimer, forchheimer_error, transition })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "none".into())
}

/// `section,k_m2,k_darcy,r2_linear,transition_velocity_mps,max_linear_deviation,forchheimer_k_darcy,beta_per_m`
pub fn regime_csv(fits: &[RegimeFit]) -> String {
    let mut s = String::from(
        "section,k_m2,k_darcy,r2_linear,transition_velocity_mps,max_linear_deviation,forchheimer_k_darcy,beta_per_m\n",
    );
    for f in fits {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            f.section,
            f.darcy.k_m2,
            f.darcy.k_darcy,
            f.linear_region.r_squared,
            opt(f.transition.velocity),
            f.transition.max_linear_deviation,
            opt(f.forchheimer.map(|x| x.k_darcy)),
            opt(f.forchheimer.map(|x| x.beta)),
        ));
    }
    s
}

pub const CURVE_HEADER: [&str; 3] = ["section", "inlet_velocity_mps", "dp_per_length_pa_per_m"];

/// Parses curve CSV text into one curve per section, in order of first
/// appearance.
pub fn parse_curves_csv(text: &str) -> Result<Vec<RegimeCurve>, RegimeError> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| RegimeError::MalformedHeader(e.to_string()))?.clone();
    if header.iter().ne(CURVE_HEADER.iter().copied()) {
        return Err(RegimeError::MalformedHeader(header.iter().collect::<Vec<_>>().join(",")));
    }
    let mut groups: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| RegimeError::MalformedRow { row, reason: e.to_string() })?;
        let num = |j: usize| -> Result<f64, RegimeError> {
            rec[j].parse().map_err(|_| RegimeError::MalformedRow { row, reason: format!("`{}` is not a number", &rec[j]) })
        };
        let (v, dp) = (num(1)?, num(2)?);
        let section = rec[0].to_string();
        match groups.iter_mut().find(|g| g.0 == section) {
            Some(g) => g.1.push((v, dp)),
            None => groups.push((section, vec![(v, dp)])),
        }
    }
    if groups.is_empty() {
        return Err(RegimeError::Empty);
    }
    groups.into_iter().map(|(s, pairs)| RegimeCurve::from_pairs(s, &pairs)).collect()
}

pub fn import_curves_csv(path: &Path) -> Result<Vec<RegimeCurve>, RegimeError> {
    let text = std::fs::read_to_string(path).map_err(|source| RegimeError::Io { path: path.display().to_string(), source })?;
    parse_curves_csv(&text)
}

pub fn curves_csv(curves: &[RegimeCurve]) -> String {
    let mut s = CURVE_HEADER.join(",");
    s.push('\n');
    for c in curves {
        for p in &c.points {
            s.push_str(&format!("{},{},{}\n", c.section, p.inlet_velocity, p.dp_per_length));
        }
    }
    s
}

/// Sections by inlet velocity, values in MPa/m, with an `average` row over
/// the sections sampled at each velocity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PressureDropTable {
    pub velocities: Vec<f64>,
    pub sections: Vec<String>,
    /// `rows[section][velocity]`, MPa/m.
    pub rows: Vec<Vec<Option<f64>>>,
    pub average: Vec<f64>,
}

pub fn pressure_drop_report(curves: &[RegimeCurve]) -> PressureDropTable {
    let mut velocities: Vec<f64> = curves.iter().flat_map(|c| c.velocities()).collect();
    velocities.sort_by(f64::total_cmp);
    velocities.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    let rows: Vec<Vec<Option<f64>>> = curves
        .iter()
        .map(|c| {
            velocities
                .iter()
                .map(|&v| {
                    c.points
                        .iter()
                        .find(|p| (p.inlet_velocity - v).abs() <= 1e-12 * v)
                        .map(|p| p.dp_per_length / 1e6)
                })
                .collect()
        })
        .collect();
    let average = (0..velocities.len())
        .map(|j| {
            let vals: Vec<f64> = rows.iter().filter_map(|r| r[j]).collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        })
        .collect();
    PressureDropTable { velocities, sections: curves.iter().map(|c| c.section.clone()).collect(), rows, average }
}

impl PressureDropTable {
    /// Header `section,<v₁>,<v₂>,…` (velocities in m/s); cells MPa/m.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("section");
        for v in &self.velocities {
            s.push_str(&format!(",{v}"));
        }
        s.push('\n');
        for (name, row) in self.sections.iter().zip(&self.rows) {
            s.push_str(name);
            for c in row {
                s.push(',');
                if let Some(x) = c {
                    s.push_str(&x.to_string());
                }
            }
            s.push('\n');
        }
        s.push_str("average");
        for a in &self.average {
            s.push_str(&format!(",{a}"));
        }
        s.push('\n');
        s
    }
}

/// Forward Forchheimer model `Δp/L = (µ/k)·v + βρ·v²` at the given
/// velocities.
pub fn forchheimer_curve(section: &str, velocities: &[f64], k_m2: f64, beta: f64, props: &FluidProps) -> RegimeCurve {
    let pairs: Vec<(f64, f64)> = velocities
        .iter()
        .map(|&v| (v, props.dynamic_viscosity / k_m2 * v + beta * props.density * v * v))
        .collect();
    RegimeCurve::from_pairs(section, &pairs).expect("positive increasing velocities")
}
