//! Streamline geometry: hydraulic tortuosity, XY orientation with Von Mises
//! fits, per-stream averages and least-squares regressions.
//!
//! Streamline CSV columns are `stream_id,point_index,x,y,z` followed by any of
//! `speed,p,dhyd,re`, all in SI units (m, m/s, Pa). Positions and diameters
//! are held in µm internally.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::stats::Histogram;
use crate::UM;

/// Concentration reported when the sample is (numerically) a point mass.
pub const KAPPA_CAP: f64 = 1e4;
const KAPPA_TOL: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum StreamError {
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("streamline CSV header: {0}")]
    MalformedHeader(String),
    #[error("malformed streamline row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("stream {0} has fewer than 2 points")]
    TooShort(u64),
    #[error("stream {id}: point {index} repeats its predecessor")]
    RepeatedPoint { id: u64, index: usize },
    #[error("stream {0} ends where it starts")]
    ClosedPath(u64),
    #[error("stream {0} has no net XY displacement")]
    DegenerateXY(u64),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("stream {id} has no `{field}` samples")]
    MissingSamples { id: u64, field: &'static str },
    #[error("x has zero variance")]
    ZeroVariance,
    #[error("x and y lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

/// Optional per-point quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum StreamField {
    Speed,
    Pressure,
    Dhyd,
    Re,
}

impl StreamField {
    pub const ALL: [StreamField; 4] = [StreamField::Speed, StreamField::Pressure, StreamField::Dhyd, StreamField::Re];

    pub fn column(self) -> &'static str {
        match self {
            StreamField::Speed => "speed",
            StreamField::Pressure => "p",
            StreamField::Dhyd => "dhyd",
            StreamField::Re => "re",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Streamline {
    pub id: u64,
    /// µm
    pub points: Vec<[f64; 3]>,
    /// m/s
    pub speed: Option<Vec<f64>>,
    /// Pa
    pub pressure: Option<Vec<f64>>,
    /// µm
    pub dhyd_um: Option<Vec<f64>>,
    pub re: Option<Vec<f64>>,
}

impl Streamline {
    /// Checks n ≥ 2 and that consecutive points differ.
    pub fn new(id: u64, points: Vec<[f64; 3]>) -> Result<Self, StreamError> {
        if points.len() < 2 {
            return Err(StreamError::TooShort(id));
        }
        if let Some(k) = points.windows(2).position(|w| w[0] == w[1]) {
            return Err(StreamError::RepeatedPoint { id, index: k + 1 });
        }
        Ok(Streamline { id, points, speed: None, pressure: None, dhyd_um: None, re: None })
    }

    pub fn samples(&self, field: StreamField) -> Option<&[f64]> {
        match field {
            StreamField::Speed => self.speed.as_deref(),
            StreamField::Pressure => self.pressure.as_deref(),
            StreamField::Dhyd => self.dhyd_um.as_deref(),
            StreamField::Re => self.re.as_deref(),
        }
    }

    fn samples_mut(&mut self, field: StreamField) -> &mut Option<Vec<f64>> {
        match field {
            StreamField::Speed => &mut self.speed,
            StreamField::Pressure => &mut self.pressure,
            StreamField::Dhyd => &mut self.dhyd_um,
            StreamField::Re => &mut self.re,
        }
    }

    /// Cumulative arc length at each point, µm.
    pub fn arc_length(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.points.len());
        out.push(0.0);
        for w in self.points.windows(2) {
            acc += dist(&w[0], &w[1]);
            out.push(acc);
        }
        out
    }
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2) + (b[2] - a[2]).powi(2)).sqrt()
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Parses streamline CSV text. Streams keep the order in which their ids
/// first appear; points are ordered by `point_index`.
pub fn parse_streamlines_csv(text: &str) -> Result<Vec<Streamline>, StreamError> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| StreamError::MalformedHeader(e.to_string()))?.clone();
    let required = ["stream_id", "point_index", "x", "y", "z"];
    if header.len() < 5 || header.iter().take(5).ne(required.iter().copied()) {
        return Err(StreamError::MalformedHeader(format!(
            "must start with `stream_id,point_index,x,y,z`, found `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut extra: Vec<StreamField> = Vec::new();
    for name in header.iter().skip(5) {
        let f = StreamField::ALL
            .into_iter()
            .find(|f| f.column() == name)
            .ok_or_else(|| StreamError::MalformedHeader(format!("unknown column `{name}`")))?;
        if extra.contains(&f) {
            return Err(StreamError::MalformedHeader(format!("duplicate column `{name}`")));
        }
        extra.push(f);
    }
    type Rows = BTreeMap<usize, ([f64; 3], Vec<f64>)>;
    let mut order: Vec<u64> = Vec::new();
    let mut streams: BTreeMap<u64, Rows> = BTreeMap::new();
    for (k, rec) in reader.records().enumerate() {
        let row = k + 2;
        let bad = |reason: String| StreamError::MalformedRow { row, reason };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != header.len() {
            return Err(bad(format!("{} fields, expected {}", rec.len(), header.len())));
        }
        let id: u64 = rec[0].parse().map_err(|_| bad(format!("stream_id `{}` is not an unsigned integer", &rec[0])))?;
        let index: usize =
            rec[1].parse().map_err(|_| bad(format!("point_index `{}` is not an unsigned integer", &rec[1])))?;
        let mut vals = Vec::with_capacity(rec.len() - 2);
        for (j, field) in rec.iter().enumerate().skip(2) {
            let v: f64 = field.parse().map_err(|_| bad(format!("column {} is not a number: `{field}`", &header[j])))?;
            if !v.is_finite() {
                return Err(bad(format!("column {} is not finite", &header[j])));
            }
            vals.push(v);
        }
        let pos = [vals[0] / UM, vals[1] / UM, vals[2] / UM];
        let entry = streams.entry(id).or_insert_with(|| {
            order.push(id);
            BTreeMap::new()
        });
        if entry.insert(index, (pos, vals[3..].to_vec())).is_some() {
            return Err(bad(format!("stream {id} repeats point_index {index}")));
        }
    }
    order
        .into_iter()
        .map(|id| {
            let rows = &streams[&id];
            let mut s = Streamline::new(id, rows.values().map(|r| r.0).collect())?;
            for (j, &f) in extra.iter().enumerate() {
                let scale = if f == StreamField::Dhyd { 1.0 / UM } else { 1.0 };
                *s.samples_mut(f) = Some(rows.values().map(|r| r.1[j] * scale).collect());
            }
            Ok(s)
        })
        .collect()
}

pub fn import_streamlines_csv(path: &Path) -> Result<Vec<Streamline>, StreamError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| StreamError::Io { path: path.display().to_string(), source })?;
    parse_streamlines_csv(&text)
}

/// Inverse of [`parse_streamlines_csv`]; optional columns are written when
/// every stream carries them.
pub fn streamlines_csv(streams: &[Streamline]) -> String {
    let fields: Vec<StreamField> =
        StreamField::ALL.into_iter().filter(|&f| !streams.is_empty() && streams.iter().all(|s| s.samples(f).is_some())).collect();
    let mut s = String::from("stream_id,point_index,x,y,z");
    for f in &fields {
        s.push(',');
        s.push_str(f.column());
    }
    s.push('\n');
    for st in streams {
        for (i, p) in st.points.iter().enumerate() {
            s.push_str(&format!("{},{},{},{},{}", st.id, i, p[0] * UM, p[1] * UM, p[2] * UM));
            for &f in &fields {
                let v = st.samples(f).expect("checked above")[i];
                let v = if f == StreamField::Dhyd { v * UM } else { v };
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
    }
    s
}

/// Polyline length over the end-to-end chord, exactly 1 when the points
/// advance monotonically along a straight line.
pub fn stream_tortuosity(s: &Streamline) -> Result<f64, StreamError> {
    let first = s.points[0];
    let last = *s.points.last().expect("n >= 2");
    let chord = dist(&first, &last);
    if chord == 0.0 {
        return Err(StreamError::ClosedPath(s.id));
    }
    let c = sub(&last, &first);
    let mut length = 0.0;
    let mut straight = true;
    for w in s.points.windows(2) {
        let seg = sub(&w[1], &w[0]);
        let l = dist(&w[0], &w[1]);
        length += l;
        let cross = [seg[1] * c[2] - seg[2] * c[1], seg[2] * c[0] - seg[0] * c[2], seg[0] * c[1] - seg[1] * c[0]];
        let cross_norm = (cross[0].powi(2) + cross[1].powi(2) + cross[2].powi(2)).sqrt();
        let dot = seg[0] * c[0] + seg[1] * c[1] + seg[2] * c[2];
        if dot <= 0.0 || cross_norm > 1e-12 * l * chord {
            straight = false;
        }
    }
    if straight {
        return Ok(1.0);
    }
    Ok((length / chord).max(1.0))
}

/// Angle convention for orientations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleMode {
    /// Period 180°: a direction and its reverse are the same orientation.
    #[default]
    Axial,
    /// Period 360°.
    Full,
}

impl AngleMode {
    pub fn period(self) -> f64 {
        match self {
            AngleMode::Axial => 180.0,
            AngleMode::Full => 360.0,
        }
    }

    /// Reduces into `[0, period)`.
    pub fn reduce(self, deg: f64) -> f64 {
        let p = self.period();
        let r = deg.rem_euclid(p);
        if r >= p {
            0.0
        } else {
            r
        }
    }
}

/// Direction of the net XY displacement, degrees in `[0, period)`.
pub fn stream_orientation_xy(s: &Streamline, mode: AngleMode) -> Result<f64, StreamError> {
    let first = s.points[0];
    let last = *s.points.last().expect("n >= 2");
    let (dx, dy) = (last[0] - first[0], last[1] - first[1]);
    if dx == 0.0 && dy == 0.0 {
        return Err(StreamError::DegenerateXY(s.id));
    }
    Ok(mode.reduce(dy.atan2(dx).to_degrees()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VonMisesFit {
    /// Preferential direction in `[0, period)`.
    pub mu_deg: f64,
    pub kappa: f64,
    pub n: usize,
    pub mode: AngleMode,
    /// Mean resultant length of the (doubled, for axial data) angles.
    pub mean_resultant_length: f64,
}

/// `A(κ) = I₁(κ)/I₀(κ)`.
pub fn bessel_ratio(kappa: f64) -> f64 {
    if kappa <= 0.0 {
        return 0.0;
    }
    if kappa > 500.0 {
        let k = kappa;
        return 1.0 - 1.0 / (2.0 * k) - 1.0 / (8.0 * k * k) - 1.0 / (8.0 * k * k * k);
    }
    // power series of I0 and I1 share the factor (κ/2)^(2j) / j!²
    let q = 0.25 * kappa * kappa;
    let (mut t0, mut t1) = (1.0, 0.5 * kappa);
    let (mut s0, mut s1) = (t0, t1);
    for j in 1..2000 {
        let jf = j as f64;
        t0 *= q / (jf * jf);
        t1 *= q / (jf * (jf + 1.0));
        s0 += t0;
        s1 += t1;
        if t0 < 1e-17 * s0 && jf > kappa {
            break;
        }
    }
    s1 / s0
}

/// Solves `A(κ) = r̄` by Newton iteration from the closed-form start
/// `r̄(2 − r̄²)/(1 − r̄²)`; capped at [`KAPPA_CAP`].
pub fn kappa_from_resultant(rbar: f64) -> f64 {
    if !(rbar > 0.0) {
        return 0.0;
    }
    if rbar >= bessel_ratio(KAPPA_CAP) {
        return KAPPA_CAP;
    }
    let mut k = (rbar * (2.0 - rbar * rbar) / (1.0 - rbar * rbar)).min(KAPPA_CAP);
    for _ in 0..100 {
        let a = bessel_ratio(k);
        let da = 1.0 - a / k - a * a;
        let mut next = k - (a - rbar) / da;
        if !(next > 0.0) {
            next = 0.5 * k;
        }
        let step = (next - k).abs();
        k = next.min(KAPPA_CAP);
        if step <= KAPPA_TOL * k.max(1.0) {
            break;
        }
    }
    k
}

/// Maximum-likelihood Von Mises fit. Axial data are doubled before fitting
/// and the direction halved afterwards; κ then describes the doubled angles.
pub fn fit_von_mises(angles_deg: &[f64], mode: AngleMode) -> Result<VonMisesFit, StreamError> {
    let n = angles_deg.len();
    if n < 5 {
        return Err(StreamError::TooFewSamples { needed: 5, got: n });
    }
    let m = match mode {
        AngleMode::Axial => 2.0,
        AngleMode::Full => 1.0,
    };
    let (mut c, mut s) = (0.0, 0.0);
    for a in angles_deg {
        let t = (m * a).to_radians();
        c += t.cos();
        s += t.sin();
    }
    let (c, s) = (c / n as f64, s / n as f64);
    let rbar = (c * c + s * s).sqrt().min(1.0);
    let mu = mode.reduce(s.atan2(c).to_degrees() / m);
    Ok(VonMisesFit { mu_deg: mu, kappa: kappa_from_resultant(rbar), n, mode, mean_resultant_length: rbar })
}

/// `n` Von Mises draws in degrees (Best–Fisher), reduced to `[0, 360)`.
pub fn sample_von_mises(mu_deg: f64, kappa: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu = mu_deg.to_radians();
    if kappa < 1e-8 {
        return (0..n).map(|_| rng.random::<f64>() * 360.0).collect();
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    (0..n)
        .map(|_| loop {
            let u1: f64 = rng.random();
            let z = (PI * u1).cos();
            let f = (1.0 + r * z) / (r + z);
            let c = kappa * (r - f);
            let u2: f64 = rng.random();
            if c * (2.0 - c) > u2 || (c / u2).ln() + 1.0 >= c {
                let u3: f64 = rng.random();
                let theta = mu + if u3 > 0.5 { f.acos() } else { -f.acos() };
                break theta.rem_euclid(TAU).to_degrees();
            }
        })
        .collect()
}

/// JSON fit report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub mu_deg: f64,
    pub kappa: f64,
    pub n: usize,
    /// Streams without XY displacement.
    pub excluded: usize,
    pub mode: AngleMode,
}

/// Orientation of every stream and the Von Mises fit over the
/// non-degenerate ones.
pub fn orientation_fit(streams: &[Streamline], mode: AngleMode) -> Result<(Vec<f64>, FitReport), StreamError> {
    let mut angles = Vec::with_capacity(streams.len());
    let mut excluded = 0;
    for s in streams {
        match stream_orientation_xy(s, mode) {
            Ok(a) => angles.push(a),
            Err(StreamError::DegenerateXY(_)) => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    let fit = fit_von_mises(&angles, mode)?;
    Ok((angles, FitReport { mu_deg: fit.mu_deg, kappa: fit.kappa, n: fit.n, excluded, mode }))
}

/// Counts per angular bin over `[0, period)`.
pub fn polar_histogram(angles_deg: &[f64], mode: AngleMode, bins: usize) -> Histogram {
    let reduced: Vec<f64> = angles_deg.iter().map(|&a| mode.reduce(a)).collect();
    Histogram::uniform(&reduced, 0.0, mode.period(), bins)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamAggregate {
    pub id: u64,
    pub n_points: usize,
    pub tortuosity: f64,
    /// `None` for streams without XY displacement.
    pub orientation_deg: Option<f64>,
    pub mean_speed: Option<f64>,
    pub mean_pressure: Option<f64>,
    pub mean_dhyd_um: Option<f64>,
    pub mean_re: Option<f64>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Arithmetic means of every sampled quantity plus tortuosity and
/// orientation. Fields listed in `required` must be present.
pub fn stream_aggregate(s: &Streamline, required: &[StreamField], mode: AngleMode) -> Result<StreamAggregate, StreamError> {
    if let Some(f) = required.iter().find(|f| s.samples(**f).is_none()) {
        return Err(StreamError::MissingSamples { id: s.id, field: f.column() });
    }
    let orientation = match stream_orientation_xy(s, mode) {
        Ok(a) => Some(a),
        Err(StreamError::DegenerateXY(_)) => None,
        Err(e) => return Err(e),
    };
    let m = |f| s.samples(f).map(mean);
    Ok(StreamAggregate {
        id: s.id,
        n_points: s.points.len(),
        tortuosity: stream_tortuosity(s)?,
        orientation_deg: orientation,
        mean_speed: m(StreamField::Speed),
        mean_pressure: m(StreamField::Pressure),
        mean_dhyd_um: m(StreamField::Dhyd),
        mean_re: m(StreamField::Re),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `stream_id,n_points,tortuosity,orientation_deg,mean_speed,mean_p,mean_dhyd_um,mean_re`;
/// absent values are empty cells.
pub fn aggregates_csv(rows: &[StreamAggregate]) -> String {
    let mut s = String::from("stream_id,n_points,tortuosity,orientation_deg,mean_speed,mean_p,mean_dhyd_um,mean_re\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.id,
            r.n_points,
            r.tortuosity,
            opt(r.orientation_deg),
            opt(r.mean_speed),
            opt(r.mean_pressure),
            opt(r.mean_dhyd_um),
            opt(r.mean_re)
        ));
    }
    s
}

/// Per-point trace along arc length:
/// `stream_id,point_index,arc_length_um,x_um,y_um,z_um,speed,p,dhyd_um,re`.
pub fn trace_csv(streams: &[Streamline]) -> String {
    let mut s = String::from("stream_id,point_index,arc_length_um,x_um,y_um,z_um,speed,p,dhyd_um,re\n");
    for st in streams {
        let arc = st.arc_length();
        for (i, p) in st.points.iter().enumerate() {
            let at = |f| opt(st.samples(f).map(|v| v[i]));
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                st.id,
                i,
                arc[i],
                p[0],
                p[1],
                p[2],
                at(StreamField::Speed),
                at(StreamField::Pressure),
                at(StreamField::Dhyd),
                at(StreamField::Re)
            ));
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    /// `1 − SS_res/SS_tot` clamped to [0, 1]; 1 when y is constant.
    pub r_squared: f64,
    pub n: usize,
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn regress(x: &[f64], y: &[f64]) -> Result<RegressionResult, StreamError> {
    if x.len() != y.len() {
        return Err(StreamError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(StreamError::TooFewSamples { needed: 2, got: n });
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(StreamError::ZeroVariance);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    Ok(RegressionResult { slope, intercept, r_squared: r2, n })
}

/// One row per named regression: `x,y,slope,intercept,r_squared,n`.
pub fn regression_csv(rows: &[(String, String, RegressionResult)]) -> String {
    let mut s = String::from("x,y,slope,intercept,r_squared,n\n");
    for (x, y, r) in rows {
        s.push_str(&format!("{x},{y},{},{},{},{}\n", r.slope, r.intercept, r.r_squared, r.n));
    }
    s
}

/// Synthetic streams for tests and demos.
pub mod fixtures {
    use super::*;

    /// Half circle of radius `r` µm in the XZ plane, one point per degree.
    pub fn semicircle(id: u64, r: f64) -> Streamline {
        let pts = (0..=180)
            .map(|d| {
                let t = (d as f64).to_radians();
                [r - r * t.cos(), 0.0, r * t.sin()]
            })
            .collect();
        Streamline::new(id, pts).expect("distinct points")
    }

    /// Helix about the z axis with radius `r` and pitch `p` (µm per turn)
    /// over `turns` turns, one point per degree.
    pub fn helix(id: u64, r: f64, pitch: f64, turns: f64) -> Streamline {
        let n = (360.0 * turns).round() as usize;
        let pts = (0..=n)
            .map(|d| {
                let t = (d as f64).to_radians();
                [r * t.cos(), r * t.sin(), pitch * t / TAU]
            })
            .collect();
        Streamline::new(id, pts).expect("distinct points")
    }

    /// Straight stream from `a` to `b` through `n` evenly spaced points.
    pub fn straight(id: u64, a: [f64; 3], b: [f64; 3], n: usize) -> Streamline {
        let pts = (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])]
            })
            .collect();
        Streamline::new(id, pts).expect("distinct points")
    }

    /// Two-point streams whose XY directions are Von Mises draws; each rises
    /// 100 µm in z, and carries constant speed `v`.
    pub fn oriented_streams(mu_deg: f64, kappa: f64, n: usize, seed: u64, v: f64) -> Vec<Streamline> {
        sample_von_mises(mu_deg, kappa, n, seed)
            .into_iter()
            .enumerate()
            .map(|(i, a)| {
                let t = a.to_radians();
                let mut s = Streamline::new(i as u64, vec![[0.0, 0.0, 0.0], [50.0 * t.cos(), 50.0 * t.sin(), 100.0]])
                    .expect("distinct points");
                s.speed = Some(vec![v, v]);
                s
            })
            .collect()
    }
}
