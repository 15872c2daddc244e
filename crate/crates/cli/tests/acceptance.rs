//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Every expected value is computed here from an
//! independent oracle rather than taken from the library.

mod common;

use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::*;
use porescope::flowfield::{channel_re, reynolds, VoxelFlowField};
use porescope::pnm::{self, fixtures as nets, PoreNetwork};
use porescope::poreseg::{fixtures as phantoms, LabeledPoreSpace};
use porescope::streamline::{self, fixtures as streams, AngleMode, Streamline};
use porescope::voxel::{BinaryPoreMask, Dims};
use porescope::{darcy_to_m2, m2_to_darcy, FluidProps, DARCY_M2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

// 1 ------------------------------------------------------------------------

/// Hagen–Poiseuille through one tube divided by Darcy over the block face:
/// k = πr⁴ / (8A).
fn tube_oracle(r_vox: f64, n: usize, vs_um: f64) -> f64 {
    let r = r_vox * vs_um * 1e-6;
    let side = n as f64 * vs_um * 1e-6;
    PI * r.powi(4) / (8.0 * side * side)
}

fn straight_tube() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("tube.raw");
    let out = dir.path().join("out");
    write_volume(&tube_mask(128, 128, 12.0, 6.25), &raw);
    let t0 = Instant::now();
    ensure(ok(&porescope(&["ingest", "--volume", s(&raw), "--out", s(&out)], Some(1))), || "ingest failed".into())?;
    ensure(ok(&porescope(&["analyze", "--out", s(&out)], Some(1))), || "analyze failed".into())?;
    let secs = t0.elapsed().as_secs_f64();
    let k = read_json(&out.join("permeability.json"))["k_m2"].as_f64().unwrap();
    let k0 = tube_oracle(12.0, 128, 6.25);
    let e = rel(k, k0);
    ensure(e <= 0.05, || format!("k = {k:e} m², analytic {k0:e}, error {:.2}% > 5%", 100.0 * e))?;
    ensure(secs < 30.0, || format!("ingest + analyze took {secs:.1} s single-threaded (limit 30 s)"))?;
    Ok(format!("k = {k:.4e} m² vs analytic {k0:.4e} ({:.2}%), {secs:.1} s on 1 thread", 100.0 * e))
}

// 2 ------------------------------------------------------------------------

/// Gaussian elimination with partial pivoting on the Dirichlet-reduced
/// Laplacian.
fn dense_pressures(net: &PoreNetwork, p_in: f64, p_out: f64) -> Vec<f64> {
    let n = net.pores.len();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    for &i in &net.inlet {
        fixed[i as usize - 1] = Some(p_in);
    }
    for &o in &net.outlet {
        fixed[o as usize - 1] = Some(p_out);
    }
    let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
    let mut col = vec![usize::MAX; n];
    for (k, &i) in free.iter().enumerate() {
        col[i] = k;
    }
    let m = free.len();
    let mut a = vec![vec![0.0; m + 1]; m];
    for t in &net.throats {
        let (i, j) = (t.a as usize - 1, t.b as usize - 1);
        for (u, v) in [(i, j), (j, i)] {
            if fixed[u].is_some() {
                continue;
            }
            let r = col[u];
            a[r][r] += t.g;
            match fixed[v] {
                Some(p) => a[r][m] += t.g * p,
                None => a[r][col[v]] -= t.g,
            }
        }
    }
    for c in 0..m {
        let piv = (c..m).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(c, piv);
        for r in c + 1..m {
            let f = a[r][c] / a[c][c];
            if f != 0.0 {
                for k in c..=m {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    let mut x = vec![0.0; m];
    for c in (0..m).rev() {
        let s: f64 = (c + 1..m).map(|k| a[c][k] * x[k]).sum();
        x[c] = (a[c][m] - s) / a[c][c];
    }
    (0..n).map(|i| fixed[i].unwrap_or_else(|| x[col[i]])).collect()
}

fn pnm_conservation() -> Check {
    let mut worst_residual: f64 = 0.0;
    for seed in 1..=10 {
        let net = nets::random_network(500, seed);
        let sol = pnm::solve_pressure(&net, 1000.0, 0.0).map_err(|e| format!("seed {seed}: {e}"))?;
        let p = &sol.pore_pressure;
        let q: Vec<f64> = net.throats.iter().map(|t| t.g * (p[t.a as usize - 1] - p[t.b as usize - 1])).collect();
        let qmax = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut net_flow = vec![0.0; net.pores.len()];
        for (t, qt) in net.throats.iter().zip(&q) {
            net_flow[t.a as usize - 1] -= qt;
            net_flow[t.b as usize - 1] += qt;
        }
        let boundary: BTreeSet<u32> = net.inlet.iter().chain(&net.outlet).copied().collect();
        for pore in net.pores.iter().filter(|p| !boundary.contains(&p.id)) {
            let r = net_flow[pore.id as usize - 1].abs() / qmax;
            worst_residual = worst_residual.max(r);
            ensure(r <= 1e-8, || format!("seed {seed}: pore {} residual {r:e} of max flux", pore.id))?;
        }
    }
    let mut worst_dense: f64 = 0.0;
    for seed in 100..105 {
        let net = nets::random_network(20, seed);
        let sol = pnm::solve_pressure(&net, 2000.0, 1000.0).map_err(|e| e.to_string())?;
        let oracle = dense_pressures(&net, 2000.0, 1000.0);
        for (a, b) in sol.pore_pressure.iter().zip(&oracle) {
            worst_dense = worst_dense.max(rel(*a, *b));
        }
        ensure(worst_dense <= 1e-8, || format!("seed {seed}: pressure differs from dense solve by {worst_dense:e}"))?;
    }
    Ok(format!("max residual {worst_residual:.1e} (10 × 500 pores), max dense deviation {worst_dense:.1e} (5 × 20 pores)"))
}

// 3 ------------------------------------------------------------------------

fn tortuosity_analytics() -> Check {
    let semi = stream_tortuosity(&streams::semicircle(1, 40.0))?;
    ensure((semi - PI / 2.0).abs() <= 1e-4, || format!("semicircle T = {semi}, expected π/2"))?;
    let line = stream_tortuosity(&streams::straight(2, [1.0, 2.0, 3.0], [31.0, -8.0, 250.0], 17))?;
    ensure(line == 1.0, || format!("straight T = {line}, expected exactly 1"))?;
    // 1° steps; arc length ∫|γ'| dθ = θ_end·√(R² + (p/2π)²), chord from the
    // end points
    let (r, pitch, turns) = (15.0, 40.0, 2.25);
    let n_deg = (360.0 * turns) as usize;
    let pts: Vec<[f64; 3]> = (0..=n_deg)
        .map(|d| {
            let t = (d as f64).to_radians();
            [r * t.cos(), r * t.sin(), pitch * t / TAU]
        })
        .collect();
    let helix = stream_tortuosity(&Streamline::new(3, pts).unwrap())?;
    let theta = TAU * turns;
    let length = theta * (r * r + (pitch / TAU).powi(2)).sqrt();
    let chord = ((2.0 * r * (theta / 2.0).sin()).powi(2) + (pitch * turns).powi(2)).sqrt();
    let oracle = length / chord;
    let integer_turns = (1.0 + (TAU * r / pitch).powi(2)).sqrt();
    let whole = stream_tortuosity(&streams::helix(4, r, pitch, 3.0))?;
    ensure(rel(helix, oracle) <= 0.005, || format!("helix T = {helix}, analytic {oracle}"))?;
    ensure(rel(whole, integer_turns) <= 0.005, || format!("3-turn helix T = {whole}, analytic {integer_turns}"))?;
    Ok(format!(
        "semicircle |T − π/2| = {:.1e}, straight T = 1 exactly, helix {:.3}% / {:.3}% from analytic",
        (semi - PI / 2.0).abs(),
        100.0 * rel(helix, oracle),
        100.0 * rel(whole, integer_turns)
    ))
}

fn stream_tortuosity(s: &Streamline) -> Result<f64, String> {
    streamline::stream_tortuosity(s).map_err(|e| e.to_string())
}

// 4 ------------------------------------------------------------------------

/// All voxel pairs within one step in every axis, compared pairwise.
fn exhaustive_adjacency(d: Dims, labels: &[u32]) -> BTreeSet<(u32, u32)> {
    let mut set = BTreeSet::new();
    for i in 0..d.len() {
        let (xi, yi, zi) = d.coords(i);
        for j in i + 1..d.len() {
            let (a, b) = (labels[i], labels[j]);
            if a == 0 || b == 0 || a == b {
                continue;
            }
            let (xj, yj, zj) = d.coords(j);
            if xi.abs_diff(xj) <= 1 && yi.abs_diff(yj) <= 1 && zi.abs_diff(zj) <= 1 {
                set.insert((a.min(b), a.max(b)));
            }
        }
    }
    set
}

fn segmentation() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let mask_path = dir.path().join("dumbbell.raw");
    phantoms::dumbbell(64).save(&mask_path).unwrap();
    let out = dir.path().join("out");
    let run = porescope(&["analyze", "--mask", s(&mask_path), "--out", s(&out)], Some(2));
    ensure(ok(&run), || "analyze on the dumbbell failed".into())?;
    let net = read_json(&out.join("network.json"));
    let pores = net["pores"].as_array().unwrap().iter().filter(|p| !p["virtual"].as_bool().unwrap_or(false)).count();
    let throats = net["throats"].as_array().unwrap().len();
    ensure(pores == 2 && throats == 1, || format!("dumbbell gave {pores} pores and {throats} throats"))?;

    let d = Dims::new(16, 16, 16);
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_labels = 6 + seed as u32 * 4;
        let labels: Vec<u32> =
            (0..d.len()).map(|_| if rng.random::<f64>() < 0.3 { 0 } else { rng.random_range(1..=n_labels) }).collect();
        let lps = LabeledPoreSpace::from_labels(d, 1.0, labels.clone(), None).map_err(|e| e.to_string())?;
        let oracle = exhaustive_adjacency(d, &labels);
        ensure(*lps.adjacency() == oracle, || format!("seed {seed}: adjacency differs from the exhaustive oracle"))?;
    }
    Ok("dumbbell: 2 pores, 1 throat in network.json; 5 random 16³ labellings match the exhaustive oracle".into())
}

// 5 ------------------------------------------------------------------------

fn hydraulic_numerics() -> Check {
    let vs = 6.25;
    // one 10 × 10 pixel channel per plane
    let d = Dims::new(12, 12, 3);
    let inside = |x: usize, y: usize| (1..11).contains(&x) && (1..11).contains(&y);
    let mask = BinaryPoreMask::from_fn(d, vs, |x, y, _| inside(x, y));
    let labels: Vec<u32> = (0..d.len()).map(|i| mask.pore()[i] as u32).collect();
    let lps = LabeledPoreSpace::from_labels(d, vs, labels, None).map_err(|e| e.to_string())?;
    let props = FluidProps::default();
    let run = |u: f64| {
        let f = VoxelFlowField::from_fn(&mask, |_, _, _| ([0.0, 0.0, u], 0.0));
        channel_re(&f, &lps, &props).unwrap()
    };
    let base = run(0.01);
    let dhyd_oracle = (4.0 * 100.0 * vs * vs / PI).sqrt();
    ensure((dhyd_oracle - 70.52).abs() <= 0.01, || format!("oracle D_hyd {dhyd_oracle}"))?;
    for c in &base {
        ensure((c.dhyd_um - dhyd_oracle).abs() <= 1e-9, || format!("D_hyd {} vs {dhyd_oracle}", c.dhyd_um))?;
        let re = 0.01 * dhyd_oracle * 1e-6 / props.kinematic_viscosity;
        ensure(rel(c.re, re) <= 1e-12, || format!("Re {} vs u·D/ν = {re}", c.re))?;
    }
    for (a, b) in base.iter().zip(run(0.037)) {
        ensure(rel(b.re, a.re * 3.7) <= 1e-12, || format!("Re not linear in u: {} vs {}", b.re, a.re * 3.7))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (u, dm, lam) = (rng.random_range(1e-4..1.0), rng.random_range(1e-6..1e-3), rng.random_range(0.1..10.0));
        let r0 = reynolds(u, dm, props.kinematic_viscosity);
        worst = worst.max(rel(reynolds(lam * u, dm, props.kinematic_viscosity), lam * r0));
        worst = worst.max(rel(reynolds(u, lam * dm, props.kinematic_viscosity), lam * r0));
    }
    ensure(worst <= 1e-12, || format!("Re scaling deviates by {worst:e}"))?;
    Ok(format!("D_hyd = {:.4} µm, Re linear in u and D_hyd to {worst:.1e}", base[0].dhyd_um))
}

// 6 ------------------------------------------------------------------------

/// Uniform proposals accepted with probability exp(κ(cos(θ − µ) − 1)).
fn rejection_von_mises(mu_deg: f64, kappa: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu = mu_deg.to_radians();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let t = rng.random::<f64>() * TAU;
        if rng.random::<f64>() < (kappa * ((t - mu).cos() - 1.0)).exp() {
            out.push(t.to_degrees());
        }
    }
    out
}

fn von_mises() -> Check {
    let (mu, kappa) = (93.5, 1.34);
    let samples = rejection_von_mises(mu, kappa, 100_000, 2024);
    let fit = streamline::fit_von_mises(&samples, AngleMode::Full).map_err(|e| e.to_string())?;
    let dmu = (fit.mu_deg - mu).abs();
    ensure(dmu <= 1.5, || format!("µ = {:.3}°, expected {mu} ± 1.5", fit.mu_deg))?;
    ensure(rel(fit.kappa, kappa) <= 0.05, || format!("κ = {:.4}, expected {kappa} ± 5%", fit.kappa))?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let jitter: Vec<f64> = (0..samples.len()).map(|_| rng.random::<f64>() - 0.5).collect();
    let kappas: Vec<f64> = [0.0, 20.0, 40.0, 60.0, 80.0]
        .iter()
        .map(|w| {
            let noisy: Vec<f64> = samples.iter().zip(&jitter).map(|(a, u)| a + w * u).collect();
            streamline::fit_von_mises(&noisy, AngleMode::Full).unwrap().kappa
        })
        .collect();
    ensure(kappas.windows(2).all(|w| w[1] < w[0]), || format!("κ not strictly decreasing with noise: {kappas:?}"))?;
    Ok(format!(
        "µ = {:.2}° (Δ {dmu:.2}°), κ = {:.4} ({:.2}%), κ over noise levels {:?}",
        fit.mu_deg,
        fit.kappa,
        100.0 * rel(fit.kappa, kappa),
        kappas.iter().map(|k| (k * 1000.0).round() / 1000.0).collect::<Vec<_>>()
    ))
}

// 7 ------------------------------------------------------------------------

fn regime_detection() -> Check {
    let props = FluidProps::default();
    let k = 27.0 * 9.869233e-13;
    let a = props.dynamic_viscosity / k;
    let v: Vec<f64> = (1..=60).map(|i| 0.00075 * i as f64).collect();
    // Darcy reference from the three lowest points has slope a + b·c with
    // c = Σv³/Σv²; the relative deviation at v is b(v − c)/(a + b·c). Pick
    // b so that it equals 5% at exactly 0.02 m/s.
    let c = v[..3].iter().map(|x| x.powi(3)).sum::<f64>() / v[..3].iter().map(|x| x * x).sum::<f64>();
    let b = 0.05 * a / (0.02 - 1.05 * c);
    let expected = *v.iter().find(|&&x| x > 0.02).unwrap();
    let mut csv = String::from("section,inlet_velocity_mps,dp_per_length_pa_per_m\n");
    for x in &v {
        csv.push_str(&format!("s1,{x},{}\n", a * x + b * x * x));
    }
    let dir = tempfile::tempdir().unwrap();
    let curves = dir.path().join("curves.csv");
    std::fs::write(&curves, csv).unwrap();
    let out = dir.path().join("out");
    ensure(ok(&porescope(&["regime", "--curves", s(&curves), "--out", s(&out)], None)), || "regime failed".into())?;
    let report = read_json(&out.join("regime.json"));
    let sec = &report["sections"][0];
    let vt = sec["transition"]["velocity"].as_f64().ok_or("no transition reported")?;
    ensure((vt - expected).abs() < 1e-12, || format!("transition at {vt} m/s, expected {expected}"))?;
    let kd = sec["darcy"]["k_darcy"].as_f64().unwrap();
    ensure(rel(kd, 27.0) <= 0.01, || format!("Darcy k = {kd} D, expected 27 ± 1%"))?;
    ensure(DARCY_M2 == 9.869233e-13, || "Darcy constant".into())?;
    ensure(rel(darcy_to_m2(1.0), 9.869233e-13) <= 1e-12, || "1 D → m²".into())?;
    ensure(rel(m2_to_darcy(9.869233e-13), 1.0) <= 1e-12, || "m² → 1 D".into())?;
    for x in [1e-15, 3.3e-12, 2.7e-11] {
        ensure(rel(darcy_to_m2(m2_to_darcy(x)), x) <= 1e-12, || format!("round trip of {x}"))?;
    }
    Ok(format!("transition at {vt} m/s, k = {kd:.3} D ({:.2}%), Darcy unit round trip within 1e-12", 100.0 * rel(kd, 27.0)))
}

// 8 ------------------------------------------------------------------------

fn determinism() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();
    let mask = porous_mask(40, 3);
    write_volume(&mask, &base.join("sample.raw"));
    std::fs::write(base.join("nodal.csv"), nodal_csv(&mask, 2)).unwrap();
    let mut lines = streams::oriented_streams(93.5, 1.34, 300, 9, 0.01);
    lines.push(streams::semicircle(1000, 30.0));
    lines.push(streams::helix(1001, 10.0, 30.0, 2.0));
    std::fs::write(base.join("streams.csv"), streamline::streamlines_csv(&lines)).unwrap();
    std::fs::write(
        base.join("config.json"),
        r#"{"volume": "sample.raw", "nodal_csv": "nodal.csv", "streamlines_csv": "streams.csv",
            "n_particles": 500, "seed": 42, "section_length_um": 62.5}"#,
    )
    .unwrap();
    let config = base.join("config.json");
    let mut runs = Vec::new();
    for (tag, threads) in [("a", 1), ("b", 1), ("c", 8)] {
        let out = base.join(format!("out_{tag}"));
        for cmd in ["ingest", "analyze", "flow"] {
            let r = porescope(&[cmd, "--config", s(&config), "--out", s(&out)], Some(threads));
            ensure(ok(&r), || format!("{cmd} failed with {threads} threads"))?;
        }
        runs.push(out);
    }
    let reference = report_bytes(&runs[0]);
    let pores = read_json(&runs[0].join("permeability.json"))["pores"].as_u64().unwrap();
    ensure(pores >= 3, || format!("fixture too simple: {pores} pores"))?;
    for out in &runs[1..] {
        let other = report_bytes(out);
        ensure(reference.keys().eq(other.keys()), || format!("file sets differ: {:?} vs {:?}", reference.keys(), other.keys()))?;
        for (name, bytes) in &reference {
            ensure(other[name] == *bytes, || format!("{name} differs between runs"))?;
        }
        for cmd in ["ingest", "analyze", "flow"] {
            let m = format!("manifest_{cmd}.json");
            ensure(manifest_without_time(&runs[0].join(&m)) == manifest_without_time(&out.join(&m)), || format!("{m} differs"))?;
        }
    }
    Ok(format!("{} report files identical across 2 runs and thread counts 1 and 8 ({pores} pores)", reference.len()))
}

// 9 ------------------------------------------------------------------------

fn particle_tortuosity() -> Check {
    let n = 2000;
    let y = nets::symmetric_y();
    let sol = pnm::solve_pressure(&y, 1.0, 0.0).map_err(|e| e.to_string())?;
    let t = pnm::particle_tortuosity(&y, &sol, n, 3).map_err(|e| e.to_string())?;
    // throats 0 and 1 leave the inlet for the two branches
    let (left, right) = (t.throat_passages[0], t.throat_passages[1]);
    let sigma = (n as f64 * 0.25).sqrt();
    ensure(left + right == n, || format!("{left} + {right} particles left the inlet"))?;
    let dev = (left as f64 - n as f64 / 2.0).abs();
    ensure(dev <= 3.0 * sigma, || format!("branch split {left}/{right} outside 3σ = {:.1}", 3.0 * sigma))?;
    // both branches: two legs of length √200 over a 20 µm chord
    ensure(t.tortuosity.iter().all(|&v| (v - 2f64.sqrt()).abs() < 1e-12), || "Y tortuosity is not √2".into())?;
    let chain = nets::chain(12);
    let sol = pnm::solve_pressure(&chain, 1.0, 0.0).map_err(|e| e.to_string())?;
    let c = pnm::particle_tortuosity(&chain, &sol, n, 3).map_err(|e| e.to_string())?;
    ensure(c.tortuosity.len() == n && c.tortuosity.iter().all(|&v| v == 1.0), || "chain tortuosity is not exactly 1".into())?;
    Ok(format!("Y split {left}/{right} (|Δ| = {dev:.0} ≤ 3σ = {:.1}), chain tortuosity exactly 1.0", 3.0 * sigma))
}

fn main() {
    let criteria: [(u8, &str, fn() -> Check); 9] = [
        (1, "straight-tube permeability", straight_tube),
        (2, "PNM mass conservation", pnm_conservation),
        (3, "tortuosity analytics", tortuosity_analytics),
        (4, "segmentation", segmentation),
        (5, "hydraulic diameter and Reynolds numerics", hydraulic_numerics),
        (6, "Von Mises recovery", von_mises),
        (7, "regime detection", regime_detection),
        (8, "determinism", determinism),
        (9, "particle tortuosity", particle_tortuosity),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let t0 = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t0.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {id} PASS [{name}] {detail} ({secs:.1} s)"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} FAIL [{name}] {detail} ({secs:.1} s)");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
