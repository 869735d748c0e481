//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use mlspec::experiment::{
    preset, run_case_with, sample_instance, worker_threads, Generative, Sweep, SweepParam,
};
use mlspec_core::aggregate::{project_simplex, two_step, Aggregate, WeightVector};
use mlspec_core::clustering::kmeans::{kmeans_plus_plus, lloyd};
use mlspec_core::clustering::{
    ari, gmm_fit, misclustering_error, ClusterConfig, ClusterMethod, GmmConfig,
};
use mlspec_core::isc::{run_isc, IscConfig};
use mlspec_core::linalg::{dot, SymMatrix};
use mlspec_core::rng::rng_from_seed;
use mlspec_core::scme::{eval_g, grad_g, run_scme, ScmeConfig};
use mlspec_core::spectral::{eig_sym, eig_sym_with, embed, EigOptions};
use mlspec_core::theory::{
    asymptotic_error, embedding_centers, nu_basis, optimal_weight, tau, McConfig,
};
use mlspec_core::{Labeling, Matrix, MppmParams, MsbmParams, MultiLayerNetwork};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, StudentsT};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reference() -> MppmParams {
    MppmParams::balanced(6000, 2, vec![0.02, 0.02], vec![0.018, 0.013]).unwrap()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn c1() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for (w, want) in [("1,0", "0.64"), ("0,1", "9.07")] {
        let start = Instant::now();
        let out = Command::new(env!("CARGO_BIN_EXE_mlspec"))
            .args([
                "theory",
                "--tau",
                "--n",
                "6000",
                "--k",
                "2",
                "--p",
                "0.02,0.02",
                "--q",
                "0.018,0.013",
                "--w",
                w,
            ])
            .output()
            .map_err(|e| e.to_string())?;
        let secs = start.elapsed().as_secs_f64();
        let text = String::from_utf8_lossy(&out.stdout).trim().to_string();
        let got = text
            .parse::<f64>()
            .map(|v| format!("{v:.2}"))
            .unwrap_or(text);
        ok &= out.status.success() && got == want && secs < 1.0;
        details.push(format!("w=({w}) -> {got} in {secs:.3}s"));
    }
    check(ok, details.join(", "))
}

fn c2() -> Outcome {
    let start = Instant::now();
    let w = optimal_weight(&reference()).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let d = linf(w.as_slice(), &[0.199, 0.801]);
    check(
        d <= 0.001 && secs < 1.0,
        format!("w* = {:?}, off by {d:.5}, {secs:.4}s", w.as_slice()),
    )
}

/// Results of the n = 6000 runs shared by several criteria.
#[derive(Default)]
struct ReferenceRuns {
    err_opt: Vec<f64>,
    err_layer1: Vec<f64>,
    ratio_layer2: Option<f64>,
    ratio_layer1: Option<f64>,
    isc: Vec<Vec<f64>>,
    scme: Vec<Vec<f64>>,
    scme_invariant: Vec<bool>,
    center_gap: Option<f64>,
}

fn eig_ratio(net: &MultiLayerNetwork, w: &[f64]) -> f64 {
    let agg = Aggregate::new(net, w).unwrap();
    let e = eig_sym_with(&agg, 3, &EigOptions::default()).unwrap();
    e.values[1].abs() / e.values[2].abs()
}

fn center_gap(net: &MultiLayerNetwork, truth: &Labeling, t: f64) -> f64 {
    let agg = Aggregate::new(net, &[0.2, 0.8]).unwrap();
    let pts = embed(&agg, 2).unwrap().scaled_points();
    let mut means = vec![vec![0.0; 2]; 2];
    let sizes = truth.sizes();
    for (i, &l) in truth.labels().iter().enumerate() {
        for j in 0..2 {
            means[l][j] += pts.row(i)[j] / sizes[l] as f64;
        }
    }
    let centers = embedding_centers(2, t).unwrap().mu;
    // The leading coordinate has a fixed sign. For K = 2 the orthogonal maps
    // of the single trailing coordinate are ±1.
    let lead = if means[0][0] + means[1][0] < 0.0 {
        -1.0
    } else {
        1.0
    };
    [1.0, -1.0]
        .iter()
        .map(|s| {
            means
                .iter()
                .zip(&centers)
                .map(|(m, c)| linf(&[lead * m[0], s * m[1]], c))
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

fn reference_runs() -> ReferenceRuns {
    let params = reference();
    let gen = Generative::Mppm(params.clone());
    let t_opt = tau(&params, &[0.2, 0.8]).unwrap();
    let cc = ClusterConfig::default();
    let mut r = ReferenceRuns::default();
    for seed in 0..5u64 {
        let start = Instant::now();
        let (truth, net) = sample_instance(&gen, true, seed).unwrap();
        if seed < 3 {
            for (w, out) in [
                ([0.2, 0.8], &mut r.err_opt),
                ([1.0, 0.0], &mut r.err_layer1),
            ] {
                let labels = two_step(
                    &net,
                    &WeightVector::simplex(w.to_vec()).unwrap(),
                    2,
                    ClusterMethod::Kmeans,
                    &cc,
                    seed,
                )
                .unwrap();
                out.push(misclustering_error(&truth, &labels, 2).unwrap());
            }
        }
        if seed == 0 {
            r.ratio_layer2 = Some(eig_ratio(&net, &[0.0, 1.0]));
            r.ratio_layer1 = Some(eig_ratio(&net, &[1.0, 0.0]));
            r.center_gap = Some(center_gap(&net, &truth, t_opt));
        }
        r.isc.push(
            run_isc(&net, 2, &IscConfig::default(), seed)
                .unwrap()
                .weights
                .into_vec(),
        );
        let s = run_scme(&net, 2, &ScmeConfig::default(), seed).unwrap();
        r.scme_invariant.push(
            s.starts
                .iter()
                .filter(|st| !st.initial_g.is_nan())
                .all(|st| s.best_g >= st.initial_g),
        );
        r.scme.push(s.weights.into_vec());
        eprintln!(
            "  n=6000 seed {seed} done in {:.1}s",
            start.elapsed().as_secs_f64()
        );
    }
    r
}

fn c3(r: &ReferenceRuns) -> Outcome {
    let t = tau(&reference(), &[0.2, 0.8]).map_err(|e| e.to_string())?;
    let asym = asymptotic_error(t, 2, &McConfig::default())
        .map_err(|e| e.to_string())?
        .value;
    let m = mean(&r.err_opt);
    check(
        (m - asym).abs() <= 0.02 && (asym - 0.025).abs() < 0.001 && (t - 9.71).abs() < 0.005,
        format!(
            "tau {t:.3}, asymptotic {asym:.4}, mean error {m:.4} over {:?}",
            r.err_opt
        ),
    )
}

fn c4(r: &ReferenceRuns) -> Outcome {
    let m = mean(&r.err_layer1);
    check(
        (m - 0.5).abs() <= 0.05,
        format!("mean error {m:.4} over {:?}", r.err_layer1),
    )
}

fn c5(r: &ReferenceRuns) -> Outcome {
    let (a, b) = (
        r.ratio_layer2.ok_or("missing")?,
        r.ratio_layer1.ok_or("missing")?,
    );
    check(
        (a - 1.300).abs() <= 0.05 && (1.0..=1.15).contains(&b),
        format!("|l2/l3| = {a:.4} at w=(0,1), {b:.4} at w=(1,0)"),
    )
}

fn c6(r: &ReferenceRuns) -> Outcome {
    let d: Vec<f64> = r.isc.iter().map(|w| linf(w, &[0.199, 0.801])).collect();
    let m = mean(&d);
    check(
        m <= 0.08,
        format!(
            "mean inf-norm gap {m:.4}, w1 = {:?}",
            r.isc.iter().map(|w| w[0]).collect::<Vec<_>>()
        ),
    )
}

fn c7(r: &ReferenceRuns) -> Outcome {
    let hits = r
        .scme
        .iter()
        .filter(|w| linf(w, &[0.2, 0.8]) <= 0.1)
        .count();
    let inv = r.scme_invariant.iter().all(|&b| b);
    check(
        hits >= 4 && inv,
        format!(
            "{hits}/5 within 0.1, invariant {}, w1 = {:?}",
            if inv { "holds" } else { "violated" },
            r.scme.iter().map(|w| w[0]).collect::<Vec<_>>()
        ),
    )
}

fn c8() -> Outcome {
    let mut spec = preset("1c").unwrap();
    spec.methods = vec!["isc_gm".parse().unwrap(), "mean_km".parse().unwrap()];
    spec.repetitions = 20;
    spec.sweep = Some(Sweep {
        parameter: SweepParam::Layers,
        values: vec![1.0, 5.0],
    });
    let rows = run_case_with(&spec, worker_threads()).map_err(|e| e.to_string())?;
    let avg = |m: &str, l: f64| {
        let v: Vec<f64> = rows
            .iter()
            .filter(|r| r.method == m && r.sweep == Some(l))
            .map(|r| r.ari)
            .collect();
        mean(&v)
    };
    let (i1, i5, m1, m5) = (
        avg("isc_gm", 1.0),
        avg("isc_gm", 5.0),
        avg("mean_km", 1.0),
        avg("mean_km", 5.0),
    );
    check(
        (i5 - i1).abs() <= 0.1 && m1 - m5 >= 0.2,
        format!("ISC_gm ARI {i1:.3} -> {i5:.3}, mean ARI {m1:.3} -> {m5:.3}"),
    )
}

fn c9() -> Outcome {
    let omega = vec![vec![vec![0.053, 0.011], vec![0.011, 0.016]]];
    let gen = Generative::Msbm(MsbmParams::new(600, 2, omega, vec![0.5, 0.5]).unwrap());
    let cc = ClusterConfig::default();
    let w = WeightVector::equal(1);
    let mut diffs = Vec::new();
    let (mut gm, mut km) = (Vec::new(), Vec::new());
    for seed in 0..20u64 {
        let (truth, net) = sample_instance(&gen, true, seed).unwrap();
        let g = ari(
            &truth,
            &two_step(&net, &w, 2, ClusterMethod::Gmm, &cc, seed).unwrap(),
        )
        .unwrap();
        let k = ari(
            &truth,
            &two_step(&net, &w, 2, ClusterMethod::Kmeans, &cc, seed).unwrap(),
        )
        .unwrap();
        gm.push(g);
        km.push(k);
        diffs.push(g - k);
    }
    let m = mean(&diffs);
    let sd = (diffs.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64).sqrt();
    let t = m / (sd / (diffs.len() as f64).sqrt());
    let p = if sd == 0.0 {
        if m > 0.0 {
            0.0
        } else {
            1.0
        }
    } else {
        1.0 - StudentsT::new(0.0, 1.0, (diffs.len() - 1) as f64)
            .unwrap()
            .cdf(t)
    };
    check(
        m > 0.0 && p < 0.05,
        format!(
            "mean ARI gmm {:.3} vs k-means {:.3}, t = {t:.2}, one-sided p = {p:.4}",
            mean(&gm),
            mean(&km)
        ),
    )
}

fn random_sym(n: usize, seed: u64) -> SymMatrix {
    let mut rng = rng_from_seed(seed);
    SymMatrix::from_upper(n, |i, j| {
        if i == j {
            0.0
        } else {
            rng.random_range(-1.0..1.0)
        }
    })
}

fn ari_pairs(a: &[usize], b: &[usize]) -> f64 {
    let (mut n11, mut n10, mut n01, mut n00) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..a.len() {
        for j in (i + 1)..a.len() {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => n11 += 1.0,
                (true, false) => n10 += 1.0,
                (false, true) => n01 += 1.0,
                (false, false) => n00 += 1.0,
            }
        }
    }
    2.0 * (n00 * n11 - n01 * n10) / ((n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11))
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

fn grid_best(v: &[f64], m: usize) -> f64 {
    let d = |p: &[f64]| {
        p.iter()
            .zip(v)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let mut best = f64::INFINITY;
    for a in 0..=m {
        if v.len() == 2 {
            best = best.min(d(&[a as f64 / m as f64, (m - a) as f64 / m as f64]));
        } else {
            for b in 0..=(m - a) {
                best = best.min(d(&[
                    a as f64 / m as f64,
                    b as f64 / m as f64,
                    (m - a - b) as f64 / m as f64,
                ]));
            }
        }
    }
    best
}

fn c10() -> Outcome {
    let mut failed = Vec::new();
    let mut rng = rng_from_seed(10);

    // Eigensolver identities.
    let mut eig_ok = true;
    for seed in 0..20 {
        let n = 5 + 2 * seed as usize;
        let a = random_sym(n, seed);
        let e = eig_sym(&a, n).unwrap();
        eig_ok &= e.max_residual(&a) < 1e-10 * (1.0 + a.frobenius_norm());
        eig_ok &= (e.values.iter().sum::<f64>() - a.trace()).abs() < 1e-9;
        for i in 0..n {
            for j in 0..n {
                eig_ok &= (dot(&e.vectors[i], &e.vectors[j]) - if i == j { 1.0 } else { 0.0 })
                    .abs()
                    < 1e-10;
            }
        }
    }
    if !eig_ok {
        failed.push("eigensolver");
    }

    // Simplex projection against a grid, 1000 cases.
    let mut proj_ok = true;
    for case in 0..1000 {
        let l = 2 + case % 2;
        let v: Vec<f64> = (0..l).map(|_| rng.random_range(-2.0..2.0)).collect();
        let w = project_simplex(&v);
        let m = if l == 2 { 2000 } else { 200 };
        let d = w
            .as_slice()
            .iter()
            .zip(&v)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        let g = grid_best(&v, m);
        proj_ok &= w.as_slice().iter().all(|&x| x >= 0.0)
            && d <= g + 1e-12
            && g - d <= (l as f64).sqrt() / m as f64;
    }
    if !proj_ok {
        failed.push("simplex projection");
    }

    // ARI against pair counting, and the hand case.
    let hand_a = Labeling::new(vec![0, 0, 1, 1], 2).unwrap();
    let hand_b = Labeling::new(vec![0, 1, 0, 1], 2).unwrap();
    let mut ari_ok = (ari(&hand_a, &hand_b).unwrap() + 0.5).abs() < 1e-15;
    for _ in 0..200 {
        let n = rng.random_range(3..40);
        let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
        let b: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
        let oracle = ari_pairs(&a, &b);
        if oracle.is_finite() {
            let got = ari(&Labeling::new(a, 4).unwrap(), &Labeling::new(b, 4).unwrap()).unwrap();
            ari_ok &= (got - oracle).abs() < 1e-12;
        }
    }
    if !ari_ok {
        failed.push("ARI");
    }

    // Mis-clustering error against brute force.
    let mut mis_ok = true;
    for k in 2..=5 {
        let perms = permutations(k);
        for _ in 0..10 {
            let a: Vec<usize> = (0..30).map(|_| rng.random_range(0..k)).collect();
            let b: Vec<usize> = (0..30).map(|_| rng.random_range(0..k)).collect();
            let best = perms
                .iter()
                .map(|p| a.iter().zip(&b).filter(|(x, y)| p[**y] != **x).count())
                .min()
                .unwrap() as f64
                / 30.0;
            let got = misclustering_error(
                &Labeling::new(a, k).unwrap(),
                &Labeling::new(b, k).unwrap(),
                k,
            )
            .unwrap();
            mis_ok &= (got - best).abs() < 1e-15;
        }
    }
    if !mis_ok {
        failed.push("misclustering error");
    }

    // k-means and EM monotonicity.
    let cloud = |seed: u64| {
        let mut r = rng_from_seed(seed);
        let c: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..2).map(|_| r.random_range(-3.0..3.0)).collect())
            .collect();
        Matrix::from_fn(240, 2, |i, j| {
            c[i % 3][j] + r.sample::<f64, _>(StandardNormal)
        })
    };
    let mut mono_ok = true;
    for seed in 0..10 {
        let x = cloud(seed);
        let km = lloyd(
            &x,
            &kmeans_plus_plus(&x, 3, &mut rng_from_seed(seed + 99)),
            100,
            0.0,
        );
        mono_ok &= km.trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
        let em = gmm_fit(&x, 3, &GmmConfig::default(), seed).unwrap();
        let mut bounds = em.segments.clone();
        bounds.push(em.trace.len());
        let mut start = 0;
        for &end in &bounds {
            mono_ok &= em.trace[start..end]
                .windows(2)
                .all(|w| w[1] >= w[0] - 1e-8 * w[0].abs().max(1.0));
            start = end;
        }
    }
    if !mono_ok {
        failed.push("k-means/EM monotonicity");
    }

    // Eigenratio gradient against central differences at 50 points.
    let params = MppmParams::balanced(150, 2, vec![0.3, 0.25, 0.2], vec![0.1, 0.2, 0.18]).unwrap();
    let (_, net) = sample_instance(&Generative::Mppm(params), true, 1).unwrap();
    let (mut checked, mut tries, mut grad_ok) = (0, 0, true);
    while checked < 50 && tries < 500 {
        tries += 1;
        let raw: Vec<f64> = (0..3).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|x| x / s).collect();
        let Ok(grad) = grad_g(&net, &w, 2, 1e-8) else {
            continue;
        };
        let h = 1e-5;
        let mut err = 0.0;
        for l in 0..3 {
            let (mut up, mut down) = (w.clone(), w.clone());
            up[l] += h;
            down[l] -= h;
            let fd = (eval_g(&net, &up, 2).unwrap() - eval_g(&net, &down, 2).unwrap()) / (2.0 * h);
            err += (grad[l] - fd).powi(2);
        }
        grad_ok &= err.sqrt() <= 1e-3 * grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        checked += 1;
    }
    if !grad_ok || checked < 50 {
        failed.push("eigenratio gradient");
    }

    // Asymptotic error: monotone in tau, threshold orthant value, nu basis.
    let mc = McConfig {
        samples: 50_000,
        seed: 2,
    };
    let mut theory_ok = true;
    for k in [2usize, 3, 4] {
        let mut last = f64::INFINITY;
        for i in 0..30 {
            let e = asymptotic_error(0.5 * i as f64, k, &mc).unwrap().value;
            theory_ok &= e <= last;
            last = e;
        }
        let nu = nu_basis(k).unwrap();
        for a in 0..k - 1 {
            theory_ok &= nu.column(a).iter().sum::<f64>().abs() < 1e-12;
            for b in 0..k - 1 {
                theory_ok &= (dot(&nu.column(a), &nu.column(b)) - if a == b { 1.0 } else { 0.0 })
                    .abs()
                    < 1e-12;
            }
        }
    }
    let at = asymptotic_error(
        3.0 + 1e-12,
        3,
        &McConfig {
            samples: 1_000_000,
            seed: 11,
        },
    )
    .unwrap();
    theory_ok &= ((1.0 - at.value) - 1.0 / 3.0).abs() <= 4.0 * at.std_error.max(1e-4);
    if !theory_ok {
        failed.push("asymptotic error / nu basis");
    }

    check(
        failed.is_empty(),
        if failed.is_empty() {
            "eigensolver, simplex projection (1000), ARI, misclustering, monotonicity, gradient (50), theory".into()
        } else {
            format!("failed: {}", failed.join(", "))
        },
    )
}

fn c11(r: &ReferenceRuns) -> Outcome {
    let gap = r.center_gap.ok_or("missing")?;
    check(
        gap <= 0.15,
        format!("aligned class means within {gap:.4} of the population centers"),
    )
}

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(d) => {
            println!("{name} PASS: {d} [{secs:.1}s]");
            true
        }
        Err(d) => {
            println!("{name} FAIL: {d} [{secs:.1}s]");
            false
        }
    }
}

fn main() {
    let mut ok = true;
    ok &= run("C1", c1);
    ok &= run("C2", c2);
    let start = Instant::now();
    let runs = catch_unwind(reference_runs).unwrap_or_default();
    let shared = start.elapsed().as_secs_f64();
    eprintln!("  n=6000 runs took {shared:.1}s");
    ok &= run("C3", || c3(&runs));
    ok &= run("C4", || c4(&runs));
    ok &= run("C5", || c5(&runs));
    ok &= run("C6", || c6(&runs));
    ok &= run("C7", || c7(&runs));
    ok &= run("C8", c8);
    ok &= run("C9", c9);
    ok &= run("C10", c10);
    ok &= run("C11", || c11(&runs));
    if !ok {
        std::process::exit(1);
    }
}
