//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::time::{Duration, Instant};

use mcsfa::{
    birth_death, objective_gradient, simulate, slowness, solve_mcsfa, stationary, value_iteration,
    visit_frequencies, MarkovChain, QuadraticForm, SpectralBasis,
};
use mcsfa_harness::sweep::behavior_chain;
use mcsfa_harness::{run_sweep, write_sweep, Behavior, Correction, ExperimentResult, SweepConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Report {
    failed: Vec<u32>,
}

impl Report {
    fn check(&mut self, id: u32, what: &str, pass: bool, detail: String) {
        println!("[{}] criterion {id}: {what} ({detail})", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id);
        }
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed())
}

fn criterion_1(r: &mut Report) {
    let (err, took) = timed(|| {
        let mut worst = 0.0f64;
        for theta in [0.45, 0.48, 0.52, 0.55] {
            let p = birth_death::<f64>(200, theta).unwrap();
            let mu = stationary(&p).unwrap();
            let ratio: f64 = theta / (1.0 - theta);
            let raw = DVector::from_fn(200, |i, _| ratio.powi(i as i32));
            let closed = &raw / raw.sum();
            worst = worst.max((mu - closed).amax());
        }
        worst
    });
    r.check(
        1,
        "birth-death stationary distribution matches the geometric closed form",
        err < 1e-10 && took < Duration::from_secs(1),
        format!("max abs error {err:.2e}, {}", secs(took)),
    );
}

/// Bases behind the sweeps of criteria 3 and 7-10, with the chain they came from.
struct Case {
    label: String,
    chain: MarkovChain<f64>,
    form: QuadraticForm<f64>,
    basis: SpectralBasis<f64>,
}

fn cases() -> Vec<Case> {
    let mut out = Vec::new();
    let setups: [(&str, mcsfa::Environment<f64>, usize); 2] = [
        ("linear200", mcsfa::make_linear(200, 90).unwrap(), 199),
        ("lattice20x20", mcsfa::make_lattice(20, 20, (0, 0)).unwrap(), 60),
    ];
    for (name, env, e) in setups {
        let q = value_iteration(&env, 0.95, 1e-12).unwrap().q_star;
        for behavior in [Behavior::ZetaGreedy, Behavior::Boltzmann] {
            for param in [0.45, 0.5, 0.55] {
                let chain = behavior_chain(&env, &q, behavior, param).unwrap();
                for (kind, form) in [("standard", chain.standard_form()), ("lra", chain.lra_form())] {
                    let basis = solve_mcsfa(&form, e).unwrap();
                    out.push(Case {
                        label: format!("{name} {} {param} {kind}", behavior.as_str()),
                        chain: chain.clone(),
                        form,
                        basis,
                    });
                }
            }
        }
    }
    out
}

fn criterion_2_3_4(r: &mut Report, cases: &[Case]) {
    let mut orth = 0.0f64;
    let mut mean = 0.0f64;
    let mut scaled = 0.0f64;
    for c in cases {
        let e = c.basis.n_features();
        orth = orth.max((c.basis.gram() - DMatrix::identity(e, e)).amax());
        mean = mean.max(c.basis.weighted_means().amax());
        if c.label.ends_with("standard") {
            let fixed = mcsfa::scale_correct(&c.basis, &c.chain.mu).unwrap();
            scaled = scaled.max((fixed.y.tr_mul(&fixed.y) - DMatrix::identity(e, e)).amax());
        }
    }
    r.check(
        2,
        "solved bases satisfy Y'DY = I and 1'DY = 0",
        orth < 1e-8 && mean < 1e-8 && scaled < 1e-8,
        format!(
            "{} bases, max |Y'DY - I| {orth:.2e}, max |1'DY| {mean:.2e}, scale-corrected max |Y'Y - I| {scaled:.2e}",
            cases.len()
        ),
    );

    let mut worst = 0.0f64;
    let mut n = 0;
    for c in cases.iter().filter(|c| c.label.ends_with("standard")) {
        for (i, col) in c.basis.y.column_iter().enumerate() {
            let s = slowness(&c.form, &col.into_owned());
            worst = worst.max((s - 2.0 * c.basis.lambdas[i]).abs());
            n += 1;
        }
    }
    r.check(
        3,
        "slowness of each feature equals twice its eigenvalue",
        worst < 1e-9,
        format!("{n} features on linear and lattice chains, max deviation {worst:.2e}"),
    );

    let mut peak = 0.0f64;
    for c in cases {
        for (u, row) in c.basis.y.row_iter().enumerate() {
            let w = c.basis.weighting[u];
            peak = peak.max(row.iter().map(|&y| w * y * y).fold(0.0, f64::max));
        }
    }
    r.check(
        4,
        "amplitude bound mu_u y_u^2 <= 1",
        peak <= 1.0 + 1e-9,
        format!("max weighted squared amplitude {peak:.12}"),
    );
}

fn random_chain(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut p = DMatrix::from_fn(n, n, |_, _| rng.random_range(0.01..1.0));
    for mut row in p.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    p
}

fn criterion_5(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (n, e, h) = (10, 3, 1e-6);
    let mut worst_obj = 0.0f64;
    let mut worst_con = 0.0f64;
    let mut worst_combined = 0.0f64;
    for _ in 0..20 {
        let chain = MarkovChain::new(random_chain(&mut rng, n)).unwrap();
        let form = chain.standard_form();
        let lap = form.laplacian();
        let dmat = DMatrix::from_diagonal(&form.d);
        let y = DMatrix::from_fn(n, e, |_, _| rng.random_range(-1.0..1.0));
        let lambdas = DVector::from_fn(e, |_, _| rng.random_range(0.0..2.0));
        let lam = DMatrix::from_diagonal(&lambdas);
        let obj = |y: &DMatrix<f64>| (y.transpose() * &lap * y).trace();
        let con = |y: &DMatrix<f64>| (&lam * (y.transpose() * &dmat * y - DMatrix::identity(e, e))).trace();
        let mut fd_obj = DMatrix::zeros(n, e);
        let mut fd_con = DMatrix::zeros(n, e);
        for i in 0..n {
            for j in 0..e {
                let mut plus = y.clone();
                let mut minus = y.clone();
                plus[(i, j)] += h;
                minus[(i, j)] -= h;
                fd_obj[(i, j)] = (obj(&plus) - obj(&minus)) / (2.0 * h);
                fd_con[(i, j)] = (con(&plus) - con(&minus)) / (2.0 * h);
            }
        }
        let grad_obj = &lap * &y * 2.0;
        let grad_con = &dmat * &y * &lam * 2.0;
        worst_obj = worst_obj.max((&fd_obj - &grad_obj).amax() / grad_obj.amax());
        worst_con = worst_con.max((&fd_con - &grad_con).amax() / grad_con.amax());
        let combined = objective_gradient(&form, &y, &lambdas).unwrap();
        worst_combined = worst_combined.max((&combined - (&fd_obj - &fd_con)).amax() / combined.amax());
    }
    r.check(
        5,
        "trace derivatives match central finite differences",
        worst_obj < 1e-5 && worst_con < 1e-5 && worst_combined < 1e-5,
        format!(
            "20 random 10-state chains, max relative error {worst_obj:.2e} (objective), {worst_con:.2e} (constraint), \
             {worst_combined:.2e} (Lagrangian gradient)"
        ),
    );
}

fn criterion_6(r: &mut Report) {
    let ((freq_err, slow_err, checked), took) = timed(|| {
        let chain = MarkovChain::new(birth_death::<f64>(50, 0.48).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let path = simulate(&chain.p, 0, 1_000_000, &mut rng);
        let freq = visit_frequencies(&path, 50);
        let mut freq_err = 0.0f64;
        let mut checked = 0;
        for (f, &m) in freq.iter().zip(chain.mu.iter()) {
            if m > 1e-3 {
                freq_err = freq_err.max((f - m).abs() / m);
                checked += 1;
            }
        }
        let basis = solve_mcsfa(&chain.standard_form(), 49).unwrap();
        let mut slow_err = 0.0f64;
        for (i, col) in basis.y.column_iter().enumerate() {
            let steps = path.len() - 1;
            let total: f64 = path.windows(2).map(|w| (col[w[1]] - col[w[0]]).powi(2)).sum();
            let empirical = total / steps as f64;
            let expect = 2.0 * basis.lambdas[i];
            slow_err = slow_err.max((empirical - expect).abs() / expect);
        }
        (freq_err, slow_err, checked)
    });
    r.check(
        6,
        "simulated visit frequencies and slowness match mu and 2 lambda",
        freq_err < 0.02 && slow_err < 0.05 && took < Duration::from_secs(30),
        format!(
            "{checked} states with mu > 1e-3, max frequency error {:.2}%, max slowness error {:.2}%, {}",
            100.0 * freq_err,
            100.0 * slow_err,
            secs(took)
        ),
    );
}

fn mse(results: &[ExperimentResult], behavior: Behavior, param: f64, e: usize, correction: Correction) -> f64 {
    results
        .iter()
        .find(|x| x.behavior == behavior && x.param == param && x.e == e && x.correction == correction && x.is_ok())
        .map(|x| x.mse_uniform)
        .unwrap_or(f64::NAN)
}

fn criterion_7_8(r: &mut Report) -> Vec<ExperimentResult> {
    let cfg = SweepConfig::from_json(
        r#"{"environment": {"type": "linear", "n": 200}, "behavior": ["zeta_greedy"],
            "directedness_grid": [0.45, 0.5, 0.55], "reward_positions": [90], "feature_counts": [10],
            "corrections": ["none", "scale"], "gamma": 0.95}"#,
    )
    .unwrap();
    let (results, took) = timed(|| run_sweep(&cfg, None).unwrap());
    let z = Behavior::ZetaGreedy;
    let m: Vec<f64> = [0.45, 0.5, 0.55].iter().map(|&p| mse(&results, z, p, 10, Correction::None)).collect();
    r.check(
        7,
        "linear graph: goal-directed worst, goal-averse best",
        m[0] > m[1] && m[1] > m[2] && took < Duration::from_secs(10),
        format!("MSE at zeta 0.45/0.50/0.55 = {:.4e} / {:.4e} / {:.4e}, {}", m[0], m[1], m[2], secs(took)),
    );
    let s45 = mse(&results, z, 0.45, 10, Correction::Scale);
    let s55 = mse(&results, z, 0.55, 10, Correction::Scale);
    r.check(
        8,
        "linear graph: scale correction helps goal-directed and hurts goal-averse features",
        s45 < m[0] && s55 > m[2],
        format!("zeta 0.45: {:.4e} -> {s45:.4e}; zeta 0.55: {:.4e} -> {s55:.4e}", m[0], m[2]),
    );
    results
}

const LATTICE_CFG: &str = r#"{
    "environment": {"type": "lattice", "width": 20, "height": 20},
    "behavior": ["zeta_greedy", "boltzmann"],
    "directedness_grid": [0.45, 0.5, 0.55],
    "reward_positions": [[0, 0]],
    "feature_counts": [5, 10, 20],
    "corrections": ["none", "scale", "lra"],
    "gamma": 0.95,
    "seed": 0
}"#;

fn criterion_9_10(r: &mut Report) -> Vec<ExperimentResult> {
    let cfg = SweepConfig::from_json(LATTICE_CFG).unwrap();
    let (results, took) = timed(|| run_sweep(&cfg, None).unwrap());
    let z = Behavior::ZetaGreedy;
    let m: Vec<f64> = [0.45, 0.5, 0.55].iter().map(|&p| mse(&results, z, p, 10, Correction::None)).collect();
    r.check(
        9,
        "lattice: goal-averse features fit best, goal-directed worst",
        m[2] < m[1] && m[1] < m[0] && took < Duration::from_secs(180),
        format!("MSE at zeta 0.45/0.50/0.55 = {:.4e} / {:.4e} / {:.4e}, sweep {}", m[0], m[1], m[2], secs(took)),
    );

    let mut wins = 0;
    let mut detail = Vec::new();
    for e in cfg.features() {
        let column: Vec<&ExperimentResult> = results.iter().filter(|x| x.e == e && x.is_ok()).collect();
        let best = column.iter().map(|x| x.mse_uniform).fold(f64::INFINITY, f64::min);
        let target = column
            .iter()
            .filter(|x| x.behavior == Behavior::Boltzmann && x.correction == Correction::Scale)
            .map(|x| x.mse_uniform)
            .fold(f64::INFINITY, f64::min);
        let winner = column
            .iter()
            .min_by(|a, b| a.mse_uniform.total_cmp(&b.mse_uniform))
            .map(|x| format!("{} {} {}", x.behavior.as_str(), x.param, x.correction.as_str()))
            .unwrap_or_default();
        if target <= best * (1.0 + 1e-12) {
            wins += 1;
        }
        detail.push(format!("e={e}: best {winner} {best:.4e}, boltzmann+scale {target:.4e}"));
    }
    let columns = cfg.features().len();
    r.check(
        10,
        "lattice: Boltzmann with scale correction is best in at least 2/3 of feature counts",
        3 * wins >= 2 * columns,
        format!("{wins}/{columns} columns; {}", detail.join("; ")),
    );
    results
}

fn criterion_11(r: &mut Report, fits: &[&[ExperimentResult]]) {
    let all: Vec<&ExperimentResult> = fits.iter().flat_map(|f| f.iter()).collect();
    let ok: Vec<&&ExperimentResult> = all.iter().filter(|x| x.is_ok()).collect();
    let worst = ok.iter().map(|x| x.solver_gap).fold(0.0, f64::max);
    r.check(
        11,
        "projection and normal-equation coefficients agree",
        ok.len() == all.len() && worst < 1e-9,
        format!("{} of {} fits ok, max coefficient gap {worst:.2e}", ok.len(), all.len()),
    );
}

fn criterion_12(r: &mut Report) {
    let cfg = SweepConfig::from_json(LATTICE_CFG).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write_sweep(a.path(), LATTICE_CFG.as_bytes(), &run_sweep(&cfg, Some(1)).unwrap()).unwrap();
    write_sweep(b.path(), LATTICE_CFG.as_bytes(), &run_sweep(&cfg, None).unwrap()).unwrap();
    let same = |name: &str| std::fs::read(a.path().join(name)).unwrap() == std::fs::read(b.path().join(name)).unwrap();
    let csv = same("results.csv");
    let manifest = same("manifest.json");
    r.check(
        12,
        "repeated sweeps give byte-identical CSV and manifest",
        csv && manifest,
        format!("results.csv identical: {csv}, manifest.json identical: {manifest}"),
    );
}

fn main() {
    let mut r = Report { failed: Vec::new() };
    criterion_1(&mut r);
    let cases = cases();
    criterion_2_3_4(&mut r, &cases);
    criterion_5(&mut r);
    criterion_6(&mut r);
    let linear = criterion_7_8(&mut r);
    let lattice = criterion_9_10(&mut r);
    criterion_11(&mut r, &[&linear, &lattice]);
    criterion_12(&mut r);
    if r.failed.is_empty() {
        println!("all 12 criteria passed");
    } else {
        println!("failed criteria: {:?}", r.failed);
        std::process::exit(1);
    }
}
