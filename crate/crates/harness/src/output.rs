//! Files written by the CLI: results table, figures and manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mcsfa::{simulate, symlog, value_iteration, visit_frequencies};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Correction, EnvironmentSpec, RewardPosition, SweepConfig};
use crate::error::HarnessError;
use crate::plot::{emit_plot, Grid, PlotInput, PlotKind};
use crate::sweep::{behavior_chain, corrected_basis, ExperimentResult};

pub const CSV_HEADER: [&str; 10] =
    ["env", "behavior", "param", "reward", "e", "correction", "mse_uniform", "mse_weighted", "log_mse", "status"];

fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Write the results table. Refuses an empty result list without touching
/// the file system.
pub fn emit_csv(results: &[ExperimentResult], path: &Path) -> Result<(), HarnessError> {
    if results.is_empty() {
        return Err(HarnessError::EmptyResults);
    }
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(err) => HarnessError::io(path, err),
        other => HarnessError::io(path, std::io::Error::other(format!("{other:?}"))),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in results {
        w.write_record([
            r.env.clone(),
            r.behavior.as_str().to_string(),
            format!("{}", r.param),
            r.reward.to_string(),
            r.e.to_string(),
            r.correction.as_str().to_string(),
            num(r.mse_uniform),
            num(r.mse_weighted),
            num(r.log_mse),
            r.status.as_str().to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn reward_tag(r: RewardPosition) -> String {
    match r {
        RewardPosition::Index(i) => format!("r{i}"),
        RewardPosition::Coord([x, y]) => format!("r{x}-{y}"),
    }
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Heatmap tables keyed by `(behavior, reward, correction)`: rows are the
/// directedness values and columns the feature counts. With `diff`, cells
/// hold `-symlog(mse_none - mse_corrected)` instead of `log_mse`.
pub fn heatmap_grids(results: &[ExperimentResult], diff: bool) -> Vec<(String, Grid)> {
    let params = sorted_unique(results.iter().map(|r| r.param).collect());
    let mut es: Vec<usize> = results.iter().map(|r| r.e).collect();
    es.sort_unstable();
    es.dedup();
    let mut by_key: BTreeMap<_, BTreeMap<(u64, usize), &ExperimentResult>> = BTreeMap::new();
    for r in results {
        by_key.entry((r.behavior, r.reward, r.correction)).or_default().insert((r.param.to_bits(), r.e), r);
    }
    let mut out = Vec::new();
    for (&(behavior, reward, correction), cells) in &by_key {
        if diff && correction == Correction::None {
            continue;
        }
        let base = by_key.get(&(behavior, reward, Correction::None));
        if diff && base.is_none() {
            continue;
        }
        let values = params
            .iter()
            .map(|p| {
                es.iter()
                    .map(|&e| {
                        let cell = cells.get(&(p.to_bits(), e)).filter(|r| r.is_ok())?;
                        if diff {
                            let before = base?.get(&(p.to_bits(), e)).filter(|r| r.is_ok())?;
                            Some(-symlog(before.mse_uniform - cell.mse_uniform))
                        } else {
                            Some(cell.log_mse)
                        }
                    })
                    .collect()
            })
            .collect();
        let env = &cells.values().next().expect("non-empty group").env;
        let what = if diff { "-symlog(MSE none - MSE corrected)" } else { "log MSE" };
        let grid = Grid {
            title: format!("{env} {} reward {reward} {}: {what}", behavior.as_str(), correction.as_str()),
            row_label: "directedness".into(),
            col_label: "features".into(),
            rows: params.iter().map(|p| format!("{p}")).collect(),
            cols: es.iter().map(|e| e.to_string()).collect(),
            values,
        };
        let name = format!(
            "{}_{}_{}_{}.svg",
            if diff { "heatmap_diff" } else { "heatmap_logmse" },
            behavior.as_str(),
            reward_tag(reward),
            correction.as_str()
        );
        out.push((name, grid));
    }
    out
}

#[derive(Serialize)]
struct ManifestFile {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config_sha256: String,
    files: Vec<ManifestFile>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `manifest.json` listing `files` (relative to `out`) with content hashes.
pub fn write_manifest(out: &Path, command: &'static str, config: &[u8], files: &[String]) -> Result<PathBuf, HarnessError> {
    let mut names = files.to_vec();
    names.sort();
    let entries = names
        .into_iter()
        .map(|name| {
            let p = out.join(&name);
            let bytes = std::fs::read(&p).map_err(|e| HarnessError::io(&p, e))?;
            Ok(ManifestFile { path: name, sha256: sha256_hex(&bytes) })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let manifest = Manifest {
        tool: "mcsfa",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config_sha256: sha256_hex(config),
        files: entries,
    };
    let path = out.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
    Ok(path)
}

fn ensure_dir(out: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))
}

/// Results table, one log-MSE heatmap per (behavior, reward, correction),
/// one difference heatmap per corrected variant, and the manifest.
pub fn write_sweep(out: &Path, config: &[u8], results: &[ExperimentResult]) -> Result<Vec<String>, HarnessError> {
    if results.is_empty() {
        return Err(HarnessError::EmptyResults);
    }
    ensure_dir(out)?;
    let mut files = vec!["results.csv".to_string()];
    emit_csv(results, &out.join("results.csv"))?;
    for (diff, kind) in [(false, PlotKind::HeatmapLogMse), (true, PlotKind::HeatmapDiff)] {
        for (name, grid) in heatmap_grids(results, diff) {
            emit_plot(kind, &PlotInput::Grid(&grid), &out.join(&name))?;
            files.push(name);
        }
    }
    write_manifest(out, "sweep", config, &files)?;
    Ok(files)
}

/// Feature figures and stationary distributions (with simulated visit
/// frequencies) for every behavior, directedness value and reward position.
pub fn write_features(cfg: &SweepConfig, config: &[u8], out: &Path) -> Result<Vec<String>, HarnessError> {
    ensure_dir(out)?;
    let e_max = cfg.features().into_iter().max().unwrap_or(1);
    let lattice = match cfg.environment {
        EnvironmentSpec::Linear { .. } => None,
        EnvironmentSpec::Lattice { width, height } => Some((width, height)),
    };
    let mut files = Vec::new();
    let mut skipped = Vec::new();
    let mut stream = 0u64;
    for reward in cfg.rewards() {
        let env = cfg.environment.build(reward)?;
        let values = value_iteration(&env, cfg.gamma, mcsfa::value::DEFAULT_TOLERANCE)?;
        for &behavior in &cfg.behavior {
            for &param in &cfg.directedness_grid {
                stream += 1;
                let stem = format!("{}_{}_{}", behavior.as_str(), param, reward_tag(reward));
                let chain = match behavior_chain(&env, &values.q_star, behavior, param) {
                    Ok(c) => c,
                    Err(err) => {
                        skipped.push(format!("{stem}: {err}"));
                        continue;
                    }
                };
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(stream);
                let empirical = (cfg.validation_steps > 0).then(|| {
                    let path = simulate(&chain.p, env.goal(), cfg.validation_steps, &mut rng);
                    visit_frequencies(&path, env.n_states())
                });
                let name = format!("stationary_{stem}.svg");
                let title = format!("{} {stem}: stationary distribution", cfg.environment.label());
                let input = PlotInput::Chain { title: &title, mu: &chain.mu, empirical: empirical.as_deref() };
                emit_plot(PlotKind::Stationary, &input, &out.join(&name))?;
                files.push(name);
                for &correction in &cfg.corrections {
                    let basis = match corrected_basis(&chain, correction, e_max) {
                        Ok(b) => b,
                        Err(err) => {
                            skipped.push(format!("{stem}_{}: {err}", correction.as_str()));
                            continue;
                        }
                    };
                    let kind = if lattice.is_some() { PlotKind::Features2d } else { PlotKind::Features1d };
                    let name = format!("{}_{stem}_{}.svg", kind.as_str(), correction.as_str());
                    let title = format!("{} {stem} {}: slow features", cfg.environment.label(), correction.as_str());
                    let input = PlotInput::Basis { title: &title, y: &basis.y, highlight: cfg.highlight, lattice };
                    emit_plot(kind, &input, &out.join(&name))?;
                    files.push(name);
                }
            }
        }
    }
    if !skipped.is_empty() {
        let name = "skipped.txt".to_string();
        let path = out.join(&name);
        std::fs::write(&path, skipped.join("\n") + "\n").map_err(|e| HarnessError::io(&path, e))?;
        files.push(name);
    }
    write_manifest(out, "features", config, &files)?;
    Ok(files)
}
