//! Sweep configuration, read from a single JSON document.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use mcsfa::{make_lattice, make_linear, Environment, TrainingWeights};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    Linear { n: usize },
    Lattice { width: usize, height: usize },
}

impl EnvironmentSpec {
    pub fn n_states(&self) -> usize {
        match *self {
            EnvironmentSpec::Linear { n } => n,
            EnvironmentSpec::Lattice { width, height } => width * height,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            EnvironmentSpec::Linear { n } => format!("linear{n}"),
            EnvironmentSpec::Lattice { width, height } => format!("lattice{width}x{height}"),
        }
    }

    pub fn build(&self, reward: RewardPosition) -> Result<Environment<f64>, HarnessError> {
        let env = match (*self, reward) {
            (EnvironmentSpec::Linear { n }, RewardPosition::Index(i)) => make_linear(n, i)?,
            (EnvironmentSpec::Lattice { width, height }, RewardPosition::Coord([x, y])) => {
                make_lattice(width, height, (x, y))?
            }
            (EnvironmentSpec::Lattice { width, height }, RewardPosition::Index(i)) => {
                make_lattice(width, height, (i % width, i / width))?
            }
            (EnvironmentSpec::Linear { .. }, RewardPosition::Coord(c)) => {
                return Err(HarnessError::Config(format!("linear environment takes state indices, got {c:?}")))
            }
        };
        Ok(env)
    }

    /// Goal state index for a reward position.
    pub fn index_of(&self, reward: RewardPosition) -> usize {
        match (*self, reward) {
            (EnvironmentSpec::Lattice { width, .. }, RewardPosition::Coord([x, y])) => y * width + x,
            (_, RewardPosition::Index(i)) => i,
            (_, RewardPosition::Coord([x, _])) => x,
        }
    }

    fn contains(&self, reward: RewardPosition) -> bool {
        match (*self, reward) {
            (EnvironmentSpec::Linear { n }, RewardPosition::Index(i)) => i < n,
            (EnvironmentSpec::Lattice { width, height }, RewardPosition::Coord([x, y])) => x < width && y < height,
            (EnvironmentSpec::Lattice { .. }, RewardPosition::Index(i)) => i < self.n_states(),
            (EnvironmentSpec::Linear { .. }, RewardPosition::Coord(_)) => false,
        }
    }

    pub fn default_rewards(&self) -> Vec<RewardPosition> {
        match *self {
            EnvironmentSpec::Linear { n } => {
                let half = n.div_ceil(2);
                let stride = (n / 20).max(1);
                (0..half).step_by(stride).map(RewardPosition::Index).collect()
            }
            EnvironmentSpec::Lattice { width, height } => {
                let mut v = vec![
                    RewardPosition::Coord([0, 0]),
                    RewardPosition::Coord([width / 2, 0]),
                    RewardPosition::Coord([width / 2, height / 2]),
                ];
                v.dedup();
                v
            }
        }
    }
}

/// Reward location: a state index, or `[x, y]` on a lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RewardPosition {
    Index(usize),
    Coord([usize; 2]),
}

impl fmt::Display for RewardPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewardPosition::Index(i) => write!(f, "{i}"),
            RewardPosition::Coord([x, y]) => write!(f, "{x}:{y}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    ZetaGreedy,
    Boltzmann,
}

impl Behavior {
    pub fn as_str(&self) -> &'static str {
        match self {
            Behavior::ZetaGreedy => "zeta_greedy",
            Behavior::Boltzmann => "boltzmann",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    None,
    Scale,
    Lra,
}

impl Correction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Correction::None => "none",
            Correction::Scale => "scale",
            Correction::Lra => "lra",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Training {
    #[default]
    Uniform,
    Stationary,
}

impl From<Training> for TrainingWeights {
    fn from(t: Training) -> Self {
        match t {
            Training::Uniform => TrainingWeights::Uniform,
            Training::Stationary => TrainingWeights::Stationary,
        }
    }
}

fn default_behaviors() -> Vec<Behavior> {
    vec![Behavior::ZetaGreedy, Behavior::Boltzmann]
}

/// 0.40, 0.42, ..., 0.60
pub fn default_grid() -> Vec<f64> {
    (0..=10).map(|k| (40 + 2 * k) as f64 / 100.0).collect()
}

fn default_corrections() -> Vec<Correction> {
    vec![Correction::None, Correction::Scale, Correction::Lra]
}

fn default_gamma() -> f64 {
    mcsfa::value::DEFAULT_GAMMA
}

fn default_highlight() -> usize {
    5
}

fn default_validation_steps() -> usize {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub environment: EnvironmentSpec,
    #[serde(default = "default_behaviors")]
    pub behavior: Vec<Behavior>,
    #[serde(default = "default_grid")]
    pub directedness_grid: Vec<f64>,
    /// Defaults depend on the environment, see [`EnvironmentSpec::default_rewards`].
    #[serde(default)]
    pub reward_positions: Option<Vec<RewardPosition>>,
    /// Defaults to `1..=min(10, n-1)`.
    #[serde(default)]
    pub feature_counts: Option<Vec<usize>>,
    #[serde(default = "default_corrections")]
    pub corrections: Vec<Correction>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub training: Training,
    /// Features drawn in full color by `features`; the rest are dimmed.
    #[serde(default = "default_highlight")]
    pub highlight: usize,
    /// Simulation length for the visit-frequency check of `features`.
    #[serde(default = "default_validation_steps")]
    pub validation_steps: usize,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: SweepConfig = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), HarnessError> {
        let bytes = std::fs::read(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|e| HarnessError::Config(format!("{}: not UTF-8: {e}", path.display())))?;
        let cfg = Self::from_json(text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        Ok((cfg, bytes))
    }

    pub fn rewards(&self) -> Vec<RewardPosition> {
        self.reward_positions.clone().unwrap_or_else(|| self.environment.default_rewards())
    }

    pub fn features(&self) -> Vec<usize> {
        self.feature_counts
            .clone()
            .unwrap_or_else(|| (1..=10.min(self.environment.n_states().saturating_sub(1))).collect())
    }

    /// Number of rows a sweep produces.
    pub fn n_cells(&self) -> usize {
        self.behavior.len()
            * self.directedness_grid.len()
            * self.rewards().len()
            * self.features().len()
            * self.corrections.len()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        let n = self.environment.n_states();
        match self.environment {
            EnvironmentSpec::Linear { n } if n < 2 => return bad(format!("linear environment needs n >= 2, got {n}")),
            EnvironmentSpec::Lattice { width, height } if width == 0 || height == 0 || width * height < 2 => {
                return bad(format!("lattice {width}x{height} needs at least 2 states"))
            }
            _ => {}
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma = {} outside [0, 1)", self.gamma));
        }
        non_empty_unique("behavior", &self.behavior)?;
        non_empty_unique("corrections", &self.corrections)?;
        if self.directedness_grid.is_empty() {
            return bad("directedness_grid is empty".into());
        }
        for &z in &self.directedness_grid {
            if !(z > 0.0 && z < 1.0) {
                return bad(format!("directedness value {z} outside (0, 1)"));
            }
        }
        let mut seen = HashSet::new();
        for &z in &self.directedness_grid {
            if !seen.insert(z.to_bits()) {
                return bad(format!("directedness value {z} listed twice"));
            }
        }
        let rewards = self.rewards();
        non_empty_unique("reward_positions", &rewards)?;
        for r in &rewards {
            if !self.environment.contains(*r) {
                return bad(format!("reward position {r} outside {}", self.environment.label()));
            }
        }
        let idx: HashSet<usize> = rewards.iter().map(|&r| self.environment.index_of(r)).collect();
        if idx.len() != rewards.len() {
            return bad("reward_positions name the same state twice".into());
        }
        let features = self.features();
        non_empty_unique("feature_counts", &features)?;
        for &e in &features {
            if e == 0 || e >= n {
                return bad(format!("feature count {e} outside 1..={}", n - 1));
            }
        }
        Ok(())
    }
}

fn non_empty_unique<T: Eq + std::hash::Hash + fmt::Debug>(name: &str, items: &[T]) -> Result<(), HarnessError> {
    if items.is_empty() {
        return Err(HarnessError::Config(format!("{name} is empty")));
    }
    let mut seen = HashSet::new();
    for it in items {
        if !seen.insert(it) {
            return Err(HarnessError::Config(format!("{name} lists {it:?} twice")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = SweepConfig::from_json(r#"{"environment": {"type": "linear", "n": 200}}"#).unwrap();
        assert_eq!(cfg.directedness_grid.len(), 11);
        assert_eq!(cfg.directedness_grid[0], 0.4);
        assert_eq!(cfg.directedness_grid[10], 0.6);
        assert_eq!(cfg.gamma, 0.95);
        assert_eq!(cfg.features(), (1..=10).collect::<Vec<_>>());
        let rewards = cfg.rewards();
        assert!(rewards.contains(&RewardPosition::Index(90)));
        assert!(rewards.iter().all(|r| matches!(r, RewardPosition::Index(i) if *i < 100)));
    }

    #[test]
    fn lattice_defaults() {
        let cfg =
            SweepConfig::from_json(r#"{"environment": {"type": "lattice", "width": 20, "height": 20}}"#).unwrap();
        assert_eq!(
            cfg.rewards(),
            vec![RewardPosition::Coord([0, 0]), RewardPosition::Coord([10, 0]), RewardPosition::Coord([10, 10])]
        );
    }

    #[test]
    fn rejects_unknown_keys() {
        let err = SweepConfig::from_json(r#"{"environment": {"type": "linear", "n": 20}, "gamme": 0.9}"#);
        assert!(matches!(err, Err(HarnessError::Config(m)) if m.contains("gamme")));
        let err = SweepConfig::from_json(r#"{"environment": {"type": "linear", "n": 20, "m": 1}}"#);
        assert!(err.is_err());
    }

    #[test]
    fn rejects_out_of_range_values() {
        for body in [
            r#""directedness_grid": [0.0, 0.5]"#,
            r#""directedness_grid": [1.0]"#,
            r#""directedness_grid": []"#,
            r#""feature_counts": [20]"#,
            r#""feature_counts": [0]"#,
            r#""reward_positions": [20]"#,
            r#""reward_positions": [[1, 2]]"#,
            r#""gamma": 1.0"#,
            r#""corrections": []"#,
            r#""behavior": ["zeta_greedy", "zeta_greedy"]"#,
        ] {
            let text = format!(r#"{{"environment": {{"type": "linear", "n": 20}}, {body}}}"#);
            assert!(SweepConfig::from_json(&text).is_err(), "{body}");
        }
    }

    #[test]
    fn cell_count() {
        let cfg = SweepConfig::from_json(
            r#"{"environment": {"type": "linear", "n": 200}, "behavior": ["zeta_greedy"],
                "directedness_grid": [0.45, 0.5, 0.55], "reward_positions": [90],
                "feature_counts": [1,2,3,4,5,6,7,8,9,10], "corrections": ["none"]}"#,
        )
        .unwrap();
        assert_eq!(cfg.n_cells(), 30);
    }
}
