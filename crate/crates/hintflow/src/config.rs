//! Run configuration: arena profile, schedule, hyperparameters, group
//! partition, loop sizes, and the named baseline presets.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::arena::ArenaSpec;
use crate::error::{Error, Result};
use crate::grpo::TrainHyper;
use crate::lang::{GroupId, LangId, LanguageGroup, LanguageGroups};
use crate::schedules::{DecayKind, DecaySchedule};

fn default_schedule() -> DecaySchedule {
    DecaySchedule { kind: DecayKind::Cosine, horizon_t: 1200, rate_lambda: 6.0 }
}

fn default_steps() -> u64 {
    600
}

fn default_batch_tasks() -> usize {
    32
}

fn default_minibatch() -> usize {
    2
}

fn default_eval_every() -> u64 {
    20
}

fn default_eval_tasks() -> usize {
    240
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs/hintflow")
}

/// Complete configuration of a training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub arena: ArenaSpec,
    pub schedule: DecaySchedule,
    pub hyper: TrainHyper,
    /// Resource-group partition of the arena languages; omitted means the
    /// built-in resource table.
    pub groups: Option<BTreeMap<GroupId, Vec<LangId>>>,
    /// Total training steps (one rollout batch plus its minibatch updates
    /// per step).
    pub steps: u64,
    /// Tasks per rollout batch.
    pub batch_tasks: usize,
    /// Minibatch updates per rollout batch.
    pub minibatch: usize,
    pub eval_every: u64,
    pub eval_tasks: usize,
    pub out_dir: PathBuf,
    /// Overrides the schedule with a constant hint ratio (the fixed-hint
    /// baseline). The adaptive switch still applies unless tau disables it.
    pub fixed_hint_ratio: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            arena: ArenaSpec::default(),
            schedule: default_schedule(),
            hyper: TrainHyper::default(),
            groups: None,
            steps: default_steps(),
            batch_tasks: default_batch_tasks(),
            minibatch: default_minibatch(),
            eval_every: default_eval_every(),
            eval_tasks: default_eval_tasks(),
            out_dir: default_out_dir(),
            fixed_hint_ratio: None,
        }
    }
}

/// Named baseline presets reproducing the comparison axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// No hints ever: the switch fires immediately for every group.
    Vanilla,
    /// Constant full hints, no decay, no switch.
    FixedHint,
    /// Pure cosine decay, adaptive switch disabled.
    Cosine,
    /// Cosine decay plus the language-adaptive switch.
    Lang,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Vanilla => "vanilla",
            Preset::FixedHint => "fixed-hint",
            Preset::Cosine => "cosine",
            Preset::Lang => "lang",
        }
    }

    /// Applies the preset on top of a base configuration.
    pub fn apply(&self, config: &mut RunConfig) {
        match self {
            Preset::Vanilla => {
                config.hyper.tau = 0.0;
                config.fixed_hint_ratio = None;
            }
            Preset::FixedHint => {
                config.hyper.tau = 2.0;
                config.fixed_hint_ratio = Some(1.0);
            }
            Preset::Cosine => {
                config.hyper.tau = 2.0;
                config.fixed_hint_ratio = None;
            }
            Preset::Lang => {
                config.hyper.tau = 0.4;
                config.fixed_hint_ratio = None;
            }
        }
    }
}

impl RunConfig {
    /// Loads and validates a JSON config file. Unknown keys are rejected.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config `{}`: {e}", path.display()))
        })?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("config `{}`: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.arena.validate()?;
        self.schedule.validate()?;
        self.hyper.validate()?;
        if self.batch_tasks == 0 {
            return Err(Error::config("batch_tasks: must be >= 1"));
        }
        if self.minibatch == 0 {
            return Err(Error::config("minibatch: must be >= 1"));
        }
        if !self.batch_tasks.is_multiple_of(self.minibatch) {
            return Err(Error::config(format!(
                "minibatch: {} does not divide batch_tasks {} (sample count {} per batch)",
                self.minibatch,
                self.batch_tasks,
                self.batch_tasks * self.hyper.group_size
            )));
        }
        if self.eval_every == 0 {
            return Err(Error::config("eval_every: must be >= 1"));
        }
        if self.eval_tasks == 0 {
            return Err(Error::config("eval_tasks: must be >= 1"));
        }
        if let Some(r) = self.fixed_hint_ratio {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::config("fixed_hint_ratio: must lie in [0, 1]"));
            }
        }
        self.language_groups()?;
        Ok(())
    }

    /// Resolves the group partition against the arena's language set.
    pub fn language_groups(&self) -> Result<LanguageGroups> {
        let languages = self.arena.language_ids();
        match &self.groups {
            Some(map) => {
                let groups: Vec<LanguageGroup> = map
                    .iter()
                    .map(|(&id, members)| LanguageGroup { id, members: members.clone() })
                    .collect();
                LanguageGroups::new(&groups, &languages)
            }
            None => LanguageGroups::from_default_table(&languages),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn minimal_json_fills_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"steps": 10}"#).unwrap();
        let config = RunConfig::load(&path).unwrap();
        assert_eq!(config.steps, 10);
        assert_eq!(config.batch_tasks, 32);
        assert_eq!(config.hyper.group_size, 8);
        assert_eq!(config.arena.n_languages(), 6);
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"steps": 10, "stepz": 3}"#).unwrap();
        match RunConfig::load(&path) {
            Err(Error::Parse(msg)) => assert!(msg.contains("stepz"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn tau_sentinel_accepted_eps_zero_rejected() {
        let mut config = RunConfig::default();
        config.hyper.tau = 1.5;
        config.validate().unwrap();
        config.hyper.clip_eps = 0.0;
        match config.validate() {
            Err(Error::Config(msg)) => assert!(msg.contains("clip_eps")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn minibatch_must_divide_batch() {
        let config =
            RunConfig { batch_tasks: 10, minibatch: 3, ..RunConfig::default() };
        match config.validate() {
            Err(Error::Config(msg)) => assert!(msg.contains("minibatch")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn explicit_groups_must_partition() {
        let mut config = RunConfig::default();
        let mut map = BTreeMap::new();
        map.insert(GroupId::High, vec![LangId::from("en"), LangId::from("de")]);
        map.insert(GroupId::Mid, vec![LangId::from("ja"), LangId::from("zh")]);
        map.insert(GroupId::Low, vec![LangId::from("th")]); // sw missing
        config.groups = Some(map.clone());
        assert!(config.validate().is_err());

        map.get_mut(&GroupId::Low).unwrap().push(LangId::from("sw"));
        config.groups = Some(map);
        config.validate().unwrap();
    }

    #[test]
    fn presets_set_switch_semantics() {
        let mut vanilla = RunConfig::default();
        Preset::Vanilla.apply(&mut vanilla);
        assert_eq!(vanilla.hyper.tau, 0.0);

        let mut fixed = RunConfig::default();
        Preset::FixedHint.apply(&mut fixed);
        assert_eq!(fixed.fixed_hint_ratio, Some(1.0));
        assert!(fixed.hyper.tau > 1.0);

        let mut cosine = RunConfig::default();
        Preset::Cosine.apply(&mut cosine);
        assert!(cosine.hyper.tau > 1.0);
        assert_eq!(cosine.fixed_hint_ratio, None);

        let mut lang = RunConfig::default();
        Preset::Lang.apply(&mut lang);
        assert_eq!(lang.hyper.tau, 0.4);
    }
}
