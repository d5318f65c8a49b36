//! Language identifiers and the high/mid/low resource-group partition.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A language identifier (ISO-639-1 style code, e.g. "en", "th").
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LangId(pub String);

impl LangId {
    pub fn new(code: impl Into<String>) -> Self {
        LangId(code.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for LangId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for LangId {
    fn from(s: &str) -> Self {
        LangId(s.to_string())
    }
}

/// Resource-availability class of a language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupId {
    High,
    Mid,
    Low,
}

impl GroupId {
    pub const ALL: [GroupId; 3] = [GroupId::High, GroupId::Mid, GroupId::Low];

    pub fn as_str(&self) -> &'static str {
        match self {
            GroupId::High => "high",
            GroupId::Mid => "mid",
            GroupId::Low => "low",
        }
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One resource group and its member languages.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LanguageGroup {
    pub id: GroupId,
    pub members: Vec<LangId>,
}

/// A validated partition of a language set into the three resource groups.
#[derive(Debug, Clone)]
pub struct LanguageGroups {
    owner: BTreeMap<LangId, GroupId>,
}

impl LanguageGroups {
    /// Builds the partition from explicit groups, checking that the given
    /// language set is covered exactly once.
    pub fn new(groups: &[LanguageGroup], languages: &[LangId]) -> Result<Self> {
        let mut owner = BTreeMap::new();
        for group in groups {
            for lang in &group.members {
                if owner.insert(lang.clone(), group.id).is_some() {
                    return Err(Error::config(format!(
                        "groups: language `{lang}` assigned to more than one group"
                    )));
                }
            }
        }
        for lang in languages {
            if !owner.contains_key(lang) {
                return Err(Error::config(format!(
                    "groups: language `{lang}` is not assigned to any group"
                )));
            }
        }
        for lang in owner.keys() {
            if !languages.contains(lang) {
                return Err(Error::config(format!(
                    "groups: member `{lang}` is not a configured language"
                )));
            }
        }
        Ok(LanguageGroups { owner })
    }

    /// Builds the partition for `languages` from the built-in resource table.
    pub fn from_default_table(languages: &[LangId]) -> Result<Self> {
        let mut groups: Vec<LanguageGroup> = GroupId::ALL
            .iter()
            .map(|&id| LanguageGroup { id, members: Vec::new() })
            .collect();
        for lang in languages {
            let id = default_group_of(lang).ok_or_else(|| {
                Error::config(format!(
                    "groups: language `{lang}` has no default resource group; configure groups explicitly"
                ))
            })?;
            let slot = groups.iter_mut().find(|g| g.id == id).unwrap();
            slot.members.push(lang.clone());
        }
        LanguageGroups::new(&groups, languages)
    }

    /// Returns the owning group of `lang`.
    pub fn classify(&self, lang: &LangId) -> Result<GroupId> {
        self.owner.get(lang).copied().ok_or_else(|| {
            Error::config(format!("unknown language `{lang}`: not in any resource group"))
        })
    }

    pub fn members(&self, id: GroupId) -> Vec<LangId> {
        self.owner
            .iter()
            .filter(|(_, g)| **g == id)
            .map(|(l, _)| l.clone())
            .collect()
    }

    pub fn languages(&self) -> impl Iterator<Item = &LangId> {
        self.owner.keys()
    }
}

/// Built-in resource classification for the languages this crate knows about.
pub fn default_group_of(lang: &LangId) -> Option<GroupId> {
    match lang.as_str() {
        "en" | "de" | "fr" | "es" | "pt" | "it" => Some(GroupId::High),
        "ja" | "zh" | "ru" | "ko" | "vi" => Some(GroupId::Mid),
        "ar" | "bn" | "th" | "sw" | "te" | "id" => Some(GroupId::Low),
        _ => None,
    }
}

/// Whether the language is one this crate can classify and detect.
pub fn is_known_language(lang: &LangId) -> bool {
    default_group_of(lang).is_some()
}
