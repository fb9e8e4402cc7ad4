//! Prompt catalog: plain-text templates with `{name}` placeholders.
//!
//! The built-in catalog is compiled in from `prompts/`; a directory with the
//! same file names can be loaded instead to experiment with wording.

use std::path::Path;

use sha2::{Digest, Sha256};

pub const CATALOG_VERSION: &str = "roe-prompts/1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptCatalog {
    pub version: String,
    pub system_role: String,
    pub phase_rules: String,
    pub decision_instruction: String,
    pub phase_division_request: String,
    pub reflection_role: String,
    pub reflection_aspects: String,
    pub reflection_task: String,
    pub reflection_format: String,
    pub format_reminder: String,
    pub expert_experience: String,
}

const FILES: [&str; 10] = [
    "system_role.txt",
    "phase_rules.txt",
    "decision_instruction.txt",
    "phase_division_request.txt",
    "reflection_role.txt",
    "reflection_aspects.txt",
    "reflection_task.txt",
    "reflection_format.txt",
    "format_reminder.txt",
    "expert_experience.txt",
];

impl Default for PromptCatalog {
    fn default() -> Self {
        PromptCatalog::builtin()
    }
}

impl PromptCatalog {
    pub fn builtin() -> PromptCatalog {
        PromptCatalog {
            version: CATALOG_VERSION.to_string(),
            system_role: include_str!("../prompts/system_role.txt").to_string(),
            phase_rules: include_str!("../prompts/phase_rules.txt").to_string(),
            decision_instruction: include_str!("../prompts/decision_instruction.txt").to_string(),
            phase_division_request: include_str!("../prompts/phase_division_request.txt").to_string(),
            reflection_role: include_str!("../prompts/reflection_role.txt").to_string(),
            reflection_aspects: include_str!("../prompts/reflection_aspects.txt").to_string(),
            reflection_task: include_str!("../prompts/reflection_task.txt").to_string(),
            reflection_format: include_str!("../prompts/reflection_format.txt").to_string(),
            format_reminder: include_str!("../prompts/format_reminder.txt").to_string(),
            expert_experience: include_str!("../prompts/expert_experience.txt").to_string(),
        }
    }

    /// Loads every template from `dir`. The version becomes
    /// `<dir name>@<content hash prefix>` so manifests can tell catalogs apart.
    pub fn load_dir(dir: &Path) -> std::io::Result<PromptCatalog> {
        let read = |name: &str| std::fs::read_to_string(dir.join(name));
        let mut cat = PromptCatalog {
            version: String::new(),
            system_role: read(FILES[0])?,
            phase_rules: read(FILES[1])?,
            decision_instruction: read(FILES[2])?,
            phase_division_request: read(FILES[3])?,
            reflection_role: read(FILES[4])?,
            reflection_aspects: read(FILES[5])?,
            reflection_task: read(FILES[6])?,
            reflection_format: read(FILES[7])?,
            format_reminder: read(FILES[8])?,
            expert_experience: read(FILES[9])?,
        };
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "custom".into());
        cat.version = format!("{name}@{}", &cat.content_hash()[..12]);
        Ok(cat)
    }

    pub fn write_dir(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, body) in FILES.iter().zip(self.templates()) {
            std::fs::write(dir.join(name), body)?;
        }
        Ok(())
    }

    fn templates(&self) -> [&str; 10] {
        [
            &self.system_role,
            &self.phase_rules,
            &self.decision_instruction,
            &self.phase_division_request,
            &self.reflection_role,
            &self.reflection_aspects,
            &self.reflection_task,
            &self.reflection_format,
            &self.format_reminder,
            &self.expert_experience,
        ]
    }

    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for t in self.templates() {
            h.update(t.as_bytes());
            h.update([0u8]);
        }
        hex::encode(h.finalize())
    }
}

/// Replaces each `{key}` with its value. Unknown placeholders are left alone.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill_replaces_named_placeholders() {
        assert_eq!(fill("a {x} b {y} {x}", &[("x", "1"), ("y", "2")]), "a 1 b 2 1");
        assert_eq!(fill("{missing}", &[]), "{missing}");
    }

    #[test]
    fn builtin_templates_are_non_empty() {
        let c = PromptCatalog::builtin();
        assert!(c.templates().iter().all(|t| !t.trim().is_empty()));
        assert!(c.decision_instruction.contains("{max_actions}"));
        assert!(c.format_reminder.contains("{error}"));
    }

    #[test]
    fn directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mine");
        let c = PromptCatalog::builtin();
        c.write_dir(&path).unwrap();
        let loaded = PromptCatalog::load_dir(&path).unwrap();
        assert_eq!(loaded.content_hash(), c.content_hash());
        assert!(loaded.version.starts_with("mine@"));
    }
}
