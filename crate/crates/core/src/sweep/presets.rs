//! Shipped sweep configurations.

macro_rules! presets {
    ($($name:literal),* $(,)?) => {
        /// Name and text of every shipped preset.
        pub const PRESETS: &[(&str, &str)] = &[$(($name, include_str!(concat!("../../presets/", $name, ".conf")))),*];
    };
}

presets!(
    "fig2a_parallel",
    "fig2a_perp",
    "fig2bc_grid",
    "fig2d",
    "fig2e",
    "fig3_parallel",
    "fig3_perp",
    "fig4bc",
    "fig4d",
    "fig4ef",
);

/// Text of a shipped preset.
pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// Names of all shipped presets.
pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::config::parse_config;

    #[test]
    fn every_preset_parses_and_resolves_by_name() {
        for (name, text) in PRESETS {
            let from_file = parse_config(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            let by_name = parse_config(&format!("preset = {name}")).unwrap();
            assert_eq!(by_name.preset.as_deref(), Some(*name));
            assert_eq!(by_name.render(), from_file.render(), "{name}");
            assert!(from_file.spec_at(&from_file.points()[0]).is_ok(), "{name}");
        }
    }
}
