//! Prompt templates: five gridded-map prompting patterns and the two
//! text-only baseline prompts.

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum PromptTemplate {
    ZeroShot,
    AutoCot,
    LogicalCot,
    LogicalCotGrid,
    PersonaLogicalCotGrid,
    BaselineText,
    BaselineTextRegion,
}

impl PromptTemplate {
    pub fn id(self) -> &'static str {
        match self {
            Self::ZeroShot => "zero_shot",
            Self::AutoCot => "auto_cot",
            Self::LogicalCot => "logical_cot",
            Self::LogicalCotGrid => "logical_cot_grid",
            Self::PersonaLogicalCotGrid => "persona_logical_cot_grid",
            Self::BaselineText => "baseline_text",
            Self::BaselineTextRegion => "baseline_text_region",
        }
    }

    /// Gridded templates take a map image; baselines are text-only.
    pub fn is_gridded(self) -> bool {
        !matches!(self, Self::BaselineText | Self::BaselineTextRegion)
    }

    /// Templates whose text embeds the grid cell size.
    pub fn needs_grid_size(self) -> bool {
        matches!(self, Self::LogicalCotGrid | Self::PersonaLogicalCotGrid)
    }
}

/// Renders a cell size at two significant figures: "1.9 km" at or above
/// one kilometre, "450m" below it.
pub fn format_grid_size(cell_km: f64) -> String {
    fn sig2(x: f64) -> String {
        let exponent = x.abs().log10().floor() as i32;
        let decimals = (1 - exponent).max(0) as usize;
        let factor = 10f64.powi(1 - exponent);
        let rounded = (x * factor).round() / factor;
        format!("{rounded:.decimals$}")
    }
    if cell_km < 1.0 {
        format!("{}m", sig2(cell_km * 1000.0))
    } else {
        format!("{} km", sig2(cell_km))
    }
}

/// Substitutes the placeholders into the chosen template. Nothing beyond
/// placeholder substitution happens: the description is never truncated.
pub fn build_prompt(
    template: PromptTemplate,
    description: &str,
    cell_km: Option<f64>,
    region: Option<&str>,
    country: Option<&str>,
) -> Result<String> {
    let grid_sentence = if template.needs_grid_size() {
        let cell_km = cell_km.ok_or_else(|| {
            Error::Prompt(format!("template {} requires a grid cell size", template.id()))
        })?;
        if !(cell_km > 0.0) {
            return Err(Error::Prompt("grid cell size must be positive".into()));
        }
        let size = format_grid_size(cell_km);
        format!("Each grid cell is {size} × {size}.")
    } else {
        String::new()
    };
    let prompt = match template {
        PromptTemplate::ZeroShot => format!(
            "What grid cell/cells represent the following location description?\n\
             \n\
             Location Description: {description}"
        ),
        PromptTemplate::AutoCot => format!(
            "Based on the gridded map given, what grid cell/cells represent the following location description? Think step by step.\n\
             \n\
             Location Description: {description}"
        ),
        PromptTemplate::LogicalCot => format!(
            "Based on the gridded map given, what grid cell/cells represent the following location description?\n\
             \n\
             Think step by step. Identify the locations mentioned and use the relative spatial relations mentioned in the description.\n\
             \n\
             Location Description: {description}"
        ),
        PromptTemplate::LogicalCotGrid => format!(
            "Based on the gridded map given, what grid cell/cells represent the following location description?\n\
             \n\
             {grid_sentence}\n\
             \n\
             Think step by step. Identify the locations mentioned. If a distance is mentioned in the description, use the grid sizes to calculate the relative distances.\n\
             \n\
             Location Description: {description}"
        ),
        PromptTemplate::PersonaLogicalCotGrid => format!(
            "You are a language and cartography expert.\n\
             Based on the gridded map given, what grid cell/cells represent the following location description?\n\
             \n\
             {grid_sentence}\n\
             \n\
             Think step by step. Identify the locations mentioned. If a distance is mentioned in the description, use the grid sizes to calculate the relative distances.\n\
             \n\
             Location Description: {description}"
        ),
        PromptTemplate::BaselineText => format!(
            "You are a language and geography expert.\n\
             \n\
             Georeference the following location description. Answer with coordinates in decimal degrees.\n\
             \n\
             Location Description: {description}"
        ),
        PromptTemplate::BaselineTextRegion => {
            let region = region.ok_or_else(|| {
                Error::Prompt("baseline_text_region requires a region".into())
            })?;
            let country = country.ok_or_else(|| {
                Error::Prompt("baseline_text_region requires a country".into())
            })?;
            format!(
                "You are a language and geography expert.\n\
                 \n\
                 Georeference the following location description. Answer with coordinates in decimal degrees. The country and the district of the location are provided.\n\
                 \n\
                 This location is in {region}, {country}.\n\
                 \n\
                 Location Description: {description}"
            )
        }
    };
    Ok(prompt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_size_formatting() {
        assert_eq!(format_grid_size(1.88), "1.9 km");
        assert_eq!(format_grid_size(0.45), "450m");
        assert_eq!(format_grid_size(0.7), "700m");
        assert_eq!(format_grid_size(1.25), "1.3 km");
        assert_eq!(format_grid_size(12.5), "13 km");
        assert_eq!(format_grid_size(10.0), "10 km");
    }

    #[test]
    fn grid_size_sentence() {
        let p = build_prompt(PromptTemplate::LogicalCotGrid, "d", Some(1.88), None, None).unwrap();
        assert!(p.contains("Each grid cell is 1.9 km × 1.9 km."), "{p}");
    }

    #[test]
    fn baseline_openings() {
        let p = build_prompt(PromptTemplate::BaselineText, "d", None, None, None).unwrap();
        assert!(p.starts_with("You are a language and geography expert."));
        let p = build_prompt(
            PromptTemplate::BaselineTextRegion,
            "d",
            None,
            Some("Wellington"),
            Some("New Zealand"),
        )
        .unwrap();
        assert!(p.contains("This location is in Wellington, New Zealand."));
    }

    #[test]
    fn persona_opening() {
        let p = build_prompt(PromptTemplate::PersonaLogicalCotGrid, "d", Some(0.45), None, None).unwrap();
        assert!(p.starts_with("You are a language and cartography expert."));
        assert!(p.contains("Each grid cell is 450m × 450m."));
    }

    #[test]
    fn missing_placeholders_error() {
        assert!(build_prompt(PromptTemplate::LogicalCotGrid, "d", None, None, None).is_err());
        assert!(build_prompt(PromptTemplate::BaselineTextRegion, "d", None, None, None).is_err());
    }

    #[test]
    fn injective_in_description() {
        let a = build_prompt(PromptTemplate::ZeroShot, &"x".repeat(5000), None, None, None).unwrap();
        let b = build_prompt(PromptTemplate::ZeroShot, &"x".repeat(5001), None, None, None).unwrap();
        assert_ne!(a, b);
        assert!(a.len() > 5000, "no truncation");
    }
}
