//! Prompt templates and demonstration rendering.

use crate::corpus::NewsRecord;

pub const GENERATION_TEMPLATE: &str = include_str!("../templates/generation.txt");
pub const ICL_TEMPLATE: &str = include_str!("../templates/icl.txt");

pub const DEMOS_SLOT: &str = "###<DEMONSTRATIONS>###";
pub const NUMBER_SLOT: &str = "###<NUMBER>###";
pub const NEW_SAMPLE_SLOT: &str = "###<NEW SAMPLE>###";

/// The section removed from the ICL template for zero-shot prompts.
pub const ICL_DEMO_SECTION: &str = "Here are some demonstrations:\n\n###<DEMONSTRATIONS>###\n\n";

/// Marker lines the mock backend keys on.
pub const GENERATION_MARKER: &str = "Now generate ";
pub const ICL_MARKER: &str = "Now predict only the class label for the follwoing news:\n";

pub fn render_demo(record: &NewsRecord) -> String {
    format!(
        "Title: {}\nDescription: {}\nClass Label: \"{}\"",
        record.title(),
        record.description(),
        record.label().prompt_name()
    )
}

pub fn render_demos(records: &[NewsRecord]) -> String {
    records
        .iter()
        .map(render_demo)
        .collect::<Vec<_>>()
        .join("\n\n")
}

pub fn render_query(record: &NewsRecord) -> String {
    format!(
        "Title: {}\nDescription: {}",
        record.title(),
        record.description()
    )
}
