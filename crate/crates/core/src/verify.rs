//! Acceptance checks (populated alongside the CLI `verify` subcommand).

use crate::error::Result;

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: u8,
    pub label: &'static str,
    pub passed: bool,
    /// Human-readable measured-vs-tolerance detail lines.
    pub details: Vec<String>,
}

pub fn placeholder() -> Result<()> {
    Ok(())
}
