use serde::{Deserialize, Serialize};

use crate::game::PolicyKind;
use crate::montecarlo::CaptureTimeTable;

use super::GridError;

/// Cells with less mass than this on either side do not engage.
pub const ENGAGEMENT_THRESHOLD: f64 = 1e-6;

/// Agents represented by one unit of density, per team.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitScale {
    pub defender: f64,
    pub intruder: f64,
}

impl Default for UnitScale {
    fn default() -> Self {
        Self { defender: 1.0, intruder: 1.0 }
    }
}

/// How a tabulated mean capture time becomes a capture score in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreOrientation {
    /// `mean / t_norm`: slower captures score higher.
    NormalizedTime,
    /// `1 − mean / t_norm + t_min / t_norm`: the fastest capture scores 1.
    #[default]
    FastCaptureBonus,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CellEngagement {
    pub engaged: bool,
    /// Defender agents per intruder agent in the cell.
    pub ratio: f64,
    /// Tabulated mean capture time at `ratio` divided by the table maximum.
    pub normalized_time: f64,
    pub score: f64,
    pub destroyed: f64,
    pub defender_mass: f64,
    pub intruder_mass: f64,
}

/// Resolves one cell: ratio-proportional destruction and a table-interpolated score.
pub fn resolve_cell(
    defender_mass: f64,
    intruder_mass: f64,
    units: UnitScale,
    table: &CaptureTimeTable,
    policy: PolicyKind,
    orientation: ScoreOrientation,
) -> Result<CellEngagement, GridError> {
    if defender_mass < ENGAGEMENT_THRESHOLD || intruder_mass < ENGAGEMENT_THRESHOLD {
        return Ok(CellEngagement {
            defender_mass,
            intruder_mass,
            ..CellEngagement::default()
        });
    }
    let ratio = (defender_mass * units.defender) / (intruder_mass * units.intruder);
    let destroyed = intruder_mass * ratio.min(1.0);
    let normalized_time = table.normalized_time(policy, ratio)?;
    let score = match orientation {
        ScoreOrientation::NormalizedTime => normalized_time,
        ScoreOrientation::FastCaptureBonus => 1.0 - normalized_time + table.t_min() / table.t_norm(),
    };
    Ok(CellEngagement {
        engaged: true,
        ratio,
        normalized_time,
        score,
        destroyed,
        defender_mass,
        intruder_mass,
    })
}

/// Per-cell engagement results of one step.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EngagementOutcome {
    pub cells: Vec<CellEngagement>,
}

impl EngagementOutcome {
    pub fn destroyed(&self) -> f64 {
        self.cells.iter().map(|c| c.destroyed).sum()
    }

    /// `Σ destroyed · score` over engaged cells.
    pub fn capture_credit(&self) -> f64 {
        self.cells
            .iter()
            .filter(|c| c.engaged)
            .map(|c| c.destroyed * c.score)
            .sum()
    }

    /// Largest defender mass among engaged cells, `None` without engagements.
    pub fn max_engaged_defender(&self) -> Option<f64> {
        self.cells
            .iter()
            .filter(|c| c.engaged)
            .map(|c| c.defender_mass)
            .reduce(f64::max)
    }
}

pub fn resolve_engagements(
    defender: &[f64],
    intruder: &[f64],
    units: UnitScale,
    table: &CaptureTimeTable,
    policy: PolicyKind,
    orientation: ScoreOrientation,
) -> Result<EngagementOutcome, GridError> {
    let cells = defender
        .iter()
        .zip(intruder)
        .map(|(&d, &i)| resolve_cell(d, i, units, table, policy, orientation))
        .collect::<Result<_, _>>()?;
    Ok(EngagementOutcome { cells })
}
