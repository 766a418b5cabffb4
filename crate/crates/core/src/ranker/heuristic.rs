use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{RankedTest, TestOrdering};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Asc,
    Desc,
}

impl FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "asc" => Ok(Direction::Asc),
            "desc" => Ok(Direction::Desc),
            other => Err(Error::InvalidConfig(format!(
                "direction must be asc or desc, got `{other}`"
            ))),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Asc => "asc",
            Direction::Desc => "desc",
        })
    }
}

/// A single-feature ranker such as `F_FailRate_Total:desc`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeuristicSpec {
    pub feature: String,
    pub direction: Direction,
}

impl Default for HeuristicSpec {
    fn default() -> Self {
        HeuristicSpec {
            feature: "F_FailRate_Total".into(),
            direction: Direction::Desc,
        }
    }
}

impl fmt::Display for HeuristicSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.feature, self.direction)
    }
}

pub fn parse_heuristic(text: &str) -> Result<HeuristicSpec> {
    let (feature, direction) = match text.rsplit_once(':') {
        Some((f, d)) => (f, d.parse()?),
        None => (text, Direction::Desc),
    };
    Ok(HeuristicSpec {
        feature: feature.to_string(),
        direction,
    })
}

/// Stable sort of the matrix rows by one feature; ties keep test path order.
pub fn heuristic_rank(
    matrix: &FeatureMatrix,
    feature: &str,
    direction: Direction,
) -> Result<TestOrdering> {
    let col = matrix.catalog.index_of(feature)?;
    let mut idx: Vec<usize> = (0..matrix.rows.len()).collect();
    idx.sort_by(|&a, &b| {
        let (va, vb) = (matrix.rows[a].values[col], matrix.rows[b].values[col]);
        let primary = match direction {
            Direction::Asc => va.total_cmp(&vb),
            Direction::Desc => vb.total_cmp(&va),
        };
        primary.then_with(|| matrix.rows[a].test.cmp(&matrix.rows[b].test))
    });
    Ok(TestOrdering {
        build: matrix.build,
        ranked: idx
            .into_iter()
            .map(|i| RankedTest {
                test: matrix.rows[i].test.clone(),
                score: matrix.rows[i].values[col],
            })
            .collect(),
    })
}
