use std::io::Write;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::catalog::FeatureGroup;
use crate::error::Result;
use crate::features::{GroupTimes, PrepTiming};

/// Wall-clock preprocessing cost behind one measured build, split by step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PrepCost {
    pub steps: PrepTiming,
    /// Updating the execution index with the builds since the last measurement.
    pub executions: Duration,
}

impl PrepCost {
    pub fn accumulate(&mut self, other: &PrepCost) {
        self.steps.analysis += other.steps.analysis;
        self.steps.graph += other.steps.graph;
        self.steps.process += other.steps.process;
        self.steps.pdf += other.steps.pdf;
        self.executions += other.executions;
    }

    /// Preprocessing charged to `group`. A step shared by several groups is
    /// charged in full to each of them.
    pub fn charged_to(&self, group: FeatureGroup) -> Duration {
        let s = &self.steps;
        match group {
            FeatureGroup::REC => self.executions,
            FeatureGroup::TES_COM => s.analysis,
            FeatureGroup::TES_PRO => s.process,
            FeatureGroup::TES_CHN => Duration::ZERO,
            FeatureGroup::F_COV | FeatureGroup::COD_COV_COM | FeatureGroup::COD_COV_CHN => {
                s.analysis + s.graph
            }
            FeatureGroup::COD_COV_PRO => s.process + s.analysis + s.graph,
            FeatureGroup::DET_COV => s.analysis + s.graph + s.pdf,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupTiming {
    pub group: FeatureGroup,
    /// Preprocessing seconds per measured build.
    pub p: f64,
    /// Measurement seconds per measured build.
    pub m: f64,
    pub t: f64,
}

/// Mean per-build preprocessing and measurement time of each feature group.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub builds: usize,
    pub groups: Vec<GroupTiming>,
}

impl TimingReport {
    /// Averages totals accumulated over `builds` measured builds.
    pub fn from_totals(prep: &PrepCost, measure: &GroupTimes, builds: usize) -> Self {
        let per_build = |d: Duration| {
            if builds == 0 {
                0.0
            } else {
                d.as_secs_f64() / builds as f64
            }
        };
        let groups = FeatureGroup::ALL
            .iter()
            .map(|&group| {
                let p = per_build(prep.charged_to(group));
                let m = per_build(measure.get(group));
                GroupTiming { group, p, m, t: p + m }
            })
            .collect();
        TimingReport { builds, groups }
    }

    pub fn get(&self, group: FeatureGroup) -> Option<&GroupTiming> {
        self.groups.iter().find(|g| g.group == group)
    }

    /// `group,P,M,T` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["group", "P", "M", "T"])?;
        for g in &self.groups {
            w.write_record([
                g.group.as_str().to_string(),
                g.p.to_string(),
                g.m.to_string(),
                g.t.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
