use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::BuildId;

/// APFD_C of the model trained for `model_build` on the failed build `rw`
/// failed builds later.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayPair {
    pub model_build: BuildId,
    pub build: BuildId,
    pub rw: usize,
    pub apfdc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub rw: usize,
    pub mean_apfdc: f64,
    pub n_pairs: usize,
}

/// Mean APFD_C per retraining window.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    pub points: Vec<DecayPoint>,
    pub pairs: Vec<DecayPair>,
}

impl DecayCurve {
    pub fn from_pairs(pairs: Vec<DecayPair>) -> Self {
        let mut by_rw: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for p in &pairs {
            by_rw.entry(p.rw).or_default().push(p.apfdc);
        }
        let points = by_rw
            .into_iter()
            .map(|(rw, v)| DecayPoint {
                rw,
                mean_apfdc: v.iter().sum::<f64>() / v.len() as f64,
                n_pairs: v.len(),
            })
            .collect();
        DecayCurve { points, pairs }
    }

    pub fn pairs_at(&self, rw: usize) -> impl Iterator<Item = &DecayPair> {
        self.pairs.iter().filter(move |p| p.rw == rw)
    }

    /// Least-squares slope of mean APFD_C against RW over `rws`, or `None`
    /// with fewer than two points in range.
    pub fn slope(&self, rws: std::ops::RangeInclusive<usize>) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter(|p| rws.contains(&p.rw))
            .map(|p| (p.rw as f64, p.mean_apfdc))
            .collect();
        least_squares_slope(&pts)
    }

    /// `rw,mean_apfdc,n_pairs` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rw", "mean_apfdc", "n_pairs"])?;
        for p in &self.points {
            w.write_record([p.rw.to_string(), p.mean_apfdc.to_string(), p.n_pairs.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}
