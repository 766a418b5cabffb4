//! The canonical 150-column feature catalog.
//!
//! `catalog/features.csv` is the single source of truth for column order and
//! naming. The extraction code builds each group from the metric name lists
//! below; a test asserts that both agree.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const CATALOG_CSV: &str = include_str!("../catalog/features.csv");

pub const CATALOG_LEN: usize = 150;

pub const COMPLEXITY_METRICS: [&str; 31] = [
    "CountDeclFunction",
    "CountLine",
    "CountLineBlank",
    "CountLineCode",
    "CountLineCodeDecl",
    "CountLineCodeExe",
    "CountLineComment",
    "CountStmt",
    "CountStmtDecl",
    "CountStmtExe",
    "RatioCommentToCode",
    "MaxCyclomatic",
    "MaxCyclomaticModified",
    "MaxCyclomaticStrict",
    "MaxEssential",
    "MaxNesting",
    "SumCyclomatic",
    "SumCyclomaticModified",
    "SumCyclomaticStrict",
    "SumEssential",
    "CountDeclClass",
    "CountDeclClassMethod",
    "CountDeclClassVariable",
    "CountDeclExecutableUnit",
    "CountDeclInstanceMethod",
    "CountDeclInstanceVariable",
    "CountDeclMethod",
    "CountDeclMethodDefault",
    "CountDeclMethodPrivate",
    "CountDeclMethodProtected",
    "CountDeclMethodPublic",
];

pub const PROCESS_METRICS: [&str; 6] = [
    "CommitCount",
    "DistinctDevCount",
    "OwnersContribution",
    "MinorContributorCount",
    "OwnersExperience",
    "AllCommitersExperience",
];

pub const CHANGE_METRICS: [&str; 7] = [
    "LinesAdded",
    "LinesDeleted",
    "AddedChangeScattering",
    "DeletedChangeScattering",
    "DMMUnitSize",
    "DMMUnitComplexity",
    "DMMUnitInterfacing",
];

pub const REC_FEATURES: [&str; 19] = [
    "F_Age",
    "F_LastFailAge",
    "F_LastTransitionAge",
    "F_LastVerdict",
    "F_LastExeTime",
    "F_AvgExeTime_Recent",
    "F_AvgExeTime_Total",
    "F_MaxExeTime_Recent",
    "F_MaxExeTime_Total",
    "F_FailRate_Recent",
    "F_FailRate_Total",
    "F_AssertRate_Recent",
    "F_AssertRate_Total",
    "F_ExcRate_Recent",
    "F_ExcRate_Total",
    "F_TransitionRate_Recent",
    "F_TransitionRate_Total",
    "F_MaxTestFileFailRate",
    "F_MaxTestFileTransitionRate",
];

pub const F_COV_FEATURES: [&str; 4] = [
    "F_SumCovCScore",
    "F_SumCovIScore",
    "F_CovCCount",
    "F_CovICount",
];

pub const DET_COV_FEATURES: [&str; 2] = ["F_WSumCovCFaults", "F_WSumCovIFaults"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum FeatureGroup {
    REC,
    TES_COM,
    TES_PRO,
    TES_CHN,
    F_COV,
    COD_COV_COM,
    COD_COV_PRO,
    COD_COV_CHN,
    DET_COV,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 9] = [
        FeatureGroup::REC,
        FeatureGroup::TES_COM,
        FeatureGroup::TES_PRO,
        FeatureGroup::TES_CHN,
        FeatureGroup::F_COV,
        FeatureGroup::COD_COV_COM,
        FeatureGroup::COD_COV_PRO,
        FeatureGroup::COD_COV_CHN,
        FeatureGroup::DET_COV,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureGroup::REC => "REC",
            FeatureGroup::TES_COM => "TES_COM",
            FeatureGroup::TES_PRO => "TES_PRO",
            FeatureGroup::TES_CHN => "TES_CHN",
            FeatureGroup::F_COV => "F_COV",
            FeatureGroup::COD_COV_COM => "COD_COV_COM",
            FeatureGroup::COD_COV_PRO => "COD_COV_PRO",
            FeatureGroup::COD_COV_CHN => "COD_COV_CHN",
            FeatureGroup::DET_COV => "DET_COV",
        }
    }

    /// Groups whose values come from a preprocessed snapshot (dependency
    /// graph, static metrics, process metrics, fault counts) rather than from
    /// live execution records or the build's own change set.
    pub fn is_snapshot_derived(self) -> bool {
        !matches!(self, FeatureGroup::REC | FeatureGroup::TES_CHN)
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FeatureGroup::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown feature group `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDef {
    pub group: FeatureGroup,
    pub name: String,
}

#[derive(Debug, PartialEq, Eq)]
pub struct FeatureCatalog {
    defs: Vec<FeatureDef>,
    index: HashMap<String, usize>,
    fingerprint: String,
}

impl FeatureCatalog {
    /// The shipped catalog, parsed once.
    pub fn standard() -> Arc<FeatureCatalog> {
        static CATALOG: OnceLock<Arc<FeatureCatalog>> = OnceLock::new();
        CATALOG
            .get_or_init(|| {
                Arc::new(FeatureCatalog::parse(CATALOG_CSV).expect("bundled catalog is valid"))
            })
            .clone()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut defs = Vec::new();
        for (row, line) in text.lines().enumerate() {
            let line = line.trim();
            if row == 0 {
                if line != "group,name" {
                    return Err(Error::schema("features.csv", 1, "expected header `group,name`"));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let (group, name) = line
                .split_once(',')
                .ok_or_else(|| Error::schema("features.csv", row + 1, "expected two columns"))?;
            defs.push(FeatureDef {
                group: group.parse()?,
                name: name.to_string(),
            });
        }
        FeatureCatalog::from_defs(defs)
    }

    pub fn from_defs(defs: Vec<FeatureDef>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, def) in defs.iter().enumerate() {
            if index.insert(def.name.clone(), i).is_some() {
                return Err(Error::Invariant(format!("duplicate feature name {}", def.name)));
            }
        }
        let mut hasher = Sha256::new();
        for def in &defs {
            hasher.update(def.group.as_str().as_bytes());
            hasher.update(b",");
            hasher.update(def.name.as_bytes());
            hasher.update(b"\n");
        }
        let fingerprint = hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect::<String>();
        Ok(FeatureCatalog {
            defs,
            index,
            fingerprint,
        })
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn defs(&self) -> &[FeatureDef] {
        &self.defs
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.defs.iter().map(|d| d.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    pub fn group_of(&self, index: usize) -> FeatureGroup {
        self.defs[index].group
    }

    pub fn indices_of_group(&self, group: FeatureGroup) -> Vec<usize> {
        (0..self.defs.len())
            .filter(|&i| self.defs[i].group == group)
            .collect()
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }
}

/// Column names generated from the metric lists, in extraction order.
pub fn generated_defs() -> Vec<FeatureDef> {
    let mut defs = Vec::with_capacity(CATALOG_LEN);
    let mut push = |group, name: String| defs.push(FeatureDef { group, name });
    for n in REC_FEATURES {
        push(FeatureGroup::REC, n.to_string());
    }
    for n in COMPLEXITY_METRICS {
        push(FeatureGroup::TES_COM, format!("F_Tes_{n}"));
    }
    for n in PROCESS_METRICS {
        push(FeatureGroup::TES_PRO, format!("F_Tes_{n}"));
    }
    for n in CHANGE_METRICS {
        push(FeatureGroup::TES_CHN, format!("F_Tes_{n}"));
    }
    for n in F_COV_FEATURES {
        push(FeatureGroup::F_COV, n.to_string());
    }
    for scope in ["C", "I"] {
        for n in COMPLEXITY_METRICS {
            push(FeatureGroup::COD_COV_COM, format!("F_WSum{scope}_{n}"));
        }
    }
    for scope in ["C", "I"] {
        for n in PROCESS_METRICS {
            push(FeatureGroup::COD_COV_PRO, format!("F_WSum{scope}_{n}"));
        }
    }
    for n in CHANGE_METRICS {
        push(FeatureGroup::COD_COV_CHN, format!("F_WSumC_{n}"));
    }
    for n in DET_COV_FEATURES {
        push(FeatureGroup::DET_COV, n.to_string());
    }
    defs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_catalog_matches_generated_order() {
        let catalog = FeatureCatalog::standard();
        assert_eq!(catalog.len(), CATALOG_LEN);
        assert_eq!(catalog.defs(), generated_defs().as_slice());
    }

    #[test]
    fn group_sizes() {
        let catalog = FeatureCatalog::standard();
        let sizes: Vec<usize> = FeatureGroup::ALL
            .iter()
            .map(|&g| catalog.indices_of_group(g).len())
            .collect();
        assert_eq!(sizes, vec![19, 31, 6, 7, 4, 62, 12, 7, 2]);
    }

    #[test]
    fn duplicate_names_rejected() {
        let text = "group,name\nREC,F_Age\nREC,F_Age\n";
        assert!(FeatureCatalog::parse(text).is_err());
    }

    #[test]
    fn unknown_feature_lookup() {
        let catalog = FeatureCatalog::standard();
        assert!(matches!(catalog.index_of("F_Nope"), Err(Error::UnknownFeature(_))));
        assert_eq!(catalog.index_of("F_Age").unwrap(), 0);
    }
}
