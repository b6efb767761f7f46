//! Workgroup detection: Leiden optimisation, recursive hierarchy down to a
//! maximum community size, and the size sweep with elbow selection.

mod elbow;
mod hierarchy;
mod leiden;
mod partition;

use std::collections::BTreeMap;
use std::io::Read;

use crate::error::{Error, Result};
use crate::graph::PersonId;

pub use elbow::{
    default_candidate_sizes, sweep_and_elbow, sweep_and_elbow_with, SizeModularityCurve,
    DEFAULT_CANDIDATE_SIZES,
};
pub use hierarchy::{detect_hierarchy, detect_hierarchy_with, HierarchyConfig, WorkgroupHierarchy};
pub use leiden::{leiden, leiden_with, LeidenConfig, Quality};
pub use partition::Partition;

/// `person_id,level0_id,...,leaf_id` rows in person id order.
pub fn format_hierarchy_csv(h: &WorkgroupHierarchy) -> String {
    let mut out = String::from("person_id");
    for l in 0..h.levels.len() {
        out.push_str(&format!(",level{l}_id"));
    }
    out.push_str(",leaf_id\n");
    for (p, leaf) in h.leaf().iter() {
        out.push_str(p.as_str());
        for level in &h.levels {
            let c = level.community_of(p).expect("levels cover the same nodes");
            out.push_str(&format!(",{c}"));
        }
        out.push_str(&format!(",{leaf}\n"));
    }
    out
}

/// Reads the leaf column of a hierarchy CSV (the last column).
pub fn parse_leaf_partition(reader: impl Read) -> Result<Partition> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut map = BTreeMap::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let location = format!("partition row {}", n + 2);
        let id = rec.get(0).ok_or_else(|| Error::parse(&location, "missing person_id"))?;
        let leaf = rec
            .get(rec.len() - 1)
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| Error::parse(&location, "bad leaf id"))?;
        map.insert(PersonId::new(id)?, leaf);
    }
    Ok(Partition::from_map(map, 0))
}
