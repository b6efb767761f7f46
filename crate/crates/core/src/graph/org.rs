use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};

use super::PersonId;

/// A dated snapshot of the formal reporting hierarchy.
#[derive(Debug, Clone, PartialEq)]
pub struct OrgTree {
    snapshot_date: NaiveDate,
    root: PersonId,
    parent: BTreeMap<PersonId, PersonId>,
    children: BTreeMap<PersonId, Vec<PersonId>>,
    depth: HashMap<PersonId, usize>,
}

impl OrgTree {
    /// Builds and validates a tree from `(employee, manager)` rows; the root row
    /// has no manager. Managers that never appear as employees count as roots.
    pub fn from_rows(
        snapshot_date: NaiveDate,
        rows: impl IntoIterator<Item = (PersonId, Option<PersonId>)>,
    ) -> Result<OrgTree> {
        let mut nodes = BTreeSet::new();
        let mut parent = BTreeMap::new();
        for (emp, mgr) in rows {
            nodes.insert(emp.clone());
            if let Some(m) = mgr {
                nodes.insert(m.clone());
                if let Some(prev) = parent.insert(emp.clone(), m.clone()) {
                    if prev != m {
                        return Err(Error::OrgInvalid(format!(
                            "{emp} has two managers ({prev}, {m}) on {snapshot_date}"
                        )));
                    }
                }
            }
        }

        // cycle check: walk up from every node, colouring finished chains
        let mut done: BTreeSet<&PersonId> = BTreeSet::new();
        for start in &nodes {
            let mut on_path: BTreeSet<&PersonId> = BTreeSet::new();
            let mut cur = start;
            loop {
                if done.contains(cur) {
                    break;
                }
                if !on_path.insert(cur) {
                    return Err(Error::OrgCycle(cur.to_string()));
                }
                match parent.get(cur) {
                    Some(p) => cur = p,
                    None => break,
                }
            }
            done.extend(on_path);
        }

        let roots: Vec<&PersonId> = nodes.iter().filter(|n| !parent.contains_key(*n)).collect();
        let root = match roots.as_slice() {
            [r] => (*r).clone(),
            [] => return Err(Error::OrgInvalid("no root".into())),
            many => {
                return Err(Error::OrgMultipleRoots(
                    many.iter().map(|r| r.to_string()).collect(),
                ))
            }
        };

        let mut children: BTreeMap<PersonId, Vec<PersonId>> = BTreeMap::new();
        for (c, p) in &parent {
            children.entry(p.clone()).or_default().push(c.clone());
        }
        for list in children.values_mut() {
            list.sort();
        }

        let mut depth = HashMap::with_capacity(nodes.len());
        depth.insert(root.clone(), 0);
        let mut stack = vec![root.clone()];
        while let Some(u) = stack.pop() {
            let d = depth[&u];
            for c in children.get(&u).into_iter().flatten() {
                depth.insert(c.clone(), d + 1);
                stack.push(c.clone());
            }
        }

        Ok(OrgTree {
            snapshot_date,
            root,
            parent,
            children,
            depth,
        })
    }

    pub fn snapshot_date(&self) -> NaiveDate {
        self.snapshot_date
    }

    pub fn root(&self) -> &PersonId {
        &self.root
    }

    pub fn parent(&self, id: &PersonId) -> Option<&PersonId> {
        self.parent.get(id)
    }

    pub fn children(&self, id: &PersonId) -> &[PersonId] {
        self.children.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, id: &PersonId) -> bool {
        self.depth.contains_key(id)
    }

    /// Distance from the root; `None` for ids outside the tree.
    pub fn depth(&self, id: &PersonId) -> Option<usize> {
        self.depth.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.depth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depth.is_empty()
    }

    /// All members in id order.
    pub fn members(&self) -> Vec<&PersonId> {
        let mut m: Vec<&PersonId> = self.depth.keys().collect();
        m.sort();
        m
    }

    /// `(employee, manager)` rows in id order.
    pub fn rows(&self) -> Vec<(&PersonId, Option<&PersonId>)> {
        self.members().into_iter().map(|p| (p, self.parent(p))).collect()
    }
}

#[derive(serde::Deserialize)]
struct OrgRow {
    employee_id: String,
    manager_id: Option<String>,
    snapshot_date: String,
}

/// Parses `employee_id,manager_id,snapshot_date` rows into one tree per date,
/// ordered by date.
pub fn parse_org_csv(reader: impl Read) -> Result<Vec<OrgTree>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut by_date: BTreeMap<NaiveDate, Vec<(PersonId, Option<PersonId>)>> = BTreeMap::new();
    for (line, rec) in rdr.deserialize::<OrgRow>().enumerate() {
        let row = rec?;
        let location = format!("org row {}", line + 2);
        let date = NaiveDate::parse_from_str(&row.snapshot_date, "%Y-%m-%d")
            .map_err(|e| Error::parse(&location, format!("bad snapshot_date: {e}")))?;
        let emp = PersonId::new(row.employee_id).map_err(|_| Error::parse(&location, "empty employee_id"))?;
        let mgr = match row.manager_id {
            Some(m) if !m.is_empty() => Some(PersonId::new(m)?),
            _ => None,
        };
        by_date.entry(date).or_default().push((emp, mgr));
    }
    by_date
        .into_iter()
        .map(|(date, rows)| OrgTree::from_rows(date, rows))
        .collect()
}

pub fn read_org_csv(path: impl AsRef<Path>) -> Result<Vec<OrgTree>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_org_csv(file)
}

pub fn write_org_csv(trees: &[OrgTree]) -> String {
    let mut out = String::from("employee_id,manager_id,snapshot_date\n");
    for t in trees {
        for (emp, mgr) in t.rows() {
            out.push_str(&format!(
                "{},{},{}\n",
                emp,
                mgr.map(PersonId::as_str).unwrap_or(""),
                t.snapshot_date.format("%Y-%m-%d")
            ));
        }
    }
    out
}
