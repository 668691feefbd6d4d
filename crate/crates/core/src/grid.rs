//! Radial feeder model: buses, branches, per-unit bases and the levelized
//! branch ordering used by the sweep solver.
//!
//! Bus ids in input files are arbitrary positive integers. Internally every
//! bus is addressed by its dense 0-based position in [`Network::buses`];
//! reports always use the original ids.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const BUS_HEADER: [&str; 4] = ["id", "p_load_kw", "q_load_kvar", "is_slack"];
pub const BRANCH_HEADER: [&str; 4] = ["from", "to", "r_ohm", "x_ohm"];

#[derive(Debug, Error)]
pub enum GridError {
    #[error("cannot read {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{source_name}, line {line}: {message}")]
    Parse {
        source_name: String,
        line: u64,
        message: String,
    },
    #[error("invalid {what}: {message}")]
    Invalid { what: &'static str, message: String },
    #[error("branch {from}-{to} references unknown bus {bus}")]
    UnknownBus { from: u32, to: u32, bus: u32 },
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("network has no slack bus")]
    NoSlack,
    #[error("network has multiple slack buses: {0:?}")]
    MultipleSlack(Vec<u32>),
    #[error("branch {0}-{0} is a self-loop")]
    SelfLoop(u32),
    #[error("branch {from}-{to} closes a cycle")]
    Cycle { from: u32, to: u32 },
    #[error("bus {0} is not connected to the slack bus")]
    Disconnected(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: u32,
    pub p_load_kw: f64,
    pub q_load_kvar: f64,
    pub is_slack: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: u32,
    pub to: u32,
    pub r_ohm: f64,
    pub x_ohm: f64,
}

/// Per-unit base of the feeder: three-phase power in kVA and line voltage in kV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBase {
    pub s_base_kva: f64,
    pub v_base_kv: f64,
}

impl SystemBase {
    pub fn new(s_base_kva: f64, v_base_kv: f64) -> Result<Self, GridError> {
        let base = Self {
            s_base_kva,
            v_base_kv,
        };
        base.validate()?;
        Ok(base)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if !(self.s_base_kva.is_finite() && self.s_base_kva > 0.0)
            || !(self.v_base_kv.is_finite() && self.v_base_kv > 0.0)
        {
            return Err(GridError::Invalid {
                what: "system base",
                message: format!(
                    "s_base = {} kVA and v_base = {} kV must both be positive",
                    self.s_base_kva, self.v_base_kv
                ),
            });
        }
        Ok(())
    }

    /// Impedance base in ohm.
    pub fn z_base_ohm(&self) -> f64 {
        self.v_base_kv * self.v_base_kv * 1000.0 / self.s_base_kva
    }

    pub fn ohm_to_pu(&self, ohm: f64) -> f64 {
        ohm / self.z_base_ohm()
    }

    pub fn pu_to_ohm(&self, pu: f64) -> f64 {
        pu * self.z_base_ohm()
    }

    pub fn kw_to_pu(&self, kw: f64) -> f64 {
        kw / self.s_base_kva
    }

    pub fn pu_to_kw(&self, pu: f64) -> f64 {
        pu * self.s_base_kva
    }
}

impl Default for SystemBase {
    /// 1 MVA / 12.66 kV, the customary base of the 33-bus feeder.
    fn default() -> Self {
        Self {
            s_base_kva: 1000.0,
            v_base_kv: 12.66,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoltageLimits {
    pub v_min: f64,
    pub v_max: f64,
}

impl VoltageLimits {
    pub fn new(v_min: f64, v_max: f64) -> Result<Self, GridError> {
        let limits = Self { v_min, v_max };
        limits.validate()?;
        Ok(limits)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if !(self.v_min > 0.0 && self.v_min < self.v_max && self.v_max.is_finite()) {
            return Err(GridError::Invalid {
                what: "voltage limits",
                message: format!("need 0 < v_min < v_max, got [{}, {}]", self.v_min, self.v_max),
            });
        }
        Ok(())
    }

    /// Distance of `v` outside the band, zero inside it.
    pub fn excursion(&self, v: f64) -> f64 {
        (self.v_min - v).max(v - self.v_max).max(0.0)
    }
}

impl Default for VoltageLimits {
    fn default() -> Self {
        Self {
            v_min: 0.95,
            v_max: 1.05,
        }
    }
}

/// One branch of the tree oriented away from the slack bus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepBranch {
    /// Index into [`Network::branches`].
    pub branch: usize,
    /// Upstream bus index.
    pub parent: usize,
    /// Downstream bus index.
    pub child: usize,
    pub z_pu: Complex64,
}

/// Breadth-first branch ordering from the slack outward.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOrder {
    pub slack: usize,
    pub branches: Vec<SweepBranch>,
}

impl SweepOrder {
    /// Oriented `(from, to)` bus-id pairs, for reporting.
    pub fn id_pairs(&self, buses: &[Bus]) -> Vec<(u32, u32)> {
        self.branches
            .iter()
            .map(|b| (buses[b.parent].id, buses[b.child].id))
            .collect()
    }
}

/// Checks that the branches form a spanning tree rooted at the unique slack
/// bus and returns the levelized orientation of every branch.
pub fn validate_radial(buses: &[Bus], branches: &[Branch]) -> Result<SweepOrder, GridError> {
    let index = bus_index(buses)?;

    let slacks: Vec<u32> = buses.iter().filter(|b| b.is_slack).map(|b| b.id).collect();
    let slack = match slacks.as_slice() {
        [] => return Err(TopologyError::NoSlack.into()),
        [id] => index[id],
        _ => return Err(TopologyError::MultipleSlack(slacks).into()),
    };

    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); buses.len()];
    for (k, br) in branches.iter().enumerate() {
        if br.from == br.to {
            return Err(TopologyError::SelfLoop(br.from).into());
        }
        let lookup = |bus: u32| {
            index.get(&bus).copied().ok_or(GridError::UnknownBus {
                from: br.from,
                to: br.to,
                bus,
            })
        };
        let (a, b) = (lookup(br.from)?, lookup(br.to)?);
        adjacency[a].push((b, k));
        adjacency[b].push((a, k));
    }

    let mut visited = vec![false; buses.len()];
    let mut used = vec![false; branches.len()];
    let mut order = Vec::with_capacity(branches.len());
    let mut queue = VecDeque::from([slack]);
    visited[slack] = true;
    while let Some(parent) = queue.pop_front() {
        for &(child, k) in &adjacency[parent] {
            if used[k] {
                continue;
            }
            used[k] = true;
            if visited[child] {
                let br = &branches[k];
                return Err(TopologyError::Cycle {
                    from: br.from,
                    to: br.to,
                }
                .into());
            }
            visited[child] = true;
            order.push(SweepBranch {
                branch: k,
                parent,
                child,
                z_pu: Complex64::new(0.0, 0.0),
            });
            queue.push_back(child);
        }
    }
    if let Some(i) = visited.iter().position(|v| !v) {
        return Err(TopologyError::Disconnected(buses[i].id).into());
    }
    // Every bus is reachable and no branch closed a loop, so every branch
    // was consumed by the traversal.
    debug_assert_eq!(order.len(), branches.len());

    Ok(SweepOrder {
        slack,
        branches: order,
    })
}

fn bus_index(buses: &[Bus]) -> Result<HashMap<u32, usize>, GridError> {
    let mut index = HashMap::with_capacity(buses.len());
    for (i, bus) in buses.iter().enumerate() {
        if index.insert(bus.id, i).is_some() {
            return Err(GridError::Invalid {
                what: "bus table",
                message: format!("duplicate bus id {}", bus.id),
            });
        }
    }
    Ok(index)
}

/// A validated radial feeder. Immutable once built.
#[derive(Debug, Clone)]
pub struct Network {
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    base: SystemBase,
    index: HashMap<u32, usize>,
    sweep: SweepOrder,
}

impl Network {
    pub fn new(buses: Vec<Bus>, branches: Vec<Branch>, base: SystemBase) -> Result<Self, GridError> {
        base.validate()?;
        if buses.is_empty() {
            return Err(GridError::Invalid {
                what: "bus table",
                message: "no buses".into(),
            });
        }
        for bus in &buses {
            if !(bus.p_load_kw.is_finite() && bus.p_load_kw >= 0.0)
                || !(bus.q_load_kvar.is_finite() && bus.q_load_kvar >= 0.0)
            {
                return Err(GridError::Invalid {
                    what: "bus",
                    message: format!("bus {} has a negative or non-finite load", bus.id),
                });
            }
        }
        for br in &branches {
            if !(br.r_ohm.is_finite() && br.r_ohm >= 0.0) || !(br.x_ohm.is_finite() && br.x_ohm >= 0.0) {
                return Err(GridError::Invalid {
                    what: "branch",
                    message: format!("branch {}-{} has a negative or non-finite impedance", br.from, br.to),
                });
            }
        }
        let index = bus_index(&buses)?;
        let mut sweep = validate_radial(&buses, &branches)?;
        for sb in &mut sweep.branches {
            let br = &branches[sb.branch];
            sb.z_pu = Complex64::new(base.ohm_to_pu(br.r_ohm), base.ohm_to_pu(br.x_ohm));
        }
        Ok(Self {
            buses,
            branches,
            base,
            index,
            sweep,
        })
    }

    /// Parses the two CSV tables from in-memory text.
    pub fn from_csv_str(bus_csv: &str, branch_csv: &str, base: SystemBase) -> Result<Self, GridError> {
        let buses = parse_buses(bus_csv.as_bytes(), "buses.csv")?;
        let branches = parse_branches(branch_csv.as_bytes(), "branches.csv")?;
        Self::new(buses, branches, base)
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn base(&self) -> SystemBase {
        self.base
    }

    pub fn sweep_order(&self) -> &SweepOrder {
        &self.sweep
    }

    pub fn slack_index(&self) -> usize {
        self.sweep.slack
    }

    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    /// Dense index of an external bus id.
    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.index.get(&id).copied()
    }

    /// Total demand as (kW, kVAr).
    pub fn total_load(&self) -> (f64, f64) {
        self.buses
            .iter()
            .fold((0.0, 0.0), |(p, q), b| (p + b.p_load_kw, q + b.q_load_kvar))
    }

    /// Non-slack bus ids in file order.
    pub fn load_bus_ids(&self) -> Vec<u32> {
        self.buses.iter().filter(|b| !b.is_slack).map(|b| b.id).collect()
    }
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (p, q) = self.total_load();
        write!(
            f,
            "{} buses, {} branches, load {:.1} kW / {:.1} kVAr",
            self.buses.len(),
            self.branches.len(),
            p,
            q
        )
    }
}

/// Reads `buses.csv` and `branches.csv` and builds a validated network.
pub fn load_network(bus_file: &Path, branch_file: &Path, base: SystemBase) -> Result<Network, GridError> {
    let buses = parse_buses(open(bus_file)?, &bus_file.display().to_string())?;
    let branches = parse_branches(open(branch_file)?, &branch_file.display().to_string())?;
    Network::new(buses, branches, base)
}

fn open(path: &Path) -> Result<File, GridError> {
    File::open(path).map_err(|source| GridError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Strict CSV reader: the header must match `expected` exactly and every row
/// must have the same number of fields.
pub(crate) fn read_table<R: Read>(
    reader: R,
    source_name: &str,
    expected: &[&str],
) -> Result<Vec<(u64, csv::StringRecord)>, GridError> {
    let parse_err = |line: u64, message: String| GridError::Parse {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let found: Vec<&str> = header.iter().collect();
    if found != expected {
        return Err(parse_err(
            1,
            format!("expected header `{}`, found `{}`", expected.join(","), found.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        rows.push((line, record));
    }
    Ok(rows)
}

pub(crate) fn field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    col: usize,
    name: &str,
    source_name: &str,
    line: u64,
) -> Result<T, GridError> {
    let raw = record.get(col).unwrap_or("");
    raw.parse().map_err(|_| GridError::Parse {
        source_name: source_name.to_string(),
        line,
        message: format!("column `{name}`: cannot parse `{raw}`"),
    })
}

fn parse_buses<R: Read>(reader: R, source_name: &str) -> Result<Vec<Bus>, GridError> {
    read_table(reader, source_name, &BUS_HEADER)?
        .into_iter()
        .map(|(line, rec)| {
            let slack: u8 = field(&rec, 3, "is_slack", source_name, line)?;
            if slack > 1 {
                return Err(GridError::Parse {
                    source_name: source_name.to_string(),
                    line,
                    message: format!("column `is_slack` must be 0 or 1, found {slack}"),
                });
            }
            Ok(Bus {
                id: field(&rec, 0, "id", source_name, line)?,
                p_load_kw: field(&rec, 1, "p_load_kw", source_name, line)?,
                q_load_kvar: field(&rec, 2, "q_load_kvar", source_name, line)?,
                is_slack: slack == 1,
            })
        })
        .collect()
}

fn parse_branches<R: Read>(reader: R, source_name: &str) -> Result<Vec<Branch>, GridError> {
    read_table(reader, source_name, &BRANCH_HEADER)?
        .into_iter()
        .map(|(line, rec)| {
            Ok(Branch {
                from: field(&rec, 0, "from", source_name, line)?,
                to: field(&rec, 1, "to", source_name, line)?,
                r_ohm: field(&rec, 2, "r_ohm", source_name, line)?,
                x_ohm: field(&rec, 3, "x_ohm", source_name, line)?,
            })
        })
        .collect()
}
