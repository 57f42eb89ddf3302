//! Flow distributions: integer user counts per (OD, departure-time option).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Network, Time};

/// Counts indexed like [`Network::options`]: `counts[od][option]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FlowDistribution {
    counts: Vec<Vec<u64>>,
}

impl FlowDistribution {
    pub fn zeros(network: &Network) -> Self {
        Self {
            counts: (0..network.ods.len())
                .map(|k| vec![0; network.options(k).len()])
                .collect(),
        }
    }

    /// Wraps raw counts without checking them against a network.
    pub fn from_rows(counts: Vec<Vec<u64>>) -> Self {
        Self { counts }
    }

    /// Builds from raw counts, checking shape and conservation.
    pub fn from_counts(network: &Network, counts: Vec<Vec<u64>>) -> Result<Self> {
        let q = Self { counts };
        q.validate(network)?;
        Ok(q)
    }

    pub fn validate(&self, network: &Network) -> Result<()> {
        if self.counts.len() != network.ods.len() {
            return Err(Error::InvalidFlow(format!(
                "expected {} ODs, got {}",
                network.ods.len(),
                self.counts.len()
            )));
        }
        for (k, row) in self.counts.iter().enumerate() {
            let od = &network.ods[k];
            if row.len() != network.options(k).len() {
                return Err(Error::InvalidFlow(format!(
                    "OD {} has {} options, got {} counts",
                    od.id,
                    network.options(k).len(),
                    row.len()
                )));
            }
            let total: u64 = row.iter().sum();
            if total != od.demand {
                return Err(Error::InvalidFlow(format!(
                    "OD {} flows sum to {total}, demand is {}",
                    od.id, od.demand
                )));
            }
        }
        Ok(())
    }

    pub fn od(&self, k: usize) -> &[u64] {
        &self.counts[k]
    }

    pub fn od_mut(&mut self, k: usize) -> &mut [u64] {
        &mut self.counts[k]
    }

    pub fn get(&self, k: usize, option: usize) -> u64 {
        self.counts[k][option]
    }

    pub fn set(&mut self, k: usize, option: usize, count: u64) {
        self.counts[k][option] = count;
    }

    pub fn od_count(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    /// Moves `n` users of OD `k` from one option to another.
    pub fn move_users(&mut self, k: usize, from: usize, to: usize, n: u64) -> Result<()> {
        let row = &mut self.counts[k];
        if row[from] < n {
            return Err(Error::InvalidFlow(format!(
                "cannot move {n} users from option {from} holding {}",
                row[from]
            )));
        }
        row[from] -= n;
        row[to] += n;
        Ok(())
    }

    /// Writes the non-zero entries as `od_id,option_time,route_id,count`.
    pub fn write_csv<W: Write>(&self, network: &Network, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        for (k, row) in self.counts.iter().enumerate() {
            let od = &network.ods[k];
            for (i, &count) in row.iter().enumerate() {
                if count == 0 {
                    continue;
                }
                let opt = network.options(k)[i];
                w.serialize(QRow {
                    od_id: od.id.clone(),
                    option_time: opt.time,
                    route_id: od.routes[opt.route].id.clone(),
                    count,
                })?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a Q file. Entries not listed are zero; the result must satisfy
    /// conservation against the network's demand.
    pub fn read_csv<R: Read>(network: &Network, reader: R) -> Result<Self> {
        let mut q = Self::zeros(network);
        let mut rdr = csv::Reader::from_reader(reader);
        for row in rdr.deserialize() {
            let row: QRow = row?;
            let k = network
                .od_index(&row.od_id)
                .ok_or_else(|| Error::InvalidFlow(format!("unknown OD {}", row.od_id)))?;
            let r = network.route_index(k, &row.route_id).ok_or_else(|| {
                Error::InvalidFlow(format!("unknown route {} for OD {}", row.route_id, row.od_id))
            })?;
            let i = network.option_index(k, r, row.option_time).ok_or_else(|| {
                Error::InvalidFlow(format!(
                    "OD {} route {} has no option departing at {}",
                    row.od_id, row.route_id, row.option_time
                ))
            })?;
            q.counts[k][i] += row.count;
        }
        q.validate(network)?;
        Ok(q)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct QRow {
    od_id: String,
    option_time: Time,
    route_id: String,
    count: u64,
}
