use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::SimError;

/// One scheme's results on one workload, keyed by the run parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scheme: String,
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub cell_count: usize,
    pub n_offers: usize,
    pub n_requests: usize,
    pub capacity: u32,
    pub m: usize,
    pub alpha: usize,
    pub k: usize,
    pub ell: usize,
    pub preference: String,
    pub search_time_ms: f64,
    pub bytes_per_offer: f64,
    pub bytes_per_request: f64,
    /// Offers involved in served requests, counted per request, over the offer count.
    pub vehicle_service_rate: f64,
    /// Served requests over all requests.
    pub success_rate: f64,
    pub preference_success_rate: f64,
    /// Matches whose plaintext outcome differs from the encrypted one.
    pub fpp_events: usize,
    pub served: usize,
}

impl MetricsRow {
    /// Same row with wall-clock fields zeroed, for determinism checks.
    pub fn without_timing(&self) -> Self {
        Self { search_time_ms: 0.0, ..self.clone() }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
}

impl MetricsReport {
    pub fn row(&self, scheme: &str) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.scheme == scheme)
    }

    pub fn extend(&mut self, other: MetricsReport) {
        self.rows.extend(other.rows);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String, SimError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, SimError> {
        let rows = csv::Reader::from_reader(input).deserialize().collect::<Result<_, _>>()?;
        Ok(Self { rows })
    }

    /// Means of the numeric metrics over rows sharing a scheme, in first-seen
    /// scheme order. Parameters are taken from the first row of each group.
    pub fn mean_by_scheme(&self) -> Self {
        let mut schemes: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !schemes.contains(&r.scheme.as_str()) {
                schemes.push(&r.scheme);
            }
        }
        let rows = schemes
            .into_iter()
            .map(|s| {
                let group: Vec<_> = self.rows.iter().filter(|r| r.scheme == s).collect();
                let n = group.len() as f64;
                let mean = |f: fn(&MetricsRow) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / n;
                MetricsRow {
                    search_time_ms: mean(|r| r.search_time_ms),
                    bytes_per_offer: mean(|r| r.bytes_per_offer),
                    bytes_per_request: mean(|r| r.bytes_per_request),
                    vehicle_service_rate: mean(|r| r.vehicle_service_rate),
                    success_rate: mean(|r| r.success_rate),
                    preference_success_rate: mean(|r| r.preference_success_rate),
                    fpp_events: group.iter().map(|r| r.fpp_events).sum(),
                    served: group.iter().map(|r| r.served).sum(),
                    ..group[0].clone()
                }
            })
            .collect();
        Self { rows }
    }
}
