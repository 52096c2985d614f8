use std::io::Write;

use anyhow::Result;
use serde::{Deserialize, Serialize};

use super::config::{Scheduler, SimConfig};
use super::run::{run_simulation, SimReport, UtilitySource};
use super::scenario::Scenario;
use super::trace::BandwidthTrace;
use super::SimError;
use crate::elastic::ElasticConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub trace: String,
    pub scheduler: Scheduler,
    pub mean_utility: f64,
    pub mean_total_bitrate: f64,
    pub borrow_slots: usize,
    pub repay_slots: usize,
}

impl ComparisonRow {
    fn from_report(r: &SimReport) -> Self {
        Self {
            trace: r.trace.clone(),
            scheduler: r.scheduler,
            mean_utility: r.mean_utility,
            mean_total_bitrate: r.mean_total_bitrate,
            borrow_slots: r.borrow.borrow_slots,
            repay_slots: r.borrow.repay_slots,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Trace-major, then [`Scheduler::ALL`] order.
    pub rows: Vec<ComparisonRow>,
    pub reports: Vec<SimReport>,
}

impl Comparison {
    pub fn mean_utility(&self, trace: &str, scheduler: Scheduler) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.trace == trace && r.scheduler == scheduler)
            .map(|r| r.mean_utility)
    }
}

/// All four schedulers on every trace with identical inputs. Runs are
/// independent and execute on scoped threads; output order is fixed.
pub fn compare_schedulers(
    cfg: &SimConfig,
    traces: &[BandwidthTrace],
    scenario: &Scenario,
    utility: &UtilitySource,
    elastic_cfg: &ElasticConfig,
) -> Result<Comparison, SimError> {
    let jobs: Vec<(&BandwidthTrace, SimConfig)> = traces
        .iter()
        .flat_map(|t| {
            Scheduler::ALL.into_iter().map(move |s| {
                (
                    t,
                    SimConfig {
                        scheduler: s,
                        ..cfg.clone()
                    },
                )
            })
        })
        .collect();
    let results: Vec<Result<SimReport, SimError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(t, c)| scope.spawn(move || run_simulation(c, t, scenario, utility, elastic_cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });
    let reports = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(Comparison {
        rows: reports.iter().map(ComparisonRow::from_report).collect(),
        reports,
    })
}

pub fn write_comparison_csv(rows: &[ComparisonRow], writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-slot records with one `<camera>_bitrate,<camera>_resolution` column
/// pair per camera; idle cameras have bitrate 0 and an empty resolution.
pub fn write_slot_records_csv(report: &SimReport, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = [
        "slot",
        "bandwidth_kbps",
        "a_total",
        "d_kbit",
        "effective_budget_kbps",
        "budget_used_kbit",
        "total_bitrate",
        "predicted_utility",
        "realized_utility",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for id in &report.camera_ids {
        header.push(format!("{id}_bitrate"));
        header.push(format!("{id}_resolution"));
    }
    w.write_record(&header)?;
    for r in &report.records {
        let mut row = vec![
            r.slot.to_string(),
            r.bandwidth_kbps.to_string(),
            r.a_total.to_string(),
            r.d_kbit.to_string(),
            r.effective_budget_kbps.to_string(),
            r.budget_used_kbit.to_string(),
            r.total_bitrate.to_string(),
            r.predicted_utility.to_string(),
            r.realized_utility.to_string(),
        ];
        for c in &r.configs {
            row.push(c.bitrate.to_string());
            row.push(c.resolution.map(|x| x.to_string()).unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
