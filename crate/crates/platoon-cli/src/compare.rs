//! Batch comparison of the pipeline against both baselines.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use platoon::baselines::{compute_metrics, solve_p_platooning, solve_s_platooning, spor, Metrics};
use platoon::dual::{trace_table, SolveReport, TraceRow};
use platoon::pipeline::{run_pipeline, Choice, InstanceDocument, PipelineConfig, PipelineReport};
use platoon::{Error, RoadNetwork};
use serde::Serialize;

use crate::output::COMPARE_SCHEMA;

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub index: usize,
    pub instance: InstanceDocument,
    pub status: platoon::dual::Status,
    pub choice: Choice,
    pub fuel: f64,
    pub separate_fuel: Option<f64>,
    pub p_fuel: Option<f64>,
    pub s_fuel: Option<f64>,
    pub lower_bound: Option<f64>,
    pub spor: f64,
    pub metrics: Option<Metrics>,
    pub wall_time: f64,
    #[serde(skip)]
    trace: Vec<TraceRow>,
}

pub struct Comparison {
    pub rows: Vec<Row>,
}

fn baseline(result: platoon::Result<SolveReport>) -> Result<Option<SolveReport>> {
    match result {
        Ok(r) => Ok(Some(r)),
        Err(Error::Infeasible) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// The pipeline report seen as a plain solve report, for the metrics.
fn as_solve_report(r: &PipelineReport) -> SolveReport {
    SolveReport {
        status: r.status,
        outcome: r.outcome.clone(),
        total_fuel: r.total_fuel,
        lower_bound: r.lower_bound,
        posterior_bound: r.posterior_bound,
        gap_bound: r.gap_bound,
        iterations: r.solver.as_ref().map_or(0, |s| s.iterations),
        wall_time: r.wall_time,
        trace: Vec::new(),
    }
}

fn solve_one(net: &RoadNetwork, index: usize, doc: &InstanceDocument, config: &PipelineConfig) -> Result<Row> {
    let (tasks, eta) = doc.resolve(net).with_context(|| format!("instance {index}"))?;
    let ours = run_pipeline(net, &tasks, eta, config)?;
    let p = baseline(solve_p_platooning(net, &tasks, eta))?;
    let s = baseline(solve_s_platooning(net, &tasks, eta))?;
    let metrics = match ours.separate_fuel {
        Some(sep) if ours.total_fuel.is_finite() => Some(compute_metrics(
            net,
            &tasks,
            &as_solve_report(&ours),
            p.as_ref(),
            s.as_ref(),
            sep,
        )?),
        _ => None,
    };
    Ok(Row {
        index,
        instance: doc.clone(),
        status: ours.status,
        choice: ours.choice,
        fuel: ours.total_fuel,
        separate_fuel: ours.separate_fuel,
        p_fuel: p.map(|r| r.total_fuel),
        s_fuel: s.map(|r| r.total_fuel),
        lower_bound: ours.lower_bound,
        spor: spor(net, &tasks)?,
        metrics,
        wall_time: ours.wall_time,
        trace: ours.solver.map(|r| r.trace).unwrap_or_default(),
    })
}

/// Solves every instance; `jobs` worker threads take interleaved instances,
/// and rows come back in input order.
pub fn run(net: &RoadNetwork, docs: &[InstanceDocument], config: &PipelineConfig, jobs: usize) -> Result<Comparison> {
    let jobs = jobs.clamp(1, docs.len().max(1));
    let mut slots: Vec<Option<Result<Row>>> = (0..docs.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let workers: Vec<_> = (0..jobs)
            .map(|w| {
                scope.spawn(move || {
                    (w..docs.len())
                        .step_by(jobs)
                        .map(|i| (i, solve_one(net, i, &docs[i], config)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for worker in workers {
            for (i, row) in worker.join().expect("worker panicked") {
                slots[i] = Some(row);
            }
        }
    });
    let rows = slots.into_iter().map(|r| r.expect("every slot filled")).collect::<Result<_>>()?;
    Ok(Comparison { rows })
}

fn cell(x: Option<f64>) -> String {
    x.filter(|v| v.is_finite()).map_or_else(|| "-".into(), |v| format!("{v:.6}"))
}

fn pct(x: Option<f64>) -> String {
    x.filter(|v| v.is_finite()).map_or_else(|| "-".into(), |v| format!("{:.3}", 100.0 * v))
}

impl Comparison {
    /// Tab-separated metric table; deterministic for fixed inputs.
    pub fn table(&self) -> String {
        let mut out = String::from(
            "index\ts1\td1\ts2\td2\tstatus\tchoice\tfuel\tseparate\tp_platooning\ts_platooning\tlower_bound\tgap_pct\tsaving_sep_pct\tsaving_p_pct\tsaving_s_pct\tplatooning_ratio\tachieving_ratio\tspor\tdelay1\tdelay2\n",
        );
        for r in &self.rows {
            let m = r.metrics.as_ref();
            let gap = r.lower_bound.map(|lb| (r.fuel - lb) / r.fuel);
            let status = serde_json::to_value(r.status).expect("status serializes");
            let choice = serde_json::to_value(r.choice).expect("choice serializes");
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.6}\t{}\t{}",
                r.index,
                r.instance.s1,
                r.instance.d1,
                r.instance.s2,
                r.instance.d2,
                status.as_str().unwrap_or("?"),
                choice.as_str().unwrap_or("?"),
                cell(Some(r.fuel)),
                cell(r.separate_fuel),
                cell(r.p_fuel),
                cell(r.s_fuel),
                cell(r.lower_bound),
                pct(gap),
                pct(m.map(|m| m.saving_vs_separate)),
                pct(m.and_then(|m| m.saving_vs_p)),
                pct(m.and_then(|m| m.saving_vs_s)),
                cell(m.map(|m| m.platooning_ratio)),
                cell(m.and_then(|m| m.achieving_ratio)),
                r.spor,
                cell(m.map(|m| m.delay_factor[0])),
                cell(m.map(|m| m.delay_factor[1])),
            );
        }
        out
    }

    pub fn write_traces(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        for r in &self.rows {
            crate::output::write_text(&dir.join(format!("trace_{:04}.tsv", r.index)), &trace_table(&r.trace))?;
        }
        Ok(())
    }

    pub fn document(&self) -> serde_json::Value {
        let mean = |f: &dyn Fn(&Metrics) -> Option<f64>| {
            let xs: Vec<f64> = self.rows.iter().filter_map(|r| r.metrics.as_ref().and_then(f)).collect();
            (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
        };
        serde_json::json!({
            "schema": COMPARE_SCHEMA,
            "instances": self.rows.len(),
            "mean_saving_vs_separate": mean(&|m| Some(m.saving_vs_separate)),
            "mean_saving_vs_p": mean(&|m| m.saving_vs_p),
            "mean_saving_vs_s": mean(&|m| m.saving_vs_s),
            "rows": self.rows,
        })
    }
}
