//! Summary and convergence report files.

use std::fmt::Write as _;
use std::path::Path;

use bnr_core::diagnostics::ConvergenceReport;
use bnr_core::network::edge_pairs0;
use bnr_core::summaries::{EdgeInterval, SummaryReport};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io::write_text;

/// Machine-readable overview written next to the CSV tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryOverview {
    pub n: usize,
    #[serde(rename = "V")]
    pub v: usize,
    pub chains: usize,
    pub retained: usize,
    pub credible_level: f64,
    pub pp_threshold: f64,
    pub mu_mean: f64,
    pub tau2_mean: f64,
    pub influential_nodes: Vec<usize>,
    pub influential_edges: Vec<(usize, usize)>,
    pub node_pp: Vec<f64>,
    pub edges: Vec<EdgeInterval>,
    pub gamma_mean: Vec<f64>,
    pub converged: bool,
    pub max_rhat: f64,
}

fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|x| x.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Writes `node_pp.csv`, `edges.csv`, `b_map.csv`, `b_mean.csv` and `summary.json`.
pub fn write_summary(
    dir: &Path,
    summary: &SummaryReport,
    convergence: &ConvergenceReport,
    n: usize,
    chains: usize,
    retained: usize,
) -> Result<()> {
    let v = summary.node_pp.len();
    let mut nodes = String::from("node,pp,influential\n");
    for (k, (pp, on)) in summary.node_pp.iter().zip(&summary.node_influential).enumerate() {
        writeln!(nodes, "{},{},{}", k + 1, pp, on).unwrap();
    }
    write_text(&dir.join("node_pp.csv"), &nodes)?;

    let pairs = edge_pairs0(v);
    let mut edges = String::from("edge,node_k,node_l,lower,upper,influential,gamma_mean\n");
    for (e, ((k, l), ci)) in pairs.iter().zip(&summary.edge_ci).enumerate() {
        writeln!(
            edges,
            "{},{},{},{},{},{},{}",
            e + 1,
            k + 1,
            l + 1,
            ci.lower,
            ci.upper,
            ci.influential,
            summary.gamma_mean[e]
        )
        .unwrap();
    }
    write_text(&dir.join("edges.csv"), &edges)?;
    write_text(&dir.join("b_map.csv"), &matrix_csv(&summary.map_b))?;
    write_text(&dir.join("b_mean.csv"), &matrix_csv(&summary.mean_b))?;

    let overview = SummaryOverview {
        n,
        v,
        chains,
        retained,
        credible_level: summary.level,
        pp_threshold: summary.pp_threshold,
        mu_mean: summary.mu_mean,
        tau2_mean: summary.tau2_mean,
        influential_nodes: (0..v).filter(|&k| summary.node_influential[k]).map(|k| k + 1).collect(),
        influential_edges: pairs
            .iter()
            .zip(&summary.edge_ci)
            .filter(|(_, ci)| ci.influential)
            .map(|(&(k, l), _)| (k + 1, l + 1))
            .collect(),
        node_pp: summary.node_pp.clone(),
        edges: summary.edge_ci.clone(),
        gamma_mean: summary.gamma_mean.iter().copied().collect(),
        converged: convergence.converged,
        max_rhat: convergence.max_rhat,
    };
    let json = serde_json::to_string_pretty(&overview).map_err(|e| CliError::format(dir, e))?;
    write_text(&dir.join("summary.json"), &(json + "\n"))
}

/// One line per monitored coordinate.
pub fn convergence_csv(report: &ConvergenceReport) -> String {
    let v = report.rhat_xi.len();
    let mut out = String::from("parameter,node_k,node_l,rhat\n");
    for ((k, l), r) in edge_pairs0(v).into_iter().zip(&report.rhat_gamma) {
        writeln!(out, "gamma,{},{},{}", k + 1, l + 1, r).unwrap();
    }
    for (k, r) in report.rhat_xi.iter().enumerate() {
        writeln!(out, "xi,{},,{}", k + 1, r).unwrap();
    }
    out
}

/// Human-readable summary of the report.
pub fn convergence_text(report: &ConvergenceReport) -> String {
    let worst = |xs: &[f64]| xs.iter().copied().fold(1.0, f64::max);
    let above = report
        .rhat_gamma
        .iter()
        .chain(&report.rhat_xi)
        .filter(|&&r| r > report.threshold)
        .count();
    let mut out = String::new();
    writeln!(out, "converged: {}", report.converged).unwrap();
    writeln!(out, "threshold: {}", report.threshold).unwrap();
    writeln!(out, "max_rhat: {:.6}", report.max_rhat).unwrap();
    writeln!(out, "max_rhat_gamma: {:.6}", worst(&report.rhat_gamma)).unwrap();
    writeln!(out, "max_rhat_xi: {:.6}", worst(&report.rhat_xi)).unwrap();
    writeln!(out, "coordinates_above_threshold: {above}").unwrap();
    if report.single_chain {
        writeln!(out, "warning: single chain; R-hat compares its two halves only").unwrap();
    }
    out
}

pub fn write_convergence(dir: &Path, report: &ConvergenceReport) -> Result<()> {
    write_text(&dir.join("convergence.csv"), &convergence_csv(report))?;
    write_text(&dir.join("convergence.txt"), &convergence_text(report))
}
