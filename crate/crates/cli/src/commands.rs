use covert_core::bounds::covert_pe_lb;
use covert_core::covert_opt::{energy_limits, min_fidelity_numeric, KktStatus};
use covert_core::gaussian::{alice_received, fock_from_channel, q_s_fock_oracle, q_s_gaussian, Hypothesis, Probe};
use covert_core::probes::{covert_curve_row, perfect_covert_row};
use covert_core::ScenarioParams;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{CommandKind, RunConfig};
use crate::table::{Cell, Table, Warning};

pub struct Outcome {
    pub table: Table,
    pub warnings: Vec<Warning>,
}

struct Row {
    cells: Vec<Cell>,
    warning: Option<(Map<String, Value>, String)>,
}

fn point(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

fn nan_row(lead: Vec<Cell>, width: usize) -> Vec<Cell> {
    let mut cells = lead;
    while cells.len() < width {
        cells.push(Cell::Float(f64::NAN));
    }
    cells
}

fn status_name(s: KktStatus) -> &'static str {
    match s {
        KktStatus::Interior => "interior",
        KktStatus::Matched => "matched",
        KktStatus::Escape => "escape",
        KktStatus::Vacuous => "vacuous",
        KktStatus::Flagged => "flagged",
    }
}

fn energy_row(p: ScenarioParams) -> Row {
    let at = point(json!({ "m": p.m_modes, "eps": p.epsilon }));
    match energy_limits(&p) {
        Ok(e) => {
            let warning = (!e.converged()).then(|| (at, "KKT residuals above tolerance".to_string()));
            Row { cells: vec![Cell::Int(p.m_modes), Cell::Float(e.ns_min), Cell::Float(e.ns_max)], warning }
        }
        Err(err) => Row { cells: nan_row(vec![Cell::Int(p.m_modes)], 3), warning: Some((at, err.to_string())) },
    }
}

fn curve_row(p: ScenarioParams) -> Row {
    let at = point(json!({ "m": p.m_modes }));
    match covert_curve_row(&p) {
        Ok(r) => Row {
            cells: vec![
                Cell::Int(r.m),
                Cell::Float(r.log10_pe_bound),
                Cell::Float(r.log10_pe_tmsv),
                Cell::Float(r.log10_pe_gcs),
            ],
            warning: None,
        },
        Err(err) => Row { cells: nan_row(vec![Cell::Int(p.m_modes)], 4), warning: Some((at, err.to_string())) },
    }
}

fn perfect_row(eta: f64, nb: f64) -> Row {
    match perfect_covert_row(eta, nb) {
        Ok(r) => Row {
            cells: [r.nb, r.chi_tmsv_qc, r.chi_tmsv_qb, r.chi_gcs_qc, r.chi_gcs_qb, r.ratio].map(Cell::Float).to_vec(),
            warning: None,
        },
        Err(err) => Row { cells: nan_row(vec![Cell::Float(nb)], 6), warning: Some((point(json!({ "nb": nb })), err.to_string())) },
    }
}

fn heat_row(p: ScenarioParams) -> Row {
    let lead = vec![Cell::Float(p.n_b), Cell::Int(p.m_modes), Cell::Float(p.epsilon)];
    let at = point(json!({ "nb": p.n_b, "m": p.m_modes, "eps": p.epsilon }));
    let solved = min_fidelity_numeric(&p).and_then(|s| covert_pe_lb(&p).map(|b| (s, b)));
    match solved {
        Ok((s, b)) => {
            let mut cells = lead;
            cells.push(Cell::Float(s.objective / b.fidelity_lb));
            cells.push(Cell::Text(status_name(s.status).into()));
            let warning = (!s.converged).then(|| (at, format!("{} (residual {:.3e})", status_name(s.status), s.residual)));
            Row { cells, warning }
        }
        Err(err) => {
            let mut cells = nan_row(lead, 4);
            cells.push(Cell::Text("error".into()));
            Row { cells, warning: Some((at, err.to_string())) }
        }
    }
}

fn oracle_rows(cfg: &RunConfig) -> Vec<Row> {
    let p = cfg.scenario;
    let probe = Probe::Tmsv { n_s: cfg.n_s };
    let pair = || -> covert_core::Result<_> {
        Ok((
            alice_received(&probe, Hypothesis::Absent, &p)?,
            alice_received(&probe, Hypothesis::Present, &p)?,
            fock_from_channel(&probe, Hypothesis::Absent, &p, None)?,
            fock_from_channel(&probe, Hypothesis::Present, &p, None)?,
        ))
    };
    let grid: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    match pair() {
        Ok((g0, g1, f0, f1)) => grid
            .par_iter()
            .map(|&s| {
                let at = point(json!({ "s": s }));
                match (q_s_gaussian(&g0, &g1, s), q_s_fock_oracle(&f0, &f1, s)) {
                    (Ok(qg), Ok(qf)) => {
                        let gap = (qg - qf).abs() / qf;
                        let warning = (gap >= 1e-6).then(|| (at, format!("oracle gap {gap:.3e}")));
                        Row { cells: [s, qg, qf, gap].map(Cell::Float).to_vec(), warning }
                    }
                    (Err(e), _) | (_, Err(e)) => Row { cells: nan_row(vec![Cell::Float(s)], 4), warning: Some((at, e.to_string())) },
                }
            })
            .collect(),
        Err(e) => grid
            .iter()
            .map(|&s| Row { cells: nan_row(vec![Cell::Float(s)], 4), warning: Some((point(json!({ "s": s })), e.to_string())) })
            .collect(),
    }
}

fn with(p: ScenarioParams, nb: f64, m: u64, eps: f64) -> ScenarioParams {
    ScenarioParams { n_b: nb, m_modes: m, epsilon: eps, ..p }
}

pub fn execute(cfg: &RunConfig) -> Outcome {
    let p = cfg.scenario;
    let (header, rows): (Vec<&'static str>, Vec<Row>) = match cfg.command {
        CommandKind::EnergyLimits => (
            vec!["m", "ns_min", "ns_max"],
            cfg.m_grid.par_iter().map(|&m| energy_row(p.with_m(m).unwrap_or(p))).collect(),
        ),
        CommandKind::CovertBound => {
            let at = point(json!({ "m": p.m_modes }));
            let row = match covert_pe_lb(&p) {
                Ok(b) => Row {
                    cells: vec![
                        Cell::Int(p.m_modes),
                        Cell::Float(b.fidelity_lb),
                        Cell::Float(b.pe_lb),
                        Cell::Float(b.ln_pe_lb / std::f64::consts::LN_10),
                        Cell::Float(b.exponent),
                    ],
                    warning: None,
                },
                Err(e) => Row { cells: nan_row(vec![Cell::Int(p.m_modes)], 5), warning: Some((at, e.to_string())) },
            };
            (vec!["m", "fidelity_lb", "pe_lb", "log10_pe_lb", "exponent"], vec![row])
        }
        CommandKind::CovertCurves => (
            vec!["m", "log10_pe_bound", "log10_pe_tmsv", "log10_pe_gcs"],
            cfg.m_grid.par_iter().map(|&m| curve_row(p.with_m(m).unwrap_or(p))).collect(),
        ),
        CommandKind::PerfectCovert => (
            vec!["nb", "chi_tmsv_qc", "chi_tmsv_qb", "chi_gcs_qc", "chi_gcs_qb", "ratio"],
            cfg.nb_grid.par_iter().map(|&nb| perfect_row(p.eta, nb)).collect(),
        ),
        CommandKind::Heatmap => {
            let points: Vec<ScenarioParams> = cfg
                .nb_grid
                .iter()
                .flat_map(|&nb| cfg.m_grid.iter().flat_map(move |&m| cfg.eps_grid.iter().map(move |&e| with(p, nb, m, e))))
                .collect();
            (vec!["nb", "m", "eps", "fid_ratio", "flag"], points.into_par_iter().map(heat_row).collect())
        }
        CommandKind::OracleCheck => (vec!["s", "q_gaussian", "q_fock", "rel_gap"], oracle_rows(cfg)),
    };
    let mut table = Table { header, rows: Vec::with_capacity(rows.len()) };
    let mut warnings = Vec::new();
    for r in rows {
        table.rows.push(r.cells);
        if let Some((point, message)) = r.warning {
            warnings.push(Warning { command: cfg.command.name(), point, message });
        }
    }
    Outcome { table, warnings }
}
