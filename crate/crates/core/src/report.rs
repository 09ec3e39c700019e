//! CSV output.
//!
//! Columns: `scenario, sweep_value_db, strategy, frames, seed, mean_T,
//! p_common_outage, p_outage_s1 .. p_outage_sM, eta, eta_norm,
//! selected_rate`. `selected_rate` is blank outside link adaptation.

use std::io::Write;

use crate::sweep::Row;

pub fn header(sources: usize) -> Vec<String> {
    let mut cols: Vec<String> = [
        "scenario",
        "sweep_value_db",
        "strategy",
        "frames",
        "seed",
        "mean_T",
        "p_common_outage",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend((1..=sources).map(|s| format!("p_outage_s{s}")));
    cols.extend(["eta", "eta_norm", "selected_rate"].map(String::from));
    cols
}

fn record(row: &Row) -> Vec<String> {
    let r = &row.report;
    let mut out = vec![
        row.scenario.clone(),
        row.sweep_value_db.to_string(),
        row.strategy.name().to_string(),
        row.frames.to_string(),
        row.seed.to_string(),
        r.mean_rounds.to_string(),
        r.common_outage.to_string(),
    ];
    out.extend(r.per_source_outage.iter().map(f64::to_string));
    out.push(r.eta.to_string());
    out.push(r.eta_norm.to_string());
    out.push(row.selected_rate.map(|v| v.to_string()).unwrap_or_default());
    out
}

pub fn write_csv<W: Write>(writer: W, sources: usize, rows: &[Row]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header(sources))?;
    for row in rows {
        w.write_record(record(row))?;
    }
    w.flush()?;
    Ok(())
}
