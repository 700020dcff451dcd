//! Statistics table output: CSV for machines, aligned text for people.

use std::io::Write;

use shor_core::analysis::StatsRow;

/// Writes a header and one record per row.
pub fn write_csv<W: Write>(rows: &[StatsRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(StatsRow::COLUMNS)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Condensed human-readable table.
pub fn write_table<W: Write>(rows: &[StatsRow], mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "{:>4} {:>7} {:>9} {:>9} {:>9} {:>5} {:>9} {:>9} {:>9} {:>9} {:>10} {:>5}",
        "bits", "#of", "of_min", "of_mean", "of_bound", "#fac", "fac_min", "fac_mean", "fac_bound", "gates_max", "bound_max", "ok"
    )?;
    for r in rows {
        let pct = |n: u64, v: f64| if n == 0 { "-".to_string() } else { format!("{:.4}%", 100.0 * v) };
        writeln!(
            out,
            "{:>4} {:>7} {:>9} {:>9} {:>9} {:>5} {:>9} {:>9} {:>9} {:>9} {:>10} {:>5}",
            r.bits,
            r.of_instances,
            pct(r.of_instances, r.of_min),
            pct(r.of_instances, r.of_mean),
            pct(1, r.of_bound),
            r.factor_instances,
            pct(r.factor_instances, r.factor_min),
            pct(r.factor_instances, r.factor_mean),
            pct(1, r.factor_bound),
            r.gate_max,
            r.gate_bound_max,
            if r.bounds_hold() { "yes" } else { "NO" },
        )?;
    }
    Ok(())
}
