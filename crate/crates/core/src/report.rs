//! CSV renderings of sweep reports.
//!
//! Numbers are written with Rust's `Display`/fixed-precision formatting, so
//! output never depends on the process locale. Lines end with `\n`.

use crate::montecarlo::SweepReport;

pub const SWEEP_CSV_HEADER: [&str; 8] = [
    "model",
    "pairs",
    "trials",
    "bell_obeyed",
    "chsh_obeyed",
    "chsh_indeterminate",
    "mean_S",
    "mean_anticorr_pct",
];

pub const PLOT_CSV_HEADER: [&str; 5] = ["model", "inequality", "log2_pairs", "pairs", "obeyed"];

fn fixed(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("in-memory csv writer");
    String::from_utf8(bytes).expect("csv output is utf-8")
}

/// One row per (model, pair count); header always present.
pub fn sweep_csv(reports: &[SweepReport]) -> String {
    let mut w = writer();
    w.write_record(SWEEP_CSV_HEADER).expect("in-memory write");
    for report in reports {
        for row in &report.rows {
            w.write_record([
                report.model.name().to_string(),
                row.n.to_string(),
                row.trials.to_string(),
                row.bell_obeyed.to_string(),
                row.chsh_obeyed.to_string(),
                row.chsh_indeterminate.to_string(),
                fixed(row.mean_s),
                fixed(row.mean_anticorr_pct),
            ])
            .expect("in-memory write");
        }
    }
    finish(w)
}

/// Non-violation counts against log₂(pairs), one series per model and inequality.
pub fn plot_csv(reports: &[SweepReport]) -> String {
    let mut w = writer();
    w.write_record(PLOT_CSV_HEADER).expect("in-memory write");
    for inequality in ["bell", "chsh"] {
        for report in reports {
            for row in &report.rows {
                let obeyed = match inequality {
                    "bell" => row.bell_obeyed,
                    _ => row.chsh_obeyed,
                };
                w.write_record([
                    report.model.name().to_string(),
                    inequality.to_string(),
                    format!("{:.6}", (row.n as f64).log2()),
                    row.n.to_string(),
                    obeyed.to_string(),
                ])
                .expect("in-memory write");
            }
        }
    }
    finish(w)
}
