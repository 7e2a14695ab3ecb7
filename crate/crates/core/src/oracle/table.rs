use std::fmt::Write;

use crate::category::MistakeCategory;

use super::MetricSummary;

/// Ratio in [0, 1] rounded to an integer percentage.
pub fn to_percent(x: f64) -> u32 {
    (x * 100.0).round() as u32
}

fn cell(p: f64, r: f64, f: f64) -> String {
    format!("{}/{}/{}", to_percent(p), to_percent(r), to_percent(f))
}

const FOOTNOTE: &str = "* no ground-truth mistakes or hallucinations in this category; degenerate convention applied";

/// Delimiter-separated table: eleven category rows then `Average`.
pub fn render_csv(s: &MetricSummary) -> String {
    let mut out = String::from("category,tp,fp,fn,precision,recall,f1,P/R/F1,empty\n");
    for c in MistakeCategory::ALL {
        let m = &s.per_category[&c];
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{:.6},{},{}",
            c.code(),
            m.counts.tp,
            m.counts.fp,
            m.counts.fn_,
            m.precision,
            m.recall,
            m.f1,
            cell(m.precision, m.recall, m.f1),
            m.is_empty()
        );
    }
    let _ = writeln!(
        out,
        "average,{},{},{},{:.6},{:.6},{:.6},{},false",
        s.totals.tp,
        s.totals.fp,
        s.totals.fn_,
        s.precision,
        s.recall,
        s.f1,
        cell(s.precision, s.recall, s.f1)
    );
    out
}

/// Aligned human-readable table with a footnote for empty categories.
pub fn render_table(s: &MetricSummary) -> String {
    let width = MistakeCategory::ALL.iter().map(|c| c.label().len()).max().unwrap_or(0).max(7);
    let mut out = format!("{:<width$}  {:>12}\n", "Category", "P/R/F1");
    let mut any_empty = false;
    for c in MistakeCategory::ALL {
        let m = &s.per_category[&c];
        let mark = if m.is_empty() {
            any_empty = true;
            "*"
        } else {
            ""
        };
        let _ = writeln!(out, "{:<width$}  {:>12}", c.label(), format!("{}{mark}", cell(m.precision, m.recall, m.f1)));
    }
    let _ = writeln!(out, "{:<width$}  {:>12}", "Average", cell(s.precision, s.recall, s.f1));
    if any_empty {
        out.push_str(FOOTNOTE);
        out.push('\n');
    }
    let _ = writeln!(out, "Average: {}.", s.average);
    out
}
