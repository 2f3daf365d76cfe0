//! Comparison reports: one row per filter with the barrier minima, a
//! violation marker, and the mean input deviation. Numbers are printed with
//! 17 significant digits so report values equal the metrics exactly.

use crate::sim::FilterMetrics;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "markdown" | "md" => Some(ReportFormat::Markdown),
            "csv" => Some(ReportFormat::Csv),
            _ => None,
        }
    }

    pub fn extension(&self) -> &'static str {
        match self {
            ReportFormat::Markdown => "md",
            ReportFormat::Csv => "csv",
        }
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Minimum with a violation marker on negative barriers.
fn cell(v: f64) -> String {
    if v < -crate::sim::VIOLATION_TOL {
        format!("**{}** (!)", fmt(v))
    } else {
        fmt(v)
    }
}

pub fn render_markdown(scenario_name: &str, seed: u64, rows: &[FilterMetrics]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# Safety filter comparison\n\nScenario: {scenario_name} (seed {seed})\n\n"
    ));
    out.push_str(
        "| filter | min h1 | min h2 | min h3 | min h_max | violation | mean |u_safe - u_nom| |\n",
    );
    out.push_str("|---|---|---|---|---|---|---|\n");
    for m in rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} |\n",
            m.variant.name(),
            cell(m.min_h1),
            cell(m.min_h2),
            cell(m.min_h3),
            cell(m.min_h_max),
            if m.violation { "VIOLATED" } else { "ok" },
            fmt(m.mean_input_deviation),
        ));
    }
    out
}

pub fn render_csv(rows: &[FilterMetrics]) -> String {
    let mut out = String::from(
        "filter,min_h1,min_h2,min_h3,min_h_max,violation,mean_input_deviation\n",
    );
    for m in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            m.variant.name(),
            fmt(m.min_h1),
            fmt(m.min_h2),
            fmt(m.min_h3),
            fmt(m.min_h_max),
            m.violation,
            fmt(m.mean_input_deviation),
        ));
    }
    out
}

pub fn render(format: ReportFormat, scenario_name: &str, seed: u64, rows: &[FilterMetrics]) -> String {
    match format {
        ReportFormat::Markdown => render_markdown(scenario_name, seed, rows),
        ReportFormat::Csv => render_csv(rows),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::FilterVariant;

    fn sample_metrics() -> FilterMetrics {
        FilterMetrics {
            variant: FilterVariant::Cbf,
            min_h1: -0.1983,
            min_h2: 0.1624,
            min_h3: -0.034,
            min_h_max: 1.0,
            violation_h1: true,
            violation_h2: false,
            violation_h3: true,
            violation_h_max: false,
            violation: true,
            mean_input_deviation: 0.75,
        }
    }

    #[test]
    fn report_carries_exact_minima() {
        let rows = vec![sample_metrics()];
        let md = render_markdown("cube", 42, &rows);
        // the exact 17-significant-digit value appears verbatim
        assert!(md.contains(&format!("{:.16e}", -0.1983)));
        assert!(md.contains("VIOLATED"));
        assert!(md.contains("(!)"));

        let csv = render_csv(&rows);
        let line = csv.lines().nth(1).unwrap();
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], "cbf");
        assert_eq!(fields[1].parse::<f64>().unwrap().to_bits(), (-0.1983f64).to_bits());
        assert_eq!(fields[5], "true");
    }

    #[test]
    fn format_parsing() {
        assert_eq!(ReportFormat::parse("md"), Some(ReportFormat::Markdown));
        assert_eq!(ReportFormat::parse("markdown"), Some(ReportFormat::Markdown));
        assert_eq!(ReportFormat::parse("CSV"), Some(ReportFormat::Csv));
        assert_eq!(ReportFormat::parse("pdf"), None);
    }
}
