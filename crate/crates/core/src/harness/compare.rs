use std::fmt;

use super::format_sig;
use super::run::{run_scenario, ReportRow};
use super::scenario::Scenario;
use crate::error::{Error, Result};

/// Side-by-side results of several scenarios.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonTable {
    pub entries: Vec<(String, ReportRow)>,
}

impl ComparisonTable {
    /// True when the rows were taken at more than one sideband frequency.
    /// The model itself has no frequency dependence.
    pub fn mixed_frequencies(&self) -> bool {
        self.entries.windows(2).any(|w| w[0].1.frequency != w[1].1.frequency)
    }
}

pub fn compare_methods(scenarios: &[(String, Scenario)]) -> Result<ComparisonTable> {
    if scenarios.len() < 2 {
        return Err(Error::validation("scenarios", "a comparison needs at least two scenarios"));
    }
    let entries = scenarios
        .iter()
        .map(|(name, s)| run_scenario(s).map(|row| (name.clone(), row)))
        .collect::<Result<_>>()?;
    Ok(ComparisonTable { entries })
}

impl fmt::Display for ComparisonTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let header = ["scenario", "method", "v_sq_plus", "v_sq_minus", "sum", "bound", "witnessed", "f_MHz"];
        let mixed = self.mixed_frequencies();
        let rows: Vec<[String; 8]> = self
            .entries
            .iter()
            .map(|(name, r)| {
                let opt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), format_sig);
                let freq = format_sig(r.frequency / 1e6);
                [
                    name.clone(),
                    r.method.label().to_string(),
                    opt(r.v_sq_plus),
                    opt(r.v_sq_minus),
                    format_sig(r.sum),
                    format_sig(r.bound),
                    r.witnessed.to_string(),
                    if mixed { format!("{freq}*") } else { freq },
                ]
            })
            .collect();

        let mut widths = header.map(str::len);
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let line = |f: &mut fmt::Formatter<'_>, cells: &[&str]| -> fmt::Result {
            let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            writeln!(f, "{}", padded.join("  ").trim_end())
        };
        line(f, &header)?;
        for row in &rows {
            line(f, &row.iter().map(String::as_str).collect::<Vec<_>>())?;
        }
        if mixed {
            let mut freqs: Vec<String> = self.entries.iter().map(|(_, r)| format_sig(r.frequency / 1e6)).collect();
            freqs.dedup();
            writeln!(
                f,
                "* rows were measured at different sideband frequencies ({} MHz) and cannot be compared directly",
                freqs.join(" / ")
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scenario::Method;

    #[test]
    fn ideal_methods_agree() {
        let list: Vec<_> =
            [Method::A, Method::B, Method::C].map(|m| (m.label().to_string(), Scenario::symmetric(m, 3.0))).into();
        let t = compare_methods(&list).unwrap();
        let s0 = t.entries[0].1.sum;
        assert!(t.entries.iter().all(|(_, r)| (r.sum - s0).abs() < 1e-12));
        assert!(!t.mixed_frequencies());
        assert!(!t.to_string().contains("cannot be compared"));
    }

    #[test]
    fn mixed_frequencies_get_a_footnote() {
        let mut a = Scenario::symmetric(Method::A, 3.0);
        a.band.center_frequency = 20.5e6;
        let list = vec![("a".to_string(), a), ("b".to_string(), Scenario::symmetric(Method::B, 3.0))];
        let text = compare_methods(&list).unwrap().to_string();
        assert!(text.contains("20.5000 / 17.5000 MHz"), "{text}");
        assert!(compare_methods(&list[..1]).is_err());
    }

    #[test]
    fn extra_visibility_loss_only_hurts_method_a() {
        let mut a = Scenario::symmetric(Method::A, 3.0);
        a.budget_a.visibility = 0.95;
        a.budget_b.visibility = 0.95;
        let mut b = a.clone();
        b.method = Method::B;
        b.budget_a.visibility = 1.0;
        b.budget_b.visibility = 1.0;
        let t = compare_methods(&[("a".into(), a), ("b".into(), b)]).unwrap();
        assert!(t.entries[0].1.sum - t.entries[1].1.sum > 0.0);
    }
}
