use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use super::table::RegressionResult;
use crate::error::{Error, Result};

/// `term,coefficient,se,p,stars`, preceded by `header` lines (written as
/// `#` comments).
pub fn write_coefficients_csv(path: &Path, header: &str, result: &RegressionResult) -> Result<()> {
    let mut buf = Vec::new();
    for line in header.lines() {
        writeln!(buf, "# {line}").map_err(|e| Error::io(path, e))?;
    }
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["term", "coefficient", "se", "p", "stars"])?;
        for t in &result.terms {
            w.write_record([
                t.term.as_str(),
                &t.coefficient.to_string(),
                &t.se.to_string(),
                &plain_or_exp(t.p),
                t.stars,
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Shortest round-trip form, switching to exponent notation for tiny
/// magnitudes so p-values stay readable.
pub fn plain_or_exp(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-4 {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn sig3(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (2 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Side-by-side coefficient table: estimate with stars, robust standard
/// error in parentheses below, then observations, R-squared and fixed
/// effects.
pub fn text_table(results: &[RegressionResult]) -> String {
    let mut terms: Vec<&str> = Vec::new();
    for r in results {
        for t in &r.terms {
            if !terms.contains(&t.term.as_str()) {
                terms.push(&t.term);
            }
        }
    }
    let label_w = terms.iter().map(|t| t.len()).chain([14]).max().unwrap_or(14) + 2;
    let col_w = 16;
    let mut out = String::new();
    let _ = write!(out, "{:label_w$}", "");
    for i in 0..results.len() {
        let _ = write!(out, "{:>col_w$}", format!("({})", i + 1));
    }
    out.push('\n');
    let _ = write!(out, "{:label_w$}", "model");
    for r in results {
        let _ = write!(out, "{:>col_w$}", r.model);
    }
    out.push('\n');
    out.push_str(&"-".repeat(label_w + col_w * results.len()));
    out.push('\n');
    for term in &terms {
        let _ = write!(out, "{term:label_w$}");
        for r in results {
            let cell = r
                .term(term)
                .map(|t| format!("{}{}", sig3(t.coefficient), t.stars))
                .unwrap_or_default();
            let _ = write!(out, "{cell:>col_w$}");
        }
        out.push('\n');
        let _ = write!(out, "{:label_w$}", "");
        for r in results {
            let cell = r.term(term).map(|t| format!("({})", sig3(t.se))).unwrap_or_default();
            let _ = write!(out, "{cell:>col_w$}");
        }
        out.push('\n');
    }
    out.push_str(&"-".repeat(label_w + col_w * results.len()));
    out.push('\n');
    let mut footer = |label: &str, f: &dyn Fn(&RegressionResult) -> String| {
        let _ = write!(out, "{label:label_w$}");
        for r in results {
            let _ = write!(out, "{:>col_w$}", f(r));
        }
        out.push('\n');
    };
    footer("Observations", &|r| r.n_obs.to_string());
    footer("R-squared", &|r| format!("{:.3}", r.r_squared));
    footer("Fixed effects", &|r| match r.fixed_effects.as_deref() {
        Some("city_id") => "City".to_string(),
        Some(other) => other.to_string(),
        None => "NA".to_string(),
    });
    out.push_str("Robust standard errors in parentheses: *** p<0.001, ** p<0.01, * p<0.05, + p<0.1\n");
    out
}

#[cfg(test)]
mod tests {
    use super::{plain_or_exp, sig3};

    #[test]
    fn tiny_values_use_exponent() {
        assert_eq!(plain_or_exp(1.5e-40), "1.5e-40");
        assert_eq!(plain_or_exp(0.25), "0.25");
        assert_eq!(plain_or_exp(1.5e-40).parse::<f64>().unwrap(), 1.5e-40);
    }

    #[test]
    fn three_significant_digits() {
        assert_eq!(sig3(0.080_123), "0.0801");
        assert_eq!(sig3(0.540_4), "0.540");
        assert_eq!(sig3(-0.004_251), "-0.00425");
        assert_eq!(sig3(12.34), "12.3");
    }
}
