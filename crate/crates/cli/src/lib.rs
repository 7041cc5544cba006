//! Input formats, benchmark generation, the end-to-end pipeline, reports and
//! SVG output for the voltfloor floorplanner.

pub mod formats;
pub mod gen;
pub mod gsrc;
pub mod pipeline;
pub mod render;
pub mod report;

use num_rational::Ratio;

/// Parses `3`, `1/4` or `0.25` into an exact ratio.
pub fn parse_ratio(s: &str) -> Result<Ratio<i64>, String> {
    let bad = || format!("expected an integer, `a/b` or a decimal, got `{s}`");
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(n, d));
    }
    report::parse_decimal(s.trim()).ok_or_else(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios() {
        assert_eq!(parse_ratio("1/4"), Ok(Ratio::new(1, 4)));
        assert_eq!(parse_ratio("0.25"), Ok(Ratio::new(1, 4)));
        assert_eq!(parse_ratio("3"), Ok(Ratio::from_integer(3)));
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("abc").is_err());
    }
}
