//! Converter for the GSRC `.blocks` / `.nets` subset used by the n10..n300
//! benchmarks.
//!
//! Hard rectilinear blocks keep their bounding box, soft blocks become the
//! squarest integer rectangle of their area, terminals are dropped. Each net
//! is driven by its block pin that comes first in block order, which keeps the
//! module graph acyclic.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::formats::FormatError;

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse { line, message: message.into() }
}

fn is_header(words: &[&str]) -> bool {
    matches!(words.first(), Some(&"UCSC")) || words.get(1) == Some(&":")
}

/// Converts a `.blocks` file into `<name> <width> <height>` lines.
pub fn convert_blocks(text: &str) -> Result<String, FormatError> {
    let mut out = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        let words: Vec<&str> = body.split_whitespace().collect();
        if words.is_empty() || is_header(&words) {
            continue;
        }
        match words.get(1).copied() {
            Some("terminal") => {}
            Some("hardrectilinear") => {
                let tail = words[2..].join(" ");
                let nums: Vec<i64> = tail
                    .split(|c: char| !(c.is_ascii_digit() || c == '-'))
                    .filter(|s| !s.is_empty() && *s != "-")
                    .skip(1) // vertex count
                    .map(|s| s.parse().map_err(|_| parse_err(line, format!("bad coordinate `{s}`"))))
                    .collect::<Result<_, _>>()?;
                if nums.len() < 4 || !nums.len().is_multiple_of(2) {
                    return Err(parse_err(line, "expected vertex pairs"));
                }
                let xs = nums.iter().step_by(2);
                let ys = nums.iter().skip(1).step_by(2);
                let w = xs.clone().max().unwrap() - xs.min().unwrap();
                let h = ys.clone().max().unwrap() - ys.min().unwrap();
                if w <= 0 || h <= 0 {
                    return Err(parse_err(line, "degenerate block"));
                }
                let _ = writeln!(out, "{} {w} {h}", words[0]);
            }
            Some("softrectangular") => {
                let area: f64 = words
                    .get(2)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| parse_err(line, "expected block area"))?;
                let w = (area.sqrt().round() as i64).max(1);
                let h = ((area / w as f64).round() as i64).max(1);
                let _ = writeln!(out, "{} {w} {h}", words[0]);
            }
            _ => return Err(parse_err(line, "unrecognized block line")),
        }
    }
    Ok(out)
}

/// Converts a `.nets` file into `net <source> <sink>...` lines, keeping only
/// pins on the given blocks. Nets with fewer than two block pins are dropped.
pub fn convert_nets(text: &str, block_names: &[String]) -> Result<String, FormatError> {
    let order: HashMap<&str, usize> = block_names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut out = String::new();
    let mut pending: Option<Vec<usize>> = None;
    let flush = |pending: &mut Option<Vec<usize>>, out: &mut String| {
        if let Some(mut pins) = pending.take() {
            pins.sort_unstable();
            pins.dedup();
            if pins.len() >= 2 {
                out.push_str("net");
                for p in pins {
                    let _ = write!(out, " {}", block_names[p]);
                }
                out.push('\n');
            }
        }
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let words: Vec<&str> = raw.split('#').next().unwrap_or("").split_whitespace().collect();
        if words.is_empty() {
            continue;
        }
        if words[0] == "NetDegree" {
            flush(&mut pending, &mut out);
            if words.get(2).and_then(|s| s.parse::<usize>().ok()).is_none() {
                return Err(parse_err(line, "expected `NetDegree : <n>`"));
            }
            pending = Some(Vec::new());
            continue;
        }
        if is_header(&words) {
            continue;
        }
        let Some(pins) = pending.as_mut() else {
            return Err(parse_err(line, "pin outside of a net"));
        };
        if let Some(&b) = order.get(words[0]) {
            pins.push(b);
        }
    }
    flush(&mut pending, &mut out);
    Ok(out)
}
