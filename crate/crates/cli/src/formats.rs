//! Plain-text input and output formats.
//!
//! * blocks: `<name> <width> <height>` per line
//! * nets: `net <source> <sink> [<sink> ...]` per line
//! * spec: `k <int>`, `tcycle <int>`, one
//!   `shifter <area> <num>:<den> (<level> <delay> <power>)...` line and one
//!   `curve <name> (<level> <delay> <power>)...` line per block
//!
//! `#` starts a comment everywhere.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;
use voltfloor_core::floorplan::{Floorplan, Rect, Room};
use voltfloor_core::model::{decompose_multipin, CurvePoint, DpCurve, ModelError, ModuleBlock, Netlist, RawNet, ShifterSpec};
use voltfloor_core::shifter::{Placement, Site};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate name `{name}`")]
    DuplicateName { line: usize, name: String },
    #[error("line {line}: unknown block `{name}`")]
    UnknownBlock { line: usize, name: String },
    #[error("no curve given for block `{0}`")]
    MissingCurve(String),
    #[error("spec has no {0} line")]
    MissingField(&'static str),
    #[error("block `{name}`: {source}")]
    Model { name: String, source: ModelError },
}

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse { line, message: message.into() }
}

/// Non-empty lines with comments stripped, numbered from 1.
fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let body = l.split('#').next().unwrap_or("");
        let words: Vec<&str> = body.split_whitespace().collect();
        (!words.is_empty()).then_some((i + 1, words))
    })
}

fn int(line: usize, s: &str) -> Result<i64, FormatError> {
    s.parse().map_err(|_| parse_err(line, format!("expected an integer, got `{s}`")))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub name: String,
    pub width: i64,
    pub height: i64,
}

pub fn parse_blocks(text: &str) -> Result<Vec<Block>, FormatError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, w) in lines(text) {
        if w.len() != 3 {
            return Err(parse_err(line, "expected `<name> <width> <height>`"));
        }
        let (width, height) = (int(line, w[1])?, int(line, w[2])?);
        if width <= 0 || height <= 0 {
            return Err(parse_err(line, "dimensions must be positive"));
        }
        if !seen.insert(w[0]) {
            return Err(FormatError::DuplicateName { line, name: w[0].to_string() });
        }
        out.push(Block { name: w[0].to_string(), width, height });
    }
    Ok(out)
}

fn index_of(blocks: &[Block]) -> HashMap<&str, usize> {
    blocks.iter().enumerate().map(|(i, b)| (b.name.as_str(), i)).collect()
}

pub fn parse_nets(text: &str, blocks: &[Block]) -> Result<Vec<RawNet>, FormatError> {
    let index = index_of(blocks);
    let mut out = Vec::new();
    for (line, w) in lines(text) {
        if w[0] != "net" || w.len() < 3 {
            return Err(parse_err(line, "expected `net <source> <sink> [<sink> ...]`"));
        }
        let ids = w[1..]
            .iter()
            .map(|n| index.get(n).copied().ok_or_else(|| FormatError::UnknownBlock { line, name: n.to_string() }))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(RawNet { source: ids[0], sinks: ids[1..].to_vec() });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecFile {
    pub k: usize,
    pub t_cycle: i64,
    pub shifter: ShifterSpec,
    /// Curve points per block name, in file order.
    pub curves: Vec<(String, Vec<CurvePoint>)>,
}

fn triples(line: usize, words: &[&str]) -> Result<Vec<CurvePoint>, FormatError> {
    if words.is_empty() || !words.len().is_multiple_of(3) {
        return Err(parse_err(line, "expected `<level> <delay> <power>` triples"));
    }
    words
        .chunks(3)
        .map(|c| {
            let level = u32::try_from(int(line, c[0])?).map_err(|_| parse_err(line, "bad level"))?;
            Ok(CurvePoint::new(level, int(line, c[1])?, int(line, c[2])?))
        })
        .collect()
}

pub fn parse_spec(text: &str) -> Result<SpecFile, FormatError> {
    let (mut k, mut t, mut shifter) = (None, None, None);
    let mut curves = Vec::new();
    let mut seen = HashSet::new();
    for (line, w) in lines(text) {
        match w[0] {
            "k" if w.len() == 2 => k = Some(usize::try_from(int(line, w[1])?).map_err(|_| parse_err(line, "bad k"))?),
            "tcycle" if w.len() == 2 => t = Some(int(line, w[1])?),
            "shifter" if w.len() >= 3 => {
                let area = int(line, w[1])?;
                let (n, d) = w[2].split_once(':').ok_or_else(|| parse_err(line, "ratio must be `<num>:<den>`"))?;
                let pts = triples(line, &w[3..])?;
                let spec = ShifterSpec::new(area, (int(line, n)?, int(line, d)?), pts)
                    .map_err(|e| parse_err(line, e.to_string()))?;
                shifter = Some(spec);
            }
            "curve" if w.len() >= 2 => {
                if !seen.insert(w[1]) {
                    return Err(FormatError::DuplicateName { line, name: w[1].to_string() });
                }
                curves.push((w[1].to_string(), triples(line, &w[2..])?));
            }
            _ => return Err(parse_err(line, format!("unrecognized spec line starting with `{}`", w[0]))),
        }
    }
    Ok(SpecFile {
        k: k.ok_or(FormatError::MissingField("k"))?,
        t_cycle: t.ok_or(FormatError::MissingField("tcycle"))?,
        shifter: shifter.ok_or(FormatError::MissingField("shifter"))?,
        curves,
    })
}

fn push_points(out: &mut String, pts: &[CurvePoint]) {
    for p in pts {
        let _ = write!(out, " {} {} {}", p.level, p.delay, p.power);
    }
}

pub fn write_spec(spec: &SpecFile) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "k {}", spec.k);
    let _ = writeln!(out, "tcycle {}", spec.t_cycle);
    let (n, d) = spec.shifter.ratio();
    let _ = write!(out, "shifter {} {n}:{d}", spec.shifter.area());
    push_points(&mut out, spec.shifter.overhead());
    out.push('\n');
    for (name, pts) in &spec.curves {
        let _ = write!(out, "curve {name}");
        push_points(&mut out, pts);
        out.push('\n');
    }
    out
}

/// Everything a run needs, with names kept alongside the core netlist.
#[derive(Debug, Clone)]
pub struct Design {
    pub names: Vec<String>,
    pub netlist: Netlist,
    pub shifter: ShifterSpec,
}

fn model(name: &str) -> impl FnOnce(ModelError) -> FormatError + '_ {
    move |source| FormatError::Model { name: name.to_string(), source }
}

/// Joins blocks, nets and spec. `k` and `t_cycle` override the spec; a smaller
/// `k` keeps the first `k` levels of every curve.
pub fn build_design(
    blocks: &[Block],
    nets: &[RawNet],
    spec: &SpecFile,
    k: Option<usize>,
    t_cycle: Option<i64>,
) -> Result<Design, FormatError> {
    let index = index_of(blocks);
    let mut by_block: Vec<Option<&[CurvePoint]>> = vec![None; blocks.len()];
    for (name, pts) in &spec.curves {
        let i = *index.get(name.as_str()).ok_or_else(|| FormatError::UnknownBlock { line: 0, name: name.clone() })?;
        by_block[i] = Some(pts);
    }
    let k = k.unwrap_or(spec.k);
    let mut modules = Vec::with_capacity(blocks.len());
    for (b, pts) in blocks.iter().zip(&by_block) {
        let pts = pts.ok_or_else(|| FormatError::MissingCurve(b.name.clone()))?;
        let curve = DpCurve::new(pts.iter().copied()).and_then(|c| c.truncate(k)).map_err(model(&b.name))?;
        modules.push(ModuleBlock::new(b.name.clone(), b.width, b.height, curve).map_err(model(&b.name))?);
    }
    let shifter = spec.shifter.truncate(k).map_err(model("shifter"))?;
    let two_pin = decompose_multipin(nets).map_err(model("nets"))?;
    let netlist = Netlist::new(modules, two_pin, t_cycle.unwrap_or(spec.t_cycle), k).map_err(model("netlist"))?;
    Ok(Design { names: blocks.iter().map(|b| b.name.clone()).collect(), netlist, shifter })
}

/// `module x y w h room_x room_y room_w room_h level` per module.
pub fn write_floorplan(fp: &Floorplan, names: &[String], levels: &[u32]) -> String {
    let mut out = format!("# chip {} {}\n", fp.width, fp.height);
    for ((room, name), level) in fp.rooms.iter().zip(names).zip(levels) {
        let m = room.module_rect();
        let r = room.rect;
        let _ = writeln!(out, "{name} {} {} {} {} {} {} {} {} {level}", m.x, m.y, m.w, m.h, r.x, r.y, r.w, r.h);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedFloorplan {
    pub names: Vec<String>,
    pub floorplan: Floorplan,
    pub levels: Vec<u32>,
}

/// Reads [`write_floorplan`] output. The chip spans the union of rooms
/// anchored at the origin.
pub fn parse_floorplan(text: &str) -> Result<ParsedFloorplan, FormatError> {
    let mut names = Vec::new();
    let mut rooms = Vec::new();
    let mut levels = Vec::new();
    for (line, w) in lines(text) {
        if w.len() != 10 {
            return Err(parse_err(line, "expected `module x y w h room_x room_y room_w room_h level`"));
        }
        let v = w[1..9].iter().map(|s| int(line, s)).collect::<Result<Vec<_>, _>>()?;
        if (v[0], v[1]) != (v[4], v[5]) {
            return Err(parse_err(line, "module must sit at its room origin"));
        }
        if names.contains(&w[0].to_string()) {
            return Err(FormatError::DuplicateName { line, name: w[0].to_string() });
        }
        names.push(w[0].to_string());
        rooms.push(Room { rect: Rect::new(v[4], v[5], v[6], v[7]), module_w: v[2], module_h: v[3] });
        levels.push(u32::try_from(int(line, w[9])?).map_err(|_| parse_err(line, "bad level"))?);
    }
    let width = rooms.iter().map(|r| r.rect.right()).max().unwrap_or(0);
    let height = rooms.iter().map(|r| r.rect.top()).max().unwrap_or(0);
    Ok(ParsedFloorplan { names, floorplan: Floorplan { width, height, rooms }, levels })
}

/// `shifter <id> <source> <sink> <driver_level> <site> x y w h`, site being a
/// room's module name or `els`.
pub fn write_shifters(placements: &[Placement], names: &[String]) -> String {
    let mut out = String::new();
    for p in placements {
        let s = &p.shifter;
        let site = match p.site {
            Site::Room(j) => names[j].as_str(),
            Site::Els => "els",
        };
        let r = p.rect;
        let _ = writeln!(
            out,
            "shifter {} {} {} {} {site} {} {} {} {}",
            s.id, names[s.source], names[s.sink], s.driver_level, r.x, r.y, r.w, r.h
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedShifter {
    pub id: usize,
    pub source: String,
    pub sink: String,
    pub driver_level: u32,
    /// `None` for the fallback set.
    pub room: Option<String>,
    pub rect: Rect,
}

pub fn parse_shifters(text: &str) -> Result<Vec<ParsedShifter>, FormatError> {
    lines(text)
        .map(|(line, w)| {
            if w.len() != 10 || w[0] != "shifter" {
                return Err(parse_err(line, "expected `shifter id source sink level site x y w h`"));
            }
            let v = w[6..10].iter().map(|s| int(line, s)).collect::<Result<Vec<_>, _>>()?;
            Ok(ParsedShifter {
                id: usize::try_from(int(line, w[1])?).map_err(|_| parse_err(line, "bad id"))?,
                source: w[2].to_string(),
                sink: w[3].to_string(),
                driver_level: u32::try_from(int(line, w[4])?).map_err(|_| parse_err(line, "bad level"))?,
                room: (w[5] != "els").then(|| w[5].to_string()),
                rect: Rect::new(v[0], v[1], v[2], v[3]),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_examples() {
        assert_eq!(parse_blocks("sb0 20 16").unwrap(), vec![Block { name: "sb0".into(), width: 20, height: 16 }]);
        assert!(matches!(parse_blocks("sb0 1 1\nsb0 2 2"), Err(FormatError::DuplicateName { line: 2, .. })));
        assert!(matches!(parse_blocks("# c\n\nsb0 1"), Err(FormatError::Parse { line: 3, .. })));
        assert!(matches!(parse_blocks("sb0 0 4"), Err(FormatError::Parse { line: 1, .. })));
    }

    #[test]
    fn nets_examples() {
        let blocks = parse_blocks("sb0 1 1\nsb1 1 1\nsb2 1 1").unwrap();
        let nets = parse_nets("net sb0 sb1 sb2", &blocks).unwrap();
        assert_eq!(nets, vec![RawNet { source: 0, sinks: vec![1, 2] }]);
        assert!(matches!(parse_nets("net sb0 sb9", &blocks), Err(FormatError::UnknownBlock { line: 1, .. })));
        assert!(matches!(parse_nets("wire sb0 sb1", &blocks), Err(FormatError::Parse { .. })));
    }

    #[test]
    fn spec_round_trip() {
        let text = "k 2\ntcycle 40\nshifter 4 1:1 1 1 2 2 1 1\ncurve a 1 5 100 2 9 60\n";
        let spec = parse_spec(text).unwrap();
        assert_eq!(spec.k, 2);
        assert_eq!(spec.curves[0].1.len(), 2);
        assert_eq!(write_spec(&spec), text);
        assert!(matches!(parse_spec("k 2\ntcycle 4\n"), Err(FormatError::MissingField("shifter"))));
        assert!(matches!(parse_spec("k 2\nbogus 1"), Err(FormatError::Parse { line: 2, .. })));
    }

    #[test]
    fn design_needs_every_curve() {
        let blocks = parse_blocks("a 1 1\nb 2 2").unwrap();
        let spec = parse_spec("k 2\ntcycle 40\nshifter 4 1:1 1 1 2 2 1 1\ncurve a 1 5 100 2 9 60\n").unwrap();
        assert_eq!(build_design(&blocks, &[], &spec, None, None).unwrap_err(), FormatError::MissingCurve("b".into()));
    }
}
