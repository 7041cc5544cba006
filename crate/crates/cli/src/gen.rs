//! Seeded generators for power/delay specs and synthetic benchmarks.

use std::fmt::Write as _;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voltfloor_core::model::{modify_dp_curve, CurvePoint, DpCurve, ShifterSpec, TwoPinNet};
use voltfloor_core::voltage::{longest_path_delay, TimingGraph};

use crate::formats::{Block, SpecFile};

/// Levels every generated curve has before truncation to the requested `k`.
pub const MAX_LEVELS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenParams {
    pub k: usize,
    /// Inclusive range of the level-1 delay.
    pub base_delay: (i64, i64),
    /// Inclusive range of the level-1 power.
    pub base_power: (i64, i64),
    pub shifter_area: i64,
    pub shifter_ratio: (i64, i64),
    /// Where `T_cycle` falls between the all-fastest (0) and all-slowest (1)
    /// critical path delay.
    pub tightness: Ratio<i64>,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            k: MAX_LEVELS,
            base_delay: (2, 10),
            base_power: (200, 1000),
            shifter_area: 16,
            shifter_ratio: (1, 1),
            tightness: Ratio::new(1, 2),
        }
    }
}

fn shifter_points(rng: &mut ChaCha8Rng) -> Vec<CurvePoint> {
    let mut delay = rng.gen_range(1..=2);
    let mut power = rng.gen_range(6..=12);
    let mut pts = vec![CurvePoint::new(1, delay, power)];
    for q in 2..=MAX_LEVELS as u32 {
        delay += rng.gen_range(0..=1);
        power = (power - rng.gen_range(1..=2)).max(1);
        pts.push(CurvePoint::new(q, delay, power));
    }
    pts
}

/// A full-length curve with integer, strictly decreasing slope magnitudes.
fn module_points(rng: &mut ChaCha8Rng, p: &GenParams) -> Vec<CurvePoint> {
    let steps: Vec<i64> = (1..MAX_LEVELS).map(|_| rng.gen_range(1..=4)).collect();
    let mut slopes = vec![rng.gen_range(1..=3)];
    for _ in 1..steps.len() {
        let next = slopes.last().unwrap() + rng.gen_range(1..=6);
        slopes.push(next);
    }
    slopes.reverse();
    let drop: i64 = slopes.iter().zip(&steps).map(|(s, d)| s * d).sum();
    let mut power = rng.gen_range(p.base_power.0..=p.base_power.1).max(drop + p.base_power.0);
    let mut delay = rng.gen_range(p.base_delay.0..=p.base_delay.1);
    let mut pts = vec![CurvePoint::new(1, delay, power)];
    for (q, (s, d)) in slopes.iter().zip(&steps).enumerate() {
        delay += d;
        power -= s * d;
        pts.push(CurvePoint::new(q as u32 + 2, delay, power));
    }
    pts
}

/// Generates curves and a shifter for `blocks`. Curves for a smaller `k` are
/// prefixes of the curves for a larger one under the same seed.
pub fn gen_spec(seed: u64, blocks: &[Block], nets: &[TwoPinNet], params: &GenParams) -> SpecFile {
    assert!((1..=MAX_LEVELS).contains(&params.k), "k must be in 1..={MAX_LEVELS}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shifter = ShifterSpec::new(params.shifter_area, params.shifter_ratio, shifter_points(&mut rng))
        .expect("generated shifter is valid");
    let mut full = Vec::with_capacity(blocks.len());
    for _ in blocks {
        // redraw until the curve stays convex once the shifter overhead is added
        let curve = loop {
            let c = DpCurve::new(module_points(&mut rng, params)).expect("generated curve is valid");
            if modify_dp_curve(&c, &shifter).is_ok() {
                break c;
            }
        };
        full.push(curve);
    }
    let k = params.k;
    let shifter = shifter.truncate(k).expect("k within range");
    let curves: Vec<DpCurve> = full.iter().map(|c| c.truncate(k).expect("k within range")).collect();
    let modified: Vec<DpCurve> = curves.iter().map(|c| modify_dp_curve(c, &shifter).expect("checked above")).collect();
    let tg = TimingGraph::new(blocks.len(), nets, &vec![0; nets.len()], 0).expect("nets are valid");
    let fast = longest_path_delay(&tg, &modified, &vec![1; blocks.len()]);
    let slow = longest_path_delay(&tg, &modified, &vec![k as u32; blocks.len()]);
    let t_cycle = fast + (params.tightness * (slow - fast)).floor().to_integer();
    SpecFile {
        k,
        t_cycle,
        shifter,
        curves: blocks.iter().zip(curves).map(|(b, c)| (b.name.clone(), c.points().to_vec())).collect(),
    }
}

/// Synthetic benchmark: `n` blocks named `sb<i>` and a set of multi-pin nets
/// whose drivers always precede their sinks. Returns `(blocks, nets)` text.
pub fn gen_bench(seed: u64, n: usize) -> (String, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocks = String::new();
    for i in 0..n {
        let _ = writeln!(blocks, "sb{i} {} {}", rng.gen_range(8..=60), rng.gen_range(8..=60));
    }
    let mut nets = String::new();
    if n < 2 {
        return (blocks, nets);
    }
    let count = (n * 13).div_ceil(10);
    for _ in 0..count {
        let src = rng.gen_range(0..n - 1);
        let fanout = rng.gen_range(1..=3).min(n - 1 - src);
        let mut sinks: Vec<usize> = Vec::with_capacity(fanout);
        while sinks.len() < fanout {
            let reach = (n - 1 - src).min(8);
            let s = src + rng.gen_range(1..=reach);
            if !sinks.contains(&s) {
                sinks.push(s);
            }
            if sinks.len() == reach {
                break;
            }
        }
        let _ = write!(nets, "net sb{src}");
        for s in sinks {
            let _ = write!(nets, " sb{s}");
        }
        nets.push('\n');
    }
    (blocks, nets)
}
