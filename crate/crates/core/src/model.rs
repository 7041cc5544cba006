//! Domain types: delay/power curves, level-shifter cells, modules and netlists.
//!
//! Levels are 1-based. Level 1 is the highest supply voltage and therefore the
//! smallest delay and the largest power. All quantities are nonnegative
//! integers; real-valued data must be quantized before it gets here.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("curve has {got} points, expected {expected}")]
    WrongArity { got: usize, expected: usize },
    #[error("curve levels must be 1..=k in order (point {index} has level {level})")]
    BadLevels { index: usize, level: u32 },
    #[error("negative delay or power at level {level}")]
    Negative { level: u32 },
    #[error("delay must increase and power must decrease with level (at level {level})")]
    NotMonotone { level: u32 },
    #[error("slope magnitudes must strictly decrease (at level {level})")]
    NotConvex { level: u32 },
    #[error("adding shifter overhead breaks the curve invariants: {0}")]
    ResultNotConvex(Box<ModelError>),
    #[error("curve has {curve} levels but shifter overhead has {shifter}")]
    LevelMismatch { curve: usize, shifter: usize },
    #[error("net has no sinks")]
    EmptyNet,
    #[error("net endpoint {0} does not name a module")]
    UnknownModule(usize),
    #[error("netlist contains a combinational cycle through module {0}")]
    CyclicNetlist(usize),
    #[error("module {0} has a non-positive dimension")]
    BadDimensions(String),
    #[error("shifter area and ratio must be positive")]
    BadShifter,
}

/// One (level, delay, power) sample of a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CurvePoint {
    pub level: u32,
    pub delay: i64,
    pub power: i64,
}

impl CurvePoint {
    pub const fn new(level: u32, delay: i64, power: i64) -> Self {
        Self { level, delay, power }
    }
}

impl From<(u32, i64, i64)> for CurvePoint {
    fn from((level, delay, power): (u32, i64, i64)) -> Self {
        Self::new(level, delay, power)
    }
}

/// A validated delay/power tradeoff curve.
///
/// Invariants (checked by [`validate_dp_curve`]): levels run `1..=k`, delays
/// strictly increase, powers strictly decrease and the slope magnitudes between
/// consecutive points strictly decrease, so the piecewise-linear interpolation
/// is convex.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DpCurve {
    points: Vec<CurvePoint>,
}

impl DpCurve {
    pub fn new<P: Into<CurvePoint>>(points: impl IntoIterator<Item = P>) -> Result<Self, ModelError> {
        let points: Vec<CurvePoint> = points.into_iter().map(Into::into).collect();
        let k = points.len();
        validate_dp_curve(&points, k)
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn k(&self) -> usize {
        self.points.len()
    }

    /// Delay at 1-based `level`.
    pub fn delay(&self, level: u32) -> i64 {
        self.points[level as usize - 1].delay
    }

    /// Power at 1-based `level`.
    pub fn power(&self, level: u32) -> i64 {
        self.points[level as usize - 1].power
    }

    /// The first `k` levels. Prefixes of a valid curve are valid, which is what
    /// makes nested voltage sets possible.
    pub fn truncate(&self, k: usize) -> Result<Self, ModelError> {
        if k == 0 || k > self.k() {
            return Err(ModelError::WrongArity { got: self.k(), expected: k });
        }
        Ok(Self { points: self.points[..k].to_vec() })
    }
}

fn check_levels(points: &[CurvePoint]) -> Result<(), ModelError> {
    for (i, p) in points.iter().enumerate() {
        if p.level as usize != i + 1 {
            return Err(ModelError::BadLevels { index: i, level: p.level });
        }
        if p.delay < 0 || p.power < 0 {
            return Err(ModelError::Negative { level: p.level });
        }
    }
    Ok(())
}

/// Checks every curve invariant for the given number of levels.
pub fn validate_dp_curve(points: &[CurvePoint], k: usize) -> Result<DpCurve, ModelError> {
    if points.len() != k || k == 0 {
        return Err(ModelError::WrongArity { got: points.len(), expected: k });
    }
    check_levels(points)?;
    for w in points.windows(2) {
        if w[1].delay <= w[0].delay || w[1].power >= w[0].power {
            return Err(ModelError::NotMonotone { level: w[1].level });
        }
    }
    // b(q) = (p[q-1] - p[q]) / (d[q] - d[q-1]) must strictly decrease.
    for w in points.windows(3) {
        let lhs = (w[0].power - w[1].power) as i128 * (w[2].delay - w[1].delay) as i128;
        let rhs = (w[1].power - w[2].power) as i128 * (w[1].delay - w[0].delay) as i128;
        if lhs <= rhs {
            return Err(ModelError::NotConvex { level: w[2].level });
        }
    }
    Ok(DpCurve { points: points.to_vec() })
}

/// Level-shifter cell: footprint plus per-level delay/power overhead.
///
/// The overhead is indexed by the level of the module that drives the shifter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShifterSpec {
    area: i64,
    ratio: (i64, i64),
    width: i64,
    height: i64,
    overhead: Vec<CurvePoint>,
}

impl ShifterSpec {
    /// Derives the footprint from `area` and a `width:height` ratio.
    ///
    /// `width = round(sqrt(area * ratio))`, `height = round(area / width)`, and the
    /// stored area becomes `width * height` so geometry and area model agree.
    pub fn new(
        area: i64,
        ratio: (i64, i64),
        overhead: impl IntoIterator<Item = impl Into<CurvePoint>>,
    ) -> Result<Self, ModelError> {
        if area <= 0 || ratio.0 <= 0 || ratio.1 <= 0 {
            return Err(ModelError::BadShifter);
        }
        let overhead: Vec<CurvePoint> = overhead.into_iter().map(Into::into).collect();
        check_levels(&overhead)?;
        let width = ((area as f64 * ratio.0 as f64 / ratio.1 as f64).sqrt().round() as i64).max(1);
        let height = ((area as f64 / width as f64).round() as i64).max(1);
        Ok(Self { area: width * height, ratio, width, height, overhead })
    }

    pub fn area(&self) -> i64 {
        self.area
    }
    pub fn ratio(&self) -> (i64, i64) {
        self.ratio
    }
    pub fn width(&self) -> i64 {
        self.width
    }
    pub fn height(&self) -> i64 {
        self.height
    }
    pub fn overhead(&self) -> &[CurvePoint] {
        &self.overhead
    }
    pub fn k(&self) -> usize {
        self.overhead.len()
    }

    pub fn truncate(&self, k: usize) -> Result<Self, ModelError> {
        if k == 0 || k > self.k() {
            return Err(ModelError::WrongArity { got: self.k(), expected: k });
        }
        Ok(Self { overhead: self.overhead[..k].to_vec(), ..self.clone() })
    }
}

/// Adds the shifter overhead to every level of `curve`.
pub fn modify_dp_curve(curve: &DpCurve, spec: &ShifterSpec) -> Result<DpCurve, ModelError> {
    modify_dp_curve_with(curve, spec, true)
}

/// Like [`modify_dp_curve`]; with `overhead_at_top_level == false` level 1 is left
/// untouched.
pub fn modify_dp_curve_with(
    curve: &DpCurve,
    spec: &ShifterSpec,
    overhead_at_top_level: bool,
) -> Result<DpCurve, ModelError> {
    if curve.k() != spec.k() {
        return Err(ModelError::LevelMismatch { curve: curve.k(), shifter: spec.k() });
    }
    let points: Vec<CurvePoint> = curve
        .points
        .iter()
        .zip(&spec.overhead)
        .map(|(p, o)| {
            if p.level == 1 && !overhead_at_top_level {
                *p
            } else {
                CurvePoint::new(p.level, p.delay + o.delay, p.power + o.power)
            }
        })
        .collect();
    validate_dp_curve(&points, curve.k()).map_err(|e| ModelError::ResultNotConvex(Box::new(e)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleBlock {
    pub name: String,
    pub width: i64,
    pub height: i64,
    pub curve: DpCurve,
}

impl ModuleBlock {
    pub fn new(name: impl Into<String>, width: i64, height: i64, curve: DpCurve) -> Result<Self, ModelError> {
        let name = name.into();
        if width <= 0 || height <= 0 {
            return Err(ModelError::BadDimensions(name));
        }
        Ok(Self { name, width, height, curve })
    }

    pub fn area(&self) -> i64 {
        self.width * self.height
    }
}

/// A multi-pin net before decomposition, by module index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawNet {
    pub source: usize,
    pub sinks: Vec<usize>,
}

/// A source-sink two-pin net, by module index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TwoPinNet {
    pub source: usize,
    pub sink: usize,
}

/// Splits each multi-pin net into one two-pin net per sink, preserving order.
pub fn decompose_multipin(raw: &[RawNet]) -> Result<Vec<TwoPinNet>, ModelError> {
    let mut out = Vec::with_capacity(raw.iter().map(|n| n.sinks.len()).sum());
    for net in raw {
        if net.sinks.is_empty() {
            return Err(ModelError::EmptyNet);
        }
        out.extend(net.sinks.iter().map(|&sink| TwoPinNet { source: net.source, sink }));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Netlist {
    modules: Vec<ModuleBlock>,
    nets: Vec<TwoPinNet>,
    t_cycle: i64,
    k: usize,
}

impl Netlist {
    /// Validates arity, net endpoints and acyclicity.
    pub fn new(modules: Vec<ModuleBlock>, nets: Vec<TwoPinNet>, t_cycle: i64, k: usize) -> Result<Self, ModelError> {
        for m in &modules {
            if m.curve.k() != k {
                return Err(ModelError::WrongArity { got: m.curve.k(), expected: k });
            }
        }
        for n in &nets {
            for v in [n.source, n.sink] {
                if v >= modules.len() {
                    return Err(ModelError::UnknownModule(v));
                }
            }
        }
        topological_order(modules.len(), &nets)?;
        Ok(Self { modules, nets, t_cycle, k })
    }

    pub fn modules(&self) -> &[ModuleBlock] {
        &self.modules
    }
    pub fn nets(&self) -> &[TwoPinNet] {
        &self.nets
    }
    pub fn t_cycle(&self) -> i64 {
        self.t_cycle
    }
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn curves(&self) -> Vec<DpCurve> {
        self.modules.iter().map(|m| m.curve.clone()).collect()
    }

    /// Module dimensions as `(width, height)`.
    pub fn dims(&self) -> Vec<(i64, i64)> {
        self.modules.iter().map(|m| (m.width, m.height)).collect()
    }
}

/// Kahn topological order of the module DAG; errors on a cycle.
pub fn topological_order(m: usize, nets: &[TwoPinNet]) -> Result<Vec<usize>, ModelError> {
    let mut indeg = vec![0usize; m];
    let mut succ = vec![Vec::new(); m];
    for n in nets {
        succ[n.source].push(n.sink);
        indeg[n.sink] += 1;
    }
    let mut stack: Vec<usize> = (0..m).rev().filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(m);
    while let Some(v) = stack.pop() {
        order.push(v);
        for &w in succ[v].iter().rev() {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                stack.push(w);
            }
        }
    }
    if order.len() < m {
        let bad = (0..m).find(|&v| indeg[v] > 0).unwrap_or(0);
        return Err(ModelError::CyclicNetlist(bad));
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(v: &[(u32, i64, i64)]) -> Vec<CurvePoint> {
        v.iter().copied().map(Into::into).collect()
    }

    #[test]
    fn validate_examples() {
        assert!(validate_dp_curve(&pts(&[(1, 2, 90), (2, 4, 50), (3, 8, 30)]), 3).is_ok());
        assert!(matches!(
            validate_dp_curve(&pts(&[(1, 2, 50), (2, 4, 90)]), 2),
            Err(ModelError::NotMonotone { level: 2 })
        ));
        // slopes 20, 10
        assert!(validate_dp_curve(&pts(&[(1, 2, 90), (2, 4, 50), (3, 6, 30)]), 3).is_ok());
        // slopes 5, 25
        assert!(matches!(
            validate_dp_curve(&pts(&[(1, 2, 90), (2, 4, 80), (3, 6, 30)]), 3),
            Err(ModelError::NotConvex { level: 3 })
        ));
        assert!(matches!(
            validate_dp_curve(&pts(&[(1, 2, 90), (2, 4, 50)]), 3),
            Err(ModelError::WrongArity { got: 2, expected: 3 })
        ));
        // collinear points are not strictly convex
        assert!(validate_dp_curve(&pts(&[(1, 2, 90), (2, 4, 70), (3, 6, 50)]), 3).is_err());
        assert!(matches!(
            validate_dp_curve(&pts(&[(2, 2, 90), (1, 4, 50)]), 2),
            Err(ModelError::BadLevels { .. })
        ));
        assert!(matches!(validate_dp_curve(&pts(&[(1, -1, 5)]), 1), Err(ModelError::Negative { .. })));
    }

    #[test]
    fn modify_examples() {
        let c = DpCurve::new([(1, 2, 90), (2, 4, 50)]).unwrap();
        let zero = ShifterSpec::new(4, (1, 1), [(1, 0, 0), (2, 0, 0)]).unwrap();
        assert_eq!(modify_dp_curve(&c, &zero).unwrap(), c);

        let c3 = DpCurve::new([(1, 2, 90), (2, 4, 50), (3, 8, 30)]).unwrap();
        let o3 = ShifterSpec::new(4, (1, 1), [(1, 1, 8), (2, 2, 4), (3, 4, 2)]).unwrap();
        let m = modify_dp_curve(&c3, &o3).unwrap();
        assert_eq!(m.points(), &pts(&[(1, 3, 98), (2, 6, 54), (3, 12, 32)])[..]);

        let bad = ShifterSpec::new(4, (1, 1), [(1, 0, 0), (2, 10, 100)]).unwrap();
        assert!(matches!(modify_dp_curve(&c, &bad), Err(ModelError::ResultNotConvex(_))));
    }

    #[test]
    fn modify_without_top_overhead() {
        let c = DpCurve::new([(1, 2, 90), (2, 4, 50)]).unwrap();
        let o = ShifterSpec::new(4, (1, 1), [(1, 1, 1), (2, 1, 1)]).unwrap();
        let m = modify_dp_curve_with(&c, &o, false).unwrap();
        assert_eq!(m.points(), &pts(&[(1, 2, 90), (2, 5, 51)])[..]);
    }

    #[test]
    fn shifter_footprint() {
        let s = ShifterSpec::new(8, (1, 2), [(1, 0, 0)]).unwrap();
        assert_eq!((s.width(), s.height(), s.area()), (2, 4, 8));
        // area 10 at 1:1 → 3x3, area redefined to 9
        let s = ShifterSpec::new(10, (1, 1), [(1, 0, 0)]).unwrap();
        assert_eq!((s.width(), s.height(), s.area()), (3, 3, 9));
        assert!(ShifterSpec::new(0, (1, 1), [(1, 0, 0)]).is_err());
    }

    #[test]
    fn decompose_examples() {
        let one = decompose_multipin(&[RawNet { source: 0, sinks: vec![1] }]).unwrap();
        assert_eq!(one, vec![TwoPinNet { source: 0, sink: 1 }]);
        let fan = decompose_multipin(&[RawNet { source: 0, sinks: vec![1, 2, 3] }]).unwrap();
        assert_eq!(fan.iter().map(|n| n.sink).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert!(fan.iter().all(|n| n.source == 0));
        assert_eq!(decompose_multipin(&[RawNet { source: 0, sinks: vec![] }]), Err(ModelError::EmptyNet));
    }

    #[test]
    fn netlist_rejects_cycles_and_unknowns() {
        let c = DpCurve::new([(1, 1, 10), (2, 3, 4)]).unwrap();
        let blocks: Vec<ModuleBlock> =
            (0..3).map(|i| ModuleBlock::new(format!("m{i}"), 1, 1, c.clone()).unwrap()).collect();
        let n = |s, t| TwoPinNet { source: s, sink: t };
        assert!(Netlist::new(blocks.clone(), vec![n(0, 1), n(1, 2)], 10, 2).is_ok());
        assert!(matches!(
            Netlist::new(blocks.clone(), vec![n(0, 1), n(1, 2), n(2, 0)], 10, 2),
            Err(ModelError::CyclicNetlist(_))
        ));
        assert!(matches!(Netlist::new(blocks.clone(), vec![n(1, 1)], 10, 2), Err(ModelError::CyclicNetlist(1))));
        assert!(matches!(Netlist::new(blocks.clone(), vec![n(0, 7)], 10, 2), Err(ModelError::UnknownModule(7))));
        assert!(matches!(Netlist::new(blocks, vec![], 10, 3), Err(ModelError::WrongArity { .. })));
        assert!(ModuleBlock::new("z", 0, 3, c).is_err());
    }

    prop_compose! {
        /// A valid curve built from strictly decreasing integer slopes.
        fn arb_curve(k: usize)(
            d1 in 0i64..20,
            steps in proptest::collection::vec(1i64..6, k - 1),
            slope_min in 1i64..10,
            slope_steps in proptest::collection::vec(1i64..10, k - 1),
            pk in 0i64..50,
        ) -> Vec<CurvePoint> {
            // slopes[i] is the magnitude between points i and i+1, strictly decreasing
            let mut slopes = vec![0i64; k - 1];
            let mut acc = slope_min;
            for i in (0..k - 1).rev() {
                slopes[i] = acc;
                acc += slope_steps[i];
            }
            let mut delays = vec![d1];
            for s in &steps { delays.push(delays.last().unwrap() + s); }
            let mut powers = vec![pk];
            for q in (1..k).rev() {
                let p = powers[0] + slopes[q - 1] * steps[q - 1];
                powers.insert(0, p);
            }
            (0..k).map(|i| CurvePoint::new(i as u32 + 1, delays[i], powers[i])).collect()
        }
    }

    proptest! {
        #[test]
        fn generated_curves_validate_and_interpolation_is_convex(points in arb_curve(4)) {
            let c = validate_dp_curve(&points, 4).unwrap();
            for w in c.points().windows(3) {
                // interior point lies strictly below the chord of its neighbours
                let (a, b, d) = (w[0], w[1], w[2]);
                let chord = a.power as i128 * (d.delay - b.delay) as i128
                    + d.power as i128 * (b.delay - a.delay) as i128;
                prop_assert!((b.power as i128) * ((d.delay - a.delay) as i128) < chord);
            }
            for k in 1..=4 {
                prop_assert!(c.truncate(k).is_ok());
            }
        }

        #[test]
        fn sum_of_curves_with_matching_delays_is_valid(a in arb_curve(3), b in arb_curve(3)) {
            // align b's delays onto a's so the sum is a pointwise sum on a shared axis
            let ca = validate_dp_curve(&a, 3).unwrap();
            let shifted: Vec<CurvePoint> = b.iter().zip(&a)
                .map(|(p, q)| CurvePoint::new(p.level, q.delay, p.power)).collect();
            // b re-sampled on a's delays may not be convex; only assert when it is
            if let Ok(cb) = validate_dp_curve(&shifted, 3) {
                let sum: Vec<CurvePoint> = ca.points().iter().zip(cb.points())
                    .map(|(x, y)| CurvePoint::new(x.level, x.delay, x.power + y.power)).collect();
                prop_assert!(validate_dp_curve(&sum, 3).is_ok());
            }
        }

        #[test]
        fn decompose_length_is_sink_count(sinks in proptest::collection::vec(1usize..5, 1..6)) {
            let raw: Vec<RawNet> = sinks.iter().enumerate()
                .map(|(i, &n)| RawNet { source: i, sinks: (0..n).map(|j| 10 + j).collect() }).collect();
            let out = decompose_multipin(&raw).unwrap();
            prop_assert_eq!(out.len(), sinks.iter().sum::<usize>());
        }
    }
}
