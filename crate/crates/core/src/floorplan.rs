//! Slicing floorplans.
//!
//! A floorplan is encoded as a normalized Polish expression: postfix over
//! module operands and the cut operators `H` (children stacked bottom to top)
//! and `V` (children side by side, left to right). Packing combines child
//! sizes bottom-up and then hands every child an exact sub-rectangle of its
//! parent, so the leaf rectangles ("rooms") tile the chip. The right or top
//! child absorbs all slack.

use num_rational::Ratio;
use rand::Rng;
use thiserror::Error;

use crate::model::TwoPinNet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FloorplanError {
    #[error("malformed slicing expression: {0}")]
    MalformedExpression(String),
    #[error("expression has {got} operands but {expected} modules were given")]
    OperandCount { got: usize, expected: usize },
    #[error("phi weights must be nonnegative and not all zero")]
    BadWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Rect {
    pub x: i64,
    pub y: i64,
    pub w: i64,
    pub h: i64,
}

impl Rect {
    pub const fn new(x: i64, y: i64, w: i64, h: i64) -> Self {
        Self { x, y, w, h }
    }
    pub fn area(&self) -> i64 {
        self.w * self.h
    }
    pub fn right(&self) -> i64 {
        self.x + self.w
    }
    pub fn top(&self) -> i64 {
        self.y + self.h
    }
    pub fn is_empty(&self) -> bool {
        self.w <= 0 || self.h <= 0
    }
    /// Interiors overlap (touching edges do not count).
    pub fn overlaps(&self, o: &Rect) -> bool {
        self.x < o.right() && o.x < self.right() && self.y < o.top() && o.y < self.top()
    }
    pub fn contains(&self, o: &Rect) -> bool {
        o.x >= self.x && o.y >= self.y && o.right() <= self.right() && o.top() <= self.top()
    }
    /// Center in doubled coordinates, exact for odd sizes.
    pub fn center_x2(&self) -> (i64, i64) {
        (2 * self.x + self.w, 2 * self.y + self.h)
    }
    pub fn translate(&self, dx: i64, dy: i64) -> Rect {
        Rect::new(self.x + dx, self.y + dy, self.w, self.h)
    }
}

/// Manhattan distance between two points.
pub fn manhattan(a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - b.0).abs() + (a.1 - b.1).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cut {
    /// Horizontal cut line: first operand below, second above.
    H,
    /// Vertical cut line: first operand left, second right.
    V,
}

impl Cut {
    pub fn flip(self) -> Cut {
        match self {
            Cut::H => Cut::V,
            Cut::V => Cut::H,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Token {
    Module(usize),
    Cut(Cut),
}

impl Token {
    fn is_operand(self) -> bool {
        matches!(self, Token::Module(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SlicingExpr {
    tokens: Vec<Token>,
}

impl SlicingExpr {
    /// Validates postfix shape, operand uniqueness and normalization.
    pub fn new(tokens: Vec<Token>, modules: usize) -> Result<Self, FloorplanError> {
        let ops = tokens.iter().filter(|t| t.is_operand()).count();
        if ops != modules {
            return Err(FloorplanError::OperandCount { got: ops, expected: modules });
        }
        let mut seen = vec![false; modules];
        for t in &tokens {
            if let Token::Module(i) = *t {
                if i >= modules || seen[i] {
                    return Err(FloorplanError::MalformedExpression(format!("operand {i} repeated or out of range")));
                }
                seen[i] = true;
            }
        }
        if !is_normalized_postfix(&tokens) {
            return Err(FloorplanError::MalformedExpression("not a normalized postfix expression".into()));
        }
        Ok(Self { tokens })
    }

    /// `0 1 V 2 H 3 V ...`: a valid starting point for any module count.
    pub fn initial(modules: usize) -> Self {
        let mut tokens = Vec::with_capacity(2 * modules);
        for i in 0..modules {
            tokens.push(Token::Module(i));
            if i > 0 {
                tokens.push(Token::Cut(if i % 2 == 1 { Cut::V } else { Cut::H }));
            }
        }
        Self { tokens }
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn modules(&self) -> usize {
        self.tokens.iter().filter(|t| t.is_operand()).count()
    }

    /// Maximal runs of consecutive operators, as `(start, len)`.
    pub fn chains(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.tokens.len() {
            if self.tokens[i].is_operand() {
                i += 1;
                continue;
            }
            let start = i;
            while i < self.tokens.len() && !self.tokens[i].is_operand() {
                i += 1;
            }
            out.push((start, i - start));
        }
        out
    }

    fn operand_positions(&self) -> Vec<usize> {
        (0..self.tokens.len()).filter(|&i| self.tokens[i].is_operand()).collect()
    }

    /// Applies a move; `None` if it would break the expression.
    pub fn apply(&self, mv: Move) -> Option<SlicingExpr> {
        let mut tokens = self.tokens.clone();
        match mv {
            Move::SwapOperands(j) => {
                let pos = self.operand_positions();
                if j + 1 >= pos.len() {
                    return None;
                }
                tokens.swap(pos[j], pos[j + 1]);
            }
            Move::ComplementChain(c) => {
                let (start, len) = *self.chains().get(c)?;
                for t in &mut tokens[start..start + len] {
                    if let Token::Cut(cut) = t {
                        *cut = cut.flip();
                    }
                }
            }
            Move::SwapAdjacent(i) => {
                if i + 1 >= tokens.len() || tokens[i].is_operand() == tokens[i + 1].is_operand() {
                    return None;
                }
                tokens.swap(i, i + 1);
                if !is_normalized_postfix(&tokens) {
                    return None;
                }
            }
        }
        Some(SlicingExpr { tokens })
    }
}

fn is_normalized_postfix(tokens: &[Token]) -> bool {
    let mut depth = 0usize;
    let mut prev: Option<Cut> = None;
    for t in tokens {
        match *t {
            Token::Module(_) => {
                depth += 1;
                prev = None;
            }
            Token::Cut(c) => {
                if depth < 2 || prev == Some(c) {
                    return false;
                }
                depth -= 1;
                prev = Some(c);
            }
        }
    }
    depth == 1 || tokens.is_empty()
}

impl std::fmt::Display for SlicingExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .tokens
            .iter()
            .map(|t| match t {
                Token::Module(i) => i.to_string(),
                Token::Cut(Cut::H) => "H".into(),
                Token::Cut(Cut::V) => "V".into(),
            })
            .collect();
        f.write_str(&parts.join(" "))
    }
}

/// Concrete moves on a slicing expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    /// Swap the `j`-th and `(j+1)`-th operands.
    SwapOperands(usize),
    /// Complement every operator of the `c`-th chain.
    ComplementChain(usize),
    /// Swap the operand/operator pair at token positions `i`, `i + 1`.
    SwapAdjacent(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    M1,
    M2,
    M3,
}

/// Random move of the given kind. M3 retries a bounded number of positions
/// and falls back to M1.
pub fn perturb<R: Rng + ?Sized>(expr: &SlicingExpr, kind: MoveKind, rng: &mut R) -> SlicingExpr {
    let n = expr.modules();
    let m1 = |rng: &mut R| {
        if n < 2 {
            return expr.clone();
        }
        let j = rng.gen_range(0..n - 1);
        expr.apply(Move::SwapOperands(j)).expect("operand swap is always legal")
    };
    match kind {
        MoveKind::M1 => m1(rng),
        MoveKind::M2 => {
            let chains = expr.chains().len();
            if chains == 0 {
                return expr.clone();
            }
            let c = rng.gen_range(0..chains);
            expr.apply(Move::ComplementChain(c)).expect("chain complement is always legal")
        }
        MoveKind::M3 => {
            let len = expr.tokens.len();
            if len >= 2 {
                for _ in 0..2 * len {
                    let i = rng.gen_range(0..len - 1);
                    if let Some(e) = expr.apply(Move::SwapAdjacent(i)) {
                        return e;
                    }
                }
            }
            m1(rng)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Room {
    pub rect: Rect,
    /// Module footprint; the module sits at the room origin.
    pub module_w: i64,
    pub module_h: i64,
}

impl Room {
    pub fn module_rect(&self) -> Rect {
        Rect::new(self.rect.x, self.rect.y, self.module_w, self.module_h)
    }

    pub fn slack(&self) -> i64 {
        self.rect.area() - self.module_w * self.module_h
    }

    pub fn translate(&self, dx: i64, dy: i64) -> Room {
        Room { rect: self.rect.translate(dx, dy), ..*self }
    }
}

/// Right strip `p1`, top strip `p2` and corner `p3` of a room's whitespace.
pub fn whitespace_parts(room: &Room) -> [Rect; 3] {
    let r = room.rect;
    let (mw, mh) = (room.module_w, room.module_h);
    [
        Rect::new(r.x + mw, r.y, r.w - mw, mh),
        Rect::new(r.x, r.y + mh, mw, r.h - mh),
        Rect::new(r.x + mw, r.y + mh, r.w - mw, r.h - mh),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Floorplan {
    pub width: i64,
    pub height: i64,
    /// One room per module, indexed by module.
    pub rooms: Vec<Room>,
}

impl Floorplan {
    pub fn area(&self) -> i64 {
        self.width * self.height
    }

    pub fn chip(&self) -> Rect {
        Rect::new(0, 0, self.width, self.height)
    }

    pub fn module_area(&self) -> i64 {
        self.rooms.iter().map(|r| r.module_w * r.module_h).sum()
    }

    /// Whitespace share of the chip, in percent.
    pub fn white_space_percent(&self) -> Ratio<i64> {
        if self.area() == 0 {
            return Ratio::from_integer(0);
        }
        Ratio::new(100 * (self.area() - self.module_area()), self.area())
    }

    /// Checks that rooms tile the chip and hold their modules.
    pub fn check_tiling(&self) -> Result<(), String> {
        let chip = self.chip();
        let total: i64 = self.rooms.iter().map(|r| r.rect.area()).sum();
        if total != chip.area() {
            return Err(format!("room area {total} != chip area {}", chip.area()));
        }
        for (i, r) in self.rooms.iter().enumerate() {
            if !chip.contains(&r.rect) {
                return Err(format!("room {i} leaves the chip"));
            }
            if r.module_w > r.rect.w || r.module_h > r.rect.h || r.module_w <= 0 || r.module_h <= 0 {
                return Err(format!("room {i} does not hold its module"));
            }
            for (j, o) in self.rooms.iter().enumerate().skip(i + 1) {
                if r.rect.overlaps(&o.rect) {
                    return Err(format!("rooms {i} and {j} overlap"));
                }
            }
        }
        Ok(())
    }

    pub fn module_center_x2(&self, module: usize) -> (i64, i64) {
        self.rooms[module].module_rect().center_x2()
    }
}

enum Node {
    Leaf(usize),
    Inner(Cut, usize, usize),
}

/// Packs `expr` over modules of the given `(width, height)`.
pub fn pack(expr: &SlicingExpr, dims: &[(i64, i64)]) -> Result<Floorplan, FloorplanError> {
    if expr.modules() != dims.len() {
        return Err(FloorplanError::OperandCount { got: expr.modules(), expected: dims.len() });
    }
    if dims.is_empty() {
        return Ok(Floorplan { width: 0, height: 0, rooms: Vec::new() });
    }
    let mut nodes: Vec<(Node, i64, i64)> = Vec::with_capacity(expr.tokens.len());
    let mut stack: Vec<usize> = Vec::new();
    for t in &expr.tokens {
        match *t {
            Token::Module(i) => {
                let &(w, h) = dims.get(i).ok_or_else(|| FloorplanError::MalformedExpression(format!("operand {i}")))?;
                nodes.push((Node::Leaf(i), w, h));
            }
            Token::Cut(c) => {
                let (Some(b), Some(a)) = (stack.pop(), stack.pop()) else {
                    return Err(FloorplanError::MalformedExpression("operator without two operands".into()));
                };
                let (wa, ha, wb, hb) = (nodes[a].1, nodes[a].2, nodes[b].1, nodes[b].2);
                let (w, h) = match c {
                    Cut::H => (wa.max(wb), ha + hb),
                    Cut::V => (wa + wb, ha.max(hb)),
                };
                nodes.push((Node::Inner(c, a, b), w, h));
            }
        }
        stack.push(nodes.len() - 1);
    }
    let [root] = stack[..] else {
        return Err(FloorplanError::MalformedExpression("expression does not reduce to one tree".into()));
    };
    let (width, height) = (nodes[root].1, nodes[root].2);
    let mut rooms = vec![Room { rect: Rect::default(), module_w: 0, module_h: 0 }; dims.len()];
    let mut todo = vec![(root, Rect::new(0, 0, width, height))];
    while let Some((n, r)) = todo.pop() {
        match nodes[n].0 {
            Node::Leaf(i) => rooms[i] = Room { rect: r, module_w: dims[i].0, module_h: dims[i].1 },
            Node::Inner(Cut::V, a, b) => {
                let wa = nodes[a].1;
                todo.push((a, Rect::new(r.x, r.y, wa, r.h)));
                todo.push((b, Rect::new(r.x + wa, r.y, r.w - wa, r.h)));
            }
            Node::Inner(Cut::H, a, b) => {
                let ha = nodes[a].2;
                todo.push((a, Rect::new(r.x, r.y, r.w, ha)));
                todo.push((b, Rect::new(r.x, r.y + ha, r.w, r.h - ha)));
            }
        }
    }
    Ok(Floorplan { width, height, rooms })
}

/// Per-net center-to-center Manhattan length, doubled.
pub fn net_length_x2(fp: &Floorplan, net: &TwoPinNet) -> i64 {
    manhattan(fp.module_center_x2(net.source), fp.module_center_x2(net.sink))
}

/// Total center-to-center Manhattan wirelength over two-pin nets, doubled.
pub fn hpwl_x2(fp: &Floorplan, nets: &[TwoPinNet]) -> i64 {
    nets.iter().map(|n| net_length_x2(fp, n)).sum()
}

/// Total wirelength, rounded down to whole length units.
pub fn hpwl(fp: &Floorplan, nets: &[TwoPinNet]) -> i64 {
    hpwl_x2(fp, nets).div_euclid(2)
}

/// Connected components of the room adjacency graph restricted to rooms at the
/// same level. Rooms are adjacent when they share a boundary of positive length.
pub fn voltage_islands(fp: &Floorplan, levels: &[u32]) -> usize {
    let n = fp.rooms.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut v: usize) -> usize {
        while p[v] != v {
            p[v] = p[p[v]];
            v = p[v];
        }
        v
    }
    for i in 0..n {
        for j in i + 1..n {
            if levels[i] != levels[j] {
                continue;
            }
            let (a, b) = (fp.rooms[i].rect, fp.rooms[j].rect);
            let vertical = (a.right() == b.x || b.right() == a.x) && a.y.max(b.y) < a.top().min(b.top());
            let horizontal = (a.top() == b.y || b.top() == a.y) && a.x.max(b.x) < a.right().min(b.right());
            if vertical || horizontal {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    (0..n).filter(|&v| find(&mut parent, v) == v).count()
}

/// Weights of the floorplan cost `area, wirelength, power, islands, unassigned shifters`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhiWeights {
    pub area: Ratio<i64>,
    pub wirelength: Ratio<i64>,
    pub power: Ratio<i64>,
    pub islands: Ratio<i64>,
    pub unassigned: Ratio<i64>,
}

impl PhiWeights {
    pub fn new(
        area: Ratio<i64>,
        wirelength: Ratio<i64>,
        power: Ratio<i64>,
        islands: Ratio<i64>,
        unassigned: Ratio<i64>,
    ) -> Result<Self, FloorplanError> {
        let all = [area, wirelength, power, islands, unassigned];
        let zero = Ratio::from_integer(0);
        if all.iter().any(|w| *w < zero) || all.iter().all(|w| *w == zero) {
            return Err(FloorplanError::BadWeights);
        }
        Ok(Self { area, wirelength, power, islands, unassigned })
    }

    pub fn uniform() -> Self {
        let one = Ratio::from_integer(1);
        Self { area: one, wirelength: one, power: one, islands: one, unassigned: one }
    }
}

/// The five quantities the floorplan cost weighs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Metrics {
    /// Chip area.
    pub area: i64,
    /// Wirelength including shifter detours.
    pub wirelength: i64,
    /// Total modified power.
    pub power: i64,
    /// Voltage-island count.
    pub islands: i64,
    /// Shifters left in the fallback set.
    pub unassigned: i64,
}

fn widen(r: Ratio<i64>) -> Ratio<i128> {
    Ratio::new(*r.numer() as i128, *r.denom() as i128)
}

pub fn cost_phi(m: &Metrics, w: &PhiWeights) -> Ratio<i128> {
    [
        (w.area, m.area),
        (w.wirelength, m.wirelength),
        (w.power, m.power),
        (w.islands, m.islands),
        (w.unassigned, m.unassigned),
    ]
    .into_iter()
    .map(|(wt, v)| widen(wt) * Ratio::from_integer(v as i128))
    .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn expr(s: &str, m: usize) -> SlicingExpr {
        let tokens = s
            .split_whitespace()
            .map(|t| match t {
                "H" => Token::Cut(Cut::H),
                "V" => Token::Cut(Cut::V),
                n => Token::Module(n.parse().unwrap()),
            })
            .collect();
        SlicingExpr::new(tokens, m).unwrap()
    }

    #[test]
    fn expression_validation() {
        let t = |s: &str| -> Vec<Token> {
            s.split_whitespace()
                .map(|t| match t {
                    "H" => Token::Cut(Cut::H),
                    "V" => Token::Cut(Cut::V),
                    n => Token::Module(n.parse().unwrap()),
                })
                .collect()
        };
        assert!(SlicingExpr::new(t("0 1 V 2 V"), 3).is_ok());
        assert!(SlicingExpr::new(t("0 1 2 V V"), 3).is_err()); // VV chain not normalized
        assert!(SlicingExpr::new(t("0 V 1"), 2).is_err());
        assert!(SlicingExpr::new(t("0 0 V"), 2).is_err());
        assert!(SlicingExpr::new(t("0 1"), 2).is_err());
        assert!(matches!(SlicingExpr::new(t("0 1 V"), 3), Err(FloorplanError::OperandCount { .. })));
        for m in 0..9 {
            assert!(SlicingExpr::new(SlicingExpr::initial(m).tokens().to_vec(), m).is_ok());
        }
    }

    #[test]
    fn pack_equal_pair() {
        let fp = pack(&expr("0 1 V", 2), &[(2, 2), (2, 2)]).unwrap();
        assert_eq!((fp.width, fp.height), (4, 2));
        assert_eq!(fp.rooms[0].rect, Rect::new(0, 0, 2, 2));
        assert_eq!(fp.rooms[1].rect, Rect::new(2, 0, 2, 2));
        assert!(fp.rooms.iter().all(|r| r.slack() == 0));
    }

    #[test]
    fn pack_unequal_pair() {
        let fp = pack(&expr("0 1 V", 2), &[(2, 2), (2, 4)]).unwrap();
        assert_eq!((fp.width, fp.height), (4, 4));
        assert_eq!(fp.rooms[0].rect, Rect::new(0, 0, 2, 4));
        let [p1, p2, p3] = whitespace_parts(&fp.rooms[0]);
        assert_eq!(p2, Rect::new(0, 2, 2, 2));
        assert!(p1.is_empty() && p3.is_empty());
    }

    #[test]
    fn slack_goes_to_top_and_right() {
        // 0 below 1: 1 is narrower so it is widened; 2 right of both gets the height slack
        let fp = pack(&expr("0 1 H 2 V", 3), &[(4, 2), (2, 2), (3, 1)]).unwrap();
        assert_eq!((fp.width, fp.height), (7, 4));
        assert_eq!(fp.rooms[0].rect, Rect::new(0, 0, 4, 2));
        assert_eq!(fp.rooms[1].rect, Rect::new(0, 2, 4, 2));
        assert_eq!(fp.rooms[2].rect, Rect::new(4, 0, 3, 4));
        fp.check_tiling().unwrap();
    }

    #[test]
    fn whitespace_examples() {
        let exact = Room { rect: Rect::new(0, 0, 3, 3), module_w: 3, module_h: 3 };
        assert!(whitespace_parts(&exact).iter().all(|p| p.area() == 0));
        let r = Room { rect: Rect::new(5, 5, 10, 10), module_w: 8, module_h: 8 };
        let [p1, p2, p3] = whitespace_parts(&r);
        assert_eq!((p1.w, p1.h, p2.w, p2.h, p3.w, p3.h), (2, 8, 8, 2, 2, 2));
        assert_eq!((p1.x, p1.y), (13, 5));
        assert_eq!((p3.x, p3.y), (13, 13));
    }

    #[test]
    fn hpwl_examples() {
        // module centers (1,1) and (4,5)
        let fp = pack(&expr("0 1 V", 2), &[(2, 2), (2, 2)]).unwrap();
        let net = [TwoPinNet { source: 0, sink: 1 }];
        assert_eq!(hpwl(&fp, &net), 2);
        let fp = Floorplan {
            width: 6,
            height: 7,
            rooms: vec![
                Room { rect: Rect::new(0, 0, 2, 2), module_w: 2, module_h: 2 },
                Room { rect: Rect::new(3, 4, 2, 2), module_w: 2, module_h: 2 },
            ],
        };
        assert_eq!(hpwl(&fp, &net), 7);
        let self_loop = [TwoPinNet { source: 0, sink: 0 }];
        assert_eq!(hpwl(&fp, &self_loop), 0);
    }

    #[test]
    fn islands_examples() {
        let dims = [(2, 2); 4];
        // 2x2 grid: (0 1 V) below (2 3 V)
        let fp = pack(&expr("0 1 V 2 3 V H", 4), &dims).unwrap();
        assert_eq!(voltage_islands(&fp, &[1, 1, 1, 1]), 1);
        assert_eq!(voltage_islands(&fp, &[1, 2, 3, 4]), 4);
        // checkerboard: 0 at bottom-left, 1 bottom-right, 2 top-left, 3 top-right;
        // diagonal corners share no boundary of positive length
        assert_eq!(voltage_islands(&fp, &[1, 2, 2, 1]), 4);
        assert_eq!(voltage_islands(&fp, &[1, 1, 2, 2]), 2);
    }

    #[test]
    fn phi_examples() {
        let m = Metrics { area: 100, wirelength: 50, power: 40, islands: 2, unassigned: 1 };
        assert_eq!(cost_phi(&m, &PhiWeights::uniform()), Ratio::from_integer(193));
        let z = Ratio::from_integer(0);
        let w = PhiWeights::new(Ratio::from_integer(1), z, z, z, z).unwrap();
        assert_eq!(cost_phi(&m, &w), Ratio::from_integer(100));
        assert!(PhiWeights::new(z, z, z, z, z).is_err());
        assert!(PhiWeights::new(Ratio::from_integer(-1), z, z, z, Ratio::from_integer(1)).is_err());
        let half = PhiWeights::new(Ratio::new(1, 2), z, z, z, z).unwrap();
        assert_eq!(cost_phi(&Metrics { area: 3, ..m }, &half), Ratio::new(3, 2));
    }

    #[test]
    fn m2_is_an_involution_and_m1_swaps() {
        let e = expr("0 1 V 2 H 3 V", 4);
        for c in 0..e.chains().len() {
            let once = e.apply(Move::ComplementChain(c)).unwrap();
            assert_ne!(once, e);
            assert_eq!(once.apply(Move::ComplementChain(c)).unwrap(), e);
        }
        let two = expr("0 1 V", 2);
        assert_eq!(two.apply(Move::SwapOperands(0)).unwrap(), expr("1 0 V", 2));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(perturb(&two, MoveKind::M1, &mut rng), expr("1 0 V", 2));
    }

    #[test]
    fn m3_rejects_illegal_swaps() {
        let e = expr("0 1 V 2 H", 3);
        // swapping "1 V" gives "0 V 1 ..." which breaks balloting
        assert!(e.apply(Move::SwapAdjacent(1)).is_none());
        // swapping "V 2" gives "0 1 2 V H", legal
        assert_eq!(e.apply(Move::SwapAdjacent(2)).unwrap(), expr("0 1 2 V H", 3));
        // two operands are not an operand/operator pair
        assert!(e.apply(Move::SwapAdjacent(0)).is_none());
    }

    #[test]
    fn random_walk_always_packs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = 9;
        let dims: Vec<(i64, i64)> = (0..m).map(|i| (1 + (i as i64 * 7) % 5, 1 + (i as i64 * 3) % 4)).collect();
        let mut e = SlicingExpr::initial(m);
        for step in 0..10_000 {
            let kind = [MoveKind::M1, MoveKind::M2, MoveKind::M3][step % 3];
            e = perturb(&e, kind, &mut rng);
            SlicingExpr::new(e.tokens().to_vec(), m).unwrap();
            pack(&e, &dims).unwrap().check_tiling().unwrap();
        }
    }

    fn arb_expr(m: usize) -> impl Strategy<Value = SlicingExpr> {
        proptest::collection::vec((0u8..3, any::<u64>()), 0..40).prop_map(move |moves| {
            let mut rng = ChaCha8Rng::seed_from_u64(moves.len() as u64);
            let mut e = SlicingExpr::initial(m);
            for (k, _) in moves {
                let kind = [MoveKind::M1, MoveKind::M2, MoveKind::M3][k as usize];
                e = perturb(&e, kind, &mut rng);
            }
            e
        })
    }

    proptest! {
        #[test]
        fn packing_tiles_the_chip(
            e in arb_expr(6),
            dims in proptest::collection::vec((1i64..9, 1i64..9), 6),
        ) {
            let fp = pack(&e, &dims).unwrap();
            prop_assert!(fp.check_tiling().is_ok());
            for r in &fp.rooms {
                let parts = whitespace_parts(r);
                prop_assert_eq!(parts.iter().map(Rect::area).sum::<i64>(), r.slack());
                let module = r.module_rect();
                for (i, p) in parts.iter().enumerate() {
                    prop_assert!(!p.overlaps(&module));
                    prop_assert!(r.rect.contains(p) || p.is_empty());
                    for q in &parts[i + 1..] {
                        prop_assert!(!p.overlaps(q));
                    }
                }
            }
        }

        #[test]
        fn hpwl_is_translation_invariant(
            e in arb_expr(5),
            dims in proptest::collection::vec((1i64..9, 1i64..9), 5),
            dx in -50i64..50, dy in -50i64..50,
        ) {
            let fp = pack(&e, &dims).unwrap();
            let nets: Vec<TwoPinNet> = (0..4).map(|i| TwoPinNet { source: i, sink: i + 1 }).collect();
            let moved = Floorplan { rooms: fp.rooms.iter().map(|r| r.translate(dx, dy)).collect(), ..fp.clone() };
            prop_assert_eq!(hpwl_x2(&fp, &nets), hpwl_x2(&moved, &nets));
        }

        #[test]
        fn phi_is_monotone(
            base in (0i64..1000, 0i64..1000, 0i64..1000, 0i64..10, 0i64..10),
            bump in 0i64..100, which in 0usize..5,
            ws in proptest::collection::vec((0i64..5, 1i64..4), 5),
        ) {
            let r = |i: usize| Ratio::new(ws[i].0, ws[i].1);
            let Ok(w) = PhiWeights::new(r(0), r(1), r(2), r(3), r(4)) else { return Ok(()); };
            let m = Metrics { area: base.0, wirelength: base.1, power: base.2, islands: base.3, unassigned: base.4 };
            let mut m2 = m;
            match which {
                0 => m2.area += bump,
                1 => m2.wirelength += bump,
                2 => m2.power += bump,
                3 => m2.islands += bump,
                _ => m2.unassigned += bump,
            }
            prop_assert!(cost_phi(&m2, &w) >= cost_phi(&m, &w));
        }
    }
}
