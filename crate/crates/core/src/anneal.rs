//! Simulated annealing over slicing floorplans.
//!
//! Every candidate is packed, given wire delays from its geometry, and run
//! through voltage assignment. Shifter assignment is refreshed on a cadence of
//! accepted moves; in between, the last shifter count and detour are reused.

use std::collections::HashMap;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::floorplan::{
    cost_phi, hpwl_x2, net_length_x2, pack, perturb, voltage_islands, Floorplan, FloorplanError, Metrics, MoveKind,
    PhiWeights, SlicingExpr,
};
use crate::model::{modify_dp_curve_with, DpCurve, ModelError, Netlist, ShifterSpec};
use crate::shifter::{assign_shifters, default_window, required_shifters, ShifterAssignment};
use crate::voltage::{assign_voltages_with, AssignOptions, TimingGraph, VoltageAssignment, VoltageError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnnealError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Floorplan(#[from] FloorplanError),
    #[error(transparent)]
    Voltage(#[from] VoltageError),
    #[error("netlist has no modules")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealConfig {
    /// Geometric cooling factor.
    pub alpha: f64,
    /// Moves per temperature, per module.
    pub beta: usize,
    /// Target acceptance ratio of uphill moves at the start temperature.
    pub initial_acceptance: f64,
    /// Shifter assignment refresh cadence, in accepted moves.
    pub ls_every: usize,
    /// Wire delay per unit of net length.
    pub kappa: Ratio<i64>,
    /// Shifter search window; `None` uses half the mean room dimension.
    pub window: Option<i64>,
    pub rotation: bool,
    /// `None` derives weights from an initial random sample.
    pub weights: Option<PhiWeights>,
    pub overhead_at_top_level: bool,
    /// Stop once the temperature falls below `t0 * min_temperature_ratio`.
    pub min_temperature_ratio: f64,
    /// Stop after this many consecutive temperatures with an acceptance ratio
    /// under `frozen_acceptance`.
    pub frozen_temperatures: usize,
    pub frozen_acceptance: f64,
    pub max_temperatures: usize,
    /// Hard cap on candidate evaluations.
    pub max_evaluations: Option<usize>,
    pub assign: AssignOptions,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            beta: 10,
            initial_acceptance: 0.9,
            ls_every: 5,
            kappa: Ratio::from_integer(0),
            window: None,
            rotation: false,
            weights: None,
            overhead_at_top_level: true,
            min_temperature_ratio: 1e-4,
            frozen_temperatures: 3,
            frozen_acceptance: 0.02,
            max_temperatures: 200,
            max_evaluations: None,
            assign: AssignOptions::default(),
        }
    }
}

/// Annealing state: a slicing expression plus per-module rotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct State {
    pub expr: SlicingExpr,
    pub rotated: Vec<bool>,
}

impl State {
    pub fn dims(&self, base: &[(i64, i64)]) -> Vec<(i64, i64)> {
        base.iter().zip(&self.rotated).map(|(&(w, h), &r)| if r { (h, w) } else { (w, h) }).collect()
    }
}

/// What one candidate evaluation produced; handed to the observer.
#[derive(Debug, Clone)]
pub struct Candidate<'a> {
    pub floorplan: &'a Floorplan,
    pub wire_delays: &'a [i64],
    pub voltage: Option<&'a VoltageAssignment>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub temperature: f64,
    pub best_phi: Ratio<i128>,
    pub current_phi: Option<Ratio<i128>>,
    pub accepted: usize,
    pub evaluated: usize,
}

#[derive(Debug, Clone)]
pub struct AnnealResult {
    pub state: State,
    pub floorplan: Floorplan,
    pub wire_delays: Vec<i64>,
    pub voltage: VoltageAssignment,
    pub shifters: ShifterAssignment,
    pub metrics: Metrics,
    pub phi: Ratio<i128>,
    pub weights: PhiWeights,
    /// Modified curves the assignment was computed against.
    pub curves: Vec<DpCurve>,
    pub checkpoints: Vec<Checkpoint>,
    pub evaluations: usize,
}

/// `ceil(kappa * length)` per net.
pub fn wire_delays(fp: &Floorplan, netlist: &Netlist, kappa: Ratio<i64>) -> Vec<i64> {
    netlist
        .nets()
        .iter()
        .map(|n| {
            let len = Ratio::new(net_length_x2(fp, n), 2);
            (kappa * len).ceil().to_integer()
        })
        .collect()
}

struct Evaluated {
    fp: Floorplan,
    delays: Vec<i64>,
    voltage: Result<VoltageAssignment, VoltageError>,
    wl_x2: i64,
}

struct Evaluator<'a> {
    netlist: &'a Netlist,
    spec: ShifterSpec,
    curves: Vec<DpCurve>,
    base_dims: Vec<(i64, i64)>,
    config: &'a AnnealConfig,
    cache: HashMap<Vec<i64>, Result<VoltageAssignment, VoltageError>>,
    evaluations: usize,
}

impl<'a> Evaluator<'a> {
    fn geometry(&mut self, state: &State) -> Result<Evaluated, AnnealError> {
        let fp = pack(&state.expr, &state.dims(&self.base_dims))?;
        let delays = wire_delays(&fp, self.netlist, self.config.kappa);
        let voltage = match self.cache.get(&delays) {
            Some(v) => v.clone(),
            None => {
                let v = TimingGraph::new(self.netlist.modules().len(), self.netlist.nets(), &delays, self.netlist.t_cycle())
                    .and_then(|tg| assign_voltages_with(&tg, &self.curves, self.config.assign));
                self.cache.insert(delays.clone(), v.clone());
                v
            }
        };
        let wl_x2 = hpwl_x2(&fp, self.netlist.nets());
        self.evaluations += 1;
        Ok(Evaluated { fp, delays, voltage, wl_x2 })
    }

    fn shifters(&self, ev: &Evaluated) -> Option<ShifterAssignment> {
        let v = ev.voltage.as_ref().ok()?;
        let sh = required_shifters(self.netlist.nets(), &v.levels);
        let window = self.config.window.unwrap_or_else(|| default_window(&ev.fp));
        Some(assign_shifters(&sh, &ev.fp, self.netlist.nets(), &self.spec, window))
    }
}

/// Carried shifter figures between refreshes.
#[derive(Debug, Clone, Copy, Default)]
struct ShifterStats {
    unassigned: i64,
    detour_x2: i64,
}

impl ShifterStats {
    fn of(a: &ShifterAssignment) -> Self {
        Self { unassigned: a.els_count() as i64, detour_x2: a.detour_x2 }
    }
}

fn metrics(ev: &Evaluated, stats: ShifterStats) -> Option<Metrics> {
    let v = ev.voltage.as_ref().ok()?;
    Some(Metrics {
        area: ev.fp.area(),
        wirelength: (ev.wl_x2 + stats.detour_x2) / 2,
        power: v.total_power,
        islands: voltage_islands(&ev.fp, &v.levels) as i64,
        unassigned: stats.unassigned,
    })
}

fn random_move<R: Rng>(state: &State, rotation: bool, rng: &mut R) -> State {
    let m = state.rotated.len();
    let pick = rng.gen_range(0..if rotation { 4 } else { 3 });
    match pick {
        0 => State { expr: perturb(&state.expr, MoveKind::M1, rng), ..state.clone() },
        1 => State { expr: perturb(&state.expr, MoveKind::M2, rng), ..state.clone() },
        2 => State { expr: perturb(&state.expr, MoveKind::M3, rng), ..state.clone() },
        _ => {
            let mut s = state.clone();
            let i = rng.gen_range(0..m);
            s.rotated[i] = !s.rotated[i];
            s
        }
    }
}

fn to_f64(r: &Ratio<i128>) -> f64 {
    r.to_f64().unwrap_or(f64::MAX)
}

fn ratio_i64(num: i128, den: i128) -> Ratio<i64> {
    let r = Ratio::new(num, den);
    match (i64::try_from(*r.numer()), i64::try_from(*r.denom())) {
        (Ok(n), Ok(d)) => Ratio::new(n, d),
        _ => Ratio::from_integer(r.round().to_integer().clamp(1, i64::MAX as i128) as i64),
    }
}

/// Default weights from a sample of evaluated states.
fn sample_weights(samples: &[(i64, i64, Option<Metrics>)], m: usize) -> PhiWeights {
    let n = samples.len().max(1) as i128;
    let sum_a: i128 = samples.iter().map(|s| s.0 as i128).sum();
    let sum_w: i128 = samples.iter().map(|s| s.1 as i128).sum();
    let one = Ratio::from_integer(1);
    let wirelength = if sum_w > 0 { ratio_i64(sum_a, sum_w) } else { one };
    let islands = ratio_i64(sum_a, 10 * n * m as i128);
    let mut w = PhiWeights { area: one, wirelength, power: one, islands, unassigned: Ratio::from_integer(0) };
    let feasible: Vec<Metrics> = samples.iter().filter_map(|s| s.2).collect();
    let phi_sum: Ratio<i128> = if feasible.is_empty() {
        samples
            .iter()
            .map(|s| cost_phi(&Metrics { area: s.0, wirelength: s.1, ..Metrics::default() }, &w))
            .sum::<Ratio<i128>>()
            / Ratio::from_integer(n)
    } else {
        feasible.iter().map(|m| cost_phi(m, &w)).sum::<Ratio<i128>>() / Ratio::from_integer(feasible.len() as i128)
    };
    let big = (phi_sum * Ratio::from_integer(10)).ceil().to_integer().clamp(1, i64::MAX as i128) as i64;
    w.unassigned = Ratio::from_integer(big);
    w
}

pub fn anneal(netlist: &Netlist, spec: &ShifterSpec, config: &AnnealConfig, seed: u64) -> Result<AnnealResult, AnnealError> {
    anneal_observed(netlist, spec, config, seed, |_| {})
}

/// Like [`anneal`], calling `observe` after every candidate evaluation.
pub fn anneal_observed<F: FnMut(&Candidate<'_>)>(
    netlist: &Netlist,
    spec: &ShifterSpec,
    config: &AnnealConfig,
    seed: u64,
    mut observe: F,
) -> Result<AnnealResult, AnnealError> {
    let m = netlist.modules().len();
    if m == 0 {
        return Err(AnnealError::Empty);
    }
    let spec = if spec.k() > netlist.k() { spec.truncate(netlist.k())? } else { spec.clone() };
    let curves = netlist
        .curves()
        .iter()
        .map(|c| modify_dp_curve_with(c, &spec, config.overhead_at_top_level))
        .collect::<Result<Vec<_>, _>>()?;
    let mut ev = Evaluator {
        netlist,
        spec,
        curves,
        base_dims: netlist.dims(),
        config,
        cache: HashMap::new(),
        evaluations: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rotation = config.rotation && m > 1;
    let budget = config.max_evaluations.unwrap_or(usize::MAX);

    let initial = State { expr: SlicingExpr::initial(m), rotated: vec![false; m] };
    let moves_per_t = (config.beta * m).max(1);

    // sample a random walk for weights and the start temperature
    let mut sample_states = vec![initial.clone()];
    if m > 1 {
        let mut s = initial.clone();
        for _ in 1..moves_per_t.max(20) {
            s = random_move(&s, rotation, &mut rng);
            sample_states.push(s.clone());
        }
    }
    let mut samples = Vec::with_capacity(sample_states.len());
    let mut sample_metrics = Vec::with_capacity(sample_states.len());
    for s in &sample_states {
        let e = ev.geometry(s)?;
        observe(&Candidate { floorplan: &e.fp, wire_delays: &e.delays, voltage: e.voltage.as_ref().ok() });
        let stats = ev.shifters(&e).map(|a| ShifterStats::of(&a)).unwrap_or_default();
        let met = metrics(&e, stats);
        samples.push((e.fp.area(), (e.wl_x2 + stats.detour_x2) / 2, met));
        sample_metrics.push((e, stats));
    }
    let weights = config.weights.unwrap_or_else(|| sample_weights(&samples, m));

    let phi_of = |met: Option<Metrics>| met.map(|x| cost_phi(&x, &weights));
    let mut current = initial.clone();
    let (first, first_stats) = sample_metrics.swap_remove(0);
    let mut stats = first_stats;
    let mut current_phi = phi_of(metrics(&first, stats));
    let mut best: Option<(Ratio<i128>, State)> = current_phi.map(|p| (p, current.clone()));
    let mut last_err = first.voltage.as_ref().err().cloned();
    let mut checkpoints = Vec::new();
    let mut accepted_total = 0usize;

    if m > 1 {
        // the shifter penalty acts as a near-hard constraint; leaving it out
        // keeps one unassigned shifter from dominating the calibration
        let soft = PhiWeights { unassigned: Ratio::from_integer(0), ..weights };
        let sample_phi: Vec<Option<f64>> =
            samples.iter().map(|s| s.2.map(|m| to_f64(&cost_phi(&m, &soft)))).collect();
        let uphill: Vec<f64> = sample_phi
            .windows(2)
            .filter_map(|w| match (w[0], w[1]) {
                (Some(a), Some(b)) if b > a => Some(b - a),
                _ => None,
            })
            .collect();
        let avg_up = if uphill.is_empty() { 1.0 } else { uphill.iter().sum::<f64>() / uphill.len() as f64 };
        let t0 = -avg_up / config.initial_acceptance.clamp(1e-9, 1.0 - 1e-9).ln();
        let mut temp = t0;
        let mut frozen = 0usize;
        'outer: for _ in 0..config.max_temperatures {
            let mut accepted = 0usize;
            for _ in 0..moves_per_t {
                if ev.evaluations >= budget {
                    break 'outer;
                }
                let cand = random_move(&current, rotation, &mut rng);
                let e = ev.geometry(&cand)?;
                observe(&Candidate { floorplan: &e.fp, wire_delays: &e.delays, voltage: e.voltage.as_ref().ok() });
                if let Err(err) = &e.voltage {
                    last_err = Some(err.clone());
                }
                let cand_phi = phi_of(metrics(&e, stats));
                let accept = match (current_phi, cand_phi) {
                    (_, None) => false,
                    (None, Some(_)) => true,
                    (Some(c), Some(n)) => {
                        n <= c || rng.gen::<f64>() < (-(to_f64(&n) - to_f64(&c)) / temp).exp()
                    }
                };
                if !accept {
                    continue;
                }
                accepted += 1;
                accepted_total += 1;
                current = cand;
                current_phi = cand_phi;
                if accepted_total.is_multiple_of(config.ls_every.max(1)) {
                    if let Some(a) = ev.shifters(&e) {
                        stats = ShifterStats::of(&a);
                        current_phi = phi_of(metrics(&e, stats));
                    }
                }
                if let Some(p) = current_phi {
                    if best.as_ref().is_none_or(|b| p < b.0) {
                        best = Some((p, current.clone()));
                    }
                }
            }
            checkpoints.push(Checkpoint {
                temperature: temp,
                best_phi: best.as_ref().map(|b| b.0).unwrap_or_default(),
                current_phi,
                accepted: accepted_total,
                evaluated: ev.evaluations,
            });
            if (accepted as f64) < config.frozen_acceptance * moves_per_t as f64 {
                frozen += 1;
                if frozen >= config.frozen_temperatures {
                    break;
                }
            } else {
                frozen = 0;
            }
            temp *= config.alpha;
            if temp < t0 * config.min_temperature_ratio {
                break;
            }
        }
    }

    let Some((_, state)) = best else {
        let err = last_err.unwrap_or(VoltageError::TimingInfeasible { fastest: 0, t_cycle: netlist.t_cycle() });
        return Err(err.into());
    };
    let e = ev.geometry(&state)?;
    let shifters = ev.shifters(&e).expect("best state has a feasible voltage assignment");
    let met = metrics(&e, ShifterStats::of(&shifters)).expect("feasible");
    let phi = cost_phi(&met, &weights);
    let voltage = e.voltage.expect("feasible");
    Ok(AnnealResult {
        state,
        floorplan: e.fp,
        wire_delays: e.delays,
        voltage,
        shifters,
        metrics: met,
        phi,
        weights,
        curves: ev.curves,
        checkpoints,
        evaluations: ev.evaluations,
    })
}
