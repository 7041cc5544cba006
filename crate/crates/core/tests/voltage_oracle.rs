use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voltfloor_core::model::{CurvePoint, DpCurve, TwoPinNet};
use voltfloor_core::voltage::{
    assign_voltages, brute_force_assign, longest_path_delay, round_relaxation, EdgeKind, TimingGraph,
};

/// Random valid curve; slopes are rationals in general (random delay steps).
fn random_curve(rng: &mut ChaCha8Rng, k: usize) -> DpCurve {
    loop {
        let mut pts = vec![CurvePoint::new(1, rng.gen_range(0..12), 0)];
        let mut power = rng.gen_range(60..400);
        pts[0].power = power;
        for q in 2..=k {
            let d = pts.last().unwrap().delay + rng.gen_range(1..7);
            power -= rng.gen_range(1..=power.max(2) / 2);
            pts.push(CurvePoint::new(q as u32, d, power.max(0)));
        }
        if let Ok(c) = DpCurve::new(pts) {
            return c;
        }
    }
}

fn random_instance(seed: u64) -> (TimingGraph, Vec<DpCurve>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(1..=7);
    let k = rng.gen_range(2..=4);
    let curves: Vec<DpCurve> = (0..m).map(|_| random_curve(&mut rng, k)).collect();
    let mut nets = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            if rng.gen_bool(0.35) {
                nets.push(TwoPinNet { source: a, sink: b });
            }
        }
    }
    let wires: Vec<i64> = nets.iter().map(|_| rng.gen_range(0..4)).collect();
    let probe = TimingGraph::new(m, &nets, &wires, 0).unwrap();
    let fast = longest_path_delay(&probe, &curves, &vec![1; m]);
    let slow = longest_path_delay(&probe, &curves, &vec![k as u32; m]);
    let t = fast + rng.gen_range(0..=(slow - fast));
    (TimingGraph::new(m, &nets, &wires, t).unwrap(), curves)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn flow_search_matches_enumeration(seed in any::<u64>()) {
        let (tg, curves) = random_instance(seed);
        let oracle = brute_force_assign(&tg, &curves, 8).unwrap();
        let got = assign_voltages(&tg, &curves).unwrap();
        prop_assert!(got.proven_optimal);
        prop_assert_eq!(got.total_power, oracle.total_power);
        prop_assert!(longest_path_delay(&tg, &curves, &got.levels) <= tg.t_cycle());
        // potentials consistent with chosen delays
        for e in tg.edges() {
            match e.kind {
                EdgeKind::Module(i) => prop_assert!(got.arrival[e.to] - got.arrival[e.from] >= curves[i].delay(got.levels[i])),
                EdgeKind::Net { delay, .. } => prop_assert!(got.arrival[e.to] - got.arrival[e.from] >= delay),
                _ => {}
            }
        }
    }

    #[test]
    fn single_relaxation_is_feasible_and_bounded_by_oracle(seed in any::<u64>()) {
        let (tg, curves) = random_instance(seed);
        let oracle = brute_force_assign(&tg, &curves, 8).unwrap();
        let r = round_relaxation(&tg, &curves).unwrap();
        prop_assert!(longest_path_delay(&tg, &curves, &r.levels) <= tg.t_cycle());
        prop_assert!(r.total_power >= oracle.total_power);
        if r.proven_optimal {
            prop_assert_eq!(r.total_power, oracle.total_power);
        }
    }

    #[test]
    fn relaxing_cycle_time_never_costs_power(seed in any::<u64>(), extra in 0i64..20) {
        let (tg, curves) = random_instance(seed);
        let a = assign_voltages(&tg, &curves).unwrap();
        let looser = retime(&tg, &curves, tg.t_cycle() + extra);
        let b = assign_voltages(&looser, &curves).unwrap();
        prop_assert!(b.total_power <= a.total_power);
    }
}

/// Same graph, different cycle time. Rebuilt from the edge list.
fn retime(tg: &TimingGraph, _curves: &[DpCurve], t: i64) -> TimingGraph {
    let mut nets = Vec::new();
    let mut wires = Vec::new();
    for e in tg.edges() {
        if let EdgeKind::Net { delay, .. } = e.kind {
            nets.push(TwoPinNet { source: (e.from - 3) / 2, sink: (e.to - 2) / 2 });
            wires.push(delay);
        }
    }
    TimingGraph::new(tg.modules(), &nets, &wires, t).unwrap()
}
