mod common;

use std::sync::Arc;

use hystk_core::game::{solve, GameSpec, Grid};
use hystk_core::geometry::{exit_time, HalfSpace, Point, Region, Signal};
use hystk_core::hysteresis::{apply, preisach_family, PreisachThreshold};
use hystk_core::markov::{propagate, MarkovField, SemiFlow};
use hystk_core::relay::{evolve, RelaySpec, StateId};
use hystk_core::scenario::format_number;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn signal_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 2..8)
}

fn scalar_signal(vals: &[f64]) -> Signal {
    Signal::scalar((0..vals.len()).map(|i| i as f64).collect(), vals).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn formatted_numbers_round_trip(x in prop::num::f64::NORMAL) {
        let back: f64 = format_number(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-11 * x.abs());
    }

    #[test]
    fn classic_events_alternate_at_thresholds(
        vals in signal_values(),
        rho2 in -1.0f64..0.5,
        width in 0.1f64..1.0,
    ) {
        let rho1 = rho2 + width;
        let sig = scalar_signal(&vals);
        let init = if vals[0] >= rho1 { 1 } else { 0 };
        let traj = evolve(&RelaySpec::classic(rho1, rho2).unwrap(), &sig, StateId(init)).unwrap();
        let mut state = init;
        for e in &traj.events {
            prop_assert_eq!(e.from.0, state);
            prop_assert_eq!(e.to.0, 1 - state);
            let expect = if state == 0 { rho1 } else { rho2 };
            prop_assert!((e.point[0] - expect).abs() < 1e-9);
            state = 1 - state;
        }
    }

    #[test]
    fn preisach_output_is_bounded_and_matches_states(vals in signal_values(), n in 2usize..6) {
        let th: Vec<PreisachThreshold> = (0..n)
            .map(|i| {
                let c = -0.8 + 1.6 * i as f64 / n as f64;
                PreisachThreshold { rho1: c + 0.3, rho2: c - 0.3, weight: 1.0 + i as f64, initial: -1 }
            })
            .collect();
        let fam = preisach_family(&th).unwrap();
        let mut v = vec![-2.5];
        v.extend(vals);
        let sig = scalar_signal(&v);
        let out = apply(&fam, &sig).unwrap();
        let total = fam.total_weight();
        for (t, h) in out.times.iter().zip(&out.values) {
            prop_assert!(h[0].abs() <= total + 1e-12);
            let states = out.states_at(*t).unwrap();
            prop_assert!((fam.aggregate(&states)[0] - h[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn exit_point_lies_on_the_boundary(a in -1.0f64..1.0, b in 1.5f64..3.0, c in 0.0f64..1.0) {
        let region = Region::new(1, vec![HalfSpace::below(c)]).unwrap();
        let sig = scalar_signal(&[a.min(c - 0.05), b]);
        let (t, x) = exit_time(&sig, &region, 0.0).unwrap().expect("crosses c");
        prop_assert!((x[0] - c).abs() < 1e-9);
        prop_assert!(region.closure_contains(&x).unwrap());
        prop_assert!(!region.contains(&x).unwrap());
        prop_assert!((sig.at(t).unwrap()[0] - c).abs() < 1e-9);
    }

    #[test]
    fn constant_chain_matches_matrix_exponential(
        rates in prop::collection::vec(0.1f64..2.0, 3),
        w in prop::collection::vec(0.1f64..1.0, 6),
        t in 0.05f64..2.0,
    ) {
        let g = DMatrix::from_row_slice(3, 3, &[0.0, w[0], w[1], w[2], 0.0, w[3], w[4], w[5], 0.0]);
        let g = DMatrix::from_fn(3, 3, |i, j| g[(i, j)] / g.row(i).sum());
        let field = MarkovField::constant(DVector::from_vec(rates.clone()), g.clone());
        let flow = SemiFlow::closed_form(1, |_, _, x| x.clone());
        let pi = propagate(&field, &flow, 0.0, t, &Point::zeros(1)).unwrap();
        let q = DMatrix::from_fn(3, 3, |i, j| if i == j { -rates[i] } else { rates[i] * g[(i, j)] });
        prop_assert!((&pi - (q * t).exp()).amax() < 1e-8);
        for r in pi.row_iter() {
            prop_assert!((r.sum() - 1.0).abs() < 1e-8);
        }
    }
}

fn game(shift: f64, bump: f64) -> GameSpec {
    let fam = preisach_family(&[PreisachThreshold {
        rho1: 0.5,
        rho2: -0.5,
        weight: 1.0,
        initial: -1,
    }])
    .unwrap();
    GameSpec {
        dynamics: Arc::new(|_, x, c1, u2| Point::from_element(1, 0.5 * c1[0] - 0.3 * u2[1] + 0.2 * u2[0] - 0.1 * x[0])),
        running_cost: Arc::new(|_, x, c1, u2| x[0].sin() + c1[0] * u2[0] - 0.2 * u2[1] * u2[1]),
        terminal_cost: Arc::new(move |x| x[0] * x[0] * 0.5 + shift + bump * (x[0] > 0.0) as u8 as f64),
        c1_grid: vec![
            Point::from_element(1, -1.0),
            Point::from_element(1, 0.0),
            Point::from_element(1, 1.0),
        ],
        c2_grid: vec![Point::from_element(1, -1.0), Point::from_element(1, 1.0)],
        family: fam,
        reaction: Arc::new(|_, h| Point::from_row_slice(h)),
        horizon: 0.5,
        time_steps: 5,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn game_values_shift_with_terminal_cost(shift in -5.0f64..5.0) {
        let grid = Grid::uniform(&[(-3.0, 3.0)], 31).unwrap();
        let base = solve(&game(0.0, 0.0), &grid).unwrap();
        let moved = solve(&game(shift, 0.0), &grid).unwrap();
        for (a, b) in base.values.iter().flatten().zip(moved.values.iter().flatten()) {
            prop_assert!((b - a - shift).abs() < 1e-9);
        }
    }

    #[test]
    fn game_values_are_monotone_in_terminal_cost(bump in 0.0f64..3.0) {
        let grid = Grid::uniform(&[(-3.0, 3.0)], 31).unwrap();
        let low = solve(&game(0.0, 0.0), &grid).unwrap();
        let high = solve(&game(0.0, bump), &grid).unwrap();
        for (a, b) in low.values.iter().flatten().zip(high.values.iter().flatten()) {
            prop_assert!(*b >= *a - 1e-12);
        }
    }
}

#[test]
fn game_values_respect_cost_bounds() {
    let spec = game(0.0, 0.0);
    let grid = Grid::uniform(&[(-3.0, 3.0)], 31).unwrap();
    let table = solve(&spec, &grid).unwrap();
    // |sin x| ≤ 1, |c1 u21| ≤ 1, 0 ≤ 0.2 c2² ≤ 0.2, and 0 ≤ F_0 ≤ 4.5 on the grid
    let (f_lo, f_hi) = (-2.2, 2.0);
    for k in 0..=spec.time_steps {
        let rest = (spec.time_steps - k) as f64 * spec.dt();
        for v in &table.values[k] {
            assert!(*v >= f_lo * rest - 1e-12 && *v <= 4.5 + f_hi * rest + 1e-12, "{v}");
        }
    }
}
