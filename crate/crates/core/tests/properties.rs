use std::sync::OnceLock;

use nalgebra::DVector;
use proptest::prelude::*;

use hyra::corpus::BenchmarkId;
use hyra::exec::Mode;
use hyra::io::{parse_condition, parse_config, parse_spaceex, ModelBundle, SourceFormat};
use hyra::ir::numeric::{resolve, resolve_condition};
use hyra::reach::{check_safety, reach, CoverIndex, ReachOptions, ReachResult, Verdict};
use hyra::setrep::IntervalBox;
use hyra::simulate::{sample_initial, simulate, IntegratorKind, SimOptions};

fn scalar(rate: f64, lo: f64, hi: f64, step: f64) -> ModelBundle {
    let xml = format!(
        r#"<?xml version="1.0" encoding="UTF-8"?>
<sspaceex xmlns="http://www-verimag.imag.fr/xml-namespaces/sspaceex" version="0.2" math="SpaceEx">
  <component id="lin">
    <param name="x" type="real" local="false" d1="1" d2="1" dynamics="any" />
    <location id="1" name="run">
      <flow>x' == {rate}*x</flow>
    </location>
  </component>
</sspaceex>
"#
    );
    let cfg = format!(
        "system = \"lin\"\ninitially = \"x >= {lo} & x <= {hi} & loc(lin) == run\"\ntime-horizon = 1\n\
         sampling-time = {step}\nmax-jumps = 0\noutput-variables = \"x, x\"\n"
    );
    let aut = parse_spaceex(&xml).unwrap();
    let c = parse_config(&cfg, &aut).unwrap();
    ModelBundle {
        automaton: aut,
        settings: c.settings,
        initial: c.initial,
        source_format: SourceFormat::Spaceex,
    }
}

fn width_at_one(r: &ReachResult) -> f64 {
    let lo = r
        .segments_at(1.0)
        .map(|s| s.hull.dims[0].lo)
        .fold(f64::INFINITY, f64::min);
    let hi = r
        .segments_at(1.0)
        .map(|s| s.hull.dims[0].hi)
        .fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

fn ball_reach() -> &'static (ModelBundle, ReachResult) {
    static CELL: OnceLock<(ModelBundle, ReachResult)> = OnceLock::new();
    CELL.get_or_init(|| {
        let b = BenchmarkId::BouncingBall2.build();
        let r = reach(&b, &ReachOptions::default()).unwrap();
        (b, r)
    })
}

fn safe_above(threshold: f64) -> bool {
    let (b, r) = ball_reach();
    let cond = parse_condition(&format!("v >= {threshold}"), &b.automaton.vars).unwrap();
    let num = resolve_condition(&cond, &b.automaton);
    check_safety(&r.segments, &num, r.bloat_radius) == Verdict::SafeProved
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    // shrinking the forbidden set never turns a proof into an alarm
    #[test]
    fn verdict_is_monotone_in_the_forbidden_set(a in 9.0f64..12.0, d in 0.0f64..2.0) {
        if safe_above(a) {
            prop_assert!(safe_above(a + d));
        }
    }

    #[test]
    fn finer_steps_do_not_widen_the_decay_enclosure(k in 1u32..40) {
        let h = 1.0 / (10.0 * k as f64);
        let coarse = reach(&scalar(-1.0, 1.0, 1.0, h), &ReachOptions::default()).unwrap();
        let fine = reach(&scalar(-1.0, 1.0, 1.0, h / 2.0), &ReachOptions::default()).unwrap();
        prop_assert!(width_at_one(&fine) <= width_at_one(&coarse) * (1.0 + 1e-9));
    }

    #[test]
    fn scalar_flowpipes_contain_simulations(
        rate in -2.0f64..1.0,
        lo in -1.0f64..1.0,
        w in 0.0f64..0.5,
        seed in any::<u64>(),
    ) {
        let b = scalar(rate, lo, lo + w, 0.05);
        let r = reach(&b, &ReachOptions::default()).unwrap();
        let idx = CoverIndex::new(&r);
        let starts = sample_initial(&IntervalBox::new(b.initial.intervals.clone()), 8, seed);
        for x0 in starts {
            let tr = simulate(&b, &x0, &SimOptions::new(0.005, IntegratorKind::SecondOrder)).unwrap();
            prop_assert!(idx.violations(&tr, 0, 1e-6).is_empty());
            // and the closed form
            let end = tr.samples.last().unwrap();
            let exact = x0[0] * (rate * end.time).exp();
            prop_assert!(r.segments_at(end.time).any(|s| s.hull.contains_point(&DVector::from_vec(vec![exact]), 1e-9)));
        }
    }

    #[test]
    fn tank_simulation_stays_in_invariants(seed in any::<u64>()) {
        let b = BenchmarkId::Tank3.build();
        let sys = resolve(&b.automaton).unwrap();
        let starts = sample_initial(&IntervalBox::new(b.initial.intervals.clone()), 1, seed);
        let tr = simulate(&b, &starts[0], &SimOptions::new(0.01, IntegratorKind::SecondOrder)).unwrap();
        for s in &tr.samples {
            prop_assert!(sys.locations[s.location].invariant.holds(&s.state, 1e-6));
        }
    }

    #[test]
    fn start_points_are_seeded_and_inside(seed in any::<u64>(), k in 1usize..40) {
        let b = IntervalBox::from_bounds(&[0.0, -1.0, 2.0], &[1.0, 1.0, 2.0]);
        let a = sample_initial(&b, k, seed);
        prop_assert_eq!(&a, &sample_initial(&b, k, seed));
        prop_assert!(a.iter().all(|x| b.contains_point(x, 0.0)));
    }
}

#[test]
fn reach_is_deterministic_across_modes() {
    for id in [BenchmarkId::Tank3, BenchmarkId::LinSwitch4, BenchmarkId::BouncingBall2] {
        let b = id.build();
        let seq = reach(
            &b,
            &ReachOptions {
                mode: Mode::Sequential,
                ..ReachOptions::default()
            },
        )
        .unwrap();
        let par = reach(
            &b,
            &ReachOptions {
                mode: Mode::Parallel,
                ..ReachOptions::default()
            },
        )
        .unwrap();
        let again = reach(&b, &ReachOptions::default()).unwrap();
        assert_eq!(seq.segments, par.segments, "{id}");
        assert_eq!(par.segments, again.segments, "{id}");
        assert_eq!(seq.verdict_line(), par.verdict_line(), "{id}");
    }
}

// the default tank coefficients keep every level in [0, 1] over the horizon
#[test]
fn tank_levels_stay_in_unit_range() {
    let b = BenchmarkId::Tank3.build();
    let x0 = DVector::from_vec(vec![0.5, 0.25, 0.2]);
    for kind in [IntegratorKind::Euler, IntegratorKind::SecondOrder] {
        let tr = simulate(&b, &x0, &SimOptions::new(1e-3, kind)).unwrap();
        assert!(tr.samples.last().unwrap().time >= 5.0 - 1e-9);
        for s in &tr.samples {
            assert!(s.state.iter().all(|v| (0.0..=1.0).contains(v)), "{:?}", s);
        }
    }
}
