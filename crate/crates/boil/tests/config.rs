use std::path::PathBuf;

use boil::config::{ObjectiveConfig, RunConfig};
use boil_core::gp::KernelKind;
use boil_core::objective::fixture;
use boil_core::optimizer::{Method, PreferenceChoice};
use proptest::prelude::*;

fn preference() -> impl Strategy<Value = PreferenceChoice> {
    prop_oneof![
        Just(PreferenceChoice::Sigmoid),
        Just(PreferenceChoice::Log),
        proptest::option::of(1usize..50).prop_map(|window| PreferenceChoice::Average { window }),
    ]
}

fn objective() -> impl Strategy<Value = ObjectiveConfig> {
    prop_oneof![
        Just(ObjectiveConfig::Synthetic { spec: None }),
        Just(ObjectiveConfig::Synthetic { spec: Some(fixture("synthetic-1d").unwrap().spec) }),
        (proptest::collection::vec("[a-z./-]{1,8}", 1..4), proptest::option::of("[a-z/]{1,8}"), 0.001f64..1e4)
            .prop_map(|(command, dir, timeout_s)| ObjectiveConfig::External { command, working_dir: dir.map(PathBuf::from), timeout_s }),
    ]
}

prop_compose! {
    fn run_config()(
        method in proptest::sample::select(Method::ALL.to_vec()),
        methods in proptest::collection::vec(proptest::sample::select(Method::ALL.to_vec()), 0..4),
        inline in any::<bool>(),
        objective in objective(),
        n in 0usize..200,
        m in 0usize..40,
        delta in 0.0f64..100.0,
        seeds in proptest::collection::vec(any::<u64>(), 1..6),
        out in "[a-z]{1,10}",
        preference in preference(),
        ft in any::<bool>(),
        initial_design in proptest::option::of(1usize..20),
        cost_budget in proptest::option::of(0.001f64..1e6),
        max_failures in 0usize..10,
    ) -> RunConfig {
        let (fixture_name, space) = if inline { (None, Some(fixture("cartpole").unwrap().space)) } else { (Some("synthetic-3d".to_string()), None) };
        RunConfig {
            method, methods, fixture: fixture_name, space, objective, n, m, delta, seeds,
            output_dir: PathBuf::from(out), preference,
            kernel: if ft { KernelKind::FreezeThawTime } else { KernelKind::SeProduct },
            initial_design, cost_budget, max_failures,
        }
    }
}

proptest! {
    #[test]
    fn parse_serialize_parse_is_identity(c in run_config()) {
        let once = RunConfig::from_json(&c.to_json()).unwrap();
        prop_assert_eq!(&once, &c);
        let twice = RunConfig::from_json(&once.to_json()).unwrap();
        prop_assert_eq!(twice, once);
    }
}

#[test]
fn documented_example_config_parses() {
    let text = r#"{
        "method": "boil",
        "fixture": "cartpole",
        "objective": {"kind": "external", "command": ["python3", "train.py"], "working_dir": "trainers", "timeout_s": 600},
        "n": 40,
        "seeds": [0, 1, 2],
        "output_dir": "runs/cartpole",
        "preference": {"kind": "average", "window": 20},
        "kernel": "freeze-thaw-t"
    }"#;
    let c = RunConfig::from_json(text).unwrap();
    assert_eq!(c.m, 15);
    assert_eq!(c.delta, 20.0);
    assert_eq!(c.kernel, KernelKind::FreezeThawTime);
    let r = c.resolve().unwrap();
    assert!(r.spec.is_none());
    assert_eq!(r.space.dim(), 2);
}
