use proptest::prelude::*;
use shellnls::config::{parse_config, RunConfig, Scenario};
use shellnls::output::JsonlWriter;
use shellnls_core::observables::DiagnosticsRecord;

fn scenario() -> impl Strategy<Value = Scenario> {
    prop_oneof![
        Just(Scenario::Free),
        Just(Scenario::BoundState),
        Just(Scenario::Defocusing),
        Just(Scenario::Focusing),
    ]
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        -1e3..1e3f64
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn printed_config_parses_back(
        sc in scenario(),
        l in 0usize..=16,
        dt in 1e-4..1e-2f64,
        steps in 1usize..2000,
        beta in -2.0..2.0f64,
        sigma in 0.5..2.0f64,
        lambda0 in 0.1..10.0f64,
    ) {
        let mut cfg = RunConfig::preset(sc);
        cfg.l = l;
        cfg.dt = dt;
        cfg.t = dt * steps as f64;
        if !cfg.linear {
            cfg.beta = beta;
            cfg.sigma = sigma;
        }
        cfg.lambda0 = lambda0;
        let text = cfg.to_ini();
        let back = parse_config(&text).unwrap();
        prop_assert_eq!((back.l, back.dt, back.t, back.beta, back.sigma, back.lambda0), (l, cfg.dt, cfg.t, cfg.beta, cfg.sigma, lambda0));
        prop_assert_eq!(back.to_ini(), text);
    }

    #[test]
    fn jsonl_floats_round_trip(vals in prop::array::uniform10(finite())) {
        let r = DiagnosticsRecord {
            t: vals[0],
            mass: vals[1],
            kinetic: vals[2],
            potential: vals[3],
            energy: vals[4],
            q_h32: vals[5],
            q_sup: vals[6],
            jump_residual: vals[7],
            trace_residual: vals[8],
            picard_ratio: vals[9],
        };
        let mut w = JsonlWriter::new(Vec::new());
        w.record(&r).unwrap();
        let line = String::from_utf8(w.finish().unwrap()).unwrap();
        let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
        let keys = ["t", "mass", "kinetic", "potential", "energy", "q_h32", "q_sup", "jump_residual", "trace_residual", "picard_ratio"];
        for (k, want) in keys.iter().zip(vals) {
            prop_assert_eq!(v[*k].as_f64().unwrap().to_bits(), want.to_bits());
        }
    }
}
