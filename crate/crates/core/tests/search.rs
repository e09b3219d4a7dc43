use std::time::Duration;

use ale_core::oracle::{box_keeps_class, minimality_oracle};
use ale_core::search::{backward_prune, next_pair, SearchStatus};
use ale_core::synth::{generate_corpus, running_example, CorpusSpec};
use ale_core::{
    explain, verify, AleError, Anchor, Explanation, LatentInstance, ModelBundle, Paradigm, Registry,
    SearchConfig, SigmaParams,
};

fn spatial() -> [Paradigm; 2] {
    [Paradigm::Triangle, Paradigm::Hypersphere]
}

#[test]
fn running_example_all_paradigms() {
    let (bundle, inst) = running_example();
    for p in Paradigm::ALL {
        let cfg = SearchConfig::for_bundle(p, &bundle).with_trace();
        let out = explain(&bundle, &inst, &cfg).unwrap();
        assert_eq!(out.status, SearchStatus::Verified);
        assert_eq!(out.predicted, 1);
        assert!(out.verification.verified);
        assert!(out.bounds.contains(&[1.0, 3.0, 1.0, 8.0, 2.0], 1e-9));
        if p == Paradigm::TopK {
            assert_eq!(out.explanation.prototypes, vec![3, 1]);
            assert_eq!(out.trace.len(), 2);
            assert!(!out.trace[0].verified && out.trace[1].verified);
        }
    }
}

#[test]
fn single_class_needs_nothing() {
    let bundle = ModelBundle::new(
        vec![vec![0.0], vec![1.0]],
        vec![vec![1.0, -1.0]],
        None,
        SigmaParams::default(),
        0.0,
    )
    .unwrap();
    let inst = LatentInstance::new("x", vec![vec![0.3]]);
    for p in Paradigm::ALL {
        let out = explain(&bundle, &inst, &SearchConfig::for_bundle(p, &bundle)).unwrap();
        assert!(out.explanation.is_empty());
        assert!(out.verification.verified);
    }
}

#[test]
fn well_separated_explanations_are_tiny_and_minimal() {
    // One component: a single revealed distance pins every activation.
    // Several components: each needs one pair, or its universal interval
    // lets any prototype reach the maximal similarity.
    for l_count in [1, 4] {
        let spec = CorpusSpec::well_separated(4, 8, l_count, 40, 11);
        let (bundle, instances) = generate_corpus(&spec).unwrap();
        for p in spatial() {
            for strategy in ["nearest", "round-robin"] {
                let cfg = SearchConfig::for_bundle(p, &bundle).with_strategy(strategy);
                for inst in &instances {
                    let out = explain(&bundle, inst, &cfg).unwrap();
                    assert!(out.verification.verified);
                    let e = &out.explanation;
                    if l_count == 1 {
                        assert!(e.len() <= 2, "{p} {strategy}: {:?}", e.pairs);
                    } else {
                        let mut covered: Vec<usize> = e.pairs.iter().map(|&(l, _)| l).collect();
                        covered.sort_unstable();
                        assert_eq!(covered, (0..l_count).collect::<Vec<_>>(), "{p} {strategy}");
                    }
                    let anchor = Anchor::new(&bundle, inst).unwrap();
                    let report = minimality_oracle(e, &anchor, &cfg).unwrap();
                    assert!(report.passed(), "{:?}", report.first_violation);
                }
            }
        }
    }
}

#[test]
fn pruning_the_full_explanation_shrinks_it() {
    let spec = CorpusSpec::well_separated(3, 4, 3, 5, 2);
    let (bundle, instances) = generate_corpus(&spec).unwrap();
    for p in spatial() {
        let cfg = SearchConfig::for_bundle(p, &bundle);
        for inst in &instances {
            let anchor = Anchor::new(&bundle, inst).unwrap();
            let all: Vec<_> = (0..anchor.num_components())
                .flat_map(|l| (0..anchor.num_prototypes()).map(move |j| (l, j)))
                .collect();
            let full = Explanation::spatial(p, all, inst.id.clone());
            let pruned = backward_prune(&anchor, &full, &cfg).unwrap();
            assert!(pruned.len() < full.len());
            assert!(pruned.pairs.iter().all(|x| full.pairs.contains(x)));
            assert!(minimality_oracle(&pruned, &anchor, &cfg).unwrap().passed());
            // Already minimal: unchanged.
            assert_eq!(backward_prune(&anchor, &pruned, &cfg).unwrap(), pruned);
        }
    }
}

#[test]
fn pruning_rejects_unverified_input() {
    let (bundle, inst) = running_example();
    let anchor = Anchor::new(&bundle, &inst).unwrap();
    let cfg = SearchConfig::for_bundle(Paradigm::Triangle, &bundle);
    let empty = Explanation::spatial(Paradigm::Triangle, vec![], inst.id.clone());
    assert!(matches!(backward_prune(&anchor, &empty, &cfg), Err(AleError::NotVerified)));
}

#[test]
fn margin_beyond_the_anchor_gap_exhausts() {
    // The anchor's own logit gap is 68; no explanation can clear a margin of 100.
    let (bundle, inst) = running_example();
    for p in Paradigm::ALL {
        let cfg = SearchConfig::for_bundle(p, &bundle).with_margin(100.0);
        match explain(&bundle, &inst, &cfg) {
            Err(AleError::Exhausted { .. }) => {}
            other => panic!("{p}: {other:?}"),
        }
    }
    // A margin below the gap still verifies.
    let cfg = SearchConfig::for_bundle(Paradigm::TopK, &bundle).with_margin(10.0);
    assert!(explain(&bundle, &inst, &cfg).unwrap().verification.verified);
}

#[test]
fn cap_and_timeout_end_the_search() {
    let (bundle, instances) = generate_corpus(&CorpusSpec::table_analogue(3, 4)).unwrap();
    for p in Paradigm::ALL {
        let capped = SearchConfig::for_bundle(p, &bundle).with_max_pairs(1);
        let out = explain(&bundle, &instances[0], &capped).unwrap();
        assert_eq!(out.status, SearchStatus::CapReached);
        assert!(!out.verification.verified);
        assert_eq!(out.explanation.len(), 1);

        let rushed = SearchConfig::for_bundle(p, &bundle).with_time_limit(Duration::ZERO);
        let out = explain(&bundle, &instances[0], &rushed).unwrap();
        assert_eq!(out.status, SearchStatus::TimedOut);
    }
}

#[test]
fn searches_are_deterministic() {
    let (bundle, instances) = generate_corpus(&CorpusSpec::table_analogue(4, 8)).unwrap();
    for p in Paradigm::ALL {
        for init in ["empty", "nearest-per-component"] {
            let cfg = SearchConfig::for_bundle(p, &bundle).with_init(init).with_strategy("round-robin");
            for inst in &instances {
                let a = explain(&bundle, inst, &cfg).unwrap();
                let b = explain(&bundle, inst, &cfg).unwrap();
                assert_eq!(a.explanation, b.explanation);
                assert_eq!(a.bounds, b.bounds);
                assert!(a.verification.verified);
            }
        }
    }
}

#[test]
fn output_bounds_match_a_fresh_derivation() {
    let (bundle, instances) = generate_corpus(&CorpusSpec::table_analogue(3, 21)).unwrap();
    for p in Paradigm::ALL {
        let cfg = SearchConfig::for_bundle(p, &bundle);
        let explainer = Registry::builtin().explainer(p.name()).unwrap();
        for inst in &instances {
            let out = explain(&bundle, inst, &cfg).unwrap();
            let anchor = Anchor::new(&bundle, inst).unwrap();
            let fresh = explainer.bounds(&anchor, &out.explanation, cfg.slack).unwrap();
            assert!(fresh.is_within(&out.bounds, 1e-12) && out.bounds.is_within(&fresh, 1e-12));
            assert!(verify(&fresh, &bundle, out.predicted).unwrap().verified);
            assert!(box_keeps_class(&fresh, &bundle, out.predicted, 0.0));
        }
    }
}

#[test]
fn unknown_strategies_are_reported() {
    let (bundle, inst) = running_example();
    let cfg = SearchConfig::for_bundle(Paradigm::Triangle, &bundle).with_strategy("zigzag");
    assert!(matches!(explain(&bundle, &inst, &cfg), Err(AleError::UnknownStrategy { .. })));
    let mut cursor = 0;
    assert!(next_pair("zigzag", &[vec![1.0]], &[vec![false]], &mut cursor).is_err());
    assert_eq!(next_pair("nearest", &[vec![5.0, 2.0, 9.0]], &[vec![false; 3]], &mut cursor).unwrap(), Some((0, 1)));
}

#[test]
fn invalid_instances_are_rejected() {
    let (bundle, _) = running_example();
    let bad = LatentInstance::new("bad", vec![vec![0.0; 3]]);
    let cfg = SearchConfig::for_bundle(Paradigm::TopK, &bundle);
    assert!(matches!(explain(&bundle, &bad, &cfg), Err(AleError::DimensionMismatch(_))));
}
