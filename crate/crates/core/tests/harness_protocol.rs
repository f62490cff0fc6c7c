use rads_core::harness::{evaluate, summarize, sweep, Annotator, HarnessConfig, Scenario, TransferContext};
use rads_core::selection::Policy;

fn quick() -> HarnessConfig {
    let mut cfg = HarnessConfig::default();
    cfg.sampler.agent.episodes = 20;
    cfg.bootstrap_resamples = 100;
    cfg
}

#[test]
fn selection_never_depends_on_pool_labels() {
    let domains = Scenario::default().generate().unwrap();
    let mut flipped = domains.clone();
    flipped.target.train.labels.iter_mut().for_each(|y| *y = 1 - *y);
    let cfg = quick();
    for policy in Policy::ALL {
        let a = TransferContext::prepare(&domains, &cfg, 5).unwrap();
        let b = TransferContext::prepare(&flipped, &cfg, 5).unwrap();
        assert_eq!(a.records, b.records);
        let mut ann_a = Annotator::new(domains.target.train.clone());
        let mut ann_b = Annotator::new(flipped.target.train.clone());
        let ra = a.run(&domains, policy, 6, &cfg, &mut ann_a).unwrap();
        let rb = b.run(&flipped, policy, 6, &cfg, &mut ann_b).unwrap();
        assert_eq!(ann_a.revealed(), ann_b.revealed(), "{policy}");
        assert_eq!(ann_a.revealed().len(), ra.budget_used);
        assert_eq!(ra.budget_used, rb.budget_used);
    }
}

#[test]
fn annotator_sees_only_selected_ids() {
    let domains = Scenario::default().generate().unwrap();
    let cfg = quick();
    let ctx = TransferContext::prepare(&domains, &cfg, 2).unwrap();
    let mut ann = Annotator::new(domains.target.train.clone());
    let report = ctx.run(&domains, Policy::GreedyUtility, 4, &cfg, &mut ann).unwrap();
    assert_eq!(report.budget_used, 4);
    assert_eq!(ann.revealed().len(), 4);
    let expected = rads_core::selection::select_with_policy(Policy::GreedyUtility, &ctx.records, &cfg.sampler, 4, 0)
        .unwrap()
        .selected;
    assert_eq!(ann.revealed(), expected.as_slice());
}

#[test]
fn frozen_model_evaluates_identically() {
    let domains = Scenario::default().generate().unwrap();
    let ctx = TransferContext::prepare(&domains, &quick(), 1).unwrap();
    let a = evaluate(&ctx.source_model, &domains.source.test).unwrap();
    let b = evaluate(&ctx.source_model, &domains.source.test).unwrap();
    assert_eq!(a, b);
}

#[test]
fn stratified_splits_preserve_rates() {
    let domains = Scenario::default().generate().unwrap();
    let s = Scenario::default();
    for (spec, splits) in [(&s.source, &domains.source), (&s.target, &domains.target)] {
        for set in [&splits.train, &splits.dev, &splits.test] {
            let want = spec.positive_rate * set.len() as f64;
            assert!((set.positives() as f64 - want).abs() <= 1.0);
        }
    }
}

#[test]
fn full_shot_beats_zero_shot_on_default_scenario() {
    let domains = Scenario::default().generate().unwrap();
    let n = domains.target.train.len();
    let reports = sweep(&domains, Policy::Random, &[0, n], &[0, 1, 2, 3, 4], &quick()).unwrap();
    let s = summarize(&reports);
    assert!(
        s[1].target.f1 >= s[0].target.f1,
        "full-shot {} vs zero-shot {}",
        s[1].target.f1,
        s[0].target.f1
    );
    assert!(reports.iter().all(|r| r.budget_used == r.budget));
}

#[test]
fn rads_sweep_never_exceeds_budget() {
    let domains = Scenario::default().generate().unwrap();
    let mut cfg = quick();
    cfg.sampler.agent.episodes = 30;
    let reports = sweep(&domains, Policy::Rads, &[1, 4, 9], &[0, 1], &cfg).unwrap();
    assert_eq!(reports.len(), 6);
    assert!(reports.iter().all(|r| r.budget_used <= r.budget));
}
