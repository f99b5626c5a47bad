use pal_core::level::Difficulty;
use pal_core::policy::{PolicyConfig, PolicyMode};
use pal_core::simulator::{compare_policies, SyntheticLearner};
use pal_core::Execution;

fn seeds() -> Vec<u64> {
    (0..30).collect()
}

#[test]
fn fixed_easy_spends_less_time_in_zone_than_hybrid_for_strong_learners() {
    let strong = SyntheticLearner::fixed(2.0);
    let report = compare_policies(
        &PolicyConfig::default(),
        &[PolicyMode::Hybrid, PolicyMode::Fixed(Difficulty::Easy)],
        &[strong],
        &seeds(),
        40,
        Execution::default(),
    )
    .unwrap();
    let zone = |m| report.row(m, &strong).unwrap().metric("time_in_zone").unwrap().mean;
    let (hybrid, fixed) = (zone(PolicyMode::Hybrid), zone(PolicyMode::Fixed(Difficulty::Easy)));
    println!("time in zone: hybrid {hybrid:.3}, fixed easy {fixed:.3}");
    assert!(fixed < hybrid);
}

#[test]
fn stat_only_and_hybrid_settle_on_the_same_level_at_extremes() {
    let population = [SyntheticLearner::fixed(-2.0), SyntheticLearner::fixed(2.0)];
    let report = compare_policies(
        &PolicyConfig::default(),
        &[PolicyMode::Hybrid, PolicyMode::StatOnly],
        &population,
        &seeds(),
        40,
        Execution::default(),
    )
    .unwrap();
    for (learner, want) in population.iter().zip([Difficulty::Easy, Difficulty::Hard]) {
        let hybrid = report.row(PolicyMode::Hybrid, learner).unwrap().modal_level;
        let stat = report.row(PolicyMode::StatOnly, learner).unwrap().modal_level;
        assert_eq!(hybrid, stat, "{}", learner.label());
        assert_eq!(hybrid, want, "{}", learner.label());
    }
}

#[test]
fn comparison_covers_every_pair() {
    let report = compare_policies(
        &PolicyConfig::default(),
        &[PolicyMode::Hybrid, PolicyMode::StatOnly, PolicyMode::RlOnly],
        &[SyntheticLearner::fixed(0.0), "noisy:1,0.2".parse().unwrap(), "improving:-1,0.1".parse().unwrap()],
        &[1, 2, 3],
        30,
        Execution::Sequential,
    )
    .unwrap();
    assert_eq!(report.rows.len(), 9);
    for row in &report.rows {
        let zone = row.metric("time_in_zone").unwrap().mean;
        assert!((0.0..=1.0).contains(&zone));
    }
}
