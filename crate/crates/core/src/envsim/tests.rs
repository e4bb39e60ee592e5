use super::*;

#[test]
fn two_goal_layout() {
    let env = make_env(EnvKind::TwoGoal, 0).unwrap();
    assert_eq!(env.scene().demo_modes, vec![[-1.0, 0.0], [1.0, 0.0]]);
    assert_eq!(env.scene().position("goal_left").unwrap(), [-1.0, 0.0]);
    assert_eq!(env.scene().success_radius, 0.15);
}

#[test]
fn ring_layout() {
    let env = make_env(EnvKind::RingGoals { modes: 4 }, 0).unwrap();
    let expected = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
    for (m, e) in env.scene().demo_modes.iter().zip(expected) {
        assert!(dist(m, &e) < 1e-12, "{m:?} vs {e:?}");
    }
}

#[test]
fn narrow_gap_goal_is_far_in_the_tail() {
    let env = make_env(EnvKind::NarrowGap, 0).unwrap();
    let goal = env.scene().position("gap_goal").unwrap();
    assert_eq!(goal, [0.0, 0.5]);
    let gmm = env.demo_gmm();
    let ratio = (gmm.logpdf(&goal).unwrap() - gmm.peak_logpdf()).exp();
    assert!(ratio < 1e-6, "{ratio}");
    for m in &env.scene().demo_modes {
        assert!(dist(m, &goal) > 3.0 * DEMO_SIGMA);
    }
}

#[test]
fn unknown_kind() {
    assert_eq!(EnvKind::parse("maze"), Err(EnvError::UnknownKind("maze".into())));
    assert_eq!(EnvKind::parse("narrow_gap"), Ok(EnvKind::NarrowGap));
}

#[test]
fn execute_at_goal() {
    let env = make_env(EnvKind::TwoGoal, 0).unwrap();
    let ctx = env.context("goal_left").unwrap();
    let out = execute(&ctx, &vec![-1.0, 0.0].into());
    assert!(out.success && out.aligned && !out.out_of_bounds);
    assert_eq!(out.distance, 0.0);
    assert_eq!(out.post.ee(), [-1.0, 0.0]);
}

#[test]
fn execute_at_other_mode() {
    let env = make_env(EnvKind::TwoGoal, 0).unwrap();
    let ctx = env.context("goal_left").unwrap();
    let out = execute(&ctx, &vec![1.0, 0.0].into());
    assert!(!out.success && !out.aligned);
}

#[test]
fn success_ball_is_closed() {
    let env = make_env(EnvKind::TwoGoal, 0).unwrap();
    let ctx = env.context("goal_right").unwrap();
    assert!(execute(&ctx, &vec![1.0 + 0.149, 0.0].into()).success);
    assert!(execute(&ctx, &vec![1.15, 0.0].into()).success);
    assert!(!execute(&ctx, &vec![1.0, 0.151].into()).success);
}

#[test]
fn out_of_bounds_is_flagged_not_clipped() {
    let env = make_env(EnvKind::TwoGoal, 0).unwrap();
    let ctx = env.context("goal_right").unwrap();
    let out = execute(&ctx, &vec![2.5, 0.0].into());
    assert!(out.out_of_bounds && !out.success && !out.aligned);
    assert_eq!(out.executed[0], 2.5);
    assert!(execute(&ctx, &vec![f64::NAN, 0.0].into()).out_of_bounds);
}

#[test]
fn execute_is_pure() {
    let env = make_env(EnvKind::NarrowGap, 0).unwrap();
    let ctx = env.context("gap_goal").unwrap();
    let a: ActionProposal = vec![0.1, 0.4].into();
    assert_eq!(execute(&ctx, &a), execute(&ctx, &a));
}

#[test]
fn keypoints_track_end_effector() {
    let env = make_env(EnvKind::TwoGoal, 0).unwrap();
    let ctx = env.context("goal_left").unwrap();
    let kp = keypoints(&ctx);
    assert_eq!(
        kp.keys().collect::<Vec<_>>(),
        vec!["ee", "goal_left", "goal_right"]
    );
    assert_eq!(kp["ee"], [0.0, -1.5]);
    let post = execute(&ctx, &vec![0.3, 0.2].into()).post;
    assert_eq!(keypoints(&post)["ee"], [0.3, 0.2]);
    assert_eq!(
        serde_json::to_string(&keypoints(&ctx)).unwrap(),
        serde_json::to_string(&keypoints(&ctx)).unwrap()
    );
}

#[test]
fn observation_layout() {
    let env = make_env(EnvKind::TwoGoal, 0).unwrap();
    let ctx = env.context("goal_right").unwrap();
    assert_eq!(ctx.observation(), &[-1.0, 0.0, 1.0, 0.0, 0.0, -1.5]);
}

#[test]
fn radius_must_stay_below_half_goal_gap() {
    let env = make_env(EnvKind::TwoGoal, 0).unwrap();
    let mut scene = (**env.scene()).clone();
    scene.success_radius = 1.0;
    assert!(Env::new(scene.clone(), 0).is_err());
    scene.success_radius = 0.0;
    assert!(Env::new(scene, 0).is_err());
}

#[test]
fn success_implies_aligned_everywhere() {
    for kind in [
        EnvKind::TwoGoal,
        EnvKind::RingGoals { modes: 4 },
        EnvKind::NarrowGap,
    ] {
        let env = make_env(kind, 0).unwrap();
        for target in env.targets().to_vec() {
            let ctx = env.context(&target).unwrap();
            let mut rng = RngStream::new(1, 1);
            for _ in 0..2000 {
                let p: Vec<f64> = rng.gauss(2).into_iter().map(|v| v * 1.2).collect();
                let out = execute(&ctx, &p.into());
                assert!(!out.success || out.aligned);
            }
        }
    }
}

#[test]
fn demo_dump_roundtrip() {
    let env = make_env(EnvKind::RingGoals { modes: 4 }, 9).unwrap();
    let demos = env.demos(50);
    let bytes = demos_to_tensor_file(&demos).to_bytes();
    let back = demos_from_tensor_file(&TensorFile::from_bytes(&bytes).unwrap()).unwrap();
    assert_eq!(back, demos);
}

#[test]
fn episode_targets_are_deterministic_and_cover_both() {
    let env = make_env(EnvKind::TwoGoal, 0).unwrap();
    let picks: Vec<String> = (0..40)
        .map(|s| env.episode_context(s).instruction().target.clone())
        .collect();
    let again: Vec<String> = (0..40)
        .map(|s| env.episode_context(s).instruction().target.clone())
        .collect();
    assert_eq!(picks, again);
    assert!(picks.iter().any(|t| t == "goal_left") && picks.iter().any(|t| t == "goal_right"));
}
