//! Cross-method behavior of the multi-level emulators.

use std::sync::Arc;

use approx::assert_relative_eq;
use nalgebra::DVector;

use bayhem::bench::TestFunction;
use bayhem::multilevel::{
    condition_level, conditional_log_marginal_likelihood, fit_bayhem, fit_hk, fit_ko,
    ko_with_hyperparams, BayHEmModel, GaussianSurface, Objective, PriorSurface, RhoMode, ThetaMode,
};
use bayhem::{
    fit_gp, log_marginal_likelihood, DesignMatrix, Error, FittedGP, Hyperparams, KernelSpec,
    LevelData, MeanSpec, MultiLevelData, OptimizerConfig,
};

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn level_1d(xs: &[f64], f: impl Fn(f64) -> f64, index: usize) -> LevelData {
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    LevelData::new(DesignMatrix::from_column(xs), ys, index).unwrap()
}

fn default_opt() -> OptimizerConfig {
    OptimizerConfig::default()
}

#[test]
fn bayhem_single_level_equals_plain_gp() {
    let data = level_1d(&linspace(0.0, 1.0, 9), |x| (4.0 * x).sin(), 1);
    let multi = MultiLevelData::new(vec![data.clone()]).unwrap();
    let gp = fit_gp(
        &data,
        MeanSpec::Constant,
        KernelSpec::default(),
        &default_opt(),
    )
    .unwrap();
    let model = fit_bayhem(
        &multi,
        ThetaMode::SharedTheta,
        Objective::Joint,
        MeanSpec::Constant,
        KernelSpec::default(),
        &default_opt(),
    )
    .unwrap();
    let hp = model.hyperparam_chain()[0].clone();
    assert_relative_eq!(hp.sigma2, gp.hyperparams().sigma2, epsilon = 1e-12);
    assert_relative_eq!(
        hp.lengthscales[0],
        gp.hyperparams().lengthscales[0],
        epsilon = 1e-12
    );
    let grid = DesignMatrix::from_column(&linspace(-0.2, 1.2, 40));
    let a = model.predict(&grid, false).unwrap();
    let b = gp.predict(&grid, false).unwrap();
    for i in 0..grid.nrows() {
        assert_relative_eq!(a.mean[i], b.mean[i], epsilon = 1e-12);
        assert_relative_eq!(a.variance[i], b.variance[i], epsilon = 1e-12);
    }
}

#[test]
fn shared_theta_equals_stacked_single_gp() {
    // Fixed θ₀: the hierarchical posterior equals one GP conditioned on
    // the stacked data of both levels.
    let l1 = level_1d(&[0.1, 0.35, 0.6, 0.92], |x| x.sin() + 1.0, 1);
    let l2 = level_1d(&[0.22, 0.78], |x| x.sin() + 1.3, 2);
    let multi = MultiLevelData::new(vec![l1.clone(), l2.clone()]).unwrap();
    let hp = Hyperparams::new(vec![1.0], 0.9, vec![0.4]).unwrap();
    let ks = KernelSpec::default();
    let model = BayHEmModel::with_hyperparams(
        multi,
        ThetaMode::SharedTheta,
        Objective::Joint,
        vec![hp.clone()],
        MeanSpec::Constant,
        ks,
    )
    .unwrap();

    let mut xs: Vec<f64> = l1.x.rows_iter().map(|r| r[0]).collect();
    xs.extend(l2.x.rows_iter().map(|r| r[0]));
    let mut ys: Vec<f64> = l1.y.iter().copied().collect();
    ys.extend(l2.y.iter());
    let stacked = LevelData::new(DesignMatrix::from_column(&xs), ys, 1).unwrap();
    let gp = FittedGP::with_hyperparams(&stacked, hp, MeanSpec::Constant, ks).unwrap();

    let grid = DesignMatrix::from_column(&linspace(0.0, 1.0, 60));
    let a = model.predict(&grid, false).unwrap();
    let b = gp.predict(&grid, false).unwrap();
    for i in 0..grid.nrows() {
        assert_relative_eq!(a.mean[i], b.mean[i], epsilon = 1e-8);
        assert_relative_eq!(a.variance[i], b.variance[i], epsilon = 1e-8);
    }
}

#[test]
fn sequential_factorization_equals_stacked_marginal() {
    let l1 = level_1d(&[0.05, 0.4, 0.75, 0.99], |x| x * x, 1);
    let l2 = level_1d(&[0.2, 0.6], |x| x * x + 0.2, 2);
    let hp = Hyperparams::new(vec![0.3], 1.2, vec![0.5]).unwrap();
    let ks = KernelSpec::default();

    let ll1 = log_marginal_likelihood(&l1, &hp, MeanSpec::Constant, &ks).unwrap();
    let ll2_given_1 =
        conditional_log_marginal_likelihood(&l1.x, &l1.y, &l2, &hp, MeanSpec::Constant, &ks)
            .unwrap();

    let mut xs: Vec<f64> = l1.x.rows_iter().map(|r| r[0]).collect();
    xs.extend(l2.x.rows_iter().map(|r| r[0]));
    let mut ys: Vec<f64> = l1.y.iter().copied().collect();
    ys.extend(l2.y.iter());
    let stacked = LevelData::new(DesignMatrix::from_column(&xs), ys, 1).unwrap();
    let joint = log_marginal_likelihood(&stacked, &hp, MeanSpec::Constant, &ks).unwrap();

    assert_relative_eq!(ll1 + ll2_given_1, joint, epsilon = 1e-8);
}

#[test]
fn empty_top_level_reduces_to_level_one_gp() {
    let l1 = level_1d(&linspace(0.0, 1.0, 8), |x| (2.0 * x).cos(), 1);
    let empty = LevelData {
        x: DesignMatrix::empty(1),
        y: DVector::zeros(0),
        level_index: 2,
    };
    let multi = MultiLevelData::new(vec![l1.clone(), empty]).unwrap();
    let model = fit_bayhem(
        &multi,
        ThetaMode::SharedTheta,
        Objective::Joint,
        MeanSpec::Constant,
        KernelSpec::default(),
        &default_opt(),
    )
    .unwrap();
    let gp = fit_gp(
        &l1,
        MeanSpec::Constant,
        KernelSpec::default(),
        &default_opt(),
    )
    .unwrap();
    let grid = DesignMatrix::from_column(&linspace(0.0, 1.0, 30));
    let a = model.predict(&grid, false).unwrap();
    let b = gp.predict(&grid, false).unwrap();
    for i in 0..grid.nrows() {
        assert_relative_eq!(a.mean[i], b.mean[i], epsilon = 1e-10);
    }
}

#[test]
fn bayhem_interpolates_top_level_and_refuses_intermediate() {
    let l1 = level_1d(&linspace(0.0, 10.0, 15), |x| x.sin() * x, 1);
    let l2 = level_1d(&[2.1, 5.3, 8.2], |x| x.sin() * x + 3.0, 2);
    let multi = MultiLevelData::new(vec![l1, l2.clone()]).unwrap();
    let model = fit_bayhem(
        &multi,
        ThetaMode::SharedTheta,
        Objective::Joint,
        MeanSpec::Constant,
        KernelSpec::default(),
        &default_opt(),
    )
    .unwrap();
    let pred = model.predict(&l2.x, false).unwrap();
    let range = 13.0;
    for (m, y) in pred.mean.iter().zip(l2.y.iter()) {
        assert!(
            (m - y).abs() <= 1e-6 * range,
            "interpolation off: {m} vs {y}"
        );
    }
    // Intermediate-level prediction is refused by contract.
    match model.predict_level(1, &l2.x) {
        Err(Error::Unsupported(msg)) => assert!(msg.contains("top level")),
        other => panic!("expected Unsupported, got {other:?}"),
    }
    // The top level answers.
    assert!(model.predict_level(2, &l2.x).is_ok());
    // Variance never exceeds the prior variance.
    let grid = DesignMatrix::from_column(&linspace(0.0, 10.0, 120));
    let p = model.predict(&grid, false).unwrap();
    let sigma2 = model.hyperparam_chain()[0].sigma2;
    for v in p.variance.iter() {
        assert!(*v <= sigma2 + 1e-10);
    }
}

#[test]
fn ko_constant_shift_recovers_level_two() {
    // Top level is the lower level plus four; the discrepancy GP sees
    // constant data and the chain reproduces the top function closely.
    let xs1 = linspace(0.0, 10.0, 25);
    let l1 = level_1d(&xs1, |x| TestFunction::Ex3L1.eval(&[x]).unwrap(), 1);
    let nested: Vec<f64> = xs1.iter().copied().step_by(3).collect();
    let l2 = level_1d(&nested, |x| TestFunction::Ex3L2Shift.eval(&[x]).unwrap(), 2);
    let multi = MultiLevelData::new(vec![l1, l2]).unwrap();
    let model = fit_ko(
        &multi,
        RhoMode::Fixed(1.0),
        MeanSpec::Constant,
        KernelSpec::default(),
        &default_opt(),
    )
    .unwrap();
    assert!(model.nested_flags()[0]);
    // Discrepancy data is exactly the constant 4.
    let disc = model.discrepancy_gps()[0].outputs();
    for d in disc.iter() {
        assert_relative_eq!(*d, 4.0, epsilon = 1e-12);
    }
    let grid = DesignMatrix::from_column(&linspace(0.0, 10.0, 200));
    let truth = TestFunction::Ex3L2Shift.eval_design(&grid).unwrap();
    let pred = model.predict(&grid).unwrap();
    for i in 0..grid.nrows() {
        assert!(
            (pred.mean[i] - truth[i]).abs() <= 1e-3,
            "at {:?}: {} vs {}",
            grid.row(i),
            pred.mean[i],
            truth[i]
        );
    }
}

#[test]
fn ko_rho_zero_decouples_levels() {
    let l1 = level_1d(&linspace(0.0, 1.0, 10), |x| 100.0 * (7.0 * x).sin(), 1);
    let l2 = level_1d(&[0.15, 0.4, 0.65, 0.9], |x| x + 0.5, 2);
    let multi = MultiLevelData::new(vec![l1, l2.clone()]).unwrap();
    let model = fit_ko(
        &multi,
        RhoMode::Fixed(0.0),
        MeanSpec::Constant,
        KernelSpec::default(),
        &default_opt(),
    )
    .unwrap();
    // With ρ = 0 the top prediction is the discrepancy GP on y₂ alone.
    let solo = fit_gp(
        &l2,
        MeanSpec::Constant,
        KernelSpec::default(),
        &default_opt(),
    )
    .unwrap();
    let grid = DesignMatrix::from_column(&linspace(0.0, 1.0, 50));
    let a = model.predict(&grid).unwrap();
    let b = solo.predict(&grid, false).unwrap();
    for i in 0..grid.nrows() {
        assert_relative_eq!(a.mean[i], b.mean[i], epsilon = 1e-9);
    }
}

#[test]
fn ko_nested_discrepancy_is_exact_difference() {
    let xs1 = linspace(0.0, 1.0, 9);
    let l1 = level_1d(&xs1, |x| (3.0 * x).sin(), 1);
    let nested: Vec<f64> = xs1.iter().copied().step_by(2).collect();
    let rho = 0.7;
    let l2 = level_1d(&nested, |x| rho * (3.0 * x).sin() + x, 2);
    let multi = MultiLevelData::new(vec![l1.clone(), l2.clone()]).unwrap();
    let model = fit_ko(
        &multi,
        RhoMode::Fixed(rho),
        MeanSpec::Constant,
        KernelSpec::default(),
        &default_opt(),
    )
    .unwrap();
    let disc = model.discrepancy_gps()[0].outputs();
    for (i, &x) in nested.iter().enumerate() {
        let expect = l2.y[i] - rho * (3.0 * x).sin();
        assert_relative_eq!(disc[i], expect, epsilon = 1e-14);
        assert_relative_eq!(disc[i], x, epsilon = 1e-12);
    }
}

#[test]
fn ko_prediction_matches_hand_rolled_composition() {
    // Fixed hyperparameters on both chains; compose two plain GP
    // predictions by hand and compare.
    let l1 = level_1d(&[0.1, 0.3, 0.55, 0.8], |x| x.exp(), 1);
    let l2 = level_1d(&[0.2, 0.7], |x| 0.9 * x.exp() + 0.3, 2);
    let multi = MultiLevelData::new(vec![l1.clone(), l2.clone()]).unwrap();
    let rho = 0.9;
    let base_hp = Hyperparams::new(vec![1.5], 1.1, vec![0.35]).unwrap();
    let disc_hp = Hyperparams::new(vec![0.3], 0.4, vec![0.6]).unwrap();
    let ks = KernelSpec::default();
    let model = ko_with_hyperparams(
        &multi,
        base_hp.clone(),
        vec![disc_hp.clone()],
        vec![rho],
        RhoMode::Fixed(rho),
        MeanSpec::Constant,
        ks,
    )
    .unwrap();

    let base = FittedGP::with_hyperparams(&l1, base_hp, MeanSpec::Constant, ks).unwrap();
    let lower_at_l2 = base.predict(&l2.x, false).unwrap().mean;
    let disc_data = LevelData {
        x: l2.x.clone(),
        y: &l2.y - lower_at_l2 * rho,
        level_index: 2,
    };
    let disc = FittedGP::with_hyperparams(&disc_data, disc_hp, MeanSpec::Constant, ks).unwrap();

    let grid = DesignMatrix::from_column(&linspace(0.0, 1.0, 40));
    let got = model.predict(&grid).unwrap();
    let pb = base.predict(&grid, false).unwrap();
    let pd = disc.predict(&grid, false).unwrap();
    for i in 0..grid.nrows() {
        assert_relative_eq!(got.mean[i], rho * pb.mean[i] + pd.mean[i], epsilon = 1e-12);
        assert_relative_eq!(
            got.variance[i],
            rho * rho * pb.variance[i] + pd.variance[i],
            epsilon = 1e-12
        );
    }
}

#[test]
fn ko_interpolates_nested_top_point() {
    let xs1 = linspace(0.0, 1.0, 11);
    let l1 = level_1d(&xs1, |x| (5.0 * x).sin(), 1);
    let nested: Vec<f64> = vec![xs1[2], xs1[5], xs1[8]];
    let l2 = level_1d(&nested, |x| (5.0 * x).sin() + 0.8 * x, 2);
    let multi = MultiLevelData::new(vec![l1, l2.clone()]).unwrap();
    let model = fit_ko(
        &multi,
        RhoMode::Fixed(1.0),
        MeanSpec::Constant,
        KernelSpec::default(),
        &default_opt(),
    )
    .unwrap();
    let pred = model.predict(&l2.x).unwrap();
    for (m, y) in pred.mean.iter().zip(l2.y.iter()) {
        assert!((m - y).abs() <= 1e-6 * 2.0);
    }
}

#[test]
fn ko_estimated_rho_recovers_scaling() {
    let xs1 = linspace(0.0, 1.0, 12);
    let l1 = level_1d(&xs1, |x| (3.0 * x).sin() + 2.0, 1);
    let nested: Vec<f64> = xs1.iter().copied().step_by(2).collect();
    let l2 = level_1d(&nested, |x| 1.6 * ((3.0 * x).sin() + 2.0) + 0.05, 2);
    let multi = MultiLevelData::new(vec![l1, l2]).unwrap();
    let model = fit_ko(
        &multi,
        RhoMode::Estimated,
        MeanSpec::Constant,
        KernelSpec::default(),
        &default_opt(),
    )
    .unwrap();
    assert_relative_eq!(model.rho()[0], 1.6, epsilon = 0.05);
}

#[test]
fn hk_recovers_proportional_levels() {
    let c = 2.4;
    let l1 = level_1d(&linspace(0.0, 1.0, 14), |x| (4.0 * x).sin() + 2.0, 1);
    let l2 = level_1d(
        &linspace(0.02, 0.98, 12),
        |x| c * ((4.0 * x).sin() + 2.0),
        2,
    );
    let multi = MultiLevelData::new(vec![l1, l2]).unwrap();
    let model = fit_hk(
        &multi,
        MeanSpec::Constant,
        KernelSpec::default(),
        &default_opt(),
    )
    .unwrap();
    assert_relative_eq!(model.levels()[0].coefficient(), c, epsilon = 1e-2);
}

#[test]
fn hk_single_level_equals_plain_gp() {
    let data = level_1d(&linspace(0.0, 1.0, 8), |x| x * x - x, 1);
    let multi = MultiLevelData::new(vec![data.clone()]).unwrap();
    let model = fit_hk(
        &multi,
        MeanSpec::Constant,
        KernelSpec::default(),
        &default_opt(),
    )
    .unwrap();
    let gp = fit_gp(
        &data,
        MeanSpec::Constant,
        KernelSpec::default(),
        &default_opt(),
    )
    .unwrap();
    let grid = DesignMatrix::from_column(&linspace(0.0, 1.0, 25));
    let a = model.predict(&grid).unwrap();
    let b = gp.predict(&grid, false).unwrap();
    for i in 0..grid.nrows() {
        assert_relative_eq!(a.mean[i], b.mean[i], epsilon = 1e-12);
        assert_relative_eq!(a.variance[i], b.variance[i], epsilon = 1e-12);
    }
}

#[test]
fn hk_interpolates_top_level() {
    let l1 = level_1d(&linspace(0.0, 10.0, 18), |x| x.sin() * x, 1);
    let l2 = level_1d(&[1.0, 4.0, 7.0, 9.5], |x| 1.2 * x.sin() * x + 1.0, 2);
    let multi = MultiLevelData::new(vec![l1, l2.clone()]).unwrap();
    let model = fit_hk(
        &multi,
        MeanSpec::Constant,
        KernelSpec::default(),
        &default_opt(),
    )
    .unwrap();
    let pred = model.predict(&l2.x).unwrap();
    let range = l2.y.max() - l2.y.min();
    for (m, y) in pred.mean.iter().zip(l2.y.iter()) {
        assert!((m - y).abs() <= 1e-6 * range);
    }
}

/// Behavioral Markov check: with nested designs and fixed θ, perturbing
/// a far-away level-1 run leaves the co-kriging top prediction alone,
/// while the hierarchical emulator feels it near the perturbed input.
#[test]
fn far_point_sensitivity_contrast() {
    let xs1 = linspace(0.0, 10.0, 11);
    let f1 = |x: f64| (x / 2.0).sin() + 0.1 * x;
    let f2 = |x: f64| (x / 2.0).sin() + 0.1 * x + 1.5;
    let nested = [4.0, 6.0, 8.0];
    let delta = 0.1;

    let base_hp = Hyperparams::new(vec![], 1.0, vec![0.8]).unwrap();
    let disc_hp = Hyperparams::new(vec![], 0.5, vec![1.0]).unwrap();
    let ks = KernelSpec::default();

    let build = |perturb: bool| {
        let mut y1: Vec<f64> = xs1.iter().map(|&x| f1(x)).collect();
        if perturb {
            y1[0] += delta; // the run at x = 0
        }
        let l1 = LevelData::new(DesignMatrix::from_column(&xs1), y1, 1).unwrap();
        let l2 = level_1d(&nested, f2, 2);
        let multi = MultiLevelData::new(vec![l1, l2]).unwrap();
        let ko = ko_with_hyperparams(
            &multi,
            base_hp.clone(),
            vec![disc_hp.clone()],
            vec![1.0],
            RhoMode::Fixed(1.0),
            MeanSpec::Zero,
            ks,
        )
        .unwrap();
        let bh = BayHEmModel::with_hyperparams(
            multi,
            ThetaMode::SharedTheta,
            Objective::Joint,
            vec![base_hp.clone()],
            MeanSpec::Zero,
            ks,
        )
        .unwrap();
        (ko, bh)
    };

    let (ko_a, bh_a) = build(false);
    let (ko_b, bh_b) = build(true);

    // Far from the perturbed run (distance 9 ≫ δ = 0.8).
    let far = DesignMatrix::from_column(&[9.0]);
    let ko_change =
        (ko_b.predict(&far).unwrap().mean[0] - ko_a.predict(&far).unwrap().mean[0]).abs();
    let bh_far_change = (bh_b.predict(&far, false).unwrap().mean[0]
        - bh_a.predict(&far, false).unwrap().mean[0])
        .abs();
    assert!(
        ko_change <= 1e-6,
        "co-kriging felt a far perturbation: {ko_change}"
    );
    assert!(bh_far_change <= 1e-6);

    // Near the perturbed run the hierarchical emulator reacts.
    let near = DesignMatrix::from_column(&[0.0]);
    let bh_near_change = (bh_b.predict(&near, false).unwrap().mean[0]
        - bh_a.predict(&near, false).unwrap().mean[0])
        .abs();
    assert!(
        bh_near_change > 1e-3,
        "expected sensitivity, got {bh_near_change}"
    );
}

#[test]
fn level_one_data_informs_top_level_prediction() {
    // At a level-1 training point far from every level-2 point, the
    // shared-θ top-level mean stays within one posterior sd of the
    // level-1 observation.
    let l1 = level_1d(
        &[0.0, 1.0, 2.0, 9.0, 10.0],
        |x| (x / 3.0).sin() + 0.2 * x,
        1,
    );
    let l2 = level_1d(&[4.5, 5.5], |x| (x / 3.0).sin() + 0.2 * x + 0.4, 2);
    let hp = Hyperparams::new(vec![0.5], 1.0, vec![0.9]).unwrap();
    let multi = MultiLevelData::new(vec![l1.clone(), l2]).unwrap();
    let model = BayHEmModel::with_hyperparams(
        multi,
        ThetaMode::SharedTheta,
        Objective::Joint,
        vec![hp],
        MeanSpec::Constant,
        KernelSpec::default(),
    )
    .unwrap();
    let at = DesignMatrix::from_column(&[0.0]); // ≥ 4.5 lengthscales from level 2
    let pred = model.predict(&at, false).unwrap();
    let sd = pred.variance[0].sqrt();
    assert!(
        (pred.mean[0] - l1.y[0]).abs() <= sd.max(1e-9),
        "mean {} vs level-1 value {} (sd {sd:.3e})",
        pred.mean[0],
        l1.y[0]
    );
}

#[test]
fn example_one_single_design_rmse_band() {
    // One pinned 20 + 10 design of the first benchmark pair: top-level
    // RMSE of the hierarchical emulator in the band [0.5, 1.0].
    let cfg = bayhem::bench::ExperimentConfig::builtin("example1").unwrap();
    let case_idx = 2; // the 20/10 configuration
    let data = cfg.draw_case_data(case_idx, 0).unwrap();
    let model = fit_bayhem(
        &data,
        cfg.model.bayhem_mode,
        cfg.model.bayhem_objective,
        cfg.model.mean_spec,
        cfg.model.kernel_spec,
        &cfg.model.opt,
    )
    .unwrap();
    let test_x = cfg.test_design().unwrap();
    let truth = TestFunction::Ex1L2.eval_design(&test_x).unwrap();
    let pred = model.predict(&test_x, false).unwrap();
    let rmse =
        bayhem::bench::rmse(&pred.mean, &truth, bayhem::bench::RmseVariant::Standard).unwrap();
    assert!(
        (0.5..=1.0).contains(&rmse),
        "single-design RMSE {rmse:.4} outside [0.5, 1.0]"
    );
}

#[test]
fn per_level_theta_two_level_fit_runs() {
    let l1 = level_1d(&linspace(0.0, 10.0, 20), |x| x.sin() * x + x, 1);
    let l2 = level_1d(&[1.5, 8.5], |x| x.sin() * x + 3.0 * x, 2);
    let multi = MultiLevelData::new(vec![l1, l2.clone()]).unwrap();
    let model = fit_bayhem(
        &multi,
        ThetaMode::PerLevelTheta,
        Objective::Joint,
        MeanSpec::Constant,
        KernelSpec::default(),
        &default_opt(),
    )
    .unwrap();
    assert_eq!(model.hyperparam_chain().len(), 2);
    let pred = model.predict(&l2.x, false).unwrap();
    for (m, y) in pred.mean.iter().zip(l2.y.iter()) {
        assert!((m - y).abs() <= 1e-5 * 30.0, "{m} vs {y}");
    }
}

#[test]
fn hk_tracks_single_gp_on_uncorrelated_levels() {
    // With an uninformative lower level, hierarchical kriging stays in
    // the single-GP band: the scaled-trend coefficient shrinks and the
    // top-level GP carries the fit.
    let cfg = bayhem::bench::ExperimentConfig::builtin("example2-uncorr").unwrap();
    let report = bayhem::bench::run_experiment(&cfg).unwrap();
    let single = report
        .cell("uncorrelated", bayhem::bench::Method::SingleGp)
        .unwrap();
    let hk = report
        .cell("uncorrelated", bayhem::bench::Method::HierarchicalKriging)
        .unwrap();
    let (lo, hi) = (single.min.unwrap(), single.max.unwrap());
    let hk_mean = hk.mean.unwrap();
    assert!(
        hk_mean >= lo && hk_mean <= hi,
        "HK mean {hk_mean:.4} outside the single-GP range [{lo:.4}, {hi:.4}]"
    );
}

#[test]
fn condition_level_exposed_for_custom_chains() {
    // The recursion step is public: conditioning a prior surface on one
    // level matches the fitted-GP posterior at shared θ.
    let hp = Hyperparams::new(vec![0.2], 1.0, vec![0.5]).unwrap();
    let ks = KernelSpec::default();
    let data = level_1d(&[0.2, 0.5, 0.8], |x| x + 0.3, 1);
    let prior: Arc<dyn GaussianSurface> =
        Arc::new(PriorSurface::new(MeanSpec::Constant, hp.clone()).unwrap());
    let post = condition_level(prior, &data, ks.jitter * hp.sigma2).unwrap();
    let gp = FittedGP::with_hyperparams(&data, hp, MeanSpec::Constant, ks).unwrap();
    let grid = DesignMatrix::from_column(&linspace(0.0, 1.0, 20));
    let pg = gp.predict(&grid, false).unwrap();
    let mean = post.mean(&grid);
    let var = post.var_diag(&grid);
    for i in 0..grid.nrows() {
        assert_relative_eq!(mean[i], pg.mean[i], epsilon = 1e-10);
        assert_relative_eq!(var[i], pg.variance[i], epsilon = 1e-10);
    }
}

/// Fitted models are shared across threads by the benchmark harness.
#[test]
fn fitted_models_are_send_and_sync() {
    fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<FittedGP>();
    assert_send_sync::<BayHEmModel>();
    assert_send_sync::<bayhem::multilevel::KOModel>();
    assert_send_sync::<bayhem::multilevel::HKModel>();
}
