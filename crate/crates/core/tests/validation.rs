use std::path::Path;
use std::time::Instant;

use matfactor::io::{ingest_csv, loadings_csv};
use matfactor::simulation::{simulate, NoiseSpec, SimConfig};
use matfactor::validation::{
    annual_schedule, kfold_cv, min_train_window, rolling_validation, ModelSpec, ValidationOptions, Window,
};
use matfactor::{fit, varimax, EstimatorOptions, Error};

fn bundled_panel() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/panel_10x10.csv")
}

#[test]
fn rolling_agrees_with_kfold_on_stationary_data() {
    let (x, _) = simulate(&SimConfig::standard(20, 20, 1000, 0.0, 0.0, 31)).unwrap();
    let specs = [ModelSpec::Matrix { k1: 3, k2: 2 }, ModelSpec::Matrix { k1: 1, k2: 1 }];
    let opts = ValidationOptions::default();
    let cv = kfold_cv(&x, 10, &specs, opts).unwrap();
    let schedule = annual_schedule(1000, 200, 100);
    let roll = rolling_validation(&x, &schedule, &specs, opts, None).unwrap();
    for s in specs {
        let (a, b) = (cv.ratio(s).unwrap(), roll.ratio(s).unwrap());
        assert!((a - b).abs() <= 0.05, "{s:?}: cv {a} rolling {b}");
    }
}

#[test]
fn noise_free_true_ranks_leave_no_residual() {
    let mut c = SimConfig::standard(8, 6, 200, 0.0, 0.0, 5);
    c.noise_spec = NoiseSpec::None;
    let (x, _) = simulate(&c).unwrap();
    let specs = [ModelSpec::Matrix { k1: 3, k2: 2 }, ModelSpec::Vector { k: 6 }, ModelSpec::Matrix { k1: 0, k2: 0 }];
    let r = kfold_cv(&x, 5, &specs, ValidationOptions::default()).unwrap();
    assert!(r.ratio(specs[0]).unwrap() <= 1e-10);
    assert!(r.ratio(specs[1]).unwrap() <= 1e-10);
    assert!((r.ratio(specs[2]).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn equal_products_give_equal_vector_models() {
    let (x, _) = simulate(&SimConfig::standard(6, 5, 120, 0.0, 0.0, 6)).unwrap();
    let specs = [ModelSpec::Vector { k: 6 }, ModelSpec::Matrix { k1: 2, k2: 3 }, ModelSpec::Matrix { k1: 3, k2: 2 }];
    let r = kfold_cv(&x, 4, &specs, ValidationOptions::default()).unwrap();
    assert_eq!(r.row(specs[0]).unwrap().parameters, 6 * 5 * 6);
    assert_eq!(r.row(specs[1]).unwrap().parameters, 6 * 2 + 5 * 3);
    assert_eq!(r.row(specs[2]).unwrap().factors, 6);
}

#[test]
fn fold_preconditions() {
    let (x, _) = simulate(&SimConfig::standard(4, 3, 15, 0.0, 0.0, 1)).unwrap();
    let specs = [ModelSpec::Matrix { k1: 1, k2: 1 }];
    assert!(matches!(kfold_cv(&x, 10, &specs, ValidationOptions::default()), Err(Error::TooFewObservations { .. })));
    assert!(kfold_cv(&x, 1, &specs, ValidationOptions::default()).is_err());
}

#[test]
fn invalid_schedules() {
    let (x, _) = simulate(&SimConfig::standard(4, 3, 100, 0.0, 0.0, 1)).unwrap();
    let specs = [ModelSpec::Matrix { k1: 1, k2: 1 }];
    let opts = ValidationOptions::default();
    let bad = [
        vec![],
        vec![Window { train_end: 100, test_start: 100, test_end: 100 }],
        vec![Window { train_end: 10, test_start: 10, test_end: 20 }],
        vec![Window { train_end: 50, test_start: 40, test_end: 60 }],
        vec![Window { train_end: 90, test_start: 90, test_end: 110 }],
        vec![Window { train_end: 40, test_start: 40, test_end: 60 }, Window { train_end: 50, test_start: 50, test_end: 70 }],
    ];
    for s in bad {
        assert!(matches!(rolling_validation(&x, &s, &specs, opts, None), Err(Error::ScheduleInvalid(_))), "{s:?}");
    }
    assert_eq!(min_train_window(4, 3), 24);
    assert_eq!(min_train_window(10, 30), 60);
}

#[test]
fn bundled_panel_end_to_end() {
    let start = Instant::now();
    let x = ingest_csv(bundled_panel()).unwrap();
    assert_eq!(x.dims(), (624, 10, 10));

    let f = fit(&x, EstimatorOptions { standardize: true, ..EstimatorOptions::auto(1) }).unwrap();
    let v = varimax(&f.q1.q);
    assert!(v.criterion_after >= v.criterion_before);
    let csv = loadings_csv(&v.rotated, 30.0);
    assert_eq!(csv.lines().count(), 11);

    let mut specs = vec![ModelSpec::Matrix { k1: 0, k2: 0 }];
    specs.extend(ModelSpec::matrix_grid(4, 3));
    specs.extend([1, 2, 3, 4, 6, 8, 9, 12].map(|k| ModelSpec::Vector { k }));
    let schedule = annual_schedule(624, 504, 12);
    assert_eq!(schedule.len(), 10);
    let opts = ValidationOptions { h0: 1, standardize: true };
    let r = rolling_validation(&x, &schedule, &specs, opts, None).unwrap();
    assert_eq!(r.rows.len(), specs.len());
    assert!((r.ratio(ModelSpec::Matrix { k1: 0, k2: 0 }).unwrap() - 1.0).abs() < 1e-12);
    assert!(r.ratio(ModelSpec::Matrix { k1: 3, k2: 2 }).unwrap() < 0.9);
    let table = r.to_csv();
    assert!(table.starts_with("model,factor,RSS,SST,RSS/SST,factors,parameters"));
    assert!(start.elapsed().as_secs_f64() < 10.0, "{:?}", start.elapsed());
}
