//! learn → convert → eval on synthetic d = 16 data. Not an acceptance
//! criterion; the thresholds here are this test's own.

mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{mixture_data, run_pipeline, worst_increase, PipelineRun};
use tspn::convert::{ConversionConfig, InitKind};
use tspn::eval::SetTag;
use tspn::learn::Dataset;

fn split(seed: u64, train: usize, test: usize) -> (Dataset, Dataset) {
    let mut rows = mixture_data(&mut ChaCha8Rng::seed_from_u64(seed), 16, 8, train + test);
    let test_rows = rows.split_off(train);
    (Dataset::from_rows(rows).unwrap(), Dataset::from_rows(test_rows).unwrap())
}

fn print(label: &str, run: &PipelineRun) {
    let s = |t| run.summary(t);
    println!(
        "{label}: tv {:.4} reduction {:.2} ({} / {} nonzero) ranks {:?} sweeps {} convert {:.1}s",
        run.eval.tv_distance.unwrap(),
        run.eval.reduction_factor,
        run.eval.spn_params,
        run.eval.tspn_params_nonzero,
        run.conversion.ranks,
        run.conversion.sweeps,
        run.convert_seconds,
    );
    for tag in [SetTag::TrainSample, SetTag::TestSample, SetTag::TrainNonSample, SetTag::TestNonSample] {
        let m = s(tag);
        println!(
            "  {tag:?}: n {} spn {:.3e} tspn {:.3e} |diff| {:.3e}",
            m.count,
            m.median_spn_prob.unwrap(),
            m.median_tspn_prob.unwrap(),
            m.median_abs_diff.unwrap()
        );
    }
}

#[test]
fn small_surrogate_converts_faithfully() {
    let (train, test) = split(3, 2000, 400);
    let cfg = ConversionConfig {
        initial_rank: 6,
        max_sweeps: 20,
        ..ConversionConfig::default()
    };
    let run = run_pipeline(&train, &test, &cfg).unwrap();
    print("small", &run);
    assert!(worst_increase(&run.conversion.objective_history) <= 1e-12);
    assert!(run.conversion.ranks.iter().all(|&r| r <= 6));
    assert!((run.tt.partition() - 1.0).abs() < 1e-9);

    let tv = run.eval.tv_distance.unwrap();
    assert!(tv < 0.2, "tv {tv}");
    // samples stay far more likely than non-samples under both models
    let samples = run.summary(SetTag::TestSample);
    let non = run.summary(SetTag::TestNonSample);
    assert!(samples.median_tspn_prob.unwrap() > 10.0 * non.median_tspn_prob.unwrap());
    let rel = samples.median_abs_diff.unwrap() / samples.median_spn_prob.unwrap();
    assert!(rel < 0.25, "median |diff| / median prob = {rel}");
}

/// Full-size runs used for the measurements in the notes; minutes each.
#[test]
#[ignore]
fn full_surrogate_init_comparison() {
    let (train, test) = split(0, 16181, 3236);
    for (label, init, mass_weight) in [
        ("data", InitKind::Data, 0.0),
        ("data+mass", InitKind::Data, 1.0),
        ("mixture", InitKind::Mixture, 0.0),
    ] {
        let cfg = ConversionConfig {
            initial_rank: 10,
            non_sample_ratio: 1.0,
            init,
            mass_weight,
            ..ConversionConfig::default()
        };
        let run = run_pipeline(&train, &test, &cfg).unwrap();
        print(label, &run);
        assert!(worst_increase(&run.conversion.objective_history) <= 1e-12);
    }
}
