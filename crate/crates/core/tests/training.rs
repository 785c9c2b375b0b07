use morphguard::datagen::{synth_identities, Sample};
use morphguard::encoder::{
    init_model, loss_and_gradients, parameters_mut, train, train_step, DualHeadModel, TrainConfig,
};
use morphguard::loss::{LabelPair, MarginConfig};
use morphguard::rng::SeededRng;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn flat(model: &mut DualHeadModel) -> Vec<f64> {
    parameters_mut(model).iter().flat_map(|p| p.iter().copied()).collect()
}

#[test]
fn separable_set_loss_decreases_over_first_epochs() {
    let mut per_epoch: Vec<Vec<f64>> = vec![Vec::new(); 5];
    for seed in 1..=5u64 {
        let (_, data) = synth_identities(4, 50, 16, 0.1, seed).unwrap();
        let model = init_model(16, &[32], 8, 4, seed).unwrap();
        let config = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        let (_, history) = train(model, &data, &config).unwrap();
        assert_eq!(history.epoch_loss.len(), config.epochs);
        for (k, slot) in per_epoch.iter_mut().enumerate() {
            slot.push(history.epoch_loss[k]);
        }
    }
    let medians: Vec<f64> = per_epoch.into_iter().map(median).collect();
    assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
}

#[test]
fn sgd_update_is_minus_lr_times_gradient() {
    let mut rng = SeededRng::new(5);
    let model = init_model(6, &[5], 4, 3, 9).unwrap();
    let batch: Vec<Sample> = (0..4)
        .map(|i| {
            let input: Vec<f64> = (0..6).map(|_| rng.gaussian()).collect();
            let labels = if i % 2 == 0 {
                LabelPair::bona_fide(i % 3)
            } else {
                LabelPair::morph(0, 2)
            };
            let source_ids = if i % 2 == 0 { vec![i % 3] } else { vec![0, 2] };
            Sample {
                input,
                labels,
                source_ids,
            }
        })
        .collect();
    let margin = MarginConfig::new(16.0, 0.5, -0.1).unwrap();
    let (loss, grads) = loss_and_gradients(&model, &batch, &margin).unwrap();
    let mut updated = model.clone();
    let reported = train_step(&mut updated, &batch, &margin, 0.01).unwrap();
    assert_eq!(reported, loss);
    let before = flat(&mut model.clone());
    let after = flat(&mut updated);
    for ((b, a), g) in before.iter().zip(&after).zip(grads.flatten()) {
        assert_eq!(*a, b - 0.01 * g);
    }
}

#[test]
fn one_sample_gradient_matches_finite_differences() {
    let model = init_model(5, &[4, 3], 4, 3, 21).unwrap();
    let batch = vec![Sample {
        input: vec![0.3, -0.2, 0.5, 0.1, -0.7],
        labels: LabelPair::morph(1, 2),
        source_ids: vec![1, 2],
    }];
    let margin = MarginConfig::new(64.0, 0.5, -0.1).unwrap();
    let analytic = loss_and_gradients(&model, &batch, &margin).unwrap().1.flatten();
    let mut probe = model.clone();
    let h = 1e-6;
    let mut k = 0;
    for slot in 0..parameters_mut(&mut probe).len() {
        for j in 0..parameters_mut(&mut probe)[slot].len() {
            let orig = parameters_mut(&mut probe)[slot][j];
            parameters_mut(&mut probe)[slot][j] = orig + h;
            let plus = loss_and_gradients(&probe, &batch, &margin).unwrap().0;
            parameters_mut(&mut probe)[slot][j] = orig - h;
            let minus = loss_and_gradients(&probe, &batch, &margin).unwrap().0;
            parameters_mut(&mut probe)[slot][j] = orig;
            let fd = (plus - minus) / (2.0 * h);
            let rel = (analytic[k] - fd).abs() / analytic[k].abs().max(fd.abs()).max(1e-3);
            assert!(rel < 1e-4, "parameter {k}: {} vs {fd}", analytic[k]);
            k += 1;
        }
    }
    assert_eq!(k, analytic.len());
}
