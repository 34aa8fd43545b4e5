use spikenav::dataset::{make_windows, Window};
use spikenav::simgen::{default_scenarios, generate_session, SimConfig};
use spikenav::snn::{Architecture, LifParams, Mode, NetworkModel, ParamSet, SpikeFn};
use spikenav::training::{
    adam_step, kfold_split, kinematics_stats, mean_std, mse_grad, mse_loss, train_folds, AdamState, TrainConfig,
};

fn windows(n: usize) -> (Vec<Window>, NetworkModel) {
    let world = &default_scenarios()[0];
    let s = generate_session(world, &SimConfig::default(), "t", 3).unwrap();
    let ws: Vec<_> = make_windows(&s, 20).unwrap().into_iter().take(n).collect();
    assert_eq!(ws.len(), n);
    let mut model = NetworkModel::new(Architecture::default(), Mode::Snn, LifParams::default(), 5);
    let (mean, std) = kinematics_stats(&[&s]);
    model.set_kinematics_stats(mean, std);
    (ws, model)
}

/// Mean window loss and batch-averaged gradient, accumulated in the given order.
fn batch_grad(model: &NetworkModel, ws: &[&Window]) -> (f64, ParamSet) {
    let mut g = model.params.zeros_like();
    let mut loss = 0.0;
    for w in ws {
        let tr = model.forward_window(w).unwrap();
        loss += mse_loss(&tr.preds, &w.labels).unwrap() / ws.len() as f64;
        let mut d = mse_grad(&tr.preds, &w.labels).unwrap();
        d.iter_mut().for_each(|v| {
            v[0] /= ws.len() as f64;
            v[1] /= ws.len() as f64;
        });
        g.add_scaled(&model.backward(&tr, &d).unwrap(), 1.0);
    }
    (loss, g)
}

#[test]
fn overfits_a_single_window() {
    let (ws, mut model) = windows(1);
    let mut adam = AdamState::new(&model.params);
    let mut last = f64::INFINITY;
    for _ in 0..200 {
        let (loss, g) = batch_grad(&model, &[&ws[0]]);
        last = loss;
        if loss < 0.05 {
            break;
        }
        adam_step(&mut model.params, &g, &mut adam, 1e-3).unwrap();
    }
    // Step 0 of a zero-state window needs a one-step spike through every layer;
    // that is what remains wrong longest at α = 0.6.
    assert!(last < 0.05, "train loss after 200 steps: {last}");
}

#[test]
fn smooth_probe_descends() {
    let (ws, mut model) = windows(2);
    model.spike_fn = SpikeFn::SmoothProbe;
    let batch: Vec<&Window> = ws.iter().collect();
    let mut adam = AdamState::new(&model.params);
    let mut prev = f64::INFINITY;
    for step in 0..10 {
        let (loss, g) = batch_grad(&model, &batch);
        assert!(loss <= prev, "step {step}: {loss} > {prev}");
        prev = loss;
        adam_step(&mut model.params, &g, &mut adam, 1e-3).unwrap();
    }
}

#[test]
fn batch_loss_ignores_window_order() {
    let (ws, model) = windows(4);
    let fwd: Vec<&Window> = ws.iter().collect();
    let rev: Vec<&Window> = ws.iter().rev().collect();
    let (la, ga) = batch_grad(&model, &fwd);
    let (lb, gb) = batch_grad(&model, &rev);
    assert!((la - lb).abs() <= 1e-12);
    for ((_, a), (_, b)) in ga.iter().zip(gb.iter()) {
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }
}

#[test]
fn folds_split_by_session_and_report_recomputes() {
    let ids: Vec<String> = (0..38).map(|i| format!("s{i:02}")).collect();
    let splits = kfold_split(&ids, 5, 9).unwrap();
    let sizes: Vec<_> = splits.iter().map(|s| s.test_session_ids.len()).collect();
    assert_eq!(sizes, vec![8, 8, 8, 7, 7]);
    let mut seen: Vec<&String> = splits.iter().flat_map(|s| &s.test_session_ids).collect();
    seen.sort();
    seen.dedup();
    assert_eq!(seen.len(), 38);
    for s in &splits {
        assert!(s.test_session_ids.iter().all(|t| !s.train_session_ids.contains(t)));
        assert_eq!(s.train_session_ids.len() + s.test_session_ids.len(), 38);
    }

    // A tiny two-fold, two-epoch run: mean/std must be the statistics of the stored losses.
    let world = &default_scenarios()[1];
    let cfg = SimConfig { max_frames: 45, ..SimConfig::default() };
    let sessions: Vec<_> = (0..4)
        .map(|i| generate_session(world, &cfg, &format!("s{i}"), 100 + i).unwrap())
        .collect();
    let tc = TrainConfig { epochs: 2, folds: 2, seed: 1, ..TrainConfig::ci() };
    let out = train_folds(&sessions, &tc, None).unwrap();
    let (m, s) = mean_std(&out.report.test_losses());
    assert_eq!(m, out.report.mean_test_loss);
    assert_eq!(s, out.report.std_test_loss);
    for f in &out.report.folds {
        assert_eq!(f.train_loss.len(), 2);
        assert!(f.test_session_ids.iter().all(|t| !f.train_session_ids.contains(t)));
    }
    let json = out.report.to_json();
    let back: spikenav::training::TrainReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back.test_losses(), out.report.test_losses());
}
