use herdlab::regression::{collect_dataset, fit, predict, r_squared};
use herdlab::rng::{stage_rng, Stage};
use herdlab::scenario::load_scenario;
use herdlab::sim::{ArrivalPolicy, Scene};
use std::time::Instant;

fn main() {
    let path = std::env::args().nth(1).unwrap_or("scenarios/apf_unicycle.json".into());
    let scenario = load_scenario(std::path::Path::new(&path)).unwrap();
    let mut scene = Scene::new(&scenario, ArrivalPolicy::Respawn);
    let mut rng = stage_rng(scenario.seed, Stage::Collect);
    let t0 = Instant::now();
    let out = collect_dataset(
        &mut scene,
        &scenario.victim.sector,
        scenario.victim.goal,
        scenario.attack.eta,
        scenario.collect.trial_limit,
        scenario.collect.target_samples,
        scenario.attacker.deviation_tol,
        &mut rng,
    )
    .unwrap();
    println!("collected {} samples in {} trials ({:?})", out.samples.len(), out.trials, t0.elapsed());
    let ds: Vec<f64> = out.samples.iter().map(|s| s.q_out[0]).collect();
    let dt: Vec<f64> = out.samples.iter().map(|s| s.q_out[1]).collect();
    let stats = |xs: &[f64]| {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt();
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (m, sd, lo, hi)
    };
    println!("delta_s  stats {:?}", stats(&ds));
    println!("delta_th stats {:?}", stats(&dt));

    // split: train on all via fit (internal holdout), then score a fresh holdout
    let t1 = Instant::now();
    let model = fit(&out.samples, &scenario.svr, scenario.seed).unwrap();
    println!("fit in {:?}; svs: {} / {}; iters {} {} ; eps {:?}",
        t1.elapsed(),
        model.regressors[0].beta.len(), model.regressors[1].beta.len(),
        model.diagnostics[0].iterations, model.diagnostics[1].iterations,
        model.epsilons);
    println!("residual std {:?} mean {:?} holdout n={}", model.residual.std, model.residual.mean, model.residual.holdout_count);

    // score on an independent collection run (different stream)
    let mut scene2 = Scene::new(&scenario, ArrivalPolicy::Respawn);
    let mut rng2 = stage_rng(scenario.seed ^ 0xabcd, Stage::Collect);
    let test = collect_dataset(&mut scene2, &scenario.victim.sector, scenario.victim.goal,
        scenario.attack.eta, 300, 200, scenario.attacker.deviation_tol, &mut rng2).unwrap();
    let mut pred0 = vec![]; let mut act0 = vec![]; let mut pred1 = vec![]; let mut act1 = vec![];
    let mut cover = [0usize; 2];
    for s in &test.samples {
        let p = predict(&model, &s.q_in).unwrap();
        pred0.push(p[0]); act0.push(s.q_out[0]);
        pred1.push(p[1]); act1.push(s.q_out[1]);
        for k in 0..2 {
            if (p[k] - s.q_out[k]).abs() <= 2.0 * model.residual.std[k] { cover[k] += 1; }
        }
    }
    println!("R2 delta_s  = {:.4}", r_squared(&pred0, &act0));
    println!("R2 delta_th = {:.4}", r_squared(&pred1, &act1));
    println!("2s coverage: {:.3} {:.3}", cover[0] as f64 / test.samples.len() as f64, cover[1] as f64 / test.samples.len() as f64);
}
