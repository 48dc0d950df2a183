use herdlab::attack::{run_attack, AttackerBelief, Predictor, Strategy};
use herdlab::scenario::load_scenario;
use herdlab::sim::{ArrivalPolicy, Scene};

fn main() {
    let path = std::env::args().nth(1).unwrap_or("scenarios/long_herd.json".into());
    let strategy = match std::env::args().nth(2).as_deref() {
        Some("handsoff") => Strategy::HandsOff,
        _ => Strategy::Shortest,
    };
    let base = load_scenario(std::path::Path::new(&path)).unwrap();
    let t0 = std::time::Instant::now();
    for seed in 1..=10u64 {
        let mut scenario = base.clone();
        scenario.seed = seed * 1000 + 7;
        let mut scene = Scene::new(&scenario, ArrivalPolicy::Stop);
        match run_attack(&mut scene, strategy, Predictor::Oracle,
            AttackerBelief { goal: scenario.victim.goal, sector: scenario.victim.sector }) {
            Ok(o) => println!("seed {:5} success={} path={:7.3} horizon={:4} active={:4} handsoff={:.3} final_d={:.3}",
                scenario.seed, o.success, o.path_length_after_entry, o.horizon, o.active_count, o.hands_off_ratio, o.final_trap_distance),
            Err(e) => println!("seed {:5} ERROR {e}", scenario.seed),
        }
    }
    println!("total {:?}", t0.elapsed());
}
