use herdlab::attack::{run_attack, AttackerBelief, Predictor, Strategy};
use herdlab::scenario::load_scenario;
use herdlab::sim::{ArrivalPolicy, Scene};

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6007);
    let mut scenario = load_scenario(std::path::Path::new("scenarios/long_herd.json")).unwrap();
    scenario.seed = seed;
    let mut scene = Scene::new(&scenario, ArrivalPolicy::Stop);
    let o = run_attack(&mut scene, Strategy::Shortest, Predictor::Oracle,
        AttackerBelief { goal: scenario.victim.goal, sector: scenario.victim.sector }).unwrap();
    println!("path={:.3}", o.path_length_after_entry);
    let e = o.entry_window.unwrap_or(0) as usize;
    for r in o.trace.iter().skip(e.saturating_sub(2)) {
        println!("k={:3} v=({:6.2},{:6.2}) th={:5.2} a=({:6.2},{:6.2}) d={:6.3} act={}",
            r.step, r.victim.x, r.victim.y, r.victim.theta, r.attacker.x, r.attacker.y, r.trap_distance, u8::from(r.active));
    }
}
