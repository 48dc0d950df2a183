use herdlab::attack::{run_attack, AttackerBelief, Predictor, Strategy};
use herdlab::scenario::load_scenario;
use herdlab::sim::{ArrivalPolicy, Scene};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let path = args.get(1).cloned().unwrap_or("scenarios/long_herd.json".into());
    let strategy = match args.get(2).map(|s| s.as_str()) {
        Some("handsoff") => Strategy::HandsOff,
        Some("simple") => Strategy::Simple,
        _ => Strategy::Shortest,
    };
    let scenario = load_scenario(std::path::Path::new(&path)).unwrap();
    let mut scene = Scene::new(&scenario, ArrivalPolicy::Stop);
    let t0 = Instant::now();
    let result = run_attack(
        &mut scene,
        strategy,
        Predictor::Oracle,
        AttackerBelief { goal: scenario.victim.goal, sector: scenario.victim.sector },
    );
    match result {
        Ok(o) => {
            println!("elapsed {:?}", t0.elapsed());
            println!("success={} termination={:?} horizon={} active={} handsoff={:.3}",
                o.success, o.termination, o.horizon, o.active_count, o.hands_off_ratio);
            println!("path_after_entry={:.3} final_d={:.4} entry=({:.2},{:.2}) region={:?} entry_window={:?}",
                o.path_length_after_entry, o.final_trap_distance, o.entry_position.x, o.entry_position.y, o.region, o.entry_window);
            // print sparse trajectory
            for r in o.trace.iter().step_by(25) {
                println!("  k={:4} v=({:6.2},{:6.2}) a=({:6.2},{:6.2}) d={:6.2} act={}", r.step, r.victim.x, r.victim.y, r.attacker.x, r.attacker.y, r.trap_distance, u8::from(r.active));
            }
        }
        Err(e) => println!("attack error: {e}"),
    }
}
