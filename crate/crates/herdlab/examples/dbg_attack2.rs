// Verbose variant: dump every window around the entry.
use herdlab::attack::{run_attack, AttackerBelief, Predictor, Strategy};
use herdlab::scenario::load_scenario;
use herdlab::sim::{ArrivalPolicy, Scene};

fn main() {
    let scenario = load_scenario(std::path::Path::new("scenarios/long_herd.json")).unwrap();
    let mut s2 = scenario.clone();
    s2.attack.stall_limit = 3000; // let it run; inspect behavior
    let mut scene = Scene::new(&s2, ArrivalPolicy::Stop);
    match run_attack(&mut scene, Strategy::Shortest, Predictor::Oracle,
        AttackerBelief { goal: s2.victim.goal, sector: s2.victim.sector }) {
        Ok(o) => {
            println!("success={} term={:?} horizon={} path={:.2}", o.success, o.termination, o.horizon, o.path_length_after_entry);
            let e = o.entry_window.unwrap_or(0) as usize;
            for r in o.trace.iter().skip(e.saturating_sub(3)).step_by(12) {
                println!("k={:4} v=({:6.2},{:6.2}) th={:5.2} a=({:6.2},{:6.2}) d={:6.3} act={} ua=({:+.2},{:+.2})",
                    r.step, r.victim.x, r.victim.y, r.victim.theta, r.attacker.x, r.attacker.y, r.trap_distance, u8::from(r.active), r.attacker_cmd.0, r.attacker_cmd.1);
            }
        }
        Err(e) => println!("error: {e}"),
    }
}
