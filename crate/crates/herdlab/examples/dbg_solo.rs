use herdlab::scenario::load_scenario;
use herdlab::sim::{ArrivalPolicy, Scene};

fn main() {
    let path = std::env::args().nth(1).unwrap_or("scenarios/dwa_unicycle.json".into());
    let scenario = load_scenario(std::path::Path::new(&path)).unwrap();
    let mut scene = Scene::new(&scenario, ArrivalPolicy::Respawn);
    for k in 0..400 {
        scene.run_window().unwrap();
        if k % 20 == 0 || (k > 80 && k < 120) {
            let p = scene.victim_pose();
            println!("k={k:3} pos=({:7.3},{:7.3}) th={:.4} cmd={:?} ep={}", p.x, p.y, p.theta, scene.victim_command(), scene.episodes());
        }
    }
}
