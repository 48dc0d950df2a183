use herdlab::scenario::load_scenario;
use herdlab::sim::{ArrivalPolicy, Scene};
use herdlab::geometry::Vec2;

fn main() {
    let scenario = load_scenario(std::path::Path::new("scenarios/dwa_unicycle.json")).unwrap();
    for bearing_deg in [62.0, 58.0, 54.0, 50.0, 46.0] {
        let mut scene = Scene::new(&scenario, ArrivalPolicy::Respawn);
        for _ in 0..10 { scene.run_window().unwrap(); }
        let pose = scene.victim_pose();
        let b = (bearing_deg as f64).to_radians();
        let place = pose.position() + Vec2::from_angle(pose.theta + b) * 2.9;
        println!("bearing {bearing_deg}° in_sector={}", scene.in_true_sector(place));
        scene.set_attacker(place);
        for w in 0..3 {
            let before = scene.victim_position();
            scene.run_window().unwrap();
            let delta = scene.victim_position() - before;
            let cmd = scene.victim_command();
            println!("  w={w} cmd={cmd:?} dir={:.5}", delta.angle());
            // hold relative placement
            let pose = scene.victim_pose();
            scene.set_attacker(pose.position() + Vec2::from_angle(pose.theta + b) * 2.9);
        }
    }
}
