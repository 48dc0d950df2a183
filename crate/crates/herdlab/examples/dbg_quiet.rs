use herdlab::scenario::load_scenario;
use herdlab::sim::{ArrivalPolicy, Scene};
use herdlab::geometry::{wrap_to_pi, Vec2};

fn main() {
    let scenario = load_scenario(std::path::Path::new("scenarios/dwa_unicycle.json")).unwrap();
    let mut scene = Scene::new(&scenario, ArrivalPolicy::Respawn);
    // emulate staging dead ahead at 6.25
    let mut last_dir: Option<f64> = None;
    for k in 0..40 {
        let pose = scene.victim_pose();
        let stage = pose.position() + Vec2::from_angle(pose.theta) * 6.25;
        scene.set_attacker(stage);
        let before = scene.victim_position();
        scene.run_window().unwrap();
        let delta = scene.victim_position() - before;
        let dir = delta.unit().map(|u| u.angle());
        let d_change = match (dir, last_dir) {
            (Some(d), Some(p)) => wrap_to_pi(d - p),
            _ => f64::NAN,
        };
        last_dir = dir;
        let cmd = scene.victim_command();
        println!("k={k:2} pos=({:7.3},{:7.3}) th={:.6} cmd={:?} dir_change={:+.2e}", before.x, before.y, scene.victim_pose().theta, cmd, d_change);
    }
}
