use herdlab::scenario::load_scenario;
use herdlab::sim::{ArrivalPolicy, Scene};
use herdlab::geometry::{wrap_to_pi, Vec2};
use herdlab::perception::{observe_reaction, detect_deviation};

// Replicates the radius-probe driver with tracing to find the stuck phase.
fn main() {
    let scenario = load_scenario(std::path::Path::new("scenarios/dwa_unicycle.json")).unwrap();
    let mut scene = Scene::new(&scenario, ArrivalPolicy::Respawn);
    let tol = 1e-4;
    let cfg = scenario.probe;
    let mut standoff = cfg.initial_standoff;
    for trial_idx in 0..40 {
        standoff -= cfg.delta_d;
        let stage = standoff + cfg.stage_margin + cfg.delta_d;
        // chase
        let mut windows = 0;
        loop {
            let pose = scene.victim_pose();
            let target = pose.position() + Vec2::from_angle(pose.theta) * stage;
            let here = scene.attacker_position();
            let hop = target - here;
            if hop.norm() <= scene.attacker_budget() { scene.set_attacker(target); break; }
            scene.set_attacker(here + hop.unit().unwrap() * scene.attacker_budget());
            scene.run_window().unwrap();
            windows += 1;
            if windows > 3000 { println!("trial {trial_idx}: chase stuck"); return; }
        }
        // wait quiet
        let mut last_dir: Option<f64> = None;
        let mut streak = 0;
        let mut quiet: Option<f64> = None;
        let mut resets = 0;
        for w in 0..3000 {
            let pose = scene.victim_pose();
            scene.set_attacker(pose.position() + Vec2::from_angle(pose.theta) * stage);
            let before = scene.victim_position();
            let ep = scene.episodes();
            scene.run_window().unwrap();
            if scene.episodes() != ep { last_dir = None; streak = 0; continue; }
            let delta = scene.victim_position() - before;
            let Some(dir) = delta.unit().map(|u| u.angle()) else { continue };
            if let Some(prev) = last_dir {
                if wrap_to_pi(dir - prev).abs() <= tol {
                    streak += 1;
                    if streak >= cfg.quiet_windows { quiet = Some(dir); break; }
                } else { streak = 0; resets += 1; if resets < 5 && trial_idx > 25 { println!("  trial {trial_idx} w={w} dir_change={:+.3e}", wrap_to_pi(dir - prev)); } }
            }
            last_dir = Some(dir);
        }
        let Some(nominal) = quiet else { println!("trial {trial_idx} standoff={standoff:.2}: NEVER QUIET ({resets} resets)"); return; };
        // trial
        let mut reacted = false;
        for _ in 0..2 {
            let pose = scene.victim_pose();
            scene.set_attacker(pose.position() + Vec2::from_angle(pose.theta) * standoff);
            let before = scene.victim_position();
            let ep = scene.episodes();
            scene.run_window().unwrap();
            if scene.episodes() != ep { println!("trial {trial_idx}: respawn mid-trial"); break; }
            let obs = observe_reaction(before, scene.victim_position(), nominal);
            if detect_deviation(&obs, tol) { reacted = true; break; }
        }
        println!("trial {trial_idx:2} standoff {standoff:.2} -> reacted={reacted}");
        if reacted {
            println!("D_hat = {}", standoff + cfg.delta_d);
            return;
        }
    }
}
