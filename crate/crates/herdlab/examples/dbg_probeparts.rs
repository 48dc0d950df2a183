use herdlab::probe::{learn_detection_radius, learn_detection_angles};
use herdlab::scenario::load_scenario;
use herdlab::sim::{ArrivalPolicy, Scene};

fn main() {
    let path = std::env::args().nth(1).unwrap_or("scenarios/dwa_unicycle.json".into());
    let scenario = load_scenario(std::path::Path::new(&path)).unwrap();
    let mut scene = Scene::new(&scenario, ArrivalPolicy::Respawn);
    let tol = scenario.attacker.deviation_tol;
    match learn_detection_radius(&mut scene, &scenario.probe, tol) {
        Ok((d, _track, trials)) => {
            println!("radius OK: D_hat={d:.3} trials={trials}");
            match learn_detection_angles(&mut scene, d, &scenario.probe, tol) {
                Ok(a) => println!("angles OK: [{:.1}°, {:.1}°] degenerate={} trials={}",
                    a.alpha_lo.to_degrees(), a.alpha_hi.to_degrees(), a.degenerate, a.trials),
                Err(e) => println!("angles error: {e}"),
            }
        }
        Err(e) => println!("radius error: {e}"),
    }
}
