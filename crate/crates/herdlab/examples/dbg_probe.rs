use herdlab::pipeline::stage_probe;
use herdlab::scenario::load_scenario;
use std::time::Instant;

fn main() {
    let path = std::env::args().nth(1).unwrap_or("scenarios/probe_sector.json".into());
    let scenario = load_scenario(std::path::Path::new(&path)).unwrap();
    let t0 = Instant::now();
    match stage_probe(&scenario) {
        Ok(a) => {
            println!("elapsed {:?}", t0.elapsed());
            println!(
                "D_hat = {:.4}  alpha = [{:.2}°, {:.2}°]  degenerate={}",
                a.sector.radius,
                a.sector.alpha_lo.to_degrees(),
                a.sector.alpha_hi.to_degrees(),
                a.degenerate
            );
            println!("radius trials {}  angle trials {}", a.radius_trials, a.angle_trials);
            println!("goal est = ({:.3}, {:.3}) residual {:.3e} accepted={}", a.goal.position.x, a.goal.position.y, a.goal.residual, a.goal.accepted);
        }
        Err(e) => println!("probe error: {e}"),
    }
}
