use herdlab::analysis::measure_reaction_radii;
use herdlab::scenario::load_scenario;

fn main() {
    let path = std::env::args().nth(1).unwrap_or("scenarios/long_herd.json".into());
    let scenario = load_scenario(std::path::Path::new(&path)).unwrap();
    match measure_reaction_radii(&scenario, 9) {
        Ok(r) => {
            println!("r_min={:.3} r_max={:.3} ordering_held={}", r.r_min, r.r_max, r.corner_ordering_held);
            for p in &r.per_placement {
                println!("  bearing {:6.1}° range {:.2} -> {:?}", p.bearing.to_degrees(), p.range, p.radius);
            }
            let (lo, hi) = herdlab::analysis::optimality_gap_bounds(r.r_min, r.r_max, 10.0).unwrap();
            println!("gap bounds for L_d=10: [{lo:.3}, {hi:.3}]");
        }
        Err(e) => println!("error: {e}"),
    }
}
