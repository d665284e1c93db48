use filippov_boost::bifurcation::find_limit_cycle;
use filippov_boost::filippov::SigmaPoint;
use filippov_boost::integrator::{simulate, SimConfig};
use filippov_boost::model::{Params, State};

fn main() {
    let p = Params::new(0.2, 1.5, 1.0, 4.0).unwrap();
    let c = find_limit_cycle(&p, &SigmaPoint::new(3.8, 4.0)).unwrap();
    println!("cycle anchor={:.6} x_range={:?} y_range={:?}", c.anchor.x, c.x_range, c.y_range);

    // min distance of the cycle from q by a fine forward sweep
    // (reuse simulate on the manifold? simpler: poincare via planar in lib not exposed; approximate via ranges)
    for delta in [0.02_f64, 0.05, 0.2] {
        let s0 = State::new(c.anchor.x + delta, 4.0, 0.0);
        let cfg = SimConfig { t_max: 150.0, ..Default::default() };
        match simulate(&s0, &p, &cfg) {
            Ok(segments) => {
                let n: usize = segments.iter().map(|s| s.samples.len()).sum();
                let (t_end, s_end) = segments.last().unwrap().last();
                let d = ((s_end.x - 3.2_f64).powi(2) + (s_end.y - 4.0).powi(2) + s_end.z.powi(2)).sqrt();
                let modes: Vec<String> = segments.iter().map(|s| format!("{:?}/{:?}({})", s.mode, s.terminal, s.samples.len())).collect();
                println!("delta={delta}: {} segments {n} samples, t_end={t_end:.2}, final=({:.4},{:.4},{:.4}) dist={d:.4}", segments.len(), s_end.x, s_end.y, s_end.z);
                let show = if modes.len() > 8 { &modes[..8] } else { &modes[..] };
                println!("   modes: {:?}{}", show, if modes.len() > 8 { " ..." } else { "" });
                // min distance from q over the whole trajectory after t=10
                let mut dmin = f64::INFINITY;
                for seg in &segments {
                    for (t, s) in &seg.samples {
                        if *t > 10.0 {
                            let d = ((s.x - 3.2_f64).powi(2) + (s.y - 4.0).powi(2) + s.z.powi(2)).sqrt();
                            dmin = dmin.min(d);
                        }
                    }
                }
                println!("   min dist from q after t=10: {dmin:.4}");
            }
            Err(e) => println!("delta={delta}: sim error: {e}"),
        }
    }
}
