use filippov_boost::bifurcation::{find_limit_cycle, reverse_return, poincare_return};
use filippov_boost::filippov::SigmaPoint;
use filippov_boost::model::Params;

fn main() {
    for k in [1.32_f64, 1.374, 1.40, 1.45, 1.5, 1.55, 1.57, 1.60] {
        let p = Params::new(0.2, k, 1.0, 4.0).unwrap();
        print!("k={k}: ");
        // reverse-map iterates from a mid guess
        let mut x = 3.2 + 0.45;
        let mut path = vec![x];
        for _ in 0..12 {
            match reverse_return(&p, x) {
                Ok((xr, _)) => { x = xr; path.push(x); }
                Err(e) => { path.push(f64::NAN); print!("R-err: {e}; "); break; }
            }
        }
        let tail: Vec<String> = path.iter().rev().take(4).rev().map(|v| format!("{v:.6}")).collect();
        print!("iters ...{:?} ", tail);
        match find_limit_cycle(&p, &SigmaPoint::new(3.65, 4.0)) {
            Ok(c) => {
                let m = filippov_boost::bifurcation::cycle_multiplier(&p, &c);
                println!("CYCLE anchor={:.8} period={:.4} ampx={:.4} ampy={:.4} mult={:?}", c.anchor.x, c.period, c.amplitude_x, c.amplitude_y, m.map(|v| format!("{v:.4}")));
            }
            Err(e) => println!("no cycle: {e}"),
        }
        if k == 1.32 {
            // inspect forward return near the claimed anchor
            for xg in [3.3_f64, 3.5, 3.8, 4.2] {
                match poincare_return(&p, xg) {
                    Ok((xr, t)) => println!("   fwd P({xg}) = {xr:.6} (t={t:.3})"),
                    Err(e) => println!("   fwd P({xg}) err: {e}"),
                }
            }
        }
    }
}
