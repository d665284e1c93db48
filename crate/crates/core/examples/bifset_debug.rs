use std::time::Instant;
use filippov_boost::bifurcation::{bifurcation_set, homoclinic_k};

fn main() {
    let t0 = Instant::now();
    let k = homoclinic_k(0.2, 1.0, 4.0, (1.45, 1.68), 1e-4).unwrap();
    println!("k_hc(0.2) = {k:.6} in {:?}", t0.elapsed());

    let t0 = Instant::now();
    let set = bifurcation_set(1.0, 4.0, None, 60).unwrap();
    println!(
        "bifset res=60: {} HC samples, {} failures in {:?}",
        set.homoclinic.len(),
        set.failures.len(),
        t0.elapsed()
    );
    for f in set.failures.iter().take(6) {
        println!("  fail a={:.4}: {}", f.a, f.reason);
    }
    if let Some(k) = set.homoclinic_at(0.2) {
        println!("interpolated k_hc(0.2) = {k:.6}");
    }
    // endpoints behavior
    let n = set.homoclinic.len();
    if n >= 2 {
        for idx in [0, 1, n - 2, n - 1] {
            let [a, k] = set.homoclinic[idx];
            println!("  HC[{idx}] a={a:.5} k={k:.5}  (a*y_r = {:.5}, k_h = {:.5})", a * 4.0, filippov_boost::singularities::hopf_gain(a, 1.0, 4.0));
        }
    }
}
