use cascade_lab::rng::{normal_cdf, normal_quantile};

fn main() {
    for p in [0.975f64, 0.6, 0.84134474606854293, 0.9999, 1e-9, 0.3] {
        println!("q({p}) = {:.17e}", normal_quantile(p));
    }
    println!("cdf(1.959963984540054) = {:.17}", normal_cdf(1.959963984540054));
}
