//! The seeded simulation designs and the three ways of splitting one
//! dataset into two samples.

use cct::scenarios::{gen_a1, gen_a2, gen_b1, gen_b3, gen_c3, split_rules, A2Noise, Hypothesis, SplitRule};
use cct::stats::mean;

fn main() -> cct::Result<()> {
    let mut rng = cct::rng::stream(99);
    let a1 = gen_a1(500, true, &mut rng);
    println!("A1: {} rows, {} outliers", a1.data.len(), a1.is_outlier.iter().filter(|&&o| o).count());
    let b1 = gen_b1(500, true, &mut rng);
    println!("B1: {} columns, {} outliers", b1.data.x.ncols(), b1.is_outlier.iter().filter(|&&o| o).count());
    let a2 = gen_a2(500, A2Noise::Shared, &mut rng);
    let rate = a2.violations.iter().filter(|v| v[0]).count() as f64 / 500.0;
    println!("A2: first label violates its rule in {rate:.2} of rows");

    for (name, (d1, d2)) in [
        ("B3 alt", gen_b3(500, 500, Hypothesis::Alt, &mut rng)),
        ("C3 null", gen_c3(500, 500, Hypothesis::Null, &mut rng)),
    ] {
        println!("{name}: mean responses {:.3} / {:.3}", mean(d1.response()?), mean(d2.response()?));
    }

    let (pooled, _) = gen_c3(600, 10, Hypothesis::Null, &mut rng);
    for rule in [SplitRule::Random, SplitRule::tilt_default(), SplitRule::Response] {
        let (s1, s2) = split_rules(&pooled, &rule, &mut rng)?;
        println!("{rule:?}: sizes {} and {}", s1.len(), s2.len());
    }
    Ok(())
}
