//! The score families: linear residual, k-NN conformalized quantile
//! regression, k-NN one-class distance and a logistic density ratio.

use cct::models::{fit_density_ratio, ScoreModelSpec, DEFAULT_L2};
use cct::scenarios::{gen_a1, gen_a3, gen_b1, Hypothesis};

fn main() -> cct::Result<()> {
    let mut rng = cct::rng::stream(5);
    let train = gen_a1(800, false, &mut rng).data;
    let probe = gen_a1(3, true, &mut rng).data;
    for spec in [ScoreModelSpec::LinearResidual, ScoreModelSpec::KnnCqr { k: 50, lo: 0.05, hi: 0.95 }] {
        let model = spec.fit(&train)?;
        println!("{spec:?}: {:?}", model.score_dataset(&probe)?);
    }

    let spatial = gen_b1(800, false, &mut rng).data;
    let one_class = ScoreModelSpec::KnnOneClass { k: 20, standardize: true }.fit(&spatial)?;
    let probe = gen_b1(3, true, &mut rng).data;
    println!("one-class distances: {:?}", one_class.score_dataset(&probe)?);

    let (d1, d2) = gen_a3(800, 800, Hypothesis::Alt, &mut rng);
    let ratio = fit_density_ratio(&d1.x, d1.response()?, &d2.x, d2.response()?, DEFAULT_L2)?;
    let x = d1.x.row(0);
    for y in [-1.0, 0.0, 1.0] {
        println!("log f2(y|x)/f1(y|x) at y = {y:+}: {:.3}", ratio.log_ratio(x, y));
    }
    Ok(())
}
