// Cure probabilities along the range of the first covariate, with plain and
// logit-scale intervals.

use cure_npmle::simulate::{generate, replication_rng, Design};
use cure_npmle::{fit, FitOptions, Inference, LinkModel, TauPolicy};

fn main() -> cure_npmle::Result<()> {
    let design = Design::new(LinkModel::Cox, &[-2.0, 1.0], 0.1, 0.0, 1.0, 1.0 / 12.0);
    let sample = generate(&design, 400, &mut replication_rng(3, 0))?.with_tau(TauPolicy::Auto)?;
    let result = fit(&sample, &LinkModel::Cox, &FitOptions::default())?;
    let inference = Inference::new(&sample, &LinkModel::Cox, &result)?;

    println!("{:>5} {:>7} {:>7} {:>19} {:>19}", "x1", "p", "p_hat", "plain CI", "logit CI");
    for k in [1, 5, 25, 50, 75, 95, 99] {
        let x = design.grid_point(k);
        let r = inference.cure_probability(&x, 0.95)?;
        println!(
            "{:5.2} {:7.4} {:7.4}  ({:7.4}, {:7.4})  ({:7.4}, {:7.4})",
            x[0],
            design.cure_probability(&x),
            r.p_hat,
            r.ci.0,
            r.ci.1,
            r.ci_logit.0,
            r.ci_logit.1
        );
    }
    Ok(())
}
