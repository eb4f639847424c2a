// Fit the identity-link model to a simulated sample and print the estimates
// with their standard errors and intervals.

use cure_npmle::simulate::{generate, replication_rng, Design};
use cure_npmle::{fit, infer, FitOptions, LinkModel, TauPolicy};

fn main() -> cure_npmle::Result<()> {
    let design = Design::new(LinkModel::Cox, &[-2.0, 1.0], 0.1, -0.8, 0.5, 1.0 / 12.0);
    let sample = generate(&design, 600, &mut replication_rng(11, 0))?.with_tau(TauPolicy::Auto)?;
    println!("n = {}, events = {}, tau = {:.4}", sample.len(), sample.n_events(), sample.tau());

    let result = fit(&sample, &LinkModel::Cox, &FitOptions::default())?;
    println!(
        "converged = {} after {} iterations, |score| = {:.2e}",
        result.converged, result.iterations, result.score_norm
    );
    println!("PLL = {:.4}, FLL = {:.4}", result.pll, result.fll);

    let inf = infer(&sample, &LinkModel::Cox, &result, 0.95)?;
    for (j, (g, ci)) in result.gamma_hat.iter().zip(&inf.gamma_ci).enumerate() {
        println!("gamma{} = {:8.4}  se {:.4}  95% CI ({:.4}, {:.4})", j + 1, g, inf.se_gamma[j], ci.0, ci.1);
    }
    println!(
        "theta  = {:8.4}  se {:.4}  95% CI ({:.4}, {:.4})",
        result.theta_hat, inf.se_theta, inf.theta_ci.0, inf.theta_ci.1
    );
    println!("F_hat has {} jumps, total mass {}", result.f_hat.jump_times().len(), result.f_hat.total());
    Ok(())
}
