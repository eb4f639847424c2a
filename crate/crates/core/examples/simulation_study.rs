// A small Monte Carlo study: bias, variance, MSE and coverage for the
// identity link.

use cure_npmle::simulate::{run, SimulationScenario};

fn main() -> cure_npmle::Result<()> {
    let mut scenario = SimulationScenario::targeted(200, 0.4, 0.4);
    scenario.reps = 100;
    scenario.seed = 2024;

    let out = run(&scenario, None)?;
    let r = &out.report;
    println!(
        "alpha = {:.4}, lambda = {:.4}, E[cure] = {:.3}, E[cens] = {:.3}, realized cens = {:.3}",
        r.design.alpha, r.design.lambda_cens, r.design.expected_cure, r.design.expected_cens, r.mean_censored_fraction
    );
    println!("{} of {} replications used", r.used, r.reps);
    println!("{:<8} {:>9} {:>9} {:>9} {:>7}", "param", "bias", "VAR", "MSE", "COV");
    for p in &r.parameters {
        println!("{:<8} {:>9.4} {:>9.4} {:>9.4} {:>7.3}", p.name, p.bias, p.var, p.mse, p.cov);
    }
    let c = &r.cure_probability;
    println!("p(x) coverage, all levels: plain {:.3}, logit {:.3}", c.mean_cov, c.mean_cov_logit);
    println!("p(x) coverage, outer 10:   plain {:.3}, logit {:.3}", c.outer_cov, c.outer_cov_logit);
    let v = &r.variance_calibration;
    println!(
        "variance of gamma: empirical {:.4?}, estimated {:.4?}",
        v.empirical_var_gamma, v.mean_estimated_var_gamma
    );
    println!("variance of theta: empirical {:.4}, estimated {:.4}", v.empirical_var_theta, v.mean_estimated_var_theta);
    Ok(())
}
