// Moving the cure threshold beyond the last event leaves the fit unchanged.

use cure_npmle::simulate::{generate, replication_rng, Design};
use cure_npmle::{fit, FitOptions, LinkModel, TauPolicy};

fn main() -> cure_npmle::Result<()> {
    let design = Design::new(LinkModel::Cox, &[-2.0, 1.0], 0.1, -1.0, 1.0, 1.0 / 12.0);
    let sample = generate(&design, 200, &mut replication_rng(5, 0))?;
    let last = sample.last_event_time();
    for tau in [TauPolicy::Auto, TauPolicy::Fixed(last + 0.1), TauPolicy::Fixed(last + 100.0)] {
        let s = sample.with_tau(tau)?;
        let f = fit(&s, &LinkModel::Cox, &FitOptions::default())?;
        println!(
            "tau = {:>9.4}: gamma = ({:.12}, {:.12}), theta = {:.12}, PLL = {:.10}",
            s.tau(),
            f.gamma_hat[0],
            f.gamma_hat[1],
            f.theta_hat,
            f.pll
        );
    }
    Ok(())
}
