// Solve for the covariate shift and censoring rate that give target cure
// and censoring proportions.

use cure_npmle::simulate::{calibrate, SimulationScenario};
use cure_npmle::LinkModel;

fn main() -> cure_npmle::Result<()> {
    for link in [LinkModel::Cox, LinkModel::Poly(3), LinkModel::Sin] {
        for (cure, cens) in [(0.1, 0.2), (0.2, 0.4), (0.4, 0.6)] {
            let mut scenario = SimulationScenario::targeted(100, cure, cens);
            scenario.link_kind = link;
            match calibrate(&scenario) {
                Ok(d) => println!(
                    "{link:<7} cure {cure:.2} cens {cens:.2}: alpha = {:8.4}, lambda = {:8.4}  (E[p] = {:.4}, P(cens) = {:.4})",
                    d.alpha, d.lambda_cens, d.expected_cure, d.expected_cens
                ),
                Err(e) => println!("{link:<7} cure {cure:.2} cens {cens:.2}: {e}"),
            }
        }
    }
    Ok(())
}
