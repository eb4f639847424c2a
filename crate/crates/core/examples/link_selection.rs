// Rank candidate links by likelihood on data generated under `sin(s⁴)`.

use cure_npmle::simulate::{generate, replication_rng, Design};
use cure_npmle::{compare_links, FitOptions, LinkModel, TauPolicy};

fn main() -> cure_npmle::Result<()> {
    let design = Design::new(LinkModel::SinPoly(4), &[-2.0, 1.0], 0.1, 0.0, 0.5, 1.0 / 12.0);
    let sample = generate(&design, 300, &mut replication_rng(1, 0))?.with_tau(TauPolicy::Auto)?;
    let links: Vec<LinkModel> = (1..=4).map(LinkModel::Poly).chain((1..=4).map(LinkModel::SinPoly)).collect();
    let options = FitOptions { multistart: 20, ..FitOptions::default() };

    println!("{:<10} {:>12} {:>12} {:>9} {:>4} {:>4}", "link", "PLL", "FLL", "converged", "PLL#", "FLL#");
    for row in compare_links(&sample, &links, &options) {
        println!(
            "{:<10} {:>12.3} {:>12.3} {:>9} {:>4} {:>4}",
            row.link.to_string(),
            row.pll.unwrap_or(f64::NAN),
            row.fll.unwrap_or(f64::NAN),
            row.converged,
            row.rank_pll.map_or("-".into(), |r| r.to_string()),
            row.rank_fll.map_or("-".into(), |r| r.to_string()),
        );
    }
    Ok(())
}
