// Write a sample to CSV, read it back, and show a validation error.

use cure_npmle::simulate::{generate, replication_rng, Design};
use cure_npmle::{LinkModel, SurvivalSample, TauPolicy};

fn main() -> cure_npmle::Result<()> {
    let design = Design::new(LinkModel::Cox, &[-2.0, 1.0], 0.1, 0.0, 1.0, 1.0 / 12.0);
    let sample = generate(&design, 20, &mut replication_rng(2, 0))?;

    let mut buf = Vec::new();
    sample.write_csv(&mut buf)?;
    let text = String::from_utf8(buf).expect("utf-8");
    print!("{}", text.lines().take(4).map(|l| format!("{l}\n")).collect::<String>());

    let back = SurvivalSample::from_csv_reader(text.as_bytes(), TauPolicy::Auto)?;
    println!("read back {} rows, identical = {}", back.len(), back.observations() == sample.observations());

    let bad = "time,status,x1\n1.0,1,0.5\n2.0,yes,0.1\n";
    match SurvivalSample::from_csv_reader(bad.as_bytes(), TauPolicy::Auto) {
        Err(e) => println!("rejected: {e} (kind {}, row {:?})", e.kind(), e.row()),
        Ok(_) => println!("unexpectedly accepted"),
    }
    Ok(())
}
