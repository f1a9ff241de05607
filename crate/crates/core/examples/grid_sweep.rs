//! Config-driven sweep over the penalty weight and exponent, written as JSON lines.

use pllac::data::write_labeled_csv;
use pllac::harness::{parse_pairs, run_grid, write_epoch_lines, GridSpec, JsonLines, TrialKind};
use pllac::synth::BlobSpec;

fn main() -> pllac::Result<()> {
    let dir = std::env::temp_dir().join("pllac_grid_example");
    std::fs::create_dir_all(&dir).map_err(|source| pllac::Error::Io { path: dir.clone(), source })?;

    let spec = BlobSpec { radius: 4.0, ac_center: vec![6.5, 0.0], ..Default::default() };
    let data = spec.labeled(2000, 0)?;
    let names: Vec<String> = ["a", "b", "c", "new"].map(String::from).to_vec();
    let csv = dir.join("blobs.csv");
    write_labeled_csv(&csv, data.features.view(), &data.labels, &names)?;

    let text = format!(
        "data = {}\nac_class = new\nlr = 0.01\nepochs = 30\ntrials = 2\nlambda = 0, 0.5, 1, 2\nt = 1, 2\n",
        csv.display()
    );
    let pairs: Vec<(String, String)> = parse_pairs(&text)?.into_iter().map(|(k, v, _)| (k, v)).collect();
    let grid = GridSpec::load(None, &pairs)?;

    let mut cells = JsonLines::create(dir.join("cells.jsonl"))?;
    let mut epochs = JsonLines::create(dir.join("epochs.jsonl"))?;
    run_grid(&grid, TrialKind::Pllac, |summary, results| {
        let acc = summary.aggregate.accuracy.map_or(f64::NAN, |s| s.mean);
        println!("lambda {:<4} t {}  accuracy {acc:.3}", summary.lambda, summary.t);
        cells.write(summary)?;
        write_epoch_lines(&mut epochs, summary.cell, results)
    })?;
    println!("results in {}", dir.display());
    Ok(())
}
