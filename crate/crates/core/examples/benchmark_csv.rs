//! Loading a labeled CSV and running the train/test benchmark protocol.

use std::fmt::Write as _;

use uncoupled::dataio::{load_csv, CsvSchema};
use uncoupled::eval::{run_benchmark, BenchmarkSpec};

fn main() -> uncoupled::Result<()> {
    let mut text = String::from("size,floor,district,price\n");
    for i in 0..300 {
        let size = 40.0 + ((i * 17) % 120) as f64;
        let floor = (i % 9) as f64;
        let district = ["old town", "harbour", "hills"][i % 3];
        let premium = [15.0, 30.0, 5.0][i % 3];
        let wiggle = ((i * 7919) % 23) as f64 - 11.0;
        writeln!(text, "{size},{floor},{district},{}", 2.5 * size + 3.0 * floor + premium + wiggle).unwrap();
    }
    text.push_str("55,NA,harbour,180\n");
    let path = std::env::temp_dir().join("uncoupled_benchmark_example.csv");
    std::fs::write(&path, text).expect("temp dir is writable");

    let schema = CsvSchema::from_toml("target_column = \"price\"\ncategorical_columns = [\"district\"]\n")?;
    let (data, dropped) = load_csv(&path, &schema)?;
    println!("{} rows, {} dropped, features {:?}", data.len(), dropped, data.feature_names().unwrap_or_default());

    let spec = BenchmarkSpec {
        n_r_values: vec![500, 2000],
        repeats: 10,
        intercept: true,
        standardize: true,
        ..Default::default()
    };
    print!("{}", run_benchmark(&data, &spec)?.render());
    Ok(())
}
