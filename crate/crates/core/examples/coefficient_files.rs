//! Random `H^s` data written to the binary coefficient format, read back, and
//! summarized by the norm report.

use logse::cli::{cmd_norms, NormsOptions};
use logse::initdata::{random_hs_coeffs, RandomHsParams};
use logse::spectral::{read_coefficients, write_coefficients, write_coefficients_csv};

fn main() -> logse::Result<()> {
    let params = RandomHsParams {
        s: 0.8,
        beta: 0.51,
        cutoff: 10_000,
        seed: 42,
    };
    let coeffs = random_hs_coeffs(&params)?;
    let dir = std::env::temp_dir().join("logse-coefficients");
    let bin = dir.join("example1.bin");
    write_coefficients(&bin, &coeffs, params.seed, params.s, params.beta)?;
    write_coefficients_csv(&dir.join("example1.csv"), &coeffs.project(8)?)?;

    let (header, back) = read_coefficients(&bin)?;
    assert_eq!(back, coeffs);
    println!("{} bytes, header {header:?}", std::fs::metadata(&bin)?.len());

    let options = NormsOptions {
        orders: vec![0.5, 0.8],
        gagliardo_modes: 256,
        ..NormsOptions::default()
    };
    let (text, _) = cmd_norms(&bin, &options)?;
    print!("{text}");
    Ok(())
}
