//! Detection power of the depth gradient by panel length and model count,
//! at a noise level tuned to a single-panel ρ of 0.43.

use depthstrata::sim::{calibrate_noise, power_experiment, Detector, SimConfig};

fn main() -> anyhow::Result<()> {
    let base = SimConfig::reference_panel(0.08, 0.06, 0.05, 0);
    let sd = calibrate_noise(&base, 0.43, 300, 1)?;
    println!("calibrated noise_sd = {sd:.4}");
    let cfg = SimConfig { noise_sd: sd, ..base };
    let cells = power_experiment(&cfg, &[4, 10, 20], &[1, 3, 5], 300, Detector::SpearmanT, 0.05, 2)?;
    println!("{:>3} {:>3} {:>7} {:>6}", "T", "M", "rho", "power");
    for c in cells {
        println!("{:>3} {:>3} {:>7.3} {:>6.3}", c.generations, c.n_models, c.mean_rho, c.detection_rate);
    }
    Ok(())
}
