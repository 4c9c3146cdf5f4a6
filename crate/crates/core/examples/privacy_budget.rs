//! Gaussian noise calibration and budget composition.

use hiercoord::privacy::{noise_scale, privatize, KnowledgeVector, PrivacyBudget, PrivacyParams};
use hiercoord::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let params = PrivacyParams::new(1.0, 1e-5, 1.0)?;
    println!("noise std for (1, 1e-5, 1): {:.4}", noise_scale(&params));

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let k = KnowledgeVector(vec![3.0, 4.0, 0.0]);
    let noisy = privatize(&k, &params, &mut rng);
    println!("clipped to norm 1, then noised: {:?}", noisy.values());

    let mut budget = PrivacyBudget::new(1.0, 2e-6)?;
    for i in 1..=3 {
        match budget.spend(0.5, 1e-6) {
            Ok(()) => println!("event {i}: spent ({}, {:e})", budget.epsilon_spent(), budget.delta_spent()),
            Err(refusal) => println!("event {i}: refused, {refusal}"),
        }
    }
    Ok(())
}
