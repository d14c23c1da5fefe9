use fasth::{blocked, HouseholderChainF64, MatrixF64, SvdParamF64};
use rand::SeedableRng;

fn main() -> fasth::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let chain = HouseholderChainF64::random(256, 256, &mut rng);
    let x = MatrixF64::from_fn(256, 32, |i, j| (i + j) as f64 / 256.0);

    // Forward with block width 16, keeping the tape for the backward pass.
    let tape = blocked::forward(&chain, &x, 16)?;
    let grads = blocked::backward(&tape, &x)?; // ∂L/∂X and ∂L/∂vᵢ for L = ⟨X, output⟩

    // SVD layer: forward, backward, one gradient step.
    let p = SvdParamF64::random(256, 256, &mut rng);
    let (y, tape) = p.forward(&x, 16)?;
    let g = p.backward(&tape, &y, 16)?;
    let p = p.step(&g, 1e-3)?;
    let logdet = fasth::matops::log_abs_det(&p)?;
    println!("{} vector gradients, log|det W| = {logdet:.6}", grads.grad_vectors.len());
    Ok(())
}
