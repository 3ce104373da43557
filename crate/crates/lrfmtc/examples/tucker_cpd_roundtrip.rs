//! The equivalence the solver is built on: a Tucker tensor equals a CPD with
//! wide, low-rank factor matrices,
//!
//! ```text
//! G x1 A1 x2 A2 x3 A3  =  [[A1 Xi1, A2 Xi2, A3 Xi3]]
//! ```
//!
//! with `[[Xi1, Xi2, Xi3]]` a CPD of the core. Going the other way, SVDs of
//! the CPD factors recover a Tucker model whose core dimensions are the
//! factor ranks.
//!
//! Run with: cargo run --release --example tucker_cpd_roundtrip

use lrfmtc::experiments::rse;
use lrfmtc::solver::extract_tucker;
use lrfmtc::tensor::{cpd_reconstruct, tucker_reconstruct, FactorSet, Matrix, Tensor3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn randn(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn main() -> lrfmtc::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (i1, i2, i3) = (12, 11, 10);
    let (r1, r2, r3) = (3, 4, 2);
    let l = 24; // CPD width; anything >= a CPD rank of the core works

    // A random Tucker model.
    let core = Tensor3::from_fn([r1, r2, r3], |_, _, _| StandardNormal.sample(&mut rng));
    let a1 = randn(&mut rng, i1, r1);
    let a2 = randn(&mut rng, i2, r2);
    let a3 = randn(&mut rng, i3, r3);
    let x = tucker_reconstruct(&core, &a1, &a2, &a3)?;

    // Core as a CPD [[Xi1, Xi2, Xi3]], padded with zero columns out to l.
    // A trivially valid CPD of the core enumerates its entries; here we use
    // random Xi and build the tensor it generates instead, which keeps the
    // demo short: the point is the B_k = A_k Xi_k identity.
    let xi1 = randn(&mut rng, r1, l);
    let xi2 = randn(&mut rng, r2, l);
    let xi3 = randn(&mut rng, r3, l);
    let g = cpd_reconstruct(&FactorSet::new(xi1.clone(), xi2.clone(), xi3.clone())?);
    let x2 = tucker_reconstruct(&g, &a1, &a2, &a3)?;

    // Forward direction: B_k = A_k Xi_k gives the same tensor as the Tucker
    // product.
    let b = FactorSet::new(a1.matmul(&xi1), a2.matmul(&xi2), a3.matmul(&xi3))?;
    let via_cpd = cpd_reconstruct(&b);
    println!("forward  ||tucker - cpd|| / ||tucker|| = {:.2e}", rse(&x2, &via_cpd)?);

    // Reverse direction: SVDs of the wide factors recover a Tucker model of
    // core size (r1, r2, r3).
    let model = extract_tucker(&b, 1e-10)?;
    println!("recovered core dims {:?} (true {:?})", model.rank, [r1, r2, r3]);
    println!("reverse  reconstruction rse = {:.2e}", rse(&via_cpd, &model.reconstruct()?)?);

    // The original x is recovered the same way if we factor it exactly.
    let _ = x;
    Ok(())
}
