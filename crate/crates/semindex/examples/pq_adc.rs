//! Product quantization and asymmetric distance computation: trains an
//! 8-byte codebook, encodes a database, and compares lookup-table distances
//! against exact reconstruction distances.
//!
//! ```sh
//! cargo run --example pq_adc
//! ```

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use semindex::math::sq_l2;
use semindex::quant::{adc_distance, adc_tables, decode, encode, train_pq, Points};

fn main() -> anyhow::Result<()> {
    let (n, d, m, k_bits) = (4000usize, 64usize, 8usize, 8u32);
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let data: Vec<f32> = (0..n * d).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
    let points = Points::new(d, &data);

    let codebook = train_pq(&points, m, k_bits, 1)?;
    println!(
        "trained {} sub-codebooks of {} codewords each; codes are {} bytes",
        codebook.m,
        codebook.n_codes(),
        codebook.m
    );

    let codes: Vec<Vec<u8>> = (0..n)
        .map(|i| encode(&codebook, points.row(i)))
        .collect::<Result<_, _>>()?;
    let distortion: f64 = (0..n)
        .map(|i| sq_l2(points.row(i), &decode(&codebook, &codes[i])))
        .sum::<f64>()
        / n as f64;
    println!("mean squared reconstruction error: {distortion:.4}");

    // One table build per query, then each distance is m lookups.
    let query: Vec<f32> = (0..d).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
    let tables = adc_tables(&codebook, &query)?;
    let mut max_rel = 0.0f64;
    for code in codes.iter().take(1000) {
        let fast = adc_distance(&tables, code);
        let exact = sq_l2(&query, &decode(&codebook, code));
        max_rel = max_rel.max((fast - exact).abs() / exact.max(1e-9));
    }
    println!("ADC vs reconstruction distance, max relative error over 1000 codes: {max_rel:.2e}");

    // The nearest code under ADC is the nearest reconstruction.
    let best_adc = (0..n)
        .min_by(|&a, &b| adc_distance(&tables, &codes[a]).total_cmp(&adc_distance(&tables, &codes[b])))
        .unwrap();
    let best_exact = (0..n)
        .min_by(|&a, &b| {
            sq_l2(&query, &decode(&codebook, &codes[a]))
                .total_cmp(&sq_l2(&query, &decode(&codebook, &codes[b])))
        })
        .unwrap();
    println!("nearest item by ADC = {best_adc}, by exact reconstruction = {best_exact}");
    assert_eq!(best_adc, best_exact);
    Ok(())
}
