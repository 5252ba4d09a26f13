//! Store-level quantization behavior: storage accounting, idempotence,
//! the projection error bound and inference on decoded weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tdp_core::net::{canonical_network, infer_batch};
use tdp_core::quant::{dequantize_infer, quantize_store, Pow2Codebook};
use tdp_core::tensor::Tensor3;
use tdp_core::weights::{LayerWeights, WeightStore};
use tdp_core::Error;

#[test]
fn canonical_store_compresses_by_exactly_four() {
    let net = canonical_network();
    let mut rng = ChaCha8Rng::seed_from_u64(201);
    let store = WeightStore::random(&net, &mut rng);
    let (qstore, reports) = quantize_store(&net, &store).unwrap();

    assert_eq!(store.float_payload_bytes(), 153_612);
    assert_eq!(qstore.quantized_payload_bytes(), 38_403);
    assert_eq!(qstore.stored_payload_bytes(), 38_403);
    assert_eq!(
        store.float_payload_bytes() as f64 / qstore.stored_payload_bytes() as f64,
        4.0
    );
    let total: u64 = reports.iter().map(|r| r.bytes_after).sum();
    assert_eq!(total, 38_403);
}

#[test]
fn requantization_is_identity() {
    let net = canonical_network();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let store = WeightStore::random(&net, &mut rng);
    let (once, _) = quantize_store(&net, &store).unwrap();
    let (twice, reports) = quantize_store(&net, &once).unwrap();
    assert_eq!(once, twice);
    assert!(reports.iter().all(|r| r.max_abs_error == 0.0));
}

#[test]
fn all_zero_layer_degenerates_without_error() {
    let net = canonical_network();
    let store = WeightStore::zeros(&net);
    let (qstore, reports) = quantize_store(&net, &store).unwrap();
    assert!(reports.iter().all(|r| r.max_abs_error == 0.0));
    for layer in &qstore.layers {
        let (weights, bias) = layer.decode();
        assert!(weights.iter().chain(&bias).all(|&v| v == 0.0));
    }
    // A zero-code store still classifies; everything collapses to the
    // logistic midpoint.
    let input = Tensor3::zeros(24, 64, 1);
    assert_eq!(dequantize_infer(&net, &qstore, &input).unwrap(), 0.5);
}

#[test]
fn projection_error_is_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(203);
    for _ in 0..200 {
        let max_abs: f32 = rng.gen_range(0.01..10.0);
        let book = Pow2Codebook::fit(max_abs);
        let n1_half = ((book.n1 - 1) as f64).exp2() as f32;
        for _ in 0..500 {
            let w = rng.gen_range(-max_abs..max_abs);
            let q = book.quantize(w);
            let bound = (w.abs() / 3.0).max(n1_half);
            assert!(
                (w - q).abs() <= bound + f32::EPSILON,
                "w {w}, q {q}, bound {bound}"
            );
        }
    }
}

#[test]
fn decoded_values_are_zero_or_signed_powers_of_two() {
    let net = canonical_network();
    let mut rng = ChaCha8Rng::seed_from_u64(204);
    let store = WeightStore::random(&net, &mut rng);
    let (qstore, _) = quantize_store(&net, &store).unwrap();
    for layer in &qstore.layers {
        let (weights, bias) = layer.decode();
        for v in weights.iter().chain(&bias) {
            if *v == 0.0 {
                continue;
            }
            let log = v.abs().log2();
            assert_eq!(log, log.round(), "{v} is not a power of two");
        }
    }
}

#[test]
fn quantized_inference_equals_inference_on_decoded_floats() {
    let net = canonical_network();
    let mut rng = ChaCha8Rng::seed_from_u64(205);
    let store = WeightStore::random(&net, &mut rng);
    let (qstore, _) = quantize_store(&net, &store).unwrap();
    let decoded = WeightStore {
        layers: qstore
            .layers
            .iter()
            .map(|l| {
                let (weights, bias) = l.decode();
                LayerWeights::Float { weights, bias }
            })
            .collect(),
    };
    let input = Tensor3::from_vec(
        24,
        64,
        1,
        (0..24 * 64).map(|_| rng.gen_range(-2.0..2.0)).collect(),
    )
    .unwrap();
    let quantized = dequantize_infer(&net, &qstore, &input).unwrap();
    let float = infer_batch(&net, &decoded, &input).unwrap();
    assert_eq!(quantized, float);
}

#[test]
fn corrupt_code_byte_is_a_format_error() {
    let net = canonical_network();
    let mut rng = ChaCha8Rng::seed_from_u64(206);
    let store = WeightStore::random(&net, &mut rng);
    let (mut qstore, _) = quantize_store(&net, &store).unwrap();
    if let LayerWeights::Quantized { weight_codes, .. } = &mut qstore.layers[0] {
        weight_codes[5] = 0x38; // reserved bits set
    }
    let input = Tensor3::zeros(24, 64, 1);
    assert!(matches!(
        dequantize_infer(&net, &qstore, &input),
        Err(Error::Format(_))
    ));
}
