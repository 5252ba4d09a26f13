//! Property tests over randomized inputs: chunking invariance of the
//! streaming front ends, kernel identities and quantizer laws.

use proptest::collection::vec;
use proptest::prelude::*;

use tdp_core::codetect::{detect_events, EventDetector, TriggerConfig};
use tdp_core::preprocess::Segmenter;
use tdp_core::quant::Pow2Codebook;
use tdp_core::tensor::{avg_pool, conv2d_same, relu, ConvKernel, Tensor3};

fn chunk_by<'a>(data: &'a [f32], sizes: &'a [usize]) -> impl Iterator<Item = &'a [f32]> {
    let mut offset = 0;
    let mut idx = 0;
    std::iter::from_fn(move || {
        if offset >= data.len() {
            return None;
        }
        let take = sizes[idx % sizes.len()].clamp(1, data.len() - offset);
        idx += 1;
        let piece = &data[offset..offset + take];
        offset += take;
        Some(piece)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn segmenter_ignores_chunk_boundaries(
        samples in vec(-1.0f32..1.0, 1024..6000),
        sizes in vec(1usize..2048, 1..6),
    ) {
        let mut whole = Segmenter::new();
        let expected = whole.push(&samples);

        let mut seg = Segmenter::new();
        let mut got = Vec::new();
        for piece in chunk_by(&samples, &sizes) {
            got.extend(seg.push(piece));
        }
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn trigger_ignores_chunk_boundaries(
        body in vec(-2.0f32..2.0, 500..4000),
        sizes in vec(1usize..700, 1..5),
    ) {
        let cfg = TriggerConfig {
            upper_threshold: 1.0,
            lower_threshold: -1.0,
            bias: 0.0,
            post_trigger_interval: 0.05,
            sample_rate: 1000.0,
        };
        let expected = detect_events(&body, &cfg, 1).unwrap();

        let mut detector = EventDetector::new(1, cfg).unwrap();
        let mut got = Vec::new();
        for piece in chunk_by(&body, &sizes) {
            got.extend(detector.push(piece));
        }
        got.extend(detector.finish());
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn identity_convolution_and_constant_pooling(
        data in vec(-10.0f32..10.0, 24..96),
        constant in -5.0f32..5.0,
    ) {
        let t = data.len() / 12;
        let input = Tensor3::from_vec(t, 4, 3, data[..t * 12].to_vec()).unwrap();
        let identity = {
            // 1x1 kernel mapping each channel to itself.
            let mut w = vec![0.0f32; 9];
            for c in 0..3 {
                w[c * 3 + c] = 1.0;
            }
            ConvKernel::new(1, 1, 3, 3, w, vec![0.0; 3]).unwrap()
        };
        let out = conv2d_same(&input, &identity, 1, 1).unwrap();
        prop_assert_eq!(&out, &input);

        // ReLU is idempotent.
        let rectified = relu(&input);
        prop_assert_eq!(relu(&rectified), rectified);

        // Pooling a constant tensor returns the constant.
        let filled = Tensor3::filled(t, 4, 3, constant);
        let pooled = avg_pool(&filled, t, 2).unwrap();
        for &v in pooled.data() {
            prop_assert!((v - constant).abs() <= 1e-5 * constant.abs().max(1.0));
        }
    }

    #[test]
    fn quantizer_laws(
        max_abs in 0.01f32..10.0,
        weights in vec(-12.0f32..12.0, 1..200),
    ) {
        let book = Pow2Codebook::fit(max_abs);
        let mut elements: Vec<f32> = book.magnitudes();
        elements.extend(book.magnitudes().iter().map(|m| -m));
        for &w in &weights {
            let q = book.quantize(w);
            // Idempotent projection onto the representable set.
            prop_assert_eq!(book.quantize(q), q);
            prop_assert!(elements.contains(&q));
            // No representable element is strictly closer.
            for &p in &elements {
                prop_assert!((w - p).abs() >= (w - q).abs());
            }
            // Encoding round-trips the projected value.
            prop_assert_eq!(book.decode(book.encode(w)).unwrap(), q);
        }
    }
}
