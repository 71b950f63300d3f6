use proptest::prelude::*;
use teleop_core::signal::{
    envelope, lowpass_filter, median_filter, EmgSample, EnvelopeFilter, FilterConfig,
};

const RATE: f64 = 100.0;

fn stream(rows: &[Vec<f64>]) -> Vec<EmgSample<f64>> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| EmgSample::new(i as f64 / RATE, r.clone()))
        .collect()
}

fn cfg(lowpass_n: usize, median_n: usize) -> FilterConfig<f64> {
    FilterConfig {
        sample_rate_hz: RATE,
        lowpass_window_s: lowpass_n as f64 / RATE,
        median_window_s: median_n as f64 / RATE,
        rectify: false,
        ..FilterConfig::default()
    }
}

/// Trailing window ending at `i` (partial during warm-up).
fn window(xs: &[f64], i: usize, n: usize) -> &[f64] {
    &xs[(i + 1).saturating_sub(n)..=i]
}

fn rows_strategy(channels: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-5.0f64..5.0, channels), 1..120)
}

proptest! {
    #[test]
    fn constant_input_is_returned_exactly(c in -1e3f64..1e3, len in 1usize..200, n in 1usize..40, m in 1usize..40) {
        let rows = vec![vec![c]; len];
        let lp = lowpass_filter(&stream(&rows), &cfg(n, m)).unwrap();
        prop_assert!(lp.iter().all(|s| s.channels[0] == c));
        let med = median_filter(&vec![c; len], m as f64 / RATE, RATE).unwrap();
        prop_assert!(med.iter().all(|&v| v == c));
    }

    #[test]
    fn outputs_stay_inside_their_window(rows in rows_strategy(1), n in 1usize..30, m in 1usize..30) {
        let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let lp = lowpass_filter(&stream(&rows), &cfg(n, m)).unwrap();
        let med = median_filter(&xs, m as f64 / RATE, RATE).unwrap();
        for i in 0..xs.len() {
            let w = window(&xs, i, n);
            let (lo, hi) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            prop_assert!(lp[i].channels[0] >= lo && lp[i].channels[0] <= hi);
            let w = window(&xs, i, m);
            let (lo, hi) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            prop_assert!(med[i] >= lo && med[i] <= hi);
        }
    }

    #[test]
    fn lowpass_matches_direct_window_mean(rows in rows_strategy(2), n in 1usize..30) {
        let lp = lowpass_filter(&stream(&rows), &cfg(n, 1)).unwrap();
        for ch in 0..2 {
            let xs: Vec<f64> = rows.iter().map(|r| r[ch]).collect();
            for (i, out) in lp.iter().enumerate() {
                let w = window(&xs, i, n);
                let mean = w.iter().sum::<f64>() / w.len() as f64;
                prop_assert!((out.channels[ch] - mean).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn future_samples_do_not_change_the_past(rows in rows_strategy(2), n in 1usize..30, cut in 0usize..120, junk in -50.0f64..50.0) {
        let cut = cut.min(rows.len());
        let mut mutated = rows.clone();
        for r in &mut mutated[cut..] {
            r.iter_mut().for_each(|v| *v = junk);
        }
        let c = FilterConfig { rectify: true, ..cfg(n, 3) };
        let a = envelope(&stream(&rows), &c).unwrap();
        let b = envelope(&stream(&mutated), &c).unwrap();
        prop_assert_eq!(&a[..cut], &b[..cut]);
        let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let ys: Vec<f64> = mutated.iter().map(|r| r[0]).collect();
        let ma = median_filter(&xs, 0.05, RATE).unwrap();
        let mb = median_filter(&ys, 0.05, RATE).unwrap();
        prop_assert_eq!(&ma[..cut], &mb[..cut]);
    }

    #[test]
    fn streaming_equals_batch_bit_for_bit(rows in rows_strategy(3), n in 1usize..30) {
        let c = FilterConfig { rectify: true, ..cfg(n, 1) };
        let s = stream(&rows);
        let batch = envelope(&s, &c).unwrap();
        let again = envelope(&s, &c).unwrap();
        prop_assert_eq!(&batch, &again);
        let mut f = EnvelopeFilter::new(c, 3).unwrap();
        for (sample, b) in s.iter().zip(&batch) {
            prop_assert_eq!(&f.push(sample).unwrap(), &b.channels);
        }
    }
}

#[test]
fn rectified_envelope_of_square_wave() {
    // ±1 alternating: rectified it is constant 1
    let rows: Vec<Vec<f64>> = (0..50)
        .map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }])
        .collect();
    let c = FilterConfig {
        rectify: true,
        ..cfg(10, 1)
    };
    assert!(envelope(&stream(&rows), &c)
        .unwrap()
        .iter()
        .all(|s| s.channels[0] == 1.0));
}

#[test]
fn jittered_timestamps_are_rejected() {
    let mut s = stream(&vec![vec![0.0]; 10]);
    s[5].t += 0.5 / RATE;
    let e = lowpass_filter(&s, &cfg(4, 1)).unwrap_err();
    assert_eq!(e.kind(), "sampling");
}

#[test]
fn f32_pipeline_agrees_with_f64() {
    let rows: Vec<Vec<f64>> = (0..80)
        .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()])
        .collect();
    let c64 = FilterConfig {
        rectify: true,
        ..cfg(8, 1)
    };
    let c32 = FilterConfig::<f32> {
        sample_rate_hz: RATE as f32,
        lowpass_window_s: 0.08,
        median_window_s: 0.01,
        rectify: true,
        lowpass_cutoff_hz: 200.0,
    };
    let s32: Vec<EmgSample<f32>> = stream(&rows)
        .iter()
        .map(|s| EmgSample::new(s.t as f32, s.channels.iter().map(|&v| v as f32).collect()))
        .collect();
    let a = envelope(&stream(&rows), &c64).unwrap();
    let b = envelope(&s32, &c32).unwrap();
    for (x, y) in a.iter().zip(&b) {
        for (&u, &v) in x.channels.iter().zip(&y.channels) {
            approx::assert_abs_diff_eq!(u, v as f64, epsilon = 1e-5);
        }
    }
}
