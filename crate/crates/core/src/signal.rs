//! EMG conditioning: rectification, trailing moving-average envelope and a
//! trailing median filter.
//!
//! All filters are causal and use partial windows during warm-up, so the
//! output stream always has the same length as the input. The streaming types
//! ([`MovingAverage`], [`MovingMedian`], [`EnvelopeFilter`]) are the single
//! implementation behind the batch functions, which keeps batch and
//! incremental evaluation bit-identical.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::stats;

pub const DEFAULT_CHANNELS: usize = 8;

/// One timestamped multichannel EMG reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EmgSample<T: Real> {
    pub t: T,
    pub channels: Vec<T>,
}

impl<T: Real> EmgSample<T> {
    pub fn new(t: T, channels: Vec<T>) -> Self {
        Self { t, channels }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.channels.iter().all(|c| c.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default)]
pub struct FilterConfig<T: Real> {
    pub sample_rate_hz: T,
    pub lowpass_window_s: T,
    /// Carried as metadata; the envelope is defined by the window length.
    pub lowpass_cutoff_hz: T,
    pub rectify: bool,
    pub median_window_s: T,
}

impl<T: Real> Default for FilterConfig<T> {
    fn default() -> Self {
        Self {
            sample_rate_hz: T::lit(200.0),
            lowpass_window_s: T::lit(0.5),
            lowpass_cutoff_hz: T::lit(200.0),
            rectify: true,
            median_window_s: T::lit(0.2),
        }
    }
}

impl<T: Real> FilterConfig<T> {
    pub fn with_rate(sample_rate_hz: T) -> Self {
        Self {
            sample_rate_hz,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sample_rate_hz", self.sample_rate_hz),
            ("lowpass_window_s", self.lowpass_window_s),
            ("lowpass_cutoff_hz", self.lowpass_cutoff_hz),
            ("median_window_s", self.median_window_s),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        self.lowpass_len()?;
        self.median_len()?;
        Ok(())
    }

    pub fn lowpass_len(&self) -> Result<usize> {
        window_len(self.lowpass_window_s, self.sample_rate_hz)
    }

    pub fn median_len(&self) -> Result<usize> {
        window_len(self.median_window_s, self.sample_rate_hz)
    }
}

/// Number of samples covered by `window_s` at `sample_rate_hz` (rounded).
pub fn window_len<T: Real>(window_s: T, sample_rate_hz: T) -> Result<usize> {
    if !(window_s > T::zero()) || !(sample_rate_hz > T::zero()) {
        return Err(Error::InvalidConfig(format!(
            "window {window_s} s at {sample_rate_hz} Hz must both be positive"
        )));
    }
    let n = (window_s * sample_rate_hz).round();
    match n.to_usize() {
        Some(n) if n >= 1 => Ok(n),
        _ => Err(Error::InvalidConfig(format!(
            "window {window_s} s at {sample_rate_hz} Hz covers less than one sample"
        ))),
    }
}

/// Replaces every channel value by its absolute value.
pub fn rectify<T: Real>(stream: &[EmgSample<T>]) -> Vec<EmgSample<T>> {
    stream
        .iter()
        .map(|s| EmgSample::new(s.t, s.channels.iter().map(|c| c.abs()).collect()))
        .collect()
}

/// Checks that consecutive timestamps are `1 / rate` apart within 1%.
pub fn check_uniform<T: Real>(stream: &[EmgSample<T>], sample_rate_hz: T) -> Result<()> {
    let expected = T::one() / sample_rate_hz;
    let tol = expected * T::lit(0.01);
    for (i, pair) in stream.windows(2).enumerate() {
        let step = pair[1].t - pair[0].t;
        if !((step - expected).abs() <= tol) {
            return Err(Error::NonUniformSampling {
                index: i + 1,
                t: pair[1].t.to_f64_lossy(),
                step: step.to_f64_lossy(),
                expected: expected.to_f64_lossy(),
            });
        }
    }
    Ok(())
}

/// Trailing moving average with partial-window warm-up.
#[derive(Debug, Clone)]
pub struct MovingAverage<T> {
    len: usize,
    buf: VecDeque<T>,
}

impl<T: Real> MovingAverage<T> {
    pub fn new(len: usize) -> Self {
        assert!(
            len >= 1,
            "moving average window must cover at least one sample"
        );
        Self {
            len,
            buf: VecDeque::with_capacity(len),
        }
    }

    pub fn push(&mut self, x: T) -> T {
        if self.buf.len() == self.len {
            self.buf.pop_front();
        }
        self.buf.push_back(x);
        let (a, b) = self.buf.as_slices();
        stats::mean_iter(a.iter().chain(b.iter()).copied()).expect("non-empty window")
    }

    pub fn reset(&mut self) {
        self.buf.clear();
    }
}

/// Trailing median with partial-window warm-up.
#[derive(Debug, Clone)]
pub struct MovingMedian<T> {
    len: usize,
    buf: VecDeque<T>,
    scratch: Vec<T>,
}

impl<T: Real> MovingMedian<T> {
    pub fn new(len: usize) -> Self {
        assert!(len >= 1, "median window must cover at least one sample");
        Self {
            len,
            buf: VecDeque::with_capacity(len),
            scratch: Vec::with_capacity(len),
        }
    }

    pub fn push(&mut self, x: T) -> T {
        if self.buf.len() == self.len {
            self.buf.pop_front();
        }
        self.buf.push_back(x);
        self.scratch.clear();
        self.scratch.extend(self.buf.iter().copied());
        stats::median(&self.scratch).expect("non-empty window")
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn reset(&mut self) {
        self.buf.clear();
    }
}

/// Per-channel moving average over a stream (no rectification).
pub fn lowpass_filter<T: Real>(
    stream: &[EmgSample<T>],
    cfg: &FilterConfig<T>,
) -> Result<Vec<EmgSample<T>>> {
    if stream.is_empty() {
        return Ok(Vec::new());
    }
    cfg.validate()?;
    check_uniform(stream, cfg.sample_rate_hz)?;
    let len = cfg.lowpass_len()?;
    let nch = stream[0].channels.len();
    let mut filters: Vec<MovingAverage<T>> = (0..nch).map(|_| MovingAverage::new(len)).collect();
    stream
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if s.channels.len() != nch {
                return Err(Error::AtSample {
                    index: i,
                    source: Box::new(Error::dim("channel count", nch, s.channels.len())),
                });
            }
            let out = filters
                .iter_mut()
                .zip(&s.channels)
                .map(|(f, &x)| f.push(x))
                .collect();
            Ok(EmgSample::new(s.t, out))
        })
        .collect()
}

/// Trailing median of a scalar sequence.
pub fn median_filter<T: Real>(values: &[T], window_s: T, sample_rate_hz: T) -> Result<Vec<T>> {
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let len = window_len(window_s, sample_rate_hz)?;
    let mut f = MovingMedian::new(len);
    Ok(values.iter().map(|&x| f.push(x)).collect())
}

/// Streaming x̂ extractor: optional rectification followed by the moving
/// average, with the same uniform-sampling check as the batch path.
#[derive(Debug, Clone)]
pub struct EnvelopeFilter<T: Real> {
    cfg: FilterConfig<T>,
    channels: Vec<MovingAverage<T>>,
    last_t: Option<T>,
    index: usize,
}

impl<T: Real> EnvelopeFilter<T> {
    pub fn new(cfg: FilterConfig<T>, n_channels: usize) -> Result<Self> {
        cfg.validate()?;
        let len = cfg.lowpass_len()?;
        Ok(Self {
            channels: (0..n_channels).map(|_| MovingAverage::new(len)).collect(),
            cfg,
            last_t: None,
            index: 0,
        })
    }

    pub fn push(&mut self, sample: &EmgSample<T>) -> Result<Vec<T>> {
        if sample.channels.len() != self.channels.len() {
            return Err(Error::dim(
                "channel count",
                self.channels.len(),
                sample.channels.len(),
            ));
        }
        if let Some(prev) = self.last_t {
            let expected = T::one() / self.cfg.sample_rate_hz;
            let step = sample.t - prev;
            if !((step - expected).abs() <= expected * T::lit(0.01)) {
                return Err(Error::NonUniformSampling {
                    index: self.index,
                    t: sample.t.to_f64_lossy(),
                    step: step.to_f64_lossy(),
                    expected: expected.to_f64_lossy(),
                });
            }
        }
        self.last_t = Some(sample.t);
        self.index += 1;
        let rectify = self.cfg.rectify;
        Ok(self
            .channels
            .iter_mut()
            .zip(&sample.channels)
            .map(|(f, &x)| f.push(if rectify { x.abs() } else { x }))
            .collect())
    }
}

/// Batch x̂ extraction: rectify (when configured) then lowpass.
pub fn envelope<T: Real>(
    stream: &[EmgSample<T>],
    cfg: &FilterConfig<T>,
) -> Result<Vec<EmgSample<T>>> {
    if cfg.rectify {
        lowpass_filter(&rectify(stream), cfg)
    } else {
        lowpass_filter(stream, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream_of(values: &[f64], rate: f64) -> Vec<EmgSample<f64>> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| EmgSample::new(i as f64 / rate, vec![v; 8]))
            .collect()
    }

    fn cfg(rate: f64, window_samples: usize) -> FilterConfig<f64> {
        FilterConfig {
            sample_rate_hz: rate,
            lowpass_window_s: window_samples as f64 / rate,
            ..FilterConfig::default()
        }
    }

    #[test]
    fn rectify_examples() {
        let s = vec![EmgSample::new(
            0.0,
            vec![1.0, -2.0, 0.0, 3.0, -0.5, 0.0, 0.0, 0.0],
        )];
        assert_eq!(
            rectify(&s)[0].channels,
            vec![1.0, 2.0, 0.0, 3.0, 0.5, 0.0, 0.0, 0.0]
        );
        let zero = vec![EmgSample::new(0.0, vec![0.0; 8])];
        assert_eq!(rectify(&zero), zero);
        let pos = stream_of(&[0.1, 0.4, 2.0], 200.0);
        assert_eq!(rectify(&pos), pos);
    }

    #[test]
    fn lowpass_constant_is_exact() {
        let s = stream_of(&[0.1; 50], 200.0);
        let out = lowpass_filter(&s, &cfg(200.0, 7)).unwrap();
        assert!(out.iter().all(|o| o.channels.iter().all(|&c| c == 0.1)));
    }

    #[test]
    fn lowpass_impulse_with_partial_warmup() {
        let mut v = vec![0.0; 10];
        v[0] = 1.0;
        let out = lowpass_filter(&stream_of(&v, 100.0), &cfg(100.0, 5)).unwrap();
        let got: Vec<f64> = out.iter().map(|o| o.channels[0]).collect();
        let want = [1.0, 0.5, 1.0 / 3.0, 0.25, 0.2, 0.0, 0.0, 0.0, 0.0, 0.0];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-15, "{got:?}");
        }
    }

    #[test]
    fn lowpass_alternating_cancels_in_even_window() {
        let v: Vec<f64> = (0..20)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let out = lowpass_filter(&stream_of(&v, 100.0), &cfg(100.0, 4)).unwrap();
        for o in &out[3..] {
            assert_eq!(o.channels[0], 0.0);
        }
    }

    #[test]
    fn lowpass_empty_and_jitter() {
        assert!(lowpass_filter::<f64>(&[], &cfg(200.0, 5))
            .unwrap()
            .is_empty());
        let mut s = stream_of(&[1.0; 10], 200.0);
        s[6].t += 0.001; // 20% of the 5 ms step
        match lowpass_filter(&s, &cfg(200.0, 5)) {
            Err(Error::NonUniformSampling { index, t, .. }) => {
                assert_eq!(index, 6);
                assert!((t - s[6].t).abs() < 1e-15);
            }
            other => panic!("expected sampling error, got {other:?}"),
        }
        // half a percent is tolerated
        let mut ok = stream_of(&[1.0; 10], 200.0);
        ok[4].t += 0.000025;
        assert!(lowpass_filter(&ok, &cfg(200.0, 5)).is_ok());
    }

    #[test]
    fn median_examples() {
        assert_eq!(median_filter(&[2.5; 6], 0.03, 100.0).unwrap(), vec![2.5; 6]);
        assert_eq!(
            median_filter(&[0.0, 0.0, 9.0, 0.0, 0.0], 0.03, 100.0).unwrap(),
            vec![0.0, 0.0, 0.0, 0.0, 0.0]
        );
        let ramp: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let out = median_filter(&ramp, 0.03, 100.0).unwrap();
        // warm-up: [0] -> 0, [0,1] -> 0.5; afterwards delayed by one step
        assert_eq!(out[0], 0.0);
        assert_eq!(out[1], 0.5);
        for i in 2..8 {
            assert_eq!(out[i], ramp[i - 1]);
        }
        assert!(median_filter::<f64>(&[], 0.2, 200.0).unwrap().is_empty());
    }

    #[test]
    fn window_smaller_than_one_sample_is_rejected() {
        assert!(window_len(0.001, 200.0).is_err());
        assert_eq!(window_len(0.5, 200.0).unwrap(), 100);
        assert_eq!(window_len(0.2, 200.0).unwrap(), 40);
    }

    #[test]
    fn streaming_matches_batch() {
        let raw: Vec<EmgSample<f64>> = (0..300)
            .map(|i| {
                let t = i as f64 / 200.0;
                EmgSample::new(
                    t,
                    (0..8)
                        .map(|c| ((i * 7 + c * 13) % 17) as f64 - 8.0)
                        .collect(),
                )
            })
            .collect();
        let c = FilterConfig::default();
        let batch = envelope(&raw, &c).unwrap();
        let mut f = EnvelopeFilter::new(c, 8).unwrap();
        for (s, b) in raw.iter().zip(&batch) {
            assert_eq!(f.push(s).unwrap(), b.channels);
        }
    }

    #[test]
    fn works_in_f32() {
        let s: Vec<EmgSample<f32>> = (0..20)
            .map(|i| EmgSample::new(i as f32 / 200.0, vec![-0.3f32; 8]))
            .collect();
        let out = envelope(&s, &FilterConfig::<f32>::default()).unwrap();
        assert!(out.iter().all(|o| o.channels.iter().all(|&c| c == 0.3)));
    }
}
