//! Synthetic two-sensor signal laboratory.
//!
//! A source is drawn as white Gaussian noise and lowpass filtered with a
//! Kaiser-windowed sinc, the second sensor is obtained by windowed-sinc
//! interpolation at the ground-truth delay `tau(n)` (evaluated per sample, so
//! piecewise-constant profiles are honoured exactly), and independent white
//! Gaussian measurement noise is added to each stream.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::csv::{fmt_num, parse_num};
use crate::error::{Error, Result};
use crate::kernel::KaiserWindow;
use crate::seed::derive_seed;

/// Half-width of the source lowpass filter (taps `-32..=32`).
pub const LOWPASS_HALF_WIDTH: usize = 32;
/// Kaiser shape of the source lowpass filter.
pub const LOWPASS_BETA: f64 = 10.0;
/// Half-width of the fractional-delay interpolation kernel.
pub const INTERP_HALF_WIDTH: usize = 32;
/// Kaiser shape of the fractional-delay interpolation kernel.
pub const INTERP_BETA: f64 = 12.0;

/// Uniformly sampled real-valued sequence. Every sample is finite.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Signal {
    samples: Vec<f64>,
}

impl Signal {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Self { samples })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            samples: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Sample at a signed index, zero outside the record.
    pub fn at_or_zero(&self, index: i64) -> f64 {
        if index < 0 {
            0.0
        } else {
            self.samples.get(index as usize).copied().unwrap_or(0.0)
        }
    }

    pub fn mean(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Empirical mean power `sum(x^2) / N`.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|v| v * v).sum::<f64>() / self.samples.len() as f64
    }

    pub fn variance(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let m = self.mean();
        self.samples.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.samples.len() as f64
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Signal::new(self.samples.iter().map(|v| v * factor).collect())
    }

    /// Writes a single `value` column with a header row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        writeln!(w, "value")?;
        for v in &self.samples {
            writeln!(w, "{}", fmt_num(*v))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut lines = BufReader::new(reader).lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != "value" {
            return Err(Error::Parse("expected header `value`".into()));
        }
        let mut samples = Vec::new();
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            samples.push(parse_num(line)?);
        }
        Signal::new(samples)
    }

    /// Raw little-endian `f64` samples preceded by a little-endian `u64` count.
    pub fn write_binary<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        w.write_all(&(self.samples.len() as u64).to_le_bytes())?;
        for v in &self.samples {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary<R: Read>(reader: R) -> Result<Self> {
        let mut r = BufReader::new(reader);
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let len = u64::from_le_bytes(word) as usize;
        let mut samples = Vec::with_capacity(len.min(1 << 24));
        for _ in 0..len {
            r.read_exact(&mut word)?;
            samples.push(f64::from_le_bytes(word));
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Parse(format!(
                "{} trailing bytes after {len} samples",
                rest.len()
            )));
        }
        Signal::new(samples)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(File::create(path)?)
    }

    pub fn save_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_binary(File::create(path)?)
    }
}

impl AsRef<[f64]> for Signal {
    fn as_ref(&self) -> &[f64] {
        &self.samples
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayStep {
    /// First sample index carrying the new delay.
    pub index: usize,
    pub delay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Constant,
    PiecewiseConstant,
}

/// Ground-truth delay `tau(n)` in samples over a record of `length` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayProfile {
    initial_delay: f64,
    steps: Vec<DelayStep>,
    length: usize,
}

impl DelayProfile {
    pub fn constant(delay: f64, length: usize) -> Result<Self> {
        Self::piecewise(delay, Vec::new(), length)
    }

    pub fn piecewise(initial_delay: f64, steps: Vec<DelayStep>, length: usize) -> Result<Self> {
        if !initial_delay.is_finite() {
            return Err(Error::invalid("initial delay must be finite"));
        }
        let mut prev: Option<usize> = None;
        for s in &steps {
            if !s.delay.is_finite() {
                return Err(Error::invalid(format!(
                    "delay at step {} is not finite",
                    s.index
                )));
            }
            if s.index >= length {
                return Err(Error::invalid(format!(
                    "step index {} outside record of length {length}",
                    s.index
                )));
            }
            if prev.is_some_and(|p| s.index <= p) {
                return Err(Error::invalid("step indices must be strictly increasing"));
            }
            prev = Some(s.index);
        }
        Ok(Self {
            initial_delay,
            steps,
            length,
        })
    }

    pub fn kind(&self) -> ProfileKind {
        if self.steps.is_empty() {
            ProfileKind::Constant
        } else {
            ProfileKind::PiecewiseConstant
        }
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0
    }

    pub fn initial_delay(&self) -> f64 {
        self.initial_delay
    }

    pub fn steps(&self) -> &[DelayStep] {
        &self.steps
    }

    pub fn delay_at(&self, n: usize) -> f64 {
        self.steps
            .iter()
            .take_while(|s| s.index <= n)
            .last()
            .map_or(self.initial_delay, |s| s.delay)
    }

    pub fn delays(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.length);
        let mut current = self.initial_delay;
        let mut steps = self.steps.iter().peekable();
        for n in 0..self.length {
            while let Some(s) = steps.next_if(|s| s.index <= n) {
                current = s.delay;
            }
            out.push(current);
        }
        out
    }

    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.initial_delay).chain(self.steps.iter().map(|s| s.delay))
    }

    pub fn min_delay(&self) -> f64 {
        self.values().fold(f64::INFINITY, f64::min)
    }

    pub fn max_delay(&self) -> f64 {
        self.values().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Checks every delay lies in `[0, k_max]`, the range a filter of order `k_max` can estimate.
    pub fn validate_for(&self, k_max: usize) -> Result<()> {
        let (lo, hi) = (self.min_delay(), self.max_delay());
        if lo < 0.0 || hi > k_max as f64 {
            return Err(Error::invalid(format!(
                "delays span [{lo}, {hi}] but must lie within [0, {k_max}]"
            )));
        }
        Ok(())
    }

    /// Per-sample `index,delay` rows with a header.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        writeln!(w, "index,delay")?;
        for (n, d) in self.delays().into_iter().enumerate() {
            writeln!(w, "{n},{}", fmt_num(d))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the per-sample form back, collapsing runs into steps.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut lines = BufReader::new(reader).lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != "index,delay" {
            return Err(Error::Parse("expected header `index,delay`".into()));
        }
        let mut delays = Vec::new();
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (idx, val) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("malformed row `{line}`")))?;
            let idx: usize = idx
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad index `{idx}`")))?;
            if idx != delays.len() {
                return Err(Error::Parse(format!(
                    "expected index {} but found {idx}",
                    delays.len()
                )));
            }
            delays.push(parse_num(val)?);
        }
        let Some(&first) = delays.first() else {
            return DelayProfile::constant(0.0, 0);
        };
        let steps = delays
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1] != w[0])
            .map(|(i, w)| DelayStep {
                index: i + 1,
                delay: w[1],
            })
            .collect();
        DelayProfile::piecewise(first, steps, delays.len())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(File::create(path)?)
    }
}

/// Two noisy sensor streams observing the same source with a relative delay.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorPair {
    /// `x(n) + eta1(n)`
    pub sensor1: Signal,
    /// `x(n - tau(n)) + eta2(n)`
    pub sensor2: Signal,
    pub profile: DelayProfile,
    /// Noise variance injected into each stream.
    pub noise_variance: f64,
    pub seed: u64,
}

/// Unit-variance Gaussian source lowpass filtered to `bandwidth` rad/sample.
pub fn generate_bandlimited_gaussian(length: usize, bandwidth: f64, seed: u64) -> Result<Signal> {
    if length == 0 {
        return Err(Error::invalid("length must be positive"));
    }
    if !(bandwidth > 0.0 && bandwidth <= std::f64::consts::PI) {
        return Err(Error::invalid(format!(
            "bandwidth {bandwidth} outside (0, pi]"
        )));
    }
    let window = KaiserWindow::new(LOWPASS_HALF_WIDTH, LOWPASS_BETA);
    let taps = window.lowpass_taps(bandwidth);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let white: Vec<f64> = (0..length + taps.len() - 1)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    // valid part of the convolution only: the filter warm-up is trimmed
    let mut shaped: Vec<f64> = white
        .windows(taps.len())
        .map(|w| w.iter().zip(taps.iter().rev()).map(|(x, h)| x * h).sum())
        .collect();
    let n = shaped.len() as f64;
    let mean = shaped.iter().sum::<f64>() / n;
    let var = shaped.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var > 0.0 {
        let scale = var.sqrt().recip();
        shaped.iter_mut().for_each(|v| *v *= scale);
    }
    Signal::new(shaped)
}

/// Resamples `input` at `n - tau(n)` with a Kaiser-windowed sinc kernel.
///
/// Unlike [`DelayProfile::validate_for`], any finite delay is accepted here,
/// including negative ones. Samples outside the record read as zero.
pub fn apply_fractional_delay(input: &Signal, profile: &DelayProfile) -> Result<Signal> {
    if input.len() != profile.len() {
        return Err(Error::invalid(format!(
            "signal length {} does not match profile length {}",
            input.len(),
            profile.len()
        )));
    }
    let window = KaiserWindow::new(INTERP_HALF_WIDTH, INTERP_BETA);
    let hw = INTERP_HALF_WIDTH as i64;
    let mut taps = Vec::with_capacity(2 * INTERP_HALF_WIDTH);
    let mut cached_frac = f64::NAN;
    let delays = profile.delays();
    let out = delays
        .iter()
        .enumerate()
        .map(|(n, &tau)| {
            let pos = n as f64 - tau;
            let base = pos.floor();
            let frac = pos - base;
            let base = base as i64;
            if frac == 0.0 {
                return input.at_or_zero(base);
            }
            if frac != cached_frac {
                // taps for m = base-hw+1 ..= base+hw, offset t = pos - m = frac + hw - 1 - j
                taps.clear();
                taps.extend(
                    (0..2 * hw).map(|j| window.interpolation_tap(frac + (hw - 1 - j) as f64)),
                );
                cached_frac = frac;
            }
            taps.iter()
                .enumerate()
                .map(|(j, h)| h * input.at_or_zero(base - hw + 1 + j as i64))
                .sum()
        })
        .collect();
    Signal::new(out)
}

/// Adds white Gaussian noise of variance `P / 10^(snr_db / 10)`, `P` being the
/// empirical mean power of `clean`. `snr_db = +inf` adds nothing.
pub fn add_noise_at_snr(clean: &Signal, snr_db: f64, seed: u64) -> Result<(Signal, f64)> {
    if clean.is_empty() {
        return Err(Error::invalid("cannot add noise to an empty signal"));
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::invalid(format!("snr_db {snr_db} is not usable")));
    }
    if snr_db == f64::INFINITY {
        return Ok((clean.clone(), 0.0));
    }
    let variance = clean.mean_power() / 10f64.powf(snr_db / 10.0);
    let sd = variance.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noisy = clean
        .samples()
        .iter()
        .map(|x| {
            let z: f64 = StandardNormal.sample(&mut rng);
            x + sd * z
        })
        .collect();
    Ok((Signal::new(noisy)?, variance))
}

/// Source, delayed copy and independent noise on each stream, all derived from `seed`.
pub fn make_sensor_pair(
    length: usize,
    bandwidth: f64,
    profile: DelayProfile,
    snr_db: f64,
    seed: u64,
) -> Result<SensorPair> {
    if profile.len() != length {
        return Err(Error::invalid(format!(
            "profile length {} does not match record length {length}",
            profile.len()
        )));
    }
    let source = generate_bandlimited_gaussian(length, bandwidth, derive_seed(seed, 0))?;
    let delayed = apply_fractional_delay(&source, &profile)?;
    let (sensor1, var1) = add_noise_at_snr(&source, snr_db, derive_seed(seed, 1))?;
    // Noise level is referenced to the source power so both streams share one variance.
    let sensor2 = if snr_db == f64::INFINITY {
        delayed
    } else {
        add_white_noise(&delayed, var1, derive_seed(seed, 2))?
    };
    Ok(SensorPair {
        sensor1,
        sensor2,
        profile,
        noise_variance: var1,
        seed,
    })
}

fn add_white_noise(clean: &Signal, variance: f64, seed: u64) -> Result<Signal> {
    let sd = variance.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Signal::new(
        clean
            .samples()
            .iter()
            .map(|x| {
                let z: f64 = StandardNormal.sample(&mut rng);
                x + sd * z
            })
            .collect(),
    )
}
