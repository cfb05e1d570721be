//! In-memory audio clips and WAV I/O.

use std::path::Path;

use hound::{SampleFormat, WavSpec};

use crate::error::{invalid, Error, Result};

/// One or two equal-length channels at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<Vec<f64>>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<Vec<f64>>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() || samples.len() > 2 {
            return Err(invalid(format!("{} channels; expected 1 or 2", samples.len())));
        }
        if samples.iter().any(|c| c.len() != samples[0].len()) {
            return Err(Error::LengthMismatch {
                left: samples[0].len(),
                right: samples[samples.len() - 1].len(),
            });
        }
        if sample_rate == 0 {
            return Err(invalid("sample rate must be positive"));
        }
        Ok(AudioClip { samples, sample_rate })
    }

    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Self {
        AudioClip {
            samples: vec![samples],
            sample_rate,
        }
    }

    pub fn stereo(left: Vec<f64>, right: Vec<f64>, sample_rate: u32) -> Result<Self> {
        Self::new(vec![left, right], sample_rate)
    }

    pub fn channels(&self) -> usize {
        self.samples.len()
    }

    pub fn len(&self) -> usize {
        self.samples[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    pub fn channel(&self, i: usize) -> &[f64] {
        &self.samples[i]
    }

    pub fn channels_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.iter().map(|c| c.as_slice())
    }

    /// The only channel of a mono clip.
    pub fn mono_samples(&self) -> Result<&[f64]> {
        if self.channels() != 1 {
            return Err(invalid(format!("expected mono audio, got {} channels", self.channels())));
        }
        Ok(&self.samples[0])
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.samples
    }

    pub fn require_rate(&self, expected: u32) -> Result<()> {
        if self.sample_rate != expected {
            return Err(Error::SampleRate {
                expected,
                actual: self.sample_rate,
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        AudioClip {
            samples: self.samples.iter().map(|c| f(c)).collect(),
            sample_rate: self.sample_rate,
        }
    }

    /// Read 16/24/32-bit integer or 32-bit float PCM, mono or stereo.
    pub fn read_wav(path: &Path) -> Result<Self> {
        let wav = |e| Error::Wav {
            path: path.to_path_buf(),
            source: e,
        };
        let mut reader = hound::WavReader::open(path).map_err(wav)?;
        let spec = reader.spec();
        let ch = spec.channels as usize;
        if ch == 0 || ch > 2 {
            return Err(Error::Format(format!(
                "{}: {} channels; expected 1 or 2",
                path.display(),
                ch
            )));
        }
        let flat: Vec<f64> = match spec.sample_format {
            SampleFormat::Float => reader
                .samples::<f32>()
                .map(|s| s.map(f64::from))
                .collect::<std::result::Result<_, _>>()
                .map_err(wav)?,
            SampleFormat::Int => {
                let scale = 1.0 / (1i64 << (spec.bits_per_sample - 1)) as f64;
                reader
                    .samples::<i32>()
                    .map(|s| s.map(|v| v as f64 * scale))
                    .collect::<std::result::Result<_, _>>()
                    .map_err(wav)?
            }
        };
        let mut samples = vec![Vec::with_capacity(flat.len() / ch); ch];
        for (i, v) in flat.into_iter().enumerate() {
            samples[i % ch].push(v);
        }
        Self::new(samples, spec.sample_rate)
    }

    /// Write as 32-bit float PCM.
    pub fn write_wav(&self, path: &Path) -> Result<()> {
        self.write_wav_with(path, SampleFormat::Float, 32)
    }

    pub fn write_wav_with(&self, path: &Path, format: SampleFormat, bits: u16) -> Result<()> {
        let wav = |e| Error::Wav {
            path: path.to_path_buf(),
            source: e,
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let spec = WavSpec {
            channels: self.channels() as u16,
            sample_rate: self.sample_rate,
            bits_per_sample: bits,
            sample_format: format,
        };
        let mut w = hound::WavWriter::create(path, spec).map_err(wav)?;
        let max = ((1i64 << (bits - 1)) - 1) as f64;
        for i in 0..self.len() {
            for c in &self.samples {
                match format {
                    SampleFormat::Float => w.write_sample(c[i] as f32).map_err(wav)?,
                    SampleFormat::Int => w
                        .write_sample((c[i] * (max + 1.0)).round().clamp(-max - 1.0, max) as i32)
                        .map_err(wav)?,
                }
            }
        }
        w.finalize().map_err(wav)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_wide() {
        assert!(AudioClip::new(vec![vec![0.0; 3], vec![0.0; 4]], 48_000).is_err());
        assert!(AudioClip::new(vec![vec![0.0]; 3], 48_000).is_err());
        assert!(AudioClip::stereo(vec![1.0], vec![2.0], 48_000).unwrap().mono_samples().is_err());
    }

    #[test]
    fn wav_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let l: Vec<f64> = (0..100).map(|i| (i as f64 * 0.1).sin() * 0.5).collect();
        let r: Vec<f64> = l.iter().map(|v| -v).collect();
        let clip = AudioClip::stereo(l, r, 48_000).unwrap();
        for (fmt, bits, tol) in [
            (SampleFormat::Float, 32, 1e-7),
            (SampleFormat::Int, 16, 1.0 / 32_768.0),
            (SampleFormat::Int, 24, 1.0 / 8_388_608.0),
        ] {
            let p = dir.path().join(format!("x{bits}.wav"));
            clip.write_wav_with(&p, fmt, bits).unwrap();
            let back = AudioClip::read_wav(&p).unwrap();
            assert_eq!(back.channels(), 2);
            assert_eq!(back.sample_rate(), 48_000);
            for (a, b) in clip.channel(1).iter().zip(back.channel(1)) {
                assert!((a - b).abs() <= tol, "{bits}: {a} {b}");
            }
        }
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(matches!(
            AudioClip::read_wav(Path::new("/nonexistent/x.wav")),
            Err(Error::Wav { .. })
        ));
    }
}
