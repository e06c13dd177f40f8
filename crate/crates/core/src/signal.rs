//! Sampled multichannel and binaural signals, and WAV file I/O.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

/// Channels of equal length at a common sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelSignal {
    pub sample_rate: f64,
    /// One vector per channel.
    pub channels: Vec<Vec<f64>>,
}

impl MultichannelSignal {
    pub fn new(sample_rate: f64, channels: Vec<Vec<f64>>) -> Result<Self> {
        if !(sample_rate > 0.0) {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        if let Some(first) = channels.first() {
            if channels.iter().any(|c| c.len() != first.len()) {
                return Err(Error::InvalidArgument("channels differ in length".into()));
            }
        }
        if channels.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("signal contains NaN or infinite samples".into()));
        }
        Ok(MultichannelSignal { sample_rate, channels })
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels.first().map(Vec::len).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinauralSignal {
    pub sample_rate: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl BinauralSignal {
    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn to_multichannel(&self) -> MultichannelSignal {
        MultichannelSignal { sample_rate: self.sample_rate, channels: vec![self.left.clone(), self.right.clone()] }
    }

    pub fn from_multichannel(sig: &MultichannelSignal) -> Result<Self> {
        if sig.num_channels() != 2 {
            return Err(Error::ChannelMismatch { expected: 2, found: sig.num_channels() });
        }
        Ok(BinauralSignal { sample_rate: sig.sample_rate, left: sig.channels[0].clone(), right: sig.channels[1].clone() })
    }
}

/// Sample encodings supported for writing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Pcm24,
    Float32,
}

pub fn read_wav(path: &Path) -> Result<MultichannelSignal> {
    let mut reader = WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Wav(other),
    })?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader.samples::<f32>().map(|s| s.map(f64::from)).collect::<std::result::Result<_, _>>()?,
        (SampleFormat::Int, bits @ (16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<std::result::Result<_, _>>()?
        }
        (fmt, bits) => return Err(Error::UnsupportedEncoding(format!("{fmt:?} with {bits} bits per sample"))),
    };
    let frames = interleaved.len() / channels.max(1);
    let mut out = vec![Vec::with_capacity(frames); channels];
    for frame in interleaved.chunks_exact(channels) {
        for (c, &v) in frame.iter().enumerate() {
            out[c].push(v);
        }
    }
    MultichannelSignal::new(spec.sample_rate as f64, out)
}

/// Writes `signal`, clamping samples to [-1, 1]. Returns the number of
/// clamped samples.
pub fn write_wav(path: &Path, signal: &MultichannelSignal, encoding: WavEncoding) -> Result<usize> {
    let (bits, format) = match encoding {
        WavEncoding::Pcm16 => (16, SampleFormat::Int),
        WavEncoding::Pcm24 => (24, SampleFormat::Int),
        WavEncoding::Float32 => (32, SampleFormat::Float),
    };
    let spec = WavSpec {
        channels: signal.num_channels() as u16,
        sample_rate: signal.sample_rate.round() as u32,
        bits_per_sample: bits,
        sample_format: format,
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        std::process::id()
    ));
    let mut clipped = 0;
    let result = (|| -> Result<()> {
        let mut writer = WavWriter::create(&tmp, spec)?;
        for t in 0..signal.len() {
            for ch in &signal.channels {
                let v = ch[t];
                let c = v.clamp(-1.0, 1.0);
                if c != v {
                    clipped += 1;
                }
                match encoding {
                    WavEncoding::Float32 => writer.write_sample(c as f32)?,
                    WavEncoding::Pcm16 | WavEncoding::Pcm24 => {
                        let full = (1i64 << (bits - 1)) as f64;
                        let q = (c * full).round().clamp(-full, full - 1.0) as i32;
                        writer.write_sample(q)?
                    }
                }
            }
        }
        writer.finalize()?;
        Ok(())
    })();
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(e);
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    if clipped > 0 {
        log::warn!("{}: clamped {clipped} samples to [-1, 1]", path.display());
    }
    Ok(clipped)
}
