//! Multichannel 32-bit float WAV recordings.

use super::atomic_write;
use crate::error::{Error, Result};
use crate::sim::MultichannelRecording;
use std::io::Cursor;
use std::path::Path;

fn wav_err(path: &Path, e: hound::Error) -> Error {
    Error::parse("wav", path, e.to_string())
}

pub fn write_wav(path: &Path, rec: &MultichannelRecording) -> Result<()> {
    rec.validate()?;
    if rec.channels.is_empty() || rec.channels.len() > u16::MAX as usize {
        return Err(Error::shape(format!("cannot store {} channels", rec.channels.len())));
    }
    let spec = hound::WavSpec {
        channels: rec.channels.len() as u16,
        sample_rate: rec.sample_rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut buf = Cursor::new(Vec::new());
    let mut w = hound::WavWriter::new(&mut buf, spec).map_err(|e| wav_err(path, e))?;
    for n in 0..rec.len() {
        for ch in &rec.channels {
            w.write_sample(ch[n]).map_err(|e| wav_err(path, e))?;
        }
    }
    w.finalize().map_err(|e| wav_err(path, e))?;
    atomic_write(path, buf.get_ref())
}

pub fn read_wav(path: &Path) -> Result<MultichannelRecording> {
    let mut reader = hound::WavReader::open(path).map_err(|e| wav_err(path, e))?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Float || spec.bits_per_sample != 32 {
        return Err(Error::parse("wav", path, "expected 32-bit float samples"));
    }
    let nch = spec.channels as usize;
    let mut channels = vec![Vec::new(); nch];
    for (i, s) in reader.samples::<f32>().enumerate() {
        let s = s.map_err(|e| wav_err(path, e))?;
        channels[i % nch].push(s);
    }
    let rec = MultichannelRecording { channels, sample_rate: spec.sample_rate };
    rec.validate()?;
    Ok(rec)
}
