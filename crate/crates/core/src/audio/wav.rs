//! RIFF/WAVE reading and writing.
//!
//! Reads PCM 8/16/24/32-bit integer and 32/64-bit float data in one or two
//! channels; writes canonical 44-byte-header 16-bit mono PCM.

use alloc::vec::Vec;

use thiserror::Error;

use super::AudioClip;

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WavError {
    #[error("malformed WAV: {0}")]
    Malformed(&'static str),
    #[error("unsupported WAV encoding: format tag {format_tag}, {bits} bits, {channels} channels")]
    UnsupportedEncoding {
        format_tag: u16,
        bits: u16,
        channels: u16,
    },
}

struct Format {
    tag: u16,
    channels: u16,
    sample_rate: u32,
    bits: u16,
    block_align: u16,
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn parse_format(body: &[u8]) -> Result<Format, WavError> {
    if body.len() < 16 {
        return Err(WavError::Malformed("fmt chunk too short"));
    }
    let mut tag = u16_at(body, 0);
    let channels = u16_at(body, 2);
    let sample_rate = u32_at(body, 4);
    let block_align = u16_at(body, 12);
    let bits = u16_at(body, 14);
    if tag == FORMAT_EXTENSIBLE {
        // cbSize(2) validBits(2) channelMask(4) then the subformat GUID whose
        // first two bytes carry the real format tag.
        if body.len() < 26 {
            return Err(WavError::Malformed("extensible fmt chunk too short"));
        }
        tag = u16_at(body, 24);
    }
    Ok(Format {
        tag,
        channels,
        sample_rate,
        bits,
        block_align,
    })
}

/// Decodes a RIFF/WAVE byte buffer into a mono clip.
///
/// Stereo frames are averaged; integer samples are scaled by `2^(bits-1)`
/// (8-bit data is unsigned and offset by 128). Float data is clamped.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip, WavError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(WavError::Malformed("missing RIFF/WAVE header"));
    }
    let mut format: Option<Format> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .ok_or(WavError::Malformed("chunk size overflow"))?;
        match id {
            b"fmt " => {
                if body_end > bytes.len() {
                    return Err(WavError::Malformed("truncated fmt chunk"));
                }
                format = Some(parse_format(&bytes[body_start..body_end])?);
            }
            b"data" => {
                if body_end > bytes.len() {
                    return Err(WavError::Malformed("truncated data chunk"));
                }
                data = Some(&bytes[body_start..body_end]);
                break;
            }
            _ => {}
        }
        // chunks are word aligned
        pos = body_end + (size & 1);
    }
    let format = format.ok_or(WavError::Malformed("missing fmt chunk"))?;
    let data = data.ok_or(WavError::Malformed("missing data chunk"))?;

    let unsupported = || WavError::UnsupportedEncoding {
        format_tag: format.tag,
        bits: format.bits,
        channels: format.channels,
    };
    if format.channels == 0 || format.channels > 2 {
        return Err(unsupported());
    }
    if format.sample_rate == 0 {
        return Err(WavError::Malformed("zero sample rate"));
    }
    let bytes_per_sample = match (format.tag, format.bits) {
        (FORMAT_PCM, 8) => 1,
        (FORMAT_PCM, 16) => 2,
        (FORMAT_PCM, 24) => 3,
        (FORMAT_PCM, 32) => 4,
        (FORMAT_FLOAT, 32) => 4,
        (FORMAT_FLOAT, 64) => 8,
        _ => return Err(unsupported()),
    };
    let frame_bytes = bytes_per_sample * format.channels as usize;
    if format.block_align as usize != frame_bytes {
        return Err(WavError::Malformed("block alignment disagrees with format"));
    }
    if data.len() % frame_bytes != 0 {
        return Err(WavError::Malformed("data chunk ends mid-frame"));
    }

    let read = |s: &[u8]| -> f64 {
        match (format.tag, format.bits) {
            (FORMAT_PCM, 8) => (s[0] as f64 - 128.0) / 128.0,
            (FORMAT_PCM, 16) => i16::from_le_bytes([s[0], s[1]]) as f64 / 32_768.0,
            (FORMAT_PCM, 24) => {
                let v = i32::from_le_bytes([0, s[0], s[1], s[2]]) >> 8;
                v as f64 / 8_388_608.0
            }
            (FORMAT_PCM, _) => i32::from_le_bytes([s[0], s[1], s[2], s[3]]) as f64 / 2_147_483_648.0,
            (_, 32) => {
                let v = f32::from_le_bytes([s[0], s[1], s[2], s[3]]) as f64;
                if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) }
            }
            _ => {
                let mut b = [0u8; 8];
                b.copy_from_slice(&s[..8]);
                let v = f64::from_le_bytes(b);
                if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) }
            }
        }
    };

    let samples: Vec<f64> = data
        .chunks_exact(frame_bytes)
        .map(|frame| {
            let sum: f64 = frame.chunks_exact(bytes_per_sample).map(read).sum();
            sum / format.channels as f64
        })
        .collect();
    AudioClip::new(samples, format.sample_rate).map_err(|_| WavError::Malformed("invalid samples"))
}

/// Quantizes one normalized sample to 16-bit PCM.
pub fn quantize_i16(sample: f64) -> i16 {
    let v = libm::round(sample * 32_768.0);
    v.clamp(-32_768.0, 32_767.0) as i16
}

/// Encodes a clip as 16-bit mono PCM with the canonical 44-byte header.
pub fn encode_wav(clip: &AudioClip) -> Vec<u8> {
    let data_len = clip.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&clip.sample_rate().to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate() * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in clip.samples() {
        out.extend_from_slice(&quantize_i16(s).to_le_bytes());
    }
    out
}
