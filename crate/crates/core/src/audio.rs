//! WAV ingestion, segmentation and hydrophone calibration.
//!
//! Samples are held as `f64`. An uncalibrated clip carries normalized ADC
//! counts in `[-1, 1]`; a calibrated clip carries pressure in µPa.

use std::io::{Seek, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDateTime, TimeDelta, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::atomic_write;

#[derive(Error, Debug)]
pub enum AudioError {
    #[error("clip has no samples")]
    Empty,
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("{path}: {channels} channels, only mono recordings are accepted")]
    MultiChannel { path: PathBuf, channels: u16 },
    #[error("{path}: unsupported sample encoding ({format:?}, {bits} bits)")]
    UnsupportedEncoding {
        path: PathBuf,
        format: hound::SampleFormat,
        bits: u16,
    },
    #[error("segment length must be positive, got {0} s")]
    BadSegmentLength(f64),
    #[error("ADC full-scale voltage must be positive, got {0}")]
    BadFullScale(f64),
    #[error("sample {value} at index {index} is outside [-1, 1]; pass a calibration to write pressure data")]
    OutOfRange { index: usize, value: f64 },
    #[error("manifest {path}: {msg}")]
    Manifest { path: PathBuf, msg: String },
    #[error("WAV error in {path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, AudioError>;

/// Hydrophone + recorder gain chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Hydrophone sensitivity, dB re 1 V/µPa (typically strongly negative).
    pub sensitivity_db_re_v_per_upa: f64,
    /// Voltage corresponding to a normalized sample value of 1.0.
    pub adc_fullscale_v: f64,
    /// Preamplifier gain ahead of the ADC.
    pub gain_db: f64,
}

impl Calibration {
    pub fn new(sensitivity_db_re_v_per_upa: f64, adc_fullscale_v: f64, gain_db: f64) -> Result<Self> {
        if !(adc_fullscale_v > 0.0) {
            return Err(AudioError::BadFullScale(adc_fullscale_v));
        }
        Ok(Self {
            sensitivity_db_re_v_per_upa,
            adc_fullscale_v,
            gain_db,
        })
    }

    /// µPa per unit of normalized count.
    pub fn upa_per_count(&self) -> f64 {
        let volts_per_upa = 10f64.powf(self.sensitivity_db_re_v_per_upa / 20.0);
        let gain = 10f64.powf(self.gain_db / 20.0);
        self.adc_fullscale_v / gain / volts_per_upa
    }

    /// Converts an uncalibrated clip to pressure. Already-calibrated clips are returned unchanged.
    pub fn apply(&self, clip: AudioClip) -> AudioClip {
        if clip.calibrated {
            return clip;
        }
        let k = self.upa_per_count();
        AudioClip {
            samples: clip.samples.into_iter().map(|s| s * k).collect(),
            calibrated: true,
            ..clip
        }
    }
}

/// A mono pressure time series with site/time provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub start_time: Option<DateTime<Utc>>,
    pub site_id: String,
    pub calibrated: bool,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(AudioError::ZeroSampleRate);
        }
        if samples.is_empty() {
            return Err(AudioError::Empty);
        }
        Ok(Self {
            samples,
            sample_rate,
            start_time: None,
            site_id: String::new(),
            calibrated: false,
        })
    }

    pub fn with_site(mut self, site_id: impl Into<String>) -> Self {
        self.site_id = site_id.into();
        self
    }

    pub fn with_start_time(mut self, t: DateTime<Utc>) -> Self {
        self.start_time = Some(t);
        self
    }

    pub fn with_calibrated(mut self, calibrated: bool) -> Self {
        self.calibrated = calibrated;
        self
    }

    /// Same provenance, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Self {
        Self {
            samples,
            sample_rate: self.sample_rate,
            start_time: self.start_time,
            site_id: self.site_id.clone(),
            calibrated: self.calibrated,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.with_samples(self.samples.iter().map(|s| s * c).collect())
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }
}

pub(crate) fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingMeta {
    pub site_id: String,
    pub deployment_id: String,
    pub file_path: PathBuf,
    pub start_time: Option<DateTime<Utc>>,
    pub duration_s: f64,
    pub sample_rate: u32,
}

/// Parses `<site>_<YYYYMMDD>T<HHMMSS>Z.wav`. The site id may itself contain underscores.
pub fn parse_recording_name(path: &Path) -> Option<(String, DateTime<Utc>)> {
    let stem = path.file_stem()?.to_str()?;
    let (site, stamp) = stem.rsplit_once('_')?;
    if site.is_empty() {
        return None;
    }
    let t = NaiveDateTime::parse_from_str(stamp, "%Y%m%dT%H%M%SZ").ok()?;
    Some((site.to_string(), t.and_utc()))
}

/// Reads a mono WAV file. Integer PCM is normalized to [-1, 1) by `2^(bits-1)`.
///
/// Site and start time come from the filename convention; when the name does
/// not parse, the clip is returned with no start time and a warning is logged.
pub fn read_wav(path: &Path, cal: Option<&Calibration>) -> Result<AudioClip> {
    let wav_err = |source| AudioError::Wav {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = hound::WavReader::open(path).map_err(wav_err)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(AudioError::MultiChannel {
            path: path.to_path_buf(),
            channels: spec.channels,
        });
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(wav_err)?
        }
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err)?,
        (format, bits) => {
            return Err(AudioError::UnsupportedEncoding {
                path: path.to_path_buf(),
                format,
                bits,
            })
        }
    };
    let mut clip = AudioClip::new(samples, spec.sample_rate)?;
    match parse_recording_name(path) {
        Some((site, t)) => {
            clip.site_id = site;
            clip.start_time = Some(t);
        }
        None => {
            log::warn!(
                "{}: filename does not match <site>_<YYYYMMDD>T<HHMMSS>Z.wav, start time unknown",
                path.display()
            );
            clip.site_id = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
        }
    }
    Ok(match cal {
        Some(c) => c.apply(clip),
        None => clip,
    })
}

fn quantize_i16(x: f64) -> i16 {
    (x * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

/// Writes 16-bit PCM. Calibrated clips need the calibration to convert back to counts.
pub fn write_wav_to<W: Write + Seek>(writer: W, clip: &AudioClip, cal: Option<&Calibration>) -> Result<()> {
    let k = match (clip.calibrated, cal) {
        (true, Some(c)) => 1.0 / c.upa_per_count(),
        _ => 1.0,
    };
    if let Some((index, &value)) = clip
        .samples
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.abs() * k <= 1.0))
    {
        return Err(AudioError::OutOfRange { index, value });
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let wav_err = |source| AudioError::Wav {
        path: PathBuf::new(),
        source,
    };
    let mut w = hound::WavWriter::new(writer, spec).map_err(wav_err)?;
    {
        let mut iw = w.get_i16_writer(clip.samples.len() as u32);
        for &s in &clip.samples {
            iw.write_sample(quantize_i16(s * k));
        }
        iw.flush().map_err(wav_err)?;
    }
    w.finalize().map_err(wav_err)?;
    Ok(())
}

/// Writes 16-bit PCM atomically (temp file then rename).
pub fn write_wav(path: &Path, clip: &AudioClip, cal: Option<&Calibration>) -> Result<()> {
    atomic_write(path, |f| {
        write_wav_to(std::io::BufWriter::new(f), clip, cal).map_err(|e| match e {
            AudioError::Io(io) => io,
            other => std::io::Error::other(other.to_string()),
        })
    })?;
    Ok(())
}

/// Splits into consecutive non-overlapping segments of `seg_len_s`; the remainder is dropped.
pub fn segment(clip: &AudioClip, seg_len_s: f64) -> Result<Vec<AudioClip>> {
    if !(seg_len_s > 0.0) {
        return Err(AudioError::BadSegmentLength(seg_len_s));
    }
    let n = (seg_len_s * clip.sample_rate as f64).round() as usize;
    if n == 0 {
        return Err(AudioError::BadSegmentLength(seg_len_s));
    }
    Ok(clip
        .samples
        .chunks_exact(n)
        .enumerate()
        .map(|(i, chunk)| {
            let offset_ns = (i as f64 * n as f64 / clip.sample_rate as f64 * 1e9).round() as i64;
            let mut seg = clip.with_samples(chunk.to_vec());
            seg.start_time = clip.start_time.map(|t| t + TimeDelta::nanoseconds(offset_ns));
            seg
        })
        .collect())
}

/// One row of the recording manifest CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file_path: PathBuf,
    pub site_id: String,
    pub deployment_id: String,
    pub start_time_iso8601: Option<String>,
    pub sensitivity_db: Option<f64>,
    pub fullscale_v: Option<f64>,
    pub gain_db: Option<f64>,
}

impl ManifestEntry {
    pub fn calibration(&self) -> Result<Option<Calibration>> {
        match (self.sensitivity_db, self.fullscale_v) {
            (Some(s), Some(v)) => Calibration::new(s, v, self.gain_db.unwrap_or(0.0)).map(Some),
            _ => Ok(None),
        }
    }

    pub fn start_time(&self) -> Option<DateTime<Utc>> {
        let s = self.start_time_iso8601.as_deref()?.trim();
        DateTime::parse_from_rfc3339(s)
            .map(|t| t.with_timezone(&Utc))
            .ok()
            .or_else(|| {
                NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
                    .ok()
                    .map(|t| t.and_utc())
            })
    }
}

/// Reads the manifest; relative file paths resolve against the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<ManifestEntry>().enumerate() {
        let mut e = row.map_err(|e| AudioError::Manifest {
            path: path.to_path_buf(),
            msg: format!("row {}: {e}", i + 1),
        })?;
        if e.file_path.is_relative() {
            e.file_path = base.join(&e.file_path);
        }
        out.push(e);
    }
    Ok(out)
}

/// Reads the file named by a manifest row; manifest fields override the filename convention.
pub fn load_entry(entry: &ManifestEntry) -> Result<(AudioClip, RecordingMeta)> {
    let cal = entry.calibration()?;
    let mut clip = read_wav(&entry.file_path, cal.as_ref())?;
    if !entry.site_id.is_empty() {
        clip.site_id = entry.site_id.clone();
    }
    if let Some(t) = entry.start_time() {
        clip.start_time = Some(t);
    } else if entry.start_time_iso8601.as_deref().is_some_and(|s| !s.trim().is_empty()) {
        log::warn!(
            "{}: unparseable manifest start time {:?}",
            entry.file_path.display(),
            entry.start_time_iso8601
        );
    }
    let meta = RecordingMeta {
        site_id: clip.site_id.clone(),
        deployment_id: entry.deployment_id.clone(),
        file_path: entry.file_path.clone(),
        start_time: clip.start_time,
        duration_s: clip.duration_s(),
        sample_rate: clip.sample_rate,
    };
    Ok((clip, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn tone(freq: f64, amp: f64, fs: u32, secs: f64) -> AudioClip {
        let n = (secs * fs as f64) as usize;
        let s = (0..n)
            .map(|i| amp * (2.0 * std::f64::consts::PI * freq * i as f64 / fs as f64).sin())
            .collect();
        AudioClip::new(s, fs).unwrap()
    }

    #[test]
    fn filename_convention() {
        let (site, t) = parse_recording_name(Path::new("/x/Kusu_Island_20230105T063000Z.wav")).unwrap();
        assert_eq!(site, "Kusu_Island");
        assert_eq!(t, Utc.with_ymd_and_hms(2023, 1, 5, 6, 30, 0).unwrap());
        assert!(parse_recording_name(Path::new("recording.wav")).is_none());
        assert!(parse_recording_name(Path::new("Hantu_2023-01-05.wav")).is_none());
    }

    #[test]
    fn five_minutes_at_96k() {
        let clip = AudioClip::new(vec![0.0; 5 * 60 * 96_000], 96_000).unwrap();
        assert_eq!(clip.len(), 28_800_000);
        assert_eq!(clip.duration_s(), 300.0);
    }

    #[test]
    fn calibration_chain_full_scale_peak() {
        let cal = Calibration::new(-165.0, 1.0, 0.0).unwrap();
        let clip = cal.apply(tone(1000.0, 1.0, 96_000, 0.01));
        let peak = clip.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // 1 V full scale / 10^(-165/20) V/µPa
        let expected = 10f64.powf(165.0 / 20.0);
        assert!((peak - expected).abs() / expected < 1e-6, "{peak} vs {expected}");
        assert!(clip.calibrated);
    }

    #[test]
    fn calibration_is_linear() {
        let cal = Calibration::new(-170.0, 2.5, 12.0).unwrap();
        let base = tone(300.0, 0.2, 8000, 0.1);
        let a = cal.apply(base.scaled(3.0));
        let b = cal.apply(base.clone());
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((x - 3.0 * y).abs() <= 1e-9 * y.abs().max(1.0));
        }
    }

    #[test]
    fn rejects_bad_fullscale() {
        assert!(Calibration::new(-165.0, 0.0, 0.0).is_err());
        assert!(Calibration::new(-165.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn segment_counts() {
        let clip = AudioClip::new(vec![0.1; 300 * 100], 100).unwrap();
        assert_eq!(segment(&clip, 60.0).unwrap().len(), 5);
        assert_eq!(segment(&clip, 600.0).unwrap().len(), 0);
        let short = AudioClip::new(vec![0.1; 61 * 100], 100)
            .unwrap()
            .with_start_time(Utc.with_ymd_and_hms(2023, 3, 1, 0, 0, 0).unwrap());
        let segs = segment(&short, 60.0).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].start_time, short.start_time);
        assert!(segment(&clip, 0.0).is_err());
        assert!(segment(&clip, -1.0).is_err());
    }

    #[test]
    fn segment_start_times_advance() {
        let t0 = Utc.with_ymd_and_hms(2023, 3, 1, 23, 58, 0).unwrap();
        let clip = AudioClip::new(vec![0.0; 300 * 10], 10).unwrap().with_start_time(t0);
        let segs = segment(&clip, 60.0).unwrap();
        for (i, s) in segs.iter().enumerate() {
            assert_eq!(s.start_time.unwrap(), t0 + TimeDelta::seconds(60 * i as i64));
        }
    }

    #[test]
    fn wav_round_trip_within_one_lsb() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("Hantu_20230105T063000Z.wav");
        let clip = tone(440.0, 0.7, 96_000, 0.05);
        write_wav(&path, &clip, None).unwrap();
        let back = read_wav(&path, None).unwrap();
        assert_eq!(back.sample_rate, 96_000);
        assert_eq!(back.len(), clip.len());
        assert_eq!(back.site_id, "Hantu");
        for (a, b) in clip.samples.iter().zip(&back.samples) {
            assert!((a - b).abs() <= 1.0 / 32768.0);
        }
    }

    #[test]
    fn calibrated_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let cal = Calibration::new(-165.0, 1.0, 0.0).unwrap();
        let clip = cal.apply(tone(440.0, 0.5, 16_000, 0.05));
        assert!(write_wav(&path, &clip, None).is_err());
        write_wav(&path, &clip, Some(&cal)).unwrap();
        let back = read_wav(&path, Some(&cal)).unwrap();
        let lsb = cal.upa_per_count() / 32768.0;
        for (a, b) in clip.samples.iter().zip(&back.samples) {
            assert!((a - b).abs() <= lsb * 1.000001);
        }
    }

    #[test]
    fn rejects_stereo_and_odd_encodings() {
        let dir = tempfile::tempdir().unwrap();
        let stereo = dir.path().join("s.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&stereo, spec).unwrap();
        for _ in 0..10 {
            w.write_sample(0i16).unwrap();
        }
        w.finalize().unwrap();
        assert!(matches!(read_wav(&stereo, None), Err(AudioError::MultiChannel { .. })));

        let f32_path = dir.path().join("f.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut w = hound::WavWriter::create(&f32_path, spec).unwrap();
        w.write_sample(0.25f32).unwrap();
        w.finalize().unwrap();
        let c = read_wav(&f32_path, None).unwrap();
        assert_eq!(c.samples, vec![0.25]);
        assert!(c.start_time.is_none());
    }

    #[test]
    fn manifest_overrides_filename() {
        let dir = tempfile::tempdir().unwrap();
        let wav = dir.path().join("Hantu_20230105T063000Z.wav");
        write_wav(&wav, &tone(100.0, 0.1, 8000, 0.1), None).unwrap();
        let manifest = dir.path().join("manifest.csv");
        std::fs::write(
            &manifest,
            "file_path,site_id,deployment_id,start_time_iso8601,sensitivity_db,fullscale_v,gain_db\n\
             Hantu_20230105T063000Z.wav,Semakau,D7,2024-02-01T10:00:00Z,-165,1.0,0\n",
        )
        .unwrap();
        let entries = read_manifest(&manifest).unwrap();
        let (clip, meta) = load_entry(&entries[0]).unwrap();
        assert_eq!(clip.site_id, "Semakau");
        assert_eq!(meta.deployment_id, "D7");
        assert_eq!(clip.start_time, Some(Utc.with_ymd_and_hms(2024, 2, 1, 10, 0, 0).unwrap()));
        assert!(clip.calibrated);
        assert!((meta.duration_s - 0.1).abs() < 1.0 / 8000.0);
    }
}
