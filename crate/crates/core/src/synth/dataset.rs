use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use super::{make_pair, MixRecipe, PairManifest, Result, SoundBank, Split, SynthError};
use crate::audio::write_wav;
use crate::io::write_csv_records;

pub const PAIR_MANIFEST_HEADER: [&str; 9] = [
    "pair_id",
    "split",
    "clean_path",
    "noisy_path",
    "signal_refs",
    "noise_ref",
    "augments_applied",
    "snr_db",
    "seed",
];

/// The random stream for one pair: independent of every other pair and of
/// the order in which pairs are generated.
pub fn pair_rng(seed: u64, split: Split, pair_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((split.index() << 56) | pair_id);
    rng
}

pub fn manifest_file_name(split: Split) -> String {
    format!("pairs_{split}.csv")
}

fn pair_paths(split: Split, pair_id: u64) -> (String, String) {
    (
        format!("clean/{split}_{pair_id:06}.wav"),
        format!("noisy/{split}_{pair_id:06}.wav"),
    )
}

/// Generates `count` pairs, writes them as 16-bit WAVs under `out_dir/clean`
/// and `out_dir/noisy` plus the manifest `out_dir/pairs_<split>.csv`, and
/// returns the manifest rows in pair order.
///
/// Existing files at any target path are an error; nothing is written then.
/// A pair whose clean or noisy peak exceeds full scale is attenuated by one
/// common gain so both files stay consistent.
pub fn build_dataset(
    signals: &SoundBank,
    noises: &SoundBank,
    recipe: &MixRecipe,
    count: usize,
    split: Split,
    out_dir: &Path,
) -> Result<Vec<PairManifest>> {
    if count == 0 {
        return Err(SynthError::ZeroCount);
    }
    recipe.validate()?;
    let manifest_path = out_dir.join(manifest_file_name(split));
    let mut targets = vec![manifest_path.clone()];
    for id in 0..count as u64 {
        let (c, n) = pair_paths(split, id);
        targets.push(out_dir.join(c));
        targets.push(out_dir.join(n));
    }
    if let Some(p) = targets.iter().find(|p| p.exists()) {
        return Err(SynthError::PathCollision(p.clone()));
    }

    let rows = (0..count as u64)
        .into_par_iter()
        .map(|id| {
            let mut rng = pair_rng(recipe.seed, split, id);
            let mut pair = make_pair(signals, noises, recipe, split, &mut rng)?;
            let peak = pair
                .clean
                .samples
                .iter()
                .chain(&pair.noisy.samples)
                .fold(0.0f64, |m, v| m.max(v.abs()));
            let (clean, noisy) = if peak > 1.0 {
                let g = (1.0 - 1e-9) / peak;
                log::debug!("pair {id}: peak {peak:.3} attenuated by {:.3} dB", 20.0 * g.log10());
                (pair.clean.scaled(g), pair.noisy.scaled(g))
            } else {
                (pair.clean, pair.noisy)
            };
            let (c, n) = pair_paths(split, id);
            write_wav(&out_dir.join(&c), &clean, None)?;
            write_wav(&out_dir.join(&n), &noisy, None)?;
            pair.manifest.pair_id = id;
            pair.manifest.clean_path = c;
            pair.manifest.noisy_path = n;
            Ok(pair.manifest)
        })
        .collect::<Result<Vec<_>>>()?;
    write_pair_manifest(&manifest_path, &rows)?;
    Ok(rows)
}

pub fn write_pair_manifest(path: &Path, rows: &[PairManifest]) -> Result<()> {
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|m| {
            vec![
                m.pair_id.to_string(),
                m.split.to_string(),
                m.clean_path.clone(),
                m.noisy_path.clone(),
                m.signal_refs.join("|"),
                m.noise_ref.clone(),
                m.augments_applied.clone(),
                m.snr_db.map(|v| v.to_string()).unwrap_or_default(),
                m.seed.to_string(),
            ]
        })
        .collect();
    write_csv_records(path, &PAIR_MANIFEST_HEADER, &records)?;
    Ok(())
}

#[derive(Deserialize)]
struct Row {
    pair_id: u64,
    split: String,
    clean_path: String,
    noisy_path: String,
    signal_refs: String,
    noise_ref: String,
    augments_applied: String,
    snr_db: Option<f64>,
    seed: u64,
}

pub fn read_pair_manifest(path: &Path) -> Result<Vec<PairManifest>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize::<Row>()
        .enumerate()
        .map(|(i, row)| {
            let r = row?;
            let split = r.split.parse().map_err(|msg| SynthError::Parse {
                path: path.to_path_buf(),
                msg: format!("row {}: {msg}", i + 1),
            })?;
            Ok(PairManifest {
                pair_id: r.pair_id,
                split,
                clean_path: r.clean_path,
                noisy_path: r.noisy_path,
                signal_refs: r.signal_refs.split('|').filter(|s| !s.is_empty()).map(String::from).collect(),
                noise_ref: r.noise_ref,
                augments_applied: r.augments_applied,
                snr_db: r.snr_db,
                seed: r.seed,
            })
        })
        .collect()
}

/// Fails if any bank entry is referenced from more than one split.
pub fn check_split_hygiene<'a>(manifests: impl IntoIterator<Item = &'a PairManifest>) -> Result<()> {
    let mut seen: BTreeMap<&str, BTreeSet<Split>> = BTreeMap::new();
    for m in manifests {
        for id in m.entry_ids() {
            seen.entry(id).or_default().insert(m.split);
        }
    }
    match seen.into_iter().find(|(_, s)| s.len() > 1) {
        Some((id, splits)) => Err(SynthError::SplitLeak {
            id: id.to_string(),
            splits: splits.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "),
        }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::AudioClip;
    use crate::synth::{BankEntry, BankRole};
    use rand::Rng;

    fn banks(split: Split) -> (SoundBank, SoundBank) {
        let fs = 8000;
        let sig = (0..3)
            .map(|i| {
                let c = crate::synthetic::fish_call(fs, 0.5 + 0.2 * i as f64, 150.0 * (i + 1) as f64, 3, 0.4);
                BankEntry::new(format!("{split}-call{i}"), "synthetic", c)
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let noise = (0..2)
            .map(|i| {
                let x = crate::synthetic::white_noise(40_000, 0.05, &mut rng);
                BankEntry::new(format!("{split}-ship{i}"), "synthetic", AudioClip::new(x, fs).unwrap())
            })
            .collect();
        (
            SoundBank::new(BankRole::Signal, split, sig).unwrap(),
            SoundBank::new(BankRole::Noise, split, noise).unwrap(),
        )
    }

    fn recipe(seed: u64) -> MixRecipe {
        MixRecipe {
            segment_len_s: 2.0,
            snr_db: Some(0.0),
            seed,
            ..Default::default()
        }
    }

    fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
        let mut out = Vec::new();
        for sub in ["clean", "noisy"] {
            let mut files: Vec<_> = std::fs::read_dir(dir.join(sub)).unwrap().map(|e| e.unwrap().path()).collect();
            files.sort();
            for f in files {
                out.push((f.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(f).unwrap()));
            }
        }
        out
    }

    #[test]
    fn rebuild_is_byte_identical() {
        let (s, n) = banks(Split::Train);
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ra = build_dataset(&s, &n, &recipe(7), 10, Split::Train, a.path()).unwrap();
        let rb = build_dataset(&s, &n, &recipe(7), 10, Split::Train, b.path()).unwrap();
        assert_eq!(ra, rb);
        let ma = std::fs::read(a.path().join("pairs_train.csv")).unwrap();
        assert_eq!(ma, std::fs::read(b.path().join("pairs_train.csv")).unwrap());
        assert_eq!(read_dir_bytes(a.path()), read_dir_bytes(b.path()));
        assert_eq!(read_dir_bytes(a.path()).len(), 20);
        assert_eq!(read_pair_manifest(&a.path().join("pairs_train.csv")).unwrap(), ra);
    }

    #[test]
    fn pair_streams_are_order_independent() {
        let mut a = pair_rng(3, Split::Test, 5);
        let _ = pair_rng(3, Split::Test, 4).random::<u64>();
        let mut b = pair_rng(3, Split::Test, 5);
        assert_eq!(a.random::<u64>(), b.random::<u64>());
        assert_ne!(pair_rng(3, Split::Test, 5).random::<u64>(), pair_rng(3, Split::Train, 5).random::<u64>());
    }

    #[test]
    fn collisions_rejected() {
        let (s, n) = banks(Split::Train);
        let d = tempfile::tempdir().unwrap();
        build_dataset(&s, &n, &recipe(1), 2, Split::Train, d.path()).unwrap();
        let err = build_dataset(&s, &n, &recipe(1), 2, Split::Train, d.path()).unwrap_err();
        assert!(matches!(err, SynthError::PathCollision(_)));
        // a different split in the same directory does not collide
        let (s, n) = banks(Split::Test);
        build_dataset(&s, &n, &recipe(1), 2, Split::Test, d.path()).unwrap();
    }

    #[test]
    fn test_split_references_only_test_entries() {
        let d = tempfile::tempdir().unwrap();
        let mut all = Vec::new();
        for split in Split::ALL {
            let (s, n) = banks(split);
            let rows = build_dataset(&s, &n, &recipe(11), 6, split, d.path()).unwrap();
            for r in &rows {
                assert_eq!(r.split, split);
                assert!(r.entry_ids().all(|id| id.starts_with(split.as_str())));
            }
            all.extend(rows);
        }
        check_split_hygiene(&all).unwrap();
        let mut leaked = all[0].clone();
        leaked.split = Split::Test;
        all.push(leaked);
        assert!(matches!(check_split_hygiene(&all), Err(SynthError::SplitLeak { .. })));
    }

    #[test]
    fn zero_count_rejected() {
        let (s, n) = banks(Split::Train);
        let d = tempfile::tempdir().unwrap();
        assert!(matches!(
            build_dataset(&s, &n, &recipe(1), 0, Split::Train, d.path()),
            Err(SynthError::ZeroCount)
        ));
    }
}
