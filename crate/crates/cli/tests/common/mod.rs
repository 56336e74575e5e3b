#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use reefpam::audio::{write_wav, AudioClip};
use reefpam::synthetic::{fish_call, poisson_times, ship_noise, snap_train, SnapTrain};

pub const FS_FIELD: u32 = 96_000;
pub const FS_BANK: u32 = 8_000;

pub fn reefpam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reefpam"))
        .args(args)
        .env_remove("REEFPAM_CONFIG")
        .output()
        .expect("spawn reefpam")
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Every regular file under `dir`, keyed by relative path, with its bytes.
pub fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, d: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in std::fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

/// `n_files` field recordings of `minutes` minutes at 96 kHz named by the
/// site/timestamp convention, with a manifest listing them.
pub fn field_recordings(dir: &Path, n_files: usize, minutes: usize) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let t0 = Utc.with_ymd_and_hms(2021, 3, 4, 5, 0, 0).unwrap();
    let mut manifest = String::from("file_path,site_id,deployment_id,start_time_iso8601,sensitivity_db,fullscale_v,gain_db\n");
    for i in 0..n_files {
        let site = ["reef_a", "reef_b", "reef_c"][i % 3];
        let start = t0 + Duration::hours(i as i64);
        let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
        let dur = 60.0 * minutes as f64;
        let train = SnapTrain {
            sample_rate: FS_FIELD,
            duration_s: dur,
            noise_sigma: 0.002,
            amplitude: 0.1,
            ..Default::default()
        };
        let times = poisson_times(2.0 + i as f64, dur, &mut rng);
        let mut clip = snap_train(&train, &times, &mut rng);
        let call = fish_call(FS_FIELD, 0.8, 150.0, 4, 0.05);
        for k in 0..(dur as usize / 7) {
            let at = (k * 7 + 1) * FS_FIELD as usize;
            for (v, c) in clip.samples[at..].iter_mut().zip(&call.samples) {
                *v += c;
            }
        }
        let name = format!("{site}_{}.wav", start.format("%Y%m%dT%H%M%SZ"));
        write_wav(&dir.join(&name), &clip, None).unwrap();
        let cal = if i == 0 { "-170,1.0,10" } else { ",," };
        manifest.push_str(&format!("{name},{site},dep1,{},{cal}\n", start.to_rfc3339()));
    }
    let path = dir.join("manifest.csv");
    std::fs::write(&path, manifest).unwrap();
    path
}

/// Signal (fish-call) and noise (ship) bank listings with disjoint entries in
/// every split.
pub fn banks(dir: &Path) -> (PathBuf, PathBuf) {
    std::fs::create_dir_all(dir.join("wav")).unwrap();
    let mut sig = String::from("path,source,split\n");
    let mut noi = String::from("path,source,split\n");
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for (k, split) in ["train", "validation", "test"].into_iter().enumerate() {
        for j in 0..3 {
            let i = k * 3 + j;
            let c = fish_call(FS_BANK, 0.3 + 0.1 * j as f64, 110.0 + 40.0 * i as f64, 4, 0.25);
            let name = format!("wav/call{i}.wav");
            write_wav(&dir.join(&name), &c, None).unwrap();
            sig.push_str(&format!("{name},synthetic_fish,{split}\n"));
        }
        for j in 0..2 {
            let i = k * 2 + j;
            let n = ship_noise(FS_BANK, 12.0, 250.0, &mut rng).scaled(0.05);
            let name = format!("wav/ship{i}.wav");
            write_wav(&dir.join(&name), &n, None).unwrap();
            noi.push_str(&format!("{name},synthetic_ship,{split}\n"));
        }
    }
    let (sp, np) = (dir.join("signals.csv"), dir.join("noises.csv"));
    std::fs::write(&sp, sig).unwrap();
    std::fs::write(&np, noi).unwrap();
    (sp, np)
}

pub const TRANSECT_HEADER: &str = "site_id,survey_date,live_coral_richness,live_coral_size,live_coral_cover,dead_coral_cover,invertebrate_cover,algal_cover,macroalgal_cover\n";

/// Index CSV and transect CSV for `n_sites` sites where every reef parameter
/// is exactly `a·snap + b·spl_low + c·aci + d` at site level.
pub fn planted_spatial_fixture(dir: &Path, coef: [f64; 4], n_sites: usize) -> (PathBuf, PathBuf) {
    std::fs::create_dir_all(dir).unwrap();
    let mut idx = String::from("site_id,timestamp_iso8601,index_kind,value,units,denoised_flag\n");
    let mut tr = String::from(TRANSECT_HEADER);
    let day = NaiveDate::from_ymd_opt(2021, 6, 1).unwrap();
    for k in 0..n_sites {
        let x = k as f64;
        let snap = 1.0 + 0.7 * x + 0.3 * (x * x % 5.0);
        let spl = 100.0 + 3.0 * ((x * 1.7).sin());
        let aci = 40.0 + 2.5 * ((x * 0.9).cos()) + 0.1 * x;
        let site = format!("s{k:02}");
        for (kind, v, u) in [
            ("snap_rate", snap, "snaps/s"),
            ("spl_low", spl, "dB re FS"),
            ("aci_low", aci, "dimensionless"),
        ] {
            idx.push_str(&format!("{site},2021-06-01T00:00:00Z,{kind},{v},{u},false\n"));
        }
        let y = coef[0] * snap + coef[1] * spl + coef[2] * aci + coef[3];
        // the same planted value in each bounded column
        tr.push_str(&format!("{site},{day},{y},{y},{y},{y},{y},{y},{y}\n"));
    }
    let (ip, tp) = (dir.join("indices.csv"), dir.join("transect.csv"));
    std::fs::write(&ip, idx).unwrap();
    std::fs::write(&tp, tr).unwrap();
    (ip, tp)
}

pub fn clip(samples: Vec<f64>, fs: u32) -> AudioClip {
    AudioClip::new(samples, fs).unwrap()
}
