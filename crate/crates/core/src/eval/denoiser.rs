use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::Command;

use super::{spectral_gate_denoise, EvalError, GateConfig, NoiseProfile, Result};
use crate::audio::{read_wav, AudioClip};

/// A transform from a noisy recording to an estimate of its biological part.
///
/// `prepare` sees every noisy input path once before any `denoise` call, so
/// batch plug-ins can process them in one go. Outputs must keep the input's
/// sample count; pairs violating that are excluded from evaluation.
pub trait Denoiser: Sync {
    fn id(&self) -> &str;

    fn prepare(&mut self, _noisy_paths: &[PathBuf]) -> Result<()> {
        Ok(())
    }

    fn denoise(&self, noisy_path: &Path, noisy: &AudioClip) -> Result<AudioClip>;
}

/// Returns its input unchanged.
#[derive(Debug, Default, Clone)]
pub struct IdentityDenoiser;

impl Denoiser for IdentityDenoiser {
    fn id(&self) -> &str {
        "identity"
    }

    fn denoise(&self, _: &Path, noisy: &AudioClip) -> Result<AudioClip> {
        Ok(noisy.clone())
    }
}

/// The reference spectral-gate baseline.
#[derive(Debug, Default, Clone)]
pub struct SpectralGateDenoiser {
    pub config: GateConfig,
    pub profile: Option<NoiseProfile>,
}

impl Denoiser for SpectralGateDenoiser {
    fn id(&self) -> &str {
        "spectral_gate"
    }

    fn denoise(&self, _: &Path, noisy: &AudioClip) -> Result<AudioClip> {
        spectral_gate_denoise(noisy, self.profile.as_ref(), &self.config)
    }
}

/// Looks up `<dir>/<basename of the noisy file>`, e.g. outputs of an
/// external model run ahead of time.
#[derive(Debug, Clone)]
pub struct DirectoryDenoiser {
    id: String,
    dir: PathBuf,
}

impl DirectoryDenoiser {
    pub fn new(id: impl Into<String>, dir: impl Into<PathBuf>) -> Self {
        Self {
            id: id.into(),
            dir: dir.into(),
        }
    }

    fn output_for(&self, noisy_path: &Path) -> PathBuf {
        self.dir.join(noisy_path.file_name().unwrap_or_default())
    }
}

impl Denoiser for DirectoryDenoiser {
    fn id(&self) -> &str {
        &self.id
    }

    fn denoise(&self, noisy_path: &Path, _: &AudioClip) -> Result<AudioClip> {
        let out = self.output_for(noisy_path);
        if !out.exists() {
            return Err(EvalError::MissingOutput(out));
        }
        Ok(read_wav(&out, None)?)
    }
}

/// Runs `program [args..] <noisy_dir> <out_dir>` once over all inputs; the
/// program must write one WAV per input under the same basename.
#[derive(Debug)]
pub struct CommandDenoiser {
    id: String,
    program: PathBuf,
    args: Vec<String>,
    work: Option<(tempfile::TempDir, DirectoryDenoiser)>,
}

impl CommandDenoiser {
    pub fn new(id: impl Into<String>, program: impl Into<PathBuf>, args: Vec<String>) -> Self {
        Self {
            id: id.into(),
            program: program.into(),
            args,
            work: None,
        }
    }

    fn fail(&self, msg: impl Into<String>) -> EvalError {
        EvalError::Denoiser {
            id: self.id.clone(),
            msg: msg.into(),
        }
    }
}

impl Denoiser for CommandDenoiser {
    fn id(&self) -> &str {
        &self.id
    }

    fn prepare(&mut self, noisy_paths: &[PathBuf]) -> Result<()> {
        let work = tempfile::tempdir()?;
        let input = work.path().join("noisy");
        let output = work.path().join("denoised");
        std::fs::create_dir_all(&input)?;
        std::fs::create_dir_all(&output)?;
        let mut names = HashSet::new();
        for p in noisy_paths {
            let name = p.file_name().ok_or_else(|| self.fail(format!("no file name in {}", p.display())))?;
            if !names.insert(name.to_os_string()) {
                return Err(self.fail(format!("duplicate input basename {}", name.to_string_lossy())));
            }
            std::fs::copy(p, input.join(name))?;
        }
        let status = Command::new(&self.program)
            .args(&self.args)
            .arg(&input)
            .arg(&output)
            .status()
            .map_err(|e| self.fail(format!("cannot run {}: {e}", self.program.display())))?;
        if !status.success() {
            return Err(self.fail(format!("{} exited with {status}", self.program.display())));
        }
        let dir = DirectoryDenoiser::new(self.id.clone(), output);
        self.work = Some((work, dir));
        Ok(())
    }

    fn denoise(&self, noisy_path: &Path, noisy: &AudioClip) -> Result<AudioClip> {
        match &self.work {
            Some((_, dir)) => dir.denoise(noisy_path, noisy),
            None => Err(self.fail("prepare was not called")),
        }
    }
}
