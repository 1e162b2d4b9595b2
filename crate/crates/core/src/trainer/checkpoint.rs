//! Whole-trainer checkpoints.
//!
//! Layout (little-endian): magic `MARQCKPT`, version `u32`, TOML config echo
//! (length-prefixed), seed `u64`, iteration `u64`, env steps `u64`, the
//! rollout / sample / env RNG states (32-byte key, stream `u64`, word
//! position as two `u64` halves), learner count `u32` then per learner the
//! online network with optimizer and the target network, buffer count `u32`
//! then each replay dump, environment state as JSON (length-prefixed), and a
//! trailing SHA-256 of everything before it.

use std::io::{Cursor, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::binio::{expect_magic, get_bytes, get_u32, get_u64, put_bytes, put_u32, put_u64};
use crate::distq::checkpoint::{read_qnet, write_qnet};
use crate::envs::Env;
use crate::error::{Error, Result};
use crate::replay::io::{read_buffer, write_buffer};

use super::config::TrainerConfig;
use super::state::{Learner, Trainer};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"MARQCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

const DIGEST_LEN: usize = 32;
const MAX_TEXT: usize = 1 << 24;
const MAX_ITEMS: usize = 1 << 16;

fn put_rng<W: Write>(w: &mut W, rng: &ChaCha8Rng) -> Result<()> {
    w.write_all(&rng.get_seed())?;
    put_u64(w, rng.get_stream())?;
    let pos = rng.get_word_pos();
    put_u64(w, pos as u64)?;
    put_u64(w, (pos >> 64) as u64)?;
    Ok(())
}

fn get_rng<R: Read>(r: &mut R) -> Result<ChaCha8Rng> {
    let mut key = [0u8; 32];
    r.read_exact(&mut key)
        .map_err(|_| Error::Format("unexpected end of data (truncated input)".into()))?;
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(get_u64(r)?);
    let lo = get_u64(r)? as u128;
    let hi = get_u64(r)? as u128;
    rng.set_word_pos(lo | (hi << 64));
    Ok(rng)
}

fn format_err(e: impl std::fmt::Display) -> Error {
    Error::Format(e.to_string())
}

impl Trainer {
    pub fn to_checkpoint_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.write_all(CHECKPOINT_MAGIC)?;
        put_u32(&mut out, CHECKPOINT_VERSION as usize)?;
        put_bytes(&mut out, self.config.to_toml_string()?.as_bytes())?;
        put_u64(&mut out, self.seed)?;
        put_u64(&mut out, self.iteration)?;
        put_u64(&mut out, self.env_steps)?;
        for rng in [&self.rollout_rng, &self.sample_rng, &self.env_rng] {
            put_rng(&mut out, rng)?;
        }
        put_u32(&mut out, self.learners.len())?;
        for l in &self.learners {
            write_qnet(&mut out, &l.online, Some(&l.adam))?;
            write_qnet(&mut out, &l.target, None)?;
        }
        put_u32(&mut out, self.buffers.len())?;
        for b in &self.buffers {
            write_buffer(b, &mut out)?;
        }
        put_bytes(&mut out, serde_json::to_string(&self.env).map_err(format_err)?.as_bytes())?;
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }

    pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < CHECKPOINT_MAGIC.len() + DIGEST_LEN {
            return Err(Error::Format("checkpoint is truncated".into()));
        }
        let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
        let mut r = Cursor::new(body);
        expect_magic(&mut r, CHECKPOINT_MAGIC)?;
        let version = get_u32(&mut r)? as u32;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Version {
                expected: CHECKPOINT_VERSION,
                found: version,
            });
        }
        if Sha256::digest(body).as_slice() != digest {
            return Err(Error::Format("checkpoint digest mismatch (corrupt or truncated file)".into()));
        }
        let config_text = String::from_utf8(get_bytes(&mut r, MAX_TEXT)?).map_err(format_err)?;
        let config = TrainerConfig::from_toml_str(&config_text)?;
        let seed = get_u64(&mut r)?;
        let iteration = get_u64(&mut r)?;
        let env_steps = get_u64(&mut r)?;
        let rollout_rng = get_rng(&mut r)?;
        let sample_rng = get_rng(&mut r)?;
        let env_rng = get_rng(&mut r)?;
        let n_learners = get_u32(&mut r)?;
        if n_learners > MAX_ITEMS {
            return Err(Error::Format(format!("implausible learner count {n_learners}")));
        }
        let learners = (0..n_learners)
            .map(|_| {
                let (online, adam) = read_qnet(&mut r)?;
                let adam = adam.ok_or_else(|| Error::Format("learner is missing its optimizer state".into()))?;
                let (target, _) = read_qnet(&mut r)?;
                Ok(Learner { online, target, adam })
            })
            .collect::<Result<Vec<_>>>()?;
        let n_buffers = get_u32(&mut r)?;
        if n_buffers > MAX_ITEMS {
            return Err(Error::Format(format!("implausible buffer count {n_buffers}")));
        }
        let buffers = (0..n_buffers).map(|_| read_buffer(&mut r)).collect::<Result<Vec<_>>>()?;
        let env_json = String::from_utf8(get_bytes(&mut r, MAX_TEXT)?).map_err(format_err)?;
        let env: Env = serde_json::from_str(&env_json).map_err(format_err)?;
        if (r.position() as usize) != body.len() {
            return Err(Error::Format("trailing bytes after checkpoint body".into()));
        }
        let spec = env.spec();
        let expected_learners = if config.parameter_sharing { 1 } else { spec.num_agents };
        if learners.len() != expected_learners || buffers.len() != spec.num_agents || *env.kind() != config.env {
            return Err(Error::Format("checkpoint contents do not match its configuration".into()));
        }
        Ok(Trainer {
            config,
            seed,
            learners,
            buffers,
            env,
            rollout_rng,
            sample_rng,
            env_rng,
            iteration,
            env_steps,
        })
    }

    /// Writes through a temporary sibling file so a failed save leaves any
    /// existing checkpoint intact.
    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        let bytes = self.to_checkpoint_bytes()?;
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, &bytes)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self> {
        Self::from_checkpoint_bytes(&std::fs::read(path)?)
    }
}
