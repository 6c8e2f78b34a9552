//! Checkpoint files and the whole-model / policy-only transfer plans.
//!
//! File layout, little-endian: magic `SACCKPT1`, format version (u32),
//! architecture descriptor (u32 length + UTF-8), tensor count (u32), then per
//! tensor a u32-prefixed UTF-8 name, rank (u32), dims (u32 each) and an f32
//! payload; a u32-prefixed UTF-8 block of `key=value` metadata lines; and a
//! CRC32 of everything before it.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::autodiff::{AdamState, ParamSet, Tensor};
use crate::sac::{Architecture, Optimizers, SacAgent, SacError, TrainSpec, ACTOR, CRITIC1, CRITIC2, TARGET1, TARGET2};

pub const MAGIC: &[u8; 8] = b"SACCKPT1";
pub const FORMAT_VERSION: u32 = 1;
const ADAM_PREFIX: &str = "adam";

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a checkpoint (bad magic bytes)")]
    BadMagic,
    #[error("unsupported checkpoint format {0}")]
    Version(u32),
    #[error("checkpoint truncated")]
    Truncated,
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("invalid UTF-8 in checkpoint")]
    Utf8,
    #[error("bad checkpoint contents: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub arch: Architecture,
    pub params: ParamSet,
    pub optimizers: Option<Optimizers>,
    pub meta: BTreeMap<String, String>,
}

impl Checkpoint {
    /// Snapshot of an agent. Parameters are rounded to single precision
    /// once written.
    pub fn from_agent(agent: &SacAgent, with_optimizer: bool, meta: BTreeMap<String, String>) -> Self {
        Self {
            arch: agent.arch.clone(),
            params: agent.params.clone(),
            optimizers: with_optimizer.then(|| agent.opt.clone()),
            meta,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut tensors: Vec<(String, Vec<usize>, Vec<f64>)> = self
            .params
            .iter()
            .map(|(n, t)| (n.clone(), t.shape().to_vec(), t.data().to_vec()))
            .collect();
        let mut meta = self.meta.clone();
        if let Some(opt) = &self.optimizers {
            for (group, st) in opt.groups() {
                meta.insert(format!("{ADAM_PREFIX}.{group}.step"), st.step.to_string());
                meta.insert(format!("{ADAM_PREFIX}.{group}.lr"), st.lr.to_string());
                for (kind, moments) in [("m", &st.m), ("v", &st.v)] {
                    for (name, vals) in moments {
                        let shape = self.params.get(name).map(|t| t.shape().to_vec()).unwrap_or(vec![vals.len()]);
                        tensors.push((format!("{ADAM_PREFIX}.{group}.{kind}.{name}"), shape, vals.clone()));
                    }
                }
            }
        }
        tensors.sort_by(|a, b| a.0.cmp(&b.0));

        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        put_str(&mut out, &self.arch.descriptor());
        out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
        for (name, shape, data) in &tensors {
            put_str(&mut out, name);
            out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
            for d in shape {
                out.extend_from_slice(&(*d as u32).to_le_bytes());
            }
            for v in data {
                out.extend_from_slice(&(*v as f32).to_le_bytes());
            }
        }
        let meta_text: String = meta.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        put_str(&mut out, &meta_text);
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        if bytes.len() < MAGIC.len() + 8 {
            return Err(CheckpointError::Truncated);
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().unwrap());
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(CheckpointError::Checksum { stored, computed });
        }
        let mut r = Reader { buf: body, pos: MAGIC.len() };
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(CheckpointError::Version(version));
        }
        let arch = Architecture::parse_descriptor(&r.string()?).map_err(CheckpointError::Invalid)?;
        let count = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(count);
        for _ in 0..count {
            let name = r.string()?;
            let rank = r.u32()? as usize;
            let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
            let n: usize = shape.iter().product();
            let raw = r.take(n * 4)?;
            let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
            tensors.push((name, shape, data));
        }
        let meta_text = r.string()?;
        if r.pos != body.len() {
            return Err(CheckpointError::Invalid("trailing bytes before checksum".into()));
        }
        let mut meta = BTreeMap::new();
        for line in meta_text.lines() {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CheckpointError::Invalid(format!("metadata line `{line}`")))?;
            meta.insert(k.to_string(), v.to_string());
        }

        let mut params = ParamSet::new();
        let mut moments: Vec<(String, Vec<f64>)> = Vec::new();
        for (name, shape, data) in tensors {
            if name.starts_with(&format!("{ADAM_PREFIX}.")) {
                moments.push((name, data));
            } else {
                let t = Tensor::new(shape, data).map_err(|e| CheckpointError::Invalid(e.to_string()))?;
                params.insert(name, t);
            }
        }
        let optimizers = restore_optimizers(&mut meta, moments)?;
        let ckpt = Self { arch, params, optimizers, meta };
        ckpt.check_shapes()?;
        Ok(ckpt)
    }

    /// Every network tensor must match the architecture descriptor.
    fn check_shapes(&self) -> Result<(), CheckpointError> {
        let invalid = |e: crate::autodiff::TensorError| CheckpointError::Invalid(e.to_string());
        self.arch.actor().check(ACTOR, &self.params).map_err(invalid)?;
        for prefix in [CRITIC1, CRITIC2, TARGET1, TARGET2] {
            if self.params.names_with_prefix(prefix).next().is_some() {
                self.arch.critic().check(prefix, &self.params).map_err(invalid)?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let bytes = self.to_bytes();
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let tmp = dir.join(format!(
            ".{}.tmp",
            path.file_name().and_then(|n| n.to_str()).unwrap_or("checkpoint")
        ));
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(&bytes)?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn global_step(&self) -> Option<u64> {
        self.meta.get("global_step").and_then(|s| s.parse().ok())
    }
}

fn restore_optimizers(
    meta: &mut BTreeMap<String, String>,
    moments: Vec<(String, Vec<f64>)>,
) -> Result<Option<Optimizers>, CheckpointError> {
    let has_any = meta.keys().any(|k| k.starts_with(&format!("{ADAM_PREFIX}.")));
    if !has_any && moments.is_empty() {
        return Ok(None);
    }
    let mut opt = Optimizers::new(0.0);
    for (group, st) in opt.groups_mut() {
        let key = |f: &str| format!("{ADAM_PREFIX}.{group}.{f}");
        let get = |meta: &mut BTreeMap<String, String>, f: &str| {
            meta.remove(&key(f))
                .ok_or_else(|| CheckpointError::Invalid(format!("missing metadata {}", key(f))))
        };
        st.step = get(meta, "step")?.parse().map_err(|_| CheckpointError::Invalid(key("step")))?;
        st.lr = get(meta, "lr")?.parse().map_err(|_| CheckpointError::Invalid(key("lr")))?;
    }
    for (name, data) in moments {
        let rest = &name[ADAM_PREFIX.len() + 1..];
        let (group, rest) = rest.split_once('.').ok_or_else(|| CheckpointError::Invalid(name.clone()))?;
        let (kind, param) = rest.split_once('.').ok_or_else(|| CheckpointError::Invalid(name.clone()))?;
        let st: &mut AdamState = match group {
            "actor" => &mut opt.actor,
            "critic" => &mut opt.critic,
            "alpha" => &mut opt.alpha,
            _ => return Err(CheckpointError::Invalid(format!("unknown optimizer group in {name}"))),
        };
        match kind {
            "m" => st.m.insert(param.to_string(), data),
            "v" => st.v.insert(param.to_string(), data),
            _ => return Err(CheckpointError::Invalid(format!("unknown moment kind in {name}"))),
        };
    }
    Ok(Some(opt))
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).ok_or(CheckpointError::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(CheckpointError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, CheckpointError> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| CheckpointError::Utf8)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferKind {
    /// Actor, both critics, both targets and the temperature.
    Whole,
    /// Actor only; critics stay freshly initialized.
    PolicyOnly,
}

impl TransferKind {
    pub fn tag(&self) -> &'static str {
        match self {
            TransferKind::Whole => "whole",
            TransferKind::PolicyOnly => "policy_only",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        match s {
            "whole" => Some(TransferKind::Whole),
            "policy_only" => Some(TransferKind::PolicyOnly),
            _ => None,
        }
    }
}

impl fmt::Display for TransferKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferPlan {
    pub kind: TransferKind,
    pub reset_optimizer: bool,
    pub source: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum TransferError {
    #[error("architecture mismatch: {}", .0.join("; "))]
    ArchMismatch(Vec<String>),
    #[error("source checkpoint lacks `{0}`")]
    Missing(String),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

/// Copies source parameters into `agent` according to `kind`. Nothing is
/// modified unless the architectures match exactly.
pub fn apply_transfer(
    kind: TransferKind,
    reset_optimizer: bool,
    source: &Checkpoint,
    agent: &mut SacAgent,
) -> Result<(), TransferError> {
    let diff = source.arch.diff(&agent.arch);
    if !diff.is_empty() {
        return Err(TransferError::ArchMismatch(diff));
    }
    let names: Vec<String> = match kind {
        TransferKind::Whole => agent.params.names().cloned().collect(),
        TransferKind::PolicyOnly => agent.params.names_with_prefix(ACTOR).cloned().collect(),
    };
    let mut copied = agent.params.clone();
    let mut has_targets = true;
    for name in &names {
        match source.params.get(name) {
            Some(t) => {
                copied.insert(name.clone(), t.clone());
            }
            None if kind == TransferKind::Whole && (name.starts_with(TARGET1) || name.starts_with(TARGET2)) => {
                has_targets = false;
            }
            None if kind == TransferKind::Whole && name == crate::sac::LOG_ALPHA => {}
            None => return Err(TransferError::Missing(name.clone())),
        }
    }
    agent.params = copied;
    if kind == TransferKind::PolicyOnly || !has_targets {
        agent.sync_targets();
    }

    if reset_optimizer {
        agent.opt.reset();
    } else if let Some(src) = &source.optimizers {
        match kind {
            TransferKind::Whole => agent.opt = src.clone(),
            TransferKind::PolicyOnly => {
                agent.opt.reset();
                agent.opt.actor = src.actor.clone();
            }
        }
    }
    Ok(())
}

pub fn arm_label(kind: TransferKind, across_task: bool) -> &'static str {
    if across_task {
        "across_task"
    } else {
        kind.tag()
    }
}

/// Trains a source policy on a fixed task and returns its checkpoint,
/// tagged with `source_task`.
pub fn pretrain(spec: &TrainSpec, source_task: &str) -> Result<Checkpoint, SacError> {
    let out = crate::sac::train(spec, None, &mut crate::sac::NoopObserver)?;
    Ok(Checkpoint::from_agent(&out.agent, true, source_meta(source_task, spec.total_steps, spec.seed)))
}

pub fn source_meta(source_task: &str, global_step: u64, seed: u64) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("source_task".to_string(), source_task.to_string()),
        ("global_step".to_string(), global_step.to_string()),
        ("seed".to_string(), seed.to_string()),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sac::SacConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn agent(seed: u64, obs: usize) -> SacAgent {
        let cfg = SacConfig {
            hidden_width: 8,
            hidden_layers: 1,
            ..SacConfig::default()
        };
        SacAgent::new(Architecture::new(obs, 2, vec![8]), &cfg, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn bytes_round_trip() {
        let a = agent(1, 4);
        let ck = Checkpoint::from_agent(&a, true, source_meta("grasp", 10, 1));
        let bytes = ck.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(back.meta["source_task"], "grasp");
        for (name, t) in a.params.iter() {
            let u = back.params.get(name).unwrap();
            for (x, y) in t.data().iter().zip(u.data()) {
                assert!((x - y).abs() <= x.abs() * 2f64.powi(-24));
            }
        }
    }

    #[test]
    fn corruption_detected() {
        let bytes = Checkpoint::from_agent(&agent(2, 4), false, BTreeMap::new()).to_bytes();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Checkpoint::from_bytes(&bad), Err(CheckpointError::BadMagic)));
        let mut bad = bytes.clone();
        bad[40] ^= 1;
        assert!(matches!(Checkpoint::from_bytes(&bad), Err(CheckpointError::Checksum { .. })));
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 9]).is_err());
    }

    #[test]
    fn mismatch_refused_without_side_effects() {
        let src = Checkpoint::from_agent(&agent(3, 4), false, BTreeMap::new());
        let mut dst = agent(4, 5);
        let before = dst.clone();
        let err = apply_transfer(TransferKind::PolicyOnly, true, &src, &mut dst).unwrap_err();
        assert!(err.to_string().contains("obs_dim: 4 vs 5"));
        assert_eq!(dst, before);
    }
}
