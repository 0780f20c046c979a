//! Binary checkpoint format.
//!
//! All integers are little-endian. Layout:
//!
//! ```text
//! magic "ACRT" | version u32 | seed u64 | bootstrap size u32
//! trunk network
//! head count u32 | (class u8, network)*
//! decision variant u8 | registry (u32 len, u8*) | network
//! pool: capacity (u8 tag, u64) | seed u64 | class count u32 | (class u8, u32 len, u64 id*)*
//! crc32 of everything above, u32
//! ```
//!
//! A network is its input shape, its layer specs and one named tensor per
//! parameter: `u32 name len | name | u32 rank | u64 dims | f32 values | u8 mask`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use alloc::collections::BTreeMap;

use super::{AccretionState, DecisionNetwork, DecisionVariant, DetectorBank, DetectorHead, SharedTrunk};
use crate::data::{Capacity, DataPool};
use crate::nn::{LayerSpec, Network, Param, Tensor, TrainableMask};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"ACRT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic bytes)")]
    BadMagic,
    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("checkpoint checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("checkpoint truncated at byte {offset}")]
    Truncated { offset: usize },
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
}

type CResult<T> = core::result::Result<T, CheckpointError>;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u32).to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn network(&mut self, net: &Network) {
        self.u32(net.input_shape().len());
        for &d in net.input_shape() {
            self.u64(d as u64);
        }
        self.u32(net.layers().len());
        for layer in net.layers() {
            match *layer {
                LayerSpec::Conv2d {
                    in_channels,
                    out_channels,
                    kernel_h,
                    kernel_w,
                    stride,
                    padding,
                } => {
                    self.u8(0);
                    for v in [in_channels, out_channels, kernel_h, kernel_w, stride, padding] {
                        self.u32(v);
                    }
                }
                LayerSpec::MaxPool2d { size, stride } => {
                    self.u8(1);
                    self.u32(size);
                    self.u32(stride);
                }
                LayerSpec::Dense { inputs, outputs } => {
                    self.u8(2);
                    self.u32(inputs);
                    self.u32(outputs);
                }
                LayerSpec::Relu => self.u8(3),
                LayerSpec::Softmax => self.u8(4),
                LayerSpec::Flatten => self.u8(5),
            }
        }
        for (name, p) in param_names(net).iter().zip(net.params()) {
            self.u32(name.len());
            self.0.extend_from_slice(name.as_bytes());
            self.u32(p.value.shape().len());
            for &d in p.value.shape() {
                self.u64(d as u64);
            }
            for v in p.value.data() {
                self.0.extend_from_slice(&v.to_le_bytes());
            }
            self.0.extend(p.mask.bits().iter().map(|&b| b as u8));
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> CResult<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or(CheckpointError::Truncated { offset: self.pos })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> CResult<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> CResult<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
    fn u64(&mut self) -> CResult<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn dim(&mut self) -> CResult<usize> {
        usize::try_from(self.u64()?).map_err(|_| malformed("dimension overflows usize"))
    }

    fn network(&mut self) -> CResult<Network> {
        let rank = self.u32()?;
        let input_shape = (0..rank).map(|_| self.dim()).collect::<CResult<Vec<_>>>()?;
        let n_layers = self.u32()?;
        let mut layers = Vec::with_capacity(n_layers.min(1024));
        for _ in 0..n_layers {
            let layer = match self.u8()? {
                0 => {
                    let mut v = [0usize; 6];
                    for x in &mut v {
                        *x = self.u32()?;
                    }
                    LayerSpec::Conv2d {
                        in_channels: v[0],
                        out_channels: v[1],
                        kernel_h: v[2],
                        kernel_w: v[3],
                        stride: v[4],
                        padding: v[5],
                    }
                }
                1 => LayerSpec::MaxPool2d {
                    size: self.u32()?,
                    stride: self.u32()?,
                },
                2 => LayerSpec::Dense {
                    inputs: self.u32()?,
                    outputs: self.u32()?,
                },
                3 => LayerSpec::Relu,
                4 => LayerSpec::Softmax,
                5 => LayerSpec::Flatten,
                t => return Err(malformed(format!("unknown layer tag {t}"))),
            };
            layers.push(layer);
        }
        let mut net = Network::new(&input_shape, layers).map_err(|e| malformed(format!("{e}")))?;
        let names = param_names(&net);
        for (i, name) in names.iter().enumerate() {
            let len = self.u32()?;
            let found = self.take(len)?;
            if found != name.as_bytes() {
                return Err(malformed(format!(
                    "expected tensor `{name}`, found `{}`",
                    String::from_utf8_lossy(found)
                )));
            }
            let rank = self.u32()?;
            let shape = (0..rank).map(|_| self.dim()).collect::<CResult<Vec<_>>>()?;
            if shape != net.params()[i].value.shape() {
                return Err(malformed(format!("tensor `{name}` has shape {shape:?}")));
            }
            let n: usize = shape.iter().product();
            let bytes = self.take(n.checked_mul(4).ok_or_else(|| malformed("tensor too large"))?)?;
            let values = bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            let bits = self
                .take(n)?
                .iter()
                .map(|&b| match b {
                    0 => Ok(false),
                    1 => Ok(true),
                    _ => Err(malformed(format!("mask byte {b} in `{name}`"))),
                })
                .collect::<CResult<Vec<_>>>()?;
            let value = Tensor::new(shape.clone(), values).map_err(|e| malformed(format!("{e}")))?;
            let mask = TrainableMask::from_bits(&shape, bits).map_err(|e| malformed(format!("{e}")))?;
            net.params_mut()[i] = Param::with_mask(value, mask).map_err(|e| malformed(format!("{e}")))?;
        }
        Ok(net)
    }
}

fn malformed(msg: impl Into<String>) -> CheckpointError {
    CheckpointError::Malformed(msg.into())
}

fn param_names(net: &Network) -> Vec<String> {
    let mut names = Vec::new();
    for (i, layer) in net.layers().iter().enumerate() {
        if !layer.param_shapes().is_empty() {
            names.push(format!("{i}.{}.weight", layer.name()));
            names.push(format!("{i}.{}.bias", layer.name()));
        }
    }
    names
}

fn variant_tag(v: DecisionVariant) -> u8 {
    DecisionVariant::ALL.iter().position(|&x| x == v).unwrap() as u8
}

/// Serialized form of one network, exactly as it appears inside a
/// checkpoint.
pub fn encode_network(net: &Network) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.network(net);
    w.0
}

/// Serialize the full accretion state.
pub fn encode_checkpoint(state: &AccretionState) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(&CHECKPOINT_MAGIC);
    w.u32(FORMAT_VERSION as usize);
    w.u64(state.seed);
    w.u32(state.bootstrap_size);
    w.network(state.trunk.net());
    w.u32(state.bank.len());
    for head in state.bank.heads() {
        w.u8(head.class());
        w.network(head.net());
    }
    w.u8(variant_tag(state.decision.variant()));
    w.u32(state.decision.classes());
    w.0.extend_from_slice(state.decision.registry());
    w.network(state.decision.net());
    match state.pool.capacity() {
        Capacity::Unlimited => {
            w.u8(0);
            w.u64(0);
        }
        Capacity::PerClass(n) => {
            w.u8(1);
            w.u64(n as u64);
        }
    }
    w.u64(state.pool.seed());
    w.u32(state.pool.by_class().len());
    for (&class, ids) in state.pool.by_class() {
        w.u8(class);
        w.u32(ids.len());
        for &id in ids {
            w.u64(id as u64);
        }
    }
    let crc = crc32fast::hash(&w.0);
    w.0.extend_from_slice(&crc.to_le_bytes());
    w.0
}

/// Parse and verify a checkpoint produced by [`encode_checkpoint`].
pub fn decode_checkpoint(bytes: &[u8]) -> Result<AccretionState, CheckpointError> {
    if bytes.len() < 8 {
        return Err(CheckpointError::Truncated { offset: bytes.len() });
    }
    if bytes[..4] != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(CheckpointError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    if bytes.len() < 12 {
        return Err(CheckpointError::Truncated { offset: bytes.len() });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(CheckpointError::ChecksumMismatch { stored, computed });
    }

    let mut r = Reader { buf: body, pos: 8 };
    let seed = r.u64()?;
    let bootstrap_size = r.u32()?;
    let trunk = SharedTrunk::from_network(r.network()?);
    let n_heads = r.u32()?;
    let mut bank = DetectorBank::new();
    for _ in 0..n_heads {
        let class = r.u8()?;
        let head = DetectorHead::from_network(class, r.network()?).map_err(|e| malformed(format!("{e}")))?;
        bank.add_detector(head).map_err(|e| malformed(format!("{e}")))?;
    }
    let tag = r.u8()? as usize;
    let variant = *DecisionVariant::ALL
        .get(tag)
        .ok_or_else(|| malformed(format!("unknown decision variant tag {tag}")))?;
    let m = r.u32()?;
    let registry = r.take(m)?.to_vec();
    let decision = DecisionNetwork::from_network(variant, registry, r.network()?)
        .map_err(|e| malformed(format!("{e}")))?;
    let capacity = match (r.u8()?, r.u64()?) {
        (0, _) => Capacity::Unlimited,
        (1, n) => Capacity::PerClass(n as usize),
        (t, _) => return Err(malformed(format!("unknown capacity tag {t}"))),
    };
    let pool_seed = r.u64()?;
    let n_classes = r.u32()?;
    let mut classes = BTreeMap::new();
    for _ in 0..n_classes {
        let class = r.u8()?;
        let len = r.u32()?;
        let ids = (0..len).map(|_| r.dim()).collect::<CResult<Vec<_>>>()?;
        classes.insert(class, ids);
    }
    if r.pos != body.len() {
        return Err(malformed(format!("{} unread bytes", body.len() - r.pos)));
    }
    let pool = DataPool::from_manifest(capacity, pool_seed, classes).map_err(|e| malformed(format!("{e}")))?;
    AccretionState::new(trunk, bank, decision, pool, seed, bootstrap_size).map_err(|e| malformed(format!("{e}")))
}
