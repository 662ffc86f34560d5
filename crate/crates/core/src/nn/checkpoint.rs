//! Binary model snapshot.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "GNET"  u32 version
//! u32 in_features  u32 n_aux  u8 pointnet  u8 first_only  u64 expected_nodes (0 = none)
//! 5 x { u32 len, len x u32 width }      enc1, enc2, cls, seg1, seg2
//! u64 parameter count, that many f64 values in declaration order
//! n_aux f64 auxiliary shifts, n_aux f64 auxiliary scales
//! u32 CRC32 of every preceding byte
//! ```

use alloc::vec::Vec;

use thiserror::Error;

use super::{GraphNetConfig, GraphNetModel, NnError};
use crate::matrix::Matrix;
use crate::real::Real;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"GNET";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckpointError {
    #[error("not a model checkpoint")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("checkpoint checksum mismatch (truncated or corrupted file)")]
    Checksum,
    #[error("malformed checkpoint: {0}")]
    Malformed(&'static str),
    #[error("checkpoint holds {found} parameters, architecture needs {expected}")]
    ParameterCount { expected: u64, found: u64 },
    #[error(transparent)]
    Model(#[from] NnError),
}

pub fn encode_checkpoint(model: &GraphNetModel) -> Vec<u8> {
    let cfg = model.config();
    let mut out = Vec::with_capacity(64 + 8 * model.num_parameters());
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(cfg.in_features as u32).to_le_bytes());
    out.extend_from_slice(&(cfg.n_aux as u32).to_le_bytes());
    out.push(cfg.pointnet_mode as u8);
    out.push(cfg.first_layer_only_adjacency as u8);
    out.extend_from_slice(&(cfg.expected_nodes.unwrap_or(0) as u64).to_le_bytes());
    for block in [&cfg.enc_block1, &cfg.enc_block2, &cfg.cls_head, &cfg.seg_block1, &cfg.seg_block2] {
        out.extend_from_slice(&(block.len() as u32).to_le_bytes());
        for &w in block.iter() {
            out.extend_from_slice(&(w as u32).to_le_bytes());
        }
    }
    out.extend_from_slice(&(model.num_parameters() as u64).to_le_bytes());
    for t in model.tensors() {
        for &v in t {
            out.extend_from_slice(&(v as f64).to_le_bytes());
        }
    }
    for &v in model.aux_shift.iter().chain(&model.aux_scale) {
        out.extend_from_slice(&(v as f64).to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(CheckpointError::Malformed("unexpected end of data"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn flag(&mut self) -> Result<bool, CheckpointError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(CheckpointError::Malformed("flag byte is not 0 or 1")),
        }
    }

    fn widths(&mut self) -> Result<Vec<usize>, CheckpointError> {
        let n = self.u32()? as usize;
        if n > 1024 {
            return Err(CheckpointError::Malformed("implausible layer count"));
        }
        (0..n).map(|_| self.u32().map(|w| w as usize)).collect()
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<GraphNetModel, CheckpointError> {
    if bytes.len() < 4 || bytes[..4] != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    if bytes.len() < 12 {
        return Err(CheckpointError::Checksum);
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    if crc32fast::hash(body) != stored {
        return Err(CheckpointError::Checksum);
    }
    let mut r = Reader { buf: body, pos: 4 };
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::Version(version));
    }
    let in_features = r.u32()? as usize;
    let n_aux = r.u32()? as usize;
    let pointnet_mode = r.flag()?;
    let first_layer_only_adjacency = r.flag()?;
    let expected = r.u64()?;
    let config = GraphNetConfig {
        in_features,
        n_aux,
        pointnet_mode,
        first_layer_only_adjacency,
        expected_nodes: (expected != 0).then_some(expected as usize),
        enc_block1: r.widths()?,
        enc_block2: r.widths()?,
        cls_head: r.widths()?,
        seg_block1: r.widths()?,
        seg_block2: r.widths()?,
    };
    config.validate()?;
    let expected_count: u64 = config.weight_shapes().iter().map(|&(i, o)| (i * o) as u64).sum::<u64>()
        + config.cls_head.iter().map(|&w| w as u64).sum::<u64>();
    let found = r.u64()?;
    if found != expected_count {
        return Err(CheckpointError::ParameterCount { expected: expected_count, found });
    }
    if (body.len() - r.pos) as u64 != (found + 2 * n_aux as u64) * 8 {
        return Err(CheckpointError::Malformed("payload length does not match parameter count"));
    }
    let mut model = GraphNetModel::from_weight_fn(config, |i, o| Matrix::zeros(i, o))?;
    let mut value = || -> Result<Real, CheckpointError> {
        let x = f64::from_le_bytes(r.take(8)?.try_into().unwrap());
        if !x.is_finite() {
            return Err(CheckpointError::Malformed("non-finite parameter"));
        }
        Ok(x as Real)
    };
    for t in model.tensors_mut() {
        for v in t.iter_mut() {
            *v = value()?;
        }
    }
    let shift = (0..n_aux).map(|_| value()).collect::<Result<Vec<_>, _>>()?;
    let scale = (0..n_aux).map(|_| value()).collect::<Result<Vec<_>, _>>()?;
    model.set_aux_standardization(shift, scale)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GraphNetModel {
        let mut c = GraphNetConfig::standard(3, 2, 2);
        c.enc_block1 = alloc::vec![4, 4];
        c.enc_block2 = alloc::vec![4, 8];
        c.cls_head = alloc::vec![6, 2];
        c.seg_block1 = alloc::vec![5];
        c.seg_block2 = alloc::vec![3, 2];
        c.expected_nodes = Some(100);
        let mut m = GraphNetModel::init(c, 8).unwrap();
        m.cls_head[0].bias[2] = -0.25;
        m.set_aux_standardization(alloc::vec![0.5, -1.0, 2.0], alloc::vec![1.0, 0.25, 3.0]).unwrap();
        m
    }

    #[test]
    fn roundtrip_is_exact() {
        let m = small();
        let bytes = encode_checkpoint(&m);
        assert_eq!(decode_checkpoint(&bytes).unwrap(), m);
        let mut p = m.clone();
        p.set_pointnet_mode(true);
        p.set_expected_nodes(None);
        assert_eq!(decode_checkpoint(&encode_checkpoint(&p)).unwrap(), p);
    }

    #[test]
    fn truncation_and_corruption_detected() {
        let bytes = encode_checkpoint(&small());
        for cut in [5, 20, bytes.len() / 2, bytes.len() - 1] {
            assert_eq!(decode_checkpoint(&bytes[..cut]), Err(CheckpointError::Checksum), "cut at {cut}");
        }
        let mut flipped = bytes.clone();
        flipped[bytes.len() / 2] ^= 0x10;
        assert_eq!(decode_checkpoint(&flipped), Err(CheckpointError::Checksum));
        assert_eq!(decode_checkpoint(b"PK\x03\x04rest"), Err(CheckpointError::BadMagic));
    }

    #[test]
    fn version_checked() {
        let mut bytes = encode_checkpoint(&small());
        bytes[4] = 9;
        let n = bytes.len();
        let crc = crc32fast::hash(&bytes[..n - 4]);
        bytes[n - 4..].copy_from_slice(&crc.to_le_bytes());
        assert_eq!(decode_checkpoint(&bytes), Err(CheckpointError::Version(9)));
    }
}
