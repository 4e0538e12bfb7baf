//! Binary checkpoint files.
//!
//! Layout, all little-endian: magic `CDNT`, version u16, strategy kind u8,
//! iteration u64, layer count u16, per layer `(out u32, in u32, m u16, n u16,
//! t u16)`, every stored block as row-major f64 in scan order, the fault
//! cursor u128, then the CRC32 of everything before it.

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::linalg::Matrix;

use super::grid::LayerGeom;
use super::{Strategy, StrategyKind};

pub const MAGIC: &[u8; 4] = b"CDNT";
pub const VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u16),
    #[error("unknown strategy code {0}")]
    Kind(u8),
    #[error("checkpoint truncated")]
    Truncated,
    #[error("checkpoint has {0} trailing bytes")]
    Trailing(usize),
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Crc { stored: u32, computed: u32 },
    #[error("value {0} does not fit the checkpoint field")]
    Overflow(usize),
    #[error("checkpoint does not match the strategy: {0}")]
    Incompatible(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerMeta {
    pub out_dim: usize,
    pub in_dim: usize,
    pub m: usize,
    pub n: usize,
    pub t: usize,
}

impl LayerMeta {
    fn geom(&self) -> LayerGeom {
        LayerGeom::new(self.out_dim, self.in_dim, self.m, self.n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kind: StrategyKind,
    pub iteration: u64,
    pub layers: Vec<LayerMeta>,
    pub blocks: Vec<Matrix>,
    pub cursor: u128,
}

/// Block shapes implied by the strategy kind and layer metadata, in scan
/// order.
fn block_shapes(kind: StrategyKind, layers: &[LayerMeta]) -> Vec<(usize, usize)> {
    let mut shapes = Vec::new();
    for meta in layers {
        let g = meta.geom();
        let count = match kind {
            StrategyKind::CodeNet => {
                let (r, c) = (meta.m + 2 * meta.t, meta.n + 2 * meta.t);
                r * c - 4 * meta.t * meta.t
            }
            StrategyKind::Replication => 2 * meta.m * meta.n,
            StrategyKind::Uncoded => meta.m * meta.n,
        };
        shapes.extend(std::iter::repeat_n((g.rb, g.cb), count));
    }
    shapes
}

fn narrow<T: TryFrom<usize>>(v: usize) -> Result<T, CheckpointError> {
    T::try_from(v).map_err(|_| CheckpointError::Overflow(v))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).ok_or(CheckpointError::Truncated)?;
        let s = self.bytes.get(self.pos..end).ok_or(CheckpointError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], CheckpointError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CheckpointError> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn u128(&mut self) -> Result<u128, CheckpointError> {
        Ok(u128::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.array()?))
    }
}

impl Checkpoint {
    /// Snapshot of a strategy's stored state.
    pub fn capture(strategy: &dyn Strategy, iteration: u64, cursor: u128) -> Self {
        let (m, n, t) = strategy.grid_dims();
        let layers = strategy
            .specs()
            .iter()
            .map(|s| LayerMeta {
                out_dim: s.out_dim,
                in_dim: s.in_dim,
                m,
                n,
                t,
            })
            .collect();
        Self {
            kind: strategy.kind(),
            iteration,
            layers,
            blocks: strategy.stored_blocks(),
            cursor,
        }
    }

    /// Checks that this checkpoint can be loaded into `strategy`.
    pub fn check_compatible(&self, strategy: &dyn Strategy) -> Result<(), CheckpointError> {
        let expect = Self::capture(strategy, 0, 0);
        if self.kind != expect.kind {
            return Err(CheckpointError::Incompatible(format!(
                "strategy {} vs {}",
                self.kind.name(),
                expect.kind.name()
            )));
        }
        if self.layers != expect.layers {
            return Err(CheckpointError::Incompatible("layer shapes or grid differ".into()));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CheckpointError> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.kind.code());
        out.extend_from_slice(&self.iteration.to_le_bytes());
        out.extend_from_slice(&narrow::<u16>(self.layers.len())?.to_le_bytes());
        for l in &self.layers {
            out.extend_from_slice(&narrow::<u32>(l.out_dim)?.to_le_bytes());
            out.extend_from_slice(&narrow::<u32>(l.in_dim)?.to_le_bytes());
            out.extend_from_slice(&narrow::<u16>(l.m)?.to_le_bytes());
            out.extend_from_slice(&narrow::<u16>(l.n)?.to_le_bytes());
            out.extend_from_slice(&narrow::<u16>(l.t)?.to_le_bytes());
        }
        let shapes = block_shapes(self.kind, &self.layers);
        if shapes.len() != self.blocks.len() {
            return Err(CheckpointError::Incompatible(format!(
                "{} blocks for {} slots",
                self.blocks.len(),
                shapes.len()
            )));
        }
        for (b, shape) in self.blocks.iter().zip(&shapes) {
            if b.shape() != *shape {
                return Err(CheckpointError::Incompatible(
                    "block shape differs from layer metadata".into(),
                ));
            }
            for v in b.as_slice() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out.extend_from_slice(&self.cursor.to_le_bytes());
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        if bytes.len() < 4 + 4 || &bytes[..4] != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let (payload, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().expect("four bytes"));
        let computed = crc32fast::hash(payload);
        if stored != computed {
            return Err(CheckpointError::Crc { stored, computed });
        }
        let mut r = Reader { bytes: payload, pos: 4 };
        let version = r.u16()?;
        if version != VERSION {
            return Err(CheckpointError::Version(version));
        }
        let code = r.u8()?;
        let kind = StrategyKind::from_code(code).ok_or(CheckpointError::Kind(code))?;
        let iteration = r.u64()?;
        let count = r.u16()? as usize;
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            layers.push(LayerMeta {
                out_dim: r.u32()? as usize,
                in_dim: r.u32()? as usize,
                m: r.u16()? as usize,
                n: r.u16()? as usize,
                t: r.u16()? as usize,
            });
        }
        if layers.iter().any(|l| l.m == 0 || l.n == 0) {
            return Err(CheckpointError::Incompatible("empty grid".into()));
        }
        let shapes = block_shapes(kind, &layers);
        let mut blocks = Vec::with_capacity(shapes.len());
        for (rows, cols) in shapes {
            let need = rows
                .checked_mul(cols)
                .and_then(|e| e.checked_mul(8))
                .ok_or(CheckpointError::Truncated)?;
            if payload.len() - r.pos < need {
                return Err(CheckpointError::Truncated);
            }
            let data = (0..rows * cols).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
            blocks.push(Matrix::from_vec(rows, cols, data));
        }
        let cursor = r.u128()?;
        if r.pos != payload.len() {
            return Err(CheckpointError::Trailing(payload.len() - r.pos));
        }
        Ok(Self {
            kind,
            iteration,
            layers,
            blocks,
            cursor,
        })
    }

    /// Writes through a temporary file and a rename, so a crash never leaves
    /// a half-written checkpoint behind.
    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let bytes = self.to_bytes()?;
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = Path::new(&tmp);
        {
            let mut f = fs::File::create(tmp)?;
            f.write_all(&bytes)?;
            f.sync_all()?;
        }
        fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::from_bytes(&fs::read(path)?)
    }
}
