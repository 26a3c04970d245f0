//! QNL1 binary field snapshots.
//!
//! Layout (little endian): `b"QNL1"`, `n: u64`, `kind: u32`, then the
//! components one after another, each `n * n` row-major `f64` values.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::field::{ScalarField, TensorField, VectorField};
use crate::grid::TorusGrid;

pub const FIELD_MAGIC: &[u8; 4] = b"QNL1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u32)]
pub enum FieldKind {
    Scalar = 0,
    Vector = 1,
    Tensor = 2,
}

impl FieldKind {
    pub fn components(self) -> usize {
        match self {
            FieldKind::Scalar => 1,
            FieldKind::Vector => 2,
            FieldKind::Tensor => 4,
        }
    }

    fn from_tag(tag: u32) -> Result<Self> {
        match tag {
            0 => Ok(FieldKind::Scalar),
            1 => Ok(FieldKind::Vector),
            2 => Ok(FieldKind::Tensor),
            t => Err(Error::Format(format!("unknown field kind tag {t}"))),
        }
    }
}

/// A decoded snapshot: grid, kind and the component fields in file order.
#[derive(Clone, Debug)]
pub struct FieldRecord {
    pub kind: FieldKind,
    pub components: Vec<ScalarField>,
}

impl FieldRecord {
    pub fn scalar(f: &ScalarField) -> Self {
        Self { kind: FieldKind::Scalar, components: vec![f.clone()] }
    }

    pub fn vector(v: &VectorField) -> Self {
        Self { kind: FieldKind::Vector, components: vec![v.x1.clone(), v.x2.clone()] }
    }

    pub fn tensor(t: &TensorField) -> Self {
        let c = |i, j| t.component(i, j).clone();
        Self { kind: FieldKind::Tensor, components: vec![c(0, 0), c(0, 1), c(1, 0), c(1, 1)] }
    }

    pub fn grid(&self) -> TorusGrid {
        self.components[0].grid()
    }

    pub fn into_scalar(mut self) -> Result<ScalarField> {
        match self.kind {
            FieldKind::Scalar => Ok(self.components.remove(0)),
            k => Err(Error::Format(format!("expected scalar field, found {k:?}"))),
        }
    }

    pub fn into_vector(self) -> Result<VectorField> {
        match self.kind {
            FieldKind::Vector => {
                let mut it = self.components.into_iter();
                VectorField::new(it.next().unwrap(), it.next().unwrap())
            }
            k => Err(Error::Format(format!("expected vector field, found {k:?}"))),
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.grid().n() as u64;
        w.write_all(FIELD_MAGIC)?;
        w.write_all(&n.to_le_bytes())?;
        w.write_all(&(self.kind as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.grid().len() * 8);
        for c in &self.components {
            buf.clear();
            for v in c.values() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        read_exact(&mut r, &mut magic)?;
        if &magic != FIELD_MAGIC {
            return Err(Error::Format(format!("bad field magic {magic:?}")));
        }
        let mut b8 = [0u8; 8];
        read_exact(&mut r, &mut b8)?;
        let n = u64::from_le_bytes(b8);
        let grid = usize::try_from(n)
            .ok()
            .and_then(|n| TorusGrid::new(n).ok())
            .ok_or_else(|| Error::Format(format!("invalid grid size {n} in header")))?;
        let mut b4 = [0u8; 4];
        read_exact(&mut r, &mut b4)?;
        let kind = FieldKind::from_tag(u32::from_le_bytes(b4))?;
        let mut components = Vec::with_capacity(kind.components());
        let mut raw = vec![0u8; grid.len() * 8];
        for _ in 0..kind.components() {
            read_exact(&mut r, &mut raw)?;
            let values = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            components.push(
                ScalarField::from_values(grid, values).map_err(|e| Error::Format(e.to_string()))?,
            );
        }
        Ok(Self { kind, components })
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Format("truncated field file".into())
        } else {
            Error::Io(e)
        }
    })
}
