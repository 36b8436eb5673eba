//! Flat parameter vectors with a named layer layout.
//!
//! Every model in the simulator is a single `Vec<f64>` plus a
//! [`LayerLayout`] that records where each weight matrix and bias vector
//! lives. Reductions run strictly left to right so results are
//! bit-reproducible.

use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norms below this are treated as zero by [`cosine_similarity`].
pub const NORM_EPS: f64 = 1e-12;

const CHECKPOINT_MAGIC: &[u8; 8] = b"FEDAWAPV";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

/// Ordered, contiguous segments covering `0..total_len`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerLayout {
    entries: Vec<LayerEntry>,
    total_len: usize,
}

impl LayerLayout {
    /// Builds a layout from `(name, len)` pairs laid end to end.
    pub fn from_lengths<S: Into<String>>(layers: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let mut entries = Vec::new();
        let mut offset = 0;
        for (name, len) in layers {
            entries.push(LayerEntry {
                name: name.into(),
                offset,
                len,
            });
            offset += len;
        }
        Self::new(entries)
    }

    pub fn new(entries: Vec<LayerEntry>) -> Result<Self> {
        let mut expected = 0;
        for e in &entries {
            if e.offset != expected {
                return Err(Error::Layout(format!(
                    "entry `{}` starts at {} but previous segment ends at {}",
                    e.name, e.offset, expected
                )));
            }
            if e.len == 0 {
                return Err(Error::Layout(format!("entry `{}` is empty", e.name)));
            }
            expected += e.len;
        }
        if expected == 0 {
            return Err(Error::Layout("layout has no parameters".into()));
        }
        Ok(Self {
            entries,
            total_len: expected,
        })
    }

    /// A single-layer layout named `all`.
    pub fn flat(len: usize) -> Result<Self> {
        Self::from_lengths([("all", len)])
    }

    pub fn entries(&self) -> &[LayerEntry] {
        &self.entries
    }

    pub fn num_layers(&self) -> usize {
        self.entries.len()
    }

    pub fn total_len(&self) -> usize {
        self.total_len
    }
}

/// A model's parameters flattened into one finite vector.
#[derive(Debug, Clone)]
pub struct ParamVector {
    values: Vec<f64>,
    layout: Arc<LayerLayout>,
}

impl PartialEq for ParamVector {
    fn eq(&self, other: &Self) -> bool {
        self.same_layout(other) && self.values == other.values
    }
}

impl ParamVector {
    pub fn new(values: Vec<f64>, layout: Arc<LayerLayout>) -> Result<Self> {
        if values.len() != layout.total_len() {
            return Err(Error::Layout(format!(
                "{} values for a layout of {}",
                values.len(),
                layout.total_len()
            )));
        }
        check_finite(&values)?;
        Ok(Self { values, layout })
    }

    /// Wraps values with a single-layer layout; handy in tests and examples.
    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        let layout = Arc::new(LayerLayout::flat(values.len())?);
        Self::new(values, layout)
    }

    pub fn zeros(layout: Arc<LayerLayout>) -> Self {
        Self {
            values: vec![0.0; layout.total_len()],
            layout,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn layout(&self) -> &Arc<LayerLayout> {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_layout(&self, other: &ParamVector) -> bool {
        Arc::ptr_eq(&self.layout, &other.layout) || *self.layout == *other.layout
    }

    pub(crate) fn check_layout(&self, other: &ParamVector) -> Result<()> {
        if self.same_layout(other) {
            Ok(())
        } else {
            Err(Error::Layout(format!(
                "vectors of length {} and {} do not share a layout",
                self.len(),
                other.len()
            )))
        }
    }

    /// Replaces the values, keeping the layout. Fails on non-finite input.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, Arc::clone(&self.layout))
    }

    /// `self - other`
    pub fn sub(&self, other: &ParamVector) -> Result<ParamVector> {
        axpy(-1.0, other, self)
    }

    pub fn scale(&self, alpha: f64) -> Result<ParamVector> {
        self.with_values(self.values.iter().map(|v| alpha * v).collect())
    }

    /// Writes the checkpoint format: magic, u32 header length, JSON layout
    /// header, then little-endian f64 values.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let header = serde_json::to_vec(&*self.layout)?;
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(&header)?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        read_exact_at(&mut r, &mut magic, 0)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Parse {
                offset: 0,
                message: "bad checkpoint magic".into(),
            });
        }
        let mut len = [0u8; 4];
        read_exact_at(&mut r, &mut len, 8)?;
        let header_len = u32::from_le_bytes(len) as usize;
        let mut header = vec![0u8; header_len];
        read_exact_at(&mut r, &mut header, 12)?;
        let layout: LayerLayout = serde_json::from_slice(&header).map_err(|e| Error::Parse {
            offset: 12,
            message: format!("layout header: {e}"),
        })?;
        // Re-validate: the header is untrusted input.
        let layout = LayerLayout::new(layout.entries)?;
        let mut values = Vec::with_capacity(layout.total_len());
        let mut buf = [0u8; 8];
        for i in 0..layout.total_len() {
            read_exact_at(&mut r, &mut buf, (12 + header_len + 8 * i) as u64)?;
            values.push(f64::from_le_bytes(buf));
        }
        Self::new(values, Arc::new(layout))
    }
}

fn read_exact_at<R: Read>(r: &mut R, buf: &mut [u8], offset: u64) -> Result<()> {
    r.read_exact(buf).map_err(|e| Error::Parse {
        offset,
        message: e.to_string(),
    })
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(format!("element {i} is {}", values[i]))),
        None => Ok(()),
    }
}

/// A client's update `theta_k - theta_g` for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientVector {
    pub delta: ParamVector,
    pub client_id: usize,
    pub round: usize,
}

pub fn dot(a: &ParamVector, b: &ParamVector) -> Result<f64> {
    a.check_layout(b)?;
    Ok(dot_slices(&a.values, &b.values))
}

pub(crate) fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

pub fn l2_norm(a: &ParamVector) -> f64 {
    dot_slices(&a.values, &a.values).sqrt()
}

/// Cosine similarity; 0 when either norm is below [`NORM_EPS`].
pub fn cosine_similarity(a: &ParamVector, b: &ParamVector) -> Result<f64> {
    a.check_layout(b)?;
    Ok(cosine_slices(&a.values, &b.values))
}

pub(crate) fn cosine_slices(a: &[f64], b: &[f64]) -> f64 {
    let na = dot_slices(a, a).sqrt();
    let nb = dot_slices(b, b).sqrt();
    if na < NORM_EPS || nb < NORM_EPS {
        return 0.0;
    }
    (dot_slices(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

/// `alpha * x + y`
pub fn axpy(alpha: f64, x: &ParamVector, y: &ParamVector) -> Result<ParamVector> {
    x.check_layout(y)?;
    let values = x
        .values
        .iter()
        .zip(&y.values)
        .map(|(a, b)| alpha * a + b)
        .collect();
    y.with_values(values)
}

/// Read-only view of layer `l`.
pub fn layer_slice(v: &ParamVector, l: usize) -> Result<&[f64]> {
    let entries = v.layout.entries();
    let e = entries.get(l).ok_or(Error::Index {
        index: l,
        len: entries.len(),
    })?;
    Ok(&v.values[e.offset..e.offset + e.len])
}

/// `sum_k w[k] * vs[k]`, accumulated in index order.
pub fn weighted_sum(vs: &[&ParamVector], w: &[f64]) -> Result<ParamVector> {
    if vs.len() != w.len() {
        return Err(Error::CountMismatch {
            expected: vs.len(),
            got: w.len(),
        });
    }
    let first = vs.first().ok_or_else(|| Error::Domain("empty vector list".into()))?;
    let mut acc = vec![0.0; first.len()];
    for (v, &wk) in vs.iter().zip(w) {
        first.check_layout(v)?;
        for (a, x) in acc.iter_mut().zip(&v.values) {
            *a += wk * x;
        }
    }
    first.with_values(acc)
}
