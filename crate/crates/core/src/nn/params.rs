//! Named parameter storage, gradient buffers and the checkpoint container.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::rng::Rng;

const MAGIC: &[u8; 8] = b"TEMPORA\0";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Array2<f64>>,
    frozen: Vec<bool>,
}

impl ParamStore {
    pub fn add(&mut self, name: impl Into<String>, value: Array2<f64>) -> ParamId {
        let name = name.into();
        debug_assert!(!self.names.contains(&name), "duplicate parameter {name}");
        self.names.push(name);
        self.values.push(value);
        self.frozen.push(false);
        ParamId(self.values.len() - 1)
    }

    /// Uniform in `±1/√fan_in`.
    pub fn add_uniform(
        &mut self,
        name: &str,
        rows: usize,
        cols: usize,
        fan_in: usize,
        rng: &mut Rng,
    ) -> ParamId {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let w = Array2::from_shape_simple_fn((rows, cols), || rng.uniform_in(-bound, bound));
        self.add(name, w)
    }

    pub fn add_zeros(&mut self, name: &str, rows: usize, cols: usize) -> ParamId {
        self.add(name, Array2::zeros((rows, cols)))
    }

    pub fn add_ones(&mut self, name: &str, rows: usize, cols: usize) -> ParamId {
        self.add(name, Array2::ones((rows, cols)))
    }

    pub fn get(&self, id: ParamId) -> &Array2<f64> {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Array2<f64> {
        &mut self.values[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn id_of(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total number of scalars.
    pub fn size(&self) -> usize {
        self.values.iter().map(Array2::len).sum()
    }

    pub fn set_frozen(&mut self, id: ParamId, frozen: bool) {
        self.frozen[id.0] = frozen;
    }

    pub fn is_frozen(&self, id: ParamId) -> bool {
        self.frozen[id.0]
    }

    /// Adds uniform noise in `±scale` to every entry, moving biases off exact zeros.
    pub fn jitter(&mut self, scale: f64, rng: &mut Rng) {
        for v in &mut self.values {
            v.mapv_inplace(|x| x + rng.uniform_in(-scale, scale));
        }
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.iter().all(|x| x.is_finite()))
    }

    /// Writes a versioned container: magic, version, header text, then named arrays
    /// as rank, dims and little-endian `f64` data.
    pub fn save(&self, path: &Path, header: &str) -> Result<()> {
        let mut buf = Vec::with_capacity(self.size() * 8 + 1024);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        put_bytes(&mut buf, header.as_bytes());
        buf.extend_from_slice(&(self.values.len() as u32).to_le_bytes());
        for (name, v) in self.names.iter().zip(&self.values) {
            put_bytes(&mut buf, name.as_bytes());
            buf.extend_from_slice(&2u32.to_le_bytes());
            for d in v.shape() {
                buf.extend_from_slice(&(*d as u64).to_le_bytes());
            }
            for x in v.iter() {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&buf).map_err(|e| Error::io(path, e))
    }

    /// Reads a checkpoint, returning its header text and arrays.
    pub fn load(path: &Path) -> Result<(String, ParamStore)> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        let bad = |m: &str| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: m.to_string(),
        };
        let mut r = Reader {
            bytes: &bytes,
            at: 0,
        };
        if r.take(8).ok_or_else(|| bad("truncated"))? != MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let version = r.u32().ok_or_else(|| bad("truncated"))?;
        if version != CHECKPOINT_VERSION {
            return Err(bad(&format!("unsupported checkpoint version {version}")));
        }
        let header = r.string().ok_or_else(|| bad("bad header"))?;
        let count = r.u32().ok_or_else(|| bad("truncated"))?;
        let mut store = ParamStore::default();
        for _ in 0..count {
            let name = r.string().ok_or_else(|| bad("bad array name"))?;
            let rank = r.u32().ok_or_else(|| bad("truncated"))? as usize;
            let dims: Vec<usize> = (0..rank)
                .map(|_| r.u64().map(|d| d as usize))
                .collect::<Option<_>>()
                .ok_or_else(|| bad("truncated"))?;
            let (rows, cols) = match dims[..] {
                [n] => (1, n),
                [a, b] => (a, b),
                _ => return Err(bad(&format!("array {name} has unsupported rank {rank}"))),
            };
            let data: Vec<f64> = (0..rows * cols)
                .map(|_| r.u64().map(f64::from_bits))
                .collect::<Option<_>>()
                .ok_or_else(|| bad("truncated"))?;
            store.add(
                name,
                Array2::from_shape_vec((rows, cols), data).expect("size checked"),
            );
        }
        Ok((header, store))
    }

    /// Copies values from `other` by name; every parameter must be present with equal shape.
    pub fn assign_from(&mut self, other: &ParamStore) -> Result<()> {
        for i in 0..self.values.len() {
            let id = other.id_of(&self.names[i]).ok_or_else(|| {
                Error::invalid(format!("checkpoint lacks parameter {}", self.names[i]))
            })?;
            let v = other.get(id);
            if v.dim() != self.values[i].dim() {
                return Err(Error::invalid(format!(
                    "parameter {} has shape {:?}, expected {:?}",
                    self.names[i],
                    v.dim(),
                    self.values[i].dim()
                )));
            }
            self.values[i].assign(v);
        }
        Ok(())
    }
}

fn put_bytes(buf: &mut Vec<u8>, b: &[u8]) {
    buf.extend_from_slice(&(b.len() as u32).to_le_bytes());
    buf.extend_from_slice(b);
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Option<&[u8]> {
        let s = self.bytes.get(self.at..self.at + n)?;
        self.at += n;
        Some(s)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4)
            .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8)
            .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }

    fn string(&mut self) -> Option<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).ok()
    }
}

/// Gradient buffer shaped like a [`ParamStore`].
#[derive(Clone, Debug, PartialEq)]
pub struct Grads(Vec<Array2<f64>>);

impl Grads {
    pub fn zeros_like(store: &ParamStore) -> Self {
        Grads(
            store
                .values
                .iter()
                .map(|v| Array2::zeros(v.dim()))
                .collect(),
        )
    }

    pub fn accumulate(&mut self, id: ParamId, g: &Array2<f64>) {
        self.0[id.0] += g;
    }

    pub fn get(&self, id: ParamId) -> &Array2<f64> {
        &self.0[id.0]
    }

    pub fn add_assign(&mut self, other: &Grads) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    pub fn scale(&mut self, c: f64) {
        for a in &mut self.0 {
            *a *= c;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|v| v.iter().all(|x| x.is_finite()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Array2<f64>)> {
        self.0.iter().enumerate().map(|(i, g)| (ParamId(i), g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = Rng::new(4);
        let mut p = ParamStore::default();
        p.add_uniform("enc.w", 6, 4, 6, &mut rng);
        p.add_zeros("enc.b", 1, 4);
        p.add("odd", Array2::from_elem((2, 3), f64::MIN_POSITIVE));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt");
        p.save(&path, "d_model = 16\n").unwrap();
        let (header, q) = ParamStore::load(&path).unwrap();
        assert_eq!(header, "d_model = 16\n");
        assert_eq!(p.values, q.values);
        assert_eq!(p.names, q.names);
    }

    #[test]
    fn rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x");
        std::fs::write(&path, b"hello world, not a checkpoint").unwrap();
        assert!(ParamStore::load(&path).is_err());
    }

    #[test]
    fn uniform_init_is_bounded() {
        let mut p = ParamStore::default();
        let id = p.add_uniform("w", 50, 20, 25, &mut Rng::new(1));
        assert!(p.get(id).iter().all(|v| v.abs() <= 0.2));
    }
}
