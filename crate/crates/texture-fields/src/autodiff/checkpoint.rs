//! Binary checkpoint container.
//!
//! Layout: magic `TEXF`, u32 version, u32 record count, then per record:
//! u32 name length, name bytes, u32 rank, u32 dims, f32 data. All integers
//! and floats little-endian; float payloads row-major. Optimizer state is
//! written to a sibling file in the same container format.

use super::adam::AdamState;
use super::params::ParamStore;
use super::scalar::Scalar;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"TEXF";
const VERSION: u32 = 1;

pub struct Record {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

fn write_u32(w: &mut impl Write, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

pub fn write_records(path: &Path, records: &[Record]) -> Result<()> {
    let inner = |path: &Path| -> std::io::Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        w.write_all(MAGIC)?;
        write_u32(&mut w, VERSION)?;
        write_u32(&mut w, records.len() as u32)?;
        for rec in records {
            write_u32(&mut w, rec.name.len() as u32)?;
            w.write_all(rec.name.as_bytes())?;
            write_u32(&mut w, rec.shape.len() as u32)?;
            for &d in &rec.shape {
                write_u32(&mut w, d as u32)?;
            }
            for &v in &rec.data {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()
    };
    inner(path).map_err(|e| Error::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<Record>> {
    let inner = |path: &Path| -> std::io::Result<std::result::Result<Vec<Record>, String>> {
        let file = std::fs::File::open(path)?;
        let mut r = std::io::BufReader::new(file);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Ok(Err("bad magic, not a TEXF checkpoint".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Ok(Err(format!("unsupported checkpoint version {version}")));
        }
        let count = read_u32(&mut r)?;
        let mut records = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let name_len = read_u32(&mut r)? as usize;
            let mut name = vec![0u8; name_len];
            r.read_exact(&mut name)?;
            let name = match String::from_utf8(name) {
                Ok(n) => n,
                Err(_) => return Ok(Err("non-utf8 record name".into())),
            };
            let rank = read_u32(&mut r)? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(read_u32(&mut r)? as usize);
            }
            let numel: usize = shape.iter().product();
            let mut bytes = vec![0u8; numel * 4];
            r.read_exact(&mut bytes)?;
            let data = bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            records.push(Record { name, shape, data });
        }
        Ok(Ok(records))
    };
    match inner(path) {
        Err(e) => Err(Error::io(path, e)),
        Ok(Err(msg)) => Err(Error::parse(path, 0, msg)),
        Ok(Ok(records)) => Ok(records),
    }
}

fn tensor_record<T: Scalar>(name: &str, t: &Tensor<T>) -> Record {
    Record {
        name: name.to_string(),
        shape: t.shape().to_vec(),
        data: t.data().iter().map(|v| v.to_f64() as f32).collect(),
    }
}

pub fn save_params<T: Scalar>(path: &Path, store: &ParamStore<T>) -> Result<()> {
    let records: Vec<Record> = store
        .iter()
        .map(|(name, t)| tensor_record(name, t))
        .collect();
    write_records(path, &records)
}

/// Load parameters into an existing store; every record must match a
/// parameter of the same name and shape.
pub fn load_params<T: Scalar>(path: &Path, store: &mut ParamStore<T>) -> Result<()> {
    let records = read_records(path)?;
    if records.len() != store.len() {
        return Err(Error::Contract(format!(
            "checkpoint has {} records, model expects {}",
            records.len(),
            store.len()
        )));
    }
    for rec in records {
        let id = store.lookup(&rec.name).ok_or_else(|| {
            Error::Contract(format!("checkpoint record `{}` not in model", rec.name))
        })?;
        let tensor = store.get_mut(id);
        if tensor.shape() != rec.shape.as_slice() {
            return Err(Error::ShapeMismatch {
                op: "load_params",
                lhs: tensor.shape().to_vec(),
                rhs: rec.shape,
            });
        }
        for (dst, src) in tensor.data_mut().iter_mut().zip(&rec.data) {
            *dst = T::from_f64(*src as f64);
        }
    }
    Ok(())
}

pub fn save_adam<T: Scalar>(path: &Path, store: &ParamStore<T>, adam: &AdamState<T>) -> Result<()> {
    let mut records = Vec::new();
    records.push(Record {
        name: "__adam__.step".into(),
        shape: vec![1],
        data: vec![adam.step as f32],
    });
    records.push(Record {
        name: "__adam__.hyper".into(),
        shape: vec![4],
        data: vec![
            adam.lr.to_f64() as f32,
            adam.beta1.to_f64() as f32,
            adam.beta2.to_f64() as f32,
            adam.eps.to_f64() as f32,
        ],
    });
    let (m, v) = adam.moments();
    for (idx, (name, t)) in store.iter().enumerate() {
        records.push(Record {
            name: format!("{name}.m"),
            shape: t.shape().to_vec(),
            data: m[idx].iter().map(|x| x.to_f64() as f32).collect(),
        });
        records.push(Record {
            name: format!("{name}.v"),
            shape: t.shape().to_vec(),
            data: v[idx].iter().map(|x| x.to_f64() as f32).collect(),
        });
    }
    write_records(path, &records)
}

pub fn load_adam<T: Scalar>(path: &Path, store: &ParamStore<T>) -> Result<AdamState<T>> {
    let records = read_records(path)?;
    let find = |name: &str| -> Result<&Record> {
        records
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| Error::Contract(format!("optimizer file missing `{name}`")))
    };
    let hyper = find("__adam__.hyper")?;
    let mut adam = AdamState::new(store, T::from_f64(hyper.data[0] as f64));
    adam.beta1 = T::from_f64(hyper.data[1] as f64);
    adam.beta2 = T::from_f64(hyper.data[2] as f64);
    adam.eps = T::from_f64(hyper.data[3] as f64);
    adam.step = find("__adam__.step")?.data[0] as u64;
    let mut m = Vec::with_capacity(store.len());
    let mut v = Vec::with_capacity(store.len());
    for (name, t) in store.iter() {
        let mrec = find(&format!("{name}.m"))?;
        let vrec = find(&format!("{name}.v"))?;
        if mrec.data.len() != t.numel() || vrec.data.len() != t.numel() {
            return Err(Error::Contract(format!(
                "optimizer moments for `{name}` do not match parameter shape"
            )));
        }
        m.push(mrec.data.iter().map(|&x| T::from_f64(x as f64)).collect());
        v.push(vrec.data.iter().map(|&x| T::from_f64(x as f64)).collect());
    }
    adam.restore_moments(m, v);
    Ok(adam)
}
