use std::collections::HashMap;
use std::fs;
use std::path::Path;

use dggan_autograd::{Element, Tensor};
use sha2::{Digest, Sha256};

use crate::archive::{self, Entry};
use crate::error::{DgganError, Result};

/// One named tensor. Trainable entries are autodiff leaves; the rest
/// (normalisation running statistics) are constants updated in place.
#[derive(Clone, Debug)]
pub struct Param<E: Element> {
    pub name: String,
    pub value: Tensor<E>,
    pub trainable: bool,
}

/// Every tensor of one network, in construction order.
#[derive(Clone, Debug)]
pub struct ParameterSet<E: Element> {
    params: Vec<Param<E>>,
}

impl<E: Element> Default for ParameterSet<E> {
    fn default() -> Self {
        ParameterSet { params: Vec::new() }
    }
}

impl<E: Element> ParameterSet<E> {
    pub(crate) fn push(&mut self, name: String, data: Vec<E>, shape: &[usize], trainable: bool) -> usize {
        assert!(self.params.iter().all(|p| p.name != name), "duplicate parameter {name}");
        let value = if trainable { Tensor::leaf(data, shape) } else { Tensor::from_vec(data, shape) };
        self.params.push(Param { name, value, trainable });
        self.params.len() - 1
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param<E>> {
        self.params.iter()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<E>> {
        self.params.iter().find(|p| p.name == name).map(|p| &p.value)
    }

    pub fn tensor(&self, slot: usize) -> &Tensor<E> {
        &self.params[slot].value
    }

    pub fn trainable(&self) -> impl Iterator<Item = (usize, &Tensor<E>)> {
        self.params.iter().enumerate().filter(|(_, p)| p.trainable).map(|(i, p)| (i, &p.value))
    }

    /// Number of trainable scalars.
    pub fn count(&self) -> usize {
        self.trainable().map(|(_, t)| t.numel()).sum()
    }

    /// Replaces the values in `slot`, keeping its shape and trainability.
    pub fn set(&mut self, slot: usize, data: Vec<E>) {
        let p = &mut self.params[slot];
        let shape = p.value.shape().to_vec();
        p.value = if p.trainable { Tensor::leaf(data, &shape) } else { Tensor::from_vec(data, &shape) };
    }

    pub fn map_values(&mut self, mut f: impl FnMut(&Param<E>) -> Vec<E>) {
        for slot in 0..self.params.len() {
            let data = f(&self.params[slot]);
            self.set(slot, data);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.value.all_finite())
    }

    /// SHA-256 over names, shapes and the little-endian bytes of every value.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for p in &self.params {
            h.update(p.name.as_bytes());
            for d in p.value.shape() {
                h.update((*d as u64).to_le_bytes());
            }
            for v in p.value.data() {
                h.update(v.to_f64_lossy().to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn cast<F: Element>(&self) -> ParameterSet<F> {
        let params = self
            .params
            .iter()
            .map(|p| {
                let data: Vec<F> = p.value.data().iter().map(|v| F::from_f64_lossy(v.to_f64_lossy())).collect();
                let value = if p.trainable { Tensor::leaf(data, p.value.shape()) } else { Tensor::from_vec(data, p.value.shape()) };
                Param { name: p.name.clone(), value, trainable: p.trainable }
            })
            .collect();
        ParameterSet { params }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let entries: Vec<Entry> = self
            .params
            .iter()
            .map(|p| Entry {
                name: p.name.clone(),
                shape: p.value.shape().to_vec(),
                values: p.value.data().iter().map(|v| v.to_f64_lossy()).collect(),
            })
            .collect();
        let trainable: Vec<&str> = self.params.iter().filter(|p| p.trainable).map(|p| p.name.as_str()).collect();
        let meta = HashMap::from([("trainable".to_string(), trainable.join(","))]);
        archive::encode(&entries, E::DTYPE, meta)
    }

    /// Restores values into an existing set with the same names and shapes.
    pub fn load_bytes(&mut self, bytes: &[u8]) -> Result<()> {
        let mut found = archive::decode(bytes)?.tensors;
        for p in &self.params {
            match found.get(&p.name) {
                Some((shape, _)) if shape == p.value.shape() => {}
                Some((shape, _)) => {
                    return Err(DgganError::Data(format!(
                        "parameter {}: archive shape {shape:?} does not match network {:?}",
                        p.name,
                        p.value.shape()
                    )))
                }
                None => return Err(DgganError::Data(format!("archive lacks parameter {}", p.name))),
            }
        }
        if found.len() != self.params.len() {
            return Err(DgganError::Data(format!(
                "archive has {} tensors, network expects {}",
                found.len(),
                self.params.len()
            )));
        }
        self.map_values(|p| {
            let (_, values) = found.remove(&p.name).expect("every name checked above");
            values.into_iter().map(E::from_f64_lossy).collect()
        });
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(DgganError::io(path))
    }

    pub fn load(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).map_err(DgganError::io(path))?;
        self.load_bytes(&bytes)
    }
}
