//! Named-tensor files (safetensors) shared by parameter sets and optimizer
//! state.

use std::collections::{BTreeMap, HashMap};

use safetensors::tensor::TensorView;
use safetensors::{Dtype, SafeTensors};

use crate::error::{DgganError, Result};

pub(crate) struct Entry {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

/// Encodes entries as `dtype` (`"F32"` or `"F64"`).
pub(crate) fn encode(entries: &[Entry], dtype: &str, meta: HashMap<String, String>) -> Vec<u8> {
    let (dt, width) = match dtype {
        "F32" => (Dtype::F32, 4),
        "F64" => (Dtype::F64, 8),
        other => panic!("no archive dtype for {other}"),
    };
    let buffers: Vec<Vec<u8>> = entries
        .iter()
        .map(|e| {
            let mut b = Vec::with_capacity(e.values.len() * width);
            for &v in &e.values {
                if width == 4 {
                    b.extend((v as f32).to_le_bytes());
                } else {
                    b.extend(v.to_le_bytes());
                }
            }
            b
        })
        .collect();
    let views: Vec<(String, TensorView<'_>)> = entries
        .iter()
        .zip(&buffers)
        .map(|(e, b)| (e.name.clone(), TensorView::new(dt, e.shape.clone(), b).expect("sizes agree")))
        .collect();
    safetensors::serialize(views, Some(meta)).expect("archive serialises")
}

pub(crate) struct Decoded {
    pub tensors: BTreeMap<String, (Vec<usize>, Vec<f64>)>,
    pub meta: HashMap<String, String>,
}

pub(crate) fn decode(bytes: &[u8]) -> Result<Decoded> {
    let bad = |e: safetensors::SafeTensorError| DgganError::Data(format!("tensor archive: {e}"));
    let (_, header) = SafeTensors::read_metadata(bytes).map_err(bad)?;
    let meta = header.metadata().clone().unwrap_or_default();
    let st = SafeTensors::deserialize(bytes).map_err(bad)?;
    let mut tensors = BTreeMap::new();
    for (name, view) in st.iter() {
        let values: Vec<f64> = match view.dtype() {
            Dtype::F32 => {
                view.data().chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect()
            }
            Dtype::F64 => view.data().chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect(),
            other => return Err(DgganError::Data(format!("tensor {name}: unsupported dtype {other:?}"))),
        };
        tensors.insert(name.to_string(), (view.shape().to_vec(), values));
    }
    Ok(Decoded { tensors, meta })
}
