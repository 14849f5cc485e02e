use std::collections::HashMap;

use dggan_autograd::Gradients;

use crate::archive::{self, Entry};
use crate::error::{DgganError, Result};
use crate::networks::ParameterSet;

const ADAM_EPS: f64 = 1e-8;

/// Adam with bias correction, one moment pair per trainable tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    steps: u64,
    names: Vec<String>,
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
}

impl Adam {
    pub fn new(params: &ParameterSet<f32>, betas: [f64; 2]) -> Self {
        let (names, sizes): (Vec<String>, Vec<usize>) =
            params.iter().filter(|p| p.trainable).map(|p| (p.name.clone(), p.value.numel())).unzip();
        Adam {
            beta1: betas[0],
            beta2: betas[1],
            steps: 0,
            names,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// One update of every trainable tensor that has a gradient in `grads`.
    pub fn step(&mut self, params: &mut ParameterSet<f32>, grads: &Gradients<f32>, lr: f64) {
        self.steps += 1;
        let t = self.steps as i32;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        let slots: Vec<usize> = params.trainable().map(|(i, _)| i).collect();
        for (k, slot) in slots.into_iter().enumerate() {
            let param = params.tensor(slot);
            let Some(g) = grads.get(param) else { continue };
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            let updated = param
                .data()
                .iter()
                .zip(g.data())
                .zip(m.iter_mut().zip(v.iter_mut()))
                .map(|((&p, &g), (m, v))| {
                    let g = g as f64;
                    *m = (b1 * *m as f64 + (1.0 - b1) * g) as f32;
                    *v = (b2 * *v as f64 + (1.0 - b2) * g * g) as f32;
                    let mhat = *m as f64 / c1;
                    let vhat = *v as f64 / c2;
                    (p as f64 - lr * mhat / (vhat.sqrt() + ADAM_EPS)) as f32
                })
                .collect();
            params.set(slot, updated);
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut entries = Vec::with_capacity(2 * self.names.len());
        for (i, name) in self.names.iter().enumerate() {
            for (prefix, buf) in [("m", &self.m[i]), ("v", &self.v[i])] {
                entries.push(Entry {
                    name: format!("{prefix}.{name}"),
                    shape: vec![buf.len()],
                    values: buf.iter().map(|&x| x as f64).collect(),
                });
            }
        }
        let meta = HashMap::from([
            ("steps".to_string(), self.steps.to_string()),
            ("beta1".to_string(), self.beta1.to_string()),
            ("beta2".to_string(), self.beta2.to_string()),
        ]);
        archive::encode(&entries, "F32", meta)
    }

    /// Restores state saved for the same parameter layout.
    pub fn load_bytes(&mut self, bytes: &[u8]) -> Result<()> {
        let d = archive::decode(bytes)?;
        let field = |k: &str| d.meta.get(k).ok_or_else(|| DgganError::Data(format!("optimizer state lacks {k}")));
        let parse = |k: &str| -> Result<f64> {
            field(k)?.parse().map_err(|_| DgganError::Data(format!("optimizer state: bad {k}")))
        };
        self.steps = field("steps")?.parse().map_err(|_| DgganError::Data("optimizer state: bad steps".into()))?;
        self.beta1 = parse("beta1")?;
        self.beta2 = parse("beta2")?;
        for (i, name) in self.names.iter().enumerate() {
            for (prefix, buf) in [("m", &mut self.m[i]), ("v", &mut self.v[i])] {
                let key = format!("{prefix}.{name}");
                let (_, values) = d
                    .tensors
                    .get(&key)
                    .ok_or_else(|| DgganError::Data(format!("optimizer state lacks {key}")))?;
                if values.len() != buf.len() {
                    return Err(DgganError::Data(format!("optimizer state {key} has the wrong size")));
                }
                *buf = values.iter().map(|&x| x as f32).collect();
            }
        }
        Ok(())
    }
}
