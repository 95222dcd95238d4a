//! Serializable form of a decoder network.
//!
//! Weights are stored row-major (`in_width × out_width`). `serde_json`
//! writes the shortest decimal that parses back to the same bits and is
//! built with exact float parsing, so a save/load cycle is bit-exact.

use serde::{Deserialize, Serialize};

use super::{Activation, DecoderNetwork, LayerSpec, NormParams};
use crate::error::{Error, Result};
use crate::ndcore::Matrix;

pub const NETWORK_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub in_width: usize,
    pub out_width: usize,
    pub activation: Activation,
    pub group_norm: bool,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkRecord {
    pub format_version: u32,
    pub view_id: usize,
    pub layers: Vec<LayerRecord>,
}

impl From<&DecoderNetwork> for NetworkRecord {
    fn from(net: &DecoderNetwork) -> Self {
        let layers = net
            .layers()
            .iter()
            .map(|l| LayerRecord {
                in_width: l.spec.in_width,
                out_width: l.spec.out_width,
                activation: l.spec.activation,
                group_norm: l.spec.group_norm,
                weight: l.weight.as_slice().to_vec(),
                bias: l.bias.as_slice().to_vec(),
                gamma: l.norm.as_ref().map(|n| n.gamma.as_slice().to_vec()),
                beta: l.norm.as_ref().map(|n| n.beta.as_slice().to_vec()),
            })
            .collect();
        NetworkRecord { format_version: NETWORK_FORMAT_VERSION, view_id: net.view_id(), layers }
    }
}

impl TryFrom<&NetworkRecord> for DecoderNetwork {
    type Error = Error;

    fn try_from(rec: &NetworkRecord) -> Result<Self> {
        if rec.format_version != NETWORK_FORMAT_VERSION {
            return Err(Error::InvalidArgument(format!("unsupported network format version {}", rec.format_version)));
        }
        let mut parts = Vec::with_capacity(rec.layers.len());
        for l in &rec.layers {
            let spec = LayerSpec { in_width: l.in_width, out_width: l.out_width, activation: l.activation, group_norm: l.group_norm };
            let weight = Matrix::new(l.in_width, l.out_width, l.weight.clone())?;
            let bias = Matrix::new(1, l.out_width, l.bias.clone())?;
            let norm = match (&l.gamma, &l.beta) {
                (Some(g), Some(b)) => Some(NormParams {
                    gamma: Matrix::new(1, l.out_width, g.clone())?,
                    beta: Matrix::new(1, l.out_width, b.clone())?,
                }),
                (None, None) => None,
                _ => return Err(Error::InvalidArgument("gamma and beta must both be present or absent".into())),
            };
            parts.push((spec, weight, bias, norm));
        }
        DecoderNetwork::from_parts(rec.view_id, parts)
    }
}

impl DecoderNetwork {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&NetworkRecord::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: NetworkRecord = serde_json::from_str(text)?;
        DecoderNetwork::try_from(&rec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndcore::Rng;
    use proptest::prelude::*;

    #[test]
    fn json_round_trip_with_group_norm() {
        let specs = LayerSpec::chain(3, &[5, 4], 6, true);
        let mut net = DecoderNetwork::init(1, &specs, &mut Rng::new(3)).unwrap();
        net.parameters_mut()[2][(0, 1)] = 1.234_567_890_123_456_7e-300;
        let back = DecoderNetwork::from_json(&net.to_json().unwrap()).unwrap();
        assert_eq!(back, net);
        assert!(DecoderNetwork::from_json(r#"{"format_version":9,"view_id":0,"layers":[]}"#).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(bits in prop::collection::vec(any::<u64>(), 6)) {
            let vals: Vec<f64> = bits.iter().map(|&b| {
                let v = f64::from_bits(b);
                if v.is_finite() { v } else { 0.5 }
            }).collect();
            let spec = LayerSpec { in_width: 2, out_width: 2, activation: Activation::Elu, group_norm: false };
            let spec2 = LayerSpec { in_width: 2, out_width: 1, activation: Activation::Identity, group_norm: false };
            let net = DecoderNetwork::from_parts(0, vec![
                (spec, Matrix::new(2, 2, vals[..4].to_vec()).unwrap(), Matrix::row_vector(&vals[4..6]), None),
                (spec2, Matrix::new(2, 1, vals[..2].to_vec()).unwrap(), Matrix::row_vector(&vals[5..6]), None),
            ]).unwrap();
            let back = DecoderNetwork::from_json(&net.to_json().unwrap()).unwrap();
            for (a, b) in back.parameters().iter().zip(net.parameters()) {
                for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }
}
