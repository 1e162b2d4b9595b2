//! Versioned binary blob holding one agent's quantile network and optimizer.
//!
//! Layout (little-endian): magic `MARQQNET`, version `u32`, layer count `u32`
//! and sizes `u32…`, `K u32`, `|A| u32`, flat parameters (`u32` length then
//! `f64…`), Adam flag `u32`; when set: step `u64`, learning rate, β1, β2, ε
//! (`f64`), first and second moments as flat arrays.

use std::io::{Read, Write};

use crate::binio::{expect_magic, get_f64, get_f64s, get_u32, get_u64, put_f64, put_f64s, put_u32, put_u64};
use crate::error::{Error, Result};
use crate::numkit::{AdamState, DenseNet, GradBundle};

use super::qnet::QuantileQNet;

pub const QNET_MAGIC: &[u8; 8] = b"MARQQNET";
pub const QNET_VERSION: u32 = 1;

const MAX_PARAMS: usize = 1 << 28;
const MAX_LAYERS: usize = 64;

pub fn write_qnet<W: Write>(w: &mut W, qnet: &QuantileQNet, adam: Option<&AdamState>) -> Result<()> {
    w.write_all(QNET_MAGIC)?;
    put_u32(w, QNET_VERSION as usize)?;
    let sizes = qnet.net().layer_sizes();
    put_u32(w, sizes.len())?;
    for &s in sizes {
        put_u32(w, s)?;
    }
    put_u32(w, qnet.num_quantiles())?;
    put_u32(w, qnet.num_actions())?;
    put_f64s(w, &qnet.net().params_flat())?;
    match adam {
        None => put_u32(w, 0)?,
        Some(state) => {
            put_u32(w, 1)?;
            put_u64(w, state.step_count)?;
            put_f64(w, state.learning_rate)?;
            put_f64(w, state.beta1)?;
            put_f64(w, state.beta2)?;
            put_f64(w, state.epsilon)?;
            put_f64s(w, &state.first_moment.flat())?;
            put_f64s(w, &state.second_moment.flat())?;
        }
    }
    Ok(())
}

fn bundle_from_flat(net: &DenseNet, flat: &[f64]) -> Result<GradBundle> {
    let mut shaped = net.clone();
    shaped.set_params_flat(flat)?;
    let mut g = GradBundle::zeros_like(net);
    for (dst, src) in g.slices_mut().zip(shaped.param_slices()) {
        dst.copy_from_slice(src);
    }
    Ok(g)
}

pub fn read_qnet<R: Read>(r: &mut R) -> Result<(QuantileQNet, Option<AdamState>)> {
    expect_magic(r, QNET_MAGIC)?;
    let version = get_u32(r)? as u32;
    if version != QNET_VERSION {
        return Err(Error::Version {
            expected: QNET_VERSION,
            found: version,
        });
    }
    let n_sizes = get_u32(r)?;
    if !(2..=MAX_LAYERS).contains(&n_sizes) {
        return Err(Error::Format(format!("implausible layer count {n_sizes}")));
    }
    let sizes = (0..n_sizes).map(|_| get_u32(r)).collect::<Result<Vec<_>>>()?;
    let k = get_u32(r)?;
    let a = get_u32(r)?;
    let flat = get_f64s(r, MAX_PARAMS)?;
    let mut net = DenseNet::zeros(&sizes)?;
    net.set_params_flat(&flat)?;
    let qnet = QuantileQNet::from_net(net, a, k)?;
    let adam = match get_u32(r)? {
        0 => None,
        1 => {
            let step_count = get_u64(r)?;
            let learning_rate = get_f64(r)?;
            let beta1 = get_f64(r)?;
            let beta2 = get_f64(r)?;
            let epsilon = get_f64(r)?;
            let m = get_f64s(r, MAX_PARAMS)?;
            let v = get_f64s(r, MAX_PARAMS)?;
            Some(AdamState {
                first_moment: bundle_from_flat(qnet.net(), &m)?,
                second_moment: bundle_from_flat(qnet.net(), &v)?,
                step_count,
                learning_rate,
                beta1,
                beta2,
                epsilon,
            })
        }
        f => return Err(Error::Format(format!("invalid optimizer flag {f}"))),
    };
    Ok((qnet, adam))
}
