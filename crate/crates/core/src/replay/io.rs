//! Binary dump format for an [`AgentBuffer`].
//!
//! Little-endian throughout. Header: `agent_id u32, capacity u32,
//! obs_width u32, num_actions u32, key_resolution f64, count u32`, followed by
//! `count` transitions oldest first, each
//! `agent_id u32, obs [len u32, f64...], action u32, reward f64,
//! next_obs [len u32, f64...], done u32`.

use std::io::{Read, Write};

use crate::binio::{get_f64, get_f64s, get_u32, put_f64, put_f64s, put_u32};
use crate::error::{Error, Result};

use super::buffer::{AgentBuffer, Transition};

const MAX_OBS: usize = 1 << 16;

pub fn write_buffer<W: Write>(buffer: &AgentBuffer, w: &mut W) -> Result<()> {
    put_u32(w, buffer.agent_id())?;
    put_u32(w, buffer.capacity())?;
    put_u32(w, buffer.obs_width())?;
    put_u32(w, buffer.num_actions())?;
    put_f64(w, buffer.key_resolution())?;
    put_u32(w, buffer.len())?;
    for t in buffer.iter() {
        write_transition(t, w)?;
    }
    Ok(())
}

pub fn read_buffer<R: Read>(r: &mut R) -> Result<AgentBuffer> {
    let agent_id = get_u32(r)?;
    let capacity = get_u32(r)?;
    let obs_width = get_u32(r)?;
    let num_actions = get_u32(r)?;
    let key_resolution = get_f64(r)?;
    let count = get_u32(r)?;
    if count > capacity {
        return Err(Error::Format(format!(
            "buffer dump holds {count} transitions but capacity is {capacity}"
        )));
    }
    let mut buffer =
        AgentBuffer::with_key_resolution(agent_id, capacity, obs_width, num_actions, key_resolution)?;
    for _ in 0..count {
        buffer.push(read_transition(r)?)?;
    }
    Ok(buffer)
}

pub fn write_transition<W: Write>(t: &Transition, w: &mut W) -> Result<()> {
    put_u32(w, t.agent_id)?;
    put_f64s(w, &t.obs)?;
    put_u32(w, t.action)?;
    put_f64(w, t.reward)?;
    put_f64s(w, &t.next_obs)?;
    put_u32(w, t.done as usize)
}

pub fn read_transition<R: Read>(r: &mut R) -> Result<Transition> {
    let agent_id = get_u32(r)?;
    let obs = get_f64s(r, MAX_OBS)?;
    let action = get_u32(r)?;
    let reward = get_f64(r)?;
    let next_obs = get_f64s(r, MAX_OBS)?;
    let done = match get_u32(r)? {
        0 => false,
        1 => true,
        v => return Err(Error::Format(format!("invalid done flag {v}"))),
    };
    Ok(Transition {
        agent_id,
        obs,
        action,
        reward,
        next_obs,
        done,
    })
}
