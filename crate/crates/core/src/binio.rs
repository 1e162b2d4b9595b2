//! Little-endian helpers shared by the binary dump and checkpoint formats.

use std::io::{self, Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};

pub(crate) fn put_u32<W: Write>(w: &mut W, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit in u32")))?;
    w.write_u32::<LittleEndian>(v)?;
    Ok(())
}

pub(crate) fn put_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_u64::<LittleEndian>(v)?;
    Ok(())
}

pub(crate) fn put_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_f64::<LittleEndian>(v)?;
    Ok(())
}

/// Length-prefixed `f64` array.
pub(crate) fn put_f64s<W: Write>(w: &mut W, vs: &[f64]) -> Result<()> {
    put_u32(w, vs.len())?;
    for &v in vs {
        put_f64(w, v)?;
    }
    Ok(())
}

/// Length-prefixed byte string.
pub(crate) fn put_bytes<W: Write>(w: &mut W, bytes: &[u8]) -> Result<()> {
    put_u32(w, bytes.len())?;
    w.write_all(bytes)?;
    Ok(())
}

fn eof(e: io::Error) -> Error {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        Error::Format("unexpected end of data (truncated input)".into())
    } else {
        Error::Io(e)
    }
}

pub(crate) fn get_u32<R: Read>(r: &mut R) -> Result<usize> {
    r.read_u32::<LittleEndian>().map(|v| v as usize).map_err(eof)
}

pub(crate) fn get_u64<R: Read>(r: &mut R) -> Result<u64> {
    r.read_u64::<LittleEndian>().map_err(eof)
}

pub(crate) fn get_f64<R: Read>(r: &mut R) -> Result<f64> {
    r.read_f64::<LittleEndian>().map_err(eof)
}

/// Reads a length-prefixed `f64` array, refusing lengths above `max_len`.
pub(crate) fn get_f64s<R: Read>(r: &mut R, max_len: usize) -> Result<Vec<f64>> {
    let n = get_u32(r)?;
    if n > max_len {
        return Err(Error::Format(format!("array length {n} exceeds limit {max_len}")));
    }
    (0..n).map(|_| get_f64(r)).collect()
}

pub(crate) fn get_bytes<R: Read>(r: &mut R, max_len: usize) -> Result<Vec<u8>> {
    let n = get_u32(r)?;
    if n > max_len {
        return Err(Error::Format(format!("byte string length {n} exceeds limit {max_len}")));
    }
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf).map_err(eof)?;
    Ok(buf)
}

pub(crate) fn expect_magic<R: Read>(r: &mut R, magic: &[u8; 8]) -> Result<()> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(eof)?;
    if &buf != magic {
        return Err(Error::Format(format!(
            "bad magic: expected {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    Ok(())
}
