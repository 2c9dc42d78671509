//! Binary tensor snapshots: one JSON header line followed by the entries as
//! little-endian `f64` in row-major order.
//!
//! ```text
//! {"axes":["up","left"],"shape":[2,3],"dtype":"f64","order":"row-major"}\n
//! <6 x 8 bytes>
//! ```

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Result, TensorError};
use crate::tensor::Tensor;

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct Header {
    axes: Vec<String>,
    shape: Vec<usize>,
    dtype: String,
    order: String,
}

pub fn write_snapshot<W: Write>(tensor: &Tensor, mut out: W) -> Result<()> {
    let header = Header {
        axes: tensor.axes().to_vec(),
        shape: tensor.shape().to_vec(),
        dtype: "f64".into(),
        order: "row-major".into(),
    };
    let line = serde_json::to_string(&header).map_err(|e| TensorError::Snapshot(e.to_string()))?;
    let io = |e: std::io::Error| TensorError::Snapshot(e.to_string());
    out.write_all(line.as_bytes()).map_err(io)?;
    out.write_all(b"\n").map_err(io)?;
    let mut buf = Vec::with_capacity(8 * tensor.len());
    for x in tensor.data() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    out.write_all(&buf).map_err(io)?;
    Ok(())
}

pub fn read_snapshot<R: BufRead>(mut input: R) -> Result<Tensor> {
    let io = |e: std::io::Error| TensorError::Snapshot(e.to_string());
    let mut line = String::new();
    input.read_line(&mut line).map_err(io)?;
    let header: Header =
        serde_json::from_str(line.trim_end()).map_err(|e| TensorError::Snapshot(e.to_string()))?;
    if header.dtype != "f64" || header.order != "row-major" {
        return Err(TensorError::Snapshot(format!(
            "unsupported dtype/order {}/{}",
            header.dtype, header.order
        )));
    }
    let n: usize = header.shape.iter().product();
    let mut bytes = vec![0u8; 8 * n];
    input.read_exact(&mut bytes).map_err(io)?;
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Tensor::new(&header.axes, &header.shape, data)
}

/// Writes several tensors back to back; used for unit-cell dumps.
pub fn write_snapshots<'a, W: Write>(
    tensors: impl IntoIterator<Item = &'a Tensor>,
    mut out: W,
) -> Result<()> {
    for t in tensors {
        write_snapshot(t, &mut out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_bit_exact() {
        let t = Tensor::new(&["i", "j"], &[1, 2], vec![1.5, -0.25]).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&t, &mut buf).unwrap();
        let header = br#"{"axes":["i","j"],"shape":[1,2],"dtype":"f64","order":"row-major"}"#;
        assert_eq!(&buf[..header.len()], header);
        assert_eq!(buf[header.len()], b'\n');
        assert_eq!(
            &buf[header.len() + 1..header.len() + 9],
            &1.5f64.to_le_bytes()
        );
        assert_eq!(buf.len(), header.len() + 1 + 16);
    }

    #[test]
    fn round_trip_several() {
        let a = Tensor::from_fn(&["x", "y", "z"], &[2, 3, 2], |ix| {
            ix.iter().sum::<usize>() as f64 * 0.1
        })
        .unwrap();
        let b = Tensor::scalar(std::f64::consts::PI);
        let mut buf = Vec::new();
        write_snapshots([&a, &b], &mut buf).unwrap();
        let mut cur = std::io::Cursor::new(buf);
        assert_eq!(read_snapshot(&mut cur).unwrap(), a);
        assert_eq!(read_snapshot(&mut cur).unwrap(), b);
    }

    #[test]
    fn rejects_truncated_payload() {
        let t = Tensor::new(&["i"], &[3], vec![1.0, 2.0, 3.0]).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&t, &mut buf).unwrap();
        buf.truncate(buf.len() - 4);
        assert!(read_snapshot(std::io::Cursor::new(buf)).is_err());
    }
}
