//! Flat binary parameter checkpoints.
//!
//! Record layout, all integers and floats little-endian:
//!
//! ```text
//! magic        8 bytes  "AWETNN01"
//! n_sizes      u32      number of layer sizes (>= 2)
//! sizes        u32 * n  layer sizes, input first
//! hidden_act   u8       0 = relu
//! output_act   u8       0 = tanh, 1 = identity
//! output_scale f64 * output_dim
//! n_params     u64      flat parameter count (must match the spec)
//! params       f64 * n_params, in flattening order
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::nnet::{HiddenActivation, MlpSpec, Network, OutputActivation, ParameterSet};

const MAGIC: &[u8; 8] = b"AWETNN01";

/// Writes a network's spec and parameters to `path`.
pub fn save_network(net: &Network, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    let sizes = net.spec.layer_sizes();
    w.write_all(&(sizes.len() as u32).to_le_bytes())?;
    for &s in sizes {
        w.write_all(&(s as u32).to_le_bytes())?;
    }
    w.write_all(&[0u8])?; // relu
    let out_act = match net.spec.output_activation() {
        OutputActivation::Tanh => 0u8,
        OutputActivation::Identity => 1u8,
    };
    w.write_all(&[out_act])?;
    for &s in net.spec.output_scale() {
        w.write_all(&s.to_le_bytes())?;
    }
    w.write_all(&(net.params.len() as u64).to_le_bytes())?;
    for &p in net.params.as_slice() {
        w.write_all(&p.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a network back from a checkpoint written by [`save_network`].
pub fn load_network(path: &Path) -> Result<Network> {
    let mut r = BufReader::new(File::open(path)?);
    let path_str = path.display().to_string();

    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::parse(&path_str, 0, "bad magic, not a checkpoint"));
    }

    let n_sizes = read_u32(&mut r)? as usize;
    if !(2..=64).contains(&n_sizes) {
        return Err(Error::parse(
            &path_str,
            0,
            format!("implausible layer count {n_sizes}"),
        ));
    }
    let mut sizes = Vec::with_capacity(n_sizes);
    for _ in 0..n_sizes {
        sizes.push(read_u32(&mut r)? as usize);
    }

    let mut acts = [0u8; 2];
    r.read_exact(&mut acts)?;
    if acts[0] != 0 {
        return Err(Error::parse(&path_str, 0, "unknown hidden activation"));
    }
    let output_act = match acts[1] {
        0 => OutputActivation::Tanh,
        1 => OutputActivation::Identity,
        other => {
            return Err(Error::parse(
                &path_str,
                0,
                format!("unknown output activation {other}"),
            ))
        }
    };

    let out_dim = *sizes.last().unwrap();
    let mut scale = Vec::with_capacity(out_dim);
    for _ in 0..out_dim {
        scale.push(read_f64(&mut r)?);
    }

    let spec = MlpSpec::new(sizes, HiddenActivation::Relu, output_act, scale)?;

    let n_params = read_u64(&mut r)? as usize;
    if n_params != spec.param_count() {
        return Err(Error::parse(
            &path_str,
            0,
            format!(
                "parameter count {n_params} does not match spec ({})",
                spec.param_count()
            ),
        ));
    }
    let mut values = Vec::with_capacity(n_params);
    for _ in 0..n_params {
        values.push(read_f64(&mut r)?);
    }
    let params = ParameterSet::from_flat(&spec, &values)?;
    Ok(Network::new(spec, params))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = std::env::temp_dir().join("awet_ckpt_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("actor.bin");

        let spec = MlpSpec::tanh_scaled(vec![4, 8, 2], vec![2.0, 0.5]).unwrap();
        let net = Network::init(spec, &mut ChaCha8Rng::seed_from_u64(77));
        save_network(&net, &path).unwrap();
        let loaded = load_network(&path).unwrap();
        assert_eq!(net.spec, loaded.spec);
        assert_eq!(net.params.as_slice(), loaded.params.as_slice());
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = std::env::temp_dir().join("awet_ckpt_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("junk.bin");
        std::fs::write(&path, b"NOTANETX0000").unwrap();
        assert!(load_network(&path).is_err());
    }
}
