//! Deterministic sampling from magnitude laws.
//!
//! Every draw is keyed by (master_seed, stream_id, draw index): the uniform
//! for draw i is read from a counter-mode ChaCha stream positioned directly
//! at that index, never from mutable generator state threaded through a
//! loop. Batches are therefore reproducible bit for bit at any thread
//! count, any prefix of a batch equals the shorter batch, and distinct
//! streams never collide. Magnitudes go through the law's inverse cdf
//! (no rejection steps), directions through the inverse normal cdf applied
//! coordinate-wise and normalized.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distributions::RadialLaw;
use crate::error::{Error, Result};
use crate::exec;
use crate::fmtnum::g17;
use crate::numerics::special::normal_quantile;

/// Draws per parallel work block. Blocks are keyed by absolute draw index,
/// so the split is invisible in the output.
const BLOCK: usize = 4096;

/// Uniform in (0, 1) from one 64-bit word: 53 random bits, floored away
/// from zero so downstream inverse cdfs never see an endpoint. The top end
/// is already capped at 1 - 2^-53 by construction.
fn unit_open(word: u64) -> f64 {
    ((word >> 11) as f64 * (0.5f64).powi(53)).max((0.5f64).powi(54))
}

/// The uniforms at absolute indices start..start+count of the given
/// (master_seed, stream_id) counter stream.
fn uniforms_at(master_seed: u64, stream_id: u64, start: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id);
    // One uniform consumes one 64-bit draw = two 32-bit words.
    rng.set_word_pos(2 * start as u128);
    (0..count).map(|_| unit_open(rng.next_u64())).collect()
}

/// A batch of magnitudes with its provenance.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub master_seed: u64,
    pub stream_id: u64,
    pub law_descriptor: String,
    pub n: usize,
}

/// A batch of points in R^(d+1), stored flat (point i occupies
/// `values[i*ambient_dim .. (i+1)*ambient_dim]`), along with the magnitudes
/// they were built from.
#[derive(Debug, Clone)]
pub struct VectorBatch {
    pub values: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub ambient_dim: usize,
    pub master_seed: u64,
    pub stream_id: u64,
    pub law_descriptor: String,
    pub n: usize,
}

fn descriptor(law: &RadialLaw) -> String {
    format!("{}:d={}", law.shape().id(), law.d())
}

/// n magnitudes by inverse-cdf sampling on the counter stream.
pub fn sample_magnitudes(
    law: &RadialLaw,
    n: usize,
    master_seed: u64,
    stream_id: u64,
) -> SampleBatch {
    let blocks = n.div_ceil(BLOCK);
    let chunks = exec::map_indexed(blocks, |b| {
        let start = b * BLOCK;
        let count = BLOCK.min(n - start);
        uniforms_at(master_seed, stream_id, start as u64, count)
            .into_iter()
            .map(|p| law.quantile(p))
            .collect::<Vec<f64>>()
    });
    SampleBatch {
        values: chunks.concat(),
        master_seed,
        stream_id,
        law_descriptor: descriptor(law),
        n,
    }
}

/// Sequential twin of [`sample_magnitudes`]; same output, no work splitting.
/// Exists as the baseline for the parallel speedup benchmarks.
pub fn sample_magnitudes_seq(
    law: &RadialLaw,
    n: usize,
    master_seed: u64,
    stream_id: u64,
) -> SampleBatch {
    let values: Vec<f64> = uniforms_at(master_seed, stream_id, 0, n)
        .into_iter()
        .map(|p| law.quantile(p))
        .collect();
    SampleBatch {
        values,
        master_seed,
        stream_id,
        law_descriptor: descriptor(law),
        n,
    }
}

/// n points of the radial density in R^(d+1): magnitude by inverse cdf,
/// direction by normalizing a vector of inverse-normal-cdf coordinates.
/// Point i consumes the (ambient_dim + 1) uniforms starting at index
/// i * (ambient_dim + 1): first the magnitude, then one per coordinate.
pub fn sample_vectors(
    law: &RadialLaw,
    n: usize,
    master_seed: u64,
    stream_id: u64,
) -> Result<VectorBatch> {
    let d = law.d();
    if d.fract() != 0.0 || d > u32::MAX as f64 {
        return Err(Error::NonIntegerDimension(d));
    }
    let dim = d as usize + 1;
    let stride = dim + 1;
    let blocks = n.div_ceil(BLOCK);
    let chunks = exec::map_indexed(blocks, |b| {
        let start = b * BLOCK;
        let count = BLOCK.min(n - start);
        let us = uniforms_at(
            master_seed,
            stream_id,
            (start * stride) as u64,
            count * stride,
        );
        let mut coords = Vec::with_capacity(count * dim);
        let mut mags = Vec::with_capacity(count);
        for i in 0..count {
            let row = &us[i * stride..(i + 1) * stride];
            let u = law.quantile(row[0]);
            let mut z: Vec<f64> = row[1..].iter().map(|&p| normal_quantile(p)).collect();
            let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                z[0] = 1.0;
            }
            let norm = if norm == 0.0 { 1.0 } else { norm };
            mags.push(u);
            coords.extend(z.iter().map(|&v| u * v / norm));
        }
        (coords, mags)
    });
    let mut values = Vec::with_capacity(n * dim);
    let mut magnitudes = Vec::with_capacity(n);
    for (c, m) in chunks {
        values.extend(c);
        magnitudes.extend(m);
    }
    Ok(VectorBatch {
        values,
        magnitudes,
        ambient_dim: dim,
        master_seed,
        stream_id,
        law_descriptor: descriptor(law),
        n,
    })
}

/// Standardizes magnitudes onto the law's weak limit, elementwise:
/// t = d(u_star - u) for compact laws, t = sqrt(nu)(u/u_d - 1) otherwise.
pub fn transform_to_limit(law: &RadialLaw, values: &[f64]) -> Result<Vec<f64>> {
    let lim = law.limit_law()?;
    Ok(values.iter().map(|&u| lim.standardize(u)).collect())
}

/// Fixed-layout binary batch header: magic, format version, count,
/// dimension parameter, master seed. 32 bytes, little-endian, followed by
/// `n` f64 values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadbHeader {
    pub version: u32,
    pub n: u64,
    pub d: f64,
    pub seed: u64,
}

const RADB_MAGIC: &[u8; 4] = b"RADB";
const RADB_VERSION: u32 = 1;

/// Writes magnitudes in the RADB binary layout.
pub fn write_radb(path: &Path, d: f64, seed: u64, values: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(32 + 8 * values.len());
    buf.extend_from_slice(RADB_MAGIC);
    buf.extend_from_slice(&RADB_VERSION.to_le_bytes());
    buf.extend_from_slice(&(values.len() as u64).to_le_bytes());
    buf.extend_from_slice(&d.to_le_bytes());
    buf.extend_from_slice(&seed.to_le_bytes());
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    for v in values {
        f.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a RADB file back: header plus values.
pub fn read_radb(path: &Path) -> Result<(RadbHeader, Vec<f64>)> {
    let bytes = fs::read(path)?;
    if bytes.len() < 32 || &bytes[0..4] != RADB_MAGIC {
        return Err(Error::Config(format!(
            "{} is not a RADB batch file",
            path.display()
        )));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != RADB_VERSION {
        return Err(Error::Config(format!(
            "unsupported RADB version {version} in {}",
            path.display()
        )));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let d = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let seed = u64::from_le_bytes(bytes[24..32].try_into().unwrap());
    let need = 32 + 8 * n as usize;
    if bytes.len() != need {
        return Err(Error::Config(format!(
            "RADB file {} holds {} bytes, header promises {need}",
            path.display(),
            bytes.len()
        )));
    }
    let values = bytes[32..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((RadbHeader { version, n, d, seed }, values))
}

/// Writes one value per line, formatted to round-trip exactly.
pub fn write_values_csv(path: &Path, values: &[f64]) -> Result<()> {
    let mut out = String::with_capacity(values.len() * 24);
    for v in values {
        out.push_str(&g17(*v));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
