//! Columnar text exchange for kernel sets and observation sets.
//!
//! Observation files start with `# key=value` metadata lines (`epsilon`, `seed`,
//! `replication`) followed by a CSV table with header `l,v,re,im`; channels are
//! numbered from 1. Kernel files are CSV with header `v,sigma,delta,l,re,im`,
//! one row per channel and frequency. Floats are written in shortest round-trip
//! form, so reading a written file reproduces the values exactly.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{BlurKernel, ChannelSet, ObservationSet};
use crate::error::{Error, Result};
use crate::series::FourierSeries;

#[derive(Debug, Serialize, Deserialize)]
struct ObservationRow {
    l: i64,
    v: usize,
    re: f64,
    im: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct KernelRow {
    v: usize,
    sigma: f64,
    delta: f64,
    l: i64,
    re: f64,
    im: f64,
}

pub fn write_observations<W: Write>(obs: &ObservationSet, mut out: W) -> Result<()> {
    writeln!(out, "# epsilon={}", obs.epsilon())?;
    writeln!(out, "# seed={}", obs.seed())?;
    writeln!(out, "# replication={}", obs.replication())?;
    let mut w = csv::Writer::from_writer(out);
    for (v, channel) in obs.channels().iter().enumerate() {
        for (l, y) in channel.iter() {
            w.serialize(ObservationRow {
                l,
                v: v + 1,
                re: y.re,
                im: y.im,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

fn split_metadata(text: &str) -> (BTreeMap<String, String>, String) {
    let mut meta = BTreeMap::new();
    let mut body = String::with_capacity(text.len());
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    (meta, body)
}

fn meta_value<T: std::str::FromStr>(
    meta: &BTreeMap<String, String>,
    key: &str,
) -> Result<Option<T>> {
    meta.get(key)
        .map(|v| {
            v.parse()
                .map_err(|_| Error::Config(format!("bad value for `{key}`: {v}")))
        })
        .transpose()
}

/// Collects `(l, value)` pairs per channel into symmetric-band series.
fn assemble(per_channel: BTreeMap<usize, BTreeMap<i64, Complex64>>) -> Result<Vec<FourierSeries>> {
    let mut out = Vec::with_capacity(per_channel.len());
    for (expected, (v, values)) in (1..).zip(per_channel) {
        if v != expected {
            return Err(Error::Config(format!("channel {expected} missing")));
        }
        let band = values.keys().map(|l| l.abs()).max().unwrap_or(0);
        if values.len() as i64 != 2 * band + 1 {
            return Err(Error::Config(format!(
                "channel {v} does not cover the full band -{band}..={band}"
            )));
        }
        out.push(FourierSeries::from_fn(band, |l| values[&l]));
    }
    Ok(out)
}

pub fn read_observations<R: Read>(mut input: R) -> Result<ObservationSet> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let (meta, body) = split_metadata(&text);
    let epsilon: f64 = meta_value(&meta, "epsilon")?
        .ok_or_else(|| Error::Config("observation file lacks `# epsilon=`".into()))?;
    let seed = meta_value(&meta, "seed")?.unwrap_or(0);
    let replication = meta_value(&meta, "replication")?.unwrap_or(0);
    let mut per_channel: BTreeMap<usize, BTreeMap<i64, Complex64>> = BTreeMap::new();
    for row in csv::Reader::from_reader(body.as_bytes()).deserialize() {
        let row: ObservationRow = row?;
        per_channel
            .entry(row.v)
            .or_default()
            .insert(row.l, Complex64::new(row.re, row.im));
    }
    ObservationSet::new(assemble(per_channel)?, epsilon, seed, replication)
}

pub fn write_kernels<W: Write>(channels: &ChannelSet, band: i64, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (v, kernel) in channels.kernels().iter().enumerate() {
        let series = kernel.fourier_series(band)?;
        for (l, g) in series.iter() {
            w.serialize(KernelRow {
                v: v + 1,
                sigma: kernel.sigma(),
                delta: kernel.delta(),
                l,
                re: g.re,
                im: g.im,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a kernel file into tabulated kernels.
pub fn read_kernels<R: Read>(input: R) -> Result<ChannelSet> {
    let mut params: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    let mut per_channel: BTreeMap<usize, BTreeMap<i64, Complex64>> = BTreeMap::new();
    for row in csv::Reader::from_reader(input).deserialize() {
        let row: KernelRow = row?;
        let p = *params.entry(row.v).or_insert((row.sigma, row.delta));
        if p != (row.sigma, row.delta) {
            return Err(Error::Config(format!(
                "channel {} has inconsistent sigma/delta",
                row.v
            )));
        }
        per_channel
            .entry(row.v)
            .or_default()
            .insert(row.l, Complex64::new(row.re, row.im));
    }
    let kernels = assemble(per_channel)?
        .into_iter()
        .zip(params.values())
        .map(|(series, &(sigma, delta))| BlurKernel::tabulated(sigma, delta, series))
        .collect::<Result<Vec<_>>>()?;
    ChannelSet::new(kernels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::simulate;

    #[test]
    fn observations_round_trip_exactly() {
        let f = FourierSeries::from_fn(12, |l| Complex64::new(1.0 / (1.0 + l.abs() as f64), 0.0));
        let ch = ChannelSet::laplacian_sigmas(&[0.2, 1.3]).unwrap();
        let obs = simulate(&f, &ch, 0.05, 17).unwrap();
        let mut buf = Vec::new();
        write_observations(&obs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# epsilon=0.05\n# seed=17\n"));
        assert!(text.contains("l,v,re,im"));
        let back = read_observations(buf.as_slice()).unwrap();
        assert_eq!(back, obs);
    }

    #[test]
    fn kernels_round_trip_to_tabulated() {
        let ch = ChannelSet::laplacian_sigmas(&[0.2, 1.3, 4.0]).unwrap();
        let mut buf = Vec::new();
        write_kernels(&ch, 30, &mut buf).unwrap();
        let back = read_kernels(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back.rho_n(), ch.rho_n());
        for (a, b) in ch.kernels().iter().zip(back.kernels()) {
            for l in -30..=30 {
                assert_eq!(a.fourier(l), b.fourier(l));
            }
            assert_eq!(b.fourier(31), None);
        }
    }

    #[test]
    fn missing_epsilon_is_rejected() {
        let text = "l,v,re,im\n0,1,1.0,0.0\n";
        assert!(read_observations(text.as_bytes()).is_err());
    }

    #[test]
    fn incomplete_band_is_rejected() {
        let text = "# epsilon=0.1\nl,v,re,im\n0,1,1.0,0.0\n2,1,1.0,0.0\n-2,1,1.0,0.0\n";
        assert!(read_observations(text.as_bytes()).is_err());
    }
}
