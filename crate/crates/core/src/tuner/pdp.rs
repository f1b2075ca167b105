use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::gp::SurrogateState;
use super::space::{Assignment, Value};
use crate::error::{Error, Result};

pub const PDP_GRID_SIZE: usize = 40;
pub const PDP_SAMPLES: usize = 250;

#[derive(Debug, Clone, PartialEq)]
pub struct PdpRow {
    pub dim1: String,
    pub dim2: Option<String>,
    pub x1: Value,
    pub x2: Option<Value>,
    pub value: f64,
}

/// Surrogate mean averaged over `PDP_SAMPLES` draws of the other dimensions,
/// on a grid over one or two named dimensions. The same draws are reused at
/// every grid point.
pub fn partial_dependence(
    surrogate: &SurrogateState,
    dims: &[&str],
    grid_size: usize,
    seed: u64,
) -> Result<Vec<PdpRow>> {
    let space = surrogate.space();
    if dims.is_empty() || dims.len() > 2 || (dims.len() == 2 && dims[0] == dims[1]) {
        return Err(Error::InvalidConfig(
            "partial dependence needs one or two distinct dimensions".into(),
        ));
    }
    let idx = dims.iter().map(|d| space.index_of(d)).collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let background: Vec<Assignment> = (0..PDP_SAMPLES).map(|_| space.sample(&mut rng)).collect();

    let g1 = space.dimensions[idx[0]].grid(grid_size);
    let points: Vec<(Value, Option<Value>)> = match idx.get(1) {
        None => g1.into_iter().map(|v| (v, None)).collect(),
        Some(&j) => {
            let g2 = space.dimensions[j].grid(grid_size);
            g1.iter()
                .flat_map(|a| g2.iter().map(move |b| (a.clone(), Some(b.clone()))))
                .collect()
        }
    };

    points
        .into_par_iter()
        .map(|(x1, x2)| {
            let mut total = 0.0;
            for sample in &background {
                let mut a = sample.clone();
                a.0[idx[0]] = x1.clone();
                if let (Some(&j), Some(v)) = (idx.get(1), &x2) {
                    a.0[j] = v.clone();
                }
                total += surrogate.mean_encoded(&space.encode(&a)?);
            }
            Ok(PdpRow {
                dim1: dims[0].to_string(),
                dim2: dims.get(1).map(|d| d.to_string()),
                x1,
                x2,
                value: total / background.len() as f64,
            })
        })
        .collect()
}

/// Every one-dimensional grid in dimension order, then every pair `(i, j)`
/// with `i < j`.
pub fn partial_dependence_all(surrogate: &SurrogateState, grid_size: usize, seed: u64) -> Result<Vec<PdpRow>> {
    let names: Vec<&str> = surrogate.space().dimensions.iter().map(|d| d.name.as_str()).collect();
    let mut rows = Vec::new();
    for n in &names {
        rows.extend(partial_dependence(surrogate, &[n], grid_size, seed)?);
    }
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            rows.extend(partial_dependence(surrogate, &[names[i], names[j]], grid_size, seed)?);
        }
    }
    Ok(rows)
}

/// `dim1,dim2,x1,x2,value`; the second pair is blank for 1-D grids.
pub fn write_pdp_csv<W: Write>(rows: &[PdpRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["dim1", "dim2", "x1", "x2", "value"])?;
    for r in rows {
        w.write_record([
            r.dim1.clone(),
            r.dim2.clone().unwrap_or_default(),
            r.x1.to_string(),
            r.x2.as_ref().map(Value::to_string).unwrap_or_default(),
            r.value.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
