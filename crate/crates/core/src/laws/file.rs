//! TOML law files.
//!
//! ```toml
//! name = "inversion"
//! dt_shift_steps = 0
//! W = [ ... 36 numbers, row-major ... ]
//! K = [ ... 108 numbers, K[i][a][b] row-major ... ]
//! source = [ ... 36 numbers ... ]      # optional, derived from W when absent
//!
//! [map]
//! alpha = [ ... 9 numbers ... ]
//! beta = [0.0, 0.0, 0.0]
//! ```

use serde::{Deserialize, Serialize};

use super::{Flux6, Mat6, TwoPointLawSpec};
use crate::affine::AffineMap;
use crate::error::{Error, Result};
use crate::grid::GridSpec;

#[derive(Serialize, Deserialize)]
struct MapFile {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct LawFile {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    dt_shift_steps: usize,
    #[serde(rename = "W")]
    w: Vec<f64>,
    #[serde(rename = "K")]
    k: Vec<f64>,
    #[serde(default)]
    source: Option<Vec<f64>>,
    map: MapFile,
}

fn take<const N: usize>(v: &[f64], what: &str) -> Result<[f64; N]> {
    v.try_into()
        .map_err(|_| Error::Parse(format!("`{what}` needs {N} numbers, found {}", v.len())))
}

fn mat6(v: &[f64], what: &str) -> Result<Mat6> {
    let flat: [f64; 36] = take(v, what)?;
    Ok(std::array::from_fn(|a| {
        std::array::from_fn(|b| flat[6 * a + b])
    }))
}

impl TwoPointLawSpec {
    pub fn to_toml(&self) -> String {
        let file = LawFile {
            name: Some(self.name.clone()),
            dt_shift_steps: self.time_shift,
            w: self.w.iter().flatten().copied().collect(),
            k: self.k.iter().flatten().flatten().copied().collect(),
            source: Some(self.source.iter().flatten().copied().collect()),
            map: MapFile {
                alpha: self.map.alpha().iter().flatten().copied().collect(),
                beta: self.map.beta().to_vec(),
            },
        };
        toml::to_string(&file).expect("law files always serialize")
    }

    /// Parses a law file; the map is made grid-exact when `grid` allows it.
    pub fn from_toml(text: &str, grid: &GridSpec) -> Result<Self> {
        let file: LawFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let a: [f64; 9] = take(&file.map.alpha, "map.alpha")?;
        let alpha = [[a[0], a[1], a[2]], [a[3], a[4], a[5]], [a[6], a[7], a[8]]];
        let beta: [f64; 3] = take(&file.map.beta, "map.beta")?;
        let map = AffineMap::classify(alpha, beta, grid)?;
        let w = mat6(&file.w, "W")?;
        let kf: [f64; 108] = take(&file.k, "K")?;
        let k: Flux6 = std::array::from_fn(|i| {
            std::array::from_fn(|a| std::array::from_fn(|b| kf[36 * i + 6 * a + b]))
        });
        let name = file.name.unwrap_or_else(|| "custom".into());
        match file.source {
            Some(s) => Self::new(name, map, file.dt_shift_steps, w, k, mat6(&s, "source")?),
            None => Self::from_mixing(name, map, file.dt_shift_steps, w, k),
        }
    }
}
