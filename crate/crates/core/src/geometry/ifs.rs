use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::word::Word;
use crate::{Error, Result};

pub type Point = Vec<f64>;

pub const SIERPINSKI_GASKET: &str = "sierpinski-gasket";
pub const VICSEK: &str = "vicsek";

/// Homogeneous IFS `F_i(x) = ratio * (x - b_i) + b_i`.
///
/// Anchors are rescaled on construction so that the attractor has diameter 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IfsSpec {
    pub name: String,
    pub dimension: usize,
    pub ratio: f64,
    pub anchors: Vec<Point>,
}

impl IfsSpec {
    pub fn new(
        name: impl Into<String>,
        dimension: usize,
        ratio: f64,
        anchors: Vec<Point>,
    ) -> Result<Self> {
        let spec = IfsSpec {
            name: name.into(),
            dimension,
            ratio,
            anchors,
        };
        spec.validate()?;
        Ok(spec.normalized())
    }

    fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::InvalidFractal("dimension must be positive".into()));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::InvalidFractal(format!(
                "ratio {} not in (0, 1)",
                self.ratio
            )));
        }
        if self.anchors.len() < 2 {
            return Err(Error::InvalidFractal(
                "at least two maps are required".into(),
            ));
        }
        for (i, a) in self.anchors.iter().enumerate() {
            if a.len() != self.dimension {
                return Err(Error::InvalidFractal(format!(
                    "anchor {} has {} coordinates, expected {}",
                    i,
                    a.len(),
                    self.dimension
                )));
            }
            if a.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidFractal(format!("anchor {i} is not finite")));
            }
        }
        for i in 0..self.anchors.len() {
            for j in i + 1..self.anchors.len() {
                if distance(&self.anchors[i], &self.anchors[j]) < 1e-12 {
                    return Err(Error::InvalidFractal(format!(
                        "anchors {i} and {j} coincide"
                    )));
                }
            }
        }
        let alpha = self.alpha();
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidFractal(format!(
                "alpha = {alpha} is not finite and positive"
            )));
        }
        Ok(())
    }

    // The attractor lies in the convex hull of the anchors and contains them,
    // so its diameter is the largest anchor distance.
    fn normalized(mut self) -> Self {
        let diam = self.anchor_diameter();
        if (diam - 1.0).abs() > 0.0 {
            for a in &mut self.anchors {
                for c in a.iter_mut() {
                    *c /= diam;
                }
            }
        }
        self
    }

    pub fn anchor_diameter(&self) -> f64 {
        let mut diam: f64 = 0.0;
        for i in 0..self.anchors.len() {
            for j in i + 1..self.anchors.len() {
                diam = diam.max(distance(&self.anchors[i], &self.anchors[j]));
            }
        }
        diam
    }

    pub fn sierpinski_gasket() -> Self {
        let h = 3f64.sqrt() / 2.0;
        IfsSpec::new(
            SIERPINSKI_GASKET,
            2,
            0.5,
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]],
        )
        .expect("built-in gasket is valid")
    }

    pub fn vicsek() -> Self {
        IfsSpec::new(
            VICSEK,
            2,
            1.0 / 3.0,
            vec![
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![1.0, 1.0],
                vec![0.0, 1.0],
                vec![0.5, 0.5],
            ],
        )
        .expect("built-in Vicsek set is valid")
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            SIERPINSKI_GASKET | "sg" | "gasket" => Ok(Self::sierpinski_gasket()),
            VICSEK | "vicsek-set" => Ok(Self::vicsek()),
            other => Err(Error::Config(format!("unknown built-in fractal '{other}'"))),
        }
    }

    /// Parses a config document. JSON is detected by a leading `{`, anything
    /// else is read as TOML.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let raw: RawConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        };
        raw.into_spec()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_config_str(&text)
    }

    pub fn n_maps(&self) -> usize {
        self.anchors.len()
    }

    /// Hausdorff dimension `-log N / log ratio`.
    pub fn alpha(&self) -> f64 {
        -(self.n_maps() as f64).ln() / self.ratio.ln()
    }

    pub fn apply(&self, i: usize, x: &[f64]) -> Point {
        let b = &self.anchors[i];
        x.iter()
            .zip(b)
            .map(|(xi, bi)| self.ratio * (xi - bi) + bi)
            .collect()
    }

    /// `F_{w_1} o ... o F_{w_n}(q)`.
    pub fn cell_point(&self, w: &Word, q: &[f64]) -> Point {
        let mut x = q.to_vec();
        for &letter in w.letters().iter().rev() {
            x = self.apply(letter, &x);
        }
        x
    }

    /// `mu(K_w) = N^{-|w|}` for the normalized self-similar measure.
    pub fn cell_measure(&self, w: &Word) -> f64 {
        (self.n_maps() as f64).powi(-(w.len() as i32))
    }

    /// Stable identifier used as the fixed-point cache key.
    pub fn config_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.name.as_bytes());
        hasher.update(self.dimension.to_le_bytes());
        hasher.update(self.ratio.to_bits().to_le_bytes());
        for a in &self.anchors {
            for c in a {
                hasher.update(c.to_bits().to_le_bytes());
            }
        }
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Deserialize)]
struct RawConfig {
    name: Option<String>,
    dimension: Option<usize>,
    ratio: Option<f64>,
    anchors: Option<Vec<Vec<f64>>>,
}

impl RawConfig {
    fn into_spec(self) -> Result<IfsSpec> {
        let missing = |field: &str| Error::Config(format!("missing field \"{field}\""));
        let name = self.name.ok_or_else(|| missing("name"))?;
        let dimension = self.dimension.ok_or_else(|| missing("dimension"))?;
        let ratio = self.ratio.ok_or_else(|| missing("ratio"))?;
        let anchors = self.anchors.ok_or_else(|| missing("anchors"))?;
        IfsSpec::new(name, dimension, ratio, anchors)
    }
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_normalized() {
        for ifs in [IfsSpec::sierpinski_gasket(), IfsSpec::vicsek()] {
            assert!((ifs.anchor_diameter() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_values() {
        let sg = IfsSpec::sierpinski_gasket();
        assert!((sg.alpha() - 3f64.ln() / 2f64.ln()).abs() < 1e-14);
        let v = IfsSpec::vicsek();
        assert!((v.alpha() - 5f64.ln() / 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn cell_point_examples() {
        let sg = IfsSpec::sierpinski_gasket();
        let b = &sg.anchors;
        assert_eq!(sg.cell_point(&Word::new(vec![0]), &b[0]), b[0]);
        let q = vec![0.3, 0.1];
        assert_eq!(sg.cell_point(&Word::empty(), &q), q);
        let x = sg.cell_point(&Word::new(vec![0, 1]), &b[1]);
        let expect: Vec<f64> = b[0].iter().zip(&b[1]).map(|(a, c)| (a + c) / 2.0).collect();
        assert!(distance(&x, &expect) < 1e-15);
    }

    #[test]
    fn cell_measure_examples() {
        let sg = IfsSpec::sierpinski_gasket();
        assert!((sg.cell_measure(&Word::new(vec![0, 2])) - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(sg.cell_measure(&Word::empty()), 1.0);
        let v = IfsSpec::vicsek();
        assert!((v.cell_measure(&Word::new(vec![0, 1, 4])) - 1.0 / 125.0).abs() < 1e-15);
    }

    #[test]
    fn config_missing_field_is_named() {
        let err = IfsSpec::from_config_str("name = \"x\"\ndimension = 1\nanchors = [[0.0],[1.0]]")
            .unwrap_err();
        assert!(err.to_string().contains("\"ratio\""), "{err}");
        let err =
            IfsSpec::from_config_str("{\"name\":\"x\",\"ratio\":0.5,\"anchors\":[[0.0],[1.0]]}")
                .unwrap_err();
        assert!(err.to_string().contains("\"dimension\""), "{err}");
    }

    #[test]
    fn config_roundtrip_toml() {
        let text = "name = \"tri\"\ndimension = 2\nratio = 0.5\nanchors = [[0.0, 0.0], [2.0, 0.0], [1.0, 1.7320508075688772]]\n";
        let ifs = IfsSpec::from_config_str(text).unwrap();
        assert_eq!(ifs.n_maps(), 3);
        assert!((ifs.anchor_diameter() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_ratio_and_duplicate_anchors() {
        assert!(IfsSpec::new("x", 1, 1.5, vec![vec![0.0], vec![1.0]]).is_err());
        assert!(IfsSpec::new("x", 1, 0.5, vec![vec![0.0], vec![0.0]]).is_err());
        assert!(IfsSpec::new("x", 1, 0.5, vec![vec![0.0]]).is_err());
    }
}
