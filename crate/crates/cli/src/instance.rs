//! Problem instances read from JSON.

use std::fmt;
use std::path::Path;

use lcm_dilation::cpmaps::{ContractionFamily, CovariantPair, OperatorMap};
use lcm_dilation::cstar::{BaseAlgebra, LcmSystem, Model, Spatial};
use lcm_dilation::dilation::Tolerances;
use lcm_dilation::linalg::{CMat, C64};
use lcm_dilation::semigroup::{Semigroup, SemigroupKind};
use serde::de::{self, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

/// A complex number written as `[re, im]` or as a bare real.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cx(pub C64);

impl Serialize for Cx {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cx {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Cx;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a complex number [re, im] or a real number")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Cx, E> {
                Ok(Cx(C64::new(v, 0.0)))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Cx, E> {
                Ok(Cx(C64::new(v as f64, 0.0)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Cx, E> {
                Ok(Cx(C64::new(v as f64, 0.0)))
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Cx, A::Error> {
                let pair = "a complex pair [re, im]";
                let re: f64 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &pair))?;
                let im: f64 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &pair))?;
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &pair));
                }
                Ok(Cx(C64::new(re, im)))
            }
        }
        d.deserialize_any(V)
    }
}

/// Row-major matrix of complex entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixSpec(pub Vec<Vec<Cx>>);

impl MatrixSpec {
    pub fn from_matrix(m: &CMat) -> Self {
        MatrixSpec(
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| Cx(m[(i, j)])).collect())
                .collect(),
        )
    }

    fn shape(&self) -> Option<(usize, usize)> {
        let rows = self.0.len();
        let cols = self.0.first().map_or(0, Vec::len);
        (rows > 0 && cols > 0 && self.0.iter().all(|r| r.len() == cols)).then_some((rows, cols))
    }

    pub fn to_matrix(&self) -> CMat {
        let (r, c) = self.shape().unwrap_or((0, 0));
        CMat::from_fn(r, c, |i, j| self.0[i][j].0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemigroupSpec {
    pub kind: SemigroupKind,
    pub rank: usize,
}

/// A generator map: a unitary acting by conjugation, or an isometry into a
/// larger algebra (flat systems only).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitary: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isometry: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiSpec {
    /// `λ ↦ λ I_h` on the scalars.
    Scalar,
    /// The inclusion `M_n → M_n`.
    Identity,
    /// Diagonal part `M_n → M_n`.
    Diagonal,
    Transpose,
    /// Normalized trace times `I_h`.
    Trace,
    /// Values on the matrix units, block by block, row-major.
    Explicit {
        values: Vec<MatrixSpec>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesSpec {
    pub psd: Option<f64>,
    pub rank: Option<f64>,
    pub residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub semigroup: SemigroupSpec,
    pub model: Model,
    /// Block sizes of the base algebra; `[1]` is the scalars.
    #[serde(default = "scalar_blocks")]
    pub base: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub generators: Vec<GeneratorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<PhiSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<MatrixSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<TolerancesSpec>,
}

fn scalar_blocks() -> Vec<usize> {
    vec![1]
}

/// Schema or consistency problem, located by a JSON pointer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{pointer}: {message}")]
pub struct SchemaError {
    pub pointer: String,
    pub message: String,
}

fn schema(pointer: impl Into<String>, message: impl Into<String>) -> SchemaError {
    SchemaError {
        pointer: pointer.into(),
        message: message.into(),
    }
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => {
                out.push('/');
                out.push_str(&key.replace('~', "~0").replace('/', "~1"));
            }
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// A schema-valid instance with its content hash.
#[derive(Clone, Debug)]
pub struct Instance {
    pub def: InstanceSpec,
    pub hash: String,
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Self, SchemaError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let def: InstanceSpec = serde_path_to_error::deserialize(de).map_err(|e| {
            let pointer = pointer_of(e.path());
            schema(pointer, e.into_inner().to_string())
        })?;
        Self::from_spec(def)
    }

    pub fn load(path: &Path) -> Result<Self, SchemaError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| schema("/", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_spec(def: InstanceSpec) -> Result<Self, SchemaError> {
        check_shapes(&def)?;
        let bytes = serde_json::to_vec(&def).expect("instance serializes");
        let hash = hex::encode(Sha256::digest(&bytes));
        Ok(Instance { def, hash })
    }

    pub fn semigroup(&self) -> lcm_dilation::Result<Semigroup> {
        Semigroup::new(self.def.semigroup.kind, self.def.semigroup.rank)
    }

    pub fn base(&self) -> lcm_dilation::Result<BaseAlgebra> {
        BaseAlgebra::new(self.def.base.clone())
    }

    pub fn system(&self) -> lcm_dilation::Result<LcmSystem> {
        let gens = self
            .def
            .generators
            .iter()
            .map(|g| match (&g.unitary, &g.isometry, &g.target) {
                (Some(u), _, _) => Ok(Spatial::unitary(u.to_matrix())),
                (None, Some(v), Some(t)) => Ok(Spatial::into_target(
                    v.to_matrix(),
                    BaseAlgebra::new(t.clone())?,
                )),
                _ => unreachable!("checked by check_shapes"),
            })
            .collect::<lcm_dilation::Result<Vec<_>>>()?;
        LcmSystem::build(self.semigroup()?, self.def.model, self.base()?, gens)
    }

    /// Dimension of the represented Hilbert space, from `T` or `φ`.
    pub fn h(&self) -> Option<usize> {
        if let Some(t) = self.def.t.as_ref().and_then(|t| t.first()) {
            return t.shape().map(|s| s.0);
        }
        match &self.def.phi {
            Some(PhiSpec::Explicit { values }) => {
                values.first().and_then(|v| v.shape()).map(|s| s.0)
            }
            Some(PhiSpec::Identity | PhiSpec::Diagonal | PhiSpec::Transpose) => {
                Some(self.base_size())
            }
            Some(PhiSpec::Scalar | PhiSpec::Trace) => Some(1),
            None => None,
        }
    }

    fn base_size(&self) -> usize {
        self.def.base.iter().sum()
    }

    pub fn phi(&self) -> Option<lcm_dilation::Result<OperatorMap>> {
        let def = self.def.phi.as_ref()?;
        let h = self.h()?;
        Some(self.base().and_then(|base| {
            let n = self.base_size();
            let m = match def {
                PhiSpec::Scalar => {
                    OperatorMap::from_fn(base, h, |a| CMat::identity(h, h) * a.blocks[0][(0, 0)])
                }
                PhiSpec::Identity => OperatorMap::from_fn(base.clone(), h, |a| base.to_full(a)),
                PhiSpec::Diagonal => OperatorMap::from_fn(base.clone(), h, |a| {
                    CMat::from_diagonal(&base.to_full(a).diagonal())
                }),
                PhiSpec::Transpose => {
                    OperatorMap::from_fn(base.clone(), h, |a| base.to_full(a).transpose())
                }
                PhiSpec::Trace => OperatorMap::from_fn(base.clone(), h, |a| {
                    CMat::identity(h, h) * (base.to_full(a).trace() / n as f64)
                }),
                PhiSpec::Explicit { values } => {
                    OperatorMap::new(base, h, values.iter().map(MatrixSpec::to_matrix).collect())?
                }
            };
            Ok(m)
        }))
    }

    pub fn contractions(&self) -> Option<lcm_dilation::Result<ContractionFamily>> {
        let t = self.def.t.as_ref()?;
        Some(
            self.semigroup().and_then(|s| {
                ContractionFamily::new(s, t.iter().map(MatrixSpec::to_matrix).collect())
            }),
        )
    }

    /// The validated covariant pair, if the instance specifies `φ` and `T`.
    pub fn pair(&self) -> Option<lcm_dilation::Result<CovariantPair>> {
        let phi = self.phi()?;
        let t = self.contractions()?;
        Some((|| CovariantPair::new(self.system()?, phi?, t?))())
    }

    pub fn tolerances(&self) -> Tolerances {
        let mut tol = Tolerances::default();
        if let Some(t) = &self.def.tolerances {
            tol.psd = t.psd.unwrap_or(tol.psd);
            tol.rank = t.rank.unwrap_or(tol.rank);
            tol.residual = t.residual.unwrap_or(tol.residual);
        }
        tol
    }
}

fn check_shapes(def: &InstanceSpec) -> Result<(), SchemaError> {
    if def.semigroup.rank == 0 {
        return Err(schema("/semigroup/rank", "rank must be positive"));
    }
    if def.base.is_empty() || def.base.contains(&0) {
        return Err(schema("/base", "block sizes must be positive"));
    }
    let n: usize = def.base.iter().sum();
    if !def.generators.is_empty() && def.generators.len() != def.semigroup.rank {
        return Err(schema(
            "/generators",
            format!(
                "expected {} generator maps, found {}",
                def.semigroup.rank,
                def.generators.len()
            ),
        ));
    }
    for (i, g) in def.generators.iter().enumerate() {
        let at = format!("/generators/{i}");
        match (&g.unitary, &g.isometry, &g.target) {
            (Some(u), None, None) => {
                let s = shape_of(u, &format!("{at}/unitary"))?;
                if s != (n, n) {
                    return Err(schema(
                        format!("{at}/unitary"),
                        format!("expected a {n}×{n} matrix, found {}×{}", s.0, s.1),
                    ));
                }
            }
            (None, Some(v), Some(t)) => {
                let s = shape_of(v, &format!("{at}/isometry"))?;
                let m: usize = t.iter().sum();
                if t.is_empty() || t.contains(&0) {
                    return Err(schema(
                        format!("{at}/target"),
                        "block sizes must be positive",
                    ));
                }
                if s != (m, n) {
                    return Err(schema(
                        format!("{at}/isometry"),
                        format!("expected a {m}×{n} matrix, found {}×{}", s.0, s.1),
                    ));
                }
            }
            _ => {
                return Err(schema(
                    at,
                    "give either \"unitary\" or both \"isometry\" and \"target\"",
                ))
            }
        }
    }
    let mut h = None;
    if let Some(t) = &def.t {
        if t.len() != def.semigroup.rank {
            return Err(schema(
                "/t",
                format!(
                    "expected {} matrices, found {}",
                    def.semigroup.rank,
                    t.len()
                ),
            ));
        }
        for (i, m) in t.iter().enumerate() {
            let at = format!("/t/{i}");
            let s = shape_of(m, &at)?;
            if s.0 != s.1 {
                return Err(schema(at, format!("matrix is {}×{}, not square", s.0, s.1)));
            }
            match h {
                None => h = Some(s.0),
                Some(h0) if h0 != s.0 => {
                    return Err(schema(at, format!("expected size {h0}, found {}", s.0)))
                }
                _ => {}
            }
        }
    }
    if let Some(phi) = &def.phi {
        let single = def.base.len() == 1;
        let need = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(schema("/phi", msg)) };
        match phi {
            PhiSpec::Scalar => need(n == 1, "the scalar map needs base [1]")?,
            PhiSpec::Identity | PhiSpec::Diagonal | PhiSpec::Transpose => {
                need(single, "this map needs a single matrix block")?;
                if let Some(h) = h {
                    need(h == n, "T must act on the same space as the base algebra")?;
                }
            }
            PhiSpec::Trace => {}
            PhiSpec::Explicit { values } => {
                let dim: usize = def.base.iter().map(|b| b * b).sum();
                if values.len() != dim {
                    return Err(schema(
                        "/phi/values",
                        format!("expected {dim} values, found {}", values.len()),
                    ));
                }
                for (i, v) in values.iter().enumerate() {
                    let at = format!("/phi/values/{i}");
                    let s = shape_of(v, &at)?;
                    let want = h.unwrap_or(s.0);
                    if s != (want, want) {
                        return Err(schema(at, format!("expected a {want}×{want} matrix")));
                    }
                    h = Some(want);
                }
            }
        }
    }
    if let Some(t) = &def.tolerances {
        for (name, v) in [("psd", t.psd), ("rank", t.rank), ("residual", t.residual)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(schema(format!("/tolerances/{name}"), "must be positive"));
                }
            }
        }
    }
    Ok(())
}

fn shape_of(m: &MatrixSpec, at: &str) -> Result<(usize, usize), SchemaError> {
    m.shape()
        .ok_or_else(|| schema(at, "matrix rows must be non-empty and of equal length"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HALF: &str = r#"{"semigroup": {"kind": "free_abelian", "rank": 1},
        "model": "toeplitz_abelian", "phi": {"kind": "scalar"}, "t": [[[0.5]]]}"#;

    #[test]
    fn parses_a_minimal_instance() {
        let inst = Instance::from_json(HALF).unwrap();
        assert_eq!(inst.h(), Some(1));
        let pair = inst.pair().unwrap().unwrap();
        assert_eq!(pair.t.generators()[0][(0, 0)], C64::new(0.5, 0.0));
    }

    #[test]
    fn complex_entries_take_pairs() {
        let text = HALF.replace("[[0.5]]", "[[[0.0, 0.5]]]");
        let inst = Instance::from_json(&text).unwrap();
        let t = inst.contractions().unwrap().unwrap();
        assert_eq!(t.generators()[0][(0, 0)], C64::new(0.0, 0.5));
    }

    #[test]
    fn malformed_pair_is_located() {
        let text = HALF.replace("[[0.5]]", "[[[0.0, 0.5, 1.0]]]");
        let err = Instance::from_json(&text).unwrap_err();
        assert_eq!(err.pointer, "/t/0/0/0");
    }

    #[test]
    fn unknown_model_is_located() {
        let text = HALF.replace("toeplitz_abelian", "toeplitz");
        let err = Instance::from_json(&text).unwrap_err();
        assert_eq!(err.pointer, "/model");
    }

    #[test]
    fn dimension_mismatch_is_located() {
        let text = HALF.replace("[[[0.5]]]", "[[[0.5, 0.0]]]");
        let err = Instance::from_json(&text).unwrap_err();
        assert_eq!(err.pointer, "/t/0");
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = Instance::from_json(HALF).unwrap();
        let b = Instance::from_json(&HALF.replace('\n', " ").replace("  ", " ")).unwrap();
        assert_eq!(a.hash, b.hash);
    }
}
