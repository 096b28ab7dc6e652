//! Instance manifests: a planning problem, its network and generator
//! metadata in one JSON document (`schemas/instance.v1.json`).
//!
//! Weight matrices are stored input-major: `weights[i][j]` connects input
//! `i` of the layer to neuron `j`. Batch-norm parameters are decimal
//! strings. The reader rejects unknown fields and reports the JSON path of
//! the first problem it finds.

use serde::{Deserialize, Serialize};

use super::canonical::to_canonical_json;
use crate::bnn::{BatchNormParams, Bnn, BnnLayer, InputSource, Neuron, UncoveredRule};
use crate::domains::{Family, Instance, Policy, WeightMode, GENERATOR};
use crate::model::{BinarizedGroup, ConstraintKind, LinearConstraint, PlanningProblem, RewardSpec};
use crate::{Decimal, Error, Result};

pub const SCHEMA_PREFIX: &str = "bnnplan.instance.v";
pub const SCHEMA_MAJOR: u32 = 1;
pub const SCHEMA_VERSION: &str = "bnnplan.instance.v1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceManifest {
    pub schema: String,
    pub meta: ManifestMeta,
    pub problem: ProblemDoc,
    pub bnn: BnnDoc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestMeta {
    pub generator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<Policy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_mode: Option<WeightMode>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowDoc {
    /// `[state bit, coefficient]` pairs.
    pub state: Vec<(usize, i64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub action: Vec<(usize, i64)>,
    pub bound: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardDoc {
    pub state: Vec<Decimal>,
    pub action: Vec<Decimal>,
    pub scale_pow10: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDoc {
    pub state_bits: Vec<String>,
    pub action_bits: Vec<String>,
    pub binarizations: Vec<BinarizedGroup>,
    pub global_rows: Vec<RowDoc>,
    pub goal_rows: Vec<RowDoc>,
    pub reward: RewardDoc,
    pub initial: Vec<u8>,
    pub horizon: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerDoc {
    /// `weights[i][j]`: input `i`, neuron `j`.
    pub weights: Vec<Vec<i8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batchnorm: Option<Vec<Option<BatchNormParams>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncoveredDoc {
    pub bit: usize,
    pub rule: UncoveredRule,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BnnDoc {
    pub widths: Vec<usize>,
    pub input_map: Vec<InputSource>,
    pub layers: Vec<LayerDoc>,
    pub output_map: Vec<usize>,
    pub uncovered_state_bits: Vec<UncoveredDoc>,
}

fn row_doc(row: &LinearConstraint) -> RowDoc {
    RowDoc {
        state: row.state.clone(),
        action: row.action.clone(),
        bound: row.bound,
    }
}

fn problem_doc(p: &PlanningProblem) -> ProblemDoc {
    ProblemDoc {
        state_bits: p.state_bits.clone(),
        action_bits: p.action_bits.clone(),
        binarizations: p.groups.clone(),
        global_rows: p.global_rows().map(row_doc).collect(),
        goal_rows: p.goal_rows().map(row_doc).collect(),
        reward: RewardDoc {
            state: p.reward.state.clone(),
            action: p.reward.action.clone(),
            scale_pow10: p.reward.scale_pow10,
        },
        initial: p.initial.iter().map(|&b| u8::from(b)).collect(),
        horizon: p.horizon,
    }
}

fn layer_doc(layer: &BnnLayer) -> LayerDoc {
    let weights = (0..layer.input_width)
        .map(|i| layer.neurons.iter().map(|n| n.weights[i]).collect())
        .collect();
    let batchnorm = layer
        .neurons
        .iter()
        .any(|n| n.batch_norm.is_some())
        .then(|| layer.neurons.iter().map(|n| n.batch_norm.clone()).collect());
    LayerDoc {
        weights,
        bias: Some(layer.neurons.iter().map(|n| n.bias).collect()),
        batchnorm,
    }
}

fn bnn_doc(bnn: &Bnn) -> BnnDoc {
    BnnDoc {
        widths: bnn.widths(),
        input_map: bnn.input_map().to_vec(),
        layers: bnn.layers().iter().map(layer_doc).collect(),
        output_map: bnn.output_map().to_vec(),
        uncovered_state_bits: bnn
            .uncovered()
            .iter()
            .map(|(&bit, &rule)| UncoveredDoc { bit, rule })
            .collect(),
    }
}

fn at(path: String) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Manifest { .. } => e,
        other => Error::manifest(path.clone(), strip_kind(&other)),
    }
}

/// Error text without the variant prefix added by `Display`.
fn strip_kind(e: &Error) -> String {
    match e {
        Error::Structural(m)
        | Error::Parameter(m)
        | Error::Unsatisfiable(m)
        | Error::Capacity(m)
        | Error::Configuration(m)
        | Error::Format(m) => m.clone(),
        other => other.to_string(),
    }
}

impl InstanceManifest {
    pub fn from_parts(problem: &PlanningProblem, bnn: &Bnn, meta: ManifestMeta) -> Self {
        InstanceManifest {
            schema: SCHEMA_VERSION.to_string(),
            meta,
            problem: problem_doc(problem),
            bnn: bnn_doc(bnn),
        }
    }

    pub fn from_instance(inst: &Instance) -> Self {
        let meta = ManifestMeta {
            generator: GENERATOR.to_string(),
            family: Some(inst.spec.family),
            n: Some(inst.spec.n),
            policy: inst.spec.policy,
            seed: Some(inst.spec.seed),
            weight_mode: Some(inst.spec.weight_mode),
        };
        InstanceManifest::from_parts(&inst.problem, &inst.bnn, meta)
    }

    /// Metadata for documents built outside the family generators.
    pub fn plain_meta() -> ManifestMeta {
        ManifestMeta {
            generator: GENERATOR.to_string(),
            family: None,
            n: None,
            policy: None,
            seed: None,
            weight_mode: None,
        }
    }

    /// Parses and fully validates a manifest.
    pub fn read(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: InstanceManifest = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::manifest(path, e.into_inner().to_string())
        })?;
        doc.check_schema()?;
        doc.to_parts()?;
        Ok(doc)
    }

    /// Canonical text: sorted keys, fixed layout.
    pub fn write(&self) -> Result<String> {
        to_canonical_json(self)
    }

    fn check_schema(&self) -> Result<()> {
        let major = self
            .schema
            .strip_prefix(SCHEMA_PREFIX)
            .and_then(|v| v.split('.').next())
            .and_then(|v| v.parse::<u32>().ok())
            .ok_or_else(|| {
                Error::manifest("schema", format!("unrecognized schema `{}`", self.schema))
            })?;
        if major > SCHEMA_MAJOR {
            return Err(Error::manifest(
                "schema",
                format!("schema major version {major} is newer than supported {SCHEMA_MAJOR}"),
            ));
        }
        Ok(())
    }

    pub fn to_problem(&self) -> Result<PlanningProblem> {
        let d = &self.problem;
        let reward = RewardSpec::new(d.reward.state.clone(), d.reward.action.clone())
            .map_err(at("problem.reward".into()))?;
        if reward.scale_pow10 != d.reward.scale_pow10 {
            return Err(Error::manifest(
                "problem.reward.scale_pow10",
                format!(
                    "declared {} but the coefficients need {}",
                    d.reward.scale_pow10, reward.scale_pow10
                ),
            ));
        }
        let mut initial = Vec::with_capacity(d.initial.len());
        for (i, &v) in d.initial.iter().enumerate() {
            match v {
                0 | 1 => initial.push(v == 1),
                _ => {
                    return Err(Error::manifest(
                        format!("problem.initial[{i}]"),
                        "expected 0 or 1",
                    ))
                }
            }
        }
        fn rows(
            docs: &[RowDoc],
            kind: ConstraintKind,
        ) -> impl Iterator<Item = LinearConstraint> + '_ {
            docs.iter().map(move |r| LinearConstraint {
                kind,
                state: r.state.clone(),
                action: r.action.clone(),
                bound: r.bound,
            })
        }
        let problem = PlanningProblem {
            state_bits: d.state_bits.clone(),
            action_bits: d.action_bits.clone(),
            groups: d.binarizations.clone(),
            constraints: rows(&d.global_rows, ConstraintKind::Global)
                .chain(rows(&d.goal_rows, ConstraintKind::Goal))
                .collect(),
            reward,
            initial,
            horizon: d.horizon,
        };
        let diags = problem.validate();
        if !diags.is_empty() {
            let text: Vec<String> = diags.iter().map(ToString::to_string).collect();
            return Err(Error::manifest("problem", text.join("; ")));
        }
        Ok(problem)
    }

    pub fn to_bnn(&self) -> Result<Bnn> {
        let d = &self.bnn;
        let mut layers = Vec::with_capacity(d.layers.len());
        let mut fan_in = d.input_map.len();
        for (l, doc) in d.layers.iter().enumerate() {
            let path = format!("bnn.layers[{l}]");
            if doc.weights.len() != fan_in {
                return Err(Error::manifest(
                    format!("{path}.weights"),
                    format!(
                        "{} rows, expected one per input ({fan_in})",
                        doc.weights.len()
                    ),
                ));
            }
            let width = doc.weights.first().map_or(0, Vec::len);
            for (i, row) in doc.weights.iter().enumerate() {
                if row.len() != width {
                    return Err(Error::manifest(
                        format!("{path}.weights[{i}]"),
                        format!("{} entries, row 0 has {width}", row.len()),
                    ));
                }
                if let Some(j) = row.iter().position(|w| *w != 1 && *w != -1) {
                    return Err(Error::manifest(
                        format!("{path}.weights[{i}][{j}]"),
                        format!("weight {} is not +1 or -1", row[j]),
                    ));
                }
            }
            if let Some(b) = &doc.bias {
                if b.len() != width {
                    return Err(Error::manifest(
                        format!("{path}.bias"),
                        format!("{} biases for {width} neurons", b.len()),
                    ));
                }
            }
            if let Some(bn) = &doc.batchnorm {
                if bn.len() != width {
                    return Err(Error::manifest(
                        format!("{path}.batchnorm"),
                        format!("{} entries for {width} neurons", bn.len()),
                    ));
                }
            }
            let mut neurons = Vec::with_capacity(width);
            for j in 0..width {
                let w: Vec<i8> = doc.weights.iter().map(|row| row[j]).collect();
                let bias = doc.bias.as_ref().map(|b| b[j]);
                let bn = doc.batchnorm.as_ref().and_then(|b| b[j].clone());
                let neuron = match (bias, bn) {
                    (Some(b), None) => Neuron::new(w, b),
                    (None, Some(p)) => Neuron::from_batch_norm(w, p),
                    (Some(b), Some(p)) => Neuron::with_checked_bias(w, b, p),
                    (None, None) => {
                        Err(Error::Parameter("neither bias nor batchnorm given".into()))
                    }
                }
                .map_err(at(format!("{path}.bias[{j}]")))?;
                neurons.push(neuron);
            }
            layers.push(BnnLayer::new(fan_in, neurons).map_err(at(path))?);
            fan_in = width;
        }
        let uncovered = d
            .uncovered_state_bits
            .iter()
            .map(|u| (u.bit, u.rule))
            .collect();
        let bnn = Bnn::new(d.input_map.clone(), layers, d.output_map.clone(), uncovered)
            .map_err(at("bnn".into()))?;
        if bnn.widths() != d.widths {
            return Err(Error::manifest(
                "bnn.widths",
                format!("declared {:?}, layers give {:?}", d.widths, bnn.widths()),
            ));
        }
        Ok(bnn)
    }

    pub fn to_parts(&self) -> Result<(PlanningProblem, Bnn)> {
        let p = self.to_problem()?;
        let bnn = self.to_bnn()?;
        bnn.check_problem(&p).map_err(at("bnn".into()))?;
        Ok((p, bnn))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{generate, DomainSpec};

    fn nav() -> InstanceManifest {
        let inst = generate(&DomainSpec::new(Family::Navigation, 3, 4).with_seed(7)).unwrap();
        InstanceManifest::from_instance(&inst)
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let m = nav();
        let text = m.write().unwrap();
        let back = InstanceManifest::read(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.write().unwrap(), text);
        let inst = generate(&DomainSpec::new(Family::Navigation, 3, 4).with_seed(7)).unwrap();
        assert_eq!(back.to_parts().unwrap(), (inst.problem, inst.bnn));
    }

    #[test]
    fn bad_weight_names_its_path() {
        let mut m = nav();
        m.bnn.layers[0].weights[3][5] = 2;
        let err = InstanceManifest::read(&m.write().unwrap()).unwrap_err();
        assert!(
            err.to_string().contains("bnn.layers[0].weights[3][5]"),
            "{err}"
        );
    }

    #[test]
    fn unknown_field_names_its_path() {
        let text =
            nav()
                .write()
                .unwrap()
                .replacen("\"horizon\"", "\"colour\": 1,\n    \"horizon\"", 1);
        let err = InstanceManifest::read(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("problem") && msg.contains("colour"), "{msg}");
    }

    #[test]
    fn future_major_rejected() {
        let mut m = nav();
        m.schema = "bnnplan.instance.v2".into();
        assert!(InstanceManifest::read(&m.write().unwrap()).is_err());
        m.schema = "bnnplan.instance.v1.3".into();
        assert!(InstanceManifest::read(&m.write().unwrap()).is_ok());
    }

    fn bn(mu: &str, sigma2: &str, eps: &str, gamma: &str, beta: &str) -> BatchNormParams {
        BatchNormParams {
            mu: mu.parse().unwrap(),
            sigma2: sigma2.parse().unwrap(),
            eps: eps.parse().unwrap(),
            gamma: gamma.parse().unwrap(),
            beta: beta.parse().unwrap(),
        }
    }

    #[test]
    fn batchnorm_and_bias_cross_checked() {
        let mut m = nav();
        let width = m.bnn.layers[2].weights[0].len();
        let mut params = vec![None; width];
        params[0] = Some(bn("0.5", "3", "1", "2", "1"));
        m.bnn.layers[2].batchnorm = Some(params);
        m.bnn.layers[2].bias.as_mut().unwrap()[0] = 1;
        let text = m.write().unwrap();
        assert!(text.contains("\"sigma2\": \"3\""));
        let back = InstanceManifest::read(&text).unwrap();
        assert_eq!(back.to_bnn().unwrap().layers()[2].neurons[0].bias, 1);

        m.bnn.layers[2].bias.as_mut().unwrap()[0] = 0;
        let err = InstanceManifest::read(&m.write().unwrap()).unwrap_err();
        assert!(err.to_string().contains("bnn.layers[2].bias[0]"), "{err}");

        // batch norm alone is enough
        m.bnn.layers[2].bias = None;
        let mut all = vec![Some(bn("0", "0", "1", "1", "0")); width];
        all[0] = Some(bn("2", "0", "1", "-1", "1"));
        m.bnn.layers[2].batchnorm = Some(all);
        let bnn = InstanceManifest::read(&m.write().unwrap())
            .unwrap()
            .to_bnn()
            .unwrap();
        assert_eq!(bnn.layers()[2].neurons[0].bias, -3);
    }

    #[test]
    fn invalid_problem_is_reported() {
        let mut m = nav();
        m.problem.initial.pop();
        let err = InstanceManifest::read(&m.write().unwrap()).unwrap_err();
        assert!(err.to_string().contains("initial length"), "{err}");
    }
}
