//! Token-sequence templates built from graph elements: the four edge templates
//! used to train the language model, the multi-hop infill prompt used by the
//! path sampler, and the context sentence fed to the node-type classifier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hin::{Edge, Hin};
use crate::tokens::{relates_to, IT, MASK, PERIOD, SEP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskKind {
    Edge,
    Node,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Slot {
    Literal(String),
    /// 1-based edge mask index within the template.
    EdgeMask(usize),
    /// 1-based node mask index within the template.
    NodeMask(usize),
    Sep,
}

impl Slot {
    fn literal(s: &str) -> Slot {
        Slot::Literal(s.to_string())
    }

    fn mask(&self) -> Option<(MaskKind, usize)> {
        match self {
            Slot::EdgeMask(i) => Some((MaskKind::Edge, *i)),
            Slot::NodeMask(i) => Some((MaskKind::Node, *i)),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskInfo {
    pub kind: MaskKind,
    pub index: usize,
    pub position: usize,
}

/// A token sequence with masked positions and an optional training target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskedTemplate {
    slots: Vec<Slot>,
    target: Option<Vec<String>>,
}

impl MaskedTemplate {
    pub fn new(slots: Vec<Slot>, target: Option<Vec<String>>) -> Result<Self> {
        let t = MaskedTemplate { slots, target };
        t.check_order()?;
        Ok(t)
    }

    fn check_order(&self) -> Result<()> {
        let mut last_edge = 0;
        let mut last_node = 0;
        for s in &self.slots {
            let (last, i) = match s {
                Slot::EdgeMask(i) => (&mut last_edge, *i),
                Slot::NodeMask(i) => (&mut last_node, *i),
                _ => continue,
            };
            if i <= *last {
                return Err(Error::invalid("mask indices must increase left to right"));
            }
            *last = i;
        }
        Ok(())
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn target(&self) -> Option<&[String]> {
        self.target.as_deref()
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Flat tokens with `[MASK]` at masked positions and `[SEP]` for separators.
    pub fn tokens(&self) -> Vec<String> {
        self.slots
            .iter()
            .map(|s| match s {
                Slot::Literal(t) => t.clone(),
                Slot::EdgeMask(_) | Slot::NodeMask(_) => MASK.to_string(),
                Slot::Sep => SEP.to_string(),
            })
            .collect()
    }

    pub fn masks(&self) -> Vec<MaskInfo> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(position, s)| s.mask().map(|(kind, index)| MaskInfo { kind, index, position }))
            .collect()
    }

    pub fn count_masks(&self, kind: MaskKind) -> usize {
        self.masks().iter().filter(|m| m.kind == kind).count()
    }

    pub fn mask_at(&self, position: usize) -> Option<(MaskKind, usize)> {
        self.slots.get(position).and_then(Slot::mask)
    }

    pub fn position_of(&self, kind: MaskKind, index: usize) -> Option<usize> {
        self.masks()
            .into_iter()
            .find(|m| m.kind == kind && m.index == index)
            .map(|m| m.position)
    }

    /// Replace the mask at `position` with literal tokens.
    pub fn fill(&self, position: usize, tokens: &[String]) -> Result<MaskedTemplate> {
        if self.mask_at(position).is_none() {
            return Err(Error::invalid(format!("no mask at position {position}")));
        }
        let mut slots = Vec::with_capacity(self.slots.len() + tokens.len());
        slots.extend_from_slice(&self.slots[..position]);
        slots.extend(tokens.iter().map(|t| Slot::Literal(t.clone())));
        slots.extend_from_slice(&self.slots[position + 1..]);
        Ok(MaskedTemplate {
            slots,
            target: self.target.clone(),
        })
    }

    /// Literal tokens strictly before `position`; fails if any of them is still masked.
    pub fn left_context(&self, position: usize) -> Result<Vec<String>> {
        if position > self.slots.len() {
            return Err(Error::invalid(format!("position {position} out of range")));
        }
        self.literal_span(0, position)
    }

    /// Literal tokens from `start` up to (not including) the next mask.
    pub fn until_next_mask(&self, start: usize) -> Vec<String> {
        let end = (start..self.slots.len())
            .find(|&i| self.slots[i].mask().is_some())
            .unwrap_or(self.slots.len());
        self.literal_span(start, end).expect("span has no masks")
    }

    fn literal_span(&self, start: usize, end: usize) -> Result<Vec<String>> {
        self.slots[start..end]
            .iter()
            .map(|s| match s {
                Slot::Literal(t) => Ok(t.clone()),
                Slot::Sep => Ok(SEP.to_string()),
                _ => Err(Error::invalid("left context contains an unfilled mask")),
            })
            .collect()
    }

    /// The sentence with the target substituted into the single mask.
    pub fn with_target(&self) -> Result<Vec<String>> {
        let target = self
            .target
            .as_ref()
            .ok_or_else(|| Error::invalid("template has no target"))?;
        let masks = self.masks();
        let [m] = masks.as_slice() else {
            return Err(Error::invalid("target substitution needs exactly one mask"));
        };
        Ok(self.fill(m.position, target)?.tokens())
    }
}

/// JSON form: `{"tokens": [...], "masks": [{"kind", "index", "position"}], "target": [...] | null}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateJson {
    pub tokens: Vec<String>,
    pub masks: Vec<MaskInfo>,
    pub target: Option<Vec<String>>,
}

impl From<&MaskedTemplate> for TemplateJson {
    fn from(t: &MaskedTemplate) -> Self {
        TemplateJson {
            tokens: t.tokens(),
            masks: t.masks(),
            target: t.target.clone(),
        }
    }
}

impl TryFrom<TemplateJson> for MaskedTemplate {
    type Error = Error;

    fn try_from(j: TemplateJson) -> Result<Self> {
        let mut slots: Vec<Slot> = j
            .tokens
            .into_iter()
            .map(|t| if t == SEP { Slot::Sep } else { Slot::Literal(t) })
            .collect();
        for m in &j.masks {
            let slot = slots
                .get_mut(m.position)
                .ok_or_else(|| Error::invalid(format!("mask position {} out of range", m.position)))?;
            *slot = match m.kind {
                MaskKind::Edge => Slot::EdgeMask(m.index),
                MaskKind::Node => Slot::NodeMask(m.index),
            };
        }
        MaskedTemplate::new(slots, j.target)
    }
}

impl Serialize for MaskedTemplate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TemplateJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for MaskedTemplate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = TemplateJson::deserialize(d)?;
        MaskedTemplate::try_from(j).map_err(serde::de::Error::custom)
    }
}

fn literals(tokens: &[String]) -> impl Iterator<Item = Slot> + '_ {
    tokens.iter().map(|t| Slot::Literal(t.clone()))
}

/// One of the four training templates for an edge:
///
/// 1. `v_h relates to [MASK]` -> `v_t`
/// 2. `[MASK] relates to v_t` -> `v_h`
/// 3. `v_h r [MASK]` -> `v_t`
/// 4. `[MASK] r v_t` -> `v_h`
pub fn verbalize_edge(hin: &Hin, edge: &Edge, template_id: u8) -> Result<MaskedTemplate> {
    let head = &hin.node(edge.src).tokens;
    let tail = &hin.node(edge.dst).tokens;
    let relation: Vec<String> = match template_id {
        1 | 2 => relates_to(),
        3 | 4 => hin.edge_type_tokens(edge.edge_type).to_vec(),
        other => return Err(Error::invalid(format!("unknown template id {other}"))),
    };
    let mut slots = Vec::new();
    let target = if template_id % 2 == 1 {
        slots.extend(literals(head));
        slots.extend(literals(&relation));
        slots.push(Slot::NodeMask(1));
        tail.clone()
    } else {
        slots.push(Slot::NodeMask(1));
        slots.extend(literals(&relation));
        slots.extend(literals(tail));
        head.clone()
    };
    MaskedTemplate::new(slots, Some(target))
}

/// `v_h [E1] [V1] . It [E2] [V2] . It ... [El] v_t` with `l` edge masks and `l - 1` node masks.
pub fn build_infill_template(head: &[String], tail: &[String], hops: usize) -> Result<MaskedTemplate> {
    if hops < 2 {
        return Err(Error::invalid(format!(
            "infill templates need at least 2 hops, got {hops}"
        )));
    }
    if head.is_empty() || tail.is_empty() {
        return Err(Error::invalid("endpoint names must be non-empty"));
    }
    let mut slots: Vec<Slot> = literals(head).collect();
    for k in 1..hops {
        if k > 1 {
            slots.push(Slot::literal(IT));
        }
        slots.push(Slot::EdgeMask(k));
        slots.push(Slot::NodeMask(k));
        slots.push(Slot::literal(PERIOD));
    }
    slots.push(Slot::literal(IT));
    slots.push(Slot::EdgeMask(hops));
    slots.extend(literals(tail));
    MaskedTemplate::new(slots, None)
}

/// `v_j [SEP] a [SEP] v_i`.
pub fn verbalize_context(neighbor: &[String], edge_type: &[String], node: &[String]) -> Result<Vec<String>> {
    if neighbor.is_empty() || edge_type.is_empty() || node.is_empty() {
        return Err(Error::invalid("context parts must be non-empty"));
    }
    let mut out = Vec::with_capacity(neighbor.len() + edge_type.len() + node.len() + 2);
    out.extend_from_slice(neighbor);
    out.push(SEP.to_string());
    out.extend_from_slice(edge_type);
    out.push(SEP.to_string());
    out.extend_from_slice(node);
    Ok(out)
}

/// The infill sentence for a fully specified path: names and edge-type names interleaved.
pub fn verbalize_path(names: &[Vec<String>], edge_types: &[Vec<String>]) -> Result<Vec<String>> {
    if names.len() != edge_types.len() + 1 || edge_types.is_empty() {
        return Err(Error::invalid("path needs l edge types and l + 1 names"));
    }
    if edge_types.len() == 1 {
        let mut out = names[0].clone();
        out.extend_from_slice(&edge_types[0]);
        out.extend_from_slice(&names[1]);
        return Ok(out);
    }
    let mut t = build_infill_template(&names[0], names.last().unwrap(), edge_types.len())?;
    // Fill right to left so earlier positions stay valid.
    let masks = t.masks();
    for m in masks.iter().rev() {
        let fill = match m.kind {
            MaskKind::Edge => &edge_types[m.index - 1],
            MaskKind::Node => &names[m.index],
        };
        t = t.fill(m.position, fill)?;
    }
    Ok(t.tokens())
}
