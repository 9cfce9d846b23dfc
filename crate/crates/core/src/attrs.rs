use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values of one nodal attribute, one per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrValues {
    Categorical(Vec<String>),
    Numeric(Vec<f64>),
}

impl AttrValues {
    pub fn len(&self) -> usize {
        match self {
            AttrValues::Categorical(v) => v.len(),
            AttrValues::Numeric(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parses raw cells as numbers when every cell parses, otherwise keeps
    /// them as categorical labels.
    pub fn infer(cells: Vec<String>) -> Self {
        let parsed: Option<Vec<f64>> = cells.iter().map(|c| c.trim().parse::<f64>().ok()).collect();
        match parsed {
            Some(v) if !cells.is_empty() => AttrValues::Numeric(v),
            _ => AttrValues::Categorical(cells),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeAttribute {
    pub name: String,
    pub values: AttrValues,
}

impl NodeAttribute {
    /// Dense category codes; equal values share a code.
    pub fn codes(&self) -> Vec<u32> {
        let mut seen: HashMap<Vec<u8>, u32> = HashMap::new();
        let keys: Vec<Vec<u8>> = match &self.values {
            AttrValues::Categorical(v) => v.iter().map(|s| s.as_bytes().to_vec()).collect(),
            AttrValues::Numeric(v) => v.iter().map(|x| x.to_bits().to_le_bytes().to_vec()).collect(),
        };
        keys.into_iter()
            .map(|k| {
                let next = seen.len() as u32;
                *seen.entry(k).or_insert(next)
            })
            .collect()
    }

    pub fn numeric(&self) -> Result<&[f64]> {
        match &self.values {
            AttrValues::Numeric(v) => Ok(v),
            AttrValues::Categorical(_) => Err(Error::NonNumericAttribute(self.name.clone())),
        }
    }
}

/// The attribute table of a network: every attribute has exactly `n` values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeAttributes {
    n: usize,
    attrs: Vec<NodeAttribute>,
}

impl NodeAttributes {
    pub fn new(n: usize) -> Self {
        Self { n, attrs: Vec::new() }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, name: impl Into<String>, values: AttrValues) -> Result<()> {
        let name = name.into();
        if values.len() != self.n {
            return Err(Error::AttributeLength { name, got: values.len(), n: self.n });
        }
        self.attrs.retain(|a| a.name != name);
        self.attrs.push(NodeAttribute { name, values });
        Ok(())
    }

    pub fn with(mut self, name: impl Into<String>, values: AttrValues) -> Result<Self> {
        self.insert(name, values)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Result<&NodeAttribute> {
        self.attrs
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::MissingAttribute(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.attrs.iter().map(|a| a.name.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = &NodeAttribute> {
        self.attrs.iter()
    }

    /// Relabels nodes: node `i` moves to position `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let attrs = self
            .attrs
            .iter()
            .map(|a| {
                let values = match &a.values {
                    AttrValues::Categorical(v) => AttrValues::Categorical(scatter(v, perm)),
                    AttrValues::Numeric(v) => AttrValues::Numeric(scatter(v, perm)),
                };
                NodeAttribute { name: a.name.clone(), values }
            })
            .collect();
        Self { n: self.n, attrs }
    }
}

fn scatter<T: Clone>(v: &[T], perm: &[usize]) -> Vec<T> {
    let mut out = v.to_vec();
    for (i, &p) in perm.iter().enumerate() {
        out[p] = v[i].clone();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infer_and_codes() {
        let num = AttrValues::infer(vec!["1".into(), "2.5".into(), "1".into()]);
        assert_eq!(num, AttrValues::Numeric(vec![1.0, 2.5, 1.0]));
        let cat = AttrValues::infer(vec!["R".into(), "D".into(), "R".into()]);
        let attr = NodeAttribute { name: "party".into(), values: cat };
        assert_eq!(attr.codes(), vec![0, 1, 0]);
        assert!(attr.numeric().is_err());
    }

    #[test]
    fn length_is_checked() {
        let mut a = NodeAttributes::new(3);
        let err = a.insert("x", AttrValues::Numeric(vec![1.0])).unwrap_err();
        assert!(matches!(err, Error::AttributeLength { got: 1, n: 3, .. }));
        assert!(matches!(a.get("x"), Err(Error::MissingAttribute(_))));
    }
}
