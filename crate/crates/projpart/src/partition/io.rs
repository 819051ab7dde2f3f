//! Serialized partition form: flats as row-major lists of canonical
//! integers, with (q, n, k) at the top level. Input bases need not be
//! canonical; they are re-reduced on load.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projgeom::{Flat, Space};

use super::{Factor, Partition, ProductPart};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorFile {
    pub base: Vec<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub holes: Vec<Vec<Vec<u8>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartFile {
    pub factors: Vec<FactorFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<Vec<u8>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionFile {
    pub q: u32,
    pub n: usize,
    pub k: usize,
    pub parts: Vec<PartFile>,
}

impl Partition {
    pub fn to_file(&self) -> PartitionFile {
        PartitionFile {
            q: self.space().q(),
            n: self.space().n(),
            k: self.k(),
            parts: self
                .parts()
                .iter()
                .map(|p| PartFile {
                    factors: p
                        .factors()
                        .iter()
                        .map(|f| FactorFile {
                            base: f.base().rows_nested(),
                            holes: f.holes().iter().map(|h| h.rows_nested()).collect(),
                        })
                        .collect(),
                    witness: p.witness().map(|w| w.rows_nested()),
                })
                .collect(),
        }
    }

    pub fn from_file(file: &PartitionFile) -> Result<Partition> {
        let space = Space::new(file.q, file.n)?;
        let mut parts = Vec::with_capacity(file.parts.len());
        for pf in &file.parts {
            let factors: Vec<Factor> = pf
                .factors
                .iter()
                .map(|ff| {
                    let base = Flat::from_rows(&space, ff.base.clone())?;
                    let holes: Vec<Flat> = ff
                        .holes
                        .iter()
                        .map(|h| Flat::from_rows(&space, h.clone()))
                        .collect::<Result<_>>()?;
                    Factor::new(base, holes)
                })
                .collect::<Result<_>>()?;
            let witness = pf
                .witness
                .as_ref()
                .map(|w| Flat::from_rows(&space, w.clone()))
                .transpose()?;
            parts.push(ProductPart::new(factors, witness)?);
        }
        Partition::new(space, file.k, parts)
    }

    /// CSV summary: one row per part with its dimension pattern and size.
    pub fn summary_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["part", "pattern", "size"])
            .map_err(|e| Error::Io(e.to_string()))?;
        for (i, p) in self.parts().iter().enumerate() {
            let pattern = p
                .dimension_pattern()
                .dims()
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            w.write_record([i.to_string(), pattern, p.size().to_string()])
                .map_err(|e| Error::Io(e.to_string()))?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?)
            .map_err(|e| Error::Io(e.to_string()))
    }
}
