//! Data-communication energy: the off-sensor serial link and, in stacked
//! designs, the inter-layer via. Both are characterized in the literature
//! as energy per byte, so the model is traffic times cost.

use serde::{Deserialize, Serialize};

use crate::ir::{LinkKind, LinkSpec};
use crate::units::Joule;

/// Byte traffic over one link per frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkTraffic {
    pub link: String,
    pub bytes: u64,
}

/// Per-link and per-kind communication energy over one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommEnergyBreakdown {
    pub links: Vec<LinkEnergy>,
    pub mipi_bytes: u64,
    pub tsv_bytes: u64,
    pub mipi_energy: Joule,
    pub tsv_energy: Joule,
    pub total: Joule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkEnergy {
    pub link: String,
    pub kind: LinkKind,
    pub bytes: u64,
    pub energy: Joule,
}

impl CommEnergyBreakdown {
    pub fn link(&self, name: &str) -> Option<&LinkEnergy> {
        self.links.iter().find(|l| l.link == name)
    }
}

/// Communication energy from per-link byte counts.
pub fn comm_frame_energy(links: &[LinkSpec], traffic: &[LinkTraffic]) -> CommEnergyBreakdown {
    let mut out = Vec::new();
    let (mut mipi_bytes, mut tsv_bytes) = (0u64, 0u64);
    let (mut mipi_energy, mut tsv_energy) = (0.0, 0.0);
    let mut total = 0.0;
    for spec in links {
        let bytes: u64 = traffic
            .iter()
            .filter(|t| t.link == spec.name)
            .map(|t| t.bytes)
            .sum();
        let energy = bytes as f64 * spec.energy_per_byte.value();
        total += energy;
        match spec.kind {
            LinkKind::Mipi => {
                mipi_bytes += bytes;
                mipi_energy += energy;
            }
            LinkKind::Utsv => {
                tsv_bytes += bytes;
                tsv_energy += energy;
            }
        }
        out.push(LinkEnergy {
            link: spec.name.clone(),
            kind: spec.kind,
            bytes,
            energy: Joule(energy),
        });
    }
    CommEnergyBreakdown {
        links: out,
        mipi_bytes,
        tsv_bytes,
        mipi_energy: Joule(mipi_energy),
        tsv_energy: Joule(tsv_energy),
        total: Joule(total),
    }
}
