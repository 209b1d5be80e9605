//! Protection validator: replays encodings through a schedule and reports
//! every logic ion left exposed to dissipative light.

use serde::{Deserialize, Serialize};

use crate::primitives::{legal_in_mode, KindKey, Manifolds};
use crate::schedule::Schedule;
use crate::state::{Crystal, Encoding, IonRole};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exposure {
    pub time: f64,
    pub item: usize,
    pub primitive: KindKey,
    pub ion: usize,
    pub encoding: Encoding,
    pub light: Manifolds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub time: f64,
    pub item: usize,
    pub primitive: KindKey,
    pub diagnostic: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectionReport {
    pub protected: bool,
    pub exposures: Vec<Exposure>,
    /// Primitives that were illegal for the encodings at their start time.
    pub illegal: Vec<Violation>,
    /// Pairs of items that overlap while sharing an ion or a global beam.
    pub overlaps: Vec<(usize, usize)>,
}

impl ProtectionReport {
    pub fn summary(&self) -> String {
        if self.protected {
            format!(
                "protected: 0 exposures, {} illegal primitives, {} overlaps",
                self.illegal.len(),
                self.overlaps.len()
            )
        } else {
            format!(
                "UNPROTECTED: {} exposures, {} illegal primitives, {} overlaps",
                self.exposures.len(),
                self.illegal.len(),
                self.overlaps.len()
            )
        }
    }
}

pub fn validate_schedule(schedule: &Schedule, crystal: &Crystal) -> ProtectionReport {
    let mut crystal = crystal.clone();
    let mut exposures = Vec::new();
    let mut illegal = Vec::new();

    for (idx, item) in schedule.items.iter().enumerate() {
        let p = &item.primitive;
        let verdict = legal_in_mode(p, &crystal);
        if !verdict.legal {
            illegal.push(Violation {
                time: item.start,
                item: idx,
                primitive: p.kind.key(),
                diagnostic: verdict.diagnostic.unwrap_or_default(),
            });
        }
        let encodings = crystal.encodings();
        if let Some(light) = p.dissipative_light(&encodings) {
            for ion in crystal
                .ions
                .iter()
                .filter(|i| i.role == IonRole::Logic && !i.leaked && !p.touches(i.index))
            {
                if light.exposes(ion.encoding) {
                    exposures.push(Exposure {
                        time: item.start,
                        item: idx,
                        primitive: p.kind.key(),
                        ion: ion.index,
                        encoding: ion.encoding,
                        light,
                    });
                }
            }
        }
        for &t in &p.targets {
            if let Some(ion) = crystal.ions.get_mut(t) {
                ion.encoding = p.encoding_after(ion.encoding);
            }
        }
    }

    let mut overlaps = Vec::new();
    for (i, a) in schedule.items.iter().enumerate() {
        for (j, b) in schedule.items.iter().enumerate().skip(i + 1) {
            if b.start >= a.end() {
                continue;
            }
            if a.start < b.end() {
                let shared = a.primitive.targets.iter().any(|t| b.primitive.touches(*t));
                if shared || !a.primitive.addressed || !b.primitive.addressed {
                    overlaps.push((i, j));
                }
            }
        }
    }

    ProtectionReport {
        protected: exposures.is_empty(),
        exposures,
        illegal,
        overlaps,
    }
}
