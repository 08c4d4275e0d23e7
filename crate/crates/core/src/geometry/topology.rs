//! Fold topology descriptors.

use super::kabsch::{centroid, distance, Point};
use super::AtomCloud;
use crate::error::{Error, Result};

const CONTACT_DISTANCE: f64 = 8.0;
const MIN_SEPARATION: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactOrder {
    pub rco: f64,
    pub contacts: usize,
}

/// Relative contact order over Cα pairs closer than 8 Å and at least 12
/// residues apart in sequence. A chain without such contacts scores 0.
pub fn relative_contact_order(cloud: &AtomCloud) -> Result<ContactOrder> {
    let ca = cloud.ca_positions()?;
    Ok(contact_order_of(&ca))
}

pub(crate) fn contact_order_of(ca: &[Point]) -> ContactOrder {
    let l = ca.len();
    let mut contacts = 0usize;
    let mut separation = 0usize;
    for i in 0..l {
        for j in i + MIN_SEPARATION..l {
            if distance(ca[i], ca[j]) < CONTACT_DISTANCE {
                contacts += 1;
                separation += j - i;
            }
        }
    }
    let rco = if contacts == 0 {
        0.0
    } else {
        separation as f64 / (l * contacts) as f64
    };
    ContactOrder { rco, contacts }
}

/// Radius of gyration over Cα atoms, or over every atom when `all_atoms` is set.
pub fn radius_of_gyration(cloud: &AtomCloud, all_atoms: bool) -> Result<f64> {
    let ps = if all_atoms { cloud.positions() } else { cloud.ca_positions()? };
    if ps.is_empty() {
        return Err(Error::Domain("radius of gyration of an empty cloud".into()));
    }
    let c = centroid(&ps, None);
    Ok((ps.iter().map(|&p| distance(p, c).powi(2)).sum::<f64>() / ps.len() as f64).sqrt())
}
