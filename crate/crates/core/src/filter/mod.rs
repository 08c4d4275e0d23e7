//! Post-generation design filtering: burial and enclosure of the ligand,
//! surface chemistry, confidence cutoffs and cluster-capped selection.

mod physchem;
mod surface;

pub use physchem::{
    metal_coordination_check, net_charge, sequence_of, surface_hydrophobicity, Coordination, MetalSite,
    SurfaceHydrophobicity,
};
pub use surface::{
    angular_clusters, blocked_rays, enclosure, farthest_point_sampling, fibonacci_sphere, max_exposure_angle,
    open_rays, sasa_burial, shrake_rupley, vdw_radius, Enclosure, Spheres, PROBE_RADIUS,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{centroid, distance, AtomCloud, Point};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterCriteria {
    pub min_contacts: usize,
    pub contact_radius: f64,
    pub min_burial: f64,
    pub min_enclosure: f64,
    pub max_exposure_deg: f64,
    pub max_hydrophobic_surface: f64,
    pub max_abs_charge: i32,
    pub min_iptm: f64,
    pub min_ptm: f64,
    pub min_iptm_chain: f64,
    pub sequence_cluster_cap: usize,
    pub structure_cluster_cap: usize,
    pub metal_tolerance: f64,
    pub probe_radius: f64,
    pub sasa_points: usize,
    pub n_rays: usize,
    pub max_origins: usize,
    pub exposure_linkage_deg: f64,
    pub exposed_rsa: f64,
    pub metal: Option<MetalSite>,
}

impl Default for FilterCriteria {
    fn default() -> Self {
        Self {
            min_contacts: 5,
            contact_radius: 4.0,
            min_burial: 0.5,
            min_enclosure: 0.5,
            max_exposure_deg: 65.0,
            max_hydrophobic_surface: 0.5,
            max_abs_charge: 15,
            min_iptm: 0.7,
            min_ptm: 0.7,
            min_iptm_chain: 0.5,
            sequence_cluster_cap: 2,
            structure_cluster_cap: 8,
            metal_tolerance: 0.5,
            probe_radius: PROBE_RADIUS,
            sasa_points: 960,
            n_rays: 500,
            max_origins: 15,
            exposure_linkage_deg: 15.0,
            exposed_rsa: 0.25,
            metal: None,
        }
    }
}

impl FilterCriteria {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            self.contact_radius,
            self.min_burial,
            self.min_enclosure,
            self.max_exposure_deg,
            self.max_hydrophobic_surface,
            self.min_iptm,
            self.min_ptm,
            self.min_iptm_chain,
            self.metal_tolerance,
            self.probe_radius,
            self.exposure_linkage_deg,
            self.exposed_rsa,
        ];
        if reals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("filter thresholds must be finite".into()));
        }
        if self.sasa_points == 0 || self.n_rays == 0 || self.max_origins == 0 {
            return Err(Error::Config("sasa_points, n_rays and max_origins must be positive".into()));
        }
        Ok(())
    }
}

/// Confidence values produced by an external structure predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfidenceRecord {
    pub iptm: f64,
    pub ptm: f64,
    #[serde(rename = "chain_pair_pae")]
    pub pae_chain: f64,
    #[serde(rename = "chain_pair_iptm")]
    pub iptm_chain: f64,
    #[serde(default)]
    pub source: Option<String>,
}

impl ConfidenceRecord {
    pub fn new(iptm: f64, ptm: f64, pae_chain: f64, iptm_chain: f64) -> Self {
        Self { iptm, ptm, pae_chain, iptm_chain, source: None }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(unit(self.iptm) && unit(self.ptm) && unit(self.iptm_chain)) {
            return Err(Error::Domain("iptm, ptm and chain_pair_iptm must lie in [0, 1]".into()));
        }
        if !(self.pae_chain >= 0.0 && self.pae_chain.is_finite()) {
            return Err(Error::Domain("chain_pair_pae must be non-negative".into()));
        }
        Ok(())
    }

    /// Parse `key = value` lines (`iptm`, `ptm`, `chain_pair_pae`, `chain_pair_iptm`, optional `source`).
    pub fn parse(text: &str) -> Result<Self> {
        let rec: Self = toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map_or(0, |s| text[..s.start].lines().count().max(1)),
            msg: e.message().to_string(),
        })?;
        rec.validate()?;
        Ok(rec)
    }

    pub fn score(&self) -> f64 {
        composite_score(self)
    }
}

/// `0.5·ipTM + 0.25·pTM - 0.5·PAE_chain + ipTM_chain`.
pub fn composite_score(r: &ConfidenceRecord) -> f64 {
    0.5 * r.iptm + 0.25 * r.ptm - 0.5 * r.pae_chain + r.iptm_chain
}

/// Protein heavy atoms within `radius` of any ligand heavy atom.
pub fn count_contacts(protein: &[Point], ligand: &[Point], radius: f64) -> usize {
    protein.iter().filter(|p| ligand.iter().any(|l| distance(**p, *l) <= radius)).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Checks {
    pub contacts: bool,
    pub burial: bool,
    pub enclosure: bool,
    pub exposure: bool,
    pub hydrophobic: bool,
    pub charge: bool,
    pub metal: bool,
    pub iptm: bool,
    pub ptm: bool,
    pub iptm_chain: bool,
}

impl Checks {
    pub fn all(&self) -> bool {
        self.contacts
            && self.burial
            && self.enclosure
            && self.exposure
            && self.hydrophobic
            && self.charge
            && self.metal
            && self.iptm
            && self.ptm
            && self.iptm_chain
    }

    pub fn failed(&self) -> Vec<&'static str> {
        let named = [
            ("contacts", self.contacts),
            ("burial", self.burial),
            ("enclosure", self.enclosure),
            ("exposure", self.exposure),
            ("hydrophobic", self.hydrophobic),
            ("charge", self.charge),
            ("metal", self.metal),
            ("iptm", self.iptm),
            ("ptm", self.ptm),
            ("iptm_chain", self.iptm_chain),
        ];
        named.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterReport {
    pub id: String,
    pub contacts: usize,
    pub burial: f64,
    pub enclosure: f64,
    pub exposure_deg: f64,
    pub hydrophobic_surface: f64,
    pub net_charge: i32,
    pub metal: Option<bool>,
    pub confidence: ConfidenceRecord,
    pub score: f64,
    pub checks: Checks,
    pub sequence_cluster: String,
    pub structure_cluster: String,
    pub selected: bool,
}

impl FilterReport {
    pub fn passes(&self) -> bool {
        self.checks.all()
    }
}

fn heavy(cloud: &AtomCloud, ligand: bool, skip_element: Option<&str>) -> Vec<usize> {
    (0..cloud.len())
        .filter(|&i| {
            let a = &cloud.atoms[i];
            a.is_ligand == ligand && !a.is_hydrogen() && skip_element.is_none_or(|e| !a.element.eq_ignore_ascii_case(e))
        })
        .collect()
}

/// Every per-design metric and check. The ligand is all HETATM heavy atoms
/// except the metal of a configured metal site.
pub fn evaluate_design(id: &str, cloud: &AtomCloud, record: &ConfidenceRecord, c: &FilterCriteria, exec: Execution) -> Result<FilterReport> {
    record.validate()?;
    let metal_el = c.metal.as_ref().map(|m| m.element.as_str());
    let lig_idx = heavy(cloud, true, metal_el);
    if lig_idx.is_empty() {
        return Err(Error::Missing(format!("ligand heavy atoms in design {id}")));
    }
    let prot_idx = heavy(cloud, false, None);
    let lig: Vec<Point> = lig_idx.iter().map(|&i| cloud.atoms[i].pos).collect();
    let prot: Vec<Point> = prot_idx.iter().map(|&i| cloud.atoms[i].pos).collect();
    let spheres = |idx: &[usize]| {
        let mut s = Spheres::default();
        for &i in idx {
            s.push(cloud.atoms[i].pos, vdw_radius(&cloud.atoms[i].element));
        }
        s
    };
    let (lig_s, prot_s) = (spheres(&lig_idx), spheres(&prot_idx));

    let contacts = count_contacts(&prot, &lig, c.contact_radius);
    let burial = sasa_burial(&lig_s, &prot_s, c.probe_radius, c.sasa_points, exec)?;
    let enc = enclosure(&lig, &prot_s, c.probe_radius, c.n_rays, c.max_origins)?;
    let open = open_rays(centroid(&lig, None), &prot_s, c.probe_radius, c.n_rays);
    let exposure_deg = max_exposure_angle(&open, c.exposure_linkage_deg);
    let hydro = surface_hydrophobicity(cloud, c.exposed_rsa, c.probe_radius, c.sasa_points, exec);
    let charge = net_charge(&sequence_of(cloud));
    let metal = match &c.metal {
        Some(site) => Some(metal_coordination_check(cloud, site, c.metal_tolerance)?.pass),
        None => None,
    };
    let checks = Checks {
        contacts: contacts >= c.min_contacts,
        burial: burial > c.min_burial,
        enclosure: enc.worst > c.min_enclosure,
        exposure: exposure_deg <= c.max_exposure_deg,
        hydrophobic: hydro.fraction < c.max_hydrophobic_surface,
        charge: charge.abs() <= c.max_abs_charge,
        metal: metal.unwrap_or(true),
        iptm: record.iptm >= c.min_iptm,
        ptm: record.ptm >= c.min_ptm,
        iptm_chain: record.iptm_chain >= c.min_iptm_chain,
    };
    Ok(FilterReport {
        id: id.to_string(),
        contacts,
        burial,
        enclosure: enc.worst,
        exposure_deg,
        hydrophobic_surface: hydro.fraction,
        net_charge: charge,
        metal,
        confidence: record.clone(),
        score: composite_score(record),
        checks,
        sequence_cluster: String::new(),
        structure_cluster: String::new(),
        selected: false,
    })
}

/// Design id to cluster id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClusterMap(pub BTreeMap<String, String>);

impl ClusterMap {
    /// Two columns per line, whitespace or comma separated; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            let [design, cluster] = cols[..] else {
                return Err(Error::Parse { line: n + 1, msg: format!("expected two columns, got {}", cols.len()) });
            };
            if let Some(prev) = map.insert(design.to_string(), cluster.to_string()) {
                if prev != cluster {
                    return Err(Error::Parse { line: n + 1, msg: format!("design {design} assigned to two clusters") });
                }
            }
        }
        Ok(Self(map))
    }

    pub fn get(&self, id: &str) -> Result<&str> {
        self.0.get(id).map(String::as_str).ok_or_else(|| Error::Domain(format!("design {id} missing from cluster map")))
    }
}

/// Greedy pick by descending score (ties by id) among passing designs,
/// keeping at most the capped number per sequence and per structure
/// cluster. Fills cluster ids and `selected`, returns selected ids in rank order.
pub fn select(reports: &mut [FilterReport], sequence: &ClusterMap, structure: &ClusterMap, c: &FilterCriteria) -> Result<Vec<String>> {
    let mut seen = std::collections::BTreeSet::new();
    for r in reports.iter_mut() {
        if !seen.insert(r.id.clone()) {
            return Err(Error::Domain(format!("design {} listed twice", r.id)));
        }
        r.sequence_cluster = sequence.get(&r.id)?.to_string();
        r.structure_cluster = structure.get(&r.id)?.to_string();
        r.selected = false;
    }
    let mut order: Vec<usize> = (0..reports.len()).filter(|&i| reports[i].passes()).collect();
    order.sort_by(|&a, &b| reports[b].score.total_cmp(&reports[a].score).then_with(|| reports[a].id.cmp(&reports[b].id)));
    let mut per_seq: BTreeMap<String, usize> = BTreeMap::new();
    let mut per_struct: BTreeMap<String, usize> = BTreeMap::new();
    let mut picked = Vec::new();
    for i in order {
        let r = &mut reports[i];
        let s = per_seq.entry(r.sequence_cluster.clone()).or_default();
        let t = per_struct.entry(r.structure_cluster.clone()).or_default();
        if *s < c.sequence_cluster_cap && *t < c.structure_cluster_cap {
            *s += 1;
            *t += 1;
            r.selected = true;
            picked.push(r.id.clone());
        }
    }
    Ok(picked)
}

/// Evaluate designs in parallel, then select serially.
pub fn run_filter(
    designs: &[(String, AtomCloud, ConfidenceRecord)],
    sequence: &ClusterMap,
    structure: &ClusterMap,
    c: &FilterCriteria,
    exec: Execution,
) -> Result<(Vec<FilterReport>, Vec<String>)> {
    c.validate()?;
    let mut reports = exec
        .map_slice(designs, |(id, cloud, rec)| evaluate_design(id, cloud, rec, c, Execution::Sequential))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let picked = select(&mut reports, sequence, structure, c)?;
    Ok((reports, picked))
}
