//! Assignment-aware motif similarity and diversity.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use super::hungarian::hungarian;
use super::kabsch::{centroid, distance, kabsch, Alignment, Point};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::residue::class_of_name;

pub const LDDT_THRESHOLDS: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
/// Complete-linkage RMSD threshold (Å) for the motif cluster ratio.
pub const CLUSTER_THRESHOLD: f64 = 2.0;
const ALTERNATIONS: usize = 3;

/// K residues given by Cα position and three-letter residue name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MotifFrame {
    pub ca: Vec<Point>,
    pub residue_types: Vec<String>,
}

impl MotifFrame {
    pub fn new(ca: Vec<Point>, residue_types: Vec<String>) -> Result<Self> {
        if ca.len() != residue_types.len() {
            return Err(Error::Shape("motif positions and residue types differ in length".into()));
        }
        Ok(Self { ca, residue_types })
    }

    /// Frame with every residue typed as glycine, for purely geometric use.
    pub fn from_points(ca: Vec<Point>) -> Self {
        let n = ca.len();
        Self { ca, residue_types: vec!["GLY".into(); n] }
    }

    pub fn len(&self) -> usize {
        self.ca.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ca.is_empty()
    }

    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            ca: order.iter().map(|&i| self.ca[i]).collect(),
            residue_types: order.iter().map(|&i| self.residue_types[i].clone()).collect(),
        }
    }

    fn distances(&self) -> Vec<Vec<f64>> {
        self.ca.iter().map(|&p| self.ca.iter().map(|&q| distance(p, q)).collect()).collect()
    }
}

/// 0 for identical residue types, 0.5 for different types of one class, 1 otherwise.
pub fn chem_distance(a: &str, b: &str) -> f64 {
    if a == b {
        0.0
    } else if class_of_name(a) == class_of_name(b) {
        0.5
    } else {
        1.0
    }
}

/// Terminal state of the assignment/superposition alternation.
/// `assignment[i]` is the residue of B matched to residue i of A and
/// `alignment` maps B onto A.
#[derive(Debug, Clone, PartialEq)]
pub struct MotifAlignment {
    pub assignment: Vec<usize>,
    pub alignment: Alignment,
    pub value: f64,
}

fn check_pair(a: &MotifFrame, b: &MotifFrame, min_k: usize) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("motif sizes differ: {} vs {}", a.len(), b.len())));
    }
    if a.len() < min_k {
        return Err(Error::Geometry(format!("motif needs at least {min_k} residues")));
    }
    Ok(())
}

fn centred(ps: &[Point]) -> Vec<Point> {
    let c = centroid(ps, None);
    ps.iter().map(|p| [p[0] - c[0], p[1] - c[1], p[2] - c[2]]).collect()
}

struct Alternation<'a> {
    a: Vec<Point>,
    b: Vec<Point>,
    ta: &'a [String],
    tb: &'a [String],
    chem: Option<(f64, f64)>,
}

impl Alternation<'_> {
    fn superpose(&self, assignment: &[usize]) -> Result<Alignment> {
        let matched: Vec<Point> = assignment.iter().map(|&j| self.b[j]).collect();
        kabsch(&matched, &self.a, None)
    }

    fn assign(&self, align: &Alignment) -> Result<Vec<usize>> {
        let moved = align.apply_all(&self.b);
        let cost: Vec<Vec<f64>> = (0..self.a.len())
            .map(|i| {
                (0..self.b.len())
                    .map(|j| {
                        let d2 = distance(self.a[i], moved[j]).powi(2);
                        match self.chem {
                            Some((alpha, beta)) => alpha * d2 + beta * chem_distance(&self.ta[i], &self.tb[j]),
                            None => d2,
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(hungarian(&cost)?.0)
    }

    fn report(&self, assignment: &[usize], align: &Alignment) -> f64 {
        match self.chem {
            None => align.rmsd,
            Some((alpha, beta)) => {
                let total: f64 = assignment
                    .iter()
                    .enumerate()
                    .map(|(i, &j)| {
                        alpha * distance(self.a[i], align.apply(self.b[j])) + beta * chem_distance(&self.ta[i], &self.tb[j])
                    })
                    .sum();
                total / assignment.len() as f64
            }
        }
    }

    fn run_from(&self, mut align: Alignment) -> Result<MotifAlignment> {
        let mut assignment = Vec::new();
        for _ in 0..ALTERNATIONS {
            assignment = self.assign(&align)?;
            align = self.superpose(&assignment)?;
        }
        let value = self.report(&assignment, &align);
        Ok(MotifAlignment { assignment, alignment: align, value })
    }

    fn run(&self) -> Result<MotifAlignment> {
        let mut best = self.run_from(Alignment::identity())?;
        let (ea, eb) = (principal_axes(&self.a), principal_axes(&self.b));
        for signs in [[1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0], [1.0, 1.0, 1.0]] {
            let seed = Alignment {
                rotation: ea * Matrix3::from_diagonal(&Vector3::from(signs)) * eb.transpose(),
                ..Alignment::identity()
            };
            let run = self.run_from(seed)?;
            if run.value < best.value {
                best = run;
            }
        }
        Ok(best)
    }
}

/// Proper frame of principal axes, largest variance first.
fn principal_axes(ps: &[Point]) -> Matrix3<f64> {
    let mut cov = Matrix3::zeros();
    for p in ps {
        let v = Vector3::from(*p);
        cov += v * v.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut e = Matrix3::from_columns(&order.map(|k| eig.eigenvectors.column(k).into_owned()));
    if e.determinant() < 0.0 {
        e.set_column(2, &(-e.column(2)));
    }
    e
}

fn alternate(a: &MotifFrame, b: &MotifFrame, chem: Option<(f64, f64)>) -> Result<MotifAlignment> {
    check_pair(a, b, 3)?;
    let run = Alternation {
        a: centred(&a.ca),
        b: centred(&b.ca),
        ta: &a.residue_types,
        tb: &b.residue_types,
        chem,
    };
    let mut out = run.run()?;
    // Re-express the transform in the original (uncentred) frames.
    let ca = Vector3::from(centroid(&a.ca, None));
    let cb = Vector3::from(centroid(&b.ca, None));
    out.alignment.translation = ca + out.alignment.translation - out.alignment.rotation * cb;
    Ok(out)
}

/// Cα RMSD after alternating optimal assignment and superposition.
/// The first run starts from the centred, unrotated frames; further runs
/// start from the four proper principal-axis superpositions, and the
/// lowest terminal value is kept.
pub fn motif_rmsd(a: &MotifFrame, b: &MotifFrame) -> Result<MotifAlignment> {
    alternate(a, b, None)
}

/// Chemistry-aware distance: assignment on `alpha·d² + beta·D_chem`, reported
/// as the mean of `alpha·d + beta·D_chem` over matched residues.
pub fn chem_cost(a: &MotifFrame, b: &MotifFrame, alpha: f64, beta: f64) -> Result<MotifAlignment> {
    alternate(a, b, Some((alpha, beta)))
}

/// Fraction of (pair, threshold) combinations whose internal distances agree.
pub fn lddt_with_assignment(a: &MotifFrame, b: &MotifFrame, assignment: &[usize]) -> Result<f64> {
    check_pair(a, b, 2)?;
    if assignment.len() != a.len() {
        return Err(Error::Shape("assignment length differs from motif size".into()));
    }
    let k = a.len();
    let mut pass = 0usize;
    let mut total = 0usize;
    for i in 0..k {
        for j in i + 1..k {
            let da = distance(a.ca[i], a.ca[j]);
            let db = distance(b.ca[assignment[i]], b.ca[assignment[j]]);
            for thr in LDDT_THRESHOLDS {
                total += 1;
                if (da - db).abs() < thr {
                    pass += 1;
                }
            }
        }
    }
    Ok(pass as f64 / total as f64)
}

/// lDDT under the spatial assignment of [`motif_rmsd`]. Two-residue frames
/// have a single pair, so their order does not matter.
pub fn lddt(a: &MotifFrame, b: &MotifFrame) -> Result<f64> {
    check_pair(a, b, 2)?;
    let assignment = if a.len() >= 3 {
        motif_rmsd(a, b)?.assignment
    } else {
        (0..a.len()).collect()
    };
    lddt_with_assignment(a, b, &assignment)
}

fn frobenius_under(da: &[Vec<f64>], db: &[Vec<f64>], perm: &[usize]) -> f64 {
    let k = da.len();
    let mut ss = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            ss += (da[i][j] - db[perm[i]][perm[j]]).powi(2);
        }
    }
    (ss / (k * (k - 1) / 2) as f64).sqrt()
}

/// RMS difference of internal Cα distance matrices under a residue matching
/// found by repeated assignment on row costs. Returns the matching too.
pub fn frobenius_distance(a: &MotifFrame, b: &MotifFrame) -> Result<(f64, Vec<usize>)> {
    check_pair(a, b, 2)?;
    let k = a.len();
    let (da, db) = (a.distances(), b.distances());
    let sorted = |d: &[Vec<f64>]| -> Vec<Vec<f64>> {
        d.iter()
            .map(|r| {
                let mut r = r.clone();
                r.sort_by(f64::total_cmp);
                r
            })
            .collect()
    };
    let (sa, sb) = (sorted(&da), sorted(&db));
    let init: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| sa[i].iter().zip(&sb[j]).map(|(x, y)| (x - y).powi(2)).sum()).collect())
        .collect();
    let mut perm = hungarian(&init)?.0;
    let mut best = (frobenius_under(&da, &db, &perm), perm.clone());
    for _ in 0..ALTERNATIONS {
        let cost: Vec<Vec<f64>> = (0..k)
            .map(|i| (0..k).map(|j| (0..k).map(|m| (da[i][m] - db[j][perm[m]]).powi(2)).sum()).collect())
            .collect();
        perm = hungarian(&cost)?.0;
        let d = frobenius_under(&da, &db, &perm);
        if d < best.0 {
            best = (d, perm.clone());
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MotifMetric {
    #[default]
    Rmsd,
    ChemCost,
    /// `1 − lDDT`.
    LddtDiversity,
    Frobenius,
}

impl MotifMetric {
    pub fn eval(self, a: &MotifFrame, b: &MotifFrame) -> Result<f64> {
        match self {
            MotifMetric::Rmsd => Ok(motif_rmsd(a, b)?.value),
            MotifMetric::ChemCost => Ok(chem_cost(a, b, 1.0, 5.0)?.value),
            MotifMetric::LddtDiversity => Ok(1.0 - lddt(a, b)?),
            MotifMetric::Frobenius => Ok(frobenius_distance(a, b)?.0),
        }
    }
}

/// Symmetric matrix of metric values over all motif pairs.
pub fn pairwise(motifs: &[MotifFrame], metric: MotifMetric, exec: Execution) -> Result<Vec<Vec<f64>>> {
    let n = motifs.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let values = exec.map(pairs.len(), |p| metric.eval(&motifs[pairs[p].0], &motifs[pairs[p].1]));
    let mut d = vec![vec![0.0; n]; n];
    for (&(i, j), v) in pairs.iter().zip(values) {
        let v = v?;
        d[i][j] = v;
        d[j][i] = v;
    }
    Ok(d)
}

pub fn nearest_neighbours(dist: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = dist.len();
    if n < 2 {
        return Err(Error::Domain("nearest-neighbour diversity needs at least two items".into()));
    }
    Ok((0..n)
        .map(|i| (0..n).filter(|&j| j != i).map(|j| dist[i][j]).fold(f64::INFINITY, f64::min))
        .collect())
}

pub fn nn_diversity(motifs: &[MotifFrame], metric: MotifMetric, exec: Execution) -> Result<Vec<f64>> {
    if motifs.len() < 2 {
        return Err(Error::Domain("nearest-neighbour diversity needs at least two motifs".into()));
    }
    nearest_neighbours(&pairwise(motifs, metric, exec)?)
}

/// Complete-linkage agglomeration: clusters merge while the largest
/// cross-cluster distance stays within `threshold`. Returns a label per
/// item, labels numbered by first appearance.
pub fn complete_linkage(dist: &[Vec<f64>], threshold: f64) -> Vec<usize> {
    let n = dist.len();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let link = clusters[a]
                    .iter()
                    .flat_map(|&i| clusters[b].iter().map(move |&j| dist[i][j]))
                    .fold(0.0, f64::max);
                if link <= threshold && best.is_none_or(|(d, _, _)| link < d) {
                    best = Some((link, a, b));
                }
            }
        }
        let Some((_, a, b)) = best else { break };
        let merged = clusters.remove(b);
        clusters[a].extend(merged);
    }
    let mut labels = vec![0; n];
    clusters.sort_by_key(|c| *c.iter().min().expect("non-empty cluster"));
    for (k, c) in clusters.iter().enumerate() {
        for &i in c {
            labels[i] = k;
        }
    }
    labels
}

/// Number of complete-linkage RMSD clusters divided by the number of motifs.
pub fn cluster_ratio(motifs: &[MotifFrame], threshold: f64, exec: Execution) -> Result<f64> {
    if motifs.is_empty() {
        return Err(Error::Domain("cluster ratio of an empty set".into()));
    }
    let d = pairwise(motifs, MotifMetric::Rmsd, exec)?;
    let labels = complete_linkage(&d, threshold);
    let n_clusters = labels.iter().max().map_or(0, |m| m + 1);
    Ok(n_clusters as f64 / motifs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::hungarian::tests::permutations;
    use crate::sampler::random_rotation;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn random_frame(rng: &mut impl Rng, k: usize) -> MotifFrame {
        const NAMES: [&str; 6] = ["ALA", "LEU", "SER", "LYS", "ASP", "GLY"];
        MotifFrame {
            ca: (0..k).map(|_| std::array::from_fn(|_| rng.random_range(-6.0..6.0))).collect(),
            residue_types: (0..k).map(|_| NAMES[rng.random_range(0..NAMES.len())].to_string()).collect(),
        }
    }

    fn transformed(f: &MotifFrame, rng: &mut impl Rng) -> MotifFrame {
        let r = random_rotation(rng);
        let t = nalgebra::Vector3::new(5.0, -3.0, 11.0);
        MotifFrame {
            ca: f
                .ca
                .iter()
                .map(|p| {
                    let v = r * nalgebra::Vector3::from(*p) + t;
                    [v[0], v[1], v[2]]
                })
                .collect(),
            residue_types: f.residue_types.clone(),
        }
    }

    // Exhaustive oracle: best value over every assignment, each superposed exactly.
    fn brute(a: &MotifFrame, b: &MotifFrame, chem: Option<(f64, f64)>) -> f64 {
        let (ca, cb) = (centred(&a.ca), centred(&b.ca));
        permutations(a.len())
            .iter()
            .map(|p| {
                let matched: Vec<Point> = p.iter().map(|&j| cb[j]).collect();
                let al = kabsch(&matched, &ca, None).unwrap();
                match chem {
                    None => al.rmsd,
                    Some((alpha, beta)) => {
                        p.iter()
                            .enumerate()
                            .map(|(i, &j)| {
                                alpha * distance(ca[i], al.apply(cb[j]))
                                    + beta * chem_distance(&a.residue_types[i], &b.residue_types[j])
                            })
                            .sum::<f64>()
                            / p.len() as f64
                    }
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn frobenius_brute(a: &MotifFrame, b: &MotifFrame) -> f64 {
        let (da, db) = (a.distances(), b.distances());
        permutations(a.len()).iter().map(|p| frobenius_under(&da, &db, p)).fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn rigid_copies_and_relabelling_give_zero() {
        let mut rng = crate::rng::stream(21, 0);
        for _ in 0..50 {
            let a = random_frame(&mut rng, 6);
            let b = transformed(&a, &mut rng);
            let m = motif_rmsd(&a, &b).unwrap();
            assert!(m.value <= 1e-9);
            let mut order: Vec<usize> = (0..6).collect();
            order.shuffle(&mut rng);
            let p = a.permuted(&order);
            let m = motif_rmsd(&a, &p).unwrap();
            assert!(m.value <= 1e-9);
            for (i, &j) in m.assignment.iter().enumerate() {
                assert_eq!(order[j], i);
            }
        }
    }

    #[test]
    fn transform_is_reported_in_input_frames() {
        let mut rng = crate::rng::stream(22, 0);
        let a = random_frame(&mut rng, 5);
        let b = transformed(&a, &mut rng);
        let m = motif_rmsd(&a, &b).unwrap();
        for (i, &j) in m.assignment.iter().enumerate() {
            assert!(distance(m.alignment.apply(b.ca[j]), a.ca[i]) < 1e-9);
        }
    }

    #[test]
    fn four_residue_frames_match_exhaustive_oracle() {
        let a = MotifFrame::from_points(vec![[0.0, 0.0, 0.0], [3.8, 0.0, 0.0], [3.8, 5.0, 0.0], [0.0, 2.0, 4.0]]);
        let b = MotifFrame::from_points(vec![[0.3, 2.2, 4.1], [4.0, -0.2, 0.1], [-0.1, 0.2, 0.0], [3.5, 5.4, 0.3]]);
        let got = motif_rmsd(&a, &b).unwrap().value;
        assert!((got - brute(&a, &b, None)).abs() < 1e-9);
        let c = frobenius_distance(&a, &b).unwrap().0;
        assert!((c - frobenius_brute(&a, &b)).abs() < 1e-9);
    }

    #[test]
    fn chem_cost_cases() {
        let mut rng = crate::rng::stream(23, 0);
        let a = random_frame(&mut rng, 5);
        assert!(chem_cost(&a, &a, 1.0, 5.0).unwrap().value < 1e-9);
        let swapped = MotifFrame {
            ca: a.ca.clone(),
            residue_types: vec!["ILE".into(), "VAL".into(), "ILE".into(), "VAL".into(), "ILE".into()],
        };
        let same_class = MotifFrame {
            ca: a.ca.clone(),
            residue_types: vec!["LEU".into(), "ALA".into(), "MET".into(), "PHE".into(), "TRP".into()],
        };
        assert!((chem_cost(&swapped, &same_class, 1.0, 5.0).unwrap().value - 2.5).abs() < 1e-9);

        let p = MotifFrame::new(
            vec![[0.0, 0.0, 0.0], [4.0, 0.0, 0.0], [1.0, 3.0, 0.0]],
            vec!["LYS".into(), "ASP".into(), "SER".into()],
        )
        .unwrap();
        let q = MotifFrame::new(
            vec![[0.2, 0.1, 0.0], [1.1, 2.7, 0.3], [3.8, 0.2, -0.2]],
            vec!["ARG".into(), "THR".into(), "GLU".into()],
        )
        .unwrap();
        let got = chem_cost(&p, &q, 1.0, 5.0).unwrap().value;
        assert!((got - brute(&p, &q, Some((1.0, 5.0)))).abs() < 1e-9);
    }

    #[test]
    fn lddt_counting() {
        let tri = |s: f64| MotifFrame::from_points(vec![[0.0; 3], [s, 0.0, 0.0], [s / 2.0, s * 3f64.sqrt() / 2.0, 0.0]]);
        assert_eq!(lddt(&tri(3.0), &tri(3.0)).unwrap(), 1.0);
        assert!((lddt(&tri(3.0), &tri(4.5)).unwrap() - 0.5).abs() < 1e-12);
        let pair = |s: f64| MotifFrame::from_points(vec![[0.0; 3], [s, 0.0, 0.0]]);
        assert!((lddt(&pair(3.0), &pair(4.5)).unwrap() - 0.5).abs() < 1e-12);
        assert!(lddt(&pair(3.0).permuted(&[0]), &pair(3.0).permuted(&[0])).is_err());

        let mut rng = crate::rng::stream(24, 0);
        for _ in 0..20 {
            let a = random_frame(&mut rng, 7);
            let mut b = a.clone();
            for p in &mut b.ca {
                for v in p.iter_mut() {
                    *v += rng.random_range(-1.5..1.5);
                }
            }
            let m = motif_rmsd(&a, &b).unwrap();
            let got = lddt_with_assignment(&a, &b, &m.assignment).unwrap();
            let mut hits = 0;
            let mut n = 0;
            for thr in LDDT_THRESHOLDS {
                for i in 0..7 {
                    for j in 0..7 {
                        if i < j {
                            n += 1;
                            let da = distance(a.ca[i], a.ca[j]);
                            let db = distance(b.ca[m.assignment[i]], b.ca[m.assignment[j]]);
                            hits += usize::from((da - db).abs() < thr);
                        }
                    }
                }
            }
            assert_eq!(got, hits as f64 / n as f64);
        }
    }

    #[test]
    fn frobenius_cases() {
        let mut rng = crate::rng::stream(25, 0);
        let a = random_frame(&mut rng, 5);
        assert!(frobenius_distance(&a, &a).unwrap().0 < 1e-12);
        let pair = MotifFrame::from_points(vec![[0.0; 3], [2.0, 1.0, 2.0]]);
        let scaled = MotifFrame::from_points(vec![[0.0; 3], [5.0, 2.5, 5.0]]);
        assert!((frobenius_distance(&pair, &scaled).unwrap().0 - 4.5).abs() < 1e-12);
    }

    #[test]
    fn neighbours_and_clusters() {
        let table = vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 2.0], vec![3.0, 2.0, 0.0]];
        assert_eq!(nearest_neighbours(&table).unwrap(), vec![1.0, 1.0, 2.0]);
        assert!(nearest_neighbours(&table[..1]).is_err());

        let mut rng = crate::rng::stream(26, 0);
        let a = random_frame(&mut rng, 4);
        let copies = vec![a.clone(), transformed(&a, &mut rng), a.clone()];
        let nn = nn_diversity(&copies, MotifMetric::Rmsd, Execution::Sequential).unwrap();
        assert!(nn.iter().all(|&v| v < 1e-9));
        assert!(nn_diversity(&copies[..1], MotifMetric::Rmsd, Execution::Sequential).is_err());
        assert!((cluster_ratio(&copies, 2.0, Execution::Parallel).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(cluster_ratio(&[], 2.0, Execution::Parallel).is_err());
    }

    #[test]
    fn two_pairs_and_a_singleton() {
        // Triangles of different size are far apart after superposition;
        // each pair is a copy plus a small perturbation.
        let tri = |s: f64, e: f64| {
            MotifFrame::from_points(vec![[0.0; 3], [s, e, 0.0], [0.3 * s, 0.8 * s, e], [0.5 * s, 0.2 * s, 0.9 * s]])
        };
        let motifs = vec![tri(4.0, 0.0), tri(12.0, 0.0), tri(4.0, 0.3), tri(24.0, 0.0), tri(12.0, 0.3)];
        let d = pairwise(&motifs, MotifMetric::Rmsd, Execution::Sequential).unwrap();
        assert!(d[0][2] < 2.0 && d[1][4] < 2.0);
        for (i, j) in [(0, 1), (0, 3), (0, 4), (1, 2), (1, 3), (2, 3), (2, 4), (3, 4)] {
            assert!(d[i][j] > 2.0, "{i} {j} {}", d[i][j]);
        }
        assert_eq!(complete_linkage(&d, 2.0), vec![0, 1, 0, 2, 1]);
        assert!((cluster_ratio(&motifs, 2.0, Execution::Sequential).unwrap() - 0.6).abs() < 1e-12);
        let far = vec![vec![0.0, 3.0], vec![3.0, 0.0]];
        assert_eq!(complete_linkage(&far, 2.0), vec![0, 1]);
    }

    #[test]
    fn complete_linkage_uses_the_farthest_pair() {
        // A chain 0-1-2 with unit links but a 2.5 span never becomes one cluster.
        let d = vec![vec![0.0, 1.0, 2.5], vec![1.0, 0.0, 1.0], vec![2.5, 1.0, 0.0]];
        let labels = complete_linkage(&d, 2.0);
        assert_eq!(labels.iter().max(), Some(&1));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn metric_invariants(seed in any::<u64>(), k in 3usize..6) {
            let mut rng = crate::rng::stream(seed, 0);
            let a = random_frame(&mut rng, k);
            let b = random_frame(&mut rng, k);
            let ab = motif_rmsd(&a, &b).unwrap().value;
            let ba = motif_rmsd(&b, &a).unwrap().value;
            prop_assert!((ab - ba).abs() <= 1e-9);
            prop_assert!(motif_rmsd(&a, &a).unwrap().value <= 1e-9);
            prop_assert!(ab >= brute(&a, &b, None) - 1e-9);
            prop_assert!(chem_cost(&a, &b, 1.0, 5.0).unwrap().value >= brute(&a, &b, Some((1.0, 5.0))) - 1e-9);
            prop_assert!(frobenius_distance(&a, &b).unwrap().0 >= frobenius_brute(&a, &b) - 1e-9);

            let mut order: Vec<usize> = (0..k).collect();
            order.shuffle(&mut rng);
            let pb = b.permuted(&order);
            prop_assert!((motif_rmsd(&a, &pb).unwrap().value - ab).abs() <= 1e-9);
            let l = lddt(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&l));
        }
    }
}
