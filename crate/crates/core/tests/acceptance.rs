//! End-to-end acceptance run: one PASS/FAIL line per criterion.

mod common;

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::Vector3;
use rand::Rng;

use codesign::denoise::{CoupledToyModel, Denoiser, DiscreteTable, GaussianMixtureModel};
use codesign::exec::Execution;
use codesign::filter::{composite_score, enclosure, ConfidenceRecord, FilterCriteria, Spheres};
use codesign::fkc::{run_fkc_mm, run_fkc_sg, tilted_transition, BetaSchedule, FkcMmConfig, FkcSgConfig, RewardPoint};
use codesign::geometry::{
    chem_cost, chem_distance, cluster_ratio, distance, frobenius_distance, hungarian, kabsch, lddt, motif_rmsd, MotifFrame, Point,
};
use codesign::losses::{masked_elbo_weight, smooth_lddt_loss, weighted_mse, AtomFlags, LossWeights};
use codesign::residue::AminoAcid;
use codesign::rewards::{contact_reward, reward_gradient, ContactRewardSpec, Reward, ResidueClassMasks, TokenLinearReward};
use codesign::rng::stream;
use codesign::sampler::{random_rotation, sample_chains, Integrator, SamplerConfig, SequenceKernel, Trajectory};
use codesign::schedule::{MaskSchedule, NoiseSchedule, TimeCoupling};
use codesign::state::{ContinuousState, SequenceState, Vocabulary};

type Outcome = Result<String, String>;

/// Criteria whose literal bound cannot be met; printed but not fatal.
const UNATTAINABLE: [(usize, &str); 1] = [(
    8,
    "the perfect-recovery smooth-lDDT loss is 1 - mean(sigmoid(0.5), sigmoid(1), sigmoid(2), sigmoid(4)) = 0.1959178055..., 2.2e-6 from the quoted 0.195920",
)];

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn coupling(n_steps: usize, sigma_max: f64) -> TimeCoupling {
    TimeCoupling::new(NoiseSchedule { n_steps, sigma_max, ..Default::default() }, MaskSchedule::linear()).unwrap()
}

fn exact(kernel: SequenceKernel, integrator: Integrator) -> SamplerConfig {
    SamplerConfig { kernel, integrator, ..SamplerConfig::exact() }
}

fn tv(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn histogram(table: &DiscreteTable, chains: &[Trajectory]) -> Vec<f64> {
    let mut h = vec![0.0; table.probs().len()];
    for c in chains {
        h[table.index_of(&c.final_state.seq.tokens)] += 1.0 / chains.len() as f64;
    }
    h
}

fn random_table(seed: u64, vocab: usize, len: usize) -> DiscreteTable {
    let mut rng = stream(seed, 0);
    let raw: Vec<f64> = (0..vocab.pow(len as u32)).map(|_| rng.random_range(0.05..1.0f64).powi(2)).collect();
    let z: f64 = raw.iter().sum();
    DiscreteTable::new(vocab, len, raw.iter().map(|p| p / z).collect()).unwrap()
}

fn discrete_table() -> Outcome {
    let table = random_table(101, 4, 4);
    let start = Instant::now();
    let chains = sample_chains(&table, &coupling(200, 160.0), &exact(SequenceKernel::Standard, Integrator::ChurnEuler), 200_000, 1, Execution::Parallel)
        .map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let d = tv(&histogram(&table, &chains), table.probs());
    check(d <= 0.03 && secs <= 60.0, format!("TV {d:.4} over 256 states from 2e5 chains in {secs:.1} s"))
}

fn path_planning() -> Outcome {
    let table = random_table(101, 4, 4);
    let c = coupling(200, 160.0);
    let chains = sample_chains(&table, &c, &exact(SequenceKernel::PathPlanning, Integrator::ChurnEuler), 200_000, 2, Execution::Parallel)
        .map_err(|e| e.to_string())?;
    let d = tv(&histogram(&table, &chains), table.probs());
    let planned: Vec<usize> = (1..=200).map(|i| 4 - codesign::sampler::unmask_count(c.unmasked_fraction(i), 4)).collect();
    let exact_counts = chains.iter().all(|t| t.masked_trace == planned);
    check(d <= 0.03 && exact_counts, format!("TV {d:.4}; mask count on schedule at every step: {exact_counts}"))
}

fn gaussian_mixture() -> Outcome {
    let (w, mu, s0) = ([0.3, 0.7], [-2.0, 2.0], 0.5);
    let m = GaussianMixtureModel::new(w.to_vec(), vec![vec![mu[0]], vec![mu[1]]], s0).unwrap();
    let cfg = SamplerConfig { noise_scale: 0.1, step_scale: 1.0, ..exact(SequenceKernel::Standard, Integrator::ChurnEuler) };
    let n = 100_000;
    let chains = sample_chains(&m, &coupling(200, 160.0), &cfg, n, 0, Execution::Parallel).map_err(|e| e.to_string())?;
    let mut xs: Vec<f64> = chains.iter().map(|t| t.final_state.structure.coords[0]).collect();
    xs.sort_by(f64::total_cmp);
    // Analytic CDF by Simpson integration of the mixture density on a fine
    // grid; W1 is the integral of |F_n - F|.
    let pdf = |x: f64| (0..2).map(|k| w[k] * (-(x - mu[k]).powi(2) / (2.0 * s0 * s0)).exp() / (s0 * (2.0 * PI).sqrt())).sum::<f64>();
    let (lo, h, cells) = (-8.0, 1e-4, 160_000);
    let (mut cdf, mut w1, mut j) = (0.0, 0.0, 0);
    for i in 0..cells {
        let a = lo + i as f64 * h;
        let next = cdf + h / 6.0 * (pdf(a) + 4.0 * pdf(a + h / 2.0) + pdf(a + h));
        while j < n && xs[j] <= a + h / 2.0 {
            j += 1;
        }
        w1 += (j as f64 / n as f64 - 0.5 * (cdf + next)).abs() * h;
        cdf = next;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    let want_mean = w[0] * mu[0] + w[1] * mu[1];
    let want_var = w[0] * mu[0] * mu[0] + w[1] * mu[1] * mu[1] + s0 * s0 - want_mean * want_mean;
    let ok = w1 <= 0.05 * s0 && ((mean - want_mean) / want_mean).abs() <= 0.02 && ((var - want_var) / want_var).abs() <= 0.02;
    check(ok, format!("W1 {w1:.4} (bound {:.3}); mean {mean:.4} vs {want_mean:.4}; variance {var:.4} vs {want_var:.4}", 0.05 * s0))
}

fn coupled_toy() -> CoupledToyModel {
    CoupledToyModel {
        vocab: 3,
        length: 3,
        position: 0,
        sigma0: 0.5,
        weights: vec![0.4, 0.6],
        means: vec![vec![-1.0], vec![2.0]],
        tables: vec![
            vec![vec![1.0, 0.0, 0.0], vec![0.7, 0.2, 0.1], vec![0.1, 0.1, 0.8]],
            vec![vec![0.0, 1.0, 0.0], vec![0.1, 0.3, 0.6], vec![0.5, 0.25, 0.25]],
        ],
    }
}

fn joint_sampling() -> Outcome {
    let m = coupled_toy();
    let table = m.token_table().unwrap();
    let chains = sample_chains(&m, &coupling(200, 160.0), &exact(SequenceKernel::Standard, Integrator::ChurnEuler), 50_000, 4, Execution::Parallel)
        .map_err(|e| e.to_string())?;
    let d = tv(&histogram(&table, &chains), table.probs());
    let mut sums = [0.0; 2];
    let mut counts = [0.0; 2];
    for t in &chains {
        let c = t.final_state.seq.tokens[0];
        sums[c] += t.final_state.structure.coords[0];
        counts[c] += 1.0;
    }
    let means = [sums[0] / counts[0], sums[1] / counts[1]];
    let rel = |k: usize| ((means[k] - m.means[k][0]) / m.means[k][0]).abs();
    check(
        d <= 0.03 && rel(0) <= 0.02 && rel(1) <= 0.02,
        format!("token TV {d:.4}; E[x|c=0] {:.4} vs -1, E[x|c=1] {:.4} vs 2", means[0], means[1]),
    )
}

fn specificity() -> Outcome {
    let on = GaussianMixtureModel::new(vec![1.0], vec![vec![0.0]], 1.0).unwrap();
    let off = GaussianMixtureModel::new(vec![1.0], vec![vec![2.0]], 1.0).unwrap();
    let c = coupling(200, 160.0);
    let cfg = exact(SequenceKernel::Standard, Integrator::ChurnEuler);
    let sg = FkcSgConfig { beta: -0.5, tau_stop: 0.6, ..FkcSgConfig::default() };
    // q_on^(1-b) q_off^b for unit Gaussians: precision 1, mean b * 2.
    let (want_mean, want_var) = (sg.beta * 2.0, 1.0);
    let ensembles = 400;
    let (mut m1, mut m2) = (0.0, 0.0);
    for e in 0..ensembles {
        let run = run_fkc_sg(&on, &off, &c, &cfg, &sg, 64, e, Execution::Parallel).map_err(|e| e.to_string())?;
        let w = run.ensemble.weights().map_err(|e| e.to_string())?;
        for (p, w) in run.ensemble.particles.iter().zip(w) {
            let x = p.state.structure.coords[0];
            m1 += w * x / ensembles as f64;
            m2 += w * x * x / ensembles as f64;
        }
    }
    let var = m2 - m1 * m1;
    let same = run_fkc_sg(&on, &on, &c, &cfg, &sg, 64, 9, Execution::Parallel).map_err(|e| e.to_string())?;
    let zero = same.trace.increments.iter().flatten().all(|&d| d == 0.0);
    check(
        (m1 - want_mean).abs() <= 0.05 && ((var - want_var) / want_var).abs() <= 0.05 && zero,
        format!("mean {m1:.4} vs {want_mean}; variance {var:.4} vs {want_var}; identical models give zero increments: {zero}"),
    )
}

fn reward_tilting() -> Outcome {
    let m = coupled_toy();
    let reward = TokenLinearReward { position: 0, token: 1, bonus: 1.0, weights: vec![0.1] };
    let table = m.token_table().unwrap();
    // p(tokens) e^{1{c=1}} E[e^{0.1 x} | c]
    let tilt: Vec<f64> = (0..table.probs().len())
        .map(|i| {
            let c = table.tokens_of(i)[0];
            if c > 1 {
                return 0.0;
            }
            let bonus = if c == 1 { 1.0 } else { 0.0 };
            table.probs()[i] * (bonus + 0.1 * m.means[c][0] + 0.5 * 0.01 * m.sigma0 * m.sigma0).exp()
        })
        .collect();
    let z: f64 = tilt.iter().sum();
    let target: Vec<f64> = tilt.iter().map(|p| p / z).collect();

    let c = coupling(200, 10.0);
    let cfg = exact(SequenceKernel::Standard, Integrator::ReverseSde);
    let mm = FkcMmConfig { beta: BetaSchedule::Constant { beta: 1.0 }, reward_at: RewardPoint::Noisy, ..FkcMmConfig::default() };
    let ensembles = 1000;
    let mut h = vec![0.0; target.len()];
    for e in 0..ensembles {
        let run = run_fkc_mm(&m, &reward, &c, &cfg, &mm, 64, e, Execution::Parallel).map_err(|e| e.to_string())?;
        let w = run.ensemble.weights().map_err(|e| e.to_string())?;
        for (p, w) in run.ensemble.particles.iter().zip(w) {
            h[table.index_of(&p.state.seq.tokens)] += w / ensembles as f64;
        }
    }
    let d = tv(&h, &target);

    let (exact_const, exact_ramp) = (two_state_fke(BetaSchedule::Constant { beta: 1.0 })?, two_state_fke(BetaSchedule::LinearRamp { beta: 1.0 })?);
    check(
        d <= 0.05 && exact_const <= 1e-3 && exact_ramp <= 1e-3,
        format!("particle TV {d:.4}; two-state weighted propagation TV {exact_const:.1e} (constant), {exact_ramp:.1e} (ramp)"),
    )
}

/// Propagates the weighted measure over {token 0, token 1, mask} through the
/// tilted unmasking kernel, with the denoiser's own logits, and compares with
/// `p e^{βR}` normalized.
fn two_state_fke(beta: BetaSchedule) -> Result<f64, String> {
    let table = DiscreteTable::new(2, 1, vec![0.3, 0.7]).unwrap();
    let reward = TokenLinearReward { position: 0, token: 1, bonus: 1.0, weights: vec![] };
    let vocab = Vocabulary::new(2).unwrap();
    let mask = vocab.mask_id();
    let c = coupling(2000, 10.0);
    let n = c.n_steps();
    let r = |tok: usize| reward.value(&[], &[tok]).unwrap();
    let mut mu = [0.0; 3];
    mu[mask] = (beta.at(0.0) * r(mask)).exp();
    let masked = SequenceState::all_masked(1, vocab);
    for i in 1..=n {
        let (b_prev, b_next) = (beta.at((i - 1) as f64 / n as f64), beta.at(i as f64 / n as f64));
        let (a_old, a_new) = (c.unmasked_fraction(i - 1), c.unmasked_fraction(i));
        let p = if a_new >= 1.0 { 1.0 } else { ((a_new - a_old) / (1.0 - a_old)).clamp(0.0, 1.0) };
        let logits = table.denoise(&ContinuousState::toy(vec![]), &masked, c.t[i - 1], c.r[i - 1]).map_err(|e| e.to_string())?.logits;
        let q = logits.probs(0);
        let base = [1.0 - p, p * q[0], p * q[1]];
        let delta = [0.0, r(0) - r(mask), r(1) - r(mask)];
        let (row, log_z) = tilted_transition(&base, &delta, b_prev);
        let from = mu[mask] * log_z.exp();
        let mut next = [mu[0] + from * row[1], mu[1] + from * row[2], 0.0];
        next[mask] = from * row[0];
        for (tok, v) in next.iter_mut().enumerate() {
            *v *= ((b_next - b_prev) * r(tok)).exp();
        }
        mu = next;
    }
    let total: f64 = mu.iter().sum();
    let b = beta.at(1.0);
    let z = 0.3 * (b * r(0)).exp() + 0.7 * (b * r(1)).exp();
    let want = [0.3 * (b * r(0)).exp() / z, 0.7 * (b * r(1)).exp() / z, 0.0];
    Ok(tv(&mu.map(|v| v / total), &want))
}

fn random_backbone(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let mut bb = Vec::with_capacity(9 * len);
    for _ in 0..len {
        let ca = Vector3::new(rng.random_range(0.0..12.0), rng.random_range(0.0..12.0), rng.random_range(0.0..12.0));
        let rot = random_rotation(rng);
        let n = ca + rot * Vector3::new(-0.525, 1.363, 0.0);
        let c = ca + rot * Vector3::new(1.526, 0.0, 0.0);
        for p in [n, ca, c] {
            bb.extend([p[0], p[1], p[2]]);
        }
    }
    bb
}

fn reward_gradients() -> Outcome {
    let cases = [
        (ContactRewardSpec::disulfide(), vec![AminoAcid::Cys; 10]),
        (
            ContactRewardSpec::cation_pi(),
            vec![
                AminoAcid::Lys, AminoAcid::Phe, AminoAcid::Arg, AminoAcid::Trp, AminoAcid::Gly,
                AminoAcid::Tyr, AminoAcid::Lys, AminoAcid::His, AminoAcid::Arg, AminoAcid::Ala,
            ],
        ),
    ];
    let h = 1e-4;
    let (mut worst_rel, mut worst_sum) = (0.0f64, 0.0f64);
    let mut rng = stream(7, 0);
    for (spec, aas) in &cases {
        let masks = ResidueClassMasks::from_tokens(&aas.iter().map(|a| a.token()).collect::<Vec<_>>());
        for _ in 0..20 {
            let bb = random_backbone(&mut rng, 10);
            let g = reward_gradient(&bb, &masks, spec).map_err(|e| e.to_string())?;
            let fd: Vec<f64> = (0..bb.len())
                .map(|k| {
                    let (mut up, mut down) = (bb.clone(), bb.clone());
                    up[k] += h;
                    down[k] -= h;
                    (contact_reward(&up, &masks, spec).unwrap() - contact_reward(&down, &masks, spec).unwrap()) / (2.0 * h)
                })
                .collect();
            let scale = fd.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
            let err = g.iter().zip(&fd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            worst_rel = worst_rel.max(err / scale);
            for axis in 0..3 {
                worst_sum = worst_sum.max(g.iter().skip(axis).step_by(3).sum::<f64>().abs());
            }
        }
    }
    check(
        worst_rel <= 1e-5 && worst_sum <= 1e-10,
        format!("max relative error {worst_rel:.2e} over 40 configurations; largest gradient sum {worst_sum:.1e}"),
    )
}

fn rigid(ps: &[Point], rng: &mut impl Rng) -> Vec<Point> {
    let rot = random_rotation(rng);
    let t = Vector3::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
    ps.iter().map(|p| (rot * Vector3::from(*p) + t).into()).collect()
}

fn random_points(rng: &mut impl Rng, n: usize, half: f64) -> Vec<Point> {
    (0..n).map(|_| std::array::from_fn(|_| rng.random_range(-half..half))).collect()
}

fn losses() -> Outcome {
    let s = |x: f64| 1.0 / (1.0 + (-x).exp());
    let want = 1.0 - (s(0.5) + s(1.0) + s(2.0) + s(4.0)) / 4.0;
    let mut rng = stream(8, 0);
    let p = random_points(&mut rng, 15, 5.0);
    let got = smooth_lddt_loss(&p, &p, &[false; 15]).map_err(|e| e.to_string())?;
    let derived = (got - want).abs() <= 1e-12;
    let literal = (got - 0.195920).abs() <= 1e-6;

    let weights = LossWeights::default();
    let flags = vec![AtomFlags::PROTEIN; 15];
    let truth = random_points(&mut rng, 15, 8.0);
    let pred: Vec<Point> = truth.iter().map(|q| std::array::from_fn(|k| q[k] + rng.random_range(-1.0..1.0))).collect();
    let base = weighted_mse(&pred, &truth, &flags, None, &weights).map_err(|e| e.to_string())?;
    let mut drift = 0.0f64;
    for _ in 0..100 {
        let moved = rigid(&pred, &mut rng);
        drift = drift.max((weighted_mse(&moved, &truth, &flags, None, &weights).unwrap() - base).abs());
    }
    let linear = MaskSchedule::linear();
    let elbo_exact = (1..=1000).all(|k| {
        let r = k as f64 / 1000.0;
        masked_elbo_weight(r, &linear).unwrap() == 1.0 / r
    });
    check(
        literal && derived && drift <= 1e-9 && elbo_exact,
        format!(
            "smooth-lDDT at identity {got:.10} (sigmoid sum {want:.10}, quoted 0.195920 +- 1e-6: {literal}); \
             MSE rigid drift {drift:.1e}; ELBO weight = 1/r on 1000-point grid: {elbo_exact}"
        ),
    )
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for slot in 0..k {
            let mut q = p.clone();
            q.insert(slot, k - 1);
            out.push(q);
        }
    }
    out
}

fn exhaustive_motif(a: &MotifFrame, b: &MotifFrame) -> (f64, f64, f64) {
    let k = a.len();
    let da: Vec<Vec<f64>> = a.ca.iter().map(|&p| a.ca.iter().map(|&q| distance(p, q)).collect()).collect();
    let db: Vec<Vec<f64>> = b.ca.iter().map(|&p| b.ca.iter().map(|&q| distance(p, q)).collect()).collect();
    let (mut rmsd, mut chem, mut frob) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for p in permutations(k) {
        let matched: Vec<Point> = p.iter().map(|&j| b.ca[j]).collect();
        let al = kabsch(&matched, &a.ca, None).unwrap();
        rmsd = rmsd.min(al.rmsd);
        let c = p
            .iter()
            .enumerate()
            .map(|(i, &j)| distance(a.ca[i], al.apply(b.ca[j])) + 5.0 * chem_distance(&a.residue_types[i], &b.residue_types[j]))
            .sum::<f64>()
            / k as f64;
        chem = chem.min(c);
        let mut ss = 0.0;
        for i in 0..k {
            for j in i + 1..k {
                ss += (da[i][j] - db[p[i]][p[j]]).powi(2);
            }
        }
        frob = frob.min((ss / (k * (k - 1) / 2) as f64).sqrt());
    }
    (rmsd, chem, frob)
}

fn geometry() -> Outcome {
    let mut rng = stream(9, 0);
    let mut kabsch_worst = 0.0f64;
    for _ in 0..1000 {
        let p = random_points(&mut rng, 10, 10.0);
        let q = rigid(&p, &mut rng);
        let a = kabsch(&p, &q, None).map_err(|e| e.to_string())?;
        let moved = a.apply_all(&p);
        let resid = (moved.iter().zip(&q).map(|(x, y)| distance(*x, *y).powi(2)).sum::<f64>() / 10.0).sqrt();
        kabsch_worst = kabsch_worst.max(a.rmsd).max(resid);
    }

    let mut hung_ok = true;
    let perms6 = permutations(6);
    for _ in 0..100 {
        let cost: Vec<Vec<f64>> = (0..6).map(|_| (0..6).map(|_| rng.random_range(0.0..10.0)).collect()).collect();
        let (_, got) = hungarian(&cost).map_err(|e| e.to_string())?;
        let best = perms6.iter().map(|p| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>()).fold(f64::INFINITY, f64::min);
        hung_ok &= (got - best).abs() <= 1e-9;
    }

    // Near-copies in scrambled order, where the alternation must find the
    // exhaustive optimum.
    const NAMES: [&str; 6] = ["LYS", "ASP", "SER", "LEU", "PHE", "GLY"];
    let mut motif_ok = true;
    let mut motif_cases = 0;
    for k in 3..=4 {
        for _ in 0..40 {
            let a = MotifFrame::new(random_points(&mut rng, k, 6.0), (0..k).map(|_| NAMES[rng.random_range(0..6)].to_string()).collect()).unwrap();
            let mut order: Vec<usize> = (0..k).collect();
            rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
            let moved = rigid(&a.ca, &mut rng);
            let b = MotifFrame::new(
                order.iter().map(|&i| std::array::from_fn(|d| moved[i][d] + rng.random_range(-0.3..0.3))).collect(),
                order.iter().map(|&i| a.residue_types[i].clone()).collect(),
            )
            .unwrap();
            let (r, c, f) = exhaustive_motif(&a, &b);
            motif_ok &= (motif_rmsd(&a, &b).unwrap().value - r).abs() <= 1e-9;
            motif_ok &= (chem_cost(&a, &b, 1.0, 5.0).unwrap().value - c).abs() <= 1e-9;
            motif_ok &= (frobenius_distance(&a, &b).unwrap().0 - f).abs() <= 1e-9;
            motif_cases += 1;
        }
    }
    let fixed = MotifFrame::from_points(random_points(&mut rng, 6, 6.0));
    let lddt_one = lddt(&fixed, &fixed).map_err(|e| e.to_string())? == 1.0;

    // Two near-identical pairs of tetrahedra at different scales plus one
    // singleton: clusters {0,2}, {1,4}, {3}.
    let tet = |s: f64, e: f64| MotifFrame::from_points(vec![[0.0; 3], [s, e, 0.0], [0.3 * s, 0.8 * s, e], [0.5 * s, 0.2 * s, 0.9 * s]]);
    let motifs = [tet(4.0, 0.0), tet(12.0, 0.0), tet(4.0, 0.3), tet(24.0, 0.0), tet(12.0, 0.3)];
    let ratio = cluster_ratio(&motifs, 2.0, Execution::Parallel).map_err(|e| e.to_string())?;

    check(
        kabsch_worst <= 1e-9 && hung_ok && motif_ok && lddt_one && (ratio - 0.6).abs() < 1e-12,
        format!(
            "Kabsch worst {kabsch_worst:.1e}; Hungarian = exhaustive: {hung_ok}; motif metrics = exhaustive on {motif_cases} fixtures: {motif_ok}; \
             lDDT identity 1: {lddt_one}; cluster ratio {ratio}"
        ),
    )
}

fn codesign_bin() -> &'static str {
    env!("CARGO_BIN_EXE_codesign")
}

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(codesign_bin()).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).trim().to_string())
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn filter() -> Outcome {
    let origin = [[0.0; 3]];
    let mut shell = Spheres::default();
    for u in codesign::filter::fibonacci_sphere(300) {
        shell.push((u * 3.6).into(), 1.7);
    }
    let full = enclosure(&origin, &shell, 1.4, 500, 15).map_err(|e| e.to_string())?.worst;
    let bare = enclosure(&origin, &Spheres::default(), 1.4, 500, 15).map_err(|e| e.to_string())?.worst;
    // One blocker at distance 5 subtends a cone of half-angle atan(3.1 / 5).
    let want = (1.0 - (3.1f64 / 5.0).atan().cos()) / 2.0;
    let mut cone_err = 0.0f64;
    for axis in 0..3 {
        for sign in [-5.0, 5.0] {
            let mut c = [0.0; 3];
            c[axis] = sign;
            let mut lone = Spheres::default();
            lone.push(c, 1.7);
            cone_err = cone_err.max((enclosure(&origin, &lone, 1.4, 500, 15).unwrap().worst - want).abs());
        }
    }
    let top = composite_score(&ConfidenceRecord::new(1.0, 1.0, 0.0, 1.0));
    let crit = FilterCriteria::default();
    let edge = ConfidenceRecord::new(0.7, 0.7, 0.0, 0.5);
    let boundary = edge.iptm >= crit.min_iptm && edge.ptm >= crit.min_ptm && edge.iptm_chain >= crit.min_iptm_chain;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    common::write_filter_fixture(dir.path());
    let out = dir.path().join("out");
    cli(&[
        "filter",
        "--designs", p(&dir.path().join("designs")),
        "--seq-clusters", p(&dir.path().join("seq_clusters.txt")),
        "--struct-clusters", p(&dir.path().join("struct_clusters.csv")),
        "--config", p(&dir.path().join("filter.toml")),
        "--out", p(&out),
    ])?;
    let selected = std::fs::read_to_string(out.join("selected.txt")).map_err(|e| e.to_string())?;
    let got: Vec<&str> = selected.lines().collect();
    let matches = got == common::FILTER_EXPECTED;

    check(
        full >= 0.99 && bare == 0.0 && cone_err <= 2.0 / 500.0 && top == 1.75 && boundary && matches,
        format!(
            "shell enclosure {full:.3}, bare {bare}; axis cone error {:.2} rays of 500; score(1,1,0,1) = {top}; \
             boundary cutoffs pass: {boundary}; selection {got:?}",
            cone_err * 500.0
        ),
    )
}

fn files_except_manifest(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    std::fs::write(d.join("toy.model"), "kind = \"gaussian_mixture\"\nsigma0 = 0.5\nweights = [0.3, 0.7]\nmeans = [[-2.0], [2.0]]\n").unwrap();
    std::fs::write(
        d.join("coupled.model"),
        "kind = \"coupled\"\nvocab = 3\nlength = 2\nposition = 0\nsigma0 = 0.5\nweights = [0.5, 0.5]\nmeans = [[-1.0], [1.0]]\n\
         tables = [[[0.3, 0.3, 0.4], [0.2, 0.3, 0.5]], [[0.3, 0.3, 0.4], [0.6, 0.2, 0.2]]]\n",
    )
    .unwrap();
    std::fs::write(d.join("off.model"), "kind = \"gaussian_mixture\"\nsigma0 = 0.5\nweights = [1.0]\nmeans = [[2.0]]\n").unwrap();
    std::fs::write(d.join("reward.toml"), "kind = \"token_linear\"\nposition = 0\ntoken = 1\nweights = [0.1]\n").unwrap();
    common::write_filter_fixture(d);
    let runs: Vec<(&str, Vec<String>)> = vec![
        ("sample", vec!["sample", "--oracle", p(&d.join("toy.model")), "--chains", "1000", "--seed", "7"].into_iter().map(String::from).collect()),
        (
            "steer-sg",
            ["steer-sg", "--on", p(&d.join("toy.model")), "--off", p(&d.join("off.model")), "--particles", "32", "--ensembles", "2", "--seed", "7"]
                .into_iter()
                .map(String::from)
                .collect(),
        ),
        (
            "steer-mm",
            ["steer-mm", "--oracle", p(&d.join("coupled.model")), "--reward", p(&d.join("reward.toml")), "--particles", "32", "--seed", "7"]
                .into_iter()
                .map(String::from)
                .collect(),
        ),
        (
            "filter",
            [
                "filter", "--designs", p(&d.join("designs")), "--seq-clusters", p(&d.join("seq_clusters.txt")),
                "--struct-clusters", p(&d.join("struct_clusters.csv")),
            ]
            .into_iter()
            .map(String::from)
            .collect(),
        ),
    ];
    let mut identical = Vec::new();
    for (name, args) in &runs {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = d.join(format!("{name}-{rep}"));
            let mut full = args.clone();
            full.extend(["--out".to_string(), p(&out).to_string()]);
            cli(&full.iter().map(String::as_str).collect::<Vec<_>>())?;
            outputs.push(files_except_manifest(&out));
        }
        identical.push((*name, !outputs[0].is_empty() && outputs[0] == outputs[1]));
    }
    check(identical.iter().all(|(_, ok)| *ok), format!("byte-identical repeat outputs: {identical:?}"))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        ("discrete sampling", discrete_table),
        ("path-planning equivalence", path_planning),
        ("continuous sampling", gaussian_mixture),
        ("joint sampling", joint_sampling),
        ("specificity guidance", specificity),
        ("reward tilting", reward_tilting),
        ("reward gradients", reward_gradients),
        ("losses", losses),
        ("geometry", geometry),
        ("filter", filter),
        ("reproducibility", reproducibility),
    ];
    let mut unexpected = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                println!("criterion {n:>2} FAIL  {name}: {detail} [{secs:.1} s]");
                match UNATTAINABLE.iter().find(|(k, _)| *k == n) {
                    Some((_, why)) => println!("             known: {why}"),
                    None => unexpected.push(n),
                }
            }
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
