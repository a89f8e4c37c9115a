//! Independent reference implementations used only by tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use csi_core::profile::BehavioralProfile;
use csi_core::protocols::{Contact, NodeIdx};
use rand::Rng;

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order with unit eigenvectors.
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> Vec<(f64, Vec<f64>)> {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let akp = row[p];
                    let akq = row[q];
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (rp, rq) = (a[p].clone(), a[q].clone());
                for k in 0..n {
                    a[p][k] = c * rp[k] - s * rq[k];
                    a[q][k] = s * rp[k] + c * rq[k];
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut out: Vec<(f64, Vec<f64>)> = (0..n).map(|i| (a[i][i], (0..n).map(|k| v[k][i]).collect())).collect();
    out.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    out
}

/// Relative floor below which singular values recovered from `MᵀM` are
/// indistinguishable from zero.
pub const GRAM_NOISE: f64 = 1e-7;

/// Singular values and right-singular vectors of `m` through the
/// eigen-decomposition of `MᵀM`, dropping values below `rel_tol * max`.
pub fn svd_via_gram(m: &[Vec<f64>], rel_tol: f64) -> Vec<(f64, Vec<f64>)> {
    let cols = m[0].len();
    let gram: Vec<Vec<f64>> = (0..cols)
        .map(|i| (0..cols).map(|j| m.iter().map(|row| row[i] * row[j]).sum()).collect())
        .collect();
    let eig = jacobi_eigen(gram);
    let smax = eig.first().map_or(0.0, |e| e.0.max(0.0).sqrt());
    eig.into_iter()
        .map(|(l, v)| (l.max(0.0).sqrt(), v))
        .filter(|(s, _)| *s > rel_tol * smax)
        .collect()
}

/// Reconstructs `U Σ Vᵀ` given singular triples where `u = M v / σ`.
pub fn reconstruct(m: &[Vec<f64>], triples: &[(f64, Vec<f64>)]) -> Vec<Vec<f64>> {
    let rows = m.len();
    let cols = m[0].len();
    let mut out = vec![vec![0.0; cols]; rows];
    for (s, v) in triples {
        let u: Vec<f64> = m
            .iter()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / s)
            .collect();
        for r in 0..rows {
            for c in 0..cols {
                out[r][c] += s * u[r] * v[c];
            }
        }
    }
    out
}

/// Projector `Σ v vᵀ` of a set of vectors.
pub fn projector(vectors: &[&[f64]]) -> Vec<Vec<f64>> {
    let n = vectors[0].len();
    let mut p = vec![vec![0.0; n]; n];
    for v in vectors {
        for i in 0..n {
            for j in 0..n {
                p[i][j] += v[i] * v[j];
            }
        }
    }
    p
}

/// Direct double sum `Σ_i Σ_j w_ai w_bj |a_i · b_j|` over sparse keyed
/// vectors, without any space alignment.
pub fn brute_similarity(a: &BehavioralProfile, b: &BehavioralProfile) -> f64 {
    let keyed = |p: &BehavioralProfile| -> Vec<(f64, BTreeMap<String, f64>)> {
        p.vectors()
            .iter()
            .zip(p.weights())
            .map(|(v, w)| (*w, p.location_keys().iter().cloned().zip(v.iter().copied()).collect()))
            .collect()
    };
    let mut total = 0.0;
    for (wa, va) in keyed(a) {
        for (wb, vb) in keyed(b) {
            let dot: f64 = va.iter().map(|(k, x)| x * vb.get(k).copied().unwrap_or(0.0)).sum();
            total += wa * wb * dot.abs();
        }
    }
    total
}

/// Random association matrix: each row is a probability vector, some
/// entries zero.
pub fn random_association_rows<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| loop {
            let raw: Vec<f64> = (0..cols)
                .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random::<f64>() })
                .collect();
            let s: f64 = raw.iter().sum();
            if s > 0.0 {
                break raw.iter().map(|x| x / s).collect();
            }
        })
        .collect()
}

/// Exhaustive search over every time-respecting relay schedule: walks that
/// follow contacts at strictly increasing indices, never revisiting a node.
/// Returns the earliest arrival time per node.
pub fn enumerate_arrivals(contacts: &[Contact], n: usize, source: NodeIdx, created_at: i64) -> Vec<Option<i64>> {
    let mut best = vec![None; n];
    best[source.index()] = Some(created_at);
    let mut visited = BTreeSet::from([source]);
    fn dfs(
        contacts: &[Contact],
        at: NodeIdx,
        next: usize,
        created_at: i64,
        visited: &mut BTreeSet<NodeIdx>,
        best: &mut Vec<Option<i64>>,
    ) {
        for j in next..contacts.len() {
            let c = contacts[j];
            if c.time < created_at || !c.involves(at) {
                continue;
            }
            let to = c.other(at);
            if visited.contains(&to) {
                continue;
            }
            let slot = &mut best[to.index()];
            if slot.is_none_or(|t| c.time < t) {
                *slot = Some(c.time);
            }
            visited.insert(to);
            dfs(contacts, to, j + 1, created_at, visited, best);
            visited.remove(&to);
        }
    }
    dfs(contacts, source, 0, created_at, &mut visited, &mut best);
    best
}

/// Random contact stream over `n` nodes, sorted as the engine expects.
pub fn random_contacts<R: Rng>(rng: &mut R, n: usize, events: usize, max_time: i64) -> Vec<Contact> {
    let mut out: Vec<Contact> = (0..events)
        .map(|_| {
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            Contact::new(rng.random_range(0..=max_time), NodeIdx::from(a), NodeIdx::from(b))
        })
        .collect();
    out.sort();
    out
}

/// Profiles of two locations `x` and `y` whose only eigen-behavior is
/// `(cos θ, sin θ)`; their similarity to the target "x" is `cos θ`.
pub fn angle_profile(sim_to_x: f64) -> BehavioralProfile {
    let c = sim_to_x;
    let s = (1.0 - c * c).max(0.0).sqrt();
    BehavioralProfile::from_parts(vec!["x".into(), "y".into()], vec![vec![c, s]], vec![1.0]).unwrap()
}

/// Largest absolute entry-wise difference.
pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

/// Compares an untruncated profile of `rows` with the Gram oracle: weights
/// equal normalized singular values, and within every group of equal
/// singular values the spanned subspaces coincide.
pub fn profile_matches_oracle(rows: &[Vec<f64>], profile: &BehavioralProfile, tol: f64) -> Result<(), String> {
    let oracle = svd_via_gram(rows, GRAM_NOISE);
    let norm = oracle.iter().map(|(s, _)| s * s).sum::<f64>().sqrt();
    let rank = oracle.len().min(profile.rank());
    let tail = oracle[rank..]
        .iter()
        .map(|(s, _)| s / norm)
        .chain(profile.weights()[rank..].iter().copied());
    for w in tail {
        if w > tol {
            return Err(format!(
                "rank {} vs oracle {}, unmatched weight {w}",
                profile.rank(),
                oracle.len()
            ));
        }
    }
    let oracle = &oracle[..rank];
    for (w, (s, _)) in profile.weights().iter().zip(oracle) {
        if (w - s / norm).abs() > tol {
            return Err(format!("weight {w} vs oracle {}", s / norm));
        }
    }
    let mut start = 0;
    while start < oracle.len() {
        let mut end = start + 1;
        while end < oracle.len() && (oracle[start].0 - oracle[end].0).abs() <= 1e-6 * oracle[0].0 {
            end += 1;
        }
        let ours: Vec<&[f64]> = profile.vectors()[start..end].iter().map(Vec::as_slice).collect();
        let theirs: Vec<&[f64]> = oracle[start..end].iter().map(|(_, v)| v.as_slice()).collect();
        let diff = max_abs_diff(&projector(&ours), &projector(&theirs));
        if diff > tol {
            return Err(format!("subspace {start}..{end} differs by {diff}"));
        }
        start = end;
    }
    Ok(())
}

/// Association matrix with generated location keys `l0, l1, ...`.
pub fn matrix_of(rows: Vec<Vec<f64>>) -> csi_core::profile::AssociationMatrix {
    let cols = rows[0].len();
    let days = (0..rows.len() as i64).collect();
    let keys = (0..cols).map(|c| format!("l{c:02}")).collect();
    csi_core::profile::AssociationMatrix::new(rows, keys, days).unwrap()
}

/// Replays CSI:T in open and private mode over one stream and checks the
/// single-copy ascend, delivery soundness and privacy equivalence
/// invariants.
pub fn check_csit_invariants(contacts: &[Contact], sims: &[f64], sender: NodeIdx, th: f64) -> Result<(), String> {
    use csi_core::protocols::{ActionKind, CsiTConfig, CsiTPhase};
    use csi_core::sim::{replay, CsiTRun};
    use rand::SeedableRng;

    let n = sims.len();
    let intended: Vec<bool> = sims.iter().map(|&s| s > th).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let mut failure: Option<String> = None;
    let mut ascend_path = vec![sims[sender.index()]];
    let mut spread_started = sims[sender.index()] > th;

    let mut open = CsiTRun::new(sims, sender, CsiTConfig::new(th));
    let open_run = replay(
        &mut open,
        n,
        contacts,
        0,
        &intended,
        sender,
        &mut rng,
        |p: &CsiTRun, c, actions| {
            if failure.is_some() {
                return;
            }
            let ascending: Vec<usize> = (0..n)
                .filter(|&i| p.states[i].phase == CsiTPhase::GradientAscend)
                .collect();
            let spreading = p.states.iter().any(|s| s.phase == CsiTPhase::GroupSpread);
            if ascending.len() > 1 {
                failure = Some(format!("{} ascend copies at t={}", ascending.len(), c.time));
            } else if !spreading && !spread_started && ascending.len() != 1 {
                failure = Some(format!("ascend copy lost at t={}", c.time));
            } else if spreading && !ascending.is_empty() {
                failure = Some(format!("ascend copy survives group spread at t={}", c.time));
            }
            for a in actions {
                if a.kind == ActionKind::Deliver && sims[a.to.index()] <= th {
                    failure = Some(format!("delivered to {} with sim {}", a.to, sims[a.to.index()]));
                }
                if a.kind == ActionKind::TransmitMessage && !spread_started {
                    let s = sims[a.to.index()];
                    if s <= *ascend_path.last().unwrap() {
                        failure = Some(format!("ascend step to lower similarity {s}"));
                    }
                    ascend_path.push(s);
                }
            }
            spread_started |= spreading;
        },
    );
    if let Some(f) = failure {
        return Err(f);
    }

    let mut private = CsiTRun::new(sims, sender, CsiTConfig::new(th).with_privacy(true));
    let private_run = replay(
        &mut private,
        n,
        contacts,
        0,
        &intended,
        sender,
        &mut rng,
        |_: &CsiTRun, _, _| {},
    );
    if open_run.delivered_at != private_run.delivered_at {
        return Err("private mode changed deliveries".into());
    }
    for kind in [ActionKind::TransmitMessage, ActionKind::Deliver] {
        if open_run.action_counts[kind.ordinal()] != private_run.action_counts[kind.ordinal()] {
            return Err(format!("private mode changed {} count", kind.as_str()));
        }
    }
    if private_run.action_counts[ActionKind::TransmitProfile.ordinal()] != 0 {
        return Err("private mode transmitted profiles".into());
    }
    if open.states != private.states {
        return Err("private mode changed final states".into());
    }
    Ok(())
}

/// Random per-node similarities to a target, a few of them above `th`.
pub fn random_sims<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| (rng.random::<f64>() * 100.0).round() / 100.0).collect()
}

/// Replays CSI:D and checks the holder-list invariants after every contact:
/// holders list themselves, never carry the in-group flag, and two holders
/// that met as holders (or, outside private mode, through an election) end
/// with equal lists.
pub fn check_csid_holder_lists<L: csi_core::protocols::SimilarityLookup>(
    contacts: &[Contact],
    intended: &[bool],
    sender: NodeIdx,
    created_at: i64,
    cfg: csi_core::protocols::CsiDConfig,
    sims: &L,
) -> Result<(), String> {
    use csi_core::sim::{replay, CsiDRun};
    use rand::SeedableRng;

    let size = intended.len();
    let mut p = CsiDRun::new(size, sender, intended.to_vec(), cfg, sims);
    let mut failure = None;
    let mut was_holder: Vec<bool> = (0..size).map(|i| i == sender.index()).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    replay(
        &mut p,
        size,
        contacts,
        created_at,
        intended,
        sender,
        &mut rng,
        |p: &CsiDRun<'_, L>, c, _| {
            if failure.is_some() {
                return;
            }
            for (i, s) in p.states.iter().enumerate() {
                if s.is_holder && !s.known_holders.contains(&NodeIdx::from(i)) {
                    failure = Some(format!("holder {i} missing from its own list at t={}", c.time));
                }
                if s.is_holder && s.holder_in_group {
                    failure = Some(format!("holder {i} flagged as in-group at t={}", c.time));
                }
            }
            let (a, b) = (&p.states[c.a.index()], &p.states[c.b.index()]);
            let both = a.is_holder && b.is_holder && a.known_holders != b.known_holders;
            let synced = was_holder[c.a.index()] && was_holder[c.b.index()];
            let elected = a.is_holder != was_holder[c.a.index()] || b.is_holder != was_holder[c.b.index()];
            if both && synced {
                failure = Some(format!("holders {} and {} synced but lists differ", c.a, c.b));
            }
            if both && elected && !cfg.private {
                failure = Some(format!("election between {} and {} left lists apart", c.a, c.b));
            }
            was_holder[c.a.index()] = a.is_holder;
            was_holder[c.b.index()] = b.is_holder;
        },
    );
    failure.map_or(Ok(()), Err)
}

/// Oracle profile: Gram eigenpairs, normalized weights, truncated by the
/// same cumulative power rule.
pub fn oracle_profile(m: &csi_core::profile::AssociationMatrix, power: f64) -> BehavioralProfile {
    let triples = svd_via_gram(m.rows(), GRAM_NOISE);
    let norm = triples.iter().map(|(s, _)| s * s).sum::<f64>().sqrt();
    let mut vectors = Vec::new();
    let mut weights = Vec::new();
    let mut cumulative = 0.0;
    for (s, v) in triples {
        let w = s / norm;
        weights.push(w);
        vectors.push(v);
        cumulative += w * w;
        if cumulative >= power - 1e-12 {
            break;
        }
    }
    BehavioralProfile::from_parts(m.location_keys().to_vec(), vectors, weights).unwrap()
}
