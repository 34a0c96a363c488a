//! Constructing an accessible small set from transition densities.
//!
//! With densities `p(x,y) = P(x,y) / μ0(y)`, let `S_x = {y : p(x,y) > 1/2}` and
//! `S² = {(x,y) : p(x,y) > 1/2}`. Given cells `U, V, W` of a partition such
//! that `S²` covers at least 7/8 of the `μ0²`-mass of both `U×V` and `V×W`,
//! the sets
//!
//! ```text
//! D = {x ∈ U : μ0(S_x ∩ V)  ≥ 3/4 μ0(V)}
//! E = {z ∈ W : μ0(S*_z ∩ V) ≥ 3/4 μ0(V)}
//! ```
//!
//! satisfy `p²(x,z) ≥ μ0(V)/8` for `x ∈ D`, `z ∈ E`, so `D` is 2-small with
//! `ν = μ0(· ∩ E)/μ0(E)` and `δ = μ0(V) μ0(E) / 8`.
//!
//! On a finite space the singleton partition already resolves every density,
//! and the cover conditions reduce to `(u,v), (v,w) ∈ S²`. Since every row
//! puts density at least 1 somewhere, `S³` is never empty there. Singleton
//! cells make `D` a single state, so the trivial partition (where the 7/8
//! covers can also hold) is tried as well. Partitions generated by metric
//! balls exercise the intermediate refinement levels.

use super::{FiniteKernel, SmallSetCertificate, CHECK_TOL};
use crate::error::{Error, Result};

const DENSITY_THRESHOLD: f64 = 0.5;
const COVER_FRACTION: f64 = 7.0 / 8.0;
const SECTION_FRACTION: f64 = 3.0 / 4.0;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    cell: Vec<usize>,
    n_cells: usize,
}

impl Partition {
    pub fn singletons(n: usize) -> Self {
        Self {
            cell: (0..n).collect(),
            n_cells: n,
        }
    }

    pub fn trivial(n: usize) -> Self {
        Self {
            cell: vec![0; n],
            n_cells: usize::from(n > 0),
        }
    }

    /// Relabels arbitrary cell labels to `0..n_cells` in order of first appearance.
    pub fn from_labels<T: PartialEq + Clone>(labels: &[T]) -> Self {
        let mut seen: Vec<T> = Vec::new();
        let cell = labels
            .iter()
            .map(|l| match seen.iter().position(|s| s == l) {
                Some(i) => i,
                None => {
                    seen.push(l.clone());
                    seen.len() - 1
                }
            })
            .collect();
        Self {
            cell,
            n_cells: seen.len(),
        }
    }

    /// The partition generated by the open balls `B(x_i, ε_j)` with centers
    /// taken as states `0..level` and radii `radii[..level]`; `dist` is a
    /// full distance matrix. Level 0 gives the trivial partition.
    pub fn from_balls(dist: &[Vec<f64>], radii: &[f64], level: usize) -> Self {
        let n = dist.len();
        let centers = level.min(n);
        let nr = level.min(radii.len());
        let signatures: Vec<Vec<bool>> = (0..n)
            .map(|s| {
                (0..centers)
                    .flat_map(|i| (0..nr).map(move |j| (i, j)))
                    .map(|(i, j)| dist[i][s] < radii[j])
                    .collect()
            })
            .collect();
        Self::from_labels(&signatures)
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn cell_of(&self, x: usize) -> usize {
        self.cell[x]
    }

    pub fn members(&self, c: usize) -> Vec<usize> {
        (0..self.cell.len())
            .filter(|&x| self.cell[x] == c)
            .collect()
    }

    pub fn is_singletons(&self) -> bool {
        self.n_cells == self.cell.len()
    }
}

/// The output of the construction: the certificate plus the sets it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct SmallSetConstruction {
    /// `(D, 2, μ0(V)μ0(E)/8, μ0(·∩E)/μ0(E))`.
    pub certificate: SmallSetCertificate,
    pub u_cell: Vec<usize>,
    pub v_cell: Vec<usize>,
    pub w_cell: Vec<usize>,
    pub d: Vec<usize>,
    pub e: Vec<usize>,
    /// `μ0(V) / 8`, the lower bound on `p²(x,z)` for `x ∈ D`, `z ∈ E`.
    pub density_bound: f64,
}

/// Runs the construction on the two ends of any refinement sequence, the
/// trivial partition and the singletons, and keeps the larger `δ`.
pub fn small_set_search(
    kernel: &FiniteKernel,
    mu0: &[f64],
) -> Result<Option<SmallSetConstruction>> {
    let n = kernel.n();
    let coarse = small_set_search_with(kernel, mu0, &Partition::trivial(n))?;
    let fine = small_set_search_with(kernel, mu0, &Partition::singletons(n))?;
    Ok(match (coarse, fine) {
        (Some(c), Some(f)) => Some(if c.certificate.delta > f.certificate.delta {
            c
        } else {
            f
        }),
        (c, f) => f.or(c),
    })
}

/// Runs the construction over all cell triples of `partition`, returning the
/// admissible triple with the largest `δ` (first in lexicographic order on ties).
/// `None` when `μ0³(S³) = 0` or no triple meets the cover conditions.
pub fn small_set_search_with(
    kernel: &FiniteKernel,
    mu0: &[f64],
    partition: &Partition,
) -> Result<Option<SmallSetConstruction>> {
    let n = kernel.n();
    if mu0.len() != n || mu0.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::InvalidParams(
            "reference measure must be strictly positive on every state".into(),
        ));
    }
    if partition.cell.len() != n {
        return Err(Error::InvalidParams(
            "partition does not match the state space".into(),
        ));
    }
    let in_s2: Vec<Vec<bool>> = (0..n)
        .map(|x| {
            (0..n)
                .map(|y| kernel.get(x, y) / mu0[y] > DENSITY_THRESHOLD)
                .collect()
        })
        .collect();
    let has_s3 = (0..n).any(|x| (0..n).any(|y| in_s2[x][y] && (0..n).any(|z| in_s2[y][z])));
    if !has_s3 {
        return Ok(None);
    }

    let cells: Vec<Vec<usize>> = (0..partition.n_cells())
        .map(|c| partition.members(c))
        .collect();
    let mass = |set: &[usize]| set.iter().map(|&x| mu0[x]).sum::<f64>();
    let cell_mass: Vec<f64> = cells.iter().map(|c| mass(c)).collect();
    let nc = cells.len();
    let covers: Vec<Vec<bool>> = (0..nc)
        .map(|a| {
            (0..nc)
                .map(|b| {
                    let inside: f64 = cells[a]
                        .iter()
                        .flat_map(|&x| cells[b].iter().map(move |&y| (x, y)))
                        .filter(|&(x, y)| in_s2[x][y])
                        .map(|(x, y)| mu0[x] * mu0[y])
                        .sum();
                    inside >= COVER_FRACTION * cell_mass[a] * cell_mass[b]
                })
                .collect()
        })
        .collect();

    let mut best: Option<SmallSetConstruction> = None;
    for v in 0..nc {
        let v_mass = cell_mass[v];
        let threshold = SECTION_FRACTION * v_mass;
        for u in (0..nc).filter(|&u| covers[u][v]) {
            let d: Vec<usize> = cells[u]
                .iter()
                .copied()
                .filter(|&x| {
                    cells[v]
                        .iter()
                        .filter(|&&y| in_s2[x][y])
                        .map(|&y| mu0[y])
                        .sum::<f64>()
                        >= threshold
                })
                .collect();
            if d.is_empty() {
                continue;
            }
            for w in (0..nc).filter(|&w| covers[v][w]) {
                let e: Vec<usize> = cells[w]
                    .iter()
                    .copied()
                    .filter(|&z| {
                        cells[v]
                            .iter()
                            .filter(|&&y| in_s2[y][z])
                            .map(|&y| mu0[y])
                            .sum::<f64>()
                            >= threshold
                    })
                    .collect();
                if e.is_empty() {
                    continue;
                }
                let e_mass = mass(&e);
                let delta = v_mass * e_mass / 8.0;
                if best.as_ref().is_some_and(|b| b.certificate.delta >= delta) {
                    continue;
                }
                let mut nu = vec![0.0; n];
                for &z in &e {
                    nu[z] = mu0[z] / e_mass;
                }
                super::renormalize(&mut nu);
                best = Some(SmallSetConstruction {
                    certificate: SmallSetCertificate {
                        set: d.clone(),
                        m: 2,
                        delta,
                        nu,
                        delta_prime: None,
                    },
                    u_cell: cells[u].clone(),
                    v_cell: cells[v].clone(),
                    w_cell: cells[w].clone(),
                    d: d.clone(),
                    e,
                    density_bound: v_mass / 8.0,
                });
            }
        }
    }

    if let Some(found) = &best {
        found.certificate.verify(kernel)?;
        let p2 = kernel.power(2);
        for &x in &found.d {
            for &z in &found.e {
                if p2.get(x, z) / mu0[z] < found.density_bound - CHECK_TOL {
                    return Err(Error::InvalidParams(format!(
                        "two-step density bound fails at ({x}, {z})"
                    )));
                }
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doeblin::minorization;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_rows_give_full_sets() {
        let n = 4;
        let k = FiniteKernel::from_rows(&vec![vec![0.25; n]; n]).unwrap();
        let mu0 = vec![0.25; n];
        let found = small_set_search(&k, &mu0).unwrap().unwrap();
        assert_eq!(found.d, vec![0, 1, 2, 3]);
        assert_eq!(found.e, vec![0, 1, 2, 3]);
        assert!(found.certificate.delta >= 0.25 / 8.0 - 1e-15);
        found.certificate.verify(&k).unwrap();
    }

    #[test]
    fn chains_through_dense_pairs() {
        // S² = X × {2}, so (x, 2, 2) ∈ S³
        let k = FiniteKernel::from_rows(&[
            vec![0.2, 0.2, 0.6],
            vec![0.2, 0.2, 0.6],
            vec![0.2, 0.2, 0.6],
        ])
        .unwrap();
        let found = small_set_search(&k, &[0.45, 0.45, 0.1]).unwrap().unwrap();
        assert_eq!(found.e, vec![2]);

        // every row carries density >= 1 somewhere, so S³ is never empty on a finite space
        let k = FiniteKernel::from_rows(&[
            vec![0.0, 0.5, 0.5],
            vec![1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
        ])
        .unwrap();
        let found = small_set_search(&k, &[0.1, 0.45, 0.45]).unwrap().unwrap();
        found.certificate.verify(&k).unwrap();
    }

    #[test]
    fn random_positive_kernels_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mu0 = vec![0.2; 5];
        let mut found_any = 0;
        for _ in 0..300 {
            let k = FiniteKernel::random(&mut rng, 5);
            if let Some(found) = small_set_search(&k, &mu0).unwrap() {
                found_any += 1;
                found.certificate.verify(&k).unwrap();
                let best = minorization(&k, &found.d, 2).unwrap().unwrap();
                assert!(found.certificate.delta <= best.delta + 1e-15);
            }
        }
        assert!(found_any > 250);
    }

    #[test]
    fn rejects_degenerate_reference_measure() {
        let k = FiniteKernel::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(small_set_search(&k, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn ball_partitions_refine_to_singletons() {
        let n = 6;
        let pos: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let dist: Vec<Vec<f64>> = pos
            .iter()
            .map(|a| pos.iter().map(|b| (a - b).abs()).collect())
            .collect();
        let radii: Vec<f64> = (0..8).map(|j| 4.0 / 2f64.powi(j)).collect();
        assert_eq!(Partition::from_balls(&dist, &radii, 0).n_cells(), 1);
        let mut prev = 1;
        for level in 1..=8 {
            let p = Partition::from_balls(&dist, &radii, level);
            assert!(p.n_cells() >= prev);
            prev = p.n_cells();
        }
        assert!(Partition::from_balls(&dist, &radii, 8).is_singletons());
    }
}
