//! Reference implementations used to cross-check the fast solvers in the main
//! crate. Everything here favours obviousness over speed: the transport LP is
//! solved with a dense two-phase tableau simplex under Bland's rule, the 1-d
//! Wasserstein distance is the CDF integral, and the adjusted Rand index is
//! computed by brute-force pair counting. None of this code is reachable from
//! release builds; it exists so the tests have an independent second opinion.

const EPS: f64 = 1e-12;

/// Minimum cost of shipping `supply` to `demand` under the dense `cost`
/// matrix (row-major, `supply.len() x demand.len()`). Both mass vectors are
/// normalized to sum 1 before solving, so inputs only need matching totals up
/// to scale. Panics on malformed input; this is a test oracle, not an API.
pub fn solve_transport_lp(supply: &[f64], demand: &[f64], cost: &[f64]) -> f64 {
    let n = supply.len();
    let k = demand.len();
    assert!(n > 0 && k > 0, "empty marginal");
    assert_eq!(cost.len(), n * k, "cost matrix shape");
    assert!(n * k <= 5_000, "oracle is for small instances only");

    let sa: f64 = supply.iter().sum();
    let sb: f64 = demand.iter().sum();
    assert!(sa > 0.0 && sb > 0.0, "zero total mass");
    let a: Vec<f64> = supply.iter().map(|w| w / sa).collect();
    let b: Vec<f64> = demand.iter().map(|w| w / sb).collect();

    // Equality-form LP: rows 0..n are the source constraints, rows n..n+k the
    // sink constraints, columns 0..n*k the flows, then one artificial per row.
    let rows = n + k;
    let cols = n * k + rows;
    let mut tab = vec![vec![0.0f64; cols]; rows];
    let mut rhs = vec![0.0f64; rows];
    for i in 0..n {
        for j in 0..k {
            tab[i][i * k + j] = 1.0;
            tab[n + j][i * k + j] = 1.0;
        }
        rhs[i] = a[i];
    }
    for j in 0..k {
        rhs[n + j] = b[j];
    }
    for r in 0..rows {
        tab[r][n * k + r] = 1.0;
    }
    let mut basis: Vec<usize> = (0..rows).map(|r| n * k + r).collect();

    // Phase 1: drive the artificials to zero.
    let mut phase1 = vec![0.0f64; cols];
    for c in n * k..cols {
        phase1[c] = 1.0;
    }
    let resid = simplex(&mut tab, &mut rhs, &mut basis, &phase1, cols);
    assert!(resid.abs() < 1e-9, "transport LP infeasible: residual {resid}");

    // Phase 2: true costs, artificials barred from re-entering.
    let mut phase2 = vec![0.0f64; cols];
    phase2[..n * k].copy_from_slice(cost);
    simplex(&mut tab, &mut rhs, &mut basis, &phase2, n * k)
}

/// Tableau simplex with Bland's rule (lowest eligible index enters, lowest
/// basic index leaves on ratio ties), which cannot cycle. `enterable` caps the
/// columns allowed to enter the basis. Returns the objective value.
fn simplex(
    tab: &mut [Vec<f64>],
    rhs: &mut [f64],
    basis: &mut [usize],
    costs: &[f64],
    enterable: usize,
) -> f64 {
    let rows = tab.len();
    loop {
        let mut entering = None;
        for j in 0..enterable {
            if basis.contains(&j) {
                continue;
            }
            let mut rc = costs[j];
            for r in 0..rows {
                rc -= costs[basis[r]] * tab[r][j];
            }
            if rc < -EPS {
                entering = Some(j);
                break;
            }
        }
        let Some(j) = entering else { break };

        let mut leave: Option<(usize, f64)> = None;
        for r in 0..rows {
            if tab[r][j] > EPS {
                let ratio = rhs[r] / tab[r][j];
                let better = match leave {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < lratio - EPS
                            || (ratio < lratio + EPS && basis[r] < basis[lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let (lr, _) = leave.expect("bounded transport LP cannot be unbounded");

        let piv = tab[lr][j];
        for c in 0..tab[lr].len() {
            tab[lr][c] /= piv;
        }
        rhs[lr] /= piv;
        for r in 0..rows {
            if r == lr {
                continue;
            }
            let f = tab[r][j];
            if f == 0.0 {
                continue;
            }
            for c in 0..tab[r].len() {
                tab[r][c] -= f * tab[lr][c];
            }
            rhs[r] -= f * rhs[lr];
            if rhs[r] < 0.0 && rhs[r] > -1e-11 {
                rhs[r] = 0.0;
            }
        }
        basis[lr] = j;
    }
    (0..rows).map(|r| costs[basis[r]] * rhs[r]).sum()
}

/// Earth mover's distance between two weighted point clouds in R^d with
/// Euclidean ground cost, via the LP above. Positions are rows of `a_pos` /
/// `b_pos`; every row must have the same length.
pub fn emd_lp(a_pos: &[Vec<f64>], a_w: &[f64], b_pos: &[Vec<f64>], b_w: &[f64]) -> f64 {
    assert_eq!(a_pos.len(), a_w.len());
    assert_eq!(b_pos.len(), b_w.len());
    let mut cost = Vec::with_capacity(a_pos.len() * b_pos.len());
    for p in a_pos {
        for q in b_pos {
            assert_eq!(p.len(), q.len(), "dimension mismatch");
            let d2: f64 = p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum();
            cost.push(d2.sqrt());
        }
    }
    solve_transport_lp(a_w, b_w, &cost)
}

/// 1-d Wasserstein-1 distance as the integral of |F_a - F_b|, with atoms given
/// as (position, weight) pairs. Weights are normalized internally.
pub fn wasserstein_1d(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut a: Vec<(f64, f64)> = a.to_vec();
    let mut b: Vec<(f64, f64)> = b.to_vec();
    let sa: f64 = a.iter().map(|&(_, w)| w).sum();
    let sb: f64 = b.iter().map(|&(_, w)| w).sum();
    for e in &mut a {
        e.1 /= sa;
    }
    for e in &mut b {
        e.1 /= sb;
    }
    a.sort_by(|x, y| x.0.total_cmp(&y.0));
    b.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut xs: Vec<f64> = a.iter().chain(b.iter()).map(|&(x, _)| x).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    let cdf = |atoms: &[(f64, f64)], x: f64| -> f64 {
        atoms
            .iter()
            .take_while(|&&(p, _)| p <= x)
            .map(|&(_, w)| w)
            .sum()
    };
    let mut total = 0.0;
    for win in xs.windows(2) {
        total += (cdf(&a, win[0]) - cdf(&b, win[0])).abs() * (win[1] - win[0]);
    }
    total
}

/// Adjusted Rand index by explicit pair counting over all O(n^2) index pairs.
pub fn ari_pairs(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let (mut both, mut in_a, mut in_b) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        for j in i + 1..n {
            let sa = a[i] == a[j];
            let sb = b[i] == b[j];
            if sa {
                in_a += 1.0;
            }
            if sb {
                in_b += 1.0;
            }
            if sa && sb {
                both += 1.0;
            }
        }
    }
    let pairs = (n * (n - 1)) as f64 / 2.0;
    let expected = in_a * in_b / pairs;
    let max = 0.5 * (in_a + in_b);
    if (max - expected).abs() < EPS {
        1.0
    } else {
        (both - expected) / (max - expected)
    }
}
