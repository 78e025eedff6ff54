//! Brute-force and exact references for small instances.

use crate::error::{Error, Result};
use crate::scalar::{Real, Weight};

use super::{SortState, SortOptions};

/// Length of the longest strictly decreasing subsequence, by patience piles.
pub fn longest_decreasing_subsequence<R: Real>(labels: &[R]) -> usize {
    // tails[k] is the largest possible last element of a decreasing run of
    // length k + 1; the vector itself is decreasing.
    let mut tails: Vec<R> = Vec::new();
    for &x in labels {
        let pos = tails.partition_point(|&t| t > x);
        if pos == tails.len() {
            tails.push(x);
        } else {
            tails[pos] = x;
        }
    }
    tails.len()
}

/// Largest instance accepted by [`min_heaps_bruteforce`].
pub const BRUTEFORCE_MAX: usize = 9;

/// Minimum number of heaps over every assignment in which each item's parent
/// comes earlier, has a smaller label and has a free life.
pub fn min_heaps_bruteforce<R: Real>(items: &[(R, u32)]) -> Result<usize> {
    if items.len() > BRUTEFORCE_MAX {
        return Err(Error::TooLarge {
            n: items.len(),
            max: BRUTEFORCE_MAX,
        });
    }
    fn go<R: Real>(items: &[(R, u32)], i: usize, cap: &mut [u32], roots: usize, best: &mut usize) {
        if roots >= *best {
            return;
        }
        if i == items.len() {
            *best = roots;
            return;
        }
        for j in 0..i {
            if cap[j] > 0 && items[j].0 < items[i].0 {
                cap[j] -= 1;
                go(items, i + 1, cap, roots, best);
                cap[j] += 1;
            }
        }
        go(items, i + 1, cap, roots + 1, best);
    }
    let mut cap: Vec<u32> = items.iter().map(|&(_, k)| k).collect();
    let mut best = items.len();
    go(items, 0, &mut cap, 0, &mut best);
    Ok(best)
}

/// Root counts `R_1..R_m_max` obtained by giving item `i0` (0-based) `m` lives
/// and every other item its base lives.
pub fn life_sweep<R: Real>(labels: &[R], base_lives: &[u32], i0: usize, m_max: u32) -> Result<Vec<usize>> {
    if labels.len() != base_lives.len() || i0 >= labels.len() {
        return Err(Error::InvalidParameter(format!(
            "i0 = {i0} with {} labels and {} lives",
            labels.len(),
            base_lives.len()
        )));
    }
    let mut items: Vec<(R, u32)> = labels.iter().copied().zip(base_lives.iter().copied()).collect();
    (1..=m_max)
        .map(|m| {
            items[i0].1 = m;
            super::root_count(&items)
        })
        .collect()
}

/// `E[R]` for a fixed label sequence with i.i.d. lives drawn from `support`.
pub fn expected_root_count<R: Real, W: Weight>(labels: &[R], support: &[(u32, W)]) -> Result<W> {
    let mut lives = vec![0u32; labels.len()];
    let mut total = W::zero();
    enumerate_lives(support, 0, &mut lives, W::one(), &mut |lv, w| {
        let items: Vec<(R, u32)> = labels.iter().copied().zip(lv.iter().copied()).collect();
        let r = super::root_count(&items)?;
        total = total.clone() + w * count::<W>(r);
        Ok(())
    })?;
    Ok(total)
}

/// Exact expectation of `stat` after sorting `n` items whose label order is a
/// uniform permutation and whose lives are i.i.d. from `support`.
pub fn exact_expectation<W, F>(n: usize, support: &[(u32, W)], stat: F) -> Result<W>
where
    W: Weight,
    F: Fn(&SortState<f64>) -> usize,
{
    let perms = permutations(n);
    let p_perm = W::one() / count::<W>(perms.len());
    let mut lives = vec![0u32; n];
    let mut total = W::zero();
    for perm in &perms {
        enumerate_lives(support, 0, &mut lives, p_perm.clone(), &mut |lv, w| {
            let mut s = SortState::with_options(SortOptions {
                keep_forest: true,
                track_dead: true,
            });
            for (&u, &k) in perm.iter().zip(lv) {
                s.insert_next(u as f64, k)?;
            }
            total = total.clone() + w * count::<W>(stat(&s));
            Ok(())
        })?;
    }
    Ok(total)
}

fn enumerate_lives<W: Weight>(
    support: &[(u32, W)],
    i: usize,
    lives: &mut [u32],
    w: W,
    visit: &mut dyn FnMut(&[u32], W) -> Result<()>,
) -> Result<()> {
    if i == lives.len() {
        return visit(lives, w);
    }
    for (k, p) in support {
        lives[i] = *k;
        enumerate_lives(support, i + 1, lives, w.clone() * p.clone(), visit)?;
    }
    Ok(())
}

fn count<W: Weight>(k: usize) -> W {
    (0..k).fold(W::zero(), |acc, _| acc + W::one())
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).expect("successor exists");
        p.swap(i - 1, j);
        p[i..].reverse();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lds_small_cases() {
        assert_eq!(longest_decreasing_subsequence(&[1.0, 2.0, 3.0]), 1);
        assert_eq!(longest_decreasing_subsequence(&[3.0, 6.0, 1.0, 7.0, 5.0, 4.0, 2.0]), 4);
        assert_eq!(longest_decreasing_subsequence::<f64>(&[]), 0);
    }

    #[test]
    fn bruteforce_worked_sequence() {
        let items = [(0.1, 2), (0.8, 3), (0.4, 1), (0.2, 2), (0.5, 2), (0.15, 3)];
        assert_eq!(min_heaps_bruteforce(&items).unwrap(), 3);
        assert_eq!(min_heaps_bruteforce(&[(0.3, 1)]).unwrap(), 1);
        let big: Vec<(f64, u32)> = (0..10).map(|i| (f64::from(i), 1)).collect();
        assert!(min_heaps_bruteforce(&big).is_err());
    }

    #[test]
    fn sweep_single_item() {
        assert_eq!(life_sweep(&[0.5], &[1], 0, 4).unwrap(), vec![1, 1, 1, 1]);
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(permutations(0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn two_items_have_mean_three_halves() {
        let e = exact_expectation(2, &[(1, 0.5), (3, 0.5)], |s| s.root_count()).unwrap();
        assert_eq!(e, 1.5);
    }
}
