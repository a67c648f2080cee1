//! Sub-instance generation.
//!
//! A subcase keeps the parent's walls and player start and takes k-subsets
//! of the parent's boxes and goals. Subcases may be unsolvable; generation
//! never filters them.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::board::{Board, BoardError, Cell};

#[derive(Error, Debug, PartialEq, Eq)]
pub enum SubcaseError {
    #[error("subset size {got} does not match k={k}")]
    SizeMismatch { k: usize, got: usize },
    #[error("k={k} outside [1, {n}]")]
    BadK { k: usize, n: usize },
    #[error("cell {0} is not a {1} cell of the parent")]
    SubsetNotContained(Cell, &'static str),
    #[error(transparent)]
    Board(#[from] BoardError),
}

/// A fully specified subcase draw.
#[derive(Debug, Clone)]
pub struct SubcaseSpec {
    pub k: usize,
    pub box_subset: Vec<Cell>,
    pub goal_subset: Vec<Cell>,
    pub seed: u64,
}

/// Build the subcase board for `spec`: parent walls and player, boxes and
/// goals replaced by the chosen subsets.
pub fn make_subcase(parent: &Board, spec: &SubcaseSpec) -> Result<Board, SubcaseError> {
    let n = parent.n_boxes();
    if spec.k < 1 || spec.k > n {
        return Err(SubcaseError::BadK { k: spec.k, n });
    }
    for subset in [&spec.box_subset, &spec.goal_subset] {
        if subset.len() != spec.k {
            return Err(SubcaseError::SizeMismatch {
                k: spec.k,
                got: subset.len(),
            });
        }
        let mut sorted = subset.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != spec.k {
            return Err(SubcaseError::SizeMismatch {
                k: spec.k,
                got: sorted.len(),
            });
        }
    }
    let parent_boxes: Vec<Cell> = parent.box_cells().collect();
    let parent_goals: Vec<Cell> = parent.layout().goal_cells().collect();
    for &c in &spec.box_subset {
        if !parent_boxes.contains(&c) {
            return Err(SubcaseError::SubsetNotContained(c, "box"));
        }
    }
    for &c in &spec.goal_subset {
        if !parent_goals.contains(&c) {
            return Err(SubcaseError::SubsetNotContained(c, "goal"));
        }
    }
    Ok(parent.with_boxes_and_goals(spec.box_subset.clone(), spec.goal_subset.clone())?)
}

/// One generated task and where it came from.
#[derive(Debug, Clone)]
pub struct PoolEntry {
    pub board: Board,
    pub k: usize,
    pub seed: u64,
    /// True for the distinguished parent instance appended to its pool.
    pub is_target: bool,
}

fn draw_subset(cells: &[Cell], k: usize, rng: &mut ChaCha8Rng) -> Vec<Cell> {
    let mut ixs: Vec<usize> = (0..cells.len()).collect();
    ixs.shuffle(rng);
    let mut chosen: Vec<Cell> = ixs[..k].iter().map(|&i| cells[i]).collect();
    chosen.sort_unstable();
    chosen
}

/// Draw `pool_size` subcases (k uniform on [1, N], then uniform subsets)
/// and append the parent itself as the distinguished target task.
/// Deterministic under `seed`.
pub fn sample_pool(parent: &Board, pool_size: usize, seed: u64) -> Vec<PoolEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = parent.n_boxes();
    assert!(n >= 1, "parent must have at least one box");
    let boxes: Vec<Cell> = parent.box_cells().collect();
    let goals: Vec<Cell> = parent.layout().goal_cells().collect();
    let mut out = Vec::with_capacity(pool_size + 1);
    for i in 0..pool_size {
        let k = rng.random_range(1..=n);
        let spec = SubcaseSpec {
            k,
            box_subset: draw_subset(&boxes, k, &mut rng),
            goal_subset: draw_subset(&goals, k, &mut rng),
            seed: seed.wrapping_add(i as u64),
        };
        let board = make_subcase(parent, &spec).expect("drawn subsets are valid by construction");
        out.push(PoolEntry {
            board,
            k,
            seed: spec.seed,
            is_target: false,
        });
    }
    out.push(PoolEntry {
        board: parent.clone(),
        k: n,
        seed,
        is_target: true,
    });
    out
}

/// `per_k` subcases for every k in `k_range` (inclusive), without the
/// parent. Used to reproduce the selection-evolution experiment.
pub fn stratified_pool(
    parent: &Board,
    per_k: usize,
    k_range: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> Vec<PoolEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let boxes: Vec<Cell> = parent.box_cells().collect();
    let goals: Vec<Cell> = parent.layout().goal_cells().collect();
    let mut out = Vec::new();
    for k in k_range {
        assert!(k >= 1 && k <= boxes.len(), "k={k} outside parent range");
        for i in 0..per_k {
            let spec = SubcaseSpec {
                k,
                box_subset: draw_subset(&boxes, k, &mut rng),
                goal_subset: draw_subset(&goals, k, &mut rng),
                seed: seed.wrapping_add((k * per_k + i) as u64),
            };
            let board =
                make_subcase(parent, &spec).expect("drawn subsets are valid by construction");
            out.push(PoolEntry {
                board,
                k,
                seed: spec.seed,
                is_target: false,
            });
        }
    }
    out
}

/// Write one XSB file per task plus a `pool_index.tsv` manifest
/// (task id, parent id, k, seed, target flag, file name).
pub fn write_pool_manifest(
    dir: &Path,
    parent_id: &str,
    entries: &[PoolEntry],
) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut index = std::fs::File::create(dir.join("pool_index.tsv"))?;
    writeln!(index, "task_id\tparent_id\tk\tseed\ttarget\tfile")?;
    for (i, entry) in entries.iter().enumerate() {
        let file = format!("task_{i:05}.xsb");
        std::fs::write(dir.join(&file), entry.board.render_xsb())?;
        writeln!(
            index,
            "{i}\t{parent_id}\t{}\t{}\t{}\t{file}",
            entry.k, entry.seed, entry.is_target as u8
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parent() -> Board {
        Board::parse_xsb("#######\n#@$$  #\n# $$  #\n# ....#\n#######").unwrap()
    }

    #[test]
    fn full_subsets_reproduce_parent() {
        let p = parent();
        let spec = SubcaseSpec {
            k: 4,
            box_subset: p.box_cells().collect(),
            goal_subset: p.layout().goal_cells().collect(),
            seed: 0,
        };
        assert_eq!(make_subcase(&p, &spec).unwrap(), p);
    }

    #[test]
    fn single_box_subcase_keeps_walls_and_player() {
        let p = parent();
        let spec = SubcaseSpec {
            k: 1,
            box_subset: vec![p.box_cells().next().unwrap()],
            goal_subset: vec![p.layout().goal_cells().next().unwrap()],
            seed: 0,
        };
        let sub = make_subcase(&p, &spec).unwrap();
        assert_eq!(sub.n_boxes(), 1);
        assert_eq!(sub.player(), p.player());
        for r in 0..p.height() {
            for c in 0..p.width() {
                assert_eq!(
                    p.layout().is_wall(Cell::new(r, c)),
                    sub.layout().is_wall(Cell::new(r, c))
                );
            }
        }
    }

    #[test]
    fn subset_violations_are_rejected() {
        let p = parent();
        let bad_cell = Cell::new(3, 1); // floor: neither a parent box nor goal
        let spec = SubcaseSpec {
            k: 1,
            box_subset: vec![bad_cell],
            goal_subset: vec![bad_cell],
            seed: 0,
        };
        assert!(matches!(
            make_subcase(&p, &spec),
            Err(SubcaseError::SubsetNotContained(_, "box"))
        ));
        let wrong_size = SubcaseSpec {
            k: 2,
            box_subset: vec![p.box_cells().next().unwrap()],
            goal_subset: vec![bad_cell, Cell::new(3, 2)],
            seed: 0,
        };
        assert!(matches!(
            make_subcase(&p, &wrong_size),
            Err(SubcaseError::SizeMismatch { k: 2, got: 1 })
        ));
    }

    #[test]
    fn distinct_pair_count_for_fixed_k() {
        // C(4,2)^2 = 36 distinct (box_subset, goal_subset) pairs, found by
        // exhaustive enumeration over many draws.
        let p = parent();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let boxes: Vec<Cell> = p.box_cells().collect();
        let goals: Vec<Cell> = p.layout().goal_cells().collect();
        let mut seen = std::collections::HashSet::new();
        for _ in 0..4000 {
            let b = draw_subset(&boxes, 2, &mut rng);
            let g = draw_subset(&goals, 2, &mut rng);
            seen.insert((b, g));
        }
        assert_eq!(seen.len(), 36);
    }

    #[test]
    fn pool_is_deterministic_and_appends_target() {
        let p = parent();
        let a = sample_pool(&p, 50, 99);
        let b = sample_pool(&p, 50, 99);
        assert_eq!(a.len(), 51);
        assert!(a.last().unwrap().is_target);
        assert!(a.iter().take(50).all(|e| !e.is_target));
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.board, y.board);
            assert_eq!(x.k, y.k);
        }
        // Different seed, different pool.
        let c = sample_pool(&p, 50, 100);
        assert!(a.iter().zip(&c).any(|(x, y)| x.board != y.board));
    }

    #[test]
    fn k_distribution_is_uniform() {
        // Chi-squared test against uniform over k in [1,4] at the 99% level:
        // threshold for 3 degrees of freedom is 11.345.
        let p = parent();
        let pool = sample_pool(&p, 10_000, 1234);
        let mut counts = [0usize; 4];
        for e in pool.iter().filter(|e| !e.is_target) {
            counts[e.k - 1] += 1;
        }
        let expected = 10_000.0 / 4.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 11.345, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn stratified_counts() {
        let p = parent();
        let pool = stratified_pool(&p, 10, 2..=4, 5);
        assert_eq!(pool.len(), 30);
        assert!(pool.iter().filter(|e| e.k == 2).count() == 10);
        assert!(pool.iter().all(|e| {
            e.board.n_boxes() == e.k && e.board.layout().n_goals() == e.k
        }));
    }

    #[test]
    fn manifest_round_trips() {
        let p = parent();
        let pool = sample_pool(&p, 5, 3);
        let dir = tempfile::tempdir().unwrap();
        write_pool_manifest(dir.path(), "parent", &pool).unwrap();
        let index = std::fs::read_to_string(dir.path().join("pool_index.tsv")).unwrap();
        assert_eq!(index.lines().count(), 7); // header + 6 tasks
        let first = Board::parse_xsb(
            &std::fs::read_to_string(dir.path().join("task_00000.xsb")).unwrap(),
        )
        .unwrap();
        assert_eq!(first, pool[0].board);
    }
}
