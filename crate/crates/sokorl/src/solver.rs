//! Exhaustive optimal solver and plan utilities.
//!
//! `bfs_optimal_solve` is the independent oracle used by tests and the
//! `oracle` CLI subcommand: breadth-first over push states, so a returned
//! plan has minimum push count. It is intended for small instances.

use std::collections::HashMap;

use thiserror::Error;

use crate::board::{Board, BoardError, Direction, PushAction, StateKey, DIRECTIONS};

/// Outcome of an exhaustive search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleOutcome {
    /// Minimum-push plan.
    Solved(Vec<PushAction>),
    /// The whole reachable state space was enumerated without a goal.
    ProvenUnsolvable,
    /// Expansion budget hit before the space was exhausted.
    BudgetExceeded,
}

impl OracleOutcome {
    pub fn plan(&self) -> Option<&[PushAction]> {
        match self {
            OracleOutcome::Solved(p) => Some(p),
            _ => None,
        }
    }
}

/// Breadth-first search over push states with region-normalized state
/// identity. Successors that park a box on a statically dead cell are
/// pruned, which is sound for both the plan and the unsolvability proof.
pub fn bfs_optimal_solve(board: &Board, max_states: usize) -> OracleOutcome {
    if board.is_goal() {
        return OracleOutcome::Solved(Vec::new());
    }
    if board.has_static_deadlock() {
        return OracleOutcome::ProvenUnsolvable;
    }

    struct NodeRec {
        board: Board,
        parent: usize,
        action: Option<PushAction>,
    }

    let mut nodes = vec![NodeRec {
        board: board.clone(),
        parent: usize::MAX,
        action: None,
    }];
    let mut seen: HashMap<StateKey, ()> = HashMap::new();
    seen.insert(board.state_key(), ());
    let mut frontier = 0usize;
    let mut expansions = 0usize;

    while frontier < nodes.len() {
        if expansions >= max_states {
            return OracleOutcome::BudgetExceeded;
        }
        let current = frontier;
        frontier += 1;
        expansions += 1;

        let reach = nodes[current].board.player_reachable();
        let pushes = nodes[current].board.legal_pushes_with(&reach);
        for action in pushes {
            let next = nodes[current].board.apply_push_unverified(action);
            if next.is_goal() {
                let mut plan = vec![action];
                let mut at = current;
                while let Some(a) = nodes[at].action {
                    plan.push(a);
                    at = nodes[at].parent;
                }
                plan.reverse();
                return OracleOutcome::Solved(plan);
            }
            if next.has_static_deadlock() {
                continue;
            }
            let key = next.state_key();
            if seen.contains_key(&key) {
                continue;
            }
            seen.insert(key, ());
            nodes.push(NodeRec {
                board: next,
                parent: current,
                action: Some(action),
            });
        }
    }
    OracleOutcome::ProvenUnsolvable
}

/// Replay a push plan with full legality checking; returns the final state.
pub fn replay(start: &Board, plan: &[PushAction]) -> Result<Board, BoardError> {
    let mut board = start.clone();
    for &a in plan {
        board = board.apply_push(a)?;
    }
    Ok(board)
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum PlanError {
    #[error("push {index}: {source}")]
    IllegalStep {
        index: usize,
        #[source]
        source: BoardError,
    },
    #[error("player cannot walk to the pushing square for push {index}")]
    NoWalkPath { index: usize },
    #[error("unknown move letter {0:?}")]
    BadMoveLetter(char),
    #[error("move {index} walks into an occupied or out-of-bounds cell")]
    BlockedMove { index: usize },
}

/// Expand a push plan into full keyboard moves in lurd notation: lowercase
/// letters walk, uppercase letters push. Walk segments are shortest paths
/// (breadth-first, Up/Down/Left/Right tie order).
pub fn plan_to_lurd(start: &Board, plan: &[PushAction]) -> Result<String, PlanError> {
    let mut out = String::new();
    let mut board = start.clone();
    for (index, &action) in plan.iter().enumerate() {
        let layout = board.layout().clone();
        let b = layout.index(action.box_cell);
        let stand = layout
            .step(b, action.dir.opposite())
            .ok_or(PlanError::NoWalkPath { index })?;
        let walk = walk_path(&board, stand).ok_or(PlanError::NoWalkPath { index })?;
        for d in walk {
            out.push(d.letter());
        }
        out.push(action.dir.letter().to_ascii_uppercase());
        board = board
            .apply_push(action)
            .map_err(|source| PlanError::IllegalStep { index, source })?;
    }
    Ok(out)
}

/// Shortest player walk from the current player cell to `target` (a cell
/// index), as a move list. `None` if unreachable.
fn walk_path(board: &Board, target: usize) -> Option<Vec<Direction>> {
    let layout = board.layout();
    let start = layout.index(board.player());
    if start == target {
        return Some(Vec::new());
    }
    let n = layout.n_cells();
    let mut prev: Vec<Option<(usize, Direction)>> = vec![None; n];
    let mut queue = std::collections::VecDeque::new();
    let mut seen = vec![false; n];
    seen[start] = true;
    queue.push_back(start);
    while let Some(x) = queue.pop_front() {
        for dir in DIRECTIONS {
            let Some(y) = layout.step(x, dir) else { continue };
            if seen[y] || layout.is_wall(layout.cell(y)) || board.has_box_index(y) {
                continue;
            }
            seen[y] = true;
            prev[y] = Some((x, dir));
            if y == target {
                let mut path = Vec::new();
                let mut at = y;
                while at != start {
                    let (p, d) = prev[at].unwrap();
                    path.push(d);
                    at = p;
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(y);
        }
    }
    None
}

/// Apply a lurd move string (validating every step) and return the final
/// state. Uppercase letters must push a box; lowercase letters must walk
/// into a free cell.
pub fn apply_lurd(start: &Board, moves: &str) -> Result<Board, PlanError> {
    let mut board = start.clone();
    for (index, ch) in moves.chars().enumerate() {
        if ch.is_whitespace() {
            continue;
        }
        let dir = match ch.to_ascii_lowercase() {
            'l' => Direction::Left,
            'u' => Direction::Up,
            'r' => Direction::Right,
            'd' => Direction::Down,
            other => return Err(PlanError::BadMoveLetter(other)),
        };
        let layout = board.layout().clone();
        let player = layout.index(board.player());
        let next = layout.step(player, dir).ok_or(PlanError::BlockedMove { index })?;
        if ch.is_ascii_uppercase() {
            let action = PushAction {
                box_cell: layout.cell(next),
                dir,
            };
            board = board
                .apply_push(action)
                .map_err(|source| PlanError::IllegalStep { index, source })?;
        } else {
            if layout.is_wall(layout.cell(next)) || board.has_box_index(next) {
                return Err(PlanError::BlockedMove { index });
            }
            // Walking does not change the state key; rebuild via the same
            // layout with the player moved.
            board = move_player(&board, next);
        }
    }
    Ok(board)
}

fn move_player(board: &Board, to: usize) -> Board {
    let layout = board.layout();
    Board::new(
        layout.width(),
        layout.height(),
        (0..layout.n_cells())
            .map(|i| layout.is_wall(layout.cell(i)))
            .collect(),
        layout.goal_cells().collect(),
        board.box_cells().collect(),
        layout.cell(to),
    )
    .expect("moving the player inside a valid board stays valid")
}

/// Count pushes in a lurd string.
pub fn lurd_push_count(moves: &str) -> usize {
    moves.chars().filter(|c| c.is_ascii_uppercase()).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::board::Cell;

    fn board(text: &str) -> Board {
        Board::parse_xsb(text).expect("valid test level")
    }

    /// Test-only second implementation: depth-limited DFS over push states,
    /// returning the minimum plan length within the cap.
    fn dfs_min_plan(board: &Board, cap: usize) -> Option<usize> {
        fn go(b: &Board, depth: usize, cap: usize, best: &mut Option<usize>) {
            if b.is_goal() {
                let d = Some(depth);
                if best.is_none() || d < *best {
                    *best = d;
                }
                return;
            }
            if depth >= cap || best.is_some_and(|x| depth + 1 >= x) {
                return;
            }
            for a in b.legal_pushes() {
                let next = b.apply_push_unverified(a);
                go(&next, depth + 1, cap, best);
            }
        }
        let mut best = None;
        go(board, 0, cap, &mut best);
        best
    }

    #[test]
    fn corridor_two_pushes() {
        let b = board("######\n#@$ .#\n######");
        let outcome = bfs_optimal_solve(&b, 10_000);
        let plan = outcome.plan().expect("solvable");
        assert_eq!(plan.len(), 2);
        assert!(replay(&b, plan).unwrap().is_goal());
    }

    #[test]
    fn already_solved_is_empty_plan() {
        let b = board("####\n#@*#\n####");
        assert_eq!(bfs_optimal_solve(&b, 10).plan().unwrap().len(), 0);
    }

    #[test]
    fn two_box_cross_check_against_dfs() {
        let b = board("######\n#@ $.#\n# $ .#\n######");
        let bfs_len = bfs_optimal_solve(&b, 100_000).plan().expect("solvable").len();
        let dfs_len = dfs_min_plan(&b, 6).expect("solvable within cap");
        assert_eq!(bfs_len, dfs_len);
        assert_eq!(bfs_len, 3);
    }

    #[test]
    fn unsolvable_is_proven() {
        // The box sits on the goal-less top wall line; no push sequence can
        // ever bring it down.
        let b = board("#####\n#@$ #\n#  .#\n#####");
        assert_eq!(bfs_optimal_solve(&b, 100_000), OracleOutcome::ProvenUnsolvable);
    }

    #[test]
    fn tiny_budget_is_distinguished() {
        let b = board("########\n#@ $  .#\n#  $  .#\n########");
        assert_eq!(bfs_optimal_solve(&b, 1), OracleOutcome::BudgetExceeded);
    }

    #[test]
    fn plans_replay_and_lurd_matches() {
        let b = board("######\n#@$ .#\n######");
        let plan = bfs_optimal_solve(&b, 10_000).plan().unwrap().to_vec();
        let lurd = plan_to_lurd(&b, &plan).unwrap();
        assert_eq!(lurd, "RR");
        let end = apply_lurd(&b, &lurd).unwrap();
        assert!(end.is_goal());
        assert_eq!(lurd_push_count(&lurd), plan.len());
    }

    #[test]
    fn lurd_includes_walk_segments() {
        // Pushing left needs the player on the box's right, reached by
        // walking around through the bottom row.
        let b = board("######\n#@$ .#\n#    #\n######");
        let left = PushAction {
            box_cell: Cell::new(1, 2),
            dir: Direction::Left,
        };
        let lurd = plan_to_lurd(&b, &[left]).unwrap();
        assert_eq!(lurd, "drruL");
        let end = apply_lurd(&b, &lurd).unwrap();
        assert_eq!(end.player(), Cell::new(1, 2));
        assert_eq!(end.box_cells().next(), Some(Cell::new(1, 1)));
    }

    #[test]
    fn apply_lurd_rejects_bad_input() {
        let b = board("######\n#@$ .#\n######");
        assert!(matches!(apply_lurd(&b, "x"), Err(PlanError::BadMoveLetter('x'))));
        // Walking into the box lowercase is illegal; it must be a push.
        assert!(matches!(apply_lurd(&b, "r"), Err(PlanError::BlockedMove { .. })));
        // Pushing thin air is illegal.
        assert!(matches!(apply_lurd(&b, "U"), Err(PlanError::IllegalStep { .. })));
    }
}
